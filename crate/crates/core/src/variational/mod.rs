//! Gaussian variational mapping of the circuit onto a spin chain.
//!
//! The harmonic `k`-space problem gives the Gaussian widths `ζ_k`; their
//! real-space transform `A(d)` sets every spin-flip amplitude through overlap
//! factors of the form `exp(-c·u0²·A)`.
//!
//! Grid convention: `k_j = π(j - 1/2)/N`, `j = 1..=N`, and
//! `A(d) = (2/N) Σ_j ζ(k_j) cos(k_j d)`. The half-shifted grid avoids the
//! divergent zero mode and makes the decoupled (`γ = 0`) transform exactly
//! diagonal with `A(0) = m_eff Ω / ħ`.

mod higher_order;

pub use higher_order::{
    appendix_ordering, appendix_table, cluster_configurations, higher_order_amplitude, AppendixRow,
    FlipCluster, HigherOrderAmplitude, OrderingReport, Parity, MAX_CLUSTER_DISTANCE,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circuit::{interaction_kernel, single_cell_derived, CircuitParams};
use crate::error::{Error, Result};
use crate::stats::{compensated_sum, fit_line};

/// Exponents below this are reported as an underflowed (zero) amplitude.
pub const EXPONENT_FLOOR: f64 = -700.0;

/// Pre-exponential factors in units of `ħΩ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefactorPolicy {
    pub delta0: f64,
    pub j0: f64,
}

impl Default for PrefactorPolicy {
    fn default() -> Self {
        PrefactorPolicy {
            delta0: 1.0,
            j0: 1.0,
        }
    }
}

impl PrefactorPolicy {
    fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.j0 > 0.0) || !self.delta0.is_finite() || !self.j0.is_finite()
        {
            return Err(Error::invalid("prefactors must be finite and positive"));
        }
        Ok(())
    }
}

/// Output of the harmonic variational problem for one circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationalSolution {
    pub params: CircuitParams,
    /// `D = sqrt((E_J/E_C)(4|α| - 1/|α|))`.
    pub d_coeff: f64,
    pub u0: f64,
    /// `ħΩ / E_C` of a single cell.
    pub hbar_omega: f64,
    /// `m_eff` in units of `ħ²/E_C`.
    pub m_eff: f64,
    pub ell0: Option<f64>,
    pub k_grid: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `A(d)` for `d = 0..N`.
    pub a_matrix: Vec<f64>,
}

impl VariationalSolution {
    pub fn n_cells(&self) -> usize {
        self.params.n_cells
    }

    pub fn a(&self, d: usize) -> f64 {
        self.a_matrix[d]
    }

    pub fn u0_sq(&self) -> f64 {
        self.u0 * self.u0
    }

    pub fn has_interaction(&self) -> bool {
        self.params.gamma > 0.0
    }

    /// `ln(J(d)/J0) = -4u0²[A(0) - A(d)]`.
    pub fn log_exchange(&self, d: usize) -> f64 {
        -4.0 * self.u0_sq() * (self.a(0) - self.a(d))
    }

    /// `ln(Δ/Δ0) = -2u0² A(0)`.
    pub fn log_tunneling(&self) -> f64 {
        -2.0 * self.u0_sq() * self.a(0)
    }
}

/// Half-shifted open-chain grid `k_j = π(j - 1/2)/N`.
pub fn k_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|j| PI * (j as f64 - 0.5) / n as f64).collect()
}

/// `ζ(k) = (D/4) sqrt(γ/2 + (2|α|+1) sin²(k/2)) / |sin(k/2)|`.
pub fn zeta_of_k(k: f64, d_coeff: f64, params: &CircuitParams) -> f64 {
    let s = (k / 2.0).sin().abs();
    d_coeff / 4.0 * (params.gamma / 2.0 + params.junction_weight() * s * s).sqrt() / s
}

/// Solves the harmonic variational problem: `ζ_k` on the grid and the
/// distance-indexed matrix `A(d)`.
pub fn solve_variational(params: &CircuitParams) -> Result<VariationalSolution> {
    params.validate()?;
    if params.n_cells < 2 {
        return Err(Error::invalid(format!(
            "the variational chain needs at least 2 cells, got {}",
            params.n_cells
        )));
    }
    let cell = single_cell_derived(params)?;
    let kernel = interaction_kernel(params)?;
    let d_coeff = (params.ej_over_ec * params.curvature()).sqrt();
    let n = params.n_cells;
    let k = k_grid(n);
    let zeta: Vec<f64> = k.iter().map(|&kj| zeta_of_k(kj, d_coeff, params)).collect();
    let norm = 2.0 / n as f64;
    // each d is an independent fixed-order sum, so partitioning cannot change results
    let a_matrix: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|d| {
            norm * compensated_sum(
                k.iter()
                    .zip(&zeta)
                    .map(|(&kj, &z)| z * (kj * d as f64).cos()),
            )
        })
        .collect();
    Ok(VariationalSolution {
        params: *params,
        d_coeff,
        u0: cell.u0,
        hbar_omega: cell.omega,
        m_eff: cell.m_eff,
        ell0: kernel.ell0,
        k_grid: k,
        zeta,
        a_matrix,
    })
}

/// Tunneling amplitude `Δ = Δ0 exp(-2u0² A(0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tunneling {
    /// `ln(Δ/Δ0)`.
    pub log_ratio: f64,
    /// `Δ` in units of `ħΩ`; zero if the exponent fell below the floor.
    pub delta: f64,
    pub underflow: bool,
}

pub fn tunneling_amplitude(
    sol: &VariationalSolution,
    policy: &PrefactorPolicy,
) -> Result<Tunneling> {
    policy.validate()?;
    let log_ratio = sol.log_tunneling();
    let underflow = log_ratio < EXPONENT_FLOOR;
    Ok(Tunneling {
        log_ratio,
        delta: if underflow {
            0.0
        } else {
            policy.delta0 * log_ratio.exp()
        },
        underflow,
    })
}

/// Quasiclassical single-cell tunneling amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkbAmplitude {
    /// `ln(2πΔ/ħΩ)`.
    pub exponent: f64,
    /// `Δ` in units of `ħΩ`, with prefactor `1/2π`.
    pub delta: f64,
}

pub fn wkb_amplitude(params: &CircuitParams) -> Result<WkbAmplitude> {
    let cell = single_cell_derived(params)?;
    let two_a = 2.0 * params.abs_alpha();
    let action =
        (two_a - 1.0 / two_a).max(0.0).sqrt() - (1.0 / two_a).min(1.0).acos() / two_a.sqrt();
    let exponent = -2.0 * (2.0 * cell.m_eff * params.ej_over_ec).sqrt() * action;
    Ok(WkbAmplitude {
        exponent,
        delta: exponent.exp() / (2.0 * PI),
    })
}

/// Variational single-cell log-amplitude `-2u0² A_sb` with the isolated-cell
/// width `A_sb = m_eff Ω / (2ħ)`.
///
/// The chain transform uses `A(0) = m_eff Ω / ħ` in the decoupled limit, so
/// the chain exponent at `γ = 0` is twice this value.
pub fn single_block_exponent(params: &CircuitParams) -> Result<f64> {
    let cell = single_cell_derived(params)?;
    let a_sb = cell.m_eff * cell.omega / 2.0;
    Ok(-2.0 * cell.u0 * cell.u0 * a_sb)
}

/// Conditions attached to a mapped spin model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFlag {
    /// `γ = 0`: no exchange coupling, the cells are independent.
    NoInteraction,
    /// Fewer than three distances in `(ℓ0, N/4)`; no power-law fit.
    FitWindowEmpty,
    /// `Δ` underflowed the exponent floor.
    DeltaUnderflow,
    /// `J(1)` underflowed the exponent floor.
    ExchangeUnderflow,
}

/// Effective spin-chain parameters derived from a circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinModelParams {
    pub alpha: f64,
    pub gamma: f64,
    pub ej_over_ec: f64,
    pub n_cells: usize,
    pub u0: f64,
    /// `ħΩ / E_C`.
    pub hbar_omega: f64,
    pub delta0: f64,
    pub j0: f64,
    /// `Δ` in units of `ħΩ`.
    pub delta: f64,
    /// `ln(Δ/Δ0)`.
    pub log_delta: f64,
    /// `J(1)` in units of `ħΩ`; zero without interaction.
    pub j1: f64,
    /// `ln(J(1)/J0)`; absent without interaction.
    pub log_j1: Option<f64>,
    /// `J(d)/J(1)` for `d = 1..N`; empty without interaction.
    pub j_table: Vec<f64>,
    /// `Δ/J(1)`.
    pub delta_tilde: Option<f64>,
    pub beta_fit: Option<f64>,
    pub beta_fit_r2: Option<f64>,
    /// Inclusive distance range used for the fit.
    pub fit_window: Option<(usize, usize)>,
    /// `D u0² sqrt(γ/2)`.
    pub beta_analytic: f64,
    pub ell0: Option<f64>,
    pub flags: Vec<ModelFlag>,
}

impl SpinModelParams {
    pub fn has_flag(&self, flag: ModelFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Distances strictly inside `(ℓ0, N/4)`.
pub fn fit_window(ell0: f64, n: usize) -> Option<(usize, usize)> {
    let lo = ell0.floor() as usize + 1;
    let upper = n as f64 / 4.0;
    let hi = if upper.fract() == 0.0 {
        upper as usize - 1
    } else {
        upper.floor() as usize
    };
    let lo = lo.max(1);
    (hi >= lo + 2).then_some((lo, hi))
}

/// Exchange table, `Δ̃ = Δ/J(1)` and the power-law exponent.
pub fn exchange_couplings(
    sol: &VariationalSolution,
    policy: &PrefactorPolicy,
) -> Result<SpinModelParams> {
    let tunneling = tunneling_amplitude(sol, policy)?;
    let p = &sol.params;
    let n = sol.n_cells();
    let mut flags = Vec::new();
    if tunneling.underflow {
        flags.push(ModelFlag::DeltaUnderflow);
    }
    let beta_analytic = sol.d_coeff * sol.u0_sq() * (p.gamma / 2.0).sqrt();

    let mut model = SpinModelParams {
        alpha: p.alpha,
        gamma: p.gamma,
        ej_over_ec: p.ej_over_ec,
        n_cells: n,
        u0: sol.u0,
        hbar_omega: sol.hbar_omega,
        delta0: policy.delta0,
        j0: policy.j0,
        delta: tunneling.delta,
        log_delta: tunneling.log_ratio,
        j1: 0.0,
        log_j1: None,
        j_table: Vec::new(),
        delta_tilde: None,
        beta_fit: None,
        beta_fit_r2: None,
        fit_window: None,
        beta_analytic,
        ell0: sol.ell0,
        flags,
    };

    if !sol.has_interaction() {
        model.flags.push(ModelFlag::NoInteraction);
        return Ok(model);
    }

    let log_j1 = sol.log_exchange(1);
    model.log_j1 = Some(log_j1);
    if log_j1 < EXPONENT_FLOOR {
        model.flags.push(ModelFlag::ExchangeUnderflow);
    } else {
        model.j1 = policy.j0 * log_j1.exp();
    }
    // ratios in log space so that Δ̃ survives even when Δ and J(1) underflow
    model.j_table = (1..n)
        .map(|d| (sol.log_exchange(d) - log_j1).exp())
        .collect();
    model.delta_tilde =
        Some(((policy.delta0 / policy.j0).ln() + tunneling.log_ratio - log_j1).exp());

    let window = sol.ell0.and_then(|l| fit_window(l, n));
    match window {
        Some((lo, hi)) => {
            let x: Vec<f64> = (lo..=hi).map(|d| (d as f64).ln()).collect();
            let y: Vec<f64> = (lo..=hi).map(|d| sol.log_exchange(d) - log_j1).collect();
            let fit = fit_line(&x, &y).expect("window holds at least three distances");
            model.beta_fit = Some(-fit.slope);
            model.beta_fit_r2 = Some(fit.r2);
            model.fit_window = Some((lo, hi));
        }
        None => model.flags.push(ModelFlag::FitWindowEmpty),
    }
    Ok(model)
}

/// Runs the whole mapping for one circuit.
pub fn map_circuit(params: &CircuitParams, policy: &PrefactorPolicy) -> Result<SpinModelParams> {
    let sol = solve_variational(params)?;
    exchange_couplings(&sol, policy)
}
