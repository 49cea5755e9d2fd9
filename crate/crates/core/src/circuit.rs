//! Closed-form quantities of the saw-tooth circuit.
//!
//! Each cell is reduced to its symmetric phase `φ`; the antisymmetric mode is
//! frozen. Energies are dimensionless in units of `E_C` (potentials in units of
//! `E_J` where noted) and `ħ = 1`, so frequencies are in units of `E_C/ħ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frustration boundary: a cell has a double well only for `alpha < ALPHA_CRITICAL`.
pub const ALPHA_CRITICAL: f64 = -0.5;

/// Physical inputs of a saw-tooth array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Josephson energy of the π-junction in units of `E_J`, in `(-1, 0)`.
    pub alpha: f64,
    /// Capacitance ratio `C0 / C` of transmission line to junction.
    pub gamma: f64,
    /// `E_J / E_C`.
    pub ej_over_ec: f64,
    /// Number of triangular cells.
    pub n_cells: usize,
}

impl CircuitParams {
    pub fn new(alpha: f64, gamma: f64, ej_over_ec: f64, n_cells: usize) -> Result<Self> {
        let p = CircuitParams {
            alpha,
            gamma,
            ej_over_ec,
            n_cells,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > -1.0 && self.alpha < 0.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (-1, 0), got {}",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::domain(format!(
                "gamma = C0/C must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.ej_over_ec > 0.0) || !self.ej_over_ec.is_finite() {
            return Err(Error::domain(format!(
                "E_J/E_C must be finite and > 0, got {}",
                self.ej_over_ec
            )));
        }
        if self.n_cells == 0 {
            return Err(Error::invalid("the array needs at least one cell"));
        }
        Ok(())
    }

    /// `|α|`.
    pub fn abs_alpha(&self) -> f64 {
        self.alpha.abs()
    }

    /// True inside the frustrated regime `α < -1/2`.
    pub fn is_frustrated(&self) -> bool {
        self.alpha < ALPHA_CRITICAL
    }

    /// Frustration parameter `f` with `α = 1 - 2f`.
    pub fn frustration(&self) -> f64 {
        (1.0 - self.alpha) / 2.0
    }

    /// `1 + 2|α|`, the junction part of the effective capacitance.
    pub(crate) fn junction_weight(&self) -> f64 {
        1.0 + 2.0 * self.abs_alpha()
    }

    /// Curvature factor `|4α + 1/|α||` of the potential at its minima.
    pub(crate) fn curvature(&self) -> f64 {
        (4.0 * self.alpha + 1.0 / self.abs_alpha()).abs()
    }

    pub(crate) fn require_double_well(&self) -> Result<()> {
        if self.alpha > ALPHA_CRITICAL {
            return Err(Error::domain(format!(
                "alpha = {} is outside the frustrated regime (-1, -0.5]; the cell has no double well",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Single-cell quantities around the double-well minima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleCellDerived {
    /// Minimum position `u0` in radians.
    pub u0: f64,
    /// Barrier `U(0) - U(u0)` in units of `E_J`.
    pub barrier: f64,
    /// Small-oscillation frequency `ħΩ / E_C`.
    pub omega: f64,
    /// Effective mass in units of `ħ² / E_C`.
    pub m_eff: f64,
}

/// Real-space momentum kernel of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionKernel {
    pub gamma_d: f64,
    pub gamma_o: f64,
    /// Interaction length in cells; `None` when `γ = 0` (no inter-cell coupling).
    pub ell0: Option<f64>,
    /// Grid size used for the numerical inverse-transform check.
    pub ift_grid: usize,
    /// Largest deviation between the numerical inverse transform of `Γ(k)` and
    /// the closed-form decomposition on that grid.
    pub ift_max_deviation: f64,
}

impl InteractionKernel {
    /// Closed-form real-space kernel at separation `d`.
    pub fn real_space(&self, d: usize) -> f64 {
        if d == 0 {
            return self.gamma_d;
        }
        match self.ell0 {
            Some(l) => -self.gamma_o * (-(d as f64) / l).exp(),
            None => 0.0,
        }
    }

    pub fn has_interaction(&self) -> bool {
        self.ell0.is_some()
    }
}

/// Reduced potential of one cell, `2 + α - 2cos φ - α cos 2φ`, in units of `E_J`.
pub fn cell_potential(phi: f64, alpha: f64) -> f64 {
    2.0 + alpha - 2.0 * phi.cos() - alpha * (2.0 * phi).cos()
}

/// `dU/dφ` of the reduced cell potential.
pub fn cell_potential_derivative(phi: f64, alpha: f64) -> f64 {
    2.0 * phi.sin() + 2.0 * alpha * (2.0 * phi).sin()
}

/// Reduced potential energy of the chain, one symmetric phase per cell, in units of `E_J`.
pub fn potential_energy(phi: &[f64], params: &CircuitParams) -> f64 {
    phi.iter().map(|&p| cell_potential(p, params.alpha)).sum()
}

/// Full two-phase potential energy in units of `E_J`.
///
/// `chi0` holds the `N + 1` base-node phases, `chi_plus` the `N` apex phases.
pub fn full_potential_energy(chi0: &[f64], chi_plus: &[f64], alpha: f64) -> Result<f64> {
    check_two_phase_lengths(chi0, chi_plus)?;
    let mut u = 0.0;
    for (n, &cp) in chi_plus.iter().enumerate() {
        u += 2.0 + alpha
            - (cp - chi0[n]).cos()
            - (chi0[n + 1] - cp).cos()
            - alpha * (chi0[n] - chi0[n + 1]).cos();
    }
    Ok(u)
}

/// Full two-phase kinetic energy in units of `E_C` (phase rates in `E_C/ħ`).
pub fn full_kinetic_energy(
    chi0_dot: &[f64],
    chi_plus_dot: &[f64],
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    check_two_phase_lengths(chi0_dot, chi_plus_dot)?;
    let mut junctions = 0.0;
    for (n, &cp) in chi_plus_dot.iter().enumerate() {
        let a = cp - chi0_dot[n];
        let b = chi0_dot[n + 1] - cp;
        let c = chi0_dot[n] - chi0_dot[n + 1];
        junctions += a * a + b * b + alpha.abs() * c * c;
    }
    let ground: f64 = chi0_dot.iter().map(|x| x * x).sum();
    Ok((junctions + gamma * ground) / 16.0)
}

fn check_two_phase_lengths(chi0: &[f64], chi_plus: &[f64]) -> Result<()> {
    if chi0.len() != chi_plus.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: chi_plus.len() + 1,
            actual: chi0.len(),
        });
    }
    Ok(())
}

/// Coefficient of `φ̇²` in the reduced single-cell Lagrangian, units of `ħ²/E_C`.
pub fn reduced_kinetic_coefficient(params: &CircuitParams) -> f64 {
    (params.gamma + params.junction_weight()) / 8.0
}

/// Minimum position, barrier, frequency and mass of a single cell.
///
/// `α = -1/2` is accepted as the boundary case with `u0 = 0`.
pub fn single_cell_derived(params: &CircuitParams) -> Result<SingleCellDerived> {
    params.validate()?;
    params.require_double_well()?;
    let a = params.abs_alpha();
    let u0 = (1.0 / (2.0 * a)).min(1.0).acos();
    let barrier = -(2.0 * (1.0 + params.alpha) + 1.0 / (2.0 * params.alpha));
    let weight = params.gamma + params.junction_weight();
    let omega = 2.0 * (params.ej_over_ec * params.curvature() / weight).sqrt();
    let m_eff = weight / 4.0;
    Ok(SingleCellDerived {
        u0,
        barrier: barrier.max(0.0),
        omega,
        m_eff,
    })
}

/// Non-local kinetic factor `Γ(k) = sin²(k/2) / (γ/2 + (1+2|α|) sin²(k/2))`.
pub fn gamma_of_k(k: f64, params: &CircuitParams) -> f64 {
    let s2 = (k / 2.0).sin().powi(2);
    let w = params.junction_weight();
    let den = params.gamma / 2.0 + w * s2;
    if den == 0.0 {
        // γ = 0 and k = 0: the k-independent decoupled value
        return 1.0 / w;
    }
    s2 / den
}

/// `Γ_d`, `Γ_o` and `ℓ0`, plus a numerical inverse-transform check on an
/// `n_cells`-point periodic grid.
pub fn interaction_kernel(params: &CircuitParams) -> Result<InteractionKernel> {
    params.validate()?;
    let a = params.abs_alpha();
    let w = params.junction_weight();
    let g = params.gamma;
    let (gamma_o, ell0) = if g == 0.0 {
        (0.0, None)
    } else {
        let root = (g * (4.0 * a + g + 2.0)).sqrt();
        let gamma_o = g / (w * root);
        let ratio = (w + g - root) / w;
        (gamma_o, Some(1.0 / ratio.ln().abs()))
    };
    let mut kernel = InteractionKernel {
        gamma_d: 1.0 / w - gamma_o,
        gamma_o,
        ell0,
        ift_grid: params.n_cells,
        ift_max_deviation: 0.0,
    };
    kernel.ift_max_deviation = kernel_ift_deviation(params, &kernel, params.n_cells);
    Ok(kernel)
}

/// Max deviation between `(1/N) Σ_m Γ(2πm/N) cos(2πmd/N)` and the closed-form
/// kernel for `d = 0..=N/2`.
pub fn kernel_ift_deviation(params: &CircuitParams, kernel: &InteractionKernel, n: usize) -> f64 {
    let n = n.max(1);
    let nf = n as f64;
    let table: Vec<f64> = (0..n)
        .map(|m| gamma_of_k(2.0 * std::f64::consts::PI * m as f64 / nf, params))
        .collect();
    (0..=n / 2)
        .map(|d| {
            let numeric: f64 = table
                .iter()
                .enumerate()
                .map(|(m, &gk)| gk * (2.0 * std::f64::consts::PI * (m * d) as f64 / nf).cos())
                .sum::<f64>()
                / nf;
            let closed = if kernel.has_interaction() || d == 0 {
                kernel.real_space(d)
            } else {
                0.0
            };
            (numeric - closed).abs()
        })
        .fold(0.0, f64::max)
}
