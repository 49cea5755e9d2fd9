//! Ground-state diagnostics: gap, transverse magnetization, spin correlators,
//! structure factor and correlation length.

mod fss;

pub use fss::{
    fss_crossings, FssCurve, FssReport, FssStatus, PairCrossing, COMMON_CROSSING_DISPERSION,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spinchain::{ChainSpec, EigenResult};

/// `e1 - e0`, zero when the pair is within the degeneracy tolerance.
pub fn gap(eig: &EigenResult, degeneracy_tol: f64) -> f64 {
    let g = eig.e1 - eig.e0;
    if eig.degenerate || g <= degeneracy_tol * eig.e0.abs().max(1.0) {
        0.0
    } else {
        g
    }
}

fn n_sites_of(v: &[f64]) -> Result<usize> {
    if v.is_empty() || !v.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "state length {} is not a power of two",
            v.len()
        )));
    }
    Ok(v.len().trailing_zeros() as usize)
}

/// `(1/N) Σ_i ⟨σx_i⟩`.
pub fn magnetization_x(v: &[f64]) -> Result<f64> {
    let n = n_sites_of(v)?;
    let total: f64 = (0..n)
        .map(|i| {
            let bit = 1 << i;
            v.iter()
                .enumerate()
                .map(|(s, &x)| x * v[s ^ bit])
                .sum::<f64>()
        })
        .sum();
    Ok(total / n as f64)
}

/// `⟨σx_i σx_j⟩` on zero-based sites.
pub fn sigma_xx(v: &[f64], i: usize, j: usize) -> f64 {
    let mask = (1 << i) | (1 << j);
    v.iter().enumerate().map(|(s, &x)| x * v[s ^ mask]).sum()
}

/// `⟨σy_i σy_j⟩` on zero-based sites; real for real states.
pub fn sigma_yy(v: &[f64], i: usize, j: usize) -> f64 {
    let mask = (1 << i) | (1 << j);
    v.iter()
        .enumerate()
        .map(|(s, &x)| {
            let anti = ((s >> i) ^ (s >> j)) & 1 == 1;
            let sign = if anti { 1.0 } else { -1.0 };
            sign * x * v[s ^ mask]
        })
        .sum()
}

/// Zero-based sites of the most centred pair at separation `d`.
pub fn centered_pair(n_sites: usize, d: usize) -> Result<(usize, usize)> {
    if d == 0 || d >= n_sites {
        return Err(Error::invalid(format!(
            "separation {d} outside 1..={} for {n_sites} sites",
            n_sites.saturating_sub(1)
        )));
    }
    let first = (n_sites - d).div_ceil(2);
    let i = first.max(1) - 1;
    Ok((i, i + d))
}

pub fn correlator_y(v: &[f64], d: usize) -> Result<f64> {
    let (i, j) = centered_pair(n_sites_of(v)?, d)?;
    Ok(sigma_yy(v, i, j))
}

/// Connected `⟨σx_i σx_j⟩ - M_x²`.
pub fn correlator_x(v: &[f64], d: usize) -> Result<f64> {
    let (i, j) = centered_pair(n_sites_of(v)?, d)?;
    let mx = magnetization_x(v)?;
    Ok(sigma_xx(v, i, j) - mx * mx)
}

/// `S(q) = Σ_j |C(j)| cos(q j)` over the supplied table.
pub fn structure_factor(c: &[f64], q: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(j, &x)| x.abs() * (q * j as f64).cos())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiFlag {
    /// `S(q1) ≤ 0`.
    NonPositiveStructureFactor,
    /// `S(0) < S(q1)`.
    InvertedStructureFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationLength {
    pub xi: f64,
    pub s0: f64,
    pub s1: f64,
    pub flag: Option<XiFlag>,
}

/// `ξ = (1/q1) sqrt(S(0)/S(q1) - 1)` with `q1 = 2π/N`; `c` holds `C(0..N)`.
pub fn correlation_length(c: &[f64], n_sites: usize) -> Result<CorrelationLength> {
    if n_sites == 0 || c.is_empty() {
        return Err(Error::invalid(
            "correlation table and chain length must be nonempty",
        ));
    }
    let q1 = 2.0 * PI / n_sites as f64;
    let s0 = structure_factor(c, 0.0);
    let s1 = structure_factor(c, q1);
    let flag = if s1 <= 0.0 {
        Some(XiFlag::NonPositiveStructureFactor)
    } else if s0 < s1 {
        Some(XiFlag::InvertedStructureFactor)
    } else {
        None
    };
    let xi = match flag {
        Some(_) => 0.0,
        None => (s0 / s1 - 1.0).max(0.0).sqrt() / q1,
    };
    Ok(CorrelationLength { xi, s0, s1, flag })
}

/// All diagnostics of one diagonalized chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub n_sites: usize,
    pub delta_tilde: f64,
    pub beta: Option<f64>,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    pub degenerate: bool,
    pub mx: f64,
    pub mx_abs: f64,
    /// `C_y(d)` for `d = 0..N`, with `C_y(0) = 1`.
    pub cy: Vec<f64>,
    /// `C_x(d)` for `d = 0..N`, with `C_x(0) = 1 - M_x²`.
    pub cx: Vec<f64>,
    /// `(q_m, S(q_m))` on `q_m = 2πm/N`, `m = 0..N`.
    pub s_of_q: Vec<(f64, f64)>,
    pub xi: f64,
    pub xi_over_n: f64,
    pub xi_flag: Option<XiFlag>,
    pub cy_half: Option<f64>,
    pub cx_half: Option<f64>,
}

/// Separation used for the half-chain summaries: `N/2 - 1`, at least 1.
pub fn half_separation(n_sites: usize) -> Option<usize> {
    (n_sites >= 2).then(|| (n_sites / 2).saturating_sub(1).max(1))
}

impl ObservableSet {
    pub fn from_eigen(spec: &ChainSpec, eig: &EigenResult, degeneracy_tol: f64) -> Result<Self> {
        let n = spec.n_sites;
        let v = &eig.v0;
        if v.len() != spec.dimension() {
            return Err(Error::DimensionMismatch {
                expected: spec.dimension(),
                actual: v.len(),
            });
        }
        let mx = magnetization_x(v)?;
        let mut cy = vec![1.0];
        let mut cx = vec![1.0 - mx * mx];
        for d in 1..n {
            let (i, j) = centered_pair(n, d)?;
            cy.push(sigma_yy(v, i, j));
            cx.push(sigma_xx(v, i, j) - mx * mx);
        }
        let s_of_q = (0..n)
            .map(|m| {
                let q = 2.0 * PI * m as f64 / n as f64;
                (q, structure_factor(&cy, q))
            })
            .collect();
        let xi = correlation_length(&cy, n)?;
        let half = half_separation(n);
        Ok(ObservableSet {
            n_sites: n,
            delta_tilde: spec.delta_tilde,
            beta: spec.coupling.beta(),
            e0: eig.e0,
            e1: eig.e1,
            gap: gap(eig, degeneracy_tol),
            degenerate: eig.degenerate,
            mx,
            mx_abs: mx.abs(),
            cy_half: half.map(|d| cy[d]),
            cx_half: half.map(|d| cx[d]),
            cy,
            cx,
            s_of_q,
            xi: xi.xi,
            xi_over_n: xi.xi / n as f64,
            xi_flag: xi.flag,
        })
    }
}
