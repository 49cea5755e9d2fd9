//! Crossings of `ξ/N` curves for consecutive chain lengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Crossings spread over at most this many units of `Δ̃` count as one point.
pub const COMMON_CROSSING_DISPERSION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssCurve {
    pub n_sites: usize,
    pub delta_tilde: Vec<f64>,
    pub xi_over_n: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub n_small: usize,
    pub n_large: usize,
    /// Field of the last crossing beyond which the shorter chain lies above.
    pub crossing: Option<f64>,
    /// Number of sign changes of the difference on the grid.
    pub sign_changes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FssStatus {
    CommonCrossing,
    NoCommonCrossing,
    /// Two curves coincide on the whole grid.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssReport {
    pub pairs: Vec<PairCrossing>,
    pub center: Option<f64>,
    /// `max - min` of the crossings that exist.
    pub dispersion: Option<f64>,
    pub status: FssStatus,
}

fn validate(curves: &[FssCurve]) -> Result<()> {
    if curves.len() < 2 {
        return Err(Error::invalid(
            "finite-size scaling needs at least two chain lengths",
        ));
    }
    let grid = &curves[0].delta_tilde;
    if grid.len() < 2 {
        return Err(Error::invalid("the field grid needs at least two points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("the field grid must be strictly increasing"));
    }
    for c in curves {
        if c.delta_tilde != *grid {
            return Err(Error::invalid(format!(
                "curve for N = {} is not on the common grid",
                c.n_sites
            )));
        }
        if c.xi_over_n.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: c.xi_over_n.len(),
            });
        }
    }
    Ok(())
}

fn pair_crossing(small: &FssCurve, large: &FssCurve) -> (PairCrossing, bool) {
    let x = &small.delta_tilde;
    let diff: Vec<f64> = small
        .xi_over_n
        .iter()
        .zip(&large.xi_over_n)
        .map(|(a, b)| a - b)
        .collect();
    let identical = diff.iter().all(|&d| d == 0.0);
    let mut crossing = None;
    let mut sign_changes = 0;
    for k in 0..diff.len() - 1 {
        let (a, b) = (diff[k], diff[k + 1]);
        if (a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0) {
            sign_changes += 1;
        }
        if a <= 0.0 && b > 0.0 {
            crossing = Some(x[k] + (x[k + 1] - x[k]) * (-a) / (b - a));
        }
    }
    (
        PairCrossing {
            n_small: small.n_sites,
            n_large: large.n_sites,
            crossing: if identical { None } else { crossing },
            sign_changes,
        },
        identical,
    )
}

/// Linear-interpolation crossings for each adjacent pair of lengths.
pub fn fss_crossings(curves: &[FssCurve]) -> Result<FssReport> {
    validate(curves)?;
    let mut sorted: Vec<&FssCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.n_sites);
    if sorted.windows(2).any(|w| w[0].n_sites == w[1].n_sites) {
        return Err(Error::invalid("chain lengths must be distinct"));
    }
    let mut degenerate = false;
    let pairs: Vec<PairCrossing> = sorted
        .windows(2)
        .map(|w| {
            let (p, identical) = pair_crossing(w[0], w[1]);
            degenerate |= identical;
            p
        })
        .collect();
    let found: Vec<f64> = pairs.iter().filter_map(|p| p.crossing).collect();
    let (center, dispersion) = if found.is_empty() {
        (None, None)
    } else {
        let lo = found.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = found.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (
            Some(found.iter().sum::<f64>() / found.len() as f64),
            Some(hi - lo),
        )
    };
    let status = if degenerate {
        FssStatus::Degenerate
    } else if found.len() == pairs.len()
        && dispersion.is_some_and(|d| d <= COMMON_CROSSING_DISPERSION)
    {
        FssStatus::CommonCrossing
    } else {
        FssStatus::NoCommonCrossing
    };
    Ok(FssReport {
        pairs,
        center,
        dispersion,
        status,
    })
}
