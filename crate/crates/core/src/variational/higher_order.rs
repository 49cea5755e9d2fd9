//! Multi-cell spin-flip amplitudes.
//!
//! A cluster of `n` contiguous cells flips simultaneously. Each modeled pair
//! (distance 1 or 2) carries a parity: odd when the two cells flip in opposite
//! directions, even when they flip the same way.

use serde::{Deserialize, Serialize};

use super::{PrefactorPolicy, VariationalSolution};
use crate::error::{Error, Result};

/// Longest pair distance kept inside a cluster.
pub const MAX_CLUSTER_DISTANCE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }

    fn from_product(a: i8, b: i8) -> Self {
        if a * b < 0 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    fn letter(self) -> char {
        match self {
            Parity::Odd => 'o',
            Parity::Even => 'e',
        }
    }
}

/// Pair structure of a flip cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipCluster {
    pub order: usize,
    pub parities: Vec<Parity>,
    pub distances: Vec<usize>,
}

impl FlipCluster {
    /// A single pair at distance `d`.
    pub fn pair(parity: Parity, d: usize) -> Self {
        FlipCluster {
            order: 2,
            parities: vec![parity],
            distances: vec![d],
        }
    }

    /// Builds the pair list of a contiguous cluster from its flip directions.
    pub fn from_directions(directions: &[i8]) -> Result<Self> {
        if directions.is_empty() || directions.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid(
                "flip directions must be a nonempty list of ±1",
            ));
        }
        let n = directions.len();
        let mut parities = Vec::new();
        let mut distances = Vec::new();
        for d in 1..=MAX_CLUSTER_DISTANCE {
            for i in 0..n.saturating_sub(d) {
                parities.push(Parity::from_product(directions[i], directions[i + d]));
                distances.push(d);
            }
        }
        Ok(FlipCluster {
            order: n,
            parities,
            distances,
        })
    }

    pub fn odd_count(&self) -> usize {
        self.parities.iter().filter(|&&p| p == Parity::Odd).count()
    }

    fn validate(&self, n_cells: usize) -> Result<()> {
        if self.order == 0 {
            return Err(Error::invalid("cluster order must be at least 1"));
        }
        if self.order > n_cells {
            return Err(Error::invalid(format!(
                "cluster of {} cells does not fit a chain of {n_cells}",
                self.order
            )));
        }
        if self.parities.len() != self.distances.len() {
            return Err(Error::DimensionMismatch {
                expected: self.distances.len(),
                actual: self.parities.len(),
            });
        }
        if let Some(&d) = self
            .distances
            .iter()
            .find(|&&d| d == 0 || d > MAX_CLUSTER_DISTANCE)
        {
            return Err(Error::invalid(format!(
                "pair distance {d} is outside the modeled cluster range 1..={MAX_CLUSTER_DISTANCE}"
            )));
        }
        let expected = if self.order == 2 {
            1
        } else {
            (1..=MAX_CLUSTER_DISTANCE)
                .map(|d| self.order.saturating_sub(d))
                .sum()
        };
        if self.parities.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.parities.len(),
            });
        }
        if self.order > 2 {
            for d in 1..=MAX_CLUSTER_DISTANCE {
                let count = self.distances.iter().filter(|&&x| x == d).count();
                if count != self.order.saturating_sub(d) {
                    return Err(Error::invalid(format!(
                        "a contiguous cluster of {} cells has {} pairs at distance {d}, got {count}",
                        self.order,
                        self.order.saturating_sub(d)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `ln(J⁽ⁿ⁾/J0⁽ⁿ⁾) = -4u0²[(n/2) A(0) + Σ P_i A(d_i)]`.
pub fn higher_order_amplitude(cluster: &FlipCluster, sol: &VariationalSolution) -> Result<f64> {
    cluster.validate(sol.n_cells())?;
    let pairs: f64 = cluster
        .parities
        .iter()
        .zip(&cluster.distances)
        .map(|(p, &d)| p.sign() * sol.a(d))
        .sum();
    Ok(-4.0 * sol.u0_sq() * (cluster.order as f64 / 2.0 * sol.a(0) + pairs))
}

/// Every contiguous cluster of the given order, one per flip-direction
/// pattern with the first cell flipping up.
pub fn cluster_configurations(order: usize) -> Result<Vec<(String, FlipCluster)>> {
    if order == 0 || order > 16 {
        return Err(Error::invalid(format!(
            "cluster order {order} outside 1..=16"
        )));
    }
    (0..1usize << (order - 1))
        .map(|mask| {
            let dirs: Vec<i8> = (0..order)
                .map(|i| {
                    if i > 0 && (mask >> (i - 1)) & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            let cluster = FlipCluster::from_directions(&dirs)?;
            Ok((label(&dirs), cluster))
        })
        .collect()
}

fn label(dirs: &[i8]) -> String {
    if dirs.len() == 1 {
        return "flip".to_string();
    }
    dirs.windows(2)
        .map(|w| Parity::from_product(w[0], w[1]).letter().to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// Amplitude of one flip cluster at fixed circuit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderAmplitude {
    pub order: usize,
    /// Nearest-neighbour parities, e.g. `o-e-o`.
    pub label: String,
    pub parities: Vec<Parity>,
    pub distances: Vec<usize>,
    pub odd_pairs: usize,
    /// `ln(J⁽ⁿ⁾/J0⁽ⁿ⁾)`.
    pub log_amplitude: f64,
}

/// One line of the amplitude table, including the prefactor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixRow {
    #[serde(flatten)]
    pub amplitude: HigherOrderAmplitude,
    /// `ln(J⁽ⁿ⁾/ħΩ)`.
    pub log_value: f64,
}

/// Amplitudes of all clusters of orders `1..=max_order` at nearest-neighbour
/// spacing. Without interaction only the single flip is reported.
pub fn appendix_table(
    sol: &VariationalSolution,
    policy: &PrefactorPolicy,
    max_order: usize,
) -> Result<Vec<AppendixRow>> {
    policy.validate()?;
    let top = if sol.has_interaction() {
        max_order.min(sol.n_cells())
    } else {
        1
    };
    let mut rows = Vec::new();
    for order in 1..=top {
        let prefactor = if order == 1 { policy.delta0 } else { policy.j0 };
        for (label, cluster) in cluster_configurations(order)? {
            let log_amplitude = higher_order_amplitude(&cluster, sol)?;
            rows.push(AppendixRow {
                log_value: prefactor.ln() + log_amplitude,
                amplitude: HigherOrderAmplitude {
                    order,
                    label,
                    odd_pairs: cluster.odd_count(),
                    parities: cluster.parities,
                    distances: cluster.distances,
                    log_amplitude,
                },
            });
        }
    }
    Ok(rows)
}

/// Ordering checks on an amplitude table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// Every amplitude of order `n` exceeds every amplitude of order `n+1`.
    pub between_orders: bool,
    /// The largest amplitude of each order exceeds the largest of the next.
    pub leading_descending: bool,
    /// Within each order, more odd pairs always means a larger amplitude.
    pub within_orders: bool,
    pub violations: Vec<String>,
}

impl OrderingReport {
    pub fn holds(&self) -> bool {
        self.between_orders && self.within_orders
    }
}

pub fn appendix_ordering(rows: &[AppendixRow]) -> OrderingReport {
    let mut violations = Vec::new();
    let max_order = rows.iter().map(|r| r.amplitude.order).max().unwrap_or(0);
    let of_order = |n: usize| rows.iter().filter(move |r| r.amplitude.order == n);

    let mut between = true;
    for n in 1..max_order {
        let low = of_order(n)
            .min_by(|a, b| a.log_value.total_cmp(&b.log_value))
            .expect("every order up to the maximum is present");
        let high = of_order(n + 1)
            .max_by(|a, b| a.log_value.total_cmp(&b.log_value))
            .expect("every order up to the maximum is present");
        if low.log_value <= high.log_value {
            between = false;
            violations.push(format!(
                "order {n} '{}' (ln = {:.4}) is not above order {} '{}' (ln = {:.4})",
                low.amplitude.label,
                low.log_value,
                n + 1,
                high.amplitude.label,
                high.log_value
            ));
        }
    }

    let leading: Vec<f64> = (1..=max_order)
        .map(|n| {
            of_order(n)
                .map(|r| r.log_value)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let leading_descending = leading.windows(2).all(|w| w[0] > w[1]);

    let mut within = true;
    for n in 1..=max_order {
        for a in of_order(n) {
            for b in of_order(n) {
                if a.amplitude.odd_pairs > b.amplitude.odd_pairs && a.log_value <= b.log_value {
                    within = false;
                    violations.push(format!(
                        "order {n}: '{}' has more odd pairs than '{}' but is not larger",
                        a.amplitude.label, b.amplitude.label
                    ));
                }
            }
        }
    }

    OrderingReport {
        between_orders: between,
        leading_descending,
        within_orders: within,
        violations,
    }
}
