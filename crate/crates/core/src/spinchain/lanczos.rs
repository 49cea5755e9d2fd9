//! Lanczos with full reorthogonalization and deflation.
//!
//! The ground state comes from one restarted Lanczos run; the first excited
//! state from a second run kept orthogonal to the converged ground state, so
//! exact degeneracies are resolved instead of collapsing into one Ritz value.

use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_parity, dot, norm, ChainSpec, EigenResult, Operator, DEFAULT_MAX_SITES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosConfig {
    /// Residual bound `‖Hv - ev‖ ≤ tol·max(1, |e|)`.
    pub tol: f64,
    /// Krylov basis size before a restart.
    pub max_basis: usize,
    pub max_restarts: usize,
    /// Ritz values are examined every this many steps.
    pub check_every: usize,
    /// `e1 - e0 ≤ degeneracy_tol·max(1, |e0|)` flags a degenerate pair.
    pub degeneracy_tol: f64,
    pub max_sites: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            tol: 1e-12,
            max_basis: 120,
            max_restarts: 200,
            check_every: 4,
            degeneracy_tol: 1e-9,
            max_sites: DEFAULT_MAX_SITES,
        }
    }
}

impl LanczosConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_basis < 2 || self.check_every == 0 {
            return Err(Error::invalid(
                "solver needs tol > 0, max_basis >= 2 and check_every >= 1",
            ));
        }
        Ok(())
    }
}

struct Converged {
    value: f64,
    vector: Vec<f64>,
}

struct Solver<'a> {
    op: &'a Operator,
    cfg: &'a LanczosConfig,
    dim: usize,
    matvecs: usize,
    best_residual: f64,
}

impl Solver<'_> {
    fn apply(&mut self, v: &[f64]) -> Vec<f64> {
        self.matvecs += 1;
        let mut out = vec![0.0; self.dim];
        self.op.apply_into(v, &mut out);
        out
    }

    fn scale(&self, e: f64) -> f64 {
        self.cfg.tol * e.abs().max(1.0)
    }

    /// Lowest eigenpair in the orthogonal complement of `locked`.
    fn lowest(&mut self, locked: &[Vec<f64>], mut x: Vec<f64>) -> Result<Converged> {
        let room = self.dim - locked.len();
        let m_max = self.cfg.max_basis.min(room);
        project_out(&mut x, locked);
        project_out(&mut x, locked);
        normalize(&mut x);

        for _ in 0..=self.cfg.max_restarts {
            let mut basis: Vec<Vec<f64>> = vec![x.clone()];
            let mut alphas: Vec<f64> = Vec::new();
            let mut betas: Vec<f64> = Vec::new();
            loop {
                let m = basis.len();
                let mut w = self.apply(&basis[m - 1]);
                let alpha = dot(&w, &basis[m - 1]);
                alphas.push(alpha);
                axpy(&mut w, -alpha, &basis[m - 1]);
                if m > 1 {
                    axpy(&mut w, -betas[m - 2], &basis[m - 2]);
                }
                // full reorthogonalization, repeated when cancellation is severe
                let mut beta = norm(&w);
                for _ in 0..3 {
                    let before = beta;
                    project_out(&mut w, locked);
                    project_out(&mut w, &basis);
                    beta = norm(&w);
                    if beta > 0.7 * before {
                        break;
                    }
                }
                let breakdown = beta <= 1e-13 * alpha.abs().max(1.0);
                let full = m == m_max;
                if breakdown || full || m.is_multiple_of(self.cfg.check_every) {
                    let (theta, y) = lowest_ritz(&alphas, &betas);
                    let estimate = (beta * y[m - 1]).abs();
                    if breakdown || full || estimate <= self.scale(theta) {
                        x = combine(&basis, &y);
                        normalize(&mut x);
                        let hx = self.apply(&x);
                        let rq = dot(&x, &hx);
                        let residual = residual_norm(&hx, &x, rq);
                        self.best_residual = self.best_residual.min(residual);
                        if residual <= self.scale(rq) {
                            return Ok(Converged {
                                value: rq,
                                vector: x,
                            });
                        }
                        if breakdown || full {
                            // restart from the current Ritz vector
                            project_out(&mut x, locked);
                            normalize(&mut x);
                            break;
                        }
                    }
                }
                betas.push(beta);
                w.iter_mut().for_each(|c| *c /= beta);
                basis.push(w);
            }
        }
        Err(Error::NotConverged {
            iterations: self.matvecs,
            best_residual: self.best_residual,
        })
    }
}

fn axpy(w: &mut [f64], c: f64, q: &[f64]) {
    w.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
}

fn project_out(w: &mut [f64], against: &[Vec<f64>]) {
    for q in against {
        let c = dot(w, q);
        axpy(w, -c, q);
    }
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    v.iter_mut().for_each(|c| *c /= n);
}

fn combine(basis: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; basis[0].len()];
    for (q, &c) in basis.iter().zip(y) {
        x.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
    }
    x
}

fn residual_norm(hx: &[f64], x: &[f64], e: f64) -> f64 {
    hx.iter()
        .zip(x)
        .map(|(h, v)| (h - e * v).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Number of eigenvalues of the tridiagonal matrix below `x`.
fn sturm_count(alphas: &[f64], betas: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for i in 0..alphas.len() {
        let off = if i == 0 {
            0.0
        } else {
            betas[i - 1] * betas[i - 1]
        };
        d = alphas[i] - x - off / d;
        if d == 0.0 {
            d = -f64::EPSILON * (alphas[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T - θ) y = r` by Gaussian elimination with partial pivoting.
fn tridiagonal_solve(alphas: &[f64], betas: &[f64], theta: f64, r: &[f64]) -> Vec<f64> {
    let m = alphas.len();
    // rows hold (diag, super, super-super) after pivoting
    let mut a: Vec<[f64; 3]> = (0..m)
        .map(|i| {
            [
                alphas[i] - theta,
                if i + 1 < m { betas[i] } else { 0.0 },
                0.0,
            ]
        })
        .collect();
    let mut sub: Vec<f64> = (0..m)
        .map(|i| if i + 1 < m { betas[i] } else { 0.0 })
        .collect();
    let mut rhs = r.to_vec();
    let tiny = f64::EPSILON
        * alphas
            .iter()
            .chain(betas)
            .fold(1.0f64, |m, x| m.max(x.abs()));
    for i in 0..m.saturating_sub(1) {
        // candidate pivots: row i (a[i]) and row i+1 whose entry below the diagonal is sub[i]
        if sub[i].abs() > a[i][0].abs() {
            let next = a[i + 1];
            let below = [sub[i], next[0], next[1]];
            let cur = a[i];
            a[i] = below;
            a[i + 1] = [cur[1], cur[2], 0.0];
            rhs.swap(i, i + 1);
            sub[i] = cur[0];
        } else {
            a[i + 1] = [a[i + 1][0], a[i + 1][1], 0.0];
        }
        if a[i][0].abs() < tiny {
            a[i][0] = tiny;
        }
        let f = sub[i] / a[i][0];
        a[i + 1][0] -= f * a[i][1];
        a[i + 1][1] -= f * a[i][2];
        rhs[i + 1] -= f * rhs[i];
    }
    if a[m - 1][0].abs() < tiny {
        a[m - 1][0] = tiny;
    }
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = rhs[i];
        if i + 1 < m {
            acc -= a[i][1] * y[i + 1];
        }
        if i + 2 < m {
            acc -= a[i][2] * y[i + 2];
        }
        y[i] = acc / a[i][0];
    }
    y
}

/// Lowest eigenpair of the Lanczos tridiagonal matrix: bisection on the
/// Sturm count, then inverse iteration.
fn lowest_ritz(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    if m == 1 {
        return (alphas[0], vec![1.0]);
    }
    let radius = |i: usize| {
        (if i > 0 { betas[i - 1].abs() } else { 0.0 })
            + (if i + 1 < m { betas[i].abs() } else { 0.0 })
    };
    let mut lo = (0..m)
        .map(|i| alphas[i] - radius(i))
        .fold(f64::INFINITY, f64::min);
    let mut hi = (0..m)
        .map(|i| alphas[i] + radius(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 2.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alphas, betas, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let mut y = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..3 {
        y = tridiagonal_solve(alphas, betas, theta, &y);
        let n = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        y.iter_mut().for_each(|c| *c /= n);
    }
    (theta, y)
}

fn random_start(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Sign convention: the first largest-magnitude amplitude is positive.
fn fix_phase(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(&pivot) = v.iter().find(|x| x.abs() >= peak * (1.0 - 1e-9)) {
        if pivot < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// Rotates `(a, b)` by the eigenvectors of a symmetric 2×2 matrix, lowest first.
fn rotate(a: &[f64], b: &[f64], m: Matrix2<f64>) -> (Vec<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(m);
    let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let mix = |k: usize| -> Vec<f64> {
        let (ca, cb) = (eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]);
        a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
    };
    (mix(lo), mix(hi))
}

/// Two lowest eigenpairs with the default solver settings.
pub fn lowest_two(spec: &ChainSpec, seed: u64) -> Result<EigenResult> {
    lowest_two_with(spec, seed, &LanczosConfig::default())
}

pub fn lowest_two_with(spec: &ChainSpec, seed: u64, cfg: &LanczosConfig) -> Result<EigenResult> {
    cfg.validate()?;
    spec.validate(cfg.max_sites)?;
    let dim = spec.dimension();
    let op = Operator::new(spec);
    let mut solver = Solver {
        op: &op,
        cfg,
        dim,
        matvecs: 0,
        best_residual: f64::INFINITY,
    };

    let ground = solver.lowest(&[], random_start(dim, seed))?;
    let excited = solver.lowest(
        std::slice::from_ref(&ground.vector),
        random_start(dim, seed ^ 0x9e37_79b9_7f4a_7c15),
    )?;

    // Rayleigh-Ritz on the converged pair; parity resolves an exact degeneracy
    let (a, b) = (ground.vector, excited.vector);
    let (ha, hb) = (solver.apply(&a), solver.apply(&b));
    let h2 = Matrix2::new(dot(&a, &ha), dot(&a, &hb), dot(&b, &ha), dot(&b, &hb));
    let h2 = (h2 + h2.transpose()) * 0.5;
    let split = (ground.value - excited.value).abs();
    let degenerate = split <= cfg.degeneracy_tol * ground.value.abs().max(1.0);
    let (mut v0, mut v1) = if degenerate {
        let (pa, pb) = (apply_parity(&a), apply_parity(&b));
        let p2 = Matrix2::new(dot(&a, &pa), dot(&a, &pb), dot(&b, &pa), dot(&b, &pb));
        let (minus, plus) = rotate(&a, &b, (p2 + p2.transpose()) * 0.5);
        (plus, minus)
    } else {
        rotate(&a, &b, h2)
    };
    normalize(&mut v0);
    normalize(&mut v1);
    fix_phase(&mut v0);
    fix_phase(&mut v1);

    let h0 = solver.apply(&v0);
    let h1 = solver.apply(&v1);
    let mut e0 = dot(&v0, &h0);
    let mut e1 = dot(&v1, &h1);
    let mut r0 = residual_norm(&h0, &v0, e0);
    let mut r1 = residual_norm(&h1, &v1, e1);
    if e1 < e0 {
        std::mem::swap(&mut e0, &mut e1);
        std::mem::swap(&mut v0, &mut v1);
        std::mem::swap(&mut r0, &mut r1);
    }
    let parity0 = dot(&v0, &apply_parity(&v0));
    let parity1 = dot(&v1, &apply_parity(&v1));
    Ok(EigenResult {
        n_sites: spec.n_sites,
        e0,
        e1,
        v0,
        v1,
        parity0,
        parity1,
        residuals: [r0, r1],
        iterations: solver.matvecs,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinchain::{apply_hamiltonian, dense_oracle};
    use proptest::prelude::*;

    #[test]
    fn tridiagonal_ritz_matches_dense() {
        use nalgebra::DMatrix;
        let alphas = [2.0, -1.0, 0.5, 3.0, -2.5, 0.1];
        let betas = [1.0, 0.3, 2.0, 0.7, 1e-3];
        let (theta, y) = lowest_ritz(&alphas, &betas);
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t.clone());
        assert!((theta - eig.eigenvalues.min()).abs() < 1e-13);
        let yv = nalgebra::DVector::from_vec(y);
        assert!((&t * &yv - theta * &yv).norm() < 1e-12);
        assert_eq!(sturm_count(&alphas, &betas, theta + 1e-9), 1);
    }

    #[test]
    fn single_site() {
        let r = lowest_two(&ChainSpec::power_law(1, 1.0, 1.0).unwrap(), 0).unwrap();
        assert!((r.e0 + 1.0).abs() < 1e-12);
        assert!((r.e1 - 1.0).abs() < 1e-12);
        assert!((r.parity0 + 1.0).abs() < 1e-12);
        // ground state (1, -1)/√2 with the phase rule picks the first entry positive
        assert!(r.v0[0] > 0.0);
    }

    #[test]
    fn two_sites_zero_field() {
        let r = lowest_two(&ChainSpec::power_law(2, 0.0, 3.0).unwrap(), 7).unwrap();
        assert!((r.e0 + 2.0).abs() < 1e-12);
        assert!(r.e1.abs() < 1e-12);
        assert!((r.e1 - r.e0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = ChainSpec::power_law(10, 1.3, 2.0).unwrap();
        let a = lowest_two(&spec, 42).unwrap();
        let b = lowest_two(&spec, 42).unwrap();
        assert_eq!(a.e0.to_bits(), b.e0.to_bits());
        assert_eq!(a.v0, b.v0);
        let c = lowest_two(&spec, 43).unwrap();
        assert!((a.e0 - c.e0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_pair_gets_parity_labels() {
        // odd chain without field: P maps each magnetization sector onto its mirror
        let spec = ChainSpec::power_law(5, 0.0, 1.0).unwrap();
        let r = lowest_two(&spec, 1).unwrap();
        assert!(r.degenerate);
        assert!((r.e1 - r.e0).abs() < 1e-9);
        assert!((r.parity0.abs() - 1.0).abs() < 1e-8);
        assert!((r.parity1.abs() - 1.0).abs() < 1e-8);
        assert!((r.parity0 + r.parity1).abs() < 1e-8);
        assert!(dot(&r.v0, &r.v1).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = LanczosConfig {
            max_basis: 3,
            max_restarts: 0,
            ..LanczosConfig::default()
        };
        let err =
            lowest_two_with(&ChainSpec::power_law(8, 0.3, 1.0).unwrap(), 0, &cfg).unwrap_err();
        match err {
            Error::NotConverged { best_residual, .. } => assert!(best_residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn respects_site_cap() {
        let spec = ChainSpec {
            n_sites: 17,
            delta_tilde: 0.0,
            coupling: crate::spinchain::Coupling::PowerLaw { beta: 1.0 },
        };
        assert!(lowest_two(&spec, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn matches_dense_oracle(n in 1usize..=9, dt in -15.0f64..15.0, beta in 0.01f64..5.0, seed in any::<u64>()) {
            let spec = ChainSpec::power_law(n, dt, beta).unwrap();
            let dense = dense_oracle(&spec).unwrap();
            let r = lowest_two(&spec, seed).unwrap();
            prop_assert!((r.e0 - dense.eigenvalues[0]).abs() < 1e-10);
            prop_assert!((r.e1 - dense.eigenvalues[1]).abs() < 1e-10);
            prop_assert!(r.e0 <= r.e1);
            for (v, e, res) in [(&r.v0, r.e0, r.residuals[0]), (&r.v1, r.e1, r.residuals[1])] {
                prop_assert!((norm(v) - 1.0).abs() < 1e-12);
                let hv = apply_hamiltonian(&spec, v).unwrap();
                prop_assert!((residual_norm(&hv, v, e) - res).abs() < 1e-12);
            }
        }
    }
}
