//! Long-range XX chain in a transverse field on the `2^N` computational basis.
//!
//! `H = Δ̃ Σ_i σx_i + Σ_{i<j} J(j-i)/J(1) (σx_i σx_j + σy_i σy_j)`.
//! Site `i` is bit `i` of the basis index; a set bit is `σz = +1`.

mod dense;
mod lanczos;

pub use dense::{dense_hamiltonian, dense_oracle, DenseSpectrum, DENSE_MAX_SITES};
pub use lanczos::{lowest_two, lowest_two_with, LanczosConfig};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// Default upper bound on the chain length.
pub const DEFAULT_MAX_SITES: usize = 16;

/// Distance dependence of the exchange coupling, normalized to `J(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `J(d)/J(1) = d^(-β)`.
    PowerLaw { beta: f64 },
    /// Explicit `J(d)/J(1)` for `d = 1..N`.
    Table(Vec<f64>),
}

impl Coupling {
    /// `J(d)/J(1)`.
    pub fn ratio(&self, d: usize) -> f64 {
        match self {
            Coupling::PowerLaw { beta } => (d as f64).powf(-beta),
            Coupling::Table(t) => t[d - 1],
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Coupling::PowerLaw { beta } => Some(*beta),
            Coupling::Table(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub delta_tilde: f64,
    pub coupling: Coupling,
}

impl ChainSpec {
    pub fn new(n_sites: usize, delta_tilde: f64, coupling: Coupling) -> Result<Self> {
        let spec = ChainSpec {
            n_sites,
            delta_tilde,
            coupling,
        };
        spec.validate(DEFAULT_MAX_SITES)?;
        Ok(spec)
    }

    pub fn power_law(n_sites: usize, delta_tilde: f64, beta: f64) -> Result<Self> {
        Self::new(n_sites, delta_tilde, Coupling::PowerLaw { beta })
    }

    pub fn validate(&self, max_sites: usize) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::invalid("a chain needs at least one site"));
        }
        if self.n_sites > max_sites {
            return Err(Error::invalid(format!(
                "{} sites exceed the cap of {max_sites}",
                self.n_sites
            )));
        }
        if self.n_sites >= usize::BITS as usize - 1 {
            return Err(Error::invalid("chain too long for the basis index"));
        }
        if !self.delta_tilde.is_finite() {
            return Err(Error::invalid("delta_tilde must be finite"));
        }
        match &self.coupling {
            Coupling::PowerLaw { beta } => {
                if !(beta.is_finite() && *beta >= 0.0) {
                    return Err(Error::invalid(format!(
                        "power-law exponent must be finite and >= 0, got {beta}"
                    )));
                }
            }
            Coupling::Table(t) => {
                if t.len() != self.n_sites - 1 {
                    return Err(Error::DimensionMismatch {
                        expected: self.n_sites - 1,
                        actual: t.len(),
                    });
                }
                if t.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                    return Err(Error::invalid(
                        "coupling table entries must be finite and positive",
                    ));
                }
                if let Some(&first) = t.first() {
                    if (first - 1.0).abs() > 1e-12 {
                        return Err(Error::invalid(format!(
                            "coupling table must be normalized to J(1) = 1, first entry is {first}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        1usize << self.n_sites
    }

    /// Same chain with a different field.
    pub fn with_delta_tilde(&self, delta_tilde: f64) -> Self {
        ChainSpec {
            delta_tilde,
            ..self.clone()
        }
    }
}

/// Computational basis of `N` spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinBasis {
    pub n_sites: usize,
}

impl SpinBasis {
    pub fn new(n_sites: usize) -> Self {
        SpinBasis { n_sites }
    }

    pub fn dimension(&self) -> usize {
        1usize << self.n_sites
    }

    /// `σz` eigenvalues per site.
    pub fn decode(&self, index: usize) -> Vec<i8> {
        (0..self.n_sites)
            .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
            .collect()
    }

    pub fn encode(&self, spins: &[i8]) -> usize {
        spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }
}

/// Precomputed off-diagonal structure of one chain.
struct Operator {
    n_sites: usize,
    field: f64,
    /// `(mask, bit i, bit j, 2·J(j-i)/J(1))` for every unordered pair.
    pairs: Vec<(usize, usize, usize, f64)>,
}

impl Operator {
    fn new(spec: &ChainSpec) -> Self {
        let n = spec.n_sites;
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push(((1 << i) | (1 << j), i, j, 2.0 * spec.coupling.ratio(j - i)));
            }
        }
        Operator {
            n_sites: n,
            field: spec.delta_tilde,
            pairs,
        }
    }

    #[inline]
    fn row(&self, s: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_sites {
            acc += v[s ^ (1 << i)];
        }
        acc *= self.field;
        for &(mask, i, j, w) in &self.pairs {
            if ((s >> i) ^ (s >> j)) & 1 == 1 {
                acc += w * v[s ^ mask];
            }
        }
        acc
    }

    /// Fills `out[k] = (Hv)[lo + k]`; `lo` is a multiple of `out.len()`,
    /// which is a power of two. Runs of indices sharing the bits above the
    /// flipped ones are handled as contiguous slices.
    fn apply_block(&self, v: &[f64], lo: usize, out: &mut [f64]) {
        let len = out.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.n_sites {
            let bit = 1 << i;
            let run = bit.min(len);
            for start in (0..len).step_by(run) {
                let src = (lo + start) ^ bit;
                for (o, x) in out[start..start + run].iter_mut().zip(&v[src..src + run]) {
                    *o += x;
                }
            }
        }
        out.iter_mut().for_each(|o| *o *= self.field);
        for &(mask, i, j, w) in &self.pairs {
            let run = (1usize << i).min(len);
            for start in (0..len).step_by(run) {
                let s = lo + start;
                if ((s >> i) ^ (s >> j)) & 1 == 1 {
                    let src = s ^ mask;
                    for (o, x) in out[start..start + run].iter_mut().zip(&v[src..src + run]) {
                        *o += w * x;
                    }
                }
            }
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        const CHUNK: usize = 2048;
        if out.len() <= CHUNK {
            self.apply_block(v, 0, out);
        } else {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, block)| self.apply_block(v, c * CHUNK, block));
        }
    }
}

/// Matrix-free `H v`.
pub fn apply_hamiltonian(spec: &ChainSpec, v: &[f64]) -> Result<Vec<f64>> {
    spec.validate(usize::BITS as usize - 2)?;
    check_dimension(spec, v)?;
    let mut out = vec![0.0; v.len()];
    Operator::new(spec).apply_into(v, &mut out);
    Ok(out)
}

fn check_dimension(spec: &ChainSpec, v: &[f64]) -> Result<()> {
    if v.len() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// `P = Π_i σx_i` flips every spin.
pub fn apply_parity(v: &[f64]) -> Vec<f64> {
    let all = v.len() - 1;
    (0..v.len()).map(|s| v[s ^ all]).collect()
}

/// Relabels sites `i → N-1-i`.
pub fn reflect_state(n_sites: usize, v: &[f64]) -> Vec<f64> {
    let reverse = |s: usize| -> usize {
        (0..n_sites).fold(0, |acc, i| acc | (((s >> i) & 1) << (n_sites - 1 - i)))
    };
    let mut out = vec![0.0; v.len()];
    for (s, &x) in v.iter().enumerate() {
        out[reverse(s)] = x;
    }
    out
}

/// Two lowest eigenpairs of a chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub n_sites: usize,
    pub e0: f64,
    pub e1: f64,
    #[serde(skip)]
    pub v0: Vec<f64>,
    #[serde(skip)]
    pub v1: Vec<f64>,
    pub parity0: f64,
    pub parity1: f64,
    pub residuals: [f64; 2],
    pub iterations: usize,
    pub degenerate: bool,
}

#[derive(Serialize)]
struct VectorSidecar<'a> {
    file: &'a str,
    dimension: usize,
    n_vectors: usize,
    n_sites: usize,
    dtype: &'static str,
    byte_order: &'static str,
    layout: &'static str,
    encoding: &'static str,
}

impl EigenResult {
    /// Writes `v0, v1` as little-endian `f64` to `<stem>.bin` and a JSON
    /// sidecar to `<stem>.json`.
    pub fn dump_vectors(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let bin_name = format!("{stem}.bin");
        let mut bytes = Vec::with_capacity(16 * self.v0.len());
        for x in self.v0.iter().chain(&self.v1) {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        crate::io::write_atomic(&dir.join(&bin_name), &bytes)?;
        let sidecar = VectorSidecar {
            file: &bin_name,
            dimension: self.v0.len(),
            n_vectors: 2,
            n_sites: self.n_sites,
            dtype: "f64",
            byte_order: "little",
            layout: "v0 then v1, each contiguous",
            encoding: "site i is bit i of the index; bit 1 means sigma_z = +1",
        };
        crate::io::write_atomic(
            &dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&sidecar)?.as_bytes(),
        )
    }
}

/// Reads vectors written by [`EigenResult::dump_vectors`].
pub fn load_vectors(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::invalid("vector file length is not a multiple of 8"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight bytes")))
        .collect())
}

fn dot_serial(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 8192;
    if a.len() <= CHUNK {
        return dot_serial(a, b);
    }
    // partial sums over fixed chunks, reduced in order: same result on any pool size
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| dot_serial(x, y))
        .collect();
    parts.iter().sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Kronecker-product construction, independent of the bit-twiddling path.
    fn kron_hamiltonian(spec: &ChainSpec) -> Vec<Vec<f64>> {
        let n = spec.n_sites;
        let dim = 1 << n;
        // site i ↔ bit i; σx flips, σyσy on a pair gives -1 aligned, +1 anti-aligned
        let mut h = vec![vec![0.0; dim]; dim];
        for s in 0..dim {
            for i in 0..n {
                h[s ^ (1 << i)][s] += spec.delta_tilde;
            }
            for i in 0..n {
                for j in i + 1..n {
                    let t = s ^ (1 << i) ^ (1 << j);
                    let bi = (s >> i) & 1;
                    let bj = (s >> j) & 1;
                    let yy = if bi == bj { -1.0 } else { 1.0 };
                    h[t][s] += spec.coupling.ratio(j - i) * (1.0 + yy);
                }
            }
        }
        h
    }

    #[test]
    fn basis_round_trip() {
        let b = SpinBasis::new(6);
        for s in 0..b.dimension() {
            assert_eq!(b.encode(&b.decode(s)), s);
        }
        assert_eq!(b.decode(1), vec![1, -1, -1, -1, -1, -1]);
    }

    #[test]
    fn single_site_is_sigma_x() {
        let spec = ChainSpec::power_law(1, 0.7, 1.0).unwrap();
        assert_eq!(
            apply_hamiltonian(&spec, &[1.0, 0.0]).unwrap(),
            vec![0.0, 0.7]
        );
    }

    #[test]
    fn matvec_matches_kronecker_assembly() {
        let spec = ChainSpec::power_law(3, 0.7, 1.0).unwrap();
        let h = kron_hamiltonian(&spec);
        for seed in 0..10 {
            let v = random_vec(8, seed);
            let hv = apply_hamiltonian(&spec, &v).unwrap();
            for r in 0..8 {
                let expected: f64 = (0..8).map(|c| h[r][c] * v[c]).sum();
                assert!((hv[r] - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn parallel_path_matches_kronecker_assembly() {
        let spec = ChainSpec::new(
            13,
            -1.3,
            Coupling::Table((1..13).map(|d| 1.0 / (d * d) as f64).collect()),
        )
        .unwrap();
        let v = random_vec(spec.dimension(), 9);
        let hv = apply_hamiltonian(&spec, &v).unwrap();
        let op = Operator::new(&spec);
        for s in (0..spec.dimension()).step_by(97) {
            assert!((hv[s] - op.row(s, &v)).abs() < 1e-12);
        }
        let small = ChainSpec::power_law(6, -1.3, 0.5).unwrap();
        let h = kron_hamiltonian(&small);
        let v = random_vec(64, 3);
        let hv = apply_hamiltonian(&small, &v).unwrap();
        for r in 0..64 {
            let expected: f64 = (0..64).map(|c| h[r][c] * v[c]).sum();
            assert!((hv[r] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ChainSpec::power_law(0, 1.0, 1.0).is_err());
        assert!(ChainSpec::power_law(17, 1.0, 1.0).is_err());
        assert!(ChainSpec::power_law(4, 1.0, -0.1).is_err());
        assert!(ChainSpec::power_law(4, f64::NAN, 1.0).is_err());
        assert!(ChainSpec::new(4, 1.0, Coupling::Table(vec![1.0, 0.5])).is_err());
        assert!(ChainSpec::new(4, 1.0, Coupling::Table(vec![0.9, 0.5, 0.2])).is_err());
        assert!(ChainSpec::new(4, 1.0, Coupling::Table(vec![1.0, -0.5, 0.2])).is_err());
        let spec = ChainSpec {
            n_sites: 17,
            delta_tilde: 0.0,
            coupling: Coupling::PowerLaw { beta: 1.0 },
        };
        assert!(spec.validate(17).is_ok());
        let spec = ChainSpec::power_law(3, 1.0, 1.0).unwrap();
        assert!(matches!(
            apply_hamiltonian(&spec, &[0.0; 4]),
            Err(Error::DimensionMismatch {
                expected: 8,
                actual: 4
            })
        ));
    }

    #[test]
    fn reflection_is_an_involution_and_a_symmetry() {
        let spec = ChainSpec::power_law(7, 0.4, 1.7).unwrap();
        let v = random_vec(128, 5);
        assert_eq!(reflect_state(7, &reflect_state(7, &v)), v);
        let lhs = apply_hamiltonian(&spec, &reflect_state(7, &v)).unwrap();
        let rhs = reflect_state(7, &apply_hamiltonian(&spec, &v).unwrap());
        assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn vector_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = EigenResult {
            n_sites: 1,
            e0: -1.0,
            e1: 1.0,
            v0: vec![0.5, -0.25],
            v1: vec![1.0, 2.0],
            parity0: 1.0,
            parity1: -1.0,
            residuals: [0.0, 0.0],
            iterations: 1,
            degenerate: false,
        };
        r.dump_vectors(dir.path(), "eig").unwrap();
        let back = load_vectors(&dir.path().join("eig.bin")).unwrap();
        assert_eq!(back, vec![0.5, -0.25, 1.0, 2.0]);
        let side: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("eig.json")).unwrap()).unwrap();
        assert_eq!(side["dimension"], 2);
    }

    #[test]
    fn chunked_dot_is_pool_independent() {
        let a = random_vec(1 << 15, 1);
        let b = random_vec(1 << 15, 2);
        let reference = dot(&a, &b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        assert_eq!(pool.install(|| dot(&a, &b)), reference);
    }

    fn arb_spec(max_n: usize) -> impl Strategy<Value = ChainSpec> {
        (1..=max_n, -15.0f64..15.0, 0.0f64..5.0)
            .prop_map(|(n, dt, beta)| ChainSpec::power_law(n, dt, beta).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hamiltonian_is_symmetric(spec in arb_spec(9), seed in any::<u64>()) {
            let dim = spec.dimension();
            let u = random_vec(dim, seed);
            let v = random_vec(dim, seed.wrapping_add(1));
            let lhs = dot(&u, &apply_hamiltonian(&spec, &v).unwrap());
            let rhs = dot(&apply_hamiltonian(&spec, &u).unwrap(), &v);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn hamiltonian_commutes_with_parity(spec in arb_spec(9), seed in any::<u64>()) {
            let v = random_vec(spec.dimension(), seed);
            let a = apply_hamiltonian(&spec, &apply_parity(&v)).unwrap();
            let b = apply_parity(&apply_hamiltonian(&spec, &v).unwrap());
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            prop_assert!(norm(&diff) < 1e-12);
        }

        #[test]
        fn hamiltonian_is_linear(spec in arb_spec(8), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let dim = spec.dimension();
            let u = random_vec(dim, seed);
            let v = random_vec(dim, seed ^ 0xabcdef);
            let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = apply_hamiltonian(&spec, &mix).unwrap();
            let hu = apply_hamiltonian(&spec, &u).unwrap();
            let hv = apply_hamiltonian(&spec, &v).unwrap();
            for k in 0..dim {
                prop_assert!((lhs[k] - (a * hu[k] + b * hv[k])).abs() < 1e-12 * (1.0 + lhs[k].abs()));
            }
        }
    }
}
