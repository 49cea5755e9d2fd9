//! Parameter sweeps over `(Δ̃, β, N)` with checkpointed per-point results.
//!
//! Layout of a sweep directory:
//!
//! ```text
//! <out>/<sweep-id>/manifest.json
//! <out>/<sweep-id>/grid.csv
//! <out>/<sweep-id>/tables/correlations.csv
//! <out>/<sweep-id>/tables/structure_factor.csv
//! <out>/<sweep-id>/tables/points/<key>.json
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};
use crate::io::{sha256_hex, write_atomic};
use crate::observables::{FssCurve, ObservableSet};
use crate::spinchain::{lowest_two_with, ChainSpec, Coupling, LanczosConfig};
use crate::stats::arange;
use crate::variational::{map_circuit, PrefactorPolicy, SpinModelParams};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "SAWTOOTH_WORKERS";

pub const GRID_CSV_HEADER: &str = "delta_tilde,beta,n_sites,gap,mx,xi,xi_over_n,cy_half,cx_half";
pub const CORRELATIONS_CSV_HEADER: &str = "delta_tilde,beta,n_sites,d,cy,cx";
pub const STRUCTURE_CSV_HEADER: &str = "delta_tilde,beta,n_sites,m,q,s";

/// Inclusive arithmetic axis `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        arange(self.start, self.stop, self.step)
    }

    /// Parses `start:stop:step`, or a single value.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::invalid(format!("'{s}' in range '{text}' is not a number")))
        };
        let range = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                AxisRange {
                    start: v,
                    stop: v,
                    step: 1.0,
                }
            }
            [a, b, c] => AxisRange {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => {
                return Err(Error::invalid(format!(
                    "range '{text}' must be 'start:stop:step' or a single value"
                )))
            }
        };
        if !(range.step > 0.0) || range.stop < range.start {
            return Err(Error::invalid(format!(
                "range '{text}' needs step > 0 and stop >= start"
            )));
        }
        Ok(range)
    }
}

/// How the circuit's exchange table enters the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// Exact `J(d)/J(1)` table.
    Table,
    /// `d^(-β)` with the fitted exponent, or the analytic one when no fit exists.
    PowerLaw,
}

impl std::str::FromStr for KernelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(KernelMode::Table),
            "powerlaw" | "power-law" | "power_law" => Ok(KernelMode::PowerLaw),
            other => Err(Error::invalid(format!(
                "kernel must be 'table' or 'powerlaw', got '{other}'"
            ))),
        }
    }
}

/// Chain built from a circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedChain {
    pub spec: ChainSpec,
    pub model: SpinModelParams,
    pub kernel: KernelMode,
    /// Exponent of the power-law kernel, or `β_fit`/`β_analytic` for reference in table mode.
    pub beta: f64,
}

/// Maps a circuit onto a chain with `N = n_cells` sites.
pub fn derive_chain_from_circuit(
    params: &CircuitParams,
    kernel: KernelMode,
    policy: &PrefactorPolicy,
) -> Result<DerivedChain> {
    params.validate()?;
    if params.gamma == 0.0 {
        return Err(Error::NoInteraction);
    }
    let model = map_circuit(params, policy)?;
    let delta_tilde = model.delta_tilde.ok_or(Error::NoInteraction)?;
    let beta = model.beta_fit.unwrap_or(model.beta_analytic);
    let coupling = match kernel {
        KernelMode::Table => Coupling::Table(model.j_table.clone()),
        KernelMode::PowerLaw => Coupling::PowerLaw { beta },
    };
    let spec = ChainSpec {
        n_sites: params.n_cells,
        delta_tilde,
        coupling,
    };
    spec.validate(usize::BITS as usize - 2)?;
    Ok(DerivedChain {
        spec,
        model,
        kernel,
        beta,
    })
}

/// Circuit parameters shared by every point of a physically derived sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSource {
    pub alpha: f64,
    pub gamma: f64,
    pub ej_over_ec: f64,
    pub kernel: KernelMode,
    pub policy: PrefactorPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub sweep_id: String,
    /// Field axis (direct mode).
    pub delta_tilde: Vec<f64>,
    /// Exponent axis (direct mode).
    pub beta: Vec<f64>,
    pub n_sites: Vec<usize>,
    /// When set, `Δ̃` and the couplings come from the circuit at each `N`.
    pub circuit: Option<CircuitSource>,
    pub out_dir: PathBuf,
    pub resume: bool,
    pub seed: u64,
    pub solver: LanczosConfig,
    pub max_abs_delta_tilde: f64,
    /// Worker threads; `None` reads the environment, then uses all cores.
    pub workers: Option<usize>,
}

impl SweepPlan {
    /// `Δ̃ ∈ -15:15:0.25`, `β ∈ 0.1:5.0:0.1`, `N = 12`.
    pub fn default_grid(sweep_id: &str, out_dir: &Path) -> Self {
        SweepPlan {
            sweep_id: sweep_id.to_string(),
            delta_tilde: arange(-15.0, 15.0, 0.25),
            beta: arange(0.1, 5.0, 0.1),
            n_sites: vec![12],
            circuit: None,
            out_dir: out_dir.to_path_buf(),
            resume: false,
            seed: 0,
            solver: LanczosConfig::default(),
            max_abs_delta_tilde: 15.0,
            workers: None,
        }
    }

    pub fn dir(&self) -> PathBuf {
        self.out_dir.join(&self.sweep_id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep_id.is_empty()
            || self
                .sweep_id
                .chars()
                .any(|c| !(c.is_ascii_alphanumeric() || "-_.".contains(c)))
        {
            return Err(Error::invalid(format!(
                "sweep id '{}' must be nonempty and use only [A-Za-z0-9._-]",
                self.sweep_id
            )));
        }
        if self.n_sites.is_empty() {
            return Err(Error::invalid("the chain-length list is empty"));
        }
        if let Some(&n) = self
            .n_sites
            .iter()
            .find(|&&n| n == 0 || n > self.solver.max_sites)
        {
            return Err(Error::invalid(format!(
                "chain length {n} outside 1..={}",
                self.solver.max_sites
            )));
        }
        if let Some(c) = &self.circuit {
            for &n in &self.n_sites {
                CircuitParams::new(c.alpha, c.gamma, c.ej_over_ec, n)?;
            }
        } else {
            if self.delta_tilde.is_empty() || self.beta.is_empty() {
                return Err(Error::invalid("field and exponent grids must be nonempty"));
            }
            if let Some(d) = self
                .delta_tilde
                .iter()
                .find(|d| !d.is_finite() || d.abs() > self.max_abs_delta_tilde + 1e-12)
            {
                return Err(Error::invalid(format!(
                    "field {d} outside |delta_tilde| <= {}",
                    self.max_abs_delta_tilde
                )));
            }
            if let Some(b) = self.beta.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
                return Err(Error::invalid(format!(
                    "exponent {b} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    fn points(&self) -> Result<Vec<PointSpec>> {
        let mut points = Vec::new();
        match &self.circuit {
            None => {
                for &beta in &self.beta {
                    for &dt in &self.delta_tilde {
                        for &n in &self.n_sites {
                            points.push(PointSpec {
                                spec: ChainSpec {
                                    n_sites: n,
                                    delta_tilde: dt,
                                    coupling: Coupling::PowerLaw { beta },
                                },
                                beta,
                                derived: None,
                            });
                        }
                    }
                }
            }
            Some(c) => {
                for &n in &self.n_sites {
                    let params = CircuitParams::new(c.alpha, c.gamma, c.ej_over_ec, n)?;
                    let derived = derive_chain_from_circuit(&params, c.kernel, &c.policy)?;
                    points.push(PointSpec {
                        spec: derived.spec.clone(),
                        beta: derived.beta,
                        derived: Some(derived.model),
                    });
                }
            }
        }
        points.sort_by(|a, b| {
            sort_key(
                a.beta,
                a.spec.delta_tilde,
                a.spec.n_sites,
                b.beta,
                b.spec.delta_tilde,
                b.spec.n_sites,
            )
        });
        points.dedup_by(|a, b| point_key(a) == point_key(b));
        Ok(points)
    }
}

fn sort_key(b1: f64, d1: f64, n1: usize, b2: f64, d2: f64, n2: usize) -> Ordering {
    b1.total_cmp(&b2).then(d1.total_cmp(&d2)).then(n1.cmp(&n2))
}

struct PointSpec {
    spec: ChainSpec,
    beta: f64,
    derived: Option<SpinModelParams>,
}

fn point_key(p: &PointSpec) -> String {
    let kind = match p.spec.coupling {
        Coupling::PowerLaw { .. } => "p",
        Coupling::Table(_) => "t",
    };
    format!(
        "n{:02}_{kind}_b{:.6}_dt{:+.6}",
        p.spec.n_sites, p.beta, p.spec.delta_tilde
    )
}

/// Result of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub key: String,
    pub n_sites: usize,
    pub delta_tilde: f64,
    pub beta: f64,
    pub observables: ObservableSet,
    pub iterations: usize,
    pub residuals: [f64; 2],
    pub parity0: f64,
    pub parity1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit_model: Option<SpinModelParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub key: String,
    pub n_sites: usize,
    pub delta_tilde: f64,
    pub beta: f64,
    pub status: PointStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub sweep_id: String,
    pub generator: String,
    pub plan: SweepPlan,
    pub points: Vec<ManifestEntry>,
    pub completed: usize,
    pub failed: usize,
    pub grid_csv_sha256: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub manifest: Manifest,
    /// Sorted by `(β, Δ̃, N)`.
    pub records: Vec<PointRecord>,
    /// Diagonalizations actually run (resumed points are not counted).
    pub diagonalizations: usize,
}

impl SweepOutcome {
    /// `ξ/N` curves for a single exponent, one per chain length.
    pub fn fss_curves(&self, beta: f64) -> Vec<FssCurve> {
        let mut ns: Vec<usize> = self.records.iter().map(|r| r.n_sites).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let mut pts: Vec<(f64, f64)> = self
                    .records
                    .iter()
                    .filter(|r| r.n_sites == n && r.beta == beta)
                    .map(|r| (r.delta_tilde, r.observables.xi_over_n))
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                FssCurve {
                    n_sites: n,
                    delta_tilde: pts.iter().map(|p| p.0).collect(),
                    xi_over_n: pts.iter().map(|p| p.1).collect(),
                }
            })
            .collect()
    }
}

fn worker_count(plan: &SweepPlan) -> Result<usize> {
    if let Some(w) = plan.workers {
        return if w == 0 {
            Err(Error::invalid("worker count must be at least 1"))
        } else {
            Ok(w)
        };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(Error::invalid(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn load_existing(path: &Path, key: &str) -> Option<(PointRecord, String)> {
    let bytes = std::fs::read(path).ok()?;
    let record: PointRecord = serde_json::from_slice(&bytes).ok()?;
    (record.key == key).then(|| (record, sha256_hex(&bytes)))
}

enum PointOutcome {
    Done {
        record: Box<PointRecord>,
        sha256: String,
        fresh: bool,
    },
    Failed(String),
}

fn run_point(plan: &SweepPlan, point: &PointSpec, key: &str, path: &Path) -> Result<PointOutcome> {
    if plan.resume {
        if let Some((record, sha256)) = load_existing(path, key) {
            return Ok(PointOutcome::Done {
                record: Box::new(record),
                sha256,
                fresh: false,
            });
        }
    }
    let eig = match lowest_two_with(&point.spec, plan.seed, &plan.solver) {
        Ok(e) => e,
        Err(e @ Error::NotConverged { .. }) => return Ok(PointOutcome::Failed(e.to_string())),
        Err(e) => return Err(e),
    };
    let observables = ObservableSet::from_eigen(&point.spec, &eig, plan.solver.degeneracy_tol)?;
    let record = PointRecord {
        key: key.to_string(),
        n_sites: point.spec.n_sites,
        delta_tilde: point.spec.delta_tilde,
        beta: point.beta,
        observables,
        iterations: eig.iterations,
        residuals: eig.residuals,
        parity0: eig.parity0,
        parity1: eig.parity1,
        circuit_model: point.derived.clone(),
    };
    let bytes = serde_json::to_vec_pretty(&record)?;
    write_atomic(path, &bytes)?;
    Ok(PointOutcome::Done {
        record: Box::new(record),
        sha256: sha256_hex(&bytes),
        fresh: true,
    })
}

/// Runs every grid point, writing per-point files, CSV tables and the manifest.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepOutcome> {
    plan.validate()?;
    let points = plan.points()?;
    let dir = plan.dir();
    let points_dir = dir.join("tables").join("points");
    std::fs::create_dir_all(&points_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(plan)?)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;

    let keyed: Vec<(String, &PointSpec)> = points.iter().map(|p| (point_key(p), p)).collect();
    let outcomes: Vec<Result<PointOutcome>> = pool.install(|| {
        keyed
            .par_iter()
            .map(|(key, p)| {
                let path = points_dir.join(format!("{key}.json"));
                let out = run_point(plan, p, key, &path);
                if let Ok(PointOutcome::Failed(msg)) = &out {
                    log::warn!("point {key} failed: {msg}");
                }
                out
            })
            .collect()
    });

    let mut entries = Vec::with_capacity(points.len());
    let mut records = Vec::new();
    let mut diagonalizations = 0;
    for ((key, p), outcome) in keyed.iter().zip(outcomes) {
        let mut entry = ManifestEntry {
            key: key.clone(),
            n_sites: p.spec.n_sites,
            delta_tilde: p.spec.delta_tilde,
            beta: p.beta,
            status: PointStatus::Completed,
            file: None,
            sha256: None,
            error: None,
        };
        match outcome? {
            PointOutcome::Done {
                record,
                sha256,
                fresh,
            } => {
                diagonalizations += usize::from(fresh);
                entry.file = Some(format!("tables/points/{key}.json"));
                entry.sha256 = Some(sha256);
                records.push(*record);
            }
            PointOutcome::Failed(msg) => {
                diagonalizations += 1;
                entry.status = PointStatus::Failed;
                entry.error = Some(msg);
            }
        }
        entries.push(entry);
    }

    let grid = grid_csv(&records);
    write_atomic(&dir.join("grid.csv"), grid.as_bytes())?;
    write_atomic(
        &dir.join("tables").join("correlations.csv"),
        correlations_csv(&records).as_bytes(),
    )?;
    write_atomic(
        &dir.join("tables").join("structure_factor.csv"),
        structure_csv(&records).as_bytes(),
    )?;
    let completed = entries
        .iter()
        .filter(|e| e.status == PointStatus::Completed)
        .count();
    let manifest = Manifest {
        sweep_id: plan.sweep_id.clone(),
        generator: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        plan: plan.clone(),
        completed,
        failed: entries.len() - completed,
        points: entries,
        grid_csv_sha256: sha256_hex(grid.as_bytes()),
    };
    write_atomic(
        &dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(SweepOutcome {
        manifest,
        records,
        diagonalizations,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn grid_csv(records: &[PointRecord]) -> String {
    let mut s = String::from(GRID_CSV_HEADER);
    s.push('\n');
    for r in records {
        let o = &r.observables;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.delta_tilde,
            r.beta,
            r.n_sites,
            o.gap,
            o.mx,
            o.xi,
            o.xi_over_n,
            opt(o.cy_half),
            opt(o.cx_half)
        );
    }
    s
}

pub fn correlations_csv(records: &[PointRecord]) -> String {
    let mut s = String::from(CORRELATIONS_CSV_HEADER);
    s.push('\n');
    for r in records {
        for (d, (cy, cx)) in r.observables.cy.iter().zip(&r.observables.cx).enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{d},{cy},{cx}",
                r.delta_tilde, r.beta, r.n_sites
            );
        }
    }
    s
}

pub fn structure_csv(records: &[PointRecord]) -> String {
    let mut s = String::from(STRUCTURE_CSV_HEADER);
    s.push('\n');
    for r in records {
        for (m, (q, sq)) in r.observables.s_of_q.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{m},{q},{sq}", r.delta_tilde, r.beta, r.n_sites);
        }
    }
    s
}
