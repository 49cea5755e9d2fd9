//! Command-line interface.
//!
//! Every subcommand accepts `--config <file.json>`; keys are the long flag
//! names in snake_case, and flags given on the command line win.

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::circuit::{single_cell_derived, CircuitParams};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::observables::{fss_crossings, FssStatus, ObservableSet};
use crate::spinchain::{lowest_two_with, ChainSpec, Coupling, LanczosConfig};
use crate::svg::{Heatmap, LinePlot, Series};
use crate::sweep::{
    grid_csv, run_sweep, AxisRange, CircuitSource, KernelMode, PointRecord, SweepPlan,
};
use crate::variational::{
    appendix_ordering, appendix_table, exchange_couplings, single_block_exponent,
    solve_variational, wkb_amplitude, PrefactorPolicy,
};

#[derive(Debug, Parser)]
#[command(
    name = "sawtooth-xx",
    version,
    about = "Sawtooth Josephson chain to long-range XX spin chain"
)]
pub struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map circuit parameters onto spin-chain parameters.
    Map(MapArgs),
    /// Diagonalize one chain and report its observables.
    Ed(EdArgs),
    /// Sweep a (delta_tilde, beta, N) grid.
    Sweep(SweepArgs),
    /// Finite-size scaling of xi/N curves.
    Fss(FssArgs),
    /// Multi-cell flip amplitudes up to a given order.
    Appendix(AppendixArgs),
    /// Single-cell potential, frequency and tunneling exponents.
    SingleCell(SingleCellArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitFlags {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "ej-ec")]
    pub ej_ec: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MapArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub circuit: CircuitFlags,
    /// Number of cells.
    #[arg(long)]
    pub n: Option<usize>,
    /// Tunneling prefactor in units of hbar*Omega.
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Exchange prefactor in units of hbar*Omega.
    #[arg(long)]
    pub j0: Option<f64>,
    /// Directory for map.json and plots.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SolverFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_sites: Option<usize>,
}

impl SolverFlags {
    fn config(&self) -> Result<LanczosConfig> {
        let mut cfg = LanczosConfig::default();
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::invalid("--tol must be positive"));
            }
            cfg.tol = t;
        }
        if let Some(m) = self.max_sites {
            cfg.max_sites = m;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EdArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "delta-tilde", allow_hyphen_values = true)]
    pub delta_tilde: Option<f64>,
    /// Power-law exponent of the coupling.
    #[arg(long)]
    pub beta: Option<f64>,
    /// JSON array of J(d)/J(1), d = 1..N, used instead of --beta.
    #[arg(long)]
    pub coupling_table: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
    /// Directory for the eigenvector dump.
    #[arg(long)]
    pub dump_vectors: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GridFlags {
    /// Output root; results go to <out>/<id>/.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub resume: Option<bool>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Field range start:stop:step.
    #[arg(long = "delta-range", allow_hyphen_values = true)]
    pub delta_range: Option<String>,
    /// Comma-separated chain lengths.
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    #[arg(long)]
    pub max_abs_delta_tilde: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridFlags,
    /// Exponent range start:stop:step.
    #[arg(long = "beta-range")]
    pub beta_range: Option<String>,
    /// Derive the chains from circuit parameters instead of the grid axes.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub from_circuit: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub circuit: CircuitFlags,
    /// table or powerlaw.
    #[arg(long)]
    pub kernel: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FssArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub circuit: CircuitFlags,
    /// Chain length of the ordering check.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated chain lengths for the table against N.
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SingleCellArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub circuit: CircuitFlags,
}

/// Loads the JSON config (if any) and lets explicit flags override it.
fn merge_config<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(flags)?)?);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut base: Map<String, Value> = match serde_json::from_str(&text)? {
        Value::Object(m) => m,
        _ => return Err(Error::invalid("config file must hold a JSON object")),
    };
    if let Value::Object(over) = serde_json::to_value(flags)? {
        for (k, v) in over {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base))
        .map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("missing required --{flag}")))
}

impl CircuitFlags {
    fn params(&self, n: usize) -> Result<CircuitParams> {
        CircuitParams::new(
            require(self.alpha, "alpha")?,
            require(self.gamma, "gamma")?,
            require(self.ej_ec, "ej-ec")?,
            n,
        )
    }

    fn with_defaults(&self) -> CircuitFlags {
        CircuitFlags {
            alpha: self.alpha.or(Some(-0.8)),
            gamma: self.gamma.or(Some(1.0)),
            ej_ec: self.ej_ec.or(Some(80.0)),
        }
    }
}

fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    let list: Vec<usize> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>().map_err(|_| {
                Error::invalid(format!("'{s}' in the N list is not a positive integer"))
            })
        })
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::invalid("the N list is empty"));
    }
    Ok(list)
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

pub fn cmd_map(args: &MapArgs, out: &mut dyn Write) -> Result<()> {
    let a = merge_config(args, args.config.as_deref())?;
    let params = a.circuit.params(require(a.n, "n")?)?;
    let policy = PrefactorPolicy {
        delta0: a.delta0.unwrap_or(1.0),
        j0: a.j0.unwrap_or(1.0),
    };
    let sol = solve_variational(&params)?;
    let model = exchange_couplings(&sol, &policy)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        write_text(
            &dir.join("map.json"),
            &serde_json::to_string_pretty(&model)?,
        )?;
        let mut a_plot = LinePlot {
            title: "Gaussian width matrix".into(),
            x_label: "d".into(),
            y_label: "A(d)".into(),
            ..Default::default()
        };
        a_plot.series.push(Series {
            label: format!("N = {}", params.n_cells),
            points: sol
                .a_matrix
                .iter()
                .enumerate()
                .map(|(d, &v)| (d as f64, v))
                .collect(),
        });
        write_text(&dir.join("a_of_d.svg"), &a_plot.render())?;
        if !model.j_table.is_empty() {
            let mut series = vec![Series {
                label: "J(d)/J(1)".into(),
                points: model
                    .j_table
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| ((k + 1) as f64, j))
                    .collect(),
            }];
            if let Some(b) = model.beta_fit {
                series.push(Series {
                    label: format!("d^-{b:.3}"),
                    points: (1..params.n_cells)
                        .map(|d| (d as f64, (d as f64).powf(-b)))
                        .collect(),
                });
            }
            let plot = LinePlot {
                title: format!("Exchange, gamma = {}", params.gamma),
                x_label: "d".into(),
                y_label: "J(d)/J(1)".into(),
                log_x: true,
                log_y: true,
                series,
                vlines: model.ell0.into_iter().collect(),
            };
            write_text(&dir.join("j_of_d.svg"), &plot.render())?;
        }
        let mut lengths: Vec<usize> = (2..=12)
            .map(|k| 1usize << k)
            .filter(|&n| n <= params.n_cells.max(16))
            .collect();
        if !lengths.contains(&params.n_cells) && params.n_cells >= 2 {
            lengths.push(params.n_cells);
        }
        let mut delta = Vec::new();
        let mut j1 = Vec::new();
        for n in lengths {
            let m = exchange_couplings(
                &solve_variational(&CircuitParams {
                    n_cells: n,
                    ..params
                })?,
                &policy,
            )?;
            delta.push(((n as f64).ln(), m.log_delta));
            if let Some(l) = m.log_j1 {
                j1.push(((n as f64).ln(), l));
            }
        }
        let plot = LinePlot {
            title: "Amplitudes against chain length".into(),
            x_label: "ln N".into(),
            y_label: "ln(amplitude / prefactor)".into(),
            series: vec![
                Series {
                    label: "Delta".into(),
                    points: delta,
                },
                Series {
                    label: "J(1)".into(),
                    points: j1,
                },
            ],
            ..Default::default()
        };
        write_text(&dir.join("delta_vs_n.svg"), &plot.render())?;
    }
    match a.format.unwrap_or(Format::Json) {
        Format::Json => emit(out, &model),
        other => Err(Error::invalid(format!(
            "map supports --format json only, got {other:?}"
        ))),
    }
}

#[derive(Serialize)]
struct EdReport<'a> {
    observables: &'a ObservableSet,
    solver: &'a crate::spinchain::EigenResult,
}

pub fn cmd_ed(args: &EdArgs, out: &mut dyn Write) -> Result<()> {
    let a = merge_config(args, args.config.as_deref())?;
    let n = require(a.n, "n")?;
    let dt = require(a.delta_tilde, "delta-tilde")?;
    let coupling = match (&a.coupling_table, a.beta) {
        (Some(path), None) => {
            let table: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            Coupling::Table(table)
        }
        (None, Some(beta)) => Coupling::PowerLaw { beta },
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "give either --beta or --coupling-table, not both",
            ))
        }
        (None, None) => {
            return Err(Error::invalid(
                "missing required --beta (or --coupling-table)",
            ))
        }
    };
    let cfg = a.solver.config()?;
    let spec = ChainSpec {
        n_sites: n,
        delta_tilde: dt,
        coupling,
    };
    spec.validate(cfg.max_sites)?;
    let eig = lowest_two_with(&spec, a.solver.seed.unwrap_or(0), &cfg)?;
    let obs = ObservableSet::from_eigen(&spec, &eig, cfg.degeneracy_tol)?;
    if let Some(dir) = &a.dump_vectors {
        eig.dump_vectors(dir, "eigenvectors")?;
    }
    match a.format.unwrap_or(Format::Json) {
        Format::Json => emit(
            out,
            &EdReport {
                observables: &obs,
                solver: &eig,
            },
        ),
        Format::Csv => {
            let record = PointRecord {
                key: String::new(),
                n_sites: n,
                delta_tilde: dt,
                beta: spec.coupling.beta().unwrap_or(f64::NAN),
                observables: obs,
                iterations: eig.iterations,
                residuals: eig.residuals,
                parity0: eig.parity0,
                parity1: eig.parity1,
                circuit_model: None,
            };
            write!(out, "{}", grid_csv(std::slice::from_ref(&record)))?;
            Ok(())
        }
        Format::Svg => Err(Error::invalid("ed supports --format json or csv")),
    }
}

fn solver_into_plan(plan: &mut SweepPlan, solver: &SolverFlags) -> Result<()> {
    plan.solver = solver.config()?;
    plan.seed = solver.seed.unwrap_or(0);
    Ok(())
}

fn grid_into_plan(plan: &mut SweepPlan, grid: &GridFlags) -> Result<()> {
    if let Some(r) = &grid.delta_range {
        plan.delta_tilde = AxisRange::parse(r)?.values();
    }
    if let Some(l) = &grid.n_list {
        plan.n_sites = parse_n_list(l)?;
    }
    plan.resume = grid.resume.unwrap_or(false);
    plan.workers = grid.workers;
    if let Some(m) = grid.max_abs_delta_tilde {
        plan.max_abs_delta_tilde = m;
    }
    Ok(())
}

fn heatmap(
    records: &[PointRecord],
    n: usize,
    value: impl Fn(&PointRecord) -> Option<f64>,
    title: &str,
    bar: &str,
) -> Heatmap {
    let mut xs: Vec<f64> = records
        .iter()
        .filter(|r| r.n_sites == n)
        .map(|r| r.delta_tilde)
        .collect();
    let mut ys: Vec<f64> = records
        .iter()
        .filter(|r| r.n_sites == n)
        .map(|r| r.beta)
        .collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let mut values = vec![vec![f64::NAN; xs.len()]; ys.len()];
    for r in records.iter().filter(|r| r.n_sites == n) {
        let ix = xs
            .iter()
            .position(|&x| x == r.delta_tilde)
            .expect("collected above");
        let iy = ys
            .iter()
            .position(|&y| y == r.beta)
            .expect("collected above");
        values[iy][ix] = value(r).unwrap_or(f64::NAN);
    }
    Heatmap {
        title: format!("{title}, N = {n}"),
        x_label: "delta_tilde".into(),
        y_label: "beta".into(),
        colorbar_label: bar.into(),
        xs,
        ys,
        values,
    }
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let a = merge_config(args, args.config.as_deref())?;
    let root = a.grid.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let id = a.grid.id.clone().unwrap_or_else(|| "sweep".into());
    let mut plan = SweepPlan::default_grid(&id, &root);
    grid_into_plan(&mut plan, &a.grid)?;
    solver_into_plan(&mut plan, &a.solver)?;
    if let Some(r) = &a.beta_range {
        plan.beta = AxisRange::parse(r)?.values();
    }
    if a.from_circuit.unwrap_or(false) {
        let c = a.circuit.with_defaults();
        let kernel: KernelMode = a.kernel.as_deref().unwrap_or("table").parse()?;
        plan.circuit = Some(CircuitSource {
            alpha: require(c.alpha, "alpha")?,
            gamma: require(c.gamma, "gamma")?,
            ej_over_ec: require(c.ej_ec, "ej-ec")?,
            kernel,
            policy: PrefactorPolicy::default(),
        });
    } else if a.kernel.is_some()
        || a.circuit.alpha.is_some()
        || a.circuit.gamma.is_some()
        || a.circuit.ej_ec.is_some()
    {
        return Err(Error::invalid(
            "circuit flags and --kernel require --from-circuit",
        ));
    }
    let outcome = run_sweep(&plan)?;
    let dir = plan.dir();
    if plan.circuit.is_none() {
        let n = plan.n_sites[0];
        write_text(
            &dir.join("heatmap_gap.svg"),
            &heatmap(
                &outcome.records,
                n,
                |r| Some(r.observables.gap),
                "Energy gap",
                "G",
            )
            .render(),
        )?;
        write_text(
            &dir.join("heatmap_cy.svg"),
            &heatmap(
                &outcome.records,
                n,
                |r| r.observables.cy_half,
                "Transverse correlation",
                "C_y(N/2-1)",
            )
            .render(),
        )?;
    }
    emit(
        out,
        &json!({
            "sweep_dir": dir,
            "points": outcome.manifest.points.len(),
            "completed": outcome.manifest.completed,
            "failed": outcome.manifest.failed,
            "diagonalizations": outcome.diagonalizations,
            "grid_csv_sha256": outcome.manifest.grid_csv_sha256,
        }),
    )?;
    Ok(if outcome.manifest.failed > 0 { 2 } else { 0 })
}

pub fn cmd_fss(args: &FssArgs, out: &mut dyn Write) -> Result<i32> {
    let a = merge_config(args, args.config.as_deref())?;
    let beta = require(a.beta, "beta")?;
    let root = a.grid.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let id = a
        .grid
        .id
        .clone()
        .unwrap_or_else(|| format!("fss_beta{beta}"));
    let mut plan = SweepPlan {
        delta_tilde: AxisRange::parse("0:6:0.1")?.values(),
        beta: vec![beta],
        n_sites: vec![6, 8, 10, 12, 14],
        ..SweepPlan::default_grid(&id, &root)
    };
    grid_into_plan(&mut plan, &a.grid)?;
    solver_into_plan(&mut plan, &a.solver)?;
    if plan.n_sites.len() < 2 {
        return Err(Error::invalid(
            "finite-size scaling needs at least two chain lengths in --n-list",
        ));
    }
    let outcome = run_sweep(&plan)?;
    if outcome.manifest.failed > 0 {
        emit(
            out,
            &json!({"status": "failed_points", "failed": outcome.manifest.failed}),
        )?;
        return Ok(2);
    }
    let curves = outcome.fss_curves(beta);
    let report = fss_crossings(&curves)?;
    let dir = plan.dir();
    let mut csv = String::from("delta_tilde,n_sites,xi_over_n\n");
    for c in &curves {
        for (x, y) in c.delta_tilde.iter().zip(&c.xi_over_n) {
            csv.push_str(&format!("{x},{},{y}\n", c.n_sites));
        }
    }
    write_text(&dir.join("fss.csv"), &csv)?;
    write_text(
        &dir.join("fss_report.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    let plot = LinePlot {
        title: format!("Relative correlation length, beta = {beta}"),
        x_label: "delta_tilde".into(),
        y_label: "xi / N".into(),
        series: curves
            .iter()
            .map(|c| Series {
                label: format!("N = {}", c.n_sites),
                points: c
                    .delta_tilde
                    .iter()
                    .copied()
                    .zip(c.xi_over_n.iter().copied())
                    .collect(),
            })
            .collect(),
        vlines: report.center.into_iter().collect(),
        ..Default::default()
    };
    write_text(&dir.join("fss.svg"), &plot.render())?;
    let status = match report.status {
        FssStatus::CommonCrossing => "common crossing",
        FssStatus::NoCommonCrossing => "no common crossing",
        FssStatus::Degenerate => "degenerate input",
    };
    emit(
        out,
        &json!({"status": status, "report": report, "sweep_dir": dir}),
    )?;
    Ok(0)
}

pub fn cmd_appendix(args: &AppendixArgs, out: &mut dyn Write) -> Result<()> {
    let a = merge_config(args, args.config.as_deref())?;
    let circuit = a.circuit.with_defaults();
    let n = a.n.unwrap_or(512);
    let max_order = a.max_order.unwrap_or(4);
    if max_order == 0 {
        return Err(Error::invalid("--max-order must be at least 1"));
    }
    let policy = PrefactorPolicy::default();
    let sol = solve_variational(&circuit.params(n)?)?;
    let mut rows = appendix_table(&sol, &policy, max_order)?;
    let ordering = appendix_ordering(&rows);
    rows.sort_by(|x, y| y.log_value.total_cmp(&x.log_value));

    let lengths = match &a.n_list {
        Some(l) => parse_n_list(l)?,
        None => vec![16, 32, 64, 128, 256, 512],
    };
    let mut by_n = Vec::new();
    for &m in &lengths {
        let s = solve_variational(&circuit.params(m)?)?;
        by_n.push((m, appendix_table(&s, &policy, max_order)?));
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        let mut csv = String::from("n_cells,order,label,odd_pairs,log_amplitude,log_value\n");
        for (m, table) in &by_n {
            for r in table {
                csv.push_str(&format!(
                    "{m},{},{},{},{},{}\n",
                    r.amplitude.order,
                    r.amplitude.label,
                    r.amplitude.odd_pairs,
                    r.amplitude.log_amplitude,
                    r.log_value
                ));
            }
        }
        write_text(&dir.join("appendix.csv"), &csv)?;
        let labels: Vec<(usize, String)> = by_n
            .first()
            .map(|(_, t)| {
                t.iter()
                    .map(|r| (r.amplitude.order, r.amplitude.label.clone()))
                    .collect()
            })
            .unwrap_or_default();
        let series = labels
            .iter()
            .map(|(order, label)| Series {
                label: format!("{order}: {label}"),
                points: by_n
                    .iter()
                    .filter_map(|(m, t)| {
                        t.iter()
                            .find(|r| r.amplitude.order == *order && &r.amplitude.label == label)
                            .map(|r| (*m as f64, r.log_value))
                    })
                    .collect(),
            })
            .collect();
        let plot = LinePlot {
            title: "Multi-cell flip amplitudes".into(),
            x_label: "N".into(),
            y_label: "ln(amplitude / hbar Omega)".into(),
            log_x: true,
            series,
            ..Default::default()
        };
        write_text(&dir.join("appendix.svg"), &plot.render())?;
    }
    match a.format.unwrap_or(Format::Json) {
        Format::Json => emit(
            out,
            &json!({"n_cells": n, "rows": rows, "ordering": ordering, "holds": ordering.holds()}),
        ),
        Format::Csv => {
            writeln!(out, "order,label,odd_pairs,log_amplitude,log_value")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.amplitude.order,
                    r.amplitude.label,
                    r.amplitude.odd_pairs,
                    r.amplitude.log_amplitude,
                    r.log_value
                )?;
            }
            Ok(())
        }
        Format::Svg => Err(Error::invalid(
            "appendix writes SVG with --out; --format takes json or csv",
        )),
    }
}

pub fn cmd_single_cell(args: &SingleCellArgs, out: &mut dyn Write) -> Result<()> {
    let a = merge_config(args, args.config.as_deref())?;
    let params = a.circuit.params(1)?;
    let cell = single_cell_derived(&params)?;
    let wkb = wkb_amplitude(&params)?;
    let variational = single_block_exponent(&params)?;
    emit(
        out,
        &json!({
            "alpha": params.alpha,
            "gamma": params.gamma,
            "ej_over_ec": params.ej_over_ec,
            "u0": cell.u0,
            "barrier": cell.barrier,
            "hbar_omega": cell.omega,
            "m_eff": cell.m_eff,
            "wkb_exponent": wkb.exponent,
            "wkb_delta": wkb.delta,
            "variational_exponent": variational,
            "exponent_ratio": if wkb.exponent != 0.0 { Some(variational / wkb.exponent) } else { None },
        }),
    )
}

/// Runs a parsed command; the return value is the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Map(a) => cmd_map(a, out).map(|_| 0),
        Command::Ed(a) => cmd_ed(a, out).map(|_| 0),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Fss(a) => cmd_fss(a, out),
        Command::Appendix(a) => cmd_appendix(a, out).map(|_| 0),
        Command::SingleCell(a) => cmd_single_cell(a, out).map(|_| 0),
    }
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
