//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that every line is printed. Pass
//! criterion numbers as arguments to run a subset (`cargo test --test
//! acceptance -- 4 5`). The process fails if any selected criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sawtooth_xx::circuit::CircuitParams;
use sawtooth_xx::observables::{fss_crossings, gap, FssStatus, ObservableSet};
use sawtooth_xx::spinchain::{
    apply_hamiltonian, apply_parity, dense_hamiltonian, dense_oracle, lowest_two, reflect_state,
    ChainSpec, EigenResult,
};
use sawtooth_xx::stats::{arange, fit_line};
use sawtooth_xx::sweep::{run_sweep, SweepPlan};
use sawtooth_xx::variational::{
    appendix_ordering, appendix_table, exchange_couplings, map_circuit, single_block_exponent,
    solve_variational, wkb_amplitude, PrefactorPolicy,
};

const DEGENERACY_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_spec(rng: &mut ChaCha8Rng, n_max: usize) -> ChainSpec {
    let n = rng.gen_range(1..=n_max);
    let dt = rng.gen_range(-15.0..=15.0);
    // (0, 5]
    let beta = 5.0 - rng.gen_range(0.0..5.0);
    ChainSpec::power_law(n, dt, beta).unwrap()
}

fn default_circuit(n: usize) -> CircuitParams {
    CircuitParams::new(-0.8, 1.0, 80.0, n).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let spec = random_spec(&mut rng, 10);
        let eig = lowest_two(&spec, k).unwrap();
        let dense = dense_oracle(&spec).unwrap();
        let e1_ref = dense
            .eigenvalues
            .get(1)
            .copied()
            .unwrap_or(dense.eigenvalues[0]);
        worst = worst
            .max((eig.e0 - dense.eigenvalues[0]).abs())
            .max((eig.e1 - e1_ref).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && elapsed < Duration::from_secs(120),
        format!(
            "50 specs, max |Δe| = {worst:.2e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for dt in [-7.5, -1.0, -0.3, 0.0, 0.25, 2.0, 13.0] {
        let spec = ChainSpec::power_law(1, dt, 1.0).unwrap();
        let eig = lowest_two(&spec, 3).unwrap();
        worst = worst.max((eig.e1 - eig.e0 - 2.0 * f64::abs(dt)).abs());
    }
    let mut worst2: f64 = 0.0;
    for beta in [0.1, 1.0, 4.5] {
        let spec = ChainSpec::power_law(2, 0.0, beta).unwrap();
        let eig = lowest_two(&spec, 3).unwrap();
        worst2 = worst2.max((gap(&eig, DEGENERACY_TOL) - 2.0).abs());
    }
    outcome(
        worst <= 1e-12 && worst2 <= 1e-12,
        format!("N=1 max |G - 2|Δ̃|| = {worst:.2e}, N=2 max |G - 2| = {worst2:.2e}"),
    )
}

fn reflected(eig: &EigenResult) -> EigenResult {
    EigenResult {
        v0: reflect_state(eig.n_sites, &eig.v0),
        v1: reflect_state(eig.n_sites, &eig.v1),
        ..eig.clone()
    }
}

fn max_observable_diff(a: &ObservableSet, b: &ObservableSet) -> f64 {
    let mut d = (a.mx - b.mx).abs().max((a.xi - b.xi).abs());
    for (x, y) in a.cy.iter().zip(&b.cy).chain(a.cx.iter().zip(&b.cx)) {
        d = d.max((x - y).abs());
    }
    for ((_, x), (_, y)) in a.s_of_q.iter().zip(&b.s_of_q) {
        d = d.max((x - y).abs());
    }
    d
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut herm, mut parity, mut flip, mut reflect): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..30 {
        let spec = random_spec(&mut rng, 9);
        let dim = spec.dimension();
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hu = apply_hamiltonian(&spec, &u).unwrap();
        let hv = apply_hamiltonian(&spec, &v).unwrap();
        let lhs: f64 = u.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let rhs: f64 = hu.iter().zip(&v).map(|(a, b)| a * b).sum();
        herm = herm.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        let h = dense_hamiltonian(&spec).unwrap();
        herm = herm.max((&h - h.transpose()).amax());

        let phv = apply_parity(&hv);
        let hpv = apply_hamiltonian(&spec, &apply_parity(&v)).unwrap();
        parity = parity.max(
            phv.iter()
                .zip(&hpv)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );

        let plus = dense_oracle(&spec).unwrap().eigenvalues;
        let minus = dense_oracle(&spec.with_delta_tilde(-spec.delta_tilde))
            .unwrap()
            .eigenvalues;
        flip = flip.max(
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );

        let eig = lowest_two(&spec, k).unwrap();
        let a = ObservableSet::from_eigen(&spec, &eig, DEGENERACY_TOL).unwrap();
        let b = ObservableSet::from_eigen(&spec, &reflected(&eig), DEGENERACY_TOL).unwrap();
        reflect = reflect.max(max_observable_diff(&a, &b));
    }
    let worst = herm.max(parity).max(flip).max(reflect);
    outcome(
        worst <= 1e-10,
        format!(
            "30 specs: hermiticity {herm:.1e}, parity {parity:.1e}, field sign {flip:.1e}, reflection {reflect:.1e}"
        ),
    )
}

fn scratch_plan(id: &str, dir: &std::path::Path) -> SweepPlan {
    SweepPlan::default_grid(id, dir)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let plan = SweepPlan {
        beta: vec![0.1, 1.0, 4.5],
        ..scratch_plan("gap", dir.path())
    };
    let out = run_sweep(&plan).unwrap();
    let mut pass = out.manifest.failed == 0;
    let mut parts = Vec::new();
    for beta in [0.1, 1.0, 4.5] {
        let rows: Vec<(f64, f64)> = out
            .records
            .iter()
            .filter(|r| r.beta == beta)
            .map(|r| (r.delta_tilde, r.observables.gap))
            .collect();
        let side = |sign: f64| {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|(d, _)| sign * d >= 8.0)
                .map(|&(d, g)| (d.abs(), g))
                .unzip();
            fit_line(&x, &y).unwrap().slope
        };
        let (up, down) = (side(1.0), side(-1.0));
        let g_min = rows
            .iter()
            .filter(|(d, _)| d.abs() < 2.0)
            .map(|&(_, g)| g)
            .fold(f64::INFINITY, f64::min);
        let ok = (up - 2.0).abs() <= 0.1 && (down - 2.0).abs() <= 0.1 && g_min < 0.2;
        pass &= ok;
        parts.push(format!(
            "β={beta}: slopes {up:.3}/{down:.3}, min G {g_min:.3}{}",
            if ok { "" } else { " (out of tolerance)" }
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!("N=12; {}; {:.0} s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

/// Large-field slope at β = 0.1 beyond the pinned window, for the record.
fn criterion_4_diagnostic() -> String {
    let slope = |lo: f64, hi: f64| {
        let grid = arange(lo, hi, 2.0);
        let gaps: Vec<f64> = grid
            .iter()
            .map(|&dt| {
                let spec = ChainSpec::power_law(12, dt, 0.1).unwrap();
                gap(&lowest_two(&spec, 0).unwrap(), DEGENERACY_TOL)
            })
            .collect();
        fit_line(&grid, &gaps).unwrap().slope
    };
    format!(
        "β=0.1 slope over Δ̃ ∈ [8,15]: {:.3}, over [40,60]: {:.3}, over [100,120]: {:.3}",
        slope(8.0, 15.0),
        slope(40.0, 60.0),
        slope(100.0, 120.0)
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let plan = SweepPlan {
        delta_tilde: arange(0.0, 6.0, 0.1),
        beta: vec![1.5, 4.5],
        n_sites: vec![6, 8, 10, 12, 14],
        ..scratch_plan("fss", dir.path())
    };
    let out = run_sweep(&plan).unwrap();
    let high = fss_crossings(&out.fss_curves(4.5)).unwrap();
    let low = fss_crossings(&out.fss_curves(1.5)).unwrap();
    let center = high.center.unwrap_or(f64::NAN);
    let pass = out.manifest.failed == 0
        && high.status == FssStatus::CommonCrossing
        && (2.5..=3.5).contains(&center)
        && low.status == FssStatus::NoCommonCrossing;
    let fmt = |d: Option<f64>| d.map_or("none".to_string(), |v| format!("{v:.3}"));
    outcome(
        pass,
        format!(
            "β=4.5: {:?}, center {}, dispersion {}; β=1.5: {:?}, dispersion {}; {:.0} s",
            high.status,
            fmt(high.center),
            fmt(high.dispersion),
            low.status,
            fmt(low.dispersion),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let policy = PrefactorPolicy::default();
    let ell0 = map_circuit(&default_circuit(64), &policy)
        .unwrap()
        .ell0
        .unwrap();
    let lo = (4.0 * ell0).ceil() as usize;
    let hi = (64.0 * ell0).floor() as usize;
    let mut ns: Vec<usize> = (0..=16)
        .map(|k| (lo as f64 * (hi as f64 / lo as f64).powf(k as f64 / 16.0)).round() as usize)
        .collect();
    ns.dedup();
    let (mut x, mut y, mut j1) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &ns {
        let m = map_circuit(&default_circuit(n), &policy).unwrap();
        x.push((n as f64).ln());
        y.push(m.log_delta);
        j1.push(m.j1);
    }
    let fit = fit_line(&x, &y).unwrap();
    let jmax = j1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let jmin = j1.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = (jmax - jmin) / jmin;
    outcome(
        fit.r2 > 0.99 && spread < 0.2,
        format!(
            "ℓ0 = {ell0:.3}, N ∈ [{lo}, {hi}]: R² = {:.6}, slope {:.3}, J(1) spread {:.2}%",
            fit.r2,
            fit.slope,
            100.0 * spread
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for gamma in [0.1, 0.5, 1.5] {
        let params = CircuitParams::new(-0.8, gamma, 80.0, 1000).unwrap();
        let m = map_circuit(&params, &PrefactorPolicy::default()).unwrap();
        let (Some(fit), Some(r2)) = (m.beta_fit, m.beta_fit_r2) else {
            pass = false;
            parts.push(format!("γ={gamma}: no fit"));
            continue;
        };
        let rel = fit / m.beta_analytic - 1.0;
        pass &= rel.abs() <= 0.1 && r2 > 0.995;
        parts.push(format!(
            "γ={gamma}: β_fit {fit:.3} vs {:.3} ({:+.1}%), R² {r2:.5}",
            m.beta_analytic,
            100.0 * rel
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let ratio = |alpha: f64| {
        let p = CircuitParams::new(alpha, 1.0, 80.0, 1).unwrap();
        single_block_exponent(&p).unwrap() / wkb_amplitude(&p).unwrap().exponent
    };
    let r = ratio(-0.501);
    outcome(
        (r - 0.75).abs() <= 0.02,
        format!(
            "ratio at α=-0.501: {r:.4} (α=-0.51: {:.4}, α=-0.8: {:.4})",
            ratio(-0.51),
            ratio(-0.8)
        ),
    )
}

fn criterion_9() -> Outcome {
    let sol = solve_variational(&default_circuit(512)).unwrap();
    let rows = appendix_table(&sol, &PrefactorPolicy::default(), 4).unwrap();
    let report = appendix_ordering(&rows);
    let mut detail = format!(
        "N=512, {} amplitudes: between orders {}, leading amplitudes descending {}, within orders {}",
        rows.len(),
        report.between_orders,
        report.leading_descending,
        report.within_orders
    );
    if let Some(v) = report.violations.first() {
        detail.push_str(&format!(
            "; {} violation(s), first: {v}",
            report.violations.len()
        ));
    }
    outcome(report.holds(), detail)
}

fn criterion_10() -> Outcome {
    let params = default_circuit(256);
    let sol = solve_variational(&params).unwrap();
    let base = exchange_couplings(&sol, &PrefactorPolicy::default()).unwrap();
    let mut worst: f64 = 0.0;
    for c in [1e-3, 0.37, 2.0, 55.0] {
        let scaled = exchange_couplings(&sol, &PrefactorPolicy { delta0: c, j0: c }).unwrap();
        worst = worst.max(
            (scaled.delta_tilde.unwrap() / base.delta_tilde.unwrap() - 1.0).abs()
                + (scaled.beta_fit.unwrap() - base.beta_fit.unwrap()).abs(),
        );
        for (a, b) in scaled.j_table.iter().zip(&base.j_table) {
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    let skewed = exchange_couplings(
        &sol,
        &PrefactorPolicy {
            delta0: 1.0,
            j0: 3.0,
        },
    )
    .unwrap();
    let shift = skewed.delta_tilde.unwrap() / base.delta_tilde.unwrap();
    outcome(
        worst <= 1e-12 && (shift - 1.0 / 3.0).abs() <= 1e-12,
        format!(
            "shape quantities invariant under a common prefactor (max deviation {worst:.1e}); \
             Δ̃ scales as Δ0/J0 ({shift:.6} for J0 = 3Δ0); absolute curve values depend on \
             the prefactors and the k-grid convention and are not claimed reproducible"
        ),
    )
}

fn main() {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [(usize, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = Vec::new();
    for (k, run) in criteria {
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let o = run();
        println!(
            "criterion {k}: {} {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if k == 4 && !o.pass {
            println!("  note: {}", criterion_4_diagnostic());
        }
        if !o.pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
