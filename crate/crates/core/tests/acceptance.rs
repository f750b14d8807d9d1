//! Acceptance criteria A1-A12, one PASS/FAIL line each.
//!
//! `QJUMP_ACCEPTANCE=A1,A7` restricts the run to the listed criteria.
//! `QJUMP_ACCEPTANCE_STRICT=1` turns any FAIL into a non-zero exit status;
//! by default the process reports every verdict and exits 0 so that known
//! failures stay visible without blocking the rest of the test run.

use std::time::{Duration, Instant};

use qjump::dynamics::{
    cdw_state, fock_state, grand_canonical, jump_hierarchy, propagate, Diagnostics, ObservableSeries, ObservableSet,
    Route, TimeGrid, Trajectory, TrajectoryOptions,
};
use qjump::ensemble::Execution;
use qjump::experiments::{run_dynamics_scan, run_nh_spectral_scan, run_spectral_scan, ExperimentKind, RunConfig, Table};
use qjump::fock::number_operator;
use qjump::linalg::max_abs_diff;
use qjump::model::{build_hamiltonian, build_jumps, sample_disorder, DisorderRealization};
use qjump::mpdo::{tebd_run, TebdConfig};
use qjump::spectra::{csr_summary, reference_ensemble, ReferenceKind};
use qjump::superop::{build_sector_liouvillian, build_zeta_liouvillian, symmetry_residual, ChargeKind};
use qjump::{FockBasis, ModelParams, Result, Superoperator};

const POISSON_R: f64 = 2.0 / 3.0;

/// Worst state-sanity figures seen on dense trajectories.
#[derive(Debug)]
struct Sanity {
    trace: f64,
    hermiticity: f64,
    min_eigenvalue: f64,
    trajectories: usize,
}

impl Sanity {
    fn new() -> Self {
        Self {
            trace: 0.0,
            hermiticity: 0.0,
            min_eigenvalue: f64::INFINITY,
            trajectories: 0,
        }
    }

    fn absorb(&mut self, tr: &Trajectory) -> Result<()> {
        let d: Diagnostics = tr.diagnostics;
        let end = tr.final_state.sanity(true)?;
        self.trace = self.trace.max(d.max_trace_drift).max(end.trace_error);
        self.hermiticity = self.hermiticity.max(d.max_hermiticity).max(end.hermiticity);
        if !d.min_eigenvalue.is_nan() {
            self.min_eigenvalue = self.min_eigenvalue.min(d.min_eigenvalue);
        }
        self.min_eigenvalue = self.min_eigenvalue.min(end.min_eigenvalue);
        self.trajectories += 1;
        Ok(())
    }

    fn absorb_values(&mut self, trace: f64, herm: f64, min_ev: f64) {
        self.trace = self.trace.max(trace);
        self.hermiticity = self.hermiticity.max(herm);
        self.min_eigenvalue = self.min_eigenvalue.min(min_ev);
        self.trajectories += 1;
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn chain(sites: usize, h: f64, seed: u64) -> Result<(ModelParams, FockBasis, qjump::SparseOperator, Vec<qjump::SparseOperator>)> {
    let p = ModelParams::new(sites, h);
    let b = FockBasis::new(sites, None)?;
    let ham = build_hamiltonian(&b, &p, &sample_disorder(&p, seed))?;
    let jumps = build_jumps(&b, &p)?;
    Ok((p, b, ham, jumps))
}

fn dense_run(
    sup: &Superoperator,
    b: &FockBasis,
    p: &ModelParams,
    rho0: &qjump::dynamics::DensityMatrix,
    grid: TimeGrid,
    route: Route,
    sanity: &mut Sanity,
) -> Result<Trajectory> {
    let mut opts = TrajectoryOptions::new(grid);
    opts.route = route;
    opts.positivity_every = 1;
    let tr = propagate(rho0, sup, &ObservableSet::new(b, p), &opts)?;
    sanity.absorb(&tr)?;
    Ok(tr)
}

fn channel<'a>(s: &'a ObservableSeries, name: &str) -> &'a [f64] {
    s.channel(name).expect("channel present")
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "series lengths");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn col(t: &Table, name: &str) -> Vec<f64> {
    t.column_f64(name).expect("column present")
}

fn a1() -> Result<Verdict> {
    let s = reference_ensemble(ReferenceKind::Ginibre, 200, 50, 1, Execution::Parallel)?;
    let (r, c) = csr_summary(&s)?;
    verdict(
        (r - 0.738).abs() <= 0.010 && (c - 0.244).abs() <= 0.010,
        format!("<r> = {r:.4}, -<cos> = {c:.4}"),
    )
}

fn a2() -> Result<Verdict> {
    let s = reference_ensemble(ReferenceKind::Poisson2d, 10_000, 1, 1, Execution::Parallel)?;
    let (r, c) = csr_summary(&s)?;
    verdict(
        (r - POISSON_R).abs() <= 0.010 && c.abs() <= 0.010,
        format!("<r> = {r:.4}, -<cos> = {c:.4}"),
    )
}

fn a3() -> Result<Verdict> {
    let mut cfg = RunConfig::defaults(ExperimentKind::SpectralScan);
    cfg.model.sites = 6;
    cfg.grid.disorder = vec![1.0, 20.0];
    cfg.grid.zeta = vec![1.0];
    cfg.n_samples = 40;
    let t = &run_spectral_scan(&cfg)?[0];
    let r = col(t, "r_mean");
    verdict(
        r[0] - r[1] >= 0.03 && (r[1] - POISSON_R).abs() <= 0.02,
        format!("<r>(h=1) = {:.4}, <r>(h=20) = {:.4}, difference {:.4}", r[0], r[1], r[0] - r[1]),
    )
}

fn a4() -> Result<Verdict> {
    let mut cfg = RunConfig::defaults(ExperimentKind::NhSpectralScan);
    cfg.model.sites = 12;
    cfg.grid.disorder = vec![1.0, 50.0];
    cfg.n_samples = 40;
    let t = &run_nh_spectral_scan(&cfg)?[0];
    let (r, c) = (col(t, "r_mean"), col(t, "cos_mean"));
    verdict(
        (r[1] - POISSON_R).abs() <= 0.02 && c[1].abs() <= 0.02 && (r[0] - POISSON_R).abs() > 0.02,
        format!(
            "h=50: ({:.4}, {:.4}); h=1: <r> = {:.4} (offset {:.4})",
            r[1],
            c[1],
            r[0],
            r[0] - POISSON_R
        ),
    )
}

/// Steady states of A5, reused by A6 and A12.
fn steady_scan() -> Result<Vec<Table>> {
    let mut cfg = RunConfig::defaults(ExperimentKind::DynamicsScan);
    cfg.model.sites = 8;
    cfg.grid.disorder = vec![1.0, 20.0];
    cfg.grid.zeta = vec![1.0];
    cfg.n_samples = 20;
    run_dynamics_scan(&cfg)
}

fn a5(tables: &[Table]) -> Result<Verdict> {
    let (summary, samples) = (&tables[0], &tables[1]);
    let imb = col(summary, "imbalance_mean");
    let converged = col(summary, "n_converged");
    let number_dev = col(samples, "number").iter().map(|n| (n - 4.0).abs()).fold(0.0, f64::max);
    verdict(
        imb[1] > 0.9 && imb[0] < 0.2 && number_dev <= 1e-8 && converged.iter().all(|&n| n == 20.0),
        format!(
            "I(h=20) = {:.4}, I(h=1) = {:.4}, max |N - L/2| = {number_dev:.1e}, converged {}/{} and {}/{}",
            imb[1], imb[0], converged[1], 20, converged[0], 20
        ),
    )
}

fn a6(tables: &[Table]) -> Result<Verdict> {
    let worst = col(&tables[1], "identity_residual").iter().map(|r| r.abs()).fold(0.0, f64::max);
    verdict(worst <= 1e-6, format!("max |A - gamma L (1 - I)| = {worst:.2e} over 40 samples"))
}

fn a7(sanity: &mut Sanity) -> Result<Verdict> {
    let (p, b, ham, jumps) = chain(3, 5.0, 1)?;
    let rho0 = fock_state(&b, 0b101)?;
    let grid = TimeGrid::new(0.005, 10.0, 0.5);
    let mut triangle: f64 = 0.0;
    for zeta in [0.0, 0.4, 1.0] {
        let sup = build_zeta_liouvillian(&ham, &jumps, zeta)?;
        let lin = dense_run(&sup, &b, &p, &rho0, grid, Route::Linear, sanity)?.final_state;
        let non = dense_run(&sup, &b, &p, &rho0, grid, Route::Nonlinear, sanity)?.final_state;
        let (res, _) = grand_canonical(&jump_hierarchy(&rho0, &sup, 40, grid, 1e-8)?, zeta)?;
        triangle = triangle
            .max(max_abs_diff(&lin.matrix, &non.matrix))
            .max(max_abs_diff(&lin.matrix, &res.matrix))
            .max(max_abs_diff(&non.matrix, &res.matrix));
    }

    // pumped single site from empty: Tr rho_0 = e^{-2 gamma t}, Tr rho_1 = 1 - e^{-2 gamma t}
    let p1 = ModelParams::new(1, 0.0);
    let b1 = FockBasis::new(1, None)?;
    let h1 = build_hamiltonian(&b1, &p1, &DisorderRealization::clean(1))?;
    let j1 = build_jumps(&b1, &p1)?;
    let empty = fock_state(&b1, 0)?;
    let g2 = 2.0 * p1.gamma;
    let mut closed: f64 = 0.0;
    for zeta in [0.0, 0.4, 1.0] {
        let sup = build_zeta_liouvillian(&h1, &j1, zeta)?;
        let hier = jump_hierarchy(&empty, &sup, 2, grid, 1e-8)?;
        for (t, tr) in &hier.trace_history {
            let e = (-g2 * t).exp();
            closed = closed.max((tr[0] - e).abs()).max((tr[1] - (1.0 - e)).abs()).max(tr[2].abs());
        }
        let run = dense_run(&sup, &b1, &p1, &empty, grid, Route::Linear, sanity)?;
        for ((t, n), lz) in run
            .series
            .times
            .iter()
            .zip(channel(&run.series, "number"))
            .zip(channel(&run.series, "log_z"))
        {
            let e = (-g2 * t).exp();
            let z = e + zeta * (1.0 - e);
            closed = closed.max((n - zeta * (1.0 - e) / z).abs()).max((lz.exp() - z).abs());
        }
    }
    verdict(
        triangle <= 1e-6 && closed <= 1e-8,
        format!("pairwise route difference {triangle:.2e}, closed-form deviation {closed:.2e}"),
    )
}

fn a8() -> Result<Verdict> {
    let mut minus: f64 = 0.0;
    let mut plus_free: f64 = 0.0;
    let mut plus_full = f64::INFINITY;
    for sites in [2, 3] {
        let (_, b, ham, jumps) = chain(sites, 5.0, 1)?;
        let n = number_operator(&b);
        for zeta in [0.0, 0.5, 1.0] {
            let sup = build_zeta_liouvillian(&ham, &jumps, zeta)?;
            minus = minus.max(symmetry_residual(&sup, &n, ChargeKind::NMinus, 1 << 12)?);
        }
        let free = build_zeta_liouvillian(&ham, &jumps, 0.0)?;
        plus_free = plus_free.max(symmetry_residual(&free, &n, ChargeKind::NPlus, 1 << 12)?);
        let full = build_zeta_liouvillian(&ham, &jumps, 1.0)?;
        plus_full = plus_full.min(symmetry_residual(&full, &n, ChargeKind::NPlus, 1 << 12)?);
    }
    verdict(
        minus <= 1e-12 && plus_free <= 1e-12 && plus_full > 0.0,
        format!("|[L, N-]| = {minus:.1e}, |[L0, N+]| = {plus_free:.1e}, |[L1, N+]| = {plus_full:.3}"),
    )
}

fn a9(sanity: &mut Sanity) -> Result<Verdict> {
    let (p, b, ham, jumps) = chain(8, 20.0, 1)?;
    let rho0 = cdw_state(&b)?;
    let mut worst: f64 = 0.0;
    let mut residue: f64 = 0.0;
    let mut reference_gap: f64 = 0.0;
    let mut parts = Vec::new();
    for zeta in [0.2, 1.0] {
        let sup = build_sector_liouvillian(&b, &ham, &jumps, zeta, 0)?;
        let exact = dense_run(&sup, &b, &p, &rho0, TimeGrid::new(0.0025, 100.0, 0.1), Route::Nonlinear, sanity)?;
        let check = dense_run(&sup, &b, &p, &rho0, TimeGrid::new(0.005, 100.0, 0.1), Route::Nonlinear, sanity)?;
        let exact_i = channel(&exact.series, "imbalance");
        reference_gap = reference_gap.max(max_dev(exact_i, channel(&check.series, "imbalance")));

        let mut tc = TebdConfig::new(p.clone(), sample_disorder(&p, 1), zeta);
        tc.chi_max = 64;
        tc.grid = TimeGrid::new(0.01, 100.0, 0.1);
        let run = tebd_run(&tc)?;
        let dev = max_dev(channel(&run.series, "imbalance"), exact_i);
        worst = worst.max(dev);
        residue = residue.max(run.meta.max_imag_residue);
        parts.push(format!("zeta={zeta}: {dev:.2e} (bond {})", run.meta.max_bond));
    }
    verdict(
        worst <= 1e-5 && residue <= 1e-5,
        format!(
            "max |I_tebd - I_exact| {}; imaginary residue {residue:.1e}; reference step check {reference_gap:.1e}",
            parts.join(", ")
        ),
    )
}

fn a10() -> Result<Verdict> {
    let p = ModelParams::new(16, 20.0);
    let dis = sample_disorder(&p, 1);
    let mut imb = Vec::new();
    let mut residue: f64 = 0.0;
    let mut discarded = Vec::new();
    for chi in [32, 64] {
        let mut tc = TebdConfig::new(p.clone(), dis.clone(), 0.2);
        tc.chi_max = chi;
        tc.grid = TimeGrid::new(0.01, 20.0, 0.1);
        let run = tebd_run(&tc)?;
        residue = residue.max(run.meta.max_imag_residue);
        discarded.push(run.meta.discarded_weight);
        imb.push(channel(&run.series, "imbalance").to_vec());
    }
    let dev = max_dev(&imb[0], &imb[1]);
    verdict(
        dev < 1e-5,
        format!(
            "max |I(chi=32) - I(chi=64)| = {dev:.2e} over t <= 20; discarded weight {:.1e} / {:.1e}",
            discarded[0], discarded[1]
        ),
    )
}

fn a11(sanity: &mut Sanity) -> Result<Verdict> {
    let (p, b, ham, jumps) = chain(4, 2.0, 1)?;
    let zeta = 0.6;
    let sup = build_sector_liouvillian(&b, &ham, &jumps, zeta, 0)?;
    let rho0 = cdw_state(&b)?;
    let t_max = 2.0;
    let state = |dt: f64, sanity: &mut Sanity| -> Result<Trajectory> {
        dense_run(&sup, &b, &p, &rho0, TimeGrid::new(dt, t_max, 0.2), Route::Linear, sanity)
    };
    let fine = state(0.00125, sanity)?;
    // deliberately under-resolved runs are kept out of the production sanity record
    let mut study = Sanity::new();
    let coarse = state(0.1, &mut study)?;
    let half = state(0.05, &mut study)?;
    let e1 = max_abs_diff(&coarse.final_state.matrix, &fine.final_state.matrix);
    let e2 = max_abs_diff(&half.final_state.matrix, &fine.final_state.matrix);
    let rk_ratio = e1 / e2;

    let tebd_dev = |dt: f64| -> Result<f64> {
        let mut tc = TebdConfig::new(p.clone(), sample_disorder(&p, 1), zeta);
        tc.chi_max = 64;
        tc.grid = TimeGrid::new(dt, t_max, 0.2);
        let run = tebd_run(&tc)?;
        Ok(max_dev(channel(&run.series, "imbalance"), channel(&fine.series, "imbalance"))
            .max(max_dev(channel(&run.series, "number"), channel(&fine.series, "number"))))
    };
    let tebd_ratio = tebd_dev(0.1)? / tebd_dev(0.05)?;
    verdict(
        (rk_ratio - 16.0).abs() <= 3.0 && (tebd_ratio - 4.0).abs() <= 0.75,
        format!(
            "RK4 ratio {rk_ratio:.2} (errors {e1:.1e}, {e2:.1e}); TEBD ratio {tebd_ratio:.2}; \
             min eigenvalue of the step-halving runs {:.1e}",
            study.min_eigenvalue
        ),
    )
}

fn a12(sanity: &Sanity) -> Result<Verdict> {
    verdict(
        sanity.trajectories > 0
            && sanity.trace <= 1e-8
            && sanity.hermiticity <= 1e-10
            && sanity.min_eigenvalue >= -1e-8,
        format!(
            "{} dense trajectories: trace {:.1e}, hermiticity {:.1e}, min eigenvalue {:.1e}",
            sanity.trajectories, sanity.trace, sanity.hermiticity, sanity.min_eigenvalue
        ),
    )
}

struct Report {
    selected: Option<Vec<String>>,
    failures: usize,
    errors: usize,
}

impl Report {
    fn wants(&self, id: &str) -> bool {
        self.selected.as_ref().is_none_or(|s| s.iter().any(|x| x == id))
    }

    fn record(&mut self, id: &str, limit: Duration, f: impl FnOnce() -> Result<Verdict>) {
        if !self.wants(id) {
            return;
        }
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        match outcome {
            Ok(v) => {
                let pass = v.pass && elapsed <= limit;
                if !pass {
                    self.failures += 1;
                }
                println!(
                    "{id} {} {} [{:.1} s of {} s]",
                    if pass { "PASS" } else { "FAIL" },
                    v.detail,
                    elapsed.as_secs_f64(),
                    limit.as_secs()
                );
            }
            Err(e) => {
                self.failures += 1;
                self.errors += 1;
                println!("{id} FAIL error: {e} [{:.1} s]", elapsed.as_secs_f64());
            }
        }
    }
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn main() {
    let selected = std::env::var("QJUMP_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_uppercase()).collect::<Vec<_>>());
    let strict = std::env::var("QJUMP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut report = Report {
        selected,
        failures: 0,
        errors: 0,
    };
    let mut sanity = Sanity::new();

    report.record("A1", minutes(2), a1);
    report.record("A2", Duration::from_secs(10), a2);
    report.record("A3", minutes(30), a3);
    report.record("A4", minutes(30), a4);
    let steady = if report.wants("A5") || report.wants("A6") || report.wants("A12") {
        let start = Instant::now();
        let tables = steady_scan();
        Some((tables, start.elapsed()))
    } else {
        None
    };
    if let Some((tables, elapsed)) = &steady {
        match tables {
            Ok(t) => {
                let samples = &t[1];
                for k in 0..samples.rows.len() {
                    sanity.absorb_values(
                        col(samples, "trace_error")[k],
                        col(samples, "hermiticity")[k],
                        col(samples, "min_eigenvalue")[k],
                    );
                }
                let limit = minutes(60).saturating_sub(*elapsed);
                report.record("A5", limit, || a5(t));
                report.record("A6", minutes(60), || a6(t));
            }
            Err(e) => {
                let msg = e.to_string();
                report.record("A5", minutes(60), || Err(qjump::Error::Config(msg.clone())));
                report.record("A6", minutes(60), || Err(qjump::Error::Config(msg)));
            }
        }
    }
    report.record("A7", minutes(5), || a7(&mut sanity));
    report.record("A8", minutes(1), a8);
    report.record("A9", minutes(30), || a9(&mut sanity));
    report.record("A10", minutes(60), a10);
    report.record("A11", minutes(10), || a11(&mut sanity));
    report.record("A12", minutes(1), || a12(&sanity));

    println!(
        "acceptance: {} failing criteria ({} with errors){}",
        report.failures,
        report.errors,
        if strict { "" } else { "; set QJUMP_ACCEPTANCE_STRICT=1 to fail the run" }
    );
    if strict && report.failures > 0 {
        std::process::exit(1);
    }
}
