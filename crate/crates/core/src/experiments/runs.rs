use super::config::{ExperimentKind, RunConfig};
use super::table::{tag, Cell, Table};
use crate::dynamics::{
    cdw_state, find_steady_state, propagate, steady_activity, ObservableSeries, ObservableSet, TimeGrid,
    TrajectoryOptions,
};
use crate::ensemble::{map_indexed, mean_and_stderr, sample_seed};
use crate::fock::FockBasis;
use crate::model::{build_hamiltonian, build_jumps, build_nonhermitian, sample_disorder, ModelParams};
use crate::mpdo::{tebd_run, TebdConfig};
use crate::spectra::{
    csr_density, csr_summary, eigenvalues, reference_ensemble, spacing_ratios, CSRSamples, ReferenceKind,
    SpectrumSource,
};
use crate::superop::{build_sector_liouvillian, Superoperator};
use crate::{Error, Result};

/// One unit of work: grid point `(h, zeta)` and sample index.
#[derive(Clone, Copy, Debug)]
struct Job {
    h: usize,
    z: usize,
    sample: usize,
}

fn jobs(cfg: &RunConfig, zetas: usize) -> Vec<Job> {
    let mut out = Vec::new();
    for h in 0..cfg.grid.disorder.len() {
        for z in 0..zetas {
            for sample in 0..cfg.n_samples {
                out.push(Job { h, z, sample });
            }
        }
    }
    out
}

/// Runs every job and returns the results grouped per grid point, each
/// group in sample order.
fn run_jobs<T: Send>(
    cfg: &RunConfig,
    zetas: &[f64],
    f: impl Fn(&ModelParams, f64, u64) -> Result<T> + Sync + Send,
) -> Result<Vec<Vec<T>>> {
    let list = jobs(cfg, zetas.len());
    let results = map_indexed(list.len(), cfg.execution, |k| {
        let job = list[k];
        let h = cfg.grid.disorder[job.h];
        let zeta = zetas[job.z];
        let seed = sample_seed(cfg.base_seed, job.sample as u64);
        let mut params = cfg.model.clone();
        params.disorder = h;
        f(&params, zeta, seed).map_err(|e| e.in_sample(h, zeta, seed))
    });
    let mut grouped: Vec<Vec<T>> = Vec::new();
    let mut it = results.into_iter();
    for _ in 0..cfg.grid.disorder.len() * zetas.len() {
        let mut group = Vec::with_capacity(cfg.n_samples);
        for _ in 0..cfg.n_samples {
            group.push(it.next().expect("one result per job")?);
        }
        grouped.push(group);
    }
    Ok(grouped)
}

fn grid_points<'a>(cfg: &'a RunConfig, zetas: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
    cfg.grid
        .disorder
        .iter()
        .flat_map(move |&h| zetas.iter().map(move |&z| (h, z)))
}

fn sector_superoperator(params: &ModelParams, zeta: f64, seed: u64) -> Result<(FockBasis, Superoperator)> {
    let basis = FockBasis::new(params.sites, None)?;
    let ham = build_hamiltonian(&basis, params, &sample_disorder(params, seed))?;
    let jumps = build_jumps(&basis, params)?;
    let sup = build_sector_liouvillian(&basis, &ham, &jumps, zeta, 0)?;
    Ok((basis, sup))
}

fn check_budget(dim: usize, budget: usize) -> Result<()> {
    if dim > budget {
        return Err(Error::Budget { dim, cap: budget });
    }
    Ok(())
}

/// Spacing ratios of the zero-charge Liouvillian block of one realization.
pub fn spectral_sample(params: &ModelParams, zeta: f64, seed: u64, budget: usize) -> Result<CSRSamples> {
    let (_, sup) = sector_superoperator(params, zeta, seed)?;
    check_budget(sup.dim(), budget)?;
    let source = SpectrumSource {
        label: "liouvillian".into(),
        charge: Some(0),
        zeta: Some(zeta),
        disorder: Some(params.disorder),
        seed: Some(seed),
    };
    spacing_ratios(&eigenvalues(&sup.to_dense(), budget, source)?)
}

/// Spacing ratios of the half-filling no-jump Hamiltonian of one realization.
pub fn nh_spectral_sample(params: &ModelParams, seed: u64, cfg: &RunConfig) -> Result<CSRSamples> {
    let basis = FockBasis::new(params.sites, Some(params.sites / 2))?;
    let h = build_nonhermitian(&basis, params, &sample_disorder(params, seed), cfg.solver.offset)?;
    check_budget(basis.dim(), cfg.dense_budget())?;
    let source = SpectrumSource {
        label: "no_jump_hamiltonian".into(),
        disorder: Some(params.disorder),
        seed: Some(seed),
        ..SpectrumSource::default()
    };
    spacing_ratios(&eigenvalues(&h.to_dense(), cfg.dense_budget(), source)?)
}

const DENSITY_COLUMNS: [&str; 7] = ["h", "zeta", "row", "col", "re_center", "im_center", "mass"];

fn push_density(table: &mut Table, pooled: &CSRSamples, bins: usize, h: f64, zeta: f64) -> Result<()> {
    let d = csr_density(pooled, bins)?;
    for (row, masses) in d.mass.iter().enumerate() {
        for (col, &m) in masses.iter().enumerate() {
            table.push(vec![
                h.into(),
                zeta.into(),
                row.into(),
                col.into(),
                d.cell_center(col).into(),
                d.cell_center(row).into(),
                m.into(),
            ]);
        }
    }
    Ok(())
}

/// Summary and per-sample tables shared by both spectral scans.
fn spectral_tables(cfg: &RunConfig, prefix: &str, zetas: &[f64], groups: Vec<Vec<CSRSamples>>) -> Result<Vec<Table>> {
    let mut summary = Table::new(
        prefix,
        &["h", "zeta", "r_mean", "r_stderr", "cos_mean", "cos_stderr", "n_eigs", "n_samples", "base_seed"],
    );
    let mut samples = Table::new(
        format!("{prefix}_samples"),
        &["h", "zeta", "sample", "seed", "r_mean", "cos_mean", "n_eigs"],
    );
    let mut density = Table::new(format!("{prefix}_density"), &DENSITY_COLUMNS);
    for ((h, zeta), group) in grid_points(cfg, zetas).zip(groups) {
        let mut per_r = Vec::with_capacity(group.len());
        let mut per_c = Vec::with_capacity(group.len());
        for (k, s) in group.iter().enumerate() {
            let (r, c) = csr_summary(s)?;
            per_r.push(r);
            per_c.push(c);
            let seed = sample_seed(cfg.base_seed, k as u64);
            samples.push(vec![h.into(), zeta.into(), k.into(), seed.into(), r.into(), c.into(), s.len().into()]);
        }
        let n_eigs = group[0].len();
        let pooled = group.into_iter().fold(CSRSamples::default(), CSRSamples::merge);
        let (r, c) = csr_summary(&pooled)?;
        summary.push(vec![
            h.into(),
            zeta.into(),
            r.into(),
            mean_and_stderr(&per_r).1.into(),
            c.into(),
            mean_and_stderr(&per_c).1.into(),
            n_eigs.into(),
            cfg.n_samples.into(),
            cfg.base_seed.into(),
        ]);
        if cfg.solver.density_bins > 0 {
            push_density(&mut density, &pooled, cfg.solver.density_bins, h, zeta)?;
        }
    }
    let mut out = vec![summary, samples];
    if cfg.solver.density_bins > 0 {
        out.push(density);
    }
    Ok(out)
}

pub fn run_spectral_scan(cfg: &RunConfig) -> Result<Vec<Table>> {
    let budget = cfg.dense_budget();
    let groups = run_jobs(cfg, &cfg.grid.zeta, |p, zeta, seed| spectral_sample(p, zeta, seed, budget))?;
    spectral_tables(cfg, "spectral", &cfg.grid.zeta, groups)
}

/// The no-jump spectrum does not depend on the fugacity; rows carry `zeta = NaN`.
pub fn run_nh_spectral_scan(cfg: &RunConfig) -> Result<Vec<Table>> {
    let zetas = [f64::NAN];
    let groups = run_jobs(cfg, &zetas, |p, _, seed| nh_spectral_sample(p, seed, cfg))?;
    spectral_tables(cfg, "nh_spectral", &zetas, groups)
}

/// Stationary observables of one realization started from the charge-density wave.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadySample {
    pub converged: bool,
    pub imbalance: f64,
    pub activity: f64,
    pub number: f64,
    pub gap: f64,
    pub t_reached: f64,
    pub residual: f64,
    /// `activity - gamma L (1 - imbalance)`, defined at unit fugacity only.
    pub identity_residual: f64,
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

pub fn dynamics_sample(params: &ModelParams, zeta: f64, seed: u64, cfg: &RunConfig) -> Result<SteadySample> {
    let (basis, sup) = sector_superoperator(params, zeta, seed)?;
    let obs = ObservableSet::new(&basis, params);
    let ss = find_steady_state(&cdw_state(&basis)?, &sup, &obs, &cfg.solver.steady)?;
    let act = steady_activity(&sup, &ss.state, &cfg.solver.steady)?;
    let imbalance = ss.observables.imbalance;
    let identity_residual = if zeta == 1.0 {
        act.activity - params.gamma * params.sites as f64 * (1.0 - imbalance)
    } else {
        f64::NAN
    };
    let sanity = ss.state.sanity(true)?;
    Ok(SteadySample {
        converged: ss.converged && act.converged,
        imbalance,
        activity: act.activity,
        number: ss.observables.number,
        gap: ss.gap_estimate.unwrap_or(f64::NAN),
        t_reached: ss.t_reached,
        residual: ss.residual.max(act.residual),
        identity_residual,
        trace_error: sanity.trace_error,
        hermiticity: sanity.hermiticity,
        min_eigenvalue: sanity.min_eigenvalue,
    })
}

/// Averages run over converged samples only; the rest are counted and flagged
/// in the per-sample table.
pub fn run_dynamics_scan(cfg: &RunConfig) -> Result<Vec<Table>> {
    let groups = run_jobs(cfg, &cfg.grid.zeta, |p, zeta, seed| dynamics_sample(p, zeta, seed, cfg))?;
    let mut summary = Table::new(
        "dynamics",
        &[
            "h",
            "zeta",
            "imbalance_mean",
            "imbalance_stderr",
            "activity_mean",
            "activity_stderr",
            "number_mean",
            "gap_mean",
            "t_reached_max",
            "n_converged",
            "n_samples",
            "base_seed",
        ],
    );
    let mut samples = Table::new(
        "dynamics_samples",
        &[
            "h",
            "zeta",
            "sample",
            "seed",
            "converged",
            "imbalance",
            "activity",
            "number",
            "gap",
            "t_reached",
            "residual",
            "identity_residual",
            "trace_error",
            "hermiticity",
            "min_eigenvalue",
        ],
    );
    for ((h, zeta), group) in grid_points(cfg, &cfg.grid.zeta).zip(groups) {
        for (k, s) in group.iter().enumerate() {
            samples.push(vec![
                h.into(),
                zeta.into(),
                k.into(),
                sample_seed(cfg.base_seed, k as u64).into(),
                s.converged.into(),
                s.imbalance.into(),
                s.activity.into(),
                s.number.into(),
                s.gap.into(),
                s.t_reached.into(),
                s.residual.into(),
                s.identity_residual.into(),
                s.trace_error.into(),
                s.hermiticity.into(),
                s.min_eigenvalue.into(),
            ]);
        }
        let ok: Vec<&SteadySample> = group.iter().filter(|s| s.converged).collect();
        let pick = |f: fn(&SteadySample) -> f64| ok.iter().map(|s| f(s)).collect::<Vec<f64>>();
        let (i_mean, i_err) = mean_and_stderr(&pick(|s| s.imbalance));
        let (a_mean, a_err) = mean_and_stderr(&pick(|s| s.activity));
        let gaps: Vec<f64> = pick(|s| s.gap).into_iter().filter(|g| g.is_finite()).collect();
        summary.push(vec![
            h.into(),
            zeta.into(),
            i_mean.into(),
            i_err.into(),
            a_mean.into(),
            a_err.into(),
            mean_and_stderr(&pick(|s| s.number)).0.into(),
            mean_and_stderr(&gaps).0.into(),
            group.iter().map(|s| s.t_reached).fold(0.0, f64::max).into(),
            ok.len().into(),
            cfg.n_samples.into(),
            cfg.base_seed.into(),
        ]);
    }
    Ok(vec![summary, samples])
}

#[derive(Clone, Copy)]
enum Agg {
    /// `<name>_mean` and `<name>_stderr`.
    MeanErr,
    /// `<name>_max`.
    Max,
}

/// Pointwise aggregate of sample series that share one time grid.
fn aggregate(name: String, runs: &[ObservableSeries], channels: &[(&str, Agg)]) -> Table {
    let mut columns = vec!["time".to_string()];
    for &(c, agg) in channels {
        match agg {
            Agg::MeanErr => columns.extend([format!("{c}_mean"), format!("{c}_stderr")]),
            Agg::Max => columns.push(format!("{c}_max")),
        }
    }
    columns.push("n_samples".into());
    let mut table = Table {
        name,
        columns,
        rows: Vec::new(),
        meta: serde_json::Value::Null,
    };
    let times = &runs[0].times;
    let data: Vec<Vec<&[f64]>> = channels
        .iter()
        .map(|(c, _)| runs.iter().map(|r| r.channel(c).expect("channel present")).collect())
        .collect();
    for (i, &t) in times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        for ((_, agg), cols) in channels.iter().zip(&data) {
            let values: Vec<f64> = cols.iter().map(|c| c[i]).collect();
            match agg {
                Agg::MeanErr => {
                    let (m, e) = mean_and_stderr(&values);
                    row.extend([m.into(), e.into()]);
                }
                Agg::Max => row.push(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max).into()),
            }
        }
        row.push(runs.len().into());
        table.push(row);
    }
    table
}

fn final_value(series: &ObservableSeries, channel: &str) -> f64 {
    series.channel(channel).and_then(|c| c.last().copied()).unwrap_or(f64::NAN)
}

pub fn run_transient(cfg: &RunConfig) -> Result<Vec<Table>> {
    let grid = TimeGrid::new(cfg.solver.dt, cfg.solver.t_max, cfg.solver.sample_dt);
    grid.steps()?;
    let groups = run_jobs(cfg, &cfg.grid.zeta, |p, zeta, seed| {
        let (basis, sup) = sector_superoperator(p, zeta, seed)?;
        let obs = ObservableSet::new(&basis, p);
        let mut opts = TrajectoryOptions::new(grid);
        opts.route = cfg.solver.route;
        opts.positivity_every = cfg.solver.positivity_every;
        propagate(&cdw_state(&basis)?, &sup, &obs, &opts)
    })?;
    let mut tables = Vec::new();
    let mut samples = Table::new(
        "transient_samples",
        &[
            "h",
            "zeta",
            "sample",
            "seed",
            "final_imbalance",
            "final_log_z",
            "max_trace_drift",
            "max_hermiticity",
            "min_eigenvalue",
            "max_imag_residue",
        ],
    );
    for ((h, zeta), group) in grid_points(cfg, &cfg.grid.zeta).zip(groups) {
        for (k, tr) in group.iter().enumerate() {
            let d = tr.diagnostics;
            samples.push(vec![
                h.into(),
                zeta.into(),
                k.into(),
                sample_seed(cfg.base_seed, k as u64).into(),
                final_value(&tr.series, "imbalance").into(),
                final_value(&tr.series, "log_z").into(),
                d.max_trace_drift.into(),
                d.max_hermiticity.into(),
                d.min_eigenvalue.into(),
                d.max_imag_residue.into(),
            ]);
        }
        let series: Vec<ObservableSeries> = group.into_iter().map(|t| t.series).collect();
        tables.push(aggregate(
            format!("transient_h{}_z{}", tag(h), tag(zeta)),
            &series,
            &[
                ("imbalance", Agg::MeanErr),
                ("number", Agg::MeanErr),
                ("jump_rate", Agg::MeanErr),
                ("hermiticity", Agg::Max),
                ("imag_residue", Agg::Max),
            ],
        ));
    }
    tables.push(samples);
    Ok(tables)
}

pub fn run_tebd(cfg: &RunConfig) -> Result<Vec<Table>> {
    let grid = TimeGrid::new(cfg.solver.dt, cfg.solver.t_max, cfg.solver.sample_dt);
    grid.steps()?;
    let groups = run_jobs(cfg, &cfg.grid.zeta, |p, zeta, seed| {
        let mut tc = TebdConfig::new(p.clone(), sample_disorder(p, seed), zeta);
        tc.chi_max = cfg.solver.chi_max;
        tc.sv_tol = cfg.solver.sv_tol;
        tc.grid = grid;
        tc.residue_bound = cfg.solver.residue_bound;
        tebd_run(&tc)
    })?;
    let mut tables = Vec::new();
    let mut samples = Table::new(
        "tebd_samples",
        &[
            "h",
            "zeta",
            "sample",
            "seed",
            "chi_max",
            "steps",
            "max_bond",
            "discarded_weight",
            "max_imag_residue",
            "final_log_trace",
            "final_imbalance",
        ],
    );
    for ((h, zeta), group) in grid_points(cfg, &cfg.grid.zeta).zip(groups) {
        for (k, run) in group.iter().enumerate() {
            let m = &run.meta;
            samples.push(vec![
                h.into(),
                zeta.into(),
                k.into(),
                sample_seed(cfg.base_seed, k as u64).into(),
                m.chi_max.into(),
                m.steps.into(),
                m.max_bond.into(),
                m.discarded_weight.into(),
                m.max_imag_residue.into(),
                m.final_log_trace.into(),
                final_value(&run.series, "imbalance").into(),
            ]);
        }
        let metas: Vec<_> = group.iter().map(|r| r.meta.clone()).collect();
        let series: Vec<ObservableSeries> = group.into_iter().map(|r| r.series).collect();
        let mut t = aggregate(
            format!("tebd_h{}_z{}", tag(h), tag(zeta)),
            &series,
            &[
                ("imbalance", Agg::MeanErr),
                ("number", Agg::MeanErr),
                ("max_bond", Agg::Max),
                ("discarded_weight", Agg::Max),
                ("imag_residue", Agg::Max),
            ],
        );
        t.meta = serde_json::json!({ "runs": metas });
        tables.push(t);
    }
    tables.push(samples);
    Ok(tables)
}

/// Ginibre draws of size `reference.dim` (`n_samples` of them) and a single
/// uniform draw of `reference.poisson_points` points.
pub fn run_references(cfg: &RunConfig) -> Result<Vec<Table>> {
    let mut summary = Table::new(
        "references",
        &["kind", "dim", "draws", "n_ratios", "r_mean", "r_stderr", "cos_mean", "cos_stderr", "base_seed"],
    );
    let mut density = Table::new("references_density", &["kind", "row", "col", "re_center", "im_center", "mass"]);
    for &kind in &cfg.reference.kinds {
        let (dim, draws) = match kind {
            ReferenceKind::Ginibre => (cfg.reference.dim, cfg.n_samples),
            ReferenceKind::Poisson2d => (cfg.reference.poisson_points, 1),
        };
        let s = reference_ensemble(kind, dim, draws, cfg.base_seed, cfg.execution)?;
        let (r, c) = csr_summary(&s)?;
        let moduli: Vec<f64> = s.ratios.iter().map(|x| x.norm()).collect();
        let cosines: Vec<f64> = s.ratios.iter().map(|x| -x.arg().cos()).collect();
        let label = serde_json::to_value(kind).expect("kind serializes");
        let label = label.as_str().unwrap_or_default();
        summary.push(vec![
            label.into(),
            dim.into(),
            draws.into(),
            s.len().into(),
            r.into(),
            mean_and_stderr(&moduli).1.into(),
            c.into(),
            mean_and_stderr(&cosines).1.into(),
            cfg.base_seed.into(),
        ]);
        if cfg.solver.density_bins > 0 {
            let d = csr_density(&s, cfg.solver.density_bins)?;
            for (row, masses) in d.mass.iter().enumerate() {
                for (col, &m) in masses.iter().enumerate() {
                    density.push(vec![
                        label.into(),
                        row.into(),
                        col.into(),
                        d.cell_center(col).into(),
                        d.cell_center(row).into(),
                        m.into(),
                    ]);
                }
            }
        }
    }
    let mut out = vec![summary];
    if cfg.solver.density_bins > 0 {
        out.push(density);
    }
    Ok(out)
}

pub(super) fn dispatch(cfg: &RunConfig) -> Result<Vec<Table>> {
    match cfg.kind {
        ExperimentKind::SpectralScan => run_spectral_scan(cfg),
        ExperimentKind::NhSpectralScan => run_nh_spectral_scan(cfg),
        ExperimentKind::DynamicsScan => run_dynamics_scan(cfg),
        ExperimentKind::Transient => run_transient(cfg),
        ExperimentKind::Tebd => run_tebd(cfg),
        ExperimentKind::References => run_references(cfg),
    }
}
