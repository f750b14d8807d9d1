use super::config::RunConfig;
use super::table::Table;
use crate::dynamics::{
    cdw_state, find_steady_state, fock_state, grand_canonical, jump_hierarchy, propagate_linear, propagate_nonlinear,
    DensityMatrix, ObservableSet, SteadyOptions, TimeGrid,
};
use crate::fock::{number_operator, FockBasis};
use crate::linalg::max_abs_diff;
use crate::model::{build_hamiltonian, build_jumps, sample_disorder, DisorderRealization, ModelParams};
use crate::mpdo::{tebd_run, TebdConfig};
use crate::superop::{
    build_sector_liouvillian, build_zeta_liouvillian, sector_leakage, symmetry_residual, vectorize, ChargeKind,
};
use crate::Result;

/// Outcome of one invariant: pass when `value <= tolerance` (or, for a
/// lower bound, `value > tolerance`).
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub lower_bound: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            lower_bound: false,
        }
    }

    fn above(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            lower_bound: true,
            ..Self::at_most(name, value, tolerance)
        }
    }

    pub fn passed(&self) -> bool {
        if self.lower_bound {
            self.value > self.tolerance
        } else {
            self.value <= self.tolerance
        }
    }
}

fn params(cfg: &RunConfig, sites: usize, h: f64) -> ModelParams {
    ModelParams {
        sites,
        disorder: h,
        ..cfg.model.clone()
    }
}

fn model(p: &ModelParams, seed: u64) -> Result<(FockBasis, crate::SparseOperator, Vec<crate::SparseOperator>)> {
    let basis = FockBasis::new(p.sites, None)?;
    let h = build_hamiltonian(&basis, p, &sample_disorder(p, seed))?;
    let jumps = build_jumps(&basis, p)?;
    Ok((basis, h, jumps))
}

/// Small-size invariant suite; model constants come from `cfg.model`, the
/// disorder seed from `cfg.base_seed`.
pub fn verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    let seed = cfg.base_seed;
    let mut checks = Vec::new();

    let p4 = params(cfg, 4, 5.0);
    let (b4, h4, j4) = model(&p4, seed)?;
    checks.push(Check::at_most("hamiltonian_hermitian", h4.max_abs_diff(&h4.adjoint())?, 0.0));

    let lind = build_zeta_liouvillian(&h4, &j4, 1.0)?;
    let probes = [cdw_state(&b4)?, DensityMatrix::maximally_mixed(b4.dim())];
    let drift = probes
        .iter()
        .map(|r| Ok(lind.trace_of_image(&vectorize(&r.matrix)?).norm()))
        .collect::<Result<Vec<f64>>>()?;
    checks.push(Check::at_most("trace_preserving_at_unit_fugacity", drift.into_iter().fold(0.0, f64::max), 1e-12));

    let p3 = params(cfg, 3, 5.0);
    let (b3, h3, j3) = model(&p3, seed)?;
    let n3 = number_operator(&b3);
    let mut minus: f64 = 0.0;
    let mut leak: f64 = 0.0;
    for zeta in [0.0, 0.5, 1.0] {
        let sup = build_zeta_liouvillian(&h3, &j3, zeta)?;
        minus = minus.max(symmetry_residual(&sup, &n3, ChargeKind::NMinus, 1 << 12)?);
        leak = leak.max(sector_leakage(&sup, &b3)?);
    }
    checks.push(Check::at_most("weak_symmetry_commutator", minus, 1e-12));
    checks.push(Check::at_most("charge_sector_leakage", leak, 0.0));
    let plus_free = symmetry_residual(&build_zeta_liouvillian(&h3, &j3, 0.0)?, &n3, ChargeKind::NPlus, 1 << 12)?;
    checks.push(Check::at_most("no_jump_part_conserves_number", plus_free, 1e-12));
    let plus_full = symmetry_residual(&build_zeta_liouvillian(&h3, &j3, 1.0)?, &n3, ChargeKind::NPlus, 1 << 12)?;
    checks.push(Check::above("jumps_change_number", plus_full, 1e-12));

    // hierarchy, linear and nonlinear routes on a three-site chain
    let grid = TimeGrid::new(0.005, 10.0, 10.0);
    let mut triangle: f64 = 0.0;
    let rho0 = fock_state(&b3, 0b101)?;
    let obs3 = ObservableSet::new(&b3, &p3);
    for zeta in [0.0, 0.4, 1.0] {
        let sup = build_zeta_liouvillian(&h3, &j3, zeta)?;
        let lin = propagate_linear(&rho0, &sup, &obs3, grid)?.final_state;
        let non = propagate_nonlinear(&rho0, &sup, &obs3, grid)?.final_state;
        let hier = jump_hierarchy(&rho0, &sup, cfg.solver.n_max, grid, 1e-8)?;
        let (resummed, _) = grand_canonical(&hier, zeta)?;
        triangle = triangle
            .max(max_abs_diff(&lin.matrix, &non.matrix))
            .max(max_abs_diff(&lin.matrix, &resummed.matrix))
            .max(max_abs_diff(&non.matrix, &resummed.matrix));
    }
    checks.push(Check::at_most("oracle_triangle", triangle, 1e-6));

    // a single pumped site fills as 1 - exp(-2 gamma t)
    let p1 = params(cfg, 1, 0.0);
    let b1 = FockBasis::new(1, None)?;
    let sup1 = build_zeta_liouvillian(
        &build_hamiltonian(&b1, &p1, &DisorderRealization::clean(1))?,
        &build_jumps(&b1, &p1)?,
        1.0,
    )?;
    let tr = propagate_nonlinear(&fock_state(&b1, 0)?, &sup1, &ObservableSet::new(&b1, &p1), grid)?;
    let filled = tr.series.channel("number").map_or(f64::NAN, |c| c[c.len() - 1]);
    let expected = 1.0 - (-2.0 * p1.gamma * 10.0).exp();
    checks.push(Check::at_most("single_site_filling", (filled - expected).abs(), 1e-8));

    // unit-fugacity steady state: activity equals gamma L (1 - imbalance)
    let sup4 = build_sector_liouvillian(&b4, &h4, &j4, 1.0, 0)?;
    let obs4 = ObservableSet::new(&b4, &p4);
    let ss = find_steady_state(&cdw_state(&b4)?, &sup4, &obs4, &SteadyOptions::default())?;
    let identity = ss.activity - p4.gamma * 4.0 * (1.0 - ss.observables.imbalance);
    checks.push(Check::at_most("activity_imbalance_identity", identity.abs(), 1e-6));
    checks.push(Check::at_most("steady_half_filling", (ss.observables.number - 2.0).abs(), 1e-8));
    let sanity = ss.state.sanity(true)?;
    checks.push(Check::at_most("steady_trace", sanity.trace_error, 1e-8));
    checks.push(Check::at_most("steady_hermiticity", sanity.hermiticity, 1e-10));
    checks.push(Check::at_most("steady_positivity", -sanity.min_eigenvalue, 1e-8));

    // TEBD against the exact propagation on four sites
    let mut tc = TebdConfig::new(p4.clone(), sample_disorder(&p4, seed), 0.6);
    tc.grid = TimeGrid::new(0.01, 2.0, 0.5);
    let run = tebd_run(&tc)?;
    let sup4z = build_sector_liouvillian(&b4, &h4, &j4, 0.6, 0)?;
    let exact = propagate_linear(&cdw_state(&b4)?, &sup4z, &obs4, TimeGrid::new(0.0025, 2.0, 0.5))?;
    let dev = run
        .series
        .channel("imbalance")
        .into_iter()
        .flatten()
        .zip(exact.series.channel("imbalance").into_iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("tebd_matches_exact", dev, 1e-4));
    checks.push(Check::at_most("tebd_imaginary_residue", run.meta.max_imag_residue, 1e-5));
    Ok(checks)
}

pub fn checks_table(checks: &[Check]) -> Table {
    let mut t = Table::new("verify", &["check", "value", "tolerance", "kind", "passed"]);
    for c in checks {
        t.push(vec![
            c.name.as_str().into(),
            c.value.into(),
            c.tolerance.into(),
            (if c.lower_bound { "above" } else { "at_most" }).into(),
            c.passed().into(),
        ]);
    }
    t
}
