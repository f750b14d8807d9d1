use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gates::{bond_generators, chain_terms, BondGate, TrotterGates};
use super::{column_major, CanonicalForm, Mpdo, SiteTensor};
use crate::dynamics::{cdw_pattern, ObservableSeries, TimeGrid};
use crate::linalg::CMat;
use crate::model::{DisorderRealization, ModelParams};
use crate::{Error, Result};

/// Direction in which the orthogonality center leaves a gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Right,
    Left,
}

/// Truncation data of one gate application.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GateReport {
    pub kept: usize,
    /// Relative squared weight of the dropped singular values.
    pub discarded: f64,
}

/// Contracts a bond gate into sites `(bond, bond + 1)`, re-splits by SVD and
/// truncates to at most `chi_max` singular values above `sv_tol` times the
/// largest. The orthogonality center ends on `bond + 1` for
/// [`Sweep::Right`] and on `bond` for [`Sweep::Left`]; its 2-norm is moved
/// into `log_scale`.
pub fn apply_gate(mpdo: &mut Mpdo, gate: &BondGate, chi_max: usize, sv_tol: f64, sweep: Sweep) -> Result<GateReport> {
    if chi_max < 1 {
        return Err(Error::BondCap);
    }
    let i = gate.bond;
    let l = mpdo.sites();
    if i == 0 || i >= l {
        return Err(Error::SiteLabel { site: i + 1, sites: l });
    }
    match mpdo.center() {
        Some(c) if c == i || c == i + 1 => {}
        _ => mpdo.move_center(i)?,
    }
    let (left, right) = (mpdo.tensors[i - 1].left, mpdo.tensors[i].right);
    let x = mpdo.tensors[i - 1].grouped_left() * mpdo.tensors[i].grouped_right();

    // gather the 16 physical entries of every (l, r) pair into one column
    let pairs = left * right;
    let y = CMat::from_fn(16, pairs, |pp, lr| {
        let (p1, p2) = (pp % 4, pp / 4);
        let (a, r) = (lr % left, lr / left);
        x[(a + left * p1, p2 + 4 * r)]
    });
    let z = &gate.matrix * &y;
    let m = CMat::from_fn(left * 4, 4 * right, |row, col| {
        let (a, p1) = (row % left, row / left);
        let (p2, r) = (col % 4, col / 4);
        z[(p1 + 4 * p2, a + left * r)]
    });

    let svd = m.thin_svd().map_err(|_| Error::Svd)?;
    let rank = svd.S().dim();
    let s: Vec<f64> = (0..rank).map(|k| svd.S()[k].re).collect();
    let total: f64 = s.iter().map(|v| v * v).sum();
    if !(s.first().copied().unwrap_or(0.0) > 0.0) || !total.is_finite() {
        return Err(Error::ZeroNorm(i));
    }
    let cut = sv_tol * s[0];
    let keep = s.iter().take_while(|&&v| v > cut).count().clamp(1, chi_max.min(rank));
    let kept_sq: f64 = s[..keep].iter().map(|v| v * v).sum();
    let discarded = (1.0 - kept_sq / total).max(0.0);
    let norm = kept_sq.sqrt();

    let u = svd.U();
    let v = svd.V();
    let weight = |k: usize| s[k] / norm;
    let (a_new, b_new) = match sweep {
        Sweep::Right => (
            CMat::from_fn(left * 4, keep, |r, k| u[(r, k)]),
            CMat::from_fn(keep, 4 * right, |k, c| v[(c, k)].conj() * weight(k)),
        ),
        Sweep::Left => (
            CMat::from_fn(left * 4, keep, |r, k| u[(r, k)] * weight(k)),
            CMat::from_fn(keep, 4 * right, |k, c| v[(c, k)].conj()),
        ),
    };
    mpdo.tensors[i - 1] = SiteTensor::new(left, keep, column_major(a_new.as_ref()));
    mpdo.tensors[i] = SiteTensor::new(keep, right, column_major(b_new.as_ref()));
    mpdo.log_scale += norm.ln();
    mpdo.form = CanonicalForm::Mixed(if sweep == Sweep::Right { i + 1 } else { i });
    Ok(GateReport { kept: keep, discarded })
}

/// Accumulated truncation diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Tally {
    pub discarded: f64,
    pub max_bond: usize,
}

fn sweep(
    mpdo: &mut Mpdo,
    gates: &[BondGate],
    odd: bool,
    dir: Sweep,
    chi_max: usize,
    sv_tol: f64,
    tally: &mut Tally,
) -> Result<()> {
    let mut bonds: Vec<usize> = (1..mpdo.sites()).filter(|b| (b % 2 == 1) == odd).collect();
    if dir == Sweep::Left {
        bonds.reverse();
    }
    for b in bonds {
        mpdo.move_center(if dir == Sweep::Right { b } else { b + 1 })?;
        let rep = apply_gate(mpdo, &gates[b - 1], chi_max, sv_tol, dir)?;
        tally.discarded += rep.discarded;
        tally.max_bond = tally.max_bond.max(rep.kept);
    }
    Ok(())
}

/// One second-order step: odd bonds for `dt/2` left to right, even bonds for
/// `dt` right to left, odd bonds for `dt/2` left to right. The center is
/// returned to site 1. Returns the discarded weight of the step.
pub fn tebd_step(mpdo: &mut Mpdo, gates: &TrotterGates, chi_max: usize, sv_tol: f64) -> Result<f64> {
    let mut tally = Tally::default();
    sweep(mpdo, &gates.half, true, Sweep::Right, chi_max, sv_tol, &mut tally)?;
    sweep(mpdo, &gates.full, false, Sweep::Left, chi_max, sv_tol, &mut tally)?;
    sweep(mpdo, &gates.half, true, Sweep::Right, chi_max, sv_tol, &mut tally)?;
    mpdo.move_center(1)?;
    Ok(tally.discarded)
}

/// Settings of one TEBD trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TebdConfig {
    pub params: ModelParams,
    pub disorder: DisorderRealization,
    pub zeta: f64,
    pub chi_max: usize,
    pub sv_tol: f64,
    pub grid: TimeGrid,
    /// Abort once any observable carries an imaginary part above this.
    pub residue_bound: f64,
    /// Initial occupations; the charge-density-wave pattern when absent.
    pub initial: Option<Vec<bool>>,
}

impl TebdConfig {
    pub fn new(params: ModelParams, disorder: DisorderRealization, zeta: f64) -> Self {
        Self {
            params,
            disorder,
            zeta,
            chi_max: 64,
            sv_tol: 1e-16,
            grid: TimeGrid::new(1e-2, 10.0, 0.1),
            residue_bound: 1e-5,
            initial: None,
        }
    }
}

/// Convergence metadata of a TEBD trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TebdMeta {
    pub sites: usize,
    pub zeta: f64,
    pub chi_max: usize,
    pub sv_tol: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_bond: usize,
    pub discarded_weight: f64,
    pub max_imag_residue: f64,
    pub final_log_trace: f64,
}

#[derive(Clone, Debug)]
pub struct TebdRun {
    pub series: ObservableSeries,
    pub meta: TebdMeta,
    pub state: Mpdo,
}

pub(crate) const TEBD_CHANNELS: [&str; 7] =
    ["imbalance", "staggered", "number", "log_trace", "imag_residue", "max_bond", "discarded_weight"];

struct Sample {
    values: [f64; 7],
    residue: f64,
}

fn sample(mpdo: &Mpdo, tally: &Tally) -> Sample {
    let n = mpdo.densities();
    let stag: Complex64 = n.iter().enumerate().map(|(i, v)| if i % 2 == 0 { *v } else { -*v }).sum();
    let num: Complex64 = n.iter().sum();
    let imb = if num.norm() < 1e-14 { Complex64::new(f64::NAN, 0.0) } else { stag / num };
    let tr = mpdo.trace_unscaled();
    let residue = n
        .iter()
        .map(|z| z.im.abs())
        .chain([imb.im.abs(), (tr.im / tr.norm()).abs()])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    Sample {
        values: [
            imb.re,
            stag.re,
            num.re,
            mpdo.log_trace(),
            residue,
            mpdo.max_bond() as f64,
            tally.discarded,
        ],
        residue,
    }
}

/// Propagates the linear deformed Liouvillian with fused zip-up sweeps and
/// records trace-normalized observables every `grid.sample_dt`.
pub fn tebd_run(cfg: &TebdConfig) -> Result<TebdRun> {
    if cfg.chi_max < 1 {
        return Err(Error::BondCap);
    }
    if !(cfg.sv_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("singular-value tolerance {}", cfg.sv_tol)));
    }
    let l = cfg.params.sites;
    let (steps, stride) = cfg.grid.steps()?;
    let gates = TrotterGates::new(&bond_generators(&chain_terms(&cfg.params, &cfg.disorder)?, cfg.zeta)?, cfg.grid.dt)?;
    let occupations = match &cfg.initial {
        Some(occ) if occ.len() != l => return Err(Error::DimensionMismatch { expected: l, found: occ.len() }),
        Some(occ) => occ.clone(),
        None => {
            let pattern = cdw_pattern(l);
            (0..l).map(|i| pattern >> i & 1 == 1).collect()
        }
    };
    let mut mpdo = Mpdo::product(&occupations)?;
    let mut series = ObservableSeries::new(TEBD_CHANNELS);
    let mut tally = Tally { discarded: 0.0, max_bond: 1 };
    let mut max_residue = 0.0f64;
    let mut record = |mpdo: &Mpdo, tally: &Tally, t: f64, series: &mut ObservableSeries| -> Result<()> {
        let s = sample(mpdo, tally);
        max_residue = max_residue.max(s.residue);
        series.push(t, &s.values);
        if s.residue > cfg.residue_bound {
            return Err(Error::ImaginaryResidue { residue: s.residue, bound: cfg.residue_bound, time: t });
        }
        Ok(())
    };
    record(&mpdo, &tally, 0.0, &mut series)?;

    let (chi, tol) = (cfg.chi_max, cfg.sv_tol);
    let mut done = 0;
    while done < steps {
        let block = stride.min(steps - done);
        sweep(&mut mpdo, &gates.half, true, Sweep::Right, chi, tol, &mut tally)?;
        for k in 0..block {
            sweep(&mut mpdo, &gates.full, false, Sweep::Left, chi, tol, &mut tally)?;
            let odd = if k + 1 < block { &gates.full } else { &gates.half };
            sweep(&mut mpdo, odd, true, Sweep::Right, chi, tol, &mut tally)?;
        }
        done += block;
        if mpdo.tensors.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteState { step: done, time: done as f64 * cfg.grid.dt });
        }
        record(&mpdo, &tally, done as f64 * cfg.grid.dt, &mut series)?;
    }
    let meta = TebdMeta {
        sites: l,
        zeta: cfg.zeta,
        chi_max: chi,
        sv_tol: tol,
        dt: cfg.grid.dt,
        steps,
        max_bond: tally.max_bond,
        discarded_weight: tally.discarded,
        max_imag_residue: max_residue,
        final_log_trace: mpdo.log_trace(),
    };
    Ok(TebdRun { series, meta, state: mpdo })
}
