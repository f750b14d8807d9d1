use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::observables::{ObservableSet, Observables};
use super::series::ObservableSeries;
use super::state::DensityMatrix;
use crate::linalg::{hermiticity_defect, max_abs};
use crate::superop::Superoperator;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Fixed RK4 step `dt`, horizon `t_max`, observables every `sample_dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub t_max: f64,
    pub sample_dt: f64,
}

impl TimeGrid {
    pub fn new(dt: f64, t_max: f64, sample_dt: f64) -> Self {
        Self { dt, t_max, sample_dt }
    }

    /// `(number of steps, steps between samples)`.
    pub fn steps(&self) -> Result<(usize, usize)> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::TimeGrid(format!("step {} must be positive", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::TimeGrid(format!("horizon {} must be >= 0", self.t_max)));
        }
        let steps = whole(self.t_max / self.dt, "horizon / step")?;
        let stride = whole(self.sample_dt / self.dt, "sampling interval / step")?;
        if stride == 0 {
            return Err(Error::TimeGrid("sampling interval shorter than the step".into()));
        }
        Ok((steps, stride))
    }
}

fn whole(x: f64, what: &str) -> Result<usize> {
    let r = x.round();
    if (x - r).abs() > 1e-9 * x.abs().max(1.0) {
        return Err(Error::TimeGrid(format!("{what} = {x} is not an integer")));
    }
    Ok(r as usize)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// `d rho = (L - Tr[L rho]) rho`, renormalized after every step.
    #[default]
    Nonlinear,
    /// `d rho = L rho`, trace stripped into `log Z` after every step.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryOptions {
    pub grid: TimeGrid,
    pub route: Route,
    /// Also propagate the fugacity derivative for `<n>_zeta` and the activity rate.
    pub counting: bool,
    /// Minimum-eigenvalue probe every this many samples (0 = never).
    pub positivity_every: usize,
}

impl TrajectoryOptions {
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            grid,
            route: Route::Nonlinear,
            counting: false,
            positivity_every: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    /// Largest `|Tr rho - 1|` found before a renormalization (nonlinear route).
    pub max_trace_drift: f64,
    /// Largest relative `max |rho - rho^†|` on sampled states.
    pub max_hermiticity: f64,
    /// Smallest probed eigenvalue (`NaN` when never probed).
    pub min_eigenvalue: f64,
    pub max_imag_residue: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            steps: 0,
            max_trace_drift: 0.0,
            max_hermiticity: 0.0,
            min_eigenvalue: f64::NAN,
            max_imag_residue: 0.0,
        }
    }
}

impl Diagnostics {
    fn probe_min(&mut self, value: f64) {
        self.min_eigenvalue = if self.min_eigenvalue.is_nan() {
            value
        } else {
            self.min_eigenvalue.min(value)
        };
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub series: ObservableSeries,
    /// Normalized final state; `log_norm` holds `log Z_zeta(t_max)`.
    pub final_state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

/// Integration state on the superoperator's local positions.
struct Stepper<'a> {
    sup: &'a Superoperator,
    route: Route,
    rho: Vec<Complex64>,
    /// `d rho_tilde / d zeta` divided by `Z`.
    tangent: Option<Vec<Complex64>>,
    log_z: f64,
    time: f64,
    steps: usize,
    max_drift: f64,
}

struct Derivative {
    rho: Vec<Complex64>,
    tangent: Option<Vec<Complex64>>,
    log_z: f64,
}

fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(&yi, &xi)| yi + xi * a).collect()
}

impl<'a> Stepper<'a> {
    fn new(sup: &'a Superoperator, rho0: &DensityMatrix, route: Route, counting: bool) -> Result<Self> {
        let tr = rho0.trace();
        if (tr - 1.0).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!("initial state has trace {tr}")));
        }
        let rho = sup.restrict(&rho0.matrix)?;
        let tangent = counting.then(|| vec![ZERO; rho.len()]);
        Ok(Self {
            sup,
            route,
            rho,
            tangent,
            log_z: 0.0,
            time: 0.0,
            steps: 0,
            max_drift: 0.0,
        })
    }

    fn derivative(&self, rho: &[Complex64], tangent: Option<&[Complex64]>) -> Derivative {
        let l_rho = self.sup.apply(rho);
        let shift = self.sup.trace_of_image(rho);
        let tangent = tangent.map(|t| {
            let mut out = self.sup.apply(t);
            let lj = self.sup.jump().mul_vec(rho);
            for ((o, &j), &ti) in out.iter_mut().zip(&lj).zip(t) {
                *o += j;
                if self.route == Route::Nonlinear {
                    *o -= shift * ti;
                }
            }
            out
        });
        let rho = match self.route {
            Route::Linear => l_rho,
            Route::Nonlinear => l_rho.iter().zip(rho).map(|(&l, &r)| l - shift * r).collect(),
        };
        Derivative {
            rho,
            tangent,
            log_z: shift.re,
        }
    }

    fn step(&mut self, dt: f64) -> Result<()> {
        let k1 = self.derivative(&self.rho, self.tangent.as_deref());
        let stage = |k: &Derivative, h: f64| {
            let r = axpy(&self.rho, h, &k.rho);
            let t = self.tangent.as_ref().map(|t| axpy(t, h, k.tangent.as_ref().unwrap()));
            (r, t)
        };
        let (r2, t2) = stage(&k1, dt / 2.0);
        let k2 = self.derivative(&r2, t2.as_deref());
        let (r3, t3) = stage(&k2, dt / 2.0);
        let k3 = self.derivative(&r3, t3.as_deref());
        let (r4, t4) = stage(&k3, dt);
        let k4 = self.derivative(&r4, t4.as_deref());

        let w = dt / 6.0;
        for i in 0..self.rho.len() {
            self.rho[i] += (k1.rho[i] + (k2.rho[i] + k3.rho[i]) * 2.0 + k4.rho[i]) * w;
        }
        if let Some(t) = self.tangent.as_mut() {
            let (a, b, c, d) = (
                k1.tangent.unwrap(),
                k2.tangent.unwrap(),
                k3.tangent.unwrap(),
                k4.tangent.unwrap(),
            );
            for i in 0..t.len() {
                t[i] += (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * w;
            }
        }
        if self.route == Route::Nonlinear {
            self.log_z += (k1.log_z + 2.0 * (k2.log_z + k3.log_z) + k4.log_z) * w;
        }
        self.steps += 1;
        self.time = self.steps as f64 * dt;

        let tr = self.sup.trace(&self.rho);
        if !(tr.re.is_finite() && tr.im.is_finite()) || self.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteState {
                step: self.steps,
                time: self.time,
            });
        }
        if tr.norm() < 1e-12 {
            return Err(Error::TraceCollapse {
                trace: tr.norm(),
                time: self.time,
            });
        }
        match self.route {
            Route::Nonlinear => self.max_drift = self.max_drift.max((tr - 1.0).norm()),
            Route::Linear => self.log_z += tr.re.ln(),
        }
        let inv = Complex64::new(1.0, 0.0) / tr;
        self.rho.iter_mut().for_each(|z| *z *= inv);
        if let Some(t) = self.tangent.as_mut() {
            t.iter_mut().for_each(|z| *z *= inv);
        }
        Ok(())
    }

    /// `(<n>_zeta, activity rate)` from the tangent.
    fn counting(&self) -> Option<(f64, f64)> {
        let t = self.tangent.as_ref()?;
        let zeta = self.sup.zeta();
        let tr_t = self.sup.trace(t);
        let rate = self.sup.trace_of_image(t) + self.sup.trace_of_jump_image(&self.rho)
            - self.sup.trace_of_image(&self.rho) * tr_t;
        Some((zeta * tr_t.re, rate.re))
    }

    fn state(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.sup.embed(&self.rho),
            normalized: true,
            log_norm: self.log_z,
        }
    }
}

fn channel_names(obs: &ObservableSet, counting: bool) -> Vec<String> {
    let mut names: Vec<String> = ["imbalance", "staggered", "number", "staggered_sq", "number_staggered"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend(obs.current_names());
    names.extend(["jump_rate", "log_z"].iter().map(|s| s.to_string()));
    if counting {
        names.extend(["mean_jumps", "activity"].iter().map(|s| s.to_string()));
    }
    names.extend(["hermiticity", "min_eigenvalue", "imag_residue"].iter().map(|s| s.to_string()));
    names
}

fn record(
    stepper: &Stepper,
    obs: &ObservableSet,
    probe: bool,
    series: &mut ObservableSeries,
    diag: &mut Diagnostics,
) -> Result<Observables> {
    let state = stepper.state();
    let o = obs.evaluate_unchecked(&state.matrix)?;
    let herm = hermiticity_defect(&state.matrix) / max_abs(&state.matrix).max(f64::MIN_POSITIVE);
    let min_ev = if probe { state.min_eigenvalue()? } else { f64::NAN };
    let mut row = vec![o.imbalance, o.staggered, o.number, o.staggered_sq, o.number_staggered];
    row.extend(&o.currents);
    row.extend([o.jump_rate, stepper.log_z]);
    if let Some((mean, rate)) = stepper.counting() {
        row.extend([mean, rate]);
    }
    row.extend([herm, min_ev, o.imag_residue]);
    series.push(stepper.time, &row);

    diag.max_hermiticity = diag.max_hermiticity.max(herm);
    diag.max_imag_residue = diag.max_imag_residue.max(o.imag_residue);
    if probe {
        diag.probe_min(min_ev);
    }
    Ok(o)
}

/// Propagates `rho0` under `sup` and samples observables on the grid.
pub fn propagate(
    rho0: &DensityMatrix,
    sup: &Superoperator,
    obs: &ObservableSet,
    opts: &TrajectoryOptions,
) -> Result<Trajectory> {
    let (steps, stride) = opts.grid.steps()?;
    let mut stepper = Stepper::new(sup, rho0, opts.route, opts.counting)?;
    let mut series = ObservableSeries::new(channel_names(obs, opts.counting));
    let mut diag = Diagnostics::default();
    let mut sample = 0usize;
    let probe_now = |k: usize| opts.positivity_every > 0 && k % opts.positivity_every == 0;

    record(&stepper, obs, probe_now(sample), &mut series, &mut diag)?;
    for n in 1..=steps {
        stepper.step(opts.grid.dt)?;
        if n % stride == 0 {
            sample += 1;
            record(&stepper, obs, probe_now(sample), &mut series, &mut diag)?;
        }
    }
    diag.steps = stepper.steps;
    diag.max_trace_drift = stepper.max_drift;
    Ok(Trajectory {
        series,
        final_state: stepper.state(),
        diagnostics: diag,
    })
}

/// Nonlinear route with per-step renormalization.
pub fn propagate_nonlinear(
    rho0: &DensityMatrix,
    sup: &Superoperator,
    obs: &ObservableSet,
    grid: TimeGrid,
) -> Result<Trajectory> {
    propagate(rho0, sup, obs, &TrajectoryOptions::new(grid))
}

/// Linear route; the final state's `log_norm` is `log Z_zeta(t_max)`.
pub fn propagate_linear(
    rho0: &DensityMatrix,
    sup: &Superoperator,
    obs: &ObservableSet,
    grid: TimeGrid,
) -> Result<Trajectory> {
    propagate(
        rho0,
        sup,
        obs,
        &TrajectoryOptions {
            route: Route::Linear,
            ..TrajectoryOptions::new(grid)
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyOptions {
    pub dt: f64,
    /// Interval between stationarity checks.
    pub chunk: f64,
    /// Stationarity threshold on `max |rho(t) - rho(t - chunk)|`.
    pub tol: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Also require `t >= relaxation_factor / gap` with the estimated gap.
    pub relaxation_factor: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            chunk: 1.0,
            tol: 1e-8,
            t_min: 20.0,
            t_max: 2000.0,
            relaxation_factor: 20.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyOutcome {
    pub state: DensityMatrix,
    pub observables: Observables,
    /// `Tr[LJ rho]` per unit time in the final state, from the jump superoperator.
    pub activity: f64,
    pub t_reached: f64,
    pub converged: bool,
    /// Last stationarity residual.
    pub residual: f64,
    /// Decay rate of the residual between checks, if it was measurable.
    pub gap_estimate: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Long-time propagation until the state is stationary.
///
/// The relaxation rate is estimated from the ratio of successive residuals
/// while they are well above round-off; convergence requires both the
/// residual threshold and `t >= max(t_min, relaxation_factor / gap)`.
pub fn find_steady_state(
    rho0: &DensityMatrix,
    sup: &Superoperator,
    obs: &ObservableSet,
    opts: &SteadyOptions,
) -> Result<SteadyOutcome> {
    let per_chunk = TimeGrid::new(opts.dt, opts.chunk, opts.chunk).steps()?.0.max(1);
    let mut stepper = Stepper::new(sup, rho0, Route::Nonlinear, false)?;
    let mut diag = Diagnostics::default();
    let mut previous = stepper.rho.clone();
    let mut last_residual: Option<f64> = None;
    let mut gap = None;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while stepper.time < opts.t_max - 0.5 * opts.dt {
        for _ in 0..per_chunk {
            stepper.step(opts.dt)?;
        }
        residual = stepper
            .rho
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if let Some(prev) = last_residual {
            if residual > 1e-12 && prev > residual {
                gap = Some((prev / residual).ln() / opts.chunk);
            }
        }
        last_residual = Some(residual);
        previous.clone_from(&stepper.rho);
        let required = gap.map_or(opts.t_min, |g| opts.t_min.max(opts.relaxation_factor / g));
        if residual < opts.tol && stepper.time >= required.min(opts.t_max) {
            converged = true;
            break;
        }
    }
    let state = stepper.state();
    let observables = obs.evaluate_unchecked(&state.matrix)?;
    let activity = sup.trace_of_jump_image(&stepper.rho).re;
    diag.steps = stepper.steps;
    diag.max_trace_drift = stepper.max_drift;
    diag.max_hermiticity = hermiticity_defect(&state.matrix) / max_abs(&state.matrix).max(f64::MIN_POSITIVE);
    diag.max_imag_residue = observables.imag_residue;
    Ok(SteadyOutcome {
        state,
        observables,
        activity,
        t_reached: stepper.time,
        converged,
        residual,
        gap_estimate: gap,
        diagnostics: diag,
    })
}
