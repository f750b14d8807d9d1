use super::observables::Observables;
use crate::{Error, Result};

/// `(1/zeta) d<n>_zeta/dt` by finite differences on a uniform grid:
/// second-order centered in the interior, second-order one-sided at the ends.
pub fn activity_from_mean_jumps(times: &[f64], mean_jumps: &[f64], zeta: f64) -> Result<Vec<f64>> {
    if zeta == 0.0 {
        return Err(Error::ZeroFugacity);
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::Fugacity(zeta));
    }
    let n = times.len();
    if n < 3 || mean_jumps.len() != n {
        return Err(Error::TimeGrid("need at least three matching samples".into()));
    }
    let h = times[1] - times[0];
    let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
    if !(h > 0.0) || !uniform {
        return Err(Error::TimeGrid("finite differences need a uniform increasing grid".into()));
    }
    let y = mean_jumps;
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h));
    for k in 1..n - 1 {
        out.push((y[k + 1] - y[k - 1]) / (2.0 * h));
    }
    out.push((3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h));
    Ok(out.into_iter().map(|d| d / zeta).collect())
}

/// Activity rate at unit fugacity from the imbalance numerator:
/// `Tr[LJ rho] = 2 gamma (number of gain sites - <I>)`.
pub fn activity_unit_fugacity(obs: &Observables, gamma: f64, gain_sites: usize) -> f64 {
    2.0 * gamma * (gain_sites as f64 - obs.staggered)
}
