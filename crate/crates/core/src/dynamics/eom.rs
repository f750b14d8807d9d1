use super::series::ObservableSeries;
use crate::{Error, Result};

/// Largest residuals of the closed equations of motion for `<I>` and `<N>`
/// over the interior of a sampled trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EomResidual {
    pub staggered: f64,
    pub number: f64,
}

impl EomResidual {
    pub fn max(&self) -> f64 {
        self.staggered.max(self.number)
    }
}

fn channel<'a>(series: &'a ObservableSeries, name: &str) -> Result<&'a [f64]> {
    series
        .channel(name)
        .ok_or_else(|| Error::Config(format!("series has no channel `{name}`")))
}

/// Checks
///
/// ```text
/// d<I>/dt = 2g(1-z) var(I) + 2g z (n_gain - <I>) - 2 sum_i s_i j_i
/// d<N>/dt = 2g(1-z) cov(N, I) + 2g z (n_gain - <N>)
/// ```
///
/// with `s_i = (-1)^(i+1)` and bond currents `j_i`, differentiating the samples
/// with a five-point stencil. The spacing must be at most `1e-2`.
pub fn eom_residual(series: &ObservableSeries, zeta: f64, gamma: f64, sites: usize) -> Result<EomResidual> {
    let t = &series.times;
    let n = t.len();
    if n < 5 {
        return Err(Error::TimeGrid("need at least five samples".into()));
    }
    let h = t[1] - t[0];
    if h > 1e-2 + 1e-12 {
        return Err(Error::CoarseGrid(h));
    }
    if t.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9) {
        return Err(Error::TimeGrid("samples are not uniformly spaced".into()));
    }
    let stag = channel(series, "staggered")?;
    let num = channel(series, "number")?;
    let stag_sq = channel(series, "staggered_sq")?;
    let num_stag = channel(series, "number_staggered")?;
    let currents: Vec<&[f64]> = (1..sites)
        .map(|i| channel(series, &format!("current_{i}")))
        .collect::<Result<_>>()?;
    let gain = sites.div_ceil(2) as f64;
    let d = |y: &[f64], k: usize| (y[k - 2] - 8.0 * y[k - 1] + 8.0 * y[k + 1] - y[k + 2]) / (12.0 * h);

    let mut out = EomResidual { staggered: 0.0, number: 0.0 };
    for k in 2..n - 2 {
        let var = stag_sq[k] - stag[k] * stag[k];
        let cov = num_stag[k] - num[k] * stag[k];
        let flow: f64 = currents
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { c[k] } else { -c[k] })
            .sum();
        let rhs_i = 2.0 * gamma * (1.0 - zeta) * var + 2.0 * gamma * zeta * (gain - stag[k]) - 2.0 * flow;
        let rhs_n = 2.0 * gamma * (1.0 - zeta) * cov + 2.0 * gamma * zeta * (gain - num[k]);
        out.staggered = out.staggered.max((d(stag, k) - rhs_i).abs());
        out.number = out.number.max((d(num, k) - rhs_n).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cdw_state, propagate_nonlinear, ObservableSet, TimeGrid};
    use crate::fock::FockBasis;
    use crate::model::{build_hamiltonian, build_jumps, sample_disorder, ModelParams};
    use crate::superop::build_zeta_liouvillian;

    fn residual(sites: usize, h: f64, zeta: f64, sample_dt: f64) -> Result<EomResidual> {
        let b = FockBasis::new(sites, None).unwrap();
        let p = ModelParams::new(sites, h);
        let ham = build_hamiltonian(&b, &p, &sample_disorder(&p, 21)).unwrap();
        let sup = build_zeta_liouvillian(&ham, &build_jumps(&b, &p).unwrap(), zeta).unwrap();
        let traj = propagate_nonlinear(
            &cdw_state(&b).unwrap(),
            &sup,
            &ObservableSet::new(&b, &p),
            TimeGrid::new(0.001, 3.0, sample_dt),
        )
        .unwrap();
        eom_residual(&traj.series, zeta, p.gamma, sites)
    }

    #[test]
    fn equations_hold_along_trajectories() {
        assert!(residual(2, 3.0, 1.0, 0.01).unwrap().max() < 1e-4);
        assert!(residual(2, 3.0, 0.3, 0.01).unwrap().max() < 1e-4);
        assert!(residual(4, 2.0, 0.6, 0.01).unwrap().max() < 1e-4);
    }

    #[test]
    fn coarse_sampling_is_rejected() {
        assert!(matches!(residual(2, 1.0, 1.0, 0.05), Err(Error::CoarseGrid(_))));
    }
}
