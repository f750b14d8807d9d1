use num_complex::Complex64;

use super::propagate::TimeGrid;
use super::state::DensityMatrix;
use crate::linalg::CMat;
use crate::superop::Superoperator;
use crate::{Error, Result};

/// Jump-number resolved states `rho_n(t)`, `n = 0..=n_max`, on the positions
/// of the superoperator used to build them.
#[derive(Clone, Debug)]
pub struct JumpHierarchy {
    pub time: f64,
    states: Vec<Vec<Complex64>>,
    sup: Superoperator,
    /// `(t, [Tr rho_0, ..., Tr rho_n_max])` on the sampling grid.
    pub trace_history: Vec<(f64, Vec<f64>)>,
}

impl JumpHierarchy {
    pub fn n_max(&self) -> usize {
        self.states.len() - 1
    }

    /// `Tr rho_{n_max}`.
    pub fn truncation_weight(&self) -> f64 {
        self.sup.trace(self.states.last().unwrap()).re
    }

    pub fn traces(&self) -> Vec<f64> {
        self.states.iter().map(|s| self.sup.trace(s).re).collect()
    }

    pub fn state(&self, n: usize) -> CMat {
        self.sup.embed(&self.states[n])
    }
}

/// Co-integrates `d rho_n = L0 rho_n + LJ rho_{n-1}` with RK4 from
/// `rho_0(0) = rho0`, `rho_{n>0}(0) = 0`. Only the jump-free and jump parts of
/// `sup` are used; its fugacity is irrelevant.
///
/// Fails with [`Error::Truncation`] when `Tr rho_{n_max}(t_max) > bound`.
pub fn jump_hierarchy(
    rho0: &DensityMatrix,
    sup: &Superoperator,
    n_max: usize,
    grid: TimeGrid,
    bound: f64,
) -> Result<JumpHierarchy> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("hierarchy depth must be at least 1".into()));
    }
    let (steps, stride) = grid.steps()?;
    let dim = sup.dim();
    let mut states = vec![vec![Complex64::new(0.0, 0.0); dim]; n_max + 1];
    states[0] = sup.restrict(&rho0.matrix)?;
    let record = |states: &[Vec<Complex64>], t: f64| (t, states.iter().map(|s| sup.trace(s).re).collect());
    let mut history = vec![record(&states, 0.0)];

    let rhs = |y: &[Vec<Complex64>]| -> Vec<Vec<Complex64>> {
        let jumped: Vec<Vec<Complex64>> = y[..n_max].iter().map(|s| sup.jump().mul_vec(s)).collect();
        y.iter()
            .enumerate()
            .map(|(n, s)| {
                let mut out = sup.jump_free().mul_vec(s);
                if n > 0 {
                    out.iter_mut().zip(&jumped[n - 1]).for_each(|(o, j)| *o += j);
                }
                out
            })
            .collect()
    };
    let shifted = |y: &[Vec<Complex64>], k: &[Vec<Complex64>], h: f64| -> Vec<Vec<Complex64>> {
        y.iter()
            .zip(k)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &d)| x + d * h).collect())
            .collect()
    };
    let dt = grid.dt;
    for step in 1..=steps {
        let k1 = rhs(&states);
        let k2 = rhs(&shifted(&states, &k1, dt / 2.0));
        let k3 = rhs(&shifted(&states, &k2, dt / 2.0));
        let k4 = rhs(&shifted(&states, &k3, dt));
        for n in 0..=n_max {
            for i in 0..dim {
                states[n][i] += (k1[n][i] + (k2[n][i] + k3[n][i]) * 2.0 + k4[n][i]) * (dt / 6.0);
            }
        }
        if states[0].iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteState { step, time: step as f64 * dt });
        }
        if step % stride == 0 {
            history.push(record(&states, step as f64 * dt));
        }
    }
    let hier = JumpHierarchy {
        time: steps as f64 * dt,
        states,
        sup: sup.clone(),
        trace_history: history,
    };
    let weight = hier.truncation_weight();
    if weight > bound {
        return Err(Error::Truncation { weight, bound });
    }
    Ok(hier)
}

/// Doubles `n_max` from `n_start` until `Tr rho_{n_max}(t_max) < bound`.
pub fn jump_hierarchy_adaptive(
    rho0: &DensityMatrix,
    sup: &Superoperator,
    n_start: usize,
    grid: TimeGrid,
    bound: f64,
    n_cap: usize,
) -> Result<JumpHierarchy> {
    let mut n_max = n_start.max(1);
    loop {
        match jump_hierarchy(rho0, sup, n_max, grid, bound) {
            Err(Error::Truncation { weight, bound }) if n_max * 2 > n_cap => {
                return Err(Error::Truncation { weight, bound })
            }
            Err(Error::Truncation { .. }) => n_max *= 2,
            other => return other,
        }
    }
}

fn partition(traces: &[f64], zeta: f64) -> Result<f64> {
    let z: f64 = traces.iter().enumerate().map(|(n, &p)| zeta.powi(n as i32) * p).sum();
    if !(z > 1e-300) {
        return Err(Error::PartitionUnderflow(z));
    }
    Ok(z)
}

/// `rho_zeta = sum_n zeta^n rho_n / Z` with `Z = sum_n zeta^n Tr rho_n`.
pub fn grand_canonical(hier: &JumpHierarchy, zeta: f64) -> Result<(DensityMatrix, f64)> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::Fugacity(zeta));
    }
    let z = partition(&hier.traces(), zeta)?;
    let mut acc = vec![Complex64::new(0.0, 0.0); hier.sup.dim()];
    for (n, s) in hier.states.iter().enumerate() {
        let w = zeta.powi(n as i32) / z;
        if w == 0.0 {
            continue;
        }
        acc.iter_mut().zip(s).for_each(|(a, &x)| *a += x * w);
    }
    let rho = DensityMatrix {
        matrix: hier.sup.embed(&acc),
        normalized: true,
        log_norm: z.ln(),
    };
    Ok((rho, z))
}

/// Jump-number statistics at fugacity `zeta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountingStats {
    /// `ln Z_zeta`.
    pub free_energy: f64,
    /// `<n>_zeta = sum_n n zeta^n Tr rho_n / Z`.
    pub mean: f64,
    pub variance: f64,
}

pub fn counting_stats(hier: &JumpHierarchy, zeta: f64) -> Result<CountingStats> {
    counting_from_traces(&hier.traces(), zeta)
}

pub(crate) fn counting_from_traces(traces: &[f64], zeta: f64) -> Result<CountingStats> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::Fugacity(zeta));
    }
    let z = partition(traces, zeta)?;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (n, &p) in traces.iter().enumerate() {
        let w = zeta.powi(n as i32) * p / z;
        m1 += n as f64 * w;
        m2 += (n * n) as f64 * w;
    }
    Ok(CountingStats {
        free_energy: z.ln(),
        mean: m1,
        variance: (m2 - m1 * m1).max(0.0),
    })
}

impl JumpHierarchy {
    /// `(t, CountingStats)` along the sampling grid.
    pub fn counting_history(&self, zeta: f64) -> Result<Vec<(f64, CountingStats)>> {
        self.trace_history
            .iter()
            .map(|(t, tr)| Ok((*t, counting_from_traces(tr, zeta)?)))
            .collect()
    }
}
