use super::propagate::SteadyOptions;
use super::state::DensityMatrix;
use crate::linalg::hermitian_part;
use crate::spectra::eigenpairs;
use crate::superop::Superoperator;
use crate::{Error, Result};
use num_complex::Complex64;

/// Dominant right eigenvector of a superoperator, as a unit-trace state.
#[derive(Clone, Debug)]
pub struct SteadyEigen {
    pub state: DensityMatrix,
    pub eigenvalue: Complex64,
    /// `Re(lambda_1) - Re(lambda_2)` between the two eigenvalues with largest real part.
    pub gap: f64,
}

pub fn steady_state_eig(sup: &Superoperator, budget: usize) -> Result<SteadyEigen> {
    let (values, vectors) = eigenpairs(&sup.to_dense(), budget)?;
    if values.is_empty() {
        return Err(Error::Empty("superoperator"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].re.total_cmp(&values[a].re));
    let lead = values[order[0]];
    if lead.im.abs() > 1e-8 {
        return Err(Error::ComplexDominant(lead));
    }
    let gap = order.get(1).map_or(f64::INFINITY, |&k| lead.re - values[k].re);
    let v: Vec<Complex64> = vectors.col(order[0]).iter().copied().collect();
    let tr = sup.trace(&v);
    if tr.norm() < 1e-14 {
        return Err(Error::TraceCollapse { trace: tr.norm(), time: f64::INFINITY });
    }
    let scaled: Vec<Complex64> = v.iter().map(|z| z / tr).collect();
    let state = DensityMatrix::normalized(hermitian_part(&sup.embed(&scaled)))?;
    Ok(SteadyEigen { state, eigenvalue: Complex64::new(lead.re, 0.0), gap })
}

/// Long-time jump rate `<l|LJ r> / <l|r>` in a tilted steady state, with `l`
/// the left dominant eigenvector.
#[derive(Clone, Copy, Debug)]
pub struct SteadyActivity {
    pub activity: f64,
    pub converged: bool,
    pub residual: f64,
    pub t_reached: f64,
}

/// At unit fugacity `l` is the trace functional; otherwise `l` is relaxed by
/// integrating `dl/dt = (L^dagger - conj(lambda_1)) l` from the trace functional,
/// stopping on the same stationarity rule as the right eigenvector.
pub fn steady_activity(sup: &Superoperator, steady: &DensityMatrix, opts: &SteadyOptions) -> Result<SteadyActivity> {
    let r = sup.restrict(&steady.matrix)?;
    let jr = sup.jump().mul_vec(&r);
    if sup.zeta() == 1.0 {
        return Ok(SteadyActivity { activity: sup.trace(&jr).re, converged: true, residual: 0.0, t_reached: 0.0 });
    }
    let shift = sup.trace_of_image(&r) / sup.trace(&r);
    let adj = sup.matrix().adjoint();
    let n = r.len();
    let rhs = |l: &[Complex64], out: &mut [Complex64]| {
        adj.mul_vec_into(l, out);
        for (o, x) in out.iter_mut().zip(l) {
            *o -= shift.conj() * x;
        }
    };
    let overlap = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let mut l = vec![Complex64::new(0.0, 0.0); n];
    for &k in sup.diagonal_slots() {
        l[k] = Complex64::new(1.0, 0.0);
    }
    let per_chunk = ((opts.chunk / opts.dt).round() as usize).max(1);
    let dt = opts.dt;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![l[0]; n], vec![l[0]; n], vec![l[0]; n], vec![l[0]; n], vec![l[0]; n]);
    let mut previous = l.clone();
    let mut time = 0.0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while time < opts.t_max - 0.5 * dt {
        for _ in 0..per_chunk {
            rhs(&l, &mut k1);
            tmp.iter_mut().zip(&l).zip(&k1).for_each(|((t, x), k)| *t = x + 0.5 * dt * k);
            rhs(&tmp, &mut k2);
            tmp.iter_mut().zip(&l).zip(&k2).for_each(|((t, x), k)| *t = x + 0.5 * dt * k);
            rhs(&tmp, &mut k3);
            tmp.iter_mut().zip(&l).zip(&k3).for_each(|((t, x), k)| *t = x + dt * k);
            rhs(&tmp, &mut k4);
            for i in 0..n {
                l[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            time += dt;
        }
        let norm = overlap(&l, &r);
        if !norm.is_finite() || norm.norm() < 1e-300 {
            return Err(Error::TraceCollapse { trace: norm.norm(), time });
        }
        let scale = norm.conj().inv();
        l.iter_mut().for_each(|x| *x *= scale);
        residual = l.iter().zip(&previous).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        previous.clone_from(&l);
        if residual < opts.tol && time >= opts.t_min.min(opts.t_max) {
            converged = true;
            break;
        }
    }
    let activity = (overlap(&l, &jr) / overlap(&l, &r)).re;
    Ok(SteadyActivity { activity, converged, residual, t_reached: time })
}
