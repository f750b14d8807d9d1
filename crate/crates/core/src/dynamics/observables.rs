use num_complex::Complex64;

use crate::fock::{staggered_count, FockBasis};
use crate::linalg::CMat;
use crate::model::{decay_rates, ModelParams};
use crate::{Error, Result};

/// Expectation values of one state, normalized by its trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    /// `<I> / <N>`.
    pub imbalance: f64,
    /// `<I>` with `I = sum_i (-1)^(i+1) n_i`.
    pub staggered: f64,
    /// `<N>`.
    pub number: f64,
    /// `<I^2>`.
    pub staggered_sq: f64,
    /// `<N I>`.
    pub number_staggered: f64,
    /// Bond currents `-i J <b_i^† b_{i+1} - b_{i+1}^† b_i>` for `i = 1..L-1`.
    pub currents: Vec<f64>,
    /// `Tr[LJ rho] / Tr rho = sum_a Gamma_a rho_aa / Tr rho`.
    pub jump_rate: f64,
    /// Largest imaginary part among the quantities above.
    pub imag_residue: f64,
}

/// Precomputed diagonal data and hopping pairs for evaluating [`Observables`].
#[derive(Clone, Debug)]
pub struct ObservableSet {
    sites: usize,
    hopping: f64,
    number: Vec<f64>,
    staggered: Vec<f64>,
    decay: Vec<f64>,
    /// Per bond: `(k, k')` with `b_i^† b_{i+1} |k> = |k'>`.
    bond_pairs: Vec<Vec<(usize, usize)>>,
}

impl ObservableSet {
    pub fn new(basis: &FockBasis, params: &ModelParams) -> Self {
        let l = basis.sites();
        let number = (0..basis.dim()).map(|k| basis.particle_count(k) as f64).collect();
        let staggered = basis.states().iter().map(|&s| staggered_count(s, l) as f64).collect();
        let bond_pairs = (0..l.saturating_sub(1))
            .map(|i| {
                basis
                    .states()
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| (s >> i) & 0b11 == 0b10)
                    .filter_map(|(k, &s)| basis.index_of(s ^ (0b11 << i)).map(|k2| (k, k2)))
                    .collect()
            })
            .collect();
        Self {
            sites: l,
            hopping: params.hopping,
            number,
            staggered,
            decay: decay_rates(basis, params),
            bond_pairs,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.number.len()
    }

    pub fn current_names(&self) -> Vec<String> {
        (1..self.sites).map(|i| format!("current_{i}")).collect()
    }

    /// Errors when `<N>` vanishes, since the imbalance ratio is undefined.
    pub fn evaluate(&self, rho: &CMat) -> Result<Observables> {
        let o = self.evaluate_unchecked(rho)?;
        if o.number.abs() < 1e-14 {
            return Err(Error::EmptyState(o.number));
        }
        Ok(o)
    }

    /// Like [`evaluate`](Self::evaluate) but reports a `NaN` imbalance for an empty state.
    pub fn evaluate_unchecked(&self, rho: &CMat) -> Result<Observables> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.nrows(),
            });
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut tr = zero;
        let (mut n, mut s, mut s2, mut ns, mut g) = (zero, zero, zero, zero, zero);
        for k in 0..d {
            let p = rho[(k, k)];
            tr += p;
            n += p * self.number[k];
            s += p * self.staggered[k];
            s2 += p * self.staggered[k] * self.staggered[k];
            ns += p * self.number[k] * self.staggered[k];
            g += p * self.decay[k];
        }
        if tr.norm() < 1e-300 {
            return Err(Error::TraceCollapse { trace: tr.norm(), time: f64::NAN });
        }
        let inv = Complex64::new(1.0, 0.0) / tr;
        let currents: Vec<Complex64> = self
            .bond_pairs
            .iter()
            .map(|pairs| {
                let sum: Complex64 = pairs.iter().map(|&(k, k2)| rho[(k, k2)] - rho[(k2, k)]).sum();
                Complex64::new(0.0, -self.hopping) * sum * inv
            })
            .collect();
        let (n, s, s2, ns, g) = (n * inv, s * inv, s2 * inv, ns * inv, g * inv);
        let imag_residue = [n, s, s2, ns, g]
            .iter()
            .chain(&currents)
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        Ok(Observables {
            imbalance: if n.re.abs() < 1e-14 { f64::NAN } else { s.re / n.re },
            staggered: s.re,
            number: n.re,
            staggered_sq: s2.re,
            number_staggered: ns.re,
            currents: currents.iter().map(|z| z.re).collect(),
            jump_rate: g.re,
            imag_residue,
        })
    }
}
