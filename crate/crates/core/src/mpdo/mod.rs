//! Matrix-product density operators and zip-up TEBD for the deformed
//! Liouvillian on chains of up to 32 sites.
//!
//! Site `i` carries a tensor with indices (left bond, physical, right bond).
//! The physical index `p = ket + 2 * bra` runs over the four entries of the
//! local 2x2 density matrix. Tensors are stored column-major as a
//! `(left * 4) x right` matrix, which is bitwise the same buffer as the
//! `left x (4 * right)` matrix, so both reshapes used by QR sweeps are free.
//!
//! The represented operator is `exp(log_scale)` times the contraction of the
//! tensors.

mod checkpoint;
mod gates;
mod tebd;

use faer::MatRef;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::{OperatorTerm, SiteOp};
use crate::linalg::CMat;
use crate::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_VERSION};
pub use gates::{bond_gates, bond_generators, chain_terms, BondGate, ChainTerms, TrotterGates};
pub use tebd::{apply_gate, tebd_run, tebd_step, GateReport, Sweep, TebdConfig, TebdMeta, TebdRun};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Largest chain that [`Mpdo::to_dense`] will expand.
pub const DENSE_SITE_LIMIT: usize = 10;

/// Gauge of an [`Mpdo`]. `Mixed(c)` has sites `< c` left-orthonormal, sites
/// `> c` right-orthonormal and the norm on site `c` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalForm {
    None,
    Left,
    Right,
    Mixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct SiteTensor {
    pub left: usize,
    pub right: usize,
    pub data: Vec<Complex64>,
}

impl SiteTensor {
    fn new(left: usize, right: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), left * 4 * right);
        Self { left, right, data }
    }

    #[inline]
    fn at(&self, l: usize, p: usize, r: usize) -> Complex64 {
        self.data[l + self.left * (p + 4 * r)]
    }

    /// `(left * 4) x right` view.
    fn grouped_left(&self) -> MatRef<'_, Complex64> {
        MatRef::from_column_major_slice(&self.data, self.left * 4, self.right)
    }

    /// `left x (4 * right)` view.
    fn grouped_right(&self) -> MatRef<'_, Complex64> {
        MatRef::from_column_major_slice(&self.data, self.left, 4 * self.right)
    }

    /// `sum_p v_p A[:, p, :]` as a `left x right` matrix.
    fn transfer(&self, v: &[Complex64; 4]) -> CMat {
        CMat::from_fn(self.left, self.right, |l, r| (0..4).map(|p| v[p] * self.at(l, p, r)).sum())
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub(crate) fn column_major(m: MatRef<'_, Complex64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        out.extend(m.col(j).iter().copied());
    }
    out
}

/// Trace vector: picks the diagonal `ket == bra` entries.
const TRACE_VECTOR: [Complex64; 4] = [ONE, ZERO, ZERO, ONE];

/// Local vector `v` with `sum_p v_p rho_p = Tr[op rho]` for a 2x2 operator.
fn local_vector(op: &[[Complex64; 2]; 2]) -> [Complex64; 4] {
    let mut v = [ZERO; 4];
    for ket in 0..2 {
        for bra in 0..2 {
            v[ket + 2 * bra] = op[bra][ket];
        }
    }
    v
}

pub(crate) fn site_matrix(op: SiteOp) -> [[Complex64; 2]; 2] {
    match op {
        SiteOp::Create => [[ZERO, ZERO], [ONE, ZERO]],
        SiteOp::Annihilate => [[ZERO, ONE], [ZERO, ZERO]],
        SiteOp::Number => [[ZERO, ZERO], [ZERO, ONE]],
    }
}

fn mul2(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Matrix-product density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpdo {
    pub(crate) tensors: Vec<SiteTensor>,
    pub(crate) form: CanonicalForm,
    pub(crate) log_scale: f64,
}

impl Mpdo {
    /// Product state `|n><n|` for the given occupations.
    pub fn product(occupations: &[bool]) -> Result<Self> {
        if occupations.is_empty() || occupations.len() > crate::fock::MAX_SITES {
            return Err(Error::SiteCount(occupations.len()));
        }
        let tensors = occupations
            .iter()
            .map(|&n| {
                let mut data = vec![ZERO; 4];
                data[if n { 3 } else { 0 }] = ONE;
                SiteTensor::new(1, 1, data)
            })
            .collect();
        Ok(Self { tensors, form: CanonicalForm::Mixed(1), log_scale: 0.0 })
    }

    /// Builds an MPDO from `(left, right, data)` triples in the layout
    /// described at module level.
    pub fn from_tensors(tensors: Vec<(usize, usize, Vec<Complex64>)>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::SiteCount(0));
        }
        let mut prev = 1;
        let last = tensors.len() - 1;
        let mut out = Vec::with_capacity(tensors.len());
        for (i, (left, right, data)) in tensors.into_iter().enumerate() {
            if left != prev || (i == last && right != 1) || right == 0 {
                return Err(Error::DimensionMismatch { expected: prev, found: left });
            }
            if data.len() != left * 4 * right {
                return Err(Error::DimensionMismatch { expected: left * 4 * right, found: data.len() });
            }
            prev = right;
            out.push(SiteTensor::new(left, right, data));
        }
        Ok(Self { tensors: out, form: CanonicalForm::None, log_scale: 0.0 })
    }

    pub fn sites(&self) -> usize {
        self.tensors.len()
    }

    /// `D_1 .. D_{L-1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.sites() - 1].iter().map(|t| t.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn form(&self) -> CanonicalForm {
        self.form
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Raw tensor of site `i` (1-based) as `(left, right, data)`.
    pub fn tensor(&self, site: usize) -> (usize, usize, &[Complex64]) {
        let t = &self.tensors[site - 1];
        (t.left, t.right, &t.data)
    }

    fn check_finite(&self) -> Result<()> {
        if self.tensors.iter().all(SiteTensor::is_finite) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Moves the norm of site `c` into the scale and leaves `c` unit-norm.
    fn normalize_site(&mut self, c: usize) -> Result<()> {
        let t = &mut self.tensors[c - 1];
        let norm = t.frobenius();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm(c));
        }
        let inv = 1.0 / norm;
        t.data.iter_mut().for_each(|z| *z *= inv);
        self.log_scale += norm.ln();
        Ok(())
    }

    /// QR step: site `c` becomes left-orthonormal, `R` is absorbed into `c + 1`.
    fn shift_right(&mut self, c: usize) -> Result<()> {
        let (q, r) = {
            let t = &self.tensors[c - 1];
            let qr = t.grouped_left().qr();
            (qr.compute_thin_Q(), qr.thin_R().to_owned())
        };
        if r.nrows() == 0 || crate::linalg::max_abs(&r) == 0.0 {
            return Err(Error::ZeroNorm(c));
        }
        let k = q.ncols();
        let left = self.tensors[c - 1].left;
        self.tensors[c - 1] = SiteTensor::new(left, k, column_major(q.as_ref()));
        let next = &self.tensors[c];
        let merged = &r * next.grouped_right();
        let right = next.right;
        self.tensors[c] = SiteTensor::new(k, right, column_major(merged.as_ref()));
        Ok(())
    }

    /// LQ step: site `c` becomes right-orthonormal, `L` is absorbed into `c - 1`.
    fn shift_left(&mut self, c: usize) -> Result<()> {
        let (q, r) = {
            let t = &self.tensors[c - 1];
            let qr = t.grouped_right().adjoint().qr();
            (qr.compute_thin_Q(), qr.thin_R().to_owned())
        };
        if r.nrows() == 0 || crate::linalg::max_abs(&r) == 0.0 {
            return Err(Error::ZeroNorm(c));
        }
        // t = r^† q^†
        let k = q.ncols();
        let right = self.tensors[c - 1].right;
        self.tensors[c - 1] = SiteTensor::new(k, right, column_major(q.adjoint().to_owned().as_ref()));
        let prev = &self.tensors[c - 2];
        let merged = prev.grouped_left() * r.adjoint();
        let left = prev.left;
        self.tensors[c - 2] = SiteTensor::new(left, k, column_major(merged.as_ref()));
        Ok(())
    }

    /// Brings the MPDO into the requested gauge via QR sweeps. The
    /// orthogonality center is normalized to unit 2-norm and its norm is added
    /// to `log_scale`.
    pub fn canonicalize(&mut self, form: CanonicalForm) -> Result<()> {
        let l = self.sites();
        let center = match form {
            CanonicalForm::None => return Ok(()),
            CanonicalForm::Left => l,
            CanonicalForm::Right => 1,
            CanonicalForm::Mixed(c) if (1..=l).contains(&c) => c,
            CanonicalForm::Mixed(c) => return Err(Error::SiteLabel { site: c, sites: l }),
        };
        self.check_finite()?;
        for c in 1..center {
            self.shift_right(c)?;
        }
        for c in (center + 1..=l).rev() {
            self.shift_left(c)?;
        }
        self.normalize_site(center)?;
        self.form = form;
        Ok(())
    }

    /// Current orthogonality center, if any.
    pub fn center(&self) -> Option<usize> {
        match self.form {
            CanonicalForm::None => None,
            CanonicalForm::Left => Some(self.sites()),
            CanonicalForm::Right => Some(1),
            CanonicalForm::Mixed(c) => Some(c),
        }
    }

    /// Moves the orthogonality center to `target`, canonicalizing first if
    /// the MPDO has no center.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        let Some(mut c) = self.center() else {
            return self.canonicalize(CanonicalForm::Mixed(target));
        };
        while c < target {
            self.shift_right(c)?;
            c += 1;
        }
        while c > target {
            self.shift_left(c)?;
            c -= 1;
        }
        self.normalize_site(c)?;
        self.form = CanonicalForm::Mixed(c);
        Ok(())
    }

    /// Contraction with one local vector per site.
    fn contract(&self, vectors: &[[Complex64; 4]]) -> Complex64 {
        let mut env = CMat::from_fn(1, 1, |_, _| ONE);
        for (t, v) in self.tensors.iter().zip(vectors) {
            env = &env * t.transfer(v);
        }
        env[(0, 0)]
    }

    /// Trace of the contraction, without `exp(log_scale)`.
    pub fn trace_unscaled(&self) -> Complex64 {
        self.contract(&vec![TRACE_VECTOR; self.sites()])
    }

    /// `Tr rho`, including the scale factor.
    pub fn trace(&self) -> Complex64 {
        self.trace_unscaled() * self.log_scale.exp()
    }

    /// `ln |Tr rho|`.
    pub fn log_trace(&self) -> f64 {
        self.log_scale + self.trace_unscaled().norm().ln()
    }

    /// `Tr[rho^† rho]` of the contraction, without the scale factor.
    pub fn norm_sqr_unscaled(&self) -> f64 {
        let mut env = CMat::from_fn(1, 1, |_, _| ONE);
        for t in &self.tensors {
            let next = CMat::from_fn(t.right, t.right, |r, s| {
                let mut acc = ZERO;
                for l in 0..t.left {
                    for m in 0..t.left {
                        let e = env[(l, m)];
                        if e == ZERO {
                            continue;
                        }
                        for p in 0..4 {
                            acc += e * t.at(l, p, r).conj() * t.at(m, p, s);
                        }
                    }
                }
                acc
            });
            env = next;
        }
        env[(0, 0)].re
    }

    /// `Tr[O rho] / Tr rho` for a product of site operators. The imaginary
    /// part is the residue left by truncation and Trotterization.
    pub fn expectation(&self, term: &OperatorTerm) -> Result<Complex64> {
        if term.factors.is_empty() {
            return Err(Error::EmptyOperatorString);
        }
        let l = self.sites();
        let mut local: Vec<Option<[[Complex64; 2]; 2]>> = vec![None; l];
        for &(site, op) in &term.factors {
            if site == 0 || site > l {
                return Err(Error::SiteLabel { site, sites: l });
            }
            let m = site_matrix(op);
            local[site - 1] = Some(match local[site - 1] {
                Some(acc) => mul2(&acc, &m),
                None => m,
            });
        }
        let vectors: Vec<[Complex64; 4]> = local
            .iter()
            .map(|m| m.as_ref().map_or(TRACE_VECTOR, local_vector))
            .collect();
        Ok(term.coefficient * self.contract(&vectors) / self.trace_unscaled())
    }

    /// `<n_i>` for every site, normalized by the trace, from one pair of
    /// environment sweeps.
    pub fn densities(&self) -> Vec<Complex64> {
        let l = self.sites();
        let number = local_vector(&site_matrix(SiteOp::Number));
        let mut left_env = Vec::with_capacity(l + 1);
        left_env.push(CMat::from_fn(1, 1, |_, _| ONE));
        for t in &self.tensors {
            let next = left_env.last().unwrap() * t.transfer(&TRACE_VECTOR);
            left_env.push(next);
        }
        let mut right_env = vec![CMat::from_fn(1, 1, |_, _| ONE); l + 1];
        for i in (0..l).rev() {
            right_env[i] = self.tensors[i].transfer(&TRACE_VECTOR) * &right_env[i + 1];
        }
        let trace = left_env[l][(0, 0)];
        (0..l)
            .map(|i| {
                let v = &left_env[i] * self.tensors[i].transfer(&number) * &right_env[i + 1];
                v[(0, 0)] / trace
            })
            .collect()
    }

    /// Dense `2^L x 2^L` density matrix in the occupation basis (site `i` is
    /// bit `i - 1`), including the scale factor.
    pub fn to_dense(&self) -> Result<CMat> {
        let l = self.sites();
        if l > DENSE_SITE_LIMIT {
            return Err(Error::Budget { dim: 1 << (2 * l), cap: 1 << (2 * DENSE_SITE_LIMIT) });
        }
        // rows: physical multi-index p_1 + 4 p_2 + ..., columns: open bond
        let mut acc = CMat::from_fn(1, 1, |_, _| ONE);
        for t in &self.tensors {
            let rows = acc.nrows();
            let mut next = CMat::zeros(rows * 4, t.right);
            for r in 0..t.right {
                for p in 0..4 {
                    for m in 0..t.left {
                        let a = t.at(m, p, r);
                        if a == ZERO {
                            continue;
                        }
                        for row in 0..rows {
                            next[(row + rows * p, r)] += acc[(row, m)] * a;
                        }
                    }
                }
            }
            acc = next;
        }
        let dim = 1usize << l;
        let scale = self.log_scale.exp();
        let mut rho = CMat::zeros(dim, dim);
        for idx in 0..acc.nrows() {
            let (mut ket, mut bra, mut rest) = (0usize, 0usize, idx);
            for site in 0..l {
                let p = rest % 4;
                rest /= 4;
                ket |= (p & 1) << site;
                bra |= (p >> 1) << site;
            }
            rho[(ket, bra)] = acc[(idx, 0)] * scale;
        }
        Ok(rho)
    }
}
