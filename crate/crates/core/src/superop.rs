//! Vectorized density matrices and the fugacity-deformed Liouvillian.
//!
//! Density matrices are column-stacked: entry `rho[a, b]` of a `D x D` matrix
//! sits at position `a + D * b`, so `A rho B` becomes `(B^T ⊗ A) vec(rho)`.
//!
//! The Liouvillian is stored as two cached pieces, the jump-free part
//! `L0 rho = -i (Heff rho - rho Heff^†)` with `Heff = H - (i/2) sum O^† O`, and
//! the jump part `LJ rho = sum O rho O^†`; the deformed generator is
//! `L0 + zeta LJ`. An operator may be restricted to a subset of vectorized
//! positions, typically one charge sector `q = N_ket - N_bra`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::FockBasis;
use crate::linalg::CMat;
use crate::sparse::{RowBuilder, SparseOperator};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn vectorize(rho: &CMat) -> Result<Vec<Complex64>> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::NotSquare {
            rows: rho.nrows(),
            cols: rho.ncols(),
        });
    }
    let d = rho.nrows();
    let mut v = Vec::with_capacity(d * d);
    for b in 0..d {
        for a in 0..d {
            v.push(rho[(a, b)]);
        }
    }
    Ok(v)
}

pub fn devectorize(v: &[Complex64]) -> Result<CMat> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::NotSquare { rows: v.len(), cols: 1 });
    }
    Ok(Mat::from_fn(d, d, |a, b| v[a + d * b]))
}

/// Matrix of `rho -> A rho B` on the column-stacked space, i.e. `B^T ⊗ A`.
pub fn sandwich(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.dim(),
        });
    }
    let bt = b.transpose();
    let mut builder = RowBuilder::new(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let mut row = Vec::new();
            for (k, aik) in a.row(i) {
                for (l, blj) in bt.row(j) {
                    row.push((k + d * l, aik * blj));
                }
            }
            builder.push_row(row);
        }
    }
    Ok(builder.finish())
}

#[derive(Clone, Debug)]
pub struct Superoperator {
    hilbert_dim: usize,
    positions: Vec<usize>,
    jump_free: SparseOperator,
    jump: SparseOperator,
    zeta: f64,
    combined: SparseOperator,
    diagonal_slots: Vec<usize>,
    trace_free: Vec<Complex64>,
    trace_jump: Vec<Complex64>,
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::Fugacity(zeta));
    }
    Ok(())
}

/// `H - (i/2) sum_a O_a^† O_a`.
pub fn effective_hamiltonian(h: &SparseOperator, jumps: &[SparseOperator]) -> Result<SparseOperator> {
    let mut heff = h.clone();
    for o in jumps {
        if o.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: o.dim(),
            });
        }
        heff = heff.add_scaled(&o.adjoint().matmul(o)?, Complex64::new(0.0, -0.5))?;
    }
    Ok(heff)
}

/// Full-space `L_zeta` for Hamiltonian `h` and jump operators `jumps`.
pub fn build_zeta_liouvillian(h: &SparseOperator, jumps: &[SparseOperator], zeta: f64) -> Result<Superoperator> {
    let d = h.dim();
    Superoperator::assemble(h, jumps, zeta, (0..d * d).collect())
}

/// `L_zeta` restricted to the charge sector `q = N_ket - N_bra` of an
/// unrestricted basis.
pub fn build_sector_liouvillian(
    basis: &FockBasis,
    h: &SparseOperator,
    jumps: &[SparseOperator],
    zeta: f64,
    charge: i32,
) -> Result<Superoperator> {
    if basis.is_restricted() {
        return Err(Error::RestrictedBasis("a superoperator charge sector"));
    }
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: h.dim(),
        });
    }
    Superoperator::assemble(h, jumps, zeta, sector_positions(basis, charge))
}

/// Sorted vectorized positions `a + D b` with `N(a) - N(b) = charge`.
pub fn sector_positions(basis: &FockBasis, charge: i32) -> Vec<usize> {
    let d = basis.dim();
    let counts: Vec<i32> = (0..d).map(|k| basis.particle_count(k) as i32).collect();
    let mut out = Vec::new();
    for b in 0..d {
        for a in 0..d {
            if counts[a] - counts[b] == charge {
                out.push(a + d * b);
            }
        }
    }
    out
}

impl Superoperator {
    fn assemble(h: &SparseOperator, jumps: &[SparseOperator], zeta: f64, positions: Vec<usize>) -> Result<Self> {
        check_zeta(zeta)?;
        let d = h.dim();
        let heff = effective_hamiltonian(h, jumps)?;
        let heff_adj = heff.adjoint();
        let id = SparseOperator::identity(d);
        let full = positions.len() == d * d;
        let restrict = |m: SparseOperator| if full { m } else { m.submatrix(&positions) };

        let jump_free = sandwich(&heff, &id)?
            .scaled(-I)
            .add_scaled(&sandwich(&id, &heff_adj)?, I)?;
        let mut jump = SparseOperator::zeros(d * d, d * d);
        for o in jumps {
            jump = jump.add_scaled(&sandwich(o, &o.adjoint())?, ONE)?;
        }
        Self::from_parts(d, positions.clone(), restrict(jump_free), restrict(jump), zeta)
    }

    fn from_parts(
        hilbert_dim: usize,
        positions: Vec<usize>,
        jump_free: SparseOperator,
        jump: SparseOperator,
        zeta: f64,
    ) -> Result<Self> {
        let d = hilbert_dim;
        let diagonal_slots: Vec<usize> = positions
            .iter()
            .enumerate()
            .filter(|(_, &p)| p % d == p / d)
            .map(|(k, _)| k)
            .collect();
        let column_sums = |m: &SparseOperator| {
            let mut w = vec![ZERO; m.ncols()];
            for &r in &diagonal_slots {
                for (c, v) in m.row(r) {
                    w[c] += v;
                }
            }
            w
        };
        let trace_free = column_sums(&jump_free);
        let trace_jump = column_sums(&jump);
        let combined = jump_free.add_scaled(&jump, Complex64::new(zeta, 0.0))?;
        Ok(Self {
            hilbert_dim,
            positions,
            jump_free,
            jump,
            zeta,
            combined,
            diagonal_slots,
            trace_free,
            trace_jump,
        })
    }

    /// Same cached parts, different fugacity.
    pub fn with_zeta(&self, zeta: f64) -> Result<Self> {
        check_zeta(zeta)?;
        let mut out = self.clone();
        out.zeta = zeta;
        out.combined = self.jump_free.add_scaled(&self.jump, Complex64::new(zeta, 0.0))?;
        Ok(out)
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Number of vectorized positions the operator acts on.
    pub fn dim(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn is_full(&self) -> bool {
        self.positions.len() == self.hilbert_dim * self.hilbert_dim
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn jump_free(&self) -> &SparseOperator {
        &self.jump_free
    }

    pub fn jump(&self) -> &SparseOperator {
        &self.jump
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.combined
    }

    pub fn to_dense(&self) -> CMat {
        self.combined.to_dense()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.combined.mul_vec(v)
    }

    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        self.combined.mul_vec_into(v, out)
    }

    /// Local slots holding diagonal entries `rho[a, a]`.
    pub fn diagonal_slots(&self) -> &[usize] {
        &self.diagonal_slots
    }

    /// `Tr rho` of a local vector.
    pub fn trace(&self, v: &[Complex64]) -> Complex64 {
        self.diagonal_slots.iter().map(|&k| v[k]).sum()
    }

    /// `Tr[L_zeta rho]` without forming `L_zeta rho`.
    pub fn trace_of_image(&self, v: &[Complex64]) -> Complex64 {
        let z = Complex64::new(self.zeta, 0.0);
        self.trace_free
            .iter()
            .zip(&self.trace_jump)
            .zip(v)
            .map(|((&a, &b), &x)| (a + z * b) * x)
            .sum()
    }

    /// `Tr[LJ rho]`.
    pub fn trace_of_jump_image(&self, v: &[Complex64]) -> Complex64 {
        self.trace_jump.iter().zip(v).map(|(&a, &x)| a * x).sum()
    }

    /// Local vector of a dense density matrix; errors if it has weight
    /// outside the operator's positions.
    pub fn restrict(&self, rho: &CMat) -> Result<Vec<Complex64>> {
        let d = self.hilbert_dim;
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.nrows(),
            });
        }
        let mut local = Vec::with_capacity(self.positions.len());
        let mut covered = 0usize;
        for &p in &self.positions {
            let v = rho[(p % d, p / d)];
            local.push(v);
            if v != ZERO {
                covered += 1;
            }
        }
        let total = (0..d)
            .flat_map(|b| (0..d).map(move |a| (a, b)))
            .filter(|&(a, b)| rho[(a, b)] != ZERO)
            .count();
        if covered != total {
            return Err(Error::InvalidParameter(
                "state has weight outside the superoperator's charge sector".into(),
            ));
        }
        Ok(local)
    }

    /// Dense matrix of a local vector (zeros outside the positions).
    pub fn embed(&self, v: &[Complex64]) -> CMat {
        let d = self.hilbert_dim;
        let mut rho = CMat::zeros(d, d);
        for (&p, &x) in self.positions.iter().zip(v) {
            rho[(p % d, p / d)] = x;
        }
        rho
    }
}

#[derive(Clone, Debug)]
pub struct SectorBlock {
    pub charge: i32,
    pub indices: Vec<usize>,
    pub block: CMat,
}

/// Dense blocks of a full-space superoperator, one per charge `q = -L..=L`.
pub fn charge_sectors(sup: &Superoperator, basis: &FockBasis) -> Result<Vec<SectorBlock>> {
    check_full(sup, basis)?;
    let l = basis.sites() as i32;
    Ok((-l..=l)
        .map(|q| {
            let indices = sector_positions(basis, q);
            let block = sup.matrix().submatrix(&indices).to_dense();
            SectorBlock { charge: q, indices, block }
        })
        .collect())
}

/// Largest entry of the full-space superoperator coupling different charges.
pub fn sector_leakage(sup: &Superoperator, basis: &FockBasis) -> Result<f64> {
    check_full(sup, basis)?;
    let d = basis.dim();
    let charge = |p: usize| basis.particle_count(p % d) as i32 - basis.particle_count(p / d) as i32;
    Ok(sup
        .matrix()
        .entries()
        .filter(|&(r, c, _)| charge(r) != charge(c))
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max))
}

fn check_full(sup: &Superoperator, basis: &FockBasis) -> Result<()> {
    if basis.is_restricted() {
        return Err(Error::RestrictedBasis("charge sector extraction"));
    }
    if !sup.is_full() || sup.hilbert_dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim() * basis.dim(),
            found: sup.dim(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeKind {
    /// `rho -> [N, rho]`.
    NMinus,
    /// `rho -> {N, rho}`.
    NPlus,
}

/// `max |[L_zeta, N_±]|` for the total number operator `number`.
pub fn symmetry_residual(
    sup: &Superoperator,
    number: &SparseOperator,
    which: ChargeKind,
    cap: usize,
) -> Result<f64> {
    if sup.dim() > cap {
        return Err(Error::Budget { dim: sup.dim(), cap });
    }
    if !sup.is_full() || number.dim() != sup.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: sup.hilbert_dim(),
            found: number.dim(),
        });
    }
    let id = SparseOperator::identity(number.dim());
    let sign = match which {
        ChargeKind::NMinus => -ONE,
        ChargeKind::NPlus => ONE,
    };
    let charge = sandwich(number, &id)?.add_scaled(&sandwich(&id, number)?, sign)?;
    Ok(sup.matrix().commutator(&charge)?.max_abs())
}
