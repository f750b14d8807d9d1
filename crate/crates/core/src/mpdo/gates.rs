use num_complex::Complex64;

use super::site_matrix;
use crate::fock::{OperatorTerm, SiteOp};
use crate::linalg::{expm, kron, CMat};
use crate::model::{DisorderRealization, ModelParams};
use crate::{Error, Result};

/// Hamiltonian and jump operators of a chain as site-operator products.
#[derive(Clone, Debug)]
pub struct ChainTerms {
    pub sites: usize,
    pub hamiltonian: Vec<OperatorTerm>,
    pub jumps: Vec<OperatorTerm>,
}

/// The gain-loss chain written as local terms.
pub fn chain_terms(params: &ModelParams, dis: &DisorderRealization) -> Result<ChainTerms> {
    params.validate()?;
    if dis.fields.len() != params.sites {
        return Err(Error::DimensionMismatch { expected: params.sites, found: dis.fields.len() });
    }
    let l = params.sites;
    let mut hamiltonian: Vec<OperatorTerm> = dis
        .fields
        .iter()
        .enumerate()
        .map(|(i, &h)| OperatorTerm::new(h, vec![(i + 1, SiteOp::Number)]))
        .collect();
    for i in 1..l {
        hamiltonian.push(OperatorTerm::new(-params.hopping, vec![(i, SiteOp::Create), (i + 1, SiteOp::Annihilate)]));
        hamiltonian.push(OperatorTerm::new(-params.hopping, vec![(i + 1, SiteOp::Create), (i, SiteOp::Annihilate)]));
        hamiltonian.push(OperatorTerm::new(params.interaction, vec![(i, SiteOp::Number), (i + 1, SiteOp::Number)]));
    }
    let amp = (2.0 * params.gamma).sqrt();
    let jumps = (1..=l)
        .map(|i| {
            let op = if i % 2 == 1 { SiteOp::Create } else { SiteOp::Annihilate };
            OperatorTerm::new(amp, vec![(i, op)])
        })
        .collect();
    Ok(ChainTerms { sites: l, hamiltonian, jumps })
}

/// Bond a term lives on and the weight it carries there. Single-site terms
/// are shared equally by their two bonds, except at the chain ends.
fn placements(term: &OperatorTerm, sites: usize) -> Result<Vec<(usize, f64)>> {
    let mut touched: Vec<usize> = term.factors.iter().map(|&(s, _)| s).collect();
    if touched.is_empty() {
        return Err(Error::EmptyOperatorString);
    }
    touched.sort_unstable();
    touched.dedup();
    if let Some(&bad) = touched.iter().find(|&&s| s == 0 || s > sites) {
        return Err(Error::SiteLabel { site: bad, sites });
    }
    match touched[..] {
        [s] if sites == 1 => Err(Error::SiteLabel { site: s, sites }),
        [1] => Ok(vec![(1, 1.0)]),
        [s] if s == sites => Ok(vec![(sites - 1, 1.0)]),
        [s] => Ok(vec![(s - 1, 0.5), (s, 0.5)]),
        [a, b] if b == a + 1 => Ok(vec![(a, 1.0)]),
        _ => Err(Error::NotNearestNeighbour(touched[0], touched[touched.len() - 1])),
    }
}

/// 4x4 operator of a term on the bond `(bond, bond + 1)`, two-site index
/// `n_left + 2 n_right`.
fn bond_operator(term: &OperatorTerm, bond: usize) -> CMat {
    let id = CMat::identity(2, 2);
    let mut acc = CMat::identity(4, 4);
    for &(site, op) in &term.factors {
        let m = site_matrix(op);
        let local = CMat::from_fn(2, 2, |i, j| m[i][j]);
        let embedded = if site == bond { kron(&id, &local) } else { kron(&local, &id) };
        acc = &acc * &embedded;
    }
    acc * faer::Scale(term.coefficient)
}

/// Dense 16x16 bond Liouvillians `L_{i,i+1}` whose sum over bonds is `L_zeta`.
/// Two-site physical index is `p_left + 4 p_right` with `p = ket + 2 bra`.
pub fn bond_generators(terms: &ChainTerms, zeta: f64) -> Result<Vec<CMat>> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::Fugacity(zeta));
    }
    if terms.sites < 2 {
        return Err(Error::SiteCount(terms.sites));
    }
    let bonds = terms.sites - 1;
    let mut ham = vec![CMat::zeros(4, 4); bonds];
    let mut jumps: Vec<Vec<(f64, CMat)>> = vec![Vec::new(); bonds];
    for term in &terms.hamiltonian {
        for (b, w) in placements(term, terms.sites)? {
            ham[b - 1] += bond_operator(term, b) * faer::Scale(Complex64::new(w, 0.0));
        }
    }
    for term in &terms.jumps {
        for (b, w) in placements(term, terms.sites)? {
            jumps[b - 1].push((w, bond_operator(term, b)));
        }
    }
    let i = Complex64::new(0.0, 1.0);
    Ok((0..bonds)
        .map(|b| {
            let h = &ham[b];
            let apply = |rho: &CMat| -> CMat {
                let mut out = (h * rho - rho * h) * faer::Scale(-i);
                for (w, o) in &jumps[b] {
                    let od = o.adjoint().to_owned();
                    let odo = &od * o;
                    let jump = o * rho * &od * faer::Scale(Complex64::new(zeta, 0.0));
                    let anti = (&odo * rho + rho * &odo) * faer::Scale(Complex64::new(0.5, 0.0));
                    out += (jump - anti) * faer::Scale(Complex64::new(*w, 0.0));
                }
                out
            };
            let split = |pp: usize| {
                let (pl, pr) = (pp % 4, pp / 4);
                ((pl & 1) + 2 * (pr & 1), (pl >> 1) + 2 * (pr >> 1))
            };
            let mut g = CMat::zeros(16, 16);
            for col in 0..16 {
                let (ket, bra) = split(col);
                let e = CMat::from_fn(4, 4, |r, c| if r == ket && c == bra { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
                let image = apply(&e);
                for row in 0..16 {
                    let (k, b) = split(row);
                    g[(row, col)] = image[(k, b)];
                }
            }
            g
        })
        .collect())
}

/// `exp(tau L_{i,i+1})` on one bond.
#[derive(Clone, Debug)]
pub struct BondGate {
    /// 1-based left site of the bond.
    pub bond: usize,
    pub tau: f64,
    pub matrix: CMat,
}

pub fn bond_gates(generators: &[CMat], tau: f64) -> Result<Vec<BondGate>> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::TimeGrid(format!("gate step {tau} must be finite and non-negative")));
    }
    Ok(generators
        .iter()
        .enumerate()
        .map(|(b, g)| BondGate {
            bond: b + 1,
            tau,
            matrix: expm(&(g * faer::Scale(Complex64::new(tau, 0.0)))),
        })
        .collect())
}

/// Cached gates for second-order Trotter steps of size `dt`.
#[derive(Clone, Debug)]
pub struct TrotterGates {
    pub dt: f64,
    pub half: Vec<BondGate>,
    pub full: Vec<BondGate>,
}

impl TrotterGates {
    pub fn new(generators: &[CMat], dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::TimeGrid(format!("time step {dt} must be positive")));
        }
        Ok(Self {
            dt,
            half: bond_gates(generators, dt / 2.0)?,
            full: bond_gates(generators, dt)?,
        })
    }

    pub fn bonds(&self) -> usize {
        self.full.len()
    }
}
