//! Hard-core boson Fock space and site operators.
//!
//! Site `i` (1-based) is bit `i - 1` of a state's occupation pattern, so site
//! 1 is the least-significant bit. States are enumerated in ascending integer
//! order. Hard-core bosons commute between sites, so no Jordan-Wigner strings
//! appear anywhere.

use num_complex::Complex64;

use crate::sparse::SparseOperator;
use crate::{Error, Result};

pub const MAX_SITES: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockBasis {
    sites: usize,
    particles: Option<usize>,
    states: Vec<u32>,
}

impl FockBasis {
    /// Unrestricted basis of all `2^L` occupation patterns, or the `C(L, N)`
    /// patterns holding exactly `N` particles.
    pub fn new(sites: usize, particles: Option<usize>) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::SiteCount(sites));
        }
        let states = match particles {
            None => (0..(1u64 << sites)).map(|s| s as u32).collect(),
            Some(n) if n > sites => return Err(Error::ParticleNumber { particles: n, sites }),
            Some(n) => fixed_weight_patterns(sites, n),
        };
        Ok(Self { sites, particles, states })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> Option<usize> {
        self.particles
    }

    pub fn is_restricted(&self) -> bool {
        self.particles.is_some()
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, k: usize) -> u32 {
        self.states[k]
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        match self.particles {
            None => ((state as u64) < (1u64 << self.sites)).then_some(state as usize),
            Some(_) => self.states.binary_search(&state).ok(),
        }
    }

    /// Occupation (0 or 1) of 1-based site `site` in basis state `k`.
    pub fn occupation(&self, k: usize, site: usize) -> u32 {
        (self.states[k] >> (site - 1)) & 1
    }

    pub fn particle_count(&self, k: usize) -> u32 {
        self.states[k].count_ones()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.sites {
            return Err(Error::SiteLabel { site, sites: self.sites });
        }
        Ok(())
    }
}

/// All `sites`-bit patterns with `n` ones, ascending.
fn fixed_weight_patterns(sites: usize, n: usize) -> Vec<u32> {
    if n == 0 {
        return vec![0];
    }
    let limit = 1u64 << sites;
    let mut out = Vec::new();
    let mut v: u64 = (1u64 << n) - 1;
    while v < limit {
        out.push(v as u32);
        // Gosper's hack: next larger integer with the same popcount
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SiteOp {
    Create,
    Annihilate,
    Number,
}

impl SiteOp {
    /// Action on a single site's occupation bit; `None` means the result vanishes.
    fn act(self, state: u32, bit: u32) -> Option<u32> {
        let occupied = state & bit != 0;
        match (self, occupied) {
            (SiteOp::Create, false) => Some(state | bit),
            (SiteOp::Annihilate, true) => Some(state & !bit),
            (SiteOp::Number, true) => Some(state),
            _ => None,
        }
    }
}

/// One term of a linear combination: `coefficient * f_1 f_2 ... f_k`, with the
/// rightmost factor acting first.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTerm {
    pub coefficient: Complex64,
    pub factors: Vec<(usize, SiteOp)>,
}

impl OperatorTerm {
    pub fn new(coefficient: impl Into<Complex64>, factors: Vec<(usize, SiteOp)>) -> Self {
        Self {
            coefficient: coefficient.into(),
            factors,
        }
    }
}

/// `b_i^†`, `b_i` or `n_i` on the given basis.
///
/// Lone creation or annihilation operators change the particle number and are
/// rejected for number-restricted bases.
pub fn site_operator(basis: &FockBasis, site: usize, kind: SiteOp) -> Result<SparseOperator> {
    basis.check_site(site)?;
    if basis.is_restricted() && kind != SiteOp::Number {
        return Err(Error::RestrictedBasis("a lone creation/annihilation operator"));
    }
    assemble_operator(&[OperatorTerm::new(1.0, vec![(site, kind)])], basis)
}

/// Linear combination of site-operator products.
pub fn assemble_operator(terms: &[OperatorTerm], basis: &FockBasis) -> Result<SparseOperator> {
    for term in terms {
        for &(site, _) in &term.factors {
            basis.check_site(site)?;
        }
    }
    let mut triplets = Vec::new();
    for (col, &state) in basis.states().iter().enumerate() {
        for term in terms {
            if term.coefficient == Complex64::new(0.0, 0.0) {
                continue;
            }
            let image = term
                .factors
                .iter()
                .rev()
                .try_fold(state, |s, &(site, op)| op.act(s, 1u32 << (site - 1)));
            let Some(image) = image else { continue };
            let row = basis
                .index_of(image)
                .ok_or(Error::RestrictedBasis("a particle-number changing product"))?;
            triplets.push((row, col, term.coefficient));
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), basis.dim(), triplets))
}

/// Total particle number `N = sum_i n_i` (diagonal).
pub fn number_operator(basis: &FockBasis) -> SparseOperator {
    let diag: Vec<_> = (0..basis.dim())
        .map(|k| Complex64::new(basis.particle_count(k) as f64, 0.0))
        .collect();
    SparseOperator::diagonal(&diag)
}

/// Staggered occupation `I = sum_i (-1)^(i+1) n_i` (diagonal).
pub fn imbalance_operator(basis: &FockBasis) -> SparseOperator {
    let diag: Vec<_> = (0..basis.dim())
        .map(|k| Complex64::new(staggered_count(basis.state(k), basis.sites()) as f64, 0.0))
        .collect();
    SparseOperator::diagonal(&diag)
}

/// `sum_i (-1)^(i+1) bit_i` for a bit pattern: odd sites count +1, even sites -1.
pub fn staggered_count(state: u32, sites: usize) -> i32 {
    let odd_mask = odd_site_mask(sites);
    (state & odd_mask).count_ones() as i32 - (state & !odd_mask).count_ones() as i32
}

/// Bit mask of the odd (1-based) sites: bits 0, 2, 4, ...
pub fn odd_site_mask(sites: usize) -> u32 {
    let all = if sites == 32 { u32::MAX } else { (1u32 << sites) - 1 };
    0x5555_5555 & all
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(FockBasis::new(2, None).unwrap().dim(), 4);
        assert_eq!(FockBasis::new(4, Some(2)).unwrap().dim(), 6);
        assert_eq!(FockBasis::new(8, Some(4)).unwrap().dim(), 70);
        assert_eq!(FockBasis::new(5, Some(0)).unwrap().states(), &[0]);
        assert_eq!(FockBasis::new(3, Some(3)).unwrap().states(), &[7]);
    }

    #[test]
    fn basis_errors() {
        assert!(matches!(FockBasis::new(0, None), Err(Error::SiteCount(0))));
        assert!(matches!(FockBasis::new(33, None), Err(Error::SiteCount(33))));
        assert!(matches!(
            FockBasis::new(3, Some(4)),
            Err(Error::ParticleNumber { particles: 4, sites: 3 })
        ));
    }

    #[test]
    fn create_on_single_site() {
        let b = FockBasis::new(1, None).unwrap();
        let create = site_operator(&b, 1, SiteOp::Create).unwrap();
        // |0> is index 0, |1> is index 1
        assert_eq!(create.get(1, 0), Complex64::new(1.0, 0.0));
        assert_eq!(create.nnz(), 1);
        let sq = create.matmul(&create).unwrap();
        assert_eq!(sq.nnz(), 0);
    }

    #[test]
    fn onsite_anticommutator_is_identity() {
        let b = FockBasis::new(1, None).unwrap();
        let create = site_operator(&b, 1, SiteOp::Create).unwrap();
        let annihilate = site_operator(&b, 1, SiteOp::Annihilate).unwrap();
        let anti = annihilate
            .matmul(&create)
            .unwrap()
            .add_scaled(&create.matmul(&annihilate).unwrap(), Complex64::new(1.0, 0.0))
            .unwrap();
        assert_eq!(anti, SparseOperator::identity(2));
    }

    #[test]
    fn restricted_basis_rejects_lone_ladder_operators() {
        let b = FockBasis::new(4, Some(2)).unwrap();
        assert!(matches!(
            site_operator(&b, 1, SiteOp::Create),
            Err(Error::RestrictedBasis(_))
        ));
        assert!(site_operator(&b, 1, SiteOp::Number).is_ok());
        let hop = OperatorTerm::new(1.0, vec![(1, SiteOp::Create), (2, SiteOp::Annihilate)]);
        assert!(assemble_operator(&[hop], &b).is_ok());
        let bad = OperatorTerm::new(1.0, vec![(1, SiteOp::Create)]);
        assert!(assemble_operator(&[bad], &b).is_err());
    }

    #[test]
    fn site_label_out_of_range() {
        let b = FockBasis::new(3, None).unwrap();
        assert!(matches!(
            site_operator(&b, 4, SiteOp::Number),
            Err(Error::SiteLabel { site: 4, sites: 3 })
        ));
        assert!(site_operator(&b, 0, SiteOp::Number).is_err());
    }

    #[test]
    fn assemble_examples() {
        let b1 = FockBasis::new(1, None).unwrap();
        assert_eq!(assemble_operator(&[], &b1).unwrap().nnz(), 0);
        let n1 = assemble_operator(&[OperatorTerm::new(1.0, vec![(1, SiteOp::Number)])], &b1).unwrap();
        assert_eq!(n1.to_dense()[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(n1.to_dense()[(1, 1)], Complex64::new(1.0, 0.0));

        // b1^† b2 + b2^† b1 on two sites. Enumerated by hand on (00, 01, 10, 11)
        // (site 1 = low bit): b1^† b2 takes 10 (index 2) to 01 (index 1) and
        // b2^† b1 takes 01 to 10. Everything else vanishes.
        let b2 = FockBasis::new(2, None).unwrap();
        let hop = assemble_operator(
            &[
                OperatorTerm::new(1.0, vec![(1, SiteOp::Create), (2, SiteOp::Annihilate)]),
                OperatorTerm::new(1.0, vec![(2, SiteOp::Create), (1, SiteOp::Annihilate)]),
            ],
            &b2,
        )
        .unwrap();
        assert_eq!(hop.nnz(), 2);
        assert_eq!(hop.get(1, 2), Complex64::new(1.0, 0.0));
        assert_eq!(hop.get(2, 1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn number_operators_commute_and_creators_commute() {
        let b = FockBasis::new(3, None).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                if i == j {
                    continue;
                }
                let ci = site_operator(&b, i, SiteOp::Create).unwrap();
                let cj = site_operator(&b, j, SiteOp::Create).unwrap();
                assert_eq!(ci.commutator(&cj).unwrap().nnz(), 0);
                let ni = site_operator(&b, i, SiteOp::Number).unwrap();
                let nj = site_operator(&b, j, SiteOp::Number).unwrap();
                assert_eq!(ni.commutator(&nj).unwrap().nnz(), 0);
            }
        }
    }

    proptest! {
        #[test]
        fn basis_is_a_sorted_bijection(sites in 1usize..=10, frac in 0.0f64..=1.0, restricted: bool) {
            let particles = restricted.then(|| (frac * sites as f64).round() as usize);
            let b = FockBasis::new(sites, particles).unwrap();
            let expected = match particles {
                None => 1usize << sites,
                Some(n) => binom(sites, n),
            };
            prop_assert_eq!(b.dim(), expected);
            prop_assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            for (k, &s) in b.states().iter().enumerate() {
                prop_assert_eq!(b.index_of(s), Some(k));
                if let Some(n) = particles {
                    prop_assert_eq!(s.count_ones() as usize, n);
                }
            }
        }

        #[test]
        fn number_op_scales_by_occupation(sites in 1usize..=6, site_frac in 0.0f64..1.0) {
            let b = FockBasis::new(sites, None).unwrap();
            let site = 1 + (site_frac * sites as f64) as usize;
            let n = site_operator(&b, site, SiteOp::Number).unwrap();
            for k in 0..b.dim() {
                prop_assert_eq!(n.get(k, k).re, b.occupation(k, site) as f64);
            }
            prop_assert!(n.is_diagonal());
        }

        #[test]
        fn create_is_adjoint_of_annihilate(sites in 1usize..=6, site_frac in 0.0f64..1.0) {
            let b = FockBasis::new(sites, None).unwrap();
            let site = 1 + (site_frac * sites as f64) as usize;
            let c = site_operator(&b, site, SiteOp::Create).unwrap();
            let a = site_operator(&b, site, SiteOp::Annihilate).unwrap();
            prop_assert_eq!(c, a.adjoint());
        }
    }
}
