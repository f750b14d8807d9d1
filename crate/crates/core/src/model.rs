//! Disordered gain-loss chain: parameters, disorder, Hamiltonian and jumps.
//!
//! Odd sites (1-based) are pumped by `sqrt(2 gamma) b_i^†`, even sites are
//! drained by `sqrt(2 gamma) b_i`. The chain has open boundaries.

use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fock::{odd_site_mask, FockBasis};
use crate::sparse::SparseOperator;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub sites: usize,
    /// Hopping amplitude `J`.
    pub hopping: f64,
    /// Nearest-neighbour density-density interaction `U`.
    pub interaction: f64,
    /// Gain/loss rate `gamma`.
    pub gamma: f64,
    /// Half-width `h` of the uniform onsite-field distribution.
    pub disorder: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            sites: 8,
            hopping: 1.0,
            interaction: 2.0,
            gamma: 0.1,
            disorder: 0.0,
        }
    }
}

impl ModelParams {
    pub fn new(sites: usize, disorder: f64) -> Self {
        Self {
            sites,
            disorder,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 || self.sites > crate::fock::MAX_SITES {
            return Err(Error::SiteCount(self.sites));
        }
        // J = 0 is allowed for the localized-limit checks
        if !(self.hopping >= 0.0 && self.hopping.is_finite()) {
            return Err(Error::InvalidParameter(format!("hopping {} must be >= 0", self.hopping)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma {} must be >= 0", self.gamma)));
        }
        if !(self.disorder >= 0.0 && self.disorder.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "disorder strength {} must be >= 0",
                self.disorder
            )));
        }
        if !self.interaction.is_finite() {
            return Err(Error::InvalidParameter("interaction must be finite".into()));
        }
        Ok(())
    }

    /// Number of pumped (odd) sites.
    pub fn gain_sites(&self) -> usize {
        self.sites.div_ceil(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub fields: Vec<f64>,
    pub seed: u64,
}

impl DisorderRealization {
    pub fn uniform(fields: Vec<f64>) -> Self {
        Self { fields, seed: 0 }
    }

    pub fn clean(sites: usize) -> Self {
        Self::uniform(vec![0.0; sites])
    }
}

/// Independent uniform fields on `[-h, h]` from a ChaCha8 stream seeded with `seed`.
pub fn sample_disorder(params: &ModelParams, seed: u64) -> DisorderRealization {
    let h = params.disorder;
    let fields = if h == 0.0 {
        vec![0.0; params.sites]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-h, h);
        (0..params.sites).map(|_| dist.sample(&mut rng)).collect()
    };
    DisorderRealization { fields, seed }
}

fn check_compatible(basis: &FockBasis, params: &ModelParams, dis: &DisorderRealization) -> Result<()> {
    params.validate()?;
    if basis.sites() != params.sites {
        return Err(Error::DimensionMismatch {
            expected: params.sites,
            found: basis.sites(),
        });
    }
    if dis.fields.len() != params.sites {
        return Err(Error::DimensionMismatch {
            expected: params.sites,
            found: dis.fields.len(),
        });
    }
    Ok(())
}

/// Onsite fields plus nearest-neighbour interaction for one occupation pattern.
fn diagonal_energy(state: u32, params: &ModelParams, dis: &DisorderRealization) -> f64 {
    let mut e = 0.0;
    for (i, &h) in dis.fields.iter().enumerate() {
        if state >> i & 1 == 1 {
            e += h;
        }
    }
    let pairs = state & (state >> 1);
    let bond_mask = if params.sites >= 2 { (1u64 << (params.sites - 1)) - 1 } else { 0 } as u32;
    e + params.interaction * (pairs & bond_mask).count_ones() as f64
}

/// `H = sum_i h_i n_i - J sum_i (b_i^† b_{i+1} + h.c.) + U sum_i n_i n_{i+1}`.
pub fn build_hamiltonian(
    basis: &FockBasis,
    params: &ModelParams,
    dis: &DisorderRealization,
) -> Result<SparseOperator> {
    check_compatible(basis, params, dis)?;
    let mut triplets = Vec::new();
    for (col, &state) in basis.states().iter().enumerate() {
        triplets.push((col, col, Complex64::new(diagonal_energy(state, params, dis), 0.0)));
        for i in 0..params.sites.saturating_sub(1) {
            let pair = (state >> i) & 0b11;
            if pair == 0b01 || pair == 0b10 {
                let image = state ^ (0b11 << i);
                let row = basis.index_of(image).expect("hopping conserves particle number");
                triplets.push((row, col, Complex64::new(-params.hopping, 0.0)));
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), basis.dim(), triplets))
}

/// `O_i = sqrt(2 gamma) b_i^†` on odd sites and `sqrt(2 gamma) b_i` on even sites.
pub fn build_jumps(basis: &FockBasis, params: &ModelParams) -> Result<Vec<SparseOperator>> {
    params.validate()?;
    if basis.is_restricted() {
        return Err(Error::RestrictedBasis("a jump operator"));
    }
    if basis.sites() != params.sites {
        return Err(Error::DimensionMismatch {
            expected: params.sites,
            found: basis.sites(),
        });
    }
    let amp = Complex64::new((2.0 * params.gamma).sqrt(), 0.0);
    let ops = (0..params.sites)
        .map(|i| {
            let bit = 1u32 << i;
            let gain = i % 2 == 0;
            let triplets = basis.states().iter().enumerate().filter_map(|(col, &s)| {
                let occupied = s & bit != 0;
                match (gain, occupied) {
                    (true, false) => Some((basis.index_of(s | bit)?, col, amp)),
                    (false, true) => Some((basis.index_of(s & !bit)?, col, amp)),
                    _ => None,
                }
            });
            SparseOperator::from_triplets(basis.dim(), basis.dim(), triplets.collect::<Vec<_>>())
        })
        .collect();
    Ok(ops)
}

/// Diagonal of `sum_i O_i^† O_i` on each basis state:
/// `2 gamma` per empty odd site plus `2 gamma` per occupied even site.
pub fn decay_rates(basis: &FockBasis, params: &ModelParams) -> Vec<f64> {
    let odd = odd_site_mask(basis.sites());
    let even = !odd & full_mask(basis.sites());
    basis
        .states()
        .iter()
        .map(|&s| 2.0 * params.gamma * ((!s & odd).count_ones() + (s & even).count_ones()) as f64)
        .collect()
}

fn full_mask(sites: usize) -> u32 {
    if sites == 32 {
        u32::MAX
    } else {
        (1u32 << sites) - 1
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonHermitianOffset {
    /// `H - i gamma sum_i (-1)^i n_i`.
    #[default]
    Dropped,
    /// `H - (i/2) sum_i O_i^† O_i`, which adds `-i gamma` per odd site.
    Included,
}

/// No-jump Hamiltonian `H - i gamma sum_i (-1)^i n_i` (optionally with the
/// constant that turns it into `H - (i/2) sum_i O_i^† O_i`). Conserves the
/// particle number, so restricted bases are accepted.
pub fn build_nonhermitian(
    basis: &FockBasis,
    params: &ModelParams,
    dis: &DisorderRealization,
    offset: NonHermitianOffset,
) -> Result<SparseOperator> {
    let h = build_hamiltonian(basis, params, dis)?;
    let shift = match offset {
        NonHermitianOffset::Dropped => 0.0,
        NonHermitianOffset::Included => -params.gamma * params.gain_sites() as f64,
    };
    let diag: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|&s| {
            let staggered = crate::fock::staggered_count(s, basis.sites()) as f64;
            Complex64::new(0.0, params.gamma * staggered + shift)
        })
        .collect();
    h.add_scaled(&SparseOperator::diagonal(&diag), Complex64::new(1.0, 0.0))
}
