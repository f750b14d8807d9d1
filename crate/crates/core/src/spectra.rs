//! Complex spectra and complex spacing-ratio statistics.
//!
//! For every eigenvalue `z` the ratio `xi = (z_nn - z) / (z_nnn - z)` uses
//! the nearest and next-nearest eigenvalues by Euclidean distance. Distance
//! ties go to the smaller eigenvalue index; an exact duplicate (nearest
//! neighbour at distance 0) yields `xi = 0`. No unfolding is applied.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::{map_indexed, sample_seed, Execution};
use crate::linalg::{finite_or_err, CMat};
use crate::{Error, Result};

/// Largest dense eigenproblem accepted without the heavy switch.
pub const DEFAULT_DENSE_BUDGET: usize = 4096;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSource {
    pub label: String,
    pub charge: Option<i32>,
    pub zeta: Option<f64>,
    pub disorder: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum {
    pub eigenvalues: Vec<Complex64>,
    pub source: SpectrumSource,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CSRSamples {
    pub ratios: Vec<Complex64>,
    pub sources: Vec<SpectrumSource>,
}

impl CSRSamples {
    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn merge(mut self, other: CSRSamples) -> CSRSamples {
        self.ratios.extend(other.ratios);
        self.sources.extend(other.sources);
        self
    }
}

fn check_block(block: &CMat, budget: usize) -> Result<()> {
    if block.nrows() != block.ncols() {
        return Err(Error::NotSquare {
            rows: block.nrows(),
            cols: block.ncols(),
        });
    }
    if block.nrows() > budget {
        return Err(Error::Budget {
            dim: block.nrows(),
            cap: budget,
        });
    }
    finite_or_err(block)
}

/// All eigenvalues of a general complex matrix.
pub fn eigenvalues(block: &CMat, budget: usize, source: SpectrumSource) -> Result<ComplexSpectrum> {
    check_block(block, budget)?;
    if block.nrows() == 0 {
        return Ok(ComplexSpectrum { eigenvalues: Vec::new(), source });
    }
    let eigenvalues = block.eigenvalues().map_err(|_| Error::Eigensolver)?;
    if eigenvalues.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Eigensolver);
    }
    Ok(ComplexSpectrum { eigenvalues, source })
}

/// Eigenvalues and right eigenvectors (columns); up to ten pairs are spot
/// checked for a backward-stable residual.
pub fn eigenpairs(block: &CMat, budget: usize) -> Result<(Vec<Complex64>, CMat)> {
    check_block(block, budget)?;
    let n = block.nrows();
    let evd = block.eigen().map_err(|_| Error::Eigensolver)?;
    let values: Vec<Complex64> = (0..n).map(|k| evd.S()[k]).collect();
    let vectors: CMat = evd.U().to_owned();
    let scale = crate::linalg::norm_one(block).max(f64::MIN_POSITIVE);
    let step = (n / 10).max(1);
    for k in (0..n).step_by(step).take(10) {
        let v = vectors.col(k);
        let av = block * v;
        let vnorm = v.norm_l2();
        let residual = (0..n)
            .map(|i| (av[i] - values[k] * v[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > 1e-8 * scale * vnorm.max(1.0) {
            return Err(Error::Eigensolver);
        }
    }
    Ok((values, vectors))
}

/// One ratio per eigenvalue.
pub fn spacing_ratios(spec: &ComplexSpectrum) -> Result<CSRSamples> {
    let z = &spec.eigenvalues;
    if z.len() < 3 {
        return Err(Error::TooFewEigenvalues(z.len()));
    }
    let ratios = (0..z.len()).map(|k| ratio_at(z, k)).collect();
    Ok(CSRSamples {
        ratios,
        sources: vec![spec.source.clone()],
    })
}

fn ratio_at(z: &[Complex64], k: usize) -> Complex64 {
    // (distance, index) of nearest and next-nearest; strict < keeps the smaller index on ties
    let mut nn = (f64::INFINITY, usize::MAX);
    let mut nnn = (f64::INFINITY, usize::MAX);
    for (j, w) in z.iter().enumerate() {
        if j == k {
            continue;
        }
        let d = (w - z[k]).norm();
        if d < nn.0 {
            nnn = nn;
            nn = (d, j);
        } else if d < nnn.0 {
            nnn = (d, j);
        }
    }
    if nn.0 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    (z[nn.1] - z[k]) / (z[nnn.1] - z[k])
}

/// `(<r>, -<cos theta>)` with `r = |xi|`, `theta = arg xi`.
pub fn csr_summary(samples: &CSRSamples) -> Result<(f64, f64)> {
    if samples.ratios.is_empty() {
        return Err(Error::Empty("spacing-ratio samples"));
    }
    let n = samples.ratios.len() as f64;
    let r = samples.ratios.iter().map(|x| x.norm()).sum::<f64>() / n;
    let c = samples.ratios.iter().map(|x| -x.arg().cos()).sum::<f64>() / n;
    Ok((r, c))
}

/// Histogram of ratios on a `bins x bins` grid over `[-1, 1]^2`, normalized to
/// unit total mass. Row index follows `Im xi`, column index `Re xi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrDensity {
    pub bins: usize,
    pub mass: Vec<Vec<f64>>,
}

impl CsrDensity {
    pub fn cell_center(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * 2.0 / self.bins as f64
    }
}

pub fn csr_density(samples: &CSRSamples, bins: usize) -> Result<CsrDensity> {
    if bins < 8 {
        return Err(Error::InvalidParameter(format!("density grid needs at least 8 bins, got {bins}")));
    }
    if samples.ratios.is_empty() {
        return Err(Error::Empty("spacing-ratio samples"));
    }
    let cell = |x: f64| (((x + 1.0) / 2.0 * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
    let mut mass = vec![vec![0.0; bins]; bins];
    let w = 1.0 / samples.ratios.len() as f64;
    for xi in &samples.ratios {
        mass[cell(xi.im)][cell(xi.re)] += w;
    }
    Ok(CsrDensity { bins, mass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Ginibre,
    Poisson2d,
}

/// Ratios from `nsamples` independent draws of `dim` points: Ginibre
/// eigenvalues (i.i.d. standard complex Gaussian entries) or i.i.d. uniform
/// points in the unit square.
pub fn reference_ensemble(
    kind: ReferenceKind,
    dim: usize,
    nsamples: usize,
    seed: u64,
    execution: Execution,
) -> Result<CSRSamples> {
    let parts = map_indexed(nsamples, execution, |i| -> Result<CSRSamples> {
        let s = sample_seed(seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let eigenvalues = match kind {
            ReferenceKind::Ginibre => {
                let m: CMat = Mat::from_fn(dim, dim, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                });
                m.eigenvalues().map_err(|_| Error::Eigensolver)?
            }
            ReferenceKind::Poisson2d => (0..dim)
                .map(|_| Complex64::new(rng.gen::<f64>(), rng.gen::<f64>()))
                .collect(),
        };
        let source = SpectrumSource {
            label: format!("{kind:?}").to_lowercase(),
            seed: Some(s),
            ..SpectrumSource::default()
        };
        spacing_ratios(&ComplexSpectrum { eigenvalues, source })
    });
    parts
        .into_iter()
        .try_fold(CSRSamples::default(), |acc, p| Ok(acc.merge(p?)))
}
