use num_complex::Complex64;

use crate::fock::{odd_site_mask, FockBasis};
use crate::linalg::{hermitian_eigenvalues, hermitian_part, hermiticity_defect, max_abs, trace, CMat};
use crate::{Error, Result};

/// Dense density matrix, possibly unnormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMat,
    pub normalized: bool,
    /// Log of any normalization stripped from the state.
    pub log_norm: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SanityReport {
    /// `|Tr rho - 1|`.
    pub trace_error: f64,
    /// `max |rho - rho^†| / max |rho|`.
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            normalized: false,
            log_norm: 0.0,
        })
    }

    pub fn normalized(matrix: CMat) -> Result<Self> {
        let mut out = Self::new(matrix)?;
        out.normalize()?;
        Ok(out)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = CMat::identity(dim, dim);
        m *= faer::Scale(Complex64::new(1.0 / dim as f64, 0.0));
        Self {
            matrix: m,
            normalized: true,
            log_norm: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        trace(&self.matrix)
    }

    /// Divides by the trace and records its log in `log_norm`.
    pub fn normalize(&mut self) -> Result<()> {
        let tr = self.trace();
        if tr.norm() < 1e-300 {
            return Err(Error::TraceCollapse { trace: tr.norm(), time: f64::NAN });
        }
        self.matrix *= faer::Scale(Complex64::new(1.0, 0.0) / tr);
        self.log_norm += tr.re.ln();
        self.normalized = true;
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = hermitian_eigenvalues(&hermitian_part(&self.matrix))?;
        Ok(ev.first().copied().unwrap_or(0.0))
    }

    pub fn sanity(&self, with_positivity: bool) -> Result<SanityReport> {
        let scale = max_abs(&self.matrix).max(f64::MIN_POSITIVE);
        Ok(SanityReport {
            trace_error: (self.trace() - 1.0).norm(),
            hermiticity: hermiticity_defect(&self.matrix) / scale,
            min_eigenvalue: if with_positivity { self.min_eigenvalue()? } else { f64::NAN },
        })
    }
}

/// Occupation pattern `1, 0, 1, 0, ...` (site 1 occupied).
pub fn cdw_pattern(sites: usize) -> u32 {
    odd_site_mask(sites)
}

/// Projector onto one Fock state of the basis.
pub fn fock_state(basis: &FockBasis, pattern: u32) -> Result<DensityMatrix> {
    let k = basis
        .index_of(pattern)
        .ok_or(Error::InvalidParameter(format!("pattern {pattern:#b} is not in the basis")))?;
    let mut m = CMat::zeros(basis.dim(), basis.dim());
    m[(k, k)] = Complex64::new(1.0, 0.0);
    Ok(DensityMatrix {
        matrix: m,
        normalized: true,
        log_norm: 0.0,
    })
}

/// Charge-density-wave projector `|1,0,...,1,0><1,0,...,1,0|`; needs even `L`.
pub fn cdw_state(basis: &FockBasis) -> Result<DensityMatrix> {
    if basis.sites() % 2 == 1 {
        return Err(Error::OddLength(basis.sites()));
    }
    fock_state(basis, cdw_pattern(basis.sites()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_cdw_is_first_site_occupied() {
        let b = FockBasis::new(2, None).unwrap();
        let rho = cdw_state(&b).unwrap();
        assert_eq!(rho.matrix[(1, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(rho.trace(), Complex64::new(1.0, 0.0));
        assert!(matches!(cdw_state(&FockBasis::new(3, None).unwrap()), Err(Error::OddLength(3))));
    }

    #[test]
    fn cdw_in_half_filled_sector() {
        let b = FockBasis::new(6, Some(3)).unwrap();
        let rho = cdw_state(&b).unwrap();
        assert_eq!(rho.dim(), 20);
        let s = rho.sanity(true).unwrap();
        assert_eq!(s.trace_error, 0.0);
        assert_eq!(s.hermiticity, 0.0);
        assert!(s.min_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn normalization_records_log() {
        let mut m = CMat::identity(2, 2);
        m *= faer::Scale(Complex64::new(3.0, 0.0));
        let rho = DensityMatrix::normalized(m).unwrap();
        assert!((rho.log_norm - 6f64.ln()).abs() < 1e-15);
        assert!((rho.trace() - 1.0).norm() < 1e-15);
    }
}
