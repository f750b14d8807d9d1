//! Small dense helpers on top of faer.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = Mat<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_one(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry modulus.
pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled to 1-norm at most 1/2, where 20 Taylor terms are far
/// below double precision, then squared back.
pub fn expm(a: &CMat) -> CMat {
    assert_eq!(a.nrows(), a.ncols(), "expm of a non-square matrix");
    let n = a.nrows();
    let norm = norm_one(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let scaled = a * faer::Scale(Complex64::new(scale, 0.0));

    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled * faer::Scale(Complex64::new(1.0 / k as f64, 0.0));
        result += &term;
        if max_abs(&term) <= f64::EPSILON * 1e-3 * max_abs(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Eigenvalues of a Hermitian matrix in ascending order (lower triangle used).
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Eigensolver)
}

/// `(a + a^†) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// `max |a - a^†|`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn trace(a: &CMat) -> Complex64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).fold(ZERO, |s, v| s + v)
}

/// Kronecker product `a ⊗ b`, with `b` the fast index.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn finite_or_err(a: &CMat) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_diagonal() {
        let a = CMat::from_fn(2, 2, |i, j| if i == j { c(i as f64 + 1.0, 0.5) } else { ZERO });
        let e = expm(&a);
        assert!((e[(0, 0)] - c(1.0, 0.5).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(2.0, 0.5).exp()).norm() < 1e-13);
        assert_eq!(e[(0, 1)], ZERO);
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(t [[0, -1], [1, 0]]) is a rotation by t
        let t = 3.7;
        let a = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(-t, 0.0),
            (1, 0) => c(t, 0.0),
            _ => ZERO,
        });
        let e = expm(&a);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn kron_layout() {
        let a = CMat::from_fn(2, 2, |i, j| c((2 * i + j) as f64, 0.0));
        let id = CMat::identity(2, 2);
        let k = kron(&a, &id);
        assert_eq!(k[(2, 0)], c(2.0, 0.0));
        assert_eq!(k[(3, 1)], c(2.0, 0.0));
        assert_eq!(k[(1, 0)], ZERO);
    }

    proptest! {
        #[test]
        fn expm_semigroup(entries in proptest::collection::vec(-1.0f64..1.0, 32), s in 0.0f64..2.0, t in 0.0f64..2.0) {
            let a = CMat::from_fn(4, 4, |i, j| c(entries[4 * i + j], entries[16 + 4 * i + j]));
            let lhs = &expm(&(&a * faer::Scale(c(s, 0.0)))) * &expm(&(&a * faer::Scale(c(t, 0.0))));
            let rhs = expm(&(&a * faer::Scale(c(s + t, 0.0))));
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12 * max_abs(&rhs).max(1.0));
        }
    }
}
