//! Independent oracles used by the property suites. These deliberately take
//! different algorithmic routes from the implementations they check.

use crate::numerics::ComplexMatrix;
use num_complex::Complex64;

/// Characteristic polynomial coefficients by the Faddeev-LeVerrier
/// recurrence: returns [c_{n-1}, ..., c_0] for
/// lambda^n + c_{n-1} lambda^{n-1} + ... + c_0.
pub fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
    assert!(m.is_square());
    let n = m.rows();
    let mut coeffs = Vec::with_capacity(n);
    let mut aux = ComplexMatrix::identity(n);
    for k in 1..=n {
        aux = m.matmul(&aux);
        let c = -aux.trace() / Complex64::new(k as f64, 0.0);
        coeffs.push(c);
        for i in 0..n {
            aux[(i, i)] += c;
        }
    }
    coeffs
}

/// Symmetric Hausdorff distance between two finite sets of complex numbers.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_way = |x: &[Complex64], y: &[Complex64]| -> f64 {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    one_way(a, b).max(one_way(b, a))
}

/// Deduplicate a spectrum into its underlying set at the given resolution.
pub fn spectrum_set(eigs: &[Complex64], resolution: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for e in eigs {
        if !out.iter().any(|f| (e - f).norm() <= resolution) {
            out.push(*e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_of_companion() {
        // x^2 - 3x + 2 = (x-1)(x-2)
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(3.0, 0.0), Complex64::new(-2.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        ]);
        let c = char_poly(&m);
        assert!((c[0] - Complex64::new(-3.0, 0.0)).norm() < 1e-12);
        assert!((c[1] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let b = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.1)];
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-12);
    }
}
