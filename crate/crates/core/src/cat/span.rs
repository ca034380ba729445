//! Linear-span bookkeeping for hom-spaces: orthonormalization under the
//! trace pairing, membership residuals and span comparisons.

use crate::numerics::ComplexMatrix;
use num_complex::Complex64;

/// Gram-Schmidt under the trace pairing, in input order, dropping vectors
/// whose residual falls below `drop_tol` (absolute, relative to the input's
/// Frobenius norm).
pub fn orthonormalize(mats: &[ComplexMatrix], drop_tol: f64) -> Vec<ComplexMatrix> {
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    for m in mats {
        let scale = m.fro_norm();
        if scale <= drop_tol {
            continue;
        }
        let mut r = m.clone();
        // Two rounds of reorthogonalization keep the basis orthonormal to
        // machine precision even for nearly dependent inputs.
        for _ in 0..2 {
            for b in &basis {
                let c = b.trace_dot(&r);
                r = r.sub_mat(&b.scale(c));
            }
        }
        let rn = r.fro_norm();
        if rn > drop_tol * scale.max(1.0) {
            basis.push(r.scale_re(1.0 / rn));
        }
    }
    basis
}

/// Coefficients of `m` against an orthonormal basis.
pub fn coords(basis: &[ComplexMatrix], m: &ComplexMatrix) -> Vec<Complex64> {
    basis.iter().map(|b| b.trace_dot(m)).collect()
}

/// Reconstruct an element from coordinates.
pub fn from_coords(basis: &[ComplexMatrix], c: &[Complex64], rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (b, ci) in basis.iter().zip(c.iter()) {
        m = m.add_mat(&b.scale(*ci));
    }
    m
}

/// Frobenius norm of the part of `m` outside the span of the orthonormal
/// basis.
pub fn membership_residual(basis: &[ComplexMatrix], m: &ComplexMatrix) -> f64 {
    let mut r = m.clone();
    for b in basis {
        let c = b.trace_dot(&r);
        r = r.sub_mat(&b.scale(c));
    }
    r.fro_norm()
}

/// Orthogonal projection of `m` onto the span.
pub fn project(basis: &[ComplexMatrix], m: &ComplexMatrix) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(m.rows(), m.cols());
    for b in basis {
        let c = b.trace_dot(m);
        p = p.add_mat(&b.scale(c));
    }
    p
}

/// Symmetric span distance between two families: the worst membership
/// residual of either orthonormalized basis against the other span.
pub fn span_distance(a: &[ComplexMatrix], b: &[ComplexMatrix], drop_tol: f64) -> f64 {
    let ba = orthonormalize(a, drop_tol);
    let bb = orthonormalize(b, drop_tol);
    let mut worst = 0.0f64;
    for m in &ba {
        worst = worst.max(membership_residual(&bb, m));
    }
    for m in &bb {
        worst = worst.max(membership_residual(&ba, m));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthonormalize_drops_dependents() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        let b = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 0.0)]]);
        let d = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 1.0)]]);
        let basis = orthonormalize(&[a, b, d], 1e-12);
        assert_eq!(basis.len(), 2);
        for x in &basis {
            assert!((x.fro_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn span_distance_detects_mismatch() {
        let e1 = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        let e2 = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(span_distance(&[e1.clone()], &[e1.clone()], 1e-12) < 1e-12);
        assert!(span_distance(&[e1], &[e2], 1e-12) > 0.9);
    }
}
