//! Dense complex linear algebra kernel: eigendecomposition, operator norms,
//! spectra, functional calculus, positivity and the tolerance policy used by
//! every other layer.

pub mod eigen;
pub mod matrix;

pub use matrix::ComplexMatrix;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix is not self-adjoint: residual {residual:.3e} exceeds gate {gate:.3e}")]
    NotSelfAdjoint { residual: f64, gate: f64 },
    #[error("iterative solver failed to converge: {what}")]
    ConvergenceFailure { what: String },
    #[error("eigenvalue {value:.6e} outside the declared domain of the spectral function")]
    DomainError { value: f64 },
    #[error("invalid tolerance policy: {what}")]
    BadPolicy { what: String },
}

/// Floating-point stand-in for exact positivity and equality reasoning.
///
/// Eigenvalues in `[-eig_clip * norm, 0]` are treated as zero when deciding
/// positivity and ranks; residual gates are `atol + rtol * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub atol: f64,
    pub rtol: f64,
    pub eig_clip: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy { atol: 1e-9, rtol: 1e-9, eig_clip: 1e-9 }
    }
}

impl TolerancePolicy {
    pub fn new(atol: f64, rtol: f64, eig_clip: f64) -> Result<Self, NumericsError> {
        let p = TolerancePolicy { atol, rtol, eig_clip };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        for (name, v) in [("atol", self.atol), ("rtol", self.rtol), ("eig_clip", self.eig_clip)] {
            if !(v > 0.0 && v < 1e-3) {
                return Err(NumericsError::BadPolicy {
                    what: format!("{name} = {v:e} must lie in (0, 1e-3)"),
                });
            }
        }
        Ok(())
    }

    /// Residual gate at the given scale.
    pub fn gate(&self, scale: f64) -> f64 {
        self.atol + self.rtol * scale
    }

    pub fn within(&self, residual: f64, scale: f64) -> bool {
        residual <= self.gate(scale)
    }
}

/// Eigenvalue multiset of a square matrix plus its spectral radius.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
}

/// Largest singular value, computed as sqrt of the top eigenvalue of m* m.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    let gram = m.adjoint().matmul(m);
    let (vals, _) = eigen::jacobi_hermitian(&gram).expect("Jacobi failed on a Gram matrix");
    vals.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Hermitian eigendecomposition with precondition and reconstruction checks.
pub fn hermitian_eigendecomposition(
    m: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<(Vec<f64>, ComplexMatrix), NumericsError> {
    let scale = operator_norm(m);
    let residual = operator_norm(&m.sub_mat(&m.adjoint()));
    if residual > tol.gate(scale) {
        return Err(NumericsError::NotSelfAdjoint { residual, gate: tol.gate(scale) });
    }
    eigen::jacobi_hermitian(m)
}

/// Eigenvalue multiset and spectral radius of an arbitrary square matrix.
pub fn spectrum_and_radius(
    m: &ComplexMatrix,
    _tol: &TolerancePolicy,
) -> Result<SpectrumReport, NumericsError> {
    let eigenvalues = eigen::general_eigenvalues(m)?;
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(SpectrumReport { eigenvalues, spectral_radius })
}

/// A real function handed to the functional calculus: an evaluation callback
/// on the spectral interval plus a declared Lipschitz bound (the checkable
/// surrogate for uniform continuity on bounded sets).
pub struct SpectralFn<'a> {
    pub eval: &'a dyn Fn(f64) -> Option<f64>,
    pub lipschitz: f64,
}

impl<'a> SpectralFn<'a> {
    pub fn new(eval: &'a dyn Fn(f64) -> Option<f64>, lipschitz: f64) -> Self {
        SpectralFn { eval, lipschitz }
    }
}

/// Apply a scalar function to a self-adjoint matrix through its
/// eigendecomposition: basis * diag(f(lambda)) * basis^*.
///
/// Eigenvalues in `[-eig_clip * |a|, 0]` are flushed to zero before
/// evaluation, so functions like sqrt survive PSD inputs with tiny negative
/// rounding noise.
pub fn functional_calculus(
    a: &ComplexMatrix,
    f: &SpectralFn<'_>,
    tol: &TolerancePolicy,
) -> Result<ComplexMatrix, NumericsError> {
    let (vals, basis) = hermitian_eigendecomposition(a, tol)?;
    let norm = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let clip = tol.eig_clip * norm.max(1e-300);
    let mut mapped = Vec::with_capacity(vals.len());
    for v in &vals {
        let v = if *v < 0.0 && *v >= -clip { 0.0 } else { *v };
        match (f.eval)(v) {
            Some(w) => mapped.push(Complex64::new(w, 0.0)),
            None => return Err(NumericsError::DomainError { value: v }),
        }
    }
    let d = ComplexMatrix::diag(&mapped);
    Ok(basis.matmul(&d).matmul(&basis.adjoint()))
}

/// Positive semidefinite test: self-adjoint within the gate and no eigenvalue
/// below `-eig_clip * |m|`. Non-self-adjoint input returns false.
pub fn is_psd(m: &ComplexMatrix, tol: &TolerancePolicy) -> bool {
    if !m.is_square() {
        return false;
    }
    if m.rows() == 0 {
        return true;
    }
    let scale = operator_norm(m);
    if operator_norm(&m.sub_mat(&m.adjoint())) > tol.gate(scale) {
        return false;
    }
    let (vals, _) = match eigen::jacobi_hermitian(m) {
        Ok(r) => r,
        Err(_) => return false,
    };
    let min = vals.last().copied().unwrap_or(0.0);
    min >= -tol.eig_clip * scale.max(1e-300)
}

/// Smallest eigenvalue of the hermitized matrix; handy for diagnostics.
pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    let (vals, _) = eigen::jacobi_hermitian(&m.hermitize()).expect("Jacobi failed");
    vals.last().copied().unwrap_or(0.0)
}

/// Principal square root of a PSD matrix.
pub fn sqrt_psd(m: &ComplexMatrix, tol: &TolerancePolicy) -> Result<ComplexMatrix, NumericsError> {
    let f = SpectralFn::new(&|t| if t >= 0.0 { Some(t.sqrt()) } else { None }, f64::INFINITY);
    functional_calculus(m, &f, tol)
}

/// Fractional power t^p of a PSD matrix (p in (0,1]).
pub fn power_psd(
    m: &ComplexMatrix,
    p: f64,
    tol: &TolerancePolicy,
) -> Result<ComplexMatrix, NumericsError> {
    let eval = move |t: f64| if t >= 0.0 { Some(t.powf(p)) } else { None };
    let f = SpectralFn::new(&eval, f64::INFINITY);
    functional_calculus(m, &f, tol)
}

/// Moore-Penrose pseudo-inverse of a Hermitian PSD matrix, clipping
/// eigenvalues at `eig_clip * |m|`.
pub fn pinv_psd(m: &ComplexMatrix, tol: &TolerancePolicy) -> ComplexMatrix {
    let (vals, basis) = eigen::jacobi_hermitian(m).expect("Jacobi failed");
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let clip = (tol.eig_clip * top).max(1e-300);
    let inv: Vec<Complex64> = vals
        .iter()
        .map(|v| if *v > clip { Complex64::new(1.0 / v, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect();
    basis.matmul(&ComplexMatrix::diag(&inv)).matmul(&basis.adjoint())
}

/// Thin SVD built on the Jacobi eigendecomposition of m* m.
/// Returns (u, sigma, v) with m ~ u * diag(sigma) * v^*, sigma > clip only.
pub fn thin_svd(
    m: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let gram = m.adjoint().matmul(m);
    let (vals, v) = eigen::jacobi_hermitian(&gram).expect("Jacobi failed");
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let clip = tol.eig_clip * tol.eig_clip * top;
    let mut sigmas = Vec::new();
    let mut kept_cols = Vec::new();
    for (i, lam) in vals.iter().enumerate() {
        if *lam > clip && *lam > 0.0 {
            sigmas.push(lam.sqrt());
            kept_cols.push(i);
        }
    }
    let r = sigmas.len();
    let mut vr = ComplexMatrix::zeros(m.cols(), r);
    for (new_col, old_col) in kept_cols.iter().enumerate() {
        vr.set_column(new_col, &v.column(*old_col));
    }
    let mut u = m.matmul(&vr);
    for (j, s) in sigmas.iter().enumerate() {
        let col: Vec<Complex64> = u.column(j).iter().map(|z| z / *s).collect();
        u.set_column(j, &col);
    }
    (u, sigmas, vr)
}

/// General pseudo-inverse via the thin SVD.
pub fn pinv(m: &ComplexMatrix, tol: &TolerancePolicy) -> ComplexMatrix {
    let (u, sigmas, v) = thin_svd(m, tol);
    let inv = ComplexMatrix::diag(
        &sigmas.iter().map(|s| Complex64::new(1.0 / s, 0.0)).collect::<Vec<_>>(),
    );
    v.matmul(&inv).matmul(&u.adjoint())
}

/// Numerical rank at the policy's clip level, via singular values.
pub fn rank(m: &ComplexMatrix, tol: &TolerancePolicy) -> usize {
    let (_, sigmas, _) = thin_svd(m, tol);
    let top = sigmas.first().copied().unwrap_or(0.0);
    sigmas.iter().filter(|s| **s > tol.eig_clip.sqrt() * top.max(1e-300)).count()
}

/// Orthonormal basis of the null space of a rectangular matrix, as columns.
/// For wide matrices the row-space route (eigen of m m*) plus completion is
/// much cheaper than the normal-equation route. The rank threshold is
/// absolute at scale 1, suited to constraint systems assembled from
/// orthonormal-basis coordinates.
pub fn null_space(m: &ComplexMatrix, tol: &TolerancePolicy) -> ComplexMatrix {
    let rows = m.rows();
    let cols = m.cols();
    if rows == 0 || cols == 0 {
        return ComplexMatrix::identity(cols);
    }
    if rows >= cols {
        let normal = m.adjoint().matmul(m);
        let (vals, basis) = eigen::jacobi_hermitian(&normal).expect("Jacobi");
        let top = vals.first().copied().unwrap_or(0.0).max(1.0);
        let keep: Vec<usize> = (0..cols)
            .filter(|&i| vals[i] <= tol.eig_clip * top)
            .collect();
        let mut out = ComplexMatrix::zeros(cols, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            out.set_column(j, &basis.column(i));
        }
        return out;
    }
    // Row space from m m*, then complete to the orthogonal complement.
    let gram = m.matmul(&m.adjoint());
    let (vals, basis) = eigen::jacobi_hermitian(&gram).expect("Jacobi");
    let top = vals.first().copied().unwrap_or(0.0).max(1.0);
    let mut row_basis: Vec<Vec<Complex64>> = Vec::new();
    for (i, lam) in vals.iter().enumerate() {
        if *lam > tol.eig_clip * top {
            // row-space vector: m* u / sqrt(lam)
            let u = basis.column(i);
            let mut v = vec![Complex64::new(0.0, 0.0); cols];
            for r in 0..rows {
                let c = u[r].conj() / lam.sqrt();
                for j in 0..cols {
                    v[j] += m[(r, j)].conj() * c.conj();
                }
            }
            row_basis.push(v);
        }
    }
    // Complete: project coordinate vectors against the row space and each
    // other.
    let mut null_cols: Vec<Vec<Complex64>> = Vec::new();
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    };
    for j in 0..cols {
        if row_basis.len() + null_cols.len() >= cols {
            break;
        }
        let mut v = vec![Complex64::new(0.0, 0.0); cols];
        v[j] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in row_basis.iter().chain(null_cols.iter()) {
                let c = dot(b, &v);
                for (vi, bi) in v.iter_mut().zip(b.iter()) {
                    *vi -= c * bi;
                }
            }
        }
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            for vi in v.iter_mut() {
                *vi /= Complex64::new(n, 0.0);
            }
            null_cols.push(v);
        }
    }
    let mut out = ComplexMatrix::zeros(cols, null_cols.len());
    for (j, v) in null_cols.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Greedy minimum-distance matching of two eigenvalue multisets. Returns the
/// largest matched distance, or None if lengths differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut remaining: Vec<Complex64> = b.to_vec();
    let mut worst = 0.0f64;
    for x in a {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())?;
        worst = worst.max(dist);
        remaining.swap_remove(idx);
    }
    Some(worst)
}

/// Distance between the nonzero parts of two spectra: values within
/// `zero_tol` of 0 are dropped from both sides first, then zeros are padded
/// back so the multisets have equal size.
pub fn nonzero_spectrum_distance(a: &[Complex64], b: &[Complex64], zero_tol: f64) -> f64 {
    let strip = |v: &[Complex64]| -> Vec<Complex64> {
        v.iter().copied().filter(|z| z.norm() > zero_tol).collect()
    };
    let mut aa = strip(a);
    let mut bb = strip(b);
    while aa.len() < bb.len() {
        aa.push(Complex64::new(0.0, 0.0));
    }
    while bb.len() < aa.len() {
        bb.push(Complex64::new(0.0, 0.0));
    }
    multiset_distance(&aa, &bb).unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, m: usize, seed: u64) -> ComplexMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(n, m, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn norm_of_identity_and_shift() {
        let tol = TolerancePolicy::default();
        assert!((operator_norm(&ComplexMatrix::identity(4)) - 1.0).abs() < 1e-12);
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(2.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!((operator_norm(&m) - 2.0).abs() < 1e-12);
        let _ = tol;
    }

    #[test]
    fn eig_decomposition_examples() {
        let tol = TolerancePolicy::default();
        let (vals, _) =
            hermitian_eigendecomposition(&ComplexMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]), &tol)
                .unwrap();
        assert_eq!(vals.len(), 2);
        assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);

        let flip = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let (vals, basis) = hermitian_eigendecomposition(&flip, &tol).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
        for col in 0..2 {
            for row in 0..2 {
                assert!((basis[(row, col)].norm() - 1.0 / 2f64.sqrt()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn not_self_adjoint_is_rejected() {
        let tol = TolerancePolicy::default();
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!(matches!(
            hermitian_eigendecomposition(&m, &tol),
            Err(NumericsError::NotSelfAdjoint { .. })
        ));
    }

    #[test]
    fn functional_calculus_examples() {
        let tol = TolerancePolicy::default();
        let a = ComplexMatrix::diag(&[c(3.0, 0.0), c(5.0, 0.0)]);
        let ident = SpectralFn::new(&|t| Some(t), 1.0);
        assert!(functional_calculus(&a, &ident, &tol).unwrap().sub_mat(&a).fro_norm() < 1e-12);

        let b = ComplexMatrix::diag(&[c(4.0, 0.0), c(9.0, 0.0)]);
        let root = sqrt_psd(&b, &tol).unwrap();
        let expect = ComplexMatrix::diag(&[c(2.0, 0.0), c(3.0, 0.0)]);
        assert!(root.sub_mat(&expect).fro_norm() < 1e-12);

        let neg = ComplexMatrix::diag(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(sqrt_psd(&neg, &tol), Err(NumericsError::DomainError { .. })));
    }

    #[test]
    fn psd_examples() {
        let tol = TolerancePolicy::default();
        let x = random_matrix(4, 4, 7);
        assert!(is_psd(&x.adjoint().matmul(&x), &tol));
        assert!(!is_psd(&ComplexMatrix::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]), &tol));
        assert!(!is_psd(&random_matrix(3, 3, 8), &tol));
    }

    #[test]
    fn pinv_recovers_solution() {
        let tol = TolerancePolicy::default();
        let a = random_matrix(5, 3, 3);
        let pi = pinv(&a, &tol);
        let res = a.matmul(&pi).matmul(&a).sub_mat(&a).fro_norm();
        assert!(res < 1e-10, "A pinv(A) A = A failed: {res}");
    }

    #[test]
    fn nilpotent_spectrum() {
        let tol = TolerancePolicy::default();
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        let rep = spectrum_and_radius(&m, &tol).unwrap();
        assert_eq!(rep.eigenvalues.len(), 2);
        assert!(rep.spectral_radius < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cstar_equality_at_matrix_level(seed in 0u64..5000) {
            let tol = TolerancePolicy::default();
            let m = random_matrix(4, 4, seed);
            let lhs = operator_norm(&m).powi(2);
            let rhs = operator_norm(&m.adjoint().matmul(&m));
            prop_assert!((lhs - rhs).abs() <= 10.0 * tol.gate(rhs.max(1.0)));
        }

        #[test]
        fn spectra_of_ab_and_ba_agree(seed in 0u64..5000) {
            let tol = TolerancePolicy::default();
            let a = random_matrix(4, 4, seed.wrapping_mul(3).wrapping_add(1));
            let b = random_matrix(4, 4, seed.wrapping_mul(5).wrapping_add(2));
            let sab = spectrum_and_radius(&a.matmul(&b), &tol).unwrap();
            let sba = spectrum_and_radius(&b.matmul(&a), &tol).unwrap();
            let d = nonzero_spectrum_distance(&sab.eigenvalues, &sba.eigenvalues, 1e-10);
            prop_assert!(d <= 1e-8, "spectra differ by {d}");
        }

        #[test]
        fn unitary_eigenvalues_on_circle(seed in 0u64..5000) {
            let tol = TolerancePolicy::default();
            let m = random_matrix(4, 4, seed).hermitize();
            let (_, u) = hermitian_eigendecomposition(&m, &tol).unwrap();
            let rep = spectrum_and_radius(&u, &tol).unwrap();
            for e in rep.eigenvalues {
                prop_assert!((e.norm() - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn self_adjoint_spectrum_is_real(seed in 0u64..5000) {
            let tol = TolerancePolicy::default();
            let m = random_matrix(5, 5, seed).hermitize();
            let rep = spectrum_and_radius(&m, &tol).unwrap();
            for e in rep.eigenvalues {
                prop_assert!(e.im.abs() <= 1e-9);
            }
        }
    }
}
