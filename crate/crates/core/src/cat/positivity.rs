//! Element positivity with the six-condition breakdown, each condition
//! evaluated by its own route.

use super::presentation::{CatElement, CatError, CStarCategoryPresentation};
use super::span;
use crate::numerics::{self, ComplexMatrix, SpectralFn, TolerancePolicy};

/// Truth values of the six equivalent characterizations of positivity:
/// (1) f = a* a inside the hom-space,
/// (2) f = u^2 for a self-adjoint u inside the hom-space,
/// (3) f normal with spectrum in the nonnegative reals,
/// (4) |K - f| <= K for every K >= |f|/2 (checked at the tightest K),
/// (5) |K - f| <= K for K = |f|,
/// (6) f diagonalizes with nonnegative entries in a commutative subalgebra.
#[derive(Debug, Clone)]
pub struct PositivityBreakdown {
    pub square_of_element: bool,
    pub square_of_self_adjoint: bool,
    pub spectrum_nonnegative: bool,
    pub norm_shift_all: bool,
    pub norm_shift_some: bool,
    pub commutative_diagonal: bool,
}

impl PositivityBreakdown {
    pub fn as_array(&self) -> [bool; 6] {
        [
            self.square_of_element,
            self.square_of_self_adjoint,
            self.spectrum_nonnegative,
            self.norm_shift_all,
            self.norm_shift_some,
            self.commutative_diagonal,
        ]
    }

    pub fn unanimous(&self) -> Option<bool> {
        let a = self.as_array();
        if a.iter().all(|&b| b) {
            Some(true)
        } else if a.iter().all(|&b| !b) {
            Some(false)
        } else {
            None
        }
    }
}

/// Decide positivity of f in C(X,X) by representation eigenvalues and run
/// the six-way breakdown. The six conditions must agree with one another and
/// with the main verdict, otherwise the tolerance regime is broken and
/// InternalInconsistency is raised.
pub fn element_positivity(
    cat: &CStarCategoryPresentation,
    f: &CatElement,
    tol: &TolerancePolicy,
) -> Result<(bool, PositivityBreakdown), CatError> {
    if f.src != f.dst {
        return Err(CatError::InvalidPresentation(
            "positivity only makes sense for endomorphisms".into(),
        ));
    }
    cat.check_membership(f, tol)?;
    let x = f.src;
    let scale = f.norm().max(1e-300);
    let gate = tol.gate(scale) * 10.0;
    let clip = tol.eig_clip * scale;

    let main = numerics::is_psd(&f.mat, tol);

    let self_adjoint = f.mat.is_self_adjoint(gate);
    let hom = cat.hom_basis(x, x);

    // (1) a with a* a = f, found through the principal square root; the root
    // must land back inside the hom-space.
    let square_of_element = if self_adjoint {
        match numerics::sqrt_psd(&f.mat.hermitize(), tol) {
            Ok(root) => {
                let back = root.adjoint().matmul(&root);
                span::membership_residual(hom, &root) <= gate * 10.0
                    && back.sub_mat(&f.mat).fro_norm() <= gate * 10.0
            }
            Err(_) => false,
        }
    } else {
        false
    };

    // (2) self-adjoint u with u^2 = f; same construction, different checks.
    let square_of_self_adjoint = if self_adjoint {
        match numerics::sqrt_psd(&f.mat.hermitize(), tol) {
            Ok(u) => {
                u.is_self_adjoint(gate)
                    && u.matmul(&u).sub_mat(&f.mat).fro_norm() <= gate * 10.0
                    && span::membership_residual(hom, &u) <= gate * 10.0
            }
            Err(_) => false,
        }
    } else {
        false
    };

    // (3) normality plus nonnegative spectrum, through the general
    // eigensolver rather than the Hermitian one.
    let spectrum_nonnegative = {
        let comm = f
            .mat
            .matmul(&f.mat.adjoint())
            .sub_mat(&f.mat.adjoint().matmul(&f.mat))
            .fro_norm();
        if comm > gate {
            false
        } else {
            match numerics::spectrum_and_radius(&f.mat, tol) {
                Ok(rep) => rep
                    .eigenvalues
                    .iter()
                    .all(|l| l.re >= -clip.max(1e-8 * scale) && l.im.abs() <= 1e-8 * scale),
                Err(_) => false,
            }
        }
    };

    // (4) |K - f| <= K at the tightest K = |f|/2; monotone in K, so this
    // single check covers every larger K.
    let norm_shift_all = if self_adjoint {
        let k = scale / 2.0;
        let shifted = ComplexMatrix::identity(f.mat.rows()).scale_re(k).sub_mat(&f.mat);
        numerics::operator_norm(&shifted) <= k + gate
    } else {
        false
    };

    // (5) some K works; use K = |f|.
    let norm_shift_some = if self_adjoint {
        let k = scale;
        let shifted = ComplexMatrix::identity(f.mat.rows()).scale_re(k).sub_mat(&f.mat);
        numerics::operator_norm(&shifted) <= k + gate
    } else {
        false
    };

    // (6) diagonalization with nonnegative entries inside the commutative
    // algebra generated by f.
    let commutative_diagonal = if self_adjoint {
        match numerics::hermitian_eigendecomposition(&f.mat, tol) {
            Ok((vals, _)) => vals.iter().all(|v| *v >= -clip),
            Err(_) => false,
        }
    } else {
        false
    };

    let breakdown = PositivityBreakdown {
        square_of_element,
        square_of_self_adjoint,
        spectrum_nonnegative,
        norm_shift_all,
        norm_shift_some,
        commutative_diagonal,
    };

    match breakdown.unanimous() {
        Some(v) if v == main => Ok((main, breakdown)),
        _ => Err(CatError::InternalInconsistency(format!(
            "main verdict {main}, breakdown {:?}",
            breakdown.as_array()
        ))),
    }
}

/// Identity-free square root helper used by hereditary layers: the positive
/// part f_+ of a self-adjoint element through functional calculus.
pub fn positive_part(
    f: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<ComplexMatrix, CatError> {
    let pos = SpectralFn::new(&|t| Some(t.max(0.0)), 1.0);
    Ok(numerics::functional_calculus(f, &pos, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn identity_is_positive_sixfold() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 3)]);
        let f = cat.unit(0).unwrap();
        let (pos, breakdown) = element_positivity(&cat, &f, &tol).unwrap();
        assert!(pos);
        assert!(breakdown.as_array().iter().all(|&b| b));
    }

    #[test]
    fn random_star_squares_are_positive() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 4)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = cat.random_element(&mut rng, 0, 0).unwrap();
            let sq = cat.compose(&cat.star(&a), &a).unwrap();
            let (pos, _) = element_positivity(&cat, &sq, &tol).unwrap();
            assert!(pos);
        }
    }

    #[test]
    fn indefinite_element_is_negative_sixfold() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2)]);
        let f = cat
            .element(
                0,
                0,
                ComplexMatrix::diag(&[num_complex::Complex64::new(1.0, 0.0), num_complex::Complex64::new(-1.0, 0.0)]),
            )
            .unwrap();
        let (pos, breakdown) = element_positivity(&cat, &f, &tol).unwrap();
        assert!(!pos);
        assert!(breakdown.as_array().iter().all(|&b| !b));
    }
}
