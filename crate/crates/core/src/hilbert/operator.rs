//! Adjointable operators between Hilbert modules, stored as generator images
//! with a solved adjoint.

use super::{HilbertModule, ModuleElement, ModuleError};
use crate::numerics::{self, ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;
use std::sync::Arc;

/// An operator f: H -> K. `coeff` holds the stacked coefficient blocks of
/// the generator images (block (j,i) in hom(source(x_i), source(y_j))),
/// `adjoint_coeff` the solved images of f*. The localized matrix and the
/// norm are cached; two operators are equal when their localized matrices
/// agree.
#[derive(Debug, Clone)]
pub struct ModuleOperator {
    domain: Arc<HilbertModule>,
    codomain: Arc<HilbertModule>,
    coeff: ComplexMatrix,
    adjoint_coeff: ComplexMatrix,
    localized: ComplexMatrix,
    norm: f64,
}

impl ModuleOperator {
    pub fn domain(&self) -> &Arc<HilbertModule> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<HilbertModule> {
        &self.codomain
    }

    pub fn coeff(&self) -> &ComplexMatrix {
        &self.coeff
    }

    pub fn localized(&self) -> &ComplexMatrix {
        &self.localized
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_endomorphism(&self) -> bool {
        Arc::ptr_eq(&self.domain, &self.codomain)
    }

    /// Image of a module element.
    pub fn apply(&self, h: &ModuleElement) -> Result<ModuleElement, ModuleError> {
        if !Arc::ptr_eq(&h.module, &self.domain) {
            return Err(ModuleError::ModuleMismatch);
        }
        let stacked = self.coeff.matmul(&h.coeff_matrix());
        let mut coeffs = Vec::with_capacity(self.codomain.generators().len());
        for (j, g) in self.codomain.generators().iter().enumerate() {
            let d = self.codomain.base().dim(g.source);
            coeffs.push(stacked.block(self.codomain.offsets()[j], 0, d, h.coeff_matrix().cols()));
        }
        Ok(ModuleElement { module: self.codomain.clone(), object: h.object, coeffs })
    }

    /// The adjoint operator.
    pub fn star(&self, tol: &TolerancePolicy) -> Result<ModuleOperator, ModuleError> {
        from_coeff(self.codomain.clone(), self.domain.clone(), self.adjoint_coeff.clone(), tol)
    }

    pub fn compose(
        &self,
        inner: &ModuleOperator,
        tol: &TolerancePolicy,
    ) -> Result<ModuleOperator, ModuleError> {
        if !Arc::ptr_eq(&inner.codomain, &self.domain) {
            return Err(ModuleError::ModuleMismatch);
        }
        from_coeff(
            inner.domain.clone(),
            self.codomain.clone(),
            self.coeff.matmul(&inner.coeff),
            tol,
        )
    }

    pub fn add(&self, other: &ModuleOperator, tol: &TolerancePolicy) -> Result<ModuleOperator, ModuleError> {
        if !Arc::ptr_eq(&self.domain, &other.domain) || !Arc::ptr_eq(&self.codomain, &other.codomain) {
            return Err(ModuleError::ModuleMismatch);
        }
        from_coeff(
            self.domain.clone(),
            self.codomain.clone(),
            self.coeff.add_mat(&other.coeff),
            tol,
        )
    }

    pub fn sub(&self, other: &ModuleOperator, tol: &TolerancePolicy) -> Result<ModuleOperator, ModuleError> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0), tol)?, tol)
    }

    pub fn scale(&self, c: Complex64, tol: &TolerancePolicy) -> Result<ModuleOperator, ModuleError> {
        from_coeff(self.domain.clone(), self.codomain.clone(), self.coeff.scale(c), tol)
    }

    /// Norm distance in the operator algebra; zero means equal as operators
    /// (coefficient matrices may still differ along the Gram kernel).
    pub fn distance(&self, other: &ModuleOperator) -> f64 {
        numerics::operator_norm(&self.localized.sub_mat(&other.localized))
    }
}

/// Identity endomorphism.
pub fn identity(module: &Arc<HilbertModule>, tol: &TolerancePolicy) -> Result<ModuleOperator, ModuleError> {
    from_coeff(
        module.clone(),
        module.clone(),
        ComplexMatrix::identity(module.total_dim()),
        tol,
    )
}

/// Zero operator H -> K.
pub fn zero(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, ModuleError> {
    from_coeff(
        domain.clone(),
        codomain.clone(),
        ComplexMatrix::zeros(codomain.total_dim(), domain.total_dim()),
        tol,
    )
}

/// Rank-one operator theta_{u,v}: h -> u . <v, h> for u in K(A), v in H(A).
pub fn rank_one(
    u: &ModuleElement,
    v: &ModuleElement,
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, ModuleError> {
    if u.object != v.object {
        return Err(ModuleError::ShapeMismatch(
            "rank-one factors must live over the same object".into(),
        ));
    }
    let bra = v.coeff_matrix().adjoint().matmul(v.module.gram());
    let coeff = u.coeff_matrix().matmul(&bra);
    from_coeff(v.module.clone(), u.module.clone(), coeff, tol)
}

/// Build an operator from generator images. Verifies well-definedness on the
/// Gram kernel, solves the adjoint system and checks the adjoint relation.
pub fn make_operator(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    images: &[ModuleElement],
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, ModuleError> {
    if images.len() != domain.generators().len() {
        return Err(ModuleError::ShapeMismatch(format!(
            "need one image per generator ({} expected)",
            domain.generators().len()
        )));
    }
    let mut coeff = ComplexMatrix::zeros(codomain.total_dim(), domain.total_dim());
    for (i, img) in images.iter().enumerate() {
        if !Arc::ptr_eq(&img.module, codomain) {
            return Err(ModuleError::ModuleMismatch);
        }
        if img.object != domain.generators()[i].source {
            return Err(ModuleError::ShapeMismatch(format!(
                "image {i} lives at object {}, generator source is {}",
                img.object,
                domain.generators()[i].source
            )));
        }
        coeff.set_block(0, domain.offsets()[i], &img.coeff_matrix());
    }
    from_coeff(domain.clone(), codomain.clone(), coeff, tol)
}

/// Core constructor from a stacked coefficient matrix.
pub fn from_coeff(
    domain: Arc<HilbertModule>,
    codomain: Arc<HilbertModule>,
    coeff: ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, ModuleError> {
    let dl = domain.localization();
    let cl = codomain.localization();
    let phi_c = cl.phi.matmul(&coeff);
    let scale = phi_c.fro_norm().max(1.0);

    // Null vectors must map to null vectors.
    if dl.kernel.cols() > 0 {
        let leak = phi_c.matmul(&dl.kernel);
        let residual = leak.fro_norm();
        if residual > tol.gate(scale) * 10.0 {
            return Err(ModuleError::NotWellDefined { residual });
        }
    }

    let localized = phi_c.matmul(&dl.phi_pinv);
    let norm = numerics::operator_norm(&localized);

    // Adjoint from <f x_i, y_j> = <x_i, f* y_j>: G_H C' = C* G_K, least
    // squares through the pseudo-inverse G+ = phi_pinv . phi_pinv*.
    let rhs = coeff.adjoint().matmul(codomain.gram());
    let adjoint_coeff = dl.phi_pinv.matmul(&dl.phi_pinv.adjoint().matmul(&rhs));
    let residual = domain.gram().matmul(&adjoint_coeff).sub_mat(&rhs).fro_norm();
    let gate =
        10.0 * (tol.atol + tol.rtol * scale * codomain.gram().fro_norm().max(1.0));
    if residual > gate {
        return Err(ModuleError::AdjointSolveFailed { residual, gate });
    }

    Ok(ModuleOperator { domain, codomain, coeff, adjoint_coeff, localized, norm })
}

/// Smallest K with image-gram <= K^2 . domain-gram as a PSD ordering on the
/// support of the domain gram. Errors with Unbounded when the image gram
/// does not vanish on the kernel.
pub fn least_bound(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    images: &[ModuleElement],
    tol: &TolerancePolicy,
) -> Result<f64, ModuleError> {
    let mut coeff = ComplexMatrix::zeros(codomain.total_dim(), domain.total_dim());
    for (i, img) in images.iter().enumerate() {
        coeff.set_block(0, domain.offsets()[i], &img.coeff_matrix());
    }
    let image_gram = coeff.adjoint().matmul(codomain.gram()).matmul(&coeff);
    let dl = domain.localization();
    let scale = numerics::operator_norm(&image_gram).max(1.0);
    if dl.kernel.cols() > 0 {
        let on_kernel = dl.kernel.adjoint().matmul(&image_gram).matmul(&dl.kernel);
        if numerics::operator_norm(&on_kernel) > tol.gate(scale) * 10.0 {
            return Err(ModuleError::Unbounded);
        }
    }
    // Generalized top eigenvalue of (image_gram, G_H) on the support.
    let w = dl
        .phi_pinv
        .adjoint()
        .matmul(&image_gram)
        .matmul(&dl.phi_pinv);
    let top = numerics::eigen::jacobi_hermitian(&w)?
        .0
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    Ok(top.sqrt())
}

/// Independent route to the operator norm: random elements refined by power
/// ascent through f* f at the coefficient level. Never touches the
/// localization or the generalized eigenvalue pencil, so it can serve as an
/// oracle for `least_bound` and `ModuleOperator::norm`.
pub fn norm_by_ratio_ascent(
    f: &ModuleOperator,
    rng: &mut impl rand::Rng,
    restarts: usize,
    iters: usize,
    tol: &TolerancePolicy,
) -> Result<f64, ModuleError> {
    let fs = f.star(tol)?;
    let n_obj = f.domain().base().objects().len();
    let mut best = 0.0f64;
    // Plain random sampling first; the ascent below sharpens the estimate.
    for _ in 0..restarts * 8 {
        let a = rng.gen_range(0..n_obj);
        let h = f.domain().random_element(rng, a);
        let hn = h.norm();
        if hn > 1e-10 {
            best = best.max(f.apply(&h)?.norm() / hn);
        }
    }
    for _ in 0..restarts {
        let a = rng.gen_range(0..n_obj);
        let mut h = f.domain().random_element(rng, a);
        let mut hn = h.norm();
        if hn <= 1e-10 {
            continue;
        }
        for _ in 0..iters {
            let mut next = fs.apply(&f.apply(&h)?)?;
            let nn = next.norm();
            if nn <= 1e-14 * hn {
                break;
            }
            next = next.scale(Complex64::new(1.0 / nn, 0.0));
            h = next;
            hn = h.norm();
            if hn <= 1e-12 {
                break;
            }
        }
        if hn > 1e-10 {
            best = best.max(f.apply(&h)?.norm() / hn);
        }
    }
    Ok(best)
}

/// Positivity of an endomorphism, decided along two routes that must agree:
/// the localized representation matrix must be PSD, and the block matrix
/// [<x_i, F x_j>] must pass the column criterion (evaluated as positivity of
/// G_H . coeff on the support).
pub fn operator_positive(
    f: &ModuleOperator,
    tol: &TolerancePolicy,
) -> Result<bool, ModuleError> {
    if !f.is_endomorphism() {
        return Err(ModuleError::ModuleMismatch);
    }
    let route_localized = numerics::is_psd(f.localized(), tol);

    // <x_i, F x_j> assembled over all generators is G_H C; restrict to the
    // support to ignore kernel ghosts, then test positivity.
    let h = f.domain();
    let dl = h.localization();
    let pairing = h.gram().matmul(f.coeff());
    let restricted = dl
        .phi_pinv
        .adjoint()
        .matmul(&pairing)
        .matmul(&dl.phi_pinv);
    let route_pairing = numerics::is_psd(&restricted, tol);

    if route_localized != route_pairing {
        return Err(ModuleError::InternalInconsistency(format!(
            "localized PSD = {route_localized}, pairing PSD = {route_pairing}"
        )));
    }
    Ok(route_localized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::CStarCategoryPresentation;
    use crate::hilbert::{direct_sum, Generator};
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_module(
        base: Arc<CStarCategoryPresentation>,
        sources: &[usize],
        seed: u64,
        tol: &TolerancePolicy,
    ) -> Arc<HilbertModule> {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let total: usize = sources.iter().map(|s| base.dim(*s)).sum();
        let t = ComplexMatrix::from_fn(total, total, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        // Project the random PSD matrix onto hom-block structure by zeroing
        // nothing: over a full matrix category every block is allowed.
        let gram = t.adjoint().matmul(&t);
        let gens = sources
            .iter()
            .enumerate()
            .map(|(i, s)| Generator { label: format!("x{i}"), source: *s })
            .collect();
        HilbertModule::from_dense_gram(base, gens, gram, tol).unwrap()
    }

    #[test]
    fn identity_operator_is_self_adjoint() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = random_module(base, &[0, 0], 3, &tol);
        let images: Vec<ModuleElement> = (0..2).map(|i| m.generator_element(i)).collect();
        let id = make_operator(&m, &m, &images, &tol).unwrap();
        let st = id.star(&tol).unwrap();
        assert!(id.distance(&st) < 1e-9);
        assert!((id.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn swap_adjoint_is_swap() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let y = HilbertModule::yoneda(base, 0, &tol).unwrap();
        let (sum, inj, _) = direct_sum(&[y.clone(), y.clone()], &tol).unwrap();
        // Swap of the two summands.
        let swap = inj[1]
            .compose(&inj[0].star(&tol).unwrap(), &tol)
            .unwrap()
            .add(
                &inj[0].compose(&inj[1].star(&tol).unwrap(), &tol).unwrap(),
                &tol,
            )
            .unwrap();
        let st = swap.star(&tol).unwrap();
        assert!(swap.distance(&st) < 1e-10);
        let sq = swap.compose(&swap, &tol).unwrap();
        let id = identity(&sum, &tol).unwrap();
        assert!(sq.distance(&id) < 1e-10);
    }

    #[test]
    fn adjoint_relation_on_canonical_bases() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 1)]).into_shared();
        let m = random_module(base.clone(), &[0, 1], 5, &tol);
        let k = random_module(base.clone(), &[1, 0], 6, &tol);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let images: Vec<ModuleElement> = m
            .generators()
            .iter()
            .map(|g| k.random_element(&mut rng, g.source))
            .collect();
        let f = make_operator(&m, &k, &images, &tol).unwrap();
        let fs = f.star(&tol).unwrap();
        for a in 0..base.objects().len() {
            for h in m.canonical_basis(a, &tol) {
                for g in k.canonical_basis(a, &tol) {
                    let lhs = f.apply(&h).unwrap().inner_product(&g).unwrap();
                    let rhs = h.inner_product(&fs.apply(&g).unwrap()).unwrap();
                    assert!(
                        lhs.mat.sub_mat(&rhs.mat).fro_norm() < 1e-9,
                        "adjoint relation failed at object {a}"
                    );
                }
            }
        }
    }

    #[test]
    fn least_bound_matches_ratio_sup() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = random_module(base.clone(), &[0, 0], 11, &tol);
        let k = random_module(base.clone(), &[0], 12, &tol);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let images: Vec<ModuleElement> = m
            .generators()
            .iter()
            .map(|g| k.random_element(&mut rng, g.source))
            .collect();
        let bound = least_bound(&m, &k, &images, &tol).unwrap();
        let f = make_operator(&m, &k, &images, &tol).unwrap();
        assert!((bound - f.norm()).abs() < 1e-9);
        let sup = norm_by_ratio_ascent(&f, &mut rng, 8, 600, &tol).unwrap();
        assert!(sup <= bound + 1e-8, "sup {sup} exceeds bound {bound}");
        assert!(bound - sup < 1e-6 * bound.max(1.0), "sup {sup} far from bound {bound}");
    }

    #[test]
    fn zero_images_have_zero_bound() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = random_module(base.clone(), &[0], 15, &tol);
        let k = random_module(base, &[0], 16, &tol);
        let images = vec![k.zero_element(0)];
        assert!(least_bound(&m, &k, &images, &tol).unwrap() < 1e-12);
    }

    #[test]
    fn positivity_routes_agree() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = random_module(base, &[0, 0], 17, &tol);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(18);
        let images: Vec<ModuleElement> = m
            .generators()
            .iter()
            .map(|g| m.random_element(&mut rng, g.source))
            .collect();
        let s = make_operator(&m, &m, &images, &tol).unwrap();
        let pos = s.star(&tol).unwrap().compose(&s, &tol).unwrap();
        assert!(operator_positive(&pos, &tol).unwrap());
        let neg = identity(&m, &tol)
            .unwrap()
            .scale(c(-1.0, 0.0), &tol)
            .unwrap();
        assert!(!operator_positive(&neg, &tol).unwrap());
    }
}
