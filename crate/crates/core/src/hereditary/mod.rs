//! Hereditary cones, left/right ideals, hereditary subalgebras and
//! subcategories; their interconversions, submodule actions, restriction
//! functors, weak density and approximate units.
//!
//! Every structure is carried by its family of support projections: in
//! finite dimensions a hereditary subalgebra is the corner p A p, a cone its
//! positive part, the left ideal A p, the right ideal p A. The bijections of
//! the theory become projection bookkeeping; realized-space equalities are
//! still checked span-by-span in the tests rather than assumed.

use crate::cat::{span, CatElement, CatError, CStarCategoryPresentation};
use crate::hilbert::{
    operator, spaces, HilbertModule, ModuleError, ModuleOperator, OperatorSpace,
};
use crate::numerics::{self, ComplexMatrix, TolerancePolicy};
#[cfg(test)]
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HereditaryError {
    #[error("support projection escapes the presented ambient algebra: residual {residual:.3e}")]
    SupportEscapes { residual: f64 },
    #[error("input is not positive: offending eigenvalue {min_eig:.6e}")]
    NotPositive { min_eig: f64 },
    #[error("cannot convert a multi-object subcategory into a single-object {target}")]
    KindMismatch { target: String },
    #[error("structure lives in a different ambient")]
    AmbientMismatch,
    #[error("projection data invalid: {0}")]
    BadProjection(String),
    #[error("density criteria disagree: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Cat(#[from] CatError),
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HereditaryKind {
    Cone,
    LeftIdeal,
    RightIdeal,
    Subalgebra,
    Subcategory,
}

impl HereditaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HereditaryKind::Cone => "cone",
            HereditaryKind::LeftIdeal => "left_ideal",
            HereditaryKind::RightIdeal => "right_ideal",
            HereditaryKind::Subalgebra => "hereditary_subalgebra",
            HereditaryKind::Subcategory => "hereditary_subcategory",
        }
    }
}

/// A hereditary structure in a presented category: one support projection
/// per object (zero projections allowed).
#[derive(Debug, Clone)]
pub struct HereditaryStructure {
    pub kind: HereditaryKind,
    pub ambient: Arc<CStarCategoryPresentation>,
    pub projections: Vec<ComplexMatrix>,
}

impl HereditaryStructure {
    pub fn new(
        kind: HereditaryKind,
        ambient: Arc<CStarCategoryPresentation>,
        projections: Vec<ComplexMatrix>,
        tol: &TolerancePolicy,
    ) -> Result<Self, HereditaryError> {
        if projections.len() != ambient.objects().len() {
            return Err(HereditaryError::BadProjection(format!(
                "need one projection per object ({})",
                ambient.objects().len()
            )));
        }
        for (x, p) in projections.iter().enumerate() {
            let d = ambient.dim(x);
            if p.rows() != d || p.cols() != d {
                return Err(HereditaryError::BadProjection(format!(
                    "projection at object {x} has wrong shape"
                )));
            }
            let gate = tol.gate(1.0) * 100.0;
            if p.sub_mat(&p.adjoint()).fro_norm() > gate
                || p.matmul(p).sub_mat(p).fro_norm() > gate
            {
                return Err(HereditaryError::BadProjection(format!(
                    "projection at object {x} is not a self-adjoint idempotent"
                )));
            }
            let residual = span::membership_residual(ambient.hom_basis(x, x), p);
            if residual > gate * p.fro_norm().max(1.0) {
                return Err(HereditaryError::SupportEscapes { residual });
            }
        }
        Ok(HereditaryStructure { kind, ambient, projections })
    }

    /// Translate between the five kinds; the projection family is shared.
    /// Multi-object subcategories only convert to single-object kinds when a
    /// single projection is nonzero.
    pub fn convert(&self, target: HereditaryKind) -> Result<HereditaryStructure, HereditaryError> {
        if self.kind == HereditaryKind::Subcategory && target != HereditaryKind::Subcategory {
            let nonzero = self
                .projections
                .iter()
                .filter(|p| p.fro_norm() > 1e-12)
                .count();
            if nonzero > 1 {
                return Err(HereditaryError::KindMismatch {
                    target: target.as_str().into(),
                });
            }
        }
        Ok(HereditaryStructure {
            kind: target,
            ambient: self.ambient.clone(),
            projections: self.projections.clone(),
        })
    }

    /// Orthonormal basis of the realized space on hom(x, y) for the current
    /// kind. The cone's realized space is its linear span p C(x) p; use
    /// [`HereditaryStructure::cone_contains`] for membership in the cone
    /// itself.
    pub fn realized_space(&self, x: usize, y: usize, tol: &TolerancePolicy) -> Vec<ComplexMatrix> {
        let hom = self.ambient.hom_basis(x, y);
        let px = &self.projections[x];
        let py = &self.projections[y];
        let mapped: Vec<ComplexMatrix> = hom
            .iter()
            .map(|b| match self.kind {
                HereditaryKind::Cone | HereditaryKind::Subalgebra | HereditaryKind::Subcategory => {
                    py.matmul(b).matmul(px)
                }
                HereditaryKind::LeftIdeal => b.matmul(px),
                HereditaryKind::RightIdeal => py.matmul(b),
            })
            .collect();
        span::orthonormalize(&mapped, tol.eig_clip.sqrt())
    }

    /// Membership in the realized space.
    pub fn contains(&self, el: &CatElement, tol: &TolerancePolicy) -> bool {
        let basis = self.realized_space(el.src, el.dst, tol);
        span::membership_residual(&basis, &el.mat)
            <= tol.gate(el.mat.fro_norm().max(1.0)) * 100.0
    }

    /// Membership in the cone: realized-space membership plus positivity.
    pub fn cone_contains(&self, el: &CatElement, tol: &TolerancePolicy) -> bool {
        el.src == el.dst && self.contains(el, tol) && numerics::is_psd(&el.mat, tol)
    }
}

/// The hereditary subalgebra generated by PSD elements of the endomorphism
/// algebra of one object: the corner cut by the projection onto the joint
/// range.
pub fn support_projection(
    ambient: &Arc<CStarCategoryPresentation>,
    object: usize,
    positives: &[ComplexMatrix],
    tol: &TolerancePolicy,
) -> Result<HereditaryStructure, HereditaryError> {
    let d = ambient.dim(object);
    let mut sum = ComplexMatrix::zeros(d, d);
    for a in positives {
        if !numerics::is_psd(a, tol) {
            return Err(HereditaryError::NotPositive {
                min_eig: numerics::min_eigenvalue(&a.hermitize()),
            });
        }
        let el = CatElement { src: object, dst: object, mat: a.clone() };
        ambient.check_membership(&el, tol)?;
        sum = sum.add_mat(a);
    }
    let p = range_projection(&sum, tol);
    let residual = span::membership_residual(ambient.hom_basis(object, object), &p);
    if residual > tol.gate(1.0) * 100.0 {
        return Err(HereditaryError::SupportEscapes { residual });
    }
    let mut projections: Vec<ComplexMatrix> = (0..ambient.objects().len())
        .map(|x| ComplexMatrix::zeros(ambient.dim(x), ambient.dim(x)))
        .collect();
    projections[object] = p;
    HereditaryStructure::new(HereditaryKind::Subalgebra, ambient.clone(), projections, tol)
}

/// Spectral projection onto the range of a PSD matrix.
pub fn range_projection(m: &ComplexMatrix, tol: &TolerancePolicy) -> ComplexMatrix {
    let (vals, basis) = numerics::eigen::jacobi_hermitian(&m.hermitize()).expect("Jacobi");
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let clip = (tol.eig_clip * top).max(1e-300);
    let mut p = ComplexMatrix::zeros(m.rows(), m.cols());
    for (i, lam) in vals.iter().enumerate() {
        if *lam > clip {
            let col = basis.column(i);
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    p[(r, c)] += col[r] * col[c].conj();
                }
            }
        }
    }
    p
}

/// The corner presentation of a hereditary subcategory: hom(x, y) becomes
/// p_y C(x, y) p_x, unital with the projections as units.
pub fn subcategory_presentation(
    sub: &HereditaryStructure,
    tol: &TolerancePolicy,
) -> Result<CStarCategoryPresentation, HereditaryError> {
    use std::collections::BTreeMap;
    let cat = &sub.ambient;
    let mut homs = BTreeMap::new();
    for (x, y) in cat.hom_pairs() {
        let basis = sub
            .convert(HereditaryKind::Subcategory)?
            .realized_space_corner(x, y, tol);
        if !basis.is_empty() {
            homs.insert((x, y), basis);
        }
    }
    Ok(CStarCategoryPresentation::new(
        cat.objects().to_vec(),
        homs,
        true,
        crate::cat::StarOp::Adjoint,
        tol,
    )?)
}

impl HereditaryStructure {
    fn realized_space_corner(
        &self,
        x: usize,
        y: usize,
        tol: &TolerancePolicy,
    ) -> Vec<ComplexMatrix> {
        let hom = self.ambient.hom_basis(x, y);
        let mapped: Vec<ComplexMatrix> = hom
            .iter()
            .map(|b| self.projections[y].matmul(b).matmul(&self.projections[x]))
            .collect();
        span::orthonormalize(&mapped, tol.eig_clip.sqrt())
    }
}

/// Restriction of an object X of the ambient category to a hereditary
/// subcategory: the module over the corner presentation whose fiber at a is
/// C(a, X) p_a.
pub fn restrict_object(
    sub: &HereditaryStructure,
    sub_presentation: &Arc<CStarCategoryPresentation>,
    object: usize,
    tol: &TolerancePolicy,
) -> Result<Arc<HilbertModule>, HereditaryError> {
    let cat = &sub.ambient;
    let mut generators = Vec::new();
    let mut columns: Vec<ComplexMatrix> = Vec::new();
    for a in 0..cat.objects().len() {
        if sub.projections[a].fro_norm() <= 1e-12 {
            continue;
        }
        for (k, f) in cat.hom_basis(a, object).iter().enumerate() {
            let t = f.matmul(&sub.projections[a]);
            if t.fro_norm() <= 1e-12 {
                continue;
            }
            generators.push(crate::hilbert::Generator {
                label: format!("r{a}.{k}"),
                source: a,
            });
            columns.push(t);
        }
    }
    let total: usize = generators.iter().map(|g| cat.dim(g.source)).sum();
    let mut gram = ComplexMatrix::zeros(total, total);
    let mut offset_i = 0;
    for (i, ti) in columns.iter().enumerate() {
        let di = cat.dim(generators[i].source);
        let mut offset_j = 0;
        for (j, tj) in columns.iter().enumerate() {
            let dj = cat.dim(generators[j].source);
            gram.set_block(offset_i, offset_j, &ti.adjoint().matmul(tj));
            offset_j += dj;
            let _ = j;
        }
        offset_i += di;
    }
    Ok(HilbertModule::from_dense_gram(
        sub_presentation.clone(),
        generators,
        gram,
        tol,
    )?)
}

/// Restriction of a Hilbert module over the ambient category to a hereditary
/// subcategory: elements whose self-pairings land in the corner.
pub fn restrict_module(
    module: &Arc<HilbertModule>,
    sub: &HereditaryStructure,
    sub_presentation: &Arc<CStarCategoryPresentation>,
    tol: &TolerancePolicy,
) -> Result<Arc<HilbertModule>, HereditaryError> {
    let cat = module.base().clone();
    let mut generators = Vec::new();
    let mut elements = Vec::new();
    for a in 0..cat.objects().len() {
        if sub.projections[a].fro_norm() <= 1e-12 {
            continue;
        }
        for (k, e) in module.canonical_basis(a, tol).into_iter().enumerate() {
            let cut = e
                .act(&CatElement { src: a, dst: a, mat: sub.projections[a].clone() })
                .map_err(ModuleError::from)?;
            if cut.norm() <= 1e-10 {
                continue;
            }
            generators.push(crate::hilbert::Generator {
                label: format!("r{a}.{k}"),
                source: a,
            });
            elements.push(cut);
        }
    }
    let total: usize = generators.iter().map(|g| cat.dim(g.source)).sum();
    let mut gram = ComplexMatrix::zeros(total, total);
    let mut oi = 0;
    for (i, ei) in elements.iter().enumerate() {
        let di = cat.dim(generators[i].source);
        let mut oj = 0;
        for ej in elements.iter() {
            let ip = ei.inner_product(ej).map_err(ModuleError::from)?;
            gram.set_block(oi, oj, &ip.mat);
            oj += ip.mat.cols();
        }
        oi += di;
    }
    Ok(HilbertModule::from_dense_gram(
        sub_presentation.clone(),
        generators,
        gram,
        tol,
    )?)
}

/// A . H for the corner subalgebra cut by the self-adjoint idempotent p on
/// H: the split module together with its isometric inclusion.
pub fn act_submodule(
    module: &Arc<HilbertModule>,
    p: &ModuleOperator,
    tol: &TolerancePolicy,
) -> Result<(Arc<HilbertModule>, ModuleOperator), HereditaryError> {
    Ok(crate::hilbert::split_projection(module, p, tol)?)
}

/// The stabilizer corner of a submodule given by an isometry u: H' -> H:
/// the projection u u* whose corner is the algebra of operators mapping H
/// into the submodule on both sides.
pub fn stabilizer_projection(
    inclusion: &ModuleOperator,
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, HereditaryError> {
    Ok(inclusion.compose(&inclusion.star(tol)?, tol)?)
}

/// Three-way weak-density verdict for the corner p End(H) p.
#[derive(Debug, Clone)]
pub struct DensityReport {
    pub contains_compacts: bool,
    pub pointwise_dense: bool,
    pub action_covers: bool,
}

impl DensityReport {
    pub fn unanimous(&self) -> Option<bool> {
        if self.contains_compacts && self.pointwise_dense && self.action_covers {
            Some(true)
        } else if !self.contains_compacts && !self.pointwise_dense && !self.action_covers {
            Some(false)
        } else {
            None
        }
    }
}

/// Weak density of the hereditary subalgebra p End(H) p, evaluated through
/// three independently coded criteria that must agree: containment of the
/// compact algebra, pointwise density of the orbit of a canonical basis, and
/// the action covering the module.
pub fn is_weakly_dense(
    module: &Arc<HilbertModule>,
    p: &ModuleOperator,
    tol: &TolerancePolicy,
) -> Result<(bool, DensityReport), HereditaryError> {
    if !Arc::ptr_eq(p.domain(), module) || !p.is_endomorphism() {
        return Err(HereditaryError::AmbientMismatch);
    }
    let gate = tol.gate(1.0) * 100.0;

    // (1) Compacts inside the corner: p k p = k for every compact basis op,
    // checked on localized matrices.
    let compact_locs = spaces::compact_space_locs(module, module, tol)?;
    let p_loc = p.localized();
    let contains_compacts = compact_locs.iter().all(|k| {
        let pkp = p_loc.matmul(k).matmul(p_loc);
        pkp.sub_mat(k).fro_norm() <= gate * k.fro_norm().max(1.0)
    });

    // (2) Pointwise density: the corner's orbit of a canonical basis spans
    // every H(X); frames of p b p e are loc(p) loc(b) loc(p) frame(e).
    let end = spaces::hom_space(module, module, tol)?;
    let base = module.base().clone();
    let mut pointwise_dense = true;
    for x in 0..base.objects().len() {
        let basis = module.canonical_basis(x, tol);
        if basis.is_empty() {
            continue;
        }
        let target: Vec<ComplexMatrix> = basis.iter().map(|e| e.localized()).collect();
        let mut orbit: Vec<ComplexMatrix> = Vec::new();
        for f in &target {
            for b in &end.basis {
                let m = p_loc.matmul(b.localized()).matmul(p_loc).matmul(f);
                orbit.push(m);
            }
        }
        let d_target = span::orthonormalize(&target, tol.eig_clip.sqrt()).len();
        let orbit_basis = span::orthonormalize(&orbit, tol.eig_clip.sqrt());
        if orbit_basis.len() < d_target {
            pointwise_dense = false;
        }
    }

    // (3) A . H covers H: the split module has the same fiber dimensions.
    let (ph, _) = act_submodule(module, p, tol)?;
    let mut action_covers = true;
    for x in 0..base.objects().len() {
        if ph.space_dim(x, tol) != module.space_dim(x, tol) {
            action_covers = false;
        }
    }

    let report = DensityReport { contains_compacts, pointwise_dense, action_covers };
    match report.unanimous() {
        Some(v) => Ok((v, report)),
        None => Err(HereditaryError::InternalInconsistency(format!("{report:?}"))),
    }
}

/// The increasing sequence (1 - 1/k) p, k = 1..len, inside the corner cut by
/// the projection at `object`. For every x in the corner,
/// |lambda_len . x - x| = |x| / len.
pub fn approximate_unit(
    sub: &HereditaryStructure,
    object: usize,
    len: usize,
) -> Vec<CatElement> {
    let p = &sub.projections[object];
    (1..=len)
        .map(|k| CatElement {
            src: object,
            dst: object,
            mat: p.scale_re(1.0 - 1.0 / k as f64),
        })
        .collect()
}

/// Constructive common upper bound of two elements of the open unit ball of
/// the corner's positive cone, through the order bijection
/// x -> (1 - x)^{-1} - 1 computed inside the corner.
pub fn common_upper_bound(
    sub: &HereditaryStructure,
    object: usize,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<ComplexMatrix, HereditaryError> {
    let p = &sub.projections[object];
    let to_cone = |x: &ComplexMatrix| -> ComplexMatrix {
        // (p - x)^{-1} on the corner, minus p.
        numerics::pinv_psd(&p.sub_mat(x), tol).sub_mat(p)
    };
    let a1 = to_cone(a);
    let b1 = to_cone(b);
    let c1 = a1.add_mat(&b1);
    // back through the bijection: c = p - (p + c')^{-1} on the corner.
    let c = p.sub_mat(&numerics::pinv_psd(&p.add_mat(&c1), tol));
    let scale = numerics::operator_norm(&c).max(1.0);
    for (name, x) in [("a", a), ("b", b)] {
        let diff = c.sub_mat(x);
        if !numerics::is_psd(&diff, tol) {
            return Err(HereditaryError::InternalInconsistency(format!(
                "upper bound fails to dominate {name}; scale {scale}"
            )));
        }
    }
    Ok(c)
}

/// Quasi-containment Y < X: the two-sided ideal generated by End(X) inside
/// the operator category on {X, Y}, intersected with End(Y), must be weakly
/// dense on Y.
pub fn quasi_contained(
    y: &Arc<HilbertModule>,
    x: &Arc<HilbertModule>,
    tol: &TolerancePolicy,
) -> Result<bool, HereditaryError> {
    let hom_xy = spaces::hom_space(x, y, tol)?;
    let hom_yx = spaces::hom_space(y, x, tol)?;
    // Ideal component on End(Y): span of u . v over u: X -> Y, v: Y -> X.
    let mut prods: Vec<ComplexMatrix> = Vec::new();
    for u in &hom_xy.basis {
        for v in &hom_yx.basis {
            prods.push(u.localized().matmul(v.localized()));
        }
    }
    let mut sum = ComplexMatrix::zeros(y.rank(), y.rank());
    for s in &prods {
        sum = sum.add_mat(&s.matmul(&s.adjoint()));
    }
    let z_loc = range_projection(&sum, tol);
    let end_y = spaces::hom_space(y, y, tol)?;
    let z = operator_from_localized(&end_y, &z_loc, tol)?;
    Ok(is_weakly_dense(y, &z, tol)?.0)
}

/// Rebuild a module operator from a localized matrix lying in the given
/// operator space.
pub fn operator_from_localized(
    space: &OperatorSpace,
    loc: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, HereditaryError> {
    let locs: Vec<ComplexMatrix> = space.basis.iter().map(|b| b.localized().clone()).collect();
    let residual = span::membership_residual(&locs, loc);
    if residual > tol.gate(loc.fro_norm().max(1.0)) * 100.0 {
        return Err(HereditaryError::BadProjection(format!(
            "localized matrix lies outside the operator space (residual {residual:.3e})"
        )));
    }
    let coords = span::coords(&locs, loc);
    let mut coeff = ComplexMatrix::zeros(
        space.codomain.total_dim(),
        space.domain.total_dim(),
    );
    for (c, b) in coords.iter().zip(space.basis.iter()) {
        coeff = coeff.add_mat(&b.coeff().scale(*c));
    }
    Ok(operator::from_coeff(
        space.domain.clone(),
        space.codomain.clone(),
        coeff,
        tol,
    )?)
}

/// Essentiality of a weakly dense corner: any operator killed by the corner
/// basis must vanish. Returns the norm of the worst surviving annihilator
/// direction (0 for essential).
pub fn essentiality_defect(
    module: &Arc<HilbertModule>,
    p: &ModuleOperator,
    f: &ModuleOperator,
    tol: &TolerancePolicy,
) -> Result<f64, HereditaryError> {
    let end = spaces::hom_space(module, module, tol)?;
    let mut worst_annihilation = 0.0f64;
    for b in &end.basis {
        let pbp = p.compose(b, tol)?.compose(p, tol)?;
        let fa = f.compose(&pbp, tol)?;
        worst_annihilation = worst_annihilation.max(fa.norm());
    }
    // If f annihilates the whole corner, its own norm is the defect.
    if worst_annihilation <= tol.gate(f.norm().max(1.0)) * 10.0 {
        Ok(f.norm())
    } else {
        Ok(0.0)
    }
}

/// e_x . e_x-style submodule of the representable at X cut by a projection
/// p in C(X): generators {p} with gram p. Realizes the bijection between
/// hereditary subalgebras of C(X) and submodules of Y_X.
pub fn corner_submodule_of_yoneda(
    base: &Arc<CStarCategoryPresentation>,
    object: usize,
    p: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<Arc<HilbertModule>, HereditaryError> {
    Ok(HilbertModule::build(
        base.clone(),
        vec![crate::hilbert::Generator { label: "p".into(), source: object }],
        &[vec![p.clone()]],
        tol,
    )?)
}

pub use crate::numerics::eigen;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::CStarCategoryPresentation;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_psd(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let t = ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        t.adjoint().matmul(&t)
    }

    fn random_projection(n: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let tol = TolerancePolicy::default();
        let g = random_psd(n, rng);
        let (_, basis) = numerics::eigen::jacobi_hermitian(&g).unwrap();
        let mut p = ComplexMatrix::zeros(n, n);
        for k in 0..rank {
            let col = basis.column(k);
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += col[i] * col[j].conj();
                }
            }
        }
        let _ = tol;
        p
    }

    #[test]
    fn invertible_positive_has_full_support() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 3)]).into_shared();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        let a = random_psd(3, &mut rng).add_mat(&ComplexMatrix::identity(3).scale_re(0.5));
        let s = support_projection(&cat, 0, &[a], &tol).unwrap();
        assert!(
            s.projections[0].sub_mat(&ComplexMatrix::identity(3)).fro_norm() < 1e-9
        );
    }

    #[test]
    fn rank_one_positive_supports_itself() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 3)]).into_shared();
        let mut v = ComplexMatrix::zeros(3, 1);
        v[(0, 0)] = c(0.6, 0.0);
        v[(1, 0)] = c(0.0, 0.8);
        let vv = v.matmul(&v.adjoint());
        let s = support_projection(&cat, 0, &[vv.clone()], &tol).unwrap();
        assert!(s.projections[0].sub_mat(&vv).fro_norm() < 1e-9);
    }

    #[test]
    fn convert_round_trips_share_projection() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 3)]).into_shared();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let p = random_projection(3, 2, &mut rng);
        let cone = HereditaryStructure::new(
            HereditaryKind::Cone,
            cat.clone(),
            vec![p.clone()],
            &tol,
        )
        .unwrap();
        let li = cone.convert(HereditaryKind::LeftIdeal).unwrap();
        let back = li.convert(HereditaryKind::Cone).unwrap();
        assert!(back.projections[0].sub_mat(&p).fro_norm() < 1e-10);
        // Realized spaces: left ideal is C p, and f in LC iff f* f in cone span.
        let l_basis = li.realized_space(0, 0, &tol);
        for f in &l_basis {
            let ff = f.adjoint().matmul(f);
            let el = CatElement { src: 0, dst: 0, mat: ff };
            assert!(cone.cone_contains(&el, &tol));
        }
    }

    #[test]
    fn parallelogram_domination() {
        let tol = TolerancePolicy::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let a = ComplexMatrix::from_fn(3, 2, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let b = ComplexMatrix::from_fn(3, 2, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let sum = a.add_mat(&b);
            let lhs = sum.adjoint().matmul(&sum);
            let rhs = a
                .adjoint()
                .matmul(&a)
                .scale_re(2.0)
                .add_mat(&b.adjoint().matmul(&b).scale_re(2.0));
            assert!(numerics::is_psd(&rhs.sub_mat(&lhs), &tol));
        }
    }

    #[test]
    fn cone_membership_is_hereditary() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 3)]).into_shared();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let p = random_projection(3, 2, &mut rng);
        let cone =
            HereditaryStructure::new(HereditaryKind::Cone, cat, vec![p.clone()], &tol).unwrap();
        for _ in 0..10 {
            // a in the cone, 0 <= b <= a must land in the cone.
            let t = random_psd(3, &mut rng);
            let a = p.matmul(&t).matmul(&p);
            let el_a = CatElement { src: 0, dst: 0, mat: a.clone() };
            assert!(cone.cone_contains(&el_a, &tol));
            // shrink a spectrally
            let b = a.scale_re(rng.gen_range(0.1..0.9));
            let el_b = CatElement { src: 0, dst: 0, mat: b.clone() };
            assert!(numerics::is_psd(&a.sub_mat(&b), &tol));
            assert!(cone.cone_contains(&el_b, &tol));
        }
    }

    #[test]
    fn approximate_unit_residuals() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 3)]).into_shared();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(44);
        let p = random_projection(3, 2, &mut rng);
        let sub = HereditaryStructure::new(
            HereditaryKind::Subalgebra,
            cat,
            vec![p.clone()],
            &tol,
        )
        .unwrap();
        let units = approximate_unit(&sub, 0, 64);
        assert_eq!(units.len(), 64);
        let t = random_psd(3, &mut rng);
        let x = p.matmul(&t).matmul(&p);
        let last = &units[63];
        let residual = numerics::operator_norm(&last.mat.matmul(&x).sub_mat(&x));
        let xn = numerics::operator_norm(&x);
        assert!((residual - xn / 64.0).abs() < 1e-9 * xn.max(1.0));
        // Directedness witness.
        let a = p.scale_re(0.4);
        let b = x.scale_re(0.7 / xn);
        let c = common_upper_bound(&sub, 0, &a, &b, &tol).unwrap();
        assert!(numerics::operator_norm(&c) < 1.0 + 1e-9);
        assert!(numerics::is_psd(&c.sub_mat(&a), &tol));
    }
}

#[cfg(test)]
mod density_tests {
    use super::*;
    use crate::cat::CStarCategoryPresentation;
    use crate::hilbert::Generator;
    use rand::{Rng, SeedableRng};

    fn module_over(
        base: &Arc<CStarCategoryPresentation>,
        sources: &[usize],
        seed: u64,
        tol: &TolerancePolicy,
    ) -> Arc<HilbertModule> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let total: usize = sources.iter().map(|s| base.dim(*s)).sum();
        let t = ComplexMatrix::from_fn(total, total, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let gram = t.adjoint().matmul(&t);
        HilbertModule::from_dense_gram(
            base.clone(),
            sources
                .iter()
                .enumerate()
                .map(|(i, s)| Generator { label: format!("x{i}"), source: *s })
                .collect(),
            gram,
            tol,
        )
        .unwrap()
    }

    #[test]
    fn full_corner_is_dense_proper_corner_is_not() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = module_over(&base, &[0, 0], 50, &tol);
        let id = operator::identity(&m, &tol).unwrap();
        let (dense, rep) = is_weakly_dense(&m, &id, &tol).unwrap();
        assert!(dense, "{rep:?}");

        // A proper sub-projection: compress onto the first generator's image.
        let (sum_m, proj) = {
            // p = u u* for u the inclusion of generator 0's span.
            let e0 = m.generator_element(0);
            let g00 = e0.inner_product(&e0).unwrap();
            // skip degenerate draws
            assert!(numerics::operator_norm(&g00.mat) > 1e-6);
            let sub = HilbertModule::build(
                base.clone(),
                vec![Generator { label: "y".into(), source: 0 }],
                &[vec![g00.mat.clone()]],
                &tol,
            )
            .unwrap();
            let u = operator::make_operator(&sub, &m, &[e0], &tol).unwrap();
            (sub, stabilizer_projection(&u, &tol).unwrap())
        };
        let _ = sum_m;
        let (dense2, rep2) = is_weakly_dense(&m, &proj, &tol).unwrap();
        assert!(!dense2, "{rep2:?}");
    }

    #[test]
    fn quasi_containment_is_reflexive_and_zero_bottom() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = module_over(&base, &[0], 51, &tol);
        assert!(quasi_contained(&m, &m, &tol).unwrap());
        let z = HilbertModule::zero(base.clone(), &tol);
        assert!(quasi_contained(&z, &m, &tol).unwrap());
    }
}
