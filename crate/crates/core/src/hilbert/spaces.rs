//! Concrete operator spaces: bases of Hom(H, K) as localized matrices,
//! endomorphism presentations and compact ideals.

use super::operator::{self, ModuleOperator};
use super::{HilbertModule, ModuleElement, ModuleError};
use crate::cat::{CatElement, CatObject, CStarCategoryPresentation, StarOp};
use crate::numerics::{ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// An orthonormalized basis (in the localized trace pairing) of a space of
/// operators between two fixed modules.
#[derive(Debug, Clone)]
pub struct OperatorSpace {
    pub domain: Arc<HilbertModule>,
    pub codomain: Arc<HilbertModule>,
    pub basis: Vec<ModuleOperator>,
}

impl OperatorSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Residual of the localized matrix of f outside this span.
    pub fn membership_residual(&self, f: &ModuleOperator) -> f64 {
        let mut r = f.localized().clone();
        for b in &self.basis {
            let c = b.localized().trace_dot(&r);
            r = r.sub_mat(&b.localized().scale(c));
        }
        r.fro_norm()
    }

    pub fn contains(&self, f: &ModuleOperator, tol: &TolerancePolicy) -> bool {
        self.membership_residual(f) <= tol.gate(f.localized().fro_norm().max(1.0)) * 100.0
    }
}

/// The space of all adjointable operators H -> K, solved as the
/// intertwiners of the right base action on the element spaces: a family of
/// linear maps T_X: H(X) -> K(X) with T_X(e . f) = (T_Y e) . f for every
/// base morphism f: X -> Y. At finite scale every such family is a bounded
/// adjointable operator.
pub fn hom_space(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    tol: &TolerancePolicy,
) -> Result<OperatorSpace, ModuleError> {
    let base = domain.base().clone();
    if !Arc::ptr_eq(&base, codomain.base()) {
        return Err(ModuleError::BaseMismatch);
    }
    let n_obj = base.objects().len();
    // Canonical bases with cached frames.
    let mut h_basis: Vec<Vec<ModuleElement>> = Vec::with_capacity(n_obj);
    let mut k_basis: Vec<Vec<ModuleElement>> = Vec::with_capacity(n_obj);
    let mut h_frames: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(n_obj);
    let mut k_frames: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(n_obj);
    for x in 0..n_obj {
        let hb = domain.canonical_basis(x, tol);
        let kb = codomain.canonical_basis(x, tol);
        h_frames.push(hb.iter().map(|e| e.localized()).collect());
        k_frames.push(kb.iter().map(|e| e.localized()).collect());
        h_basis.push(hb);
        k_basis.push(kb);
    }
    let h_dims: Vec<usize> = h_basis.iter().map(|b| b.len()).collect();
    let k_dims: Vec<usize> = k_basis.iter().map(|b| b.len()).collect();
    let block_sizes: Vec<usize> = (0..n_obj).map(|x| k_dims[x] * h_dims[x]).collect();
    let total: usize = block_sizes.iter().sum();
    if total == 0 {
        return Ok(OperatorSpace {
            domain: domain.clone(),
            codomain: codomain.clone(),
            basis: vec![],
        });
    }
    let offsets: Vec<usize> = {
        let mut o = Vec::with_capacity(n_obj);
        let mut acc = 0;
        for s in &block_sizes {
            o.push(acc);
            acc += s;
        }
        o
    };

    // Coordinates of e . f against an orthonormal frame family.
    let act_coords = |frames: &[ComplexMatrix], frame: &ComplexMatrix, f: &ComplexMatrix| -> Vec<Complex64> {
        let moved = frame.matmul(f);
        frames.iter().map(|u| u.trace_dot(&moved)).collect()
    };

    // Constraint rows: T_X A_H(f) - A_K(f) T_Y = 0 for f: X -> Y in the hom
    // bases, expressed entry-wise against the canonical bases.
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (x, y) in base.hom_pairs() {
        if (h_dims[y] == 0 && k_dims[y] == 0) || (h_dims[x] == 0 && k_dims[x] == 0) {
            continue;
        }
        for f in base.hom_basis(x, y) {
            // A_H(f): H(Y) -> H(X), columns indexed by H(Y) basis.
            let a_h: Vec<Vec<Complex64>> = h_frames[y]
                .iter()
                .map(|fr| act_coords(&h_frames[x], fr, f))
                .collect();
            let a_k: Vec<Vec<Complex64>> = k_frames[y]
                .iter()
                .map(|fr| act_coords(&k_frames[x], fr, f))
                .collect();
            // Row for each (i < k_dims[x], j < h_dims[y]):
            //   sum_l T_X[i][l] a_h[j][l] - sum_m a_k[?]... T_Y[m][j]
            for i in 0..k_dims[x] {
                for j in 0..h_dims[y] {
                    let mut row = vec![Complex64::new(0.0, 0.0); total];
                    for l in 0..h_dims[x] {
                        row[offsets[x] + i * h_dims[x] + l] += a_h[j][l];
                    }
                    for m in 0..k_dims[y] {
                        row[offsets[y] + m * h_dims[y] + j] -= a_k[m][i];
                    }
                    rows.push(row);
                }
            }
        }
    }

    let combos: Vec<Vec<Complex64>> = if rows.is_empty() {
        (0..total)
            .map(|i| {
                let mut v = vec![Complex64::new(0.0, 0.0); total];
                v[i] = Complex64::new(1.0, 0.0);
                v
            })
            .collect()
    } else {
        let mut m = ComplexMatrix::zeros(rows.len(), total);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        let null = crate::numerics::null_space(&m, tol);
        (0..null.cols()).map(|j| null.column(j)).collect()
    };

    // Materialize each solution as an operator through its generator
    // images: generator x_i at s_i expands in H(s_i), its image is the same
    // combination of T-applied basis elements.
    let mut pre_ops: Vec<ModuleOperator> = Vec::new();
    for combo in &combos {
        let mut images: Vec<ModuleElement> = Vec::with_capacity(domain.generators().len());
        for (i, g) in domain.generators().iter().enumerate() {
            let x = g.source;
            let gen_el = domain.generator_element(i);
            let gen_frame = gen_el.localized();
            // Coordinates of the generator in H(x).
            let coords: Vec<Complex64> =
                h_frames[x].iter().map(|u| u.trace_dot(&gen_frame)).collect();
            let mut img = codomain.zero_element(x);
            for (l, cl) in coords.iter().enumerate() {
                if cl.norm_sqr() == 0.0 {
                    continue;
                }
                for m in 0..k_dims[x] {
                    let t = combo[offsets[x] + m * h_dims[x] + l];
                    if t.norm_sqr() > 0.0 {
                        img = img.add(&k_basis[x][m].scale(t * cl))?;
                    }
                }
            }
            images.push(img);
        }
        pre_ops.push(operator::make_operator(domain, codomain, &images, tol)?);
    }

    // Orthonormalize in the localized picture.
    let drop = tol.eig_clip.sqrt();
    let mut kept: Vec<(ComplexMatrix, ComplexMatrix)> = Vec::new();
    for op in pre_ops {
        let mut loc = op.localized().clone();
        let mut coeff = op.coeff().clone();
        let scale = loc.fro_norm();
        if scale <= drop {
            continue;
        }
        for _ in 0..2 {
            for (bl, bc) in &kept {
                let c = bl.trace_dot(&loc);
                loc = loc.sub_mat(&bl.scale(c));
                coeff = coeff.sub_mat(&bc.scale(c));
            }
        }
        let n = loc.fro_norm();
        if n > drop * scale.max(1.0) {
            let inv = Complex64::new(1.0 / n, 0.0);
            kept.push((loc.scale(inv), coeff.scale(inv)));
        }
    }
    let mut basis = Vec::with_capacity(kept.len());
    for (_, coeff) in kept {
        basis.push(operator::from_coeff(domain.clone(), codomain.clone(), coeff, tol)?);
    }
    Ok(OperatorSpace { domain: domain.clone(), codomain: codomain.clone(), basis })
}

/// One-object presentation of End(H) on the localized space, together with
/// the operator basis matching the presented hom basis. The localized
/// representation is a faithful unital *-representation.
pub fn endomorphism_presentation(
    module: &Arc<HilbertModule>,
    tol: &TolerancePolicy,
) -> Result<(CStarCategoryPresentation, OperatorSpace), ModuleError> {
    let space = hom_space(module, module, tol)?;
    let mats: Vec<ComplexMatrix> = space.basis.iter().map(|b| b.localized().clone()).collect();
    let mut homs = BTreeMap::new();
    homs.insert((0usize, 0usize), mats);
    let pres = CStarCategoryPresentation::new(
        vec![CatObject { name: "End".into(), dim: module.rank() }],
        homs,
        true,
        StarOp::Adjoint,
        tol,
    )?;
    Ok((pres, space))
}

/// Rank-one operators between canonical bases, composed through a base
/// morphism c: theta(h) = u . (c . <v, h>).
fn factored_operators(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    through: &[CatElement],
    tol: &TolerancePolicy,
) -> Result<Vec<ModuleOperator>, ModuleError> {
    let base = domain.base().clone();
    let mut out = Vec::new();
    for c in through {
        let us = codomain.canonical_basis(c.dst, tol);
        let vs = domain.canonical_basis(c.src, tol);
        for u in &us {
            for v in &vs {
                let bra = v.coeff_matrix().adjoint().matmul(domain.gram());
                let coeff = u.coeff_matrix().matmul(&c.mat).matmul(&bra);
                out.push(operator::from_coeff(
                    domain.clone(),
                    codomain.clone(),
                    coeff,
                    tol,
                )?);
            }
        }
    }
    let _ = base;
    Ok(out)
}

/// Span of the two-sided ideal generated by operators factoring through the
/// given base morphisms, inside Hom(H, K); computed by iterated two-sided
/// multiplication with the endomorphism spaces until the span stabilizes.
pub fn factored_ideal_space(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    through: &[CatElement],
    tol: &TolerancePolicy,
) -> Result<OperatorSpace, ModuleError> {
    let seeds = factored_operators(domain, codomain, through, tol)?;
    let end_h = hom_space(domain, domain, tol)?;
    let end_k = hom_space(codomain, codomain, tol)?;

    let drop = tol.eig_clip.sqrt();
    let mut locs: Vec<ComplexMatrix> = Vec::new();
    let mut coeffs: Vec<ComplexMatrix> = Vec::new();
    let push = |loc: ComplexMatrix, coeff: ComplexMatrix, locs: &mut Vec<ComplexMatrix>, coeffs: &mut Vec<ComplexMatrix>| -> bool {
        let scale = loc.fro_norm();
        if scale <= drop {
            return false;
        }
        let mut l = loc;
        let mut co = coeff;
        for _ in 0..2 {
            for (bl, bc) in locs.iter().zip(coeffs.iter()) {
                let c = bl.trace_dot(&l);
                l = l.sub_mat(&bl.scale(c));
                co = co.sub_mat(&bc.scale(c));
            }
        }
        let n = l.fro_norm();
        if n > drop * scale.max(1.0) {
            let inv = Complex64::new(1.0 / n, 0.0);
            locs.push(l.scale(inv));
            coeffs.push(co.scale(inv));
            true
        } else {
            false
        }
    };

    for s in &seeds {
        push(s.localized().clone(), s.coeff().clone(), &mut locs, &mut coeffs);
    }
    loop {
        let mut grew = false;
        let snapshot: Vec<(ComplexMatrix, ComplexMatrix)> = locs
            .iter()
            .cloned()
            .zip(coeffs.iter().cloned())
            .collect();
        for (l, co) in &snapshot {
            for e in &end_k.basis {
                let nl = e.localized().matmul(l);
                let nc = e.coeff().matmul(co);
                if push(nl, nc, &mut locs, &mut coeffs) {
                    grew = true;
                }
            }
            for d in &end_h.basis {
                let nl = l.matmul(d.localized());
                let nc = co.matmul(d.coeff());
                if push(nl, nc, &mut locs, &mut coeffs) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }

    let mut basis = Vec::with_capacity(coeffs.len());
    for coeff in coeffs {
        basis.push(operator::from_coeff(domain.clone(), codomain.clone(), coeff, tol)?);
    }
    Ok(OperatorSpace { domain: domain.clone(), codomain: codomain.clone(), basis })
}

/// Localized matrices spanning the compact operators K(H, K), without
/// materializing module operators; used by density checks.
pub fn compact_space_locs(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    tol: &TolerancePolicy,
) -> Result<Vec<ComplexMatrix>, ModuleError> {
    let base = domain.base().clone();
    let mut locs: Vec<ComplexMatrix> = Vec::new();
    for (x, y) in base.hom_pairs() {
        let us = codomain.canonical_basis(y, tol);
        let vs = domain.canonical_basis(x, tol);
        let u_frames: Vec<ComplexMatrix> = us.iter().map(|u| u.localized()).collect();
        let v_frames: Vec<ComplexMatrix> = vs.iter().map(|v| v.localized()).collect();
        for b in base.hom_basis(x, y) {
            for uf in &u_frames {
                let ub = uf.matmul(b);
                for vf in &v_frames {
                    locs.push(ub.matmul(&vf.adjoint()));
                }
            }
        }
    }
    Ok(crate::cat::span::orthonormalize(&locs, tol.eig_clip.sqrt()))
}

/// The compact operators K(H, K): the ideal generated by the whole base.
pub fn compact_space(
    domain: &Arc<HilbertModule>,
    codomain: &Arc<HilbertModule>,
    tol: &TolerancePolicy,
) -> Result<OperatorSpace, ModuleError> {
    let base = domain.base().clone();
    let mut through = Vec::new();
    for (x, y) in base.hom_pairs() {
        for b in base.hom_basis(x, y) {
            through.push(CatElement { src: x, dst: y, mat: b.clone() });
        }
    }
    factored_ideal_space(domain, codomain, &through, tol)
}

/// Membership of f in the ideal generated by the given base morphisms; at
/// finite scale the span closure is exact, no epsilon needed.
pub fn compact_membership(
    f: &ModuleOperator,
    generating: &[CatElement],
    tol: &TolerancePolicy,
) -> Result<bool, ModuleError> {
    let space = factored_ideal_space(f.domain(), f.codomain(), generating, tol)?;
    Ok(space.contains(f, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::CStarCategoryPresentation;
    use crate::hilbert::Generator;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn module_over(
        base: &Arc<CStarCategoryPresentation>,
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
    fn yoneda_operator_space_matches_hom() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 3)]).into_shared();
        let ya = HilbertModule::yoneda(base.clone(), 0, &tol).unwrap();
        let yb = HilbertModule::yoneda(base.clone(), 1, &tol).unwrap();
        // Operators Y_A -> Y_B correspond to hom(A, B).
        let space = hom_space(&ya, &yb, &tol).unwrap();
        assert_eq!(space.dim(), base.hom_dim(0, 1));
    }

    #[test]
    fn endomorphism_presentation_is_unital() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = module_over(&base, &[0, 0], 31, &tol);
        let (pres, space) = endomorphism_presentation(&m, &tol).unwrap();
        pres.validate(&tol).unwrap();
        assert!(pres.is_unital());
        assert_eq!(pres.hom_dim(0, 0), space.dim());
    }

    #[test]
    fn full_base_ideal_is_everything() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = module_over(&base, &[0], 33, &tol);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(34);
        let images: Vec<_> = m
            .generators()
            .iter()
            .map(|g| m.random_element(&mut rng, g.source))
            .collect();
        let f = operator::make_operator(&m, &m, &images, &tol).unwrap();
        let mut generating = Vec::new();
        for (x, y) in base.hom_pairs() {
            for b in base.hom_basis(x, y) {
                generating.push(CatElement { src: x, dst: y, mat: b.clone() });
            }
        }
        assert!(compact_membership(&f, &generating, &tol).unwrap());
        // Zero generating set only contains the zero operator.
        let z = operator::zero(&m, &m, &tol).unwrap();
        assert!(compact_membership(&z, &[], &tol).unwrap());
        assert!(!compact_membership(&f, &[], &tol).unwrap());
    }

    #[test]
    fn ideal_property_under_two_sided_composition() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = module_over(&base, &[0, 0], 35, &tol);
        let unit = base.unit(0).unwrap();
        let space = factored_ideal_space(&m, &m, &[unit], &tol).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(36);
        let g_imgs: Vec<_> = m
            .generators()
            .iter()
            .map(|g| m.random_element(&mut rng, g.source))
            .collect();
        let g = operator::make_operator(&m, &m, &g_imgs, &tol).unwrap();
        for s in space.basis.iter().take(3) {
            let two_sided = g.compose(s, &tol).unwrap().compose(&g, &tol).unwrap();
            assert!(
                space.contains(&two_sided, &tol),
                "ideal not closed under two-sided composition"
            );
        }
    }
}
