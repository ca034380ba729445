//! *-functors between presentations, given by an object map and linear maps
//! on hom-space coordinates.

use super::presentation::{CatElement, CatError, CStarCategoryPresentation};
use super::span;
use crate::numerics::{ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// A functor F: C -> D presented on the hom bases: `hom_maps[(x,y)]` sends
/// hom_C(x,y) coordinates to hom_D(Fx,Fy) coordinates.
#[derive(Debug, Clone)]
pub struct StarFunctor {
    pub object_map: Vec<usize>,
    pub hom_maps: BTreeMap<(usize, usize), ComplexMatrix>,
}

impl StarFunctor {
    pub fn apply(
        &self,
        src: &CStarCategoryPresentation,
        dst: &CStarCategoryPresentation,
        el: &CatElement,
    ) -> Result<CatElement, CatError> {
        let key = (el.src, el.dst);
        let coords = span::coords(src.hom_basis(el.src, el.dst), &el.mat);
        let fx = self.object_map[el.src];
        let fy = self.object_map[el.dst];
        let out = match self.hom_maps.get(&key) {
            Some(m) => m.apply(&coords),
            None => vec![],
        };
        let mat = span::from_coords(dst.hom_basis(fx, fy), &out, dst.dim(fy), dst.dim(fx));
        dst.element(fx, fy, mat)
    }

    /// Check functoriality: compatibility with composition and the
    /// involution on all basis pairs, unit preservation when both ends are
    /// unital.
    pub fn validate(
        &self,
        src: &CStarCategoryPresentation,
        dst: &CStarCategoryPresentation,
        tol: &TolerancePolicy,
    ) -> Result<(), CatError> {
        let gate = tol.gate(1.0) * 100.0;
        let pairs: Vec<(usize, usize)> = src.hom_pairs().collect();
        for &(x, y) in &pairs {
            for b in src.hom_basis(x, y) {
                let el = CatElement { src: x, dst: y, mat: b.clone() };
                let lhs = self.apply(src, dst, &src.star(&el))?;
                let rhs = dst.star(&self.apply(src, dst, &el)?);
                if lhs.mat.sub_mat(&rhs.mat).fro_norm() > gate {
                    return Err(CatError::InvalidPresentation(format!(
                        "functor does not intertwine the involution on hom({x},{y})"
                    )));
                }
            }
        }
        for &(x, y) in &pairs {
            for &(y2, z) in &pairs {
                if y2 != y {
                    continue;
                }
                for f in src.hom_basis(x, y) {
                    for g in src.hom_basis(y, z) {
                        let fe = CatElement { src: x, dst: y, mat: f.clone() };
                        let ge = CatElement { src: y, dst: z, mat: g.clone() };
                        let comp = src.compose(&ge, &fe)?;
                        let lhs = self.apply(src, dst, &comp)?;
                        let rhs =
                            dst.compose(&self.apply(src, dst, &ge)?, &self.apply(src, dst, &fe)?)?;
                        if lhs.mat.sub_mat(&rhs.mat).fro_norm() > gate * rhs.mat.fro_norm().max(1.0)
                        {
                            return Err(CatError::InvalidPresentation(format!(
                                "functor breaks composition on hom({x},{y}) . hom({y},{z})"
                            )));
                        }
                    }
                }
            }
        }
        if src.is_unital() && dst.is_unital() {
            for x in 0..src.objects().len() {
                let u = src.unit(x)?;
                let fu = self.apply(src, dst, &u)?;
                let du = dst.unit(self.object_map[x])?;
                if fu.mat.sub_mat(&du.mat).fro_norm() > gate {
                    return Err(CatError::InvalidPresentation(format!(
                        "functor does not preserve the unit of object {x}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Conjugation by unitaries: F(m) = u_dst m u_src^*. Injective and
    /// norm-preserving; source and target share objects and dimensions.
    pub fn conjugation(
        cat: &CStarCategoryPresentation,
        target: &CStarCategoryPresentation,
        unitaries: &[ComplexMatrix],
    ) -> Self {
        let mut hom_maps = BTreeMap::new();
        for (x, y) in cat.hom_pairs() {
            let src_basis = cat.hom_basis(x, y);
            let tgt_basis = target.hom_basis(x, y);
            let mut m = ComplexMatrix::zeros(tgt_basis.len(), src_basis.len());
            for (col, b) in src_basis.iter().enumerate() {
                let img = unitaries[y].matmul(b).matmul(&unitaries[x].adjoint());
                for (row, c) in span::coords(tgt_basis, &img).iter().enumerate() {
                    m[(row, col)] = *c;
                }
            }
            hom_maps.insert((x, y), m);
        }
        StarFunctor { object_map: (0..cat.objects().len()).collect(), hom_maps }
    }

    /// Inclusion of a presentation whose hom-spans are subspaces of another
    /// presentation on the same objects and dimensions.
    pub fn inclusion(
        sub: &CStarCategoryPresentation,
        ambient: &CStarCategoryPresentation,
    ) -> Self {
        let mut hom_maps = BTreeMap::new();
        for (x, y) in sub.hom_pairs() {
            let src_basis = sub.hom_basis(x, y);
            let tgt_basis = ambient.hom_basis(x, y);
            let mut m = ComplexMatrix::zeros(tgt_basis.len(), src_basis.len());
            for (col, b) in src_basis.iter().enumerate() {
                for (row, c) in span::coords(tgt_basis, b).iter().enumerate() {
                    m[(row, col)] = *c;
                }
            }
            hom_maps.insert((x, y), m);
        }
        StarFunctor { object_map: (0..sub.objects().len()).collect(), hom_maps }
    }
}

/// Direct-sum presentation of two copies of a category (block-diagonal
/// representation) together with the two projection functors onto the
/// factors. The projections are surjective non-injective *-functors; the
/// diagonal functor into it is injective.
pub fn doubled_category(
    cat: &CStarCategoryPresentation,
    tol: &TolerancePolicy,
) -> Result<(CStarCategoryPresentation, StarFunctor, StarFunctor), CatError> {
    use super::presentation::{CatObject, StarOp};
    let objs: Vec<CatObject> = cat
        .objects()
        .iter()
        .map(|o| CatObject { name: format!("{}+{}", o.name, o.name), dim: o.dim * 2 })
        .collect();
    let mut homs = BTreeMap::new();
    for (x, y) in cat.hom_pairs() {
        let (dx, dy) = (cat.dim(x), cat.dim(y));
        let mut basis = Vec::new();
        for b in cat.hom_basis(x, y) {
            let mut top = ComplexMatrix::zeros(2 * dy, 2 * dx);
            top.set_block(0, 0, b);
            basis.push(top);
            let mut bot = ComplexMatrix::zeros(2 * dy, 2 * dx);
            bot.set_block(dy, dx, b);
            basis.push(bot);
        }
        homs.insert((x, y), basis);
    }
    let doubled =
        CStarCategoryPresentation::new(objs, homs, cat.is_unital(), StarOp::Adjoint, tol)?;

    let mut proj_first = BTreeMap::new();
    let mut proj_second = BTreeMap::new();
    for (x, y) in doubled.hom_pairs() {
        let src_basis = doubled.hom_basis(x, y);
        let tgt_basis = cat.hom_basis(x, y);
        let (dx, dy) = (cat.dim(x), cat.dim(y));
        let mut m1 = ComplexMatrix::zeros(tgt_basis.len(), src_basis.len());
        let mut m2 = ComplexMatrix::zeros(tgt_basis.len(), src_basis.len());
        for (col, b) in src_basis.iter().enumerate() {
            let first = b.block(0, 0, dy, dx);
            let second = b.block(dy, dx, dy, dx);
            for (row, c) in span::coords(tgt_basis, &first).iter().enumerate() {
                m1[(row, col)] = *c;
            }
            for (row, c) in span::coords(tgt_basis, &second).iter().enumerate() {
                m2[(row, col)] = *c;
            }
        }
        proj_first.insert((x, y), m1);
        proj_second.insert((x, y), m2);
    }
    let n = cat.objects().len();
    Ok((
        doubled,
        StarFunctor { object_map: (0..n).collect(), hom_maps: proj_first },
        StarFunctor { object_map: (0..n).collect(), hom_maps: proj_second },
    ))
}

/// Left regular representation of the unital endomorphism algebra C(x) on
/// its own hom-space (with the trace inner product): a faithful unital
/// *-representation that is independent of the presenting representation.
/// Returns the representing matrix of `el` in that representation.
pub fn left_regular_matrix(
    cat: &CStarCategoryPresentation,
    el: &CatElement,
) -> ComplexMatrix {
    assert_eq!(el.src, el.dst);
    let basis = cat.hom_basis(el.src, el.src);
    let k = basis.len();
    let mut m = ComplexMatrix::zeros(k, k);
    for (col, b) in basis.iter().enumerate() {
        let prod = el.mat.matmul(b);
        for (row, c) in span::coords(basis, &prod).iter().enumerate() {
            m[(row, col)] = *c;
        }
    }
    let _ = Complex64::new(0.0, 0.0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics;
    use rand::SeedableRng;

    fn haar_like_unitary(n: usize, seed: u64) -> ComplexMatrix {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = g.adjoint().matmul(&g);
        let tol = TolerancePolicy::default();
        let inv_sqrt = numerics::functional_calculus(
            &h,
            &crate::numerics::SpectralFn::new(&|t| if t > 0.0 { Some(1.0 / t.sqrt()) } else { None }, 1.0),
            &tol,
        )
        .unwrap();
        g.matmul(&inv_sqrt)
    }

    #[test]
    fn conjugation_is_isometric_functor() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 3)]);
        let us = vec![haar_like_unitary(2, 1), haar_like_unitary(3, 2)];
        let f = StarFunctor::conjugation(&cat, &cat, &us);
        f.validate(&cat, &cat, &tol).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let el = cat.random_element(&mut rng, 0, 1).unwrap();
            let img = f.apply(&cat, &cat, &el).unwrap();
            assert!((img.norm() - el.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_functor_contracts() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2)]);
        let (doubled, p1, _) = doubled_category(&cat, &tol).unwrap();
        p1.validate(&doubled, &cat, &tol).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut strict = false;
        for _ in 0..10 {
            let el = doubled.random_element(&mut rng, 0, 0).unwrap();
            let img = p1.apply(&doubled, &cat, &el).unwrap();
            assert!(img.norm() <= el.norm() + 1e-9);
            if img.norm() < el.norm() - 1e-6 {
                strict = true;
            }
        }
        assert!(strict, "projection never contracted strictly");
    }

    #[test]
    fn left_regular_is_multiplicative() {
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = cat.random_element(&mut rng, 0, 0).unwrap();
        let b = cat.random_element(&mut rng, 0, 0).unwrap();
        let ab = cat.compose(&a, &b).unwrap();
        let la = left_regular_matrix(&cat, &a);
        let lb = left_regular_matrix(&cat, &b);
        let lab = left_regular_matrix(&cat, &ab);
        assert!(la.matmul(&lb).sub_mat(&lab).fro_norm() < 1e-10);
    }
}
