//! Finite C*-category presentations: objects with representation dimensions
//! and orthonormal hom-space bases under a faithful matrix representation.

use super::span;
use crate::numerics::{self, ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatError {
    #[error("matrix of shape {got_rows}x{got_cols} does not fit hom({src}, {dst}) which needs {want_rows}x{want_cols}")]
    ShapeMismatch {
        src: String,
        dst: String,
        want_rows: usize,
        want_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("element lies outside the presented hom-space: residual {residual:.3e}")]
    NotInHomSpace { residual: f64 },
    #[error("presentation invariant violated: {0}")]
    InvalidPresentation(String),
    #[error("positivity breakdown disagrees with the main verdict: {0}; eig_clip is likely too tight")]
    InternalInconsistency(String),
    #[error("operation needs a unital presentation")]
    NotUnital,
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatObject {
    pub name: String,
    pub dim: usize,
}

/// The involution of the presentation. `Adjoint` is the conjugate transpose
/// of the representing matrix; `Coordinate` stores, per ordered object pair,
/// the matrix sending conjugated hom(X,Y) coordinates to hom(Y,X)
/// coordinates. The coordinate form exists so that Banach *-categories whose
/// involution is not inherited from the representation (and which may fail
/// positivity) can still be presented and checked.
#[derive(Debug, Clone)]
pub enum StarOp {
    Adjoint,
    Coordinate(BTreeMap<(usize, usize), ComplexMatrix>),
}

/// A morphism of the presented category: source, target and representing
/// matrix of shape dim(dst) x dim(src).
#[derive(Debug, Clone)]
pub struct CatElement {
    pub src: usize,
    pub dst: usize,
    pub mat: ComplexMatrix,
}

impl CatElement {
    pub fn norm(&self) -> f64 {
        numerics::operator_norm(&self.mat)
    }
}

#[derive(Debug, Clone)]
pub struct CStarCategoryPresentation {
    objects: Vec<CatObject>,
    /// Orthonormal basis (trace pairing) of each hom-space, keyed by
    /// (src, dst). Missing key means the zero space.
    homs: BTreeMap<(usize, usize), Vec<ComplexMatrix>>,
    unital: bool,
    /// Unit morphism per object when unital. The identity matrix for plain
    /// presentations; a projection for corner subcategories.
    units: Vec<Option<ComplexMatrix>>,
    star: StarOp,
}

impl CStarCategoryPresentation {
    pub fn new(
        objects: Vec<CatObject>,
        homs: BTreeMap<(usize, usize), Vec<ComplexMatrix>>,
        unital: bool,
        star: StarOp,
        tol: &TolerancePolicy,
    ) -> Result<Self, CatError> {
        let n = objects.len();
        let mut canon = BTreeMap::new();
        for ((x, y), mats) in homs {
            if x >= n || y >= n {
                return Err(CatError::UnknownObject(format!("hom index ({x},{y})")));
            }
            for m in &mats {
                check_shape(&objects, x, y, m)?;
            }
            let basis = span::orthonormalize(&mats, tol.eig_clip.sqrt());
            if !basis.is_empty() {
                canon.insert((x, y), basis);
            }
        }
        let mut cat = CStarCategoryPresentation {
            objects,
            homs: canon,
            unital,
            units: vec![None; n],
            star,
        };
        if unital {
            cat.solve_units(tol)?;
        }
        cat.validate(tol)?;
        Ok(cat)
    }

    /// The full matrix category on the given objects: hom(X,Y) is everything.
    pub fn full_matrix(objects: &[(&str, usize)]) -> Self {
        let objs: Vec<CatObject> = objects
            .iter()
            .map(|(n, d)| CatObject { name: n.to_string(), dim: *d })
            .collect();
        let mut homs = BTreeMap::new();
        for (x, ox) in objs.iter().enumerate() {
            for (y, oy) in objs.iter().enumerate() {
                let mut basis = Vec::with_capacity(ox.dim * oy.dim);
                for i in 0..oy.dim {
                    for j in 0..ox.dim {
                        let mut e = ComplexMatrix::zeros(oy.dim, ox.dim);
                        e[(i, j)] = Complex64::new(1.0, 0.0);
                        basis.push(e);
                    }
                }
                homs.insert((x, y), basis);
            }
        }
        let units = objs.iter().map(|o| Some(ComplexMatrix::identity(o.dim))).collect();
        CStarCategoryPresentation { objects: objs, homs, unital: true, units, star: StarOp::Adjoint }
    }

    /// The one-object category of complex numbers.
    pub fn complex_numbers() -> Self {
        Self::full_matrix(&[("pt", 1)])
    }

    /// The two-object Banach *-category with all four hom-spaces equal to the
    /// complex line, composition by multiplication, conjugation on
    /// endomorphisms and z -> -conj(z) between the two objects. Satisfies
    /// every C*-axiom but positivity.
    pub fn flip_counterexample() -> Self {
        let objs = vec![
            CatObject { name: "a".into(), dim: 1 },
            CatObject { name: "b".into(), dim: 1 },
        ];
        let one = ComplexMatrix::identity(1);
        let mut homs = BTreeMap::new();
        for x in 0..2 {
            for y in 0..2 {
                homs.insert((x, y), vec![one.clone()]);
            }
        }
        let mut star_mats = BTreeMap::new();
        let pos = ComplexMatrix::identity(1);
        let neg = pos.scale_re(-1.0);
        star_mats.insert((0usize, 0usize), pos.clone());
        star_mats.insert((1, 1), pos.clone());
        star_mats.insert((0, 1), neg.clone());
        star_mats.insert((1, 0), neg);
        CStarCategoryPresentation {
            objects: objs,
            homs,
            unital: true,
            units: vec![Some(one.clone()), Some(one)],
            star: StarOp::Coordinate(star_mats),
        }
    }

    pub fn objects(&self) -> &[CatObject] {
        &self.objects
    }

    pub fn object_index(&self, name: &str) -> Result<usize, CatError> {
        self.objects
            .iter()
            .position(|o| o.name == name)
            .ok_or_else(|| CatError::UnknownObject(name.to_string()))
    }

    pub fn dim(&self, x: usize) -> usize {
        self.objects[x].dim
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn star_op(&self) -> &StarOp {
        &self.star
    }

    /// Unit morphism of the object (unital presentations only).
    pub fn unit(&self, x: usize) -> Result<CatElement, CatError> {
        match &self.units[x] {
            Some(u) => Ok(CatElement { src: x, dst: x, mat: u.clone() }),
            None => Err(CatError::NotUnital),
        }
    }

    pub fn hom_basis(&self, x: usize, y: usize) -> &[ComplexMatrix] {
        self.homs.get(&(x, y)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn hom_dim(&self, x: usize, y: usize) -> usize {
        self.hom_basis(x, y).len()
    }

    pub fn hom_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.homs.keys().copied()
    }

    pub fn element(&self, x: usize, y: usize, mat: ComplexMatrix) -> Result<CatElement, CatError> {
        check_shape(&self.objects, x, y, &mat)?;
        Ok(CatElement { src: x, dst: y, mat })
    }

    /// Membership check: the part of the matrix outside the hom-span must be
    /// below the gate.
    pub fn check_membership(
        &self,
        el: &CatElement,
        tol: &TolerancePolicy,
    ) -> Result<(), CatError> {
        let residual =
            span::membership_residual(self.hom_basis(el.src, el.dst), &el.mat);
        if residual > tol.gate(el.mat.fro_norm()) * 10.0 {
            return Err(CatError::NotInHomSpace { residual });
        }
        Ok(())
    }

    pub fn compose(&self, g: &CatElement, f: &CatElement) -> Result<CatElement, CatError> {
        if f.dst != g.src {
            return Err(CatError::InvalidPresentation(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.objects[g.src].name,
                self.objects[g.dst].name,
                self.objects[f.src].name,
                self.objects[f.dst].name
            )));
        }
        Ok(CatElement { src: f.src, dst: g.dst, mat: g.mat.matmul(&f.mat) })
    }

    pub fn star(&self, el: &CatElement) -> CatElement {
        match &self.star {
            StarOp::Adjoint => CatElement { src: el.dst, dst: el.src, mat: el.mat.adjoint() },
            StarOp::Coordinate(maps) => {
                let basis = self.hom_basis(el.src, el.dst);
                let target = self.hom_basis(el.dst, el.src);
                let c = span::coords(basis, &el.mat);
                let conj: Vec<Complex64> = c.iter().map(|z| z.conj()).collect();
                let s = maps
                    .get(&(el.src, el.dst))
                    .expect("coordinate star must cover every presented hom pair");
                let out = s.apply(&conj);
                CatElement {
                    src: el.dst,
                    dst: el.src,
                    mat: span::from_coords(
                        target,
                        &out,
                        self.dim(el.src),
                        self.dim(el.dst),
                    ),
                }
            }
        }
    }

    pub fn random_element(
        &self,
        rng: &mut impl Rng,
        x: usize,
        y: usize,
    ) -> Option<CatElement> {
        let basis = self.hom_basis(x, y);
        if basis.is_empty() {
            return None;
        }
        let mut mat = ComplexMatrix::zeros(self.dim(y), self.dim(x));
        for b in basis {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            mat = mat.add_mat(&b.scale(c));
        }
        Some(CatElement { src: x, dst: y, mat })
    }

    pub fn random_self_adjoint(
        &self,
        rng: &mut impl Rng,
        x: usize,
    ) -> Option<CatElement> {
        let el = self.random_element(rng, x, x)?;
        let st = self.star(&el);
        Some(CatElement { src: x, dst: x, mat: el.mat.add_mat(&st.mat).scale_re(0.5) })
    }

    /// Solve for per-object unit elements inside the hom-spans.
    fn solve_units(&mut self, tol: &TolerancePolicy) -> Result<(), CatError> {
        for x in 0..self.objects.len() {
            let basis = self.hom_basis(x, x);
            if basis.is_empty() {
                return Err(CatError::InvalidPresentation(format!(
                    "unital presentation lacks endomorphisms on `{}`",
                    self.objects[x].name
                )));
            }
            // A unit must act as identity on every basis element; in a
            // represented, composition-closed span the candidate is the
            // projection of the identity matrix onto the span, which we then
            // verify.
            let id = ComplexMatrix::identity(self.dim(x));
            let cand = span::project(basis, &id);
            let mut ok = true;
            for (s, d) in self.homs.keys().copied().collect::<Vec<_>>() {
                if s == x {
                    for b in self.hom_basis(s, d) {
                        if b.matmul(&cand).sub_mat(b).fro_norm() > tol.gate(1.0) * 100.0 {
                            ok = false;
                        }
                    }
                }
                if d == x {
                    for b in self.hom_basis(s, d) {
                        if cand.matmul(b).sub_mat(b).fro_norm() > tol.gate(1.0) * 100.0 {
                            ok = false;
                        }
                    }
                }
            }
            if !ok {
                return Err(CatError::InvalidPresentation(format!(
                    "no unit element exists in C({0},{0})",
                    self.objects[x].name
                )));
            }
            self.units[x] = Some(cand);
        }
        Ok(())
    }

    /// Check the presentation invariants: orthonormality, adjoint closure,
    /// composition closure, units, and involution laws for coordinate stars.
    pub fn validate(&self, tol: &TolerancePolicy) -> Result<(), CatError> {
        let gate = tol.gate(1.0) * 100.0;
        for ((x, y), basis) in &self.homs {
            for (i, a) in basis.iter().enumerate() {
                for (j, b) in basis.iter().enumerate() {
                    let d = a.trace_dot(b);
                    let want = if i == j { 1.0 } else { 0.0 };
                    if (d - Complex64::new(want, 0.0)).norm() > gate {
                        return Err(CatError::InvalidPresentation(format!(
                            "hom({x},{y}) basis not orthonormal"
                        )));
                    }
                }
            }
            // Adjoint closure.
            for b in basis {
                let st = self.star(&CatElement { src: *x, dst: *y, mat: b.clone() });
                let r = span::membership_residual(self.hom_basis(*y, *x), &st.mat);
                if r > gate {
                    return Err(CatError::InvalidPresentation(format!(
                        "hom({x},{y}) is not closed under the involution (residual {r:.2e})"
                    )));
                }
            }
        }
        // Composition closure.
        let keys: Vec<(usize, usize)> = self.homs.keys().copied().collect();
        for &(x, y) in &keys {
            for &(y2, z) in &keys {
                if y2 != y {
                    continue;
                }
                for f in self.hom_basis(x, y) {
                    for g in self.hom_basis(y, z) {
                        let comp = g.matmul(f);
                        let r = span::membership_residual(self.hom_basis(x, z), &comp);
                        if r > gate * comp.fro_norm().max(1.0) {
                            return Err(CatError::InvalidPresentation(format!(
                                "composition hom({y},{z}) . hom({x},{y}) escapes hom({x},{z})"
                            )));
                        }
                    }
                }
            }
        }
        if let StarOp::Coordinate(_) = &self.star {
            // Involution and anti-multiplicativity on basis elements.
            for ((x, y), basis) in &self.homs {
                for b in basis {
                    let el = CatElement { src: *x, dst: *y, mat: b.clone() };
                    let back = self.star(&self.star(&el));
                    if back.mat.sub_mat(&el.mat).fro_norm() > gate {
                        return Err(CatError::InvalidPresentation(
                            "coordinate star is not an involution".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Shared handle for modules built over this base.
    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

fn check_shape(
    objects: &[CatObject],
    x: usize,
    y: usize,
    m: &ComplexMatrix,
) -> Result<(), CatError> {
    if m.rows() != objects[y].dim || m.cols() != objects[x].dim {
        return Err(CatError::ShapeMismatch {
            src: objects[x].name.clone(),
            dst: objects[y].name.clone(),
            want_rows: objects[y].dim,
            want_cols: objects[x].dim,
            got_rows: m.rows(),
            got_cols: m.cols(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_matrix_category_is_valid() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 3)]);
        cat.validate(&tol).unwrap();
        assert_eq!(cat.hom_dim(0, 1), 6);
        assert_eq!(cat.hom_dim(0, 0), 4);
        let u = cat.unit(0).unwrap();
        assert!(u.mat.sub_mat(&ComplexMatrix::identity(2)).fro_norm() < 1e-12);
    }

    #[test]
    fn flip_counterexample_star_is_involutive() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::flip_counterexample();
        cat.validate(&tol).unwrap();
        let f = cat
            .element(0, 1, ComplexMatrix::diag(&[Complex64::new(2.0, 1.0)]))
            .unwrap();
        let st = cat.star(&f);
        // z -> -conj(z)
        assert!((st.mat[(0, 0)] - Complex64::new(-2.0, 1.0)).norm() < 1e-12);
        let back = cat.star(&st);
        assert!(back.mat.sub_mat(&f.mat).fro_norm() < 1e-12);
    }

    #[test]
    fn composition_through_elements() {
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 2)]);
        let f = cat.element(0, 1, ComplexMatrix::identity(2)).unwrap();
        let g = cat.element(1, 0, ComplexMatrix::identity(2).scale_re(3.0)).unwrap();
        let gf = cat.compose(&g, &f).unwrap();
        assert_eq!((gf.src, gf.dst), (0, 0));
        assert!((gf.norm() - 3.0).abs() < 1e-12);
        assert!(cat.compose(&f, &f).is_err());
    }
}
