//! Matrix amplification M(A_1, ..., A_n): block matrices with (i,j) block in
//! hom(A_j, A_i), presented as a one-object algebra.

use super::presentation::{CatError, CatObject, CStarCategoryPresentation, StarOp};
use super::span;
use crate::numerics::{ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Block layout of M(A_1..A_n): offsets of each object's slot in the total
/// representation space.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub objects: Vec<usize>,
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl BlockLayout {
    pub fn new(cat: &CStarCategoryPresentation, objects: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(objects.len());
        let mut total = 0;
        for &o in objects {
            offsets.push(total);
            total += cat.dim(o);
        }
        BlockLayout { objects: objects.to_vec(), offsets, total }
    }

    pub fn slot(&self, i: usize, cat: &CStarCategoryPresentation) -> (usize, usize) {
        (self.offsets[i], cat.dim(self.objects[i]))
    }

    /// Assemble a block matrix from blocks[i][j] in hom(A_j, A_i).
    pub fn assemble(
        &self,
        blocks: &[Vec<ComplexMatrix>],
    ) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.total, self.total);
        for i in 0..self.objects.len() {
            for j in 0..self.objects.len() {
                m.set_block(self.offsets[i], self.offsets[j], &blocks[i][j]);
            }
        }
        m
    }

    pub fn extract(
        &self,
        cat: &CStarCategoryPresentation,
        m: &ComplexMatrix,
        i: usize,
        j: usize,
    ) -> ComplexMatrix {
        m.block(
            self.offsets[i],
            self.offsets[j],
            cat.dim(self.objects[i]),
            cat.dim(self.objects[j]),
        )
    }
}

/// One-object presentation of the C*-algebra of block matrices over the
/// chosen objects. Element positivity in the result agrees with the
/// column-vector criterion: t* M t positive for all tuples t of morphisms
/// into the A_i.
pub fn matrix_algebra(
    cat: &CStarCategoryPresentation,
    objects: &[usize],
    tol: &TolerancePolicy,
) -> Result<(CStarCategoryPresentation, BlockLayout), CatError> {
    for &o in objects {
        if o >= cat.objects().len() {
            return Err(CatError::UnknownObject(format!("object index {o}")));
        }
    }
    let layout = BlockLayout::new(cat, objects);
    let name = format!(
        "M({})",
        objects
            .iter()
            .map(|&o| cat.objects()[o].name.clone())
            .collect::<Vec<_>>()
            .join(",")
    );

    let mut basis: Vec<ComplexMatrix> = Vec::new();
    // Track provenance of each basis element for the coordinate star.
    let mut provenance: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..objects.len() {
        for j in 0..objects.len() {
            let hom = cat.hom_basis(objects[j], objects[i]);
            for (k, b) in hom.iter().enumerate() {
                let mut m = ComplexMatrix::zeros(layout.total, layout.total);
                m.set_block(layout.offsets[i], layout.offsets[j], b);
                basis.push(m);
                provenance.push((i, j, k));
            }
        }
    }

    let star = match cat.star_op() {
        StarOp::Adjoint => StarOp::Adjoint,
        StarOp::Coordinate(_) => {
            // The block star sends the (i,j) block through the base star into
            // the (j,i) slot; expand each starred basis element back in the
            // block basis to get the coordinate matrix.
            let k = basis.len();
            let mut s = ComplexMatrix::zeros(k, k);
            for (col, (i, j, bk)) in provenance.iter().enumerate() {
                let b = &cat.hom_basis(objects[*j], objects[*i])[*bk];
                let el = cat
                    .element(objects[*j], objects[*i], b.clone())
                    .expect("basis shape");
                let starred = cat.star(&el);
                let mut m = ComplexMatrix::zeros(layout.total, layout.total);
                m.set_block(layout.offsets[*j], layout.offsets[*i], &starred.mat);
                let coords = span::coords(&basis, &m);
                for (row, c) in coords.iter().enumerate() {
                    s[(row, col)] = *c;
                }
            }
            let mut maps = BTreeMap::new();
            maps.insert((0usize, 0usize), s);
            StarOp::Coordinate(maps)
        }
    };

    let mut homs = BTreeMap::new();
    homs.insert((0usize, 0usize), basis);
    let objs = vec![CatObject { name, dim: layout.total }];
    let pres = CStarCategoryPresentation::new(objs, homs, cat.is_unital(), star, tol)?;
    Ok((pres, layout))
}

/// Column-tuple positivity criterion for a self-adjoint block matrix: sweep
/// t* M t over a spanning set of column tuples and check each result is PSD
/// in the endomorphism algebra of the source object. Returns the most
/// negative eigenvalue seen (>= 0 means positive).
pub fn column_criterion_min(
    cat: &CStarCategoryPresentation,
    layout: &BlockLayout,
    m: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> f64 {
    let mut min_eig = f64::INFINITY;
    let k = layout.objects.len();
    for x in 0..cat.objects().len() {
        // Spanning tuples: single basis morphisms in each slot, plus paired
        // combinations to cover cross terms.
        let mut tuples: Vec<Vec<ComplexMatrix>> = Vec::new();
        for i in 0..k {
            for b in cat.hom_basis(x, layout.objects[i]) {
                let mut t: Vec<ComplexMatrix> =
                    (0..k).map(|j| ComplexMatrix::zeros(cat.dim(layout.objects[j]), cat.dim(x))).collect();
                t[i] = b.clone();
                tuples.push(t);
            }
        }
        let singles = tuples.clone();
        for (a_idx, a) in singles.iter().enumerate() {
            for b in singles.iter().skip(a_idx + 1) {
                let mut sum: Vec<ComplexMatrix> = Vec::with_capacity(k);
                let mut sum_i: Vec<ComplexMatrix> = Vec::with_capacity(k);
                for j in 0..k {
                    sum.push(a[j].add_mat(&b[j]));
                    sum_i.push(a[j].add_mat(&b[j].scale(Complex64::new(0.0, 1.0))));
                }
                tuples.push(sum);
                tuples.push(sum_i);
            }
        }
        for t in &tuples {
            // t as a tall block column: total x dim(x).
            let mut col = ComplexMatrix::zeros(layout.total, cat.dim(x));
            for (i, ti) in t.iter().enumerate() {
                col.set_block(layout.offsets[i], 0, ti);
            }
            let q = col.adjoint().matmul(m).matmul(&col);
            let me = crate::numerics::min_eigenvalue(&q);
            min_eig = min_eig.min(me);
        }
    }
    let _ = tol;
    if min_eig == f64::INFINITY {
        0.0
    } else {
        min_eig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics;
    use rand::SeedableRng;

    #[test]
    fn single_object_is_endomorphism_algebra() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2)]);
        let (alg, layout) = matrix_algebra(&cat, &[0], &tol).unwrap();
        assert_eq!(alg.hom_dim(0, 0), 4);
        assert_eq!(layout.total, 2);
    }

    #[test]
    fn two_lines_give_m2() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 1), ("B", 1)]);
        let (alg, layout) = matrix_algebra(&cat, &[0, 1], &tol).unwrap();
        assert_eq!(layout.total, 2);
        assert_eq!(alg.hom_dim(0, 0), 4);
    }

    #[test]
    fn column_criterion_matches_psd() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 1)]);
        let (_, layout) = matrix_algebra(&cat, &[0, 1], &tol).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let x = ComplexMatrix::from_fn(3, 3, |_, _| {
                use rand::Rng;
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let m = if trial % 2 == 0 {
                x.adjoint().matmul(&x)
            } else {
                x.hermitize()
            };
            let psd = numerics::is_psd(&m, &tol);
            let min = column_criterion_min(&cat, &layout, &m, &tol);
            let scale = numerics::operator_norm(&m).max(1.0);
            assert_eq!(
                psd,
                min >= -1e-7 * scale,
                "column criterion disagrees: psd={psd}, min={min}"
            );
        }
    }
}
