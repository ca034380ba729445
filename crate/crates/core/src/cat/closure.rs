//! Smallest *-closed, composition-closed span containing a generating set.

use super::presentation::{CatError, CatObject, CStarCategoryPresentation, StarOp};
use crate::numerics::{ComplexMatrix, TolerancePolicy};
use std::collections::BTreeMap;

/// Build the presentation generated by the given spanning matrices. Keys of
/// `spanning` are (src, dst) object indices. When `unital` is set the
/// identity matrices are adjoined. The result contains the inputs, is closed
/// under the adjoint, composition and linear span, and running the closure
/// again changes nothing; it terminates because every hom-space dimension is
/// bounded by dim(dst) * dim(src).
pub fn star_closure(
    objects: Vec<CatObject>,
    spanning: BTreeMap<(usize, usize), Vec<ComplexMatrix>>,
    unital: bool,
    tol: &TolerancePolicy,
) -> Result<CStarCategoryPresentation, CatError> {
    let n = objects.len();
    let drop = tol.eig_clip.sqrt();
    let mut homs: BTreeMap<(usize, usize), Vec<ComplexMatrix>> = BTreeMap::new();

    let mut seed: Vec<((usize, usize), ComplexMatrix)> = Vec::new();
    for ((x, y), mats) in spanning {
        if x >= n || y >= n {
            return Err(CatError::UnknownObject(format!("({x},{y})")));
        }
        for m in mats {
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
            seed.push(((x, y), m));
        }
    }
    if unital {
        for (x, o) in objects.iter().enumerate() {
            seed.push(((x, x), ComplexMatrix::identity(o.dim)));
        }
    }

    let insert = |homs: &mut BTreeMap<(usize, usize), Vec<ComplexMatrix>>,
                      key: (usize, usize),
                      m: &ComplexMatrix|
     -> bool {
        let basis = homs.entry(key).or_default();
        let scale = m.fro_norm();
        if scale <= drop {
            return false;
        }
        let mut r = m.clone();
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.trace_dot(&r);
                r = r.sub_mat(&b.scale(c));
            }
        }
        let rn = r.fro_norm();
        if rn > drop * scale.max(1.0) {
            basis.push(r.scale_re(1.0 / rn));
            true
        } else {
            false
        }
    };

    for (key, m) in &seed {
        insert(&mut homs, *key, m);
    }

    // Saturate under adjoints and composition.
    loop {
        let mut grew = false;
        let keys: Vec<(usize, usize)> = homs.keys().copied().collect();
        for &(x, y) in &keys {
            let mats: Vec<ComplexMatrix> = homs[&(x, y)].clone();
            for m in &mats {
                if insert(&mut homs, (y, x), &m.adjoint()) {
                    grew = true;
                }
            }
        }
        let keys: Vec<(usize, usize)> = homs.keys().copied().collect();
        for &(x, y) in &keys {
            for &(y2, z) in &keys {
                if y2 != y {
                    continue;
                }
                let left: Vec<ComplexMatrix> = homs[&(y, z)].clone();
                let right: Vec<ComplexMatrix> = homs[&(x, y)].clone();
                for g in &left {
                    for f in &right {
                        if insert(&mut homs, (x, z), &g.matmul(f)) {
                            grew = true;
                        }
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }

    CStarCategoryPresentation::new(objects, homs, unital, StarOp::Adjoint, tol)
}

/// Convenience: a one-object algebra presentation generated by matrices.
pub fn algebra_closure(
    name: &str,
    dim: usize,
    generators: &[ComplexMatrix],
    unital: bool,
    tol: &TolerancePolicy,
) -> Result<CStarCategoryPresentation, CatError> {
    let mut spanning = BTreeMap::new();
    spanning.insert((0usize, 0usize), generators.to_vec());
    star_closure(
        vec![CatObject { name: name.to_string(), dim }],
        spanning,
        unital,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::span;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empty_unital_span_gives_scalars() {
        let tol = TolerancePolicy::default();
        let cat = star_closure(
            vec![CatObject { name: "A".into(), dim: 2 }],
            BTreeMap::new(),
            true,
            &tol,
        )
        .unwrap();
        assert_eq!(cat.hom_dim(0, 0), 1);
    }

    #[test]
    fn nilpotent_generator_fills_m2() {
        let tol = TolerancePolicy::default();
        let gen = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        let cat = algebra_closure("A", 2, &[gen], true, &tol).unwrap();
        assert_eq!(cat.hom_dim(0, 0), 4);
    }

    #[test]
    fn closure_is_idempotent() {
        let tol = TolerancePolicy::default();
        let gen = ComplexMatrix::from_rows(&[
            vec![c(0.3, 0.1), c(1.0, -0.4)],
            vec![c(0.0, 0.2), c(-0.5, 0.0)],
        ]);
        let cat = algebra_closure("A", 2, &[gen], true, &tol).unwrap();
        let again = star_closure(
            cat.objects().to_vec(),
            cat.hom_pairs()
                .map(|k| (k, cat.hom_basis(k.0, k.1).to_vec()))
                .collect(),
            true,
            &tol,
        )
        .unwrap();
        for (x, y) in cat.hom_pairs() {
            assert_eq!(cat.hom_dim(x, y), again.hom_dim(x, y));
            let d = span::span_distance(
                cat.hom_basis(x, y),
                again.hom_basis(x, y),
                tol.eig_clip,
            );
            assert!(d < 1e-9, "span moved by {d}");
        }
    }
}
