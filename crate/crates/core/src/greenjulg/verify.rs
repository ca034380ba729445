//! The bundle/module equivalence verifier: functoriality, isometry,
//! round-trip unitaries, essential surjectivity by block accounting and
//! weak-density transfer, on seeded random samples.

use super::bundle::{intertwiner_space, EquivariantBundle, EquivariantMap};
use super::groupoid::FiniteGroupoid;
use super::{
    bundle_to_module, groupoid_algebra, map_to_operator, module_to_bundle, wedderburn_data,
    CrossedProduct, GreenJulgError, GroupoidAlgebra,
};
use crate::hereditary;
use crate::hilbert::{operator, spaces, HilbertModule, ModuleOperator};
use crate::numerics::{self, ComplexMatrix, SpectralFn, TolerancePolicy};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

/// One verification family: trials attempted, failures, and the worst
/// residual observed.
#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_residual: f64,
}

impl CheckRecord {
    fn new(name: &str) -> Self {
        CheckRecord { name: name.into(), trials: 0, failures: 0, worst_residual: 0.0 }
    }

    fn record(&mut self, residual: f64, gate: f64) {
        self.trials += 1;
        self.worst_residual = self.worst_residual.max(residual);
        if residual > gate {
            self.failures += 1;
        }
    }

    fn fail(&mut self, detail_residual: f64) {
        self.trials += 1;
        self.failures += 1;
        self.worst_residual = self.worst_residual.max(detail_residual);
    }
}

#[derive(Debug, Clone)]
pub struct GreenJulgReport {
    pub groupoid: String,
    pub checks: Vec<CheckRecord>,
    pub blocks_algebra: Vec<usize>,
    pub blocks_crossed: Vec<usize>,
    pub pass: bool,
}

fn haar_unitary(n: usize, rng: &mut impl Rng, tol: &TolerancePolicy) -> ComplexMatrix {
    if n == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = g.adjoint().matmul(&g);
    let inv_sqrt = numerics::functional_calculus(
        &h,
        &SpectralFn::new(&|t| if t > 1e-12 { Some(1.0 / t.sqrt()) } else { None }, 1.0),
        tol,
    )
    .expect("generic Gram is invertible");
    g.matmul(&inv_sqrt)
}

/// A random bundle: direct sum of representables with small multiplicities,
/// conjugated fiberwise by random unitaries.
pub fn random_bundle(
    groupoid: &FiniteGroupoid,
    rng: &mut impl Rng,
    tol: &TolerancePolicy,
) -> EquivariantBundle {
    let mut b = EquivariantBundle::representable(groupoid, rng.gen_range(0..groupoid.objects.len()))
        .expect("object in range");
    if rng.gen_bool(0.5) {
        let extra =
            EquivariantBundle::representable(groupoid, rng.gen_range(0..groupoid.objects.len()))
                .expect("object in range");
        b = b.direct_sum(&extra, groupoid);
    }
    let unitaries: Vec<ComplexMatrix> =
        b.fibers.iter().map(|&d| haar_unitary(d, rng, tol)).collect();
    b.conjugate(groupoid, &unitaries)
}

/// Multiplicity signature of a module over the groupoid algebra: for each
/// Wedderburn block, the rank of the right action of its central projection
/// on the element space divided by the block rank.
fn block_signature(
    _alg: &GroupoidAlgebra,
    m: &Arc<HilbertModule>,
    centrals: &[ComplexMatrix],
    blocks: &[usize],
    tol: &TolerancePolicy,
) -> Vec<usize> {
    let basis = m.canonical_basis(0, tol);
    let mut signature = Vec::with_capacity(centrals.len());
    for (p, ideal_dim) in centrals.iter().zip(blocks.iter()) {
        let n_k = (*ideal_dim as f64).sqrt().round() as usize;
        let cut: Vec<ComplexMatrix> = basis
            .iter()
            .map(|e| {
                e.act(&crate::cat::CatElement { src: 0, dst: 0, mat: p.clone() })
                    .expect("central coefficient")
                    .localized()
            })
            .collect();
        let rank = crate::cat::span::orthonormalize(&cut, tol.eig_clip.sqrt()).len();
        signature.push(rank / n_k.max(1));
    }
    signature
}

/// Polar unitary of a generic invertible operator; None when the input is
/// too singular to normalize.
fn polar_unitary(
    w: &ModuleOperator,
    tol: &TolerancePolicy,
) -> Option<ModuleOperator> {
    let ww = w.star(tol).ok()?.compose(w, tol).ok()?;
    let loc = ww.localized();
    let (vals, _) = numerics::eigen::jacobi_hermitian(loc).ok()?;
    let top = vals.first().copied().unwrap_or(0.0);
    let bottom = vals.last().copied().unwrap_or(0.0);
    if bottom <= 1e-9 * top.max(1e-9) {
        return None;
    }
    let inv_sqrt_loc = numerics::functional_calculus(
        loc,
        &SpectralFn::new(&|t| if t > 0.0 { Some(1.0 / t.sqrt()) } else { None }, 1.0),
        tol,
    )
    .ok()?;
    let end = spaces::hom_space(w.domain(), w.domain(), tol).ok()?;
    let inv_sqrt = hereditary::operator_from_localized(&end, &inv_sqrt_loc, tol).ok()?;
    w.compose(&inv_sqrt, tol).ok()
}

/// Unitary equivalence test between two modules over the same base: a polar
/// unitary of a generic hom element must intertwine isometrically. Returns
/// the residual (0 = equivalent) or None when no candidate exists.
fn module_equivalence_residual(
    a: &Arc<HilbertModule>,
    b: &Arc<HilbertModule>,
    rng: &mut impl Rng,
    tol: &TolerancePolicy,
) -> Option<f64> {
    if a.rank() != b.rank() {
        return None;
    }
    if a.rank() == 0 {
        return Some(0.0);
    }
    let hom = spaces::hom_space(a, b, tol).ok()?;
    if hom.dim() == 0 {
        return None;
    }
    for _ in 0..6 {
        let mut w = operator::zero(a, b, tol).ok()?;
        for op in &hom.basis {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            w = w.add(&op.scale(c, tol).ok()?, tol).ok()?;
        }
        if let Some(u) = polar_unitary(&w, tol) {
            let uu = u.star(tol).ok()?.compose(&u, tol).ok()?;
            let id_a = operator::identity(a, tol).ok()?;
            let uut = u.compose(&u.star(tol).ok()?, tol).ok()?;
            let id_b = operator::identity(b, tol).ok()?;
            return Some(uu.distance(&id_a).max(uut.distance(&id_b)));
        }
    }
    None
}

/// Run the full equivalence verification for one groupoid.
pub fn verify_green_julg(
    groupoid: &FiniteGroupoid,
    sample_size: usize,
    seed: u64,
    tol: &TolerancePolicy,
) -> Result<GreenJulgReport, GreenJulgError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let alg = groupoid_algebra(groupoid, tol)?;
    let cp: CrossedProduct = super::crossed_product(groupoid, tol)?;
    let (blocks, centrals) = wedderburn_data(alg.presentation.hom_basis(0, 0), tol)?;

    let mut functoriality = CheckRecord::new("functoriality");
    let mut isometry = CheckRecord::new("hom_isometry");
    let mut hom_dims = CheckRecord::new("hom_dimensions");
    let mut round_bundle = CheckRecord::new("round_trip_bundle");
    let mut round_module = CheckRecord::new("round_trip_module");
    let mut surjectivity = CheckRecord::new("essential_surjectivity");
    let mut density = CheckRecord::new("density_transfer");

    let gate = 1e-8;

    for k in 0..sample_size.max(1) {
        let b1 = random_bundle(groupoid, &mut rng, tol);
        let b2 = random_bundle(groupoid, &mut rng, tol);
        let m1 = bundle_to_module(&alg, &b1, tol)?;
        let m2 = bundle_to_module(&alg, &b2, tol)?;

        // Hom-space dimensions agree across the correspondence.
        let bundle_maps = intertwiner_space(groupoid, &b1, &b2, tol);
        let module_maps = spaces::hom_space(&m1, &m2, tol)?;
        if bundle_maps.len() == module_maps.dim() {
            hom_dims.record(0.0, gate);
        } else {
            hom_dims.fail((bundle_maps.len() as f64 - module_maps.dim() as f64).abs());
        }

        // Norm preservation and functoriality on random maps.
        if !bundle_maps.is_empty() {
            let mut phi = EquivariantMap {
                blocks: b1
                    .fibers
                    .iter()
                    .zip(b2.fibers.iter())
                    .map(|(&d1, &d2)| ComplexMatrix::zeros(d2, d1))
                    .collect(),
            };
            for t in &bundle_maps {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                for (acc, blk) in phi.blocks.iter_mut().zip(t.blocks.iter()) {
                    *acc = acc.add_mat(&blk.scale(c));
                }
            }
            let op = map_to_operator(&alg, (&b1, &m1), (&b2, &m2), &phi, tol)?;
            let sup = phi.sup_norm();
            isometry.record((op.norm() - sup).abs(), gate * sup.max(1.0));

            // Composition with the adjoint map.
            let psi = phi.adjoint();
            let op_psi = map_to_operator(&alg, (&b2, &m2), (&b1, &m1), &psi, tol)?;
            let comp_bundle = psi.compose(&phi);
            let op_comp = map_to_operator(&alg, (&b1, &m1), (&b1, &m1), &comp_bundle, tol)?;
            let lhs = op_psi.compose(&op, tol)?;
            functoriality.record(lhs.distance(&op_comp), gate * lhs.norm().max(1.0));
        }

        // Round trip bundle -> module -> bundle against an explicit unitary.
        let (b1_back, _) = module_to_bundle(&alg, &m1, tol)?;
        if b1_back.fibers != b1.fibers {
            round_bundle.fail(1.0);
        } else {
            let inter = intertwiner_space(groupoid, &b1, &b1_back, tol);
            let mut best = f64::INFINITY;
            for _ in 0..4 {
                let mut w: Vec<ComplexMatrix> = b1
                    .fibers
                    .iter()
                    .map(|&d| ComplexMatrix::zeros(d, d))
                    .collect();
                for t in &inter {
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    for (acc, blk) in w.iter_mut().zip(t.blocks.iter()) {
                        *acc = acc.add_mat(&blk.scale(c));
                    }
                }
                // Fiberwise polar factors.
                let mut ok = true;
                let mut residual = 0.0f64;
                let mut unitary_blocks = Vec::with_capacity(w.len());
                for blk in &w {
                    if blk.rows() == 0 {
                        unitary_blocks.push(blk.clone());
                        continue;
                    }
                    let h = blk.adjoint().matmul(blk);
                    let (vals, _) = numerics::eigen::jacobi_hermitian(&h)?;
                    let bottom = vals.last().copied().unwrap_or(0.0);
                    let top = vals.first().copied().unwrap_or(0.0);
                    if bottom <= 1e-9 * top.max(1e-9) {
                        ok = false;
                        break;
                    }
                    let inv_sqrt = numerics::functional_calculus(
                        &h,
                        &SpectralFn::new(
                            &|t| if t > 0.0 { Some(1.0 / t.sqrt()) } else { None },
                            1.0,
                        ),
                        tol,
                    )?;
                    unitary_blocks.push(blk.matmul(&inv_sqrt));
                }
                if !ok {
                    continue;
                }
                let u = EquivariantMap { blocks: unitary_blocks };
                residual = residual.max(u.equivariance_residual(groupoid, &b1, &b1_back));
                for blk in &u.blocks {
                    if blk.rows() > 0 {
                        let d = blk
                            .adjoint()
                            .matmul(blk)
                            .sub_mat(&ComplexMatrix::identity(blk.cols()))
                            .fro_norm();
                        residual = residual.max(d);
                    }
                }
                best = best.min(residual);
                if best <= gate {
                    break;
                }
            }
            if best.is_finite() {
                round_bundle.record(best, gate);
            } else {
                round_bundle.fail(1.0);
            }
        }

        // Round trip module -> bundle -> module on a random module.
        let sources = vec![0usize; 1 + (k % 2)];
        let m = HilbertModule::random(alg.presentation.clone(), &sources, 3, &mut rng, tol)?;
        let (bm, _) = module_to_bundle(&alg, &m, tol)?;
        let m_back = bundle_to_module(&alg, &bm, tol)?;
        match module_equivalence_residual(&m, &m_back, &mut rng, tol) {
            Some(r) => round_module.record(r, gate),
            None => round_module.fail(1.0),
        }

        // Essential surjectivity: the reconstructed bundle attains the block
        // signature of the module.
        let sig_m = block_signature(&alg, &m, &centrals, &blocks, tol);
        let sig_back = block_signature(&alg, &m_back, &centrals, &blocks, tol);
        if sig_m == sig_back {
            surjectivity.record(0.0, gate);
        } else {
            surjectivity.fail(1.0);
        }

        // Weak density transfer through a projection-valued intertwiner: the
        // pointwise net residual at step 64 decides the bundle side, the
        // corner density check decides the module side.
        let end_maps = intertwiner_space(groupoid, &b1, &b1, tol);
        let q = if k % 2 == 0 {
            // identity corner
            EquivariantMap {
                blocks: b1.fibers.iter().map(|&d| ComplexMatrix::identity(d)).collect(),
            }
        } else {
            // spectral projection of a random self-adjoint intertwiner
            let mut t = EquivariantMap {
                blocks: b1.fibers.iter().map(|&d| ComplexMatrix::zeros(d, d)).collect(),
            };
            for map in &end_maps {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                for (acc, blk) in t.blocks.iter_mut().zip(map.blocks.iter()) {
                    *acc = acc.add_mat(&blk.scale(c));
                }
            }
            EquivariantMap {
                blocks: t
                    .blocks
                    .iter()
                    .map(|blk| {
                        if blk.rows() == 0 {
                            blk.clone()
                        } else {
                            hereditary::range_projection(
                                &crate::cat::positivity::positive_part(&blk.hermitize(), tol)
                                    .expect("hermitized"),
                                tol,
                            )
                        }
                    })
                    .collect(),
            }
        };
        if q.equivariance_residual(groupoid, &b1, &b1) <= 1e-8 {
            let k_step = 64.0;
            let bundle_net_residual = q  // sup over unit xi of |(1-1/64) q xi - xi|
                .blocks
                .iter()
                .map(|blk| {
                    if blk.rows() == 0 {
                        0.0
                    } else {
                        numerics::operator_norm(
                            &blk.scale_re(1.0 - 1.0 / k_step)
                                .sub_mat(&ComplexMatrix::identity(blk.rows())),
                        )
                    }
                })
                .fold(0.0, f64::max);
            let bundle_dense = bundle_net_residual <= 1.0 / k_step + 1e-9;
            let p = map_to_operator(&alg, (&b1, &m1), (&b1, &m1), &q, tol)?;
            let module_dense = hereditary::is_weakly_dense(&m1, &p, tol)?.0;
            if bundle_dense == module_dense {
                density.record(0.0, gate);
            } else {
                density.fail(1.0);
            }
        }
    }

    let mut checks = vec![
        functoriality,
        isometry,
        hom_dims,
        round_bundle,
        round_module,
        surjectivity,
        density,
    ];
    let mut blocks_check = CheckRecord::new("wedderburn_match");
    if alg.blocks == cp.blocks {
        blocks_check.record(0.0, gate);
    } else {
        blocks_check.fail(1.0);
    }
    checks.push(blocks_check);

    let pass = checks.iter().all(|c| c.failures == 0);
    Ok(GreenJulgReport {
        groupoid: groupoid.objects.join("+"),
        checks,
        blocks_algebra: alg.blocks.clone(),
        blocks_crossed: cp.blocks.clone(),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_group_passes() {
        let tol = TolerancePolicy::default();
        let g = FiniteGroupoid::trivial();
        let report = verify_green_julg(&g, 3, 0, &tol).unwrap();
        assert!(report.pass, "{report:#?}");
    }

    #[test]
    fn z2_passes() {
        let tol = TolerancePolicy::default();
        let g = FiniteGroupoid::cyclic(2);
        let report = verify_green_julg(&g, 4, 1, &tol).unwrap();
        assert!(report.pass, "{report:#?}");
        for c in &report.checks {
            assert!(c.worst_residual <= 1e-8, "{}: {}", c.name, c.worst_residual);
        }
    }
}

#[cfg(test)]
mod heavy_tests {
    use super::*;
    use std::time::Instant;

    #[test]
    fn all_stock_groupoids_pass() {
        let tol = TolerancePolicy::default();
        for name in ["trivial", "Z2", "Z3", "Z2xZ2", "S3", "pair2xZ2"] {
            let g = FiniteGroupoid::by_name(name).unwrap();
            let t0 = Instant::now();
            let report = verify_green_julg(&g, 3, 7, &tol).unwrap();
            let dt = t0.elapsed();
            assert!(report.pass, "{name}: {report:#?}");
            println!("{name}: {:.2}s, blocks {:?}", dt.as_secs_f64(), report.blocks_algebra);
            if name == "S3" {
                assert_eq!(report.blocks_algebra, vec![1, 1, 4]);
            }
        }
    }
}
