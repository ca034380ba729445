//! Randomized verification of the C*-category axioms for a presentation.

use super::presentation::{CatElement, CStarCategoryPresentation};
use crate::numerics::{self, ComplexMatrix, TolerancePolicy};
use rand::Rng;

/// Outcome of one axiom family: worst residual seen and the sample that
/// produced it.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub worst_residual: f64,
    pub witness: String,
}

impl Verdict {
    fn new() -> Self {
        Verdict { pass: true, worst_residual: 0.0, witness: String::new() }
    }

    fn record(&mut self, residual: f64, gate: f64, witness: impl Fn() -> String) {
        if residual > self.worst_residual {
            self.worst_residual = residual;
            self.witness = witness();
        }
        if residual > gate {
            self.pass = false;
        }
    }
}

/// Per-axiom verdicts for a presentation: bilinear norm bound, isometry of
/// the involution, the C*-equality, the strong C*-inequality and positivity
/// of star(f) . f.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub banach_bound: Verdict,
    pub star_isometry: Verdict,
    pub cstar_equality: Verdict,
    pub strong_inequality: Verdict,
    pub positivity: Verdict,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.banach_bound.pass
            && self.star_isometry.pass
            && self.cstar_equality.pass
            && self.strong_inequality.pass
            && self.positivity.pass
    }

    pub fn only_positivity_fails(&self) -> bool {
        !self.positivity.pass
            && self.banach_bound.pass
            && self.star_isometry.pass
            && self.cstar_equality.pass
            && self.strong_inequality.pass
    }
}

/// Sample random morphisms and verify the axioms. Failures land in the
/// report, never in an error.
pub fn check_cstar_axioms(
    cat: &CStarCategoryPresentation,
    trials: usize,
    rng: &mut impl Rng,
    tol: &TolerancePolicy,
) -> AxiomReport {
    let mut report = AxiomReport {
        banach_bound: Verdict::new(),
        star_isometry: Verdict::new(),
        cstar_equality: Verdict::new(),
        strong_inequality: Verdict::new(),
        positivity: Verdict::new(),
    };
    let n = cat.objects().len();
    if n == 0 {
        return report;
    }

    for trial in 0..trials {
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        let w = rng.gen_range(0..n);

        let f = match cat.random_element(rng, x, y) {
            Some(f) => f,
            None => continue,
        };
        let nf = f.norm();

        // Banach bound through a composable h: w -> x.
        if let Some(h) = cat.random_element(rng, w, x) {
            let fh = cat.compose(&f, &h).expect("composable by construction");
            let lhs = fh.norm();
            let bound = nf * h.norm();
            let residual = (lhs - bound).max(0.0);
            report.banach_bound.record(residual, tol.gate(bound.max(1.0)) * 10.0, || {
                format!("trial {trial}: |f.h| = {lhs:.6} vs |f||h| = {bound:.6}")
            });
        }

        let sf = cat.star(&f);
        report.star_isometry.record(
            (sf.norm() - nf).abs(),
            tol.gate(nf.max(1.0)) * 10.0,
            || format!("trial {trial}: |f*| vs |f| on hom({x},{y})"),
        );

        let sff = cat.compose(&sf, &f).expect("star lands composably");
        report.cstar_equality.record(
            (nf * nf - sff.norm()).abs(),
            tol.gate(nf.max(1.0).powi(2)) * 10.0,
            || format!("trial {trial}: |f|^2 vs |f* f| on hom({x},{y})"),
        );

        // Strong inequality, with g drawn from the same hom-space as f so
        // that the verdict stays independent of the positivity axiom (a g
        // with a different target would make the two equivalent).
        if let Some(g) = cat.random_element(rng, x, y) {
            let sgg = cat.compose(&cat.star(&g), &g).expect("composable");
            let sum = sff.mat.add_mat(&sgg.mat);
            let rhs = numerics::operator_norm(&sum);
            let residual = (nf * nf - rhs).max(0.0);
            report.strong_inequality.record(
                residual,
                tol.gate(nf.max(1.0).powi(2)) * 10.0,
                || format!("trial {trial}: |f|^2 = {:.6} vs |f*f + g*g| = {rhs:.6}", nf * nf),
            );
        }

        // Positivity of star(f) . f, both under the representation and
        // abstractly through the norm characterization |K - h| <= K at
        // K = |h| (evaluated in the unitalization of the representing
        // algebra; spectral permanence makes the enclosing algebra
        // immaterial).
        let h = &sff;
        let scale = h.norm().max(1e-300);
        let rep_min = numerics::min_eigenvalue(&h.mat.hermitize());
        let rep_defect = (-rep_min - tol.eig_clip * scale).max(0.0);
        let herm_defect = h.mat.sub_mat(&cat.star(h).mat).fro_norm();
        let k = h.norm();
        let shifted = ComplexMatrix::identity(h.mat.rows()).scale_re(k).sub_mat(&h.mat);
        let abs_defect = (numerics::operator_norm(&shifted) - k).max(0.0);
        let defect = rep_defect.max(herm_defect).max(abs_defect);
        report.positivity.record(defect, tol.gate(scale) * 10.0, || {
            format!(
                "trial {trial}: f* f on hom({x},{x}); rep min eig {rep_min:.3e}, |K - h| - K = {abs_defect:.3e}"
            )
        });
    }
    report
}

/// The positivity defect of a single self-adjoint-in-star element, measured
/// the same way as in the axiom report. Zero means positive.
pub fn positivity_defect(
    _cat: &CStarCategoryPresentation,
    h: &CatElement,
    tol: &TolerancePolicy,
) -> f64 {
    let scale = h.norm().max(1e-300);
    let rep_min = numerics::min_eigenvalue(&h.mat.hermitize());
    let rep_defect = (-rep_min - tol.eig_clip * scale).max(0.0);
    let k = h.norm();
    let shifted = ComplexMatrix::identity(h.mat.rows()).scale_re(k).sub_mat(&h.mat);
    let abs_defect = (numerics::operator_norm(&shifted) - k).max(0.0);
    rep_defect.max(abs_defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn full_matrix_category_passes() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 3)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let report = check_cstar_axioms(&cat, 60, &mut rng, &tol);
        assert!(report.all_pass(), "{report:#?}");
    }

    #[test]
    fn flip_category_fails_exactly_positivity() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::flip_counterexample();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let report = check_cstar_axioms(&cat, 200, &mut rng, &tol);
        assert!(report.only_positivity_fails(), "{report:#?}");
    }
}
