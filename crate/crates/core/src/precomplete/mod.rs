//! The pre-complete structure on categories of Hilbert modules: interior
//! tensors along functors into module categories, cone verification,
//! absolutely compact operators and the characterization of module
//! categories.

use crate::cat::{span, CatElement, CatError, CStarCategoryPresentation};
use crate::hereditary::{self, HereditaryError, HereditaryKind, HereditaryStructure};
use crate::hilbert::{
    operator, spaces, Generator, HilbertModule, ModuleElement, ModuleError, ModuleOperator,
    OperatorSpace,
};
use crate::numerics::{self, ComplexMatrix, TolerancePolicy};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrecompleteError {
    #[error("functor violates *-functor laws: {0}")]
    FunctorViolation(String),
    #[error("interior tensor produced a non-positive gram: {0}")]
    GramNotPositive(String),
    #[error("cone axiom violated: {0}")]
    ConeAxiomViolation(String),
    #[error("supplied hereditary subalgebra is not weakly dense")]
    NotWeaklyDense,
    #[error(transparent)]
    Cat(#[from] CatError),
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Hereditary(#[from] HereditaryError),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

/// A *-functor from a presented category D into the category of Hilbert
/// modules over C: one module per object of D and one module operator per
/// hom-basis element.
#[derive(Debug, Clone)]
pub struct ModuleFunctor {
    pub source: Arc<CStarCategoryPresentation>,
    pub modules: Vec<Arc<HilbertModule>>,
    pub hom_images: BTreeMap<(usize, usize), Vec<ModuleOperator>>,
}

impl ModuleFunctor {
    pub fn apply(&self, el: &CatElement) -> Result<ModuleOperator, PrecompleteError> {
        let coords = span::coords(self.source.hom_basis(el.src, el.dst), &el.mat);
        let images = self
            .hom_images
            .get(&(el.src, el.dst))
            .ok_or_else(|| PrecompleteError::FunctorViolation(format!(
                "no images for hom({}, {})",
                el.src, el.dst
            )))?;
        let tol = TolerancePolicy::default();
        let mut out = operator::zero(&self.modules[el.src], &self.modules[el.dst], &tol)?;
        for (c, op) in coords.iter().zip(images.iter()) {
            out = out.add(&op.scale(*c, &tol)?, &tol)?;
        }
        Ok(out)
    }

    /// *-functor laws on all basis pairs.
    pub fn validate(&self, tol: &TolerancePolicy) -> Result<(), PrecompleteError> {
        let gate = tol.gate(1.0) * 100.0;
        let pairs: Vec<(usize, usize)> = self.source.hom_pairs().collect();
        for &(x, y) in &pairs {
            for b in self.source.hom_basis(x, y) {
                let el = CatElement { src: x, dst: y, mat: b.clone() };
                let lhs = self.apply(&self.source.star(&el))?;
                let rhs = self.apply(&el)?.star(tol)?;
                if lhs.distance(&rhs) > gate {
                    return Err(PrecompleteError::FunctorViolation(format!(
                        "involution not preserved on hom({x},{y})"
                    )));
                }
            }
        }
        for &(x, y) in &pairs {
            for &(y2, z) in &pairs {
                if y2 != y {
                    continue;
                }
                for f in self.source.hom_basis(x, y) {
                    for g in self.source.hom_basis(y, z) {
                        let fe = CatElement { src: x, dst: y, mat: f.clone() };
                        let ge = CatElement { src: y, dst: z, mat: g.clone() };
                        let comp = self.source.compose(&ge, &fe)?;
                        let lhs = self.apply(&comp)?;
                        let rhs = self.apply(&ge)?.compose(&self.apply(&fe)?, tol)?;
                        if lhs.distance(&rhs) > gate * rhs.norm().max(1.0) {
                            return Err(PrecompleteError::FunctorViolation(format!(
                                "composition not preserved on hom({x},{y}) then hom({y},{z})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// True when every hom map is injective (norm equality cases).
    pub fn is_injective(&self, tol: &TolerancePolicy) -> bool {
        for ((x, y), images) in &self.hom_images {
            let dim = self.source.hom_dim(*x, *y);
            let locs: Vec<ComplexMatrix> =
                images.iter().map(|op| op.localized().clone()).collect();
            if span::orthonormalize(&locs, tol.eig_clip.sqrt()).len() < dim {
                return false;
            }
        }
        true
    }

    /// The representation functor of a presented category: objects go to
    /// free modules over the scalars, morphisms to their representing
    /// matrices.
    pub fn representation(
        cat: &Arc<CStarCategoryPresentation>,
        scalars: &Arc<CStarCategoryPresentation>,
        tol: &TolerancePolicy,
    ) -> Result<ModuleFunctor, PrecompleteError> {
        let mut modules = Vec::new();
        for x in 0..cat.objects().len() {
            let n = cat.dim(x);
            let gens = (0..n)
                .map(|i| Generator { label: format!("e{i}"), source: 0 })
                .collect();
            modules.push(HilbertModule::from_dense_gram(
                scalars.clone(),
                gens,
                ComplexMatrix::identity(n),
                tol,
            )?);
        }
        let mut hom_images = BTreeMap::new();
        for (x, y) in cat.hom_pairs() {
            let mut images = Vec::new();
            for b in cat.hom_basis(x, y) {
                images.push(operator::from_coeff(
                    modules[x].clone(),
                    modules[y].clone(),
                    b.clone(),
                    tol,
                )?);
            }
            hom_images.insert((x, y), images);
        }
        Ok(ModuleFunctor { source: cat.clone(), modules, hom_images })
    }

    /// The Yoneda functor of a unital presentation: objects go to their
    /// representable modules, morphisms act by post-composition.
    pub fn yoneda(
        cat: &Arc<CStarCategoryPresentation>,
        tol: &TolerancePolicy,
    ) -> Result<ModuleFunctor, PrecompleteError> {
        let mut modules = Vec::new();
        for x in 0..cat.objects().len() {
            modules.push(HilbertModule::yoneda(cat.clone(), x, tol)?);
        }
        let mut hom_images = BTreeMap::new();
        for (x, y) in cat.hom_pairs() {
            let mut images = Vec::new();
            for b in cat.hom_basis(x, y) {
                images.push(operator::from_coeff(
                    modules[x].clone(),
                    modules[y].clone(),
                    b.clone(),
                    tol,
                )?);
            }
            hom_images.insert((x, y), images);
        }
        Ok(ModuleFunctor { source: cat.clone(), modules, hom_images })
    }
}

/// A diagram for the interior tensor: a functor into modules over C and a
/// Hilbert module over the functor's source.
#[derive(Debug, Clone)]
pub struct PrecompleteDiagram {
    pub functor: ModuleFunctor,
    pub module: Arc<HilbertModule>,
}

/// The structural maps X_h: F(d) -> apex of a cone over a diagram, one leg
/// per generator of the weighting module.
#[derive(Debug, Clone)]
pub struct ConeStructure {
    pub apex: Arc<HilbertModule>,
    pub legs: Vec<ModuleOperator>,
    /// For apex generators produced by an interior tensor: the (weighting
    /// generator, fiber generator) pair behind each apex generator.
    pub pairs: Vec<(usize, usize)>,
}

impl ConeStructure {
    /// The leg attached to an arbitrary element h = sum x_i f_i of the
    /// weighting module: sum X_{x_i} . F(f_i).
    pub fn leg_for(
        &self,
        diagram: &PrecompleteDiagram,
        h: &ModuleElement,
        tol: &TolerancePolicy,
    ) -> Result<ModuleOperator, PrecompleteError> {
        let d = h.object;
        let mut out = operator::zero(&diagram.functor.modules[d], &self.apex, tol)?;
        for (i, f) in h.coeffs.iter().enumerate() {
            let src = h.module.generators()[i].source;
            let el = CatElement { src: d, dst: src, mat: f.clone() };
            let ff = diagram.functor.apply(&el)?;
            out = out.add(&self.legs[i].compose(&ff, tol)?, tol)?;
        }
        Ok(out)
    }

    /// Residual of the cone law X_h^* X_{h'} = F(<h, h'>) over all generator
    /// pairs.
    pub fn law_residual(
        &self,
        diagram: &PrecompleteDiagram,
        tol: &TolerancePolicy,
    ) -> Result<f64, PrecompleteError> {
        let h = &diagram.module;
        let mut worst = 0.0f64;
        for i in 0..h.generators().len() {
            for j in 0..h.generators().len() {
                let hi = h.generator_element(i);
                let hj = h.generator_element(j);
                let ip = hi.inner_product(&hj)?;
                let lhs = self.legs[i].star(tol)?.compose(&self.legs[j], tol)?;
                let rhs = diagram.functor.apply(&ip)?;
                worst = worst.max(lhs.distance(&rhs));
            }
        }
        Ok(worst)
    }
}

/// The interior tensor f_* H: generators are pairs (generator of H at d,
/// generator of F(d)), with gram <x, F(<h, h'>) x'>. The positivity of the
/// gram is recomputed, not trusted; the canonical cone comes back alongside.
pub fn interior_tensor(
    diagram: &PrecompleteDiagram,
    tol: &TolerancePolicy,
) -> Result<(Arc<HilbertModule>, ConeStructure), PrecompleteError> {
    diagram.functor.validate(tol)?;
    let h = &diagram.module;
    let base = diagram
        .functor
        .modules
        .first()
        .map(|m| m.base().clone())
        .ok_or_else(|| PrecompleteError::FunctorViolation("empty functor".into()))?;

    // Enumerate tensor generators.
    let mut tensor_gens: Vec<(usize, usize)> = Vec::new(); // (H generator, F(d) generator)
    for (i, g) in h.generators().iter().enumerate() {
        let fd = &diagram.functor.modules[g.source];
        for a in 0..fd.generators().len() {
            tensor_gens.push((i, a));
        }
    }
    let mut generators = Vec::with_capacity(tensor_gens.len());
    for &(i, a) in &tensor_gens {
        let d = h.generators()[i].source;
        let fd = &diagram.functor.modules[d];
        generators.push(Generator {
            label: format!("{}(x){}", h.generators()[i].label, fd.generators()[a].label),
            source: fd.generators()[a].source,
        });
    }
    let total: usize = generators.iter().map(|g| base.dim(g.source)).sum();
    let mut gram = ComplexMatrix::zeros(total, total);
    let mut offsets = Vec::with_capacity(tensor_gens.len());
    {
        let mut o = 0;
        for g in &generators {
            offsets.push(o);
            o += base.dim(g.source);
        }
    }
    for (row, &(i, a)) in tensor_gens.iter().enumerate() {
        for (col, &(j, b)) in tensor_gens.iter().enumerate() {
            let hi = h.generator_element(i);
            let hj = h.generator_element(j);
            let ip = hi.inner_product(&hj)?;
            let op = diagram.functor.apply(&ip)?;
            let di = h.generators()[i].source;
            let dj = h.generators()[j].source;
            let xa = diagram.functor.modules[di].generator_element(a);
            let xb = diagram.functor.modules[dj].generator_element(b);
            let entry = xa.inner_product(&op.apply(&xb)?)?;
            gram.set_block(offsets[row], offsets[col], &entry.mat);
        }
    }
    let apex = HilbertModule::from_dense_gram(base.clone(), generators, gram, tol).map_err(
        |e| match e {
            ModuleError::GramNotPositive { min_eig } => PrecompleteError::GramNotPositive(
                format!("tensor gram eigenvalue {min_eig:.3e}"),
            ),
            other => PrecompleteError::Module(other),
        },
    )?;

    // Legs: F(d_i) -> apex sending x_a to the tensor generator (i, a).
    let mut legs = Vec::with_capacity(h.generators().len());
    for (i, g) in h.generators().iter().enumerate() {
        let fd = &diagram.functor.modules[g.source];
        let mut coeff = ComplexMatrix::zeros(apex.total_dim(), fd.total_dim());
        for (row, &(i2, a)) in tensor_gens.iter().enumerate() {
            if i2 == i {
                let d = base.dim(apex.generators()[row].source);
                coeff.set_block(offsets[row], fd.offsets()[a], &ComplexMatrix::identity(d));
            }
        }
        legs.push(operator::from_coeff(fd.clone(), apex.clone(), coeff, tol)?);
    }
    let cone = ConeStructure { apex, legs, pairs: tensor_gens };
    let law = cone.law_residual(diagram, tol)?;
    let scale = cone
        .legs
        .iter()
        .map(|l| l.norm())
        .fold(1.0f64, f64::max)
        .powi(2);
    if law > tol.gate(scale) * 100.0 {
        return Err(PrecompleteError::ConeAxiomViolation(format!(
            "canonical cone law residual {law:.3e}"
        )));
    }
    Ok((cone.apex.clone(), cone))
}

/// Verdict of [`verify_cone`].
#[derive(Debug, Clone)]
pub struct ConeReport {
    pub is_limit: bool,
    /// Worst violation of |sum X_h X_h'^*| <= |sum h h'^*| over the sampled
    /// families (positive means violated).
    pub norm_defect: f64,
    /// Worst deviation from equality of those norms; meaningful for
    /// injective functors.
    pub equality_defect: f64,
}

/// Check a cone over a diagram: the compact-quotient norm comparison on
/// random finite families, and weak density of the corner generated by the
/// legs (the limit criterion).
pub fn verify_cone(
    cone: &ConeStructure,
    diagram: &PrecompleteDiagram,
    rng: &mut impl rand::Rng,
    families: usize,
    tol: &TolerancePolicy,
) -> Result<ConeReport, PrecompleteError> {
    let law = cone.law_residual(diagram, tol)?;
    let scale = cone
        .legs
        .iter()
        .map(|l| l.norm())
        .fold(1.0f64, f64::max)
        .powi(2);
    if law > tol.gate(scale) * 100.0 {
        return Err(PrecompleteError::ConeAxiomViolation(format!(
            "cone law residual {law:.3e}"
        )));
    }
    let h = &diagram.module;
    let n = h.generators().len();
    let mut norm_defect = 0.0f64;
    let mut equality_defect = 0.0f64;
    if n > 0 {
        for _ in 0..families {
            // Random family h_i, h'_i supported on random generators.
            let k = 1 + (rng.gen_range(0..2usize.min(n)));
            let mut lhs: Option<ModuleOperator> = None;
            let mut rhs: Option<ModuleOperator> = None;
            for _ in 0..k {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                let di = h.generators()[i].source;
                let dj = h.generators()[j].source;
                if di != dj {
                    // Legs of a pair must share a source object to form
                    // X_h X_h'^*; restrict sampling accordingly.
                    continue;
                }
                let hi = h.generator_element(i);
                let hj = h.generator_element(j);
                let term_apex = cone.legs[i]
                    .compose(&cone.legs[j].star(tol)?, tol)?;
                let term_h = operator::rank_one(&hi, &hj, tol)?;
                lhs = Some(match lhs {
                    Some(acc) => acc.add(&term_apex, tol)?,
                    None => term_apex,
                });
                rhs = Some(match rhs {
                    Some(acc) => acc.add(&term_h, tol)?,
                    None => term_h,
                });
            }
            if let (Some(l), Some(r)) = (lhs, rhs) {
                let ln = l.norm();
                let rn = r.norm();
                norm_defect = norm_defect.max(ln - rn);
                equality_defect = equality_defect.max((ln - rn).abs());
            }
        }
    }

    // Limit criterion: the corner spanned by X_h g X_h'^* weakly dense in
    // End(apex).
    let mut prods: Vec<ComplexMatrix> = Vec::new();
    for (i, gi) in h.generators().iter().enumerate() {
        for (j, gj) in h.generators().iter().enumerate() {
            let g_space = spaces::hom_space(
                &diagram.functor.modules[gj.source],
                &diagram.functor.modules[gi.source],
                tol,
            )?;
            for g in &g_space.basis {
                let m = cone.legs[i]
                    .localized()
                    .matmul(g.localized())
                    .matmul(&cone.legs[j].star(tol)?.localized());
                prods.push(m);
            }
        }
    }
    let r = cone.apex.rank();
    let mut sum = ComplexMatrix::zeros(r, r);
    for s in &prods {
        sum = sum.add_mat(&s.matmul(&s.adjoint()));
    }
    let z_loc = hereditary::range_projection(&sum, tol);
    let end = spaces::hom_space(&cone.apex, &cone.apex, tol)?;
    let is_limit = match hereditary::operator_from_localized(&end, &z_loc, tol) {
        Ok(z) => hereditary::is_weakly_dense(&cone.apex, &z, tol)?.0,
        Err(_) => false,
    };
    Ok(ConeReport { is_limit, norm_defect, equality_defect })
}

/// Absolute compactness of k relative to a finite context of test triples
/// (Z, h1: Z -> dom k, h2: Z -> cod k) with a weakly dense corner p on each
/// Z: every h2* k h1 must land in the corner.
pub fn absolutely_compact(
    k: &ModuleOperator,
    context: &[(Arc<HilbertModule>, ModuleOperator, ModuleOperator, ModuleOperator)],
    tol: &TolerancePolicy,
) -> Result<bool, PrecompleteError> {
    for (z, h1, h2, p) in context {
        let (dense, _) = hereditary::is_weakly_dense(z, p, tol)?;
        if !dense {
            return Err(PrecompleteError::NotWeaklyDense);
        }
        let t = h2.star(tol)?.compose(k, tol)?.compose(h1, tol)?;
        let ptp = p.compose(&t, tol)?.compose(p, tol)?;
        if ptp.distance(&t) > tol.gate(t.norm().max(1.0)) * 100.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A finite full subcategory of a module category, presented on the
/// localized spaces, with the dictionaries back to module operators.
pub struct SampleCategory {
    pub modules: Vec<Arc<HilbertModule>>,
    pub presentation: Arc<CStarCategoryPresentation>,
    pub op_spaces: BTreeMap<(usize, usize), OperatorSpace>,
}

impl SampleCategory {
    pub fn new(
        modules: &[Arc<HilbertModule>],
        tol: &TolerancePolicy,
    ) -> Result<Self, PrecompleteError> {
        use crate::cat::{CatObject, StarOp};
        let mut homs = BTreeMap::new();
        let mut op_spaces = BTreeMap::new();
        for (i, mi) in modules.iter().enumerate() {
            for (j, mj) in modules.iter().enumerate() {
                let space = spaces::hom_space(mi, mj, tol)?;
                let mats: Vec<ComplexMatrix> =
                    space.basis.iter().map(|b| b.localized().clone()).collect();
                if !mats.is_empty() {
                    homs.insert((i, j), mats);
                }
                op_spaces.insert((i, j), space);
            }
        }
        let objects = modules
            .iter()
            .enumerate()
            .map(|(i, m)| CatObject { name: format!("M{i}"), dim: m.rank() })
            .collect();
        let presentation = CStarCategoryPresentation::new(
            objects,
            homs,
            true,
            StarOp::Adjoint,
            tol,
        )?
        .into_shared();
        Ok(SampleCategory { modules: modules.to_vec(), presentation, op_spaces })
    }

    /// Convert a presentation morphism back into a module operator.
    pub fn to_operator(
        &self,
        el: &CatElement,
        tol: &TolerancePolicy,
    ) -> Result<ModuleOperator, PrecompleteError> {
        let space = &self.op_spaces[&(el.src, el.dst)];
        Ok(hereditary::operator_from_localized(space, &el.mat, tol)?)
    }
}

/// Per-object outcome of the characterization check.
#[derive(Debug, Clone)]
pub struct ObjectVerdict {
    pub object: usize,
    pub generating: bool,
    pub hom_dims_match: bool,
    pub natural_unitary: bool,
}

#[derive(Debug, Clone)]
pub struct CharacterizationReport {
    pub verdicts: Vec<ObjectVerdict>,
    pub norm_preserving: bool,
    pub pass: bool,
}

/// Verify on a finite sample that a hereditary subcategory D (given by one
/// corner projection per sample object) is generating and induces an
/// equivalence with the category of Hilbert D-modules: weak density of the
/// ideal of D on every object, full faithfulness of the restriction, and a
/// natural unitary between the co-unit i_* R_D and the identity.
pub fn characterize_module_category(
    sample: &SampleCategory,
    corner: &[ModuleOperator],
    rng: &mut impl rand::Rng,
    tol: &TolerancePolicy,
) -> Result<CharacterizationReport, PrecompleteError> {
    let n = sample.modules.len();
    assert_eq!(corner.len(), n, "one corner projection per sample object");

    // The hereditary subcategory presentation: corners of the sample
    // presentation.
    let projections: Vec<ComplexMatrix> =
        corner.iter().map(|p| p.localized().clone()).collect();
    let sub = HereditaryStructure::new(
        HereditaryKind::Subcategory,
        sample.presentation.clone(),
        projections,
        tol,
    )?;
    let sub_pres = hereditary::subcategory_presentation(&sub, tol)?.into_shared();

    // Clause 1: weak density of the two-sided ideal of D on every object.
    let mut verdicts = Vec::new();
    for m in 0..n {
        let mut prods: Vec<ComplexMatrix> = Vec::new();
        for nn in 0..n {
            let u_space = &sample.op_spaces[&(nn, m)];
            let pn = corner[nn].localized();
            for u in &u_space.basis {
                // u . p_N . v over v = u* sweeps enough directions to span
                // the ideal corner: u p (u p)*.
                let up = u.localized().matmul(pn);
                prods.push(up.matmul(&up.adjoint()));
            }
        }
        let mut sum = ComplexMatrix::zeros(sample.modules[m].rank(), sample.modules[m].rank());
        for s in &prods {
            sum = sum.add_mat(s);
        }
        let z_loc = hereditary::range_projection(&sum, tol);
        let end = &sample.op_spaces[&(m, m)];
        let generating = match hereditary::operator_from_localized(end, &z_loc, tol) {
            Ok(z) => hereditary::is_weakly_dense(&sample.modules[m], &z, tol)?.0,
            Err(_) => false,
        };
        verdicts.push(ObjectVerdict {
            object: m,
            generating,
            hom_dims_match: true,
            natural_unitary: true,
        });
    }

    // Restrictions of every sample object to D.
    let mut restricted = Vec::new();
    let mut restricted_gens: Vec<Vec<CatElement>> = Vec::new();
    for m in 0..n {
        let (module, gens) = restrict_object_with_generators(&sub, &sub_pres, m, tol)?;
        restricted.push(module);
        restricted_gens.push(gens);
    }

    // Clause 2: full faithfulness: hom dimensions and norms preserved.
    let mut norm_preserving = true;
    for i in 0..n {
        for j in 0..n {
            let dim_s = sample.presentation.hom_dim(i, j);
            let rspace = spaces::hom_space(&restricted[i], &restricted[j], tol)?;
            if rspace.dim() != dim_s {
                verdicts[i].hom_dims_match = false;
                verdicts[j].hom_dims_match = false;
            }
            // Norm preservation on a random morphism.
            if dim_s > 0 {
                if let Some(f) = sample.presentation.random_element(rng, i, j) {
                    let rf = restrict_morphism(
                        sample,
                        &sub,
                        &restricted,
                        &restricted_gens,
                        &f,
                        tol,
                    )?;
                    let n_s = numerics::operator_norm(&f.mat);
                    if (rf.norm() - n_s).abs() > tol.gate(n_s.max(1.0)) * 1e3 {
                        norm_preserving = false;
                    }
                }
            }
        }
    }

    // Clause 3: i_* R_D naturally unitarily isomorphic to the identity.
    let functor = inclusion_functor(sample, &sub, &sub_pres, tol)?;
    for m in 0..n {
        let diagram = PrecompleteDiagram {
            functor: functor.clone(),
            module: restricted[m].clone(),
        };
        let verdict = match interior_tensor(&diagram, tol) {
            Ok((tensor, cone)) => {
                // The co-unit sends the tensor generator (t_l, x) to the
                // honest image T_l(x) inside the sample object.
                let mut images = Vec::new();
                for &(l, a) in &cone.pairs {
                    let t_op = sample.to_operator(&restricted_gens[m][l], tol)?;
                    let src_mod = &functor.modules[restricted[m].generators()[l].source];
                    let x = src_mod.generator_element(a);
                    images.push(t_op.apply(&x)?);
                }
                match operator::make_operator(&tensor, &sample.modules[m], &images, tol) {
                    Ok(u) => {
                        let uu = u.compose(&u.star(tol)?, tol)?;
                        let idm = operator::identity(&sample.modules[m], tol)?;
                        let ustaru = u.star(tol)?.compose(&u, tol)?;
                        let idt = operator::identity(&tensor, tol)?;
                        uu.distance(&idm) <= tol.gate(1.0) * 1e3
                            && ustaru.distance(&idt) <= tol.gate(1.0) * 1e3
                    }
                    Err(_) => false,
                }
            }
            Err(_) => false,
        };
        verdicts[m].natural_unitary = verdict;
    }

    let pass = norm_preserving
        && verdicts
            .iter()
            .all(|v| v.generating && v.hom_dims_match && v.natural_unitary);
    Ok(CharacterizationReport { verdicts, norm_preserving, pass })
}

/// Restriction of a sample object to the subcategory, returning the module
/// over the corner presentation together with the presentation morphisms
/// realizing its generators.
fn restrict_object_with_generators(
    sub: &HereditaryStructure,
    sub_pres: &Arc<CStarCategoryPresentation>,
    object: usize,
    tol: &TolerancePolicy,
) -> Result<(Arc<HilbertModule>, Vec<CatElement>), PrecompleteError> {
    let cat = &sub.ambient;
    let mut generators = Vec::new();
    let mut morphisms = Vec::new();
    for a in 0..cat.objects().len() {
        if sub.projections[a].fro_norm() <= 1e-12 {
            continue;
        }
        for (k, f) in cat.hom_basis(a, object).iter().enumerate() {
            let t = f.matmul(&sub.projections[a]);
            if t.fro_norm() <= 1e-12 {
                continue;
            }
            generators.push(Generator { label: format!("t{a}.{k}"), source: a });
            morphisms.push(CatElement { src: a, dst: object, mat: t });
        }
    }
    let total: usize = generators.iter().map(|g| cat.dim(g.source)).sum();
    let mut gram = ComplexMatrix::zeros(total, total);
    let mut oi = 0;
    for (i, ti) in morphisms.iter().enumerate() {
        let mut oj = 0;
        for tj in morphisms.iter() {
            let block = ti.mat.adjoint().matmul(&tj.mat);
            gram.set_block(oi, oj, &block);
            oj += block.cols();
        }
        oi += cat.dim(generators[i].source);
    }
    let module = HilbertModule::from_dense_gram(sub_pres.clone(), generators, gram, tol)?;
    Ok((module, morphisms))
}

/// Apply the restriction functor to a sample morphism f: M -> N: the
/// operator R_D(M) -> R_D(N) sending a generator t to f . t.
fn restrict_morphism(
    sample: &SampleCategory,
    sub: &HereditaryStructure,
    restricted: &[Arc<HilbertModule>],
    restricted_gens: &[Vec<CatElement>],
    f: &CatElement,
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, PrecompleteError> {
    let m = f.src;
    let nn = f.dst;
    let target_gens = &restricted_gens[nn];
    // Express each f . t_l in the generators of R_D(N) by a least-squares
    // solve over the corner coordinates.
    let mut images = Vec::new();
    for t in &restricted_gens[m] {
        let ft = sample.presentation.compose(f, t)?;
        let coeffs = solve_in_generators(&sub.ambient, sub, target_gens, &ft, tol)?;
        images.push(restricted[nn].element(t.src, coeffs)?);
    }
    Ok(operator::make_operator(&restricted[m], &restricted[nn], &images, tol)?)
}

/// Solve g = sum_l t_l . lambda_l with lambda_l in the corner hom-spaces.
fn solve_in_generators(
    cat: &Arc<CStarCategoryPresentation>,
    sub: &HereditaryStructure,
    gens: &[CatElement],
    g: &CatElement,
    tol: &TolerancePolicy,
) -> Result<Vec<ComplexMatrix>, PrecompleteError> {
    // Unknown coordinates: for each generator t_l: a -> X a coefficient in
    // the corner hom(g.src, a).
    let mut columns: Vec<(usize, usize, ComplexMatrix)> = Vec::new(); // (gen index, basis index within corner hom, product matrix)
    let mut corner_bases: Vec<Vec<ComplexMatrix>> = Vec::new();
    for (l, t) in gens.iter().enumerate() {
        let corner = HereditaryStructure {
            kind: HereditaryKind::Subcategory,
            ambient: cat.clone(),
            projections: sub.projections.clone(),
        }
        .realized_space(g.src, t.src, tol);
        for (b_idx, lam) in corner.iter().enumerate() {
            columns.push((l, b_idx, t.mat.matmul(lam)));
        }
        corner_bases.push(corner);
    }
    let rows = g.mat.rows() * g.mat.cols();
    let mut a = ComplexMatrix::zeros(rows, columns.len());
    for (col, (_, _, prod)) in columns.iter().enumerate() {
        let mut r = 0;
        for i in 0..prod.rows() {
            for j in 0..prod.cols() {
                a[(r, col)] = prod[(i, j)];
                r += 1;
            }
        }
    }
    let mut b = ComplexMatrix::zeros(rows, 1);
    {
        let mut r = 0;
        for i in 0..g.mat.rows() {
            for j in 0..g.mat.cols() {
                b[(r, 0)] = g.mat[(i, j)];
                r += 1;
            }
        }
    }
    let sol = numerics::pinv(&a, tol).matmul(&b);
    let residual = a.matmul(&sol).sub_mat(&b).fro_norm();
    if residual > tol.gate(g.mat.fro_norm().max(1.0)) * 1e3 {
        return Err(PrecompleteError::FunctorViolation(format!(
            "restriction image not expressible in generators (residual {residual:.3e})"
        )));
    }
    let mut coeffs: Vec<ComplexMatrix> = gens
        .iter()
        .map(|t| ComplexMatrix::zeros(cat.dim(t.src), cat.dim(g.src)))
        .collect();
    for (col, (l, b_idx, _)) in columns.iter().enumerate() {
        let lam = &corner_bases[*l][*b_idx];
        coeffs[*l] = coeffs[*l].add_mat(&lam.scale(sol[(col, 0)]));
    }
    Ok(coeffs)
}

/// The inclusion functor of the corner subcategory into the module
/// category: objects go to the sample modules, corner morphisms to the
/// corresponding module operators.
fn inclusion_functor(
    sample: &SampleCategory,
    sub: &HereditaryStructure,
    sub_pres: &Arc<CStarCategoryPresentation>,
    tol: &TolerancePolicy,
) -> Result<ModuleFunctor, PrecompleteError> {
    let mut hom_images = BTreeMap::new();
    for (x, y) in sub_pres.hom_pairs() {
        let mut images = Vec::new();
        for b in sub_pres.hom_basis(x, y) {
            let el = CatElement { src: x, dst: y, mat: b.clone() };
            images.push(sample.to_operator(&el, tol)?);
        }
        hom_images.insert((x, y), images);
    }
    let _ = sub;
    Ok(ModuleFunctor {
        source: sub_pres.clone(),
        modules: sample.modules.clone(),
        hom_images,
    })
}

/// Fresh shared presentation of the complex numbers.
pub fn scalars() -> Arc<CStarCategoryPresentation> {
    CStarCategoryPresentation::complex_numbers().into_shared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random_module(
        base: &Arc<CStarCategoryPresentation>,
        sources: &[usize],
        seed: u64,
        tol: &TolerancePolicy,
    ) -> Arc<HilbertModule> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let total: usize = sources.iter().map(|s| base.dim(*s)).sum();
        HilbertModule::random(base.clone(), sources, total + 2, &mut rng, tol).unwrap()
    }

    /// Unitary between two modules found by matching generators, verified
    /// isometric; panics when the generator grams disagree.
    fn assert_unitarily_isomorphic(a: &Arc<HilbertModule>, b: &Arc<HilbertModule>, tol: &TolerancePolicy) {
        assert_eq!(a.rank(), b.rank(), "ranks differ");
        assert_eq!(a.generators().len(), b.generators().len());
        let images: Vec<ModuleElement> =
            (0..a.generators().len()).map(|i| b.generator_element(i)).collect();
        let u = operator::make_operator(a, b, &images, tol).unwrap();
        let uu = u.star(tol).unwrap().compose(&u, tol).unwrap();
        let id_a = operator::identity(a, tol).unwrap();
        assert!(uu.distance(&id_a) < 1e-8, "generator matching is not isometric");
        let uut = u.compose(&u.star(tol).unwrap(), tol).unwrap();
        let id_b = operator::identity(b, tol).unwrap();
        assert!(uut.distance(&id_b) < 1e-8, "generator matching is not co-isometric");
    }

    #[test]
    fn representable_tensor_returns_the_fiber() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let sc = scalars();
        let f = ModuleFunctor::representation(&cat, &sc, &tol).unwrap();
        let y = HilbertModule::yoneda(cat.clone(), 0, &tol).unwrap();
        let diagram = PrecompleteDiagram { functor: f.clone(), module: y };
        let (tensor, cone) = interior_tensor(&diagram, &tol).unwrap();
        // M_n tensored over itself against C^n is the fiber C^n.
        assert_eq!(tensor.rank(), 2);
        assert_unitarily_isomorphic(&tensor, &f.modules[0], &tol);
        let _ = cone;
    }

    #[test]
    fn identity_functor_tensor_recovers_the_module() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let yf = ModuleFunctor::yoneda(&cat, &tol).unwrap();
        let h = random_module(&cat, &[0, 0], 60, &tol);
        let diagram = PrecompleteDiagram { functor: yf, module: h.clone() };
        let (tensor, _) = interior_tensor(&diagram, &tol).unwrap();
        assert_eq!(tensor.rank(), h.rank());
        // Tensor generators are (x_i, id-generator), matching h generators.
        assert_unitarily_isomorphic(&tensor, &h, &tol);
    }

    #[test]
    fn localize_agrees_with_representation_tensor() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 1)]).into_shared();
        let sc = scalars();
        let f = ModuleFunctor::representation(&cat, &sc, &tol).unwrap();
        let h = random_module(&cat, &[0, 1], 61, &tol);
        let diagram = PrecompleteDiagram { functor: f, module: h.clone() };
        let (tensor, _) = interior_tensor(&diagram, &tol).unwrap();
        assert_eq!(tensor.rank(), h.rank());
    }

    #[test]
    fn canonical_cone_is_limit_padded_cone_is_not() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let yf = ModuleFunctor::yoneda(&cat, &tol).unwrap();
        let h = random_module(&cat, &[0], 62, &tol);
        let diagram = PrecompleteDiagram { functor: yf.clone(), module: h };
        let (_, cone) = interior_tensor(&diagram, &tol).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(63);
        let report = verify_cone(&cone, &diagram, &mut rng, 10, &tol).unwrap();
        assert!(report.is_limit, "{report:?}");
        assert!(report.norm_defect <= 1e-8);
        assert!(report.equality_defect <= 1e-8, "yoneda is faithful");

        // Pad the apex with an extra representable summand.
        let y = HilbertModule::yoneda(cat.clone(), 0, &tol).unwrap();
        let (padded, inj, _) =
            crate::hilbert::direct_sum(&[cone.apex.clone(), y], &tol).unwrap();
        let legs: Vec<ModuleOperator> = cone
            .legs
            .iter()
            .map(|l| inj[0].compose(l, &tol).unwrap())
            .collect();
        let padded_cone = ConeStructure { apex: padded, legs, pairs: cone.pairs.clone() };
        let report = verify_cone(&padded_cone, &diagram, &mut rng, 10, &tol).unwrap();
        assert!(!report.is_limit, "padding must break density");
    }

    #[test]
    fn characterize_full_corner_passes_deficient_corner_pinpointed() {
        let tol = TolerancePolicy::default();
        // Product base C x C: endomorphism algebras split into two blocks,
        // so a corner supported in one block genuinely fails to generate.
        let mut homs = BTreeMap::new();
        homs.insert((0usize, 0usize), vec![ComplexMatrix::identity(1)]);
        homs.insert((1, 1), vec![ComplexMatrix::identity(1)]);
        let base = CStarCategoryPresentation::new(
            vec![
                crate::cat::CatObject { name: "A".into(), dim: 1 },
                crate::cat::CatObject { name: "B".into(), dim: 1 },
            ],
            homs,
            true,
            crate::cat::StarOp::Adjoint,
            &tol,
        )
        .unwrap()
        .into_shared();
        let m1 = random_module(&base, &[0, 1], 64, &tol);
        let m2 = random_module(&base, &[0], 65, &tol);
        let sample = SampleCategory::new(&[m1.clone(), m2.clone()], &tol).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(66);

        let full: Vec<ModuleOperator> = sample
            .modules
            .iter()
            .map(|m| operator::identity(m, &tol).unwrap())
            .collect();
        let report =
            characterize_module_category(&sample, &full, &mut rng, &tol).unwrap();
        assert!(report.pass, "{report:?}");

        // Corner supported on the A-block only: the action of the central
        // unit of A.
        let unit_a = base.unit(0).unwrap();
        let block_projection = |m: &Arc<HilbertModule>| -> ModuleOperator {
            let mut coeff = ComplexMatrix::zeros(m.total_dim(), m.total_dim());
            for (i, g) in m.generators().iter().enumerate() {
                if g.source == 0 {
                    coeff.set_block(m.offsets()[i], m.offsets()[i], &unit_a.mat);
                }
            }
            operator::from_coeff(m.clone(), m.clone(), coeff, &tol).unwrap()
        };
        let deficient = vec![block_projection(&m1), block_projection(&m2)];
        let report =
            characterize_module_category(&sample, &deficient, &mut rng, &tol).unwrap();
        assert!(!report.pass);
        assert!(!report.verdicts[0].generating, "m1 has a B-part the corner misses: {report:?}");
        assert!(report.verdicts[1].generating, "m2 is purely an A-module: {report:?}");
    }

    #[test]
    fn absolutely_compact_everything_in_finite_dimensions() {
        let tol = TolerancePolicy::default();
        let base = scalars();
        let h = random_module(&base, &[0, 0], 67, &tol);
        let k = random_module(&base, &[0], 68, &tol);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(69);
        let images: Vec<ModuleElement> = h
            .generators()
            .iter()
            .map(|g| k.random_element(&mut rng, g.source))
            .collect();
        let f = operator::make_operator(&h, &k, &images, &tol).unwrap();
        let z = random_module(&base, &[0], 70, &tol);
        let h1_imgs: Vec<ModuleElement> = z
            .generators()
            .iter()
            .map(|g| h.random_element(&mut rng, g.source))
            .collect();
        let h1 = operator::make_operator(&z, &h, &h1_imgs, &tol).unwrap();
        let h2_imgs: Vec<ModuleElement> = z
            .generators()
            .iter()
            .map(|g| k.random_element(&mut rng, g.source))
            .collect();
        let h2 = operator::make_operator(&z, &k, &h2_imgs, &tol).unwrap();
        let p = operator::identity(&z, &tol).unwrap();
        let ctx = vec![(z.clone(), h1, h2, p)];
        assert!(absolutely_compact(&f, &ctx, &tol).unwrap());
        let zero = operator::zero(&h, &k, &tol).unwrap();
        assert!(absolutely_compact(&zero, &ctx, &tol).unwrap());
    }
}
