//! Hilbert modules over a presented C*-category: generators with a positive
//! Gram matrix, module elements, inner products and localization.

pub mod operator;
pub mod spaces;

pub use operator::{least_bound, make_operator, ModuleOperator};
pub use spaces::{compact_membership, endomorphism_presentation, OperatorSpace};

use crate::cat::{CatElement, CatError, CStarCategoryPresentation};
use crate::numerics::{self, eigen, ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModuleError {
    #[error("gram matrix is not positive: offending eigenvalue {min_eig:.6e}")]
    GramNotPositive { min_eig: f64 },
    #[error("coefficient shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("elements belong to different modules")]
    ModuleMismatch,
    #[error("modules live over different bases")]
    BaseMismatch,
    #[error("generator images are inconsistent on the null space: residual {residual:.3e}")]
    NotWellDefined { residual: f64 },
    #[error("adjoint system is inconsistent: residual {residual:.3e} above gate {gate:.3e}")]
    AdjointSolveFailed { residual: f64, gate: f64 },
    #[error("image gram is not dominated on the support of the domain gram")]
    Unbounded,
    #[error("two positivity routes disagree: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Cat(#[from] CatError),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

/// A named generator with its source object.
#[derive(Debug, Clone)]
pub struct Generator {
    pub label: String,
    pub source: usize,
}

/// Isometry data identifying the quotient of the generator coefficient space
/// by the Gram kernel with a concrete Hilbert space: phi maps coefficient
/// vectors to the localized space so that <phi v, phi w> = <v, G w>.
#[derive(Debug, Clone)]
pub struct Localization {
    pub phi: ComplexMatrix,
    pub phi_pinv: ComplexMatrix,
    pub kernel: ComplexMatrix,
    pub rank: usize,
}

/// A Hilbert module presented by finitely many generators and a positive
/// block Gram matrix over the base category.
#[derive(Debug)]
pub struct HilbertModule {
    base: Arc<CStarCategoryPresentation>,
    generators: Vec<Generator>,
    offsets: Vec<usize>,
    total_dim: usize,
    gram: ComplexMatrix,
    loc: Localization,
}

impl HilbertModule {
    /// Construct a module from generators and a Gram matrix given in block
    /// form: gram_blocks[i][j] in hom(source(x_j), source(x_i)). Rejects
    /// non-positive grams and blocks outside the declared hom-spaces.
    pub fn build(
        base: Arc<CStarCategoryPresentation>,
        generators: Vec<Generator>,
        gram_blocks: &[Vec<ComplexMatrix>],
        tol: &TolerancePolicy,
    ) -> Result<Arc<Self>, ModuleError> {
        let n = generators.len();
        if gram_blocks.len() != n || gram_blocks.iter().any(|r| r.len() != n) {
            return Err(ModuleError::ShapeMismatch(format!(
                "gram must be {n}x{n} blocks"
            )));
        }
        let mut offsets = Vec::with_capacity(n);
        let mut total = 0usize;
        for g in &generators {
            offsets.push(total);
            total += base.dim(g.source);
        }
        let mut gram = ComplexMatrix::zeros(total, total);
        for i in 0..n {
            for j in 0..n {
                let b = &gram_blocks[i][j];
                let want_rows = base.dim(generators[i].source);
                let want_cols = base.dim(generators[j].source);
                if b.rows() != want_rows || b.cols() != want_cols {
                    return Err(ModuleError::ShapeMismatch(format!(
                        "gram block ({i},{j}) has shape {}x{}, expected {}x{}",
                        b.rows(),
                        b.cols(),
                        want_rows,
                        want_cols
                    )));
                }
                // Blocks must lie in the declared hom-space.
                let el = CatElement {
                    src: generators[j].source,
                    dst: generators[i].source,
                    mat: b.clone(),
                };
                base.check_membership(&el, tol)?;
                gram.set_block(offsets[i], offsets[j], b);
            }
        }
        Self::from_dense_gram(base, generators, gram, tol)
    }

    /// Internal entry point taking the already-assembled Gram matrix.
    pub fn from_dense_gram(
        base: Arc<CStarCategoryPresentation>,
        generators: Vec<Generator>,
        gram: ComplexMatrix,
        tol: &TolerancePolicy,
    ) -> Result<Arc<Self>, ModuleError> {
        let mut offsets = Vec::with_capacity(generators.len());
        let mut total = 0usize;
        for g in &generators {
            offsets.push(total);
            total += base.dim(g.source);
        }
        if gram.rows() != total || gram.cols() != total {
            return Err(ModuleError::ShapeMismatch(format!(
                "gram is {}x{}, generators need {total}x{total}",
                gram.rows(),
                gram.cols()
            )));
        }
        let scale = numerics::operator_norm(&gram).max(1e-300);
        if gram.sub_mat(&gram.adjoint()).fro_norm() > tol.gate(scale) * 10.0 {
            return Err(ModuleError::ShapeMismatch(
                "gram is not self-adjoint as a block matrix".into(),
            ));
        }
        let (vals, basis) = eigen::jacobi_hermitian(&gram)?;
        if let Some(min) = vals.last() {
            if *min < -tol.eig_clip * scale {
                return Err(ModuleError::GramNotPositive { min_eig: *min });
            }
        }
        let clip = tol.eig_clip * scale;
        let mut phi_rows = Vec::new();
        let mut kernel_cols = Vec::new();
        for (i, lam) in vals.iter().enumerate() {
            if *lam > clip {
                phi_rows.push((i, lam.sqrt()));
            } else {
                kernel_cols.push(i);
            }
        }
        let rank = phi_rows.len();
        let mut phi = ComplexMatrix::zeros(rank, total);
        let mut phi_pinv = ComplexMatrix::zeros(total, rank);
        for (row, (col, s)) in phi_rows.iter().enumerate() {
            for k in 0..total {
                phi[(row, k)] = basis[(k, *col)].conj() * *s;
                phi_pinv[(k, row)] = basis[(k, *col)] / *s;
            }
        }
        let mut kernel = ComplexMatrix::zeros(total, kernel_cols.len());
        for (j, col) in kernel_cols.iter().enumerate() {
            kernel.set_column(j, &basis.column(*col));
        }
        Ok(Arc::new(HilbertModule {
            base,
            generators,
            offsets,
            total_dim: total,
            gram,
            loc: Localization { phi, phi_pinv, kernel, rank },
        }))
    }

    /// The representable module on a unital base: one generator whose Gram
    /// entry is the unit of C(A).
    pub fn yoneda(
        base: Arc<CStarCategoryPresentation>,
        object: usize,
        tol: &TolerancePolicy,
    ) -> Result<Arc<Self>, ModuleError> {
        let unit = base.unit(object)?; // NotUnital for non-unital bases
        let sq = base.compose(&base.star(&unit), &unit)?;
        let name = base.objects()[object].name.clone();
        Self::build(
            base.clone(),
            vec![Generator { label: format!("id_{name}"), source: object }],
            &[vec![sq.mat]],
            tol,
        )
    }

    /// The zero module (no generators).
    pub fn zero(base: Arc<CStarCategoryPresentation>, tol: &TolerancePolicy) -> Arc<Self> {
        Self::from_dense_gram(base, vec![], ComplexMatrix::zeros(0, 0), tol)
            .expect("zero module is always valid")
    }

    pub fn base(&self) -> &Arc<CStarCategoryPresentation> {
        &self.base
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn localization(&self) -> &Localization {
        &self.loc
    }

    pub fn rank(&self) -> usize {
        self.loc.rank
    }

    /// The i-th generator as an element of H(source(x_i)).
    pub fn generator_element(self: &Arc<Self>, i: usize) -> ModuleElement {
        let mut coeffs = Vec::with_capacity(self.generators.len());
        for (j, g) in self.generators.iter().enumerate() {
            let d = self.base.dim(g.source);
            let a = self.base.dim(self.generators[i].source);
            let mut m = ComplexMatrix::zeros(d, a);
            if j == i {
                m = match &self.base.unit(g.source) {
                    Ok(u) => u.mat.clone(),
                    Err(_) => ComplexMatrix::identity(d),
                };
            }
            coeffs.push(m);
        }
        ModuleElement { module: self.clone(), object: self.generators[i].source, coeffs }
    }

    pub fn element(
        self: &Arc<Self>,
        object: usize,
        coeffs: Vec<ComplexMatrix>,
    ) -> Result<ModuleElement, ModuleError> {
        if coeffs.len() != self.generators.len() {
            return Err(ModuleError::ShapeMismatch(format!(
                "expected {} coefficient blocks",
                self.generators.len()
            )));
        }
        for (i, (c, g)) in coeffs.iter().zip(self.generators.iter()).enumerate() {
            if c.rows() != self.base.dim(g.source) || c.cols() != self.base.dim(object) {
                return Err(ModuleError::ShapeMismatch(format!(
                    "coefficient {i} has shape {}x{}, expected {}x{}",
                    c.rows(),
                    c.cols(),
                    self.base.dim(g.source),
                    self.base.dim(object)
                )));
            }
        }
        Ok(ModuleElement { module: self.clone(), object, coeffs })
    }

    pub fn zero_element(self: &Arc<Self>, object: usize) -> ModuleElement {
        let coeffs = self
            .generators
            .iter()
            .map(|g| ComplexMatrix::zeros(self.base.dim(g.source), self.base.dim(object)))
            .collect();
        ModuleElement { module: self.clone(), object, coeffs }
    }

    pub fn random_element(
        self: &Arc<Self>,
        rng: &mut impl rand::Rng,
        object: usize,
    ) -> ModuleElement {
        let coeffs = self
            .generators
            .iter()
            .map(|g| {
                let basis = self.base.hom_basis(object, g.source);
                let mut m =
                    ComplexMatrix::zeros(self.base.dim(g.source), self.base.dim(object));
                for b in basis {
                    let c =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m = m.add_mat(&b.scale(c));
                }
                m
            })
            .collect();
        ModuleElement { module: self.clone(), object, coeffs }
    }

    /// Random module over an arbitrary base: the Gram matrix is assembled as
    /// T* T from `depth` rows of random hom elements, so every block lies in
    /// its hom-span and positivity holds by construction.
    pub fn random(
        base: Arc<CStarCategoryPresentation>,
        sources: &[usize],
        depth: usize,
        rng: &mut impl rand::Rng,
        tol: &TolerancePolicy,
    ) -> Result<Arc<Self>, ModuleError> {
        let n_obj = base.objects().len();
        let n = sources.len();
        let dims: Vec<usize> = sources.iter().map(|s| base.dim(*s)).collect();
        let total: usize = dims.iter().sum();
        let mut offsets = Vec::with_capacity(n);
        {
            let mut o = 0;
            for d in &dims {
                offsets.push(o);
                o += d;
            }
        }
        let mut gram = ComplexMatrix::zeros(total, total);
        for _ in 0..depth.max(1) {
            let w = rng.gen_range(0..n_obj);
            let row: Vec<ComplexMatrix> = sources
                .iter()
                .map(|s| {
                    let basis = base.hom_basis(*s, w);
                    let mut m = ComplexMatrix::zeros(base.dim(w), base.dim(*s));
                    for b in basis {
                        let c = Complex64::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        );
                        m = m.add_mat(&b.scale(c));
                    }
                    m
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let block = row[i].adjoint().matmul(&row[j]);
                    let mut cur = gram.block(offsets[i], offsets[j], dims[i], dims[j]);
                    cur = cur.add_mat(&block);
                    gram.set_block(offsets[i], offsets[j], &cur);
                }
            }
        }
        let generators = sources
            .iter()
            .enumerate()
            .map(|(i, s)| Generator { label: format!("x{i}"), source: *s })
            .collect();
        Self::from_dense_gram(base, generators, gram, tol)
    }

    /// Spanning family of H(A) with trivial null space: greedy pivoted
    /// Gram-Schmidt over generator-times-basis coefficient tuples, under the
    /// scalar form tr<h, k>.
    pub fn canonical_basis(self: &Arc<Self>, object: usize, tol: &TolerancePolicy) -> Vec<ModuleElement> {
        let mut candidates: Vec<ModuleElement> = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            for b in self.base.hom_basis(object, g.source) {
                let mut coeffs: Vec<ComplexMatrix> = self
                    .generators
                    .iter()
                    .map(|h| ComplexMatrix::zeros(self.base.dim(h.source), self.base.dim(object)))
                    .collect();
                coeffs[i] = b.clone();
                candidates.push(ModuleElement {
                    module: self.clone(),
                    object,
                    coeffs,
                });
            }
        }
        let scale = candidates
            .iter()
            .map(|e| e.scalar_pairing(e).re)
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let clip = (tol.eig_clip * scale).max(1e-26);
        let mut basis: Vec<ModuleElement> = Vec::new();
        for mut cand in candidates {
            for _ in 0..2 {
                for u in &basis {
                    let c = u.scalar_pairing(&cand);
                    cand = cand.sub(&u.scale(c)).expect("same module");
                }
            }
            let sq = cand.scalar_pairing(&cand).re;
            if sq > clip {
                basis.push(cand.scale(Complex64::new(1.0 / sq.sqrt(), 0.0)));
            }
        }
        basis
    }

    /// dim H(A) at the policy's clip level.
    pub fn space_dim(self: &Arc<Self>, object: usize, tol: &TolerancePolicy) -> usize {
        self.canonical_basis(object, tol).len()
    }
}

/// An element of H(A): coefficients f_i in hom(A, source(x_i)) representing
/// the combination sum_i x_i . f_i. Equality of elements is norm equality;
/// coefficients are non-unique modulo the Gram kernel.
#[derive(Debug, Clone)]
pub struct ModuleElement {
    pub module: Arc<HilbertModule>,
    pub object: usize,
    pub coeffs: Vec<ComplexMatrix>,
}

impl ModuleElement {
    /// Stacked coefficient matrix, total_dim x dim(A).
    pub fn coeff_matrix(&self) -> ComplexMatrix {
        let m = &self.module;
        let mut out = ComplexMatrix::zeros(m.total_dim, m.base.dim(self.object));
        for (i, c) in self.coeffs.iter().enumerate() {
            out.set_block(m.offsets[i], 0, c);
        }
        out
    }

    /// The localized frame of the element: phi . coeffs, rank x dim(A).
    pub fn localized(&self) -> ComplexMatrix {
        self.module.loc.phi.matmul(&self.coeff_matrix())
    }

    /// C-valued inner product <self, other> in hom(B, A) for self at A,
    /// other at B; conjugate-linear in self. Computed through the localized
    /// frames: F* G K = (phi F)* (phi K) up to clipped Gram eigenvalues.
    pub fn inner_product(&self, other: &ModuleElement) -> Result<CatElement, ModuleError> {
        if !Arc::ptr_eq(&self.module, &other.module) {
            return Err(ModuleError::ModuleMismatch);
        }
        let mat = self.localized().adjoint().matmul(&other.localized());
        Ok(CatElement { src: other.object, dst: self.object, mat })
    }

    /// tr <self, other>: the scalar pairing behind canonical bases.
    pub fn scalar_pairing(&self, other: &ModuleElement) -> Complex64 {
        self.localized().adjoint().matmul(&other.localized()).trace()
    }

    pub fn norm(&self) -> f64 {
        let ip = self
            .inner_product(self)
            .expect("self pairing is always defined");
        numerics::operator_norm(&ip.mat).max(0.0).sqrt()
    }

    pub fn add(&self, other: &ModuleElement) -> Result<ModuleElement, ModuleError> {
        if !Arc::ptr_eq(&self.module, &other.module) || self.object != other.object {
            return Err(ModuleError::ModuleMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a.add_mat(b))
            .collect();
        Ok(ModuleElement { module: self.module.clone(), object: self.object, coeffs })
    }

    pub fn sub(&self, other: &ModuleElement) -> Result<ModuleElement, ModuleError> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> ModuleElement {
        ModuleElement {
            module: self.module.clone(),
            object: self.object,
            coeffs: self.coeffs.iter().map(|m| m.scale(c)).collect(),
        }
    }

    /// Right action h . f for f: B -> A in the base, landing in H(B).
    pub fn act(&self, f: &CatElement) -> Result<ModuleElement, ModuleError> {
        if f.dst != self.object {
            return Err(ModuleError::ShapeMismatch(format!(
                "action morphism must land in object {}",
                self.object
            )));
        }
        let coeffs = self.coeffs.iter().map(|c| c.matmul(&f.mat)).collect();
        Ok(ModuleElement { module: self.module.clone(), object: f.src, coeffs })
    }

    /// Norm distance; elements are equal when this vanishes.
    pub fn distance(&self, other: &ModuleElement) -> Result<f64, ModuleError> {
        Ok(self.sub(other)?.norm())
    }
}

/// Concatenate modules over a common base: generators stacked, Gram
/// block-diagonal. Returns the sum with isometric injections and adjoint
/// projections.
pub fn direct_sum(
    modules: &[Arc<HilbertModule>],
    tol: &TolerancePolicy,
) -> Result<(Arc<HilbertModule>, Vec<ModuleOperator>, Vec<ModuleOperator>), ModuleError> {
    let base = match modules.first() {
        Some(m) => m.base.clone(),
        None => return Err(ModuleError::ShapeMismatch("empty direct sum".into())),
    };
    for m in modules {
        if !Arc::ptr_eq(&m.base, &base) {
            return Err(ModuleError::BaseMismatch);
        }
    }
    let mut generators = Vec::new();
    let mut total = 0usize;
    let mut piece_offsets = Vec::new();
    for (k, m) in modules.iter().enumerate() {
        piece_offsets.push(total);
        for g in &m.generators {
            generators.push(Generator { label: format!("{}#{k}", g.label), source: g.source });
        }
        total += m.total_dim;
    }
    let mut gram = ComplexMatrix::zeros(total, total);
    for (k, m) in modules.iter().enumerate() {
        gram.set_block(piece_offsets[k], piece_offsets[k], &m.gram);
    }
    let sum = HilbertModule::from_dense_gram(base, generators, gram, tol)?;
    let mut injections = Vec::new();
    let mut projections = Vec::new();
    for (k, m) in modules.iter().enumerate() {
        let mut coeff = ComplexMatrix::zeros(total, m.total_dim);
        coeff.set_block(piece_offsets[k], 0, &ComplexMatrix::identity(m.total_dim));
        let inj = operator::from_coeff(m.clone(), sum.clone(), coeff, tol)?;
        let proj = inj.star(tol)?;
        injections.push(inj);
        projections.push(proj);
    }
    Ok((sum, injections, projections))
}

/// Split a self-adjoint idempotent p on H: returns the module pH together
/// with the isometry u: pH -> H satisfying u u* = p and u* u = id.
pub fn split_projection(
    module: &Arc<HilbertModule>,
    p: &ModuleOperator,
    tol: &TolerancePolicy,
) -> Result<(Arc<HilbertModule>, ModuleOperator), ModuleError> {
    let scale = p.norm().max(1.0);
    let idem = p.compose(p, tol)?.sub(p, tol)?;
    if idem.norm() > tol.gate(scale) * 100.0 || p.sub(&p.star(tol)?, tol)?.norm() > tol.gate(scale) * 100.0 {
        return Err(ModuleError::ShapeMismatch(
            "splitting needs a self-adjoint idempotent".into(),
        ));
    }
    if !Arc::ptr_eq(module, p.domain()) {
        return Err(ModuleError::ModuleMismatch);
    }
    let h = p.domain();
    let coeff = p.coeff().clone();
    let gram = coeff.adjoint().matmul(&h.gram).matmul(&coeff);
    let generators = h
        .generators
        .iter()
        .map(|g| Generator { label: format!("p:{}", g.label), source: g.source })
        .collect();
    let ph = HilbertModule::from_dense_gram(h.base.clone(), generators, gram, tol)?;
    let u = operator::from_coeff(ph.clone(), h.clone(), coeff, tol)?;
    Ok((ph, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::CStarCategoryPresentation;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalars() -> Arc<CStarCategoryPresentation> {
        CStarCategoryPresentation::complex_numbers().into_shared()
    }

    #[test]
    fn yoneda_over_scalars_is_the_line() {
        let tol = TolerancePolicy::default();
        let base = scalars();
        let y = HilbertModule::yoneda(base, 0, &tol).unwrap();
        assert_eq!(y.rank(), 1);
        assert_eq!(y.space_dim(0, &tol), 1);
    }

    #[test]
    fn negative_gram_is_rejected() {
        let tol = TolerancePolicy::default();
        let base = scalars();
        let g = vec![vec![ComplexMatrix::diag(&[c(-0.5, 0.0)])]];
        let err = HilbertModule::build(
            base,
            vec![Generator { label: "x".into(), source: 0 }],
            &g,
            &tol,
        )
        .unwrap_err();
        match err {
            ModuleError::GramNotPositive { min_eig } => assert!((min_eig + 0.5).abs() < 1e-9),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn generator_inner_products_reproduce_gram() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        // Random PSD block gram over two generators at A.
        let t = ComplexMatrix::from_fn(4, 4, |_, _| {
            use rand::Rng;
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let gram = t.adjoint().matmul(&t);
        let m = HilbertModule::from_dense_gram(
            base,
            vec![
                Generator { label: "x".into(), source: 0 },
                Generator { label: "y".into(), source: 0 },
            ],
            gram.clone(),
            &tol,
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let gi = m.generator_element(i);
                let gj = m.generator_element(j);
                let ip = gi.inner_product(&gj).unwrap();
                let want = gram.block(2 * i, 2 * j, 2, 2);
                assert!(ip.mat.sub_mat(&want).fro_norm() < 1e-10);
            }
        }
    }

    #[test]
    fn canonical_basis_counts_rank() {
        let tol = TolerancePolicy::default();
        let base = scalars();
        // Three generators over the scalars with a rank-2 gram.
        let v = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
        ]);
        let gram = v.adjoint().matmul(&v);
        let m = HilbertModule::from_dense_gram(
            base,
            (0..3)
                .map(|i| Generator { label: format!("x{i}"), source: 0 })
                .collect(),
            gram,
            &tol,
        )
        .unwrap();
        assert_eq!(m.rank(), 2);
        assert_eq!(m.space_dim(0, &tol), 2);
        let zero_gram = HilbertModule::from_dense_gram(
            m.base().clone(),
            vec![Generator { label: "x".into(), source: 0 }],
            ComplexMatrix::zeros(1, 1),
            &tol,
        )
        .unwrap();
        assert_eq!(zero_gram.space_dim(0, &tol), 0);
    }

    #[test]
    fn localization_is_isometric_on_elements() {
        let tol = TolerancePolicy::default();
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2), ("B", 1)]).into_shared();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let t = ComplexMatrix::from_fn(3, 3, |_, _| {
            use rand::Rng;
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let gram = t.adjoint().matmul(&t);
        let m = HilbertModule::from_dense_gram(
            base,
            vec![
                Generator { label: "x".into(), source: 0 },
                Generator { label: "y".into(), source: 1 },
            ],
            gram,
            &tol,
        )
        .unwrap();
        for _ in 0..5 {
            let h = m.random_element(&mut rng, 0);
            let k = m.random_element(&mut rng, 1);
            let ip = h.inner_product(&k).unwrap();
            let lip = h.localized().adjoint().matmul(&k.localized());
            assert!(ip.mat.sub_mat(&lip).fro_norm() < 1e-9);
        }
    }
}
