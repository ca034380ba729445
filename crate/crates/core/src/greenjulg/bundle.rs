//! Equivariant Hilbert bundles over a finite groupoid: functors into
//! finite-dimensional Hilbert spaces with unitary action.

use super::groupoid::{FiniteGroupoid, GroupoidError};
use crate::numerics::{self, ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;

/// Fiber dimensions per object plus one unitary per arrow
/// (shape dim(dst) x dim(src)).
#[derive(Debug, Clone)]
pub struct EquivariantBundle {
    pub fibers: Vec<usize>,
    pub action: Vec<ComplexMatrix>,
}

impl EquivariantBundle {
    pub fn total_dim(&self) -> usize {
        self.fibers.iter().sum()
    }

    pub fn fiber_offset(&self, u: usize) -> usize {
        self.fibers[..u].iter().sum()
    }

    pub fn validate(
        &self,
        groupoid: &FiniteGroupoid,
        tol: &TolerancePolicy,
    ) -> Result<(), GroupoidError> {
        if self.fibers.len() != groupoid.objects.len()
            || self.action.len() != groupoid.n_arrows()
        {
            return Err(GroupoidError::InvalidGroupoid(
                "bundle tables do not match the groupoid".into(),
            ));
        }
        let gate = tol.gate(1.0) * 100.0;
        for (g, u) in self.action.iter().enumerate() {
            let a = &groupoid.arrows[g];
            if u.rows() != self.fibers[a.dst] || u.cols() != self.fibers[a.src] {
                return Err(GroupoidError::InvalidGroupoid(format!(
                    "action of arrow {g} has the wrong shape"
                )));
            }
            let gi = groupoid.inverse[g];
            if self.action[gi].sub_mat(&u.adjoint()).fro_norm() > gate {
                return Err(GroupoidError::InvalidGroupoid(format!(
                    "action of arrow {g} is not unitary against its inverse"
                )));
            }
        }
        for (x, &e) in groupoid.identity.iter().enumerate() {
            if self.action[e]
                .sub_mat(&ComplexMatrix::identity(self.fibers[x]))
                .fro_norm()
                > gate
            {
                return Err(GroupoidError::InvalidGroupoid(format!(
                    "identity of object {x} does not act as the identity"
                )));
            }
        }
        for g in 0..groupoid.n_arrows() {
            for h in 0..groupoid.n_arrows() {
                if let Some(k) = groupoid.compose[g][h] {
                    let lhs = self.action[g].matmul(&self.action[h]);
                    if lhs.sub_mat(&self.action[k]).fro_norm() > gate {
                        return Err(GroupoidError::InvalidGroupoid(format!(
                            "action breaks composition on ({g},{h})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Bundle of the representable action at `x`: fiber at u is the free
    /// Hilbert space on Hom(x, u), arrows act by post-composition.
    pub fn representable(groupoid: &FiniteGroupoid, x: usize) -> Result<Self, GroupoidError> {
        if x >= groupoid.objects.len() {
            return Err(GroupoidError::UnknownObject(format!("object index {x}")));
        }
        let homs: Vec<Vec<usize>> = (0..groupoid.objects.len())
            .map(|u| groupoid.hom_arrows(x, u))
            .collect();
        let fibers: Vec<usize> = homs.iter().map(|h| h.len()).collect();
        let mut action = Vec::with_capacity(groupoid.n_arrows());
        for g in 0..groupoid.n_arrows() {
            let a = &groupoid.arrows[g];
            let mut m = ComplexMatrix::zeros(fibers[a.dst], fibers[a.src]);
            for (col, &f) in homs[a.src].iter().enumerate() {
                let gf = groupoid.compose[g][f].expect("post-composition is defined");
                let row = homs[a.dst]
                    .iter()
                    .position(|&k| k == gf)
                    .expect("composite lands in Hom(x, dst)");
                m[(row, col)] = Complex64::new(1.0, 0.0);
            }
            action.push(m);
        }
        Ok(EquivariantBundle { fibers, action })
    }

    /// The zero bundle.
    pub fn zero(groupoid: &FiniteGroupoid) -> Self {
        EquivariantBundle {
            fibers: vec![0; groupoid.objects.len()],
            action: groupoid
                .arrows
                .iter()
                .map(|_| ComplexMatrix::zeros(0, 0))
                .collect(),
        }
    }

    /// Fiberwise direct sum.
    pub fn direct_sum(&self, other: &EquivariantBundle, groupoid: &FiniteGroupoid) -> Self {
        let fibers: Vec<usize> = self
            .fibers
            .iter()
            .zip(other.fibers.iter())
            .map(|(a, b)| a + b)
            .collect();
        let action = (0..groupoid.n_arrows())
            .map(|g| {
                let a = &groupoid.arrows[g];
                let mut m = ComplexMatrix::zeros(fibers[a.dst], fibers[a.src]);
                m.set_block(0, 0, &self.action[g]);
                m.set_block(self.fibers[a.dst], self.fibers[a.src], &other.action[g]);
                m
            })
            .collect();
        EquivariantBundle { fibers, action }
    }

    /// Conjugate each fiber by a unitary: the action becomes
    /// v_dst U_g v_src^*.
    pub fn conjugate(&self, groupoid: &FiniteGroupoid, unitaries: &[ComplexMatrix]) -> Self {
        let action = (0..groupoid.n_arrows())
            .map(|g| {
                let a = &groupoid.arrows[g];
                unitaries[a.dst]
                    .matmul(&self.action[g])
                    .matmul(&unitaries[a.src].adjoint())
            })
            .collect();
        EquivariantBundle { fibers: self.fibers.clone(), action }
    }

    /// Character of the action: trace of U_g per endo-arrow (0 for arrows
    /// between distinct objects).
    pub fn character(&self, groupoid: &FiniteGroupoid) -> Vec<Complex64> {
        (0..groupoid.n_arrows())
            .map(|g| {
                let a = &groupoid.arrows[g];
                if a.src == a.dst {
                    self.action[g].trace()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}

/// An equivariant (intertwining) map between bundles: one block per object.
#[derive(Debug, Clone)]
pub struct EquivariantMap {
    pub blocks: Vec<ComplexMatrix>,
}

impl EquivariantMap {
    /// Gamma_b arithmetic: the sup norm is the exact maximum of the fiber
    /// operator norms.
    pub fn sup_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(numerics::operator_norm)
            .fold(0.0, f64::max)
    }

    pub fn compose(&self, other: &EquivariantMap) -> EquivariantMap {
        EquivariantMap {
            blocks: self
                .blocks
                .iter()
                .zip(other.blocks.iter())
                .map(|(a, b)| a.matmul(b))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> EquivariantMap {
        EquivariantMap { blocks: self.blocks.iter().map(|b| b.adjoint()).collect() }
    }

    /// Residual of the intertwining relation over all arrows.
    pub fn equivariance_residual(
        &self,
        groupoid: &FiniteGroupoid,
        from: &EquivariantBundle,
        to: &EquivariantBundle,
    ) -> f64 {
        let mut worst = 0.0f64;
        for g in 0..groupoid.n_arrows() {
            let a = &groupoid.arrows[g];
            let lhs = self.blocks[a.dst].matmul(&from.action[g]);
            let rhs = to.action[g].matmul(&self.blocks[a.src]);
            worst = worst.max(lhs.sub_mat(&rhs).fro_norm());
        }
        worst
    }
}

/// Basis of the space of equivariant maps from one bundle to another,
/// solved from the linear system T U_g = U_g T blockwise and orthonormalized
/// under the total trace pairing.
pub fn intertwiner_space(
    groupoid: &FiniteGroupoid,
    from: &EquivariantBundle,
    to: &EquivariantBundle,
    tol: &TolerancePolicy,
) -> Vec<EquivariantMap> {
    // Unknowns: entries of each block T_u (dim to_u x from_u).
    let n_obj = groupoid.objects.len();
    let block_sizes: Vec<usize> = (0..n_obj).map(|u| to.fibers[u] * from.fibers[u]).collect();
    let total: usize = block_sizes.iter().sum();
    if total == 0 {
        return vec![];
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
    // Constraint rows: for each arrow g: T_dst U_g - U'_g T_src = 0.
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for g in 0..groupoid.n_arrows() {
        let a = &groupoid.arrows[g];
        let (s, d) = (a.src, a.dst);
        for i in 0..to.fibers[d] {
            for j in 0..from.fibers[s] {
                let mut row = vec![Complex64::new(0.0, 0.0); total];
                // (T_d U_g)[i][j] = sum_k T_d[i][k] U_g[k][j]
                for k in 0..from.fibers[d] {
                    row[offsets[d] + i * from.fibers[d] + k] += from.action[g][(k, j)];
                }
                // (U'_g T_s)[i][j] = sum_k U'_g[i][k] T_s[k][j]
                for k in 0..to.fibers[s] {
                    row[offsets[s] + k * from.fibers[s] + j] -= to.action[g][(i, k)];
                }
                rows.push(row);
            }
        }
    }
    let mut m = ComplexMatrix::zeros(rows.len(), total);
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m[(r, c)] = *v;
        }
    }
    let normal = m.adjoint().matmul(&m);
    let (vals, basis) = numerics::eigen::jacobi_hermitian(&normal).expect("Jacobi");
    let top = vals.first().copied().unwrap_or(0.0).max(1.0);
    let mut out = Vec::new();
    for (idx, lam) in vals.iter().enumerate() {
        if *lam <= tol.eig_clip * top {
            let v = basis.column(idx);
            let blocks: Vec<ComplexMatrix> = (0..n_obj)
                .map(|u| {
                    let mut b = ComplexMatrix::zeros(to.fibers[u], from.fibers[u]);
                    for i in 0..to.fibers[u] {
                        for j in 0..from.fibers[u] {
                            b[(i, j)] = v[offsets[u] + i * from.fibers[u] + j];
                        }
                    }
                    b
                })
                .collect();
            out.push(EquivariantMap { blocks });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representable_bundles_are_valid() {
        let tol = TolerancePolicy::default();
        for name in ["trivial", "Z3", "S3", "pair2xZ2"] {
            let g = FiniteGroupoid::by_name(name).unwrap();
            for x in 0..g.objects.len() {
                let b = EquivariantBundle::representable(&g, x).unwrap();
                b.validate(&g, &tol).unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
    }

    #[test]
    fn regular_character_values() {
        let g = FiniteGroupoid::symmetric_3();
        let b = EquivariantBundle::representable(&g, 0).unwrap();
        assert_eq!(b.fibers, vec![6]);
        let chi = b.character(&g);
        assert!((chi[0].re - 6.0).abs() < 1e-12);
        for v in chi.iter().skip(1) {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn commutant_of_regular_rep_has_group_dimension() {
        let tol = TolerancePolicy::default();
        for (name, order) in [("Z2", 2), ("Z3", 3), ("S3", 6), ("Z2xZ2", 4)] {
            let g = FiniteGroupoid::by_name(name).unwrap();
            let b = EquivariantBundle::representable(&g, 0).unwrap();
            let space = intertwiner_space(&g, &b, &b, &tol);
            assert_eq!(space.len(), order, "{name}");
            for t in &space {
                assert!(t.equivariance_residual(&g, &b, &b) < 1e-9);
            }
        }
    }

    #[test]
    fn two_object_fibers_are_hom_sizes() {
        let g = FiniteGroupoid::connected(2, &FiniteGroupoid::cyclic(2));
        let b = EquivariantBundle::representable(&g, 0).unwrap();
        assert_eq!(b.fibers, vec![2, 2]);
    }
}
