//! Finite groupoids given by explicit composition tables.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupoidError {
    #[error("invalid groupoid: {0}")]
    InvalidGroupoid(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
}

#[derive(Debug, Clone)]
pub struct Arrow {
    pub id: String,
    pub src: usize,
    pub dst: usize,
}

/// A finite groupoid: objects, arrows, total composition data and inverses.
/// `compose[g][h]` is g . h, defined exactly when src(g) = dst(h); the
/// composite runs src(h) -> dst(g).
#[derive(Debug, Clone)]
pub struct FiniteGroupoid {
    pub objects: Vec<String>,
    pub arrows: Vec<Arrow>,
    pub compose: Vec<Vec<Option<usize>>>,
    pub identity: Vec<usize>,
    pub inverse: Vec<usize>,
}

impl FiniteGroupoid {
    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn composable(&self, g: usize, h: usize) -> bool {
        self.arrows[g].src == self.arrows[h].dst
    }

    pub fn hom_arrows(&self, x: usize, y: usize) -> Vec<usize> {
        (0..self.arrows.len())
            .filter(|&g| self.arrows[g].src == x && self.arrows[g].dst == y)
            .collect()
    }

    /// Exact verification of the axioms over the tables.
    pub fn validate(&self) -> Result<(), GroupoidError> {
        let n = self.arrows.len();
        if self.compose.len() != n || self.compose.iter().any(|r| r.len() != n) {
            return Err(GroupoidError::InvalidGroupoid("composition table shape".into()));
        }
        if self.identity.len() != self.objects.len() || self.inverse.len() != n {
            return Err(GroupoidError::InvalidGroupoid("identity/inverse table shape".into()));
        }
        for g in 0..n {
            for h in 0..n {
                match self.compose[g][h] {
                    Some(k) => {
                        if !self.composable(g, h) {
                            return Err(GroupoidError::InvalidGroupoid(format!(
                                "compose defined on non-composable pair ({g},{h})"
                            )));
                        }
                        if self.arrows[k].src != self.arrows[h].src
                            || self.arrows[k].dst != self.arrows[g].dst
                        {
                            return Err(GroupoidError::InvalidGroupoid(format!(
                                "composite ({g},{h}) has wrong endpoints"
                            )));
                        }
                    }
                    None => {
                        if self.composable(g, h) {
                            return Err(GroupoidError::InvalidGroupoid(format!(
                                "missing composite for composable pair ({g},{h})"
                            )));
                        }
                    }
                }
            }
        }
        for (x, &e) in self.identity.iter().enumerate() {
            if self.arrows[e].src != x || self.arrows[e].dst != x {
                return Err(GroupoidError::InvalidGroupoid(format!(
                    "identity of object {x} is not an endo-arrow"
                )));
            }
            for g in 0..n {
                if self.arrows[g].src == x && self.compose[g][e] != Some(g) {
                    return Err(GroupoidError::InvalidGroupoid("right identity law".into()));
                }
                if self.arrows[g].dst == x && self.compose[e][g] != Some(g) {
                    return Err(GroupoidError::InvalidGroupoid("left identity law".into()));
                }
            }
        }
        for g in 0..n {
            let gi = self.inverse[g];
            if self.arrows[gi].src != self.arrows[g].dst
                || self.arrows[gi].dst != self.arrows[g].src
            {
                return Err(GroupoidError::InvalidGroupoid(format!(
                    "inverse of arrow {g} has wrong endpoints"
                )));
            }
            if self.compose[gi][g] != Some(self.identity[self.arrows[g].src])
                || self.compose[g][gi] != Some(self.identity[self.arrows[g].dst])
            {
                return Err(GroupoidError::InvalidGroupoid(format!(
                    "inverse law fails for arrow {g}"
                )));
            }
        }
        for g in 0..n {
            for h in 0..n {
                for k in 0..n {
                    if self.composable(h, k) && self.composable(g, h) {
                        let hk = self.compose[h][k].unwrap();
                        let gh = self.compose[g][h].unwrap();
                        if self.compose[g][hk] != self.compose[gh].get(k).copied().flatten() {
                            return Err(GroupoidError::InvalidGroupoid(
                                "associativity fails".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// One-object groupoid from a group multiplication table
    /// (`table[a][b]` = a * b, identity at index 0).
    pub fn from_group(name: &str, element_names: &[String], table: &[Vec<usize>]) -> Self {
        let n = element_names.len();
        let mut inverse = vec![0usize; n];
        for a in 0..n {
            for b in 0..n {
                if table[a][b] == 0 {
                    inverse[a] = b;
                }
            }
        }
        FiniteGroupoid {
            objects: vec![name.to_string()],
            arrows: element_names
                .iter()
                .map(|e| Arrow { id: e.clone(), src: 0, dst: 0 })
                .collect(),
            compose: table
                .iter()
                .map(|row| row.iter().map(|&k| Some(k)).collect())
                .collect(),
            identity: vec![0],
            inverse,
        }
    }

    pub fn trivial() -> Self {
        Self::from_group("pt", &["e".into()], &[vec![0]])
    }

    pub fn cyclic(n: usize) -> Self {
        let names: Vec<String> = (0..n).map(|k| format!("r{k}")).collect();
        let table: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_group(&format!("Z{n}"), &names, &table)
    }

    pub fn klein_four() -> Self {
        // Z2 x Z2 with elements indexed by bit pairs.
        let names: Vec<String> = ["e", "a", "b", "ab"].iter().map(|s| s.to_string()).collect();
        let table: Vec<Vec<usize>> = (0..4).map(|x| (0..4).map(|y| x ^ y).collect()).collect();
        Self::from_group("Z2xZ2", &names, &table)
    }

    /// S3 as permutations of three letters.
    pub fn symmetric_3() -> Self {
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [1, 2, 0],
            [2, 0, 1],
            [1, 0, 2],
            [0, 2, 1],
            [2, 1, 0],
        ];
        let names: Vec<String> =
            ["e", "r", "rr", "s01", "s12", "s02"].iter().map(|s| s.to_string()).collect();
        let index = |p: &[usize; 3]| perms.iter().position(|q| q == p).unwrap();
        let table: Vec<Vec<usize>> = (0..6)
            .map(|a| {
                (0..6)
                    .map(|b| {
                        // (a . b)(i) = a(b(i))
                        let p = [
                            perms[a][perms[b][0]],
                            perms[a][perms[b][1]],
                            perms[a][perms[b][2]],
                        ];
                        index(&p)
                    })
                    .collect()
            })
            .collect();
        Self::from_group("S3", &names, &table)
    }

    /// Connected groupoid on `n_objects` objects with the given vertex group:
    /// arrows are (source, target, group element).
    pub fn connected(n_objects: usize, group: &FiniteGroupoid) -> Self {
        let gsize = group.n_arrows();
        let mut arrows = Vec::new();
        for s in 0..n_objects {
            for d in 0..n_objects {
                for e in 0..gsize {
                    arrows.push(Arrow {
                        id: format!("{s}->{d}:{}", group.arrows[e].id),
                        src: s,
                        dst: d,
                    });
                }
            }
        }
        let idx = |s: usize, d: usize, e: usize| (s * n_objects + d) * gsize + e;
        let n = arrows.len();
        let mut compose = vec![vec![None; n]; n];
        for s in 0..n_objects {
            for d in 0..n_objects {
                for e in 0..gsize {
                    for s2 in 0..n_objects {
                        for e2 in 0..gsize {
                            // g: d -> d2 after h: s2 -> d ... indices: h = (s2, s?)...
                            let h = idx(s2, s, e2);
                            let g = idx(s, d, e);
                            let prod = group.compose[e][e2].unwrap();
                            compose[g][h] = Some(idx(s2, d, prod));
                        }
                    }
                }
            }
        }
        let identity: Vec<usize> = (0..n_objects).map(|x| idx(x, x, 0)).collect();
        let mut inverse = vec![0usize; n];
        for s in 0..n_objects {
            for d in 0..n_objects {
                for e in 0..gsize {
                    inverse[idx(s, d, e)] = idx(d, s, group.inverse[e]);
                }
            }
        }
        FiniteGroupoid {
            objects: (0..n_objects).map(|i| format!("o{i}")).collect(),
            arrows,
            compose,
            identity,
            inverse,
        }
    }

    /// The named stock groupoids used by the verifier.
    pub fn by_name(name: &str) -> Result<Self, GroupoidError> {
        match name {
            "trivial" => Ok(Self::trivial()),
            "Z2" => Ok(Self::cyclic(2)),
            "Z3" => Ok(Self::cyclic(3)),
            "Z2xZ2" => Ok(Self::klein_four()),
            "S3" => Ok(Self::symmetric_3()),
            "pair2xZ2" => Ok(Self::connected(2, &Self::cyclic(2))),
            other => Err(GroupoidError::UnknownObject(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_groupoids_are_valid() {
        for name in ["trivial", "Z2", "Z3", "Z2xZ2", "S3", "pair2xZ2"] {
            let g = FiniteGroupoid::by_name(name).unwrap();
            g.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn s3_is_nonabelian_of_order_six() {
        let g = FiniteGroupoid::symmetric_3();
        assert_eq!(g.n_arrows(), 6);
        let mut commutes = true;
        for a in 0..6 {
            for b in 0..6 {
                if g.compose[a][b] != g.compose[b][a] {
                    commutes = false;
                }
            }
        }
        assert!(!commutes);
    }

    #[test]
    fn connected_groupoid_counts() {
        let g = FiniteGroupoid::connected(2, &FiniteGroupoid::cyclic(2));
        assert_eq!(g.objects.len(), 2);
        assert_eq!(g.n_arrows(), 8);
        assert_eq!(g.hom_arrows(0, 1).len(), 2);
    }
}
