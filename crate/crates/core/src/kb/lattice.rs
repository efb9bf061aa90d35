//! Finite lattices given by their order, and isomorphism search between
//! them.

use crate::error::{Error, Result};

/// A finite lattice as an explicit order relation on `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteLattice {
    leq: Vec<Vec<bool>>,
}

impl FiniteLattice {
    /// Validates that `leq` is a partial order with all binary joins and
    /// meets.
    pub fn new(leq: Vec<Vec<bool>>) -> Result<Self> {
        let n = leq.len();
        let bad = |msg: &str| Err(Error::Infeasible(format!("not a lattice: {msg}")));
        if leq.iter().any(|row| row.len() != n) {
            return bad("order matrix is not square");
        }
        for a in 0..n {
            if !leq[a][a] {
                return bad("not reflexive");
            }
            for b in 0..n {
                if a != b && leq[a][b] && leq[b][a] {
                    return bad("not antisymmetric");
                }
                for c in 0..n {
                    if leq[a][b] && leq[b][c] && !leq[a][c] {
                        return bad("not transitive");
                    }
                }
            }
        }
        let lattice = FiniteLattice { leq };
        for a in 0..n {
            for b in 0..n {
                if lattice.join(a, b).is_none() || lattice.meet(a, b).is_none() {
                    return bad("missing join or meet");
                }
            }
        }
        Ok(lattice)
    }

    /// Subsets of a `k`-element set ordered by inclusion.
    pub fn boolean(k: usize) -> Self {
        let n = 1usize << k;
        FiniteLattice { leq: (0..n).map(|a| (0..n).map(|b| a & !b == 0).collect()).collect() }
    }

    pub fn chain(n: usize) -> Self {
        FiniteLattice { leq: (0..n).map(|a| (0..n).map(|b| a <= b).collect()).collect() }
    }

    pub fn len(&self) -> usize {
        self.leq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leq.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn join(&self, a: usize, b: usize) -> Option<usize> {
        let upper: Vec<usize> = (0..self.len()).filter(|&c| self.leq[a][c] && self.leq[b][c]).collect();
        upper.iter().copied().find(|&c| upper.iter().all(|&d| self.leq[c][d]))
    }

    pub fn meet(&self, a: usize, b: usize) -> Option<usize> {
        let lower: Vec<usize> = (0..self.len()).filter(|&c| self.leq[c][a] && self.leq[c][b]).collect();
        lower.iter().copied().find(|&c| lower.iter().all(|&d| self.leq[d][c]))
    }

    fn lower_covers(&self, a: usize) -> Vec<usize> {
        let below: Vec<usize> = (0..self.len()).filter(|&b| b != a && self.leq[b][a]).collect();
        below.iter().copied().filter(|&b| below.iter().all(|&c| c == b || !self.leq[b][c])).collect()
    }

    /// Elements with exactly one lower cover.
    pub fn join_irreducibles(&self) -> Vec<usize> {
        (0..self.len()).filter(|&a| self.lower_covers(a).len() == 1).collect()
    }

    /// Length of the longest chain from the bottom to `a`.
    fn height(&self, a: usize) -> usize {
        self.lower_covers(a).into_iter().map(|b| self.height(b) + 1).max().unwrap_or(0)
    }

    fn profile(&self, a: usize) -> (usize, usize, usize) {
        let below = (0..self.len()).filter(|&b| self.leq[b][a]).count();
        let above = (0..self.len()).filter(|&b| self.leq[a][b]).count();
        (self.height(a), below, above)
    }
}

/// An order isomorphism `l1 → l2`, as the image of each element.
///
/// Join-irreducibles are matched by backtracking, pruned by height and the
/// sizes of their down- and up-sets; every other element is sent to the
/// join of the images of the join-irreducibles below it, and the full map
/// is verified before it is returned.
pub fn lattice_isomorphic(l1: &FiniteLattice, l2: &FiniteLattice) -> Option<Vec<usize>> {
    if l1.len() != l2.len() || l1.is_empty() {
        return None;
    }
    let j1 = l1.join_irreducibles();
    let j2 = l2.join_irreducibles();
    if j1.len() != j2.len() {
        return None;
    }
    let p1: Vec<_> = j1.iter().map(|&a| l1.profile(a)).collect();
    let p2: Vec<_> = j2.iter().map(|&a| l2.profile(a)).collect();
    let mut assigned = vec![usize::MAX; j1.len()];
    let mut used = vec![false; j2.len()];
    extend(l1, l2, &j1, &j2, &p1, &p2, &mut assigned, &mut used, 0)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    l1: &FiniteLattice,
    l2: &FiniteLattice,
    j1: &[usize],
    j2: &[usize],
    p1: &[(usize, usize, usize)],
    p2: &[(usize, usize, usize)],
    assigned: &mut Vec<usize>,
    used: &mut Vec<bool>,
    i: usize,
) -> Option<Vec<usize>> {
    if i == j1.len() {
        return complete(l1, l2, j1, j2, assigned);
    }
    for k in 0..j2.len() {
        if used[k] || p1[i] != p2[k] {
            continue;
        }
        let consistent = (0..i).all(|h| {
            let g = assigned[h];
            l1.leq(j1[h], j1[i]) == l2.leq(j2[g], j2[k]) && l1.leq(j1[i], j1[h]) == l2.leq(j2[k], j2[g])
        });
        if !consistent {
            continue;
        }
        assigned[i] = k;
        used[k] = true;
        if let Some(map) = extend(l1, l2, j1, j2, p1, p2, assigned, used, i + 1) {
            return Some(map);
        }
        used[k] = false;
    }
    assigned[i] = usize::MAX;
    None
}

fn complete(l1: &FiniteLattice, l2: &FiniteLattice, j1: &[usize], j2: &[usize], assigned: &[usize]) -> Option<Vec<usize>> {
    let bottom2 = (0..l2.len()).find(|&b| (0..l2.len()).all(|c| l2.leq(b, c)))?;
    let mut map = Vec::with_capacity(l1.len());
    for a in 0..l1.len() {
        let mut image = bottom2;
        for (h, &j) in j1.iter().enumerate() {
            if l1.leq(j, a) {
                image = l2.join(image, j2[assigned[h]])?;
            }
        }
        map.push(image);
    }
    let mut seen = vec![false; l2.len()];
    if map.iter().any(|&b| std::mem::replace(&mut seen[b], true)) {
        return None;
    }
    for a in 0..l1.len() {
        for b in 0..l1.len() {
            if l1.leq(a, b) != l2.leq(map[a], map[b]) {
                return None;
            }
        }
    }
    Some(map)
}
