//! Constraint matroids and the cardinality matroid-intersection routine used
//! to find a starting basis.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::linalg::{self, VectorSet};

/// Independence oracle over the ground set `0..ground_size()`.
pub trait IndependenceOracle {
    fn ground_size(&self) -> usize;
    fn rank(&self) -> usize;
    fn is_independent(&self, s: &[usize]) -> Result<bool>;
}

/// Description of a concrete constraint matroid.
#[derive(Debug, Clone, PartialEq)]
pub enum MatroidSpec {
    /// Disjoint blocks covering the ground set; at most one element per block.
    Partition { blocks: Vec<Vec<usize>> },
    /// Every set of at most `rank` elements out of `size`.
    Uniform { size: usize, rank: usize },
    /// One ground element per edge; independent sets are forests.
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    /// Column matroid of a representation matrix.
    Linear { representation: VectorSet },
}

impl MatroidSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            MatroidSpec::Partition { .. } => "partition",
            MatroidSpec::Uniform { .. } => "uniform",
            MatroidSpec::Graphic { .. } => "graphic",
            MatroidSpec::Linear { .. } => "linear",
        }
    }
}

/// A validated matroid with cached rank and block lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Matroid {
    spec: MatroidSpec,
    ground: usize,
    rank: usize,
    block_of: Vec<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl Matroid {
    pub fn new(spec: MatroidSpec) -> Result<Self> {
        let mut block_of = Vec::new();
        let (ground, rank) = match &spec {
            MatroidSpec::Partition { blocks } => {
                let n: usize = blocks.iter().map(Vec::len).sum();
                block_of = vec![usize::MAX; n];
                for (b, block) in blocks.iter().enumerate() {
                    if block.is_empty() {
                        return Err(Error::InvalidMatroid(format!("partition block {b} is empty")));
                    }
                    for &e in block {
                        if e >= n {
                            return Err(Error::InvalidMatroid(format!(
                                "partition element {e} outside ground set 0..{n}"
                            )));
                        }
                        if block_of[e] != usize::MAX {
                            return Err(Error::InvalidMatroid(format!(
                                "overlapping partition blocks: element {e} in blocks {} and {b}",
                                block_of[e]
                            )));
                        }
                        block_of[e] = b;
                    }
                }
                (n, blocks.len())
            }
            MatroidSpec::Uniform { size, rank } => {
                if rank > size {
                    return Err(Error::InvalidMatroid(format!(
                        "uniform rank {rank} exceeds ground size {size}"
                    )));
                }
                (*size, *rank)
            }
            MatroidSpec::Graphic { vertices, edges } => {
                let mut uf = UnionFind::new(*vertices);
                let mut rank = 0;
                for (i, &(a, b)) in edges.iter().enumerate() {
                    if a >= *vertices || b >= *vertices {
                        return Err(Error::InvalidMatroid(format!(
                            "edge {i} references a vertex outside 0..{vertices}"
                        )));
                    }
                    if uf.union(a, b) {
                        rank += 1;
                    }
                }
                (edges.len(), rank)
            }
            MatroidSpec::Linear { representation } => {
                let mut basis = Vec::new();
                for i in 0..representation.len() {
                    basis.push(i);
                    if !linalg::is_linearly_independent(representation, &basis)? {
                        basis.pop();
                    }
                }
                (representation.len(), basis.len())
            }
        };
        Ok(Self {
            spec,
            ground,
            rank,
            block_of,
        })
    }

    pub fn spec(&self) -> &MatroidSpec {
        &self.spec
    }

    /// Block index of `e` for partition matroids.
    pub fn block_of(&self, e: usize) -> Option<usize> {
        self.block_of.get(e).copied()
    }

    fn check(&self, s: &[usize]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &e in s {
            if e >= self.ground {
                return Err(Error::IndexOutOfRange {
                    index: e,
                    len: self.ground,
                });
            }
            if !seen.insert(e) {
                return Err(Error::DuplicateIndex(e));
            }
        }
        Ok(())
    }

    /// True iff `s - v + u` is independent, i.e. the exchange graph carries the
    /// arc `v -> u`.
    pub fn backward_arc_exists(&self, s: &[usize], v: usize, u: usize) -> Result<bool> {
        if !s.contains(&v) {
            return Err(Error::InvalidInstance(format!("element {v} is not in the set")));
        }
        if s.contains(&u) {
            return Err(Error::InvalidInstance(format!("element {u} is already in the set")));
        }
        let swapped: Vec<usize> = s.iter().map(|&x| if x == v { u } else { x }).collect();
        self.is_independent(&swapped)
    }
}

impl IndependenceOracle for Matroid {
    fn ground_size(&self) -> usize {
        self.ground
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn is_independent(&self, s: &[usize]) -> Result<bool> {
        self.check(s)?;
        Ok(match &self.spec {
            MatroidSpec::Partition { blocks } => {
                let mut used = vec![false; blocks.len()];
                s.iter().all(|&e| !std::mem::replace(&mut used[self.block_of[e]], true))
            }
            MatroidSpec::Uniform { rank, .. } => s.len() <= *rank,
            MatroidSpec::Graphic { vertices, edges } => {
                let mut uf = UnionFind::new(*vertices);
                s.iter().all(|&e| uf.union(edges[e].0, edges[e].1))
            }
            MatroidSpec::Linear { representation } => {
                linalg::is_linearly_independent(representation, s)?
            }
        })
    }
}

/// Column matroid of the input vectors.
pub struct LinearMatroid<'a>(pub &'a VectorSet);

impl IndependenceOracle for LinearMatroid<'_> {
    fn ground_size(&self) -> usize {
        self.0.len()
    }

    fn rank(&self) -> usize {
        self.0.dim().min(self.0.len())
    }

    fn is_independent(&self, s: &[usize]) -> Result<bool> {
        linalg::is_linearly_independent(self.0, s)
    }
}

fn with_swap(set: &[usize], out: Option<usize>, add: usize) -> Vec<usize> {
    let mut t: Vec<usize> = set.iter().copied().filter(|&x| Some(x) != out).collect();
    t.push(add);
    t
}

/// Maximum common independent set of two matroids on the same ground set.
///
/// Cardinality matroid intersection: augment along shortest paths of the
/// unweighted exchange graph, breadth-first with the lowest element id first.
pub fn max_common_independent<A, B>(m1: &A, m2: &B) -> Result<Vec<usize>>
where
    A: IndependenceOracle + ?Sized,
    B: IndependenceOracle + ?Sized,
{
    let n = m1.ground_size();
    if m2.ground_size() != n {
        return Err(Error::InvalidInstance(format!(
            "ground sets differ in size ({n} vs {})",
            m2.ground_size()
        )));
    }
    let mut current: Vec<usize> = Vec::new();
    loop {
        let mut in_set = vec![false; n];
        for &e in &current {
            in_set[e] = true;
        }
        let outside: Vec<usize> = (0..n).filter(|&x| !in_set[x]).collect();

        let mut sources = vec![false; n];
        let mut sinks = vec![false; n];
        for &x in &outside {
            sources[x] = m1.is_independent(&with_swap(&current, None, x))?;
            sinks[x] = m2.is_independent(&with_swap(&current, None, x))?;
        }

        // adjacency: y -> x when I - y + x ∈ I1, x -> y when I - y + x ∈ I2
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &y in &current {
            for &x in &outside {
                let t = with_swap(&current, Some(y), x);
                if m1.is_independent(&t)? {
                    adj[y].push(x);
                }
                if m2.is_independent(&t)? {
                    adj[x].push(y);
                }
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }

        let mut pred = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &x in &outside {
            if sources[x] {
                seen[x] = true;
                queue.push_back(x);
            }
        }
        let mut end = None;
        while let Some(z) = queue.pop_front() {
            if !in_set[z] && sinks[z] {
                end = Some(z);
                break;
            }
            for &w in &adj[z] {
                if !seen[w] {
                    seen[w] = true;
                    pred[w] = z;
                    queue.push_back(w);
                }
            }
        }
        let Some(mut z) = end else {
            current.sort_unstable();
            return Ok(current);
        };
        loop {
            in_set[z] = !in_set[z];
            if pred[z] == usize::MAX {
                break;
            }
            z = pred[z];
        }
        current = (0..n).filter(|&x| in_set[x]).collect();
    }
}

/// A basis of `m` whose vectors have nonzero volume, or [`Error::Infeasible`].
pub fn find_common_basis(m: &Matroid, vs: &VectorSet) -> Result<Vec<usize>> {
    if m.ground_size() != vs.len() {
        return Err(Error::InvalidInstance(format!(
            "matroid ground set has {} elements but there are {} vectors",
            m.ground_size(),
            vs.len()
        )));
    }
    let common = max_common_independent(m, &LinearMatroid(vs))?;
    if common.len() < m.rank() {
        return Err(Error::Infeasible);
    }
    Ok(common)
}
