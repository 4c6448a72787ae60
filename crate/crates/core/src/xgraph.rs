//! Exchange graphs over a frozen basis.
//!
//! Left nodes are the elements outside the current set `S` (twice each in the
//! augmented graph: a parallel and a perpendicular copy); right nodes are the
//! elements of `S`. Forward arcs (left to right) carry the base weight `w0`,
//! backward arcs (right to left) carry weight zero and exist exactly when the
//! constraint matroid allows the swap. Zero-coefficient forward arcs are left
//! out, which is the same as giving them weight `+inf`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{self, VectorSet};
use crate::matroids::Matroid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flavor {
    Plain,
    Parallel,
    Perpendicular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct XNode {
    pub side: Side,
    pub element: usize,
    pub flavor: Flavor,
}

impl XNode {
    pub fn label(&self) -> String {
        match (self.side, self.flavor) {
            (Side::Right, _) => format!("v{}", self.element),
            (Side::Left, Flavor::Plain) => format!("u{}", self.element),
            (Side::Left, Flavor::Parallel) => format!("u{}.par", self.element),
            (Side::Left, Flavor::Perpendicular) => format!("u{}.perp", self.element),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub w0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Standard,
    Augmented,
}

/// Exchange graph frozen at the set it was built from.
#[derive(Debug, Clone)]
pub struct XGraph {
    kind: GraphKind,
    selected: Vec<usize>,
    nodes: Vec<XNode>,
    forward: Vec<Arc>,
    backward: Vec<Arc>,
    /// `weights[from * n + to]`, `None` where there is no arc.
    lookup: Vec<Option<f64>>,
}

impl XGraph {
    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn nodes(&self) -> &[XNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> XNode {
        self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn forward_arcs(&self) -> &[Arc] {
        &self.forward
    }

    pub fn backward_arcs(&self) -> &[Arc] {
        &self.backward
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Arc> {
        self.forward.iter().chain(self.backward.iter())
    }

    /// Largest half-hop count a simple cycle can have: the size of `S`.
    pub fn ell_max(&self) -> usize {
        self.selected.len()
    }

    /// Base weight of the arc `from -> to`, if present.
    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        self.lookup[from * self.nodes.len() + to]
    }

    pub fn is_forward(&self, arc: &Arc) -> bool {
        self.nodes[arc.from].side == Side::Left
    }

    /// Node id of a given node description.
    pub fn find_node(&self, side: Side, element: usize, flavor: Flavor) -> Option<usize> {
        self.nodes.iter().position(|n| *n == XNode { side, element, flavor })
    }

    /// Plain-text adjacency listing, one `u -> v : w` line per arc.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for arc in self.arcs() {
            let _ = writeln!(
                out,
                "{} -> {} : {:.16e}",
                self.nodes[arc.from].label(),
                self.nodes[arc.to].label(),
                arc.w0
            );
        }
        out
    }

    fn assemble(
        kind: GraphKind,
        selected: &[usize],
        nodes: Vec<XNode>,
        forward: Vec<Arc>,
        backward: Vec<Arc>,
    ) -> Self {
        let n = nodes.len();
        let mut lookup = vec![None; n * n];
        for arc in forward.iter().chain(backward.iter()) {
            lookup[arc.from * n + arc.to] = Some(arc.w0);
        }
        Self {
            kind,
            selected: selected.to_vec(),
            nodes,
            forward,
            backward,
            lookup,
        }
    }
}

fn outside(vs: &VectorSet, s: &[usize]) -> Vec<usize> {
    (0..vs.len()).filter(|x| !s.contains(x)).collect()
}

fn check_basis(vs: &VectorSet, m: &Matroid, s: &[usize]) -> Result<()> {
    use crate::matroids::IndependenceOracle;
    if m.ground_size() != vs.len() {
        return Err(Error::InvalidInstance(
            "matroid and vector set have different ground sets".into(),
        ));
    }
    if !m.is_independent(s)? {
        return Err(Error::InvalidInstance(
            "current set is not independent in the constraint matroid".into(),
        ));
    }
    Ok(())
}

fn build(vs: &VectorSet, m: &Matroid, s: &[usize], kind: GraphKind) -> Result<XGraph> {
    check_basis(vs, m, s)?;
    let others = outside(vs, s);
    let dec = linalg::decompose(vs, s, &others)?;
    let zero = vs.zero_threshold();

    let mut nodes = Vec::new();
    // (node id, position in `others`, flavor)
    let mut left = Vec::new();
    for (pos, &u) in others.iter().enumerate() {
        let flavors: &[Flavor] = match kind {
            GraphKind::Standard => &[Flavor::Plain],
            GraphKind::Augmented => &[Flavor::Parallel, Flavor::Perpendicular],
        };
        for &flavor in flavors {
            left.push((nodes.len(), pos, flavor));
            nodes.push(XNode {
                side: Side::Left,
                element: u,
                flavor,
            });
        }
    }
    let right_base = nodes.len();
    for &v in s {
        nodes.push(XNode {
            side: Side::Right,
            element: v,
            flavor: Flavor::Plain,
        });
    }

    let mut forward = Vec::new();
    let mut backward = Vec::new();
    for &(id, pos, flavor) in &left {
        for (j, &v) in s.iter().enumerate() {
            let w0 = match flavor {
                Flavor::Plain | Flavor::Parallel => {
                    let a = dec.coefficient(pos, j);
                    // compare the contribution a·v, not the bare coefficient
                    if a.abs() * linalg::norm(vs.column(v)) <= zero {
                        None
                    } else {
                        Some(-a.abs().ln())
                    }
                }
                Flavor::Perpendicular => {
                    let r = dec.residual_norms[pos];
                    if r <= zero {
                        None
                    } else {
                        Some(-(r / dec.basis_orthonorms[j]).ln())
                    }
                }
            };
            if let Some(w0) = w0 {
                forward.push(Arc {
                    from: id,
                    to: right_base + j,
                    w0,
                });
            }
        }
    }
    for (j, &v) in s.iter().enumerate() {
        for &(id, pos, _) in &left {
            if m.backward_arc_exists(s, v, others[pos])? {
                backward.push(Arc {
                    from: right_base + j,
                    to: id,
                    w0: 0.0,
                });
            }
        }
    }
    Ok(XGraph::assemble(kind, s, nodes, forward, backward))
}

/// Standard exchange graph `G(S)`.
pub fn build_standard(vs: &VectorSet, m: &Matroid, s: &[usize]) -> Result<XGraph> {
    build(vs, m, s, GraphKind::Standard)
}

/// Augmented exchange graph with parallel and perpendicular copies of each
/// outside element.
pub fn build_augmented(vs: &VectorSet, m: &Matroid, s: &[usize]) -> Result<XGraph> {
    build(vs, m, s, GraphKind::Augmented)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// `f(i) = 2 (i!)^3`
    Standard,
    /// `f(1) = 2`, `f(i) = (i!)^11` for `i >= 2`
    Augmented,
}

/// Violation thresholds `log f(i)` for `i = 1..=max_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct FSchedule {
    kind: ScheduleKind,
    log_values: Vec<f64>,
}

fn log_factorial(i: usize) -> f64 {
    (2..=i).map(|k| (k as f64).ln()).sum()
}

impl FSchedule {
    pub fn new(kind: ScheduleKind, max_len: usize) -> Self {
        let log_values: Vec<f64> = (1..=max_len)
            .map(|i| match kind {
                ScheduleKind::Standard => 2f64.ln() + 3.0 * log_factorial(i),
                ScheduleKind::Augmented if i == 1 => 2f64.ln(),
                ScheduleKind::Augmented => 11.0 * log_factorial(i),
            })
            .collect();
        let per_hop: Vec<f64> = log_values
            .iter()
            .enumerate()
            .map(|(k, v)| v / (k + 1) as f64)
            .collect();
        assert!(
            per_hop.windows(2).all(|w| w[0] <= w[1]),
            "log f(i)/i must be nondecreasing"
        );
        Self { kind, log_values }
    }

    pub fn standard(max_len: usize) -> Self {
        Self::new(ScheduleKind::Standard, max_len)
    }

    pub fn augmented(max_len: usize) -> Self {
        Self::new(ScheduleKind::Augmented, max_len)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn max_len(&self) -> usize {
        self.log_values.len()
    }

    /// `log f(i)`, for `1 <= i <= max_len`.
    pub fn log_f(&self, i: usize) -> f64 {
        self.log_values[i - 1]
    }

    /// Per-forward-arc shift `log f(i) / i` used at stage `i`.
    pub fn shift(&self, i: usize) -> f64 {
        self.log_f(i) / i as f64
    }

    /// Whether a cycle with `half_hops` forward arcs and base weight `w0`
    /// violates the schedule.
    ///
    /// A tie margin of [`VIOLATION_MARGIN`] absorbs last-bit rounding so that
    /// exact ties on integer data never count as violations.
    pub fn is_violating(&self, w0: f64, half_hops: usize) -> bool {
        half_hops >= 1
            && half_hops <= self.max_len()
            && w0 + self.log_f(half_hops) < -VIOLATION_MARGIN
    }
}

/// Slack applied to every strict violation test.
pub const VIOLATION_MARGIN: f64 = 1e-12;

/// Stage-`ell` weight of an arc: forward arcs are shifted by `log f(ell)/ell`,
/// backward arcs stay at zero.
pub fn shifted_weight(g: &XGraph, fs: &FSchedule, ell: usize, arc: &Arc) -> f64 {
    debug_assert!(ell >= 1 && ell <= g.ell_max().max(1));
    if g.is_forward(arc) {
        arc.w0 + fs.shift(ell)
    } else {
        0.0
    }
}

/// Sum of base weights along a closed node sequence; `+inf` if a forward step
/// is not an arc of the graph.
pub fn closed_walk_w0(g: &XGraph, vertices: &[usize]) -> f64 {
    let n = vertices.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        match g.weight(a, b) {
            Some(w) => total += w,
            None => return f64::INFINITY,
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroids::MatroidSpec;

    fn vectors(dim: usize, cols: &[&[f64]]) -> VectorSet {
        VectorSet::new(dim, cols.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    fn partition(blocks: &[&[usize]]) -> Matroid {
        Matroid::new(MatroidSpec::Partition {
            blocks: blocks.iter().map(|b| b.to_vec()).collect(),
        })
        .unwrap()
    }

    #[test]
    fn standard_graph_three_vectors() {
        // elements: 0 = (1,0), 1 = (3,0) | 2 = (0,1)
        let vs = vectors(2, &[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0]]);
        let m = partition(&[&[0, 1], &[2]]);
        let g = build_standard(&vs, &m, &[0, 2]).unwrap();
        let u = g.find_node(Side::Left, 1, Flavor::Plain).unwrap();
        let v1 = g.find_node(Side::Right, 0, Flavor::Plain).unwrap();
        let v2 = g.find_node(Side::Right, 2, Flavor::Plain).unwrap();
        assert!((g.weight(u, v1).unwrap() + 3f64.ln()).abs() < 1e-12);
        assert_eq!(g.weight(u, v2), None);
        assert_eq!(g.weight(v1, u), Some(0.0));
        assert_eq!(g.weight(v2, u), None);
        assert_eq!(g.forward_arcs().len(), 1);
        assert_eq!(g.backward_arcs().len(), 1);
    }

    #[test]
    fn hadamard_weights_are_zero() {
        let vs = vectors(
            2,
            &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[1.0, -1.0]],
        );
        let m = partition(&[&[0, 2], &[1, 3]]);
        let g = build_standard(&vs, &m, &[0, 1]).unwrap();
        assert_eq!(g.forward_arcs().len(), 4);
        for arc in g.forward_arcs() {
            assert!(arc.w0.abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_vector_has_zero_weight() {
        // element 2 duplicates element 0 but lives in the other block
        let vs = vectors(2, &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let m = partition(&[&[0], &[1, 2]]);
        let g = build_standard(&vs, &m, &[0, 1]).unwrap();
        let u = g.find_node(Side::Left, 2, Flavor::Plain).unwrap();
        let v = g.find_node(Side::Right, 0, Flavor::Plain).unwrap();
        assert!(g.weight(u, v).unwrap().abs() < 1e-12);
    }

    #[test]
    fn augmented_rank_one() {
        let vs = vectors(2, &[&[1.0, 0.0], &[0.0, 5.0]]);
        let m = Matroid::new(MatroidSpec::Uniform { size: 2, rank: 1 }).unwrap();
        let g = build_augmented(&vs, &m, &[0]).unwrap();
        let perp = g.find_node(Side::Left, 1, Flavor::Perpendicular).unwrap();
        let par = g.find_node(Side::Left, 1, Flavor::Parallel).unwrap();
        let v = g.find_node(Side::Right, 0, Flavor::Plain).unwrap();
        assert!((g.weight(perp, v).unwrap() + 5f64.ln()).abs() < 1e-12);
        assert_eq!(g.weight(par, v), None);
        assert_eq!(g.weight(v, par), Some(0.0));
        assert_eq!(g.weight(v, perp), Some(0.0));
    }

    #[test]
    fn augmented_in_span_has_no_perpendicular_arcs() {
        let vs = vectors(
            3,
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[2.0, 3.0, 0.0]],
        );
        let m = Matroid::new(MatroidSpec::Uniform { size: 3, rank: 2 }).unwrap();
        let g = build_augmented(&vs, &m, &[0, 1]).unwrap();
        let perp = g.find_node(Side::Left, 2, Flavor::Perpendicular).unwrap();
        assert!(g.forward_arcs().iter().all(|a| a.from != perp));
    }

    #[test]
    fn perpendicular_weight_grows_with_basis_orthonorm() {
        let weight_for = |len: f64| {
            let vs = vectors(
                3,
                &[&[len, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]],
            );
            let m = Matroid::new(MatroidSpec::Uniform { size: 3, rank: 2 }).unwrap();
            let g = build_augmented(&vs, &m, &[0, 1]).unwrap();
            let perp = g.find_node(Side::Left, 2, Flavor::Perpendicular).unwrap();
            let v = g.find_node(Side::Right, 0, Flavor::Plain).unwrap();
            g.weight(perp, v).unwrap()
        };
        assert!(weight_for(1.0) < weight_for(2.0));
        assert!(weight_for(2.0) < weight_for(4.0));
    }

    #[test]
    fn schedule_values() {
        let fs = FSchedule::standard(3);
        assert!((fs.shift(1) - 2f64.ln()).abs() < 1e-15);
        assert!((fs.shift(2) - 16f64.ln() / 2.0).abs() < 1e-15);
        assert!((fs.log_f(3) - 432f64.ln()).abs() < 1e-12);
        let fa = FSchedule::augmented(3);
        assert!((fa.log_f(1) - 2f64.ln()).abs() < 1e-15);
        assert!((fa.log_f(2) - 2048f64.ln()).abs() < 1e-12);
        // (30!)^11 overflows f64 but its log does not
        assert!(FSchedule::augmented(30).log_f(30).is_finite());
    }

    #[test]
    fn shifted_and_cycle_weights() {
        let vs = vectors(2, &[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0]]);
        let m = partition(&[&[0, 1], &[2]]);
        let g = build_standard(&vs, &m, &[0, 2]).unwrap();
        let fs = FSchedule::standard(2);
        for arc in g.backward_arcs() {
            assert_eq!(shifted_weight(&g, &fs, 1, arc), 0.0);
            assert_eq!(shifted_weight(&g, &fs, 2, arc), 0.0);
        }
        let fwd = g.forward_arcs()[0];
        assert!((shifted_weight(&g, &fs, 1, &fwd) - (2f64.ln() - 3f64.ln())).abs() < 1e-12);

        let u = g.find_node(Side::Left, 1, Flavor::Plain).unwrap();
        let v1 = g.find_node(Side::Right, 0, Flavor::Plain).unwrap();
        let v2 = g.find_node(Side::Right, 2, Flavor::Plain).unwrap();
        assert!((closed_walk_w0(&g, &[u, v1]) + 3f64.ln()).abs() < 1e-12);
        assert_eq!(closed_walk_w0(&g, &[u, v2]), f64::INFINITY);
    }

    #[test]
    fn dump_lists_every_arc() {
        let vs = vectors(2, &[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0]]);
        let m = partition(&[&[0, 1], &[2]]);
        let g = build_standard(&vs, &m, &[0, 2]).unwrap();
        let text = g.dump();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("u1 -> v0 : "));
        assert!(text.contains("v0 -> u1 : 0.0000000000000000e0"));
    }
}
