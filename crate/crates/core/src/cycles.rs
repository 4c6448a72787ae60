//! Minimal violating-cycle search.
//!
//! Stage `i` looks for a negative closed walk of at most `2i` arcs under the
//! stage-`i` shifted weights, running a hop-limited Bellman-Ford from every
//! source. Because `log f(i)/i` is nondecreasing and earlier stages found
//! nothing, any negative closed walk found at stage `i` contains a simple
//! violating cycle with exactly `2i` hops, which is then minimal.

use crate::xgraph::{closed_walk_w0, shifted_weight, FSchedule, Side, XGraph, VIOLATION_MARGIN};

/// A simple alternating cycle `u1, v1, u2, v2, ...` of graph node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    vertices: Vec<usize>,
    w0_weight: f64,
}

impl Cycle {
    /// Builds a cycle from a closed node sequence, rotated to start at its
    /// smallest node id (always a left node, since left ids come first).
    pub fn new(g: &XGraph, vertices: &[usize]) -> Self {
        let start = vertices
            .iter()
            .enumerate()
            .min_by_key(|&(_, v)| *v)
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut rotated = vertices[start..].to_vec();
        rotated.extend_from_slice(&vertices[..start]);
        let w0_weight = closed_walk_w0(g, &rotated);
        Self {
            vertices: rotated,
            w0_weight,
        }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn hops(&self) -> usize {
        self.vertices.len()
    }

    pub fn half_hops(&self) -> usize {
        self.vertices.len() / 2
    }

    pub fn w0_weight(&self) -> f64 {
        self.w0_weight
    }

    /// Node ids on the left side (outside elements), in cycle order.
    pub fn left_nodes<'a>(&'a self, g: &'a XGraph) -> impl Iterator<Item = usize> + 'a {
        self.vertices
            .iter()
            .copied()
            .filter(move |&v| g.node(v).side == Side::Left)
    }

    /// Node ids on the right side (elements of the current set), in cycle order.
    pub fn right_nodes<'a>(&'a self, g: &'a XGraph) -> impl Iterator<Item = usize> + 'a {
        self.vertices
            .iter()
            .copied()
            .filter(move |&v| g.node(v).side == Side::Right)
    }

    /// Sorted node ids.
    pub fn vertex_set(&self) -> Vec<usize> {
        let mut v = self.vertices.clone();
        v.sort_unstable();
        v
    }

    /// Simple, alternating, and every step is an arc of `g`.
    pub fn is_well_formed(&self, g: &XGraph) -> bool {
        let n = self.vertices.len();
        if n < 2 || !n.is_multiple_of(2) {
            return false;
        }
        let mut set = self.vertex_set();
        set.dedup();
        if set.len() != n {
            return false;
        }
        (0..n).all(|i| {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            g.node(a).side != g.node(b).side && g.weight(a, b).is_some()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Keep,
    From(usize),
}

/// Decomposes a predecessor chain into the simple cycles it closes, in the
/// order they close. `chain[0]` is the source and `chain[j + 1]` is the
/// predecessor of `chain[j]`; each cycle is returned in forward arc order.
pub fn decompose_chain(chain: &[usize]) -> Vec<Vec<usize>> {
    let mut stack: Vec<usize> = Vec::new();
    let mut cycles = Vec::new();
    for &x in chain {
        if let Some(p) = stack.iter().position(|&y| y == x) {
            let mut cyc: Vec<usize> = stack.drain(p..).collect();
            cyc.reverse();
            cycles.push(cyc);
        }
        stack.push(x);
    }
    cycles
}

/// Follows a predecessor chain until a vertex repeats and returns the enclosed
/// simple cycle (forward order), discarding any tail before it.
pub fn extract_simple_cycle(chain: &[usize]) -> Option<Vec<usize>> {
    decompose_chain(chain).into_iter().next()
}

struct Incoming {
    /// per target node: (source node, base weight, is_forward)
    lists: Vec<Vec<(usize, f64, bool)>>,
}

impl Incoming {
    fn new(g: &XGraph) -> Self {
        let mut lists = vec![Vec::new(); g.node_count()];
        for arc in g.arcs() {
            lists[arc.to].push((arc.from, arc.w0, g.is_forward(arc)));
        }
        for l in lists.iter_mut() {
            l.sort_by_key(|e| e.0);
        }
        Self { lists }
    }
}

/// Hop-limited Bellman-Ford from `source` with synchronous rounds. Returns the
/// predecessor chain of a negative closed walk through `source`, if any.
fn negative_closed_walk(
    incoming: &[Vec<(usize, f64)>],
    source: usize,
    rounds: usize,
) -> Option<Vec<usize>> {
    let n = incoming.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut steps: Vec<Vec<Step>> = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut next = dist.clone();
        let mut layer = vec![Step::Keep; n];
        for v in 0..n {
            for &(u, w) in &incoming[v] {
                if dist[u].is_finite() {
                    let cand = dist[u] + w;
                    if cand < next[v] {
                        next[v] = cand;
                        layer[v] = Step::From(u);
                    }
                }
            }
        }
        dist = next;
        steps.push(layer);
    }
    if dist[source] >= -VIOLATION_MARGIN {
        return None;
    }
    let mut chain = vec![source];
    let mut v = source;
    for layer in steps.iter().rev() {
        if let Step::From(u) = layer[v] {
            chain.push(u);
            v = u;
        }
    }
    debug_assert_eq!(v, source);
    Some(chain)
}

/// Finds a minimal violating cycle, or `None` when the graph has no violating
/// cycle at all.
pub fn find_minimal_violating(g: &XGraph, fs: &FSchedule) -> Option<Cycle> {
    let incoming = Incoming::new(g);
    let max_stage = g.ell_max().min(fs.max_len());
    for stage in 1..=max_stage {
        let shift = fs.shift(stage);
        let weighted: Vec<Vec<(usize, f64)>> = incoming
            .lists
            .iter()
            .map(|l| {
                l.iter()
                    .map(|&(u, w0, fwd)| (u, if fwd { w0 + shift } else { 0.0 }))
                    .collect()
            })
            .collect();
        for source in 0..g.node_count() {
            if weighted[source].is_empty() {
                continue;
            }
            let Some(chain) = negative_closed_walk(&weighted, source, 2 * stage) else {
                continue;
            };
            let best = decompose_chain(&chain)
                .into_iter()
                .map(|c| Cycle::new(g, &c))
                .filter(|c| fs.is_violating(c.w0_weight(), c.half_hops()))
                .min_by(|a, b| {
                    a.hops().cmp(&b.hops()).then(
                        stage_weight(a, fs, stage).total_cmp(&stage_weight(b, fs, stage)),
                    )
                });
            if let Some(c) = best {
                debug_assert!(c.is_well_formed(g));
                return Some(c);
            }
            log::debug!("stage {stage}: negative walk from node {source} had no violating cycle");
        }
    }
    None
}

fn stage_weight(c: &Cycle, fs: &FSchedule, stage: usize) -> f64 {
    c.w0_weight() + c.half_hops() as f64 * fs.shift(stage)
}

/// Stage-`ell` weight of a cycle, summing shifted arc weights.
pub fn cycle_stage_weight(g: &XGraph, fs: &FSchedule, ell: usize, c: &Cycle) -> f64 {
    let v = c.vertices();
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            match g.weight(a, b) {
                Some(w0) => shifted_weight(
                    g,
                    fs,
                    ell,
                    &crate::xgraph::Arc { from: a, to: b, w0 },
                ),
                None => f64::INFINITY,
            }
        })
        .sum()
}

/// All simple cycles with at most `max_hops` arcs whose vertices lie in
/// `allowed` (or anywhere, if `None`). Exhaustive; for small graphs only.
pub fn enumerate_cycles(g: &XGraph, max_hops: usize, allowed: Option<&[usize]>) -> Vec<Cycle> {
    let n = g.node_count();
    let mut ok = vec![allowed.is_none(); n];
    if let Some(a) = allowed {
        for &v in a {
            ok[v] = true;
        }
    }
    let mut out_arcs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for arc in g.arcs() {
        out_arcs[arc.from].push(arc.to);
    }
    for l in out_arcs.iter_mut() {
        l.sort_unstable();
    }

    fn dfs(
        g: &XGraph,
        out_arcs: &[Vec<usize>],
        ok: &[bool],
        start: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        max_hops: usize,
        found: &mut Vec<Cycle>,
    ) {
        let last = *path.last().unwrap();
        for &next in &out_arcs[last] {
            if next == start {
                found.push(Cycle::new(g, path));
            } else if next > start && ok[next] && !on_path[next] && path.len() < max_hops {
                on_path[next] = true;
                path.push(next);
                dfs(g, out_arcs, ok, start, path, on_path, max_hops, found);
                path.pop();
                on_path[next] = false;
            }
        }
    }

    let mut found = Vec::new();
    let mut on_path = vec![false; n];
    for start in 0..n {
        if !ok[start] {
            continue;
        }
        let mut path = vec![start];
        on_path[start] = true;
        dfs(g, &out_arcs, &ok, start, &mut path, &mut on_path, max_hops, &mut found);
        on_path[start] = false;
    }
    found
}

/// Every violating simple cycle with at most `max_hops` arcs.
pub fn enumerate_violating(g: &XGraph, fs: &FSchedule, max_hops: usize) -> Vec<Cycle> {
    enumerate_cycles(g, max_hops, None)
        .into_iter()
        .filter(|c| fs.is_violating(c.w0_weight(), c.half_hops()))
        .collect()
}

/// True when some cycle on a strict subset of `c`'s vertices is violating.
pub fn has_violating_strict_subcycle(g: &XGraph, fs: &FSchedule, c: &Cycle) -> bool {
    let verts = c.vertex_set();
    enumerate_cycles(g, c.hops(), Some(&verts))
        .into_iter()
        .filter(|d| d.hops() < c.hops())
        .any(|d| fs.is_violating(d.w0_weight(), d.half_hops()))
}
