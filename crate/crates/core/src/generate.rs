//! Seeded instance generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{InstanceFile, MatroidFile, SCHEMA_VERSION};

/// Entries of generated vectors are integers in `-ENTRY_MAX..=ENTRY_MAX`.
pub const ENTRY_MAX: i32 = 5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn int_vectors(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| rng.gen_range(-ENTRY_MAX..=ENTRY_MAX) as f64)
                .collect()
        })
        .collect()
}

fn file(dimension: usize, vectors: Vec<Vec<f64>>, matroid: MatroidFile) -> InstanceFile {
    InstanceFile {
        schema_version: SCHEMA_VERSION,
        dimension,
        vectors,
        matroid,
        start_basis: None,
    }
}

/// `blocks` blocks of `per_block` random integer vectors each, in `R^d`.
pub fn random_partition(d: usize, blocks: usize, per_block: usize, seed: u64) -> Result<InstanceFile> {
    random_partition_sizes(d, &vec![per_block; blocks], seed)
}

/// Partition instance with the given block sizes; blocks are consecutive ids.
pub fn random_partition_sizes(d: usize, sizes: &[usize], seed: u64) -> Result<InstanceFile> {
    if d == 0 || sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidInstance(
            "random-partition needs d >= 1 and nonempty blocks".into(),
        ));
    }
    let mut r = rng(seed);
    let n: usize = sizes.iter().sum();
    let vectors = int_vectors(&mut r, n, d);
    let mut next = 0;
    let blocks = sizes
        .iter()
        .map(|&k| {
            let b: Vec<usize> = (next..next + k).collect();
            next += k;
            b
        })
        .collect();
    Ok(file(d, vectors, MatroidFile::Partition { blocks }))
}

/// `n` random integer vectors in `R^d` under the uniform matroid of rank `rank`.
pub fn random_uniform(d: usize, n: usize, rank: usize, seed: u64) -> Result<InstanceFile> {
    if d == 0 || rank == 0 || rank > n {
        return Err(Error::InvalidInstance(
            "random-uniform needs d >= 1 and 1 <= rank <= n".into(),
        ));
    }
    let mut r = rng(seed);
    Ok(file(d, int_vectors(&mut r, n, d), MatroidFile::Uniform { rank }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphShape {
    Path,
    Complete,
    /// Random simple graph with the given number of edges.
    Random { edges: usize },
}

/// Graphic-matroid instance; one random vector per edge. `d` defaults to the
/// matroid rank.
pub fn graphic(shape: GraphShape, vertices: usize, d: Option<usize>, seed: u64) -> Result<InstanceFile> {
    if vertices < 2 {
        return Err(Error::InvalidInstance("graphic instances need at least 2 vertices".into()));
    }
    let mut r = rng(seed);
    let all: Vec<[usize; 2]> = (0..vertices)
        .flat_map(|a| ((a + 1)..vertices).map(move |b| [a, b]))
        .collect();
    let edges: Vec<[usize; 2]> = match shape {
        GraphShape::Path => (1..vertices).map(|i| [i - 1, i]).collect(),
        GraphShape::Complete => all,
        GraphShape::Random { edges } => {
            if edges == 0 || edges > all.len() {
                return Err(Error::InvalidInstance(format!(
                    "a simple graph on {vertices} vertices has 1..={} edges",
                    all.len()
                )));
            }
            let mut pick: Vec<[usize; 2]> = all.choose_multiple(&mut r, edges).copied().collect();
            pick.sort_unstable();
            pick
        }
    };
    let rank = graph_rank(vertices, &edges);
    let d = d.unwrap_or(rank);
    if d < rank {
        return Err(Error::InvalidInstance(format!(
            "dimension {d} is below the graph's rank {rank}"
        )));
    }
    let vectors = int_vectors(&mut r, edges.len(), d);
    Ok(file(d, vectors, MatroidFile::Graphic { vertices, edges }))
}

fn graph_rank(vertices: usize, edges: &[[usize; 2]]) -> usize {
    let mut parent: Vec<usize> = (0..vertices).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    edges
        .iter()
        .filter(|e| {
            let (a, b) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
            parent[a] = b;
            a != b
        })
        .count()
}

/// The Hadamard fixture as a file (with its designated start basis).
pub fn hadamard(k: u32) -> Result<InstanceFile> {
    Ok(crate::oracle::hadamard_fixture(k)?.to_file())
}
