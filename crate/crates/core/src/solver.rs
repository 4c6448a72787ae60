//! Exchange-graph local search.
//!
//! Starting from a basis with nonzero volume, repeatedly exchange along a
//! minimal violating cycle. At full rank only the standard graph is used; below
//! full rank a second stage searches the augmented graph whenever the standard
//! graph has no violating cycle. Every accepted exchange at least doubles the
//! volume.

use serde::Serialize;

use crate::cycles::{find_minimal_violating, Cycle};
use crate::error::{Error, Result};
use crate::instance::encoding_bits;
use crate::linalg::{self, LogVolume, VectorSet, DEFAULT_EPS_RANK};
use crate::matroids::{find_common_basis, IndependenceOracle, Matroid};
use crate::xgraph::{build_augmented, build_standard, FSchedule, XGraph};

/// Minimum accepted gain in log-volume per exchange, before tolerance.
pub const LOG_GAIN_FLOOR: f64 = std::f64::consts::LN_2;
/// Slack on the doubling assertion.
pub const GAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Exchange cap; `None` derives it from the instance encoding length.
    pub max_iterations: Option<usize>,
    pub epsilon_rank: f64,
    pub trace: bool,
    /// Explicit starting basis instead of the matroid-intersection one.
    pub start_basis: Option<Vec<usize>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: None,
            epsilon_rank: DEFAULT_EPS_RANK,
            trace: false,
            start_basis: None,
        }
    }
}

impl SolverConfig {
    pub fn with_start(mut self, start: Vec<usize>) -> Self {
        self.start_basis = Some(start);
        self
    }

    /// Cap actually applied to `vs`/`m`: `64 * σ` with `σ` the encoding length in bits.
    pub fn iteration_cap(&self, vs: &VectorSet, m: &Matroid) -> usize {
        self.max_iterations
            .unwrap_or_else(|| 64 * encoding_bits(vs, m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Matroid rank equals the dimension.
    FullRank,
    /// Matroid rank below the dimension (two-stage search).
    LowRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No violating cycle remains.
    Converged,
    /// Stopped at the iteration cap with a violating cycle still present.
    IterationCap,
}

/// One accepted exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeRecord {
    pub stage: u8,
    pub hops: usize,
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
    pub pre_log_vol: f64,
    pub post_log_vol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub mode: Mode,
    pub start: Vec<usize>,
    pub selected: Vec<usize>,
    pub log_vol: LogVolume,
    pub iterations: usize,
    pub history: Vec<ExchangeRecord>,
    pub termination: Termination,
}

impl Solution {
    /// `iter=K stage=S hops=H dlogvol=X` per exchange.
    pub fn trace_lines(&self) -> Vec<String> {
        self.history
            .iter()
            .enumerate()
            .map(|(k, r)| {
                format!(
                    "iter={} stage={} hops={} dlogvol={:.16e}",
                    k + 1,
                    r.stage,
                    r.hops,
                    r.post_log_vol - r.pre_log_vol
                )
            })
            .collect()
    }
}

/// Result of applying a cycle to the current set.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub selected: Vec<usize>,
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
    pub pre: LogVolume,
    pub post: LogVolume,
}

/// Applies `S Δ C`, projecting augmented left nodes to their ground element,
/// and checks independence and volume doubling before returning it.
pub fn exchange_step(
    vs: &VectorSet,
    m: &Matroid,
    s: &[usize],
    g: &XGraph,
    c: &Cycle,
) -> Result<Exchange> {
    let removed: Vec<usize> = c.right_nodes(g).map(|v| g.node(v).element).collect();
    let added: Vec<usize> = c.left_nodes(g).map(|u| g.node(u).element).collect();
    let mut check = added.clone();
    check.sort_unstable();
    check.dedup();
    if check.len() != added.len() {
        return Err(Error::InvariantViolation(format!(
            "cycle uses both copies of an element: {added:?}"
        )));
    }
    if removed.iter().any(|v| !s.contains(v)) || added.iter().any(|u| s.contains(u)) {
        return Err(Error::InvariantViolation(
            "cycle does not alternate between outside and inside elements".into(),
        ));
    }
    let mut next: Vec<usize> = s
        .iter()
        .copied()
        .filter(|x| !removed.contains(x))
        .chain(added.iter().copied())
        .collect();
    next.sort_unstable();

    if !m.is_independent(&next)? {
        return Err(Error::InvariantViolation(format!(
            "exchange produced a dependent set {next:?}"
        )));
    }
    let pre = linalg::log_volume(vs, s)?;
    let post = linalg::log_volume(vs, &next)?;
    let gain = post.log_ratio(pre);
    if !(gain >= LOG_GAIN_FLOOR - GAIN_TOLERANCE) {
        return Err(Error::InvariantViolation(format!(
            "exchange on {}-hop cycle changed log-volume by {gain:e}, expected at least ln 2",
            c.hops()
        )));
    }
    Ok(Exchange {
        selected: next,
        removed,
        added,
        pre,
        post,
    })
}

fn starting_basis(vs: &VectorSet, m: &Matroid, cfg: &SolverConfig) -> Result<Vec<usize>> {
    let Some(start) = &cfg.start_basis else {
        return find_common_basis(m, vs);
    };
    let mut s = start.clone();
    s.sort_unstable();
    if s.len() != m.rank() || !m.is_independent(&s)? {
        return Err(Error::InvalidInstance(
            "start basis is not a basis of the matroid".into(),
        ));
    }
    if linalg::log_volume(vs, &s)?.is_zero() {
        return Err(Error::InvalidInstance("start basis has zero volume".into()));
    }
    Ok(s)
}

fn prepare(vs: &VectorSet, m: &Matroid, cfg: &SolverConfig) -> Result<VectorSet> {
    if m.ground_size() != vs.len() {
        return Err(Error::InvalidInstance(format!(
            "matroid ground set has {} elements but there are {} vectors",
            m.ground_size(),
            vs.len()
        )));
    }
    if m.rank() > vs.dim() {
        return Err(Error::InvalidInstance(format!(
            "matroid rank {} exceeds dimension {}",
            m.rank(),
            vs.dim()
        )));
    }
    Ok(vs.clone().with_eps_rank(cfg.epsilon_rank))
}

/// Finds the next exchange cycle: `(stage, graph, cycle)`.
type Search<'a> = dyn Fn(&[usize]) -> Result<Option<(u8, XGraph, Cycle)>> + 'a;

fn run(
    vs: &VectorSet,
    m: &Matroid,
    cfg: &SolverConfig,
    mode: Mode,
    search: &Search<'_>,
) -> Result<Solution> {
    let start = starting_basis(vs, m, cfg)?;
    let cap = cfg.iteration_cap(vs, m);
    let mut s = start.clone();
    let mut history = Vec::new();
    let termination = loop {
        let Some((stage, g, c)) = search(&s)? else {
            break Termination::Converged;
        };
        if history.len() >= cap {
            log::warn!("iteration cap {cap} reached with a violating cycle left");
            break Termination::IterationCap;
        }
        let ex = exchange_step(vs, m, &s, &g, &c)?;
        let record = ExchangeRecord {
            stage,
            hops: c.hops(),
            removed: ex.removed,
            added: ex.added,
            pre_log_vol: ex.pre.value(),
            post_log_vol: ex.post.value(),
        };
        log::debug!(
            "iter={} stage={} hops={} dlogvol={:.6}",
            history.len() + 1,
            stage,
            record.hops,
            record.post_log_vol - record.pre_log_vol
        );
        if cfg.trace {
            log::info!(
                "exchange {}: -{:?} +{:?}",
                history.len() + 1,
                record.removed,
                record.added
            );
        }
        history.push(record);
        s = ex.selected;
    };
    let log_vol = linalg::log_volume(vs, &s)?;
    Ok(Solution {
        mode,
        start,
        selected: s,
        log_vol,
        iterations: history.len(),
        history,
        termination,
    })
}

/// Full-rank search (matroid rank equal to the dimension).
pub fn solve_rank_d(vs: &VectorSet, m: &Matroid, cfg: &SolverConfig) -> Result<Solution> {
    let vs = prepare(vs, m, cfg)?;
    if m.rank() != vs.dim() {
        return Err(Error::InvalidInstance(format!(
            "full-rank search needs matroid rank {} to equal dimension {}",
            m.rank(),
            vs.dim()
        )));
    }
    let fs = FSchedule::standard(m.rank());
    let search = |s: &[usize]| -> Result<Option<(u8, XGraph, Cycle)>> {
        let g = build_standard(&vs, m, s)?;
        Ok(find_minimal_violating(&g, &fs).map(|c| (1, g, c)))
    };
    run(&vs, m, cfg, Mode::FullRank, &search)
}

/// Two-stage search for any rank `r <= d`.
pub fn solve_rank_r(vs: &VectorSet, m: &Matroid, cfg: &SolverConfig) -> Result<Solution> {
    let vs = prepare(vs, m, cfg)?;
    let fs = FSchedule::standard(m.rank());
    let fa = FSchedule::augmented(m.rank());
    let search = |s: &[usize]| -> Result<Option<(u8, XGraph, Cycle)>> {
        let g = build_standard(&vs, m, s)?;
        if let Some(c) = find_minimal_violating(&g, &fs) {
            return Ok(Some((1, g, c)));
        }
        let ga = build_augmented(&vs, m, s)?;
        Ok(find_minimal_violating(&ga, &fa).map(|c| (2, ga, c)))
    };
    let mode = if m.rank() == vs.dim() {
        Mode::FullRank
    } else {
        Mode::LowRank
    };
    run(&vs, m, cfg, mode, &search)
}

/// Dispatches on the matroid rank.
pub fn solve(vs: &VectorSet, m: &Matroid, cfg: &SolverConfig) -> Result<Solution> {
    if m.rank() == vs.dim() {
        solve_rank_d(vs, m, cfg)
    } else {
        solve_rank_r(vs, m, cfg)
    }
}

/// Guarantee implied by the absence of violating cycles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub certified: bool,
    /// Bound on `log(vol(OPT) / vol(S))`.
    pub log_bound: f64,
    /// The same bound on the determinant scale (twice `log_bound`).
    pub log_det_bound: f64,
}

/// `log` of the volume-ratio guarantee for rank `r` in dimension `d`.
///
/// At full rank this is `5 d ln d` for `d >= 2`. For `d = 1` (and below full
/// rank) the bound is `2 r ln r + log f~(r)`, which is `ln 2` at `r = 1`.
pub fn guarantee_log_bound(rank: usize, dim: usize) -> f64 {
    let r = rank as f64;
    if rank == dim && rank >= 2 {
        5.0 * r * r.ln()
    } else {
        2.0 * r * r.ln() + FSchedule::augmented(rank.max(1)).log_f(rank.max(1))
    }
}

/// Recomputes that no violating cycle remains at `sol.selected` and reports the
/// implied bound.
pub fn certify(vs: &VectorSet, m: &Matroid, sol: &Solution) -> Result<Certificate> {
    let r = m.rank();
    let log_bound = guarantee_log_bound(r, vs.dim());
    let mut certified = sol.termination == Termination::Converged;
    if certified {
        let g = build_standard(vs, m, &sol.selected)?;
        certified = find_minimal_violating(&g, &FSchedule::standard(r)).is_none();
        if certified && r < vs.dim() {
            let ga = build_augmented(vs, m, &sol.selected)?;
            certified = find_minimal_violating(&ga, &FSchedule::augmented(r)).is_none();
        }
    }
    Ok(Certificate {
        certified,
        log_bound,
        log_det_bound: 2.0 * log_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroids::MatroidSpec;

    fn vectors(cols: &[&[f64]]) -> VectorSet {
        VectorSet::new(cols[0].len(), cols.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    fn partition(blocks: &[&[usize]]) -> Matroid {
        Matroid::new(MatroidSpec::Partition {
            blocks: blocks.iter().map(|b| b.to_vec()).collect(),
        })
        .unwrap()
    }

    #[test]
    fn one_exchange_to_optimum() {
        let vs = vectors(&[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0]]);
        let m = partition(&[&[0, 1], &[2]]);
        let sol = solve_rank_d(&vs, &m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.start, vec![0, 2]);
        assert_eq!(sol.selected, vec![1, 2]);
        assert_eq!(sol.iterations, 1);
        assert!((sol.log_vol.value() - 3f64.ln()).abs() < 1e-12);
        assert_eq!(sol.termination, Termination::Converged);
        let rec = &sol.history[0];
        assert_eq!((rec.stage, rec.hops), (1, 2));
        assert_eq!((rec.removed.clone(), rec.added.clone()), (vec![0], vec![1]));
        assert_eq!(sol.trace_lines()[0], format!("iter=1 stage=1 hops=2 dlogvol={:.16e}", rec.post_log_vol - rec.pre_log_vol));
    }

    #[test]
    fn singleton_blocks_do_nothing() {
        let vs = vectors(&[&[2.0, 1.0], &[0.0, 1.0]]);
        let m = partition(&[&[0], &[1]]);
        let sol = solve_rank_d(&vs, &m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.selected, vec![0, 1]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn low_rank_uses_perpendicular_stage() {
        let vs = vectors(&[&[1.0, 0.0], &[0.0, 5.0]]);
        let m = Matroid::new(MatroidSpec::Uniform { size: 2, rank: 1 }).unwrap();
        let sol = solve_rank_r(&vs, &m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.start, vec![0]);
        assert_eq!(sol.selected, vec![1]);
        assert_eq!(sol.history.len(), 1);
        assert_eq!(sol.history[0].stage, 2);
        assert_eq!(sol.mode, Mode::LowRank);
    }

    #[test]
    fn low_rank_below_threshold() {
        let vs = vectors(&[&[1.0, 0.0], &[0.0, 1.5]]);
        let m = Matroid::new(MatroidSpec::Uniform { size: 2, rank: 1 }).unwrap();
        let sol = solve_rank_r(&vs, &m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.selected, vec![0]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn full_rank_through_both_entry_points() {
        let vs = vectors(&[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0], &[0.0, 7.0]]);
        let m = partition(&[&[0, 1], &[2, 3]]);
        let a = solve_rank_d(&vs, &m, &SolverConfig::default()).unwrap();
        let b = solve_rank_r(&vs, &m, &SolverConfig::default()).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.selected, vec![1, 3]);
    }

    #[test]
    fn infeasible_and_bad_start() {
        let vs = vectors(&[&[1.0, 0.0], &[2.0, 0.0]]);
        let m = partition(&[&[0], &[1]]);
        assert_eq!(
            solve(&vs, &m, &SolverConfig::default()),
            Err(Error::Infeasible)
        );
        let vs = vectors(&[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0]]);
        let m = partition(&[&[0, 1], &[2]]);
        let cfg = SolverConfig::default().with_start(vec![0, 1]);
        assert!(matches!(solve(&vs, &m, &cfg), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let vs = vectors(&[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0]]);
        let m = partition(&[&[0, 1], &[2]]);
        let cfg = SolverConfig {
            max_iterations: Some(0),
            ..SolverConfig::default()
        };
        let sol = solve(&vs, &m, &cfg).unwrap();
        assert_eq!(sol.termination, Termination::IterationCap);
        assert_eq!(sol.selected, vec![0, 2]);
        let cert = certify(&vs, &m, &sol).unwrap();
        assert!(!cert.certified);
    }

    #[test]
    fn certificate_bounds() {
        let vs = vectors(&[&[1.0, 0.0], &[3.0, 0.0], &[0.0, 1.0]]);
        let m = partition(&[&[0, 1], &[2]]);
        let sol = solve(&vs, &m, &SolverConfig::default()).unwrap();
        let cert = certify(&vs, &m, &sol).unwrap();
        assert!(cert.certified);
        assert!((cert.log_bound - 10.0 * 2f64.ln()).abs() < 1e-12);
        assert!((cert.log_det_bound - 20.0 * 2f64.ln()).abs() < 1e-12);

        // rank 2 in dimension 3: 4 ln 2 + 11 ln 2
        assert!((guarantee_log_bound(2, 3) - 15.0 * 2f64.ln()).abs() < 1e-12);
        assert!((guarantee_log_bound(1, 1) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rank_one_stops_short_of_the_rank_r_bound() {
        // a = 2 and |u⊥|/|s| = 2 both sit exactly on the f~(1) = 2 threshold, so
        // neither graph has a violating cycle, yet vol(u)/vol(s) = 2√2 > 2.
        let vs = vectors(&[&[1.0, 0.0], &[2.0, 2.0]]);
        let m = Matroid::new(MatroidSpec::Uniform { size: 2, rank: 1 }).unwrap();
        let sol = solve(&vs, &m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.selected, vec![0]);
        assert!(certify(&vs, &m, &sol).unwrap().certified);
        let gap = linalg::log_volume(&vs, &[1]).unwrap().value() - sol.log_vol.value();
        assert!((gap - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!(gap > guarantee_log_bound(1, 2));
    }

    #[test]
    fn exchange_step_rejects_both_copies() {
        // u = (1, 1) in R^3 over S = {e1, e2}: parallel and perpendicular copies
        let vs = vectors(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[3.0, 3.0, 3.0]]);
        let m = Matroid::new(MatroidSpec::Uniform { size: 3, rank: 2 }).unwrap();
        let g = build_augmented(&vs, &m, &[0, 1]).unwrap();
        use crate::xgraph::{Flavor, Side};
        let par = g.find_node(Side::Left, 2, Flavor::Parallel).unwrap();
        let perp = g.find_node(Side::Left, 2, Flavor::Perpendicular).unwrap();
        let v0 = g.find_node(Side::Right, 0, Flavor::Plain).unwrap();
        let v1 = g.find_node(Side::Right, 1, Flavor::Plain).unwrap();
        let c = Cycle::new(&g, &[par, v0, perp, v1]);
        assert!(matches!(
            exchange_step(&vs, &m, &[0, 1], &g, &c),
            Err(Error::InvariantViolation(_))
        ));
    }
}
