//! Ground truth for small instances: exhaustive basis enumeration, an
//! independent determinant path, and a replay checker for solver traces.
//!
//! Nothing here goes through the solver's QR kernel when computing volumes, so
//! a bug there cannot hide behind a matching bug here.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linalg::{self, LogVolume, VectorSet};
use crate::matroids::{IndependenceOracle, Matroid, MatroidSpec};
use crate::solver::{guarantee_log_bound, Solution, Termination, GAIN_TOLERANCE, LOG_GAIN_FLOOR};
use crate::xgraph::{build_augmented, build_standard, Flavor, Side};

pub const DEFAULT_BASIS_CAP: usize = 1_000_000;

/// Largest size handled by cofactor expansion of the Gram matrix.
const COFACTOR_MAX: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptReport {
    pub opt_set: Vec<usize>,
    pub opt_log_vol: f64,
    pub basis_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_basis: Option<Vec<(Vec<usize>, f64)>>,
}

fn laplace_det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][j] * laplace_det(&minor)
            })
            .sum(),
    }
}

/// `e_k` of `values` by the usual recurrence.
pub fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &x in values {
        for j in (1..=k.min(values.len())).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

/// `log sym_r(Σ_{i∈s} v_i v_iᵀ)` from the eigenvalues of the `d x d` outer-product sum.
pub fn log_sym_r_eigen(vs: &VectorSet, s: &[usize]) -> f64 {
    let d = vs.dim();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for &i in s {
        let v = nalgebra::DVector::from_column_slice(vs.column(i));
        m += &v * v.transpose();
    }
    let eig = SymmetricEigen::new(m);
    let e = elementary_symmetric(eig.eigenvalues.as_slice(), s.len());
    if e > 0.0 {
        e.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Squared volume of `s`: Gram cofactor expansion for small sets, eigenvalues otherwise.
fn gram_det(vs: &VectorSet, s: &[usize]) -> f64 {
    if s.len() <= COFACTOR_MAX {
        let gram: Vec<Vec<f64>> = s
            .iter()
            .map(|&i| {
                s.iter()
                    .map(|&j| {
                        vs.column(i)
                            .iter()
                            .zip(vs.column(j))
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        laplace_det(&gram)
    } else {
        log_sym_r_eigen(vs, s).exp()
    }
}

/// Log-volume through the oracle's own path. Volumes below
/// `eps_rank * scale^|s|` count as zero.
pub fn oracle_log_volume(vs: &VectorSet, s: &[usize]) -> LogVolume {
    let det = gram_det(vs, s);
    let r = s.len() as f64;
    let floor = 2.0 * (vs.eps_rank().ln() + r * vs.scale().ln());
    if det <= 0.0 || det.ln() <= floor {
        LogVolume::ZERO
    } else {
        LogVolume::new(0.5 * det.ln())
    }
}

/// All bases of `m` in lexicographic order, with their volumes; keeps the best.
pub fn brute_force_opt(vs: &VectorSet, m: &Matroid, cap: usize, keep_all: bool) -> Result<OptReport> {
    if m.ground_size() != vs.len() {
        return Err(Error::InvalidInstance(
            "matroid and vectors disagree on the ground set size".into(),
        ));
    }
    struct Walk<'a> {
        vs: &'a VectorSet,
        m: &'a Matroid,
        cap: usize,
        cur: Vec<usize>,
        count: usize,
        best: Option<(Vec<usize>, LogVolume)>,
        all: Option<Vec<(Vec<usize>, f64)>>,
    }
    impl Walk<'_> {
        fn go(&mut self, next: usize) -> Result<()> {
            let r = self.m.rank();
            if self.cur.len() == r {
                self.count += 1;
                if self.count > self.cap {
                    return Err(Error::OracleCapExceeded { cap: self.cap });
                }
                let lv = oracle_log_volume(self.vs, &self.cur);
                if let Some(all) = &mut self.all {
                    all.push((self.cur.clone(), lv.value()));
                }
                // strict: the earlier (lexicographically smaller) set wins ties
                if self.best.as_ref().is_none_or(|(_, b)| lv > *b) {
                    self.best = Some((self.cur.clone(), lv));
                }
                return Ok(());
            }
            let n = self.m.ground_size();
            for e in next..n {
                if n - e < r - self.cur.len() {
                    break;
                }
                self.cur.push(e);
                if self.m.is_independent(&self.cur)? {
                    self.go(e + 1)?;
                }
                self.cur.pop();
            }
            Ok(())
        }
    }
    let mut w = Walk {
        vs,
        m,
        cap,
        cur: Vec::new(),
        count: 0,
        best: None,
        all: keep_all.then(Vec::new),
    };
    w.go(0)?;
    let (opt_set, opt) = w.best.unwrap_or((Vec::new(), LogVolume::ZERO));
    Ok(OptReport {
        opt_set,
        opt_log_vol: opt.value(),
        basis_count: w.count,
        per_basis: w.all,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LemmaReport {
    pub checks: Vec<Check>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

const IDENTITY_TOL: f64 = 1e-9;

/// Every forward arc at `s` against direct volume ratios.
///
/// At full rank `-w0(u, v)` must equal the log swap ratio. Below full rank the
/// two copies of `u` must satisfy `a² + |u⊥|²/|v⊥|² = ratio²`.
pub fn check_arc_identities(vs: &VectorSet, m: &Matroid, s: &[usize]) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let full = s.len() == vs.dim();
    let g = if full {
        build_standard(vs, m, s)?
    } else {
        build_augmented(vs, m, s)?
    };
    let outside: Vec<usize> = (0..vs.len()).filter(|e| !s.contains(e)).collect();
    for &u in &outside {
        for &v in s {
            let ratio = linalg::swap_log_ratio(vs, s, v, u)?;
            let vn = g.find_node(Side::Right, v, Flavor::Plain).expect("right node");
            let arc = |flavor| {
                g.find_node(Side::Left, u, flavor)
                    .and_then(|un| g.weight(un, vn))
            };
            let lhs = if full {
                arc(Flavor::Plain).map_or(f64::NEG_INFINITY, |w| -w)
            } else {
                // log sqrt(exp(-2 w_par) + exp(-2 w_perp))
                let terms: Vec<f64> = [Flavor::Parallel, Flavor::Perpendicular]
                    .into_iter()
                    .filter_map(arc)
                    .map(|w| -2.0 * w)
                    .collect();
                match terms.iter().copied().reduce(f64::max) {
                    None => f64::NEG_INFINITY,
                    Some(top) => 0.5 * (top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()),
                }
            };
            // arcs below the zero threshold are omitted; only finite ratios are compared
            let comparable = ratio.is_finite() && (lhs.is_finite() || ratio > -20.0);
            if comparable && !((lhs - ratio).abs() <= IDENTITY_TOL) {
                bad.push(format!("arc {u}->{v}: weight gives {lhs:e}, volumes give {ratio:e}"));
            }
        }
    }
    Ok(bad)
}

/// Replays `sol.history` from `sol.start`, checking every exchange and the
/// termination bound (when `opt` is given).
pub fn check_lemma_suite(
    vs: &VectorSet,
    m: &Matroid,
    sol: &Solution,
    opt: Option<&OptReport>,
) -> Result<LemmaReport> {
    let mut rep = LemmaReport::default();
    let full = m.rank() == vs.dim();
    let mut s = sol.start.clone();
    for (k, rec) in sol.history.iter().enumerate() {
        let step = k + 1;
        let bad = check_arc_identities(vs, m, &s)?;
        rep.push("arc_weights", bad.is_empty(), format!("step {step}: {}", bad.join("; ")));

        let mut next: Vec<usize> = s
            .iter()
            .copied()
            .filter(|x| !rec.removed.contains(x))
            .chain(rec.added.iter().copied())
            .collect();
        next.sort_unstable();
        let ok = rec.removed.iter().all(|v| s.contains(v))
            && rec.added.iter().all(|u| !s.contains(u))
            && next.len() == m.rank()
            && m.is_independent(&next)?;
        rep.push("independence", ok, format!("step {step}: {next:?}"));
        if !ok {
            return Ok(rep);
        }

        let pre = linalg::log_volume(vs, &s)?;
        let post = linalg::log_volume(vs, &next)?;
        let gain = post.log_ratio(pre);
        rep.push(
            "doubling",
            gain >= LOG_GAIN_FLOOR - GAIN_TOLERANCE,
            format!("step {step}: log gain {gain:e}"),
        );

        let det = linalg::exchange_determinant(vs, &s, &rec.removed, &rec.added)?;
        let (name, ok) = if full {
            ("exchange_determinant_equality", (gain - det).abs() <= IDENTITY_TOL || gain == det)
        } else {
            ("exchange_determinant_inequality", gain >= det - IDENTITY_TOL)
        };
        rep.push(name, ok, format!("step {step}: log gain {gain:e}, log|det A_C| {det:e}"));
        s = next;
    }
    let end = linalg::log_volume(vs, &s)?;
    rep.push(
        "final_state",
        s == sol.selected && (end.value() - sol.log_vol.value()).abs() <= IDENTITY_TOL
            || (end.is_zero() && sol.log_vol.is_zero()),
        format!("replayed {s:?}, reported {:?}", sol.selected),
    );
    if let Some(opt) = opt {
        let gap = opt.opt_log_vol - end.value();
        let start = linalg::log_volume(vs, &sol.start)?;
        let max_steps = ((opt.opt_log_vol - start.value()) / LOG_GAIN_FLOOR + 1e-9).ceil();
        rep.push(
            "iteration_bound",
            (sol.history.len() as f64) <= max_steps.max(0.0),
            format!("{} exchanges, at most {max_steps} allowed", sol.history.len()),
        );
        if sol.termination == Termination::Converged {
            let bound = guarantee_log_bound(m.rank(), vs.dim());
            rep.push(
                "guarantee",
                gap <= bound + IDENTITY_TOL,
                format!("log(OPT/S) = {gap:e}, bound {bound:e}"),
            );
        }
    }
    Ok(rep)
}

fn sylvester(d: usize) -> Vec<Vec<f64>> {
    let mut h = vec![vec![1.0]];
    while h.len() < d {
        let n = h.len();
        let mut next = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = h[i][j];
                next[i][j + n] = h[i][j];
                next[i + n][j] = h[i][j];
                next[i + n][j + n] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

/// Blocks `{e_i, h_i}` with `h_i` the Sylvester Hadamard columns (`d = 2^k`),
/// started from the standard basis.
pub fn hadamard_fixture(k: u32) -> Result<Instance> {
    if k == 0 {
        return Err(Error::InvalidInstance("hadamard fixture needs k >= 1".into()));
    }
    let d = 1usize << k;
    let h = sylvester(d);
    let mut columns: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    // Sylvester H is symmetric, so rows are columns
    columns.extend(h);
    let blocks = (0..d).map(|i| vec![i, d + i]).collect();
    Ok(Instance {
        vectors: VectorSet::new(d, columns)?,
        matroid: Matroid::new(MatroidSpec::Partition { blocks })?,
        start_basis: Some((0..d).collect()),
    })
}
