//! Machine-readable run reports and the solve/certify/oracle pipeline behind `detmax run`.

use std::time::Instant;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::instance::{Instance, SCHEMA_VERSION};
use crate::linalg;
use crate::oracle::{brute_force_opt, OptReport, DEFAULT_BASIS_CAP};
use crate::solver::{certify, solve, Certificate, Solution, SolverConfig, Termination};

/// A real written with 17 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0))
                .map_err(serde::ser::Error::custom)?;
            raw.serialize(ser)
        } else {
            ser.serialize_none()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeEntry {
    pub stage: u8,
    pub hops: usize,
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
    pub pre_log_vol: Real,
    pub post_log_vol: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateEntry {
    pub certified: bool,
    pub log_bound: Real,
    pub log_det_bound: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEntry {
    pub opt_set: Vec<usize>,
    pub opt_log_vol: Real,
    pub opt_log_det: Real,
    pub basis_count: usize,
    /// `log det(OPT) - log det(S)`.
    pub log_det_gap: Real,
    /// The gap is within the certified bound.
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub selected: Vec<usize>,
    pub start: Vec<usize>,
    pub log_det: Real,
    pub iterations: usize,
    pub termination: Termination,
    pub exchange_history: Vec<ExchangeEntry>,
    pub certificate: CertificateEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleEntry>,
    pub timing: Timing,
}

impl RunReport {
    pub fn build(sol: &Solution, cert: &Certificate, opt: Option<&OptReport>, elapsed_ms: f64) -> Self {
        let log_det = 2.0 * sol.log_vol.value();
        let oracle = opt.map(|o| {
            let gap = 2.0 * o.opt_log_vol - log_det;
            OracleEntry {
                opt_set: o.opt_set.clone(),
                opt_log_vol: Real(o.opt_log_vol),
                opt_log_det: Real(2.0 * o.opt_log_vol),
                basis_count: o.basis_count,
                log_det_gap: Real(gap),
                within_bound: gap <= cert.log_det_bound + 1e-9,
            }
        });
        RunReport {
            schema_version: SCHEMA_VERSION,
            selected: sol.selected.clone(),
            start: sol.start.clone(),
            log_det: Real(log_det),
            iterations: sol.iterations,
            termination: sol.termination,
            exchange_history: sol
                .history
                .iter()
                .map(|r| ExchangeEntry {
                    stage: r.stage,
                    hops: r.hops,
                    removed: r.removed.clone(),
                    added: r.added.clone(),
                    pre_log_vol: Real(r.pre_log_vol),
                    post_log_vol: Real(r.post_log_vol),
                })
                .collect(),
            certificate: CertificateEntry {
                certified: cert.certified,
                log_bound: Real(cert.log_bound),
                log_det_bound: Real(cert.log_det_bound),
            },
            oracle,
            timing: Timing { elapsed_ms },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// JSON with the timing field zeroed, for reproducibility comparisons.
    pub fn to_json_without_timing(&self) -> String {
        let mut r = self.clone();
        r.timing.elapsed_ms = 0.0;
        r.to_json()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub config: SolverConfig,
    pub brute_force: bool,
    pub oracle_cap: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            config: SolverConfig::default(),
            brute_force: false,
            oracle_cap: DEFAULT_BASIS_CAP,
        }
    }
}

/// Output of [`run`]: the report plus the solution it was built from.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub solution: Solution,
}

/// Solves `inst`, certifies the result and optionally attaches brute-force OPT.
///
/// A start basis in `opts.config` takes precedence over the instance's own.
pub fn run(inst: &Instance, opts: &RunOptions) -> Result<RunOutcome> {
    let t0 = Instant::now();
    let mut cfg = opts.config.clone();
    if cfg.start_basis.is_none() {
        cfg.start_basis = inst.start_basis.clone();
    }
    let vs = inst.vectors.clone().with_eps_rank(cfg.epsilon_rank);
    let sol = solve(&vs, &inst.matroid, &cfg)?;
    let check = linalg::log_volume(&vs, &sol.selected)?;
    if (check.value() - sol.log_vol.value()).abs() > 1e-9 && check != sol.log_vol {
        return Err(Error::InvariantViolation(
            "reported log-volume disagrees with the selected set".into(),
        ));
    }
    let cert = certify(&vs, &inst.matroid, &sol)?;
    let opt = if opts.brute_force {
        Some(brute_force_opt(&vs, &inst.matroid, opts.oracle_cap, false)?)
    } else {
        None
    };
    let elapsed_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(RunOutcome {
        report: RunReport::build(&sol, &cert, opt.as_ref(), elapsed_ms),
        solution: sol,
    })
}

/// Process exit status for a finished run: 0, or 4 when the iteration cap was hit.
pub fn exit_status(report: &RunReport) -> i32 {
    match report.termination {
        Termination::Converged => 0,
        Termination::IterationCap => 4,
    }
}

/// Process exit status for a failed run.
pub fn error_exit_status(err: &Error) -> i32 {
    match err {
        Error::Infeasible => 3,
        Error::IterationCap { .. } => 4,
        Error::InvariantViolation(_) => 5,
        _ => 2,
    }
}
