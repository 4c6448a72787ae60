use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use detmax::generate::{self, GraphShape};
use detmax::instance::InstanceFile;
use detmax::report::{error_exit_status, exit_status, run, RunOptions};
use detmax::solver::SolverConfig;

#[derive(Parser)]
#[command(name = "detmax", version, about = "Determinant maximization under matroid constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the JSON report.
    Run(RunArgs),
    /// Check an instance file without solving.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Write a generated instance file.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Attach the exhaustive optimum to the report.
    #[arg(long)]
    brute_force: bool,
    /// Print one line per exchange to stderr.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    eps_rank: Option<f64>,
    /// Comma-separated start basis, e.g. "0,2,5".
    #[arg(long)]
    start_basis: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Hadamard,
    RandomPartition,
    RandomUniform,
    Graphic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Path,
    Complete,
    Random,
}

#[derive(Args)]
struct GenArgs {
    kind: GenKind,
    /// Hadamard order exponent (d = 2^k).
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    #[arg(long, default_value_t = 2)]
    per_block: usize,
    /// Vector count for random-uniform; vertex count for graphic.
    #[arg(long, short)]
    n: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, value_enum, default_value_t = Shape::Path)]
    shape: Shape,
    /// Edge count for random graphs.
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the exit status it maps to.
struct Failure(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(2, e.into())
    }
}

fn read_instance(path: &Path) -> anyhow::Result<InstanceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    InstanceFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_basis(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| anyhow!("bad start-basis entry {t:?}: {e}"))
        })
        .collect()
}

fn cmd_run(a: RunArgs) -> Result<u8, Failure> {
    let inst = read_instance(&a.instance)?.into_instance()?;
    let mut config = SolverConfig {
        max_iterations: a.max_iters,
        trace: a.trace,
        ..SolverConfig::default()
    };
    if let Some(eps) = a.eps_rank {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Failure(2, anyhow!("--eps-rank must lie in (0, 1)")));
        }
        config.epsilon_rank = eps;
    }
    if a.max_iters == Some(0) {
        return Err(Failure(2, anyhow!("--max-iters must be at least 1")));
    }
    if let Some(s) = &a.start_basis {
        config.start_basis = Some(parse_basis(s)?);
    }
    let opts = RunOptions {
        config,
        brute_force: a.brute_force,
        ..RunOptions::default()
    };
    let out = run(&inst, &opts).map_err(|e| {
        let code = error_exit_status(&e) as u8;
        Failure(code, e.into())
    })?;
    if a.trace {
        for line in out.solution.trace_lines() {
            eprintln!("{line}");
        }
    }
    emit(a.out.as_deref(), &out.report.to_json())?;
    Ok(exit_status(&out.report) as u8)
}

fn cmd_validate(path: &Path) -> Result<u8, Failure> {
    let diag = read_instance(path)?.validate();
    print!("{}", diag.to_json());
    Ok(if diag.ok { 0 } else { 2 })
}

fn cmd_gen(a: GenArgs) -> Result<u8, Failure> {
    let f = match a.kind {
        GenKind::Hadamard => generate::hadamard(a.k)?,
        GenKind::RandomPartition => {
            generate::random_partition(a.d.unwrap_or(a.blocks), a.blocks, a.per_block, a.seed)?
        }
        GenKind::RandomUniform => {
            let d = a.d.ok_or_else(|| anyhow!("random-uniform needs --d"))?;
            let n = a.n.ok_or_else(|| anyhow!("random-uniform needs --n"))?;
            generate::random_uniform(d, n, a.rank.unwrap_or(d.min(n)), a.seed)?
        }
        GenKind::Graphic => {
            let vertices = a.n.ok_or_else(|| anyhow!("graphic needs --n (vertex count)"))?;
            let shape = match a.shape {
                Shape::Path => GraphShape::Path,
                Shape::Complete => GraphShape::Complete,
                Shape::Random => GraphShape::Random {
                    edges: a.edges.ok_or_else(|| anyhow!("random graphs need --edges"))?,
                },
            };
            generate::graphic(shape, vertices, a.d, a.seed)?
        }
    };
    if !f.validate().ok {
        return Err(anyhow!("generated instance failed validation").into());
    }
    emit(a.out.as_deref(), &f.to_json())?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DETMAX_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Validate { instance } => cmd_validate(&instance),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
