//! Command-line front end: `gen`, `run`, `verify` and `bench`.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or parse error,
//! 3 internal violation.

mod run;
mod verify;

pub use run::{bench, bench_header, execute, BenchRow, RunMetrics, RunOutput};
pub use verify::{verify, VerifyReport};

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::constants::{MEM_FACTOR, MM_DELTA};
use crate::gen::{self, Generator};
use crate::graph::{Batch, Graph, GraphError};
use crate::io;
use crate::mpc::{scale, stream_rng, MpcError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Problem {
    Msf,
    #[value(name = "2ecc")]
    #[serde(rename = "2ecc")]
    TwoEcc,
    Mm,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("internal violation: {0}")]
    Violation(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Violation(_) => 3,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MpcError> for CliError {
    fn from(e: MpcError) -> Self {
        CliError::Violation(e.to_string())
    }
}

/// One experiment: a seeded workload for one problem.
#[derive(Args, Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    #[arg(long, value_enum, default_value = "msf")]
    pub problem: Problem,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Batch size; 0 picks `ceil(n^(1/2))`.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub batches: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "gnm")]
    pub generator: Generator,
}

impl ExperimentSpec {
    pub fn new(problem: Problem, n: usize, m: usize) -> Self {
        ExperimentSpec { problem, n, m, alpha: 0.5, k: 0, batches: 0, seed: 1, generator: Generator::Uniform }
    }

    pub fn batch_size(&self) -> usize {
        if self.k == 0 {
            scale(self.n, 0.5)
        } else {
            self.k
        }
    }

    /// Local memory `S` the run will use.
    pub fn words_per_machine(&self) -> usize {
        MEM_FACTOR * scale(self.n, self.alpha)
    }

    /// Admission bound on the batch size for this problem.
    pub fn batch_limit(&self) -> usize {
        let s = self.words_per_machine();
        match self.problem {
            Problem::Msf | Problem::TwoEcc => s,
            Problem::Mm => (s as f64).powf(1.0 - MM_DELTA).ceil() as usize,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.n == 0 {
            return Err(CliError::Usage("n must be positive".into()));
        }
        if self.problem == Problem::TwoEcc && self.n > crate::twoecc::MAX_VERTICES {
            return Err(CliError::Usage(format!("2ecc supports at most {} vertices", crate::twoecc::MAX_VERTICES)));
        }
        let (k, limit) = (self.batch_size(), self.batch_limit());
        if self.batches > 0 && k > limit {
            return Err(CliError::Usage(format!("batch size {k} exceeds the admission bound {limit}")));
        }
        Ok(())
    }

    /// The graph and batches this spec describes; identical for equal specs.
    pub fn generate(&self) -> (Graph, Vec<Batch>) {
        let mut rng = stream_rng(self.seed, 0);
        let g = gen::graph(self.generator, self.n, self.m, &mut rng);
        let b = gen::batches_for(self.generator, &g, self.batch_size(), self.batches, &mut rng);
        (g, b)
    }
}

#[derive(Parser, Debug)]
#[command(name = "bdmpc", version, about = "Batch-dynamic graph algorithms on a simulated MPC machine")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a graph file and an update file.
    Gen {
        #[command(flatten)]
        spec: ExperimentSpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Process a workload and write scripts and metrics.
    Run {
        #[command(flatten)]
        spec: ExperimentSpec,
        /// Graph file; the spec generates one when absent.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, requires = "graph")]
        updates: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay scripts against the oracles.
    Verify {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        updates: Option<PathBuf>,
        #[arg(long)]
        scripts: PathBuf,
    },
    /// Rounds across a sweep of `n` and `alpha`, as CSV.
    Bench {
        #[arg(long, value_enum, default_value = "msf")]
        problem: Problem,
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        /// Edges per vertex.
        #[arg(long, default_value_t = 4)]
        density: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        batches: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load(graph: &Path, updates: Option<&Path>) -> Result<(Graph, Vec<Batch>), CliError> {
    let g = io::parse_graph(&read(graph)?)?;
    let b = match updates {
        Some(p) => io::parse_updates(&read(p)?)?,
        None => Vec::new(),
    };
    Ok((g, b))
}

/// Runs one command and returns its stdout text.
pub fn dispatch(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Gen { spec, out } => {
            spec.validate()?;
            let (g, b) = spec.generate();
            ensure_dir(&out)?;
            write(&out.join("graph.txt"), &io::write_graph(&g))?;
            write(&out.join("updates.txt"), &io::write_updates(&b))?;
            Ok(format!("wrote {} edges and {} batches to {}\n", g.m(), b.len(), out.display()))
        }
        Command::Run { spec, graph, updates, out } => {
            spec.validate()?;
            let (g, b) = match &graph {
                Some(p) => load(p, updates.as_deref())?,
                None => spec.generate(),
            };
            let res = execute(spec.problem, spec.alpha, spec.seed, &g, &b)?;
            let json = serde_json::to_string_pretty(&res.metrics).expect("metrics serialise");
            match out {
                Some(dir) => {
                    ensure_dir(&dir)?;
                    write(&dir.join("scripts.txt"), &res.scripts)?;
                    write(&dir.join("metrics.json"), &json)?;
                    Ok(format!(
                        "{} batches, {} preprocessing rounds, {} batch rounds\n",
                        b.len(),
                        res.metrics.preprocess.rounds,
                        res.metrics.rounds_per_batch.iter().sum::<usize>()
                    ))
                }
                None => Ok(res.scripts),
            }
        }
        Command::Verify { problem, graph, updates, scripts } => {
            let (g, b) = load(&graph, updates.as_deref())?;
            let report = verify(problem, &g, &b, &read(&scripts)?)?;
            Ok(format!("PASS {} batches, {} prefixes\n", report.batches, report.prefixes))
        }
        Command::Bench { problem, ns, alphas, density, k, batches, seed, out } => {
            let mut csv = bench_header();
            for &n in &ns {
                for &alpha in &alphas {
                    let spec = ExperimentSpec {
                        problem,
                        n,
                        m: density * n,
                        alpha,
                        k,
                        batches,
                        seed,
                        generator: Generator::Uniform,
                    };
                    spec.validate()?;
                    csv.push_str(&bench(&spec)?.to_csv());
                }
            }
            match out {
                Some(p) => {
                    write(&p, &csv)?;
                    Ok(String::new())
                }
                None => Ok(csv),
            }
        }
    }
}

/// Parses `args` (program name first), runs, prints, and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.cmd) {
        Ok(s) => {
            print!("{s}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests;
