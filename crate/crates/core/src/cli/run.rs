use std::fmt::Write as _;

use serde::Serialize;

use super::{CliError, ExperimentSpec, Problem};
use crate::graph::{apply_batch, Batch, Graph};
use crate::matching::{self, MatchingError, MatchingOp, MatchingParams, MatchingState};
use crate::mpc::{MpcConfig, RoundMetrics, Simulator};
use crate::msf::{self, ForestOp, MsfError, MsfState};
use crate::twoecc::{self, BridgeDelta, TwoEccError, TwoEccState};

impl From<MsfError> for CliError {
    fn from(e: MsfError) -> Self {
        match e {
            MsfError::Graph(_) | MsfError::BatchTooLarge { .. } | MsfError::CapacityExceeded { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Violation(e.to_string()),
        }
    }
}

impl From<TwoEccError> for CliError {
    fn from(e: TwoEccError) -> Self {
        match e {
            TwoEccError::Msf(m) => m.into(),
            TwoEccError::TooManyVertices { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Violation(e.to_string()),
        }
    }
}

impl From<MatchingError> for CliError {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::Graph(_) | MatchingError::BatchTooLarge { .. } | MatchingError::CapacityExceeded { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Violation(e.to_string()),
        }
    }
}

enum Engine {
    Msf(MsfState),
    TwoEcc(TwoEccState),
    Mm(MatchingState),
}

fn bridge_lines(st: &TwoEccState) -> String {
    let delta = BridgeDelta { added: st.bridges().iter().copied().collect(), removed: Vec::new() };
    delta.to_string() + &twoecc::write_labels(st.labels())
}

impl Engine {
    fn preprocess(problem: Problem, sim: &mut Simulator, g: &Graph, alpha: f64) -> Result<(Self, String), CliError> {
        Ok(match problem {
            Problem::Msf => {
                let st = MsfState::preprocess(sim, g.clone(), alpha)?;
                let text: String = st.forest().values().map(|e| format!("{}\n", ForestOp::Insert(*e))).collect();
                (Engine::Msf(st), text)
            }
            Problem::TwoEcc => {
                let st = TwoEccState::preprocess(sim, g, alpha)?;
                let text = bridge_lines(&st);
                (Engine::TwoEcc(st), text)
            }
            Problem::Mm => {
                let st = MatchingState::preprocess(sim, g.clone(), MatchingParams::default())?;
                let text: String = st.matching().into_iter().map(|e| format!("{}\n", MatchingOp::Add(e))).collect();
                (Engine::Mm(st), text)
            }
        })
    }

    fn step(&mut self, sim: &mut Simulator, batch: &Batch) -> Result<(String, serde_json::Value), CliError> {
        Ok(match self {
            Engine::Msf(st) => {
                let (script, stats) = st.process_batch(sim, batch)?;
                (script.to_string(), serde_json::to_value(stats).expect("stats serialise"))
            }
            Engine::TwoEcc(st) => {
                let delta = st.process_batch(sim, batch)?;
                let text = delta.to_string() + &twoecc::write_labels(st.labels());
                let stats = serde_json::json!({ "added": delta.added.len(), "removed": delta.removed.len(), "bridges": st.bridges().len() });
                (text, stats)
            }
            Engine::Mm(st) => {
                let (script, stats) = st.process_batch(sim, batch)?;
                (script.to_string(), serde_json::to_value(stats).expect("stats serialise"))
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetrics {
    pub problem: Problem,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub words_per_machine: usize,
    pub machines: usize,
    pub preprocess: RoundMetrics,
    pub rounds_per_batch: Vec<usize>,
    pub batches: Vec<RoundMetrics>,
    pub stats: Vec<serde_json::Value>,
    pub total: RoundMetrics,
}

pub struct RunOutput {
    /// `# preprocess` section, then one `# batch i` section per batch.
    pub scripts: String,
    pub metrics: RunMetrics,
}

/// Largest edge count reached while replaying `batches`.
fn peak_edges(g: &Graph, batches: &[Batch]) -> Result<usize, CliError> {
    let mut cur = g.clone();
    let mut peak = g.m();
    for b in batches {
        cur = apply_batch(&cur, b)?;
        peak = peak.max(cur.m());
    }
    Ok(peak)
}

/// Processes `batches` on `g` in a strict simulator seeded with `seed`.
pub fn execute(problem: Problem, alpha: f64, seed: u64, g: &Graph, batches: &[Batch]) -> Result<RunOutput, CliError> {
    let peak = peak_edges(g, batches)?;
    let words = match problem {
        Problem::Msf | Problem::TwoEcc => msf::input_words(g.n(), peak),
        Problem::Mm => matching::input_words(g.n(), peak),
    };
    let mut sim = Simulator::new(MpcConfig::for_input(g.n(), alpha, words, seed))?;
    sim.set_strict(true);
    let (mut engine, pre) = Engine::preprocess(problem, &mut sim, g, alpha)?;
    let preprocess = sim.take_metrics();
    let mut total = preprocess.clone();
    let mut scripts = format!("# preprocess\n{pre}");
    let mut per = Vec::with_capacity(batches.len());
    let mut stats = Vec::with_capacity(batches.len());
    for (i, b) in batches.iter().enumerate() {
        let (text, st) = engine.step(&mut sim, b)?;
        let _ = write!(scripts, "# batch {i}\n{text}");
        let m = sim.take_metrics();
        total.absorb(&m);
        per.push(m);
        stats.push(st);
    }
    if let Some(v) = total.violations.first() {
        return Err(CliError::Violation(format!("{v:?}")));
    }
    let metrics = RunMetrics {
        problem,
        n: g.n(),
        m: g.m(),
        alpha,
        words_per_machine: sim.words_per_machine(),
        machines: sim.machines(),
        rounds_per_batch: per.iter().map(|m| m.rounds).collect(),
        preprocess,
        batches: per,
        stats,
        total,
    };
    Ok(RunOutput { scripts, metrics })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub problem: Problem,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub words_per_machine: usize,
    pub machines: usize,
    pub k: usize,
    pub preprocess_rounds: usize,
    pub mean_batch_rounds: f64,
    pub max_batch_rounds: usize,
}

pub fn bench_header() -> String {
    "problem,n,m,alpha,S,machines,k,preprocess_rounds,mean_batch_rounds,max_batch_rounds\n".to_string()
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        let p = match self.problem {
            Problem::Msf => "msf",
            Problem::TwoEcc => "2ecc",
            Problem::Mm => "mm",
        };
        format!(
            "{p},{},{},{:.4},{},{},{},{},{:.2},{}\n",
            self.n,
            self.m,
            self.alpha,
            self.words_per_machine,
            self.machines,
            self.k,
            self.preprocess_rounds,
            self.mean_batch_rounds,
            self.max_batch_rounds
        )
    }
}

/// Runs `spec` and summarizes its round counts.
pub fn bench(spec: &ExperimentSpec) -> Result<BenchRow, CliError> {
    let (g, b) = spec.generate();
    let res = execute(spec.problem, spec.alpha, spec.seed, &g, &b)?;
    let r = &res.metrics.rounds_per_batch;
    Ok(BenchRow {
        problem: spec.problem,
        n: spec.n,
        m: g.m(),
        alpha: spec.alpha,
        words_per_machine: res.metrics.words_per_machine,
        machines: res.metrics.machines,
        k: spec.batch_size(),
        preprocess_rounds: res.metrics.preprocess.rounds,
        mean_batch_rounds: if r.is_empty() { 0.0 } else { r.iter().sum::<usize>() as f64 / r.len() as f64 },
        max_batch_rounds: r.iter().copied().max().unwrap_or(0),
    })
}
