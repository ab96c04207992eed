use super::*;

fn spec(problem: Problem, n: usize, m: usize, batches: usize, seed: u64) -> ExperimentSpec {
    ExperimentSpec { batches, seed, ..ExperimentSpec::new(problem, n, m) }
}

fn run_and_verify(s: &ExperimentSpec) -> Result<VerifyReport, CliError> {
    let (g, b) = s.generate();
    let out = execute(s.problem, s.alpha, s.seed, &g, &b)?;
    verify(s.problem, &g, &b, &out.scripts)
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let s = ExperimentSpec { batches: 3, k: 4, ..ExperimentSpec::new(Problem::Msf, 16, 20) };
        dispatch(Command::Gen { spec: s, out: out.clone() }).unwrap();
        texts.push((fs::read(out.join("graph.txt")).unwrap(), fs::read(out.join("updates.txt")).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn path_generator_has_n_minus_one_edges() {
    let s = ExperimentSpec { generator: Generator::Path, ..ExperimentSpec::new(Problem::Msf, 5, 0) };
    assert_eq!(s.generate().0.m(), 4);
}

#[test]
fn empty_updates_cost_no_batch_rounds() {
    let s = spec(Problem::Msf, 64, 128, 0, 1);
    let (g, b) = s.generate();
    let out = execute(Problem::Msf, 0.5, 1, &g, &b).unwrap();
    assert!(out.metrics.rounds_per_batch.is_empty());
    assert!(out.metrics.preprocess.rounds > 0);
}

#[test]
fn every_problem_verifies() {
    for problem in [Problem::Msf, Problem::TwoEcc, Problem::Mm] {
        for generator in
            [Generator::Uniform, Generator::Path, Generator::Star, Generator::CyclePair, Generator::AdversarialDelete]
        {
            let s = ExperimentSpec { generator, ..spec(problem, 60, 120, 4, 3) };
            let r = run_and_verify(&s).unwrap_or_else(|e| panic!("{problem:?} {generator:?}: {e}"));
            assert_eq!(r.batches, 4);
        }
    }
}

#[test]
fn flipped_forest_edge_fails_with_location() {
    let s = ExperimentSpec { k: 6, ..spec(Problem::Msf, 40, 80, 3, 5) };
    let (g, b) = s.generate();
    let out = execute(Problem::Msf, 0.5, 5, &g, &b).unwrap();
    let pos = out.scripts.find("# batch 1\n").unwrap();
    let (head, tail) = out.scripts.split_at(pos);
    // Drop the first forest operation of batch 1.
    let mut lines: Vec<&str> = tail.lines().collect();
    let at = lines.iter().position(|l| l.starts_with('F')).expect("batch 1 changes the forest");
    lines.remove(at);
    let tail = lines.join("\n") + "\n";
    let err = verify(Problem::Msf, &g, &b, &format!("{head}{tail}")).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("batch 1 prefix"), "{err}");
}

#[test]
fn invalid_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.txt");
    fs::write(&p, "3 2\n0 1 1.0\n0 x 2.0\n").unwrap();
    let run = Command::Run { spec: ExperimentSpec::new(Problem::Msf, 3, 0), graph: Some(p), updates: None, out: None };
    let err = dispatch(run).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("line 3"), "{err}");
}

fn bench_cmd(ns: Vec<usize>) -> Command {
    Command::Bench { problem: Problem::Msf, ns, alphas: vec![0.5], density: 4, k: 0, batches: 2, seed: 1, out: None }
}

#[test]
fn bench_rows() {
    assert_eq!(dispatch(bench_cmd(vec![])).unwrap(), bench_header());
    assert_eq!(dispatch(bench_cmd(vec![256])).unwrap().lines().count(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(main_with_args(["bdmpc", "frobnicate"]), 2);
    assert_eq!(main_with_args(["bdmpc", "run", "--alpha", "1.5"]), 2);
    assert_eq!(main_with_args(["bdmpc", "run", "--problem", "mm", "--n", "64", "--k", "100000", "--batches", "1"]), 2);
}

#[test]
fn full_pipeline_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let common = ["--problem", "2ecc", "--n", "50", "--m", "70", "--batches", "3", "--seed", "9"];
    let gen: Vec<&str> = ["bdmpc", "gen"].into_iter().chain(common).chain(["--out", d]).collect();
    assert_eq!(main_with_args(gen), 0);
    let g = format!("{d}/graph.txt");
    let u = format!("{d}/updates.txt");
    let run: Vec<&str> =
        ["bdmpc", "run"].into_iter().chain(common).chain(["--graph", &g, "--updates", &u, "--out", d]).collect();
    assert_eq!(main_with_args(run), 0);
    let s = format!("{d}/scripts.txt");
    let verify_args = ["bdmpc", "verify", "--problem", "2ecc", "--graph", &g, "--updates", &u, "--scripts", &s];
    assert_eq!(main_with_args(verify_args), 0);
    let text = fs::read_to_string(format!("{d}/metrics.json")).unwrap();
    let metrics: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(metrics["rounds_per_batch"].as_array().unwrap().len(), 3);
}

#[test]
fn fuzz_seeds_all_pass() {
    for seed in 0..100 {
        for problem in [Problem::Msf, Problem::TwoEcc, Problem::Mm] {
            let s = ExperimentSpec { k: 4, ..spec(problem, 24, 40, 3, seed) };
            run_and_verify(&s).unwrap_or_else(|e| panic!("seed {seed} {problem:?}: {e}"));
        }
    }
}
