//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bdmpc::gen::{self, Generator};
use bdmpc::graph::{apply_batch, canonical_eid, Batch, EdgeId, EdgeKey, Graph, VertexId, WeightedEdge};
use bdmpc::matching::{self, run_phase, solve, Cover, MatchingParams, MatchingState, ResidualInstance};
use bdmpc::mpc::{scale, MpcConfig, MpcError, Simulator, WordSized};
use bdmpc::msf::{self, MsfState};
use bdmpc::oracles::{self, Dsu};
use bdmpc::toptree::{EdgeAggregate, TopTree, TopTreeParams};
use bdmpc::twoecc::TwoEccState;

/// Per-batch rounds are at most `BATCH_C / alpha`.
const BATCH_C: f64 = 130.0;
/// Preprocessing rounds are at most `PRE_C * log2(n) / alpha^2`.
const PRE_C: f64 = 7.5;
/// Phase budget constant for the matching criterion.
const PHASE_C: f64 = 4.0;

const MSF_SEEDS: u64 = 50;
const MSF_N: usize = 2048;
const MSF_M: usize = 8192;
const MSF_BATCHES: usize = 100;
const ALPHAS: [f64; 3] = [1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0];

type Outcome = Result<String, String>;

fn strict_sim(n: usize, alpha: f64, words: usize, seed: u64) -> Simulator {
    let mut sim = Simulator::new(MpcConfig::for_input(n, alpha, words, seed)).unwrap();
    sim.set_strict(true);
    sim
}

fn peak_edges(g: &Graph, batches: &[Batch]) -> usize {
    let mut cur = g.clone();
    let mut peak = g.m();
    for b in batches {
        cur = apply_batch(&cur, b).unwrap();
        peak = peak.max(cur.m());
    }
    peak
}

/// Kruskal over key-ordered edges; ids come back sorted.
fn msf_of(n: usize, sorted: &[(EdgeKey, VertexId, VertexId)]) -> Vec<EdgeId> {
    let mut dsu = Dsu::new(n);
    let mut out = Vec::with_capacity(n);
    for &((_, eid), u, v) in sorted {
        if dsu.union(u as usize, v as usize) {
            out.push(eid);
        }
    }
    out.sort_unstable();
    out
}

#[derive(Default)]
struct MsfRuns {
    prefixes: usize,
    batches: usize,
    prefix_mismatch: Option<String>,
    separator_bad: Option<String>,
    replacement_bad: Option<String>,
    max_separator_ratio: f64,
    /// Per alpha: max batch rounds, preprocessing rounds per seed, violations.
    rounds: Vec<(f64, usize, usize, usize)>,
    failures: Vec<String>,
}

fn msf_run(alpha: f64, seed: u64, out: &mut MsfRuns) -> (usize, usize, usize) {
    let k = scale(MSF_N, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gen::graph(Generator::Uniform, MSF_N, MSF_M, &mut rng);
    let batches = gen::batches(&g, k, MSF_BATCHES, &mut rng);
    let words = msf::input_words(MSF_N, peak_edges(&g, &batches));
    let mut sim = strict_sim(MSF_N, alpha, words, seed);
    let mut st = match MsfState::preprocess(&mut sim, g.clone(), alpha) {
        Ok(st) => st,
        Err(e) => {
            out.failures.push(format!("alpha {alpha:.3} seed {seed} preprocess: {e}"));
            return (0, 0, 1);
        }
    };
    let pre = sim.take_metrics();
    let mut violations = pre.violations.len();
    let mut forest: BTreeMap<EdgeId, WeightedEdge> = st.forest().clone();
    let mut sorted: Vec<(EdgeKey, VertexId, VertexId)> = g.edges().map(|e| (e.key(), e.u, e.v)).collect();
    sorted.sort_unstable();
    let mut cur = g.clone();
    let mut max_rounds = 0;
    for (i, b) in batches.iter().enumerate() {
        let (script, stats) = match st.process_batch(&mut sim, b) {
            Ok(x) => x,
            Err(e) => {
                out.failures.push(format!("alpha {alpha:.3} seed {seed} batch {i}: {e}"));
                return (max_rounds, pre.rounds, violations + 1);
            }
        };
        let m = sim.take_metrics();
        violations += m.violations.len();
        max_rounds = max_rounds.max(m.rounds);
        out.batches += 1;
        let bound = (4 * stats.k).saturating_sub(1);
        if stats.separator > bound && out.separator_bad.is_none() {
            out.separator_bad = Some(format!("seed {seed} batch {i}: |S| = {} > {bound}", stats.separator));
        }
        if stats.k > 0 {
            out.max_separator_ratio = out.max_separator_ratio.max(stats.separator as f64 / bound.max(1) as f64);
        }
        if stats.replacements > stats.deleted_forest && out.replacement_bad.is_none() {
            out.replacement_bad =
                Some(format!("seed {seed} batch {i}: |R| = {} > |D| = {}", stats.replacements, stats.deleted_forest));
        }
        let mut done = 0;
        for (x, op) in b.iter().enumerate() {
            let e = cur.apply(op).unwrap();
            let item = (e.key(), e.u, e.v);
            match (op, sorted.binary_search(&item)) {
                (bdmpc::graph::UpdateOp::Insert { .. }, Err(at)) => sorted.insert(at, item),
                (bdmpc::graph::UpdateOp::Delete { .. }, Ok(at)) => {
                    sorted.remove(at);
                }
                _ => unreachable!("generated updates are valid"),
            }
            let y = script.y[x];
            for fop in &script.ops[done..y] {
                match fop {
                    msf::ForestOp::Insert(e) => forest.insert(e.eid, *e),
                    msf::ForestOp::Delete(e) => forest.remove(&e.eid),
                };
            }
            done = y;
            out.prefixes += 1;
            if out.prefix_mismatch.is_none() && !forest.keys().eq(msf_of(MSF_N, &sorted).iter()) {
                out.prefix_mismatch = Some(format!("alpha {alpha:.3} seed {seed} batch {i} prefix {x}"));
            }
        }
    }
    (max_rounds, pre.rounds, violations)
}

fn msf_all() -> MsfRuns {
    let mut out = MsfRuns::default();
    for &alpha in &ALPHAS {
        for seed in 0..MSF_SEEDS {
            let (b, p, v) = msf_run(alpha, seed, &mut out);
            out.rounds.push((alpha, b, p, v));
        }
    }
    out
}

fn c1_prefix(r: &MsfRuns) -> Outcome {
    if let Some(f) = r.failures.first() {
        return Err(f.clone());
    }
    match &r.prefix_mismatch {
        Some(at) => Err(format!("forest differs from the MSF at {at}")),
        None => Ok(format!("{} prefixes over {} batches equal the MSF", r.prefixes, r.batches)),
    }
}

fn c2_separator(r: &MsfRuns) -> Outcome {
    if let Some(e) = r.separator_bad.as_ref().or(r.replacement_bad.as_ref()) {
        return Err(e.clone());
    }
    Ok(format!("{} batches: |S| <= 4k-1 (max ratio {:.3}) and |R| <= |D|", r.batches, r.max_separator_ratio))
}

fn c3_rounds(r: &MsfRuns) -> Outcome {
    let log_n = (MSF_N as f64).log2();
    let half: Vec<_> = r.rounds.iter().filter(|x| x.0 == 0.5).collect();
    let fit_c = half.iter().map(|x| x.1 as f64 * 0.5).fold(0.0, f64::max);
    let fit_pre = half.iter().map(|x| x.2 as f64 * 0.25 / log_n).fold(0.0, f64::max);
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for &alpha in &ALPHAS {
        let rows: Vec<_> = r.rounds.iter().filter(|x| x.0 == alpha).collect();
        let batch = rows.iter().map(|x| x.1).max().unwrap_or(0);
        let pre = rows.iter().map(|x| x.2).max().unwrap_or(0);
        let viol: usize = rows.iter().map(|x| x.3).sum();
        let (bb, pb) = (BATCH_C / alpha, PRE_C * log_n / (alpha * alpha));
        lines.push(format!("a={alpha:.3}: batch {batch}<={bb:.0}, pre {pre}<={pb:.0}, violations {viol}"));
        if batch as f64 > bb || pre as f64 > pb || viol > 0 {
            bad.push(alpha);
        }
    }
    let detail = format!("C={BATCH_C} C'={PRE_C} (refit {fit_c:.1}, {fit_pre:.2}); {}", lines.join("; "));
    if bad.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Sum;

impl EdgeAggregate for Sum {
    type Value = u64;
    type Output = u64;
    fn identity(&self) -> u64 {
        0
    }
    fn leaf(&self, e: &WeightedEdge) -> u64 {
        e.w.0 as u64
    }
    fn merge(&self, a: &u64, b: &u64) -> u64 {
        a + b
    }
    fn finalize(&self, v: &u64) -> u64 {
        *v
    }
}

struct MaxKey;

impl EdgeAggregate for MaxKey {
    type Value = Option<EdgeKey>;
    type Output = Option<EdgeKey>;
    fn identity(&self) -> Self::Value {
        None
    }
    fn leaf(&self, e: &WeightedEdge) -> Self::Value {
        Some(e.key())
    }
    fn merge(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        (*a).max(*b)
    }
    fn finalize(&self, v: &Self::Value) -> Self::Output {
        *v
    }
}

fn tree_sim(n: usize) -> Simulator {
    strict_sim(n, 0.5, 40 * n + 64, 7)
}

fn c4_soak() -> Outcome {
    let n = 512;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut sim = tree_sim(n);
    let mut t = TopTree::build_from_forest(&mut sim, TopTreeParams::with_b(n, 3), &[]).map_err(|e| e.to_string())?;
    let mut forest: BTreeMap<EdgeId, WeightedEdge> = BTreeMap::new();
    let (mut links, mut cuts, mut queries) = (0, 0, 0);
    for step in 0..10_000 {
        let roll = rng.gen_range(0..10);
        if roll < 5 || forest.is_empty() {
            let (u, v) = (rng.gen_range(0..n as VertexId), rng.gen_range(0..n as VertexId));
            if u == v || t.same_tree(u, v) {
                continue;
            }
            let e = WeightedEdge::new(u, v, rng.gen_range(0..1000) as f64);
            t.batch_link(&mut sim, &[e]).map_err(|e| format!("step {step} link: {e}"))?;
            forest.insert(e.eid, e);
            links += 1;
        } else if roll < 8 {
            let eid = *forest.keys().nth(rng.gen_range(0..forest.len())).unwrap();
            t.batch_cut(&mut sim, &[eid]).map_err(|e| format!("step {step} cut: {e}"))?;
            forest.remove(&eid);
            cuts += 1;
        } else {
            let (u, v) = (rng.gen_range(0..n as VertexId), rng.gen_range(0..n as VertexId));
            let f: Vec<WeightedEdge> = forest.values().copied().collect();
            let got = t.batch_path_query(&mut sim, &MaxKey, &[(u, v)]);
            let want = oracles::path_max(n, &f, u, v).map(|e| e.key());
            match got {
                Ok(g) if g[0] == want => {}
                Err(_) if want.is_none() && u != v => {}
                other => return Err(format!("step {step} path {u}-{v}: got {other:?}, want {want:?}")),
            }
            queries += 1;
        }
        if let Err(errs) = t.check_invariants() {
            return Err(format!("step {step}: {}", errs[..errs.len().min(3)].join("; ")));
        }
    }
    if !sim.metrics().violations.is_empty() {
        return Err(format!("simulator violations: {:?}", sim.metrics().violations.first()));
    }
    Ok(format!("{links} links, {cuts} cuts, {queries} queries; full scan after each"))
}

fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<WeightedEdge> {
    (1..n as VertexId).map(|v| WeightedEdge::new(rng.gen_range(0..v), v, rng.gen_range(1..1000) as f64)).collect()
}

/// Weight of the edges below every vertex when the tree hangs from `root`.
fn subtree_sums(n: usize, f: &[WeightedEdge], root: VertexId) -> Vec<u64> {
    let adj = bdmpc::graph::forest_adjacency(n, f);
    let mut order = vec![root];
    let mut parent: Vec<Option<(VertexId, u64)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[root as usize] = true;
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        i += 1;
        for &(y, e) in &adj[x as usize] {
            if !seen[y as usize] {
                seen[y as usize] = true;
                parent[y as usize] = Some((x, e.w.0 as u64));
                order.push(y);
            }
        }
    }
    let mut sum = vec![0u64; n];
    for &x in order.iter().rev() {
        if let Some((p, w)) = parent[x as usize] {
            sum[p as usize] += sum[x as usize] + w;
        }
    }
    sum
}

fn c5_queries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let (mut paths, mut subtrees) = (0, 0);
    for &(n, b) in &[(256usize, 2usize), (1024, 3), (4096, 4), (4096, 8)] {
        let f = random_tree(n, &mut rng);
        let mut sim = tree_sim(n);
        let t = TopTree::build_from_forest(&mut sim, TopTreeParams::with_b(n, b), &f).map_err(|e| e.to_string())?;
        let qs: Vec<(VertexId, VertexId)> =
            (0..1250).map(|_| (rng.gen_range(0..n as VertexId), rng.gen_range(0..n as VertexId))).collect();
        let mut got = Vec::new();
        for chunk in qs.chunks(scale(n, 0.5)) {
            got.extend(t.batch_path_query(&mut sim, &MaxKey, chunk).map_err(|e| format!("n={n}: {e}"))?);
        }
        for (i, &(u, v)) in qs.iter().enumerate() {
            if got[i] != oracles::path_max(n, &f, u, v).map(|e| e.key()) {
                return Err(format!("n={n} path-max {u}-{v}"));
            }
            paths += 1;
        }
        let per_root = 1250 / 5;
        for _ in 0..5 {
            let root = rng.gen_range(0..n as VertexId);
            let got = t.subtree_aggregate(&mut sim, &Sum, root).map_err(|e| e.to_string())?;
            let want = subtree_sums(n, &f, root);
            let mut vs: Vec<VertexId> = (0..n as VertexId).collect();
            vs.shuffle(&mut rng);
            for &v in &vs[..per_root] {
                if got[v as usize] != Some(want[v as usize]) {
                    return Err(format!("n={n} root {root} subtree-sum at {v}"));
                }
                subtrees += 1;
            }
        }
    }
    Ok(format!("{paths} path-max and {subtrees} subtree-sum queries exact"))
}

fn same_partition(a: &[impl std::hash::Hash + Eq], b: &[usize]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter().zip(b).all(|(x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

fn c6_twoecc() -> Outcome {
    let n = 512;
    let p = bdmpc::twoecc::prime_above_n4(n) as f64;
    let bound = 10.0 * (n as f64).powi(3) / p;
    let (mut tests, mut false_pos, mut false_neg, mut exact, mut partitions) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let g = gen::graph(Generator::Uniform, n, 640, &mut rng);
        let batches = gen::batches(&g, scale(n, 0.5), 50, &mut rng);
        let mut sim = strict_sim(n, 0.5, msf::input_words(n, peak_edges(&g, &batches)), seed);
        let mut st = TwoEccState::preprocess(&mut sim, &g, 0.5).map_err(|e| format!("seed {seed}: {e}"))?;
        for (i, b) in batches.iter().enumerate() {
            st.process_batch(&mut sim, b).map_err(|e| format!("seed {seed} batch {i}: {e}"))?;
            let want = oracles::bridges(st.graph());
            let got = st.bridges();
            tests += st.forest().len();
            false_neg += want.difference(got).count();
            false_pos += got.difference(&want).count();
            if got == &want {
                exact += 1;
                if !same_partition(st.labels(), &oracles::two_edge_components(st.graph())) {
                    return Err(format!("seed {seed} batch {i}: label partition differs"));
                }
                partitions += 1;
            }
        }
        if !sim.metrics().violations.is_empty() {
            return Err(format!("seed {seed}: simulator violations"));
        }
    }
    let rate = false_pos as f64 / tests as f64;
    let detail = format!(
        "{tests} edge tests, {false_neg} false negatives, FP rate {rate:.2e} <= {bound:.2e}, {partitions}/{exact} exact batches partition-equal"
    );
    if false_neg == 0 && tests >= 100_000 && rate <= bound {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c7_matching() -> Outcome {
    let n = 1024;
    let params = MatchingParams::default();
    let budget = PHASE_C * (1.0 / params.delta).log2();
    let (mut batches_seen, mut max_script, mut max_phases) = (0, 0.0f64, 0);
    let mut k_used = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
        let g = gen::graph(Generator::Uniform, n, 4096, &mut rng);
        let s_words = 512 * scale(n, 0.5);
        let k = (s_words as f64).powf(0.8).ceil() as usize;
        let batches = gen::batches(&g, k, 100, &mut rng);
        let mut sim = strict_sim(n, 0.5, matching::input_words(n, peak_edges(&g, &batches)), seed);
        let mut st = MatchingState::preprocess(&mut sim, g, params).map_err(|e| format!("seed {seed}: {e}"))?;
        k_used = k.min(st.batch_limit(&sim));
        if k_used < k {
            return Err(format!("batch limit {} below {k}", k_used));
        }
        for (i, b) in batches.iter().enumerate() {
            let mut m = st.matching();
            let (script, stats) = st.process_batch(&mut sim, b).map_err(|e| format!("seed {seed} batch {i}: {e}"))?;
            if script.apply(&mut m).is_err() || m != st.matching() {
                return Err(format!("seed {seed} batch {i}: script invalid"));
            }
            if !oracles::is_matching(st.graph(), &m) || !oracles::is_maximal_matching(st.graph(), &m) {
                return Err(format!("seed {seed} batch {i}: not a maximal matching"));
            }
            if script.ops.len() > 3 * b.len() {
                return Err(format!("seed {seed} batch {i}: |U'| = {} > 3k", script.ops.len()));
            }
            max_script = max_script.max(script.ops.len() as f64 / b.len().max(1) as f64);
            max_phases = max_phases.max(stats.phases);
            if stats.phases as f64 > budget {
                return Err(format!("seed {seed} batch {i}: {} phases > {budget:.2}", stats.phases));
            }
            batches_seen += 1;
        }
    }
    // Instances too large to finish locally, so phases actually run.
    let mut big_phases = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(770 + seed);
        let mut sim = strict_sim(4096, 0.25, 3 * 64 * 128 + 4096, seed);
        let inst = cover_instance(&mut sim, 4096, 64, 128, &mut rng);
        let (_, phases) = solve(&mut sim, inst, &params).map_err(|e| format!("cover seed {seed}: {e}"))?;
        big_phases = big_phases.max(phases);
        if phases as f64 > budget {
            return Err(format!("cover seed {seed}: {phases} phases > {budget:.2}"));
        }
    }
    Ok(format!(
        "{batches_seen} batches of k={k_used} valid and maximal, |U'|/k <= {max_script:.2}, phases {max_phases} (cover instances {big_phases}) <= {budget:.2}"
    ))
}

/// `k` cover vertices, each joined to `delta` distinct outside vertices.
fn cover_instance(sim: &mut Simulator, n: usize, k: usize, delta: usize, rng: &mut ChaCha8Rng) -> ResidualInstance {
    let outside: Vec<VertexId> = (k as VertexId..n as VertexId).collect();
    let mut edges = BTreeSet::new();
    for c in 0..k as VertexId {
        for &x in outside.choose_multiple(rng, delta) {
            edges.insert(canonical_eid(c, x));
        }
    }
    let cover = Cover::Set((0..k as VertexId).collect());
    let edges: Vec<EdgeId> = edges.into_iter().collect();
    ResidualInstance::new(sim, &edges, cover, k).unwrap()
}

fn cover_degree(inst: &ResidualInstance) -> usize {
    let Cover::Set(cover) = &inst.cover else { return 0 };
    let mut deg: HashMap<VertexId, usize> = HashMap::new();
    for e in inst.all_edges() {
        let (u, v) = e.endpoints();
        for x in [u, v] {
            if cover.contains(&x) {
                *deg.entry(x).or_default() += 1;
            }
        }
    }
    deg.values().copied().max().unwrap_or(0)
}

fn c8_degree() -> Outcome {
    let params = MatchingParams::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for &delta in &[32usize, 64, 128] {
        let bound = 2.0 * (delta as f64).powf(0.999);
        let mut good = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(800 + seed);
            let (n, k) = (4096, 32);
            let mut sim = strict_sim(n, 0.5, 3 * k * delta + n, seed);
            let mut inst = cover_instance(&mut sim, n, k, delta, &mut rng);
            run_phase(&mut sim, &mut inst, &params).map_err(|e| format!("delta {delta} seed {seed}: {e}"))?;
            if cover_degree(&inst) as f64 <= bound {
                good += 1;
            }
        }
        ok &= good >= 90;
        lines.push(format!("delta {delta}: {good}/100 <= {bound:.1}"));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Blob(usize);

impl WordSized for Blob {
    fn words(&self) -> usize {
        self.0
    }
}

fn c9_honesty() -> Outcome {
    let mut sim = Simulator::new(MpcConfig::new(4, 64, 1)).unwrap();
    sim.set_strict(true);
    let cap = sim.config().message_cap;
    let mut out = sim.empty_outboxes::<Blob>();
    out[0].push((1, Blob(cap + 1)));
    let msg = sim.exchange(out);
    let msg_ok = matches!(msg, Err(MpcError::MessageCapViolation { .. }));
    sim.set_resident(2, 65);
    let mem = sim.check_memory();
    let mem_ok = matches!(mem, Err(MpcError::MemoryViolation { machine: 2, words: 65, limit: 64, .. }));
    let detail = format!("message: {msg:?}; memory: {mem:?}", msg = msg.map(|_| ()), mem = mem);
    if msg_ok && mem_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let wanted: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let on = |i: usize| wanted.is_empty() || wanted.contains(&i);
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let timed = |i: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome, results: &mut Vec<_>| {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, text) = match &r {
            Ok(s) => ("PASS", s),
            Err(s) => ("FAIL", s),
        };
        println!("{tag} {i} {name} ({secs:.1}s): {text}");
        results.push((i, name, r, secs));
    };
    if on(1) || on(2) || on(3) {
        let t = Instant::now();
        let runs = msf_all();
        let secs = t.elapsed().as_secs_f64();
        println!("     msf workload: {} runs in {secs:.1}s", runs.rounds.len());
        let checks: [(usize, &'static str, fn(&MsfRuns) -> Outcome); 3] = [
            (1, "msf prefix exactness", c1_prefix),
            (2, "separator bound", c2_separator),
            (3, "round complexity", c3_rounds),
        ];
        for (i, name, f) in checks {
            if on(i) {
                timed(i, name, &mut || f(&runs), &mut results);
            }
        }
    }
    let rest: [(usize, &'static str, fn() -> Outcome); 6] = [
        (4, "top-tree invariant soak", c4_soak),
        (5, "path and subtree queries", c5_queries),
        (6, "2ecc soundness", c6_twoecc),
        (7, "maximal matching", c7_matching),
        (8, "degree reduction", c8_degree),
        (9, "simulator honesty", c9_honesty),
    ];
    for (i, name, f) in rest {
        if on(i) {
            timed(i, name, &mut || f(), &mut results);
        }
    }
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
