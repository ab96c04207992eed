use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{CliError, Problem};
use crate::graph::{apply_batch, canonical_eid, Batch, EdgeId, Graph, VertexId, WeightedEdge};
use crate::matching::{MatchingOp, MatchingScript};
use crate::msf::{ForestOp, UpdateScript};
use crate::oracles;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub batches: usize,
    /// Prefix states compared; one per batch outside MSF.
    pub prefixes: usize,
}

struct Section {
    lines: Vec<(usize, String)>,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("scripts line {line}: {msg}"))
}

fn sections(text: &str) -> Result<(Section, Vec<Section>), CliError> {
    let mut pre: Option<Section> = None;
    let mut batches: Vec<Section> = Vec::new();
    let mut in_pre = false;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(h) = l.strip_prefix('#') {
            let h = h.trim();
            if h == "preprocess" {
                pre = Some(Section { lines: Vec::new() });
                in_pre = true;
            } else if let Some(idx) = h.strip_prefix("batch ") {
                let idx: usize = idx.trim().parse().map_err(|_| parse_err(ln, "bad batch index"))?;
                if idx != batches.len() {
                    return Err(parse_err(ln, format!("expected batch {}", batches.len())));
                }
                batches.push(Section { lines: Vec::new() });
                in_pre = false;
            }
            continue;
        }
        let target = if in_pre { pre.as_mut() } else { batches.last_mut() };
        match target {
            Some(s) => s.lines.push((ln, l.to_string())),
            None => return Err(parse_err(ln, "content before any section")),
        }
    }
    let pre = pre.ok_or_else(|| CliError::Usage("scripts lack a preprocess section".into()))?;
    Ok((pre, batches))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, ln: usize) -> Result<T, CliError> {
    let t = tok.ok_or_else(|| parse_err(ln, "missing field"))?;
    t.parse().map_err(|_| parse_err(ln, format!("bad field `{t}`")))
}

fn pair(toks: &mut std::str::SplitWhitespace<'_>, ln: usize) -> Result<(VertexId, VertexId), CliError> {
    Ok((num(toks.next(), ln)?, num(toks.next(), ln)?))
}

fn parse_forest_ops(sec: &Section) -> Result<UpdateScript, CliError> {
    let mut script = UpdateScript::default();
    for (ln, l) in &sec.lines {
        let ln = *ln;
        let mut t = l.split_whitespace();
        match t.next() {
            Some("F+") => {
                let (u, v) = pair(&mut t, ln)?;
                script.ops.push(ForestOp::Insert(WeightedEdge::new(u, v, num(t.next(), ln)?)));
            }
            Some("F-") => {
                let (u, v) = pair(&mut t, ln)?;
                script.ops.push(ForestOp::Delete(WeightedEdge::new(u, v, 0.0)));
            }
            Some("Y") => {
                script.y = t.map(|x| num(Some(x), ln)).collect::<Result<_, _>>()?;
            }
            _ => return Err(parse_err(ln, format!("unexpected `{l}`"))),
        }
    }
    Ok(script)
}

fn parse_bridges(sec: &Section, n: usize) -> Result<(Vec<(bool, EdgeId)>, Vec<String>), CliError> {
    let mut delta = Vec::new();
    let mut labels = vec![String::new(); n];
    for (ln, l) in &sec.lines {
        let ln = *ln;
        let mut t = l.split_whitespace();
        match t.next() {
            Some(tag @ ("B+" | "B-")) => {
                let (u, v) = pair(&mut t, ln)?;
                delta.push((tag == "B+", canonical_eid(u, v)));
            }
            Some("L") => {
                let v: usize = num(t.next(), ln)?;
                let lab = t.next().ok_or_else(|| parse_err(ln, "missing label"))?;
                if v >= n {
                    return Err(parse_err(ln, format!("vertex {v} out of range")));
                }
                labels[v] = lab.to_string();
            }
            _ => return Err(parse_err(ln, format!("unexpected `{l}`"))),
        }
    }
    Ok((delta, labels))
}

fn parse_matching(sec: &Section) -> Result<MatchingScript, CliError> {
    let mut ops = Vec::new();
    for (ln, l) in &sec.lines {
        let ln = *ln;
        let mut t = l.split_whitespace();
        let op = match t.next() {
            Some("M+") => MatchingOp::Add,
            Some("M-") => MatchingOp::Remove,
            _ => return Err(parse_err(ln, format!("unexpected `{l}`"))),
        };
        let (u, v) = pair(&mut t, ln)?;
        ops.push(op(canonical_eid(u, v)));
    }
    Ok(MatchingScript { ops })
}

fn same_partition(labels: &[String], comp: &[usize]) -> bool {
    let mut fwd: HashMap<&str, usize> = HashMap::new();
    let mut back: HashMap<usize, &str> = HashMap::new();
    labels
        .iter()
        .zip(comp)
        .all(|(l, &c)| *fwd.entry(l.as_str()).or_insert(c) == c && *back.entry(c).or_insert(l.as_str()) == l.as_str())
}

/// Replays `scripts` against oracles on `g` and `batches`.
pub fn verify(problem: Problem, g: &Graph, batches: &[Batch], scripts: &str) -> Result<VerifyReport, CliError> {
    let (pre, secs) = sections(scripts)?;
    if secs.len() != batches.len() {
        return Err(CliError::Verify(format!("{} batch sections for {} batches", secs.len(), batches.len())));
    }
    let fail = |msg: String| Err(CliError::Verify(msg));
    let mut report = VerifyReport { batches: batches.len(), prefixes: 0 };
    let mut cur = g.clone();
    match problem {
        Problem::Msf => {
            let init = parse_forest_ops(&pre)?;
            let mut forest: BTreeMap<EdgeId, WeightedEdge> = BTreeMap::new();
            init.apply_prefix(&mut forest, init.ops.len());
            let keys = |f: &BTreeMap<EdgeId, WeightedEdge>| f.keys().copied().collect::<BTreeSet<_>>();
            if keys(&forest) != oracles::kruskal(g) {
                return fail("preprocess: forest differs from the MSF".into());
            }
            for (i, (b, sec)) in batches.iter().zip(&secs).enumerate() {
                let script = parse_forest_ops(sec)?;
                if script.y.len() != b.len() {
                    return fail(format!("batch {i}: {} prefix indices for {} updates", script.y.len(), b.len()));
                }
                let mut done = 0;
                for (x, op) in b.iter().enumerate() {
                    cur.apply(op)?;
                    let y = script.y[x];
                    if y < done || y > script.ops.len() {
                        return fail(format!("batch {i} prefix {x}: index {y} out of order"));
                    }
                    let step = UpdateScript { ops: script.ops[done..y].to_vec(), y: Vec::new() };
                    step.apply_prefix(&mut forest, step.ops.len());
                    done = y;
                    report.prefixes += 1;
                    if keys(&forest) != oracles::kruskal(&cur) {
                        return fail(format!("batch {i} prefix {x}: forest differs from the MSF"));
                    }
                }
                if done != script.ops.len() {
                    return fail(format!("batch {i}: {} trailing operations", script.ops.len() - done));
                }
            }
        }
        Problem::TwoEcc => {
            let mut bridges: BTreeSet<EdgeId> = BTreeSet::new();
            let check = |cur: &Graph, bridges: &BTreeSet<EdgeId>, labels: &[String], at: &str| {
                if bridges != &oracles::bridges(cur) {
                    return Err(CliError::Verify(format!("{at}: bridge set differs")));
                }
                if !same_partition(labels, &oracles::two_edge_components(cur)) {
                    return Err(CliError::Verify(format!("{at}: label partition differs")));
                }
                Ok(())
            };
            let (delta, labels) = parse_bridges(&pre, g.n())?;
            bridges.extend(delta.into_iter().map(|(_, e)| e));
            check(&cur, &bridges, &labels, "preprocess")?;
            for (i, (b, sec)) in batches.iter().zip(&secs).enumerate() {
                cur = apply_batch(&cur, b)?;
                let (delta, labels) = parse_bridges(sec, g.n())?;
                for (add, e) in delta {
                    if add {
                        bridges.insert(e);
                    } else {
                        bridges.remove(&e);
                    }
                }
                report.prefixes += 1;
                check(&cur, &bridges, &labels, &format!("batch {i}"))?;
            }
        }
        Problem::Mm => {
            let mut m: BTreeSet<EdgeId> = BTreeSet::new();
            if let Err(x) = parse_matching(&pre)?.apply(&mut m) {
                return fail(format!("preprocess: operation {x} invalid"));
            }
            if !oracles::is_maximal_matching(g, &m) {
                return fail("preprocess: matching not maximal".into());
            }
            for (i, (b, sec)) in batches.iter().zip(&secs).enumerate() {
                cur = apply_batch(&cur, b)?;
                let script = parse_matching(sec)?;
                if let Err(x) = script.apply(&mut m) {
                    return fail(format!("batch {i}: operation {x} invalid"));
                }
                report.prefixes += 1;
                if !oracles::is_maximal_matching(&cur, &m) {
                    return fail(format!("batch {i}: matching not maximal"));
                }
            }
        }
    }
    Ok(report)
}
