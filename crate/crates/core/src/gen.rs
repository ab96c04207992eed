//! Seeded workload generators.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{canonical_eid, Batch, EdgeId, Graph, UpdateOp, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Generator {
    /// Uniformly random simple graph.
    #[value(name = "gnm")]
    Uniform,
    /// Path `0 - 1 - ... - n-1`.
    Path,
    /// Star centred at 0.
    Star,
    /// Two cycles joined by one bridge.
    CyclePair,
    /// Uniform graph whose batches delete at least half their size in MSF
    /// edges.
    AdversarialDelete,
    /// Random recursive tree plus uniform extra edges.
    Tree,
    /// A few high-degree hubs attached to a sparse background.
    Hubs,
}

fn weight<R: Rng>(rng: &mut R) -> f64 {
    // Quantised to keep text round-trips exact.
    (rng.gen_range(1..=1u64 << 30) as f64) / (1u64 << 20) as f64
}

/// Random simple graph with exactly `m` edges (capped at the complete graph).
pub fn graph<R: Rng>(kind: Generator, n: usize, m: usize, rng: &mut R) -> Graph {
    let mut g = Graph::new(n);
    if n < 2 {
        return g;
    }
    let max = n * (n - 1) / 2;
    let m = m.min(max);
    let add = |g: &mut Graph, u: usize, v: usize, rng: &mut R| {
        let _ = g.insert(u as VertexId, v as VertexId, weight(rng));
    };
    match kind {
        Generator::Uniform | Generator::AdversarialDelete => {}
        Generator::Path => (1..n).for_each(|v| add(&mut g, v - 1, v, rng)),
        Generator::Star => (1..n).for_each(|v| add(&mut g, 0, v, rng)),
        Generator::CyclePair => {
            let h = n / 2;
            for (lo, len) in [(0, h), (h, n - h)] {
                for i in 0..len {
                    add(&mut g, lo + i, lo + (i + 1) % len, rng);
                }
            }
            add(&mut g, 0, h, rng);
        }
        Generator::Tree => {
            for v in 1..n.min(m + 1) {
                let p = rng.gen_range(0..v);
                g.insert(p as VertexId, v as VertexId, weight(rng)).unwrap();
            }
        }
        Generator::Hubs => {
            let hubs = ((n as f64).sqrt() as usize / 4).max(1);
            let spokes = (m / 2 / hubs).min(n - 1);
            for h in 0..hubs {
                let mut added = 0;
                while added < spokes && g.m() < m {
                    let v = rng.gen_range(0..n) as VertexId;
                    if v as usize != h && g.insert(h as VertexId, v, weight(rng)).is_ok() {
                        added += 1;
                    }
                }
            }
        }
    }
    while g.m() < m {
        let u = rng.gen_range(0..n) as VertexId;
        let v = rng.gen_range(0..n) as VertexId;
        if u != v && !g.contains(canonical_eid(u, v)) {
            g.insert(u, v, weight(rng)).unwrap();
        }
    }
    g
}

/// Generates `count` batches of `k` operations each that are valid when
/// applied in sequence starting from `g`. Inserts and deletes are balanced so
/// the edge count stays near its starting value.
pub fn batches<R: Rng>(g: &Graph, k: usize, count: usize, rng: &mut R) -> Vec<Batch> {
    let n = g.n();
    let target = g.m();
    let mut ids: Vec<EdgeId> = g.edges().map(|e| e.eid).collect();
    let mut pos: HashMap<EdgeId, usize> = ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let max = n * n.saturating_sub(1) / 2;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut b = Vec::with_capacity(k);
        while b.len() < k {
            let want_insert = if ids.is_empty() {
                true
            } else if ids.len() >= max {
                false
            } else {
                let bias = if ids.len() < target { 0.6 } else { 0.4 };
                rng.gen_bool(bias)
            };
            if want_insert {
                if n < 2 || ids.len() >= max {
                    break;
                }
                let u = rng.gen_range(0..n) as VertexId;
                let v = rng.gen_range(0..n) as VertexId;
                let e = canonical_eid(u, v);
                if u == v || pos.contains_key(&e) {
                    continue;
                }
                pos.insert(e, ids.len());
                ids.push(e);
                b.push(UpdateOp::Insert { u, v, w: weight(rng) });
            } else {
                let i = rng.gen_range(0..ids.len());
                let e = ids.swap_remove(i);
                pos.remove(&e);
                if i < ids.len() {
                    pos.insert(ids[i], i);
                }
                let (u, v) = e.endpoints();
                b.push(UpdateOp::Delete { u, v });
            }
        }
        out.push(b);
    }
    out
}

/// Batches for `kind`: oracle-guided for [`Generator::AdversarialDelete`],
/// balanced random otherwise.
pub fn batches_for<R: Rng>(kind: Generator, g: &Graph, k: usize, count: usize, rng: &mut R) -> Vec<Batch> {
    match kind {
        Generator::AdversarialDelete => adversarial_batches(g, k, count, rng),
        _ => batches(g, k, count, rng),
    }
}

/// Each batch deletes `ceil(k / 2)` edges of the current MSF (fewer only if
/// the forest is smaller) and fills the rest with fresh inserts, shuffled.
pub fn adversarial_batches<R: Rng>(g: &Graph, k: usize, count: usize, rng: &mut R) -> Vec<Batch> {
    let n = g.n();
    let max = n * n.saturating_sub(1) / 2;
    let mut cur = g.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let forest: Vec<EdgeId> = crate::oracles::kruskal(&cur).into_iter().collect();
        let dels = k.div_ceil(2).min(forest.len());
        let mut b: Batch = rand::seq::index::sample(rng, forest.len(), dels)
            .into_iter()
            .map(|i| {
                let (u, v) = forest[i].endpoints();
                UpdateOp::Delete { u, v }
            })
            .collect();
        let deleted: std::collections::HashSet<EdgeId> = b.iter().map(UpdateOp::eid).collect();
        let mut fresh = std::collections::HashSet::new();
        while b.len() < k && cur.m() - dels + fresh.len() < max && n >= 2 {
            let u = rng.gen_range(0..n) as VertexId;
            let v = rng.gen_range(0..n) as VertexId;
            let e = canonical_eid(u, v);
            if u != v && !cur.contains(e) && !deleted.contains(&e) && fresh.insert(e) {
                b.push(UpdateOp::Insert { u, v, w: weight(rng) });
            }
        }
        rand::seq::SliceRandom::shuffle(&mut b[..], rng);
        cur = crate::graph::apply_batch(&cur, &b).unwrap();
        out.push(b);
    }
    out
}
