//! Batch-dynamic minimum spanning forest.
//!
//! The forest is the unique MSF under the `(weight, eid)` order. A batch of
//! updates produces an [`UpdateScript`]: forest operations `U'` and, for each
//! update `x`, an index `y_x` such that applying the first `y_x` operations
//! to the old forest gives the MSF after the first `x` updates.

mod batch;

pub use batch::BatchStats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, GraphError, VertexId, Weight, WeightedEdge};
use crate::mpc::{all_to_all, mpc_aggregate_by_key, owner_of, Distributed, MpcError, Simulator, WordSized};
use crate::toptree::{TopTree, TopTreeError, TopTreeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MsfError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("batch of {k} updates exceeds the limit of {limit}")]
    BatchTooLarge { k: usize, limit: usize },
    #[error("input of {words} words exceeds total memory {limit}")]
    CapacityExceeded { words: usize, limit: usize },
    #[error(transparent)]
    TopTree(#[from] TopTreeError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
}

/// One forest operation of an update script.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForestOp {
    Insert(WeightedEdge),
    Delete(WeightedEdge),
}

impl fmt::Display for ForestOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForestOp::Insert(e) => write!(f, "F+ {} {} {}", e.u, e.v, e.w),
            ForestOp::Delete(e) => write!(f, "F- {} {}", e.u, e.v),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateScript {
    pub ops: Vec<ForestOp>,
    /// `y[x]` operations realize the forest after update `x`.
    pub y: Vec<usize>,
}

impl fmt::Display for UpdateScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        write!(f, "Y")?;
        for y in &self.y {
            write!(f, " {y}")?;
        }
        writeln!(f)
    }
}

impl UpdateScript {
    /// Applies the first `len` operations to `forest`.
    pub fn apply_prefix(&self, forest: &mut BTreeMap<EdgeId, WeightedEdge>, len: usize) {
        for op in &self.ops[..len] {
            match op {
                ForestOp::Insert(e) => {
                    forest.insert(e.eid, *e);
                }
                ForestOp::Delete(e) => {
                    forest.remove(&e.eid);
                }
            }
        }
    }
}

/// Words the state of `n` vertices and `m` edges occupies, top trees
/// included.
pub fn input_words(n: usize, m: usize) -> usize {
    3 * m + 40 * n + 64
}

pub struct MsfState {
    graph: Graph,
    forest: BTreeMap<EdgeId, WeightedEdge>,
    top: TopTree,
}

impl MsfState {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn forest(&self) -> &BTreeMap<EdgeId, WeightedEdge> {
        &self.forest
    }

    pub fn top(&self) -> &TopTree {
        &self.top
    }

    /// Builds the MSF of `g` by randomized Borůvka and mounts top trees on it.
    pub fn preprocess(sim: &mut Simulator, g: Graph, alpha: f64) -> Result<Self, MsfError> {
        let limit = sim.machines() * sim.words_per_machine();
        let words = 3 * g.m() + 2 * g.n();
        if words > limit {
            return Err(MsfError::CapacityExceeded { words, limit });
        }
        for e in g.edges() {
            sim.charge(owner_of(&e.eid, sim.machines()), 3);
        }
        let chosen = boruvka(sim, &g)?;
        let params = TopTreeParams::new(g.n(), alpha);
        let top = TopTree::build_from_forest(sim, params, &chosen)?;
        let forest = chosen.into_iter().map(|e| (e.eid, e)).collect();
        Ok(MsfState { graph: g, forest, top })
    }
}

/// Answers per-vertex lookups at the vertices' owners: two rounds. Each
/// machine asks once per distinct vertex, so an owner receives at most one
/// request per machine for any vertex; replies fan out locally to the tags.
pub(crate) fn vertex_lookup<V: WordSized + Clone>(
    sim: &mut Simulator,
    requests: Distributed<(VertexId, u64)>,
    answer: impl Fn(VertexId) -> V,
) -> Result<Distributed<(u64, V)>, MpcError> {
    let m = sim.machines();
    let asks: Distributed<(u32, u32)> = requests
        .iter()
        .enumerate()
        .map(|(src, v)| {
            let keys: BTreeSet<VertexId> = v.iter().map(|r| r.0).collect();
            keys.into_iter().map(|x| (x, src as u32)).collect()
        })
        .collect();
    let at_owner = all_to_all(sim, asks, |_, r| owner_of(&r.0, m))?;
    let replies: Distributed<(u32, (u32, V))> =
        at_owner.into_iter().map(|v| v.into_iter().map(|(x, src)| (src, (x, answer(x)))).collect()).collect();
    let back = all_to_all(sim, replies, |_, r| r.0 as usize)?;
    Ok(requests
        .into_iter()
        .zip(back)
        .map(|(reqs, got)| {
            let got: BTreeMap<VertexId, V> = got.into_iter().map(|r| r.1).collect();
            reqs.into_iter().map(|(x, tag)| (tag, got[&x].clone())).collect()
        })
        .collect())
}

/// Candidate edge `(weight, eid, component on the far side)`.
type Candidate = (Weight, EdgeId, VertexId);

fn boruvka(sim: &mut Simulator, g: &Graph) -> Result<Vec<WeightedEdge>, MpcError> {
    let machines = sim.machines();
    let mut held: Distributed<WeightedEdge> = vec![Vec::new(); machines];
    for e in g.edges() {
        held[owner_of(&e.eid, machines)].push(e);
    }
    let mut comp: Vec<VertexId> = (0..g.n() as VertexId).collect();
    let mut chosen = Vec::new();
    loop {
        let requests: Distributed<(VertexId, u64)> = held
            .iter()
            .map(|v| v.iter().enumerate().flat_map(|(i, e)| [(e.u, 2 * i as u64), (e.v, 2 * i as u64 + 1)]).collect())
            .collect();
        let labels = vertex_lookup(sim, requests, |x| comp[x as usize])?;
        let mut pairs: Distributed<(VertexId, Candidate)> = vec![Vec::new(); machines];
        for (mach, reps) in labels.into_iter().enumerate() {
            let mut ends = vec![[0 as VertexId; 2]; held[mach].len()];
            for (tag, c) in reps {
                ends[(tag / 2) as usize][(tag % 2) as usize] = c;
            }
            let mut keep = Vec::new();
            for (e, [cu, cv]) in held[mach].iter().zip(ends) {
                // Edges inside one component never become candidates again.
                if cu != cv {
                    pairs[mach].push((cu, (e.w, e.eid, cv)));
                    pairs[mach].push((cv, (e.w, e.eid, cu)));
                    keep.push(*e);
                }
            }
            held[mach] = keep;
        }
        let best = mpc_aggregate_by_key(sim, pairs, |a, b| if (a.0, a.1) <= (b.0, b.1) { *a } else { *b })?;
        if best.iter().all(Vec::is_empty) {
            break;
        }
        let mut heads: BTreeMap<VertexId, bool> = BTreeMap::new();
        for (mach, list) in best.iter().enumerate() {
            for &(c, _) in list {
                let coin = sim.rng(mach).gen_bool(0.5);
                heads.insert(c, coin);
            }
        }
        // Each tail asks the owner of its target for that target's coin.
        let asks: Distributed<(VertexId, u64)> = best
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, &(_, (_, _, d)))| (d, i as u64)).collect())
            .collect();
        let coins = vertex_lookup(sim, asks, |d| heads[&d])?;
        let mut hook: BTreeMap<VertexId, VertexId> = BTreeMap::new();
        for (mach, reps) in coins.into_iter().enumerate() {
            for (i, head_d) in reps {
                let (c, (w, eid, d)) = best[mach][i as usize];
                if !heads[&c] && head_d {
                    hook.insert(c, d);
                    let (u, v) = eid.endpoints();
                    chosen.push(WeightedEdge { u, v, w, eid });
                }
            }
        }
        let relabel: Distributed<(VertexId, u64)> = (0..machines)
            .map(|mach| {
                (0..g.n() as VertexId)
                    .filter(|v| owner_of(v, machines) == mach)
                    .map(|v| (comp[v as usize], v as u64))
                    .collect()
            })
            .collect();
        let fresh = vertex_lookup(sim, relabel, |c| hook.get(&c).copied().unwrap_or(c))?;
        for (v, c) in fresh.into_iter().flatten() {
            comp[v as usize] = c;
        }
    }
    chosen.sort_by_key(|e| e.eid);
    Ok(chosen)
}

#[cfg(test)]
mod tests;
