//! Batch-dynamic maximal matching.
//!
//! A batch of `k` updates leaves a residual instance whose candidate edges
//! are all covered by the at most `2k` update endpoints. Degree-reduction
//! phases shrink that instance until it fits one machine, which finishes
//! greedily.

mod phase;

pub use phase::{run_phase, solve};

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::constants::*;
use crate::graph::{apply_batch, EdgeId, Graph, GraphError, UpdateOp, VertexId};
use crate::mpc::{all_to_all, broadcast, gather_to, owner_of, Distributed, MpcError, Simulator};
use crate::msf::vertex_lookup;

/// Exponents of the degree bound that drive each stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchingParams {
    pub group_exp: f64,
    pub stage1_sample_exp: f64,
    pub stage2_sample_exp: f64,
    pub high_degree_exp: f64,
    pub gather_exp: f64,
    pub repetition_exp: f64,
    pub repetition_trigger_exp: f64,
    pub delta: f64,
    pub max_phases: usize,
}

impl Default for MatchingParams {
    fn default() -> Self {
        MatchingParams {
            group_exp: MM_GROUP_EXP,
            stage1_sample_exp: MM_STAGE1_SAMPLE_EXP,
            stage2_sample_exp: MM_STAGE2_SAMPLE_EXP,
            high_degree_exp: MM_HIGH_DEGREE_EXP,
            gather_exp: MM_GATHER_EXP,
            repetition_exp: MM_REPETITION_EXP,
            repetition_trigger_exp: MM_REPETITION_TRIGGER_EXP,
            delta: MM_DELTA,
            max_phases: MM_MAX_PHASES,
        }
    }
}

impl MatchingParams {
    /// Phase budget `C * log2(1 / delta)`.
    pub fn phase_budget(&self) -> f64 {
        MM_PHASE_C * (1.0 / self.delta).log2()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("batch of {k} updates exceeds the limit of {limit}")]
    BatchTooLarge { k: usize, limit: usize },
    #[error("input of {words} words exceeds total memory {limit}")]
    CapacityExceeded { words: usize, limit: usize },
    #[error("{edges} residual edges remain after {phases} phases")]
    PhaseLimit { phases: usize, edges: usize },
    #[error(transparent)]
    Mpc(#[from] MpcError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchingOp {
    Add(EdgeId),
    Remove(EdgeId),
}

impl fmt::Display for MatchingOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchingOp::Add(e) => {
                let (u, v) = e.endpoints();
                write!(f, "M+ {u} {v}")
            }
            MatchingOp::Remove(e) => {
                let (u, v) = e.endpoints();
                write!(f, "M- {u} {v}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchingScript {
    pub ops: Vec<MatchingOp>,
}

impl fmt::Display for MatchingScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

impl MatchingScript {
    /// Applies the script in order, failing on the first op that would
    /// double-match a vertex or remove an absent edge.
    pub fn apply(&self, matching: &mut BTreeSet<EdgeId>) -> Result<(), usize> {
        let mut used: BTreeSet<VertexId> = matching.iter().flat_map(|e| <[VertexId; 2]>::from(e.endpoints())).collect();
        for (i, op) in self.ops.iter().enumerate() {
            match *op {
                MatchingOp::Add(e) => {
                    let (u, v) = e.endpoints();
                    if !used.insert(u) || !used.insert(v) || !matching.insert(e) {
                        return Err(i);
                    }
                }
                MatchingOp::Remove(e) => {
                    if !matching.remove(&e) {
                        return Err(i);
                    }
                    let (u, v) = e.endpoints();
                    used.remove(&u);
                    used.remove(&v);
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MatchingStats {
    pub k: usize,
    pub removed: usize,
    pub candidates: usize,
    pub cover: usize,
    pub phases: usize,
    pub added: usize,
    pub rounds: usize,
}

/// Vertices every residual edge touches.
#[derive(Clone, Debug, PartialEq)]
pub enum Cover {
    All,
    Set(BTreeSet<VertexId>),
}

impl Cover {
    pub fn contains(&self, v: VertexId) -> bool {
        match self {
            Cover::All => true,
            Cover::Set(s) => s.contains(&v),
        }
    }

    pub fn len(&self, n: usize) -> usize {
        match self {
            Cover::All => n,
            Cover::Set(s) => s.len(),
        }
    }
}

/// Candidate edges held by their owners, all with both endpoints unmatched.
#[derive(Clone, Debug)]
pub struct ResidualInstance {
    pub edges: Distributed<EdgeId>,
    pub cover: Cover,
    /// Largest cover degree.
    pub delta: usize,
    /// Batch size that scales the repetition count.
    pub k: usize,
}

impl ResidualInstance {
    /// Distributes `edges` to their owners; the cover set is broadcast.
    pub fn new(sim: &mut Simulator, edges: &[EdgeId], cover: Cover, k: usize) -> Result<Self, MpcError> {
        let machines = sim.machines();
        let mut d: Distributed<EdgeId> = vec![Vec::new(); machines];
        for &e in edges {
            d[owner_of(&e, machines)].push(e);
        }
        if let Cover::Set(s) = &cover {
            let list: Vec<u32> = s.iter().copied().collect();
            broadcast(sim, 0, &list)?;
        }
        let mut inst = ResidualInstance { edges: d, cover, delta: 0, k };
        inst.delta = phase::max_cover_degree(sim, &inst)?;
        Ok(inst)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn all_edges(&self) -> Vec<EdgeId> {
        let mut v: Vec<EdgeId> = self.edges.iter().flatten().copied().collect();
        v.sort();
        v
    }
}

/// Words a matching state of `n` vertices and `m` edges occupies.
pub fn input_words(n: usize, m: usize) -> usize {
    3 * m + 2 * n + 64
}

pub struct MatchingState {
    graph: Graph,
    mate: Vec<Option<VertexId>>,
    params: MatchingParams,
}

impl MatchingState {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn params(&self) -> &MatchingParams {
        &self.params
    }

    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        self.mate[v as usize]
    }

    pub fn matching(&self) -> BTreeSet<EdgeId> {
        self.mate
            .iter()
            .enumerate()
            .filter_map(|(u, m)| {
                m.filter(|&v| (u as VertexId) < v).map(|v| crate::graph::canonical_eid(u as VertexId, v))
            })
            .collect()
    }

    /// Largest batch accepted: `ceil(S^(1 - delta))`.
    pub fn batch_limit(&self, sim: &Simulator) -> usize {
        (sim.words_per_machine() as f64).powf(1.0 - self.params.delta).ceil() as usize
    }

    /// Static maximal matching of `g` by the same phases, with every vertex
    /// in the cover.
    pub fn preprocess(sim: &mut Simulator, g: Graph, params: MatchingParams) -> Result<Self, MatchingError> {
        let limit = sim.machines() * sim.words_per_machine();
        let words = 3 * g.m() + 2 * g.n();
        if words > limit {
            return Err(MatchingError::CapacityExceeded { words, limit });
        }
        for e in g.edges() {
            sim.charge(owner_of(&e.eid, sim.machines()), 3);
        }
        let edges: Vec<EdgeId> = g.edges().map(|e| e.eid).collect();
        let inst = ResidualInstance::new(sim, &edges, Cover::All, g.n())?;
        let mut st = MatchingState { mate: vec![None; g.n()], graph: g, params };
        let (added, _) = solve(sim, inst, &st.params)?;
        for e in added {
            st.set_mate(e);
        }
        Ok(st)
    }

    fn set_mate(&mut self, e: EdgeId) {
        let (u, v) = e.endpoints();
        self.mate[u as usize] = Some(v);
        self.mate[v as usize] = Some(u);
    }

    /// Applies `batch`, drops deleted matched edges, and returns them with the
    /// residual instance of the updated graph.
    pub fn build_residual(
        &mut self,
        sim: &mut Simulator,
        batch: &[UpdateOp],
    ) -> Result<(Vec<EdgeId>, ResidualInstance), MatchingError> {
        let next = apply_batch(&self.graph, batch)?;
        let machines = sim.machines();
        let mut removed: Vec<EdgeId> = Vec::new();
        let mut inserted: BTreeSet<EdgeId> = BTreeSet::new();
        let mut cover: BTreeSet<VertexId> = BTreeSet::new();
        for op in batch {
            let e = op.eid();
            let (u, v) = e.endpoints();
            cover.extend([u, v]);
            match op {
                UpdateOp::Delete { .. } => {
                    inserted.remove(&e);
                    if self.mate[u as usize] == Some(v) {
                        self.mate[u as usize] = None;
                        self.mate[v as usize] = None;
                        removed.push(e);
                    }
                }
                UpdateOp::Insert { .. } => {
                    inserted.insert(e);
                }
            }
        }
        let freed: BTreeSet<VertexId> = removed.iter().flat_map(|e| <[VertexId; 2]>::from(e.endpoints())).collect();
        let freed_list: Vec<u32> = freed.iter().copied().collect();
        broadcast(sim, 0, &freed_list)?;
        let mut route: Distributed<EdgeId> = vec![Vec::new(); machines];
        route[0] = inserted.iter().copied().collect();
        all_to_all(sim, route, |_, e| owner_of(e, machines))?;

        // Owners keep edges at a freed vertex or freshly inserted, then ask
        // whether both endpoints are free.
        let mut held: Distributed<EdgeId> = vec![Vec::new(); machines];
        for e in next.edges() {
            let (u, v) = e.eid.endpoints();
            if inserted.contains(&e.eid) || freed.contains(&u) || freed.contains(&v) {
                held[owner_of(&e.eid, machines)].push(e.eid);
            }
        }
        let asks: Distributed<(VertexId, u64)> = held
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .flat_map(|(i, e)| {
                        let (a, b) = e.endpoints();
                        [(a, 2 * i as u64), (b, 2 * i as u64 + 1)]
                    })
                    .collect()
            })
            .collect();
        let taken = vertex_lookup(sim, asks, |x| self.mate[x as usize].is_some())?;
        let mut candidates: Distributed<EdgeId> = vec![Vec::new(); machines];
        for (mach, reps) in taken.into_iter().enumerate() {
            let mut busy = vec![false; held[mach].len()];
            for (tag, t) in reps {
                busy[(tag / 2) as usize] |= t;
            }
            candidates[mach] = held[mach].iter().zip(busy).filter(|(_, b)| !b).map(|(e, _)| *e).collect();
        }
        for op in batch {
            let m = owner_of(&op.eid(), machines);
            sim.charge(m, if matches!(op, UpdateOp::Insert { .. }) { 3 } else { -3 });
        }
        self.graph = next;
        let cover_list: Vec<u32> = cover.iter().copied().collect();
        broadcast(sim, 0, &cover_list)?;
        let mut inst = ResidualInstance { edges: candidates, cover: Cover::Set(cover), delta: 0, k: batch.len() };
        inst.delta = phase::max_cover_degree(sim, &inst)?;
        Ok((removed, inst))
    }

    /// Applies `batch` and returns the matching changes: removals first, then
    /// additions.
    pub fn process_batch(
        &mut self,
        sim: &mut Simulator,
        batch: &[UpdateOp],
    ) -> Result<(MatchingScript, MatchingStats), MatchingError> {
        let start = sim.metrics().rounds;
        let k = batch.len();
        let limit = self.batch_limit(sim);
        if k > limit {
            return Err(MatchingError::BatchTooLarge { k, limit });
        }
        if k == 0 {
            apply_batch(&self.graph, batch)?;
            return Ok((MatchingScript::default(), MatchingStats::default()));
        }
        let (removed, inst) = self.build_residual(sim, batch)?;
        let mut stats = MatchingStats {
            k,
            removed: removed.len(),
            candidates: inst.edge_count(),
            cover: inst.cover.len(self.graph.n()),
            ..Default::default()
        };
        let (added, phases) = solve(sim, inst, &self.params)?;
        for &e in &added {
            self.set_mate(e);
        }
        stats.phases = phases;
        stats.added = added.len();
        let mut d: Distributed<EdgeId> = vec![Vec::new(); sim.machines()];
        for &e in &added {
            d[owner_of(&e, sim.machines())].push(e);
        }
        gather_to(sim, 0, d)?;
        let mut ops: Vec<MatchingOp> = removed.into_iter().map(MatchingOp::Remove).collect();
        ops.extend(added.into_iter().map(MatchingOp::Add));
        stats.rounds = sim.metrics().rounds - start;
        Ok((MatchingScript { ops }, stats))
    }
}
