//! One batch: replacement candidates, the separator, the contracted replay,
//! and the net forest surgery.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use super::{vertex_lookup, ForestOp, MsfError, MsfState, UpdateScript};
use crate::graph::{apply_batch, EdgeId, EdgeKey, UpdateOp, VertexId, WeightedEdge};
use crate::mpc::{all_to_all, broadcast, gather_to, mpc_aggregate_by_key, owner_of, Distributed, Simulator};
use crate::oracles::Dsu;
use crate::toptree::PieceLabel;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BatchStats {
    pub k: usize,
    /// Deleted edges present before the batch, and those among them in the
    /// forest.
    pub deleted: usize,
    pub deleted_forest: usize,
    pub replacements: usize,
    pub vu: usize,
    pub separator: usize,
    pub replay_vertices: usize,
    pub replay_edges: usize,
    pub script_len: usize,
    pub rounds: usize,
}

/// MSF of a small multigraph whose vertices are piece labels.
fn contracted_msf<'a>(
    edges: impl Iterator<Item = &'a WeightedEdge>,
    piece: &HashMap<VertexId, PieceLabel>,
) -> BTreeSet<EdgeId> {
    let mut sorted: Vec<&WeightedEdge> = edges.collect();
    sorted.sort_by_key(|e| e.key());
    let mut idx: HashMap<PieceLabel, usize> = HashMap::new();
    for e in &sorted {
        for x in [e.u, e.v] {
            let k = idx.len();
            idx.entry(piece[&x]).or_insert(k);
        }
    }
    let mut dsu = Dsu::new(idx.len());
    sorted.into_iter().filter(|e| dsu.union(idx[&piece[&e.u]], idx[&piece[&e.v]])).map(|e| e.eid).collect()
}

impl MsfState {
    /// Largest batch accepted.
    pub fn batch_limit(sim: &Simulator) -> usize {
        sim.words_per_machine()
    }

    /// Applies `batch` and returns the script realizing every prefix.
    pub fn process_batch(
        &mut self,
        sim: &mut Simulator,
        batch: &[UpdateOp],
    ) -> Result<(UpdateScript, BatchStats), MsfError> {
        let start_rounds = sim.metrics().rounds;
        let k = batch.len();
        let limit = Self::batch_limit(sim);
        if k > limit {
            return Err(MsfError::BatchTooLarge { k, limit });
        }
        let final_graph = apply_batch(&self.graph, batch)?;
        if k == 0 {
            return Ok((UpdateScript::default(), BatchStats::default()));
        }
        let machines = sim.machines();
        let mut stats = BatchStats { k, ..Default::default() };

        // Ops reach the owners of their edges, which report forest status.
        let ops: Distributed<(EdgeId, u64)> = {
            let mut d = vec![Vec::new(); machines];
            d[0] = batch.iter().enumerate().map(|(i, op)| (op.eid(), i as u64)).collect();
            d
        };
        let at_owner = all_to_all(sim, ops, |_, (e, _)| owner_of(e, machines))?;
        let status: Distributed<(u64, u64)> = at_owner
            .into_iter()
            .map(|v| v.into_iter().map(|(e, i)| (i, self.forest.contains_key(&e) as u64)).collect())
            .collect();
        gather_to(sim, 0, status)?;

        let mut deleted: BTreeSet<EdgeId> = BTreeSet::new();
        let mut inserted: Vec<WeightedEdge> = Vec::new();
        for op in batch {
            match *op {
                UpdateOp::Delete { .. } if self.graph.contains(op.eid()) => {
                    deleted.insert(op.eid());
                }
                UpdateOp::Insert { u, v, w } => inserted.push(WeightedEdge::new(u, v, w)),
                _ => {}
            }
        }
        let deleted_forest: Vec<WeightedEdge> = deleted.iter().filter_map(|e| self.forest.get(e).copied()).collect();
        stats.deleted = deleted.len();
        stats.deleted_forest = deleted_forest.len();

        let replacements = self.replacement_candidates(sim, &deleted, &deleted_forest)?;
        stats.replacements = replacements.len();

        let mut vu: BTreeSet<VertexId> = BTreeSet::new();
        for e in deleted.iter().map(|e| e.endpoints()) {
            vu.extend([e.0, e.1]);
        }
        for e in replacements.iter().chain(&inserted) {
            vu.extend([e.u, e.v]);
        }
        stats.vu = vu.len();
        let vu_list: Vec<VertexId> = vu.iter().copied().collect();
        let sep = self.top.separator(sim, &vu_list)?;
        stats.separator = sep.edges.len();

        let mut marked: HashSet<EdgeId> = sep.edges.iter().copied().collect();
        marked.extend(deleted_forest.iter().map(|e| e.eid));
        let labels = self.top.label_by_marked(sim, &marked)?;

        // Gather the replay instance on machine 0.
        let mut needed: BTreeSet<VertexId> = vu.clone();
        for e in &marked {
            let (u, v) = e.endpoints();
            needed.extend([u, v]);
        }
        let mut asks: Distributed<(VertexId, u64)> = vec![Vec::new(); machines];
        asks[0] = needed.iter().map(|&v| (v, v as u64)).collect();
        let got = vertex_lookup(sim, asks, |v| labels[v as usize])?;
        let piece: HashMap<VertexId, PieceLabel> = got.into_iter().flatten().map(|(v, l)| (v as VertexId, l)).collect();
        let forest_part: Distributed<WeightedEdge> = {
            let mut d = vec![Vec::new(); machines];
            for e in &marked {
                d[owner_of(e, machines)].push(self.forest[e]);
            }
            d
        };
        let base: Vec<WeightedEdge> = gather_to(sim, 0, forest_part)?;

        let mut live: BTreeMap<EdgeId, WeightedEdge> = base.iter().map(|e| (e.eid, *e)).collect();
        for e in &replacements {
            live.insert(e.eid, *e);
        }
        // Non-forest edges deleted later in the batch may enter before then.
        for eid in &deleted {
            if !self.forest.contains_key(eid) {
                live.insert(*eid, self.graph.edge(*eid).unwrap());
            }
        }
        let pieces: HashSet<PieceLabel> = piece.values().copied().collect();
        stats.replay_vertices = pieces.len();
        stats.replay_edges = live.len() + inserted.len();

        let mut cur: BTreeMap<EdgeId, WeightedEdge> = base.iter().map(|e| (e.eid, *e)).collect();
        let mut script = UpdateScript::default();
        for op in batch {
            match *op {
                UpdateOp::Insert { u, v, w } => {
                    let e = WeightedEdge::new(u, v, w);
                    live.insert(e.eid, e);
                }
                UpdateOp::Delete { .. } => {
                    live.remove(&op.eid());
                }
            }
            let next = contracted_msf(live.values(), &piece);
            let mut step: Vec<ForestOp> = Vec::new();
            let gone: Vec<WeightedEdge> = cur.values().filter(|e| !next.contains(&e.eid)).copied().collect();
            for e in gone {
                cur.remove(&e.eid);
                step.push(ForestOp::Delete(e));
            }
            for eid in next {
                if let std::collections::btree_map::Entry::Vacant(slot) = cur.entry(eid) {
                    let e = live[&eid];
                    slot.insert(e);
                    step.push(ForestOp::Insert(e));
                }
            }
            // The update's own edge comes first.
            step.sort_by_key(|f| match f {
                ForestOp::Delete(e) | ForestOp::Insert(e) if e.eid == op.eid() => 0,
                ForestOp::Delete(_) => 1,
                ForestOp::Insert(_) => 2,
            });
            script.ops.extend(step);
            script.y.push(script.ops.len());
        }
        stats.script_len = script.ops.len();

        let mut cut: Vec<EdgeId> = Vec::new();
        for e in &base {
            if cur.get(&e.eid) != Some(e) {
                cut.push(e.eid);
            }
        }
        let link: Vec<WeightedEdge> = cur.values().filter(|e| self.forest.get(&e.eid) != Some(*e)).copied().collect();
        self.top.update(sim, &cut, &link)?;
        for e in &cut {
            self.forest.remove(e);
        }
        for e in &link {
            self.forest.insert(e.eid, *e);
        }

        // Ops travel to their edge owners, which update the stored graph.
        let mut route: Distributed<(EdgeId, u64)> = vec![Vec::new(); machines];
        route[0] = batch.iter().map(|op| (op.eid(), matches!(op, UpdateOp::Insert { .. }) as u64)).collect();
        all_to_all(sim, route, |_, (e, _)| owner_of(e, machines))?;
        for op in batch {
            let m = owner_of(&op.eid(), machines);
            sim.charge(m, if matches!(op, UpdateOp::Insert { .. }) { 3 } else { -3 });
        }
        self.graph = final_graph;
        stats.rounds = sim.metrics().rounds - start_rounds;
        Ok((script, stats))
    }

    /// Lightest reconnecting edges: the MSF of the pieces of `F - D` around
    /// deleted forest edges, over the surviving non-forest edges.
    fn replacement_candidates(
        &self,
        sim: &mut Simulator,
        deleted: &BTreeSet<EdgeId>,
        deleted_forest: &[WeightedEdge],
    ) -> Result<Vec<WeightedEdge>, MsfError> {
        if deleted_forest.is_empty() {
            return Ok(Vec::new());
        }
        let machines = sim.machines();
        let marked: HashSet<EdgeId> = deleted_forest.iter().map(|e| e.eid).collect();
        let labels = self.top.label_by_marked(sim, &marked)?;
        let mut ends: Distributed<(VertexId, u64)> = vec![Vec::new(); machines];
        ends[0] = deleted_forest.iter().flat_map(|e| [(e.u, 0), (e.v, 0)]).collect();
        let touched_list = vertex_lookup(sim, ends, |v| labels[v as usize])?;
        let touched: BTreeSet<PieceLabel> = touched_list.into_iter().flatten().map(|(_, l)| l).collect();
        let touched_vec: Vec<PieceLabel> = touched.iter().copied().collect();
        broadcast(sim, 0, &touched_vec)?;

        // Every machine labels the endpoints of its surviving non-forest edges.
        let mut held: Distributed<WeightedEdge> = vec![Vec::new(); machines];
        for e in self.graph.edges() {
            if !self.forest.contains_key(&e.eid) && !deleted.contains(&e.eid) {
                held[owner_of(&e.eid, machines)].push(e);
            }
        }
        let requests: Distributed<(VertexId, u64)> = held
            .iter()
            .map(|v| v.iter().enumerate().flat_map(|(i, e)| [(e.u, 2 * i as u64), (e.v, 2 * i as u64 + 1)]).collect())
            .collect();
        let replies = vertex_lookup(sim, requests, |v| labels[v as usize])?;
        let mut pairs: Distributed<((PieceLabel, PieceLabel), EdgeKey)> = vec![Vec::new(); machines];
        for (mach, reps) in replies.into_iter().enumerate() {
            let mut lab = vec![[PieceLabel::Root(0); 2]; held[mach].len()];
            for (tag, l) in reps {
                lab[(tag / 2) as usize][(tag % 2) as usize] = l;
            }
            for (e, [a, b]) in held[mach].iter().zip(lab) {
                if a != b && touched.contains(&a) && touched.contains(&b) {
                    pairs[mach].push(((a.min(b), a.max(b)), e.key()));
                }
            }
        }
        let best = mpc_aggregate_by_key(sim, pairs, |x, y| *x.min(y))?;
        let mut all = gather_to(sim, 0, best)?;
        all.sort_by_key(|(_, key)| *key);
        let mut idx: HashMap<PieceLabel, usize> = HashMap::new();
        for (i, l) in touched.iter().enumerate() {
            idx.insert(*l, i);
        }
        let mut dsu = Dsu::new(idx.len());
        let mut out = Vec::new();
        for ((a, b), (w, eid)) in all {
            if dsu.union(idx[&a], idx[&b]) {
                let (u, v) = eid.endpoints();
                out.push(WeightedEdge { u, v, w, eid });
            }
        }
        Ok(out)
    }
}
