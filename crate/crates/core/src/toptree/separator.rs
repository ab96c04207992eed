//! Heaviest-edge separators for terminal sets.
//!
//! For each tree and the terminals in it, the separator is the set of edges
//! that are the heaviest on the path between some pair of terminals. The
//! compressed tree connects the terminals: terminals with no separator edge
//! between them are joined by unlabelled edges, and every separator edge
//! becomes one labelled edge.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::query::Inc;
use super::repair::charge_pass;
use super::{owner, Node, NodeId, TopTree, TopTreeError};
use crate::graph::{EdgeId, EdgeKey, VertexId};
use crate::mpc::Simulator;
use crate::oracles::Dsu;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CompressedEdge {
    pub a: VertexId,
    pub b: VertexId,
    /// Heaviest forest edge between `a` and `b`, or `None` when none is
    /// essential.
    pub key: Option<EdgeKey>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparatorResult {
    pub edges: BTreeSet<EdgeId>,
    pub compressed: Vec<CompressedEdge>,
}

/// Keeps the edges of `tree` that are heaviest between two terminals and
/// contracts the rest.
fn compress(tree: &[CompressedEdge], terminals: &BTreeSet<VertexId>) -> Vec<CompressedEdge> {
    let mut idx: HashMap<VertexId, usize> = HashMap::new();
    for e in tree {
        for v in [e.a, e.b] {
            let k = idx.len();
            idx.entry(v).or_insert(k);
        }
    }
    for &t in terminals {
        let k = idx.len();
        idx.entry(t).or_insert(k);
    }
    let mut dsu = Dsu::new(idx.len());
    let mut has_t = vec![false; idx.len()];
    for t in terminals {
        has_t[idx[t]] = true;
    }
    let mut order: Vec<&CompressedEdge> = tree.iter().collect();
    order.sort_by_key(|e| e.key);
    let mut kept = Vec::new();
    for e in order {
        let (x, y) = (dsu.find(idx[&e.a]), dsu.find(idx[&e.b]));
        if x == y {
            continue;
        }
        if e.key.is_some() && has_t[x] && has_t[y] {
            kept.push(*e);
            continue;
        }
        let t = has_t[x] || has_t[y];
        dsu.union(x, y);
        has_t[dsu.find(x)] = t;
    }
    let mut rep: HashMap<usize, VertexId> = HashMap::new();
    let mut out = Vec::new();
    for &t in terminals {
        let c = dsu.find(idx[&t]);
        match rep.get(&c) {
            Some(&r) => out.push(CompressedEdge { a: r, b: t, key: None }),
            None => {
                rep.insert(c, t);
            }
        }
    }
    for e in kept {
        let a = rep[&dsu.find(idx[&e.a])];
        let b = rep[&dsu.find(idx[&e.b])];
        out.push(CompressedEdge { a, b, key: e.key });
    }
    out
}

impl TopTree {
    /// Children of `x` on the subtree of its incidence tree spanning the
    /// located terminals, with the vertices each must connect.
    fn steiner_split(&self, x: &Node, terms: &BTreeSet<VertexId>) -> Vec<(u32, BTreeSet<VertexId>)> {
        let mut at: Vec<Inc> =
            terms
                .iter()
                .map(|&t| {
                    if x.junction(t).is_some() {
                        Inc::Vertex(t)
                    } else {
                        Inc::Child(self.children_containing(x, t)[0])
                    }
                })
                .collect();
        at.sort_by_key(|i| match i {
            Inc::Child(c) => (0, *c as u64),
            Inc::Vertex(v) => (1, *v as u64),
        });
        at.dedup();
        let mut on: HashSet<Inc> = HashSet::new();
        on.insert(at[0]);
        for &y in &at[1..] {
            on.extend(self.inc_path(x, at[0], y));
        }
        let mut out: BTreeMap<u32, BTreeSet<VertexId>> = BTreeMap::new();
        for &i in &on {
            if let Inc::Child(c) = i {
                out.entry(c).or_default();
            }
        }
        for &i in &on {
            if let Inc::Vertex(w) = i {
                for &c in x.junction(w).unwrap() {
                    if let Some(s) = out.get_mut(&c) {
                        s.insert(w);
                    }
                }
            }
        }
        for &t in terms {
            if x.junction(t).is_none() {
                let c = self.children_containing(x, t)[0];
                out.get_mut(&c).unwrap().insert(t);
            }
        }
        out.into_iter().filter(|(_, s)| s.len() >= 2).collect()
    }

    /// Separator of `terminals` per tree. Terminals alone in their tree
    /// contribute nothing.
    pub fn separator(&self, sim: &mut Simulator, terminals: &[VertexId]) -> Result<SeparatorResult, TopTreeError> {
        let mut down: BTreeMap<u32, HashMap<NodeId, BTreeSet<VertexId>>> = BTreeMap::new();
        let mut top = 0;
        let mut roots: Vec<(NodeId, BTreeSet<VertexId>)> = Vec::new();
        let mut per_root: BTreeMap<NodeId, BTreeSet<VertexId>> = BTreeMap::new();
        for &t in terminals {
            if t as usize >= self.n() {
                return Err(TopTreeError::VertexOutOfRange(t));
            }
            if let Some(r) = self.root_of(t) {
                per_root.entry(r).or_default().insert(t);
            }
        }
        for (r, ts) in per_root {
            if ts.len() >= 2 {
                let rank = self.nodes[&r].rank;
                top = top.max(rank);
                down.entry(rank).or_default().insert(r, ts.clone());
                roots.push((r, ts));
            }
        }
        let mut plan: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        let mut want: HashMap<NodeId, BTreeSet<VertexId>> = HashMap::new();
        let mut rank = top;
        while rank > 0 {
            let level = down.remove(&rank).unwrap_or_default();
            let mut msgs = Vec::new();
            for (id, ts) in level {
                let x = &self.nodes[&id];
                let mut kids = Vec::new();
                for (c, s) in self.steiner_split(x, &ts) {
                    let cid = x.children[c as usize];
                    msgs.push((owner(id), owner(cid), s.len()));
                    down.entry(rank - 1).or_default().insert(cid, s);
                    kids.push(cid);
                }
                plan.insert(id, kids);
                want.insert(id, ts);
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
            rank -= 1;
        }
        let mut res: HashMap<NodeId, Vec<CompressedEdge>> = HashMap::new();
        for (id, _) in down.remove(&0).unwrap_or_default() {
            let e = self.nodes[&id].edge.unwrap();
            res.insert(id, vec![CompressedEdge { a: e.u, b: e.v, key: Some(e.key()) }]);
        }
        let mut by_rank: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for &id in plan.keys() {
            by_rank.entry(self.nodes[&id].rank).or_default().push(id);
        }
        for (_, ids) in by_rank {
            let mut msgs = Vec::new();
            for id in ids {
                let mut tree = Vec::new();
                for c in &plan[&id] {
                    let part = res.remove(c).unwrap();
                    msgs.push((owner(*c), owner(id), 1 + 3 * part.len()));
                    tree.extend(part);
                }
                res.insert(id, compress(&tree, &want[&id]));
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
        }
        let mut out = SeparatorResult::default();
        for (r, _) in roots {
            for e in res.remove(&r).unwrap() {
                if let Some((_, eid)) = e.key {
                    out.edges.insert(eid);
                }
                out.compressed.push(e);
            }
        }
        Ok(out)
    }
}
