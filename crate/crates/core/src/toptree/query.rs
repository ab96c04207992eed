//! Batched path aggregates.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::repair::charge_pass;
use super::{owner, EdgeAggregate, Node, NodeId, TopTree, TopTreeError};
use crate::graph::VertexId;
use crate::mpc::{Simulator, WordSized};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub(super) enum Inc {
    Child(u32),
    Vertex(VertexId),
}

type Sub = (VertexId, VertexId);

impl TopTree {
    fn locate(&self, x: &Node, v: VertexId) -> Inc {
        if x.junction(v).is_some() {
            Inc::Vertex(v)
        } else {
            Inc::Child(self.children_containing(x, v)[0])
        }
    }

    fn inc_neighbors(&self, x: &Node, at: Inc) -> Vec<Inc> {
        match at {
            Inc::Child(i) => self.nodes[&x.children[i as usize]]
                .boundary
                .iter()
                .filter(|&&w| x.junction(w).is_some())
                .map(|&w| Inc::Vertex(w))
                .collect(),
            Inc::Vertex(w) => x.junction(w).map_or(Vec::new(), |c| c.iter().map(|&i| Inc::Child(i)).collect()),
        }
    }

    /// Path between two incidence nodes of `x`'s children.
    pub(super) fn inc_path(&self, x: &Node, from: Inc, to: Inc) -> Vec<Inc> {
        let mut prev: HashMap<Inc, Inc> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        prev.insert(from, from);
        while let Some(a) = queue.pop_front() {
            if a == to {
                break;
            }
            for y in self.inc_neighbors(x, a) {
                if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(y) {
                    e.insert(a);
                    queue.push_back(y);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[&cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    /// Splits the path `a..b` inside `x` into per-child sub-paths.
    fn split(&self, x: &Node, a: VertexId, b: VertexId) -> Vec<(u32, Sub)> {
        let path = self.inc_path(x, self.locate(x, a), self.locate(x, b));
        let mut out = Vec::new();
        for (k, step) in path.iter().enumerate() {
            if let Inc::Child(i) = *step {
                let entry = match k.checked_sub(1).map(|j| path[j]) {
                    Some(Inc::Vertex(w)) => w,
                    _ => a,
                };
                let exit = match path.get(k + 1) {
                    Some(Inc::Vertex(w)) => *w,
                    _ => b,
                };
                if entry != exit {
                    out.push((i, norm(entry, exit)));
                }
            }
        }
        out
    }

    /// Aggregate of the forest edges on the path between each pair.
    pub fn batch_path_query<A: EdgeAggregate>(
        &self,
        sim: &mut Simulator,
        agg: &A,
        queries: &[(VertexId, VertexId)],
    ) -> Result<Vec<A::Output>, TopTreeError> {
        let mut down: BTreeMap<u32, HashMap<NodeId, BTreeSet<Sub>>> = BTreeMap::new();
        let mut top_rank = 0;
        for (i, &(u, v)) in queries.iter().enumerate() {
            for x in [u, v] {
                if x as usize >= self.n() {
                    return Err(TopTreeError::VertexOutOfRange(x));
                }
            }
            if u == v {
                continue;
            }
            if !self.same_tree(u, v) {
                return Err(TopTreeError::DifferentComponents { index: i });
            }
            let r = self.root_of(u).unwrap();
            let rank = self.nodes[&r].rank;
            top_rank = top_rank.max(rank);
            down.entry(rank).or_default().entry(r).or_default().insert(norm(u, v));
        }
        let mut plan: HashMap<(NodeId, Sub), Vec<(NodeId, Sub)>> = HashMap::new();
        let mut rank = top_rank;
        while rank > 0 {
            let level = down.remove(&rank).unwrap_or_default();
            let mut msgs = Vec::new();
            for (id, subs) in level {
                let x = &self.nodes[&id];
                for s in subs {
                    let parts: Vec<(NodeId, Sub)> =
                        self.split(x, s.0, s.1).into_iter().map(|(i, p)| (x.children[i as usize], p)).collect();
                    for &(c, p) in &parts {
                        msgs.push((owner(id), owner(c), 2));
                        down.entry(rank - 1).or_default().entry(c).or_default().insert(p);
                    }
                    plan.insert((id, s), parts);
                }
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
            rank -= 1;
        }
        let mut ans: HashMap<(NodeId, Sub), A::Value> = HashMap::new();
        for (id, subs) in down.remove(&0).unwrap_or_default() {
            let v = agg.leaf(self.nodes[&id].edge.as_ref().unwrap());
            for s in subs {
                ans.insert((id, s), v.clone());
            }
        }
        let mut by_rank: BTreeMap<u32, Vec<(NodeId, Sub)>> = BTreeMap::new();
        for &(id, s) in plan.keys() {
            by_rank.entry(self.nodes[&id].rank).or_default().push((id, s));
        }
        for (_, keys) in by_rank {
            let mut msgs = Vec::new();
            for key in keys {
                let mut acc = agg.identity();
                for part in &plan[&key] {
                    let v = &ans[part];
                    msgs.push((owner(part.0), owner(key.0), 2 + v.words()));
                    acc = agg.merge(&acc, v);
                }
                ans.insert(key, acc);
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
        }
        Ok(queries
            .iter()
            .map(|&(u, v)| {
                if u == v {
                    agg.finalize(&agg.identity())
                } else {
                    agg.finalize(&ans[&(self.root_of(u).unwrap(), norm(u, v))])
                }
            })
            .collect())
    }
}

fn norm(a: VertexId, b: VertexId) -> Sub {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
