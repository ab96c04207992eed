//! Undirected weighted simple graphs, canonical edge ids and batched updates.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = u32;

/// Canonical identifier of the undirected edge `{u, v}`: `(min << 32) | max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u64);

impl EdgeId {
    pub fn endpoints(self) -> (VertexId, VertexId) {
        ((self.0 >> 32) as VertexId, self.0 as u32)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (u, v) = self.endpoints();
        write!(f, "{u}-{v}")
    }
}

pub fn canonical_eid(u: VertexId, v: VertexId) -> EdgeId {
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    EdgeId(((a as u64) << 32) | b as u64)
}

/// Edge weight with a total order (`f64::total_cmp`).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Weight(pub f64);

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Weight {}
impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Strict total order used everywhere edges are compared: weight, then id.
pub type EdgeKey = (Weight, EdgeId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: Weight,
    pub eid: EdgeId,
}

impl WeightedEdge {
    pub fn new(u: VertexId, v: VertexId, w: f64) -> Self {
        let eid = canonical_eid(u, v);
        let (u, v) = eid.endpoints();
        WeightedEdge { u, v, w: Weight(w), eid }
    }

    pub fn key(&self) -> EdgeKey {
        (self.w, self.eid)
    }

    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum UpdateOp {
    Insert { u: VertexId, v: VertexId, w: f64 },
    Delete { u: VertexId, v: VertexId },
}

impl UpdateOp {
    pub fn endpoints(&self) -> (VertexId, VertexId) {
        match *self {
            UpdateOp::Insert { u, v, .. } | UpdateOp::Delete { u, v } => (u, v),
        }
    }

    pub fn eid(&self) -> EdgeId {
        let (u, v) = self.endpoints();
        canonical_eid(u, v)
    }
}

pub type Batch = Vec<UpdateOp>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("self loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {v} out of range (n = {n})")]
    VertexOutOfRange { v: VertexId, n: usize },
    #[error("edge {0} already present")]
    DuplicateEdge(EdgeId),
    #[error("edge {0} not present")]
    MissingEdge(EdgeId),
    #[error("invalid operation {index} in batch: {source}")]
    InvalidOp {
        index: usize,
        #[source]
        source: Box<GraphError>,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Simple undirected graph on vertices `0..n` with weighted edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Graph {
    n: usize,
    edges: BTreeMap<EdgeId, Weight>,
    adj: Vec<BTreeSet<VertexId>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { n, edges: BTreeMap::new(), adj: vec![BTreeSet::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[WeightedEdge]) -> Result<Self, GraphError> {
        let mut g = Graph::new(n);
        for e in edges {
            g.insert(e.u, e.v, e.w.0)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    fn check(&self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        for x in [u, v] {
            if x as usize >= self.n {
                return Err(GraphError::VertexOutOfRange { v: x, n: self.n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        Ok(())
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<WeightedEdge, GraphError> {
        self.check(u, v)?;
        let e = WeightedEdge::new(u, v, w);
        if self.edges.contains_key(&e.eid) {
            return Err(GraphError::DuplicateEdge(e.eid));
        }
        self.edges.insert(e.eid, e.w);
        self.adj[u as usize].insert(v);
        self.adj[v as usize].insert(u);
        Ok(e)
    }

    pub fn delete(&mut self, u: VertexId, v: VertexId) -> Result<WeightedEdge, GraphError> {
        self.check(u, v)?;
        let eid = canonical_eid(u, v);
        let w = self.edges.remove(&eid).ok_or(GraphError::MissingEdge(eid))?;
        self.adj[u as usize].remove(&v);
        self.adj[v as usize].remove(&u);
        let (a, b) = eid.endpoints();
        Ok(WeightedEdge { u: a, v: b, w, eid })
    }

    pub fn apply(&mut self, op: &UpdateOp) -> Result<WeightedEdge, GraphError> {
        match *op {
            UpdateOp::Insert { u, v, w } => self.insert(u, v, w),
            UpdateOp::Delete { u, v } => self.delete(u, v),
        }
    }

    pub fn contains(&self, eid: EdgeId) -> bool {
        self.edges.contains_key(&eid)
    }

    pub fn edge(&self, eid: EdgeId) -> Option<WeightedEdge> {
        self.edges.get(&eid).map(|&w| {
            let (u, v) = eid.endpoints();
            WeightedEdge { u, v, w, eid }
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = WeightedEdge> + '_ {
        self.edges.iter().map(|(&eid, &w)| {
            let (u, v) = eid.endpoints();
            WeightedEdge { u, v, w, eid }
        })
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v as usize].iter().copied()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).max().unwrap_or(0)
    }
}

/// Applies `batch` in order to a copy of `g`. The first invalid operation
/// aborts the whole batch and `g` is left as it was.
pub fn apply_batch(g: &Graph, batch: &[UpdateOp]) -> Result<Graph, GraphError> {
    let mut h = g.clone();
    for (index, op) in batch.iter().enumerate() {
        h.apply(op).map_err(|e| GraphError::InvalidOp { index, source: Box::new(e) })?;
    }
    Ok(h)
}

/// Adjacency-list forest used by several oracles and checks.
pub fn forest_adjacency(n: usize, edges: &[WeightedEdge]) -> Vec<Vec<(VertexId, WeightedEdge)>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.u as usize].push((e.v, *e));
        adj[e.v as usize].push((e.u, *e));
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_id_is_symmetric() {
        assert_eq!(canonical_eid(3, 9), canonical_eid(9, 3));
        assert_eq!(canonical_eid(3, 9).endpoints(), (3, 9));
    }

    #[test]
    fn batch_is_atomic() {
        let mut g = Graph::new(3);
        g.insert(0, 1, 1.0).unwrap();
        let err =
            apply_batch(&g, &[UpdateOp::Insert { u: 1, v: 2, w: 2.0 }, UpdateOp::Delete { u: 0, v: 2 }]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidOp { index: 1, .. }));
        assert_eq!(g.m(), 1);
    }

    #[test]
    fn delete_then_reinsert_in_one_batch() {
        let mut g = Graph::new(2);
        g.insert(0, 1, 1.0).unwrap();
        let h = apply_batch(&g, &[UpdateOp::Delete { u: 1, v: 0 }, UpdateOp::Insert { u: 0, v: 1, w: 5.0 }]).unwrap();
        assert_eq!(h.edge(canonical_eid(0, 1)).unwrap().w, Weight(5.0));
    }

    #[test]
    fn rejects_bad_ops() {
        let mut g = Graph::new(2);
        assert_eq!(g.insert(1, 1, 0.0), Err(GraphError::SelfLoop(1)));
        assert!(matches!(g.insert(0, 2, 0.0), Err(GraphError::VertexOutOfRange { .. })));
        g.insert(0, 1, 0.0).unwrap();
        assert!(matches!(g.insert(1, 0, 3.0), Err(GraphError::DuplicateEdge(_))));
    }

    #[test]
    fn weight_order_breaks_ties_by_id() {
        let a = WeightedEdge::new(0, 5, 1.0);
        let b = WeightedEdge::new(1, 2, 1.0);
        assert!(a.key() < b.key());
    }
}
