//! b-ary top trees over a dynamic forest.
//!
//! Every tree of the forest is covered by a hierarchy of clusters. A leaf
//! (rank 0) is a single edge; a node of rank `r` is a connected union of
//! between `b` and `4b` nodes of rank `r - 1` (the root may have fewer). All
//! leaves of one tree sit at the same depth, which is at most
//! `ceil(2 / alpha) + 2` for `b = max(2, ceil(n^(alpha/2)))`.
//!
//! Nodes live on simulated machines (the owner is encoded in the id). Every
//! operation is a sequence of rank-synchronous passes; each pass charges the
//! words it moves between owners to the [`Simulator`].

mod aggregate;
mod check;
mod peel;
mod query;
mod repair;
mod separator;

pub use aggregate::{EdgeAggregate, PieceLabel, VertexAggregate};
pub use check::{parse_dump, DumpLine};
pub use separator::{CompressedEdge, SeparatorResult};

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::constants::{C_ARITY, C_ROOT_ARITY};
use crate::graph::{EdgeId, VertexId, WeightedEdge};
use crate::mpc::{owner_of, MpcError, Simulator, WordSized};

pub type NodeId = u64;

const OWNER_SHIFT: u32 = 48;

pub fn owner(id: NodeId) -> usize {
    (id >> OWNER_SHIFT) as usize
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopTreeError {
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error("edge {0} is not in the forest")]
    MissingEdge(EdgeId),
    #[error("edge {0} is already in the forest")]
    DuplicateEdge(EdgeId),
    #[error("linking {0} would close a cycle")]
    WouldCreateCycle(EdgeId),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(VertexId),
    #[error("query {index}: endpoints lie in different trees")]
    DifferentComponents { index: usize },
    #[error("repair did not converge after {retries} restarts (rank {rank})")]
    RebalanceFailed { rank: u32, retries: usize },
}

/// A vertex of a cluster that may be shared with other clusters of the same
/// rank, with the number of cluster edges at it and the child containing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Iface {
    pub v: VertexId,
    pub deg: u32,
    pub child: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub rank: u32,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// The edge of a leaf.
    pub edge: Option<WeightedEdge>,
    /// Number of edges in the cluster.
    pub weight: usize,
    pub min_vertex: VertexId,
    /// Candidate exposed vertices. A vertex is exposed when
    /// `deg < forest degree`; stale entries are tolerated.
    pub ifaces: Vec<Iface>,
    /// Vertices shared with siblings.
    pub boundary: Vec<VertexId>,
    /// Vertices shared by at least two children, with those children.
    pub junctions: Vec<(VertexId, Vec<u32>)>,
    /// Topmost vertex with respect to the tree's canonical root.
    pub root_vertex: VertexId,
}

impl WordSized for Node {
    fn words(&self) -> usize {
        8 + self.children.len()
            + 3 * self.ifaces.len()
            + self.boundary.len()
            + self.junctions.iter().map(|(_, c)| 1 + c.len()).sum::<usize>()
    }
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.rank == 0
    }

    fn iface(&self, v: VertexId) -> Option<&Iface> {
        self.ifaces.iter().find(|f| f.v == v)
    }

    fn junction(&self, v: VertexId) -> Option<&Vec<u32>> {
        self.junctions.iter().find(|(x, _)| *x == v).map(|(_, c)| c)
    }
}

/// Fixed parameters of a top tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopTreeParams {
    pub n: usize,
    pub b: usize,
    pub max_arity: usize,
    /// Roots are exempt from `[b, max_arity]` but hold at most this many
    /// children.
    pub max_root_arity: usize,
    pub max_depth: u32,
}

impl TopTreeParams {
    pub fn new(n: usize, alpha: f64) -> Self {
        let b = crate::mpc::scale(n, alpha / 2.0).max(2);
        TopTreeParams {
            n,
            b,
            max_arity: C_ARITY * b,
            max_root_arity: C_ROOT_ARITY * b,
            max_depth: (2.0 / alpha).ceil() as u32 + 2,
        }
    }

    pub fn with_b(n: usize, b: usize) -> Self {
        let b = b.max(2);
        let depth = ((n.max(2) as f64).ln() / (b as f64).ln()).ceil() as u32 + 2;
        TopTreeParams { n, b, max_arity: C_ARITY * b, max_root_arity: C_ROOT_ARITY * b, max_depth: depth }
    }
}

pub struct TopTree {
    params: TopTreeParams,
    machines: usize,
    nodes: HashMap<NodeId, Node>,
    leaf_of: HashMap<EdgeId, NodeId>,
    edges: HashMap<EdgeId, WeightedEdge>,
    adj: Vec<BTreeSet<EdgeId>>,
    refs: Vec<Vec<NodeId>>,
    roots: BTreeSet<NodeId>,
    counters: Vec<u64>,
    vertex_words: Vec<usize>,
}

impl TopTree {
    pub fn empty(params: TopTreeParams, machines: usize) -> Self {
        TopTree {
            params,
            machines,
            nodes: HashMap::new(),
            leaf_of: HashMap::new(),
            edges: HashMap::new(),
            adj: vec![BTreeSet::new(); params.n],
            refs: vec![Vec::new(); params.n],
            roots: BTreeSet::new(),
            counters: vec![0; machines],
            vertex_words: vec![0; params.n],
        }
    }

    /// Builds top trees for `forest` by linking all its edges into an empty
    /// structure.
    pub fn build_from_forest(
        sim: &mut Simulator,
        params: TopTreeParams,
        forest: &[WeightedEdge],
    ) -> Result<Self, TopTreeError> {
        let mut t = TopTree::empty(params, sim.machines());
        t.update(sim, &[], forest)?;
        Ok(t)
    }

    pub fn params(&self) -> &TopTreeParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn roots(&self) -> impl Iterator<Item = &Node> + '_ {
        self.roots.iter().map(|r| &self.nodes[r])
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, eid: EdgeId) -> bool {
        self.edges.contains_key(&eid)
    }

    pub fn forest_edges(&self) -> Vec<WeightedEdge> {
        let mut v: Vec<WeightedEdge> = self.edges.values().copied().collect();
        v.sort_by_key(|e| e.eid);
        v
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn reference_set(&self, v: VertexId) -> &[NodeId] {
        &self.refs[v as usize]
    }

    /// Root node of the tree containing `v`; `None` for isolated vertices.
    pub fn root_of(&self, v: VertexId) -> Option<NodeId> {
        self.refs[v as usize].last().copied()
    }

    /// Canonical root vertex (minimum id) of `v`'s tree.
    pub fn tree_root_vertex(&self, v: VertexId) -> VertexId {
        self.root_of(v).map_or(v, |r| self.nodes[&r].min_vertex)
    }

    pub fn same_tree(&self, u: VertexId, v: VertexId) -> bool {
        u == v || (self.root_of(u).is_some() && self.root_of(u) == self.root_of(v))
    }

    /// Height of the tallest tree (0 for an empty forest).
    pub fn depth(&self) -> u32 {
        self.roots().map(|r| r.rank).max().unwrap_or(0)
    }

    pub fn batch_cut(&mut self, sim: &mut Simulator, eids: &[EdgeId]) -> Result<(), TopTreeError> {
        self.update(sim, eids, &[])
    }

    pub fn batch_link(&mut self, sim: &mut Simulator, edges: &[WeightedEdge]) -> Result<(), TopTreeError> {
        self.update(sim, &[], edges)
    }

    /// Removes `cut` and then adds `link` in one repair.
    pub fn update(&mut self, sim: &mut Simulator, cut: &[EdgeId], link: &[WeightedEdge]) -> Result<(), TopTreeError> {
        repair::run(self, sim, cut, link)
    }

    fn exposed(&self, f: &Iface) -> bool {
        (f.deg as usize) < self.adj[f.v as usize].len()
    }

    fn exposed_ifaces<'a>(&'a self, n: &'a Node) -> impl Iterator<Item = &'a Iface> + 'a {
        n.ifaces.iter().filter(|f| self.exposed(f))
    }

    fn alloc(&mut self, machine: usize) -> NodeId {
        let c = &mut self.counters[machine];
        *c += 1;
        ((machine as u64) << OWNER_SHIFT) | *c
    }

    fn insert_node(&mut self, sim: &mut Simulator, node: Node) {
        sim.charge(owner(node.id), node.words() as isize);
        self.nodes.insert(node.id, node);
    }

    fn remove_node(&mut self, sim: &mut Simulator, id: NodeId) -> Option<Node> {
        let node = self.nodes.remove(&id)?;
        sim.charge(owner(id), -(node.words() as isize));
        Some(node)
    }

    /// Re-charges a node whose size changed in place.
    fn recharge(&mut self, sim: &mut Simulator, id: NodeId, before: usize) {
        let after = self.nodes[&id].words();
        sim.charge(owner(id), after as isize - before as isize);
    }

    fn vertex_owner(&self, v: VertexId) -> usize {
        owner_of(&v, self.machines)
    }

    fn recharge_vertex(&mut self, sim: &mut Simulator, v: VertexId) {
        let w = 2 + self.refs[v as usize].len() + self.adj[v as usize].len();
        let old = std::mem::replace(&mut self.vertex_words[v as usize], w);
        sim.charge(self.vertex_owner(v), w as isize - old as isize);
    }

    /// Ancestor of `id` at `rank`, following parent pointers.
    fn ancestor_at(&self, mut id: NodeId, rank: u32) -> Option<NodeId> {
        loop {
            let n = self.nodes.get(&id)?;
            if n.rank == rank {
                return Some(id);
            }
            if n.rank > rank {
                return None;
            }
            id = n.parent?;
        }
    }

    /// Children of `x` that contain `v`, given that `v` lies in `x`'s
    /// cluster. More than one child only when `v` is a junction.
    fn children_containing(&self, x: &Node, v: VertexId) -> Vec<u32> {
        if let Some(c) = x.junction(v) {
            return c.clone();
        }
        if let Some(f) = x.iface(v) {
            return vec![f.child];
        }
        let r = x.rank as usize;
        let refs = &self.refs[v as usize];
        if r >= 1 && refs.len() >= r {
            let want = refs[r - 1];
            if let Some(i) = x.children.iter().position(|&c| c == want) {
                return vec![i as u32];
            }
        }
        // Fallback scan; only reached if reference sets are stale.
        (0..x.children.len() as u32).filter(|&i| self.cluster_contains(x.children[i as usize], v)).take(1).collect()
    }

    fn cluster_contains(&self, id: NodeId, v: VertexId) -> bool {
        self.adj[v as usize]
            .iter()
            .any(|e| self.leaf_of.get(e).and_then(|&l| self.ancestor_at(l, self.nodes[&id].rank)) == Some(id))
    }
}

#[cfg(test)]
mod tests;
