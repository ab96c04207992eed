//! Subtree aggregates and marked-edge labelling.
//!
//! Both run a bottom-up pass computing one value per cluster and a top-down
//! pass handing each child the contribution of everything hanging below its
//! exposed vertices from outside the child.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::repair::charge_pass;
use super::{owner, Node, NodeId, TopTree, TopTreeError};
use crate::graph::{EdgeId, VertexId, WeightedEdge};
use crate::mpc::{Simulator, WordSized};

/// Commutative, associative aggregate over edges.
pub trait EdgeAggregate {
    type Value: Clone + WordSized;
    type Output;
    fn identity(&self) -> Self::Value;
    fn leaf(&self, e: &WeightedEdge) -> Self::Value;
    fn merge(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn finalize(&self, v: &Self::Value) -> Self::Output;
}

/// Abelian group of vertex labels. A cluster's value sums the labels of all
/// its vertices; siblings sharing a vertex subtract its label once per extra
/// copy.
pub trait VertexAggregate {
    type Value: Clone + WordSized;
    fn zero(&self) -> Self::Value;
    fn label(&self, v: VertexId) -> Self::Value;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn sub(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
}

/// Component of a vertex after removing marked edges: the nearest marked
/// edge above it, or the tree root when none.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PieceLabel {
    Root(VertexId),
    Edge(EdgeId),
}

trait Algebra {
    type V: Clone + WordSized;
    fn zero(&self) -> Self::V;
    fn add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn leaf(&self, e: &WeightedEdge) -> Self::V;
    /// Correction applied once per extra child holding junction `w`.
    fn overlap(&self, acc: Self::V, w: VertexId) -> Self::V;
    /// Contribution of a child cluster hanging from `w`, excluding `w`.
    fn hang(&self, total: &Self::V, w: VertexId) -> Self::V;
    /// Subtree value of `v` given what hangs strictly below it.
    fn at_vertex(&self, v: VertexId, below: Option<&Self::V>) -> Self::V;
}

struct EdgeAlg<'a, A>(&'a A);

impl<A: EdgeAggregate> Algebra for EdgeAlg<'_, A> {
    type V = A::Value;
    fn zero(&self) -> A::Value {
        self.0.identity()
    }
    fn add(&self, a: &A::Value, b: &A::Value) -> A::Value {
        self.0.merge(a, b)
    }
    fn leaf(&self, e: &WeightedEdge) -> A::Value {
        self.0.leaf(e)
    }
    fn overlap(&self, acc: A::Value, _: VertexId) -> A::Value {
        acc
    }
    fn hang(&self, total: &A::Value, _: VertexId) -> A::Value {
        total.clone()
    }
    fn at_vertex(&self, _: VertexId, below: Option<&A::Value>) -> A::Value {
        below.cloned().unwrap_or_else(|| self.0.identity())
    }
}

struct VertexAlg<'a, G>(&'a G);

impl<G: VertexAggregate> Algebra for VertexAlg<'_, G> {
    type V = G::Value;
    fn zero(&self) -> G::Value {
        self.0.zero()
    }
    fn add(&self, a: &G::Value, b: &G::Value) -> G::Value {
        self.0.add(a, b)
    }
    fn leaf(&self, e: &WeightedEdge) -> G::Value {
        self.0.add(&self.0.label(e.u), &self.0.label(e.v))
    }
    fn overlap(&self, acc: G::Value, w: VertexId) -> G::Value {
        self.0.sub(&acc, &self.0.label(w))
    }
    fn hang(&self, total: &G::Value, w: VertexId) -> G::Value {
        self.0.sub(total, &self.0.label(w))
    }
    fn at_vertex(&self, v: VertexId, below: Option<&G::Value>) -> G::Value {
        match below {
            Some(b) => self.0.add(&self.0.label(v), b),
            None => self.0.label(v),
        }
    }
}

impl TopTree {
    /// Nodes of the trees under `roots`, grouped by rank (ascending).
    fn nodes_by_rank(&self, roots: &[NodeId]) -> Vec<Vec<NodeId>> {
        let mut by_rank: Vec<Vec<NodeId>> = Vec::new();
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(id) = stack.pop() {
            let n = &self.nodes[&id];
            let r = n.rank as usize;
            if by_rank.len() <= r {
                by_rank.resize_with(r + 1, Vec::new);
            }
            by_rank[r].push(id);
            stack.extend(n.children.iter().copied());
        }
        for v in by_rank.iter_mut() {
            v.sort_unstable();
        }
        by_rank
    }

    /// Top vertex of every node under `roots`, each root hanging from the
    /// paired vertex. Uses stored values when the top is canonical.
    pub(super) fn orientation(
        &self,
        sim: &mut Simulator,
        roots: &[(NodeId, VertexId)],
    ) -> Result<HashMap<NodeId, VertexId>, TopTreeError> {
        let mut tops = HashMap::new();
        let mut frontier: Vec<(NodeId, VertexId)> = roots.to_vec();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            let mut msgs = Vec::new();
            for (id, t) in frontier {
                tops.insert(id, t);
                let n = &self.nodes[&id];
                if n.is_leaf() {
                    continue;
                }
                let ct = if t == n.root_vertex {
                    n.children.iter().map(|c| self.nodes[c].root_vertex).collect()
                } else {
                    self.child_tops(n, t)
                };
                for (i, &c) in n.children.iter().enumerate() {
                    msgs.push((owner(id), owner(c), 1));
                    next.push((c, ct[i]));
                }
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
            frontier = next;
        }
        Ok(tops)
    }

    fn cluster_values<L: Algebra>(
        &self,
        sim: &mut Simulator,
        alg: &L,
        by_rank: &[Vec<NodeId>],
    ) -> Result<HashMap<NodeId, L::V>, TopTreeError> {
        let mut val: HashMap<NodeId, L::V> = HashMap::new();
        for (r, ids) in by_rank.iter().enumerate() {
            let mut msgs = Vec::new();
            for &id in ids {
                let n = &self.nodes[&id];
                let v = if r == 0 {
                    alg.leaf(n.edge.as_ref().unwrap())
                } else {
                    let mut acc = alg.zero();
                    for c in &n.children {
                        acc = alg.add(&acc, &val[c]);
                    }
                    for (w, kids) in &n.junctions {
                        for _ in 1..kids.len() {
                            acc = alg.overlap(acc, *w);
                        }
                    }
                    acc
                };
                if let Some(p) = n.parent {
                    msgs.push((owner(id), owner(p), v.words().max(1)));
                }
                val.insert(id, v);
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
        }
        Ok(val)
    }

    /// Exposed vertices of `n` other than its top.
    fn hanging_points(&self, n: &Node, top: VertexId) -> Vec<VertexId> {
        self.exposed_ifaces(n).map(|f| f.v).filter(|&v| v != top).collect()
    }

    /// Children of `x` in breadth-first order from its top, with their tops.
    fn child_order(&self, x: &Node, tops: &HashMap<NodeId, VertexId>) -> Vec<usize> {
        let mut dist: Vec<(usize, usize)> = Vec::new();
        let top = tops[&x.id];
        // BFS layers over the junction structure.
        let mut layer: HashMap<usize, usize> = HashMap::new();
        let mut queue: Vec<usize> = Vec::new();
        for (i, c) in x.children.iter().enumerate() {
            if tops[c] == top {
                layer.insert(i, 0);
                queue.push(i);
            }
        }
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            let d = layer[&i];
            dist.push((d, i));
            let child = &self.nodes[&x.children[i]];
            for &w in &child.boundary {
                if w == tops[&child.id] {
                    continue;
                }
                if let Some(kids) = x.junction(w) {
                    for &k in kids {
                        let k = k as usize;
                        if let std::collections::hash_map::Entry::Vacant(e) = layer.entry(k) {
                            e.insert(d + 1);
                            queue.push(k);
                        }
                    }
                }
            }
        }
        queue
    }

    fn subtree_core<L: Algebra>(
        &self,
        sim: &mut Simulator,
        alg: &L,
        roots: &[(NodeId, VertexId)],
    ) -> Result<HashMap<VertexId, L::V>, TopTreeError> {
        let ids: Vec<NodeId> = roots.iter().map(|r| r.0).collect();
        let tops = self.orientation(sim, roots)?;
        let by_rank = self.nodes_by_rank(&ids);
        let val = self.cluster_values(sim, alg, &by_rank)?;
        let mut out: HashMap<NodeId, BTreeMap<VertexId, L::V>> = HashMap::new();
        let mut result: HashMap<VertexId, L::V> = HashMap::new();
        for &(r, top) in roots {
            out.insert(r, BTreeMap::new());
            result.insert(top, val[&r].clone());
        }
        for ids in by_rank.iter().rev() {
            let mut msgs = Vec::new();
            for &id in ids {
                let x = &self.nodes[&id];
                let ox = out.remove(&id).unwrap_or_default();
                if x.is_leaf() {
                    let e = x.edge.unwrap();
                    let bottom = if tops[&id] == e.u { e.v } else { e.u };
                    result.insert(bottom, alg.at_vertex(bottom, ox.get(&bottom)));
                    continue;
                }
                let order = self.child_order(x, &tops);
                let mut below: HashMap<VertexId, L::V> = HashMap::new();
                for (&w, v) in &ox {
                    below.insert(w, v.clone());
                }
                let mut totals: Vec<Option<L::V>> = vec![None; x.children.len()];
                for &i in order.iter().rev() {
                    let c = x.children[i];
                    let cn = &self.nodes[&c];
                    let mut total = val[&c].clone();
                    let mut oc = BTreeMap::new();
                    for w in self.hanging_points(cn, tops[&c]) {
                        if let Some(b) = below.get(&w) {
                            total = alg.add(&total, b);
                            oc.insert(w, b.clone());
                        }
                    }
                    let t = tops[&c];
                    let h = alg.hang(&total, t);
                    match below.get_mut(&t) {
                        Some(acc) => *acc = alg.add(acc, &h),
                        None => {
                            below.insert(t, h);
                        }
                    }
                    totals[i] = Some(total);
                    let words: usize = oc.values().map(|v| 1 + v.words()).sum();
                    msgs.push((owner(id), owner(c), words.max(1)));
                    out.insert(c, oc);
                }
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
        }
        Ok(result)
    }

    /// Aggregate of the edges below every vertex of `root`'s tree when the
    /// tree hangs from `root`. Vertices of other trees get `None`.
    pub fn subtree_aggregate<A: EdgeAggregate>(
        &self,
        sim: &mut Simulator,
        agg: &A,
        root: VertexId,
    ) -> Result<Vec<Option<A::Output>>, TopTreeError> {
        if root as usize >= self.n() {
            return Err(TopTreeError::VertexOutOfRange(root));
        }
        let mut res: Vec<Option<A::Output>> = (0..self.n()).map(|_| None).collect();
        match self.root_of(root) {
            None => res[root as usize] = Some(agg.finalize(&agg.identity())),
            Some(r) => {
                let vals = self.subtree_core(sim, &EdgeAlg(agg), &[(r, root)])?;
                for (v, x) in vals {
                    res[v as usize] = Some(agg.finalize(&x));
                }
            }
        }
        Ok(res)
    }

    /// Sum of vertex labels over the subtree of every vertex, each tree
    /// hanging from its canonical root.
    pub fn subtree_vertex_sums<G: VertexAggregate>(
        &self,
        sim: &mut Simulator,
        agg: &G,
    ) -> Result<Vec<G::Value>, TopTreeError> {
        let roots: Vec<(NodeId, VertexId)> = self.roots.iter().map(|&r| (r, self.nodes[&r].root_vertex)).collect();
        let vals = self.subtree_core(sim, &VertexAlg(agg), &roots)?;
        Ok((0..self.n() as VertexId).map(|v| vals.get(&v).cloned().unwrap_or_else(|| agg.label(v))).collect())
    }

    /// Labels every vertex by the piece of the forest containing it once
    /// `marked` edges are removed.
    pub fn label_by_marked(
        &self,
        sim: &mut Simulator,
        marked: &HashSet<EdgeId>,
    ) -> Result<Vec<PieceLabel>, TopTreeError> {
        let roots: Vec<NodeId> = self.roots.iter().copied().collect();
        let by_rank = self.nodes_by_rank(&roots);
        // inner[x][w]: None when w reaches x's top without a marked edge,
        // otherwise the first marked edge above w inside x.
        let mut inner: HashMap<NodeId, HashMap<VertexId, Option<EdgeId>>> = HashMap::new();
        for (r, ids) in by_rank.iter().enumerate() {
            let mut msgs = Vec::new();
            for &id in ids {
                let x = &self.nodes[&id];
                let map = if r == 0 {
                    let e = x.edge.unwrap();
                    let bottom = if x.root_vertex == e.u { e.v } else { e.u };
                    let lab = marked.contains(&e.eid).then_some(e.eid);
                    HashMap::from([(bottom, lab)])
                } else {
                    self.walk_labels(x, &inner, None).0
                };
                let exposed: HashMap<VertexId, Option<EdgeId>> = self
                    .hanging_points(x, x.root_vertex)
                    .into_iter()
                    .filter_map(|w| map.get(&w).map(|l| (w, *l)))
                    .collect();
                if let Some(p) = x.parent {
                    msgs.push((owner(id), owner(p), 1 + 2 * exposed.len()));
                }
                inner.insert(id, if r == 0 { map } else { exposed });
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
        }
        let mut labels: Vec<PieceLabel> = (0..self.n() as VertexId).map(PieceLabel::Root).collect();
        let mut top_label: HashMap<NodeId, PieceLabel> = HashMap::new();
        for &r in &roots {
            let n = &self.nodes[&r];
            top_label.insert(r, PieceLabel::Root(n.root_vertex));
            labels[n.root_vertex as usize] = PieceLabel::Root(n.root_vertex);
        }
        for ids in by_rank.iter().rev() {
            let mut msgs = Vec::new();
            for &id in ids {
                let x = &self.nodes[&id];
                let lx = top_label[&id];
                if x.is_leaf() {
                    let e = x.edge.unwrap();
                    let bottom = if x.root_vertex == e.u { e.v } else { e.u };
                    labels[bottom as usize] = if marked.contains(&e.eid) { PieceLabel::Edge(e.eid) } else { lx };
                    continue;
                }
                let (_, child_top) = self.walk_labels(x, &inner, Some(lx));
                for (i, &c) in x.children.iter().enumerate() {
                    msgs.push((owner(id), owner(c), 1));
                    top_label.insert(c, child_top[i].unwrap());
                }
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
        }
        Ok(labels)
    }

    /// Runs the reachability walk through `x`'s children from its top.
    /// Returns the inner map of every vertex seen and, when `lx` is given,
    /// the resolved label of each child's top.
    #[allow(clippy::type_complexity)]
    fn walk_labels(
        &self,
        x: &Node,
        inner: &HashMap<NodeId, HashMap<VertexId, Option<EdgeId>>>,
        lx: Option<PieceLabel>,
    ) -> (HashMap<VertexId, Option<EdgeId>>, Vec<Option<PieceLabel>>) {
        let mut tops: HashMap<NodeId, VertexId> = HashMap::new();
        tops.insert(x.id, x.root_vertex);
        for c in &x.children {
            tops.insert(*c, self.nodes[c].root_vertex);
        }
        let order = self.child_order(x, &tops);
        let mut state: HashMap<VertexId, Option<EdgeId>> = HashMap::new();
        state.insert(x.root_vertex, None);
        let mut child_top = vec![None; x.children.len()];
        for &i in &order {
            let c = x.children[i];
            let t = tops[&c];
            let st = *state.get(&t).expect("parent vertex resolved first");
            if let Some(l) = lx {
                child_top[i] = Some(match st {
                    None => l,
                    Some(e) => PieceLabel::Edge(e),
                });
            }
            if let Some(m) = inner.get(&c) {
                for (&w, &lab) in m {
                    let s = match lab {
                        None => st,
                        Some(e) => Some(e),
                    };
                    state.insert(w, s);
                }
            }
        }
        (state, child_top)
    }
}

impl WordSized for PieceLabel {
    fn words(&self) -> usize {
        1
    }
}

impl std::fmt::Display for PieceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PieceLabel::Root(r) => write!(f, "root:{r}"),
            PieceLabel::Edge(e) => write!(f, "{e}"),
        }
    }
}

impl TopTree {
    /// Every forest edge with its endpoint farther from the canonical root.
    pub fn parent_edges(&self) -> Vec<(VertexId, WeightedEdge)> {
        let mut out: Vec<(VertexId, WeightedEdge)> = self
            .leaf_of
            .values()
            .map(|id| {
                let n = &self.nodes[id];
                let e = n.edge.unwrap();
                (if n.root_vertex == e.u { e.v } else { e.u }, e)
            })
            .collect();
        out.sort_by_key(|(v, _)| *v);
        out
    }
}
