//! Sequential reference algorithms used to check the distributed ones.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::graph::{forest_adjacency, EdgeId, Graph, VertexId, WeightedEdge};

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Kruskal over the (weight, eid) order.
pub fn kruskal(g: &Graph) -> BTreeSet<EdgeId> {
    let mut edges: Vec<WeightedEdge> = g.edges().collect();
    edges.sort_by_key(|e| e.key());
    let mut dsu = Dsu::new(g.n());
    edges.into_iter().filter(|e| dsu.union(e.u as usize, e.v as usize)).map(|e| e.eid).collect()
}

/// Prim from every unvisited vertex; must agree with [`kruskal`].
pub fn prim(g: &Graph) -> BTreeSet<EdgeId> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut heap = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<_>, v: VertexId| {
            for u in g.neighbors(v) {
                let e = g.edge(crate::graph::canonical_eid(u, v)).unwrap();
                heap.push(Reverse((e.key(), u)));
            }
        };
        push(&mut heap, s as VertexId);
        while let Some(Reverse(((_, eid), u))) = heap.pop() {
            if seen[u as usize] {
                continue;
            }
            seen[u as usize] = true;
            out.insert(eid);
            push(&mut heap, u);
        }
    }
    out
}

/// Bridges via iterative DFS low-link.
pub fn bridges(g: &Graph) -> BTreeSet<EdgeId> {
    let n = g.n();
    let adj: Vec<Vec<VertexId>> = (0..n).map(|v| g.neighbors(v as VertexId).collect()).collect();
    let mut tin = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let mut out = BTreeSet::new();
    for s in 0..n {
        if tin[s] != usize::MAX {
            continue;
        }
        // (vertex, parent, next neighbour index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(s, usize::MAX, 0)];
        tin[s] = timer;
        low[s] = timer;
        timer += 1;
        while let Some(&mut (v, p, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let u = adj[v][*i] as usize;
                *i += 1;
                if u == p {
                    continue;
                }
                if tin[u] == usize::MAX {
                    tin[u] = timer;
                    low[u] = timer;
                    timer += 1;
                    stack.push((u, v, 0));
                } else {
                    low[v] = low[v].min(tin[u]);
                }
            } else {
                stack.pop();
                if p != usize::MAX {
                    low[p] = low[p].min(low[v]);
                    if low[v] > tin[p] {
                        out.insert(crate::graph::canonical_eid(v as VertexId, p as VertexId));
                    }
                }
            }
        }
    }
    out
}

/// Component index of every vertex after removing `cut` edges. Components
/// are numbered by their smallest vertex.
pub fn components_without(g: &Graph, cut: &BTreeSet<EdgeId>) -> Vec<usize> {
    let mut dsu = Dsu::new(g.n());
    for e in g.edges() {
        if !cut.contains(&e.eid) {
            dsu.union(e.u as usize, e.v as usize);
        }
    }
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    (0..g.n())
        .map(|v| {
            let r = dsu.find(v);
            *first.entry(r).or_insert(v)
        })
        .collect()
}

/// 2-edge-connected component of every vertex (smallest member as id).
pub fn two_edge_components(g: &Graph) -> Vec<usize> {
    components_without(g, &bridges(g))
}

/// Heaviest edge on the forest path between `u` and `v`, `None` when equal
/// or disconnected.
pub fn path_max(n: usize, forest: &[WeightedEdge], u: VertexId, v: VertexId) -> Option<WeightedEdge> {
    path_edges(n, forest, u, v)?.into_iter().max_by_key(|e| e.key())
}

/// Edges on the forest path from `u` to `v` in order, `None` if disconnected.
pub fn path_edges(n: usize, forest: &[WeightedEdge], u: VertexId, v: VertexId) -> Option<Vec<WeightedEdge>> {
    let adj = forest_adjacency(n, forest);
    let mut prev: Vec<Option<(VertexId, WeightedEdge)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut stack = vec![u];
    seen[u as usize] = true;
    while let Some(x) = stack.pop() {
        if x == v {
            break;
        }
        for &(y, e) in &adj[x as usize] {
            if !seen[y as usize] {
                seen[y as usize] = true;
                prev[y as usize] = Some((x, e));
                stack.push(y);
            }
        }
    }
    if !seen[v as usize] {
        return None;
    }
    let mut path = Vec::new();
    let mut x = v;
    while x != u {
        let (p, e) = prev[x as usize].unwrap();
        path.push(e);
        x = p;
    }
    path.reverse();
    Some(path)
}

pub fn is_matching(g: &Graph, m: &BTreeSet<EdgeId>) -> bool {
    let mut used = BTreeSet::new();
    m.iter().all(|&e| {
        let (u, v) = e.endpoints();
        g.contains(e) && used.insert(u) && used.insert(v)
    })
}

pub fn is_maximal_matching(g: &Graph, m: &BTreeSet<EdgeId>) -> bool {
    if !is_matching(g, m) {
        return false;
    }
    let mut used = vec![false; g.n()];
    for e in m {
        let (u, v) = e.endpoints();
        used[u as usize] = true;
        used[v as usize] = true;
    }
    g.edges().all(|e| used[e.u as usize] || used[e.v as usize])
}
