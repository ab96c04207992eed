//! Full invariant scan and the text dump.
//!
//! Dump lines read `id rank parent root_vertex [children] [boundary]`, with
//! `-` for a missing parent.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{NodeId, TopTree};
use crate::graph::{EdgeId, VertexId};
use crate::oracles::Dsu;

impl TopTree {
    /// Checks every structural invariant; returns all violations found.
    pub fn check_invariants(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let p = &self.params;
        let mut edges_below: HashMap<NodeId, Vec<EdgeId>> = HashMap::new();
        // Bottom-up edge sets by rank.
        let mut by_rank: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for (&id, n) in &self.nodes {
            by_rank.entry(n.rank).or_default().push(id);
        }
        for (&rank, ids) in &by_rank {
            for &id in ids {
                let n = &self.nodes[&id];
                if rank == 0 {
                    match n.edge {
                        Some(e) => {
                            edges_below.insert(id, vec![e.eid]);
                            if self.leaf_of.get(&e.eid) != Some(&id) {
                                errs.push(format!("leaf {id} not registered for {}", e.eid));
                            }
                            if !self.edges.contains_key(&e.eid) {
                                errs.push(format!("leaf {id} holds removed edge {}", e.eid));
                            }
                        }
                        None => errs.push(format!("leaf {id} has no edge")),
                    }
                    if !n.children.is_empty() {
                        errs.push(format!("leaf {id} has children"));
                    }
                    continue;
                }
                let mut all = Vec::new();
                for &c in &n.children {
                    match self.nodes.get(&c) {
                        None => errs.push(format!("node {id} has missing child {c}")),
                        Some(cn) => {
                            if cn.rank + 1 != rank {
                                errs.push(format!("node {id} rank {rank} has child {c} of rank {}", cn.rank));
                            }
                            if cn.parent != Some(id) {
                                errs.push(format!("child {c} of {id} points to {:?}", cn.parent));
                            }
                            all.extend(edges_below.get(&c).cloned().unwrap_or_default());
                        }
                    }
                }
                let k = n.children.len();
                if n.parent.is_some() {
                    if k < p.b || k > p.max_arity {
                        errs.push(format!("node {id} arity {k} outside [{}, {}]", p.b, p.max_arity));
                    }
                } else if k == 0 || k > p.max_root_arity || (k == 1 && rank > 1) {
                    errs.push(format!("root {id} rank {rank} arity {k}"));
                }
                if n.weight != all.len() {
                    errs.push(format!("node {id} weight {} but {} edges", n.weight, all.len()));
                }
                edges_below.insert(id, all);
            }
        }
        let mut covered: BTreeSet<EdgeId> = BTreeSet::new();
        for &r in &self.roots {
            let Some(rn) = self.nodes.get(&r) else {
                errs.push(format!("root {r} missing"));
                continue;
            };
            if rn.parent.is_some() {
                errs.push(format!("root {r} has a parent"));
            }
            if rn.rank > p.max_depth {
                errs.push(format!("root {r} depth {} exceeds {}", rn.rank, p.max_depth));
            }
            for e in &edges_below[&r] {
                if !covered.insert(*e) {
                    errs.push(format!("edge {e} covered twice"));
                }
            }
        }
        for (id, n) in &self.nodes {
            if n.parent.is_none() && !self.roots.contains(id) {
                errs.push(format!("parentless node {id} is not a root"));
            }
        }
        if covered.len() != self.edges.len() {
            errs.push(format!("{} edges covered, forest has {}", covered.len(), self.edges.len()));
        }
        // Per-node cluster checks: connectivity, interfaces, junctions.
        let mut dsu_scratch: HashMap<VertexId, usize> = HashMap::new();
        for (&id, n) in &self.nodes {
            let es = &edges_below[&id];
            let mut deg: BTreeMap<VertexId, u32> = BTreeMap::new();
            dsu_scratch.clear();
            for e in es {
                let (u, v) = e.endpoints();
                for x in [u, v] {
                    *deg.entry(x).or_default() += 1;
                    let l = dsu_scratch.len();
                    dsu_scratch.entry(x).or_insert(l);
                }
            }
            let mut dsu = Dsu::new(dsu_scratch.len());
            for e in es {
                let (u, v) = e.endpoints();
                dsu.union(dsu_scratch[&u], dsu_scratch[&v]);
            }
            let reps: BTreeSet<usize> = (0..dsu_scratch.len()).map(|i| dsu.find(i)).collect();
            if reps.len() > 1 {
                errs.push(format!("cluster {id} is disconnected"));
            }
            if let Some(&mv) = deg.keys().next() {
                if mv != n.min_vertex {
                    errs.push(format!("cluster {id} min vertex {} expected {mv}", n.min_vertex));
                }
            }
            for (&v, &d) in &deg {
                let exposed = (d as usize) < self.adj[v as usize].len();
                match n.iface(v) {
                    Some(f) => {
                        if f.deg != d {
                            errs.push(format!("cluster {id} iface {v} deg {} expected {d}", f.deg));
                        }
                    }
                    None if exposed => errs.push(format!("cluster {id} misses exposed vertex {v}")),
                    None => {}
                }
            }
            if n.rank == 0 {
                continue;
            }
            let mut holders: BTreeMap<VertexId, Vec<u32>> = BTreeMap::new();
            for (i, c) in n.children.iter().enumerate() {
                let mut vs: BTreeSet<VertexId> = BTreeSet::new();
                for e in edges_below.get(c).into_iter().flatten() {
                    let (u, v) = e.endpoints();
                    vs.insert(u);
                    vs.insert(v);
                }
                for v in vs {
                    holders.entry(v).or_default().push(i as u32);
                }
            }
            let junctions: BTreeMap<VertexId, Vec<u32>> = holders.into_iter().filter(|(_, h)| h.len() >= 2).collect();
            let stored: BTreeMap<VertexId, Vec<u32>> = n.junctions.iter().cloned().collect();
            if junctions != stored {
                errs.push(format!("node {id} junctions differ"));
            }
            if junctions.len() > n.children.len().saturating_sub(1) {
                errs.push(format!("node {id} has {} junctions for {} children", junctions.len(), n.children.len()));
            }
            for (i, c) in n.children.iter().enumerate() {
                let want: BTreeSet<VertexId> =
                    junctions.iter().filter(|(_, h)| h.contains(&(i as u32))).map(|(v, _)| *v).collect();
                let got: BTreeSet<VertexId> = self.nodes[c].boundary.iter().copied().collect();
                if want != got {
                    errs.push(format!("child {c} of {id} boundary differs"));
                }
                if got.len() + 1 > n.children.len().max(1) && n.children.len() > 1 {
                    errs.push(format!("child {c} boundary larger than sibling count"));
                }
            }
        }
        // Root vertices: topmost with respect to the canonical root.
        for &r in &self.roots {
            let Some(rn) = self.nodes.get(&r) else { continue };
            let root_v = rn.min_vertex;
            let depth = self.vertex_depths(root_v);
            let mut stack = vec![r];
            while let Some(id) = stack.pop() {
                let n = &self.nodes[&id];
                let top = edges_below[&id]
                    .iter()
                    .flat_map(|e| {
                        let (u, v) = e.endpoints();
                        [u, v]
                    })
                    .min_by_key(|v| (depth.get(v).copied().unwrap_or(usize::MAX), *v))
                    .unwrap();
                if top != n.root_vertex {
                    errs.push(format!("node {id} root vertex {} expected {top}", n.root_vertex));
                }
                stack.extend(n.children.iter().copied());
            }
        }
        // Reference sets.
        for v in 0..self.n() as VertexId {
            let refs = &self.refs[v as usize];
            if self.adj[v as usize].is_empty() {
                if !refs.is_empty() {
                    errs.push(format!("isolated vertex {v} has references"));
                }
                continue;
            }
            for (r, id) in refs.iter().enumerate() {
                match self.nodes.get(id) {
                    None => errs.push(format!("vertex {v} references missing node {id}")),
                    Some(n) => {
                        if n.rank as usize != r {
                            errs.push(format!("vertex {v} reference at rank {r} has rank {}", n.rank));
                        }
                        let holds = edges_below[id].iter().any(|e| {
                            let (a, b) = e.endpoints();
                            a == v || b == v
                        });
                        if !holds {
                            errs.push(format!("vertex {v} referenced node {id} does not contain it"));
                        }
                    }
                }
            }
            match refs.last() {
                Some(top) if self.roots.contains(top) => {}
                _ => errs.push(format!("vertex {v} reference set does not reach a root")),
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn vertex_depths(&self, root: VertexId) -> HashMap<VertexId, usize> {
        let mut depth = HashMap::new();
        depth.insert(root, 0);
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            let d = depth[&x];
            for e in &self.adj[x as usize] {
                let y = self.edges[e].other(x);
                if let std::collections::hash_map::Entry::Vacant(slot) = depth.entry(y) {
                    slot.insert(d + 1);
                    stack.push(y);
                }
            }
        }
        depth
    }

    pub fn dump(&self) -> String {
        let mut ids: Vec<&NodeId> = self.nodes.keys().collect();
        ids.sort_by_key(|id| (std::cmp::Reverse(self.nodes[id].rank), **id));
        let mut s = String::new();
        for id in ids {
            let n = &self.nodes[id];
            let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
            let kids: Vec<String> = n.children.iter().map(|c| c.to_string()).collect();
            let bnd: Vec<String> = n.boundary.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                s,
                "{} {} {} {} [{}] [{}]",
                n.id,
                n.rank,
                parent,
                n.root_vertex,
                kids.join(","),
                bnd.join(",")
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DumpLine {
    pub id: NodeId,
    pub rank: u32,
    pub parent: Option<NodeId>,
    pub root_vertex: VertexId,
    pub children: Vec<NodeId>,
    pub boundary: Vec<VertexId>,
}

fn list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    let inner = s.strip_prefix('[')?.strip_suffix(']')?;
    if inner.is_empty() {
        return Some(Vec::new());
    }
    inner.split(',').map(|x| x.parse().ok()).collect()
}

/// Parses a dump and checks the parts of the structure visible in it:
/// parent/child agreement, ranks, arity bounds and boundary sizes.
pub fn parse_dump(text: &str, b: usize, max_arity: usize) -> Result<Vec<DumpLine>, Vec<String>> {
    let mut lines = Vec::new();
    let mut errs = Vec::new();
    for (i, l) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let t: Vec<&str> = l.split_whitespace().collect();
        let parsed = (|| {
            if t.len() != 6 {
                return None;
            }
            Some(DumpLine {
                id: t[0].parse().ok()?,
                rank: t[1].parse().ok()?,
                parent: if t[2] == "-" { None } else { Some(t[2].parse().ok()?) },
                root_vertex: t[3].parse().ok()?,
                children: list(t[4])?,
                boundary: list(t[5])?,
            })
        })();
        match parsed {
            Some(d) => lines.push(d),
            None => errs.push(format!("line {}: malformed", i + 1)),
        }
    }
    let by_id: HashMap<NodeId, &DumpLine> = lines.iter().map(|d| (d.id, d)).collect();
    for d in &lines {
        for c in &d.children {
            match by_id.get(c) {
                None => errs.push(format!("node {} lists unknown child {c}", d.id)),
                Some(cd) => {
                    if cd.parent != Some(d.id) {
                        errs.push(format!("child {c} does not point back to {}", d.id));
                    }
                    if cd.rank + 1 != d.rank {
                        errs.push(format!("child {c} rank mismatch"));
                    }
                }
            }
        }
        let k = d.children.len();
        if d.rank > 0 && d.parent.is_some() && (k < b || k > max_arity) {
            errs.push(format!("node {} arity {k}", d.id));
        }
        if d.rank == 0 && k > 0 {
            errs.push(format!("leaf {} has children", d.id));
        }
        if let Some(p) = d.parent.and_then(|p| by_id.get(&p)) {
            if d.boundary.len() + 1 > p.children.len().max(1) && p.children.len() > 1 {
                errs.push(format!("node {} boundary exceeds sibling bound", d.id));
            }
        }
    }
    if errs.is_empty() {
        Ok(lines)
    } else {
        Err(errs)
    }
}
