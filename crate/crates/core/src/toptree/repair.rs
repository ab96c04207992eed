//! Rank-synchronous structural repair shared by link, cut and construction.
//!
//! Ancestors of removed leaves are dissolved. At each rank the parentless
//! ("loose") nodes are split into regions connected through shared vertices.
//! A region touching an untouched part of the tree but smaller than `b`
//! dissolves one adjacent parent and grows. Regions are then peeled into
//! groups of `[b, 4b]` that become the loose nodes of the next rank. A region
//! that covers its whole tree becomes, or is placed under, the tree root.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand_chacha::ChaCha8Rng;

use super::{owner, peel::peel, Iface, Node, NodeId, TopTree, TopTreeError};
use crate::constants::REPAIR_RETRIES;
use crate::graph::{EdgeId, VertexId, WeightedEdge};
use crate::mpc::{owner_of, Simulator, WordSized};
use crate::oracles::Dsu;

/// Message of a given size whose content stays in the shared node arena.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Packet(pub usize);

impl WordSized for Packet {
    fn words(&self) -> usize {
        self.0
    }
}

/// One superstep carrying `(src machine, dst machine, words)` transfers.
pub(crate) fn charge_pass(
    sim: &mut Simulator,
    msgs: impl IntoIterator<Item = (usize, usize, usize)>,
) -> Result<(), TopTreeError> {
    let mut out = sim.empty_outboxes::<Packet>();
    for (s, d, w) in msgs {
        out[s].push((d, Packet(w)));
    }
    sim.exchange(out)?;
    Ok(())
}

fn doubling_rounds(k: usize) -> u32 {
    usize::BITS - k.saturating_sub(1).leading_zeros()
}

pub(super) fn run(
    t: &mut TopTree,
    sim: &mut Simulator,
    cut: &[EdgeId],
    link: &[WeightedEdge],
) -> Result<(), TopTreeError> {
    validate(t, cut, link)?;
    if cut.is_empty() && link.is_empty() {
        return Ok(());
    }
    if !cut.is_empty() && !link.is_empty() {
        run(t, sim, cut, &[])?;
        return run(t, sim, &[], link);
    }
    let mut r = Repair { t, loose: Vec::new(), retries: 0 };
    r.start(sim, cut, link);
    r.levels(sim)?;
    let touched: Vec<VertexId> = cut
        .iter()
        .flat_map(|e| {
            let (u, v) = e.endpoints();
            [u, v]
        })
        .chain(link.iter().flat_map(|e| [e.u, e.v]))
        .collect();
    r.t.refresh(sim, &touched)?;
    if r.retries > 0 {
        sim.bump("toptree_restarts", r.retries as u64);
    }
    Ok(())
}

fn validate(t: &TopTree, cut: &[EdgeId], link: &[WeightedEdge]) -> Result<(), TopTreeError> {
    let n = t.n();
    let mut cutset = HashSet::new();
    for &e in cut {
        if !t.edges.contains_key(&e) || !cutset.insert(e) {
            return Err(TopTreeError::MissingEdge(e));
        }
    }
    let mut seen = HashSet::new();
    for e in link {
        for x in [e.u, e.v] {
            if x as usize >= n {
                return Err(TopTreeError::VertexOutOfRange(x));
            }
        }
        if e.u == e.v {
            return Err(TopTreeError::WouldCreateCycle(e.eid));
        }
        if (t.edges.contains_key(&e.eid) && !cutset.contains(&e.eid)) || !seen.insert(e.eid) {
            return Err(TopTreeError::DuplicateEdge(e.eid));
        }
    }
    if link.is_empty() {
        return Ok(());
    }
    let mut dsu = Dsu::new(n);
    for e in t.edges.values() {
        if !cutset.contains(&e.eid) {
            dsu.union(e.u as usize, e.v as usize);
        }
    }
    for e in link {
        if !dsu.union(e.u as usize, e.v as usize) {
            return Err(TopTreeError::WouldCreateCycle(e.eid));
        }
    }
    Ok(())
}

struct Repair<'a> {
    t: &'a mut TopTree,
    loose: Vec<BTreeSet<NodeId>>,
    retries: usize,
}

enum LevelOutcome {
    Done,
    Hub(Vec<NodeId>),
}

struct Region {
    units: Vec<NodeId>,
    /// Exposed vertices of each unit shared with another unit of the region.
    shared: Vec<Vec<VertexId>>,
    open: Vec<VertexId>,
}

impl<'a> Repair<'a> {
    fn loose_at(&mut self, rank: u32) -> &mut BTreeSet<NodeId> {
        let r = rank as usize;
        if self.loose.len() <= r {
            self.loose.resize_with(r + 1, BTreeSet::new);
        }
        &mut self.loose[r]
    }

    fn start(&mut self, sim: &mut Simulator, cut: &[EdgeId], link: &[WeightedEdge]) {
        let t = &mut *self.t;
        // Vertices gaining an edge become exposed in the clusters where they
        // were interior; those clusters lie on the vertex's reference chain.
        let mut gain: BTreeSet<VertexId> = BTreeSet::new();
        for e in link {
            gain.insert(e.u);
            gain.insert(e.v);
        }
        for &x in &gain {
            let deg = t.adj[x as usize].len() as u32;
            if deg == 0 {
                continue;
            }
            let chain = t.refs[x as usize].clone();
            for r in 0..chain.len() {
                let id = chain[r];
                let Some(node) = t.nodes.get(&id) else { continue };
                if node.iface(x).is_some() {
                    continue;
                }
                let before = node.words();
                let child = match r {
                    0 => 0,
                    _ => node.children.iter().position(|&c| c == chain[r - 1]).unwrap_or(0) as u32,
                };
                t.nodes.get_mut(&id).unwrap().ifaces.push(Iface { v: x, deg, child });
                t.recharge(sim, id, before);
            }
        }
        let linked_roots: Vec<NodeId> = gain.iter().filter_map(|&x| t.refs[x as usize].last().copied()).collect();
        for &e in cut {
            let we = t.edges.remove(&e).unwrap();
            t.adj[we.u as usize].remove(&e);
            t.adj[we.v as usize].remove(&e);
        }
        for e in link {
            t.edges.insert(e.eid, *e);
            t.adj[e.u as usize].insert(e.eid);
            t.adj[e.v as usize].insert(e.eid);
        }
        for &e in cut {
            let leaf = self.t.leaf_of.remove(&e).unwrap();
            let node = self.t.remove_node(sim, leaf).unwrap();
            self.t.roots.remove(&leaf);
            if let Some(l) = self.loose.first_mut() {
                l.remove(&leaf);
            }
            if let Some(p) = node.parent {
                self.dissolve(sim, p);
            }
        }
        for e in link {
            let m = owner_of(&e.eid, self.t.machines);
            let id = self.t.alloc(m);
            let leaf = Node {
                id,
                rank: 0,
                parent: None,
                children: Vec::new(),
                edge: Some(*e),
                weight: 1,
                min_vertex: e.u.min(e.v),
                ifaces: vec![Iface { v: e.u, deg: 1, child: 0 }, Iface { v: e.v, deg: 1, child: 0 }],
                boundary: Vec::new(),
                junctions: Vec::new(),
                root_vertex: e.u.min(e.v),
            };
            self.t.insert_node(sim, leaf);
            self.t.leaf_of.insert(e.eid, id);
            self.loose_at(0).insert(id);
        }
        // A root may be narrower than `b` or wider than `max_arity`; it must
        // not become an inner node.
        for r in linked_roots {
            let Some(node) = self.t.nodes.get(&r).filter(|n| n.parent.is_none()) else { continue };
            let k = node.children.len();
            let p = &self.t.params;
            let (rank, misfit) = (node.rank, node.rank > 0 && (k < p.b || k > p.max_arity));
            self.t.roots.remove(&r);
            if misfit {
                self.dissolve(sim, r);
            } else {
                self.loose_at(rank).insert(r);
            }
        }
    }

    /// Removes `id` and, recursively, its ancestors; children become loose.
    fn dissolve(&mut self, sim: &mut Simulator, id: NodeId) {
        let mut next = Some(id);
        while let Some(id) = next {
            let Some(node) = self.t.remove_node(sim, id) else { return };
            self.t.roots.remove(&id);
            if let Some(l) = self.loose.get_mut(node.rank as usize) {
                l.remove(&id);
            }
            for &c in &node.children {
                if let Some(cn) = self.t.nodes.get_mut(&c) {
                    cn.parent = None;
                    let rank = cn.rank;
                    self.loose_at(rank).insert(c);
                }
            }
            next = node.parent;
        }
    }

    fn levels(&mut self, sim: &mut Simulator) -> Result<(), TopTreeError> {
        let mut level: u32 = 0;
        loop {
            let top = self.loose.iter().rposition(|s| !s.is_empty());
            let Some(top) = top else { break };
            if level as usize > top {
                break;
            }
            if self.loose[level as usize].is_empty() {
                level += 1;
                continue;
            }
            match self.level(sim, level)? {
                LevelOutcome::Done => level += 1,
                LevelOutcome::Hub(units) => {
                    self.retries += 1;
                    if level == 0 || self.retries > REPAIR_RETRIES {
                        return Err(TopTreeError::RebalanceFailed { rank: level, retries: self.retries });
                    }
                    for u in units {
                        let node = self.t.remove_node(sim, u).expect("hub unit exists");
                        self.t.roots.remove(&u);
                        self.loose[level as usize].remove(&u);
                        for &c in &node.children {
                            if let Some(cn) = self.t.nodes.get_mut(&c) {
                                cn.parent = None;
                                self.loose[(level - 1) as usize].insert(c);
                            }
                        }
                    }
                    level -= 1;
                }
            }
        }
        Ok(())
    }

    fn regions(&self, level: u32) -> Vec<Region> {
        let t = &*self.t;
        let units: Vec<NodeId> = self.loose[level as usize].iter().copied().collect();
        let mut at: BTreeMap<VertexId, Vec<(usize, u32)>> = BTreeMap::new();
        for (i, u) in units.iter().enumerate() {
            let node = &t.nodes[u];
            for f in t.exposed_ifaces(node) {
                at.entry(f.v).or_default().push((i, f.deg));
            }
        }
        let mut dsu = Dsu::new(units.len());
        for list in at.values() {
            for w in list.windows(2) {
                dsu.union(w[0].0, w[1].0);
            }
        }
        let mut by_root: BTreeMap<usize, usize> = BTreeMap::new();
        let mut regions: Vec<Region> = Vec::new();
        let mut region_of = vec![0usize; units.len()];
        for i in 0..units.len() {
            let r = dsu.find(i);
            let g = *by_root.entry(r).or_insert_with(|| {
                regions.push(Region { units: Vec::new(), shared: Vec::new(), open: Vec::new() });
                regions.len() - 1
            });
            region_of[i] = g;
            regions[g].units.push(units[i]);
            regions[g].shared.push(Vec::new());
        }
        let pos: Vec<usize> = {
            let mut counts = vec![0usize; regions.len()];
            (0..units.len())
                .map(|i| {
                    let g = region_of[i];
                    counts[g] += 1;
                    counts[g] - 1
                })
                .collect()
        };
        for (&v, list) in &at {
            let g = region_of[list[0].0];
            let total: u32 = list.iter().map(|x| x.1).sum();
            if (total as usize) < t.adj[v as usize].len() {
                regions[g].open.push(v);
            }
            if list.len() >= 2 {
                for &(i, _) in list {
                    regions[g].shared[pos[i]].push(v);
                }
            }
        }
        regions
    }

    /// Charges region discovery as label propagation between units and the
    /// owners of their exposed vertices, doubling each round.
    fn charge_discovery(&self, sim: &mut Simulator, level: u32, regions: &[Region]) -> Result<(), TopTreeError> {
        let t = &*self.t;
        let mut up = Vec::new();
        let mut down = Vec::new();
        for &u in &self.loose[level as usize] {
            for f in t.exposed_ifaces(&t.nodes[&u]) {
                let vo = t.vertex_owner(f.v);
                up.push((owner(u), vo, 3));
                down.push((vo, owner(u), 2));
            }
        }
        charge_pass(sim, up.clone())?;
        let widest = regions.iter().map(|r| r.units.len()).max().unwrap_or(1);
        for _ in 0..doubling_rounds(widest) {
            charge_pass(sim, down.clone())?;
            charge_pass(sim, up.iter().map(|&(a, b, _)| (a, b, 2)))?;
        }
        Ok(())
    }

    fn level(&mut self, sim: &mut Simulator, level: u32) -> Result<LevelOutcome, TopTreeError> {
        let b = self.t.params.b;
        let cap = self.t.params.max_arity;
        let regions = loop {
            let regions = self.regions(level);
            self.charge_discovery(sim, level, &regions)?;
            let mut grew = false;
            let mut requests = Vec::new();
            for reg in &regions {
                if reg.open.is_empty() || reg.units.len() >= b {
                    continue;
                }
                let members: HashSet<NodeId> = reg.units.iter().copied().collect();
                let v = reg.open[0];
                let neighbour = self.t.adj[v as usize]
                    .iter()
                    .filter_map(|e| self.t.ancestor_at(self.t.leaf_of[e], level))
                    .find(|a| !members.contains(a))
                    .expect("open region has a settled neighbour");
                grew = true;
                // Freed earlier in this pass: the next discovery merges it.
                let Some(parent) = self.t.nodes[&neighbour].parent else { continue };
                requests.push((owner(reg.units[0]), owner(parent), 1));
                self.dissolve(sim, parent);
            }
            if !grew {
                break regions;
            }
            charge_pass(sim, requests)?;
        };
        enum Plan {
            Root(NodeId),
            Group(Vec<NodeId>, bool),
        }
        let mut plans = Vec::new();
        for reg in &regions {
            let k = reg.units.len();
            if reg.open.is_empty() && (k == 1 && level > 0) {
                plans.push(Plan::Root(reg.units[0]));
                continue;
            }
            if reg.open.is_empty() && k <= cap {
                plans.push(Plan::Group(reg.units.clone(), true));
                continue;
            }
            let coordinator = owner(reg.units[0]);
            let groups = if self.retries == 0 {
                peel::<ChaCha8Rng>(&reg.shared, b, cap, None)
            } else {
                peel(&reg.shared, b, cap, Some(sim.rng(coordinator)))
            };
            match groups {
                Ok(groups) => {
                    for g in groups {
                        plans.push(Plan::Group(g.into_iter().map(|i| reg.units[i]).collect(), false));
                    }
                }
                Err(_) if reg.open.is_empty() && k <= self.t.params.max_root_arity => {
                    plans.push(Plan::Group(reg.units.clone(), true));
                }
                Err(hub) => {
                    return Ok(LevelOutcome::Hub(hub.into_iter().map(|i| reg.units[i]).collect()));
                }
            }
        }
        // Peeling is a contraction of each region's unit/vertex tree.
        let peeled = regions.iter().filter(|r| !r.open.is_empty() || r.units.len() > cap).map(|r| r.units.len());
        if let Some(widest) = peeled.max() {
            let mut msgs = Vec::new();
            for &u in &self.loose[level as usize] {
                for f in self.t.exposed_ifaces(&self.t.nodes[&u]) {
                    msgs.push((owner(u), self.t.vertex_owner(f.v), 2));
                }
            }
            for _ in 0..doubling_rounds(widest) {
                charge_pass(sim, msgs.clone())?;
                charge_pass(sim, msgs.iter().map(|&(a, b, w)| (b, a, w)))?;
            }
        }
        // Descriptors travel to the machine building their group.
        let mut gather = Vec::new();
        for plan in &plans {
            if let Plan::Group(children, _) = plan {
                let c = owner(children[0]);
                for &u in children {
                    gather.push((owner(u), c, self.t.nodes[&u].words()));
                }
            }
        }
        charge_pass(sim, gather)?;
        let mut scatter = Vec::new();
        for plan in plans {
            match plan {
                Plan::Root(u) => {
                    let before = self.t.nodes[&u].words();
                    let node = self.t.nodes.get_mut(&u).unwrap();
                    node.boundary.clear();
                    node.parent = None;
                    self.t.recharge(sim, u, before);
                    self.t.roots.insert(u);
                }
                Plan::Group(children, is_root) => {
                    let c = owner(children[0]);
                    for &ch in &children {
                        scatter.push((c, owner(ch), 2));
                    }
                    let id = self.t.make_node(sim, c, level + 1, children);
                    if is_root {
                        self.t.roots.insert(id);
                    } else {
                        self.loose_at(level + 1).insert(id);
                    }
                }
            }
        }
        charge_pass(sim, scatter)?;
        self.loose[level as usize].clear();
        Ok(LevelOutcome::Done)
    }
}

impl TopTree {
    /// Creates a node of `rank` over `children` on `machine`.
    pub(super) fn make_node(
        &mut self,
        sim: &mut Simulator,
        machine: usize,
        rank: u32,
        children: Vec<NodeId>,
    ) -> NodeId {
        let id = self.alloc(machine);
        let mut count: BTreeMap<VertexId, (u32, Vec<u32>)> = BTreeMap::new();
        let mut weight = 0;
        let mut min_vertex = VertexId::MAX;
        for (i, &c) in children.iter().enumerate() {
            let before = self.nodes[&c].words();
            let deg_of = |v: VertexId| self.adj[v as usize].len();
            let node = self.nodes.get_mut(&c).unwrap();
            node.ifaces.retain(|f| (f.deg as usize) < deg_of(f.v));
            for f in &node.ifaces {
                let e = count.entry(f.v).or_default();
                e.0 += f.deg;
                e.1.push(i as u32);
            }
            weight += node.weight;
            min_vertex = min_vertex.min(node.min_vertex);
            node.parent = Some(id);
            self.recharge(sim, c, before);
            self.roots.remove(&c);
        }
        let mut ifaces = Vec::new();
        let mut junctions = Vec::new();
        let mut boundary: Vec<Vec<VertexId>> = vec![Vec::new(); children.len()];
        for (v, (deg, kids)) in count {
            if (deg as usize) < self.adj[v as usize].len() {
                ifaces.push(Iface { v, deg, child: kids[0] });
            }
            if kids.len() >= 2 {
                for &k in &kids {
                    boundary[k as usize].push(v);
                }
                junctions.push((v, kids));
            }
        }
        for (i, &c) in children.iter().enumerate() {
            let before = self.nodes[&c].words();
            self.nodes.get_mut(&c).unwrap().boundary = std::mem::take(&mut boundary[i]);
            self.recharge(sim, c, before);
        }
        let node = Node {
            id,
            rank,
            parent: None,
            children,
            edge: None,
            weight,
            min_vertex,
            ifaces,
            boundary: Vec::new(),
            junctions,
            root_vertex: min_vertex,
        };
        self.insert_node(sim, node);
        id
    }

    /// Recomputes reference sets and root vertices in the trees containing
    /// `touched`.
    pub(super) fn refresh(&mut self, sim: &mut Simulator, touched: &[VertexId]) -> Result<(), TopTreeError> {
        let mut seen: HashSet<VertexId> = HashSet::new();
        let mut verts = Vec::new();
        for &s in touched {
            if !seen.insert(s) {
                continue;
            }
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                verts.push(x);
                for e in &self.adj[x as usize] {
                    let y = self.edges[e].other(x);
                    if seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
        }
        let mut roots = BTreeSet::new();
        let mut per_rank: BTreeMap<u32, Vec<(usize, usize, usize)>> = BTreeMap::new();
        for &v in &verts {
            let mut chain = Vec::new();
            if let Some(e) = self.adj[v as usize].iter().next() {
                let mut id = self.leaf_of[e];
                loop {
                    chain.push(id);
                    let node = &self.nodes[&id];
                    per_rank.entry(node.rank).or_default().push((owner(id), self.vertex_owner(v), 1));
                    match node.parent {
                        Some(p) => id = p,
                        None => break,
                    }
                }
                roots.insert(id);
            }
            self.refs[v as usize] = chain;
            self.recharge_vertex(sim, v);
        }
        for (_, msgs) in per_rank.into_iter().rev() {
            charge_pass(sim, msgs)?;
        }
        for r in roots {
            self.orient(sim, r)?;
        }
        Ok(())
    }

    /// Top-down pass setting `root_vertex` of every node under `root`.
    fn orient(&mut self, sim: &mut Simulator, root: NodeId) -> Result<(), TopTreeError> {
        let top = self.nodes[&root].min_vertex;
        let mut frontier = vec![(root, top)];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            let mut msgs = Vec::new();
            for (id, t) in frontier {
                self.nodes.get_mut(&id).unwrap().root_vertex = t;
                let node = &self.nodes[&id];
                if node.is_leaf() {
                    continue;
                }
                let tops = self.child_tops(node, t);
                for (i, &c) in node.children.iter().enumerate() {
                    msgs.push((owner(id), owner(c), 1));
                    next.push((c, tops[i]));
                }
            }
            if !msgs.is_empty() {
                charge_pass(sim, msgs)?;
            }
            frontier = next;
        }
        Ok(())
    }

    /// Top vertex of each child of `x` when `x` hangs from `top`.
    pub(super) fn child_tops(&self, x: &Node, top: VertexId) -> Vec<VertexId> {
        let k = x.children.len();
        let mut tops = vec![VertexId::MAX; k];
        let mut queue: Vec<usize> = Vec::new();
        for c in self.children_containing(x, top) {
            tops[c as usize] = top;
            queue.push(c as usize);
        }
        let mut head = 0;
        while head < queue.len() {
            let c = queue[head];
            head += 1;
            let child = &self.nodes[&x.children[c]];
            for &w in &child.boundary {
                if w == tops[c] {
                    continue;
                }
                if let Some(kids) = x.junction(w) {
                    for &d in kids {
                        let d = d as usize;
                        if tops[d] == VertexId::MAX {
                            tops[d] = w;
                            queue.push(d);
                        }
                    }
                }
            }
        }
        tops
    }
}
