use std::collections::{BTreeSet, HashMap, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{EdgeKey, Graph, Weight};
use crate::mpc::MpcConfig;
use crate::oracles;

pub(crate) struct MaxEdge;

impl EdgeAggregate for MaxEdge {
    type Value = Option<EdgeKey>;
    type Output = Option<EdgeKey>;
    fn identity(&self) -> Self::Value {
        None
    }
    fn leaf(&self, e: &WeightedEdge) -> Self::Value {
        Some(e.key())
    }
    fn merge(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        (*a).max(*b)
    }
    fn finalize(&self, v: &Self::Value) -> Self::Output {
        *v
    }
}

struct Count;

impl EdgeAggregate for Count {
    type Value = u64;
    type Output = u64;
    fn identity(&self) -> u64 {
        0
    }
    fn leaf(&self, _: &WeightedEdge) -> u64 {
        1
    }
    fn merge(&self, a: &u64, b: &u64) -> u64 {
        a + b
    }
    fn finalize(&self, v: &u64) -> u64 {
        *v
    }
}

/// Label `v + 1`, summed in i64.
struct IdSum;

impl VertexAggregate for IdSum {
    type Value = i64;
    fn zero(&self) -> i64 {
        0
    }
    fn label(&self, v: VertexId) -> i64 {
        v as i64 + 1
    }
    fn add(&self, a: &i64, b: &i64) -> i64 {
        a + b
    }
    fn sub(&self, a: &i64, b: &i64) -> i64 {
        a - b
    }
}

pub(crate) fn sim_for(n: usize) -> Simulator {
    let cfg = MpcConfig::for_input(n, 0.5, 40 * n + 64, 7);
    let mut s = Simulator::new(cfg).unwrap();
    s.set_strict(true);
    s
}

/// Random forest: a random recursive tree with a fraction of edges dropped.
pub(crate) fn random_forest(n: usize, keep: f64, rng: &mut ChaCha8Rng) -> Vec<WeightedEdge> {
    let mut out = Vec::new();
    for v in 1..n as VertexId {
        if rng.gen_bool(keep) {
            let u = rng.gen_range(0..v);
            out.push(WeightedEdge::new(u, v, rng.gen::<f64>()));
        }
    }
    out
}

fn path(n: usize) -> Vec<WeightedEdge> {
    (1..n as VertexId).map(|v| WeightedEdge::new(v - 1, v, v as f64)).collect()
}

fn star(n: usize) -> Vec<WeightedEdge> {
    (1..n as VertexId).map(|v| WeightedEdge::new(0, v, v as f64)).collect()
}

fn build(n: usize, b: usize, f: &[WeightedEdge]) -> (Simulator, TopTree) {
    let mut sim = sim_for(n);
    let t = TopTree::build_from_forest(&mut sim, TopTreeParams::with_b(n, b), f).unwrap();
    (sim, t)
}

fn assert_ok(t: &TopTree) {
    if let Err(e) = t.check_invariants() {
        panic!("invariants: {:?}", &e[..e.len().min(8)]);
    }
}

/// Parent of every vertex when each tree hangs from `root` (or the tree
/// minimum), by BFS over the forest.
fn bfs_parents(n: usize, f: &[WeightedEdge], root: Option<VertexId>) -> Vec<Option<(VertexId, WeightedEdge)>> {
    let adj = crate::graph::forest_adjacency(n, f);
    let mut par = vec![None; n];
    let mut seen = vec![false; n];
    let starts: Vec<VertexId> = root.into_iter().chain(0..n as VertexId).collect();
    for s in starts {
        if seen[s as usize] {
            continue;
        }
        seen[s as usize] = true;
        let mut q = vec![s];
        while let Some(x) = q.pop() {
            for &(y, e) in &adj[x as usize] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    par[y as usize] = Some((x, e));
                    q.push(y);
                }
            }
        }
    }
    par
}

#[test]
fn build_shapes_pass_invariants() {
    for (n, b) in [(2, 2), (10, 2), (64, 3), (300, 4), (1000, 6)] {
        for f in [path(n), star(n)] {
            let (_, t) = build(n, b, &f);
            assert_ok(&t);
            assert_eq!(t.edge_count(), n - 1);
            assert!(t.depth() <= t.params().max_depth, "depth {} > {}", t.depth(), t.params().max_depth);
        }
    }
}

#[test]
fn random_forests_pass_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [50, 400, 1500] {
        let f = random_forest(n, 0.9, &mut rng);
        let (_, t) = build(n, 3, &f);
        assert_ok(&t);
        assert_eq!(t.forest_edges().len(), f.len());
    }
}

#[test]
fn cut_and_link_keep_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 600;
    let f = random_forest(n, 1.0, &mut rng);
    let (mut sim, mut t) = build(n, 3, &f);
    let mut cur: HashMap<EdgeId, WeightedEdge> = f.iter().map(|e| (e.eid, *e)).collect();
    for round in 0..12 {
        let mut ids: Vec<EdgeId> = cur.keys().copied().collect();
        ids.sort();
        let k = 1 + round * 7;
        let cut: Vec<EdgeId> = (0..k.min(ids.len()))
            .map(|_| ids[rng.gen_range(0..ids.len())])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for e in &cut {
            cur.remove(e);
        }
        // Reconnect with random edges between different trees.
        let mut dsu = oracles::Dsu::new(n);
        for e in cur.values() {
            dsu.union(e.u as usize, e.v as usize);
        }
        let mut link = Vec::new();
        for _ in 0..k {
            let (u, v) = (rng.gen_range(0..n as VertexId), rng.gen_range(0..n as VertexId));
            if dsu.union(u as usize, v as usize) {
                link.push(WeightedEdge::new(u, v, rng.gen()));
            }
        }
        t.update(&mut sim, &cut, &link).unwrap();
        for e in link {
            cur.insert(e.eid, e);
        }
        assert_ok(&t);
        let mut want: Vec<EdgeId> = cur.keys().copied().collect();
        want.sort();
        assert_eq!(t.forest_edges().iter().map(|e| e.eid).collect::<Vec<_>>(), want);
    }
    assert_eq!(sim.metrics().violations.len(), 0);
}

/// Centre vertex with `legs` paths of `len` edges each.
fn spider(legs: usize, len: usize) -> Vec<WeightedEdge> {
    let mut out = Vec::new();
    for l in 0..legs {
        let mut prev = 0;
        for i in 0..len {
            let v = (1 + l * len + i) as VertexId;
            out.push(WeightedEdge::new(prev, v, v as f64));
            prev = v;
        }
    }
    out
}

#[test]
fn spiders_survive_leg_churn() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for b in 2..5 {
        for legs in [5, 9, 17, 31] {
            for len in 1..4 {
                let f = spider(legs, len);
                let n = 1 + legs * len;
                let (mut sim, mut t) = build(n, b, &f);
                assert_ok(&t);
                let mut cur: BTreeSet<EdgeId> = f.iter().map(|e| e.eid).collect();
                for _ in 0..20 {
                    let ids: Vec<EdgeId> = cur.iter().copied().collect();
                    let e = ids[rng.gen_range(0..ids.len())];
                    t.batch_cut(&mut sim, &[e]).unwrap();
                    let (u, v) = e.endpoints();
                    t.batch_link(&mut sim, &[WeightedEdge::new(u, v, rng.gen())]).unwrap();
                    if let Err(errs) = t.check_invariants() {
                        panic!("b {b} legs {legs} len {len}: {:?}", &errs[..errs.len().min(4)]);
                    }
                    cur.insert(e);
                }
            }
        }
    }
}

#[test]
fn invalid_updates_are_rejected() {
    let (mut sim, mut t) = build(5, 2, &path(5));
    let e = WeightedEdge::new(0, 4, 1.0);
    assert_eq!(t.batch_link(&mut sim, &[e]), Err(TopTreeError::WouldCreateCycle(e.eid)));
    let missing = crate::graph::canonical_eid(0, 3);
    assert_eq!(t.batch_cut(&mut sim, &[missing]), Err(TopTreeError::MissingEdge(missing)));
    let dup = WeightedEdge::new(0, 1, 3.0);
    assert_eq!(t.batch_link(&mut sim, &[dup]), Err(TopTreeError::DuplicateEdge(dup.eid)));
    assert_ok(&t);
    assert_eq!(t.edge_count(), 4);
}

#[test]
fn path_max_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 800;
    let f = random_forest(n, 0.97, &mut rng);
    let (mut sim, t) = build(n, 3, &f);
    let mut qs = Vec::new();
    while qs.len() < 300 {
        let (u, v) = (rng.gen_range(0..n as VertexId), rng.gen_range(0..n as VertexId));
        if t.same_tree(u, v) {
            qs.push((u, v));
        }
    }
    let got = t.batch_path_query(&mut sim, &MaxEdge, &qs).unwrap();
    for (i, &(u, v)) in qs.iter().enumerate() {
        assert_eq!(got[i], oracles::path_max(n, &f, u, v).map(|e| e.key()), "query {u} {v}");
    }
}

#[test]
fn path_query_errors_and_identity() {
    let f = vec![WeightedEdge::new(0, 1, 1.0), WeightedEdge::new(2, 3, 1.0)];
    let (mut sim, t) = build(4, 2, &f);
    assert_eq!(t.batch_path_query(&mut sim, &Count, &[(3, 3)]).unwrap(), vec![0]);
    assert_eq!(
        t.batch_path_query(&mut sim, &Count, &[(0, 1), (1, 2)]),
        Err(TopTreeError::DifferentComponents { index: 1 })
    );
}

#[test]
fn subtree_counts_match_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 500;
    let f = random_forest(n, 0.95, &mut rng);
    let (mut sim, t) = build(n, 3, &f);
    for root in [0, 17, 250, 499] {
        let got = t.subtree_aggregate(&mut sim, &Count, root).unwrap();
        let par = bfs_parents(n, &f, Some(root));
        let mut want = vec![0u64; n];
        let tree: HashSet<VertexId> = (0..n as VertexId).filter(|&v| t.same_tree(v, root)).collect();
        for &v in &tree {
            let mut x = v;
            while let Some((p, _)) = par[x as usize] {
                want[p as usize] += 1;
                x = p;
            }
        }
        for v in 0..n as VertexId {
            if tree.contains(&v) {
                assert_eq!(got[v as usize], Some(want[v as usize]), "root {root} vertex {v}");
            } else {
                assert_eq!(got[v as usize], None);
            }
        }
    }
}

#[test]
fn vertex_sums_match_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 700;
    let f = random_forest(n, 0.9, &mut rng);
    let (mut sim, t) = build(n, 4, &f);
    let got = t.subtree_vertex_sums(&mut sim, &IdSum).unwrap();
    let par = bfs_parents(n, &f, None);
    let mut want: Vec<i64> = (0..n as i64).map(|v| v + 1).collect();
    for v in 0..n as VertexId {
        let mut x = v;
        while let Some((p, _)) = par[x as usize] {
            want[p as usize] += v as i64 + 1;
            x = p;
        }
    }
    assert_eq!(got, want);
}

#[test]
fn marked_labels_match_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 600;
    let f = random_forest(n, 0.95, &mut rng);
    let (mut sim, t) = build(n, 3, &f);
    let marked: HashSet<EdgeId> = f.iter().filter(|_| rng.gen_bool(0.1)).map(|e| e.eid).collect();
    let labels = t.label_by_marked(&mut sim, &marked).unwrap();
    let g = Graph::from_edges(n, &f).unwrap();
    let comp = oracles::components_without(&g, &marked.iter().copied().collect());
    for u in 0..n {
        for v in (u + 1..n).step_by(37) {
            assert_eq!(labels[u] == labels[v], comp[u] == comp[v], "{u} {v}");
        }
    }
    for (v, label) in labels.iter().enumerate() {
        match *label {
            PieceLabel::Root(r) => assert_eq!(r, t.tree_root_vertex(v as VertexId)),
            PieceLabel::Edge(e) => assert!(marked.contains(&e)),
        }
    }
}

#[test]
fn separator_matches_pairwise_maxima() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 500;
    let f = random_forest(n, 0.98, &mut rng);
    let (mut sim, t) = build(n, 3, &f);
    let terms: Vec<VertexId> = (0..25).map(|_| rng.gen_range(0..n as VertexId)).collect();
    let res = t.separator(&mut sim, &terms).unwrap();
    let mut want = BTreeSet::new();
    for &a in &terms {
        for &b in &terms {
            if a != b && t.same_tree(a, b) {
                want.insert(oracles::path_max(n, &f, a, b).unwrap().eid);
            }
        }
    }
    assert_eq!(res.edges, want);
    // The compressed tree preserves every pairwise maximum.
    let ce: Vec<WeightedEdge> = res
        .compressed
        .iter()
        .map(|e| WeightedEdge {
            u: e.a,
            v: e.b,
            w: e.key.map_or(Weight(f64::NEG_INFINITY), |k| k.0),
            eid: crate::graph::canonical_eid(e.a, e.b),
        })
        .collect();
    let keys: HashMap<EdgeId, Option<EdgeKey>> =
        res.compressed.iter().map(|e| (crate::graph::canonical_eid(e.a, e.b), e.key)).collect();
    for &a in &terms {
        for &b in &terms {
            if a != b && t.same_tree(a, b) {
                let path = oracles::path_edges(n, &ce, a, b).unwrap();
                let m = path.iter().filter_map(|e| keys[&e.eid]).max();
                assert_eq!(m, oracles::path_max(n, &f, a, b).map(|e| e.key()));
            }
        }
    }
}

#[test]
fn dump_round_trips_through_parser() {
    let (_, t) = build(120, 3, &path(120));
    let lines = parse_dump(&t.dump(), 3, 12).unwrap();
    assert_eq!(lines.len(), t.node_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_updates_preserve_invariants(seed in any::<u64>(), n in 8usize..160, b in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_forest(n, 0.8, &mut rng);
        let (mut sim, mut t) = build(n, b, &f);
        prop_assert!(t.check_invariants().is_ok());
        let mut cur: Vec<WeightedEdge> = f;
        for _ in 0..4 {
            let cut: Vec<EdgeId> = cur.iter().filter(|_| rng.gen_bool(0.2)).map(|e| e.eid).collect();
            cur.retain(|e| !cut.contains(&e.eid));
            let mut dsu = oracles::Dsu::new(n);
            for e in &cur {
                dsu.union(e.u as usize, e.v as usize);
            }
            let mut link = Vec::new();
            for _ in 0..n / 4 {
                let (u, v) = (rng.gen_range(0..n as VertexId), rng.gen_range(0..n as VertexId));
                if dsu.union(u as usize, v as usize) {
                    link.push(WeightedEdge::new(u, v, rng.gen()));
                }
            }
            t.update(&mut sim, &cut, &link).unwrap();
            cur.extend(link);
            let r = t.check_invariants();
            prop_assert!(r.is_ok(), "{:?}", r);
            prop_assert_eq!(t.edge_count(), cur.len());
        }
        let qs: Vec<(VertexId, VertexId)> = (0..20)
            .map(|_| (rng.gen_range(0..n as VertexId), rng.gen_range(0..n as VertexId)))
            .filter(|&(u, v)| t.same_tree(u, v))
            .collect();
        let got = t.batch_path_query(&mut sim, &MaxEdge, &qs).unwrap();
        for (i, &(u, v)) in qs.iter().enumerate() {
            prop_assert_eq!(got[i], oracles::path_max(n, &cur, u, v).map(|e| e.key()));
        }
        let sums = t.subtree_vertex_sums(&mut sim, &IdSum).unwrap();
        let par = bfs_parents(n, &cur, None);
        let mut want: Vec<i64> = (0..n as i64).map(|v| v + 1).collect();
        for v in 0..n as VertexId {
            let mut x = v;
            while let Some((p, _)) = par[x as usize] {
                want[p as usize] += v as i64 + 1;
                x = p;
            }
        }
        prop_assert_eq!(sums, want);
        let marked: HashSet<EdgeId> = cur.iter().filter(|_| rng.gen_bool(0.3)).map(|e| e.eid).collect();
        let labels = t.label_by_marked(&mut sim, &marked).unwrap();
        let g = Graph::from_edges(n, &cur).unwrap();
        let comp = oracles::components_without(&g, &marked.iter().copied().collect());
        for u in 0..n {
            for v in 0..n {
                prop_assert_eq!(labels[u] == labels[v], comp[u] == comp[v]);
            }
        }
        prop_assert!(sim.metrics().violations.is_empty());
    }
}
