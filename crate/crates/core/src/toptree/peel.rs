//! Partitioning a connected set of clusters into connected groups.
//!
//! The clusters and their shared vertices form a tree (clusters are
//! edge-disjoint subtrees of one forest tree). A post-order pass carries
//! fewer than `b` clusters upward as "pending" sets. A cluster closes a group
//! once its pending set reaches `b`; a shared vertex packs the pending sets of
//! its child clusters into bins of at least `b`, leftovers joining the last
//! bin. What is left at the root joins an adjacent group.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::VertexId;

/// Groups of unit indices, or the oversized pending set that could not be
/// split ("hub").
pub(super) fn peel<R: Rng>(
    unit_vertices: &[Vec<VertexId>],
    b: usize,
    cap: usize,
    rng: Option<&mut R>,
) -> Result<Vec<Vec<usize>>, Vec<usize>> {
    let k = unit_vertices.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut vid: HashMap<VertexId, usize> = HashMap::new();
    let mut vunits: Vec<Vec<usize>> = Vec::new();
    for (u, vs) in unit_vertices.iter().enumerate() {
        for &v in vs {
            let j = *vid.entry(v).or_insert_with(|| {
                vunits.push(Vec::new());
                vunits.len() - 1
            });
            vunits[j].push(u);
        }
    }
    let uverts: Vec<Vec<usize>> = unit_vertices.iter().map(|vs| vs.iter().map(|v| vid[v]).collect()).collect();
    let total = k + vunits.len();
    let mut rng = rng;
    let root = match rng.as_deref_mut() {
        Some(r) => r.gen_range(0..k),
        None => 0,
    };
    // Bipartite tree: node i < k is unit i, node k + j is vertex j.
    let mut parent = vec![usize::MAX; total];
    let mut seen = vec![false; total];
    let mut order = Vec::with_capacity(total);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); total];
    seen[root] = true;
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        let nbrs: Vec<usize> = if x < k { uverts[x].iter().map(|&j| k + j).collect() } else { vunits[x - k].clone() };
        for y in nbrs {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                children[x].push(y);
                order.push(y);
            }
        }
    }
    debug_assert_eq!(order.len(), total, "region must be connected");
    if let Some(r) = rng {
        for c in children.iter_mut() {
            c.shuffle(r);
        }
    }
    let mut ret: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &x in order.iter().rev() {
        if x < k {
            let mut pend = vec![x];
            for &c in &children[x] {
                pend.append(&mut ret[c]);
            }
            if pend.len() >= b {
                if pend.len() > cap {
                    return Err(pend);
                }
                groups.push(pend);
            } else {
                ret[x] = pend;
            }
        } else {
            let mut bins: Vec<Vec<usize>> = Vec::new();
            let mut cur = Vec::new();
            for &c in &children[x] {
                cur.append(&mut ret[c]);
                if cur.len() >= b {
                    bins.push(std::mem::take(&mut cur));
                }
            }
            if let Some(last) = bins.last_mut() {
                last.append(&mut cur);
                for bin in bins {
                    if bin.len() > cap {
                        return Err(bin);
                    }
                    groups.push(bin);
                }
            } else {
                ret[x] = cur;
            }
        }
    }
    let left = std::mem::take(&mut ret[root]);
    if left.is_empty() {
        return Ok(groups);
    }
    if groups.is_empty() {
        return Ok(vec![left]);
    }
    let mut group_of = vec![usize::MAX; k];
    for (g, members) in groups.iter().enumerate() {
        for &u in members {
            group_of[u] = g;
        }
    }
    let mut best: Option<usize> = None;
    for &u in &left {
        for &j in &uverts[u] {
            for &x in &vunits[j] {
                let g = group_of[x];
                if g != usize::MAX && best.is_none_or(|b| groups[g].len() < groups[b].len()) {
                    best = Some(g);
                }
            }
        }
    }
    let g = best.expect("leftover touches a group");
    if groups[g].len() + left.len() > cap {
        let mut hub = groups.swap_remove(g);
        hub.extend(left);
        return Err(hub);
    }
    groups[g].extend(left);
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn path_units(len: usize) -> Vec<Vec<VertexId>> {
        // Unit i is edge (i, i+1); shared vertices are the interior ones.
        (0..len)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i as VertexId);
                }
                if i + 1 < len {
                    v.push(i as VertexId + 1);
                }
                v
            })
            .collect()
    }

    fn check(groups: &[Vec<usize>], k: usize, b: usize, cap: usize) {
        let mut all: Vec<usize> = groups.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..k).collect::<Vec<_>>());
        for g in groups {
            assert!(g.len() >= b && g.len() <= cap, "group size {}", g.len());
        }
    }

    #[test]
    fn path_groups_are_balanced() {
        for len in [3usize, 4, 10, 57, 200] {
            let units = path_units(len);
            let g = peel::<ChaCha8Rng>(&units, 3, 12, None).unwrap();
            check(&g, len, 3, 12);
        }
    }

    #[test]
    fn star_packs_into_bins() {
        // 40 edges around vertex 0.
        let units: Vec<Vec<VertexId>> = (0..40).map(|_| vec![0]).collect();
        let g = peel::<ChaCha8Rng>(&units, 4, 16, None).unwrap();
        check(&g, 40, 4, 16);
    }

    #[test]
    fn small_region_is_one_group() {
        let g = peel::<ChaCha8Rng>(&path_units(2), 5, 20, None).unwrap();
        assert_eq!(g, vec![vec![0, 1]]);
    }
}
