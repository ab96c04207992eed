//! Degree-reduction phases on a residual instance.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Cover, MatchingError, MatchingParams, ResidualInstance};
use crate::graph::{EdgeId, VertexId};
use crate::mpc::{
    all_to_all, broadcast, gather_to, mpc_aggregate_by_key, owner_of, splitmix, Distributed, MpcError, Simulator,
};
use crate::msf::vertex_lookup;

/// Repetitions are packed into a `u64` kill mask.
const MAX_REPETITIONS: usize = 64;

/// Greedy maximal matching under a random edge order.
pub(crate) fn greedy(mut edges: Vec<EdgeId>, rng: &mut ChaCha8Rng) -> Vec<EdgeId> {
    edges.shuffle(rng);
    let mut used: std::collections::HashSet<VertexId> = std::collections::HashSet::new();
    let mut out = Vec::new();
    for e in edges {
        let (u, v) = e.endpoints();
        if !used.contains(&u) && !used.contains(&v) {
            used.insert(u);
            used.insert(v);
            out.push(e);
        }
    }
    out
}

/// Degree of every endpoint, held at the vertex owners.
fn degrees(sim: &mut Simulator, edges: &Distributed<EdgeId>) -> Result<HashMap<VertexId, u64>, MpcError> {
    let pairs: Distributed<(VertexId, u64)> = edges
        .iter()
        .map(|v| {
            v.iter()
                .flat_map(|e| {
                    let (a, b) = e.endpoints();
                    [(a, 1), (b, 1)]
                })
                .collect()
        })
        .collect();
    let summed = mpc_aggregate_by_key(sim, pairs, |a, b| a + b)?;
    Ok(summed.into_iter().flatten().collect())
}

/// Reduces one value per machine to machine 0 and broadcasts the result.
fn all_reduce(sim: &mut Simulator, local: Vec<u64>, f: impl Fn(u64, u64) -> u64) -> Result<u64, MpcError> {
    let d: Distributed<u64> = local.into_iter().map(|x| vec![x]).collect();
    let at0 = gather_to(sim, 0, d)?;
    let r = at0.into_iter().reduce(f).unwrap_or(0);
    broadcast(sim, 0, &r)?;
    Ok(r)
}

fn cover_owned_max(sim: &Simulator, deg: &HashMap<VertexId, u64>, cover: &Cover) -> Vec<u64> {
    let m = sim.machines();
    let mut local = vec![0u64; m];
    for (&v, &d) in deg {
        if cover.contains(v) {
            let o = owner_of(&v, m);
            local[o] = local[o].max(d);
        }
    }
    local
}

pub(super) fn max_cover_degree(sim: &mut Simulator, inst: &ResidualInstance) -> Result<usize, MpcError> {
    let deg = degrees(sim, &inst.edges)?;
    let local = cover_owned_max(sim, &deg, &inst.cover);
    Ok(all_reduce(sim, local, u64::max)? as usize)
}

/// Asks the owners of both endpoints of every held edge; `answer` combines
/// into one value per edge with `or`.
fn endpoint_query(
    sim: &mut Simulator,
    edges: &Distributed<EdgeId>,
    answer: impl Fn(VertexId) -> u64,
) -> Result<Distributed<u64>, MpcError> {
    let asks: Distributed<(VertexId, u64)> = edges
        .iter()
        .map(|v| {
            v.iter()
                .enumerate()
                .flat_map(|(i, e)| {
                    let (a, b) = e.endpoints();
                    [(a, i as u64), (b, i as u64)]
                })
                .collect()
        })
        .collect();
    let replies = vertex_lookup(sim, asks, answer)?;
    Ok(replies
        .into_iter()
        .zip(edges)
        .map(|(reps, held)| {
            let mut acc = vec![0u64; held.len()];
            for (i, x) in reps {
                acc[i as usize] |= x;
            }
            acc
        })
        .collect())
}

/// Kill mask per held edge: bit `r` is set when an endpoint is matched in
/// repetition `r`.
fn prune_masks(
    sim: &mut Simulator,
    edges: &Distributed<EdgeId>,
    matched: Distributed<(u64, EdgeId)>,
) -> Result<Distributed<u64>, MpcError> {
    let m = sim.machines();
    let marks: Distributed<(VertexId, u64)> = matched
        .into_iter()
        .map(|v| {
            v.into_iter()
                .flat_map(|(r, e)| {
                    let (a, b) = e.endpoints();
                    [(a, r), (b, r)]
                })
                .collect()
        })
        .collect();
    let delivered = all_to_all(sim, marks, |_, (v, _)| owner_of(v, m))?;
    let mut mask: HashMap<VertexId, u64> = HashMap::new();
    for (v, r) in delivered.into_iter().flatten() {
        *mask.entry(v).or_insert(0) |= 1 << r;
    }
    endpoint_query(sim, edges, |v| mask.get(&v).copied().unwrap_or(0))
}

fn keep_unmasked(edges: &mut Distributed<EdgeId>, masks: &Distributed<u64>, bit: u64) {
    for (held, mk) in edges.iter_mut().zip(masks) {
        let kept: Vec<EdgeId> = held.iter().zip(mk).filter(|(_, &x)| x & bit == 0).map(|(e, _)| *e).collect();
        *held = kept;
    }
}

fn group(salt: u64, v: VertexId, x: u64) -> u64 {
    splitmix(salt ^ v as u64) % x
}

/// Random vertex groups with sampled edges, greedy inside each group, in up
/// to `k^0.05` parallel repetitions. Keeps the repetition with the fewest
/// cover vertices above `Delta^0.99` afterwards.
pub(crate) fn stage1(
    sim: &mut Simulator,
    inst: &mut ResidualInstance,
    params: &MatchingParams,
) -> Result<Vec<EdgeId>, MpcError> {
    if inst.edge_count() == 0 {
        return Ok(Vec::new());
    }
    let machines = sim.machines();
    let d = inst.delta.max(1) as f64;
    let k = inst.k.max(1) as f64;
    let x = d.powf(params.group_exp).ceil().max(1.0) as u64;
    let p = d.powf(-params.stage1_sample_exp).min(1.0);
    let reps = if d > k.powf(params.repetition_trigger_exp) {
        (k.powf(params.repetition_exp).ceil() as usize).clamp(1, MAX_REPETITIONS)
    } else {
        1
    };
    let salts: Vec<u64> = (0..reps).map(|_| sim.rng(0).gen()).collect();
    broadcast(sim, 0, &salts)?;

    let mut sends: Distributed<(u64, EdgeId)> = vec![Vec::new(); machines];
    for (mach, held) in inst.edges.iter().enumerate() {
        for &e in held {
            let (u, v) = e.endpoints();
            for (r, &salt) in salts.iter().enumerate() {
                let gu = group(salt, u, x);
                if sim.rng(mach).gen_bool(p) && gu == group(salt, v, x) {
                    sends[mach].push(((r as u64) << 32 | gu, e));
                }
            }
        }
    }
    let inbox = all_to_all(sim, sends, |_, (key, _)| owner_of(key, machines))?;
    let mut matched: Distributed<(u64, EdgeId)> = vec![Vec::new(); machines];
    for (mach, got) in inbox.into_iter().enumerate() {
        let mut by_group: BTreeMap<u64, Vec<EdgeId>> = BTreeMap::new();
        for (key, e) in got {
            by_group.entry(key).or_default().push(e);
        }
        for (key, es) in by_group {
            for e in greedy(es, sim.rng(mach)) {
                matched[mach].push((key >> 32, e));
            }
        }
    }
    let masks = prune_masks(sim, &inst.edges, matched.clone())?;

    let best = if reps == 1 {
        0
    } else {
        let thr = d.powf(params.stage2_sample_exp);
        let pairs: Distributed<((u64, VertexId), u64)> = inst
            .edges
            .iter()
            .zip(&masks)
            .map(|(held, mk)| {
                let mut out = Vec::new();
                for (e, &bits) in held.iter().zip(mk) {
                    let (u, v) = e.endpoints();
                    for r in 0..reps as u64 {
                        if bits >> r & 1 == 0 {
                            out.extend([u, v].into_iter().filter(|&w| inst.cover.contains(w)).map(|w| ((r, w), 1)));
                        }
                    }
                }
                out
            })
            .collect();
        let deg = mpc_aggregate_by_key(sim, pairs, |a, b| a + b)?;
        let counts: Distributed<(u64, u64)> = deg
            .into_iter()
            .map(|v| v.into_iter().filter(|(_, c)| *c as f64 > thr).map(|((r, _), _)| (r, 1)).collect())
            .collect();
        let per_rep = mpc_aggregate_by_key(sim, counts, |a, b| a + b)?;
        let at0 = gather_to(sim, 0, per_rep)?;
        let mut high = vec![0u64; reps];
        for (r, c) in at0 {
            high[r as usize] = c;
        }
        let best = (0..reps).min_by_key(|&r| (high[r], r)).unwrap();
        broadcast(sim, 0, &(best as u64))?;
        best
    };
    keep_unmasked(&mut inst.edges, &masks, 1 << best);
    let mut out: Vec<EdgeId> =
        matched.into_iter().flatten().filter(|(r, _)| *r == best as u64).map(|(_, e)| e).collect();
    out.sort();
    Ok(out)
}

/// Flags held edges with a cover endpoint above `thr`.
fn high_edges(sim: &mut Simulator, inst: &ResidualInstance, thr: f64) -> Result<Option<Distributed<u64>>, MpcError> {
    let deg = degrees(sim, &inst.edges)?;
    let local: Vec<u64> = {
        let mut l = vec![0u64; sim.machines()];
        for (&v, &c) in &deg {
            if inst.cover.contains(v) && c as f64 > thr {
                l[owner_of(&v, sim.machines())] += 1;
            }
        }
        l
    };
    if all_reduce(sim, local, |a, b| a + b)? == 0 {
        return Ok(None);
    }
    let flags = endpoint_query(sim, &inst.edges, |v| {
        (inst.cover.contains(v) && deg.get(&v).is_some_and(|&c| c as f64 > thr)) as u64
    })?;
    Ok(Some(flags))
}

fn match_on_zero(
    sim: &mut Simulator,
    inst: &mut ResidualInstance,
    picked: Distributed<EdgeId>,
) -> Result<Vec<EdgeId>, MpcError> {
    let all = gather_to(sim, 0, picked)?;
    let matched = greedy(all, sim.rng(0));
    let mut tagged: Distributed<(u64, EdgeId)> = vec![Vec::new(); sim.machines()];
    tagged[0] = matched.iter().map(|&e| (0, e)).collect();
    let masks = prune_masks(sim, &inst.edges, tagged)?;
    keep_unmasked(&mut inst.edges, &masks, 1);
    Ok(matched)
}

/// Samples edges at cover vertices above `Delta^0.999` with rate
/// `Delta^-0.99` and matches them on one machine, then gathers every edge of
/// the cover vertices still above `Delta^0.991` and matches those too.
pub(crate) fn stage2(
    sim: &mut Simulator,
    inst: &mut ResidualInstance,
    params: &MatchingParams,
) -> Result<Vec<EdgeId>, MpcError> {
    let d = inst.delta.max(1) as f64;
    let mut out = Vec::new();
    if let Some(flags) = high_edges(sim, inst, d.powf(params.high_degree_exp))? {
        let q = d.powf(-params.stage2_sample_exp).min(1.0);
        let mut picked: Distributed<EdgeId> = vec![Vec::new(); sim.machines()];
        for (mach, (held, fl)) in inst.edges.iter().zip(&flags).enumerate() {
            for (&e, &f) in held.iter().zip(fl) {
                if f == 1 && sim.rng(mach).gen_bool(q) {
                    picked[mach].push(e);
                }
            }
        }
        out.extend(match_on_zero(sim, inst, picked)?);
    }
    if let Some(flags) = high_edges(sim, inst, d.powf(params.gather_exp))? {
        let picked: Distributed<EdgeId> = inst
            .edges
            .iter()
            .zip(&flags)
            .map(|(held, fl)| held.iter().zip(fl).filter(|(_, &f)| f == 1).map(|(e, _)| *e).collect())
            .collect();
        out.extend(match_on_zero(sim, inst, picked)?);
    }
    out.sort();
    Ok(out)
}

/// Vertices outside the cover whose degree exceeds `Delta^0.999` join it.
fn extend_cover(sim: &mut Simulator, inst: &mut ResidualInstance, params: &MatchingParams) -> Result<(), MpcError> {
    let Cover::Set(cover) = &inst.cover else {
        return Ok(());
    };
    let thr = (inst.delta.max(1) as f64).powf(params.high_degree_exp);
    let deg = degrees(sim, &inst.edges)?;
    let mut found: Distributed<VertexId> = vec![Vec::new(); sim.machines()];
    for (&v, &c) in &deg {
        if !cover.contains(&v) && c as f64 > thr {
            found[owner_of(&v, sim.machines())].push(v);
        }
    }
    let mut joined = gather_to(sim, 0, found)?;
    joined.sort();
    broadcast(sim, 0, &joined)?;
    if let Cover::Set(cover) = &mut inst.cover {
        cover.extend(joined);
    }
    Ok(())
}

/// One full phase: stage 1, stage 2, then cover extension. Returns the
/// matched edges; the instance keeps only edges with both endpoints free.
pub fn run_phase(
    sim: &mut Simulator,
    inst: &mut ResidualInstance,
    params: &MatchingParams,
) -> Result<Vec<EdgeId>, MpcError> {
    let mut out = stage1(sim, inst, params)?;
    inst.delta = max_cover_degree(sim, inst)?;
    out.extend(stage2(sim, inst, params)?);
    inst.delta = max_cover_degree(sim, inst)?;
    extend_cover(sim, inst, params)?;
    inst.delta = max_cover_degree(sim, inst)?;
    Ok(out)
}

/// Runs phases until at most `S / 2` edges remain, then finishes greedily on
/// machine 0. Returns the matched edges and the number of phases.
pub fn solve(
    sim: &mut Simulator,
    mut inst: ResidualInstance,
    params: &MatchingParams,
) -> Result<(Vec<EdgeId>, usize), MatchingError> {
    let mut out = Vec::new();
    let mut phases = 0;
    loop {
        let local: Vec<u64> = inst.edges.iter().map(|v| v.len() as u64).collect();
        let total = all_reduce(sim, local, |a, b| a + b)? as usize;
        if total <= sim.words_per_machine() / 2 {
            let all = gather_to(sim, 0, std::mem::take(&mut inst.edges))?;
            out.extend(greedy(all, sim.rng(0)));
            return Ok((out, phases));
        }
        if phases == params.max_phases {
            return Err(MatchingError::PhaseLimit { phases, edges: total });
        }
        out.extend(run_phase(sim, &mut inst, params)?);
        phases += 1;
    }
}
