use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use super::{MpcError, Simulator, WordSized};

/// Items held by each machine, indexed by machine.
pub type Distributed<T> = Vec<Vec<T>>;

/// Deterministic hash partitioning of keys onto machines.
pub fn owner_of<K: Hash + ?Sized>(key: &K, machines: usize) -> usize {
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    (super::splitmix(h.finish()) % machines as u64) as usize
}

/// Sends one item per message to the machine chosen by `route`.
pub fn all_to_all<T: WordSized>(
    sim: &mut Simulator,
    items: Distributed<T>,
    route: impl Fn(usize, &T) -> usize,
) -> Result<Distributed<T>, MpcError> {
    let out =
        items.into_iter().enumerate().map(|(src, v)| v.into_iter().map(|x| (route(src, &x), x)).collect()).collect();
    let inbox = sim.exchange(out)?;
    Ok(inbox.into_iter().map(|v| v.into_iter().map(|e| e.payload).collect()).collect())
}

/// Collects everything on machine `dst` in (machine, position) order.
pub fn gather_to<T: WordSized>(sim: &mut Simulator, dst: usize, items: Distributed<T>) -> Result<Vec<T>, MpcError> {
    let mut inbox = all_to_all(sim, items, |_, _| dst)?;
    Ok(std::mem::take(&mut inbox[dst]))
}

/// Delivers `value` from `root` to every machine along a heap-shaped tree
/// whose fan-out is the largest that keeps each sender within its cap (at
/// most `S`). Returns the number of rounds used.
pub fn broadcast<T: WordSized + Clone>(sim: &mut Simulator, root: usize, value: &T) -> Result<usize, MpcError> {
    let m = sim.machines();
    let w = value.words().max(1);
    let fanout = (sim.config().message_cap / w).min(sim.words_per_machine()).max(1);
    // Heap positions are relative to `root`.
    let mut have = 1usize;
    let mut rounds = 0;
    while have < m {
        let mut out = sim.empty_outboxes::<T>();
        for pos in 0..have {
            for c in 1..=fanout {
                let child = pos * fanout + c;
                if child >= have && child < m {
                    out[(root + pos) % m].push(((root + child) % m, value.clone()));
                }
            }
        }
        sim.exchange(out)?;
        have = (have * fanout + 1).min(m).max(have + 1).min(m);
        rounds += 1;
    }
    Ok(rounds)
}

/// Combines values per key. Each machine pre-combines locally, then every key
/// is routed to its hash owner. Output per machine is sorted by key.
pub fn mpc_aggregate_by_key<K, V>(
    sim: &mut Simulator,
    pairs: Distributed<(K, V)>,
    combine: impl Fn(&V, &V) -> V,
) -> Result<Distributed<(K, V)>, MpcError>
where
    K: Ord + Hash + Clone + WordSized,
    V: Clone + WordSized,
{
    let m = sim.machines();
    let local: Distributed<(K, V)> = pairs
        .into_iter()
        .map(|v| {
            let mut acc: BTreeMap<K, V> = BTreeMap::new();
            for (k, x) in v {
                match acc.get_mut(&k) {
                    Some(cur) => *cur = combine(cur, &x),
                    None => {
                        acc.insert(k, x);
                    }
                }
            }
            acc.into_iter().collect()
        })
        .collect();
    let inbox = all_to_all(sim, local, |_, (k, _)| owner_of(k, m))?;
    Ok(inbox
        .into_iter()
        .map(|v| {
            let mut acc: BTreeMap<K, V> = BTreeMap::new();
            for (k, x) in v {
                match acc.get_mut(&k) {
                    Some(cur) => *cur = combine(cur, &x),
                    None => {
                        acc.insert(k, x);
                    }
                }
            }
            acc.into_iter().collect()
        })
        .collect())
}

/// Sample sort. Machine `i` of the result holds the `i`-th contiguous block of
/// the global order. Equal keys keep their (machine, position) input order.
pub fn mpc_sort<T, K>(
    sim: &mut Simulator,
    items: Distributed<T>,
    key: impl Fn(&T) -> K,
) -> Result<Distributed<T>, MpcError>
where
    T: WordSized,
    K: Ord + Clone + WordSized,
{
    let m = sim.machines();
    let mut items = items;
    for v in items.iter_mut() {
        v.sort_by_key(|x| key(x));
    }
    if m == 1 {
        return Ok(items);
    }
    let samples: Distributed<K> = items
        .iter()
        .map(|v| {
            if v.is_empty() {
                return Vec::new();
            }
            (1..m).map(|j| key(&v[(j * v.len()) / m])).collect()
        })
        .collect();
    let mut all = gather_to(sim, 0, samples)?;
    all.sort();
    let splitters: Vec<K> =
        if all.is_empty() { Vec::new() } else { (1..m).map(|j| all[(j * all.len()) / m].clone()).collect() };
    broadcast(sim, 0, &splitters)?;
    let routed = all_to_all(sim, items, |_, x| {
        let k = key(x);
        splitters.partition_point(|s| *s < k)
    })?;
    Ok(routed
        .into_iter()
        .map(|mut v| {
            v.sort_by_key(|x| key(x));
            v
        })
        .collect())
}
