//! Batch-dynamic bridges and 2-edge-connected components.
//!
//! A spanning forest is kept by the MSF machinery on unit weights. Each
//! vertex carries the fingerprint of its non-forest edges, `fp_G - fp_T`;
//! the sum over the subtree below a forest edge vanishes exactly when no
//! non-forest edge leaves that subtree, up to a polynomial-identity false
//! positive of probability at most `n^2 / p`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, UpdateOp, VertexId, WeightedEdge};
use crate::mpc::{mpc_aggregate_by_key, owner_of, Distributed, Simulator};
use crate::msf::{MsfError, MsfState};
use crate::toptree::{PieceLabel, TopTreeError, VertexAggregate};

/// Two vertices share a label iff they are 2-edge-connected.
pub type TwoEccLabel = PieceLabel;

/// Largest supported vertex count: `n^4` must fit in a `u64`.
pub const MAX_VERTICES: usize = 65_535;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoEccError {
    #[error("{n} vertices exceed the fingerprint range ({MAX_VERTICES})")]
    TooManyVertices { n: usize },
    #[error(transparent)]
    Msf(#[from] MsfError),
    #[error(transparent)]
    TopTree(#[from] TopTreeError),
    #[error(transparent)]
    Mpc(#[from] crate::mpc::MpcError),
}

/// Smallest prime greater than `n^4`.
pub fn prime_above_n4(n: usize) -> u64 {
    let mut p = (n.max(1) as u64).pow(4) + 1;
    while !primal_check::miller_rabin(p) {
        p += 1;
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SketchParams {
    pub n: usize,
    pub p: u64,
    pub z: u64,
}

impl SketchParams {
    pub fn new(n: usize, p: u64, z: u64) -> Self {
        SketchParams { n, p, z: z % p }
    }

    pub fn draw<R: Rng>(n: usize, rng: &mut R) -> Self {
        let p = prime_above_n4(n);
        SketchParams { n, p, z: rng.gen_range(0..p) }
    }

    /// Coordinate of the ordered pair `u < w`.
    pub fn idx(&self, u: VertexId, w: VertexId) -> u64 {
        u as u64 * self.n as u64 + w as u64
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.p as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + self.p as u128 - b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut e: u64) -> u64 {
        let mut base = self.z;
        let mut acc = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Signed term of edge `eid` seen from endpoint `v`.
    pub fn term(&self, eid: EdgeId, v: VertexId) -> u64 {
        let (u, w) = eid.endpoints();
        let t = self.pow(self.idx(u, w));
        if v == u {
            t
        } else {
            self.sub(0, t)
        }
    }
}

/// Fingerprint of the edges leaving `{v}`.
pub fn vertex_fingerprint(params: &SketchParams, v: VertexId, incident: impl IntoIterator<Item = EdgeId>) -> u64 {
    incident.into_iter().fold(0, |acc, e| params.add(acc, params.term(e, v)))
}

struct Sums<'a> {
    params: &'a SketchParams,
    labels: &'a [u64],
}

impl VertexAggregate for Sums<'_> {
    type Value = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn label(&self, v: VertexId) -> u64 {
        self.labels[v as usize]
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        self.params.add(*a, *b)
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        self.params.sub(*a, *b)
    }
}

/// Bridge changes of one batch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BridgeDelta {
    pub added: Vec<EdgeId>,
    pub removed: Vec<EdgeId>,
}

impl fmt::Display for BridgeDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.added {
            let (u, v) = e.endpoints();
            writeln!(f, "B+ {u} {v}")?;
        }
        for e in &self.removed {
            let (u, v) = e.endpoints();
            writeln!(f, "B- {u} {v}")?;
        }
        Ok(())
    }
}

/// Label lines `L v label`.
pub fn write_labels(labels: &[TwoEccLabel]) -> String {
    labels.iter().enumerate().map(|(v, l)| format!("L {v} {l}\n")).collect()
}

pub struct TwoEccState {
    msf: MsfState,
    bridges: BTreeSet<EdgeId>,
    labels: Vec<TwoEccLabel>,
}

fn unit(op: &UpdateOp) -> UpdateOp {
    match *op {
        UpdateOp::Insert { u, v, .. } => UpdateOp::Insert { u, v, w: 1.0 },
        d => d,
    }
}

impl TwoEccState {
    pub fn preprocess(sim: &mut Simulator, g: &Graph, alpha: f64) -> Result<Self, TwoEccError> {
        if g.n() > MAX_VERTICES {
            return Err(TwoEccError::TooManyVertices { n: g.n() });
        }
        let mut unit_g = Graph::new(g.n());
        for e in g.edges() {
            unit_g.insert(e.u, e.v, 1.0).map_err(MsfError::from)?;
        }
        let msf = MsfState::preprocess(sim, unit_g, alpha)?;
        let mut st = TwoEccState { msf, bridges: BTreeSet::new(), labels: Vec::new() };
        st.refresh(sim)?;
        Ok(st)
    }

    pub fn bridges(&self) -> &BTreeSet<EdgeId> {
        &self.bridges
    }

    pub fn labels(&self) -> &[TwoEccLabel] {
        &self.labels
    }

    pub fn graph(&self) -> &Graph {
        self.msf.graph()
    }

    pub fn forest(&self) -> Vec<WeightedEdge> {
        self.msf.forest().values().copied().collect()
    }

    pub fn process_batch(&mut self, sim: &mut Simulator, batch: &[UpdateOp]) -> Result<BridgeDelta, TwoEccError> {
        let unit_batch: Vec<UpdateOp> = batch.iter().map(unit).collect();
        self.msf.process_batch(sim, &unit_batch)?;
        let before = std::mem::take(&mut self.bridges);
        self.refresh(sim)?;
        Ok(BridgeDelta {
            added: self.bridges.difference(&before).copied().collect(),
            removed: before.difference(&self.bridges).copied().collect(),
        })
    }

    /// Draws fresh sketch parameters and recomputes bridges and labels.
    fn refresh(&mut self, sim: &mut Simulator) -> Result<(), TwoEccError> {
        let params = SketchParams::draw(self.graph().n(), sim.rng(0));
        self.rescan(sim, &params)
    }

    /// Recomputes bridges and labels under the given sketch parameters.
    pub fn rescan(&mut self, sim: &mut Simulator, params: &SketchParams) -> Result<(), TwoEccError> {
        let bridges = bridge_scan(sim, &self.msf, params)?;
        let marked: HashSet<EdgeId> = bridges.iter().copied().collect();
        self.labels = self.msf.top().label_by_marked(sim, &marked)?;
        self.bridges = bridges;
        Ok(())
    }
}

/// Forest edges whose lower subtree has a vanishing non-forest fingerprint.
pub fn bridge_scan(
    sim: &mut Simulator,
    msf: &MsfState,
    params: &SketchParams,
) -> Result<BTreeSet<EdgeId>, TwoEccError> {
    let machines = sim.machines();
    let g = msf.graph();
    let mut terms: Distributed<(VertexId, u64)> = vec![Vec::new(); machines];
    for e in g.edges() {
        if !msf.forest().contains_key(&e.eid) {
            let m = owner_of(&e.eid, machines);
            terms[m].push((e.u, params.term(e.eid, e.u)));
            terms[m].push((e.v, params.term(e.eid, e.v)));
        }
    }
    let summed = mpc_aggregate_by_key(sim, terms, |a, b| params.add(*a, *b))?;
    let mut labels = vec![0u64; g.n()];
    for (v, x) in summed.into_iter().flatten() {
        labels[v as usize] = x;
    }
    let top = msf.top();
    let sums = top.subtree_vertex_sums(sim, &Sums { params, labels: &labels })?;
    Ok(top.parent_edges().into_iter().filter(|(c, _)| sums[*c as usize] == 0).map(|(_, e)| e.eid).collect())
}
