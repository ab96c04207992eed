//! A deterministic, synchronous MPC simulator.
//!
//! `M` machines hold at most `S` words each. Computation proceeds in
//! supersteps: every machine reads its inbox, computes locally and emits
//! messages; the barrier then delivers them. A machine may send and receive at
//! most `message_cap` words per superstep, and the words it stores plus the
//! words it receives must stay within `S`. Inboxes are ordered by
//! `(source machine, sequence number)` so runs are reproducible for a fixed
//! seed.

mod collectives;
mod metrics;

pub use collectives::{all_to_all, broadcast, gather_to, mpc_aggregate_by_key, mpc_sort, owner_of, Distributed};
pub use metrics::{RoundMetrics, Violation};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{C_MSG, C_TOTAL, MEM_FACTOR};

/// Number of 64-bit words a value occupies on a machine or in a message.
pub trait WordSized {
    fn words(&self) -> usize;
}

macro_rules! one_word {
    ($($t:ty),*) => { $(impl WordSized for $t { fn words(&self) -> usize { 1 } })* };
}
one_word!(u8, u16, u32, u64, usize, i32, i64, f64, bool, crate::graph::EdgeId, crate::graph::Weight);

impl WordSized for () {
    fn words(&self) -> usize {
        0
    }
}
impl<A: WordSized, B: WordSized> WordSized for (A, B) {
    fn words(&self) -> usize {
        self.0.words() + self.1.words()
    }
}
impl<A: WordSized, B: WordSized, C: WordSized> WordSized for (A, B, C) {
    fn words(&self) -> usize {
        self.0.words() + self.1.words() + self.2.words()
    }
}
impl<T: WordSized> WordSized for Vec<T> {
    fn words(&self) -> usize {
        self.iter().map(WordSized::words).sum()
    }
}
impl<T: WordSized> WordSized for Option<T> {
    fn words(&self) -> usize {
        self.as_ref().map_or(1, WordSized::words)
    }
}
impl WordSized for crate::graph::WeightedEdge {
    fn words(&self) -> usize {
        3
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub machines: usize,
    /// Local memory `S` in words.
    pub words_per_machine: usize,
    /// Per-superstep send and receive limit in words.
    pub message_cap: usize,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpcError {
    #[error("machine {machine} holds {words} words in round {round}, limit {limit}")]
    MemoryViolation { round: usize, machine: usize, words: usize, limit: usize },
    #[error("machine {machine} {direction} {words} words in round {round}, cap {cap}")]
    MessageCapViolation { round: usize, machine: usize, direction: Direction, words: usize, cap: usize },
    #[error("message to machine {dst} but only {machines} machines exist")]
    BadDestination { dst: usize, machines: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Sent,
    Received,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Sent => "sent",
            Direction::Received => "received",
        })
    }
}

/// `ceil(n^alpha)`, the scale parameter that batch limits and top-tree
/// arity are derived from.
pub fn scale(n: usize, alpha: f64) -> usize {
    let x = (n.max(2) as f64).powf(alpha);
    // Guard against 31.999999 style rounding from powf.
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl MpcConfig {
    pub fn new(machines: usize, words_per_machine: usize, seed: u64) -> Self {
        MpcConfig { machines, words_per_machine, message_cap: C_MSG * words_per_machine, seed }
    }

    /// Sizes the cluster for an input of `input_words` on `n` vertices:
    /// `S = MEM_FACTOR * ceil(n^alpha)` and enough machines for `C_TOTAL`
    /// times the input.
    pub fn for_input(n: usize, alpha: f64, input_words: usize, seed: u64) -> Self {
        let s = MEM_FACTOR * scale(n, alpha);
        let machines = (C_TOTAL * input_words).div_ceil(s).max(2);
        MpcConfig::new(machines, s, seed)
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        if self.machines == 0 {
            return Err(MpcError::Config("no machines".into()));
        }
        if self.words_per_machine == 0 {
            return Err(MpcError::Config("zero local memory".into()));
        }
        if self.message_cap == 0 {
            return Err(MpcError::Config("zero message cap".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope<P> {
    pub src: usize,
    pub seq: u32,
    pub payload: P,
}

/// Per-machine outgoing messages for one superstep, indexed by source.
pub type Outboxes<P> = Vec<Vec<(usize, P)>>;
/// Per-machine delivered messages, indexed by destination.
pub type Inboxes<P> = Vec<Vec<Envelope<P>>>;

/// A per-machine program for [`Simulator::run_superstep`].
pub trait MachineProgram {
    type State: WordSized;
    type Msg: WordSized;
    fn step(
        &self,
        machine: usize,
        state: &mut Self::State,
        inbox: Vec<Envelope<Self::Msg>>,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<(usize, Self::Msg)>,
    );
}

pub struct Simulator {
    cfg: MpcConfig,
    resident: Vec<usize>,
    rngs: Vec<ChaCha8Rng>,
    metrics: RoundMetrics,
    strict: bool,
}

pub(crate) fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic RNG for a (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream)))
}

impl Simulator {
    pub fn new(cfg: MpcConfig) -> Result<Self, MpcError> {
        cfg.validate()?;
        let rngs = (0..cfg.machines).map(|i| stream_rng(cfg.seed, i as u64)).collect();
        Ok(Simulator { resident: vec![0; cfg.machines], rngs, metrics: RoundMetrics::default(), strict: true, cfg })
    }

    /// In lenient mode violations are recorded in the metrics instead of
    /// aborting the superstep.
    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn config(&self) -> &MpcConfig {
        &self.cfg
    }

    pub fn machines(&self) -> usize {
        self.cfg.machines
    }

    pub fn words_per_machine(&self) -> usize {
        self.cfg.words_per_machine
    }

    pub fn metrics(&self) -> &RoundMetrics {
        &self.metrics
    }

    pub fn take_metrics(&mut self) -> RoundMetrics {
        std::mem::take(&mut self.metrics)
    }

    pub fn bump(&mut self, counter: &str, by: u64) {
        self.metrics.bump(counter, by);
    }

    pub fn rng(&mut self, machine: usize) -> &mut ChaCha8Rng {
        &mut self.rngs[machine]
    }

    pub fn resident(&self, machine: usize) -> usize {
        self.resident[machine]
    }

    /// Adjusts the words stored on `machine` outside of message buffers.
    pub fn charge(&mut self, machine: usize, delta: isize) {
        let r = &mut self.resident[machine];
        *r = (*r as isize + delta).max(0) as usize;
        self.metrics.peak_words = self.metrics.peak_words.max(*r);
    }

    pub fn set_resident(&mut self, machine: usize, words: usize) {
        self.resident[machine] = words;
        self.metrics.peak_words = self.metrics.peak_words.max(words);
    }

    fn violate(&mut self, err: MpcError) -> Result<(), MpcError> {
        self.metrics.violations.push(Violation::from(&err));
        if self.strict {
            Err(err)
        } else {
            Ok(())
        }
    }

    /// Verifies that every machine's stored words fit. Used after local
    /// phases that grow state without communication.
    pub fn check_memory(&mut self) -> Result<(), MpcError> {
        let limit = self.cfg.words_per_machine;
        for machine in 0..self.cfg.machines {
            let words = self.resident[machine];
            if words > limit {
                let round = self.metrics.rounds;
                self.violate(MpcError::MemoryViolation { round, machine, words, limit })?;
            }
        }
        Ok(())
    }

    /// One superstep: delivers `outboxes[src]` and returns the inbox of every
    /// machine. Costs one round.
    pub fn exchange<P: WordSized>(&mut self, outboxes: Outboxes<P>) -> Result<Inboxes<P>, MpcError> {
        let m = self.cfg.machines;
        assert_eq!(outboxes.len(), m, "one outbox per machine");
        let round = self.metrics.rounds;
        self.metrics.rounds += 1;
        let cap = self.cfg.message_cap;
        let limit = self.cfg.words_per_machine;
        let mut inboxes: Inboxes<P> = (0..m).map(|_| Vec::new()).collect();
        let mut received = vec![0usize; m];
        for (src, out) in outboxes.into_iter().enumerate() {
            let mut sent = 0usize;
            for (seq, (dst, payload)) in out.into_iter().enumerate() {
                if dst >= m {
                    return Err(MpcError::BadDestination { dst, machines: m });
                }
                let w = payload.words();
                sent += w;
                received[dst] += w;
                inboxes[dst].push(Envelope { src, seq: seq as u32, payload });
            }
            self.metrics.max_sent = self.metrics.max_sent.max(sent);
            self.metrics.total_words += sent;
            if sent > cap {
                self.violate(MpcError::MessageCapViolation {
                    round,
                    machine: src,
                    direction: Direction::Sent,
                    words: sent,
                    cap,
                })?;
            }
        }
        for (machine, &recv) in received.iter().enumerate() {
            self.metrics.max_received = self.metrics.max_received.max(recv);
            if recv > cap {
                self.violate(MpcError::MessageCapViolation {
                    round,
                    machine,
                    direction: Direction::Received,
                    words: recv,
                    cap,
                })?;
            }
            let words = self.resident[machine] + recv;
            self.metrics.peak_words = self.metrics.peak_words.max(words);
            if words > limit {
                self.violate(MpcError::MemoryViolation { round, machine, words, limit })?;
            }
        }
        // Sources were visited in order and sequence numbers grow within a
        // source, so every inbox is already in canonical order.
        Ok(inboxes)
    }

    /// Runs `program` on every machine and delivers the produced messages.
    /// Stored words are taken from the program states.
    pub fn run_superstep<P: MachineProgram>(
        &mut self,
        program: &P,
        states: &mut [P::State],
        inboxes: Inboxes<P::Msg>,
    ) -> Result<Inboxes<P::Msg>, MpcError> {
        let m = self.cfg.machines;
        assert_eq!(states.len(), m);
        assert_eq!(inboxes.len(), m);
        let mut outboxes: Outboxes<P::Msg> = Vec::with_capacity(m);
        for (machine, inbox) in inboxes.into_iter().enumerate() {
            let mut out = Vec::new();
            program.step(machine, &mut states[machine], inbox, &mut self.rngs[machine], &mut out);
            outboxes.push(out);
        }
        for (machine, st) in states.iter().enumerate() {
            self.resident[machine] = st.words();
        }
        self.check_memory()?;
        self.exchange(outboxes)
    }

    pub fn empty_outboxes<P>(&self) -> Outboxes<P> {
        (0..self.cfg.machines).map(|_| Vec::new()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_rounds_exact_powers() {
        assert_eq!(scale(1024, 0.5), 32);
        assert_eq!(scale(2048, 0.5), 46);
        assert_eq!(scale(4096, 1.0 / 3.0), 16);
    }

    #[test]
    fn inbox_order_is_canonical() {
        let mut sim = Simulator::new(MpcConfig::new(3, 16, 1)).unwrap();
        let mut out = sim.empty_outboxes::<u64>();
        out[2].push((0, 20));
        out[1].push((0, 10));
        out[1].push((0, 11));
        let inbox = sim.exchange(out).unwrap();
        let got: Vec<(usize, u32, u64)> = inbox[0].iter().map(|e| (e.src, e.seq, e.payload)).collect();
        assert_eq!(got, vec![(1, 0, 10), (1, 1, 11), (2, 0, 20)]);
        assert_eq!(sim.metrics().rounds, 1);
    }

    #[test]
    fn cap_violation_is_reported() {
        let mut sim = Simulator::new(MpcConfig::new(2, 4, 1)).unwrap();
        let mut out = sim.empty_outboxes::<u64>();
        out[0] = (0..17).map(|i| (1, i)).collect();
        let err = sim.exchange(out).unwrap_err();
        assert!(matches!(
            err,
            MpcError::MessageCapViolation { machine: 0, direction: Direction::Sent, words: 17, cap: 16, .. }
        ));
    }

    #[test]
    fn lenient_mode_records() {
        let mut sim = Simulator::new(MpcConfig::new(2, 4, 1)).unwrap();
        sim.set_strict(false);
        sim.charge(1, 4);
        let mut out = sim.empty_outboxes::<u64>();
        out[0].push((1, 5));
        sim.exchange(out).unwrap();
        assert_eq!(sim.metrics().violations.len(), 1);
    }
}
