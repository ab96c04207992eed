use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Direction, MpcError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Memory { round: usize, machine: usize, words: usize, limit: usize },
    MessageCap { round: usize, machine: usize, direction: Direction, words: usize, cap: usize },
    Other { message: String },
}

impl From<&MpcError> for Violation {
    fn from(e: &MpcError) -> Self {
        match *e {
            MpcError::MemoryViolation { round, machine, words, limit } => {
                Violation::Memory { round, machine, words, limit }
            }
            MpcError::MessageCapViolation { round, machine, direction, words, cap } => {
                Violation::MessageCap { round, machine, direction, words, cap }
            }
            ref other => Violation::Other { message: other.to_string() },
        }
    }
}

/// Cost counters accumulated by the simulator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub rounds: usize,
    pub max_sent: usize,
    pub max_received: usize,
    pub peak_words: usize,
    pub total_words: usize,
    pub violations: Vec<Violation>,
    /// Named event counters, e.g. top-tree repair restarts.
    pub counters: BTreeMap<String, u64>,
}

impl RoundMetrics {
    pub fn bump(&mut self, name: &str, by: u64) {
        *self.counters.entry(name.to_string()).or_default() += by;
    }

    /// Folds `other` into `self`: rounds and totals add, maxima combine.
    pub fn absorb(&mut self, other: &RoundMetrics) {
        self.rounds += other.rounds;
        self.total_words += other.total_words;
        self.max_sent = self.max_sent.max(other.max_sent);
        self.max_received = self.max_received.max(other.max_received);
        self.peak_words = self.peak_words.max(other.peak_words);
        self.violations.extend(other.violations.iter().cloned());
        for (k, v) in &other.counters {
            *self.counters.entry(k.clone()).or_default() += v;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialise")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rounds {}", self.rounds);
        let _ = writeln!(s, "max_sent {}", self.max_sent);
        let _ = writeln!(s, "max_received {}", self.max_received);
        let _ = writeln!(s, "peak_words {}", self.peak_words);
        let _ = writeln!(s, "total_words {}", self.total_words);
        let _ = writeln!(s, "violations {}", self.violations.len());
        for (k, v) in &self.counters {
            let _ = writeln!(s, "{k} {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absorb_adds_rounds_and_maxes_peaks() {
        let mut a = RoundMetrics { rounds: 3, peak_words: 10, ..Default::default() };
        let mut b = RoundMetrics { rounds: 4, peak_words: 7, ..Default::default() };
        b.bump("x", 2);
        a.absorb(&b);
        assert_eq!((a.rounds, a.peak_words, a.counters["x"]), (7, 10, 2));
        let back: RoundMetrics = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}
