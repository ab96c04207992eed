//! Batch-dynamic graph algorithms on a simulated massively parallel machine.
//!
//! * [`mpc`]: the synchronous round simulator and its collectives.
//! * [`toptree`]: b-ary top trees over a dynamic forest.
//! * [`msf`]: batch-dynamic minimum spanning forest.
//! * [`twoecc`]: bridges and 2-edge-connected components.
//! * [`matching`]: batch-dynamic maximal matching.
//! * [`cli`]: the `bdmpc` command.
//! * [`oracles`]: sequential reference implementations.

pub mod cli;
pub mod constants;
pub mod gen;
pub mod graph;
pub mod io;
pub mod matching;
pub mod mpc;
pub mod msf;
pub mod oracles;
pub mod toptree;
pub mod twoecc;
