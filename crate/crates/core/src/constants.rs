//! Frozen tuning constants.

/// Per-superstep message cap as a multiple of local memory.
pub const C_MSG: usize = 4;
/// Local memory in words is `MEM_FACTOR * ceil(n^alpha)`.
pub const MEM_FACTOR: usize = 512;
/// Total memory is `C_TOTAL` times the input size.
pub const C_TOTAL: usize = 8;
/// Top-tree internal arity lies in `[b, C_ARITY * b]`.
pub const C_ARITY: usize = 4;
/// A tree's root may hold up to `C_ROOT_ARITY * b` children.
pub const C_ROOT_ARITY: usize = 16;
/// Attempts of the top-tree repair before it gives up.
pub const REPAIR_RETRIES: usize = 64;

/// Matching thresholds as exponents of the degree bound.
pub const MM_GROUP_EXP: f64 = 0.1;
pub const MM_STAGE1_SAMPLE_EXP: f64 = 0.85;
pub const MM_STAGE2_SAMPLE_EXP: f64 = 0.99;
pub const MM_HIGH_DEGREE_EXP: f64 = 0.999;
pub const MM_GATHER_EXP: f64 = 0.991;
pub const MM_REPETITION_EXP: f64 = 0.05;
pub const MM_REPETITION_TRIGGER_EXP: f64 = 0.1;
pub const MM_DELTA: f64 = 0.2;
/// Phase budget `MM_PHASE_C * log2(1 / delta)`, fitted once at delta = 0.2.
pub const MM_PHASE_C: f64 = 4.0;
/// Phases attempted before the matching gives up.
pub const MM_MAX_PHASES: usize = 64;
