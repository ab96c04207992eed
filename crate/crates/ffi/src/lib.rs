//! C ABI over the batch-dynamic MSF, 2-edge-connectivity and maximal
//! matching engines.
//!
//! Every engine lives behind an opaque handle created by a `*_new` function
//! and released by the matching `*_free`. Calls return a [`BdmpcStatus`];
//! results come back through out-pointers. The simulated cluster of a
//! handle is sized for up to `2m + 64` edges.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bdmpc::graph::{EdgeId, Graph, GraphError, UpdateOp, WeightedEdge};
use bdmpc::matching::{self, MatchingError, MatchingParams, MatchingState};
use bdmpc::mpc::{MpcConfig, Simulator};
use bdmpc::msf::{self, MsfError, MsfState};
use bdmpc::twoecc::{TwoEccError, TwoEccState};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdmpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidOp = 3,
    BatchTooLarge = 4,
    CapacityExceeded = 5,
    BufferTooSmall = 6,
    Violation = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdmpcEdge {
    pub u: u32,
    pub v: u32,
    pub w: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdmpcOpKind {
    Insert = 0,
    Delete = 1,
}

/// One update; `w` is ignored for deletions.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdmpcOp {
    pub kind: BdmpcOpKind,
    pub u: u32,
    pub v: u32,
    pub w: f64,
}

pub struct BdmpcMsf {
    sim: Simulator,
    state: MsfState,
}

pub struct BdmpcTwoEcc {
    sim: Simulator,
    state: TwoEccState,
}

pub struct BdmpcMatching {
    sim: Simulator,
    state: MatchingState,
}

impl From<GraphError> for BdmpcStatus {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::InvalidOp { .. } => BdmpcStatus::InvalidOp,
            _ => BdmpcStatus::InvalidArgument,
        }
    }
}

impl From<MsfError> for BdmpcStatus {
    fn from(e: MsfError) -> Self {
        match e {
            MsfError::Graph(g) => g.into(),
            MsfError::BatchTooLarge { .. } => BdmpcStatus::BatchTooLarge,
            MsfError::CapacityExceeded { .. } => BdmpcStatus::CapacityExceeded,
            _ => BdmpcStatus::Violation,
        }
    }
}

impl From<TwoEccError> for BdmpcStatus {
    fn from(e: TwoEccError) -> Self {
        match e {
            TwoEccError::Msf(m) => m.into(),
            TwoEccError::TooManyVertices { .. } => BdmpcStatus::InvalidArgument,
            _ => BdmpcStatus::Violation,
        }
    }
}

impl From<MatchingError> for BdmpcStatus {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::Graph(g) => g.into(),
            MatchingError::BatchTooLarge { .. } => BdmpcStatus::BatchTooLarge,
            MatchingError::CapacityExceeded { .. } => BdmpcStatus::CapacityExceeded,
            _ => BdmpcStatus::Violation,
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), BdmpcStatus>) -> BdmpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BdmpcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => BdmpcStatus::Panic,
    }
}

/// Borrows `len` items at `data`; a null pointer is allowed only when empty.
unsafe fn slice<'a, T>(data: *const T, len: usize) -> Result<&'a [T], BdmpcStatus> {
    if len == 0 {
        Ok(&[])
    } else if data.is_null() {
        Err(BdmpcStatus::NullPointer)
    } else {
        Ok(std::slice::from_raw_parts(data, len))
    }
}

unsafe fn build_graph(n: usize, edges: *const BdmpcEdge, m: usize) -> Result<Graph, BdmpcStatus> {
    let es: Vec<WeightedEdge> = slice(edges, m)?.iter().map(|e| WeightedEdge::new(e.u, e.v, e.w)).collect();
    Ok(Graph::from_edges(n, &es)?)
}

unsafe fn ops(data: *const BdmpcOp, k: usize) -> Result<Vec<UpdateOp>, BdmpcStatus> {
    Ok(slice(data, k)?
        .iter()
        .map(|o| match o.kind {
            BdmpcOpKind::Insert => UpdateOp::Insert { u: o.u, v: o.v, w: o.w },
            BdmpcOpKind::Delete => UpdateOp::Delete { u: o.u, v: o.v },
        })
        .collect())
}

fn simulator(n: usize, alpha: f64, words: usize, seed: u64) -> Result<Simulator, BdmpcStatus> {
    if !(alpha > 0.0 && alpha < 1.0) || n == 0 {
        return Err(BdmpcStatus::InvalidArgument);
    }
    let mut sim =
        Simulator::new(MpcConfig::for_input(n, alpha, words, seed)).map_err(|_| BdmpcStatus::InvalidArgument)?;
    sim.set_strict(true);
    Ok(sim)
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), BdmpcStatus> {
    if out.is_null() {
        return Err(BdmpcStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(h: *mut T) -> Result<&'a mut T, BdmpcStatus> {
    h.as_mut().ok_or(BdmpcStatus::NullPointer)
}

/// Copies `items` into `out[..cap]` and stores the count in `written`.
unsafe fn copy_out<T: Copy>(items: &[T], out: *mut T, cap: usize, written: *mut usize) -> Result<(), BdmpcStatus> {
    if written.is_null() {
        return Err(BdmpcStatus::NullPointer);
    }
    *written = items.len();
    if items.len() > cap {
        return Err(BdmpcStatus::BufferTooSmall);
    }
    if !items.is_empty() {
        if out.is_null() {
            return Err(BdmpcStatus::NullPointer);
        }
        ptr::copy_nonoverlapping(items.as_ptr(), out, items.len());
    }
    Ok(())
}

fn c_edge(e: &WeightedEdge) -> BdmpcEdge {
    BdmpcEdge { u: e.u, v: e.v, w: e.w.0 }
}

fn id_edge(e: EdgeId) -> BdmpcEdge {
    let (u, v) = e.endpoints();
    BdmpcEdge { u, v, w: 1.0 }
}

/// Static description of `status`.
#[no_mangle]
pub extern "C" fn bdmpc_status_message(status: BdmpcStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        BdmpcStatus::Ok => b"ok\0",
        BdmpcStatus::NullPointer => b"null pointer\0",
        BdmpcStatus::InvalidArgument => b"invalid argument\0",
        BdmpcStatus::InvalidOp => b"invalid update\0",
        BdmpcStatus::BatchTooLarge => b"batch too large\0",
        BdmpcStatus::CapacityExceeded => b"input exceeds total memory\0",
        BdmpcStatus::BufferTooSmall => b"buffer too small\0",
        BdmpcStatus::Violation => b"simulator violation\0",
        BdmpcStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Builds the minimum spanning forest of `n` vertices and `m` edges.
///
/// # Safety
/// `edges` points to `m` edges (or is null with `m == 0`); `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_msf_new(
    n: usize,
    edges: *const BdmpcEdge,
    m: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut BdmpcMsf,
) -> BdmpcStatus {
    guard(|| {
        let g = build_graph(n, edges, m)?;
        let mut sim = simulator(n, alpha, msf::input_words(n, 2 * m + 64), seed)?;
        let state = MsfState::preprocess(&mut sim, g, alpha)?;
        write_out(out, BdmpcMsf { sim, state })
    })
}

/// Applies a batch of `k` updates.
///
/// # Safety
/// `h` comes from [`bdmpc_msf_new`]; `batch` points to `k` ops.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_msf_apply(h: *mut BdmpcMsf, batch: *const BdmpcOp, k: usize) -> BdmpcStatus {
    guard(|| {
        let h = handle(h)?;
        let b = ops(batch, k)?;
        h.state.process_batch(&mut h.sim, &b)?;
        Ok(())
    })
}

/// Copies the forest edges, ordered by edge id, into `out[..cap]`.
///
/// # Safety
/// `h` is a live handle; `out` has room for `cap` edges; `written` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_msf_forest(
    h: *const BdmpcMsf,
    out: *mut BdmpcEdge,
    cap: usize,
    written: *mut usize,
) -> BdmpcStatus {
    guard(|| {
        let h = h.as_ref().ok_or(BdmpcStatus::NullPointer)?;
        let es: Vec<BdmpcEdge> = h.state.forest().values().map(c_edge).collect();
        copy_out(&es, out, cap, written)
    })
}

/// Simulated rounds so far, preprocessing included.
///
/// # Safety
/// `h` is a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn bdmpc_msf_rounds(h: *const BdmpcMsf) -> u64 {
    h.as_ref().map_or(0, |h| h.sim.metrics().rounds as u64)
}

/// # Safety
/// `h` comes from [`bdmpc_msf_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_msf_free(h: *mut BdmpcMsf) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Builds the bridge and 2-edge-connected component structure; weights are
/// ignored.
///
/// # Safety
/// As [`bdmpc_msf_new`].
#[no_mangle]
pub unsafe extern "C" fn bdmpc_twoecc_new(
    n: usize,
    edges: *const BdmpcEdge,
    m: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut BdmpcTwoEcc,
) -> BdmpcStatus {
    guard(|| {
        let g = build_graph(n, edges, m)?;
        let mut sim = simulator(n, alpha, msf::input_words(n, 2 * m + 64), seed)?;
        let state = TwoEccState::preprocess(&mut sim, &g, alpha)?;
        write_out(out, BdmpcTwoEcc { sim, state })
    })
}

/// # Safety
/// `h` comes from [`bdmpc_twoecc_new`]; `batch` points to `k` ops.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_twoecc_apply(h: *mut BdmpcTwoEcc, batch: *const BdmpcOp, k: usize) -> BdmpcStatus {
    guard(|| {
        let h = handle(h)?;
        let b = ops(batch, k)?;
        h.state.process_batch(&mut h.sim, &b)?;
        Ok(())
    })
}

/// Copies the current bridges into `out[..cap]`, with `w = 1`.
///
/// # Safety
/// As [`bdmpc_msf_forest`].
#[no_mangle]
pub unsafe extern "C" fn bdmpc_twoecc_bridges(
    h: *const BdmpcTwoEcc,
    out: *mut BdmpcEdge,
    cap: usize,
    written: *mut usize,
) -> BdmpcStatus {
    guard(|| {
        let h = h.as_ref().ok_or(BdmpcStatus::NullPointer)?;
        let es: Vec<BdmpcEdge> = h.state.bridges().iter().map(|&e| id_edge(e)).collect();
        copy_out(&es, out, cap, written)
    })
}

/// Stores whether `u` and `v` are 2-edge-connected.
///
/// # Safety
/// `h` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_twoecc_connected(h: *const BdmpcTwoEcc, u: u32, v: u32, out: *mut bool) -> BdmpcStatus {
    guard(|| {
        let h = h.as_ref().ok_or(BdmpcStatus::NullPointer)?;
        let labels = h.state.labels();
        let (a, b) = (labels.get(u as usize), labels.get(v as usize));
        let (Some(a), Some(b)) = (a, b) else {
            return Err(BdmpcStatus::InvalidArgument);
        };
        *out.as_mut().ok_or(BdmpcStatus::NullPointer)? = a == b;
        Ok(())
    })
}

/// # Safety
/// `h` comes from [`bdmpc_twoecc_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_twoecc_free(h: *mut BdmpcTwoEcc) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Builds a maximal matching; weights are ignored.
///
/// # Safety
/// As [`bdmpc_msf_new`].
#[no_mangle]
pub unsafe extern "C" fn bdmpc_matching_new(
    n: usize,
    edges: *const BdmpcEdge,
    m: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut BdmpcMatching,
) -> BdmpcStatus {
    guard(|| {
        let g = build_graph(n, edges, m)?;
        let mut sim = simulator(n, alpha, matching::input_words(n, 2 * m + 64), seed)?;
        let state = MatchingState::preprocess(&mut sim, g, MatchingParams::default())?;
        write_out(out, BdmpcMatching { sim, state })
    })
}

/// # Safety
/// `h` comes from [`bdmpc_matching_new`]; `batch` points to `k` ops.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_matching_apply(h: *mut BdmpcMatching, batch: *const BdmpcOp, k: usize) -> BdmpcStatus {
    guard(|| {
        let h = handle(h)?;
        let b = ops(batch, k)?;
        h.state.process_batch(&mut h.sim, &b)?;
        Ok(())
    })
}

/// Stores the mate of `v`, or -1 when `v` is unmatched.
///
/// # Safety
/// `h` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_matching_mate(h: *const BdmpcMatching, v: u32, out: *mut i64) -> BdmpcStatus {
    guard(|| {
        let h = h.as_ref().ok_or(BdmpcStatus::NullPointer)?;
        if v as usize >= h.state.graph().n() {
            return Err(BdmpcStatus::InvalidArgument);
        }
        *out.as_mut().ok_or(BdmpcStatus::NullPointer)? = h.state.mate(v).map_or(-1, i64::from);
        Ok(())
    })
}

/// Copies the matched edges into `out[..cap]`, with `w = 1`.
///
/// # Safety
/// As [`bdmpc_msf_forest`].
#[no_mangle]
pub unsafe extern "C" fn bdmpc_matching_edges(
    h: *const BdmpcMatching,
    out: *mut BdmpcEdge,
    cap: usize,
    written: *mut usize,
) -> BdmpcStatus {
    guard(|| {
        let h = h.as_ref().ok_or(BdmpcStatus::NullPointer)?;
        let es: Vec<BdmpcEdge> = h.state.matching().into_iter().map(id_edge).collect();
        copy_out(&es, out, cap, written)
    })
}

/// # Safety
/// `h` comes from [`bdmpc_matching_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bdmpc_matching_free(h: *mut BdmpcMatching) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bdmpc::graph::canonical_eid;

    #[test]
    fn status_messages_are_terminated() {
        for s in [BdmpcStatus::Ok, BdmpcStatus::Violation, BdmpcStatus::Panic] {
            let c = unsafe { std::ffi::CStr::from_ptr(bdmpc_status_message(s)) };
            assert!(!c.to_bytes().is_empty());
        }
    }

    #[test]
    fn eid_edges_are_canonical() {
        let e = id_edge(canonical_eid(7, 3));
        assert_eq!((e.u, e.v), (3, 7));
    }
}
