//! C ABI over the `pcag` library.
//!
//! Every fallible function returns a [`PcagStatus`]. On failure the message
//! is available from [`pcag_last_error`] on the same thread. Handles are
//! created by `*_new`/`*_build` functions and released with the matching
//! `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use pcag::aggregation::{analytic_loads, tradeoff_holds, Operation};
use pcag::io::intel_field;
use pcag::linalg::{compute_basis, InitPolicy, Matrix};
use pcag::topology::{RoutingTree, Sensor, SensorField, SensorId};
use pcag::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcagStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Disconnected = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Which network operation to charge.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcagOperation {
    /// Every reading routed to the sink.
    Default = 0,
    /// In-network aggregation of a `size`-element record.
    Aggregate = 1,
    /// Broadcast of `size` values from the sink.
    Feedback = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PcagTreeStats {
    pub sensors: usize,
    pub depth: usize,
    pub max_children: usize,
    /// Index of the node with the most children.
    pub argmax_children: usize,
}

/// Opaque sensor field.
pub struct PcagField(SensorField);

/// Opaque routing tree.
pub struct PcagTree(RoutingTree);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PcagStatus {
    match e {
        Error::Disconnected(_) => PcagStatus::Disconnected,
        Error::Io { .. } | Error::Csv(_) => PcagStatus::Io,
        Error::Degenerate(_) | Error::ZeroVector | Error::ZeroVariance | Error::NotSymmetric(_) => {
            PcagStatus::Numerical
        }
        _ => PcagStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), (PcagStatus, String)>>(f: F) -> PcagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcagStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside pcag".into());
            PcagStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PcagStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PcagStatus, String) {
    (PcagStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (PcagStatus, String) {
    (PcagStatus::InvalidArgument, msg.into())
}

unsafe fn input<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], (PcagStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], (PcagStatus, String)> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn pcag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn pcag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The bundled 52-sensor Intel lab layout rooted at sensor 16.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pcag_field_intel(out: *mut *mut PcagField) -> PcagStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(PcagField(intel_field())));
        Ok(())
    })
}

/// A field of `n` sensors with ids and coordinates in meters.
///
/// # Safety
/// `ids`, `x` and `y` must each point to `n` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcag_field_new(
    ids: *const u32,
    x: *const f64,
    y: *const f64,
    n: usize,
    root_id: u32,
    out: *mut *mut PcagField,
) -> PcagStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ids = input(ids, n, "ids")?;
        let x = input(x, n, "x")?;
        let y = input(y, n, "y")?;
        let sensors = (0..n)
            .map(|i| Sensor {
                id: SensorId(ids[i]),
                x: x[i],
                y: y[i],
            })
            .collect();
        let field = SensorField::new(sensors, SensorId(root_id)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PcagField(field)));
        Ok(())
    })
}

/// Number of sensors, 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcag_field_len(field: *const PcagField) -> usize {
    field.as_ref().map_or(0, |f| f.0.len())
}

/// Sensor ids in index order.
///
/// # Safety
/// `field` must be a live handle and `ids` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn pcag_field_ids(field: *const PcagField, ids: *mut u32, len: usize) -> PcagStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        if len != f.0.len() {
            return Err(invalid(format!("expected {} slots, got {len}", f.0.len())));
        }
        let out = output(ids, len, "ids")?;
        for (slot, id) in out.iter_mut().zip(f.0.ids()) {
            *slot = id.0;
        }
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcag_field_free(field: *mut PcagField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Shortest-hop routing tree over links of at most `radio_range` meters.
/// Fails with `Disconnected` when some sensor cannot reach the root.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcag_tree_build(
    field: *const PcagField,
    radio_range: f64,
    out: *mut *mut PcagTree,
) -> PcagStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if radio_range.is_nan() || radio_range <= 0.0 {
            return Err(invalid("radio range must be positive"));
        }
        let tree = RoutingTree::build(&f.0, radio_range).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PcagTree(tree)));
        Ok(())
    })
}

/// Parent index of every node, `-1` for the root.
///
/// # Safety
/// `tree` must be a live handle and `parents` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn pcag_tree_parents(tree: *const PcagTree, parents: *mut i64, len: usize) -> PcagStatus {
    guard(|| {
        let t = tree.as_ref().ok_or_else(|| null("tree"))?;
        if len != t.0.len() {
            return Err(invalid(format!("expected {} slots, got {len}", t.0.len())));
        }
        let out = output(parents, len, "parents")?;
        for (slot, p) in out.iter_mut().zip(t.0.parents()) {
            *slot = p.map_or(-1, |v| v as i64);
        }
        Ok(())
    })
}

/// # Safety
/// `tree` must be a live handle; `stats` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcag_tree_stats(tree: *const PcagTree, stats: *mut PcagTreeStats) -> PcagStatus {
    guard(|| {
        let t = tree.as_ref().ok_or_else(|| null("tree"))?;
        let s = stats.as_mut().ok_or_else(|| null("stats"))?;
        let st = t.0.stats();
        *s = PcagTreeStats {
            sensors: t.0.len(),
            depth: st.depth,
            max_children: st.max_children,
            argmax_children: st.argmax_children,
        };
        Ok(())
    })
}

/// Per-node packets received and transmitted for one operation.
/// `size` is the record or payload length and is ignored for `Default`.
///
/// # Safety
/// `tree` must be a live handle; `rx` and `tx` must each hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn pcag_tree_loads(
    tree: *const PcagTree,
    op: PcagOperation,
    size: usize,
    rx: *mut u64,
    tx: *mut u64,
    len: usize,
) -> PcagStatus {
    guard(|| {
        let t = tree.as_ref().ok_or_else(|| null("tree"))?;
        if len != t.0.len() {
            return Err(invalid(format!("expected {} slots, got {len}", t.0.len())));
        }
        let op = match op {
            PcagOperation::Default => Operation::Default,
            PcagOperation::Aggregate => Operation::Aggregate(size),
            PcagOperation::Feedback => Operation::Feedback(size),
        };
        let load = analytic_loads(&t.0, op);
        let rx = output(rx, len, "rx")?;
        let tx = output(tx, len, "tx")?;
        rx.copy_from_slice(&load.rx);
        tx.copy_from_slice(&load.tx);
        Ok(())
    })
}

/// # Safety
/// `tree` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcag_tree_free(tree: *mut PcagTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Whether aggregating `q` components never loads a node more than the default scheme.
#[no_mangle]
pub extern "C" fn pcag_tradeoff_holds(q: usize, max_children: usize, sensors: usize) -> bool {
    tradeoff_holds(q, max_children, sensors)
}

/// Leading eigenpairs of a symmetric `p x p` row-major matrix by power
/// iteration with deflation. Writes up to `q` eigenvalues and eigenvectors
/// (vector `k` at `vectors[k * p ..]`) and the number found to `found`,
/// which is smaller than `q` when a non-positive eigenvalue ends the run.
///
/// # Safety
/// `cov` must hold `p * p` elements, `values` `q`, `vectors` `q * p`;
/// `found` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pcag_compute_basis(
    cov: *const f64,
    p: usize,
    q: usize,
    delta: f64,
    t_max: usize,
    values: *mut f64,
    vectors: *mut f64,
    found: *mut usize,
) -> PcagStatus {
    guard(|| {
        if p == 0 || q == 0 || q > p {
            return Err(invalid(format!("need 1 <= q <= p, got q = {q}, p = {p}")));
        }
        let found = found.as_mut().ok_or_else(|| null("found"))?;
        let c = input(cov, p * p, "cov")?;
        let m = Matrix::from_row_major(p, p, c.to_vec()).map_err(lib_err)?;
        let basis = compute_basis(&m, q, delta, t_max, InitPolicy::Diagonal).map_err(lib_err)?;
        let vals = output(values, q, "values")?;
        let vecs = output(vectors, q * p, "vectors")?;
        for (k, pair) in basis.pairs().iter().enumerate() {
            vals[k] = pair.value;
            vecs[k * p..(k + 1) * p].copy_from_slice(&pair.vector);
        }
        *found = basis.len();
        Ok(())
    })
}
