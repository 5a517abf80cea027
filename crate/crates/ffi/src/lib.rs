//! C interface to the collabnet network metrics.
//!
//! Networks are opaque handles built through a builder. Every function
//! returns a `CnStatus`; on failure a message is kept per thread and can be
//! read with `cn_last_error_message`. Output arrays are caller allocated and
//! must hold at least `cn_network_node_count` entries, in node order (node
//! labels sorted ascending).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use collabnet::centrality::{
    betweenness, betweenness_centralization, degree_centrality, eigenvector_centrality, normalize_bc,
};
use collabnet::community::{communities, modularity_of_assignment};
use collabnet::paths::{bridging_fraction, BridgingMode};
use collabnet::structure::{clustering, global_efficiency, k_core};
use collabnet::timeseries::{bh_fdr, fit_restricted_unrestricted, first_difference, MetricSeries};
use collabnet::{CollabNetwork, Error, Slice};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownCountry = 3,
    TooSmall = 4,
    NumericFailure = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Collects edges before a network is built.
pub struct CnBuilder {
    edges: Vec<(String, String, f64)>,
}

/// An immutable weighted undirected network.
pub struct CnNetwork {
    net: CollabNetwork,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CnStatus, msg: impl Into<String>) -> CnStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> CnStatus {
    let status = match e {
        Error::UnknownCountry(_) => CnStatus::UnknownCountry,
        Error::TooSmall { .. } => CnStatus::TooSmall,
        Error::NoConvergence { .. } | Error::RankDeficient { .. } | Error::InsufficientSample { .. } => {
            CnStatus::NumericFailure
        }
        _ => CnStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> CnStatus) -> CnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == CnStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(CnStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, CnStatus> {
    if p.is_null() {
        return Err(fail(CnStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CnStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn network<'a>(n: *const CnNetwork) -> Result<&'a CollabNetwork, CnStatus> {
    n.as_ref()
        .map(|h| &h.net)
        .ok_or_else(|| fail(CnStatus::NullPointer, "null network"))
}

unsafe fn out_slice<'a, T>(out: *mut T, len: usize, needed: usize) -> Result<&'a mut [T], CnStatus> {
    if out.is_null() {
        return Err(fail(CnStatus::NullPointer, "null output buffer"));
    }
    if len < needed {
        return Err(fail(
            CnStatus::BufferTooSmall,
            format!("output buffer holds {len}, need {needed}"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(out, needed))
}

unsafe fn write<T>(out: *mut T, value: T) -> CnStatus {
    match out.as_mut() {
        Some(o) => {
            *o = value;
            CnStatus::Ok
        }
        None => fail(CnStatus::NullPointer, "null output pointer"),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! check {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn cn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[no_mangle]
pub extern "C" fn cn_builder_new() -> *mut CnBuilder {
    Box::into_raw(Box::new(CnBuilder { edges: Vec::new() }))
}

/// # Safety
/// `b` must come from `cn_builder_new` and not have been built or freed.
#[no_mangle]
pub unsafe extern "C" fn cn_builder_free(b: *mut CnBuilder) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Adds an undirected edge. Weights must be positive; duplicates are
/// rejected when the network is built.
///
/// # Safety
/// `b` must be a live builder; `a` and `c` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn cn_builder_add_edge(
    b: *mut CnBuilder,
    a: *const c_char,
    c: *const c_char,
    weight: f64,
) -> CnStatus {
    guard(|| {
        let Some(builder) = b.as_mut() else {
            return fail(CnStatus::NullPointer, "null builder");
        };
        let a = tri!(text(a));
        let c = tri!(text(c));
        builder.edges.push((a.to_string(), c.to_string(), weight));
        CnStatus::Ok
    })
}

/// Consumes the builder, whatever the outcome, and on success stores a new
/// network in `*out`.
///
/// # Safety
/// `b` must be a live builder; it is freed by this call.
#[no_mangle]
pub unsafe extern "C" fn cn_builder_build(b: *mut CnBuilder, out: *mut *mut CnNetwork) -> CnStatus {
    guard(|| {
        if b.is_null() {
            return fail(CnStatus::NullPointer, "null builder");
        }
        let builder = Box::from_raw(b);
        if out.is_null() {
            return fail(CnStatus::NullPointer, "null output pointer");
        }
        let net = check!(CollabNetwork::new(
            std::iter::empty::<String>(),
            builder.edges,
            Slice::default()
        ));
        *out = Box::into_raw(Box::new(CnNetwork { net }));
        CnStatus::Ok
    })
}

/// # Safety
/// `n` must come from `cn_builder_build` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cn_network_free(n: *mut CnNetwork) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

/// # Safety
/// `n` must be a live network and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_network_node_count(n: *const CnNetwork, out: *mut usize) -> CnStatus {
    guard(|| write(out, tri!(network(n)).node_count()))
}

/// # Safety
/// `n` must be a live network and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_network_edge_count(n: *const CnNetwork, out: *mut usize) -> CnStatus {
    guard(|| write(out, tri!(network(n)).edge_count()))
}

/// Copies the label of node `i` into `buf` with a trailing NUL. `needed`
/// receives the size required, including the NUL, even on BufferTooSmall.
///
/// # Safety
/// `buf` must hold `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn cn_network_node_label(
    n: *const CnNetwork,
    i: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        if i >= net.node_count() {
            return fail(CnStatus::InvalidArgument, format!("node {i} out of range"));
        }
        let label = net.label(i).as_bytes();
        if let Some(nd) = needed.as_mut() {
            *nd = label.len() + 1;
        }
        let dst = tri!(out_slice(buf as *mut u8, len, label.len() + 1));
        dst[..label.len()].copy_from_slice(label);
        dst[label.len()] = 0;
        CnStatus::Ok
    })
}

/// # Safety
/// `label` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_network_index_of(n: *const CnNetwork, label: *const c_char, out: *mut usize) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let label = tri!(text(label));
        write(out, check!(net.require(label)))
    })
}

/// Betweenness per node. `weighted` uses inverse-weight distances;
/// `normalized` divides by `(n-1)(n-2)/2`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cn_betweenness(
    n: *const CnNetwork,
    weighted: bool,
    normalized: bool,
    out: *mut f64,
    len: usize,
) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let dst = tri!(out_slice(out, len, net.node_count()));
        let mut v = check!(betweenness(net, weighted));
        if normalized {
            v = check!(normalize_bc(&v, net.node_count()));
        }
        dst.copy_from_slice(&v.scores);
        CnStatus::Ok
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_betweenness_centralization(n: *const CnNetwork, out: *mut f64) -> CnStatus {
    guard(|| write(out, check!(betweenness_centralization(tri!(network(n))))))
}

/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cn_degree_centrality(n: *const CnNetwork, out: *mut f64, len: usize) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let dst = tri!(out_slice(out, len, net.node_count()));
        dst.copy_from_slice(&check!(degree_centrality(net)).scores);
        CnStatus::Ok
    })
}

/// Principal eigenvector, L2-normalised. `eigenvalue` may be null.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cn_eigenvector_centrality(
    n: *const CnNetwork,
    tolerance: f64,
    max_iterations: usize,
    out: *mut f64,
    len: usize,
    eigenvalue: *mut f64,
) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let dst = tri!(out_slice(out, len, net.node_count()));
        let ev = check!(eigenvector_centrality(net, tolerance, max_iterations));
        dst.copy_from_slice(&ev.vector.scores);
        if let Some(e) = eigenvalue.as_mut() {
            *e = ev.eigenvalue;
        }
        CnStatus::Ok
    })
}

/// Core number per node; `max_k` may be null.
///
/// # Safety
/// `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn cn_core_numbers(n: *const CnNetwork, out: *mut u32, len: usize, max_k: *mut u32) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let dst = tri!(out_slice(out, len, net.node_count()));
        let k = k_core(net);
        for (d, &c) in dst.iter_mut().zip(&k.core_number) {
            *d = c as u32;
        }
        if let Some(m) = max_k.as_mut() {
            *m = k.max_k as u32;
        }
        CnStatus::Ok
    })
}

/// Local clustering per node; `average` may be null.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cn_clustering(n: *const CnNetwork, out: *mut f64, len: usize, average: *mut f64) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let dst = tri!(out_slice(out, len, net.node_count()));
        let c = clustering(net);
        dst.copy_from_slice(&c.local);
        if let Some(a) = average.as_mut() {
            *a = c.average;
        }
        CnStatus::Ok
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_global_efficiency(n: *const CnNetwork, out: *mut f64) -> CnStatus {
    guard(|| write(out, check!(global_efficiency(tri!(network(n))))))
}

/// Greedy modularity communities. `block` receives a community index per
/// node; `count` and `q` may be null.
///
/// # Safety
/// `block` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn cn_communities(
    n: *const CnNetwork,
    weighted: bool,
    block: *mut u32,
    len: usize,
    count: *mut usize,
    q: *mut f64,
) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let dst = tri!(out_slice(block, len, net.node_count()));
        let part = communities(net, weighted);
        for (b, members) in part.blocks.iter().enumerate() {
            for m in members {
                let i = net.index_of(m).expect("partition covers the network");
                dst[i] = b as u32;
            }
        }
        if let Some(c) = count.as_mut() {
            *c = part.len();
        }
        if let Some(qq) = q.as_mut() {
            *qq = part.q;
        }
        CnStatus::Ok
    })
}

/// Modularity of a caller-supplied assignment (one block index per node).
///
/// # Safety
/// `block` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn cn_modularity(
    n: *const CnNetwork,
    block: *const u32,
    len: usize,
    weighted: bool,
    out: *mut f64,
) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        if block.is_null() {
            return fail(CnStatus::NullPointer, "null block array");
        }
        if len != net.node_count() {
            return fail(CnStatus::InvalidArgument, format!("{len} blocks for {} nodes", net.node_count()));
        }
        let blocks: Vec<usize> = std::slice::from_raw_parts(block, len).iter().map(|&b| b as usize).collect();
        write(out, modularity_of_assignment(net, &blocks, weighted))
    })
}

/// Share of the source's shortest paths that pass through `via`.
/// `sigma_weighted` selects path-count weighting instead of any-path.
///
/// # Safety
/// Strings must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_bridging_fraction(
    n: *const CnNetwork,
    source: *const c_char,
    via: *const c_char,
    sigma_weighted: bool,
    out: *mut f64,
) -> CnStatus {
    guard(|| {
        let net = tri!(network(n));
        let s = tri!(text(source));
        let v = tri!(text(via));
        let mode = if sigma_weighted { BridgingMode::SigmaWeighted } else { BridgingMode::AnyPath };
        write(out, check!(bridging_fraction(net, s, v, mode)).fraction)
    })
}

/// Benjamini-Hochberg adjusted p-values, in input order.
///
/// # Safety
/// `p` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cn_bh_fdr(p: *const f64, len: usize, out: *mut f64) -> CnStatus {
    guard(|| {
        if p.is_null() {
            return fail(CnStatus::NullPointer, "null p-values");
        }
        let dst = tri!(out_slice(out, len, len));
        let adj = check!(bh_fdr(std::slice::from_raw_parts(p, len)));
        dst.copy_from_slice(&adj);
        CnStatus::Ok
    })
}

/// Granger F test of `x` on `y` at one lag. Both series are annual, start at
/// `first_year` and hold `len` values; they are first-differenced when
/// `difference` is set. `f_stat` may be null.
///
/// # Safety
/// `x` and `y` must hold `len` doubles; `p_value` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_granger_f_test(
    x: *const f64,
    y: *const f64,
    len: usize,
    first_year: i32,
    lag: usize,
    difference: bool,
    f_stat: *mut f64,
    p_value: *mut f64,
) -> CnStatus {
    guard(|| {
        if x.is_null() || y.is_null() {
            return fail(CnStatus::NullPointer, "null series");
        }
        let mut xs = MetricSeries::from_values("x", first_year, std::slice::from_raw_parts(x, len));
        let mut ys = MetricSeries::from_values("y", first_year, std::slice::from_raw_parts(y, len));
        if difference {
            xs = check!(first_difference(&xs));
            ys = check!(first_difference(&ys));
        }
        let fit = check!(fit_restricted_unrestricted(&ys, &xs, lag));
        if let Some(f) = f_stat.as_mut() {
            *f = fit.f_statistic;
        }
        write(p_value, fit.p_value)
    })
}
