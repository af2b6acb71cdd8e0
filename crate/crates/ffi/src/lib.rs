//! C ABI over the hardcore toolkit.
//!
//! Every fallible call returns an [`HcStatus`]; on failure the message is
//! kept per thread and can be fetched with [`hc_last_error`]. Graphs are
//! opaque handles owned by the caller and released with [`hc_graph_free`].
//! Panics never cross the boundary; they surface as `HC_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hardcore::error::Error;
use hardcore::gadgets::{self, io as gio, GadgetSpec, Graph};
use hardcore::measure::{self, Init};
use hardcore::reduction;
use hardcore::treegibbs::{self, ModelParams};
use num_traits::ToPrimitive;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    HcOk = 0,
    HcNullPointer = 1,
    HcInvalidUtf8 = 2,
    HcDomain = 3,
    HcConvergence = 4,
    HcParse = 5,
    HcInput = 6,
    HcResource = 7,
    HcCapacity = 8,
    HcConsistency = 9,
    HcBufferTooSmall = 10,
    HcPanic = 11,
}

/// Fixed points of the two-step tree recursion.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HcFixedPoints {
    pub d: u32,
    pub lambda: f64,
    pub lambda_c: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_star: f64,
    pub residual: f64,
}

/// Opaque graph handle.
pub struct HcGraph {
    g: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HcStatus {
    match e {
        Error::Domain(_) | Error::IntervalDomain(_) => HcStatus::HcDomain,
        Error::Convergence { .. } => HcStatus::HcConvergence,
        Error::Parse { .. } => HcStatus::HcParse,
        Error::Input(_) => HcStatus::HcInput,
        Error::Resource(_) => HcStatus::HcResource,
        Error::Capacity(_) => HcStatus::HcCapacity,
        Error::Consistency(_) => HcStatus::HcConsistency,
    }
}

struct Fail(HcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            HcStatus::HcOk
        }
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HcStatus::HcPanic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(HcStatus::HcNullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(HcStatus::HcInvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn graph_ref<'a>(g: *const HcGraph) -> Result<&'a Graph, Fail> {
    g.as_ref().map(|h| &h.g).ok_or_else(|| null("graph"))
}

/// Copy `s` plus a NUL into `buf`. `needed` (if non-null) receives the
/// required size including the NUL; a short buffer gives HC_BUFFER_TOO_SMALL.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    let need = s.len() + 1;
    if let Some(n) = needed.as_mut() {
        *n = need;
    }
    if buf.is_null() || len < need {
        return Err(Fail(HcStatus::HcBufferTooSmall, format!("buffer needs {need} bytes, got {len}")));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread (empty after success).
/// Returns the size needed including the NUL; copies when `len` suffices.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let need = e.len() + 1;
        if !buf.is_null() && len >= need {
            std::ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, e.len());
            *buf.add(e.len()) = 0;
        }
        need
    })
}

/// Solve the tree fixed points for degree `d` and fugacity `lambda`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_fixed_points(d: u32, lambda: f64, tol: f64, out: *mut HcFixedPoints) -> HcStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let fp = treegibbs::solve_fixed_points(ModelParams::new(d, lambda)?, tol)?;
        *out = HcFixedPoints {
            d,
            lambda,
            lambda_c: fp.lambda_c,
            q_plus: fp.q_plus,
            q_minus: fp.q_minus,
            p_plus: fp.p_plus,
            p_minus: fp.p_minus,
            p_star: fp.p_star,
            residual: fp.residual,
        };
        Ok(())
    })
}

/// The per-cut-edge ratio ((1-q⁺q⁻)²/((1-(q⁺)²)(1-(q⁻)²))).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_cut_ratio(d: u32, lambda: f64, out: *mut f64) -> HcStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let fp = treegibbs::solve_fixed_points(ModelParams::new(d, lambda)?, 1e-15)?;
        *out = reduction::cut_ratio(&fp);
        Ok(())
    })
}

/// Parse a graph from its text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_from_text(text: *const c_char, out: *mut *mut HcGraph) -> HcStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let g = gio::from_text(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(HcGraph { g }));
        Ok(())
    })
}

/// Sample a gadget with `m` trees of depth `depth` per side, or the
/// tree-less bipartite part when `tilde` is non-zero.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_sample_gadget(
    n: usize,
    m: usize,
    depth: u32,
    d: u32,
    seed: u64,
    tilde: i32,
    out: *mut *mut HcGraph,
) -> HcStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let spec = GadgetSpec::with_sizes(n, m, depth, d, seed)?;
        let g = if tilde != 0 { gadgets::sample_gtilde(&spec) } else { gadgets::sample_gadget(&spec)? };
        *out = Box::into_raw(Box::new(HcGraph { g }));
        Ok(())
    })
}

/// Release a graph; null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_free(g: *mut HcGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle or null (which gives 0).
#[no_mangle]
pub unsafe extern "C" fn hc_graph_num_vertices(g: *const HcGraph) -> usize {
    g.as_ref().map_or(0, |h| h.g.len())
}

/// # Safety
/// `g` must be a live handle or null (which gives 0).
#[no_mangle]
pub unsafe extern "C" fn hc_graph_num_edges(g: *const HcGraph) -> usize {
    g.as_ref().map_or(0, |h| h.g.edge_count())
}

/// Serialise to the text format.
///
/// # Safety
/// `g` must be a live handle; `buf` null or `len` writable bytes; `needed` null or valid.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_to_text(g: *const HcGraph, buf: *mut c_char, len: usize, needed: *mut usize) -> HcStatus {
    guard(|| copy_out(&gio::to_text(graph_ref(g)?), buf, len, needed))
}

/// Exact partition function at rational fugacity `lambda` ("p/q", integer
/// or decimal). The exact value goes to `buf` as "p/q" text, a float
/// approximation to `approx`.
///
/// # Safety
/// Pointers as for [`hc_graph_to_text`]; `lambda` NUL-terminated; `approx` null or valid.
#[no_mangle]
pub unsafe extern "C" fn hc_partition_function(
    g: *const HcGraph,
    lambda: *const c_char,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
    approx: *mut f64,
) -> HcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let lam = hardcore::cli::parse_rational(str_arg(lambda, "lambda")?).map_err(|m| Fail(HcStatus::HcInput, m))?;
        let z = measure::exact_partition(g, &lam)?;
        if let Some(a) = approx.as_mut() {
            *a = z.to_f64().unwrap_or(f64::NAN);
        }
        copy_out(&z.to_string(), buf, len, needed)
    })
}

/// Run heat-bath Glauber dynamics and report the fraction of sweeps in
/// the + phase. `init`: 0 empty, 1 all W+ occupied, 2 all W- occupied.
///
/// # Safety
/// `g` must be a live handle and `plus_fraction` valid.
#[no_mangle]
pub unsafe extern "C" fn hc_glauber_plus_fraction(
    g: *const HcGraph,
    lambda: f64,
    sweeps: usize,
    init: i32,
    seed: u64,
    plus_fraction: *mut f64,
) -> HcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let out = out_ref(plus_fraction, "plus_fraction")?;
        let init = match init {
            0 => Init::Empty,
            1 => Init::Plus,
            2 => Init::Minus,
            x => return Err(Fail(HcStatus::HcInput, format!("unknown init {x}"))),
        };
        let t = measure::glauber_run(g, lambda, sweeps, &init, seed)?;
        *out = t.plus_fraction(0);
        Ok(())
    })
}
