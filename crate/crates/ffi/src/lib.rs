//! C ABI for the `continual-dp` library.
//!
//! Sequences and release results are exposed as opaque handles created by
//! `cdp_*_new`/`cdp_*_from_*` functions and released with the matching
//! `cdp_*_free`. Every fallible function returns a [`CdpStatus`]; on failure
//! a description is available from [`cdp_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use continual_dp::adversarial::{gen_event_level, parse_sigma, AdvError, GenParams, Target};
use continual_dp::diff::{diff_release, sensitivity_bound, Adjacency, ReleaseConfig, ReleaseError, Sensitivity};
use continual_dp::funcs::{FuncError, GraphFunction};
use continual_dp::graph::{GraphError, GraphSequence, Regime};
use continual_dp::monotone::{monotone_release, MonotoneConfig, MonotoneError};
use continual_dp::noise::RandomSource;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdpStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A parameter is outside its domain or a string is not valid UTF-8.
    InvalidArgument = 2,
    /// An update log could not be parsed or applied.
    InvalidSequence = 3,
    /// The statistic cannot be handled in the requested setting.
    Unsupported = 4,
    /// An index is out of range.
    OutOfRange = 5,
    /// Any other failure.
    Internal = 6,
}

/// Neighbouring relation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdpAdjacency {
    /// Edge-event adjacency.
    Edge = 0,
    /// Node-event adjacency.
    Node = 1,
}

/// Update regime.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdpRegime {
    /// Insertions only.
    Incremental = 0,
    /// Deletions only.
    Decremental = 1,
    /// Insertions and deletions.
    FullyDynamic = 2,
}

/// Release mechanism.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdpMechanism {
    /// Difference sequence through the binary mechanism.
    DiffRelease = 0,
    /// Sparse-vector based mechanism for monotone statistics.
    Monotone = 1,
}

/// Statistic selection. `tau`, `k`, `source` and `sink` are read only by the
/// statistics that need them.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CdpFunction {
    /// Statistic name, for example `"edge_count"`.
    pub name: *const c_char,
    /// Degree threshold of `high_degree`.
    pub tau: usize,
    /// Star size of `kstar_count`.
    pub k: usize,
    /// Source terminal of `st_min_cut`.
    pub source: u64,
    /// Sink terminal of `st_min_cut`.
    pub sink: u64,
}

/// Parameters of a release.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CdpReleaseParams {
    /// Mechanism to run.
    pub mechanism: CdpMechanism,
    /// Statistic to release.
    pub function: CdpFunction,
    /// Neighbouring relation (difference-sequence release only).
    pub adjacency: CdpAdjacency,
    /// Privacy parameter.
    pub epsilon: f64,
    /// Failure probability of the error bound.
    pub delta: f64,
    /// Multiplicative slack (monotone mechanism only).
    pub beta: f64,
    /// Range bound of the monotone mechanism; zero selects the default.
    pub range: f64,
    /// Declared maximum degree; zero means none.
    pub max_degree: usize,
    /// Seed of the random source.
    pub seed: u64,
    /// Disables all noise when true (testing aid).
    pub noise_off: bool,
}

/// Opaque graph sequence.
pub struct CdpSequence {
    inner: GraphSequence,
}

/// Opaque release result.
pub struct CdpRelease {
    truth: Vec<f64>,
    released: Vec<f64>,
    bound: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: CdpStatus, message: impl ToString) -> CdpStatus {
    let text = CString::new(message.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
    status
}

fn str_arg<'a>(p: *const c_char) -> Result<&'a str, CdpStatus> {
    if p.is_null() {
        return Err(fail(CdpStatus::NullPointer, "null string argument"));
    }
    // SAFETY: the caller passes a NUL-terminated string that outlives the call.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|e| fail(CdpStatus::InvalidArgument, e))
}

fn resolve_function(f: &CdpFunction) -> Result<GraphFunction, CdpStatus> {
    let name = str_arg(f.name)?;
    GraphFunction::parse(name, Some(f.tau), Some(f.k), Some((f.source, f.sink)))
        .map_err(|e| fail(CdpStatus::InvalidArgument, e))
}

fn graph_status(e: GraphError) -> CdpStatus {
    fail(CdpStatus::InvalidSequence, e)
}

fn func_status(e: FuncError) -> CdpStatus {
    match e {
        FuncError::SizeLimitExceeded { .. } => fail(CdpStatus::Unsupported, e),
        _ => fail(CdpStatus::InvalidArgument, e),
    }
}

fn release_status(e: ReleaseError) -> CdpStatus {
    match e {
        ReleaseError::UnboundedSensitivity(_) | ReleaseError::UnknownCombination(_) => {
            fail(CdpStatus::Unsupported, e)
        }
        ReleaseError::Graph(g) => graph_status(g),
        ReleaseError::Func(f) => func_status(f),
        ReleaseError::Count(_) => fail(CdpStatus::Internal, e),
        _ => fail(CdpStatus::InvalidArgument, e),
    }
}

fn monotone_status(e: MonotoneError) -> CdpStatus {
    match e {
        MonotoneError::NonMonotoneInput { .. } => fail(CdpStatus::Unsupported, e),
        MonotoneError::Graph(g) => graph_status(g),
        MonotoneError::Func(f) => func_status(f),
        MonotoneError::Noise(_) => fail(CdpStatus::Internal, e),
        _ => fail(CdpStatus::InvalidArgument, e),
    }
}

fn adv_status(e: AdvError) -> CdpStatus {
    match e {
        AdvError::Unsupported(_) => fail(CdpStatus::Unsupported, e),
        _ => fail(CdpStatus::InvalidArgument, e),
    }
}

fn store<T>(out: *mut *mut T, value: T) -> CdpStatus {
    // SAFETY: `out` was checked to be non-null by the caller of `store`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    CdpStatus::Ok
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(CdpStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

/// Description of the last error on this thread, or null if none. The
/// string stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an update log into a new sequence handle.
///
/// # Safety
/// `log` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_from_log(log: *const c_char, out: *mut *mut CdpSequence) -> CdpStatus {
    non_null!(out);
    let text = try_status!(str_arg(log));
    let inner = try_status!(GraphSequence::from_log(text).map_err(graph_status));
    try_status!(inner.materialize().map_err(graph_status));
    store(out, CdpSequence { inner })
}

/// Builds the lower-bound sequence of `target` (for example `"mst-edge"`)
/// encoding the bit string `sigma` (for example `"101"`).
///
/// # Safety
/// `target` and `sigma` must be NUL-terminated strings and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_generate(
    target: *const c_char,
    sigma: *const c_char,
    weight: u32,
    out: *mut *mut CdpSequence,
) -> CdpStatus {
    non_null!(out);
    let target: Target = try_status!(try_status!(str_arg(target)).parse().map_err(adv_status));
    let bits = try_status!(parse_sigma(try_status!(str_arg(sigma))).map_err(adv_status));
    let params = GenParams {
        weight,
        ..GenParams::default()
    };
    let g = try_status!(gen_event_level(target, &bits, &params).map_err(adv_status));
    store(out, CdpSequence { inner: g.sequence })
}

/// Frees a sequence handle. Null is ignored.
///
/// # Safety
/// `seq` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_free(seq: *mut CdpSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Number of update steps `T`.
///
/// # Safety
/// `seq` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_len(seq: *const CdpSequence, out: *mut usize) -> CdpStatus {
    non_null!(seq, out);
    *out = (*seq).inner.len();
    CdpStatus::Ok
}

/// Serializes a sequence to the update-log format. The returned string must
/// be freed with [`cdp_string_free`].
///
/// # Safety
/// `seq` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_to_log(seq: *const CdpSequence, out: *mut *mut c_char) -> CdpStatus {
    non_null!(seq, out);
    let text = try_status!(CString::new((*seq).inner.to_log()).map_err(|e| fail(CdpStatus::Internal, e)));
    *out = text.into_raw();
    CdpStatus::Ok
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cdp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Exact value of a scalar statistic at step `t` (`0` is the initial graph).
/// For the degree histogram the value is the count of degree-2 nodes.
///
/// # Safety
/// `seq` must be a live handle, `function` valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_eval(
    seq: *const CdpSequence,
    function: *const CdpFunction,
    t: usize,
    out: *mut f64,
) -> CdpStatus {
    non_null!(seq, function, out);
    let f = try_status!(resolve_function(&*function));
    let s = &(*seq).inner;
    if t > s.len() {
        return fail(CdpStatus::OutOfRange, format!("step {t} exceeds horizon {}", s.len()));
    }
    let graphs = try_status!(s.materialize().map_err(graph_status));
    let g = if t == 0 { &s.initial } else { &graphs[t - 1] };
    *out = try_status!(f.eval_scalar(g).map_err(func_status));
    CdpStatus::Ok
}

/// Tabulated difference-sequence sensitivity. Unbounded cells write
/// `INFINITY` and return `Ok`; unknown combinations return `Unsupported`.
/// `max_degree` zero means no declared degree.
///
/// # Safety
/// `function` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_sensitivity_bound(
    function: *const CdpFunction,
    adjacency: CdpAdjacency,
    regime: CdpRegime,
    max_degree: usize,
    max_weight: u32,
    out: *mut f64,
) -> CdpStatus {
    non_null!(function, out);
    let f = try_status!(resolve_function(&*function));
    let d = (max_degree > 0).then_some(max_degree);
    let bound = try_status!(
        sensitivity_bound(&f, adjacency.into(), regime.into(), d, max_weight).map_err(release_status)
    );
    *out = match bound {
        Sensitivity::Finite(v) => v,
        Sensitivity::Unbounded => f64::INFINITY,
    };
    CdpStatus::Ok
}

impl From<CdpAdjacency> for Adjacency {
    fn from(a: CdpAdjacency) -> Self {
        match a {
            CdpAdjacency::Edge => Adjacency::Edge,
            CdpAdjacency::Node => Adjacency::Node,
        }
    }
}

impl From<CdpRegime> for Regime {
    fn from(r: CdpRegime) -> Self {
        match r {
            CdpRegime::Incremental => Regime::Incremental,
            CdpRegime::Decremental => Regime::Decremental,
            CdpRegime::FullyDynamic => Regime::FullyDynamic,
        }
    }
}

/// Runs a private release of a scalar statistic along `seq`.
///
/// # Safety
/// `seq` must be a live handle, `params` valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_release(
    seq: *const CdpSequence,
    params: *const CdpReleaseParams,
    out: *mut *mut CdpRelease,
) -> CdpStatus {
    non_null!(seq, params, out);
    let p = &*params;
    let f = try_status!(resolve_function(&p.function));
    if f.is_vector() {
        return fail(CdpStatus::Unsupported, "vector statistics are not exposed through the C interface");
    }
    let mut src = RandomSource::from_seed(p.seed);
    if p.noise_off {
        src = src.with_noise_off();
    }
    let s = &(*seq).inner;
    let result = match p.mechanism {
        CdpMechanism::DiffRelease => {
            let cfg = ReleaseConfig {
                function: f,
                adjacency: p.adjacency.into(),
                epsilon: p.epsilon,
                delta: p.delta,
                max_degree: (p.max_degree > 0).then_some(p.max_degree),
            };
            let r = try_status!(diff_release(s, &cfg, &src).map_err(release_status));
            CdpRelease {
                truth: r.steps.iter().map(|x| x.truth[0]).collect(),
                released: r.steps.iter().map(|x| x.released[0]).collect(),
                bound: r.bound,
            }
        }
        CdpMechanism::Monotone => {
            let cfg = MonotoneConfig {
                function: f,
                epsilon: p.epsilon,
                beta: p.beta,
                delta: p.delta,
                range: (p.range > 0.0).then_some(p.range),
            };
            let r = try_status!(monotone_release(s, &cfg, &src).map_err(monotone_status));
            CdpRelease {
                truth: r.steps.iter().map(|x| x.truth).collect(),
                released: r.steps.iter().map(|x| x.output).collect(),
                bound: r.alpha,
            }
        }
    };
    store(out, result)
}

/// Number of released steps.
///
/// # Safety
/// `rel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_release_len(rel: *const CdpRelease, out: *mut usize) -> CdpStatus {
    non_null!(rel, out);
    *out = (*rel).released.len();
    CdpStatus::Ok
}

/// Released and exact values at step `t` (1-based). Either output pointer
/// may be null.
///
/// # Safety
/// `rel` must be a live handle; non-null outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cdp_release_value(
    rel: *const CdpRelease,
    t: usize,
    released: *mut f64,
    truth: *mut f64,
) -> CdpStatus {
    non_null!(rel);
    let r = &*rel;
    if t == 0 || t > r.released.len() {
        return fail(CdpStatus::OutOfRange, format!("step {t} outside 1..={}", r.released.len()));
    }
    if !released.is_null() {
        *released = r.released[t - 1];
    }
    if !truth.is_null() {
        *truth = r.truth[t - 1];
    }
    CdpStatus::Ok
}

/// Error bound reported by the mechanism: the per-step high-probability bound
/// of the difference-sequence release, or the additive term of the monotone
/// mechanism.
///
/// # Safety
/// `rel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdp_release_bound(rel: *const CdpRelease, out: *mut f64) -> CdpStatus {
    non_null!(rel, out);
    *out = (*rel).bound;
    CdpStatus::Ok
}

/// Frees a release handle. Null is ignored.
///
/// # Safety
/// `rel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cdp_release_free(rel: *mut CdpRelease) {
    if !rel.is_null() {
        drop(Box::from_raw(rel));
    }
}
