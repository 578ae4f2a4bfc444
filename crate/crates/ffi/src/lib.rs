//! C ABI over `cachelearn`.
//!
//! Every function returns a [`CachelearnStatus`]; results go through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`cachelearn_last_error`]. Probability vectors are passed as
//! `(const double *, size_t)` pairs; output vectors must have room for
//! `catalog_size` entries. Request logs live behind an opaque handle that
//! must be released with [`cachelearn_request_log_free`].
//!
//! # Safety
//!
//! All exported functions share one contract: every pointer argument is
//! either null (reported as `NullPointer`) or valid for the access implied
//! by its type, vector pointers are valid for the stated length, strings are
//! NUL-terminated, and log handles come from this library and are freed at
//! most once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cachelearn::analytic::{self, AnalyticError, OptimizerOptions};
use cachelearn::bounds::{self, BoundError, BoundQuery, SupMode, TrainingTimeBound};
use cachelearn::estimation::{self, EstimationError};
use cachelearn::model::{zipf_profile, FamilyGeometry, ModelError};
use cachelearn::spatial::{self, RequestLog, SpatialError};
use cachelearn::{CachingStrategy, NetworkConfig, PopularityProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachelearnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Accuracy or free parameters outside the region a bound allows.
    ParameterDomain = 3,
    InsufficientData = 4,
    Io = 5,
    Parse = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Network parameters; units as in the Rust `NetworkConfig`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachelearnConfig {
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub lambda_b: f64,
    pub lambda_r: f64,
    pub file_bits: f64,
    pub bs_rate: f64,
    pub gamma: f64,
    pub coverage_radius: f64,
    pub cache_slots: u32,
    pub catalog_size: u32,
}

impl From<CachelearnConfig> for NetworkConfig {
    fn from(c: CachelearnConfig) -> Self {
        NetworkConfig {
            lambda_u: c.lambda_u,
            lambda_s: c.lambda_s,
            lambda_b: c.lambda_b,
            lambda_r: c.lambda_r,
            file_bits: c.file_bits,
            bs_rate: c.bs_rate,
            gamma: c.gamma,
            coverage_radius: c.coverage_radius,
            cache_slots: c.cache_slots,
            catalog_size: c.catalog_size,
        }
    }
}

impl From<NetworkConfig> for CachelearnConfig {
    fn from(c: NetworkConfig) -> Self {
        CachelearnConfig {
            lambda_u: c.lambda_u,
            lambda_s: c.lambda_s,
            lambda_b: c.lambda_b,
            lambda_r: c.lambda_r,
            file_bits: c.file_bits,
            bs_rate: c.bs_rate,
            gamma: c.gamma,
            coverage_radius: c.coverage_radius,
            cache_slots: c.cache_slots,
            catalog_size: c.catalog_size,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachelearnBoundQuery {
    pub config: CachelearnConfig,
    /// Seconds.
    pub epsilon: f64,
    pub delta: f64,
    pub m: u64,
    pub dist_inf: f64,
    /// 0: sup Σg ≤ N; non-zero: exact supremum.
    pub exact_sup: u8,
}

impl From<&CachelearnBoundQuery> for BoundQuery {
    fn from(q: &CachelearnBoundQuery) -> Self {
        BoundQuery::new(q.config.into(), q.epsilon, q.delta)
            .with_source(q.m, q.dist_inf)
            .with_sup_mode(if q.exact_sup != 0 {
                SupMode::ExactSup
            } else {
                SupMode::NUpper
            })
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachelearnBound {
    /// Seconds; `INFINITY` when infeasible.
    pub tau: f64,
    /// Nodes/m².
    pub density_threshold: f64,
    pub feasible: u8,
}

impl From<&TrainingTimeBound> for CachelearnBound {
    fn from(b: &TrainingTimeBound) -> Self {
        CachelearnBound {
            tau: b.tau,
            density_threshold: b.density_threshold,
            feasible: u8::from(b.feasible),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachelearnSourceRequirement {
    pub m_min: u64,
    pub dist_condition_rhs: f64,
    pub f: f64,
    pub satisfied: u8,
}

/// Parameter box and gradient bound of a parametric family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachelearnFamily {
    pub dim: u32,
    pub lower: f64,
    pub upper: f64,
    pub c: f64,
}

/// Opaque request log.
pub struct CachelearnRequestLog {
    inner: RequestLog,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CachelearnStatus, String);

impl Failure {
    fn null(name: &str) -> Self {
        Failure(CachelearnStatus::NullPointer, format!("{name} is null"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Failure(CachelearnStatus::InvalidArgument, msg.into())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure(CachelearnStatus::InvalidArgument, e.to_string())
    }
}

impl From<AnalyticError> for Failure {
    fn from(e: AnalyticError) -> Self {
        Failure(CachelearnStatus::InvalidArgument, e.to_string())
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        let status = match e {
            BoundError::InvalidQuery(_) | BoundError::Model(_) => CachelearnStatus::InvalidArgument,
            _ => CachelearnStatus::ParameterDomain,
        };
        Failure(status, e.to_string())
    }
}

impl From<SpatialError> for Failure {
    fn from(e: SpatialError) -> Self {
        let status = match e {
            SpatialError::Io(_) => CachelearnStatus::Io,
            SpatialError::Parse { .. } => CachelearnStatus::Parse,
            _ => CachelearnStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<EstimationError> for Failure {
    fn from(e: EstimationError) -> Self {
        let status = match e {
            EstimationError::InsufficientData(_) => CachelearnStatus::InsufficientData,
            EstimationError::Spatial(SpatialError::Io(_)) => CachelearnStatus::Io,
            EstimationError::Spatial(SpatialError::Parse { .. }) => CachelearnStatus::Parse,
            _ => CachelearnStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CachelearnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CachelearnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CachelearnStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn write<T>(p: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    p.write(value);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure::null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid("path is not valid UTF-8"))?;
    Ok(Path::new(s))
}

unsafe fn config(p: *const CachelearnConfig) -> Result<NetworkConfig, Failure> {
    Ok(NetworkConfig::from(*deref(p, "config")?).validate()?)
}

unsafe fn profile(p: *const f64, len: usize) -> Result<PopularityProfile, Failure> {
    Ok(PopularityProfile::new(slice(p, len, "profile")?.to_vec())?)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cachelearn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn cachelearn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Numerical-results parameter set (N = 10, M = 2).
#[no_mangle]
pub unsafe extern "C" fn cachelearn_config_default(out: *mut CachelearnConfig) -> CachelearnStatus {
    guard(|| write(out, NetworkConfig::default().into(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_config_validate(cfg: *const CachelearnConfig) -> CachelearnStatus {
    guard(|| config(cfg).map(|_| ()))
}

/// Zipf profile with exponent `theta` over `n` files into `out[0..n]`.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_zipf_profile(n: usize, theta: f64, out: *mut f64) -> CachelearnStatus {
    guard(|| {
        let p = zipf_profile(n, theta)?;
        slice_mut(out, n, "out")?.copy_from_slice(p.as_slice());
        Ok(())
    })
}

/// Closed-form offloading loss in seconds for strategy `pi` and profile `p`.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_offloading_loss(
    cfg: *const CachelearnConfig,
    pi: *const f64,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> CachelearnStatus {
    guard(|| {
        let c = config(cfg)?;
        let strategy = CachingStrategy::new(slice(pi, len, "pi")?.to_vec())?;
        let loss = analytic::offloading_loss(&c, &strategy, &profile(p, len)?)?;
        write(out, loss, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_loss_floor(cfg: *const CachelearnConfig, out: *mut f64) -> CachelearnStatus {
    guard(|| write(out, analytic::loss_floor(&config(cfg)?), "out"))
}

/// Minimizes the offloading loss for profile `p`; writes the strategy to
/// `out_pi[0..len]` and its loss to `out_loss`.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_optimize_caching(
    cfg: *const CachelearnConfig,
    p: *const f64,
    len: usize,
    seed: u64,
    out_pi: *mut f64,
    out_loss: *mut f64,
) -> CachelearnStatus {
    guard(|| {
        let c = config(cfg)?;
        let opts = OptimizerOptions {
            seed,
            ..OptimizerOptions::default()
        };
        let sol = analytic::optimize_caching(&c, &profile(p, len)?, &opts)?;
        slice_mut(out_pi, len, "out_pi")?.copy_from_slice(sol.strategy.as_slice());
        write(out_loss, sol.loss, "out_loss")
    })
}

/// Simulated offloading loss: mean and standard error in seconds.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_monte_carlo_loss(
    cfg: *const CachelearnConfig,
    pi: *const f64,
    p: *const f64,
    len: usize,
    trials: u64,
    seed: u64,
    out_mean: *mut f64,
    out_stderr: *mut f64,
) -> CachelearnStatus {
    guard(|| {
        let c = config(cfg)?;
        let strategy = CachingStrategy::new(slice(pi, len, "pi")?.to_vec())?;
        let est = spatial::monte_carlo_loss(&c, &strategy, &profile(p, len)?, trials, seed)?;
        write(out_mean, est.mean, "out_mean")?;
        write(out_stderr, est.stderr, "out_stderr")
    })
}

unsafe fn bound_call<F>(q: *const CachelearnBoundQuery, out: *mut CachelearnBound, f: F) -> CachelearnStatus
where
    F: FnOnce(&BoundQuery) -> Result<TrainingTimeBound, BoundError>,
{
    guard(|| {
        let query = BoundQuery::from(deref(q, "query")?);
        let b = f(&query)?;
        write(out, CachelearnBound::from(&b), "out")
    })
}

/// Training time for the target-only estimator.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_tau_empirical(
    q: *const CachelearnBoundQuery,
    out: *mut CachelearnBound,
) -> CachelearnStatus {
    bound_call(q, out, bounds::tau_empirical)
}

/// Closed-form relaxation of the target-only training time, in seconds.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_tau_empirical_simplified(
    q: *const CachelearnBoundQuery,
    out: *mut f64,
) -> CachelearnStatus {
    guard(|| {
        let v = bounds::tau_empirical_simplified(&deref(q, "query")?.into())?;
        write(out, v, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_tau_per_user(q: *const CachelearnBoundQuery, out: *mut f64) -> CachelearnStatus {
    guard(|| {
        let v = bounds::tau_per_user(&deref(q, "query")?.into())?;
        write(out, v, "out")
    })
}

/// Training time for the pooled transfer-learning estimator.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_tau_tl_pooled(
    q: *const CachelearnBoundQuery,
    out: *mut CachelearnBound,
) -> CachelearnStatus {
    bound_call(q, out, bounds::tau_tl_pooled)
}

/// Training time for the convex-combination estimator at `(alpha, eta)`.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_tau_tl_convex(
    q: *const CachelearnBoundQuery,
    alpha: f64,
    eta: f64,
    out: *mut CachelearnBound,
) -> CachelearnStatus {
    bound_call(q, out, |query| bounds::tau_tl_convex(query, alpha, eta))
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_prop1_check(
    q: *const CachelearnBoundQuery,
    out: *mut CachelearnSourceRequirement,
) -> CachelearnStatus {
    guard(|| {
        let r = bounds::prop1_check(&deref(q, "query")?.into())?;
        let v = CachelearnSourceRequirement {
            m_min: r.m_min,
            dist_condition_rhs: r.dist_condition_rhs,
            f: r.f,
            satisfied: u8::from(r.satisfied),
        };
        write(out, v, "out")
    })
}

unsafe fn geometry(family: *const CachelearnFamily) -> Result<FamilyGeometry, Failure> {
    let f = deref(family, "family")?;
    Ok(FamilyGeometry::new(f.dim as usize, f.lower, f.upper, f.c)?)
}

/// Training time for a parametric family.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_tau_parametric(
    q: *const CachelearnBoundQuery,
    family: *const CachelearnFamily,
    out: *mut CachelearnBound,
) -> CachelearnStatus {
    guard(|| {
        let geom = geometry(family)?;
        let b = bounds::tau_parametric(&deref(q, "query")?.into(), &geom)?;
        write(out, CachelearnBound::from(&b), "out")
    })
}

/// Training time for the fused parametric estimator; `q->m` source samples.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_tau_parametric_tl(
    q: *const CachelearnBoundQuery,
    family: *const CachelearnFamily,
    theta_dist: f64,
    d_t: f64,
    lambda: f64,
    out: *mut CachelearnBound,
) -> CachelearnStatus {
    guard(|| {
        let geom = geometry(family)?;
        let b = bounds::tau_parametric_tl(&deref(q, "query")?.into(), &geom, theta_dist, d_t, lambda)?;
        write(out, CachelearnBound::from(&b), "out")
    })
}

/// Simulates requests over `[0, tau]` from profile `p`.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_request_log_generate(
    cfg: *const CachelearnConfig,
    p: *const f64,
    len: usize,
    tau: f64,
    seed: u64,
    out: *mut *mut CachelearnRequestLog,
) -> CachelearnStatus {
    guard(|| {
        let c = config(cfg)?;
        let prof = profile(p, len)?;
        if prof.len() != c.n() {
            return Err(Failure::invalid(format!("profile has {len} entries, catalog_size is {}", c.n())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log = spatial::generate_requests(&c, &prof, tau, &mut rng)?;
        write(out, Box::into_raw(Box::new(CachelearnRequestLog { inner: log })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_request_log_load(
    path_utf8: *const c_char,
    out: *mut *mut CachelearnRequestLog,
) -> CachelearnStatus {
    guard(|| {
        let log = RequestLog::load(path(path_utf8)?)?;
        write(out, Box::into_raw(Box::new(CachelearnRequestLog { inner: log })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_request_log_save(
    log: *const CachelearnRequestLog,
    path_utf8: *const c_char,
) -> CachelearnStatus {
    guard(|| {
        let log = deref(log, "log")?;
        Ok(log.inner.save(path(path_utf8)?)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_request_log_total(
    log: *const CachelearnRequestLog,
    out: *mut u64,
) -> CachelearnStatus {
    guard(|| write(out, deref(log, "log")?.inner.total_requests(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn cachelearn_request_log_users(
    log: *const CachelearnRequestLog,
    out: *mut u64,
) -> CachelearnStatus {
    guard(|| write(out, deref(log, "log")?.inner.n_users() as u64, "out"))
}

/// Relative request frequencies over `n` files into `out[0..n]`.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_request_log_empirical_profile(
    log: *const CachelearnRequestLog,
    n: usize,
    out: *mut f64,
) -> CachelearnStatus {
    guard(|| {
        let p = estimation::empirical_profile(&deref(log, "log")?.inner, n)?;
        slice_mut(out, n, "out")?.copy_from_slice(p.as_slice());
        Ok(())
    })
}

/// Releases a log; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cachelearn_request_log_free(log: *mut CachelearnRequestLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
