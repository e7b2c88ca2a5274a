//! C ABI over `lifnet`.
//!
//! Every fallible function returns a [`LifnetStatus`]; on failure the
//! message is available from [`lifnet_last_error_message`] on the same
//! thread. Traces and ensembles are opaque handles released with their
//! `_free` function. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lifnet::analysis::{ensemble, isi_geometric_fit, EnsembleStats};
use lifnet::meanfield::{
    death_threshold, fixed_points_simple, moments, pgf_eval, run_meanfield, MeanFieldParams,
    MeanFieldTrace, VminMode,
};
use lifnet::prob::{self, WeightModel};
use lifnet::simulator::{run_simulation, SimConfig};
use lifnet::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LifnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalError = 3,
    BufferTooSmall = 4,
    DeathOnly = 5,
    EmptyHistogram = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LifnetWeightModel {
    pub phi: f64,
    pub mu: f64,
    /// Probability that a weight is exactly zero.
    pub sparsity_p: f64,
    pub theta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LifnetMeanFieldParams {
    pub model: LifnetWeightModel,
    pub gamma: f64,
    pub x0: f64,
    /// Nonzero selects the halved-decay recursion (potentials floored at 0).
    pub clamp_at_zero: bool,
    pub horizon: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LifnetSimConfig {
    pub n: usize,
    pub model: LifnetWeightModel,
    pub gamma: f64,
    pub x0: f64,
    pub v_min: f64,
    pub horizon: usize,
    pub seed: u64,
    pub self_connections: bool,
}

/// Opaque mean-field trace.
pub struct LifnetTrace(MeanFieldTrace);

/// Opaque ensemble statistics.
pub struct LifnetEnsemble(EnsembleStats);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> LifnetStatus {
    match err {
        Error::InvalidParameter { .. } | Error::Config(_) | Error::RecursionTooDeep { .. } => {
            LifnetStatus::InvalidArgument
        }
        Error::NumericalBreakdown { .. } => LifnetStatus::NumericalError,
        Error::DeathOnly => LifnetStatus::DeathOnly,
        Error::EmptyHistogram => LifnetStatus::EmptyHistogram,
    }
}

type Failure = (LifnetStatus, String);
type FfiResult = Result<(), Failure>;

fn fail(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn guard<F: FnOnce() -> FfiResult>(f: F) -> LifnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LifnetStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LifnetStatus::Panic
        }
    }
}

fn null(what: &str) -> (LifnetStatus, String) {
    (LifnetStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> FfiResult {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn copy_into<T: Copy>(src: &[T], buf: *mut T, cap: usize, what: &str) -> FfiResult {
    if buf.is_null() {
        return Err(null(what));
    }
    if cap < src.len() {
        return Err((
            LifnetStatus::BufferTooSmall,
            format!("`{what}` holds {cap}, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn to_model(m: &LifnetWeightModel) -> Result<WeightModel, Failure> {
    WeightModel::new(m.phi, m.mu, m.sparsity_p, m.theta).map_err(fail)
}

fn to_params(p: &LifnetMeanFieldParams) -> Result<MeanFieldParams, Failure> {
    let mode = if p.clamp_at_zero {
        VminMode::ClampAtZero
    } else {
        VminMode::Unclamped
    };
    MeanFieldParams::new(to_model(&p.model)?, p.gamma, p.x0, mode, p.horizon).map_err(fail)
}

fn to_sim(c: &LifnetSimConfig) -> Result<SimConfig, Failure> {
    let config = SimConfig {
        n: c.n,
        model: to_model(&c.model)?,
        gamma: c.gamma,
        x0: c.x0,
        v_min: c.v_min,
        horizon: c.horizon,
        seed: c.seed,
        self_connections: c.self_connections,
    };
    config.validate().map_err(fail)?;
    Ok(config)
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lifnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread. Valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn lifnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Upper tail of the standard normal.
#[no_mangle]
pub extern "C" fn lifnet_gaussian_tail(z: f64) -> f64 {
    prob::gaussian_tail(z)
}

/// `(2e/3)^{3/4} pi^{1/4} theta`.
#[no_mangle]
pub extern "C" fn lifnet_death_threshold(theta: f64) -> f64 {
    death_threshold(theta)
}

unsafe fn charge_prob(
    f: fn(f64, &WeightModel) -> lifnet::Result<f64>,
    y: f64,
    model: *const LifnetWeightModel,
    out: *mut f64,
) -> LifnetStatus {
    guard(|| {
        let model = to_model(deref(model, "model")?)?;
        write_out(out, f(y, &model).map_err(fail)?, "out")
    })
}

/// Zero-mean charge probability.
#[no_mangle]
pub unsafe extern "C" fn lifnet_p_phi(
    y: f64,
    model: *const LifnetWeightModel,
    out: *mut f64,
) -> LifnetStatus {
    charge_prob(prob::p_phi, y, model, out)
}

/// Charge probability with weight mean.
#[no_mangle]
pub unsafe extern "C" fn lifnet_p_phi_mu(
    y: f64,
    model: *const LifnetWeightModel,
    out: *mut f64,
) -> LifnetStatus {
    charge_prob(prob::p_phi_mu, y, model, out)
}

/// Sparse charge probability.
#[no_mangle]
pub unsafe extern "C" fn lifnet_p_sparse(
    y: f64,
    model: *const LifnetWeightModel,
    out: *mut f64,
) -> LifnetStatus {
    charge_prob(prob::p_sparse, y, model, out)
}

/// Derivative of the zero-mean charge probability.
#[no_mangle]
pub unsafe extern "C" fn lifnet_p_phi_deriv(
    y: f64,
    model: *const LifnetWeightModel,
    out: *mut f64,
) -> LifnetStatus {
    charge_prob(prob::p_phi_deriv, y, model, out)
}

/// Firing probability with a potential floor `v_min <= 0`.
#[no_mangle]
pub unsafe extern "C" fn lifnet_charge_prob_vmin(
    prior: f64,
    new_charge: f64,
    v_min: f64,
    model: *const LifnetWeightModel,
    out: *mut f64,
) -> LifnetStatus {
    guard(|| {
        let model = to_model(deref(model, "model")?)?;
        let v = prob::charge_prob_vmin(prior, new_charge, v_min, &model).map_err(fail)?;
        write_out(out, v, "out")
    })
}

/// Fixed points of the memoryless map, ascending, starting with 0.
///
/// `values` and `stable` must hold `cap` entries. On success `*out_len` is
/// the number written; with `LIFNET_STATUS_BUFFER_TOO_SMALL` it is the
/// number required.
#[no_mangle]
pub unsafe extern "C" fn lifnet_fixed_points(
    model: *const LifnetWeightModel,
    values: *mut f64,
    stable: *mut bool,
    cap: usize,
    out_len: *mut usize,
    death_only: *mut bool,
) -> LifnetStatus {
    guard(|| {
        let model = to_model(deref(model, "model")?)?;
        let report = fixed_points_simple(&model).map_err(fail)?;
        let len = report.fixed_points.len();
        write_out(out_len, len, "out_len")?;
        let v: Vec<f64> = report.fixed_points.iter().map(|f| f.value).collect();
        let s: Vec<bool> = report.fixed_points.iter().map(|f| f.stable).collect();
        copy_into(&v, values, cap, "values")?;
        copy_into(&s, stable, cap, "stable")?;
        write_out(death_only, report.death_only, "death_only")
    })
}

/// Runs the mean-field recursion. Release the trace with
/// [`lifnet_trace_free`].
#[no_mangle]
pub unsafe extern "C" fn lifnet_meanfield_run(
    params: *const LifnetMeanFieldParams,
    out: *mut *mut LifnetTrace,
) -> LifnetStatus {
    guard(|| {
        let params = to_params(deref(params, "params")?)?;
        let trace = run_meanfield(&params).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(LifnetTrace(trace))), "out")
    })
}

/// Number of activity values, `horizon + 1`; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn lifnet_trace_len(trace: *const LifnetTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.x.len())
}

/// Copies `x_0..x_T` into `buf`.
#[no_mangle]
pub unsafe extern "C" fn lifnet_trace_activity(
    trace: *const LifnetTrace,
    buf: *mut f64,
    cap: usize,
) -> LifnetStatus {
    guard(|| copy_into(&deref(trace, "trace")?.0.x, buf, cap, "buf"))
}

/// Step at which the trajectory settled, or -1.
#[no_mangle]
pub unsafe extern "C" fn lifnet_trace_converged_at(
    trace: *const LifnetTrace,
    out: *mut i64,
) -> LifnetStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        write_out(out, t.0.converged_at.map_or(-1, |c| c as i64), "out")
    })
}

/// `P(k, t)`; 0 for cohorts not in the table or a null handle.
#[no_mangle]
pub unsafe extern "C" fn lifnet_trace_fire_prob(
    trace: *const LifnetTrace,
    k: usize,
    t: usize,
) -> f64 {
    trace.as_ref().map_or(0.0, |tr| tr.0.fire_prob(k, t))
}

#[no_mangle]
pub unsafe extern "C" fn lifnet_trace_free(trace: *mut LifnetTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Expectation and variance of `X_t` for `t = 0..=horizon`; both buffers
/// need `horizon + 1` entries.
#[no_mangle]
pub unsafe extern "C" fn lifnet_moments(
    params: *const LifnetMeanFieldParams,
    n: usize,
    expectation: *mut f64,
    variance: *mut f64,
    cap: usize,
) -> LifnetStatus {
    guard(|| {
        let params = to_params(deref(params, "params")?)?;
        let m = moments(&params, n).map_err(fail)?;
        copy_into(&m.expectation, expectation, cap, "expectation")?;
        copy_into(&m.variance, variance, cap, "variance")
    })
}

/// Probability generating function of `X_t` at `s`, `t <= 20`.
#[no_mangle]
pub unsafe extern "C" fn lifnet_pgf_eval(
    t: usize,
    s: f64,
    params: *const LifnetMeanFieldParams,
    n: usize,
    out: *mut f64,
) -> LifnetStatus {
    guard(|| {
        let params = to_params(deref(params, "params")?)?;
        write_out(out, pgf_eval(t, s, &params, n).map_err(fail)?, "out")
    })
}

/// Spike counts `X_0..X_T` of one seeded network; `counts` needs
/// `horizon + 1` entries.
#[no_mangle]
pub unsafe extern "C" fn lifnet_simulate_counts(
    config: *const LifnetSimConfig,
    network_index: u64,
    counts: *mut u64,
    cap: usize,
) -> LifnetStatus {
    guard(|| {
        let config = to_sim(deref(config, "config")?)?;
        let trace = run_simulation(&config, network_index);
        let c: Vec<u64> = trace.spike_counts.iter().map(|&x| x as u64).collect();
        copy_into(&c, counts, cap, "counts")
    })
}

/// Simulates networks `0..runs`. Release with [`lifnet_ensemble_free`].
#[no_mangle]
pub unsafe extern "C" fn lifnet_ensemble_run(
    config: *const LifnetSimConfig,
    runs: usize,
    out: *mut *mut LifnetEnsemble,
) -> LifnetStatus {
    guard(|| {
        let config = to_sim(deref(config, "config")?)?;
        let stats = ensemble(&config, runs).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(LifnetEnsemble(stats))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lifnet_ensemble_len(e: *const LifnetEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.0.mean_activity.len())
}

#[no_mangle]
pub unsafe extern "C" fn lifnet_ensemble_mean_activity(
    e: *const LifnetEnsemble,
    buf: *mut f64,
    cap: usize,
) -> LifnetStatus {
    guard(|| copy_into(&deref(e, "ensemble")?.0.mean_activity, buf, cap, "buf"))
}

#[no_mangle]
pub unsafe extern "C" fn lifnet_ensemble_std_activity(
    e: *const LifnetEnsemble,
    buf: *mut f64,
    cap: usize,
) -> LifnetStatus {
    guard(|| copy_into(&deref(e, "ensemble")?.0.std_activity, buf, cap, "buf"))
}

/// Mean activity over the last 20 steps, averaged over networks.
#[no_mangle]
pub unsafe extern "C" fn lifnet_ensemble_asymptote(
    e: *const LifnetEnsemble,
    out: *mut f64,
) -> LifnetStatus {
    guard(|| write_out(out, deref(e, "ensemble")?.0.asymptote(), "out"))
}

/// Total-variation distance of the pooled ISIs to `Geometric(p)`.
#[no_mangle]
pub unsafe extern "C" fn lifnet_ensemble_isi_tv(
    e: *const LifnetEnsemble,
    p: f64,
    out: *mut f64,
) -> LifnetStatus {
    guard(|| {
        let tv = isi_geometric_fit(&deref(e, "ensemble")?.0, p).map_err(fail)?;
        write_out(out, tv, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lifnet_ensemble_free(e: *mut LifnetEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}
