//! C ABI over `pr2-core`.
//!
//! Every fallible call returns a [`Pr2Status`]; on failure the message is kept
//! per thread and can be read with [`pr2_last_error_message`]. Handles are
//! opaque and must be released with their matching `*_free`. Strings handed
//! out by the library are released with [`pr2_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pr2_core::envs::{diff_reward_unchecked, MatrixGame, DEFAULT_R1, DEFAULT_R2, DIFF_HI, DIFF_LO};
use pr2_core::game::{RngStreams, Stream};
use pr2_core::harness::{self, ExperimentConfig};
use pr2_core::pr2q::{self, Pr2qAgent, Pr2qParams};
use pr2_core::Error;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pr2Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Numeric = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> Pr2Status {
    match err {
        Error::Config(_) | Error::Json(_) => Pr2Status::InvalidConfig,
        Error::Io(_) | Error::Csv(_) | Error::Checkpoint(_) => Pr2Status::Io,
        Error::NonFinite(_) => Pr2Status::Numeric,
        _ => Pr2Status::InvalidArgument,
    }
}

struct Failure(Pr2Status, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Pr2Status {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Pr2Status::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside pr2");
            Pr2Status::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(Pr2Status::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(Pr2Status::InvalidArgument, msg.into())
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("string contains an interior NUL"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pr2_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pr2_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pr2_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Payoffs of the default 2x2 matrix game for actions `a1`, `a2` in {0, 1}.
///
/// # Safety
/// `r1` and `r2` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pr2_matrix_payoff(a1: u32, a2: u32, r1: *mut f64, r2: *mut f64) -> Pr2Status {
    guard(|| {
        if r1.is_null() || r2.is_null() {
            return Err(null("output"));
        }
        let game = MatrixGame::new(DEFAULT_R1, DEFAULT_R2, 0.0)?;
        let (x, y) = game.payoff(a1 as usize, a2 as usize)?;
        *r1 = x;
        *r2 = y;
        Ok(())
    })
}

/// Shared reward of the max-of-two-quadratics game. Actions outside
/// [-10, 10] are rejected.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pr2_diff_reward(a1: f64, a2: f64, out: *mut f64) -> Pr2Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        for a in [a1, a2] {
            if !(DIFF_LO..=DIFF_HI).contains(&a) {
                return Err(invalid(format!("action {a} outside [{DIFF_LO}, {DIFF_HI}]")));
            }
        }
        *out = diff_reward_unchecked(a1, a2);
        Ok(())
    })
}

/// Log-sum-exp of one joint-Q row.
///
/// # Safety
/// `q` must point at `len` readable values and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pr2_soft_marginal(q: *const f64, len: usize, out: *mut f64) -> Pr2Status {
    guard(|| {
        let row = read_slice(q, len, "q")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = pr2q::soft_marginal(row)?;
        Ok(())
    })
}

/// Softmax of one joint-Q row, written to `out[0..len]`.
///
/// # Safety
/// `q` must point at `len` readable values and `out` at `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn pr2_opponent_conditional(q: *const f64, len: usize, out: *mut f64) -> Pr2Status {
    guard(|| {
        let row = read_slice(q, len, "q")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = pr2q::opponent_conditional(row)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&p);
        Ok(())
    })
}

/// A validated experiment configuration.
pub struct Pr2Experiment {
    config: ExperimentConfig,
}

/// Parses and validates an experiment configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pr2_experiment_from_json(json: *const c_char, out: *mut *mut Pr2Experiment) -> Pr2Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let config = ExperimentConfig::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(Pr2Experiment { config }));
        Ok(())
    })
}

/// Replaces the seed list of an experiment.
///
/// # Safety
/// `exp` must be a live handle and `seeds` must point at `len` values.
#[no_mangle]
pub unsafe extern "C" fn pr2_experiment_set_seeds(exp: *mut Pr2Experiment, seeds: *const u64, len: usize) -> Pr2Status {
    guard(|| {
        let exp = exp.as_mut().ok_or_else(|| null("exp"))?;
        if seeds.is_null() && len > 0 {
            return Err(null("seeds"));
        }
        exp.config.seeds = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(seeds, len).to_vec()
        };
        Ok(())
    })
}

/// Runs every seed, writes `run_<seed>.csv` and `summary.json` under `out_dir`
/// and returns the summary JSON in `summary`, to be freed with
/// [`pr2_string_free`].
///
/// # Safety
/// `exp` must be a live handle, `out_dir` a NUL-terminated path and `summary`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pr2_experiment_run(
    exp: *const Pr2Experiment,
    out_dir: *const c_char,
    summary: *mut *mut c_char,
) -> Pr2Status {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("exp"))?;
        if summary.is_null() {
            return Err(null("summary"));
        }
        *summary = ptr::null_mut();
        let dir = read_str(out_dir, "out_dir")?;
        let s = harness::run_experiment(&exp.config, Path::new(dir))?;
        let text = serde_json::to_string(&s).map_err(Error::from)?;
        *summary = into_c_string(text)?;
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or a handle from [`pr2_experiment_from_json`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pr2_experiment_free(exp: *mut Pr2Experiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// A single-state tabular PR2-Q learner with its own random stream.
pub struct Pr2qHandle {
    agent: Pr2qAgent,
    rng: ChaCha8Rng,
}

/// Creates a PR2-Q learner with `n_own` own and `n_opp` opponent actions.
/// `params_json` may be null for the defaults.
///
/// # Safety
/// `params_json` must be null or NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pr2q_agent_new(
    n_own: u32,
    n_opp: u32,
    params_json: *const c_char,
    seed: u64,
    out: *mut *mut Pr2qHandle,
) -> Pr2Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let params: Pr2qParams = if params_json.is_null() {
            Pr2qParams::default()
        } else {
            serde_json::from_str(read_str(params_json, "params_json")?)
                .map_err(|e| Failure(Pr2Status::InvalidConfig, e.to_string()))?
        };
        params.validate()?;
        let agent = Pr2qAgent::new(1, n_own as usize, n_opp as usize, &params)?;
        let rng = RngStreams::new(seed).stream(Stream::Policy(0));
        *out = Box::into_raw(Box::new(Pr2qHandle { agent, rng }));
        Ok(())
    })
}

/// Samples an action from the current policy.
///
/// # Safety
/// `agent` must be a live handle and `action` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pr2q_agent_act(agent: *mut Pr2qHandle, action: *mut u32) -> Pr2Status {
    guard(|| {
        let h = agent.as_mut().ok_or_else(|| null("agent"))?;
        if action.is_null() {
            return Err(null("action"));
        }
        *action = h.agent.select_action(0, &mut h.rng) as u32;
        Ok(())
    })
}

/// One learning step on an observed joint action and reward.
///
/// # Safety
/// `agent` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pr2q_agent_update(agent: *mut Pr2qHandle, own: u32, opp: u32, reward: f64) -> Pr2Status {
    guard(|| {
        let h = agent.as_mut().ok_or_else(|| null("agent"))?;
        let t = h.agent.table();
        if own as usize >= t.n_own() || opp as usize >= t.n_opp() {
            return Err(invalid(format!("action pair ({own}, {opp}) out of range")));
        }
        h.agent.update(0, own as usize, opp as usize, reward, 0)?;
        Ok(())
    })
}

/// Writes the action distribution to `out[0..len]`; `len` must equal the
/// number of own actions.
///
/// # Safety
/// `agent` must be a live handle and `out` must point at `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn pr2q_agent_policy(agent: *const Pr2qHandle, out: *mut f64, len: usize) -> Pr2Status {
    guard(|| {
        let h = agent.as_ref().ok_or_else(|| null("agent"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = h.agent.action_distribution(0);
        if p.len() != len {
            return Err(invalid(format!("policy has {} entries, buffer has {len}", p.len())));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `agent` must be null or a handle from [`pr2q_agent_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pr2q_agent_free(agent: *mut Pr2qHandle) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}
