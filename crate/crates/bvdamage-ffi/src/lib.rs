//! C ABI over the `bvdamage` solver.
//!
//! Handles are opaque and owned by the caller once returned; each has a
//! matching `_free`. Every entry point returns a [`BvdStatus`] and never
//! unwinds into C. The message of the last failure on the calling thread is
//! available from [`bvd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bvdamage::config::RunConfig;
use bvdamage::constitutive::Model;
use bvdamage::gronwall::{self, ClassicInstance, GronwallInstance};
use bvdamage::io::{parse_gronwall_data, solve_on, trajectory_csv, TRAJECTORY_COLUMNS};
use bvdamage::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BvdStatus {
    Ok = 0,
    /// A required pointer argument was null.
    ErrNull = 1,
    ErrConfig = 2,
    /// A step was rejected or a factorization failed.
    ErrSolver = 3,
    /// Bad argument value: unknown column, short buffer, invalid text, bad data.
    ErrInvalid = 4,
    ErrPanic = 5,
}

/// Parsed configuration and assembled model.
pub struct BvdModel {
    config: RunConfig,
    model: Model,
}

/// Per-knot trajectory table with the columns of `trajectory.csv`.
pub struct BvdTrajectory {
    columns: Vec<Vec<f64>>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> BvdStatus {
    match e {
        Error::Config { .. } => BvdStatus::ErrConfig,
        Error::StepRejected { .. } | Error::Factorization(_) => BvdStatus::ErrSolver,
        _ => BvdStatus::ErrInvalid,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BvdStatus>) -> BvdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BvdStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            BvdStatus::ErrPanic
        }
    }
}

fn fail(e: Error) -> BvdStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> BvdStatus {
    set_error(format!("null pointer: {what}"));
    BvdStatus::ErrNull
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, BvdStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        BvdStatus::ErrInvalid
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bvd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bvd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses `config` (the `key = value` text of the CLI) and assembles the model.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bvd_model_new(config: *const c_char, out: *mut *mut BvdModel) -> BvdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let t = text(config, "config")?;
        let cfg = RunConfig::parse(t).map_err(fail)?;
        let model = cfg.build_model().map_err(fail)?;
        *out = Box::into_raw(Box::new(BvdModel { config: cfg, model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`bvd_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bvd_model_free(model: *mut BvdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the viscous time stepping of `model` and returns its trajectory table.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bvd_solve(model: *const BvdModel, out: *mut *mut BvdTrajectory) -> BvdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let (traj, std, ed) = solve_on(&m.model, &m.config).map_err(fail)?;
        let csv = trajectory_csv(&m.model, &traj, &std, &ed);
        let mut columns = vec![Vec::with_capacity(traj.records.len()); TRAJECTORY_COLUMNS.len()];
        for line in csv.lines().skip(1) {
            for (col, cell) in columns.iter_mut().zip(line.split(',')) {
                col.push(cell.parse::<f64>().expect("writer emits numbers"));
            }
        }
        *out = Box::into_raw(Box::new(BvdTrajectory { columns }));
        Ok(())
    })
}

/// Number of knots (rows), including the initial state.
///
/// # Safety
/// `traj` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bvd_trajectory_len(traj: *const BvdTrajectory, out_len: *mut usize) -> BvdStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        if out_len.is_null() {
            return Err(null("out_len"));
        }
        *out_len = t.columns[0].len();
        Ok(())
    })
}

/// Copies the column `name` into `buf`, which must hold at least
/// [`bvd_trajectory_len`] values.
///
/// # Safety
/// `traj` must be a live handle, `name` NUL-terminated, `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn bvd_trajectory_column(traj: *const BvdTrajectory, name: *const c_char, buf: *mut f64, len: usize) -> BvdStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let name = text(name, "name")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let Some(i) = TRAJECTORY_COLUMNS.iter().position(|c| *c == name) else {
            set_error(format!("unknown column `{name}`"));
            return Err(BvdStatus::ErrInvalid);
        };
        let col = &t.columns[i];
        if len < col.len() {
            set_error(format!("buffer holds {len} values, column has {}", col.len()));
            return Err(BvdStatus::ErrInvalid);
        }
        std::ptr::copy_nonoverlapping(col.as_ptr(), buf, col.len());
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle from [`bvd_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bvd_trajectory_free(traj: *mut BvdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Classic discrete Gronwall check for `a_0..a_{n-1}` and `b_0..b_{n-1}`.
/// Writes 1/0 to `out_hypotheses_ok` and `out_holds`.
///
/// # Safety
/// `a` and `b` must be valid for `n` reads; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bvd_check_gronwall_classic(
    a: *const f64,
    b: *const f64,
    n: usize,
    big_b: f64,
    out_hypotheses_ok: *mut i32,
    out_holds: *mut i32,
) -> BvdStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out_hypotheses_ok.is_null() || out_holds.is_null() {
            return Err(null("argument"));
        }
        let inst = ClassicInstance {
            a: std::slice::from_raw_parts(a, n).to_vec(),
            b: std::slice::from_raw_parts(b, n).to_vec(),
            big_b,
        };
        let o = gronwall::check(&GronwallInstance::Classic(inst)).map_err(fail)?;
        *out_hypotheses_ok = o.hypotheses_ok as i32;
        *out_holds = o.holds as i32;
        Ok(())
    })
}

/// Checks every instance of a `check-gronwall` data text. Writes the number of
/// instances, and 1 to `out_all_hold` if each admissible instance holds.
///
/// # Safety
/// `data` must be NUL-terminated; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bvd_check_gronwall_data(data: *const c_char, out_count: *mut usize, out_all_hold: *mut i32) -> BvdStatus {
    guard(|| {
        if out_count.is_null() || out_all_hold.is_null() {
            return Err(null("output"));
        }
        let insts = parse_gronwall_data(text(data, "data")?).map_err(fail)?;
        let mut all = true;
        for inst in &insts {
            let o = gronwall::check(inst).map_err(fail)?;
            all &= !o.hypotheses_ok || o.holds;
        }
        *out_count = insts.len();
        *out_all_hold = all as i32;
        Ok(())
    })
}
