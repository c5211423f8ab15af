//! C interface to the interpreter.
//!
//! Programs and machines are opaque handles. Every fallible call returns an
//! [`RvaStatus`]; on failure the error is kept per thread and can be read as
//! JSON with [`rva_last_error`]. Strings handed out by the library must be
//! released with [`rva_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rva::cli::backend_diff;
use rva::command_eval::{Config, Machine};
use rva::error::Error;
use rva::free_arrow::run_arrow;
use rva::surface::Program;
use rva::values::TieBreak;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RvaStatus {
    Ok = 0,
    TypeError = 1,
    RuntimeError = 2,
    OracleMismatch = 3,
    ParseError = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// A parsed and checked program.
pub struct RvaProgram {
    program: Arc<Program>,
}

/// A running `main`.
pub struct RvaMachine {
    // declared first so it is dropped before the program it borrows from
    machine: Machine<'static>,
    _program: Arc<Program>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(json: serde_json::Value) {
    let text = CString::new(json.to_string()).unwrap_or_else(|_| CString::from(c"{\"error\":\"unprintable\"}"));
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> RvaStatus {
    match e {
        Error::Parse(_) => RvaStatus::ParseError,
        Error::Type(_) => RvaStatus::TypeError,
        Error::Eval(_) => RvaStatus::RuntimeError,
        Error::OracleMismatch(_) => RvaStatus::OracleMismatch,
        Error::Input(_) => RvaStatus::InvalidArgument,
    }
}

fn invalid(msg: &str) -> Error {
    Error::Input(msg.to_string())
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> RvaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RvaStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_json());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(serde_json::json!({"error": "panic", "message": msg, "detail": null}));
            RvaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Error> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    out.write(v);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Error> {
    let c = CString::new(s).map_err(|_| invalid("string contains NUL"))?;
    write_out(out, c.into_raw())
}

unsafe fn program_ref<'a>(p: *const RvaProgram) -> Result<&'a RvaProgram, Error> {
    p.as_ref().ok_or_else(|| invalid("program handle is null"))
}

unsafe fn machine_mut<'a>(m: *mut RvaMachine) -> Result<&'a mut RvaMachine, Error> {
    m.as_mut().ok_or_else(|| invalid("machine handle is null"))
}

/// JSON text of the last error on this thread, or null if the last call
/// succeeded. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rva_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rva_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rva_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and typechecks a program.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rva_program_parse(source: *const c_char, out: *mut *mut RvaProgram) -> RvaStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        let program = Program::parse(src)?;
        program.check()?;
        write_out(out, Box::into_raw(Box::new(RvaProgram { program: Arc::new(program) })))
    })
}

/// # Safety
/// `p` must be null or a handle from [`rva_program_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rva_program_free(p: *mut RvaProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// The check results as a JSON array of `{kind, name, type}`.
///
/// # Safety
/// `p` must be a live program handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rva_program_check_json(p: *const RvaProgram, out: *mut *mut c_char) -> RvaStatus {
    guard(|| {
        let lines = program_ref(p)?.program.check()?;
        let doc: Vec<_> =
            lines.iter().map(|l| serde_json::json!({"kind": l.kind, "name": l.name, "type": l.ty})).collect();
        write_string(out, serde_json::Value::Array(doc).to_string())
    })
}

/// Loads `main` on the initial heap drawn from `seed`, with slots replaced
/// by `heap_json` when it is not null. `fuel` of zero means no step limit.
/// `tie_first` selects lowest-index tie breaking instead of failing on ties.
///
/// # Safety
/// `p` must be a live program handle, `heap_json` null or a NUL-terminated
/// string, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_new(
    p: *const RvaProgram,
    seed: u64,
    heap_json: *const c_char,
    fuel: u64,
    tie_first: bool,
    out: *mut *mut RvaMachine,
) -> RvaStatus {
    guard(|| {
        let program = program_ref(p)?.program.clone();
        let overrides = if heap_json.is_null() {
            None
        } else {
            let text = str_arg(heap_json, "heap_json")?;
            Some(serde_json::from_str(text).map_err(|e| invalid(&format!("heap_json: {e}")))?)
        };
        let heap = program.heap_with_overrides(seed, overrides.as_ref())?;
        let config = Config {
            fuel: (fuel > 0).then_some(fuel),
            tie: if tie_first { TieBreak::First } else { TieBreak::Strict },
            check_types: false,
            ..Config::default()
        };
        // SAFETY: the signature lives inside the Arc, whose allocation does
        // not move, and the handle keeps the Arc alive for at least as long
        // as the machine because the machine field is dropped first.
        let sig: &'static rva::signature::Signature = &*(&program.sig as *const _);
        let machine = Machine::new(sig, heap, program.main()?.clone(), config)?;
        write_out(out, Box::into_raw(Box::new(RvaMachine { machine, _program: program })))
    })
}

/// # Safety
/// `m` must be null or a handle from [`rva_machine_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_free(m: *mut RvaMachine) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// One reduction step. Sets `*done` once the command is a value.
///
/// # Safety
/// `m` must be a live machine handle; `done` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_step(m: *mut RvaMachine, done: *mut bool) -> RvaStatus {
    guard(|| {
        let stepped = machine_mut(m)?.machine.step().map_err(Error::Eval)?;
        write_out(done, stepped.is_none())
    })
}

/// Steps until the command is a value.
///
/// # Safety
/// `m` must be a live machine handle.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_run(m: *mut RvaMachine) -> RvaStatus {
    guard(|| {
        machine_mut(m)?.machine.run().map_err(Error::Eval)?;
        Ok(())
    })
}

/// Number of steps taken so far, or zero for a null handle.
///
/// # Safety
/// `m` must be null or a live machine handle.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_steps(m: *const RvaMachine) -> u64 {
    m.as_ref().map_or(0, |m| m.machine.stats.steps)
}

/// The final value as JSON; an error if the machine has not finished.
///
/// # Safety
/// `m` must be a live machine handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_value_json(m: *mut RvaMachine, out: *mut *mut c_char) -> RvaStatus {
    guard(|| {
        let v = machine_mut(m)?.machine.result().ok_or_else(|| invalid("the machine has not finished"))?;
        write_string(out, v.to_json().to_string())
    })
}

/// The current heap as a JSON object of location to weights.
///
/// # Safety
/// `m` must be a live machine handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_heap_json(m: *mut RvaMachine, out: *mut *mut c_char) -> RvaStatus {
    guard(|| write_string(out, machine_mut(m)?.machine.heap().to_json().to_string()))
}

/// The current command, pretty-printed.
///
/// # Safety
/// `m` must be a live machine handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rva_machine_command(m: *mut RvaMachine, out: *mut *mut c_char) -> RvaStatus {
    guard(|| write_string(out, machine_mut(m)?.machine.command().to_string()))
}

/// Runs `main` on both backends from the heap drawn from `seed` and writes
/// their largest relative difference. Returns `OracleMismatch` above `tol`.
///
/// # Safety
/// `p` must be a live program handle; `max_rel_diff` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rva_oracle_compare(
    p: *const RvaProgram,
    seed: u64,
    tol: f64,
    max_rel_diff: *mut f64,
) -> RvaStatus {
    guard(|| {
        let program = &program_ref(p)?.program;
        let heap = program.initial_heap(seed)?;
        let main = program.main()?;
        let config = Config { check_types: false, ..Config::default() };
        let machine = Machine::new(&program.sig, heap.clone(), main.clone(), config)?.run().map_err(Error::Eval)?;
        let arrow = run_arrow(&program.sig, &heap, main, TieBreak::Strict)?;
        let d = backend_diff(&machine, &arrow);
        write_out(max_rel_diff, d)?;
        if d <= tol {
            Ok(())
        } else {
            Err(Error::OracleMismatch(format!("backends differ by {d:e}")))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_statuses() {
        assert_eq!(status_of(&Error::Input("x".into())), RvaStatus::InvalidArgument);
        assert_eq!(status_of(&Error::OracleMismatch("x".into())), RvaStatus::OracleMismatch);
    }

    #[test]
    fn panics_are_caught() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, RvaStatus::Panic);
        let msg = unsafe { CStr::from_ptr(rva_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"), "{msg}");
    }

    #[test]
    fn success_clears_the_last_error() {
        guard(|| Err(invalid("bad")));
        assert!(!rva_last_error().is_null());
        guard(|| Ok(()));
        assert!(rva_last_error().is_null());
    }
}
