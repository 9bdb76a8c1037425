//! C ABI for the umlk grading engine.
//!
//! Conventions:
//! - Fallible calls return a [`UmlkStatus`] and write results through out
//!   pointers. On failure [`umlk_last_error`] describes what went wrong.
//! - Handles are opaque and owned by the caller; release them with the
//!   matching `*_free` function. Passing NULL to a free function is a no-op.
//! - Strings going in are NUL-terminated UTF-8. Strings coming out must be
//!   released with [`umlk_string_free`].
//! - Handles are not synchronized; share them across threads only with
//!   external locking.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use umlk::authoring::load_exercise;
use umlk::evaluator::similarity;
use umlk::game::{self, CheckOutcome, CourseConfig, StudentState};
use umlk::model::ExerciseSpec;
use umlk::{evaluate_exercise, parse_document, EvaluationReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UmlkStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseFailed = 3,
    InvalidExercise = 4,
    InvalidConfig = 5,
    InvalidState = 6,
    GameRule = 7,
    Panic = 99,
}

/// A loaded, validated exercise.
pub struct UmlkExercise {
    spec: ExerciseSpec,
}

/// The result of grading one diagram.
pub struct UmlkReport {
    exercise_id: String,
    base_xp: u64,
    report: EvaluationReport,
}

/// Course game parameters.
pub struct UmlkConfig {
    config: CourseConfig,
}

/// One student's game state.
pub struct UmlkStudent {
    state: StudentState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).expect("NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

struct Failure(UmlkStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: UmlkStatus, message: impl Into<String>) -> FfiResult<T> {
    Err(Failure(status, message.into()))
}

/// Runs `f`, converting failures and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> UmlkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UmlkStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            UmlkStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(UmlkStatus::NullArgument, format!("{what} is NULL"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(s),
        Err(_) => fail(UmlkStatus::InvalidUtf8, format!("{what} is not valid UTF-8")),
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .map_or_else(|| fail(UmlkStatus::NullArgument, format!("{what} is NULL")), Ok)
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .map_or_else(|| fail(UmlkStatus::NullArgument, format!("{what} is NULL")), Ok)
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs replaced").into_raw()
}

fn json(value: serde_json::Value) -> *mut c_char {
    c_string(value.to_string())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn umlk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn umlk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn umlk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Name similarity in [0, 1] after normalization.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_similarity(a: *const c_char, b: *const c_char, out_value: *mut f64) -> UmlkStatus {
    guard(|| {
        let (a, b) = (text(a, "a")?, text(b, "b")?);
        *out(out_value, "out_value")? = similarity(a, b);
        Ok(())
    })
}

/// Loads and validates a solution file.
///
/// # Safety
/// `solution_text` must be a NUL-terminated string; `out_exercise` writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_exercise_load(
    solution_text: *const c_char,
    out_exercise: *mut *mut UmlkExercise,
) -> UmlkStatus {
    guard(|| {
        let slot = out(out_exercise, "out_exercise")?;
        let spec = match load_exercise(text(solution_text, "solution_text")?) {
            Ok(spec) => spec,
            Err(issues) => {
                return fail(
                    UmlkStatus::InvalidExercise,
                    serde_json::to_string(&issues).expect("issues serialize"),
                )
            }
        };
        *slot = Box::into_raw(Box::new(UmlkExercise { spec }));
        Ok(())
    })
}

/// # Safety
/// `exercise` must be NULL or a live handle from [`umlk_exercise_load`].
#[no_mangle]
pub unsafe extern "C" fn umlk_exercise_free(exercise: *mut UmlkExercise) {
    if !exercise.is_null() {
        drop(Box::from_raw(exercise));
    }
}

/// Parses a diagram document and grades it against every solution.
///
/// # Safety
/// `exercise` must be a live handle; `document_text` a NUL-terminated string;
/// `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_evaluate(
    exercise: *const UmlkExercise,
    document_text: *const c_char,
    out_report: *mut *mut UmlkReport,
) -> UmlkStatus {
    guard(|| {
        let exercise = handle(exercise, "exercise")?;
        let slot = out(out_report, "out_report")?;
        let doc = match parse_document(text(document_text, "document_text")?) {
            Ok(doc) => doc,
            Err(e) => return fail(UmlkStatus::ParseFailed, serde_json::to_string(&e).expect("serializes")),
        };
        let report = evaluate_exercise(&exercise.spec, &doc);
        *slot = Box::into_raw(Box::new(UmlkReport {
            exercise_id: exercise.spec.exercise_id.clone(),
            base_xp: exercise.spec.base_xp,
            report,
        }));
        Ok(())
    })
}

/// Overall completeness in [0, 1], or a negative value for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_report_completeness(report: *const UmlkReport) -> f64 {
    report.as_ref().map_or(-1.0, |r| r.report.completeness.overall)
}

/// Number of syntactic plus semantic diagnostics (0 for NULL).
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_report_diagnostic_count(report: *const UmlkReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.diagnostic_count())
}

/// Index of the solution the report was graded against (0 for NULL).
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_report_solution_index(report: *const UmlkReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.solution_index)
}

/// The full report as JSON. Free the result with [`umlk_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_report_to_json(report: *const UmlkReport, out_json: *mut *mut c_char) -> UmlkStatus {
    guard(|| {
        let report = handle(report, "report")?;
        *out(out_json, "out_json")? = json(serde_json::json!(report.report));
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a live handle from [`umlk_evaluate`].
#[no_mangle]
pub unsafe extern "C" fn umlk_report_free(report: *mut UmlkReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The default course configuration.
#[no_mangle]
pub extern "C" fn umlk_config_default() -> *mut UmlkConfig {
    Box::into_raw(Box::new(UmlkConfig {
        config: CourseConfig::default(),
    }))
}

/// Reads and validates a course configuration from JSON.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_config` writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_config_from_json(
    config_json: *const c_char,
    out_config: *mut *mut UmlkConfig,
) -> UmlkStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let config: CourseConfig = match serde_json::from_str(text(config_json, "config_json")?) {
            Ok(c) => c,
            Err(e) => return fail(UmlkStatus::InvalidConfig, e.to_string()),
        };
        if let Err(e) = config.validate() {
            return fail(UmlkStatus::InvalidConfig, e.to_string());
        }
        *slot = Box::into_raw(Box::new(UmlkConfig { config }));
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_config_free(config: *mut UmlkConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// A fresh student at level 1.
///
/// # Safety
/// `config` must be a live handle; the strings NUL-terminated;
/// `out_student` writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_new(
    config: *const UmlkConfig,
    student_id: *const c_char,
    display_name: *const c_char,
    out_student: *mut *mut UmlkStudent,
) -> UmlkStatus {
    guard(|| {
        let config = handle(config, "config")?;
        let slot = out(out_student, "out_student")?;
        let state = StudentState::new(
            text(student_id, "student_id")?,
            text(display_name, "display_name")?,
            &config.config,
        );
        *slot = Box::into_raw(Box::new(UmlkStudent { state }));
        Ok(())
    })
}

/// Restores a student from the JSON produced by [`umlk_student_to_json`].
///
/// # Safety
/// `state_json` must be a NUL-terminated string; `out_student` writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_from_json(
    state_json: *const c_char,
    out_student: *mut *mut UmlkStudent,
) -> UmlkStatus {
    guard(|| {
        let slot = out(out_student, "out_student")?;
        let state: StudentState = match serde_json::from_str(text(state_json, "state_json")?) {
            Ok(s) => s,
            Err(e) => return fail(UmlkStatus::InvalidState, e.to_string()),
        };
        *slot = Box::into_raw(Box::new(UmlkStudent { state }));
        Ok(())
    })
}

/// The student's state as JSON. Free the result with [`umlk_string_free`].
///
/// # Safety
/// `student` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_to_json(student: *const UmlkStudent, out_json: *mut *mut c_char) -> UmlkStatus {
    guard(|| {
        let student = handle(student, "student")?;
        *out(out_json, "out_json")? = json(serde_json::json!(student.state));
        Ok(())
    })
}

/// Total XP (0 for NULL).
///
/// # Safety
/// `student` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_total_xp(student: *const UmlkStudent) -> u64 {
    student.as_ref().map_or(0, |s| s.state.total_xp)
}

/// Current level (0 for NULL).
///
/// # Safety
/// `student` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_level(student: *const UmlkStudent) -> u32 {
    student.as_ref().map_or(0, |s| s.state.level)
}

/// Mood index from -3 to 3 (0 for NULL).
///
/// # Safety
/// `student` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_mood(student: *const UmlkStudent) -> i8 {
    student.as_ref().map_or(0, |s| s.state.mood.index())
}

/// Applies a graded check to the student: XP bookkeeping, mood, and
/// completion when the report is perfect. On success `out_json` (if not
/// NULL) receives `{"recap": ..., "completion": ... | null}`. On failure the
/// student is unchanged.
///
/// # Safety
/// `student`, `config` and `report` must be live handles; `out_json` NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_apply_check(
    student: *mut UmlkStudent,
    config: *const UmlkConfig,
    report: *const UmlkReport,
    out_json: *mut *mut c_char,
) -> UmlkStatus {
    guard(|| {
        let config = handle(config, "config")?;
        let report = handle(report, "report")?;
        let student = out(student, "student")?;
        let outcome = CheckOutcome::from_report(&report.report);
        let t = match game::advance(
            &student.state,
            &config.config,
            &report.exercise_id,
            report.base_xp,
            &outcome,
        ) {
            Ok(t) => t,
            Err(e) => return fail(UmlkStatus::GameRule, format!("{}: {e}", e.code())),
        };
        student.state = t.state;
        if let Some(slot) = out_json.as_mut() {
            *slot = json(serde_json::json!({"recap": t.recap, "completion": t.completion}));
        }
        Ok(())
    })
}

/// # Safety
/// `student` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn umlk_student_free(student: *mut UmlkStudent) {
    if !student.is_null() {
        drop(Box::from_raw(student));
    }
}
