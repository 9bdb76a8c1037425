use std::ffi::{c_char, CStr, CString};
use std::fs;
use std::path::PathBuf;
use std::ptr;

use serde_json::Value;
use umlk_ffi::*;

fn fixture(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name);
    CString::new(fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    let p = umlk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn take(s: *mut c_char) -> Value {
    assert!(!s.is_null());
    let v = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
    umlk_string_free(s);
    v
}

unsafe fn load(name: &str) -> *mut UmlkExercise {
    let mut ex = ptr::null_mut();
    assert_eq!(umlk_exercise_load(fixture(name).as_ptr(), &mut ex), UmlkStatus::Ok);
    ex
}

unsafe fn grade(ex: *const UmlkExercise, doc: &str) -> *mut UmlkReport {
    let mut report = ptr::null_mut();
    assert_eq!(umlk_evaluate(ex, fixture(doc).as_ptr(), &mut report), UmlkStatus::Ok);
    report
}

#[test]
fn similarity_and_version() {
    let (a, b) = (CString::new("User").unwrap(), CString::new("users ").unwrap());
    let mut v = 0.0;
    assert_eq!(
        unsafe { umlk_similarity(a.as_ptr(), b.as_ptr(), &mut v) },
        UmlkStatus::Ok
    );
    assert_eq!(v, 0.8);
    let version = unsafe { CStr::from_ptr(umlk_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn grading_through_handles() {
    unsafe {
        let ex = load("library.exercise");
        let clean = grade(ex, "library_clean.json");
        assert_eq!(umlk_report_completeness(clean), 1.0);
        assert_eq!(umlk_report_diagnostic_count(clean), 0);
        assert_eq!(umlk_report_solution_index(clean), 0);

        let flawed = grade(ex, "catalog/SEM_MISSING_RELATION.json");
        assert_eq!(umlk_report_diagnostic_count(flawed), 1);
        let mut text = ptr::null_mut();
        assert_eq!(umlk_report_to_json(flawed, &mut text), UmlkStatus::Ok);
        assert_eq!(take(text)["semantic"][0]["rule"], "SEM_MISSING_RELATION");

        umlk_report_free(clean);
        umlk_report_free(flawed);
        umlk_exercise_free(ex);
    }
}

#[test]
fn failures_set_status_and_message() {
    unsafe {
        let mut v = 0.0;
        let a = CString::new("a").unwrap();
        assert_eq!(
            umlk_similarity(ptr::null(), a.as_ptr(), &mut v),
            UmlkStatus::NullArgument
        );
        assert!(last_error().contains("a is NULL"));
        assert_eq!(
            umlk_similarity(a.as_ptr(), a.as_ptr(), ptr::null_mut()),
            UmlkStatus::NullArgument
        );

        let bad = [0xffu8, 0];
        assert_eq!(
            umlk_similarity(bad.as_ptr().cast(), a.as_ptr(), &mut v),
            UmlkStatus::InvalidUtf8
        );

        let mut ex = ptr::null_mut();
        let broken = CString::new("{}").unwrap();
        assert_eq!(
            umlk_exercise_load(broken.as_ptr(), &mut ex),
            UmlkStatus::InvalidExercise
        );
        assert!(ex.is_null());
        assert!(last_error().contains("MALFORMED"));

        let ex = load("shop.exercise");
        let mut report = ptr::null_mut();
        let junk = CString::new(r#"{"version":"3","type":"ClassDiagram"}"#).unwrap();
        assert_eq!(umlk_evaluate(ex, junk.as_ptr(), &mut report), UmlkStatus::ParseFailed);
        assert!(report.is_null());
        assert!(last_error().contains("UNKNOWN_NOTATION"));

        let mut cfg = ptr::null_mut();
        let bad_cfg = CString::new(r#"{"floorFraction": 3}"#).unwrap();
        assert_eq!(
            umlk_config_from_json(bad_cfg.as_ptr(), &mut cfg),
            UmlkStatus::InvalidConfig
        );
        let mut student = ptr::null_mut();
        assert_eq!(
            umlk_student_from_json(a.as_ptr(), &mut student),
            UmlkStatus::InvalidState
        );
        umlk_exercise_free(ex);
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        assert_eq!(umlk_report_completeness(ptr::null()), -1.0);
        assert_eq!(umlk_report_diagnostic_count(ptr::null()), 0);
        assert_eq!(umlk_student_total_xp(ptr::null()), 0);
        assert_eq!(umlk_student_level(ptr::null()), 0);
        umlk_exercise_free(ptr::null_mut());
        umlk_report_free(ptr::null_mut());
        umlk_config_free(ptr::null_mut());
        umlk_student_free(ptr::null_mut());
        umlk_string_free(ptr::null_mut());
        let mut out = ptr::null_mut();
        assert_eq!(umlk_report_to_json(ptr::null(), &mut out), UmlkStatus::NullArgument);
    }
}

#[test]
fn student_progress_to_completion() {
    unsafe {
        let cfg = umlk_config_default();
        let (id, name) = (CString::new("ann").unwrap(), CString::new("Ann").unwrap());
        let mut student = ptr::null_mut();
        assert_eq!(
            umlk_student_new(cfg, id.as_ptr(), name.as_ptr(), &mut student),
            UmlkStatus::Ok
        );
        assert_eq!(umlk_student_level(student), 1);

        let ex = load("library.exercise");
        let flawed = grade(ex, "catalog/SEM_MISSING_RELATION.json");
        let mut out = ptr::null_mut();
        assert_eq!(umlk_student_apply_check(student, cfg, flawed, &mut out), UmlkStatus::Ok);
        let step = take(out);
        assert_eq!(step["recap"]["newErrors"], 1);
        assert!(step["completion"].is_null());
        assert_eq!(umlk_student_mood(student), -1);

        let clean = grade(ex, "library_clean.json");
        assert_eq!(umlk_student_apply_check(student, cfg, clean, &mut out), UmlkStatus::Ok);
        let step = take(out);
        assert_eq!(step["completion"]["awardedXp"], 150);
        assert_eq!(umlk_student_total_xp(student), 150);
        assert_eq!(umlk_student_level(student), 2);

        assert_eq!(
            umlk_student_apply_check(student, cfg, clean, ptr::null_mut()),
            UmlkStatus::GameRule
        );
        assert!(last_error().starts_with("CHECK_ON_COMPLETED"));

        // Round trip through JSON keeps the state intact.
        let mut text = ptr::null_mut();
        assert_eq!(umlk_student_to_json(student, &mut text), UmlkStatus::Ok);
        let mut copy = ptr::null_mut();
        assert_eq!(umlk_student_from_json(text, &mut copy), UmlkStatus::Ok);
        assert_eq!(umlk_student_total_xp(copy), 150);
        umlk_string_free(text);

        for r in [flawed, clean] {
            umlk_report_free(r);
        }
        umlk_student_free(copy);
        umlk_student_free(student);
        umlk_exercise_free(ex);
        umlk_config_free(cfg);
    }
}
