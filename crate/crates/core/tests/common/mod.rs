#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use serde_json::{json, Map, Value};

use umlk::authoring::load_exercise;
use umlk::evaluator::RuleCode;
use umlk::game::{self, CheckOutcome, CourseConfig, ErrorFingerprint, StudentState};
use umlk::model::ExerciseSpec;
use umlk::{parse_document, DiagramDocument};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_text(name: &str) -> String {
    fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn exercise(name: &str) -> ExerciseSpec {
    load_exercise(&fixture_text(&format!("{name}.exercise"))).expect("fixture exercise is valid")
}

pub fn document(name: &str) -> DiagramDocument {
    parse_document(&fixture_text(name)).expect("fixture document parses")
}

/// Catalog fixtures as (expected rule, file name), sorted by file name.
pub fn catalog() -> Vec<(RuleCode, String)> {
    let mut out: Vec<(RuleCode, String)> = fs::read_dir(fixtures().join("catalog"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .map(|name| {
            let rule = name.trim_end_matches(".json").parse().expect("file named after a rule");
            (rule, format!("catalog/{name}"))
        })
        .collect();
    out.sort_by(|a, b| a.1.cmp(&b.1));
    out
}

// ---------------------------------------------------------------------------
// Levenshtein oracle: full (m+1)x(n+1) matrix, written independently of the
// library's two-row version.

pub fn oracle_normalize(s: &str) -> Vec<char> {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .chars()
        .collect()
}

pub fn oracle_distance(a: &[char], b: &[char]) -> usize {
    let (m, n) = (a.len(), b.len());
    let mut d = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[m][n]
}

pub fn oracle_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (oracle_normalize(a), oracle_normalize(b));
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - oracle_distance(&a, &b) as f64 / longest as f64
}

/// Short strings over a small alphabet so that near matches are common.
pub fn arb_name() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!['a', 'b', 'c', 'A', 'é', ' ', 'x']), 0..12)
        .prop_map(|cs| cs.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Document generation.

// Within each pool, every pair of names is well below the match threshold.
pub const SYSTEM_NAMES: &[&str] = &["Library", "Hospital", "Airport", "Bakery"];
pub const ACTOR_NAMES: &[&str] = &["Student", "Teacher", "Pilot", "Nurse", "Cashier", "Visitor"];
pub const USE_CASE_NAMES: &[&str] = &[
    "Borrow book",
    "Check in",
    "Order pizza",
    "Refund ticket",
    "Schedule exam",
    "Update profile",
    "Print receipt",
];

#[derive(Debug, Clone)]
pub struct GenDoc {
    pub value: Value,
}

impl GenDoc {
    pub fn text(&self) -> String {
        serde_json::to_string_pretty(&self.value).unwrap()
    }

    pub fn parse(&self) -> DiagramDocument {
        parse_document(&self.text()).expect("generated documents parse")
    }
}

fn opaque(seed: u32) -> Map<String, Value> {
    let mut m = Map::new();
    if seed.is_multiple_of(2) {
        m.insert(
            "bounds".into(),
            json!({"x": seed % 700, "y": seed % 300, "width": 80 + seed % 40, "height": 40}),
        );
    }
    if seed.is_multiple_of(3) {
        m.insert("highlight".into(), json!(format!("#{:06x}", seed % 0xffffff)));
    }
    if seed.is_multiple_of(5) {
        m.insert(
            "meta".into(),
            json!({"tags": ["a", seed % 7], "ratio": 0.5, "flag": null}),
        );
    }
    m
}

/// Syntax-clean use case diagrams with random ids, sizes, relations and
/// opaque fields. Names come from the pools above, so same-kind names are
/// mutually dissimilar.
pub fn arb_clean_document() -> impl Strategy<Value = GenDoc> {
    (
        1..=SYSTEM_NAMES.len().min(2),
        1..=4usize,
        1..=6usize,
        prop::collection::vec(any::<u32>(), 96),
    )
        .prop_map(|(n_sys, n_act, n_uc, pool)| build_document(n_sys, n_act, n_uc, &pool))
}

pub fn build_document(n_sys: usize, n_act: usize, n_uc: usize, pool: &[u32]) -> GenDoc {
    let mut draw = pool.iter().copied().cycle();
    let mut next = move || draw.next().unwrap();

    let total = n_sys + n_act + n_uc;
    // Ids are shuffled so canonical order mixes kinds.
    let mut ids: Vec<String> = (0..total).map(|i| format!("el{i:02}")).collect();
    for i in (1..ids.len()).rev() {
        let j = next() as usize % (i + 1);
        ids.swap(i, j);
    }
    let sys_ids = &ids[..n_sys];
    let act_ids = &ids[n_sys..n_sys + n_act];
    let uc_ids = &ids[n_sys + n_act..];

    let mut elements = Map::new();
    let mut add = |id: &str, name: &str, ty: &str, owner: Value, seed: u32| {
        let mut rec = Map::new();
        rec.insert("id".into(), json!(id));
        rec.insert("name".into(), json!(name));
        rec.insert("type".into(), json!(ty));
        rec.insert("owner".into(), owner);
        rec.extend(opaque(seed));
        elements.insert(id.to_string(), Value::Object(rec));
    };
    for (i, id) in sys_ids.iter().enumerate() {
        add(id, SYSTEM_NAMES[i], "UseCaseSystem", Value::Null, next());
    }
    for (i, id) in act_ids.iter().enumerate() {
        add(id, ACTOR_NAMES[i], "UseCaseActor", Value::Null, next());
    }
    for (i, id) in uc_ids.iter().enumerate() {
        let owner = &sys_ids[next() as usize % n_sys];
        add(id, USE_CASE_NAMES[i], "UseCase", json!(owner), next());
    }

    let mut candidates: Vec<(&str, &String, &String)> = Vec::new();
    for uc in uc_ids {
        for a in act_ids.iter().chain(sys_ids) {
            candidates.push(("UseCaseAssociation", a, uc));
        }
        for other in uc_ids.iter().filter(|o| *o != uc) {
            candidates.push(("UseCaseInclude", uc, other));
            candidates.push(("UseCaseExtend", uc, other));
        }
    }
    for a in act_ids {
        for b in act_ids.iter().filter(|b| *b != a) {
            candidates.push(("UseCaseGeneralization", a, b));
        }
    }

    let mut relationships = Map::new();
    for (k, (ty, src, tgt)) in candidates.into_iter().enumerate() {
        if next() % 4 != 0 {
            continue;
        }
        // Associations are drawn in either direction.
        let (src, tgt) = if ty == "UseCaseAssociation" && next() % 2 == 0 {
            (tgt, src)
        } else {
            (src, tgt)
        };
        let id = format!("rel{k:03}");
        let mut rec = Map::new();
        rec.insert("id".into(), json!(id));
        rec.insert("type".into(), json!(ty));
        rec.insert("source".into(), json!({"element": src, "direction": "Up"}));
        rec.insert("target".into(), json!({"element": tgt}));
        rec.extend(opaque(next()));
        relationships.insert(id, Value::Object(rec));
    }

    let mut top = Map::new();
    top.insert("version".into(), json!("3.0.0"));
    top.insert("type".into(), json!("UseCaseDiagram"));
    top.extend(opaque(next()));
    top.insert("elements".into(), Value::Object(elements));
    top.insert("relationships".into(), Value::Object(relationships));
    GenDoc {
        value: Value::Object(top),
    }
}

// ---------------------------------------------------------------------------
// XP bookkeeping laws.

#[derive(Debug, Clone)]
pub struct XpCase {
    pub config: CourseConfig,
    pub base_xp: Vec<u64>,
    /// (exercise index, error subset bitmask, completeness)
    pub checks: Vec<(usize, u8, f64)>,
}

pub fn universe() -> Vec<ErrorFingerprint> {
    [
        "SYN_MISSING_NAME|#e1",
        "SYN_DUPLICATE_NAME|customer",
        "SEM_MISSING_ELEMENT|pay",
        "SEM_MISSING_RELATION|r0",
        "SEM_WRONG_SYSTEM|buy",
        "SEM_EXTRA_RELATION|a,b",
        "SEM_FORBIDDEN_NAME|database",
        "SYN_ACTOR_IN_SYSTEM|clerk",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect()
}

pub fn fingerprints(mask: u8) -> BTreeSet<ErrorFingerprint> {
    universe()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, f)| f)
        .collect()
}

pub fn arb_xp_case() -> impl Strategy<Value = XpCase> {
    (
        0.0f64..0.4,
        0.05f64..0.95,
        prop::collection::vec(1u64..2000, 1..4),
        prop::collection::vec(
            (0usize..3, any::<u8>(), prop::sample::select(vec![0.0, 0.3, 0.7, 1.0])),
            1..30,
        ),
    )
        .prop_map(|(deduction, floor, base_xp, checks)| {
            let config = CourseConfig {
                deduction_fraction: deduction,
                floor_fraction: floor,
                ..CourseConfig::default()
            };
            let checks = checks
                .into_iter()
                .map(|(ex, mask, c)| (ex % base_xp.len(), mask, c))
                .collect();
            XpCase {
                config,
                base_xp,
                checks,
            }
        })
}

/// Runs the case and checks floor, idempotence, restore exactness and
/// monotone totals. Returns a description of the first violation.
pub fn check_xp_laws(case: &XpCase) -> Result<(), String> {
    let cfg = &case.config;
    let mut state = StudentState::new("s", "S", cfg);
    for (step, &(ex, mask, completeness)) in case.checks.iter().enumerate() {
        let ex_id = format!("ex{ex}");
        let base = case.base_xp[ex];
        let floor = cfg.floor_xp(base);
        let outcome = CheckOutcome {
            completeness,
            fingerprints: fingerprints(mask),
        };
        let before = state.clone();
        let t = match game::advance(&state, cfg, &ex_id, base, &outcome) {
            Ok(t) => t,
            Err(_) if state.has_completed(&ex_id) => continue,
            Err(e) => return Err(format!("step {step}: unexpected {e}")),
        };
        if t.recap.obtainable_xp < floor {
            return Err(format!(
                "step {step}: obtainable {} below floor {floor}",
                t.recap.obtainable_xp
            ));
        }
        if t.state.total_xp < before.total_xp || t.state.level < before.level {
            return Err(format!("step {step}: total XP or level decreased"));
        }
        if !before.owned_props.is_subset(&t.state.owned_props) {
            return Err(format!("step {step}: owned props shrank"));
        }

        if t.completion.is_none() {
            // Same report again: no change to obtainable XP or deductions.
            let (again, recap) = game::apply_outcome(&t.state, cfg, &ex_id, base, &outcome).unwrap();
            let (s1, s2) = (&t.state.sessions[&ex_id], &again.sessions[&ex_id]);
            if recap.obtainable_xp != t.recap.obtainable_xp || s1.deductions != s2.deductions {
                return Err(format!("step {step}: repeating the same report changed XP bookkeeping"));
            }

            // Introduce each absent error, then fix it: obtainable returns exactly.
            for extra in universe().into_iter().filter(|f| !outcome.fingerprints.contains(f)) {
                let mut with = outcome.fingerprints.clone();
                with.insert(extra.clone());
                let bumped = CheckOutcome {
                    completeness,
                    fingerprints: with,
                };
                let (s_err, _) = game::apply_outcome(&t.state, cfg, &ex_id, base, &bumped).unwrap();
                let (_, r_fix) = game::apply_outcome(&s_err, cfg, &ex_id, base, &outcome).unwrap();
                if r_fix.obtainable_xp != t.recap.obtainable_xp {
                    return Err(format!(
                        "step {step}: fixing {extra} restored {} instead of {}",
                        r_fix.obtainable_xp, t.recap.obtainable_xp
                    ));
                }
            }
        }
        state = t.state;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Data directory for store, service and CLI tests.

pub const TEACHER_TOKEN: &str = "tok-teacher";

pub fn token(student: &str) -> String {
    format!("tok-{student}")
}

pub fn course_file() -> Value {
    let mut config = serde_json::to_value(CourseConfig::default()).unwrap();
    config["users"] = json!([
        {"userId": "teacher", "displayName": "Ms Smith", "token": TEACHER_TOKEN, "isTeacher": true},
        {"userId": "ann", "displayName": "Ann", "token": token("ann")},
        {"userId": "bob", "displayName": "Bob", "token": token("bob")},
        {"userId": "cleo", "displayName": "Cleo", "token": token("cleo")},
    ]);
    config
}

/// A data directory with three students, one teacher and the fixture exercises.
pub fn data_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("course.config"),
        serde_json::to_string_pretty(&course_file()).unwrap(),
    )
    .unwrap();
    fs::create_dir_all(dir.path().join("exercises")).unwrap();
    for name in ["library", "shop", "clinic"] {
        fs::copy(
            fixtures().join(format!("{name}.exercise")),
            dir.path().join(format!("exercises/{name}.exercise")),
        )
        .unwrap();
    }
    dir
}

/// Snapshot files by name, as raw bytes.
pub fn snapshots(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir.join("students"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "state"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}
