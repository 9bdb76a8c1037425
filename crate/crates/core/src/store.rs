//! File-backed course state.
//!
//! Layout of the data directory:
//!
//! ```text
//! course.config          game parameters and user accounts
//! exercises/<id>.exercise solution files
//! students/<id>.state    latest snapshot per student
//! events.log             append-only, one JSON event per line
//! ```
//!
//! Snapshots are a cache. On startup every student state is rebuilt by
//! replaying `events.log`, and the snapshots are rewritten from the result.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::authoring::{load_exercise, serialize_exercise, validate_exercise};
use crate::evaluator::{evaluate_exercise, EvaluationReport};
use crate::game::{
    self, equip_props, CheckOutcome, CheckTransition, CompletionResult, ConfigError, CourseConfig, ErrorFingerprint,
    GameError, LeaderboardEntry, LeaderboardKind, MoodState, Recap, StudentState,
};
use crate::model::{AuthoringIssue, Boss, ExerciseSpec, ReferenceSolution};
use crate::parser::{parse_document, ParseError};

pub const CONFIG_FILE: &str = "course.config";
pub const EVENTS_FILE: &str = "events.log";
pub const EXERCISES_DIR: &str = "exercises";
pub const STUDENTS_DIR: &str = "students";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserAccount {
    pub user_id: String,
    pub display_name: String,
    pub token: String,
    #[serde(default)]
    pub is_teacher: bool,
}

/// Contents of `course.config`: the game parameters plus user accounts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CourseFile {
    #[serde(flatten)]
    pub config: CourseConfig,
    #[serde(default)]
    pub users: Vec<UserAccount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckEvent {
    pub student_id: String,
    pub exercise_id: String,
    pub timestamp: u64,
    pub document_text: String,
    pub completeness: f64,
    pub fingerprints: BTreeSet<ErrorFingerprint>,
    pub base_xp: u64,
    pub obtainable_xp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Event {
    Check(CheckEvent),
    Equip {
        student_id: String,
        timestamp: u64,
        props: BTreeSet<String>,
    },
    Config {
        timestamp: u64,
        config: CourseConfig,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("document could not be parsed: {0}")]
    ParseFailed(ParseError),
    #[error("unknown exercise '{0}'")]
    UnknownExercise(String),
    #[error("unknown student '{0}'")]
    UnknownStudent(String),
    #[error("exercise '{0}' is already completed")]
    AlreadyCompleted(String),
    #[error("solutions for '{0}' unlock after completing the exercise")]
    NotUnlocked(String),
    #[error("exercise '{0}' already exists")]
    ExerciseExists(String),
    #[error("exercise id in the body does not match the path")]
    IdMismatch,
    #[error("invalid identifier '{0}': use letters, digits, '-' and '_'")]
    InvalidId(String),
    #[error("invalid exercise")]
    InvalidExercise(Vec<AuthoringIssue>),
    #[error("invalid course config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("corrupt event log at line {line}: {detail}")]
    CorruptLog { line: usize, detail: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::ParseFailed(_) => "PARSE_FAILED",
            StoreError::UnknownExercise(_) => "UNKNOWN_EXERCISE",
            StoreError::UnknownStudent(_) => "UNKNOWN_STUDENT",
            StoreError::AlreadyCompleted(_) => "ALREADY_COMPLETED",
            StoreError::NotUnlocked(_) => "NOT_UNLOCKED",
            StoreError::ExerciseExists(_) => "EXERCISE_EXISTS",
            StoreError::IdMismatch => "ID_MISMATCH",
            StoreError::InvalidId(_) => "INVALID_ID",
            StoreError::InvalidExercise(_) => "INVALID_EXERCISE",
            StoreError::InvalidConfig(_) => "INVALID_CONFIG",
            StoreError::Game(e) => e.code(),
            StoreError::CorruptLog { .. } => "CORRUPT_LOG",
            StoreError::Io(_) => "IO_ERROR",
        }
    }
}

impl From<ConfigError> for StoreError {
    fn from(e: ConfigError) -> Self {
        StoreError::InvalidConfig(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckResponse {
    pub report: EvaluationReport,
    pub recap: Recap,
    pub mood: MoodState,
    pub mood_label: String,
    pub obtainable_xp: u64,
    pub base_xp: u64,
    pub total_xp: u64,
    pub level: u32,
    pub completion: Option<CompletionResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseSummary {
    pub exercise_id: String,
    pub title: String,
    pub base_xp: u64,
    pub boss: Boss,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseDetail {
    pub exercise_id: String,
    pub title: String,
    pub statement: String,
    pub base_xp: u64,
    pub boss: Boss,
    pub completed: bool,
    pub leaderboard: Vec<LeaderboardEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Profile {
    pub state: StudentState,
    pub mood_label: String,
    pub next_level_xp: Option<u64>,
}

pub fn apply_check_event(
    state: &StudentState,
    config: &CourseConfig,
    event: &CheckEvent,
) -> Result<CheckTransition, GameError> {
    let outcome = CheckOutcome {
        completeness: event.completeness,
        fingerprints: event.fingerprints.clone(),
    };
    game::advance(state, config, &event.exercise_id, event.base_xp, &outcome)
}

/// Rebuilds every student state from an event sequence.
pub fn replay<'e>(
    events: impl IntoIterator<Item = &'e Event>,
    users: &[UserAccount],
) -> Result<(CourseConfig, BTreeMap<String, StudentState>), GameError> {
    let mut config = CourseConfig::default();
    let mut students: BTreeMap<String, StudentState> = BTreeMap::new();
    let fresh = |id: &str, config: &CourseConfig| {
        let name = users
            .iter()
            .find(|u| u.user_id == id)
            .map_or(id, |u| u.display_name.as_str());
        StudentState::new(id, name, config)
    };
    for event in events {
        match event {
            Event::Config { config: c, .. } => config = c.clone(),
            Event::Check(check) => {
                let state = students
                    .remove(&check.student_id)
                    .unwrap_or_else(|| fresh(&check.student_id, &config));
                let t = apply_check_event(&state, &config, check)?;
                students.insert(check.student_id.clone(), t.state);
            }
            Event::Equip { student_id, props, .. } => {
                let state = students
                    .remove(student_id)
                    .unwrap_or_else(|| fresh(student_id, &config));
                students.insert(student_id.clone(), equip_props(&state, props)?);
            }
        }
    }
    Ok((config, students))
}

/// Reads an event log. A final line without its newline is a torn write
/// and is dropped; any other unreadable line is an error.
pub fn read_event_log(path: &Path) -> Result<Vec<Event>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut events = Vec::new();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        number += 1;
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(line.trim_end()) {
            Ok(e) => events.push(e),
            Err(_) if !complete => break,
            Err(e) => {
                return Err(StoreError::CorruptLog {
                    line: number,
                    detail: e.to_string(),
                })
            }
        }
    }
    Ok(events)
}

pub fn snapshot_text(state: &StudentState) -> String {
    let mut text = serde_json::to_string_pretty(state).expect("student state always serializes");
    text.push('\n');
    text
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Writes via a temporary file and rename so readers never see half a file.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

struct Course {
    file: CourseFile,
    exercises: BTreeMap<String, Arc<ExerciseSpec>>,
}

/// Shared, thread-safe handle on a data directory.
///
/// Locking: the course lock is held shared by every student mutation and
/// exclusively by config and exercise edits; each student has its own mutex,
/// held for the whole of a check. Events reach the log in an order
/// consistent with both.
type Slot = Arc<Mutex<Option<StudentState>>>;

pub struct Store {
    dir: PathBuf,
    course: RwLock<Course>,
    /// `None` until the student's first committed event, so that the
    /// starting state is built under the config in force at that moment,
    /// exactly as replay does.
    students: Mutex<BTreeMap<String, Slot>>,
    log: Mutex<File>,
}

impl Store {
    /// Opens (or initializes) a data directory and restores state by replay.
    pub fn open(dir: impl AsRef<Path>) -> Result<Store, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(dir.join(EXERCISES_DIR))?;
        fs::create_dir_all(dir.join(STUDENTS_DIR))?;

        let config_path = dir.join(CONFIG_FILE);
        let file: CourseFile = if config_path.exists() {
            serde_json::from_str(&fs::read_to_string(&config_path)?)
                .map_err(|e| StoreError::InvalidConfig(e.to_string()))?
        } else {
            let file = CourseFile::default();
            write_atomic(
                &config_path,
                &serde_json::to_string_pretty(&file).expect("serializable"),
            )?;
            file
        };
        file.config.validate()?;
        if let Some(u) = file.users.iter().find(|u| !valid_id(&u.user_id)) {
            return Err(StoreError::InvalidId(u.user_id.clone()));
        }

        let mut exercises = BTreeMap::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir.join(EXERCISES_DIR))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "exercise"))
            .collect();
        paths.sort();
        for path in paths {
            let spec = load_exercise(&fs::read_to_string(&path)?).map_err(StoreError::InvalidExercise)?;
            exercises.insert(spec.exercise_id.clone(), Arc::new(spec));
        }

        let log_path = dir.join(EVENTS_FILE);
        let events = read_event_log(&log_path)?;
        let (replayed_config, states) = replay(&events, &file.users)?;
        let mut log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        // The log must begin with the config in force, and must record any
        // edit made to course.config while the service was down.
        if events.is_empty() || replayed_config != file.config {
            append_event(
                &mut log,
                &Event::Config {
                    timestamp: now_millis(),
                    config: file.config.clone(),
                },
            )?;
        }

        for state in states.values() {
            write_atomic(
                &dir.join(STUDENTS_DIR).join(format!("{}.state", state.student_id)),
                &snapshot_text(state),
            )?;
        }
        let students = states
            .into_iter()
            .map(|(id, s)| (id, Arc::new(Mutex::new(Some(s)))))
            .collect();

        Ok(Store {
            dir,
            course: RwLock::new(Course { file, exercises }),
            students: Mutex::new(students),
            log: Mutex::new(log),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn authenticate(&self, token: &str) -> Option<UserAccount> {
        let course = self.course.read().expect("course lock");
        course.file.users.iter().find(|u| u.token == token).cloned()
    }

    pub fn config(&self) -> CourseConfig {
        self.course.read().expect("course lock").file.config.clone()
    }

    fn user(course: &Course, student_id: &str) -> Result<UserAccount, StoreError> {
        course
            .file
            .users
            .iter()
            .find(|u| u.user_id == student_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownStudent(student_id.to_string()))
    }

    fn exercise(course: &Course, exercise_id: &str) -> Result<Arc<ExerciseSpec>, StoreError> {
        course
            .exercises
            .get(exercise_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownExercise(exercise_id.to_string()))
    }

    fn student_slot(&self, course: &Course, student_id: &str) -> Result<(UserAccount, Slot), StoreError> {
        let user = Self::user(course, student_id)?;
        let mut students = self.students.lock().expect("students lock");
        let slot = students.entry(student_id.to_string()).or_default().clone();
        Ok((user, slot))
    }

    fn current(stored: &Option<StudentState>, user: &UserAccount, config: &CourseConfig) -> StudentState {
        stored
            .clone()
            .unwrap_or_else(|| StudentState::new(&user.user_id, &user.display_name, config))
    }

    /// Current state of a student (a fresh state if they never acted).
    pub fn student(&self, student_id: &str) -> Result<StudentState, StoreError> {
        let course = self.course.read().expect("course lock");
        let (user, slot) = self.student_slot(&course, student_id)?;
        let stored = slot.lock().expect("student lock");
        Ok(Self::current(&stored, &user, &course.file.config))
    }

    fn append(&self, event: &Event) -> Result<(), StoreError> {
        let mut log = self.log.lock().expect("log lock");
        append_event(&mut log, event)?;
        Ok(())
    }

    fn write_snapshot(&self, state: &StudentState) -> Result<(), StoreError> {
        let path = self.dir.join(STUDENTS_DIR).join(format!("{}.state", state.student_id));
        write_atomic(&path, &snapshot_text(state))?;
        Ok(())
    }

    /// Grades a submission and advances the student's game state. Nothing is
    /// mutated unless the event was durably appended.
    pub fn handle_check(
        &self,
        student_id: &str,
        exercise_id: &str,
        document_text: &str,
    ) -> Result<CheckResponse, StoreError> {
        let course = self.course.read().expect("course lock");
        let exercise = Self::exercise(&course, exercise_id)?;
        let (user, slot) = self.student_slot(&course, student_id)?;
        let mut stored = slot.lock().expect("student lock");
        let state = Self::current(&stored, &user, &course.file.config);
        if state.has_completed(exercise_id) {
            return Err(StoreError::AlreadyCompleted(exercise_id.to_string()));
        }

        let doc = parse_document(document_text).map_err(StoreError::ParseFailed)?;
        let report = evaluate_exercise(&exercise, &doc);
        let outcome = CheckOutcome::from_report(&report);
        let base_xp = exercise.base_xp;
        let mut event = CheckEvent {
            student_id: student_id.to_string(),
            exercise_id: exercise_id.to_string(),
            timestamp: now_millis(),
            document_text: document_text.to_string(),
            completeness: outcome.completeness,
            fingerprints: outcome.fingerprints,
            base_xp,
            obtainable_xp: 0,
        };
        let transition = apply_check_event(&state, &course.file.config, &event)?;
        event.obtainable_xp = transition.recap.obtainable_xp;

        self.append(&Event::Check(event))?;
        self.write_snapshot(&transition.state)?;
        let state = transition.state;
        let response = CheckResponse {
            report,
            recap: transition.recap,
            mood: state.mood,
            mood_label: state.mood.label().to_string(),
            obtainable_xp: state.sessions[exercise_id].last_obtainable,
            base_xp,
            total_xp: state.total_xp,
            level: state.level,
            completion: transition.completion,
        };
        *stored = Some(state);
        Ok(response)
    }

    pub fn get_solution_view(&self, student_id: &str, exercise_id: &str) -> Result<Vec<ReferenceSolution>, StoreError> {
        let course = self.course.read().expect("course lock");
        let exercise = Self::exercise(&course, exercise_id)?;
        let (_, slot) = self.student_slot(&course, student_id)?;
        let completed = slot
            .lock()
            .expect("student lock")
            .as_ref()
            .is_some_and(|s| s.has_completed(exercise_id));
        if completed {
            Ok(exercise.solutions.clone())
        } else {
            Err(StoreError::NotUnlocked(exercise_id.to_string()))
        }
    }

    pub fn list_exercises(&self, student_id: &str) -> Result<Vec<ExerciseSummary>, StoreError> {
        let state = self.student(student_id)?;
        let course = self.course.read().expect("course lock");
        Ok(course
            .exercises
            .values()
            .map(|e| ExerciseSummary {
                exercise_id: e.exercise_id.clone(),
                title: e.title.clone(),
                base_xp: e.base_xp,
                boss: e.boss.clone(),
                completed: state.has_completed(&e.exercise_id),
            })
            .collect())
    }

    pub fn exercise_detail(&self, student_id: &str, exercise_id: &str) -> Result<ExerciseDetail, StoreError> {
        let state = self.student(student_id)?;
        let exercise = Self::exercise(&self.course.read().expect("course lock"), exercise_id)?;
        Ok(ExerciseDetail {
            exercise_id: exercise.exercise_id.clone(),
            title: exercise.title.clone(),
            statement: exercise.statement.clone(),
            base_xp: exercise.base_xp,
            boss: exercise.boss.clone(),
            completed: state.has_completed(exercise_id),
            leaderboard: self.leaderboard(&LeaderboardKind::ExerciseScore(exercise_id.to_string()))?,
        })
    }

    /// Every non-teacher account, with a fresh state for those who never acted.
    pub fn all_students(&self) -> Vec<StudentState> {
        let course = self.course.read().expect("course lock");
        let students = self.students.lock().expect("students lock");
        course
            .file
            .users
            .iter()
            .filter(|u| !u.is_teacher)
            .map(|u| {
                let stored = students
                    .get(&u.user_id)
                    .and_then(|slot| slot.lock().expect("student lock").clone());
                Self::current(&stored, u, &course.file.config)
            })
            .collect()
    }

    pub fn leaderboard(&self, kind: &LeaderboardKind) -> Result<Vec<LeaderboardEntry>, StoreError> {
        if let LeaderboardKind::ExerciseScore(id) = kind {
            Self::exercise(&self.course.read().expect("course lock"), id)?;
        }
        Ok(game::leaderboard(kind, &self.all_students()))
    }

    pub fn profile(&self, student_id: &str) -> Result<Profile, StoreError> {
        let state = self.student(student_id)?;
        let config = self.config();
        Ok(Profile {
            mood_label: state.mood.label().to_string(),
            next_level_xp: config.next_threshold(state.level),
            state,
        })
    }

    pub fn equip(&self, student_id: &str, props: BTreeSet<String>) -> Result<StudentState, StoreError> {
        let course = self.course.read().expect("course lock");
        let (user, slot) = self.student_slot(&course, student_id)?;
        let mut stored = slot.lock().expect("student lock");
        let next = equip_props(&Self::current(&stored, &user, &course.file.config), &props)?;
        self.append(&Event::Equip {
            student_id: student_id.to_string(),
            timestamp: now_millis(),
            props,
        })?;
        self.write_snapshot(&next)?;
        *stored = Some(next.clone());
        Ok(next)
    }

    pub fn put_config(&self, config: CourseConfig) -> Result<(), StoreError> {
        config.validate()?;
        let mut course = self.course.write().expect("course lock");
        let mut file = course.file.clone();
        file.config = config.clone();
        self.append(&Event::Config {
            timestamp: now_millis(),
            config,
        })?;
        write_atomic(
            &self.dir.join(CONFIG_FILE),
            &serde_json::to_string_pretty(&file).expect("serializable"),
        )?;
        course.file = file;
        Ok(())
    }

    /// Creates (`replace == false`) or replaces an exercise from solution-file text.
    pub fn put_exercise(&self, text: &str, path_id: Option<&str>, replace: bool) -> Result<ExerciseSpec, StoreError> {
        let spec = load_exercise(text).map_err(StoreError::InvalidExercise)?;
        self.install_exercise(spec, path_id, replace)
    }

    pub fn install_exercise(
        &self,
        spec: ExerciseSpec,
        path_id: Option<&str>,
        replace: bool,
    ) -> Result<ExerciseSpec, StoreError> {
        let issues = validate_exercise(&spec);
        if !issues.is_empty() {
            return Err(StoreError::InvalidExercise(issues));
        }
        if path_id.is_some_and(|id| id != spec.exercise_id) {
            return Err(StoreError::IdMismatch);
        }
        if !valid_id(&spec.exercise_id) {
            return Err(StoreError::InvalidId(spec.exercise_id.clone()));
        }
        let mut course = self.course.write().expect("course lock");
        let exists = course.exercises.contains_key(&spec.exercise_id);
        if replace && !exists {
            return Err(StoreError::UnknownExercise(spec.exercise_id.clone()));
        }
        if !replace && exists {
            return Err(StoreError::ExerciseExists(spec.exercise_id.clone()));
        }
        write_atomic(
            &self
                .dir
                .join(EXERCISES_DIR)
                .join(format!("{}.exercise", spec.exercise_id)),
            &serialize_exercise(&spec),
        )?;
        course
            .exercises
            .insert(spec.exercise_id.clone(), Arc::new(spec.clone()));
        Ok(spec)
    }

    /// Flushes the event log to disk.
    pub fn sync(&self) -> Result<(), StoreError> {
        self.log.lock().expect("log lock").sync_all()?;
        Ok(())
    }
}

fn append_event(log: &mut File, event: &Event) -> io::Result<()> {
    let mut line = serde_json::to_string(event).expect("events always serialize");
    line.push('\n');
    log.write_all(line.as_bytes())?;
    log.sync_data()
}
