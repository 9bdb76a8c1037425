//! Game mechanics driven by evaluation reports: obtainable XP per exercise,
//! avatar mood, completion rewards, levels and leaderboards.
//!
//! Every transition is a pure function from a [`StudentState`] and its
//! inputs to a new state, so an event log can be replayed exactly.

mod config;
mod leaderboard;
mod mood;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use config::{level_for_xp, ConfigError, CourseConfig, Multiplier, PropUnlock};
pub use leaderboard::{leaderboard, LeaderboardEntry, LeaderboardKind};
pub use mood::{mood_transition, MoodState};

use crate::evaluator::{Diagnostic, EvaluationReport, RuleCode};
use crate::model::ExerciseSpec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("exercise '{0}' is already completed; no more checks are accepted")]
    CheckOnCompleted(String),
    #[error("exercise '{0}' is not complete yet")]
    NotComplete(String),
    #[error("exercise '{0}' was already completed")]
    AlreadyCompleted(String),
    #[error("prop '{0}' is not owned")]
    PropNotOwned(String),
}

impl GameError {
    pub fn code(&self) -> &'static str {
        match self {
            GameError::CheckOnCompleted(_) => "CHECK_ON_COMPLETED",
            GameError::NotComplete(_) => "NOT_COMPLETE",
            GameError::AlreadyCompleted(_) => "ALREADY_COMPLETED",
            GameError::PropNotOwned(_) => "PROP_NOT_OWNED",
        }
    }
}

/// Identity of an error across checks: the rule plus a stable anchor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrorFingerprint {
    pub rule: RuleCode,
    pub anchor: String,
}

impl fmt::Display for ErrorFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.rule, self.anchor)
    }
}

impl FromStr for ErrorFingerprint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (rule, anchor) = s.split_once('|').ok_or_else(|| format!("bad fingerprint '{s}'"))?;
        Ok(ErrorFingerprint {
            rule: rule.parse()?,
            anchor: anchor.to_string(),
        })
    }
}

impl Serialize for ErrorFingerprint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ErrorFingerprint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Anchors on the reference id when the diagnostic has one, otherwise on the
/// sorted normalized names of the elements involved.
pub fn error_fingerprint(d: &Diagnostic) -> ErrorFingerprint {
    let anchor = match &d.ref_id {
        Some(r) => r.clone(),
        None => {
            let mut names = d.subject_names.clone();
            names.sort();
            names.join(",")
        }
    };
    ErrorFingerprint { rule: d.rule, anchor }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseSession {
    pub exercise_id: String,
    pub checks_used: u32,
    /// Nominal deduction recorded when each error was first seen.
    pub deductions: BTreeMap<ErrorFingerprint, u64>,
    pub active_errors: BTreeSet<ErrorFingerprint>,
    pub last_completeness: f64,
    pub last_obtainable: u64,
    pub best_completeness: f64,
    /// The latest check produced no diagnostics.
    pub last_clean: bool,
    pub completed: bool,
}

impl ExerciseSession {
    /// A session before any check: the synthetic baseline a first check is
    /// compared against.
    pub fn new(exercise_id: &str, base_xp: u64) -> Self {
        ExerciseSession {
            exercise_id: exercise_id.to_string(),
            checks_used: 0,
            deductions: BTreeMap::new(),
            active_errors: BTreeSet::new(),
            last_completeness: 0.0,
            last_obtainable: base_xp,
            best_completeness: 0.0,
            last_clean: false,
            completed: false,
        }
    }

    pub fn completion_ready(&self) -> bool {
        self.checks_used > 0 && self.last_completeness >= 1.0 && self.last_clean
    }
}

/// `max(floor, baseXp - sum of active deductions)`.
pub fn obtainable_xp(session: &ExerciseSession, base_xp: u64, config: &CourseConfig) -> u64 {
    let deducted: u64 = session
        .active_errors
        .iter()
        .map(|fp| session.deductions.get(fp).copied().unwrap_or(0))
        .sum();
    base_xp.saturating_sub(deducted).max(config.floor_xp(base_xp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Recap {
    pub new_errors: u32,
    pub fixed_errors: u32,
    pub delta_xp: i64,
    pub delta_completeness: f64,
    pub obtainable_xp: u64,
    pub completeness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StudentState {
    pub student_id: String,
    pub display_name: String,
    pub total_xp: u64,
    pub level: u32,
    pub mood: MoodState,
    pub owned_props: BTreeSet<String>,
    pub equipped_props: BTreeSet<String>,
    pub sessions: BTreeMap<String, ExerciseSession>,
}

impl StudentState {
    pub fn new(student_id: &str, display_name: &str, config: &CourseConfig) -> Self {
        StudentState {
            student_id: student_id.to_string(),
            display_name: display_name.to_string(),
            total_xp: 0,
            level: 1,
            mood: MoodState::NEUTRAL,
            owned_props: config.props_between(0, 1).into_iter().collect(),
            equipped_props: BTreeSet::new(),
            sessions: BTreeMap::new(),
        }
    }

    pub fn completed_count(&self) -> usize {
        self.sessions.values().filter(|s| s.completed).count()
    }

    pub fn has_completed(&self, exercise_id: &str) -> bool {
        self.sessions.get(exercise_id).is_some_and(|s| s.completed)
    }
}

/// The part of a report the XP bookkeeping needs. Event logs store this
/// instead of the full report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckOutcome {
    pub completeness: f64,
    pub fingerprints: BTreeSet<ErrorFingerprint>,
}

impl CheckOutcome {
    pub fn from_report(report: &EvaluationReport) -> Self {
        CheckOutcome {
            completeness: report.completeness.overall,
            fingerprints: report.diagnostics().map(error_fingerprint).collect(),
        }
    }
}

pub fn apply_check(
    state: &StudentState,
    config: &CourseConfig,
    exercise: &ExerciseSpec,
    report: &EvaluationReport,
) -> Result<(StudentState, Recap), GameError> {
    apply_outcome(
        state,
        config,
        &exercise.exercise_id,
        exercise.base_xp,
        &CheckOutcome::from_report(report),
    )
}

/// Records one check. New errors get a deduction the first time they are
/// ever seen; errors that come back after a fix reuse their old deduction.
/// Fixed errors drop out of the active sum, restoring what they took.
pub fn apply_outcome(
    state: &StudentState,
    config: &CourseConfig,
    exercise_id: &str,
    base_xp: u64,
    outcome: &CheckOutcome,
) -> Result<(StudentState, Recap), GameError> {
    let mut next = state.clone();
    let session = next
        .sessions
        .entry(exercise_id.to_string())
        .or_insert_with(|| ExerciseSession::new(exercise_id, base_xp));
    if session.completed {
        return Err(GameError::CheckOnCompleted(exercise_id.to_string()));
    }

    let new_errors: Vec<&ErrorFingerprint> = outcome.fingerprints.difference(&session.active_errors).collect();
    let fixed_errors = session.active_errors.difference(&outcome.fingerprints).count();
    for fp in &new_errors {
        session
            .deductions
            .entry((*fp).clone())
            .or_insert_with(|| config.nominal_deduction(base_xp));
    }
    let new_count = new_errors.len();
    session.active_errors = outcome.fingerprints.clone();

    let obtainable = obtainable_xp(session, base_xp, config);
    let recap = Recap {
        new_errors: new_count as u32,
        fixed_errors: fixed_errors as u32,
        delta_xp: obtainable as i64 - session.last_obtainable as i64,
        delta_completeness: outcome.completeness - session.last_completeness,
        obtainable_xp: obtainable,
        completeness: outcome.completeness,
    };

    session.checks_used += 1;
    session.last_obtainable = obtainable;
    session.last_completeness = outcome.completeness;
    session.best_completeness = session.best_completeness.max(outcome.completeness);
    session.last_clean = outcome.fingerprints.is_empty();
    Ok((next, recap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionResult {
    pub awarded_xp: u64,
    pub multiplier_applied: f64,
    pub new_level: u32,
    pub unlocked_props: Vec<String>,
    pub solution_view_unlocked: bool,
}

/// Awards the exercise. Requires the latest check to be at full
/// completeness with no diagnostics.
pub fn complete_exercise(
    state: &StudentState,
    config: &CourseConfig,
    exercise_id: &str,
) -> Result<(StudentState, CompletionResult), GameError> {
    let mut next = state.clone();
    let session = next
        .sessions
        .get_mut(exercise_id)
        .ok_or_else(|| GameError::NotComplete(exercise_id.to_string()))?;
    if session.completed {
        return Err(GameError::AlreadyCompleted(exercise_id.to_string()));
    }
    if !session.completion_ready() {
        return Err(GameError::NotComplete(exercise_id.to_string()));
    }
    let multiplier = config.multiplier_for(session.checks_used);
    let awarded = (session.last_obtainable as f64 * multiplier).round() as u64;
    session.completed = true;

    let old_level = next.level;
    next.total_xp += awarded;
    // Never let a config edit take a level away.
    next.level = level_for_xp(next.total_xp, config).max(old_level);
    let unlocked = config.props_between(old_level, next.level);
    next.owned_props.extend(unlocked.iter().cloned());

    let result = CompletionResult {
        awarded_xp: awarded,
        multiplier_applied: multiplier,
        new_level: next.level,
        unlocked_props: unlocked,
        solution_view_unlocked: true,
    };
    Ok((next, result))
}

/// Everything one check does to a student.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckTransition {
    pub state: StudentState,
    pub recap: Recap,
    pub completion: Option<CompletionResult>,
}

/// XP bookkeeping, then the mood step, then completion if the check was
/// perfect. Live checks and log replay both go through here.
pub fn advance(
    state: &StudentState,
    config: &CourseConfig,
    exercise_id: &str,
    base_xp: u64,
    outcome: &CheckOutcome,
) -> Result<CheckTransition, GameError> {
    let (mut next, recap) = apply_outcome(state, config, exercise_id, base_xp, outcome)?;
    next.mood = mood_transition(next.mood, &recap);
    let mut completion = None;
    if next.sessions[exercise_id].completion_ready() {
        let (done, result) = complete_exercise(&next, config, exercise_id)?;
        next = done;
        completion = Some(result);
    }
    Ok(CheckTransition {
        state: next,
        recap,
        completion,
    })
}

/// Replaces the equipped set. Every prop must be owned.
pub fn equip_props(state: &StudentState, props: &BTreeSet<String>) -> Result<StudentState, GameError> {
    if let Some(p) = props.iter().find(|p| !state.owned_props.contains(*p)) {
        return Err(GameError::PropNotOwned(p.clone()));
    }
    let mut next = state.clone();
    next.equipped_props = props.clone();
    Ok(next)
}
