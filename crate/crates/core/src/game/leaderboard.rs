use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::StudentState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "exerciseId")]
pub enum LeaderboardKind {
    XpLevel,
    ExerciseScore(String),
    CompletedCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LeaderboardEntry {
    /// Competition rank: tied entries share a rank and the next rank skips.
    pub rank: usize,
    pub student_id: String,
    pub display_name: String,
    pub level: u32,
    pub total_xp: u64,
    /// The ranked quantity: XP, best completeness, or completed exercises.
    pub score: f64,
    pub equipped_props: Vec<String>,
}

/// Ranks students, best first. For per-exercise rankings only students with
/// a session on that exercise appear.
pub fn leaderboard(kind: &LeaderboardKind, students: &[StudentState]) -> Vec<LeaderboardEntry> {
    let mut rows: Vec<(&StudentState, f64)> = students
        .iter()
        .filter_map(|s| match kind {
            LeaderboardKind::XpLevel => Some((s, s.total_xp as f64)),
            LeaderboardKind::ExerciseScore(ex) => s.sessions.get(ex).map(|sess| (s, sess.best_completeness)),
            LeaderboardKind::CompletedCount => Some((s, s.completed_count() as f64)),
        })
        .collect();

    let primary = |a: &(&StudentState, f64), b: &(&StudentState, f64)| -> Ordering {
        match kind {
            LeaderboardKind::XpLevel => (b.0.level, b.0.total_xp).cmp(&(a.0.level, a.0.total_xp)),
            _ => b.1.total_cmp(&a.1),
        }
    };
    rows.sort_by(|a, b| {
        primary(a, b)
            .then_with(|| a.0.display_name.cmp(&b.0.display_name))
            .then_with(|| a.0.student_id.cmp(&b.0.student_id))
    });

    let mut out: Vec<LeaderboardEntry> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let rank = if i > 0 && primary(&rows[i - 1], row) == Ordering::Equal {
            out[i - 1].rank
        } else {
            i + 1
        };
        out.push(LeaderboardEntry {
            rank,
            student_id: row.0.student_id.clone(),
            display_name: row.0.display_name.clone(),
            level: row.0.level,
            total_xp: row.0.total_xp,
            score: row.1,
            equipped_props: row.0.equipped_props.iter().cloned().collect(),
        });
    }
    out
}
