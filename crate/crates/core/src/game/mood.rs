use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::Recap;

/// Seven-step avatar mood ladder: -3..=-1 negative, 0 neutral, 1..=3 positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MoodState(i8);

impl MoodState {
    pub const MIN: i8 = -3;
    pub const MAX: i8 = 3;
    pub const NEUTRAL: MoodState = MoodState(0);

    pub fn new(index: i8) -> Self {
        MoodState(index.clamp(Self::MIN, Self::MAX))
    }

    pub fn index(self) -> i8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        match self.0 {
            -3 => "desperate",
            -2 => "sad",
            -1 => "worried",
            0 => "neutral",
            1 => "content",
            2 => "happy",
            _ => "ecstatic",
        }
    }
}

fn sign_of(ord: Ordering) -> i8 {
    match ord {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

fn sign_f64(x: f64) -> i8 {
    sign_of(x.partial_cmp(&0.0).unwrap_or(Ordering::Equal))
}

/// Sums the signs of the XP change, of fixed-minus-new errors and of the
/// completeness change, then moves one step in the direction of that sum.
pub fn mood_transition(mood: MoodState, recap: &Recap) -> MoodState {
    let score = sign_of(recap.delta_xp.cmp(&0))
        + sign_of(recap.fixed_errors.cmp(&recap.new_errors))
        + sign_f64(recap.delta_completeness);
    MoodState::new(mood.0 + score.signum())
}
