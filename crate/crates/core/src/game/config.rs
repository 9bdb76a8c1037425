use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Multiplier {
    /// Applies when the exercise was completed within this many checks.
    pub max_checks: u32,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropUnlock {
    pub prop_id: String,
    pub unlock_level: u32,
}

/// Teacher-tunable game parameters for one course.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CourseConfig {
    /// XP needed for each level; entry `i` is the threshold of level `i + 1`.
    pub level_thresholds: Vec<u64>,
    #[serde(default = "default_deduction")]
    pub deduction_fraction: f64,
    #[serde(default = "default_floor")]
    pub floor_fraction: f64,
    #[serde(default)]
    pub multipliers: Vec<Multiplier>,
    #[serde(default)]
    pub prop_unlocks: Vec<PropUnlock>,
}

fn default_deduction() -> f64 {
    0.05
}

fn default_floor() -> f64 {
    0.35
}

impl Default for CourseConfig {
    fn default() -> Self {
        CourseConfig {
            level_thresholds: vec![0, 100, 250, 500, 900, 1400],
            deduction_fraction: default_deduction(),
            floor_fraction: default_floor(),
            multipliers: vec![
                Multiplier {
                    max_checks: 1,
                    factor: 1.5,
                },
                Multiplier {
                    max_checks: 3,
                    factor: 1.25,
                },
                Multiplier {
                    max_checks: 5,
                    factor: 1.1,
                },
            ],
            prop_unlocks: vec![
                PropUnlock {
                    prop_id: "cap".into(),
                    unlock_level: 1,
                },
                PropUnlock {
                    prop_id: "glasses".into(),
                    unlock_level: 2,
                },
                PropUnlock {
                    prop_id: "scarf".into(),
                    unlock_level: 3,
                },
                PropUnlock {
                    prop_id: "crown".into(),
                    unlock_level: 5,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("levelThresholds must start at 0 and be strictly increasing")]
    Thresholds,
    #[error("floorFraction must lie strictly between 0 and 1, got {0}")]
    Floor(f64),
    #[error("deductionFraction must lie in [0, 1], got {0}")]
    Deduction(f64),
    #[error("multipliers must have ascending maxChecks, strictly decreasing factors, and factors >= 1")]
    Multipliers,
    #[error("prop '{0}' needs a positive unlockLevel")]
    PropLevel(String),
}

impl CourseConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.level_thresholds;
        if t.first() != Some(&0) || t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Thresholds);
        }
        if !(self.floor_fraction > 0.0 && self.floor_fraction < 1.0) {
            return Err(ConfigError::Floor(self.floor_fraction));
        }
        if !(0.0..=1.0).contains(&self.deduction_fraction) {
            return Err(ConfigError::Deduction(self.deduction_fraction));
        }
        let m = &self.multipliers;
        if m.iter()
            .any(|x| x.max_checks == 0 || x.factor.is_nan() || x.factor < 1.0)
            || m.windows(2)
                .any(|w| w[0].max_checks >= w[1].max_checks || w[0].factor <= w[1].factor)
        {
            return Err(ConfigError::Multipliers);
        }
        if let Some(p) = self.prop_unlocks.iter().find(|p| p.unlock_level == 0) {
            return Err(ConfigError::PropLevel(p.prop_id.clone()));
        }
        Ok(())
    }

    pub fn max_level(&self) -> u32 {
        self.level_thresholds.len().max(1) as u32
    }

    /// Factor of the first multiplier whose `maxChecks` covers `checks`, else 1.
    pub fn multiplier_for(&self, checks: u32) -> f64 {
        self.multipliers
            .iter()
            .find(|m| checks <= m.max_checks)
            .map_or(1.0, |m| m.factor)
    }

    /// XP threshold of the level after `level`, if there is one.
    pub fn next_threshold(&self, level: u32) -> Option<u64> {
        self.level_thresholds.get(level as usize).copied()
    }

    /// Props whose unlock level lies in `(from, to]`, in configured order.
    pub fn props_between(&self, from: u32, to: u32) -> Vec<String> {
        self.prop_unlocks
            .iter()
            .filter(|p| p.unlock_level > from && p.unlock_level <= to)
            .map(|p| p.prop_id.clone())
            .collect()
    }

    /// Smallest XP not below `fraction * base_xp`. The product is snapped to
    /// 1e-9 first so values like `0.35 * 100` do not ceil past 35.
    pub fn floor_xp(&self, base_xp: u64) -> u64 {
        let raw = self.floor_fraction * base_xp as f64;
        ((raw * 1e9).round() / 1e9).ceil() as u64
    }

    pub fn nominal_deduction(&self, base_xp: u64) -> u64 {
        (self.deduction_fraction * base_xp as f64).round() as u64
    }
}

/// `1 +` the number of positive thresholds reached.
pub fn level_for_xp(xp: u64, config: &CourseConfig) -> u32 {
    1 + config.level_thresholds.iter().filter(|&&t| t > 0 && t <= xp).count() as u32
}
