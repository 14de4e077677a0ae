use serde::{Deserialize, Serialize};

use crate::time::Time;

/// Tunables for search and execution. All fields have defaults so partial
/// JSON objects deserialize.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Minimum number of snap actions committed at once.
    pub min_commit: usize,
    /// Budget of one search round, in milliseconds.
    pub interval_ms: u64,
    /// A round stops once its best partial plan has this many snaps.
    pub plan_size_limit: usize,
    /// Virtual time after which the agent gives up.
    pub time_limit: Time,
    pub seed: u64,
    /// Count search effort in expansions (one virtual millisecond each)
    /// instead of wall-clock time.
    pub deterministic: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            min_commit: 1,
            interval_ms: 500,
            plan_size_limit: 4,
            time_limit: Time::from_units(600),
            seed: 0,
            deterministic: true,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_commit == 0 {
            return Err("min_commit must be at least 1".into());
        }
        if self.interval_ms == 0 {
            return Err("interval_ms must be positive".into());
        }
        if self.plan_size_limit == 0 {
            return Err("plan_size_limit must be at least 1".into());
        }
        if self.time_limit <= Time::ZERO {
            return Err("time_limit must be positive".into());
        }
        Ok(())
    }
}
