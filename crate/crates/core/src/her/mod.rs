//! Hindsight relabelling of dialogues: trimming valid heads into short
//! successful dialogues, and stitching heads of failed dialogues onto tails of
//! successful ones.

mod kl;
mod stitch;
mod trim;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{DialogueEpisode, Goal};
use crate::error::{Error, Result};

pub use kl::{kl_discrete, kl_divergence, kl_divergence_with, KlAggregate};
pub use stitch::{
    concatenate, dialogue_subtract, stitch_her, stitchable, StitchStats, Stitched, TailEntry,
    TailPool,
};
pub use trim::trim_her;

/// Reward of every non-final turn in a generated dialogue.
pub const GENERATED_TURN_REWARD: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HerConfig {
    /// Weight of the subgoal size in the trimmed-dialogue terminal reward.
    pub alpha: f64,
    /// Stitchability threshold on the junction divergence.
    pub kl_threshold: f64,
    pub kl_aggregate: KlAggregate,
    /// Success bonus given to stitched dialogues; bounds `alpha * |G'|`.
    pub r_max: f64,
    pub max_stitches_per_dialogue: usize,
    pub tail_pool_capacity: usize,
}

impl Default for HerConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            kl_threshold: 0.2,
            kl_aggregate: KlAggregate::Sum,
            r_max: 80.0,
            max_stitches_per_dialogue: 8,
            tail_pool_capacity: 2_000,
        }
    }
}

impl HerConfig {
    /// Checks the configuration against the largest subgoal that can occur.
    pub fn validate(&self, max_goal_size: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if self.kl_threshold.is_nan() || self.kl_threshold < 0.0 {
            return Err(Error::Config("kl_threshold must be non-negative".into()));
        }
        if self.alpha * max_goal_size as f64 >= self.r_max {
            return Err(Error::Config(format!(
                "alpha * |G'| = {} must stay below r_max = {}",
                self.alpha * max_goal_size as f64,
                self.r_max
            )));
        }
        if self.tail_pool_capacity == 0 {
            return Err(Error::Config("tail_pool_capacity must be at least 1".into()));
        }
        Ok(())
    }
}

/// Terminal bonus of a trimmed dialogue: `alpha * |G'|`.
pub fn segment_reward(subgoal: &Goal, config: &HerConfig) -> Result<f64> {
    if subgoal.is_empty() {
        return Err(Error::InvalidInput("empty subgoal has no reward".into()));
    }
    let r = config.alpha * subgoal.size() as f64;
    if r >= config.r_max {
        return Err(Error::Config(format!(
            "alpha * |G'| = {r} must stay below r_max = {}",
            config.r_max
        )));
    }
    Ok(r)
}

/// Writes generated dialogues as one JSON object per line.
pub fn write_jsonl<W: Write>(episodes: &[DialogueEpisode], mut out: W) -> Result<()> {
    for ep in episodes {
        serde_json::to_writer(&mut out, ep)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
