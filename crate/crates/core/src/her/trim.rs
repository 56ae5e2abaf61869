use super::{segment_reward, HerConfig, GENERATED_TURN_REWARD};
use crate::domain::{Assess, DialogueEpisode, Goal, Outcome};
use crate::error::{Error, Result};
use crate::segmentation::{segment_dialogue, SegmentPair};

/// Turns every valid head of `episode` into a successful dialogue for the
/// subgoal it accomplishes: `-1` per turn, terminal reward `-1 + alpha*|G'|`.
pub fn trim_her<A: Assess + ?Sized>(
    episode: &DialogueEpisode,
    goal: &Goal,
    assessor: &A,
    config: &HerConfig,
) -> Result<Vec<DialogueEpisode>> {
    if episode.outcome == Outcome::Ongoing {
        return Err(Error::InvalidInput("trimming needs a finished dialogue".into()));
    }
    if episode.is_empty() || goal.is_empty() {
        return Ok(Vec::new());
    }
    segment_dialogue(episode, goal, assessor)?
        .into_iter()
        .map(|pair| relabel(pair, config))
        .collect()
}

fn relabel(pair: SegmentPair, config: &HerConfig) -> Result<DialogueEpisode> {
    let bonus = segment_reward(&pair.subgoal, config)?;
    let SegmentPair { segment, subgoal } = pair;
    let n = segment.len();
    let mut ep = DialogueEpisode::new(subgoal, segment.opening, segment.initial_state);
    for (i, mut turn) in segment.turns.into_iter().enumerate() {
        let last = i + 1 == n;
        turn.transition.terminal = last;
        turn.transition.reward = GENERATED_TURN_REWARD + if last { bonus } else { 0.0 };
        ep.push(turn);
    }
    ep.outcome = Outcome::Success;
    Ok(ep)
}
