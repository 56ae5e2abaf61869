use serde::{Deserialize, Serialize};

use super::act::{DialogueAct, NUM_ACTIONS};
use super::goal::Goal;
use super::state::{DialogueState, StateRef};
use crate::error::{Error, Result};

/// One `(s, a, r, s', terminal)` sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: StateRef,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateRef,
    pub terminal: bool,
}

impl Transition {
    pub fn validate(&self) -> Result<()> {
        if self.action >= NUM_ACTIONS {
            return Err(Error::InvalidInput(format!("action {} out of range", self.action)));
        }
        if !self.reward.is_finite() {
            return Err(Error::InvalidInput("non-finite reward".into()));
        }
        Ok(())
    }
}

/// A transition together with the acts exchanged during the turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub transition: Transition,
    pub system_act: DialogueAct,
    pub user_act: DialogueAct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    Ongoing,
}

/// A recorded dialogue: the user goal, the user's opening act, and the turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueEpisode {
    pub goal: Goal,
    pub opening: DialogueAct,
    pub initial_state: StateRef,
    pub turns: Vec<Turn>,
    pub outcome: Outcome,
    pub cumulative_reward: f64,
}

impl DialogueEpisode {
    pub fn new(goal: Goal, opening: DialogueAct, initial_state: StateRef) -> Self {
        Self {
            goal,
            opening,
            initial_state,
            turns: Vec::new(),
            outcome: Outcome::Ongoing,
            cumulative_reward: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    pub fn push(&mut self, turn: Turn) {
        self.cumulative_reward += turn.transition.reward;
        self.turns.push(turn);
    }

    /// State reached after the first `len` turns.
    pub fn state_after(&self, len: usize) -> &DialogueState {
        if len == 0 {
            &self.initial_state
        } else {
            &self.turns[len - 1].transition.next_state
        }
    }

    pub fn final_state(&self) -> &DialogueState {
        self.state_after(self.turns.len())
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.turns.iter().map(|t| &t.transition)
    }

    pub fn view(&self) -> EpisodeView<'_> {
        self.prefix(self.turns.len())
    }

    /// The first `len` turns, borrowed.
    pub fn prefix(&self, len: usize) -> EpisodeView<'_> {
        EpisodeView {
            goal: &self.goal,
            opening: &self.opening,
            initial_state: &self.initial_state,
            turns: &self.turns[..len.min(self.turns.len())],
        }
    }

    /// Copies the first `len` turns into a new, still ongoing episode.
    pub fn truncated(&self, len: usize) -> DialogueEpisode {
        let mut ep = DialogueEpisode::new(
            self.goal.clone(),
            self.opening.clone(),
            self.initial_state.clone(),
        );
        for t in &self.turns[..len] {
            ep.push(t.clone());
        }
        ep
    }

    pub fn check_invariants(&self, max_turns: usize) -> Result<()> {
        if self.turns.len() > max_turns {
            return Err(Error::InvalidInput(format!(
                "episode has {} turns, cap is {max_turns}",
                self.turns.len()
            )));
        }
        if self.outcome != Outcome::Ongoing
            && !self.turns.last().map(|t| t.transition.terminal).unwrap_or(false)
        {
            return Err(Error::InvalidInput("finished episode without terminal turn".into()));
        }
        let sum: f64 = self.transitions().map(|t| t.reward).sum();
        if (sum - self.cumulative_reward).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "cumulative reward {} != sum of rewards {sum}",
                self.cumulative_reward
            )));
        }
        for t in self.transitions() {
            t.validate()?;
        }
        Ok(())
    }
}

/// A borrowed head of an episode, used for assessment without copying.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeView<'a> {
    pub goal: &'a Goal,
    pub opening: &'a DialogueAct,
    pub initial_state: &'a DialogueState,
    pub turns: &'a [Turn],
}

impl<'a> EpisodeView<'a> {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn state_after(&self, len: usize) -> &'a DialogueState {
        if len == 0 {
            self.initial_state
        } else {
            &self.turns[len - 1].transition.next_state
        }
    }

    pub fn shorter(&self, len: usize) -> EpisodeView<'a> {
        EpisodeView {
            turns: &self.turns[..len],
            ..*self
        }
    }
}
