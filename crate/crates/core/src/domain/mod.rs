//! Goals, dialogue acts, states, episodes and goal assessment.

mod act;
mod assess;
mod episode;
mod goal;
mod schema;
mod state;

pub use act::{ActType, DialogueAct, Speaker, NUM_ACTIONS};
pub use assess::{Assess, Assessor};
pub use episode::{DialogueEpisode, EpisodeView, Outcome, Transition, Turn};
pub use goal::{count_subgoals, enumerate_subpairs, is_subgoal, Goal, GoalDisplay, GoalItem};
pub use schema::{SchemaConfig, SlotId, SlotSchema, SlotSpec, ValueId};
pub use state::{belief, BeliefStatus, DialogueState, StateRef};
