use std::sync::Arc;

use super::act::{ActType, Speaker};
use super::episode::EpisodeView;
use super::goal::{Goal, GoalItem};
use super::schema::{SlotId, SlotSchema, ValueId};
use super::state::belief;
use crate::error::{Error, Result};
use crate::simulator::KnowledgeBase;

/// `success(G, D)`: does the dialogue prefix accomplish the (sub)goal?
pub trait Assess {
    fn assess(&self, goal: &Goal, prefix: &EpisodeView<'_>) -> Result<bool>;
}

impl<T: Assess + ?Sized> Assess for &T {
    fn assess(&self, goal: &Goal, prefix: &EpisodeView<'_>) -> Result<bool> {
        (**self).assess(goal, prefix)
    }
}

/// Assessment backed by the knowledge base the dialogue was run against.
///
/// A goal is accomplished by a prefix when every constraint was stated by the
/// user and is the argmax of the final belief, every request was answered by
/// a system inform (or a booking, for the booking slot) consistent with the
/// user's goal, no goal request received an inconsistent answer, and the last
/// turn of the prefix is the one that completed some entry of the goal.
#[derive(Debug, Clone)]
pub struct Assessor {
    schema: Arc<SlotSchema>,
    kb: Arc<KnowledgeBase>,
    floor: f64,
}

impl Assessor {
    pub fn new(schema: Arc<SlotSchema>, kb: Arc<KnowledgeBase>, smoothing_floor: f64) -> Self {
        Self {
            schema,
            kb,
            floor: smoothing_floor,
        }
    }

    pub fn schema(&self) -> &SlotSchema {
        &self.schema
    }

    fn stated(view: &EpisodeView<'_>, len: usize, slot: SlotId, value: ValueId) -> bool {
        let says = |act: &super::act::DialogueAct| {
            act.speaker == Speaker::User && act.value_of(slot) == Some(Some(value))
        };
        says(view.opening) || view.turns[..len].iter().any(|t| says(&t.user_act))
    }

    fn consistent_inform(&self, user_goal: &Goal, slot: SlotId, value: ValueId) -> bool {
        self.kb.any_row_with(user_goal.constraints(), slot, value)
    }

    fn consistent_booking(user_goal: &Goal, act: &super::act::DialogueAct) -> bool {
        user_goal
            .constraints()
            .iter()
            .all(|(s, v)| act.value_of(*s) == Some(Some(*v)))
    }

    /// Answers (`Some(true)` consistent, `Some(false)` inconsistent) given to
    /// a request slot in the first `len` turns.
    fn answers<'v>(
        &'v self,
        view: &'v EpisodeView<'_>,
        len: usize,
        slot: SlotId,
    ) -> impl Iterator<Item = bool> + 'v {
        let booking = self.schema.booking_slot() == Some(slot);
        view.turns[..len].iter().filter_map(move |t| {
            let act = &t.system_act;
            match (act.act_type, act.value_of(slot)) {
                (ActType::Inform, Some(Some(v))) if !booking => {
                    Some(self.consistent_inform(view.goal, slot, v))
                }
                (ActType::Book, Some(Some(_))) if booking => {
                    Some(Self::consistent_booking(view.goal, act))
                }
                _ => None,
            }
        })
    }

    /// Whether `item` is identified by the first `len` turns.
    pub fn item_achieved(&self, item: GoalItem, view: &EpisodeView<'_>, len: usize) -> bool {
        match item {
            GoalItem::Constraint(slot, value) => {
                Self::stated(view, len, slot, value)
                    && belief::status(view.state_after(len).belief(slot), self.floor).value()
                        == Some(value)
            }
            GoalItem::Request(slot) => self.answers(view, len, slot).any(|ok| ok),
        }
    }

    fn item_spoiled(&self, item: GoalItem, view: &EpisodeView<'_>, len: usize) -> bool {
        match item {
            GoalItem::Constraint(..) => false,
            GoalItem::Request(slot) => self.answers(view, len, slot).any(|ok| !ok),
        }
    }

    fn check_goal(&self, goal: &Goal) -> Result<()> {
        goal.validate(&self.schema)
    }
}

impl Assess for Assessor {
    fn assess(&self, goal: &Goal, prefix: &EpisodeView<'_>) -> Result<bool> {
        if prefix.is_empty() {
            return Err(Error::InvalidInput("cannot assess an empty dialogue prefix".into()));
        }
        self.check_goal(goal)?;
        let len = prefix.len();
        let items = goal.items();
        if items.is_empty() {
            return Ok(false);
        }
        let mut contributed = false;
        for &item in &items {
            if !self.item_achieved(item, prefix, len) || self.item_spoiled(item, prefix, len) {
                return Ok(false);
            }
            // nothing is accomplished before the first turn, so entries the
            // opening already settled count as completed by turn one
            contributed |= len == 1 || !self.item_achieved(item, prefix, len - 1);
        }
        Ok(contributed)
    }
}
