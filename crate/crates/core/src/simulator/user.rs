use std::collections::BTreeSet;

use rand::seq::IteratorRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kb::KnowledgeBase;
use crate::domain::{ActType, DialogueAct, Goal, SlotId, SlotSchema, Speaker, ValueId};
use crate::error::{Error, Result};

/// Agenda of a cooperative, consistent simulated user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAgenda {
    pub goal: Goal,
    /// Constraints not yet conveyed, in the order they will be given.
    pub pending_constraints: Vec<(SlotId, ValueId)>,
    pub pending_requests: BTreeSet<SlotId>,
    /// Constraint slots whose value the user has explicitly confirmed.
    pub confirmed: BTreeSet<SlotId>,
    /// Slots the user has declared indifference about.
    pub dont_care: BTreeSet<SlotId>,
    /// Remaining consecutive unproductive turns before the user gives up.
    pub patience: usize,
    pub max_patience: usize,
    pub abandoned: bool,
}

impl UserAgenda {
    /// Builds the agenda and the user's opening act: a request for every
    /// goal request, plus up to `opening_informs` randomly chosen constraints.
    pub fn open<R: Rng + ?Sized>(
        goal: Goal,
        patience: usize,
        opening_informs: usize,
        rng: &mut R,
    ) -> (Self, DialogueAct) {
        let told: BTreeSet<SlotId> = goal
            .constraints()
            .keys()
            .copied()
            .choose_multiple(rng, opening_informs.min(goal.constraints().len()))
            .into_iter()
            .collect();
        let mut opening = DialogueAct::user(ActType::Request);
        for &r in goal.requests() {
            opening.payload.insert(r, None);
        }
        for &s in &told {
            opening.payload.insert(s, goal.constraint(s));
        }
        let agenda = Self {
            pending_constraints: goal
                .constraints()
                .iter()
                .filter(|(s, _)| !told.contains(s))
                .map(|(&s, &v)| (s, v))
                .collect(),
            pending_requests: goal.requests().clone(),
            confirmed: BTreeSet::new(),
            dont_care: BTreeSet::new(),
            patience,
            max_patience: patience,
            abandoned: false,
            goal,
        };
        (agenda, opening)
    }

    /// Everything the user wanted has been conveyed and answered.
    pub fn is_satisfied(&self) -> bool {
        !self.abandoned && self.pending_constraints.is_empty() && self.pending_requests.is_empty()
    }

    fn convey(&mut self, slot: SlotId) {
        self.pending_constraints.retain(|(s, _)| *s != slot);
    }

    fn follow_up(&self) -> DialogueAct {
        match self.pending_requests.iter().next() {
            Some(&r) => DialogueAct::user(ActType::Request).with(r, None),
            None => DialogueAct::user(ActType::Thanks),
        }
    }

    fn idle_reply(&self) -> DialogueAct {
        match self.pending_requests.iter().next() {
            Some(&r) => DialogueAct::user(ActType::Request).with(r, None),
            None => DialogueAct::user(ActType::NotSure),
        }
    }
}

fn first_slot(act: &DialogueAct) -> Option<(SlotId, Option<ValueId>)> {
    act.payload.iter().next().map(|(s, v)| (*s, *v))
}

/// The user's reply to a system act.
///
/// The user answers questions about its constraints truthfully, declares
/// indifference about other slots, corrects wrong confirmations, re-requests
/// unanswered requests when the system makes no progress, and gives up after
/// an inconsistent inform or booking, a system closing, or when its patience
/// runs out.
pub fn user_step(
    agenda: &UserAgenda,
    system_act: &DialogueAct,
    schema: &SlotSchema,
    kb: &KnowledgeBase,
) -> Result<(DialogueAct, UserAgenda)> {
    if agenda.abandoned {
        return Err(Error::InvalidOperation("the user has already left".into()));
    }
    if system_act.speaker != Speaker::System {
        return Err(Error::InvalidInput("user_step expects a system act".into()));
    }
    system_act.validate(schema)?;

    let mut next = agenda.clone();
    let goal = &agenda.goal;
    let mut progress = false;
    let slot = first_slot(system_act);

    let reply = match (system_act.act_type, slot) {
        (ActType::Request, Some((s, _))) if schema.is_informable(s) => match goal.constraint(s) {
            Some(v) => {
                progress = true;
                next.convey(s);
                DialogueAct::user(ActType::Inform).with(s, Some(v))
            }
            None => {
                progress = next.dont_care.insert(s);
                DialogueAct::user(ActType::NotSure).with(s, None)
            }
        },
        (ActType::MultipleChoice, Some((s, guess))) if schema.is_informable(s) => {
            match goal.constraint(s) {
                Some(v) if guess == Some(v) => {
                    progress = true;
                    next.convey(s);
                    next.confirmed.insert(s);
                    DialogueAct::user(ActType::ConfirmAnswer).with(s, Some(v))
                }
                Some(_) => DialogueAct::user(ActType::Deny).with(s, None),
                None => {
                    progress = next.dont_care.insert(s);
                    DialogueAct::user(ActType::NotSure).with(s, None)
                }
            }
        }
        (ActType::ConfirmQuestion, Some((s, Some(asked)))) if schema.is_informable(s) => {
            match goal.constraint(s) {
                Some(v) => {
                    progress = next.confirmed.insert(s) || asked != v;
                    next.convey(s);
                    if asked == v {
                        DialogueAct::user(ActType::ConfirmAnswer).with(s, Some(v))
                    } else {
                        DialogueAct::user(ActType::Deny).with(s, Some(v))
                    }
                }
                None => {
                    progress = next.dont_care.insert(s);
                    DialogueAct::user(ActType::NotSure).with(s, None)
                }
            }
        }
        (ActType::Inform, Some((r, Some(v)))) if goal.requests().contains(&r) => {
            if kb.any_row_with(goal.constraints(), r, v) {
                progress = next.pending_requests.remove(&r);
                next.follow_up()
            } else {
                next.abandoned = true;
                DialogueAct::user(ActType::Deny).with(r, None)
            }
        }
        (ActType::Book, _) => match schema.booking_slot() {
            Some(b) if matches!(system_act.value_of(b), Some(Some(_))) => {
                let consistent = goal
                    .constraints()
                    .iter()
                    .all(|(s, v)| system_act.value_of(*s) == Some(Some(*v)));
                if consistent {
                    progress = next.pending_requests.remove(&b);
                    next.follow_up()
                } else {
                    next.abandoned = true;
                    DialogueAct::user(ActType::Deny).with(b, None)
                }
            }
            _ => next.idle_reply(),
        },
        (ActType::Closing, _) => {
            next.abandoned = true;
            DialogueAct::user(ActType::Closing)
        }
        _ => next.idle_reply(),
    };

    if next.abandoned {
        return Ok((reply, next));
    }
    if progress {
        next.patience = next.max_patience;
    } else {
        next.patience = next.patience.saturating_sub(1);
        if next.patience == 0 {
            next.abandoned = true;
            return Ok((DialogueAct::user(ActType::Closing), next));
        }
    }
    Ok((reply, next))
}
