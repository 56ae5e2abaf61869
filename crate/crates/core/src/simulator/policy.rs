//! Hand-written dialogue policies over the belief state.

use crate::domain::{belief, ActType, BeliefStatus, DialogueState, SlotSchema};

/// Rule-based policy: request every unknown constraint slot in schema order,
/// answer outstanding requests from the knowledge base, then book. With
/// `confirm_uncertain`, uncertain constraint beliefs are confirmed before
/// any answer is given, which makes the policy succeed on every satisfiable
/// goal.
pub fn rule_action(
    state: &DialogueState,
    schema: &SlotSchema,
    floor: f64,
    confirm_uncertain: bool,
) -> ActType {
    let status = |s| belief::status(state.belief(s), floor);
    if schema
        .informable_slots()
        .any(|s| status(s) == BeliefStatus::Unknown)
    {
        return ActType::Request;
    }
    if confirm_uncertain
        && schema
            .informable_slots()
            .any(|s| matches!(status(s), BeliefStatus::Value { .. }) && !status(s).is_clean())
    {
        return ActType::ConfirmQuestion;
    }
    if schema
        .requestable_slots()
        .any(|s| Some(s) != schema.booking_slot() && status(s) == BeliefStatus::Unknown)
    {
        return ActType::Inform;
    }
    ActType::Book
}
