use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::{SlotId, SlotSchema, ValueId};
use crate::error::{Error, Result};

/// Number of system dialogue actions, `|A|`.
pub const NUM_ACTIONS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    System,
}

/// The closed dialogue-act inventory. The discriminant order doubles as the
/// system action index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActType {
    Request,
    Inform,
    ConfirmQuestion,
    ConfirmAnswer,
    Deny,
    Thanks,
    Closing,
    Greeting,
    NotSure,
    MultipleChoice,
    Book,
}

impl ActType {
    pub const ALL: [ActType; NUM_ACTIONS] = [
        ActType::Request,
        ActType::Inform,
        ActType::ConfirmQuestion,
        ActType::ConfirmAnswer,
        ActType::Deny,
        ActType::Thanks,
        ActType::Closing,
        ActType::Greeting,
        ActType::NotSure,
        ActType::MultipleChoice,
        ActType::Book,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL.get(index).copied().ok_or_else(|| {
            Error::InvalidInput(format!("action index {index} outside the {NUM_ACTIONS}-action inventory"))
        })
    }
}

/// A dialogue act: speaker, intent and slot payload. A payload entry with no
/// value either asks for the slot (requests) or refers to it without a value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueAct {
    pub speaker: Speaker,
    pub act_type: ActType,
    pub payload: BTreeMap<SlotId, Option<ValueId>>,
}

impl DialogueAct {
    pub fn new(speaker: Speaker, act_type: ActType) -> Self {
        Self {
            speaker,
            act_type,
            payload: BTreeMap::new(),
        }
    }

    pub fn system(act_type: ActType) -> Self {
        Self::new(Speaker::System, act_type)
    }

    pub fn user(act_type: ActType) -> Self {
        Self::new(Speaker::User, act_type)
    }

    pub fn with(mut self, slot: SlotId, value: Option<ValueId>) -> Self {
        self.payload.insert(slot, value);
        self
    }

    pub fn value_of(&self, slot: SlotId) -> Option<Option<ValueId>> {
        self.payload.get(&slot).copied()
    }

    pub fn validate(&self, schema: &SlotSchema) -> Result<()> {
        for (&slot, value) in &self.payload {
            if !schema.contains(slot) {
                return Err(Error::InvalidInput(format!(
                    "act payload references unknown slot {}",
                    slot.0
                )));
            }
            if let Some(v) = value {
                if *v >= schema.domain_len(slot) {
                    return Err(Error::InvalidInput(format!(
                        "act payload value {v} outside domain of `{}`",
                        schema.name(slot)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for (i, a) in ActType::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(ActType::from_index(i).unwrap(), *a);
        }
        assert!(ActType::from_index(NUM_ACTIONS).is_err());
    }
}
