use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::act::{ActType, NUM_ACTIONS};
use super::schema::{SlotId, SlotSchema, ValueId};

/// What a belief vector says about its slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeliefStatus {
    Unknown,
    /// Mass spread evenly over the values: the user has no preference.
    DontCare,
    Value {
        value: ValueId,
        /// Un-smoothed probability of the value.
        confidence: f64,
    },
}

impl BeliefStatus {
    pub fn value(&self) -> Option<ValueId> {
        match *self {
            BeliefStatus::Value { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_clean(&self) -> bool {
        matches!(*self, BeliefStatus::Value { confidence, .. } if confidence > 0.99)
    }
}

/// Builders and readers for per-slot belief vectors. A vector has one entry
/// per value followed by a final "unknown" entry; every entry is at least the
/// smoothing floor and the vector sums to one.
pub mod belief {
    use super::*;

    fn smooth(mut raw: Vec<f64>, floor: f64) -> Vec<f64> {
        let n = raw.len() as f64;
        let scale = 1.0 - n * floor;
        for p in raw.iter_mut() {
            *p = floor + scale * *p;
        }
        raw
    }

    fn unsmooth(p: f64, len: usize, floor: f64) -> f64 {
        (p - floor) / (1.0 - len as f64 * floor)
    }

    pub fn unknown(len: usize, floor: f64) -> Vec<f64> {
        let mut raw = vec![0.0; len];
        raw[len - 1] = 1.0;
        smooth(raw, floor)
    }

    pub fn point(len: usize, value: ValueId, floor: f64) -> Vec<f64> {
        let mut raw = vec![0.0; len];
        raw[value] = 1.0;
        smooth(raw, floor)
    }

    /// The observed wrong value carries `mass`, the true value the rest.
    pub fn confused(len: usize, truth: ValueId, observed: ValueId, mass: f64, floor: f64) -> Vec<f64> {
        let mut raw = vec![0.0; len];
        raw[observed] = mass;
        raw[truth] += 1.0 - mass;
        smooth(raw, floor)
    }

    pub fn dont_care(len: usize, floor: f64) -> Vec<f64> {
        let d = (len - 1) as f64;
        let mut raw = vec![1.0 / d; len];
        raw[len - 1] = 0.0;
        smooth(raw, floor)
    }

    /// Index of the largest entry, ties broken by lowest index.
    pub fn argmax(b: &[f64]) -> usize {
        let mut best = 0;
        for (i, &p) in b.iter().enumerate() {
            if p > b[best] {
                best = i;
            }
        }
        best
    }

    pub fn status(b: &[f64], floor: f64) -> BeliefStatus {
        let len = b.len();
        let top = argmax(b);
        let raw = unsmooth(b[top], len, floor);
        if raw < 0.5 {
            BeliefStatus::DontCare
        } else if top == len - 1 {
            BeliefStatus::Unknown
        } else {
            BeliefStatus::Value {
                value: top,
                confidence: raw,
            }
        }
    }

    pub fn is_valid(b: &[f64], floor: f64) -> bool {
        let sum: f64 = b.iter().sum();
        (sum - 1.0).abs() <= 1e-9 && b.iter().all(|&p| p >= floor - 1e-12 && p.is_finite())
    }
}

/// The agent's view of the dialogue: act one-hots, per-slot beliefs, turn
/// features and the knowledge-base match count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub user_act: Option<ActType>,
    pub user_slots: Vec<bool>,
    pub sys_act: Option<ActType>,
    pub sys_slots: Vec<bool>,
    pub beliefs: Vec<Vec<f64>>,
    pub turn: usize,
    pub max_turns: usize,
    pub kb_count: usize,
    pub kb_rows: usize,
}

pub type StateRef = Arc<DialogueState>;

impl DialogueState {
    pub fn belief(&self, slot: SlotId) -> &[f64] {
        &self.beliefs[slot.0]
    }

    pub fn turn_scalar(&self) -> f64 {
        self.turn as f64 / self.max_turns as f64
    }

    pub fn kb_scalar(&self) -> f64 {
        ((1 + self.kb_count) as f64).ln() / ((1 + self.kb_rows.max(1)) as f64).ln()
    }

    pub fn encoded_len(schema: &SlotSchema, max_turns: usize) -> usize {
        let n = schema.len();
        let beliefs: usize = schema.slots().map(|s| schema.belief_len(s)).sum();
        2 * NUM_ACTIONS + 2 * n + beliefs + 1 + (max_turns + 1) + 1
    }

    /// Fixed-length feature vector fed to the Q-network.
    pub fn encode(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.encoded_dim());
        self.encode_into(&mut x);
        x
    }

    pub fn encoded_dim(&self) -> usize {
        2 * NUM_ACTIONS
            + self.user_slots.len()
            + self.sys_slots.len()
            + self.beliefs.iter().map(Vec::len).sum::<usize>()
            + 1
            + (self.max_turns + 1)
            + 1
    }

    pub fn encode_into(&self, x: &mut Vec<f64>) {
        let onehot = |x: &mut Vec<f64>, act: Option<ActType>| {
            let start = x.len();
            x.resize(start + NUM_ACTIONS, 0.0);
            if let Some(a) = act {
                x[start + a.index()] = 1.0;
            }
        };
        onehot(x, self.user_act);
        x.extend(self.user_slots.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        onehot(x, self.sys_act);
        x.extend(self.sys_slots.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        for b in &self.beliefs {
            x.extend_from_slice(b);
        }
        x.push(self.turn_scalar());
        let start = x.len();
        x.resize(start + self.max_turns + 1, 0.0);
        x[start + self.turn.min(self.max_turns)] = 1.0;
        x.push(self.kb_scalar());
    }

    /// Same state re-indexed to another turn number.
    pub fn with_turn(&self, turn: usize) -> Self {
        Self {
            turn,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::belief::*;
    use super::*;

    #[test]
    fn belief_builders_are_distributions() {
        let floor = 0.01;
        for b in [
            unknown(7, floor),
            point(7, 2, floor),
            confused(7, 2, 4, 0.6, floor),
            dont_care(7, floor),
        ] {
            assert!(is_valid(&b, floor), "{b:?}");
        }
    }

    #[test]
    fn status_reads_back() {
        let f = 0.01;
        assert_eq!(status(&unknown(5, f), f), BeliefStatus::Unknown);
        assert_eq!(status(&dont_care(5, f), f), BeliefStatus::DontCare);
        assert!(status(&point(5, 3, f), f).is_clean());
        let s = status(&confused(5, 1, 3, 0.6, f), f);
        assert_eq!(s.value(), Some(3));
        assert!(!s.is_clean());
    }

    #[test]
    fn encoding_length_is_fixed() {
        let schema = SlotSchema::desk();
        let st = DialogueState {
            user_act: Some(ActType::Request),
            user_slots: vec![false; schema.len()],
            sys_act: None,
            sys_slots: vec![false; schema.len()],
            beliefs: schema.slots().map(|s| unknown(schema.belief_len(s), 0.01)).collect(),
            turn: 40,
            max_turns: 40,
            kb_count: 3,
            kb_rows: 100,
        };
        assert_eq!(st.encode().len(), DialogueState::encoded_len(&schema, 40));
        assert!((st.turn_scalar() - 1.0).abs() < 1e-12);
    }
}
