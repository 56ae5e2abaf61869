use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::schema::{SlotId, SlotSchema, ValueId};
use crate::error::{Error, Result};

/// A single entry of a goal that must be identified during a dialogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GoalItem {
    Constraint(SlotId, ValueId),
    Request(SlotId),
}

impl GoalItem {
    pub fn slot(&self) -> SlotId {
        match *self {
            GoalItem::Constraint(s, _) | GoalItem::Request(s) => s,
        }
    }
}

/// A user goal `(C, R)`: slot constraints with required values, plus slots
/// whose values the user wants to learn.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Goal {
    constraints: BTreeMap<SlotId, ValueId>,
    requests: BTreeSet<SlotId>,
}

impl Goal {
    /// Builds a goal and checks it against `schema`.
    pub fn new(
        schema: &SlotSchema,
        constraints: impl IntoIterator<Item = (SlotId, ValueId)>,
        requests: impl IntoIterator<Item = SlotId>,
    ) -> Result<Self> {
        let goal = Self::from_parts(constraints, requests);
        goal.validate(schema)?;
        Ok(goal)
    }

    /// Builds a goal from slot and value names.
    pub fn from_names(
        schema: &SlotSchema,
        constraints: &[(&str, &str)],
        requests: &[&str],
    ) -> Result<Self> {
        let mut c = Vec::with_capacity(constraints.len());
        for (slot, value) in constraints {
            let id = schema.id(slot)?;
            c.push((id, schema.value_id(id, value)?));
        }
        let r = requests
            .iter()
            .map(|s| schema.id(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(schema, c, r)
    }

    /// Builds a goal without schema validation.
    pub fn from_parts(
        constraints: impl IntoIterator<Item = (SlotId, ValueId)>,
        requests: impl IntoIterator<Item = SlotId>,
    ) -> Self {
        Self {
            constraints: constraints.into_iter().collect(),
            requests: requests.into_iter().collect(),
        }
    }

    pub fn from_items(items: impl IntoIterator<Item = GoalItem>) -> Self {
        let mut goal = Goal::default();
        for item in items {
            goal.insert(item);
        }
        goal
    }

    pub fn insert(&mut self, item: GoalItem) {
        match item {
            GoalItem::Constraint(s, v) => {
                self.constraints.insert(s, v);
            }
            GoalItem::Request(s) => {
                self.requests.insert(s);
            }
        }
    }

    pub fn validate(&self, schema: &SlotSchema) -> Result<()> {
        for (&slot, &value) in &self.constraints {
            if !schema.contains(slot) {
                return Err(Error::InvalidInput(format!("constraint slot {} not in schema", slot.0)));
            }
            if !schema.is_informable(slot) {
                return Err(Error::InvalidInput(format!(
                    "constraint slot `{}` is not informable",
                    schema.name(slot)
                )));
            }
            if value >= schema.domain_len(slot) {
                return Err(Error::InvalidInput(format!(
                    "value {value} outside domain of `{}`",
                    schema.name(slot)
                )));
            }
        }
        for &slot in &self.requests {
            if !schema.contains(slot) {
                return Err(Error::InvalidInput(format!("request slot {} not in schema", slot.0)));
            }
            if !schema.is_requestable(slot) {
                return Err(Error::InvalidInput(format!(
                    "request slot `{}` is not requestable",
                    schema.name(slot)
                )));
            }
        }
        Ok(())
    }

    pub fn constraints(&self) -> &BTreeMap<SlotId, ValueId> {
        &self.constraints
    }

    pub fn requests(&self) -> &BTreeSet<SlotId> {
        &self.requests
    }

    pub fn constraint(&self, slot: SlotId) -> Option<ValueId> {
        self.constraints.get(&slot).copied()
    }

    /// `|G| = |C| + |R|`, the number of entries that must be identified.
    pub fn size(&self) -> usize {
        self.constraints.len() + self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn contains(&self, item: GoalItem) -> bool {
        match item {
            GoalItem::Constraint(s, v) => self.constraints.get(&s) == Some(&v),
            GoalItem::Request(s) => self.requests.contains(&s),
        }
    }

    /// Items in canonical order: constraints by slot, then requests by slot.
    pub fn items(&self) -> Vec<GoalItem> {
        self.constraints
            .iter()
            .map(|(&s, &v)| GoalItem::Constraint(s, v))
            .chain(self.requests.iter().map(|&s| GoalItem::Request(s)))
            .collect()
    }

    /// Component-wise containment, values included.
    pub fn is_contained_in(&self, other: &Goal) -> bool {
        self.constraints
            .iter()
            .all(|(s, v)| other.constraints.get(s) == Some(v))
            && self.requests.is_subset(&other.requests)
    }

    /// `self ⊏ other`: a non-empty, strictly smaller sub-pair of `other`.
    pub fn is_subgoal_of(&self, other: &Goal) -> bool {
        !self.is_empty() && self != other && self.is_contained_in(other)
    }

    pub fn display<'a>(&'a self, schema: &'a SlotSchema) -> GoalDisplay<'a> {
        GoalDisplay { goal: self, schema }
    }
}

pub struct GoalDisplay<'a> {
    goal: &'a Goal,
    schema: &'a SlotSchema,
}

impl fmt::Display for GoalDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C={{")?;
        for (i, (&s, &v)) in self.goal.constraints.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}={}", self.schema.name(s), self.schema.value_name(s, v))?;
        }
        write!(f, "}} R={{")?;
        for (i, &s) in self.goal.requests.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.schema.name(s))?;
        }
        write!(f, "}}")
    }
}

/// Checks whether `sub` is a subgoal of `goal`, validating both against the schema.
pub fn is_subgoal(schema: &SlotSchema, sub: &Goal, goal: &Goal) -> Result<bool> {
    sub.validate(schema)?;
    goal.validate(schema)?;
    Ok(sub.is_subgoal_of(goal))
}

/// Number of subgoals of a goal with `c_size` constraints and `r_size`
/// requests: every `(C', R')` sub-pair except the empty pair and the goal itself.
pub fn count_subgoals(c_size: u32, r_size: u32) -> u128 {
    let n = c_size + r_size;
    assert!(n < 128, "goal too large to count subgoals");
    (1u128 << n).saturating_sub(2)
}

/// Every non-empty sub-pair of `goal`, including `goal` itself, ordered by
/// bitmask over [`Goal::items`].
pub fn enumerate_subpairs(goal: &Goal) -> Vec<Goal> {
    let items = goal.items();
    let n = items.len();
    assert!(n < 32, "refusing to enumerate 2^{n} sub-pairs");
    (1u32..(1u32 << n))
        .map(|mask| {
            Goal::from_items(
                items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, it)| *it),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jackie_chan() -> (SlotSchema, Goal) {
        let schema = SlotSchema::desk();
        let goal = Goal::from_names(
            &schema,
            &[("actor", "jackie chan"), ("genre", "action"), ("date", "today")],
            &["moviename", "starttime"],
        )
        .unwrap();
        (schema, goal)
    }

    #[test]
    fn subgoal_three_keeps_requests() {
        let (schema, goal) = jackie_chan();
        let sub = Goal::from_names(
            &schema,
            &[("actor", "jackie chan"), ("date", "today")],
            &["moviename", "starttime"],
        )
        .unwrap();
        assert!(is_subgoal(&schema, &sub, &goal).unwrap());
    }

    #[test]
    fn goal_is_not_its_own_subgoal() {
        let (schema, goal) = jackie_chan();
        assert!(!is_subgoal(&schema, &goal, &goal).unwrap());
    }

    #[test]
    fn empty_pair_is_not_a_subgoal() {
        let (schema, goal) = jackie_chan();
        assert!(!is_subgoal(&schema, &Goal::default(), &goal).unwrap());
    }

    #[test]
    fn value_mismatch_is_not_a_subgoal() {
        let (schema, goal) = jackie_chan();
        let sub = Goal::from_names(&schema, &[("actor", "jet li")], &[]).unwrap();
        assert!(!is_subgoal(&schema, &sub, &goal).unwrap());
    }

    #[test]
    fn schema_mismatch_is_invalid_input() {
        let (schema, goal) = jackie_chan();
        let bogus = Goal::from_parts([(SlotId(42), 0)], []);
        assert!(matches!(
            is_subgoal(&schema, &bogus, &goal),
            Err(Error::InvalidInput(_))
        ));
        let wrong_role = Goal::from_parts([(schema.id("ticket").unwrap(), 0)], []);
        assert!(is_subgoal(&schema, &wrong_role, &goal).is_err());
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_subgoals(1, 0), 0);
        assert_eq!(count_subgoals(1, 1), 2);
        assert_eq!(count_subgoals(5, 5), 1022);
        assert_eq!(count_subgoals(0, 0), 0);
    }
}
