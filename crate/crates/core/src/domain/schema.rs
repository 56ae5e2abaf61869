use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a slot inside its [`SlotSchema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotId(pub usize);

/// Index of a value inside a slot's value domain.
pub type ValueId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub name: String,
    pub values: Vec<String>,
    #[serde(default)]
    pub informable: bool,
    #[serde(default)]
    pub requestable: bool,
}

impl SlotSpec {
    fn new(name: &str, values: &[&str], informable: bool, requestable: bool) -> Self {
        Self {
            name: name.to_string(),
            values: values.iter().map(|v| v.to_string()).collect(),
            informable,
            requestable,
        }
    }
}

/// Serialized form of a schema, as found in experiment config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub slots: Vec<SlotSpec>,
    /// Requestable slot answered by the system's `book` act.
    #[serde(default)]
    pub booking_slot: Option<String>,
}

/// The slot universe: names, finite value domains and the two role masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaConfig", into = "SchemaConfig")]
pub struct SlotSchema {
    slots: Vec<SlotSpec>,
    booking_slot: Option<SlotId>,
    by_name: HashMap<String, SlotId>,
}

impl TryFrom<SchemaConfig> for SlotSchema {
    type Error = Error;

    fn try_from(cfg: SchemaConfig) -> Result<Self> {
        SlotSchema::new(cfg.slots, cfg.booking_slot.as_deref())
    }
}

impl From<SlotSchema> for SchemaConfig {
    fn from(s: SlotSchema) -> Self {
        let booking_slot = s.booking_slot.map(|id| s.name(id).to_string());
        SchemaConfig {
            slots: s.slots,
            booking_slot,
        }
    }
}

impl SlotSchema {
    pub fn new(slots: Vec<SlotSpec>, booking_slot: Option<&str>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidInput("schema has no slots".into()));
        }
        let mut by_name = HashMap::with_capacity(slots.len());
        for (i, spec) in slots.iter().enumerate() {
            if spec.values.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "slot `{}` has an empty value domain",
                    spec.name
                )));
            }
            let mut seen = std::collections::HashSet::new();
            if !spec.values.iter().all(|v| seen.insert(v.as_str())) {
                return Err(Error::InvalidInput(format!(
                    "slot `{}` has duplicate values",
                    spec.name
                )));
            }
            if by_name.insert(spec.name.clone(), SlotId(i)).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate slot name `{}`",
                    spec.name
                )));
            }
        }
        let booking_slot = match booking_slot {
            None => None,
            Some(name) => {
                let id = *by_name.get(name).ok_or_else(|| {
                    Error::InvalidInput(format!("booking slot `{name}` is not in the schema"))
                })?;
                if !slots[id.0].requestable || slots[id.0].informable {
                    return Err(Error::InvalidInput(format!(
                        "booking slot `{name}` must be requestable-only"
                    )));
                }
                Some(id)
            }
        };
        Ok(Self {
            slots,
            booking_slot,
            by_name,
        })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> impl Iterator<Item = SlotId> + '_ {
        (0..self.slots.len()).map(SlotId)
    }

    pub fn spec(&self, slot: SlotId) -> &SlotSpec {
        &self.slots[slot.0]
    }

    pub fn name(&self, slot: SlotId) -> &str {
        &self.slots[slot.0].name
    }

    pub fn id(&self, name: &str) -> Result<SlotId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown slot `{name}`")))
    }

    pub fn contains(&self, slot: SlotId) -> bool {
        slot.0 < self.slots.len()
    }

    pub fn domain_len(&self, slot: SlotId) -> usize {
        self.slots[slot.0].values.len()
    }

    /// Length of the slot's belief vector: one entry per value plus "unknown".
    pub fn belief_len(&self, slot: SlotId) -> usize {
        self.domain_len(slot) + 1
    }

    pub fn value_name(&self, slot: SlotId, value: ValueId) -> &str {
        &self.slots[slot.0].values[value]
    }

    pub fn value_id(&self, slot: SlotId, value: &str) -> Result<ValueId> {
        self.slots[slot.0]
            .values
            .iter()
            .position(|v| v == value)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "value `{value}` not in domain of `{}`",
                    self.name(slot)
                ))
            })
    }

    pub fn is_informable(&self, slot: SlotId) -> bool {
        self.slots[slot.0].informable
    }

    pub fn is_requestable(&self, slot: SlotId) -> bool {
        self.slots[slot.0].requestable
    }

    pub fn informable_slots(&self) -> impl Iterator<Item = SlotId> + '_ {
        self.slots().filter(|s| self.is_informable(*s))
    }

    pub fn requestable_slots(&self) -> impl Iterator<Item = SlotId> + '_ {
        self.slots().filter(|s| self.is_requestable(*s))
    }

    pub fn booking_slot(&self) -> Option<SlotId> {
        self.booking_slot
    }

    pub fn largest_domain(&self) -> usize {
        self.slots.iter().map(|s| s.values.len()).max().unwrap_or(0)
    }

    pub fn largest_belief_len(&self) -> usize {
        self.largest_domain() + 1
    }

    /// Desk-scale movie schema: five informable constraint slots and three
    /// requestable-only slots, the last of which is answered by booking.
    pub fn desk() -> Self {
        let slots = vec![
            SlotSpec::new("city", &["seattle", "portland", "boston", "austin"], true, false),
            SlotSpec::new(
                "date",
                &["today", "tomorrow", "friday", "saturday", "sunday"],
                true,
                false,
            ),
            SlotSpec::new(
                "genre",
                &["action", "comedy", "drama", "thriller", "animation", "romance"],
                true,
                false,
            ),
            SlotSpec::new(
                "actor",
                &[
                    "jackie chan",
                    "emma stone",
                    "tom hanks",
                    "zendaya",
                    "keanu reeves",
                    "viola davis",
                    "jet li",
                    "meryl streep",
                ],
                true,
                false,
            ),
            SlotSpec::new(
                "theater",
                &["regal", "amc", "cinemark", "landmark", "alamo", "ipic"],
                true,
                false,
            ),
            SlotSpec::new(
                "moviename",
                &[
                    "rush hour",
                    "la la land",
                    "big",
                    "dune",
                    "john wick",
                    "fences",
                    "hero",
                    "the post",
                    "police story",
                    "speed",
                ],
                false,
                true,
            ),
            SlotSpec::new(
                "starttime",
                &["10am", "1pm", "4pm", "7pm", "9pm", "11pm"],
                false,
                true,
            ),
            SlotSpec::new("ticket", &["standard", "matinee", "imax", "vip"], false, true),
        ];
        Self::new(slots, Some("ticket")).expect("desk schema is valid")
    }

    /// The 29-slot movie-booking schema used for paper-scale runs.
    pub fn full() -> Self {
        let informable: &[(&str, usize)] = &[
            ("city", 8),
            ("date", 7),
            ("genre", 8),
            ("actor", 10),
            ("theater", 8),
            ("moviename", 10),
            ("starttime", 8),
            ("numberofpeople", 6),
            ("critic_rating", 5),
            ("mpaa_rating", 5),
        ];
        let requestable: &[(&str, usize)] = &[
            ("actress", 8),
            ("description", 4),
            ("distanceconstraints", 4),
            ("greeting", 4),
            ("implicit_value", 4),
            ("movie_series", 5),
            ("numberofkids", 4),
            ("other", 4),
            ("price", 6),
            ("seating", 4),
            ("state", 6),
            ("theater_chain", 5),
            ("video_format", 4),
            ("zip", 8),
            ("result", 4),
            ("closing", 4),
            ("taskcomplete", 4),
            ("mc_list", 4),
            ("ticket", 4),
        ];
        let gen = |name: &str, n: usize| -> Vec<String> {
            (0..n).map(|i| format!("{name}_{i}")).collect()
        };
        let mut slots = Vec::new();
        for (name, n) in informable {
            slots.push(SlotSpec {
                name: name.to_string(),
                values: gen(name, *n),
                informable: true,
                requestable: false,
            });
        }
        for (name, n) in requestable {
            slots.push(SlotSpec {
                name: name.to_string(),
                values: gen(name, *n),
                informable: false,
                requestable: true,
            });
        }
        Self::new(slots, Some("ticket")).expect("full schema is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_schema_shape() {
        let s = SlotSchema::desk();
        assert_eq!(s.len(), 8);
        assert_eq!(s.informable_slots().count(), 5);
        assert_eq!(s.requestable_slots().count(), 3);
        assert!(s.slots().all(|id| (4..=10).contains(&s.domain_len(id))));
        assert_eq!(s.booking_slot(), Some(s.id("ticket").unwrap()));
    }

    #[test]
    fn full_schema_has_29_slots() {
        assert_eq!(SlotSchema::full().len(), 29);
    }

    #[test]
    fn rejects_duplicates_and_empty_domains() {
        let dup = vec![
            SlotSpec::new("a", &["x"], true, false),
            SlotSpec::new("a", &["y"], true, false),
        ];
        assert!(SlotSchema::new(dup, None).is_err());
        let empty = vec![SlotSpec::new("a", &[], true, false)];
        assert!(SlotSchema::new(empty, None).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = SlotSchema::desk();
        let text = toml::to_string(&s).unwrap();
        let back: SlotSchema = toml::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
