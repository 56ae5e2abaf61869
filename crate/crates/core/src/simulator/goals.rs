use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kb::KnowledgeBase;
use crate::domain::{Goal, SlotSchema};
use crate::error::{Error, Result};

/// Shape of sampled user goals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalConfig {
    pub min_constraints: usize,
    pub max_constraints: usize,
    /// Requests beyond the booking slot, which every goal asks for.
    pub min_extra_requests: usize,
    pub max_extra_requests: usize,
    /// Constraints volunteered in the user's opening act.
    pub opening_informs: usize,
}

impl Default for GoalConfig {
    fn default() -> Self {
        Self {
            min_constraints: 2,
            max_constraints: 4,
            min_extra_requests: 0,
            max_extra_requests: 2,
            opening_informs: 1,
        }
    }
}

impl GoalConfig {
    pub fn validate(&self, schema: &SlotSchema) -> Result<()> {
        let informable = schema.informable_slots().count();
        if self.min_constraints == 0 || self.min_constraints > self.max_constraints {
            return Err(Error::Config("need 1 <= min_constraints <= max_constraints".into()));
        }
        if self.max_constraints > informable {
            return Err(Error::Config(format!(
                "max_constraints {} exceeds {informable} informable slots",
                self.max_constraints
            )));
        }
        if self.min_extra_requests > self.max_extra_requests {
            return Err(Error::Config("min_extra_requests > max_extra_requests".into()));
        }
        let extra = schema
            .requestable_slots()
            .filter(|&s| Some(s) != schema.booking_slot())
            .count();
        if self.max_extra_requests > extra {
            return Err(Error::Config(format!(
                "max_extra_requests {} exceeds {extra} requestable slots",
                self.max_extra_requests
            )));
        }
        if schema.booking_slot().is_none() && self.min_extra_requests == 0 {
            return Err(Error::Config(
                "without a booking slot every goal needs at least one extra request".into(),
            ));
        }
        Ok(())
    }
}

/// Samples a goal whose constraints are copied from a random knowledge-base
/// row, so at least one row satisfies it.
pub fn sample_goal<R: Rng + ?Sized>(
    schema: &SlotSchema,
    kb: &KnowledgeBase,
    config: &GoalConfig,
    rng: &mut R,
) -> Goal {
    let row = &kb.rows()[rng.gen_range(0..kb.len())];
    let n_c = rng.gen_range(config.min_constraints..=config.max_constraints);
    let mut slots = schema.informable_slots().choose_multiple(rng, n_c);
    slots.sort();
    let constraints = slots.into_iter().map(|s| (s, row[s.0]));

    let extra: Vec<_> = schema
        .requestable_slots()
        .filter(|&s| Some(s) != schema.booking_slot())
        .collect();
    let n_r = rng.gen_range(config.min_extra_requests..=config.max_extra_requests);
    let requests = extra
        .choose_multiple(rng, n_r)
        .copied()
        .chain(schema.booking_slot());
    Goal::from_parts(constraints, requests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::generate_kb;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_goals_are_satisfiable() {
        let schema = SlotSchema::desk();
        let kb = generate_kb(&schema, 100, 7).unwrap();
        let cfg = GoalConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let g = sample_goal(&schema, &kb, &cfg, &mut rng);
            g.validate(&schema).unwrap();
            assert!(!kb.matching(g.constraints().iter()).is_empty());
            assert!(!g.constraints().is_empty() && !g.requests().is_empty());
        }
    }

    #[test]
    fn single_row_kb_fixes_constraint_values() {
        let schema = SlotSchema::desk();
        let kb = generate_kb(&schema, 1, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let g = sample_goal(&schema, &kb, &GoalConfig::default(), &mut rng);
            for (s, v) in g.constraints() {
                assert_eq!(kb.row(0)[s.0], *v);
            }
        }
    }

    #[test]
    fn constraint_count_covers_range() {
        let schema = SlotSchema::desk();
        let kb = generate_kb(&schema, 100, 7).unwrap();
        let cfg = GoalConfig {
            min_constraints: 1,
            max_constraints: 5,
            ..GoalConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hist = [0usize; 6];
        for _ in 0..10_000 {
            hist[sample_goal(&schema, &kb, &cfg, &mut rng).constraints().len()] += 1;
        }
        assert_eq!(hist[0], 0);
        for (k, &count) in hist.iter().enumerate().skip(1) {
            // uniform over 5 sizes: 2000 expected each
            assert!((1700..2300).contains(&count), "|C|={k}: {count}");
        }
    }
}
