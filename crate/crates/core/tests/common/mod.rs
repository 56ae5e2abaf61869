#![allow(dead_code)]

use std::sync::Arc;

use dialogue_her::domain::{DialogueEpisode, SlotSchema};
use dialogue_her::simulator::policy::rule_action;
use dialogue_her::simulator::{generate_kb, DialogueEnv, EnvConfig, GoalConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Desk environment whose goals have at most `max_items` entries.
pub fn small_goal_env(max_items: usize) -> DialogueEnv {
    let schema = Arc::new(SlotSchema::desk());
    let kb = Arc::new(generate_kb(&schema, 200, 7).unwrap());
    let goals = GoalConfig {
        min_constraints: 1,
        max_constraints: (max_items - 1).min(3),
        min_extra_requests: 0,
        max_extra_requests: 2.min(max_items - 1 - (max_items - 1).min(3)),
        opening_informs: 1,
    };
    DialogueEnv::new(schema, kb, EnvConfig::default(), goals).unwrap()
}

pub fn desk_env() -> DialogueEnv {
    let schema = Arc::new(SlotSchema::desk());
    let kb = Arc::new(generate_kb(&schema, 200, 7).unwrap());
    DialogueEnv::new(schema, kb, EnvConfig::default(), GoalConfig::default()).unwrap()
}

/// Dialogues from a mixture of behaviours: uniform random, the rule policy
/// with and without confirmations, and the rule policy with random slips.
pub fn mixed_episodes(env: &DialogueEnv, n: usize, seed: u64) -> Vec<DialogueEpisode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = env.schema().clone();
    let floor = env.config().smoothing_floor;
    (0..n)
        .map(|i| {
            let slip = [1.0, 0.0, 0.0, 0.3][i % 4];
            let confirm = i % 4 == 2;
            env.rollout(&mut rng, |s, r| {
                if r.gen::<f64>() < slip {
                    r.gen_range(0..11)
                } else {
                    rule_action(s, &schema, floor, confirm).index()
                }
            })
            .unwrap()
        })
        .collect()
}
