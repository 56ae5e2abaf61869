mod common;

use dialogue_her::domain::{Assess, GoalItem};
use dialogue_her::segmentation::{
    segment_dialogue, segment_dialogue_bruteforce, segment_dialogue_traced, CountingAssessor,
    BRUTEFORCE_MAX_ITEMS,
};
use proptest::prelude::*;

#[test]
fn incremental_matches_exhaustive_on_simulated_dialogues() {
    let env = common::small_goal_env(6);
    let assessor = env.assessor();
    let episodes = common::mixed_episodes(&env, 400, 11);
    let mut with_segments = 0;
    for ep in &episodes {
        assert!(ep.goal.size() <= 6);
        let fast = segment_dialogue(ep, &ep.goal, &assessor).unwrap();
        let slow = segment_dialogue_bruteforce(ep, &ep.goal, &assessor, BRUTEFORCE_MAX_ITEMS).unwrap();
        assert_eq!(fast, slow);
        with_segments += !fast.is_empty() as usize;
    }
    assert!(with_segments > 100, "corpus too degenerate: {with_segments}");
}

#[test]
fn segments_end_where_their_subgoal_completes() {
    let env = common::desk_env();
    let assessor = env.assessor();
    for ep in common::mixed_episodes(&env, 200, 5) {
        let pairs = segment_dialogue(&ep, &ep.goal, &assessor).unwrap();
        let mut prev_len = 0;
        let mut prev_size = 0;
        for p in &pairs {
            assert!(p.len() > prev_len && p.subgoal.size() > prev_size);
            assert!(p.subgoal.is_contained_in(&ep.goal));
            assert!(assessor.assess(&p.subgoal, &p.segment.view()).unwrap());
            // the subgoal is not already accomplished one turn earlier
            if p.len() > 1 {
                let earlier = ep.prefix(p.len() - 1);
                let all_done = p
                    .subgoal
                    .items()
                    .iter()
                    .all(|&i| assessor.item_achieved(i, &earlier, earlier.len()));
                assert!(!all_done);
            }
            prev_len = p.len();
            prev_size = p.subgoal.size();
        }
        // a successful dialogue ends with the full goal identified
        if ep.is_success() {
            let last = pairs.last().expect("successful dialogue has segments");
            assert_eq!(last.len(), ep.len());
            assert_eq!(last.subgoal, ep.goal);
        }
    }
}

#[test]
fn assessor_calls_bounded_per_turn() {
    let env = common::desk_env();
    let episodes = common::mixed_episodes(&env, 200, 3);
    for ep in &episodes {
        let counting = CountingAssessor::new(env.assessor());
        let trace = segment_dialogue_traced(ep, &ep.goal, &counting).unwrap();
        assert_eq!(trace.assessor_calls.len(), ep.len());
        assert!(trace.assessor_calls.iter().all(|&c| c <= ep.goal.size()));
        assert!(counting.calls() <= ep.len() * ep.goal.size());
    }
}

#[test]
fn unidentified_constraint_never_in_a_subgoal() {
    let env = common::desk_env();
    let assessor = env.assessor();
    for ep in common::mixed_episodes(&env, 200, 8) {
        let view = ep.view();
        for pair in segment_dialogue(&ep, &ep.goal, &assessor).unwrap() {
            for item in pair.subgoal.items() {
                if let GoalItem::Constraint(..) = item {
                    assert!(assessor.item_achieved(item, &view, pair.len()));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identification_ledger_only_grows(seed in any::<u64>()) {
        let env = common::small_goal_env(6);
        let assessor = env.assessor();
        for ep in common::mixed_episodes(&env, 8, seed) {
            let trace = segment_dialogue_traced(&ep, &ep.goal, &assessor).unwrap();
            prop_assert!(trace.identified_sizes.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(trace.pairs.len(),
                trace.identified_sizes.iter().scan(0, |p, &s| { let g = s > *p; *p = s; Some(g) }).filter(|&g| g).count());
            let slow = segment_dialogue_bruteforce(&ep, &ep.goal, &assessor, BRUTEFORCE_MAX_ITEMS).unwrap();
            prop_assert_eq!(trace.pairs, slow);
        }
    }
}
