use std::collections::BTreeSet;

use dialogue_her::domain::{belief, count_subgoals, enumerate_subpairs, Goal, GoalItem, SlotId};
use dialogue_her::her::{kl_discrete, kl_divergence_with, KlAggregate};
use dialogue_her::Error;
use proptest::prelude::*;

fn goal(c: u32, r: u32) -> Goal {
    Goal::from_items(
        (0..c)
            .map(|i| GoalItem::Constraint(SlotId(i as usize), 0))
            .chain((0..r).map(|i| GoalItem::Request(SlotId(100 + i as usize)))),
    )
}

/// Counts proper, non-empty sub-pairs by walking constraint and request
/// subsets separately.
fn brute_force_count(c: u32, r: u32) -> u128 {
    let g = goal(c, r);
    let cs: Vec<GoalItem> = (0..c).map(|i| GoalItem::Constraint(SlotId(i as usize), 0)).collect();
    let rs: Vec<GoalItem> = (0..r).map(|i| GoalItem::Request(SlotId(100 + i as usize))).collect();
    let mut n = 0;
    for cm in 0u32..(1 << c) {
        for rm in 0u32..(1 << r) {
            let mut sub = Goal::default();
            for (i, it) in cs.iter().enumerate() {
                if cm >> i & 1 == 1 {
                    sub.insert(*it);
                }
            }
            for (i, it) in rs.iter().enumerate() {
                if rm >> i & 1 == 1 {
                    sub.insert(*it);
                }
            }
            n += sub.is_subgoal_of(&g) as u128;
        }
    }
    n
}

#[test]
fn subgoal_count_matches_enumeration() {
    for c in 0..=8 {
        for r in 0..=(8 - c) {
            assert_eq!(count_subgoals(c, r), brute_force_count(c, r), "c={c} r={r}");
            if c + r > 0 {
                let subs = enumerate_subpairs(&goal(c, r));
                let distinct: BTreeSet<_> = subs.iter().map(|g| format!("{g:?}")).collect();
                assert_eq!(subs.len() as u128, count_subgoals(c, r) + 1);
                assert_eq!(distinct.len(), subs.len());
            }
        }
    }
    // ten-entry goal: the closed form gives 1022
    assert_eq!(count_subgoals(5, 5), 1022);
    assert_eq!(brute_force_count(5, 5), 1022);
}

#[test]
fn kl_hand_example() {
    let d = kl_discrete(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
    let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
    assert!((d - expected).abs() < 1e-12);
    assert!((d - 0.1438).abs() < 1e-4);
}

#[test]
fn kl_is_asymmetric() {
    let p = [0.5, 0.5];
    let q = [0.25, 0.75];
    let a = kl_discrete(&p, &q).unwrap();
    let b = kl_discrete(&q, &p).unwrap();
    let expected_b = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
    assert!((b - expected_b).abs() < 1e-12);
    assert!((a - b).abs() > 1e-3);
}

#[test]
fn kl_rejects_bad_input() {
    assert!(matches!(kl_discrete(&[0.5, 0.5], &[1.0]), Err(Error::InvalidInput(_))));
    assert!(matches!(kl_discrete(&[1.0, 0.0], &[0.5, 0.5]), Err(Error::NumericDomain(_))));
}

fn smoothed(raw: &[f64], floor: f64) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    let scale = 1.0 - raw.len() as f64 * floor;
    raw.iter().map(|x| floor + scale * x / total).collect()
}

proptest! {
    #[test]
    fn kl_nonnegative_and_zero_only_on_identity(
        a in proptest::collection::vec(0.0f64..1.0, 2..10),
        b in proptest::collection::vec(0.0f64..1.0, 2..10),
        floor in 0.001f64..0.05,
    ) {
        let n = a.len().min(b.len());
        prop_assume!(a[..n].iter().sum::<f64>() > 1e-3 && b[..n].iter().sum::<f64>() > 1e-3);
        let p = smoothed(&a[..n], floor);
        let q = smoothed(&b[..n], floor);
        prop_assert!(belief::is_valid(&p, floor) && belief::is_valid(&q, floor));
        let d = kl_discrete(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(kl_discrete(&p, &p).unwrap() <= 1e-15);
        let gap = p.iter().zip(&q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if gap > 1e-6 {
            prop_assert!(d > 0.0);
        }
        // Pinsker: KL ≥ 2·TV²
        let tv: f64 = 0.5 * p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum::<f64>();
        prop_assert!(d + 1e-12 >= 2.0 * tv * tv);
    }

    #[test]
    fn state_aggregates_bound_each_other(vals in proptest::collection::vec((0usize..5, 0usize..5), 1..6)) {
        use dialogue_her::domain::DialogueState;
        let floor = 0.05;
        let mk = |pick: &dyn Fn(&(usize, usize)) -> usize| DialogueState {
            user_act: None,
            user_slots: vec![false; vals.len()],
            sys_act: None,
            sys_slots: vec![false; vals.len()],
            beliefs: vals.iter().map(|v| belief::point(6, pick(v), floor)).collect(),
            turn: 0,
            max_turns: 10,
            kb_count: 0,
            kb_rows: 1,
        };
        let s0 = mk(&|v| v.0);
        let s1 = mk(&|v| v.1);
        let sum = kl_divergence_with(&s0, &s1, KlAggregate::Sum).unwrap();
        let max = kl_divergence_with(&s0, &s1, KlAggregate::Max).unwrap();
        prop_assert!(max <= sum + 1e-12);
        prop_assert!(sum <= max * vals.len() as f64 + 1e-12);
    }
}
