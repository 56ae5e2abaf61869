use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::kl::{kl_divergence, kl_divergence_with};
use super::{HerConfig, GENERATED_TURN_REWARD};
use crate::domain::{Assess, DialogueEpisode, DialogueState, Goal, Outcome, StateRef};
use crate::error::{Error, Result};
use crate::segmentation::{segment_dialogue, SegmentPair};

/// The remainder of a successful dialogue after one of its valid heads.
/// `tail.goal` is the goal of the dialogue it was cut from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    pub tail: DialogueEpisode,
    pub subgoal: Goal,
}

impl TailEntry {
    pub fn first_state(&self) -> &DialogueState {
        &self.tail.initial_state
    }
}

/// Bounded FIFO pool of tails, indexed by the subgoal their head accomplished.
#[derive(Debug, Clone)]
pub struct TailPool {
    capacity: usize,
    entries: VecDeque<TailEntry>,
    /// Sequence number of `entries[0]`.
    front_seq: u64,
    by_subgoal: HashMap<Goal, VecDeque<u64>>,
}

impl TailPool {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("tail pool capacity must be at least 1".into()));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::new(),
            front_seq: 0,
            by_subgoal: HashMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Entries oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &TailEntry> {
        self.entries.iter()
    }

    /// Inserts a tail, evicting the oldest entry when full. Empty tails are
    /// rejected (`false`).
    pub fn push(&mut self, entry: TailEntry) -> bool {
        if entry.tail.is_empty() {
            return false;
        }
        if self.entries.len() == self.capacity {
            let old = self.entries.pop_front().expect("pool is full");
            if let Some(q) = self.by_subgoal.get_mut(&old.subgoal) {
                debug_assert_eq!(q.front(), Some(&self.front_seq));
                q.pop_front();
                if q.is_empty() {
                    self.by_subgoal.remove(&old.subgoal);
                }
            }
            self.front_seq += 1;
        }
        let seq = self.front_seq + self.entries.len() as u64;
        self.by_subgoal
            .entry(entry.subgoal.clone())
            .or_default()
            .push_back(seq);
        self.entries.push_back(entry);
        true
    }

    /// Oldest entry for `subgoal` whose first state lies within `eps` of
    /// `junction`, with its divergence.
    pub fn find_first(
        &self,
        subgoal: &Goal,
        junction: &DialogueState,
        config: &HerConfig,
    ) -> Result<Option<(&TailEntry, f64)>> {
        let Some(seqs) = self.by_subgoal.get(subgoal) else {
            return Ok(None);
        };
        for &seq in seqs {
            let entry = &self.entries[(seq - self.front_seq) as usize];
            let d = kl_divergence_with(junction, entry.first_state(), config.kl_aggregate)?;
            if d <= config.kl_threshold {
                return Ok(Some((entry, d)));
            }
        }
        Ok(None)
    }
}

/// Subgoal equality and junction divergence within `eps`.
pub fn stitchable(head: &SegmentPair, tail: &TailEntry, eps: f64) -> bool {
    head.subgoal == tail.subgoal
        && kl_divergence(head.segment.final_state(), tail.first_state())
            .map(|d| d <= eps)
            .unwrap_or(false)
}

/// `whole ⊖ head`: the turns of `whole` after its prefix `head`.
pub fn dialogue_subtract(whole: &DialogueEpisode, head: &DialogueEpisode) -> Result<DialogueEpisode> {
    let n = head.len();
    if n > whole.len()
        || head.opening != whole.opening
        || head.initial_state != whole.initial_state
        || head.turns[..] != whole.turns[..n]
    {
        return Err(Error::InvalidOperation(
            "head is not a turn-for-turn prefix of the dialogue".into(),
        ));
    }
    let start: StateRef = if n == 0 {
        whole.initial_state.clone()
    } else {
        whole.turns[n - 1].transition.next_state.clone()
    };
    let mut tail = DialogueEpisode::new(whole.goal.clone(), whole.opening.clone(), start);
    for t in &whole.turns[n..] {
        tail.push(t.clone());
    }
    tail.outcome = whole.outcome;
    Ok(tail)
}

/// Head followed by tail as one successful dialogue for the tail's goal.
///
/// The tail's first transition is re-rooted at the head's final state and
/// turn numbers are recomputed. Rewards are `-1` per turn plus `r_max` on
/// the last. Returns `None` when the result would exceed the turn cap.
pub fn concatenate(
    head: &DialogueEpisode,
    tail: &DialogueEpisode,
    r_max: f64,
) -> Result<Option<DialogueEpisode>> {
    if head.is_empty() || tail.is_empty() {
        return Err(Error::InvalidInput("cannot stitch an empty segment".into()));
    }
    let total = head.len() + tail.len();
    if total > head.final_state().max_turns {
        return Ok(None);
    }
    let mut ep = DialogueEpisode::new(tail.goal.clone(), head.opening.clone(), head.initial_state.clone());
    for t in &head.turns {
        let mut t = t.clone();
        t.transition.reward = GENERATED_TURN_REWARD;
        t.transition.terminal = false;
        ep.push(t);
    }
    let mut prev = head.turns[head.len() - 1].transition.next_state.clone();
    for (k, t) in tail.turns.iter().enumerate() {
        let idx = head.len() + k + 1;
        let last = idx == total;
        let mut t = t.clone();
        let next = Arc::new(t.transition.next_state.with_turn(idx));
        t.transition.state = prev;
        t.transition.next_state = next.clone();
        t.transition.reward = GENERATED_TURN_REWARD + if last { r_max } else { 0.0 };
        t.transition.terminal = last;
        prev = next;
        ep.push(t);
    }
    ep.outcome = Outcome::Success;
    Ok(Some(ep))
}

/// One retained stitch with what is needed to re-check it.
#[derive(Debug, Clone)]
pub struct Stitched {
    pub episode: DialogueEpisode,
    pub head_len: usize,
    pub head_subgoal: Goal,
    pub tail_subgoal: Goal,
    pub tail_first_state: StateRef,
    pub junction_kl: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StitchStats {
    pub tails_added: usize,
    pub attempted: usize,
    pub discarded: usize,
    pub too_long: usize,
}

impl StitchStats {
    pub fn generated(&self) -> usize {
        self.attempted - self.discarded
    }

    pub fn absorb(&mut self, o: StitchStats) {
        self.tails_added += o.tails_added;
        self.attempted += o.attempted;
        self.discarded += o.discarded;
        self.too_long += o.too_long;
    }
}

/// Stitching-based relabelling of one finished dialogue.
///
/// A successful dialogue contributes its tails to `pool`; a failed one has
/// each valid head joined to the first stitchable tail in the pool. Stitched
/// dialogues failing assessment against the tail's goal are discarded.
pub fn stitch_her<A: Assess + ?Sized>(
    episode: &DialogueEpisode,
    goal: &Goal,
    pool: &mut TailPool,
    assessor: &A,
    config: &HerConfig,
) -> Result<(Vec<Stitched>, StitchStats)> {
    if episode.outcome == Outcome::Ongoing {
        return Err(Error::InvalidInput("stitching needs a finished dialogue".into()));
    }
    let mut stats = StitchStats::default();
    let mut out = Vec::new();
    if episode.is_empty() || goal.is_empty() {
        return Ok((out, stats));
    }
    let omega = segment_dialogue(episode, goal, assessor)?;
    let success = assessor.assess(goal, &episode.view())?;
    if success {
        for pair in &omega {
            let tail = dialogue_subtract(episode, &pair.segment)?;
            if pool.push(TailEntry {
                tail,
                subgoal: pair.subgoal.clone(),
            }) {
                stats.tails_added += 1;
            }
        }
        return Ok((out, stats));
    }
    for pair in &omega {
        if out.len() >= config.max_stitches_per_dialogue {
            break;
        }
        let junction = pair.segment.final_state();
        let Some((entry, d)) = pool.find_first(&pair.subgoal, junction, config)? else {
            continue;
        };
        let Some(stitched) = concatenate(&pair.segment, &entry.tail, config.r_max)? else {
            stats.too_long += 1;
            continue;
        };
        stats.attempted += 1;
        if assessor.assess(&stitched.goal, &stitched.view())? {
            out.push(Stitched {
                episode: stitched,
                head_len: pair.len(),
                head_subgoal: pair.subgoal.clone(),
                tail_subgoal: entry.subgoal.clone(),
                tail_first_state: entry.tail.initial_state.clone(),
                junction_kl: d,
            });
        } else {
            stats.discarded += 1;
        }
    }
    Ok((out, stats))
}
