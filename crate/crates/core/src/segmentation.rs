//! Incremental identification of valid head segments and the subgoals they
//! accomplish, plus the exhaustive search it replaces (kept as an oracle).

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::domain::{enumerate_subpairs, Assess, DialogueEpisode, EpisodeView, Goal, GoalItem};
use crate::error::{Error, Result};

/// Default guard on goal size for the exhaustive search.
pub const BRUTEFORCE_MAX_ITEMS: usize = 12;

/// A head segment (turns `0..len` of a dialogue) and the subgoal it accomplishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub segment: DialogueEpisode,
    pub subgoal: Goal,
}

impl SegmentPair {
    pub fn len(&self) -> usize {
        self.segment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segment.is_empty()
    }
}

/// Goal entries already identified (`P`) and still outstanding (`Q`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentificationLedger {
    pub identified: Vec<GoalItem>,
    pub remaining: Vec<GoalItem>,
}

impl IdentificationLedger {
    pub fn new(goal: &Goal) -> Self {
        Self {
            identified: Vec::new(),
            remaining: goal.items(),
        }
    }

    fn with(&self, q: GoalItem) -> Goal {
        Goal::from_items(self.identified.iter().copied().chain(std::iter::once(q)))
    }

    fn promote(&mut self, q: GoalItem) {
        self.remaining.retain(|x| *x != q);
        self.identified.push(q);
    }

    pub fn identified_goal(&self) -> Goal {
        Goal::from_items(self.identified.iter().copied())
    }
}

/// Per-turn bookkeeping collected alongside the segments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentationTrace {
    pub pairs: Vec<SegmentPair>,
    /// `|P|` after each turn.
    pub identified_sizes: Vec<usize>,
    /// Assessor calls made after each turn.
    pub assessor_calls: Vec<usize>,
}

/// Dialogue segmentation: after each turn, every outstanding entry `q` is
/// tried together with the already-identified entries `P`; entries whose
/// combined subgoal is accomplished move into `P`, and when any moved the
/// prefix up to this turn is recorded with a snapshot of `P`.
pub fn segment_dialogue<A: Assess + ?Sized>(
    episode: &DialogueEpisode,
    goal: &Goal,
    assessor: &A,
) -> Result<Vec<SegmentPair>> {
    Ok(segment_dialogue_traced(episode, goal, assessor)?.pairs)
}

pub fn segment_dialogue_traced<A: Assess + ?Sized>(
    episode: &DialogueEpisode,
    goal: &Goal,
    assessor: &A,
) -> Result<SegmentationTrace> {
    if goal.is_empty() {
        return Err(Error::InvalidInput("cannot segment against an empty goal".into()));
    }
    if episode.is_empty() {
        return Err(Error::InvalidInput("cannot segment an empty dialogue".into()));
    }
    let mut ledger = IdentificationLedger::new(goal);
    let mut trace = SegmentationTrace::default();
    for len in 1..=episode.len() {
        let view = episode.prefix(len);
        let mut outcome = false;
        let mut calls = 0;
        for q in ledger.remaining.clone() {
            let candidate = ledger.with(q);
            calls += 1;
            if assessor
                .assess(&candidate, &view)
                .map_err(|e| Error::Assessment(e.to_string()))?
            {
                outcome = true;
                ledger.promote(q);
            }
        }
        if outcome {
            trace.pairs.push(SegmentPair {
                segment: episode.truncated(len),
                subgoal: ledger.identified_goal(),
            });
        }
        trace.identified_sizes.push(ledger.identified.len());
        trace.assessor_calls.push(calls);
    }
    Ok(trace)
}

/// Exhaustive segmentation: at every prefix, assess every non-empty sub-pair
/// of the goal (the goal itself included) and record the prefix whenever the
/// largest accomplished sub-pair grows.
pub fn segment_dialogue_bruteforce<A: Assess + ?Sized>(
    episode: &DialogueEpisode,
    goal: &Goal,
    assessor: &A,
    max_items: usize,
) -> Result<Vec<SegmentPair>> {
    if goal.size() > max_items {
        return Err(Error::Refused(format!(
            "goal has {} entries, exhaustive search allows at most {max_items}",
            goal.size()
        )));
    }
    if goal.is_empty() {
        return Err(Error::InvalidInput("cannot segment against an empty goal".into()));
    }
    if episode.is_empty() {
        return Err(Error::InvalidInput("cannot segment an empty dialogue".into()));
    }
    let candidates = enumerate_subpairs(goal);
    let mut best_size = 0;
    let mut pairs = Vec::new();
    for len in 1..=episode.len() {
        let view: EpisodeView<'_> = episode.prefix(len);
        let mut best: Option<&Goal> = None;
        for g in &candidates {
            if best.is_some_and(|b| b.size() >= g.size()) {
                continue;
            }
            if assessor.assess(g, &view)? {
                best = Some(g);
            }
        }
        if let Some(b) = best {
            if b.size() > best_size {
                best_size = b.size();
                pairs.push(SegmentPair {
                    segment: episode.truncated(len),
                    subgoal: b.clone(),
                });
            }
        }
    }
    Ok(pairs)
}

/// Wraps an assessor and counts its invocations.
pub struct CountingAssessor<A> {
    inner: A,
    calls: Cell<usize>,
}

impl<A> CountingAssessor<A> {
    pub fn new(inner: A) -> Self {
        Self {
            inner,
            calls: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn reset(&self) {
        self.calls.set(0);
    }
}

impl<A: Assess> Assess for CountingAssessor<A> {
    fn assess(&self, goal: &Goal, prefix: &EpisodeView<'_>) -> Result<bool> {
        self.calls.set(self.calls.get() + 1);
        self.inner.assess(goal, prefix)
    }
}
