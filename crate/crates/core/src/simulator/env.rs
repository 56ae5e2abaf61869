use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::goals::{sample_goal, GoalConfig};
use super::kb::KnowledgeBase;
use super::user::{user_step, UserAgenda};
use crate::domain::{
    belief, ActType, Assessor, BeliefStatus, DialogueAct, DialogueEpisode, DialogueState, Goal,
    Outcome, SlotId, SlotSchema, StateRef, Transition, Turn, ValueId,
};
use crate::error::{Error, Result};

/// Reward structure and simulated-understanding parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub success_bonus: f64,
    pub failure_penalty: f64,
    pub per_turn_cost: f64,
    pub max_turns: usize,
    /// Probability that a user inform is confused with another value.
    pub belief_noise: f64,
    /// Range of the mass a confused inform puts on the wrong value.
    pub confusion_min: f64,
    pub confusion_max: f64,
    pub smoothing_floor: f64,
    /// Consecutive unproductive turns the user tolerates.
    pub patience: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            success_bonus: 80.0,
            failure_penalty: -40.0,
            per_turn_cost: -1.0,
            max_turns: 40,
            belief_noise: 0.2,
            confusion_min: 0.2,
            confusion_max: 0.8,
            smoothing_floor: 0.05,
            patience: 4,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self, schema: &SlotSchema) -> Result<()> {
        if !(self.success_bonus > 0.0 && self.failure_penalty < 0.0) {
            return Err(Error::Config("need success_bonus > 0 > failure_penalty".into()));
        }
        if self.max_turns == 0 {
            return Err(Error::Config("max_turns must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.belief_noise) {
            return Err(Error::Config("belief_noise must lie in [0, 0.5)".into()));
        }
        if !(0.0 < self.confusion_min && self.confusion_min <= self.confusion_max && self.confusion_max < 1.0) {
            return Err(Error::Config("need 0 < confusion_min <= confusion_max < 1".into()));
        }
        let widest = schema.largest_belief_len() as f64;
        if !(self.smoothing_floor > 0.0
            && self.smoothing_floor < 1.0 / schema.largest_domain() as f64
            && self.smoothing_floor * widest < 1.0)
        {
            return Err(Error::Config(format!(
                "smoothing_floor must lie in (0, 1/{})",
                schema.largest_belief_len()
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        Ok(())
    }
}

/// Simulated movie-booking environment: knowledge base, user simulator and
/// the system's belief tracker.
#[derive(Debug, Clone)]
pub struct DialogueEnv {
    schema: Arc<SlotSchema>,
    kb: Arc<KnowledgeBase>,
    config: EnvConfig,
    goals: GoalConfig,
}

impl DialogueEnv {
    pub fn new(
        schema: Arc<SlotSchema>,
        kb: Arc<KnowledgeBase>,
        config: EnvConfig,
        goals: GoalConfig,
    ) -> Result<Self> {
        config.validate(&schema)?;
        goals.validate(&schema)?;
        Ok(Self {
            schema,
            kb,
            config,
            goals,
        })
    }

    pub fn schema(&self) -> &Arc<SlotSchema> {
        &self.schema
    }

    pub fn kb(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn goal_config(&self) -> &GoalConfig {
        &self.goals
    }

    pub fn state_dim(&self) -> usize {
        DialogueState::encoded_len(&self.schema, self.config.max_turns)
    }

    pub fn assessor(&self) -> Assessor {
        Assessor::new(self.schema.clone(), self.kb.clone(), self.config.smoothing_floor)
    }

    pub fn sample_goal<R: Rng + ?Sized>(&self, rng: &mut R) -> Goal {
        sample_goal(&self.schema, &self.kb, &self.goals, rng)
    }

    /// Opens a dialogue for `goal`.
    pub fn start<R: Rng + ?Sized>(&self, goal: Goal, rng: &mut R) -> Result<Session<'_>> {
        goal.validate(&self.schema)?;
        let (agenda, opening) =
            UserAgenda::open(goal.clone(), self.config.patience, self.goals.opening_informs, rng);
        let floor = self.config.smoothing_floor;
        let mut beliefs: Vec<Vec<f64>> = self
            .schema
            .slots()
            .map(|s| belief::unknown(self.schema.belief_len(s), floor))
            .collect();
        for s in self.schema.slots() {
            if !self.schema.is_informable(s) && !opening.payload.contains_key(&s) {
                beliefs[s.0] = belief::dont_care(self.schema.belief_len(s), floor);
            }
        }
        let mut session = Session {
            env: self,
            agenda,
            beliefs,
            episode: None,
            current: None,
        };
        session.observe_user(&opening, rng);
        let state = Arc::new(session.build_state(None, &opening, 0));
        session.episode = Some(DialogueEpisode::new(goal, opening, state.clone()));
        session.current = Some(state);
        Ok(session)
    }

    /// Runs a whole dialogue for a fresh goal under `policy`.
    pub fn rollout<R, P>(&self, rng: &mut R, mut policy: P) -> Result<DialogueEpisode>
    where
        R: Rng + ?Sized,
        P: FnMut(&DialogueState, &mut R) -> usize,
    {
        let goal = self.sample_goal(rng);
        let mut session = self.start(goal, rng)?;
        while !session.is_done() {
            let action = policy(session.state(), rng);
            session.step(action, rng)?;
        }
        Ok(session.finish())
    }

    /// Informable slots the belief state treats as identified.
    pub fn identified(&self, beliefs: &[Vec<f64>]) -> BTreeMap<SlotId, ValueId> {
        identified(&self.schema, beliefs, self.config.smoothing_floor)
    }
}

pub(crate) fn identified(
    schema: &SlotSchema,
    beliefs: &[Vec<f64>],
    floor: f64,
) -> BTreeMap<SlotId, ValueId> {
    schema
        .informable_slots()
        .filter_map(|s| belief::status(&beliefs[s.0], floor).value().map(|v| (s, v)))
        .collect()
}

/// One running dialogue.
pub struct Session<'e> {
    env: &'e DialogueEnv,
    agenda: UserAgenda,
    beliefs: Vec<Vec<f64>>,
    episode: Option<DialogueEpisode>,
    current: Option<StateRef>,
}

impl<'e> Session<'e> {
    pub fn state(&self) -> &StateRef {
        self.current.as_ref().expect("session initialised")
    }

    pub fn agenda(&self) -> &UserAgenda {
        &self.agenda
    }

    pub fn episode(&self) -> &DialogueEpisode {
        self.episode.as_ref().expect("session initialised")
    }

    pub fn is_done(&self) -> bool {
        self.episode().outcome != Outcome::Ongoing
    }

    pub fn finish(self) -> DialogueEpisode {
        self.episode.expect("session initialised")
    }

    /// Turns a system intent into a concrete act using the belief state and
    /// the knowledge base.
    pub fn realize(&self, act_type: ActType) -> DialogueAct {
        realize(
            &self.env.schema,
            &self.env.kb,
            &self.beliefs,
            self.env.config.smoothing_floor,
            act_type,
        )
    }

    /// Executes one system action: the user replies, beliefs are updated and
    /// the rewarded transition is recorded.
    pub fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::InvalidOperation("dialogue already finished".into()));
        }
        let act_type = ActType::from_index(action)?;
        let cfg = &self.env.config;
        let system_act = self.realize(act_type);
        let (mut user_act, agenda) =
            user_step(&self.agenda, &system_act, &self.env.schema, &self.env.kb)?;
        self.agenda = agenda;
        self.observe_system(&system_act);
        self.observe_user(&user_act, rng);

        let turn = self.episode().len() + 1;
        let success = self.goal_complete();
        let failure = !success && (self.agenda.abandoned || turn >= cfg.max_turns);
        if success {
            user_act = DialogueAct::user(ActType::Thanks);
        }
        let mut reward = cfg.per_turn_cost;
        if success {
            reward += cfg.success_bonus;
        }
        if failure {
            reward += cfg.failure_penalty;
        }

        let next_state = Arc::new(self.build_state(Some(&system_act), &user_act, turn));
        let transition = Transition {
            state: self.state().clone(),
            action,
            reward,
            next_state: next_state.clone(),
            terminal: success || failure,
        };
        let episode = self.episode.as_mut().expect("session initialised");
        episode.push(Turn {
            transition: transition.clone(),
            system_act,
            user_act,
        });
        if success {
            episode.outcome = Outcome::Success;
        } else if failure {
            episode.outcome = Outcome::Failure;
        }
        self.current = Some(next_state);
        Ok(transition)
    }

    fn goal_complete(&self) -> bool {
        let floor = self.env.config.smoothing_floor;
        self.agenda.is_satisfied()
            && self
                .agenda
                .goal
                .constraints()
                .iter()
                .all(|(s, v)| belief::status(&self.beliefs[s.0], floor).value() == Some(*v))
    }

    fn observe_system(&mut self, act: &DialogueAct) {
        let floor = self.env.config.smoothing_floor;
        let schema = &self.env.schema;
        match act.act_type {
            ActType::Inform => {
                for (&s, v) in &act.payload {
                    if let Some(v) = v {
                        self.beliefs[s.0] = belief::point(schema.belief_len(s), *v, floor);
                    }
                }
            }
            ActType::Book => {
                if let Some(b) = schema.booking_slot() {
                    if let Some(Some(v)) = act.value_of(b) {
                        self.beliefs[b.0] = belief::point(schema.belief_len(b), v, floor);
                    }
                }
            }
            _ => {}
        }
    }

    fn observe_user<R: Rng + ?Sized>(&mut self, act: &DialogueAct, rng: &mut R) {
        let floor = self.env.config.smoothing_floor;
        let noise = self.env.config.belief_noise;
        let schema = &self.env.schema;
        for (&s, v) in &act.payload {
            if !schema.is_informable(s) {
                continue;
            }
            let len = schema.belief_len(s);
            let d = schema.domain_len(s);
            match (act.act_type, v) {
                (ActType::Inform | ActType::Request, Some(v)) => {
                    self.beliefs[s.0] = if d > 1 && rng.gen_bool(noise) {
                        let mut w = rng.gen_range(0..d - 1);
                        if w >= *v {
                            w += 1;
                        }
                        let cfg = &self.env.config;
                        let mass = if cfg.confusion_min < cfg.confusion_max {
                            rng.gen_range(cfg.confusion_min..cfg.confusion_max)
                        } else {
                            cfg.confusion_min
                        };
                        belief::confused(len, *v, w, mass, floor)
                    } else {
                        belief::point(len, *v, floor)
                    };
                }
                (ActType::ConfirmAnswer | ActType::Deny, Some(v)) => {
                    self.beliefs[s.0] = belief::point(len, *v, floor);
                }
                (ActType::NotSure, None) => {
                    self.beliefs[s.0] = belief::dont_care(len, floor);
                }
                _ => {}
            }
        }
    }

    fn build_state(&self, system_act: Option<&DialogueAct>, user_act: &DialogueAct, turn: usize) -> DialogueState {
        let n = self.env.schema.len();
        let mentioned = |act: Option<&DialogueAct>| {
            let mut v = vec![false; n];
            if let Some(a) = act {
                for s in a.payload.keys() {
                    v[s.0] = true;
                }
            }
            v
        };
        let known = self.env.identified(&self.beliefs);
        DialogueState {
            user_act: Some(user_act.act_type),
            user_slots: mentioned(Some(user_act)),
            sys_act: system_act.map(|a| a.act_type),
            sys_slots: mentioned(system_act),
            beliefs: self.beliefs.clone(),
            turn,
            max_turns: self.env.config.max_turns,
            kb_count: self.env.kb.matching(known.iter()).len(),
            kb_rows: self.env.kb.len(),
        }
    }
}

/// System natural-language-free realisation of an intent.
///
/// * `request` asks for the first informable slot still unknown;
/// * `multiple_choice` proposes that slot's value from the best matching row;
/// * `confirm_question` checks the least certain identified constraint;
/// * `inform` answers the first requested slot still unanswered from the
///   first row matching the identified constraints;
/// * `book` books that row, naming its constraint values and the booking slot.
pub fn realize(
    schema: &SlotSchema,
    kb: &KnowledgeBase,
    beliefs: &[Vec<f64>],
    floor: f64,
    act_type: ActType,
) -> DialogueAct {
    let status = |s: SlotId| belief::status(&beliefs[s.0], floor);
    let known = identified(schema, beliefs, floor);
    let best_row = || kb.first_match(known.iter());
    let first_unknown_informable = || {
        schema
            .informable_slots()
            .find(|&s| status(s) == BeliefStatus::Unknown)
    };
    let mut act = DialogueAct::system(act_type);
    match act_type {
        ActType::Request => {
            if let Some(s) = first_unknown_informable() {
                act.payload.insert(s, None);
            }
        }
        ActType::MultipleChoice => {
            if let Some(s) = first_unknown_informable() {
                act.payload.insert(s, best_row().map(|r| kb.row(r)[s.0]));
            }
        }
        ActType::ConfirmQuestion => {
            let target = schema
                .informable_slots()
                .filter_map(|s| match status(s) {
                    BeliefStatus::Value { value, confidence } => Some((s, value, confidence)),
                    _ => None,
                })
                .fold(None, |best: Option<(SlotId, ValueId, f64)>, cand| match best {
                    Some(b) if b.2 <= cand.2 => Some(b),
                    _ => Some(cand),
                });
            if let Some((s, v, _)) = target {
                act.payload.insert(s, Some(v));
            }
        }
        ActType::Inform => {
            let target = schema.requestable_slots().find(|&s| {
                Some(s) != schema.booking_slot() && status(s) == BeliefStatus::Unknown
            });
            if let Some(r) = target {
                act.payload.insert(r, best_row().map(|row| kb.row(row)[r.0]));
            }
        }
        ActType::Book => {
            if let Some(b) = schema.booking_slot() {
                match best_row() {
                    Some(row) => {
                        for s in schema.informable_slots() {
                            act.payload.insert(s, Some(kb.row(row)[s.0]));
                        }
                        act.payload.insert(b, Some(kb.row(row)[b.0]));
                    }
                    None => {
                        act.payload.insert(b, None);
                    }
                }
            }
        }
        _ => {}
    }
    act
}
