use std::fs::File;
use std::io::BufWriter;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::MetricsRow;
use crate::domain::{Assessor, DialogueEpisode, Transition};
use crate::error::{Error, Result};
use crate::her::{stitch_her, trim_her, write_jsonl, StitchStats, TailPool};
use crate::learner::{
    act_epsilon_greedy, loss_and_gradient, sgd_step, sync_target, td_target, warm_start, QNetwork,
    TargetNetwork,
};
use crate::replay::ExperiencePool;
use crate::simulator::DialogueEnv;

/// Runs every configured seed (concurrently) and returns the metrics rows
/// ordered by run then epoch. The output depends only on the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let env = config.build_env()?;
    let runs: Vec<Result<Vec<MetricsRow>>> = (0..config.n_runs)
        .into_par_iter()
        .map(|run| run_single(config, &env, run))
        .collect();
    let mut rows = Vec::new();
    for r in runs {
        rows.extend(r?);
    }
    Ok(rows)
}

struct Learner<'a> {
    config: &'a ExperimentConfig,
    net: QNetwork,
    target: TargetNetwork,
    pool: ExperiencePool<Transition>,
}

impl Learner<'_> {
    fn push_episode(&mut self, ep: &DialogueEpisode) {
        for t in ep.transitions() {
            self.pool.push(t.clone(), None);
        }
    }

    fn gradient_step(&mut self, beta: f64, rng: &mut ChaCha8Rng) -> Result<()> {
        let cfg = &self.config.train;
        if self.pool.len() < cfg.batch_size {
            return Ok(());
        }
        let batch = self.pool.sample(cfg.batch_size, beta, rng)?;
        let mut states = Vec::with_capacity(batch.len());
        let mut actions = Vec::with_capacity(batch.len());
        let mut targets = Vec::with_capacity(batch.len());
        let mut weights = Vec::with_capacity(batch.len());
        let mut indices = Vec::with_capacity(batch.len());
        for s in &batch {
            states.push(s.item.state.encode());
            actions.push(s.item.action);
            targets.push(td_target(s.item, &self.target.net, cfg.gamma)?);
            weights.push(s.weight);
            indices.push(s.index);
        }
        let lg = loss_and_gradient(&self.net, &states, &actions, &targets, &weights)?;
        sgd_step(&mut self.net, &lg.grad, cfg.learning_rate, cfg.grad_clip)?;
        self.pool.update_priorities(&indices, &lg.td_errors)
    }
}

fn dump(config: &ExperimentConfig, name: String, episodes: &[DialogueEpisode]) -> Result<()> {
    if let Some(dir) = &config.dump_dir {
        std::fs::create_dir_all(dir)?;
        let f = File::options().create(true).append(true).open(dir.join(name))?;
        write_jsonl(episodes, BufWriter::new(f))?;
    }
    Ok(())
}

/// Fraction of `n` greedy dialogues that succeed.
pub fn greedy_success(env: &DialogueEnv, net: &QNetwork, n: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut wins = 0;
    for _ in 0..n {
        let mut err = None;
        let ep = env.rollout(rng, |s, r| {
            act_epsilon_greedy(net, &s.encode(), 0.0, r).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0
            })
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        wins += ep.is_success() as usize;
    }
    Ok(wins as f64 / n.max(1) as f64)
}

fn run_single(config: &ExperimentConfig, env: &DialogueEnv, run: usize) -> Result<Vec<MetricsRow>> {
    let seed = config.seed(run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = QNetwork::new(env.state_dim(), config.train.hidden, &mut rng);
    warm_start(&mut net, env, config.warm_start_episodes, &config.warm, &mut rng)?;
    let mut learner = Learner {
        config,
        target: TargetNetwork::new(&net, config.train.target_sync_period),
        net,
        pool: ExperiencePool::new(config.pool_capacity, config.strategy.sampling(), config.per.clone())?,
    };
    let assessor: Assessor = env.assessor();
    let mut tails = TailPool::new(config.her.tail_pool_capacity)?;
    let (mut ther, mut stitches) = (0usize, StitchStats::default());
    let mut rows = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let epsilon = config.train.epsilon(epoch, config.epochs);
        let progress = epoch as f64 / (config.epochs.max(2) - 1) as f64;
        let beta = config.per.importance_exponent(progress);
        let (mut wins, mut reward, mut turns) = (0usize, 0.0, 0usize);
        for _ in 0..config.episodes_per_epoch {
            let mut err = None;
            let net = &learner.net;
            let ep = env.rollout(&mut rng, |s, r| {
                act_epsilon_greedy(net, &s.encode(), epsilon, r).unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    0
                })
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            wins += ep.is_success() as usize;
            reward += ep.cumulative_reward;
            turns += ep.len();
            learner.push_episode(&ep);
            if config.strategy.trimming() && !ep.is_success() {
                let generated = trim_her(&ep, &ep.goal, &assessor, &config.her)?;
                for g in &generated {
                    learner.push_episode(g);
                }
                ther += generated.len();
                dump(config, format!("ther_run{run}.jsonl"), &generated)?;
            }
            if config.strategy.stitching() {
                let (generated, stats) = stitch_her(&ep, &ep.goal, &mut tails, &assessor, &config.her)?;
                let episodes: Vec<DialogueEpisode> = generated.into_iter().map(|s| s.episode).collect();
                for g in &episodes {
                    learner.push_episode(g);
                }
                stitches.absorb(stats);
                dump(config, format!("sher_run{run}.jsonl"), &episodes)?;
            }
            for _ in 0..ep.len() * config.train.steps_per_turn {
                learner.gradient_step(beta, &mut rng)?;
            }
        }
        if (epoch + 1) % config.train.target_sync_period == 0 {
            sync_target(&mut learner.target, &learner.net)?;
        }
        let greedy_success_rate = if config.eval_episodes > 0 {
            let mut eval_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            eval_rng.set_stream(epoch as u64 + 1);
            Some(greedy_success(env, &learner.net, config.eval_episodes, &mut eval_rng)?)
        } else {
            None
        };
        let n = config.episodes_per_epoch as f64;
        let row = MetricsRow {
            run,
            seed,
            epoch,
            success_rate: wins as f64 / n,
            mean_reward: reward / n,
            mean_turns: turns as f64 / n,
            pool_size: learner.pool.len(),
            generated_ther: ther,
            generated_sher: stitches.generated(),
            discarded_stitches: stitches.discarded,
            epsilon,
            greedy_success_rate,
        };
        if !(0.0..=1.0).contains(&row.success_rate) {
            return Err(Error::Training(format!("success rate {} out of range", row.success_rate)));
        }
        rows.push(row);
    }
    Ok(rows)
}
