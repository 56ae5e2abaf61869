use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{argmax, QNetwork};
use super::sgd_step;
use crate::domain::NUM_ACTIONS;
use crate::error::{Error, Result};
use crate::simulator::policy::rule_action;
use crate::simulator::DialogueEnv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarmStartConfig {
    pub target_accuracy: f64,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub holdout_fraction: f64,
}

impl Default for WarmStartConfig {
    fn default() -> Self {
        Self {
            target_accuracy: 0.8,
            max_epochs: 60,
            learning_rate: 0.05,
            batch_size: 32,
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarmStartReport {
    pub episodes: usize,
    pub rule_successes: usize,
    pub samples: usize,
    pub epochs: usize,
    pub holdout_accuracy: f64,
}

/// Behaviour cloning of the rule policy: roll it out for `n_episodes`, then
/// fit the network outputs as logits with cross-entropy until the held-out
/// accuracy reaches the target or the epoch cap. `n_episodes == 0` leaves
/// the network untouched.
pub fn warm_start<R: Rng + ?Sized>(
    net: &mut QNetwork,
    env: &DialogueEnv,
    n_episodes: usize,
    config: &WarmStartConfig,
    rng: &mut R,
) -> Result<WarmStartReport> {
    let mut report = WarmStartReport {
        episodes: n_episodes,
        ..Default::default()
    };
    if n_episodes == 0 {
        return Ok(report);
    }
    let schema = env.schema().clone();
    let floor = env.config().smoothing_floor;
    let mut data: Vec<(Vec<f64>, usize)> = Vec::new();
    for _ in 0..n_episodes {
        let ep = env.rollout(rng, |s, _| rule_action(s, &schema, floor, false).index())?;
        report.rule_successes += ep.is_success() as usize;
        data.extend(ep.transitions().map(|t| (t.state.encode(), t.action)));
    }
    if report.rule_successes == 0 {
        return Err(Error::Config(
            "the rule policy never succeeded; nothing sensible to clone".into(),
        ));
    }
    report.samples = data.len();
    let (epochs, accuracy) = clone_policy(net, data, config, rng)?;
    report.epochs = epochs;
    report.holdout_accuracy = accuracy;
    Ok(report)
}

/// Fits the network outputs, read as logits, to the recorded actions with
/// cross-entropy. Returns the epochs run and the final held-out accuracy
/// (measured on the training data when the corpus is too small to split).
pub fn clone_policy<R: Rng + ?Sized>(
    net: &mut QNetwork,
    mut data: Vec<(Vec<f64>, usize)>,
    config: &WarmStartConfig,
    rng: &mut R,
) -> Result<(usize, f64)> {
    if data.is_empty() {
        return Err(Error::InvalidInput("no cloning data".into()));
    }
    for (x, a) in &data {
        if x.len() != net.input_dim() || *a >= NUM_ACTIONS {
            return Err(Error::InvalidInput("cloning sample does not fit the network".into()));
        }
    }
    data.shuffle(rng);
    let held = ((data.len() as f64 * config.holdout_fraction) as usize).min(data.len() - 1);
    let (holdout, train) = data.split_at(held);
    let holdout = if holdout.is_empty() { train } else { holdout };
    let accuracy = |net: &QNetwork| -> Result<f64> {
        let mut hits = 0;
        for (x, a) in holdout {
            hits += (argmax(&net.forward(x)?) == *a) as usize;
        }
        Ok(hits as f64 / holdout.len() as f64)
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = 0;
    let mut acc = accuracy(net)?;
    while epochs < config.max_epochs && acc < config.target_accuracy {
        order.shuffle(rng);
        for chunk in order.chunks(config.batch_size.max(1)) {
            let mut grad = vec![0.0; net.params().len()];
            for &i in chunk {
                let (x, a) = &train[i];
                let cache = net.forward_cached(x)?;
                let mut dq = softmax(&cache.q);
                dq[*a] -= 1.0;
                for g in &mut dq {
                    *g /= chunk.len() as f64;
                }
                net.backward(x, &cache, &dq, &mut grad);
            }
            sgd_step(net, &grad, config.learning_rate, 10.0)?;
        }
        epochs += 1;
        acc = accuracy(net)?;
    }
    Ok((epochs, acc))
}

fn softmax(q: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; NUM_ACTIONS];
    let mut z = 0.0;
    for (pi, &qi) in p.iter_mut().zip(q) {
        *pi = (qi - m).exp();
        z += *pi;
    }
    for pi in &mut p {
        *pi /= z;
    }
    p
}
