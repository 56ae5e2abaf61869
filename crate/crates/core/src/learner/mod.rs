//! Action-value learning: the Q-network, temporal-difference loss, target
//! network, exploration and behaviour-cloning warm start.

mod network;
mod warm;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Transition, NUM_ACTIONS};
use crate::error::{Error, Result};

pub use network::{argmax, ForwardCache, QNetwork};
pub use warm::{clone_policy, warm_start, WarmStartConfig, WarmStartReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub hidden: usize,
    pub grad_clip: f64,
    /// Epochs between target-network copies.
    pub target_sync_period: usize,
    /// Gradient steps per dialogue turn collected from the user.
    pub steps_per_turn: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            learning_rate: 1e-3,
            batch_size: 16,
            epsilon_start: 0.3,
            epsilon_end: 0.01,
            hidden: 80,
            grad_clip: 10.0,
            target_sync_period: 1,
            steps_per_turn: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("gamma must lie in [0, 1]".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.grad_clip.is_nan() || self.grad_clip <= 0.0 {
            return Err(Error::Config("learning_rate and grad_clip must be positive".into()));
        }
        if self.batch_size == 0 || self.hidden == 0 || self.target_sync_period == 0 {
            return Err(Error::Config("batch_size, hidden and target_sync_period must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_end)
            || self.epsilon_end > self.epsilon_start
        {
            return Err(Error::Config("need 0 <= epsilon_end <= epsilon_start <= 1".into()));
        }
        Ok(())
    }

    /// Exploration rate for `epoch` of `epochs`: linear decay over the first
    /// half of training, constant afterwards.
    pub fn epsilon(&self, epoch: usize, epochs: usize) -> f64 {
        let half = (epochs as f64 / 2.0).max(1.0);
        let t = (epoch as f64 / half).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// Frozen copy of the behaviour network used for bootstrapped targets.
#[derive(Debug, Clone)]
pub struct TargetNetwork {
    pub net: QNetwork,
    pub sync_period: usize,
}

impl TargetNetwork {
    pub fn new(net: &QNetwork, sync_period: usize) -> Self {
        Self {
            net: net.clone(),
            sync_period,
        }
    }
}

pub fn sync_target(target: &mut TargetNetwork, net: &QNetwork) -> Result<()> {
    target.net.copy_from(net)
}

/// `y = r` for terminal transitions, `r + γ max_a' Q⁻(s', a')` otherwise.
pub fn td_target(transition: &Transition, target: &QNetwork, gamma: f64) -> Result<f64> {
    if transition.terminal {
        return Ok(transition.reward);
    }
    let q = target.forward(&transition.next_state.encode())?;
    Ok(transition.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// `y - Q(s, a)` per batch item.
    pub td_errors: Vec<f64>,
}

/// Importance-weighted mean squared TD error and its gradient; targets are
/// treated as constants.
pub fn loss_and_gradient(
    net: &QNetwork,
    states: &[Vec<f64>],
    actions: &[usize],
    targets: &[f64],
    weights: &[f64],
) -> Result<LossGrad> {
    let n = states.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if actions.len() != n || targets.len() != n || weights.len() != n {
        return Err(Error::InvalidInput("batch components differ in length".into()));
    }
    let mut grad = vec![0.0; net.params().len()];
    let mut loss = 0.0;
    let mut td_errors = Vec::with_capacity(n);
    for i in 0..n {
        let a = actions[i];
        if a >= NUM_ACTIONS {
            return Err(Error::InvalidInput(format!("action {a} out of range")));
        }
        let cache = net.forward_cached(&states[i])?;
        let diff = cache.q[a] - targets[i];
        loss += weights[i] * diff * diff;
        td_errors.push(-diff);
        let mut dq = [0.0; NUM_ACTIONS];
        dq[a] = 2.0 * weights[i] * diff / n as f64;
        net.backward(&states[i], &cache, &dq, &mut grad);
    }
    loss /= n as f64;
    if !loss.is_finite() {
        let worst = targets.iter().copied().fold(0.0f64, |m, y| m.max(y.abs()));
        return Err(Error::Training(format!(
            "non-finite loss over batch of {n} (largest |target| {worst})"
        )));
    }
    Ok(LossGrad { loss, grad, td_errors })
}

/// Plain gradient step with the gradient norm clipped to `clip`.
pub fn sgd_step(net: &mut QNetwork, grad: &[f64], learning_rate: f64, clip: f64) -> Result<()> {
    if grad.len() != net.params().len() {
        return Err(Error::InvalidInput("gradient shape differs from parameters".into()));
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (p, g) in net.params_mut().iter_mut().zip(grad) {
        *p -= learning_rate * scale * g;
    }
    Ok(())
}

/// Random action with probability `epsilon`, greedy otherwise.
pub fn act_epsilon_greedy<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..NUM_ACTIONS));
    }
    Ok(argmax(&net.forward(state)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DialogueState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn state() -> Arc<DialogueState> {
        Arc::new(DialogueState {
            user_act: None,
            user_slots: vec![false],
            sys_act: None,
            sys_slots: vec![false],
            beliefs: vec![vec![0.5, 0.5]],
            turn: 0,
            max_turns: 2,
            kb_count: 0,
            kb_rows: 1,
        })
    }

    /// Network whose outputs are all `v`, whatever the input.
    fn constant(input: usize, v: f64) -> QNetwork {
        let mut net = QNetwork::zeros(input, 3);
        let n = net.params().len();
        for p in &mut net.params_mut()[n - NUM_ACTIONS..] {
            *p = v;
        }
        net
    }

    #[test]
    fn td_targets() {
        let s = state();
        let dim = s.encoded_dim();
        let t = Transition {
            state: s.clone(),
            action: 0,
            reward: 79.0,
            next_state: s.clone(),
            terminal: true,
        };
        assert_eq!(td_target(&t, &constant(dim, 1e6), 0.9).unwrap(), 79.0);
        let t = Transition {
            reward: -1.0,
            terminal: false,
            ..t
        };
        assert!((td_target(&t, &constant(dim, 2.0), 0.9).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(td_target(&t, &constant(dim, 2.0), 0.0).unwrap(), -1.0);
    }

    #[test]
    fn hand_loss() {
        let net = constant(2, 1.0);
        let lg = loss_and_gradient(&net, &[vec![0.3, 0.1]], &[4], &[0.8], &[1.0]).unwrap();
        assert!((lg.loss - 0.04).abs() < 1e-12);
        let zero = loss_and_gradient(&net, &[vec![0.3, 0.1]], &[4], &[1.0], &[1.0]).unwrap();
        assert_eq!(zero.loss, 0.0);
        assert!(zero.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.epsilon(0, 200), 0.3);
        assert!((cfg.epsilon(100, 200) - 0.01).abs() < 1e-12);
        assert!((cfg.epsilon(199, 200) - 0.01).abs() < 1e-12);
        let eps: Vec<f64> = (0..200).map(|e| cfg.epsilon(e, 200)).collect();
        assert!(eps.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn greedy_and_uniform_exploration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = constant(2, 0.0);
        let n = net.params().len();
        net.params_mut()[n - NUM_ACTIONS + 6] = 1.0;
        for _ in 0..100 {
            assert_eq!(act_epsilon_greedy(&net, &[0.0, 0.0], 0.0, &mut rng).unwrap(), 6);
        }
        let mut counts = [0usize; NUM_ACTIONS];
        for _ in 0..110_000 {
            counts[act_epsilon_greedy(&net, &[0.0, 0.0], 1.0, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 110_000.0 - 1.0 / 11.0).abs() < 0.005);
        }
    }

    #[test]
    fn sync_copies_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = QNetwork::new(4, 5, &mut rng);
        let b = QNetwork::new(4, 5, &mut rng);
        let mut target = TargetNetwork::new(&b, 1);
        assert_eq!(target.net, b);
        sync_target(&mut target, &a).unwrap();
        sync_target(&mut target, &a).unwrap();
        assert_eq!(target.net, a);
        let x = [0.1, -0.4, 2.0, 0.3];
        assert_eq!(target.net.forward(&x).unwrap(), a.forward(&x).unwrap());
        let mut wrong = TargetNetwork::new(&QNetwork::zeros(3, 5), 1);
        assert!(sync_target(&mut wrong, &a).is_err());
    }

    #[test]
    fn clipped_step() {
        let mut net = QNetwork::zeros(1, 1);
        let n = net.params().len();
        let mut g = vec![0.0; n];
        g[0] = 100.0;
        sgd_step(&mut net, &g, 1.0, 10.0).unwrap();
        assert!((net.params()[0] + 10.0).abs() < 1e-12);
    }
}
