//! Hindsight experience replay for goal-oriented dialogue policy learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`domain`]: slot schemas, goals, dialogue acts, states, episodes and the
//!   assessment function deciding whether a dialogue accomplishes a (sub)goal.
//! - [`simulator`]: a synthetic movie knowledge base, an agenda-style simulated
//!   user and the environment loop producing rewarded transitions.
//! - [`segmentation`]: incremental identification of valid head segments,
//!   plus the exhaustive oracle it replaces.
//! - [`her`]: trimming-based and stitching-based hindsight replay.
//! - [`replay`]: a bounded experience pool with uniform or proportional
//!   prioritized sampling.
//! - [`learner`]: a small Q-network trained from scratch, with target network,
//!   epsilon-greedy control and behaviour-cloning warm start.
//! - [`harness`]: experiment runner, strategy comparison and CSV metrics.

pub mod domain;
pub mod error;
pub mod harness;
pub mod her;
pub mod learner;
pub mod replay;
pub mod segmentation;
pub mod simulator;

pub use error::{Error, Result};
