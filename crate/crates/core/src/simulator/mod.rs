//! Synthetic movie knowledge base, agenda-style user simulator and the
//! environment loop.

mod env;
mod goals;
mod kb;
pub mod policy;
mod user;

pub use env::{realize, DialogueEnv, EnvConfig, Session};
pub use goals::{sample_goal, GoalConfig};
pub use kb::{generate_kb, KnowledgeBase};
pub use user::{user_step, UserAgenda};
