//! Probabilistic curriculum learning for goal-conditioned reinforcement
//! learning.
//!
//! A mixture density network models the distribution of future goal-space
//! states reachable from a state-action pair. At the start of each episode the
//! curriculum samples candidate goals, scores them by their density under the
//! current model, keeps the candidates whose density falls inside a quantile
//! band, and picks the training goal with a selection strategy. The band can
//! adapt to the agent's recent success rate.
//!
//! Module map:
//!
//! - [`nn`]: dense networks with batchnorm, dropout and first-order optimisers
//! - [`gmm`]: diagonal Gaussian mixture maths, including box probabilities
//! - [`mdn`]: the mixture density network and its composite loss
//! - [`goal_space`]: state-to-goal projection, sparse reward, relabelling
//! - [`curriculum`]: candidate proposal, quantile filtering, selection
//! - [`env`]: DC-motor and point-maze environments
//! - [`agent`]: soft actor-critic and a scripted controller
//! - [`harness`]: replay, training loop, evaluation, config, logs, exports
//! - [`par`]: rayon-backed helpers with a sequential fallback

pub mod agent;
pub mod curriculum;
pub mod env;
pub mod error;
pub mod gmm;
pub mod goal_space;
pub mod harness;
pub mod mdn;
pub mod nn;
pub mod par;

pub use error::{Error, Result};
