//! Success-driven adjustment of the quantile band.
//!
//! Each finished episode pushes its outcome into a short memory. The success
//! rate `sr`, the trailing streak `s` of equal outcomes and the correction
//! factor `cf = (1 − |sr − sr_target|)·α^s` then move both quantiles down on
//! success and up on failure by `λ·cf`, clamped to their ranges.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half the gap enforced between the quantiles when an update crosses them.
pub const MIN_HALF_GAP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub memory_size: usize,
    pub sr_target: f64,
    pub alpha: f64,
    pub learning_rate: f64,
    pub lower_min: f64,
    pub lower_max: f64,
    pub upper_min: f64,
    pub upper_max: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            memory_size: 10,
            sr_target: 0.5,
            alpha: 0.9,
            learning_rate: 0.05,
            lower_min: 0.0,
            lower_max: 0.9,
            upper_min: 0.1,
            upper_max: 1.0,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory_size == 0 {
            return Err(Error::Config("adaptive memory_size must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.sr_target) {
            return Err(Error::Config("sr_target must lie in [0, 1]".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("adaptive alpha must lie in (0, 1]".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("quantile learning rate must be ≥ 0".into()));
        }
        for (name, lo, hi) in [
            ("lower", self.lower_min, self.lower_max),
            ("upper", self.upper_min, self.upper_max),
        ] {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::Config(format!(
                    "{name} quantile range must satisfy 0 ≤ min < max ≤ 1"
                )));
            }
        }
        if self.lower_min >= self.upper_max {
            return Err(Error::Config("lower_min must be below upper_max".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileState {
    pub lower: f64,
    pub upper: f64,
    memory: VecDeque<u8>,
    capacity: usize,
}

impl QuantileState {
    pub fn new(lower: f64, upper: f64, capacity: usize) -> Self {
        Self {
            lower,
            upper,
            memory: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn memory(&self) -> impl Iterator<Item = u8> + '_ {
        self.memory.iter().copied()
    }

    pub fn push(&mut self, reached: bool) {
        if self.memory.len() == self.capacity {
            self.memory.pop_front();
        }
        self.memory.push_back(u8::from(reached));
    }

    /// Mean over the outcomes currently held (0 when empty).
    pub fn success_rate(&self) -> f64 {
        success_rate(self.memory.iter().copied())
    }

    pub fn streak(&self) -> usize {
        streak(self.memory.iter().copied())
    }

    /// Records an outcome and moves the band.
    pub fn update(&mut self, cfg: &AdaptiveConfig, reached: bool) {
        self.push(reached);
        let cf = correction_factor(self.success_rate(), cfg.sr_target, cfg.alpha, self.streak());
        let step = cfg.learning_rate * cf;
        let delta = if reached { -step } else { step };
        self.lower = (self.lower + delta).clamp(cfg.lower_min, cfg.lower_max);
        self.upper = (self.upper + delta).clamp(cfg.upper_min, cfg.upper_max);
        if self.lower >= self.upper {
            let mid = 0.5 * (self.lower + self.upper);
            self.lower = (mid - MIN_HALF_GAP).clamp(cfg.lower_min, cfg.lower_max);
            self.upper = (mid + MIN_HALF_GAP).clamp(cfg.upper_min, cfg.upper_max);
            if self.lower >= self.upper {
                self.lower = cfg.lower_min;
                self.upper = cfg.upper_max;
            }
        }
    }
}

pub fn success_rate(memory: impl Iterator<Item = u8>) -> f64 {
    let (sum, n) = memory.fold((0u32, 0u32), |(s, n), a| (s + u32::from(a), n + 1));
    if n == 0 {
        0.0
    } else {
        f64::from(sum) / f64::from(n)
    }
}

/// Length of the trailing run of equal outcomes.
pub fn streak(memory: impl DoubleEndedIterator<Item = u8>) -> usize {
    let mut it = memory.rev();
    let Some(last) = it.next() else {
        return 0;
    };
    1 + it.take_while(|&a| a == last).count()
}

pub fn correction_factor(sr: f64, sr_target: f64, alpha: f64, streak: usize) -> f64 {
    (1.0 - (sr - sr_target).abs()) * alpha.powi(streak as i32)
}
