//! Trend and convergence statistics over sets of payoff trajectories.
//!
//! A decrease is measured on paired per-seed differences
//! `d_s = u_s(t + w) - u_s(t)` and expressed in standard errors of their mean.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::dbms_learning::Trajectory;
use crate::error::{Error, Result};

/// Fewest seeds a trend test accepts.
pub const MIN_TREND_SEEDS: usize = 30;

/// Payoff sequences `u_s(0..=T)` of several seeds, all of the same length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySet {
    seeds: Vec<u64>,
    payoffs: Vec<Vec<f64>>,
    pub fingerprint: String,
    pub user_update_times: Vec<u64>,
}

impl TrajectorySet {
    pub fn new(seeds: Vec<u64>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if seeds.len() != payoffs.len() {
            return Err(Error::Dimension {
                what: "trajectory set",
                expected: format!("{} sequences", seeds.len()),
                found: format!("{}", payoffs.len()),
            });
        }
        let len = payoffs.first().map_or(0, Vec::len);
        if len == 0 {
            return Err(Error::InvalidArgument(
                "a trajectory set needs at least one nonempty sequence".into(),
            ));
        }
        if let Some(k) = payoffs.iter().position(|p| p.len() != len) {
            return Err(Error::Dimension {
                what: "trajectory",
                expected: format!("{len} rounds"),
                found: format!("{} rounds for seed {}", payoffs[k].len(), seeds[k]),
            });
        }
        Ok(Self {
            seeds,
            payoffs,
            fingerprint: String::new(),
            user_update_times: Vec::new(),
        })
    }

    pub fn from_trajectories(trajectories: &[Trajectory]) -> Result<Self> {
        Self::new(
            trajectories.iter().map(|t| t.seed_index).collect(),
            trajectories.iter().map(|t| t.payoffs.clone()).collect(),
        )
    }

    pub fn with_metadata(mut self, fingerprint: String, user_update_times: Vec<u64>) -> Self {
        self.fingerprint = fingerprint;
        self.user_update_times = user_update_times;
        self
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn payoffs(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    pub fn num_seeds(&self) -> usize {
        self.payoffs.len()
    }

    /// Number of recorded points per seed, `T + 1`.
    pub fn len(&self) -> usize {
        self.payoffs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Seed mean `ū(t)` for every `t`.
    pub fn mean_curve(&self) -> Vec<f64> {
        (0..self.len())
            .map(|t| mean_se(self.payoffs.iter().map(|p| p[t])).0)
            .collect()
    }

    /// Standard error of `ū(t)` for every `t`.
    pub fn standard_error_curve(&self) -> Vec<f64> {
        (0..self.len())
            .map(|t| mean_se(self.payoffs.iter().map(|p| p[t])).1)
            .collect()
    }
}

/// Mean and standard error of the mean (sample standard deviation over `sqrt(n)`).
pub fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let first = values.clone().next().unwrap_or(0.0);
    if n == 1 || values.clone().all(|v| v == first) {
        return (if n == 1 { mean } else { first }, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var / n as f64))
}

/// Decrease of a mean difference in standard errors; never negative. A
/// decrease with zero spread is infinitely significant.
fn decrease_z(mean: f64, se: f64) -> f64 {
    if se > 0.0 {
        (-mean / se).max(0.0)
    } else if mean < 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub seeds: usize,
    pub window: usize,
    /// Largest windowed decrease of `ū`, in standard errors (0 if none).
    pub max_decrease_z: f64,
    /// Start `t` of the window attaining `max_decrease_z`.
    pub max_decrease_at: Option<usize>,
    /// Largest raw drop `ū(t) - ū(t + w)` over all windows (0 if none).
    pub max_decrease: f64,
    pub initial_mean: f64,
    pub final_mean: f64,
    /// `ū(end) - ū(0)`.
    pub net_gain: f64,
}

impl TrendReport {
    pub fn passes(&self, z_limit: f64) -> bool {
        self.max_decrease_z <= z_limit && self.net_gain > 0.0
    }
}

fn check_seeds(set: &TrajectorySet) -> Result<()> {
    if set.num_seeds() < MIN_TREND_SEEDS {
        return Err(Error::TooFewSeeds {
            found: set.num_seeds(),
            required: MIN_TREND_SEEDS,
        });
    }
    Ok(())
}

/// Windowed decreases of the seed mean over every `(t, t + window)`.
pub fn trend_test(set: &TrajectorySet, window: usize) -> Result<TrendReport> {
    check_seeds(set)?;
    if window == 0 || window >= set.len() {
        return Err(Error::InvalidArgument(format!(
            "window {window} must lie in [1, {})",
            set.len()
        )));
    }
    let mut max_z = 0.0;
    let mut at = None;
    let mut max_drop: f64 = 0.0;
    for t in 0..set.len() - window {
        let (mean, se) = mean_se(set.payoffs.iter().map(|p| p[t + window] - p[t]));
        max_drop = max_drop.max(-mean);
        let z = decrease_z(mean, se);
        if z > max_z {
            max_z = z;
            at = Some(t);
        }
    }
    let initial_mean = mean_se(set.payoffs.iter().map(|p| p[0])).0;
    let final_mean = mean_se(set.payoffs.iter().map(|p| p[p.len() - 1])).0;
    Ok(TrendReport {
        seeds: set.num_seeds(),
        window,
        max_decrease_z: max_z,
        max_decrease_at: at,
        max_decrease: max_drop,
        initial_mean,
        final_mean,
        net_gain: final_mean - initial_mean,
    })
}

/// One-round changes `u(t_k) - u(t_k - 1)` at the scheduled user rounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTrendReport {
    pub seeds: usize,
    pub rounds: usize,
    /// Largest decrease at a single scheduled round, in standard errors.
    pub max_decrease_z: f64,
    pub max_decrease_round: Option<u64>,
    /// Mean change over all scheduled rounds and seeds.
    pub pooled_mean: f64,
    /// Decrease of the pooled mean, in standard errors.
    pub pooled_decrease_z: f64,
}

pub fn step_trend_test(set: &TrajectorySet, rounds: &[u64]) -> Result<StepTrendReport> {
    check_seeds(set)?;
    if let Some(&t) = rounds.iter().find(|&&t| t == 0 || t as usize >= set.len()) {
        return Err(Error::InvalidArgument(format!("round {t} outside [1, {})", set.len())));
    }
    let mut max_z = 0.0;
    let mut at = None;
    for &t in rounds {
        let t_us = t as usize;
        let (mean, se) = mean_se(set.payoffs.iter().map(|p| p[t_us] - p[t_us - 1]));
        let z = decrease_z(mean, se);
        if z > max_z {
            max_z = z;
            at = Some(t);
        }
    }
    let pooled = set
        .payoffs
        .iter()
        .flat_map(|p| rounds.iter().map(move |&t| p[t as usize] - p[t as usize - 1]));
    let (pooled_mean, pooled_se) = mean_se(pooled);
    Ok(StepTrendReport {
        seeds: set.num_seeds(),
        rounds: rounds.len(),
        max_decrease_z: max_z,
        max_decrease_round: at,
        pooled_mean,
        pooled_decrease_z: decrease_z(pooled_mean, pooled_se),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub tail: usize,
    pub tol: f64,
    /// `max - min` of each seed's last `tail` values.
    pub spreads: Vec<f64>,
    pub converged: Vec<bool>,
    pub converged_fraction: f64,
}

/// A seed has converged when its last `tail` payoffs lie within `tol` of each other.
pub fn convergence_test(set: &TrajectorySet, tail: usize, tol: f64) -> Result<ConvergenceReport> {
    if tail == 0 || tail >= set.len() {
        return Err(Error::InvalidArgument(format!(
            "tail {tail} must lie in [1, {})",
            set.len()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be nonnegative")));
    }
    let spreads: Vec<f64> = set
        .payoffs
        .iter()
        .map(|p| {
            let window = &p[p.len() - tail..];
            let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect();
    let converged: Vec<bool> = spreads.iter().map(|&s| s <= tol).collect();
    let converged_fraction = converged.iter().filter(|&&c| c).count() as f64 / converged.len() as f64;
    Ok(ConvergenceReport {
        tail,
        tol,
        spreads,
        converged,
        converged_fraction,
    })
}
