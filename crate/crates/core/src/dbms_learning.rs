//! Roth-Erev adaptation of the DBMS, the scheduled user adaptation of the
//! joint regime, and seeded trajectories.
//!
//! The DBMS keeps positive accumulated rewards `R` (n x o) and plays their
//! row-normalization `D`. Each round nature draws an intent, the user submits
//! a query from `U`, the DBMS answers from `D` and adds the reward to the cell
//! it played. At scheduled rounds the DBMS holds still and the user updates
//! its own accumulated rewards `S` instead.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::game::{check_shapes, expected_payoff, EffectivenessMatrix, GameConfig, IntentWeights};
use crate::matrix::{Matrix, StrategyMatrix};
use crate::rng::{sample_categorical, seed_stream};
use crate::user_learning::{ModelParams, UserLearnerState, UserModel};

/// How the DBMS is reinforced after answering query `j` with result `l` for intent `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// `R_jl += r(e_i, s_l)`.
    #[default]
    Effectiveness,
    /// `R_ji += 1`: the intent becomes known (e.g. from a click) and is
    /// reinforced whatever was shown. Needs as many results as intents.
    Binary,
}

/// Accumulated rewards `R` and the strategy `D` they induce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbmsLearnerState {
    rewards: Matrix,
    dbms: StrategyMatrix,
}

impl DbmsLearnerState {
    /// From explicit strictly positive rewards.
    pub fn new(rewards: Matrix) -> Result<Self> {
        if rewards.as_slice().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidValue("DBMS rewards must be positive".into()));
        }
        let dbms = StrategyMatrix::normalized_from(&rewards)?;
        Ok(Self { rewards, dbms })
    }

    /// All-ones rewards, i.e. a uniform `D`.
    pub fn uniform(queries: usize, results: usize) -> Result<Self> {
        Self::new(Matrix::filled(queries, results, 1.0))
    }

    /// `R = o * D`, which is all ones for a uniform `D`. `D` must be strictly positive.
    pub fn from_strategy(dbms: &StrategyMatrix) -> Result<Self> {
        let o = dbms.cols() as f64;
        let rows: Vec<Vec<f64>> = dbms
            .to_rows()
            .into_iter()
            .map(|row| row.into_iter().map(|p| p * o).collect())
            .collect();
        Self::new(Matrix::from_rows(&rows)?)
    }

    pub fn rewards(&self) -> &Matrix {
        &self.rewards
    }

    pub fn strategy(&self) -> &StrategyMatrix {
        &self.dbms
    }

    pub fn into_strategy(self) -> StrategyMatrix {
        self.dbms
    }

    /// Appends all-ones reward rows until query `j` exists.
    pub fn ensure_query(&mut self, j: usize) {
        while self.rewards.rows() <= j {
            let o = self.rewards.cols();
            self.rewards.push_row(&vec![1.0; o]);
            self.dbms.push_uniform_row();
        }
    }

    /// `R_jl += amount` and row `j` of `D` renormalized.
    pub fn reinforce(&mut self, j: usize, l: usize, amount: f64) -> Result<()> {
        check_index("query", j, self.rewards.rows())?;
        check_index("result", l, self.rewards.cols())?;
        if !(amount >= 0.0) || !amount.is_finite() {
            return Err(Error::InvalidValue(format!(
                "reinforcement {amount} must be a nonnegative number"
            )));
        }
        if amount == 0.0 {
            return Ok(());
        }
        let v = self.rewards.get(j, l) + amount;
        self.rewards.set(j, l, v);
        let row = self.rewards.row(j).to_vec();
        self.dbms.set_row_normalized(j, &row);
        Ok(())
    }
}

/// One played round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionEvent {
    pub t: u64,
    pub intent: usize,
    pub query: usize,
    pub result: usize,
    pub reward: f64,
    /// Expected payoff of the profile the round was played under.
    pub payoff: f64,
}

struct Draw {
    intent: usize,
    query: usize,
    result: usize,
}

fn draw<R: Rng + ?Sized>(
    intent_probs: &[f64],
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    rng: &mut R,
) -> Result<Draw> {
    let intent = sample_categorical(intent_probs, rng)?;
    let query = sample_categorical(user.row(intent), rng)?;
    let result = sample_categorical(dbms.row(query), rng)?;
    Ok(Draw { intent, query, result })
}

fn dbms_round<R: Rng + ?Sized>(
    state: &mut DbmsLearnerState,
    user: &StrategyMatrix,
    intent_probs: &[f64],
    r: &EffectivenessMatrix,
    mode: RewardMode,
    rng: &mut R,
) -> Result<Draw> {
    let d = draw(intent_probs, user, &state.dbms, rng)?;
    match mode {
        RewardMode::Effectiveness => state.reinforce(d.query, d.result, r.get(d.intent, d.result))?,
        RewardMode::Binary => state.reinforce(d.query, d.intent, 1.0)?,
    }
    Ok(d)
}

fn check_binary(mode: RewardMode, intents: usize, results: usize) -> Result<()> {
    if mode == RewardMode::Binary && intents != results {
        return Err(Error::Regime(format!(
            "binary rewards reinforce the intent's own result and need m = o (m = {intents}, o = {results})"
        )));
    }
    Ok(())
}

/// One DBMS learning round against a fixed user strategy.
pub fn dbms_step<R: Rng + ?Sized>(
    state: &mut DbmsLearnerState,
    user: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
    mode: RewardMode,
    t: u64,
    rng: &mut R,
) -> Result<InteractionEvent> {
    check_shapes(user, &state.dbms, prior, r)?;
    check_binary(mode, r.intents(), r.results())?;
    let payoff = expected_payoff(user, &state.dbms, prior, r)?;
    let d = dbms_round(state, user, &prior.sampling_probabilities(), r, mode, rng)?;
    let reward = match mode {
        RewardMode::Effectiveness => r.get(d.intent, d.result),
        RewardMode::Binary => 1.0,
    };
    Ok(InteractionEvent {
        t,
        intent: d.intent,
        query: d.query,
        result: d.result,
        reward,
        payoff,
    })
}

/// Closed-form `E(D+_jl | F_t) - D_jl` for one effectiveness-reward round:
/// `D_jl sum_i p_i U_ij (r_il / (Rbar_j + r_il) - sum_l' D_jl' r_il' / (Rbar_j + r_il'))`
/// with `p` the sampling distribution of intents.
pub fn dbms_one_step_expectation(
    state: &DbmsLearnerState,
    user: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
    j: usize,
    l: usize,
) -> Result<f64> {
    check_shapes(user, &state.dbms, prior, r)?;
    check_index("query", j, state.dbms.rows())?;
    check_index("result", l, state.dbms.cols())?;
    let p = prior.sampling_probabilities();
    let r_bar = state.rewards.row_sum(j);
    let d = state.dbms.row(j);
    let mut acc = 0.0;
    for i in 0..user.rows() {
        let w = p[i] * user.get(i, j);
        if w == 0.0 {
            continue;
        }
        let own = r.get(i, l) / (r_bar + r.get(i, l));
        let mixed: f64 = (0..d.len()).map(|k| d[k] * r.get(i, k) / (r_bar + r.get(i, k))).sum();
        acc += w * (own - mixed);
    }
    Ok(d[l] * acc)
}

/// Identity rewards between `m` intents and `m` results.
fn require_identity(r: &EffectivenessMatrix) -> Result<()> {
    if r.intents() != r.results() || !r.is_identity() {
        return Err(Error::Regime(
            "the joint regime needs m = o and identity rewards (r = 1 iff the result is the intent)".into(),
        ));
    }
    Ok(())
}

fn user_round<R: Rng + ?Sized>(
    user: &mut UserLearnerState,
    dbms: &StrategyMatrix,
    intent_probs: &[f64],
    r: &EffectivenessMatrix,
    rng: &mut R,
) -> Result<(Draw, f64)> {
    let d = draw(intent_probs, user.strategy(), dbms, rng)?;
    let reward = r.get(d.intent, d.result);
    user.update(d.intent, d.query, reward)?;
    Ok((d, reward))
}

/// One user adaptation round of the joint regime: the user reinforces
/// `S_ij` by 1 iff the DBMS decoded the intent correctly.
pub fn user_adaptation_step<R: Rng + ?Sized>(
    user: &mut UserLearnerState,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    t: u64,
    rng: &mut R,
) -> Result<InteractionEvent> {
    if user.model() != UserModel::RothErev {
        return Err(Error::Regime(format!(
            "scheduled user adaptation is analyzed for Roth-Erev users, not {}",
            user.model().name()
        )));
    }
    if user.intents() != dbms.cols() {
        return Err(Error::Regime(format!(
            "the joint regime needs m = o (m = {}, o = {})",
            user.intents(),
            dbms.cols()
        )));
    }
    let r = EffectivenessMatrix::identity(user.intents());
    check_shapes(user.strategy(), dbms, prior, &r)?;
    let payoff = expected_payoff(user.strategy(), dbms, prior, &r)?;
    let (d, reward) = user_round(user, dbms, &prior.sampling_probabilities(), &r, rng)?;
    Ok(InteractionEvent {
        t,
        intent: d.intent,
        query: d.query,
        result: d.result,
        reward,
        payoff,
    })
}

/// Closed-form `E(U+_ij | F_t) - U_ij = p_i U_ij (D_ji - u^i) / (sum_l S_il + 1)`
/// for a Roth-Erev user under identity rewards, with `u^i = sum_j U_ij D_ji`.
pub fn user_one_step_expectation(
    user: &UserLearnerState,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    i: usize,
    j: usize,
) -> Result<f64> {
    let s = user
        .accumulated()
        .filter(|_| user.model() == UserModel::RothErev)
        .ok_or_else(|| Error::Regime("expected drift is defined for Roth-Erev users".into()))?;
    if user.intents() != dbms.cols() || user.queries() != dbms.rows() || prior.len() != user.intents() {
        return Err(Error::Regime("the joint regime needs matching m = o shapes".into()));
    }
    check_index("intent", i, user.intents())?;
    check_index("query", j, user.queries())?;
    let u = user.strategy();
    let success: f64 = (0..u.cols()).map(|k| u.get(i, k) * dbms.get(k, i)).sum();
    let p = prior.sampling_probabilities()[i];
    Ok(p * u.get(i, j) * (dbms.get(j, i) - success) / (s.row_sum(i) + 1.0))
}

/// Rounds `1..=total_rounds` and the rounds at which the user adapts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationSchedule {
    total_rounds: u64,
    user_update_times: Vec<u64>,
}

impl SimulationSchedule {
    /// Update times must be strictly increasing and lie in `[1, total_rounds]`.
    pub fn new(total_rounds: u64, user_update_times: Vec<u64>) -> Result<Self> {
        if user_update_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "user update times must be strictly increasing".into(),
            ));
        }
        if let Some(&t) = user_update_times.iter().find(|&&t| t == 0 || t > total_rounds) {
            return Err(Error::InvalidArgument(format!(
                "user update time {t} outside [1, {total_rounds}]"
            )));
        }
        Ok(Self {
            total_rounds,
            user_update_times,
        })
    }

    /// Fixed user: the DBMS adapts every round.
    pub fn fixed_user(total_rounds: u64) -> Self {
        Self {
            total_rounds,
            user_update_times: Vec::new(),
        }
    }

    /// User adapts at rounds `every, 2 every, ...`; `every = 0` means never.
    pub fn every(total_rounds: u64, every: u64) -> Self {
        let user_update_times = if every == 0 {
            Vec::new()
        } else {
            (1..=total_rounds / every).map(|k| k * every).collect()
        };
        Self {
            total_rounds,
            user_update_times,
        }
    }

    pub fn total_rounds(&self) -> u64 {
        self.total_rounds
    }

    pub fn user_update_times(&self) -> &[u64] {
        &self.user_update_times
    }

    pub fn has_user_updates(&self) -> bool {
        !self.user_update_times.is_empty()
    }
}

/// Everything a trajectory depends on besides the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub game: GameConfig,
    pub schedule: SimulationSchedule,
    pub user_model: UserModel,
    pub user_params: ModelParams,
    pub reward_mode: RewardMode,
    /// Allows any user model and reward matrix with a user schedule. Outside
    /// the analyzed regime; no improvement guarantee applies.
    pub free_composition: bool,
    /// Initial DBMS rewards; defaults to `o * D(0)`.
    pub initial_rewards: Option<Matrix>,
    /// Initial user rewards for accumulating models; defaults to `n * U(0)`.
    pub initial_accumulated: Option<Matrix>,
}

impl SimulationSpec {
    pub fn new(game: GameConfig, schedule: SimulationSchedule) -> Self {
        Self {
            game,
            schedule,
            user_model: UserModel::RothErev,
            user_params: ModelParams::default(),
            reward_mode: RewardMode::Effectiveness,
            free_composition: false,
            initial_rewards: None,
            initial_accumulated: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.game;
        check_binary(self.reward_mode, g.intents(), g.results())?;
        if self.schedule.has_user_updates() && !self.free_composition {
            if self.user_model != UserModel::RothErev {
                return Err(Error::Regime(format!(
                    "user updates with {} need free composition",
                    self.user_model.name()
                )));
            }
            require_identity(&g.effectiveness)?;
        }
        self.initial_dbms_state()?;
        if self.schedule.has_user_updates() {
            self.initial_user_state()?;
        }
        Ok(())
    }

    fn initial_dbms_state(&self) -> Result<DbmsLearnerState> {
        let state = match &self.initial_rewards {
            Some(r) => DbmsLearnerState::new(r.clone())?,
            None => DbmsLearnerState::from_strategy(&self.game.initial_dbms)?,
        };
        if state.rewards.rows() != self.game.queries() || state.rewards.cols() != self.game.results() {
            return Err(Error::Dimension {
                what: "initial DBMS rewards",
                expected: format!("{}x{}", self.game.queries(), self.game.results()),
                found: format!("{}x{}", state.rewards.rows(), state.rewards.cols()),
            });
        }
        Ok(state)
    }

    fn initial_user_state(&self) -> Result<UserLearnerState> {
        let state = match (&self.initial_accumulated, self.user_model.accumulates()) {
            (Some(s), true) => UserLearnerState::with_accumulated(self.user_model, s.clone(), self.user_params)?,
            (Some(_), false) => {
                return Err(Error::InvalidArgument(format!(
                    "{} keeps no accumulated rewards",
                    self.user_model.name()
                )))
            }
            (None, _) => UserLearnerState::new(self.user_model, self.game.initial_user.clone(), self.user_params)?,
        };
        if state.intents() != self.game.intents() || state.queries() != self.game.queries() {
            return Err(Error::Dimension {
                what: "initial user rewards",
                expected: format!("{}x{}", self.game.intents(), self.game.queries()),
                found: format!("{}x{}", state.intents(), state.queries()),
            });
        }
        Ok(state)
    }
}

/// One seeded run: `payoffs[t] = u(U(t), D(t))` for `t = 0..=total_rounds`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed_index: u64,
    pub payoffs: Vec<f64>,
    pub final_user: StrategyMatrix,
    pub final_dbms: StrategyMatrix,
}

/// Plays one trajectory on stream `seed_index` of `master_seed`.
pub fn simulate_trajectory(spec: &SimulationSpec, master_seed: u64, seed_index: u64) -> Result<Trajectory> {
    spec.validate()?;
    let g = &spec.game;
    let mut rng = seed_stream(master_seed, seed_index);
    let probs = g.prior.sampling_probabilities();
    let mut dbms = spec.initial_dbms_state()?;
    let mut user = if spec.schedule.has_user_updates() {
        Some(spec.initial_user_state()?)
    } else {
        None
    };
    let fixed_user = &g.initial_user;

    let total = spec.schedule.total_rounds();
    let mut payoffs = Vec::with_capacity(total as usize + 1);
    payoffs.push(expected_payoff(
        fixed_user,
        dbms.strategy(),
        &g.prior,
        &g.effectiveness,
    )?);
    let mut updates = spec.schedule.user_update_times().iter().peekable();
    for t in 1..=total {
        let current_user = user.as_ref().map_or(fixed_user, |u| u.strategy());
        if updates.next_if_eq(&&t).is_some() {
            let u = user.as_mut().expect("a user schedule always carries a learner");
            user_round(u, dbms.strategy(), &probs, &g.effectiveness, &mut rng)?;
        } else {
            dbms_round(
                &mut dbms,
                current_user,
                &probs,
                &g.effectiveness,
                spec.reward_mode,
                &mut rng,
            )?;
        }
        let current_user = user.as_ref().map_or(fixed_user, |u| u.strategy());
        payoffs.push(expected_payoff(
            current_user,
            dbms.strategy(),
            &g.prior,
            &g.effectiveness,
        )?);
    }
    Ok(Trajectory {
        seed_index,
        payoffs,
        final_user: user.map_or_else(|| fixed_user.clone(), UserLearnerState::into_strategy),
        final_dbms: dbms.into_strategy(),
    })
}

/// Trajectories for seed indices `0..seeds`, in order.
pub fn run_simulation(spec: &SimulationSpec, master_seed: u64, seeds: u64) -> Result<Vec<Trajectory>> {
    (0..seeds).map(|s| simulate_trajectory(spec, master_seed, s)).collect()
}
