//! User adaptation models.
//!
//! Each model reacts to one interaction `(intent i, query j*, reward r)` by
//! rewriting row `i` of the user strategy and nothing else.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::matrix::{Matrix, StrategyMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserModel {
    BushMosteller,
    Cross,
    RothErev,
    RothErevModified,
    WinStayLoseRandomize,
    LatestReward,
}

impl UserModel {
    pub const ALL: [UserModel; 6] = [
        UserModel::BushMosteller,
        UserModel::Cross,
        UserModel::RothErev,
        UserModel::RothErevModified,
        UserModel::WinStayLoseRandomize,
        UserModel::LatestReward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UserModel::BushMosteller => "bush-mosteller",
            UserModel::Cross => "cross",
            UserModel::RothErev => "roth-erev",
            UserModel::RothErevModified => "roth-erev-modified",
            UserModel::WinStayLoseRandomize => "win-stay-lose-randomize",
            UserModel::LatestReward => "latest-reward",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Models that keep an accumulated-reward matrix.
    pub fn accumulates(self) -> bool {
        matches!(self, UserModel::RothErev | UserModel::RothErevModified)
    }

    /// Parameters estimated by grid search for this model.
    pub fn fitted_parameters(self) -> &'static [Param] {
        match self {
            UserModel::BushMosteller => &[Param::AlphaBm],
            UserModel::Cross => &[Param::AlphaC, Param::BetaC],
            UserModel::RothErevModified => &[Param::Sigma, Param::Epsilon],
            UserModel::WinStayLoseRandomize => &[Param::WslrThreshold],
            UserModel::RothErev | UserModel::LatestReward => &[],
        }
    }
}

/// A scalar model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    AlphaBm,
    BetaBm,
    AlphaC,
    BetaC,
    Sigma,
    Epsilon,
    RMin,
    WslrThreshold,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::AlphaBm => "alpha_bm",
            Param::BetaBm => "beta_bm",
            Param::AlphaC => "alpha_c",
            Param::BetaC => "beta_c",
            Param::Sigma => "sigma",
            Param::Epsilon => "epsilon",
            Param::RMin => "r_min",
            Param::WslrThreshold => "wslr_threshold",
        }
    }
}

/// Parameters of all six models. Defaults are the fitted values reported for
/// the Yahoo! workload, with `beta_bm = 0` and `r_min = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub alpha_bm: f64,
    pub beta_bm: f64,
    pub alpha_c: f64,
    pub beta_c: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub r_min: f64,
    pub wslr_threshold: f64,
    /// Off-query reinforcement of the modified Roth-Erev model is `R * epsilon / (n - 1)`
    /// instead of `R * epsilon` per cell.
    pub spread_epsilon: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha_bm: 0.14,
            beta_bm: 0.0,
            alpha_c: 0.06,
            beta_c: 0.11,
            sigma: 0.0,
            epsilon: 0.18,
            r_min: 0.0,
            wslr_threshold: 0.01,
            spread_epsilon: false,
        }
    }
}

impl ModelParams {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::AlphaBm => self.alpha_bm,
            Param::BetaBm => self.beta_bm,
            Param::AlphaC => self.alpha_c,
            Param::BetaC => self.beta_c,
            Param::Sigma => self.sigma,
            Param::Epsilon => self.epsilon,
            Param::RMin => self.r_min,
            Param::WslrThreshold => self.wslr_threshold,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) {
        match p {
            Param::AlphaBm => self.alpha_bm = value,
            Param::BetaBm => self.beta_bm = value,
            Param::AlphaC => self.alpha_c = value,
            Param::BetaC => self.beta_c = value,
            Param::Sigma => self.sigma = value,
            Param::Epsilon => self.epsilon = value,
            Param::RMin => self.r_min = value,
            Param::WslrThreshold => self.wslr_threshold = value,
        }
    }

    pub fn with(mut self, p: Param, value: f64) -> Self {
        self.set(p, value);
        self
    }

    /// Every parameter lies in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        const ALL: [Param; 8] = [
            Param::AlphaBm,
            Param::BetaBm,
            Param::AlphaC,
            Param::BetaC,
            Param::Sigma,
            Param::Epsilon,
            Param::RMin,
            Param::WslrThreshold,
        ];
        for p in ALL {
            let v = self.get(p);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidValue(format!("{} = {v} outside [0, 1]", p.name())));
            }
        }
        Ok(())
    }
}

/// Strategy, accumulated rewards and parameters of one adaptive user.
///
/// `accumulated` is present exactly for the Roth-Erev variants. Its rows are
/// nonnegative and `U` is their normalization whenever the row sum is positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserLearnerState {
    model: UserModel,
    user: StrategyMatrix,
    accumulated: Option<Matrix>,
    params: ModelParams,
}

fn check_reward(r: f64) -> Result<()> {
    if r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("reward {r} is not finite")))
    }
}

impl UserLearnerState {
    /// Starts from `user`. Accumulating models start from `S = n * U`, which is
    /// all ones for a uniform start; such a start must then be strictly positive.
    pub fn new(model: UserModel, user: StrategyMatrix, params: ModelParams) -> Result<Self> {
        params.validate()?;
        let accumulated = if model.accumulates() {
            let n = user.cols() as f64;
            let data: Vec<Vec<f64>> = user
                .to_rows()
                .into_iter()
                .map(|row| row.into_iter().map(|p| p * n).collect())
                .collect();
            let s = Matrix::from_rows(&data)?;
            if s.as_slice().iter().any(|&v| v <= 0.0) {
                return Err(Error::InvalidValue(
                    "accumulated rewards must start positive; pass them explicitly for a strategy with zeros".into(),
                ));
            }
            Some(s)
        } else {
            None
        };
        Ok(Self {
            model,
            user,
            accumulated,
            params,
        })
    }

    pub fn uniform(model: UserModel, intents: usize, queries: usize, params: ModelParams) -> Result<Self> {
        Self::new(model, StrategyMatrix::uniform(intents, queries)?, params)
    }

    /// Starts an accumulating model from explicit positive rewards `S`; `U` is their normalization.
    pub fn with_accumulated(model: UserModel, accumulated: Matrix, params: ModelParams) -> Result<Self> {
        params.validate()?;
        if !model.accumulates() {
            return Err(Error::InvalidArgument(format!(
                "{} keeps no accumulated rewards",
                model.name()
            )));
        }
        if accumulated.as_slice().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidValue("accumulated rewards must be positive".into()));
        }
        let user = StrategyMatrix::normalized_from(&accumulated)?;
        Ok(Self {
            model,
            user,
            accumulated: Some(accumulated),
            params,
        })
    }

    pub fn model(&self) -> UserModel {
        self.model
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn strategy(&self) -> &StrategyMatrix {
        &self.user
    }

    pub fn into_strategy(self) -> StrategyMatrix {
        self.user
    }

    pub fn accumulated(&self) -> Option<&Matrix> {
        self.accumulated.as_ref()
    }

    pub fn intents(&self) -> usize {
        self.user.rows()
    }

    pub fn queries(&self) -> usize {
        self.user.cols()
    }

    pub fn probabilities(&self, i: usize) -> &[f64] {
        self.user.row(i)
    }

    /// Appends an intent with a uniform row (and an all-ones reward row).
    pub fn add_intent(&mut self) {
        self.user.push_uniform_row();
        if let Some(s) = &mut self.accumulated {
            let n = s.cols();
            s.push_row(&vec![1.0; n]);
        }
    }

    /// Appends a query. Each row gives it probability `1/(n+1)` and rescales
    /// the rest; the reward column is set so that `U` stays the normalization of `S`.
    pub fn add_query(&mut self) {
        self.user.push_column_proportional();
        if let Some(s) = &mut self.accumulated {
            let n = s.cols() as f64;
            let sums: Vec<f64> = (0..s.rows()).map(|i| s.row_sum(i)).collect();
            s.push_column(0.0);
            let last = s.cols() - 1;
            for (i, sum) in sums.into_iter().enumerate() {
                s.set(i, last, sum / n);
            }
        }
    }

    /// Grows the matrices until intent `i` and query `j` exist.
    pub fn ensure(&mut self, i: usize, j: usize) {
        while self.intents() <= i {
            self.add_intent();
        }
        while self.queries() <= j {
            self.add_query();
        }
    }

    fn check(&self, i: usize, j: usize, r: f64) -> Result<()> {
        check_index("intent", i, self.intents())?;
        check_index("query", j, self.queries())?;
        check_reward(r)
    }

    /// Applies this state's model.
    pub fn update(&mut self, i: usize, j: usize, r: f64) -> Result<()> {
        match self.model {
            UserModel::BushMosteller => self.update_bush_mosteller(i, j, r),
            UserModel::Cross => self.update_cross(i, j, r),
            UserModel::RothErev => self.update_roth_erev(i, j, r),
            UserModel::RothErevModified => self.update_roth_erev_modified(i, j, r),
            UserModel::WinStayLoseRandomize => self.update_win_stay_lose_randomize(i, j, r),
            UserModel::LatestReward => self.update_latest_reward(i, j, r),
        }
    }

    /// Functional form of [`update`](Self::update).
    pub fn updated(&self, i: usize, j: usize, r: f64) -> Result<Self> {
        let mut next = self.clone();
        next.update(i, j, r)?;
        Ok(next)
    }

    /// `U_ij* += a(1 - U_ij*)`, `U_ij -= a U_ij` elsewhere, for `r >= 0`.
    /// Negative rewards use `beta_bm` with the roles reversed, then renormalize
    /// the row (the reversed rule only conserves mass for two queries).
    pub fn update_bush_mosteller(&mut self, i: usize, j: usize, r: f64) -> Result<()> {
        self.check(i, j, r)?;
        if r >= 0.0 {
            pull_toward(self.user.row_mut(i), j, self.params.alpha_bm);
        } else {
            let b = self.params.beta_bm;
            let row: Vec<f64> = self
                .user
                .row(i)
                .iter()
                .enumerate()
                .map(|(k, &p)| if k == j { p - b * p } else { p + b * (1.0 - p) })
                .collect();
            if row.iter().sum::<f64>() > 0.0 {
                self.user.set_row_normalized(i, &row);
            }
        }
        Ok(())
    }

    /// Bush-Mosteller step with rate `clamp(alpha_c r + beta_c, 0, 1)`.
    pub fn update_cross(&mut self, i: usize, j: usize, r: f64) -> Result<()> {
        self.check(i, j, r)?;
        let rate = (self.params.alpha_c * r + self.params.beta_c).clamp(0.0, 1.0);
        pull_toward(self.user.row_mut(i), j, rate);
        Ok(())
    }

    /// `S_ij* += r`, then row `i` of `U` is the normalization of `S`.
    pub fn update_roth_erev(&mut self, i: usize, j: usize, r: f64) -> Result<()> {
        self.check(i, j, r)?;
        if r < 0.0 {
            return Err(Error::InvalidValue(format!("Roth-Erev reward {r} is negative")));
        }
        let s = self.accumulated_mut()?;
        if r == 0.0 {
            return Ok(());
        }
        let v = s.get(i, j) + r;
        s.set(i, j, v);
        let row = s.row(i).to_vec();
        self.user.set_row_normalized(i, &row);
        Ok(())
    }

    /// Every cell: `S_ij = (1 - sigma) S_ij + E_j` with `E_j* = R(1 - eps)`,
    /// `E_j = R eps` otherwise (`R eps / (n-1)` when spread), `R = r - r_min`.
    /// A row whose rewards all vanish leaves `U` unchanged.
    pub fn update_roth_erev_modified(&mut self, i: usize, j: usize, r: f64) -> Result<()> {
        self.check(i, j, r)?;
        let p = self.params;
        if r < p.r_min {
            return Err(Error::InvalidArgument(format!(
                "reward {r} below the minimum expected reward {}",
                p.r_min
            )));
        }
        let big_r = r - p.r_min;
        let n = self.queries();
        let off = if p.spread_epsilon {
            if n > 1 {
                big_r * p.epsilon / (n - 1) as f64
            } else {
                0.0
            }
        } else {
            big_r * p.epsilon
        };
        let s = self.accumulated_mut()?;
        for (k, v) in s.row_mut(i).iter_mut().enumerate() {
            let e = if k == j { big_r * (1.0 - p.epsilon) } else { off };
            *v = (1.0 - p.sigma) * *v + e;
        }
        let row = s.row(i).to_vec();
        if row.iter().sum::<f64>() > 0.0 {
            self.user.set_row_normalized(i, &row);
        }
        Ok(())
    }

    /// Pure on `j*` when `r >= wslr_threshold`, uniform otherwise.
    pub fn update_win_stay_lose_randomize(&mut self, i: usize, j: usize, r: f64) -> Result<()> {
        self.check(i, j, r)?;
        if r >= self.params.wslr_threshold {
            self.user.set_row_pure(i, j);
        } else {
            self.user.set_row_uniform(i);
        }
        Ok(())
    }

    /// `U_ij* = r`, the remaining `1 - r` split evenly. A single-query row stays `[1]`.
    pub fn update_latest_reward(&mut self, i: usize, j: usize, r: f64) -> Result<()> {
        self.check(i, j, r)?;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidValue(format!("latest-reward needs r in [0, 1], got {r}")));
        }
        let n = self.queries();
        if n == 1 {
            return Ok(());
        }
        let rest = (1.0 - r) / (n - 1) as f64;
        for (k, p) in self.user.row_mut(i).iter_mut().enumerate() {
            *p = if k == j { r } else { rest };
        }
        Ok(())
    }

    fn accumulated_mut(&mut self) -> Result<&mut Matrix> {
        let model = self.model;
        self.accumulated
            .as_mut()
            .ok_or_else(|| Error::InvalidArgument(format!("{} keeps no accumulated rewards", model.name())))
    }
}

/// `p_j* += a(1 - p_j*)`, `p_k -= a p_k`; conserves mass exactly for `a` in `[0, 1]`.
fn pull_toward(row: &mut [f64], j: usize, a: f64) {
    for (k, p) in row.iter_mut().enumerate() {
        if k == j {
            *p += a * (1.0 - *p);
        } else {
            *p -= a * *p;
        }
    }
}

/// Squared Euclidean distance from a row to the vertex `e_j`.
pub fn distance_to_vertex(row: &[f64], j: usize) -> f64 {
    row.iter()
        .enumerate()
        .map(|(k, &p)| {
            let d = p - if k == j { 1.0 } else { 0.0 };
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(model: UserModel, params: ModelParams, n: usize) -> UserLearnerState {
        UserLearnerState::uniform(model, 1, n, params).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn bush_mosteller_examples() {
        let p = ModelParams::default();
        let mut s = state(UserModel::BushMosteller, p, 2);
        s.update(0, 0, 0.3).unwrap();
        assert!(close(s.probabilities(0), &[0.57, 0.43]));
        let mut s = state(UserModel::BushMosteller, p.with(Param::AlphaBm, 0.0), 2);
        s.update(0, 0, 0.3).unwrap();
        assert!(close(s.probabilities(0), &[0.5, 0.5]));
        let mut s = state(UserModel::BushMosteller, p.with(Param::AlphaBm, 1.0), 3);
        s.update(0, 2, 0.3).unwrap();
        assert_eq!(s.probabilities(0), &[0.0, 0.0, 1.0]);
        assert!(s.update(1, 0, 0.3).is_err());
        assert!(s.update(0, 3, 0.3).is_err());
    }

    #[test]
    fn bush_mosteller_negative_branch_stays_stochastic() {
        let mut s = state(
            UserModel::BushMosteller,
            ModelParams::default().with(Param::BetaBm, 0.4),
            3,
        );
        s.update(0, 1, -0.5).unwrap();
        let row = s.probabilities(0);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(row[1] < row[0]);
    }

    #[test]
    fn cross_examples() {
        let mut s = state(UserModel::Cross, ModelParams::default(), 2);
        s.update(0, 0, 0.5).unwrap();
        assert!(close(s.probabilities(0), &[0.57, 0.43]));
        let zero = ModelParams::default().with(Param::AlphaC, 0.0).with(Param::BetaC, 0.0);
        let mut s = state(UserModel::Cross, zero, 2);
        s.update(0, 0, 0.9).unwrap();
        assert!(close(s.probabilities(0), &[0.5, 0.5]));
        // alpha + beta > 1 clamps the rate to 1.
        let big = ModelParams::default().with(Param::AlphaC, 1.0).with(Param::BetaC, 0.5);
        let mut s = state(UserModel::Cross, big, 3);
        s.update(0, 1, 0.9).unwrap();
        assert_eq!(s.probabilities(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn roth_erev_examples() {
        let mut s = state(UserModel::RothErev, ModelParams::default(), 2);
        s.update(0, 0, 0.0).unwrap();
        assert_eq!(s.probabilities(0), &[0.5, 0.5]);
        s.update(0, 0, 1.0).unwrap();
        assert!(close(s.probabilities(0), &[2.0 / 3.0, 1.0 / 3.0]));
        assert!(s.update(0, 0, -0.1).is_err());
    }

    #[test]
    fn roth_erev_modified_examples() {
        let mut s = state(UserModel::RothErevModified, ModelParams::default(), 3);
        s.update(0, 0, 1.0).unwrap();
        assert!(close(s.accumulated().unwrap().row(0), &[1.82, 1.18, 1.18]));
        // 1.82 / 4.18 and 1.18 / 4.18
        assert!(close(
            s.probabilities(0),
            &[0.4354066985645933, 0.2822966507177033, 0.2822966507177033]
        ));

        let degenerate = ModelParams::default().with(Param::Epsilon, 0.0);
        let mut a = state(UserModel::RothErevModified, degenerate, 3);
        let mut b = state(UserModel::RothErev, degenerate, 3);
        for (j, r) in [(0, 0.4), (2, 0.9), (0, 0.1)] {
            a.update(0, j, r).unwrap();
            b.update(0, j, r).unwrap();
        }
        assert!(close(a.probabilities(0), b.probabilities(0)));

        let forget = ModelParams::default().with(Param::Sigma, 1.0);
        let mut s = state(UserModel::RothErevModified, forget, 3);
        s.update(0, 1, 0.5).unwrap();
        // E = [0.09, 0.41, 0.09] / 0.59
        assert!(close(s.probabilities(0), &[0.09 / 0.59, 0.41 / 0.59, 0.09 / 0.59]));

        let floor = ModelParams::default().with(Param::RMin, 0.2);
        let mut s = state(UserModel::RothErevModified, floor, 3);
        assert!(matches!(s.update(0, 0, 0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn spread_epsilon_divides_off_query_share() {
        let p = ModelParams {
            spread_epsilon: true,
            ..ModelParams::default()
        };
        let mut s = state(UserModel::RothErevModified, p, 3);
        s.update(0, 0, 1.0).unwrap();
        assert!(close(s.accumulated().unwrap().row(0), &[1.82, 1.09, 1.09]));
    }

    #[test]
    fn forgetting_everything_with_zero_reward_keeps_strategy() {
        let p = ModelParams::default().with(Param::Sigma, 1.0);
        let mut s = state(UserModel::RothErevModified, p, 2);
        s.update(0, 0, 1.0).unwrap();
        let before = s.probabilities(0).to_vec();
        s.update(0, 1, 0.0).unwrap();
        assert_eq!(s.probabilities(0), &before[..]);
    }

    #[test]
    fn win_stay_lose_randomize_examples() {
        let mut s = state(UserModel::WinStayLoseRandomize, ModelParams::default(), 4);
        s.update(0, 2, 0.5).unwrap();
        assert_eq!(s.probabilities(0), &[0.0, 0.0, 1.0, 0.0]);
        s.update(0, 2, 0.005).unwrap();
        assert_eq!(s.probabilities(0), &[0.25; 4]);
    }

    #[test]
    fn latest_reward_examples() {
        let mut s = state(UserModel::LatestReward, ModelParams::default(), 3);
        s.update(0, 0, 1.0).unwrap();
        assert_eq!(s.probabilities(0), &[1.0, 0.0, 0.0]);
        s.update(0, 0, 0.0).unwrap();
        assert_eq!(s.probabilities(0), &[0.0, 0.5, 0.5]);
        let mut s = state(UserModel::LatestReward, ModelParams::default(), 2);
        s.update(0, 1, 0.4).unwrap();
        assert!(close(s.probabilities(0), &[0.6, 0.4]));
        let mut s = state(UserModel::LatestReward, ModelParams::default(), 1);
        s.update(0, 0, 0.3).unwrap();
        assert_eq!(s.probabilities(0), &[1.0]);
        assert!(s.update(0, 0, 1.5).is_err());
    }

    #[test]
    fn growth_keeps_strategy_consistent_with_rewards() {
        let mut s = state(UserModel::RothErev, ModelParams::default(), 2);
        s.update(0, 0, 1.0).unwrap();
        s.ensure(2, 3);
        assert_eq!((s.intents(), s.queries()), (3, 4));
        let acc = s.accumulated().unwrap();
        for i in 0..3 {
            let sum = acc.row_sum(i);
            let normalized: Vec<f64> = acc.row(i).iter().map(|v| v / sum).collect();
            assert!(close(s.probabilities(i), &normalized));
        }
        assert!(close(s.probabilities(2), &[0.25; 4]));
        s.update(2, 3, 0.5).unwrap();
    }

    #[test]
    fn params_are_range_checked() {
        assert!(ModelParams::default().with(Param::Sigma, 1.5).validate().is_err());
        assert!(
            UserLearnerState::uniform(UserModel::Cross, 1, 2, ModelParams::default().with(Param::AlphaC, -0.1))
                .is_err()
        );
    }

    #[test]
    fn explicit_accumulated_rewards() {
        let s = Matrix::from_rows(&[vec![3.0, 1.0]]).unwrap();
        let st = UserLearnerState::with_accumulated(UserModel::RothErev, s.clone(), ModelParams::default()).unwrap();
        assert_eq!(st.probabilities(0), &[0.75, 0.25]);
        assert!(UserLearnerState::with_accumulated(UserModel::Cross, s, ModelParams::default()).is_err());
        let pure = StrategyMatrix::pure(&[0], 2).unwrap();
        assert!(UserLearnerState::new(UserModel::RothErev, pure, ModelParams::default()).is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for m in UserModel::ALL {
            assert_eq!(UserModel::from_name(m.name()), Some(m));
        }
    }
}
