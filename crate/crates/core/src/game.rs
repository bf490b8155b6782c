//! Game definition and the expected-payoff functional.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{check_index, Error, Result};
use crate::matrix::{Matrix, StrategyMatrix};
use crate::STOCHASTIC_TOL;

/// How intent weights enter the payoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// A probability distribution over intents (the prior).
    Distribution,
    /// Every intent weighted 1, ignoring normalization.
    Unit,
}

/// Weights applied to intents in the payoff: either a prior distribution or unit weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentWeights {
    values: Vec<f64>,
    mode: Weighting,
}

impl IntentWeights {
    /// A prior: nonnegative entries summing to 1 within [`STOCHASTIC_TOL`].
    pub fn distribution(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidValue("prior must have at least one intent".to_string()));
        }
        if let Some(p) = values.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidValue(format!("prior entry {p} is negative")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidValue(format!("prior sums to {sum}, not 1")));
        }
        Ok(Self {
            values,
            mode: Weighting::Distribution,
        })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidValue("prior must have at least one intent".to_string()));
        }
        Self::distribution(alloc::vec![1.0 / m as f64; m])
    }

    pub fn unit(m: usize) -> Self {
        Self {
            values: alloc::vec![1.0; m],
            mode: Weighting::Unit,
        }
    }

    pub fn mode(&self) -> Weighting {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Probabilities nature uses to draw intents: the weights normalized to sum 1.
    pub fn sampling_probabilities(&self) -> Vec<f64> {
        let sum: f64 = self.values.iter().sum();
        self.values.iter().map(|w| w / sum).collect()
    }
}

/// Rewards `r(intent i, result l)`, an m x o matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectivenessMatrix {
    inner: Matrix,
    unnormalized: bool,
}

impl EffectivenessMatrix {
    /// Entries must lie in `[0, 1]` unless `allow_unnormalized`, in which case
    /// any finite nonnegative reward is accepted.
    pub fn new(matrix: Matrix, allow_unnormalized: bool) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::Dimension {
                what: "effectiveness matrix",
                expected: "at least 1x1".to_string(),
                found: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        for (k, &r) in matrix.as_slice().iter().enumerate() {
            let ok = r.is_finite() && r >= 0.0 && (allow_unnormalized || r <= 1.0);
            if !ok {
                return Err(Error::InvalidValue(format!(
                    "reward r[{}][{}] = {r} outside {}",
                    k / matrix.cols(),
                    k % matrix.cols(),
                    if allow_unnormalized { "[0, inf)" } else { "[0, 1]" }
                )));
            }
        }
        Ok(Self {
            inner: matrix,
            unnormalized: allow_unnormalized,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], allow_unnormalized: bool) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, allow_unnormalized)
    }

    /// The identity similarity: reward 1 iff the result is the intent.
    pub fn identity(m: usize) -> Self {
        let mut inner = Matrix::zeros(m, m);
        for i in 0..m {
            inner.set(i, i, 1.0);
        }
        Self {
            inner,
            unnormalized: false,
        }
    }

    pub fn intents(&self) -> usize {
        self.inner.rows()
    }

    pub fn results(&self) -> usize {
        self.inner.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.inner.get(i, l)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn allows_unnormalized(&self) -> bool {
        self.unnormalized
    }

    pub fn is_identity(&self) -> bool {
        self.intents() == self.results()
            && (0..self.intents())
                .all(|i| (0..self.results()).all(|l| self.get(i, l) == if i == l { 1.0 } else { 0.0 }))
    }
}

/// Optional display names.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Labels {
    pub intents: Vec<String>,
    pub queries: Vec<String>,
    pub results: Vec<String>,
}

/// A complete game: weights, rewards and the initial strategy profile.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub prior: IntentWeights,
    pub effectiveness: EffectivenessMatrix,
    pub initial_user: StrategyMatrix,
    pub initial_dbms: StrategyMatrix,
    pub labels: Option<Labels>,
}

impl GameConfig {
    pub fn new(
        prior: IntentWeights,
        effectiveness: EffectivenessMatrix,
        initial_user: StrategyMatrix,
        initial_dbms: StrategyMatrix,
    ) -> Result<Self> {
        check_shapes(&initial_user, &initial_dbms, &prior, &effectiveness)?;
        Ok(Self {
            prior,
            effectiveness,
            initial_user,
            initial_dbms,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        let checks = [
            ("intent labels", labels.intents.len(), self.intents()),
            ("query labels", labels.queries.len(), self.queries()),
            ("result labels", labels.results.len(), self.results()),
        ];
        for (what, found, expected) in checks {
            if found != 0 && found != expected {
                return Err(Error::Dimension {
                    what,
                    expected: format!("{expected}"),
                    found: format!("{found}"),
                });
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// m
    pub fn intents(&self) -> usize {
        self.initial_user.rows()
    }

    /// n
    pub fn queries(&self) -> usize {
        self.initial_user.cols()
    }

    /// o
    pub fn results(&self) -> usize {
        self.initial_dbms.cols()
    }

    /// Checks that `user`/`dbms` fit this game's dimensions.
    pub fn check_profile(&self, user: &StrategyMatrix, dbms: &StrategyMatrix) -> Result<()> {
        check_shapes(user, dbms, &self.prior, &self.effectiveness)
    }

    pub fn payoff(&self, user: &StrategyMatrix, dbms: &StrategyMatrix) -> Result<f64> {
        expected_payoff(user, dbms, &self.prior, &self.effectiveness)
    }
}

pub(crate) fn check_shapes(
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
) -> Result<()> {
    let (m, n, o) = (user.rows(), user.cols(), dbms.cols());
    let mismatch = |what, expected: String, found: String| Err(Error::Dimension { what, expected, found });
    if dbms.rows() != n {
        return mismatch(
            "DBMS strategy rows",
            format!("{n} (queries)"),
            format!("{}", dbms.rows()),
        );
    }
    if prior.len() != m {
        return mismatch("prior", format!("{m} intents"), format!("{}", prior.len()));
    }
    if r.intents() != m || r.results() != o {
        return mismatch(
            "effectiveness matrix",
            format!("{m}x{o}"),
            format!("{}x{}", r.intents(), r.results()),
        );
    }
    Ok(())
}

/// `sum_l D_jl r_il`: the reward intent `i` expects from submitting query `j`.
#[inline]
pub(crate) fn intent_query_reward(dbms: &StrategyMatrix, r: &EffectivenessMatrix, i: usize, j: usize) -> f64 {
    dbms.row(j).iter().zip(r.row(i)).map(|(d, r)| d * r).sum()
}

/// Expected payoff `sum_i prior_i sum_j U_ij sum_l D_jl r_il` shared by both players.
pub fn expected_payoff(
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
) -> Result<f64> {
    check_shapes(user, dbms, prior, r)?;
    Ok((0..user.cols())
        .map(|j| query_efficiency_unchecked(user, dbms, prior, r, j))
        .sum())
}

fn query_efficiency_unchecked(
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
    j: usize,
) -> f64 {
    (0..user.rows())
        .filter(|&i| user.get(i, j) != 0.0)
        .map(|i| prior.weight(i) * user.get(i, j) * intent_query_reward(dbms, r, i, j))
        .sum()
}

/// Contribution of query `j` to the expected payoff; these sum to [`expected_payoff`].
pub fn per_query_efficiency(
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
    j: usize,
) -> Result<f64> {
    check_shapes(user, dbms, prior, r)?;
    check_index("query", j, user.cols())?;
    Ok(query_efficiency_unchecked(user, dbms, prior, r, j))
}

/// `sum_j U_ij D_ji`: probability that intent `i` is decoded correctly under the
/// identity similarity. Needs as many results as intents.
pub fn per_intent_efficiency(user: &StrategyMatrix, dbms: &StrategyMatrix, i: usize) -> Result<f64> {
    if user.rows() != dbms.cols() {
        return Err(Error::Regime(format!(
            "as many results as intents (m = {}, o = {})",
            user.rows(),
            dbms.cols()
        )));
    }
    if dbms.rows() != user.cols() {
        return Err(Error::Dimension {
            what: "DBMS strategy rows",
            expected: format!("{}", user.cols()),
            found: format!("{}", dbms.rows()),
        });
    }
    check_index("intent", i, user.rows())?;
    Ok((0..user.cols()).map(|j| user.get(i, j) * dbms.get(j, i)).sum())
}
