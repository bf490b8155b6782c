//! Best replies, Nash and strict Nash verification, optimality, and exhaustive
//! enumeration of pure profiles.
//!
//! The payoff is bilinear in `(U, D)`: with one strategy fixed it is linear in
//! the other, and it separates over rows. A best unilateral deviation can
//! therefore always be taken pure and chosen row by row, which is what every
//! check here does.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{check_index, Error, Result};
use crate::game::{check_shapes, intent_query_reward, EffectivenessMatrix, GameConfig, IntentWeights};
use crate::matrix::{Matrix, StrategyMatrix};

/// Tolerance for payoff comparisons in equilibrium tests.
pub const EPS_NASH: f64 = 1e-9;
/// Probabilities above this count as support.
pub const EPS_SUPPORT: f64 = 1e-12;
/// Tolerance for argmax ties.
pub const EPS_TIE: f64 = 1e-9;
/// Default cap on `n^m * o^n` for enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyProfile {
    pub user: StrategyMatrix,
    pub dbms: StrategyMatrix,
}

impl StrategyProfile {
    pub fn new(user: StrategyMatrix, dbms: StrategyMatrix) -> Self {
        Self { user, dbms }
    }

    pub fn pure(user: &[usize], dbms: &[usize], results: usize) -> Result<Self> {
        Ok(Self {
            user: StrategyMatrix::pure(user, dbms.len())?,
            dbms: StrategyMatrix::pure(dbms, results)?,
        })
    }
}

/// `u_r(e_i, q_j) = sum_l D_jl r(e_i, s_l)`.
pub fn payoff_of_intent_with_query(
    profile: &StrategyProfile,
    r: &EffectivenessMatrix,
    i: usize,
    j: usize,
) -> Result<f64> {
    check_index("intent", i, r.intents())?;
    check_index("query", j, profile.dbms.rows())?;
    if profile.dbms.cols() != r.results() {
        return Err(Error::Dimension {
            what: "effectiveness matrix",
            expected: format!("{} results", profile.dbms.cols()),
            found: format!("{}", r.results()),
        });
    }
    Ok(intent_query_reward(&profile.dbms, r, i, j))
}

/// Intents that submit query `j` with positive probability.
pub fn intent_pool(user: &StrategyMatrix, j: usize) -> Result<Vec<usize>> {
    check_index("query", j, user.cols())?;
    Ok((0..user.rows()).filter(|&i| user.get(i, j) > EPS_SUPPORT).collect())
}

fn argmax_set(values: impl Iterator<Item = f64> + Clone) -> Vec<usize> {
    let best = values.clone().fold(f64::NEG_INFINITY, f64::max);
    values
        .enumerate()
        .filter(|(_, v)| *v >= best - EPS_TIE)
        .map(|(k, _)| k)
        .collect()
}

/// `y_jl = sum_i prior_i U_ij r_il`: what the DBMS earns from answering query `j` with `l`.
fn reply_values(user: &StrategyMatrix, prior: &IntentWeights, r: &EffectivenessMatrix) -> Matrix {
    let mut y = Matrix::zeros(user.cols(), r.results());
    for i in 0..user.rows() {
        let w = prior.weight(i);
        for j in 0..user.cols() {
            let wu = w * user.get(i, j);
            if wu == 0.0 {
                continue;
            }
            for (l, &ril) in r.row(i).iter().enumerate() {
                y.row_mut(j)[l] += wu * ril;
            }
        }
    }
    y
}

/// `u_ij` for every intent/query pair.
fn query_values(dbms: &StrategyMatrix, r: &EffectivenessMatrix) -> Matrix {
    let mut u = Matrix::zeros(r.intents(), dbms.rows());
    for i in 0..r.intents() {
        for j in 0..dbms.rows() {
            u.set(i, j, intent_query_reward(dbms, r, i, j));
        }
    }
    u
}

/// Pure results maximizing `sum_i prior_i U_ij r_il`, ties kept.
pub fn best_replies(
    user: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
    j: usize,
) -> Result<Vec<usize>> {
    check_index("query", j, user.cols())?;
    if prior.len() != user.rows() || r.intents() != user.rows() {
        return Err(Error::Dimension {
            what: "prior/effectiveness",
            expected: format!("{} intents", user.rows()),
            found: format!("{} / {}", prior.len(), r.intents()),
        });
    }
    let values = (0..r.results()).map(|l| {
        (0..user.rows())
            .map(|i| prior.weight(i) * user.get(i, j) * r.get(i, l))
            .sum::<f64>()
    });
    Ok(argmax_set(values.collect::<Vec<_>>().into_iter()))
}

/// Queries maximizing `u_r(e_i, q_k)` over `k`, ties kept.
pub fn best_queries(dbms: &StrategyMatrix, r: &EffectivenessMatrix, i: usize) -> Result<Vec<usize>> {
    check_index("intent", i, r.intents())?;
    let values: Vec<f64> = (0..dbms.rows()).map(|j| intent_query_reward(dbms, r, i, j)).collect();
    Ok(argmax_set(values.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponseCheck {
    pub holds: bool,
    /// Queries whose reply puts mass outside the best-reply set.
    pub violating_queries: Vec<usize>,
}

/// `D` is a best response to `U` iff every row of `D` is supported on best replies.
pub fn is_best_response(
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
) -> Result<BestResponseCheck> {
    check_shapes(user, dbms, prior, r)?;
    let y = reply_values(user, prior, r);
    let violating_queries: Vec<usize> = (0..dbms.rows())
        .filter(|&j| {
            let best = argmax_set(y.row(j).iter().copied());
            dbms.row(j)
                .iter()
                .enumerate()
                .any(|(l, &p)| p > EPS_SUPPORT && !best.contains(&l))
        })
        .collect();
    Ok(BestResponseCheck {
        holds: violating_queries.is_empty(),
        violating_queries,
    })
}

/// Strict best response: each query has a unique best reply and `D` plays it with probability 1.
pub fn is_strict_best_response(
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
) -> Result<bool> {
    check_shapes(user, dbms, prior, r)?;
    let y = reply_values(user, prior, r);
    Ok((0..dbms.rows()).all(|j| {
        let best = argmax_set(y.row(j).iter().copied());
        best.len() == 1 && dbms.get(j, best[0]) == 1.0
    }))
}

/// The necessary conditions on a strict Nash profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StrictnessConditions {
    pub user_pure: bool,
    /// Every query is used by some intent.
    pub user_onto: bool,
    pub dbms_pure: bool,
    /// No result answers two different queries.
    pub dbms_one_to_one: bool,
}

impl StrictnessConditions {
    pub fn of(profile: &StrategyProfile) -> Self {
        let (user, dbms) = (&profile.user, &profile.dbms);
        let user_onto = (0..user.cols()).all(|j| (0..user.rows()).any(|i| user.get(i, j) > EPS_SUPPORT));
        let dbms_one_to_one =
            (0..dbms.cols()).all(|l| (0..dbms.rows()).filter(|&j| dbms.get(j, l) > EPS_SUPPORT).count() <= 1);
        Self {
            user_pure: user.is_pure(),
            user_onto,
            dbms_pure: dbms.is_pure(),
            dbms_one_to_one,
        }
    }

    pub fn all(&self) -> bool {
        self.user_pure && self.user_onto && self.dbms_pure && self.dbms_one_to_one
    }
}

/// Classification of one profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub payoff: f64,
    pub is_nash: bool,
    pub is_strict_nash: bool,
    /// Payoff gained by the best pure unilateral user deviation (never negative).
    pub best_user_deviation_gain: f64,
    /// Payoff gained by the best pure unilateral DBMS deviation (never negative).
    pub best_dbms_deviation_gain: f64,
    /// Best pure user deviation: the query each intent would switch to.
    pub user_witness: Vec<usize>,
    /// Best pure DBMS deviation: the result each query would switch to.
    pub dbms_witness: Vec<usize>,
    /// Verdict from the characterization: every pooled intent uses a best
    /// query and `D` is a best response.
    pub characterization_nash: bool,
    pub characterization_agrees: bool,
    /// Intents with positive weight whose best achievable reward under `D`
    /// is 0. They satisfy the best-query condition trivially and are exempt
    /// from the strict user-deviation margin.
    pub zero_payoff_intents: Vec<usize>,
    /// Smallest payoff loss over pure single-row user deviations.
    pub user_strict_margin: f64,
    /// Smallest payoff loss over pure single-row DBMS deviations.
    pub dbms_strict_margin: f64,
    /// Both margins exceed [`EPS_NASH`].
    pub strict_deviation_test: bool,
    pub conditions: StrictnessConditions,
}

/// Row margin: current row value minus the best value of any other pure row.
fn row_margin(row: &[f64], values: &[f64]) -> f64 {
    let current: f64 = row.iter().zip(values).map(|(p, v)| p * v).sum();
    let pure_at = row.iter().position(|&p| p == 1.0);
    let best_other = values
        .iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != pure_at)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    current - best_other
}

fn analyze(profile: &StrategyProfile, prior: &IntentWeights, r: &EffectivenessMatrix) -> Result<EquilibriumReport> {
    let (user, dbms) = (&profile.user, &profile.dbms);
    check_shapes(user, dbms, prior, r)?;
    let u = query_values(dbms, r);
    let y = reply_values(user, prior, r);

    let mut user_gain = 0.0;
    let mut user_witness = Vec::with_capacity(user.rows());
    let mut zero_payoff_intents = Vec::new();
    let mut user_margin = f64::INFINITY;
    let mut pools_use_best_queries = true;
    for i in 0..user.rows() {
        let values = u.row(i);
        let best = argmax_set(values.iter().copied());
        user_witness.push(best[0]);
        let w = prior.weight(i);
        if w <= 0.0 {
            continue;
        }
        let best_value = values[best[0]];
        let current: f64 = user.row(i).iter().zip(values).map(|(p, v)| p * v).sum();
        user_gain += w * (best_value - current).max(0.0);
        if best_value <= EPS_NASH {
            zero_payoff_intents.push(i);
            continue;
        }
        if (0..user.cols()).any(|j| user.get(i, j) > EPS_SUPPORT && !best.contains(&j)) {
            pools_use_best_queries = false;
        }
        user_margin = user_margin.min(w * row_margin(user.row(i), values));
    }

    let mut dbms_gain = 0.0;
    let mut dbms_witness = Vec::with_capacity(dbms.rows());
    let mut dbms_margin = f64::INFINITY;
    let mut replies_are_best = true;
    for j in 0..dbms.rows() {
        let values = y.row(j);
        let best = argmax_set(values.iter().copied());
        dbms_witness.push(best[0]);
        let current: f64 = dbms.row(j).iter().zip(values).map(|(p, v)| p * v).sum();
        dbms_gain += (values[best[0]] - current).max(0.0);
        if dbms
            .row(j)
            .iter()
            .enumerate()
            .any(|(l, &p)| p > EPS_SUPPORT && !best.contains(&l))
        {
            replies_are_best = false;
        }
        dbms_margin = dbms_margin.min(row_margin(dbms.row(j), values));
    }

    let payoff: f64 = (0..user.rows())
        .map(|i| prior.weight(i) * user.row(i).iter().zip(u.row(i)).map(|(p, v)| p * v).sum::<f64>())
        .sum();
    let is_nash = user_gain <= EPS_NASH && dbms_gain <= EPS_NASH;
    let characterization_nash = pools_use_best_queries && replies_are_best;
    let conditions = StrictnessConditions::of(profile);
    let strict_deviation_test = user_margin > EPS_NASH && dbms_margin > EPS_NASH;
    Ok(EquilibriumReport {
        payoff,
        is_nash,
        is_strict_nash: is_nash && strict_deviation_test && conditions.all(),
        best_user_deviation_gain: user_gain,
        best_dbms_deviation_gain: dbms_gain,
        user_witness,
        dbms_witness,
        characterization_nash,
        characterization_agrees: characterization_nash == is_nash,
        zero_payoff_intents,
        user_strict_margin: user_margin,
        dbms_strict_margin: dbms_margin,
        strict_deviation_test,
        conditions,
    })
}

/// Nash test by pure unilateral deviations, cross-checked against the
/// best-query / best-response characterization.
pub fn check_nash(profile: &StrategyProfile, game: &GameConfig) -> Result<EquilibriumReport> {
    analyze(profile, &game.prior, &game.effectiveness)
}

/// Strict Nash test. The returned report also carries the purity, onto and
/// one-to-one conditions separately.
pub fn check_strict_nash(profile: &StrategyProfile, game: &GameConfig) -> Result<EquilibriumReport> {
    analyze(profile, &game.prior, &game.effectiveness)
}

/// Like [`check_nash`] with an explicit prior and reward matrix.
pub fn analyze_profile(
    profile: &StrategyProfile,
    prior: &IntentWeights,
    r: &EffectivenessMatrix,
) -> Result<EquilibriumReport> {
    analyze(profile, prior, r)
}

/// A pure profile found by enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumeratedProfile {
    /// Query chosen by each intent.
    pub user: Vec<usize>,
    /// Result chosen for each query.
    pub dbms: Vec<usize>,
    pub report: EquilibriumReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumeration {
    pub profiles_examined: u128,
    /// All pure Nash profiles, in enumeration order.
    pub nash: Vec<EnumeratedProfile>,
    /// Indices into `nash` of the strict ones.
    pub strict_nash: Vec<usize>,
    pub optimal_payoff: f64,
    /// Every pure profile attaining `optimal_payoff` (within [`EPS_NASH`]).
    pub optimal: Vec<EnumeratedProfile>,
    /// Every optimal profile is Nash, as an optimum of a common-interest game must be.
    pub optimal_all_nash: bool,
}

impl Enumeration {
    pub fn strict_profiles(&self) -> impl Iterator<Item = &EnumeratedProfile> {
        self.strict_nash.iter().map(move |&k| &self.nash[k])
    }
}

/// Number of pure profiles `n^m * o^n`, saturating.
pub fn pure_profile_count(m: usize, n: usize, o: usize) -> u128 {
    let pow = |base: usize, exp: usize| -> u128 {
        let mut acc: u128 = 1;
        for _ in 0..exp {
            acc = acc.saturating_mul(base as u128);
        }
        acc
    };
    pow(n, m).saturating_mul(pow(o, n))
}

/// Advances a mixed-radix counter; false once it wraps around.
fn next_assignment(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Classifies every pure profile of `game`.
pub fn enumerate_pure_equilibria(game: &GameConfig, budget: u128) -> Result<Enumeration> {
    let (m, n, o) = (game.intents(), game.queries(), game.results());
    let required = pure_profile_count(m, n, o);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut nash = Vec::new();
    let mut strict_nash = Vec::new();
    let mut optimal: Vec<EnumeratedProfile> = Vec::new();
    let mut optimal_payoff = f64::NEG_INFINITY;
    let mut examined: u128 = 0;

    let mut user_digits = vec![0usize; m];
    loop {
        let user = StrategyMatrix::pure(&user_digits, n)?;
        let mut dbms_digits = vec![0usize; n];
        loop {
            let profile = StrategyProfile {
                user: user.clone(),
                dbms: StrategyMatrix::pure(&dbms_digits, o)?,
            };
            let report = check_nash(&profile, game)?;
            examined += 1;
            let entry = || EnumeratedProfile {
                user: user_digits.clone(),
                dbms: dbms_digits.clone(),
                report: report.clone(),
            };
            if report.payoff > optimal_payoff + EPS_NASH {
                optimal_payoff = report.payoff;
                optimal.clear();
                optimal.push(entry());
            } else if report.payoff >= optimal_payoff - EPS_NASH {
                optimal.push(entry());
            }
            if report.is_nash {
                if report.is_strict_nash {
                    strict_nash.push(nash.len());
                }
                nash.push(entry());
            }
            if !next_assignment(&mut dbms_digits, o) {
                break;
            }
        }
        if !next_assignment(&mut user_digits, n) {
            break;
        }
    }
    // Ties admitted early may fall below the final optimum.
    optimal.retain(|p| p.report.payoff >= optimal_payoff - EPS_NASH);
    let optimal_all_nash = optimal.iter().all(|p| p.report.is_nash);
    Ok(Enumeration {
        profiles_examined: examined,
        nash,
        strict_nash,
        optimal_payoff,
        optimal,
        optimal_all_nash,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityCheck {
    pub is_optimal: bool,
    pub payoff: f64,
    pub optimal_payoff: f64,
    pub optimal_profiles_all_nash: bool,
}

/// Optimal iff the payoff reaches the maximum over pure profiles; by
/// bilinearity no mixed profile does better.
pub fn check_optimal(profile: &StrategyProfile, game: &GameConfig, budget: u128) -> Result<OptimalityCheck> {
    let payoff = game.payoff(&profile.user, &profile.dbms)?;
    let enumeration = enumerate_pure_equilibria(game, budget)?;
    Ok(OptimalityCheck {
        is_optimal: payoff >= enumeration.optimal_payoff - EPS_NASH,
        payoff,
        optimal_payoff: enumeration.optimal_payoff,
        optimal_profiles_all_nash: enumeration.optimal_all_nash,
    })
}

/// Blend weights `k/(samples-1)` for `k = 0..samples`; a single sample uses 1/2.
pub fn blend_weights(samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.5],
        s => (0..s).map(|k| k as f64 / (s - 1) as f64).collect(),
    }
}

/// For two Nash profiles `(U, D)` and `(U, D')`, checks that every sampled
/// blend `(U, aD + (1-a)D')` keeps the payoff and stays Nash.
pub fn nash_convexity_witness(
    user: &StrategyMatrix,
    dbms: &StrategyMatrix,
    other_dbms: &StrategyMatrix,
    game: &GameConfig,
    samples: usize,
) -> Result<bool> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one blend sample is needed".into()));
    }
    let first = check_nash(&StrategyProfile::new(user.clone(), dbms.clone()), game)?;
    let second = check_nash(&StrategyProfile::new(user.clone(), other_dbms.clone()), game)?;
    if !first.is_nash || !second.is_nash {
        return Err(Error::Precondition(format!(
            "both endpoint profiles must be Nash (first: {}, second: {})",
            first.is_nash, second.is_nash
        )));
    }
    for alpha in blend_weights(samples) {
        let blended = StrategyProfile::new(user.clone(), dbms.blend(other_dbms, alpha)?);
        let report = check_nash(&blended, game)?;
        if (report.payoff - first.payoff).abs() > EPS_NASH || !report.is_nash {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_game(m: usize) -> GameConfig {
        GameConfig::new(
            IntentWeights::uniform(m).unwrap(),
            EffectivenessMatrix::identity(m),
            StrategyMatrix::uniform(m, m).unwrap(),
            StrategyMatrix::uniform(m, m).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pools() {
        let u = StrategyMatrix::pure(&[1, 1, 1], 2).unwrap();
        assert_eq!(intent_pool(&u, 1).unwrap(), vec![0, 1, 2]);
        assert!(intent_pool(&u, 0).unwrap().is_empty());
        let bij = StrategyMatrix::pure(&[1, 0], 2).unwrap();
        assert_eq!(intent_pool(&bij, 0).unwrap(), vec![1]);
        assert!(intent_pool(&bij, 2).is_err());
    }

    #[test]
    fn intent_query_payoff_cases() {
        let r = EffectivenessMatrix::from_rows(&[vec![0.2, 0.4, 0.6]], false).unwrap();
        let profile = StrategyProfile::new(
            StrategyMatrix::uniform(1, 2).unwrap(),
            StrategyMatrix::from_rows(&[vec![1.0 / 3.0; 3], vec![0.0, 1.0, 0.0]]).unwrap(),
        );
        assert!((payoff_of_intent_with_query(&profile, &r, 0, 0).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(payoff_of_intent_with_query(&profile, &r, 0, 1).unwrap(), 0.4);
        assert!(payoff_of_intent_with_query(&profile, &r, 1, 0).is_err());
    }

    #[test]
    fn constant_reward_column_ties_everything() {
        let r = EffectivenessMatrix::from_rows(&[vec![0.5, 0.5, 0.5], vec![0.1, 0.1, 0.1]], false).unwrap();
        let u = StrategyMatrix::uniform(2, 2).unwrap();
        let prior = IntentWeights::uniform(2).unwrap();
        assert_eq!(best_replies(&u, &prior, &r, 0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn dominated_reply_is_not_best_response() {
        let r = EffectivenessMatrix::identity(2);
        let prior = IntentWeights::uniform(2).unwrap();
        let u = StrategyMatrix::pure(&[0, 1], 2).unwrap();
        let d = StrategyMatrix::pure(&[1, 1], 2).unwrap();
        let check = is_best_response(&u, &d, &prior, &r).unwrap();
        assert!(!check.holds);
        assert_eq!(check.violating_queries, vec![0]);
        let matched = StrategyMatrix::pure(&[0, 1], 2).unwrap();
        assert!(is_strict_best_response(&u, &matched, &prior, &r).unwrap());
    }

    #[test]
    fn identity_game_matched_permutations() {
        let game = identity_game(2);
        let enumeration = enumerate_pure_equilibria(&game, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(enumeration.profiles_examined, 16);
        let strict: Vec<_> = enumeration.strict_profiles().collect();
        assert_eq!(strict.len(), 2);
        for p in &strict {
            assert!((p.report.payoff - 1.0).abs() < 1e-12);
            // D inverts U.
            for (i, &j) in p.user.iter().enumerate() {
                assert_eq!(p.dbms[j], i);
            }
        }
        assert!((enumeration.optimal_payoff - 1.0).abs() < 1e-12);
        assert!(enumeration.optimal_all_nash);
        let matched = StrategyProfile::pure(&[1, 0], &[1, 0], 2).unwrap();
        assert!(
            check_optimal(&matched, &game, DEFAULT_ENUMERATION_BUDGET)
                .unwrap()
                .is_optimal
        );
    }

    #[test]
    fn budget_refusal_reports_requirement() {
        let game = identity_game(3);
        match enumerate_pure_equilibria(&game, 100) {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(required, 27 * 27);
                assert_eq!(budget, 100);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn mixed_rows_are_never_strict() {
        let game = identity_game(2);
        let profile = StrategyProfile::new(
            StrategyMatrix::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap(),
            StrategyMatrix::pure(&[0, 1], 2).unwrap(),
        );
        let report = check_strict_nash(&profile, &game).unwrap();
        assert!(!report.is_strict_nash);
        assert!(!report.conditions.user_pure);
    }

    #[test]
    fn convexity_witness_needs_nash_endpoints() {
        let game = identity_game(2);
        let u = StrategyMatrix::pure(&[0, 1], 2).unwrap();
        let d = StrategyMatrix::pure(&[0, 1], 2).unwrap();
        assert!(nash_convexity_witness(&u, &d, &d, &game, 5).unwrap());
        let swapped = StrategyMatrix::pure(&[1, 0], 2).unwrap();
        assert!(matches!(
            nash_convexity_witness(&u, &d, &swapped, &game, 5),
            Err(Error::Precondition(_))
        ));
        assert!(nash_convexity_witness(&u, &d, &d, &game, 0).is_err());
    }

    #[test]
    fn blend_weights_cover_endpoints() {
        assert_eq!(blend_weights(3), vec![0.0, 0.5, 1.0]);
        assert_eq!(blend_weights(11).len(), 11);
        assert_eq!(blend_weights(1), vec![0.5]);
    }
}
