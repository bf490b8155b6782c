//! Grid-search fitting of the user models on a replayed log and
//! mean-squared-distance evaluation of the trained strategies.
//!
//! Each intent is replayed by its own `1 x n_i` learner over the intent's
//! candidate queries, starting uniform.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize, Serializer};

use super::{Event, Workload};
use crate::error::{Error, Result};
use crate::matrix::StrategyMatrix;
use crate::user_learning::{ModelParams, Param, UserLearnerState, UserModel};

/// How per-event distances are normalized; carried into every report.
pub const MSD_NORMALIZATION: &str =
    "per event: sum over the intent's candidate queries of (U_ij - [j observed])^2, divided by their count";

/// `(1/n) sum_j (row_j - [j == observed])^2`.
pub fn squared_distance(row: &[f64], observed: usize) -> f64 {
    let n = row.len() as f64;
    row.iter()
        .enumerate()
        .map(|(j, &p)| {
            let d = p - if j == observed { 1.0 } else { 0.0 };
            d * d
        })
        .sum::<f64>()
        / n
}

/// Candidate values per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    axes: BTreeMap<Param, Vec<f64>>,
}

impl Default for ParamGrid {
    /// Every fitted parameter over `0, 0.01, ..., 1`.
    fn default() -> Self {
        Self::uniform(100)
    }
}

impl ParamGrid {
    /// `k / steps` for `k = 0..=steps` on every fitted parameter.
    pub fn uniform(steps: u32) -> Self {
        let values: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        let axes = [
            Param::AlphaBm,
            Param::AlphaC,
            Param::BetaC,
            Param::Sigma,
            Param::Epsilon,
            Param::WslrThreshold,
        ]
        .into_iter()
        .map(|p| (p, values.clone()))
        .collect();
        Self { axes }
    }

    pub fn set_axis(&mut self, p: Param, values: Vec<f64>) {
        self.axes.insert(p, values);
    }

    pub fn axis(&self, p: Param) -> &[f64] {
        self.axes.get(&p).map_or(&[], Vec::as_slice)
    }

    /// Cartesian product over the model's fitted parameters, first parameter
    /// varying slowest. Models without parameters yield `base` alone.
    pub fn points(&self, model: UserModel, base: ModelParams) -> Result<Vec<ModelParams>> {
        let mut points = vec![base];
        for &p in model.fitted_parameters() {
            let values = self.axis(p);
            if values.is_empty() {
                return Err(Error::InvalidArgument(format!("empty grid for {}", p.name())));
            }
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidArgument(format!(
                    "grid value {v} for {} outside [0, 1]",
                    p.name()
                )));
            }
            points = points
                .into_iter()
                .flat_map(|pt| values.iter().map(move |&v| pt.with(p, v)))
                .collect();
        }
        Ok(points)
    }
}

/// Scores grid points; implementations may run them concurrently.
pub trait GridEvaluator {
    fn evaluate(&self, points: usize, score: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>>;
}

pub struct SequentialEvaluator;

impl GridEvaluator for SequentialEvaluator {
    fn evaluate(&self, points: usize, score: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
        (0..points).map(score).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FitCounts {
    /// Events used for the grid search.
    pub param_fit: usize,
    /// Events replayed after the grid-search window to train each model.
    pub train: usize,
    /// Test events taken after training.
    pub test: usize,
    /// Which post-training events count toward `test`.
    pub test_scope: TestScope,
    /// Train from the state left by replaying the grid-search window
    /// instead of from a uniform start.
    pub warm_start: bool,
}

impl Default for FitCounts {
    fn default() -> Self {
        Self {
            param_fit: 500,
            train: 10_000,
            test: 500,
            test_scope: TestScope::FirstPerIntent,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestScope {
    /// Each distinct intent's first event after training.
    #[default]
    FirstPerIntent,
    /// Every event after training.
    AllEvents,
}

/// Consecutive windows of the event stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Split<'a> {
    pub fit: &'a [Event],
    pub train: &'a [Event],
    pub test: Vec<Event>,
}

/// `fit` then `train` windows; the test set takes, for up to `test` distinct
/// intents, their first event after the training window.
pub fn split_events(events: &[Event], counts: FitCounts) -> Result<Split<'_>> {
    let fit_end = counts.param_fit.min(events.len());
    let train_end = (counts.param_fit + counts.train).min(events.len());
    let mut seen = BTreeSet::new();
    let mut test = Vec::new();
    for e in &events[train_end..] {
        if test.len() == counts.test {
            break;
        }
        if counts.test_scope == TestScope::AllEvents || seen.insert(e.intent) {
            test.push(*e);
        }
    }
    Ok(Split {
        fit: &events[..fit_end],
        train: &events[fit_end..train_end],
        test,
    })
}

fn fresh_learners(workload: &Workload, model: UserModel, params: ModelParams) -> Result<Vec<UserLearnerState>> {
    (0..workload.intents())
        .map(|i| UserLearnerState::uniform(model, 1, workload.candidate_count(i), params))
        .collect()
}

/// Replays `events`, calling `observe(prediction_row, event)` before each update.
fn replay(learners: &mut [UserLearnerState], events: &[Event], mut observe: impl FnMut(&[f64], &Event)) -> Result<()> {
    for e in events {
        let learner = &mut learners[e.intent];
        observe(learner.probabilities(0), e);
        learner.update(0, e.local_query, e.reward)?;
    }
    Ok(())
}

/// Sum over `events` of the squared distance between the predicted row and
/// the observed query, each taken just before the update.
pub fn one_step_sse(workload: &Workload, model: UserModel, params: ModelParams, events: &[Event]) -> Result<f64> {
    let mut learners = fresh_learners(workload, model, params)?;
    let mut sse = 0.0;
    replay(&mut learners, events, |row, e| {
        sse += row
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let d = p - if j == e.local_query { 1.0 } else { 0.0 };
                d * d
            })
            .sum::<f64>();
    })?;
    Ok(sse)
}

/// Per-intent rows over the candidate queries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainedStrategy {
    pub rows: Vec<Vec<f64>>,
}

impl TrainedStrategy {
    pub fn row(&self, intent: usize) -> &[f64] {
        &self.rows[intent]
    }
}

/// Replays `warmup` then `train` from uniform learners. Returns the final rows
/// and the distances observed over `train`.
pub fn train_rows(
    workload: &Workload,
    model: UserModel,
    params: ModelParams,
    warmup: &[Event],
    train: &[Event],
) -> Result<(TrainedStrategy, Vec<f64>)> {
    let mut learners = fresh_learners(workload, model, params)?;
    replay(&mut learners, warmup, |_, _| {})?;
    let mut distances = Vec::with_capacity(train.len());
    replay(&mut learners, train, |row, e| {
        distances.push(squared_distance(row, e.local_query))
    })?;
    let rows = learners.iter().map(|l| l.probabilities(0).to_vec()).collect();
    Ok((TrainedStrategy { rows }, distances))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsdSummary {
    pub msd: f64,
    /// Population standard deviation of the per-event distances.
    pub std: f64,
    pub events: usize,
}

impl MsdSummary {
    pub fn of(distances: &[f64]) -> Result<Self> {
        if distances.is_empty() {
            return Err(Error::InvalidArgument(
                "mean squared distance of an empty event set".into(),
            ));
        }
        let n = distances.len() as f64;
        let msd = distances.iter().sum::<f64>() / n;
        let var = distances.iter().map(|d| (d - msd) * (d - msd)).sum::<f64>() / n;
        Ok(Self {
            msd,
            std: libm::sqrt(var),
            events: distances.len(),
        })
    }
}

/// MSD of a strategy matrix over `(intent, observed query)` pairs. Intents
/// beyond the matrix are predicted by a uniform row.
pub fn evaluate_msd(strategy: &StrategyMatrix, test: &[(usize, usize)]) -> Result<MsdSummary> {
    let n = strategy.cols();
    let uniform = vec![1.0 / n as f64; n];
    let distances: Vec<f64> = test
        .iter()
        .map(|&(i, j)| {
            if j >= n {
                return Err(Error::IndexOutOfRange {
                    what: "observed query",
                    index: j,
                    len: n,
                });
            }
            let row = if i < strategy.rows() {
                strategy.row(i)
            } else {
                &uniform[..]
            };
            Ok(squared_distance(row, j))
        })
        .collect::<Result<_>>()?;
    MsdSummary::of(&distances)
}

/// MSD of trained per-intent rows over test events.
pub fn evaluate_rows(strategy: &TrainedStrategy, test: &[Event]) -> Result<MsdSummary> {
    let distances: Vec<f64> = test
        .iter()
        .map(|e| squared_distance(strategy.row(e.intent), e.local_query))
        .collect();
    MsdSummary::of(&distances)
}

fn serialize_fitted<S: Serializer>(fitted: &[(Param, f64)], s: S) -> core::result::Result<S::Ok, S::Error> {
    s.collect_map(fitted.iter().map(|(p, v)| (p.name(), v)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub model: UserModel,
    #[serde(serialize_with = "serialize_fitted")]
    pub fitted: Vec<(Param, f64)>,
    #[serde(skip)]
    pub params: ModelParams,
    pub grid_points: usize,
    /// One-step SSE at the chosen parameters over the grid-search window.
    pub fit_sse: f64,
    /// One-step distances while training.
    pub train: Option<MsdSummary>,
    pub test: MsdSummary,
    #[serde(skip)]
    pub strategy: TrainedStrategy,
}

impl ModelFit {
    pub fn fitted_value(&self, p: Param) -> Option<f64> {
        self.fitted.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

/// Distinct intents, queries and users in a set of events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub events: usize,
    pub intents: usize,
    pub queries: usize,
    pub users: usize,
}

impl Coverage {
    pub fn of(events: &[Event]) -> Self {
        let distinct = |f: fn(&Event) -> usize| events.iter().map(f).collect::<BTreeSet<_>>().len();
        Self {
            events: events.len(),
            intents: distinct(|e| e.intent),
            queries: distinct(|e| e.query),
            users: distinct(|e| e.cookie),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub models: Vec<ModelFit>,
    pub counts: FitCounts,
    pub fit_coverage: Coverage,
    pub train_coverage: Coverage,
    pub test_coverage: Coverage,
    pub msd_normalization: &'static str,
}

impl FitReport {
    /// Models by ascending test MSD; ties keep input order.
    pub fn ranking(&self) -> Vec<&ModelFit> {
        let mut order: Vec<&ModelFit> = self.models.iter().collect();
        order.sort_by(|a, b| a.test.msd.total_cmp(&b.test.msd));
        order
    }

    pub fn get(&self, model: UserModel) -> Option<&ModelFit> {
        self.models.iter().find(|m| m.model == model)
    }
}

/// Grid-searches, trains and tests each model.
pub fn fit_models(
    workload: &Workload,
    models: &[UserModel],
    grid: &ParamGrid,
    base: ModelParams,
    counts: FitCounts,
    evaluator: &dyn GridEvaluator,
) -> Result<FitReport> {
    base.validate()?;
    let split = split_events(&workload.events, counts)?;
    if split.train.is_empty() {
        return Err(Error::InvalidArgument("the training window is empty".into()));
    }
    if split.test.is_empty() {
        return Err(Error::InvalidArgument("no events follow the training window".into()));
    }
    let mut fits = Vec::with_capacity(models.len());
    for &model in models {
        let points = grid.points(model, base)?;
        if points.len() > 1 && split.fit.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} has parameters to fit but the grid-search window is empty",
                model.name()
            )));
        }
        let scores = evaluator.evaluate(points.len(), &|k| one_step_sse(workload, model, points[k], split.fit))?;
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            if *s < scores[best] {
                best = k;
            }
        }
        let params = points[best];
        let warmup = if counts.warm_start { split.fit } else { &[] };
        let (strategy, train_distances) = train_rows(workload, model, params, warmup, split.train)?;
        fits.push(ModelFit {
            model,
            fitted: model.fitted_parameters().iter().map(|&p| (p, params.get(p))).collect(),
            params,
            grid_points: points.len(),
            fit_sse: scores[best],
            train: MsdSummary::of(&train_distances).ok(),
            test: evaluate_rows(&strategy, &split.test)?,
            strategy,
        });
    }
    Ok(FitReport {
        models: fits,
        counts,
        fit_coverage: Coverage::of(split.fit),
        train_coverage: Coverage::of(split.train),
        test_coverage: Coverage::of(&split.test),
        msd_normalization: MSD_NORMALIZATION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{IntentMap, Workload};
    use alloc::string::String;

    fn workload(intent_queries: Vec<Vec<usize>>, events: Vec<(usize, usize, f64)>) -> Workload {
        let mut local = BTreeMap::new();
        for qs in &intent_queries {
            for (k, &g) in qs.iter().enumerate() {
                local.insert(g, k);
            }
        }
        let events = events
            .into_iter()
            .map(|(intent, query, reward)| Event {
                intent,
                query,
                local_query: local[&query],
                reward,
                cookie: 0,
            })
            .collect();
        Workload {
            intent_map: IntentMap {
                intents: Vec::new(),
                query_intent: BTreeMap::new(),
                dropped_empty: Vec::new(),
                dropped_uncovered: Vec::new(),
            },
            query_ids: Vec::<String>::new(),
            intent_queries,
            cookie_ids: Vec::new(),
            events,
            skipped_records: 0,
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(squared_distance(&[0.5, 0.5], 0), 0.25);
        assert_eq!(squared_distance(&[0.0, 1.0, 0.0], 1), 0.0);
        let u = StrategyMatrix::uniform(2, 2).unwrap();
        let s = evaluate_msd(&u, &[(0, 0), (1, 1), (5, 0)]).unwrap();
        assert_eq!(s.msd, 0.25);
        assert_eq!(s.std, 0.0);
        assert!(evaluate_msd(&u, &[]).is_err());
        assert!(evaluate_msd(&u, &[(0, 2)]).is_err());
        let pure = StrategyMatrix::pure(&[1, 0], 2).unwrap();
        assert_eq!(evaluate_msd(&pure, &[(0, 1), (1, 0)]).unwrap().msd, 0.0);
    }

    #[test]
    fn grid_points() {
        let grid = ParamGrid::default();
        assert_eq!(
            grid.points(UserModel::RothErev, ModelParams::default()).unwrap().len(),
            1
        );
        let cross = grid.points(UserModel::Cross, ModelParams::default()).unwrap();
        assert_eq!(cross.len(), 101 * 101);
        assert_eq!((cross[102].alpha_c, cross[102].beta_c), (0.01, 0.01));
        let mut empty = ParamGrid::default();
        empty.set_axis(Param::Sigma, Vec::new());
        assert!(empty
            .points(UserModel::RothErevModified, ModelParams::default())
            .is_err());
        assert!(empty.points(UserModel::Cross, ModelParams::default()).is_ok());
    }

    #[test]
    fn split_takes_first_test_event_per_intent() {
        let w = workload(
            vec![vec![0, 1], vec![2]],
            vec![
                (0, 0, 0.5),
                (0, 1, 0.5),
                (1, 2, 0.5),
                (0, 1, 0.9),
                (0, 0, 0.1),
                (1, 2, 0.3),
            ],
        );
        let counts = FitCounts {
            param_fit: 1,
            train: 2,
            test: 10,
            test_scope: TestScope::FirstPerIntent,
            warm_start: false,
        };
        let s = split_events(&w.events, counts).unwrap();
        assert_eq!(s.fit.len(), 1);
        assert_eq!(s.train.len(), 2);
        assert_eq!(s.test.len(), 2);
        assert_eq!(s.test[0].reward, 0.9);
        assert_eq!(s.test[1].reward, 0.3);
    }

    #[test]
    fn single_training_event_touches_one_row() {
        let w = workload(vec![vec![0, 1], vec![2, 3]], vec![(1, 3, 0.7)]);
        let (strategy, _) = train_rows(&w, UserModel::RothErev, ModelParams::default(), &[], &w.events).unwrap();
        assert_eq!(strategy.row(0), &[0.5, 0.5]);
        assert!((strategy.row(1)[1] - 1.7 / 2.7).abs() < 1e-12);
    }

    #[test]
    fn parameterless_model_skips_search() {
        let w = workload(
            vec![vec![0, 1]],
            vec![(0, 0, 0.5), (0, 1, 0.2), (0, 0, 0.9), (0, 0, 0.4)],
        );
        let counts = FitCounts {
            param_fit: 0,
            train: 3,
            test: 1,
            test_scope: TestScope::FirstPerIntent,
            warm_start: false,
        };
        let report = fit_models(
            &w,
            &[UserModel::RothErev],
            &ParamGrid::default(),
            ModelParams::default(),
            counts,
            &SequentialEvaluator,
        )
        .unwrap();
        assert_eq!(report.models[0].grid_points, 1);
        assert!(report.models[0].fitted.is_empty());
        assert!(fit_models(
            &w,
            &[UserModel::Cross],
            &ParamGrid::default(),
            ModelParams::default(),
            counts,
            &SequentialEvaluator
        )
        .is_err());
    }

    #[test]
    fn grid_search_prefers_the_generating_rate() {
        // A WSLR user facing one good query: the threshold below every reward wins.
        let w = workload(
            vec![vec![0, 1]],
            vec![
                (0, 0, 0.8),
                (0, 0, 0.7),
                (0, 0, 0.9),
                (0, 0, 0.8),
                (0, 0, 0.6),
                (0, 0, 0.7),
            ],
        );
        let counts = FitCounts {
            param_fit: 4,
            train: 1,
            test: 1,
            test_scope: TestScope::FirstPerIntent,
            warm_start: true,
        };
        let report = fit_models(
            &w,
            &[UserModel::WinStayLoseRandomize],
            &ParamGrid::uniform(10),
            ModelParams::default(),
            counts,
            &SequentialEvaluator,
        )
        .unwrap();
        let fit = &report.models[0];
        assert!(fit.fitted_value(Param::WslrThreshold).unwrap() <= 0.7);
        assert_eq!(fit.test.msd, 0.0);
    }
}
