//! Query logs with graded relevance judgments, replay of the logged
//! interactions, and model fitting against them.
//!
//! The intent behind a query is the set of results judged relevant to it
//! (nonzero grade). Queries with the same set share an intent. The reward of
//! an interaction is the NDCG of the list that was displayed.

mod fit;
mod synthetic;

pub use fit::{
    evaluate_msd, evaluate_rows, fit_models, one_step_sse, split_events, squared_distance, train_rows, Coverage,
    FitCounts, FitReport, GridEvaluator, ModelFit, MsdSummary, ParamGrid, SequentialEvaluator, Split, TestScope,
    TrainedStrategy, MSD_NORMALIZATION,
};
pub use synthetic::{generate_synthetic_log, GeneratorDbms, GeneratorUser, SyntheticConfig, SyntheticLog};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ndcg_of_grades, Grade};

/// Results shown per record unless configured otherwise.
pub const DEFAULT_RESULTS_PER_RECORD: usize = 10;

/// One logged interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogRecord {
    pub query_id: String,
    pub cookie_id: String,
    pub timestamp: i64,
    /// Displayed result ids, best first.
    pub results: Vec<String>,
    /// Clicked positions, 0-based.
    pub clicks: Vec<usize>,
}

/// Every record shows exactly `k` results and clicks point into them.
pub fn validate_log(records: &[LogRecord], k: usize) -> Result<()> {
    for (n, rec) in records.iter().enumerate() {
        if rec.results.len() != k {
            return Err(Error::Dimension {
                what: "log record results",
                expected: format!("{k}"),
                found: format!("{} in record {n} (query {})", rec.results.len(), rec.query_id),
            });
        }
        if let Some(&c) = rec.clicks.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidValue(format!(
                "record {n}: click position {c} beyond {k} results"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RelevanceJudgment {
    pub query_id: String,
    pub result_id: String,
    pub score: u8,
}

/// Grades indexed by query then result.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Judgments {
    by_query: BTreeMap<String, BTreeMap<String, Grade>>,
}

impl Judgments {
    /// Repeated pairs must agree on the score.
    pub fn new(judgments: impl IntoIterator<Item = RelevanceJudgment>) -> Result<Self> {
        let mut by_query: BTreeMap<String, BTreeMap<String, Grade>> = BTreeMap::new();
        for j in judgments {
            let grade = Grade::new(j.score)?;
            let row = by_query.entry(j.query_id.clone()).or_default();
            if let Some(&old) = row.get(&j.result_id) {
                if old != grade {
                    return Err(Error::InvalidValue(format!(
                        "conflicting scores {} and {} for query {} result {}",
                        old.value(),
                        j.score,
                        j.query_id,
                        j.result_id
                    )));
                }
            }
            row.insert(j.result_id, grade);
        }
        Ok(Self { by_query })
    }

    pub fn covers(&self, query_id: &str) -> bool {
        self.by_query.contains_key(query_id)
    }

    /// Missing pairs count as not relevant.
    pub fn grade(&self, query_id: &str, result_id: &str) -> Grade {
        self.by_query
            .get(query_id)
            .and_then(|row| row.get(result_id))
            .copied()
            .unwrap_or(Grade::new(0).expect("0 is a grade"))
    }

    /// Judged query ids, sorted.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(String::as_str)
    }

    /// Results with a nonzero grade for `query_id`.
    pub fn relevant(&self, query_id: &str) -> BTreeSet<String> {
        self.by_query
            .get(query_id)
            .map(|row| {
                row.iter()
                    .filter(|(_, g)| g.value() > 0)
                    .map(|(r, _)| r.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// All judgments, sorted by query then result.
    pub fn to_vec(&self) -> Vec<RelevanceJudgment> {
        self.by_query
            .iter()
            .flat_map(|(q, row)| {
                row.iter().map(move |(r, g)| RelevanceJudgment {
                    query_id: q.clone(),
                    result_id: r.clone(),
                    score: g.value(),
                })
            })
            .collect()
    }
}

/// Intent of every usable query in a log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntentMap {
    /// Intent sets in sorted order; the position is the intent index.
    pub intents: Vec<BTreeSet<String>>,
    pub query_intent: BTreeMap<String, usize>,
    /// Queries judged but with no relevant result.
    pub dropped_empty: Vec<String>,
    /// Queries without any judgment.
    pub dropped_uncovered: Vec<String>,
}

impl IntentMap {
    /// Queries grouped by intent, each group sorted.
    pub fn queries_by_intent(&self) -> Vec<Vec<String>> {
        let mut groups: Vec<Vec<String>> = alloc::vec![Vec::new(); self.intents.len()];
        for (q, &i) in &self.query_intent {
            groups[i].push(q.clone());
        }
        groups
    }
}

/// Maps each distinct logged query to the set of results it has nonzero grades for.
/// Indices follow the sorted order of the sets, so they do not depend on log order.
pub fn derive_intents(log: &[LogRecord], judgments: &Judgments) -> IntentMap {
    let queries: BTreeSet<&str> = log.iter().map(|r| r.query_id.as_str()).collect();
    let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut dropped_empty = Vec::new();
    let mut dropped_uncovered = Vec::new();
    for q in queries {
        if !judgments.covers(q) {
            dropped_uncovered.push(q.into());
            continue;
        }
        let set = judgments.relevant(q);
        if set.is_empty() {
            dropped_empty.push(q.into());
        } else {
            sets.insert(q.into(), set);
        }
    }
    let intents: Vec<BTreeSet<String>> = sets.values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let query_intent = sets
        .into_iter()
        .map(|(q, set)| {
            let i = intents.binary_search(&set).expect("every set was collected");
            (q, i)
        })
        .collect();
    IntentMap {
        intents,
        query_intent,
        dropped_empty,
        dropped_uncovered,
    }
}

/// NDCG of the displayed list under the query's judgments, over the whole list.
pub fn event_reward(record: &LogRecord, judgments: &Judgments) -> f64 {
    let grades: Vec<Grade> = record
        .results
        .iter()
        .map(|r| judgments.grade(&record.query_id, r))
        .collect();
    ndcg_of_grades(&grades, grades.len())
}

/// One replayable interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub intent: usize,
    /// Global query index.
    pub query: usize,
    /// Position of the query among its intent's candidate queries.
    pub local_query: usize,
    pub reward: f64,
    pub cookie: usize,
}

/// Which queries count as an intent's candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateScope {
    /// Queries that appear in the log.
    #[default]
    Logged,
    /// Logged queries plus judged queries whose relevant set is a logged intent.
    Judged,
}

/// A log resolved into intent/query indices and rewards, in timestamp order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Workload {
    pub intent_map: IntentMap,
    /// Sorted query ids; the position is the global query index.
    pub query_ids: Vec<String>,
    /// Candidate queries of each intent: every query of that intent seen anywhere
    /// in the log, plus judged-only queries under [`CandidateScope::Judged`].
    pub intent_queries: Vec<Vec<usize>>,
    pub cookie_ids: Vec<String>,
    pub events: Vec<Event>,
    /// Records dropped because their query has no usable intent.
    pub skipped_records: usize,
}

impl Workload {
    /// Sorts the log by timestamp (stably) and resolves every usable record.
    pub fn build(log: &[LogRecord], judgments: &Judgments) -> Self {
        Self::build_scoped(log, judgments, CandidateScope::Logged)
    }

    pub fn build_scoped(log: &[LogRecord], judgments: &Judgments, scope: CandidateScope) -> Self {
        let mut intent_map = derive_intents(log, judgments);
        if scope == CandidateScope::Judged {
            let extra: Vec<(String, usize)> = judgments
                .queries()
                .filter(|q| !intent_map.query_intent.contains_key(*q))
                .filter_map(|q| {
                    let set = judgments.relevant(q);
                    intent_map.intents.binary_search(&set).ok().map(|i| (q.into(), i))
                })
                .collect();
            intent_map.query_intent.extend(extra);
        }
        let query_ids: Vec<String> = intent_map.query_intent.keys().cloned().collect();
        let mut intent_queries: Vec<Vec<usize>> = alloc::vec![Vec::new(); intent_map.intents.len()];
        let mut local = Vec::with_capacity(query_ids.len());
        for (g, q) in query_ids.iter().enumerate() {
            let i = intent_map.query_intent[q];
            local.push(intent_queries[i].len());
            intent_queries[i].push(g);
        }
        let cookie_ids: Vec<String> = log
            .iter()
            .map(|r| r.cookie_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut order: Vec<&LogRecord> = log.iter().collect();
        order.sort_by_key(|r| r.timestamp);
        let mut events = Vec::with_capacity(order.len());
        let mut skipped_records = 0;
        for rec in order {
            let Ok(query) = query_ids.binary_search(&rec.query_id) else {
                skipped_records += 1;
                continue;
            };
            events.push(Event {
                intent: intent_map.query_intent[&rec.query_id],
                query,
                local_query: local[query],
                reward: event_reward(rec, judgments),
                cookie: cookie_ids.binary_search(&rec.cookie_id).expect("collected above"),
            });
        }
        Self {
            intent_map,
            query_ids,
            intent_queries,
            cookie_ids,
            events,
            skipped_records,
        }
    }

    pub fn intents(&self) -> usize {
        self.intent_queries.len()
    }

    pub fn candidate_count(&self, intent: usize) -> usize {
        self.intent_queries[intent].len()
    }
}
