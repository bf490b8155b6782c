//! Synthetic query logs with a known generating user.
//!
//! Every intent owns a disjoint pool of documents, some graded 1..=4 and the
//! rest 0, and a handful of queries that all share the intent's judgments.
//! Each query has several candidate rankings of the pool whose quality
//! depends on the query, so some queries express the intent better than
//! others. Each round an intent is drawn uniformly, the user picks a query,
//! the DBMS picks one of the query's rankings and the user learns from its NDCG.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LogRecord, RelevanceJudgment};
use crate::dbms_learning::DbmsLearnerState;
use crate::error::{Error, Result};
use crate::metrics::{ndcg_of_grades, Grade};
use crate::rng::{sample_categorical, seed_stream};
use crate::user_learning::{ModelParams, UserLearnerState, UserModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorUser {
    Learning {
        model: UserModel,
        params: ModelParams,
    },
    /// Always the intent's first query.
    FixedPure,
    FixedUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorDbms {
    /// Rankings of a query are shown uniformly at random.
    #[default]
    Fixed,
    /// Roth-Erev over each query's rankings, reinforced with the NDCG.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub intents: usize,
    /// Inclusive range of queries per intent.
    pub queries_per_intent: (usize, usize),
    /// Inclusive range of documents graded 1..=4 per intent.
    pub relevant_per_intent: (usize, usize),
    /// Documents graded 0 per intent.
    pub irrelevant_per_intent: usize,
    pub results_per_record: usize,
    /// Candidate rankings per query.
    pub interpretations: usize,
    pub users: usize,
    pub dbms: GeneratorDbms,
    pub start_timestamp: i64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            intents: 100,
            queries_per_intent: (3, 5),
            relevant_per_intent: (4, 8),
            irrelevant_per_intent: 8,
            results_per_record: 10,
            interpretations: 4,
            users: 1000,
            dbms: GeneratorDbms::Fixed,
            start_timestamp: 1_279_000_000,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let (qmin, qmax) = self.queries_per_intent;
        let (rmin, rmax) = self.relevant_per_intent;
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("synthetic log: {msg}")));
        if self.intents == 0 {
            return bad("at least one intent is needed");
        }
        if qmin == 0 || qmin > qmax {
            return bad("queries per intent must be a nonempty range starting at 1 or more");
        }
        if rmin == 0 || rmin > rmax {
            return bad("relevant documents per intent must be a nonempty range starting at 1 or more");
        }
        if self.results_per_record == 0 || rmin + self.irrelevant_per_intent < self.results_per_record {
            return bad("every intent needs at least results_per_record documents");
        }
        if self.interpretations == 0 || self.users == 0 {
            return bad("interpretations and users must be positive");
        }
        Ok(())
    }
}

/// A generated log with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticLog {
    pub records: Vec<LogRecord>,
    pub judgments: Vec<RelevanceJudgment>,
    /// Generating intent of every query.
    pub query_intent: BTreeMap<String, usize>,
    /// Queries of each intent, in the generator's local order.
    pub intent_queries: Vec<Vec<String>>,
}

/// Bijective 64-bit mixer; distinct inputs give distinct ids.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn hex_id(kind: u64, counter: u64) -> String {
    format!("{:016x}", splitmix64((kind << 56) ^ counter))
}

struct Query {
    id: String,
    /// Each ranking as indices into the intent's pool.
    rankings: Vec<Vec<usize>>,
}

struct Intent {
    docs: Vec<(String, u8)>,
    queries: Vec<Query>,
}

fn build_world<R: Rng>(cfg: &SyntheticConfig, rng: &mut R) -> Vec<Intent> {
    let mut doc_counter = 0u64;
    let mut query_counter = 0u64;
    (0..cfg.intents)
        .map(|_| {
            let relevant = rng.random_range(cfg.relevant_per_intent.0..=cfg.relevant_per_intent.1);
            let mut docs: Vec<(String, u8)> = Vec::with_capacity(relevant + cfg.irrelevant_per_intent);
            for k in 0..relevant + cfg.irrelevant_per_intent {
                let grade = if k < relevant { rng.random_range(1..=4u8) } else { 0 };
                docs.push((hex_id(1, doc_counter), grade));
                doc_counter += 1;
            }
            let n = rng.random_range(cfg.queries_per_intent.0..=cfg.queries_per_intent.1);
            let queries = (0..n)
                .map(|_| {
                    let quality: f64 = rng.random();
                    let rankings = (0..cfg.interpretations)
                        .map(|_| ranking(&docs, quality, cfg.results_per_record, rng))
                        .collect();
                    let id = hex_id(2, query_counter);
                    query_counter += 1;
                    Query { id, rankings }
                })
                .collect();
            Intent { docs, queries }
        })
        .collect()
}

/// Top `k` of the pool under the key `quality * grade / 4 + (1 - quality) * noise`.
fn ranking<R: Rng>(docs: &[(String, u8)], quality: f64, k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(rng);
    let keys: Vec<f64> = order
        .iter()
        .map(|&d| quality * f64::from(docs[d].1) / 4.0 + (1.0 - quality) * rng.random::<f64>())
        .collect();
    let mut keyed: Vec<(f64, usize)> = keys.into_iter().zip(order).collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
    keyed.into_iter().take(k).map(|(_, d)| d).collect()
}

enum Chooser {
    Learning(Vec<UserLearnerState>),
    Pure,
    Uniform,
}

/// Plays `events` rounds on stream 0 of `seed`.
pub fn generate_synthetic_log(
    cfg: &SyntheticConfig,
    user: GeneratorUser,
    events: usize,
    seed: u64,
) -> Result<SyntheticLog> {
    cfg.validate()?;
    let mut rng = seed_stream(seed, 0);
    let world = build_world(cfg, &mut rng);

    let mut chooser = match user {
        GeneratorUser::Learning { model, params } => Chooser::Learning(
            world
                .iter()
                .map(|w| UserLearnerState::uniform(model, 1, w.queries.len(), params))
                .collect::<Result<_>>()?,
        ),
        GeneratorUser::FixedPure => Chooser::Pure,
        GeneratorUser::FixedUniform => Chooser::Uniform,
    };
    let mut dbms: Vec<Vec<DbmsLearnerState>> = match cfg.dbms {
        GeneratorDbms::Fixed => Vec::new(),
        GeneratorDbms::Adaptive => world
            .iter()
            .map(|w| {
                w.queries
                    .iter()
                    .map(|_| DbmsLearnerState::uniform(1, cfg.interpretations))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?,
    };
    let cookies: Vec<String> = (0..cfg.users as u64).map(|c| hex_id(3, c)).collect();

    let mut records = Vec::with_capacity(events);
    for t in 0..events {
        let i = rng.random_range(0..world.len());
        let intent = &world[i];
        let j = match &chooser {
            Chooser::Learning(states) => sample_categorical(states[i].probabilities(0), &mut rng)?,
            Chooser::Pure => 0,
            Chooser::Uniform => rng.random_range(0..intent.queries.len()),
        };
        let query = &intent.queries[j];
        let l = match cfg.dbms {
            GeneratorDbms::Fixed => rng.random_range(0..cfg.interpretations),
            GeneratorDbms::Adaptive => sample_categorical(dbms[i][j].strategy().row(0), &mut rng)?,
        };
        let shown = &query.rankings[l];
        let grades: Vec<Grade> = shown
            .iter()
            .map(|&d| Grade::new(intent.docs[d].1))
            .collect::<Result<_>>()?;
        let reward = ndcg_of_grades(&grades, grades.len());
        if let Chooser::Learning(states) = &mut chooser {
            states[i].update(0, j, reward)?;
        }
        if let GeneratorDbms::Adaptive = cfg.dbms {
            dbms[i][j].reinforce(0, l, reward)?;
        }
        let cookie = cookies[rng.random_range(0..cookies.len())].clone();
        records.push(LogRecord {
            query_id: query.id.clone(),
            cookie_id: cookie,
            timestamp: cfg.start_timestamp + t as i64,
            results: shown.iter().map(|&d| intent.docs[d].0.clone()).collect(),
            clicks: (0..shown.len()).filter(|&p| intent.docs[shown[p]].1 >= 3).collect(),
        });
    }

    let mut judgments = Vec::new();
    let mut query_intent = BTreeMap::new();
    let mut intent_queries = Vec::with_capacity(world.len());
    for (i, intent) in world.iter().enumerate() {
        let mut ids = Vec::with_capacity(intent.queries.len());
        for q in &intent.queries {
            for (doc, grade) in &intent.docs {
                judgments.push(RelevanceJudgment {
                    query_id: q.id.clone(),
                    result_id: doc.clone(),
                    score: *grade,
                });
            }
            query_intent.insert(q.id.clone(), i);
            ids.push(q.id.clone());
        }
        intent_queries.push(ids);
    }
    judgments.sort();
    Ok(SyntheticLog {
        records,
        judgments,
        query_intent,
        intent_queries,
    })
}
