//! Effectiveness measures used as rewards.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Answer of an intent over a database instance: a set of opaque tuple ids.
pub type AnswerSet<T> = BTreeSet<T>;

/// Graded relevance judgment, 0 (not relevant) through 4 (most relevant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grade(u8);

impl Grade {
    pub const MAX: u8 = 4;

    pub fn new(score: u8) -> Result<Self> {
        if score <= Self::MAX {
            Ok(Self(score))
        } else {
            Err(Error::InvalidValue(format!("relevance grade {score} outside 0..=4")))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Exponential gain `2^grade - 1`.
    pub fn gain(self) -> f64 {
        ((1u32 << self.0) - 1) as f64
    }
}

/// A ranked result list of tuple ids with their grades.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult<T> {
    items: Vec<(T, Grade)>,
}

impl<T> RankedResult<T> {
    pub fn new(items: Vec<(T, Grade)>) -> Self {
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(T, Grade)] {
        &self.items
    }

    pub fn grades(&self) -> impl Iterator<Item = Grade> + '_ {
        self.items.iter().map(|(_, g)| *g)
    }
}

/// `|returned ∩ desired| / |returned|`, and 0 for an empty returned set.
pub fn set_precision<T: Ord>(returned: &AnswerSet<T>, desired: &AnswerSet<T>) -> f64 {
    if returned.is_empty() {
        return 0.0;
    }
    returned.intersection(desired).count() as f64 / returned.len() as f64
}

/// Precision over the first `min(k, len)` items (the list is truncated, never padded).
pub fn precision_at_k<T: Ord>(ranked: &RankedResult<T>, desired: &AnswerSet<T>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("precision@k needs k >= 1".into()));
    }
    let cutoff = k.min(ranked.len());
    if cutoff == 0 {
        return Ok(0.0);
    }
    let hits = ranked.items[..cutoff]
        .iter()
        .filter(|(id, _)| desired.contains(id))
        .count();
    Ok(hits as f64 / cutoff as f64)
}

fn dcg(grades: impl Iterator<Item = Grade>) -> f64 {
    grades
        .enumerate()
        .map(|(rank, g)| g.gain() / libm::log2(rank as f64 + 2.0))
        .sum()
}

/// NDCG@k of a graded list: gain `2^g - 1`, discount `1/log2(rank + 1)` with
/// ranks from 1, ideal ordering by sorted grades. Lists with no positive grade
/// (or `k = 0`) score 0.
pub fn ndcg_of_grades(grades: &[Grade], k: usize) -> f64 {
    let cutoff = k.min(grades.len());
    let mut ideal = grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(cutoff));
    if idcg <= 0.0 {
        return 0.0;
    }
    dcg(grades.iter().copied().take(cutoff)) / idcg
}

pub fn ndcg<T>(ranked: &RankedResult<T>, k: usize) -> f64 {
    let grades: Vec<Grade> = ranked.grades().collect();
    ndcg_of_grades(&grades, k)
}
