//! TOML game files.
//!
//! ```toml
//! intents = ["e1", "e2", "e3"]
//! queries = ["q1", "q2"]
//! results = ["s1", "s2", "s3"]
//! weights = "unit"                   # or "distribution" (default)
//! prior = [0.5, 0.25, 0.25]          # default uniform
//! allow_unnormalized_rewards = true
//! effectiveness = [[1, 0, 0], [0, 2, 0.1], [0, 0, 3]]   # or "identity", "precision"
//!
//! [answers]                          # tuple ids per intent and result label,
//! e1 = ["t1"]                        # used by effectiveness = "precision"
//!
//! user = "uniform"                   # initial strategies for `simulate`
//! dbms = "uniform"
//!
//! [[profile]]
//! name = "one"
//! user = ["q2", "q1", "q1"]          # pure, by label or index
//! dbms = [[0, 0, 1], [1, 0, 0]]      # or explicit rows
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use digame_core::dbms_learning::RewardMode;
use digame_core::equilibria::StrategyProfile;
use digame_core::metrics::set_precision;
use digame_core::user_learning::{ModelParams, UserModel};
use digame_core::{EffectivenessMatrix, GameConfig, IntentWeights, Labels, Matrix, StrategyMatrix, Weighting};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightsMode {
    #[default]
    Distribution,
    Unit,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EffectivenessSpec {
    Named(String),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    /// `"uniform"`.
    Named(String),
    /// Pure, one column index per row.
    Indices(Vec<usize>),
    /// Pure, one column label per row.
    Labels(Vec<String>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub name: String,
    pub user: StrategySpec,
    pub dbms: StrategySpec,
}

/// Learning setup read by `simulate`; command-line flags override it.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub user_model: Option<UserModel>,
    pub user_params: Option<ModelParams>,
    pub reward_mode: Option<RewardMode>,
    pub free_composition: Option<bool>,
    pub initial_rewards: Option<Vec<Vec<f64>>>,
    pub initial_accumulated: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub intents: Option<Vec<String>>,
    pub queries: Option<Vec<String>>,
    pub results: Option<Vec<String>>,
    #[serde(default)]
    pub weights: WeightsMode,
    pub prior: Option<Vec<f64>>,
    #[serde(default)]
    pub allow_unnormalized_rewards: bool,
    pub effectiveness: EffectivenessSpec,
    /// Answer set of each intent and result label.
    #[serde(default)]
    pub answers: BTreeMap<String, Vec<String>>,
    pub user: Option<StrategySpec>,
    pub dbms: Option<StrategySpec>,
    #[serde(default)]
    pub profile: Vec<ProfileSpec>,
    #[serde(default)]
    pub simulation: SimulationSection,
}

/// A resolved game with its named profiles.
#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub game: GameConfig,
    pub profiles: Vec<(String, StrategyProfile)>,
    pub simulation: SimulationSection,
}

impl LoadedGame {
    pub fn profile(&self, name: &str) -> Result<&StrategyProfile> {
        self.profiles
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
            .ok_or_else(|| anyhow!("no profile named {name:?}"))
    }

    /// Named profiles, or the initial strategies as `"initial"` when there are none.
    pub fn profiles_or_initial(&self) -> Vec<(String, StrategyProfile)> {
        if self.profiles.is_empty() {
            vec![(
                "initial".to_string(),
                StrategyProfile::new(self.game.initial_user.clone(), self.game.initial_dbms.clone()),
            )]
        } else {
            self.profiles.clone()
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedGame> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse(text: &str) -> Result<LoadedGame> {
    let file: GameFile = toml::from_str(text)?;
    resolve(file)
}

fn default_labels(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

fn strategy(spec: &StrategySpec, rows: usize, col_labels: &[String], what: &str) -> Result<StrategyMatrix> {
    let cols = col_labels.len();
    let m = match spec {
        StrategySpec::Named(name) if name == "uniform" => StrategyMatrix::uniform(rows, cols)?,
        StrategySpec::Named(other) => bail!("{what}: unknown strategy {other:?} (expected \"uniform\")"),
        StrategySpec::Indices(idx) => StrategyMatrix::pure(idx, cols)?,
        StrategySpec::Labels(labels) => {
            let idx = labels
                .iter()
                .map(|l| {
                    col_labels
                        .iter()
                        .position(|c| c == l)
                        .ok_or_else(|| anyhow!("{what}: unknown label {l:?}"))
                })
                .collect::<Result<Vec<_>>>()?;
            StrategyMatrix::pure(&idx, cols)?
        }
        StrategySpec::Rows(r) => StrategyMatrix::from_rows(r)?,
    };
    if m.rows() != rows || m.cols() != cols {
        bail!("{what}: expected {rows}x{cols}, found {}x{}", m.rows(), m.cols());
    }
    Ok(m)
}

/// Query count from the labels, else from the first strategy that reveals it.
fn query_count(file: &GameFile) -> Result<usize> {
    if let Some(q) = &file.queries {
        return Ok(q.len());
    }
    let from_user = |s: &StrategySpec| match s {
        StrategySpec::Rows(r) => r.first().map(Vec::len),
        _ => None,
    };
    let from_dbms = |s: &StrategySpec| match s {
        StrategySpec::Rows(r) => Some(r.len()),
        StrategySpec::Indices(i) => Some(i.len()),
        StrategySpec::Labels(l) => Some(l.len()),
        StrategySpec::Named(_) => None,
    };
    file.dbms
        .as_ref()
        .and_then(from_dbms)
        .or_else(|| file.user.as_ref().and_then(from_user))
        .or_else(|| {
            file.profile
                .iter()
                .find_map(|p| from_dbms(&p.dbms).or_else(|| from_user(&p.user)))
        })
        .ok_or_else(|| anyhow!("cannot tell the number of queries; add a `queries` list"))
}

pub fn resolve(file: GameFile) -> Result<LoadedGame> {
    let (m, o, effectiveness) = match &file.effectiveness {
        EffectivenessSpec::Named(name) if name == "identity" => {
            let m = file
                .intents
                .as_ref()
                .map(Vec::len)
                .or(file.results.as_ref().map(Vec::len))
                .ok_or_else(|| anyhow!("identity effectiveness needs `intents` or `results` labels"))?;
            (m, m, EffectivenessMatrix::identity(m))
        }
        EffectivenessSpec::Named(name) if name == "precision" => {
            let e = precision_matrix(&file)?;
            (e.intents(), e.results(), e)
        }
        EffectivenessSpec::Named(other) => {
            bail!("unknown effectiveness {other:?} (expected \"identity\", \"precision\" or rows)")
        }
        EffectivenessSpec::Rows(rows) => {
            let e = EffectivenessMatrix::new(Matrix::from_rows(rows)?, file.allow_unnormalized_rewards)?;
            (e.intents(), e.results(), e)
        }
    };
    let n = query_count(&file)?;
    let intents = file.intents.clone().unwrap_or_else(|| default_labels("e", m));
    let queries = file.queries.clone().unwrap_or_else(|| default_labels("q", n));
    let results = file.results.clone().unwrap_or_else(|| default_labels("s", o));
    if intents.len() != m || results.len() != o {
        bail!(
            "labels give {} intents and {} results but the effectiveness matrix is {m}x{o}",
            intents.len(),
            results.len()
        );
    }
    let prior = match (file.weights, &file.prior) {
        (WeightsMode::Unit, None) => IntentWeights::unit(m),
        (WeightsMode::Unit, Some(_)) => bail!("unit weights take no prior"),
        (WeightsMode::Distribution, None) => IntentWeights::uniform(m)?,
        (WeightsMode::Distribution, Some(p)) => IntentWeights::distribution(p.clone())?,
    };
    debug_assert!(matches!(prior.mode(), Weighting::Unit | Weighting::Distribution));
    let uniform = StrategySpec::Named("uniform".into());
    let user = strategy(file.user.as_ref().unwrap_or(&uniform), m, &queries, "user")?;
    let dbms = strategy(file.dbms.as_ref().unwrap_or(&uniform), n, &results, "dbms")?;
    let game = GameConfig::new(prior, effectiveness, user, dbms)?.with_labels(Labels {
        intents,
        queries: queries.clone(),
        results: results.clone(),
    })?;
    let mut profiles = Vec::with_capacity(file.profile.len());
    for p in &file.profile {
        if profiles.iter().any(|(name, _)| name == &p.name) {
            bail!("duplicate profile name {:?}", p.name);
        }
        let user = strategy(&p.user, m, &queries, &format!("profile {} user", p.name))?;
        let dbms = strategy(&p.dbms, n, &results, &format!("profile {} dbms", p.name))?;
        profiles.push((p.name.clone(), StrategyProfile::new(user, dbms)));
    }
    Ok(LoadedGame {
        game,
        profiles,
        simulation: file.simulation,
    })
}

/// `r[i][l]` is the precision of result `l`'s answers against intent `i`'s.
fn precision_matrix(file: &GameFile) -> Result<EffectivenessMatrix> {
    let (Some(intents), Some(results)) = (&file.intents, &file.results) else {
        bail!("precision effectiveness needs `intents` and `results` labels");
    };
    let answers = |label: &String| -> Result<BTreeSet<&str>> {
        let set = file
            .answers
            .get(label)
            .ok_or_else(|| anyhow!("no answer set for {label:?}"))?;
        Ok(set.iter().map(String::as_str).collect())
    };
    let desired = intents.iter().map(answers).collect::<Result<Vec<_>>>()?;
    let returned = results.iter().map(answers).collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = desired
        .iter()
        .map(|d| returned.iter().map(|r| set_precision(r, d)).collect())
        .collect();
    Ok(EffectivenessMatrix::from_rows(&rows, file.allow_unnormalized_rewards)?)
}

pub fn matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    Ok(Matrix::from_rows(rows)?)
}
