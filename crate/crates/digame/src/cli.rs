//! The `digame` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use digame_core::dbms_learning::{RewardMode, SimulationSchedule, SimulationSpec};
use digame_core::diagnostics::{convergence_test, step_trend_test, trend_test, TrajectorySet};
use digame_core::equilibria::{
    check_nash, check_optimal, enumerate_pure_equilibria, nash_convexity_witness, pure_profile_count, Enumeration,
    EquilibriumReport, OptimalityCheck, DEFAULT_ENUMERATION_BUDGET,
};
use digame_core::user_learning::{ModelParams, Param, UserModel};
use digame_core::workload::{
    evaluate_rows, fit_models, generate_synthetic_log, split_events, train_rows, CandidateScope, Coverage, FitCounts,
    FitReport, GeneratorUser, Judgments, ParamGrid, SyntheticConfig, TestScope, Workload, MSD_NORMALIZATION,
};

use crate::config;
use crate::formats::{self, format_short, to_json};
use crate::manifest::{digest_file, RunManifest, RunOutputs};
use crate::parallel::Pool;

#[derive(Debug, Parser)]
#[command(
    name = "digame",
    version,
    about = "Signaling-game models of user and database interaction"
)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Worker threads for seeds and grid points; 0 uses every core.
    #[arg(long, global = true, env = "DIGAME_JOBS", default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected payoff of each profile in a game file.
    Payoff(PayoffArgs),
    /// Nash, strict Nash and optimality checks, pure enumeration and convexity.
    Equilibria(EquilibriaArgs),
    /// Seeded learning trajectories of u(t).
    Simulate(SimulateArgs),
    /// Synthetic query log and relevance judgments from a known user model.
    GenLog(GenLogArgs),
    /// Grid-search the user models on a log and rank them by test MSD.
    Fit(FitArgs),
    /// Train one model at fixed parameters and report its test MSD.
    Eval(EvalArgs),
    /// Trend and convergence tests on a trajectory file.
    Diagnose(DiagnoseArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct PayoffArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Print only this profile's payoff.
    #[arg(long)]
    pub profile: Option<String>,
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Check only this profile.
    #[arg(long)]
    pub profile: Option<String>,
    /// List every pure Nash profile.
    #[arg(long)]
    pub enumerate: bool,
    /// Largest pure profile count to enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u128,
    /// Two profile names `A,B` sharing a user strategy: check that blends of
    /// their DBMS strategies stay Nash.
    #[arg(long, value_delimiter = ',')]
    pub convexity: Option<Vec<String>>,
    /// Blend samples for `--convexity`.
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    BushMosteller,
    Cross,
    RothErev,
    RothErevModified,
    WinStayLoseRandomize,
    LatestReward,
}

impl From<ModelArg> for UserModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::BushMosteller => UserModel::BushMosteller,
            ModelArg::Cross => UserModel::Cross,
            ModelArg::RothErev => UserModel::RothErev,
            ModelArg::RothErevModified => UserModel::RothErevModified,
            ModelArg::WinStayLoseRandomize => UserModel::WinStayLoseRandomize,
            ModelArg::LatestReward => UserModel::LatestReward,
        }
    }
}

/// `name=value` model parameter.
fn parse_param(s: &str) -> Result<(Param, f64)> {
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
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected name=value, got {s:?}"))?;
    let p = ALL
        .into_iter()
        .find(|p| p.name() == name.trim())
        .ok_or_else(|| anyhow!("unknown parameter {name:?}; known: {}", ALL.map(Param::name).join(", ")))?;
    let v: f64 = value.trim().parse().with_context(|| format!("bad value for {name}"))?;
    Ok((p, v))
}

fn apply_params(mut base: ModelParams, params: &[(Param, f64)]) -> Result<ModelParams> {
    for &(p, v) in params {
        base.set(p, v);
    }
    base.validate()?;
    Ok(base)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Master seed; trajectory k uses stream k of it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// The user adapts every this many rounds; 0 keeps the user fixed.
    #[arg(long, default_value_t = 0)]
    pub user_update_every: u64,
    /// User model for `--user-update-every` (default Roth-Erev).
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Model parameter `name=value`, repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(Param, f64)>,
    /// Reward the DBMS 1 when it returns the intended result, else 0.
    #[arg(long)]
    pub binary_reward: bool,
    /// Experimental: allow any user model and reward matrix with user updates.
    #[arg(long)]
    pub free_composition: bool,
    /// Trajectory CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with every seed's final strategies.
    #[arg(long = "final")]
    pub final_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenLogArgs {
    /// TOML world description (intents, queries_per_intent, ...).
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Overrides the world's intent count.
    #[arg(long)]
    pub intents: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub events: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generating user model.
    #[arg(long, value_enum, default_value = "roth-erev")]
    pub model: ModelArg,
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(Param, f64)>,
    /// Replace the learning user by a fixed one.
    #[arg(long, value_enum)]
    pub fixed_user: Option<FixedUser>,
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub judgments: PathBuf,
    /// JSON with the generating query-to-intent assignment.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixedUser {
    Pure,
    Uniform,
}

#[derive(Debug, Args)]
pub struct WorkloadArgs {
    /// Tab-separated query log.
    #[arg(long)]
    pub log: PathBuf,
    /// Tab-separated relevance judgments.
    #[arg(long)]
    pub judgments: PathBuf,
    /// Events in the grid-search window.
    #[arg(long, default_value_t = 500)]
    pub param_fit: usize,
    /// Events replayed for training after the grid-search window.
    #[arg(long, default_value_t = 10_000)]
    pub train: usize,
    /// Test events after training.
    #[arg(long, default_value_t = 500)]
    pub test: usize,
    #[arg(long, value_enum, default_value = "first-per-intent")]
    pub test_scope: TestScopeArg,
    /// Continue training from the grid-search window instead of a uniform start.
    #[arg(long)]
    pub warm_start: bool,
    /// Candidate queries of an intent: those in the log, or also judged-only
    /// queries with the same relevant set.
    #[arg(long, value_enum, default_value = "logged")]
    pub candidates: CandidatesArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CandidatesArg {
    Logged,
    Judged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestScopeArg {
    FirstPerIntent,
    AllEvents,
}

impl WorkloadArgs {
    fn counts(&self) -> FitCounts {
        FitCounts {
            param_fit: self.param_fit,
            train: self.train,
            test: self.test,
            test_scope: match self.test_scope {
                TestScopeArg::FirstPerIntent => TestScope::FirstPerIntent,
                TestScopeArg::AllEvents => TestScope::AllEvents,
            },
            warm_start: self.warm_start,
        }
    }

    fn load(&self, run: &mut RunOutputs) -> Result<(Workload, LoadNotes)> {
        run.input(&self.log)?;
        run.input(&self.judgments)?;
        let records =
            formats::read_log(formats::open(&self.log)?).with_context(|| format!("in {}", self.log.display()))?;
        let judgments = formats::read_judgments(formats::open(&self.judgments)?)
            .with_context(|| format!("in {}", self.judgments.display()))?;
        let judgments = Judgments::new(judgments)?;
        let scope = match self.candidates {
            CandidatesArg::Logged => CandidateScope::Logged,
            CandidatesArg::Judged => CandidateScope::Judged,
        };
        let workload = Workload::build_scoped(&records, &judgments, scope);
        let notes = LoadNotes {
            candidates: scope,
            records: records.len(),
            events: workload.events.len(),
            skipped_records: workload.skipped_records,
            dropped_empty_queries: workload.intent_map.dropped_empty.len(),
            dropped_uncovered_queries: workload.intent_map.dropped_uncovered.len(),
        };
        Ok((workload, notes))
    }
}

#[derive(Debug, Serialize)]
struct LoadNotes {
    candidates: CandidateScope,
    records: usize,
    events: usize,
    skipped_records: usize,
    dropped_empty_queries: usize,
    dropped_uncovered_queries: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    /// Models to fit; all six by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub models: Vec<ModelArg>,
    /// Grid resolution: each parameter takes values k/steps for k = 0..=steps.
    #[arg(long, default_value_t = 100)]
    pub steps: u32,
    /// Fixed value of a parameter that is not searched, `name=value`.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(Param, f64)>,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(Param, f64)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    pub trajectories: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    #[arg(long, default_value_t = 500)]
    pub tail: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    /// Largest allowed windowed decrease, in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub z: f64,
    /// The simulation's user update period, for the per-update trend test.
    #[arg(long, default_value_t = 0)]
    pub user_update_every: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Parses `argv` (program name first) and runs it, writing to `stdout`.
pub fn run_from<I, T>(argv: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    let recorded = recorded_args(&argv);
    run(cli, recorded, stdout)
}

/// Arguments after the subcommand name.
fn recorded_args(argv: &[OsString]) -> Vec<String> {
    const NAMES: [&str; 8] = [
        "payoff",
        "equilibria",
        "simulate",
        "gen-log",
        "fit",
        "eval",
        "diagnose",
        "rerun",
    ];
    let strings: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match strings.iter().position(|a| NAMES.contains(&a.as_str())) {
        Some(k) => strings[k + 1..].to_vec(),
        None => Vec::new(),
    }
}

pub fn run(cli: Cli, args: Vec<String>, stdout: &mut dyn Write) -> Result<()> {
    let pool = || Pool::new(cli.jobs);
    match cli.command {
        Command::Payoff(a) => payoff(a, stdout),
        Command::Equilibria(a) => equilibria(a, args, stdout),
        Command::Simulate(a) => simulate(a, args, &pool()?, stdout),
        Command::GenLog(a) => gen_log(a, args, stdout),
        Command::Fit(a) => fit(a, args, &pool()?, stdout),
        Command::Eval(a) => eval(a, args, stdout),
        Command::Diagnose(a) => diagnose(a, args, stdout),
        Command::Rerun(a) => rerun(a, cli.jobs, stdout),
    }
}

fn finish(run: RunOutputs, stdout: &mut dyn Write) -> Result<()> {
    if let Some(path) = run.commit()? {
        eprintln!("manifest: {}", path.display());
    }
    stdout.flush()?;
    Ok(())
}

fn payoff(a: PayoffArgs, stdout: &mut dyn Write) -> Result<()> {
    let loaded = config::load(&a.config)?;
    if let Some(name) = &a.profile {
        let p = loaded.profile(name)?;
        writeln!(stdout, "{}", format_short(loaded.game.payoff(&p.user, &p.dbms)?))?;
        return Ok(());
    }
    for (name, p) in loaded.profiles_or_initial() {
        writeln!(
            stdout,
            "{name}\t{}",
            format_short(loaded.game.payoff(&p.user, &p.dbms)?)
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ProfileVerdict {
    name: String,
    #[serde(flatten)]
    report: EquilibriumReport,
    /// Absent when the pure profile count exceeds the budget.
    optimality: Option<OptimalityCheck>,
}

#[derive(Debug, Serialize)]
struct ConvexityVerdict {
    first: String,
    second: String,
    samples: usize,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct EquilibriaReport {
    pure_profile_count: String,
    profiles: Vec<ProfileVerdict>,
    enumeration: Option<Enumeration>,
    convexity: Option<ConvexityVerdict>,
}

fn equilibria(a: EquilibriaArgs, args: Vec<String>, stdout: &mut dyn Write) -> Result<()> {
    let mut run = RunOutputs::new("equilibria", args);
    run.config(&a.config)?;
    let loaded = config::load(&a.config)?;
    let game = &loaded.game;
    let count = pure_profile_count(game.intents(), game.queries(), game.results());
    let within_budget = count <= a.budget;
    let selected = match &a.profile {
        Some(name) => vec![(name.clone(), loaded.profile(name)?.clone())],
        None => loaded.profiles_or_initial(),
    };
    let enumeration = if a.enumerate || within_budget {
        Some(enumerate_pure_equilibria(game, a.budget)?)
    } else {
        None
    };
    let mut profiles = Vec::with_capacity(selected.len());
    for (name, p) in selected {
        let report = check_nash(&p, game)?;
        let optimality = match &enumeration {
            Some(_) => Some(check_optimal(&p, game, a.budget)?),
            None => None,
        };
        profiles.push(ProfileVerdict {
            name,
            report,
            optimality,
        });
    }
    let convexity = match &a.convexity {
        Some(names) => {
            if names.len() != 2 {
                bail!("--convexity takes exactly two profile names, A,B");
            }
            let (first, second) = (&names[0], &names[1]);
            let p = loaded.profile(first)?;
            let q = loaded.profile(second)?;
            if p.user != q.user {
                bail!("--convexity needs two profiles with the same user strategy");
            }
            let holds = nash_convexity_witness(&p.user, &p.dbms, &q.dbms, game, a.samples)?;
            Some(ConvexityVerdict {
                first: first.clone(),
                second: second.clone(),
                samples: a.samples,
                holds,
            })
        }
        None => None,
    };
    let report = EquilibriaReport {
        pure_profile_count: count.to_string(),
        profiles,
        enumeration: if a.enumerate { enumeration } else { None },
        convexity,
    };
    let json = to_json(&report)?;
    if a.json {
        stdout.write_all(&json)?;
    } else {
        writeln!(stdout, "profile\tpayoff\tnash\tstrict_nash\toptimal")?;
        for v in &report.profiles {
            let optimal = v
                .optimality
                .as_ref()
                .map_or("?".to_string(), |o| o.is_optimal.to_string());
            writeln!(
                stdout,
                "{}\t{}\t{}\t{}\t{}",
                v.name,
                format_short(v.report.payoff),
                v.report.is_nash,
                v.report.is_strict_nash,
                optimal
            )?;
        }
        if let Some(e) = &report.enumeration {
            writeln!(
                stdout,
                "pure nash: {} of {} profiles ({} strict); optimal payoff {}",
                e.nash.len(),
                e.profiles_examined,
                e.strict_nash.len(),
                format_short(e.optimal_payoff)
            )?;
        }
        if let Some(c) = &report.convexity {
            writeln!(
                stdout,
                "convexity {}..{} over {} blends: {}",
                c.first, c.second, c.samples, c.holds
            )?;
        }
    }
    if let Some(out) = &a.out {
        run.add(out, json)?;
    }
    finish(run, stdout)
}

#[derive(Debug, Serialize)]
struct FinalStrategies<'a> {
    seed: u64,
    payoff: f64,
    user: &'a digame_core::StrategyMatrix,
    dbms: &'a digame_core::StrategyMatrix,
}

fn simulate(a: SimulateArgs, args: Vec<String>, pool: &Pool, stdout: &mut dyn Write) -> Result<()> {
    let mut run = RunOutputs::new("simulate", args);
    run.config(&a.config)?;
    run.seed(a.seed);
    let loaded = config::load(&a.config)?;
    let sim = &loaded.simulation;
    let schedule = SimulationSchedule::every(a.rounds, a.user_update_every);
    let mut spec = SimulationSpec::new(loaded.game.clone(), schedule);
    if let Some(m) = a.model.map(UserModel::from).or(sim.user_model) {
        spec.user_model = m;
    }
    spec.user_params = apply_params(sim.user_params.unwrap_or_default(), &a.params)?;
    spec.reward_mode = if a.binary_reward {
        RewardMode::Binary
    } else {
        sim.reward_mode.unwrap_or_default()
    };
    spec.free_composition = a.free_composition || sim.free_composition.unwrap_or(false);
    spec.initial_rewards = sim.initial_rewards.as_deref().map(config::matrix).transpose()?;
    spec.initial_accumulated = sim.initial_accumulated.as_deref().map(config::matrix).transpose()?;
    spec.validate()?;
    if spec.free_composition {
        eprintln!("warning: --free-composition is outside the analyzed regime; no improvement guarantee applies");
    }
    let trajectories = pool.simulate(&spec, a.seed, a.seeds)?;
    let mut csv = Vec::new();
    formats::write_trajectories(&mut csv, &trajectories)?;
    match &a.out {
        Some(out) => run.add(out, csv)?,
        None => stdout.write_all(&csv)?,
    }
    if let Some(out) = &a.final_out {
        let finals: Vec<FinalStrategies> = trajectories
            .iter()
            .map(|t| FinalStrategies {
                seed: t.seed_index,
                payoff: *t.payoffs.last().expect("trajectories hold u(0)"),
                user: &t.final_user,
                dbms: &t.final_dbms,
            })
            .collect();
        run.add(out, to_json(&finals)?)?;
    }
    finish(run, stdout)
}

#[derive(Debug, Serialize)]
struct GroundTruth<'a> {
    generator: GeneratorUser,
    world: &'a SyntheticConfig,
    events: usize,
    seed: u64,
    /// Generating intent of each query id.
    query_intent: &'a std::collections::BTreeMap<String, usize>,
}

fn gen_log(a: GenLogArgs, args: Vec<String>, stdout: &mut dyn Write) -> Result<()> {
    let mut run = RunOutputs::new("gen-log", args);
    run.seed(a.seed);
    let mut world = match &a.world {
        Some(path) => {
            run.config(path)?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<SyntheticConfig>(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => SyntheticConfig::default(),
    };
    if let Some(k) = a.intents {
        world.intents = k;
    }
    let generator = match a.fixed_user {
        Some(FixedUser::Pure) => GeneratorUser::FixedPure,
        Some(FixedUser::Uniform) => GeneratorUser::FixedUniform,
        None => GeneratorUser::Learning {
            model: a.model.into(),
            params: apply_params(ModelParams::default(), &a.params)?,
        },
    };
    let log = generate_synthetic_log(&world, generator, a.events, a.seed)?;
    let mut bytes = Vec::new();
    formats::write_log(&mut bytes, &log.records)?;
    run.add(&a.log, bytes)?;
    let mut bytes = Vec::new();
    formats::write_judgments(&mut bytes, &log.judgments)?;
    run.add(&a.judgments, bytes)?;
    if let Some(out) = &a.truth {
        let query_intent: std::collections::BTreeMap<String, usize> =
            log.query_intent.iter().map(|(q, i)| (q.clone(), *i)).collect();
        let truth = GroundTruth {
            generator,
            world: &world,
            events: a.events,
            seed: a.seed,
            query_intent: &query_intent,
        };
        run.add(out, to_json(&truth)?)?;
    }
    writeln!(
        stdout,
        "{} records, {} judgments",
        log.records.len(),
        log.judgments.len()
    )?;
    finish(run, stdout)
}

fn models_or_all(models: &[ModelArg]) -> Vec<UserModel> {
    if models.is_empty() {
        UserModel::ALL.to_vec()
    } else {
        models.iter().map(|&m| m.into()).collect()
    }
}

fn describe_params(fitted: &[(Param, f64)]) -> String {
    fitted
        .iter()
        .map(|(p, v)| format!("{}={}", p.name(), format_short(*v)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// The results table: method, MSD, standard deviation, parameters.
pub fn fit_table(report: &FitReport) -> String {
    let mut rows = vec![[
        "Method".to_string(),
        "Mean Squared Distance".to_string(),
        "Standard Deviation".to_string(),
        "Parameters".to_string(),
    ]];
    for m in &report.models {
        rows.push([
            m.model.name().to_string(),
            format!("{:.5}", m.test.msd),
            format!("{:.5}", m.test.std),
            describe_params(&m.fitted),
        ]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct FitOutput<'a> {
    input: LoadNotes,
    #[serde(flatten)]
    report: &'a FitReport,
    ranking: Vec<&'static str>,
}

fn fit(a: FitArgs, args: Vec<String>, pool: &Pool, stdout: &mut dyn Write) -> Result<()> {
    let mut run = RunOutputs::new("fit", args);
    let (workload, notes) = a.workload.load(&mut run)?;
    let base = apply_params(ModelParams::default(), &a.params)?;
    let grid = ParamGrid::uniform(a.steps);
    let report = fit_models(
        &workload,
        &models_or_all(&a.models),
        &grid,
        base,
        a.workload.counts(),
        pool,
    )?;
    let ranking = report.ranking().iter().map(|m| m.model.name()).collect();
    stdout.write_all(fit_table(&report).as_bytes())?;
    let c = &report.test_coverage;
    writeln!(
        stdout,
        "test: {} events, {} intents, {} queries, {} users; distance {}",
        c.events, c.intents, c.queries, c.users, MSD_NORMALIZATION
    )?;
    if let Some(out) = &a.out {
        let json = to_json(&FitOutput {
            input: notes,
            report: &report,
            ranking,
        })?;
        run.add(out, json)?;
    }
    finish(run, stdout)
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    input: LoadNotes,
    model: UserModel,
    params: ModelParams,
    counts: FitCounts,
    train: Option<digame_core::workload::MsdSummary>,
    test: digame_core::workload::MsdSummary,
    test_coverage: Coverage,
    msd_normalization: &'static str,
}

fn eval(a: EvalArgs, args: Vec<String>, stdout: &mut dyn Write) -> Result<()> {
    let mut run = RunOutputs::new("eval", args);
    let (workload, notes) = a.workload.load(&mut run)?;
    let model = UserModel::from(a.model);
    let params = apply_params(ModelParams::default(), &a.params)?;
    let counts = a.workload.counts();
    let split = split_events(&workload.events, counts)?;
    if split.test.is_empty() {
        bail!("no events follow the training window");
    }
    // The grid-search window is plain warm-up here.
    let (strategy, distances) = train_rows(&workload, model, params, split.fit, split.train)?;
    let test = evaluate_rows(&strategy, &split.test)?;
    let out = EvalOutput {
        input: notes,
        model,
        params,
        counts,
        train: digame_core::workload::MsdSummary::of(&distances).ok(),
        test,
        test_coverage: Coverage::of(&split.test),
        msd_normalization: MSD_NORMALIZATION,
    };
    writeln!(
        stdout,
        "{}\tmsd={:.5}\tstd={:.5}\tevents={}",
        model.name(),
        test.msd,
        test.std,
        test.events
    )?;
    if let Some(path) = &a.out {
        run.add(path, to_json(&out)?)?;
    }
    finish(run, stdout)
}

#[derive(Debug, Serialize)]
struct DiagnoseOutput {
    seeds: usize,
    rounds: usize,
    trend: digame_core::diagnostics::TrendReport,
    trend_passes: bool,
    step_trend: Option<digame_core::diagnostics::StepTrendReport>,
    convergence: ConvergenceSummary,
}

#[derive(Debug, Serialize)]
struct ConvergenceSummary {
    tail: usize,
    tol: f64,
    converged_fraction: f64,
    max_spread: f64,
}

fn diagnose(a: DiagnoseArgs, args: Vec<String>, stdout: &mut dyn Write) -> Result<()> {
    let mut run = RunOutputs::new("diagnose", args);
    run.input(&a.trajectories)?;
    let set: TrajectorySet = formats::read_trajectories(formats::open(&a.trajectories)?)
        .with_context(|| format!("in {}", a.trajectories.display()))?;
    let trend = trend_test(&set, a.window)?;
    let rounds = set.len().saturating_sub(1) as u64;
    let step_trend = if a.user_update_every > 0 {
        let times = SimulationSchedule::every(rounds, a.user_update_every);
        Some(step_trend_test(&set, times.user_update_times())?)
    } else {
        None
    };
    let conv = convergence_test(&set, a.tail, a.tol)?;
    let out = DiagnoseOutput {
        seeds: set.num_seeds(),
        rounds: rounds as usize,
        trend_passes: trend.passes(a.z),
        trend,
        step_trend,
        convergence: ConvergenceSummary {
            tail: conv.tail,
            tol: conv.tol,
            converged_fraction: conv.converged_fraction,
            max_spread: conv.spreads.iter().copied().fold(0.0, f64::max),
        },
    };
    writeln!(
        stdout,
        "seeds {}  rounds {}  mean u(0) {}  mean u(end) {}  net gain {}",
        out.seeds,
        out.rounds,
        format_short(out.trend.initial_mean),
        format_short(out.trend.final_mean),
        format_short(out.trend.net_gain)
    )?;
    writeln!(
        stdout,
        "largest windowed decrease: z = {} (limit {}): {}",
        format_short(out.trend.max_decrease_z),
        format_short(a.z),
        if out.trend_passes { "pass" } else { "fail" }
    )?;
    if let Some(s) = &out.step_trend {
        writeln!(
            stdout,
            "user updates: largest decrease z = {}, pooled z = {}",
            format_short(s.max_decrease_z),
            format_short(s.pooled_decrease_z)
        )?;
    }
    writeln!(
        stdout,
        "converged (tail {}, tol {}): {}",
        a.tail,
        format_short(a.tol),
        format_short(out.convergence.converged_fraction)
    )?;
    if let Some(path) = &a.out {
        run.add(path, to_json(&out)?)?;
    }
    finish(run, stdout)
}

fn rerun(a: RerunArgs, jobs: usize, stdout: &mut dyn Write) -> Result<()> {
    let manifest = RunManifest::read(&a.manifest)?;
    if manifest.subcommand == "rerun" {
        bail!("a manifest cannot record a rerun");
    }
    for input in &manifest.inputs {
        let now = digest_file(&input.path)?;
        if now.sha256 != input.sha256 {
            bail!("input {} changed since the recorded run", input.path.display());
        }
    }
    let mut argv = vec![
        "digame".to_string(),
        "--jobs".into(),
        jobs.to_string(),
        manifest.subcommand.clone(),
    ];
    argv.extend(manifest.args.iter().cloned());
    run_from(argv, stdout)?;
    let mut differing = Vec::new();
    for output in &manifest.outputs {
        let now = digest_file(&output.path)?;
        let same = now.sha256 == output.sha256;
        eprintln!(
            "{}: {}",
            output.path.display(),
            if same { "identical" } else { "differs" }
        );
        if !same {
            differing.push(output.path.display().to_string());
        }
    }
    if !differing.is_empty() {
        bail!("outputs differ from the recorded run: {}", differing.join(", "));
    }
    Ok(())
}

/// Exit code and message for an error from [`run_from`].
pub fn report_error(err: &anyhow::Error) -> i32 {
    if let Some(clap_err) = err.downcast_ref::<clap::Error>() {
        let _ = clap_err.print();
        return match clap_err.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
            _ => 2,
        };
    }
    eprintln!("error: {err:#}");
    1
}
