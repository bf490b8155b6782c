use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn digame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_digame"))
        .args(args)
        .env_remove("DIGAME_JOBS")
        .output()
        .expect("spawn digame")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = digame(&[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_subcommand_fails() {
    let out = digame(&["frobnicate"]);
    assert!(!out.status.success());
}

#[test]
fn unreadable_config_is_an_error() {
    let out = digame(&["payoff", "--config", "/nonexistent/game.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn shape_errors_surface() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "effectiveness = \"identity\"\nintents = [\"a\", \"b\"]\nqueries = [\"q\"]\nuser = [[0.5, 0.5], [1.0, 0.0]]\n",
    )
    .unwrap();
    let out = digame(&["payoff", "--config", path(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected 2x1"));
}

#[test]
fn payoff_of_the_efficiency_profiles() {
    let cfg = fixture("efficiency.toml");
    let text = stdout(&digame(&["payoff", "--config", path(&cfg)]));
    assert_eq!(text, "profile-1\t4.1\nprofile-2\t5\n");
    let one = stdout(&digame(&["payoff", "--config", path(&cfg), "--profile", "profile-1"]));
    assert_eq!(one, "4.1\n");
}

#[test]
fn equilibria_json_report() {
    let cfg = fixture("universities.toml");
    let text = stdout(&digame(&[
        "equilibria",
        "--config",
        path(&cfg),
        "--json",
        "--enumerate",
        "--convexity",
        "eps-0,eps-1",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let profiles = v["profiles"].as_array().unwrap();
    assert_eq!(profiles.len(), 4);
    assert!(profiles.iter().all(|p| p["is_nash"] == true));
    assert_eq!(v["convexity"]["holds"], true);
    assert_eq!(v["pure_profile_count"], "72");
}

#[test]
fn convexity_needs_a_shared_user() {
    let cfg = fixture("universities.toml");
    let out = digame(&["equilibria", "--config", path(&cfg), "--convexity", "all-msu,eps-0"]);
    assert!(!out.status.success());
}

#[test]
fn zero_rounds_gives_one_row() {
    let cfg = fixture("two_by_two.toml");
    let text = stdout(&digame(&["simulate", "--config", path(&cfg), "--rounds", "0"]));
    assert_eq!(text, "t,seed,u\n0,0,0.5\n");
}

#[test]
fn learning_regime_is_enforced() {
    let cfg = fixture("efficiency.toml");
    let out = digame(&["simulate", "--config", path(&cfg), "--rounds", "5", "--binary-reward"]);
    assert!(stdout(&out).lines().count() == 7);
    let cfg = fixture("strict.toml");
    let out = digame(&[
        "simulate",
        "--config",
        path(&cfg),
        "--rounds",
        "5",
        "--user-update-every",
        "2",
    ]);
    assert!(
        !out.status.success(),
        "a user schedule needs identity rewards without --free-composition"
    );
}

#[test]
fn simulate_writes_manifest_and_diagnose_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let fin = dir.path().join("final.json");
    let cfg = fixture("two_by_two.toml");
    stdout(&digame(&[
        "simulate",
        "--config",
        path(&cfg),
        "--rounds",
        "200",
        "--seeds",
        "30",
        "--seed",
        "11",
        "--out",
        path(&traj),
        "--final",
        path(&fin),
    ]));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("traj.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);

    let report = dir.path().join("diag.json");
    let text = stdout(&digame(&[
        "diagnose",
        "--trajectories",
        path(&traj),
        "--window",
        "20",
        "--tail",
        "50",
        "--out",
        path(&report),
    ]));
    assert!(text.contains("seeds 30  rounds 200"));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["seeds"], 30);
}

#[test]
fn job_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("two_by_two.toml");
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(format!("t{jobs}.csv"));
        stdout(&digame(&[
            "--jobs",
            jobs,
            "simulate",
            "--config",
            path(&cfg),
            "--rounds",
            "100",
            "--seeds",
            "8",
            "--user-update-every",
            "5",
            "--out",
            path(&out),
        ]));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn rerun_detects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.toml");
    std::fs::copy(fixture("two_by_two.toml"), &cfg).unwrap();
    let out = dir.path().join("t.csv");
    stdout(&digame(&[
        "simulate",
        "--config",
        path(&cfg),
        "--rounds",
        "10",
        "--out",
        path(&out),
    ]));
    let manifest = dir.path().join("t.csv.manifest.json");
    stdout(&digame(&["rerun", "--manifest", path(&manifest)]));
    std::fs::write(&cfg, std::fs::read_to_string(&cfg).unwrap() + "\n# edited\n").unwrap();
    let again = digame(&["rerun", "--manifest", path(&manifest)]);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("changed"));
}

#[test]
fn gen_log_fit_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.tsv");
    let judgments = dir.path().join("judgments.tsv");
    let truth = dir.path().join("truth.json");
    let text = stdout(&digame(&[
        "gen-log",
        "--intents",
        "20",
        "--events",
        "1500",
        "--seed",
        "5",
        "--log",
        path(&log),
        "--judgments",
        path(&judgments),
        "--truth",
        path(&truth),
    ]));
    assert!(text.starts_with("1500 records"));
    assert!(dir.path().join("log.tsv.manifest.json").exists());

    let report = dir.path().join("fit.json");
    let table = stdout(&digame(&[
        "fit",
        "--log",
        path(&log),
        "--judgments",
        path(&judgments),
        "--param-fit",
        "300",
        "--train",
        "1000",
        "--test",
        "200",
        "--test-scope",
        "all-events",
        "--steps",
        "10",
        "--out",
        path(&report),
    ]));
    let header = table.lines().next().unwrap();
    assert!(header.starts_with("Method"));
    assert!(header.contains("Mean Squared Distance") && header.contains("Standard Deviation"));
    assert_eq!(table.lines().filter(|l| l.contains("roth-erev")).count(), 2);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["models"].as_array().unwrap().len(), 6);
    assert_eq!(v["ranking"].as_array().unwrap().len(), 6);
    assert_eq!(v["test_coverage"]["events"], 200);

    let line = stdout(&digame(&[
        "eval",
        "--log",
        path(&log),
        "--judgments",
        path(&judgments),
        "--model",
        "cross",
        "--param",
        "alpha_c=0.06",
        "--param",
        "beta_c=0.11",
        "--param-fit",
        "300",
        "--train",
        "1000",
    ]));
    assert!(line.starts_with("cross\tmsd="));
    let bad = digame(&[
        "eval",
        "--log",
        path(&log),
        "--judgments",
        path(&judgments),
        "--model",
        "cross",
        "--param",
        "gamma=1",
    ]);
    assert!(!bad.status.success());
}
