//! Tab-separated logs and judgments, trajectory CSV and JSON reports.
//!
//! Log rows: `QueryID  CookieID  TimeStamp  Results  [Clicks]`, with the result
//! ids and the 0-based clicked positions separated by single spaces.
//! Judgment rows: `QueryID  ResultID  Score`.
//! Trajectory rows: `t,seed,u`, grouped by seed.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use digame_core::dbms_learning::Trajectory;
use digame_core::diagnostics::TrajectorySet;
use digame_core::workload::{LogRecord, RelevanceJudgment};

pub const LOG_HEADER: [&str; 5] = ["QueryID", "CookieID", "TimeStamp", "Results", "Clicks"];
pub const JUDGMENT_HEADER: [&str; 3] = ["QueryID", "ResultID", "Score"];
pub const TRAJECTORY_HEADER: [&str; 3] = ["t", "seed", "u"];

fn tsv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .comment(Some(b'#'))
        .quoting(false)
        .from_reader(input)
}

fn tsv_writer<W: Write>(output: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(output)
}

fn check_header(found: &csv::StringRecord, expected: &[&str], required: usize) -> Result<()> {
    let ok = found.len() >= required
        && found.len() <= expected.len()
        && found.iter().zip(expected).all(|(a, b)| a.eq_ignore_ascii_case(b));
    if !ok {
        bail!(
            "expected header {:?}, found {:?}",
            &expected[..required],
            found.iter().collect::<Vec<_>>()
        );
    }
    Ok(())
}

pub fn read_log<R: Read>(input: R) -> Result<Vec<LogRecord>> {
    let mut reader = tsv_reader(input);
    check_header(reader.headers()?, &LOG_HEADER, 4)?;
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let line = n + 2;
        if row.len() < 4 || row.len() > 5 {
            bail!("log line {line}: expected 4 or 5 fields, found {}", row.len());
        }
        let timestamp = row[2]
            .trim()
            .parse()
            .with_context(|| format!("log line {line}: bad timestamp {:?}", &row[2]))?;
        let clicks = match row.get(4) {
            Some(c) => c
                .split_whitespace()
                .map(|p| {
                    p.parse()
                        .with_context(|| format!("log line {line}: bad click position {p:?}"))
                })
                .collect::<Result<Vec<usize>>>()?,
            None => Vec::new(),
        };
        out.push(LogRecord {
            query_id: row[0].to_string(),
            cookie_id: row[1].to_string(),
            timestamp,
            results: row[3].split_whitespace().map(str::to_string).collect(),
            clicks,
        });
    }
    Ok(out)
}

pub fn write_log<W: Write>(output: W, records: &[LogRecord]) -> Result<()> {
    let mut w = tsv_writer(output);
    w.write_record(LOG_HEADER)?;
    for r in records {
        let clicks: Vec<String> = r.clicks.iter().map(usize::to_string).collect();
        w.write_record([
            r.query_id.as_str(),
            r.cookie_id.as_str(),
            &r.timestamp.to_string(),
            &r.results.join(" "),
            &clicks.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_judgments<R: Read>(input: R) -> Result<Vec<RelevanceJudgment>> {
    let mut reader = tsv_reader(input);
    check_header(reader.headers()?, &JUDGMENT_HEADER, 3)?;
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let line = n + 2;
        if row.len() != 3 {
            bail!("judgment line {line}: expected 3 fields, found {}", row.len());
        }
        let score: u8 = row[2]
            .trim()
            .parse()
            .with_context(|| format!("judgment line {line}: bad score {:?}", &row[2]))?;
        if score > 4 {
            bail!("judgment line {line}: score {score} outside 0..=4");
        }
        out.push(RelevanceJudgment {
            query_id: row[0].to_string(),
            result_id: row[1].to_string(),
            score,
        });
    }
    Ok(out)
}

pub fn write_judgments<W: Write>(output: W, judgments: &[RelevanceJudgment]) -> Result<()> {
    let mut w = tsv_writer(output);
    w.write_record(JUDGMENT_HEADER)?;
    for j in judgments {
        w.write_record([j.query_id.as_str(), j.result_id.as_str(), &j.score.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectories<W: Write>(output: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(TRAJECTORY_HEADER)?;
    for tr in trajectories {
        let seed = tr.seed_index.to_string();
        for (t, u) in tr.payoffs.iter().enumerate() {
            w.write_record([&t.to_string(), &seed, &format_float(*u)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows must be grouped by seed with `t` counting up from 0.
pub fn read_trajectories<R: Read>(input: R) -> Result<TrajectorySet> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(reader.headers()?, &TRAJECTORY_HEADER, 3)?;
    let mut seeds: Vec<u64> = Vec::new();
    let mut payoffs: Vec<Vec<f64>> = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let parse = |k: usize| -> Result<&str> {
            row.get(k)
                .map(str::trim)
                .ok_or_else(|| anyhow!("line {line}: missing field"))
        };
        let t: usize = parse(0)?.parse().with_context(|| format!("line {line}: bad t"))?;
        let seed: u64 = parse(1)?.parse().with_context(|| format!("line {line}: bad seed"))?;
        let u: f64 = parse(2)?.parse().with_context(|| format!("line {line}: bad u"))?;
        if t == 0 {
            if seeds.contains(&seed) {
                bail!("line {line}: seed {seed} appears twice");
            }
            seeds.push(seed);
            payoffs.push(Vec::new());
        }
        match (seeds.last(), payoffs.last_mut()) {
            (Some(&s), Some(curve)) if s == seed && curve.len() == t => curve.push(u),
            _ => bail!("line {line}: rows must be grouped by seed with t = 0, 1, 2, ..."),
        }
    }
    Ok(TrajectorySet::new(seeds, payoffs)?)
}

/// Shortest decimal form that round-trips.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// About 12 significant digits with trailing zeros removed, for human output.
pub fn format_short(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = 12 - 1 - x.abs().log10().floor() as i32;
    let s = if (-300..=300).contains(&digits) && x.abs() >= 1e-6 && x.abs() < 1e15 {
        format!("{:.*}", digits.max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(k) => (&s[..k], &s[k..]),
        None => (s, ""),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    let out = format!("{mantissa}{exp}");
    if out == "-0" {
        "0".into()
    } else {
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(std::io::BufReader::new(f))
}
