//! Run reports: per-cell measurement records, autocorrelation-aware effective
//! sample sizes, fitted exponents, and a JSON-lines serialization whose
//! timing fields can be stripped to compare runs byte for byte.

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io;
use std::path::Path;

/// Keys holding wall-clock data; excluded when comparing payloads.
pub const TIMING_KEYS: &[&str] = &["created_unix", "timestamp", "wall_secs"];

/// Least-squares exponent with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub exponent: f64,
    pub standard_error: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub reliable: bool,
    pub points: usize,
}

/// One (N, replicate) Metropolis measurement cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub n_half: u32,
    pub replicate: usize,
    pub seed: u64,
    pub chain_stream: u64,
    pub step_range: (u64, u64),
    pub samples: usize,
    pub median_radius: f64,
    pub mean_radius: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ess: f64,
    pub converged: bool,
    pub acceptance_local: f64,
    pub acceptance_dilation: f64,
    pub penalty_mean: f64,
    pub penalty_sd: f64,
    pub wall_secs: f64,
    pub importance_radius: Option<f64>,
    pub importance_se: Option<f64>,
    pub importance_ess: Option<f64>,
}

/// One exact-sampler control cell at γ = 0, with the radius normalized both
/// ways the growth rate can be read: against `√β · ln N` and `ln N / √β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlRow {
    pub n_half: u32,
    pub replicate: usize,
    pub seed: u64,
    pub draw_stream: u64,
    pub samples: usize,
    pub median_radius: f64,
    pub mean_radius: f64,
    pub standard_error: f64,
    pub norm_beta_half: Option<f64>,
    pub norm_beta_minus_half: Option<f64>,
}

/// Median radius at one (N, γ) for the stretching-trend probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaTrendRow {
    pub n_half: u32,
    pub gamma: f64,
    pub seed: u64,
    pub chain_stream: u64,
    pub median_radius: f64,
    pub ess: f64,
}

/// Full output of a scaling study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub git_hash: Option<String>,
    pub created_unix: u64,
    pub points: Vec<PointReport>,
    pub fit: Option<FitSummary>,
    pub control_points: Vec<ControlRow>,
    pub control_fit: Option<FitSummary>,
    pub gamma_trend: Vec<GammaTrendRow>,
    pub wall_secs: f64,
}

/// Sample median (average of the two central order statistics when even).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of an empty series");
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 { v[m / 2] } else { (v[m / 2 - 1] + v[m / 2]) / 2.0 }
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty(), "mean of an empty series");
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Effective sample size of a stationary series from its empirical
/// autocorrelations, summed over initial positive pairs. A constant series
/// reports its full length; the result is clamped to `[1, len]`.
pub fn autocorrelation_ess(series: &[f64]) -> f64 {
    let m = series.len();
    if m < 4 {
        return m as f64;
    }
    let mean = series.iter().sum::<f64>() / m as f64;
    let cov = |k: usize| -> f64 {
        series[..m - k].iter().zip(&series[k..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>()
            / m as f64
    };
    let c0 = cov(0);
    if c0 <= 0.0 {
        return m as f64;
    }
    // Sum autocorrelations while consecutive pairs stay positive.
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < m / 2 {
        let pair = if k == 0 { 1.0 + cov(1) / c0 } else { (cov(k) + cov(k + 1)) / c0 };
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    (m as f64 / tau.max(1.0)).clamp(1.0, m as f64)
}

/// Commit hash of the working tree, if this runs inside a git checkout.
pub fn detect_git_hash() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    if !out.status.success() {
        return None;
    }
    let hash = String::from_utf8(out.stdout).ok()?.trim().to_string();
    (!hash.is_empty()).then_some(hash)
}

fn jsonl_line<W: io::Write, T: Serialize>(w: &mut W, kind: &str, body: &T) -> Result<()> {
    let mut v = serde_json::to_value(body)?;
    if let Value::Object(map) = &mut v {
        map.insert("kind".into(), Value::String(kind.into()));
    } else {
        v = serde_json::json!({ "kind": kind, "value": v });
    }
    serde_json::to_writer(&mut *w, &v)?;
    w.write_all(b"\n").map_err(|e| Error::io("<jsonl stream>", e))?;
    Ok(())
}

/// Writes the report as JSON lines: one `config` record, one record per
/// measurement, `fit` records, and a trailing `meta` record.
pub fn write_report_jsonl<W: io::Write>(report: &RunReport, mut w: W) -> Result<()> {
    jsonl_line(&mut w, "config", &report.config)?;
    for p in &report.points {
        jsonl_line(&mut w, "point", p)?;
    }
    if let Some(fit) = &report.fit {
        jsonl_line(&mut w, "fit", fit)?;
    }
    for c in &report.control_points {
        jsonl_line(&mut w, "control_point", c)?;
    }
    if let Some(fit) = &report.control_fit {
        jsonl_line(&mut w, "control_fit", fit)?;
    }
    for g in &report.gamma_trend {
        jsonl_line(&mut w, "gamma_trend", g)?;
    }
    jsonl_line(
        &mut w,
        "meta",
        &serde_json::json!({
            "git_hash": report.git_hash,
            "created_unix": report.created_unix,
            "wall_secs": report.wall_secs,
        }),
    )?;
    Ok(())
}

pub fn write_report_file(report: &RunReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_report_jsonl(report, io::BufWriter::new(file))
}

fn strip_timing(value: &mut Value) {
    match value {
        Value::Object(map) => {
            for key in TIMING_KEYS {
                map.remove(*key);
            }
            for (_, v) in map.iter_mut() {
                strip_timing(v);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// Canonical form of a JSON-lines payload for reproducibility comparison:
/// timing keys removed at every nesting level, keys sorted, one record per
/// line. Two runs of the same seeded config must agree on this byte for byte.
pub fn canonical_jsonl(text: &str) -> Result<String> {
    let mut out = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut v: Value = serde_json::from_str(line)?;
        strip_timing(&mut v);
        out.push_str(&serde_json::to_string(&v)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn canonical_jsonl_file(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    canonical_jsonl(&text)
}

/// Rebuilds a report from its JSON-lines form. Inverse of
/// [`write_report_jsonl`] up to the `kind` tags.
pub fn read_report_jsonl(text: &str) -> Result<RunReport> {
    let mut config = None;
    let mut points = Vec::new();
    let mut fit = None;
    let mut control_points = Vec::new();
    let mut control_fit = None;
    let mut gamma_trend = Vec::new();
    let mut git_hash = None;
    let mut created_unix = 0;
    let mut wall_secs = 0.0;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line)?;
        let kind = v["kind"].as_str().unwrap_or("");
        match kind {
            "config" => config = Some(serde_json::from_value(v)?),
            "point" => points.push(serde_json::from_value(v)?),
            "fit" => fit = Some(serde_json::from_value(v)?),
            "control_point" => control_points.push(serde_json::from_value(v)?),
            "control_fit" => control_fit = Some(serde_json::from_value(v)?),
            "gamma_trend" => gamma_trend.push(serde_json::from_value(v)?),
            "meta" => {
                git_hash = v["git_hash"].as_str().map(String::from);
                created_unix = v["created_unix"].as_u64().unwrap_or(0);
                wall_secs = v["wall_secs"].as_f64().unwrap_or(0.0);
            }
            other => {
                return Err(Error::Config(format!("unrecognized record kind {other:?}")));
            }
        }
    }
    let config =
        config.ok_or_else(|| Error::Config("payload contains no config record".into()))?;
    Ok(RunReport {
        config,
        git_hash,
        created_unix,
        points,
        fit,
        control_points,
        control_fit,
        gamma_trend,
        wall_secs,
    })
}

pub fn read_report_file(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_report_jsonl(&text)
}
