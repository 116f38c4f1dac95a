//! Deterministic CSV series derived from a run report, ready for external
//! plotting. Identical reports produce byte-identical files; no timestamps
//! enter any of them.

use crate::error::{Error, Result};
use crate::harness::flory::{cost_curve, run_flory_balance};
use crate::harness::report::{RunReport, median};
use crate::lattice::LatticeBox;
use crate::observables::variance_bounds_scan;
use std::path::{Path, PathBuf};

fn open_csv(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish_csv(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Radius scaling series: per N, the median of converged replicate medians
/// and the envelope of their confidence intervals.
fn write_scaling_csv(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record(["N", "median_radius", "ci_lo", "ci_hi", "converged_replicates"])?;
    for &n in &report.config.n_grid {
        let cells: Vec<_> =
            report.points.iter().filter(|p| p.n_half == n && p.converged).collect();
        if cells.is_empty() {
            continue;
        }
        let medians: Vec<f64> = cells.iter().map(|p| p.median_radius).collect();
        let lo = cells.iter().map(|p| p.ci_lo).fold(f64::INFINITY, f64::min);
        let hi = cells.iter().map(|p| p.ci_hi).fold(f64::NEG_INFINITY, f64::max);
        w.write_record([
            n.to_string(),
            median(&medians).to_string(),
            lo.to_string(),
            hi.to_string(),
            cells.len().to_string(),
        ])?;
    }
    finish_csv(w, path)
}

fn write_control_csv(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record([
        "N",
        "replicate",
        "median_radius",
        "standard_error",
        "norm_beta_half",
        "norm_beta_minus_half",
    ])?;
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &report.control_points {
        w.write_record([
            row.n_half.to_string(),
            row.replicate.to_string(),
            row.median_radius.to_string(),
            row.standard_error.to_string(),
            fmt_opt(row.norm_beta_half),
            fmt_opt(row.norm_beta_minus_half),
        ])?;
    }
    finish_csv(w, path)
}

/// Extremes of the pairwise variance per box size, recomputed exactly from
/// the config (deterministic, no sampling).
fn write_variance_csv(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record(["N", "min_variance", "max_variance", "subsampled"])?;
    for &n in &report.config.n_grid {
        let bx = LatticeBox::new(n, report.config.dim)?;
        let scan = variance_bounds_scan(&bx, &report.config.params)?;
        w.write_record([
            n.to_string(),
            scan.min.to_string(),
            scan.max.to_string(),
            scan.subsampled.to_string(),
        ])?;
    }
    finish_csv(w, path)
}

/// Slope sweep of the balance objective at the largest box.
fn write_flory_curve_csv(report: &RunReport, path: &Path) -> Result<()> {
    let n = *report.config.n_grid.last().expect("config was validated");
    let mut w = open_csv(path)?;
    w.write_record(["a", "energy", "penalty"])?;
    for (a, e, p) in cost_curve(n, report.config.dim, 0.0, 1.2, 121) {
        w.write_record([a.to_string(), e.to_string(), p.to_string()])?;
    }
    finish_csv(w, path)
}

fn write_flory_balance_csv(report: &RunReport, path: &Path) -> Result<()> {
    let rows = run_flory_balance(&report.config.n_grid, report.config.dim, &report.config.params)?;
    let mut w = open_csv(path)?;
    w.write_record(["N", "a_star", "energy", "penalty", "radius", "radius_over_n"])?;
    for r in rows {
        w.write_record([
            r.n_half.to_string(),
            r.a_star.to_string(),
            r.energy.to_string(),
            r.penalty.to_string(),
            r.radius.to_string(),
            r.radius_over_n.to_string(),
        ])?;
    }
    finish_csv(w, path)
}

fn write_gamma_trend_csv(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record(["N", "gamma", "median_radius", "ess"])?;
    for g in &report.gamma_trend {
        w.write_record([
            g.n_half.to_string(),
            g.gamma.to_string(),
            g.median_radius.to_string(),
            g.ess.to_string(),
        ])?;
    }
    finish_csv(w, path)
}

/// Writes every plot series under `dir` and returns the created paths.
pub fn emit_plot_data(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let jobs: [(&str, fn(&RunReport, &Path) -> Result<()>); 6] = [
        ("scaling_radius.csv", write_scaling_csv),
        ("control_radius.csv", write_control_csv),
        ("variance_bounds.csv", write_variance_csv),
        ("flory_curve.csv", write_flory_curve_csv),
        ("flory_balance.csv", write_flory_balance_csv),
        ("gamma_trend.csv", write_gamma_trend_csv),
    ];
    let mut written = Vec::with_capacity(jobs.len());
    for (name, job) in jobs {
        let path = dir.join(name);
        job(report, &path)?;
        written.push(path);
    }
    Ok(written)
}
