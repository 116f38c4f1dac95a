//! The headline experiment: how the effective radius of the repulsion-tilted
//! field grows with the box size, contrasted against the free field at γ = 0.
//!
//! Work fans out over (N, replicate) cells; each cell owns a distinct RNG
//! stream derived from the experiment seed, and results are merged in cell
//! order so the report is identical however many workers run.

use crate::error::Result;
use crate::fitting::power_law_fit;
use crate::harness::config::ExperimentConfig;
use crate::harness::flory::flory_optimum;
use crate::harness::report::{
    ControlRow, FitSummary, GammaTrendRow, PointReport, RunReport, autocorrelation_ess,
    detect_git_hash, mean_sd, median,
};
use crate::lattice::{FieldConfig, LatticeBox};
use crate::observables::effective_radius;
use crate::parallel::map_indexed;
use crate::sampling::{
    ChainState, GibbsParams, estimate_tilted_expectation, mcmc_step, sample_free_field,
};
use crate::spectral::eigendecompose;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Effective samples a cell needs to count as converged.
pub const MIN_POINT_ESS: f64 = 50.0;

/// Fits with a coefficient of determination below this are flagged.
pub const MIN_FIT_R_SQUARED: f64 = 0.9;

/// Largest half-width at which the importance-sampling cross-check runs.
pub const CROSS_CHECK_MAX_N: u32 = 4;

const CROSS_CHECK_SAMPLES: usize = 2000;
const CONTROL_SAMPLES: usize = 200;
const TREND_GAMMAS: [f64; 3] = [0.25, 0.5, 1.0];

// Disjoint stream ranges per sampler family, all under the one seed.
const CROSS_CHECK_STREAM_BASE: u64 = 1 << 32;
const CONTROL_STREAM_BASE: u64 = 2 << 32;
const TREND_STREAM_BASE: u64 = 3 << 32;

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Summarizes a radius series into one measurement cell.
struct SeriesStats {
    median: f64,
    mean: f64,
    ci_lo: f64,
    ci_hi: f64,
    ess: f64,
}

fn series_stats(series: &[f64]) -> SeriesStats {
    let (mean, sd) = mean_sd(series);
    let ess = autocorrelation_ess(series);
    let se = if ess > 0.0 { sd / ess.sqrt() } else { f64::INFINITY };
    SeriesStats {
        median: median(series),
        mean,
        ci_lo: mean - 1.96 * se,
        ci_hi: mean + 1.96 * se,
        ess,
    }
}

/// Warm start for the tilted chain: the balance-point dilation family, which
/// sits in the stretched phase the chain is expected to occupy.
fn warm_start(bx: &LatticeBox, params: &GibbsParams) -> Result<FieldConfig> {
    if params.gamma == 0.0 {
        return Ok(FieldConfig::zeros(bx.clone()));
    }
    let row = flory_optimum(bx.n_half(), bx.dim(), params)?;
    Ok(crate::sampling::drift_field(bx, row.a_star))
}

fn run_cell(cfg: &ExperimentConfig, n_half: u32, replicate: usize, stream: u64) -> Result<PointReport> {
    let start = Instant::now();
    let bx = LatticeBox::new(n_half, cfg.dim)?;
    let chain_cfg = cfg.chain_config();
    let mut chain = ChainState::new(warm_start(&bx, &cfg.params)?, &chain_cfg, stream)?;
    let per_sweep = bx.site_count() * bx.dim() as usize;

    for _ in 0..chain_cfg.burn_in * per_sweep {
        mcmc_step(&mut chain, &cfg.params, &chain_cfg);
    }
    let sample_start = chain.step_count();

    let mut radii = Vec::with_capacity(chain_cfg.sweeps / chain_cfg.thinning + 1);
    let mut penalties = Vec::with_capacity(radii.capacity());
    for sweep in 0..chain_cfg.sweeps {
        for _ in 0..per_sweep {
            mcmc_step(&mut chain, &cfg.params, &chain_cfg);
        }
        if (sweep + 1) % chain_cfg.thinning == 0 {
            radii.push(effective_radius(&chain.field())?);
            penalties.push(chain.penalty_total());
        }
    }

    let stats = series_stats(&radii);
    let (penalty_mean, penalty_sd) = mean_sd(&penalties);
    let (acc_local, acc_dilation) = chain.acceptance_rates();

    let mut importance_radius = None;
    let mut importance_se = None;
    let mut importance_ess = None;
    if n_half <= CROSS_CHECK_MAX_N && cfg.params.gamma > 0.0 {
        let basis = eigendecompose(&bx)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(CROSS_CHECK_STREAM_BASE + stream);
        let est = estimate_tilted_expectation(
            &basis,
            &cfg.params,
            CROSS_CHECK_SAMPLES,
            |f| effective_radius(f).expect("draws are valid fields"),
            &mut rng,
        )?;
        importance_radius = Some(est.value);
        importance_se = Some(est.standard_error);
        importance_ess = Some(est.ess);
    }

    Ok(PointReport {
        n_half,
        replicate,
        seed: cfg.seed,
        chain_stream: stream,
        step_range: (sample_start, chain.step_count()),
        samples: radii.len(),
        median_radius: stats.median,
        mean_radius: stats.mean,
        ci_lo: stats.ci_lo,
        ci_hi: stats.ci_hi,
        ess: stats.ess,
        converged: stats.ess >= MIN_POINT_ESS,
        acceptance_local: acc_local,
        acceptance_dilation: acc_dilation,
        penalty_mean,
        penalty_sd,
        wall_secs: start.elapsed().as_secs_f64(),
        importance_radius,
        importance_se,
        importance_ess,
    })
}

/// Exponent fit over per-N medians; an N enters only through converged cells.
fn fit_points(points: &[PointReport], n_grid: &[u32]) -> Result<FitSummary> {
    let mut pairs = Vec::new();
    for &n in n_grid {
        let medians: Vec<f64> = points
            .iter()
            .filter(|p| p.n_half == n && p.converged)
            .map(|p| p.median_radius)
            .collect();
        if !medians.is_empty() {
            pairs.push((n as f64, median(&medians)));
        }
    }
    let fit = power_law_fit(&pairs)?;
    Ok(FitSummary {
        exponent: fit.slope,
        standard_error: fit.slope_se,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        reliable: fit.r_squared >= MIN_FIT_R_SQUARED,
        points: fit.points,
    })
}

/// γ = 0 control: exact spectral draws of the free field, one basis per N
/// shared across replicates, radii normalized against both readings of the
/// predicted logarithmic growth.
fn run_control(cfg: &ExperimentConfig) -> Result<(Vec<ControlRow>, Option<FitSummary>)> {
    let beta = cfg.params.beta;
    let free = GibbsParams::new(beta, 0.0)?;
    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let bx = LatticeBox::new(n, cfg.dim)?;
        let basis = eigendecompose(&bx)?;
        let replicate_rows: Vec<Result<ControlRow>> = map_indexed(cfg.replicates, |rep| {
            let stream = CONTROL_STREAM_BASE + (ni * cfg.replicates + rep) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream);
            let mut radii = Vec::with_capacity(CONTROL_SAMPLES);
            for _ in 0..CONTROL_SAMPLES {
                radii.push(effective_radius(&sample_free_field(&basis, &free, &mut rng)?)?);
            }
            let (mean, sd) = mean_sd(&radii);
            let med = median(&radii);
            let log_n = (n as f64).ln();
            let (norm_a, norm_b) = if log_n > 0.0 {
                (Some(med / (beta.sqrt() * log_n)), Some(med * beta.sqrt() / log_n))
            } else {
                (None, None)
            };
            Ok(ControlRow {
                n_half: n,
                replicate: rep,
                seed: cfg.seed,
                draw_stream: stream,
                samples: CONTROL_SAMPLES,
                median_radius: med,
                mean_radius: mean,
                standard_error: sd / (CONTROL_SAMPLES as f64).sqrt(),
                norm_beta_half: norm_a,
                norm_beta_minus_half: norm_b,
            })
        });
        for row in replicate_rows {
            rows.push(row?);
        }
    }

    let mut pairs = Vec::new();
    for &n in &cfg.n_grid {
        let medians: Vec<f64> =
            rows.iter().filter(|r| r.n_half == n).map(|r| r.median_radius).collect();
        pairs.push((n as f64, median(&medians)));
    }
    let fit = match power_law_fit(&pairs) {
        Ok(f) => Some(FitSummary {
            exponent: f.slope,
            standard_error: f.slope_se,
            intercept: f.intercept,
            r_squared: f.r_squared,
            reliable: f.r_squared >= MIN_FIT_R_SQUARED,
            points: f.points,
        }),
        Err(e) => {
            log::warn!("control fit skipped: {e}");
            None
        }
    };
    Ok((rows, fit))
}

/// Stretching trend at the smallest box: median radius as γ steps up.
/// Reported, not asserted.
fn run_gamma_trend(cfg: &ExperimentConfig) -> Result<Vec<GammaTrendRow>> {
    let n = cfg.n_grid[0];
    let bx = LatticeBox::new(n, cfg.dim)?;
    let chain_cfg = cfg.chain_config();
    let per_sweep = bx.site_count() * bx.dim() as usize;
    let rows: Vec<Result<GammaTrendRow>> = map_indexed(TREND_GAMMAS.len(), |gi| {
        let stream = TREND_STREAM_BASE + gi as u64;
        let params = GibbsParams::new(cfg.params.beta, TREND_GAMMAS[gi])?;
        let mut chain = ChainState::new(warm_start(&bx, &params)?, &chain_cfg, stream)?;
        let mut radii = Vec::new();
        for step in 0..(chain_cfg.burn_in + chain_cfg.sweeps) * per_sweep {
            mcmc_step(&mut chain, &params, &chain_cfg);
            if step >= chain_cfg.burn_in * per_sweep && step % (chain_cfg.thinning * per_sweep) == 0
            {
                radii.push(effective_radius(&chain.field())?);
            }
        }
        Ok(GammaTrendRow {
            n_half: n,
            gamma: TREND_GAMMAS[gi],
            seed: cfg.seed,
            chain_stream: stream,
            median_radius: median(&radii),
            ess: autocorrelation_ess(&radii),
        })
    });
    rows.into_iter().collect()
}

/// Full scaling study: tilted chains over the N-grid, exponent fit, free-field
/// control, and the γ trend, merged in deterministic cell order.
pub fn run_scaling_study(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.check()?;
    let start = Instant::now();
    let cells: Vec<(u32, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();

    let results: Vec<Result<PointReport>> = map_indexed(cells.len(), |i| {
        let (n, rep) = cells[i];
        run_cell(cfg, n, rep, i as u64)
    });
    let mut points = Vec::with_capacity(results.len());
    for r in results {
        points.push(r?);
    }
    for p in &points {
        if !p.converged {
            log::warn!(
                "cell N={} replicate {} unconverged: ess {:.1} < {MIN_POINT_ESS}",
                p.n_half,
                p.replicate,
                p.ess
            );
        }
    }

    let fit = match fit_points(&points, &cfg.n_grid) {
        Ok(f) => Some(f),
        Err(e) => {
            log::warn!("scaling fit skipped: {e}");
            None
        }
    };
    let (control_points, control_fit) = run_control(cfg)?;
    let gamma_trend = run_gamma_trend(cfg)?;

    Ok(RunReport {
        config: cfg.clone(),
        git_hash: detect_git_hash(),
        created_unix: unix_now(),
        points,
        fit,
        control_points,
        control_fit,
        gamma_trend,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::report::{canonical_jsonl, write_report_jsonl};

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.n_grid = vec![1, 2, 3];
        cfg.dim = 2;
        cfg.replicates = 2;
        cfg.params.gamma = 0.5;
        cfg.mcmc.sweeps = 60;
        cfg.mcmc.burn_in = 20;
        cfg.mcmc.thinning = 2;
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn study_produces_one_point_per_cell_in_order() {
        let cfg = tiny_config();
        let report = run_scaling_study(&cfg).unwrap();
        assert_eq!(report.points.len(), 6);
        let cells: Vec<(u32, usize)> =
            report.points.iter().map(|p| (p.n_half, p.replicate)).collect();
        assert_eq!(cells, vec![(1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (3, 1)]);
        for p in &report.points {
            assert!(p.samples == 30);
            assert!(p.median_radius > 0.0);
            assert!(p.step_range.1 > p.step_range.0);
            // Cross-check runs at these sizes.
            assert!(p.importance_radius.is_some());
        }
        assert_eq!(report.control_points.len(), 6);
        assert_eq!(report.gamma_trend.len(), 3);
        assert!(report.gamma_trend.iter().all(|g| g.n_half == 1));
    }

    #[test]
    fn same_config_gives_identical_canonical_payloads() {
        let cfg = tiny_config();
        let a = run_scaling_study(&cfg).unwrap();
        let b = run_scaling_study(&cfg).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_report_jsonl(&a, &mut buf_a).unwrap();
        write_report_jsonl(&b, &mut buf_b).unwrap();
        let ca = canonical_jsonl(&String::from_utf8(buf_a).unwrap()).unwrap();
        let cb = canonical_jsonl(&String::from_utf8(buf_b).unwrap()).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn different_seeds_change_the_payload() {
        let cfg = tiny_config();
        let mut cfg2 = cfg.clone();
        cfg2.seed = 6;
        let a = run_scaling_study(&cfg).unwrap();
        let b = run_scaling_study(&cfg2).unwrap();
        assert_ne!(a.points[0].median_radius, b.points[0].median_radius);
    }

    #[test]
    fn invalid_grids_are_refused() {
        let mut cfg = tiny_config();
        cfg.n_grid = vec![3, 2];
        assert!(run_scaling_study(&cfg).is_err());
    }

    #[test]
    fn control_rows_carry_both_normalizations() {
        let mut cfg = tiny_config();
        cfg.n_grid = vec![2, 3];
        cfg.params.beta = 4.0;
        cfg.replicates = 1;
        let (rows, _) = run_control(&cfg).unwrap();
        for row in rows {
            let a = row.norm_beta_half.unwrap();
            let b = row.norm_beta_minus_half.unwrap();
            // The two readings differ by a factor β.
            assert!((b / a - 4.0).abs() < 1e-9);
        }
    }
}
