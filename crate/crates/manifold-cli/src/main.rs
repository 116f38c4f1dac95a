//! Command-line front end for the manifold-core experiments.
//!
//! Every subcommand reads the same flat `key = value` experiment config
//! (`--config FILE`, then `--set KEY=VALUE` overrides on top) and writes its
//! outputs under the configured `output_dir`.
//!
//! Exit codes: 0 on success, 1 when a run fails an invariant or an i/o step,
//! 2 when the configuration itself is rejected.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use manifold_core::harness::{
    ExperimentConfig, emit_plot_data, read_report_file, run_flory_balance, run_scaling_study,
    run_validation_suite, write_report_file,
};
use manifold_core::lattice::{LatticeBox, dirichlet_energy};
use manifold_core::observables::{
    effective_radius, penalty_integral, semigroup_diagnostics, variance_bounds_scan, variance_pair,
};
use manifold_core::observables::{log_spaced_grid, semigroup, variance};
use manifold_core::sampling::chain::{read_checkpoint, write_checkpoint};
use manifold_core::sampling::{ChainState, drift_field, run_sweeps, sample_free_field};
use manifold_core::spectral::eigendecompose;
use manifold_core::{Error, FieldConfig};

#[derive(Parser)]
#[command(name = "manifold", version, about = "Lattice field experiments")]
struct Cli {
    /// Experiment config file (flat `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set n_grid=4,8,16`. Repeatable.
    #[arg(long, value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw exact Gaussian field samples and summarize them as JSONL.
    Sample {
        /// Number of independent draws.
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Output path; defaults to `<output_dir>/samples.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one Metropolis chain and print its summary.
    Mcmc {
        /// Resume from a checkpoint file instead of a fresh start.
        #[arg(long)]
        checkpoint_in: Option<PathBuf>,
        /// Write the final chain state to this checkpoint file.
        #[arg(long)]
        checkpoint_out: Option<PathBuf>,
    },
    /// Scan pairwise field variances over the configured box sizes.
    Variance,
    /// Run the full multi-size scaling study and write its JSONL report.
    Scaling,
    /// Print the energy/penalty balance table for linear trial fields.
    Flory,
    /// Tabulate reflected-walk return probabilities per box size.
    Semigroup,
    /// Run the self-contained validation suite.
    Validate,
    /// Re-derive the plotting CSVs from a saved scaling report.
    EmitPlots {
        /// Report to read; defaults to `<output_dir>/run.jsonl`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for pair in &cli.set {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set wants KEY=VALUE, got {pair:?}")))?;
        cfg.set_key(key.trim(), value.trim())?;
    }
    cfg.check()?;
    Ok(cfg)
}

fn first_box(cfg: &ExperimentConfig) -> Result<LatticeBox, Error> {
    LatticeBox::new(cfg.n_grid[0], cfg.dim)
}

fn create_output_file(path: &Path) -> Result<BufWriter<File>, Error> {
    if let Some(dir) = path.parent()
        && !dir.as_os_str().is_empty()
    {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn cmd_sample(cfg: &ExperimentConfig, count: usize, out: Option<PathBuf>) -> Result<(), Error> {
    if count == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    let bx = first_box(cfg)?;
    let basis = eigendecompose(&bx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let path = out.unwrap_or_else(|| cfg.output_dir.join("samples.jsonl"));
    let mut w = create_output_file(&path)?;
    for i in 0..count {
        let field = sample_free_field(&basis, &cfg.params, &mut rng)?;
        let radius = effective_radius(&field)?;
        let mut energy = 0.0;
        for c in &field.components {
            energy += dirichlet_energy(c, c, &bx)?;
        }
        let penalty = penalty_integral(&field)?.total;
        let line = serde_json::json!({
            "sample": i,
            "radius": radius,
            "energy": energy,
            "penalty": penalty,
        });
        writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    println!("wrote {count} draws at N={} d={} to {}", bx.n_half(), bx.dim(), path.display());
    Ok(())
}

fn cmd_mcmc(
    cfg: &ExperimentConfig,
    checkpoint_in: Option<PathBuf>,
    checkpoint_out: Option<PathBuf>,
) -> Result<(), Error> {
    let chain_cfg = cfg.chain_config();
    let (mut state, params) = match &checkpoint_in {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let cp = read_checkpoint(BufReader::new(file))?;
            ChainState::restore(&cp, &chain_cfg)?
        }
        None => {
            let bx = first_box(cfg)?;
            let start = if cfg.params.gamma > 0.0 {
                let flory = manifold_core::harness::flory_optimum(bx.n_half(), bx.dim(), &cfg.params)?;
                drift_field(&bx, flory.a_star)
            } else {
                FieldConfig::zeros(bx)
            };
            (ChainState::new(start, &chain_cfg, 0)?, cfg.params)
        }
    };
    let t0 = Instant::now();
    run_sweeps(&mut state, &params, &chain_cfg, chain_cfg.sweeps);
    let secs = t0.elapsed().as_secs_f64();
    let field = state.field();
    let (acc_local, acc_dilation) = state.acceptance_rates();
    println!(
        "steps={} radius={:.6} energy={:.6} penalty={:.6} acc_local={:.3} acc_dilation={:.3} sigma={:.4} wall={:.1}s",
        state.step_count(),
        effective_radius(&field)?,
        state.energy(),
        state.penalty_total(),
        acc_local,
        acc_dilation,
        state.sigma(),
        secs,
    );
    let (energy_err, penalty_err) = state.cache_errors();
    if !(energy_err < 1e-6 && penalty_err < 1e-6) {
        return Err(Error::Numerical {
            what: format!("chain caches drifted: energy {energy_err:.3e}, penalty {penalty_err:.3e}"),
        });
    }
    if let Some(path) = checkpoint_out {
        let w = create_output_file(&path)?;
        write_checkpoint(&state.checkpoint(&params), w)?;
        println!("checkpoint written to {}", path.display());
    }
    Ok(())
}

fn cmd_variance(cfg: &ExperimentConfig) -> Result<(), Error> {
    let path = cfg.output_dir.join("variance_pairs.csv");
    let mut w = create_output_file(&path)?;
    for &n in &cfg.n_grid {
        let bx = LatticeBox::new(n, cfg.dim)?;
        let scan = variance_bounds_scan(&bx, &cfg.params)?;
        let extremes = [
            variance_pair(&bx, &cfg.params, scan.argmin.0, scan.argmin.1)?,
            variance_pair(&bx, &cfg.params, scan.argmax.0, scan.argmax.1)?,
        ];
        variance::write_variance_csv(n, &extremes, &mut w)?;
        println!(
            "N={n}: var in [{:.6e}, {:.6e}] over {} pairs{}",
            scan.min,
            scan.max,
            scan.pairs_scanned,
            if scan.subsampled { " (landmark subsample)" } else { "" },
        );
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    println!("extreme pairs written to {}", path.display());
    Ok(())
}

fn cmd_scaling(cfg: &ExperimentConfig) -> Result<(), Error> {
    let report = run_scaling_study(cfg)?;
    let converged = report.points.iter().filter(|p| p.converged).count();
    println!("{} of {} chain cells converged", converged, report.points.len());
    match &report.fit {
        Some(fit) => println!(
            "fitted exponent {:.4} +- {:.4} over {} sizes (R^2 = {:.4}{})",
            fit.exponent,
            fit.standard_error,
            fit.points,
            fit.r_squared,
            if fit.reliable { "" } else { ", unreliable" },
        ),
        None => println!("no exponent fit: fewer than 3 converged sizes"),
    }
    if let Some(fit) = &report.control_fit {
        println!(
            "free-field control exponent {:.4} +- {:.4} (R^2 = {:.4})",
            fit.exponent, fit.standard_error, fit.r_squared
        );
    }
    let path = cfg.output_dir.join("run.jsonl");
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    write_report_file(&report, &path)?;
    println!("report written to {}", path.display());
    Ok(())
}

fn cmd_flory(cfg: &ExperimentConfig) -> Result<(), Error> {
    let rows = run_flory_balance(&cfg.n_grid, cfg.dim, &cfg.params)?;
    println!("{:>4} {:>10} {:>14} {:>14} {:>14} {:>10}", "N", "a*", "energy", "penalty", "cost", "R/N");
    for r in &rows {
        println!(
            "{:>4} {:>10.6} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.4}",
            r.n_half, r.a_star, r.energy, r.penalty, r.cost, r.radius_over_n
        );
    }
    Ok(())
}

fn cmd_semigroup(cfg: &ExperimentConfig) -> Result<(), Error> {
    for &n in &cfg.n_grid {
        let t_max = f64::from(n * n).max(2.0);
        let grid = log_spaced_grid(1.0, t_max, 25);
        let rows = semigroup_diagnostics(n, &grid)?;
        let path = cfg.output_dir.join(format!("semigroup_n{n}.csv"));
        let w = create_output_file(&path)?;
        semigroup::write_semigroup_csv(n, &rows, w)?;
        let window: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| (10.0..=100.0).contains(&r.t))
            .map(|r| (r.t, r.return_prob))
            .collect();
        if window.len() >= 3 {
            let fit = manifold_core::fitting::power_law_fit(&window)?;
            println!(
                "N={n}: decay slope {:.4} over t in [10, 100] ({} points), csv {}",
                fit.slope,
                fit.points,
                path.display(),
            );
        } else {
            println!("N={n}: grid too short for a slope fit, csv {}", path.display());
        }
    }
    Ok(())
}

fn cmd_validate() -> Result<(), Error> {
    let summary = run_validation_suite();
    print!("{}", summary.render());
    if summary.passed_all {
        Ok(())
    } else {
        Err(Error::Numerical { what: "validation suite failed".into() })
    }
}

fn cmd_emit_plots(cfg: &ExperimentConfig, report_path: Option<PathBuf>) -> Result<(), Error> {
    let path = report_path.unwrap_or_else(|| cfg.output_dir.join("run.jsonl"));
    let report = read_report_file(&path)?;
    let written = emit_plot_data(&report, &cfg.output_dir)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Sample { count, out } => cmd_sample(&cfg, count, out),
        Command::Mcmc { checkpoint_in, checkpoint_out } => {
            cmd_mcmc(&cfg, checkpoint_in, checkpoint_out)
        }
        Command::Variance => cmd_variance(&cfg),
        Command::Scaling => cmd_scaling(&cfg),
        Command::Flory => cmd_flory(&cfg),
        Command::Semigroup => cmd_semigroup(&cfg),
        Command::Validate => cmd_validate(),
        Command::EmitPlots { report } => cmd_emit_plots(&cfg, report),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
