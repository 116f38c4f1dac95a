//! One-command health check: every module's load-bearing invariant exercised
//! at small sizes, plus a fault-injection check proving the detectors can
//! actually fail. Budgeted for well under ten minutes on one core.

use crate::error::Result;
use crate::harness::report::mean_sd;
use crate::lattice::{LatticeBox, ScalarField, apply_laplacian, dirichlet_energy, inner_product};
use crate::observables::{
    penalty_by_quadrature, penalty_jensen_check, semigroup_diagnostics,
    log_spaced_grid, variance_bounds_scan, variance_pair, variance_pair_spectral,
};
use crate::fitting::power_law_fit;
use crate::sampling::{GibbsParams, drift_field, sample_free_field};
use crate::spectral::{drift_coefficients, drift_coefficient_closed_form, eigendecompose};
use crate::values::ValuePoints;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Outcome of one named check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub secs: f64,
}

/// All check outcomes plus the verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub checks: Vec<CheckResult>,
    pub passed_all: bool,
    pub secs: f64,
}

impl ValidationSummary {
    /// One line per check, `ok`/`FAIL` first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            out.push_str(&format!("{mark}  {:<28} {} ({:.2}s)\n", c.name, c.detail, c.secs));
        }
        out.push_str(&format!(
            "{}: {} of {} checks passed ({:.2}s)\n",
            if self.passed_all { "PASS" } else { "FAIL" },
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len(),
            self.secs,
        ));
        out
    }
}

struct Runner {
    checks: Vec<CheckResult>,
}

impl Runner {
    fn run<F: FnOnce() -> Result<(bool, String)>>(&mut self, name: &str, f: F) {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
            secs: start.elapsed().as_secs_f64(),
        });
    }
}

fn pseudo_random(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed.max(1);
    move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

fn check_orthonormality() -> Result<(bool, String)> {
    let mut worst_gram = 0.0f64;
    let mut worst_res = 0.0f64;
    for (n, d) in [(8u32, 1u32), (4, 2)] {
        let basis = eigendecompose(&LatticeBox::new(n, d)?)?;
        worst_gram = worst_gram.max(basis.gram_deviation());
        worst_res = worst_res.max(basis.max_eigen_residual());
    }
    Ok((
        worst_gram < 1e-9 && worst_res < 1e-8,
        format!("gram {worst_gram:.2e}, residual {worst_res:.2e}"),
    ))
}

fn check_laplacian_identity() -> Result<(bool, String)> {
    let mut next = pseudo_random(41);
    let mut worst = 0.0f64;
    for d in 1..=3u32 {
        let bx = LatticeBox::new(3, d)?;
        for _ in 0..5 {
            let f = ScalarField::new((0..bx.site_count()).map(|_| next()).collect());
            let g = ScalarField::new((0..bx.site_count()).map(|_| next()).collect());
            let lhs = dirichlet_energy(&f, &g, &bx)?;
            let rhs = -inner_product(&f, &apply_laplacian(&g, &bx)?);
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }
    Ok((worst < 1e-10, format!("max relative defect {worst:.2e}")))
}

fn check_covariance() -> Result<(bool, String)> {
    let bx = LatticeBox::new(1, 2)?;
    let basis = eigendecompose(&bx)?;
    let params = GibbsParams::new(1.3, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let draws = 20_000usize;
    let mut worst = 0.0f64;
    for k in [1usize, 6] {
        let mode = basis.mode(k).to_vec();
        let coeffs: Vec<f64> = (0..draws)
            .map(|_| {
                let f = sample_free_field(&basis, &params, &mut rng).expect("valid basis");
                f.components[0].values.iter().zip(&mode).map(|(v, m)| v * m).sum()
            })
            .collect();
        let (_, sd) = mean_sd(&coeffs);
        let target = 1.0 / (2.0 * params.beta * basis.eigenvalues()[k]);
        let se = target * (2.0 / draws as f64).sqrt();
        worst = worst.max((sd * sd - target).abs() / se);
    }
    Ok((worst < 4.0, format!("worst deviation {worst:.2} standard errors")))
}

fn check_penalty_oracle() -> Result<(bool, String)> {
    let mut next = pseudo_random(97);
    let mut worst = 0.0f64;
    for trial in 0..5 {
        let n = 10 + trial * 6;
        let coords: Vec<f64> = (0..2 * n).map(|_| next() * 4.0).collect();
        let pts = ValuePoints::new(2, coords)?;
        let fast = crate::observables::penalty_of_points(&pts).total;
        let exact = penalty_by_quadrature(&pts);
        worst = worst.max((fast - exact).abs());
    }
    // Coincident points: every pair overlaps fully.
    let coincident = ValuePoints::new(3, vec![0.0; 36])?;
    let all_pairs = crate::observables::penalty_of_points(&coincident).total;
    let square_ok = all_pairs == 144.0;
    Ok((worst < 1e-9 && square_ok, format!("max quadrature gap {worst:.2e}")))
}

fn check_variance_routes() -> Result<(bool, String)> {
    let params = GibbsParams::new(1.0, 0.0)?;
    let mut worst = 0.0f64;
    for (n, d, z, w) in [(5u32, 1u32, 0usize, 10usize), (2, 2, 0, 24)] {
        let bx = LatticeBox::new(n, d)?;
        let basis = eigendecompose(&bx)?;
        let solve = variance_pair(&bx, &params, z, w)?.variance;
        let spectral = variance_pair_spectral(&basis, &params, z, w)?.variance;
        worst = worst.max((solve - spectral).abs());
    }
    let scan = variance_bounds_scan(&LatticeBox::new(4, 2)?, &params)?;
    Ok((
        worst < 1e-10 && scan.min > 0.0,
        format!("route gap {worst:.2e}, scan min {:.3}", scan.min),
    ))
}

fn check_jensen() -> Result<(bool, String)> {
    let eps = 0.5;
    let mut violations = 0usize;
    let mut applicable = 0usize;
    for i in 0..10 {
        let bx = LatticeBox::new(2, 2)?;
        let a = 0.01 + 0.01 * i as f64;
        let field = drift_field(&bx, a);
        let check = penalty_jensen_check(&field, eps)?;
        if check.applicable {
            applicable += 1;
            if !check.holds {
                violations += 1;
            }
        }
    }
    Ok((
        violations == 0 && applicable == 10,
        format!("{applicable} applicable, {violations} violations"),
    ))
}

fn check_drift_coefficients() -> Result<(bool, String)> {
    let dc = drift_coefficients(16, 2)?;
    let cosines_zero =
        dc.indices.iter().zip(&dc.values).filter(|(j, _)| **j < 0).all(|(_, &a)| a == 0.0);
    let recon = dc.reconstruction()?;
    let n = 16i64;
    let mut worst_recon = 0.0f64;
    for (i, r) in recon.iter().enumerate() {
        worst_recon = worst_recon.max((r - (i as i64 - n) as f64).abs());
    }
    let mut worst_closed = 0.0f64;
    for (&j, &a) in dc.indices.iter().zip(&dc.values) {
        if j > 0 {
            let closed = drift_coefficient_closed_form(16, 2, j as u32);
            worst_closed = worst_closed.max((a - closed).abs() / closed.abs().max(1.0));
        }
    }
    Ok((
        cosines_zero && worst_recon < 1e-8 && worst_closed < 1e-9,
        format!("reconstruction {worst_recon:.2e}, closed form {worst_closed:.2e}"),
    ))
}

fn check_semigroup() -> Result<(bool, String)> {
    let n = 32u32;
    let grid = log_spaced_grid(1.0, (n as f64).powi(2), 25);
    let rows = semigroup_diagnostics(n, &grid)?;
    let mid: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.t >= 10.0 && r.t <= 100.0)
        .map(|r| (r.t, r.return_prob))
        .collect();
    let fit = power_law_fit(&mid)?;
    let late = semigroup_diagnostics(4, &[50.0 * 16.0 * 4.0f64.ln()])?;
    let slope_ok = fit.slope > -0.6 && fit.slope < -0.4;
    let late_ok = late[0].uniform_gap.abs() < 1e-8;
    Ok((slope_ok && late_ok, format!("slope {:.3}, late gap {:.1e}", fit.slope, late[0].uniform_gap)))
}

fn check_fault_detection() -> Result<(bool, String)> {
    let basis = eigendecompose(&LatticeBox::new(3, 1)?)?;
    let healthy = basis.max_eigen_residual();
    let faulty = basis.with_scaled_eigenvalue(2, 1.1).max_eigen_residual();
    // The detector must trip on the corrupted system and not on the original.
    Ok((
        healthy < 1e-8 && faulty > 1e-3,
        format!("healthy {healthy:.2e}, injected fault {faulty:.2e}"),
    ))
}

/// Runs every check; `passed_all` is the release gate.
pub fn run_validation_suite() -> ValidationSummary {
    let start = Instant::now();
    let mut r = Runner { checks: Vec::new() };
    r.run("mode-orthonormality", check_orthonormality);
    r.run("laplacian-identity", check_laplacian_identity);
    r.run("free-field-covariance", check_covariance);
    r.run("penalty-oracle", check_penalty_oracle);
    r.run("variance-routes", check_variance_routes);
    r.run("jensen-bound", check_jensen);
    r.run("drift-coefficients", check_drift_coefficients);
    r.run("semigroup-decay", check_semigroup);
    r.run("fault-detection", check_fault_detection);
    let passed_all = r.checks.iter().all(|c| c.passed);
    ValidationSummary { checks: r.checks, passed_all, secs: start.elapsed().as_secs_f64() }
}
