//! Return probabilities of the unit-rate continuous-time walk on the 1-d box
//! with reflecting ends, via the exact spectral matrix exponential. The
//! interesting regimes: `t^{-1/2}` decay at intermediate times and
//! exponential convergence to the uniform law past the relaxation time.

use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::spectral::eigendecompose;
use std::io;

/// One time point of the diagnostics table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemigroupRow {
    pub t: f64,
    /// Return probability averaged over the starting site, equal to the
    /// spectral trace `(2N+1)^{-1} Σ_m e^{-λ_m t}`.
    pub return_prob: f64,
    /// `return_prob - 1/(2N+1)`, always non-negative.
    pub uniform_gap: f64,
}

fn line_spectrum(n_half: u32) -> Result<Vec<f64>> {
    let bx = LatticeBox::new(n_half, 1)?;
    Ok(eigendecompose(&bx)?.eigenvalues().to_vec())
}

/// Site-averaged return probabilities on a time grid.
pub fn semigroup_diagnostics(n_half: u32, t_grid: &[f64]) -> Result<Vec<SemigroupRow>> {
    if t_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::Config("time grid entries must be positive and finite".into()));
    }
    let spectrum = line_spectrum(n_half)?;
    let m = spectrum.len() as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let gap: f64 =
                spectrum.iter().skip(1).map(|&lam| (-lam * t).exp()).sum::<f64>() / m;
            SemigroupRow { t, return_prob: 1.0 / m + gap, uniform_gap: gap }
        })
        .collect())
}

/// Exact `P_z(Z_t = z)` for one starting site.
pub fn return_probability_at(n_half: u32, site: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("time must be non-negative and finite, got {t}")));
    }
    let bx = LatticeBox::new(n_half, 1)?;
    if site >= bx.site_count() {
        return Err(Error::SiteOutOfRange { site, count: bx.site_count() });
    }
    let basis = eigendecompose(&bx)?;
    let mut p = 0.0;
    for k in 0..basis.mode_count() {
        let phi = basis.mode(k)[site];
        p += (-basis.eigenvalues()[k] * t).exp() * phi * phi;
    }
    Ok(p)
}

/// Geometric grid from `lo` to `hi` inclusive.
pub fn log_spaced_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2, "grid wants 0 < lo < hi and count >= 2");
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    let mut t = lo;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count - 1 {
        out.push(t);
        t *= ratio;
    }
    out.push(hi);
    out
}

/// Rows `N,t,return_prob` for plotting.
pub fn write_semigroup_csv<W: io::Write>(
    n_half: u32,
    rows: &[SemigroupRow],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["N", "t", "return_prob"])?;
    for r in rows {
        w.write_record([
            n_half.to_string(),
            format!("{:.17e}", r.t),
            format!("{:.17e}", r.return_prob),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<semigroup csv>", e))?;
    Ok(())
}
