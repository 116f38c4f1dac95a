//! Monte Carlo estimators built on exact base-measure draws: the normalizing
//! ratio between the tilted and free measures, and self-normalized importance
//! estimates of tilted expectations.

use crate::error::{Error, Result};
use crate::lattice::FieldConfig;
use crate::observables::penalty_integral;
use crate::sampling::GibbsParams;
use crate::sampling::free_field::sample_free_field;
use crate::spectral::SpectralBasis;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fewest draws either estimator accepts.
pub const MIN_SAMPLES: usize = 100;

/// Effective sample size below which a tilted estimate is flagged unreliable.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 10.0;

/// Estimate of `ln(Z_γ / Z_0)` from free-measure draws.
///
/// The average of `exp(-γ ∫ℓ²)` is accumulated after shifting all exponents
/// by their maximum, so the logarithm stays finite even when every individual
/// weight is far below the smallest positive float. `underflow` records that
/// regime; the estimate itself is still valid.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub log_z: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub underflow: bool,
    pub min_penalty: f64,
}

/// Self-normalized importance estimate of a tilted-measure expectation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TiltedEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub ess: f64,
    pub reliable: bool,
    pub samples: usize,
}

fn log_weights<R: Rng + ?Sized>(
    basis: &SpectralBasis,
    params: &GibbsParams,
    samples: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<FieldConfig>, f64)> {
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: samples });
    }
    let mut lw = Vec::with_capacity(samples);
    let mut fields = Vec::with_capacity(samples);
    let mut min_penalty = f64::INFINITY;
    for _ in 0..samples {
        let field = sample_free_field(basis, params, rng)?;
        let penalty = penalty_integral(&field)?.total;
        min_penalty = min_penalty.min(penalty);
        let w = -params.gamma * penalty;
        if !w.is_finite() {
            return Err(Error::WeightUnderflow { min_penalty: penalty });
        }
        lw.push(w);
        fields.push(field);
    }
    Ok((lw, fields, min_penalty))
}

/// Estimates `ln(Z_γ / Z_0)` with `samples` exact free-measure draws.
///
/// At `γ = 0` every weight is exactly one and the result is exactly zero.
pub fn estimate_partition<R: Rng + ?Sized>(
    basis: &SpectralBasis,
    params: &GibbsParams,
    samples: usize,
    rng: &mut R,
) -> Result<PartitionEstimate> {
    let (lw, _, min_penalty) = log_weights(basis, params, samples, rng)?;
    let max = lw.iter().fold(f64::NEG_INFINITY, |m, &w| m.max(w));
    let underflow = max < f64::MIN_POSITIVE.ln();
    if underflow {
        log::warn!(
            "all {samples} weights underflow f64 (max exponent {max:.1}); \
             reporting the shifted estimate"
        );
    }
    let shifted: Vec<f64> = lw.iter().map(|&w| (w - max).exp()).collect();
    let m = samples as f64;
    let mean = shifted.iter().sum::<f64>() / m;
    let var = shifted.iter().map(|&r| (r - mean) * (r - mean)).sum::<f64>() / (m - 1.0);
    Ok(PartitionEstimate {
        log_z: max + mean.ln(),
        standard_error: var.sqrt() / (mean * m.sqrt()),
        samples,
        underflow,
        min_penalty,
    })
}

/// Estimates the tilted-measure mean of `observable` by importance sampling
/// from the free measure. The effective sample size `(Σw)²/Σw²` gauges how
/// much weight collapse occurred; estimates with fewer than
/// [`MIN_EFFECTIVE_SAMPLES`] effective draws are flagged unreliable.
pub fn estimate_tilted_expectation<R, F>(
    basis: &SpectralBasis,
    params: &GibbsParams,
    samples: usize,
    observable: F,
    rng: &mut R,
) -> Result<TiltedEstimate>
where
    R: Rng + ?Sized,
    F: Fn(&FieldConfig) -> f64,
{
    let (lw, fields, _) = log_weights(basis, params, samples, rng)?;
    let max = lw.iter().fold(f64::NEG_INFINITY, |m, &w| m.max(w));
    let weights: Vec<f64> = lw.iter().map(|&w| (w - max).exp()).collect();
    let obs: Vec<f64> = fields.iter().map(&observable).collect();

    let mut num = 0.0;
    let mut den = 0.0;
    let mut den_sq = 0.0;
    for (&w, &o) in weights.iter().zip(&obs) {
        num += w * o;
        den += w;
        den_sq += w * w;
    }
    if den == 0.0 {
        return Err(Error::Numerical { what: "every importance weight collapsed to zero".into() });
    }
    let value = num / den;
    let ess = den * den / den_sq;
    let se_sq: f64 = weights
        .iter()
        .zip(&obs)
        .map(|(&w, &o)| {
            let v = w / den;
            v * v * (o - value) * (o - value)
        })
        .sum();
    Ok(TiltedEstimate {
        value,
        standard_error: se_sq.sqrt(),
        ess,
        reliable: ess >= MIN_EFFECTIVE_SAMPLES,
        samples,
    })
}
