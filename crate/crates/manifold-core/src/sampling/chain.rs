//! Metropolis dynamics for the repulsion-tilted measure: single-site Gaussian
//! moves with incrementally maintained energy and penalty caches, plus an
//! occasional global dilation so the chain can cross between compact and
//! stretched configurations.
//!
//! The target is translation-invariant per component, so the chain evolves an
//! arbitrary shift representative and only subtracts component means when a
//! state is observed (samples, checkpoints) and at periodic cache refreshes.
//! Every externally visible field is therefore zero-mean.

use crate::error::{Error, Result};
use crate::lattice::{FieldConfig, LatticeBox, ScalarField, dirichlet_energy};
use crate::observables::penalty::{overlap, penalty_of_points};
use crate::sampling::GibbsParams;
use crate::values::{MAX_HASH_DIM, ValueGrid, ValuePoints};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io;

/// Half-width of the uniform law of `log s` for dilation proposals.
pub const DILATION_LOG_RANGE: f64 = 0.05;

/// Steps between full cache refreshes (with re-centering and grid rebuild).
pub const CACHE_CHECK_INTERVAL: u64 = 10_000;

/// Relative drift between cached and recomputed values that triggers a
/// warning at refresh time.
pub const CACHE_REL_TOL: f64 = 1e-6;

const ADAPT_WINDOW: u64 = 200;
const ADAPT_FACTOR: f64 = 1.2;
const ACCEPT_LOW: f64 = 0.30;
const ACCEPT_HIGH: f64 = 0.40;
const SIGMA_MIN: f64 = 1e-3;
const SIGMA_MAX: f64 = 1e3;

/// Knobs of the Metropolis run. `burn_in`, `sweeps`, and `thinning` are in
/// sweeps; one sweep is `site_count × components` proposals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCMCConfig {
    pub sigma: f64,
    pub dilation_prob: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub adapt_sigma: bool,
}

impl Default for MCMCConfig {
    fn default() -> Self {
        MCMCConfig {
            sigma: 0.5,
            dilation_prob: 0.05,
            sweeps: 2000,
            burn_in: 500,
            thinning: 2,
            seed: 1,
            adapt_sigma: true,
        }
    }
}

impl MCMCConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.dilation_prob) {
            return Err(Error::Config(format!(
                "dilation_prob must lie in [0,1], got {}",
                self.dilation_prob
            )));
        }
        if self.sweeps == 0 {
            return Err(Error::Config("sweeps must be positive".into()));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be positive".into()));
        }
        Ok(())
    }
}

/// A Metropolis chain over one field configuration.
#[derive(Clone, Debug)]
pub struct ChainState {
    field: FieldConfig,
    points: ValuePoints,
    grid: ValueGrid,
    /// Cached elastic energy summed over components.
    energy: f64,
    /// Cached half off-diagonal penalty sum `Σ_{i<j} w_ij`.
    half_overlap: f64,
    sigma: f64,
    step: u64,
    local_proposed: u64,
    local_accepted: u64,
    dilation_proposed: u64,
    dilation_accepted: u64,
    window_proposed: u64,
    window_accepted: u64,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    scratch: Vec<u32>,
}

impl ChainState {
    /// Builds a chain on `field` with the RNG stream `(cfg.seed, chain_index)`.
    pub fn new(field: FieldConfig, cfg: &MCMCConfig, chain_index: u64) -> Result<Self> {
        cfg.check()?;
        field.check()?;
        if field.components() > MAX_HASH_DIM {
            return Err(Error::Config(format!(
                "chain needs the hash grid, which supports at most {MAX_HASH_DIM} components"
            )));
        }
        let points = ValuePoints::from_field(&field);
        let grid = ValueGrid::build(&points)?;
        let energy = total_energy(&field)?;
        let half_overlap = half_overlap_of(&points);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(chain_index);
        Ok(ChainState {
            field,
            points,
            grid,
            energy,
            half_overlap,
            sigma: cfg.sigma,
            step: 0,
            local_proposed: 0,
            local_accepted: 0,
            dilation_proposed: 0,
            dilation_accepted: 0,
            window_proposed: 0,
            window_accepted: 0,
            seed: cfg.seed,
            stream: chain_index,
            rng,
            scratch: Vec::new(),
        })
    }

    pub fn domain(&self) -> &LatticeBox {
        &self.field.domain
    }

    /// Zero-mean copy of the current configuration.
    pub fn field(&self) -> FieldConfig {
        let mut f = self.field.clone();
        f.recenter();
        f
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Full penalty total, diagonal included.
    pub fn penalty_total(&self) -> f64 {
        self.field.domain.site_count() as f64 + 2.0 * self.half_overlap
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// (local, dilation) acceptance fractions so far.
    pub fn acceptance_rates(&self) -> (f64, f64) {
        let frac = |acc: u64, prop: u64| if prop == 0 { 0.0 } else { acc as f64 / prop as f64 };
        (
            frac(self.local_accepted, self.local_proposed),
            frac(self.dilation_accepted, self.dilation_proposed),
        )
    }

    /// Relative disagreement between the caches and a fresh recomputation.
    pub fn cache_errors(&self) -> (f64, f64) {
        let energy = total_energy(&self.field).expect("internal state is consistent");
        let half = half_overlap_of(&self.points);
        let rel = |cached: f64, fresh: f64| (cached - fresh).abs() / fresh.abs().max(1.0);
        (rel(self.energy, energy), rel(self.half_overlap, half))
    }

    /// Re-centers the representative, rebuilds the grid, and replaces both
    /// caches with freshly computed values. Returns the relative errors seen.
    pub fn refresh_caches(&mut self) -> (f64, f64) {
        let errors = self.cache_errors();
        if errors.0 > CACHE_REL_TOL || errors.1 > CACHE_REL_TOL {
            log::warn!(
                "cache drift beyond tolerance at step {}: energy {:.3e}, penalty {:.3e}",
                self.step,
                errors.0,
                errors.1
            );
        }
        self.field.recenter();
        self.points = ValuePoints::from_field(&self.field);
        self.grid = ValueGrid::build(&self.points).expect("dimension already validated");
        self.energy = total_energy(&self.field).expect("internal state is consistent");
        self.half_overlap = half_overlap_of(&self.points);
        errors
    }

    pub fn checkpoint(&self, params: &GibbsParams) -> Checkpoint {
        Checkpoint {
            n_half: self.field.domain.n_half(),
            dim: self.field.domain.dim(),
            beta: params.beta,
            gamma: params.gamma,
            values: self.field.components.iter().map(|c| c.values.clone()).collect(),
            rng_seed: self.seed,
            rng_stream: self.stream,
            rng_word_pos: self.rng.get_word_pos(),
            step: self.step,
            sigma: self.sigma,
            local_proposed: self.local_proposed,
            local_accepted: self.local_accepted,
            dilation_proposed: self.dilation_proposed,
            dilation_accepted: self.dilation_accepted,
            window_proposed: self.window_proposed,
            window_accepted: self.window_accepted,
        }
    }

    /// Rebuilds a chain from a checkpoint. The representative, generator
    /// position, step and adaptation counters all resume exactly, so the
    /// continued trajectory matches an uninterrupted run.
    pub fn restore(cp: &Checkpoint, cfg: &MCMCConfig) -> Result<(ChainState, GibbsParams)> {
        cfg.check()?;
        let params = GibbsParams::new(cp.beta, cp.gamma)?;
        let bx = LatticeBox::new(cp.n_half, cp.dim)?;
        let d = bx.dim() as usize;
        if cp.values.len() != d {
            return Err(Error::ComponentCount { expected: d, found: cp.values.len() });
        }
        for v in &cp.values {
            if v.len() != bx.site_count() {
                return Err(Error::LengthMismatch { expected: bx.site_count(), found: v.len() });
            }
        }
        if d > MAX_HASH_DIM {
            return Err(Error::Config(format!(
                "chain needs the hash grid, which supports at most {MAX_HASH_DIM} components"
            )));
        }
        let field = FieldConfig {
            components: cp.values.iter().map(|v| ScalarField::new(v.clone())).collect(),
            domain: bx,
        };
        let points = ValuePoints::from_field(&field);
        let grid = ValueGrid::build(&points)?;
        let energy = total_energy(&field)?;
        let half_overlap = half_overlap_of(&points);
        let mut rng = ChaCha8Rng::seed_from_u64(cp.rng_seed);
        rng.set_stream(cp.rng_stream);
        rng.set_word_pos(cp.rng_word_pos);
        let state = ChainState {
            field,
            points,
            grid,
            energy,
            half_overlap,
            sigma: cp.sigma,
            step: cp.step,
            local_proposed: cp.local_proposed,
            local_accepted: cp.local_accepted,
            dilation_proposed: cp.dilation_proposed,
            dilation_accepted: cp.dilation_accepted,
            window_proposed: cp.window_proposed,
            window_accepted: cp.window_accepted,
            seed: cp.rng_seed,
            stream: cp.rng_stream,
            rng,
            scratch: Vec::new(),
        };
        Ok((state, params))
    }
}

fn total_energy(field: &FieldConfig) -> Result<f64> {
    let mut h = 0.0;
    for c in &field.components {
        h += dirichlet_energy(c, c, &field.domain)?;
    }
    Ok(h)
}

fn half_overlap_of(points: &ValuePoints) -> f64 {
    penalty_of_points(points).off_diagonal / 2.0
}

/// Unnormalized log density of the tilted measure at the chain's state:
/// `-β H(u) - γ ∫ℓ²`.
pub fn log_target(state: &ChainState, params: &GibbsParams) -> f64 {
    -params.beta * state.energy - params.gamma * state.penalty_total()
}

/// One Metropolis proposal (local move or dilation), applied in place.
pub fn mcmc_step(state: &mut ChainState, params: &GibbsParams, cfg: &MCMCConfig) {
    let n = state.field.domain.site_count();
    let d = state.field.components();
    let adapting =
        cfg.adapt_sigma && state.step < cfg.burn_in as u64 * (n * d) as u64;

    if state.rng.random::<f64>() < cfg.dilation_prob {
        dilation_move(state, params, n, d);
    } else {
        local_move(state, params, n, d, adapting);
    }

    state.step += 1;
    if state.step % CACHE_CHECK_INTERVAL == 0 {
        state.refresh_caches();
    }
}

fn local_move(state: &mut ChainState, params: &GibbsParams, n: usize, d: usize, adapting: bool) {
    let site = state.rng.random_range(0..n);
    let comp = state.rng.random_range(0..d);
    let delta = state.sigma * state.rng.sample::<f64, _>(StandardNormal);
    let ln_u = state.rng.random::<f64>().ln();

    // Elastic part: only bonds at `site` in component `comp` change.
    let values = &state.field.components[comp].values;
    let old_value = values[site];
    let mut bond_sum = 0.0;
    let neighbors = state.field.domain.neighbors(site);
    for &y in neighbors {
        bond_sum += old_value - values[y as usize];
    }
    let degree = neighbors.len() as f64;
    let d_energy = 2.0 * delta * bond_sum + degree * delta * delta;

    // Penalty part: one image point moves along one axis.
    let mut old_point = [0.0f64; MAX_HASH_DIM];
    let mut new_point = [0.0f64; MAX_HASH_DIM];
    old_point[..d].copy_from_slice(state.points.point(site));
    new_point[..d].copy_from_slice(&old_point[..d]);
    new_point[comp] += delta;

    let scratch = &mut state.scratch;
    scratch.clear();
    state.grid.collect_near(&old_point[..d], scratch);
    state.grid.collect_near(&new_point[..d], scratch);
    scratch.sort_unstable();
    scratch.dedup();
    let mut d_half = 0.0;
    for &j in scratch.iter() {
        let j = j as usize;
        if j == site {
            continue;
        }
        let q = state.points.point(j);
        d_half += overlap(&new_point[..d], q).unwrap_or(0.0)
            - overlap(&old_point[..d], q).unwrap_or(0.0);
    }

    let d_log = -params.beta * d_energy - params.gamma * 2.0 * d_half;

    state.local_proposed += 1;
    state.window_proposed += 1;
    if ln_u < d_log {
        state.local_accepted += 1;
        state.window_accepted += 1;
        state.grid.remove(site as u32, &old_point[..d]);
        state.grid.insert(site as u32, &new_point[..d]);
        state.points.point_mut(site)[comp] = new_point[comp];
        state.field.components[comp].values[site] = new_point[comp];
        state.energy += d_energy;
        state.half_overlap += d_half;
    }

    if adapting && state.window_proposed >= ADAPT_WINDOW {
        let rate = state.window_accepted as f64 / state.window_proposed as f64;
        if rate > ACCEPT_HIGH {
            state.sigma = (state.sigma * ADAPT_FACTOR).min(SIGMA_MAX);
        } else if rate < ACCEPT_LOW {
            state.sigma = (state.sigma / ADAPT_FACTOR).max(SIGMA_MIN);
        }
        state.window_proposed = 0;
        state.window_accepted = 0;
    }
}

fn dilation_move(state: &mut ChainState, params: &GibbsParams, n: usize, d: usize) {
    let log_s = (state.rng.random::<f64>() * 2.0 - 1.0) * DILATION_LOG_RANGE;
    let ln_u = state.rng.random::<f64>().ln();
    let s = log_s.exp();

    let mut scaled = state.points.clone();
    scaled.scale(s);
    let new_half = half_overlap_of(&scaled);

    let d_energy = (s * s - 1.0) * state.energy;
    let d_penalty = 2.0 * (new_half - state.half_overlap);
    // The move acts on the shift quotient, whose dimension is (n-1)·d.
    let jacobian = ((n - 1) * d) as f64 * log_s;
    let d_log = -params.beta * d_energy - params.gamma * d_penalty + jacobian;

    state.dilation_proposed += 1;
    if ln_u < d_log {
        state.dilation_accepted += 1;
        state.grid = ValueGrid::build(&scaled).expect("dimension already validated");
        state.points = scaled;
        for comp in &mut state.field.components {
            for v in &mut comp.values {
                *v *= s;
            }
        }
        state.energy *= s * s;
        state.half_overlap = new_half;
    }
}

/// Runs `sweeps` full sweeps (`site_count × components` proposals each).
pub fn run_sweeps(
    state: &mut ChainState,
    params: &GibbsParams,
    cfg: &MCMCConfig,
    sweeps: usize,
) {
    let per_sweep = state.field.domain.site_count() * state.field.components();
    for _ in 0..sweeps * per_sweep {
        mcmc_step(state, params, cfg);
    }
}

/// Self-describing snapshot of a chain: the internal shift representative in
/// lexicographic site order, parameters, generator coordinates, and all
/// proposal counters. The raw (not re-centered) values are stored so a
/// restored chain is bitwise identical to the one that wrote the snapshot;
/// subtract each component's mean to get the physical field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n_half: u32,
    pub dim: u32,
    pub beta: f64,
    pub gamma: f64,
    pub values: Vec<Vec<f64>>,
    pub rng_seed: u64,
    pub rng_stream: u64,
    pub rng_word_pos: u128,
    pub step: u64,
    pub sigma: f64,
    pub local_proposed: u64,
    pub local_accepted: u64,
    pub dilation_proposed: u64,
    pub dilation_accepted: u64,
    pub window_proposed: u64,
    pub window_accepted: u64,
}

pub fn write_checkpoint<W: io::Write>(cp: &Checkpoint, writer: W) -> Result<()> {
    serde_json::to_writer(writer, cp)?;
    Ok(())
}

pub fn read_checkpoint<R: io::Read>(reader: R) -> Result<Checkpoint> {
    Ok(serde_json::from_reader(reader)?)
}
