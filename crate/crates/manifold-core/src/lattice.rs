//! The parameter box `[-N,N]^d`, its nearest-neighbor structure, the Dirichlet
//! energy, and the reflecting-boundary graph Laplacian tied to it by
//! `H(f,g) = -(f, Δg)`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Sites touching the dense-matrix path beyond this need an explicit opt-in.
pub const DEFAULT_MATRIX_CAP: usize = 20_000;

/// Relative tolerance on component means for a field to count as centered.
pub const CENTERING_TOL: f64 = 1e-9;

/// The cube `[-N,N]^d ∩ Z^d` with its neighbor-pair list precomputed.
///
/// Sites are enumerated lexicographically by coordinate (first coordinate most
/// significant); every index-based API in the crate uses that order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeBox {
    n_half: u32,
    dim: u32,
    site_count: usize,
    pairs: Vec<(u32, u32)>,
    nbr_offsets: Vec<u32>,
    nbr_flat: Vec<u32>,
}

impl LatticeBox {
    pub fn new(n_half: u32, dim: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        if n_half == 0 {
            return Err(Error::ZeroHalfWidth);
        }
        let side = 2 * n_half as usize + 1;
        let site_count = (0..dim)
            .try_fold(1usize, |acc, _| acc.checked_mul(side))
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or(Error::BoxTooLarge { n_half, dim })?;

        let d = dim as usize;
        let mut strides = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * side;
        }

        // One unordered pair per in-box bond, emitted in lexicographic site
        // order so downstream reductions are bit-stable.
        let mut pairs = Vec::with_capacity(d * (side - 1) * site_count / side);
        let mut degrees = vec![0u32; site_count];
        for i in 0..site_count {
            for j in 0..d {
                let xj = (i / strides[j]) % side;
                if xj + 1 < side {
                    let k = i + strides[j];
                    pairs.push((i as u32, k as u32));
                    degrees[i] += 1;
                    degrees[k] += 1;
                }
            }
        }

        let mut nbr_offsets = Vec::with_capacity(site_count + 1);
        let mut acc = 0u32;
        nbr_offsets.push(0);
        for &deg in &degrees {
            acc += deg;
            nbr_offsets.push(acc);
        }
        let mut cursor: Vec<u32> = nbr_offsets[..site_count].to_vec();
        let mut nbr_flat = vec![0u32; acc as usize];
        for &(a, b) in &pairs {
            nbr_flat[cursor[a as usize] as usize] = b;
            cursor[a as usize] += 1;
            nbr_flat[cursor[b as usize] as usize] = a;
            cursor[b as usize] += 1;
        }

        Ok(LatticeBox { n_half, dim, site_count, pairs, nbr_offsets, nbr_flat })
    }

    pub fn n_half(&self) -> u32 {
        self.n_half
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Side length 2N+1.
    pub fn side(&self) -> usize {
        2 * self.n_half as usize + 1
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    /// Unordered nearest-neighbor pairs, each listed once.
    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn neighbors(&self, site: usize) -> &[u32] {
        let lo = self.nbr_offsets[site] as usize;
        let hi = self.nbr_offsets[site + 1] as usize;
        &self.nbr_flat[lo..hi]
    }

    pub fn degree(&self, site: usize) -> usize {
        (self.nbr_offsets[site + 1] - self.nbr_offsets[site]) as usize
    }

    /// Coordinates of a site index, each in `[-N, N]`.
    pub fn coords_of(&self, site: usize) -> Vec<i64> {
        let side = self.side();
        let mut rem = site;
        let mut out = vec![0i64; self.dim as usize];
        for j in (0..self.dim as usize).rev() {
            out[j] = (rem % side) as i64 - self.n_half as i64;
            rem /= side;
        }
        out
    }

    /// Inverse of [`coords_of`](Self::coords_of); `None` outside the box.
    pub fn index_of(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim as usize {
            return None;
        }
        let n = self.n_half as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &c in coords {
            if c < -n || c > n {
                return None;
            }
            idx = idx * side + (c + n) as usize;
        }
        Some(idx)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.site_count {
            Err(Error::LengthMismatch { expected: self.site_count, found: len })
        } else {
            Ok(())
        }
    }
}

/// One real value per site of some [`LatticeBox`], in lexicographic site order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn zeros(n: usize) -> Self {
        ScalarField { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Subtracts the mean in place.
    pub fn recenter(&mut self) {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
    }
}

/// The manifold state: one scalar component per dimension (D = d), each
/// centered to mean zero over the box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldConfig {
    pub domain: LatticeBox,
    pub components: Vec<ScalarField>,
}

impl FieldConfig {
    /// The all-zero configuration.
    pub fn zeros(domain: LatticeBox) -> Self {
        let n = domain.site_count();
        let d = domain.dim() as usize;
        FieldConfig { components: vec![ScalarField::zeros(n); d], domain }
    }

    pub fn components(&self) -> usize {
        self.components.len()
    }

    /// Copies the value vector `u(site)` into `out`.
    pub fn point(&self, site: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.values[site];
        }
    }

    pub fn recenter(&mut self) {
        for c in &mut self.components {
            c.recenter();
        }
    }

    /// Validates component count, lengths, and the zero-mean constraint.
    pub fn check(&self) -> Result<()> {
        let d = self.domain.dim() as usize;
        if self.components.len() != d {
            return Err(Error::ComponentCount { expected: d, found: self.components.len() });
        }
        for (i, c) in self.components.iter().enumerate() {
            self.domain.check_len(c.len())?;
            let scale = c.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let mean = c.mean();
            if mean.abs() > CENTERING_TOL * scale {
                return Err(Error::NotCentered { component: i, mean });
            }
        }
        Ok(())
    }
}

/// Plain inner product `(f, g) = Σ_x f(x) g(x)`.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> f64 {
    f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum()
}

/// Dirichlet energy `H(f,g) = Σ_{(x,y)} (f(x)-f(y)) (g(x)-g(y))` over bonds.
pub fn dirichlet_energy(f: &ScalarField, g: &ScalarField, bx: &LatticeBox) -> Result<f64> {
    bx.check_len(f.len())?;
    bx.check_len(g.len())?;
    let fv = &f.values;
    let gv = &g.values;
    Ok(bx
        .pairs()
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (a as usize, b as usize);
            (fv[a] - fv[b]) * (gv[a] - gv[b])
        })
        .sum())
}

/// Graph Laplacian with reflecting boundary: `(Δf)(x) = Σ_{y~x} (f(y) - f(x))`,
/// the unique operator satisfying `H(f,g) = -(f, Δg)`.
pub fn apply_laplacian(f: &ScalarField, bx: &LatticeBox) -> Result<ScalarField> {
    bx.check_len(f.len())?;
    let fv = &f.values;
    let mut out = vec![0.0; fv.len()];
    for (x, o) in out.iter_mut().enumerate() {
        let fx = fv[x];
        *o = bx.neighbors(x).iter().map(|&y| fv[y as usize] - fx).sum();
    }
    Ok(ScalarField::new(out))
}

/// Dense Laplacian with the default size guard.
pub fn laplacian_matrix(bx: &LatticeBox) -> Result<DMatrix<f64>> {
    laplacian_matrix_capped(bx, DEFAULT_MATRIX_CAP)
}

/// Dense materialization of [`apply_laplacian`]; refuses boxes above `cap` sites.
pub fn laplacian_matrix_capped(bx: &LatticeBox, cap: usize) -> Result<DMatrix<f64>> {
    let n = bx.site_count();
    if n > cap {
        return Err(Error::CapExceeded { sites: n, cap });
    }
    let mut m = DMatrix::zeros(n, n);
    for &(a, b) in bx.pairs() {
        let (a, b) = (a as usize, b as usize);
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
        m[(a, a)] -= 1.0;
        m[(b, b)] -= 1.0;
    }
    Ok(m)
}
