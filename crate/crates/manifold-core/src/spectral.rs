//! Eigenstructure of the reflecting-boundary Laplacian: dense
//! diagonalization (the authoritative spectrum), the classical sinusoid
//! family with its continuum-style eigenvalues as a cross-check channel, and
//! the expansion coefficients of the linear drift field.

use crate::error::{Error, Result};
use crate::lattice::{
    LatticeBox, ScalarField, apply_laplacian, dirichlet_energy, laplacian_matrix_capped,
    DEFAULT_MATRIX_CAP,
};
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::io;

/// Eigenvalues closer to zero than this count as the constant mode.
pub const ZERO_MODE_TOL: f64 = 1e-9;

/// Full orthonormal eigensystem of `-Δ` on a box, eigenvalues ascending.
///
/// Index 0 is always the constant mode with eigenvalue exactly 0; every other
/// mode spans the zero-mean subspace.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    domain: LatticeBox,
    eigenvalues: Vec<f64>,
    modes: DMatrix<f64>,
}

impl SpectralBasis {
    pub fn domain(&self) -> &LatticeBox {
        &self.domain
    }

    /// Ascending; `[0] == 0.0`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Site values of mode `k`, unit norm, lexicographic site order.
    pub fn mode(&self, k: usize) -> &[f64] {
        let n = self.domain.site_count();
        &self.modes.as_slice()[k * n..(k + 1) * n]
    }

    pub fn zero_mode(&self) -> usize {
        0
    }

    /// Largest entry of `|QᵀQ - I|` over all mode pairs.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.modes.tr_mul(&self.modes);
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Largest `‖(-Δ)φ_k - λ_k φ_k‖₂` over all modes.
    pub fn max_eigen_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.mode_count() {
            let v = ScalarField::new(self.mode(k).to_vec());
            let lap = apply_laplacian(&v, &self.domain).expect("mode length matches domain");
            let lam = self.eigenvalues[k];
            let res: f64 = v
                .values
                .iter()
                .zip(&lap.values)
                .map(|(vi, li)| {
                    let r = -li - lam * vi;
                    r * r
                })
                .sum();
            worst = worst.max(res.sqrt());
        }
        worst
    }

    /// Copy with eigenvalue `k` multiplied by `factor`. Fault-injection hook
    /// for the validation suite; the copy violates the residual bound, which
    /// the checks must detect.
    pub fn with_scaled_eigenvalue(&self, k: usize, factor: f64) -> SpectralBasis {
        let mut out = self.clone();
        out.eigenvalues[k] *= factor;
        out
    }
}

/// Diagonalizes `-Δ` on the box. Dense; refuses boxes above the matrix cap.
pub fn eigendecompose(bx: &LatticeBox) -> Result<SpectralBasis> {
    eigendecompose_capped(bx, DEFAULT_MATRIX_CAP)
}

pub fn eigendecompose_capped(bx: &LatticeBox, cap: usize) -> Result<SpectralBasis> {
    let lap = laplacian_matrix_capped(bx, cap)?;
    let mut m = -lap;
    let n = m.nrows();
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asym > 1e-12 {
        return Err(Error::NotSymmetric { max_asym });
    }
    // Exact symmetry keeps the eigensolve honest even after future edits to
    // the matrix assembly.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }

    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut modes = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut lam = eig.eigenvalues[src];
        if lam.abs() <= ZERO_MODE_TOL {
            lam = 0.0;
        }
        eigenvalues.push(lam);
        let col = eig.eigenvectors.column(src);
        // Deterministic sign: largest-magnitude entry made positive.
        let mut pivot = 0usize;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            modes[(i, dst)] = sign * col[i];
        }
    }

    let zero_count = eigenvalues.iter().filter(|l| l.abs() <= ZERO_MODE_TOL).count();
    if zero_count != 1 {
        return Err(Error::ZeroModeCount { count: zero_count });
    }

    Ok(SpectralBasis { domain: bx.clone(), eigenvalues, modes })
}

/// The d-dimensional spectrum as the d-fold sumset of the 1-d spectrum,
/// sorted ascending.
pub fn tensor_spectrum(n_half: u32, dim: u32) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::ZeroDim);
    }
    let line = LatticeBox::new(n_half, 1)?;
    let base = eigendecompose(&line)?.eigenvalues().to_vec();
    let mut out = vec![0.0f64];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * base.len());
        for &s in &out {
            for &l in &base {
                next.push(s + l);
            }
        }
        out = next;
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// One member of the closed-form sinusoid family on the 1-d box, together
/// with its nominal (continuum-style) eigenvalue and the residual of the
/// nominal eigenpair under the true discrete operator.
#[derive(Clone, Debug)]
pub struct SinusoidMode {
    /// Mode label j with -N ≤ j ≤ N: 0 the constant, k > 0 the sine of
    /// frequency (2k-1)π/(2N+1), -k the cosine of frequency 2kπ/(2N+1).
    pub index: i64,
    /// Unit-norm values on the 1-d box.
    pub values: ScalarField,
    /// Squared continuum frequency attached to the mode.
    pub nominal_eigenvalue: f64,
    /// `‖(-Δ)φ - λ_nominal φ‖₂` on the 1-d box.
    pub residual: f64,
}

/// The 2N+1 sinusoids (constant, N sines, N cosines) on `[-N,N]`, unit norm,
/// ordered by label `j = -N..N`. Residuals quantify how far each nominal
/// eigenvalue is from making the mode an exact eigenpair.
pub fn sinusoid_modes_1d(n_half: u32) -> Result<Vec<SinusoidMode>> {
    if n_half == 0 {
        return Err(Error::ZeroHalfWidth);
    }
    let bx = LatticeBox::new(n_half, 1)?;
    let n = n_half as i64;
    let m = 2.0 * n_half as f64 + 1.0;
    let norm = (n_half as f64 + 0.5).sqrt();

    let mut out = Vec::with_capacity(2 * n_half as usize + 1);
    for j in -n..=n {
        let (values, nominal): (Vec<f64>, f64) = if j == 0 {
            (vec![1.0 / m.sqrt(); 2 * n_half as usize + 1], 0.0)
        } else if j > 0 {
            let freq = (2.0 * j as f64 - 1.0) * PI / m;
            ((-n..=n).map(|x| (freq * x as f64).sin() / norm).collect(), freq * freq)
        } else {
            let freq = 2.0 * (-j) as f64 * PI / m;
            ((-n..=n).map(|x| (freq * x as f64).cos() / norm).collect(), freq * freq)
        };
        let field = ScalarField::new(values);
        let lap = apply_laplacian(&field, &bx)?;
        let residual = field
            .values
            .iter()
            .zip(&lap.values)
            .map(|(v, l)| {
                let r = -l - nominal * v;
                r * r
            })
            .sum::<f64>()
            .sqrt();
        out.push(SinusoidMode { index: j, values: field, nominal_eigenvalue: nominal, residual });
    }
    Ok(out)
}

/// Expansion coefficients of the centered identity function over the
/// non-constant sinusoids, scaled for a d-dimensional product field.
#[derive(Clone, Debug)]
pub struct DriftCoefficients {
    pub n_half: u32,
    pub dim: u32,
    /// Labels j ∈ {-N..-1, 1..N} in ascending order.
    pub indices: Vec<i64>,
    /// Coefficient per label; cosine labels carry exactly 0.
    pub values: Vec<f64>,
    /// Nominal 1-d eigenvalue per label.
    pub nominal_eigenvalues: Vec<f64>,
}

impl DriftCoefficients {
    /// Evaluates the coefficient expansion back at every site of `[-N,N]`;
    /// equals the identity `n ↦ n` when the coefficients are correct.
    pub fn reconstruction(&self) -> Result<Vec<f64>> {
        let modes = sinusoid_modes_1d(self.n_half)?;
        let m = 2.0 * self.n_half as f64 + 1.0;
        let phi0_pow = m.powf(-((self.dim as f64 - 1.0) / 2.0));
        let side = 2 * self.n_half as usize + 1;
        let mut recon = vec![0.0f64; side];
        for (j_pos, &j) in self.indices.iter().enumerate() {
            let mode = modes
                .iter()
                .find(|mo| mo.index == j)
                .expect("drift labels are a subset of sinusoid labels");
            for (r, v) in recon.iter_mut().zip(&mode.values.values) {
                *r += phi0_pow * self.values[j_pos] * v;
            }
        }
        Ok(recon)
    }
}

/// Coefficients via the inner-product formula, summed in ±n pairs so the
/// even (cosine) modes cancel exactly in floating point.
pub fn drift_coefficients(n_half: u32, dim: u32) -> Result<DriftCoefficients> {
    if dim == 0 {
        return Err(Error::ZeroDim);
    }
    let modes = sinusoid_modes_1d(n_half)?;
    let m = 2.0 * n_half as f64 + 1.0;
    let scale = m.powf((dim as f64 - 1.0) / 2.0);
    let n = n_half as usize;

    let mut indices = Vec::with_capacity(2 * n);
    let mut values = Vec::with_capacity(2 * n);
    let mut nominal = Vec::with_capacity(2 * n);
    for mode in &modes {
        if mode.index == 0 {
            continue;
        }
        let v = &mode.values.values;
        let mut sum = 0.0;
        for x in 1..=n {
            sum += x as f64 * (v[n + x] - v[n - x]);
        }
        indices.push(mode.index);
        values.push(scale * sum);
        nominal.push(mode.nominal_eigenvalue);
    }
    Ok(DriftCoefficients { n_half, dim, indices, values, nominal_eigenvalues: nominal })
}

/// Closed form for the sine-mode drift coefficients,
/// `√2 (2N+1)^{(d-2)/2} sin(NY) / (2 sin²(Y/2))` with `Y = (2k-1)π/(2N+1)`.
pub fn drift_coefficient_closed_form(n_half: u32, dim: u32, k: u32) -> f64 {
    let m = 2.0 * n_half as f64 + 1.0;
    let y = (2.0 * k as f64 - 1.0) * PI / m;
    let half = (y / 2.0).sin();
    2.0f64.sqrt() * m.powf((dim as f64 - 2.0) / 2.0) * (n_half as f64 * y).sin()
        / (2.0 * half * half)
}

/// Quadratic energy of the linear drift of slope `a` in the nominal
/// eigenvalue channel: `d a² Σ_j α_j² λ_j`. Grows like the site count.
pub fn drift_energy(n_half: u32, dim: u32, a: f64) -> Result<f64> {
    let c = drift_coefficients(n_half, dim)?;
    let sum: f64 = c
        .values
        .iter()
        .zip(&c.nominal_eigenvalues)
        .map(|(alpha, lam)| alpha * alpha * lam)
        .sum();
    Ok(dim as f64 * a * a * sum)
}

/// Writes `k,eigenvalue` rows for plotting.
pub fn write_spectrum_csv<W: io::Write>(basis: &SpectralBasis, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "eigenvalue"])?;
    for (k, lam) in basis.eigenvalues().iter().enumerate() {
        w.write_record([k.to_string(), format!("{lam:.17e}")])?;
    }
    w.flush().map_err(|e| Error::io("<spectrum csv>", e))?;
    Ok(())
}

/// Energy identity helper used by tests: `H(φ,φ)` should equal `λ` for an
/// exact eigenpair.
pub fn mode_energy(basis: &SpectralBasis, k: usize) -> f64 {
    let f = ScalarField::new(basis.mode(k).to_vec());
    dirichlet_energy(&f, &f, basis.domain()).expect("mode length matches domain")
}
