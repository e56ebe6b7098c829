//! Exact reference solver for the strip in the Landau gauge `A = -B y e_x`.
//!
//! The wall-free problem separates into channel modes `e^{ikx} chi_n(y - y_k)`.
//! Eigenstates of the strip come from a Galerkin discretization with
//! Dirichlet-conforming Legendre functions in x and oscillator functions in y,
//! split into the two inversion-parity blocks.

use std::sync::Arc;

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, SystemParams};
use crate::numerics::{gauss_legendre, legendre_table};
use crate::specfun::{hermite_functions, hermite_functions_c};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("no open channel at E = {0}")]
    NoOpenChannel(f64),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("Legendre overlap matrix is not positive definite")]
    Overlap,
    #[error("eigendecomposition failed to converge")]
    Eigen,
    #[error("E = {energy} is not an eigenvalue (sigma_min = {sigma:.3e})")]
    NotEigenvalue { energy: f64, sigma: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Effective transverse frequency `sqrt(w_c^2 + w0^2)`.
pub fn effective_frequency(params: &SystemParams) -> f64 {
    params.cyclotron().hypot(params.omega0)
}

/// Transverse oscillator length `sqrt(hbar / (m Omega))`.
pub fn oscillator_length(params: &SystemParams) -> f64 {
    (params.hbar / (params.mass * effective_frequency(params))).sqrt()
}

/// A wall-free channel mode `e^{ikx} chi_n(y - y_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMode {
    pub n_y: usize,
    /// Real for open channels, purely imaginary for evanescent ones.
    pub k: Complex64,
    pub center: Complex64,
    pub omega: f64,
    pub energy: f64,
}

impl ChannelMode {
    pub fn is_open(&self) -> bool {
        self.k.im == 0.0
    }

    pub fn value(&self, params: &SystemParams, x: f64, y: f64) -> Complex64 {
        let l = oscillator_length(params);
        let h = hermite_functions_c(self.n_y + 1, (Complex64::from(y) - self.center) / l);
        (Complex64::i() * self.k * x).exp() * h[self.n_y] / l.sqrt()
    }
}

/// `E(n, k) = hbar Omega (n + 1/2) + hbar^2 k^2 w0^2 / (2 m Omega^2)`.
pub fn channel_dispersion(params: &SystemParams, n_y: usize, k: f64) -> f64 {
    let om = effective_frequency(params);
    let hb = params.hbar;
    hb * om * (n_y as f64 + 0.5) + hb * hb * k * k * params.omega0 * params.omega0 / (2.0 * params.mass * om * om)
}

/// Guiding-centre offset `y_k = -hbar k w_c / (m Omega^2)`.
pub fn channel_center(params: &SystemParams, k: Complex64) -> Complex64 {
    let om = effective_frequency(params);
    -k * (params.hbar * params.cyclotron() / (params.mass * om * om))
}

pub fn channel_basis(
    energy: f64,
    params: &SystemParams,
    n_max: usize,
    include_evanescent: bool,
    kappa_max: f64,
) -> Result<Vec<ChannelMode>, ExactError> {
    params.validate()?;
    if params.omega0 <= 0.0 {
        return Err(ExactError::Config("channel modes need omega0 > 0".into()));
    }
    let om = effective_frequency(params);
    let hb = params.hbar;
    let scale = 2.0 * params.mass * om * om / (hb * hb * params.omega0 * params.omega0);
    let mut modes = Vec::new();
    let mut push = |n_y: usize, k: Complex64| {
        modes.push(ChannelMode { n_y, k, center: channel_center(params, k), omega: om, energy });
    };
    for n_y in 0..=n_max {
        let rest = energy - hb * om * (n_y as f64 + 0.5);
        let k2 = rest * scale;
        if rest.abs() <= 1e-12 * energy.abs().max(1.0) {
            push(n_y, Complex64::from(0.0));
        } else if k2 > 0.0 {
            let k = k2.sqrt();
            push(n_y, Complex64::from(k));
            push(n_y, Complex64::from(-k));
        } else if include_evanescent {
            let kappa = (-k2).sqrt();
            if kappa <= kappa_max {
                push(n_y, Complex64::new(0.0, kappa));
                push(n_y, Complex64::new(0.0, -kappa));
            }
        }
    }
    if !include_evanescent && modes.is_empty() {
        return Err(ExactError::NoOpenChannel(energy));
    }
    Ok(modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactConfig {
    /// Legendre functions in x.
    pub x_modes: usize,
    /// Oscillator functions in y.
    pub y_modes: usize,
    /// Gauss nodes beyond `2 x_modes`.
    pub extra_quadrature: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { x_modes: 100, y_modes: 64, extra_quadrature: 20 }
    }
}

/// Orthonormalized `L_k - L_{k+2}` on `[0, d]`; every member vanishes at both walls.
#[derive(Debug)]
pub struct XBasis {
    d: f64,
    size: usize,
    /// Cholesky factor of the raw overlap matrix.
    chol: Mat<f64>,
    weights: Vec<f64>,
    /// `[j][q]` values and slopes at the quadrature nodes.
    chi: Vec<Vec<f64>>,
    dchi: Vec<Vec<f64>>,
}

impl XBasis {
    pub fn new(d: f64, size: usize, extra_quadrature: usize) -> Result<Self, ExactError> {
        if size == 0 {
            return Err(ExactError::Config("x_modes must be positive".into()));
        }
        let (t, w) = gauss_legendre(2 * size + extra_quadrature);
        let nodes: Vec<f64> = t.iter().map(|t| 0.5 * d * (t + 1.0)).collect();
        let weights: Vec<f64> = w.iter().map(|w| 0.5 * d * w).collect();
        let nq = nodes.len();
        let mut phi = Mat::<f64>::zeros(size, nq);
        let mut dphi = Mat::<f64>::zeros(size, nq);
        for (q, &x) in nodes.iter().enumerate() {
            let (p, dp) = Self::raw(d, size, x);
            for j in 0..size {
                phi[(j, q)] = p[j];
                dphi[(j, q)] = dp[j];
            }
        }
        let overlap = Mat::<f64>::from_fn(size, size, |i, j| (0..nq).map(|q| weights[q] * phi[(i, q)] * phi[(j, q)]).sum());
        let chol = overlap.llt(Side::Lower).map_err(|_| ExactError::Overlap)?.L().to_owned();
        solve_lower_triangular_in_place(chol.as_ref(), phi.as_mut(), Par::Seq);
        solve_lower_triangular_in_place(chol.as_ref(), dphi.as_mut(), Par::Seq);
        let rows = |m: &Mat<f64>| (0..size).map(|j| (0..nq).map(|q| m[(j, q)]).collect()).collect();
        Ok(XBasis { d, size, chol, weights, chi: rows(&phi), dchi: rows(&dphi) })
    }

    fn raw(d: f64, size: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let (p, dp) = legendre_table(size + 2, 2.0 * x / d - 1.0);
        let phi = (0..size).map(|k| p[k] - p[k + 2]).collect();
        let dphi = (0..size).map(|k| (dp[k] - dp[k + 2]) * 2.0 / d).collect();
        (phi, dphi)
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Values and slopes of all basis functions at `x`.
    pub fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let (p, dp) = Self::raw(self.d, self.size, x);
        let mut m = Mat::<f64>::from_fn(self.size, 2, |j, c| if c == 0 { p[j] } else { dp[j] });
        solve_lower_triangular_in_place(self.chol.as_ref(), m.as_mut(), Par::Seq);
        ((0..self.size).map(|j| m[(j, 0)]).collect(), (0..self.size).map(|j| m[(j, 1)]).collect())
    }

    /// `int f_j f_k` with `f` drawn from the node tables.
    fn gram(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.weights.iter().enumerate().map(|(q, w)| w * a[i][q] * b[j][q]).sum()).collect())
            .collect()
    }
}

/// Galerkin Hamiltonian of the strip.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    pub params: SystemParams,
    pub config: ExactConfig,
    basis: Arc<XBasis>,
    omega: f64,
    length: f64,
    /// `hbar^2/(2m) <chi_j' | chi_k'>`.
    kinetic: Vec<Vec<f64>>,
    /// `<chi_j | d/dx | chi_k>`.
    derivative: Vec<Vec<f64>>,
}

/// A parity block: index pairs `(j, m)` with `(-1)^{j+m} = parity`.
fn block_indices(nx: usize, ny: usize, parity: i8) -> Vec<(usize, usize)> {
    let want = usize::from(parity < 0);
    (0..nx).flat_map(|j| (0..ny).map(move |m| (j, m))).filter(|(j, m)| (j + m) % 2 == want).collect()
}

impl ExactSolver {
    pub fn new(params: &SystemParams, config: ExactConfig) -> Result<Self, ExactError> {
        params.validate()?;
        if config.y_modes == 0 {
            return Err(ExactError::Config("y_modes must be positive".into()));
        }
        let basis = XBasis::new(params.d, config.x_modes, config.extra_quadrature)?;
        let kscale = params.hbar * params.hbar / (2.0 * params.mass);
        let kinetic = basis.gram(&basis.dchi, &basis.dchi).into_iter().map(|r| r.into_iter().map(|v| v * kscale).collect()).collect();
        let derivative = basis.gram(&basis.chi, &basis.dchi);
        Ok(ExactSolver {
            params: *params,
            config,
            omega: effective_frequency(params),
            length: oscillator_length(params),
            basis: Arc::new(basis),
            kinetic,
            derivative,
        })
    }

    /// Real symmetric block in the basis `chi_j(x) i^m phi_m(y)`.
    fn block_matrix(&self, idx: &[(usize, usize)]) -> Mat<f64> {
        let hb = self.params.hbar;
        let cross = hb * self.params.cyclotron();
        let l = self.length;
        let y_elem = |a: usize, b: usize| -> f64 {
            if b == a + 1 {
                l * ((a + 1) as f64 / 2.0).sqrt()
            } else if a == b + 1 {
                -l * (a as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        };
        Mat::from_fn(idx.len(), idx.len(), |r, c| {
            let ((j, m), (k, n)) = (idx[r], idx[c]);
            let mut h = 0.0;
            if m == n {
                h += self.kinetic[j][k];
                if j == k {
                    h += hb * self.omega * (m as f64 + 0.5);
                }
            }
            let y = y_elem(m, n);
            if y != 0.0 {
                h += cross * self.derivative[j][k] * y;
            }
            h
        })
    }

    /// Full spectrum; eigenvectors are kept for energies inside `window`.
    pub fn solve(&self, window: Option<(f64, f64)>) -> Result<ExactSpectrum, ExactError> {
        let (nx, ny) = (self.config.x_modes, self.config.y_modes);
        let mut levels = Vec::new();
        let mut states = Vec::new();
        for parity in [1i8, -1] {
            let idx = block_indices(nx, ny, parity);
            let h = self.block_matrix(&idx);
            let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| ExactError::Eigen)?;
            let (u, s) = (evd.U(), evd.S().column_vector());
            for i in 0..idx.len() {
                let energy = s[i];
                levels.push(ExactLevel { energy, parity });
                if window.is_some_and(|(lo, hi)| (lo..=hi).contains(&energy)) {
                    let mut coeffs = vec![0.0; nx * ny];
                    for (r, &(j, m)) in idx.iter().enumerate() {
                        coeffs[j * ny + m] = u[(r, i)];
                    }
                    states.push(self.state(energy, parity, coeffs));
                }
            }
        }
        levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        Ok(ExactSpectrum { levels, states })
    }

    pub fn state(&self, energy: f64, parity: i8, coeffs: Vec<f64>) -> ExactState {
        ExactState {
            energy,
            parity,
            coeffs,
            y_modes: self.config.y_modes,
            length: self.length,
            basis: Arc::clone(&self.basis),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactLevel {
    pub energy: f64,
    /// Inversion parity about the strip centre.
    pub parity: i8,
}

#[derive(Debug, Clone)]
pub struct ExactSpectrum {
    pub levels: Vec<ExactLevel>,
    pub states: Vec<ExactState>,
}

/// Serializable form of an [`ExactSpectrum`]; states are rebuilt against a
/// fresh solver on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub params: SystemParams,
    pub config: ExactConfig,
    pub levels: Vec<ExactLevel>,
    pub states: Vec<StateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub energy: f64,
    pub parity: i8,
    pub coeffs: Vec<f64>,
}

impl SpectrumRecord {
    pub fn new(spectrum: &ExactSpectrum, params: &SystemParams, config: ExactConfig) -> Self {
        let states = spectrum.states.iter().map(|s| StateRecord { energy: s.energy, parity: s.parity, coeffs: s.coeffs.clone() }).collect();
        SpectrumRecord { params: *params, config, levels: spectrum.levels.clone(), states }
    }

    pub fn restore(self) -> Result<ExactSpectrum, ExactError> {
        let solver = ExactSolver::new(&self.params, self.config)?;
        let size = self.config.x_modes * self.config.y_modes;
        if let Some(bad) = self.states.iter().find(|s| s.coeffs.len() != size) {
            return Err(ExactError::Config(format!("stored state at E = {} has {} coefficients, expected {size}", bad.energy, bad.coeffs.len())));
        }
        let states = self.states.into_iter().map(|s| solver.state(s.energy, s.parity, s.coeffs)).collect();
        Ok(ExactSpectrum { levels: self.levels, states })
    }
}

impl ExactSpectrum {
    /// Smallest singular value of `H - E`, i.e. the distance to the spectrum.
    pub fn sigma_min(&self, energy: f64) -> f64 {
        let i = self.levels.partition_point(|l| l.energy < energy);
        let above = self.levels.get(i).map_or(f64::INFINITY, |l| l.energy - energy);
        let below = i.checked_sub(1).map_or(f64::INFINITY, |k| energy - self.levels[k].energy);
        above.min(below)
    }

    pub fn levels_in(&self, lo: f64, hi: f64) -> Vec<ExactLevel> {
        self.levels.iter().copied().filter(|l| (lo..=hi).contains(&l.energy)).collect()
    }

    /// The retained eigenstate at `energy`.
    pub fn eigenstate(&self, energy: f64, tol: f64) -> Result<&ExactState, ExactError> {
        self.states
            .iter()
            .min_by(|a, b| (a.energy - energy).abs().total_cmp(&(b.energy - energy).abs()))
            .filter(|s| (s.energy - energy).abs() <= tol)
            .ok_or(ExactError::NotEigenvalue { energy, sigma: self.sigma_min(energy) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub energy: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub samples: Vec<ScanPoint>,
    /// Zeros of `sigma_min` inside the scan range.
    pub minima: Vec<ExactLevel>,
}

/// Samples `sigma_min(E)` on a uniform grid and lists its zeros in range.
pub fn spectrum_scan(spectrum: &ExactSpectrum, lo: f64, hi: f64, step: f64) -> Result<SpectrumScan, ExactError> {
    if !(step > 0.0 && hi > lo) {
        return Err(ExactError::Config(format!("bad scan range [{lo}, {hi}] with step {step}")));
    }
    let n = ((hi - lo) / step).round() as usize;
    let samples = (0..=n)
        .map(|i| {
            let energy = lo + (hi - lo) * i as f64 / n as f64;
            ScanPoint { energy, sigma: spectrum.sigma_min(energy) }
        })
        .collect();
    Ok(SpectrumScan { samples, minima: spectrum.levels_in(lo, hi) })
}

/// An eigenstate `sum C[j,m] chi_j(x) i^m phi_m(y)`, unit norm on the strip.
#[derive(Debug, Clone)]
pub struct ExactState {
    pub energy: f64,
    pub parity: i8,
    /// Row-major `[j * y_modes + m]`.
    pub coeffs: Vec<f64>,
    y_modes: usize,
    length: f64,
    basis: Arc<XBasis>,
}

impl ExactState {
    /// Norm on the strip; the basis is orthonormal.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &ExactState) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// `A_j(y) = sum_m C[j,m] i^m phi_m(y)`.
    fn transverse(&self, y: f64) -> Vec<Complex64> {
        let l = self.length;
        let phi = hermite_functions(self.y_modes, y / l);
        let norm = l.sqrt().recip();
        self.coeffs
            .chunks(self.y_modes)
            .map(|row| {
                let (mut re, mut im) = (0.0, 0.0);
                for (m, (c, p)) in row.iter().zip(&phi).enumerate() {
                    let v = c * p * norm;
                    match m % 4 {
                        0 => re += v,
                        1 => im += v,
                        2 => re -= v,
                        _ => im -= v,
                    }
                }
                Complex64::new(re, im)
            })
            .collect()
    }

    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        let (chi, _) = self.basis.eval(x);
        self.transverse(y).iter().zip(&chi).map(|(a, c)| a * c).sum()
    }

    /// `d_x Psi(0, y)`.
    pub fn wall_derivative(&self, y: f64) -> Complex64 {
        let (_, dchi) = self.basis.eval(0.0);
        self.transverse(y).iter().zip(&dchi).map(|(a, c)| a * c).sum()
    }

    pub fn wall_derivatives(&self, ys: &[f64]) -> Vec<Complex64> {
        let (_, dchi) = self.basis.eval(0.0);
        ys.iter().map(|&y| self.transverse(y).iter().zip(&dchi).map(|(a, c)| a * c).sum()).collect()
    }

    /// Values on a grid, rows following `ys`.
    pub fn grid(&self, xs: &[f64], ys: &[f64]) -> Vec<Vec<Complex64>> {
        let chi: Vec<Vec<f64>> = xs.iter().map(|&x| self.basis.eval(x).0).collect();
        ys.par_iter()
            .map(|&y| {
                let a = self.transverse(y);
                chi.iter().map(|c| a.iter().zip(c).map(|(a, c)| a * c).sum()).collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small() -> ExactConfig {
        ExactConfig { x_modes: 40, y_modes: 30, extra_quadrature: 20 }
    }

    /// Applies the wall-free Hamiltonian at fixed k to `f(y)` by 6th-order differences.
    fn transverse_residual(p: &SystemParams, mode: &ChannelMode, y: f64) -> Complex64 {
        let h = 5e-3;
        let f = |dy: f64| mode.value(p, 0.0, y + dy);
        let c = [2.0 / 180.0, -27.0 / 180.0, 270.0 / 180.0, -490.0 / 180.0];
        let f2 = (f(-3.0 * h) + f(3.0 * h)) * c[0] + (f(-2.0 * h) + f(2.0 * h)) * c[1] + (f(-h) + f(h)) * c[2] + f(0.0) * c[3];
        let f2 = f2 / (h * h);
        let hb = p.hbar;
        let kin = Complex64::from(hb) * mode.k + p.charge * p.b * y;
        -f2 * (hb * hb / (2.0 * p.mass)) + f(0.0) * (kin * kin / (2.0 * p.mass) + 0.5 * p.mass * p.omega0 * p.omega0 * y * y)
            - f(0.0) * mode.energy
    }

    #[test]
    fn channel_modes_solve_the_wall_free_problem() {
        let p = SystemParams::default();
        for e in [12.0, 92.5] {
            let modes = channel_basis(e, &p, 60, true, 10.0 / p.d).unwrap();
            assert!(modes.iter().any(|m| !m.is_open()));
            for m in modes.iter().filter(|m| m.is_open()) {
                let peak = (0..200).map(|i| m.value(&p, 0.0, m.center.re - 10.0 + 0.1 * i as f64).norm()).fold(0.0, f64::max);
                let scale = peak * e;
                for y in [-1.0, -0.3, 0.0, 0.7] {
                    let y = m.center.re + y;
                    let r = transverse_residual(&p, m, y);
                    assert!(r.norm() < 1e-8 * scale, "n={} k={} y={y}: {}", m.n_y, m.k, r.norm() / scale);
                }
            }
            for m in modes.iter().filter(|m| !m.is_open()) {
                let r = transverse_residual(&p, m, 0.2);
                let scale = m.value(&p, 0.0, 0.2).norm() * e;
                assert!(r.norm() < 1e-8 * scale.max(1e-12));
            }
        }
    }

    #[test]
    fn channel_basis_limits() {
        let free = SystemParams { b: 0.0, ..Default::default() };
        let modes = channel_basis(9.0, &free, 5, false, 1.0).unwrap();
        assert!(modes.iter().all(|m| m.center == Complex64::from(0.0) && m.omega == 2.0));
        // Threshold of the n = 2 channel: one mode with k = 0.
        let p = SystemParams::default();
        let e = effective_frequency(&p) * 2.5;
        let modes = channel_basis(e, &p, 2, false, 1.0).unwrap();
        assert_eq!(modes.iter().filter(|m| m.n_y == 2).count(), 1);
        assert_eq!(modes.len(), 5);
        assert_eq!(channel_basis(0.1, &p, 3, false, 1.0), Err(ExactError::NoOpenChannel(0.1)));
        assert!(channel_basis(0.1, &p, 3, true, 10.0).unwrap().iter().all(|m| !m.is_open()));
    }

    #[test]
    fn legendre_basis_is_orthonormal_and_conforming() {
        let b = XBasis::new(10.0, 30, 20).unwrap();
        let g = b.gram(&b.chi, &b.chi);
        for i in 0..30 {
            for j in 0..30 {
                assert!((g[i][j] - (i == j) as u8 as f64).abs() < 1e-11);
            }
        }
        let (c0, _) = b.eval(0.0);
        let (c1, _) = b.eval(10.0);
        assert!(c0.iter().chain(&c1).all(|v| v.abs() < 1e-12));
        // Parity about the centre.
        let (a, _) = b.eval(3.3);
        let (m, _) = b.eval(6.7);
        for j in 0..30 {
            assert!((a[j] - if j % 2 == 0 { m[j] } else { -m[j] }).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_field_spectrum_is_separable() {
        let p = SystemParams { b: 0.0, ..Default::default() };
        let sp = ExactSolver::new(&p, small()).unwrap().solve(None).unwrap();
        let mut exact: Vec<f64> =
            (0..30).flat_map(|n| (1..40).map(move |j| 2.0 * (n as f64 + 0.5) + (PI * j as f64 / 10.0).powi(2) / 2.0)).collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in sp.levels.iter().zip(&exact).take(60) {
            assert!((a.energy - b).abs() < 1e-6 * p.omega0, "{} {b}", a.energy);
        }
    }

    #[test]
    fn zero_field_ground_state_is_a_product() {
        let p = SystemParams { b: 0.0, ..Default::default() };
        let sp = ExactSolver::new(&p, small()).unwrap().solve(Some((0.0, 1.2))).unwrap();
        let st = &sp.states[0];
        let l = oscillator_length(&p);
        let exact = |x: f64, y: f64| (0.2f64).sqrt() * (PI * x / 10.0).sin() * hermite_functions(1, y / l)[0] / l.sqrt();
        let phase = st.value(5.0, 0.0) / exact(5.0, 0.0);
        assert!((phase.norm() - 1.0).abs() < 1e-6);
        for x in [0.7, 2.0, 5.5, 9.1] {
            for y in [-1.0, 0.0, 0.4] {
                assert!((st.value(x, y) / phase - exact(x, y)).norm() < 1e-6);
            }
        }
    }

    fn landau_residual(p: &SystemParams, st: &ExactState, x: f64, y: f64, h: f64) -> (Complex64, Complex64) {
        let f = |dx: f64, dy: f64| st.value(x + dx, y + dy);
        let c = [-1.0 / 560.0, 8.0 / 315.0, -1.0 / 5.0, 8.0 / 5.0, -205.0 / 72.0];
        let d1 = [1.0 / 280.0, -4.0 / 105.0, 1.0 / 5.0, -4.0 / 5.0];
        let mut fxx = f(0.0, 0.0) * c[4];
        let mut fyy = f(0.0, 0.0) * c[4];
        let mut fx = Complex64::from(0.0);
        for k in 1..=4 {
            let s = (5 - k) as f64 * h;
            fxx += (f(s, 0.0) + f(-s, 0.0)) * c[k - 1];
            fyy += (f(0.0, s) + f(0.0, -s)) * c[k - 1];
            fx += (f(-s, 0.0) - f(s, 0.0)) * d1[k - 1];
        }
        let (fxx, fyy, fx) = (fxx / (h * h), fyy / (h * h), fx / h);
        let hb = p.hbar;
        let om2 = effective_frequency(p).powi(2);
        let h_psi = -(fxx + fyy) * (hb * hb / (2.0 * p.mass)) - Complex64::i() * fx * (hb * p.cyclotron() * y)
            + f(0.0, 0.0) * (0.5 * p.mass * om2 * y * y);
        (h_psi - f(0.0, 0.0) * st.energy, f(0.0, 0.0))
    }

    #[test]
    fn eigenstates_satisfy_the_schroedinger_equation() {
        let p = SystemParams::default();
        let cfg = ExactConfig { x_modes: 50, y_modes: 40, ..small() };
        let sp = ExactSolver::new(&p, cfg).unwrap().solve(Some((8.0, 12.0))).unwrap();
        assert!(sp.states.len() >= 4);
        for st in &sp.states {
            assert!((st.norm() - 1.0).abs() < 1e-12);
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..12 {
                for j in 0..12 {
                    let (x, y) = (0.5 + 9.0 * i as f64 / 11.0, -2.5 + 5.0 * j as f64 / 11.0);
                    let (r, v) = landau_residual(&p, st, x, y, 0.01);
                    num += r.norm_sqr();
                    den += v.norm_sqr();
                }
            }
            assert!((num / den).sqrt() < 1e-5, "E={}: {}", st.energy, (num / den).sqrt());
            let max = st.grid(&[5.0, 3.0, 7.0], &[-0.5, 0.0, 0.5]).iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
            for y in [-2.0, -0.4, 0.0, 1.1] {
                assert!(st.value(0.0, y).norm() < 1e-4 * max && st.value(p.d, y).norm() < 1e-4 * max);
            }
        }
        for (a, b) in sp.states.iter().zip(sp.states.iter().skip(1)) {
            assert!(a.overlap(b).abs() < 1e-3);
        }
    }

    #[test]
    fn parity_labels_match_the_fields() {
        let p = SystemParams::default();
        let sp = ExactSolver::new(&p, small()).unwrap().solve(Some((8.0, 12.0))).unwrap();
        for st in &sp.states {
            for (x, y) in [(1.3, 0.4), (4.2, -0.9), (2.2, 1.5)] {
                let a = st.value(x, y);
                let b = st.value(p.d - x, -y);
                assert!((a - b * st.parity as f64).norm() < 1e-10 * a.norm().max(1e-3));
            }
        }
    }

    #[test]
    fn energies_are_stable_under_basis_enlargement() {
        let p = SystemParams::default();
        let a = ExactSolver::new(&p, small()).unwrap().solve(None).unwrap().levels_in(8.0, 14.0);
        let big = ExactConfig { x_modes: 48, y_modes: 36, extra_quadrature: 20 };
        let b = ExactSolver::new(&p, big).unwrap().solve(None).unwrap().levels_in(8.0, 14.0);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.energy - y.energy).abs() < 1e-5 * p.cyclotron(), "{} {}", x.energy, y.energy);
        }
    }

    #[test]
    fn scan_minima_are_the_levels() {
        let p = SystemParams::default();
        let sp = ExactSolver::new(&p, small()).unwrap().solve(None).unwrap();
        let scan = spectrum_scan(&sp, 8.0, 12.0, 0.02).unwrap();
        let med = crate::numerics::median(&scan.samples.iter().map(|s| s.sigma).collect::<Vec<_>>());
        assert!(!scan.minima.is_empty());
        for m in &scan.minima {
            assert!(sp.sigma_min(m.energy) < 1e-4 * med);
        }
        assert!(matches!(spectrum_scan(&sp, 1.0, 0.0, 0.1), Err(ExactError::Config(_))));
    }

    #[test]
    fn eigenstate_lookup() {
        let p = SystemParams::default();
        let sp = ExactSolver::new(&p, small()).unwrap().solve(Some((8.0, 9.0))).unwrap();
        let e = sp.states[0].energy;
        assert_eq!(sp.eigenstate(e + 1e-9, 1e-6).unwrap().energy, e);
        assert!(matches!(sp.eigenstate(e + 0.05, 1e-6), Err(ExactError::NotEigenvalue { .. })));
    }

    #[test]
    fn spectrum_record_round_trip() {
        let p = SystemParams::default();
        let cfg = small();
        let sp = ExactSolver::new(&p, cfg).unwrap().solve(Some((10.0, 12.0))).unwrap();
        let rec = SpectrumRecord::new(&sp, &p, cfg);
        let back = rec.clone().restore().unwrap();
        assert_eq!(back.levels, sp.levels);
        assert_eq!(back.states.len(), sp.states.len());
        for (a, b) in back.states.iter().zip(&sp.states) {
            assert_eq!(a.value(1.3, 0.4), b.value(1.3, 0.4));
        }
        let mut broken = rec;
        broken.states[0].coeffs.pop();
        assert!(broken.restore().is_err());
    }
}
