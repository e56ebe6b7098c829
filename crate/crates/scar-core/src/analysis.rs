//! Comparison layer: Husimi maps of wall derivatives in Birkhoff coordinates,
//! averaged line profiles and the inversion-parity detector.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::SystemParams;
use crate::numerics::{boxcar, median, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("coherent-state width must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("averaging window {window} is smaller than the grid step {step}")]
    InvalidWindow { window: f64, step: f64 },
    #[error("{0} needs at least two samples")]
    TooFewSamples(&'static str),
}

/// Uniform samples of a boundary function, typically `d_x Psi(0, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallFunction {
    pub y0: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl WallFunction {
    pub fn sample(f: impl Fn(f64) -> Complex64, y_max: f64, step: f64) -> Self {
        let n = (2.0 * y_max / step).ceil() as usize + 1;
        let y0 = -0.5 * step * (n - 1) as f64;
        WallFunction { y0, step, values: (0..n).map(|i| f(y0 + step * i as f64)).collect() }
    }

    pub fn from_samples(ys: &[f64], values: Vec<Complex64>) -> Result<Self, AnalysisError> {
        if ys.len() < 2 || ys.len() != values.len() {
            return Err(AnalysisError::TooFewSamples("wall function"));
        }
        Ok(WallFunction { y0: ys[0], step: ys[1] - ys[0], values })
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.y0 + self.step * i as f64)
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.step).sqrt()
    }
}

/// `<y0, p0 | f>` with the normalized packet
/// `(pi s^2)^{-1/4} exp(-(y - y0)^2 / (2 s^2) + i p0 y / hbar)`, by the
/// trapezoidal rule (spectrally accurate for the Gaussian-windowed integrand).
pub fn coherent_overlap(f: &WallFunction, y0: f64, p0: f64, sigma: f64, hbar: f64) -> Complex64 {
    let norm = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let mut acc = Complex64::from(0.0);
    for (y, v) in f.ys().zip(&f.values) {
        let u = (y - y0) / sigma;
        if u.abs() < 40.0 {
            acc += Complex64::from_polar(norm * (-0.5 * u * u).exp(), -p0 * y / hbar) * v;
        }
    }
    acc * f.step
}

/// The accessible region at the wall, `p^2/2m + u(0, y) <= E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCircle {
    pub energy: f64,
    pub mass: f64,
    pub omega0: f64,
}

impl EnergyCircle {
    pub fn new(energy: f64, params: &SystemParams) -> Self {
        EnergyCircle { energy, mass: params.mass, omega0: params.omega0 }
    }

    pub fn y_radius(&self) -> f64 {
        (2.0 * self.energy / (self.mass * self.omega0 * self.omega0)).sqrt()
    }

    pub fn p_radius(&self) -> f64 {
        (2.0 * self.mass * self.energy).sqrt()
    }

    pub fn contains(&self, y: f64, p: f64) -> bool {
        p * p / (2.0 * self.mass) + 0.5 * self.mass * self.omega0 * self.omega0 * y * y <= self.energy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HusimiMap {
    pub ys: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[iy][ip]`.
    pub values: Vec<Vec<f64>>,
    pub sigma: f64,
    pub circle: Option<EnergyCircle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HusimiPeak {
    pub y: f64,
    pub p: f64,
    pub value: f64,
}

impl HusimiMap {
    pub fn peak(&self) -> HusimiPeak {
        let mut best = HusimiPeak { y: self.ys[0], p: self.ps[0], value: f64::NEG_INFINITY };
        for (iy, row) in self.values.iter().enumerate() {
            for (ip, &v) in row.iter().enumerate() {
                if v > best.value {
                    best = HusimiPeak { y: self.ys[iy], p: self.ps[ip], value: v };
                }
            }
        }
        best
    }

    /// Grid sum times cell area.
    pub fn integral(&self) -> f64 {
        let dy = self.ys[1] - self.ys[0];
        let dp = self.ps[1] - self.ps[0];
        self.values.iter().flatten().sum::<f64>() * dy * dp
    }

    /// Median over the grid points inside the energy circle.
    pub fn disc_median(&self) -> Option<f64> {
        let c = self.circle?;
        let inside: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .flat_map(|(iy, row)| row.iter().enumerate().filter(move |(ip, _)| c.contains(self.ys[iy], self.ps[*ip])).map(|(_, v)| *v))
            .collect();
        (!inside.is_empty()).then(|| median(&inside))
    }
}

pub fn husimi_map(f: &WallFunction, ys: &[f64], ps: &[f64], sigma: f64, hbar: f64) -> Result<HusimiMap, AnalysisError> {
    if !(sigma > 0.0) {
        return Err(AnalysisError::InvalidSigma(sigma));
    }
    if ys.len() < 2 || ps.len() < 2 {
        return Err(AnalysisError::TooFewSamples("Husimi grid"));
    }
    let yq: Vec<f64> = f.ys().collect();
    let phases: Vec<Vec<Complex64>> = ps.iter().map(|&p| yq.iter().map(|&y| Complex64::from_polar(1.0, -p * y / hbar)).collect()).collect();
    let norm = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let values = ys
        .par_iter()
        .map(|&y0| {
            let windowed: Vec<Complex64> = yq
                .iter()
                .zip(&f.values)
                .map(|(&y, v)| {
                    let u = (y - y0) / sigma;
                    v * (norm * (-0.5 * u * u).exp())
                })
                .collect();
            phases
                .iter()
                .map(|ph| (ph.iter().zip(&windowed).map(|(a, b)| a * b).sum::<Complex64>() * f.step).norm_sqr())
                .collect()
        })
        .collect();
    Ok(HusimiMap { ys: ys.to_vec(), ps: ps.to_vec(), values, sigma, circle: None })
}

/// Husimi map over the bounding box of the energy circle.
pub fn husimi_on_circle(f: &WallFunction, circle: EnergyCircle, ny: usize, np: usize, sigma: f64, hbar: f64) -> Result<HusimiMap, AnalysisError> {
    let (yr, pr) = (circle.y_radius(), circle.p_radius());
    let grid = |r: f64, n: usize| -> Vec<f64> { (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect() };
    let mut map = husimi_map(f, &grid(yr, ny), &grid(pr, np), sigma, hbar)?;
    map.circle = Some(circle);
    Ok(map)
}

/// Husimi value at the orbit's Birkhoff point against the disc median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScarScore {
    pub orbit_value: f64,
    pub background: f64,
    pub ratio: f64,
}

pub fn scar_score(f: &WallFunction, map: &HusimiMap, birkhoff: (f64, f64), hbar: f64) -> ScarScore {
    let orbit_value = coherent_overlap(f, birkhoff.0, birkhoff.1, map.sigma, hbar).norm_sqr();
    let background = map.disc_median().unwrap_or(f64::NAN);
    ScarScore { orbit_value, background, ratio: orbit_value / background }
}

/// Distance from the peak to a phase-space point in units of the packet widths.
pub fn packet_distance(peak: (f64, f64), point: (f64, f64), sigma: f64, hbar: f64) -> f64 {
    ((peak.0 - point.0) / sigma).hypot((peak.1 - point.1) * sigma / hbar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub xs: Vec<f64>,
    pub raw: Vec<f64>,
    pub averaged: Vec<f64>,
}

/// `|Psi|` along a line, boxcar-averaged over `window` (an odd number of samples).
pub fn line_profile(field: impl Fn(f64) -> Complex64, xs: &[f64], window: f64) -> Result<Profile, AnalysisError> {
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewSamples("line profile"));
    }
    let step = xs[1] - xs[0];
    if window < step {
        return Err(AnalysisError::InvalidWindow { window, step });
    }
    let raw: Vec<f64> = xs.iter().map(|&x| field(x).norm()).collect();
    let w = 2 * ((window / step).round() as usize / 2) + 1;
    Ok(Profile { xs: xs.to_vec(), averaged: boxcar(&raw, w), raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityCheck {
    /// +1 symmetric, -1 antisymmetric.
    pub parity: i8,
    /// `max |Psi(q) - parity Psi(q')| / max |Psi|`.
    pub residual: f64,
    /// `Re <Psi | Psi o inversion> / <Psi | Psi>`.
    pub correlation: f64,
}

/// Inversion parity about `center` from values at `points`.
pub fn inversion_parity(field: impl Fn(Vec2) -> Complex64, center: Vec2, points: &[Vec2]) -> ParityCheck {
    let pairs: Vec<(Complex64, Complex64)> = points.iter().map(|&q| (field(q), field(center * 2.0 - q))).collect();
    let num: f64 = pairs.iter().map(|(a, b)| (a.conj() * b).re).sum();
    let den: f64 = pairs.iter().map(|(a, _)| a.norm_sqr()).sum();
    let parity = if num >= 0.0 { 1i8 } else { -1 };
    let max = pairs.iter().map(|(a, _)| a.norm()).fold(0.0, f64::max);
    let worst = pairs.iter().map(|(a, b)| (a - b * parity as f64).norm()).fold(0.0, f64::max);
    ParityCheck { parity, residual: worst / max, correlation: num / den }
}
