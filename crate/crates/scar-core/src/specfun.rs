//! Special functions for the boundary-layer modes: Hermite polynomials,
//! Kummer's M, parabolic cylinder functions of complex order, and Bessel
//! functions of order +-1/4.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpecFunError {
    #[error("Hermite degree {0} exceeds the supported maximum of 200")]
    DegreeTooLarge(usize),
    #[error("argument {0} outside the supported range")]
    OutOfRange(f64),
    #[error("series lost {digits:.1} digits to cancellation")]
    Cancellation { digits: f64 },
    #[error("series did not converge within {0} terms")]
    NoConvergence(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecFunConfig {
    pub series_tolerance: f64,
    /// |z| above which D uses its large-argument expansion.
    pub pcf_switch_radius: f64,
    /// Near the positive real axis the series cancels; beyond this radius D
    /// is integrated inward from `pcf_far_radius` instead.
    pub pcf_inner_radius: f64,
    pub pcf_far_radius: f64,
    /// x above which J uses Hankel's expansion.
    pub bessel_switch: f64,
    pub max_terms: usize,
    /// Largest accepted |z| for D.
    pub pcf_max_radius: f64,
}

impl Default for SpecFunConfig {
    fn default() -> Self {
        Self {
            series_tolerance: 1e-14,
            pcf_switch_radius: 6.0,
            pcf_inner_radius: 3.5,
            pcf_far_radius: 12.0,
            bessel_switch: 12.0,
            max_terms: 2000,
            pcf_max_radius: 60.0,
        }
    }
}

pub fn hermite(m: usize, x: f64) -> Result<f64, SpecFunError> {
    hermite_c(m, C64::new(x, 0.0)).map(|h| h.re)
}

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite_c(m: usize, x: C64) -> Result<C64, SpecFunError> {
    if m > 200 {
        return Err(SpecFunError::DegreeTooLarge(m));
    }
    let (mut h0, mut h1) = (C64::new(1.0, 0.0), x * 2.0);
    if m == 0 {
        return Ok(h0);
    }
    for k in 1..m {
        let h2 = x * h1 * 2.0 - h0 * (2.0 * k as f64);
        h0 = h1;
        h1 = h2;
    }
    Ok(h1)
}

/// Normalized Hermite functions `h_0..h_{n-1}` at complex `u`,
/// `h_k = (2^k k! sqrt(pi))^{-1/2} H_k(u) exp(-u^2/2)`, by the stable
/// three-term recurrence.
pub fn hermite_functions_c(n: usize, u: C64) -> Vec<C64> {
    let mut h = Vec::with_capacity(n);
    if n == 0 {
        return h;
    }
    h.push((-u * u / 2.0).exp() * PI.powf(-0.25));
    if n > 1 {
        h.push(u * h[0] * 2f64.sqrt());
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let next = u * h[k] * (2.0 / (kf + 1.0)).sqrt() - h[k - 1] * (kf / (kf + 1.0)).sqrt();
        h.push(next);
    }
    h
}

pub fn hermite_functions(n: usize, u: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n);
    if n == 0 {
        return h;
    }
    h.push((-u * u / 2.0).exp() * PI.powf(-0.25));
    if n > 1 {
        h.push(u * h[0] * 2f64.sqrt());
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let next = u * h[k] * (2.0 / (kf + 1.0)).sqrt() - h[k - 1] * (kf / (kf + 1.0)).sqrt();
        h.push(next);
    }
    h
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for complex arguments (Lanczos with reflection).
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return C64::new(PI, 0.0) / (s * gamma(C64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut acc = C64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    acc * (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp()
}

/// 1/Gamma, exact zero at the poles.
pub fn rgamma(z: C64) -> C64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return C64::new(0.0, 0.0);
    }
    gamma(z).inv()
}

/// Kummer's M(a, b, z) by its power series. Returns the value and the
/// largest term magnitude, which bounds the rounding error.
pub fn kummer_m(a: C64, b: C64, z: C64, cfg: &SpecFunConfig) -> Result<(C64, f64), SpecFunError> {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut biggest = 1.0f64;
    for k in 0..cfg.max_terms {
        let kf = k as f64;
        term = term * (a + kf) / (b + kf) * z / (kf + 1.0);
        sum += term;
        biggest = biggest.max(term.norm());
        if term.norm() <= cfg.series_tolerance * sum.norm() && kf > z.norm() {
            return Ok((sum, biggest));
        }
        if term.norm() == 0.0 {
            return Ok((sum, biggest));
        }
    }
    Err(SpecFunError::NoConvergence(cfg.max_terms))
}

/// Parabolic cylinder function D_nu(z) for complex order and argument.
pub fn parabolic_cylinder_d(nu: C64, z: C64) -> Result<C64, SpecFunError> {
    parabolic_cylinder_d_with(nu, z, &SpecFunConfig::default())
}

pub fn parabolic_cylinder_d_with(nu: C64, z: C64, cfg: &SpecFunConfig) -> Result<C64, SpecFunError> {
    let r = z.norm();
    if r > cfg.pcf_max_radius || !r.is_finite() {
        return Err(SpecFunError::OutOfRange(r));
    }
    let arg = z.arg();
    if arg.abs() < 0.25 * PI && r > cfg.pcf_inner_radius && r < cfg.pcf_far_radius {
        return pcf_inward(nu, z, cfg.pcf_far_radius);
    }
    if r <= cfg.pcf_switch_radius {
        return pcf_series(nu, z, cfg);
    }
    if arg.abs() <= 0.5 * PI {
        return pcf_asymptotic(nu, z);
    }
    // Connection formulas map the left half-plane onto the right one.
    let i = C64::new(0.0, 1.0);
    let coeff = (2.0 * PI).sqrt() * rgamma(-nu);
    if arg > 0.0 {
        let a = (i * PI * nu).exp() * pcf_asymptotic(nu, -z)?;
        let b = coeff * (i * PI * (nu + 1.0) * 0.5).exp() * pcf_asymptotic(-nu - 1.0, -i * z)?;
        Ok(a + b)
    } else {
        let a = (-i * PI * nu).exp() * pcf_asymptotic(nu, -z)?;
        let b = coeff * (-i * PI * (nu + 1.0) * 0.5).exp() * pcf_asymptotic(-nu - 1.0, i * z)?;
        Ok(a + b)
    }
}

/// Two-term Kummer representation, valid for all z but subject to cancellation.
fn pcf_series(nu: C64, z: C64, cfg: &SpecFunConfig) -> Result<C64, SpecFunError> {
    let half = C64::new(0.5, 0.0);
    let x = z * z * 0.5;
    let (m1, big1) = kummer_m(-nu * 0.5, half, x, cfg)?;
    let (m2, big2) = kummer_m((C64::new(1.0, 0.0) - nu) * 0.5, C64::new(1.5, 0.0), x, cfg)?;
    let c1 = PI.sqrt() * rgamma((C64::new(1.0, 0.0) - nu) * 0.5);
    let c2 = -(2.0 * PI).sqrt() * z * rgamma(-nu * 0.5);
    let t1 = c1 * m1;
    let t2 = c2 * m2;
    let sum = t1 + t2;
    let scale = (c1.norm() * big1).max(c2.norm() * big2).max(t1.norm()).max(t2.norm());
    let rel_err = f64::EPSILON * scale / sum.norm().max(f64::MIN_POSITIVE);
    if rel_err > 1e6 * cfg.series_tolerance.max(f64::EPSILON) {
        return Err(SpecFunError::Cancellation { digits: (rel_err / f64::EPSILON).log10() });
    }
    Ok(C64::new(2.0, 0.0).powc(nu * 0.5) * (-z * z * 0.25).exp() * sum)
}

/// Integrates `D'' = (z^2/4 - nu - 1/2) D` along the ray through `z`, starting
/// from the asymptotic value at radius `far`. D is recessive there, so the
/// inward direction is the stable one.
fn pcf_inward(nu: C64, z: C64, far: f64) -> Result<C64, SpecFunError> {
    let u = z / z.norm();
    let z0 = u * far;
    let d0 = pcf_asymptotic(nu, z0)?;
    let dm = pcf_asymptotic(nu - 1.0, z0)?;
    let dd0 = -z0 * 0.5 * d0 + nu * dm;
    let u2 = u * u;
    let rhs = |t: f64, y: &[f64; 4]| {
        let w = C64::new(y[0], y[1]);
        let zt = u * t;
        let acc = u2 * (zt * zt * 0.25 - nu - 0.5) * w;
        [y[2], y[3], acc.re, acc.im]
    };
    // y holds D(t u) and dD/dt = u D'(t u).
    let start = u * dd0;
    let y0 = [d0.re, d0.im, start.re, start.im];
    let tol = crate::numerics::Tolerance { rtol: 1e-13, atol: 1e-300 };
    let (y, _) = crate::numerics::integrate_to(&rhs, far, y0, z.norm(), 0.05, tol)
        .map_err(|_| SpecFunError::NoConvergence(0))?;
    Ok(C64::new(y[0], y[1]))
}

/// Large-|z| expansion for |arg z| < 3pi/4, truncated at the smallest term.
fn pcf_asymptotic(nu: C64, z: C64) -> Result<C64, SpecFunError> {
    let w = (z * z * 2.0).inv();
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 0..400 {
        let kf = k as f64;
        // (-nu)_{2k+2} / (-nu)_{2k} = (2k - nu)(2k + 1 - nu)
        let next = -term * (-nu + 2.0 * kf) * (-nu + 2.0 * kf + 1.0) * w / (kf + 1.0);
        let mag = next.norm();
        if mag >= last {
            break;
        }
        sum += next;
        term = next;
        last = mag;
        if mag <= 1e-17 * sum.norm() {
            break;
        }
    }
    Ok(z.powc(nu) * (-z * z * 0.25).exp() * sum)
}

/// Bessel J_nu(x) for real order and x >= 0.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64, SpecFunError> {
    bessel_j_with(nu, x, &SpecFunConfig::default())
}

pub fn bessel_j_with(nu: f64, x: f64, cfg: &SpecFunConfig) -> Result<f64, SpecFunError> {
    if !(x >= 0.0) {
        return Err(SpecFunError::OutOfRange(x));
    }
    if x < cfg.bessel_switch {
        if x == 0.0 {
            return Ok(if nu == 0.0 { 1.0 } else if nu > 0.0 { 0.0 } else { f64::INFINITY });
        }
        Ok((0.5 * x).powf(nu) * bessel_series_scaled(nu, x, cfg)?)
    } else {
        Ok(bessel_hankel(nu, x))
    }
}

/// `sum_k (-1)^k (x/2)^{2k} / (k! Gamma(k + nu + 1))`, i.e. J_nu(x) (x/2)^{-nu}.
fn bessel_series_scaled(nu: f64, x: f64, cfg: &SpecFunConfig) -> Result<f64, SpecFunError> {
    let q = 0.25 * x * x;
    let mut term = rgamma(C64::new(nu + 1.0, 0.0)).re;
    let mut sum = term;
    for k in 1..cfg.max_terms {
        let kf = k as f64;
        term *= -q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= cfg.series_tolerance * sum.abs() && kf * kf > q {
            return Ok(sum);
        }
    }
    Err(SpecFunError::NoConvergence(cfg.max_terms))
}

fn bessel_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // Odd k feed Q, even k feed P, with alternating signs in pairs.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

pub fn bessel_j_m14(x: f64) -> Result<f64, SpecFunError> {
    bessel_j(-0.25, x)
}

/// `x^{1/4} J_{-1/4}(x)`, finite at the origin where it equals `2^{1/4}/Gamma(3/4)`.
pub fn bessel_j_m14_scaled(x: f64) -> Result<f64, SpecFunError> {
    let cfg = SpecFunConfig::default();
    if !(x >= 0.0) {
        return Err(SpecFunError::OutOfRange(x));
    }
    if x < cfg.bessel_switch {
        Ok(2f64.powf(0.25) * bessel_series_scaled(-0.25, x, &cfg)?)
    } else {
        Ok(x.powf(0.25) * bessel_hankel(-0.25, x))
    }
}
