//! Semiclassical layer: action and flux, Bohr-Sommerfeld conditions for
//! stable and unstable orbits, boundary-layer modes, the separatrix state and
//! its assembly into a two-dimensional field with mirror images at the walls.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{
    find_bell_orbit, local_d, trace_arclength, ClassicalError, OrbitSearch, PeriodicOrbit,
};
use crate::model::SystemParams;
use crate::numerics::{brent, hermite_cubic, lagrange4, RootError, Tolerance, Vec2};
use crate::specfun::{bessel_j_m14_scaled, hermite_c, parabolic_cylinder_d, SpecFunError};
use crate::variation::{
    monodromy_classify, periodic_solutions, FocalCensus, MonodromyData, PeriodicSolutions, Stability, VariationError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemiclassicalError {
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("no quantized energy in [{lo}, {hi}]: {source}")]
    NoLevel { lo: f64, hi: f64, source: RootError },
    #[error("Maslov index changes across [{lo}, {hi}] ({a} -> {b}): orbit bifurcation")]
    Bifurcation { lo: f64, hi: f64, a: usize, b: usize },
    #[error("quantization function is not monotone on [{0}, {1}]")]
    NotMonotone(f64, f64),
    #[error("orbit is {0:?}, expected {1:?}")]
    WrongStability(Stability, Stability),
    #[error("point lies within the focal regularization zone (s = {0})")]
    FocalZone(f64),
    #[error("orbit is not closed")]
    OpenOrbit,
    #[error("phase-space measure N_ph = {0} must exceed 1")]
    SmallPhaseSpace(f64),
}

impl From<RootError> for SemiclassicalError {
    fn from(source: RootError) -> Self {
        SemiclassicalError::NoLevel { lo: f64::NAN, hi: f64::NAN, source }
    }
}

/// Round-trip action `int a ds` and the flux term `e B A_enclosed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionData {
    pub loop_action: f64,
    pub flux: f64,
    pub alpha: usize,
}

impl ActionData {
    pub fn total(&self) -> f64 {
        self.loop_action + self.flux
    }
}

pub fn action_and_flux(orbit: &PeriodicOrbit, params: &SystemParams, census: &FocalCensus) -> Result<ActionData, SemiclassicalError> {
    let closes = orbit.arcs.first().zip(orbit.arcs.last()).map(|(a, b)| (a.start().pos() - b.end().pos()).norm());
    match closes {
        Some(gap) if gap < 1e-6 * params.d.max(1.0) => {}
        _ => return Err(SemiclassicalError::OpenOrbit),
    }
    Ok(ActionData {
        loop_action: orbit.loop_action(),
        flux: params.charge * params.b * orbit.signed_area,
        alpha: census.alpha,
    })
}

/// Data of an orbit family at one energy, as needed by the quantization conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub energy: f64,
    /// `int a ds + Phi`.
    pub action: f64,
    pub period: f64,
    pub alpha: usize,
    pub lambda: Option<f64>,
    pub phi: Option<f64>,
}

pub trait OrbitFamily: Sync {
    fn point(&self, energy: f64) -> Result<FamilyPoint, SemiclassicalError>;
}

/// The wall-to-wall bell orbit, recomputed at every trial energy.
#[derive(Debug, Clone, Copy)]
pub struct BellFamily {
    pub params: SystemParams,
    pub search: OrbitSearch,
}

/// Everything derived from the bell orbit at one energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitAnalysis {
    pub orbit: PeriodicOrbit,
    pub monodromy: MonodromyData,
    pub solutions: PeriodicSolutions,
    pub action: ActionData,
}

pub fn analyze_orbit(energy: f64, params: &SystemParams, search: &OrbitSearch) -> Result<OrbitAnalysis, SemiclassicalError> {
    let orbit = find_bell_orbit(energy, params, search)?;
    let monodromy = monodromy_classify(&orbit, params)?;
    let solutions = periodic_solutions(&orbit, params, &monodromy)?;
    let action = action_and_flux(&orbit, params, &solutions.focal)?;
    Ok(OrbitAnalysis { orbit, monodromy, solutions, action })
}

impl OrbitFamily for BellFamily {
    fn point(&self, energy: f64) -> Result<FamilyPoint, SemiclassicalError> {
        let an = analyze_orbit(energy, &self.params, &self.search)?;
        Ok(FamilyPoint {
            energy,
            action: an.action.total(),
            period: an.orbit.period,
            alpha: an.action.alpha,
            lambda: an.monodromy.lambda.filter(|_| an.monodromy.classification == Stability::Unstable),
            phi: an.monodromy.phi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizedLevel {
    pub n: i64,
    pub eta: f64,
    /// Transverse index for stable orbits.
    pub m: Option<u32>,
    pub energy: f64,
    /// Quantization function at the returned energy.
    pub residual: f64,
    pub point: FamilyPoint,
}

/// Quantization function `F(E)` for an unstable orbit, `+` branch of the eta term.
pub fn unstable_condition(p: &FamilyPoint, n: i64, eta: f64, hbar: f64) -> f64 {
    p.action - hbar * (TAU * n as f64 + eta * p.lambda.unwrap_or(0.0) + 0.5 * PI * p.alpha as f64)
}

pub fn stable_condition(p: &FamilyPoint, n: i64, m: u32, hbar: f64) -> f64 {
    p.action - hbar * (TAU * n as f64 + (m as f64 + 0.5) * p.phi.unwrap_or(0.0))
}

const MONOTONE_SAMPLES: usize = 5;

fn solve_level<G>(family: &dyn OrbitFamily, lo: f64, hi: f64, cond: G) -> Result<(f64, f64, FamilyPoint), SemiclassicalError>
where
    G: Fn(&FamilyPoint) -> f64,
{
    let pts: Vec<FamilyPoint> = (0..MONOTONE_SAMPLES)
        .map(|k| family.point(lo + (hi - lo) * k as f64 / (MONOTONE_SAMPLES - 1) as f64))
        .collect::<Result<_, _>>()?;
    let (a0, a1) = (pts[0].alpha, pts[pts.len() - 1].alpha);
    if pts.iter().any(|p| p.alpha != a0) {
        return Err(SemiclassicalError::Bifurcation { lo, hi, a: a0, b: a1 });
    }
    let vals: Vec<f64> = pts.iter().map(&cond).collect();
    let inc = vals.windows(2).all(|w| w[1] > w[0]);
    let dec = vals.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) {
        return Err(SemiclassicalError::NotMonotone(lo, hi));
    }
    let f = |e: f64| -> Result<f64, SemiclassicalError> { Ok(cond(&family.point(e)?)) };
    let e = brent(f, lo, hi, 1e-13 * hi.abs().max(1.0), 200).map_err(|err| match err {
        SemiclassicalError::NoLevel { source, .. } => SemiclassicalError::NoLevel { lo, hi, source },
        other => other,
    })?;
    let p = family.point(e)?;
    Ok((e, cond(&p), p))
}

/// Root of `int a ds + Phi = hbar (2 pi n + eta lambda + pi alpha / 2)` in `[lo, hi]`.
pub fn quantize_unstable(
    n: i64,
    eta: f64,
    family: &dyn OrbitFamily,
    (lo, hi): (f64, f64),
    hbar: f64,
) -> Result<QuantizedLevel, SemiclassicalError> {
    let (energy, residual, point) = solve_level(family, lo, hi, |p| unstable_condition(p, n, eta, hbar))?;
    Ok(QuantizedLevel { n, eta, m: None, energy, residual, point })
}

/// Root of `int a ds + Phi = hbar (2 pi n + (m + 1/2) phi)` in `[lo, hi]`.
pub fn quantize_stable(
    n: i64,
    m: u32,
    family: &dyn OrbitFamily,
    (lo, hi): (f64, f64),
    hbar: f64,
) -> Result<QuantizedLevel, SemiclassicalError> {
    let (energy, residual, point) = solve_level(family, lo, hi, |p| stable_condition(p, n, m, hbar))?;
    Ok(QuantizedLevel { n, eta: 0.0, m: Some(m), energy, residual, point })
}

/// Bracket for level `n` from a linear fit of the action between two energies.
pub fn bracket_unstable(n: i64, eta: f64, family: &dyn OrbitFamily, e0: f64, e1: f64, hbar: f64) -> Result<(f64, f64), SemiclassicalError> {
    let (p0, p1) = (family.point(e0)?, family.point(e1)?);
    let (f0, f1) = (unstable_condition(&p0, n, eta, hbar), unstable_condition(&p1, n, eta, hbar));
    let guess = e0 - f0 * (e1 - e0) / (f1 - f0);
    // Half a level spacing on either side.
    let half = 0.5 * TAU * hbar * (e1 - e0) / (p1.action - p0.action).abs();
    Ok((guess - half, guess + half))
}

/// Local data of a pair of solutions of the equations in variation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPoint {
    pub a: f64,
    pub z: Complex64,
    pub p: Complex64,
    pub z_bar: Complex64,
    pub p_bar: Complex64,
    pub w: Complex64,
}

impl BeamPoint {
    pub fn gamma(&self) -> Complex64 {
        self.p / self.z
    }

    pub fn gamma_bar(&self) -> Complex64 {
        self.p_bar / self.z_bar
    }

    /// Exact constant-coefficient data: `z = exp(i k s)` with `k = sqrt(d)`
    /// for `d > 0`, or the growing/decaying pair for `d < 0`.
    pub fn constant(a: f64, d: f64, s: f64) -> Self {
        let i = Complex64::i();
        if d > 0.0 {
            let k = d.sqrt();
            let z = (i * k * s).exp();
            let z_bar = z.conj();
            let (p, p_bar) = (i * a * k * z, -i * a * k * z_bar);
            BeamPoint { a, z, p, z_bar, p_bar, w: p * z_bar - p_bar * z }
        } else {
            let k = (-d).sqrt();
            let z = Complex64::from((k * s).exp());
            let z_bar = Complex64::from((-k * s).exp());
            let (p, p_bar) = (a * k * z, -a * k * z_bar);
            BeamPoint { a, z, p, z_bar, p_bar, w: p * z_bar - p_bar * z }
        }
    }
}

/// General boundary-layer mode with complex index `xi`, principal branches.
/// `exp(i (G + Gb) nu^2 / 4) / sqrt(a z) (zb / z)^{xi/2} D_xi(sqrt(w / (i z zb)) nu)`.
pub fn abl_mode(nu: f64, xi: Complex64, bp: &BeamPoint) -> Result<Complex64, SemiclassicalError> {
    let i = Complex64::i();
    let zz = bp.z * bp.z_bar;
    let arg = (bp.w / (i * zz)).sqrt() * nu;
    let d = parabolic_cylinder_d(xi, arg)?;
    let quad = (i * (bp.gamma() + bp.gamma_bar()) * nu * nu / 4.0).exp();
    Ok(quad / (bp.z * bp.a).sqrt() * (bp.z_bar / bp.z).powc(xi / 2.0) * d)
}

/// Hermite form of the integer modes, including the `a^{-1/2}` factor.
pub fn hermite_mode(nu: f64, m: u32, bp: &BeamPoint) -> Result<Complex64, SemiclassicalError> {
    let i = Complex64::i();
    let dg = bp.gamma() - bp.gamma_bar();
    let x = (dg / (2.0 * i)).sqrt() * nu;
    let h = hermite_c(m as usize, x)?;
    let pre = bp.z_bar.powu(m) * dg.powf(m as f64 / 2.0) / (bp.a * bp.z).sqrt();
    Ok(pre * h * (i * bp.gamma() * nu * nu / 2.0).exp())
}

/// Branch bookkeeping for `(z zb)^{-1/4}` across focal points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FocalBranch {
    /// Analytic continuation: each sign change of `z zb` adds `-pi/4`.
    #[default]
    Continued,
    /// Segment-local phase `exp(-i pi/8 sign(z zb))`.
    Symmetric,
}

impl FocalBranch {
    pub fn phase(self, zz: f64, crossings: i64) -> Complex64 {
        let ph = match self {
            FocalBranch::Continued => -0.25 * PI * crossings as f64,
            FocalBranch::Symmetric => -PI / 8.0 * zz.signum(),
        };
        Complex64::from_polar(1.0, ph)
    }
}

/// Separatrix kernel `sqrt(|nu| / |z zb|) J_{-1/4}(w nu^2 / (4 z zb))` with the
/// quadratic phase and `a^{-1/2}`, times the supplied branch phase.
pub fn separatrix_wavefunction(nu: f64, bp: &BeamPoint, branch: Complex64) -> Result<Complex64, SemiclassicalError> {
    let zz = (bp.z * bp.z_bar).re;
    let w = bp.w.re;
    let x = (w * nu * nu / (4.0 * zz)).abs();
    let g = bessel_j_m14_scaled(x)?;
    let amp = zz.abs().powf(-0.25) * (0.25 * w.abs()).powf(-0.25) * g / bp.a.sqrt();
    let quad = Complex64::from_polar(1.0, ((bp.gamma() + bp.gamma_bar()).re) * nu * nu / 4.0);
    Ok(quad * branch * amp)
}

/// Operator `i phi_s + phi_nu_nu / (2a) - (a d / 2) nu^2 phi` applied to
/// `phi = sqrt(a) psi` with fourth-order differences. Returns the maximum and
/// RMS of the residual relative to `max |phi|` over interior points.
pub fn bl_residual<P, A, D>(psi: P, a: A, d: D, s_grid: &[f64], nu_grid: &[f64]) -> (f64, f64)
where
    P: Fn(f64, f64) -> Complex64,
    A: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let hs = s_grid[1] - s_grid[0];
    let hn = nu_grid[1] - nu_grid[0];
    let phi = |s: f64, nu: f64| psi(s, nu) * a(s).sqrt();
    let d1 = |f: &dyn Fn(f64) -> Complex64, x: f64, h: f64| {
        (f(x - 2.0 * h) - f(x + 2.0 * h) + (f(x + h) - f(x - h)) * 8.0) / (12.0 * h)
    };
    let d2 = |f: &dyn Fn(f64) -> Complex64, x: f64, h: f64| {
        (-(f(x - 2.0 * h) + f(x + 2.0 * h)) + (f(x + h) + f(x - h)) * 16.0 - f(x) * 30.0) / (12.0 * h * h)
    };
    let (mut max_r, mut sum2, mut count, mut max_phi) = (0.0f64, 0.0, 0usize, 0.0f64);
    for &s in s_grid {
        let (aa, dd) = (a(s), d(s));
        for &nu in nu_grid {
            let val = phi(s, nu);
            max_phi = max_phi.max(val.norm());
            let ps = d1(&|x| phi(x, nu), s, hs);
            let pnn = d2(&|y| phi(s, y), nu, hn);
            let r = Complex64::i() * ps + pnn / (2.0 * aa) - val * (0.5 * aa * dd * nu * nu);
            max_r = max_r.max(r.norm());
            sum2 += r.norm_sqr();
            count += 1;
        }
    }
    (max_r / max_phi, (sum2 / count as f64).sqrt() / max_phi)
}

/// Boundary-layer residual of the separatrix kernel along a beam track:
/// eight s-samples from `s_start` spaced `8 hs`, `nu` in `[-1, 1)` with step
/// `hn`. `p_scale` multiplies `p`, `p_bar` and `w` to probe a wrong beam.
pub fn separatrix_track_residual(track: &BeamTrack, s_start: f64, hs: f64, hn: f64, p_scale: f64) -> f64 {
    let psi = |s: f64, nu: f64| {
        let mut bp = track.beam_point(s);
        bp.p *= p_scale;
        bp.p_bar *= p_scale;
        bp.w *= p_scale;
        separatrix_wavefunction(nu, &bp, Complex64::from(1.0)).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    };
    let s: Vec<f64> = (0..8).map(|i| s_start + hs * 8.0 * i as f64).collect();
    let nu: Vec<f64> = (0..((2.0 / hn).round() as usize)).map(|i| -1.0 + hn * i as f64).collect();
    bl_residual(psi, |s| track.beam_point(s).a, |s| track.d_at(s), &s, &nu).0
}

/// Probability current in boundary-layer coordinates on a uniform `(s, nu)`
/// grid `psi[i][j]`, with the central-difference continuity residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Current {
    pub j_s: Vec<Vec<f64>>,
    pub j_nu: Vec<Vec<f64>>,
    /// `d_s j_s + d_nu j_nu` on interior points (zero on the border).
    pub residual: Vec<Vec<f64>>,
}

pub fn transverse_current(psi: &[Vec<Complex64>], a: &[f64], ds: f64, dnu: f64) -> Current {
    let ns = psi.len();
    let nn = psi[0].len();
    let mut j_s = vec![vec![0.0; nn]; ns];
    let mut j_nu = vec![vec![0.0; nn]; ns];
    for i in 0..ns {
        for j in 0..nn {
            j_s[i][j] = a[i] * psi[i][j].norm_sqr();
            let dpsi = if j == 0 {
                (psi[i][1] - psi[i][0]) / dnu
            } else if j == nn - 1 {
                (psi[i][nn - 1] - psi[i][nn - 2]) / dnu
            } else {
                (psi[i][j + 1] - psi[i][j - 1]) / (2.0 * dnu)
            };
            // (i/2)(psi conj(psi)' - conj(psi) psi') = Im(conj(psi) psi')
            j_nu[i][j] = (psi[i][j].conj() * dpsi).im;
        }
    }
    let mut residual = vec![vec![0.0; nn]; ns];
    for i in 1..ns - 1 {
        for j in 1..nn - 1 {
            residual[i][j] = (j_s[i + 1][j] - j_s[i - 1][j]) / (2.0 * ds) + (j_nu[i][j + 1] - j_nu[i][j - 1]) / (2.0 * dnu);
        }
    }
    Current { j_s, j_nu, residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScarDiagnostics {
    pub n_ph: f64,
    pub period: f64,
    pub lambda: f64,
    pub lambda_t: f64,
    pub t_ehr: f64,
    pub t_over_tehr: f64,
    pub period_below_ehrenfest: bool,
    /// Half-width `2 pi hbar / t_Ehr` of the Ehrenfest window.
    pub window_halfwidth: f64,
    /// Level spacing `2 pi hbar / T` of the eta = 0 solutions.
    pub level_spacing: f64,
    /// Transverse spacing estimate `ln(L_tr sqrt(<G - Gb> / (2 hbar)))` with unit constant.
    pub delta_eta: f64,
    /// Weak transverse condition `T <= N_ph^zeta / lambda_T` with zeta = 1.
    pub transverse_condition: bool,
}

/// Ehrenfest-time diagnostics with `L = L_tr = d`. The trajectory average of
/// `|G - Gb|` skips the focal regularization zones.
pub fn ehrenfest_diagnostics(
    orbit: &PeriodicOrbit,
    md: &MonodromyData,
    sol: &PeriodicSolutions,
    params: &SystemParams,
    focal_zone: f64,
) -> Result<ScarDiagnostics, SemiclassicalError> {
    if md.classification != Stability::Unstable {
        return Err(SemiclassicalError::WrongStability(md.classification, Stability::Unstable));
    }
    let hbar = params.hbar;
    let n_ph = params.d * (2.0 * params.mass * orbit.energy).sqrt() / hbar;
    if !(n_ph > 1.0) {
        return Err(SemiclassicalError::SmallPhaseSpace(n_ph));
    }
    let lambda = md.lambda.unwrap_or(0.0);
    let lambda_t = lambda / orbit.period;
    let t_ehr = n_ph.ln() / lambda_t;
    let (mut sum, mut cnt) = (0.0, 0usize);
    for (k, arc) in orbit.arcs.iter().enumerate() {
        let zeros: Vec<f64> = sol.focal.points.iter().filter(|f| f.arc == k).map(|f| f.s).collect();
        for (i, &s) in arc.s.iter().enumerate() {
            if zeros.iter().all(|z| (s - z).abs() > focal_zone) {
                sum += (sol.gamma[k][i] - sol.gamma_bar[k][i]).norm();
                cnt += 1;
            }
        }
    }
    let avg = sum / cnt.max(1) as f64;
    Ok(ScarDiagnostics {
        n_ph,
        period: orbit.period,
        lambda,
        lambda_t,
        t_ehr,
        t_over_tehr: orbit.period / t_ehr,
        period_below_ehrenfest: orbit.period < t_ehr,
        window_halfwidth: TAU * hbar / t_ehr,
        level_spacing: TAU * hbar / orbit.period,
        delta_eta: (params.d * (avg / (2.0 * hbar)).sqrt()).ln(),
        transverse_condition: orbit.period <= n_ph / lambda_t,
    })
}

/// Ehrenfest diagnostics from the raw inputs, for synthetic checks.
pub fn ehrenfest_time(n_ph: f64, lambda_t: f64) -> f64 {
    n_ph.ln() / lambda_t
}

/// Arc data extended past both walls on a uniform arclength grid, carrying
/// the Floquet pair and the phase bookkeeping of one beam.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamTrack {
    pub s0: f64,
    pub h: f64,
    /// Arclength of the physical arc (wall to wall).
    pub length: f64,
    pub r: Vec<Vec2>,
    pub tangent: Vec<Vec2>,
    pub normal: Vec<Vec2>,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub p_bar: Vec<f64>,
    /// `S0(s)` including the offset accumulated on earlier arcs.
    pub s0_phase: Vec<f64>,
    pub w: f64,
    /// Sign changes of `z zb` on the extended track.
    pub focal_s: Vec<f64>,
    /// Crossings accumulated on earlier arcs.
    pub crossings_before: i64,
}

impl BeamTrack {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn s_at(&self, i: usize) -> f64 {
        self.s0 + self.h * i as f64
    }

    fn interp(&self, v: &[f64], s: f64) -> f64 {
        lagrange4(v, self.s0, self.h, s)
    }

    pub fn position(&self, s: f64) -> Vec2 {
        lagrange4(&self.r, self.s0, self.h, s)
    }

    pub fn beam_point(&self, s: f64) -> BeamPoint {
        let c = |v: &[f64]| Complex64::from(self.interp(v, s));
        BeamPoint { a: self.interp(&self.a, s), z: c(&self.z), p: c(&self.p), z_bar: c(&self.z_bar), p_bar: c(&self.p_bar), w: Complex64::from(self.w) }
    }

    pub fn d_at(&self, s: f64) -> f64 {
        self.interp(&self.d, s)
    }

    pub fn crossings(&self, s: f64) -> i64 {
        let fwd = self.focal_s.iter().filter(|&&f| 0.0 <= f && f < s).count() as i64;
        let back = self.focal_s.iter().filter(|&&f| s <= f && f < 0.0).count() as i64;
        self.crossings_before + fwd - back
    }

    pub fn near_focal(&self, s: f64, zone: f64) -> bool {
        self.focal_s.iter().any(|f| (s - f).abs() < zone)
    }

    /// Nearest point: returns `(s, n)` with `n` the signed normal offset.
    pub fn project(&self, q: Vec2) -> (f64, f64) {
        let (mut best, mut k) = (f64::INFINITY, 0);
        for (i, r) in self.r.iter().enumerate() {
            let d2 = (q - *r).dot(q - *r);
            if d2 < best {
                best = d2;
                k = i;
            }
        }
        let f = |s: f64| -> Result<f64, RootError> {
            let t = lagrange4(&self.tangent, self.s0, self.h, s);
            Ok((q - self.position(s)).dot(t))
        };
        let lo = self.s_at(k.saturating_sub(1));
        let hi = self.s_at((k + 1).min(self.len() - 1));
        let s = match (f(lo), f(hi)) {
            (Ok(a), Ok(b)) if a * b <= 0.0 && a != b => brent::<RootError, _>(f, lo, hi, 1e-13, 100).unwrap_or(self.s_at(k)),
            _ => self.s_at(k),
        };
        let nrm = lagrange4(&self.normal, self.s0, self.h, s);
        (s, (q - self.position(s)).dot(nrm))
    }
}

/// Builds the two beam tracks of the bell orbit extended by `ext` past each wall.
pub fn beam_tracks(
    orbit: &PeriodicOrbit,
    sol: &PeriodicSolutions,
    params: &SystemParams,
    ext: f64,
) -> Result<Vec<BeamTrack>, SemiclassicalError> {
    let pot = params.confinement();
    let eb = params.charge * params.b;
    let mut out = Vec::with_capacity(orbit.arcs.len());
    let mut s0_offset = 0.0;
    let mut crossings_before = 0i64;
    for (k, arc) in orbit.arcs.iter().enumerate() {
        let h = arc.s[1] - arc.s[0];
        let len = arc.length();
        let n_ext = (ext / h).ceil() as usize;
        let n = arc.s.len() + 2 * n_ext;
        let s_from = -(n_ext as f64) * h;
        let s_to = s_from + (n - 1) as f64 * h;
        let (s_grid, samples) = trace_arclength(params, arc.start(), s_from, s_to, n, Tolerance::default())?;
        let zb0 = [sol.z_bar[k].z[0], sol.z_bar[k].p[0]];
        let z0 = [sol.z[k].z[0], sol.z[k].p[0]];
        let mut tr = BeamTrack {
            s0: s_grid[0],
            h,
            length: len,
            r: Vec::with_capacity(n),
            tangent: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            a: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            p: Vec::with_capacity(n),
            z_bar: Vec::with_capacity(n),
            p_bar: Vec::with_capacity(n),
            s0_phase: Vec::with_capacity(n),
            w: sol.wronskian.re,
            focal_s: Vec::new(),
            crossings_before,
        };
        for smp in &samples {
            let st = smp.state;
            let (r, v) = (st.pos(), st.vel());
            let (a, d) = local_d(params, &pot, r, v);
            let et = v.unit();
            let f = smp.fundamental;
            let apply = |x: [Complex64; 2]| (f[0][0] * x[0].re + f[0][1] * x[1].re, f[1][0] * x[0].re + f[1][1] * x[1].re);
            let (z, p) = apply(z0);
            let (zb, pb) = apply(zb0);
            tr.r.push(r);
            tr.tangent.push(et);
            tr.normal.push(et.rot90());
            tr.a.push(a);
            tr.d.push(d);
            tr.z.push(z);
            tr.p.push(p);
            tr.z_bar.push(zb);
            tr.p_bar.push(pb);
            tr.s0_phase.push(s0_offset + smp.action + eb * smp.swept_area);
        }
        // Sign changes of z zb, refined with cubic Hermite data.
        for i in 0..n - 1 {
            let f0 = tr.z[i] * tr.z_bar[i];
            let f1 = tr.z[i + 1] * tr.z_bar[i + 1];
            if f0 * f1 >= 0.0 {
                continue;
            }
            let df = |j: usize| (tr.p[j] * tr.z_bar[j] + tr.z[j] * tr.p_bar[j]) / tr.a[j];
            let (d0, d1) = (df(i), df(i + 1));
            let t = brent::<RootError, _>(|t| Ok(hermite_cubic(f0, d0, f1, d1, h, t)), 0.0, h, 1e-14 * h, 100)?;
            tr.focal_s.push(tr.s_at(i) + t);
        }
        let on_arc = tr.focal_s.iter().filter(|&&f| 0.0 <= f && f < len).count() as i64;
        crossings_before += on_arc;
        s0_offset = tr.s0_phase[n_ext + arc.s.len() - 1];
        out.push(tr);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldOptions {
    /// Transverse half-width of the layer as a fraction of `d`.
    pub layer_fraction: f64,
    /// Fraction of the layer over which the cosine taper acts.
    pub taper_fraction: f64,
    /// Half-width of the masked zone around focal points, as a fraction of the orbit length.
    pub focal_zone_fraction: f64,
    /// Phase factor between the two arcs.
    pub arc_ratio: f64,
    pub branch: FocalBranch,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { layer_fraction: 0.15, taper_fraction: 0.1, focal_zone_fraction: 0.005, arc_ratio: -1.0, branch: FocalBranch::Continued }
    }
}

/// Separatrix scar field of a quantized bell orbit, evaluated pointwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScarField {
    pub tracks: Vec<BeamTrack>,
    pub params: SystemParams,
    pub options: FieldOptions,
    pub n_max: f64,
    pub focal_zone: f64,
    /// Arclength over which beams hand over at the walls.
    pub blend: f64,
}

/// Smooth step from 0 at `u = -1` to 1 at `u = 1`; `step(u) + step(-u) = 1`.
fn blend_step(u: f64) -> f64 {
    if u <= -1.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 + (0.5 * PI * u).sin())
    }
}

impl ScarField {
    pub fn new(orbit: &PeriodicOrbit, sol: &PeriodicSolutions, params: &SystemParams, options: FieldOptions) -> Result<Self, SemiclassicalError> {
        let n_max = options.layer_fraction * params.d;
        let blend = n_max;
        let tracks = beam_tracks(orbit, sol, params, blend + n_max)?;
        Ok(ScarField { tracks, params: *params, options, n_max, focal_zone: options.focal_zone_fraction * orbit.length, blend })
    }

    fn taper(&self, n: f64) -> f64 {
        let x = n.abs() / self.n_max;
        let t0 = 1.0 - self.options.taper_fraction;
        if x >= 1.0 {
            0.0
        } else if x <= t0 {
            1.0
        } else {
            0.5 * (1.0 + (PI * (x - t0) / self.options.taper_fraction).cos())
        }
    }

    /// Contribution of one beam, without wall images.
    pub fn beam(&self, k: usize, q: Vec2) -> Result<Complex64, SemiclassicalError> {
        let tr = &self.tracks[k];
        let (s, n) = tr.project(q);
        let weight = blend_step(s / self.blend) * blend_step((tr.length - s) / self.blend);
        let taper = self.taper(n);
        if weight == 0.0 || taper == 0.0 || tr.near_focal(s, self.focal_zone) {
            return Ok(Complex64::from(0.0));
        }
        let hbar = self.params.hbar;
        let bp = tr.beam_point(s);
        let zz = (bp.z * bp.z_bar).re;
        let branch = self.options.branch.phase(zz, tr.crossings(s));
        let nu = n / hbar.sqrt();
        let env = separatrix_wavefunction(nu, &bp, branch)?;
        // Symmetric gauge about the strip centre.
        let r0 = tr.position(s);
        let en = lagrange4(&tr.normal, tr.s0, tr.h, s);
        let half_b = 0.5 * self.params.b;
        let avec = Vec2::new(-half_b * r0.y, half_b * (r0.x - 0.5 * self.params.d));
        let s1 = self.params.charge * avec.dot(en);
        let s0 = lagrange4(&tr.s0_phase, tr.s0, tr.h, s);
        let phase = Complex64::from_polar(1.0, (s0 + s1 * n) / hbar);
        let ratio = if k == 0 { 1.0 } else { self.options.arc_ratio.powi(k as i32) };
        Ok(phase * env * (weight * taper * ratio))
    }

    fn unimaged(&self, q: Vec2) -> Result<Complex64, SemiclassicalError> {
        let mut acc = Complex64::from(0.0);
        for k in 0..self.tracks.len() {
            acc += self.beam(k, q)?;
        }
        Ok(acc)
    }

    /// `F(x, y) - F(-x, y) - F(2d - x, y)`, unnormalized.
    pub fn value(&self, q: Vec2) -> Result<Complex64, SemiclassicalError> {
        let d = self.params.d;
        Ok(self.unimaged(q)? - self.unimaged(Vec2::new(-q.x, q.y))? - self.unimaged(Vec2::new(2.0 * d - q.x, q.y))?)
    }
}

/// Field on a rectangular grid, normalized to `max |Psi| = 1`. Rows follow `ys`.
pub fn assemble_field(field: &ScarField, xs: &[f64], ys: &[f64]) -> Result<Vec<Vec<Complex64>>, SemiclassicalError> {
    use rayon::prelude::*;
    let d = field.params.d;
    let mut grid: Vec<Vec<Complex64>> = ys
        .par_iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| if (0.0..=d).contains(&x) { field.value(Vec2::new(x, y)) } else { Ok(Complex64::from(0.0)) })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let max = grid.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if max > 0.0 {
        grid.iter_mut().flatten().for_each(|v| *v /= max);
    }
    Ok(grid)
}

/// A quantized separatrix state with its orbit data and field evaluator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblState {
    pub level: QuantizedLevel,
    pub analysis: OrbitAnalysis,
    pub nu_max: f64,
    pub field: ScarField,
}

impl AblState {
    pub fn build(level: QuantizedLevel, params: &SystemParams, search: &OrbitSearch, options: FieldOptions) -> Result<Self, SemiclassicalError> {
        let analysis = analyze_orbit(level.energy, params, search)?;
        let field = ScarField::new(&analysis.orbit, &analysis.solutions, params, options)?;
        Ok(AblState { level, nu_max: field.n_max / params.hbar.sqrt(), analysis, field })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{build_arc, PhaseState};
    use crate::variation::FocalCensus;

    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    struct Linear {
        c: f64,
        alpha: usize,
        phi: Option<f64>,
    }

    impl OrbitFamily for Linear {
        fn point(&self, energy: f64) -> Result<FamilyPoint, SemiclassicalError> {
            let alpha = if self.alpha == usize::MAX { (energy > 5.0) as usize } else { self.alpha };
            Ok(FamilyPoint { energy, action: self.c * energy, period: self.c, alpha, lambda: Some(1.0), phi: self.phi })
        }
    }

    fn empty_census() -> FocalCensus {
        FocalCensus { points: Vec::new(), alpha: 0 }
    }

    #[test]
    fn horizontal_orbit_action() {
        let p = SystemParams { b: 0.0, ..Default::default() };
        let e = 50.0;
        let search = OrbitSearch { angle_lo: -0.1, angle_hi: 0.1, ..Default::default() };
        let o = find_bell_orbit(e, &p, &search).unwrap();
        assert!(o.launch_angle.abs() < 1e-10);
        let ad = action_and_flux(&o, &p, &empty_census()).unwrap();
        assert!((ad.loop_action - 2.0 * p.d * (2.0 * e).sqrt()).abs() < 1e-9);
        assert_eq!(ad.flux, 0.0);
    }

    #[test]
    fn circle_flux() {
        let p = SystemParams { omega0: 0.0, d: 100.0, ..Default::default() };
        let st = PhaseState { x: 50.0, y: 0.0, vx: 0.0, vy: 2.0, t: 0.0 };
        let e = st.energy(&p);
        let (s, smp) = trace_arclength(&p, st, 0.0, 4.0 * PI, 401, Tolerance::default()).unwrap();
        let arc = build_arc(s, smp, &p, e).unwrap();
        let area = arc.samples.last().unwrap().swept_area;
        let orbit = PeriodicOrbit {
            energy: e,
            launch_angle: 0.0,
            period: 2.0 * PI,
            length: 4.0 * PI,
            signed_area: area,
            closure_error: 0.0,
            reflections: Vec::new(),
            arcs: vec![arc],
        };
        let ad = action_and_flux(&orbit, &p, &empty_census()).unwrap();
        assert!((ad.flux.abs() - 4.0 * PI).abs() < 1e-9);
        // Clockwise Larmor motion encloses negative area.
        assert!(ad.flux < 0.0);
        assert!((ad.loop_action - 8.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn open_orbit_is_rejected() {
        let p = SystemParams::default();
        let mut o = find_bell_orbit(92.5, &p, &OrbitSearch::default()).unwrap();
        o.arcs.truncate(1);
        assert_eq!(action_and_flux(&o, &p, &empty_census()), Err(SemiclassicalError::OpenOrbit));
    }

    #[test]
    fn benchmark_action_is_resolution_independent() {
        let p = SystemParams::default();
        let coarse = analyze_orbit(92.5, &p, &OrbitSearch::default()).unwrap();
        let fine = analyze_orbit(92.5, &p, &OrbitSearch { samples_per_arc: 4800, ..Default::default() }).unwrap();
        assert!((coarse.action.total() / fine.action.total() - 1.0).abs() < 1e-8);
        assert_eq!(coarse.action.alpha, 8);
        assert!(coarse.action.flux > 0.0 && coarse.action.loop_action > 0.0);
    }

    #[test]
    fn s0_derivative_matches_gauge_formula() {
        let p = SystemParams::default();
        let an = analyze_orbit(92.5, &p, &OrbitSearch::default()).unwrap();
        let tracks = beam_tracks(&an.orbit, &an.solutions, &p, 1.0).unwrap();
        let tr = &tracks[1];
        for i in (10..tr.len() - 10).step_by(211) {
            let ph = &tr.s0_phase;
            let fd = (ph[i - 2] - ph[i + 2] + 8.0 * (ph[i + 1] - ph[i - 1])) / (12.0 * tr.h);
            let r = tr.r[i];
            let avec = Vec2::new(-0.5 * r.y, 0.5 * (r.x - 0.5 * p.d));
            let exact = tr.a[i] + avec.dot(tr.tangent[i]);
            assert!((fd - exact).abs() < 1e-8 * exact.abs().max(1.0), "{i}: {fd} {exact}");
        }
    }

    #[test]
    fn linear_family_levels() {
        let fam = Linear { c: 3.0, alpha: 8, phi: None };
        let lv = quantize_unstable(5, 0.0, &fam, (0.0, 30.0), 1.0).unwrap();
        assert!((lv.energy - (TAU * 5.0 + 4.0 * PI) / 3.0).abs() < 1e-11);
        assert!(lv.residual.abs() < 1e-9);
    }

    #[test]
    fn stable_linear_family_levels() {
        let phi = 0.7;
        let fam = Linear { c: 2.0, alpha: 0, phi: Some(phi) };
        let mut last = 0.0;
        for m in 0..4 {
            let lv = quantize_stable(3, m, &fam, (0.0, 30.0), 1.0).unwrap();
            assert!((lv.energy - (TAU * 3.0 + (m as f64 + 0.5) * phi) / 2.0).abs() < 1e-11);
            assert!(lv.energy > last);
            last = lv.energy;
        }
    }

    #[test]
    fn bracket_without_root_and_bifurcation() {
        let fam = Linear { c: 3.0, alpha: 8, phi: None };
        assert!(matches!(quantize_unstable(5, 0.0, &fam, (0.0, 1.0), 1.0), Err(SemiclassicalError::NoLevel { .. })));
        let jumpy = Linear { c: 3.0, alpha: usize::MAX, phi: None };
        assert!(matches!(quantize_unstable(2, 0.0, &jumpy, (0.0, 10.0), 1.0), Err(SemiclassicalError::Bifurcation { .. })));
    }

    #[test]
    fn ground_mode_is_a_gaussian_beam() {
        let bp = BeamPoint::constant(2.0, 0.3, 0.7);
        for nu in [-2.0, -0.5, 0.0, 0.4, 1.7] {
            let m = abl_mode(nu, c(0.0), &bp).unwrap();
            let g = (Complex64::i() * bp.gamma() * nu * nu / 2.0).exp() / (bp.a * bp.z).sqrt();
            assert!((m - g).norm() < 1e-12 * g.norm());
            assert!(bp.gamma().im > 0.0);
        }
    }

    #[test]
    fn integer_mode_matches_hermite_form() {
        let m = 3u32;
        for s in [0.1, 0.6, 1.1] {
            let bp = BeamPoint::constant(1.3, 0.5, s);
            let scale = Complex64::from(2.0).powf(-(m as f64) / 2.0) * bp.w.powf(-(m as f64) / 2.0);
            for k in 0..21 {
                let nu = -2.0 + 0.2 * k as f64;
                let a = abl_mode(nu, c(m as f64), &bp).unwrap();
                let h = hermite_mode(nu, m, &bp).unwrap() * scale;
                assert!((a - h).norm() <= 1e-8 * h.norm().max(1e-3), "s={s} nu={nu}: {a} {h}");
            }
        }
    }

    #[test]
    fn complex_index_asymptotics() {
        // Unstable constant data: G = a k, Gb = -a k, z zb = 1, w = 2 a k.
        let eta = 0.8;
        let bp = BeamPoint::constant(1.0, -1.0, 0.0);
        let g = bp.gamma().re;
        let psi = |nu: f64, xi: Complex64| abl_mode(nu, xi, &bp).unwrap();
        let (n1, n2) = (7.0, 9.5);
        for sign in [1.0, -1.0] {
            let xi = Complex64::new(-0.5, sign * eta);
            let (p1, p2) = (psi(n1, xi), psi(n2, xi));
            assert!(((p2.norm() / p1.norm()) / (n1 / n2).sqrt() - 1.0).abs() < 0.05);
            let dphase = (p2 / p1).arg() - 0.5 * g * (n2 * n2 - n1 * n1);
            let expect = sign * eta * (n2 / n1).ln();
            let diff = (dphase - expect).rem_euclid(TAU);
            assert!(diff.min(TAU - diff) < 0.05, "sign {sign}: {dphase} vs {expect}");
        }
    }

    #[test]
    fn separatrix_is_the_even_part_of_the_half_index_mode() {
        let bp = BeamPoint::constant(1.0, -1.0, 0.3);
        let xi = c(-0.5);
        let mut ratio = None;
        for k in 1..30 {
            let nu = 0.1 * k as f64;
            let even = abl_mode(nu, xi, &bp).unwrap() + abl_mode(-nu, xi, &bp).unwrap();
            let sep = separatrix_wavefunction(nu, &bp, c(1.0)).unwrap();
            let r = even / sep;
            let r0 = *ratio.get_or_insert(r);
            assert!((r / r0 - 1.0).norm() < 1e-8, "nu={nu}");
        }
    }

    #[test]
    fn separatrix_limits() {
        let bp = BeamPoint::constant(1.5, -0.4, 0.2);
        let one = c(1.0);
        let r = separatrix_wavefunction(1e-6, &bp, one).unwrap() / separatrix_wavefunction(2e-6, &bp, one).unwrap();
        assert!((r - 1.0).norm() < 1e-4);
        for nu in [0.3, 1.1, 4.0] {
            let (a, b) = (separatrix_wavefunction(nu, &bp, one).unwrap(), separatrix_wavefunction(-nu, &bp, one).unwrap());
            assert_eq!(a.norm(), b.norm());
        }
        // Envelope of |psi| sqrt(nu) for X > 20 against the Hankel amplitude.
        let zz = (bp.z * bp.z_bar).re;
        let w = bp.w.re;
        let env = (2.0 / PI).sqrt() * (4.0 / w).sqrt() / bp.a.sqrt();
        let nu0 = (80.0 * zz / w).sqrt();
        let peak = (0..2000)
            .map(|k| nu0 * (1.0 + 0.3 * k as f64 / 2000.0))
            .map(|nu| separatrix_wavefunction(nu, &bp, one).unwrap().norm() * nu.sqrt())
            .fold(0.0, f64::max);
        assert!((peak / env - 1.0).abs() < 0.05, "{peak} {env}");
    }

    #[test]
    fn focal_branch_phases() {
        assert_eq!(FocalBranch::Continued.phase(-1.0, 0), c(1.0));
        assert!((FocalBranch::Continued.phase(1.0, 4) + 1.0).norm() < 1e-15);
        assert!((FocalBranch::Continued.phase(1.0, 8) - 1.0).norm() < 1e-15);
        let jump = FocalBranch::Symmetric.phase(-1.0, 0) / FocalBranch::Symmetric.phase(1.0, 0);
        assert!((jump - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
    }

    fn gaussian_residual(scale: f64, hs: f64, hn: f64) -> f64 {
        let (a, d) = (1.7, 0.6);
        let psi = |s: f64, nu: f64| {
            let mut bp = BeamPoint::constant(a, d, s);
            bp.p *= scale;
            bp.p_bar *= scale;
            bp.w *= scale;
            abl_mode(nu, c(0.0), &bp).unwrap()
        };
        let s: Vec<f64> = (0..20).map(|i| 0.5 + hs * i as f64).collect();
        let nu: Vec<f64> = (0..((4.0 / hn) as usize)).map(|i| -2.0 + hn * i as f64).collect();
        bl_residual(psi, |_| a, |_| d, &s, &nu).0
    }

    #[test]
    fn residual_of_exact_and_perturbed_beams() {
        let exact = gaussian_residual(1.0, 0.005, 0.005);
        assert!(exact < 1e-8, "{exact}");
        let pert = gaussian_residual(1.01, 0.005, 0.005);
        assert!(pert > 100.0 * exact, "{exact} {pert}");
    }

    fn benchmark_field() -> (SystemParams, ScarField, OrbitAnalysis) {
        let p = SystemParams::default();
        let fam = BellFamily { params: p, search: OrbitSearch::default() };
        let lv = quantize_unstable(66, 0.0, &fam, (92.0, 93.0), p.hbar).unwrap();
        let an = analyze_orbit(lv.energy, &p, &OrbitSearch::default()).unwrap();
        let f = ScarField::new(&an.orbit, &an.solutions, &p, FieldOptions::default()).unwrap();
        (p, f, an)
    }

    fn separatrix_residual(f: &ScarField, hs: f64, hn: f64, p_scale: f64) -> f64 {
        separatrix_track_residual(&f.tracks[0], 1.0, hs, hn, p_scale)
    }

    #[test]
    fn separatrix_solves_the_boundary_layer_equation() {
        let (_, f, _) = benchmark_field();
        assert!(f.tracks[0].focal_s.iter().all(|&z| z > 3.0));
        let coarse = separatrix_residual(&f, 0.04, 0.1, 1.0);
        let fine = separatrix_residual(&f, 0.02, 0.05, 1.0);
        assert!(fine < 1e-4, "{fine}");
        assert!(coarse / fine >= 8.0, "{coarse} {fine}");
        let (exact, perturbed) = (separatrix_residual(&f, 0.005, 0.0125, 1.0), separatrix_residual(&f, 0.005, 0.0125, 1.01));
        assert!(perturbed > 100.0 * exact, "{exact} {perturbed}");
    }

    #[test]
    fn current_of_simple_fields() {
        let ns = 5;
        let real: Vec<Vec<Complex64>> = (0..ns).map(|i| (0..9).map(|j| c((i + j) as f64 * 0.1)).collect()).collect();
        let cur = transverse_current(&real, &[1.0; 5], 0.1, 0.1);
        assert!(cur.j_nu.iter().flatten().all(|&v| v == 0.0));
        let k = 1.3;
        let dn = 0.01;
        let wave: Vec<Vec<Complex64>> = (0..ns).map(|_| (0..9).map(|j| Complex64::from_polar(1.0, k * dn * j as f64)).collect()).collect();
        let cur = transverse_current(&wave, &[1.0; 5], 0.1, dn);
        assert!(cur.j_nu[2][1..8].iter().all(|&v| (v - k).abs() < 1e-4));
    }

    #[test]
    fn separatrix_current_is_conserved_at_second_order() {
        let (_, f, _) = benchmark_field();
        let tr = &f.tracks[0];
        let resid = |h: f64| {
            let ss: Vec<f64> = (0..9).map(|i| 1.5 + h * i as f64).collect();
            let nus: Vec<f64> = (0..9).map(|j| 0.3 + h * j as f64).collect();
            let psi: Vec<Vec<Complex64>> =
                ss.iter().map(|&s| nus.iter().map(|&nu| separatrix_wavefunction(nu, &tr.beam_point(s), c(1.0)).unwrap()).collect()).collect();
            let a: Vec<f64> = ss.iter().map(|&s| tr.beam_point(s).a).collect();
            let cur = transverse_current(&psi, &a, h, h);
            let js = cur.j_s.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
            cur.residual[4][4].abs() / js
        };
        let (r1, r2) = (resid(0.04), resid(0.02));
        assert!(r2 < 1e-3, "{r2}");
        assert!(r1 / r2 > 3.0, "{r1} {r2}");
    }

    #[test]
    fn ehrenfest_plug_in() {
        assert!((ehrenfest_time(3f64.exp(), 1.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn benchmark_diagnostics() {
        let (p, f, an) = benchmark_field();
        let dg = ehrenfest_diagnostics(&an.orbit, &an.monodromy, &an.solutions, &p, f.focal_zone).unwrap();
        assert!(dg.period_below_ehrenfest);
        assert!(dg.window_halfwidth < dg.level_spacing);
        assert!(dg.delta_eta.is_finite() && dg.transverse_condition);
        assert!((dg.n_ph - 10.0 * (2.0 * an.orbit.energy).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn field_parity_and_walls() {
        let (p, f, _) = benchmark_field();
        let mut max = 0.0f64;
        let mut worst = 0.0f64;
        for i in 0..25 {
            for j in 0..25 {
                // Grid kept off x = d/2, where the tube coordinates fold at the apex.
                let q = Vec2::new(0.23 + 9.6 * i as f64 / 24.0, -7.0 + 14.0 * j as f64 / 24.0);
                let a = f.value(q).unwrap();
                let b = f.value(Vec2::new(p.d - q.x, -q.y)).unwrap();
                max = max.max(a.norm());
                worst = worst.max((a - b).norm());
            }
        }
        // n = 66 on the continued branch is inversion symmetric.
        assert!(max > 0.0 && worst < 1e-6 * max, "{worst} {max}");
        for k in 0..50 {
            let y = -7.0 + 14.0 * k as f64 / 49.0;
            assert!(f.value(Vec2::new(0.0, y)).unwrap().norm() < 1e-12 * max);
            assert!(f.value(Vec2::new(p.d, y)).unwrap().norm() < 1e-12 * max);
        }
    }

    #[test]
    fn assembled_grid_is_normalized() {
        let (_, f, _) = benchmark_field();
        let xs: Vec<f64> = (0..21).map(|i| 0.5 * i as f64).collect();
        let ys: Vec<f64> = (0..15).map(|j| -7.0 + j as f64).collect();
        let g = assemble_field(&f, &xs, &ys).unwrap();
        let max = g.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }
}
