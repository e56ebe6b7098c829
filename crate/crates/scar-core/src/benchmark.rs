//! The strip benchmark end to end: semiclassical scar levels, the exact
//! spectrum, scar identification in the exact states and the acceptance checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    husimi_on_circle, inversion_parity, line_profile, packet_distance, scar_score, AnalysisError, EnergyCircle, HusimiMap,
    HusimiPeak, ParityCheck, Profile, ScarScore, WallFunction,
};
use crate::classical::OrbitSearch;
use crate::exactqm::{spectrum_scan, ExactConfig, ExactError, ExactLevel, ExactSolver, ExactSpectrum, ExactState, SpectrumScan};
use crate::model::SystemParams;
use crate::numerics::{pearson, Vec2};
use crate::semiclassics::{
    abl_mode, analyze_orbit, bracket_unstable, ehrenfest_diagnostics, hermite_mode, quantize_unstable, separatrix_track_residual,
    BeamPoint, BellFamily, FieldOptions, OrbitAnalysis, QuantizedLevel, ScarDiagnostics, ScarField, SemiclassicalError,
};
use crate::specfun::{bessel_j, hermite, parabolic_cylinder_d};

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Semiclassical(#[from] SemiclassicalError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HusimiConfig {
    /// Coherent-state width in units of the magnetic length.
    pub sigma: f64,
    pub y_points: usize,
    pub p_points: usize,
    /// Sampling step of the wall derivative.
    pub wall_step: f64,
    /// Extra y-range sampled beyond the energy circle.
    pub wall_margin: f64,
}

impl Default for HusimiConfig {
    fn default() -> Self {
        Self { sigma: 1.0, y_points: 57, p_points: 113, wall_step: 0.025, wall_margin: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// Boxcar window as a fraction of `d`.
    pub window_fraction: f64,
    /// Compared range `x <= validity_fraction d`.
    pub validity_fraction: f64,
    /// Sampling step as a fraction of `d`.
    pub step_fraction: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { window_fraction: 0.05, validity_fraction: 0.15, step_fraction: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub quantum_numbers: Vec<i64>,
    pub eta: f64,
    /// Two energies used to extrapolate the initial bracket of each level.
    pub energy_guess: [f64; 2],
    /// Husimi ratio (orbit point over disc median) that flags a scar.
    pub scar_threshold: f64,
    pub scan_step: f64,
    pub field: FieldOptions,
    pub exact: ExactConfig,
    pub husimi: HusimiConfig,
    pub profile: ProfileConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            quantum_numbers: vec![66, 67, 68, 69],
            eta: 0.0,
            energy_guess: [85.0, 105.0],
            scar_threshold: 3.0,
            scan_step: 0.02,
            field: FieldOptions::default(),
            exact: ExactConfig::default(),
            husimi: HusimiConfig::default(),
            profile: ProfileConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<(), BenchmarkError> {
        let mut ns = self.quantum_numbers.clone();
        ns.sort_unstable();
        ns.dedup();
        if ns.is_empty() || ns.len() != self.quantum_numbers.len() {
            return Err(BenchmarkError::Config("quantum_numbers must be non-empty and distinct".into()));
        }
        if ns.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(BenchmarkError::Config("quantum_numbers must be consecutive".into()));
        }
        if !(self.husimi.sigma > 0.0 && self.scan_step > 0.0 && self.profile.window_fraction > 0.0) {
            return Err(BenchmarkError::Config("sigma, scan_step and window_fraction must be positive".into()));
        }
        Ok(())
    }

    /// Requested levels plus one neighbour on each side.
    pub fn extended_numbers(&self) -> Vec<i64> {
        let lo = *self.quantum_numbers.iter().min().unwrap_or(&0);
        let hi = *self.quantum_numbers.iter().max().unwrap_or(&0);
        (lo - 1..=hi + 1).collect()
    }
}

/// A quantized bell-orbit level with its orbit data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemiclassicalLevel {
    pub level: QuantizedLevel,
    pub analysis: OrbitAnalysis,
    pub diagnostics: ScarDiagnostics,
}

impl SemiclassicalLevel {
    pub fn n(&self) -> i64 {
        self.level.n
    }

    pub fn energy(&self) -> f64 {
        self.level.energy
    }

    pub fn stretching(&self) -> f64 {
        let (re, im) = self.analysis.monodromy.eigenvalues[0];
        re.hypot(im)
    }

    pub fn field(&self, params: &SystemParams, options: FieldOptions) -> Result<ScarField, SemiclassicalError> {
        ScarField::new(&self.analysis.orbit, &self.analysis.solutions, params, options)
    }
}

pub fn quantize_levels(
    params: &SystemParams,
    search: &OrbitSearch,
    ns: &[i64],
    eta: f64,
    guess: [f64; 2],
    field: &FieldOptions,
) -> Result<Vec<SemiclassicalLevel>, BenchmarkError> {
    let family = BellFamily { params: *params, search: *search };
    ns.par_iter()
        .map(|&n| {
            let br = bracket_unstable(n, eta, &family, guess[0], guess[1], params.hbar)?;
            let level = quantize_unstable(n, eta, &family, br, params.hbar)?;
            let analysis = analyze_orbit(level.energy, params, search)?;
            let zone = field.focal_zone_fraction * analysis.orbit.length;
            let diagnostics = ehrenfest_diagnostics(&analysis.orbit, &analysis.monodromy, &analysis.solutions, params, zone)?;
            Ok(SemiclassicalLevel { level, analysis, diagnostics })
        })
        .collect()
}

/// Energy range whose exact eigenvectors are kept: one spacing beyond the
/// outer levels.
pub fn exact_window(levels: &[SemiclassicalLevel]) -> (f64, f64) {
    let first = levels.first().map_or(0.0, |l| l.energy());
    let last = levels.last().map_or(0.0, |l| l.energy());
    let spacing = if levels.len() > 1 { (last - first) / (levels.len() - 1) as f64 } else { 1.0 };
    (first - 0.5 * spacing, last + 0.5 * spacing)
}

pub fn exact_spectrum(params: &SystemParams, config: &ExactConfig, window: (f64, f64)) -> Result<ExactSpectrum, ExactError> {
    ExactSolver::new(params, *config)?.solve(Some(window))
}

pub fn scan(spectrum: &ExactSpectrum, window: (f64, f64), step: f64) -> Result<SpectrumScan, ExactError> {
    spectrum_scan(spectrum, window.0, window.1, step)
}

/// Birkhoff momentum of the bell orbit at `energy`, interpolated between levels.
pub fn birkhoff_at(levels: &[SemiclassicalLevel], params: &SystemParams, energy: f64) -> (f64, f64) {
    let pts: Vec<(f64, (f64, f64))> = levels.iter().map(|l| (l.energy(), l.analysis.orbit.birkhoff_point(params))).collect();
    if pts.len() == 1 {
        return pts[0].1;
    }
    let i = pts.partition_point(|p| p.0 < energy).clamp(1, pts.len() - 1);
    let (a, b) = (pts[i - 1], pts[i]);
    let t = (energy - a.0) / (b.0 - a.0);
    (a.1 .0 + t * (b.1 .0 - a.1 .0), a.1 .1 + t * (b.1 .1 - a.1 .1))
}

pub fn wall_function(state: &ExactState, params: &SystemParams, cfg: &HusimiConfig) -> WallFunction {
    let circle = EnergyCircle::new(state.energy, params);
    let ys_max = circle.y_radius() + cfg.wall_margin;
    let n = (2.0 * ys_max / cfg.wall_step).ceil() as usize + 1;
    let ys: Vec<f64> = (0..n).map(|i| -ys_max + 2.0 * ys_max * i as f64 / (n - 1) as f64).collect();
    WallFunction { y0: ys[0], step: ys[1] - ys[0], values: state.wall_derivatives(&ys) }
}

pub fn state_husimi(state: &ExactState, params: &SystemParams, cfg: &HusimiConfig) -> Result<(WallFunction, HusimiMap), AnalysisError> {
    let f = wall_function(state, params, cfg);
    let sigma = cfg.sigma * params.magnetic_length();
    let map = husimi_on_circle(&f, EnergyCircle::new(state.energy, params), cfg.y_points, cfg.p_points, sigma, params.hbar)?;
    Ok((f, map))
}

/// Husimi scar score of one exact state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateScore {
    pub energy: f64,
    pub parity: i8,
    pub birkhoff: (f64, f64),
    pub score: ScarScore,
    pub peak: HusimiPeak,
    /// Distance from the Husimi maximum to the Birkhoff point, in packet widths.
    pub peak_distance: f64,
}

impl StateScore {
    /// Orbit value above threshold with the Husimi maximum on the orbit.
    pub fn is_scar(&self, threshold: f64) -> bool {
        self.score.ratio >= threshold && self.peak_distance <= 1.0
    }
}

pub fn score_states(
    spectrum: &ExactSpectrum,
    levels: &[SemiclassicalLevel],
    params: &SystemParams,
    cfg: &HusimiConfig,
) -> Result<Vec<StateScore>, AnalysisError> {
    spectrum
        .states
        .par_iter()
        .map(|st| {
            let (f, map) = state_husimi(st, params, cfg)?;
            let birkhoff = birkhoff_at(levels, params, st.energy);
            let peak = map.peak();
            let peak_distance = packet_distance((peak.y, peak.p), birkhoff, cfg.sigma * params.magnetic_length(), params.hbar);
            let score = scar_score(&f, &map, birkhoff, params.hbar);
            Ok(StateScore { energy: st.energy, parity: st.parity, birkhoff, score, peak, peak_distance })
        })
        .collect()
}

/// Exact states in the scar window of one semiclassical level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScarMatch {
    pub n: i64,
    pub e_abl: f64,
    pub window: (f64, f64),
    pub states_in_window: usize,
    /// Energies of states passing the scar test.
    pub passing: Vec<f64>,
    /// Highest-ratio state in the window.
    pub best: Option<StateScore>,
}

/// Requested levels plus the next one, whose exact partner fixes the last spacing.
pub fn matched_numbers(ns: &[i64]) -> Vec<i64> {
    let mut out = ns.to_vec();
    if let Some(&last) = ns.iter().max() {
        out.push(last + 1);
    }
    out
}

/// Windows `E_n +- dE/2` with `dE` the local semiclassical spacing.
pub fn match_scars(levels: &[SemiclassicalLevel], ns: &[i64], scores: &[StateScore], threshold: f64) -> Vec<ScarMatch> {
    let energy_of = |n: i64| levels.iter().find(|l| l.n() == n).map(|l| l.energy());
    ns.iter()
        .filter_map(|&n| {
            let e = energy_of(n)?;
            let gaps: Vec<f64> = [energy_of(n + 1).map(|u| u - e), energy_of(n - 1).map(|l| e - l)].into_iter().flatten().collect();
            let spacing = gaps.iter().sum::<f64>() / gaps.len().max(1) as f64;
            let window = (e - 0.5 * spacing, e + 0.5 * spacing);
            let inside: Vec<&StateScore> = scores.iter().filter(|s| (window.0..window.1).contains(&s.energy)).collect();
            let passing = inside.iter().filter(|s| s.is_scar(threshold)).map(|s| s.energy).collect();
            let best = inside.iter().max_by(|a, b| a.score.ratio.total_cmp(&b.score.ratio)).map(|s| **s);
            Some(ScarMatch { n, e_abl: e, window, states_in_window: inside.len(), passing, best })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
}

impl CriterionResult {
    fn new(id: u8, title: &str) -> Self {
        CriterionResult { id, title: title.into(), passed: true, summary: String::new(), metrics: BTreeMap::new() }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn require(&mut self, ok: bool, note: impl AsRef<str>) {
        if !ok {
            self.passed = false;
            if !self.summary.is_empty() {
                self.summary.push_str("; ");
            }
            self.summary.push_str(note.as_ref());
        }
    }

    fn finish(mut self) -> Self {
        if self.passed && self.summary.is_empty() {
            self.summary = "all checks passed".into();
        }
        self
    }

    pub fn line(&self) -> String {
        format!("{} criterion {} ({}): {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title, self.summary)
    }
}

fn requested<'a>(levels: &'a [SemiclassicalLevel], ns: &[i64]) -> Vec<&'a SemiclassicalLevel> {
    levels.iter().filter(|l| ns.contains(&l.n())).collect()
}

pub const STRETCHING_TARGET: (f64, f64) = (4.6, 0.25);
pub const LYAPUNOV_TARGET: (f64, f64) = (1.53, 0.08);

pub fn check_stability(levels: &[SemiclassicalLevel], ns: &[i64]) -> CriterionResult {
    let mut c = CriterionResult::new(1, "stability");
    for l in requested(levels, ns) {
        let big = l.stretching();
        let lam = l.analysis.monodromy.lambda.unwrap_or(f64::NAN);
        c.metric(format!("Lambda_{}", l.n()), big);
        c.metric(format!("lambda_{}", l.n()), lam);
        c.require((big - STRETCHING_TARGET.0).abs() <= STRETCHING_TARGET.1, format!("n={}: Lambda={big:.4} outside 4.6+-0.25", l.n()));
        c.require((lam - LYAPUNOV_TARGET.0).abs() <= LYAPUNOV_TARGET.1, format!("n={}: lambda={lam:.4} outside 1.53+-0.08", l.n()));
    }
    c.finish()
}

pub fn check_focal_census(levels: &[SemiclassicalLevel], ns: &[i64], params: &SystemParams) -> CriterionResult {
    let mut c = CriterionResult::new(2, "focal census");
    let d = params.d;
    let targets: Vec<(Vec2, bool)> = [(-0.15, -0.5), (0.15, -0.5), (-0.15, 0.5), (0.15, 0.5)]
        .iter()
        .map(|&(x, y)| (Vec2::new((0.5 + x) * d, y * d), false))
        .chain([(-0.01, -0.65), (0.01, -0.65), (-0.01, 0.65), (0.01, 0.65)].iter().map(|&(x, y)| (Vec2::new((0.5 + x) * d, y * d), true)))
        .collect();
    for l in requested(levels, ns) {
        let pts: Vec<Vec2> = l.analysis.solutions.focal.points.iter().map(|p| p.position).collect();
        c.metric(format!("count_{}", l.n()), pts.len() as f64);
        c.require(pts.len() == 8, format!("n={}: {} focal points", l.n(), pts.len()));
        if pts.len() != 8 {
            continue;
        }
        // Greedy assignment of each target to its nearest unused focal point.
        let mut used = [false; 8];
        let mut worst = 0.0f64;
        let mut pair_members = Vec::new();
        for (t, is_pair) in &targets {
            let (k, dist) = pts
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, p)| (k, (*p - *t).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[k] = true;
            worst = worst.max(dist);
            if *is_pair {
                pair_members.push(pts[k]);
            }
        }
        c.metric(format!("worst_offset_over_d_{}", l.n()), worst / d);
        c.require(worst <= 0.05 * d, format!("n={}: focal point {:.3}d from its target", l.n(), worst / d));
        let sep = pair_members.chunks(2).map(|p| (p[0] - p[1]).norm()).fold(f64::INFINITY, f64::min);
        c.metric(format!("pair_separation_over_d_{}", l.n()), sep / d);
        c.require(sep > 1e-6 * d, format!("n={}: close pair not resolved", l.n()));
    }
    c.finish()
}

pub fn check_energies(matches: &[ScarMatch], ns: &[i64]) -> CriterionResult {
    let mut c = CriterionResult::new(3, "energy agreement");
    let exact = |n: i64| matches.iter().find(|m| m.n == n).and_then(|m| m.best.map(|b| b.energy));
    let mut spacings = Vec::new();
    for &n in ns {
        let (Some(e), Some(e1)) = (exact(n), exact(n + 1)) else {
            c.require(false, format!("n={n}: exact scar or its successor missing"));
            continue;
        };
        let abl = matches.iter().find(|m| m.n == n).map(|m| m.e_abl).unwrap_or(f64::NAN);
        let spacing = e1 - e;
        let rel = (abl - e).abs() / spacing;
        spacings.push(spacing);
        c.metric(format!("E_abl_{n}"), abl);
        c.metric(format!("E_exact_{n}"), e);
        c.metric(format!("error_over_spacing_{n}"), rel);
        c.require(rel < 0.05, format!("n={n}: |dE| = {rel:.3} of the spacing"));
    }
    if !spacings.is_empty() {
        let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let spread = spacings.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max) / mean;
        c.metric("spacing_spread", spread);
        c.require(spread < 0.1, format!("scar spacings differ by {:.1}%", 100.0 * spread));
    }
    c.finish()
}

pub fn check_single_scar(matches: &[ScarMatch], ns: &[i64]) -> CriterionResult {
    let mut c = CriterionResult::new(4, "single scar per window");
    for m in matches.iter().filter(|m| ns.contains(&m.n)) {
        c.metric(format!("passing_{}", m.n), m.passing.len() as f64);
        c.metric(format!("states_{}", m.n), m.states_in_window as f64);
        c.require(m.passing.len() == 1, format!("n={}: {} of {} states pass", m.n, m.passing.len(), m.states_in_window));
    }
    c.finish()
}

pub fn check_husimi(matches: &[ScarMatch], ns: &[i64]) -> CriterionResult {
    let mut c = CriterionResult::new(5, "Husimi localization");
    for m in matches.iter().filter(|m| ns.contains(&m.n)) {
        let Some(b) = m.best else {
            c.require(false, format!("n={}: no exact state", m.n));
            continue;
        };
        let dist = b.peak_distance;
        c.metric(format!("peak_distance_{}", m.n), dist);
        c.require(dist <= 1.0, format!("n={}: peak {dist:.2} widths from the orbit", m.n));
    }
    c.finish()
}

/// `|Psi(x, 0)|` profiles near the left wall, boxcar-averaged.
pub fn wall_profiles(
    field: &ScarField,
    state: &ExactState,
    params: &SystemParams,
    cfg: &ProfileConfig,
) -> Result<(Profile, Profile), BenchmarkError> {
    let d = params.d;
    let step = cfg.step_fraction * d;
    let n = (2.0 * cfg.validity_fraction / cfg.step_fraction).round() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| step * i as f64).collect();
    let window = cfg.window_fraction * d;
    let abl = line_profile(|x| field.value(Vec2::new(x, 0.0)).unwrap_or(Complex64::new(f64::NAN, 0.0)), &xs, window)?;
    let exact = line_profile(|x| state.value(x, 0.0), &xs, window)?;
    Ok((abl, exact))
}

pub fn profile_correlation(abl: &Profile, exact: &Profile, params: &SystemParams, cfg: &ProfileConfig) -> f64 {
    let keep = abl.xs.iter().filter(|&&x| x <= cfg.validity_fraction * params.d + 1e-12).count();
    pearson(&abl.averaged[..keep], &exact.averaged[..keep])
}

pub fn check_profile(corr: &[(i64, f64)], gate: i64) -> CriterionResult {
    let mut c = CriterionResult::new(6, "profile agreement");
    for &(n, r) in corr {
        c.metric(format!("correlation_{n}"), r);
    }
    match corr.iter().find(|(n, _)| *n == gate) {
        Some(&(_, r)) => c.require(r >= 0.9, format!("n={gate}: correlation {r:.3} < 0.9")),
        None => c.require(false, format!("n={gate}: profile missing")),
    }
    c.finish()
}

/// Sample points for parity checks, kept off the line `x = d/2`.
pub fn parity_points(params: &SystemParams) -> Vec<Vec2> {
    let d = params.d;
    (0..25).flat_map(|i| (0..25).map(move |j| Vec2::new((0.023 + 0.96 * i as f64 / 24.0) * d, (-0.7 + 1.4 * j as f64 / 24.0) * d))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityRecord {
    pub n: i64,
    pub abl: ParityCheck,
    pub exact: Option<ParityCheck>,
    pub exact_label: Option<i8>,
}

pub fn parity_record(n: i64, field: &ScarField, state: Option<&ExactState>, params: &SystemParams) -> ParityRecord {
    let pts = parity_points(params);
    let center = Vec2::new(0.5 * params.d, 0.0);
    let abl = inversion_parity(|q| field.value(q).unwrap_or(Complex64::new(f64::NAN, 0.0)), center, &pts);
    let exact = state.map(|s| inversion_parity(|q| s.value(q.x, q.y), center, &pts));
    ParityRecord { n, abl, exact, exact_label: state.map(|s| s.parity) }
}

/// Required parity: symmetric for odd n, antisymmetric for even n.
pub fn required_parity(n: i64) -> i8 {
    if n % 2 == 0 {
        -1
    } else {
        1
    }
}

pub fn check_parity(records: &[ParityRecord]) -> CriterionResult {
    let mut c = CriterionResult::new(7, "parity");
    for r in records {
        let want = required_parity(r.n);
        c.metric(format!("abl_parity_{}", r.n), r.abl.parity as f64);
        c.metric(format!("abl_residual_{}", r.n), r.abl.residual);
        c.require(r.abl.residual < 1e-2, format!("n={}: ABL parity residual {:.2e}", r.n, r.abl.residual));
        c.require(r.abl.parity == want, format!("n={}: ABL parity {:+} but rule needs {want:+}", r.n, r.abl.parity));
        match (r.exact, r.exact_label) {
            (Some(e), Some(label)) => {
                c.metric(format!("exact_correlation_{}", r.n), e.correlation);
                c.require(e.parity == label, format!("n={}: exact correlation sign disagrees with its block", r.n));
                c.require(e.parity == r.abl.parity, format!("n={}: exact and ABL parities differ", r.n));
                c.require(e.parity == want, format!("n={}: exact parity {:+} but rule needs {want:+}", r.n, e.parity));
            }
            _ => c.require(false, format!("n={}: exact state missing", r.n)),
        }
    }
    c.finish()
}

/// Property suites that need no reference numbers.
pub fn check_properties(level: &SemiclassicalLevel, field: &ScarField, params: &SystemParams) -> CriterionResult {
    let mut c = CriterionResult::new(8, "property suites");
    let sol = &level.analysis.solutions;

    let w0 = sol.wronskian;
    let wr = sol
        .z
        .iter()
        .zip(&sol.z_bar)
        .flat_map(|(a, b)| a.z.iter().zip(&a.p).zip(b.z.iter().zip(&b.p)).map(|((z, p), (zb, pb))| ((p * zb - pb * z) - w0).norm() / w0.norm()))
        .fold(0.0, f64::max);
    c.metric("wronskian_drift", wr);
    c.require(wr < 1e-9, format!("Wronskian drift {wr:.2e}"));

    let det = level.analysis.monodromy.matrix.det();
    c.metric("det_minus_one", (det - 1.0).abs());
    c.require((det - 1.0).abs() < 1e-8, format!("det M - 1 = {:.2e}", det - 1.0));

    let tr = &field.tracks[0];
    let coarse = separatrix_track_residual(tr, 1.0, 0.04, 0.1, 1.0);
    let fine = separatrix_track_residual(tr, 1.0, 0.02, 0.05, 1.0);
    c.metric("bl_residual_fine", fine);
    c.metric("bl_residual_ratio", coarse / fine);
    c.require(fine < 1e-4, format!("boundary-layer residual {fine:.2e}"));
    c.require(coarse / fine >= 8.0, format!("residual reduction {:.1} under halving", coarse / fine));

    let mut herm = 0.0f64;
    for m in 0..6u32 {
        let bp = BeamPoint::constant(1.3, 0.5, 0.6);
        let scale = Complex64::from(2.0).powf(-(m as f64) / 2.0) * bp.w.powf(-(m as f64) / 2.0);
        for k in 0..21 {
            let nu = -2.0 + 0.2 * k as f64;
            let a = abl_mode(nu, Complex64::from(m as f64), &bp);
            let h = hermite_mode(nu, m, &bp);
            herm = herm.max(match (a, h) {
                (Ok(a), Ok(h)) => (a - h * scale).norm() / (h * scale).norm().max(1e-3),
                _ => f64::INFINITY,
            });
        }
    }
    c.metric("hermite_mode_error", herm);
    c.require(herm < 1e-8, format!("abl_mode vs Hermite form {herm:.2e}"));

    let sf = specfun_identities();
    for (name, err, tol) in &sf {
        c.metric(*name, *err);
        c.require(err < tol, format!("{name} = {err:.2e}"));
    }

    let zero = zero_field_spectrum_error(params);
    c.metric("zero_field_spectrum_error", zero);
    c.require(zero < 1e-6, format!("zero-field spectrum error {zero:.2e}"));
    c.finish()
}

/// `(name, error, tolerance)` for the special-function identities.
pub fn specfun_identities() -> Vec<(&'static str, f64, f64)> {
    let zs = [Complex64::new(0.3, 0.2), Complex64::new(-1.1, 0.7), Complex64::new(2.5, -0.4), Complex64::new(4.0, 1.0)];
    let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm().max(1e-300);
    let mut closed = 0.0f64;
    let mut integer = 0.0f64;
    for &z in &zs {
        let g = (-z * z / 4.0).exp();
        closed = closed.max(parabolic_cylinder_d(Complex64::from(0.0), z).map_or(f64::INFINITY, |d| rel(d, g)));
        closed = closed.max(parabolic_cylinder_d(Complex64::from(1.0), z).map_or(f64::INFINITY, |d| rel(d, z * g)));
        for m in 0..=10usize {
            let h = crate::specfun::hermite_c(m, z / 2f64.sqrt()).unwrap_or(Complex64::new(f64::NAN, 0.0));
            let want = g * h * 2f64.powf(-(m as f64) / 2.0);
            integer = integer.max(parabolic_cylinder_d(Complex64::from(m as f64), z).map_or(f64::INFINITY, |d| rel(d, want)));
        }
    }
    let (xi, z) = (Complex64::new(-0.5, 0.7), Complex64::new(1.3, 0.4));
    let recurrence = match (parabolic_cylinder_d(xi + 1.0, z), parabolic_cylinder_d(xi, z), parabolic_cylinder_d(xi - 1.0, z)) {
        (Ok(a), Ok(b), Ok(c)) => (a - z * b + xi * c).norm(),
        _ => f64::INFINITY,
    };
    let mut wr = 0.0f64;
    let mut x = 0.5;
    while x <= 40.0 {
        let j = |nu: f64| bessel_j(nu, x).unwrap_or(f64::NAN);
        // J'_nu = (J_{nu-1} - J_{nu+1}) / 2
        let (dp, dm) = (0.5 * (j(-0.75) - j(1.25)), 0.5 * (j(-1.25) - j(0.75)));
        let w = j(0.25) * dm - dp * j(-0.25);
        wr = wr.max((w + 2.0 * (PI / 4.0).sin() / (PI * x)).abs());
        x += 0.37;
    }
    let h10 = hermite(10, 0.3).map_or(f64::INFINITY, |h| (h + 6_173.852_487_782_4).abs() / 6_173.852_487_782_4);
    vec![
        ("pcf_closed_forms", closed, 1e-12),
        ("pcf_integer_orders", integer, 1e-9),
        ("pcf_recurrence", recurrence, 1e-8),
        ("bessel_cross_wronskian", wr, 1e-8),
        ("hermite_h10", h10, 1e-12),
    ]
}

/// Largest deviation of the low zero-field spectrum from the separable
/// `hbar w0 (n + 1/2) + hbar^2 (pi j / d)^2 / 2m`, in units of `hbar w0`.
pub fn zero_field_spectrum_error(params: &SystemParams) -> f64 {
    let p = SystemParams { b: 0.0, ..*params };
    let cfg = ExactConfig { x_modes: 40, y_modes: 30, extra_quadrature: 20 };
    let Ok(sp) = ExactSolver::new(&p, cfg).and_then(|s| s.solve(None)) else {
        return f64::INFINITY;
    };
    let hw = p.hbar * p.omega0;
    let mut exact: Vec<f64> = (0..30)
        .flat_map(|n| (1..40).map(move |j| hw * (n as f64 + 0.5) + (p.hbar * PI * j as f64 / p.d).powi(2) / (2.0 * p.mass)))
        .collect();
    exact.sort_by(f64::total_cmp);
    sp.levels.iter().zip(&exact).take(60).map(|(a, b)| (a.energy - b).abs() / hw).fold(0.0, f64::max)
}

pub fn check_diagnostics(levels: &[SemiclassicalLevel], ns: &[i64]) -> CriterionResult {
    let mut c = CriterionResult::new(9, "diagnostics");
    for l in requested(levels, ns) {
        let dg = &l.diagnostics;
        let lo = l.energy() - dg.window_halfwidth;
        let hi = l.energy() + dg.window_halfwidth;
        let inside = levels.iter().filter(|o| (lo..=hi).contains(&o.energy())).count();
        c.metric(format!("T_over_tEhr_{}", l.n()), dg.t_over_tehr);
        c.metric(format!("levels_in_window_{}", l.n()), inside as f64);
        c.require(dg.period_below_ehrenfest, format!("n={}: T/t_Ehr = {:.3}", l.n(), dg.t_over_tehr));
        c.require(inside == 1, format!("n={}: {inside} quantized levels in the Ehrenfest window", l.n()));
    }
    c.finish()
}

/// Per-level comparison record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub n: i64,
    pub e_abl: f64,
    pub e_exact: Option<f64>,
    pub error_over_spacing: Option<f64>,
    pub profile_correlation: Option<f64>,
    pub husimi_peak_distance: Option<f64>,
    pub scar_ratio: Option<f64>,
    pub abl_parity: i8,
    pub exact_parity: Option<i8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: Vec<ComparisonRecord>,
    pub matches: Vec<ScarMatch>,
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

/// Everything computed by a full benchmark run.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub levels: Vec<SemiclassicalLevel>,
    pub spectrum: ExactSpectrum,
    pub window: (f64, f64),
    pub scores: Vec<StateScore>,
    pub matches: Vec<ScarMatch>,
    pub fields: Vec<(i64, ScarField)>,
    pub profiles: Vec<(i64, Profile, Profile)>,
    pub parity: Vec<ParityRecord>,
}

impl BenchmarkRun {
    pub fn execute(params: &SystemParams, search: &OrbitSearch, cfg: &BenchmarkConfig) -> Result<Self, BenchmarkError> {
        cfg.validate()?;
        let ext = cfg.extended_numbers();
        let levels = quantize_levels(params, search, &ext, cfg.eta, cfg.energy_guess, &cfg.field)?;
        let window = exact_window(&levels);
        let spectrum = exact_spectrum(params, &cfg.exact, window)?;
        Self::analyze(params, cfg, levels, spectrum, window)
    }

    /// The comparison stage on precomputed levels and spectrum.
    pub fn analyze(
        params: &SystemParams,
        cfg: &BenchmarkConfig,
        levels: Vec<SemiclassicalLevel>,
        spectrum: ExactSpectrum,
        window: (f64, f64),
    ) -> Result<Self, BenchmarkError> {
        let scores = score_states(&spectrum, &levels, params, &cfg.husimi)?;
        Self::assemble(params, cfg, levels, spectrum, window, scores)
    }

    /// The comparison stage on precomputed Husimi scores.
    pub fn assemble(
        params: &SystemParams,
        cfg: &BenchmarkConfig,
        levels: Vec<SemiclassicalLevel>,
        spectrum: ExactSpectrum,
        window: (f64, f64),
        scores: Vec<StateScore>,
    ) -> Result<Self, BenchmarkError> {
        let ns = &cfg.quantum_numbers;
        let matches = match_scars(&levels, &matched_numbers(ns), &scores, cfg.scar_threshold);
        let mut fields = Vec::new();
        let mut profiles = Vec::new();
        let mut parity = Vec::new();
        for l in requested(&levels, ns) {
            let field = l.field(params, cfg.field)?;
            let state = matches
                .iter()
                .find(|m| m.n == l.n())
                .and_then(|m| m.best)
                .and_then(|b| spectrum.eigenstate(b.energy, 1e-9).ok());
            if let Some(st) = state {
                let (a, e) = wall_profiles(&field, st, params, &cfg.profile)?;
                profiles.push((l.n(), a, e));
            }
            parity.push(parity_record(l.n(), &field, state, params));
            fields.push((l.n(), field));
        }
        Ok(BenchmarkRun { levels, spectrum, window, scores, matches, fields, profiles, parity })
    }

    pub fn report(&self, params: &SystemParams, cfg: &BenchmarkConfig) -> BenchmarkReport {
        let ns = &cfg.quantum_numbers;
        let corr: Vec<(i64, f64)> = self.profiles.iter().map(|(n, a, e)| (*n, profile_correlation(a, e, params, &cfg.profile))).collect();
        let first = ns[0];
        let prop_level = self.levels.iter().find(|l| l.n() == first);
        let prop_field = self.fields.iter().find(|(n, _)| *n == first).map(|(_, f)| f);
        let props = match (prop_level, prop_field) {
            (Some(l), Some(f)) => check_properties(l, f, params),
            _ => {
                let mut c = CriterionResult::new(8, "property suites");
                c.require(false, "benchmark level missing");
                c
            }
        };
        let criteria = vec![
            check_stability(&self.levels, ns),
            check_focal_census(&self.levels, ns, params),
            check_energies(&self.matches, ns),
            check_single_scar(&self.matches, ns),
            check_husimi(&self.matches, ns),
            check_profile(&corr, first),
            check_parity(&self.parity),
            props,
            check_diagnostics(&self.levels, ns),
        ];
        let exact = |n: i64| self.matches.iter().find(|m| m.n == n).and_then(|m| m.best);
        let records = requested(&self.levels, ns)
            .iter()
            .map(|l| {
                let n = l.n();
                let best = exact(n);
                let next = exact(n + 1);
                let par = self.parity.iter().find(|p| p.n == n);
                ComparisonRecord {
                    n,
                    e_abl: l.energy(),
                    e_exact: best.map(|b| b.energy),
                    error_over_spacing: best.zip(next).map(|(b, c)| (l.energy() - b.energy).abs() / (c.energy - b.energy)),
                    profile_correlation: corr.iter().find(|(m, _)| *m == n).map(|c| c.1),
                    husimi_peak_distance: best.map(|b| b.peak_distance),
                    scar_ratio: best.map(|b| b.score.ratio),
                    abl_parity: par.map_or(0, |p| p.abl.parity),
                    exact_parity: par.and_then(|p| p.exact_label),
                }
            })
            .collect();
        let all_passed = criteria.iter().all(|c| c.passed);
        BenchmarkReport { records, matches: self.matches.clone(), criteria, all_passed }
    }
}

/// Levels of the exact spectrum inside `window`.
pub fn exact_levels(spectrum: &ExactSpectrum, window: (f64, f64)) -> Vec<ExactLevel> {
    spectrum.levels_in(window.0, window.1)
}
