//! Pipeline stages. Each stage writes its tables, and the stages that feed
//! others also leave a keyed cache so later invocations can pick up from there.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use clap::ValueEnum;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use scar_core::analysis::HusimiMap;
use scar_core::benchmark::{
    check_diagnostics, check_focal_census, check_husimi, check_single_scar, check_stability, exact_spectrum, exact_window,
    match_scars, matched_numbers, quantize_levels, scan, score_states, state_husimi, BenchmarkReport, BenchmarkRun,
    CriterionResult, ScarMatch, SemiclassicalLevel, StateScore,
};
use scar_core::classical::poincare_section;
use scar_core::exactqm::{ExactSpectrum, SpectrumRecord};
use scar_core::semiclassics::{analyze_orbit, assemble_field};

use crate::config::RunConfig;
use crate::output::{CacheMiss, CheckRecord, OutDir, StageRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Stage {
    Orbit,
    Stability,
    Quantize,
    Field,
    ExactScan,
    ExactState,
    Husimi,
    Compare,
    Report,
    All,
}

/// Execution order of `all`.
pub const PIPELINE: [Stage; 9] = [
    Stage::Orbit,
    Stage::Quantize,
    Stage::Stability,
    Stage::Field,
    Stage::ExactScan,
    Stage::Husimi,
    Stage::ExactState,
    Stage::Compare,
    Stage::Report,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Orbit => "orbit",
            Stage::Stability => "stability",
            Stage::Quantize => "quantize",
            Stage::Field => "field",
            Stage::ExactScan => "exact-scan",
            Stage::ExactState => "exact-state",
            Stage::Husimi => "husimi",
            Stage::Compare => "compare",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }

    /// Stages whose cached output this stage reads.
    pub fn inputs(self) -> &'static [Stage] {
        match self {
            Stage::Orbit | Stage::Quantize | Stage::All => &[],
            Stage::Stability | Stage::Field | Stage::ExactScan => &[Stage::Quantize],
            Stage::Husimi => &[Stage::Quantize, Stage::ExactScan],
            Stage::ExactState => &[Stage::ExactScan, Stage::Husimi],
            Stage::Compare => &[Stage::Quantize, Stage::ExactScan, Stage::Husimi],
            Stage::Report => &[Stage::Compare],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A required upstream stage has no usable output.
#[derive(Debug, thiserror::Error)]
pub enum DependencyError {
    #[error("stage `{stage}` needs the output of `{needs}`, which is missing from {dir}; run `scar {needs}` (or `scar all`) first")]
    Missing { stage: Stage, needs: Stage, dir: String },
    #[error("stage `{stage}` needs the output of `{needs}`, but the copy in {dir} was made with a different configuration; rerun `scar {needs}`")]
    Stale { stage: Stage, needs: Stage, dir: String },
    #[error("stage `{stage}` cannot read the output of `{needs}` in {dir}: {reason}")]
    Corrupt { stage: Stage, needs: Stage, dir: String, reason: String },
}

#[derive(Serialize, Deserialize)]
struct ExactCache {
    window: (f64, f64),
    spectrum: SpectrumRecord,
}

#[derive(Serialize, Deserialize)]
struct HusimiCache {
    scores: Vec<StateScore>,
    matches: Vec<ScarMatch>,
}

/// Stage keys derived from the configuration alone.
struct Keys(BTreeMap<Stage, String>);

impl Keys {
    fn new(cfg: &RunConfig) -> Result<Self> {
        use crate::output::stage_key;
        let b = &cfg.benchmark;
        let mut k = BTreeMap::new();
        k.insert(Stage::Orbit, stage_key("orbit", &(cfg.seed, &cfg.system, &cfg.orbit), &[])?);
        let q = stage_key("quantize", &(&cfg.system, &cfg.orbit.search, &b.quantum_numbers, b.eta, b.energy_guess, &b.field), &[])?;
        let e = stage_key("exact-scan", &(&b.exact, b.scan_step), &[&q])?;
        let h = stage_key("husimi", &(&b.husimi, b.scar_threshold), &[&q, &e])?;
        let c = stage_key("compare", &(&b.profile, &b.field), &[&q, &e, &h])?;
        k.insert(Stage::Stability, stage_key("stability", &(), &[&q])?);
        k.insert(Stage::Field, stage_key("field", &(&cfg.grid, &b.field), &[&q])?);
        k.insert(Stage::ExactState, stage_key("exact-state", &cfg.grid, &[&e, &h])?);
        k.insert(Stage::Report, stage_key("report", &(), &[&c])?);
        k.insert(Stage::Quantize, q);
        k.insert(Stage::ExactScan, e);
        k.insert(Stage::Husimi, h);
        k.insert(Stage::Compare, c);
        Ok(Keys(k))
    }

    fn get(&self, s: Stage) -> &str {
        &self.0[&s]
    }
}

/// Everything one invocation needs: config, output directory and results so far.
pub struct Pipeline<'a> {
    cfg: &'a RunConfig,
    out: OutDir,
    keys: Keys,
    pub records: BTreeMap<String, StageRecord>,
    pub checks: BTreeMap<u8, CriterionResult>,
    levels: Option<Vec<SemiclassicalLevel>>,
    exact: Option<(ExactSpectrum, (f64, f64))>,
    husimi: Option<HusimiCache>,
    report: Option<BenchmarkReport>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a RunConfig, out: OutDir, records: BTreeMap<String, StageRecord>) -> Result<Self> {
        Ok(Pipeline {
            cfg,
            out,
            keys: Keys::new(cfg)?,
            records,
            checks: BTreeMap::new(),
            levels: None,
            exact: None,
            husimi: None,
            report: None,
        })
    }

    pub fn check_records(&self) -> Vec<CheckRecord> {
        self.checks
            .values()
            .map(|c| CheckRecord { id: c.id, title: c.title.clone(), passed: c.passed, summary: c.summary.clone() })
            .collect()
    }

    pub fn run(&mut self, stage: Stage) -> Result<()> {
        if stage == Stage::All {
            return PIPELINE.iter().try_for_each(|&s| self.run(s));
        }
        let start = Instant::now();
        self.out.take_written();
        match stage {
            Stage::Orbit => self.orbit(),
            Stage::Quantize => self.quantize(),
            Stage::Stability => self.stability(),
            Stage::Field => self.field(),
            Stage::ExactScan => self.exact_scan(),
            Stage::Husimi => self.husimi(),
            Stage::ExactState => self.exact_state(),
            Stage::Compare => self.compare(),
            Stage::Report => self.report(),
            Stage::All => unreachable!(),
        }
        .with_context(|| format!("stage `{stage}` failed"))?;
        let mut outputs = self.out.take_written();
        outputs.sort();
        let record = StageRecord { key: self.keys.get(stage).to_string(), seconds: start.elapsed().as_secs_f64(), outputs };
        self.records.insert(stage.name().to_string(), record);
        Ok(())
    }

    /// Format reference and effective configuration, refreshed on every run.
    pub fn write_common(&mut self) -> Result<()> {
        self.out.write_bytes("FORMATS.md", crate::output::FORMATS.as_bytes())?;
        self.out.write_bytes("config.toml", self.cfg.to_toml()?.as_bytes())
    }

    fn add_checks(&mut self, checks: impl IntoIterator<Item = CriterionResult>) {
        for c in checks {
            self.checks.insert(c.id, c);
        }
    }

    /// Cached output of an upstream stage, checked against the current key.
    fn upstream<T: DeserializeOwned>(&self, stage: Stage, needs: Stage) -> Result<T, DependencyError> {
        let dir = self.out.root.display().to_string();
        match self.out.load::<T>(needs.name()) {
            Ok(c) if c.key == self.keys.get(needs) => Ok(c.data),
            Ok(_) => Err(DependencyError::Stale { stage, needs, dir }),
            Err(CacheMiss::Missing) => Err(DependencyError::Missing { stage, needs, dir }),
            Err(CacheMiss::Corrupt(reason)) => Err(DependencyError::Corrupt { stage, needs, dir, reason }),
        }
    }

    fn levels(&mut self, stage: Stage) -> Result<&Vec<SemiclassicalLevel>> {
        if self.levels.is_none() {
            self.levels = Some(self.upstream(stage, Stage::Quantize)?);
        }
        Ok(self.levels.as_ref().unwrap())
    }

    fn exact(&mut self, stage: Stage) -> Result<&(ExactSpectrum, (f64, f64))> {
        if self.exact.is_none() {
            let c: ExactCache = self.upstream(stage, Stage::ExactScan)?;
            self.exact = Some((c.spectrum.restore()?, c.window));
        }
        Ok(self.exact.as_ref().unwrap())
    }

    fn husimi_data(&mut self, stage: Stage) -> Result<&HusimiCache> {
        if self.husimi.is_none() {
            self.husimi = Some(self.upstream(stage, Stage::Husimi)?);
        }
        Ok(self.husimi.as_ref().unwrap())
    }

    /// Fails early, before any work, if an input is unavailable.
    pub fn check_inputs(&self, stage: Stage) -> Result<(), DependencyError> {
        stage.inputs().iter().try_for_each(|&needs| self.upstream::<serde::de::IgnoredAny>(stage, needs).map(|_| ()))
    }

    fn orbit(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let p = &cfg.system;
        let oc = &cfg.orbit;
        let an = analyze_orbit(oc.reference_energy, p, &oc.search)?;
        let mut rows = Vec::new();
        for (k, arc) in an.orbit.arcs.iter().enumerate() {
            for i in 0..arc.s.len() {
                let st = arc.samples[i].state;
                rows.push(OrbitRow {
                    arc: k + 1,
                    s: arc.s[i],
                    x: st.x,
                    y: st.y,
                    vx: st.vx,
                    vy: st.vy,
                    t: st.t,
                    momentum: arc.momentum[i],
                    curvature: arc.curvature[i],
                    d_coeff: arc.d_coeff[i],
                });
            }
        }
        self.out.write_csv("orbit.csv", rows)?;
        let (by, bp) = an.orbit.birkhoff_point(p);
        let (re, im) = an.monodromy.eigenvalues[0];
        self.out.write_csv(
            "orbit_summary.csv",
            [OrbitSummaryRow {
                energy: an.orbit.energy,
                launch_angle: an.orbit.launch_angle,
                period: an.orbit.period,
                length: an.orbit.length,
                signed_area: an.orbit.signed_area,
                closure_error: an.orbit.closure_error,
                birkhoff_y: by,
                birkhoff_p: bp,
                trace: an.monodromy.trace,
                stretching: re.hypot(im),
                lambda: an.monodromy.lambda,
                alpha: an.action.alpha,
            }],
        )?;
        self.out.write_csv("orbit_focal_points.csv", focal_rows(None, &an.solutions.focal.points, p.d))?;

        // Random interior seeds on the energy disc, reproducible through the seed.
        let e = oc.reference_energy;
        let circle = scar_core::analysis::EnergyCircle::new(e, p);
        let mut rng = StdRng::seed_from_u64(cfg.seed);
        let seeds: Vec<(f64, f64)> = (0..oc.poincare_trajectories)
            .map(|_| loop {
                let y = (2.0 * rng.random::<f64>() - 1.0) * circle.y_radius();
                let py = (2.0 * rng.random::<f64>() - 1.0) * circle.p_radius();
                let (ys, ps) = (y / circle.y_radius(), py / circle.p_radius());
                if ys * ys + ps * ps < 0.95 {
                    break (y, py);
                }
            })
            .collect();
        let section = poincare_section(e, p, &seeds, oc.poincare_bounces)?;
        let rows = section
            .iter()
            .enumerate()
            .flat_map(|(k, pts)| pts.iter().enumerate().map(move |(i, &(y, py))| PoincareRow { trajectory: k, bounce: i + 1, y, p_y: py }));
        self.out.write_csv("poincare.csv", rows)?;
        Ok(())
    }

    fn quantize(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let b = &cfg.benchmark;
        let ns = cfg.benchmark.extended_numbers();
        let levels = quantize_levels(&cfg.system, &cfg.orbit.search, &ns, b.eta, b.energy_guess, &b.field)?;
        let rows = levels.iter().map(|l| LevelRow {
            n: l.n(),
            requested: b.quantum_numbers.contains(&l.n()),
            energy: l.energy(),
            residual: l.level.residual,
            loop_action: l.analysis.action.loop_action,
            flux: l.analysis.action.flux,
            alpha: l.analysis.action.alpha,
            period: l.analysis.orbit.period,
            t_over_tehr: l.diagnostics.t_over_tehr,
            window_halfwidth: l.diagnostics.window_halfwidth,
            level_spacing: l.diagnostics.level_spacing,
        });
        self.out.write_csv("levels.csv", rows)?;
        self.out.store(Stage::Quantize.name(), self.keys.get(Stage::Quantize), &levels)?;
        self.add_checks([check_diagnostics(&levels, &b.quantum_numbers)]);
        self.levels = Some(levels);
        Ok(())
    }

    fn stability(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let ns = cfg.benchmark.quantum_numbers.clone();
        let levels = self.levels(Stage::Stability)?.clone();
        let rows = levels.iter().map(|l| {
            let m = &l.analysis.monodromy;
            StabilityRow {
                n: l.n(),
                energy: l.energy(),
                trace: m.trace,
                det: m.matrix.det(),
                stretching: l.stretching(),
                lambda: m.lambda,
                lambda_t: m.lambda_t,
                alpha: l.analysis.action.alpha,
            }
        });
        self.out.write_csv("stability.csv", rows)?;
        let focal = levels.iter().flat_map(|l| focal_rows(Some(l.n()), &l.analysis.solutions.focal.points, cfg.system.d));
        self.out.write_csv("focal_census.csv", focal)?;
        self.add_checks([check_stability(&levels, &ns), check_focal_census(&levels, &ns, &cfg.system)]);
        Ok(())
    }

    fn field(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let levels = self.levels(Stage::Field)?.clone();
        let (xs, ys) = cfg.grid.axes(cfg.system.d);
        for l in levels.iter().filter(|l| cfg.benchmark.quantum_numbers.contains(&l.n())) {
            let field = l.field(&cfg.system, cfg.benchmark.field)?;
            let grid = assemble_field(&field, &xs, &ys)?;
            self.out.write_csv(&format!("field_n{}.csv", l.n()), grid_rows(&xs, &ys, &grid))?;
        }
        Ok(())
    }

    fn exact_scan(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let levels = self.levels(Stage::ExactScan)?;
        let window = exact_window(levels);
        let spectrum = exact_spectrum(&cfg.system, &cfg.benchmark.exact, window)?;
        let sc = scan(&spectrum, window, cfg.benchmark.scan_step)?;
        self.out.write_csv("sigma_scan.csv", sc.samples.iter().map(|s| ScanRow { energy: s.energy, sigma_min: s.sigma }))?;
        self.out.write_csv("exact_levels.csv", sc.minima.iter().map(|l| ExactLevelRow { energy: l.energy, parity: l.parity }))?;
        let record = SpectrumRecord::new(&spectrum, &cfg.system, cfg.benchmark.exact);
        self.out.store(Stage::ExactScan.name(), self.keys.get(Stage::ExactScan), &ExactCache { window, spectrum: record })?;
        self.exact = Some((spectrum, window));
        Ok(())
    }

    fn husimi(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let b = &cfg.benchmark;
        let levels = self.levels(Stage::Husimi)?.clone();
        let (spectrum, _) = self.exact(Stage::Husimi)?;
        let scores = score_states(spectrum, &levels, &cfg.system, &b.husimi)?;
        let matches = match_scars(&levels, &matched_numbers(&b.quantum_numbers), &scores, b.scar_threshold);
        let mut maps: Vec<(i64, HusimiMap)> = Vec::new();
        for m in matches.iter().filter(|m| b.quantum_numbers.contains(&m.n)) {
            if let Some(best) = m.best {
                let st = spectrum.eigenstate(best.energy, 1e-9)?;
                maps.push((m.n, state_husimi(st, &cfg.system, &b.husimi)?.1));
            }
        }
        let score_rows = scores.iter().map(|s| ScoreRow {
            energy: s.energy,
            parity: s.parity,
            orbit_value: s.score.orbit_value,
            background: s.score.background,
            ratio: s.score.ratio,
            passes: s.is_scar(b.scar_threshold),
            peak_y: s.peak.y,
            peak_p: s.peak.p,
            peak_distance: s.peak_distance,
            birkhoff_y: s.birkhoff.0,
            birkhoff_p: s.birkhoff.1,
        });
        self.out.write_csv("state_scores.csv", score_rows)?;
        let window_rows = matches.iter().map(|m| WindowRow {
            n: m.n,
            e_abl: m.e_abl,
            window_lo: m.window.0,
            window_hi: m.window.1,
            states: m.states_in_window,
            passing: m.passing.len(),
            best_energy: m.best.map(|b| b.energy),
            best_ratio: m.best.map(|b| b.score.ratio),
        });
        self.out.write_csv("scar_windows.csv", window_rows)?;
        for (n, map) in &maps {
            let rows = map.ys.iter().enumerate().flat_map(|(iy, &y)| {
                map.ps.iter().enumerate().map(move |(ip, &p)| HusimiRow {
                    y,
                    p_y: p,
                    husimi: map.values[iy][ip],
                    inside: map.circle.is_some_and(|c| c.contains(y, p)),
                })
            });
            self.out.write_csv(&format!("husimi_n{n}.csv"), rows)?;
        }
        let cache = HusimiCache { scores, matches };
        self.out.store(Stage::Husimi.name(), self.keys.get(Stage::Husimi), &cache)?;
        self.add_checks([
            check_single_scar(&cache.matches, &b.quantum_numbers),
            check_husimi(&cache.matches, &b.quantum_numbers),
        ]);
        self.husimi = Some(cache);
        Ok(())
    }

    fn exact_state(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let matches = self.husimi_data(Stage::ExactState)?.matches.clone();
        let (spectrum, _) = self.exact(Stage::ExactState)?;
        let (xs, ys) = cfg.grid.axes(cfg.system.d);
        let mut files = Vec::new();
        for m in matches.iter().filter(|m| cfg.benchmark.quantum_numbers.contains(&m.n)) {
            let Some(best) = m.best else { continue };
            let grid = spectrum.eigenstate(best.energy, 1e-9)?.grid(&xs, &ys);
            files.push((format!("exact_state_n{}.csv", m.n), grid));
        }
        for (name, grid) in files {
            self.out.write_csv(&name, grid_rows(&xs, &ys, &grid))?;
        }
        Ok(())
    }

    fn compare(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let levels = self.levels(Stage::Compare)?.clone();
        let scores = self.husimi_data(Stage::Compare)?.scores.clone();
        let (spectrum, window) = self.exact(Stage::Compare)?.clone();
        let run = BenchmarkRun::assemble(&cfg.system, &cfg.benchmark, levels, spectrum, window, scores)?;
        let report = run.report(&cfg.system, &cfg.benchmark);
        self.out.write_csv("comparison.csv", report.records.iter().cloned())?;
        for (n, abl, exact) in &run.profiles {
            let rows = (0..abl.xs.len()).map(|i| ProfileRow {
                x: abl.xs[i],
                abl_raw: abl.raw[i],
                exact_raw: exact.raw[i],
                abl_averaged: abl.averaged[i],
                exact_averaged: exact.averaged[i],
            });
            self.out.write_csv(&format!("profile_n{n}.csv"), rows)?;
        }
        let parity = run.parity.iter().map(|r| ParityRow {
            n: r.n,
            required: scar_core::benchmark::required_parity(r.n),
            abl_parity: r.abl.parity,
            abl_residual: r.abl.residual,
            exact_parity: r.exact_label,
            exact_correlation: r.exact.map(|e| e.correlation),
        });
        self.out.write_csv("parity.csv", parity)?;
        self.out.write_csv("criteria.csv", report.criteria.iter().map(CriterionRow::from))?;
        self.out.store(Stage::Compare.name(), self.keys.get(Stage::Compare), &report)?;
        self.add_checks(report.criteria.clone());
        self.report = Some(report);
        Ok(())
    }

    fn report(&mut self) -> Result<()> {
        let report = match self.report.take() {
            Some(r) => r,
            None => self.upstream(Stage::Report, Stage::Compare)?,
        };
        self.out.write_json("report.json", &report)?;
        let mut text: String = report.criteria.iter().map(|c| c.line() + "\n").collect();
        let passed = report.criteria.iter().filter(|c| c.passed).count();
        text += &format!("{passed}/{} criteria pass\n", report.criteria.len());
        self.out.write_bytes("summary.txt", text.as_bytes())?;
        self.add_checks(report.criteria.clone());
        self.report = Some(report);
        Ok(())
    }
}

/// Rejects `--stage` values that disagree with the subcommand.
pub fn resolve(sub: Option<Stage>, flag: Option<Stage>) -> Result<Stage> {
    match (sub, flag) {
        (Some(a), Some(b)) if a != b => bail!("subcommand `{a}` conflicts with --stage {b}"),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => bail!("no stage given; name a subcommand or pass --stage"),
    }
}

fn focal_rows(n: Option<i64>, points: &[scar_core::variation::FocalPoint], d: f64) -> Vec<FocalRow> {
    points
        .iter()
        .enumerate()
        .map(|(i, f)| FocalRow { n, index: i + 1, arc: f.arc + 1, s: f.s, x: f.position.x, y: f.position.y, x_over_d: f.position.x / d, y_over_d: f.position.y / d })
        .collect()
}

fn grid_rows<'g>(xs: &'g [f64], ys: &'g [f64], grid: &'g [Vec<num_complex::Complex64>]) -> impl Iterator<Item = GridRow> + 'g {
    ys.iter().zip(grid).flat_map(move |(&y, row)| xs.iter().zip(row).map(move |(&x, v)| GridRow { x, y, re: v.re, im: v.im, abs: v.norm() }))
}

#[derive(Serialize)]
struct OrbitRow {
    arc: usize,
    s: f64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    t: f64,
    momentum: f64,
    curvature: f64,
    d_coeff: f64,
}

#[derive(Serialize)]
struct OrbitSummaryRow {
    energy: f64,
    launch_angle: f64,
    period: f64,
    length: f64,
    signed_area: f64,
    closure_error: f64,
    birkhoff_y: f64,
    birkhoff_p: f64,
    trace: f64,
    stretching: f64,
    lambda: Option<f64>,
    alpha: usize,
}

#[derive(Serialize)]
struct FocalRow {
    n: Option<i64>,
    index: usize,
    arc: usize,
    s: f64,
    x: f64,
    y: f64,
    x_over_d: f64,
    y_over_d: f64,
}

#[derive(Serialize)]
struct PoincareRow {
    trajectory: usize,
    bounce: usize,
    y: f64,
    p_y: f64,
}

#[derive(Serialize)]
struct LevelRow {
    n: i64,
    requested: bool,
    energy: f64,
    residual: f64,
    loop_action: f64,
    flux: f64,
    alpha: usize,
    period: f64,
    t_over_tehr: f64,
    window_halfwidth: f64,
    level_spacing: f64,
}

#[derive(Serialize)]
struct StabilityRow {
    n: i64,
    energy: f64,
    trace: f64,
    det: f64,
    stretching: f64,
    lambda: Option<f64>,
    lambda_t: Option<f64>,
    alpha: usize,
}

#[derive(Serialize)]
struct GridRow {
    x: f64,
    y: f64,
    re: f64,
    im: f64,
    abs: f64,
}

#[derive(Serialize)]
struct ScanRow {
    energy: f64,
    sigma_min: f64,
}

#[derive(Serialize)]
struct ExactLevelRow {
    energy: f64,
    parity: i8,
}

#[derive(Serialize)]
struct ScoreRow {
    energy: f64,
    parity: i8,
    orbit_value: f64,
    background: f64,
    ratio: f64,
    passes: bool,
    peak_y: f64,
    peak_p: f64,
    peak_distance: f64,
    birkhoff_y: f64,
    birkhoff_p: f64,
}

#[derive(Serialize)]
struct WindowRow {
    n: i64,
    e_abl: f64,
    window_lo: f64,
    window_hi: f64,
    states: usize,
    passing: usize,
    best_energy: Option<f64>,
    best_ratio: Option<f64>,
}

#[derive(Serialize)]
struct HusimiRow {
    y: f64,
    p_y: f64,
    husimi: f64,
    inside: bool,
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    abl_raw: f64,
    exact_raw: f64,
    abl_averaged: f64,
    exact_averaged: f64,
}

#[derive(Serialize)]
struct ParityRow {
    n: i64,
    required: i8,
    abl_parity: i8,
    abl_residual: f64,
    exact_parity: Option<i8>,
    exact_correlation: Option<f64>,
}

#[derive(Serialize)]
struct CriterionRow {
    id: u8,
    title: String,
    passed: bool,
    summary: String,
}

impl From<&CriterionResult> for CriterionRow {
    fn from(c: &CriterionResult) -> Self {
        CriterionRow { id: c.id, title: c.title.clone(), passed: c.passed, summary: c.summary.clone() }
    }
}
