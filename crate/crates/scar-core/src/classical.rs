//! Classical motion in the resonator: Lorentz-force flow, specular wall
//! reflections, shooting for the wall-to-wall bell orbit, arclength-sampled
//! arcs and Birkhoff sections at the left wall.

use serde::{Deserialize, Serialize};

use crate::model::{potential_jets, ModelError, ParabolicChannel, Potential, PotentialJet, SystemParams};
use crate::numerics::{brent, integrate_to, OdeError, RootError, Tolerance, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassicalError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no bell orbit in launch-angle bracket: {0}")]
    OrbitNotFound(RootError),
    #[error("orbit grazes a wall (reflection angle {0} rad)")]
    DegenerateOrbit(f64),
    #[error("energy {0} is below the potential at the launch point")]
    Forbidden(f64),
    #[error("momentum vanishes on the arc (turning point at s = {0})")]
    TurningPoint(f64),
    #[error("arc samples are not uniformly spaced in arclength")]
    NonUniformArc,
    #[error("no wall reached before t = {0}")]
    NoWall(f64),
    #[error("seed ({0}, {1}) lies outside the energetically allowed region")]
    SeedOutside(f64, f64),
    #[error("orbit does not close: endpoint misses the start by {0}")]
    NotClosed(f64),
}

impl From<RootError> for ClassicalError {
    fn from(e: RootError) -> Self {
        ClassicalError::OrbitNotFound(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub t: f64,
}

impl PhaseState {
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn vel(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn energy(&self, params: &SystemParams) -> f64 {
        0.5 * params.mass * (self.vx * self.vx + self.vy * self.vy) + params.confinement().value(self.pos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wall {
    Left,
    Right,
}

impl Wall {
    pub fn outward_normal(self) -> Vec2 {
        match self {
            Wall::Left => Vec2::new(-1.0, 0.0),
            Wall::Right => Vec2::new(1.0, 0.0),
        }
    }

    /// Angle between the outward normal and the incident velocity, measured
    /// from the normal towards the normal rotated clockwise.
    pub fn incidence_angle(self, v: Vec2) -> f64 {
        let n = self.outward_normal();
        let t = -n.rot90();
        v.dot(t).atan2(v.dot(n))
    }
}

/// Acceleration from the Lorentz force and the confinement.
pub fn acceleration(params: &SystemParams, pot: &ParabolicChannel, r: Vec2, v: Vec2) -> Vec2 {
    let wc = params.cyclotron();
    let g = pot.gradient(r);
    Vec2::new(wc * v.y - g.x / params.mass, -wc * v.x - g.y / params.mass)
}

/// Time-parameterized flow with accumulated arclength as fifth component.
fn time_rhs(params: &SystemParams) -> impl Fn(f64, &[f64; 5]) -> [f64; 5] + '_ {
    let pot = params.confinement();
    move |_t, y| {
        let v = Vec2::new(y[2], y[3]);
        let a = acceleration(params, &pot, Vec2::new(y[0], y[1]), v);
        [y[2], y[3], a.x, a.y, v.norm()]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub tol: Tolerance,
    pub max_time: f64,
    /// Tolerance on x when landing on a wall.
    pub wall_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { tol: Tolerance::default(), max_time: 1e3, wall_tol: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    Reached(PhaseState, f64),
    Wall(PhaseState, f64, Wall),
}

/// Flows until `t_stop` or the first wall contact, whichever comes first.
/// The returned float is the arclength travelled.
pub fn advance(params: &SystemParams, start: PhaseState, t_stop: f64, opts: &FlowOptions) -> Result<Advance, ClassicalError> {
    let rhs = time_rhs(params);
    let d = params.d;
    let mut y = [start.x, start.y, start.vx, start.vy, 0.0];
    let mut t = start.t;
    let mut h: f64 = 0.01;
    while t < t_stop {
        let h_try = h.min(t_stop - t);
        let (y_new, err) = crate::numerics::dopri_step(&rhs, t, &y, h_try, opts.tol);
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(OdeError::NonFinite(t).into());
        }
        if err > 1.0 {
            h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 {
                return Err(OdeError::StepUnderflow(t).into());
            }
            continue;
        }
        let outside = |x: f64| {
            if x < 0.0 {
                Some(Wall::Left)
            } else if x > d {
                Some(Wall::Right)
            } else {
                None
            }
        };
        if let Some(wall) = outside(y_new[0]) {
            let target = if wall == Wall::Left { 0.0 } else { d };
            // Bisect on the step length for the crossing.
            let (mut lo, mut hi) = (0.0, h_try);
            let mut hit = y_new;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let (ym, _) = crate::numerics::dopri_step(&rhs, t, &y, mid, opts.tol);
                let past = if wall == Wall::Left { ym[0] < target } else { ym[0] > target };
                if past {
                    hi = mid;
                    hit = ym;
                } else {
                    lo = mid;
                }
                if (ym[0] - target).abs() < opts.wall_tol || hi - lo < 1e-15 {
                    hit = ym;
                    hi = mid;
                    break;
                }
            }
            let st = PhaseState { x: target, y: hit[1], vx: hit[2], vy: hit[3], t: t + hi };
            return Ok(Advance::Wall(st, hit[4], wall));
        }
        t += h_try;
        y = y_new;
        h = h_try * if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    }
    let st = PhaseState { x: y[0], y: y[1], vx: y[2], vy: y[3], t };
    Ok(Advance::Reached(st, y[4]))
}

/// Flow until the next wall contact.
pub fn advance_to_wall(params: &SystemParams, start: PhaseState, opts: &FlowOptions) -> Result<(PhaseState, f64, Wall), ClassicalError> {
    match advance(params, start, start.t + opts.max_time, opts)? {
        Advance::Wall(s, len, w) => Ok((s, len, w)),
        Advance::Reached(s, _) => Err(ClassicalError::NoWall(s.t)),
    }
}

pub fn reflect(s: PhaseState) -> PhaseState {
    PhaseState { vx: -s.vx, ..s }
}

/// Samples the billiard flow every `dt` until `stop` returns true, reflecting
/// specularly at the walls.
pub fn integrate_eom<F>(
    start: PhaseState,
    params: &SystemParams,
    dt: f64,
    mut stop: F,
    opts: &FlowOptions,
) -> Result<Vec<PhaseState>, ClassicalError>
where
    F: FnMut(&PhaseState) -> bool,
{
    let mut out = vec![start];
    let mut state = start;
    let mut next = start.t + dt;
    let t_end = start.t + opts.max_time;
    while !stop(&state) {
        if state.t >= t_end {
            return Err(OdeError::TooManySteps(out.len()).into());
        }
        match advance(params, state, next, opts)? {
            Advance::Reached(s, _) => {
                state = s;
                out.push(s);
                next += dt;
            }
            Advance::Wall(s, _, _) => {
                state = reflect(s);
                if stop(&s) {
                    out.push(s);
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Launch from the origin of the left wall with speed set by the energy.
pub fn launch(params: &SystemParams, energy: f64, angle: f64) -> Result<PhaseState, ClassicalError> {
    let speed = params.momentum(energy, 0.0).ok_or(ClassicalError::Forbidden(energy))? / params.mass;
    Ok(PhaseState { x: 0.0, y: 0.0, vx: speed * angle.cos(), vy: speed * angle.sin(), t: 0.0 })
}

/// y at the right wall for a launch angle; `None` if the trajectory returns
/// to the left wall first.
pub fn shoot(params: &SystemParams, energy: f64, angle: f64, opts: &FlowOptions) -> Result<Option<f64>, ClassicalError> {
    let (hit, _, wall) = advance_to_wall(params, launch(params, energy, angle)?, opts)?;
    Ok((wall == Wall::Right).then_some(hit.y))
}

/// One arclength sample of an arc, with integrated bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSample {
    pub state: PhaseState,
    /// `int a ds` from the arc start.
    pub action: f64,
    /// Area swept relative to the strip centre `(d/2, 0)`, counterclockwise positive.
    pub swept_area: f64,
    /// Fundamental matrix of the equations in variation from the arc start,
    /// as rows `[[z1, z2], [p1, p2]]`.
    pub fundamental: [[f64; 2]; 2],
}

/// Momentum and `d` coefficient at a phase-space point on the energy shell.
pub fn local_d(params: &SystemParams, pot: &ParabolicChannel, r: Vec2, v: Vec2) -> (f64, f64) {
    let sp = v.norm();
    let a = params.mass * sp;
    let en = (v * (1.0 / sp)).rot90();
    let kappa = v.cross(acceleration(params, pot, r, v)) / (sp * sp * sp);
    let h = pot.hessian(r);
    let jet = PotentialJet {
        u0: pot.value(r),
        u1: pot.gradient(r).dot(en),
        u2: 0.5 * (en.x * (h[0][0] * en.x + h[0][1] * en.y) + en.y * (h[1][0] * en.x + h[1][1] * en.y)),
    };
    (a, d_coefficient(params, a, kappa, &jet))
}

/// State: position, velocity, time, action, swept area, then the two
/// columns `(z, p)` of the variation fundamental matrix.
fn arclength_rhs(params: &SystemParams) -> impl Fn(f64, &[f64; 11]) -> [f64; 11] + '_ {
    let pot = params.confinement();
    let xc = 0.5 * params.d;
    move |_s, y| {
        let r0 = Vec2::new(y[0], y[1]);
        let v = Vec2::new(y[2], y[3]);
        let sp = v.norm();
        let acc = acceleration(params, &pot, r0, v);
        let r = Vec2::new(y[0] - xc, y[1]);
        let (a, d) = local_d(params, &pot, r0, v);
        [
            y[2] / sp,
            y[3] / sp,
            acc.x / sp,
            acc.y / sp,
            1.0 / sp,
            params.mass * sp,
            0.5 * r.cross(v) / sp,
            y[8] / a,
            -a * d * y[7],
            y[10] / a,
            -a * d * y[9],
        ]
    }
}

/// Uniform arclength samples on `[s_from, s_to]` of the wall-free flow
/// through `start` (taken as `s = 0`).
pub fn trace_arclength(
    params: &SystemParams,
    start: PhaseState,
    s_from: f64,
    s_to: f64,
    samples: usize,
    tol: Tolerance,
) -> Result<(Vec<f64>, Vec<ArcSample>), ClassicalError> {
    let rhs = arclength_rhs(params);
    let n = samples.max(2);
    let h = (s_to - s_from) / (n - 1) as f64;
    let y0 = [start.x, start.y, start.vx, start.vy, start.t, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
    let to_sample = |y: &[f64; 11]| ArcSample {
        state: PhaseState { x: y[0], y: y[1], vx: y[2], vy: y[3], t: y[4] },
        action: y[5],
        swept_area: y[6],
        fundamental: [[y[7], y[9]], [y[8], y[10]]],
    };
    let (y_first, _) = integrate_to(&rhs, 0.0, y0, s_from, 0.01, tol)?;
    let mut s_grid = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut y = y_first;
    let mut step = h.abs().min(0.05);
    for k in 0..n {
        let s = s_from + h * k as f64;
        if k > 0 {
            let (yn, hn) = integrate_to(&rhs, s - h, y, s, step, tol)?;
            y = yn;
            step = hn;
        }
        if !(y[2].hypot(y[3]) > 0.0) {
            return Err(ClassicalError::TurningPoint(s));
        }
        s_grid.push(s);
        out.push(to_sample(&y));
    }
    Ok((s_grid, out))
}

/// Arclength-sampled arc with the geometry entering the boundary-layer equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arc {
    pub energy: f64,
    pub s: Vec<f64>,
    pub samples: Vec<ArcSample>,
    pub tangent: Vec<Vec2>,
    pub normal: Vec<Vec2>,
    /// Signed curvature `1/rho`, positive when turning towards the normal.
    pub curvature: Vec<f64>,
    pub momentum: Vec<f64>,
    pub jets: Vec<PotentialJet>,
    pub d_coeff: Vec<f64>,
    /// Reflection angle at the terminating wall, if any.
    pub end_angle: Option<f64>,
}

/// `d(s) = 2m u2/a^2 + m^2 u1^2/a^4 - 2m u1 k/a^2 - eB k/a` with `k = 1/rho`.
pub fn d_coefficient(params: &SystemParams, a: f64, curvature: f64, jet: &PotentialJet) -> f64 {
    let m = params.mass;
    let eb = params.charge * params.b;
    let a2 = a * a;
    2.0 * m * jet.u2 / a2 + m * m * jet.u1 * jet.u1 / (a2 * a2) - 2.0 * m * jet.u1 * curvature / a2 - eb * curvature / a
}

/// Geometry from uniformly arclength-spaced samples.
pub fn build_arc(s: Vec<f64>, samples: Vec<ArcSample>, params: &SystemParams, energy: f64) -> Result<Arc, ClassicalError> {
    if s.len() >= 3 {
        let h = s[1] - s[0];
        if s.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
            return Err(ClassicalError::NonUniformArc);
        }
    }
    let pot = params.confinement();
    let n = samples.len();
    let mut arc = Arc {
        energy,
        s,
        samples,
        tangent: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
        momentum: Vec::with_capacity(n),
        jets: Vec::with_capacity(n),
        d_coeff: Vec::with_capacity(n),
        end_angle: None,
    };
    for (i, smp) in arc.samples.iter().enumerate() {
        let st = smp.state;
        let (r, v) = (st.pos(), st.vel());
        let a2 = 2.0 * params.mass * (energy - pot.value(r));
        if !(a2 > 0.0) {
            return Err(ClassicalError::TurningPoint(arc.s[i]));
        }
        let a = a2.sqrt();
        let sp = v.norm();
        let et = v * (1.0 / sp);
        let en = et.rot90();
        let acc = acceleration(params, &pot, r, v);
        let kappa = v.cross(acc) / (sp * sp * sp);
        let jet = potential_jets(&pot, r, en)?;
        arc.tangent.push(et);
        arc.normal.push(en);
        arc.curvature.push(kappa);
        arc.momentum.push(a);
        arc.d_coeff.push(d_coefficient(params, a, kappa, &jet));
        arc.jets.push(jet);
    }
    Ok(arc)
}

impl Arc {
    pub fn length(&self) -> f64 {
        self.s.last().copied().unwrap_or(0.0) - self.s.first().copied().unwrap_or(0.0)
    }

    pub fn start(&self) -> PhaseState {
        self.samples[0].state
    }

    pub fn end(&self) -> PhaseState {
        self.samples[self.samples.len() - 1].state
    }

    /// Curvature radius; infinite for straight segments.
    pub fn rho(&self, i: usize) -> f64 {
        1.0 / self.curvature[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub position: Vec2,
    pub wall: Wall,
    pub angle: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub energy: f64,
    pub launch_angle: f64,
    /// Arc 1 leaves the left wall; arc 2 returns to it.
    pub arcs: Vec<Arc>,
    /// Reflection ending each arc, in order.
    pub reflections: Vec<Reflection>,
    pub period: f64,
    pub length: f64,
    /// Counterclockwise-positive enclosed area.
    pub signed_area: f64,
    pub closure_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSearch {
    /// Launch-angle bracket at the left wall (radians from +x).
    pub angle_lo: f64,
    pub angle_hi: f64,
    pub samples_per_arc: usize,
    pub angle_tol: f64,
}

impl Default for OrbitSearch {
    fn default() -> Self {
        Self { angle_lo: -0.95, angle_hi: -0.6, samples_per_arc: 2400, angle_tol: 1e-13 }
    }
}

/// Bell orbit through `(0,0)` and `(d,0)` by shooting on the launch angle.
pub fn find_bell_orbit(energy: f64, params: &SystemParams, search: &OrbitSearch) -> Result<PeriodicOrbit, ClassicalError> {
    params.validate()?;
    let opts = FlowOptions::default();
    let miss = |angle: f64| -> Result<f64, ClassicalError> {
        match shoot(params, energy, angle, &opts)? {
            Some(y) => Ok(y),
            None => Err(ClassicalError::OrbitNotFound(RootError::NoBracket {
                lo: search.angle_lo,
                hi: search.angle_hi,
                flo: f64::NAN,
                fhi: f64::NAN,
            })),
        }
    };
    let angle = brent(miss, search.angle_lo, search.angle_hi, search.angle_tol, 200)?;
    let start = launch(params, energy, angle)?;
    let (end1, len1, w1) = advance_to_wall(params, start, &opts)?;
    let (end2, len2, w2) = advance_to_wall(params, reflect(end1), &opts)?;
    if w1 != Wall::Right || w2 != Wall::Left {
        return Err(ClassicalError::NotClosed(f64::NAN));
    }
    let closure_error = end2.pos().norm();
    if closure_error > 1e-6 * params.d {
        return Err(ClassicalError::NotClosed(closure_error));
    }
    let mut arcs = Vec::with_capacity(2);
    let mut reflections = Vec::with_capacity(2);
    for (launch_state, len, end, wall) in [(start, len1, end1, w1), (reflect(end1), len2, end2, w2)] {
        let (s, samples) = trace_arclength(params, launch_state, 0.0, len, search.samples_per_arc, opts.tol)?;
        let mut arc = build_arc(s, samples, params, energy)?;
        let theta = wall.incidence_angle(end.vel());
        if theta.abs() > 0.5 * std::f64::consts::PI - 1e-6 {
            return Err(ClassicalError::DegenerateOrbit(theta));
        }
        arc.end_angle = Some(theta);
        reflections.push(Reflection { position: end.pos(), wall, angle: theta });
        arcs.push(arc);
    }
    let area = arcs.iter().map(|a| a.samples.last().unwrap().swept_area).sum();
    Ok(PeriodicOrbit {
        energy,
        launch_angle: angle,
        period: end2.t,
        length: len1 + len2,
        signed_area: area,
        closure_error,
        arcs,
        reflections,
    })
}

impl PeriodicOrbit {
    /// Birkhoff coordinates `(y, p_y)` of the left-wall reflection.
    pub fn birkhoff_point(&self, params: &SystemParams) -> (f64, f64) {
        let st = self.arcs[0].start();
        (st.y, params.mass * st.vy)
    }

    pub fn apex(&self) -> Vec2 {
        self.arcs[0]
            .samples
            .iter()
            .map(|s| s.state.pos())
            .max_by(|a, b| a.y.abs().total_cmp(&b.y.abs()))
            .unwrap_or_default()
    }

    pub fn loop_action(&self) -> f64 {
        self.arcs.iter().map(|a| a.samples.last().unwrap().action).sum()
    }
}

/// State entering the strip from the left wall at Birkhoff point `(y, p_y)`.
pub fn birkhoff_state(params: &SystemParams, energy: f64, y: f64, py: f64) -> Result<PhaseState, ClassicalError> {
    let a = params.momentum(energy, y).ok_or(ClassicalError::SeedOutside(y, py))?;
    let px2 = a * a - py * py;
    if px2 < 0.0 {
        return Err(ClassicalError::SeedOutside(y, py));
    }
    Ok(PhaseState { x: 0.0, y, vx: px2.sqrt() / params.mass, vy: py / params.mass, t: 0.0 })
}

/// Return map to the left wall in Birkhoff coordinates.
pub fn return_map(params: &SystemParams, energy: f64, y: f64, py: f64) -> Result<(f64, f64), ClassicalError> {
    let opts = FlowOptions::default();
    let mut st = birkhoff_state(params, energy, y, py)?;
    loop {
        let (hit, _, wall) = advance_to_wall(params, st, &opts)?;
        if wall == Wall::Left {
            return Ok((hit.y, params.mass * hit.vy));
        }
        st = reflect(hit);
    }
}

/// Birkhoff section: `n_bounces` successive left-wall points for each seed.
pub fn poincare_section(
    energy: f64,
    params: &SystemParams,
    seeds: &[(f64, f64)],
    n_bounces: usize,
) -> Result<Vec<Vec<(f64, f64)>>, ClassicalError> {
    use rayon::prelude::*;
    for &(y, p) in seeds {
        birkhoff_state(params, energy, y, p)?;
    }
    seeds
        .par_iter()
        .map(|&(y0, p0)| {
            let mut pts = Vec::with_capacity(n_bounces);
            let (mut y, mut p) = (y0, p0);
            for _ in 0..n_bounces {
                let (yn, pn) = return_map(params, energy, y, p)?;
                pts.push((yn, pn));
                y = yn;
                p = pn;
            }
            Ok(pts)
        })
        .collect()
}
