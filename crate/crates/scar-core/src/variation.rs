//! Linear stability of the bell orbit: equations in variation along arcs,
//! wall reflection matrices, monodromy, Floquet solutions and focal points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{Arc, PeriodicOrbit};
use crate::model::SystemParams;
use crate::numerics::{brent, hermite_cubic, integrate_to, OdeError, RootError, Tolerance, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VariationError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("grazing incidence: reflection angle {0} rad")]
    Grazing(f64),
    #[error("marginal orbit (trace {0}): Floquet eigenvectors are degenerate")]
    Marginal(f64),
    #[error("focal point refinement failed: {0}")]
    Focal(#[from] RootError),
    #[error("orbit has {0} arcs but {1} reflections")]
    Mismatch(usize, usize),
}

/// Real 2x2 matrix acting on `(z, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [v[0] * m[0][0] + v[1] * m[0][1], v[0] * m[1][0] + v[1] * m[1][1]]
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        let mut c = [[0.0; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cij) in row.iter_mut().enumerate() {
                *cij = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(c)
    }
}

/// `[[-1, 0], [-2 w_c tan(theta), -1]]`.
pub fn reflection_matrix(theta: f64, omega_c: f64) -> Result<Mat2, VariationError> {
    if !(theta.abs() < 0.5 * std::f64::consts::PI - 1e-9) {
        return Err(VariationError::Grazing(theta));
    }
    Ok(Mat2([[-1.0, 0.0], [-2.0 * omega_c * theta.tan(), -1.0]]))
}

/// A solution `(z, p)` of the equations in variation sampled on one arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationPair {
    pub s: Vec<f64>,
    pub z: Vec<Complex64>,
    pub p: Vec<Complex64>,
}

impl VariationPair {
    pub fn last(&self) -> [Complex64; 2] {
        let n = self.z.len() - 1;
        [self.z[n], self.p[n]]
    }
}

/// `z' = p/a`, `p' = -a d z` with coefficient functions of `s`, sampled on `s_grid`.
pub fn integrate_variation_with<A, D>(
    a: A,
    d: D,
    s_grid: &[f64],
    init: [Complex64; 2],
    tol: Tolerance,
) -> Result<VariationPair, VariationError>
where
    A: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let rhs = |s: f64, y: &[f64; 4]| {
        let (aa, dd) = (a(s), d(s));
        [y[1] / aa, -aa * dd * y[0], y[3] / aa, -aa * dd * y[2]]
    };
    let mut y = [init[0].re, init[1].re, init[0].im, init[1].im];
    let mut out = VariationPair { s: s_grid.to_vec(), z: Vec::new(), p: Vec::new() };
    let mut h = 0.01;
    for (k, &s) in s_grid.iter().enumerate() {
        if k > 0 {
            let (yn, hn) = integrate_to(&rhs, s_grid[k - 1], y, s, h, tol)?;
            y = yn;
            h = hn;
        }
        out.z.push(Complex64::new(y[0], y[2]));
        out.p.push(Complex64::new(y[1], y[3]));
    }
    Ok(out)
}

/// Solution along an arc from the fundamental matrix integrated with the orbit.
pub fn integrate_variation(arc: &Arc, init: [Complex64; 2]) -> VariationPair {
    let mut out = VariationPair { s: arc.s.clone(), z: Vec::with_capacity(arc.s.len()), p: Vec::with_capacity(arc.s.len()) };
    for smp in &arc.samples {
        let [z, p] = Mat2(smp.fundamental).apply(init);
        out.z.push(z);
        out.p.push(p);
    }
    out
}

pub fn arc_fundamental(arc: &Arc) -> Mat2 {
    Mat2(arc.samples[arc.samples.len() - 1].fundamental)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    pub matrix: Mat2,
    pub trace: f64,
    /// `(re, im)` of both eigenvalues, larger modulus (or positive phase) first.
    pub eigenvalues: [(f64, f64); 2],
    pub classification: Stability,
    /// Dimensionless Lyapunov exponent `ln |Lambda+|`.
    pub lambda: Option<f64>,
    /// Floquet phase in `[0, 2 pi)`.
    pub phi: Option<f64>,
    /// Lyapunov exponent per unit time.
    pub lambda_t: Option<f64>,
    /// Candidate phases reported for marginal orbits.
    pub marginal_phases: Vec<f64>,
}

pub const MARGINAL_TOL: f64 = 1e-6;

impl MonodromyData {
    pub fn from_matrix(matrix: Mat2, period: f64) -> Self {
        let tr = matrix.trace();
        let disc = 0.25 * tr * tr - matrix.det();
        let half = 0.5 * tr;
        let mut md = MonodromyData {
            matrix,
            trace: tr,
            eigenvalues: [(half, 0.0); 2],
            classification: Stability::Marginal,
            lambda: None,
            phi: None,
            lambda_t: None,
            marginal_phases: Vec::new(),
        };
        if (tr.abs() - 2.0).abs() <= MARGINAL_TOL {
            md.lambda = Some(0.0);
            md.lambda_t = Some(0.0);
            md.marginal_phases = vec![if tr > 0.0 { 0.0 } else { std::f64::consts::PI }];
        } else if tr.abs() > 2.0 {
            let r = disc.sqrt();
            let (big, small) = if tr > 0.0 { (half + r, half - r) } else { (half - r, half + r) };
            md.eigenvalues = [(big, 0.0), (small, 0.0)];
            md.classification = Stability::Unstable;
            let lam = big.abs().ln();
            md.lambda = Some(lam);
            md.lambda_t = Some(lam / period);
        } else {
            let r = (-disc).sqrt();
            md.eigenvalues = [(half, r), (half, -r)];
            md.classification = Stability::Stable;
            md.phi = Some(r.atan2(half).rem_euclid(std::f64::consts::TAU));
        }
        md
    }

    pub fn stretching(&self) -> f64 {
        let (re, im) = self.eigenvalues[0];
        re.hypot(im)
    }
}

/// Reflection matrices at the end of each arc, in orbit order.
pub fn orbit_reflections(orbit: &PeriodicOrbit, params: &SystemParams) -> Result<Vec<Mat2>, VariationError> {
    if orbit.arcs.len() != orbit.reflections.len() {
        return Err(VariationError::Mismatch(orbit.arcs.len(), orbit.reflections.len()));
    }
    orbit.reflections.iter().map(|r| reflection_matrix(r.angle, params.cyclotron())).collect()
}

/// `M = R M2 R M1`, starting just after the left-wall reflection.
pub fn monodromy_matrix(orbit: &PeriodicOrbit, params: &SystemParams) -> Result<Mat2, VariationError> {
    let refl = orbit_reflections(orbit, params)?;
    Ok(orbit.arcs.iter().zip(&refl).fold(Mat2::IDENTITY, |m, (arc, r)| *r * arc_fundamental(arc) * m))
}

pub fn monodromy_classify(orbit: &PeriodicOrbit, params: &SystemParams) -> Result<MonodromyData, VariationError> {
    Ok(MonodromyData::from_matrix(monodromy_matrix(orbit, params)?, orbit.period))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalPoint {
    pub arc: usize,
    pub s: f64,
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalCensus {
    pub points: Vec<FocalPoint>,
    pub alpha: usize,
}

/// Floquet pair along the orbit with the derived beam data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicSolutions {
    /// One pair per arc; continuous across walls through the reflection matrices.
    pub z: Vec<VariationPair>,
    pub z_bar: Vec<VariationPair>,
    /// `w = p z_bar - p_bar z`.
    pub wronskian: Complex64,
    pub gamma: Vec<Vec<Complex64>>,
    pub gamma_bar: Vec<Vec<Complex64>>,
    pub focal: FocalCensus,
    /// Floquet multipliers of `z` and `z_bar`.
    pub multipliers: [Complex64; 2],
}

fn eigenvector(m: &Mat2, lam: Complex64) -> [Complex64; 2] {
    let a = &m.0;
    // (M - lam) v = 0 from whichever row is better conditioned.
    let r0 = (Complex64::from(a[0][0]) - lam).norm() + a[0][1].abs();
    let r1 = a[1][0].abs() + (Complex64::from(a[1][1]) - lam).norm();
    let v = if r0 >= r1 {
        [Complex64::from(a[0][1]), lam - a[0][0]]
    } else {
        [lam - a[1][1], Complex64::from(a[1][0])]
    };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

fn propagate(orbit: &PeriodicOrbit, refl: &[Mat2], init: [Complex64; 2]) -> (Vec<VariationPair>, [Complex64; 2]) {
    let mut v = init;
    let mut out = Vec::with_capacity(orbit.arcs.len());
    for (arc, r) in orbit.arcs.iter().zip(refl) {
        let pair = integrate_variation(arc, v);
        v = r.apply(pair.last());
        out.push(pair);
    }
    (out, v)
}

pub fn periodic_solutions(
    orbit: &PeriodicOrbit,
    params: &SystemParams,
    md: &MonodromyData,
) -> Result<PeriodicSolutions, VariationError> {
    let refl = orbit_reflections(orbit, params)?;
    let m = &md.matrix;
    let (l1, l2) = (
        Complex64::new(md.eigenvalues[0].0, md.eigenvalues[0].1),
        Complex64::new(md.eigenvalues[1].0, md.eigenvalues[1].1),
    );
    let (v, mut vb) = match md.classification {
        Stability::Marginal => return Err(VariationError::Marginal(md.trace)),
        Stability::Unstable => (eigenvector(m, l1), eigenvector(m, l2)),
        Stability::Stable => {
            let v = eigenvector(m, l1);
            (v, [v[0].conj(), v[1].conj()])
        }
    };
    let mut v = v;
    let w0 = v[1] * vb[0] - vb[1] * v[0];
    match md.classification {
        Stability::Unstable => {
            // Real solutions with w = 1.
            let rescale = |x: [Complex64; 2]| {
                let k = if x[0].norm() > x[1].norm() { x[0] } else { x[1] };
                let ph = k / k.norm();
                [x[0] / ph, x[1] / ph]
            };
            v = rescale(v);
            vb = rescale(vb);
            let w = (v[1] * vb[0] - vb[1] * v[0]).re;
            vb = [vb[0] / w, vb[1] / w];
        }
        _ => {
            // Im Gamma > 0 requires Im(p conj z) > 0, i.e. w/i > 0.
            if (w0 / Complex64::i()).re < 0.0 {
                std::mem::swap(&mut v, &mut vb);
            }
            let w = (v[1] * vb[0] - vb[1] * v[0]) / Complex64::i();
            let k = w.re.sqrt();
            v = [v[0] / k, v[1] / k];
            vb = [vb[0] / k, vb[1] / k];
        }
    }
    let (z, end) = propagate(orbit, &refl, v);
    let (z_bar, end_bar) = propagate(orbit, &refl, vb);
    let mult = |st: [Complex64; 2], e: [Complex64; 2]| {
        if st[0].norm() > st[1].norm() {
            e[0] / st[0]
        } else {
            e[1] / st[1]
        }
    };
    let wronskian = v[1] * vb[0] - vb[1] * v[0];
    let gamma = z.iter().map(|pr| pr.p.iter().zip(&pr.z).map(|(p, z)| p / z).collect()).collect();
    let gamma_bar = z_bar.iter().map(|pr| pr.p.iter().zip(&pr.z).map(|(p, z)| p / z).collect()).collect();
    let focal = if md.classification == Stability::Unstable {
        focal_census(orbit, &z, &z_bar)?
    } else {
        FocalCensus { points: Vec::new(), alpha: 0 }
    };
    Ok(PeriodicSolutions {
        multipliers: [mult(v, end), mult(vb, end_bar)],
        z,
        z_bar,
        wronskian,
        gamma,
        gamma_bar,
        focal,
    })
}

/// Zeros of the real product `z z_bar` along one period.
pub fn focal_census(orbit: &PeriodicOrbit, z: &[VariationPair], z_bar: &[VariationPair]) -> Result<FocalCensus, VariationError> {
    let mut points = Vec::new();
    for (k, ((arc, a), b)) in orbit.arcs.iter().zip(z).zip(z_bar).enumerate() {
        let f: Vec<f64> = a.z.iter().zip(&b.z).map(|(x, y)| (x * y).re).collect();
        let df: Vec<f64> = (0..f.len())
            .map(|i| ((a.p[i] * b.z[i] + a.z[i] * b.p[i]) / arc.momentum[i]).re)
            .collect();
        let h = arc.s[1] - arc.s[0];
        for i in 0..f.len() - 1 {
            if f[i] == 0.0 && i > 0 {
                points.push(focal_at(arc, k, i, 0.0));
            }
            if f[i] * f[i + 1] >= 0.0 {
                continue;
            }
            let t = brent::<RootError, _>(
                |t| Ok(hermite_cubic(f[i], df[i], f[i + 1], df[i + 1], h, t)),
                0.0,
                h,
                1e-14 * h,
                100,
            )?;
            points.push(focal_at(arc, k, i, t));
        }
    }
    let alpha = points.len();
    Ok(FocalCensus { points, alpha })
}

fn focal_at(arc: &Arc, k: usize, i: usize, t: f64) -> FocalPoint {
    let h = arc.s[1] - arc.s[0];
    let (p0, p1) = (arc.samples[i].state.pos(), arc.samples[i + 1].state.pos());
    let position = hermite_cubic(p0, arc.tangent[i], p1, arc.tangent[i + 1], h, t);
    FocalPoint { arc: k, s: arc.s[i] + t, position }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{find_bell_orbit, return_map, OrbitSearch};
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    fn orbit_at(e: f64) -> (SystemParams, PeriodicOrbit) {
        let p = SystemParams::default();
        let o = find_bell_orbit(e, &p, &OrbitSearch::default()).unwrap();
        (p, o)
    }

    #[test]
    fn constant_oscillator() {
        let (a, d) = (2.0, 0.25);
        let s: Vec<f64> = (0..50).map(|i| 0.2 * i as f64).collect();
        let vp = integrate_variation_with(|_| a, |_| d, &s, [c(1.0), c(0.0)], Tolerance::default()).unwrap();
        for (i, &si) in s.iter().enumerate() {
            assert!((vp.z[i].re - (0.5 * si).cos()).abs() < 1e-10);
            assert!((vp.p[i].re + a * 0.5 * (0.5 * si).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperbolic_growth() {
        let (a, k) = (1.5, 0.7);
        let s: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let vp = integrate_variation_with(|_| a, |_| -k * k, &s, [c(1.0), c(a * k)], Tolerance::default()).unwrap();
        for (i, &si) in s.iter().enumerate() {
            assert!((vp.z[i].re / (k * si).exp() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn wronskian_is_constant_for_variable_coefficients() {
        let a = |s: f64| 2.0 + (0.3 * s).sin();
        let d = |s: f64| 0.4 * (0.7 * s).cos() - 0.1;
        let s: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
        let tol = Tolerance::default();
        let u = integrate_variation_with(a, d, &s, [c(1.0), c(0.3)], tol).unwrap();
        let v = integrate_variation_with(a, d, &s, [c(-0.2), c(1.0)], tol).unwrap();
        let w0 = u.p[0] * v.z[0] - v.p[0] * u.z[0];
        for i in 0..s.len() {
            let w = u.p[i] * v.z[i] - v.p[i] * u.z[i];
            assert!((w / w0 - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn reflection_matrix_values() {
        assert_eq!(reflection_matrix(0.0, 3.0).unwrap(), Mat2([[-1.0, 0.0], [0.0, -1.0]]));
        let r = reflection_matrix(std::f64::consts::FRAC_PI_4, 1.0).unwrap();
        assert!((r.0[1][0] + 2.0).abs() < 1e-15);
        assert_eq!(r.det(), 1.0);
        assert!(matches!(reflection_matrix(1.5707963267, 1.0), Err(VariationError::Grazing(_))));
    }

    #[test]
    fn gamma_jumps_across_reflection() {
        // Gamma -> Gamma' with (z, p) -> (-z, -p - 2 w_c tan(theta) z).
        let r = reflection_matrix(std::f64::consts::FRAC_PI_4, 1.0).unwrap();
        let (z, p) = (c(0.7), c(1.9));
        let [z2, p2] = r.apply([z, p]);
        assert!(((p2 / z2 - p / z) - 2.0).norm() < 1e-14);
    }

    #[test]
    fn given_matrices_classify() {
        let md = MonodromyData::from_matrix(Mat2([[3.0, 1.0], [2.0, 1.0]]), 1.0);
        assert_eq!(md.classification, Stability::Unstable);
        assert!((md.stretching() - (2.0 + 3f64.sqrt())).abs() < 1e-14);
        assert!((md.lambda.unwrap() - 1.3169578969248166).abs() < 1e-12);
        let md = MonodromyData::from_matrix(Mat2([[0.0, 1.0], [-1.0, 0.0]]), 1.0);
        assert_eq!(md.classification, Stability::Stable);
        assert!((md.phi.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let md = MonodromyData::from_matrix(Mat2([[1.0, 1.0], [0.0, 1.0]]), 1.0);
        assert_eq!(md.classification, Stability::Marginal);
        assert_eq!(md.marginal_phases, vec![0.0]);
    }

    #[test]
    fn fundamental_matrix_is_unimodular_along_arcs() {
        let (_, o) = orbit_at(92.5);
        for arc in &o.arcs {
            for smp in &arc.samples {
                assert!((Mat2(smp.fundamental).det() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn fundamental_matrix_matches_interpolated_coefficients() {
        // Independent solve through cubic interpolation of a(s), d(s).
        let (_, o) = orbit_at(92.5);
        let arc = &o.arcs[0];
        let h = arc.s[1] - arc.s[0];
        let interp = |v: &[f64], s: f64| {
            let i = ((s / h) as usize).min(v.len() - 4).max(1);
            let t = s / h - i as f64;
            let (a, b, cc, d) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
            b + 0.5 * t * (cc - a + t * (2.0 * a - 5.0 * b + 4.0 * cc - d + t * (3.0 * (b - cc) + d - a)))
        };
        let grid: Vec<f64> = arc.s.iter().step_by(100).copied().collect();
        let vp = integrate_variation_with(
            |s| interp(&arc.momentum, s),
            |s| interp(&arc.d_coeff, s),
            &grid,
            [c(1.0), c(0.0)],
            Tolerance { rtol: 1e-10, atol: 1e-12 },
        )
        .unwrap();
        for (k, i) in (0..arc.s.len()).step_by(100).enumerate() {
            let f = arc.samples[i].fundamental;
            assert!((vp.z[k].re - f[0][0]).abs() < 1e-4 * (1.0 + f[0][0].abs()), "{i}");
        }
    }

    #[test]
    fn monodromy_trace_matches_return_map_jacobian() {
        for (e, frozen) in [(80.0, 4.75817), (95.0, 5.37086)] {
            let (p, o) = orbit_at(e);
            let md = monodromy_classify(&o, &p).unwrap();
            assert!((md.matrix.det() - 1.0).abs() < 1e-8);
            let (y0, p0) = o.birkhoff_point(&p);
            let h = 1e-6;
            let fd = |dy: f64, dp: f64| {
                let (a, b) = return_map(&p, e, y0 + dy, p0 + dp).unwrap();
                let (c0, d0) = return_map(&p, e, y0 - dy, p0 - dp).unwrap();
                ((a - c0) / (2.0 * h), (b - d0) / (2.0 * h))
            };
            let (j00, j10) = fd(h, 0.0);
            let (j01, j11) = fd(0.0, h);
            let tr_fd = j00 + j11;
            assert!((j00 * j11 - j01 * j10 - 1.0).abs() < 1e-5);
            assert!((md.trace - tr_fd).abs() < 1e-5, "E={e}: {} vs {tr_fd}", md.trace);
            assert!((md.trace - frozen).abs() < 1e-4, "E={e}: {}", md.trace);
        }
    }

    #[test]
    fn cyclic_reordering_preserves_trace() {
        let (p, o) = orbit_at(92.5);
        let r = orbit_reflections(&o, &p).unwrap();
        let m1 = arc_fundamental(&o.arcs[0]);
        let m2 = arc_fundamental(&o.arcs[1]);
        let a = r[1] * m2 * r[0] * m1;
        let b = r[0] * m1 * r[1] * m2;
        assert!((a.trace() - b.trace()).abs() < 1e-7);
    }

    #[test]
    fn floquet_solutions_of_the_bell_orbit() {
        let (p, o) = orbit_at(95.0);
        let md = monodromy_classify(&o, &p).unwrap();
        assert_eq!(md.classification, Stability::Unstable);
        assert!((md.stretching() - 5.178).abs() < 1e-3);
        let ps = periodic_solutions(&o, &p, &md).unwrap();
        assert!((ps.multipliers[0] - md.stretching()).norm() < 1e-6 * md.stretching());
        assert!((ps.multipliers[1] * ps.multipliers[0] - 1.0).norm() < 1e-6);
        assert!((ps.wronskian - 1.0).norm() < 1e-12);
        for k in 0..2 {
            for i in (0..ps.z[k].z.len()).step_by(37) {
                let (z, zb) = (ps.z[k].z[i], ps.z_bar[k].z[i]);
                assert!(z.im.abs() < 1e-12 && zb.im.abs() < 1e-12);
                let w = ps.z[k].p[i] * zb - ps.z_bar[k].p[i] * z;
                assert!((w - 1.0).norm() < 1e-8);
                if (z * zb).norm() > 1e-3 {
                    let lhs = ps.gamma[k][i] - ps.gamma_bar[k][i];
                    assert!((lhs - w / (z * zb)).norm() < 1e-9 * lhs.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn benchmark_focal_census() {
        let (p, o) = orbit_at(95.0);
        let md = monodromy_classify(&o, &p).unwrap();
        let ps = periodic_solutions(&o, &p, &md).unwrap();
        let fc = &ps.focal;
        assert_eq!(fc.alpha, 8);
        assert_eq!(fc.points.len(), fc.alpha);
        let d = p.d;
        let mut isolated = 0;
        let mut paired = 0;
        for f in &fc.points {
            let (x, y) = (f.position.x / d, f.position.y.abs() / d);
            if (x - 0.5).abs() < 0.03 && (y - 0.65).abs() < 0.1 {
                paired += 1;
            } else if ((x - 0.5).abs() - 0.15).abs() < 0.08 && (y - 0.5).abs() < 0.15 {
                isolated += 1;
            }
        }
        assert_eq!((isolated, paired), (4, 4), "{:?}", fc.points);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reflection_matrix_is_unimodular(theta in -1.5..1.5f64, wc in -3.0..3.0f64) {
            let r = reflection_matrix(theta, wc).unwrap();
            prop_assert_eq!(r.det(), 1.0);
            if wc == 0.0 {
                prop_assert_eq!(r * r, Mat2::IDENTITY);
            }
        }

        #[test]
        fn unstable_lambda_is_log_of_stretching(a in -5.0..5.0f64, b in -5.0..5.0f64, cc in 0.2..5.0f64) {
            // det 1 by construction: d = (1 + b c) / a.
            prop_assume!(a.abs() > 0.1);
            let m = Mat2([[a, b], [cc, (1.0 + b * cc) / a]]);
            let md = MonodromyData::from_matrix(m, 2.0);
            if md.classification == Stability::Unstable {
                let (l1, l2) = (md.eigenvalues[0].0, md.eigenvalues[1].0);
                prop_assert!((l1 * l2 - 1.0).abs() < 1e-9);
                prop_assert!((md.lambda.unwrap() - l1.abs().ln()).abs() < 1e-12);
                prop_assert!(md.lambda.unwrap() > 0.0);
            }
        }
    }
}
