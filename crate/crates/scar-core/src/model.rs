//! Strip resonator with parabolic confinement in a perpendicular magnetic field.
//!
//! Walls sit at `x = 0` and `x = d`; the confinement is `U(y) = m w0^2 y^2 / 2`
//! and the field points along `+z`. The force law is
//! `m dv/dt = e v x B - grad U`.

use serde::{Deserialize, Serialize};

use crate::numerics::Vec2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParam { name: &'static str, value: f64, reason: &'static str },
    #[error("normal vector has length {0}, expected 1")]
    NonUnitNormal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub hbar: f64,
    pub mass: f64,
    pub charge: f64,
    #[serde(rename = "b_field")]
    pub b: f64,
    pub omega0: f64,
    pub d: f64,
}

impl Default for SystemParams {
    /// The benchmark: natural units, `d = 10 l_B`, `w0 = 2 w_c`.
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0, charge: 1.0, b: 1.0, omega0: 2.0, d: 10.0 }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let checks: [(&'static str, f64, bool, &'static str); 5] = [
            ("hbar", self.hbar, self.hbar > 0.0, "must be positive"),
            ("mass", self.mass, self.mass > 0.0, "must be positive"),
            ("d", self.d, self.d > 0.0, "must be positive"),
            ("omega0", self.omega0, self.omega0 >= 0.0, "must be non-negative"),
            ("charge", self.charge, self.charge.is_finite(), "must be finite"),
        ];
        for (name, value, ok, reason) in checks {
            if !ok || !value.is_finite() {
                return Err(ModelError::InvalidParam { name, value, reason });
            }
        }
        if !self.b.is_finite() {
            return Err(ModelError::InvalidParam { name: "b_field", value: self.b, reason: "must be finite" });
        }
        Ok(())
    }

    /// Signed cyclotron frequency `eB/m`.
    pub fn cyclotron(&self) -> f64 {
        self.charge * self.b / self.mass
    }

    pub fn omega_c(&self) -> f64 {
        self.cyclotron().abs()
    }

    pub fn magnetic_length(&self) -> f64 {
        (self.hbar / (self.mass * self.omega_c())).sqrt()
    }

    /// Transverse frequency of the Landau-gauge channels.
    pub fn omega_eff(&self) -> f64 {
        self.omega_c().hypot(self.omega0)
    }

    pub fn confinement(&self) -> ParabolicChannel {
        ParabolicChannel { mass: self.mass, omega0: self.omega0 }
    }

    /// Kinetic momentum magnitude `sqrt(2m(E - U))`, or `None` in a forbidden region.
    pub fn momentum(&self, energy: f64, y: f64) -> Option<f64> {
        let k = 2.0 * self.mass * (energy - self.confinement().value(Vec2::new(0.0, y)));
        (k >= 0.0).then(|| k.sqrt())
    }
}

/// Smooth scalar potential with value, gradient and Hessian.
pub trait Potential {
    fn value(&self, r: Vec2) -> f64;
    fn gradient(&self, r: Vec2) -> Vec2;
    /// Hessian as `[[uxx, uxy], [uxy, uyy]]`.
    fn hessian(&self, r: Vec2) -> [[f64; 2]; 2];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicChannel {
    pub mass: f64,
    pub omega0: f64,
}

impl ParabolicChannel {
    fn stiffness(&self) -> f64 {
        self.mass * self.omega0 * self.omega0
    }
}

impl Potential for ParabolicChannel {
    fn value(&self, r: Vec2) -> f64 {
        0.5 * self.stiffness() * r.y * r.y
    }

    fn gradient(&self, r: Vec2) -> Vec2 {
        Vec2::new(0.0, self.stiffness() * r.y)
    }

    fn hessian(&self, _r: Vec2) -> [[f64; 2]; 2] {
        [[0.0, 0.0], [0.0, self.stiffness()]]
    }
}

/// Taylor coefficients of the potential along a normal line: `u(n) ~ u0 + u1 n + u2 n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialJet {
    pub u0: f64,
    pub u1: f64,
    pub u2: f64,
}

impl PotentialJet {
    pub fn eval(&self, n: f64) -> f64 {
        self.u0 + n * (self.u1 + n * self.u2)
    }
}

/// `u1` is the normal derivative and `u2` half the second normal derivative.
pub fn potential_jets<P: Potential + ?Sized>(pot: &P, point: Vec2, normal: Vec2) -> Result<PotentialJet, ModelError> {
    let len = normal.norm();
    if !len.is_finite() || (len - 1.0).abs() > 1e-9 {
        return Err(ModelError::NonUnitNormal(len));
    }
    let h = pot.hessian(point);
    let hn = Vec2::new(h[0][0] * normal.x + h[0][1] * normal.y, h[1][0] * normal.x + h[1][1] * normal.y);
    Ok(PotentialJet {
        u0: pot.value(point),
        u1: pot.gradient(point).dot(normal),
        u2: 0.5 * normal.dot(hn),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn channel() -> ParabolicChannel {
        SystemParams::default().confinement()
    }

    #[test]
    fn jets_on_axis() {
        let j = potential_jets(&channel(), Vec2::new(3.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        assert_eq!((j.u0, j.u1, j.u2), (0.0, 0.0, 2.0));
    }

    #[test]
    fn jets_off_axis() {
        let j = potential_jets(&channel(), Vec2::new(3.0, 1.0), Vec2::new(0.0, 1.0)).unwrap();
        assert_eq!((j.u0, j.u1, j.u2), (2.0, 4.0, 2.0));
        let j = potential_jets(&channel(), Vec2::new(3.0, 1.0), Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!((j.u0, j.u1, j.u2), (2.0, 0.0, 0.0));
    }

    #[test]
    fn non_unit_normal_is_rejected() {
        let e = potential_jets(&channel(), Vec2::new(0.0, 0.0), Vec2::new(0.0, 2.0));
        assert_eq!(e, Err(ModelError::NonUnitNormal(2.0)));
    }

    #[test]
    fn benchmark_defaults() {
        let p = SystemParams::default();
        p.validate().unwrap();
        assert_eq!(p.omega_c(), 1.0);
        assert_eq!(p.magnetic_length(), 1.0);
        assert!((p.omega_eff() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn validation_names_the_field() {
        let p = SystemParams { mass: -1.0, ..Default::default() };
        assert!(matches!(p.validate(), Err(ModelError::InvalidParam { name: "mass", .. })));
    }

    proptest! {
        #[test]
        fn quadratic_reconstruction_is_exact(
            x in -5.0..15.0f64, y in -8.0..8.0f64, ang in 0.0..std::f64::consts::TAU, n in -2.0..2.0f64,
        ) {
            let pot = channel();
            let normal = Vec2::new(ang.cos(), ang.sin());
            let p = Vec2::new(x, y);
            let j = potential_jets(&pot, p, normal).unwrap();
            let direct = pot.value(p + normal * n);
            prop_assert!((j.eval(n) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            prop_assert!((j.u2 - 0.5 * pot.stiffness() * normal.y * normal.y).abs() < 1e-14);
        }
    }
}
