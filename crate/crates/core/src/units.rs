//! Physical constants, the Cartesian vector type, particle species and
//! trajectory samples. Everything is SI internally; conversions from mm, meV
//! and amu happen at the boundary through the helpers here.

use alloc::format;
use alloc::string::String;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};


use crate::error::{invalid, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Elementary charge (exact, SI 2019), C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Unified atomic mass unit (CODATA 2018), kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron rest mass (CODATA 2018), kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// One milli-electronvolt in joules.
pub const MEV: f64 = 1.602_176_634e-22;

pub const MM: f64 = 1.0e-3;
pub const US: f64 = 1.0e-6;

/// A Cartesian 3-vector. Positions in m, velocities in m/s, fields in V/m,
/// depending on context.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rejects vectors carrying NaN or infinite components.
    pub fn checked(self, what: &str) -> Result<Vec3> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(invalid(format!("{what} has non-finite components")))
        }
    }

    pub fn component(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

/// Cartesian axis tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::X,
            Axis::Y => Vec3::Y,
            Axis::Z => Vec3::Z,
        }
    }
}

/// A simulated charged particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
    pub label: String,
}

impl Species {
    pub fn new(mass: f64, charge: f64, label: impl Into<String>) -> Result<Species> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid("species mass must be positive"));
        }
        if charge == 0.0 || !charge.is_finite() {
            return Err(invalid("species charge must be non-zero"));
        }
        Ok(Species {
            mass,
            charge,
            label: label.into(),
        })
    }

    /// Singly charged ⁴⁰Ca⁺ at 40 u.
    pub fn calcium_ion() -> Species {
        Species {
            mass: 40.0 * ATOMIC_MASS_UNIT,
            charge: ELEMENTARY_CHARGE,
            label: String::from("40Ca+"),
        }
    }

    pub fn electron() -> Species {
        Species {
            mass: ELECTRON_MASS,
            charge: -ELEMENTARY_CHARGE,
            label: String::from("e-"),
        }
    }

    /// Charge-to-mass ratio, C/kg.
    #[inline]
    pub fn q_over_m(&self) -> f64 {
        self.charge / self.mass
    }

    /// Speed corresponding to a kinetic energy in joules.
    pub fn speed_for_energy(&self, kinetic_energy: f64) -> f64 {
        (2.0 * kinetic_energy / self.mass).sqrt()
    }

    pub fn kinetic_energy(&self, v: Vec3) -> f64 {
        0.5 * self.mass * v.norm_squared()
    }
}

/// Builds a species from a mass in unified atomic mass units and a charge in
/// units of the elementary charge.
pub fn species_from_amu(amu: f64, charge_units: i32) -> Result<Species> {
    if !(amu > 0.0 && amu.is_finite()) {
        return Err(invalid(format!("mass must be positive, got {amu} u")));
    }
    if charge_units == 0 {
        return Err(invalid("charge state must be non-zero"));
    }
    Species::new(
        amu * ATOMIC_MASS_UNIT,
        charge_units as f64 * ELEMENTARY_CHARGE,
        format!("{amu} u, {charge_units:+}e"),
    )
}

/// One sample of an ion path: time, position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrajectoryState {
    /// s
    pub t: f64,
    /// m
    pub r: Vec3,
    /// m/s
    pub v: Vec3,
}

impl TrajectoryState {
    pub fn at_rest(r: Vec3) -> Self {
        TrajectoryState {
            t: 0.0,
            r,
            v: Vec3::ZERO,
        }
    }
}

/// Unit vector for a launch direction given azimuth (from +x towards +y) and
/// declination (from +z), both in degrees.
pub fn direction_from_angles(azimuth_deg: f64, declination_deg: f64) -> Vec3 {
    let (az, dec) = (azimuth_deg.to_radians(), declination_deg.to_radians());
    Vec3::new(dec.sin() * az.cos(), dec.sin() * az.sin(), dec.cos())
}
