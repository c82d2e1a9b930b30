//! Closed-form potentials of infinite straight-wire traps and the ideal
//! Penning-trap motional frequencies.
//!
//! Every wire contributes `c · ln(R² / ρ²)`, where `ρ` is the distance from
//! the wire axis in the plane transverse to the wire and `R` is the radius at
//! which that wire's contribution vanishes. The six-wire and two-wire traps
//! are both expressed as a [`LogWireSet`].

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::error::{invalid, Error, Result};
use crate::field::{FieldSource, Location};
use crate::units::{Species, Vec3, MM};
#[allow(unused_imports)]
use num_traits::Float;

/// Direction a straight wire runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireAxis {
    ParallelToX,
    ParallelToY,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wire {
    pub axis: WireAxis,
    /// Offset in the in-plane coordinate transverse to the wire (y for an
    /// x-parallel wire, x for a y-parallel wire), m.
    pub transverse_offset: f64,
    pub z_offset: f64,
    /// Prefactor of `ln(R²/ρ²)`, V.
    pub coefficient: f64,
}

impl Wire {
    /// Transverse displacement (t, z) of `r` from the wire axis.
    #[inline]
    fn displacement(&self, r: Vec3) -> (f64, f64) {
        let t = match self.axis {
            WireAxis::ParallelToX => r.y,
            WireAxis::ParallelToY => r.x,
        };
        (t - self.transverse_offset, r.z - self.z_offset)
    }
}

/// A superposition of infinitely long straight wires.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWireSet {
    wires: Vec<Wire>,
    reference_radius: f64,
    /// Points closer than this to any axis are inside a wire.
    guard_radius: f64,
}

impl LogWireSet {
    pub fn new(wires: Vec<Wire>, reference_radius: f64, guard_radius: f64) -> Result<Self> {
        if !(guard_radius > 0.0) {
            return Err(invalid("wire guard radius must be positive"));
        }
        let largest = wires
            .iter()
            .map(|w| w.transverse_offset.abs().max(w.z_offset.abs()))
            .fold(0.0, f64::max);
        if !(reference_radius > 10.0 * largest) || !reference_radius.is_finite() {
            return Err(invalid(format!(
                "reference radius {reference_radius} m must exceed 10× the largest wire offset ({largest} m)"
            )));
        }
        Ok(LogWireSet {
            wires,
            reference_radius,
            guard_radius,
        })
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn reference_radius(&self) -> f64 {
        self.reference_radius
    }

    fn check(&self, r: Vec3) -> Result<()> {
        r.checked("evaluation point")?;
        let g2 = self.guard_radius * self.guard_radius;
        for w in &self.wires {
            let (t, z) = w.displacement(r);
            if t * t + z * z <= g2 {
                return Err(Error::SingularPoint(r));
            }
        }
        Ok(())
    }
}

impl FieldSource for LogWireSet {
    fn potential(&self, r: Vec3) -> Result<f64> {
        self.check(r)?;
        let r2 = self.reference_radius * self.reference_radius;
        Ok(self
            .wires
            .iter()
            .map(|w| {
                let (t, z) = w.displacement(r);
                w.coefficient * (r2 / (t * t + z * z)).ln()
            })
            .sum())
    }

    fn efield(&self, r: Vec3) -> Result<Vec3> {
        self.check(r)?;
        // -∇[c ln(R²/ρ²)] = 2c ρ⃗/ρ²
        let mut e = Vec3::ZERO;
        for w in &self.wires {
            let (t, z) = w.displacement(r);
            let k = 2.0 * w.coefficient / (t * t + z * z);
            match w.axis {
                WireAxis::ParallelToX => e.y += k * t,
                WireAxis::ParallelToY => e.x += k * t,
            }
            e.z += k * z;
        }
        Ok(e)
    }

    fn locate(&self, r: Vec3) -> Location {
        match self.check(r) {
            Ok(()) => Location::Free,
            Err(_) => Location::Electrode,
        }
    }
}

/// Geometry and drive of the six-wire trap: two crossed planes of three
/// parallel wires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixWireSpec {
    /// Wire pitch within a plane, m.
    pub d: f64,
    /// Half the separation of the two wire planes, m.
    pub z0: f64,
    /// Wire diameter, m.
    pub a: f64,
    /// Zero-potential reference radius, m.
    pub r_ref: f64,
    /// Central minus external wire potential, V.
    pub delta_v: f64,
}

impl SixWireSpec {
    /// The built prototype: 1 mm rods on a 3 mm pitch, planes 4 mm apart.
    pub fn prototype(delta_v: f64) -> Self {
        SixWireSpec {
            d: 3.0 * MM,
            z0: 2.0 * MM,
            a: 1.0 * MM,
            r_ref: 100.0 * MM,
            delta_v,
        }
    }

    fn wire_radius(&self) -> f64 {
        0.5 * self.a
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.z0 > 0.0 && self.a > 0.0) {
            return Err(invalid("six-wire pitch, half-gap and wire size must be positive"));
        }
        if !(self.wire_radius() < self.d / 5.0) {
            return Err(invalid(format!(
                "wire radius {} m is not small against the pitch {} m",
                self.wire_radius(),
                self.d
            )));
        }
        if !self.delta_v.is_finite() {
            return Err(invalid("ΔV must be finite"));
        }
        Ok(())
    }

    /// `ln(d² / 2ρ²)` with ρ the wire radius.
    pub fn log_normalisation(&self) -> f64 {
        let rho = self.wire_radius();
        (self.d * self.d / (2.0 * rho * rho)).ln()
    }

    pub fn wire_set(&self) -> Result<LogWireSet> {
        self.validate()?;
        let outer = -self.delta_v / (2.0 * self.log_normalisation());
        let mut wires = Vec::with_capacity(6);
        // Lower plane (z = -z0): wires along y, offset in x.
        // Upper plane (z = +z0): wires along x, offset in y.
        for (axis, z_offset) in [
            (WireAxis::ParallelToY, -self.z0),
            (WireAxis::ParallelToX, self.z0),
        ] {
            for (offset, c) in [(-self.d, outer), (0.0, -outer), (self.d, outer)] {
                wires.push(Wire {
                    axis,
                    transverse_offset: offset,
                    z_offset,
                    coefficient: c,
                });
            }
        }
        LogWireSet::new(wires, self.r_ref, self.wire_radius())
    }
}

/// Potential of the six-wire trap at `r`.
pub fn six_wire_potential(spec: &SixWireSpec, r: Vec3) -> Result<f64> {
    spec.wire_set()?.potential(r)
}

/// Two crossed wires at `z = ±z0`, both held at `v_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoWireSpec {
    /// Wire diameter, m.
    pub a: f64,
    pub z0: f64,
    pub r_ref: f64,
    pub v_plus: f64,
}

impl TwoWireSpec {
    /// 0.5 mm wires, 4 mm apart, +4 V.
    pub fn prototype() -> Self {
        TwoWireSpec {
            a: 0.5 * MM,
            z0: 2.0 * MM,
            r_ref: 100.0 * MM,
            v_plus: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.z0 > 0.0 && self.r_ref > 0.0) {
            return Err(invalid("two-wire dimensions must be positive"));
        }
        if !(self.r_ref * self.r_ref > self.a * self.z0) {
            return Err(invalid("R² must exceed a·z0"));
        }
        if !self.v_plus.is_finite() {
            return Err(invalid("V+ must be finite"));
        }
        Ok(())
    }

    /// `ln(R² / a z0)`.
    pub fn log_normalisation(&self) -> f64 {
        (self.r_ref * self.r_ref / (self.a * self.z0)).ln()
    }

    pub fn wire_set(&self) -> Result<LogWireSet> {
        self.validate()?;
        let c = self.v_plus / self.log_normalisation();
        let wires = alloc::vec![
            Wire {
                axis: WireAxis::ParallelToX,
                transverse_offset: 0.0,
                z_offset: self.z0,
                coefficient: c,
            },
            Wire {
                axis: WireAxis::ParallelToY,
                transverse_offset: 0.0,
                z_offset: -self.z0,
                coefficient: c,
            },
        ];
        LogWireSet::new(wires, self.r_ref, 0.5 * self.a)
    }
}

pub fn two_wire_potential(spec: &TwoWireSpec, r: Vec3) -> Result<f64> {
    spec.wire_set()?.potential(r)
}

/// Constant and quadrupole coefficient of the second-order expansion of the
/// two-wire potential about the origin: `Φ ≈ phi0 + c·(x² + y² - 2z²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticExpansion {
    pub phi0: f64,
    /// V/m²
    pub curvature_coefficient: f64,
}

pub fn two_wire_quadratic(spec: &TwoWireSpec) -> Result<QuadraticExpansion> {
    spec.validate()?;
    let l = spec.log_normalisation();
    Ok(QuadraticExpansion {
        phi0: 2.0 * spec.v_plus / l * (spec.r_ref * spec.r_ref / (spec.z0 * spec.z0)).ln(),
        curvature_coefficient: -spec.v_plus / (spec.z0 * spec.z0 * l),
    })
}

/// Axial angular frequency of an ion at the two-wire minimum,
/// `ω_z² = qΦ_zz/m = 4qV₊ / (m z0² ln(R²/a z0))`.
pub fn axial_frequency_two_wire(spec: &TwoWireSpec, s: &Species) -> Result<f64> {
    spec.validate()?;
    let qv = s.charge * spec.v_plus;
    let l = spec.log_normalisation();
    if !(qv > 0.0) || !(l > 0.0) {
        return Err(Error::NoAxialConfinement(qv));
    }
    Ok((4.0 * qv / (s.mass * spec.z0 * spec.z0 * l)).sqrt())
}

/// `|q|B/m` in rad/s.
pub fn cyclotron_frequency(s: &Species, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("magnetic field must be positive, got {b} T")));
    }
    Ok(s.charge.abs() * b / s.mass)
}

/// `2π m / (|q| B)` in seconds.
pub fn cyclotron_period(s: &Species, b: f64) -> Result<f64> {
    Ok(2.0 * PI / cyclotron_frequency(s, b)?)
}

/// Axial, free cyclotron, modified cyclotron and magnetron angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequencies {
    pub omega_z: f64,
    pub omega_c: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

/// Solves the radial eigenproblem of an ideal Penning trap,
/// `ω± = ω_c/2 ± √(ω_c²/4 − ω_z²/2)`.
pub fn mode_frequencies(omega_z: f64, omega_c: f64) -> Result<ModeFrequencies> {
    if !(omega_c > 0.0 && omega_z >= 0.0) || !omega_c.is_finite() || !omega_z.is_finite() {
        return Err(invalid("mode frequencies need ω_c > 0 and ω_z ≥ 0"));
    }
    let limit = 0.5 * omega_c * omega_c;
    let wz2 = omega_z * omega_z;
    let disc = 0.25 * omega_c * omega_c - 0.5 * wz2;
    if disc < -1e-12 * limit {
        return Err(Error::UnstableTrap {
            omega_z_sq: wz2,
            limit,
        });
    }
    let root = disc.max(0.0).sqrt();
    Ok(ModeFrequencies {
        omega_z,
        omega_c,
        omega_plus: 0.5 * omega_c + root,
        omega_minus: 0.5 * omega_c - root,
    })
}
