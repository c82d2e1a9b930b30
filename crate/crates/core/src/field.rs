//! The `FieldSource` abstraction shared by analytic wire sets, solved grids
//! and the simple reference fields used as test oracles.

use crate::error::Result;
use crate::units::Vec3;

/// Where a point sits relative to a field model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Free,
    /// Inside (or on the axis of) an electrode.
    Electrode,
    /// Outside the region where the model is defined.
    Outside,
}

/// Anything that yields an electrostatic potential and field.
pub trait FieldSource: Send + Sync {
    /// Potential in volts.
    fn potential(&self, r: Vec3) -> Result<f64>;

    /// Electric field `-∇Φ` in V/m.
    fn efield(&self, r: Vec3) -> Result<Vec3>;

    fn locate(&self, r: Vec3) -> Location;
}

impl<T: FieldSource + ?Sized> FieldSource for &T {
    fn potential(&self, r: Vec3) -> Result<f64> {
        (**self).potential(r)
    }
    fn efield(&self, r: Vec3) -> Result<Vec3> {
        (**self).efield(r)
    }
    fn locate(&self, r: Vec3) -> Location {
        (**self).locate(r)
    }
}

impl<T: FieldSource + ?Sized> FieldSource for alloc::sync::Arc<T> {
    fn potential(&self, r: Vec3) -> Result<f64> {
        (**self).potential(r)
    }
    fn efield(&self, r: Vec3) -> Result<Vec3> {
        (**self).efield(r)
    }
    fn locate(&self, r: Vec3) -> Location {
        (**self).locate(r)
    }
}

/// Homogeneous field, `Φ = -E·r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub e: Vec3,
}

impl UniformField {
    pub fn new(e: Vec3) -> Self {
        UniformField { e }
    }
}

impl FieldSource for UniformField {
    fn potential(&self, r: Vec3) -> Result<f64> {
        Ok(-self.e.dot(r))
    }
    fn efield(&self, _r: Vec3) -> Result<Vec3> {
        Ok(self.e)
    }
    fn locate(&self, _r: Vec3) -> Location {
        Location::Free
    }
}

/// Ideal Penning quadrupole `Φ = c0 + c·((x-x0)² + (y-y0)² - 2(z-z0)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupoleField {
    pub center: Vec3,
    pub c0: f64,
    /// V/m²
    pub c_quad: f64,
}

impl FieldSource for QuadrupoleField {
    fn potential(&self, r: Vec3) -> Result<f64> {
        let d = r - self.center;
        Ok(self.c0 + self.c_quad * (d.x * d.x + d.y * d.y - 2.0 * d.z * d.z))
    }
    fn efield(&self, r: Vec3) -> Result<Vec3> {
        let d = r - self.center;
        Ok(Vec3::new(-2.0 * d.x, -2.0 * d.y, 4.0 * d.z) * self.c_quad)
    }
    fn locate(&self, _r: Vec3) -> Location {
        Location::Free
    }
}

/// A field multiplied by a constant voltage scale.
#[derive(Debug, Clone)]
pub struct Scaled<F> {
    pub inner: F,
    pub scale: f64,
}

impl<F: FieldSource> FieldSource for Scaled<F> {
    fn potential(&self, r: Vec3) -> Result<f64> {
        Ok(self.scale * self.inner.potential(r)?)
    }
    fn efield(&self, r: Vec3) -> Result<Vec3> {
        Ok(self.inner.efield(r)? * self.scale)
    }
    fn locate(&self, r: Vec3) -> Location {
        self.inner.locate(r)
    }
}

/// Second derivative `∂²Φ/∂z²` by a central difference of step `dz`.
pub fn axial_curvature<F: FieldSource + ?Sized>(field: &F, r: Vec3, dz: f64) -> Result<f64> {
    let up = field.potential(r + Vec3::Z * dz)?;
    let mid = field.potential(r)?;
    let down = field.potential(r - Vec3::Z * dz)?;
    Ok((up - 2.0 * mid + down) / (dz * dz))
}
