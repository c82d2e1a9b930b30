//! Electrode solids for the finite-difference solver.

use alloc::string::String;


use crate::error::{invalid, Result};
use crate::units::{Axis, Vec3};
#[allow(unused_imports)]
use num_traits::Float;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    /// Box of half-widths `half` centred on `center`.
    pub fn centered(center: Vec3, half: Vec3) -> Self {
        Aabb {
            min: center - half,
            max: center + half,
        }
    }

    pub fn contains(&self, r: Vec3) -> bool {
        r.x >= self.min.x
            && r.x <= self.max.x
            && r.y >= self.min.y
            && r.y <= self.max.y
            && r.z >= self.min.z
            && r.z <= self.max.z
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: Vec3::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y), self.min.z.min(o.min.z)),
            max: Vec3::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y), self.max.z.max(o.max.z)),
        }
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        let m = Vec3::new(margin, margin, margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Solid cylinder of the given thickness, centred on `center`.
    Disk {
        center: Vec3,
        radius: f64,
        thickness: f64,
        normal: Axis,
    },
    /// Flat ring `r_inner < ρ ≤ r_outer`; a disk with a hole is an annulus
    /// with a small inner radius.
    Annulus {
        center: Vec3,
        r_inner: f64,
        r_outer: f64,
        thickness: f64,
        normal: Axis,
    },
    /// Cylinder of `radius` around the segment `a`–`b`.
    Rod { a: Vec3, b: Vec3, radius: f64 },
    Torus {
        center: Vec3,
        major_radius: f64,
        minor_radius: f64,
        normal: Axis,
    },
    /// Axis-aligned slab.
    Block { bounds: Aabb },
}

/// Split `d` into the component along `normal` and the perpendicular distance.
#[inline]
fn split(d: Vec3, normal: Axis) -> (f64, f64) {
    match normal {
        Axis::X => (d.x, (d.y * d.y + d.z * d.z).sqrt()),
        Axis::Y => (d.y, (d.x * d.x + d.z * d.z).sqrt()),
        Axis::Z => (d.z, (d.x * d.x + d.y * d.y).sqrt()),
    }
}

fn flat_bounds(center: Vec3, radius: f64, thickness: f64, normal: Axis) -> Aabb {
    let mut half = Vec3::new(radius, radius, radius);
    match normal {
        Axis::X => half.x = 0.5 * thickness,
        Axis::Y => half.y = 0.5 * thickness,
        Axis::Z => half.z = 0.5 * thickness,
    }
    Aabb::centered(center, half)
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disk { radius, thickness, .. } => radius > 0.0 && thickness > 0.0,
            Shape::Annulus {
                r_inner,
                r_outer,
                thickness,
                ..
            } => r_inner >= 0.0 && r_inner < r_outer && thickness > 0.0,
            Shape::Rod { a, b, radius } => radius > 0.0 && (b - a).norm() > 0.0,
            Shape::Torus {
                major_radius,
                minor_radius,
                ..
            } => minor_radius > 0.0 && major_radius > minor_radius,
            Shape::Block { bounds } => {
                bounds.max.x > bounds.min.x && bounds.max.y > bounds.min.y && bounds.max.z > bounds.min.z
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("electrode dimensions must be strictly positive"))
        }
    }

    pub fn contains(&self, r: Vec3) -> bool {
        self.contains_within(r, 0.0)
    }

    /// Membership with every surface pushed outward by `eps`, so points that
    /// sit on a surface up to rounding are counted consistently.
    pub fn contains_within(&self, r: Vec3, eps: f64) -> bool {
        match *self {
            Shape::Disk {
                center,
                radius,
                thickness,
                normal,
            } => {
                let (along, rho) = split(r - center, normal);
                along.abs() <= 0.5 * thickness + eps && rho <= radius + eps
            }
            Shape::Annulus {
                center,
                r_inner,
                r_outer,
                thickness,
                normal,
            } => {
                let (along, rho) = split(r - center, normal);
                along.abs() <= 0.5 * thickness + eps && rho > r_inner - eps && rho <= r_outer + eps
            }
            Shape::Rod { a, b, radius } => {
                let ab = b - a;
                let t = ((r - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (r - (a + ab * t)).norm() <= radius + eps
            }
            Shape::Torus {
                center,
                major_radius,
                minor_radius,
                normal,
            } => {
                let (along, rho) = split(r - center, normal);
                let dr = rho - major_radius;
                (dr * dr + along * along).sqrt() <= minor_radius + eps
            }
            Shape::Block { bounds } => bounds.expanded(eps).contains(r),
        }
    }

    pub fn bounds(&self) -> Aabb {
        match *self {
            Shape::Disk {
                center,
                radius,
                thickness,
                normal,
            } => flat_bounds(center, radius, thickness, normal),
            Shape::Annulus {
                center,
                r_outer,
                thickness,
                normal,
                ..
            } => flat_bounds(center, r_outer, thickness, normal),
            Shape::Rod { a, b, radius } => {
                let m = Vec3::new(radius, radius, radius);
                Aabb::new(
                    Vec3::new(a.x.min(b.x), a.y.min(b.y), a.z.min(b.z)) - m,
                    Vec3::new(a.x.max(b.x), a.y.max(b.y), a.z.max(b.z)) + m,
                )
            }
            Shape::Torus {
                center,
                major_radius,
                minor_radius,
                normal,
            } => flat_bounds(center, major_radius + minor_radius, 2.0 * minor_radius, normal),
            Shape::Block { bounds } => bounds,
        }
    }
}

/// A conductor held at a fixed voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeSolid {
    pub shape: Shape,
    /// V
    pub voltage: f64,
    pub label: String,
}

impl ElectrodeSolid {
    pub fn new(shape: Shape, voltage: f64, label: impl Into<String>) -> Result<Self> {
        shape.validate()?;
        if !voltage.is_finite() {
            return Err(invalid("electrode voltage must be finite"));
        }
        Ok(ElectrodeSolid {
            shape,
            voltage,
            label: label.into(),
        })
    }

    /// A disk with a central hole of diameter `hole`, i.e. an annulus.
    pub fn disk_with_hole(
        center: Vec3,
        radius: f64,
        hole: f64,
        thickness: f64,
        normal: Axis,
        voltage: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        ElectrodeSolid::new(
            Shape::Annulus {
                center,
                r_inner: 0.5 * hole,
                r_outer: radius,
                thickness,
                normal,
            },
            voltage,
            label,
        )
    }

    pub fn contains(&self, r: Vec3) -> bool {
        self.shape.contains(r)
    }

    pub fn contains_within(&self, r: Vec3, eps: f64) -> bool {
        self.shape.contains_within(r, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::MM;

    #[test]
    fn annulus_excludes_hole() {
        let s = Shape::Annulus {
            center: Vec3::ZERO,
            r_inner: 0.5 * MM,
            r_outer: 2.0 * MM,
            thickness: 0.4 * MM,
            normal: Axis::Z,
        };
        assert!(!s.contains(Vec3::ZERO));
        assert!(s.contains(Vec3::new(1.0 * MM, 0.0, 0.1 * MM)));
        assert!(!s.contains(Vec3::new(1.0 * MM, 0.0, 0.3 * MM)));
        assert!(!s.contains(Vec3::new(2.1 * MM, 0.0, 0.0)));
    }

    #[test]
    fn torus_and_rod_membership() {
        let t = Shape::Torus {
            center: Vec3::ZERO,
            major_radius: 10.0 * MM,
            minor_radius: 0.5 * MM,
            normal: Axis::Z,
        };
        assert!(t.contains(Vec3::new(0.0, 10.2 * MM, 0.2 * MM)));
        assert!(!t.contains(Vec3::ZERO));
        let r = Shape::Rod {
            a: Vec3::new(-1.0, 0.0, 0.0),
            b: Vec3::new(1.0, 0.0, 0.0),
            radius: 0.5 * MM,
        };
        assert!(r.contains(Vec3::new(0.3, 0.4 * MM, 0.0)));
        assert!(!r.contains(Vec3::new(1.1, 0.0, 0.0)));
    }

    #[test]
    fn invalid_dimensions_rejected() {
        let bad = Shape::Annulus {
            center: Vec3::ZERO,
            r_inner: 2.0,
            r_outer: 1.0,
            thickness: 0.1,
            normal: Axis::Z,
        };
        assert!(ElectrodeSolid::new(bad, 1.0, "a").is_err());
        let flat = Shape::Disk {
            center: Vec3::ZERO,
            radius: 1.0,
            thickness: 0.0,
            normal: Axis::Z,
        };
        assert!(ElectrodeSolid::new(flat, 1.0, "d").is_err());
    }
}
