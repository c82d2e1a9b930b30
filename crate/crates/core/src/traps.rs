//! Builders for the wire, two-plate and ring-guide traps.

use alloc::format;
use alloc::vec::Vec;

use crate::analytic::{LogWireSet, SixWireSpec};
use crate::error::{invalid, Result};
use crate::field::FieldSource;
use crate::geometry::{Aabb, ElectrodeSolid, Shape};
use crate::units::{Axis, Vec3, MM};
#[allow(unused_imports)]
use num_traits::Float;

/// The six-wire trap as a field source.
pub fn build_six_wire(spec: &SixWireSpec) -> Result<LogWireSet> {
    spec.wire_set()
}

/// Points on the line `x = y = 0` in `[z_lo, z_hi]` where `∂Φ/∂z` changes
/// sign, refined by bisection. Segments that cross an electrode are skipped.
pub fn axial_stationary_points<F: FieldSource + ?Sized>(
    field: &F,
    x: f64,
    y: f64,
    z_lo: f64,
    z_hi: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if !(z_hi > z_lo) || samples < 2 {
        return Err(invalid("stationary-point scan needs z_hi > z_lo and ≥ 2 samples"));
    }
    let ez = |z: f64| field.efield(Vec3::new(x, y, z)).map(|e| e.z).ok();
    let step = (z_hi - z_lo) / (samples - 1) as f64;
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for n in 0..samples {
        let z = z_lo + n as f64 * step;
        let Some(e) = ez(z) else {
            prev = None;
            continue;
        };
        if let Some((zp, ep)) = prev {
            if e == 0.0 {
                roots.push(z);
            } else if ep.signum() != e.signum() && ep != 0.0 {
                let (mut a, mut b, mut ea) = (zp, z, ep);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let Some(em) = ez(m) else { break };
                    if em.signum() == ea.signum() {
                        a = m;
                        ea = em;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        prev = Some((z, e));
    }
    Ok(roots)
}

/// Open two-plate trap: a solid disk of radius `r_outer` in the plane
/// `z = 0` and an annulus `r_hole..r_outer` in the plane `z = z0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPlateSpec {
    pub z0: f64,
    pub r_outer: f64,
    pub r_hole: f64,
    pub thickness: f64,
    pub v_top: f64,
    pub v_bottom: f64,
}

impl TwoPlateSpec {
    /// z0 = 5 mm, R = 15 mm, r = 5 mm, annulus at −5 V, disk at +5 V.
    pub fn prototype() -> Self {
        TwoPlateSpec {
            z0: 5.0 * MM,
            r_outer: 15.0 * MM,
            r_hole: 5.0 * MM,
            thickness: 0.4 * MM,
            v_top: -5.0,
            v_bottom: 5.0,
        }
    }

    /// Grounded box leaving at least `margin` around the plates and `above`
    /// of free space over the annulus, with the disk mid-plane on a node
    /// layer for spacing `h`.
    pub fn domain(&self, h: f64, margin: f64, above: f64) -> Aabb {
        let cells = |d: f64| (d / h).ceil() * h;
        let w = cells(self.r_outer + margin);
        Aabb::new(
            Vec3::new(-w, -w, -cells(0.5 * self.thickness + margin)),
            Vec3::new(w, w, cells(self.z0 + 0.5 * self.thickness + above)),
        )
    }
}

pub fn build_two_plate(spec: &TwoPlateSpec) -> Result<Vec<ElectrodeSolid>> {
    if !(spec.r_hole > 0.0 && spec.r_hole < spec.r_outer) {
        return Err(invalid("two-plate radii must satisfy 0 < r < R"));
    }
    if !(spec.z0 > spec.thickness) {
        return Err(invalid("plate separation must exceed the plate thickness"));
    }
    Ok(alloc::vec![
        ElectrodeSolid::new(
            Shape::Disk {
                center: Vec3::ZERO,
                radius: spec.r_outer,
                thickness: spec.thickness,
                normal: Axis::Z,
            },
            spec.v_bottom,
            "disk",
        )?,
        ElectrodeSolid::new(
            Shape::Annulus {
                center: Vec3::new(0.0, 0.0, spec.z0),
                r_inner: spec.r_hole,
                r_outer: spec.r_outer,
                thickness: spec.thickness,
                normal: Axis::Z,
            },
            spec.v_top,
            "annulus",
        )?,
    ])
}

/// Circular guide: three concentric rings in the plane `z = +gap/2` crossed
/// by three straight rods along x in the plane `z = −gap/2`, at
/// `y = −s, 0, +s` with `s` the ring spacing. Rods span the ring band so the
/// crossing near `(r_mid, 0)` forms a six-wire cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingGuideSpec {
    pub ring_radii: [f64; 3],
    pub wire_radius: f64,
    pub z_gap: f64,
}

impl Default for RingGuideSpec {
    /// Rings at 9, 12, 15 mm, 0.5 mm wire radius, planes 4 mm apart.
    fn default() -> Self {
        RingGuideSpec {
            ring_radii: [9.0 * MM, 12.0 * MM, 15.0 * MM],
            wire_radius: 0.5 * MM,
            z_gap: 4.0 * MM,
        }
    }
}

/// Voltages of the six guide electrodes, V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuideVoltages {
    pub rings: [f64; 3],
    /// Rods at y = −s, 0, +s.
    pub rods: [f64; 3],
}

impl GuideVoltages {
    /// Trap mode: outer electrodes −5 V, central +5 V.
    pub fn trap() -> Self {
        GuideVoltages {
            rings: [-5.0, 5.0, -5.0],
            rods: [-5.0, 5.0, -5.0],
        }
    }

    /// Transport mode: rods at −3, 0, +5 V.
    pub fn transport() -> Self {
        GuideVoltages {
            rings: [-5.0, 5.0, -5.0],
            rods: [-3.0, 0.0, 5.0],
        }
    }
}

impl RingGuideSpec {
    pub fn spacing(&self) -> f64 {
        self.ring_radii[1] - self.ring_radii[0]
    }

    /// Centre of the six-wire cell at the rod crossing.
    pub fn crossing(&self) -> Vec3 {
        Vec3::new(self.ring_radii[1], 0.0, 0.0)
    }

    pub fn domain(&self, margin: f64) -> Aabb {
        let w = self.ring_radii[2] + self.spacing() + self.wire_radius + margin;
        let zh = 0.5 * self.z_gap + self.wire_radius + margin;
        Aabb::new(Vec3::new(-w, -w, -zh), Vec3::new(w, w, zh))
    }
}

pub fn build_ring_transport(spec: &RingGuideSpec, v: &GuideVoltages) -> Result<Vec<ElectrodeSolid>> {
    let [r1, r2, r3] = spec.ring_radii;
    if !(r1 > 0.0 && r1 < r2 && r2 < r3) {
        return Err(invalid("ring radii must be strictly increasing and positive"));
    }
    if !(spec.wire_radius > 0.0 && spec.z_gap > 2.0 * spec.wire_radius) {
        return Err(invalid("wires must not touch across the gap"));
    }
    if !(2.0 * spec.wire_radius < (r2 - r1).min(r3 - r2)) {
        return Err(invalid("adjacent rings overlap"));
    }
    let s = spec.spacing();
    let zt = 0.5 * spec.z_gap;
    let mut out = Vec::with_capacity(6);
    for (k, &radius) in spec.ring_radii.iter().enumerate() {
        out.push(ElectrodeSolid::new(
            Shape::Torus {
                center: Vec3::new(0.0, 0.0, zt),
                major_radius: radius,
                minor_radius: spec.wire_radius,
                normal: Axis::Z,
            },
            v.rings[k],
            format!("ring_{k}"),
        )?);
    }
    let x_lo = r1 - s;
    let x_hi = r3 + s;
    for (k, y) in [-s, 0.0, s].into_iter().enumerate() {
        out.push(ElectrodeSolid::new(
            Shape::Rod {
                a: Vec3::new(x_lo, y, -zt),
                b: Vec3::new(x_hi, y, -zt),
                radius: spec.wire_radius,
            },
            v.rods[k],
            format!("rod_{k}"),
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::six_wire_potential;
    use crate::grid::{rasterize, solve_laplace, SolveOptions};

    #[test]
    fn six_wire_builder_delegates() {
        let spec = SixWireSpec::prototype(-1.3);
        let set = build_six_wire(&spec).unwrap();
        let r = Vec3::new(0.3 * MM, -0.2 * MM, 0.4 * MM);
        assert_eq!(set.potential(r).unwrap(), six_wire_potential(&spec, r).unwrap());
    }

    #[test]
    fn six_wire_has_three_axial_stationary_points() {
        let spec = SixWireSpec::prototype(1.3);
        let set = build_six_wire(&spec).unwrap();
        let roots = axial_stationary_points(&set, 0.0, 0.0, -8.0 * MM, 8.0 * MM, 1601).unwrap();
        assert_eq!(roots.len(), 3, "{roots:?}");
        assert!(roots[0] < -spec.z0 && roots[2] > spec.z0);
        assert!(roots[1].abs() < 1e-9);
        // flipping the drive turns the central minimum into a maximum
        let flipped = build_six_wire(&SixWireSpec::prototype(-1.3)).unwrap();
        let c = |f: &LogWireSet| crate::field::axial_curvature(f, Vec3::ZERO, 1e-5).unwrap();
        assert!(c(&set) > 0.0 && c(&flipped) < 0.0);
        assert!((c(&set) + c(&flipped)).abs() < 1e-6 * c(&set));
    }

    #[test]
    fn two_plate_rasterizes_two_populations() {
        let spec = TwoPlateSpec::prototype();
        let el = build_two_plate(&spec).unwrap();
        let g = rasterize(&el, spec.domain(0.5 * MM, 3.0 * MM, 10.0 * MM), 0.5 * MM).unwrap();
        let fixed: Vec<f64> = g
            .values()
            .iter()
            .zip(g.mask())
            .filter(|(_, &m)| m != crate::grid::FREE && m != crate::grid::BOUNDARY)
            .map(|(&v, _)| v)
            .collect();
        assert!(fixed.iter().any(|&v| v == 5.0) && fixed.iter().any(|&v| v == -5.0));
        assert!(fixed.iter().all(|&v| v == 5.0 || v == -5.0));
        let bad = TwoPlateSpec { r_hole: 20.0 * MM, ..spec };
        assert!(build_two_plate(&bad).is_err());
    }

    #[test]
    fn ring_guide_mirror_symmetry() {
        let spec = RingGuideSpec::default();
        let el = build_ring_transport(&spec, &GuideVoltages::trap()).unwrap();
        assert_eq!(el.len(), 6);
        let g = rasterize(&el, spec.domain(3.0 * MM), 0.5 * MM).unwrap();
        let opts = SolveOptions { tol: 1e-7, ..SolveOptions::for_grid(&g) };
        let g = solve_laplace(g, &opts).unwrap().grid;
        for &(x, y, z) in &[(12.0, 1.3, 0.2), (8.0, 4.1, -0.7), (-3.0, 2.2, 1.1)] {
            let a = g.sample_potential(Vec3::new(x * MM, y * MM, z * MM)).unwrap();
            let b = g.sample_potential(Vec3::new(x * MM, -y * MM, z * MM)).unwrap();
            assert!((a - b).abs() < 1e-5, "{a} {b}");
        }
        let bad = RingGuideSpec {
            ring_radii: [9.0 * MM, 8.0 * MM, 15.0 * MM],
            ..spec
        };
        assert!(build_ring_transport(&bad, &GuideVoltages::trap()).is_err());
    }
}
