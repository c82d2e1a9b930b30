//! Field diagnostics: quadrupole fits, aspect-ratio scans, line profiles and
//! axial-well scans.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::field::FieldSource;
use crate::grid::{rasterize, solve_laplace, SolveOptions};
use crate::pads::{trapping_assignment, PadArray, PadArraySpec};
use crate::units::Vec3;
#[allow(unused_imports)]
use num_traits::Float;

/// Default number of probe points for [`quadrupole_deviation`].
pub const PROBE_POINTS: usize = 256;

/// Element `n` (from 1) of the van der Corput sequence in base `b`.
fn radical_inverse(mut n: u64, b: u64) -> f64 {
    let mut inv = 1.0 / b as f64;
    let mut out = 0.0;
    while n > 0 {
        out += (n % b) as f64 * inv;
        n /= b;
        inv /= b as f64;
    }
    out
}

/// `count` Halton points (bases 2, 3, 5) inside the unit ball, skipping the
/// first `skip` sequence elements.
pub fn halton_ball(count: usize, skip: u64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(count);
    let mut n = skip + 1;
    while out.len() < count {
        let p = Vec3::new(
            2.0 * radical_inverse(n, 2) - 1.0,
            2.0 * radical_inverse(n, 3) - 1.0,
            2.0 * radical_inverse(n, 5) - 1.0,
        );
        if p.norm_squared() <= 1.0 {
            out.push(p);
        }
        n += 1;
    }
    out
}

/// Best fit of `c0 + c_quad·(x² + y² − 2z²)` about a centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupoleFit {
    /// V
    pub c0: f64,
    /// V/m²
    pub c_quad: f64,
    /// RMS residual ÷ RMS of (Φ − c0).
    pub residual_rms_rel: f64,
}

/// Least-squares quadrupole fit over [`PROBE_POINTS`] quasi-random points in
/// the ball of radius `probe_radius` around `center`.
pub fn quadrupole_deviation<F: FieldSource + ?Sized>(field: &F, center: Vec3, probe_radius: f64) -> Result<QuadrupoleFit> {
    quadrupole_deviation_with(field, center, probe_radius, PROBE_POINTS)
}

pub fn quadrupole_deviation_with<F: FieldSource + ?Sized>(
    field: &F,
    center: Vec3,
    probe_radius: f64,
    points: usize,
) -> Result<QuadrupoleFit> {
    if !(probe_radius > 0.0) || points < 3 {
        return Err(invalid("quadrupole fit needs a positive probe radius and at least 3 points"));
    }
    let mut us = Vec::with_capacity(points);
    let mut phis = Vec::with_capacity(points);
    for p in halton_ball(points, 0) {
        let d = p * probe_radius;
        us.push(d.x * d.x + d.y * d.y - 2.0 * d.z * d.z);
        phis.push(field.potential(center + d)?);
    }
    let n = points as f64;
    let mu = us.iter().sum::<f64>() / n;
    let mphi = phis.iter().sum::<f64>() / n;
    let spread = phis.iter().map(|p| (p - mphi).powi(2)).sum::<f64>();
    if !(spread > 1e-24 * n * mphi.abs().max(1.0).powi(2)) {
        return Err(Error::FlatField);
    }
    let suu: f64 = us.iter().map(|u| (u - mu).powi(2)).sum();
    let sup: f64 = us.iter().zip(&phis).map(|(u, p)| (u - mu) * (p - mphi)).sum();
    let c_quad = sup / suu;
    let c0 = mphi - c_quad * mu;
    let res: f64 = us.iter().zip(&phis).map(|(u, p)| (p - c0 - c_quad * u).powi(2)).sum();
    let about: f64 = phis.iter().map(|p| (p - c0).powi(2)).sum();
    Ok(QuadrupoleFit {
        c0,
        c_quad,
        residual_rms_rel: (res / about).sqrt(),
    })
}

/// Outcome of an aspect-ratio scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaScan {
    pub gamma_star: f64,
    /// (γ, residual) per scanned point.
    pub curve: Vec<(f64, f64)>,
    /// False when the residual curve has more than one local minimum.
    pub single_trough: bool,
}

/// The `steps` scan values of γ across `range`.
pub fn gamma_points(range: (f64, f64), steps: usize) -> Result<Vec<f64>> {
    let (a, b) = range;
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(invalid("gamma range must be positive and ordered"));
    }
    if a == b {
        return Ok(alloc::vec![a]);
    }
    if steps < 5 {
        return Err(invalid("gamma scan needs at least 5 steps"));
    }
    Ok((0..steps).map(|k| a + (b - a) * k as f64 / (steps - 1) as f64).collect())
}

/// Picks the minimum of a scanned curve, refined by a parabola through the
/// lowest sample and its neighbours.
pub fn refine_minimum(curve: &[(f64, f64)]) -> Result<GammaScan> {
    let Some((imin, _)) = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
    else {
        return Err(invalid("empty scan"));
    };
    let mut gamma_star = curve[imin].0;
    if imin > 0 && imin + 1 < curve.len() {
        let (x0, y0) = curve[imin - 1];
        let (x1, y1) = curve[imin];
        let (x2, y2) = curve[imin + 1];
        let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        if a > 0.0 {
            gamma_star = (-b / (2.0 * a)).clamp(x0, x2);
        }
    }
    let minima = (0..curve.len())
        .filter(|&k| {
            let left = k == 0 || curve[k - 1].1 > curve[k].1;
            let right = k + 1 == curve.len() || curve[k + 1].1 > curve[k].1;
            left && right
        })
        .count();
    Ok(GammaScan {
        gamma_star,
        curve: curve.to_vec(),
        single_trough: minima <= 1,
    })
}

/// Settings for scoring one aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaProbe {
    /// Target grid spacing; adjusted per γ by [`PadArraySpec::fitted_spacing`].
    pub h: f64,
    /// Free space between pads and the grounded box.
    pub margin: f64,
    /// Probe radius as a fraction of the pad pitch.
    pub probe_fraction: f64,
    pub v_endcap: f64,
    pub v_ring: f64,
    /// Relative solver tolerance (× max |V|).
    pub rel_tol: f64,
}

impl Default for GammaProbe {
    fn default() -> Self {
        GammaProbe {
            h: 0.2 * crate::units::MM,
            margin: 3.0 * crate::units::MM,
            probe_fraction: 0.2,
            v_endcap: 10.0,
            v_ring: -10.0,
            rel_tol: 1e-7,
        }
    }
}

/// Quadrupole deviation at the first site of `spec` with its layers set to
/// `gamma`, from a fresh solve of the trapping assignment.
pub fn pad_residual(spec: &PadArraySpec, gamma: f64, probe: &GammaProbe) -> Result<QuadrupoleFit> {
    let spec = PadArraySpec {
        gamma,
        sites: alloc::vec![spec.sites[0]],
        ..spec.clone()
    };
    let site = spec.sites[0];
    let array = PadArray::new(spec.clone())?;
    let h = spec.fitted_spacing(probe.h);
    let trap = trapping_assignment(&array, site, probe.v_endcap, probe.v_ring)?;
    let grid = rasterize(&array.electrodes(&trap.assignment)?, array.domain(h, probe.margin), h)?;
    let vmax = probe.v_endcap.abs().max(probe.v_ring.abs());
    let opts = SolveOptions {
        tol: probe.rel_tol * vmax,
        ..SolveOptions::for_grid(&grid)
    };
    let solved = solve_laplace(grid, &opts)?.grid;
    quadrupole_deviation(&solved, spec.site_center(site), probe.probe_fraction * spec.pad_pitch)
}

/// Sequential γ scan; see the `penning` crate for the parallel version.
pub fn optimize_gamma(spec: &PadArraySpec, range: (f64, f64), steps: usize, probe: &GammaProbe) -> Result<GammaScan> {
    let mut curve = Vec::new();
    for g in gamma_points(range, steps)? {
        curve.push((g, pad_residual(spec, g, probe)?.residual_rms_rel));
    }
    refine_minimum(&curve)
}

/// One sample of a line profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    /// Signed distance from the line centre, m.
    pub s: f64,
    pub r: Vec3,
    /// V
    pub phi: f64,
}

/// Potential at `samples` evenly spaced points on the segment of half-length
/// `half_length` through `point` along `direction`.
pub fn axial_profile<F: FieldSource + ?Sized>(
    field: &F,
    point: Vec3,
    direction: Vec3,
    half_length: f64,
    samples: usize,
) -> Result<Vec<ProfileSample>> {
    if samples < 2 || !(half_length > 0.0) || !(direction.norm() > 0.0) {
        return Err(invalid("profile needs ≥ 2 samples, a positive length and a direction"));
    }
    let u = direction.normalized();
    (0..samples)
        .map(|k| {
            let s = -half_length + 2.0 * half_length * k as f64 / (samples - 1) as f64;
            let r = point + u * s;
            Ok(ProfileSample {
                s,
                r,
                phi: field.potential(r)?,
            })
        })
        .collect()
}

/// Fit of `a + b s + c s²` to profile samples with `|s| ≤ s_max`; returns
/// `(c, RMS residual ÷ RMS(Φ − mean))`.
pub fn quadratic_profile_fit(profile: &[ProfileSample], s_max: f64) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = profile.iter().filter(|p| p.s.abs() <= s_max).map(|p| (p.s, p.phi)).collect();
    if pts.len() < 4 {
        return Err(invalid("too few profile samples for a quadratic fit"));
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &(s, phi) in &pts {
        let row = nalgebra::Vector3::new(1.0, s, s * s);
        ata += row * row.transpose();
        atb += row * phi;
    }
    let coef = ata.lu().solve(&atb).ok_or_else(|| invalid("degenerate profile fit"))?;
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let (mut res, mut var) = (0.0, 0.0);
    for &(s, phi) in &pts {
        res += (phi - coef[0] - coef[1] * s - coef[2] * s * s).powi(2);
        var += (phi - mean).powi(2);
    }
    if !(var > 0.0) {
        return Err(Error::FlatField);
    }
    Ok((coef[2], (res / var).sqrt()))
}

/// Axial well at one point of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellRow {
    /// Arc length from the first path point, m.
    pub s: f64,
    pub point: Vec3,
    /// z of the local minimum nearest the point, if any.
    pub z_min: Option<f64>,
    /// `∂²Φ/∂z²` at the minimum (or at the point when there is none), V/m².
    pub curvature: f64,
}

impl WellRow {
    pub fn has_minimum(&self) -> bool {
        self.z_min.is_some()
    }
}

/// At each path point, samples Φ along z over `±half_range` in steps of
/// `dz` and locates the local minimum closest to the point.
pub fn z_well_scan<F: FieldSource + ?Sized>(field: &F, path: &[Vec3], half_range: f64, dz: f64) -> Result<Vec<WellRow>> {
    if !(dz > 0.0 && half_range >= 2.0 * dz) {
        return Err(invalid("well scan needs dz > 0 and a range of at least two steps"));
    }
    let n = (half_range / dz).round() as i64;
    let mut rows = Vec::with_capacity(path.len());
    let mut s = 0.0;
    for (k, &p) in path.iter().enumerate() {
        if k > 0 {
            s += (p - path[k - 1]).norm();
        }
        let at = |m: i64| field.potential(Vec3::new(p.x, p.y, p.z + m as f64 * dz));
        let phis: Vec<f64> = (-n..=n).map(at).collect::<Result<_>>()?;
        let mut best: Option<(usize, f64)> = None;
        for i in 1..phis.len() - 1 {
            if phis[i] <= phis[i - 1] && phis[i] <= phis[i + 1] && (phis[i] < phis[i - 1] || phis[i] < phis[i + 1]) {
                let z = p.z + (i as f64 - n as f64) * dz;
                if best.map_or(true, |(_, zb)| (z - p.z).abs() < (zb - p.z).abs()) {
                    best = Some((i, z));
                }
            }
        }
        let centre = best.map_or(n as usize, |(i, _)| i);
        let curvature = (phis[centre + 1] - 2.0 * phis[centre] + phis[centre - 1]) / (dz * dz);
        let z_min = best.map(|(i, z)| {
            let (a, b, c) = (phis[i - 1], phis[i], phis[i + 1]);
            let den = a - 2.0 * b + c;
            if den > 0.0 {
                z + 0.5 * dz * (a - c) / den
            } else {
                z
            }
        });
        rows.push(WellRow {
            s,
            point: p,
            z_min,
            curvature,
        });
    }
    Ok(rows)
}

/// Point where `E = 0`, found by Newton iteration from `start` with a
/// finite-difference Jacobian of step `step`. `None` if the iteration
/// leaves `radius` of the start or does not settle.
pub fn stationary_point<F: FieldSource + ?Sized>(field: &F, start: Vec3, step: f64, radius: f64) -> Result<Option<Vec3>> {
    if !(step > 0.0 && radius > step) {
        return Err(invalid("stationary-point search needs 0 < step < radius"));
    }
    let mut r = start;
    for _ in 0..50 {
        let e = field.efield(r)?;
        let mut jac = nalgebra::Matrix3::<f64>::zeros();
        for (c, u) in [Vec3::X, Vec3::Y, Vec3::Z].into_iter().enumerate() {
            let d = (field.efield(r + u * step)? - field.efield(r - u * step)?) / (2.0 * step);
            jac[(0, c)] = d.x;
            jac[(1, c)] = d.y;
            jac[(2, c)] = d.z;
        }
        let Some(dx) = jac.lu().solve(&nalgebra::Vector3::new(-e.x, -e.y, -e.z)) else {
            return Ok(None);
        };
        let dx = Vec3::new(dx.x, dx.y, dx.z);
        r += dx;
        if (r - start).norm() > radius {
            return Ok(None);
        }
        if dx.norm() < 1e-6 * step {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{QuadrupoleField, UniformField};
    use crate::units::MM;
    use approx::assert_relative_eq;

    #[test]
    fn stationary_point_of_offset_quadrupole() {
        let q = QuadrupoleField {
            center: Vec3::new(0.3 * MM, -0.1 * MM, 0.2 * MM),
            c0: 1.0,
            c_quad: 2e4,
        };
        let p = stationary_point(&q, Vec3::ZERO, 0.05 * MM, 2.0 * MM).unwrap().unwrap();
        assert!((p - q.center).norm() < 1e-12);
        let u = UniformField::new(Vec3::new(0.0, 10.0, 0.0));
        assert!(stationary_point(&u, Vec3::ZERO, 0.05 * MM, 2.0 * MM).unwrap().is_none());
    }

    #[test]
    fn halton_points_fill_the_ball() {
        let pts = halton_ball(512, 0);
        assert!(pts.iter().all(|p| p.norm() <= 1.0));
        let mean = pts.iter().fold(Vec3::ZERO, |a, &p| a + p) / 512.0;
        assert!(mean.norm() < 0.05);
        // uniform ball: E|r|² = 3/5
        let r2 = pts.iter().map(|p| p.norm_squared()).sum::<f64>() / 512.0;
        assert!((r2 - 0.6).abs() < 0.02);
    }

    #[test]
    fn exact_quadrupole_fits_perfectly() {
        let q = QuadrupoleField {
            center: Vec3::new(1.0 * MM, -2.0 * MM, 0.5 * MM),
            c0: 0.7,
            c_quad: 3.0e5,
        };
        let fit = quadrupole_deviation(&q, q.center, 1.0 * MM).unwrap();
        assert!(fit.residual_rms_rel < 1e-10);
        assert_relative_eq!(fit.c_quad, 3.0e5, max_relative = 1e-9);
        assert_relative_eq!(fit.c0, 0.7, max_relative = 1e-9);
    }

    #[test]
    fn uniform_and_flat_fields() {
        let u = UniformField::new(Vec3::new(10.0, 0.0, 0.0));
        let fit = quadrupole_deviation(&u, Vec3::ZERO, 1.0 * MM).unwrap();
        assert!(fit.c_quad.abs() * 1e-6 < 1e-2 * 10.0 * 1e-3);
        assert!(fit.residual_rms_rel > 0.9);
        let flat = UniformField::new(Vec3::ZERO);
        assert_eq!(quadrupole_deviation(&flat, Vec3::ZERO, 1.0 * MM), Err(Error::FlatField));
    }

    #[test]
    fn parabolic_refinement() {
        let curve: Vec<(f64, f64)> = (0..11).map(|k| {
            let g = 0.5 + 0.1 * k as f64;
            (g, (g - 0.87).powi(2) + 0.01)
        }).collect();
        let scan = refine_minimum(&curve).unwrap();
        assert_relative_eq!(scan.gamma_star, 0.87, epsilon = 1e-9);
        assert!(scan.single_trough);
        let bumpy: Vec<(f64, f64)> = [(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 0.0), (5.0, 1.0)].to_vec();
        assert!(!refine_minimum(&bumpy).unwrap().single_trough);
        assert_eq!(gamma_points((0.9, 0.9), 11).unwrap(), alloc::vec![0.9]);
        assert!(gamma_points((0.5, 1.5), 3).is_err());
    }

    #[test]
    fn well_scan_on_quadrupole() {
        let q = QuadrupoleField {
            center: Vec3::new(0.0, 0.0, 0.3 * MM),
            c0: 0.0,
            c_quad: -1.0e5,
        };
        let path = [Vec3::ZERO, Vec3::new(1.0 * MM, 0.0, 0.0)];
        let rows = z_well_scan(&q, &path, 2.0 * MM, 0.1 * MM).unwrap();
        for r in &rows {
            assert_relative_eq!(r.z_min.unwrap(), 0.3 * MM, epsilon = 1e-9);
            assert_relative_eq!(r.curvature, 4.0e5, max_relative = 1e-9);
        }
        assert_relative_eq!(rows[1].s, 1.0 * MM);
        let hill = QuadrupoleField { c_quad: 1.0e5, ..q };
        let rows = z_well_scan(&hill, &path, 2.0 * MM, 0.1 * MM).unwrap();
        assert!(rows.iter().all(|r| !r.has_minimum() && r.curvature < 0.0));
    }

    #[test]
    fn constant_profile() {
        let u = UniformField::new(Vec3::new(5.0, 0.0, 0.0));
        let p = axial_profile(&u, Vec3::ZERO, Vec3::Z, 1.0 * MM, 11).unwrap();
        assert!(p.iter().all(|s| s.phi == 0.0));
        let q = QuadrupoleField {
            center: Vec3::ZERO,
            c0: 1.0,
            c_quad: 2.0e5,
        };
        let p = axial_profile(&q, Vec3::ZERO, Vec3::Z, 1.0 * MM, 21).unwrap();
        let (c, res) = quadratic_profile_fit(&p, 1.0 * MM).unwrap();
        assert_relative_eq!(c, -4.0e5, max_relative = 1e-9);
        assert!(res < 1e-9);
    }
}
