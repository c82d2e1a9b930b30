//! Single-loop "hop" transfer between neighbouring pad traps.
//!
//! For one cyclotron period the pads are switched to voltages whose field is
//! as close as possible to the uniform field that carries a particle released
//! at rest exactly one site spacing along the cycloid, while the axial
//! curvature of the potential stays positive along the way. The trapping
//! voltages of the destination site are restored when the period ends.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::basis::{Assignment, ElectrodeBasis};
use crate::dynamics::{
    cycloid_closed_form, hop_field_magnitude, integrate, FieldStack, IntegratorConfig, Termination, TimeWindow,
    Trajectory,
};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldSource, Scaled};
use crate::grid::PotentialGrid;
use crate::pads::{mirror_label, Layer, PadArray, Site};
use crate::units::{Species, TrajectoryState, Vec3};
#[allow(unused_imports)]
use num_traits::Float;

/// Planner settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopOptions {
    /// Field-fit points along the cycloid.
    pub fit_points: usize,
    /// Curvature-constraint points on the straight from–to segment.
    pub channel_points: usize,
    /// Lower bound on `sign(q)·∂²Φ/∂z²` at every constraint point, V/m².
    pub min_curvature: f64,
    /// Bound on every pad voltage, V.
    pub max_voltage: f64,
    /// Ridge weight relative to the mean diagonal of the normal matrix.
    pub ridge: f64,
    /// Rescale the fitted voltages so the particle's transverse velocity
    /// vanishes where it crosses the mid-plane between the sites.
    pub calibrate: bool,
    /// Integration steps per cyclotron period.
    pub steps_per_period: usize,
}

impl Default for HopOptions {
    fn default() -> Self {
        HopOptions {
            fit_points: 48,
            channel_points: 21,
            min_curvature: 2.5e5,
            max_voltage: 250.0,
            ridge: 1e-9,
            calibrate: true,
            steps_per_period: 400,
        }
    }
}

/// A planned hop.
#[derive(Debug, Clone, PartialEq)]
pub struct HopPlan {
    pub from_site: Site,
    pub to_site: Site,
    /// One cyclotron period, s.
    pub duration: f64,
    pub hop_assignment: Assignment,
    pub expected_landing: Vec3,
    /// Magnitude of the ideal uniform hop field, V/m.
    pub target_field: f64,
    /// Unit direction of the ideal field.
    pub field_direction: Vec3,
    /// Factor applied to the least-squares voltages by calibration.
    pub scale: f64,
    /// RMS field mismatch over the fit points ÷ target magnitude.
    pub fit_rms_rel: f64,
    /// Smallest `sign(q)·∂²Φ/∂z²` over the constraint points, V/m².
    pub min_curvature: f64,
    /// Points on the straight from–to segment where the curvature is held.
    pub channel: Vec<Vec3>,
    pub species: Species,
    /// T
    pub b: f64,
}

impl HopPlan {
    /// The same hop switched off after `duration` instead of one period.
    pub fn with_duration(&self, duration: f64) -> HopPlan {
        HopPlan {
            duration,
            ..self.clone()
        }
    }
}

/// Points of the ideal loop, `count` of them, at the midpoints of equal time
/// slices of one period.
pub fn cycloid_path(from: Vec3, direction: Vec3, e: f64, b: f64, s: &Species, count: usize) -> Result<Vec<Vec3>> {
    let period = 2.0 * PI * s.mass / (s.charge.abs() * b);
    let across = Vec3::Z.cross(direction);
    (0..count)
        .map(|k| {
            let t = (k as f64 + 0.5) / count as f64 * period;
            let (x, y) = cycloid_closed_form(t, e, b, s)?;
            Ok(from + direction * x + across * y)
        })
        .collect()
}

/// Unit solution of the top/bottom pad pair containing `label`.
fn pair_fields(basis: &ElectrodeBasis, top: &str) -> Result<(Arc<PotentialGrid>, Option<Arc<PotentialGrid>>)> {
    let g = basis
        .grid(top)
        .cloned()
        .ok_or_else(|| Error::UnknownLabel(alloc::vec![String::from(top)]))?;
    let m = mirror_label(top).and_then(|l| basis.grid(&l).cloned());
    Ok((g, m))
}

fn curvature(grid: &PotentialGrid, p: Vec3) -> Result<f64> {
    let h = grid.spacing();
    let up = grid.sample_potential(p + Vec3::Z * h)?;
    let mid = grid.sample_potential(p)?;
    let down = grid.sample_potential(p - Vec3::Z * h)?;
    Ok((up - 2.0 * mid + down) / (h * h))
}

/// Minimises `½‖A v − b‖² + ½ρ‖v‖²` subject to `C v ≥ d` by coordinate
/// descent on the dual. Returns `v` and the smallest slack `C v − d`
/// together with its row.
fn constrained_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    ridge: f64,
) -> Result<(DVector<f64>, f64, usize)> {
    let k = a.ncols();
    let mut h = a.transpose() * a;
    let mean_diag = h.trace() / k as f64;
    for i in 0..k {
        h[(i, i)] += ridge * mean_diag;
    }
    let g = a.transpose() * b;
    let chol = h.clone().cholesky().ok_or_else(|| invalid("normal matrix is not positive definite"))?;
    let v0 = chol.solve(&g);
    // H⁻¹Cᵀ
    let hic = chol.solve(&c.transpose());
    let q = c * &hic;
    let lin = c * &v0 - d;
    let m = c.nrows();
    let mut lambda = DVector::<f64>::zeros(m);
    let mut grad = lin.clone();
    let scale = lin.amax().max(1e-300);
    for _ in 0..20_000 {
        let mut largest: f64 = 0.0;
        for i in 0..m {
            let qii = q[(i, i)];
            if qii <= 0.0 {
                continue;
            }
            let new = (lambda[i] - grad[i] / qii).max(0.0);
            let delta = new - lambda[i];
            if delta != 0.0 {
                lambda[i] = new;
                for j in 0..m {
                    grad[j] += q[(j, i)] * delta;
                }
                largest = largest.max((delta * qii).abs());
            }
        }
        if largest < 1e-13 * scale {
            break;
        }
    }
    let v = v0 + hic * lambda;
    let slack = c * &v - d;
    let (row, worst) = slack
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, &s)| (i, s))
        .unwrap_or((0, f64::INFINITY));
    Ok((v, worst, row))
}

/// Plans a hop from `from` to the neighbouring site `to` (one step along the
/// lattice x axis) for species `s` in a field of `b` tesla along +z.
pub fn plan_hop(
    array: &PadArray,
    basis: &ElectrodeBasis,
    from: Site,
    to: Site,
    s: &Species,
    b: f64,
    opts: &HopOptions,
) -> Result<HopPlan> {
    let spec = array.spec();
    for site in [from, to] {
        if !spec.sites.contains(&site) {
            return Err(invalid(format!("site {site:?} is not part of the array")));
        }
    }
    if !(to.1 == from.1 && (to.0 - from.0).abs() == 1) {
        return Err(invalid("hops must join neighbouring sites along the lattice x axis"));
    }
    if !(b > 0.0) {
        return Err(invalid("hop needs B > 0"));
    }
    if !(opts.max_voltage > 0.0) {
        return Err(invalid("hop voltage bound must be positive"));
    }
    if opts.fit_points < 4 || opts.channel_points < 2 {
        return Err(invalid("hop planner needs at least 4 fit and 2 channel points"));
    }
    let c_from = spec.site_center(from);
    let c_to = spec.site_center(to);
    let spacing = (c_to - c_from).norm();
    let dir = (c_to - c_from) / spacing;
    let duration = 2.0 * PI * s.mass / (s.charge.abs() * b);
    let e0 = hop_field_magnitude(spacing, b, s)?;
    // E × B along the hop direction
    let e_dir = Vec3::Z.cross(dir);
    let target = e_dir * e0;

    let fit_pts = cycloid_path(c_from, dir, e0, b, s, opts.fit_points)?;
    let channel: Vec<Vec3> = (0..opts.channel_points)
        .map(|k| c_from + (c_to - c_from) * (k as f64 / (opts.channel_points - 1) as f64))
        .collect();

    let tops: Vec<String> = array
        .pads()
        .iter()
        .filter(|p| p.layer == Layer::Top)
        .map(|p| p.label.clone())
        .collect();
    let pairs: Vec<_> = tops.iter().map(|l| pair_fields(basis, l)).collect::<Result<_>>()?;
    let k = pairs.len();
    let pair_efield = |n: usize, p: Vec3| -> Result<Vec3> {
        let (g, m) = &pairs[n];
        let mut e = g.sample_efield(p)?;
        if let Some(m) = m {
            e += m.sample_efield(p)?;
        }
        Ok(e)
    };
    let pair_curv = |n: usize, p: Vec3| -> Result<f64> {
        let (g, m) = &pairs[n];
        let mut c = curvature(g, p)?;
        if let Some(m) = m {
            c += curvature(m, p)?;
        }
        Ok(c)
    };

    let rows = 2 * fit_pts.len();
    let mut a = DMatrix::<f64>::zeros(rows, k);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (i, &p) in fit_pts.iter().enumerate() {
        for n in 0..k {
            let e = pair_efield(n, p)?;
            a[(2 * i, n)] = e.x;
            a[(2 * i + 1, n)] = e.y;
        }
        rhs[2 * i] = target.x;
        rhs[2 * i + 1] = target.y;
    }
    let sign = s.charge.signum();
    let mut cmat = DMatrix::<f64>::zeros(channel.len(), k);
    for (i, &p) in channel.iter().enumerate() {
        for n in 0..k {
            cmat[(i, n)] = sign * pair_curv(n, p)?;
        }
    }
    let nc = channel.len();
    let mut cons = DMatrix::<f64>::zeros(nc + 2 * k, k);
    let mut dvec = DVector::<f64>::zeros(nc + 2 * k);
    cons.rows_mut(0, nc).copy_from(&cmat);
    dvec.rows_mut(0, nc).fill(opts.min_curvature);
    for n in 0..k {
        cons[(nc + 2 * n, n)] = 1.0;
        cons[(nc + 2 * n + 1, n)] = -1.0;
    }
    dvec.rows_mut(nc, 2 * k).fill(-opts.max_voltage);
    let (v, worst, _) = constrained_least_squares(&a, &rhs, &cons, &dvec, opts.ridge)?;
    let curv = &cmat * &v;
    if worst < -1e-6 * opts.min_curvature.abs().max(opts.max_voltage).max(1.0) {
        let row = curv.argmin().0;
        return Err(Error::PlanInfeasible {
            point: channel[row],
            curvature: curv[row],
        });
    }
    let resid = &a * &v - &rhs;
    let fit_rms_rel = (resid.norm_squared() / fit_pts.len() as f64).sqrt() / e0;

    let mut assignment = Assignment::new();
    for (n, l) in tops.iter().enumerate() {
        assignment.insert(l.clone(), v[n]);
        if let Some(m) = mirror_label(l) {
            if basis.grid(&m).is_some() {
                assignment.insert(m, v[n]);
            }
        }
    }
    let mut plan = HopPlan {
        from_site: from,
        to_site: to,
        duration,
        hop_assignment: assignment,
        expected_landing: c_to,
        target_field: e0,
        field_direction: e_dir,
        scale: 1.0,
        fit_rms_rel,
        min_curvature: curv.min(),
        channel,
        species: s.clone(),
        b,
    };
    if opts.calibrate {
        let grid = Arc::new(basis.combine(&plan.hop_assignment)?);
        let k = calibrate_scale(&plan, grid, opts)?;
        for v in plan.hop_assignment.values_mut() {
            *v *= k;
        }
        plan.scale = k;
        plan.min_curvature *= k;
    }
    Ok(plan)
}

/// `sign(q)·v·Ê` where the released particle crosses the mid-plane, or
/// `None` if it never gets there within one period.
fn midplane_velocity(plan: &HopPlan, field: Arc<dyn FieldSource>, scale: f64, opts: &HopOptions) -> Result<Option<f64>> {
    let s = &plan.species;
    let c_from = plan.channel[0];
    let dir = (plan.expected_landing - c_from).normalized();
    let mid = (c_from + plan.expected_landing) * 0.5;
    let stack = FieldStack::new(Vec3::Z * plan.b)?.with_static(Arc::new(Scaled { inner: field, scale }));
    let dt = plan.duration / opts.steps_per_period as f64;
    let cfg = IntegratorConfig {
        dt,
        t_end: plan.duration,
        record_stride: 1,
    };
    let traj = integrate(TrajectoryState::at_rest(c_from), &stack, &cfg, s)?;
    for w in traj.samples.windows(2) {
        let a = (w[0].r - mid).dot(dir);
        let b = (w[1].r - mid).dot(dir);
        if a < 0.0 && b >= 0.0 {
            let f = -a / (b - a);
            let v = w[0].v * (1.0 - f) + w[1].v * f;
            return Ok(Some(s.charge.signum() * v.dot(plan.field_direction)));
        }
    }
    Ok(None)
}

fn calibrate_scale(plan: &HopPlan, field: Arc<PotentialGrid>, opts: &HopOptions) -> Result<f64> {
    let field: Arc<dyn FieldSource> = field;
    let f = |k: f64| -> Result<f64> { Ok(midplane_velocity(plan, field.clone(), k, opts)?.unwrap_or(f64::NEG_INFINITY)) };
    let (mut lo, mut hi) = (0.5, 2.0);
    if !(f(lo)? < 0.0 && f(hi)? > 0.0) {
        return Err(invalid("hop calibration could not bracket the mid-plane condition"));
    }
    for _ in 0..50 {
        let m = 0.5 * (lo + hi);
        if f(m)? > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of an executed hop.
#[derive(Debug, Clone, PartialEq)]
pub struct HopReport {
    /// State when the hop voltages are switched off.
    pub landing: TrajectoryState,
    /// In-plane distance from the destination centre at landing, m.
    pub dxy: f64,
    /// |z| at landing, m.
    pub z_final: f64,
    /// |v| at landing, m/s.
    pub speed_final: f64,
    /// Largest |z| seen during the hop, m.
    pub max_abs_z: f64,
    pub termination: Termination,
    pub trajectory: Trajectory,
}

impl HopReport {
    pub fn failed(&self) -> bool {
        self.termination != Termination::Completed
    }
}

/// Runs `state0` (at t = 0) through the hop: source trapping field before
/// t = 0, hop voltages for `plan.duration`, then the destination trapping
/// field for `settle` more seconds.
pub fn execute_hop(
    plan: &HopPlan,
    basis: &ElectrodeBasis,
    trap_from: &Assignment,
    trap_to: &Assignment,
    state0: TrajectoryState,
    settle: f64,
    opts: &HopOptions,
) -> Result<HopReport> {
    let hop: Arc<dyn FieldSource> = Arc::new(basis.combine(&plan.hop_assignment)?);
    let before: Arc<dyn FieldSource> = Arc::new(basis.combine(trap_from)?);
    let after: Arc<dyn FieldSource> = Arc::new(basis.combine(trap_to)?);
    run_hop(plan, hop, before, after, state0, settle, opts)
}

/// [`execute_hop`] with the three fields already combined.
pub fn run_hop(
    plan: &HopPlan,
    hop: Arc<dyn FieldSource>,
    before: Arc<dyn FieldSource>,
    after: Arc<dyn FieldSource>,
    state0: TrajectoryState,
    settle: f64,
    opts: &HopOptions,
) -> Result<HopReport> {
    let t0 = state0.t;
    let stack = FieldStack::new(Vec3::Z * plan.b)?
        .with(before, TimeWindow::new(f64::NEG_INFINITY, t0)?)
        .with(hop, TimeWindow::new(t0, t0 + plan.duration)?)
        .with(after, TimeWindow::new(t0 + plan.duration, f64::INFINITY)?);
    let period = 2.0 * PI * plan.species.mass / (plan.species.charge.abs() * plan.b);
    let dt = period / opts.steps_per_period as f64;
    let hop_steps = (plan.duration / dt).round().max(1.0) as usize;
    let cfg = IntegratorConfig {
        dt,
        t_end: t0 + (hop_steps as f64) * dt + settle,
        record_stride: 1,
    };
    let trajectory = integrate(state0, &stack, &cfg, &plan.species)?;
    let landing = trajectory
        .samples
        .get(hop_steps)
        .copied()
        .unwrap_or(*trajectory.last());
    let during = &trajectory.samples[..trajectory.samples.len().min(hop_steps + 1)];
    let z_ref = plan.expected_landing.z;
    let max_abs_z = during.iter().map(|p| (p.r.z - z_ref).abs()).fold(0.0, f64::max);
    let d = landing.r - plan.expected_landing;
    Ok(HopReport {
        landing,
        dxy: (d.x * d.x + d.y * d.y).sqrt(),
        z_final: (landing.r.z - z_ref).abs(),
        speed_final: landing.v.norm(),
        max_abs_z,
        termination: trajectory.termination,
        trajectory,
    })
}
