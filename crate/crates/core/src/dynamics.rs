//! Boris integration of `m dv/dt = q(E + v×B)` in time-switched electrostatic
//! fields and a uniform magnetic field, plus the crossed-field cycloid.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::error::{invalid, Error, Result};
use crate::field::{FieldSource, Location};
use crate::units::{Species, TrajectoryState, Vec3};
#[allow(unused_imports)]
use num_traits::Float;

/// One Boris velocity update: half electric kick, magnetic rotation, half
/// electric kick. Position is left untouched.
#[inline]
pub fn boris_kick(v: Vec3, e: Vec3, b: Vec3, dt: f64, q_over_m: f64) -> Vec3 {
    let half = 0.5 * q_over_m * dt;
    let v_minus = v + e * half;
    let t = b * half;
    let s = t * (2.0 / (1.0 + t.norm_squared()));
    let v_prime = v_minus + v_minus.cross(t);
    let v_plus = v_minus + v_prime.cross(s);
    v_plus + e * half
}

/// Classic leapfrog Boris step: kick the velocity with the field at the
/// current position, then drift the position by a full step.
pub fn boris_step(state: TrajectoryState, e: Vec3, b: Vec3, dt: f64, s: &Species) -> TrajectoryState {
    let v = boris_kick(state.v, e, b, dt, s.q_over_m());
    TrajectoryState {
        t: state.t + dt,
        r: state.r + v * dt,
        v,
    }
}

/// Half-open activity interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub const ALWAYS: TimeWindow = TimeWindow {
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
    };

    pub fn new(start: f64, end: f64) -> Result<Self> {
        if start.is_nan() || end.is_nan() || end < start {
            return Err(invalid(format!("bad time window [{start}, {end})")));
        }
        Ok(TimeWindow { start, end })
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Electrostatic sources with activity windows, plus a uniform B.
#[derive(Clone)]
pub struct FieldStack {
    sources: Vec<(Arc<dyn FieldSource>, TimeWindow)>,
    b: Vec3,
}

impl core::fmt::Debug for FieldStack {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FieldStack")
            .field("windows", &self.sources.iter().map(|(_, w)| *w).collect::<Vec<_>>())
            .field("b", &self.b)
            .finish()
    }
}

impl FieldStack {
    pub fn new(b: Vec3) -> Result<Self> {
        b.checked("magnetic field")?;
        Ok(FieldStack {
            sources: Vec::new(),
            b,
        })
    }

    /// Adds a source active during `window`.
    pub fn with(mut self, source: Arc<dyn FieldSource>, window: TimeWindow) -> Self {
        self.sources.push((source, window));
        self
    }

    /// Adds a source active at all times.
    pub fn with_static(self, source: Arc<dyn FieldSource>) -> Self {
        self.with(source, TimeWindow::ALWAYS)
    }

    pub fn b(&self) -> Vec3 {
        self.b
    }

    pub fn windows(&self) -> impl Iterator<Item = TimeWindow> + '_ {
        self.sources.iter().map(|(_, w)| *w)
    }

    fn active(&self, t: f64) -> impl Iterator<Item = &Arc<dyn FieldSource>> {
        self.sources.iter().filter(move |(_, w)| w.contains(t)).map(|(s, _)| s)
    }

    /// Sum of the active sources' fields.
    pub fn efield(&self, r: Vec3, t: f64) -> Result<Vec3> {
        let mut e = Vec3::ZERO;
        for s in self.active(t) {
            e += s.efield(r)?;
        }
        Ok(e)
    }

    pub fn potential(&self, r: Vec3, t: f64) -> Result<f64> {
        let mut phi = 0.0;
        for s in self.active(t) {
            phi += s.potential(r)?;
        }
        Ok(phi)
    }

    /// Electrode beats outside beats free across the active sources.
    pub fn locate(&self, r: Vec3, t: f64) -> Location {
        let mut loc = Location::Free;
        for s in self.active(t) {
            match s.locate(r) {
                Location::Electrode => return Location::Electrode,
                Location::Outside => loc = Location::Outside,
                Location::Free => {}
            }
        }
        loc
    }

    /// The same stack with every finite window edge moved to the nearest
    /// multiple of `dt`.
    fn snapped(&self, dt: f64, report: &mut Vec<Snap>) -> FieldStack {
        let mut snap = |t: f64| -> f64 {
            if !t.is_finite() {
                return t;
            }
            let s = (t / dt).round() * dt;
            if !report.iter().any(|r| r.requested == t) {
                report.push(Snap { requested: t, snapped: s });
            }
            s
        };
        let sources = self
            .sources
            .iter()
            .map(|(src, w)| {
                (
                    src.clone(),
                    TimeWindow {
                        start: snap(w.start),
                        end: snap(w.end),
                    },
                )
            })
            .collect();
        FieldStack { sources, b: self.b }
    }
}

/// Cyclotron period `2πm/(|q||B|)`, or `None` without a magnetic field.
pub fn cyclotron_period_for(s: &Species, b: Vec3) -> Option<f64> {
    let bn = b.norm();
    (bn > 0.0).then(|| 2.0 * PI * s.mass / (s.charge.abs() * bn))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// s
    pub dt: f64,
    /// s, absolute end time
    pub t_end: f64,
    /// Record every this many steps.
    pub record_stride: usize,
}

impl IntegratorConfig {
    /// dt = cyclotron period / 400, stride 10.
    pub fn for_species(s: &Species, b: Vec3, t_end: f64) -> Result<Self> {
        let period = cyclotron_period_for(s, b).ok_or_else(|| invalid("default time step needs B ≠ 0"))?;
        Ok(IntegratorConfig {
            dt: period / 400.0,
            t_end,
            record_stride: 10,
        })
    }

    pub fn validate(&self, s: &Species, b: Vec3) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("time step must be positive"));
        }
        if !self.t_end.is_finite() {
            return Err(invalid("end time must be finite"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record stride must be at least 1"));
        }
        if let Some(period) = cyclotron_period_for(s, b) {
            if self.dt > period / 100.0 * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "time step {:.3e} s exceeds 1/100 of the cyclotron period {:.3e} s",
                    self.dt, period
                )));
            }
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// Left the region where the fields are defined.
    Escaped { t: f64, r: Vec3 },
    /// Entered an electrode.
    Struck { t: f64, r: Vec3 },
}

/// A schedule edge moved onto the step lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snap {
    pub requested: f64,
    pub snapped: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectoryState>,
    /// Potential at each sample, V (NaN where undefined).
    pub potentials: Vec<f64>,
    pub termination: Termination,
    pub snaps: Vec<Snap>,
    /// Recording interval, s.
    pub sample_interval: f64,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryState {
        self.samples.last().expect("trajectory always holds the initial state")
    }

    pub fn escaped(&self) -> bool {
        self.termination != Termination::Completed
    }

    /// Total energy `qΦ + ½mv²` at each sample, J.
    pub fn energies(&self, s: &Species) -> Vec<f64> {
        self.samples
            .iter()
            .zip(&self.potentials)
            .map(|(st, phi)| s.charge * phi + s.kinetic_energy(st.v))
            .collect()
    }

    /// Largest |z − z_ref| over the samples.
    pub fn max_abs_z(&self, z_ref: f64) -> f64 {
        self.samples.iter().map(|s| (s.r.z - z_ref).abs()).fold(0.0, f64::max)
    }
}

fn classify(err: Error, t: f64, r: Vec3) -> Result<Termination> {
    match err {
        Error::OutOfDomain(_) => Ok(Termination::Escaped { t, r }),
        Error::SingularPoint(_) => Ok(Termination::Struck { t, r }),
        other => Err(other),
    }
}

/// Integrates from `state0` until `cfg.t_end`.
///
/// Each step is drift(dt/2), Boris kick with the field at the midpoint
/// position and time, drift(dt/2), so position and velocity stay
/// synchronous. Window edges are snapped to the step lattice (counted from
/// `state0.t`) and listed in `Trajectory::snaps`. Electrode and domain checks
/// run on every recorded sample; leaving the domain or striking an electrode
/// ends the run with the matching [`Termination`].
pub fn integrate(state0: TrajectoryState, fields: &FieldStack, cfg: &IntegratorConfig, s: &Species) -> Result<Trajectory> {
    cfg.validate(s, fields.b)?;
    state0.r.checked("initial position")?;
    state0.v.checked("initial velocity")?;
    let dt = cfg.dt;
    let mut snaps = Vec::new();
    // shift so the step lattice starts at t0
    let t0 = state0.t;
    let shifted = FieldStack {
        sources: fields
            .sources
            .iter()
            .map(|(src, w)| {
                (
                    src.clone(),
                    TimeWindow {
                        start: w.start - t0,
                        end: w.end - t0,
                    },
                )
            })
            .collect(),
        b: fields.b,
    };
    let stack = shifted.snapped(dt, &mut snaps);
    for sn in &mut snaps {
        sn.requested += t0;
        sn.snapped += t0;
    }

    let n_steps = ((cfg.t_end - t0) / dt).round().max(0.0) as usize;
    let q_over_m = s.q_over_m();
    let b = fields.b;
    let mut samples = Vec::with_capacity(n_steps / cfg.record_stride + 2);
    let mut potentials = Vec::with_capacity(samples.capacity());

    match stack.locate(state0.r, 0.0) {
        Location::Free => {}
        Location::Electrode => return Err(Error::SingularPoint(state0.r)),
        Location::Outside => return Err(Error::OutOfDomain(state0.r)),
    }
    samples.push(state0);
    potentials.push(stack.potential(state0.r, 0.0).unwrap_or(f64::NAN));

    let mut r = state0.r;
    let mut v = state0.v;
    let mut termination = Termination::Completed;
    for n in 0..n_steps {
        let t_mid = (n as f64 + 0.5) * dt;
        let r_mid = r + v * (0.5 * dt);
        let e = match stack.efield(r_mid, t_mid) {
            Ok(e) => e,
            Err(err) => {
                termination = classify(err, t0 + t_mid, r_mid)?;
                break;
            }
        };
        v = boris_kick(v, e, b, dt, q_over_m);
        r = r_mid + v * (0.5 * dt);
        let step = n + 1;
        if step % cfg.record_stride == 0 || step == n_steps {
            let t_rel = step as f64 * dt;
            let t = t0 + t_rel;
            match stack.locate(r, t_rel) {
                Location::Free => {}
                Location::Electrode => {
                    termination = Termination::Struck { t, r };
                }
                Location::Outside => {
                    termination = Termination::Escaped { t, r };
                }
            }
            if termination != Termination::Completed {
                break;
            }
            samples.push(TrajectoryState { t, r, v });
            potentials.push(stack.potential(r, t_rel).unwrap_or(f64::NAN));
        }
    }
    Ok(Trajectory {
        samples,
        potentials,
        termination,
        snaps,
        sample_interval: dt * cfg.record_stride as f64,
    })
}

/// Position `(x, y)` at time `t` of a particle released at rest from the
/// origin in `E ŷ` and `B ẑ`:
/// `x = −(V_D/ω) sin ωt + V_D t`, `y = (V_D/ω)(1 − cos ωt)`, `V_D = E/B`,
/// `ω = qB/m` (signed by the charge).
pub fn cycloid_closed_form(t: f64, e: f64, b: f64, s: &Species) -> Result<(f64, f64)> {
    if !(b > 0.0) {
        return Err(invalid("cycloid needs B > 0"));
    }
    let vd = e / b;
    let w = s.q_over_m() * b;
    Ok((-(vd / w) * (w * t).sin() + vd * t, (vd / w) * (1.0 - (w * t).cos())))
}

/// Field that carries a particle `displacement` metres along the drift
/// direction in one cyclotron loop: `E = d·|q|B²/(2πm)`.
pub fn hop_field_magnitude(displacement: f64, b: f64, s: &Species) -> Result<f64> {
    if displacement < 0.0 || !displacement.is_finite() {
        return Err(invalid("hop displacement must be non-negative"));
    }
    if !(b > 0.0) {
        return Err(invalid("hop needs B > 0"));
    }
    Ok(displacement * s.charge.abs() * b * b / (2.0 * PI * s.mass))
}
