//! Bias at which the six-wire axial frequency meets a detection circuit.

use std::f64::consts::PI;
use std::sync::Arc;

use penning_core::analytic::SixWireSpec;
use penning_core::dynamics::{integrate, FieldStack, IntegratorConfig};
use penning_core::field::axial_curvature;
use penning_core::units::Axis;
use penning_core::{Species, TrajectoryState, Vec3};
use rayon::prelude::*;

use crate::error::{AppError, AppResult};
use crate::spectrum::{axis_signal, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceOptions {
    /// Stop when `|f_z − f| < rel_tol·f`.
    pub rel_tol: f64,
    /// Launch offset along z as a fraction of z0.
    pub amplitude_fraction: f64,
    /// Magnitudes of ΔV tried (with both signs) to bracket the crossing, V.
    pub bracket: Vec<f64>,
    /// Axial periods simulated per frequency estimate.
    pub periods: f64,
    /// Recorded samples per axial period.
    pub samples_per_period: f64,
    /// T
    pub b: f64,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        ResonanceOptions {
            rel_tol: 0.005,
            amplitude_fraction: 0.01,
            bracket: vec![0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            periods: 256.0,
            samples_per_period: 32.0,
            b: 1.0,
        }
    }
}

/// Axial frequency in Hz of a small oscillation about the trap centre at
/// bias `delta_v`, from the spectrum of an integrated trajectory. `None`
/// when the centre is not an axial minimum for this charge or the particle
/// is lost.
pub fn six_wire_axial_frequency(base: &SixWireSpec, delta_v: f64, s: &Species, opts: &ResonanceOptions) -> AppResult<Option<f64>> {
    let spec = SixWireSpec { delta_v, ..*base };
    let field = Arc::new(spec.wire_set()?);
    let kz = axial_curvature(field.as_ref(), Vec3::ZERO, 1e-3 * spec.z0)?;
    if !(s.charge * kz > 0.0) {
        return Ok(None);
    }
    let wz = (s.charge * kz / s.mass).sqrt();
    let tz = 2.0 * PI / wz;
    let b = Vec3::Z * opts.b;
    let base_cfg = IntegratorConfig::for_species(s, b, opts.periods * tz)?;
    let dt = base_cfg.dt.min(tz / (4.0 * opts.samples_per_period));
    let stride = ((tz / opts.samples_per_period) / dt).floor().max(1.0) as usize;
    let cfg = IntegratorConfig {
        dt,
        t_end: opts.periods * tz,
        record_stride: stride,
    };
    let stack = FieldStack::new(b)?.with_static(field);
    let start = TrajectoryState::at_rest(Vec3::new(0.0, 0.0, opts.amplitude_fraction * spec.z0));
    let traj = integrate(start, &stack, &cfg, s)?;
    if traj.escaped() {
        return Ok(None);
    }
    let (z, dt) = axis_signal(&traj, Axis::Z)?;
    Ok(Spectrum::new(&z, dt)?.peaks().first().map(|p| p.frequency))
}

/// ΔV at which the simulated axial frequency equals `f_circuit` (Hz).
pub fn resonance_bias(spec: &SixWireSpec, s: &Species, f_circuit: f64, opts: &ResonanceOptions) -> AppResult<f64> {
    if !(f_circuit > 0.0 && f_circuit.is_finite()) {
        return Err(AppError::config("circuit frequency must be positive"));
    }
    let mut biases: Vec<f64> = opts.bracket.iter().flat_map(|&v| [-v, v]).collect();
    biases.sort_by(f64::total_cmp);
    let table: Vec<(f64, Option<f64>)> = biases
        .par_iter()
        .map(|&v| six_wire_axial_frequency(spec, v, s, opts).map(|f| (v, f)))
        .collect::<AppResult<_>>()?;
    // adjacent confined biases of one sign whose frequencies straddle the target
    let bracket = table.windows(2).find_map(|w| match (w[0], w[1]) {
        ((v0, Some(f0)), (v1, Some(f1))) if v0 * v1 > 0.0 && (f0 - f_circuit) * (f1 - f_circuit) <= 0.0 => {
            Some((v0, f0, v1))
        }
        _ => None,
    });
    let Some((mut lo, f_lo, mut hi)) = bracket else {
        return Err(AppError::ResonanceNotFound {
            target_hz: f_circuit,
            table,
        });
    };
    let lo_below = f_lo < f_circuit;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let Some(f) = six_wire_axial_frequency(spec, mid, s, opts)? else {
            return Err(AppError::ResonanceNotFound {
                target_hz: f_circuit,
                table,
            });
        };
        if (f - f_circuit).abs() < opts.rel_tol * f_circuit {
            return Ok(mid);
        }
        if (f < f_circuit) == lo_below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
