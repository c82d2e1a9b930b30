//! Turns a [`TrapConfig`] into solved fields, and the parallel scans.

use std::sync::Arc;

use penning_core::analysis::{gamma_points, pad_residual, refine_minimum, stationary_point, GammaProbe, GammaScan};
use penning_core::basis::{Assignment, ElectrodeBasis};
use penning_core::dynamics::FieldStack;
use penning_core::field::FieldSource;
use penning_core::geometry::{Aabb, ElectrodeSolid};
use penning_core::grid::{rasterize, solve_laplace, PotentialGrid, SolveOptions, Solved};
use penning_core::hop::{run_hop, HopOptions, HopPlan, HopReport};
use penning_core::pads::{mirror_label, trapping_assignment, PadArray, PadArraySpec, ScheduleSegment, Site, VoltageSchedule};
use penning_core::traps::{axial_stationary_points, build_ring_transport, build_two_plate};
use penning_core::units::{direction_from_angles, TrajectoryState};
use penning_core::Vec3;
use rayon::prelude::*;

use crate::config::{TrapConfig, TrapKind};
use crate::error::{AppError, AppResult};

/// Electrodes, box and node spacing of a grid-backed trap.
pub fn grid_problem(cfg: &TrapConfig) -> AppResult<(Vec<ElectrodeSolid>, Aabb, f64)> {
    let g = &cfg.grid;
    Ok(match cfg.kind {
        TrapKind::TwoPlate => {
            let p = &cfg.two_plate;
            (build_two_plate(p)?, p.domain(g.h, g.margin, g.above), g.h)
        }
        TrapKind::RingGuide => (build_ring_transport(&cfg.ring, &cfg.guide)?, cfg.ring.domain(g.margin), g.h),
        TrapKind::PadArray => {
            let array = PadArray::new(cfg.pads.clone())?;
            let h = cfg.pads.fitted_spacing(g.h);
            (array.electrodes(&pad_assignment(cfg, &array)?)?, array.domain(h, g.margin), h)
        }
        TrapKind::SixWire | TrapKind::TwoWire => {
            return Err(AppError::config("wire traps are analytic and have no grid"));
        }
    })
}

/// `voltages.*` if any were given, otherwise the trapping assignment of
/// `trap.site`.
pub fn pad_assignment(cfg: &TrapConfig, array: &PadArray) -> AppResult<Assignment> {
    if !cfg.voltages.is_empty() {
        return Ok(cfg.voltages.clone());
    }
    Ok(trapping_assignment(array, cfg.trap_site, cfg.v_endcap, cfg.v_ring)?.assignment)
}

pub fn solve_grid(cfg: &TrapConfig) -> AppResult<Solved> {
    let (el, domain, h) = grid_problem(cfg)?;
    let grid = rasterize(&el, domain, h)?;
    let mut opts = SolveOptions::for_grid(&grid);
    if let Some(t) = cfg.grid.tol {
        opts.tol = t;
    }
    Ok(solve_laplace(grid, &opts)?)
}

/// The static field of the configured trap.
pub fn static_field(cfg: &TrapConfig) -> AppResult<Arc<dyn FieldSource>> {
    Ok(match cfg.kind {
        TrapKind::SixWire => Arc::new(cfg.six_wire.wire_set()?),
        TrapKind::TwoWire => Arc::new(cfg.two_wire.wire_set()?),
        _ => Arc::new(solve_grid(cfg)?.grid),
    })
}

/// Where a launch starts unless `launch.position_mm` says otherwise: the
/// trap centre, or for the open traps the stationary point found near it.
pub fn default_launch(cfg: &TrapConfig, field: &dyn FieldSource) -> AppResult<Vec3> {
    if let Some(p) = cfg.launch {
        return Ok(p);
    }
    Ok(match cfg.kind {
        TrapKind::SixWire | TrapKind::TwoWire => Vec3::ZERO,
        TrapKind::TwoPlate => {
            let p = &cfg.two_plate;
            let lo = p.z0 + p.thickness;
            let roots = axial_stationary_points(field, 0.0, 0.0, lo, lo + cfg.grid.above, 400)?;
            Vec3::new(0.0, 0.0, roots.first().copied().unwrap_or(lo + 0.5 * cfg.grid.above))
        }
        TrapKind::RingGuide => {
            let c = cfg.ring.crossing();
            stationary_point(field, c, cfg.grid.h, 2.0 * cfg.ring.spacing())?.unwrap_or(c)
        }
        TrapKind::PadArray => cfg.pads.site_center(cfg.trap_site),
    })
}

/// Unit solutions of every pad, top layer solved in parallel and the bottom
/// layer mirrored.
pub fn pad_basis(spec: &PadArraySpec, h: f64, margin: f64, tol: Option<f64>) -> AppResult<(PadArray, ElectrodeBasis)> {
    let array = PadArray::new(spec.clone())?;
    let builder = array.basis_builder(h, margin)?;
    let mut opts = SolveOptions::for_grid(builder.template());
    opts.tol = tol.unwrap_or(1e-7);
    let symmetric = builder.z_symmetric();
    let labels: Vec<String> = builder.labels().to_vec();
    let direct: Vec<&String> = labels
        .iter()
        .filter(|l| !(symmetric && l.starts_with("bot_") && mirror_label(l).is_some_and(|m| labels.contains(&m))))
        .collect();
    let mut solved: Vec<(String, PotentialGrid)> = direct
        .par_iter()
        .map(|l| builder.solve_unit(l, &opts).map(|g| ((*l).clone(), g)))
        .collect::<Result<_, _>>()?;
    let mirrored: Vec<(String, PotentialGrid)> = labels
        .iter()
        .filter(|l| !direct.contains(l))
        .map(|l| {
            let src = mirror_label(l).expect("bottom pads have a top partner");
            let g = &solved.iter().find(|(s, _)| *s == src).expect("top partner solved").1;
            builder.mirrored(g).map(|m| (l.clone(), m))
        })
        .collect::<Result<_, _>>()?;
    solved.extend(mirrored);
    Ok((array, builder.finish(solved)?))
}

/// Pad basis for a config, at its fitted node spacing.
pub fn config_basis(cfg: &TrapConfig) -> AppResult<(PadArray, ElectrodeBasis, f64)> {
    if cfg.kind != TrapKind::PadArray {
        return Err(AppError::config("this command needs trap.kind = pad_array"));
    }
    let h = cfg.pads.fitted_spacing(cfg.grid.h);
    let (a, b) = pad_basis(&cfg.pads, h, cfg.grid.margin, cfg.grid.tol)?;
    Ok((a, b, h))
}

/// Field stack of the configured schedule on a pad basis.
pub fn schedule_stack(cfg: &TrapConfig, array: &PadArray, basis: &ElectrodeBasis) -> AppResult<FieldStack> {
    let segments = cfg
        .schedule
        .iter()
        .map(|(t, a)| ScheduleSegment {
            t_start: *t,
            assignment: a.clone(),
        })
        .collect();
    let schedule = VoltageSchedule::new(segments, &array.labels())?;
    Ok(schedule.field_stack(basis, Vec3::Z * cfg.b)?)
}

/// γ scan with the grid solves run in parallel.
pub fn optimize_gamma_par(spec: &PadArraySpec, range: (f64, f64), steps: usize, probe: &GammaProbe) -> AppResult<GammaScan> {
    let gammas = gamma_points(range, steps)?;
    let curve: Vec<(f64, f64)> = gammas
        .par_iter()
        .map(|&g| pad_residual(spec, g, probe).map(|f| (g, f.residual_rms_rel)))
        .collect::<Result<_, _>>()?;
    Ok(refine_minimum(&curve)?)
}

/// One launch of an angle-grid hop survey.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchOutcome {
    pub azimuth_deg: f64,
    pub declination_deg: f64,
    pub report: HopReport,
}

/// Hops from `start` with speed `speed` along every direction of an
/// azimuth/declination grid with `step_deg` spacing. Azimuths cover
/// `[0, 360)`, declinations `[0, 180]`.
#[allow(clippy::too_many_arguments)]
pub fn hop_angle_grid(
    plan: &HopPlan,
    basis: &ElectrodeBasis,
    trap_from: &Assignment,
    trap_to: &Assignment,
    start: Vec3,
    speed: f64,
    step_deg: f64,
    opts: &HopOptions,
) -> AppResult<Vec<LaunchOutcome>> {
    if !(step_deg > 0.0) {
        return Err(AppError::config("angle step must be positive"));
    }
    let hop: Arc<dyn FieldSource> = Arc::new(basis.combine(&plan.hop_assignment)?);
    let before: Arc<dyn FieldSource> = Arc::new(basis.combine(trap_from)?);
    let after: Arc<dyn FieldSource> = Arc::new(basis.combine(trap_to)?);
    let n_az = (360.0 / step_deg).round() as usize;
    let n_dec = (180.0 / step_deg).round() as usize + 1;
    let angles: Vec<(f64, f64)> = (0..n_az)
        .flat_map(|i| (0..n_dec).map(move |j| (i as f64 * step_deg, (j as f64 * step_deg).min(180.0))))
        .collect();
    Ok(angles
        .par_iter()
        .map(|&(az, dec)| {
            let st = TrajectoryState {
                r: start,
                v: direction_from_angles(az, dec) * speed,
                t: 0.0,
            };
            run_hop(plan, hop.clone(), before.clone(), after.clone(), st, 0.0, opts).map(|report| LaunchOutcome {
                azimuth_deg: az,
                declination_deg: dec,
                report,
            })
        })
        .collect::<Result<_, _>>()?)
}

/// Trapping assignment of a pad site with the configured voltages.
pub fn site_trap(cfg: &TrapConfig, array: &PadArray, site: Site) -> AppResult<Assignment> {
    Ok(trapping_assignment(array, site, cfg.v_endcap, cfg.v_ring)?.assignment)
}
