//! `penning` subcommands.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use penning_core::analysis::{axial_profile, GammaProbe};
use penning_core::dynamics::{integrate, FieldStack, IntegratorConfig, Termination};
use penning_core::hop::{execute_hop, plan_hop, HopOptions};
use penning_core::units::{direction_from_angles, MEV, MM, US};
use penning_core::{TrajectoryState, Vec3};

use crate::config::{parse_site, TrapConfig, TrapKind};
use crate::csvout::{create, write_table, write_trajectory};
use crate::error::{AppError, AppResult};
use crate::gridfile::write_grid;
use crate::resonance::{resonance_bias, ResonanceOptions};
use crate::scenario::*;

#[derive(Debug, Parser)]
#[command(name = "penning", version, about = "Planar and wire Penning trap workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    let v = floats(s, 2)?;
    Ok((v[0], v[1]))
}

fn floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    Ok(v)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the electrode potential and write it as a grid file.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "h-mm")]
        h_mm: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Integrate one trajectory in the static (or scheduled) field.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "ke-mev", default_value_t = 0.0)]
        ke_mev: f64,
        /// Azimuth and declination of the launch, degrees.
        #[arg(long, value_parser = pair, default_value = "0,0")]
        dir: (f64, f64),
        #[arg(long = "t-us", default_value_t = 10.0)]
        t_us: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan and run a hop between neighbouring pad sites.
    Hop {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long = "ke-mev", default_value_t = 0.0)]
        ke_mev: f64,
        #[arg(long, value_parser = pair, default_value = "0,0")]
        dir: (f64, f64),
        #[arg(long)]
        out: PathBuf,
    },
    /// Quadrupole deviation against the layer-separation ratio.
    SweepGamma {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_parser = pair, default_value = "0.5,1.5")]
        range: (f64, f64),
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Six-wire bias whose axial frequency matches a circuit.
    Resonance {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "f-khz")]
        f_khz: f64,
    },
    /// Potential along a line: x0,y0,z0 (mm), dx,dy,dz, length (mm), samples.
    Profile {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        line: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn lost(t: &Termination) -> AppResult<()> {
    match t {
        Termination::Completed => Ok(()),
        Termination::Escaped { t, r } => Err(AppError::Lost(format!(
            "particle left the domain at t = {:.4} µs, r = ({:.3}, {:.3}, {:.3}) mm",
            t / US,
            r.x / MM,
            r.y / MM,
            r.z / MM
        ))),
        Termination::Struck { t, r } => Err(AppError::Lost(format!(
            "particle struck an electrode at t = {:.4} µs, r = ({:.3}, {:.3}, {:.3}) mm",
            t / US,
            r.x / MM,
            r.y / MM,
            r.z / MM
        ))),
    }
}

fn launch_velocity(cfg: &TrapConfig, ke_mev: f64, dir: (f64, f64)) -> AppResult<Vec3> {
    if !(ke_mev >= 0.0 && ke_mev.is_finite()) {
        return Err(AppError::config("--ke-mev must be non-negative"));
    }
    Ok(direction_from_angles(dir.0, dir.1) * cfg.species.speed_for_energy(ke_mev * MEV))
}

pub fn dispatch(cmd: Command) -> AppResult<()> {
    match cmd {
        Command::Solve { spec, out, h_mm, tol } => {
            let mut cfg = TrapConfig::load(&spec)?;
            if let Some(h) = h_mm {
                cfg.grid.h = h * MM;
            }
            if tol.is_some() {
                cfg.grid.tol = tol;
            }
            let solved = solve_grid(&cfg)?;
            write_grid(&out, &solved.grid)?;
            println!(
                "dims={:?} sweeps={} last_update_V={:.3e}",
                solved.grid.dims(),
                solved.sweeps,
                solved.last_update
            );
        }
        Command::Simulate {
            spec,
            ke_mev,
            dir,
            t_us,
            out,
        } => {
            let cfg = TrapConfig::load(&spec)?;
            let b = Vec3::Z * cfg.b;
            let (stack, start) = if cfg.kind == TrapKind::PadArray && !cfg.schedule.is_empty() {
                let (array, basis, _) = config_basis(&cfg)?;
                let stack = schedule_stack(&cfg, &array, &basis)?;
                let start = cfg.launch.unwrap_or_else(|| cfg.pads.site_center(cfg.trap_site));
                (stack, start)
            } else {
                let field = static_field(&cfg)?;
                let start = default_launch(&cfg, field.as_ref())?;
                (FieldStack::new(b)?.with_static(field), start)
            };
            let st = TrajectoryState {
                r: start,
                v: launch_velocity(&cfg, ke_mev, dir)?,
                t: 0.0,
            };
            let icfg = IntegratorConfig::for_species(&cfg.species, b, t_us * US)?;
            let traj = integrate(st, &stack, &icfg, &cfg.species)?;
            write_trajectory(create(&out)?, &traj, &cfg.species)?;
            for s in &traj.snaps {
                println!("snapped switch {:.6} µs -> {:.6} µs", s.requested / US, s.snapped / US);
            }
            println!("samples={} termination={:?}", traj.samples.len(), traj.termination);
            lost(&traj.termination)?;
        }
        Command::Hop {
            spec,
            from,
            to,
            ke_mev,
            dir,
            out,
        } => {
            let cfg = TrapConfig::load(&spec)?;
            let (from, to) = (parse_site(&from)?, parse_site(&to)?);
            let (array, basis, _) = config_basis(&cfg)?;
            let opts = HopOptions::default();
            let plan = plan_hop(&array, &basis, from, to, &cfg.species, cfg.b, &opts)?;
            let st = TrajectoryState {
                r: cfg.pads.site_center(from),
                v: launch_velocity(&cfg, ke_mev, dir)?,
                t: 0.0,
            };
            let r = execute_hop(
                &plan,
                &basis,
                &site_trap(&cfg, &array, from)?,
                &site_trap(&cfg, &array, to)?,
                st,
                0.0,
                &opts,
            )?;
            write_trajectory(create(&out)?, &r.trajectory, &cfg.species)?;
            println!(
                "dxy_mm={:.6}, zfinal_mm={:.6}, duration_us={:.6}",
                r.dxy / MM,
                r.z_final / MM,
                plan.duration / US
            );
            println!(
                "speed_final_m_s={:.3}, max_abs_z_mm={:.6}, voltage_scale={:.4}, fit_rms_rel={:.4}",
                r.speed_final,
                r.max_abs_z / MM,
                plan.scale,
                plan.fit_rms_rel
            );
            for (l, v) in &plan.hop_assignment {
                println!("{l}_V={v:.4}");
            }
            lost(&r.termination)?;
        }
        Command::SweepGamma { spec, range, steps, out } => {
            let cfg = TrapConfig::load(&spec)?;
            if cfg.kind != TrapKind::PadArray {
                return Err(AppError::config("sweep-gamma needs trap.kind = pad_array"));
            }
            let probe = GammaProbe {
                h: cfg.grid.h,
                margin: cfg.grid.margin,
                v_endcap: cfg.v_endcap,
                v_ring: cfg.v_ring,
                ..GammaProbe::default()
            };
            let scan = optimize_gamma_par(&cfg.pads, range, steps, &probe)?;
            let rows: Vec<Vec<f64>> = scan.curve.iter().map(|&(g, r)| vec![g, r]).collect();
            write_table(create(&out)?, &["gamma", "residual_rms_rel"], &rows)?;
            println!("gamma_star={:.4} single_trough={}", scan.gamma_star, scan.single_trough);
        }
        Command::Resonance { spec, f_khz } => {
            let cfg = TrapConfig::load(&spec)?;
            if cfg.kind != TrapKind::SixWire {
                return Err(AppError::config("resonance needs trap.kind = six_wire"));
            }
            let opts = ResonanceOptions {
                b: cfg.b,
                ..ResonanceOptions::default()
            };
            let v = resonance_bias(&cfg.six_wire, &cfg.species, f_khz * 1e3, &opts)?;
            println!("bias_V={v:.4}");
        }
        Command::Profile { spec, line, out } => {
            let cfg = TrapConfig::load(&spec)?;
            let line = floats(&line, 8).map_err(|e| AppError::config(format!("--line: {e}")))?;
            let p0 = Vec3::new(line[0], line[1], line[2]) * MM;
            let d = Vec3::new(line[3], line[4], line[5]);
            let len = line[6] * MM;
            let n = line[7];
            if !(n >= 2.0 && n.fract() == 0.0) || !(len > 0.0) || !(d.norm() > 0.0) {
                return Err(AppError::config("--line needs a direction, a positive length and ≥ 2 samples"));
            }
            let u = d.normalized();
            let field = static_field(&cfg)?;
            let prof = axial_profile(field.as_ref(), p0 + u * (0.5 * len), u, 0.5 * len, n as usize)?;
            let rows: Vec<Vec<f64>> = prof
                .iter()
                .map(|p| vec![p.s + 0.5 * len, p.r.x, p.r.y, p.r.z, p.phi])
                .collect();
            write_table(create(&out)?, &["s", "x", "y", "z", "phi_V"], &rows)?;
            println!("samples={}", rows.len());
        }
    }
    Ok(())
}
