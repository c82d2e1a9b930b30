use std::sync::Arc;

use penning_core::analysis::{stationary_point, z_well_scan};
use penning_core::dynamics::{integrate, FieldStack, IntegratorConfig, Termination};
use penning_core::field::{axial_curvature, FieldSource};
use penning_core::grid::{rasterize, solve_laplace, PotentialGrid, SolveOptions};
use penning_core::traps::*;
use penning_core::units::*;

const H: f64 = 0.25 * MM;

fn two_plate(spec: &TwoPlateSpec) -> PotentialGrid {
    let el = build_two_plate(spec).unwrap();
    let g = rasterize(&el, spec.domain(H, 3.0 * MM, 15.0 * MM), H).unwrap();
    let opts = SolveOptions::for_grid(&g);
    solve_laplace(g, &opts).unwrap().grid
}

#[test]
fn two_plate_traps_above_the_structure() {
    let spec = TwoPlateSpec::prototype();
    let g = Arc::new(two_plate(&spec));
    let top = spec.z0 + spec.thickness;
    let roots = axial_stationary_points(g.as_ref(), 0.0, 0.0, top + H, 18.0 * MM, 400).unwrap();
    assert_eq!(roots.len(), 1, "{roots:?}");
    let c = Vec3::new(0.0, 0.0, roots[0]);
    let kz = axial_curvature(g.as_ref(), c, H).unwrap();
    assert!(kz > 0.0);

    let s = species_from_amu(100.0, 1).unwrap();
    let wz = (s.q_over_m() * kz).sqrt();
    let t_end = 10.0 * 2.0 * std::f64::consts::PI / wz;
    let stack = FieldStack::new(Vec3::Z).unwrap().with_static(g.clone());
    let speed = s.speed_for_energy(100.0 * MEV);
    for (az, dec) in [(0.0, 0.0), (0.0, 45.0), (90.0, 90.0), (200.0, 135.0)] {
        let st = TrajectoryState {
            r: c,
            v: direction_from_angles(az, dec) * speed,
            t: 0.0,
        };
        let cfg = IntegratorConfig::for_species(&s, Vec3::Z, t_end).unwrap();
        let tr = integrate(st, &stack, &cfg, &s).unwrap();
        assert_eq!(tr.termination, Termination::Completed);
        let far = tr.samples.iter().map(|p| (p.r - c).norm()).fold(0.0, f64::max);
        assert!(far < spec.r_hole, "{az} {dec}: {far}");
    }
}

#[test]
fn equal_plate_voltages_leave_no_well_above() {
    let spec = TwoPlateSpec {
        v_top: 5.0,
        v_bottom: 5.0,
        ..TwoPlateSpec::prototype()
    };
    let g = two_plate(&spec);
    let top = spec.z0 + spec.thickness;
    let roots = axial_stationary_points(&g, 0.0, 0.0, top + H, 18.0 * MM, 400).unwrap();
    assert!(roots.is_empty(), "{roots:?}");
}

fn guide(v: &GuideVoltages) -> PotentialGrid {
    let spec = RingGuideSpec::default();
    let el = build_ring_transport(&spec, v).unwrap();
    let g = rasterize(&el, spec.domain(3.0 * MM), H).unwrap();
    let opts = SolveOptions::for_grid(&g);
    solve_laplace(g, &opts).unwrap().grid
}

#[test]
fn ring_guide_trap_and_transport_modes() {
    let spec = RingGuideSpec::default();
    let c = spec.crossing();

    let trap = guide(&GuideVoltages::trap());
    let p = stationary_point(&trap, c, H, 2.0 * MM).unwrap().expect("trap-mode stationary point");
    assert!(axial_curvature(&trap, p, H).unwrap() > 0.0);
    let well = z_well_scan(&trap, &[p], 1.0 * MM, H / 2.0).unwrap();
    assert!(well[0].z_min.is_some());

    let transport = guide(&GuideVoltages::transport());
    assert!(stationary_point(&transport, c, H, 2.0 * MM).unwrap().is_none());
    // tangential field along the ring near the crossing
    for phi in [-0.1f64, -0.05, 0.0, 0.05, 0.1] {
        let r = Vec3::new(c.x * phi.cos(), c.x * phi.sin(), 0.0);
        let t = Vec3::new(-phi.sin(), phi.cos(), 0.0);
        let e = transport.efield(r).unwrap();
        assert!(e.dot(t).abs() > 100.0, "{phi}: {e:?}");
    }
}
