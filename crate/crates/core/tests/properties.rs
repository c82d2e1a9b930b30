use std::sync::Arc;

use penning_core::analytic::*;
use penning_core::dynamics::*;
use penning_core::field::{FieldSource, Location, UniformField};
use penning_core::units::MM;
use penning_core::{Species, TrajectoryState, Vec3};
use proptest::prelude::*;

fn ca() -> Species {
    Species::calcium_ion()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn six_wire_field_ignores_reference_radius(
        x in -6.0f64..6.0, y in -6.0f64..6.0, z in -1.8f64..1.8,
        r_ref in 0.05f64..10.0, dv in -5.0f64..5.0,
    ) {
        let base = SixWireSpec::prototype(dv);
        let a = base.wire_set().unwrap();
        let b = SixWireSpec { r_ref, ..base }.wire_set().unwrap();
        let r = Vec3::new(x, y, z) * MM;
        prop_assume!(a.locate(r) == Location::Free);
        let (ea, eb) = (a.efield(r).unwrap(), b.efield(r).unwrap());
        prop_assert!((ea - eb).norm() <= 1e-12 * ea.norm().max(1e-300));
    }

    #[test]
    fn boris_keeps_speed_in_pure_b(
        vx in -1e4f64..1e4, vy in -1e4f64..1e4, vz in -1e4f64..1e4,
        bx in -2.0f64..2.0, by in -2.0f64..2.0, bz in 0.1f64..10.0,
    ) {
        let s = ca();
        let b = Vec3::new(bx, by, bz);
        let v0 = Vec3::new(vx, vy, vz);
        prop_assume!(v0.norm() > 1.0);
        let dt = cyclotron_period_for(&s, b).unwrap() / 400.0;
        let mut st = TrajectoryState { r: Vec3::ZERO, v: v0, t: 0.0 };
        for _ in 0..10_000 {
            st = boris_step(st, Vec3::ZERO, b, dt, &s);
        }
        prop_assert!((st.v.norm() - v0.norm()).abs() <= 1e-12 * v0.norm());
    }

    #[test]
    fn mode_identities(wc in 1e3f64..1e8, frac in 0.0f64..0.999) {
        let wz = frac * wc / 2f64.sqrt();
        let m = mode_frequencies(wz, wc).unwrap();
        prop_assert!((m.omega_plus + m.omega_minus - wc).abs() <= 1e-12 * wc);
        prop_assert!(m.omega_plus >= m.omega_minus && m.omega_minus >= 0.0);
        prop_assert!((m.omega_plus * m.omega_minus - wz * wz / 2.0).abs() <= 1e-9 * wc * wc);
    }

    #[test]
    fn hop_field_is_linear_in_displacement(d in 0.0f64..0.05, k in 0.1f64..10.0, b in 0.1f64..10.0) {
        let s = ca();
        let e1 = hop_field_magnitude(d, b, &s).unwrap();
        let ek = hop_field_magnitude(k * d, b, &s).unwrap();
        prop_assert!((ek - k * e1).abs() <= 1e-12 * ek.max(1e-300));
        let (x, y) = cycloid_closed_form(cyclotron_period(&s, b).unwrap(), e1, b, &s).unwrap();
        prop_assert!((x - d).abs() <= 1e-9 * d.max(1e-12) && y.abs() <= 1e-9 * d.max(1e-12));
    }

    #[test]
    fn cycloid_loop_matches_integration(d_mm in 0.5f64..10.0, b in 0.5f64..5.0) {
        let s = ca();
        let d = d_mm * MM;
        let e = hop_field_magnitude(d, b, &s).unwrap();
        let period = cyclotron_period(&s, b).unwrap();
        let stack = FieldStack::new(Vec3::Z * b).unwrap().with_static(Arc::new(UniformField::new(Vec3::Y * e)));
        let cfg = IntegratorConfig { dt: period / 1e4, t_end: period, record_stride: 50 };
        let traj = integrate(TrajectoryState::at_rest(Vec3::ZERO), &stack, &cfg, &s).unwrap();
        for p in &traj.samples {
            let (x, y) = cycloid_closed_form(p.t, e, b, &s).unwrap();
            prop_assert!((p.r.x - x).hypot(p.r.y - y) < 1e-5 * d);
        }
    }
}
