use std::f64::consts::PI;
use std::sync::Arc;

use penning::spectrum::{extract_frequencies, Spectrum, MIN_SAMPLES};
use penning::AppError;
use penning_core::analytic::mode_frequencies;
use penning_core::dynamics::{integrate, FieldStack, IntegratorConfig};
use penning_core::field::QuadrupoleField;
use penning_core::units::{Axis, MM};
use penning_core::{Species, TrajectoryState, Vec3};
use proptest::prelude::*;

fn tone(n: usize, dt: f64, parts: &[(f64, f64, f64)]) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            parts.iter().map(|&(a, f, p)| a * (2.0 * PI * f * t + p).sin()).sum::<f64>() + 0.7
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn single_tone_within_a_tenth_of_a_bin(bin in 20.0f64..400.0, phase in 0.0f64..6.28, amp in 1e-6f64..1e3) {
        let (n, dt) = (4096, 1e-6);
        let df = 1.0 / (n as f64 * dt);
        let s = Spectrum::new(&tone(n, dt, &[(amp, bin * df, phase)]), dt).unwrap();
        let p = s.peaks()[0];
        prop_assert!((p.frequency - bin * df).abs() < 0.1 * df, "{} vs {}", p.frequency / df, bin);
        prop_assert!((p.amplitude / amp - 1.0).abs() < 0.1);
        prop_assert!(p.amplitude >= 0.0 && p.frequency >= 0.0);
    }

    #[test]
    fn parseval_within_one_percent(f1 in 100.0f64..300.0, f2 in 320.0f64..900.0, a2 in 0.0f64..2.0, n in 1024usize..6000) {
        let dt = 1e-3;
        let df = 1.0 / (n as f64 * dt);
        let x = tone(n, dt, &[(1.0, f1 * df, 0.3), (a2, f2 * df, 1.1)]);
        let s = Spectrum::new(&x, dt).unwrap();
        prop_assert!((s.spectral_power / s.variance - 1.0).abs() < 0.01, "{}", s.spectral_power / s.variance);
    }
}

#[test]
fn two_tones_resolved_in_amplitude_order() {
    let (n, dt) = (8192, 1e-7);
    let df = 1.0 / (n as f64 * dt);
    let x = tone(n, dt, &[(0.2, 101.3 * df, 0.0), (1.0, 733.6 * df, 2.0)]);
    let p = Spectrum::new(&x, dt).unwrap().peaks();
    assert!((p[0].frequency / df - 733.6).abs() < 0.1);
    assert!((p[1].frequency / df - 101.3).abs() < 0.1);
}

#[test]
fn short_or_bad_input_rejected() {
    let r = Spectrum::new(&vec![0.0; MIN_SAMPLES - 1], 1.0);
    assert!(matches!(r, Err(AppError::TooShort { got: 1023, need: 1024 })));
    assert!(Spectrum::new(&vec![0.0; MIN_SAMPLES], 0.0).is_err());
    assert!(Spectrum::new(&vec![1.0; MIN_SAMPLES], 1.0).unwrap().peaks().is_empty());
}

#[test]
fn quadrupole_radial_modes_within_one_bin() {
    let s = Species::calcium_ion();
    let b = 1.0;
    let q = QuadrupoleField {
        center: Vec3::ZERO,
        c0: 0.0,
        c_quad: -2.0e5,
    };
    let wz = (4.0 * s.charge * 2.0e5 / s.mass).sqrt();
    let m = mode_frequencies(wz, s.charge * b / s.mass).unwrap();
    let t_minus = 2.0 * PI / m.omega_minus;
    let stack = FieldStack::new(Vec3::Z * b).unwrap().with_static(Arc::new(q));
    let dt = 2.0 * PI / m.omega_plus / 200.0;
    let cfg = IntegratorConfig {
        dt,
        t_end: 30.0 * t_minus,
        record_stride: 10,
    };
    let mut st = TrajectoryState::at_rest(Vec3::new(0.5 * MM, 0.0, 0.1 * MM));
    st.v = Vec3::new(0.0, 300.0, 0.0);
    let traj = integrate(st, &stack, &cfg, &s).unwrap();
    let peaks = extract_frequencies(&traj, Axis::X).unwrap();
    let bin = peaks[0].bin_width;
    for w in [m.omega_plus, m.omega_minus] {
        let f = w / (2.0 * PI);
        assert!(peaks.iter().any(|p| (p.frequency - f).abs() < bin), "{f} in {peaks:?}");
    }
}
