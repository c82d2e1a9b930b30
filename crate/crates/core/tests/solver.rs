use std::f64::consts::PI;

use penning_core::geometry::{Aabb, ElectrodeSolid, Shape};
use penning_core::grid::*;
use penning_core::pads::{trapping_assignment, PadArray, PadArraySpec};
use penning_core::traps::*;
use penning_core::units::*;

fn exact(p: Vec3) -> f64 {
    (PI * p.x).sin() * (PI * p.y).sin() * (2f64.sqrt() * PI * p.z).sinh() / (2f64.sqrt() * PI).sinh()
}

fn harmonic_error(n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut g = PotentialGrid::new(Vec3::ZERO, h, [n + 1; 3]).unwrap();
    g.set_boundary_with(exact);
    let opts = SolveOptions {
        tol: 1e-13,
        ..SolveOptions::for_grid(&g)
    };
    let g = solve_laplace(g, &opts).unwrap().grid;
    [(0.5, 0.5, 0.5), (0.25, 0.5, 0.75), (0.75, 0.25, 0.5)]
        .iter()
        .map(|&(x, y, z)| {
            let p = Vec3::new(x, y, z);
            (g.sample_potential(p).unwrap() - exact(p)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn second_order_under_refinement() {
    let e: Vec<f64> = [8, 16, 32].iter().map(|&n| harmonic_error(n)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "{e:?}");
    }
}

#[test]
fn full_box_plates_give_a_linear_profile() {
    let mut g = PotentialGrid::new(Vec3::ZERO, 0.5 * MM, [13, 13, 41]).unwrap();
    let d = 20.0 * MM;
    g.set_boundary_with(|p| 10.0 * p.z / d);
    let g = solve_laplace(g.clone(), &SolveOptions::for_grid(&g)).unwrap().grid;
    for z in [1.0, 6.3, 10.0, 14.2, 19.5] {
        let v = g.sample_potential(Vec3::new(2.6 * MM, 3.1 * MM, z * MM)).unwrap();
        let want = 10.0 * z / 20.0;
        assert!((v - want).abs() < 1e-3 * want, "{z}: {v}");
    }
}

fn assert_max_principle(name: &str, g: PotentialGrid) {
    let opts = SolveOptions::for_grid(&g);
    let (lo, hi) = g.fixed_range();
    let g = solve_laplace(g, &opts).unwrap().grid;
    for (v, &m) in g.values().iter().zip(g.mask()) {
        if m == FREE {
            assert!(*v >= lo && *v <= hi, "{name}: {v} outside [{lo}, {hi}]");
        }
    }
}

#[test]
fn maximum_principle_across_geometries() {
    let h = 0.5 * MM;
    let tp = TwoPlateSpec::prototype();
    assert_max_principle("two-plate", rasterize(&build_two_plate(&tp).unwrap(), tp.domain(h, 3.0 * MM, 8.0 * MM), h).unwrap());

    let rg = RingGuideSpec::default();
    for v in [GuideVoltages::trap(), GuideVoltages::transport()] {
        let el = build_ring_transport(&rg, &v).unwrap();
        assert_max_principle("ring guide", rasterize(&el, rg.domain(3.0 * MM), h).unwrap());
    }

    let arr = PadArray::new(PadArraySpec::default()).unwrap();
    let h = arr.spec().fitted_spacing(0.4 * MM);
    let a = trapping_assignment(&arr, (0, 0), 10.0, -10.0).unwrap().assignment;
    assert_max_principle("pads", rasterize(&arr.electrodes(&a).unwrap(), arr.domain(h, 3.0 * MM), h).unwrap());

    let disk = ElectrodeSolid::new(
        Shape::Disk {
            center: Vec3::new(0.0, 0.0, 1.0 * MM),
            radius: 2.0 * MM,
            thickness: 0.5 * MM,
            normal: Axis::Z,
        },
        -3.0,
        "disk",
    )
    .unwrap();
    let domain = Aabb::centered(Vec3::ZERO, Vec3::new(6.0 * MM, 6.0 * MM, 6.0 * MM));
    assert_max_principle("disk", rasterize(&[disk], domain, 0.25 * MM).unwrap());
}
