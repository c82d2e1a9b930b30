use penning::config::{parse_pairs, parse_site, TrapConfig, TrapKind};
use penning::AppError;
use penning_core::units::{MM, US};

#[test]
fn pad_array_file() {
    let c = TrapConfig::parse(
        "# two sites\n\
         trap.kind = pad_array\n\
         b_field_T = 2.5\n\
         species.amu = 9\n\
         pad.gamma = 0.9   # layer ratio\n\
         pad.sites = 0,0 1,0\n\
         grid.h_mm = 0.25\n\
         schedule.1.t_us = 2.6\n\
         schedule.1.top_c0_V = 4\n\
         schedule.0.t_us = 0\n",
    )
    .unwrap();
    assert_eq!(c.kind, TrapKind::PadArray);
    assert_eq!(c.b, 2.5);
    assert!((c.species.mass / (9.0 * 1.66053906660e-27) - 1.0).abs() < 1e-12);
    assert_eq!(c.pads.gamma, 0.9);
    assert_eq!(c.pads.sites, vec![(0, 0), (1, 0)]);
    assert!((c.grid.h - 0.25 * MM).abs() < 1e-15);
    assert_eq!(c.schedule.len(), 2);
    assert_eq!(c.schedule[0].0, 0.0);
    assert!((c.schedule[1].0 - 2.6 * US).abs() < 1e-18);
    assert_eq!(c.schedule[1].1["top_c0"], 4.0);
}

#[test]
fn named_voltages_reach_the_geometry() {
    let c = TrapConfig::parse("trap.kind = two_plate\nvoltages.disk = -5\nvoltages.annulus = 5\n").unwrap();
    assert_eq!((c.two_plate.v_bottom, c.two_plate.v_top), (-5.0, 5.0));
    let c = TrapConfig::parse("trap.kind = ring_guide\nvoltages.ring_2 = 7\nvoltages.rod_0 = -1\n").unwrap();
    assert_eq!(c.guide.rings[2], 7.0);
    assert_eq!(c.guide.rods[0], -1.0);
    let bad = TrapConfig::parse("trap.kind = ring_guide\nvoltages.ring_3 = 7\n");
    assert!(matches!(bad, Err(AppError::Core(penning_core::Error::UnknownLabel(_)))), "{bad:?}");
}

#[test]
fn unknown_keys_are_listed_together() {
    let r = TrapConfig::parse("b_field_T = 1\ncolour = red\nschedule.0.t_ms = 1\n");
    match r {
        Err(AppError::UnknownKeys(k)) => assert_eq!(k, vec!["colour".to_string(), "schedule.0.t_ms".to_string()]),
        other => panic!("{other:?}"),
    }
    assert_eq!(AppError::UnknownKeys(vec![]).exit_code(), 2);
}

#[test]
fn malformed_values_are_config_errors() {
    for text in [
        "b_field_T = fast",
        "b_field_T = -1",
        "b_field_T = inf",
        "species.charge = 1.5",
        "trap.kind = toroid",
        "no equals sign",
        "b_field_T = 1\nb_field_T = 2",
        "schedule.0.top_c0_V = 1",
        "ring.radii_mm = 1,2",
    ] {
        let r = TrapConfig::parse(text);
        assert!(r.as_ref().is_err_and(|e| e.exit_code() == 2), "{text}: {r:?}");
    }
}

#[test]
fn pairs_and_sites() {
    let p = parse_pairs("a = 1 # c\n\n  # only a comment\nb=x y").unwrap();
    assert_eq!(p["a"], "1");
    assert_eq!(p["b"], "x y");
    assert_eq!(parse_site("-1, 2").unwrap(), (-1, 2));
    assert!(parse_site("1").is_err());
    assert!(parse_site("a,b").is_err());
}
