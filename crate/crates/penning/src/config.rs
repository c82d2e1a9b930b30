//! Flat `key = value` trap specification files.
//!
//! Lengths are given in mm, times in µs and voltages in V; everything is
//! converted to SI on parsing. `#` starts a comment. Unknown keys are
//! rejected together.

use std::collections::BTreeMap;
use std::path::Path;

use penning_core::analytic::{SixWireSpec, TwoWireSpec};
use penning_core::basis::Assignment;
use penning_core::pads::{PadArraySpec, Site};
use penning_core::traps::{GuideVoltages, RingGuideSpec, TwoPlateSpec};
use penning_core::units::{MM, US};
use penning_core::{species_from_amu, Species, Vec3};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapKind {
    SixWire,
    TwoWire,
    TwoPlate,
    RingGuide,
    PadArray,
}

impl TrapKind {
    fn parse(s: &str) -> AppResult<Self> {
        Ok(match s {
            "six_wire" => TrapKind::SixWire,
            "two_wire" => TrapKind::TwoWire,
            "two_plate" => TrapKind::TwoPlate,
            "ring_guide" => TrapKind::RingGuide,
            "pad_array" => TrapKind::PadArray,
            other => {
                return Err(AppError::config(format!(
                    "trap.kind `{other}` is not one of six_wire, two_wire, two_plate, ring_guide, pad_array"
                )))
            }
        })
    }

    /// Whether the field comes from a solved grid.
    pub fn is_grid(self) -> bool {
        matches!(self, TrapKind::TwoPlate | TrapKind::RingGuide | TrapKind::PadArray)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSettings {
    pub h: f64,
    pub margin: f64,
    /// Free space kept above the two-plate annulus.
    pub above: f64,
    /// None → 1e-6 × max |V|.
    pub tol: Option<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            h: 0.2 * MM,
            margin: 3.0 * MM,
            above: 15.0 * MM,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    pub kind: TrapKind,
    pub species: Species,
    /// T, along +z
    pub b: f64,
    pub six_wire: SixWireSpec,
    pub two_wire: TwoWireSpec,
    pub two_plate: TwoPlateSpec,
    pub ring: RingGuideSpec,
    pub guide: GuideVoltages,
    pub pads: PadArraySpec,
    pub trap_site: Site,
    pub v_endcap: f64,
    pub v_ring: f64,
    /// Explicit `voltages.<label>` entries.
    pub voltages: Assignment,
    /// `(t_start, assignment)` in order.
    pub schedule: Vec<(f64, Assignment)>,
    pub grid: GridSettings,
    pub launch: Option<Vec3>,
}

impl Default for TrapConfig {
    fn default() -> Self {
        TrapConfig {
            kind: TrapKind::PadArray,
            species: Species::calcium_ion(),
            b: 1.0,
            six_wire: SixWireSpec::prototype(-1.35),
            two_wire: TwoWireSpec::prototype(),
            two_plate: TwoPlateSpec::prototype(),
            ring: RingGuideSpec::default(),
            guide: GuideVoltages::trap(),
            pads: PadArraySpec::default(),
            trap_site: (0, 0),
            v_endcap: 10.0,
            v_ring: -10.0,
            voltages: Assignment::new(),
            schedule: Vec::new(),
            grid: GridSettings::default(),
            launch: None,
        }
    }
}

fn num(key: &str, v: &str) -> AppResult<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| AppError::config(format!("{key}: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(AppError::config(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn list(key: &str, v: &str) -> AppResult<Vec<f64>> {
    v.split(',').map(|p| num(key, p)).collect()
}

fn site(key: &str, v: &str) -> AppResult<Site> {
    let p: Vec<&str> = v.split(',').map(str::trim).collect();
    let bad = || AppError::config(format!("{key}: `{v}` is not a site `i,j`"));
    if p.len() != 2 {
        return Err(bad());
    }
    Ok((p[0].parse().map_err(|_| bad())?, p[1].parse().map_err(|_| bad())?))
}

/// `i,j` lattice coordinates, as used on the command line too.
pub fn parse_site(v: &str) -> AppResult<Site> {
    site("site", v)
}

/// Parses `key = value` lines into a map, rejecting duplicates.
pub fn parse_pairs(text: &str) -> AppResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| AppError::config(format!("line {}: expected `key = value`", n + 1)))?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(AppError::config(format!("line {}: empty key", n + 1)));
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(AppError::config(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(out)
}

impl TrapConfig {
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> AppResult<Self> {
        let pairs = parse_pairs(text)?;
        let mut c = TrapConfig::default();
        if let Some(k) = pairs.get("trap.kind") {
            c.kind = TrapKind::parse(k)?;
        }
        let mut unknown = Vec::new();
        let mut amu = 40.0;
        let mut charge = 1i32;
        let mut species_set = false;
        let mut schedule: BTreeMap<u32, (Option<f64>, Assignment)> = BTreeMap::new();
        for (k, v) in &pairs {
            let k = k.as_str();
            let mm = || num(k, v).map(|x| x * MM);
            match k {
                "trap.kind" => {}
                "b_field_T" => c.b = num(k, v)?,
                "species.amu" => {
                    amu = num(k, v)?;
                    species_set = true;
                }
                "species.charge" => {
                    let q = num(k, v)?;
                    if q.fract() != 0.0 {
                        return Err(AppError::config("species.charge must be an integer"));
                    }
                    charge = q as i32;
                    species_set = true;
                }
                "pad.diameter_mm" => c.pads.pad_diameter = mm()?,
                "pad.pitch_mm" => c.pads.pad_pitch = mm()?,
                "pad.gamma" => c.pads.gamma = num(k, v)?,
                "hole.diameter_mm" => c.pads.hole_diameter = mm()?,
                "pad.thickness_mm" => c.pads.pad_thickness = mm()?,
                "pad.site_spacing_mm" => c.pads.site_spacing = mm()?,
                "pad.sites" => {
                    c.pads.sites = v.split_whitespace().map(|s| site(k, s)).collect::<AppResult<_>>()?;
                }
                "trap.site" => c.trap_site = site(k, v)?,
                "trap.v_endcap_V" => c.v_endcap = num(k, v)?,
                "trap.v_ring_V" => c.v_ring = num(k, v)?,
                "wire.d_mm" => c.six_wire.d = mm()?,
                "wire.z0_mm" => {
                    c.six_wire.z0 = mm()?;
                    c.two_wire.z0 = mm()?;
                }
                "wire.a_mm" => {
                    c.six_wire.a = mm()?;
                    c.two_wire.a = mm()?;
                }
                "wire.r_ref_mm" => {
                    c.six_wire.r_ref = mm()?;
                    c.two_wire.r_ref = mm()?;
                }
                "wire.delta_V" => c.six_wire.delta_v = num(k, v)?,
                "wire.v_plus_V" => c.two_wire.v_plus = num(k, v)?,
                "plate.z0_mm" => c.two_plate.z0 = mm()?,
                "plate.r_outer_mm" => c.two_plate.r_outer = mm()?,
                "plate.r_hole_mm" => c.two_plate.r_hole = mm()?,
                "plate.thickness_mm" => c.two_plate.thickness = mm()?,
                "ring.radii_mm" => {
                    let r = list(k, v)?;
                    if r.len() != 3 {
                        return Err(AppError::config("ring.radii_mm needs three radii"));
                    }
                    c.ring.ring_radii = [r[0] * MM, r[1] * MM, r[2] * MM];
                }
                "ring.wire_radius_mm" => c.ring.wire_radius = mm()?,
                "ring.z_gap_mm" => c.ring.z_gap = mm()?,
                "grid.h_mm" => c.grid.h = mm()?,
                "grid.margin_mm" => c.grid.margin = mm()?,
                "grid.above_mm" => c.grid.above = mm()?,
                "grid.tol_V" => c.grid.tol = Some(num(k, v)?),
                "launch.position_mm" => {
                    let p = list(k, v)?;
                    if p.len() != 3 {
                        return Err(AppError::config("launch.position_mm needs x,y,z"));
                    }
                    c.launch = Some(Vec3::new(p[0], p[1], p[2]) * MM);
                }
                _ => {
                    if let Some(label) = k.strip_prefix("voltages.") {
                        c.voltages.insert(label.to_string(), num(k, v)?);
                    } else if let Some(rest) = k.strip_prefix("schedule.") {
                        let (n, field) = rest
                            .split_once('.')
                            .ok_or_else(|| AppError::config(format!("{k}: expected schedule.<n>.<field>")))?;
                        let n: u32 = n
                            .parse()
                            .map_err(|_| AppError::config(format!("{k}: segment index must be an integer")))?;
                        let entry = schedule.entry(n).or_default();
                        if field == "t_us" {
                            entry.0 = Some(num(k, v)? * US);
                        } else if let Some(label) = field.strip_suffix("_V") {
                            entry.1.insert(label.to_string(), num(k, v)?);
                        } else {
                            unknown.push(k.to_string());
                        }
                    } else {
                        unknown.push(k.to_string());
                    }
                }
            }
        }
        if !unknown.is_empty() {
            return Err(AppError::UnknownKeys(unknown));
        }
        if species_set {
            c.species = species_from_amu(amu, charge)?;
        }
        if !(c.b > 0.0) {
            return Err(AppError::config("b_field_T must be positive"));
        }
        for (n, (t, a)) in schedule {
            let t = t.ok_or_else(|| AppError::config(format!("schedule.{n} has no t_us")))?;
            c.schedule.push((t, a));
        }
        c.apply_named_voltages()?;
        Ok(c)
    }

    /// Copies `voltages.*` onto the named electrodes of the wire, plate and
    /// guide geometries.
    fn apply_named_voltages(&mut self) -> AppResult<()> {
        let mut unknown = Vec::new();
        for (label, &v) in &self.voltages {
            match (self.kind, label.as_str()) {
                (TrapKind::TwoPlate, "disk") => self.two_plate.v_bottom = v,
                (TrapKind::TwoPlate, "annulus") => self.two_plate.v_top = v,
                (TrapKind::RingGuide, l) if l.starts_with("ring_") || l.starts_with("rod_") => {
                    let idx: Option<usize> = l[l.find('_').unwrap() + 1..].parse().ok().filter(|&i| i < 3);
                    match (idx, l.starts_with("ring_")) {
                        (Some(i), true) => self.guide.rings[i] = v,
                        (Some(i), false) => self.guide.rods[i] = v,
                        (None, _) => unknown.push(label.clone()),
                    }
                }
                (TrapKind::PadArray, _) => {}
                _ => unknown.push(label.clone()),
            }
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(penning_core::Error::UnknownLabel(unknown).into())
        }
    }
}
