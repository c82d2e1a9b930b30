//! Two-layer arrays of circular pad electrodes. Each trap site is a central
//! endcap pad (with a loading hole) surrounded by a hexagonal ring of six
//! pads, repeated on both layers: 14 electrodes per isolated site.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::basis::{Assignment, BasisBuilder, ElectrodeBasis};
use crate::dynamics::{FieldStack, TimeWindow};
use crate::error::{invalid, Error, Result};
use crate::field::FieldSource;
use crate::geometry::{Aabb, ElectrodeSolid, Shape};
use crate::grid::SolveOptions;
use crate::units::{Axis, Vec3, MM};
#[allow(unused_imports)]
use num_traits::Float;

/// Lattice coordinates of a trap site.
pub type Site = (i32, i32);

#[derive(Debug, Clone, PartialEq)]
pub struct PadArraySpec {
    pub pad_diameter: f64,
    /// Endcap-to-ring-pad centre distance within a site.
    pub pad_pitch: f64,
    /// Layer separation ÷ pad pitch.
    pub gamma: f64,
    pub hole_diameter: f64,
    pub pad_thickness: f64,
    pub sites: Vec<Site>,
    /// Distance between neighbouring site centres.
    pub site_spacing: f64,
}

impl Default for PadArraySpec {
    /// 4 mm pads on a 5 mm pitch, γ = 0.9, 1 mm holes, one site at the
    /// origin; neighbouring sites share two ring pads (spacing √3·pitch).
    fn default() -> Self {
        PadArraySpec {
            pad_diameter: 4.0 * MM,
            pad_pitch: 5.0 * MM,
            gamma: 0.9,
            hole_diameter: 1.0 * MM,
            pad_thickness: 0.4 * MM,
            sites: alloc::vec![(0, 0)],
            site_spacing: 3f64.sqrt() * 5.0 * MM,
        }
    }
}

impl PadArraySpec {
    /// Two sites sharing two ring pads, hop along +x.
    pub fn pair() -> Self {
        PadArraySpec {
            sites: alloc::vec![(0, 0), (1, 0)],
            ..Default::default()
        }
    }

    /// Sites 5 mm apart with shared pads: the default pattern scaled by
    /// 1/√3 so that adjacent sites still tile without overlap.
    pub fn five_mm_spacing() -> Self {
        let k = 1.0 / 3f64.sqrt();
        let d = PadArraySpec::default();
        PadArraySpec {
            pad_diameter: d.pad_diameter * k,
            pad_pitch: d.pad_pitch * k,
            hole_diameter: d.hole_diameter * k,
            site_spacing: 5.0 * MM,
            sites: alloc::vec![(0, 0), (1, 0)],
            ..d
        }
    }

    /// Inner-face separation of the two layers.
    pub fn gap(&self) -> f64 {
        self.gamma * self.pad_pitch
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.pad_diameter) && pos(self.pad_pitch) && pos(self.gamma) && pos(self.pad_thickness) && pos(self.site_spacing)) {
            return Err(invalid("pad dimensions, pitch, gamma and spacing must be positive"));
        }
        if !(self.hole_diameter >= 0.0 && self.hole_diameter < self.pad_diameter) {
            return Err(invalid("endcap hole must be smaller than the pad"));
        }
        if self.pad_diameter >= self.pad_pitch {
            return Err(invalid("pads overlap at this pitch"));
        }
        if self.sites.is_empty() {
            return Err(invalid("pad array needs at least one site"));
        }
        Ok(())
    }

    /// In-plane centre of a site.
    pub fn site_center(&self, site: Site) -> Vec3 {
        let s = self.site_spacing;
        let (i, j) = (site.0 as f64, site.1 as f64);
        Vec3::new(s * (i + 0.5 * j), s * 0.5 * 3f64.sqrt() * j, 0.0)
    }

    /// Grid spacing near `h_target` for which the layer gap is an odd number
    /// of cells, putting both inner pad faces half-way between node layers.
    pub fn fitted_spacing(&self, h_target: f64) -> f64 {
        let mut n = (self.gap() / h_target).round().max(1.0) as i64;
        if n % 2 == 0 {
            n += if (self.gap() / h_target) > n as f64 { 1 } else { -1 };
            n = n.max(1);
        }
        self.gap() / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layer {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadKind {
    Endcap,
    Ring,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pad {
    pub label: String,
    pub layer: Layer,
    pub kind: PadKind,
    /// In-plane centre (z = 0).
    pub center: Vec3,
    /// Sites this pad belongs to.
    pub sites: Vec<Site>,
}

fn site_tag(site: Site) -> String {
    format!("{}_{}", site.0, site.1)
}

/// Label of the endcap of `site` on `layer`.
pub fn endcap_label(layer: Layer, site: Site) -> String {
    format!("{}_e_{}", layer_prefix(layer), site_tag(site))
}

fn layer_prefix(layer: Layer) -> &'static str {
    match layer {
        Layer::Top => "top",
        Layer::Bottom => "bot",
    }
}

/// Label of the electrode facing `label` across the mid-plane.
pub fn mirror_label(label: &str) -> Option<String> {
    if let Some(rest) = label.strip_prefix("top_") {
        Some(format!("bot_{rest}"))
    } else {
        label.strip_prefix("bot_").map(|rest| format!("top_{rest}"))
    }
}

/// Resolved pad geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PadArray {
    spec: PadArraySpec,
    pads: Vec<Pad>,
}

impl PadArray {
    pub fn new(spec: PadArraySpec) -> Result<Self> {
        spec.validate()?;
        let mut uniq = BTreeSet::new();
        for s in &spec.sites {
            if !uniq.insert(*s) {
                return Err(invalid(format!("site {s:?} listed twice")));
            }
        }
        let tol = 1e-9 * spec.pad_pitch;
        let mut pads: Vec<Pad> = Vec::new();
        for layer in [Layer::Top, Layer::Bottom] {
            for &site in &spec.sites {
                let c = spec.site_center(site);
                let mut wanted = alloc::vec![(PadKind::Endcap, c, endcap_label(layer, site))];
                for k in 0..6 {
                    let a = PI / 6.0 + k as f64 * PI / 3.0;
                    let p = c + Vec3::new(a.cos(), a.sin(), 0.0) * spec.pad_pitch;
                    wanted.push((PadKind::Ring, p, format!("{}_r_{}_{k}", layer_prefix(layer), site_tag(site))));
                }
                for (kind, center, label) in wanted {
                    let existing = pads
                        .iter_mut()
                        .find(|p| p.layer == layer && (p.center - center).norm() < tol);
                    match existing {
                        Some(p) if p.kind == kind && kind == PadKind::Ring => p.sites.push(site),
                        Some(p) => {
                            return Err(Error::GeometryConflict {
                                first: p.label.clone(),
                                second: label,
                            })
                        }
                        None => pads.push(Pad {
                            label,
                            layer,
                            kind,
                            center,
                            sites: alloc::vec![site],
                        }),
                    }
                }
            }
        }
        for (n, a) in pads.iter().enumerate() {
            for b in &pads[n + 1..] {
                if a.layer == b.layer && (a.center - b.center).norm() < spec.pad_diameter {
                    return Err(Error::GeometryConflict {
                        first: a.label.clone(),
                        second: b.label.clone(),
                    });
                }
            }
        }
        Ok(PadArray { spec, pads })
    }

    pub fn spec(&self) -> &PadArraySpec {
        &self.spec
    }

    pub fn pads(&self) -> &[Pad] {
        &self.pads
    }

    pub fn labels(&self) -> Vec<String> {
        self.pads.iter().map(|p| p.label.clone()).collect()
    }

    /// Pads belonging to `site`.
    pub fn site_pads(&self, site: Site) -> impl Iterator<Item = &Pad> {
        self.pads.iter().filter(move |p| p.sites.contains(&site))
    }

    /// z of the pad mid-plane on `layer`.
    pub fn layer_z(&self, layer: Layer) -> f64 {
        let z = 0.5 * self.spec.gap() + 0.5 * self.spec.pad_thickness;
        match layer {
            Layer::Top => z,
            Layer::Bottom => -z,
        }
    }

    /// Solids at the voltages of `assignment` (missing labels at 0 V).
    pub fn electrodes(&self, assignment: &Assignment) -> Result<Vec<ElectrodeSolid>> {
        let unknown: Vec<String> = assignment
            .keys()
            .filter(|k| !self.pads.iter().any(|p| &p.label == *k))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownLabel(unknown));
        }
        self.pads
            .iter()
            .map(|p| {
                let v = assignment.get(&p.label).copied().unwrap_or(0.0);
                let center = Vec3::new(p.center.x, p.center.y, self.layer_z(p.layer));
                let r = 0.5 * self.spec.pad_diameter;
                let shape = match p.kind {
                    PadKind::Endcap if self.spec.hole_diameter > 0.0 => Shape::Annulus {
                        center,
                        r_inner: 0.5 * self.spec.hole_diameter,
                        r_outer: r,
                        thickness: self.spec.pad_thickness,
                        normal: Axis::Z,
                    },
                    _ => Shape::Disk {
                        center,
                        radius: r,
                        thickness: self.spec.pad_thickness,
                        normal: Axis::Z,
                    },
                };
                ElectrodeSolid::new(shape, v, p.label.clone())
            })
            .collect()
    }

    /// Grounded box around the array: `margin` of free space beyond the pads
    /// in every direction, node layers symmetric about z = 0 with a node at
    /// every site centre.
    pub fn domain(&self, h: f64, margin: f64) -> Aabb {
        let r = 0.5 * self.spec.pad_diameter;
        let (mut lo, mut hi) = (Vec3::new(f64::INFINITY, f64::INFINITY, 0.0), Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0));
        for p in &self.pads {
            lo.x = lo.x.min(p.center.x - r);
            lo.y = lo.y.min(p.center.y - r);
            hi.x = hi.x.max(p.center.x + r);
            hi.y = hi.y.max(p.center.y + r);
        }
        let down = |v: f64| ((v - margin) / h).floor() * h;
        let up = |v: f64| ((v + margin) / h).ceil() * h;
        let zh = up(self.layer_z(Layer::Top) + 0.5 * self.spec.pad_thickness);
        Aabb::new(Vec3::new(down(lo.x), down(lo.y), -zh), Vec3::new(up(hi.x), up(hi.y), zh))
    }

    /// Unit solutions for every pad. Bottom pads reuse the reflected
    /// solution of their top partner.
    pub fn solve_basis(&self, h: f64, margin: f64, opts: &SolveOptions) -> Result<ElectrodeBasis> {
        self.basis_builder(h, margin)?.solve_all(opts, |l| {
            if l.starts_with("bot_") {
                mirror_label(l)
            } else {
                None
            }
        })
    }

    pub fn basis_builder(&self, h: f64, margin: f64) -> Result<BasisBuilder> {
        BasisBuilder::new(&self.electrodes(&Assignment::new())?, self.domain(h, margin), h)
    }
}

/// A trapping assignment plus a note when its signs cannot confine.
#[derive(Debug, Clone, PartialEq)]
pub struct TrappingAssignment {
    pub assignment: Assignment,
    pub warning: Option<String>,
}

/// Both endcaps of `site` at `v_endcap`, its twelve ring pads at `v_ring`.
pub fn trapping_assignment(array: &PadArray, site: Site, v_endcap: f64, v_ring: f64) -> Result<TrappingAssignment> {
    if !array.spec.sites.contains(&site) {
        return Err(invalid(format!("site {site:?} is not part of the array")));
    }
    let mut a = Assignment::new();
    for p in array.site_pads(site) {
        let v = match p.kind {
            PadKind::Endcap => v_endcap,
            PadKind::Ring => v_ring,
        };
        a.insert(p.label.clone(), v);
    }
    let warning = if v_endcap * v_ring > 0.0 || (v_endcap == 0.0) != (v_ring == 0.0) {
        Some(format!(
            "endcap {v_endcap} V and ring {v_ring} V do not have opposite signs; no quadrupole well"
        ))
    } else {
        None
    };
    Ok(TrappingAssignment { assignment: a, warning })
}

/// One piece of a voltage schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSegment {
    /// s
    pub t_start: f64,
    pub assignment: Assignment,
}

/// Piecewise-constant electrode voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSchedule {
    segments: Vec<ScheduleSegment>,
}

impl VoltageSchedule {
    /// Checks that start times strictly increase and every label is one of
    /// `labels`.
    pub fn new(segments: Vec<ScheduleSegment>, labels: &[String]) -> Result<Self> {
        if segments.is_empty() {
            return Err(invalid("schedule needs at least one segment"));
        }
        for w in segments.windows(2) {
            if !(w[1].t_start > w[0].t_start) {
                return Err(invalid(format!(
                    "schedule start times must strictly increase ({} then {})",
                    w[0].t_start, w[1].t_start
                )));
            }
        }
        let unknown: BTreeSet<String> = segments
            .iter()
            .flat_map(|s| s.assignment.keys())
            .filter(|k| !labels.contains(k))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownLabel(unknown.into_iter().collect()));
        }
        Ok(VoltageSchedule { segments })
    }

    pub fn segments(&self) -> &[ScheduleSegment] {
        &self.segments
    }

    /// Assignment in force at `t` (the first segment also covers earlier
    /// times).
    pub fn at(&self, t: f64) -> &Assignment {
        let n = self.segments.iter().rposition(|s| s.t_start <= t).unwrap_or(0);
        &self.segments[n].assignment
    }

    /// One combined grid per segment, each active until the next starts.
    pub fn field_stack(&self, basis: &ElectrodeBasis, b: Vec3) -> Result<FieldStack> {
        let mut stack = FieldStack::new(b)?;
        for (n, seg) in self.segments.iter().enumerate() {
            let start = if n == 0 { f64::NEG_INFINITY } else { seg.t_start };
            let end = self.segments.get(n + 1).map_or(f64::INFINITY, |s| s.t_start);
            let grid: Arc<dyn FieldSource> = Arc::new(basis.combine(&seg.assignment)?);
            stack = stack.with(grid, TimeWindow::new(start, end)?);
        }
        Ok(stack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn electrode_counts() {
        let one = PadArray::new(PadArraySpec::default()).unwrap();
        assert_eq!(one.pads().len(), 14);
        let shared = PadArray::new(PadArraySpec::pair()).unwrap();
        assert_eq!(shared.pads().len(), 24);
        assert_eq!(shared.site_pads((1, 0)).count(), 14);
        let apart = PadArray::new(PadArraySpec {
            sites: alloc::vec![(0, 0), (2, 0)],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(apart.pads().len(), 28);
        // three mutually adjacent sites: each pair shares two pads, and one
        // pad is common to all three
        let three = PadArray::new(PadArraySpec {
            sites: alloc::vec![(0, 0), (1, 0), (0, 1)],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(three.pads().len(), 2 * (3 + 18 - 6 + 1));
        let labels: BTreeSet<String> = three.labels().into_iter().collect();
        assert_eq!(labels.len(), three.pads().len());
    }

    #[test]
    fn overlapping_layouts_rejected() {
        let close = PadArraySpec {
            site_spacing: 5.0 * MM,
            sites: alloc::vec![(0, 0), (1, 0)],
            ..Default::default()
        };
        assert!(PadArray::new(close).is_err());
        let fat = PadArraySpec {
            pad_diameter: 5.5 * MM,
            ..Default::default()
        };
        assert!(PadArray::new(fat).is_err());
        assert!(PadArray::new(PadArraySpec::five_mm_spacing()).is_ok());
        let bad_hole = PadArraySpec {
            hole_diameter: 4.0 * MM,
            ..Default::default()
        };
        assert!(PadArray::new(bad_hole).is_err());
    }

    #[test]
    fn fitted_spacing_gives_odd_cell_count() {
        let spec = PadArraySpec::default();
        for h in [0.15 * MM, 0.2 * MM, 0.25 * MM, 0.3 * MM] {
            let f = spec.fitted_spacing(h);
            let n = spec.gap() / f;
            assert!((n - n.round()).abs() < 1e-9 && (n.round() as i64) % 2 == 1, "{h} {n}");
            assert!((f / h - 1.0).abs() < 0.5);
        }
    }

    #[test]
    fn trapping_assignment_signs() {
        let a = PadArray::new(PadArraySpec::pair()).unwrap();
        let t = trapping_assignment(&a, (0, 0), 10.0, -10.0).unwrap();
        assert_eq!(t.assignment.len(), 14);
        assert!(t.warning.is_none());
        assert_eq!(t.assignment.values().filter(|&&v| v == 10.0).count(), 2);
        let w = trapping_assignment(&a, (0, 0), 10.0, 10.0).unwrap();
        assert!(w.warning.is_some());
        assert!(trapping_assignment(&a, (5, 5), 1.0, -1.0).is_err());
    }

    #[test]
    fn schedule_validation() {
        let labels = alloc::vec![String::from("a"), String::from("b")];
        let seg = |t: f64, l: &str| {
            let mut a = Assignment::new();
            a.insert(l.into(), 1.0);
            ScheduleSegment { t_start: t, assignment: a }
        };
        assert!(VoltageSchedule::new(alloc::vec![seg(0.0, "a"), seg(1.0, "b")], &labels).is_ok());
        assert!(VoltageSchedule::new(alloc::vec![seg(1.0, "a"), seg(1.0, "b")], &labels).is_err());
        assert!(matches!(
            VoltageSchedule::new(alloc::vec![seg(0.0, "zz")], &labels),
            Err(Error::UnknownLabel(_))
        ));
        let s = VoltageSchedule::new(alloc::vec![seg(0.0, "a"), seg(1.0, "b")], &labels).unwrap();
        assert!(s.at(0.5).contains_key("a"));
        assert!(s.at(2.0).contains_key("b"));
    }

    #[test]
    fn mirror_labels() {
        assert_eq!(mirror_label("top_r_0_0_3").as_deref(), Some("bot_r_0_0_3"));
        assert_eq!(mirror_label("bot_e_1_0").as_deref(), Some("top_e_1_0"));
        assert_eq!(mirror_label("ring_0"), None);
    }
}
