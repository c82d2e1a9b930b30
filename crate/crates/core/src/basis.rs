//! Unit-voltage basis solutions. Laplace's equation is linear in the
//! electrode voltages, so one solve per electrode (1 V on it, 0 V on the
//! rest) gives the potential for any assignment as a weighted sum.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Aabb, ElectrodeSolid};
use crate::grid::{rasterize, solve_laplace, PotentialGrid, SolveOptions, FREE};

/// Electrode label → voltage. Labels absent from a map are at 0 V.
pub type Assignment = BTreeMap<String, f64>;

/// Rasterised geometry with every electrode at 0 V, ready to produce the
/// unit problems.
#[derive(Debug, Clone)]
pub struct BasisBuilder {
    template: PotentialGrid,
    labels: Vec<String>,
}

impl BasisBuilder {
    pub fn new(electrodes: &[ElectrodeSolid], domain: Aabb, h: f64) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for e in electrodes {
            if seen.insert(e.label.clone(), ()).is_some() {
                return Err(invalid(format!("duplicate electrode label `{}`", e.label)));
            }
        }
        let zeroed: Vec<ElectrodeSolid> = electrodes
            .iter()
            .map(|e| ElectrodeSolid {
                voltage: 0.0,
                ..e.clone()
            })
            .collect();
        let template = rasterize(&zeroed, domain, h)?;
        Ok(BasisBuilder {
            template,
            labels: electrodes.iter().map(|e| e.label.clone()).collect(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn template(&self) -> &PotentialGrid {
        &self.template
    }

    fn mask_index(&self, label: &str) -> Result<u16> {
        self.template
            .labels()
            .iter()
            .position(|l| l == label)
            .map(|p| p as u16)
            .ok_or_else(|| Error::UnknownLabel(alloc::vec![String::from(label)]))
    }

    /// The grid with `label` at 1 V and everything else at 0 V.
    pub fn unit_problem(&self, label: &str) -> Result<PotentialGrid> {
        let m = self.mask_index(label)?;
        let values = self
            .template
            .mask()
            .iter()
            .map(|&k| if k == m { 1.0 } else { 0.0 })
            .collect();
        self.template.with_values(values)
    }

    /// Solves the unit problem for one label.
    pub fn solve_unit(&self, label: &str, opts: &SolveOptions) -> Result<PotentialGrid> {
        Ok(solve_laplace(self.unit_problem(label)?, opts)?.grid)
    }

    /// Whether the fixed-node pattern is symmetric under z → −z, which makes
    /// mirrored solutions valid.
    pub fn z_symmetric(&self) -> bool {
        let free: Vec<bool> = self.template.mask().iter().map(|&m| m == FREE).collect();
        let [nx, ny, nz] = self.template.dims();
        let plane = nx * ny;
        (0..nz).all(|k| free[k * plane..(k + 1) * plane] == free[(nz - 1 - k) * plane..(nz - k) * plane])
    }

    /// Solution for the z-mirror image of the electrode whose unit solution
    /// is `solved`.
    pub fn mirrored(&self, solved: &PotentialGrid) -> Result<PotentialGrid> {
        if !self.z_symmetric() {
            return Err(invalid("geometry is not symmetric under z → −z"));
        }
        self.template.with_values(solved.mirrored_z_values())
    }

    /// Solves every label in order. `mirror_of(label)` may name an already
    /// solved label whose z-mirror image this one is; its solution is then
    /// reflected instead of recomputed.
    pub fn solve_all(self, opts: &SolveOptions, mirror_of: impl Fn(&str) -> Option<String>) -> Result<ElectrodeBasis> {
        let symmetric = self.z_symmetric();
        let mut solved: Vec<(String, PotentialGrid)> = Vec::with_capacity(self.labels.len());
        for label in &self.labels {
            let reflected = match mirror_of(label) {
                Some(src) if symmetric => solved.iter().find(|(l, _)| *l == src).map(|(_, g)| self.mirrored(g)),
                _ => None,
            };
            let grid = match reflected {
                Some(g) => g?,
                None => self.solve_unit(label, opts)?,
            };
            solved.push((label.clone(), grid));
        }
        self.finish(solved)
    }

    /// Collects separately solved unit grids (any order) into a basis.
    pub fn finish(self, solved: Vec<(String, PotentialGrid)>) -> Result<ElectrodeBasis> {
        let mut by_label: BTreeMap<String, PotentialGrid> = solved.into_iter().collect();
        let mut grids = Vec::with_capacity(self.labels.len());
        for l in &self.labels {
            let g = by_label
                .remove(l)
                .ok_or_else(|| invalid(format!("missing basis solution for `{l}`")))?;
            if g.mask() != self.template.mask() || g.dims() != self.template.dims() {
                return Err(invalid(format!("basis grid for `{l}` does not match the geometry")));
            }
            grids.push(Arc::new(g));
        }
        Ok(ElectrodeBasis {
            labels: self.labels,
            grids,
        })
    }
}

/// Unit solutions for every electrode of one geometry.
#[derive(Debug, Clone)]
pub struct ElectrodeBasis {
    labels: Vec<String>,
    grids: Vec<Arc<PotentialGrid>>,
}

impl ElectrodeBasis {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn grid(&self, label: &str) -> Option<&Arc<PotentialGrid>> {
        self.labels.iter().position(|l| l == label).map(|p| &self.grids[p])
    }

    pub fn grids(&self) -> impl Iterator<Item = (&str, &Arc<PotentialGrid>)> {
        self.labels.iter().map(|l| l.as_str()).zip(&self.grids)
    }

    /// Rejects labels that are not part of this geometry.
    pub fn check(&self, assignment: &Assignment) -> Result<()> {
        let unknown: Vec<String> = assignment
            .keys()
            .filter(|k| !self.labels.contains(k))
            .cloned()
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::UnknownLabel(unknown))
        }
    }

    /// Potential grid for `assignment`.
    pub fn combine(&self, assignment: &Assignment) -> Result<PotentialGrid> {
        self.check(assignment)?;
        let terms: Vec<(f64, &PotentialGrid)> = self
            .labels
            .iter()
            .zip(&self.grids)
            .map(|(l, g)| (assignment.get(l).copied().unwrap_or(0.0), g.as_ref()))
            .collect();
        PotentialGrid::linear_combination(&terms)
    }
}
