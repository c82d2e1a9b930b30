//! CSV writers for trajectories and result tables.

use std::io::Write;
use std::path::Path;

use penning_core::dynamics::Trajectory;
use penning_core::Species;

use crate::error::{AppError, AppResult};

pub const TRAJECTORY_HEADER: [&str; 9] = ["t", "x", "y", "z", "vx", "vy", "vz", "ke_J", "pe_J"];

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory, s: &Species) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for (st, phi) in traj.samples.iter().zip(&traj.potentials) {
        let row = [
            st.t,
            st.r.x,
            st.r.y,
            st.r.z,
            st.v.x,
            st.v.y,
            st.v.z,
            s.kinetic_energy(st.v),
            s.charge * phi,
        ];
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| AppError::io("<trajectory>", e))
}

/// Numeric table with a header.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(AppError::config(format!("table row has {} columns, header {}", r.len(), header.len())));
        }
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| AppError::io("<table>", e))
}

pub fn create(path: &Path) -> AppResult<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}
