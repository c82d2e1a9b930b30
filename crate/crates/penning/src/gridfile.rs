//! `penning-grid v1` text format.
//!
//! ```text
//! penning-grid v1
//! origin x y z
//! spacing h
//! dims nx ny nz
//! labels boundary disk annulus
//! <nx·ny·nz potentials, x fastest>
//! <nx·ny·nz mask tokens: `.` free, label index otherwise>
//! ```
//!
//! Potentials are written with the shortest representation that parses back
//! to the same `f64`, so a write→read cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use penning_core::grid::{PotentialGrid, FREE};
use penning_core::Vec3;

use crate::error::{AppError, AppResult};

pub const MAGIC: &str = "penning-grid v1";

pub fn to_string(grid: &PotentialGrid) -> AppResult<String> {
    if let Some(bad) = grid.labels().iter().find(|l| l.is_empty() || l.chars().any(char::is_whitespace)) {
        return Err(AppError::config(format!("label `{bad}` cannot be written to a grid file")));
    }
    let [nx, ny, nz] = grid.dims();
    let o = grid.origin();
    let mut s = String::with_capacity(grid.values().len() * 24);
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "origin {} {} {}", o.x, o.y, o.z);
    let _ = writeln!(s, "spacing {}", grid.spacing());
    let _ = writeln!(s, "dims {nx} {ny} {nz}");
    let _ = writeln!(s, "labels {}", grid.labels().join(" "));
    for row in grid.values().chunks(nx) {
        let mut first = true;
        for v in row {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    for row in grid.mask().chunks(nx) {
        let tokens: Vec<String> = row
            .iter()
            .map(|&m| if m == FREE { ".".to_string() } else { m.to_string() })
            .collect();
        s.push_str(&tokens.join(" "));
        s.push('\n');
    }
    Ok(s)
}

pub fn write_grid(path: &Path, grid: &PotentialGrid) -> AppResult<()> {
    let text = to_string(grid)?;
    let f = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(text.as_bytes()).map_err(|e| AppError::io(path, e))?;
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_grid(path: &Path) -> AppResult<PotentialGrid> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> AppResult<PotentialGrid> {
    let err = |line: usize, msg: String| AppError::Format {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let mut header = |key: &str| -> AppResult<(usize, Vec<&str>)> {
        let (n, l) = lines.next().ok_or_else(|| err(0, format!("missing `{key}` line")))?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(err(n + 1, format!("expected `{key}`")));
        }
        Ok((n + 1, parts.collect()))
    };
    let (n, magic) = header("penning-grid")?;
    if magic != ["v1"] {
        return Err(err(n, format!("unsupported format, expected `{MAGIC}`")));
    }
    let floats = |n: usize, parts: &[&str], count: usize| -> AppResult<Vec<f64>> {
        if parts.len() != count {
            return Err(err(n, format!("expected {count} numbers")));
        }
        parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|e| err(n, format!("`{p}`: {e}"))))
            .collect()
    };
    let (n, p) = header("origin")?;
    let o = floats(n, &p, 3)?;
    let (n, p) = header("spacing")?;
    let h = floats(n, &p, 1)?[0];
    let (n, p) = header("dims")?;
    if p.len() != 3 {
        return Err(err(n, "expected 3 node counts".into()));
    }
    let dims: Vec<usize> = p
        .iter()
        .map(|t| t.parse::<usize>().map_err(|e| err(n, format!("`{t}`: {e}"))))
        .collect::<AppResult<_>>()?;
    let (_, labels) = header("labels")?;
    let labels: Vec<String> = labels.into_iter().map(String::from).collect();
    let count = dims[0] * dims[1] * dims[2];

    let mut tokens = lines.flat_map(|(n, l)| l.split_whitespace().map(move |t| (n + 1, t)));
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, t) = tokens.next().ok_or_else(|| err(0, format!("expected {count} potentials")))?;
        values.push(t.parse::<f64>().map_err(|e| err(n, format!("`{t}`: {e}")))?);
    }
    let mut mask = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, t) = tokens.next().ok_or_else(|| err(0, format!("expected {count} mask tokens")))?;
        mask.push(if t == "." {
            FREE
        } else {
            let m = t.parse::<u16>().map_err(|e| err(n, format!("mask `{t}`: {e}")))?;
            if m == FREE || m as usize >= labels.len() {
                return Err(err(n, format!("mask index {m} has no label")));
            }
            m
        });
    }
    if let Some((n, t)) = tokens.next() {
        return Err(err(n, format!("unexpected trailing token `{t}`")));
    }
    Ok(PotentialGrid::from_parts(
        Vec3::new(o[0], o[1], o[2]),
        h,
        [dims[0], dims[1], dims[2]],
        values,
        mask,
        labels,
    )?)
}
