//! Plain-text snapshot and series files.
//!
//! Snapshots start with `# t=<t> h=<h>` followed by one row per node: the node
//! coordinates, then the value. Values use 17 significant digits so a file read
//! back reproduces the field bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::DiagnosticRecord;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{BoxGrid, RadialGrid};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), num)
}

pub fn format_radial_snapshot(t: f64, u: &Field<RadialGrid>) -> String {
    let g = u.grid();
    let mut s = format!("# t={} h={}\n", num(t), num(g.h()));
    for (i, v) in u.values().iter().enumerate() {
        let _ = writeln!(s, "{} {}", num(g.node(i)), num(*v));
    }
    s
}

pub fn format_box_snapshot(t: f64, u: &Field<BoxGrid>) -> String {
    let g = u.grid();
    let mut s = format!("# t={} h={}\n", num(t), num(g.h()));
    let mut idx = vec![0; g.dim()];
    for (f, v) in u.values().iter().enumerate() {
        g.multi(f, &mut idx);
        for &i in &idx {
            s.push_str(&num(g.coord(i)));
            s.push(' ');
        }
        s.push_str(&num(*v));
        s.push('\n');
    }
    s
}

/// A snapshot file read back: header values and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub h: f64,
    pub rows: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn columns(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// `(r, value)` pairs of a radial snapshot.
    pub fn radial_samples(&self) -> Result<Vec<(f64, f64)>> {
        if self.columns() != 2 {
            return Err(Error::Shape(format!("radial snapshot needs 2 columns, found {}", self.columns())));
        }
        Ok(self.rows.iter().map(|r| (r[0], r[1])).collect())
    }

    /// Values of a box snapshot, checked against the grid's node coordinates.
    pub fn box_field(&self, grid: &BoxGrid) -> Result<Field<BoxGrid>> {
        use crate::grid::Grid;
        if self.rows.len() != grid.len() || self.columns() != grid.dim() + 1 {
            return Err(Error::Shape(format!(
                "snapshot with {} rows of {} columns does not fit a {}-dimensional grid of {} nodes",
                self.rows.len(),
                self.columns(),
                grid.dim(),
                grid.len()
            )));
        }
        let tol = 1e-9 * grid.h();
        for (f, row) in self.rows.iter().enumerate() {
            let p = grid.point(f);
            if p.iter().zip(row).any(|(a, b)| (a - b).abs() > tol) {
                return Err(Error::Shape(format!("snapshot row {f} is not at grid node {p:?}")));
            }
        }
        Field::new(grid.clone(), self.rows.iter().map(|r| r[grid.dim()]).collect())
    }
}

pub fn parse_snapshot(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Shape("empty snapshot".into()))?;
    let mut t = None;
    let mut h = None;
    for tok in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = tok.strip_prefix("t=") {
            t = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("h=") {
            h = v.parse::<f64>().ok();
        }
    }
    let (Some(t), Some(h)) = (t, h) else {
        return Err(Error::Shape(format!("malformed snapshot header: {header}")));
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Shape(format!("line {}: {e}", k + 2)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Shape(format!("line {}: expected {} columns", k + 2, first.len())));
            }
        }
        rows.push(row);
    }
    Ok(Snapshot { t, h, rows })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    parse_snapshot(&fs::read_to_string(path)?)
}

/// Radial series: `t lipschitz sup_change sup_dist_to_prediction`.
pub fn format_radial_series(series: &[DiagnosticRecord]) -> String {
    let mut s = String::from("# t lipschitz sup_change sup_dist_to_prediction\n");
    for r in series {
        let _ = writeln!(s, "{} {} {} {}", num(r.t), num(r.lipschitz), opt(r.sup_change), opt(r.sup_dist));
    }
    s
}

/// Box series: `t lyapunov boundary_quotient lipschitz`.
pub fn format_box_series(series: &[DiagnosticRecord]) -> String {
    let mut s = String::from("# t lyapunov boundary_quotient lipschitz\n");
    for r in series {
        let _ = writeln!(s, "{} {} {} {}", num(r.t), opt(r.lyapunov), opt(r.boundary_quotient), num(r.lipschitz));
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn radial_snapshot_round_trip() {
        let g = RadialGrid::new(2.5, 20).unwrap();
        let u = Field::new(g, (0..=20).map(|i| (i as f64 * 0.37).sin() / 3.0).collect()).unwrap();
        let text = format_radial_snapshot(0.1, &u);
        assert!(text.starts_with("# t=1.0000000000000001e-1 h=1.2500000000000000e-1\n"));
        let back = parse_snapshot(&text).unwrap();
        assert_eq!(back.t, 0.1);
        assert_eq!(back.h, g.h());
        let vals: Vec<f64> = back.radial_samples().unwrap().iter().map(|p| p.1).collect();
        assert_eq!(vals, u.values());
    }

    #[test]
    fn box_snapshot_round_trip() {
        let g = BoxGrid::new(2, 1.0, 7).unwrap();
        let u = Field::new(g.clone(), (0..g.len()).map(|f| f as f64 / 7.0).collect()).unwrap();
        let back = parse_snapshot(&format_box_snapshot(2.0, &u)).unwrap();
        assert_eq!(back.columns(), 3);
        assert_eq!(back.box_field(&g).unwrap(), u);
        assert!(back.box_field(&BoxGrid::new(2, 1.0, 9).unwrap()).is_err());
        assert!(back.radial_samples().is_err());
    }

    #[test]
    fn malformed_snapshots() {
        assert!(parse_snapshot("").is_err());
        assert!(parse_snapshot("# t=1\n0 1\n").is_err());
        assert!(parse_snapshot("# t=1 h=0.1\n0 1\n0 1 2\n").is_err());
        assert!(parse_snapshot("# t=1 h=0.1\n0 x\n").is_err());
    }

    #[test]
    fn series_columns() {
        let rec = DiagnosticRecord {
            t: 0.5,
            lipschitz: 1.0,
            sup_change: None,
            sup_dist: Some(0.25),
            lyapunov: None,
            boundary_quotient: Some(3.0),
        };
        let r = format_radial_series(&[rec]);
        assert_eq!(r.lines().nth(1).unwrap().split(' ').collect::<Vec<_>>()[2], "nan");
        let b = format_box_series(&[rec]);
        let cols: Vec<&str> = b.lines().nth(1).unwrap().split(' ').collect();
        assert_eq!(cols.len(), 4);
        assert_eq!(cols[1], "nan");
        assert_eq!(cols[2].parse::<f64>().unwrap(), 3.0);
    }
}
