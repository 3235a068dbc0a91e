//! Deterministic output writers: legacy-VTK snapshots of the solution
//! fields, a CSV energy history, and a plain-text run summary. Floats are
//! written with enough digits to round-trip exactly.

use fissura::solver::SolveHistory;
use fissura::Field;
use std::fmt::Write as _;
use std::path::Path;

/// Serializes displacement and phase field on a structured grid as legacy
/// ASCII VTK (readable by ParaView and friends).
pub fn vtk_snapshot(u: &Field, v: &Field) -> String {
    let grid = u.grid();
    let n = grid.n_nodes();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("fissura solution fields\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", grid.nx + 1, grid.ny + 1);
    out.push_str("ORIGIN 0 0 0\n");
    let _ = writeln!(out, "SPACING {:.16e} {:.16e} 1", grid.hx(), grid.hy());
    let _ = writeln!(out, "POINT_DATA {n}");
    out.push_str("VECTORS displacement double\n");
    for node in 0..n {
        let _ = writeln!(out, "{:.16e} {:.16e} 0", u.get(node, 0), u.get(node, 1));
    }
    out.push_str("SCALARS phase double 1\n");
    out.push_str("LOOKUP_TABLE default\n");
    for node in 0..n {
        let _ = writeln!(out, "{:.16e}", v.get(node, 0));
    }
    out
}

/// Fields read back from a [`vtk_snapshot`] file.
#[cfg(test)]
#[derive(Debug)]
pub struct VtkFields {
    pub dims: [usize; 2],
    pub spacing: [f64; 2],
    pub displacement: Vec<[f64; 2]>,
    pub phase: Vec<f64>,
}

/// Parses the exact subset of legacy VTK that [`vtk_snapshot`] emits.
#[cfg(test)]
pub fn parse_vtk(text: &str) -> Result<VtkFields, String> {
    let mut lines = text.lines();
    let mut dims = None;
    let mut spacing = None;
    let mut n_points = None;
    for line in lines.by_ref() {
        if let Some(rest) = line.strip_prefix("DIMENSIONS ") {
            let parts: Vec<usize> = rest
                .split_whitespace()
                .map(|p| p.parse().map_err(|e| format!("bad DIMENSIONS: {e}")))
                .collect::<Result<_, _>>()?;
            dims = Some([parts[0], parts[1]]);
        } else if let Some(rest) = line.strip_prefix("SPACING ") {
            let parts: Vec<f64> = rest
                .split_whitespace()
                .map(|p| p.parse().map_err(|e| format!("bad SPACING: {e}")))
                .collect::<Result<_, _>>()?;
            spacing = Some([parts[0], parts[1]]);
        } else if let Some(rest) = line.strip_prefix("POINT_DATA ") {
            n_points = Some(rest.trim().parse::<usize>().map_err(|e| format!("bad POINT_DATA: {e}"))?);
        } else if line.starts_with("VECTORS displacement") {
            break;
        }
    }
    let n = n_points.ok_or("missing POINT_DATA")?;
    let mut displacement = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or("truncated displacement data")?;
        let parts: Vec<f64> = line
            .split_whitespace()
            .map(|p| p.parse().map_err(|e| format!("bad displacement value: {e}")))
            .collect::<Result<_, _>>()?;
        displacement.push([parts[0], parts[1]]);
    }
    for line in lines.by_ref() {
        if line.starts_with("LOOKUP_TABLE") {
            break;
        }
    }
    let mut phase = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or("truncated phase data")?;
        phase.push(line.trim().parse().map_err(|e| format!("bad phase value: {e}"))?);
    }
    Ok(VtkFields {
        dims: dims.ok_or("missing DIMENSIONS")?,
        spacing: spacing.ok_or("missing SPACING")?,
        displacement,
        phase,
    })
}

/// One CSV row per half-step of the staggered solve; `iter` is the global
/// record index (0 = initial state).
pub fn energy_history_csv(history: &SolveHistory) -> String {
    let mut out = String::from("iter,bulk_mod,bulk_unmod,surf_grad,surf_well,total\n");
    for (iter, record) in history.records.iter().enumerate() {
        let e = record.energy;
        let _ = writeln!(
            out,
            "{iter},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            e.bulk_modulated,
            e.bulk_unmodulated,
            e.surface_gradient,
            e.surface_well,
            e.total()
        );
    }
    out
}

/// Key-value summary block; keys stay in insertion order.
#[derive(Debug, Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.lines.push((key.to_string(), format!("{value:.16e}")));
    }

    pub fn render(&self) -> String {
        let width = self.lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (key, value) in &self.lines {
            let _ = writeln!(out, "{key:width$}  {value}");
        }
        out
    }
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create `{}`: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| format!("cannot write `{}`: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fissura::solver::alternate_minimize;
    use fissura::grid::BoundaryConditions;
    use fissura::{Grid, ModelParams, SolveOptions};

    #[test]
    fn vtk_round_trips_exactly() {
        let grid = Grid::new(5, 3, 2.0, 1.0);
        let u = Field::from_fn_vector(grid, |x| [0.1 * x[0] - x[1] / 3.0, x[0] * x[1]]);
        let v = Field::from_fn_scalar(grid, |x| 1.0 / (1.0 + x[0] + x[1]));
        let text = vtk_snapshot(&u, &v);
        let parsed = parse_vtk(&text).unwrap();
        assert_eq!(parsed.dims, [6, 4]);
        assert_eq!(parsed.spacing, [grid.hx(), grid.hy()]);
        for node in 0..grid.n_nodes() {
            assert_eq!(parsed.displacement[node], [u.get(node, 0), u.get(node, 1)]);
            assert_eq!(parsed.phase[node], v.get(node, 0));
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_record() {
        let grid = Grid::unit_square(4);
        let mut u = Field::zeros(grid, 2);
        let mut v = Field::constant(grid, 1, 1.0);
        let params = ModelParams::default().with_regularization(0.5, 1e-6);
        let bc = BoundaryConditions::none(&grid);
        let history =
            alternate_minimize(&params, &mut u, &mut v, &bc, &[], &SolveOptions::default())
                .unwrap();
        let csv = energy_history_csv(&history);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iter,bulk_mod,bulk_unmod,surf_grad,surf_well,total");
        assert_eq!(lines.len(), history.records.len() + 1);
        assert!(lines[1].starts_with("0,"));
    }

    #[test]
    fn summary_aligns_keys() {
        let mut s = Summary::default();
        s.push("scenario", "tension");
        s.push_f64("energy_total", 0.25);
        let text = s.render();
        assert!(text.contains("scenario      tension"));
        assert!(text.contains("energy_total  2.5000000000000000e-1"));
    }
}
