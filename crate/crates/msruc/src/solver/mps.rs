//! MPS file export/import and the `name value` solution-dump format.
//!
//! The writer emits the classic section layout (ROWS, COLUMNS with
//! INTORG/INTEND markers around integer variables, RHS, RANGES, BOUNDS)
//! with one coefficient per COLUMNS line and every bound written explicitly,
//! so no reader-specific defaults apply. Fields are aligned like fixed-form
//! MPS but parsed by whitespace, which is what contemporary solvers accept.
//! Values are printed with Rust's shortest round-trip float formatting, so a
//! write/parse cycle reproduces coefficients bit for bit. RANGES is always
//! emitted and always empty: two-sided rows are represented as row pairs.

use super::SolverError;
use crate::milp::{MilpModel, Sense, Variable};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

const OBJ_ROW: &str = "COST";

/// Serialize a model. The emitted column order is the variable order; the
/// model is canonicalized (sorted, merged, zero-free coefficients) first.
pub fn write_mps(model: &MilpModel, path: &Path) -> Result<(), SolverError> {
    let mut model = model.clone();
    model.canonicalize();

    // Objective coefficients per variable.
    let mut obj = vec![0.0f64; model.variables.len()];
    for &(j, w) in &model.objective {
        obj[j] = w;
    }
    // Transpose constraint coefficients into per-variable lists.
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(j, w) in &c.coeffs {
            entries[j].push((i, w));
        }
    }

    let name_w = model
        .variables
        .iter()
        .map(|v| v.name.len())
        .chain(model.constraints.iter().map(|c| c.name.len()))
        .chain([8])
        .max()
        .unwrap();

    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name);
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in &model.constraints {
        let tag = match c.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {tag}  {}", c.name);
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_integer = false;
    let mut marker = 0usize;
    for (j, var) in model.variables.iter().enumerate() {
        if var.is_integer != in_integer {
            marker += 1;
            let kind = if var.is_integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{marker:<width$} 'MARKER'  {kind}", width = name_w);
            in_integer = var.is_integer;
        }
        let mut wrote = false;
        if obj[j] != 0.0 {
            let _ = writeln!(out, "    {:<name_w$} {:<name_w$} {}", var.name, OBJ_ROW, obj[j]);
            wrote = true;
        }
        for &(i, w) in &entries[j] {
            let _ = writeln!(
                out,
                "    {:<name_w$} {:<name_w$} {}",
                var.name, model.constraints[i].name, w
            );
            wrote = true;
        }
        if !wrote {
            // Declare otherwise-empty columns with an explicit zero.
            let _ = writeln!(out, "    {:<name_w$} {:<name_w$} 0", var.name, OBJ_ROW);
        }
    }
    if in_integer {
        marker += 1;
        let _ = writeln!(out, "    M{marker:<width$} 'MARKER'  'INTEND'", width = name_w);
    }
    let _ = writeln!(out, "RHS");
    for c in &model.constraints {
        let _ = writeln!(out, "    {:<name_w$} {:<name_w$} {}", "RHS", c.name, c.rhs);
    }
    let _ = writeln!(out, "RANGES");
    let _ = writeln!(out, "BOUNDS");
    for var in &model.variables {
        write_bounds(&mut out, var, name_w);
    }
    let _ = writeln!(out, "ENDATA");
    std::fs::write(path, out)?;
    Ok(())
}

fn write_bounds(out: &mut String, var: &Variable, name_w: usize) {
    let name = &var.name;
    if var.is_integer && var.lower == 0.0 && var.upper == 1.0 {
        let _ = writeln!(out, " BV {:<name_w$} {:<name_w$}", "BND", name);
        return;
    }
    if var.lower == var.upper {
        let _ = writeln!(out, " FX {:<name_w$} {:<name_w$} {}", "BND", name, var.lower);
        return;
    }
    if var.lower.is_finite() {
        let _ = writeln!(out, " LO {:<name_w$} {:<name_w$} {}", "BND", name, var.lower);
    } else {
        let _ = writeln!(out, " MI {:<name_w$} {:<name_w$}", "BND", name);
    }
    if var.upper.is_finite() {
        let _ = writeln!(out, " UP {:<name_w$} {:<name_w$} {}", "BND", name, var.upper);
    } else {
        let _ = writeln!(out, " PL {:<name_w$} {:<name_w$}", "BND", name);
    }
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    Done,
}

/// Parse an MPS file back into a model.
pub fn read_mps(path: &Path) -> Result<MilpModel, SolverError> {
    let text = std::fs::read_to_string(path)?;
    let mut model = MilpModel::new("");
    let mut section = Section::Preamble;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut obj_row: Option<String> = None;
    let mut in_integer = false;

    let err = |line: usize, message: String| SolverError::MpsParse { line, message };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let header = !raw.starts_with(' ');
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if header {
            section = match tokens[0] {
                "NAME" => {
                    model.name = tokens.get(1).unwrap_or(&"").to_string();
                    Section::Preamble
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(err(line, format!("unknown section {other:?}"))),
            };
            continue;
        }
        match section {
            Section::Preamble | Section::Done => {
                return Err(err(line, "data outside any section".into()))
            }
            Section::Rows => {
                let [tag, name] = tokens[..] else {
                    return Err(err(line, "expected sense and row name".into()));
                };
                match tag {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(err(line, "multiple objective rows".into()));
                        }
                        obj_row = Some(name.to_string());
                    }
                    "L" | "G" | "E" => {
                        let sense = match tag {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            _ => Sense::Eq,
                        };
                        if row_index.contains_key(name) {
                            return Err(err(line, format!("duplicate row {name:?}")));
                        }
                        row_index.insert(name.to_string(), model.constraints.len());
                        model.add_constraint(name.to_string(), Vec::new(), sense, 0.0);
                    }
                    other => return Err(err(line, format!("unknown row sense {other:?}"))),
                }
            }
            Section::Columns => {
                if tokens.len() >= 2 && tokens[1] == "'MARKER'" {
                    let kind = *tokens.last().unwrap();
                    in_integer = match kind {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        other => {
                            return Err(err(line, format!("unknown marker {other:?}")))
                        }
                    };
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line, "expected column, row, value".into()));
                }
                let var = *var_index.entry(tokens[0].to_string()).or_insert_with(|| {
                    model.add_variable(tokens[0].to_string(), 0.0, f64::INFINITY, in_integer)
                });
                for pair in tokens[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|e| err(line, format!("bad value {:?}: {e}", pair[1])))?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        model.objective.push((var, value));
                    } else {
                        let row = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(line, format!("unknown row {:?}", pair[0])))?;
                        model.constraints[row].coeffs.push((var, value));
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line, "expected set, row, value".into()));
                }
                for pair in tokens[1..].chunks(2) {
                    let row = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(line, format!("unknown row {:?}", pair[0])))?;
                    model.constraints[row].rhs = pair[1]
                        .parse()
                        .map_err(|e| err(line, format!("bad value {:?}: {e}", pair[1])))?;
                }
            }
            Section::Ranges => {
                return Err(err(
                    line,
                    "RANGES entries are not supported; two-sided rows are written as row pairs"
                        .into(),
                ));
            }
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(err(line, "expected bound type, set, column".into()));
                }
                let var = *var_index
                    .get(tokens[2])
                    .ok_or_else(|| err(line, format!("unknown column {:?}", tokens[2])))?;
                let value = || -> Result<f64, SolverError> {
                    tokens
                        .get(3)
                        .ok_or_else(|| err(line, "missing bound value".into()))?
                        .parse()
                        .map_err(|e| err(line, format!("bad value: {e}")))
                };
                let v = &mut model.variables[var];
                match tokens[0] {
                    "UP" => v.upper = value()?,
                    "LO" => v.lower = value()?,
                    "FX" => {
                        let x = value()?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "BV" => {
                        v.lower = 0.0;
                        v.upper = 1.0;
                        v.is_integer = true;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    other => return Err(err(line, format!("unknown bound type {other:?}"))),
                }
            }
        }
    }
    if section != Section::Done {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }
    Ok(model)
}

/// Write an assignment as `name value` lines.
pub fn write_solution(
    model: &MilpModel,
    assignment: &[f64],
    path: &Path,
) -> Result<(), SolverError> {
    let mut out = String::new();
    let _ = writeln!(out, "# solution for {}", model.name);
    for (var, value) in model.variables.iter().zip(assignment) {
        let _ = writeln!(out, "{} {}", var.name, value);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a whitespace-separated `name value` dump. Every model variable must
/// appear exactly once; names the first offender otherwise.
pub fn read_solution(path: &Path, model: &MilpModel) -> Result<Vec<f64>, SolverError> {
    let text = std::fs::read_to_string(path)?;
    let index: HashMap<&str, usize> = model
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| (v.name.as_str(), j))
        .collect();
    let mut values = vec![f64::NAN; model.variables.len()];
    let mut seen = vec![false; model.variables.len()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(name), Some(value)) = (tokens.next(), tokens.next()) else {
            return Err(SolverError::SolutionFile(format!(
                "line {}: expected `name value`",
                lineno + 1
            )));
        };
        let &j = index.get(name).ok_or_else(|| {
            SolverError::SolutionFile(format!("unknown variable {name:?}"))
        })?;
        if seen[j] {
            return Err(SolverError::SolutionFile(format!(
                "duplicate entry for {name:?}"
            )));
        }
        seen[j] = true;
        values[j] = value.parse().map_err(|e| {
            SolverError::SolutionFile(format!("bad value for {name:?}: {e}"))
        })?;
    }
    if let Some(j) = seen.iter().position(|&s| !s) {
        return Err(SolverError::SolutionFile(format!(
            "missing variable {:?}",
            model.variables[j].name
        )));
    }
    Ok(values)
}
