//! LP text format export and a matching reader.
//!
//! The writer emits Minimize / Subject To / Bounds / Binaries sections with
//! deterministic ordering and fixed decimal formatting, so a given model
//! always produces identical bytes. The reader parses that dialect back
//! (coefficients first, explicit sense, one constraint per line), which is
//! enough to round-trip our own files and those of common solvers.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Constraint, MilpModel, Sense, VarKind, Variable};

/// Fixed decimal formatting with nine fractional digits, trailing zeros
/// trimmed; integers print without a decimal point.
pub fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e12 {
        return format!("{x:.0}");
    }
    let mut s = format!("{x:.9}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn push_terms(out: &mut String, terms: &[(usize, f64)], vars: &[Variable]) {
    let mut first = true;
    for &(vi, coef) in terms {
        if coef == 0.0 {
            continue;
        }
        let mag = fmt_num(coef.abs());
        if first {
            if coef < 0.0 {
                let _ = write!(out, "- ");
            }
            let _ = write!(out, "{mag} {}", vars[vi].name);
            first = false;
        } else {
            let sign = if coef < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {sign} {mag} {}", vars[vi].name);
        }
    }
    if first {
        // Degenerate all-zero expression.
        let _ = write!(out, "0 {}", vars.first().map(|v| v.name.as_str()).unwrap_or("z"));
    }
}

pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", model.name);
    let _ = writeln!(out, "Minimize");
    let obj_terms: Vec<(usize, f64)> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.obj != 0.0)
        .map(|(i, v)| (i, v.obj))
        .collect();
    let mut line = String::from(" obj: ");
    push_terms(&mut line, &obj_terms, &model.vars);
    let _ = writeln!(out, "{line}");
    let _ = writeln!(out, "Subject To");
    for c in &model.constraints {
        let mut line = format!(" {}: ", c.name);
        push_terms(&mut line, &c.terms, &model.vars);
        let _ = writeln!(out, "{line} {} {}", c.sense.symbol(), fmt_num(c.rhs));
    }
    let _ = writeln!(out, "Bounds");
    for v in &model.vars {
        if v.kind == VarKind::Continuous {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lb), v.name, fmt_num(v.ub));
        }
    }
    let binaries: Vec<&str> =
        model.vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        let _ = writeln!(out, "Binaries");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    let _ = writeln!(out, "End");
    out
}

pub fn export_lp(model: &MilpModel, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, write_lp(model))
}

#[derive(Debug, Error)]
pub enum LpParseError {
    #[error("unexpected token {0:?} on line {1}")]
    Unexpected(String, usize),
    #[error("malformed bound line {0}")]
    BadBound(usize),
    #[error("unknown section header on line {0}")]
    BadSection(usize),
    #[error("missing objective")]
    MissingObjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

struct ParsedTerm {
    coef: f64,
    var: String,
}

/// Parses "[sign] [coef] name [+|- [coef] name]*" token runs.
fn parse_terms(tokens: &[&str], line_no: usize) -> Result<Vec<ParsedTerm>, LpParseError> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut pending_coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(x) = tok.parse::<f64>() {
                    pending_coef = Some(x);
                } else {
                    let coef = sign * pending_coef.take().unwrap_or(1.0);
                    out.push(ParsedTerm { coef, var: tok.to_string() });
                    sign = 1.0;
                }
            }
        }
    }
    if pending_coef.is_some() {
        return Err(LpParseError::Unexpected("dangling coefficient".into(), line_no));
    }
    Ok(out)
}

/// Reads an LP file in the dialect produced by [`write_lp`]. Variable order
/// in the parsed model follows the Bounds/Binaries sections; compare models
/// with [`models_equivalent`] rather than field-by-field.
pub fn parse_lp(text: &str) -> Result<MilpModel, LpParseError> {
    let mut name = String::from("parsed");
    let mut objective: Vec<ParsedTerm> = Vec::new();
    let mut seen_objective = false;
    let mut constraints: Vec<(String, Vec<ParsedTerm>, Sense, f64)> = Vec::new();
    let mut bounds: Vec<(f64, String, f64)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut section = Section::Preamble;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('\\') {
            if let Some(n) = comment.trim().strip_prefix("Problem:") {
                name = n.trim().to_string();
            }
            continue;
        }
        let lower = line.to_ascii_lowercase();
        section = match lower.as_str() {
            "minimize" | "minimise" | "min" => {
                seen_objective = true;
                Section::Objective
            }
            "subject to" | "s.t." | "st" => Section::Constraints,
            "bounds" => Section::Bounds,
            "binaries" | "binary" => Section::Binaries,
            "end" => Section::Done,
            _ => {
                match section {
                    Section::Objective => {
                        let body = line.split_once(':').map(|(_, b)| b).unwrap_or(line);
                        let tokens: Vec<&str> = body.split_whitespace().collect();
                        objective.extend(parse_terms(&tokens, line_no)?);
                    }
                    Section::Constraints => {
                        let (cname, body) = line
                            .split_once(':')
                            .ok_or_else(|| LpParseError::Unexpected(line.into(), line_no))?;
                        let tokens: Vec<&str> = body.split_whitespace().collect();
                        let sense_at = tokens
                            .iter()
                            .position(|t| matches!(*t, "<=" | ">=" | "=" | "<" | ">"))
                            .ok_or_else(|| {
                                LpParseError::Unexpected("missing sense".into(), line_no)
                            })?;
                        let sense = match tokens[sense_at] {
                            "<=" | "<" => Sense::Le,
                            ">=" | ">" => Sense::Ge,
                            _ => Sense::Eq,
                        };
                        let rhs: f64 = tokens
                            .get(sense_at + 1)
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| {
                                LpParseError::Unexpected("missing rhs".into(), line_no)
                            })?;
                        let terms = parse_terms(&tokens[..sense_at], line_no)?;
                        constraints.push((cname.trim().to_string(), terms, sense, rhs));
                    }
                    Section::Bounds => {
                        let tokens: Vec<&str> = line.split_whitespace().collect();
                        // "lb <= name <= ub"
                        if tokens.len() == 5 && tokens[1] == "<=" && tokens[3] == "<=" {
                            let lb =
                                tokens[0].parse().map_err(|_| LpParseError::BadBound(line_no))?;
                            let ub =
                                tokens[4].parse().map_err(|_| LpParseError::BadBound(line_no))?;
                            bounds.push((lb, tokens[2].to_string(), ub));
                        } else {
                            return Err(LpParseError::BadBound(line_no));
                        }
                    }
                    Section::Binaries => {
                        binaries.extend(line.split_whitespace().map(str::to_string));
                    }
                    Section::Preamble | Section::Done => {
                        return Err(LpParseError::BadSection(line_no));
                    }
                }
                section
            }
        };
    }
    if !seen_objective {
        return Err(LpParseError::MissingObjective);
    }

    let mut model = MilpModel::new(name);
    for (lb, vname, ub) in bounds {
        model.add_var(vname, VarKind::Continuous, lb, ub);
    }
    for vname in binaries {
        model.add_var(vname, VarKind::Binary, 0.0, 1.0);
    }
    // Any variable mentioned only in expressions gets default bounds.
    let ensure = |model: &mut MilpModel, vname: &str| -> usize {
        match model.var_index(vname) {
            Some(i) => i,
            None => model.add_var(vname.to_string(), VarKind::Continuous, 0.0, f64::INFINITY),
        }
    };
    for t in &objective {
        let i = ensure(&mut model, &t.var);
        model.vars[i].obj += t.coef;
    }
    for (cname, terms, sense, rhs) in constraints {
        let mut resolved = Vec::with_capacity(terms.len());
        for t in &terms {
            let i = ensure(&mut model, &t.var);
            resolved.push((i, t.coef));
        }
        model.add_constraint(cname, resolved, sense, rhs);
    }
    Ok(model)
}

/// Structural equality up to variable/constraint ordering: same variable
/// names with matching kind/bounds/objective, same constraint names with
/// matching term maps.
pub fn models_equivalent(a: &MilpModel, b: &MilpModel, tol: f64) -> bool {
    if a.vars.len() != b.vars.len() || a.constraints.len() != b.constraints.len() {
        return false;
    }
    let close = |x: f64, y: f64| {
        (x - y).abs() <= tol || (x.is_infinite() && y.is_infinite() && x.signum() == y.signum())
    };
    for va in &a.vars {
        let Some(ib) = b.var_index(&va.name) else {
            return false;
        };
        let vb = &b.vars[ib];
        if va.kind != vb.kind
            || !close(va.lb, vb.lb)
            || !close(va.ub, vb.ub)
            || !close(va.obj, vb.obj)
        {
            return false;
        }
    }
    let term_map = |model: &MilpModel, c: &Constraint| -> HashMap<String, f64> {
        let mut m = HashMap::new();
        for &(i, coef) in &c.terms {
            *m.entry(model.vars[i].name.clone()).or_insert(0.0) += coef;
        }
        m
    };
    let b_by_name: HashMap<&str, &Constraint> =
        b.constraints.iter().map(|c| (c.name.as_str(), c)).collect();
    for ca in &a.constraints {
        let Some(cb) = b_by_name.get(ca.name.as_str()) else {
            return false;
        };
        if ca.sense != cb.sense || !close(ca.rhs, cb.rhs) {
            return false;
        }
        let ma = term_map(a, ca);
        let mb = term_map(b, cb);
        if ma.len() != mb.len() {
            return false;
        }
        for (k, x) in &ma {
            match mb.get(k) {
                Some(y) if close(*x, *y) => {}
                _ => return false,
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::milp::{build, BuildOptions};

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(3.0), "3");
        assert_eq!(fmt_num(-340.0), "-340");
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(0.198529411764706), "0.198529412");
    }

    #[test]
    fn writer_emits_single_minimize_section() {
        let inst = fixtures::illustrative_instance();
        let inst_one = crate::instance::Instance::new(
            inst.network.clone(),
            inst.params.clone(),
            vec![inst.trucks[0].clone()],
        )
        .unwrap();
        let model = build(&inst_one, &BuildOptions::default());
        let text = write_lp(&model);
        assert_eq!(text.matches("Minimize").count(), 1);
        assert!(text.contains("Subject To"));
        assert!(text.contains("Bounds"));
        assert!(text.contains("Binaries"));
        assert!(text.trim_end().ends_with("End"));
    }

    #[test]
    fn round_trip_preserves_model() {
        let inst = fixtures::illustrative_instance();
        let model = build(&inst, &BuildOptions::default());
        let text = write_lp(&model);
        let parsed = parse_lp(&text).unwrap();
        assert!(models_equivalent(&model, &parsed, 1e-6));
    }

    #[test]
    fn deterministic_bytes() {
        let inst = fixtures::small_test_instance();
        let a = write_lp(&build(&inst, &BuildOptions::default()));
        let b = write_lp(&build(&inst, &BuildOptions::default()));
        assert_eq!(a, b);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_lp("nonsense\n").is_err());
        assert!(parse_lp("").is_err());
    }
}
