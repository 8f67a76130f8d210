use std::io::Write;

use super::{Direction, LinearProgram, Sense};

fn sanitize(name: &str, fallback: String) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        fallback
    } else {
        cleaned
    }
}

fn write_terms<W: Write>(out: &mut W, terms: &[(usize, f64)], names: &[String]) -> std::io::Result<()> {
    if terms.is_empty() {
        return write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("x0"));
    }
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k == 0 && a >= 0.0 {
            write!(out, " {:?} {}", a, names[j])?;
        } else {
            let sign = if a < 0.0 { '-' } else { '+' };
            write!(out, " {sign} {:?} {}", a.abs(), names[j])?;
        }
    }
    Ok(())
}

/// Writes the program in CPLEX LP text format for cross-checking with
/// external solvers.
pub fn write_lp_format<W: Write>(lp: &LinearProgram, mut out: W) -> std::io::Result<()> {
    let names: Vec<String> = (0..lp.num_vars())
        .map(|j| sanitize(lp.var_names.get(j).map(String::as_str).unwrap_or(""), format!("x{j}")))
        .collect();
    let sense = match lp.direction {
        Direction::Minimize => "Minimize",
        Direction::Maximize => "Maximize",
    };
    writeln!(out, "\\ exported by blendopt")?;
    writeln!(out, "{sense}")?;
    write!(out, " obj:")?;
    let obj: Vec<(usize, f64)> = lp
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| (j, *c))
        .collect();
    write_terms(&mut out, &obj, &names)?;
    writeln!(out)?;
    writeln!(out, "Subject To")?;
    for (i, row) in lp.rows.iter().enumerate() {
        let rname = sanitize(lp.row_names.get(i).map(String::as_str).unwrap_or(""), format!("r{i}"));
        write!(out, " {rname}:")?;
        write_terms(&mut out, &row.coeffs, &names)?;
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        writeln!(out, " {op} {:?}", row.rhs)?;
    }
    writeln!(out, "Bounds")?;
    for j in 0..lp.num_vars() {
        if lp.upper[j].is_infinite() {
            writeln!(out, " {} >= {:?}", names[j], lp.lower[j])?;
        } else {
            writeln!(out, " {:?} <= {} <= {:?}", lp.lower[j], names[j], lp.upper[j])?;
        }
    }
    writeln!(out, "End")
}
