use std::fmt::Write as _;

use thiserror::Error;

use super::{Formula, Lit};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {0}: malformed problem line")]
    Header(usize),
    #[error("line {0}: bad literal {1:?}")]
    Literal(usize, String),
    #[error("literal {0} exceeds declared variable count {1}")]
    VarOutOfRange(i64, usize),
}

pub fn parse_dimacs(text: &str) -> Result<Formula, DimacsError> {
    let mut f = Formula::default();
    let mut current = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(DimacsError::Header(n + 1));
            }
            f.num_vars = parts[2].parse().map_err(|_| DimacsError::Header(n + 1))?;
            continue;
        }
        for tok in line.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| DimacsError::Literal(n + 1, tok.to_string()))?;
            if x == 0 {
                f.clauses.push(std::mem::take(&mut current));
            } else {
                if x.unsigned_abs() as usize > f.num_vars {
                    return Err(DimacsError::VarOutOfRange(x, f.num_vars));
                }
                current.push(Lit::from_dimacs(x));
            }
        }
    }
    if !current.is_empty() {
        f.clauses.push(current);
    }
    Ok(f)
}

pub fn write_dimacs(f: &Formula) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars, f.clauses.len());
    for c in &f.clauses {
        for l in c {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}
