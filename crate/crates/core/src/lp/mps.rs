//! Free-format MPS export (and a reader for the subset this module writes).
//!
//! Columns are named `X<j>` and rows `R<i>` so that names stay unique and
//! whitespace-free; the objective constant is written as minus the right-hand
//! side of the objective row.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lp::{Constraint, ConstraintSense, Direction, LinearProgramSpec, Variable};

pub fn to_mps(spec: &LinearProgramSpec) -> String {
    let mut s = String::new();
    let name: String = spec
        .name
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect();
    let _ = writeln!(s, "NAME {}", if name.is_empty() { "LP" } else { &name });
    let _ = writeln!(s, "OBJSENSE");
    let _ = writeln!(
        s,
        "    {}",
        match spec.direction {
            Direction::Minimize => "MIN",
            Direction::Maximize => "MAX",
        }
    );
    s.push_str("ROWS\n N  OBJ\n");
    for (i, c) in spec.constraints.iter().enumerate() {
        let t = match c.sense {
            ConstraintSense::Le => 'L',
            ConstraintSense::Ge => 'G',
            ConstraintSense::Eq => 'E',
        };
        let _ = writeln!(s, " {t}  R{i}");
    }
    // column-major view of the coefficients
    let mut cols: Vec<Vec<(String, f64)>> = vec![Vec::new(); spec.variables.len()];
    for &(j, c) in &spec.objective {
        cols[j].push(("OBJ".into(), c));
    }
    for (i, c) in spec.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            cols[j].push((format!("R{i}"), a));
        }
    }
    s.push_str("COLUMNS\n");
    for (j, entries) in cols.iter().enumerate() {
        if entries.is_empty() {
            // keep the column declared
            let _ = writeln!(s, "    X{j}  OBJ  0");
        }
        for (row, v) in entries {
            let _ = writeln!(s, "    X{j}  {row}  {v:e}");
        }
    }
    s.push_str("RHS\n");
    if spec.objective_constant != 0.0 {
        let _ = writeln!(s, "    RHS  OBJ  {:e}", -spec.objective_constant);
    }
    for (i, c) in spec.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            let _ = writeln!(s, "    RHS  R{i}  {:e}", c.rhs);
        }
    }
    s.push_str("BOUNDS\n");
    for (j, v) in spec.variables.iter().enumerate() {
        if !v.nonnegative {
            let _ = writeln!(s, " FR BND  X{j}");
        }
    }
    s.push_str("ENDATA\n");
    s
}

fn parse_index(token: &str, prefix: char) -> Result<usize> {
    token
        .strip_prefix(prefix)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Lp(format!("unexpected MPS name `{token}`")))
}

fn parse_value(token: &str) -> Result<f64> {
    token
        .parse()
        .map_err(|_| Error::Lp(format!("bad MPS number `{token}`")))
}

/// Reads files produced by [`to_mps`].
pub fn from_mps(text: &str) -> Result<LinearProgramSpec> {
    let mut spec = LinearProgramSpec::new("", Direction::Minimize);
    let mut section = "";
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') {
            section = tokens[0];
            if section == "NAME" {
                spec.name = tokens.get(1).unwrap_or(&"").to_string();
            }
            continue;
        }
        match section {
            "OBJSENSE" => {
                spec.direction = if tokens[0] == "MAX" {
                    Direction::Maximize
                } else {
                    Direction::Minimize
                }
            }
            "ROWS" => {
                if tokens[0] == "N" {
                    continue;
                }
                let sense = match tokens[0] {
                    "L" => ConstraintSense::Le,
                    "G" => ConstraintSense::Ge,
                    "E" => ConstraintSense::Eq,
                    t => return Err(Error::Lp(format!("unknown row type `{t}`"))),
                };
                spec.constraints.push(Constraint {
                    name: tokens[1].to_string(),
                    coeffs: Vec::new(),
                    sense,
                    rhs: 0.0,
                });
            }
            "COLUMNS" => {
                let j = parse_index(tokens[0], 'X')?;
                while spec.variables.len() <= j {
                    let k = spec.variables.len();
                    spec.variables.push(Variable {
                        name: format!("X{k}"),
                        nonnegative: true,
                    });
                }
                for pair in tokens[1..].chunks(2) {
                    let v = parse_value(pair[1])?;
                    if pair[0] == "OBJ" {
                        if v != 0.0 {
                            spec.objective.push((j, v));
                        }
                    } else {
                        let i = parse_index(pair[0], 'R')?;
                        spec.constraints[i].coeffs.push((j, v));
                    }
                }
            }
            "RHS" => {
                for pair in tokens[1..].chunks(2) {
                    let v = parse_value(pair[1])?;
                    if pair[0] == "OBJ" {
                        spec.objective_constant = -v;
                    } else {
                        spec.constraints[parse_index(pair[0], 'R')?].rhs = v;
                    }
                }
            }
            "BOUNDS" => {
                if tokens[0] == "FR" {
                    spec.variables[parse_index(tokens[2], 'X')?].nonnegative = false;
                }
            }
            _ => {}
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{DenseSimplex, LinExpr, LpSolver};
    use proptest::prelude::*;

    proptest! {
        // export then import reproduces the program and its optimum
        #[test]
        fn mps_round_trip(
            coeffs in proptest::collection::vec(-4.0f64..4.0, 6),
            rhs in proptest::collection::vec(0.5f64..3.0, 3),
            constant in -2.0f64..2.0,
        ) {
            let mut lp = LinearProgramSpec::new("round trip", Direction::Maximize);
            let x = lp.add_variable("x", true);
            let y = lp.add_variable("y", false);
            for r in 0..3 {
                let mut e = LinExpr::constant(-rhs[r]);
                e.add_term(x, coeffs[2 * r]);
                e.add_term(y, coeffs[2 * r + 1]);
                lp.add_constraint(format!("r{r}"), &e, ConstraintSense::Le);
            }
            lp.add_constraint("y<=1", &(LinExpr::var(y) - LinExpr::constant(1.0)), ConstraintSense::Le);
            lp.add_constraint("y>=-1", &(LinExpr::var(y) + LinExpr::constant(1.0)), ConstraintSense::Ge);
            lp.add_constraint("x<=1", &(LinExpr::var(x) - LinExpr::constant(1.0)), ConstraintSense::Le);
            let mut obj = LinExpr::constant(constant);
            obj.add_term(x, 1.0);
            obj.add_term(y, -0.5);
            lp.set_objective(&obj);
            let back = from_mps(&to_mps(&lp)).unwrap();
            prop_assert_eq!(back.constraints.len(), lp.constraints.len());
            prop_assert_eq!(back.direction, lp.direction);
            for (a, b) in back.constraints.iter().zip(&lp.constraints) {
                prop_assert_eq!(&a.coeffs, &b.coeffs);
                prop_assert_eq!(a.rhs, b.rhs);
                prop_assert_eq!(a.sense, b.sense);
            }
            let s1 = DenseSimplex::default().solve(&lp).unwrap();
            let s2 = DenseSimplex::default().solve(&back).unwrap();
            prop_assert_eq!(s1.status, s2.status);
            if let (Some(a), Some(b)) = (s1.objective, s2.objective) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
