//! CPLEX LP text export, for checking results with an external MIP solver.
//!
//! Variables are `x1..xn` (one-based); constraint `r<i>` covers element `i`
//! (zero-based, matching internal row indices).

use std::fmt::Write as _;
use std::path::Path;

use super::SolverError;
use crate::instance::ScpInstance;

const TERMS_PER_LINE: usize = 8;

pub fn lp_string(inst: &ScpInstance) -> String {
    let mut out = String::new();
    out.push_str("\\ set cover instance ");
    out.push_str(inst.name());
    out.push('\n');
    out.push_str("Minimize\n obj:");
    let terms = (0..inst.n()).map(|j| format!("{} x{}", inst.cost(j), j + 1));
    write_terms(&mut out, terms);
    out.push_str("Subject To\n");
    for (i, row) in inst.rows().iter().enumerate() {
        let _ = write!(out, " r{i}:");
        write_terms(&mut out, row.iter().map(|j| format!("x{}", j + 1)));
        // the relation goes on the last term line
        out.pop();
        out.push_str(" >= 1\n");
    }
    out.push_str("Binary\n");
    for j in 0..inst.n() {
        let _ = writeln!(out, " x{}", j + 1);
    }
    out.push_str("End\n");
    out
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = String>) {
    for (k, t) in terms.enumerate() {
        if k > 0 {
            if k % TERMS_PER_LINE == 0 {
                out.push_str("\n   +");
            } else {
                out.push_str(" +");
            }
        }
        out.push(' ');
        out.push_str(&t);
    }
    out.push('\n');
}

pub fn export_lp(inst: &ScpInstance, path: &Path) -> Result<(), SolverError> {
    std::fs::write(path, lp_string(inst))?;
    Ok(())
}
