//! Text formats accepted on the command line and in config files.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Budget;
use crate::ifs::{presets, IfsSpec};
use crate::rational::Rational;

/// Parses an IFS from its JSON form:
///
/// ```json
/// {"name": "sg",
///  "maps": [{"ratio": "1/2", "translate": ["0", "0"]}, ...],
///  "boundary": [["0", "0"], ["1", "0"], ["0", "1"]]}
/// ```
///
/// Structure only; call [`IfsSpec::validate`] for the geometric checks.
pub fn parse_ifs_json(text: &str) -> Result<IfsSpec> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("IFS JSON: {e}")))
}

/// Built-in preset by name, if any.
pub fn preset(name: &str) -> Option<IfsSpec> {
    presets::by_name(name)
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    Rational::from_str(text)
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim)
}

/// `"N,rho,lambda"`, e.g. `"27,1/8,295/63"`.
pub fn parse_constants(text: &str) -> Result<(usize, Rational, Rational)> {
    let parts: Vec<&str> = split_list(text).collect();
    let [n, rho, lambda] = parts.as_slice() else {
        return Err(Error::Parse(format!(
            "constants must be N,rho,lambda (got {} fields)",
            parts.len()
        )));
    };
    let n: usize = n
        .parse()
        .map_err(|_| Error::Parse(format!("map count {n:?} is not a non-negative integer")))?;
    Ok((n, parse_rational(rho)?, parse_rational(lambda)?))
}

/// Comma-separated rationals, e.g. `"1,0,0"` or `"1/2, -3"`.
pub fn parse_boundary_values(text: &str) -> Result<Vec<Rational>> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty boundary value list".into()));
    }
    split_list(text).map(parse_rational).collect()
}

/// Budget override: a bare integer sets the cell cap; otherwise a list of
/// `cells=…`, `vertices=…`, `points=…` entries.
pub fn parse_budget(text: &str) -> Result<Budget> {
    let mut budget = Budget::default();
    let text = text.trim();
    if let Ok(cells) = text.parse::<u128>() {
        budget.cells = cells;
        return Ok(budget);
    }
    for entry in split_list(text) {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("budget entry {entry:?} is not key=value")))?;
        let bad = || Error::Parse(format!("budget value {value:?} is not a non-negative integer"));
        match key.trim() {
            "cells" => budget.cells = value.trim().parse().map_err(|_| bad())?,
            "vertices" => budget.exact_vertices = value.trim().parse().map_err(|_| bad())?,
            "points" => budget.pair_points = value.trim().parse().map_err(|_| bad())?,
            other => return Err(Error::Parse(format!("unknown budget key {other:?}"))),
        }
    }
    Ok(budget)
}
