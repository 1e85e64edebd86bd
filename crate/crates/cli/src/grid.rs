// SPDX-License-Identifier: Apache-2.0

//! Grid descriptions (`uniform:N` or `t1,t2,...`) and comma-separated vectors.

use hypobridge::fluct::uniform_grid;

pub const DEFAULT_GRID: &str = "uniform:21";

/// Parses a grid description. Times must lie in `[0, 1]` and increase strictly.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    let grid = if let Some(n) = text.strip_prefix("uniform:") {
        let n: usize = n.trim().parse().map_err(|_| format!("bad point count in grid `{text}`"))?;
        if n < 2 {
            return Err(format!("grid `{text}` needs at least 2 points"));
        }
        uniform_grid(n)
    } else {
        parse_list("grid", text)?
    };
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(format!("grid `{text}` has times outside [0, 1]"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("grid `{text}` is not strictly increasing"));
    }
    Ok(grid)
}

/// Parses `a,b,c` into finite floats.
pub fn parse_list(what: &str, s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Err(format!("{what} is empty"));
    }
    s.split(',')
        .map(|tok| match tok.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("{what}: `{}` is not a finite number", tok.trim())),
        })
        .collect()
}
