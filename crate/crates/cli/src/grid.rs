//! `start:stop:step` grids and comma lists.

use anyhow::{bail, Context, Result};

const MAX_POINTS: usize = 1_000_000;

// Round-trip through 12 significant digits so 27 * 0.005 prints as 0.135.
fn snap(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        bail!("not finite: {s:?}");
    }
    Ok(v)
}

/// Parses `start:stop:step` (stop included within half a step), a comma
/// list, or a single value. The result is strictly ascending.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let out = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if step <= 0.0 {
                bail!("grid step must be positive in {spec:?}");
            }
            if stop < start {
                bail!("grid stop below start in {spec:?}");
            }
            let count = ((stop - start) / step + 0.5).floor();
            if count >= MAX_POINTS as f64 {
                bail!("grid {spec:?} has more than {MAX_POINTS} points");
            }
            (0..=count as usize).map(|k| snap(start + k as f64 * step)).collect()
        }
        [list] => list.split(',').map(number).collect::<Result<Vec<f64>>>()?,
        _ => bail!("grid must be start:stop:step or a comma list, got {spec:?}"),
    };
    if out.windows(2).any(|w| w[1] <= w[0]) {
        bail!("grid {spec:?} is not strictly ascending");
    }
    Ok(out)
}

/// Positive integers in grid syntax, e.g. `6:10:1` or `10,20,30`.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>> {
    parse_grid(spec)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!("size {v} in {spec:?} is not a positive integer")
            }
        })
        .collect()
}
