//! Parsers for the small flag languages: evaluation grids, scenario
//! descriptors, and sample-size ladders.

use jkde::estimator::GridSpec;

use crate::errors::{CliError, CliResult};

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

/// Parses `"z1=0:15;x1=-2:0.4:2"` against the model's column names.
/// Discrete axes take `lo:hi` (step 1) or a single integer; continuous
/// axes take `lo:step:hi` or a single value. Every column must appear
/// exactly once, discrete first is not required (order is taken from the
/// column lists, not the string).
pub fn parse_grid(
    spec: &str,
    discrete: &[String],
    continuous: &[String],
) -> CliResult<GridSpec> {
    let mut z_axes: Vec<Option<Vec<i64>>> = vec![None; discrete.len()];
    let mut x_axes: Vec<Option<Vec<f64>>> = vec![None; continuous.len()];

    for part in spec.split(';').filter(|s| !s.trim().is_empty()) {
        let (name, axis) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("grid part '{part}' is not name=range")))?;
        let name = name.trim();
        let axis = axis.trim();
        if let Some(k) = discrete.iter().position(|c| c == name) {
            if z_axes[k].is_some() {
                return Err(usage(format!("grid names '{name}' twice")));
            }
            z_axes[k] = Some(parse_int_axis(name, axis)?);
        } else if let Some(j) = continuous.iter().position(|c| c == name) {
            if x_axes[j].is_some() {
                return Err(usage(format!("grid names '{name}' twice")));
            }
            x_axes[j] = Some(parse_real_axis(name, axis)?);
        } else {
            return Err(usage(format!("grid names unknown column '{name}'")));
        }
    }

    let z_axes: Vec<Vec<i64>> = z_axes
        .into_iter()
        .zip(discrete)
        .map(|(a, name)| a.ok_or_else(|| usage(format!("grid is missing column '{name}'"))))
        .collect::<CliResult<_>>()?;
    let x_axes: Vec<Vec<f64>> = x_axes
        .into_iter()
        .zip(continuous)
        .map(|(a, name)| a.ok_or_else(|| usage(format!("grid is missing column '{name}'"))))
        .collect::<CliResult<_>>()?;
    GridSpec::new(z_axes, x_axes).map_err(CliError::from)
}

fn parse_int_axis(name: &str, axis: &str) -> CliResult<Vec<i64>> {
    let parts: Vec<&str> = axis.split(':').collect();
    let parse = |s: &str| -> CliResult<i64> {
        s.parse()
            .map_err(|_| usage(format!("axis '{name}': '{s}' is not an integer")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [lo, hi] => {
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if hi < lo {
                return Err(usage(format!("axis '{name}': {hi} < {lo}")));
            }
            Ok((lo..=hi).collect())
        }
        _ => Err(usage(format!(
            "axis '{name}': integer axes take lo:hi or a single value"
        ))),
    }
}

fn parse_real_axis(name: &str, axis: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = axis.split(':').collect();
    let parse = |s: &str| -> CliResult<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| usage(format!("axis '{name}': '{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(usage(format!("axis '{name}': values must be finite")));
        }
        Ok(v)
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [lo, step, hi] => {
            let (lo, step, hi) = (parse(lo)?, parse(step)?, parse(hi)?);
            if step <= 0.0 || hi < lo {
                return Err(usage(format!(
                    "axis '{name}': needs step > 0 and hi >= lo"
                )));
            }
            // Nudge the count so lo:0.4:2 style ranges include an endpoint
            // that lands a hair past hi in floating point.
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| lo + step * i as f64).collect())
        }
        _ => Err(usage(format!(
            "axis '{name}': real axes take lo:step:hi or a single value"
        ))),
    }
}

/// Parses `"p=1,q=1,m=15"`. All three keys are required, none may repeat.
pub fn parse_scenario(spec: &str) -> CliResult<(usize, usize, i64)> {
    let mut p: Option<usize> = None;
    let mut q: Option<usize> = None;
    let mut m: Option<i64> = None;
    for part in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("scenario part '{part}' is not key=value")))?;
        let set_usize = |slot: &mut Option<usize>| -> CliResult<()> {
            if slot.is_some() {
                return Err(usage(format!("scenario sets '{key}' twice")));
            }
            *slot = Some(value.trim().parse().map_err(|_| {
                usage(format!("scenario '{key}': '{value}' is not a nonnegative integer"))
            })?);
            Ok(())
        };
        match key.trim() {
            "p" => set_usize(&mut p)?,
            "q" => set_usize(&mut q)?,
            "m" => {
                if m.is_some() {
                    return Err(usage("scenario sets 'm' twice".into()));
                }
                m = Some(value.trim().parse().map_err(|_| {
                    usage(format!("scenario 'm': '{value}' is not an integer"))
                })?);
            }
            other => return Err(usage(format!("scenario has unknown key '{other}'"))),
        }
    }
    match (p, q, m) {
        (Some(p), Some(q), Some(m)) => Ok((p, q, m)),
        _ => Err(usage("scenario needs p=, q=, and m=".into())),
    }
}

/// Parses `"250:2:16000"` (start : factor : end) into a geometric ladder
/// of sample sizes whose endpoints are exact.
pub fn parse_ladder(spec: &str) -> CliResult<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, factor, end] = parts.as_slice() else {
        return Err(usage("ladder takes start:factor:end".into()));
    };
    let start: usize = start
        .parse()
        .map_err(|_| usage(format!("ladder start '{start}' is not an integer")))?;
    let end: usize = end
        .parse()
        .map_err(|_| usage(format!("ladder end '{end}' is not an integer")))?;
    let factor: f64 = factor
        .parse()
        .map_err(|_| usage(format!("ladder factor '{factor}' is not a number")))?;
    if start == 0 || end <= start || !(factor > 1.0) {
        return Err(usage(
            "ladder needs 0 < start < end and factor > 1".into(),
        ));
    }
    let points = ((end as f64 / start as f64).ln() / factor.ln()).round() as usize + 1;
    if points < 2 {
        return Err(usage("ladder spans fewer than two points".into()));
    }
    let implied = start as f64 * factor.powi(points as i32 - 1);
    if (implied - end as f64).abs() / end as f64 > 0.01 {
        return Err(usage(format!(
            "ladder end {end} is not start*factor^k (closest is {})",
            implied.round()
        )));
    }
    jkde::simharness::geometric_ladder(start, end, points).map_err(CliError::from)
}

/// Comma-separated integer list.
pub fn parse_i64_list(spec: &str, flag: &str) -> CliResult<Vec<i64>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| usage(format!("--{flag}: '{s}' is not an integer")))
        })
        .collect()
}

/// Comma-separated real list.
pub fn parse_f64_list(spec: &str, flag: &str) -> CliResult<Vec<f64>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| usage(format!("--{flag}: '{s}' is not a number")))?;
            if !v.is_finite() {
                return Err(usage(format!("--{flag}: values must be finite")));
            }
            Ok(v)
        })
        .collect()
}

/// Comma-separated sample sizes.
pub fn parse_usize_list(spec: &str, flag: &str) -> CliResult<Vec<usize>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| usage(format!("--{flag}: '{s}' is not a positive integer")))
        })
        .collect()
}
