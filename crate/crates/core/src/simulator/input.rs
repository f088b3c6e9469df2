use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{PhsError, Result};

/// Boundary input signal, applied to every input component.
///
/// Parsed from `zero`, `step:A`, `sine:A:f` (`A sin(2π f t)`) or `file:PATH`.
/// A file holds CSV rows `t,u_1,…,u_m` (real) or `t,re_1,im_1,…,re_m,im_m`;
/// values are linearly interpolated and held constant outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Zero,
    Step(f64),
    Sine { amplitude: f64, frequency: f64 },
    Samples { times: Vec<f64>, values: Vec<Vec<Complex64>> },
}

fn number(text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| PhsError::InvalidParameter(format!("invalid {what} '{text}' in input signal")))
}

impl FromStr for InputSignal {
    type Err = PhsError;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.splitn(3, ':').collect();
        match parts.as_slice() {
            ["zero"] => Ok(InputSignal::Zero),
            ["step", a] => Ok(InputSignal::Step(number(a, "amplitude")?)),
            ["sine", a, f] => {
                Ok(InputSignal::Sine { amplitude: number(a, "amplitude")?, frequency: number(f, "frequency")? })
            }
            ["file", _, ..] => InputSignal::from_csv_file(Path::new(&text["file:".len()..])),
            _ => Err(PhsError::InvalidParameter(format!(
                "unknown input signal '{text}' (expected zero, step:A, sine:A:f or file:PATH)"
            ))),
        }
    }
}

impl InputSignal {
    pub fn from_csv_file(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.trim().parse::<f64>()).collect();
            match parsed {
                Ok(vals) if vals.len() >= 2 => {
                    times.push(vals[0]);
                    rows.push(vals[1..].to_vec());
                }
                // a leading header row is allowed
                Err(_) if times.is_empty() && rows.is_empty() => continue,
                _ => {
                    return Err(PhsError::InvalidParameter(format!(
                        "input file line {}: expected 't,u...' numbers",
                        lineno + 1
                    )))
                }
            }
        }
        if times.is_empty() {
            return Err(PhsError::InvalidParameter("input file has no samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PhsError::InvalidParameter("input file times must be strictly increasing".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(PhsError::InvalidParameter("input file rows have different lengths".into()));
        }
        let values = rows.into_iter().map(|r| r.into_iter().map(|x| Complex64::new(x, 0.0)).collect()).collect();
        Ok(InputSignal::Samples { times, values })
    }

    /// `u(t)` with `m` components.
    ///
    /// File samples with `2m` columns are read as real/imaginary pairs.
    pub fn sample(&self, t: f64, m: usize) -> Result<Vec<Complex64>> {
        let fill = |x: f64| vec![Complex64::new(x, 0.0); m];
        match self {
            InputSignal::Zero => Ok(fill(0.0)),
            InputSignal::Step(a) => Ok(fill(*a)),
            InputSignal::Sine { amplitude, frequency } => {
                Ok(fill(amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin()))
            }
            InputSignal::Samples { times, values } => {
                let width = values[0].len();
                let pairs = width == 2 * m;
                if width != m && !pairs {
                    return Err(PhsError::InvalidParameter(format!(
                        "input file has {width} value columns, expected {m} or {}",
                        2 * m
                    )));
                }
                let idx = times.partition_point(|&s| s <= t);
                let row = if idx == 0 {
                    values[0].clone()
                } else if idx == times.len() {
                    values[times.len() - 1].clone()
                } else {
                    let (t0, t1) = (times[idx - 1], times[idx]);
                    let w = (t - t0) / (t1 - t0);
                    values[idx - 1].iter().zip(&values[idx]).map(|(a, b)| a * (1.0 - w) + b * w).collect()
                };
                Ok(if pairs {
                    (0..m).map(|k| Complex64::new(row[2 * k].re, row[2 * k + 1].re)).collect()
                } else {
                    row
                })
            }
        }
    }
}
