//! The finite description of one port-Hamiltonian system and its JSON
//! exchange format.
//!
//! ```json
//! { "name": "...", "n": 1, "m": 2, "a": 0.0, "b": 1.0,
//!   "P2": [[[0.0, 1.0]]], "P0": [[[0.0, 0.0]]], "H": [[[1.0, 0.0]]],
//!   "WB1": [...], "WB2": [], "WC": [...] }
//! ```
//!
//! Complex entries are `[re, im]` pairs and matrices are row-major nested
//! arrays. `WB2` is an empty array when `m = 2n`.

use std::io::Read;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PhsError, Result};
use crate::linalg::{all_finite, vstack};
use crate::trace::TraceConvention;
use crate::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PhsSpec {
    pub name: String,
    /// State dimension.
    pub n: usize,
    /// Number of inputs (and outputs), `0 < m ≤ 2n`.
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub p2: CMatrix,
    pub p0: CMatrix,
    pub h: CMatrix,
    /// `m × 4n` input map.
    pub wb1: CMatrix,
    /// `(2n - m) × 4n` homogeneous boundary conditions.
    pub wb2: CMatrix,
    /// `m × 4n` output map.
    pub wc: CMatrix,
}

impl PhsSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        a: f64,
        b: f64,
        p2: CMatrix,
        p0: CMatrix,
        h: CMatrix,
        wb1: CMatrix,
        wb2: CMatrix,
        wc: CMatrix,
    ) -> Result<Self> {
        let n = p2.nrows();
        let m = wb1.nrows();
        let wb2 = if wb2.nrows() == 0 { CMatrix::zeros(0, 4 * n) } else { wb2 };
        let spec = Self { name: name.into(), n, m, a, b, p2, p0, h, wb1, wb2, wc };
        spec.check_dimensions()?;
        Ok(spec)
    }

    /// Checks shapes, the interval, and that every entry is finite.
    pub fn check_dimensions(&self) -> Result<()> {
        let (n, m) = (self.n, self.m);
        if n == 0 {
            return Err(PhsError::InvalidParameter("state dimension n must be positive".into()));
        }
        if m == 0 || m > 2 * n {
            return Err(PhsError::InvalidParameter(format!(
                "input dimension m = {m} must satisfy 0 < m <= 2n = {}",
                2 * n
            )));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.b > self.a) {
            return Err(PhsError::InvalidParameter(format!(
                "interval [{}, {}] must satisfy b > a",
                self.a, self.b
            )));
        }
        for (name, mat, rows, cols) in self.shapes() {
            if mat.shape() != (rows, cols) {
                return Err(PhsError::Dimension {
                    matrix: name.into(),
                    expected_rows: rows,
                    expected_cols: cols,
                    rows: mat.nrows(),
                    cols: mat.ncols(),
                });
            }
            if !all_finite(mat) {
                return Err(PhsError::NonFinite(name.into()));
            }
        }
        Ok(())
    }

    fn shapes(&self) -> [(&'static str, &CMatrix, usize, usize); 6] {
        let (n, m) = (self.n, self.m);
        [
            ("P2", &self.p2, n, n),
            ("P0", &self.p0, n, n),
            ("H", &self.h, n, n),
            ("WB1", &self.wb1, m, 4 * n),
            ("WB2", &self.wb2, 2 * n - m, 4 * n),
            ("WC", &self.wc, m, 4 * n),
        ]
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_full_port(&self) -> bool {
        self.m == 2 * self.n
    }

    pub fn trace(&self) -> TraceConvention {
        TraceConvention::new(self.n)
    }

    /// `[W_B,1; W_B,2]`, the square boundary map with the constraint rows appended.
    pub fn extended_input_map(&self) -> CMatrix {
        vstack(&[&self.wb1, &self.wb2])
    }

    /// The `(2n + m) × 4n` stack `[W_B,1; W_B,2; W_C]`.
    pub fn stacked_ports(&self) -> CMatrix {
        vstack(&[&self.wb1, &self.wb2, &self.wc])
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)?;
        file.into_spec()
    }

    pub fn from_reader(mut reader: impl Read) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SpecFile::from_spec(self)).expect("spec serialises")
    }
}

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: String,
    n: usize,
    m: usize,
    a: f64,
    b: f64,
    #[serde(rename = "P2")]
    p2: JsonMatrix,
    #[serde(rename = "P0")]
    p0: JsonMatrix,
    #[serde(rename = "H")]
    h: JsonMatrix,
    #[serde(rename = "WB1")]
    wb1: JsonMatrix,
    #[serde(rename = "WB2", default)]
    wb2: JsonMatrix,
    #[serde(rename = "WC")]
    wc: JsonMatrix,
}

impl SpecFile {
    fn into_spec(self) -> Result<PhsSpec> {
        let n = self.n;
        let spec = PhsSpec {
            name: self.name,
            n,
            m: self.m,
            a: self.a,
            b: self.b,
            p2: matrix_from_json("P2", &self.p2, n)?,
            p0: matrix_from_json("P0", &self.p0, n)?,
            h: matrix_from_json("H", &self.h, n)?,
            wb1: matrix_from_json("WB1", &self.wb1, 4 * n)?,
            wb2: matrix_from_json("WB2", &self.wb2, 4 * n)?,
            wc: matrix_from_json("WC", &self.wc, 4 * n)?,
        };
        spec.check_dimensions()?;
        Ok(spec)
    }

    fn from_spec(spec: &PhsSpec) -> Self {
        Self {
            name: spec.name.clone(),
            n: spec.n,
            m: spec.m,
            a: spec.a,
            b: spec.b,
            p2: matrix_to_json(&spec.p2),
            p0: matrix_to_json(&spec.p0),
            h: matrix_to_json(&spec.h),
            wb1: matrix_to_json(&spec.wb1),
            wb2: matrix_to_json(&spec.wb2),
            wc: matrix_to_json(&spec.wc),
        }
    }
}

/// An empty array decodes to a `0 × empty_cols` matrix.
fn matrix_from_json(name: &str, rows: &JsonMatrix, empty_cols: usize) -> Result<CMatrix> {
    if rows.is_empty() {
        return Ok(CMatrix::zeros(0, empty_cols));
    }
    let cols = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(PhsError::Dimension {
            matrix: format!("{name} (ragged rows)"),
            expected_rows: rows.len(),
            expected_cols: cols,
            rows: rows.len(),
            cols: bad.len(),
        });
    }
    Ok(CMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.iter().flatten().map(|&[re, im]| Complex64::new(re, im)),
    ))
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR_SPEC: &str = r#"{
        "name": "scalar", "n": 1, "m": 2, "a": 0.0, "b": 1.0,
        "P2": [[[0.0, 1.0]]], "P0": [[[0.0, 0.0]]], "H": [[[1.0, 0.0]]],
        "WB1": [[[0,0],[0,1],[0,0],[0,0]], [[0,0],[0,0],[0,0],[0,1]]],
        "WB2": [],
        "WC": [[[1,0],[0,0],[0,0],[0,0]], [[0,0],[0,0],[-1,0],[0,0]]]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let spec = PhsSpec::from_json_str(SCALAR_SPEC).unwrap();
        assert_eq!((spec.n, spec.m), (1, 2));
        assert_eq!(spec.wb2.shape(), (0, 4));
        assert_eq!(spec.wb1[(0, 1)], Complex64::new(0.0, 1.0));
        let again = PhsSpec::from_json_str(&spec.to_json_string()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn wrong_shape_names_the_matrix() {
        let text = SCALAR_SPEC.replace(r#""WC": [[[1,0],[0,0],[0,0],[0,0]], "#, r#""WC": ["#);
        match PhsSpec::from_json_str(&text) {
            Err(PhsError::Dimension { matrix, .. }) => assert_eq!(matrix, "WC"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = SCALAR_SPEC.replace(r#"[[0,0],[0,0],[0,0],[0,1]]"#, r#"[[0,0],[0,0],[0,1]]"#);
        assert!(matches!(PhsSpec::from_json_str(&text), Err(PhsError::Dimension { .. })));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = PhsSpec::from_json_str("{ \"name\": ").unwrap_err();
        assert!(matches!(err, PhsError::Json(_)));
        assert!(err.to_string().contains("line"));
    }

    #[test]
    fn interval_and_m_checked() {
        let text = SCALAR_SPEC.replace(r#""b": 1.0"#, r#""b": -1.0"#);
        assert!(matches!(PhsSpec::from_json_str(&text), Err(PhsError::InvalidParameter(_))));
        let text = SCALAR_SPEC.replace(r#""m": 2"#, r#""m": 3"#);
        assert!(PhsSpec::from_json_str(&text).is_err());
    }
}
