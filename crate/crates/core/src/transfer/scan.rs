//! Sampling `‖G(r + iω)‖` along a vertical line.
//!
//! A finite grid cannot certify a supremum over ℝ, so the scan reports an
//! assessment backed by refinement evidence:
//!
//! * the grid is evaluated at `samples · 2^k`, `k = 0..3`, and the top local
//!   maxima of each level are polished by golden-section search;
//! * window sups `W_j` are taken over `|ω| ≤ ω_max · 10^{j−3}` on the finest level.
//!
//! `GrowingUnbounded` when a loop-singular point is hit or the windows grow
//! monotonically by more than 10×; `Bounded` when the last doubling moves the
//! sup by less than 5% and the outermost decade adds less than 5%.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{closed_loop_transfer, LOOP_SINGULAR_COND};
use crate::boundary::{decompose, BoundaryDecomposition};
use crate::error::{PhsError, Result};
use crate::linalg::op_norm;
use crate::spec::PhsSpec;
use crate::transfer::bvp_transfer_matrix;
use crate::validate::Tolerances;

const LEVELS: usize = 4;
const REFINED_PEAKS: usize = 8;
const GOLDEN_ITERS: usize = 60;
const BOUNDED_CHANGE: f64 = 0.05;
const GROWTH_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assessment {
    Bounded,
    GrowingUnbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyPoint {
    pub omega: f64,
    pub re_s: f64,
    pub im_s: f64,
    /// `‖G(s)‖₂`; infinite when the loop solve failed.
    pub g_norm: f64,
    pub cond_loop: f64,
    pub oracle_residual: Option<f64>,
}

impl FrequencyPoint {
    pub fn s(&self) -> Complex64 {
        Complex64::new(self.re_s, self.im_s)
    }

    pub fn is_loop_singular(&self) -> bool {
        !self.g_norm.is_finite() || !(self.cond_loop <= LOOP_SINGULAR_COND)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanConfig {
    pub r: f64,
    pub omega_max: f64,
    pub samples: usize,
    /// Cross-check every k-th point of the finest level against the BVP oracle.
    pub oracle_every: Option<usize>,
}

impl ScanConfig {
    pub fn new(r: f64, omega_max: f64, samples: usize) -> Self {
        Self { r, omega_max, samples, oracle_every: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferScan {
    pub r: f64,
    pub omega_max: f64,
    pub samples: usize,
    /// Finest-level grid plus refined points, sorted by `ω`.
    pub points: Vec<FrequencyPoint>,
    pub sup_norm: f64,
    pub sup_omega: f64,
    /// Refined sup at each of the sample levels `samples · 2^k`.
    pub level_sups: Vec<f64>,
    /// Sups over `|ω| ≤ ω_max · 10^{j−3}`, `j = 0..3`.
    pub window_sups: Vec<f64>,
    pub singular_points: usize,
    pub max_cond_loop: f64,
    pub max_oracle_residual: Option<f64>,
    pub assessment: Assessment,
}

impl TransferScan {
    pub fn omega(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.omega).collect()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        json!({
            "r": self.r,
            "omega_max": self.omega_max,
            "samples": self.samples,
            "sup_norm": finite_or_null(self.sup_norm),
            "sup_omega": self.sup_omega,
            "assessment": self.assessment,
            "level_sups": self.level_sups.iter().map(|&x| finite_or_null(x)).collect::<Vec<_>>(),
            "window_sups": self.window_sups.iter().map(|&x| finite_or_null(x)).collect::<Vec<_>>(),
            "singular_points": self.singular_points,
            "max_cond_loop": finite_or_null(self.max_cond_loop),
            "max_oracle_residual": self.max_oracle_residual,
        })
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "omega,re_s,im_s,g_norm,cond_loop,oracle_residual")?;
        for p in &self.points {
            let res = p.oracle_residual.map(|r| format!("{r:.6e}")).unwrap_or_default();
            writeln!(
                out,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.6e},{res}",
                p.omega, p.re_s, p.im_s, p.g_norm, p.cond_loop
            )?;
        }
        Ok(())
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

/// Symmetric grid: per side, half the points linear in `[0, 10)` and half
/// log-spaced over `[10, ω_max]`. Zero appears once.
pub fn omega_grid(omega_max: f64, samples: usize) -> Vec<f64> {
    let half = (samples / 2).max(2);
    let positive: Vec<f64> = if omega_max <= 10.0 {
        (0..half).map(|i| omega_max * i as f64 / (half - 1) as f64).collect()
    } else {
        let lin = half / 2;
        let log = half - lin;
        let mut v: Vec<f64> = (0..lin).map(|i| 10.0 * i as f64 / lin as f64).collect();
        let (lo, hi) = (1.0f64, omega_max.log10());
        v.extend((0..log).map(|i| {
            let t = if log > 1 { i as f64 / (log - 1) as f64 } else { 1.0 };
            10f64.powf(lo + t * (hi - lo))
        }));
        v
    };
    let mut grid: Vec<f64> = positive.iter().rev().filter(|&&w| w > 0.0).map(|&w| -w).collect();
    grid.extend(positive);
    grid
}

fn evaluate(decomp: &BoundaryDecomposition, r: f64, omega: f64) -> FrequencyPoint {
    let s = Complex64::new(r, omega);
    let (g_norm, cond_loop) = match closed_loop_transfer(decomp, decomp.length, s) {
        Ok(cl) => (op_norm(&cl.g), cl.cond_loop),
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    FrequencyPoint { omega, re_s: r, im_s: omega, g_norm, cond_loop, oracle_residual: None }
}

/// Golden-section maximisation of `‖G(r + iω)‖` on `[lo, hi]`.
fn golden(decomp: &BoundaryDecomposition, r: f64, mut lo: f64, mut hi: f64) -> FrequencyPoint {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = evaluate(decomp, r, x1);
    let mut f2 = evaluate(decomp, r, x2);
    for _ in 0..GOLDEN_ITERS {
        if f1.g_norm >= f2.g_norm {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = evaluate(decomp, r, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = evaluate(decomp, r, x2);
        }
        if (hi - lo) <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
    }
    if f1.g_norm >= f2.g_norm {
        f1
    } else {
        f2
    }
}

/// Evaluates one level and refines its largest interior local maxima.
fn sample_level(decomp: &BoundaryDecomposition, r: f64, grid: &[f64]) -> (Vec<FrequencyPoint>, Vec<FrequencyPoint>) {
    let points: Vec<FrequencyPoint> = grid.par_iter().map(|&w| evaluate(decomp, r, w)).collect();
    let mut peaks: Vec<usize> = (1..points.len().saturating_sub(1))
        .filter(|&i| {
            let v = points[i].g_norm;
            v.is_finite() && v >= points[i - 1].g_norm && v >= points[i + 1].g_norm
        })
        .collect();
    peaks.sort_by(|&a, &b| points[b].g_norm.total_cmp(&points[a].g_norm).then(a.cmp(&b)));
    peaks.truncate(REFINED_PEAKS);
    let refined: Vec<FrequencyPoint> =
        peaks.par_iter().map(|&i| golden(decomp, r, grid[i - 1], grid[i + 1])).collect();
    (points, refined)
}

fn sup(points: &[FrequencyPoint]) -> (f64, f64) {
    points.iter().fold((f64::NEG_INFINITY, 0.0), |(best, at), p| {
        if p.g_norm > best {
            (p.g_norm, p.omega)
        } else {
            (best, at)
        }
    })
}

/// Validates nothing; callers are expected to have certified the spec.
pub fn vertical_line_scan(spec: &PhsSpec, r: f64, omega_max: f64, samples: usize) -> Result<TransferScan> {
    let decomp = decompose(spec, &Tolerances::default())?;
    vertical_line_scan_with(spec, &decomp, &ScanConfig::new(r, omega_max, samples))
}

pub fn vertical_line_scan_with(
    spec: &PhsSpec,
    decomp: &BoundaryDecomposition,
    config: &ScanConfig,
) -> Result<TransferScan> {
    let ScanConfig { r, omega_max, samples, oracle_every } = *config;
    if !(r > 0.0 && r.is_finite()) {
        return Err(PhsError::InvalidParameter(format!("abscissa r must be positive, got {r}")));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(PhsError::InvalidParameter(format!("omega_max must be positive, got {omega_max}")));
    }
    if samples < 16 {
        return Err(PhsError::InvalidParameter(format!("samples must be at least 16, got {samples}")));
    }

    let mut level_sups = Vec::with_capacity(LEVELS);
    let mut singular_points = 0;
    let mut finest = Vec::new();
    for k in 0..LEVELS {
        let grid = omega_grid(omega_max, samples << k);
        let (points, refined) = sample_level(decomp, r, &grid);
        singular_points += points.iter().chain(&refined).filter(|p| p.is_loop_singular()).count();
        let mut all = points;
        all.extend(refined);
        level_sups.push(sup(&all).0);
        if k == LEVELS - 1 {
            finest = all;
        }
    }
    finest.sort_by(|a, b| a.omega.total_cmp(&b.omega));

    if let Some(every) = oracle_every.filter(|&k| k > 0) {
        let picks: Vec<usize> = (0..finest.len()).step_by(every).collect();
        let residuals: Vec<(usize, Option<f64>)> = picks
            .par_iter()
            .map(|&i| {
                let p = &finest[i];
                if p.is_loop_singular() {
                    return (i, None);
                }
                let residual = closed_loop_transfer(decomp, decomp.length, p.s())
                    .ok()
                    .zip(bvp_transfer_matrix(spec, p.s()).ok())
                    .map(|(cl, oracle)| op_norm(&(cl.g - &oracle)) / (1.0 + op_norm(&oracle)));
                (i, residual)
            })
            .collect();
        for (i, res) in residuals {
            finest[i].oracle_residual = res;
        }
    }

    let window_sups: Vec<f64> = (0..LEVELS)
        .map(|j| {
            let bound = omega_max * 10f64.powi(j as i32 - 3);
            finest.iter().filter(|p| p.omega.abs() <= bound).map(|p| p.g_norm).fold(0.0, f64::max)
        })
        .collect();

    let (sup_norm, sup_omega) = sup(&finest);
    let max_cond_loop = finest.iter().map(|p| p.cond_loop).fold(1.0, f64::max);
    let max_oracle_residual = finest.iter().filter_map(|p| p.oracle_residual).reduce(f64::max);
    let assessment = assess(&level_sups, &window_sups, singular_points);

    Ok(TransferScan {
        r,
        omega_max,
        samples,
        points: finest,
        sup_norm,
        sup_omega,
        level_sups,
        window_sups,
        singular_points,
        max_cond_loop,
        max_oracle_residual,
        assessment,
    })
}

fn assess(level_sups: &[f64], windows: &[f64], singular_points: usize) -> Assessment {
    if singular_points > 0 {
        return Assessment::GrowingUnbounded;
    }
    let monotone = windows.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let (first, last) = (windows[0], windows[windows.len() - 1]);
    if monotone && first > 0.0 && last / first > GROWTH_FACTOR {
        return Assessment::GrowingUnbounded;
    }
    let n = level_sups.len();
    let doubling = (level_sups[n - 1] - level_sups[n - 2]).abs() / level_sups[n - 1].max(f64::MIN_POSITIVE);
    let outer = if windows[windows.len() - 2] > 0.0 { last / windows[windows.len() - 2] } else { f64::INFINITY };
    if doubling < BOUNDED_CHANGE && outer < 1.0 + BOUNDED_CHANGE {
        Assessment::Bounded
    } else {
        Assessment::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn grid_shape() {
        let g = omega_grid(1e4, 64);
        assert_eq!(g.len(), 63);
        assert_eq!(g[31], 0.0);
        assert!((g[62] - 1e4).abs() < 1e-8);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.iter().filter(|&&w| w >= 0.0 && w < 10.0).count(), 16);
        let small = omega_grid(5.0, 16);
        assert!((small[small.len() - 1] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn assessment_rules() {
        assert_eq!(assess(&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0, 1.0, 1.0], 0), Assessment::Bounded);
        assert_eq!(assess(&[1.0; 4], &[1.0; 4], 1), Assessment::GrowingUnbounded);
        assert_eq!(assess(&[1.0; 4], &[1.0, 2.0, 5.0, 20.0], 0), Assessment::GrowingUnbounded);
        assert_eq!(assess(&[1.0, 1.0, 1.0, 2.0], &[1.0; 4], 0), Assessment::Inconclusive);
    }

    #[test]
    fn schrodinger_bounded_at_unit_abscissa() {
        let scan = vertical_line_scan(&registry::schrodinger(1.0), 1.0, 1e4, 64).unwrap();
        assert_eq!(scan.assessment, Assessment::Bounded);
        assert!((scan.sup_norm - 4.0033).abs() < 1e-3, "{}", scan.sup_norm);
        let max = scan.points.iter().map(|p| p.g_norm).fold(0.0, f64::max);
        assert_eq!(max, scan.sup_norm);
    }

    #[test]
    fn rejects_bad_config() {
        let spec = registry::schrodinger(1.0);
        assert!(vertical_line_scan(&spec, 0.0, 1e4, 64).is_err());
        assert!(vertical_line_scan(&spec, 1.0, 1e4, 8).is_err());
    }

    #[test]
    fn csv_header() {
        let scan = vertical_line_scan(&registry::scalar_channel(1.0), 1.0, 100.0, 16).unwrap();
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("omega,re_s,im_s,g_norm,cond_loop,oracle_residual\n"));
        assert_eq!(text.lines().count(), scan.points.len() + 1);
    }
}
