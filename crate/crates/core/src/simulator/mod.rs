//! Method-of-lines simulation with Crank-Nicolson time stepping.
//!
//! Nodes `ξ_j = a + jh`, `j = 0..N−1`, carry `x_j`; `v_j = ℋx_j`. The second
//! difference at the end nodes uses one ghost value of `v` per end, and the
//! `2n` ghosts are eliminated from `[W_B,1; W_B,2] z_h = (u; 0)` where the
//! discrete trace `z_h` takes central slopes across the ghost. With
//! trapezoidal weights this gives the exact semi-discrete balance
//! `dE/dt = q(z_h)`, so the passivity of the ports carries over to the
//! scheme, and Crank-Nicolson keeps it step by step.
//!
//! When the ports prescribe only values (no slope traces), the end nodes
//! become algebraic and the interior nodes carry the state instead.
//!
//! The scheme corroborates the energy balance; it does not certify the
//! input-output well-posedness of the continuous system.

mod input;

pub use input::InputSignal;

use std::io::Write;

use nalgebra::{Dyn, LU};
use num_complex::Complex64;

use crate::error::{PhsError, Result};
use crate::linalg::{identity, inverse, op_norm, sigma_ratio, vstack};
use crate::spec::PhsSpec;
use crate::trace::TraceBlock;
use crate::validate::Tolerances;
use crate::{CMatrix, CVector};

pub const DEFAULT_NODES: usize = 201;
pub const MIN_NODES: usize = 16;

pub fn default_dt(spec: &PhsSpec) -> f64 {
    1e-3 * spec.length().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureKind {
    /// Ghost values eliminated through the slope traces.
    Ghost,
    /// Values prescribed at both ends; the end nodes are algebraic.
    Dirichlet,
}

/// A linear form in (state, input).
#[derive(Clone)]
struct Affine {
    x: CMatrix,
    u: CMatrix,
}

impl Affine {
    fn zero(rows: usize, dim: usize, m: usize) -> Self {
        Self { x: CMatrix::zeros(rows, dim), u: CMatrix::zeros(rows, m) }
    }
    fn lin(terms: &[(f64, &Affine)]) -> Self {
        let mut out = Affine::zero(terms[0].1.x.nrows(), terms[0].1.x.ncols(), terms[0].1.u.ncols());
        for &(c, t) in terms {
            let c = Complex64::new(c, 0.0);
            out.x += &t.x * c;
            out.u += &t.u * c;
        }
        out
    }
    fn left(&self, m: &CMatrix) -> Self {
        Self { x: m * &self.x, u: m * &self.u }
    }
}

pub struct Discretization {
    pub n: usize,
    pub m: usize,
    pub nodes: usize,
    pub h: f64,
    pub dt: f64,
    pub a: f64,
    pub closure: ClosureKind,
    /// The `2n × 2n` matrix solved for the ghosts (or end values).
    pub closure_block: CMatrix,
    /// `ẋ = A x + B u` on the state vector.
    pub a_h: CMatrix,
    pub b_h: CMatrix,
    /// Discrete trace `z_h = Z_x x + Z_u u`.
    pub trace_x: CMatrix,
    pub trace_u: CMatrix,
    /// Full nodal `x` (`nN` entries, node-major) from state and input.
    pub nodal_x: CMatrix,
    pub nodal_u: CMatrix,
    /// `(h/2) ℋ`, applied node by node with trapezoidal weights.
    hamiltonian_density: CMatrix,
    wb_ext: CMatrix,
    wb1: CMatrix,
    wc: CMatrix,
    implicit: LU<Complex64, Dyn, Dyn>,
    explicit: CMatrix,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("n", &self.n)
            .field("nodes", &self.nodes)
            .field("h", &self.h)
            .field("dt", &self.dt)
            .field("closure", &self.closure)
            .finish()
    }
}

impl Discretization {
    pub fn state_dim(&self) -> usize {
        self.a_h.nrows()
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.a + j as f64 * self.h).collect()
    }

    fn input_vec(&self, u: &[Complex64]) -> Result<CVector> {
        if u.len() != self.m {
            return Err(PhsError::Dimension {
                matrix: "input sample".into(),
                expected_rows: self.m,
                expected_cols: 1,
                rows: u.len(),
                cols: 1,
            });
        }
        Ok(CVector::from_column_slice(u))
    }

    pub fn trace(&self, state: &CVector, u: &[Complex64]) -> Result<CVector> {
        Ok(&self.trace_x * state + &self.trace_u * self.input_vec(u)?)
    }

    pub fn output(&self, state: &CVector, u: &[Complex64]) -> Result<CVector> {
        Ok(&self.wc * self.trace(state, u)?)
    }

    /// `Re u*y` at the discrete trace.
    pub fn port_power(&self, state: &CVector, u: &[Complex64]) -> Result<f64> {
        let z = self.trace(state, u)?;
        Ok((&self.wb1 * &z).dotc(&(&self.wc * &z)).re)
    }

    pub fn nodal_state(&self, state: &CVector, u: &[Complex64]) -> Result<CVector> {
        Ok(&self.nodal_x * state + &self.nodal_u * self.input_vec(u)?)
    }

    /// `(h/2) Σ w_j x_j* ℋ x_j` with trapezoidal weights.
    pub fn hamiltonian(&self, state: &CVector, u: &[Complex64]) -> Result<f64> {
        let x = self.nodal_state(state, u)?;
        let n = self.n;
        let energy = (0..self.nodes)
            .map(|j| {
                let w = if j == 0 || j == self.nodes - 1 { 0.5 } else { 1.0 };
                let xj = x.rows(j * n, n);
                w * xj.dotc(&(&self.hamiltonian_density * xj)).re
            })
            .sum();
        Ok(energy)
    }

    /// Restricts a nodal grid function to the state vector.
    pub fn state_from_nodal(&self, nodal: &CVector) -> Result<CVector> {
        let full = self.n * self.nodes;
        if nodal.len() != full {
            return Err(PhsError::Dimension {
                matrix: "initial state".into(),
                expected_rows: full,
                expected_cols: 1,
                rows: nodal.len(),
                cols: 1,
            });
        }
        Ok(match self.closure {
            ClosureKind::Ghost => nodal.clone(),
            ClosureKind::Dirichlet => nodal.rows(self.n, full - 2 * self.n).into_owned(),
        })
    }

    /// Relative residual of the boundary conditions for a nodal state, with
    /// second-order one-sided slopes.
    pub fn boundary_residual(&self, nodal: &CVector, h_mat: &CMatrix, u: &[Complex64]) -> Result<f64> {
        let (n, nn) = (self.n, self.nodes);
        let v = |j: usize| CMatrix::from_iterator(n, 1, (h_mat * nodal.rows(j * n, n)).iter().copied());
        let c = |x: f64| Complex64::new(x, 0.0);
        let inv2h = 1.0 / (2.0 * self.h);
        let slope_b = (v(nn - 1) * c(3.0) - v(nn - 2) * c(4.0) + v(nn - 3)) * c(inv2h);
        let slope_a = (v(0) * c(-3.0) + v(1) * c(4.0) - v(2)) * c(inv2h);
        let z = vstack(&[&v(nn - 1), &slope_b, &v(0), &slope_a]);
        let mut target = CMatrix::zeros(2 * n, 1);
        target.rows_mut(0, self.m).copy_from(&self.input_vec(u)?);
        let res = (&self.wb_ext * &z - &target).norm();
        Ok(res / (1.0 + op_norm(&self.wb_ext) * z.norm() + target.norm()))
    }
}

/// Builds the semi-discrete system and factors the Crank-Nicolson matrix.
pub fn discretize(spec: &PhsSpec, nodes: usize, dt: f64) -> Result<Discretization> {
    spec.check_dimensions()?;
    if nodes < MIN_NODES {
        return Err(PhsError::InvalidParameter(format!("need at least {MIN_NODES} grid points, got {nodes}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PhsError::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let tol = Tolerances::default();
    let (n, m) = (spec.n, spec.m);
    let h = spec.length() / (nodes - 1) as f64;
    let tc = spec.trace();
    let wb_ext = spec.extended_input_map();
    let cols = |b| tc.block_columns(&wb_ext, b);
    let (w_vb, w_db, w_va, w_da) =
        (cols(TraceBlock::ValueAtB), cols(TraceBlock::SlopeAtB), cols(TraceBlock::ValueAtA), cols(TraceBlock::SlopeAtA));
    let slope_block = CMatrix::from_fn(2 * n, 2 * n, |i, j| if j < n { w_db[(i, j)] } else { w_da[(i, j - n)] });
    let value_block = CMatrix::from_fn(2 * n, 2 * n, |i, j| if j < n { w_vb[(i, j)] } else { w_va[(i, j - n)] });

    let closure = if sigma_ratio(&slope_block) > tol.singular_ratio {
        ClosureKind::Ghost
    } else if op_norm(&slope_block) <= 1e-12 * op_norm(&wb_ext) && sigma_ratio(&value_block) > tol.singular_ratio {
        ClosureKind::Dirichlet
    } else {
        return Err(PhsError::ClosureSingular {
            message: format!(
                "the slope columns of [W_B,1; W_B,2] are singular (sigma_min/sigma_max = {:.3e}) but not absent; \
                 the ghost values cannot be eliminated",
                sigma_ratio(&slope_block)
            ),
            block: slope_block,
        });
    };

    let inputs = {
        let mut e = CMatrix::zeros(2 * n, m);
        e.view_mut((0, 0), (m, m)).copy_from(&identity(m));
        e
    };
    let c = |x: f64| Complex64::new(x, 0.0);
    let inv2h = 1.0 / (2.0 * h);

    // nodal value forms v_j and the state dimension
    let (dim, v_nodes, ghost_b, ghost_a, closure_block): (usize, Vec<Affine>, Affine, Affine, CMatrix) = match closure {
        ClosureKind::Ghost => {
            let dim = n * nodes;
            let v: Vec<Affine> = (0..nodes)
                .map(|j| {
                    let mut a = Affine::zero(n, dim, m);
                    a.x.view_mut((0, j * n), (n, n)).copy_from(&spec.h);
                    a
                })
                .collect();
            // S (g_b; g_a) = (u; 0) − W_vb v_b − W_va v_a + (W_db v_{N−2} − W_da v_1)/(2h)
            let s = CMatrix::from_fn(2 * n, 2 * n, |i, j| {
                if j < n {
                    w_db[(i, j)] * inv2h
                } else {
                    -w_da[(i, j - n)] * inv2h
                }
            });
            let s_inv = inverse(&s)?;
            let rhs = Affine::lin(&[
                (-1.0, &v[nodes - 1].left(&w_vb)),
                (-1.0, &v[0].left(&w_va)),
                (inv2h, &v[nodes - 2].left(&w_db)),
                (-inv2h, &v[1].left(&w_da)),
            ]);
            let rhs = Affine { x: rhs.x, u: inputs.clone() };
            let g = rhs.left(&s_inv);
            let split = |r: usize| Affine { x: g.x.rows(r, n).into_owned(), u: g.u.rows(r, n).into_owned() };
            (dim, v, split(0), split(n), slope_block)
        }
        ClosureKind::Dirichlet => {
            let dim = n * (nodes - 2);
            let ends = inverse(&value_block)? * &inputs;
            let mut v: Vec<Affine> = (0..nodes)
                .map(|j| {
                    let mut a = Affine::zero(n, dim, m);
                    if j > 0 && j < nodes - 1 {
                        a.x.view_mut((0, (j - 1) * n), (n, n)).copy_from(&spec.h);
                    }
                    a
                })
                .collect();
            v[nodes - 1].u = ends.rows(0, n).into_owned();
            v[0].u = ends.rows(n, n).into_owned();
            let unused = Affine::zero(n, dim, m);
            (dim, v, unused.clone(), unused, value_block)
        }
    };

    // discrete traces
    let (slope_b, slope_a) = match closure {
        ClosureKind::Ghost => (
            Affine::lin(&[(inv2h, &ghost_b), (-inv2h, &v_nodes[nodes - 2])]),
            Affine::lin(&[(inv2h, &v_nodes[1]), (-inv2h, &ghost_a)]),
        ),
        ClosureKind::Dirichlet => (
            Affine::lin(&[(3.0 * inv2h, &v_nodes[nodes - 1]), (-4.0 * inv2h, &v_nodes[nodes - 2]), (inv2h, &v_nodes[nodes - 3])]),
            Affine::lin(&[(-3.0 * inv2h, &v_nodes[0]), (4.0 * inv2h, &v_nodes[1]), (-inv2h, &v_nodes[2])]),
        ),
    };
    let trace_x = vstack(&[&v_nodes[nodes - 1].x, &slope_b.x, &v_nodes[0].x, &slope_a.x]);
    let trace_u = vstack(&[&v_nodes[nodes - 1].u, &slope_b.u, &v_nodes[0].u, &slope_a.u]);

    // second differences on the rows that carry state
    let state_nodes: Vec<usize> = match closure {
        ClosureKind::Ghost => (0..nodes).collect(),
        ClosureKind::Dirichlet => (1..nodes - 1).collect(),
    };
    let inv_h2 = 1.0 / (h * h);
    let mut a_h = CMatrix::zeros(dim, dim);
    let mut b_h = CMatrix::zeros(dim, m);
    for (row, &j) in state_nodes.iter().enumerate() {
        let prev = if j == 0 { &ghost_a } else { &v_nodes[j - 1] };
        let next = if j == nodes - 1 { &ghost_b } else { &v_nodes[j + 1] };
        let lap = Affine::lin(&[(inv_h2, prev), (-2.0 * inv_h2, &v_nodes[j]), (inv_h2, next)]).left(&spec.p2);
        let react = v_nodes[j].left(&spec.p0);
        a_h.rows_mut(row * n, n).copy_from(&(lap.x + react.x));
        b_h.rows_mut(row * n, n).copy_from(&(lap.u + react.u));
    }

    // x_j = ℋ⁻¹ v_j at every node
    let h_inv = inverse(&spec.h)?;
    let mut nodal_x = CMatrix::zeros(n * nodes, dim);
    let mut nodal_u = CMatrix::zeros(n * nodes, m);
    for (j, v) in v_nodes.iter().enumerate() {
        nodal_x.rows_mut(j * n, n).copy_from(&(&h_inv * &v.x));
        nodal_u.rows_mut(j * n, n).copy_from(&(&h_inv * &v.u));
    }

    let hamiltonian_density = &spec.h * c(0.5 * h);

    let half = c(0.5 * dt);
    let implicit = (identity(dim) - &a_h * half).lu();
    if !implicit.is_invertible() {
        return Err(PhsError::StepFailed("Crank-Nicolson matrix is singular".into()));
    }
    let explicit = identity(dim) + &a_h * half;

    Ok(Discretization {
        n,
        m,
        nodes,
        h,
        dt,
        a: spec.a,
        closure,
        closure_block,
        a_h,
        b_h,
        trace_x,
        trace_u,
        nodal_x,
        nodal_u,
        hamiltonian_density,
        wb_ext,
        wb1: spec.wb1.clone(),
        wc: spec.wc.clone(),
        implicit,
        explicit,
    })
}

/// One Crank-Nicolson step.
pub fn step(disc: &Discretization, state: &CVector, u_now: &[Complex64], u_next: &[Complex64]) -> Result<CVector> {
    if state.len() != disc.state_dim() {
        return Err(PhsError::Dimension {
            matrix: "state".into(),
            expected_rows: disc.state_dim(),
            expected_cols: 1,
            rows: state.len(),
            cols: 1,
        });
    }
    let u_mid = (disc.input_vec(u_now)? + disc.input_vec(u_next)?) * Complex64::new(0.5, 0.0);
    let rhs = &disc.explicit * state + &disc.b_h * u_mid * Complex64::new(disc.dt, 0.0);
    disc.implicit
        .solve(&rhs)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| PhsError::StepFailed("implicit solve produced non-finite values".into()))
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub nodes: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Keep the nodal state every k steps (plus the final one); `None` keeps none.
    pub snapshot_every: Option<usize>,
}

impl SimConfig {
    pub fn defaults(spec: &PhsSpec, t_end: f64) -> Self {
        Self { nodes: DEFAULT_NODES, dt: default_dt(spec), t_end, snapshot_every: None }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub times: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    /// `Re u*y` at each time level.
    pub port_power: Vec<f64>,
    /// `∫₀^{t_k} Re u*y dt` accumulated with midpoint values, the quantity the scheme balances exactly.
    pub supplied: Vec<f64>,
    pub inputs: Vec<Vec<Complex64>>,
    pub outputs: Vec<Vec<Complex64>>,
    /// `(t, nodal x)` pairs.
    pub snapshots: Vec<(f64, CVector)>,
    pub final_state: CVector,
    pub boundary_residual: f64,
    pub warning: Option<String>,
}

impl Trajectory {
    /// `max_k [H(t_k) − H(0) − supplied(t_k)]`; non-positive up to rounding for passive ports.
    pub fn max_violation(&self) -> f64 {
        let h0 = self.hamiltonian[0];
        self.hamiltonian.iter().zip(&self.supplied).map(|(h, s)| h - h0 - s).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv(&self, mut out: impl Write, with_snapshots: bool) -> std::io::Result<()> {
        write!(out, "t,H,re_power")?;
        let snaps = with_snapshots && !self.snapshots.is_empty();
        if snaps {
            let n = self.snapshots[0].1.len() / self.grid.len();
            for xi in &self.grid {
                for k in 0..n {
                    write!(out, ",re_x{k}@{xi:.6},im_x{k}@{xi:.6}")?;
                }
            }
        }
        writeln!(out)?;
        let mut next_snap = 0;
        for (k, t) in self.times.iter().enumerate() {
            write!(out, "{t:.10e},{:.15e},{:.15e}", self.hamiltonian[k], self.port_power[k])?;
            if snaps {
                if next_snap < self.snapshots.len() && (self.snapshots[next_snap].0 - t).abs() < 1e-12 * (1.0 + t.abs()) {
                    for z in self.snapshots[next_snap].1.iter() {
                        write!(out, ",{:.10e},{:.10e}", z.re, z.im)?;
                    }
                    next_snap += 1;
                } else {
                    for _ in 0..self.snapshots[0].1.len() {
                        write!(out, ",,")?;
                    }
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Samples `f` on the grid into a node-major vector.
pub fn grid_function(spec: &PhsSpec, nodes: usize, f: impl Fn(f64) -> Vec<Complex64>) -> CVector {
    let h = spec.length() / (nodes - 1) as f64;
    let mut out = CVector::zeros(spec.n * nodes);
    for j in 0..nodes {
        let vals = f(spec.a + j as f64 * h);
        for k in 0..spec.n {
            out[j * spec.n + k] = vals[k];
        }
    }
    out
}

const BOUNDARY_WARN: f64 = 1e-2;

pub fn simulate(
    spec: &PhsSpec,
    x0: &CVector,
    input: &dyn Fn(f64) -> Vec<Complex64>,
    config: &SimConfig,
) -> Result<Trajectory> {
    if !(config.t_end >= 0.0 && config.t_end.is_finite()) {
        return Err(PhsError::InvalidParameter(format!("t_end must be non-negative, got {}", config.t_end)));
    }
    let disc = discretize(spec, config.nodes, config.dt)?;
    simulate_with(spec, &disc, x0, input, config)
}

/// Simulation on an existing discretization (reuses its factorisation).
pub fn simulate_with(
    spec: &PhsSpec,
    disc: &Discretization,
    x0: &CVector,
    input: &dyn Fn(f64) -> Vec<Complex64>,
    config: &SimConfig,
) -> Result<Trajectory> {
    let steps = (config.t_end / disc.dt).round() as usize;
    let mut u = input(0.0);
    let boundary_residual = disc.boundary_residual(x0, &spec.h, &u)?;
    let warning = (boundary_residual > BOUNDARY_WARN).then(|| {
        format!("initial state violates the boundary conditions (relative residual {boundary_residual:.2e})")
    });

    let mut state = disc.state_from_nodal(x0)?;
    let mut times = vec![0.0];
    let mut hamiltonian = vec![disc.hamiltonian(&state, &u)?];
    let mut port_power = vec![disc.port_power(&state, &u)?];
    let mut supplied = vec![0.0];
    let mut outputs = vec![disc.output(&state, &u)?.iter().copied().collect::<Vec<_>>()];
    let mut snapshots = Vec::new();
    if config.snapshot_every.is_some() {
        snapshots.push((0.0, disc.nodal_state(&state, &u)?));
    }
    let mut inputs = vec![u.clone()];

    let half = Complex64::new(0.5, 0.0);
    for k in 0..steps {
        let t_next = (k + 1) as f64 * disc.dt;
        let u_next = input(t_next);
        let next = step(disc, &state, &u, &u_next)?;
        let x_mid = (&state + &next) * half;
        let u_mid: Vec<Complex64> = u.iter().zip(&u_next).map(|(a, b)| (a + b) * 0.5).collect();
        let mid_power = disc.port_power(&x_mid, &u_mid)?;
        state = next;
        u = u_next;

        times.push(t_next);
        hamiltonian.push(disc.hamiltonian(&state, &u)?);
        port_power.push(disc.port_power(&state, &u)?);
        supplied.push(supplied[k] + disc.dt * mid_power);
        outputs.push(disc.output(&state, &u)?.iter().copied().collect());
        inputs.push(u.clone());
        if let Some(every) = config.snapshot_every {
            if (k + 1) % every.max(1) == 0 || k + 1 == steps {
                snapshots.push((t_next, disc.nodal_state(&state, &u)?));
            }
        }
    }
    let final_state = disc.nodal_state(&state, &u)?;
    Ok(Trajectory {
        grid: disc.grid(),
        times,
        hamiltonian,
        port_power,
        supplied,
        inputs,
        outputs,
        snapshots,
        final_state,
        boundary_residual,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    fn zero(m: usize) -> impl Fn(f64) -> Vec<Complex64> {
        move |_| vec![Complex64::new(0.0, 0.0); m]
    }

    #[test]
    fn dirichlet_closure_is_second_difference() {
        // n = 1, values prescribed at both ends
        let mut spec = registry::scalar_channel(1.0);
        let tc = spec.trace();
        spec.wb1 = vstack(&[
            &tc.unit_row(TraceBlock::ValueAtB, 0, Complex64::new(1.0, 0.0)),
            &tc.unit_row(TraceBlock::ValueAtA, 0, Complex64::new(1.0, 0.0)),
        ]);
        spec.h = crate::linalg::rm(1, 1, &[2.0]);
        let disc = discretize(&spec, 21, 1e-3).unwrap();
        assert_eq!(disc.closure, ClosureKind::Dirichlet);
        let d = disc.state_dim();
        assert_eq!(d, 19);
        let scale = Complex64::new(0.0, 2.0) / (disc.h * disc.h);
        for i in 0..d {
            assert!((disc.a_h[(i, i)] + scale * 2.0).norm() < 1e-9);
            if i + 1 < d {
                assert!((disc.a_h[(i, i + 1)] - scale).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn mixed_ports_have_singular_closure() {
        match discretize(&registry::eb_illposed(1.0, 1.0), 41, 1e-3) {
            Err(PhsError::ClosureSingular { block, .. }) => assert_eq!(block.shape(), (4, 4)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rank_deficient_boundary_map_rejected() {
        let mut spec = registry::schrodinger(1.0);
        let row = spec.wb1.row(0).into_owned();
        spec.wb1.row_mut(1).copy_from(&row);
        assert!(matches!(discretize(&spec, 41, 1e-3), Err(PhsError::ClosureSingular { .. })));
    }

    #[test]
    fn zero_stays_zero() {
        let spec = registry::roller_beam(1.0, 1.0);
        let cfg = SimConfig { nodes: 41, dt: 1e-3, t_end: 0.05, snapshot_every: None };
        let traj = simulate(&spec, &CVector::zeros(2 * 41), &zero(1), &cfg).unwrap();
        assert!(traj.final_state.iter().all(|z| z.norm() == 0.0));
        assert!(traj.hamiltonian.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn conservative_ports_keep_energy() {
        let spec = registry::schrodinger(1.0);
        let nodes = 101;
        let x0 = grid_function(&spec, nodes, |xi| vec![Complex64::new((3.0 * xi).cos(), xi * xi)]);
        let cfg = SimConfig { nodes, dt: 1e-3, t_end: 0.2, snapshot_every: None };
        let traj = simulate(&spec, &x0, &zero(2), &cfg).unwrap();
        let h0 = traj.hamiltonian[0];
        for &h in &traj.hamiltonian {
            assert!(((h - h0) / h0).abs() < 1e-10);
        }
    }

    #[test]
    fn forced_balance_is_exact() {
        let spec = registry::eb_generic(1.0, 1.0);
        let nodes = 61;
        let x0 = grid_function(&spec, nodes, |xi| vec![Complex64::new(xi.sin(), 0.0), Complex64::new(0.0, 0.0)]);
        let input = |t: f64| (0..4).map(|k| Complex64::new((t * (k + 1) as f64).sin(), 0.0)).collect();
        let cfg = SimConfig { nodes, dt: 2e-3, t_end: 0.2, snapshot_every: Some(10) };
        let traj = simulate(&spec, &x0, &input, &cfg).unwrap();
        assert!(traj.max_violation() < 1e-10, "{}", traj.max_violation());
        assert!(traj.hamiltonian.iter().all(|&h| h >= 0.0));
        assert_eq!(traj.snapshots.len(), 11);
    }

    #[test]
    fn csv_layout() {
        let spec = registry::scalar_channel(1.0);
        let cfg = SimConfig { nodes: 16, dt: 0.01, t_end: 0.03, snapshot_every: None };
        let traj = simulate(&spec, &CVector::zeros(16), &zero(2), &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,H,re_power\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
