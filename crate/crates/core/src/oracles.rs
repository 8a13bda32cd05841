//! Slow, independent reference solvers.
//!
//! The tube problem is discretized on a grid (each signal cell split into
//! `subdivisions` equal cells) and solved by projected coordinate descent.
//! Nothing here shares code with the funnel sweep in [`crate::taut_string`].

use crate::error::{Error, Result};
use crate::signal::{
    cumulative, l2_norm, total_variation, PiecewiseConstantSignal, PiecewiseLinearFunction,
};
use crate::taut_string::Tube;

pub const DEFAULT_SUBDIVISIONS: usize = 4;
pub const DEFAULT_QP_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 1_000_000;

/// Discrete tube: node positions, a box per node and pinned end values.
///
/// Boxes may be unbounded on one side. The first and last boxes are
/// collapsed onto the pinned values.
#[derive(Clone, Debug, PartialEq)]
pub struct GridProblem {
    pub nodes: Vec<f64>,
    pub lower_box: Vec<f64>,
    pub upper_box: Vec<f64>,
}

impl GridProblem {
    /// The ROF tube `F ± λ` around the cumulative signal of `f`.
    pub fn rof_tube(f: &PiecewiseConstantSignal, lambda: f64, subdivisions: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let big_f = cumulative(f);
        let nodes = subdivide(big_f.nodes(), subdivisions)?;
        let center = big_f.values_on(&nodes);
        let problem = Self {
            lower_box: center.iter().map(|c| c - lambda).collect(),
            upper_box: center.iter().map(|c| c + lambda).collect(),
            nodes,
        };
        Ok(problem.pinned(center[0], *center.last().unwrap()))
    }

    /// Any [`Tube`], discretized on its refined grid.
    pub fn from_tube(tube: &Tube, subdivisions: usize) -> Result<Self> {
        let gates = tube.gates();
        let nodes = subdivide(&gates.x, subdivisions)?;
        let lower_box = match tube.lower() {
            Some(l) => l.values_on(&nodes),
            None => vec![f64::NEG_INFINITY; nodes.len()],
        };
        let upper_box = match tube.upper() {
            Some(u) => u.values_on(&nodes),
            None => vec![f64::INFINITY; nodes.len()],
        };
        let problem = Self {
            nodes,
            lower_box,
            upper_box,
        };
        Ok(problem.pinned(tube.start(), tube.end()))
    }

    fn pinned(mut self, start: f64, end: f64) -> Self {
        let last = self.nodes.len() - 1;
        self.lower_box[0] = start;
        self.upper_box[0] = start;
        self.lower_box[last] = end;
        self.upper_box[last] = end;
        self
    }

    fn check(&self) -> Result<()> {
        for i in 0..self.nodes.len() {
            if self.lower_box[i] > self.upper_box[i] {
                return Err(Error::Infeasible {
                    x: self.nodes[i],
                    lower: self.lower_box[i],
                    upper: self.upper_box[i],
                });
            }
        }
        Ok(())
    }

    /// The chord between the pins, clipped into the boxes.
    fn initial_guess(&self) -> Vec<f64> {
        let m = self.nodes.len();
        let (x0, x1) = (self.nodes[0], self.nodes[m - 1]);
        let (y0, y1) = (self.lower_box[0], self.lower_box[m - 1]);
        (0..m)
            .map(|i| {
                let t = (self.nodes[i] - x0) / (x1 - x0);
                (y0 + t * (y1 - y0)).clamp(self.lower_box[i], self.upper_box[i])
            })
            .collect()
    }
}

fn subdivide(grid: &[f64], subdivisions: usize) -> Result<Vec<f64>> {
    if subdivisions == 0 {
        return Err(Error::InvalidParameter(
            "subdivisions must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity((grid.len() - 1) * subdivisions + 1);
    for w in grid.windows(2) {
        for s in 0..subdivisions {
            out.push(w[0] + (w[1] - w[0]) * s as f64 / subdivisions as f64);
        }
    }
    out.push(*grid.last().unwrap());
    Ok(out)
}

/// Relaxation factor for the coordinate sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Relaxation {
    /// Start from `ω = 2 / (1 + sin(π / cells))`, the optimal over-relaxation
    /// for the free discrete string, and halve `ω − 1` whenever the largest
    /// update stops improving.
    Auto,
    /// A fixed `ω` in `(0, 2)`. `Fixed(1.0)` is plain cyclic coordinate descent.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Stop once the largest node update of a sweep is at most this.
    pub tol: f64,
    pub max_sweeps: usize,
    pub relaxation: Relaxation,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_QP_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            relaxation: Relaxation::Auto,
        }
    }
}

impl OracleOptions {
    fn omega(&self, cells: usize) -> Result<f64> {
        let omega = match self.relaxation {
            Relaxation::Auto => 2.0 / (1.0 + (std::f64::consts::PI / cells as f64).sin()),
            Relaxation::Fixed(w) => w,
        };
        if !(omega > 0.0 && omega < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "relaxation factor must lie in (0, 2), got {omega}"
            )));
        }
        Ok(omega)
    }
}

/// Relaxation state across sweeps. Under [`Relaxation::Auto`], `ω` backs off
/// towards plain coordinate descent once `4 · cells + 100` sweeps pass without
/// a new smallest update.
struct Schedule {
    omega: f64,
    adaptive: bool,
    best: f64,
    since_best: usize,
    window: usize,
}

impl Schedule {
    fn new(opts: &OracleOptions, cells: usize) -> Result<Self> {
        Ok(Self {
            omega: opts.omega(cells)?,
            adaptive: opts.relaxation == Relaxation::Auto,
            best: f64::INFINITY,
            since_best: 0,
            window: 4 * cells + 100,
        })
    }

    fn record(&mut self, max_update: f64) {
        if max_update < self.best {
            self.best = max_update;
            self.since_best = 0;
            return;
        }
        self.since_best += 1;
        if self.adaptive && self.since_best >= self.window && self.omega > 1.0 {
            self.omega = 1.0 + 0.5 * (self.omega - 1.0);
            if self.omega < 1.0 + 1e-3 {
                self.omega = 1.0;
            }
            self.best = max_update;
            self.since_best = 0;
        }
    }
}

/// Stopping threshold: `tol`, but never below a few ulps of the largest value.
fn stopping_tol(tol: f64, w: &[f64]) -> f64 {
    let scale = w.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    tol.max(16.0 * f64::EPSILON * scale)
}

/// `Σ (W_{i+1} − W_i)² / Δ_i`, twice the discrete string energy.
fn quadratic_objective(nodes: &[f64], w: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(w.windows(2))
        .map(|(x, y)| (y[1] - y[0]).powi(2) / (x[1] - x[0]))
        .sum()
}

/// Minimizes the discrete string energy over the boxes by projected
/// successive over-relaxation. Each node is moved towards the exact
/// minimizer of the energy in that coordinate, the length-weighted average of
/// its neighbours, and clipped into its box. With `ω ∈ (0, 2)` every update
/// lowers the objective, which is checked after each sweep.
pub fn solve_quadratic(problem: &GridProblem, opts: &OracleOptions) -> Result<Vec<f64>> {
    problem.check()?;
    let x = &problem.nodes;
    let m = x.len();
    let mut w = problem.initial_guess();
    if m <= 2 {
        return Ok(w);
    }
    let mut schedule = Schedule::new(opts, m - 1)?;
    let tol = stopping_tol(opts.tol, &w);
    let mut objective = quadratic_objective(x, &w);
    let mut last_update = f64::INFINITY;
    for sweep in 0..opts.max_sweeps {
        let mut max_update = 0.0f64;
        for i in 1..m - 1 {
            let (dl, dr) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let target = (w[i - 1] * dr + w[i + 1] * dl) / (dl + dr);
            let next = (w[i] + schedule.omega * (target - w[i]))
                .clamp(problem.lower_box[i], problem.upper_box[i]);
            max_update = max_update.max((next - w[i]).abs());
            w[i] = next;
        }
        let after = quadratic_objective(x, &w);
        if after > objective + 1e-12 * objective.abs().max(1.0) {
            return Err(Error::NonMonotoneObjective {
                sweep,
                before: objective,
                after,
            });
        }
        objective = after;
        last_update = max_update;
        if max_update <= tol {
            return Ok(w);
        }
        schedule.record(max_update);
    }
    Err(Error::SweepCap {
        sweeps: opts.max_sweeps,
        last_update,
    })
}

/// Minimizes `Σ H((W_{i+1} − W_i)/Δ_i) Δ_i` over the boxes, for a strictly
/// convex `H` given through its derivative `h`.
///
/// The coordinate minimizer solves `h(left slope) = h(right slope)` and is
/// found by bisection (tolerance `tol / 10`) inside the box, bracketed by the
/// neighbour values widened by `10 · (1 + |values|)`. The same relaxation as
/// [`solve_quadratic`] is applied to the coordinate step.
pub fn solve_convex(
    problem: &GridProblem,
    h: &dyn Fn(f64) -> f64,
    opts: &OracleOptions,
) -> Result<Vec<f64>> {
    problem.check()?;
    let x = &problem.nodes;
    let m = x.len();
    let mut w = problem.initial_guess();
    if m <= 2 {
        return Ok(w);
    }
    let mut schedule = Schedule::new(opts, m - 1)?;
    let tol = stopping_tol(opts.tol, &w);
    let bisection_tol = tol / 10.0;
    let mut last_update = f64::INFINITY;
    for _ in 0..opts.max_sweeps {
        let mut max_update = 0.0f64;
        for i in 1..m - 1 {
            let (dl, dr) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (wl, wr) = (w[i - 1], w[i + 1]);
            // increasing in t when h is increasing
            let g = |t: f64| h((t - wl) / dl) - h((wr - t) / dr);
            let pad = 10.0 * (1.0 + wl.abs().max(wr.abs()));
            let lo = problem.lower_box[i].max(wl.min(wr) - pad);
            let hi = problem.upper_box[i].min(wl.max(wr) + pad);
            let target = bisect_root(&g, lo, hi, bisection_tol)?;
            let next = (w[i] + schedule.omega * (target - w[i]))
                .clamp(problem.lower_box[i], problem.upper_box[i]);
            max_update = max_update.max((next - w[i]).abs());
            w[i] = next;
        }
        last_update = max_update;
        if max_update <= tol {
            return Ok(w);
        }
        schedule.record(max_update);
    }
    Err(Error::SweepCap {
        sweeps: opts.max_sweeps,
        last_update,
    })
}

/// Root of an increasing `g` on `[lo, hi]`, or the end point nearest to it.
fn bisect_root(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut g_lo, mut g_hi) = (g(lo), g(hi));
    if g_lo > g_hi {
        return Err(Error::NonMonotoneDerivative { at: lo });
    }
    if g_lo >= 0.0 {
        return Ok(lo);
    }
    if g_hi <= 0.0 {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid < g_lo || g_mid > g_hi {
            return Err(Error::NonMonotoneDerivative { at: mid });
        }
        if g_mid < 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn to_function(problem: &GridProblem, w: Vec<f64>) -> Result<PiecewiseLinearFunction> {
    PiecewiseLinearFunction::new(problem.nodes.clone(), w)
}

/// Discrete taut string of the ROF tube by projected coordinate descent.
pub fn qp_tube_solve(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    subdivisions: usize,
    tol: f64,
) -> Result<PiecewiseLinearFunction> {
    let problem = GridProblem::rof_tube(f, lambda, subdivisions)?;
    let opts = OracleOptions {
        tol,
        ..OracleOptions::default()
    };
    let w = solve_quadratic(&problem, &opts)?;
    to_function(&problem, w)
}

/// The oracle's denoised signal: slopes of the oracle string averaged back
/// onto the cells of `f`.
pub fn qp_tube_derivative(
    f: &PiecewiseConstantSignal,
    lambda: f64,
) -> Result<PiecewiseConstantSignal> {
    let w = qp_tube_solve(f, lambda, DEFAULT_SUBDIVISIONS, DEFAULT_QP_TOL)?;
    let grid = f.breakpoints();
    let at_grid = w.values_on(grid);
    let slopes = grid
        .windows(2)
        .zip(at_grid.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    PiecewiseConstantSignal::new(grid.to_vec(), slopes)
}

/// Discrete minimizer of `∫ H(W′)` over the ROF tube, `h = H′`.
pub fn convex_energy_solve(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    h: &dyn Fn(f64) -> f64,
    subdivisions: usize,
    tol: f64,
) -> Result<PiecewiseLinearFunction> {
    let problem = GridProblem::rof_tube(f, lambda, subdivisions)?;
    let opts = OracleOptions {
        tol,
        ..OracleOptions::default()
    };
    let w = solve_convex(&problem, h, &opts)?;
    to_function(&problem, w)
}

/// `E_λ(u) = λJ(u) + ½‖f − u‖²`.
pub fn rof_energy(
    f: &PiecewiseConstantSignal,
    u: &PiecewiseConstantSignal,
    lambda: f64,
) -> Result<f64> {
    let residual = f.sub(u)?;
    Ok(lambda * total_variation(u) + 0.5 * l2_norm(&residual).powi(2))
}

/// `½(‖f‖² − ‖f − λξ′‖²)`, the dual objective.
pub fn dual_energy(
    f: &PiecewiseConstantSignal,
    xi: &PiecewiseLinearFunction,
    lambda: f64,
) -> Result<f64> {
    let shifted = f.zip_with(&crate::signal::derivative(xi), |v, d| v - lambda * d)?;
    Ok(0.5 * (l2_norm(f).powi(2) - l2_norm(&shifted).powi(2)))
}
