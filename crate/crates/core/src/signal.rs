//! Piecewise-constant signals, piecewise-linear functions and atomic measures
//! on a bounded interval.
//!
//! Every functional here (integrals, norms, total variation, pairings) is a
//! finite sum over the pieces, so results are exact up to floating-point
//! rounding. Binary operations work on the union of the two breakpoint grids.

use std::fmt;

use crate::error::{Error, Result};

/// The open interval `(a, b)` a signal lives on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// True if `x` lies strictly inside `(a, b)`.
    pub fn contains_open(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

fn check_grid(grid: &[f64], what: &str) -> std::result::Result<(), String> {
    if grid.len() < 2 {
        return Err(format!(
            "{what} needs at least two entries, got {}",
            grid.len()
        ));
    }
    for (i, x) in grid.iter().enumerate() {
        if !x.is_finite() {
            return Err(format!("{what}[{i}] = {x} is not finite"));
        }
    }
    for (i, w) in grid.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(format!(
                "{what} must be strictly increasing: entry {} ({}) <= entry {} ({})",
                i + 1,
                w[1],
                i,
                w[0]
            ));
        }
    }
    Ok(())
}

/// Sorted union of two strictly increasing grids; shared points appear once.
pub(crate) fn merge_grids(left: &[f64], right: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(left.len() + right.len());
    let (mut i, mut j) = (0, 0);
    while i < left.len() || j < right.len() {
        let next = match (left.get(i), right.get(j)) {
            (Some(&l), Some(&r)) if l < r => {
                i += 1;
                l
            }
            (Some(&l), Some(&r)) if r < l => {
                j += 1;
                r
            }
            (Some(&l), Some(_)) => {
                i += 1;
                j += 1;
                l
            }
            (Some(&l), None) => {
                i += 1;
                l
            }
            (None, Some(&r)) => {
                j += 1;
                r
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// A signal that is constant on each cell `(x_{i-1}, x_i)` of a grid
/// `a = x_0 < x_1 < ... < x_n = b`.
///
/// Stored in canonical form: adjacent cells never carry the same value.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstantSignal {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantSignal {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&breakpoints, "breakpoints").map_err(Error::InvalidSignal)?;
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidSignal(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "value {i} = {v} is not finite"
            )));
        }
        Ok(Self::canonical(breakpoints, values))
    }

    /// Signal on `[0, n]` with unit cells.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let breakpoints = (0..=values.len()).map(|i| i as f64).collect();
        Self::new(breakpoints, values)
    }

    pub fn constant(interval: Interval, value: f64) -> Self {
        Self {
            breakpoints: vec![interval.a, interval.b],
            values: vec![value],
        }
    }

    /// Builds the canonical form of already-validated parts.
    pub(crate) fn canonical(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(breakpoints.len(), values.len() + 1);
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut vals: Vec<f64> = Vec::with_capacity(values.len());
        bps.push(breakpoints[0]);
        for (i, &v) in values.iter().enumerate() {
            if vals.last() == Some(&v) {
                *bps.last_mut().unwrap() = breakpoints[i + 1];
            } else {
                vals.push(v);
                bps.push(breakpoints[i + 1]);
            }
        }
        Self {
            breakpoints: bps,
            values: vals,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval {
            a: self.breakpoints[0],
            b: *self.breakpoints.last().unwrap(),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of constant pieces.
    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    /// Number of interior jumps (always `pieces() - 1` in canonical form).
    pub fn jump_count(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    pub fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints.windows(2).map(|w| w[1] - w[0])
    }

    /// Value at `x`; at an interior breakpoint the value of the right cell.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        let idx = k.saturating_sub(1).min(self.values.len() - 1);
        self.values[idx]
    }

    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.lengths())
            .map(|(v, l)| v * l)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.interval().length()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::canonical(
            self.breakpoints.clone(),
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self::canonical(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v + c).collect(),
        )
    }

    /// Merges neighbouring pieces whose values differ by at most `eps`; the
    /// merged piece takes the length-weighted mean. Meant for ingesting noisy
    /// data, canonical construction itself only merges exact ties.
    pub fn simplify(&self, eps: f64) -> Self {
        let mut bps = vec![self.breakpoints[0]];
        let mut vals: Vec<f64> = Vec::new();
        let mut mass = 0.0;
        let mut len = 0.0;
        for (i, (&v, l)) in self.values.iter().zip(self.lengths()).enumerate() {
            if let Some(last) = vals.last_mut() {
                if (v - *last).abs() <= eps {
                    mass += v * l;
                    len += l;
                    *last = mass / len;
                    *bps.last_mut().unwrap() = self.breakpoints[i + 1];
                    continue;
                }
            }
            vals.push(v);
            bps.push(self.breakpoints[i + 1]);
            mass = v * l;
            len = l;
        }
        Self::canonical(bps, vals)
    }

    /// Values on each cell of `grid`, which must refine this signal's grid.
    pub fn values_on(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len().saturating_sub(1));
        let mut j = 0;
        for left in &grid[..grid.len() - 1] {
            while j + 1 < self.values.len() && self.breakpoints[j + 1] <= *left {
                j += 1;
            }
            out.push(self.values[j]);
        }
        out
    }

    /// Applies `op` cell by cell on the common refinement of both grids.
    pub fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_interval(self.interval(), other.interval())?;
        let grid = merge_grids(&self.breakpoints, &other.breakpoints);
        let lhs = self.values_on(&grid);
        let rhs = other.values_on(&grid);
        let values = lhs.iter().zip(&rhs).map(|(&l, &r)| op(l, r)).collect();
        Ok(Self::canonical(grid, values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |l, r| l + r)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |l, r| l - r)
    }
}

fn same_interval(left: Interval, right: Interval) -> Result<()> {
    if left != right {
        return Err(Error::DomainMismatch { left, right });
    }
    Ok(())
}

/// A continuous function, linear between consecutive nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&nodes, "nodes").map_err(Error::InvalidFunction)?;
        if values.len() != nodes.len() {
            return Err(Error::InvalidFunction(format!(
                "{} nodes need {} values, got {}",
                nodes.len(),
                nodes.len(),
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "value {i} = {v} is not finite"
            )));
        }
        Ok(Self { nodes, values })
    }

    pub(crate) fn from_parts(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(nodes.len(), values.len());
        Self { nodes, values }
    }

    /// The affine function through `(a, ya)` and `(b, yb)`.
    pub fn linear(interval: Interval, ya: f64, yb: f64) -> Self {
        Self {
            nodes: vec![interval.a, interval.b],
            values: vec![ya, yb],
        }
    }

    pub fn zero(interval: Interval) -> Self {
        Self::linear(interval, 0.0, 0.0)
    }

    pub fn interval(&self) -> Interval {
        Interval {
            a: self.nodes[0],
            b: *self.nodes.last().unwrap(),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
    }

    /// Linear interpolation; constant extension outside `[a, b]`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        let k = self.nodes.partition_point(|&t| t <= x);
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Values at every point of `grid` (sorted, inside `[a, b]`), in one pass.
    pub fn values_on(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        let mut k = 0;
        for &x in grid {
            while k + 2 < self.nodes.len() && self.nodes[k + 1] <= x {
                k += 1;
            }
            let (x0, x1) = (self.nodes[k], self.nodes[k + 1]);
            let (y0, y1) = (self.values[k], self.values[k + 1]);
            let y = if x == x0 {
                y0
            } else if x == x1 {
                y1
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            };
            out.push(y);
        }
        out
    }

    /// Applies `op` nodewise on the union of both node sets.
    pub fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_interval(self.interval(), other.interval())?;
        let grid = merge_grids(&self.nodes, &other.nodes);
        let lhs = self.values_on(&grid);
        let rhs = other.values_on(&grid);
        let values = lhs.iter().zip(&rhs).map(|(&l, &r)| op(l, r)).collect();
        Ok(Self::from_parts(grid, values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |l, r| l + r)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |l, r| l - r)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_parts(
            self.nodes.clone(),
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self::from_parts(
            self.nodes.clone(),
            self.values.iter().map(|v| v + c).collect(),
        )
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True if the slopes never decrease (up to `tol`).
    pub fn is_convex(&self, tol: f64) -> bool {
        let slopes: Vec<f64> = self.slopes().collect();
        slopes.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}

/// A point mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A finite signed measure made of point masses strictly inside the interval.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    interval: Interval,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Zero masses are dropped; locations must be strictly increasing and
    /// strictly inside the interval.
    pub fn new(interval: Interval, atoms: Vec<Atom>) -> Result<Self> {
        for (i, atom) in atoms.iter().enumerate() {
            if !interval.contains_open(atom.location) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} at {} is not inside {interval}",
                    atom.location
                )));
            }
            if !atom.mass.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has mass {}",
                    atom.mass
                )));
            }
        }
        if let Some(i) = atoms
            .windows(2)
            .position(|w| w[1].location <= w[0].location)
        {
            return Err(Error::InvalidMeasure(format!(
                "atom locations must be strictly increasing (atom {})",
                i + 1
            )));
        }
        Ok(Self::from_parts(interval, atoms))
    }

    pub(crate) fn from_parts(interval: Interval, atoms: Vec<Atom>) -> Self {
        let atoms = atoms.into_iter().filter(|a| a.mass != 0.0).collect();
        Self { interval, atoms }
    }

    pub fn empty(interval: Interval) -> Self {
        Self {
            interval,
            atoms: Vec::new(),
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `|μ|(I)`.
    pub fn total_variation_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.abs()).sum()
    }

    /// `μ(I)`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass at `location`, zero if there is no atom there.
    pub fn mass_at(&self, location: f64) -> f64 {
        self.atoms
            .binary_search_by(|a| a.location.total_cmp(&location))
            .map(|i| self.atoms[i].mass)
            .unwrap_or(0.0)
    }

    /// Splits `μ = μ⁺ − μ⁻` into two positive measures with disjoint supports.
    pub fn jordan_decomposition(&self) -> (Self, Self) {
        let positive = self
            .atoms
            .iter()
            .filter(|a| a.mass > 0.0)
            .copied()
            .collect();
        let negative = self
            .atoms
            .iter()
            .filter(|a| a.mass < 0.0)
            .map(|a| Atom {
                location: a.location,
                mass: -a.mass,
            })
            .collect();
        (
            Self {
                interval: self.interval,
                atoms: positive,
            },
            Self {
                interval: self.interval,
                atoms: negative,
            },
        )
    }
}

/// `F(x) = ∫_a^x f dt`, with nodes at the breakpoints of `f`.
pub fn cumulative(f: &PiecewiseConstantSignal) -> PiecewiseLinearFunction {
    let mut values = Vec::with_capacity(f.breakpoints.len());
    let mut acc = 0.0;
    values.push(acc);
    for (v, l) in f.values.iter().zip(f.lengths()) {
        acc += v * l;
        values.push(acc);
    }
    PiecewiseLinearFunction::from_parts(f.breakpoints.clone(), values)
}

/// The slopes of `w` as a (canonical) piecewise-constant signal.
pub fn derivative(w: &PiecewiseLinearFunction) -> PiecewiseConstantSignal {
    PiecewiseConstantSignal::canonical(w.nodes.clone(), w.slopes().collect())
}

/// The distributional derivative of `u`: one atom per interior jump.
pub fn jump_measure(u: &PiecewiseConstantSignal) -> AtomicMeasure {
    let atoms = u
        .values
        .windows(2)
        .zip(&u.breakpoints[1..])
        .map(|(v, &x)| Atom {
            location: x,
            mass: v[1] - v[0],
        })
        .collect();
    AtomicMeasure::from_parts(u.interval(), atoms)
}

pub fn jordan_decomposition(mu: &AtomicMeasure) -> (AtomicMeasure, AtomicMeasure) {
    mu.jordan_decomposition()
}

/// `J(u)`: the sum of absolute interior jumps. The boundary contributes
/// nothing because the interval is open.
pub fn total_variation(u: &PiecewiseConstantSignal) -> f64 {
    u.values.windows(2).map(|v| (v[1] - v[0]).abs()).sum()
}

pub fn l2_inner(u: &PiecewiseConstantSignal, v: &PiecewiseConstantSignal) -> Result<f64> {
    same_interval(u.interval(), v.interval())?;
    let grid = merge_grids(&u.breakpoints, &v.breakpoints);
    let lhs = u.values_on(&grid);
    let rhs = v.values_on(&grid);
    Ok(grid
        .windows(2)
        .zip(lhs.iter().zip(&rhs))
        .map(|(x, (l, r))| l * r * (x[1] - x[0]))
        .sum())
}

pub fn l2_norm(u: &PiecewiseConstantSignal) -> f64 {
    u.values
        .iter()
        .zip(u.lengths())
        .map(|(v, l)| v * v * l)
        .sum::<f64>()
        .sqrt()
}

/// `‖u − v‖` on the common refinement.
pub fn l2_distance(u: &PiecewiseConstantSignal, v: &PiecewiseConstantSignal) -> Result<f64> {
    Ok(l2_norm(&u.sub(v)?))
}

/// Largest cellwise difference on the common refinement.
pub fn sup_distance(u: &PiecewiseConstantSignal, v: &PiecewiseConstantSignal) -> Result<f64> {
    Ok(u.sub(v)?.sup_norm())
}

/// Sup norm of a piecewise-linear function: the extremes sit at nodes.
pub fn linf_norm_pl(w: &PiecewiseLinearFunction) -> f64 {
    w.linf_norm()
}

/// `⟨u, ξ′⟩ = ∫_a^b u ξ′ dx`, exactly, on the common refinement.
pub fn pairing_with_certificate(
    u: &PiecewiseConstantSignal,
    xi: &PiecewiseLinearFunction,
) -> Result<f64> {
    same_interval(u.interval(), xi.interval())?;
    let grid = merge_grids(&u.breakpoints, &xi.nodes);
    let cell_values = u.values_on(&grid);
    let xi_values = xi.values_on(&grid);
    Ok(cell_values
        .iter()
        .zip(xi_values.windows(2))
        .map(|(v, y)| v * (y[1] - y[0]))
        .sum())
}

/// Splits `f = f₀ + c` with `c` the mean of `f`, so `f₀` integrates to zero.
pub fn mean_zero_split(f: &PiecewiseConstantSignal) -> (PiecewiseConstantSignal, f64) {
    let c = f.mean();
    (f.add_constant(-c), c)
}
