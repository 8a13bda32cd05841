//! The taut string through a tube of piecewise-linear obstacles, and ROF
//! denoising built on top of it.
//!
//! Between obstacle nodes both obstacles are affine, so the string can only
//! bend at nodes and the continuous problem reduces to threading a path
//! through a sequence of vertical gates `[lower(x_i), upper(x_i)]`. The
//! solver is the classic funnel sweep: an apex (the last forced knot) and two
//! deques holding the shortest paths from the apex to the bottom and to the
//! top of the latest gate. The lower chain bends only at lower-obstacle
//! points and is concave; the upper chain bends only at upper-obstacle points
//! and is convex. When a new gate point cannot be seen from the apex past the
//! opposite chain, the apex walks along that chain, emitting knots. Every
//! point enters and leaves each deque at most once, so the sweep is linear in
//! the number of nodes.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::signal::{
    cumulative, derivative, merge_grids, pairing_with_certificate, total_variation, Interval,
    PiecewiseConstantSignal, PiecewiseLinearFunction,
};
use crate::DEFAULT_TOL;

/// Feasible set `{ W : lower ≤ W ≤ upper, W(a) = start, W(b) = end }`.
///
/// Either obstacle may be absent, which makes the tube one-sided.
#[derive(Clone, Debug, PartialEq)]
pub struct Tube {
    lower: Option<PiecewiseLinearFunction>,
    upper: Option<PiecewiseLinearFunction>,
    start: f64,
    end: f64,
    interval: Interval,
}

impl Tube {
    pub fn new(
        lower: Option<PiecewiseLinearFunction>,
        upper: Option<PiecewiseLinearFunction>,
        start: f64,
        end: f64,
    ) -> Result<Self> {
        let interval = match (&lower, &upper) {
            (Some(l), Some(u)) => {
                if l.interval() != u.interval() {
                    return Err(Error::DomainMismatch {
                        left: l.interval(),
                        right: u.interval(),
                    });
                }
                l.interval()
            }
            (Some(l), None) => l.interval(),
            (None, Some(u)) => u.interval(),
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "a tube needs at least one obstacle to fix its interval".into(),
                ))
            }
        };
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pinned values must be finite, got {start} and {end}"
            )));
        }
        let tube = Self {
            lower,
            upper,
            start,
            end,
            interval,
        };
        tube.check_feasible()?;
        Ok(tube)
    }

    /// The ROF tube `F − λ ≤ W ≤ F + λ`, pinned at `F(a)` and `F(b)`.
    pub fn around(center: &PiecewiseLinearFunction, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Self::new(
            Some(center.add_constant(-lambda)),
            Some(center.add_constant(lambda)),
            center.first(),
            center.last(),
        )
    }

    /// The one-sided tube `W ≤ upper`, pinned at the obstacle's end values.
    pub fn below(upper: &PiecewiseLinearFunction) -> Self {
        let (start, end) = (upper.first(), upper.last());
        Self {
            interval: upper.interval(),
            lower: None,
            upper: Some(upper.clone()),
            start,
            end,
        }
    }

    /// The one-sided tube `W ≥ lower`, pinned at the obstacle's end values.
    pub fn above(lower: &PiecewiseLinearFunction) -> Self {
        let (start, end) = (lower.first(), lower.last());
        Self {
            interval: lower.interval(),
            lower: Some(lower.clone()),
            upper: None,
            start,
            end,
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn lower(&self) -> Option<&PiecewiseLinearFunction> {
        self.lower.as_ref()
    }

    pub fn upper(&self) -> Option<&PiecewiseLinearFunction> {
        self.upper.as_ref()
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Common refinement of the obstacle nodes with the gate bounds there
    /// (`±∞` for an absent side). The end gates are collapsed to the pins.
    pub fn gates(&self) -> Gates {
        let grid = match (&self.lower, &self.upper) {
            (Some(l), Some(u)) => merge_grids(l.nodes(), u.nodes()),
            (Some(l), None) => l.nodes().to_vec(),
            (None, Some(u)) => u.nodes().to_vec(),
            (None, None) => vec![self.interval.a(), self.interval.b()],
        };
        let m = grid.len();
        let lo = match &self.lower {
            Some(l) => l.values_on(&grid),
            None => vec![f64::NEG_INFINITY; m],
        };
        let hi = match &self.upper {
            Some(u) => u.values_on(&grid),
            None => vec![f64::INFINITY; m],
        };
        Gates {
            x: grid,
            lo,
            hi,
            start: self.start,
            end: self.end,
        }
    }

    fn check_feasible(&self) -> Result<()> {
        let g = self.gates();
        for i in 0..g.x.len() {
            if g.lo[i] > g.hi[i] {
                return Err(Error::Infeasible {
                    x: g.x[i],
                    lower: g.lo[i],
                    upper: g.hi[i],
                });
            }
        }
        let last = g.x.len() - 1;
        for (i, pin) in [(0, self.start), (last, self.end)] {
            if pin < g.lo[i] {
                return Err(Error::Infeasible {
                    x: g.x[i],
                    lower: g.lo[i],
                    upper: pin,
                });
            }
            if pin > g.hi[i] {
                return Err(Error::Infeasible {
                    x: g.x[i],
                    lower: pin,
                    upper: g.hi[i],
                });
            }
        }
        Ok(())
    }

    /// Solves the tube problem and keeps the knot bookkeeping.
    pub fn solve(&self) -> TautString {
        let gates = self.gates();
        let knots = funnel(&gates);
        let string = PiecewiseLinearFunction::from_parts(
            knots.iter().map(|k| k.x).collect(),
            knots.iter().map(|k| k.y).collect(),
        );
        TautString {
            string,
            knots,
            gates,
        }
    }
}

/// Gate bounds on the refined grid of a [`Tube`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gates {
    pub x: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub start: f64,
    pub end: f64,
}

/// Which constraint pins a knot of the string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contact {
    Start,
    End,
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    /// Index into the refined grid.
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub contact: Contact,
}

/// A maximal run of grid nodes where the string sits on an obstacle. A single
/// touching point has `start == end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactSet {
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TautString {
    pub string: PiecewiseLinearFunction,
    pub knots: Vec<Knot>,
    pub gates: Gates,
}

impl TautString {
    /// Contact sets with the lower and upper obstacle, in that order. A node
    /// is in contact when the string is within `tol · max(1, scale)` of the
    /// obstacle, `scale` being the largest finite gate bound.
    pub fn contacts(&self, tol: f64) -> (Vec<ContactSet>, Vec<ContactSet>) {
        let g = &self.gates;
        let scale =
            g.lo.iter()
                .chain(&g.hi)
                .filter(|v| v.is_finite())
                .fold(1.0f64, |m, v| m.max(v.abs()));
        let w = self.string.values_on(&g.x);
        let eps = tol * scale;
        let lower = contact_runs(&g.x, |i| (w[i] - g.lo[i]).abs() <= eps);
        let upper = contact_runs(&g.x, |i| (w[i] - g.hi[i]).abs() <= eps);
        (lower, upper)
    }
}

fn contact_runs(x: &[f64], touching: impl Fn(usize) -> bool) -> Vec<ContactSet> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for i in 0..x.len() {
        match (touching(i), open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                out.push(ContactSet {
                    start: x[s],
                    end: x[i - 1],
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push(ContactSet {
            start: x[s],
            end: x[x.len() - 1],
        });
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Point {
    x: f64,
    y: f64,
    index: usize,
    contact: Contact,
}

impl Point {
    fn slope_to(&self, other: &Point) -> f64 {
        (other.y - self.y) / (other.x - self.x)
    }

    fn knot(&self) -> Knot {
        Knot {
            index: self.index,
            x: self.x,
            y: self.y,
            contact: self.contact,
        }
    }
}

struct Funnel {
    apex: Point,
    lower: VecDeque<Point>,
    upper: VecDeque<Point>,
    knots: Vec<Knot>,
}

impl Funnel {
    fn push_lower(&mut self, p: Point) {
        // drop lower points the chord to `p` clears
        while let Some(last) = self.lower.back() {
            let prev = if self.lower.len() >= 2 {
                self.lower[self.lower.len() - 2]
            } else {
                self.apex
            };
            if prev.slope_to(&p) >= prev.slope_to(last) {
                self.lower.pop_back();
            } else {
                break;
            }
        }
        if self.lower.is_empty() {
            // the segment apex -> p may cut through the upper chain
            while let Some(q) = self.upper.front() {
                if self.apex.slope_to(&p) > self.apex.slope_to(q) {
                    self.apex = self.upper.pop_front().unwrap();
                    self.knots.push(self.apex.knot());
                } else {
                    break;
                }
            }
        }
        self.lower.push_back(p);
    }

    fn push_upper(&mut self, p: Point) {
        while let Some(last) = self.upper.back() {
            let prev = if self.upper.len() >= 2 {
                self.upper[self.upper.len() - 2]
            } else {
                self.apex
            };
            if prev.slope_to(&p) <= prev.slope_to(last) {
                self.upper.pop_back();
            } else {
                break;
            }
        }
        if self.upper.is_empty() {
            while let Some(q) = self.lower.front() {
                if self.apex.slope_to(&p) < self.apex.slope_to(q) {
                    self.apex = self.lower.pop_front().unwrap();
                    self.knots.push(self.apex.knot());
                } else {
                    break;
                }
            }
        }
        self.upper.push_back(p);
    }
}

/// Knots of the taut string through `gates`, first to last.
fn funnel(gates: &Gates) -> Vec<Knot> {
    let m = gates.x.len();
    let apex = Point {
        x: gates.x[0],
        y: gates.start,
        index: 0,
        contact: Contact::Start,
    };
    let mut state = Funnel {
        apex,
        lower: VecDeque::new(),
        upper: VecDeque::new(),
        knots: vec![apex.knot()],
    };
    for i in 1..m - 1 {
        let x = gates.x[i];
        if gates.lo[i].is_finite() {
            state.push_lower(Point {
                x,
                y: gates.lo[i],
                index: i,
                contact: Contact::Lower,
            });
        }
        if gates.hi[i].is_finite() {
            state.push_upper(Point {
                x,
                y: gates.hi[i],
                index: i,
                contact: Contact::Upper,
            });
        }
    }
    let end = Point {
        x: gates.x[m - 1],
        y: gates.end,
        index: m - 1,
        contact: Contact::End,
    };
    state.push_lower(end);
    state.push_upper(end);
    // both chains now end at `end`; after the final pushes at most one of
    // them still bends and that one is the lower chain
    let mut knots = state.knots;
    knots.extend(state.lower.iter().map(Point::knot));
    knots
}

/// The taut string: the minimizer of `½∫W′²` over the tube.
pub fn solve_tube(tube: &Tube) -> PiecewiseLinearFunction {
    tube.solve().string
}

/// ROF solution bundled with its dual certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoiseResult {
    pub lambda: f64,
    /// The denoised signal `u_λ = W_λ′`.
    pub u: PiecewiseConstantSignal,
    /// The taut string `W_λ`.
    pub string: PiecewiseLinearFunction,
    /// The dual certificate `ξ_λ = (F − W_λ)/λ`, on the grid of the input.
    pub certificate: PiecewiseLinearFunction,
    /// `J(u_λ)`.
    pub tv: f64,
    /// `E_λ(u_λ)`, the optimal ROF energy.
    pub energy: f64,
    pub contact_lower: Vec<ContactSet>,
    pub contact_upper: Vec<ContactSet>,
    pub knots: Vec<Knot>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// `‖F₀‖_∞` where `F₀` is the cumulative signal of the mean-zero part,
/// evaluated as the largest deviation of `F` from its chord.
pub(crate) fn chord_deviation(f: &PiecewiseConstantSignal, big_f: &PiecewiseLinearFunction) -> f64 {
    let a = f.interval().a();
    let mean = big_f.last() / f.interval().length();
    big_f
        .nodes()
        .iter()
        .zip(big_f.values())
        .fold(0.0f64, |m, (&x, &y)| m.max((y - mean * (x - a)).abs()))
}

/// ROF denoising with the default tolerance.
pub fn rof_denoise(f: &PiecewiseConstantSignal, lambda: f64) -> Result<DenoiseResult> {
    rof_denoise_with_tol(f, lambda, DEFAULT_TOL)
}

/// Minimizes `λJ(u) + ½‖f − u‖²` by the taut string algorithm.
///
/// The tube `F ± λ` is threaded by the funnel sweep. Slopes and certificate
/// values are then rebuilt from the knot contacts (where `W − F` is exactly
/// `0` or `±λ`) and sums of the input values over each run, which keeps
/// `(f − u)/λ` accurate even when `λ` is tiny compared with `F`. `tol` only
/// affects contact-set reporting.
pub fn rof_denoise_with_tol(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    tol: f64,
) -> Result<DenoiseResult> {
    check_lambda(lambda)?;
    let big_f = cumulative(f);
    let grid = f.breakpoints();
    let vals = f.values();
    let n = vals.len();
    let fv = big_f.values();

    let knots = if lambda >= chord_deviation(f, &big_f) {
        // the chord already fits; also the closed end of the vanishing threshold
        vec![
            Knot {
                index: 0,
                x: grid[0],
                y: fv[0],
                contact: Contact::Start,
            },
            Knot {
                index: n,
                x: grid[n],
                y: fv[n],
                contact: Contact::End,
            },
        ]
    } else {
        let gates = Gates {
            x: grid.to_vec(),
            lo: fv.iter().map(|v| v - lambda).collect(),
            hi: fv.iter().map(|v| v + lambda).collect(),
            start: fv[0],
            end: fv[n],
        };
        funnel(&gates)
    };

    let offset = |k: &Knot| match k.contact {
        Contact::Upper => lambda,
        Contact::Lower => -lambda,
        Contact::Start | Contact::End => 0.0,
    };

    let mut u_bps = Vec::with_capacity(knots.len());
    let mut u_vals = Vec::with_capacity(knots.len() - 1);
    let mut xi = vec![0.0; n + 1];
    u_bps.push(grid[0]);
    for pair in knots.windows(2) {
        let (j, k) = (pair[0].index, pair[1].index);
        let (off_j, off_k) = (offset(&pair[0]), offset(&pair[1]));
        let mass: f64 = (j..k).map(|i| vals[i] * (grid[i + 1] - grid[i])).sum();
        let slope = (mass + off_k - off_j) / (grid[k] - grid[j]);
        u_vals.push(slope);
        u_bps.push(grid[k]);

        xi[j] = -off_j / lambda;
        for i in j + 1..k {
            xi[i] = xi[i - 1] + (vals[i - 1] - slope) * (grid[i] - grid[i - 1]) / lambda;
        }
    }
    xi[n] = 0.0;

    let u = PiecewiseConstantSignal::canonical(u_bps, u_vals);
    let string = PiecewiseLinearFunction::from_parts(
        knots.iter().map(|k| k.x).collect(),
        knots.iter().map(|k| fv[k.index] + offset(k)).collect(),
    );
    let certificate = PiecewiseLinearFunction::from_parts(grid.to_vec(), xi);

    let tv = total_variation(&u);
    let residual = f.sub(&u)?;
    let energy = lambda * tv + 0.5 * crate::signal::l2_norm(&residual).powi(2);

    // |W − (F ± λ)| = λ|ξ ± 1| on the grid
    let scale = big_f.linf_norm().max(1.0);
    let eps = tol * scale;
    let xs = certificate.values();
    let contact_upper = contact_runs(grid, |i| lambda * (xs[i] + 1.0).abs() <= eps);
    let contact_lower = contact_runs(grid, |i| lambda * (xs[i] - 1.0).abs() <= eps);

    Ok(DenoiseResult {
        lambda,
        u,
        string,
        certificate,
        tv,
        energy,
        contact_lower,
        contact_upper,
        knots,
    })
}

/// One failed condition of [`verify_certificate`].
#[derive(Clone, Debug, PartialEq)]
pub enum CertificateViolation {
    /// The pair lives on different intervals.
    Domain,
    /// `u ≠ f − λξ′`; carries the largest cellwise deviation.
    Residual(f64),
    /// `ξ(a)` or `ξ(b)` is not zero.
    Boundary(f64),
    /// `‖ξ‖_∞ > 1`.
    SupNorm(f64),
    /// `J(u) ≠ ⟨u, ξ′⟩`; carries the gap.
    Pairing(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateVerdict {
    pub residual: f64,
    pub boundary: f64,
    pub sup_norm: f64,
    pub pairing_gap: f64,
    pub violations: Vec<CertificateViolation>,
}

impl CertificateVerdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the optimality conditions of a primal-dual pair without a
/// reference solution:
///
/// 1. `u = f − λξ′` cell by cell (to `tol · max(1, ‖f‖_∞)`),
/// 2. `ξ(a) = ξ(b) = 0` and `‖ξ‖_∞ ≤ 1 + tol`,
/// 3. `|J(u) − ⟨u, ξ′⟩| ≤ tol · (1 + J(u))`.
///
/// Together they identify `u` as the ROF minimizer and `ξ` as its certificate.
pub fn verify_certificate(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    u: &PiecewiseConstantSignal,
    xi: &PiecewiseLinearFunction,
    tol: f64,
) -> CertificateVerdict {
    let mut verdict = CertificateVerdict {
        residual: f64::NAN,
        boundary: f64::NAN,
        sup_norm: f64::NAN,
        pairing_gap: f64::NAN,
        violations: Vec::new(),
    };
    if f.interval() != u.interval() || f.interval() != xi.interval() {
        verdict.violations.push(CertificateViolation::Domain);
        return verdict;
    }

    let predicted = f
        .zip_with(&derivative(xi), |fv, d| fv - lambda * d)
        .expect("intervals checked");
    verdict.residual = predicted.sub(u).expect("intervals checked").sup_norm();
    if verdict.residual > tol * f.sup_norm().max(1.0) {
        verdict
            .violations
            .push(CertificateViolation::Residual(verdict.residual));
    }

    verdict.boundary = xi.first().abs().max(xi.last().abs());
    if verdict.boundary > tol {
        verdict
            .violations
            .push(CertificateViolation::Boundary(verdict.boundary));
    }
    verdict.sup_norm = xi.linf_norm();
    if verdict.sup_norm > 1.0 + tol {
        verdict
            .violations
            .push(CertificateViolation::SupNorm(verdict.sup_norm));
    }

    let tv = total_variation(u);
    let pairing = pairing_with_certificate(u, xi).expect("intervals checked");
    verdict.pairing_gap = (tv - pairing).abs();
    if verdict.pairing_gap > tol * (1.0 + tv) {
        verdict
            .violations
            .push(CertificateViolation::Pairing(verdict.pairing_gap));
    }
    verdict
}
