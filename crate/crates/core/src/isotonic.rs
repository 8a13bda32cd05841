//! Least-squares fit by a non-decreasing signal.
//!
//! The fit is the derivative of the lower convex envelope of the cumulative
//! signal (the taut string under the one-sided obstacle `W ≤ F`). A weighted
//! pool-adjacent-violators routine is kept alongside as an independent check.

use crate::signal::{cumulative, l2_norm, PiecewiseConstantSignal, PiecewiseLinearFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct IsotonicResult {
    /// The non-decreasing fit.
    pub u: PiecewiseConstantSignal,
    /// The lower convex envelope of the cumulative signal; `u` is its slope.
    pub envelope: PiecewiseLinearFunction,
    /// `½‖u − f‖²`.
    pub residual: f64,
}

/// Lower convex hull of the nodes of `w` (monotone chain). Collinear nodes
/// are dropped, so consecutive slopes of the result strictly increase.
pub fn lower_convex_envelope(w: &PiecewiseLinearFunction) -> PiecewiseLinearFunction {
    let (xs, ys) = (w.nodes(), w.values());
    let hull = hull_indices(xs, ys);
    PiecewiseLinearFunction::from_parts(
        hull.iter().map(|&i| xs[i]).collect(),
        hull.iter().map(|&i| ys[i]).collect(),
    )
}

fn hull_indices(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Isotonic regression of `f` via the lower convex envelope of `F`.
///
/// On each hull segment the slope is recomputed from the input cells it
/// spans, `Σ v_i ℓ_i / Σ ℓ_i`, which is the same number as the envelope's
/// slope without the cancellation in `F(x_k) − F(x_j)`.
pub fn isotonic_fit(f: &PiecewiseConstantSignal) -> IsotonicResult {
    let big_f = cumulative(f);
    let hull = hull_indices(big_f.nodes(), big_f.values());
    let grid = f.breakpoints();
    let vals = f.values();

    let mut bps = Vec::with_capacity(hull.len());
    let mut out = Vec::with_capacity(hull.len() - 1);
    bps.push(grid[0]);
    for pair in hull.windows(2) {
        let (j, k) = (pair[0], pair[1]);
        let mass: f64 = (j..k).map(|i| vals[i] * (grid[i + 1] - grid[i])).sum();
        out.push(mass / (grid[k] - grid[j]));
        bps.push(grid[k]);
    }
    let u = PiecewiseConstantSignal::canonical(bps, out);
    let envelope = PiecewiseLinearFunction::from_parts(
        hull.iter().map(|&i| big_f.nodes()[i]).collect(),
        hull.iter().map(|&i| big_f.values()[i]).collect(),
    );
    let residual = 0.5 * l2_norm(&f.sub(&u).expect("same interval")).powi(2);
    IsotonicResult {
        u,
        envelope,
        residual,
    }
}

/// Weighted pool-adjacent-violators over `(value, length)` pairs.
pub fn pava_oracle(f: &PiecewiseConstantSignal) -> PiecewiseConstantSignal {
    struct Block {
        mean: f64,
        weight: f64,
        end: usize,
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(f.pieces());
    for (i, (&v, w)) in f.values().iter().zip(f.lengths()).enumerate() {
        let mut block = Block {
            mean: v,
            weight: w,
            end: i + 1,
        };
        while let Some(prev) = blocks.last() {
            if prev.mean <= block.mean {
                break;
            }
            let prev = blocks.pop().unwrap();
            let weight = prev.weight + block.weight;
            block = Block {
                mean: (prev.mean * prev.weight + block.mean * block.weight) / weight,
                weight,
                end: block.end,
            };
        }
        blocks.push(block);
    }
    let grid = f.breakpoints();
    let mut bps = vec![grid[0]];
    let mut vals = Vec::with_capacity(blocks.len());
    for b in &blocks {
        bps.push(grid[b.end]);
        vals.push(b.mean);
    }
    PiecewiseConstantSignal::canonical(bps, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sup_distance;

    fn six_step() -> PiecewiseConstantSignal {
        PiecewiseConstantSignal::uniform(vec![-1.0, -2.0, -0.45, 1.0, 0.5, 2.05]).unwrap()
    }

    #[test]
    fn envelope_of_pooled_cumulative() {
        let big_f = PiecewiseLinearFunction::new(
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            vec![0.0, -1.0, -3.0, -3.5, -2.5, -2.0, 0.0],
        )
        .unwrap();
        let env = lower_convex_envelope(&big_f);
        assert_eq!(env.nodes(), &[0.0, 2.0, 3.0, 5.0, 6.0]);
        assert!(env.is_convex(0.0));
    }

    #[test]
    fn envelope_of_convex_and_concave() {
        let convex =
            PiecewiseLinearFunction::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, -1.0, -1.5, 0.0])
                .unwrap();
        assert_eq!(lower_convex_envelope(&convex), convex);
        let concave =
            PiecewiseLinearFunction::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 3.0, 1.0])
                .unwrap();
        let env = lower_convex_envelope(&concave);
        assert_eq!(env.nodes(), &[0.0, 3.0]);
        assert_eq!(env.values(), &[0.0, 1.0]);
    }

    #[test]
    fn six_cell_signal_pools() {
        let fit = isotonic_fit(&six_step());
        let want =
            PiecewiseConstantSignal::uniform(vec![-1.5, -1.5, -0.45, 0.75, 0.75, 2.05]).unwrap();
        assert!(sup_distance(&fit.u, &want).unwrap() < 1e-15);
        assert!(fit.u.is_non_decreasing());
        assert_eq!(fit.envelope.nodes(), &[0.0, 2.0, 3.0, 5.0, 6.0]);
        assert!(sup_distance(&pava_oracle(&six_step()), &want).unwrap() < 1e-15);
    }

    #[test]
    fn sorted_and_reversed_inputs() {
        let sorted = PiecewiseConstantSignal::uniform(vec![-1.0, 0.0, 0.5, 4.0]).unwrap();
        assert_eq!(isotonic_fit(&sorted).u, sorted);
        assert_eq!(isotonic_fit(&sorted).residual, 0.0);
        assert_eq!(pava_oracle(&sorted), sorted);

        let reversed = PiecewiseConstantSignal::uniform(vec![4.0, 0.5, 0.0, -1.0]).unwrap();
        let fit = isotonic_fit(&reversed);
        assert!(fit.u.is_constant());
        assert!((fit.u.values()[0] - 0.875).abs() < 1e-15);
    }

    #[test]
    fn pava_examples() {
        let pair = PiecewiseConstantSignal::uniform(vec![-1.0, -2.0]).unwrap();
        assert_eq!(pava_oracle(&pair).values(), &[-1.5]);
        let weighted = PiecewiseConstantSignal::new(vec![0.0, 1.0, 4.0], vec![3.0, 1.0]).unwrap();
        assert_eq!(pava_oracle(&weighted).values(), &[1.5]);
    }
}
