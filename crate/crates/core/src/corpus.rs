//! Random piecewise-constant signals for tests and benchmarks.

use rand::Rng;

use crate::signal::PiecewiseConstantSignal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// Unit cells on `[0, n]`.
    Uniform,
    /// Cell lengths drawn uniformly from `[0.25, 2]`.
    Jittered,
}

/// A signal with `pieces` cells and values uniform in `[−10, 10]`.
pub fn random_signal<R: Rng + ?Sized>(
    rng: &mut R,
    pieces: usize,
    grid: GridKind,
) -> PiecewiseConstantSignal {
    assert!(pieces > 0, "a signal needs at least one piece");
    let values: Vec<f64> = (0..pieces)
        .map(|_| rng.random_range(-10.0..=10.0))
        .collect();
    match grid {
        GridKind::Uniform => PiecewiseConstantSignal::uniform(values),
        GridKind::Jittered => {
            let mut bps = Vec::with_capacity(pieces + 1);
            let mut x = 0.0;
            bps.push(x);
            for _ in 0..pieces {
                x += rng.random_range(0.25..=2.0);
                bps.push(x);
            }
            PiecewiseConstantSignal::new(bps, values)
        }
    }
    .expect("generated grid is valid")
}

/// Sample from the log-uniform distribution on `[lo, hi]`, `0 < lo ≤ hi`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    assert!(lo > 0.0 && lo <= hi, "need 0 < lo <= hi");
    if lo == hi {
        return lo;
    }
    (rng.random_range(lo.ln()..=hi.ln())).exp().clamp(lo, hi)
}
