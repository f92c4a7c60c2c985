//! Bounded scalar maximisation: a uniform grid to locate the best cell,
//! then golden-section refinement inside the neighbouring cells.

use crate::error::{invalid, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub grid_points: usize,
    /// Golden-section stops once the bracket is narrower than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { grid_points: 64, tolerance: 1e-4, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
    /// Every `(x, f(x))` evaluated, grid first, in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

/// Maximises `f` over the open interval `(lo, hi)`; `f` is never evaluated
/// at the endpoints. The result is the best point seen, so it dominates
/// every grid sample even when `f` is not unimodal.
pub fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, settings: SearchSettings) -> Result<Maximum> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid(format!("empty search interval ({lo}, {hi})")));
    }
    if settings.grid_points == 0 || !(settings.tolerance > 0.0) {
        return Err(invalid("search needs at least one grid point and a positive tolerance"));
    }
    let n = settings.grid_points;
    let step = (hi - lo) / (n + 1) as f64;
    let mut trace: Vec<(f64, f64)> = (1..=n)
        .map(|i| {
            let x = lo + step * i as f64;
            (x, f(x))
        })
        .collect();

    let best = best_index(&trace);
    let mut a = if best == 0 { lo } else { trace[best - 1].0 };
    let mut b = if best + 1 == n { hi } else { trace[best + 1].0 };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    trace.push((c, fc));
    trace.push((d, fd));
    for _ in 0..settings.max_iterations {
        if b - a <= settings.tolerance {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            trace.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            trace.push((d, fd));
        }
    }

    let (argmax, value) = trace[best_index(&trace)];
    Ok(Maximum { argmax, value, trace })
}

fn best_index(samples: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, &(_, v)) in samples.iter().enumerate() {
        if v > samples[best].1 || samples[best].1.is_nan() {
            best = i;
        }
    }
    best
}
