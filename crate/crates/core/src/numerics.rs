//! Small numerical helpers shared across modules.

/// `ln(n!)` for all `n <= max`, by cumulative summation.
pub(crate) fn ln_factorials(max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// Exact `n!` for `n <= 20` (every such value is representable in an f64).
pub(crate) fn factorial_small(n: usize) -> f64 {
    debug_assert!(n <= 20);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Result of a Richardson extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    /// Difference between the two highest-order estimates.
    pub error: f64,
    /// Raw samples `D(h0)`, `D(h0/2)`, ... (first two only).
    pub coarse: f64,
    pub fine: f64,
}

/// Richardson extrapolation of `sample(h)` to `h -> 0` over the steps
/// `h0, h0/2, ..., h0/2^(levels-1)`, assuming an error expansion in
/// integer powers `h, h^2, ...`.
pub fn richardson<F>(mut sample: F, h0: f64, levels: usize) -> Extrapolated
where
    F: FnMut(f64) -> f64,
{
    let levels = levels.max(2);
    let raw: Vec<f64> = (0..levels)
        .map(|i| sample(h0 / f64::powi(2.0, i as i32)))
        .collect();
    richardson_table(&raw)
}

/// Same as [`richardson`] for samples already evaluated at halving steps.
pub fn richardson_table(raw: &[f64]) -> Extrapolated {
    assert!(raw.len() >= 2, "need at least two samples");
    let mut prev: Vec<f64> = raw.to_vec();
    let mut last_diag = vec![raw[0]];
    let mut k = 1;
    while prev.len() > 1 {
        let factor = f64::powi(2.0, k) - 1.0;
        let next: Vec<f64> = prev
            .windows(2)
            .map(|w| w[1] + (w[1] - w[0]) / factor)
            .collect();
        last_diag.push(next[next.len() - 1]);
        prev = next;
        k += 1;
    }
    let n = last_diag.len();
    Extrapolated {
        value: last_diag[n - 1],
        error: (last_diag[n - 1] - last_diag[n - 2]).abs(),
        coarse: raw[0],
        fine: raw[1],
    }
}
