//! Numerical search for the state with at most `L` quanta that maximizes `|f|`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::oscillator::{make_fock, make_on, EvolutionTime, StateVector};
use crate::pure::FisherForms;

/// Iteration cap for each local search.
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationReport {
    pub best_state: StateVector,
    pub best_f: f64,
    /// Local searches run: ON, top Fock, then the random starts.
    pub restarts_used: usize,
    /// Whether the search that produced `best_f` met the tolerance.
    pub converged: bool,
    /// `max f - min f` over all local optima found.
    pub spread: f64,
}

#[derive(Debug, Clone)]
struct LocalResult {
    coeffs: Vec<Complex64>,
    f: f64,
    converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn normalize(c: &mut [Complex64]) {
    let n = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x /= n);
}

/// Tangent part of the Euclidean gradient at a point of the unit sphere.
fn project(c: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
    let radial = dot(c, g);
    g.iter().zip(c).map(|(g, c)| g - c * radial).collect()
}

/// Projected gradient descent on `f` with Barzilai-Borwein steps and Armijo
/// backtracking.
fn descend(forms: &FisherForms, start: Vec<Complex64>, tol: f64) -> LocalResult {
    let mut c = start;
    normalize(&mut c);
    let (mut f, g) = forms.value_and_gradient(&c);
    let mut rg = project(&c, &g);
    let scale = forms.quadratic.norm() + forms.bracket.norm().powi(2) + 1.0;
    let mut step = 1.0 / scale;

    for _ in 0..MAX_ITERATIONS {
        let slope = dot(&rg, &rg);
        if slope.sqrt() < 1e-14 * scale {
            return LocalResult { coeffs: c, f, converged: true };
        }
        let mut alpha = step;
        let (next, f_next, g_next) = loop {
            let mut trial: Vec<Complex64> =
                c.iter().zip(&rg).map(|(x, d)| x - d * alpha).collect();
            normalize(&mut trial);
            let (ft, gt) = forms.value_and_gradient(&trial);
            if ft <= f - 1e-4 * alpha * slope || alpha < 1e-16 / scale {
                break (trial, ft, gt);
            }
            alpha *= 0.5;
        };
        let rg_next = project(&next, &g_next);
        let s: Vec<Complex64> = next.iter().zip(&c).map(|(a, b)| a - b).collect();
        let y: Vec<Complex64> = rg_next.iter().zip(&rg).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y).abs();
        step = if sy > 0.0 {
            (dot(&s, &s) / sy).clamp(1e-6 / scale, 1e6 / scale)
        } else {
            1.0 / scale
        };
        let change = (f - f_next).abs();
        c = next;
        f = f_next;
        rg = rg_next;
        if change < tol * f.abs().max(1.0) {
            return LocalResult { coeffs: c, f, converged: true };
        }
    }
    LocalResult { coeffs: c, f, converged: false }
}

fn random_start(dim: usize, seed: u64, index: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect()
}

/// Multi-start maximization of `|f|` over normalized states on levels `0..=L`.
///
/// Starts are the ON state, `|L>`, and `restarts` Gaussian random points drawn
/// from a ChaCha stream per start, so the result depends only on `seed`.
pub fn optimize_state(
    max_quanta: usize,
    tau: EvolutionTime,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> Result<OptimizationReport> {
    let dim = max_quanta + 1;
    let forms = FisherForms::new(dim, tau.value());

    let mut starts: Vec<Vec<Complex64>> = Vec::with_capacity(restarts + 2);
    if max_quanta >= 1 {
        starts.push(make_on(max_quanta, 0.0, dim)?.into_coeffs());
    }
    starts.push(make_fock(max_quanta, dim)?.into_coeffs());
    if max_quanta >= 1 {
        starts.extend((0..restarts as u64).map(|k| random_start(dim, seed, k)));
    }

    let results: Vec<LocalResult> = starts
        .into_par_iter()
        .map(|s| descend(&forms, s, tol))
        .collect();

    // First minimum in start order keeps the choice independent of scheduling.
    let best = results
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.f < results[best].f { i } else { best });
    let lo = results.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    let hi = results.iter().map(|r| r.f).fold(f64::NEG_INFINITY, f64::max);
    let winner = &results[best];

    Ok(OptimizationReport {
        best_state: StateVector::new(winner.coeffs.clone())?.canonical_phase(),
        best_f: winner.f.min(0.0),
        restarts_used: results.len(),
        converged: winner.converged,
        spread: hi - lo,
    })
}

/// Long-time limit `|f| -> tau^2 (<n^2> - <n>^2)`.
pub fn variance_certificate(state: &StateVector, tau_large: f64) -> f64 {
    tau_large * tau_large * state.number_variance()
}
