//! Fisher coefficient `f` for pure states.
//!
//! For a pure initial state the fidelity between the bare and the loaded
//! evolution is `F = 1 + eps^2 f + O(eps^3)`, so the Bures distance grows as
//! `eps |f|^{1/2}` and the minimal resolvable relative mass after `N` runs is
//! `1 / (sqrt(N) |f|^{1/2})`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{richardson, Extrapolated};
use crate::oscillator::{
    evolve_with, EvolutionTime, Perturbation, StateVector, Truncation, NORM_TOL,
};

/// Positive `f` up to this size is treated as round-off.
pub const FISHER_ROUNDOFF: f64 = 1e-12;

/// Outcome of a sensitivity calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    /// Fisher coefficient (non-positive).
    pub f_value: f64,
    pub tau: f64,
    pub n_measurements: u64,
    /// `dM_min / M`; `+inf` when the state carries no information.
    pub delta_m_over_m: f64,
}

impl SensitivityResult {
    pub fn from_fisher(f: f64, tau: EvolutionTime, n_measurements: u64) -> Result<Self> {
        Ok(SensitivityResult {
            f_value: f.min(0.0),
            tau: tau.value(),
            n_measurements,
            delta_m_over_m: min_mass_ratio(f, n_measurements)?,
        })
    }

    pub fn is_unbounded(&self) -> bool {
        self.delta_m_over_m.is_infinite()
    }

    /// `M / dM_min`, zero when unbounded.
    pub fn inverse(&self) -> f64 {
        self.delta_m_over_m.recip()
    }
}

/// `dM_min / M = 1 / (sqrt(N) |f|^{1/2})`, or `+inf` for `f = 0`.
pub fn min_mass_ratio(f: f64, n_measurements: u64) -> Result<f64> {
    if n_measurements == 0 {
        return Err(Error::OutOfRange {
            what: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    if f.is_nan() {
        return Err(Error::NonFinite(f));
    }
    if f > FISHER_ROUNDOFF {
        return Err(Error::PositiveFisher(f));
    }
    if f >= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / ((n_measurements as f64).sqrt() * (-f).sqrt()))
}

/// Fisher coefficient of a normalized state at time `tau`, in `O(dim)`.
pub fn fisher_f(state: &StateVector, tau: EvolutionTime) -> f64 {
    fisher_terms(state.coeffs(), tau.value())
}

/// [`fisher_f`] on raw coefficients, rejecting unnormalized input.
pub fn fisher_f_raw(coeffs: &[Complex64], tau: EvolutionTime) -> Result<f64> {
    let norm_sq: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if coeffs.is_empty() || !((norm_sq - 1.0).abs() <= NORM_TOL) {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(fisher_terms(coeffs, tau.value()))
}

fn fisher_terms(c: &[Complex64], tau: f64) -> f64 {
    let dim = c.len();
    let at = |m: usize| c.get(m).copied().unwrap_or_default();
    let e2 = Complex64::from_polar(1.0, 2.0 * tau);
    let one_minus = Complex64::new(1.0, 0.0) - e2;
    let sin2 = tau.sin().powi(2);

    // Bracket: coherence part plus tau <m>.
    let mut bracket_coh = 0.0;
    let mut mean = 0.0;
    // Second sum: diagonal, Delta = 2 and Delta = 4 parts.
    let mut diag_periodic = 0.0;
    let mut delta2 = 0.0;
    let mut delta4 = 0.0;
    for m in 0..dim {
        let mf = m as f64;
        let cm = c[m];
        let p = cm.norm_sqr();
        mean += mf * p;
        diag_periodic += (mf * mf + mf + 1.0) * sin2 / 2.0 * p;
        let c2 = at(m + 2);
        if c2 != Complex64::default() {
            let w = ((mf + 1.0) * (mf + 2.0)).sqrt();
            bracket_coh += 0.5 * w * (cm * c2.conj() * (e2 - 1.0)).im;
            delta2 += ((mf + 1.0).powi(3) * (mf + 2.0)).sqrt() * tau * (one_minus * c2.conj() * cm).im;
        }
        let c4 = at(m + 4);
        if c4 != Complex64::default() {
            let w = ((mf + 1.0) * (mf + 2.0) * (mf + 3.0) * (mf + 4.0)).sqrt();
            delta4 += w / 8.0 * (one_minus * one_minus * cm * c4.conj()).re;
        }
    }
    // The secular tau^2 (<m>^2 - <m^2>) part is formed from a centered variance
    // so the two tau^2-sized sums never cancel numerically.
    let variance: f64 = c
        .iter()
        .enumerate()
        .map(|(m, cm)| (m as f64 - mean).powi(2) * cm.norm_sqr())
        .sum();
    let bracket_sq_minus_m2 =
        bracket_coh * bracket_coh + 2.0 * bracket_coh * tau * mean - tau * tau * variance;
    bracket_sq_minus_m2 - diag_periodic + delta2 + delta4
}

/// Fock state `|n>`: `-(n^2 + n + 1) sin^2(tau) / 2`.
pub fn f_fock(n: usize, tau: f64) -> f64 {
    let n = n as f64;
    -0.5 * (n * n + n + 1.0) * tau.sin().powi(2)
}

/// `(|n> + |n+2>)/sqrt(2)`.
pub fn f_cat_s1(n: usize, tau: f64) -> f64 {
    let n = n as f64;
    ((n + 1.0) * (n + 2.0) * (2.0 * tau).sin().powi(2)
        - 8.0 * (n * n + 3.0 * n + 4.0) * tau.sin().powi(2))
        / 16.0
        - tau * tau
}

/// `(|n> + |n+4>)/sqrt(2)`.
pub fn f_cat_s2(n: usize, tau: f64) -> f64 {
    let n = n as f64;
    let s2 = tau.sin().powi(2);
    let w = ((n + 1.0) * (n + 2.0) * (n + 3.0) * (n + 4.0)).sqrt();
    -0.25 * (2.0 * (n * n + 5.0 * n + 11.0) * s2 + w * (2.0 * tau).cos() * s2) - 4.0 * tau * tau
}

/// Coherent state with real amplitude `alpha`.
pub fn f_coherent(alpha: f64, tau: f64) -> f64 {
    let a2 = alpha * alpha;
    -(0.5 + a2) * tau.sin().powi(2) - a2 * tau * (tau + (2.0 * tau).sin())
}

/// Long-time form `-tau^2 L^2 / 4` for the ON state; exact at `tau = k pi`.
pub fn f_on_asymptotic(max_quanta: usize, tau: f64) -> f64 {
    let l = max_quanta as f64;
    -tau * tau * l * l / 4.0
}

/// `|<psi(t)|psi~(t)>|^2` at finite `eps`, by explicit propagation in the
/// loaded frame.
pub fn fidelity_finite_eps(
    state: &StateVector,
    tau: EvolutionTime,
    perturbation: Perturbation,
) -> Result<f64> {
    let (_, loaded) = evolve_with(state, tau, perturbation, Truncation::default())?;
    let t = tau.value();
    let overlap: Complex64 = state
        .coeffs()
        .iter()
        .zip(&loaded)
        .enumerate()
        .map(|(n, (c, l))| (c * Complex64::from_polar(1.0, -(n as f64 + 0.5) * t)).conj() * l)
        .sum();
    Ok(overlap.norm_sqr())
}

/// `(F(eps) - 1) / eps^2` extrapolated to `eps -> 0` over `eps0, eps0/2, ...`.
pub fn extrapolate_fisher(
    state: &StateVector,
    tau: EvolutionTime,
    eps0: f64,
    levels: usize,
) -> Result<Extrapolated> {
    let mut failure = None;
    let est = richardson(
        |eps| match Perturbation::new(eps).and_then(|p| fidelity_finite_eps(state, tau, p)) {
            Ok(f) => (f - 1.0) / (eps * eps),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        eps0,
        levels,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// `f` written as `(c^+ G c)^2 - c^+ H c` with Hermitian `G`, `H`.
///
/// Same content as [`fisher_f`], arranged for gradient-based optimization.
#[derive(Debug, Clone)]
pub struct FisherForms {
    pub bracket: DMatrix<Complex64>,
    pub quadratic: DMatrix<Complex64>,
}

impl FisherForms {
    pub fn new(dim: usize, tau: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let mut g = DMatrix::from_element(dim, dim, zero);
        let mut h = DMatrix::from_element(dim, dim, zero);
        let e2 = Complex64::from_polar(1.0, 2.0 * tau);
        let one_minus = Complex64::new(1.0, 0.0) - e2;
        let two_i = Complex64::new(0.0, 2.0);
        let sin2 = tau.sin().powi(2);
        for m in 0..dim {
            let mf = m as f64;
            g[(m, m)] += Complex64::new(tau * mf, 0.0);
            h[(m, m)] += Complex64::new((mf * mf + mf + 1.0) * sin2 / 2.0 + mf * mf * tau * tau, 0.0);
            if m + 2 < dim {
                // Im(a c_m c*_{m+2}) = c^+ (a / 2i at (m+2, m) + h.c.) c
                let a = 0.5 * ((mf + 1.0) * (mf + 2.0)).sqrt() * (e2 - 1.0) / two_i;
                g[(m + 2, m)] += a;
                g[(m, m + 2)] += a.conj();
                let b = -((mf + 1.0).powi(3) * (mf + 2.0)).sqrt() * tau * one_minus / two_i;
                h[(m + 2, m)] += b;
                h[(m, m + 2)] += b.conj();
            }
            if m + 4 < dim {
                let w = ((mf + 1.0) * (mf + 2.0) * (mf + 3.0) * (mf + 4.0)).sqrt();
                let d = -w / 16.0 * one_minus * one_minus;
                h[(m + 4, m)] += d;
                h[(m, m + 4)] += d.conj();
            }
        }
        FisherForms {
            bracket: g,
            quadratic: h,
        }
    }

    pub fn dim(&self) -> usize {
        self.bracket.nrows()
    }

    fn form(a: &DMatrix<Complex64>, c: &[Complex64]) -> (f64, Vec<Complex64>) {
        let ac: Vec<Complex64> = (0..c.len())
            .map(|i| (0..c.len()).map(|j| a[(i, j)] * c[j]).sum())
            .collect();
        let value = c.iter().zip(&ac).map(|(x, y)| (x.conj() * y).re).sum();
        (value, ac)
    }

    /// `f(c)` for a normalized coefficient vector.
    pub fn value(&self, c: &[Complex64]) -> f64 {
        self.value_and_gradient(c).0
    }

    /// `f(c)` and its gradient with respect to `(Re c, Im c)`, packed as a
    /// complex vector.
    pub fn value_and_gradient(&self, c: &[Complex64]) -> (f64, Vec<Complex64>) {
        let (b, gc) = Self::form(&self.bracket, c);
        let (s, hc) = Self::form(&self.quadratic, c);
        let grad = gc
            .iter()
            .zip(&hc)
            .map(|(g, h)| 2.0 * (2.0 * b * g - h))
            .collect();
        (b * b - s, grad)
    }
}
