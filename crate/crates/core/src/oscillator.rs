//! Fock-space representation of the oscillator, probe-state constructors and
//! the exact overlap between the eigenbases of the bare and mass-loaded
//! oscillator.
//!
//! Everything here is dimensionless: `hbar = omega = 1`, lengths in units of
//! the oscillator length of the unperturbed oscillator.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{factorial_small, ln_factorials};

/// Tolerance on `sum |c_n|^2 - 1` for a normalized state.
pub const NORM_TOL: f64 = 1e-12;

/// A pure state as complex amplitudes in the unperturbed Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    coeffs: Vec<Complex64>,
}

impl StateVector {
    /// Normalizes `raw`, keeping relative phases.
    pub fn new(raw: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
        if raw.is_empty() || norm_sq == 0.0 {
            return Err(Error::ZeroVector);
        }
        if !norm_sq.is_finite() {
            return Err(Error::OutOfRange {
                what: "norm",
                value: norm_sq,
                expected: "finite coefficients",
            });
        }
        let scale = norm_sq.sqrt().recip();
        let mut state = StateVector {
            coeffs: raw.into_iter().map(|c| c * scale).collect(),
        };
        // One more pass takes the residual down to a few ulps.
        let resid: f64 = state.coeffs.iter().map(|c| c.norm_sqr()).sum();
        let fix = resid.sqrt().recip();
        state.coeffs.iter_mut().for_each(|c| *c *= fix);
        Ok(state)
    }

    /// Accepts coefficients only if they are already normalized.
    pub fn from_normalized(coeffs: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if coeffs.is_empty() || !((norm_sq - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(StateVector { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Largest Fock index with a nonzero amplitude.
    pub fn top_index(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.norm_sqr() > 0.0)
            .unwrap_or(0)
    }

    /// Zero-pads (or trims trailing zeros) to `dim` levels.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        if dim <= self.top_index() {
            return Err(Error::OutOfRange {
                what: "dim",
                value: dim as f64,
                expected: "larger than the top occupied Fock index",
            });
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(dim, Complex64::new(0.0, 0.0));
        Ok(StateVector { coeffs })
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.coeffs.iter().map(|c| c.norm_sqr())
    }

    /// Mean excitation number.
    pub fn mean_n(&self) -> f64 {
        self.probabilities()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Excitation-number variance.
    pub fn number_variance(&self) -> f64 {
        let mean = self.mean_n();
        self.probabilities()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(2) * p)
            .sum()
    }

    /// Inner product `<self|other>` over the common support.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            acc += a.conj() * b;
        }
        acc
    }

    /// Free evolution with the unperturbed Hamiltonian for dimensionless time
    /// `theta`, dropping the zero-point phase: `c_n -> exp(-i n theta) c_n`.
    pub fn rotated(&self, theta: f64) -> StateVector {
        StateVector {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| c * Complex64::from_polar(1.0, -(n as f64) * theta))
                .collect(),
        }
    }

    /// Global-phase representative whose first nonzero amplitude is real and
    /// positive.
    pub fn canonical_phase(&self) -> StateVector {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let Some(lead) = self.coeffs.iter().find(|c| c.norm() > 1e-12 * scale) else {
            return self.clone();
        };
        let phase = Complex64::from_polar(1.0, -lead.arg());
        StateVector {
            coeffs: self.coeffs.iter().map(|c| c * phase).collect(),
        }
    }
}

/// Normalized copy of `raw`.
pub fn make_state(raw: Vec<Complex64>) -> Result<StateVector> {
    StateVector::new(raw)
}

fn basis(dim: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); dim]
}

/// Fock state `|n>` in `dim` levels.
pub fn make_fock(n: usize, dim: usize) -> Result<StateVector> {
    if n >= dim {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as f64,
            expected: "n < dim",
        });
    }
    let mut c = basis(dim);
    c[n] = Complex64::new(1.0, 0.0);
    Ok(StateVector { coeffs: c })
}

/// `(|0> + e^{i phi} |L>)/sqrt(2)`.
pub fn make_on(max_quanta: usize, phi: f64, dim: usize) -> Result<StateVector> {
    if max_quanta == 0 {
        return Err(Error::OutOfRange {
            what: "L",
            value: 0.0,
            expected: "L >= 1",
        });
    }
    if dim <= max_quanta {
        return Err(Error::OutOfRange {
            what: "dim",
            value: dim as f64,
            expected: "dim > L",
        });
    }
    let mut c = basis(dim);
    c[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    c[max_quanta] = Complex64::from_polar(FRAC_1_SQRT_2, phi);
    Ok(StateVector { coeffs: c })
}

fn make_pair(n: usize, gap: usize) -> StateVector {
    let mut c = basis(n + gap + 1);
    c[n] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    c[n + gap] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector { coeffs: c }
}

/// `(|n> + |n+2>)/sqrt(2)`.
pub fn make_cat_s1(n: usize) -> StateVector {
    make_pair(n, 2)
}

/// `(|n> + |n+4>)/sqrt(2)`.
pub fn make_cat_s2(n: usize) -> StateVector {
    make_pair(n, 4)
}

/// Coherent state with real amplitude `alpha`, truncated at the smallest
/// dimension whose discarded probability is below `tail_tol`, then
/// renormalized.
pub fn make_coherent(alpha: f64, tail_tol: f64, max_dim: usize) -> Result<StateVector> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            expected: "finite and >= 0",
        });
    }
    if !(tail_tol > 0.0) {
        return Err(Error::OutOfRange {
            what: "tail_tol",
            value: tail_tol,
            expected: "> 0",
        });
    }
    if alpha == 0.0 {
        return make_fock(0, 1);
    }
    let mean = alpha * alpha;
    // Far enough out that the Poisson weights are below any usable tolerance.
    let scan = (mean + 40.0 * alpha + 60.0).ceil() as usize;
    let ln_fact = ln_factorials(scan);
    let ln_alpha = alpha.ln();
    let ln_amp: Vec<f64> = (0..=scan)
        .map(|n| -0.5 * mean + n as f64 * ln_alpha - 0.5 * ln_fact[n])
        .collect();
    let probs: Vec<f64> = ln_amp.iter().map(|a| (2.0 * a).exp()).collect();

    // tail[d] = sum_{n >= d} p_n, summed from the top for accuracy.
    let mut tail = vec![0.0; scan + 2];
    for n in (0..=scan).rev() {
        tail[n] = tail[n + 1] + probs[n];
    }
    let required = (1..=scan + 1)
        .find(|&d| tail[d] < tail_tol)
        .unwrap_or(scan + 1);
    if required > max_dim {
        return Err(Error::Truncation {
            max_dim,
            required,
            achieved: tail[max_dim.min(scan + 1)],
            tol: tail_tol,
        });
    }
    let coeffs = ln_amp[..required]
        .iter()
        .map(|a| Complex64::new(a.exp(), 0.0))
        .collect();
    StateVector::new(coeffs)
}

/// Dimensionless evolution time `tau = omega t`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EvolutionTime(f64);

impl EvolutionTime {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::OutOfRange {
                what: "tau",
                value: tau,
                expected: "finite and >= 0",
            });
        }
        Ok(EvolutionTime(tau))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Relative frequency shift caused by an adsorbed mass:
/// `omega~ = omega (1 - eps)` with `eps = dM / (2M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    epsilon: f64,
}

impl Perturbation {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: epsilon,
                expected: "0 <= eps < 1 (added mass only)",
            });
        }
        Ok(Perturbation { epsilon })
    }

    /// Perturbation equivalent to the relative added mass `dM/M`.
    pub fn from_mass_ratio(delta_m_over_m: f64) -> Result<Self> {
        Self::new(0.5 * delta_m_over_m)
    }

    pub fn epsilon(self) -> f64 {
        self.epsilon
    }

    /// `omega~ / omega`.
    pub fn frequency_ratio(self) -> f64 {
        1.0 - self.epsilon
    }

    /// `(omega - omega~)/(omega + omega~)`.
    pub fn y(self) -> f64 {
        overlap_params(self.frequency_ratio()).0
    }

    /// `2 sqrt(omega omega~)/(omega + omega~)`.
    pub fn q(self) -> f64 {
        overlap_params(self.frequency_ratio()).1
    }
}

fn overlap_params(ratio: f64) -> (f64, f64) {
    let y = (1.0 - ratio) / (1.0 + ratio);
    let q = 2.0 * ratio.sqrt() / (1.0 + ratio);
    (y, q)
}

/// Overlap `<m; omega~ | n; omega>` between eigenstates of the loaded and the
/// bare oscillator.
pub fn overlap_element(m: usize, n: usize, perturbation: Perturbation) -> f64 {
    overlap_element_for_ratio(m, n, perturbation.frequency_ratio())
}

/// [`overlap_element`] for an arbitrary frequency ratio `omega~/omega > 0`.
///
/// Ratios above one describe the reverse comparison; the element then obeys
/// `R_ratio(m, n) = R_{1/ratio}(n, m)`.
pub fn overlap_element_for_ratio(m: usize, n: usize, ratio: f64) -> f64 {
    assert!(ratio > 0.0 && ratio.is_finite(), "frequency ratio must be positive");
    let mut cache = LnFactorialCache::new(m.max(n));
    overlap_with(&mut cache, m, n, ratio)
}

struct LnFactorialCache {
    ln_fact: Vec<f64>,
}

impl LnFactorialCache {
    fn new(max: usize) -> Self {
        LnFactorialCache {
            ln_fact: ln_factorials(max.max(1)),
        }
    }
}

/// Direct factorials are exact up to 20!; beyond that everything is summed in
/// log space.
const DIRECT_FACTORIAL_LIMIT: usize = 20;

fn overlap_with(cache: &mut LnFactorialCache, m: usize, n: usize, ratio: f64) -> f64 {
    if (m + n) % 2 == 1 {
        return 0.0;
    }
    let (y, q) = overlap_params(ratio);
    if y == 0.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    if m.max(n) <= DIRECT_FACTORIAL_LIMIT {
        overlap_direct(m, n, y, q)
    } else {
        overlap_log(&cache.ln_fact, m, n, y, q)
    }
}

fn parity_sign(m: usize, r: usize) -> f64 {
    if ((m - r) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn overlap_direct(m: usize, n: usize, y: f64, q: f64) -> f64 {
    let small = m.min(n);
    let pref =
        (f64::powi(2.0, -((m + n) as i32)) * q * factorial_small(m) * factorial_small(n)).sqrt();
    let sum: f64 = (small % 2..=small)
        .step_by(2)
        .map(|r| {
            parity_sign(m, r) * (2.0 * q).powi(r as i32) / factorial_small(r)
                * y.powi(((m + n - 2 * r) / 2) as i32)
                / (factorial_small((n - r) / 2) * factorial_small((m - r) / 2))
        })
        .sum();
    pref * sum
}

fn overlap_log(lf: &[f64], m: usize, n: usize, y: f64, q: f64) -> f64 {
    let small = m.min(n);
    let ln_pref = 0.5 * (-((m + n) as f64) * std::f64::consts::LN_2 + q.ln() + lf[m] + lf[n]);
    let ln_2q = (2.0 * q).ln();
    (small % 2..=small)
        .step_by(2)
        .map(|r| {
            let ln_mag = ln_pref + r as f64 * ln_2q - lf[r] - lf[(n - r) / 2] - lf[(m - r) / 2];
            parity_sign(m, r) * ln_mag.exp() * y.powi(((m + n - 2 * r) / 2) as i32)
        })
        .sum()
}

/// Real `dim x dim` matrix of overlaps, entry `(m, n) = <m; omega~ | n; omega>`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    entries: DMatrix<f64>,
    perturbation: Perturbation,
}

impl OverlapMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn perturbation(&self) -> Perturbation {
        self.perturbation
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[(m, n)]
    }
}

pub fn overlap_matrix(perturbation: Perturbation, dim: usize) -> OverlapMatrix {
    let ratio = perturbation.frequency_ratio();
    let mut cache = LnFactorialCache::new(dim);
    let mut entries = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        for n in 0..dim {
            entries[(m, n)] = overlap_with(&mut cache, m, n, ratio);
        }
    }
    OverlapMatrix {
        entries,
        perturbation,
    }
}

/// Truncation policy for propagation in the perturbed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Minimum number of padding levels above the top occupied level.
    pub min_pad: usize,
    /// Largest tolerated norm (or trace) deficit.
    pub tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            min_pad: 16,
            tol: 1e-10,
        }
    }
}

impl Truncation {
    /// Working dimension for a state supported on `0..support` levels.
    pub fn working_dim(&self, support: usize, perturbation: Perturbation) -> usize {
        let scaled = (perturbation.epsilon() * support as f64).ceil() as usize;
        support + self.min_pad.max(4 * scaled)
    }
}

/// Evolution under the loaded Hamiltonian, expressed in the bare Fock basis.
///
/// Holds the overlap matrix so repeated evaluations at different times reuse
/// it.
#[derive(Debug, Clone)]
pub struct PerturbedPropagator {
    overlap: OverlapMatrix,
}

impl PerturbedPropagator {
    pub fn new(perturbation: Perturbation, dim: usize) -> Self {
        PerturbedPropagator {
            overlap: overlap_matrix(perturbation, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.overlap.dim()
    }

    pub fn perturbation(&self) -> Perturbation {
        self.overlap.perturbation
    }

    fn perturbed_phases(&self, tau: f64) -> Vec<Complex64> {
        let w = self.perturbation().frequency_ratio();
        (0..self.dim())
            .map(|k| Complex64::from_polar(1.0, -w * (k as f64 + 0.5) * tau))
            .collect()
    }

    /// `R^T diag(exp(-i E~_k tau)) R c` for `c` zero-padded to the working dim.
    pub fn apply(&self, coeffs: &[Complex64], tau: f64) -> Vec<Complex64> {
        let dim = self.dim();
        assert!(coeffs.len() <= dim, "state does not fit the propagator");
        let r = &self.overlap.entries;
        let phases = self.perturbed_phases(tau);
        let mut mid = vec![Complex64::new(0.0, 0.0); dim];
        for (m, slot) in mid.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, c) in coeffs.iter().enumerate() {
                acc += c * r[(m, k)];
            }
            *slot = acc * phases[m];
        }
        (0..dim)
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, v) in mid.iter().enumerate() {
                    acc += v * r[(m, n)];
                }
                acc
            })
            .collect()
    }

    /// Matrix of `exp(-i H~ tau)` in the bare basis.
    pub fn propagator(&self, tau: f64) -> DMatrix<Complex64> {
        let dim = self.dim();
        let r = &self.overlap.entries;
        let phases = self.perturbed_phases(tau);
        let scaled = DMatrix::from_fn(dim, dim, |m, n| phases[m] * r[(m, n)]);
        let rt = r.transpose().map(|v| Complex64::new(v, 0.0));
        rt * scaled
    }

    /// `U(omega, tau)^dagger exp(-i H~ tau)`: the loaded evolution seen from the
    /// frame co-rotating with the bare oscillator.
    pub fn echo(&self, tau: f64) -> DMatrix<Complex64> {
        let mut v = self.propagator(tau);
        for n in 0..self.dim() {
            let back = Complex64::from_polar(1.0, (n as f64 + 0.5) * tau);
            v.row_mut(n).iter_mut().for_each(|x| *x *= back);
        }
        v
    }
}

/// Coefficients of `exp(-i H~ tau)|psi>` in the bare basis, on the padded
/// working dimension.
pub fn evolve_in_perturbed_frame(
    state: &StateVector,
    tau: EvolutionTime,
    perturbation: Perturbation,
) -> Result<StateVector> {
    evolve_with(state, tau, perturbation, Truncation::default()).map(|(s, _)| s)
}

/// Like [`evolve_in_perturbed_frame`] with an explicit truncation policy.
/// Also returns the raw (unrenormalized) coefficients.
pub fn evolve_with(
    state: &StateVector,
    tau: EvolutionTime,
    perturbation: Perturbation,
    truncation: Truncation,
) -> Result<(StateVector, Vec<Complex64>)> {
    let support = state.top_index() + 1;
    let dim = truncation.working_dim(support, perturbation);
    let prop = PerturbedPropagator::new(perturbation, dim);
    let raw = prop.apply(&state.coeffs()[..support], tau.value());
    let norm_sq: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    let deficit = (1.0 - norm_sq).abs();
    if deficit > truncation.tol {
        return Err(Error::NormLoss { deficit, dim });
    }
    let evolved = StateVector::new(raw.clone())?;
    Ok((evolved, raw))
}
