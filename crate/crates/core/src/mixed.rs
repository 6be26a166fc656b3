//! Mixed states: Uhlmann fidelity, Bures distance, thermal states and the
//! bounds that bracket their mass sensitivity.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{compensated_sum, richardson, richardson_table};
use crate::oscillator::{
    EvolutionTime, PerturbedPropagator, Perturbation, StateVector, Truncation,
};
use crate::pure::{min_mass_ratio, SensitivityResult};

const HERMITIAN_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace matrix on truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(r, c));
        }
        let mut dev: f64 = 0.0;
        for i in 0..r {
            for j in i..r {
                dev = dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let matrix = hermitize(&matrix);
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace(trace));
        }
        let min_eig = SymmetricEigen::new(matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -EIGEN_TOL {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Projector onto a pure state.
    pub fn from_pure(state: &StateVector) -> Self {
        let c = state.coeffs();
        DensityMatrix {
            matrix: DMatrix::from_fn(c.len(), c.len(), |i, j| c[i] * c[j].conj()),
        }
    }

    /// Diagonal mixture `sum p_n |n><n|`; weights are renormalized.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::NotPositive(
                weights.iter().copied().fold(f64::INFINITY, f64::min),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroVector);
        }
        let n = weights.len();
        Ok(DensityMatrix {
            matrix: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(weights[i] / total, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        })
    }

    /// Convex combination `sum w_k rho_k`; all parts are padded to a common dim.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts.iter().map(|(_, r)| r.dim()).max().unwrap_or(0);
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (w, r) in parts {
            let padded = r.padded(dim);
            m += padded.matrix * Complex64::new(*w / total, 0.0);
        }
        DensityMatrix::new(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Zero-padded to `dim >= self.dim()`.
    pub fn padded(&self, dim: usize) -> DensityMatrix {
        assert!(dim >= self.dim());
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        m.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.matrix);
        DensityMatrix { matrix: m }
    }

    fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    /// Expectation value of a Hermitian operator given on at least `dim` levels.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> f64 {
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * op[(j, i)];
            }
        }
        acc.re
    }

    /// `B` with `rho = B B^+`, dropping null directions.
    fn factor(&self) -> DMatrix<Complex64> {
        if self.is_diagonal() {
            let keep: Vec<usize> = (0..self.dim())
                .filter(|&i| self.matrix[(i, i)].re > 0.0)
                .collect();
            let mut b = DMatrix::from_element(self.dim(), keep.len(), Complex64::new(0.0, 0.0));
            for (col, &i) in keep.iter().enumerate() {
                b[(i, col)] = Complex64::new(self.matrix[(i, i)].re.sqrt(), 0.0);
            }
            return b;
        }
        let eig = SymmetricEigen::new(self.matrix.clone());
        // Eigenvalues at the round-off level would each add a spurious
        // singular value of order sqrt(eps_mach) to fidelities.
        let top = eig.eigenvalues.max();
        let cut = self.dim() as f64 * f64::EPSILON * top;
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&k| eig.eigenvalues[k] > cut)
            .collect();
        DMatrix::from_fn(self.dim(), keep.len(), |i, col| {
            let k = keep[col];
            eig.eigenvectors[(i, k)] * eig.eigenvalues[k].sqrt()
        })
    }
}

fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// `1 - sqrt(F)` for two density matrices. Each is factored as `B B^+` from a
/// Hermitian eigendecomposition with negative eigenvalues clipped, and
/// `sqrt(F)` is the sum of singular values of `B1^+ B2`.
pub fn one_minus_sqrt_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho1, rho2)?;
    let a = rho1.factor().adjoint() * rho2.factor();
    let sigma = a.singular_values();
    Ok(compensated_sum(
        std::iter::once(1.0).chain(sigma.iter().map(|s| -s)),
    ))
}

/// Uhlmann fidelity `F = (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2`.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    let root = 1.0 - one_minus_sqrt_fidelity(rho1, rho2)?;
    Ok(root * root)
}

/// `sqrt(2) sqrt(1 - sqrt(F))`, in `[0, sqrt(2)]`.
pub fn bures_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    let gap = one_minus_sqrt_fidelity(rho1, rho2)?.clamp(0.0, 1.0);
    Ok((2.0 * gap).sqrt())
}

/// Inverse temperature and truncation of a thermal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    /// `hbar omega / (k_B T)`.
    pub z: f64,
    pub dim: usize,
}

/// Largest discarded Boltzmann weight accepted by [`ThermalSpec`].
pub const THERMAL_TAIL_TOL: f64 = 1e-12;

impl ThermalSpec {
    pub fn new(z: f64, dim: usize) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::OutOfRange {
                what: "z",
                value: z,
                expected: "finite and > 0",
            });
        }
        let required = Self::required_dim(z);
        if dim < required {
            return Err(Error::Truncation {
                max_dim: dim,
                required,
                achieved: (-z * dim as f64).exp(),
                tol: THERMAL_TAIL_TOL,
            });
        }
        Ok(ThermalSpec { z, dim })
    }

    /// Smallest truncation whose discarded weight is below the tolerance.
    pub fn auto(z: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::OutOfRange {
                what: "z",
                value: z,
                expected: "finite and > 0",
            });
        }
        Self::new(z, Self::required_dim(z))
    }

    /// The tail `sum_{n >= d} p_n` equals `exp(-z d)`.
    pub fn required_dim(z: f64) -> usize {
        ((-THERMAL_TAIL_TOL.ln()) / z).floor() as usize + 1
    }

    pub fn tail(&self) -> f64 {
        (-self.z * self.dim as f64).exp()
    }

    /// Untruncated Boltzmann weights `p_n = e^{-n z}(1 - e^{-z})`.
    pub fn weight(&self, n: usize) -> f64 {
        (-(n as f64) * self.z).exp() * -(-self.z).exp_m1()
    }
}

pub fn thermal_state(spec: ThermalSpec) -> DensityMatrix {
    let weights: Vec<f64> = (0..spec.dim).map(|n| spec.weight(n)).collect();
    DensityMatrix::diagonal(&weights).expect("Boltzmann weights are positive")
}

/// `V rho V^+` with `V = exp(-i H~ tau)` in the bare basis, on the padded
/// working dimension.
pub fn evolve_density(
    rho: &DensityMatrix,
    tau: EvolutionTime,
    perturbation: Perturbation,
) -> Result<DensityMatrix> {
    evolve_density_with(rho, tau, perturbation, Truncation::default())
}

pub fn evolve_density_with(
    rho: &DensityMatrix,
    tau: EvolutionTime,
    perturbation: Perturbation,
    truncation: Truncation,
) -> Result<DensityMatrix> {
    let dim = truncation.working_dim(rho.dim(), perturbation);
    let prop = PerturbedPropagator::new(perturbation, dim).propagator(tau.value());
    let padded = rho.padded(dim);
    let out = &prop * padded.matrix * prop.adjoint();
    let deficit = (out.trace().re - 1.0).abs();
    if deficit > truncation.tol {
        return Err(Error::NormLoss { deficit, dim });
    }
    DensityMatrix::new(hermitize(&out))
}

/// Settings for the finite-difference Bures derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuresOptions {
    /// Coarsest step; must lie in `[1e-5, 1e-2]`.
    pub eps0: f64,
    /// Number of halvings used in the Richardson table (at least 2).
    pub levels: usize,
    pub truncation: Truncation,
}

impl Default for BuresOptions {
    fn default() -> Self {
        BuresOptions {
            eps0: 1e-3,
            levels: 3,
            truncation: Truncation::default(),
        }
    }
}

/// `d d_Bures / d eps` at `eps -> 0` with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuresEstimate {
    pub value: f64,
    pub error: f64,
}

/// Reusable evaluator of the Bures derivative for one initial state.
///
/// Only the overlap matrices depend on `eps`, so a time sweep shares them.
#[derive(Debug, Clone)]
pub struct BuresDerivative {
    factor: DMatrix<Complex64>,
    diagonal: Option<Vec<f64>>,
    propagators: Vec<PerturbedPropagator>,
    options: BuresOptions,
}

impl BuresDerivative {
    pub fn new(initial: &DensityMatrix, options: BuresOptions) -> Result<Self> {
        if !(1e-5..=1e-2).contains(&options.eps0) {
            return Err(Error::OutOfRange {
                what: "eps0",
                value: options.eps0,
                expected: "1e-5 <= eps0 <= 1e-2",
            });
        }
        let levels = options.levels.max(2);
        let top = Perturbation::new(options.eps0)?;
        let dim = options.truncation.working_dim(initial.dim(), top);
        let propagators = (0..levels)
            .map(|i| {
                let eps = options.eps0 / f64::powi(2.0, i as i32);
                Perturbation::new(eps).map(|p| PerturbedPropagator::new(p, dim))
            })
            .collect::<Result<Vec<_>>>()?;
        let diagonal = initial
            .is_diagonal()
            .then(|| (0..initial.dim()).map(|i| initial.matrix[(i, i)].re).collect());
        Ok(BuresDerivative {
            factor: initial.factor(),
            diagonal,
            propagators,
            options: BuresOptions { levels, ..options },
        })
    }

    /// Bures distance between the bare and loaded evolutions at step `level`.
    pub fn distance(&self, level: usize, tau: f64) -> Result<f64> {
        let prop = &self.propagators[level];
        let support = self.factor.nrows();
        let echo = prop.echo(tau);
        let cols = echo.columns(0, support);

        let moved = cols * &self.factor;
        let kept: f64 = moved.iter().map(|v| v.norm_sqr()).sum();
        let deficit = (1.0 - kept).abs();
        if deficit > self.options.truncation.tol {
            return Err(Error::NormLoss {
                deficit,
                dim: prop.dim(),
            });
        }

        let singular = match &self.diagonal {
            Some(p) => diagonal_singular_values(p, &echo),
            None => {
                let a = self.factor.adjoint() * moved.rows(0, support);
                a.singular_values().iter().copied().collect()
            }
        };
        let gap = compensated_sum(std::iter::once(1.0).chain(singular.iter().map(|s| -s)));
        Ok((2.0 * gap.max(0.0)).sqrt())
    }

    pub fn derivative(&self, tau: EvolutionTime) -> Result<BuresEstimate> {
        if tau.value() == 0.0 {
            return Ok(BuresEstimate { value: 0.0, error: 0.0 });
        }
        let distances = (0..self.propagators.len())
            .map(|i| self.distance(i, tau.value()))
            .collect::<Result<Vec<f64>>>()?;
        let samples: Vec<f64> = distances
            .iter()
            .zip(&self.propagators)
            .map(|(d, p)| d / p.perturbation().epsilon())
            .collect();
        let est = richardson_table(&samples);
        let value = est.value.max(0.0);
        if est.error <= 0.01 * value {
            return Ok(BuresEstimate {
                value,
                error: est.error,
            });
        }
        // No first-order information: d_Bures = O(eps^2), so the samples halve
        // with each halving of eps.
        // Distances at the round-off level of `1 - sqrt(F)` carry no signal.
        let floor = 1e-8 * (self.factor.nrows() as f64).sqrt();
        let vanishing = distances.iter().all(|d| *d < floor)
            || samples
                .windows(2)
                .all(|w| (0.35..=0.65).contains(&(w[1] / w[0])));
        if vanishing {
            return Ok(BuresEstimate {
                value: 0.0,
                error: samples[samples.len() - 1].abs(),
            });
        }
        Err(Error::NonConvergence {
            value: est.value,
            error: est.error,
        })
    }
}

/// Singular values of `sqrt(p) V sqrt(p)` for diagonal `p`, using the parity
/// block structure of the loaded propagator.
fn diagonal_singular_values(p: &[f64], echo: &DMatrix<Complex64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    for parity in 0..2 {
        let idx: Vec<usize> = (parity..p.len()).step_by(2).filter(|&i| p[i] > 0.0).collect();
        if idx.is_empty() {
            continue;
        }
        let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
            let (i, j) = (idx[a], idx[b]);
            echo[(i, j)] * (p[i] * p[j]).sqrt()
        });
        out.extend(block.singular_values().iter().copied());
    }
    out
}

/// `d d_Bures / d eps` for `initial` at time `tau`, Richardson-extrapolated
/// from `eps0, eps0/2, eps0/4`.
pub fn bures_derivative(
    initial: &DensityMatrix,
    tau: EvolutionTime,
    eps0: f64,
) -> Result<BuresEstimate> {
    let options = BuresOptions {
        eps0,
        ..BuresOptions::default()
    };
    BuresDerivative::new(initial, options)?.derivative(tau)
}

/// Sensitivity from a Bures derivative: `dM/M = 1/(sqrt(N) d d_Bures/d eps)`.
pub fn sensitivity_from_bures(
    derivative: f64,
    tau: EvolutionTime,
    n_measurements: u64,
) -> Result<SensitivityResult> {
    let f = -derivative * derivative;
    SensitivityResult::from_fisher(f, tau, n_measurements)
}

/// Exact minimal relative mass for a thermal initial state.
pub fn thermal_min_mass(
    spec: ThermalSpec,
    tau: EvolutionTime,
    n_measurements: u64,
) -> Result<SensitivityResult> {
    let rho = thermal_state(spec);
    let d = BuresDerivative::new(&rho, BuresOptions::default())?.derivative(tau)?;
    sensitivity_from_bures(d.value, tau, n_measurements)
}

/// Upper estimates of `d d_Bures/d eps` for a thermal state built from the
/// Fock-state values `|f_n|^{1/2} = |sin tau| sqrt((n^2+n+1)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityBound {
    /// `sum_n p_n |f_n|^{1/2}`.
    pub series: f64,
    /// `|sin tau| / (sqrt(2) (1 - e^{-z}))`, which dominates `series`.
    pub envelope: f64,
    /// `sqrt(sum_n p_n |f_n|)`, from convexity of the Fisher information.
    pub quadratic: f64,
}

pub fn thermal_convexity_bound(spec: ThermalSpec, tau: f64) -> ConvexityBound {
    let s = tau.sin().abs();
    let mut series = Vec::new();
    let mut second = Vec::new();
    let mut n = 0usize;
    loop {
        let p = spec.weight(n);
        let nf = n as f64;
        let fock = (nf * nf + nf + 1.0) / 2.0;
        series.push(p * fock.sqrt());
        second.push(p * fock);
        if p * fock < 1e-18 * second[0] || p == 0.0 {
            break;
        }
        n += 1;
    }
    ConvexityBound {
        series: s * compensated_sum(series),
        envelope: s / (std::f64::consts::SQRT_2 * -(-spec.z).exp_m1()),
        quadratic: s * compensated_sum(second).sqrt(),
    }
}

/// Achievable bound `dM_min/M <= 2 sqrt(2/N) sinh z / (sinh z - z)` from
/// measuring the width `x^2` of a re-thermalized oscillator.
///
/// Returns `+inf` once `sinh z - z` is lost to rounding against `sinh z`.
pub fn x2_measurement_bound(z: f64, n_measurements: u64) -> Result<f64> {
    if !(z > 0.0) || n_measurements == 0 {
        return Err(Error::OutOfRange {
            what: "z",
            value: z,
            expected: "z > 0 and N >= 1",
        });
    }
    let sinh = z.sinh();
    let excess = sinh - z;
    if !(excess > f64::EPSILON * sinh) {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * (2.0 / n_measurements as f64).sqrt() * sinh / excess)
}

/// Resolution of the generic estimator: `d eps = <dA^2>^{1/2} / (sqrt(N) |d<A>/d eps|)`,
/// returned as `dM/M = 2 d eps`. The slope is a one-sided difference
/// extrapolated over `eps0, eps0/2, eps0/4`; a slope that does not stand out
/// from its own extrapolation error yields `+inf`.
pub fn observable_cramer_rao<M, V>(
    mean_at: M,
    var_at: V,
    n_measurements: u64,
    eps0: f64,
) -> Result<f64>
where
    M: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    if n_measurements == 0 {
        return Err(Error::OutOfRange {
            what: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    let base = mean_at(0.0);
    let var = var_at(0.0);
    if !base.is_finite() || !var.is_finite() {
        return Err(Error::NonFinite(0.0));
    }
    let mut bad = None;
    let slope = richardson(
        |h| {
            let m = mean_at(h);
            if !m.is_finite() {
                bad.get_or_insert(h);
            }
            (m - base) / h
        },
        eps0,
        3,
    );
    if let Some(h) = bad {
        return Err(Error::NonFinite(h));
    }
    let floor = (1e-12 * base.abs().max(1.0)).max(slope.error);
    if slope.value.abs() <= floor {
        return Ok(f64::INFINITY);
    }
    let d_eps = var.max(0.0).sqrt() / ((n_measurements as f64).sqrt() * slope.value.abs());
    Ok(2.0 * d_eps)
}

/// Mean and variance of `x^2` (in units of the oscillator length) for an
/// oscillator that re-thermalizes at fixed spring constant after the mass
/// changes by `dM/M = 2 eps`.
pub fn x2_equilibrium_statistics(z: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let mean = move |eps: f64| {
        let stretch = (1.0 + 2.0 * eps).sqrt();
        let zz = z / stretch;
        1.0 / (2.0 * (zz / 2.0).tanh() * stretch)
    };
    let var = move |eps: f64| {
        let m = mean(eps);
        2.0 * m * m
    };
    (mean, var)
}

/// `x^2` on `dim` levels, `x = (a + a^+)/sqrt(2)`.
pub fn position_squared(dim: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for n in 0..dim {
        m[(n, n)] = Complex64::new(n as f64 + 0.5, 0.0);
        if n + 2 < dim {
            let v = Complex64::new(((n + 1) as f64 * (n + 2) as f64).sqrt() / 2.0, 0.0);
            m[(n + 2, n)] = v;
            m[(n, n + 2)] = v;
        }
    }
    m
}

/// `x^2` statistics of the state `rho(omega~, t)` as functions of `eps`.
#[derive(Debug, Clone)]
pub struct X2Dynamics {
    initial: DensityMatrix,
    tau: EvolutionTime,
}

impl X2Dynamics {
    pub fn new(initial: &DensityMatrix, tau: EvolutionTime) -> Self {
        X2Dynamics {
            initial: initial.clone(),
            tau,
        }
    }

    /// `(<x^2>, <x^4> - <x^2>^2)` after loaded evolution with shift `eps`.
    pub fn moments(&self, eps: f64) -> Result<(f64, f64)> {
        let rho = evolve_density(&self.initial, self.tau, Perturbation::new(eps)?)?;
        let x2 = position_squared(rho.dim() + 2);
        let x4 = &x2 * &x2;
        let d = rho.dim();
        let x2 = x2.view((0, 0), (d, d)).into_owned();
        let x4 = x4.view((0, 0), (d, d)).into_owned();
        let m2 = rho.expectation(&x2);
        let m4 = rho.expectation(&x4);
        Ok((m2, m4 - m2 * m2))
    }

    pub fn mean(&self, eps: f64) -> f64 {
        self.moments(eps).map(|m| m.0).unwrap_or(f64::NAN)
    }

    pub fn variance(&self, eps: f64) -> f64 {
        self.moments(eps).map(|m| m.1).unwrap_or(f64::NAN)
    }
}

/// `dM/M` for measuring `x^2` at time `tau` on the loaded evolution of `initial`.
pub fn x2_dynamic_bound(
    initial: &DensityMatrix,
    tau: EvolutionTime,
    n_measurements: u64,
    eps0: f64,
) -> Result<f64> {
    let stats = X2Dynamics::new(initial, tau);
    observable_cramer_rao(|e| stats.mean(e), |e| stats.variance(e), n_measurements, eps0)
}

/// Minimal relative mass of a thermal state as a plain number (`+inf` when no
/// information), convenient for sweeps.
pub fn thermal_inverse_mass(evaluator: &BuresDerivative, tau: f64, n: u64) -> Result<f64> {
    let tau = EvolutionTime::new(tau)?;
    let d = evaluator.derivative(tau)?;
    Ok(min_mass_ratio(-d.value * d.value, n)?.recip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{evolve_in_perturbed_frame, make_fock, make_state};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn t(x: f64) -> EvolutionTime {
        EvolutionTime::new(x).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = DMatrix::from_diagonal_element(2, 2, c(0.6, 0.0));
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::BadTrace(_))));
        let mut nh = DMatrix::from_diagonal_element(2, 2, c(0.5, 0.0));
        nh[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(nh), Err(Error::NotHermitian(_))));
        let neg = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotPositive(_))));
    }

    #[test]
    fn thermal_weights() {
        let spec = ThermalSpec::new(10.0, 4).unwrap();
        let rho = thermal_state(spec);
        assert!((rho.matrix()[(0, 0)].re - 0.9999546).abs() < 1e-7);
        assert!((rho.matrix()[(1, 1)].re - 4.5397e-5).abs() < 1e-8);

        let spec = ThermalSpec::new(1.0, 30).unwrap();
        assert!(spec.tail() < 1e-12);
        assert!(matches!(ThermalSpec::new(1.0, 20), Err(Error::Truncation { required: 28, .. })));

        let cold = thermal_state(ThermalSpec::auto(60.0).unwrap());
        assert_eq!(cold.dim(), 1);
        assert_eq!(cold.matrix()[(0, 0)].re, 1.0);
    }

    #[test]
    fn fidelity_examples() {
        let rho = thermal_state(ThermalSpec::new(1.0, 30).unwrap());
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
        assert!(bures_distance(&rho, &rho).unwrap() < 1e-6);

        let a = make_state(vec![c(1.0, 0.0), c(0.5, -0.2), c(0.0, 0.3)]).unwrap();
        let b = make_state(vec![c(0.2, 0.1), c(1.0, 0.0), c(-0.4, 0.0)]).unwrap();
        let f = fidelity(&DensityMatrix::from_pure(&a), &DensityMatrix::from_pure(&b)).unwrap();
        assert!((f - a.inner(&b).norm_sqr()).abs() < 1e-12);

        let e0 = DensityMatrix::from_pure(&make_fock(0, 2).unwrap());
        let e1 = DensityMatrix::from_pure(&make_fock(1, 2).unwrap());
        assert!((bures_distance(&e0, &e1).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_level_fidelity_identity() {
        // F = tr(r1 r2) + 2 sqrt(det r1 det r2) for qubits.
        let r1 = DensityMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0)],
        ))
        .unwrap();
        let r2 = DensityMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.4, 0.0), c(-0.15, 0.05), c(-0.15, -0.05), c(0.6, 0.0)],
        ))
        .unwrap();
        let tr = (r1.matrix() * r2.matrix()).trace().re;
        let det = |m: &DMatrix<Complex64>| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
        let expect = tr + 2.0 * (det(r1.matrix()) * det(r2.matrix())).sqrt();
        assert!((fidelity(&r1, &r2).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_is_stationary() {
        let rho = thermal_state(ThermalSpec::new(1.0, 30).unwrap());
        let out = evolve_density(&rho, t(1.7), Perturbation::new(0.0).unwrap()).unwrap();
        let back = rho.padded(out.dim());
        assert!((out.matrix() - back.matrix()).norm() < 1e-13);
    }

    #[test]
    fn pure_projector_follows_pure_path() {
        let g = make_fock(0, 1).unwrap();
        let p = Perturbation::new(0.01).unwrap();
        let out = evolve_density(&DensityMatrix::from_pure(&g), t(0.9), p).unwrap();
        let psi = evolve_in_perturbed_frame(&g, t(0.9), p).unwrap();
        let proj = DensityMatrix::from_pure(&psi);
        assert!((out.matrix() - proj.matrix()).norm() < 1e-12);
    }

    #[test]
    fn loaded_thermal_state_moves() {
        let rho = thermal_state(ThermalSpec::new(1.0, 30).unwrap());
        let out = evolve_density(&rho, t(FRAC_PI_2), Perturbation::new(1e-3).unwrap()).unwrap();
        let f = fidelity(&rho.padded(out.dim()), &out).unwrap();
        assert!(f < 1.0 - 1e-8);
    }

    #[test]
    fn bures_derivative_pure_examples() {
        let g = DensityMatrix::from_pure(&make_fock(0, 1).unwrap());
        let d = bures_derivative(&g, t(FRAC_PI_2), 1e-3).unwrap();
        assert!((d.value - FRAC_1_SQRT_2).abs() < 1e-7, "{d:?}");

        let f3 = DensityMatrix::from_pure(&make_fock(3, 4).unwrap());
        let d = bures_derivative(&f3, t(FRAC_PI_2), 1e-3).unwrap();
        assert!((d.value - 6.5f64.sqrt()).abs() < 1e-6, "{d:?}");

        assert!(bures_derivative(&g, t(1.0), 0.5).is_err());
    }

    #[test]
    fn cold_thermal_matches_ground_state() {
        let spec = ThermalSpec::auto(30.0).unwrap();
        let d = bures_derivative(&thermal_state(spec), t(FRAC_PI_2), 1e-3).unwrap();
        assert!((d.value - FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn zero_information_at_half_period() {
        let spec = ThermalSpec::auto(1.0).unwrap();
        let r = thermal_min_mass(spec, t(PI), 1).unwrap();
        assert!(r.is_unbounded());
    }

    #[test]
    fn convexity_examples() {
        let b = thermal_convexity_bound(ThermalSpec::auto(30.0).unwrap(), FRAC_PI_2);
        assert!((b.series - FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((b.envelope - FRAC_1_SQRT_2).abs() < 1e-10);
        let b = thermal_convexity_bound(ThermalSpec::auto(2.0).unwrap(), 2.0 * PI);
        assert!(b.series.abs() < 1e-14 && b.envelope.abs() < 1e-14);
        let b = thermal_convexity_bound(ThermalSpec::auto(1.0).unwrap(), FRAC_PI_2);
        assert!((b.envelope - 1.118627).abs() < 1e-6);
        assert!(b.series <= b.envelope);
    }

    #[test]
    fn x2_bound_examples() {
        assert!((x2_measurement_bound(40.0, 1).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let s1 = 1f64.sinh();
        let expect = 2.0 * 2f64.sqrt() * s1 / (s1 - 1.0);
        assert!((x2_measurement_bound(1.0, 1).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 18.9726).abs() < 1e-3);
        assert!(x2_measurement_bound(1e-8, 1).unwrap().is_infinite());
    }

    #[test]
    fn observable_without_signal_is_unbounded() {
        let r = observable_cramer_rao(|_| 1.0, |_| 0.0, 1, 1e-3).unwrap();
        assert!(r.is_infinite());

        // Number operator on the ground state: <n> is O(eps^2).
        let g = DensityMatrix::from_pure(&make_fock(0, 1).unwrap());
        let mean = |eps: f64| {
            let rho = evolve_density(&g, t(FRAC_PI_2), Perturbation::new(eps).unwrap()).unwrap();
            (0..rho.dim()).map(|n| n as f64 * rho.matrix()[(n, n)].re).sum::<f64>()
        };
        let r = observable_cramer_rao(mean, |_| 0.0, 1, 1e-3).unwrap();
        assert!(r.is_infinite());
    }

    #[test]
    fn x2_equilibrium_reproduces_closed_form() {
        for z in [0.5, 1.0, 3.0, 10.0] {
            let (m, v) = x2_equilibrium_statistics(z);
            let got = observable_cramer_rao(m, v, 1, 1e-3).unwrap();
            let expect = x2_measurement_bound(z, 1).unwrap();
            assert!((got / expect - 1.0).abs() < 1e-6, "z {z}: {got} vs {expect}");
        }
    }

    fn thermal_oracle(z: f64, tau: f64) -> f64 {
        let x = (-z).exp();
        tau.sin().abs() * (1.0 + x) / (2.0 * (1.0 + x * x)).sqrt()
    }

    #[test]
    fn thermal_derivative_matches_closed_form() {
        for z in [0.2, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let eval = BuresDerivative::new(
                &thermal_state(ThermalSpec::auto(z).unwrap()),
                BuresOptions::default(),
            )
            .unwrap();
            for tau in [0.3, FRAC_PI_2, 2.5, 4.0] {
                let d = eval.derivative(t(tau)).unwrap();
                let o = thermal_oracle(z, tau);
                assert!((d.value - o).abs() < 1e-6 * o.max(1.0), "z {z} tau {tau}: {} vs {o}", d.value);
            }
        }
    }
}
