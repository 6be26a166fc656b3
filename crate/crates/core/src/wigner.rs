//! Wigner function of a pure state on a phase-space grid.
//!
//! Lengths are in units of the oscillator length, momenta in `hbar / x0`.
//! Two independent evaluations are provided: the Fock-basis bilinear form
//! (Laguerre polynomials, used for grids) and Gauss-Hermite quadrature of the
//! defining `y` integral.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use gauss_quad::GaussHermite;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::ln_factorials;
use crate::oscillator::StateVector;

/// Gauss-Hermite nodes used by [`wigner_point_quadrature`].
pub const QUADRATURE_NODES: usize = 128;

/// Accepted deviation of the grid-summed normalization from 1.
pub const NORMALIZATION_TOL: f64 = 1e-4;

/// Normalized oscillator eigenfunction `phi_n(x)`.
pub fn eigenfunction(n: usize, x: f64) -> f64 {
    hermite_functions(n + 1, Complex64::new(x, 0.0))[n].re * (-x * x / 2.0).exp()
}

/// `phi_k(z) exp(z^2/2)` for `k < count`, by the normalized three-term
/// recurrence, at a complex argument.
fn hermite_functions(count: usize, z: Complex64) -> Vec<Complex64> {
    let mut h = Vec::with_capacity(count);
    if count == 0 {
        return h;
    }
    h.push(Complex64::new(std::f64::consts::PI.powf(-0.25), 0.0));
    if count > 1 {
        h.push(z * std::f64::consts::SQRT_2 * h[0]);
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        let next = z * (2.0 / (kf + 1.0)).sqrt() * h[k] - h[k - 1] * (kf / (kf + 1.0)).sqrt();
        h.push(next);
    }
    h
}

/// Position wavefunction `psi(x) = sum c_n phi_n(x)`.
pub fn wavefunction(state: &StateVector, x: f64) -> Complex64 {
    let h = hermite_functions(state.dim(), Complex64::new(x, 0.0));
    let s: Complex64 = state.coeffs().iter().zip(&h).map(|(c, h)| c * h).sum();
    s * (-x * x / 2.0).exp()
}

fn gauss_hermite() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(QUADRATURE_NODES).expect("degree >= 2"))
}

/// `W(x, p)` by Gauss-Hermite quadrature of
/// `(1/pi) int dy psi*(x - y) psi(x + y) exp(-2 i y p)`.
///
/// The Gaussian factors combine to `exp(-x^2 - p^2 - (y + i p)^2)`; shifting
/// the contour by `i p` leaves a polynomial against `exp(-y^2)`, which the rule
/// integrates exactly for `dim <= 128`. The imaginary part is the quadrature
/// residue and should vanish.
pub fn wigner_point_quadrature(state: &StateVector, x: f64, p: f64) -> Complex64 {
    let dim = state.dim();
    let c = state.coeffs();
    let mut acc = Complex64::new(0.0, 0.0);
    for &(node, weight) in gauss_hermite().as_node_weight_pairs() {
        let y = Complex64::new(node, -p);
        let minus = hermite_functions(dim, Complex64::new(x, 0.0) - y);
        let plus = hermite_functions(dim, Complex64::new(x, 0.0) + y);
        let left: Complex64 = c.iter().zip(&minus).map(|(c, h)| c.conj() * h).sum();
        let right: Complex64 = c.iter().zip(&plus).map(|(c, h)| c * h).sum();
        acc += left * right * weight;
    }
    acc * (-x * x - p * p).exp() / std::f64::consts::PI
}

/// Fock-basis Wigner kernel evaluator for one state.
struct Bilinear<'a> {
    coeffs: &'a [Complex64],
    ln_fact: Vec<f64>,
}

impl<'a> Bilinear<'a> {
    fn new(state: &'a StateVector) -> Self {
        Bilinear {
            coeffs: state.coeffs(),
            ln_fact: ln_factorials(state.dim()),
        }
    }

    /// `sum_{m,n} c_m c*_n W_{|m><n|}(x, p)` with, for `m >= n`,
    /// `W = (-1)^n/pi sqrt(n!/m!) (sqrt2 (x - i p))^{m-n} e^{-r^2} L_n^{(m-n)}(2 r^2)`.
    fn value(&self, x: f64, p: f64) -> f64 {
        let dim = self.coeffs.len();
        let r2 = x * x + p * p;
        let t = 2.0 * r2;
        let ln_rho = if r2 > 0.0 { 0.5 * t.ln() } else { f64::NEG_INFINITY };
        let theta = p.atan2(x);
        let gauss = (-r2).exp();
        let mut total = 0.0;
        for k in 0..dim {
            // Laguerre L_n^{(k)}(t) for n = 0..dim-k.
            let count = dim - k;
            let mut lag = Vec::with_capacity(count);
            lag.push(1.0);
            if count > 1 {
                lag.push(1.0 + k as f64 - t);
            }
            for n in 1..count.saturating_sub(1) {
                let nf = n as f64;
                let a = k as f64;
                let next = ((2.0 * nf + 1.0 + a - t) * lag[n] - (nf + a) * lag[n - 1]) / (nf + 1.0);
                lag.push(next);
            }
            let rotation = Complex64::from_polar(1.0, -(k as f64) * theta);
            for n in 0..count {
                let m = n + k;
                let magnitude = if k == 0 {
                    1.0
                } else if r2 == 0.0 {
                    0.0
                } else {
                    (0.5 * (self.ln_fact[n] - self.ln_fact[m]) + k as f64 * ln_rho).exp()
                };
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let kernel = rotation * (sign * magnitude * lag[n]);
                let pair = self.coeffs[m] * self.coeffs[n].conj() * kernel;
                total += if k == 0 { pair.re } else { 2.0 * pair.re };
            }
        }
        total * gauss / std::f64::consts::PI
    }
}

/// `W(x, p)` from the Fock-basis bilinear form.
pub fn wigner_point(state: &StateVector, x: f64, p: f64) -> f64 {
    Bilinear::new(state).value(x, p)
}

/// `W` sampled on a uniform grid, rows at fixed `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub x_values: Vec<f64>,
    pub p_values: Vec<f64>,
    /// `values[i][j] = W(x_values[j], p_values[i])`.
    pub values: Vec<Vec<f64>>,
}

impl PhaseSpaceGrid {
    fn spacing(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            0.0
        } else {
            (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
        }
    }

    /// `sum W dx dp`.
    pub fn normalization(&self) -> f64 {
        let cell = Self::spacing(&self.x_values) * Self::spacing(&self.p_values);
        self.values.iter().flatten().sum::<f64>() * cell
    }

    /// Set when the grid misses part of the state: `|1 - sum W dx dp| > 1e-4`.
    pub fn normalization_warning(&self) -> bool {
        (1.0 - self.normalization()).abs() > NORMALIZATION_TOL
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the CSV layout: `# x0_units`, the two axis lines, then one line
    /// per `p` value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let join = |v: &[f64]| {
            let mut s = String::new();
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{x:.11e}");
            }
            s
        };
        writeln!(out, "# x0_units")?;
        writeln!(out, "x: {}", join(&self.x_values))?;
        writeln!(out, "p: {}", join(&self.p_values))?;
        for row in &self.values {
            writeln!(out, "{}", join(row))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::GridFormat(format!("missing {what}")))
        };
        let header = next("header")?;
        if header.trim_end() != "# x0_units" {
            return Err(Error::GridFormat(format!("bad header {header:?}")));
        }
        let x_values = parse_axis(&next("x axis")?, "x:")?;
        let p_values = parse_axis(&next("p axis")?, "p:")?;
        let mut values = Vec::with_capacity(p_values.len());
        for i in 0..p_values.len() {
            let row = parse_numbers(&next(&format!("row {i}"))?)?;
            if row.len() != x_values.len() {
                return Err(Error::GridFormat(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    x_values.len()
                )));
            }
            values.push(row);
        }
        if let Some(extra) = lines.next().transpose()? {
            if !extra.trim().is_empty() {
                return Err(Error::GridFormat("trailing data after grid".into()));
            }
        }
        Ok(PhaseSpaceGrid {
            x_values,
            p_values,
            values,
        })
    }
}

fn parse_numbers(line: &str) -> Result<Vec<f64>> {
    line.trim()
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::GridFormat(format!("bad number {t:?}")))
        })
        .collect()
}

fn parse_axis(line: &str, label: &str) -> Result<Vec<f64>> {
    let rest = line
        .strip_prefix(label)
        .ok_or_else(|| Error::GridFormat(format!("expected {label:?} line")))?;
    let axis = parse_numbers(rest)?;
    if axis.is_empty() {
        return Err(Error::GridFormat(format!("empty {label} axis")));
    }
    Ok(axis)
}

fn axis(range: (f64, f64), resolution: usize) -> Vec<f64> {
    let step = (range.1 - range.0) / (resolution - 1) as f64;
    (0..resolution).map(|i| range.0 + step * i as f64).collect()
}

/// Half-width a grid needs: four oscillator lengths past the classical turning
/// point `sqrt(2 n + 1)` of the top Fock level.
pub fn recommended_half_width(state: &StateVector) -> f64 {
    (2.0 * state.top_index() as f64 + 1.0).sqrt() + 4.0
}

/// `W` on a `resolution x resolution` grid over `x_range x p_range`.
///
/// Ranges that do not cover the state show up as
/// [`PhaseSpaceGrid::normalization_warning`].
pub fn wigner_grid(
    state: &StateVector,
    x_range: (f64, f64),
    p_range: (f64, f64),
    resolution: usize,
) -> Result<PhaseSpaceGrid> {
    if resolution < 16 {
        return Err(Error::OutOfRange {
            what: "resolution",
            value: resolution as f64,
            expected: ">= 16",
        });
    }
    for (lo, hi) in [x_range, p_range] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::OutOfRange {
                what: "range",
                value: hi - lo,
                expected: "finite with lo < hi",
            });
        }
    }
    let x_values = axis(x_range, resolution);
    let p_values = axis(p_range, resolution);
    let form = Bilinear::new(state);
    let values = p_values
        .par_iter()
        .map(|&p| x_values.iter().map(|&x| form.value(x, p)).collect())
        .collect();
    Ok(PhaseSpaceGrid {
        x_values,
        p_values,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{make_coherent, make_fock, make_on, make_state};
    use std::f64::consts::{FRAC_1_PI, PI};

    #[test]
    fn eigenfunction_examples() {
        assert!((eigenfunction(0, 0.0) - 0.7511255444649425).abs() < 1e-15);
        assert_eq!(eigenfunction(1, 0.0), 0.0);
        // phi_2(x) = pi^{-1/4} (2x^2 - 1) e^{-x^2/2} / sqrt(2)
        let x = 0.7;
        let expect = PI.powf(-0.25) * (2.0 * x * x - 1.0) * (-x * x / 2.0).exp() / 2f64.sqrt();
        assert!((eigenfunction(2, x) - expect).abs() < 1e-15);
    }

    #[test]
    fn eigenfunctions_are_orthonormal() {
        // Trapezoid on [-12, 12] is spectrally accurate for these integrands.
        let h = 0.01;
        let xs: Vec<f64> = (0..=2400).map(|i| -12.0 + h * i as f64).collect();
        let table: Vec<Vec<f64>> = (0..=10)
            .map(|n| xs.iter().map(|&x| eigenfunction(n, x)).collect())
            .collect();
        for m in 0..=10 {
            for n in 0..=10 {
                let s: f64 = table[m].iter().zip(&table[n]).map(|(a, b)| a * b).sum::<f64>() * h;
                let target = if m == n { 1.0 } else { 0.0 };
                assert!((s - target).abs() < 1e-8, "({m},{n}) {s}");
            }
        }
    }

    #[test]
    fn origin_values() {
        for n in 0..6 {
            let s = make_fock(n, n + 1).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((wigner_point(&s, 0.0, 0.0) - sign * FRAC_1_PI).abs() < 1e-12);
            assert!((wigner_point_quadrature(&s, 0.0, 0.0).re - sign * FRAC_1_PI).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_gaussian() {
        let g = make_fock(0, 1).unwrap();
        for (x, p) in [(0.3f64, -1.2f64), (2.0, 0.5), (-1.5, 1.5)] {
            let expect = FRAC_1_PI * (-x * x - p * p).exp();
            assert!((wigner_point(&g, x, p) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn routes_agree() {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let states = vec![
            make_on(4, 0.3, 5).unwrap(),
            make_coherent(1.0, 1e-12, 40).unwrap(),
            make_state(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.0, 0.0), c(0.4, -0.3), c(0.1, 0.2), c(-0.5, 0.0)])
                .unwrap(),
        ];
        for s in &states {
            for (x, p) in [(0.0, 0.0), (1.3, -0.4), (-2.2, 1.7), (0.5, 3.1), (4.0, -4.0)] {
                let a = wigner_point(s, x, p);
                let b = wigner_point_quadrature(s, x, p);
                assert!((a - b.re).abs() < 1e-10, "({x},{p}): {a} vs {b}");
                assert!(b.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn grid_normalization_and_bound() {
        let s = make_on(4, 0.0, 5).unwrap();
        let g = wigner_grid(&s, (-8.0, 8.0), (-8.0, 8.0), 256).unwrap();
        assert!((g.normalization() - 1.0).abs() < 1e-4);
        assert!(!g.normalization_warning());
        assert!(g.max_abs() <= FRAC_1_PI + 1e-12);

        let small = wigner_grid(&s, (-1.0, 1.0), (-1.0, 1.0), 32).unwrap();
        assert!(small.normalization_warning());
        assert!(wigner_grid(&s, (-1.0, 1.0), (-1.0, 1.0), 8).is_err());
    }

    #[test]
    fn free_rotation_rotates_phase_space() {
        let s = make_coherent(1.0, 1e-14, 40).unwrap();
        let t0 = 0.7;
        let r = s.rotated(t0);
        for (x, p) in [(0.5f64, 0.2f64), (1.0, -0.8), (-0.3, 1.1)] {
            // Free evolution moves phase-space points clockwise by t0.
            let (xb, pb) = (x * t0.cos() - p * t0.sin(), x * t0.sin() + p * t0.cos());
            assert!((wigner_point(&r, x, p) - wigner_point(&s, xb, pb)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = make_fock(1, 2).unwrap();
        let g = wigner_grid(&s, (-3.0, 3.0), (-2.0, 2.0), 16).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# x0_units\nx: "));
        let back = PhaseSpaceGrid::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values.len(), 16);
        for (a, b) in back.values.iter().flatten().zip(g.values.iter().flatten()) {
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1e-300));
        }
        assert!(PhaseSpaceGrid::read_csv("x: 1,2\n".as_bytes()).is_err());
    }
}
