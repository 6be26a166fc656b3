//! Tables and records behind the command-line front end.
//!
//! JSON output spells non-finite numbers as strings (`"inf"`); CSV output
//! uses 12 significant digits in scientific notation.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::mixed::{
    thermal_convexity_bound, thermal_state, x2_measurement_bound, BuresDerivative, BuresOptions,
    ThermalSpec,
};
use crate::optimizer::optimize_state;
use crate::oscillator::{make_fock, make_on, EvolutionTime, StateVector};
use crate::physical::PhysicalReport;
use crate::pure::{f_coherent, fisher_f, min_mass_ratio};

/// Finite numbers as JSON numbers, the rest as `"inf"`, `"-inf"` or `"nan"`.
pub fn json_number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// CSV cell with 12 significant digits.
pub fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| csv_number(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// `{"columns": [...], "rows": [{name: value, ...}, ...]}`.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.clone(), json_number(*v)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }
}

fn tau_grid(tau_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(tau_max > 0.0 && tau_max.is_finite()) {
        return Err(Error::OutOfRange {
            what: "tau_max",
            value: tau_max,
            expected: "finite and > 0",
        });
    }
    if steps == 0 {
        return Err(Error::OutOfRange {
            what: "steps",
            value: 0.0,
            expected: ">= 1",
        });
    }
    Ok((0..=steps).map(|i| tau_max * i as f64 / steps as f64).collect())
}

/// `M / dM_min` for `N = 1` from a Fisher coefficient.
fn inverse_mass(f: f64) -> Result<f64> {
    Ok(min_mass_ratio(f, 1)?.recip())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMassReport {
    pub state: String,
    pub tau: f64,
    pub f: f64,
    pub delta_m_over_m: f64,
    pub n_measurements: u64,
}

impl MinMassReport {
    pub fn new(label: &str, state: &StateVector, tau: EvolutionTime, n_measurements: u64) -> Result<Self> {
        let f = fisher_f(state, tau);
        Ok(MinMassReport {
            state: label.to_string(),
            tau: tau.value(),
            f,
            delta_m_over_m: min_mass_ratio(f, n_measurements)?,
            n_measurements,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "state": self.state,
            "tau": json_number(self.tau),
            "f": json_number(self.f),
            "delta_m_over_m": json_number(self.delta_m_over_m),
            "n_measurements": self.n_measurements,
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "state,tau,f,delta_m_over_m,n_measurements\n{},{},{},{},{}\n",
            csv_field(&self.state),
            csv_number(self.tau),
            csv_number(self.f),
            csv_number(self.delta_m_over_m),
            self.n_measurements
        )
    }
}

/// Inverse minimal mass versus time for `|L>`, the ON state, its long-time
/// form `L tau / 2`, the optimal state with at most `L` quanta, and the
/// coherent state with the ON state's mean number `L/2`.
pub fn fig1_table(
    max_quanta: usize,
    tau_max: f64,
    steps: usize,
    restarts: usize,
    seed: u64,
) -> Result<Table> {
    if max_quanta == 0 {
        return Err(Error::OutOfRange {
            what: "L",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let taus = tau_grid(tau_max, steps)?;
    let fock = make_fock(max_quanta, max_quanta + 1)?;
    let on = make_on(max_quanta, 0.0, max_quanta + 1)?;
    let alpha = (max_quanta as f64 / 2.0).sqrt();
    let rows = taus
        .par_iter()
        .map(|&tau| {
            let t = EvolutionTime::new(tau)?;
            let best = optimize_state(max_quanta, t, restarts, seed, 1e-12)?;
            Ok(vec![
                tau,
                inverse_mass(fisher_f(&fock, t))?,
                inverse_mass(fisher_f(&on, t))?,
                max_quanta as f64 * tau / 2.0,
                inverse_mass(best.best_f)?,
                inverse_mass(f_coherent(alpha, tau))?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: ["tau", "fock", "on", "on_asymptote", "optimal", "coherent"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

fn z_column(z: f64) -> String {
    format!("z={z}")
}

fn thermal_evaluator(z: f64) -> Result<BuresDerivative> {
    BuresDerivative::new(&thermal_state(ThermalSpec::auto(z)?), BuresOptions::default())
}

/// `M / dM_min` for thermal states, one column per `z`, exact Bures numerics.
pub fn thermal_table(z_list: &[f64], tau_max: f64, steps: usize, n_measurements: u64) -> Result<Table> {
    let taus = tau_grid(tau_max, steps)?;
    let scale = (n_measurements as f64).sqrt();
    let mut columns = vec!["tau".to_string()];
    let mut per_z = Vec::with_capacity(z_list.len());
    for &z in z_list {
        let eval = thermal_evaluator(z)?;
        let col = taus
            .par_iter()
            .map(|&tau| Ok(eval.derivative(EvolutionTime::new(tau)?)?.value * scale))
            .collect::<Result<Vec<f64>>>()?;
        columns.push(z_column(z));
        per_z.push(col);
    }
    let rows = taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| std::iter::once(tau).chain(per_z.iter().map(|c| c[i])).collect())
        .collect();
    Ok(Table { columns, rows })
}

/// Fixed-time sweep over `z`: exact value, the two convexity estimates and
/// the equilibrium `x^2`-measurement bound, all as `M / dM_min`.
pub fn thermal_inset_table(z_list: &[f64], tau: f64, n_measurements: u64) -> Result<Table> {
    let t = EvolutionTime::new(tau)?;
    let scale = (n_measurements as f64).sqrt();
    let rows = z_list
        .par_iter()
        .map(|&z| {
            let spec = ThermalSpec::auto(z)?;
            let exact = thermal_evaluator(z)?.derivative(t)?.value * scale;
            let bound = thermal_convexity_bound(spec, tau);
            let x2 = x2_measurement_bound(z, n_measurements)?.recip();
            Ok(vec![
                z,
                exact,
                bound.series * scale,
                bound.envelope * scale,
                bound.quadratic * scale,
                x2,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: ["z", "exact", "convexity_series", "convexity_envelope", "convexity_quadratic", "x2_measurement"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeSummary {
    pub max_quanta: usize,
    pub tau: f64,
    pub seed: u64,
    /// `[re, im]` of the canonical-phase representative.
    pub coeffs: Vec<[f64; 2]>,
    pub f_abs: f64,
    pub delta_m_over_m: f64,
    pub restarts_used: usize,
    pub converged: bool,
    pub spread: f64,
}

impl OptimizeSummary {
    pub fn compute(max_quanta: usize, tau: EvolutionTime, restarts: usize, seed: u64) -> Result<Self> {
        let r = optimize_state(max_quanta, tau, restarts, seed, 1e-12)?;
        Ok(OptimizeSummary {
            max_quanta,
            tau: tau.value(),
            seed,
            coeffs: r.best_state.coeffs().iter().map(|c| [c.re, c.im]).collect(),
            f_abs: r.best_f.abs(),
            delta_m_over_m: min_mass_ratio(r.best_f, 1)?,
            restarts_used: r.restarts_used,
            converged: r.converged,
            spread: r.spread,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "max_quanta": self.max_quanta,
            "tau": json_number(self.tau),
            "seed": self.seed,
            "coeffs": self.coeffs,
            "f_abs": json_number(self.f_abs),
            "delta_m_over_m": json_number(self.delta_m_over_m),
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "spread": json_number(self.spread),
        })
    }

    /// One row per Fock level.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,re,im\n");
        for (n, [re, im]) in self.coeffs.iter().enumerate() {
            let _ = writeln!(s, "{n},{},{}", csv_number(*re), csv_number(*im));
        }
        s
    }
}

pub fn physical_json(r: &PhysicalReport) -> Value {
    json!({
        "tau": json_number(r.tau),
        "alpha": json_number(r.alpha),
        "mean_quanta": json_number(r.mean_quanta),
        "x0_m": json_number(r.x0_m),
        "delta_m_over_m": json_number(r.delta_m_over_m),
        "delta_m_g": json_number(r.delta_m_g),
        "delta_m_electron_masses": json_number(r.delta_m_electron_masses),
    })
}

pub fn physical_csv(r: &PhysicalReport) -> String {
    let vals = [
        r.tau,
        r.alpha,
        r.mean_quanta,
        r.x0_m,
        r.delta_m_over_m,
        r.delta_m_g,
        r.delta_m_electron_masses,
    ];
    let cells: Vec<String> = vals.iter().map(|v| csv_number(*v)).collect();
    format!(
        "tau,alpha,mean_quanta,x0_m,delta_m_over_m,delta_m_g,delta_m_electron_masses\n{}\n",
        cells.join(",")
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespec::parse_state;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn min_mass_records() {
        let s = parse_state("fock:3").unwrap();
        let r = MinMassReport::new("fock:3", &s, EvolutionTime::new(FRAC_PI_2).unwrap(), 1).unwrap();
        assert!((r.delta_m_over_m - (2.0f64 / 13.0).sqrt()).abs() < 1e-12);
        let v = r.to_json();
        assert_eq!(v["state"], "fock:3");
        assert_eq!(v["n_measurements"], 1);

        let g = parse_state("fock:0").unwrap();
        let r = MinMassReport::new("fock:0", &g, EvolutionTime::new(FRAC_PI_2).unwrap(), 2).unwrap();
        assert!((r.delta_m_over_m - 1.0).abs() < 1e-12);

        let r = MinMassReport::new("fock:0", &g, EvolutionTime::new(0.0).unwrap(), 1).unwrap();
        assert_eq!(r.to_json()["delta_m_over_m"], "inf");
        assert!(r.to_csv().lines().nth(1).unwrap().contains(",inf,"));
    }

    #[test]
    fn fig1_rows() {
        let t = fig1_table(3, 2.0 * PI, 4, 8, 5).unwrap();
        assert_eq!(t.rows.len(), 5);
        let on = t.column("on").unwrap();
        let opt = t.column("optimal").unwrap();
        let fock = t.column("fock").unwrap();
        // Rows at pi/2 and pi.
        // dM_min reductions relative to ON and |3>.
        assert!((1.0 - on[1] / opt[1] - 0.04).abs() < 0.015);
        assert!((1.0 - fock[1] / opt[1] - 0.18).abs() < 0.015);
        assert!((opt[2] / on[2] - 1.0).abs() < 1e-8);
        assert!(t.to_csv().starts_with("tau,fock,on,on_asymptote,optimal,coherent\n"));
    }

    #[test]
    fn thermal_rows() {
        let t = thermal_table(&[1.0, 10.0], PI, 2, 1).unwrap();
        let cold = t.column("z=10").unwrap();
        assert!((cold[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.007);
        assert!(cold[2].abs() < 1e-6);
        let hot = t.column("z=1").unwrap();
        assert!(hot[1] >= cold[1]);
    }
}
