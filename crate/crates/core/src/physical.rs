//! Conversion of the coherent-state bound to grams for a concrete resonator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillator::EvolutionTime;
use crate::pure::{f_coherent, min_mass_ratio};

/// Reduced Planck constant in J s.
pub const HBAR_J_S: f64 = 1.054571817e-34;
/// Electron mass in grams.
pub const ELECTRON_MASS_G: f64 = 9.1093837015e-28;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Excitation {
    /// Mean number of quanta `<n> = alpha^2`.
    MeanQuanta(f64),
    /// Position amplitude in meters; `alpha = amplitude / (sqrt2 x0)`.
    Amplitude(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSpec {
    pub mass_g: f64,
    pub omega_rad_s: f64,
    pub time_s: f64,
    pub excitation: Excitation,
    pub n_measurements: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalReport {
    pub tau: f64,
    pub alpha: f64,
    pub mean_quanta: f64,
    /// Oscillator length in meters.
    pub x0_m: f64,
    pub delta_m_over_m: f64,
    pub delta_m_g: f64,
    pub delta_m_electron_masses: f64,
}

fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            expected: "finite and > 0",
        })
    }
}

impl PhysicalSpec {
    pub fn validate(&self) -> Result<()> {
        positive("mass_g", self.mass_g)?;
        positive("omega_rad_s", self.omega_rad_s)?;
        positive("time_s", self.time_s)?;
        match self.excitation {
            Excitation::MeanQuanta(n) => positive("mean_quanta", n)?,
            Excitation::Amplitude(a) => positive("amplitude_m", a)?,
        };
        if self.n_measurements == 0 {
            return Err(Error::OutOfRange {
                what: "n_measurements",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.omega_rad_s * self.time_s
    }

    /// `sqrt(hbar / (M omega))` in meters.
    pub fn x0_m(&self) -> f64 {
        (HBAR_J_S / (self.mass_g * 1e-3 * self.omega_rad_s)).sqrt()
    }

    pub fn alpha(&self) -> f64 {
        match self.excitation {
            Excitation::MeanQuanta(n) => n.sqrt(),
            Excitation::Amplitude(a) => a / (std::f64::consts::SQRT_2 * self.x0_m()),
        }
    }
}

/// Minimal detectable mass for a coherent state, `dM = M / (sqrt(N) |f|^{1/2})`.
pub fn physical_min_mass(spec: &PhysicalSpec) -> Result<PhysicalReport> {
    spec.validate()?;
    let tau = EvolutionTime::new(spec.tau())?.value();
    let alpha = spec.alpha();
    let ratio = min_mass_ratio(f_coherent(alpha, tau), spec.n_measurements)?;
    let delta_m_g = ratio * spec.mass_g;
    Ok(PhysicalReport {
        tau,
        alpha,
        mean_quanta: alpha * alpha,
        x0_m: spec.x0_m(),
        delta_m_over_m: ratio,
        delta_m_g,
        delta_m_electron_masses: delta_m_g / ELECTRON_MASS_G,
    })
}
