//! Quantum-limited mass sensing with a nano-mechanical harmonic oscillator.
//!
//! A mass `dM` adsorbed on an oscillator of mass `M` lowers its frequency to
//! `omega (1 - eps)` with `eps = dM / (2M)`. The smallest resolvable `dM` for a
//! given initial state follows from the quantum Cramér-Rao bound, i.e. from
//! how fast the Bures distance between the bare and the loaded evolution
//! grows with `eps`.
//!
//! - [`oscillator`]: Fock-space states, overlap matrix, loaded-frame evolution.
//! - [`pure`]: the Fisher coefficient `f` for pure states and its closed forms.
//! - [`mixed`]: density matrices, Uhlmann fidelity, Bures distance, thermal states.
//! - [`optimizer`]: best probe state with at most `L` quanta.
//! - [`wigner`]: phase-space Wigner functions and their CSV grid format.
//! - [`physical`]: conversion to grams and electron masses.
//! - [`statespec`]: the state mini-language and custom-state JSON files.
//! - [`reports`]: tables behind the command-line front end.
//! - [`config`]: the optional JSON configuration file.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod mixed;
pub mod numerics;
pub mod optimizer;
pub mod oscillator;
pub mod physical;
pub mod pure;
pub mod reports;
pub mod statespec;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use oscillator::{EvolutionTime, OverlapMatrix, Perturbation, StateVector};
pub use pure::SensitivityResult;
