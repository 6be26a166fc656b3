//! Text form of probe states and the custom-state JSON file.
//!
//! ```text
//! fock:<n> | on:<L>[:<phi>] | cat1:<n> | cat2:<n> | coherent:<alpha> | custom:<path>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::oscillator::{
    make_cat_s1, make_cat_s2, make_coherent, make_fock, make_on, StateVector,
};

/// Discarded probability accepted when truncating `coherent:` states.
pub const COHERENT_TAIL_TOL: f64 = 1e-12;
/// Largest Fock dimension `parse_state` will build.
pub const MAX_PARSED_DIM: usize = 1 << 16;

fn parse_error(token: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        token: token.to_string(),
        message: message.into(),
    }
}

fn parse_index(token: &str) -> Result<usize> {
    let n: usize = token
        .parse()
        .map_err(|_| parse_error(token, "expected a non-negative integer"))?;
    if n >= MAX_PARSED_DIM {
        return Err(parse_error(token, format!("must be below {MAX_PARSED_DIM}")));
    }
    Ok(n)
}

fn parse_real(token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(token, "expected a finite number"))
}

/// Builds the state named by `spec`. `custom:` reads a JSON file.
pub fn parse_state(spec: &str) -> Result<StateVector> {
    let spec = spec.trim();
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| parse_error(spec, "expected <kind>:<args>"))?;
    match kind {
        "fock" => {
            let n = parse_index(rest)?;
            make_fock(n, n + 1)
        }
        "on" => {
            let (l, phi) = match rest.split_once(':') {
                Some((l, phi)) => (l, parse_real(phi)?),
                None => (rest, 0.0),
            };
            let l = parse_index(l)?;
            if l == 0 {
                return Err(parse_error(rest, "ON state needs L >= 1"));
            }
            make_on(l, phi, l + 1)
        }
        "cat1" => Ok(make_cat_s1(parse_index(rest)?)),
        "cat2" => Ok(make_cat_s2(parse_index(rest)?)),
        "coherent" => {
            let alpha = parse_real(rest)?;
            make_coherent(alpha, COHERENT_TAIL_TOL, MAX_PARSED_DIM)
        }
        "custom" => {
            if rest.is_empty() {
                return Err(parse_error(spec, "missing file path"));
            }
            read_custom_state(Path::new(rest))
        }
        other => Err(parse_error(
            other,
            "unknown state kind (fock, on, cat1, cat2, coherent, custom)",
        )),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CustomFile {
    Object { coeffs: Vec<[f64; 2]> },
    Bare(Vec<[f64; 2]>),
}

/// Parses `{"coeffs": [[re, im], ...]}` (a bare array of pairs is also
/// accepted) and normalizes if needed.
pub fn parse_custom_json(text: &str) -> Result<StateVector> {
    let file: CustomFile = serde_json::from_str(text)?;
    let pairs = match file {
        CustomFile::Object { coeffs } | CustomFile::Bare(coeffs) => coeffs,
    };
    if pairs.len() > MAX_PARSED_DIM {
        return Err(parse_error("coeffs", format!("more than {MAX_PARSED_DIM} entries")));
    }
    if let Some(bad) = pairs.iter().flatten().find(|v| !v.is_finite()) {
        return Err(parse_error(&bad.to_string(), "non-finite coefficient"));
    }
    let coeffs: Vec<Complex64> = pairs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    // Already-normalized input is kept bit for bit.
    StateVector::from_normalized(coeffs.clone()).or_else(|_| StateVector::new(coeffs))
}

pub fn read_custom_state(path: &Path) -> Result<StateVector> {
    parse_custom_json(&std::fs::read_to_string(path)?)
}

/// Custom-state JSON with every component printed to 17 significant digits,
/// which reproduces each `f64` exactly on re-parse.
pub fn custom_state_json(state: &StateVector) -> String {
    let mut s = String::from("{\"coeffs\": [");
    for (i, c) in state.coeffs().iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "[{:.16e}, {:.16e}]", c.re, c.im);
    }
    s.push_str("]}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn grammar_examples() {
        let s = parse_state("fock:3").unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.coeffs()[3], Complex64::new(1.0, 0.0));

        let s = parse_state("on:3").unwrap();
        assert!((s.coeffs()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.coeffs()[3].re - FRAC_1_SQRT_2).abs() < 1e-15);

        let s = parse_state("on:2:1.5707963267948966").unwrap();
        assert!((s.coeffs()[2].im - FRAC_1_SQRT_2).abs() < 1e-15);

        let s = parse_state("coherent:1.2247").unwrap();
        assert!((s.mean_n() - 1.5).abs() < 1e-3);

        assert_eq!(parse_state("cat2:1").unwrap().dim(), 6);
        assert_eq!(parse_state("cat1:0").unwrap().dim(), 3);
    }

    #[test]
    fn malformed_specs() {
        for bad in ["", "fock", "fock:-1", "fock:x", "on:0", "on:3:nan", "spin:2", "coherent:inf", "custom:"] {
            let e = parse_state(bad).unwrap_err();
            assert!(e.is_usage(), "{bad}: {e}");
        }
        match parse_state("bogus:1").unwrap_err() {
            Error::Parse { token, .. } => assert_eq!(token, "bogus"),
            e => panic!("{e}"),
        }
        assert!(matches!(parse_state("custom:/nonexistent/state.json"), Err(Error::Io(_))));
    }

    #[test]
    fn custom_round_trip() {
        let raw = vec![
            Complex64::new(0.1, -0.3),
            Complex64::new(1.0 / 3.0, 0.0),
            Complex64::new(-2e-17, 0.7),
        ];
        let s = StateVector::new(raw).unwrap();
        let back = parse_custom_json(&custom_state_json(&s)).unwrap();
        assert_eq!(back.coeffs(), s.coeffs());

        let bare = parse_custom_json("[[1, 0], [0, 1]]").unwrap();
        assert!((bare.coeffs()[1].im - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(parse_custom_json("{\"coeffs\": []}").is_err());
        assert!(parse_custom_json("{\"coeffs\": [[1]]}").is_err());
    }
}
