use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use massqcrb::config::{parse_config, RunConfig};
use massqcrb::physical::{physical_min_mass, Excitation, PhysicalSpec};
use massqcrb::reports::{
    fig1_table, json_number, physical_csv, physical_json, thermal_inset_table, thermal_table,
    MinMassReport, OptimizeSummary,
};
use massqcrb::statespec::{custom_state_json, parse_state};
use massqcrb::wigner::{recommended_half_width, wigner_grid};
use massqcrb::{EvolutionTime, StateVector};
use serde_json::json;

const FIG3_Z: [f64; 6] = [0.2, 0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl From<massqcrb::Error> for Failure {
    fn from(e: massqcrb::Error) -> Self {
        if e.is_usage() || matches!(e, massqcrb::Error::Io(_)) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Quantum limits on mass sensing with a nano-mechanical oscillator.
#[derive(Debug, Parser)]
#[command(name = "massqcrb", version)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON file with default values for any flag (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout (atomically).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimal relative mass for one state and time.
    MinMass(MinMassArgs),
    /// M/dM_min versus time for Fock, ON, optimal and coherent states.
    SweepFig1(Fig1Args),
    /// M/dM_min versus time for thermal states, or versus z with --inset.
    Thermal(ThermalArgs),
    /// Best state with at most L quanta.
    Optimize(OptimizeArgs),
    /// Wigner function of a state on a grid.
    Wigner(WignerArgs),
    /// Minimal mass in grams for a coherent state of a real resonator.
    Physical(PhysicalArgs),
}

#[derive(Debug, Args)]
struct MinMassArgs {
    /// fock:<n> | on:<L>[:<phi>] | cat1:<n> | cat2:<n> | coherent:<alpha> | custom:<path>
    #[arg(long)]
    state: Option<String>,
    /// Dimensionless time omega t; accepts forms like `pi/2` or `3pi`.
    #[arg(long, value_parser = parse_angle)]
    tau: Option<f64>,
    /// Number of repeated measurements.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Debug, Args)]
struct Fig1Args {
    /// Largest number of quanta.
    #[arg(long)]
    l: Option<usize>,
    /// Last time of the sweep (default 4pi).
    #[arg(long, value_parser = parse_angle)]
    tau_max: Option<f64>,
    /// Number of time intervals; rows are steps + 1.
    #[arg(long)]
    steps: Option<usize>,
    /// Random starts after the ON and top-Fock starts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Seed for the random starts.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ThermalArgs {
    /// Inverse temperatures hbar omega / k_B T.
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<f64>>,
    /// Last time of the sweep (default 2pi).
    #[arg(long, value_parser = parse_angle)]
    tau_max: Option<f64>,
    /// Number of time intervals; rows are steps + 1.
    #[arg(long)]
    steps: Option<usize>,
    /// Number of repeated measurements.
    #[arg(long)]
    n: Option<u64>,
    /// Sweep z at fixed --tau instead of sweeping time.
    #[arg(long)]
    inset: bool,
    /// Time for --inset.
    #[arg(long, value_parser = parse_angle)]
    tau: Option<f64>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Largest number of quanta.
    #[arg(long)]
    l: Option<usize>,
    /// Dimensionless time omega t.
    #[arg(long, value_parser = parse_angle)]
    tau: Option<f64>,
    /// Random starts after the ON and top-Fock starts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Seed for the random starts.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the best state as a custom-state JSON file.
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WignerArgs {
    /// State to plot, in the same form as for min-mass.
    #[arg(long)]
    state: Option<String>,
    /// Half width of a square grid centered at the origin.
    #[arg(long)]
    range: Option<f64>,
    /// x limits in units of x0.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    x_range: Option<Vec<f64>>,
    /// p limits in units of x0.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    p_range: Option<Vec<f64>>,
    /// Points per axis.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Debug, Args)]
struct PhysicalArgs {
    /// Resonator mass in grams.
    #[arg(long)]
    mass_g: Option<f64>,
    /// Angular frequency in rad/s.
    #[arg(long)]
    omega: Option<f64>,
    /// Measurement time in seconds.
    #[arg(long)]
    time_s: Option<f64>,
    /// Mean number of quanta of the coherent state.
    #[arg(long, conflicts_with = "amplitude_m")]
    mean_quanta: Option<f64>,
    /// Oscillation amplitude in meters.
    #[arg(long)]
    amplitude_m: Option<f64>,
    /// Number of repeated measurements.
    #[arg(long)]
    n: Option<u64>,
}

/// Reads a number, optionally times `pi`: `1.3`, `pi`, `pi/2`, `3pi/4`, `2*pi`.
fn parse_angle(text: &str) -> Result<f64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let value = match t.split_once("pi") {
        None => t.parse::<f64>().map_err(|_| format!("not a number: {text}"))?,
        Some((head, tail)) => {
            let head = head.strip_suffix('*').unwrap_or(head);
            let coeff = if head.is_empty() {
                1.0
            } else {
                head.parse::<f64>().map_err(|_| format!("bad coefficient in {text}"))?
            };
            let divisor = if tail.is_empty() {
                1.0
            } else {
                tail.strip_prefix('/')
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| format!("bad divisor in {text}"))?
            };
            coeff * std::f64::consts::PI / divisor
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not finite: {text}"))
    }
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, Failure> {
    flag.or(file).ok_or_else(|| usage(format!("missing --{name}")))
}

fn tau_value(tau: f64) -> Result<EvolutionTime, Failure> {
    Ok(EvolutionTime::new(tau)?)
}

fn pair(v: Option<Vec<f64>>, file: Option<[f64; 2]>) -> Option<(f64, f64)> {
    v.map(|v| (v[0], v[1])).or(file.map(|[a, b]| (a, b)))
}

/// Writes via a temporary file in the target directory and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

struct Output {
    json: serde_json::Value,
    csv: String,
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    let format = match (cli.format, config.format.as_deref()) {
        (Some(f), _) => f,
        (None, None) => Format::Json,
        (None, Some(name)) => Format::from_str(name, true)
            .map_err(|_| usage(format!("unknown format {name:?} in config")))?,
    };
    let out = cli.out.clone().or(config.out.clone().map(PathBuf::from));

    let output = match cli.command {
        Command::MinMass(a) => {
            let label = required(a.state, config.state.clone(), "state")?;
            let state = parse_state(&label)?;
            let tau = tau_value(required(a.tau, config.tau, "tau")?)?;
            let n = a.n.or(config.n).unwrap_or(1);
            let r = MinMassReport::new(&label, &state, tau, n)?;
            Output { json: r.to_json(), csv: r.to_csv() }
        }
        Command::SweepFig1(a) => {
            let t = fig1_table(
                a.l.or(config.l).unwrap_or(3),
                a.tau_max.or(config.tau_max).unwrap_or(4.0 * std::f64::consts::PI),
                a.steps.or(config.steps).unwrap_or(64),
                a.restarts.or(config.restarts).unwrap_or(8),
                a.seed.or(config.seed).unwrap_or(0),
            )?;
            Output { json: t.to_json(), csv: t.to_csv() }
        }
        Command::Thermal(a) => {
            let z = a.z.or(config.z.clone()).unwrap_or_else(|| FIG3_Z.to_vec());
            let n = a.n.or(config.n).unwrap_or(1);
            let t = if a.inset || config.inset.unwrap_or(false) {
                let tau = a.tau.or(config.tau).unwrap_or(std::f64::consts::FRAC_PI_2);
                thermal_inset_table(&z, tau, n)?
            } else {
                thermal_table(
                    &z,
                    a.tau_max.or(config.tau_max).unwrap_or(2.0 * std::f64::consts::PI),
                    a.steps.or(config.steps).unwrap_or(64),
                    n,
                )?
            };
            Output { json: t.to_json(), csv: t.to_csv() }
        }
        Command::Optimize(a) => {
            let l = required(a.l, config.l, "l")?;
            let tau = tau_value(required(a.tau, config.tau, "tau")?)?;
            let restarts = a.restarts.or(config.restarts).unwrap_or(32);
            let seed = a.seed.or(config.seed).unwrap_or(0);
            let r = OptimizeSummary::compute(l, tau, restarts, seed)?;
            if let Some(path) = a.state_out.or(config.state_out.clone().map(PathBuf::from)) {
                let coeffs = r.coeffs.iter().map(|[re, im]| massqcrb::Complex64::new(*re, *im)).collect();
                let state = StateVector::from_normalized(coeffs)?;
                write_atomic(&path, &custom_state_json(&state))?;
            }
            if !r.converged {
                eprintln!("warning: best local search hit the iteration cap");
            }
            Output { json: r.to_json(), csv: r.to_csv() }
        }
        Command::Wigner(a) => {
            let label = required(a.state, config.state.clone(), "state")?;
            let state = parse_state(&label)?;
            let half = a
                .range
                .or(config.range)
                .unwrap_or_else(|| recommended_half_width(&state));
            let x_range = pair(a.x_range, config.x_range).unwrap_or((-half, half));
            let p_range = pair(a.p_range, config.p_range).unwrap_or((-half, half));
            let resolution = a.resolution.or(config.resolution).unwrap_or(128);
            let grid = wigner_grid(&state, x_range, p_range, resolution)?;
            let warning = grid.normalization_warning();
            if warning {
                eprintln!(
                    "warning: grid integrates to {:.6}; widen the range",
                    grid.normalization()
                );
            }
            let mut csv = Vec::new();
            grid.write_csv(&mut csv)?;
            let values: Vec<Vec<serde_json::Value>> = grid
                .values
                .iter()
                .map(|row| row.iter().map(|v| json_number(*v)).collect())
                .collect();
            Output {
                json: json!({
                    "state": label,
                    "x_values": grid.x_values,
                    "p_values": grid.p_values,
                    "values": values,
                    "normalization": json_number(grid.normalization()),
                    "normalization_warning": warning,
                }),
                csv: String::from_utf8(csv).expect("ascii"),
            }
        }
        Command::Physical(a) => {
            let excitation = match (
                a.mean_quanta.or(config.mean_quanta),
                a.amplitude_m.or(config.amplitude_m),
            ) {
                (Some(n), None) => Excitation::MeanQuanta(n),
                (None, Some(x)) => Excitation::Amplitude(x),
                (Some(_), Some(_)) => {
                    return Err(usage("give only one of --mean-quanta and --amplitude-m"))
                }
                (None, None) => return Err(usage("missing --mean-quanta or --amplitude-m")),
            };
            let spec = PhysicalSpec {
                mass_g: required(a.mass_g, config.mass_g, "mass-g")?,
                omega_rad_s: required(a.omega, config.omega, "omega")?,
                time_s: required(a.time_s, config.time_s, "time-s")?,
                excitation,
                n_measurements: a.n.or(config.n).unwrap_or(1),
            };
            let r = physical_min_mass(&spec)?;
            Output { json: physical_json(&r), csv: physical_csv(&r) }
        }
    };

    let text = match format {
        Format::Json => pretty(&output.json),
        Format::Csv => output.csv,
    };
    match out {
        Some(path) => write_atomic(&path, &text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| usage(format!("cannot write output: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Numerical(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_angle;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("2*PI").unwrap(), 2.0 * PI);
        assert!(parse_angle("pi/").is_err());
        assert!(parse_angle("x").is_err());
        assert!(parse_angle("inf").is_err());
    }
}
