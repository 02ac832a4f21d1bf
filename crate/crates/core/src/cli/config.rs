use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;

use super::{CliError, Command, ExperimentConfig, OutputFormat, OutputTarget};
use crate::entanglement::DEFAULT_S_CAP;
use crate::phase::DEFAULT_THETA0;
use crate::qcore::{DeformationParams, SqrtBranch};

#[derive(Parser, Debug)]
#[command(
    name = "qpb-sim",
    version,
    about = "Phase and entanglement experiments in truncated q-deformed Fock spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Phase-basis probabilities of the PB and qPB coherent states.
    PhaseDist(Flags),
    /// Entanglement of the squeezed states versus r.
    EntropyCurve(Flags),
    /// Smallest even S reproducing the untruncated entropy within --tol.
    SRequired(Flags),
    /// Entropy over log2(S+1) versus S at fixed r.
    Saturation(Flags),
    /// Run the invariant suites and write a JSON report.
    Verify(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Truncations: comma list of even integers or a:b:step ranges.
    #[arg(long = "S", value_name = "LIST")]
    s: Option<String>,
    /// Squeezing parameters: comma list of reals or a:b:step ranges.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    r: Option<String>,
    /// Coherent amplitude, e.g. 5, 3-2i, 0.5+1.5i.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Phase window start.
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<String>,
    /// Relative entropy tolerance for s-required.
    #[arg(long)]
    tol: Option<String>,
    /// Square-root branch: modulus or principal.
    #[arg(long)]
    branch: Option<String>,
    /// Upper bound on S for s-required.
    #[arg(long)]
    cap: Option<String>,
    /// Output file; '-' writes to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// TOML file with any of the keys above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ListSpec<T> {
    One(T),
    Many(Vec<T>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AlphaSpec {
    Real(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "S", alias = "s")]
    s: Option<ListSpec<usize>>,
    r: Option<ListSpec<f64>>,
    alpha: Option<AlphaSpec>,
    theta0: Option<f64>,
    #[serde(alias = "tolerance")]
    tol: Option<f64>,
    branch: Option<SqrtBranch>,
    cap: Option<usize>,
    output: Option<PathBuf>,
    format: Option<OutputFormat>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_scalar<T: FromStr>(text: &str, what: &str) -> Result<T, CliError> {
    text.trim()
        .parse()
        .map_err(|_| usage(format!("malformed {what}: '{text}'")))
}

fn parse_alpha(text: &str) -> Result<Complex64, CliError> {
    let z: Complex64 = parse_scalar(&text.replace(' ', ""), "alpha")?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(usage(format!("alpha must be finite, got '{text}'")));
    }
    Ok(z)
}

/// Snaps `a + i*step` onto a 1e-12 grid when that moves it by a negligible
/// fraction of the step, so `0:1:0.1` yields `0.3` rather than
/// `0.30000000000000004`.
fn range_point(a: f64, step: f64, i: usize) -> f64 {
    let v = a + i as f64 * step;
    let snapped = (v * 1e12).round() / 1e12;
    if (snapped - v).abs() <= 1e-9 * step {
        snapped
    } else {
        v
    }
}

/// Parses `"0.5,1,1.5"` or `"0:6:0.1"` (inclusive) or any comma mix of both.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_scalar::<f64>(x, "real")?),
            [a, b, step] => {
                let (a, b, step): (f64, f64, f64) = (
                    parse_scalar(a, "range start")?,
                    parse_scalar(b, "range end")?,
                    parse_scalar(step, "range step")?,
                );
                if !(step > 0.0 && b >= a && (b - a) / step < 1e7) {
                    return Err(usage(format!("bad range '{item}'")));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| range_point(a, step, i)));
            }
            _ => return Err(usage(format!("malformed list item '{item}'"))),
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(usage(format!("non-finite value in '{text}'")));
    }
    Ok(out)
}

/// Integer counterpart of [`parse_real_list`].
pub fn parse_int_list(text: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_scalar::<usize>(x, "integer")?),
            [a, b, step] => {
                let (a, b, step): (usize, usize, usize) = (
                    parse_scalar(a, "range start")?,
                    parse_scalar(b, "range end")?,
                    parse_scalar(step, "range step")?,
                );
                if step == 0 || b < a {
                    return Err(usage(format!("bad range '{item}'")));
                }
                out.extend((a..=b).step_by(step));
            }
            _ => return Err(usage(format!("malformed list item '{item}'"))),
        }
    }
    Ok(out)
}

fn list_from_file<T: Copy>(
    spec: ListSpec<T>,
    parse: fn(&str) -> Result<Vec<T>, CliError>,
) -> Result<Vec<T>, CliError> {
    match spec {
        ListSpec::One(x) => Ok(vec![x]),
        ListSpec::Many(v) => Ok(v),
        ListSpec::Text(t) => parse(&t),
    }
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("invalid config file {}: {e}", path.display())))
}

fn defaults(command: Command) -> ExperimentConfig {
    let (s_list, r_grid) = match command {
        Command::PhaseDist => (vec![30, 60, 100, 200, 500], vec![]),
        Command::EntropyCurve => (
            vec![30, 100],
            (0..=60).map(|i| range_point(0.0, 0.1, i)).collect(),
        ),
        Command::SRequired => (vec![], vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]),
        Command::Saturation => ((10..=400).step_by(10).collect(), vec![20.0]),
        Command::Verify => (vec![4, 30, 100], vec![]),
    };
    ExperimentConfig {
        command,
        alpha: Complex64::new(5.0, 0.0),
        theta0: DEFAULT_THETA0,
        r_grid,
        s_list,
        tolerance: 0.005,
        branch: SqrtBranch::default(),
        output: OutputTarget::File(PathBuf::new()),
        format: if command == Command::Verify {
            OutputFormat::Json
        } else {
            OutputFormat::Csv
        },
        cap: DEFAULT_S_CAP,
    }
}

fn validate(config: &ExperimentConfig) -> Result<(), CliError> {
    let uses_s = config.command != Command::SRequired;
    let uses_r = matches!(
        config.command,
        Command::EntropyCurve | Command::SRequired | Command::Saturation
    );
    if uses_s {
        if config.s_list.is_empty() {
            return Err(usage("S list is empty"));
        }
        for &s in &config.s_list {
            DeformationParams::new(s)?;
        }
    }
    if uses_r {
        if config.r_grid.is_empty() {
            return Err(usage("r grid is empty"));
        }
        if let Some(r) = config.r_grid.iter().find(|r| !(**r >= 0.0)) {
            return Err(usage(format!("r must be nonnegative, got {r}")));
        }
    }
    match config.command {
        Command::SRequired => {
            if config.r_grid.contains(&0.0) {
                return Err(usage("s-required needs r > 0"));
            }
            if !(config.tolerance > 0.0 && config.tolerance < 1.0) {
                return Err(usage(format!(
                    "tolerance must lie in (0, 1), got {}",
                    config.tolerance
                )));
            }
            if config.cap < 2 {
                return Err(usage("cap must be at least 2"));
            }
        }
        Command::Saturation if config.r_grid.len() != 1 => {
            return Err(usage("saturation takes a single r value"));
        }
        Command::Verify if config.format != OutputFormat::Json => {
            return Err(usage(
                "verify writes a JSON report; --format csv is not supported",
            ));
        }
        _ => {}
    }
    if !config.theta0.is_finite() {
        return Err(usage("theta0 must be finite"));
    }
    Ok(())
}

/// Builds the configuration from `argv` (program name first) and an optional
/// TOML file. A `--config` flag in `argv` takes precedence over `config_file`.
pub fn parse_config<I, T>(argv: I, config_file: Option<&Path>) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (command, flags) = match cli.command {
        Sub::PhaseDist(f) => (Command::PhaseDist, f),
        Sub::EntropyCurve(f) => (Command::EntropyCurve, f),
        Sub::SRequired(f) => (Command::SRequired, f),
        Sub::Saturation(f) => (Command::Saturation, f),
        Sub::Verify(f) => (Command::Verify, f),
    };
    let mut config = defaults(command);
    let mut output = None;

    let file_path = flags.config.as_deref().or(config_file);
    if let Some(path) = file_path {
        let file = read_file_config(path)?;
        if let Some(s) = file.s {
            config.s_list = list_from_file(s, parse_int_list)?;
        }
        if let Some(r) = file.r {
            config.r_grid = list_from_file(r, parse_real_list)?;
        }
        match file.alpha {
            Some(AlphaSpec::Real(x)) => config.alpha = Complex64::new(x, 0.0),
            Some(AlphaSpec::Text(t)) => config.alpha = parse_alpha(&t)?,
            None => {}
        }
        config.theta0 = file.theta0.unwrap_or(config.theta0);
        config.tolerance = file.tol.unwrap_or(config.tolerance);
        config.branch = file.branch.unwrap_or(config.branch);
        config.cap = file.cap.unwrap_or(config.cap);
        config.format = file.format.unwrap_or(config.format);
        output = file.output;
    }

    if let Some(s) = &flags.s {
        config.s_list = parse_int_list(s)?;
    }
    if let Some(r) = &flags.r {
        config.r_grid = parse_real_list(r)?;
    }
    if let Some(a) = &flags.alpha {
        config.alpha = parse_alpha(a)?;
    }
    if let Some(t) = &flags.theta0 {
        config.theta0 = parse_scalar(t, "theta0")?;
    }
    if let Some(t) = &flags.tol {
        config.tolerance = parse_scalar(t, "tolerance")?;
    }
    if let Some(b) = &flags.branch {
        config.branch = b.parse().map_err(usage)?;
    }
    if let Some(c) = &flags.cap {
        config.cap = parse_scalar(c, "cap")?;
    }
    if let Some(f) = &flags.format {
        config.format = f.parse().map_err(usage)?;
    }
    if flags.output.is_some() {
        output = flags.output;
    }

    config.output = match output {
        Some(p) if p.as_os_str() == "-" => OutputTarget::Stdout,
        Some(p) => OutputTarget::File(p),
        None => OutputTarget::File(PathBuf::from(format!(
            "{}.{}",
            command.name(),
            config.format.extension()
        ))),
    };
    validate(&config)?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<ExperimentConfig, CliError> {
        parse_config(
            std::iter::once("qpb-sim").chain(args.split_whitespace()),
            None,
        )
    }

    #[test]
    fn defaults_for_phase_dist() {
        let c = parse("phase-dist --S 500").unwrap();
        assert_eq!(c.command, Command::PhaseDist);
        assert_eq!(c.alpha, Complex64::new(5.0, 0.0));
        assert_eq!(c.theta0, -std::f64::consts::PI);
        assert_eq!(c.s_list, vec![500]);
        assert_eq!(c.branch, SqrtBranch::Modulus);
        assert_eq!(c.output, OutputTarget::File("phase-dist.csv".into()));
    }

    #[test]
    fn r_list_and_range() {
        let c = parse("s-required --r 0.5,1,1.5 --tol 0.005").unwrap();
        assert_eq!(c.r_grid, vec![0.5, 1.0, 1.5]);
        assert_eq!(c.tolerance, 0.005);
        let c = parse("entropy-curve --r 0:1:0.1").unwrap();
        assert_eq!(c.r_grid.len(), 11);
        assert_eq!(c.r_grid[3], 0.3);
        assert_eq!(c.r_grid[10], 1.0);
        let d = parse("entropy-curve").unwrap();
        assert_eq!(d.r_grid.len(), 61);
        assert_eq!(d.r_grid[60], 6.0);
    }

    #[test]
    fn invalid_inputs_exit_2() {
        for args in [
            "entropy-curve --S 31",
            "phase-dist --S 0",
            "phase-dist --S abc",
            "phase-dist --alpha 5+",
            "s-required --r 0,1",
            "entropy-curve --r -1",
            "saturation --r 1,2",
            "verify --format csv",
            "phase-dist --bogus 1",
        ] {
            let e = parse(args).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{args}: {e}");
        }
        let e = parse("entropy-curve --S 31").unwrap_err();
        assert!(e.to_string().contains("even"), "{e}");
    }

    #[test]
    fn alpha_forms() {
        assert_eq!(parse_alpha("5+0i").unwrap(), Complex64::new(5.0, 0.0));
        assert_eq!(parse_alpha("3-2i").unwrap(), Complex64::new(3.0, -2.0));
        assert_eq!(parse_alpha("-1.5").unwrap(), Complex64::new(-1.5, 0.0));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(
            &path,
            "S = [10, 20]\nr = \"1:2:0.5\"\nalpha = \"2+1i\"\nbranch = \"principal\"\ntol = 0.01\n",
        )
        .unwrap();
        let argv = ["qpb-sim", "entropy-curve", "--S", "40"];
        let c = parse_config(argv, Some(&path)).unwrap();
        assert_eq!(c.s_list, vec![40]);
        assert_eq!(c.r_grid, vec![1.0, 1.5, 2.0]);
        assert_eq!(c.alpha, Complex64::new(2.0, 1.0));
        assert_eq!(c.branch, SqrtBranch::Principal);
        assert_eq!(c.tolerance, 0.01);

        std::fs::write(&path, "unknown_key = 1\n").unwrap();
        let e = parse_config(["qpb-sim", "verify"], Some(&path)).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn int_ranges() {
        assert_eq!(parse_int_list("10:40:10").unwrap(), vec![10, 20, 30, 40]);
        assert_eq!(parse_int_list("4, 30,100").unwrap(), vec![4, 30, 100]);
        assert!(parse_int_list("4:2:1").is_err());
    }
}
