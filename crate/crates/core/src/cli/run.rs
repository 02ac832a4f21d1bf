use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{CliError, Command, ExperimentConfig, OutputFormat, OutputTarget};
use crate::entanglement::{entropy, entropy_sg_analytic, s_required, saturation_ratio, Family};
use crate::operators::{verify_algebra, Residual};
use crate::phase::{distribution_shift_check, phase_amplitudes};
use crate::qcore::{kronecker_comb, DeformationParams, SqrtBranch};
use crate::states::{
    coherent_pb, coherent_qpb, k_series_closed, k_series_direct, squeezed_qpb,
    squeezed_qpb_truncated, SqueezeInput,
};

/// Worker-count cap for grid evaluation; unset or 0 means one per core.
pub const THREADS_ENV: &str = "QPB_SIM_THREADS";

const ALGEBRA_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-12;
const FIDELITY_TOL: f64 = 1e-6;
const SUITE_R: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub passed: bool,
    /// `S=<s>:<check>` for every failed check.
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

trait CsvRow {
    const HEADER: &'static str;
    fn write(&self, out: &mut String);
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct PhaseRow {
    #[serde(rename = "S")]
    s: usize,
    m: usize,
    theta_m: f64,
    prob_pb: f64,
    prob_qpb: f64,
}

impl CsvRow for PhaseRow {
    const HEADER: &'static str = "S,m,theta_m,prob_pb,prob_qpb";
    fn write(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            self.s,
            self.m,
            real(self.theta_m),
            real(self.prob_pb),
            real(self.prob_qpb)
        );
    }
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct EntropyRow {
    r: f64,
    S: usize,
    E_sg: f64,
    E_pb: f64,
    E_qpb: f64,
}

impl CsvRow for EntropyRow {
    const HEADER: &'static str = "r,S,E_sg,E_pb,E_qpb";
    fn write(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            real(self.r),
            self.S,
            real(self.E_sg),
            real(self.E_pb),
            real(self.E_qpb)
        );
    }
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct SRequiredRow {
    r: f64,
    S_pb: usize,
    S_qpb: usize,
}

impl CsvRow for SRequiredRow {
    const HEADER: &'static str = "r,S_pb,S_qpb";
    fn write(&self, out: &mut String) {
        let _ = writeln!(out, "{},{},{}", real(self.r), self.S_pb, self.S_qpb);
    }
}

#[derive(Serialize)]
struct SaturationRow {
    #[serde(rename = "S")]
    s: usize,
    ratio_pb: f64,
    ratio_qpb: f64,
}

impl CsvRow for SaturationRow {
    const HEADER: &'static str = "S,ratio_pb,ratio_qpb";
    fn write(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{}",
            self.s,
            real(self.ratio_pb),
            real(self.ratio_qpb)
        );
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    residual: Residual,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct Suite {
    S: usize,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct VerifyReport {
    branch: SqrtBranch,
    theta0: f64,
    alpha: [f64; 2],
    passed: bool,
    suites: Vec<Suite>,
}

fn render_rows<R: CsvRow + Serialize>(
    rows: &[R],
    format: OutputFormat,
) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::with_capacity(64 * (rows.len() + 1));
            out.push_str(R::HEADER);
            out.push('\n');
            for row in rows {
                row.write(&mut out);
            }
            Ok(out)
        }
        OutputFormat::Json => to_json(rows),
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))
}

fn params(s: usize) -> Result<DeformationParams, CliError> {
    Ok(DeformationParams::new(s)?)
}

fn collect<T>(results: Vec<Result<T, CliError>>) -> Result<Vec<T>, CliError> {
    results.into_iter().collect()
}

fn phase_rows(config: &ExperimentConfig) -> Result<Vec<PhaseRow>, CliError> {
    let per_s = config
        .s_list
        .par_iter()
        .map(|&s| {
            let p = params(s)?;
            let pb = phase_amplitudes(&coherent_pb(config.alpha, &p), config.theta0);
            let qpb = phase_amplitudes(
                &coherent_qpb(config.alpha, &p, config.branch),
                config.theta0,
            );
            Ok((0..p.dim())
                .map(|m| PhaseRow {
                    s,
                    m,
                    theta_m: pb.thetas[m],
                    prob_pb: pb.probabilities[m],
                    prob_qpb: qpb.probabilities[m],
                })
                .collect::<Vec<_>>())
        })
        .collect();
    Ok(collect(per_s)?.into_iter().flatten().collect())
}

fn entropy_rows(config: &ExperimentConfig) -> Result<Vec<EntropyRow>, CliError> {
    let points: Vec<(usize, f64)> = config
        .s_list
        .iter()
        .flat_map(|&s| config.r_grid.iter().map(move |&r| (s, r)))
        .collect();
    collect(
        points
            .par_iter()
            .map(|&(s, r)| {
                let p = params(s)?;
                Ok(EntropyRow {
                    r,
                    S: s,
                    E_sg: entropy_sg_analytic(r),
                    E_pb: entropy(Family::Pb, r, &p)?,
                    E_qpb: entropy(Family::Qpb, r, &p)?,
                })
            })
            .collect(),
    )
}

fn s_required_rows(config: &ExperimentConfig) -> Result<Vec<SRequiredRow>, CliError> {
    let jobs: Vec<(f64, Family)> = config
        .r_grid
        .iter()
        .flat_map(|&r| [(r, Family::Pb), (r, Family::Qpb)])
        .collect();
    let found = collect(
        jobs.par_iter()
            .map(|&(r, family)| Ok(s_required(r, config.tolerance, family, config.cap)?))
            .collect(),
    )?;
    Ok(config
        .r_grid
        .iter()
        .zip(found.chunks(2))
        .map(|(&r, pair)| SRequiredRow {
            r,
            S_pb: pair[0],
            S_qpb: pair[1],
        })
        .collect())
}

fn saturation_rows(config: &ExperimentConfig) -> Result<Vec<SaturationRow>, CliError> {
    let r = config.r_grid[0];
    collect(
        config
            .s_list
            .par_iter()
            .map(|&s| {
                let p = params(s)?;
                Ok(SaturationRow {
                    s,
                    ratio_pb: saturation_ratio(r, &p, Family::Pb)?,
                    ratio_qpb: saturation_ratio(r, &p, Family::Qpb)?,
                })
            })
            .collect(),
    )
}

fn check(name: &str, residual: Residual, tolerance: f64) -> Check {
    let passed = match residual {
        Residual::Value(v) => v <= tolerance,
        Residual::NotApplicable => true,
    };
    Check {
        name: name.to_string(),
        residual,
        tolerance,
        passed,
    }
}

fn value_check(name: &str, value: f64, tolerance: f64) -> Check {
    check(name, Residual::Value(value), tolerance)
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    // NaN must fail the check, so it is propagated rather than dropped
    values.fold(0.0, |m, v| {
        if v.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(v)
        }
    })
}

fn verify_suite(s: usize, config: &ExperimentConfig) -> Result<Suite, CliError> {
    let p = params(s)?;
    let dim = p.dim();
    let n_dim = dim as f64;
    let mut checks = Vec::new();

    let span = 2 * dim as i64;
    let comb = max_of((-span..=span).map(|d| {
        let exact = if d % dim as i64 == 0 { n_dim } else { 0.0 };
        (kronecker_comb(d, &p) - exact).abs()
    }));
    checks.push(value_check("kronecker_comb", comb, ALGEBRA_TOL * n_dim));

    let mut resum = 0.0f64;
    for r in SUITE_R {
        let b = SqueezeInput::new(r, &p)?.b;
        for n in 0..=s {
            let closed = k_series_closed(n, b, &p)?;
            let direct = k_series_direct(n, b, &p)?;
            resum = max_of([resum, ((closed - direct) / direct).abs()].into_iter());
        }
    }
    checks.push(value_check("k_series_resummation", resum, ALGEBRA_TOL));

    let report = verify_algebra(&p, config.theta0, config.branch);
    for (name, residual) in &report.residuals {
        checks.push(check(name, *residual, ALGEBRA_TOL));
    }

    let pb = coherent_pb(config.alpha, &p);
    let qpb = coherent_qpb(config.alpha, &p, config.branch);
    checks.push(value_check(
        "coherent_normalization",
        max_of(
            [pb.norm_sqr(), qpb.norm_sqr()]
                .map(|x| (x - 1.0).abs())
                .into_iter(),
        ),
        UNIT_TOL,
    ));
    let parseval = max_of(
        [&pb, &qpb]
            .map(|st| (phase_amplitudes(st, config.theta0).total_probability() - 1.0).abs())
            .into_iter(),
    );
    checks.push(value_check("phase_parseval", parseval, UNIT_TOL));

    let shifted = config.theta0 + 3.0 * 2.0 * PI / n_dim;
    let shift = max_of(
        [&pb, &qpb]
            .into_iter()
            .map(|st| distribution_shift_check(st, config.theta0, shifted))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter(),
    );
    checks.push(value_check("phase_shift_invariance", shift, UNIT_TOL));

    let squeeze_fidelity = if s >= 30 {
        let mut worst = 0.0f64;
        for r in SUITE_R {
            let a = squeezed_qpb(r, &p)?;
            let b = squeezed_qpb_truncated(r, &p)?;
            worst = max_of([worst, 1.0 - a.fidelity(&b)].into_iter());
        }
        Residual::Value(worst)
    } else {
        Residual::NotApplicable
    };
    checks.push(check(
        "squeezed_truncation_fidelity",
        squeeze_fidelity,
        FIDELITY_TOL,
    ));

    Ok(Suite { S: s, checks })
}

fn verify(config: &ExperimentConfig) -> Result<(String, RunOutcome), CliError> {
    let suites = collect(
        config
            .s_list
            .par_iter()
            .map(|&s| verify_suite(s, config))
            .collect(),
    )?;
    let failures: Vec<String> = suites
        .iter()
        .flat_map(|suite| {
            suite
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(move |c| format!("S={}:{}", suite.S, c.name))
        })
        .collect();
    let passed = failures.is_empty();
    let report = VerifyReport {
        branch: config.branch,
        theta0: config.theta0,
        alpha: [config.alpha.re, config.alpha.im],
        passed,
        suites,
    };
    Ok((to_json(&report)?, RunOutcome { passed, failures }))
}

fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a nonnegative integer, got '{v}'"
            ))
        }),
        _ => Ok(0),
    }
}

fn write_output(target: &OutputTarget, content: &str) -> Result<(), CliError> {
    match target {
        OutputTarget::Stdout => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })
        }
        OutputTarget::File(path) => std::fs::write(path, content).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
    }
}

/// Evaluates the configured grid and writes its data file. Verification
/// failures are reported in the outcome; everything else is an error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;

    let (content, outcome) = pool.install(|| -> Result<_, CliError> {
        let ok = RunOutcome {
            passed: true,
            failures: vec![],
        };
        Ok(match config.command {
            Command::PhaseDist => (render_rows(&phase_rows(config)?, config.format)?, ok),
            Command::EntropyCurve => (render_rows(&entropy_rows(config)?, config.format)?, ok),
            Command::SRequired => (render_rows(&s_required_rows(config)?, config.format)?, ok),
            Command::Saturation => (render_rows(&saturation_rows(config)?, config.format)?, ok),
            Command::Verify => verify(config)?,
        })
    })?;
    write_output(&config.output, &content)?;
    Ok(outcome)
}
