use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use tautline::analysis::{
    check_bv_convergence, check_certificate_reuse, check_fundamental_estimate, check_semigroup,
    check_vanishing_threshold, gnorm, value_function_sweep, Verdict,
};
use tautline::corpus::{log_uniform, random_signal, GridKind};
use tautline::oracles::{
    convex_energy_solve, dual_energy, qp_tube_derivative, rof_energy, DEFAULT_SUBDIVISIONS,
};
use tautline::taut_string::ContactSet;
use tautline::{
    cumulative, isotonic_fit, l2_distance, mean_zero_split, rof_denoise_with_tol, total_variation,
    verify_certificate, CertificateViolation, PiecewiseConstantSignal, PiecewiseLinearFunction,
};

use crate::error::{CliError, CliResult};
use crate::io::{format_g17, read_nodes, render_nodes, sibling, write_text, SignalFile};

fn check_lambda(lambda: f64) -> CliResult<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CliError::Parameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

fn load(path: &Path) -> CliResult<(SignalFile, PiecewiseConstantSignal)> {
    let file = SignalFile::read(path)?;
    let f = file
        .signal()
        .map_err(|e| CliError::parse(path, None, e.to_string()))?;
    Ok((file, f))
}

#[derive(Serialize)]
struct Diagnostics {
    lambda: f64,
    tv_f: f64,
    tv_u: f64,
    energy: f64,
    gnorm: f64,
    duality_gap: f64,
    relative_duality_gap: f64,
    knots: usize,
    contact_lower: Vec<[f64; 2]>,
    contact_upper: Vec<[f64; 2]>,
}

fn intervals(sets: &[ContactSet]) -> Vec<[f64; 2]> {
    sets.iter().map(|c| [c.start, c.end]).collect()
}

pub struct DenoiseArgs {
    pub input: PathBuf,
    pub lambda: f64,
    pub output: PathBuf,
    pub emit_string: bool,
    pub emit_certificate: bool,
    pub emit_tube: bool,
    pub diagnostics: Option<PathBuf>,
    pub tol: f64,
}

pub fn denoise(args: &DenoiseArgs) -> CliResult<()> {
    check_lambda(args.lambda)?;
    let (file, f) = load(&args.input)?;
    let res = rof_denoise_with_tol(&f, args.lambda, args.tol)?;
    file.with_values_of(&res.u).write(&args.output)?;

    if args.emit_string {
        write_text(&sibling(&args.output, "string"), &render_nodes(&res.string))?;
    }
    if args.emit_certificate {
        write_text(
            &sibling(&args.output, "certificate"),
            &render_nodes(&res.certificate),
        )?;
    }
    if args.emit_tube {
        let big_f = cumulative(&f);
        write_text(
            &sibling(&args.output, "tube_upper"),
            &render_nodes(&big_f.add_constant(args.lambda)),
        )?;
        write_text(
            &sibling(&args.output, "tube_lower"),
            &render_nodes(&big_f.add_constant(-args.lambda)),
        )?;
    }
    if let Some(path) = &args.diagnostics {
        // primal and dual evaluated on the mean-zero part
        let (f0, c) = mean_zero_split(&f);
        let primal = rof_energy(&f0, &res.u.add_constant(-c), args.lambda)?;
        let dual = dual_energy(&f0, &res.certificate, args.lambda)?;
        let gap = primal - dual;
        let diag = Diagnostics {
            lambda: args.lambda,
            tv_f: total_variation(&f),
            tv_u: res.tv,
            energy: res.energy,
            gnorm: gnorm(&f),
            duality_gap: gap,
            relative_duality_gap: gap.abs() / primal.abs().max(1.0),
            knots: res.knots.len(),
            contact_lower: intervals(&res.contact_lower),
            contact_upper: intervals(&res.contact_upper),
        };
        let mut text = serde_json::to_string_pretty(&diag).expect("diagnostics serialize");
        text.push('\n');
        write_text(path, &text)?;
    }
    Ok(())
}

pub fn isotonic(input: &Path, output: &Path, emit_envelope: bool) -> CliResult<()> {
    let (file, f) = load(input)?;
    let fit = isotonic_fit(&f);
    file.with_values_of(&fit.u).write(output)?;
    if emit_envelope {
        write_text(&sibling(output, "envelope"), &render_nodes(&fit.envelope))?;
        write_text(
            &sibling(output, "cumulative"),
            &render_nodes(&cumulative(&f)),
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Scale {
    Log,
    Linear,
}

pub fn lambda_grid(min: f64, max: f64, count: usize, scale: Scale) -> CliResult<Vec<f64>> {
    check_lambda(min)?;
    check_lambda(max)?;
    if count == 0 {
        return Err(CliError::Parameter("count must be at least 1".into()));
    }
    if count == 1 {
        return if min == max {
            Ok(vec![min])
        } else {
            Err(CliError::Parameter(
                "a single-point sweep needs lambda-min = lambda-max".into(),
            ))
        };
    }
    if min >= max {
        return Err(CliError::Parameter(format!(
            "need lambda-min < lambda-max, got {min} and {max}"
        )));
    }
    let steps = (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count)
        .map(|i| {
            let t = i as f64 / steps;
            match scale {
                Scale::Linear => min + (max - min) * t,
                Scale::Log => min * (max / min).powf(t),
            }
        })
        .collect();
    grid[count - 1] = max;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Parameter(
            "lambda grid is too fine to be strictly increasing".into(),
        ));
    }
    Ok(grid)
}

pub fn sweep(input: &Path, lambdas: &[f64], output: &Path, tol: f64) -> CliResult<()> {
    let (_, f) = load(input)?;
    let sweep = value_function_sweep(&f, lambdas, tol)?;
    let mut out = String::from("lambda,e,tv_u,fidelity,fidelity_over_lambda\n");
    for i in 0..sweep.lambdas.len() {
        let l = sweep.lambdas[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_g17(l),
            format_g17(sweep.e_values[i]),
            format_g17(sweep.j_values[i]),
            format_g17(sweep.fidelity[i]),
            format_g17(sweep.fidelity[i] / l)
        );
    }
    write_text(output, &out)
}

pub enum VerifySource {
    File(PathBuf),
    Random { count: usize },
}

pub struct VerifyArgs {
    pub source: VerifySource,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub certificate: Option<PathBuf>,
    pub denoised: Option<PathBuf>,
    pub report: PathBuf,
    pub tol: f64,
}

/// Largest input for the slow convex-energy spot check.
const ARC_LENGTH_MAX_PIECES: usize = 50;

struct Report {
    text: String,
    failures: Vec<String>,
}

impl Report {
    fn record(&mut self, case: &str, verdict: &Verdict) {
        for c in &verdict.checks {
            self.line(case, &c.name, c.passed, c.residual);
        }
    }

    fn line(&mut self, case: &str, check: &str, passed: bool, residual: f64) {
        let tag = if passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            self.text,
            "{tag} {case} {check} residual={}",
            format_g17(residual)
        );
        if !passed {
            self.failures.push(format!("{case} {check}"));
        }
    }
}

fn battery(
    report: &mut Report,
    case: &str,
    f: &PiecewiseConstantSignal,
    lambda: f64,
    rng: &mut ChaCha8Rng,
    tol: f64,
) -> CliResult<()> {
    let res = rof_denoise_with_tol(f, lambda, tol)?;
    let oracle = qp_tube_derivative(f, lambda)?;
    let gap = l2_distance(&res.u, &oracle)?;
    report.line(case, "oracle_equivalence", gap <= 1e-6, gap);

    let cert = verify_certificate(f, lambda, &res.u, &res.certificate, tol);
    report.line(
        case,
        "certificate",
        cert.is_ok(),
        cert.residual.max(cert.pairing_gap),
    );

    report.record(case, &check_fundamental_estimate(f, lambda, tol)?);
    report.record(case, &check_vanishing_threshold(f, lambda, tol)?);
    report.record(case, &check_bv_convergence(f, &[lambda], tol)?.verdict);
    let mu = lambda * rng.random_range(0.0..=1.0);
    report.record(case, &check_semigroup(f, lambda, mu, tol)?);
    let nu = lambda * rng.random_range(1e-3..=1.0);
    report.record(case, &check_certificate_reuse(f, lambda, nu, tol)?);

    if f.pieces() <= ARC_LENGTH_MAX_PIECES {
        let arc = |s: f64| s / (1.0 + s * s).sqrt();
        let w = convex_energy_solve(f, lambda, &arc, DEFAULT_SUBDIVISIONS, 1e-10)?;
        let exact = res.string.values_on(w.nodes());
        let gap = w
            .values()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.line(case, "arc_length_string", gap <= 1e-4, gap);
    } else {
        let _ = writeln!(
            report.text,
            "SKIP {case} arc_length_string pieces={}",
            f.pieces()
        );
    }
    Ok(())
}

fn supplied_pair(
    report: &mut Report,
    f: &PiecewiseConstantSignal,
    args: &VerifyArgs,
    lambda: f64,
) -> CliResult<()> {
    let xi: PiecewiseLinearFunction = match &args.certificate {
        Some(path) => read_nodes(path)?,
        None => rof_denoise_with_tol(f, lambda, args.tol)?.certificate,
    };
    let u = match &args.denoised {
        Some(path) => load(path)?.1,
        None => rof_denoise_with_tol(f, lambda, args.tol)?.u,
    };
    let verdict = verify_certificate(f, lambda, &u, &xi, args.tol);
    let failed = |name: &str| {
        verdict.violations.iter().any(|v| {
            matches!(
                (name, v),
                ("domain", CertificateViolation::Domain)
                    | ("residual", CertificateViolation::Residual(_))
                    | ("boundary", CertificateViolation::Boundary(_))
                    | ("sup_norm", CertificateViolation::SupNorm(_))
                    | ("pairing", CertificateViolation::Pairing(_))
            )
        })
    };
    if failed("domain") {
        report.line("supplied", "certificate.domain", false, f64::NAN);
        return Ok(());
    }
    for (name, residual) in [
        ("residual", verdict.residual),
        ("boundary", verdict.boundary),
        ("sup_norm", verdict.sup_norm),
        ("pairing", verdict.pairing_gap),
    ] {
        report.line(
            "supplied",
            &format!("certificate.{name}"),
            !failed(name),
            residual,
        );
    }
    Ok(())
}

/// Runs the check battery and writes the report. Returns an error naming the
/// first failed check when anything fails.
pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    if let Some(l) = args.lambda {
        check_lambda(l)?;
    }
    if (args.certificate.is_some() || args.denoised.is_some()) && args.lambda.is_none() {
        return Err(CliError::Parameter(
            "--certificate and --denoised need --lambda".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut report = Report {
        text: String::new(),
        failures: Vec::new(),
    };
    match &args.source {
        VerifySource::File(path) => {
            let (_, f) = load(path)?;
            let g = gnorm(&f);
            let lambdas = match args.lambda {
                Some(l) => vec![l],
                None if g > 0.0 => vec![0.01 * g, 0.1 * g, 0.5 * g, g, 1.5 * g],
                None => vec![1.0],
            };
            let _ = writeln!(
                report.text,
                "# input {} gnorm={}",
                path.display(),
                format_g17(g)
            );
            if args.certificate.is_some() || args.denoised.is_some() {
                supplied_pair(&mut report, &f, args, lambdas[0])?;
            } else {
                for l in lambdas {
                    battery(
                        &mut report,
                        &format!("lambda={}", format_g17(l)),
                        &f,
                        l,
                        &mut rng,
                        args.tol,
                    )?;
                }
            }
        }
        VerifySource::Random { count } => {
            let _ = writeln!(
                report.text,
                "# random corpus count={count} seed={}",
                args.seed
            );
            for i in 0..*count {
                let n = rng.random_range(2..=60);
                let grid = if i % 2 == 0 {
                    GridKind::Uniform
                } else {
                    GridKind::Jittered
                };
                let f = random_signal(&mut rng, n, grid);
                let g = gnorm(&f);
                let lambda = args
                    .lambda
                    .unwrap_or_else(|| log_uniform(&mut rng, 1e-3 * g, 2.0 * g));
                battery(
                    &mut report,
                    &format!("signal={i}"),
                    &f,
                    lambda,
                    &mut rng,
                    args.tol,
                )?;
            }
        }
    }
    let _ = writeln!(report.text, "# {} failed", report.failures.len());
    write_text(&args.report, &report.text)?;
    match report.failures.first() {
        None => Ok(()),
        Some(first) => Err(CliError::Verification(format!(
            "{} check(s) failed, first: {first}",
            report.failures.len()
        ))),
    }
}
