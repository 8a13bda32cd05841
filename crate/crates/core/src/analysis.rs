//! Executable diagnostics for the structural properties of ROF denoising:
//! the vanishing threshold, the value function, the jump bound, convergence
//! as `λ → 0`, the semigroup law and certificate reuse.
//!
//! Every check returns a [`Verdict`] carrying the measured residuals, so a
//! failure can be inspected rather than just reported.

use std::fmt;

use crate::error::{Error, Result};
use crate::signal::{
    cumulative, jump_measure, l2_distance, l2_norm, mean_zero_split, pairing_with_certificate,
    total_variation, PiecewiseConstantSignal,
};
use crate::taut_string::{chord_deviation, rof_denoise, verify_certificate, DenoiseResult};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

/// A named list of pass/fail checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Verdict {
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, residual: f64) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            residual,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Residual of the named check, if present.
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.residual)
    }

    pub fn extend(&mut self, other: Verdict) {
        self.checks.extend(other.checks);
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {} (residual {:e})", c.name, c.residual)?;
        }
        Ok(())
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Meyer's G-norm of `f`, which in one dimension is `‖F₀‖_∞` for the
/// cumulative signal of the mean-zero part. Denoising returns the constant
/// `mean(f)` exactly when `λ` reaches it.
pub fn gnorm(f: &PiecewiseConstantSignal) -> f64 {
    // F₀(x) = F(x) − mean·(x − a): the deviation of F from its chord
    chord_deviation(f, &cumulative(f))
}

/// The vanishing-threshold properties, applied to the mean-zero part:
///
/// - `a`: `u_λ` is constant iff `λ ≥ ‖F₀‖_∞` (up to `tol`),
/// - `b`: below the threshold `‖F₀ − W₀‖_∞ = λ`,
/// - `c`: `‖W₀‖_∞ = max(0, ‖F₀‖_∞ − λ)`.
///
/// `u_λ` counts as constant when `J(u_λ) ≤ tol · max(1, J(f))`.
pub fn check_vanishing_threshold(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    tol: f64,
) -> Result<Verdict> {
    positive("lambda", lambda)?;
    let g = gnorm(f);
    let res = rof_denoise(f, lambda)?;
    let mut verdict = Verdict::default();

    let tv_f = total_variation(f);
    let is_constant = res.tv <= tol * tv_f.max(1.0);
    let expect_constant = lambda >= g - tol * g.max(1.0);
    verdict.push("threshold.a", is_constant == expect_constant, res.tv);

    let (f0, _) = mean_zero_split(f);
    let big_f0 = cumulative(&f0);
    let w0 = rof_denoise(&f0, lambda)?.string;
    if lambda < g {
        let gap = big_f0.sub(&w0)?.linf_norm();
        let residual = (gap - lambda).abs();
        verdict.push("threshold.b", residual <= tol, residual);
    }
    let residual = (w0.linf_norm() - (g - lambda).max(0.0)).abs();
    verdict.push("threshold.c", residual <= tol, residual);
    Ok(verdict)
}

/// Denoising results over an increasing list of `λ`, with the value function
/// `e(λ) = E_λ(u_λ)` and its two ingredients.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSweep {
    pub lambdas: Vec<f64>,
    pub results: Vec<DenoiseResult>,
    pub e_values: Vec<f64>,
    pub j_values: Vec<f64>,
    /// `‖f − u_λ‖²`.
    pub fidelity: Vec<f64>,
    /// Largest concavity defect `ē_i − e(λ_i)`, where `ē_i` interpolates the
    /// two neighbours linearly.
    pub concavity_defect: f64,
}

/// Runs the denoiser over `lambdas` and checks the value-function
/// properties: `e` nondecreasing and concave, `J(u_λ)` nonincreasing,
/// `‖f − u_λ‖` nondecreasing, `e(λ) ≤ λJ(f)`, and the plateau
/// `e(λ) = ½‖f₀‖²` once `λ ≥ ‖F₀‖_∞`. Any violation beyond `tol · scale`
/// is an error.
pub fn value_function_sweep(
    f: &PiecewiseConstantSignal,
    lambdas: &[f64],
    tol: f64,
) -> Result<LambdaSweep> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda list".into()));
    }
    for &l in lambdas {
        positive("lambda", l)?;
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "lambdas must be strictly increasing".into(),
        ));
    }

    let mut results = Vec::with_capacity(lambdas.len());
    let mut e_values = Vec::with_capacity(lambdas.len());
    let mut j_values = Vec::with_capacity(lambdas.len());
    let mut fidelity = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let res = rof_denoise(f, l)?;
        e_values.push(res.energy);
        j_values.push(res.tv);
        fidelity.push(l2_distance(f, &res.u)?.powi(2));
        results.push(res);
    }

    let tv_f = total_variation(f);
    let (f0, _) = mean_zero_split(f);
    let plateau = 0.5 * l2_norm(&f0).powi(2);
    let g = gnorm(f);
    let e_scale = e_values.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let j_scale = tv_f.max(1.0);
    let fail = |msg: String| Err(Error::SweepInvariant(msg));

    for i in 1..lambdas.len() {
        if e_values[i] < e_values[i - 1] - tol * e_scale {
            return fail(format!(
                "e decreases between lambda {} and {}",
                lambdas[i - 1],
                lambdas[i]
            ));
        }
        if j_values[i] > j_values[i - 1] + tol * j_scale {
            return fail(format!(
                "J(u) increases between lambda {} and {}",
                lambdas[i - 1],
                lambdas[i]
            ));
        }
        if fidelity[i] < fidelity[i - 1] - tol * e_scale {
            return fail(format!(
                "fidelity decreases between lambda {} and {}",
                lambdas[i - 1],
                lambdas[i]
            ));
        }
    }
    let mut concavity_defect = 0.0f64;
    for i in 1..lambdas.len().saturating_sub(1) {
        let (l0, l1, l2) = (lambdas[i - 1], lambdas[i], lambdas[i + 1]);
        let chord = (e_values[i - 1] * (l2 - l1) + e_values[i + 1] * (l1 - l0)) / (l2 - l0);
        let defect = chord - e_values[i];
        concavity_defect = concavity_defect.max(defect);
        if defect > tol * e_scale {
            return fail(format!(
                "e is not concave at lambda {l1} (defect {defect:e})"
            ));
        }
    }
    for (i, &l) in lambdas.iter().enumerate() {
        if e_values[i] > l * tv_f + tol * e_scale {
            return fail(format!("e({l}) exceeds lambda J(f)"));
        }
        if l >= g && (e_values[i] - plateau).abs() > tol * e_scale {
            return fail(format!(
                "e({l}) = {} is off the plateau {plateau}",
                e_values[i]
            ));
        }
    }

    Ok(LambdaSweep {
        lambdas: lambdas.to_vec(),
        results,
        e_values,
        j_values,
        fidelity,
        concavity_defect,
    })
}

/// `−(f′)⁻ ≤ u_λ′ ≤ (f′)⁺` for jump measures: every jump of `u_λ` sits on a
/// jump of `f`, has the same sign and is no larger. Jumps of `u_λ` below
/// `tol · max(1, ‖f‖_∞)` are treated as rounding noise.
pub fn check_fundamental_estimate(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    tol: f64,
) -> Result<Verdict> {
    positive("lambda", lambda)?;
    let res = rof_denoise(f, lambda)?;
    Ok(fundamental_estimate_verdict(f, &res.u, tol))
}

pub(crate) fn fundamental_estimate_verdict(
    f: &PiecewiseConstantSignal,
    u: &PiecewiseConstantSignal,
    tol: f64,
) -> Verdict {
    let mu_f = jump_measure(f);
    let mu_u = jump_measure(u);
    let noise = tol * f.sup_norm().max(1.0);
    let (mut support, mut sign, mut magnitude) = (0.0f64, 0.0f64, 0.0f64);
    for atom in mu_u.atoms().iter().filter(|a| a.mass.abs() > noise) {
        let mf = mu_f.mass_at(atom.location);
        if mf == 0.0 {
            support = support.max(atom.mass.abs());
        } else if mf.signum() != atom.mass.signum() {
            sign = sign.max(atom.mass.abs());
        }
        magnitude = magnitude.max(atom.mass.abs() - mf.abs());
    }
    let mut verdict = Verdict::default();
    verdict.push("fundamental.support", support == 0.0, support);
    verdict.push("fundamental.sign", sign == 0.0, sign);
    verdict.push(
        "fundamental.magnitude",
        magnitude <= tol,
        magnitude.max(0.0),
    );
    verdict
}

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub lambda: f64,
    /// `‖u_λ − f‖²`.
    pub fidelity: f64,
    /// `2λ(J(f) − J(u_λ))`.
    pub bound: f64,
    pub tv_u: f64,
    /// `J(f − u_λ)`.
    pub tv_residual: f64,
    /// `‖u_λ − f‖² / λ`, which should decay as `λ → 0`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub tv_f: f64,
    pub rows: Vec<ConvergenceRow>,
    pub verdict: Verdict,
}

/// For each `λ`: `‖u_λ − f‖² ≤ 2λ(J(f) − J(u_λ))`, `J(u_λ) ≤ J(f)` and
/// `J(f − u_λ) = J(f) − J(u_λ)`, each to `tol · max(1, J(f))`.
pub fn check_bv_convergence(
    f: &PiecewiseConstantSignal,
    lambdas: &[f64],
    tol: f64,
) -> Result<ConvergenceReport> {
    let tv_f = total_variation(f);
    let scale = tv_f.max(1.0);
    let mut rows = Vec::with_capacity(lambdas.len());
    let (mut worst_bound, mut worst_tv, mut worst_split) = (0.0f64, 0.0f64, 0.0f64);
    for &lambda in lambdas {
        positive("lambda", lambda)?;
        let res = rof_denoise(f, lambda)?;
        let residual = f.sub(&res.u)?;
        let fidelity = l2_norm(&residual).powi(2);
        let bound = 2.0 * lambda * (tv_f - res.tv);
        let tv_residual = total_variation(&residual);
        worst_bound = worst_bound.max(fidelity - bound);
        worst_tv = worst_tv.max(res.tv - tv_f);
        worst_split = worst_split.max((tv_residual - (tv_f - res.tv)).abs());
        rows.push(ConvergenceRow {
            lambda,
            fidelity,
            bound,
            tv_u: res.tv,
            tv_residual,
            ratio: fidelity / lambda,
        });
    }
    let mut verdict = Verdict::default();
    verdict.push(
        "convergence.bound",
        worst_bound <= tol * scale,
        worst_bound.max(0.0),
    );
    verdict.push("convergence.tv", worst_tv <= tol * scale, worst_tv.max(0.0));
    verdict.push("convergence.split", worst_split <= tol * scale, worst_split);
    Ok(ConvergenceReport {
        tv_f,
        rows,
        verdict,
    })
}

fn quotient(f: &PiecewiseConstantSignal, lambda: f64) -> Result<PiecewiseConstantSignal> {
    let u = rof_denoise(f, lambda)?.u;
    Ok(f.sub(&u)?.scale(1.0 / lambda))
}

/// Frozen-certificate test: `(f − u_{λ₁})/λ₁` and `(f − u_{λ₂})/λ₂` agree
/// in `L²` to `tol`, i.e. `ξ_{λ₁}′ = ξ_{λ₂}′`.
pub fn check_piecewise_constant_rate(
    f: &PiecewiseConstantSignal,
    lambda_small: f64,
    lambda_large: f64,
    tol: f64,
) -> Result<Verdict> {
    positive("lambda", lambda_small)?;
    positive("lambda", lambda_large)?;
    if lambda_small >= lambda_large {
        return Err(Error::InvalidParameter(format!(
            "need lambda1 < lambda2, got {lambda_small} and {lambda_large}"
        )));
    }
    let q1 = quotient(f, lambda_small)?;
    let q2 = quotient(f, lambda_large)?;
    let residual = l2_distance(&q1, &q2)?;
    let mut verdict = Verdict::default();
    verdict.push("frozen_certificate", residual <= tol, residual);
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrozenProbe {
    Stable {
        lambda_small: f64,
        lambda_large: f64,
        residual: f64,
    },
    /// Halving reached `floor` without the quotients settling.
    Inconclusive { floor: f64 },
}

/// Looks for a pair `λ/2 < λ` inside the frozen-certificate regime, starting
/// at `λ = ‖F₀‖_∞ / 2` and halving down to `10⁻⁸ ‖F₀‖_∞`.
pub fn probe_frozen_certificate(f: &PiecewiseConstantSignal, tol: f64) -> Result<FrozenProbe> {
    let g = gnorm(f);
    if g == 0.0 {
        let verdict = check_piecewise_constant_rate(f, 0.5, 1.0, tol)?;
        return Ok(FrozenProbe::Stable {
            lambda_small: 0.5,
            lambda_large: 1.0,
            residual: verdict.checks[0].residual,
        });
    }
    let floor = 1e-8 * g;
    let mut lambda = 0.5 * g;
    while lambda >= floor {
        let verdict = check_piecewise_constant_rate(f, 0.5 * lambda, lambda, tol)?;
        if verdict.passed() {
            return Ok(FrozenProbe::Stable {
                lambda_small: 0.5 * lambda,
                lambda_large: lambda,
                residual: verdict.checks[0].residual,
            });
        }
        lambda *= 0.5;
    }
    Ok(FrozenProbe::Inconclusive { floor })
}

/// Semigroup law `(u_λ)_μ = u_{λ+μ}` (with `u_0 = f`), plus the averaged
/// certificate `(λξ_λ + μξ̄_μ)/(λ+μ)` certifying `u_{λ+μ}` directly.
pub fn check_semigroup(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    mu: f64,
    tol: f64,
) -> Result<Verdict> {
    for (name, v) in [("lambda", lambda), ("mu", mu)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be nonnegative and finite, got {v}"
            )));
        }
    }
    let first = (lambda > 0.0).then(|| rof_denoise(f, lambda)).transpose()?;
    let u_lambda = first.as_ref().map_or_else(|| f.clone(), |r| r.u.clone());
    let second = (mu > 0.0).then(|| rof_denoise(&u_lambda, mu)).transpose()?;
    let twice = second
        .as_ref()
        .map_or_else(|| u_lambda.clone(), |r| r.u.clone());
    let once = if lambda + mu > 0.0 {
        rof_denoise(f, lambda + mu)?.u
    } else {
        f.clone()
    };
    let residual = l2_distance(&twice, &once)?;
    let mut verdict = Verdict::default();
    verdict.push("semigroup", residual <= tol, residual);

    if let (Some(first), Some(second)) = (&first, &second) {
        let total = lambda + mu;
        let averaged = first
            .certificate
            .scale(lambda / total)
            .add(&second.certificate.scale(mu / total))?;
        let cert = verify_certificate(f, total, &twice, &averaged, tol);
        let worst = cert.residual.max(cert.pairing_gap);
        verdict.push("semigroup.certificate", cert.is_ok(), worst);
    }
    Ok(verdict)
}

/// `J(u_λ) = ⟨u_λ, ξ_μ′⟩` for `0 < μ ≤ λ`.
pub fn check_certificate_reuse(
    f: &PiecewiseConstantSignal,
    lambda: f64,
    mu: f64,
    tol: f64,
) -> Result<Verdict> {
    positive("mu", mu)?;
    if mu > lambda {
        return Err(Error::InvalidParameter(format!(
            "need mu <= lambda, got {mu} > {lambda}"
        )));
    }
    let u = rof_denoise(f, lambda)?;
    let xi_mu = rof_denoise(f, mu)?.certificate;
    let gap = (u.tv - pairing_with_certificate(&u.u, &xi_mu)?).abs();
    let mut verdict = Verdict::default();
    verdict.push("certificate_reuse", gap <= tol * (1.0 + u.tv), gap);
    Ok(verdict)
}

/// `‖ũ_λ − u_λ‖ ≤ ‖f̃ − f‖`.
pub fn check_non_expansive(
    f: &PiecewiseConstantSignal,
    g: &PiecewiseConstantSignal,
    lambda: f64,
    tol: f64,
) -> Result<Verdict> {
    let uf = rof_denoise(f, lambda)?.u;
    let ug = rof_denoise(g, lambda)?.u;
    let excess = l2_distance(&uf, &ug)? - l2_distance(f, g)?;
    let mut verdict = Verdict::default();
    verdict.push("non_expansive", excess <= tol, excess.max(0.0));
    Ok(verdict)
}
