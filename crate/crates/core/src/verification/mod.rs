//! Analytic-versus-oracle checks and their report.
//!
//! A check pairs an analytic value with an independent one: a Monte Carlo
//! estimate, a limit, a second closed form, a finite difference or a bound.
//! Monte Carlo checks that share a reference model are estimated together so
//! that compatible targets reuse the same paths.

mod suite;

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::identities::{Evaluator, Identity, Scenario};
use crate::levy_model::{JumpComponent, LevyModel, MagnitudeLaw};
use crate::scale::{ScaleContext, Side};
use crate::simulate::{self, MCEstimate, Request, SimConfig, Target};

pub use suite::{default_suite, suite_by_name, SUITES};

/// Euler step for unbounded-variation Monte Carlo checks when the run
/// configuration does not set one.
pub const DEFAULT_EULER_STEP: f64 = 1e-2;

/// Central-difference half width.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    MCAgreement,
    LimitAgreement,
    AlgebraicIdentity,
    FiniteDifference,
    Bound,
}

impl CheckKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::MCAgreement => "MCAgreement",
            Self::LimitAgreement => "LimitAgreement",
            Self::AlgebraicIdentity => "AlgebraicIdentity",
            Self::FiniteDifference => "FiniteDifference",
            Self::Bound => "Bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuntimeClass {
    Fast,
    Slow,
}

/// Acceptance threshold. Monte Carlo checks use `sigmas` standard errors;
/// every other kind uses exactly one of `abs` and `rel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub sigmas: f64,
}

impl Tolerance {
    pub fn abs(v: f64) -> Self {
        Self { abs: v, rel: 0.0, sigmas: 0.0 }
    }

    pub fn rel(v: f64) -> Self {
        Self { abs: 0.0, rel: v, sigmas: 0.0 }
    }

    pub fn sigmas(v: f64) -> Self {
        Self { abs: 0.0, rel: 0.0, sigmas: v }
    }

    fn validate(&self, kind: CheckKind) -> Result<()> {
        let set = |v: f64| v > 0.0;
        let ok = match kind {
            CheckKind::MCAgreement => set(self.sigmas) && self.abs == 0.0 && self.rel == 0.0,
            _ => self.sigmas == 0.0 && (set(self.abs) != set(self.rel)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "tolerance {self:?} does not fit a {} check",
                kind.label()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReferenceModel {
    /// `sigma = sqrt(2)`, `gamma = 0.5`.
    Brownian,
    /// `sigma = sqrt(2)`, `gamma = 0`.
    BrownianDriftless,
    /// Premium rate 1.5, claims at rate 1 with exponential sizes of mean 1.
    CramerLundberg,
    /// `sigma = 1`, `gamma = 0.5`, jumps at rate 1 with exponential sizes of mean 1.
    JumpDiffusion,
}

impl ReferenceModel {
    pub fn model(self) -> LevyModel {
        let m = match self {
            Self::Brownian => LevyModel::brownian(2f64.sqrt(), 0.5),
            Self::BrownianDriftless => LevyModel::brownian(2f64.sqrt(), 0.0),
            Self::CramerLundberg => LevyModel::cramer_lundberg(1.5, 1.0, 1.0),
            Self::JumpDiffusion => LevyModel::new(
                1.0,
                0.5,
                vec![JumpComponent {
                    rate: 1.0,
                    law: MagnitudeLaw::Exponential { mean: 1.0 },
                }],
            ),
        };
        m.expect("reference models are valid")
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Brownian => "brownian",
            Self::BrownianDriftless => "brownian0",
            Self::CramerLundberg => "cramer_lundberg",
            Self::JumpDiffusion => "jump_diffusion",
        }
    }
}

/// How the analytic side of a Monte Carlo check is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Analytic {
    /// The identity of the target, evaluated directly.
    Identity,
    /// `H^a(x, theta) / H^a(b, theta)`, against `g`.
    ExitRatio,
    /// `I^a(x) - H^a(x, theta) I^a(b) / H^a(b, theta)`, against `h`.
    ExitCombination,
    /// `H^a(x, 0) / H^a'(b, 0)`, against the dividends `j_hat`.
    ReflectedRatio,
    /// `I^a(x) - H^a(x, theta) I^a'(b) / H^a'(b, theta)`, against `h_hat`.
    ReflectedCombination,
    /// The excursion blocks at `b`, against `g`, `h` or `f` started at 0:
    /// `-1/(U_1^0 + U_2^0)`, `-U_3^0/(U_1^0 + U_2^0)`, `U_4^0/(U_1^0 + U_2^0)`.
    Excursion,
}

/// What a check computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Probe {
    MonteCarlo { target: Target, analytic: Analytic },
    /// `H^a(y, 0)` closed form against its integral definition.
    KernelClosedForm { y: f64 },
    /// Stable `I^a(y)` against its defining combination of scale functions.
    KernelStableForm { y: f64 },
    /// Derivative kernel against a central difference of its base kernel.
    KernelDerivative { kernel: DerivedKernel, y: f64 },
    /// `Z_{q,r}'(y)` against a central difference of `Z_{q,r}`.
    ZqrDerivative { y: f64 },
    /// `g` and `h` as `a -> 0-` against `W_q(x)/W_q(b)` and
    /// `Z_q(x) - Z_q(b) W_q(x)/W_q(b)`.
    ClassicalExit { upper: bool },
    /// `j_hat` as `a -> 0-` against `W_q(x)/W_q'(b+)`.
    ClassicalDividends,
    /// Finite-horizon identity at the scenario against its limit identity
    /// evaluated at the same scenario with `a` or `b` made infinite.
    Stitch { near: Identity, far: Identity, drop_a: bool },
    /// `k_{q,r}(y) - h~_{q,r}(y) = -r kappa'(0+) Z_{q,r}(y) / (q (q + r))`.
    QuadraticIdentity { y: f64 },
    /// `U_1^0 + U_2^0 = -H^a` at the scenario.
    ExcursionSum,
    /// `U_1^0(0) = U_3^0(0) = U_4^0(0) = 0`, `U_2^0(0) = -1`; the largest gap.
    ExcursionBoundary,
    /// `u~_3` against `Z_{q+r}(x-a) - W_{q+r}(x-a) Z_{q+r}(-a)/W_{q+r}(-a)`.
    ClockExit,
    /// The identity value lies in `[lo, hi]`.
    Range { identity: Identity, lo: f64, hi: f64 },
    /// The identity value equals `value`.
    Exact { identity: Identity, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DerivedKernel {
    H,
    I,
    SmallH,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSpec {
    pub name: String,
    pub kind: CheckKind,
    pub model: ReferenceModel,
    pub scenario: Scenario,
    pub probe: Probe,
    pub tolerance: Tolerance,
    pub expected_runtime_class: RuntimeClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub analytic: f64,
    pub estimate: f64,
    /// Standard error of the Monte Carlo side; 0 for deterministic checks.
    pub std_error: f64,
    pub abs_err: f64,
    pub verdict: Verdict,
    /// Error message when the check could not be evaluated, else the
    /// simulation disclosures of Monte Carlo checks.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub results: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.verdict == Verdict::Fail).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,name,analytic,estimate,std_error,abs_err,verdict\n");
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},{},{:.12e},{:.12e},{:.6e},{:.6e},{}",
                r.kind.label(),
                r.name,
                r.analytic,
                r.estimate,
                r.std_error,
                r.abs_err,
                r.verdict
            );
        }
        out
    }

    pub fn to_pretty(&self) -> String {
        let width = self.results.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!(
            "{:<width$}  {:<17}  {:>16}  {:>16}  {:>10}  {:>10}  verdict\n",
            "name", "check", "analytic", "estimate", "std_error", "abs_err"
        );
        for r in &self.results {
            let _ = writeln!(
                out,
                "{:<width$}  {:<17}  {:>16.10}  {:>16.10}  {:>10.3e}  {:>10.3e}  {}",
                r.name,
                r.kind.label(),
                r.analytic,
                r.estimate,
                r.std_error,
                r.abs_err,
                r.verdict
            );
            if r.verdict == Verdict::Fail && !r.note.is_empty() {
                let _ = writeln!(out, "    {}", r.note);
            }
        }
        let _ = writeln!(out, "{} checks, {} failed", self.results.len(), self.failures());
        out
    }
}

fn central(f: impl Fn(f64) -> Result<f64>, y: f64) -> Result<f64> {
    Ok((f(y + FD_STEP)? - f(y - FD_STEP)?) / (2.0 * FD_STEP))
}

/// Analytic side of a Monte Carlo check.
fn mc_analytic(model: &LevyModel, s: &Scenario, target: Target, how: Analytic) -> Result<f64> {
    let ev = Evaluator::for_scenario(model, s)?;
    let at = |x: f64| Scenario { x, ..*s };
    let h = |y: f64, theta: f64| ev.kernel_h(&Scenario { theta, ..*s }, y).map(|v| v.value);
    let i = |y: f64| ev.kernel_i(s, y).map(|v| v.value);
    let mismatch = || Err(Error::Domain(format!("{how:?} does not estimate {target}")));
    match how {
        Analytic::Identity => Ok(ev.evaluate(target.identity(), s)?.value),
        Analytic::ExitRatio if target == Target::G => Ok(h(s.x, s.theta)? / h(s.b, s.theta)?),
        Analytic::ExitCombination if target == Target::H => {
            Ok(i(s.x)? - h(s.x, s.theta)? * i(s.b)? / h(s.b, s.theta)?)
        }
        Analytic::ReflectedRatio if target == Target::JHat => {
            let s0 = Scenario { theta: 0.0, ..*s };
            Ok(h(s.x, 0.0)? / ev.kernel_h_deriv(&s0, s.b)?.value)
        }
        Analytic::ReflectedCombination if target == Target::HHat => {
            let hd = ev.kernel_h_deriv(s, s.b)?.value;
            let id = ev.kernel_i_deriv(s, s.b)?.value;
            Ok(i(s.x)? - h(s.x, s.theta)? * id / hd)
        }
        Analytic::Excursion if s.x == 0.0 => {
            let u = |id: Identity, theta: f64| ev.evaluate(id, &Scenario { theta, ..at(s.b) }).map(|v| v.value);
            let theta = if target == Target::F { 0.0 } else { s.theta };
            let denom = u(Identity::U1Zero, theta)? + u(Identity::U2Zero, theta)?;
            match target {
                Target::G => Ok(-1.0 / denom),
                Target::H => Ok(-u(Identity::U3Zero, theta)? / denom),
                Target::F => Ok(u(Identity::U4Zero, theta)? / denom),
                _ => mismatch(),
            }
        }
        _ => mismatch(),
    }
}

/// `(analytic, reference)` of a deterministic check.
fn deterministic(model: &LevyModel, s: &Scenario, probe: Probe) -> Result<(f64, f64)> {
    let ev = Evaluator::for_scenario(model, s)?;
    match probe {
        Probe::MonteCarlo { .. } => unreachable!("handled by the Monte Carlo batch"),
        Probe::KernelClosedForm { y } => {
            let k = ev.kernels(s.a)?;
            Ok((k.h_zero(y)?, k.h_integral(y, 0.0)?.value))
        }
        Probe::KernelStableForm { y } => {
            let k = ev.kernels(s.a)?;
            Ok((k.i(y)?, k.i_direct(y)?))
        }
        Probe::KernelDerivative { kernel, y } => match kernel {
            DerivedKernel::H => Ok((
                ev.kernel_h_deriv(s, y)?.value,
                central(|t| ev.kernel_h(s, t).map(|v| v.value), y)?,
            )),
            DerivedKernel::I => Ok((
                ev.kernel_i_deriv(s, y)?.value,
                central(|t| ev.kernel_i(s, t).map(|v| v.value), y)?,
            )),
            DerivedKernel::SmallH => {
                let k = ev.kernels(s.a)?;
                Ok((k.small_h_deriv(y)?.value, central(|t| Ok(k.small_h(t)?.value), y)?))
            }
        },
        Probe::ZqrDerivative { y } => Ok((ev.z_qr_deriv(y)?, central(|t| ev.z_qr(t, 0.0), y)?)),
        Probe::ClassicalExit { upper } => {
            let ctx = ScaleContext::new(model, s.q)?;
            let ratio = ctx.w_scale(s.x)? / ctx.w_scale(s.b)?;
            let (g, h) = ev.two_sided_exit(s)?;
            if upper {
                Ok((g.value, ratio))
            } else {
                Ok((h.value, ctx.z(s.x)? - ctx.z(s.b)? * ratio))
            }
        }
        Probe::ClassicalDividends => {
            let ctx = ScaleContext::new(model, s.q)?;
            let want = ctx.w_scale(s.x)? / ctx.w_scale_deriv(s.b, Side::Right)?;
            Ok((ev.reflected_dividends(s)?.value, want))
        }
        Probe::Stitch { near, far, drop_a } => {
            let limit = if drop_a {
                Scenario { a: f64::NEG_INFINITY, ..*s }
            } else {
                Scenario { b: f64::INFINITY, ..*s }
            };
            Ok((ev.evaluate(near, s)?.value, ev.evaluate(far, &limit)?.value))
        }
        Probe::QuadraticIdentity { y } => {
            let (q, r) = (s.q, s.r);
            let c = -r * model.kappa_prime_zero() / (q * (q + r));
            Ok((ev.k_fn(y)? - ev.h_tilde(y)?, c * ev.z_qr(y, 0.0)?))
        }
        Probe::ExcursionSum => {
            let u1 = ev.evaluate(Identity::U1Zero, s)?.value;
            let u2 = ev.evaluate(Identity::U2Zero, s)?.value;
            Ok((u1 + u2, -ev.kernel_h(s, s.x)?.value))
        }
        Probe::ExcursionBoundary => {
            let at0 = Scenario { x: 0.0, ..*s };
            let vals = ev.building_blocks_u0(&at0)?;
            let want = [0.0, -1.0, 0.0, 0.0];
            let worst = vals
                .iter()
                .zip(want)
                .map(|(v, w)| (v.value, w))
                .max_by(|p, q| (p.0 - p.1).abs().total_cmp(&(q.0 - q.1).abs()))
                .expect("four blocks");
            Ok(worst)
        }
        Probe::ClockExit => {
            let ctx = ScaleContext::new(model, s.q + s.r)?;
            let w = ctx.w_scale(s.x - s.a)?;
            let want = ctx.z(s.x - s.a)? - w * ctx.z(-s.a)? / ctx.w_scale(-s.a)?;
            Ok((ev.evaluate(Identity::U3, s)?.value, want))
        }
        Probe::Range { identity, lo, hi } => {
            let v = ev.evaluate(identity, s)?.value;
            Ok((v, v.clamp(lo, hi)))
        }
        Probe::Exact { identity, value } => Ok((ev.evaluate(identity, s)?.value, value)),
    }
}

fn failed(spec: &CheckSpec, err: &Error) -> CheckResult {
    CheckResult {
        name: spec.name.clone(),
        kind: spec.kind,
        analytic: f64::NAN,
        estimate: f64::NAN,
        std_error: 0.0,
        abs_err: f64::NAN,
        verdict: Verdict::Fail,
        note: err.to_string(),
    }
}

fn judge(spec: &CheckSpec, analytic: f64, estimate: f64, std_error: f64, note: String) -> CheckResult {
    let t = spec.tolerance;
    let abs_err = (analytic - estimate).abs();
    let bound = if spec.kind == CheckKind::MCAgreement {
        t.sigmas * std_error
    } else if t.abs > 0.0 {
        t.abs
    } else {
        t.rel * estimate.abs()
    };
    let pass = abs_err.is_finite() && abs_err <= bound;
    CheckResult {
        name: spec.name.clone(),
        kind: spec.kind,
        analytic,
        estimate,
        std_error,
        abs_err,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        note,
    }
}

fn sim_config_for(model: &LevyModel, cfg: &SimConfig) -> SimConfig {
    let mut c = cfg.clone();
    if model.is_bounded_variation() {
        c.euler_step = None;
    } else if c.euler_step.is_none() {
        c.euler_step = Some(DEFAULT_EULER_STEP);
    }
    c
}

/// Runs the Monte Carlo checks of one reference model on shared paths.
fn run_mc(model_ref: ReferenceModel, specs: &[&CheckSpec], cfg: &SimConfig) -> Vec<CheckResult> {
    let model = model_ref.model();
    let cfg = sim_config_for(&model, cfg);
    let mut results: Vec<Option<CheckResult>> = vec![None; specs.len()];
    let mut batch = Vec::new();
    let mut analytic = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let Probe::MonteCarlo { target, analytic: how } = spec.probe else {
            unreachable!("only Monte Carlo probes are batched")
        };
        let req = Request {
            target,
            scenario: spec.scenario,
        };
        let prepared = mc_analytic(&model, &spec.scenario, target, how)
            .and_then(|a| simulate::check_request(&model, &req, &cfg).map(|_| a));
        match prepared {
            Ok(a) => {
                batch.push((i, req));
                analytic.push(a);
            }
            Err(e) => results[i] = Some(failed(spec, &e)),
        }
    }
    if !batch.is_empty() {
        let reqs: Vec<Request> = batch.iter().map(|(_, r)| *r).collect();
        match simulate::estimate_many(&model, &reqs, &cfg) {
            Ok(est) => {
                for (((i, _), a), e) in batch.iter().zip(analytic).zip(est) {
                    let MCEstimate {
                        mean,
                        std_error,
                        bias_note,
                        ..
                    } = e;
                    results[*i] = Some(judge(specs[*i], a, mean, std_error, bias_note));
                }
            }
            Err(e) => {
                for (i, _) in &batch {
                    results[*i] = Some(failed(specs[*i], &e));
                }
            }
        }
    }
    results.into_iter().map(|r| r.expect("every check has a result")).collect()
}

fn run_deterministic(spec: &CheckSpec) -> CheckResult {
    let model = spec.model.model();
    match deterministic(&model, &spec.scenario, spec.probe) {
        Ok((a, e)) => judge(spec, a, e, 0.0, String::new()),
        Err(e) => failed(spec, &e),
    }
}

/// Runs every check; a check that cannot be evaluated is reported as a
/// failure with its error. Results are sorted by name.
pub fn run_suite(specs: &[CheckSpec], cfg: &SimConfig) -> Result<Report> {
    if specs.is_empty() {
        return Err(Error::Domain("empty check list".into()));
    }
    let mut results = Vec::with_capacity(specs.len());
    let mut mc: Vec<(ReferenceModel, Vec<&CheckSpec>)> = Vec::new();
    let mut det = Vec::new();
    for spec in specs {
        if let Err(e) = spec.tolerance.validate(spec.kind).and_then(|_| spec.scenario.validate()) {
            results.push(failed(spec, &e));
            continue;
        }
        let is_mc = matches!(spec.probe, Probe::MonteCarlo { .. });
        if is_mc != (spec.kind == CheckKind::MCAgreement) {
            let e = Error::Domain(format!("probe {:?} does not fit a {} check", spec.probe, spec.kind.label()));
            results.push(failed(spec, &e));
        } else if is_mc {
            match mc.iter_mut().find(|(m, _)| *m == spec.model) {
                Some((_, v)) => v.push(spec),
                None => mc.push((spec.model, vec![spec])),
            }
        } else {
            det.push(spec);
        }
    }
    results.extend(det.par_iter().map(|s| run_deterministic(s)).collect::<Vec<_>>());
    for (m, group) in &mc {
        results.extend(run_mc(*m, group, cfg));
    }
    results.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Report { results })
}

#[cfg(test)]
mod tests;
