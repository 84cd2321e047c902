//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

use std::io::Write;
use std::num::NonZeroUsize;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gauss_quad::GaussLegendre;
use parisian::levy_model::{JumpComponent, MagnitudeLaw};
use parisian::{
    estimate_many, BackendKind, Error, Evaluator, Identity, LevyModel, MCEstimate, Request, ScaleContext, Scenario, SimConfig,
    Side, Target,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), Error>;

fn brownian_driftless() -> LevyModel {
    LevyModel::brownian(2f64.sqrt(), 0.0).unwrap()
}

fn brownian() -> LevyModel {
    LevyModel::brownian(2f64.sqrt(), 0.5).unwrap()
}

fn cramer_lundberg() -> LevyModel {
    LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap()
}

fn jump_diffusion() -> LevyModel {
    let jumps = vec![JumpComponent {
        rate: 1.0,
        law: MagnitudeLaw::Exponential { mean: 1.0 },
    }];
    LevyModel::new(1.0, 0.5, jumps).unwrap()
}

fn scenario(q: f64, r: f64, a: f64, b: f64, x: f64, theta: f64) -> Scenario {
    Scenario::new(q, r, a, b, x, theta).unwrap()
}

fn eval(m: &LevyModel, id: Identity, s: &Scenario) -> Result<f64, Error> {
    Ok(Evaluator::for_scenario(m, s)?.evaluate(id, s)?.value)
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Laplace transform of `W_q` by Gauss-Legendre panels, cut where the
/// integrand has decayed below `1e-16` of its scale.
fn laplace_of_w(ctx: &ScaleContext, theta: f64) -> Result<f64, Error> {
    let gl = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let decay = theta - ctx.phi();
    let end = 40.0 / decay;
    let panels = (end / 0.25).ceil() as usize;
    let width = end / panels as f64;
    let mut err = None;
    let total = (0..panels)
        .map(|k| {
            let lo = k as f64 * width;
            gl.integrate(lo, lo + width, |x| match ctx.w_scale(x) {
                Ok(w) => (-theta * x).exp() * w,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            })
        })
        .sum();
    err.map_or(Ok(total), Err)
}

fn criterion_1() -> Check {
    let mut worst: f64 = 0.0;
    for m in [brownian_driftless(), cramer_lundberg()] {
        for q in [0.05, 1.0] {
            let ctx = ScaleContext::new(&m, q)?;
            for shift in [0.5, 2.0] {
                let theta = ctx.phi() + shift;
                let want = 1.0 / (m.kappa(theta) - q);
                worst = worst.max(rel(laplace_of_w(&ctx, theta)?, want));
            }
        }
    }
    Ok((worst <= 1e-7, format!("worst relative error {worst:.2e}")))
}

fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for m in [brownian_driftless(), brownian(), cramer_lundberg(), jump_diffusion()] {
        for q in [0.05, 1.0] {
            let pf = ScaleContext::with_backend(&m, q, BackendKind::PartialFraction)?;
            let inv = ScaleContext::with_backend(&m, q, BackendKind::NumericalInversion)?;
            for x in [0.1, 1.0, 5.0] {
                worst = worst.max((pf.w_scale(x)? - inv.w_scale(x)?).abs());
            }
        }
    }
    Ok((worst <= 1e-8, format!("worst absolute gap {worst:.2e}")))
}

fn criterion_3() -> Check {
    let mut worst: f64 = 0.0;
    for m in [brownian(), cramer_lundberg()] {
        let ctx = ScaleContext::new(&m, 0.05)?;
        for x in [0.0, 1.0] {
            let s = scenario(0.05, 1.0, -1e-6, 2.0, x, 0.0);
            let ev = Evaluator::for_scenario(&m, &s)?;
            let (g, h) = ev.two_sided_exit(&s)?;
            let ratio = ctx.w_scale(x)? / ctx.w_scale(2.0)?;
            worst = worst.max((g.value - ratio).abs());
            worst = worst.max((h.value - (ctx.z(x)? - ctx.z(2.0)? * ratio)).abs());
        }
    }
    Ok((worst <= 1e-4, format!("worst gap to the classical exit {worst:.2e}")))
}

fn criterion_4() -> Check {
    let mut worst: f64 = 0.0;
    for m in [brownian(), cramer_lundberg()] {
        let ctx = ScaleContext::new(&m, 0.05)?;
        let slope = ctx.w_scale_deriv(2.0, Side::Right)?;
        for x in [0.0, 1.0, 2.0] {
            let s = scenario(0.05, 1.0, -1e-6, 2.0, x, 0.0);
            let want = ctx.w_scale(x)? / slope;
            worst = worst.max((eval(&m, Identity::JHat, &s)? - want).abs());
        }
    }
    Ok((worst <= 1e-4, format!("worst gap to W_q(x)/W_q'(b+) {worst:.2e}")))
}

/// The largest `|mean - analytic| / std_error` over a batch, with a
/// description of each estimate beyond three standard errors.
fn mc_agreement(m: &LevyModel, reqs: &[Request], est: &[MCEstimate]) -> Result<(f64, Vec<String>), Error> {
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (req, e) in reqs.iter().zip(est) {
        let want = eval(m, req.target.identity(), &req.scenario)?;
        let z = (e.mean - want).abs() / e.std_error;
        worst = worst.max(z);
        if z > 3.0 {
            misses.push(format!(
                "{} theta {}: analytic {want:.6} vs {:.6} +- {:.2e}",
                req.target, req.scenario.theta, e.mean, e.std_error
            ));
        }
    }
    Ok((worst, misses))
}

fn criterion_5() -> Check {
    let m = cramer_lundberg();
    let at_zero = [
        Target::G,
        Target::H,
        Target::F,
        Target::HHat,
        Target::JHat,
        Target::FHat,
        Target::RuinLaplace,
        Target::UpcrossLaplace,
        Target::InjectionsI,
        Target::InjectionsII,
        Target::InjectionsIII,
    ];
    let mut reqs = Vec::new();
    for theta in [0.0, 0.3] {
        let s = scenario(0.05, 1.0, -1.0, 2.0, 0.0, theta);
        reqs.extend(at_zero.iter().map(|&target| Request { target, scenario: s }));
        let su = scenario(0.05, 1.0, -1.0, 2.0, -0.4, theta);
        reqs.extend([Target::U1, Target::U2, Target::U3].map(|target| Request { target, scenario: su }));
    }
    let est = estimate_many(&m, &reqs, &SimConfig::new(1_000_000, 5))?;
    let (worst, misses) = mc_agreement(&m, &reqs, &est)?;
    let mut detail = format!("{} estimates, worst |z| {worst:.2}", reqs.len());
    for miss in misses {
        detail.push_str(&format!("\n    {miss}"));
    }
    Ok((worst <= 3.0, detail))
}

fn criterion_6() -> Check {
    let m = jump_diffusion();
    let mut reqs = Vec::new();
    for theta in [0.0, 0.3] {
        let s = scenario(0.05, 1.0, -1.0, 2.0, 0.0, theta);
        reqs.push(Request { target: Target::G, scenario: s });
    }
    let s = scenario(0.05, 1.0, -1.0, 2.0, 0.0, 0.0);
    reqs.push(Request { target: Target::F, scenario: s });
    reqs.push(Request { target: Target::JHat, scenario: s });
    let coarse_cfg = SimConfig::new(200_000, 6).with_step(1e-3);
    let fine_cfg = SimConfig::new(200_000, 6).with_step(5e-4);
    let coarse = estimate_many(&m, &reqs, &coarse_cfg)?;
    let fine = estimate_many(&m, &reqs, &fine_cfg)?;
    let (worst, mut misses) = mc_agreement(&m, &reqs, &coarse)?;
    let mut shift: f64 = 0.0;
    for ((req, c), f) in reqs.iter().zip(&coarse).zip(&fine) {
        let moved = (c.mean - f.mean).abs() / c.std_error.max(f.std_error);
        shift = shift.max(moved);
        if moved >= 1.0 {
            misses.push(format!("{} moved {moved:.2} standard errors when the step halved", req.target));
        }
    }
    let mut detail = format!("worst |z| {worst:.2}, largest halving shift {shift:.3} standard errors");
    for miss in misses {
        detail.push_str(&format!("\n    {miss}"));
    }
    Ok((worst <= 3.0 && shift < 1.0, detail))
}

fn random_parameters(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    (rng.random_range(0.01..1.0), rng.random_range(0.1..2.0), rng.random_range(-2.0..-0.05))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let models = [brownian(), cramer_lundberg()];
    let (mut closed, mut sum, mut quadratic, mut slope) = (0f64, 0f64, 0f64, 0f64);
    for k in 0..100 {
        let m = &models[k % 2];
        let (q, r, a) = random_parameters(&mut rng);
        let y = rng.random_range(a..2.0);
        let s = scenario(q, r, a, 2.0, y, 0.0);
        let ev = Evaluator::for_scenario(m, &s)?;
        let kern = ev.kernels(a)?;
        closed = closed.max(rel(kern.h_zero(y)?, kern.h_integral(y, 0.0)?.value));
        let theta = rng.random_range(0.0..2.0);
        let st = Scenario { theta, ..s };
        let u = ev.evaluate(Identity::U1Zero, &st)?.value + ev.evaluate(Identity::U2Zero, &st)?.value;
        let h = ev.evaluate(Identity::KernelH, &st)?.value;
        sum = sum.max((u + h).abs() / h.abs().max(1.0));
    }
    for m in &models {
        let (q, r) = (0.05, 1.0);
        let ev = Evaluator::new(m, q, r)?;
        let c = -r * m.kappa_prime_zero() / (q * (q + r));
        for _ in 0..100 {
            let y = rng.random_range(-2.0..4.0);
            let want = c * ev.z_qr(y, 0.0)?;
            quadratic = quadratic.max(rel(ev.k_fn(y)? - ev.h_tilde(y)?, want));
        }
        let ctx = ScaleContext::new(m, q)?;
        let phi_p = m.phi_inverse(q + r)?;
        let h = 1e-4;
        for y in [-1.0, -0.3, 0.5, 1.0, 2.5] {
            let formula = q * phi_p * ctx.z_theta(y, phi_p)? / (q + r);
            let fd = (ev.z_qr(y + h, 0.0)? - ev.z_qr(y - h, 0.0)?) / (2.0 * h);
            slope = slope.max(rel(fd, formula)).max(rel(ev.z_qr_deriv(y)?, formula));
        }
    }
    let pass = closed <= 1e-9 && sum <= 1e-9 && quadratic <= 1e-10 && slope <= 1e-6;
    Ok((
        pass,
        format!(
            "closed form {closed:.2e}, U1+U2+H {sum:.2e}, quadratic {quadratic:.2e}, Z_qr' {slope:.2e}"
        ),
    ))
}

const LAPLACE: [Identity; 6] = [
    Identity::G,
    Identity::H,
    Identity::RuinLaplace,
    Identity::UpcrossLaplace,
    Identity::UpcrossNoBailout,
    Identity::HHat,
];

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let models = [brownian(), cramer_lundberg(), jump_diffusion()];
    let (mut outputs, mut refused, mut worst) = (0usize, 0usize, 0f64);
    let mut misses = Vec::new();
    for k in 0..1000 {
        let m = &models[k % 3];
        let (q, r, a) = random_parameters(&mut rng);
        let b = rng.random_range(0.2..4.0);
        let x = rng.random_range(a - 0.3..b);
        let theta = rng.random_range(0.0..3.0);
        let s = scenario(q, r, a, b, x, theta);
        let ev = Evaluator::for_scenario(m, &s)?;
        let mut ids = LAPLACE.to_vec();
        if x <= 0.0 {
            ids.extend([Identity::U1, Identity::U2, Identity::U3]);
        }
        for id in ids {
            match ev.evaluate(id, &s) {
                Ok(v) => {
                    outputs += 1;
                    let out = (-v.value).max(v.value - 1.0).max(0.0);
                    worst = worst.max(out);
                    if out > 1e-9 {
                        misses.push(format!("{id} = {} at {s:?}", v.value));
                    }
                }
                Err(Error::NumericalFault { .. }) => refused += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let mut certain: f64 = 0.0;
    let drifting_down = [
        LevyModel::brownian(2f64.sqrt(), -0.5).unwrap(),
        LevyModel::cramer_lundberg(0.8, 1.0, 1.0).unwrap(),
    ];
    for m in &drifting_down {
        for (a, x, r) in [(-1.0, 0.0, 1.0), (-0.5, 1.5, 0.3), (-2.0, -1.0, 4.0)] {
            let s = scenario(0.0, r, a, f64::INFINITY, x, 0.0);
            certain = certain.max((eval(m, Identity::RuinLaplace, &s)? - 1.0).abs());
        }
    }
    for m in &models {
        for (a, b, x) in [(-1.0, 2.0, 0.0), (-0.5, 1.0, 0.7), (-2.0, 3.0, -1.5)] {
            let s = scenario(0.0, 1.0, a, b, x, 0.0);
            certain = certain.max((eval(m, Identity::HHat, &s)? - 1.0).abs());
        }
    }
    let pass = misses.is_empty() && certain <= 1e-9;
    let mut detail = format!(
        "{outputs} outputs, {refused} refused as unreliable, worst excursion {worst:.2e}, \
         certain-event gap {certain:.2e}"
    );
    for miss in misses.iter().take(10) {
        detail.push_str(&format!("\n    {miss}"));
    }
    Ok((pass, detail))
}

fn verify_csv(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_parisian"))
        .args(["verify", "--seed", "7"])
        .env("PARISIAN_THREADS", threads)
        .output()
        .map_err(|e| format!("cannot run the binary: {e}"))?;
    if !out.status.success() {
        return Err(format!("verify exited with {}", out.status));
    }
    Ok(out.stdout)
}

fn criterion_9() -> Check {
    let runs = ["1", "3"].map(verify_csv);
    match runs {
        [Ok(one), Ok(three)] => Ok((
            one == three,
            format!("{} bytes per report, identical across 1 and 3 threads: {}", one.len(), one == three),
        )),
        [Err(e), _] | [_, Err(e)] => Ok((false, e)),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 9] = [
        ("scale-function Laplace round trip", 5, criterion_1),
        ("partial fractions vs contour inversion", 5, criterion_2),
        ("classical two-sided exit as a -> 0", 10, criterion_3),
        ("classical reflected dividends as a -> 0", 10, criterion_4),
        ("Monte Carlo agreement, exact bounded-variation paths", 600, criterion_5),
        ("Monte Carlo agreement, Euler paths", 900, criterion_6),
        ("algebraic identities", 30, criterion_7),
        ("probability sanity", 60, criterion_8),
        ("deterministic verification report", 60, criterion_9),
    ];
    let mut failed = 0;
    let mut out = std::io::stdout();
    for (i, (title, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*limit);
        let pass = ok && in_time;
        failed += usize::from(!pass);
        writeln!(
            out,
            "criterion {}: {} {title}: {detail} [{:.1} s, limit {limit} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        )
        .unwrap();
        out.flush().unwrap();
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        writeln!(out, "{failed} acceptance criteria failed").unwrap();
        ExitCode::FAILURE
    }
}
