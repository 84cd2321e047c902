use super::*;
use crate::levy_model::{JumpComponent, MagnitudeLaw};
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};

fn brownian() -> LevyModel {
    LevyModel::brownian(2f64.sqrt(), 0.0).unwrap()
}

fn cl() -> LevyModel {
    LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap()
}

fn jump_diffusion() -> LevyModel {
    LevyModel::new(
        1.0,
        0.5,
        vec![JumpComponent {
            rate: 1.0,
            law: MagnitudeLaw::Exponential { mean: 1.0 },
        }],
    )
    .unwrap()
}

fn uniform_jumps() -> LevyModel {
    LevyModel::with_effective_drift(
        0.0,
        2.0,
        vec![JumpComponent {
            rate: 1.0,
            law: MagnitudeLaw::Uniform { lo: 0.5, hi: 1.5 },
        }],
    )
    .unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn brownian_w_is_sinh() {
    let ctx = ScaleContext::new(&brownian(), 1.0).unwrap();
    assert_eq!(ctx.backend(), BackendKind::PartialFraction);
    for x in [0.1, 1.0, 3.0] {
        close(ctx.w_scale(x).unwrap(), x.sinh(), 1e-12);
    }
    assert_eq!(ctx.w_scale(-0.5).unwrap(), 0.0);
    close(ctx.w_scale_deriv(1.0, Side::Right).unwrap(), 1f64.cosh(), 1e-12);
    close(ctx.w_scale_deriv(0.0, Side::Right).unwrap(), 1.0, 1e-12);
    assert!(ctx.w_scale_deriv(0.0, Side::Left).is_err());
    assert!(ctx.w_scale_deriv(-1.0, Side::Right).is_err());
}

#[test]
fn bounded_variation_boundary_values() {
    let ctx = ScaleContext::new(&cl(), 0.1).unwrap();
    close(ctx.w_scale(0.0).unwrap(), 2.0 / 3.0, 1e-12);
    close(ctx.w_scale_deriv(0.0, Side::Right).unwrap(), 1.1 / 2.25, 1e-10);
    let inv = ScaleContext::with_backend(&cl(), 0.1, BackendKind::NumericalInversion).unwrap();
    close(inv.w_scale_deriv(0.0, Side::Right).unwrap(), 1.1 / 2.25, 1e-12);
}

#[test]
fn z_family_values() {
    let ctx = ScaleContext::new(&brownian(), 1.0).unwrap();
    let f = ctx.z_family(-2.0).unwrap();
    assert_eq!((f.z, f.zbar, f.wbar), (1.0, -2.0, 0.0));
    let f = ctx.z_family(1.0).unwrap();
    close(f.z, 1f64.cosh(), 1e-12);
    close(f.wbar, 1f64.cosh() - 1.0, 1e-12);
    close(f.zbar, 1f64.sinh(), 1e-12);
    let zero = ScaleContext::new(&cl(), 0.0).unwrap();
    assert_eq!(zero.z(2.5).unwrap(), 1.0);
}

#[test]
fn backends_agree() {
    for model in [brownian(), cl(), jump_diffusion()] {
        for q in [0.05, 1.0] {
            let pf = ScaleContext::with_backend(&model, q, BackendKind::PartialFraction).unwrap();
            let inv = ScaleContext::with_backend(&model, q, BackendKind::NumericalInversion).unwrap();
            for x in [0.1, 1.0, 5.0] {
                let (a, b) = (pf.w_scale(x).unwrap(), inv.w_scale(x).unwrap());
                assert!((a - b).abs() < 1e-8, "q={q} x={x}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn delay_backend_handles_uniform_jumps() {
    let model = uniform_jumps();
    let ctx = ScaleContext::new(&model, 0.3).unwrap();
    assert_eq!(ctx.backend(), BackendKind::DelayIntegration);
    // Laplace round trip on a truncated range
    let theta = ctx.phi() + 1.0;
    let head = integrate(
        |x| (-theta * x).exp() * ctx.w_scale(x).unwrap(),
        0.0,
        40.0,
        &QuadOptions::default(),
    )
    .unwrap();
    close(head, 1.0 / (model.kappa(theta) - 0.3), 1e-7);
}

#[test]
fn z_theta_reduces_and_matches_tail_form() {
    let ctx = ScaleContext::new(&brownian(), 1.0).unwrap();
    close(ctx.z_theta(1.3, 0.0).unwrap(), ctx.z(1.3).unwrap(), 1e-12);
    close(ctx.z_theta(-0.7, 0.4).unwrap(), (0.4f64 * -0.7).exp(), 1e-15);
    let phi2 = 2f64.sqrt();
    let x = 1.0;
    let direct = ctx.z_theta_direct(x, phi2).unwrap();
    // beta * int_0^inf e^{-Phi_2 z} sinh(z + x) dz with beta = 1
    let tail = integrate_to_infinity(
        |z| Ok(0.5 * (((1.0 - phi2) * z + x).exp() - (-(1.0 + phi2) * z - x).exp())),
        0.0,
        1.0,
        &QuadOptions::default(),
    )
    .unwrap();
    close(direct, tail, 1e-8);
    close(ctx.z_theta(x, phi2).unwrap(), tail, 1e-8);
}

#[test]
fn z_theta_derivative_matches_difference() {
    for model in [brownian(), cl()] {
        let ctx = ScaleContext::new(&model, 0.5).unwrap();
        for theta in [0.2, ctx.phi() + 0.7] {
            let h = 1e-5;
            let fd = (ctx.z_theta(1.2, theta + h).unwrap() - ctx.z_theta(1.2, theta - h).unwrap()) / (2.0 * h);
            close(ctx.z_theta_dtheta(1.2, theta).unwrap(), fd, 1e-7);
        }
    }
}

#[test]
fn two_parameter_z() {
    let ctx = ScaleContext::new(&brownian(), 1.0).unwrap();
    let (alpha, beta, x, theta) = (1.0, 1.0, 1.0, 3.0);
    let k = 9.0;
    let phi = 2f64.sqrt();
    let expected = beta / (alpha + beta - k) * ctx.z_theta_direct(x, theta).unwrap()
        + (alpha - k) / (alpha + beta - k) * ctx.z_theta_direct(x, phi).unwrap();
    close(z_two_param(&ctx, beta, x, theta).unwrap(), expected, 1e-10);
    // theta = 0 special form
    let expected0 = (beta * ctx.z(x).unwrap() + alpha * ctx.z_theta(x, phi).unwrap()) / (alpha + beta);
    close(z_two_param(&ctx, beta, x, 0.0).unwrap(), expected0, 1e-12);
    // x <= 0
    let v = z_two_param(&ctx, beta, -0.5, 0.0).unwrap();
    close(v, (1.0 + (-0.5 * phi).exp()) / 2.0, 1e-14);
    // pole branch is continuous
    let at = z_two_param(&ctx, beta, x, phi).unwrap();
    let near = z_two_param(&ctx, beta, x, phi + 1e-4).unwrap();
    close(at, near, 1e-3);
    assert!(z_two_param(&ctx, -2.0, x, 0.0).is_err());
    let zero = ScaleContext::new(&cl(), 0.0).unwrap();
    close(z_two_param(&zero, 1.0, 1.7, 0.0).unwrap(), 1.0, 1e-14);
}

#[test]
fn two_parameter_z_derivative() {
    for model in [brownian(), cl()] {
        let ctx = ScaleContext::new(&model, 0.05).unwrap();
        for y in [0.3, 1.5] {
            let h = 1e-5;
            let fd = (z_two_param(&ctx, 1.0, y + h, 0.0).unwrap() - z_two_param(&ctx, 1.0, y - h, 0.0).unwrap())
                / (2.0 * h);
            close(z_two_param_deriv(&ctx, 1.0, y).unwrap(), fd, 1e-6);
        }
    }
}

#[test]
fn resolvent_density_domain() {
    let ctx = ScaleContext::new(&brownian(), 1.0).unwrap();
    let d = ctx.resolvent_density(-1.0, 1.0, 0.0, 0.3).unwrap();
    let expected = 1f64.sinh() * 0.7f64.sinh() / 2f64.sinh();
    close(d, expected, 1e-12);
    assert!(ctx.resolvent_density(-1.0, 1.0, 2.0, 0.3).is_err());
}

fn contexts(model: &LevyModel, q: f64, r: f64) -> (ScaleContext, ScaleContext) {
    (ScaleContext::new(model, q).unwrap(), ScaleContext::new(model, q + r).unwrap())
}

#[test]
fn shifted_representations_agree() {
    for model in [brownian(), cl(), jump_diffusion()] {
        let (cq, cqr) = contexts(&model, 0.05, 1.0);
        let k = ShiftedKernels::new(&cq, &cqr, -1.0).unwrap();
        for x in [-1.5, -0.4, 0.0, 0.5, 2.0] {
            let v = k.both(x).unwrap();
            assert!(v.representation_gap <= 1e-8, "x={x}: gap {}", v.representation_gap);
        }
    }
}

#[test]
fn shifted_below_a() {
    let (cq, cqr) = contexts(&cl(), 0.05, 1.0);
    let k = ShiftedKernels::new(&cq, &cqr, -1.0).unwrap();
    let v = k.both(-1.5).unwrap();
    assert_eq!((v.w_a, v.z_a), (0.0, 1.0));
    close(v.zbar_a, -0.5, 1e-15);
}

#[test]
fn shifted_collapse_as_a_vanishes() {
    let (cq, cqr) = contexts(&brownian(), 0.05, 1.0);
    let k = ShiftedKernels::new(&cq, &cqr, -1e-7).unwrap();
    for x in [0.3, 1.7] {
        close(k.w(x).unwrap(), cq.w_scale(x).unwrap(), 1e-6);
        close(k.z(x).unwrap(), cq.z(x).unwrap(), 1e-6);
        close(k.zbar(x).unwrap(), cq.zbar(x).unwrap(), 1e-6);
        close(k.w_deriv(x).unwrap(), cq.w_scale_deriv(x, Side::Right).unwrap(), 1e-5);
    }
}

#[test]
fn shifted_derivatives_match_differences() {
    for model in [brownian(), cl()] {
        let (cq, cqr) = contexts(&model, 0.05, 1.0);
        let k = ShiftedKernels::new(&cq, &cqr, -1.0).unwrap();
        for x in [-0.6, 0.5, 1.4] {
            let h = 1e-5;
            let fd = |f: &dyn Fn(f64) -> f64| (f(x + h) - f(x - h)) / (2.0 * h);
            close(k.w_deriv(x).unwrap(), fd(&|t| k.w(t).unwrap()), 1e-6);
            close(k.z_deriv(x).unwrap(), fd(&|t| k.z(t).unwrap()), 1e-6);
            close(k.zbar_deriv(x).unwrap(), fd(&|t| k.zbar(t).unwrap()), 1e-6);
        }
        assert!(k.w_deriv(-1.0).is_err());
        assert_eq!(k.w_deriv(-1.3).unwrap(), 0.0);
    }
}

#[test]
fn shifted_growth_ratio() {
    let (cq, cqr) = contexts(&brownian(), 0.05, 1.0);
    let a = -1.0;
    let k = ShiftedKernels::new(&cq, &cqr, a).unwrap();
    let target = cqr.z_theta(-a, cq.phi()).unwrap();
    let mut prev = f64::INFINITY;
    for x in [5.0, 10.0, 20.0, 30.0] {
        let d = (k.w(x).unwrap() / cq.w_scale(x).unwrap() - target).abs();
        assert!(d <= prev);
        prev = d;
    }
    assert!(prev <= 1e-3 * target);
}

#[test]
fn z_excess_matches_subtraction() {
    for model in [brownian(), cl(), jump_diffusion()] {
        let ctx = ScaleContext::new(&model, 1.05).unwrap();
        for x in [0.0, 0.5, 3.0] {
            let direct = ctx.z(x).unwrap() - 1.05 / ctx.phi() * ctx.w_scale(x).unwrap();
            close(ctx.z_excess(x).unwrap(), direct, 1e-10);
        }
        // bounded where the subtraction has lost every digit
        let far = ctx.z_excess(60.0).unwrap();
        assert!(far.abs() < 1.0, "{far}");
    }
}
