use parisian::levy_model::{JumpComponent, MagnitudeLaw};
use parisian::{Error, Evaluator, Identity, LevyModel, ScaleContext, Scenario};
use proptest::prelude::*;

fn model(i: usize) -> LevyModel {
    match i {
        0 => LevyModel::brownian(2f64.sqrt(), 0.5).unwrap(),
        1 => LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap(),
        _ => LevyModel::new(
            1.0,
            0.5,
            vec![JumpComponent {
                rate: 1.0,
                law: MagnitudeLaw::Exponential { mean: 1.0 },
            }],
        )
        .unwrap(),
    }
}

/// A reference model index and a scenario with a < 0 < b and x in [a - 0.3, b].
fn scenarios() -> impl Strategy<Value = (usize, Scenario)> {
    (0usize..3, 0.01f64..2.0, 0.1f64..5.0, -3.0f64..-0.05, 0.2f64..4.0, 0.0f64..1.0, 0.0f64..3.0).prop_map(
        |(m, q, r, a, b, u, theta)| {
            let x = a - 0.3 + u * (b - a + 0.3);
            (m, Scenario::new(q, r, a, b, x, theta).unwrap())
        },
    )
}

const LAPLACE: [Identity; 6] = [
    Identity::G,
    Identity::H,
    Identity::RuinLaplace,
    Identity::UpcrossLaplace,
    Identity::UpcrossNoBailout,
    Identity::HHat,
];

const NONNEGATIVE: [Identity; 4] = [Identity::F, Identity::JHat, Identity::FHat, Identity::InjectionsIII];

/// The identity value, or `None` when the evaluator refuses it as
/// numerically unreliable. Any other error fails the test.
fn value(m: &LevyModel, id: Identity, s: &Scenario) -> Option<f64> {
    match Evaluator::for_scenario(m, s).and_then(|ev| ev.evaluate(id, s)) {
        Ok(v) => Some(v.value),
        Err(Error::NumericalFault { .. }) => None,
        Err(e) => panic!("{id} at {s:?}: {e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn laplace_transforms_lie_in_the_unit_interval((m, s) in scenarios()) {
        let m = model(m);
        for id in LAPLACE {
            let Some(v) = value(&m, id, &s) else { continue };
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&v), "{id} = {v}");
        }
    }

    #[test]
    fn expected_amounts_are_nonnegative((m, s) in scenarios()) {
        let m = model(m);
        for id in NONNEGATIVE {
            let Some(v) = value(&m, id, &s) else { continue };
            prop_assert!(v >= -1e-9, "{id} = {v}");
        }
    }

    #[test]
    fn exit_transform_is_monotone((m, s) in scenarios(), dx in 0.01f64..0.5, dt in 0.01f64..1.0) {
        let m = model(m);
        let up = Scenario { x: (s.x + dx).min(s.b), ..s };
        let costly = Scenario { theta: s.theta + dt, ..s };
        let g = |s: &Scenario| value(&m, Identity::G, s);
        if let (Some(g0), Some(gu), Some(gc)) = (g(&s), g(&up), g(&costly)) {
            prop_assert!(gu >= g0 - 1e-9);
            prop_assert!(gc <= g0 + 1e-9);
        }
    }

    #[test]
    fn kernel_derivatives_match_differences((m, s) in scenarios(), u in 0.05f64..0.95) {
        let m = model(m);
        let y = s.a + u * (s.b - s.a);
        prop_assume!(y.abs() > 0.01);
        let h = 1e-3;
        let at = |id: Identity, y: f64| value(&m, id, &Scenario { x: y, ..s });
        for (k, dk) in [(Identity::KernelH, Identity::KernelHDeriv), (Identity::KernelI, Identity::KernelIDeriv)] {
            let stencil = [at(k, y - 2.0 * h), at(k, y - h), at(k, y + h), at(k, y + 2.0 * h)];
            if let (Some(d), [Some(m2), Some(m1), Some(p1), Some(p2)]) = (at(dk, y), stencil) {
                let fd = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
                prop_assert!((d - fd).abs() <= 1e-5 * d.abs().max(1.0), "{dk}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn injection_coefficients_satisfy_the_quadratic_identity((m, s) in scenarios(), y in -2.0f64..4.0) {
        let m = model(m);
        let ev = Evaluator::for_scenario(&m, &s).unwrap();
        let c = -s.r * m.kappa_prime_zero() / (s.q * (s.q + s.r));
        let lhs = ev.k_fn(y).unwrap() - ev.h_tilde(y).unwrap();
        let rhs = c * ev.z_qr(y, 0.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn scale_function_is_positive_and_increasing(m in 0usize..3, q in 0.0f64..2.0, x in 0.0f64..6.0, dx in 0.01f64..1.0) {
        let ctx = ScaleContext::new(&model(m), q).unwrap();
        let w = ctx.w_scale(x).unwrap();
        prop_assert!(w > 0.0);
        prop_assert!(ctx.w_scale(x + dx).unwrap() > w);
    }
}
