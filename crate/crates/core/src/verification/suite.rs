//! Shipped check lists.
//!
//! Every public operation of the identities module gets at least one Monte
//! Carlo check and one deterministic check. Names start with the operation.

use super::{
    Analytic, CheckKind, CheckSpec, DerivedKernel, Probe, ReferenceModel, RuntimeClass, Tolerance,
};
use crate::identities::{Identity, Scenario};
use crate::simulate::Target;

use CheckKind::*;
use ReferenceModel::*;

/// Names accepted by [`suite_by_name`].
pub const SUITES: [&str; 2] = ["default", "fast"];

const Q: f64 = 0.05;
const R: f64 = 1.0;
const A: f64 = -1.0;
const B: f64 = 2.0;
const THETA: f64 = 0.3;
const SIGMAS: f64 = 3.0;

fn sc(q: f64, a: f64, b: f64, x: f64, theta: f64) -> Scenario {
    Scenario::new(q, R, a, b, x, theta).expect("suite scenarios are valid")
}

fn base(x: f64, theta: f64) -> Scenario {
    sc(Q, A, B, x, theta)
}

fn check(name: &str, kind: CheckKind, model: ReferenceModel, scenario: Scenario, probe: Probe, tolerance: Tolerance) -> CheckSpec {
    let slow = kind == MCAgreement && !model.model().is_bounded_variation();
    CheckSpec {
        name: format!("{name}.{}", model.label()),
        kind,
        model,
        scenario,
        probe,
        tolerance,
        expected_runtime_class: if slow { RuntimeClass::Slow } else { RuntimeClass::Fast },
    }
}

fn mc(name: &str, model: ReferenceModel, scenario: Scenario, target: Target, analytic: Analytic) -> CheckSpec {
    let probe = Probe::MonteCarlo { target, analytic };
    check(name, MCAgreement, model, scenario, probe, Tolerance::sigmas(SIGMAS))
}

fn direct(name: &str, model: ReferenceModel, scenario: Scenario, target: Target) -> CheckSpec {
    mc(name, model, scenario, target, Analytic::Identity)
}

fn kernel_checks() -> Vec<CheckSpec> {
    let mut v = vec![
        mc("kernel_H.mc_exit_ratio", CramerLundberg, base(1.0, THETA), Target::G, Analytic::ExitRatio),
        mc("kernel_I.mc_exit_combination", CramerLundberg, base(1.0, THETA), Target::H, Analytic::ExitCombination),
        mc("kernel_H_deriv.mc_dividend_ratio", CramerLundberg, base(1.0, 0.0), Target::JHat, Analytic::ReflectedRatio),
        mc(
            "kernel_I_deriv.mc_reflected_combination",
            CramerLundberg,
            base(1.0, THETA),
            Target::HHat,
            Analytic::ReflectedCombination,
        ),
    ];
    for (model, y) in [(Brownian, 0.5), (CramerLundberg, 1.5)] {
        v.push(check(
            "kernel_H.closed_form_theta0",
            AlgebraicIdentity,
            model,
            base(0.0, 0.0),
            Probe::KernelClosedForm { y },
            Tolerance::rel(1e-9),
        ));
        v.push(check(
            "kernel_I.stable_form",
            AlgebraicIdentity,
            model,
            base(0.0, 0.0),
            Probe::KernelStableForm { y },
            Tolerance::rel(1e-9),
        ));
        for (kernel, label) in [(DerivedKernel::H, "kernel_H_deriv"), (DerivedKernel::I, "kernel_I_deriv")] {
            v.push(check(
                &format!("{label}.finite_difference"),
                FiniteDifference,
                model,
                base(0.0, THETA),
                Probe::KernelDerivative { kernel, y },
                Tolerance::rel(1e-6),
            ));
        }
    }
    v
}

fn exit_checks() -> Vec<CheckSpec> {
    let mut v = vec![
        direct("two_sided_exit.mc_g", CramerLundberg, base(0.0, THETA), Target::G),
        direct("two_sided_exit.mc_h", CramerLundberg, base(0.0, THETA), Target::H),
        direct("two_sided_exit.mc_g", Brownian, base(0.0, THETA), Target::G),
        direct("two_sided_exit.mc_g", JumpDiffusion, base(0.0, THETA), Target::G),
        direct("injections_killed.mc_f", CramerLundberg, base(0.0, 0.0), Target::F),
        direct("injections_killed.mc_f", Brownian, base(0.0, 0.0), Target::F),
        direct("injections_killed.mc_f", JumpDiffusion, base(0.0, 0.0), Target::F),
    ];
    for model in [Brownian, CramerLundberg] {
        for x in [0.0, 1.0] {
            let s = sc(Q, -1e-6, B, x, THETA);
            for (upper, label) in [(true, "g"), (false, "h")] {
                v.push(check(
                    &format!("two_sided_exit.classical_limit_{label}_x{x}"),
                    LimitAgreement,
                    model,
                    s,
                    Probe::ClassicalExit { upper },
                    Tolerance::abs(1e-4),
                ));
            }
        }
        v.push(check(
            "two_sided_exit.g_in_unit_interval",
            Bound,
            model,
            base(1.5, THETA),
            Probe::Range { identity: Identity::G, lo: 0.0, hi: 1.0 },
            Tolerance::abs(1e-9),
        ));
        v.push(check(
            "injections_killed.nonnegative",
            Bound,
            model,
            base(1.5, 0.0),
            Probe::Range { identity: Identity::F, lo: 0.0, hi: f64::INFINITY },
            Tolerance::abs(1e-12),
        ));
    }
    v
}

fn infinite_checks() -> Vec<CheckSpec> {
    let cl = base(0.0, THETA);
    let mut v = vec![
        direct("ruin_infinite.mc_laplace", CramerLundberg, cl, Target::RuinLaplace),
        direct("upcross_infinite.mc_laplace_with_injections", CramerLundberg, cl, Target::UpcrossLaplace),
        direct("upcross_infinite.mc_no_bailout", CramerLundberg, cl, Target::UpcrossNoBailout),
        direct("injections_limits.mc_before_ruin", CramerLundberg, cl, Target::InjectionsI),
        direct("injections_limits.mc_before_upcross", CramerLundberg, cl, Target::InjectionsII),
        direct("injections_limits.mc_total", CramerLundberg, cl, Target::InjectionsIII),
        check(
            "ruin_infinite.stitch_high_barrier",
            LimitAgreement,
            Brownian,
            sc(Q, A, 40.0, 0.0, THETA),
            Probe::Stitch { near: Identity::H, far: Identity::RuinLaplace, drop_a: false },
            Tolerance::abs(1e-4),
        ),
    ];
    for model in [Brownian, CramerLundberg] {
        v.push(check(
            "upcross_infinite.certain_without_discounting",
            LimitAgreement,
            model,
            sc(0.0, A, B, 0.5, 0.0),
            Probe::Exact { identity: Identity::UpcrossLaplace, value: 1.0 },
            Tolerance::abs(1e-9),
        ));
        v.push(check(
            "injections_limits.quadratic_identity",
            AlgebraicIdentity,
            model,
            base(0.0, 0.0),
            Probe::QuadraticIdentity { y: 0.7 },
            Tolerance::rel(1e-10),
        ));
        v.push(check(
            "upcross_infinite.laplace_in_unit_interval",
            Bound,
            model,
            base(-0.5, THETA),
            Probe::Range { identity: Identity::UpcrossLaplace, lo: 0.0, hi: 1.0 },
            Tolerance::abs(1e-9),
        ));
    }
    v
}

fn reflected_checks() -> Vec<CheckSpec> {
    let mut v = vec![
        direct("reflected_ruin_laplace.mc", CramerLundberg, base(0.0, THETA), Target::HHat),
        direct("reflected_dividends.mc", CramerLundberg, base(0.0, 0.0), Target::JHat),
        direct("reflected_dividends.mc", Brownian, base(1.0, 0.0), Target::JHat),
        direct("reflected_dividends.mc", JumpDiffusion, base(0.0, 0.0), Target::JHat),
        direct("reflected_injections.mc", CramerLundberg, base(0.0, 0.0), Target::FHat),
        check(
            "reflected_dividends.deep_level_limit",
            LimitAgreement,
            Brownian,
            sc(Q, -50.0, B, 1.0, 0.0),
            Probe::Stitch { near: Identity::JHat, far: Identity::JHatLimit, drop_a: true },
            Tolerance::abs(1e-6),
        ),
    ];
    for model in [Brownian, CramerLundberg] {
        v.push(check(
            "reflected_ruin_laplace.certain_without_discounting",
            LimitAgreement,
            model,
            sc(0.0, A, B, 0.5, 0.0),
            Probe::Exact { identity: Identity::HHat, value: 1.0 },
            Tolerance::abs(1e-9),
        ));
        v.push(check(
            "reflected_dividends.classical_limit",
            LimitAgreement,
            model,
            sc(Q, -1e-6, B, 1.0, 0.0),
            Probe::ClassicalDividends,
            Tolerance::abs(1e-4),
        ));
        v.push(check(
            "reflected_dividends.zqr_derivative",
            FiniteDifference,
            model,
            base(0.0, 0.0),
            Probe::ZqrDerivative { y: 1.0 },
            Tolerance::rel(1e-6),
        ));
        v.push(check(
            "reflected_injections.small_h_derivative",
            FiniteDifference,
            model,
            base(0.0, 0.0),
            Probe::KernelDerivative { kernel: DerivedKernel::SmallH, y: 1.0 },
            Tolerance::rel(1e-6),
        ));
    }
    v
}

fn clock_checks() -> Vec<CheckSpec> {
    let u = base(-0.4, THETA);
    let mut v = vec![
        direct("building_blocks_u.mc_u1", CramerLundberg, u, Target::U1),
        direct("building_blocks_u.mc_u2", CramerLundberg, u, Target::U2),
        direct("building_blocks_u.mc_u3", CramerLundberg, u, Target::U3),
        mc("building_blocks_U0.mc_exit_g", CramerLundberg, base(0.0, THETA), Target::G, Analytic::Excursion),
        mc("building_blocks_U0.mc_exit_h", CramerLundberg, base(0.0, THETA), Target::H, Analytic::Excursion),
        mc("building_blocks_U0.mc_injections", CramerLundberg, base(0.0, 0.0), Target::F, Analytic::Excursion),
    ];
    for model in [Brownian, CramerLundberg] {
        v.push(check(
            "building_blocks_u.u3_scale_form",
            AlgebraicIdentity,
            model,
            u,
            Probe::ClockExit,
            Tolerance::rel(1e-9),
        ));
        v.push(check(
            "building_blocks_U0.sum_identity",
            AlgebraicIdentity,
            model,
            base(1.0, THETA),
            Probe::ExcursionSum,
            Tolerance::rel(1e-9),
        ));
        v.push(check(
            "building_blocks_U0.values_at_zero",
            AlgebraicIdentity,
            model,
            base(0.0, THETA),
            Probe::ExcursionBoundary,
            Tolerance::abs(1e-9),
        ));
    }
    v
}

/// The full shipped suite.
pub fn default_suite() -> Vec<CheckSpec> {
    let mut v = kernel_checks();
    v.extend(exit_checks());
    v.extend(infinite_checks());
    v.extend(reflected_checks());
    v.extend(clock_checks());
    v
}

/// A shipped suite by name: `default`, or `fast` for the default suite
/// without the unbounded-variation simulations.
pub fn suite_by_name(name: &str) -> Option<Vec<CheckSpec>> {
    match name {
        "default" => Some(default_suite()),
        "fast" => Some(
            default_suite()
                .into_iter()
                .filter(|c| c.expected_runtime_class == RuntimeClass::Fast)
                .collect(),
        ),
        _ => None,
    }
}
