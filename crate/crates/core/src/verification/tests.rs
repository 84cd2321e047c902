use std::collections::BTreeSet;

use super::*;

const OPERATIONS: [&str; 14] = [
    "kernel_H",
    "kernel_I",
    "kernel_H_deriv",
    "kernel_I_deriv",
    "two_sided_exit",
    "injections_killed",
    "ruin_infinite",
    "upcross_infinite",
    "injections_limits",
    "reflected_ruin_laplace",
    "reflected_dividends",
    "reflected_injections",
    "building_blocks_u",
    "building_blocks_U0",
];

fn op(name: &str) -> &str {
    name.split('.').next().unwrap()
}

#[test]
fn default_suite_covers_every_operation() {
    let suite = default_suite();
    let names: BTreeSet<&str> = suite.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names.len(), suite.len(), "check names are unique");
    for o in OPERATIONS {
        let mine: Vec<&CheckSpec> = suite.iter().filter(|c| op(&c.name) == o).collect();
        assert!(mine.iter().any(|c| c.kind == CheckKind::MCAgreement), "{o} lacks a Monte Carlo check");
        assert!(mine.iter().any(|c| c.kind != CheckKind::MCAgreement), "{o} lacks a deterministic check");
    }
    for c in &suite {
        c.tolerance.validate(c.kind).unwrap();
    }
}

#[test]
fn deterministic_checks_pass() {
    let specs: Vec<CheckSpec> = default_suite()
        .into_iter()
        .filter(|c| c.kind != CheckKind::MCAgreement)
        .collect();
    let report = run_suite(&specs, &SimConfig::new(10, 1)).unwrap();
    let bad: Vec<&CheckResult> = report.results.iter().filter(|r| r.verdict == Verdict::Fail).collect();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn monte_carlo_checks_pass_on_a_small_run() {
    let specs: Vec<CheckSpec> = suite_by_name("fast")
        .unwrap()
        .into_iter()
        .filter(|c| c.kind == CheckKind::MCAgreement)
        .collect();
    let report = run_suite(&specs, &SimConfig::new(8_000, 7)).unwrap();
    assert!(report.passed(), "{}", report.to_pretty());
}

#[test]
fn empty_suite_is_rejected() {
    assert!(run_suite(&[], &SimConfig::new(10, 1)).is_err());
}

#[test]
fn broken_checks_fail_without_aborting() {
    let s = Scenario::new(0.05, 1.0, -1.0, 2.0, 0.5, 0.0).unwrap();
    let good = CheckSpec {
        name: "b_good".into(),
        kind: CheckKind::Bound,
        model: ReferenceModel::CramerLundberg,
        scenario: s,
        probe: Probe::Range { identity: Identity::G, lo: 0.0, hi: 1.0 },
        tolerance: Tolerance::abs(1e-9),
        expected_runtime_class: RuntimeClass::Fast,
    };
    let wrong_tolerance = CheckSpec {
        name: "c_wrong_tolerance".into(),
        tolerance: Tolerance::sigmas(3.0),
        ..good.clone()
    };
    let precondition = CheckSpec {
        name: "a_precondition".into(),
        probe: Probe::Exact { identity: Identity::U1, value: 0.0 },
        ..good.clone()
    };
    let mc_precondition = CheckSpec {
        name: "d_mc_precondition".into(),
        kind: CheckKind::MCAgreement,
        probe: Probe::MonteCarlo { target: Target::U1, analytic: Analytic::Identity },
        tolerance: Tolerance::sigmas(3.0),
        ..good.clone()
    };
    let report = run_suite(
        &[good, wrong_tolerance, precondition, mc_precondition],
        &SimConfig::new(100, 1),
    )
    .unwrap();
    let verdicts: Vec<(&str, Verdict)> = report.results.iter().map(|r| (r.name.as_str(), r.verdict)).collect();
    assert_eq!(
        verdicts,
        [
            ("a_precondition", Verdict::Fail),
            ("b_good", Verdict::Pass),
            ("c_wrong_tolerance", Verdict::Fail),
            ("d_mc_precondition", Verdict::Fail),
        ]
    );
    assert!(report.results[0].note.contains("x <= 0"));
    assert!(!report.passed());
}

#[test]
fn report_csv_has_one_row_per_check() {
    let specs: Vec<CheckSpec> = default_suite().into_iter().take(6).collect();
    let cfg = SimConfig::new(2_000, 3);
    let one = run_suite(&specs, &cfg).unwrap().to_csv();
    let two = run_suite(&specs, &cfg).unwrap().to_csv();
    assert_eq!(one, two);
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], "check,name,analytic,estimate,std_error,abs_err,verdict");
    assert_eq!(lines.len(), specs.len() + 1);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    let mut sorted: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    let orig = sorted.clone();
    sorted.sort();
    assert_eq!(orig, sorted);
}
