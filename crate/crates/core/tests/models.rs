use noether_core::models::{build_bf, build_chern_simons, BF_CONFIGS};
use noether_core::report::{Status, VerificationReport};

fn assert_all_pass(name: &str, checks: &[noether_core::report::Check]) {
    let report = VerificationReport::from_checks(checks, 20);
    print!("{}", report.render_text(false));
    for c in &report.checks {
        assert_ne!(c.status, Status::Fail, "{name}: {}", c.check);
    }
}

#[test]
fn chern_simons_suite_passes() {
    let m = build_chern_simons();
    let checks = m.verify().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c.name.as_str()).collect();
    let expected: Vec<&str> = m.expected_checks.iter().map(|s| s.as_str()).collect();
    assert_eq!(names, expected);
    assert_all_pass("cs", &checks);
}

#[test]
fn bf_suites_pass() {
    for (n, p, q) in BF_CONFIGS {
        let m = build_bf(n, p, q).unwrap();
        let checks = m.verify().unwrap();
        assert_all_pass(&m.name, &checks);
    }
}

#[test]
fn chern_simons_rescaled_by_seven_still_passes() {
    let m = noether_core::models::build_chern_simons_rescaled(7);
    let base = build_chern_simons();
    assert_eq!(m.lagrangian.coeff, base.lagrangian.coeff.scale_int(7));
    assert_all_pass(&m.name, &m.verify().unwrap());
}

#[test]
fn builders_are_deterministic() {
    let (a, b) = (build_chern_simons(), build_chern_simons());
    assert_eq!(a.lagrangian.coeff, b.lagrangian.coeff);
    assert_eq!(a.gauge_symmetry, b.gauge_symmetry);
    for (n, p, q) in BF_CONFIGS {
        let (a, b) = (build_bf(n, p, q).unwrap(), build_bf(n, p, q).unwrap());
        assert_eq!(a.lagrangian.coeff, b.lagrangian.coeff);
        assert_eq!(a.gauge_symmetry, b.gauge_symmetry);
        assert_eq!(a.chain.as_ref().map(|c| c.stages.clone()), b.chain.as_ref().map(|c| c.stages.clone()));
    }
}
