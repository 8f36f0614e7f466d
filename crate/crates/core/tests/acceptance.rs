//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use noether_core::expr::Density;
use noether_core::index::{BundleSpec, Coord, FieldFamily, MultiIndex, Role};
use noether_core::lindop::{LinearDiffOp, OperatorRole};
use noether_core::models::{build_bf, build_chern_simons, mutants, symmetry_identity_verdicts, BF_CONFIGS};
use noether_core::property::{run_suite, PropertyConfig, Suite};
use noether_core::report::{Check, ClaimRow, ZeroClaim};
use noether_core::syntax::parse;
use noether_core::varcalc::{euler_lagrange, euler_lagrange_terms, total_derivative};
use noether_core::Expr;

struct Outcome {
    ok: bool,
    detail: String,
}

fn within(limit: Option<Duration>, elapsed: Duration) -> bool {
    limit.is_none_or(|l| elapsed < l)
}

fn property(suite: Suite, trials: usize) -> Outcome {
    let cfg = PropertyConfig {
        trials,
        seed: 0,
        ..Default::default()
    };
    let out = run_suite(suite, &cfg);
    let mut detail = format!("{} trials, {} failures", out.trials, out.failures);
    if let Some(cx) = &out.first_failure {
        detail.push_str(&format!(", first at seed {}", cx.seed));
    }
    Outcome {
        ok: out.passed(),
        detail,
    }
}

fn el_anchor() -> Check {
    let spec = Arc::new(
        BundleSpec::new(1, vec![FieldFamily::new("y", Role::DynamicField, vec![])]).unwrap(),
    );
    let y = spec.family_id("y").unwrap();
    let l = Density::new(spec.clone(), parse("1/2*y[;(0)]^2", &spec).unwrap());
    let el = euler_lagrange(&l, &[y]);
    let expect = parse("-1*y[;(0,0)]", &spec).unwrap();
    let mut claim = ZeroClaim::default();
    for t in euler_lagrange_terms(&l.coeff, &Coord::scalar(y)) {
        claim.push(vec![t]);
    }
    claim.push(vec![expect.clone(), Expr::int(-1)]);
    let mut c = Check::new("el-anchor", spec.clone());
    c.rows.push(ClaimRow::new("y", &el[&Coord::scalar(y)] - &expect, claim));
    c
}

/// First-order symmetry with generic polynomial coefficients; its adjoint
/// must be `(υ^i_r − d_μ υ^{i,μ}_r) ȳ_i − υ^{i,μ}_r ȳ_{μi}`.
fn first_order_shape() -> Check {
    let spec = Arc::new(
        BundleSpec::new(
            2,
            vec![
                FieldFamily::new("y", Role::DynamicField, vec![2]),
                FieldFamily::new("xi", Role::Parameter, vec![2]),
                FieldFamily::new("y_bar", Role::DualField, vec![2]).dual_of("y"),
                FieldFamily::new("xi_bar", Role::DualParameter, vec![2]).dual_of("xi"),
            ],
        )
        .unwrap(),
    );
    let (y, xi) = (spec.family_id("y").unwrap(), spec.family_id("xi").unwrap());
    let coeff = |i: u8, r: u8, mu: Option<u8>| -> Expr {
        let text = match mu {
            None => format!("x[0]*y[{i}] + {}*y[{r};(1)]^2", i + 2 * r + 1),
            Some(m) => format!("x[{m}]*y[{r}]*y[{i};({m})] - {}*x[1]^2", i + r + m + 1),
        };
        parse(&text, &spec).unwrap()
    };
    let mut entries = Vec::new();
    for i in 0..2u8 {
        for r in 0..2u8 {
            let (a, src) = (Coord::new(y, &[i]), Coord::new(xi, &[r]));
            entries.push(((a.clone(), src.clone(), MultiIndex::empty()), coeff(i, r, None)));
            for mu in 0..2u8 {
                entries.push(((a.clone(), src.clone(), MultiIndex::single(mu)), coeff(i, r, Some(mu))));
            }
        }
    }
    let u = LinearDiffOp::new(spec.clone(), vec![xi], vec![y], OperatorRole::GaugeSymmetry, entries)
        .unwrap();
    let delta = u.adjoint_eta().unwrap();
    let (yb, xb) = (spec.family_id("y_bar").unwrap(), spec.family_id("xi_bar").unwrap());
    let mut c = Check::new("first-order-shape", spec.clone());
    for i in 0..2u8 {
        for r in 0..2u8 {
            let (rb, ib) = (Coord::new(xb, &[r]), Coord::new(yb, &[i]));
            let mut claim = ZeroClaim::single(delta.coeff(&rb, &ib, &MultiIndex::empty()));
            claim.push(vec![coeff(i, r, None), Expr::int(-1)]);
            for mu in 0..2u8 {
                claim.push(vec![total_derivative(&coeff(i, r, Some(mu)), mu)]);
            }
            c.rows.push(ClaimRow::new(format!("{i},{r},()"), claim.expand(), claim));
            for mu in 0..2u8 {
                let mut claim = ZeroClaim::single(delta.coeff(&rb, &ib, &MultiIndex::single(mu)));
                claim.push(vec![coeff(i, r, Some(mu))]);
                c.rows.push(ClaimRow::new(format!("{i},{r},({mu})"), claim.expand(), claim));
            }
        }
    }
    let extra = delta.coeffs().keys().filter(|(_, _, l)| l.order() > 1).count();
    if extra > 0 {
        c.failures.push(format!("{extra} coefficients above first order"));
    }
    c
}

fn summarize(checks: &[Check]) -> Outcome {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed() && c.skipped.is_none())
        .map(|c| c.name.as_str())
        .collect();
    Outcome {
        ok: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks exact", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let mut all_ok = true;
    let mut symbolic_zeros: Vec<Check> = Vec::new();
    let mut report = |id: u32, title: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let timely = within(limit, elapsed);
        let ok = out.ok && timely;
        all_ok &= ok;
        let limit_text = limit.map(|l| format!(" / {} s", l.as_secs())).unwrap_or_default();
        println!(
            "criterion {id} [{}] {title}: {}{} ({:.2} s{limit_text})",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            if timely { "" } else { ", over time limit" },
            elapsed.as_secs_f64(),
        );
    };

    report(1, "eta involution", Some(Duration::from_secs(30)), &mut || {
        property(Suite::EtaInvolution, 200)
    });
    report(2, "eta anti-homomorphism", Some(Duration::from_secs(60)), &mut || {
        property(Suite::EtaAntihom, 100)
    });
    report(3, "pairing defect is variationally trivial", Some(Duration::from_secs(60)), &mut || {
        property(Suite::PairingDefect, 50)
    });
    report(4, "delta after d_H vanishes", None, &mut || property(Suite::DhDelta, 100));
    report(5, "Euler-Lagrange ground truth and first-order adjoint", None, &mut || {
        let checks = vec![el_anchor(), first_order_shape()];
        let out = summarize(&checks);
        symbolic_zeros.extend(checks);
        out
    });
    report(6, "Chern-Simons suite", Some(Duration::from_secs(120)), &mut || {
        match build_chern_simons().verify() {
            Ok(checks) => {
                let out = summarize(&checks);
                symbolic_zeros.extend(checks);
                out
            }
            Err(e) => Outcome { ok: false, detail: e.to_string() },
        }
    });
    for (n, p, q) in BF_CONFIGS {
        report(7, &format!("BF suite ({n},{p},{q})"), Some(Duration::from_secs(120)), &mut || {
            match build_bf(n, p, q).and_then(|m| m.verify()) {
                Ok(checks) => {
                    let out = summarize(&checks);
                    symbolic_zeros.extend(checks);
                    out
                }
                Err(e) => Outcome { ok: false, detail: e.to_string() },
            }
        });
    }
    report(8, "numeric oracle at 20 seeded rational points", None, &mut || {
        let mut rows = 0;
        let mut bad = Vec::new();
        for (k, c) in symbolic_zeros.iter().enumerate() {
            if c.skipped.is_some() {
                continue;
            }
            rows += c.rows.iter().filter(|r| r.residual.is_zero()).count();
            match c.numeric_agreement(k as u64, 20) {
                Ok(true) => {}
                Ok(false) => bad.push(c.name.clone()),
                Err(e) => bad.push(format!("{}: {e}", c.name)),
            }
        }
        Outcome {
            ok: bad.is_empty() && rows > 0,
            detail: if bad.is_empty() {
                format!("{rows} zero rows from {} checks agree", symbolic_zeros.len())
            } else {
                format!("disagreement in {}", bad.join(", "))
            },
        }
    });
    report(9, "gauge-symmetry and Noether-identity verdicts agree", None, &mut || {
        let mut models = vec![build_chern_simons()];
        for (n, p, q) in BF_CONFIGS {
            models.push(build_bf(n, p, q).unwrap());
        }
        let originals = models.len();
        models.extend(mutants());
        let mut verdicts = BTreeMap::new();
        let mut ok = true;
        for (k, m) in models.iter().enumerate() {
            let (g, n) = symmetry_identity_verdicts(m).unwrap();
            ok &= g == n;
            // originals must pass, mutants must fail, so agreement is not vacuous
            ok &= g == (k < originals);
            verdicts.insert(m.name.clone(), (g, n));
        }
        let detail = verdicts
            .iter()
            .map(|(name, (g, n))| format!("{name}={}/{}", verdict(*g), verdict(*n)))
            .collect::<Vec<_>>()
            .join(" ");
        Outcome { ok, detail }
    });

    if all_ok {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}

fn verdict(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}
