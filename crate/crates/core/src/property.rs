//! Randomized exact property suites with greedy counterexample shrinking.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Expr, Monomial, Q};
use crate::index::{BundleSpec, MultiIndex, Role};
use crate::lindop::{op_equal, LinearDiffOp};
use crate::random::{jet_variables, random_bundle, random_op, random_poly, Profile};
use crate::syntax::print;
use crate::varcalc::{divergence, iterated_total_derivative, variational_residuals};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    EtaInvolution,
    EtaAntihom,
    PairingDefect,
    DhDelta,
    Leibniz,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::EtaInvolution,
        Suite::EtaAntihom,
        Suite::PairingDefect,
        Suite::DhDelta,
        Suite::Leibniz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EtaInvolution => "eta-involution",
            Suite::EtaAntihom => "eta-antihom",
            Suite::PairingDefect => "pairing-defect",
            Suite::DhDelta => "dh-delta",
            Suite::Leibniz => "leibniz",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidModel(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct PropertyConfig {
    pub trials: usize,
    pub seed: u64,
    pub profile: Profile,
    /// Test hook: doubles the top-order coefficients of every computed `η`.
    pub corrupt_eta: bool,
}

impl Default for PropertyConfig {
    fn default() -> Self {
        PropertyConfig {
            trials: 100,
            seed: 0,
            profile: Profile::default(),
            corrupt_eta: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub trial: usize,
    /// Seed that replays this trial as trial 0.
    pub seed: u64,
    pub description: String,
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub trials: usize,
    pub failures: usize,
    pub first_failure: Option<Counterexample>,
    pub millis: u64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn eta(op: &LinearDiffOp, corrupt: bool) -> LinearDiffOp {
    let e = op.adjoint_eta().expect("random bundles declare duals");
    if !corrupt {
        return e;
    }
    let top = e.order();
    e.map_coeffs(|(_, _, l), c| if l.order() == top { c.scale_int(2) } else { c.clone() })
}

/// Removes coefficient entries, then coefficient terms, while `fails` stays true.
fn shrink_op(op: &LinearDiffOp, fails: &dyn Fn(&LinearDiffOp) -> bool) -> LinearDiffOp {
    let mut cur = op.clone();
    loop {
        let mut improved = false;
        let keys: Vec<_> = cur.coeffs().keys().cloned().collect();
        for k in keys {
            let cand = cur.map_coeffs(|key, c| if *key == k { Expr::zero() } else { c.clone() });
            if fails(&cand) {
                cur = cand;
                improved = true;
            }
        }
        let entries: Vec<_> = cur.coeffs().iter().map(|(k, c)| (k.clone(), c.clone())).collect();
        for (k, c) in entries {
            if c.num_terms() < 2 {
                continue;
            }
            for (m, coef) in c.terms() {
                let single = Expr::term(m.clone(), coef.clone());
                let cand = cur.map_coeffs(|key, e| if *key == k { single.clone() } else { e.clone() });
                if fails(&cand) {
                    cur = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            return cur;
        }
    }
}

fn shrink_exprs(es: &[Expr], fails: &dyn Fn(&[Expr]) -> bool) -> Vec<Expr> {
    let mut cur = es.to_vec();
    loop {
        let mut improved = false;
        for i in 0..cur.len() {
            let terms: Vec<(Monomial, Q)> = cur[i].terms().map(|(m, c)| (m.clone(), c.clone())).collect();
            for (m, _) in &terms {
                let mut cand = cur.clone();
                cand[i] = terms
                    .iter()
                    .filter(|(m2, _)| m2 != m)
                    .map(|(m2, c)| Expr::term(m2.clone(), c.clone()))
                    .fold(Expr::zero(), |a, b| a + b);
                if fails(&cand) {
                    cur = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            return cur;
        }
    }
}

fn describe_exprs(spec: &BundleSpec, es: &[Expr]) -> String {
    es.iter()
        .enumerate()
        .map(|(i, e)| format!("[{i}] {}", print(e, spec)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn fam(spec: &BundleSpec, name: &str) -> crate::index::FamilyId {
    spec.family_id(name).expect("random bundle family")
}

/// Runs one trial; `None` on success, a shrunk description on failure.
fn trial(suite: Suite, seed: u64, cfg: &PropertyConfig) -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = &cfg.profile;
    let spec = random_bundle(&mut rng, profile);
    let corrupt = cfg.corrupt_eta;
    match suite {
        Suite::EtaInvolution => {
            let src = [fam(&spec, "xi")];
            let tgt = [fam(&spec, if rng.gen_bool(0.5) { "y" } else { "q" })];
            let op = random_op(&mut rng, &spec, &src, &tgt, profile);
            let fails = |o: &LinearDiffOp| !op_equal(&eta(&eta(o, corrupt), corrupt), o);
            fails(&op).then(|| format!("{:?}", shrink_op(&op, &fails)))
        }
        Suite::EtaAntihom => {
            let (z, x, q) = (fam(&spec, "zeta"), fam(&spec, "xi"), fam(&spec, "q"));
            let v = random_op(&mut rng, &spec, &[z], &[x], profile);
            let u = random_op(&mut rng, &spec, &[x], &[q], profile);
            let holds = |u: &LinearDiffOp, v: &LinearDiffOp| {
                let lhs = eta(&u.compose(v).expect("composable"), corrupt);
                let rhs = eta(v, corrupt).compose(&eta(u, corrupt)).expect("composable");
                op_equal(&lhs, &rhs)
            };
            if holds(&u, &v) {
                return None;
            }
            let u2 = shrink_op(&u, &|u| !holds(u, &v));
            let v2 = shrink_op(&v, &|v| !holds(&u2, v));
            Some(format!("u = {u2:?}v = {v2:?}"))
        }
        Suite::PairingDefect => {
            let src = [fam(&spec, "xi")];
            let tgt = [fam(&spec, if rng.gen_bool(0.5) { "y" } else { "q" })];
            let op = random_op(&mut rng, &spec, &src, &tgt, profile);
            let fails = |o: &LinearDiffOp| {
                let d = o.pairing_defect_against(&eta(o, corrupt)).expect("duals declared");
                !variational_residuals(&d.coeff).is_empty()
            };
            fails(&op).then(|| format!("{:?}", shrink_op(&op, &fails)))
        }
        Suite::DhDelta => {
            let fams = [fam(&spec, "y"), fam(&spec, "q")];
            let vars = jet_variables(&spec, &fams, 2);
            let current: Vec<Expr> = (0..spec.base_dim())
                .map(|_| random_poly(&mut rng, &vars, profile.max_terms, profile.max_degree + 1))
                .collect();
            let fails = |j: &[Expr]| !variational_residuals(&divergence(j)).is_empty();
            fails(&current).then(|| describe_exprs(&spec, &shrink_exprs(&current, &fails)))
        }
        Suite::Leibniz => {
            let fams = spec.families_with_role(Role::DynamicField);
            let vars = jet_variables(&spec, &fams, 1);
            let f = random_poly(&mut rng, &vars, profile.max_terms, profile.max_degree);
            let g = random_poly(&mut rng, &vars, profile.max_terms, profile.max_degree);
            let jets = crate::index::enumerate_multiindices(spec.base_dim(), profile.max_order);
            let lam: MultiIndex = jets[rng.gen_range(0..jets.len())].clone();
            let fails = |fg: &[Expr]| {
                let lhs = iterated_total_derivative(&(&fg[0] * &fg[1]), &lam);
                let mut rhs = Expr::zero();
                for (sigma, rest) in lam.splits() {
                    let w = lam.leibniz_factor(&sigma) as i64;
                    let t = &iterated_total_derivative(&fg[0], &sigma)
                        * &iterated_total_derivative(&fg[1], &rest);
                    rhs += t.scale_int(w);
                }
                lhs != rhs
            };
            let fg = [f, g];
            fails(&fg).then(|| {
                format!("jet {lam}\n{}", describe_exprs(&spec, &shrink_exprs(&fg, &fails)))
            })
        }
    }
}

/// Seed of trial `k` for base seed `s`; trial 0 uses `s` itself.
pub fn trial_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(k as u64)
}

pub fn run_suite(suite: Suite, cfg: &PropertyConfig) -> SuiteOutcome {
    let start = Instant::now();
    let results: Vec<Option<String>> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| trial(suite, trial_seed(cfg.seed, k), cfg))
        .collect();
    let failures = results.iter().filter(|r| r.is_some()).count();
    let first_failure = results.into_iter().enumerate().find_map(|(k, r)| {
        r.map(|description| Counterexample {
            trial: k,
            seed: trial_seed(cfg.seed, k),
            description,
        })
    });
    SuiteOutcome {
        suite,
        trials: cfg.trials,
        failures,
        first_failure,
        millis: start.elapsed().as_millis() as u64,
    }
}

/// A random bundle for the given seed, as used by trial 0.
pub fn bundle_for_seed(seed: u64, profile: &Profile) -> Arc<BundleSpec> {
    random_bundle(&mut ChaCha8Rng::seed_from_u64(seed), profile)
}
