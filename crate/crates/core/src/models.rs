//! The Chern–Simons and BF models and their verification suites.
//!
//! # Chern–Simons
//!
//! Base dimension 3, connection coordinates `a[r,λ]` with `r, λ ∈ {0,1,2}`,
//! structure constants `c^r_pq = ε_{rpq}` (`ε_{012} = +1`) and the identity
//! as Killing form. `a[r,μ;(λ)]` is the derivative `d_λ a^r_μ`, so
//!
//! ```text
//! F^r_{λμ} = a[r,μ;(λ)] − a[r,λ;(μ)] + c^r_pq a^p_λ a^q_μ
//! L        = ½ Σ_m ε^{αβγ} a^m_α (F^m_{βγ} − ⅓ c^m_pq a^p_β a^q_γ)
//! ```
//!
//! # BF
//!
//! Forms are stored by independent components on strictly increasing index
//! tuples, `A = Σ_{I↑} A_I dx^I`, which absorbs the `1/p!` normalization.
//! Expanding the wedge product,
//!
//! ```text
//! A ∧ d_H B = Σ_{I↑} Σ_ν Σ_{J↑} A_I d_ν B_J dx^I ∧ dx^ν ∧ dx^J
//!           = Σ_{I↑, ν, J↑} ε^{IνJ} A_I B_{J;ν} ω
//! ```
//!
//! with `ε^{IνJ}` the Levi-Civita symbol of the concatenated sequence. Sorting
//! `(ν, J)` into an increasing `K` costs `(−1)^k` when `ν` lands at position
//! `k` (from 0), which gives the field equations
//!
//! ```text
//! ℰ^{A_I} = Σ_{K↑} ε^{IK} (d_H B)_K
//! ℰ^{B_J} = −(−1)^p Σ_{K↑} ε^{KJ} (d_H A)_K
//! (d_H ω)_K = Σ_k (−1)^k d_{K_k} ω_{K∖K_k}
//! ```
//!
//! An `(n−1)`-form `Σ_{K} f_K dx^K` equals `Σ_λ ε^{λK} f_K ω_λ` with
//! `ω_λ = ∂_λ ⌋ ω`, so `ε ∧ d_H B` has current components
//! `σ^λ = Σ ε^{λMνJ} ε_M B_{J;ν}`.
//!
//! Stage `k` of the reducibility chain carries forms of degree `p−k−2` and
//! `q−k−2`; factors of negative degree are dropped and the chain stops once
//! both are negative. A degree-0 form on the `ε` side is named `alpha`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{q_frac, Density, Expr};
use crate::index::{levi_civita, BundleSpec, Coord, FamilyId, FieldFamily, MultiIndex, Role};
use crate::lindop::{op_equal, LinearDiffOp, OperatorRole};
use crate::noether::{
    check_dual_chain, check_factorization, check_gauge_symmetry, check_noether_identity,
    check_noether_identity_witnessed, check_reducibility_chain, dual_noether_chain,
    gauge_to_noether, noether_to_gauge, on_shell_row, ElMap, OnShellWitness, ReducibilityChain,
};
use crate::report::{run_jobs, Check, ClaimRow, Job, ZeroClaim};
use crate::varcalc::{
    euler_lagrange, lie_derive_density, noether_current, total_derivative, CurrentVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    ChernSimons,
    Bf { n: u8, p: u8, q: u8 },
}

/// A Lagrangian system with a gauge symmetry and optional reducibility data.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub kind: ModelKind,
    pub spec: Arc<BundleSpec>,
    pub lagrangian: Density,
    pub gauge_symmetry: LinearDiffOp,
    pub sigma: Option<CurrentVector>,
    pub chain: Option<ReducibilityChain>,
    pub expected_checks: Vec<String>,
    /// Chern–Simons only: the symmetry in the split parameters `(ξ', τ)` and
    /// the reparametrization `h` with `υ = υ' ∘ h`.
    pub splitting: Option<(LinearDiffOp, LinearDiffOp)>,
}

impl Model {
    pub fn dynamic_families(&self) -> Vec<FamilyId> {
        self.spec.families_with_role(Role::DynamicField)
    }

    pub fn euler_lagrange(&self) -> ElMap {
        euler_lagrange(&self.lagrangian, &self.dynamic_families())
    }

    /// Runs the model's suite; checks come back sorted by name.
    pub fn verify(&self) -> Result<Vec<Check>> {
        let el = self.euler_lagrange();
        let jobs = match self.kind {
            ModelKind::ChernSimons => cs_jobs(self, &el),
            ModelKind::Bf { .. } => bf_jobs(self, &el),
        };
        run_jobs(jobs)
    }
}

fn check_name(model: &Model, check: &str) -> String {
    format!("{}/{check}", model.name)
}

// ---------------------------------------------------------------------------
// Chern–Simons

fn eps3(r: u8, p: u8, q: u8) -> i64 {
    levi_civita(&[r, p, q]) as i64
}

struct Cs {
    spec: Arc<BundleSpec>,
    a: FamilyId,
}

impl Cs {
    fn a(&self, r: u8, l: u8) -> Expr {
        Expr::coord(Coord::new(self.a, &[r, l]))
    }

    /// `d_λ a^r_μ`.
    fn da(&self, r: u8, mu: u8, lambda: u8) -> Expr {
        Expr::jet(Coord::new(self.a, &[r, mu]), MultiIndex::single(lambda))
    }

    fn curvature(&self, r: u8, l: u8, m: u8) -> Expr {
        let mut f = &self.da(r, m, l) - &self.da(r, l, m);
        for p in 0..3 {
            for q in 0..3 {
                let c = eps3(r, p, q);
                if c != 0 {
                    f += (&self.a(p, l) * &self.a(q, m)).scale_int(c);
                }
            }
        }
        f
    }

    fn fam(&self, name: &str) -> FamilyId {
        self.spec.family_id(name).expect("cs family")
    }

    fn coord(&self, name: &str, idx: &[u8]) -> Coord {
        Coord::new(self.fam(name), idx)
    }
}

fn cs_spec() -> Arc<BundleSpec> {
    let fams = vec![
        FieldFamily::new("a", Role::DynamicField, vec![3, 3]),
        FieldFamily::new("xi", Role::Parameter, vec![3]),
        FieldFamily::new("tau", Role::Parameter, vec![3]),
        FieldFamily::new("xip", Role::Parameter, vec![3]),
        FieldFamily::new("a_bar", Role::DualField, vec![3, 3]).dual_of("a"),
        FieldFamily::new("xi_bar", Role::DualParameter, vec![3]).dual_of("xi"),
        FieldFamily::new("tau_bar", Role::DualParameter, vec![3]).dual_of("tau"),
        FieldFamily::new("xip_bar", Role::DualParameter, vec![3]).dual_of("xip"),
    ];
    Arc::new(BundleSpec::new(3, fams).expect("cs bundle"))
}

/// Sign pattern of the Chern–Simons gauge symmetry; mutants flip one entry.
#[derive(Clone, Copy, Debug)]
struct CsSigns {
    xi_derivative: i64,
    tau_transport: i64,
}

const CS_SIGNS: CsSigns = CsSigns {
    xi_derivative: 1,
    tau_transport: 1,
};

fn cs_symmetry(cs: &Cs, signs: CsSigns) -> LinearDiffOp {
    let mut entries = Vec::new();
    for r in 0..3u8 {
        for l in 0..3u8 {
            let target = cs.coord("a", &[r, l]);
            for q in 0..3u8 {
                let mut c = Expr::zero();
                for p in 0..3u8 {
                    let e = eps3(r, p, q);
                    if e != 0 {
                        c += cs.a(p, l).scale_int(e);
                    }
                }
                entries.push(((target.clone(), cs.coord("xi", &[q]), MultiIndex::empty()), c));
            }
            entries.push((
                (target.clone(), cs.coord("xi", &[r]), MultiIndex::single(l)),
                Expr::int(signs.xi_derivative),
            ));
            for m in 0..3u8 {
                entries.push((
                    (target.clone(), cs.coord("tau", &[m]), MultiIndex::single(l)),
                    -cs.a(r, m),
                ));
                entries.push((
                    (target.clone(), cs.coord("tau", &[m]), MultiIndex::empty()),
                    cs.da(r, l, m).scale_int(-signs.tau_transport),
                ));
            }
        }
    }
    LinearDiffOp::new(
        cs.spec.clone(),
        vec![cs.fam("xi"), cs.fam("tau")],
        vec![cs.a],
        OperatorRole::GaugeSymmetry,
        entries,
    )
    .expect("cs symmetry")
}

/// The symmetry in `(ξ', τ)`: `c a_λ ξ' + ξ'_λ + τ^μ F_{λμ}`, and the
/// reparametrization `ξ' = ξ − τ^λ a_λ`.
fn cs_split(cs: &Cs) -> (LinearDiffOp, LinearDiffOp) {
    let mut entries = Vec::new();
    for r in 0..3u8 {
        for l in 0..3u8 {
            let target = cs.coord("a", &[r, l]);
            for q in 0..3u8 {
                let mut c = Expr::zero();
                for p in 0..3u8 {
                    let e = eps3(r, p, q);
                    if e != 0 {
                        c += cs.a(p, l).scale_int(e);
                    }
                }
                entries.push(((target.clone(), cs.coord("xip", &[q]), MultiIndex::empty()), c));
            }
            entries.push((
                (target.clone(), cs.coord("xip", &[r]), MultiIndex::single(l)),
                Expr::one(),
            ));
            for m in 0..3u8 {
                entries.push((
                    (target.clone(), cs.coord("tau", &[m]), MultiIndex::empty()),
                    cs.curvature(r, l, m),
                ));
            }
        }
    }
    let split = LinearDiffOp::new(
        cs.spec.clone(),
        vec![cs.fam("xip"), cs.fam("tau")],
        vec![cs.a],
        OperatorRole::GaugeSymmetry,
        entries,
    )
    .expect("cs split symmetry");

    let mut h = Vec::new();
    for r in 0..3u8 {
        h.push((
            (cs.coord("xip", &[r]), cs.coord("xi", &[r]), MultiIndex::empty()),
            Expr::one(),
        ));
        h.push((
            (cs.coord("tau", &[r]), cs.coord("tau", &[r]), MultiIndex::empty()),
            Expr::one(),
        ));
        for l in 0..3u8 {
            h.push((
                (cs.coord("xip", &[r]), cs.coord("tau", &[l]), MultiIndex::empty()),
                -cs.a(r, l),
            ));
        }
    }
    let h = LinearDiffOp::new(
        cs.spec.clone(),
        vec![cs.fam("xi"), cs.fam("tau")],
        vec![cs.fam("xip"), cs.fam("tau")],
        OperatorRole::ChainStage,
        h,
    )
    .expect("reparametrization");
    (split, h)
}

fn cs_lagrangian(cs: &Cs) -> Expr {
    let mut l = Expr::zero();
    for m in 0..3u8 {
        for al in 0..3u8 {
            for be in 0..3u8 {
                for ga in 0..3u8 {
                    let e = eps3(al, be, ga);
                    if e == 0 {
                        continue;
                    }
                    let mut inner = cs.curvature(m, be, ga);
                    for p in 0..3u8 {
                        for q in 0..3u8 {
                            let c = eps3(m, p, q);
                            if c != 0 {
                                inner -= &(&cs.a(p, be) * &cs.a(q, ga)).scale(&q_frac(c, 3));
                            }
                        }
                    }
                    l += (&cs.a(m, al) * &inner).scale(&q_frac(e, 2));
                }
            }
        }
    }
    l
}

fn cs_model(name: &str, signs: CsSigns, scale: i64) -> Model {
    let spec = cs_spec();
    let cs = Cs {
        a: spec.family_id("a").expect("a"),
        spec: spec.clone(),
    };
    let lagrangian = Density::new(spec.clone(), cs_lagrangian(&cs).scale_int(scale));
    let expected = [
        "eta-roundtrip",
        "fe-witnessed",
        "gauge-symmetry",
        "noether-current",
        "noether-roundtrip",
        "noether-tau",
        "noether-xi",
        "splitting-reparam",
        "splitting-tau",
        "splitting-xi",
        "tau-row-displayed",
        "xi-row-displayed",
    ];
    Model {
        name: name.into(),
        kind: ModelKind::ChernSimons,
        lagrangian,
        gauge_symmetry: cs_symmetry(&cs, signs),
        sigma: None,
        chain: None,
        expected_checks: expected.iter().map(|c| format!("{name}/{c}")).collect(),
        splitting: Some(cs_split(&cs)),
        spec,
    }
}

/// Chern–Simons model with structure constants `ε_{rpq}`.
pub fn build_chern_simons() -> Model {
    cs_model("cs", CS_SIGNS, 1)
}

/// The Chern–Simons model with its Lagrangian multiplied by `k`.
pub fn build_chern_simons_rescaled(k: i64) -> Model {
    cs_model(&format!("cs*{k}"), CS_SIGNS, k)
}

/// The reparametrized symmetry in `(ξ', τ)`.
pub fn cs_splitting_variant(model: &Model) -> Result<LinearDiffOp> {
    model
        .splitting
        .as_ref()
        .map(|(s, _)| s.clone())
        .ok_or_else(|| Error::InvalidModel(format!("`{}` has no splitting variant", model.name)))
}

/// `F^r_{λμ}` for the model's connection coordinates.
pub fn cs_curvature(model: &Model, r: u8, l: u8, m: u8) -> Expr {
    let cs = Cs {
        a: model.spec.family_id("a").expect("a"),
        spec: model.spec.clone(),
    };
    cs.curvature(r, l, m)
}

/// `c^r_pq a^p_λ ℰ^λ_r − d_λ ℰ^λ_q`.
pub fn cs_displayed_xi_row(model: &Model, el: &ElMap, q: u8) -> Expr {
    let a = model.spec.family_id("a").expect("a");
    let mut out = Expr::zero();
    for l in 0..3u8 {
        for r in 0..3u8 {
            for p in 0..3u8 {
                let e = eps3(r, p, q);
                if e != 0 {
                    out += (&Expr::coord(Coord::new(a, &[p, l])) * &el[&Coord::new(a, &[r, l])])
                        .scale_int(e);
                }
            }
        }
        out -= &total_derivative(&el[&Coord::new(a, &[q, l])], l);
    }
    out
}

/// `−a^r_{μλ} ℰ^λ_r + d_λ(a^r_μ ℰ^λ_r)` with `a^r_{μλ} = d_μ a^r_λ`.
pub fn cs_displayed_tau_row(model: &Model, el: &ElMap, mu: u8) -> Expr {
    let a = model.spec.family_id("a").expect("a");
    let mut out = Expr::zero();
    for r in 0..3u8 {
        for l in 0..3u8 {
            let e = &el[&Coord::new(a, &[r, l])];
            let da = Expr::jet(Coord::new(a, &[r, l]), MultiIndex::single(mu));
            out -= &(&da * e);
            out += total_derivative(&(&Expr::coord(Coord::new(a, &[r, mu])) * e), l);
        }
    }
    out
}

fn rows_with_prefix(mut check: Check, prefix: &str) -> Check {
    check.rows.retain(|r| r.label.starts_with(prefix));
    check
}

fn roundtrip_check(name: String, op: &LinearDiffOp, back: &LinearDiffOp) -> Result<Check> {
    let mut check = Check::new(name, op.spec().clone());
    let diff = back.sub(op)?;
    for (a, v) in diff.as_vector_components() {
        check.rows.push(ClaimRow::plain(op.spec().coord_name(&a), v));
    }
    if !op_equal(op, back) && check.rows.iter().all(|r| r.residual.is_zero()) {
        check.failures.push("operators differ".into());
    }
    Ok(check)
}

/// Compares a generated Noether row with its displayed form. A pure overall
/// sign difference is reported but still passes.
fn displayed_row_check(
    name: String,
    spec: &Arc<BundleSpec>,
    generated: &Check,
    displayed: &[(String, Expr)],
) -> Check {
    let mut check = Check::new(name, spec.clone());
    let mut flipped = false;
    for (label, shown) in displayed {
        let row = generated
            .rows
            .iter()
            .find(|r| &r.label == label)
            .expect("generated row");
        let mut claim = row.oracle.clone();
        claim.push(vec![shown.clone(), crate::expr::Expr::int(-1)]);
        let diff = claim.expand();
        if !diff.is_zero() && (&row.residual + shown).is_zero() {
            flipped = true;
            let mut claim = row.oracle.clone();
            claim.push(vec![shown.clone()]);
            check.rows.push(ClaimRow::new(label.clone(), claim.expand(), claim));
        } else {
            check.rows.push(ClaimRow::new(label.clone(), diff, claim));
        }
    }
    check.notes.push(if flipped {
        "generated row is minus the displayed row".into()
    } else {
        "generated row equals the displayed row".into()
    });
    check
}

fn cs_jobs<'a>(m: &'a Model, el: &'a ElMap) -> Vec<Job<'a>> {
    let spec = m.spec.clone();
    let u = &m.gauge_symmetry;
    let mut jobs: Vec<Job<'a>> = Vec::new();
    jobs.push(Box::new(move || {
        check_gauge_symmetry(&check_name(m, "gauge-symmetry"), u, &m.lagrangian)
    }));
    jobs.push(Box::new(move || {
        let delta = gauge_to_noether(u)?;
        let all = check_noether_identity(&check_name(m, "noether-xi"), &delta, el)?;
        Ok(rows_with_prefix(all, "xi_bar").with_note("rows xi_bar[q]"))
    }));
    jobs.push(Box::new(move || {
        let delta = gauge_to_noether(u)?;
        let all = check_noether_identity(&check_name(m, "noether-tau"), &delta, el)?;
        Ok(rows_with_prefix(all, "tau_bar").with_note("rows tau_bar[mu]"))
    }));
    let spec1 = spec.clone();
    jobs.push(Box::new(move || {
        let delta = gauge_to_noether(u)?;
        let generated = check_noether_identity("", &delta, el)?;
        let shown: Vec<(String, Expr)> = (0..3)
            .map(|q| (format!("xi_bar[{q}]"), cs_displayed_xi_row(m, el, q)))
            .collect();
        Ok(displayed_row_check(check_name(m, "xi-row-displayed"), &spec1, &generated, &shown))
    }));
    let spec2 = spec.clone();
    jobs.push(Box::new(move || {
        let delta = gauge_to_noether(u)?;
        let generated = check_noether_identity("", &delta, el)?;
        let shown: Vec<(String, Expr)> = (0..3)
            .map(|mu| (format!("tau_bar[{mu}]"), cs_displayed_tau_row(m, el, mu)))
            .collect();
        Ok(displayed_row_check(check_name(m, "tau-row-displayed"), &spec2, &generated, &shown))
    }));
    let spec3 = spec.clone();
    jobs.push(Box::new(move || {
        let a = spec3.family_id("a")?;
        let mut check = Check::new(check_name(m, "fe-witnessed"), spec3.clone());
        for mu in 0..3u8 {
            let mut lhs = Expr::zero();
            let mut w = OnShellWitness::new();
            for r in 0..3u8 {
                for l in 0..3u8 {
                    let f = cs_curvature(m, r, l, mu);
                    lhs += &f * &el[&Coord::new(a, &[r, l])];
                    w.insert(Coord::new(a, &[r, l]), MultiIndex::empty(), f);
                }
            }
            check
                .rows
                .push(on_shell_row(format!("mu={mu}"), &spec3, &lhs, el, &w)?);
        }
        Ok(check)
    }));
    jobs.push(Box::new(move || {
        let back = u.adjoint_eta()?.adjoint_eta()?;
        roundtrip_check(check_name(m, "eta-roundtrip"), u, &back)
    }));
    jobs.push(Box::new(move || {
        let delta = gauge_to_noether(u)?;
        let back = gauge_to_noether(&noether_to_gauge(&delta)?)?;
        roundtrip_check(check_name(m, "noether-roundtrip"), &delta, &back)
    }));
    if let Some((split, h)) = &m.splitting {
        jobs.push(Box::new(move || {
            let delta = gauge_to_noether(split)?;
            let all = check_noether_identity(&check_name(m, "splitting-xi"), &delta, el)?;
            Ok(rows_with_prefix(all, "xip_bar"))
        }));
        let spec4 = spec.clone();
        jobs.push(Box::new(move || {
            let a = spec4.family_id("a")?;
            let tau_bar = spec4.family_id("tau_bar")?;
            let mut witnesses = BTreeMap::new();
            for mu in 0..3u8 {
                let mut w = OnShellWitness::new();
                for r in 0..3u8 {
                    for l in 0..3u8 {
                        w.insert(Coord::new(a, &[r, l]), MultiIndex::empty(), cs_curvature(m, r, l, mu));
                    }
                }
                witnesses.insert(Coord::new(tau_bar, &[mu]), w);
            }
            let delta = gauge_to_noether(split)?;
            let all = check_noether_identity_witnessed(
                &check_name(m, "splitting-tau"),
                &delta,
                el,
                &witnesses,
            )?;
            Ok(rows_with_prefix(all, "tau_bar").with_note("witness cofactors F^r_{lambda mu}"))
        }));
        jobs.push(Box::new(move || {
            check_factorization(&check_name(m, "splitting-reparam"), u, split, h, el, &BTreeMap::new())
        }));
    }
    let spec5 = spec.clone();
    jobs.push(Box::new(move || {
        Ok(Check::skipped(
            check_name(m, "noether-current"),
            spec5.clone(),
            "no sigma supplied for this model",
        ))
    }));
    jobs
}

// ---------------------------------------------------------------------------
// BF

fn form_family(name: &str, role: Role, degree: u8, n: u8) -> FieldFamily {
    let f = FieldFamily::new(name, role, vec![n; degree as usize]);
    if degree >= 2 {
        f.antisym()
    } else {
        f
    }
}

fn dual_role(role: Role) -> Role {
    role.dual().expect("non-base role")
}

/// One factor of a chain stage: family name and form degree.
#[derive(Clone, Debug, PartialEq, Eq)]
struct StageFactor {
    name: String,
    degree: u8,
}

/// Stage families per the degeneracy rule; `stages[k] = (ε side, ξ side)`.
fn bf_stage_layout(p: u8, q: u8) -> Vec<(Option<StageFactor>, Option<StageFactor>)> {
    let mut out = Vec::new();
    for k in 0.. {
        let de = p as i32 - k - 2;
        let dx = q as i32 - k - 2;
        if de < 0 && dx < 0 {
            break;
        }
        let e = (de >= 0).then(|| StageFactor {
            name: if de == 0 { "alpha".into() } else { format!("eps{k}") },
            degree: de as u8,
        });
        let x = (dx >= 0).then(|| StageFactor {
            name: format!("xi{k}"),
            degree: dx as u8,
        });
        out.push((e, x));
    }
    out
}

/// Component form of `d_H` from a degree-`d` family to a degree-`d+1`
/// family, as `(target, source, direction, sign)` entries.
fn dh_entries(spec: &BundleSpec, from: FamilyId, to: FamilyId) -> Vec<((Coord, Coord, MultiIndex), Expr)> {
    let mut out = Vec::new();
    for target in spec.components(to) {
        let k_idx = target.comp.clone();
        for (k, &dir) in k_idx.iter().enumerate() {
            let rest: Vec<u8> = k_idx
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &v)| v)
                .collect();
            let source = Coord::new(from, &rest);
            let sign = if k % 2 == 0 { 1 } else { -1 };
            out.push(((target.clone(), source, MultiIndex::single(dir)), Expr::int(sign)));
        }
    }
    out
}

/// `(d_H ω)_K = Σ_k (−1)^k d_{K_k} ω_{K∖K_k}` for any expression-valued
/// components `omega`.
fn dh_component(omega: &dyn Fn(&[u8]) -> Expr, k_idx: &[u8]) -> Expr {
    let mut out = Expr::zero();
    for (k, &dir) in k_idx.iter().enumerate() {
        let rest: Vec<u8> = k_idx
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &v)| v)
            .collect();
        let d = total_derivative(&omega(&rest), dir);
        out += if k % 2 == 0 { d } else { -d };
    }
    out
}

/// Per-entry sign overrides for mutants: `(target family, target comp,
/// direction) ↦ −1`.
type Flips = Vec<(String, Vec<u8>, u8)>;

fn check_bf_params(n: u8, p: u8, q: u8) -> Result<()> {
    if p < 1 || q < 1 || p as u16 + q as u16 + 1 != n as u16 {
        return Err(Error::InvalidModel(format!(
            "BF needs p >= 1, q >= 1 and p + q = n - 1; got n={n}, p={p}, q={q}"
        )));
    }
    Ok(())
}

fn bf_spec(n: u8, p: u8, q: u8) -> Arc<BundleSpec> {
    let mut fams = vec![
        form_family("A", Role::DynamicField, p, n),
        form_family("B", Role::DynamicField, q, n),
        form_family("eps", Role::Parameter, p - 1, n),
        form_family("xi", Role::Parameter, q - 1, n),
    ];
    for (e, x) in bf_stage_layout(p, q) {
        for f in [e, x].into_iter().flatten() {
            fams.push(form_family(&f.name, Role::Parameter, f.degree, n));
        }
    }
    let duals: Vec<FieldFamily> = fams
        .iter()
        .map(|f| {
            let d = form_family(&format!("{}_bar", f.name), dual_role(f.role), f.shape.len() as u8, n);
            d.dual_of(f.name.clone())
        })
        .collect();
    fams.extend(duals);
    Arc::new(BundleSpec::new(n, fams).expect("bf bundle"))
}

fn apply_flips(
    spec: &BundleSpec,
    entries: &mut [((Coord, Coord, MultiIndex), Expr)],
    flips: &Flips,
) {
    for ((a, _, jet), c) in entries.iter_mut() {
        for (fam, comp, dir) in flips {
            if spec.family(a.family).name == *fam
                && a.comp.as_slice() == comp.as_slice()
                && jet.entries() == [*dir]
            {
                *c = -&*c;
            }
        }
    }
}

fn bf_model(n: u8, p: u8, q: u8, name: String, flips: &Flips) -> Result<Model> {
    check_bf_params(n, p, q)?;
    let spec = bf_spec(n, p, q);
    let fid = |s: &str| spec.family_id(s).expect("bf family");
    let (fa, fb, fe, fx) = (fid("A"), fid("B"), fid("eps"), fid("xi"));

    let mut lag = Expr::zero();
    for i in spec.components(fa) {
        for nu in 0..n {
            for j in spec.components(fb) {
                let seq: Vec<u8> = i.comp.iter().copied().chain([nu]).chain(j.comp.iter().copied()).collect();
                let e = levi_civita(&seq);
                if e != 0 {
                    let bj = Expr::jet(j.clone(), MultiIndex::single(nu));
                    lag += (&Expr::coord(i.clone()) * &bj).scale_int(e as i64);
                }
            }
        }
    }
    let lagrangian = Density::new(spec.clone(), lag);

    let mut entries = dh_entries(&spec, fe, fa);
    entries.extend(dh_entries(&spec, fx, fb));
    apply_flips(&spec, &mut entries, flips);
    let gauge_symmetry = LinearDiffOp::new(
        spec.clone(),
        vec![fe, fx],
        vec![fa, fb],
        OperatorRole::GaugeSymmetry,
        entries,
    )?;

    let mut sigma = Vec::with_capacity(n as usize);
    for lambda in 0..n {
        let mut s = Expr::zero();
        for m in spec.components(fe) {
            for nu in 0..n {
                for j in spec.components(fb) {
                    let seq: Vec<u8> = [lambda]
                        .into_iter()
                        .chain(m.comp.iter().copied())
                        .chain([nu])
                        .chain(j.comp.iter().copied())
                        .collect();
                    let e = levi_civita(&seq);
                    if e != 0 {
                        let bj = Expr::jet(j.clone(), MultiIndex::single(nu));
                        s += (&Expr::coord(m.clone()) * &bj).scale_int(e as i64);
                    }
                }
            }
        }
        sigma.push(s);
    }

    let mut stages = Vec::new();
    let mut prev = (Some(fe), Some(fx));
    for (e, x) in bf_stage_layout(p, q) {
        let cur = (e.map(|f| fid(&f.name)), x.map(|f| fid(&f.name)));
        let mut entries = Vec::new();
        // the target is the whole previous stage, even where no factor maps in
        let source: Vec<FamilyId> = [cur.0, cur.1].into_iter().flatten().collect();
        let target: Vec<FamilyId> = [prev.0, prev.1].into_iter().flatten().collect();
        for (from, to) in [(cur.0, prev.0), (cur.1, prev.1)] {
            if let (Some(from), Some(to)) = (from, to) {
                entries.extend(dh_entries(&spec, from, to));
            }
        }
        stages.push(LinearDiffOp::new(
            spec.clone(),
            source,
            target,
            OperatorRole::ChainStage,
            entries,
        )?);
        prev = cur;
    }

    let checks = [
        "chain",
        "dual-chain",
        "dual-chain-pattern",
        "euler-lagrange",
        "gauge-symmetry",
        "noether-current",
        "noether-identity",
        "sigma-identity",
    ];
    Ok(Model {
        expected_checks: checks.iter().map(|c| format!("{name}/{c}")).collect(),
        name,
        kind: ModelKind::Bf { n, p, q },
        lagrangian,
        gauge_symmetry,
        sigma: Some(CurrentVector::new(sigma)),
        chain: Some(ReducibilityChain::new(stages)),
        splitting: None,
        spec,
    })
}

/// BF model `A ∧ d_H B` with `|A| = p`, `|B| = q`, `p + q = n − 1`.
pub fn build_bf(n: u8, p: u8, q: u8) -> Result<Model> {
    bf_model(n, p, q, format!("bf:{n}:{p}:{q}"), &Vec::new())
}

/// The model's reducibility chain.
pub fn build_bf_chain(n: u8, p: u8, q: u8) -> Result<ReducibilityChain> {
    Ok(build_bf(n, p, q)?.chain.expect("bf chain"))
}

/// `ℰ^{A_I}` and `ℰ^{B_J}` written as contracted components of `d_H B` and
/// `d_H A`.
pub fn bf_expected_euler_lagrange(model: &Model) -> Result<ElMap> {
    let ModelKind::Bf { n, p, .. } = model.kind else {
        return Err(Error::InvalidModel(format!("`{}` is not a BF model", model.name)));
    };
    let spec = &model.spec;
    let (fa, fb) = (spec.family_id("A")?, spec.family_id("B")?);
    let comp_of = |fam: FamilyId| {
        let spec = spec.clone();
        move |idx: &[u8]| -> Expr {
            match spec.coord(fam, idx).expect("in range") {
                Some((c, s)) => Expr::coord(c).scale_int(s as i64),
                None => Expr::zero(),
            }
        }
    };
    let a_of = comp_of(fa);
    let b_of = comp_of(fb);
    let mut out = ElMap::new();
    let pdeg = p as usize;
    let qdeg = model.spec.family(fb).shape.len();
    for i in spec.components(fa) {
        let mut e = Expr::zero();
        for k in crate::index::increasing_tuples(n, qdeg + 1) {
            let seq: Vec<u8> = i.comp.iter().chain(k.iter()).copied().collect();
            let s = levi_civita(&seq);
            if s != 0 {
                e += dh_component(&b_of, &k).scale_int(s as i64);
            }
        }
        out.insert(i, e);
    }
    let sign = if pdeg.is_multiple_of(2) { -1 } else { 1 };
    for j in spec.components(fb) {
        let mut e = Expr::zero();
        for k in crate::index::increasing_tuples(n, pdeg + 1) {
            let seq: Vec<u8> = k.iter().chain(j.comp.iter()).copied().collect();
            let s = levi_civita(&seq);
            if s != 0 {
                e += dh_component(&a_of, &k).scale_int(sign * s as i64);
            }
        }
        out.insert(j, e);
    }
    Ok(out)
}

fn bf_jobs<'a>(m: &'a Model, el: &'a ElMap) -> Vec<Job<'a>> {
    let spec = m.spec.clone();
    let u = &m.gauge_symmetry;
    let mut jobs: Vec<Job<'a>> = Vec::new();
    jobs.push(Box::new(move || {
        check_gauge_symmetry(&check_name(m, "gauge-symmetry"), u, &m.lagrangian)
    }));
    jobs.push(Box::new(move || {
        check_noether_identity(&check_name(m, "noether-identity"), &gauge_to_noether(u)?, el)
    }));
    let spec1 = spec.clone();
    jobs.push(Box::new(move || {
        let expected = bf_expected_euler_lagrange(m)?;
        let mut check = Check::new(check_name(m, "euler-lagrange"), spec1.clone());
        for (c, e) in el {
            let mut claim = ZeroClaim::single(e.clone());
            claim.push(vec![expected[c].clone(), Expr::int(-1)]);
            check
                .rows
                .push(ClaimRow::new(spec1.coord_name(c), claim.expand(), claim));
        }
        Ok(check)
    }));
    let spec2 = spec.clone();
    jobs.push(Box::new(move || {
        let mut check = Check::new(check_name(m, "sigma-identity"), spec2.clone());
        let sigma = m.sigma.as_ref().expect("bf sigma");
        let lie = lie_derive_density(&m.lagrangian, &crate::noether::vector_field_of(u))?;
        let mut claim = ZeroClaim::single(lie.coeff);
        for (lambda, s) in sigma.components.iter().enumerate() {
            claim.push(vec![total_derivative(s, lambda as u8), Expr::int(-1)]);
        }
        check.rows.push(ClaimRow::new("L_v L - d_lambda sigma^lambda", claim.expand(), claim));
        Ok(check)
    }));
    let spec3 = spec.clone();
    jobs.push(Box::new(move || {
        let mut check = Check::new(check_name(m, "noether-current"), spec3.clone());
        let sigma = m.sigma.as_ref().expect("bf sigma");
        let field = crate::noether::vector_field_of(u);
        match noether_current(&m.lagrangian, &field, sigma) {
            Ok(j) => {
                let mut claim = ZeroClaim::default();
                for (lambda, jl) in j.components.iter().enumerate() {
                    claim.push(vec![total_derivative(jl, lambda as u8)]);
                }
                for (c, comp) in &field.components {
                    claim.push(vec![comp.clone(), el[c].clone()]);
                }
                check
                    .rows
                    .push(ClaimRow::new("d_lambda J^lambda + v^i E_i", claim.expand(), claim));
            }
            Err(e) => check.failures.push(e.to_string()),
        }
        Ok(check)
    }));
    let chain = m.chain.as_ref().expect("bf chain");
    let dropped = match m.kind {
        ModelKind::Bf { p, q, .. } => bf_stage_layout(p, q)
            .iter()
            .any(|(e, x)| e.is_none() || x.is_none()),
        _ => false,
    };
    jobs.push(Box::new(move || {
        let c = check_reducibility_chain(&check_name(m, "chain"), u, chain, el)?;
        Ok(if dropped {
            c.with_note("degenerate factors dropped")
        } else {
            c
        })
    }));
    jobs.push(Box::new(move || {
        let duals = dual_noether_chain(chain)?;
        check_dual_chain(&check_name(m, "dual-chain"), u, &duals)
    }));
    let spec4 = spec.clone();
    jobs.push(Box::new(move || {
        let duals = dual_noether_chain(chain)?;
        let mut check = Check::new(check_name(m, "dual-chain-pattern"), spec4.clone());
        for (k, (stage, dual)) in chain.stages.iter().zip(&duals).enumerate() {
            let want = transpose_first_order(stage)?;
            let keys: std::collections::BTreeSet<_> =
                dual.coeffs().keys().chain(want.keys()).cloned().collect();
            for key in keys {
                let got = dual.coeffs().get(&key).cloned().unwrap_or_default();
                let expect = want.get(&key).cloned().unwrap_or_default();
                let mut claim = ZeroClaim::single(got);
                claim.push(vec![expect, Expr::int(-1)]);
                let (a, r, l) = &key;
                check.rows.push(ClaimRow::new(
                    format!("dual{k}[{} <- {}{}]", spec4.coord_name(a), spec4.coord_name(r), l),
                    claim.expand(),
                    claim,
                ));
            }
        }
        Ok(check.with_note("Delta_k = -[stage_k transposed] d_mu"))
    }));
    jobs
}

/// `(r̄, ā, Λ) ↦ −c(a, r, Λ)` for a constant-coefficient first-order operator.
fn transpose_first_order(op: &LinearDiffOp) -> Result<BTreeMap<(Coord, Coord, MultiIndex), Expr>> {
    let spec = op.spec();
    let mut out = BTreeMap::new();
    for ((a, r, l), c) in op.coeffs() {
        out.insert((spec.dual_coord(r)?, spec.dual_coord(a)?, l.clone()), -c);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Selection and mutants

/// BF configurations exercised by `all`.
pub const BF_CONFIGS: [(u8, u8, u8); 3] = [(3, 1, 1), (5, 2, 2), (6, 2, 3)];

/// Parses `cs`, `bf:<n>:<p>:<q>` or `all`.
pub fn select(selector: &str) -> Result<Vec<Model>> {
    match selector {
        "cs" => Ok(vec![build_chern_simons()]),
        "all" => {
            let mut out = vec![build_chern_simons()];
            for (n, p, q) in BF_CONFIGS {
                out.push(build_bf(n, p, q)?);
            }
            Ok(out)
        }
        s if s.starts_with("bf:") => {
            let parts: Vec<&str> = s[3..].split(':').collect();
            let nums: Vec<u8> = parts
                .iter()
                .map(|t| t.parse::<u8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidModel(format!("bad selector `{s}`")))?;
            match nums.as_slice() {
                [n, p, q] => Ok(vec![build_bf(*n, *p, *q)?]),
                _ => Err(Error::InvalidModel(format!("bad selector `{s}`"))),
            }
        }
        s => Err(Error::InvalidModel(format!("unknown model `{s}`"))),
    }
}

/// Models with one deliberately flipped sign in the gauge symmetry.
pub fn mutants() -> Vec<Model> {
    let flip_xi = CsSigns {
        xi_derivative: -1,
        ..CS_SIGNS
    };
    let flip_tau = CsSigns {
        tau_transport: -1,
        ..CS_SIGNS
    };
    vec![
        cs_model("mutant:cs-xi-derivative", flip_xi, 1),
        cs_model("mutant:cs-tau-transport", flip_tau, 1),
        bf_model(
            5,
            2,
            2,
            "mutant:bf-5-2-2-A01".into(),
            &vec![("A".into(), vec![0, 1], 1)],
        )
        .expect("valid configuration"),
    ]
}

/// Verdicts of the gauge-symmetry check and the Noether-identity check.
pub fn symmetry_identity_verdicts(model: &Model) -> Result<(bool, bool)> {
    let el = model.euler_lagrange();
    let g = check_gauge_symmetry("g", &model.gauge_symmetry, &model.lagrangian)?;
    let n = check_noether_identity("n", &gauge_to_noether(&model.gauge_symmetry)?, &el)?;
    Ok((g.passed(), n.passed()))
}
