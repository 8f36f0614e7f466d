//! Gauge symmetries, Noether identities and reducibility chains.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Density, Expr};
use crate::index::{BundleSpec, Coord, FamilyId, MultiIndex, Role};
use crate::lindop::{LinearDiffOp, OperatorRole};
use crate::report::{random_point, Check, ClaimRow, ZeroClaim};
use crate::varcalc::{
    euler_lagrange_terms, iterated_total_derivative, lie_derive_density, total_derivative,
    variational_derivative,
};

pub type ElMap = BTreeMap<Coord, Expr>;

/// `Δ = η(υ)` for a gauge symmetry `υ`.
pub fn gauge_to_noether(u: &LinearDiffOp) -> Result<LinearDiffOp> {
    if u.role() != OperatorRole::GaugeSymmetry {
        return Err(Error::RoleMismatch(format!("expected a gauge symmetry, got {:?}", u.role())));
    }
    u.adjoint_eta()
}

/// `υ = η(Δ)` for a Noether operator `Δ`.
pub fn noether_to_gauge(delta: &LinearDiffOp) -> Result<LinearDiffOp> {
    if delta.role() != OperatorRole::Noether {
        return Err(Error::RoleMismatch(format!(
            "expected a Noether operator, got {:?}",
            delta.role()
        )));
    }
    delta.adjoint_eta()
}

/// Memoized `d_Λ ℰ_i`.
struct ElJets<'a> {
    el: &'a ElMap,
    spec: &'a BundleSpec,
    cache: HashMap<(Coord, MultiIndex), Expr>,
}

impl<'a> ElJets<'a> {
    fn new(el: &'a ElMap, spec: &'a BundleSpec) -> Self {
        ElJets {
            el,
            spec,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, i: &Coord, jet: &MultiIndex) -> Result<Expr> {
        let key = (i.clone(), jet.clone());
        if let Some(e) = self.cache.get(&key) {
            return Ok(e.clone());
        }
        let base = self
            .el
            .get(i)
            .ok_or_else(|| Error::MissingComponent(self.spec.coord_name(i)))?;
        let d = iterated_total_derivative(base, jet);
        self.cache.insert(key, d.clone());
        Ok(d)
    }
}

/// Rows `Σ_{i,Λ} Δ^{i,Λ}_r d_Λ ℰ_i`, one per component of the parameter
/// duals `Δ` maps to.
pub fn check_noether_identity(name: &str, delta: &LinearDiffOp, el: &ElMap) -> Result<Check> {
    check_noether_identity_witnessed(name, delta, el, &BTreeMap::new())
}

/// As [`check_noether_identity`], with rows allowed to vanish on-shell up to
/// a witness keyed by the row's parameter-dual component.
pub fn check_noether_identity_witnessed(
    name: &str,
    delta: &LinearDiffOp,
    el: &ElMap,
    witnesses: &BTreeMap<Coord, OnShellWitness>,
) -> Result<Check> {
    if delta.role() != OperatorRole::Noether {
        return Err(Error::RoleMismatch(format!(
            "expected a Noether operator, got {:?}",
            delta.role()
        )));
    }
    let spec = delta.spec().clone();
    let mut jets = ElJets::new(el, &spec);
    let mut rows: BTreeMap<Coord, ZeroClaim> = delta
        .target_components()
        .into_iter()
        .map(|r| (r, ZeroClaim::default()))
        .collect();
    for ((rbar, ibar, jet), c) in delta.coeffs() {
        let i = spec.dual_coord(ibar)?;
        let d = jets.get(&i, jet)?;
        rows.get_mut(rbar)
            .expect("target component")
            .push(vec![c.clone(), d]);
    }
    let mut check = Check::new(name, spec.clone());
    for (rbar, mut claim) in rows {
        if let Some(w) = witnesses.get(&rbar) {
            for mut t in w.combination(&mut jets)?.terms {
                t.push(Expr::int(-1));
                claim.push(t);
            }
        }
        let residual = claim.expand();
        check
            .rows
            .push(ClaimRow::new(spec.coord_name(&rbar), residual, claim));
    }
    Ok(check)
}

/// Dynamic-field components `υ^i = Σ c ξ_Λ` of a gauge symmetry.
pub fn vector_field_of(u: &LinearDiffOp) -> crate::varcalc::GeneralizedVectorField {
    crate::varcalc::GeneralizedVectorField::new(u.as_vector_components())
}

/// Passes iff `δ(L_ϑ ℒ)` vanishes over fields and parameters.
pub fn check_gauge_symmetry(name: &str, u: &LinearDiffOp, l: &Density) -> Result<Check> {
    let spec = u.spec().clone();
    for &f in u.target() {
        if spec.role(f) != Role::DynamicField {
            return Err(Error::FamilyMismatch(format!(
                "`{}` is not a dynamic field",
                spec.family(f).name
            )));
        }
    }
    for f in l.coeff.families() {
        if spec.role(f) == Role::DynamicField && !u.target().contains(&f) {
            return Err(Error::FamilyMismatch(format!(
                "the symmetry has no component along `{}`",
                spec.family(f).name
            )));
        }
    }
    let lie = lie_derive_density(l, &vector_field_of(u))?;
    let mut coords: Vec<Coord> = lie
        .coeff
        .variables()
        .into_iter()
        .filter(|v| !v.is_base())
        .map(|v| v.coord)
        .collect();
    coords.dedup();
    let mut check = Check::new(name, spec.clone());
    for c in coords {
        let mut claim = ZeroClaim::default();
        for t in euler_lagrange_terms(&lie.coeff, &c) {
            claim.push(vec![t]);
        }
        let residual = variational_derivative(&lie.coeff, &c);
        check.rows.push(ClaimRow::new(
            format!("delta[{}]", spec.coord_name(&c)),
            residual,
            claim,
        ));
    }
    Ok(check)
}

/// Cofactors `M^{i,Λ}` certifying `A = Σ M^{i,Λ} d_Λ ℰ_i`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OnShellWitness {
    pub cofactors: BTreeMap<(Coord, MultiIndex), Expr>,
}

impl OnShellWitness {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, field: Coord, jet: MultiIndex, cofactor: Expr) -> &mut Self {
        let slot = self.cofactors.entry((field, jet)).or_default();
        *slot += cofactor;
        self
    }

    /// Witness for `d_λ A`: `Σ (d_λ M^{i,Λ}) d_Λℰ_i + M^{i,Λ} d_{Λ+λ}ℰ_i`.
    pub fn shift(&self, lambda: u8) -> OnShellWitness {
        let mut out = OnShellWitness::new();
        for ((i, jet), m) in &self.cofactors {
            out.insert(i.clone(), jet.clone(), total_derivative(m, lambda));
            out.insert(i.clone(), jet.with(lambda), m.clone());
        }
        out.cofactors.retain(|_, m| !m.is_zero());
        out
    }

    fn combination(&self, jets: &mut ElJets<'_>) -> Result<ZeroClaim> {
        let mut claim = ZeroClaim::default();
        for ((i, jet), m) in &self.cofactors {
            claim.push(vec![m.clone(), jets.get(i, jet)?]);
        }
        Ok(claim)
    }
}

/// Row for `A − Σ M^{i,Λ} d_Λ ℰ_i`.
pub fn on_shell_row(
    label: impl Into<String>,
    spec: &BundleSpec,
    a: &Expr,
    el: &ElMap,
    witness: &OnShellWitness,
) -> Result<ClaimRow> {
    let mut jets = ElJets::new(el, spec);
    let comb = witness.combination(&mut jets)?;
    let mut claim = ZeroClaim::single(a.clone());
    for mut t in comb.terms {
        t.push(Expr::int(-1));
        claim.push(t);
    }
    let residual = claim.expand();
    Ok(ClaimRow::new(label, residual, claim))
}

/// True iff `A − Σ M^{i,Λ} d_Λ ℰ_i` is identically zero. With an empty
/// witness this is an exact-zero test. Missing `ℰ` rows count as false.
pub fn check_on_shell_zero(spec: &BundleSpec, a: &Expr, el: &ElMap, witness: &OnShellWitness) -> bool {
    on_shell_row("", spec, a, el, witness)
        .map(|r| r.residual.is_zero())
        .unwrap_or(false)
}

/// Antisymmetric cofactor table `T^{i,j,Λ,Σ}_r`, keyed `(i, j, Λ, Σ, r)`.
pub type TrivialCofactors = BTreeMap<(Coord, Coord, MultiIndex, MultiIndex, Coord), Expr>;

/// `υ = η(M)` with `M^{i,Λ}_r = Σ_{j,Σ} T^{i,j,Λ,Σ}_r d_Σ ℰ_j`.
///
/// `params` are the parameter families `r` ranges over; the dynamic fields
/// are read off `el`.
pub fn make_trivial_gauge_symmetry(
    spec: Arc<BundleSpec>,
    params: Vec<FamilyId>,
    t: &TrivialCofactors,
    el: &ElMap,
) -> Result<LinearDiffOp> {
    for ((i, j, lam, sig, r), v) in t {
        let swapped = t
            .get(&(j.clone(), i.clone(), sig.clone(), lam.clone(), r.clone()))
            .cloned()
            .unwrap_or_default();
        if swapped != -v {
            return Err(Error::Antisymmetry(format!(
                "T[{}, {}, {}, {}; {}]",
                spec.coord_name(i),
                spec.coord_name(j),
                lam,
                sig,
                spec.coord_name(r)
            )));
        }
    }
    let mut fields: Vec<FamilyId> = el.keys().map(|c| c.family).collect();
    fields.dedup();
    let source = fields
        .iter()
        .map(|&f| spec.dual(f))
        .collect::<Result<Vec<_>>>()?;
    let target = params
        .iter()
        .map(|&f| spec.dual(f))
        .collect::<Result<Vec<_>>>()?;
    let mut jets = ElJets::new(el, &spec);
    let mut entries = Vec::new();
    for ((i, j, lam, sig, r), v) in t {
        let d = jets.get(j, sig)?;
        entries.push((
            (spec.dual_coord(r)?, spec.dual_coord(i)?, lam.clone()),
            v * &d,
        ));
    }
    let m = LinearDiffOp::new(spec, source, target, OperatorRole::Noether, entries)?;
    noether_to_gauge(&m)
}

/// Stage operators `υ⁰, …, υᴺ` with optional witnesses for the compositions
/// `υ^{k−1} ∘ υ^k`, keyed by target component.
#[derive(Clone, Debug, Default)]
pub struct ReducibilityChain {
    pub stages: Vec<LinearDiffOp>,
    pub witnesses: Vec<BTreeMap<Coord, OnShellWitness>>,
}

impl ReducibilityChain {
    pub fn new(stages: Vec<LinearDiffOp>) -> Self {
        let witnesses = vec![BTreeMap::new(); stages.len()];
        ReducibilityChain { stages, witnesses }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

/// Rows asserting `outer ∘ inner ≈ 0` componentwise. The residual comes from
/// the composed coefficient table; the oracle applies `inner` to the
/// identity section and then `outer` term by term.
fn composition_rows(
    label: &str,
    outer: &LinearDiffOp,
    inner: &LinearDiffOp,
    el: &ElMap,
    witnesses: &BTreeMap<Coord, OnShellWitness>,
) -> Result<Vec<ClaimRow>> {
    let spec = outer.spec().clone();
    let composed = outer.compose(inner)?;
    let composed_components = composed.as_vector_components();
    let inner_components = inner.as_vector_components();
    let mut oracle: BTreeMap<Coord, ZeroClaim> = outer
        .target_components()
        .into_iter()
        .map(|a| (a, ZeroClaim::default()))
        .collect();
    let mut cache: HashMap<(Coord, MultiIndex), Expr> = HashMap::new();
    for ((a, b, jet), c) in outer.coeffs() {
        let d = cache
            .entry((b.clone(), jet.clone()))
            .or_insert_with(|| iterated_total_derivative(&inner_components[b], jet))
            .clone();
        oracle.get_mut(a).expect("target").push(vec![c.clone(), d]);
    }
    let mut jets = ElJets::new(el, &spec);
    let mut rows = Vec::new();
    for (a, mut claim) in oracle {
        let mut residual = composed_components[&a].clone();
        if let Some(w) = witnesses.get(&a) {
            for mut t in w.combination(&mut jets)?.terms {
                residual -= &(&t[0] * &t[1]);
                t.push(Expr::int(-1));
                claim.push(t);
            }
        }
        rows.push(ClaimRow::new(
            format!("{label}[{}]", spec.coord_name(&a)),
            residual,
            claim,
        ));
    }
    Ok(rows)
}

fn nonvanishing_failures(label: &str, op: &LinearDiffOp, seed: u64) -> Vec<String> {
    if op.is_zero() {
        return vec![format!("{label} is identically zero")];
    }
    let probe = op.coeffs().values().any(|c| {
        let point = random_point(&c.variables(), seed);
        c.eval_at(&point).map(|v| v != Default::default()).unwrap_or(true)
    });
    if probe {
        Vec::new()
    } else {
        vec![format!("{label} vanishes at the probe point")]
    }
}

/// Compositions `υ^{k−1} ∘ υ^k` (with `υ^{−1} = υ`) vanish exactly or up to
/// the supplied witnesses, and every stage is nonzero.
pub fn check_reducibility_chain(
    name: &str,
    u: &LinearDiffOp,
    chain: &ReducibilityChain,
    el: &ElMap,
) -> Result<Check> {
    let mut check = Check::new(name, u.spec().clone()).with_note("nonvanishing: syntactic");
    let mut prev = u;
    for (k, stage) in chain.stages.iter().enumerate() {
        let empty = BTreeMap::new();
        let w = chain.witnesses.get(k).unwrap_or(&empty);
        check
            .rows
            .extend(composition_rows(&format!("stage{k}"), prev, stage, el, w)?);
        check
            .failures
            .extend(nonvanishing_failures(&format!("stage {k}"), stage, k as u64));
        prev = stage;
    }
    check.notes.push(format!("chain length {}", chain.len()));
    Ok(check)
}

/// `Δ_k = η(υ^k)` for every stage.
pub fn dual_noether_chain(chain: &ReducibilityChain) -> Result<Vec<LinearDiffOp>> {
    chain.stages.iter().map(|s| s.adjoint_eta()).collect()
}

/// Compositions `Δ_k ∘ Δ_{k−1}` (with `Δ_{−1} = η(υ)`) vanish exactly.
pub fn check_dual_chain(name: &str, u: &LinearDiffOp, duals: &[LinearDiffOp]) -> Result<Check> {
    let mut check = Check::new(name, u.spec().clone()).with_note("nonvanishing: syntactic");
    let mut prev = u.adjoint_eta()?;
    let el = ElMap::new();
    for (k, d) in duals.iter().enumerate() {
        check
            .rows
            .extend(composition_rows(&format!("dual{k}"), d, &prev, &el, &BTreeMap::new())?);
        check
            .failures
            .extend(nonvanishing_failures(&format!("dual stage {k}"), d, k as u64));
        prev = d.clone();
    }
    Ok(check)
}

/// Certificate check for `υ' = υ ∘ h + T` with `T ≈ 0` witnessed per target
/// component.
pub fn check_factorization(
    name: &str,
    u_prime: &LinearDiffOp,
    u: &LinearDiffOp,
    h: &LinearDiffOp,
    el: &ElMap,
    witnesses: &BTreeMap<Coord, OnShellWitness>,
) -> Result<Check> {
    let spec = u.spec().clone();
    let t = u_prime.sub(&u.compose(h)?)?;
    let mut check = Check::new(name, spec.clone());
    for (a, v) in t.as_vector_components() {
        let w = witnesses.get(&a).cloned().unwrap_or_default();
        check
            .rows
            .push(on_shell_row(spec.coord_name(&a), &spec, &v, el, &w)?);
    }
    Ok(check)
}
