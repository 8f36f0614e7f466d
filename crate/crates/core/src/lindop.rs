//! Linear differential operators between coordinate families and the
//! adjoint map `η`.
//!
//! An operator is stored as a sparse table of coefficients `c(a, r, Λ)` with
//! `Λ` a sorted multi-index, acting as `op(ξ)_a = Σ_{r,Λ} c(a,r,Λ) d_Λ ξ^r`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{q, Density, Expr, JetVar, Q};
use crate::index::{BundleSpec, Coord, FamilyId, MultiIndex, Role};
use crate::syntax::{parse, parse_coord, parse_multiindex, print};
use crate::varcalc::total_derivative;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorRole {
    /// Parameters to dynamic fields.
    GaugeSymmetry,
    /// Dual fields to dual parameters.
    Noether,
    /// Parameters to parameters, or their duals.
    ChainStage,
    Generic,
}

impl OperatorRole {
    fn adjoint(self) -> OperatorRole {
        match self {
            OperatorRole::GaugeSymmetry => OperatorRole::Noether,
            OperatorRole::Noether => OperatorRole::GaugeSymmetry,
            other => other,
        }
    }

    fn check(self, spec: &BundleSpec, source: &[FamilyId], target: &[FamilyId]) -> Result<()> {
        let all = |fams: &[FamilyId], ok: &dyn Fn(Role) -> bool| fams.iter().all(|&f| ok(spec.role(f)));
        let ok = match self {
            OperatorRole::GaugeSymmetry => {
                all(source, &|r| r == Role::Parameter) && all(target, &|r| r == Role::DynamicField)
            }
            OperatorRole::Noether => {
                all(source, &|r| r == Role::DualField) && all(target, &|r| r == Role::DualParameter)
            }
            OperatorRole::ChainStage => {
                (all(source, &|r| r == Role::Parameter) && all(target, &|r| r == Role::Parameter))
                    || (all(source, &|r| r == Role::DualParameter)
                        && all(target, &|r| r == Role::DualParameter))
            }
            OperatorRole::Generic => true,
        };
        if ok && source.iter().chain(target).all(|&f| spec.role(f) != Role::Base) {
            Ok(())
        } else {
            Err(Error::RoleMismatch(format!(
                "{self:?} operator cannot map {} to {}",
                names(spec, source),
                names(spec, target)
            )))
        }
    }
}

fn names(spec: &BundleSpec, fams: &[FamilyId]) -> String {
    let v: Vec<&str> = fams.iter().map(|&f| spec.family(f).name.as_str()).collect();
    format!("[{}]", v.join(", "))
}

pub type CoeffKey = (Coord, Coord, MultiIndex);

/// Sparse linear differential operator from the `source` families to the
/// `target` families.
#[derive(Clone, PartialEq, Eq)]
pub struct LinearDiffOp {
    spec: Arc<BundleSpec>,
    source: Vec<FamilyId>,
    target: Vec<FamilyId>,
    role: OperatorRole,
    coeffs: BTreeMap<CoeffKey, Expr>,
}

impl fmt::Debug for LinearDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:?} {} -> {}",
            self.role,
            names(&self.spec, &self.source),
            names(&self.spec, &self.target)
        )?;
        for ((a, r, l), c) in &self.coeffs {
            writeln!(
                f,
                "  {} <- {}{}: {}",
                self.spec.coord_name(a),
                self.spec.coord_name(r),
                l,
                print(c, &self.spec)
            )?;
        }
        Ok(())
    }
}

impl LinearDiffOp {
    /// Operator with no coefficients. Family groups are sorted and deduplicated.
    pub fn zero(
        spec: Arc<BundleSpec>,
        source: Vec<FamilyId>,
        target: Vec<FamilyId>,
        role: OperatorRole,
    ) -> Result<Self> {
        let source = sorted(source);
        let target = sorted(target);
        role.check(&spec, &source, &target)?;
        Ok(LinearDiffOp {
            spec,
            source,
            target,
            role,
            coeffs: BTreeMap::new(),
        })
    }

    /// Builds an operator from coefficient entries; repeated keys are summed.
    pub fn new(
        spec: Arc<BundleSpec>,
        source: Vec<FamilyId>,
        target: Vec<FamilyId>,
        role: OperatorRole,
        entries: impl IntoIterator<Item = (CoeffKey, Expr)>,
    ) -> Result<Self> {
        let mut op = LinearDiffOp::zero(spec, source, target, role)?;
        for (key, c) in entries {
            op.add_entry(key, c)?;
        }
        Ok(op)
    }

    /// Identity on the given families.
    pub fn identity(spec: Arc<BundleSpec>, families: Vec<FamilyId>) -> Result<Self> {
        let entries: Vec<_> = families
            .iter()
            .flat_map(|&f| spec.components(f))
            .map(|c| ((c.clone(), c, MultiIndex::empty()), Expr::one()))
            .collect();
        LinearDiffOp::new(spec, families.clone(), families, OperatorRole::Generic, entries)
    }

    /// Adds `c` to the coefficient at `key`, validating families and the
    /// coefficient's variables.
    pub fn add_entry(&mut self, key: CoeffKey, c: Expr) -> Result<()> {
        let (a, r, jet) = &key;
        if !self.target.contains(&a.family) {
            return Err(Error::FamilyMismatch(format!(
                "`{}` is not in the target group",
                self.spec.coord_name(a)
            )));
        }
        if !self.source.contains(&r.family) {
            return Err(Error::FamilyMismatch(format!(
                "`{}` is not in the source group",
                self.spec.coord_name(r)
            )));
        }
        if let Some(&dir) = jet.entries().last() {
            if dir >= self.spec.base_dim() {
                return Err(Error::IndexOutOfRange(format!("jet direction {dir}")));
            }
        }
        for f in c.families() {
            let role = self.spec.role(f);
            if role != Role::Base && role != Role::DynamicField {
                return Err(Error::FamilyMismatch(format!(
                    "coefficient depends on `{}`; only base coordinates and dynamic fields are allowed",
                    self.spec.family(f).name
                )));
            }
        }
        self.add_unchecked(key, c);
        Ok(())
    }

    fn add_unchecked(&mut self, key: CoeffKey, c: Expr) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&key) {
            Some(old) => {
                *old += c;
                if old.is_zero() {
                    self.coeffs.remove(&key);
                }
            }
            None => {
                self.coeffs.insert(key, c);
            }
        }
    }

    pub fn spec(&self) -> &Arc<BundleSpec> {
        &self.spec
    }

    pub fn source(&self) -> &[FamilyId] {
        &self.source
    }

    pub fn target(&self) -> &[FamilyId] {
        &self.target
    }

    pub fn role(&self) -> OperatorRole {
        self.role
    }

    pub fn with_role(&self, role: OperatorRole) -> Result<Self> {
        role.check(&self.spec, &self.source, &self.target)?;
        let mut out = self.clone();
        out.role = role;
        Ok(out)
    }

    pub fn coeffs(&self) -> &BTreeMap<CoeffKey, Expr> {
        &self.coeffs
    }

    pub fn coeff(&self, a: &Coord, r: &Coord, jet: &MultiIndex) -> Expr {
        self.coeffs
            .get(&(a.clone(), r.clone(), jet.clone()))
            .cloned()
            .unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest `|Λ|` with a nonzero coefficient.
    pub fn order(&self) -> usize {
        self.coeffs.keys().map(|(_, _, l)| l.order()).max().unwrap_or(0)
    }

    pub fn source_components(&self) -> Vec<Coord> {
        self.source.iter().flat_map(|&f| self.spec.components(f)).collect()
    }

    pub fn target_components(&self) -> Vec<Coord> {
        self.target.iter().flat_map(|&f| self.spec.components(f)).collect()
    }

    /// Coefficient-wise map; entries that become zero are dropped.
    pub fn map_coeffs(&self, mut f: impl FnMut(&CoeffKey, &Expr) -> Expr) -> LinearDiffOp {
        let mut out = LinearDiffOp {
            coeffs: BTreeMap::new(),
            ..self.clone()
        };
        for (k, c) in &self.coeffs {
            out.add_unchecked(k.clone(), f(k, c));
        }
        out
    }

    pub fn scale(&self, c: &Q) -> LinearDiffOp {
        self.map_coeffs(|_, e| e.scale(c))
    }

    /// Sum of two operators over the same family groups. The role is kept
    /// when both agree and is `Generic` otherwise.
    pub fn add(&self, other: &LinearDiffOp) -> Result<LinearDiffOp> {
        self.same_groups(other)?;
        let mut out = self.clone();
        if out.role != other.role {
            out.role = OperatorRole::Generic;
        }
        for (k, c) in &other.coeffs {
            out.add_unchecked(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &LinearDiffOp) -> Result<LinearDiffOp> {
        self.add(&other.scale(&q(-1)))
    }

    fn same_groups(&self, other: &LinearDiffOp) -> Result<()> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::FamilyMismatch(format!(
                "{} -> {} vs {} -> {}",
                names(&self.spec, &self.source),
                names(&self.spec, &self.target),
                names(&other.spec, &other.source),
                names(&other.spec, &other.target)
            )));
        }
        Ok(())
    }

    /// The linear form `op(ξ)_a` for every target component, as a map
    /// `(r, Λ) ↦ coefficient of ξ^r_Λ`.
    fn linear_forms(&self) -> BTreeMap<Coord, LinearForm> {
        let mut out: BTreeMap<Coord, LinearForm> = BTreeMap::new();
        for ((a, r, l), c) in &self.coeffs {
            out.entry(a.clone())
                .or_default()
                .insert((r.clone(), l.clone()), c.clone());
        }
        out
    }

    /// `op(s)_a = Σ c(a,r,Λ) d_Λ s_r` for a section given componentwise.
    pub fn apply_to_section(&self, section: &BTreeMap<Coord, Expr>) -> Result<BTreeMap<Coord, Expr>> {
        for r in self.source_components() {
            if !section.contains_key(&r) {
                return Err(Error::MissingComponent(self.spec.coord_name(&r)));
            }
        }
        let mut cache: HashMap<(Coord, MultiIndex), Expr> = HashMap::new();
        let mut out: BTreeMap<Coord, Expr> = self
            .target_components()
            .into_iter()
            .map(|a| (a, Expr::zero()))
            .collect();
        for ((a, r, l), c) in &self.coeffs {
            let d = jet_of(&mut cache, r, l, &section[r]);
            let slot = out.get_mut(a).expect("target component");
            *slot += c * &d;
        }
        Ok(out)
    }

    /// Components `op(ξ)_a` with the source coordinates themselves as section.
    pub fn as_vector_components(&self) -> BTreeMap<Coord, Expr> {
        let section: BTreeMap<Coord, Expr> = self
            .source_components()
            .into_iter()
            .map(|r| (r.clone(), Expr::coord(r)))
            .collect();
        self.apply_to_section(&section).expect("identity section is complete")
    }

    /// The adjoint `η(op)`, mapping the duals of the target to the duals of
    /// the source.
    ///
    /// With coefficients stored on sorted multi-indices the integration by
    /// parts weight is the per-direction binomial product
    /// `Π_λ C(m_λ(Σ+Λ), m_λ(Σ))` rather than a single binomial in the orders.
    pub fn adjoint_eta(&self) -> Result<LinearDiffOp> {
        let spec = &self.spec;
        let source = self
            .target
            .iter()
            .map(|&f| spec.dual(f))
            .collect::<Result<Vec<_>>>()?;
        let target = self
            .source
            .iter()
            .map(|&f| spec.dual(f))
            .collect::<Result<Vec<_>>>()?;
        let entries: Vec<Vec<(CoeffKey, Expr)>> = self
            .coeffs
            .par_iter()
            .map(|((a, r, theta), c)| {
                let abar = spec.dual_coord(a).expect("dual checked");
                let rbar = spec.dual_coord(r).expect("dual checked");
                let sign = if theta.order() % 2 == 1 { -1 } else { 1 };
                let mut cache: HashMap<MultiIndex, Expr> = HashMap::new();
                theta
                    .splits()
                    .into_iter()
                    .map(|(sigma, lambda)| {
                        let weight = sign * theta.leibniz_factor(&sigma) as i64;
                        let d = derivative_cached(&mut cache, c, &sigma);
                        ((rbar.clone(), abar.clone(), lambda), d.scale_int(weight))
                    })
                    .collect()
            })
            .collect();
        let role = self.role.adjoint();
        let mut out = LinearDiffOp::zero(spec.clone(), source, target, role)?;
        for (k, c) in entries.into_iter().flatten() {
            out.add_unchecked(k, c);
        }
        Ok(out)
    }

    /// `self ∘ inner`, collecting `self(inner(ξ))` on the jets of `ξ`.
    pub fn compose(&self, inner: &LinearDiffOp) -> Result<LinearDiffOp> {
        if self.source != inner.target {
            return Err(Error::FamilyMismatch(format!(
                "cannot compose {} -> {} after {} -> {}",
                names(&self.spec, &self.source),
                names(&self.spec, &self.target),
                names(&inner.spec, &inner.source),
                names(&inner.spec, &inner.target)
            )));
        }
        let forms = inner.linear_forms();
        let mut cache: HashMap<(Coord, MultiIndex), LinearForm> = HashMap::new();
        let role = if self.role == OperatorRole::ChainStage && inner.role == OperatorRole::ChainStage {
            OperatorRole::ChainStage
        } else {
            OperatorRole::Generic
        };
        let mut out = LinearDiffOp::zero(
            self.spec.clone(),
            inner.source.clone(),
            self.target.clone(),
            role,
        )?;
        let empty = LinearForm::new();
        for ((a, b, l), c) in &self.coeffs {
            let form = forms.get(b).unwrap_or(&empty);
            let d = form_jet(&mut cache, b, l, form);
            for ((r, sigma), e) in d {
                out.add_unchecked((a.clone(), r, sigma), c * &e);
            }
        }
        Ok(out)
    }

    /// `⟨q̄, op(ξ)⟩ − ⟨η(op)(q̄), ξ⟩` with `ξ` and `q̄` as independent families.
    pub fn pairing_defect(&self) -> Result<Density> {
        self.pairing_defect_against(&self.adjoint_eta()?)
    }

    /// The pairing defect with a caller-supplied candidate adjoint.
    pub fn pairing_defect_against(&self, eta: &LinearDiffOp) -> Result<Density> {
        let mut out = Expr::zero();
        for (a, v) in self.as_vector_components() {
            let abar = self.spec.dual_coord(&a)?;
            out += &Expr::coord(abar) * &v;
        }
        for (rbar, v) in eta.as_vector_components() {
            let r = self.spec.dual_coord(&rbar)?;
            out -= &(&Expr::coord(r) * &v);
        }
        Ok(Density::new(self.spec.clone(), out))
    }

    /// Serializes to the operator file format, including the bundle.
    pub fn to_json(&self) -> Value {
        let fam_names = |fams: &[FamilyId]| -> Vec<String> {
            fams.iter().map(|&f| self.spec.family(f).name.clone()).collect()
        };
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|((a, r, l), c)| {
                json!({
                    "a": self.spec.coord_name(a),
                    "r": self.spec.coord_name(r),
                    "jet": l.to_string(),
                    "expr": print(c, &self.spec),
                })
            })
            .collect();
        json!({
            "bundle": self.spec.to_value(),
            "source": fam_names(&self.source),
            "target": fam_names(&self.target),
            "role": self.role,
            "coeffs": coeffs,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        let spec = Arc::new(BundleSpec::from_value(
            v.get("bundle").ok_or_else(|| Error::Json("missing `bundle`".into()))?,
        )?);
        LinearDiffOp::from_value(spec, &v)
    }

    /// Reads `source`, `target`, `role` and `coeffs` against a known bundle.
    pub fn from_value(spec: Arc<BundleSpec>, v: &Value) -> Result<Self> {
        let doc: OpDoc = serde_json::from_value(v.clone()).map_err(|e| Error::Json(e.to_string()))?;
        let fams = |list: &[String]| -> Result<Vec<FamilyId>> {
            list.iter().map(|n| spec.family_id(n)).collect()
        };
        let source = fams(&doc.source)?;
        let target = fams(&doc.target)?;
        let mut op = LinearDiffOp::zero(
            spec.clone(),
            source,
            target,
            doc.role.unwrap_or(OperatorRole::Generic),
        )?;
        for entry in &doc.coeffs {
            let a = parse_coord(&entry.a, &spec)?;
            let r = parse_coord(&entry.r, &spec)?;
            let jet = parse_multiindex(&entry.jet, spec.base_dim())?;
            let c = parse(&entry.expr, &spec)?;
            if let (Some((a, sa)), Some((r, sr))) = (a, r) {
                op.add_entry((a, r, jet), c.scale_int((sa * sr) as i64))?;
            }
        }
        Ok(op)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpDoc {
    #[serde(rename = "bundle")]
    _bundle: Option<Value>,
    source: Vec<String>,
    target: Vec<String>,
    role: Option<OperatorRole>,
    #[serde(default)]
    coeffs: Vec<CoeffDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffDoc {
    a: String,
    r: String,
    jet: String,
    expr: String,
}

fn sorted(mut v: Vec<FamilyId>) -> Vec<FamilyId> {
    v.sort();
    v.dedup();
    v
}

type LinearForm = BTreeMap<(Coord, MultiIndex), Expr>;

/// `d_λ` of a linear form: `d_λ(c ξ_Σ) = (d_λ c) ξ_Σ + c ξ_{Σ+λ}`.
fn form_derivative(form: &LinearForm, lambda: u8) -> LinearForm {
    let mut out = LinearForm::new();
    let mut add = |k: (Coord, MultiIndex), e: Expr| {
        if e.is_zero() {
            return;
        }
        let slot = out.entry(k.clone()).or_default();
        *slot += e;
        if slot.is_zero() {
            out.remove(&k);
        }
    };
    for ((r, sigma), c) in form {
        add((r.clone(), sigma.clone()), total_derivative(c, lambda));
        add((r.clone(), sigma.with(lambda)), c.clone());
    }
    out
}

fn form_jet(
    cache: &mut HashMap<(Coord, MultiIndex), LinearForm>,
    b: &Coord,
    jet: &MultiIndex,
    base: &LinearForm,
) -> LinearForm {
    if jet.is_empty() {
        return base.clone();
    }
    let key = (b.clone(), jet.clone());
    if let Some(f) = cache.get(&key) {
        return f.clone();
    }
    let entries = jet.entries();
    let parent = MultiIndex::new(&entries[..entries.len() - 1]);
    let prev = form_jet(cache, b, &parent, base);
    let f = form_derivative(&prev, entries[entries.len() - 1]);
    cache.insert(key, f.clone());
    f
}

fn derivative_cached(cache: &mut HashMap<MultiIndex, Expr>, e: &Expr, jet: &MultiIndex) -> Expr {
    if jet.is_empty() {
        return e.clone();
    }
    if let Some(d) = cache.get(jet) {
        return d.clone();
    }
    let entries = jet.entries();
    let parent = MultiIndex::new(&entries[..entries.len() - 1]);
    let prev = derivative_cached(cache, e, &parent);
    let d = total_derivative(&prev, entries[entries.len() - 1]);
    cache.insert(jet.clone(), d.clone());
    d
}

fn jet_of(cache: &mut HashMap<(Coord, MultiIndex), Expr>, r: &Coord, jet: &MultiIndex, e: &Expr) -> Expr {
    if jet.is_empty() {
        return e.clone();
    }
    let key = (r.clone(), jet.clone());
    if let Some(d) = cache.get(&key) {
        return d.clone();
    }
    let entries = jet.entries();
    let parent = MultiIndex::new(&entries[..entries.len() - 1]);
    let prev = jet_of(cache, r, &parent, e);
    let d = total_derivative(&prev, entries[entries.len() - 1]);
    cache.insert(key, d.clone());
    d
}

/// True iff both operators act between the same families and agree
/// coefficient by coefficient. Roles are not compared.
pub fn op_equal(a: &LinearDiffOp, b: &LinearDiffOp) -> bool {
    a.source == b.source && a.target == b.target && a.coeffs == b.coeffs
}

/// Jet variables of the operator's source families that occur after applying
/// it to the identity section; used when sampling random points.
pub fn section_variables(op: &LinearDiffOp) -> BTreeSet<JetVar> {
    op.as_vector_components()
        .values()
        .flat_map(|e| e.variables())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::FieldFamily;
    use crate::varcalc::is_variationally_trivial;

    fn spec(n: u8) -> Arc<BundleSpec> {
        Arc::new(
            BundleSpec::new(
                n,
                vec![
                    FieldFamily::new("y", Role::DynamicField, vec![]),
                    FieldFamily::new("xi", Role::Parameter, vec![]),
                    FieldFamily::new("zeta", Role::Parameter, vec![]),
                    FieldFamily::new("y_bar", Role::DualField, vec![]).dual_of("y"),
                    FieldFamily::new("xi_bar", Role::DualParameter, vec![]).dual_of("xi"),
                    FieldFamily::new("zeta_bar", Role::DualParameter, vec![]).dual_of("zeta"),
                ],
            )
            .unwrap(),
        )
    }

    fn c(s: &BundleSpec, name: &str) -> Coord {
        Coord::scalar(s.family_id(name).unwrap())
    }

    fn op(s: &Arc<BundleSpec>, role: OperatorRole, entries: &[(&str, &str)]) -> LinearDiffOp {
        let y = s.family_id("y").unwrap();
        let xi = s.family_id("xi").unwrap();
        let e = entries
            .iter()
            .map(|(jet, ex)| {
                (
                    (c(s, "y"), c(s, "xi"), parse_multiindex(jet, s.base_dim()).unwrap()),
                    parse(ex, s).unwrap(),
                )
            })
            .collect::<Vec<_>>();
        LinearDiffOp::new(s.clone(), vec![xi], vec![y], role, e).unwrap()
    }

    #[test]
    fn apply_examples() {
        let s = spec(2);
        let xi = s.family_id("xi").unwrap();
        let id = LinearDiffOp::identity(s.clone(), vec![xi]).unwrap();
        let sec = BTreeMap::from([(c(&s, "xi"), parse("x[0]*y + 3", &s).unwrap())]);
        assert_eq!(id.apply_to_section(&sec).unwrap(), sec);

        let d = op(&s, OperatorRole::Generic, &[("(1)", "y")]);
        let out = d.apply_to_section(&sec).unwrap();
        assert_eq!(out[&c(&s, "y")], parse("x[0]*y*y[;(1)]", &s).unwrap());

        let z = op(&s, OperatorRole::Generic, &[]);
        assert!(z.apply_to_section(&sec).unwrap()[&c(&s, "y")].is_zero());
        assert!(matches!(
            d.apply_to_section(&BTreeMap::new()),
            Err(Error::MissingComponent(_))
        ));
    }

    #[test]
    fn eta_order_zero_is_transpose() {
        let s = spec(2);
        let u = op(&s, OperatorRole::GaugeSymmetry, &[("()", "x[1]*y^2")]);
        let e = u.adjoint_eta().unwrap();
        assert_eq!(e.role(), OperatorRole::Noether);
        assert_eq!(
            e.coeff(&c(&s, "xi_bar"), &c(&s, "y_bar"), &MultiIndex::empty()),
            parse("x[1]*y^2", &s).unwrap()
        );
        assert_eq!(e.coeffs().len(), 1);
    }

    #[test]
    fn eta_first_order_shape() {
        let s = spec(2);
        let u = op(
            &s,
            OperatorRole::GaugeSymmetry,
            &[("()", "y^2"), ("(0)", "x[0]*y"), ("(1)", "y[;(0)]")],
        );
        let e = u.adjoint_eta().unwrap();
        let (xb, yb) = (c(&s, "xi_bar"), c(&s, "y_bar"));
        assert_eq!(
            e.coeff(&xb, &yb, &MultiIndex::empty()),
            parse("y^2 - y - x[0]*y[;(0)] - y[;(0,1)]", &s).unwrap()
        );
        assert_eq!(e.coeff(&xb, &yb, &MultiIndex::single(0)), parse("-1*x[0]*y", &s).unwrap());
        assert_eq!(e.coeff(&xb, &yb, &MultiIndex::single(1)), parse("-1*y[;(0)]", &s).unwrap());
    }

    #[test]
    fn eta_mixed_second_order_weight() {
        // d_0 d_1 integrated by parts twice: η has +1 at (0,1), and the
        // weight 1 (not C(1,2) = 2) on each single-direction split.
        let s = spec(2);
        let u = op(&s, OperatorRole::Generic, &[("(0,1)", "x[0]*x[1]")]);
        let e = u.adjoint_eta().unwrap();
        let (xb, yb) = (c(&s, "xi_bar"), c(&s, "y_bar"));
        assert_eq!(e.coeff(&xb, &yb, &MultiIndex::new(&[0, 1])), parse("x[0]*x[1]", &s).unwrap());
        assert_eq!(e.coeff(&xb, &yb, &MultiIndex::single(0)), parse("x[0]", &s).unwrap());
        assert_eq!(e.coeff(&xb, &yb, &MultiIndex::single(1)), parse("x[1]", &s).unwrap());
        assert_eq!(e.coeff(&xb, &yb, &MultiIndex::empty()), Expr::one());
        assert!(op_equal(&e.adjoint_eta().unwrap(), &u));
    }

    #[test]
    fn compose_examples() {
        let s = spec(2);
        let xi = s.family_id("xi").unwrap();
        let y = s.family_id("y").unwrap();
        let u = op(&s, OperatorRole::Generic, &[("()", "y"), ("(1)", "x[0]")]);
        let id_src = LinearDiffOp::identity(s.clone(), vec![xi]).unwrap();
        let id_tgt = LinearDiffOp::identity(s.clone(), vec![y]).unwrap();
        assert!(op_equal(&u.compose(&id_src).unwrap(), &u));
        assert!(op_equal(&id_tgt.compose(&u).unwrap(), &u));

        let d0 = LinearDiffOp::new(
            s.clone(),
            vec![xi],
            vec![xi],
            OperatorRole::Generic,
            [((c(&s, "xi"), c(&s, "xi"), MultiIndex::single(0)), Expr::one())],
        )
        .unwrap();
        let d1 = LinearDiffOp::new(
            s.clone(),
            vec![xi],
            vec![xi],
            OperatorRole::Generic,
            [((c(&s, "xi"), c(&s, "xi"), MultiIndex::single(1)), Expr::one())],
        )
        .unwrap();
        let d01 = d0.compose(&d1).unwrap();
        assert_eq!(d01.coeffs().len(), 1);
        assert_eq!(d01.coeff(&c(&s, "xi"), &c(&s, "xi"), &MultiIndex::new(&[0, 1])), Expr::one());
        assert!(matches!(u.compose(&u), Err(Error::FamilyMismatch(_))));
    }

    #[test]
    fn pairing_defect_examples() {
        let s = spec(1);
        let u0 = op(&s, OperatorRole::Generic, &[("()", "y^3")]);
        assert!(u0.pairing_defect().unwrap().is_zero());

        let u = op(&s, OperatorRole::Generic, &[("(0)", "y")]);
        let defect = u.pairing_defect().unwrap();
        // hand expansion: y*y_bar*xi_(0) + d_0(y*y_bar)*xi = d_0(y*y_bar*xi)
        let expect = total_derivative(&parse("y*y_bar*xi", &s).unwrap(), 0);
        assert_eq!(defect.coeff, expect);
        assert!(is_variationally_trivial(&defect));
    }

    #[test]
    fn op_equal_examples() {
        let s = spec(2);
        let a = op(&s, OperatorRole::Generic, &[("(0)", "y")]);
        let mut b = a.clone();
        b.add_entry((c(&s, "y"), c(&s, "xi"), MultiIndex::single(1)), Expr::zero())
            .unwrap();
        assert!(op_equal(&a, &a));
        assert!(op_equal(&a, &b));
        assert!(!op_equal(&a, &op(&s, OperatorRole::Generic, &[("(1)", "y")])));
    }

    #[test]
    fn coefficients_must_be_fiber_linear() {
        let s = spec(1);
        let y = s.family_id("y").unwrap();
        let xi = s.family_id("xi").unwrap();
        let mut u = LinearDiffOp::zero(s.clone(), vec![xi], vec![y], OperatorRole::Generic).unwrap();
        let err = u
            .add_entry((c(&s, "y"), c(&s, "xi"), MultiIndex::empty()), parse("xi", &s).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::FamilyMismatch(_)));
        assert!(matches!(
            LinearDiffOp::zero(s.clone(), vec![y], vec![xi], OperatorRole::GaugeSymmetry),
            Err(Error::RoleMismatch(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let s = spec(2);
        let u = op(&s, OperatorRole::GaugeSymmetry, &[("()", "y^2"), ("(0,1)", "1/2*x[0]")]);
        let text = serde_json::to_string(&u.to_json()).unwrap();
        let back = LinearDiffOp::from_json(&text).unwrap();
        assert_eq!(back, u);
        assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
    }
}
