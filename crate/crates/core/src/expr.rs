//! Canonical exact-rational polynomials in base coordinates and jet variables.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num::{BigInt, BigRational, One, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::index::{BundleSpec, Coord, FamilyId, MultiIndex, BASE_FAMILY};
use crate::varcalc;

/// Exact rational coefficient.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// A coordinate together with a jet multi-index: `y^i_Λ`.
///
/// Ordered by family, component tuple and jet multi-index.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetVar {
    pub coord: Coord,
    pub jet: MultiIndex,
}

impl JetVar {
    pub fn new(coord: Coord, jet: MultiIndex) -> Self {
        JetVar { coord, jet }
    }

    pub fn plain(coord: Coord) -> Self {
        JetVar {
            coord,
            jet: MultiIndex::empty(),
        }
    }

    pub fn family(&self) -> FamilyId {
        self.coord.family
    }

    pub fn is_base(&self) -> bool {
        self.coord.family == BASE_FAMILY
    }

    /// `y^i_{λ+Λ}`.
    pub fn prolong(&self, lambda: u8) -> JetVar {
        JetVar {
            coord: self.coord.clone(),
            jet: self.jet.with(lambda),
        }
    }
}

impl fmt::Debug for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?};{}", self.coord, self.jet)
    }
}

type Factors = SmallVec<[(JetVar, u32); 4]>;

/// Product of jet variables with positive exponents, sorted by variable.
///
/// Monomials compare by total degree first, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    factors: Factors,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: JetVar) -> Self {
        let mut factors = Factors::new();
        factors.push((v, 1));
        Monomial { factors }
    }

    pub fn factors(&self) -> &[(JetVar, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent(&self, v: &JetVar) -> u32 {
        self.factors
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|k| self.factors[k].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.factors, &other.factors);
        let mut out = Factors::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().cloned());
        Monomial { factors: out }
    }

    /// Lowers the exponent of the factor at `pos` by one.
    fn without_one(&self, pos: usize) -> Monomial {
        let mut factors = self.factors.clone();
        if factors[pos].1 == 1 {
            factors.remove(pos);
        } else {
            factors[pos].1 -= 1;
        }
        Monomial { factors }
    }

    fn times_var(&self, v: &JetVar) -> Monomial {
        match self.factors.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(k) => {
                let mut factors = self.factors.clone();
                factors[k].1 += 1;
                Monomial { factors }
            }
            Err(k) => {
                let mut factors = self.factors.clone();
                factors.insert(k, (v.clone(), 1));
                Monomial { factors }
            }
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.factors.as_slice().cmp(other.factors.as_slice()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factors.iter()).finish()
    }
}

/// Polynomial with exact rational coefficients in canonical form.
///
/// No zero coefficient is ever stored, so equality of the term maps is
/// equality of polynomials.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Expr {
    terms: BTreeMap<Monomial, Q>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        let mut e = Expr::zero();
        e.add_term(Monomial::one(), c);
        e
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(q(n))
    }

    pub fn var(v: JetVar) -> Self {
        Expr::term(Monomial::var(v), Q::one())
    }

    pub fn coord(c: Coord) -> Self {
        Expr::var(JetVar::plain(c))
    }

    pub fn jet(c: Coord, jet: MultiIndex) -> Self {
        Expr::var(JetVar::new(c, jet))
    }

    pub fn term(m: Monomial, c: Q) -> Self {
        let mut e = Expr::zero();
        e.add_term(m, c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    /// The value if this is a constant polynomial.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Q) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Expr {
        self.scale(&q(n))
    }

    pub fn pow(&self, k: u32) -> Expr {
        let mut acc = Expr::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// `self += c * other * m`, without materializing intermediates.
    pub(crate) fn add_scaled_product(&mut self, other: &Expr, c: &Q, m: &Monomial) {
        for (m2, k) in &other.terms {
            self.add_term(m2.mul(m), k * c);
        }
    }

    /// Formal partial derivative with respect to a single jet variable.
    pub fn partial(&self, v: &JetVar) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            if let Ok(pos) = m.factors.binary_search_by(|(w, _)| w.cmp(v)) {
                let e = m.factors[pos].1;
                out.add_term(m.without_one(pos), c * q(e as i64));
            }
        }
        out
    }

    /// Highest jet order among the variables that occur; 0 for constants.
    pub fn jet_order(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|m| m.factors.iter().map(|(v, _)| v.jet.order()))
            .max()
            .unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<JetVar> {
        self.terms
            .keys()
            .flat_map(|m| m.factors.iter().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn families(&self) -> BTreeSet<FamilyId> {
        self.terms
            .keys()
            .flat_map(|m| m.factors.iter().map(|(v, _)| v.family()))
            .collect()
    }

    /// Maximum total degree of any term.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Exact value at a rational point binding every occurring variable.
    pub fn eval_at(&self, point: &HashMap<JetVar, Q>) -> Result<Q> {
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.factors {
                let x = point
                    .get(v)
                    .ok_or_else(|| Error::UnboundVariable(format!("{v:?}")))?;
                t *= num::pow::pow(x.clone(), *e as usize);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Applies `f` to every monomial and sums `coefficient * f(monomial)`.
    pub(crate) fn map_monomials<F>(&self, mut f: F) -> Result<Expr>
    where
        F: FnMut(&Monomial) -> Result<Expr>,
    {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let img = f(m)?;
            out.add_scaled_product(&img, c, &Monomial::one());
        }
        Ok(out)
    }

    /// Simultaneous substitution of whole families.
    ///
    /// Every jet variable of a bound family is replaced by the total
    /// derivative of the binding of its coordinate, so bindings are given at
    /// jet order 0 and prolonged automatically. Variables of families not in
    /// `subst` are left untouched.
    pub fn substitute(&self, spec: &BundleSpec, subst: &Substitution) -> Result<Expr> {
        let mut cache: HashMap<JetVar, Expr> = HashMap::new();
        self.map_monomials(|m| {
            let mut acc = Expr::one();
            for (v, e) in m.factors() {
                let img = if subst.families.contains(&v.family()) {
                    if let Some(hit) = cache.get(v) {
                        hit.clone()
                    } else {
                        let base = subst.values.get(&v.coord).ok_or_else(|| {
                            Error::UnboundVariable(crate::syntax::var_name(spec, v))
                        })?;
                        let img = varcalc::iterated_total_derivative(base, &v.jet);
                        cache.insert(v.clone(), img.clone());
                        img
                    }
                } else {
                    Expr::var(v.clone())
                };
                acc = &acc * &img.pow(*e);
            }
            Ok(acc)
        })
    }

    pub fn display<'a>(&'a self, spec: &'a BundleSpec) -> crate::syntax::ExprDisplay<'a> {
        crate::syntax::ExprDisplay { expr: self, spec }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m:?}")?;
        }
        Ok(())
    }
}

/// Bindings for [`Expr::substitute`]: each listed family must supply every
/// component that occurs.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    pub families: BTreeSet<FamilyId>,
    pub values: HashMap<Coord, Expr>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind_family(&mut self, family: FamilyId) -> &mut Self {
        self.families.insert(family);
        self
    }

    pub fn bind(&mut self, coord: Coord, value: Expr) -> &mut Self {
        self.families.insert(coord.family);
        self.values.insert(coord, value);
        self
    }
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &'a Expr) -> Expr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(mut self, rhs: Expr) -> Expr {
        self += &rhs;
        self
    }
}

impl AddAssign<&Expr> for Expr {
    fn add_assign(&mut self, rhs: &Expr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl AddAssign for Expr {
    fn add_assign(&mut self, rhs: Expr) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl SubAssign<&Expr> for Expr {
    fn sub_assign(&mut self, rhs: &Expr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &'a Expr) -> Expr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(mut self, rhs: Expr) -> Expr {
        self -= &rhs;
        self
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &'a Expr) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            out.add_scaled_product(rhs, c, m);
        }
        out
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        &self * &rhs
    }
}

/// Formal total derivative of a single monomial, `d_λ m`.
pub(crate) fn total_derivative_monomial(m: &Monomial, lambda: u8, c: &Q, out: &mut Expr) {
    for (pos, (v, e)) in m.factors().iter().enumerate() {
        let coeff = c * q(*e as i64);
        let rest = m.without_one(pos);
        if v.is_base() {
            if v.coord.comp[0] == lambda {
                out.add_term(rest, coeff);
            }
        } else {
            out.add_term(rest.times_var(&v.prolong(lambda)), coeff);
        }
    }
}

/// Lagrangian-style density `ℒ ω` over a bundle; the volume form stays implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Density {
    pub spec: Arc<BundleSpec>,
    pub coeff: Expr,
}

impl Density {
    pub fn new(spec: Arc<BundleSpec>, coeff: Expr) -> Self {
        Density { spec, coeff }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// `{"bundle": …, "density": "<expr>"}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "bundle": self.spec.to_value(),
            "density": crate::syntax::print(&self.coeff, &self.spec),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        let bundle = v
            .get("bundle")
            .ok_or_else(|| Error::Json("missing `bundle`".into()))?;
        let spec = Arc::new(BundleSpec::from_value(bundle)?);
        let text = v
            .get("density")
            .and_then(|d| d.as_str())
            .ok_or_else(|| Error::Json("missing string `density`".into()))?;
        let coeff = crate::syntax::parse(text, &spec)?;
        Ok(Density::new(spec, coeff))
    }
}
