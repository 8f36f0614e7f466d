//! Multi-indices, antisymmetric component bookkeeping and coordinate families.
//!
//! A [`BundleSpec`] declares the coordinate families of a chart: the base
//! coordinates `x^λ`, dynamic fields, gauge parameters and their density
//! duals. Every coordinate is addressed by a [`Coord`], a family id plus a
//! canonical component tuple. Jet directions are indexed by [`MultiIndex`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub(crate) type IdxVec = SmallVec<[u8; 4]>;

/// Symmetric multi-index over base directions, stored as a sorted sequence.
///
/// Ordered first by order `|Λ|`, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(IdxVec);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(IdxVec::new())
    }

    pub fn new(entries: &[u8]) -> Self {
        let mut v: IdxVec = entries.iter().copied().collect();
        v.sort_unstable();
        MultiIndex(v)
    }

    pub fn single(lambda: u8) -> Self {
        let mut v = IdxVec::new();
        v.push(lambda);
        MultiIndex(v)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    /// `λ + Λ`.
    pub fn with(&self, lambda: u8) -> Self {
        let pos = self.0.partition_point(|&e| e <= lambda);
        let mut v = self.0.clone();
        v.insert(pos, lambda);
        MultiIndex(v)
    }

    /// Sorted merge of two multi-indices.
    pub fn sum(&self, other: &MultiIndex) -> Self {
        let mut v = IdxVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                v.push(self.0[i]);
                i += 1;
            } else {
                v.push(other.0[j]);
                j += 1;
            }
        }
        v.extend_from_slice(&self.0[i..]);
        v.extend_from_slice(&other.0[j..]);
        MultiIndex(v)
    }

    /// Multiplicity of each distinct direction, in ascending direction order.
    pub fn multiplicities(&self) -> Vec<(u8, usize)> {
        let mut out: Vec<(u8, usize)> = Vec::new();
        for &e in &self.0 {
            match out.last_mut() {
                Some((d, m)) if *d == e => *m += 1,
                _ => out.push((e, 1)),
            }
        }
        out
    }

    /// All sub-multisets `Σ ⊆ Λ`, each paired with the complement `Λ − Σ`.
    pub fn splits(&self) -> Vec<(MultiIndex, MultiIndex)> {
        let mult = self.multiplicities();
        let mut out = vec![(IdxVec::new(), IdxVec::new())];
        for (dir, m) in mult {
            let mut next = Vec::with_capacity(out.len() * (m + 1));
            for (a, b) in &out {
                for k in 0..=m {
                    let mut a2 = a.clone();
                    let mut b2 = b.clone();
                    a2.extend(std::iter::repeat_n(dir, k));
                    b2.extend(std::iter::repeat_n(dir, m - k));
                    next.push((a2, b2));
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|(a, b)| (MultiIndex(a), MultiIndex(b)))
            .collect()
    }

    /// Product over directions of `C(m_λ(self), m_λ(sub))` for a sub-multiset `sub`.
    ///
    /// This is the multi-index Leibniz coefficient: the number of ways the
    /// derivatives in `sub` are picked out of `self`.
    pub fn leibniz_factor(&self, sub: &MultiIndex) -> u64 {
        let sub_mult: HashMap<u8, usize> = sub.multiplicities().into_iter().collect();
        self.multiplicities()
            .into_iter()
            .map(|(d, m)| binomial(*sub_mult.get(&d).unwrap_or(&0) as u64, m as u64))
            .product()
    }

    pub fn max_entry(&self) -> Option<u8> {
        self.0.last().copied()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Sorted merge `Λ + Σ`.
pub fn multiindex_sum(a: &MultiIndex, b: &MultiIndex) -> MultiIndex {
    a.sum(b)
}

/// Binomial coefficient `C^a_b = b! / (a! (b-a)!)`.
///
/// Panics if `a > b`.
pub fn binomial(a: u64, b: u64) -> u64 {
    assert!(a <= b, "binomial C^{a}_{b} requires a <= b");
    let a = a.min(b - a);
    let mut acc: u64 = 1;
    for k in 0..a {
        acc = acc * (b - k) / (k + 1);
    }
    acc
}

/// All multi-indices over `base_dim` directions with order at most `max_order`,
/// ordered by order and then lexicographically.
pub fn enumerate_multiindices(base_dim: u8, max_order: usize) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::empty()];
    let mut layer = vec![MultiIndex::empty()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for m in &layer {
            let start = m.max_entry().unwrap_or(0);
            for d in start..base_dim {
                let mut v = m.0.clone();
                v.push(d);
                next.push(MultiIndex(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Sorts an antisymmetric index tuple, returning the canonical tuple and
/// permutation sign, or `None` when an index repeats.
pub fn canonicalize_antisym(indices: &[u8]) -> Option<(IdxVec, i8)> {
    let mut v: IdxVec = indices.iter().copied().collect();
    let mut sign = 1i8;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Levi-Civita symbol on a permutation of `0..n`; zero if `indices` is not one.
pub fn levi_civita(indices: &[u8]) -> i8 {
    let n = indices.len();
    if indices.iter().any(|&i| i as usize >= n) {
        return 0;
    }
    match canonicalize_antisym(indices) {
        Some((_, s)) => s,
        None => 0,
    }
}

/// Strictly increasing `k`-tuples drawn from `0..n`, in lexicographic order.
pub fn increasing_tuples(n: u8, k: usize) -> Vec<IdxVec> {
    fn go(start: u8, n: u8, k: usize, cur: &mut IdxVec, out: &mut Vec<IdxVec>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut IdxVec::new(), &mut out);
    out
}

/// What a coordinate family stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Base,
    DynamicField,
    Parameter,
    DualField,
    DualParameter,
}

impl Role {
    pub fn is_dual(self) -> bool {
        matches!(self, Role::DualField | Role::DualParameter)
    }

    /// The role a family's density dual carries.
    pub fn dual(self) -> Option<Role> {
        match self {
            Role::Base => None,
            Role::DynamicField => Some(Role::DualField),
            Role::Parameter => Some(Role::DualParameter),
            Role::DualField => Some(Role::DynamicField),
            Role::DualParameter => Some(Role::Parameter),
        }
    }
}

/// Declaration of one coordinate family as it appears in the bundle JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldFamily {
    pub name: String,
    pub role: Role,
    #[serde(default)]
    pub shape: Vec<u8>,
    #[serde(default)]
    pub antisym: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_of: Option<String>,
}

impl FieldFamily {
    pub fn new(name: impl Into<String>, role: Role, shape: Vec<u8>) -> Self {
        FieldFamily {
            name: name.into(),
            role,
            shape,
            antisym: false,
            dual_of: None,
        }
    }

    pub fn antisym(mut self) -> Self {
        self.antisym = true;
        self
    }

    pub fn dual_of(mut self, name: impl Into<String>) -> Self {
        self.dual_of = Some(name.into());
        self
    }
}

/// Index of a family inside its [`BundleSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyId(pub u16);

/// Every [`BundleSpec`] keeps its base family at this id.
pub const BASE_FAMILY: FamilyId = FamilyId(0);

/// A single coordinate: family plus canonical component tuple.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub family: FamilyId,
    pub comp: IdxVec,
}

impl Coord {
    pub fn new(family: FamilyId, comp: &[u8]) -> Self {
        Coord {
            family,
            comp: comp.iter().copied().collect(),
        }
    }

    pub fn scalar(family: FamilyId) -> Self {
        Coord {
            family,
            comp: IdxVec::new(),
        }
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}{:?}", self.family.0, self.comp.as_slice())
    }
}

#[derive(Serialize, Deserialize)]
struct BundleDoc {
    base_dim: u8,
    families: Vec<FieldFamily>,
}

/// Coordinate families over a base of dimension `n`, with dual pairings.
///
/// A base family (named `x` unless one is declared) is always present and
/// always has id [`BASE_FAMILY`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleSpec {
    base_dim: u8,
    families: Vec<FieldFamily>,
    duals: Vec<Option<FamilyId>>,
}

impl BundleSpec {
    pub fn new(base_dim: u8, families: Vec<FieldFamily>) -> Result<Self> {
        if base_dim == 0 {
            return Err(Error::InvalidBundle("base_dim must be positive".into()));
        }
        let mut fams = families;
        if !fams.iter().any(|f| f.role == Role::Base) {
            fams.insert(0, FieldFamily::new("x", Role::Base, vec![base_dim]));
        }
        // the base family always sits at id 0
        if let Some(pos) = fams.iter().position(|f| f.role == Role::Base) {
            let b = fams.remove(pos);
            fams.insert(0, b);
        }
        let mut by_name = HashMap::new();
        for (k, f) in fams.iter().enumerate() {
            if f.name.is_empty() || !is_ident(&f.name) {
                return Err(Error::InvalidBundle(format!(
                    "family name `{}` is not an identifier",
                    f.name
                )));
            }
            if by_name.insert(f.name.clone(), k).is_some() {
                return Err(Error::InvalidBundle(format!(
                    "duplicate family name `{}`",
                    f.name
                )));
            }
            if f.shape.contains(&0) {
                return Err(Error::InvalidBundle(format!(
                    "family `{}` has an empty index range",
                    f.name
                )));
            }
            if f.antisym && f.shape.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::InvalidBundle(format!(
                    "antisymmetric family `{}` needs equal index ranges",
                    f.name
                )));
            }
        }
        if fams.iter().filter(|f| f.role == Role::Base).count() != 1 {
            return Err(Error::InvalidBundle("exactly one base family allowed".into()));
        }
        let base = 0;
        if fams[base].shape != [base_dim] || fams[base].antisym {
            return Err(Error::InvalidBundle(format!(
                "base family must have shape [{base_dim}]"
            )));
        }

        let mut duals: Vec<Option<FamilyId>> = vec![None; fams.len()];
        for (k, f) in fams.iter().enumerate() {
            let Some(target) = &f.dual_of else {
                if f.role.is_dual() {
                    return Err(Error::InvalidBundle(format!(
                        "dual family `{}` lacks `dual_of`",
                        f.name
                    )));
                }
                continue;
            };
            if !f.role.is_dual() {
                return Err(Error::InvalidBundle(format!(
                    "family `{}` declares `dual_of` but is not a dual role",
                    f.name
                )));
            }
            let &t = by_name.get(target).ok_or_else(|| {
                Error::InvalidBundle(format!("`{}` is dual of unknown `{target}`", f.name))
            })?;
            let primal = &fams[t];
            if primal.role.dual() != Some(f.role) || primal.role.is_dual() {
                return Err(Error::InvalidBundle(format!(
                    "`{}` cannot be the dual of `{}`",
                    f.name, primal.name
                )));
            }
            if primal.shape != f.shape || primal.antisym != f.antisym {
                return Err(Error::InvalidBundle(format!(
                    "dual `{}` must match the shape of `{}`",
                    f.name, primal.name
                )));
            }
            if duals[t].is_some() {
                return Err(Error::InvalidBundle(format!(
                    "`{}` has more than one dual",
                    primal.name
                )));
            }
            duals[t] = Some(FamilyId(k as u16));
            duals[k] = Some(FamilyId(t as u16));
        }
        Ok(BundleSpec {
            base_dim,
            families: fams,
            duals,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: BundleDoc =
            serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        Self::new(doc.base_dim, doc.families)
    }

    pub fn from_value(value: &serde_json::Value) -> Result<Self> {
        let doc: BundleDoc =
            serde_json::from_value(value.clone()).map_err(|e| Error::Json(e.to_string()))?;
        Self::new(doc.base_dim, doc.families)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(BundleDoc {
            base_dim: self.base_dim,
            families: self.families.clone(),
        })
        .expect("bundle serializes")
    }

    pub fn base_dim(&self) -> u8 {
        self.base_dim
    }

    pub fn base(&self) -> FamilyId {
        BASE_FAMILY
    }

    pub fn families(&self) -> impl Iterator<Item = (FamilyId, &FieldFamily)> {
        self.families
            .iter()
            .enumerate()
            .map(|(k, f)| (FamilyId(k as u16), f))
    }

    pub fn family(&self, id: FamilyId) -> &FieldFamily {
        &self.families[id.0 as usize]
    }

    pub fn family_id(&self, name: &str) -> Result<FamilyId> {
        self.families
            .iter()
            .position(|f| f.name == name)
            .map(|k| FamilyId(k as u16))
            .ok_or_else(|| Error::UnknownFamily(name.to_string()))
    }

    pub fn role(&self, id: FamilyId) -> Role {
        self.family(id).role
    }

    pub fn dual(&self, id: FamilyId) -> Result<FamilyId> {
        self.duals[id.0 as usize]
            .ok_or_else(|| Error::MissingDual(self.family(id).name.clone()))
    }

    pub fn families_with_role(&self, role: Role) -> Vec<FamilyId> {
        self.families()
            .filter(|(_, f)| f.role == role)
            .map(|(id, _)| id)
            .collect()
    }

    pub fn non_base_families(&self) -> Vec<FamilyId> {
        self.families()
            .filter(|(_, f)| f.role != Role::Base)
            .map(|(id, _)| id)
            .collect()
    }

    /// Builds a coordinate from a possibly non-canonical index tuple.
    ///
    /// Returns `Ok(None)` for an antisymmetric family with a repeated index;
    /// otherwise the canonical coordinate and the sign absorbed by reordering.
    pub fn coord(&self, family: FamilyId, indices: &[u8]) -> Result<Option<(Coord, i8)>> {
        let fam = self.family(family);
        if indices.len() != fam.shape.len() {
            return Err(Error::IndexOutOfRange(format!(
                "`{}` takes {} indices, got {}",
                fam.name,
                fam.shape.len(),
                indices.len()
            )));
        }
        for (k, (&i, &range)) in indices.iter().zip(&fam.shape).enumerate() {
            if i >= range {
                return Err(Error::IndexOutOfRange(format!(
                    "index {i} at position {k} of `{}` exceeds range {range}",
                    fam.name
                )));
            }
        }
        if fam.antisym {
            Ok(canonicalize_antisym(indices).map(|(v, s)| (Coord { family, comp: v }, s)))
        } else {
            Ok(Some((Coord::new(family, indices), 1)))
        }
    }

    /// Canonical coordinate for an index tuple already known to be canonical.
    ///
    /// Panics on an invalid tuple; for internal model builders.
    pub fn coord_canonical(&self, family: FamilyId, indices: &[u8]) -> Coord {
        match self.coord(family, indices) {
            Ok(Some((c, 1))) => c,
            other => panic!(
                "non-canonical component {:?} for `{}`: {other:?}",
                indices,
                self.family(family).name
            ),
        }
    }

    /// Base coordinate `x^λ`.
    pub fn base_coord(&self, lambda: u8) -> Coord {
        Coord::new(BASE_FAMILY, &[lambda])
    }

    /// All independent components of a family, in canonical order.
    pub fn components(&self, family: FamilyId) -> Vec<Coord> {
        let fam = self.family(family);
        if fam.shape.is_empty() {
            return vec![Coord::scalar(family)];
        }
        if fam.antisym {
            return increasing_tuples(fam.shape[0], fam.shape.len())
                .into_iter()
                .map(|comp| Coord { family, comp })
                .collect();
        }
        let mut out: Vec<IdxVec> = vec![IdxVec::new()];
        for &range in &fam.shape {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..range).map(move |i| {
                        let mut w = v.clone();
                        w.push(i);
                        w
                    })
                })
                .collect();
        }
        out.into_iter().map(|comp| Coord { family, comp }).collect()
    }

    /// The same component in the dual family.
    pub fn dual_coord(&self, c: &Coord) -> Result<Coord> {
        Ok(Coord {
            family: self.dual(c.family)?,
            comp: c.comp.clone(),
        })
    }

    /// Textual name of a coordinate, e.g. `a[0,1]` or `alpha`.
    pub fn coord_name(&self, c: &Coord) -> String {
        let fam = self.family(c.family);
        if fam.shape.is_empty() {
            return fam.name.clone();
        }
        let idx: Vec<String> = c.comp.iter().map(|i| i.to_string()).collect();
        format!("{}[{}]", fam.name, idx.join(","))
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u8]) -> MultiIndex {
        MultiIndex::new(v)
    }

    #[test]
    fn sum_examples() {
        assert_eq!(multiindex_sum(&mi(&[]), &mi(&[0, 1])), mi(&[0, 1]));
        assert_eq!(multiindex_sum(&mi(&[1]), &mi(&[0, 1])), mi(&[0, 1, 1]));
        assert_eq!(multiindex_sum(&mi(&[2, 2]), &mi(&[0])), mi(&[0, 2, 2]));
        assert_eq!(mi(&[0, 2, 2]).to_string(), "(0,2,2)");
        assert_eq!(MultiIndex::empty().to_string(), "()");
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(1, 3), 3);
        assert_eq!(binomial(2, 5), 10);
    }

    #[test]
    #[should_panic]
    fn binomial_rejects_a_above_b() {
        binomial(3, 2);
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(
            enumerate_multiindices(2, 1),
            vec![mi(&[]), mi(&[0]), mi(&[1])]
        );
        assert_eq!(
            enumerate_multiindices(2, 2),
            vec![mi(&[]), mi(&[0]), mi(&[1]), mi(&[0, 0]), mi(&[0, 1]), mi(&[1, 1])]
        );
    }

    #[test]
    fn enumeration_count_matches_stars_and_bars() {
        // independent count: number of nondecreasing sequences by brute force
        for n in 1..=4u8 {
            for k in 0..=4usize {
                let mut brute = 0usize;
                for ord in 0..=k {
                    let total = (n as usize).pow(ord as u32);
                    for code in 0..total {
                        let mut c = code;
                        let mut seq = Vec::new();
                        for _ in 0..ord {
                            seq.push(c % n as usize);
                            c /= n as usize;
                        }
                        if seq.windows(2).all(|w| w[0] <= w[1]) {
                            brute += 1;
                        }
                    }
                }
                let formula: u64 = (0..=k as u64)
                    .map(|j| binomial(j, n as u64 - 1 + j))
                    .sum();
                let got = enumerate_multiindices(n, k);
                assert_eq!(got.len(), brute);
                assert_eq!(got.len() as u64, formula);
                assert!(got.windows(2).all(|w| w[0] < w[1]));
            }
        }
        assert_eq!(enumerate_multiindices(3, 2).len(), 10);
    }

    #[test]
    fn antisym_examples() {
        let (v, s) = canonicalize_antisym(&[2, 1]).unwrap();
        assert_eq!((v.as_slice(), s), (&[1u8, 2][..], -1));
        assert!(canonicalize_antisym(&[1, 1]).is_none());
        let (v, s) = canonicalize_antisym(&[0, 2, 1]).unwrap();
        assert_eq!((v.as_slice(), s), (&[0u8, 1, 2][..], -1));
        assert_eq!(levi_civita(&[0, 1, 2]), 1);
        assert_eq!(levi_civita(&[1, 0, 2]), -1);
        assert_eq!(levi_civita(&[0, 0, 2]), 0);
    }

    #[test]
    fn splits_and_leibniz_factor() {
        let l = mi(&[0, 0, 1]);
        let splits = l.splits();
        assert_eq!(splits.len(), 6);
        for (a, b) in &splits {
            assert_eq!(a.sum(b), l);
        }
        assert_eq!(l.leibniz_factor(&mi(&[0])), 2);
        assert_eq!(l.leibniz_factor(&mi(&[0, 1])), 2);
        assert_eq!(l.leibniz_factor(&mi(&[])), 1);
    }

    #[test]
    fn bundle_validation() {
        let ok = BundleSpec::new(
            2,
            vec![
                FieldFamily::new("y", Role::DynamicField, vec![]),
                FieldFamily::new("y_bar", Role::DualField, vec![]).dual_of("y"),
            ],
        )
        .unwrap();
        assert_eq!(ok.family(ok.base()).name, "x");
        let y = ok.family_id("y").unwrap();
        assert_eq!(ok.family(ok.dual(y).unwrap()).name, "y_bar");

        let dup = BundleSpec::new(
            2,
            vec![
                FieldFamily::new("y", Role::DynamicField, vec![]),
                FieldFamily::new("y", Role::Parameter, vec![]),
            ],
        );
        assert!(dup.is_err());
        let bad_shape = BundleSpec::new(
            2,
            vec![
                FieldFamily::new("y", Role::DynamicField, vec![2]),
                FieldFamily::new("y_bar", Role::DualField, vec![3]).dual_of("y"),
            ],
        );
        assert!(bad_shape.is_err());
        let orphan = BundleSpec::new(2, vec![FieldFamily::new("z", Role::DualField, vec![])]);
        assert!(orphan.is_err());
    }

    #[test]
    fn antisym_components_and_coords() {
        let spec = BundleSpec::new(
            3,
            vec![FieldFamily::new("a", Role::DynamicField, vec![3, 3]).antisym()],
        )
        .unwrap();
        let a = spec.family_id("a").unwrap();
        assert_eq!(spec.components(a).len(), 3);
        let (c, s) = spec.coord(a, &[2, 1]).unwrap().unwrap();
        assert_eq!((c.comp.as_slice(), s), (&[1u8, 2][..], -1));
        assert!(spec.coord(a, &[1, 1]).unwrap().is_none());
        assert!(spec.coord(a, &[1, 3]).is_err());
        assert_eq!(spec.coord_name(&c), "a[1,2]");
    }

    #[test]
    fn bundle_json_round_trip() {
        let text = r#"{"base_dim": 3, "families": [
            {"name": "x", "role": "base", "shape": [3]},
            {"name": "A", "role": "dynamic-field", "shape": [3, 3], "antisym": true},
            {"name": "A_bar", "role": "dual-field", "shape": [3, 3], "antisym": true, "dual_of": "A"}
        ]}"#;
        let spec = BundleSpec::from_json(text).unwrap();
        let again = BundleSpec::from_value(&spec.to_value()).unwrap();
        assert_eq!(spec, again);
    }

    fn arb_mi() -> impl Strategy<Value = MultiIndex> {
        proptest::collection::vec(0u8..4, 0..5).prop_map(|v| MultiIndex::new(&v))
    }

    proptest! {
        #[test]
        fn sum_is_commutative_associative(a in arb_mi(), b in arb_mi(), c in arb_mi()) {
            prop_assert_eq!(a.sum(&b), b.sum(&a));
            prop_assert_eq!(a.sum(&b).sum(&c), a.sum(&b.sum(&c)));
            prop_assert_eq!(a.sum(&MultiIndex::empty()), a.clone());
            prop_assert_eq!(a.sum(&b).order(), a.order() + b.order());
        }

        #[test]
        fn pascal_rule(b in 2u64..40, a in 1u64..39) {
            prop_assume!(a < b);
            prop_assert_eq!(binomial(a, b), binomial(a, b - 1) + binomial(a - 1, b - 1));
        }

        #[test]
        fn antisym_signs_compose(perm in Just(vec![0u8, 1, 2, 3, 4]).prop_shuffle(),
                                 perm2 in Just(vec![0u8, 1, 2, 3, 4]).prop_shuffle()) {
            let (canon, s1) = canonicalize_antisym(&perm).unwrap();
            let (again, s_id) = canonicalize_antisym(&canon).unwrap();
            prop_assert_eq!(&canon, &again);
            prop_assert_eq!(s_id, 1);
            // apply perm2 on top of perm: sign(perm ∘ perm2) = sign(perm) * sign(perm2)
            let composed: Vec<u8> = perm2.iter().map(|&k| perm[k as usize]).collect();
            let (_, s2) = canonicalize_antisym(&perm2).unwrap();
            let (_, s12) = canonicalize_antisym(&composed).unwrap();
            prop_assert_eq!(s12, s1 * s2);
        }
    }
}
