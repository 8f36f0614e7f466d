//! Total derivatives, Euler–Lagrange operators and the first variational
//! formula on densities.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{total_derivative_monomial, Density, Expr, JetVar};
use crate::index::{Coord, FamilyId, MultiIndex, Role};

/// `d_λ e = ∂_λ e + Σ y^i_{λ+Λ} ∂^Λ_i e`, prolonging every non-base family.
pub fn total_derivative(e: &Expr, lambda: u8) -> Expr {
    let mut out = Expr::zero();
    for (m, c) in e.terms() {
        total_derivative_monomial(m, lambda, c, &mut out);
    }
    out
}

/// `d_Λ e`, applying `d_λ` once per entry of `Λ`.
pub fn iterated_total_derivative(e: &Expr, jet: &MultiIndex) -> Expr {
    let mut acc = e.clone();
    for &lambda in jet.entries() {
        if acc.is_zero() {
            break;
        }
        acc = total_derivative(&acc, lambda);
    }
    acc
}

/// `Σ_λ d_λ J^λ`.
pub fn divergence(current: &[Expr]) -> Expr {
    let mut out = Expr::zero();
    for (lambda, j) in current.iter().enumerate() {
        out += total_derivative(j, lambda as u8);
    }
    out
}

/// The summands `(−1)^{|Λ|} d_Λ(∂^Λ_i ℒ)` of the variational derivative with
/// respect to `coord`, one per jet of `coord` occurring in `ℒ`.
pub fn euler_lagrange_terms(l: &Expr, coord: &Coord) -> Vec<Expr> {
    let mut jets: Vec<JetVar> = l
        .variables()
        .into_iter()
        .filter(|v| &v.coord == coord)
        .collect();
    jets.sort();
    jets.into_iter()
        .map(|v| {
            let d = iterated_total_derivative(&l.partial(&v), &v.jet);
            if v.jet.order() % 2 == 1 {
                -d
            } else {
                d
            }
        })
        .collect()
}

/// `ℰ_i = Σ_Λ (−1)^{|Λ|} d_Λ(∂^Λ_i ℒ)`.
pub fn variational_derivative(l: &Expr, coord: &Coord) -> Expr {
    let mut out = Expr::zero();
    for t in euler_lagrange_terms(l, coord) {
        out += t;
    }
    out
}

/// Euler–Lagrange expressions for every independent component of the given
/// families, in canonical component order.
pub fn euler_lagrange(l: &Density, families: &[FamilyId]) -> BTreeMap<Coord, Expr> {
    let coords: Vec<Coord> = families
        .iter()
        .flat_map(|&f| l.spec.components(f))
        .collect();
    coords
        .into_par_iter()
        .map(|c| {
            let e = variational_derivative(&l.coeff, &c);
            (c, e)
        })
        .collect()
}

/// Nonzero variational derivatives of `d` over all non-base coordinates.
pub fn variational_residuals(d: &Expr) -> Vec<(Coord, Expr)> {
    let mut coords: Vec<Coord> = d
        .variables()
        .into_iter()
        .filter(|v| !v.is_base())
        .map(|v| v.coord)
        .collect();
    coords.dedup();
    coords
        .into_par_iter()
        .map(|c| {
            let e = variational_derivative(d, &c);
            (c, e)
        })
        .filter(|(_, e)| !e.is_zero())
        .collect()
}

/// True iff every variational derivative of `d` vanishes identically, which on
/// a polynomial chart is exactly `d_H`-exactness.
pub fn is_variationally_trivial(d: &Density) -> bool {
    variational_residuals(&d.coeff).is_empty()
}

/// Vertical generalized vector field `υ^i ∂_i`; components may depend on jets
/// of fields and parameters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneralizedVectorField {
    pub components: BTreeMap<Coord, Expr>,
}

impl GeneralizedVectorField {
    pub fn new(components: BTreeMap<Coord, Expr>) -> Self {
        GeneralizedVectorField { components }
    }

    /// Zero field over every component of the given families.
    pub fn zero(spec: &crate::index::BundleSpec, families: &[FamilyId]) -> Self {
        GeneralizedVectorField {
            components: families
                .iter()
                .flat_map(|&f| spec.components(f))
                .map(|c| (c, Expr::zero()))
                .collect(),
        }
    }
}

/// Horizontal `(n−1)`-form `J^λ ω_λ`, one component per base direction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CurrentVector {
    pub components: Vec<Expr>,
}

impl CurrentVector {
    pub fn new(components: Vec<Expr>) -> Self {
        CurrentVector { components }
    }

    pub fn zero(n: u8) -> Self {
        CurrentVector {
            components: vec![Expr::zero(); n as usize],
        }
    }

    pub fn divergence(&self) -> Expr {
        divergence(&self.components)
    }
}

/// `Σ_{i,Λ} d_Λ(υ^i) ∂^Λ_i ℒ`.
///
/// Every dynamic-field coordinate that `ℒ` depends on must have a component
/// in `field`.
pub fn lie_derive_density(l: &Density, field: &GeneralizedVectorField) -> Result<Density> {
    let mut out = Expr::zero();
    for v in l.coeff.variables() {
        match field.components.get(&v.coord) {
            Some(comp) => {
                let d = iterated_total_derivative(comp, &v.jet);
                if !d.is_zero() {
                    out += &d * &l.coeff.partial(&v);
                }
            }
            None if l.spec.role(v.family()) == Role::DynamicField => {
                return Err(Error::MissingComponent(l.spec.coord_name(&v.coord)));
            }
            None => {}
        }
    }
    Ok(Density::new(l.spec.clone(), out))
}

/// `L_ϑ ℒ − Σ_i υ^i ℰ_i`; always variationally trivial.
pub fn first_variational_residual(l: &Density, field: &GeneralizedVectorField) -> Result<Density> {
    let lie = lie_derive_density(l, field)?;
    let mut out = lie.coeff;
    for (c, comp) in &field.components {
        if comp.is_zero() {
            continue;
        }
        let el = variational_derivative(&l.coeff, c);
        out -= &(comp * &el);
    }
    Ok(Density::new(l.spec.clone(), out))
}

/// Noether current `J^λ = υ^i ∂^λ_i ℒ − σ^λ` of a first-order Lagrangian.
///
/// Checks `L_ϑ ℒ = d_λ σ^λ` first, and the conservation law
/// `d_λ J^λ + Σ υ^i ℰ_i = 0` before returning.
pub fn noether_current(
    l: &Density,
    field: &GeneralizedVectorField,
    sigma: &CurrentVector,
) -> Result<CurrentVector> {
    let order = l.coeff.jet_order();
    if order > 1 {
        return Err(Error::UnsupportedOrder(order));
    }
    let n = l.spec.base_dim() as usize;
    if sigma.components.len() != n {
        return Err(Error::FamilyMismatch(format!(
            "sigma has {} components, base dimension is {n}",
            sigma.components.len()
        )));
    }
    let lie = lie_derive_density(l, field)?;
    if lie.coeff != sigma.divergence() {
        return Err(Error::NotASymmetry);
    }
    let mut current = Vec::with_capacity(n);
    for lambda in 0..n {
        let mut j = Expr::zero();
        for (c, comp) in &field.components {
            let v = JetVar::new(c.clone(), MultiIndex::single(lambda as u8));
            let p = l.coeff.partial(&v);
            if !p.is_zero() {
                j += comp * &p;
            }
        }
        j -= &sigma.components[lambda];
        current.push(j);
    }
    let current = CurrentVector::new(current);
    let mut law = current.divergence();
    for (c, comp) in &field.components {
        law += comp * &variational_derivative(&l.coeff, c);
    }
    if !law.is_zero() {
        return Err(Error::NotASymmetry);
    }
    Ok(current)
}
