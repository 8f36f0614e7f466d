//! Seeded generators for bundles, expressions and operators.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::expr::{q_frac, Expr, JetVar};
use crate::index::{enumerate_multiindices, BundleSpec, Coord, FamilyId, FieldFamily, MultiIndex, Role};
use crate::lindop::{LinearDiffOp, OperatorRole};

/// Size bounds for generated objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Profile {
    pub max_base_dim: u8,
    /// Operator order bound.
    pub max_order: usize,
    /// Polynomial degree bound for coefficients.
    pub max_degree: u32,
    /// Jet order of dynamic fields inside coefficients.
    pub coeff_jet_order: usize,
    pub max_terms: usize,
    pub max_entries: usize,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            max_base_dim: 3,
            max_order: 3,
            max_degree: 2,
            coeff_jet_order: 1,
            max_terms: 3,
            max_entries: 4,
        }
    }
}

/// Fields `y`, parameters `zeta`, `xi`, `q`, all with `_bar` duals. `y` is
/// a scalar or a vector, `xi` a scalar, vector or 2-form.
pub fn random_bundle<R: Rng>(rng: &mut R, profile: &Profile) -> Arc<BundleSpec> {
    let n = rng.gen_range(1..=profile.max_base_dim.max(1));
    let y_shape = if rng.gen_bool(0.5) { vec![] } else { vec![2] };
    let xi = match rng.gen_range(0..3) {
        0 => FieldFamily::new("xi", Role::Parameter, vec![]),
        1 => FieldFamily::new("xi", Role::Parameter, vec![n]),
        _ if n >= 2 => FieldFamily::new("xi", Role::Parameter, vec![n, n]).antisym(),
        _ => FieldFamily::new("xi", Role::Parameter, vec![n]),
    };
    let mut xi_bar = FieldFamily::new("xi_bar", Role::DualParameter, xi.shape.clone()).dual_of("xi");
    if xi.antisym {
        xi_bar = xi_bar.antisym();
    }
    let fams = vec![
        FieldFamily::new("y", Role::DynamicField, y_shape.clone()),
        FieldFamily::new("zeta", Role::Parameter, vec![]),
        xi,
        FieldFamily::new("q", Role::Parameter, vec![]),
        FieldFamily::new("y_bar", Role::DualField, y_shape).dual_of("y"),
        FieldFamily::new("zeta_bar", Role::DualParameter, vec![]).dual_of("zeta"),
        xi_bar,
        FieldFamily::new("q_bar", Role::DualParameter, vec![]).dual_of("q"),
    ];
    Arc::new(BundleSpec::new(n, fams).expect("random bundle is valid"))
}

fn small_rational<R: Rng>(rng: &mut R) -> crate::expr::Q {
    let mut n: i64 = rng.gen_range(-5..=5);
    if n == 0 {
        n = 1;
    }
    let d: i64 = *[1, 1, 1, 2, 3].choose(rng).expect("nonempty");
    q_frac(n, d)
}

/// Random polynomial in the given variables: up to `max_terms` monomials of
/// degree at most `max_degree`.
pub fn random_poly<R: Rng>(rng: &mut R, vars: &[JetVar], max_terms: usize, max_degree: u32) -> Expr {
    let mut out = Expr::zero();
    let terms = rng.gen_range(1..=max_terms.max(1));
    for _ in 0..terms {
        let deg = rng.gen_range(0..=max_degree);
        let mut m = Expr::constant(small_rational(rng));
        for _ in 0..deg {
            if let Some(v) = vars.choose(rng) {
                m = &m * &Expr::var(v.clone());
            }
        }
        out += m;
    }
    out
}

/// Base coordinates plus jets of the given families up to `jet_order`.
pub fn jet_variables(spec: &BundleSpec, families: &[FamilyId], jet_order: usize) -> Vec<JetVar> {
    let mut vars: Vec<JetVar> = (0..spec.base_dim())
        .map(|l| JetVar::plain(spec.base_coord(l)))
        .collect();
    let jets = enumerate_multiindices(spec.base_dim(), jet_order);
    for &f in families {
        for c in spec.components(f) {
            for j in &jets {
                vars.push(JetVar::new(c.clone(), j.clone()));
            }
        }
    }
    vars
}

/// Coefficient-shaped expression: polynomial in `x` and low jets of the
/// dynamic fields.
pub fn random_coeff<R: Rng>(rng: &mut R, spec: &BundleSpec, profile: &Profile) -> Expr {
    let fields = spec.families_with_role(Role::DynamicField);
    let vars = jet_variables(spec, &fields, profile.coeff_jet_order);
    random_poly(rng, &vars, profile.max_terms, profile.max_degree)
}

/// Random operator between the given family groups, with at most
/// `max_entries` coefficients and order at most `max_order`.
pub fn random_op<R: Rng>(
    rng: &mut R,
    spec: &Arc<BundleSpec>,
    source: &[FamilyId],
    target: &[FamilyId],
    profile: &Profile,
) -> LinearDiffOp {
    let src: Vec<Coord> = source.iter().flat_map(|&f| spec.components(f)).collect();
    let tgt: Vec<Coord> = target.iter().flat_map(|&f| spec.components(f)).collect();
    let jets = enumerate_multiindices(spec.base_dim(), profile.max_order);
    let entries = rng.gen_range(1..=profile.max_entries.max(1));
    let mut op = LinearDiffOp::zero(spec.clone(), source.to_vec(), target.to_vec(), OperatorRole::Generic)
        .expect("generic role");
    for _ in 0..entries {
        let a = tgt.choose(rng).expect("target components").clone();
        let r = src.choose(rng).expect("source components").clone();
        let l: MultiIndex = jets.choose(rng).expect("jets").clone();
        let c = random_coeff(rng, spec, profile);
        op.add_entry((a, r, l), c).expect("well-formed entry");
    }
    op
}
