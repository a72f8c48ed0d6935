//! Formal data at an irregular singular point: ramification, the diagonal
//! exponential part `Λ`, and a truncated fundamental factor `F` with a
//! growth certificate.

pub mod newton;
pub mod operator;
pub mod system;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use newton::{newton_polygon, scalar_exponential_parts, NewtonSegment};
pub use operator::{OperatorSpec, ScalarOperator};
pub use system::{
    growth_bounds_of, max_entry, verify_growth_bounds, FormalFundamental, GrowthCertificate, DEFAULT_ORDER,
    RESONANCE_TOL,
};

use crate::error::{Error, Result};
use crate::puiseux::{lcm_ramification, PuiseuxPoly};

/// `(l, Λ)`: each `Λ_k` has only negative exponents, multiples of `1/l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialPart {
    pub l: i64,
    pub lambdas: Vec<PuiseuxPoly>,
}

/// Leading exponent ascending, then leading coefficient descending; zero last.
pub fn canonical_cmp(a: &PuiseuxPoly, b: &PuiseuxPoly) -> Ordering {
    match (a.leading_term(), b.leading_term()) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some((ea, ca)), Some((eb, cb))) => ea
            .cmp(&eb)
            .then(cb.re.total_cmp(&ca.re))
            .then(cb.im.total_cmp(&ca.im))
            .then_with(|| a.to_string().cmp(&b.to_string())),
    }
}

impl ExponentialPart {
    pub fn new(lambdas: Vec<PuiseuxPoly>) -> Result<ExponentialPart> {
        if let Some(p) = lambdas.iter().find(|p| !p.is_principal()) {
            return Err(Error::Domain(format!("exponential part {p} has a non-negative exponent")));
        }
        let l = lcm_ramification(lambdas.iter());
        let mut lambdas = lambdas;
        lambdas.sort_by(canonical_cmp);
        Ok(ExponentialPart { l, lambdas })
    }

    /// Permutation `perm` with `sorted[i] = raw[perm[i]]`.
    fn sort_permutation(raw: &[PuiseuxPoly]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..raw.len()).collect();
        idx.sort_by(|a, b| canonical_cmp(&raw[*a], &raw[*b]));
        idx
    }
}

/// Largest coefficient gap between two lists of Puiseux polynomials.
fn max_gap(a: &[PuiseuxPoly], b: &[PuiseuxPoly]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).terms().map(|(_, c)| c.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// `(l, Λ)` for `op`. Scalar systems are cross-checked against the
/// Newton-polygon route.
pub fn exponential_parts(op: &OperatorSpec) -> Result<ExponentialPart> {
    if op.n_pole() <= 1 {
        return ExponentialPart::new(vec![PuiseuxPoly::zero(); op.m()]);
    }
    let s = system::split(op, op.n_pole())?;
    let raw = system::lambdas_of(&s, op.n_pole(), op.m());
    let ep = ExponentialPart::new(raw)?;
    if op.m() == 1 {
        let scalar = ScalarOperator::from_system(op)?;
        let parts = scalar_exponential_parts(&scalar)?;
        let other: Vec<PuiseuxPoly> = parts.into_iter().map(|(p, _)| p).collect();
        let scale = 1.0 + op.coeff_matrix(0)[(0, 0)].norm();
        if other.len() != 1 || max_gap(&ep.lambdas, &other) > 1e-8 * scale {
            return Err(Error::Precision(format!(
                "closed-form exponential part {} disagrees with Newton polygon {:?}",
                ep.lambdas[0],
                other.iter().map(|p| p.to_string()).collect::<Vec<_>>()
            )));
        }
    }
    Ok(ep)
}

/// Exponential part of a scalar operator of any order, each part repeated
/// by its multiplicity.
pub fn scalar_exponential_part(op: &ScalarOperator) -> Result<ExponentialPart> {
    let parts = scalar_exponential_parts(op)?;
    let mut lambdas = Vec::new();
    for (p, mult) in parts {
        lambdas.extend(std::iter::repeat(p.principal_part()).take(mult));
    }
    ExponentialPart::new(lambdas)
}

/// `F` truncated at `order` with columns matching `exp_part.lambdas`.
pub fn formal_fundamental(op: &OperatorSpec, exp_part: &ExponentialPart, order: usize) -> Result<FormalFundamental> {
    if order < 1 {
        return Err(Error::Domain("truncation order must be at least 1".into()));
    }
    if exp_part.lambdas.len() != op.m() {
        return Err(Error::Domain("exponential part size does not match the system".into()));
    }
    let s = system::split(op, order.max(op.n_pole()))?;
    let raw = system::lambdas_of(&s, op.n_pole(), op.m());
    let perm = ExponentialPart::sort_permutation(&raw);
    let sorted: Vec<PuiseuxPoly> = perm.iter().map(|&i| raw[i].clone()).collect();
    let scale = 1.0 + max_entry(&op.coeff_matrix(0));
    if max_gap(&sorted, &exp_part.lambdas) > 1e-8 * scale {
        return Err(Error::Domain("exponential part does not belong to this operator".into()));
    }
    FormalFundamental::from_splitting(op, s, order, perm)
}
