//! Newton polygons and exponential parts of scalar operators, using the
//! Euler operator `δ = z d/dz` and iterated substitutions `u = e^{q} v`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::operator::ScalarOperator;
use crate::error::{Error, Result};
use crate::puiseux::PuiseuxPoly;

type C = Complex64;

/// One edge of the Newton polygon: exponential terms of pole order
/// `pole_order` (0 for the regular part) with total multiplicity
/// `multiplicity`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonSegment {
    pub pole_order: Ratio<i64>,
    pub multiplicity: usize,
}

/// `Σ_k w^k Q_k(δ)` with `δ = w d/dw`, coefficients of `Q_k` in increasing degree.
#[derive(Debug, Clone, Default)]
pub(crate) struct DeltaOp {
    terms: BTreeMap<i64, Vec<C>>,
}

fn dpoly_add(a: &[C], b: &[C]) -> Vec<C> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default())
        .collect()
}

fn dpoly_mul(a: &[C], b: &[C]) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `p(δ + b)`.
fn dpoly_shift(p: &[C], b: C) -> Vec<C> {
    let mut acc: Vec<C> = vec![];
    for c in p.iter().rev() {
        acc = dpoly_add(&dpoly_mul(&acc, &[b, C::new(1.0, 0.0)]), &[*c]);
    }
    acc
}

impl DeltaOp {
    pub(crate) fn from_scalar(op: &ScalarOperator) -> DeltaOp {
        // a_j(z) ∂^j = a_j(z) z^{-j} δ(δ−1)…(δ−j+1)
        let mut out = DeltaOp::default();
        let mut falling = vec![C::new(1.0, 0.0)];
        for (j, a) in op.coeffs.iter().enumerate() {
            if j > 0 {
                falling = dpoly_mul(&falling, &[C::new(-(j as f64 - 1.0), 0.0), C::new(1.0, 0.0)]);
            }
            for (i, c) in a.coeffs.iter().enumerate() {
                if c.norm() == 0.0 {
                    continue;
                }
                let scaled: Vec<C> = falling.iter().map(|f| f * c).collect();
                out.add_term(i as i64 - j as i64, &scaled);
            }
        }
        out
    }

    fn add_term(&mut self, k: i64, q: &[C]) {
        let e = self.terms.entry(k).or_default();
        *e = dpoly_add(e, q);
    }

    /// `(Σ w^a P_a(δ)) (Σ w^b Q_b(δ)) = Σ w^{a+b} P_a(δ + b) Q_b(δ)`.
    fn mul(&self, other: &DeltaOp) -> DeltaOp {
        let mut out = DeltaOp::default();
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                let ps = dpoly_shift(p, C::new(*b as f64, 0.0));
                out.add_term(a + b, &dpoly_mul(&ps, q));
            }
        }
        out
    }

    /// Substitutes `w = t^q`, so `δ_w = δ_t / q`.
    fn ramify(&self, q: i64) -> DeltaOp {
        let mut out = DeltaOp::default();
        for (k, p) in &self.terms {
            let scaled: Vec<C> = p.iter().enumerate().map(|(j, c)| c / (q as f64).powi(j as i32)).collect();
            out.add_term(k * q, &scaled);
        }
        out
    }

    /// Conjugation by `e^{c w^{-p}}`: `δ ↦ δ − p c w^{-p}`.
    fn conjugate(&self, c: C, p: i64) -> DeltaOp {
        let mut x = DeltaOp::default();
        x.add_term(0, &[C::new(0.0, 0.0), C::new(1.0, 0.0)]);
        x.add_term(-p, &[c * (-(p as f64))]);
        let mut out = DeltaOp::default();
        for (k, q) in &self.terms {
            let mut acc = DeltaOp::default();
            for coef in q.iter().rev() {
                acc = acc.mul(&x);
                acc.add_term(0, &[*coef]);
            }
            for (kk, qq) in acc.terms {
                out.add_term(k + kk, &qq);
            }
        }
        out
    }

    fn scale(&self) -> f64 {
        self.terms.values().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients below `tol` times the largest one.
    fn pruned(&self, tol: f64) -> DeltaOp {
        let s = self.scale();
        let mut out = DeltaOp::default();
        for (k, q) in &self.terms {
            let mut q: Vec<C> = q.iter().map(|c| if c.norm() <= tol * s { C::new(0.0, 0.0) } else { *c }).collect();
            while q.last().is_some_and(|c| c.norm() == 0.0) {
                q.pop();
            }
            if !q.is_empty() {
                out.terms.insert(*k, q);
            }
        }
        out
    }

    fn coeff(&self, k: i64, j: usize) -> C {
        self.terms.get(&k).and_then(|q| q.get(j)).copied().unwrap_or_default()
    }

    /// Lowest `w`-power carrying `δ^j`, per `j`.
    fn heights(&self) -> BTreeMap<usize, i64> {
        let mut v: BTreeMap<usize, i64> = BTreeMap::new();
        for (k, q) in &self.terms {
            for (j, c) in q.iter().enumerate() {
                if c.norm() > 0.0 {
                    let e = v.entry(j).or_insert(*k);
                    *e = (*e).min(*k);
                }
            }
        }
        v
    }
}

/// Polygon edge in `(δ-degree, w-power)` coordinates.
#[derive(Debug, Clone)]
struct Edge {
    x0: usize,
    k0: i64,
    len: usize,
    slope: Ratio<i64>,
}

fn polygon(op: &DeltaOp) -> Result<Vec<Edge>> {
    let v = op.heights();
    if v.is_empty() {
        return Err(Error::Degenerate("operator is identically zero".into()));
    }
    let kmin = *v.values().min().unwrap();
    let jstar = *v.iter().filter(|(_, k)| **k == kmin).map(|(j, _)| j).max().unwrap();
    let jmax = *v.keys().max().unwrap();
    let mut out = Vec::new();
    if jstar > 0 {
        out.push(Edge { x0: 0, k0: kmin, len: jstar, slope: Ratio::from_integer(0) });
    }
    let (mut px, mut pk) = (jstar, kmin);
    while px < jmax {
        let mut best: Option<(Ratio<i64>, usize)> = None;
        for (j, k) in v.range(px + 1..) {
            let s = Ratio::new(k - pk, (*j - px) as i64);
            best = match best {
                None => Some((s, *j)),
                Some((bs, bj)) if s < bs || (s == bs && *j > bj) => Some((s, *j)),
                b => b,
            };
        }
        let (s, j) = best.unwrap();
        out.push(Edge { x0: px, k0: pk, len: j - px, slope: s });
        pk = v[&j];
        px = j;
    }
    Ok(out)
}

/// Newton polygon at 0 of `Σ a_j(z) (d/dz)^j`, reported as pole orders with
/// horizontal lengths (pole order 0 is the regular part).
pub fn newton_polygon(op: &ScalarOperator) -> Result<Vec<NewtonSegment>> {
    let d = DeltaOp::from_scalar(op);
    Ok(polygon(&d)?
        .into_iter()
        .map(|e| NewtonSegment { pole_order: e.slope, multiplicity: e.len })
        .collect())
}

fn poly_eval(p: &[C], x: C) -> C {
    p.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn poly_deriv(p: &[C]) -> Vec<C> {
    p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// Roots with multiplicities (Aberth iteration, clustering, and polishing of
/// multiple roots on the matching derivative).
pub(crate) fn roots(p: &[C]) -> Vec<(C, usize)> {
    let mut p = p.to_vec();
    while p.last().is_some_and(|c| c.norm() == 0.0) {
        p.pop();
    }
    let n = p.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    let lead = p[n];
    let monic: Vec<C> = p.iter().map(|c| c / lead).collect();
    let bound = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let dp = poly_deriv(&monic);
    let mut z: Vec<C> = (0..n)
        .map(|k| C::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let pv = poly_eval(&monic, z[i]);
            let dv = poly_eval(&dp, z[i]);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / dv;
            let s: C = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (C::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    // cluster
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        let mut members = vec![i];
        used[i] = true;
        for j in i + 1..n {
            if !used[j] && (z[i] - z[j]).norm() <= 1e-5 * (1.0 + z[i].norm()) {
                members.push(j);
                used[j] = true;
            }
        }
        let mu = members.len();
        let mut r: C = members.iter().map(|&j| z[j]).sum::<C>() / mu as f64;
        let mut q = monic.clone();
        for _ in 1..mu {
            q = poly_deriv(&q);
        }
        let dq = poly_deriv(&q);
        for _ in 0..50 {
            let d = poly_eval(&dq, r);
            if d.norm() == 0.0 {
                break;
            }
            let step = poly_eval(&q, r) / d;
            r -= step;
            if step.norm() <= 1e-16 * (1.0 + r.norm()) {
                break;
            }
        }
        out.push((r, mu));
    }
    out
}

const PRUNE: f64 = 1e-10;

/// Exponential parts of a scalar operator with multiplicities, in the
/// original variable `z`.
pub fn scalar_exponential_parts(op: &ScalarOperator) -> Result<Vec<(PuiseuxPoly, usize)>> {
    let d = DeltaOp::from_scalar(op).pruned(PRUNE);
    let mut out = Vec::new();
    explore(&d, 1, PuiseuxPoly::zero(), op.order(), None, 0, &mut out)?;
    let total: usize = out.iter().map(|x| x.1).sum();
    if total != op.order() {
        return Err(Error::Precision(format!(
            "exponential parts account for {total} of {} solutions",
            op.order()
        )));
    }
    Ok(out)
}

fn explore(
    op: &DeltaOp,
    ram: i64,
    acc: PuiseuxPoly,
    width: usize,
    bound: Option<Ratio<i64>>,
    depth: usize,
    out: &mut Vec<(PuiseuxPoly, usize)>,
) -> Result<()> {
    if depth > 32 {
        return Err(Error::Precision("exponential-part recursion too deep".into()));
    }
    let mut covered = 0usize;
    for e in polygon(op)? {
        if covered >= width {
            break;
        }
        let take = e.len.min(width - covered);
        covered += take;
        if e.slope == Ratio::from_integer(0) {
            out.push((acc.clone(), take));
            continue;
        }
        if bound.is_some_and(|b| e.slope >= b) {
            return Err(Error::Precision(format!(
                "slope {} did not decrease after substitution",
                e.slope
            )));
        }
        let mut chr = vec![C::new(0.0, 0.0); e.len + 1];
        for (i, c) in chr.iter_mut().enumerate() {
            let k = Ratio::from_integer(e.k0) + e.slope * Ratio::from_integer(i as i64);
            if k.is_integer() {
                *c = op.coeff(k.to_integer(), e.x0 + i);
            }
        }
        let (p, q) = (*e.slope.numer(), *e.slope.denom());
        let s = p as f64 / q as f64;
        let mut remaining = take;
        for (y, mu) in roots(&chr) {
            if y.norm() == 0.0 || remaining == 0 {
                continue;
            }
            let mu = mu.min(remaining);
            remaining -= mu;
            let c = -y / s;
            let next = op.ramify(q).conjugate(c, p).pruned(PRUNE);
            let nram = ram * q;
            let g = p.gcd(&nram);
            let acc2 = acc.add(&PuiseuxPoly::monomial(c, -p / g, nram / g));
            explore(&next, nram, acc2, mu, Some(Ratio::from_integer(p)), depth + 1, out)?;
        }
    }
    Ok(())
}
