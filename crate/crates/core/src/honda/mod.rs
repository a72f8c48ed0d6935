//! The integral operator `I_{p,z₀}(g)(z) = e^{p(z)} ∫_Γ e^{−p(ζ)} g(ζ) dζ`
//! on sectors and chart images, and variation of parameters for
//! `z^N u′ + A u = g` built on it.

pub mod path;
pub mod quad;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub use path::{
    admissible_fraction, base_point, choose_path, integrate_path, path_to, phase_ok, phase_tol, BasePoint, Lead, PathKind, PathSegment,
    PathSpec, PHASE_TOL,
};
pub use quad::{Quad, MAX_SUBDIVISIONS, REL_TOL};

use crate::error::{Error, Result};
use crate::geometry::{Chart, Region, Sector};
use crate::holo::{HoloFn, ScalarFn};
use crate::puiseux::{compose_chart, Exponent, PuiseuxPoly};
use crate::turrittin::{ExponentialPart, FormalFundamental, OperatorSpec};

type C = Complex64;
type Fun = Arc<dyn Fn(C) -> Result<C> + Send + Sync>;

/// Largest admissible sector amplitude for `p`, and the radius below which
/// the leading term dominates the rest of `p` by a factor 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBound {
    pub alpha: f64,
    /// Pole order `s` of the leading term `a z^{-s}`.
    pub leading_order: Exponent,
    pub leading_coeff: C,
    /// `None` when nothing competes with the leading term.
    pub rho_star: Option<f64>,
}

pub fn amplitude_bound(p: &PuiseuxPoly) -> Result<AmplitudeBound> {
    if !p.is_principal() {
        return Err(Error::Domain(format!("{p} has a nonnegative exponent")));
    }
    let Some((e, a)) = p.leading_term() else {
        return Ok(AmplitudeBound {
            alpha: PI,
            leading_order: Ratio::from_integer(0),
            leading_coeff: C::new(0.0, 0.0),
            rho_star: None,
        });
    };
    let s = -e;
    let sf = *s.numer() as f64 / *s.denom() as f64;
    let rest: Vec<(f64, f64)> = p
        .terms()
        .skip(1)
        .map(|(ek, ck)| (-(*ek.numer() as f64) / *ek.denom() as f64, ck.norm()))
        .collect();
    Ok(AmplitudeBound { alpha: PI / (2.0 * sf), leading_order: s, leading_coeff: a, rho_star: dominance_radius(a.norm(), sf, &rest) })
}

/// Largest `ρ` with `|a|ρ^{-s} ≥ 2 Σ|c_k| ρ^{-s_k}` (all `s_k < s`).
fn dominance_radius(a: f64, s: f64, rest: &[(f64, f64)]) -> Option<f64> {
    if rest.is_empty() {
        return None;
    }
    // in log ρ the margin is decreasing
    let holds = |x: f64| {
        let lead = a.ln() - s * x;
        let others: f64 = rest.iter().map(|(sk, ck)| ck * (-sk * x - lead).exp()).sum();
        2.0 * others <= 1.0
    };
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    while !holds(lo) {
        lo -= 1.0;
    }
    while holds(hi) {
        hi += 1.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo.exp())
}

pub fn lead_of(p: &PuiseuxPoly) -> Option<Lead> {
    p.leading_term().map(|(e, a)| Lead { s: -(*e.numer() as f64) / *e.denom() as f64, a })
}

/// Path for `p` from the base point of `s` to `z`.
pub fn build_path(p: &PuiseuxPoly, s: &Sector, z: C) -> Result<PathSpec> {
    let tau = s.tau;
    choose_path(lead_of(p), &|w| p.eval(w, tau), s, z)
}

/// One exponential channel of the kernel, integrated in the `w`-plane:
/// `e^{q(w)} ∫_Γ e^{−q(ω)} weight(ω) dω` with `Γ` admissible for `p̃`,
/// where `q − p̃` is holomorphic.
#[derive(Clone)]
struct Channel {
    sector: Sector,
    base: BasePoint,
    p_tilde: Fun,
    exponent: Fun,
    weight: Fun,
}

/// A single operator evaluation with its path and node diagnostics.
#[derive(Debug, Clone)]
pub struct IntegralEval {
    pub value: C,
    pub path: PathSpec,
    pub quad: Quad,
    /// Largest `Re(p(z) − p(ζ))` over the quadrature nodes.
    pub max_phase: f64,
}

impl Channel {
    fn new(sector: Sector, lead: Option<Lead>, p_tilde: Fun, exponent: Fun, weight: Fun) -> Result<Channel> {
        let mut ch = Channel { sector, base: base_point(lead, &sector), p_tilde, exponent, weight };
        if lead.is_none() {
            // a plain antiderivative may diverge at the vertex; start on the arc then
            let probe = sector.point(0.5, 0.0);
            if let Err(Error::Integration { .. }) = ch.eval(probe) {
                ch.base = BasePoint::Outer { angle: sector.tau, r: sector.r };
            }
        }
        Ok(ch)
    }

    fn eval(&self, w: C) -> Result<IntegralEval> {
        let path = path_to(self.base, &*self.p_tilde, &self.sector, w)?;
        let qw = (self.exponent)(w)?;
        let pw = (self.p_tilde)(w)?;
        let tol = phase_tol(pw);
        let mut worst = f64::NEG_INFINITY;
        // the kernel exponent cancels to O(1) from terms of size |q(w)|
        let noise = 16.0 * f64::EPSILON * qw.norm();
        let quad = integrate_path(&path, noise, &mut |om| {
            let ph = (pw - (self.p_tilde)(om)?).re;
            worst = worst.max(ph);
            if ph > tol {
                return Err(Error::PathConstruction(format!("phase {ph:.3e} exceeds tolerance at node {om}")));
            }
            let k = (qw - (self.exponent)(om)?).exp();
            if k == C::new(0.0, 0.0) {
                return Ok(k);
            }
            Ok(k * (self.weight)(om)?)
        })?;
        if !quad.value.is_finite() {
            return Err(Error::Eval(format!("non-finite integral at {w}")));
        }
        Ok(IntegralEval { value: quad.value, path, quad, max_phase: worst })
    }
}

fn puiseux_fn(p: &PuiseuxPoly, bc: f64) -> Fun {
    let p = p.clone();
    Arc::new(move |z| p.eval(z, bc))
}

fn holo_fn(f: &HoloFn) -> Fun {
    f.evaluator()
}

/// `I_{p,z₀}(g)(z)` with the diagnostics of the evaluation.
pub fn integral_op_eval(p: &PuiseuxPoly, g: &HoloFn, s: &Sector, z: C) -> Result<IntegralEval> {
    if !p.is_principal() {
        return Err(Error::Domain(format!("{p} has a nonnegative exponent")));
    }
    let pf = puiseux_fn(p, s.tau);
    let ch = Channel::new(*s, lead_of(p), pf.clone(), pf, holo_fn(g))?;
    ch.eval(z)
}

pub fn integral_op(p: &PuiseuxPoly, g: &HoloFn, s: &Sector, z: C) -> Result<C> {
    integral_op_eval(p, g, s, z).map(|e| e.value)
}

/// `u = f e^p ∫_Γ e^{−p} f^{−1} g ζ^{−N} dζ`, a particular solution of
/// `z^N u′ + a u = g` when `f e^p` solves the homogeneous equation.
pub fn solve_scalar_sector(p: &PuiseuxPoly, n: usize, a: &HoloFn, g: &HoloFn, s: &Sector, f: &HoloFn) -> Result<HoloFn> {
    if !p.is_principal() {
        return Err(Error::Domain(format!("{p} has a nonnegative exponent")));
    }
    let tau = s.tau;
    check_homogeneous(p, n, a, f, s)?;
    let region = Region::Sector(*s);
    if g.is_zero() {
        return Ok(HoloFn::zero(region));
    }
    let (gf, ff) = (holo_fn(g), holo_fn(f));
    let weight: Fun = Arc::new(move |z| Ok(gf(z)? / (ff(z)? * z.powu(n as u32))));
    let pf = puiseux_fn(p, tau);
    let ch = Channel::new(*s, lead_of(p), pf.clone(), pf, weight)?;
    let ff = holo_fn(f);
    let u: ScalarFn = Arc::new(move |z| Ok(ff(z)? * ch.eval(z)?.value));
    Ok(HoloFn::closure(u, Region::Sector(valid_sector(s, &[lead_of(p)])?), format!("I[{p}]({g})")))
}

/// Where every channel admits phase-verified paths: `s` itself, or `s` with
/// a reduced radius when an outer base needs room for the crossing arc.
pub fn valid_sector(s: &Sector, leads: &[Option<Lead>]) -> Result<Sector> {
    let frac = leads.iter().map(|l| admissible_fraction(*l, s)).fold(1.0, f64::min);
    if frac >= 1.0 {
        return Ok(*s);
    }
    if !(frac > 0.05) {
        return Err(Error::PathConstruction(format!(
            "S({}, {}, {}) leaves no room for outer paths; a rate changes sign inside it",
            s.tau, s.eta, s.r
        )));
    }
    Ok(s.with_radius(s.r * frac * (1.0 - 1e-2)))
}

/// Largest subsector of `s` (same opening) on which `I_{p,z₀}` has a fixed
/// base point with phase-verified paths to every point.
pub fn admissible_sector(p: &PuiseuxPoly, s: &Sector) -> Result<Sector> {
    valid_sector(s, &[lead_of(p)])
}

/// `z^N (f e^p)′ + a f e^p` relative to `|z^{N−1}| |f e^p|` at a few points.
fn check_homogeneous(p: &PuiseuxPoly, n: usize, a: &HoloFn, f: &HoloFn, s: &Sector) -> Result<()> {
    let tau = s.tau;
    let dp = p.derivative();
    for (rs, ra) in [(0.3, -0.5), (0.5, 0.0), (0.7, 0.5)] {
        let z = s.point(rs, ra);
        let h = 0.25 * s.boundary_distance(z);
        let df = cauchy_derivative(&mut |w| f.eval(w), z, h)?;
        let fz = f.eval(z)?;
        let r = z.powu(n as u32) * (df + fz * dp.eval(z, tau)?) + a.eval(z)? * fz;
        let scale = fz.norm() * (1.0 + a.eval(z)?.norm()) * (1.0 + z.norm().powi(n as i32 - 1));
        if r.norm() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Hypothesis(format!("f·e^p does not solve the homogeneous equation at {z}")));
        }
    }
    Ok(())
}

/// `f′(z)` from 16 points on the circle of radius `h`.
pub fn cauchy_derivative(f: &mut dyn FnMut(C) -> Result<C>, z: C, h: f64) -> Result<C> {
    let n = 16;
    let mut acc = C::new(0.0, 0.0);
    for j in 0..n {
        let e = C::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        acc += f(z + e * h)? * e.conj();
    }
    Ok(acc / (n as f64 * h))
}

/// A solution of `z^N u′ + A u = g` on a sector, or on the image `φ(S)` of a
/// sector under a chart.
#[derive(Clone)]
pub struct SectorSolution {
    /// Integration sector; on the `w` side when `chart` is set.
    pub sector: Sector,
    /// Part of `sector` where the solution is defined.
    pub valid: Sector,
    pub chart: Option<Arc<Chart>>,
    pub bases: Vec<BasePoint>,
    /// Branch center for `F` and `Λ` on the `z` side.
    pub z_branch_center: f64,
    m: usize,
    channels: Option<Arc<Vec<Channel>>>,
    fund: Arc<FormalFundamental>,
}

impl std::fmt::Debug for SectorSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SectorSolution")
            .field("sector", &self.sector)
            .field("valid", &self.valid)
            .field("chart", &self.chart)
            .field("bases", &self.bases)
            .field("zero", &self.channels.is_none())
            .finish()
    }
}

impl SectorSolution {
    pub fn m(&self) -> usize {
        self.m
    }

    /// True when the right-hand side vanished and `u ≡ 0`.
    pub fn is_zero(&self) -> bool {
        self.channels.is_none()
    }

    /// `F(z) e^{Λ(z)}`, whose columns span the homogeneous solutions.
    pub fn homogeneous(&self, z: C) -> Result<DMatrix<C>> {
        let mut f = self.fund.eval(z, self.z_branch_center);
        for (k, lam) in self.fund.lambdas().iter().enumerate() {
            let e = lam.eval(z, self.z_branch_center)?.exp();
            let col = f.column(k) * e;
            f.set_column(k, &col);
        }
        Ok(f)
    }

    pub fn z_of(&self, w: C) -> C {
        match &self.chart {
            Some(c) => c.eval(w),
            None => w,
        }
    }

    /// `φ′(w)`, 1 without a chart.
    pub fn dz_dw(&self, w: C) -> C {
        match &self.chart {
            Some(c) => c.derivative(w),
            None => C::new(1.0, 0.0),
        }
    }

    /// The piece in the `z`-plane.
    pub fn region(&self) -> Region {
        match &self.chart {
            Some(c) => Region::SectorImage { chart: c.clone(), sector: self.valid },
            None => Region::Sector(self.valid),
        }
    }

    /// `u(φ(w))`.
    pub fn eval_w(&self, w: C) -> Result<DVector<C>> {
        let Some(ch) = &self.channels else {
            return Ok(DVector::zeros(self.m));
        };
        let mut j = DVector::zeros(self.m);
        for (k, c) in ch.iter().enumerate() {
            j[k] = c.eval(w)?.value;
        }
        Ok(self.fund.eval(self.z_of(w), self.z_branch_center) * j)
    }

    /// Per-channel evaluations at `w`, for diagnostics.
    pub fn channel_evals(&self, w: C) -> Result<Vec<IntegralEval>> {
        match &self.channels {
            Some(ch) => ch.iter().map(|c| c.eval(w)).collect(),
            None => Ok(Vec::new()),
        }
    }

    /// `u(z)`, inverting the chart when there is one.
    pub fn eval(&self, z: C) -> Result<DVector<C>> {
        self.eval_w(self.w_of(z)?)
    }

    fn w_of(&self, z: C) -> Result<C> {
        match &self.chart {
            None => Ok(z),
            Some(c) => c.invert(z).ok_or_else(|| Error::Eval(format!("chart inversion failed at {z}"))),
        }
    }

    /// Components as functions of `z` on [`SectorSolution::region`].
    pub fn components(&self) -> Vec<HoloFn> {
        let region = self.region();
        (0..self.m)
            .map(|i| {
                if self.channels.is_none() {
                    return HoloFn::zero(region.clone());
                }
                let me = self.clone();
                let f: ScalarFn = Arc::new(move |z| Ok(me.eval(z)?[i]));
                HoloFn::closure(f, region.clone(), format!("u[{i}]"))
            })
            .collect()
    }

    /// `sup ‖z^N u′ + A u − g‖_∞` over `samples` (points of `valid`), with
    /// `u′` from a Cauchy circle of radius a quarter of the distance to the
    /// boundary of `valid`.
    pub fn residual(&self, op: &OperatorSpec, g: &[HoloFn], samples: &[C]) -> Result<f64> {
        let n = op.n_pole() as u32;
        let mut worst: f64 = 0.0;
        for &w in samples {
            let z = self.z_of(w);
            let u = self.eval_w(w)?;
            let h = 0.25 * self.valid.boundary_distance(w);
            let mut du = DVector::zeros(self.m);
            for j in 0..16 {
                let e = C::from_polar(1.0, 2.0 * PI * j as f64 / 16.0);
                du += self.eval_w(w + e * h)? * e.conj();
            }
            du /= C::new(16.0 * h, 0.0) * self.dz_dw(w);
            let gz = DVector::from_iterator(self.m, g.iter().map(|gi| gi.eval(z)).collect::<Result<Vec<_>>>()?);
            let r = du * z.powu(n) + op.eval_a(z) * u - gz;
            worst = worst.max(r.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
        Ok(worst)
    }
}

/// 64 points on a fixed interior grid of `s`.
pub fn residual_samples(s: &Sector) -> Vec<C> {
    let mut out = Vec::with_capacity(64);
    for i in 0..8 {
        for j in 0..8 {
            out.push(s.point(0.12 + 0.1 * i as f64, -0.8 + 1.6 * j as f64 / 7.0));
        }
    }
    out
}

/// Hadamard ratio `|det F| / Π‖F_k‖` below which `F` counts as singular.
pub const DET_TOL: f64 = 1e-10;

fn solve_f(f: &DMatrix<C>, g: DVector<C>) -> Result<DVector<C>> {
    let cols: f64 = f.column_iter().map(|c| c.norm()).product();
    let lu = f.clone().lu();
    let det = lu.determinant().norm();
    if !(det > DET_TOL * cols) {
        return Err(Error::Conditioning(format!("|det F| = {det:.3e} against column product {cols:.3e}")));
    }
    lu.solve(&g).ok_or_else(|| Error::Conditioning("singular F".into()))
}

fn check_sizes(op: &OperatorSpec, ff: &FormalFundamental, ep: &ExponentialPart, g: &[HoloFn]) -> Result<()> {
    let m = op.m();
    if ff.m() != m || ep.lambdas.len() != m || g.len() != m {
        return Err(Error::Domain("operator, fundamental, exponential part and right-hand side disagree in size".into()));
    }
    if ff.lambdas() != &ep.lambdas[..] {
        return Err(Error::Domain("fundamental columns do not match the exponential part".into()));
    }
    Ok(())
}

fn build(
    op: &OperatorSpec,
    ff: &FormalFundamental,
    ep: &ExponentialPart,
    chart: Option<Arc<Chart>>,
    s: &Sector,
    g: &[HoloFn],
) -> Result<SectorSolution> {
    check_sizes(op, ff, ep, g)?;
    let m = op.m();
    let n = op.n_pole() as u32;
    let z_bc = chart.as_ref().map_or(s.tau, |c| c.z_branch_center());
    let ffa = Arc::new(ff.clone());
    let mut zero = SectorSolution {
        sector: *s,
        valid: *s,
        chart: chart.clone(),
        bases: Vec::new(),
        z_branch_center: z_bc,
        m,
        channels: None,
        fund: ffa.clone(),
    };
    if g.iter().all(|gi| gi.is_zero()) {
        return Ok(zero);
    }
    let mut leads = Vec::with_capacity(m);
    let gs: Vec<Fun> = g.iter().map(holo_fn).collect();
    let phi: Arc<dyn Fn(C) -> (C, C) + Send + Sync> = match &chart {
        Some(c) => {
            let c = c.clone();
            Arc::new(move |w| (c.eval(w), c.derivative(w)))
        }
        None => Arc::new(|w| (w, C::new(1.0, 0.0))),
    };
    let mut channels = Vec::with_capacity(m);
    for k in 0..m {
        let lam = &ep.lambdas[k];
        let (p_tilde, lead) = match &chart {
            Some(c) => {
                let comp = compose_chart(lam, c, 8)?;
                (puiseux_fn(&comp.principal, s.tau), lead_of(&comp.principal))
            }
            None => (puiseux_fn(lam, s.tau), lead_of(lam)),
        };
        let exponent: Fun = {
            let (lam, phi) = (lam.clone(), phi.clone());
            Arc::new(move |w| lam.eval(phi(w).0, z_bc))
        };
        let weight: Fun = {
            let (ffa, gs, phi) = (ffa.clone(), gs.clone(), phi.clone());
            Arc::new(move |w| {
                let (z, dz) = phi(w);
                let gz = DVector::from_iterator(m, gs.iter().map(|gi| gi(z)).collect::<Result<Vec<_>>>()?);
                let y = solve_f(&ffa.eval(z, z_bc), gz)?;
                Ok(y[k] * dz / z.powu(n))
            })
        };
        leads.push(lead);
        channels.push(Channel::new(*s, lead, p_tilde, exponent, weight)?);
    }
    zero.valid = valid_sector(s, &leads)?;
    Ok(SectorSolution {
        bases: channels.iter().map(|c| c.base).collect(),
        channels: Some(Arc::new(channels)),
        ..zero
    })
}

/// `u = F e^Λ ∫_Γ e^{−Λ(ζ)} F(ζ)^{−1} g(ζ) ζ^{−N} dζ` on `s`, one base point
/// and path family per diagonal entry of `Λ`.
pub fn solve_sector(
    op: &OperatorSpec,
    ff: &FormalFundamental,
    ep: &ExponentialPart,
    g: &[HoloFn],
    s: &Sector,
) -> Result<SectorSolution> {
    build(op, ff, ep, None, s, g)
}

/// Solution on `φ(S)`: each channel is integrated in the `w`-plane along a
/// path admissible for the principal part of `Λ_k∘φ`.
pub fn solve_chart_image(
    op: &OperatorSpec,
    ep: &ExponentialPart,
    ff: &FormalFundamental,
    chart: &Arc<Chart>,
    s: &Sector,
    g: &[HoloFn],
) -> Result<SectorSolution> {
    build(op, ff, ep, Some(chart.clone()), s, g)
}

pub fn solve_system_sector(
    op: &OperatorSpec,
    ff: &FormalFundamental,
    ep: &ExponentialPart,
    g: &[HoloFn],
    s: &Sector,
) -> Result<Vec<HoloFn>> {
    Ok(solve_sector(op, ff, ep, g, s)?.components())
}

pub fn solve_on_chart_image(
    op: &OperatorSpec,
    ep: &ExponentialPart,
    ff: &FormalFundamental,
    chart: &Arc<Chart>,
    s: &Sector,
    g: &[HoloFn],
) -> Result<Vec<HoloFn>> {
    Ok(solve_chart_image(op, ep, ff, chart, s, g)?.components())
}

#[cfg(test)]
mod tests;
