//! Integration paths inside a closed sector along which
//! `Re(p(z) − p(ζ)) ≤ 0`, so the kernel `e^{p(z)−p(ζ)}` has modulus at most 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quad::{adaptive_noisy, improper_at_zero_noisy, Quad, REL_TOL};
use crate::error::{Error, Result};
use crate::geometry::Sector;

type C = Complex64;

/// Allowed excess of `Re(p(z) − p(ζ))` at a node.
pub const PHASE_TOL: f64 = 1e-9;

/// Phase tolerance with room for rounding in `p` itself.
pub fn phase_tol(pz: C) -> f64 {
    PHASE_TOL + 8.0 * f64::EPSILON * pz.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSegment {
    /// `ρ e^{iθ}` for `ρ` from `rho_from` to `rho_to`; `rho_from = 0` is the improper vertex end.
    Radial { angle: f64, rho_from: f64, rho_to: f64 },
    Arc { radius: f64, theta_from: f64, theta_to: f64 },
}

impl PathSegment {
    pub fn point(&self, t: f64) -> C {
        match *self {
            PathSegment::Radial { angle, rho_from, rho_to } => C::from_polar(rho_from + (rho_to - rho_from) * t, angle),
            PathSegment::Arc { radius, theta_from, theta_to } => {
                C::from_polar(radius, theta_from + (theta_to - theta_from) * t)
            }
        }
    }

    /// `d point / dt`.
    pub fn velocity(&self, t: f64) -> C {
        match *self {
            PathSegment::Radial { angle, rho_from, rho_to } => C::from_polar(rho_to - rho_from, angle),
            PathSegment::Arc { theta_from, theta_to, .. } => C::i() * self.point(t) * (theta_to - theta_from),
        }
    }

    pub fn is_improper(&self) -> bool {
        matches!(self, PathSegment::Radial { rho_from, .. } if *rho_from == 0.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathSegment::Radial { rho_from, rho_to, .. } => (rho_to - rho_from).abs(),
            PathSegment::Arc { radius, theta_from, theta_to } => radius * (theta_to - theta_from).abs(),
        }
    }

    /// Points used by the pre-integration phase check.
    fn probes(&self) -> Vec<C> {
        if self.is_improper() {
            (0..=96).map(|k| self.point(2f64.powf(-(k as f64) / 4.0))).collect()
        } else {
            (0..=64).map(|k| self.point(k as f64 / 64.0)).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    /// Radial from the vertex out to `z`.
    Vertex,
    /// Radial from the vertex along the base ray, an arc, and possibly a
    /// last radial piece in to `z`.
    VertexArc,
    /// Radial from the outer arc in to `z`.
    Outer,
    /// Radial in from the outer arc along the base ray, an arc, and possibly
    /// a last radial piece in to `z`.
    OuterArc,
}

/// Fixed start of every path in a sector: the vertex (approached along
/// `angle`) or the point `r e^{i angle}` on the outer arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasePoint {
    Vertex { angle: f64 },
    Outer { angle: f64, r: f64 },
}

impl BasePoint {
    pub fn point(&self) -> C {
        match *self {
            BasePoint::Vertex { .. } => C::new(0.0, 0.0),
            BasePoint::Outer { angle, r } => C::from_polar(r, angle),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: PathKind,
    pub segments: Vec<PathSegment>,
    pub start: C,
    pub end: C,
}

impl PathSpec {
    fn new(kind: PathKind, segments: Vec<PathSegment>) -> PathSpec {
        let start = segments[0].point(0.0);
        let end = segments.last().unwrap().point(1.0);
        PathSpec { kind, segments, start, end }
    }

    /// Path from `base` to `z = ρe^{iθ}`; an outer base turns onto the arc at
    /// radius `rho_arc ∈ [ρ, r]`.
    pub fn from_base(base: BasePoint, rho_arc: f64, rho: f64, theta: f64) -> PathSpec {
        let same = |a: f64| (a - theta).abs() <= 1e-15 * (1.0 + theta.abs());
        match base {
            BasePoint::Vertex { angle } => {
                if same(angle) {
                    return PathSpec::new(PathKind::Vertex, vec![PathSegment::Radial { angle, rho_from: 0.0, rho_to: rho }]);
                }
                let rho_arc = rho_arc.max(rho);
                let mut segs = vec![
                    PathSegment::Radial { angle, rho_from: 0.0, rho_to: rho_arc },
                    PathSegment::Arc { radius: rho_arc, theta_from: angle, theta_to: theta },
                ];
                if rho < rho_arc {
                    segs.push(PathSegment::Radial { angle: theta, rho_from: rho_arc, rho_to: rho });
                }
                PathSpec::new(PathKind::VertexArc, segs)
            }
            BasePoint::Outer { angle, r } => {
                if same(angle) {
                    return PathSpec::new(PathKind::Outer, vec![PathSegment::Radial { angle, rho_from: r, rho_to: rho }]);
                }
                let rho_arc = rho_arc.clamp(rho, r);
                let mut segs = Vec::with_capacity(3);
                if rho_arc < r {
                    segs.push(PathSegment::Radial { angle, rho_from: r, rho_to: rho_arc });
                }
                segs.push(PathSegment::Arc { radius: rho_arc, theta_from: angle, theta_to: theta });
                if rho < rho_arc {
                    segs.push(PathSegment::Radial { angle: theta, rho_from: rho_arc, rho_to: rho });
                }
                PathSpec::new(PathKind::OuterArc, segs)
            }
        }
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }

    /// Whether every segment stays in the closure of `s`.
    pub fn inside(&self, s: &Sector) -> bool {
        self.segments.iter().all(|seg| {
            (0..=16).all(|k| {
                let p = seg.point(k as f64 / 16.0);
                if p.norm() == 0.0 {
                    return true;
                }
                let slack = 1e-9;
                p.norm() <= s.r * (1.0 + slack) && (s.angle_of(p) - s.tau).abs() <= s.eta + slack
            })
        })
    }
}

/// `p ≈ a z^{-s}` near 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lead {
    pub s: f64,
    pub a: C,
}

impl Lead {
    /// Growth rate `Re(a e^{-isθ})` of `Re p` toward the vertex along `θ`.
    pub fn rate(&self, theta: f64) -> f64 {
        (self.a * C::from_polar(1.0, -self.s * theta)).re
    }

    /// Direction in `[α, β]` maximizing the rate.
    pub fn steepest(&self, s: &Sector) -> f64 {
        let phi0 = self.a.im.atan2(self.a.re) / self.s;
        let period = 2.0 * PI / self.s;
        let mut best = (s.alpha(), self.rate(s.alpha()));
        for cand in [s.beta()] {
            if self.rate(cand) > best.1 {
                best = (cand, self.rate(cand));
            }
        }
        let k0 = ((s.alpha() - phi0) / period).ceil() as i64;
        let mut k = k0;
        while phi0 + k as f64 * period <= s.beta() {
            let th = phi0 + k as f64 * period;
            if self.rate(th) > best.1 {
                best = (th, self.rate(th));
            }
            k += 1;
        }
        best.0
    }
}

/// Checks `Re(p(z) − p(ζ)) ≤ tol` on probe points of every segment.
pub fn phase_ok(path: &PathSpec, p: &dyn Fn(C) -> Result<C>, z: C) -> Result<bool> {
    let pz = p(z)?;
    let tol = phase_tol(pz);
    for seg in &path.segments {
        for zeta in seg.probes() {
            if zeta.norm() == 0.0 {
                continue;
            }
            if (pz - p(zeta)?).re > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Base point for `p` on `s`: the vertex when `Re p → +∞` toward 0 along
/// the steepest ray of the closed sector, else the outer point on that ray.
/// The path follows the steepest ray (out from the vertex or in from the
/// outer arc), crosses on an arc far enough out that `Re p` stays above
/// `Re p(z)`, and finishes radially.
pub fn base_point(lead: Option<Lead>, s: &Sector) -> BasePoint {
    match lead {
        None => BasePoint::Vertex { angle: s.tau },
        Some(l) => {
            let star = l.steepest(s);
            if l.rate(star) > 0.0 {
                BasePoint::Vertex { angle: star }
            } else {
                BasePoint::Outer { angle: star, r: s.r }
            }
        }
    }
}

const ARC_GRID: usize = 256;
/// Relative push outward of the crossing arc, covering what the grid misses.
const ARC_MARGIN: f64 = 1e-3;

fn arc_clear(p: &dyn Fn(C) -> Result<C>, rho: f64, from: f64, to: f64, level: f64) -> Result<bool> {
    // evaluating p through exp/log rounds at ~ε|p| ln(1/|z|) next to the endpoint
    let level = level - 4.0 * phase_tol(C::new(level, 0.0));
    let at = |k: f64| -> Result<f64> { Ok(p(C::from_polar(rho, from + (to - from) * k / ARC_GRID as f64))?.re) };
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=ARC_GRID {
        let v = at(k as f64)?;
        if v < level {
            return Ok(false);
        }
        if v < best.1 {
            best = (k as f64, v);
        }
    }
    // a dip narrower than the grid spacing sits next to the lowest node
    let (mut a, mut b) = ((best.0 - 1.0).max(0.0), (best.0 + 1.0).min(ARC_GRID as f64));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        let (v1, v2) = (at(x1)?, at(x2)?);
        if v1.min(v2) < level {
            return Ok(false);
        }
        if v1 < v2 {
            b = x2;
        } else {
            a = x1;
        }
    }
    Ok(true)
}

/// Smallest arc radius in `[|z|, r]` (from bisection) with `Re p ≥ Re p(z)`
/// on the arc from `angle` to `arg z`.
fn crossing_radius(p: &dyn Fn(C) -> Result<C>, angle: f64, r: f64, rho: f64, theta: f64) -> Result<f64> {
    let level = p(C::from_polar(rho, theta))?.re;
    if arc_clear(p, rho, angle, theta, level)? {
        return Ok(rho);
    }
    let (mut lo, mut hi) = (rho, r);
    if !arc_clear(p, hi, angle, theta, level)? {
        return Ok(r);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if arc_clear(p, mid, angle, theta, level)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi * (1.0 + ARC_MARGIN)).min(r))
}

/// Path from `base` to `z`, verified by [`phase_ok`].
pub fn path_to(base: BasePoint, p: &dyn Fn(C) -> Result<C>, s: &Sector, z: C) -> Result<PathSpec> {
    if z.norm() == 0.0 || !(z.norm() <= s.r * (1.0 + 1e-12)) || (s.angle_of(z) - s.tau).abs() > s.eta + 1e-12 {
        return Err(Error::PathConstruction(format!("{z} is not a point of the sector")));
    }
    let (rho, theta) = (z.norm(), s.angle_of(z));
    let rho_arc = match base {
        BasePoint::Outer { angle, r } => crossing_radius(p, angle, r, rho, theta)?,
        BasePoint::Vertex { angle } => crossing_radius(p, angle, s.r, rho, theta)?,
    };
    let path = PathSpec::from_base(base, rho_arc, rho, theta);
    if !phase_ok(&path, p, z)? {
        return Err(Error::PathConstruction(format!(
            "phase condition fails on the path to {z} in S({}, {}, {}); amplitude or radius too large for p",
            s.tau, s.eta, s.r
        )));
    }
    Ok(path)
}

pub fn choose_path(lead: Option<Lead>, p: &dyn Fn(C) -> Result<C>, s: &Sector, z: C) -> Result<PathSpec> {
    path_to(base_point(lead, s), p, s, z)
}

/// Fraction of the radius of `s` on which the leading term admits every
/// path: the crossing arc sits at `|z| (c_low/c(θ))^{1/s}`, with `c_low`
/// the least rate between the base ray and `θ`.
pub fn admissible_fraction(lead: Option<Lead>, s: &Sector) -> f64 {
    let Some(l) = lead else { return 1.0 };
    let angle = match base_point(lead, s) {
        BasePoint::Outer { angle, .. } | BasePoint::Vertex { angle } => angle,
    };
    let n = 512;
    let mut worst: f64 = 1.0;
    for side in [s.alpha(), s.beta()] {
        let mut low = l.rate(angle);
        for k in 0..=n {
            let th = angle + (side - angle) * k as f64 / n as f64;
            let c = l.rate(th);
            low = low.min(c);
            if c < 0.0 && low < c {
                worst = worst.min((c / low).powf(1.0 / l.s));
            } else if c >= 0.0 && low < 0.0 {
                return 0.0;
            }
        }
    }
    worst
}

/// `∫_Γ f(ζ) dζ` along all segments of `path`. Segments are taken from
/// the endpoint backwards; later ones only need accuracy relative to the
/// running total, since the kernel decays away from the endpoint. `noise`
/// is the relative rounding level of `f`.
pub fn integrate_path(path: &PathSpec, noise: f64, f: &mut dyn FnMut(C) -> Result<C>) -> Result<Quad> {
    let mut total = Quad { value: C::new(0.0, 0.0), error: 0.0, subdivisions: 0, fmax: 0.0 };
    for seg in path.segments.iter().rev() {
        let mut g = |t: f64| -> Result<C> { Ok(f(seg.point(t))? * seg.velocity(t)) };
        let abs_tol = (1e-15 * total.value.norm()).max(1e-300);
        let q = if seg.is_improper() {
            improper_at_zero_noisy(&mut g, REL_TOL, noise)?
        } else {
            adaptive_noisy(&mut g, 0.0, 1.0, REL_TOL, abs_tol, noise)?
        };
        total.value += q.value;
        total.error += q.error;
        total.subdivisions += q.subdivisions;
        total.fmax = total.fmax.max(q.fmax);
    }
    Ok(total)
}
