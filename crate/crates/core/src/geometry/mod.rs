//! Sectors, polar bands, charts from boundary arcs, region trees and the
//! covering of a band germ by chart images of sectors.

mod chart;
mod cover;
mod region;

pub use chart::{chart_from_arc, ArcChartOptions, Chart};
pub use cover::{cover_band, Cover, CoverOptions};
pub use region::{boundary_distance, region_membership, BoundaryModel, Edge, Region};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::puiseux::{branch_arg, PuiseuxPoly};

/// Open sector `S(τ, η, r) = {0 < |z| < r, |arg z − τ| < η}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SectorDoc", into = "SectorDoc")]
pub struct Sector {
    pub tau: f64,
    pub eta: f64,
    pub r: f64,
}

#[derive(Serialize, Deserialize)]
struct SectorDoc {
    tau: f64,
    eta: f64,
    r: f64,
}

impl TryFrom<SectorDoc> for Sector {
    type Error = Error;
    fn try_from(d: SectorDoc) -> Result<Sector> {
        Sector::new(d.tau, d.eta, d.r)
    }
}

impl From<Sector> for SectorDoc {
    fn from(s: Sector) -> SectorDoc {
        SectorDoc { tau: s.tau, eta: s.eta, r: s.r }
    }
}

impl Sector {
    pub fn new(tau: f64, eta: f64, r: f64) -> Result<Sector> {
        if !(eta > 0.0 && eta < PI) || !tau.is_finite() {
            return Err(Error::Domain(format!("sector half-amplitude {eta} outside (0, π)")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("sector radius {r} must be positive")));
        }
        Ok(Sector { tau, eta, r })
    }

    /// `S(α, β, r)` with `α < β`.
    pub fn from_bounds(alpha: f64, beta: f64, r: f64) -> Result<Sector> {
        if !(alpha < beta) {
            return Err(Error::Domain(format!("sector bounds {alpha} >= {beta}")));
        }
        Sector::new(0.5 * (alpha + beta), 0.5 * (beta - alpha), r)
    }

    pub fn alpha(&self) -> f64 {
        self.tau - self.eta
    }

    pub fn beta(&self) -> f64 {
        self.tau + self.eta
    }

    pub fn amplitude(&self) -> f64 {
        2.0 * self.eta
    }

    /// Argument of `z` in the window centered on the bisector.
    pub fn angle_of(&self, z: Complex64) -> f64 {
        branch_arg(z, self.tau)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let m = z.norm();
        m > 0.0 && m < self.r && (self.angle_of(z) - self.tau).abs() < self.eta
    }

    pub fn with_radius(&self, r: f64) -> Sector {
        Sector { r, ..*self }
    }

    /// Point at relative radius `s ∈ [0,1]` and relative angle `a ∈ [−1,1]`.
    pub fn point(&self, s: f64, a: f64) -> Complex64 {
        Complex64::from_polar(s * self.r, self.tau + a * self.eta)
    }

    /// Exact distance from an interior point to the boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let arc = self.r - z.norm();
        let ray = |theta: f64| seg_distance(z, Complex64::new(0.0, 0.0), Complex64::from_polar(self.r, theta));
        arc.min(ray(self.alpha())).min(ray(self.beta()))
    }
}

pub(crate) fn seg_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / l2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// A boundary curve `ρ ↦ θ(ρ)` of a polar band, given by a real Puiseux
/// polynomial with nonnegative exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveDoc", into = "CurveDoc")]
pub struct CurveSpec {
    poly: PuiseuxPoly,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct CurveDoc {
    #[serde(flatten)]
    poly: PuiseuxPoly,
    #[serde(rename = "R")]
    radius: f64,
}

impl TryFrom<CurveDoc> for CurveSpec {
    type Error = Error;
    fn try_from(d: CurveDoc) -> Result<CurveSpec> {
        CurveSpec::new(d.poly, d.radius)
    }
}

impl From<CurveSpec> for CurveDoc {
    fn from(c: CurveSpec) -> CurveDoc {
        CurveDoc { poly: c.poly, radius: c.radius }
    }
}

/// Grid density for band and curve validation.
pub const BAND_GRID: usize = 256;

impl CurveSpec {
    pub fn new(poly: PuiseuxPoly, radius: f64) -> Result<CurveSpec> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBand(format!("curve radius {radius} must be positive")));
        }
        for (e, c) in poly.terms() {
            if *e.numer() < 0 {
                return Err(Error::InvalidBand(format!("negative exponent {e} in boundary curve")));
            }
            if c.im != 0.0 {
                return Err(Error::InvalidBand("boundary curve coefficients must be real".into()));
            }
        }
        let c = CurveSpec { poly, radius };
        for i in 0..=BAND_GRID {
            let v = c.eval(radius * i as f64 / BAND_GRID as f64);
            if !(v > -PI && v < 3.0 * PI) {
                return Err(Error::InvalidBand(format!("curve value {v} outside (−π, 3π)")));
            }
        }
        Ok(c)
    }

    pub fn constant(v: f64, radius: f64) -> Result<CurveSpec> {
        CurveSpec::new(PuiseuxPoly::constant(Complex64::new(v, 0.0)), radius)
    }

    pub fn poly(&self) -> &PuiseuxPoly {
        &self.poly
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value_at_0(&self) -> f64 {
        self.poly.coeff(0.into()).re
    }

    pub fn is_constant(&self) -> bool {
        self.poly.terms().all(|(e, _)| *e.numer() == 0)
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let d = self.poly.d() as f64;
        self.poly
            .numerators()
            .map(|(k, c)| if k == 0 { c.re } else { c.re * rho.powf(k as f64 / d) })
            .sum()
    }
}

/// `B(η, ξ) = {(ρ, θ) : 0 < ρ < R, η(ρ) < θ < ξ(ρ)}` and its image under
/// `(ρ, θ) ↦ ρe^{iθ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BandDoc", into = "BandDoc")]
pub struct Band {
    lower: CurveSpec,
    upper: CurveSpec,
}

#[derive(Serialize, Deserialize)]
struct BandDoc {
    lower: CurveSpec,
    upper: CurveSpec,
}

impl TryFrom<BandDoc> for Band {
    type Error = Error;
    fn try_from(d: BandDoc) -> Result<Band> {
        Band::new(d.lower, d.upper)
    }
}

impl From<Band> for BandDoc {
    fn from(b: Band) -> BandDoc {
        BandDoc { lower: b.lower, upper: b.upper }
    }
}

impl Band {
    pub fn new(lower: CurveSpec, upper: CurveSpec) -> Result<Band> {
        let r = lower.radius.min(upper.radius);
        for i in 0..=BAND_GRID {
            let rho = r * i as f64 / BAND_GRID as f64;
            let (lo, hi) = (lower.eval(rho), upper.eval(rho));
            let interior = i > 0 && i < BAND_GRID;
            if (interior && lo >= hi) || lo > hi {
                return Err(Error::InvalidBand(format!(
                    "lower curve {lo} not below upper curve {hi} at ρ = {rho}"
                )));
            }
        }
        Ok(Band { lower, upper })
    }

    pub fn lower(&self) -> &CurveSpec {
        &self.lower
    }

    pub fn upper(&self) -> &CurveSpec {
        &self.upper
    }

    pub fn radius(&self) -> f64 {
        self.lower.radius.min(self.upper.radius)
    }

    pub fn contains_polar(&self, rho: f64, theta: f64) -> bool {
        rho > 0.0 && rho < self.radius() && self.lower.eval(rho) < theta && theta < self.upper.eval(rho)
    }

    /// Membership of a plane point in the projected band.
    pub fn contains(&self, z: Complex64) -> bool {
        let rho = z.norm();
        if !(rho > 0.0 && rho < self.radius()) {
            return false;
        }
        let (lo, hi) = (self.lower.eval(rho), self.upper.eval(rho));
        let t0 = z.im.atan2(z.re);
        [t0, t0 + 2.0 * PI].iter().any(|t| lo < *t && *t < hi)
    }

    pub fn to_plane(&self, rho: f64, theta: f64) -> Result<Complex64> {
        band_to_plane(self, rho, theta)
    }
}

pub fn band_to_plane(b: &Band, rho: f64, theta: f64) -> Result<Complex64> {
    if !b.contains_polar(rho, theta) {
        return Err(Error::Domain(format!("({rho}, {theta}) is not in the band")));
    }
    Ok(Complex64::from_polar(rho, theta))
}
