use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{chart_from_arc, ArcChartOptions, Band, CurveSpec, Region, Sector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CoverOptions {
    pub max_amplitude: f64,
    pub max_radius: f64,
    /// Samples per soundness check.
    pub samples: usize,
    /// Required fraction of band points covered by some piece.
    pub coverage: f64,
    pub max_halvings: usize,
    pub seed: u64,
}

impl CoverOptions {
    pub fn new(max_amplitude: f64, max_radius: f64) -> CoverOptions {
        CoverOptions { max_amplitude, max_radius, samples: 2000, coverage: 0.999, max_halvings: 20, seed: 0 }
    }
}

/// Pieces whose union is the projected band inside `|z| < w_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub w_radius: f64,
    pub pieces: Vec<Region>,
    /// Measured fraction of band points covered during the soundness check.
    pub coverage: f64,
}

impl Cover {
    /// The projected band germ the cover is meant to fill.
    pub fn target(band: &Band, w_radius: f64) -> Region {
        Region::Intersection(vec![
            Region::Band(Arc::new(band.clone())),
            Region::Disc { center: Complex64::new(0.0, 0.0), radius: w_radius },
        ])
    }
}

fn margin(v: f64) -> f64 {
    (PI / 4.0).min(0.5 * (v + PI)).min(0.5 * (3.0 * PI - v))
}

struct Strip {
    chart: Arc<super::Chart>,
    d: f64,
}

fn strip(curve: &CurveSpec, omega: f64, w: f64, max_radius: f64) -> Result<Strip> {
    let d = curve.poly().d() as f64;
    let mut opts = ArcChartOptions::for_curve(curve);
    opts.half_width = omega / d;
    opts.radius = (1.6 * w).powf(1.0 / d).min(max_radius).min(curve.radius().powf(1.0 / d));
    Ok(Strip { chart: Arc::new(chart_from_arc(curve, &opts)?), d })
}

fn pieces_for(b: &Band, o: &CoverOptions, w: f64) -> Result<Vec<Region>> {
    let (lo, hi) = (b.lower(), b.upper());
    let (eta0, xi0) = (lo.value_at_0(), hi.value_at_0());
    let gap = xi0 - eta0;
    let disc = Region::Disc { center: Complex64::new(0.0, 0.0), radius: w };
    let max_amp = o.max_amplitude;
    if lo.is_constant() && hi.is_constant() && gap <= max_amp {
        return Ok(vec![Region::Sector(Sector::from_bounds(eta0, xi0, w)?)]);
    }
    let mut omega = (0.9 * max_amp).min(margin(eta0)).min(margin(xi0));
    let cusp = gap <= 1e-12;
    if !cusp {
        omega = omega.min(0.5 * gap);
    }
    let sl = strip(lo, omega, w, o.max_radius)?;
    let su = strip(hi, omega, w, o.max_radius)?;
    let lower_sector = Sector::from_bounds(0.0, omega / sl.d, sl.chart.validity().r)?;
    let upper_sector = Sector::from_bounds(-omega / su.d, 0.0, su.chart.validity().r)?;
    let lower_img = Region::SectorImage { chart: sl.chart.clone(), sector: lower_sector };
    let upper_img = Region::SectorImage { chart: su.chart.clone(), sector: upper_sector };
    if cusp {
        return Ok(vec![Region::Intersection(vec![lower_img, upper_img, disc])]);
    }
    let mut out = vec![
        Region::Intersection(vec![lower_img, disc.clone()]),
        Region::Intersection(vec![upper_img, disc]),
    ];
    let (alpha, beta) = (eta0 + 0.5 * omega, xi0 - 0.5 * omega);
    let width = beta - alpha;
    let n = if width <= max_amp { 1 } else { (width / (0.8 * max_amp)).ceil() as usize };
    let step = width / n as f64;
    let overlap = if n > 1 { 0.1 * step } else { 0.0 };
    for i in 0..n {
        let a = (alpha + step * i as f64 - overlap).max(alpha);
        let c = (alpha + step * (i + 1) as f64 + overlap).min(beta);
        out.push(Region::Sector(Sector::from_bounds(a, c, w)?));
    }
    Ok(out)
}

fn soundness(b: &Band, pieces: &[Region], w: f64, o: &CoverOptions) -> Option<f64> {
    let target = Cover::target(b, w);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed ^ 0xc0e7);
    for p in pieces {
        let pts = p.sample_members(o.samples, &mut rng);
        if pts.len() < o.samples / 2 {
            return None;
        }
        if pts.iter().any(|z| !target.contains(*z)) {
            return None;
        }
    }
    let pts = target.sample_members(o.samples, &mut rng);
    if pts.is_empty() {
        return None;
    }
    let hit = pts.iter().filter(|z| pieces.iter().any(|p| p.contains(**z))).count();
    let frac = hit as f64 / pts.len() as f64;
    (frac >= o.coverage).then_some(frac)
}

/// Covers the band germ by chart images of sectors. The radius starts at
/// `max_radius` and is halved until the pieces are sound.
pub fn cover_band(b: &Band, o: &CoverOptions) -> Result<Cover> {
    if !(o.max_amplitude > 0.0 && o.max_amplitude < 2.0 * PI) {
        return Err(Error::Domain(format!("max amplitude {} out of range", o.max_amplitude)));
    }
    let mut w = o.max_radius.min(b.radius());
    let mut last_err = None;
    for _ in 0..=o.max_halvings {
        match pieces_for(b, o, w) {
            Ok(mut pieces) => {
                if let Some(coverage) = soundness(b, &pieces, w, o) {
                    pieces.sort_by(|x, y| {
                        x.nominal_angle()
                            .total_cmp(&y.nominal_angle())
                            .then(x.nominal_radius().total_cmp(&y.nominal_radius()))
                    });
                    return Ok(Cover { w_radius: w, pieces, coverage });
                }
            }
            Err(e @ Error::Domain(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
        w *= 0.5;
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Precision(format!("no sound cover found after {} halvings", o.max_halvings))
    }))
}
