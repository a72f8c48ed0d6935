use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CurveSpec, Sector};
use crate::error::{Error, Result};
use crate::puiseux::branch_arg;

/// A polynomial chart `φ(w) = Σ_{k≥c} c_k w^k` together with the sector on
/// whose closure it is used (and checked) as an injective map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChartDoc", into = "ChartDoc")]
pub struct Chart {
    coeffs: Vec<Complex64>,
    deriv: Vec<Complex64>,
    order: usize,
    validity: Sector,
}

#[derive(Serialize, Deserialize)]
struct ChartDoc {
    coeffs: Vec<[f64; 2]>,
    validity: Sector,
}

impl TryFrom<ChartDoc> for Chart {
    type Error = Error;
    fn try_from(d: ChartDoc) -> Result<Chart> {
        Chart::new(d.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(), d.validity)
    }
}

impl From<Chart> for ChartDoc {
    fn from(c: Chart) -> ChartDoc {
        ChartDoc { coeffs: c.coeffs.iter().map(|z| [z.re, z.im]).collect(), validity: c.validity }
    }
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_ITERS: usize = 50;

impl Chart {
    pub fn new(mut coeffs: Vec<Complex64>, validity: Sector) -> Result<Chart> {
        while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.first().is_some_and(|c| c.norm() != 0.0) {
            return Err(Error::IllPosedChart("φ(0) ≠ 0".into()));
        }
        let order = coeffs
            .iter()
            .position(|c| c.norm() != 0.0)
            .ok_or_else(|| Error::IllPosedChart("zero chart".into()))?;
        let deriv = coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
        Ok(Chart { coeffs, deriv, order, validity })
    }

    pub fn identity(validity: Sector) -> Chart {
        Chart::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], validity).unwrap()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Vanishing order `c` at the origin.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn validity(&self) -> &Sector {
        &self.validity
    }

    pub fn with_validity(&self, validity: Sector) -> Chart {
        Chart { validity, ..self.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.coeffs.len() == 2 && self.coeffs[1] == Complex64::new(1.0, 0.0)
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        horner(&self.coeffs, w)
    }

    pub fn derivative(&self, w: Complex64) -> Complex64 {
        horner(&self.deriv, w)
    }

    /// Branch center on the image side matching the validity bisector.
    pub fn z_branch_center(&self) -> f64 {
        let a = self.coeffs[self.order];
        self.order as f64 * self.validity.tau + a.im.atan2(a.re)
    }

    /// Leading-term seeds for `φ(w) = z`, nearest to the validity bisector first.
    fn seeds(&self, z: Complex64) -> Vec<Complex64> {
        let c = self.order as f64;
        let q = z / self.coeffs[self.order];
        let m = q.norm().powf(1.0 / c);
        let base = q.im.atan2(q.re) / c;
        let mut out: Vec<(f64, Complex64)> = (0..self.order)
            .map(|j| {
                let th = base + 2.0 * PI * j as f64 / c;
                let dist = (branch_arg(Complex64::from_polar(1.0, th), self.validity.tau) - self.validity.tau).abs();
                (dist, Complex64::from_polar(m, th))
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.into_iter().map(|x| x.1).collect()
    }

    fn newton(&self, z: Complex64, mut w: Complex64) -> Option<Complex64> {
        let tol = NEWTON_TOL * z.norm().max(f64::MIN_POSITIVE);
        let mut res = (self.eval(w) - z).norm();
        for _ in 0..NEWTON_ITERS {
            if res <= tol {
                return Some(w);
            }
            let dphi = self.derivative(w);
            if dphi.norm() == 0.0 {
                return None;
            }
            let step = (self.eval(w) - z) / dphi;
            let mut lam = 1.0;
            loop {
                let cand = w - step * lam;
                let r = (self.eval(cand) - z).norm();
                if r < res || lam < 1e-4 {
                    w = cand;
                    res = r;
                    break;
                }
                lam *= 0.5;
            }
        }
        (res <= tol).then_some(w)
    }

    /// Preimage of `z`, seeded on the validity sector. `None` when Newton does
    /// not converge to tolerance 1e-10 (relative).
    pub fn invert(&self, z: Complex64) -> Option<Complex64> {
        if z.norm() == 0.0 {
            return Some(z);
        }
        if self.is_identity() {
            return Some(z);
        }
        let seed = self.seeds(z)[0];
        if let Some(w) = self.newton(z, seed) {
            return Some(w);
        }
        // continuation from a scaled-down target
        let steps = 16;
        let mut w = self.seeds(z * 2f64.powi(-steps))[0];
        for k in (0..=steps).rev() {
            w = self.newton(z * 2f64.powi(-k), w)?;
        }
        Some(w)
    }

    /// True when `z = φ(w)` for some `w` in `sector`.
    pub fn image_contains(&self, sector: &Sector, z: Complex64) -> bool {
        match self.invert(z) {
            Some(w) => sector.contains(w),
            None => {
                log::debug!("chart inversion did not converge at {z}; treated as non-member");
                false
            }
        }
    }

    /// Checks injectivity on the closed validity sector by sampling `n` points
    /// and solving for any other preimage of their images inside the sector;
    /// also requires `φ' ≠ 0` and pairwise separation of sampled images.
    pub fn verify_injective(&self, n: usize, seed: u64) -> bool {
        let s = self.validity;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let closed = |w: Complex64| {
            let m = w.norm();
            m <= s.r * (1.0 + 1e-9) && (branch_arg(w, s.tau) - s.tau).abs() <= s.eta * (1.0 + 1e-9)
        };
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let a: f64 = if i % 10 == 0 { if i % 20 == 0 { 1.0 } else { -1.0 } } else { rng.gen_range(-1.0..=1.0) };
            let rr: f64 = if i % 7 == 0 { 1.0 } else { rng.gen_range(0.0f64..1.0).sqrt().max(1e-3) };
            pts.push(s.point(rr, a));
        }
        for (i, w) in pts.iter().enumerate() {
            if self.derivative(*w).norm() == 0.0 {
                return false;
            }
            let z = self.eval(*w);
            // other roots of φ(ω) = z near the sector
            for seed in self.seeds(z) {
                for rot in [1.0, -1.0] {
                    let start = seed * Complex64::from_polar(1.0, rot * 0.3);
                    if let Some(o) = self.newton(z, start) {
                        if (o - w).norm() > 1e-6 * s.r && closed(o) {
                            return false;
                        }
                    }
                }
            }
            let j = (i * 7919 + 13) % n;
            let gap = (w - pts[j]).norm();
            if gap > 0.0 && (z - self.eval(pts[j])).norm() < 1e-12 * gap {
                return false;
            }
        }
        true
    }
}

fn horner(c: &[Complex64], w: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * w + a)
}

/// Options for building a chart from a boundary arc.
#[derive(Debug, Clone, Copy)]
pub struct ArcChartOptions {
    /// Half-amplitude of the validity sector in the `t`-plane.
    pub half_width: f64,
    /// Radius of the validity sector in the `t`-plane.
    pub radius: f64,
    pub max_order: usize,
    pub tolerance: f64,
}

impl ArcChartOptions {
    pub fn for_curve(curve: &CurveSpec) -> ArcChartOptions {
        let d = curve.poly().d() as f64;
        ArcChartOptions {
            half_width: (PI / 8.0) / d,
            radius: curve.radius().powf(1.0 / d),
            max_order: 96,
            tolerance: 1e-10,
        }
    }
}

/// `φ(t) = t^d · exp(i·curve(t^d))` as a truncated power series; the real
/// segment `(0, radius)` of the validity sector maps onto the arc
/// `ρ ↦ ρe^{i·curve(ρ)}`. The radius is halved until the truncation error on
/// the closed validity sector is below the tolerance.
pub fn chart_from_arc(curve: &CurveSpec, opts: &ArcChartOptions) -> Result<Chart> {
    let d = curve.poly().d() as usize;
    // P(t) = curve(t^d) = Σ p_k t^k
    let mut p = Vec::new();
    for (k, c) in curve.poly().numerators() {
        let k = k as usize;
        if p.len() <= k {
            p.resize(k + 1, 0.0);
        }
        p[k] = c.re;
    }
    let p0 = p.first().copied().unwrap_or(0.0);
    let exact = |t: Complex64| -> Complex64 {
        let pt = p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * t + a);
        t.powu(d as u32) * (Complex64::i() * pt).exp()
    };
    // E(t) = exp(i Σ_{k≥1} p_k t^k), E_n = (1/n) Σ k h_k E_{n−k}
    let n_max = opts.max_order;
    let mut e = vec![Complex64::new(0.0, 0.0); n_max + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for n in 1..=n_max {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=n.min(p.len().saturating_sub(1)) {
            s += Complex64::new(0.0, p[k]) * k as f64 * e[n - k];
        }
        e[n] = s / n as f64;
    }
    let rot = Complex64::from_polar(1.0, p0);
    let mut radius = opts.radius;
    for _ in 0..30 {
        let sector = Sector::new(0.0, opts.half_width, radius)?;
        let mut order = 8.min(n_max);
        loop {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); d];
            coeffs.extend(e[..=order].iter().map(|x| x * rot));
            let chart = Chart::new(coeffs, sector)?;
            let mut err: f64 = 0.0;
            for i in 0..=256 {
                let s = i as f64 / 256.0;
                for w in [sector.point(1.0, 2.0 * s - 1.0), sector.point(s, 1.0), sector.point(s, -1.0), sector.point(s, 0.0)] {
                    err = err.max((chart.eval(w) - exact(w)).norm());
                }
            }
            if err <= opts.tolerance {
                if chart.verify_injective(1000, 0x5ec7) {
                    return Ok(chart);
                }
                break;
            }
            if order == n_max {
                break;
            }
            order = (order * 2).min(n_max);
        }
        radius *= 0.5;
    }
    Err(Error::Precision("arc chart expansion did not reach tolerance".into()))
}
