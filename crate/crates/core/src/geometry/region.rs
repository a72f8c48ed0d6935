use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{seg_distance, Band, Chart, CurveSpec, Sector};
use crate::error::{Error, Result};

/// Region tree over sectors, chart images of sectors, discs and bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionDoc", into = "RegionDoc")]
pub enum Region {
    Sector(Sector),
    SectorImage { chart: Arc<Chart>, sector: Sector },
    Disc { center: Complex64, radius: f64 },
    Band(Arc<Band>),
    Union(Vec<Region>),
    Intersection(Vec<Region>),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeOp {
    Union,
    Intersect,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RegionDoc {
    Node { op: NodeOp, children: Vec<RegionDoc> },
    Leaf(LeafDoc),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LeafDoc {
    Sector { tau: f64, eta: f64, r: f64 },
    SectorImage { chart: Chart, sector: Sector },
    Disc { center: [f64; 2], radius: f64 },
    Band { band: Band },
}

impl TryFrom<RegionDoc> for Region {
    type Error = Error;
    fn try_from(d: RegionDoc) -> Result<Region> {
        Ok(match d {
            RegionDoc::Node { op, children } => {
                let ch = children.into_iter().map(Region::try_from).collect::<Result<Vec<_>>>()?;
                if ch.is_empty() {
                    return Err(Error::Domain("region node without children".into()));
                }
                match op {
                    NodeOp::Union => Region::Union(ch),
                    NodeOp::Intersect => Region::Intersection(ch),
                }
            }
            RegionDoc::Leaf(LeafDoc::Sector { tau, eta, r }) => Region::Sector(Sector::new(tau, eta, r)?),
            RegionDoc::Leaf(LeafDoc::SectorImage { chart, sector }) => {
                Region::SectorImage { chart: Arc::new(chart), sector }
            }
            RegionDoc::Leaf(LeafDoc::Disc { center, radius }) => {
                if !(radius > 0.0) {
                    return Err(Error::Domain("disc radius must be positive".into()));
                }
                Region::Disc { center: Complex64::new(center[0], center[1]), radius }
            }
            RegionDoc::Leaf(LeafDoc::Band { band }) => Region::Band(Arc::new(band)),
        })
    }
}

impl From<Region> for RegionDoc {
    fn from(r: Region) -> RegionDoc {
        match r {
            Region::Sector(s) => RegionDoc::Leaf(LeafDoc::Sector { tau: s.tau, eta: s.eta, r: s.r }),
            Region::SectorImage { chart, sector } => {
                RegionDoc::Leaf(LeafDoc::SectorImage { chart: (*chart).clone(), sector })
            }
            Region::Disc { center, radius } => {
                RegionDoc::Leaf(LeafDoc::Disc { center: [center.re, center.im], radius })
            }
            Region::Band(b) => RegionDoc::Leaf(LeafDoc::Band { band: (*b).clone() }),
            Region::Union(ch) => RegionDoc::Node {
                op: NodeOp::Union,
                children: ch.into_iter().map(RegionDoc::from).collect(),
            },
            Region::Intersection(ch) => RegionDoc::Node {
                op: NodeOp::Intersect,
                children: ch.into_iter().map(RegionDoc::from).collect(),
            },
        }
    }
}

/// A parametrized boundary curve `s ∈ [0, 1] ↦ point(s)`.
#[derive(Debug, Clone)]
pub enum Edge {
    Segment(Complex64, Complex64),
    Arc { center: Complex64, radius: f64, from: f64, to: f64 },
    ChartRay { chart: Arc<Chart>, angle: f64, r: f64 },
    ChartArc { chart: Arc<Chart>, r: f64, from: f64, to: f64 },
    Curve { curve: CurveSpec, r: f64 },
}

impl Edge {
    pub fn point(&self, s: f64) -> Complex64 {
        match self {
            Edge::Segment(a, b) => a + (b - a) * s,
            Edge::Arc { center, radius, from, to } => center + Complex64::from_polar(*radius, from + (to - from) * s),
            Edge::ChartRay { chart, angle, r } => chart.eval(Complex64::from_polar(s * r, *angle)),
            Edge::ChartArc { chart, r, from, to } => chart.eval(Complex64::from_polar(*r, from + (to - from) * s)),
            Edge::Curve { curve, r } => {
                let rho = s * r;
                Complex64::from_polar(rho, curve.eval(rho))
            }
        }
    }

    pub(crate) fn tangent(&self, s: f64) -> Complex64 {
        let h = 1e-7;
        let (a, b) = ((s - h).max(0.0), (s + h).min(1.0));
        (self.point(b) - self.point(a)) / (b - a)
    }

    /// Exact distance to the sub-edge `[s0, s1]` where a closed form exists.
    fn exact_distance(&self, z: Complex64, s0: f64, s1: f64) -> Option<f64> {
        match self {
            Edge::Segment(..) => Some(seg_distance(z, self.point(s0), self.point(s1))),
            Edge::Arc { center, radius, from, to } => {
                let (a0, a1) = (from + (to - from) * s0, from + (to - from) * s1);
                let (lo, hi) = if a0 <= a1 { (a0, a1) } else { (a1, a0) };
                let v = z - center;
                let mut th = v.im.atan2(v.re);
                th = lo + (th - lo).rem_euclid(2.0 * PI);
                let ends = (z - self.point(s0)).norm().min((z - self.point(s1)).norm());
                if th <= hi {
                    Some((v.norm() - radius).abs().min(ends))
                } else {
                    Some(ends)
                }
            }
            _ => None,
        }
    }
}

/// Boundary of a region as edge pieces that lie on the composite boundary.
#[derive(Debug, Clone)]
pub struct BoundaryModel {
    runs: Vec<(Edge, f64, f64)>,
    n: usize,
}

impl BoundaryModel {
    /// Distance from `z` to the modelled boundary.
    pub fn distance(&self, z: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        for (edge, s0, s1) in &self.runs {
            if let Some(d) = edge.exact_distance(z, *s0, *s1) {
                best = best.min(d);
                continue;
            }
            let m = (((s1 - s0) * self.n as f64).ceil() as usize).max(1);
            let step = (s1 - s0) / m as f64;
            let (mut bi, mut bd) = (0, f64::INFINITY);
            for i in 0..=m {
                let d = (edge.point(s0 + step * i as f64) - z).norm();
                if d < bd {
                    bd = d;
                    bi = i;
                }
            }
            if m > 1 || step > 0.0 {
                let lo = s0 + step * (bi as f64 - 1.0).max(0.0);
                let hi = (s0 + step * (bi as f64 + 1.0)).min(*s1);
                bd = bd.min(golden_min(|s| (edge.point(s) - z).norm(), lo, hi));
            }
            best = best.min(bd);
        }
        best
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Edge, f64, f64)> {
        self.runs.iter().map(|(e, a, b)| (e, *a, *b))
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Region::Sector(s) => s.contains(z),
            Region::SectorImage { chart, sector } => chart.image_contains(sector, z),
            Region::Disc { center, radius } => (z - center).norm() < *radius,
            Region::Band(b) => b.contains(z),
            Region::Union(ch) => ch.iter().any(|r| r.contains(z)),
            Region::Intersection(ch) => ch.iter().all(|r| r.contains(z)),
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self, Region::Union(_) | Region::Intersection(_))
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&Region> {
        match self {
            Region::Union(ch) | Region::Intersection(ch) => ch.iter().flat_map(|c| c.leaves()).collect(),
            leaf => vec![leaf],
        }
    }

    fn leaf_edges(&self) -> Vec<Edge> {
        match self {
            Region::Sector(s) => {
                let o = Complex64::new(0.0, 0.0);
                vec![
                    Edge::Segment(o, Complex64::from_polar(s.r, s.alpha())),
                    Edge::Segment(o, Complex64::from_polar(s.r, s.beta())),
                    Edge::Arc { center: o, radius: s.r, from: s.alpha(), to: s.beta() },
                ]
            }
            Region::SectorImage { chart, sector } => vec![
                Edge::ChartRay { chart: chart.clone(), angle: sector.alpha(), r: sector.r },
                Edge::ChartRay { chart: chart.clone(), angle: sector.beta(), r: sector.r },
                Edge::ChartArc { chart: chart.clone(), r: sector.r, from: sector.alpha(), to: sector.beta() },
            ],
            Region::Disc { center, radius } => {
                vec![Edge::Arc { center: *center, radius: *radius, from: 0.0, to: 2.0 * PI }]
            }
            Region::Band(b) => {
                let r = b.radius();
                vec![
                    Edge::Curve { curve: b.lower().clone(), r },
                    Edge::Curve { curve: b.upper().clone(), r },
                    Edge::Arc { center: Complex64::new(0.0, 0.0), radius: r, from: b.lower().eval(r), to: b.upper().eval(r) },
                ]
            }
            _ => vec![],
        }
    }

    /// Discretizes the boundary with `n` samples per leaf edge and keeps the
    /// stretches that separate members from non-members.
    pub fn boundary_model(&self, n: usize) -> BoundaryModel {
        let n = n.max(8);
        let mut runs = Vec::new();
        let leaves = self.leaves();
        if self.is_leaf() {
            for e in self.leaf_edges() {
                runs.push((e, 0.0, 1.0));
            }
            return BoundaryModel { runs, n };
        }
        for leaf in leaves {
            for e in leaf.leaf_edges() {
                let flags: Vec<bool> = (0..=n)
                    .map(|i| {
                        let s = i as f64 / n as f64;
                        let b = e.point(s);
                        let t = e.tangent(s);
                        if t.norm() == 0.0 || b.norm() == 0.0 {
                            return false;
                        }
                        let nrm = Complex64::i() * t / t.norm();
                        let eps = 1e-6 * b.norm().max(1e-300);
                        self.contains(b + nrm * eps) != self.contains(b - nrm * eps)
                    })
                    .collect();
                let mut i = 0;
                while i <= n {
                    if flags[i] {
                        let start = i;
                        while i < n && flags[i + 1] {
                            i += 1;
                        }
                        // runs are widened by one sample where they touch the vertex
                        let s0 = if start == 1 { 0.0 } else { start as f64 / n as f64 };
                        runs.push((e.clone(), s0, i as f64 / n as f64));
                    }
                    i += 1;
                }
            }
        }
        BoundaryModel { runs, n }
    }

    /// Axis-aligned box containing the region.
    pub fn bounding_box(&self) -> (Complex64, Complex64) {
        match self {
            Region::Intersection(ch) => {
                let mut lo = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                let mut hi = Complex64::new(f64::INFINITY, f64::INFINITY);
                for c in ch {
                    let (a, b) = c.bounding_box();
                    lo = Complex64::new(lo.re.max(a.re), lo.im.max(a.im));
                    hi = Complex64::new(hi.re.min(b.re), hi.im.min(b.im));
                }
                (lo, hi)
            }
            Region::Union(ch) => {
                let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for c in ch {
                    let (a, b) = c.bounding_box();
                    lo = Complex64::new(lo.re.min(a.re), lo.im.min(a.im));
                    hi = Complex64::new(hi.re.max(b.re), hi.im.max(b.im));
                }
                (lo, hi)
            }
            Region::Disc { center, radius } => (
                center - Complex64::new(*radius, *radius),
                center + Complex64::new(*radius, *radius),
            ),
            leaf => {
                let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for e in leaf.leaf_edges() {
                    for i in 0..=512 {
                        let p = e.point(i as f64 / 512.0);
                        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
                        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
                    }
                }
                // sampled extremes of curved edges can miss by a hair
                let pad = 1e-3 * (hi - lo).norm();
                (lo - Complex64::new(pad, pad), hi + Complex64::new(pad, pad))
            }
        }
    }

    /// Up to `n` member points by rejection sampling from the bounding box.
    pub fn sample_members<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Complex64> {
        let (lo, hi) = self.bounding_box();
        if !(lo.re < hi.re && lo.im < hi.im) {
            return vec![];
        }
        let mut out = Vec::with_capacity(n);
        let cap = 200 * n + 1000;
        for _ in 0..cap {
            if out.len() == n {
                break;
            }
            let z = Complex64::new(rng.gen_range(lo.re..hi.re), rng.gen_range(lo.im..hi.im));
            if self.contains(z) {
                out.push(z);
            }
        }
        out
    }

    /// Representative direction, used for deterministic ordering.
    pub fn nominal_angle(&self) -> f64 {
        match self {
            Region::Sector(s) => s.tau,
            Region::SectorImage { chart, sector } => {
                let a = chart.coeffs()[chart.order()];
                chart.order() as f64 * sector.tau + a.im.atan2(a.re)
            }
            Region::Disc { .. } => f64::INFINITY,
            Region::Band(b) => 0.5 * (b.lower().value_at_0() + b.upper().value_at_0()),
            Region::Union(ch) | Region::Intersection(ch) => ch
                .iter()
                .map(|c| c.nominal_angle())
                .find(|a| a.is_finite())
                .unwrap_or(0.0),
        }
    }

    pub fn nominal_radius(&self) -> f64 {
        match self {
            Region::Sector(s) => s.r,
            Region::SectorImage { chart, sector } => chart.eval(Complex64::new(sector.r, 0.0)).norm(),
            Region::Disc { radius, .. } => *radius,
            Region::Band(b) => b.radius(),
            Region::Union(ch) => ch.iter().map(|c| c.nominal_radius()).fold(0.0, f64::max),
            Region::Intersection(ch) => ch.iter().map(|c| c.nominal_radius()).fold(f64::INFINITY, f64::min),
        }
    }
}

pub fn region_membership(reg: &Region, z: Complex64) -> bool {
    reg.contains(z)
}

/// Distance from a member point to the discretized boundary.
pub fn boundary_distance(reg: &Region, z: Complex64, n_boundary: usize) -> Result<f64> {
    if !reg.contains(z) {
        return Err(Error::Domain(format!("{z} is not in the region")));
    }
    Ok(reg.boundary_model(n_boundary).distance(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn membership_examples() {
        let s = Region::Sector(Sector::new(0.0, PI / 4.0, 1.0).unwrap());
        assert!(region_membership(&s, c(0.5, 0.0)));
        assert!(!region_membership(&s, c(-0.5, 0.0)));
        let sq = Chart::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], Sector::new(0.0, PI / 8.0, 0.5).unwrap()).unwrap();
        let img = Region::SectorImage { chart: Arc::new(sq), sector: Sector::new(0.0, PI / 8.0, 0.5).unwrap() };
        assert!(img.contains(Complex64::from_polar(0.09, PI / 8.0)));
    }

    #[test]
    fn distance_examples() {
        let d = Region::Disc { center: c(0.0, 0.0), radius: 1.0 };
        assert_abs_diff_eq!(boundary_distance(&d, c(0.0, 0.0), 64).unwrap(), 1.0, epsilon = 1.0 / 64.0);
        let s = Region::Sector(Sector::new(0.0, PI / 4.0, 1.0).unwrap());
        assert_abs_diff_eq!(boundary_distance(&s, c(0.5, 0.0), 256).unwrap(), 0.5 * (PI / 4.0).sin(), epsilon = 1e-9);
        assert!(boundary_distance(&s, c(-0.5, 0.0), 256).is_err());
    }

    #[test]
    fn composite_boundary_ignores_interior_edges() {
        // two abutting sectors: the shared ray is not boundary
        let u = Region::Union(vec![
            Region::Sector(Sector::from_bounds(-0.5, 0.0, 1.0).unwrap()),
            Region::Sector(Sector::from_bounds(-0.01, 0.5, 1.0).unwrap()),
        ]);
        let z = c(0.5, 0.0);
        let dist = boundary_distance(&u, z, 256).unwrap();
        assert_abs_diff_eq!(dist, 0.5 * 0.5f64.sin(), epsilon = 1e-3);
        let i = Region::Intersection(vec![
            Region::Sector(Sector::new(0.0, 0.5, 1.0).unwrap()),
            Region::Disc { center: c(0.0, 0.0), radius: 0.4 },
        ]);
        assert_abs_diff_eq!(boundary_distance(&i, c(0.3, 0.0), 256).unwrap(), 0.1, epsilon = 1e-9);
    }

    #[test]
    fn chart_image_distance_converges() {
        let sq = Arc::new(Chart::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.2, 0.1)], Sector::new(0.0, 0.3, 0.5).unwrap()).unwrap());
        let r = Region::SectorImage { chart: sq.clone(), sector: Sector::new(0.0, 0.3, 0.5).unwrap() };
        let z = sq.eval(c(0.3, 0.05));
        let d1 = boundary_distance(&r, z, 64).unwrap();
        let d2 = boundary_distance(&r, z, 128).unwrap();
        assert!((d1 - d2).abs() <= 2.0 / 64.0);
        assert!(d1 > 0.0);
    }

    #[test]
    fn json_tree_roundtrip() {
        let json = r#"{"op":"intersect","children":[{"kind":"sector","tau":0.0,"eta":0.5,"r":1.0},{"kind":"disc","center":[0.0,0.0],"radius":0.5}]}"#;
        let r: Region = serde_json::from_str(json).unwrap();
        assert!(r.contains(c(0.3, 0.0)));
        assert!(!r.contains(c(0.7, 0.0)));
        let back: Region = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn sampling_stays_inside() {
        let r = Region::Sector(Sector::new(1.0, 0.2, 0.3).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts = r.sample_members(200, &mut rng);
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|z| r.contains(*z)));
    }
}
