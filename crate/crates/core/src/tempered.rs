//! Sampled certificates of polynomial growth toward the boundary:
//! `‖f‖_{M,U} = sup δ(z)^M |f(z)|` with `δ` the distance to `∂U`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryModel, Chart, Region, Sector};
use crate::holo::HoloFn;

type C = Complex64;

/// Exponents above this count as divergence.
pub const M_MAX: f64 = 20.0;
pub const FIT_RESIDUAL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    /// Strata `δ ∈ [2^{-k-1}, 2^{-k})` for `k = 0..=strata`.
    pub strata: usize,
    pub per_stratum: usize,
    pub seed: u64,
    pub boundary_samples: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions { strata: 20, per_stratum: 512, seed: 0, boundary_samples: 256 }
    }
}

impl SamplingOptions {
    pub fn with_per_stratum(self, per_stratum: usize) -> Self {
        SamplingOptions { per_stratum, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SamplingOptions { seed, ..self }
    }
}

/// Member points with their boundary distance and stratum index.
#[derive(Debug, Clone)]
pub struct StratifiedSample {
    pub points: Vec<(C, f64, usize)>,
    pub strata: usize,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton point `i` with a Cranley–Patterson shift, one coordinate per entry of `shift`.
fn halton(i: u64, shift: &[f64]) -> Vec<f64> {
    const BASES: [u64; 5] = [2, 3, 5, 7, 11];
    shift.iter().enumerate().map(|(d, s)| (radical_inverse(i + 1, BASES[d]) + s).fract()).collect()
}

pub fn stratum_of(delta: f64) -> Option<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return None;
    }
    Some((-delta.log2()).floor().max(0.0) as usize)
}

/// Candidate points offset inward from the boundary by a stratum's `δ`,
/// half of them near the vertex at 0. Points are assigned to strata by
/// their measured distance.
pub fn stratified_sample(reg: &Region, opts: &SamplingOptions) -> Result<StratifiedSample> {
    let bm = reg.boundary_model(opts.boundary_samples);
    let runs: Vec<_> = bm.edges().map(|(e, a, b)| (e.clone(), a, b)).collect();
    if runs.is_empty() {
        return Err(Error::Domain("region has no boundary to sample against".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shift: Vec<f64> = (0..5).map(|_| rng.gen::<f64>()).collect();
    let mut cands = Vec::new();
    let mut idx = 0u64;
    for k in 0..=opts.strata {
        let lo = 2f64.powi(-(k as i32) - 1);
        for _ in 0..opts.per_stratum {
            let u = halton(idx, &shift);
            idx += 1;
            let (edge, s0, s1) = &runs[((u[0] * runs.len() as f64) as usize).min(runs.len() - 1)];
            let vertex_mode = edge.point(*s0).norm() < 1e-12 && u[3] < 0.5;
            // vertex points sit just inside the stratum so its max is taken at a consistent δ
            let off = if vertex_mode { lo * (1.0 + 0.02 * u[2]) } else { lo * (1.0 + u[2]) };
            let s = if vertex_mode {
                // |edge(s)| ≈ δ·(1 + 7u²), dense near the bisector-like points |z| ≈ δ
                let target = off * (1.0 + 7.0 * u[1] * u[1]);
                let (mut a, mut b) = (*s0, *s1);
                if edge.point(b).norm() <= target {
                    continue;
                }
                for _ in 0..50 {
                    let m = 0.5 * (a + b);
                    if edge.point(m).norm() < target {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            } else {
                s0 + (s1 - s0) * u[1]
            };
            let b = edge.point(s);
            let t = edge.tangent(s);
            if !(t.norm() > 0.0) {
                continue;
            }
            let n = C::i() * t / t.norm();
            cands.push((b + n * off, b - n * off, u[4] < 0.5));
        }
    }
    let points: Vec<(C, f64, usize)> = cands
        .par_iter()
        .filter_map(|&(p, q, prefer_p)| {
            let (first, second) = if prefer_p { (p, q) } else { (q, p) };
            let z = if reg.contains(first) {
                first
            } else if reg.contains(second) {
                second
            } else {
                return None;
            };
            let d = bm.distance(z);
            stratum_of(d).filter(|k| *k <= opts.strata).map(|k| (z, d, k))
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Domain("no member points were sampled".into()));
    }
    Ok(StratifiedSample { points, strata: opts.strata })
}

fn log_values(f: &(dyn Fn(C) -> Result<f64> + Sync), s: &StratifiedSample) -> Result<Vec<f64>> {
    s.points.par_iter().map(|(z, _, _)| f(*z)).collect()
}

/// `sup δ^M |f|` over a stratified sample of about `grid_size` points.
pub fn tempered_norm(f: &HoloFn, reg: &Region, m: f64, grid_size: usize) -> Result<f64> {
    if m < 0.0 {
        return Err(Error::Domain("M must be non-negative".into()));
    }
    let opts = SamplingOptions { per_stratum: (grid_size / 21).max(1), ..SamplingOptions::default() };
    let s = stratified_sample(reg, &opts)?;
    let lv = log_values(&|z| f.log_abs(z), &s)?;
    let best = s.points.iter().zip(&lv).map(|((_, d, _), l)| m * d.ln() + l).fold(f64::NEG_INFINITY, f64::max);
    Ok(best.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Tempered,
    NotTempered,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumStat {
    pub k: usize,
    pub count: usize,
    /// `max |f|` over the stratum (`null` if it overflows).
    pub max: Option<f64>,
    #[serde(with = "crate::serde_float")]
    pub log_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub count: usize,
    pub seed: u64,
    #[serde(with = "crate::serde_float")]
    pub min_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperedCertificate {
    #[serde(rename = "M")]
    pub m: f64,
    /// `sup δ^M |f|`; `null` when it overflows or the verdict is not tempered.
    pub sup: Option<f64>,
    #[serde(with = "crate::serde_float")]
    pub log_sup: f64,
    pub verdict: Verdict,
    /// Sup-norm residual of the log–log fit.
    #[serde(with = "crate::serde_float")]
    pub fit_residual: f64,
    /// Slope between the two deepest nonempty strata.
    #[serde(with = "crate::serde_float")]
    pub last_slope: f64,
    /// The exponent came from the steepest step between deep strata
    /// because no single power law fits.
    pub envelope: bool,
    pub grid: GridInfo,
    pub strata: Vec<StratumStat>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let res = pts.iter().map(|p| (p.1 - slope * p.0 - icpt).abs()).fold(0.0, f64::max);
    (slope, icpt, res)
}

/// Growth certificate from `ln|f|` values on a stratified sample.
pub fn certify_log_values(sample: &StratifiedSample, lv: &[f64], opts: &SamplingOptions) -> TemperedCertificate {
    let n = sample.strata + 1;
    let mut stats: Vec<StratumStat> =
        (0..n).map(|k| StratumStat { k, count: 0, max: None, log_max: f64::NEG_INFINITY }).collect();
    let mut bad = false;
    for ((_, _, k), l) in sample.points.iter().zip(lv) {
        if l.is_nan() || *l == f64::INFINITY {
            bad = true;
        }
        let s = &mut stats[*k];
        s.count += 1;
        s.log_max = s.log_max.max(*l);
    }
    for s in &mut stats {
        s.max = finite(s.log_max.exp()).filter(|_| s.count > 0);
    }
    let min_delta = sample.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let grid = GridInfo { count: sample.points.len(), seed: opts.seed, min_delta };
    // x = −ln δ at the stratum's geometric center
    let pts: Vec<(f64, f64)> = stats
        .iter()
        .filter(|s| s.count > 0 && s.log_max.is_finite())
        .map(|s| ((s.k as f64 + 0.5) * std::f64::consts::LN_2, s.log_max))
        .collect();
    let mut cert = TemperedCertificate {
        m: 0.0,
        sup: None,
        log_sup: f64::INFINITY,
        verdict: Verdict::Inconclusive,
        fit_residual: f64::INFINITY,
        last_slope: 0.0,
        envelope: false,
        grid,
        strata: stats,
    };
    if bad || pts.len() < 4 {
        return cert;
    }
    let (a, b) = (pts[pts.len() - 2], pts[pts.len() - 1]);
    cert.last_slope = (b.1 - a.1) / (b.0 - a.0);
    let (mut slope, _, mut res) = line_fit(&pts);
    if res >= FIT_RESIDUAL {
        // shallow strata can be dominated by the far boundary; the germ at 0 is what counts
        let deep = &pts[pts.len() / 2..];
        if deep.len() >= 4 {
            let (s2, _, r2) = line_fit(deep);
            slope = s2;
            res = r2;
        }
    }
    cert.fit_residual = res;
    if res >= FIT_RESIDUAL {
        let deep = &pts[pts.len() / 2..];
        if deep.len() >= 3 {
            slope = deep.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).fold(f64::NEG_INFINITY, f64::max);
            cert.envelope = true;
        }
    }
    if cert.last_slope > M_MAX {
        cert.verdict = Verdict::NotTempered;
        cert.m = M_MAX;
        return cert;
    }
    if (res < FIT_RESIDUAL || cert.envelope) && slope <= M_MAX {
        cert.verdict = Verdict::Tempered;
        cert.m = (((slope - 0.005) * 4.0).ceil() / 4.0).max(0.0);
        cert.log_sup = sample
            .points
            .iter()
            .zip(lv)
            .map(|((_, d, _), l)| cert.m * d.ln() + l)
            .fold(f64::NEG_INFINITY, f64::max);
        cert.sup = finite(cert.log_sup.exp());
    }
    cert
}

/// Fitted growth exponent of `f` toward `∂reg` with default sampling.
pub fn fit_growth_exponent(f: &HoloFn, reg: &Region) -> Result<TemperedCertificate> {
    fit_growth_exponent_with(f, reg, &SamplingOptions::default())
}

pub fn fit_growth_exponent_with(f: &HoloFn, reg: &Region, opts: &SamplingOptions) -> Result<TemperedCertificate> {
    fit_log_abs(&|z| f.log_abs(z), reg, opts)
}

/// Same as [`fit_growth_exponent_with`] for a raw `ln|f|` evaluator.
pub fn fit_log_abs(
    log_abs: &(dyn Fn(C) -> Result<f64> + Sync),
    reg: &Region,
    opts: &SamplingOptions,
) -> Result<TemperedCertificate> {
    let s = stratified_sample(reg, opts)?;
    let lv = log_values(log_abs, &s)?;
    Ok(certify_log_values(&s, &lv, opts))
}

/// Sample-certified `(c, r)` with `f ≥ c·g^r` at every sample.
pub fn lojasiewicz_exponents(f: &[f64], g: &[f64]) -> Result<(f64, f64)> {
    if f.len() != g.len() || f.is_empty() {
        return Err(Error::Domain("f and g need the same nonempty sample set".into()));
    }
    let mut pairs = Vec::new();
    for (&fv, &gv) in f.iter().zip(g) {
        if fv < 0.0 || gv < 0.0 || !fv.is_finite() || !gv.is_finite() {
            return Err(Error::Domain("f and g must be finite and non-negative".into()));
        }
        if fv < 1e-12 && gv > 1e-6 {
            return Err(Error::Hypothesis(format!("f vanishes ({fv:e}) where g = {gv:e}")));
        }
        if fv > 0.0 && gv > 0.0 {
            pairs.push((fv.ln(), gv.ln()));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Domain("no samples with f, g > 0".into()));
    }
    // strata in −log2 g
    let kmin = pairs.iter().map(|p| (-p.1 / std::f64::consts::LN_2).floor() as i64).min().unwrap();
    let stratum = |lg: f64| ((-lg / std::f64::consts::LN_2).floor() as i64 - kmin) as usize;
    let n = pairs.iter().map(|p| stratum(p.1)).max().unwrap() + 1;
    let works = |r: f64| -> bool {
        let mut mins = vec![f64::INFINITY; n];
        for (lf, lg) in &pairs {
            let s = stratum(*lg);
            mins[s] = mins[s].min(lf - r * lg);
        }
        let pts: Vec<(f64, f64)> = mins
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, v)| ((k as i64 + kmin) as f64, *v))
            .collect();
        if pts.len() < 2 {
            return true;
        }
        let deep = &pts[pts.len() / 2..];
        let deep = if deep.len() >= 2 { deep } else { &pts[..] };
        line_fit(deep).0 >= -1e-6
    };
    let grid: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
    let pos = grid
        .iter()
        .position(|r| works(*r))
        .ok_or_else(|| Error::Hypothesis("no exponent r ≤ 10 bounds f from below".into()))?;
    let mut hi = grid[pos];
    if pos > 0 {
        let mut lo = grid[pos - 1];
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            if works(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let c = pairs.iter().map(|(lf, lg)| lf - hi * lg).fold(f64::INFINITY, f64::min).exp();
    Ok((c, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczPair {
    pub c: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    /// `h` on `φ(S)`.
    pub image: TemperedCertificate,
    /// `h∘φ` on `S`.
    pub pullback: TemperedCertificate,
    /// `None` when either fit is inconclusive.
    pub consistent: Option<bool>,
    #[serde(with = "crate::serde_float::option")]
    pub exponent_ratio: Option<f64>,
    /// `δ_V(φ(w)) ≥ a·δ_U(w)^α`.
    pub image_vs_sector: Option<LojasiewiczPair>,
    /// `δ_U(w) ≥ b·δ_V(φ(w))^β`.
    pub sector_vs_image: Option<LojasiewiczPair>,
}

/// Compares temperedness of `h` on `φ(S)` with that of `h∘φ` on `S`.
pub fn pullback_temperedness_check(h: &HoloFn, chart: &Arc<Chart>, sector: &Sector) -> Result<PullbackReport> {
    pullback_temperedness_check_with(h, chart, sector, &SamplingOptions::default())
}

pub fn pullback_temperedness_check_with(
    h: &HoloFn,
    chart: &Arc<Chart>,
    sector: &Sector,
    opts: &SamplingOptions,
) -> Result<PullbackReport> {
    let v = Region::SectorImage { chart: chart.clone(), sector: *sector };
    let u = Region::Sector(*sector);
    let image = fit_growth_exponent_with(&h.restrict(v.clone()), &v, opts)?;
    let pulled = h.pullback(chart.clone(), u.clone());
    let pullback = fit_growth_exponent_with(&pulled, &u, opts)?;
    let mut rep = PullbackReport {
        image,
        pullback,
        consistent: None,
        exponent_ratio: None,
        image_vs_sector: None,
        sector_vs_image: None,
    };
    if rep.image.verdict == Verdict::Inconclusive || rep.pullback.verdict == Verdict::Inconclusive {
        return Ok(rep);
    }
    rep.consistent = Some(rep.image.verdict == rep.pullback.verdict);
    if rep.image.verdict == Verdict::Tempered && rep.pullback.verdict == Verdict::Tempered {
        if rep.image.m > 0.0 {
            rep.exponent_ratio = Some(rep.pullback.m / rep.image.m);
        }
        let (du, dv) = distance_pairs(chart, sector, &u, &v, opts)?;
        rep.image_vs_sector = lojasiewicz_exponents(&dv, &du).ok().map(|(c, r)| LojasiewiczPair { c, r });
        rep.sector_vs_image = lojasiewicz_exponents(&du, &dv).ok().map(|(c, r)| LojasiewiczPair { c, r });
    }
    Ok(rep)
}

/// `(δ_U(w), δ_V(φ(w)))` over a stratified sample of `U = S`.
fn distance_pairs(
    chart: &Chart,
    _sector: &Sector,
    u: &Region,
    v: &Region,
    opts: &SamplingOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = stratified_sample(u, &opts.with_per_stratum(opts.per_stratum.min(64)))?;
    let bv: BoundaryModel = v.boundary_model(opts.boundary_samples);
    let dv: Vec<f64> = s.points.par_iter().map(|(w, _, _)| bv.distance(chart.eval(*w))).collect();
    Ok((s.points.iter().map(|p| p.1).collect(), dv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sector() -> Region {
        Region::Sector(Sector::new(0.0, PI / 4.0, 1.0).unwrap())
    }

    fn fit(src: &str) -> TemperedCertificate {
        let f = HoloFn::parse(src, sector(), 0.0).unwrap();
        fit_growth_exponent_with(&f, &sector(), &SamplingOptions::default().with_per_stratum(128)).unwrap()
    }

    #[test]
    fn norm_examples() {
        let disc = Region::Disc { center: C::new(0.0, 0.0), radius: 1.0 };
        let one = HoloFn::parse("1", disc.clone(), 0.0).unwrap();
        assert!((tempered_norm(&one, &disc, 0.0, 2000).unwrap() - 1.0).abs() < 1e-12);
        let inv = HoloFn::parse("1/z", sector(), 0.0).unwrap();
        assert!(tempered_norm(&inv, &sector(), 1.0, 4000).unwrap() <= 1.0 + 1e-9);
        let e = HoloFn::parse("exp(1/z)", sector(), 0.0).unwrap();
        let small = tempered_norm(&e, &sector(), 5.0, 200).unwrap();
        let big = tempered_norm(&e, &sector(), 5.0, 4000).unwrap();
        assert!(big > 1e6 && big >= small);
    }

    #[test]
    fn fitted_exponents() {
        for k in 0..=3 {
            let c = fit(&format!("z^(-{k})"));
            assert_eq!(c.verdict, Verdict::Tempered, "{k}: {c:?}");
            assert!((c.m - k as f64).abs() <= 0.25, "{k}: {}", c.m);
        }
        assert_eq!(fit("exp(1/z)").verdict, Verdict::NotTempered);
        let c = fit("1");
        assert_eq!((c.verdict, c.m), (Verdict::Tempered, 0.0));
        // flat-then-vanishing toward the vertex: no power law, bounded all the same
        let left = Region::Sector(Sector::new(PI, PI / 4.0, 1.0).unwrap());
        let f = HoloFn::parse("exp(1/z)", left.clone(), PI).unwrap();
        let c = fit_growth_exponent_with(&f, &left, &SamplingOptions::default().with_per_stratum(64)).unwrap();
        assert!(c.verdict == Verdict::Tempered && c.m <= 0.25, "{c:?}");
    }

    #[test]
    fn fit_is_stable_across_seeds() {
        for seed in 1..6 {
            for k in [1, 2, 3] {
                let f = HoloFn::parse(&format!("z^(-{k})"), sector(), 0.0).unwrap();
                let opts = SamplingOptions::default().with_seed(seed);
                let c = fit_growth_exponent_with(&f, &sector(), &opts).unwrap();
                assert_eq!(c.verdict, Verdict::Tempered, "seed {seed} k {k}: {}", c.fit_residual);
                assert!((c.m - k as f64).abs() <= 0.25, "seed {seed} k {k}: {}", c.m);
            }
        }
    }

    #[test]
    fn per_stratum_monotone_in_m() {
        let f = HoloFn::parse("1/z^2", sector(), 0.0).unwrap();
        let s = stratified_sample(&sector(), &SamplingOptions::default().with_per_stratum(32)).unwrap();
        for (z, d, _) in &s.points {
            assert!(*d < 1.0);
            let v = f.eval(*z).unwrap().norm();
            assert!(d.powf(2.0) * v <= d.powf(1.0) * v);
        }
    }

    #[test]
    fn lojasiewicz_examples() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).chain((1..40).map(|k| 2f64.powi(-k))).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (c, r) = lojasiewicz_exponents(&xs, &xs).unwrap();
        assert!((c - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        let (c, r) = lojasiewicz_exponents(&sq, &xs).unwrap();
        assert!((c - 1.0).abs() < 1e-9 && (r - 2.0).abs() < 1e-3, "{c} {r}");
        assert!(matches!(lojasiewicz_exponents(&[0.0, 1.0], &[0.5, 1.0]), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn pullback_examples() {
        let s = Sector::new(0.0, PI / 4.0, 1.0).unwrap();
        let sq = Arc::new(Chart::new(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)], s).unwrap());
        let id = Arc::new(Chart::identity(s));
        let opts = SamplingOptions::default().with_per_stratum(96);
        let disc = Region::Disc { center: C::new(0.0, 0.0), radius: 2.0 };
        let h = HoloFn::parse("1/z", disc.clone(), 0.0).unwrap();
        let rep = pullback_temperedness_check_with(&h, &sq, &s, &opts).unwrap();
        assert_eq!(rep.consistent, Some(true));
        assert!((rep.image.m - 1.0).abs() <= 0.3 && (rep.pullback.m - 2.0).abs() <= 0.3, "{rep:?}");
        let l = rep.image_vs_sector.unwrap();
        assert!(l.r <= 2.5, "{l:?}");
        let e = HoloFn::parse("exp(1/z)", disc, 0.0).unwrap();
        let rep = pullback_temperedness_check_with(&e, &id, &s, &opts).unwrap();
        assert_eq!((rep.image.verdict, rep.pullback.verdict), (Verdict::NotTempered, Verdict::NotTempered));
    }
}
