//! Cover a band germ, solve `z^N u′ + A u = g` on every piece, and compare
//! the pieces on their overlaps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorKind, Result};
use crate::geometry::{cover_band, Band, Chart, Cover, CoverOptions, Region, Sector};
use crate::holo::HoloFn;
use crate::honda::{amplitude_bound, residual_samples, solve_chart_image, solve_sector, BasePoint, SectorSolution};
use crate::tempered::{
    certify_log_values, fit_growth_exponent_with, stratified_sample, GridInfo, SamplingOptions, TemperedCertificate,
    Verdict,
};
use crate::turrittin::{exponential_parts, formal_fundamental, ExponentialPart, OperatorSpec, DEFAULT_ORDER};

type C = Complex64;

pub const SCHEMA: &str = "sectoria/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Residual bound relative to `1 + sup|g|`.
    pub residual: f64,
    /// Overlap fit bound relative to `1 + sup|u|`.
    pub gluing: f64,
    pub membership: f64,
    /// Allowed change of overlap coefficients when the samples double,
    /// relative to `max(1, |c|)`.
    pub coefficient_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { residual: 1e-6, gluing: 1e-6, membership: 0.999, coefficient_drift: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    pub seed: u64,
    pub order: usize,
    /// Sampling density of the per-piece certificates.
    pub per_stratum: usize,
    pub overlap_samples: usize,
    pub coverage_samples: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerances: Tolerances::default(),
            seed: 0,
            order: DEFAULT_ORDER,
            per_stratum: 12,
            overlap_samples: 32,
            coverage_samples: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveVerdict {
    Solved,
    Partial,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceRecord {
    pub id: usize,
    /// The piece as solved, radius reduced where the paths need it.
    pub region: Region,
    /// Integration sector, on the `w` side for chart pieces.
    pub sector: Option<Sector>,
    pub chart: Option<Chart>,
    pub bases: Vec<BasePoint>,
    #[serde(with = "crate::serde_float::option")]
    pub residual: Option<f64>,
    /// `tolerance · (1 + sup|g|)`.
    pub residual_bound: f64,
    /// Growth certificate of `max_i |u_i|` on the piece.
    pub certificate: Option<TemperedCertificate>,
    pub error: Option<String>,
    pub error_kind: Option<ErrorKind>,
    #[serde(skip)]
    pub solution: Option<SectorSolution>,
}

impl PieceRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
            && self.residual.is_some_and(|r| r <= self.residual_bound)
            && self.certificate.as_ref().is_some_and(|c| c.verdict == Verdict::Tempered)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapRecord {
    pub pair: (usize, usize),
    pub samples: usize,
    /// Coefficients of `u_a − u_b` on the columns of `F e^Λ`.
    pub coefficients: Vec<C>,
    /// Same fit with twice the samples.
    pub coefficients_doubled: Vec<C>,
    pub drift: f64,
    pub fit_residual: f64,
    pub scale: f64,
    pub difference: Option<TemperedCertificate>,
    pub pass: bool,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema: String,
    pub exponential_part: ExponentialPart,
    pub max_amplitude: f64,
    #[serde(with = "crate::serde_float")]
    pub max_radius: f64,
    pub covers: Vec<Cover>,
    /// Radius of the germ covered by the solved pieces.
    pub w_radius: f64,
    pub coverage: f64,
    pub pieces: Vec<PieceRecord>,
    pub overlaps: Vec<OverlapRecord>,
    pub verdict: SolveVerdict,
    pub seed: u64,
    pub tolerances: Tolerances,
}

/// Trivial certificate of the zero function.
fn zero_certificate(seed: u64) -> TemperedCertificate {
    TemperedCertificate {
        m: 0.0,
        sup: Some(0.0),
        log_sup: f64::NEG_INFINITY,
        verdict: Verdict::Tempered,
        fit_residual: 0.0,
        last_slope: 0.0,
        envelope: false,
        grid: GridInfo { count: 0, seed, min_delta: f64::INFINITY },
        strata: Vec::new(),
    }
}

fn sup_norm(v: &DVector<C>) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn log_max_abs(v: &DVector<C>) -> f64 {
    sup_norm(v).ln()
}

fn sup_g(g: &[HoloFn], pts: &[C]) -> Result<f64> {
    let mut s: f64 = 0.0;
    for z in pts {
        for gi in g {
            s = s.max(gi.eval(*z)?.norm());
        }
    }
    Ok(s)
}

/// `|z|` reached by the piece along its outer arc.
fn reach(sol: &SectorSolution) -> f64 {
    (0..=32)
        .map(|k| sol.z_of(sol.valid.point(1.0, -1.0 + 2.0 * k as f64 / 32.0)).norm())
        .fold(f64::INFINITY, f64::min)
}

fn with_valid(piece: &Region, sol: &SectorSolution) -> Region {
    match piece {
        Region::Intersection(ch) => {
            let mut done = false;
            Region::Intersection(
                ch.iter()
                    .map(|c| match c {
                        Region::SectorImage { .. } | Region::Sector(_) if !done => {
                            done = true;
                            sol.region()
                        }
                        other => other.clone(),
                    })
                    .collect(),
            )
        }
        _ => sol.region(),
    }
}

/// Sector or chart image to integrate on for a cover piece.
fn integration_target(piece: &Region) -> Option<(Option<Arc<Chart>>, Sector)> {
    match piece {
        Region::Sector(s) => Some((None, *s)),
        Region::SectorImage { chart, sector } => Some((Some(chart.clone()), *sector)),
        Region::Intersection(ch) => ch.iter().find_map(integration_target),
        _ => None,
    }
}

struct Setup<'a> {
    op: &'a OperatorSpec,
    ep: &'a ExponentialPart,
    ff: &'a crate::turrittin::FormalFundamental,
    g: &'a [HoloFn],
    opts: &'a SolverOptions,
}

fn solve_piece(cx: &Setup, id: usize, piece: &Region) -> PieceRecord {
    let mut rec = PieceRecord {
        id,
        region: piece.clone(),
        sector: None,
        chart: None,
        bases: Vec::new(),
        residual: None,
        residual_bound: cx.opts.tolerances.residual,
        certificate: None,
        error: None,
        error_kind: None,
        solution: None,
    };
    if let Err(e) = fill_piece(cx, piece, &mut rec) {
        log::warn!("piece {id}: {e}");
        rec.error = Some(e.to_string());
        rec.error_kind = Some(e.kind());
    }
    rec
}

fn fill_piece(cx: &Setup, piece: &Region, rec: &mut PieceRecord) -> Result<()> {
    let (chart, sector) =
        integration_target(piece).ok_or_else(|| Error::Domain(format!("cover piece {} has no sector", rec.id)))?;
    rec.sector = Some(sector);
    rec.chart = chart.as_deref().cloned();
    let sol = match &chart {
        Some(c) => solve_chart_image(cx.op, cx.ep, cx.ff, c, &sector, cx.g)?,
        None => solve_sector(cx.op, cx.ff, cx.ep, cx.g, &sector)?,
    };
    rec.bases = sol.bases.clone();
    rec.region = with_valid(piece, &sol);
    let samples = residual_samples(&sol.valid);
    let zs: Vec<C> = samples.iter().map(|w| sol.z_of(*w)).collect();
    rec.residual_bound = cx.opts.tolerances.residual * (1.0 + sup_g(cx.g, &zs)?);
    rec.residual = Some(sol.residual(cx.op, cx.g, &samples)?);
    rec.certificate = Some(if sol.is_zero() {
        zero_certificate(cx.opts.seed)
    } else {
        let opts = SamplingOptions::default().with_per_stratum(cx.opts.per_stratum).with_seed(cx.opts.seed);
        let s = stratified_sample(&rec.region, &opts)?;
        let lv: Vec<f64> =
            s.points.iter().map(|(z, _, _)| sol.eval(*z).map(|u| log_max_abs(&u))).collect::<Result<_>>()?;
        certify_log_values(&s, &lv, &opts)
    });
    rec.solution = Some(sol);
    Ok(())
}

/// Covers every band with pieces on which all `Λ_k` admit paths, solves on
/// each piece, and checks all overlapping pairs.
pub fn cover_and_solve(op: &OperatorSpec, bands: &[Band], g: &[HoloFn], opts: &SolverOptions) -> Result<SolveReport> {
    if g.len() != op.m() {
        return Err(Error::Domain(format!("right-hand side has {} components, system has {}", g.len(), op.m())));
    }
    if bands.is_empty() {
        return Err(Error::Domain("no bands to cover".into()));
    }
    let ep = exponential_parts(op)?;
    let ff = formal_fundamental(op, &ep, opts.order)?;
    let mut max_amp = std::f64::consts::PI;
    let mut max_radius = op.disc_radius();
    for lam in &ep.lambdas {
        let b = amplitude_bound(lam)?;
        max_amp = max_amp.min(b.alpha);
        if let Some(r) = b.rho_star {
            max_radius = max_radius.min(r);
        }
    }
    let mut covers = Vec::with_capacity(bands.len());
    let mut pieces = Vec::new();
    for b in bands {
        let co = CoverOptions { seed: opts.seed, ..CoverOptions::new(max_amp, max_radius) };
        let c = cover_band(b, &co)?;
        pieces.extend(c.pieces.iter().cloned());
        covers.push(c);
    }
    let cx = Setup { op, ep: &ep, ff: &ff, g, opts };
    let records: Vec<PieceRecord> =
        pieces.par_iter().enumerate().map(|(id, p)| solve_piece(&cx, id, p)).collect();

    let mut w_radius = covers.iter().map(|c| c.w_radius).fold(f64::INFINITY, f64::min);
    for r in &records {
        if let Some(sol) = &r.solution {
            w_radius = w_radius.min(reach(sol));
        }
    }
    let coverage = coverage_of(bands, &records, w_radius, opts);

    let mut overlaps = Vec::new();
    for i in 0..records.len() {
        for j in i + 1..records.len() {
            if records[i].solution.is_some() && records[j].solution.is_some() {
                let o = overlap_record(&records, (i, j), opts);
                if o.notice.is_none() || o.samples > 0 {
                    overlaps.push(o);
                }
            }
        }
    }
    let ok = records.iter().filter(|r| r.ok()).count();
    let verdict = if ok == records.len() {
        SolveVerdict::Solved
    } else if ok > 0 {
        SolveVerdict::Partial
    } else {
        SolveVerdict::Failed
    };
    Ok(SolveReport {
        schema: SCHEMA.into(),
        exponential_part: ep,
        max_amplitude: max_amp,
        max_radius,
        covers,
        w_radius,
        coverage,
        pieces: records,
        overlaps,
        verdict,
        seed: opts.seed,
        tolerances: opts.tolerances,
    })
}

/// Fraction of band points with `|z| < w_radius` inside some solved piece.
fn coverage_of(bands: &[Band], records: &[PieceRecord], w_radius: f64, opts: &SolverOptions) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let (mut hit, mut total) = (0usize, 0usize);
    for b in bands {
        let target = Cover::target(b, w_radius);
        for z in target.sample_members(opts.coverage_samples, &mut rng) {
            total += 1;
            if records.iter().any(|r| r.solution.is_some() && r.region.contains(z)) {
                hit += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Least-squares fit of `d` on the columns of `Φ`, one block per point.
/// Columns are rescaled to unit size before the SVD; rows with non-finite
/// entries are dropped.
fn fit_homogeneous(phis: &[DMatrix<C>], ds: &[DVector<C>]) -> Option<(Vec<C>, f64)> {
    let keep: Vec<usize> = (0..phis.len())
        .filter(|&i| phis[i].iter().all(|c| c.is_finite()) && ds[i].iter().all(|c| c.is_finite()))
        .collect();
    if keep.is_empty() {
        return None;
    }
    let m = phis[0].ncols();
    let rows = keep.len() * phis[0].nrows();
    let mut a = DMatrix::<C>::zeros(rows, m);
    let mut b = DVector::<C>::zeros(rows);
    let nr = phis[0].nrows();
    for (blk, &i) in keep.iter().enumerate() {
        for r in 0..nr {
            for k in 0..m {
                a[(blk * nr + r, k)] = phis[i][(r, k)];
            }
            b[blk * nr + r] = ds[i][r];
        }
    }
    let scale: Vec<f64> = (0..m)
        .map(|k| a.column(k).iter().map(|c| c.norm()).fold(0.0, f64::max))
        .map(|s| if s > 0.0 { s } else { 1.0 })
        .collect();
    let mut an = a.clone();
    for k in 0..m {
        let col = an.column(k) / C::new(scale[k], 0.0);
        an.set_column(k, &col);
    }
    let svd = an.svd(true, true);
    let y = svd.solve(&b, 1e-12).ok()?;
    let c: Vec<C> = (0..m).map(|k| y[k] / scale[k]).collect();
    let cv = DVector::from_vec(c.clone());
    let res = (&a * &cv - &b).iter().map(|x| x.norm()).fold(0.0, f64::max);
    Some((c, res))
}

fn overlap_points(a: &Region, b: &Region, n: usize, seed: u64) -> Vec<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cand = a.sample_members(40 * n, &mut rng);
    cand.into_iter().filter(|z| b.contains(*z)).take(n).collect()
}

/// Gluing check for one pair of solved pieces.
pub fn mayer_vietoris_check(report: &SolveReport, pair: (usize, usize), opts: &SolverOptions) -> OverlapRecord {
    overlap_record(&report.pieces, pair, opts)
}

fn overlap_record(pieces: &[PieceRecord], (i, j): (usize, usize), opts: &SolverOptions) -> OverlapRecord {
    let mut rec = OverlapRecord {
        pair: (i, j),
        samples: 0,
        coefficients: Vec::new(),
        coefficients_doubled: Vec::new(),
        drift: 0.0,
        fit_residual: 0.0,
        scale: 1.0,
        difference: None,
        pass: false,
        notice: None,
    };
    if let Err(e) = fill_overlap(pieces, (i, j), opts, &mut rec) {
        rec.notice = Some(e.to_string());
        rec.pass = false;
    }
    rec
}

fn fill_overlap(pieces: &[PieceRecord], (i, j): (usize, usize), opts: &SolverOptions, rec: &mut OverlapRecord) -> Result<()> {
    let (pa, pb) = (&pieces[i], &pieces[j]);
    let (Some(sa), Some(sb)) = (&pa.solution, &pb.solution) else {
        return Err(Error::Domain("pair includes an unsolved piece".into()));
    };
    let n = opts.overlap_samples;
    let seed = opts.seed ^ ((i as u64) << 32 | j as u64);
    let pts = overlap_points(&pa.region, &pb.region, 2 * n, seed);
    if pts.len() < 2 * n {
        return Err(Error::Domain(format!("overlap too small to sample ({} of {} points)", pts.len(), 2 * n)));
    }
    let mut phis = Vec::with_capacity(pts.len());
    let mut ds = Vec::with_capacity(pts.len());
    let mut scale: f64 = 0.0;
    for z in &pts {
        let (ua, ub) = (sa.eval(*z)?, sb.eval(*z)?);
        scale = scale.max(sup_norm(&ua)).max(sup_norm(&ub));
        ds.push(ua - ub);
        phis.push(sa.homogeneous(*z)?);
    }
    rec.samples = n;
    rec.scale = 1.0 + scale;
    let dmax = ds.iter().map(sup_norm).fold(0.0, f64::max);
    let m = sa.m();
    let (c1, r1) = if dmax == 0.0 {
        (vec![C::new(0.0, 0.0); m], 0.0)
    } else {
        fit_homogeneous(&phis[..n], &ds[..n]).ok_or_else(|| Error::Precision("overlap fit has no finite rows".into()))?
    };
    let (c2, r2) = if dmax == 0.0 {
        (c1.clone(), 0.0)
    } else {
        fit_homogeneous(&phis, &ds).ok_or_else(|| Error::Precision("overlap fit has no finite rows".into()))?
    };
    rec.drift = c1.iter().zip(&c2).map(|(a, b)| (a - b).norm() / a.norm().max(1.0)).fold(0.0, f64::max);
    rec.fit_residual = r1.max(r2);
    rec.coefficients = c1;
    rec.coefficients_doubled = c2;
    let cert = if dmax == 0.0 {
        zero_certificate(opts.seed)
    } else {
        let inter = Region::Intersection(vec![pa.region.clone(), pb.region.clone()]);
        let so = SamplingOptions::default().with_per_stratum(opts.per_stratum.div_ceil(2)).with_seed(opts.seed);
        let (sa, sb) = (sa.clone(), sb.clone());
        let diff = HoloFn::closure(
            Arc::new(move |z| {
                let d = sa.eval(z)? - sb.eval(z)?;
                Ok(C::new(sup_norm(&d), 0.0))
            }),
            inter.clone(),
            "u_a − u_b",
        );
        fit_growth_exponent_with(&diff, &inter, &so)?
    };
    let t = &opts.tolerances;
    rec.pass = rec.fit_residual <= t.gluing * rec.scale && rec.drift <= t.coefficient_drift && cert.verdict == Verdict::Tempered;
    rec.difference = Some(cert);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialScope {
    InScope,
    /// The right-hand side is not tempered; the comparison says nothing.
    OutOfScope,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub rhs: Vec<String>,
    pub rhs_certificate: Option<TemperedCertificate>,
    pub scope: TrialScope,
    pub verdict: Option<SolveVerdict>,
    pub pieces: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub trials: Vec<TrialRecord>,
    pub in_scope: usize,
    pub solved: usize,
    /// `solved / in_scope`; `None` without in-scope trials.
    pub success_fraction: Option<f64>,
    pub negative_control: Option<TrialRecord>,
    pub seed: u64,
}

fn rhs_certificate(g: &[HoloFn], region: &Region, opts: &SolverOptions) -> Result<TemperedCertificate> {
    if g.iter().all(|x| x.is_zero()) {
        return Ok(zero_certificate(opts.seed));
    }
    let so = SamplingOptions::default().with_per_stratum(opts.per_stratum.max(16)).with_seed(opts.seed);
    let s = stratified_sample(region, &so)?;
    let lv: Vec<f64> = s
        .points
        .iter()
        .map(|(z, _, _)| g.iter().map(|x| x.log_abs(*z)).try_fold(f64::NEG_INFINITY, |a, b| Ok::<_, Error>(a.max(b?))))
        .collect::<Result<_>>()?;
    Ok(certify_log_values(&s, &lv, &so))
}

fn run_trial(op: &OperatorSpec, bands: &[Band], g: &[HoloFn], opts: &SolverOptions) -> TrialRecord {
    let mut rec = TrialRecord {
        rhs: g.iter().map(|x| x.label.clone()).collect(),
        rhs_certificate: None,
        scope: TrialScope::InScope,
        verdict: None,
        pieces: 0,
        error: None,
    };
    let r = bands.iter().try_for_each(|b| -> Result<()> {
        let c = rhs_certificate(g, &Cover::target(b, b.radius().min(op.disc_radius())), opts)?;
        let tempered = c.verdict == Verdict::Tempered;
        if rec.rhs_certificate.as_ref().is_none_or(|old| old.verdict == Verdict::Tempered) {
            rec.rhs_certificate = Some(c);
        }
        if !tempered {
            rec.scope = TrialScope::OutOfScope;
        }
        Ok(())
    });
    if let Err(e) = r {
        rec.error = Some(e.to_string());
        rec.scope = TrialScope::OutOfScope;
        return rec;
    }
    if rec.scope == TrialScope::OutOfScope {
        return rec;
    }
    match cover_and_solve(op, bands, g, opts) {
        Ok(rep) => {
            rec.verdict = Some(rep.verdict);
            rec.pieces = rep.pieces.len();
        }
        Err(e) => {
            rec.verdict = Some(SolveVerdict::Failed);
            rec.error = Some(e.to_string());
        }
    }
    rec
}

/// Solvability rate over tempered right-hand sides, plus a non-tempered
/// control `e^{1/z}(1 + z)` on a right half-plane sector, which must come
/// out of scope.
pub fn h1_comparison_experiment(
    op: &OperatorSpec,
    bands: &[Band],
    trials: &[Vec<HoloFn>],
    opts: &SolverOptions,
) -> Result<ExperimentReport> {
    let records: Vec<TrialRecord> = trials.iter().map(|g| run_trial(op, bands, g, opts)).collect();
    let in_scope = records.iter().filter(|r| r.scope == TrialScope::InScope).count();
    let solved = records.iter().filter(|r| r.verdict == Some(SolveVerdict::Solved)).count();
    let negative_control = if trials.is_empty() {
        None
    } else {
        let s = Sector::new(0.0, std::f64::consts::PI / 8.0, op.disc_radius().min(0.5))?;
        let reg = Region::Sector(s);
        let mut g: Vec<HoloFn> = (0..op.m()).map(|_| HoloFn::zero(reg.clone())).collect();
        g[0] = HoloFn::parse("exp(1/z)*(1 + z)", reg.clone(), 0.0)?;
        let c = rhs_certificate(&g, &reg, opts)?;
        Some(TrialRecord {
            rhs: g.iter().map(|x| x.label.clone()).collect(),
            scope: if c.verdict == Verdict::Tempered { TrialScope::InScope } else { TrialScope::OutOfScope },
            rhs_certificate: Some(c),
            verdict: None,
            pieces: 0,
            error: None,
        })
    };
    Ok(ExperimentReport {
        schema: SCHEMA.into(),
        trials: records,
        in_scope,
        solved,
        success_fraction: (in_scope > 0).then(|| solved as f64 / in_scope as f64),
        negative_control,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests;
