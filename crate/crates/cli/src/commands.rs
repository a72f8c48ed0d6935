use std::fs;
use std::path::Path;
use std::sync::Arc;

use sectoria::Complex64;
use serde::{Deserialize, Serialize};

use sectoria::geometry::{boundary_distance, cover_band, Band, Chart, Cover, CoverOptions, Region, Sector};
use sectoria::holo::HoloFn;
use sectoria::honda::{amplitude_bound, residual_samples, AmplitudeBound};
use sectoria::solver::{
    cover_and_solve, h1_comparison_experiment, ExperimentReport, SolveReport, SolveVerdict, SolverOptions, SCHEMA,
};
use sectoria::tempered::{pullback_temperedness_check_with, PullbackReport, SamplingOptions};
use sectoria::turrittin::{exponential_parts, formal_fundamental, ExponentialPart, GrowthCertificate, OperatorSpec};
use sectoria::ErrorKind;

use crate::job::{input, Command, Failure, JobSpec, Outcome, RegionSpec};

type C = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub z: C,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fundamental {
    pub order: usize,
    /// Exponents of the `z^ρ` factors.
    pub rho: Vec<C>,
    pub has_log: bool,
    pub growth: GrowthCertificate,
    /// `‖z^N F′ + A F − F·Λ′‖` at points of the growth sector.
    pub residuals: Vec<ResidualSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub schema: String,
    pub operator: OperatorSpec,
    pub exponential_part: ExponentialPart,
    /// `Λ_k` in canonical print.
    pub lambdas: Vec<String>,
    pub amplitude_bounds: Vec<AmplitudeBound>,
    pub fundamental: Fundamental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub schema: String,
    pub seed: u64,
    pub max_amplitude: f64,
    pub max_radius: f64,
    pub covers: Vec<Cover>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackDoc {
    pub schema: String,
    pub seed: u64,
    pub function: String,
    pub chart: Chart,
    pub sector: Sector,
    pub report: PullbackReport,
}

#[derive(Serialize)]
struct SampleRow {
    piece: usize,
    component: usize,
    z_re: f64,
    z_im: f64,
    u_re: f64,
    u_im: f64,
    residual: f64,
    delta: f64,
}

#[derive(Serialize)]
struct PieceRow<'a> {
    piece: usize,
    kind: &'a str,
    residual: Option<f64>,
    residual_bound: f64,
    m: Option<f64>,
    verdict: Option<String>,
    error: Option<&'a str>,
}

/// Runs the job and returns the exit status.
pub fn run(job: &JobSpec) -> Outcome<i32> {
    fs::create_dir_all(&job.output).map_err(|e| input(format!("output directory {}: {e}", job.output.display())))?;
    match job.command {
        Command::Analyze => analyze(job),
        Command::Cover => cover(job),
        Command::Solve => solve(job),
        Command::CheckPullback => check_pullback(job),
        Command::Experiment => experiment(job),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T) -> Outcome<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| input(format!("serializing {name}: {e}")))?;
    s.push('\n');
    fs::write(dir.join(name), s).map_err(|e| input(format!("writing {name}: {e}")))
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Outcome<()> {
    let io = |e: csv::Error| input(format!("writing {name}: {e}"));
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| input(format!("writing {name}: {e}")))
}

fn operator(job: &JobSpec) -> &OperatorSpec {
    job.operator.as_ref().expect("validated")
}

fn bands(job: &JobSpec) -> Outcome<Vec<Band>> {
    job.region.as_ref().expect("validated").bands()
}

fn options(job: &JobSpec) -> SolverOptions {
    let mut o = SolverOptions { seed: job.seed, tolerances: job.tolerances, ..SolverOptions::default() };
    if let Some(k) = job.order {
        o.order = k;
    }
    if let Some(k) = job.per_stratum {
        o.per_stratum = k;
    }
    o
}

/// Right-hand side components on the germ of the first band.
fn parse_rhs(src: &[String], op: &OperatorSpec, bands: &[Band]) -> Outcome<Vec<HoloFn>> {
    if src.len() != op.m() {
        return Err(input(format!("rhs has {} components, operator has m = {}", src.len(), op.m())));
    }
    let b = &bands[0];
    let center = 0.5 * (b.lower().value_at_0() + b.upper().value_at_0());
    let reg = Cover::target(b, b.radius());
    src.iter().map(|s| HoloFn::parse(s, reg.clone(), center).map_err(Failure::from)).collect()
}

fn analyze(job: &JobSpec) -> Outcome<i32> {
    let op = operator(job);
    let ep = exponential_parts(op)?;
    let ff = formal_fundamental(op, &ep, job.order.unwrap_or(sectoria::turrittin::DEFAULT_ORDER))?;
    let s = ff.cert.sector;
    let residuals = (0..5)
        .map(|k| {
            let z = s.point(0.1 + 0.2 * k as f64, 0.0);
            Ok(ResidualSample { z, residual: ff.residual(z, s.tau)? })
        })
        .collect::<sectoria::Result<_>>()?;
    let out = Analysis {
        schema: SCHEMA.into(),
        operator: op.clone(),
        amplitude_bounds: ep.lambdas.iter().map(amplitude_bound).collect::<sectoria::Result<_>>()?,
        lambdas: ep.lambdas.iter().map(|p| p.to_string()).collect(),
        exponential_part: ep,
        fundamental: Fundamental {
            order: ff.order(),
            rho: ff.rho(),
            has_log: ff.has_log(),
            growth: ff.cert.clone(),
            residuals,
        },
    };
    write_json(&job.output, "analysis.json", &out)?;
    Ok(0)
}

fn cover(job: &JobSpec) -> Outcome<i32> {
    let bands = bands(job)?;
    let (mut max_amp, mut max_radius) = (job.max_amplitude.unwrap_or(std::f64::consts::PI), f64::INFINITY);
    if let Some(op) = &job.operator {
        max_radius = op.disc_radius();
        for lam in exponential_parts(op)?.lambdas {
            let b = amplitude_bound(&lam)?;
            max_amp = max_amp.min(b.alpha);
            max_radius = max_radius.min(b.rho_star.unwrap_or(f64::INFINITY));
        }
    }
    let radius = bands.iter().map(Band::radius).fold(max_radius, f64::min);
    let co = CoverOptions { seed: job.seed, ..CoverOptions::new(max_amp, radius) };
    let covers = bands.iter().map(|b| cover_band(b, &co)).collect::<sectoria::Result<_>>()?;
    let out = CoverReport { schema: SCHEMA.into(), seed: job.seed, max_amplitude: max_amp, max_radius: radius, covers };
    write_json(&job.output, "cover.json", &out)?;
    Ok(0)
}

fn region_kind(r: &Region) -> &'static str {
    match r {
        Region::Sector(_) => "sector",
        Region::SectorImage { .. } => "sector-image",
        Region::Intersection(ch) if ch.iter().any(|c| matches!(c, Region::SectorImage { .. })) => "sector-image",
        _ => "region",
    }
}

fn samples_of(rep: &SolveReport, op: &OperatorSpec, g: &[HoloFn]) -> Outcome<Vec<SampleRow>> {
    let mut rows = Vec::new();
    for p in &rep.pieces {
        let Some(sol) = &p.solution else { continue };
        for w in residual_samples(&sol.valid).into_iter().step_by(4) {
            let z = sol.z_of(w);
            let u = sol.eval_w(w)?;
            let residual = sol.residual(op, g, &[w])?;
            let delta = boundary_distance(&p.region, z, 256)?;
            for (i, ui) in u.iter().enumerate() {
                rows.push(SampleRow { piece: p.id, component: i, z_re: z.re, z_im: z.im, u_re: ui.re, u_im: ui.im, residual, delta });
            }
        }
    }
    Ok(rows)
}

fn solve_exit(rep: &SolveReport) -> i32 {
    match rep.verdict {
        SolveVerdict::Solved => 0,
        SolveVerdict::Partial => 2,
        SolveVerdict::Failed => {
            if rep.pieces.iter().all(|p| p.error_kind == Some(ErrorKind::Hypothesis)) {
                3
            } else {
                4
            }
        }
    }
}

fn solve(job: &JobSpec) -> Outcome<i32> {
    let op = operator(job);
    let bands = bands(job)?;
    let g = parse_rhs(&job.rhs, op, &bands)?;
    let rep = cover_and_solve(op, &bands, &g, &options(job))?;
    write_json(&job.output, "report.json", &rep)?;
    write_csv(&job.output, "samples.csv", &samples_of(&rep, op, &g)?)?;
    let pieces: Vec<PieceRow> = rep
        .pieces
        .iter()
        .map(|p| PieceRow {
            piece: p.id,
            kind: region_kind(&p.region),
            residual: p.residual,
            residual_bound: p.residual_bound,
            m: p.certificate.as_ref().map(|c| c.m),
            verdict: p.certificate.as_ref().map(|c| serde_json::to_value(c.verdict).unwrap().as_str().unwrap().to_string()),
            error: p.error.as_deref(),
        })
        .collect();
    write_csv(&job.output, "pieces.csv", &pieces)?;
    Ok(solve_exit(&rep))
}

fn check_pullback(job: &JobSpec) -> Outcome<i32> {
    let Some(RegionSpec::ChartImage { chart, sector }) = &job.region else { unreachable!("validated") };
    let chart = Arc::new(chart.clone());
    let src = job.function.as_deref().expect("validated");
    let img = Region::SectorImage { chart: chart.clone(), sector: *sector };
    let h = HoloFn::parse(src, img, chart.z_branch_center())?;
    let mut so = SamplingOptions::default().with_seed(job.seed);
    if let Some(k) = job.per_stratum {
        so = so.with_per_stratum(k);
    }
    let report = pullback_temperedness_check_with(&h, &chart, sector, &so)?;
    let code = if report.consistent == Some(true) { 0 } else { 2 };
    let out = PullbackDoc {
        schema: SCHEMA.into(),
        seed: job.seed,
        function: src.into(),
        chart: (*chart).clone(),
        sector: *sector,
        report,
    };
    write_json(&job.output, "pullback.json", &out)?;
    Ok(code)
}

fn experiment(job: &JobSpec) -> Outcome<i32> {
    let op = operator(job);
    let bands = bands(job)?;
    let trials = job.trials.iter().map(|t| parse_rhs(t, op, &bands)).collect::<Outcome<Vec<_>>>()?;
    let rep: ExperimentReport = h1_comparison_experiment(op, &bands, &trials, &options(job))?;
    write_json(&job.output, "experiment.json", &rep)?;
    Ok(match rep.success_fraction {
        None => 0,
        Some(f) if f == 1.0 => 0,
        Some(_) => 2,
    })
}
