use super::*;
use crate::geometry::CurveSpec;
use crate::poly::Poly;
use crate::puiseux::PuiseuxPoly;

fn op(m: usize, n: usize, a: &[&str], r: f64) -> OperatorSpec {
    let rows = (0..m).map(|i| (0..m).map(|j| Poly::parse(a[i * m + j]).unwrap()).collect()).collect();
    OperatorSpec::new(m, n, rows, r).unwrap()
}

fn band(lo: &str, hi: &str, r: f64) -> Band {
    Band::new(
        CurveSpec::new(PuiseuxPoly::parse(lo).unwrap(), r).unwrap(),
        CurveSpec::new(PuiseuxPoly::parse(hi).unwrap(), r).unwrap(),
    )
    .unwrap()
}

fn rhs(src: &[&str], b: &Band) -> Vec<HoloFn> {
    let reg = Cover::target(b, b.radius());
    src.iter().map(|s| HoloFn::parse(s, reg.clone(), PI_).unwrap()).collect()
}

const PI_: f64 = std::f64::consts::PI;

fn quick() -> SolverOptions {
    SolverOptions { per_stratum: 8, overlap_samples: 32, coverage_samples: 2000, ..SolverOptions::default() }
}

#[test]
fn thin_band_is_solved() {
    let o = op(1, 2, &["1"], 1.0);
    let b = band("3.0", "3.3", 0.5);
    let rep = cover_and_solve(&o, &[b.clone()], &rhs(&["1"], &b), &quick()).unwrap();
    for p in &rep.pieces {
        assert!(p.ok(), "{:?} {:?} {:?}", p.error, p.residual, p.certificate.as_ref().map(|c| c.verdict));
    }
    assert_eq!(rep.verdict, SolveVerdict::Solved);
    assert!(rep.coverage >= 0.999, "{}", rep.coverage);
}

#[test]
fn regular_singular_and_zero_rhs() {
    let o = op(1, 1, &["0.5"], 1.0);
    let b = band("0.5", "1.2", 0.5);
    let rep = cover_and_solve(&o, &[b.clone()], &rhs(&["1"], &b), &quick()).unwrap();
    assert_eq!(rep.verdict, SolveVerdict::Solved);
    assert!(rep.pieces.iter().flat_map(|p| &p.bases).all(|b| matches!(b, BasePoint::Vertex { .. })));

    let o = op(1, 2, &["1"], 1.0);
    let rep = cover_and_solve(&o, &[b.clone()], &rhs(&["0"], &b), &quick()).unwrap();
    assert_eq!(rep.verdict, SolveVerdict::Solved);
    assert!(rep.pieces.iter().all(|p| p.residual == Some(0.0) && p.solution.as_ref().unwrap().is_zero()));
}

#[test]
fn overlaps_glue_on_a_wide_band() {
    let o = op(1, 2, &["1"], 1.0);
    let b = band("2.0", "4.2", 0.5);
    let rep = cover_and_solve(&o, &[b.clone()], &rhs(&["1 + z"], &b), &quick()).unwrap();
    assert_eq!(rep.verdict, SolveVerdict::Solved);
    assert!(rep.pieces.len() >= 3);
    assert!(!rep.overlaps.is_empty());
    for ov in &rep.overlaps {
        assert!(ov.pass, "{ov:?}");
        assert_eq!(ov.coefficients.len(), 1);
    }
    let me = mayer_vietoris_check(&rep, (0, 0), &quick());
    assert!(me.pass, "{me:?}");
    assert_eq!(me.fit_residual, 0.0);
    assert!(me.coefficients.iter().all(|c| c.norm() == 0.0));
}

#[test]
fn decoupled_system_on_cusp() {
    let o = op(2, 2, &["1", "0", "0", "-1"], 1.0);
    let b = band("3.0", "3.0 + z", 0.4);
    let rep = cover_and_solve(&o, &[b.clone()], &rhs(&["1", "z"], &b), &quick()).unwrap();
    for p in &rep.pieces {
        assert!(p.ok(), "{:?} {:?}", p.error, p.residual);
    }
    assert_eq!(rep.verdict, SolveVerdict::Solved);
}

#[test]
fn experiment_and_negative_control() {
    let o = op(1, 2, &["1"], 1.0);
    let b = band("3.0", "3.3", 0.5);
    let trials = vec![rhs(&["1"], &b), rhs(&["z^2 - 3*z"], &b), rhs(&["exp(1/z)"], &b)];
    let rep = h1_comparison_experiment(&o, &[b.clone()], &trials, &quick()).unwrap();
    assert_eq!(rep.trials.len(), 3);
    let nc = rep.negative_control.as_ref().unwrap();
    assert_eq!(nc.scope, TrialScope::OutOfScope);
    assert_eq!(rep.in_scope, rep.solved);
    assert_eq!(rep.success_fraction, Some(1.0));

    let empty = h1_comparison_experiment(&o, &[b], &[], &quick()).unwrap();
    assert!(empty.trials.is_empty() && empty.success_fraction.is_none() && empty.negative_control.is_none());
}

#[test]
fn report_is_deterministic_and_round_trips() {
    let o = op(1, 2, &["1"], 1.0);
    let b = band("3.0", "3.3", 0.5);
    let g = rhs(&["1"], &b);
    let a = serde_json::to_string(&cover_and_solve(&o, &[b.clone()], &g, &quick()).unwrap()).unwrap();
    let c = serde_json::to_string(&cover_and_solve(&o, &[b], &g, &quick()).unwrap()).unwrap();
    assert_eq!(a, c);
    let back: SolveReport = serde_json::from_str(&a).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), a);
}
