use super::*;
use crate::poly::Poly;
use crate::turrittin::{exponential_parts, formal_fundamental};
use approx::assert_abs_diff_eq;

fn pp(s: &str) -> PuiseuxPoly {
    PuiseuxPoly::parse(s).unwrap()
}

fn op(m: usize, n: usize, a: &[&str], r: f64) -> OperatorSpec {
    let rows = (0..m).map(|i| (0..m).map(|j| Poly::parse(a[i * m + j]).unwrap()).collect()).collect();
    OperatorSpec::new(m, n, rows, r).unwrap()
}

fn hf(src: &str, s: &Sector) -> HoloFn {
    HoloFn::parse(src, Region::Sector(*s), s.tau).unwrap()
}

/// `sup |z^N u′ + a u − g|` for a scalar solution.
fn scalar_residual(u: &HoloFn, n: u32, a: &HoloFn, g: &HoloFn) -> f64 {
    let Region::Sector(s) = u.domain else { panic!() };
    residual_samples(&s)
        .into_iter()
        .map(|z| {
            let h = 0.25 * s.boundary_distance(z);
            let du = cauchy_derivative(&mut |w| u.eval(w), z, h).unwrap();
            (z.powu(n) * du + a.eval(z).unwrap() * u.eval(z).unwrap() - g.eval(z).unwrap()).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn amplitude_bounds() {
    let b = amplitude_bound(&pp("z^(-1)")).unwrap();
    assert_abs_diff_eq!(b.alpha, PI / 2.0);
    assert_eq!(b.rho_star, None);
    assert_abs_diff_eq!(amplitude_bound(&PuiseuxPoly::zero()).unwrap().alpha, PI);
    assert_abs_diff_eq!(amplitude_bound(&pp("z^(-2)")).unwrap().alpha, PI / 4.0);
    assert_abs_diff_eq!(amplitude_bound(&pp("z^(-1/2)")).unwrap().alpha, PI);
    // |ρ^{-2}| ≥ 2·4ρ^{-1} ⇔ ρ ≤ 1/8
    let b = amplitude_bound(&pp("z^(-2) + 4*z^(-1)")).unwrap();
    assert_abs_diff_eq!(b.rho_star.unwrap(), 0.125, epsilon = 1e-12);
    assert!(matches!(amplitude_bound(&pp("z^(-1) + z")), Err(Error::Domain(_))));
}

#[test]
fn build_path_examples() {
    let right = Sector::new(0.0, PI / 4.0, 0.5).unwrap();
    let left = Sector::new(PI, PI / 4.0, 0.5).unwrap();
    let p = pp("z^(-1)");
    assert_eq!(build_path(&p, &right, C::new(0.1, 0.0)).unwrap().kind, PathKind::Vertex);
    let q = build_path(&p, &left, C::new(-0.1, 0.0)).unwrap();
    assert!(matches!(q.kind, PathKind::Outer | PathKind::OuterArc));
    assert!(q.inside(&left));
    assert_eq!(build_path(&PuiseuxPoly::zero(), &left, C::new(-0.1, 0.0)).unwrap().kind, PathKind::Vertex);
}

#[test]
fn integral_op_examples() {
    let s = Sector::new(0.0, PI / 4.0, 0.5).unwrap();
    let one = hf("1", &s);
    assert_abs_diff_eq!((integral_op(&PuiseuxPoly::zero(), &one, &s, C::new(0.3, 0.0)).unwrap() - 0.3).norm(), 0.0, epsilon = 1e-12);

    let left = Sector::new(PI, PI / 4.0, 0.5).unwrap();
    let p = pp("z^(-1)");
    let one = hf("1", &left);
    for z in [C::new(-0.2, 0.0), C::from_polar(0.2, PI - 0.6), C::from_polar(0.05, PI + 0.3)] {
        let e = integral_op_eval(&p, &one, &left, z).unwrap();
        assert!(e.max_phase <= PHASE_TOL);
        let h = 0.25 * left.boundary_distance(z);
        let du = cauchy_derivative(&mut |w| integral_op(&p, &one, &left, w), z, h).unwrap();
        // u′ − p′u = 1 with p′ = −1/z²
        assert!((du + e.value / (z * z) - 1.0).norm() < 1e-6, "{z}");
    }

    let inv = hf("1/z", &s);
    let v = integral_op(&p, &inv, &s, C::new(0.1, 0.0)).unwrap();
    assert!(v.is_finite());
}

#[test]
fn scalar_solutions() {
    let s = Sector::new(PI, PI / 4.0, 0.3).unwrap();
    let p = pp("z^(-1)");
    let (a, f) = (hf("1", &s), hf("1", &s));
    let g = hf("z", &s);
    let u = solve_scalar_sector(&p, 2, &a, &g, &s, &f).unwrap();
    assert!(scalar_residual(&u, 2, &a, &g) < 1e-6);
    let u0 = solve_scalar_sector(&p, 2, &a, &hf("0", &s), &s, &f).unwrap();
    assert!(u0.is_zero());
    // a wrong homogeneous factor is rejected
    assert!(matches!(solve_scalar_sector(&p, 2, &a, &g, &s, &hf("1 + z", &s)), Err(Error::Hypothesis(_))));

    // z u′ − u = 1: the antiderivative of z^{-2} diverges at the vertex
    let r = Sector::new(0.3, PI / 8.0, 0.4).unwrap();
    let (a, f, g) = (hf("-1", &r), hf("z", &r), hf("1", &r));
    let u = solve_scalar_sector(&PuiseuxPoly::zero(), 1, &a, &g, &r, &f).unwrap();
    assert!(scalar_residual(&u, 1, &a, &g) < 1e-6);
}

#[test]
fn decoupled_system_uses_both_base_points() {
    let o = op(2, 2, &["1", "0", "0", "-1"], 1.0);
    let ep = exponential_parts(&o).unwrap();
    let ff = formal_fundamental(&o, &ep, 20).unwrap();
    let s = Sector::new(PI, PI / 16.0, 0.3).unwrap();
    let g = vec![hf("z", &s), hf("z", &s)];
    let sol = solve_sector(&o, &ff, &ep, &g, &s).unwrap();
    let kinds: Vec<bool> = sol.bases.iter().map(|b| matches!(b, BasePoint::Vertex { .. })).collect();
    assert!(kinds.contains(&true) && kinds.contains(&false));
    assert!(sol.residual(&o, &g, &residual_samples(&sol.valid)).unwrap() < 1e-6);

    let zero = vec![hf("0", &s), hf("0", &s)];
    let u = solve_system_sector(&o, &ff, &ep, &zero, &s).unwrap();
    assert!(u.iter().all(|c| c.is_zero()));
}

#[test]
fn scalar_and_system_routes_agree() {
    let o = op(1, 2, &["1"], 1.0);
    let ep = exponential_parts(&o).unwrap();
    let ff = formal_fundamental(&o, &ep, 20).unwrap();
    let s = Sector::new(PI, PI / 4.0, 0.3).unwrap();
    let g = hf("1 + z^2", &s);
    let sys = solve_system_sector(&o, &ff, &ep, &[g.clone()], &s).unwrap();
    let sc = solve_scalar_sector(&ep.lambdas[0], 2, &hf("1", &s), &g, &s, &hf("1", &s)).unwrap();
    let Region::Sector(v) = sc.domain else { panic!() };
    for z in residual_samples(&v).into_iter().step_by(7) {
        assert!((sys[0].eval(z).unwrap() - sc.eval(z).unwrap()).norm() < 1e-9);
    }
}

#[test]
fn chart_images() {
    let o = op(1, 2, &["1"], 1.0);
    let ep = exponential_parts(&o).unwrap();
    let ff = formal_fundamental(&o, &ep, 20).unwrap();
    let s = Sector::new(PI, PI / 4.0, 0.3).unwrap();
    let g = vec![hf("1", &s)];
    let id = Arc::new(Chart::identity(s));
    let a = solve_chart_image(&o, &ep, &ff, &id, &s, &g).unwrap();
    let b = solve_sector(&o, &ff, &ep, &g, &s).unwrap();
    for w in residual_samples(&b.valid).into_iter().step_by(5) {
        assert!((a.eval_w(w).unwrap() - b.eval_w(w).unwrap()).norm() < 1e-9);
    }

    // φ(w) = w² sends S(π/2, π/8, 0.5) onto directions π ± π/4
    let ws = Sector::new(PI / 2.0, PI / 8.0, 0.5).unwrap();
    let sq = Arc::new(Chart::new(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)], ws).unwrap());
    let comp = compose_chart(&ep.lambdas[0], &sq, 8).unwrap();
    assert_eq!(comp.principal.to_string(), pp("z^(-2)").to_string());
    let zs = Sector::new(PI, PI / 4.0, 0.25).unwrap();
    let g = vec![hf("1", &zs)];
    let sol = solve_chart_image(&o, &ep, &ff, &sq, &ws, &g).unwrap();
    assert!(sol.residual(&o, &g, &residual_samples(&sol.valid)).unwrap() < 1e-6);
    let z = C::from_polar(0.1, PI + 0.2);
    let u = &sol.components()[0];
    assert!((u.eval(z).unwrap() - sol.eval_w(sq.invert(z).unwrap()).unwrap()[0]).norm() < 1e-12);
    let zero = solve_on_chart_image(&o, &ep, &ff, &sq, &ws, &[hf("0", &zs)]).unwrap();
    assert!(zero[0].is_zero());
}
