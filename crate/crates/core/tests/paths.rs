use std::f64::consts::PI;

use proptest::prelude::*;
use sectoria::geometry::Sector;
use sectoria::honda::{admissible_sector, build_path, phase_ok};
use sectoria::puiseux::PuiseuxPoly;
use sectoria::Complex64 as C;

fn lead(k: u32, phi: f64) -> PuiseuxPoly {
    let a = C::from_polar(1.0, phi);
    PuiseuxPoly::parse(&format!("({}+{}i)*z^(-{k})", a.re, a.im)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn paths_keep_the_kernel_bounded(
        k in 1u32..4,
        phi in -PI..PI,
        tau in -PI..PI,
        eta in 0.05f64..0.4,
        t in 0.01f64..1.0,
        u in -1.0f64..1.0,
    ) {
        let p = lead(k, phi);
        let s0 = Sector::new(tau, eta * PI / k as f64, 0.5).unwrap();
        let s = admissible_sector(&p, &s0).unwrap();
        let z = s.point(t, u);
        let path = build_path(&p, &s0, z).unwrap();
        prop_assert!(path.inside(&s0));
        prop_assert!((path.end - z).norm() <= 1e-12 * z.norm().max(1.0));
        let f = |w: C| p.eval(w, s0.tau);
        prop_assert!(phase_ok(&path, &f, z).unwrap());
    }
}
