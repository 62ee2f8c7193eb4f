use proptest::prelude::*;

use radial_core::exponents::{fowler_params, hardy_threshold, kelvin_exponent, saddle_window, serrin};
use radial_core::fowler::{from_fowler, switch_l, to_fowler, PhysicalState};
use radial_core::problem::ProblemSpec;

proptest! {
    #[test]
    fn window_matches_linearization_determinant(n in 3u32..=10, t in 0.0f64..1.0, l in 2.01f64..20.0) {
        let eta = -5.0 + t * (hardy_threshold(n) - 1e-9 + 5.0);
        let fp = fowler_params(n, l).unwrap();
        let det = fp.alpha * fp.gamma + eta;
        prop_assume!(det.abs() > 1e-9);
        prop_assert_eq!(saddle_window(n, eta, l).unwrap(), det < 0.0);
    }

    #[test]
    fn window_matches_absolute_form_above_serrin(n in 3u32..=10, t in 0.0f64..1.0, dl in 0.01f64..20.0) {
        let l = serrin(n) + dl;
        let eta = -5.0 + t * (hardy_threshold(n) - 1e-9 + 5.0);
        let fp = fowler_params(n, l).unwrap();
        prop_assume!((eta - (fp.alpha * fp.gamma).abs()).abs() > 1e-9);
        prop_assert_eq!(saddle_window(n, eta, l).unwrap(), eta < (fp.alpha * fp.gamma).abs());
    }

    #[test]
    fn kelvin_exponent_is_an_involution(n in 3u32..=10, dl in 1e-3f64..50.0) {
        let l = serrin(n) + dl;
        let back = kelvin_exponent(n, kelvin_exponent(n, l).unwrap()).unwrap();
        prop_assert!((back - l).abs() < 1e-12 * l.max(1.0));
    }

    #[test]
    fn fowler_roundtrip(r in 1e-6f64..1e6, u in -1e3f64..1e3, du in -1e3f64..1e3, l in 2.1f64..20.0, l2 in 2.1f64..20.0) {
        let p = PhysicalState { r, u, du };
        let s = to_fowler(p, l, 4).unwrap();
        let q = from_fowler(switch_l(s, l2).unwrap(), 4);
        prop_assert!((q.r - r).abs() <= 1e-14 * r);
        prop_assert!((q.u - u).abs() <= 1e-12 * u.abs().max(1.0));
        prop_assert!((q.du - du).abs() <= 1e-12 * du.abs().max(1.0));
    }

    #[test]
    fn dual_of_dual_evaluates_like_the_original(x in -3.0f64..3.0, t in -6.0f64..6.0) {
        let p = ProblemSpec::hardy_instance(0.5).unwrap();
        let back = p.kelvin_dual().unwrap().kelvin_dual().unwrap();
        prop_assert!((back.l_u - p.l_u).abs() < 1e-12);
        let (a, b) = (p.g(x, t, p.l_u), back.g(x, t, p.l_u));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300) + 1e-300);
        prop_assert!((p.h(t) - back.h(t)).abs() < 1e-14);
    }
}
