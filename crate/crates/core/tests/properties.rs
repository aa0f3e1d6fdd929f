//! Property tests for the library invariants that hold on whole parameter
//! ranges rather than at specific points.

use mirror_channel::channel::{classify, ChannelClass};
use mirror_channel::specfun::lambert_w0;
use mirror_channel::trajectory::{ray_f, ray_p, RayMap, Trajectory};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lambert_w0_satisfies_its_equation(x in -0.9999f64..500.0) {
        let x = if x < -1.0 / std::f64::consts::E { -1.0 / std::f64::consts::E } else { x };
        let w = lambert_w0(x).unwrap();
        prop_assert!(w >= -1.0);
        let resid = (w * w.exp() - x).abs();
        prop_assert!(resid <= 1e-13 * x.abs().max(1.0), "x={x}: residual {resid:e}");
    }

    #[test]
    fn ray_maps_invert_each_other(
        u in -20.0f64..20.0,
        kappa in 0.1f64..5.0,
        xi in 0.05f64..0.9,
        nu in 0.1f64..3.0,
    ) {
        for traj in [
            Trajectory::carlitz_willey(kappa).unwrap(),
            Trajectory::darcx(xi, nu).unwrap(),
        ] {
            let v = ray_p(&RayMap::p_of_u(traj.clone()), u).unwrap();
            if let Some(v0) = traj.horizon_v0() {
                prop_assert!(v < v0);
            }
            let back = ray_f(&RayMap::f_of_v(traj), v).unwrap();
            prop_assert!((back - u).abs() <= 1e-9 * (1.0 + u.abs()), "f(p({u})) = {back}");
        }
    }

    #[test]
    fn ray_p_is_monotone(
        u in -15.0f64..15.0,
        du in 1e-4f64..2.0,
        kappa in 0.2f64..4.0,
    ) {
        let map = RayMap::p_of_u(Trajectory::carlitz_willey(kappa).unwrap());
        let a = ray_p(&map, u).unwrap();
        let b = ray_p(&map, u + du).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn classification_bands_partition(tau in 0.0f64..5.0) {
        let tol = 1e-9;
        let class = classify(tau, tol).unwrap();
        let expected = if tau <= tol {
            ChannelClass::Erasure
        } else if (tau - 1.0).abs() <= tol {
            ChannelClass::ClassicalAdditive
        } else if tau > 1.0 {
            ChannelClass::Amplifier
        } else {
            ChannelClass::Attenuator
        };
        prop_assert_eq!(class, expected);
    }

    #[test]
    fn thermal_weight_ordering(
        omega in 0.05f64..5.0,
        omega_prime in 0.05f64..5.0,
        kappa in 0.1f64..3.0,
    ) {
        // |α| > |β| > 0 always, with the Boltzmann-like ratio.
        let pair = mirror_channel::bogoliubov::cw_coefficients(omega, omega_prime, kappa).unwrap();
        prop_assert!(pair.beta.norm() > 0.0);
        prop_assert!(pair.alpha.norm() > pair.beta.norm());
        let ratio = pair.alpha.norm() / pair.beta.norm();
        let expect = (std::f64::consts::PI * omega / kappa).exp();
        prop_assert!((ratio / expect - 1.0).abs() < 1e-10);
    }
}
