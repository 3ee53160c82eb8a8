use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use widthcalc::certificate::{enumerate_certificates, psi, SearchOptions};
use widthcalc::exponents::{phi, ExponentVector};
use widthcalc::family::{BallFamily, BallSpec};
use widthcalc::harness::{general_position_family, RandomBounds};
use widthcalc::oracle::objective;

fn family(seed: u64, index: u64) -> BallFamily {
    general_position_family(seed, index, &RandomBounds::default()).unwrap()
}

fn log_psi(f: &BallFamily) -> f64 {
    psi(f, &SearchOptions::default()).unwrap().log_psi.get()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariant_under_ball_order(seed in 0u64..1000, index in 0u64..50, shuffle in any::<u64>()) {
        let f = family(seed, index);
        let mut balls = f.balls().to_vec();
        balls.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let g = f.with_balls(balls).unwrap();
        let (a, b) = (psi(&f, &SearchOptions::default()).unwrap(), psi(&g, &SearchOptions::default()).unwrap());
        prop_assert_eq!(a.log_psi, b.log_psi);
        prop_assert_eq!(a.best.id(), b.best.id());
    }

    #[test]
    fn homogeneous_in_radii(seed in 0u64..1000, index in 0u64..50, log_c in -3.0f64..3.0) {
        let f = family(seed, index);
        let balls = f
            .balls()
            .iter()
            .map(|b| BallSpec::from_log_nu(b.label.clone(), b.log_nu + log_c, b.u.clone()).unwrap())
            .collect();
        let g = f.with_balls(balls).unwrap();
        prop_assert!((log_psi(&g) - log_psi(&f) - log_c).abs() <= 1e-9);
    }

    #[test]
    fn adding_a_ball_never_increases(seed in 0u64..1000, index in 0u64..50, extra in prop::collection::vec(0.0f64..=1.0, 3), log_nu in -3.0f64..3.0) {
        let f = family(seed, index);
        let mut balls = f.balls().to_vec();
        let u = ExponentVector::new(extra[..f.dim()].to_vec()).unwrap();
        balls.push(BallSpec::from_log_nu("extra", log_nu, u).unwrap());
        let g = f.with_balls(balls).unwrap();
        prop_assert!(log_psi(&g) <= log_psi(&f) + 1e-12);
    }

    #[test]
    fn certificates_are_well_formed(seed in 0u64..1000, index in 0u64..50) {
        let f = family(seed, index);
        let uq = f.q().uq();
        let certs = enumerate_certificates(&f, &SearchOptions::default()).unwrap();
        prop_assert!(!certs.is_empty());
        for c in &certs {
            prop_assert_eq!(c.tuple.len(), c.m);
            prop_assert_eq!(c.active.len(), c.m - 1);
            prop_assert!((c.lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(c.lambda.iter().all(|&l| l > 0.0));
            for &i in &c.active {
                prop_assert!((c.theta_u[i] - uq).abs() <= 1e-9);
            }
            let nu: f64 = c.tuple.iter().zip(&c.lambda).map(|(&a, l)| l * f.balls()[a].log_nu).sum();
            let value = nu + phi(&c.theta_u, f.ks(), f.q()).unwrap().get();
            prop_assert!((value - c.log_value.get()).abs() <= 1e-12 * (1.0 + value.abs()));
        }
        let best = certs.iter().map(|c| c.log_value.get()).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(best, log_psi(&f));
    }

    #[test]
    fn bounded_by_any_weighting(seed in 0u64..1000, index in 0u64..50, w_seed in any::<u64>()) {
        let f = family(seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(w_seed);
        let raw: Vec<f64> = (0..f.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
        prop_assert!(log_psi(&f) <= objective(&f, &w).unwrap().get() + 1e-12);
    }
}

#[test]
fn single_ball_is_its_own_certificate() {
    let f = BallFamily::from_json(r#"{"q":1.5,"k":[10,20,30],"balls":[{"nu":3,"p":[1,2,"inf"]}]}"#)
        .unwrap();
    let r = psi(&f, &SearchOptions::default()).unwrap();
    let want = 3.0 * 10f64.powf(0.0) * 20f64.powf(2.0 / 3.0 - 0.5) * 30f64.powf(2.0 / 3.0);
    assert!((r.psi() - want).abs() <= 1e-12 * want);
    assert_eq!(r.best.id(), "m1:b1:I");
}
