mod common;

use common::*;
use gapbound::{ArgmaxStrategy, BoxRegion, FeasibleSet, Polynomial, PolynomialMap, ViInstance};
use proptest::prelude::*;
use rand::Rng;

fn polytope_instance(seed: u64, n: usize) -> ViInstance {
    let mut r = rng(seed);
    let omega = random_polytope(&mut r, n);
    ViInstance::new(random_map(&mut r, n, 2), omega, r.gen_range(0.5..=2.0)).unwrap()
}

fn feasible_point(inst: &ViInstance, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let z: Vec<f64> = (0..inst.dim()).map(|_| r.gen_range(-1.5..=1.5)).collect();
    inst.omega().project(&z).unwrap()
}

fn unit_circle() -> FeasibleSet {
    let circle = Polynomial::from_pairs(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])]).unwrap();
    let frame = BoxRegion::new(vec![-1.5; 2], vec![1.5; 2]).unwrap();
    FeasibleSet::new(2, vec![], vec![circle], false, Some(frame)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_is_nonnegative_and_dominates_phi(seed in any::<u64>(), n in 1usize..=3) {
        let inst = polytope_instance(seed, n);
        let x = feasible_point(&inst, seed ^ 7);
        let psi = inst.psi(&x).unwrap();
        prop_assert!(psi >= 0.0);
        for k in 0..8 {
            let y = feasible_point(&inst, seed ^ (100 + k));
            prop_assert!(psi >= inst.phi(&x, &y).unwrap() - 1e-12 * (1.0 + psi.abs()));
        }
    }

    #[test]
    fn residual_below_every_generator(seed in any::<u64>(), n in 1usize..=3) {
        let inst = polytope_instance(seed, n);
        let x = feasible_point(&inst, seed ^ 9);
        let (res, _) = inst.stationarity_residual(&x).unwrap();
        for g in inst.clarke_generators(&x).unwrap() {
            prop_assert!(res <= norm(&g) + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn residual_below_every_generator_on_circle(theta in 0.0f64..std::f64::consts::TAU, seed in any::<u64>()) {
        let f = random_map(&mut rng(seed), 2, 2);
        let inst = ViInstance::new(f, unit_circle(), 1.0).unwrap();
        let x = [theta.cos(), theta.sin()];
        let (res, _) = inst.stationarity_residual(&x).unwrap();
        for g in inst.clarke_generators(&x).unwrap() {
            prop_assert!(res <= norm(&g) + 1e-9);
        }
    }

    #[test]
    fn multistart_matches_projection_on_boxes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let region = random_box(&mut r, 2);
        let inst = ViInstance::new(random_map(&mut r, 2, 2), FeasibleSet::from_box(&region), 1.0).unwrap();
        let x: Vec<f64> = (0..2).map(|i| r.gen_range(region.lo[i]..=region.hi[i])).collect();
        let a = inst.psi_with(&x, ArgmaxStrategy::Projection).unwrap();
        let b = inst.psi_with(&x, ArgmaxStrategy::Multistart).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{} vs {}", a, b);
    }
}

/// Excess of `from` over `to`: the largest distance from a point of `from`
/// to the nearest point of `to`.
fn excess(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn holder_slope(inst: &ViInstance, xbar: &[f64], direction: &[f64], strategy: ArgmaxStrategy) -> f64 {
    let base = inst.argmax_set_with(xbar, strategy).unwrap();
    let mut pts = Vec::new();
    for k in 0..10 {
        let t = 10f64.powf(-3.0 + 2.5 * k as f64 / 9.0);
        let x: Vec<f64> = xbar.iter().zip(direction).map(|(a, d)| a + t * d).collect();
        let e = excess(&inst.argmax_set_with(&x, strategy).unwrap(), &base);
        if e > 0.0 {
            pts.push((t.ln(), e.ln()));
        }
    }
    assert!(pts.len() >= 5, "too few nonzero excess values");
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn argmax_map_is_upper_holder_on_polytopes() {
    for seed in 0..5 {
        let inst = polytope_instance(300 + seed, 2);
        let xbar = feasible_point(&inst, seed);
        let slope = holder_slope(&inst, &xbar, &[0.6, -0.8], ArgmaxStrategy::Projection);
        assert!(slope > 0.0, "seed {seed}: slope {slope}");
    }
}

#[test]
fn argmax_map_is_upper_holder_on_circle() {
    let f = PolynomialMap::affine(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[0.5, 0.0]).unwrap();
    let inst = ViInstance::new(f, unit_circle(), 1.0).unwrap();
    let slope = holder_slope(&inst, &[0.6, 0.8], &[0.0, 1.0], ArgmaxStrategy::Multistart);
    assert!(slope > 0.0, "slope {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn instance_json_round_trips(seed in any::<u64>(), n in 1usize..=3) {
        let inst = polytope_instance(seed, n);
        // constant maps are rejected on load
        prop_assume!(inst.map().components().iter().any(|c| c.degree() >= 1));
        let again = ViInstance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(again.map(), inst.map());
        prop_assert_eq!(again.omega().ineqs(), inst.omega().ineqs());
        prop_assert_eq!(again.omega().declared_convex(), inst.omega().declared_convex());
        prop_assert_eq!(again.rho(), inst.rho());
        prop_assert_eq!(again.to_json(), inst.to_json());
    }
}
