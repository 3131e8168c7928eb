mod common;

use common::*;
use gapbound::{
    estimate_zero_set, sample_cloud, verify_error_bound, Alpha, BoxRegion, Exec, SampleCloud, Verdict, ViInstance,
    ZeroSetConfig, ZeroSetEstimate,
};
use proptest::prelude::*;
use rand::Rng;

fn strongly_monotone(seed: u64, n: usize) -> ViInstance {
    let mut r = rng(seed);
    let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect()).collect();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect();
    let f = gapbound::PolynomialMap::affine(&a, &b).unwrap();
    ViInstance::new(f, random_polytope(&mut r, n), 1.0).unwrap()
}

fn report_text(inst: &ViInstance, seed: u64) -> (String, String) {
    let region = BoxRegion::new(vec![-1.0; inst.dim()], vec![1.0; inst.dim()]).unwrap();
    let cloud = sample_cloud(inst, &region, 40, seed).unwrap();
    let zero = estimate_zero_set(inst, &region, &ZeroSetConfig { seed, ..ZeroSetConfig::default() }).unwrap();
    let report = verify_error_bound(inst, &cloud, &zero, &Alpha::ratio(1, 2)).unwrap();
    (report.to_csv(), serde_json::to_string(&report.summary()).unwrap())
}

#[test]
fn reports_are_deterministic_and_mode_independent() {
    for seed in 0..4 {
        let inst = strongly_monotone(seed, 1 + seed as usize % 3);
        let first = report_text(&inst, seed);
        assert_eq!(first, report_text(&inst, seed));
        assert_eq!(first, report_text(&inst.clone().with_exec(Exec::Sequential), seed));
    }
}

#[test]
fn ray_ratio_grows_tenfold() {
    let inst = ray_instance();
    let ray = SampleCloud::sequence(vec![vec![2.0, 0.5], vec![40.0, 1.0 / 40.0]]);
    let zero = ZeroSetEstimate::new(vec![vec![1.0, 1.0]], 1e-12);
    for alpha in [Alpha::ratio(1, 2), Alpha::ratio(1, 6), Alpha::ratio(1, 648)] {
        let report = verify_error_bound(&inst, &ray, &zero, &alpha).unwrap();
        // rows are sorted by psi, which increases along the ray
        let growth = (report.rows[0].log_ratio - report.rows[1].log_ratio).exp();
        assert!(growth >= 10.0, "alpha {alpha}: growth {growth}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn smaller_exponent_never_hurts(seed in any::<u64>(), n in 1usize..=3) {
        let inst = strongly_monotone(seed, n);
        let region = BoxRegion::new(vec![-1.0; n], vec![1.0; n]).unwrap();
        let mut cloud = sample_cloud(&inst, &region, 30, seed).unwrap();
        cloud.points.retain(|x| inst.psi(x).unwrap() <= 1.0);
        let zero = estimate_zero_set(&inst, &region, &ZeroSetConfig { seed, ..ZeroSetConfig::default() }).unwrap();
        let alphas = [Alpha::ratio(1, 2), Alpha::ratio(1, 6), Alpha::ratio(1, 648), Alpha::ratio(1, 139_968)];
        let mut previous: Option<(Verdict, f64)> = None;
        for alpha in &alphas {
            let report = verify_error_bound(&inst, &cloud, &zero, alpha).unwrap();
            if let (Some((Verdict::Holds, c_prev)), Some(c)) = (previous, report.c_star) {
                prop_assert_eq!(report.verdict, Verdict::Holds);
                prop_assert!(c >= c_prev);
            }
            previous = report.c_star.map(|c| (report.verdict, c));
        }
    }
}

#[test]
fn ray_instance_fit_near_zero() {
    let inst = ray_instance();
    let region = BoxRegion::new(vec![0.5; 2], vec![1.5; 2]).unwrap();
    let cloud = sample_cloud(&inst, &region, 200, 21).unwrap();
    let zero = estimate_zero_set(&inst, &region, &ZeroSetConfig { seed: 21, ..ZeroSetConfig::default() }).unwrap();
    assert_eq!(zero.points.len(), 1);
    let report = verify_error_bound(&inst, &cloud, &zero, &Alpha::ratio(1, 2)).unwrap();
    let fitted = report.fitted_alpha.unwrap();
    assert!((fitted - 0.5).abs() <= 0.1, "fitted {fitted}");
}

#[test]
fn ray_instance_gradient_inequality() {
    let inst = ray_instance();
    let xbar = [1.0, 1.0];
    let cloud = sample_cloud(&inst, &BoxRegion::around(&xbar, 0.25), 200, 8)
        .unwrap()
        .restrict_to_ball(&xbar, 0.25);
    let alpha = Alpha::reciprocal(&gapbound::r_function(10, 4).unwrap());
    let report = gapbound::verify_lojasiewicz(&inst, &xbar, 0.25, &cloud, &alpha).unwrap();
    assert_eq!(report.verdict, Verdict::Holds);
    assert!(report.c_star.unwrap() > 1e-12);
}
