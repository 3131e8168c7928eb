mod common;

use common::*;
use gapbound::{extragradient, gap_descent, DescentParams, FeasibleSet, PolynomialMap, TerminalStatus, ViInstance};
use proptest::prelude::*;
use rand::Rng;

fn spd_instance(seed: u64, n: usize, orthant: bool) -> ViInstance {
    let mut r = rng(seed);
    let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect()).collect();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { 0.5 } else { 0.0 })
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..=2.0)).collect();
    let omega = if orthant {
        FeasibleSet::nonnegative_orthant(n)
    } else {
        FeasibleSet::whole_space(n)
    };
    ViInstance::new(PolynomialMap::affine(&a, &b).unwrap(), omega, 1.0).unwrap()
}

fn start(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed ^ 0xabc);
    (0..n).map(|_| r.gen_range(0.0..=2.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_points_are_stationary(seed in any::<u64>(), n in 1usize..=3, orthant in any::<bool>()) {
        let inst = spd_instance(seed, n, orthant);
        let solve_tol = inst.tolerances().solve_tol;
        let x0 = start(seed, n);
        let eg = extragradient(&inst, &x0, None, 200_000).unwrap();
        let gd = gap_descent(&inst, &x0, &DescentParams { max_iter: 200_000, ..DescentParams::default() }).unwrap();
        for trace in [eg, gd] {
            prop_assert_eq!(trace.status, TerminalStatus::Converged);
            let x = trace.solution.as_ref().unwrap();
            prop_assert!(inst.stationarity_residual(x).unwrap().0 <= 10.0 * solve_tol);
            prop_assert!(inst.psi(x).unwrap() <= 1e-10f64.max(10.0 * solve_tol * solve_tol));
        }
    }

    #[test]
    fn gap_descent_is_monotone(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let omega = random_polytope(&mut r, n);
        let inst = ViInstance::new(random_map(&mut r, n, 2), omega, 1.0).unwrap();
        let x0 = inst.omega().project(&start(seed, n)).unwrap();
        let trace = gap_descent(&inst, &x0, &DescentParams { max_iter: 500, ..DescentParams::default() }).unwrap();
        for w in trace.iterates.windows(2) {
            prop_assert!(w[1].psi <= w[0].psi + 1e-15);
        }
    }
}

#[test]
fn extragradient_converges_linearly_on_spd_maps() {
    for seed in 0..6 {
        let n = 1 + seed as usize % 3;
        let inst = spd_instance(seed, n, false);
        let trace = extragradient(&inst, &start(seed, n), None, 200_000).unwrap();
        assert_eq!(trace.status, TerminalStatus::Converged);
        let psis: Vec<f64> = trace.iterates.iter().map(|it| it.psi).filter(|p| *p > 1e-24).collect();
        let tail = &psis[psis.len() / 2..];
        let worst = tail.windows(2).map(|w| w[1] / w[0]).fold(0.0f64, f64::max);
        assert!(worst <= 1.0 - 1e-3, "seed {seed}: successive psi ratio {worst}");
    }
}

#[test]
fn gap_descent_reaches_ray_instance_zero() {
    let inst = ray_instance();
    let trace = gap_descent(&inst, &[1.2, 0.9], &DescentParams::default()).unwrap();
    assert_eq!(trace.status, TerminalStatus::Converged);
    let x = trace.solution.unwrap();
    assert!(dist(&x, &[1.0, 1.0]) <= 1e-8, "{x:?}");
    assert!(inst.psi(&x).unwrap() <= 1e-12);
}
