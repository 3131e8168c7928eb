use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gapbound::{
    estimate_zero_set, sample_cloud, verify_error_bound, Alpha, ArgmaxStrategy, BoxRegion, Exec, FeasibleSet,
    Polynomial, PolynomialMap, ViInstance, ZeroSetConfig, ZeroSetEstimate,
};

fn ray_instance() -> ViInstance {
    let f1 = Polynomial::from_pairs(2, &[(1.0, &[0, 1]), (-1.0, &[0, 0])]).unwrap();
    let f2 = Polynomial::from_pairs(2, &[(1.0, &[1, 1]), (-1.0, &[0, 0])]).unwrap();
    let f = PolynomialMap::new(2, vec![f1, f2]).unwrap();
    ViInstance::new(f, FeasibleSet::whole_space(2), 1.0).unwrap()
}

fn disk_instance() -> ViInstance {
    let disk = Polynomial::from_pairs(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])]).unwrap();
    let frame = BoxRegion::new(vec![-1.0; 2], vec![1.0; 2]).unwrap();
    let omega = FeasibleSet::new(2, vec![disk], vec![], false, Some(frame)).unwrap();
    ViInstance::new(ray_instance().map().clone(), omega, 1.0).unwrap()
}

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn error_bound(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_error_bound");
    let region = BoxRegion::new(vec![0.0; 2], vec![2.0; 2]).unwrap();
    let base = ray_instance();
    let cloud = sample_cloud(&base, &region, 2000, 1).unwrap();
    let zero = ZeroSetEstimate::new(vec![vec![1.0, 1.0]], 1e-12);
    for (name, exec) in MODES {
        let inst = base.clone().with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_error_bound(&inst, &cloud, &zero, &Alpha::ratio(1, 2)).unwrap())
        });
    }
    group.finish();
}

fn multistart(c: &mut Criterion) {
    let mut group = c.benchmark_group("multistart_psi");
    group.sample_size(20);
    for (name, exec) in MODES {
        let inst = disk_instance().with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| inst.psi_with(&[0.3, -0.2], ArgmaxStrategy::Multistart).unwrap())
        });
    }
    group.finish();
}

fn grid_argmax(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_argmax");
    let inst = ray_instance();
    let x = [0.4, 1.7];
    let fx = inst.map().eval(&x).unwrap();
    let side = 1000;
    let phi = |k: usize| {
        let y = [2.0 * (k / side) as f64 / side as f64, 2.0 * (k % side) as f64 / side as f64];
        let d = [x[0] - y[0], x[1] - y[1]];
        fx[0] * d[0] + fx[1] * d[1] - 0.5 * (d[0] * d[0] + d[1] * d[1])
    };
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.argmax_range(side * side, phi).unwrap())
        });
    }
    group.finish();
}

fn zero_set(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_zero_set");
    group.sample_size(10);
    let region = BoxRegion::new(vec![0.0; 2], vec![2.0; 2]).unwrap();
    for (name, exec) in MODES {
        let inst = ray_instance().with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| estimate_zero_set(&inst, &region, &ZeroSetConfig::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, error_bound, multistart, grid_argmax, zero_set);
criterion_main!(benches);
