#![allow(dead_code)]

use gapbound::{BoxRegion, FeasibleSet, Polynomial, PolynomialMap, ViInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `F(x) = (x2 − 1, x1 x2 − 1)` on the whole plane.
pub fn ray_instance() -> ViInstance {
    let f1 = Polynomial::from_pairs(2, &[(1.0, &[0, 1]), (-1.0, &[0, 0])]).unwrap();
    let f2 = Polynomial::from_pairs(2, &[(1.0, &[1, 1]), (-1.0, &[0, 0])]).unwrap();
    let f = PolynomialMap::new(2, vec![f1, f2]).unwrap();
    ViInstance::new(f, FeasibleSet::whole_space(2), 1.0).unwrap()
}

/// `F(x) = x` on `[0, ∞)`.
pub fn identity_halfline() -> ViInstance {
    ViInstance::new(PolynomialMap::identity(1), FeasibleSet::nonnegative_orthant(1), 1.0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn exponents_up_to(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; n]];
    for _ in 0..d {
        let mut next = Vec::new();
        for e in &out {
            for i in 0..n {
                let mut f = e.clone();
                f[i] += 1;
                next.push(f);
            }
        }
        out.extend(next);
    }
    out.sort();
    out.dedup();
    out
}

/// Dense-ish random polynomial of degree at most `d` with coefficients in [-1, 1].
pub fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, d: u32) -> Polynomial {
    let terms: Vec<(f64, Vec<u32>)> = exponents_up_to(n, d)
        .into_iter()
        .filter_map(|e| rng.gen_bool(0.7).then(|| (rng.gen_range(-1.0..=1.0), e)))
        .collect();
    let pairs: Vec<(f64, &[u32])> = terms.iter().map(|(c, e)| (*c, e.as_slice())).collect();
    Polynomial::from_pairs(n, &pairs).unwrap()
}

pub fn random_map(rng: &mut ChaCha8Rng, n: usize, d: u32) -> PolynomialMap {
    let comps = (0..n).map(|_| random_polynomial(rng, n, d)).collect();
    PolynomialMap::new(n, comps).unwrap()
}

pub fn affine_constraint(a: &[f64], b: f64) -> Polynomial {
    Polynomial::affine(a, b)
}

/// `[-1, 1]^n` cut by two random half-spaces through the interior, so the
/// origin stays feasible.
pub fn random_polytope(rng: &mut ChaCha8Rng, n: usize) -> FeasibleSet {
    let mut ineqs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        ineqs.push(affine_constraint(&e, -1.0));
        e[i] = -1.0;
        ineqs.push(affine_constraint(&e, -1.0));
    }
    for _ in 0..2 {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        ineqs.push(affine_constraint(&a, -rng.gen_range(0.2..=0.8)));
    }
    let region = BoxRegion::new(vec![-1.0; n], vec![1.0; n]).unwrap();
    FeasibleSet::new(n, ineqs, vec![], true, Some(region)).unwrap()
}

pub fn random_box(rng: &mut ChaCha8Rng, n: usize) -> BoxRegion {
    let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=0.0)).collect();
    let hi = lo.iter().map(|l| l + rng.gen_range(0.5..=1.0)).collect();
    BoxRegion::new(lo, hi).unwrap()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
