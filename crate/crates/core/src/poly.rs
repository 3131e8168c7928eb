//! Sparse multivariate polynomials and polynomial maps.
//!
//! Terms are stored normalized: merged by exponent vector, exact zeros
//! dropped, and sorted in graded lexicographic order. Evaluation always
//! accumulates in that order so results are bit-reproducible.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Exponent vector wrapper ordered by total degree, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct GradedKey(Vec<u32>);

impl Ord for GradedKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let da: u64 = self.0.iter().map(|&e| u64::from(e)).sum();
        let db: u64 = other.0.iter().map(|&e| u64::from(e)).sum();
        da.cmp(&db).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for GradedKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    #[serde(rename = "c")]
    pub coef: f64,
    #[serde(rename = "e")]
    pub exps: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    fn monomial(&self, x: &[f64]) -> f64 {
        let mut m = 1.0;
        for (xi, &e) in x.iter().zip(&self.exps) {
            if e > 0 {
                m *= xi.powi(e as i32);
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial", into = "RawPolynomial")]
pub struct Polynomial {
    n_vars: usize,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolynomial {
    n_vars: usize,
    terms: Vec<Term>,
}

impl TryFrom<RawPolynomial> for Polynomial {
    type Error = Error;

    fn try_from(raw: RawPolynomial) -> Result<Self> {
        Polynomial::new(raw.n_vars, raw.terms)
    }
}

impl From<Polynomial> for RawPolynomial {
    fn from(p: Polynomial) -> Self {
        RawPolynomial {
            n_vars: p.n_vars,
            terms: p.terms,
        }
    }
}

impl Polynomial {
    /// Builds a polynomial, merging repeated exponent vectors and dropping
    /// coefficients that are exactly zero.
    pub fn new(n_vars: usize, terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidInput("polynomial must have n_vars >= 1".into()));
        }
        let mut merged: BTreeMap<GradedKey, f64> = BTreeMap::new();
        for t in terms {
            if t.exps.len() != n_vars {
                return Err(Error::InvalidInput(format!(
                    "term exponent vector has length {}, expected {n_vars}",
                    t.exps.len()
                )));
            }
            if !t.coef.is_finite() {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
            *merged.entry(GradedKey(t.exps)).or_insert(0.0) += t.coef;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(k, coef)| Term { coef, exps: k.0 })
            .collect();
        Ok(Self { n_vars, terms })
    }

    pub fn zero(n_vars: usize) -> Self {
        Self {
            n_vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(n_vars: usize, c: f64) -> Self {
        Self::new(
            n_vars,
            [Term {
                coef: c,
                exps: vec![0; n_vars],
            }],
        )
        .expect("valid constant")
    }

    /// The coordinate polynomial `x_i` (0-based).
    pub fn var(n_vars: usize, i: usize) -> Self {
        let mut exps = vec![0; n_vars];
        exps[i] = 1;
        Self::new(n_vars, [Term { coef: 1.0, exps }]).expect("valid variable")
    }

    /// Affine polynomial `a·x + b`.
    pub fn affine(a: &[f64], b: f64) -> Self {
        let n = a.len();
        let mut terms = vec![Term {
            coef: b,
            exps: vec![0; n],
        }];
        for (i, &ai) in a.iter().enumerate() {
            let mut exps = vec![0; n];
            exps[i] = 1;
            terms.push(Term { coef: ai, exps });
        }
        Self::new(n, terms).expect("valid affine")
    }

    /// Shorthand for literal construction: `(coef, exponents)` pairs.
    pub fn from_pairs(n_vars: usize, pairs: &[(f64, &[u32])]) -> Result<Self> {
        Self::new(
            n_vars,
            pairs.iter().map(|&(coef, e)| Term {
                coef,
                exps: e.to_vec(),
            }),
        )
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_vars, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coef * t.monomial(x)).sum()
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_vars, x.len())?;
        Ok(self.grad_unchecked(x))
    }

    pub(crate) fn grad_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n_vars];
        for t in &self.terms {
            for (i, &ei) in t.exps.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                let mut m = t.coef * f64::from(ei);
                for (k, (&xk, &ek)) in x.iter().zip(&t.exps).enumerate() {
                    let p = if k == i { ek - 1 } else { ek };
                    if p > 0 {
                        m *= xk.powi(p as i32);
                    }
                }
                g[i] += m;
            }
        }
        g
    }

    /// Symbolic partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let terms = self.terms.iter().filter(|t| t.exps[i] > 0).map(|t| {
            let mut exps = t.exps.clone();
            exps[i] -= 1;
            Term {
                coef: t.coef * f64::from(t.exps[i]),
                exps,
            }
        });
        Polynomial::new(self.n_vars, terms).expect("derivative keeps arity")
    }

    /// Returns `(a, b)` with `self(x) = a·x + b` when the degree is at most one.
    pub fn as_affine(&self) -> Option<(Vec<f64>, f64)> {
        if self.degree() > 1 {
            return None;
        }
        let mut a = vec![0.0; self.n_vars];
        let mut b = 0.0;
        for t in &self.terms {
            match t.exps.iter().position(|&e| e == 1) {
                Some(i) => a[i] += t.coef,
                None => b += t.coef,
            }
        }
        Some((a, b))
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(self.n_vars, other.n_vars, "polynomial arity mismatch");
        let terms = self.terms.iter().cloned().chain(other.terms.iter().map(|t| Term {
            coef: sign * t.coef,
            exps: t.exps.clone(),
        }));
        Polynomial::new(self.n_vars, terms).expect("same arity")
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial::new(
            self.n_vars,
            self.terms.iter().map(|t| Term {
                coef: s * t.coef,
                exps: t.exps.clone(),
            }),
        )
        .expect("same arity")
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars, "polynomial arity mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(Term {
                    coef: a.coef * b.coef,
                    exps: a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect(),
                });
            }
        }
        Polynomial::new(self.n_vars, terms).expect("same arity")
    }
}

/// A polynomial map `R^n -> R^m`; for variational inequalities `m = n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct PolynomialMap {
    n_in: usize,
    components: Vec<Polynomial>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    n_in: usize,
    components: Vec<Polynomial>,
}

impl TryFrom<RawMap> for PolynomialMap {
    type Error = Error;
    fn try_from(raw: RawMap) -> Result<Self> {
        PolynomialMap::new(raw.n_in, raw.components)
    }
}

impl From<PolynomialMap> for RawMap {
    fn from(m: PolynomialMap) -> Self {
        RawMap {
            n_in: m.n_in,
            components: m.components,
        }
    }
}

impl PolynomialMap {
    pub fn new(n_in: usize, components: Vec<Polynomial>) -> Result<Self> {
        if n_in == 0 {
            return Err(Error::InvalidInput("map must have n_in >= 1".into()));
        }
        if let Some(bad) = components.iter().find(|p| p.n_vars() != n_in) {
            return Err(Error::InvalidInput(format!(
                "map component has {} variables, expected {n_in}",
                bad.n_vars()
            )));
        }
        Ok(Self { n_in, components })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| Polynomial::var(n, i)).collect()).expect("valid identity")
    }

    /// Affine map `x -> A x + b` with `A` given row-major.
    pub fn affine(a: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let n = b.len();
        if a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput("affine map needs a square matrix".into()));
        }
        Self::new(
            n,
            a.iter()
                .zip(b)
                .map(|(row, &bi)| Polynomial::affine(row, bi))
                .collect(),
        )
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    /// Max component degree, floored at one.
    pub fn map_degree(&self) -> u32 {
        self.components
            .iter()
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
            .max(1)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_in, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval_unchecked(x)).collect()
    }

    /// Row `k` is the gradient of component `k`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.n_in, x.len())?;
        Ok(self.jacobian_unchecked(x))
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.components.iter().map(|p| p.grad_unchecked(x)).collect()
    }
}
