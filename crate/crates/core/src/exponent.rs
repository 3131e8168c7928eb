//! Łojasiewicz-type exponents for polynomial data.
//!
//! `R(n, d) = d (3d − 3)^(n−1)` for `d ≥ 2` and `1` for `d = 1`. The error
//! bound exponents are `1 / R(n(n+3) + r(n+2) + s(n+2), d + 2)` in general
//! and `1 / R(2n + 2r + 2s, d + 2)` for convex `Ω`. These integers overflow
//! `u64` quickly, so they are exact big integers, the exponents are exact
//! rationals, and powers `v^α` are only ever formed in the log domain.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gap::ViInstance;

pub fn r_function(n: u64, d: u64) -> Result<BigUint> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(format!("R(n, d) needs n >= 1 and d >= 1, got ({n}, {d})")));
    }
    if d == 1 {
        return Ok(BigUint::one());
    }
    let exp = u32::try_from(n - 1).map_err(|_| Error::InvalidInput("n too large".into()))?;
    Ok(BigUint::from(d) * BigUint::from(3 * d - 3).pow(exp))
}

/// Natural log of a positive big integer without overflowing `f64`.
fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit head");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// A nonnegative exact rational exponent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Alpha(BigRational);

impl Alpha {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() {
            return Err(Error::InvalidInput("exponent must be nonnegative".into()));
        }
        Ok(Self(value))
    }

    pub fn reciprocal(den: &BigUint) -> Self {
        Self(BigRational::new(BigInt::one(), BigInt::from_biguint(Sign::Plus, den.clone())))
    }

    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        Self(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `α · t` for a finite real `t`, accurate even when the denominator
    /// exceeds the `f64` range.
    pub fn scale(&self, t: f64) -> f64 {
        if t == 0.0 || self.0.is_zero() {
            return 0.0;
        }
        if t.is_infinite() {
            return t;
        }
        let num = self.0.numer().magnitude();
        let den = self.0.denom().magnitude();
        t.signum() * (t.abs().ln() + ln_big(num) - ln_big(den)).exp()
    }

    /// `1 − α`, exact.
    pub fn complement(&self) -> BigRational {
        BigRational::one() - &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.scale(1.0)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// Accepts `p/q`, integers, and plain decimals such as `0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse exponent '{s}'"));
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Alpha::new(BigRational::new(p, q));
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.chars().any(|c| !c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        Alpha::new(BigRational::new(num, den))
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `v^α` via `exp(α ln v)`; `0^α = 0`.
pub fn pow_alpha(v: f64, alpha: &Alpha) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return Err(Error::InvalidInput(format!("pow_alpha needs v >= 0, got {v}")));
    }
    if v == 0.0 {
        return Ok(if alpha.is_zero() { 1.0 } else { 0.0 });
    }
    Ok(alpha.scale(v.ln()).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCertificate {
    pub n: u64,
    pub r: u64,
    pub s: u64,
    pub d: u64,
    #[serde(rename = "R_general", serialize_with = "as_decimal")]
    pub r_general: BigUint,
    pub alpha_general: Alpha,
    #[serde(rename = "R_convex", serialize_with = "as_decimal")]
    pub r_convex: BigUint,
    pub alpha_convex: Alpha,
    /// The convex exponent is only valid when `Ω` is declared convex.
    pub convex_applicable: bool,
}

fn as_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

impl ExponentCertificate {
    pub fn from_counts(n: u64, r: u64, s: u64, d: u64, convex: bool) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("certificate needs n >= 1 and d >= 1".into()));
        }
        let general_vars = n * (n + 3) + r * (n + 2) + s * (n + 2);
        let convex_vars = 2 * n + 2 * r + 2 * s;
        let r_general = r_function(general_vars, d + 2)?;
        let r_convex = r_function(convex_vars, d + 2)?;
        Ok(Self {
            n,
            r,
            s,
            d,
            alpha_general: Alpha::reciprocal(&r_general),
            alpha_convex: Alpha::reciprocal(&r_convex),
            r_general,
            r_convex,
            convex_applicable: convex,
        })
    }

    /// The sharpest exponent the certificate licenses.
    pub fn applicable_alpha(&self) -> &Alpha {
        if self.convex_applicable {
            &self.alpha_convex
        } else {
            &self.alpha_general
        }
    }
}

pub fn alpha_for_instance(inst: &ViInstance) -> ExponentCertificate {
    let omega = inst.omega();
    ExponentCertificate::from_counts(
        inst.dim() as u64,
        omega.ineqs().len() as u64,
        omega.eqs().len() as u64,
        u64::from(inst.degree()),
        omega.declared_convex(),
    )
    .expect("instance dimensions are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasible::FeasibleSet;
    use crate::poly::PolynomialMap;
    use proptest::prelude::*;

    /// Independent oracle: repeated u128 multiplication.
    fn r_oracle(n: u32, d: u128) -> u128 {
        if d == 1 {
            return 1;
        }
        let mut acc = d;
        for _ in 1..n {
            acc *= 3 * d - 3;
        }
        acc
    }

    #[test]
    fn r_examples() {
        assert_eq!(r_function(5, 1).unwrap(), BigUint::one());
        assert_eq!(r_function(2, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(r_function(4, 3).unwrap(), BigUint::from(648u32));
        assert_eq!(r_function(14, 3).unwrap(), BigUint::from(39_182_082_048u64));
        assert_eq!(r_oracle(14, 3), 39_182_082_048);
        assert!(r_function(0, 2).is_err());
        assert!(r_function(2, 0).is_err());
    }

    #[test]
    fn certificate_examples() {
        let c = ExponentCertificate::from_counts(1, 1, 0, 1, true).unwrap();
        assert_eq!(c.alpha_convex.to_string(), "1/648");
        assert_eq!(c.alpha_general.to_string(), "1/139968");
        assert_eq!(u128::from(c.r_general.to_u64().unwrap()), r_oracle(7, 3));
        let p = ExponentCertificate::from_counts(2, 0, 0, 2, false).unwrap();
        assert_eq!(p.r_general, BigUint::from(4u64 * 387_420_489));
        assert_eq!(p.alpha_general.to_string(), "1/1549681956");
        assert_eq!(p.applicable_alpha(), &p.alpha_general);
    }

    #[test]
    fn certificate_for_instance() {
        let inst = crate::gap::ViInstance::new(PolynomialMap::identity(1), FeasibleSet::nonnegative_orthant(1), 1.0)
            .unwrap();
        let c = alpha_for_instance(&inst);
        assert_eq!((c.n, c.r, c.s, c.d), (1, 1, 0, 1));
        assert!(c.convex_applicable);
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["alpha_convex"], "1/648");
        assert_eq!(json["R_general"], "139968");
    }

    #[test]
    fn pow_alpha_examples() {
        let a = Alpha::ratio(1, 648);
        assert_eq!(pow_alpha(0.0, &a).unwrap(), 0.0);
        assert_eq!(pow_alpha(1.0, &a).unwrap(), 1.0);
        // extended-precision reference (30 digits): exp(-ln 2 / 648)
        let v = pow_alpha(0.5, &a).unwrap();
        assert!((v - 0.998_930_900_319_769_6).abs() < 1e-12, "{v}");
        assert!(pow_alpha(-1.0, &a).is_err());
        assert_eq!(pow_alpha(0.25, &Alpha::ratio(1, 2)).unwrap(), 0.5);
    }

    #[test]
    fn huge_denominators_stay_finite() {
        let big = ExponentCertificate::from_counts(20, 5, 5, 3, false).unwrap();
        assert!(big.r_general.bits() > 1024);
        let scaled = big.alpha_general.scale(-30.0);
        assert!(scaled <= 0.0 && scaled > -1e-100);
        assert!(pow_alpha(1e-300, &big.alpha_general).unwrap() <= 1.0);
    }

    #[test]
    fn parse_alpha() {
        assert_eq!("1/2".parse::<Alpha>().unwrap(), Alpha::ratio(1, 2));
        assert_eq!("0.5".parse::<Alpha>().unwrap(), Alpha::ratio(1, 2));
        assert_eq!("2".parse::<Alpha>().unwrap(), Alpha::ratio(2, 1));
        assert!("1/0".parse::<Alpha>().is_err());
        assert!("abc".parse::<Alpha>().is_err());
        assert!("-1/2".parse::<Alpha>().is_err());
    }

    proptest! {
        #[test]
        fn r_is_monotone(n in 1u64..=20, d in 2u64..=10) {
            let base = r_function(n, d).unwrap();
            prop_assert!(r_function(n + 1, d).unwrap() >= base);
            prop_assert!(r_function(n, d + 1).unwrap() >= base);
        }

        #[test]
        fn general_exponent_not_sharper(n in 1u64..6, r in 0u64..4, s in 0u64..3, d in 1u64..5) {
            let c = ExponentCertificate::from_counts(n, r, s, d, true).unwrap();
            prop_assert!(c.alpha_general <= c.alpha_convex);
        }

        #[test]
        fn pow_alpha_multiplicative(v in 1e-3f64..10.0, w in 1e-3f64..10.0, den in 1u64..5000) {
            let a = Alpha::ratio(1, den);
            let lhs = pow_alpha(v, &a).unwrap() * pow_alpha(w, &a).unwrap();
            let rhs = pow_alpha(v * w, &a).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }

        #[test]
        fn pow_alpha_monotone(v in 0.0f64..10.0, dv in 0.0f64..1.0, den in 1u64..5000) {
            let a = Alpha::ratio(1, den);
            prop_assert!(pow_alpha(v + dv, &a).unwrap() >= pow_alpha(v, &a).unwrap());
        }
    }
}
