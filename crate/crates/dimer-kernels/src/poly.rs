//! Exact polynomial and Laurent-polynomial arithmetic, generic over the
//! scalar type via `num_traits`. The engine instantiates these with
//! [`crate::Rational`]; the same code runs over `f32`/`f64` when only an
//! approximate view is needed.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num::traits::Num;

use crate::Rational;

/// Coefficient scalar: field-like operations, cloning, negation.
pub trait Scalar: Num + Clone + Neg<Output = Self> {}
impl<T: Num + Clone + Neg<Output = T>> Scalar for T {}

fn pow<T: Scalar>(x: &T, n: u32) -> T {
    let mut acc = T::one();
    for _ in 0..n {
        acc = acc * x.clone();
    }
    acc
}

/// Polynomial with nonnegative exponents; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial<T> {
    coeffs: BTreeMap<u32, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(exp: u32, c: T) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(exp, c);
        }
        Self { coeffs }
    }

    pub fn from_coeffs<I: IntoIterator<Item = (u32, T)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exp: u32, c: T) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.remove(&exp) {
            None => {
                self.coeffs.insert(exp, c);
            }
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.coeffs.insert(exp, s);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest exponent with a nonzero coefficient, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, exp: u32) -> T {
        self.coeffs.get(&exp).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &T)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn eval(&self, x: &T) -> T {
        let mut acc = T::zero();
        for (e, c) in &self.coeffs {
            acc = acc + c.clone() * pow(x, *e);
        }
        acc
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(e, v)| (*e, v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        Polynomial::from_coeffs(self.coeffs.iter().map(|(e, c)| (*e, f(c))))
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        let mut out = Polynomial::zero();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &rhs.coeffs {
                out.add_term(ea + eb, ca.clone() * cb.clone());
            }
        }
        out
    }
}

/// Laurent polynomial: integer exponents of either sign, no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Laurent<T> {
    coeffs: BTreeMap<i64, T>,
}

impl<T: Scalar> Laurent<T> {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn monomial(exp: i64, c: T) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(exp, c);
        }
        Self { coeffs }
    }

    pub fn from_coeffs<I: IntoIterator<Item = (i64, T)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(e, c);
        }
        p
    }

    /// Lift a plain polynomial, shifting every exponent by `shift`.
    pub fn from_polynomial(p: &Polynomial<T>, shift: i64) -> Self {
        Self::from_coeffs(p.iter().map(|(e, c)| (e as i64 + shift, c.clone())))
    }

    fn add_term(&mut self, exp: i64, c: T) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.remove(&exp) {
            None => {
                self.coeffs.insert(exp, c);
            }
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.coeffs.insert(exp, s);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, exp: i64) -> T {
        self.coeffs.get(&exp).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    /// Multiply by x^shift.
    pub fn shifted(&self, shift: i64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(e, c)| (e + shift, c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(e, v)| (*e, v.clone() * c.clone()))
                .collect(),
        }
    }

    /// Evaluate at a point. `None` when x = 0 and negative exponents are present.
    pub fn eval(&self, x: &T) -> Option<T> {
        let mut acc = T::zero();
        for (e, c) in &self.coeffs {
            let term = if *e >= 0 {
                c.clone() * pow(x, *e as u32)
            } else {
                if x.is_zero() {
                    return None;
                }
                c.clone() / pow(x, (-e) as u32)
            };
            acc = acc + term;
        }
        Some(acc)
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Laurent<U> {
        Laurent::from_coeffs(self.coeffs.iter().map(|(e, c)| (*e, f(c))))
    }
}

impl<T: Scalar> Add for &Laurent<T> {
    type Output = Laurent<T>;
    fn add(self, rhs: Self) -> Laurent<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for &Laurent<T> {
    type Output = Laurent<T>;
    fn sub(self, rhs: Self) -> Laurent<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl<T: Scalar> Mul for &Laurent<T> {
    type Output = Laurent<T>;
    fn mul(self, rhs: Self) -> Laurent<T> {
        let mut out = Laurent::zero();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &rhs.coeffs {
                out.add_term(ea + eb, ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for Laurent<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match e {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*d")?,
                _ => write!(f, "({c})*d^{e}")?,
            }
        }
        Ok(())
    }
}

/// Exact interpolation through distinct sample points (Newton divided
/// differences). Panics on repeated x values.
pub fn interpolate<T: Scalar>(points: &[(T, T)]) -> Polynomial<T> {
    let k = points.len();
    if k == 0 {
        return Polynomial::zero();
    }
    let xs: Vec<T> = points.iter().map(|(x, _)| x.clone()).collect();
    let mut table: Vec<T> = points.iter().map(|(_, y)| y.clone()).collect();
    for level in 1..k {
        for i in (level..k).rev() {
            let dx = xs[i].clone() - xs[i - level].clone();
            assert!(!dx.is_zero(), "interpolation points must be distinct");
            table[i] = (table[i].clone() - table[i - 1].clone()) / dx;
        }
    }
    let mut acc = Polynomial::zero();
    let mut basis = Polynomial::constant(T::one());
    for (i, c) in table.into_iter().enumerate() {
        acc = &acc + &basis.scale(&c);
        if i + 1 < k {
            let factor = Polynomial::from_coeffs([(0u32, -xs[i].clone()), (1u32, T::one())]);
            basis = &basis * &factor;
        }
    }
    acc
}

impl Polynomial<Rational> {
    /// Exponent -> "p/q" map for JSON output.
    pub fn to_string_map(&self) -> BTreeMap<String, String> {
        self.coeffs
            .iter()
            .map(|(e, c)| (e.to_string(), c.to_string()))
            .collect()
    }

    pub fn from_string_map(map: &BTreeMap<String, String>) -> Result<Self, String> {
        let mut p = Self::zero();
        for (e, c) in map {
            let exp: u32 = e.parse().map_err(|_| format!("bad exponent {e:?}"))?;
            let coeff = Rational::from_str(c).map_err(|_| format!("bad rational {c:?}"))?;
            p.add_term(exp, coeff);
        }
        Ok(p)
    }
}

impl Laurent<Rational> {
    /// Exponent -> "p/q" map for JSON output; exponents are powers of d.
    pub fn to_string_map(&self) -> BTreeMap<String, String> {
        self.coeffs
            .iter()
            .map(|(e, c)| (e.to_string(), c.to_string()))
            .collect()
    }

    pub fn from_string_map(map: &BTreeMap<String, String>) -> Result<Self, String> {
        let mut p = Self::zero();
        for (e, c) in map {
            let exp: i64 = e.parse().map_err(|_| format!("bad exponent {e:?}"))?;
            let coeff = Rational::from_str(c).map_err(|_| format!("bad rational {c:?}"))?;
            p.add_term(exp, coeff);
        }
        Ok(p)
    }

    /// Coefficients as f64 approximations, for human-readable output.
    pub fn to_decimal_map(&self) -> BTreeMap<String, f64> {
        use num::ToPrimitive;
        self.coeffs
            .iter()
            .map(|(e, c)| (e.to_string(), c.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, ratio};
    use proptest::prelude::*;

    #[test]
    fn polynomial_basics() {
        let p = Polynomial::from_coeffs([(0, rat(1)), (2, rat(3))]);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.eval(&rat(2)), rat(13));
        let q = Polynomial::monomial(1, rat(-2));
        assert_eq!((&p + &q).eval(&rat(2)), rat(9));
        assert_eq!((&p * &q).degree(), Some(3));
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn laurent_eval_and_shift() {
        let w = Laurent::from_coeffs([(-1, ratio(1, 2)), (1, rat(3))]);
        assert_eq!(w.eval(&rat(2)), Some(ratio(25, 4)));
        assert_eq!(w.eval(&rat(0)), None);
        assert_eq!(w.shifted(2).min_exponent(), Some(1));
        assert_eq!(w.min_exponent(), Some(-1));
        assert_eq!(w.max_exponent(), Some(1));
    }

    #[test]
    fn interpolation_recovers_polynomial() {
        // x^3 - 2x + 5 through 4 points, then checked off-sample
        let p = Polynomial::from_coeffs([(3, rat(1)), (1, rat(-2)), (0, rat(5))]);
        let pts: Vec<_> = (1..=4).map(|i| (rat(i), p.eval(&rat(i)))).collect();
        let q = interpolate(&pts);
        assert_eq!(p, q);
        assert_eq!(q.eval(&rat(7)), p.eval(&rat(7)));
    }

    #[test]
    fn string_map_round_trip() {
        let w = Laurent::from_coeffs([(-2, ratio(-9, 22)), (0, rat(4))]);
        let map = w.to_string_map();
        assert_eq!(map.get("-2").unwrap(), "-9/22");
        let back = Laurent::from_string_map(&map).unwrap();
        assert_eq!(w, back);
    }

    fn arb_rat() -> impl Strategy<Value = crate::Rational> {
        (-20i64..20, 1i64..8).prop_map(|(p, q)| ratio(p, q))
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial<crate::Rational>> {
        proptest::collection::vec((0u32..6, arb_rat()), 0..5).prop_map(Polynomial::from_coeffs)
    }

    proptest! {
        #[test]
        fn mul_commutes_and_eval_is_multiplicative(a in arb_poly(), b in arb_poly(), x in arb_rat()) {
            let ab = &a * &b;
            prop_assert_eq!(&ab, &(&b * &a));
            prop_assert_eq!(ab.eval(&x), a.eval(&x) * b.eval(&x));
        }

        #[test]
        fn add_associates(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&(&(&a + &b) + &c), &(&a + &(&b + &c)));
        }

        #[test]
        fn interpolation_matches_samples(a in arb_poly()) {
            let deg = a.degree().unwrap_or(0) as i64;
            let pts: Vec<_> = (0..=deg).map(|i| (rat(i), a.eval(&rat(i)))).collect();
            let q = interpolate(&pts);
            prop_assert_eq!(a, q);
        }
    }
}
