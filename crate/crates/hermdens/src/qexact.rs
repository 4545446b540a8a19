//! Exact rational functions in one variable `q`.
//!
//! A [`QRat`] is stored as `q^low * num(q) / den(q)` where `num` and `den`
//! are integer polynomials with nonzero constant terms, no common factor,
//! coprime contents, and a positive leading coefficient on `den`. That form
//! is unique, so structural equality is mathematical equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense integer polynomial, coefficient of `q^i` at index `i`, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub(crate) struct Poly(Vec<BigInt>);

impl Poly {
    fn zero() -> Self {
        Poly(Vec::new())
    }

    fn constant(c: BigInt) -> Self {
        let mut p = Poly(vec![c]);
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn lc(&self) -> &BigInt {
        self.0.last().expect("leading coefficient of zero polynomial")
    }

    /// Number of low-order zero coefficients.
    fn low_zeros(&self) -> usize {
        self.0.iter().take_while(|c| c.is_zero()).count()
    }

    fn shift_down(&mut self, k: usize) {
        self.0.drain(0..k);
    }

    fn shift_up(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![BigInt::zero(); k];
        v.extend(self.0.iter().cloned());
        Poly(v)
    }

    fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.0.get(i);
            let b = o.0.get(i);
            v.push(match (a, b) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            });
        }
        let mut p = Poly(v);
        p.trim();
        p
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![BigInt::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        let mut p = Poly(v);
        p.trim();
        p
    }

    fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|x| x * c).collect())
    }

    fn div_scalar(&self, c: &BigInt) -> Poly {
        Poly(self.0.iter().map(|x| x / c).collect())
    }

    fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.0 {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    fn primitive(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = self.content();
        if self.lc().is_negative() {
            c = -c;
        }
        self.div_scalar(&c)
    }

    /// Pseudo-remainder of `self` by `d`.
    fn prem(&self, d: &Poly) -> Poly {
        let mut r = self.clone();
        let dd = d.degree();
        let lcd = d.lc().clone();
        while !r.is_zero() && r.degree() >= dd {
            let shift = r.degree() - dd;
            let lcr = r.lc().clone();
            let g = lcr.gcd(&lcd);
            let fr = &lcd / &g;
            let fd = &lcr / &g;
            r = r.scale(&fr);
            let sub = d.scale(&fd).shift_up(shift);
            r = r.add(&sub.neg());
        }
        r
    }

    /// Primitive gcd with positive leading coefficient.
    fn gcd(&self, o: &Poly) -> Poly {
        if self.is_zero() {
            return o.primitive();
        }
        if o.is_zero() {
            return self.primitive();
        }
        let (mut a, mut b) = if self.degree() >= o.degree() {
            (self.primitive(), o.primitive())
        } else {
            (o.primitive(), self.primitive())
        };
        while !b.is_zero() {
            if b.degree() == 0 {
                return Poly::constant(BigInt::one());
            }
            let r = a.prem(&b);
            a = b;
            b = r.primitive();
        }
        a
    }

    /// Exact division; panics if `d` does not divide `self` over Z.
    fn div_exact(&self, d: &Poly) -> Poly {
        if d.degree() == 0 {
            return self.div_scalar(d.lc());
        }
        let mut r = self.clone();
        if r.is_zero() {
            return r;
        }
        let dd = d.degree();
        let mut quo = vec![BigInt::zero(); r.degree() - dd + 1];
        let lcd = d.lc().clone();
        while !r.is_zero() && r.degree() >= dd {
            let shift = r.degree() - dd;
            let (c, rem) = r.lc().div_rem(&lcd);
            assert!(rem.is_zero(), "inexact polynomial division");
            let sub = d.scale(&c).shift_up(shift);
            quo[shift] = c;
            r = r.add(&sub.neg());
        }
        assert!(r.is_zero(), "inexact polynomial division");
        let mut p = Poly(quo);
        p.trim();
        p
    }

    fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

/// Exact rational function in `q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QRat {
    low: i64,
    num: Poly,
    den: Poly,
}

impl QRat {
    pub fn zero() -> Self {
        QRat { low: 0, num: Poly::zero(), den: Poly::constant(BigInt::one()) }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(c: i64) -> Self {
        Self::from_bigint(BigInt::from(c))
    }

    pub fn from_bigint(c: BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        QRat { low: 0, num: Poly::constant(c), den: Poly::constant(BigInt::one()) }
    }

    pub fn from_ratio(n: i64, d: i64) -> Result<Self> {
        Self::from_int(n).checked_div(&Self::from_int(d))
    }

    /// `q^k`.
    pub fn q_pow(k: i64) -> Self {
        QRat { low: k, num: Poly::constant(BigInt::one()), den: Poly::constant(BigInt::one()) }
    }

    /// `(-q)^k`, with the sign folded into the coefficient.
    pub fn neg_q_pow(k: i64) -> Self {
        let s = if k.rem_euclid(2) == 0 { 1 } else { -1 };
        QRat { low: k, num: Poly::constant(BigInt::from(s)), den: Poly::constant(BigInt::one()) }
    }

    /// Laurent polynomial from `(coefficient, degree)` terms.
    pub fn from_terms(terms: &[(i64, i64)]) -> Self {
        let mut acc = QRat::zero();
        for &(c, e) in terms {
            acc = &acc + &(&QRat::from_int(c) * &QRat::q_pow(e));
        }
        acc
    }

    fn from_parts(low: i64, num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(low, num, den))
    }

    /// Brings an arbitrary `q^low * num / den` into canonical form.
    fn canonical(mut low: i64, mut num: Poly, mut den: Poly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let z = num.low_zeros();
        num.shift_down(z);
        low += z as i64;
        let z = den.low_zeros();
        den.shift_down(z);
        low -= z as i64;
        let g = num.gcd(&den);
        if g.degree() > 0 {
            num = num.div_exact(&g);
            den = den.div_exact(&g);
        }
        Self::finish(low, num, den)
    }

    /// Content and sign normalization once no polynomial factor is shared.
    fn finish(low: i64, mut num: Poly, mut den: Poly) -> Self {
        let mut c = num.content().gcd(&den.content());
        if den.lc().is_negative() {
            c = -c;
        }
        if !c.is_one() {
            num = num.div_scalar(&c);
            den = den.div_scalar(&c);
        }
        QRat { low, num, den }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// True when the denominator is a constant, i.e. a Laurent polynomial.
    pub fn is_laurent_poly(&self) -> bool {
        self.den.degree() == 0 && self.den.lc().is_one()
    }

    pub fn checked_div(&self, rhs: &QRat) -> Result<QRat> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self * &rhs.invert_unchecked())
    }

    fn invert_unchecked(&self) -> QRat {
        let mut num = self.den.clone();
        let mut den = self.num.clone();
        if den.lc().is_negative() {
            num = num.neg();
            den = den.neg();
        }
        QRat { low: -self.low, num, den }
    }

    pub fn inv(&self) -> Result<QRat> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.invert_unchecked())
    }

    pub fn pow(&self, k: i64) -> Result<QRat> {
        if k < 0 {
            return self.inv()?.pow(-k);
        }
        let mut base = self.clone();
        let mut acc = QRat::one();
        let mut e = k as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    /// Exact value at the integer point `q0`.
    pub fn eval(&self, q0: i64) -> Result<BigRational> {
        let x = BigInt::from(q0);
        let d = self.den.eval(&x);
        if d.is_zero() {
            return Err(Error::PoleAtPoint(q0));
        }
        if self.is_zero() {
            return Ok(BigRational::zero());
        }
        if q0 == 0 && self.low < 0 {
            return Err(Error::PoleAtPoint(q0));
        }
        let n = self.num.eval(&x);
        let p = num_traits::pow(x.clone(), self.low.unsigned_abs() as usize);
        let v = if self.low >= 0 {
            BigRational::new(n * p, d)
        } else {
            BigRational::new(n, d * p)
        };
        Ok(v)
    }

    /// Numerator as `(coefficient, degree)` terms in decreasing degree.
    pub fn num_terms(&self) -> Vec<(BigInt, i64)> {
        terms_of(&self.num, self.low)
    }

    pub fn den_terms(&self) -> Vec<(BigInt, i64)> {
        terms_of(&self.den, 0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(QRatJson::from(self)).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<QRat> {
        let j: QRatJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        j.try_into()
    }
}

fn terms_of(p: &Poly, low: i64) -> Vec<(BigInt, i64)> {
    p.0.iter()
        .enumerate()
        .rev()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (c.clone(), i as i64 + low))
        .collect()
}

fn fmt_terms(f: &mut fmt::Formatter<'_>, terms: &[(BigInt, i64)]) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (k, (c, e)) in terms.iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if k == 0 {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, "{}", if neg { " - " } else { " + " })?;
        }
        let var = match *e {
            0 => String::new(),
            1 => "q".to_string(),
            e => format!("q^{e}"),
        };
        if var.is_empty() {
            write!(f, "{a}")?;
        } else if a.is_one() {
            write!(f, "{var}")?;
        } else {
            write!(f, "{a}*{var}")?;
        }
    }
    Ok(())
}

impl fmt::Display for QRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        fmt_terms(f, &self.num_terms())?;
        write!(f, ")/(")?;
        fmt_terms(f, &self.den_terms())?;
        write!(f, ")")
    }
}

impl fmt::Debug for QRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'a> Add<&'a QRat> for &'a QRat {
    type Output = QRat;
    fn add(self, o: &QRat) -> QRat {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let low = self.low.min(o.low);
        let a = self.num.shift_up((self.low - low) as usize);
        let c = o.num.shift_up((o.low - low) as usize);
        if self.den == o.den {
            return QRat::canonical(low, a.add(&c), self.den.clone());
        }
        // Henrici: only the gcd of the denominators can survive in the sum.
        let g = self.den.gcd(&o.den);
        let (b1, d1) = if g.degree() > 0 {
            (self.den.div_exact(&g), o.den.div_exact(&g))
        } else {
            (self.den.clone(), o.den.clone())
        };
        let mut num = a.mul(&d1).add(&c.mul(&b1));
        if num.is_zero() {
            return QRat::zero();
        }
        let mut den = b1.mul(&o.den);
        let z = num.low_zeros();
        num.shift_down(z);
        let low = low + z as i64;
        if g.degree() > 0 {
            let g2 = num.gcd(&g);
            if g2.degree() > 0 {
                num = num.div_exact(&g2);
                den = den.div_exact(&g2);
            }
        }
        QRat::finish(low, num, den)
    }
}

impl<'a> Sub<&'a QRat> for &'a QRat {
    type Output = QRat;
    fn sub(self, o: &QRat) -> QRat {
        self + &(-o)
    }
}

impl<'a> Mul<&'a QRat> for &'a QRat {
    type Output = QRat;
    fn mul(self, o: &QRat) -> QRat {
        if self.is_zero() || o.is_zero() {
            return QRat::zero();
        }
        let g1 = self.num.gcd(&o.den);
        let g2 = o.num.gcd(&self.den);
        let (a, d) = if g1.degree() > 0 {
            (self.num.div_exact(&g1), o.den.div_exact(&g1))
        } else {
            (self.num.clone(), o.den.clone())
        };
        let (c, b) = if g2.degree() > 0 {
            (o.num.div_exact(&g2), self.den.div_exact(&g2))
        } else {
            (o.num.clone(), self.den.clone())
        };
        QRat::finish(self.low + o.low, a.mul(&c), b.mul(&d))
    }
}

impl<'a> Div<&'a QRat> for &'a QRat {
    type Output = QRat;
    /// Panics on division by zero; use [`QRat::checked_div`] for a `Result`.
    fn div(self, o: &QRat) -> QRat {
        self.checked_div(o).expect("division by the zero function")
    }
}

impl<'a> Neg for &'a QRat {
    type Output = QRat;
    fn neg(self) -> QRat {
        QRat { low: self.low, num: self.num.neg(), den: self.den.clone() }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<QRat> for QRat {
            type Output = QRat;
            fn $m(self, o: QRat) -> QRat {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a QRat> for QRat {
            type Output = QRat;
            fn $m(self, o: &QRat) -> QRat {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<QRat> for &'a QRat {
            type Output = QRat;
            fn $m(self, o: QRat) -> QRat {
                self.$m(&o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);
owned_ops!(Div, div);

impl Neg for QRat {
    type Output = QRat;
    fn neg(self) -> QRat {
        -&self
    }
}

impl std::iter::Sum for QRat {
    fn sum<I: Iterator<Item = QRat>>(iter: I) -> QRat {
        iter.fold(QRat::zero(), |a, b| &a + &b)
    }
}

impl std::iter::Product for QRat {
    fn product<I: Iterator<Item = QRat>>(iter: I) -> QRat {
        iter.fold(QRat::one(), |a, b| &a * &b)
    }
}

impl From<i64> for QRat {
    fn from(c: i64) -> Self {
        QRat::from_int(c)
    }
}

/// Which family of q-Pochhammer factors to multiply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PochSign {
    /// factors `1 - (-q)^(-l)`
    Minus,
    /// factors `1 - (-q)^l`
    Plus,
}

/// `prod_{l=lo}^{hi} (1 - (-q)^{±l})`; the empty product (hi < lo) is 1.
pub fn qpochhammer(sign: PochSign, lo: i64, hi: i64) -> QRat {
    let mut acc = QRat::one();
    for l in lo..=hi {
        let e = match sign {
            PochSign::Minus => -l,
            PochSign::Plus => l,
        };
        acc = &acc * &(&QRat::one() - &QRat::neg_q_pow(e));
    }
    acc
}

/// Shorthand for `prod_{l=lo}^{hi} (1 - (-q)^{-l})`.
pub fn pm(lo: i64, hi: i64) -> QRat {
    qpochhammer(PochSign::Minus, lo, hi)
}

/// Shorthand for `prod_{l=lo}^{hi} (1 - (-q)^{l})`.
pub fn pp(lo: i64, hi: i64) -> QRat {
    qpochhammer(PochSign::Plus, lo, hi)
}

/// Binary operation selector mirroring the CLI and the operation table.
#[derive(Clone, Copy, Debug)]
pub enum QOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow(i64),
}

pub fn qr_ops(lhs: &QRat, rhs: &QRat, kind: QOp) -> Result<QRat> {
    match kind {
        QOp::Add => Ok(lhs + rhs),
        QOp::Sub => Ok(lhs - rhs),
        QOp::Mul => Ok(lhs * rhs),
        QOp::Div => lhs.checked_div(rhs),
        QOp::Pow(k) => lhs.pow(k),
    }
}

pub fn qr_eval(f: &QRat, q0: i64) -> Result<BigRational> {
    f.eval(q0)
}

/// Integer coefficients go out as JSON numbers when they fit in i64.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Coef {
    Small(i64),
    Big(String),
}

#[derive(Serialize, Deserialize)]
struct QRatJson {
    num: Vec<(Coef, i64)>,
    den: Vec<(Coef, i64)>,
}

fn coef_out(c: &BigInt) -> Coef {
    match i64::try_from(c) {
        Ok(v) => Coef::Small(v),
        Err(_) => Coef::Big(c.to_string()),
    }
}

fn coef_in(c: &Coef) -> Result<BigInt> {
    match c {
        Coef::Small(v) => Ok(BigInt::from(*v)),
        Coef::Big(s) => s.parse().map_err(|_| Error::Parse(format!("bad coefficient {s}"))),
    }
}

impl From<&QRat> for QRatJson {
    fn from(f: &QRat) -> Self {
        QRatJson {
            num: f.num_terms().iter().map(|(c, e)| (coef_out(c), *e)).collect(),
            den: f.den_terms().iter().map(|(c, e)| (coef_out(c), *e)).collect(),
        }
    }
}

fn laurent(terms: &[(Coef, i64)]) -> Result<(i64, Poly)> {
    let low = terms.iter().map(|t| t.1).min().unwrap_or(0);
    let high = terms.iter().map(|t| t.1).max().unwrap_or(0);
    let mut v = vec![BigInt::zero(); (high - low + 1) as usize];
    for (c, e) in terms {
        v[(e - low) as usize] += coef_in(c)?;
    }
    let mut p = Poly(v);
    p.trim();
    Ok((low, p))
}

impl TryFrom<QRatJson> for QRat {
    type Error = Error;
    fn try_from(j: QRatJson) -> Result<QRat> {
        let (ln, n) = laurent(&j.num)?;
        let (ld, d) = laurent(&j.den)?;
        QRat::from_parts(ln - ld, n, d)
    }
}

impl Serialize for QRat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QRatJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for QRat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = QRatJson::deserialize(d)?;
        j.try_into().map_err(serde::de::Error::custom)
    }
}

/// Rational numbers print as `a/b`, integers without a slash.
pub fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Orders by value at a sample point; only used for deterministic sorting.
pub fn cmp_at(a: &QRat, b: &QRat, q0: i64) -> Ordering {
    match (a.eval(q0), b.eval(q0)) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.to_string().cmp(&b.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QRat {
        QRat::q_pow(1)
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn product_of_conjugate_binomials() {
        let one = QRat::one();
        let f = (&one + &q()) * (&one - &q());
        assert_eq!(f, &one - &QRat::q_pow(2));
        assert_eq!(f.to_string(), "(-q^2 + 1)/(1)");
    }

    #[test]
    fn square_of_signed_cube() {
        let c = QRat::neg_q_pow(3);
        assert_eq!(c, -QRat::q_pow(3));
        assert_eq!(c.pow(2).unwrap(), QRat::q_pow(6));
    }

    #[test]
    fn common_factor_cancels() {
        let one = QRat::one();
        let f = (QRat::q_pow(2) - &one) / (q() + &one);
        assert_eq!(f, q() - one);
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(qpochhammer(PochSign::Minus, 1, 1), QRat::one() + QRat::q_pow(-1));
        assert_eq!(qpochhammer(PochSign::Plus, 2, 1), QRat::one());
        assert_eq!(qpochhammer(PochSign::Plus, 2, 2), QRat::one() - QRat::q_pow(2));
    }

    #[test]
    fn evaluation_examples() {
        let one = QRat::one();
        let f = -((QRat::q_pow(2) - &one) * (QRat::q_pow(3) + &one));
        assert_eq!(f.eval(3).unwrap(), r(-224, 1));
        assert_eq!(one.eval(5).unwrap(), r(1, 1));
        let g = (QRat::from_int(2) - q()) / (QRat::q_pow(2) - &one);
        assert_eq!(g.eval(3).unwrap(), r(-1, 8));
        assert_eq!(g.to_string(), "(-q + 2)/(q^2 - 1)");
    }

    #[test]
    fn pole_and_division_errors() {
        let one = QRat::one();
        let g = one.clone() / (q() - QRat::from_int(3));
        assert_eq!(g.eval(3), Err(Error::PoleAtPoint(3)));
        assert_eq!(one.checked_div(&QRat::zero()), Err(Error::DivisionByZero));
        assert_eq!(QRat::zero().pow(-1), Err(Error::DivisionByZero));
    }

    #[test]
    fn constants_keep_their_denominator() {
        let h = QRat::from_ratio(1, 2).unwrap();
        assert_eq!(h.to_string(), "(1)/(2)");
        let f = (q() + QRat::one()) / QRat::from_int(-4);
        assert_eq!(f.to_string(), "(-q - 1)/(4)");
        assert_eq!((&h + &h), QRat::one());
    }

    #[test]
    fn negative_powers_live_in_the_numerator() {
        let f = QRat::q_pow(-2) * QRat::from_int(-1);
        assert_eq!(f.to_string(), "(-q^-2)/(1)");
        let g = QRat::one() / (QRat::q_pow(3) - QRat::q_pow(2));
        assert_eq!(g.to_string(), "(q^-2)/(q - 1)");
    }

    #[test]
    fn json_round_trip() {
        let f = (QRat::from_int(2) - q()) / (QRat::q_pow(2) - QRat::one());
        let j = f.to_json();
        assert_eq!(j, serde_json::json!({"num": [[-1, 1], [2, 0]], "den": [[1, 2], [-1, 0]]}));
        assert_eq!(QRat::from_json(&j).unwrap(), f);
    }
}
