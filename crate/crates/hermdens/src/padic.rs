//! The unramified quadratic extension modelled concretely.
//!
//! Finite quotients `O_F / p^d` are `(Z/p^d)[w]/(w^2 - u)` with `u` a
//! non-residue and conjugation `w -> -w`. Exact Gram matrices live in
//! `Q(sqrt u)`; valuations are always taken at `p`, which stays prime in `F`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qexact::QRat;

pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut k = 3;
    while k * k <= p {
        if p % k == 0 {
            return false;
        }
        k += 2;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u128 % m as u128;
    let mut base = b as u128 % m as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m as u128;
        }
        base = base * base % m as u128;
        e >>= 1;
    }
    b = acc as u64;
    b
}

/// Smallest positive quadratic non-residue mod an odd prime.
pub fn smallest_nonresidue(p: u64) -> u64 {
    (2..p).find(|&u| pow_mod(u, (p - 1) / 2, p) == p - 1).expect("odd prime has a non-residue")
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (g, x, _) = ext_gcd(a as i128 % m as i128, m as i128);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m as i128) as u64)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Element `a + b w` of a finite quotient ring. Arithmetic goes through the
/// owning [`RingModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct OFElem {
    pub a: u64,
    pub b: u64,
}

/// `O_F / p^d` as `(Z/p^d)[w]/(w^2 - u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingModel {
    pub p: u64,
    pub d: u32,
    pub u: u64,
    pub modulus: u64,
}

impl RingModel {
    /// Model with the smallest non-residue `u`.
    pub fn new(p: u64, d: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        Self::with_u(p, d, smallest_nonresidue(p))
    }

    pub fn with_u(p: u64, d: u32, u: u64) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        if pow_mod(u % p, (p - 1) / 2, p) != p - 1 {
            return Err(Error::InvalidPrime(p));
        }
        let modulus = (p as u128)
            .checked_pow(d)
            .filter(|&m| m < (1u128 << 62))
            .ok_or_else(|| Error::PrecisionLoss(format!("{p}^{d} does not fit in 62 bits")))? as u64;
        Ok(RingModel { p, d, u: u % modulus.max(1), modulus })
    }

    /// Same prime and `u`, different precision.
    pub fn at_precision(&self, d: u32) -> Result<Self> {
        Self::with_u(self.p, d, self.u)
    }

    /// Number of elements, `q^(2d)`.
    pub fn size(&self) -> u128 {
        (self.modulus as u128) * (self.modulus as u128)
    }

    pub fn zero(&self) -> OFElem {
        OFElem { a: 0, b: 0 }
    }

    pub fn one(&self) -> OFElem {
        OFElem { a: 1 % self.modulus, b: 0 }
    }

    pub fn from_int(&self, a: i128) -> OFElem {
        self.elem(a, 0)
    }

    pub fn elem(&self, a: i128, b: i128) -> OFElem {
        let m = self.modulus as i128;
        OFElem { a: a.rem_euclid(m) as u64, b: b.rem_euclid(m) as u64 }
    }

    /// Elements in a fixed order, `b` slowest.
    pub fn elements(&self) -> impl Iterator<Item = OFElem> + '_ {
        let m = self.modulus;
        (0..m).flat_map(move |b| (0..m).map(move |a| OFElem { a, b }))
    }

    fn addm(&self, x: u64, y: u64) -> u64 {
        let s = x as u128 + y as u128;
        (s % self.modulus as u128) as u64
    }

    fn mulm(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.modulus as u128) as u64
    }

    fn negm(&self, x: u64) -> u64 {
        if x == 0 {
            0
        } else {
            self.modulus - x
        }
    }

    pub fn add(&self, x: OFElem, y: OFElem) -> OFElem {
        OFElem { a: self.addm(x.a, y.a), b: self.addm(x.b, y.b) }
    }

    pub fn sub(&self, x: OFElem, y: OFElem) -> OFElem {
        self.add(x, self.neg(y))
    }

    pub fn neg(&self, x: OFElem) -> OFElem {
        OFElem { a: self.negm(x.a), b: self.negm(x.b) }
    }

    pub fn mul(&self, x: OFElem, y: OFElem) -> OFElem {
        let bd = self.mulm(self.mulm(x.b, y.b), self.u);
        OFElem {
            a: self.addm(self.mulm(x.a, y.a), bd),
            b: self.addm(self.mulm(x.a, y.b), self.mulm(x.b, y.a)),
        }
    }

    pub fn conj(&self, x: OFElem) -> OFElem {
        OFElem { a: x.a, b: self.negm(x.b) }
    }

    /// `x * conj(x)`, an element of `Z/p^d`.
    pub fn norm(&self, x: OFElem) -> u64 {
        let bb = self.mulm(self.mulm(x.b, x.b), self.u);
        self.addm(self.mulm(x.a, x.a), self.negm(bb))
    }

    pub fn trace(&self, x: OFElem) -> u64 {
        self.addm(x.a, x.a)
    }

    fn val_int(&self, mut x: u64) -> u32 {
        if x == 0 {
            return self.d;
        }
        let mut v = 0;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    /// Largest `k <= d` with `p^k` dividing both coordinates; `d` means zero.
    pub fn val(&self, x: OFElem) -> u32 {
        self.val_int(x.a).min(self.val_int(x.b))
    }

    pub fn is_zero(&self, x: OFElem) -> bool {
        x.a == 0 && x.b == 0
    }

    pub fn is_unit(&self, x: OFElem) -> bool {
        self.val(x) == 0 && self.d > 0
    }

    /// Inverse of a unit via `conj(x) / Nm(x)`.
    pub fn inv(&self, x: OFElem) -> Option<OFElem> {
        let n = self.norm(x);
        let ni = inv_mod(n, self.modulus)?;
        let c = self.conj(x);
        Some(OFElem { a: self.mulm(c.a, ni), b: self.mulm(c.b, ni) })
    }

    /// `x / p^k` for `v(x) >= k`; the top `k` digits of the result are zero.
    pub fn div_p_pow(&self, x: OFElem, k: u32) -> OFElem {
        let s = self.p.pow(k);
        debug_assert!(x.a % s == 0 && x.b % s == 0);
        OFElem { a: x.a / s, b: x.b / s }
    }

    pub fn mul_p_pow(&self, x: OFElem, k: u32) -> OFElem {
        if k >= self.d {
            return self.zero();
        }
        let s = self.p.pow(k);
        OFElem { a: self.mulm(x.a, s), b: self.mulm(x.b, s) }
    }

    /// Canonical representative modulo `p^k`.
    pub fn reduce(&self, x: OFElem, k: u32) -> OFElem {
        if k >= self.d {
            return x;
        }
        let s = self.p.pow(k);
        OFElem { a: x.a % s, b: x.b % s }
    }

    /// Image of a `p`-integral exact scalar.
    pub fn from_exact(&self, x: &ExactScalar) -> Result<OFElem> {
        Ok(OFElem { a: self.reduce_rational(&x.a)?, b: self.reduce_rational(&x.b)? })
    }

    fn reduce_rational(&self, r: &BigRational) -> Result<u64> {
        let m = BigInt::from(self.modulus);
        let den = r.denom().mod_floor(&m).to_u64().unwrap_or(0);
        let di = inv_mod(den, self.modulus)
            .ok_or_else(|| Error::PrecisionLoss(format!("{r} is not {}-integral", self.p)))?;
        let n = r.numer().mod_floor(&m).to_u64().expect("reduced below modulus");
        Ok(self.mulm(n, di))
    }

    /// Smallest exact lift with coordinates in `[0, p^d)`.
    pub fn lift(&self, x: OFElem) -> ExactScalar {
        ExactScalar::new(BigRational::from_integer(x.a.into()), BigRational::from_integer(x.b.into()))
    }
}

/// `a + b sqrt(u)` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    pub a: BigRational,
    pub b: BigRational,
}

/// p-adic valuation of a nonzero rational.
pub fn vp_rational(r: &BigRational, p: u64) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    Some(vp_int(r.numer(), p) - vp_int(r.denom(), p))
}

pub fn vp_int(x: &BigInt, p: u64) -> i64 {
    let pb = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    while !x.is_zero() && (&x % &pb).is_zero() {
        x /= &pb;
        v += 1;
    }
    v
}

impl ExactScalar {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        ExactScalar { a, b }
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(a: i64) -> Self {
        ExactScalar { a: BigRational::from_integer(a.into()), b: BigRational::zero() }
    }

    pub fn from_rational(a: BigRational) -> Self {
        ExactScalar { a, b: BigRational::zero() }
    }

    /// `p^k`, any sign of `k`.
    pub fn p_pow(p: u64, k: i64) -> Self {
        let base = BigRational::from_integer(p.into());
        let v = if k >= 0 {
            num_traits::pow(base, k as usize)
        } else {
            num_traits::pow(base, (-k) as usize).recip()
        };
        Self::from_rational(v)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        ExactScalar { a: &self.a + &o.a, b: &self.b + &o.b }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ExactScalar { a: &self.a - &o.a, b: &self.b - &o.b }
    }

    pub fn neg(&self) -> Self {
        ExactScalar { a: -&self.a, b: -&self.b }
    }

    pub fn mul(&self, o: &Self, u: u64) -> Self {
        let uu = BigRational::from_integer(u.into());
        ExactScalar {
            a: &self.a * &o.a + &self.b * &o.b * uu,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }

    pub fn conj(&self) -> Self {
        ExactScalar { a: self.a.clone(), b: -&self.b }
    }

    pub fn norm(&self, u: u64) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(u.into())
    }

    pub fn inv(&self, u: u64) -> Result<Self> {
        let n = self.norm(u);
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let c = self.conj();
        Ok(ExactScalar { a: &c.a / &n, b: &c.b / &n })
    }

    /// `min(v_p(a), v_p(b))`, `None` for zero.
    pub fn val(&self, p: u64) -> Option<i64> {
        match (vp_rational(&self.a, p), vp_rational(&self.b, p)) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(x.min(y)),
        }
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{}+{}w", self.a, self.b)
        }
    }
}

/// Hermitian Gram matrix over `Q(sqrt u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramMatrix {
    pub n: usize,
    pub p: u64,
    pub u: u64,
    pub entries: Vec<Vec<ExactScalar>>,
}

impl GramMatrix {
    /// Validates shape and the hermitian symmetry `G[j][i] = conj(G[i][j])`.
    pub fn new(p: u64, u: u64, entries: Vec<Vec<ExactScalar>>) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotHermitian(format!("row {i} has length {}", row.len())));
            }
            for j in 0..n {
                if entries[j][i] != row[j].conj() {
                    return Err(Error::NotHermitian(format!("entry ({i},{j})")));
                }
            }
        }
        Ok(GramMatrix { n, p, u, entries })
    }

    /// `diag(p^{v_1}, ..., p^{v_n})`, the model `A_lambda` of the lattice with
    /// those fundamental invariants.
    pub fn diag(p: u64, vals: &[i64]) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        let u = smallest_nonresidue(p);
        let n = vals.len();
        let mut e = vec![vec![ExactScalar::zero(); n]; n];
        for (i, &v) in vals.iter().enumerate() {
            e[i][i] = ExactScalar::p_pow(p, v);
        }
        Ok(GramMatrix { n, p, u, entries: e })
    }

    pub fn from_invariants(p: u64, inv: &Invariants) -> Result<Self> {
        Self::diag(p, &inv.vals)
    }

    pub fn get(&self, i: usize, j: usize) -> &ExactScalar {
        &self.entries[i][j]
    }

    /// Exact determinant by Gaussian elimination over `Q(sqrt u)`.
    pub fn det(&self) -> ExactScalar {
        let mut m = self.entries.clone();
        let n = self.n;
        let mut det = ExactScalar::one();
        for k in 0..n {
            let Some(piv) = (k..n).find(|&i| !m[i][k].is_zero()) else {
                return ExactScalar::zero();
            };
            if piv != k {
                m.swap(piv, k);
                det = det.neg();
            }
            det = det.mul(&m[k][k], self.u);
            let inv = m[k][k].inv(self.u).expect("nonzero pivot");
            for i in k + 1..n {
                if m[i][k].is_zero() {
                    continue;
                }
                let f = m[i][k].mul(&inv, self.u);
                for j in k..n {
                    let t = f.mul(&m[k][j], self.u);
                    m[i][j] = m[i][j].sub(&t);
                }
            }
        }
        det
    }

    /// Exact inverse, which is the Gram matrix of the dual basis.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let u = self.u;
        let mut m = self.entries.clone();
        let mut inv: Vec<Vec<ExactScalar>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { ExactScalar::one() } else { ExactScalar::zero() }).collect())
            .collect();
        for k in 0..n {
            let piv = (k..n).find(|&i| !m[i][k].is_zero()).ok_or(Error::DegenerateGram)?;
            m.swap(piv, k);
            inv.swap(piv, k);
            let pinv = m[k][k].inv(u)?;
            for j in 0..n {
                m[k][j] = m[k][j].mul(&pinv, u);
                inv[k][j] = inv[k][j].mul(&pinv, u);
            }
            for i in 0..n {
                if i == k || m[i][k].is_zero() {
                    continue;
                }
                let f = m[i][k].clone();
                for j in 0..n {
                    let t = f.mul(&m[k][j], u);
                    m[i][j] = m[i][j].sub(&t);
                    let t = f.mul(&inv[k][j], u);
                    inv[i][j] = inv[i][j].sub(&t);
                }
            }
        }
        Ok(GramMatrix { n, p: self.p, u, entries: inv })
    }

    /// Smallest entry valuation, `None` for the zero matrix.
    pub fn min_val(&self) -> Option<i64> {
        self.entries.iter().flatten().filter_map(|x| x.val(self.p)).min()
    }

    /// Gram matrix of the vectors given by the rows of `basis` (coordinates
    /// with respect to the basis this Gram matrix describes): `B G B^*`.
    pub fn transform(&self, basis: &[Vec<ExactScalar>]) -> GramMatrix {
        let u = self.u;
        let k = basis.len();
        let bg: Vec<Vec<ExactScalar>> = basis
            .iter()
            .map(|row| {
                (0..self.n)
                    .map(|j| {
                        row.iter()
                            .zip(self.entries.iter())
                            .fold(ExactScalar::zero(), |acc, (x, grow)| acc.add(&x.mul(&grow[j], u)))
                    })
                    .collect()
            })
            .collect();
        let entries = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        (0..self.n).fold(ExactScalar::zero(), |acc, l| acc.add(&bg[i][l].mul(&basis[j][l].conj(), u)))
                    })
                    .collect()
            })
            .collect();
        GramMatrix { n: k, p: self.p, u, entries }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut entries = Vec::new();
        for row in &self.entries {
            for x in row {
                entries.push(serde_json::json!([p_power_pair(&x.a, self.p)?, p_power_pair(&x.b, self.p)?]));
            }
        }
        Ok(serde_json::json!({"n": self.n, "p": self.p, "u": self.u, "entries": entries}))
    }

    /// Reads `{"n","p","u","entries"}` with entries either row-major flat or nested by row.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: GramJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let flat: Vec<[(i64, i64); 2]> = match j.entries {
            GramEntries::Flat(f) => f,
            GramEntries::Rows(r) => r.into_iter().flatten().collect(),
        };
        if flat.len() != j.n * j.n {
            return Err(Error::Parse(format!("expected {} entries, got {}", j.n * j.n, flat.len())));
        }
        let conv = |(num, dp): (i64, i64)| {
            BigRational::from_integer(num.into()) * ExactScalar::p_pow(j.p, -dp).a
        };
        let entries = (0..j.n)
            .map(|i| (0..j.n).map(|k| {
                let [a, b] = flat[i * j.n + k];
                ExactScalar::new(conv(a), conv(b))
            }).collect())
            .collect();
        GramMatrix::new(j.p, j.u, entries)
    }
}

fn p_power_pair(r: &BigRational, p: u64) -> Result<(i64, i64)> {
    let d = r.denom();
    let k = vp_int(d, p);
    if num_traits::pow(BigInt::from(p), k as usize) != *d {
        return Err(Error::PrecisionLoss(format!("denominator of {r} is not a power of {p}")));
    }
    let num = r.numer().to_i64().ok_or_else(|| Error::PrecisionLoss(format!("{r} overflows i64")))?;
    Ok((num, k))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GramEntries {
    Flat(Vec<[(i64, i64); 2]>),
    Rows(Vec<Vec<[(i64, i64); 2]>>),
}

#[derive(Deserialize)]
struct GramJson {
    n: usize,
    p: u64,
    u: u64,
    entries: GramEntries,
}

/// Fundamental invariants, stored nonincreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Invariants {
    pub vals: Vec<i64>,
}

impl Invariants {
    pub fn new(mut vals: Vec<i64>) -> Self {
        vals.sort_unstable_by(|a, b| b.cmp(a));
        Invariants { vals }
    }

    /// Parses a comma list, e.g. `"3,1,0"`.
    pub fn parse(s: &str) -> Result<Self> {
        let vals: std::result::Result<Vec<i64>, _> =
            s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse::<i64>()).collect();
        let vals = vals.map_err(|e| Error::InvalidInvariants(format!("{s}: {e}")))?;
        if vals.is_empty() {
            return Err(Error::InvalidInvariants("empty invariant list".into()));
        }
        Ok(Self::new(vals))
    }

    pub fn rank(&self) -> usize {
        self.vals.len()
    }

    /// `val(L)`, the sum of the invariants.
    pub fn val(&self) -> i64 {
        self.vals.iter().sum()
    }

    pub fn t_eq(&self, k: i64) -> usize {
        self.vals.iter().filter(|&&v| v == k).count()
    }

    pub fn t_ge(&self, k: i64) -> usize {
        self.vals.iter().filter(|&&v| v >= k).count()
    }

    /// Sub-tuple of entries `>= k`.
    pub fn ge(&self, k: i64) -> Invariants {
        Invariants { vals: self.vals.iter().copied().filter(|&v| v >= k).collect() }
    }

    /// Every entry shifted by `-j`.
    pub fn minus(&self, j: i64) -> Invariants {
        Invariants { vals: self.vals.iter().map(|v| v - j).collect() }
    }

    pub fn is_integral(&self) -> bool {
        self.vals.iter().all(|&v| v >= 0)
    }

    pub fn largest(&self) -> i64 {
        self.vals.first().copied().unwrap_or(0)
    }

    pub fn profile(&self) -> Result<Profile> {
        if !self.is_integral() {
            return Err(Error::InvalidInvariants(format!("{self} has a negative entry")));
        }
        Ok(Profile { a: self.t_ge(2), b: self.t_eq(1), c: self.t_eq(0) })
    }

    /// Nondecreasing order, as printed in some tables.
    pub fn ascending(&self) -> Vec<i64> {
        self.vals.iter().rev().copied().collect()
    }

    pub fn concat(&self, o: &Invariants) -> Invariants {
        let mut v = self.vals.clone();
        v.extend_from_slice(&o.vals);
        Invariants::new(v)
    }
}

impl fmt::Display for Invariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.vals.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// `(a, b, c) = (t_{>=2}, t_1, t_0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Profile {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Profile {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        Profile { a, b, c }
    }

    /// Signed constructor used by shifted-profile tables.
    pub fn try_new(a: i64, b: i64, c: i64) -> Result<Self> {
        if a < 0 || b < 0 || c < 0 {
            return Err(Error::InvalidProfile(format!("({a},{b},{c})")));
        }
        Ok(Profile { a: a as usize, b: b as usize, c: c as usize })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let v: std::result::Result<Vec<i64>, _> = s.split(',').map(|t| t.trim().parse::<i64>()).collect();
        match v.as_deref() {
            Ok([a, b, c]) => Self::try_new(*a, *b, *c),
            _ => Err(Error::InvalidProfile(format!("expected a,b,c, got {s}"))),
        }
    }

    pub fn n(&self) -> usize {
        self.a + self.b + self.c
    }

    /// A representative invariant tuple `(2^a, 1^b, 0^c)`.
    pub fn representative(&self) -> Invariants {
        let mut v = vec![2; self.a];
        v.extend(std::iter::repeat(1).take(self.b));
        v.extend(std::iter::repeat(0).take(self.c));
        Invariants::new(v)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

/// Elementary-divisor valuations of a square matrix over `O/p^d`, computed by
/// minimal-valuation pivoting. Entries that stay zero report `d`.
pub fn chain_smith_vals(ring: &RingModel, m: &[Vec<OFElem>]) -> Vec<u32> {
    let n = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<OFElem>> = m.to_vec();
    let mut out = Vec::with_capacity(n.min(cols));
    let mut active_cols: Vec<usize> = (0..cols).collect();
    let mut row0 = 0;
    while row0 < n && !active_cols.is_empty() {
        let mut best = (ring.d + 1, 0, 0);
        'search: for (i, row) in a.iter().enumerate().skip(row0) {
            for (ci, &j) in active_cols.iter().enumerate() {
                let v = ring.val(row[j]);
                if v < best.0 {
                    best = (v, i, ci);
                    if v == 0 {
                        break 'search;
                    }
                }
            }
        }
        let (v, pi, pci) = best;
        if v >= ring.d {
            out.extend(std::iter::repeat(ring.d).take(n.min(cols) - out.len()));
            break;
        }
        a.swap(row0, pi);
        let pj = active_cols.remove(pci);
        let unit = ring.div_p_pow(a[row0][pj], v);
        let uinv = ring.inv(unit).expect("pivot unit");
        let prow = a[row0].clone();
        for row in a.iter_mut().skip(row0 + 1) {
            let x = row[pj];
            if ring.is_zero(x) {
                continue;
            }
            let f = ring.mul(ring.div_p_pow(x, v), uinv);
            for &j in active_cols.iter() {
                row[j] = ring.sub(row[j], ring.mul(f, prow[j]));
            }
            row[pj] = ring.zero();
        }
        out.push(v);
        row0 += 1;
    }
    out
}

/// Fundamental invariants of a nondegenerate Gram matrix, nonincreasing.
pub fn gram_invariants(g: &GramMatrix) -> Result<Invariants> {
    let det = g.det();
    if det.is_zero() {
        return Err(Error::DegenerateGram);
    }
    let shift = (-g.min_val().unwrap_or(0)).max(0);
    let scale = ExactScalar::p_pow(g.p, shift);
    let dv = det.val(g.p).expect("nonzero determinant") + shift * g.n as i64;
    let prec = (dv + 1) as u32;
    let ring = RingModel::with_u(g.p, prec, g.u)?;
    let m: Result<Vec<Vec<OFElem>>> = g
        .entries
        .iter()
        .map(|row| row.iter().map(|x| ring.from_exact(&x.mul(&scale, g.u))).collect())
        .collect();
    let vals = chain_smith_vals(&ring, &m?);
    debug_assert_eq!(vals.iter().map(|&v| v as i64).sum::<i64>(), dv);
    Ok(Invariants::new(vals.into_iter().map(|v| v as i64 - shift).collect()))
}

/// `(val(L), vol(L)) = (v(det G), q^{-val})`.
pub fn lattice_val_vol(g: &GramMatrix) -> Result<(i64, QRat)> {
    let det = g.det();
    let v = det.val(g.p).ok_or(Error::DegenerateGram)?;
    Ok((v, QRat::q_pow(-v)))
}

/// A hermitian lattice: its Gram matrix and optionally its basis written in
/// coordinates of a fixed ambient basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermLattice {
    pub gram: GramMatrix,
    pub basis: Option<Vec<Vec<ExactScalar>>>,
}

impl HermLattice {
    pub fn new(gram: GramMatrix) -> Self {
        HermLattice { gram, basis: None }
    }

    /// The lattice `A_lambda` with its own basis as ambient.
    pub fn diag(p: u64, vals: &[i64]) -> Result<Self> {
        let gram = GramMatrix::diag(p, vals)?;
        let n = vals.len();
        let basis = (0..n)
            .map(|i| (0..n).map(|j| if i == j { ExactScalar::one() } else { ExactScalar::zero() }).collect())
            .collect();
        Ok(HermLattice { gram, basis: Some(basis) })
    }

    pub fn invariants(&self) -> Result<Invariants> {
        gram_invariants(&self.gram)
    }

    pub fn rank(&self) -> usize {
        self.gram.n
    }
}

/// The dual lattice: Gram `G^{-1}`, basis `G^{-1} B`.
pub fn lattice_dual(l: &HermLattice) -> Result<HermLattice> {
    let gi = l.gram.inverse()?;
    let basis = l.basis.as_ref().map(|b| {
        let u = l.gram.u;
        gi.entries
            .iter()
            .map(|row| {
                (0..b[0].len())
                    .map(|j| row.iter().zip(b.iter()).fold(ExactScalar::zero(), |acc, (c, brow)| acc.add(&c.mul(&brow[j], u))))
                    .collect()
            })
            .collect()
    });
    Ok(HermLattice { gram: gi, basis })
}

/// `L1 ⊆ L2` for full-rank lattices given by square bases in common ambient
/// coordinates: true iff `B1 B2^{-1}` has `p`-integral entries.
pub fn is_sublattice(l1: &HermLattice, l2: &HermLattice) -> Result<bool> {
    let (Some(b1), Some(b2)) = (&l1.basis, &l2.basis) else {
        return Err(Error::InvalidInvariants("containment needs explicit bases".into()));
    };
    let p = l1.gram.p;
    let u = l1.gram.u;
    // invert B2 as a plain matrix over Q(sqrt u), reusing the Gram inverse code
    let m = GramMatrix { n: b2.len(), p, u, entries: b2.clone() };
    let b2i = m.inverse()?;
    for row in b1 {
        for j in 0..b2.len() {
            let x = row.iter().zip(b2i.entries.iter()).fold(ExactScalar::zero(), |acc, (c, r)| acc.add(&c.mul(&r[j], u)));
            if x.val(p).is_some_and(|v| v < 0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Unimodular matrix helpers used by basis-invariance checks.
pub fn mat_mul(a: &[Vec<ExactScalar>], b: &[Vec<ExactScalar>], u: u64) -> Vec<Vec<ExactScalar>> {
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| row.iter().zip(b.iter()).fold(ExactScalar::zero(), |acc, (x, br)| acc.add(&x.mul(&br[j], u))))
                .collect()
        })
        .collect()
}

pub fn identity(n: usize) -> Vec<Vec<ExactScalar>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { ExactScalar::one() } else { ExactScalar::zero() }).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn es(a: i64, b: i64) -> ExactScalar {
        ExactScalar::new(BigRational::from_integer(a.into()), BigRational::from_integer(b.into()))
    }

    #[test]
    fn ring_examples() {
        let r = RingModel::new(3, 2).unwrap();
        assert_eq!((r.u, r.size()), (2, 81));
        let r1 = RingModel::new(3, 1).unwrap();
        assert_eq!(r1.size(), 9);
        let r5 = RingModel::new(5, 1).unwrap();
        assert_eq!((r5.u, r5.size()), (2, 25));
        assert_eq!(RingModel::new(2, 1), Err(Error::InvalidPrime(2)));
        assert_eq!(RingModel::new(9, 1), Err(Error::InvalidPrime(9)));
    }

    #[test]
    fn norm_conj_and_inverse() {
        let r = RingModel::new(3, 2).unwrap();
        for x in r.elements() {
            let n = r.norm(x);
            assert_eq!(r.mul(x, r.conj(x)), OFElem { a: n, b: 0 });
            if r.is_unit(x) {
                assert_eq!(r.mul(x, r.inv(x).unwrap()), r.one());
            }
        }
        assert_eq!(r.val(r.from_int(3)), 1);
        assert_eq!(r.val(r.zero()), 2);
    }

    #[test]
    fn invariants_examples() {
        let g = GramMatrix::diag(3, &[0, 1]).unwrap();
        assert_eq!(gram_invariants(&g).unwrap().vals, vec![1, 0]);
        let g = GramMatrix::new(3, 2, vec![vec![es(3, 0), es(1, 0)], vec![es(1, 0), es(3, 0)]]).unwrap();
        assert_eq!(gram_invariants(&g).unwrap().vals, vec![0, 0]);
        let g = GramMatrix::diag(3, &[4, 4, 4]).unwrap();
        let inv = gram_invariants(&g).unwrap();
        assert_eq!(inv.vals, vec![4, 4, 4]);
        assert_eq!(inv.profile().unwrap(), Profile::new(3, 0, 0));
    }

    #[test]
    fn val_vol_examples() {
        let (v, vol) = lattice_val_vol(&GramMatrix::diag(3, &[1, 1, 2]).unwrap()).unwrap();
        assert_eq!((v, vol), (4, QRat::q_pow(-4)));
        let (v, vol) = lattice_val_vol(&GramMatrix::diag(3, &[0, 0, 0]).unwrap()).unwrap();
        assert_eq!((v, vol), (0, QRat::one()));
        let (v, vol) = lattice_val_vol(&GramMatrix::diag(3, &[-1]).unwrap()).unwrap();
        assert_eq!((v, vol), (-1, QRat::q_pow(1)));
    }

    #[test]
    fn duals() {
        let l = HermLattice::diag(3, &[2, 1]).unwrap();
        let d = lattice_dual(&l).unwrap();
        assert_eq!(d.invariants().unwrap().vals, vec![-1, -2]);
        assert_eq!(lattice_dual(&d).unwrap().gram, l.gram);
        let unimod = HermLattice::diag(5, &[0, 0]).unwrap();
        assert_eq!(lattice_dual(&unimod).unwrap(), unimod);
        let vertex = HermLattice::diag(3, &[1, 1, 0]).unwrap();
        let vd = lattice_dual(&vertex).unwrap();
        assert_eq!(vd.invariants().unwrap().vals, vec![0, -1, -1]);
        assert!(is_sublattice(&vertex, &vd).unwrap());
        let mut scaled = vertex.clone();
        scaled.basis = Some(
            vertex.basis.as_ref().unwrap().iter()
                .map(|r| r.iter().map(|x| x.mul(&ExactScalar::p_pow(3, -1), 2)).collect())
                .collect(),
        );
        assert!(is_sublattice(&vd, &scaled).unwrap());
        assert!(!is_sublattice(&scaled, &vd).unwrap());
    }

    #[test]
    fn degenerate_gram_is_rejected() {
        let g = GramMatrix::new(3, 2, vec![vec![es(1, 0), es(1, 0)], vec![es(1, 0), es(1, 0)]]).unwrap();
        assert_eq!(gram_invariants(&g), Err(Error::DegenerateGram));
    }

    #[test]
    fn gram_json_round_trip() {
        let g = GramMatrix::new(3, 2, vec![vec![es(3, 0), es(1, 1)], vec![es(1, -1), ExactScalar::p_pow(3, -2)]]).unwrap();
        let j = g.to_json().unwrap();
        assert_eq!(GramMatrix::from_json(&j).unwrap(), g);
    }
}
