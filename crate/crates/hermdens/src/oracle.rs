//! Brute-force local densities.
//!
//! `herm_count` counts `phi in M_{m x n}(O/p^d)` with `phi^t A_M conj(phi) = A_L`
//! modulo `p^d`. The target `M` is replaced by the diagonal lattice with the
//! same invariants (an isometric model, so the count does not change). The
//! hermitian product then splits over the rows of `phi`:
//!
//! `phi^t A_M conj(phi) = sum_k p^{a_k} r_k^t conj(r_k)`,
//!
//! so the count is a convolution of per-row histograms over hermitian
//! matrices mod `p^d`, read off at `A_L`. Row `k` only matters modulo
//! `p^{d - a_k}`; the remaining digits contribute a fixed power of `q^2`.
//! Primitive counting additionally tracks the span of the rows mod `p`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_budget, Error, Result};
use crate::padic::{gram_invariants, GramMatrix, OFElem, RingModel};

/// Which homomorphisms are counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    All,
    Primitive,
}

impl CountMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(CountMode::All),
            "primitive" => Ok(CountMode::Primitive),
            _ => Err(Error::Parse(format!("unknown count mode {s}"))),
        }
    }
}

/// One counting problem: target `M` (rank `m`), source `L` (rank `n`),
/// precision `p^d`.
#[derive(Clone, Debug)]
pub struct CountJob {
    pub m_gram: GramMatrix,
    pub l_gram: GramMatrix,
    pub p: u64,
    pub d: u32,
    pub mode: CountMode,
}

/// Hermitian `n x n` matrices mod `p^d`, packed into a `u128`: the real
/// diagonal first, then `(a, b)` for each entry above the diagonal.
#[derive(Clone, Copy)]
struct HermCodec {
    n: usize,
    radix: u64,
}

impl HermCodec {
    fn new(n: usize, radix: u64) -> Result<Self> {
        let bits = (radix as f64).log2() * (n * n) as f64;
        if bits >= 127.0 {
            return Err(Error::BudgetExceeded { required: u128::MAX, limit: 1u128 << 127 });
        }
        Ok(HermCodec { n, radix })
    }

    fn encode(&self, c: &[u64]) -> u128 {
        c.iter().rev().fold(0u128, |acc, &x| acc * self.radix as u128 + x as u128)
    }

    fn decode(&self, mut k: u128) -> Vec<u64> {
        (0..self.n * self.n)
            .map(|_| {
                let x = (k % self.radix as u128) as u64;
                k /= self.radix as u128;
                x
            })
            .collect()
    }

    fn add(&self, x: u128, y: u128) -> u128 {
        let (a, b) = (self.decode(x), self.decode(y));
        let c: Vec<u64> = a.iter().zip(&b).map(|(s, t)| (s + t) % self.radix).collect();
        self.encode(&c)
    }

    fn sub(&self, x: u128, y: u128) -> u128 {
        let (a, b) = (self.decode(x), self.decode(y));
        let c: Vec<u64> = a.iter().zip(&b).map(|(s, t)| (s + self.radix - t) % self.radix).collect();
        self.encode(&c)
    }

    /// Coordinates of a hermitian matrix given as full entries.
    fn coords(&self, ring: &RingModel, g: &[Vec<OFElem>]) -> Result<Vec<u64>> {
        let mut c = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            if g[i][i].b % ring.modulus != 0 {
                return Err(Error::NotHermitian(format!("diagonal entry {i} is not rational")));
            }
            c.push(g[i][i].a);
        }
        for i in 0..self.n {
            for j in i + 1..self.n {
                if ring.conj(g[i][j]) != g[j][i] {
                    return Err(Error::NotHermitian(format!("entries ({i},{j}) and ({j},{i})")));
                }
                c.push(g[i][j].a);
                c.push(g[i][j].b);
            }
        }
        Ok(c)
    }
}

/// Subspaces of `F_{q^2}^n` in reduced row echelon form, keyed as `u64`.
#[derive(Clone)]
struct SpanCodec {
    n: usize,
    f: RingModel,
}

const NO_LINE: u64 = u64::MAX;

impl SpanCodec {
    fn digit(&self, x: OFElem) -> u64 {
        x.a * self.f.p + x.b
    }

    fn undigit(&self, d: u64) -> OFElem {
        OFElem { a: d / self.f.p, b: d % self.f.p }
    }

    fn pack(&self, rows: &[Vec<OFElem>]) -> u64 {
        let base = self.f.p * self.f.p;
        let mut k = 0u64;
        for r in rows {
            for &x in r {
                k = k * base + self.digit(x);
            }
        }
        k * (self.n as u64 + 1) + rows.len() as u64
    }

    fn unpack(&self, mut k: u64) -> Vec<Vec<OFElem>> {
        let base = self.f.p * self.f.p;
        let dim = (k % (self.n as u64 + 1)) as usize;
        k /= self.n as u64 + 1;
        let mut flat = vec![self.f.zero(); dim * self.n];
        for x in flat.iter_mut().rev() {
            *x = self.undigit(k % base);
            k /= base;
        }
        flat.chunks(self.n).map(|c| c.to_vec()).collect()
    }

    fn dim(&self, k: u64) -> usize {
        (k % (self.n as u64 + 1)) as usize
    }

    fn line(&self, r: &[OFElem]) -> u64 {
        let f = &self.f;
        let v: Vec<OFElem> = r.iter().map(|x| OFElem { a: x.a % f.p, b: x.b % f.p }).collect();
        match v.iter().position(|x| !f.is_zero(*x)) {
            None => NO_LINE,
            Some(i) => {
                let c = f.inv(v[i]).expect("nonzero in a field");
                let w: Vec<OFElem> = v.iter().map(|&x| f.mul(x, c)).collect();
                w.iter().fold(0u64, |k, &x| k * f.p * f.p + self.digit(x))
            }
        }
    }

    fn line_vec(&self, mut k: u64) -> Vec<OFElem> {
        let base = self.f.p * self.f.p;
        let mut v = vec![self.f.zero(); self.n];
        for x in v.iter_mut().rev() {
            *x = self.undigit(k % base);
            k /= base;
        }
        v
    }

    /// Span of an echelon basis and one more line, echelonized again.
    fn join(&self, span: u64, line: u64) -> u64 {
        if line == NO_LINE {
            return span;
        }
        let f = &self.f;
        let mut rows = self.unpack(span);
        rows.push(self.line_vec(line));
        let mut out: Vec<Vec<OFElem>> = Vec::new();
        let mut col = 0;
        while col < self.n && !rows.is_empty() {
            if let Some(pos) = rows.iter().position(|r| !f.is_zero(r[col])) {
                let mut piv = rows.swap_remove(pos);
                let c = f.inv(piv[col]).expect("nonzero in a field");
                for x in piv.iter_mut() {
                    *x = f.mul(*x, c);
                }
                for r in rows.iter_mut().chain(out.iter_mut()) {
                    let t = r[col];
                    if !f.is_zero(t) {
                        for j in 0..self.n {
                            r[j] = f.sub(r[j], f.mul(t, piv[j]));
                        }
                    }
                }
                out.push(piv);
            }
            col += 1;
        }
        out.sort_by_key(|r| r.iter().position(|x| !f.is_zero(*x)));
        self.pack(&out)
    }
}

/// Histogram of one row: `(hermitian key, line key) -> multiplicity`.
type RowHist = HashMap<(u128, u64), u128>;

static ROW_CACHE: Lazy<Mutex<HashMap<(u64, u32, usize, i64, CountMode), Arc<RowHist>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn row_hist(p: u64, d: u32, n: usize, a: i64, mode: CountMode, budget: u128) -> Result<Arc<RowHist>> {
    let key = (p, d, n, a, mode);
    if let Some(h) = ROW_CACHE.lock().get(&key) {
        return Ok(h.clone());
    }
    let dd = (d as i64 - a).max(1) as u32;
    let sub = RingModel::new(p, dd)?;
    let size = sub.size();
    let visits = size.checked_pow(n as u32).unwrap_or(u128::MAX);
    check_budget(visits, budget)?;
    let ring = RingModel::new(p, d)?;
    let codec = HermCodec::new(n, ring.modulus)?;
    let spans = SpanCodec { n, f: RingModel::new(p, 1)? };
    let mult = (p as u128).pow(2 * n as u32 * (d - dd.min(d)));
    let elems: Vec<OFElem> = sub.elements().collect();
    let scale = if a >= d as i64 { 0 } else { p.pow(a as u32) };
    let hist = (0..elems.len())
        .into_par_iter()
        .fold(RowHist::new, |mut acc, first| {
            let mut idx = vec![0usize; n];
            idx[0] = first;
            let mut r = vec![elems[first]; n];
            let mut c = vec![0u64; n * n];
            loop {
                for i in 0..n {
                    r[i] = elems[idx[i]];
                }
                let mut pos = 0;
                for i in 0..n {
                    c[pos] = (ring.norm(r[i]) * scale) % ring.modulus;
                    pos += 1;
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let x = ring.mul(r[i], ring.conj(r[j]));
                        c[pos] = (x.a * scale) % ring.modulus;
                        c[pos + 1] = (x.b * scale) % ring.modulus;
                        pos += 2;
                    }
                }
                let line = if mode == CountMode::Primitive { spans.line(&r) } else { 0 };
                *acc.entry((codec.encode(&c), line)).or_insert(0) += mult;
                let mut i = n - 1;
                loop {
                    if i == 0 {
                        return acc;
                    }
                    idx[i] += 1;
                    if idx[i] < elems.len() {
                        break;
                    }
                    idx[i] = 0;
                    i -= 1;
                }
            }
        })
        .reduce(RowHist::new, |mut x, y| {
            if x.len() < y.len() {
                return merge(y, x);
            }
            for (k, v) in y {
                *x.entry(k).or_insert(0) += v;
            }
            x
        });
    let h = Arc::new(hist);
    ROW_CACHE.lock().insert(key, h.clone());
    Ok(h)
}

fn merge(mut x: RowHist, y: RowHist) -> RowHist {
    for (k, v) in y {
        *x.entry(k).or_insert(0) += v;
    }
    x
}

fn gram_mod(g: &GramMatrix, ring: &RingModel) -> Result<Vec<Vec<OFElem>>> {
    if g.u != ring.u {
        return Err(Error::PrecisionLoss("Gram matrices use different quadratic models".into()));
    }
    g.entries.iter().map(|row| row.iter().map(|x| ring.from_exact(x)).collect()).collect()
}

/// Exact number of hermitian homomorphisms `L -> M` modulo `p^d`.
pub fn herm_count(job: &CountJob, budget: u128) -> Result<u128> {
    let (m, n) = (job.m_gram.n, job.l_gram.n);
    if job.d == 0 {
        return Err(Error::IndexOutOfRange("precision must be at least 1".into()));
    }
    if job.m_gram.p != job.p || job.l_gram.p != job.p {
        return Err(Error::InvalidPrime(job.p));
    }
    let ring = RingModel::with_u(job.p, job.d, job.m_gram.u)?;
    // entries of M must embed too, even though only its invariants are used
    gram_mod(&job.m_gram, &ring)?;
    let target = gram_mod(&job.l_gram, &ring)?;
    let m_inv = gram_invariants(&job.m_gram)?;
    if !m_inv.is_integral() {
        return Err(Error::PrecisionLoss(format!("target invariants {m_inv} are not integral")));
    }
    if job.mode == CountMode::Primitive && m < n {
        return Ok(0);
    }
    let codec = HermCodec::new(n, ring.modulus)?;
    let t_key = codec.encode(&codec.coords(&ring, &target)?);
    let spans = SpanCodec { n, f: RingModel::new(job.p, 1)? };
    let empty = spans.pack(&[]);

    // rows with the smallest support first, the largest one is read off last
    let mut rows: Vec<i64> = m_inv.vals.clone();
    rows.sort_unstable_by(|x, y| y.cmp(x));
    let hists: Vec<Arc<RowHist>> =
        rows.iter().map(|&a| row_hist(job.p, job.d, n, a, job.mode, budget)).collect::<Result<_>>()?;
    if m == 0 {
        return Ok(if t_key == 0 && n == 0 { 1 } else { 0 });
    }

    let mut state: HashMap<(u128, u64), u128> = HashMap::from([((0u128, empty), 1u128)]);
    let mut join_cache: HashMap<(u64, u64), u64> = HashMap::new();
    for h in &hists[..m - 1] {
        let visits = (state.len() as u128).saturating_mul(h.len() as u128);
        check_budget(visits, budget)?;
        let mut next: HashMap<(u128, u64), u128> = HashMap::new();
        for (&(hk, sk), &c) in &state {
            for (&(rk, lk), &rc) in h.iter() {
                let s = *join_cache.entry((sk, lk)).or_insert_with(|| spans.join(sk, lk));
                *next.entry((codec.add(hk, rk), s)).or_insert(0) += c * rc;
            }
        }
        state = next;
    }

    let last = &hists[m - 1];
    let mut by_key: HashMap<u128, Vec<(u64, u128)>> = HashMap::new();
    for (&(rk, lk), &rc) in last.iter() {
        by_key.entry(rk).or_default().push((lk, rc));
    }
    let mut total = 0u128;
    for (&(hk, sk), &c) in &state {
        if let Some(list) = by_key.get(&codec.sub(t_key, hk)) {
            for &(lk, rc) in list {
                if job.mode == CountMode::Primitive && spans.dim(spans.join(sk, lk)) < n {
                    continue;
                }
                total += c * rc;
            }
        }
    }
    Ok(total)
}

/// A stabilized density with the two counts that certify it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityReport {
    pub d: u32,
    pub counts: [String; 2],
    #[serde(serialize_with = "ser_rational")]
    pub normalized: BigRational,
    pub stabilized: bool,
}

fn ser_rational<S: serde::Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn normalized(count: u128, p: u64, d: u32, m: usize, n: usize) -> BigRational {
    let e = d as usize * n * (2 * m - n);
    BigRational::new(BigInt::from(count), BigInt::from(p).pow(e as u32))
}

/// `Den(M, L)` (or `Pden` in primitive mode): the normalized count at
/// `d0 = max invariant of L + 1` and at `d0 + 1`, which must agree.
pub fn density(m: &GramMatrix, l: &GramMatrix, p: u64, mode: CountMode, budget: u128) -> Result<DensityReport> {
    if l.n > m.n {
        return Err(Error::InvalidInvariants(format!("source rank {} exceeds target rank {}", l.n, m.n)));
    }
    let l_inv = gram_invariants(l)?;
    if !l_inv.is_integral() {
        return Err(Error::PrecisionLoss(format!("source invariants {l_inv} are not integral")));
    }
    let d0 = (l_inv.largest().max(0) + 1) as u32;
    let mut vals = Vec::with_capacity(2);
    let mut counts = Vec::with_capacity(2);
    for d in [d0, d0 + 1] {
        let job = CountJob { m_gram: m.clone(), l_gram: l.clone(), p, d, mode };
        let c = herm_count(&job, budget)?;
        counts.push(c.to_string());
        vals.push(normalized(c, p, d, m.n, l.n));
    }
    if vals[0] != vals[1] {
        return Err(Error::NotStabilized {
            d: d0,
            next: d0 + 1,
            first: vals[0].to_string(),
            second: vals[1].to_string(),
        });
    }
    Ok(DensityReport {
        d: d0,
        counts: [counts[0].clone(), counts[1].clone()],
        normalized: vals.swap_remove(0),
        stabilized: true,
    })
}

/// Interpolated density polynomial `X -> Den(I_k ⊥ M, L)` at `X = (-q)^{-k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityPoly {
    /// Coefficients in increasing degree.
    pub coeffs: Vec<BigRational>,
    pub points: Vec<(u32, BigRational, BigRational)>,
    /// `-(d/dX) P` at `X = 1`.
    pub derivative: BigRational,
    /// Whether the extra point `k = kmax + 1` was within budget and checked.
    pub extra_checked: bool,
}

impl DensityPoly {
    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }
}

fn with_units(m: &GramMatrix, k: usize) -> Result<GramMatrix> {
    let inv = gram_invariants(m)?;
    let mut vals = vec![0; k];
    vals.extend(inv.vals.iter().copied());
    GramMatrix::diag(m.p, &vals)
}

/// Lagrange interpolation through `(x_i, y_i)`, coefficients in increasing degree.
pub fn lagrange(points: &[(BigRational, BigRational)]) -> Vec<BigRational> {
    let k = points.len();
    let mut out = vec![BigRational::zero(); k];
    for (i, (xi, yi)) in points.iter().enumerate() {
        let mut basis = vec![BigRational::one()];
        let mut denom = BigRational::one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut nb = vec![BigRational::zero(); basis.len() + 1];
            for (t, c) in basis.iter().enumerate() {
                nb[t + 1] += c;
                nb[t] -= c * xj;
            }
            basis = nb;
            denom *= xi - xj;
        }
        for (t, c) in basis.iter().enumerate() {
            out[t] += c * yi / &denom;
        }
    }
    out
}

pub fn density_poly(m: &GramMatrix, l: &GramMatrix, p: u64, kmax: u32, budget: u128) -> Result<DensityPoly> {
    let x_of = |k: u32| {
        let base = BigRational::from_integer(-BigInt::from(p));
        base.pow(k as i32).recip()
    };
    let mut points = Vec::new();
    for k in 0..=kmax {
        let mk = with_units(m, k as usize)?;
        let v = density(&mk, l, p, CountMode::All, budget)?.normalized;
        points.push((k, x_of(k), v));
    }
    let fit: Vec<(BigRational, BigRational)> = points.iter().map(|(_, x, y)| (x.clone(), y.clone())).collect();
    let coeffs = lagrange(&fit);
    let poly = DensityPoly { coeffs, points, derivative: BigRational::zero(), extra_checked: false };
    let mut extra_checked = false;
    let mk = with_units(m, kmax as usize + 1)?;
    match density(&mk, l, p, CountMode::All, budget) {
        Ok(r) => {
            if poly.eval(&x_of(kmax + 1)) != r.normalized {
                return Err(Error::UnderdeterminedFit(format!(
                    "degree {kmax} fit misses the point k={}",
                    kmax + 1
                )));
            }
            extra_checked = true;
        }
        Err(Error::BudgetExceeded { .. }) => {}
        Err(e) => return Err(e),
    }
    let derivative = -poly
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .fold(BigRational::zero(), |acc, (i, c)| acc + c * BigRational::from_integer(BigInt::from(i)));
    Ok(DensityPoly { derivative, extra_checked, ..poly })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cy::{self_density, SelfDensityKind};
    use crate::error::DEFAULT_BUDGET;

    fn diag(v: &[i64]) -> GramMatrix {
        GramMatrix::diag(3, v).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn job(m: &[i64], l: &[i64], d: u32, mode: CountMode) -> CountJob {
        CountJob { m_gram: diag(m), l_gram: diag(l), p: 3, d, mode }
    }

    #[test]
    fn norm_fiber_count() {
        assert_eq!(herm_count(&job(&[0], &[0], 2, CountMode::All), DEFAULT_BUDGET).unwrap(), 12);
        assert_eq!(herm_count(&job(&[0], &[1], 2, CountMode::All), DEFAULT_BUDGET).unwrap(), 0);
        assert_eq!(herm_count(&job(&[0], &[0], 2, CountMode::Primitive), DEFAULT_BUDGET).unwrap(), 12);
    }

    #[test]
    fn brute_force_agrees() {
        // direct enumeration of 2x2 matrices mod 3
        let ring = RingModel::new(3, 1).unwrap();
        let el: Vec<OFElem> = ring.elements().collect();
        let a = [1u64, 0];
        let mut count = 0;
        let mut prim = 0;
        for &x in &el {
            for &y in &el {
                for &z in &el {
                    for &w in &el {
                        // columns (x,z), (y,w); A_M = diag(1, 3) = diag(1, 0) mod 3
                        let g11 = (ring.norm(x) * a[0] + ring.norm(z) * a[1]) % 3;
                        let g22 = (ring.norm(y) * a[0] + ring.norm(w) * a[1]) % 3;
                        let g12 = ring.mul(x, ring.conj(y));
                        if g11 == 1 && g22 == 1 && ring.is_zero(g12) {
                            count += 1;
                            let det = ring.sub(ring.mul(x, w), ring.mul(y, z));
                            if !ring.is_zero(det) {
                                prim += 1;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(herm_count(&job(&[0, 1], &[0, 0], 1, CountMode::All), DEFAULT_BUDGET).unwrap(), count);
        assert_eq!(herm_count(&job(&[0, 1], &[0, 0], 1, CountMode::Primitive), DEFAULT_BUDGET).unwrap(), prim);
    }

    #[test]
    fn self_densities_small() {
        let v = density(&diag(&[0]), &diag(&[0]), 3, CountMode::All, DEFAULT_BUDGET).unwrap();
        assert_eq!(v.normalized, rat(4, 3));
        let v = density(&diag(&[1, 0]), &diag(&[1, 0]), 3, CountMode::All, DEFAULT_BUDGET).unwrap();
        assert_eq!(v.normalized, rat(16, 3));
        let want = self_density(SelfDensityKind::INk { n: 2, k: 1 }).unwrap().eval(3).unwrap();
        assert_eq!(v.normalized, want);
    }

    #[test]
    fn non_isometric_vanishes() {
        // different determinant classes: the spaces are not isometric
        let v = density(&diag(&[0]), &diag(&[1]), 3, CountMode::All, DEFAULT_BUDGET).unwrap();
        assert!(v.normalized.is_zero());
        // <pi^2> sits inside <1> exactly once up to the self-density
        let v = density(&diag(&[0]), &diag(&[2]), 3, CountMode::All, DEFAULT_BUDGET).unwrap();
        assert_eq!(v.normalized, rat(4, 3));
    }

    #[test]
    fn poly_through_points() {
        let r = density_poly(&diag(&[0]), &diag(&[0]), 3, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.eval(&BigRational::one()), rat(4, 3));
        for (_, x, y) in &r.points {
            assert_eq!(&r.eval(x), y);
        }
    }

    #[test]
    fn lagrange_recovers_line() {
        let pts = vec![(rat(0, 1), rat(1, 1)), (rat(1, 1), rat(3, 1))];
        assert_eq!(lagrange(&pts), vec![rat(1, 1), rat(2, 1)]);
    }
}
