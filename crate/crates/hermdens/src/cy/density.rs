//! Densities assembled from the constants: lattice sums over integral
//! overlattices, primitive sums, the Möbius-inverted primitive value and the
//! Fourier transform of the primitive density at negative valuations.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::constants::{cy_d, cy_d_lambda};
use crate::error::{check_budget, Error, Result};
use crate::lattice_enum::{
    dual_cosets, integral_overlattices, overlattices, stratum_counts, Filter, Stratum,
};
use crate::padic::{chain_smith_vals, HermLattice, Invariants, OFElem, Profile, RingModel};
use crate::qexact::QRat;

/// How a value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    ClosedForm,
    LatticeSum,
    StratumSum,
    Enumeration,
    Oracle,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::ClosedForm => "closed-form",
            Route::LatticeSum => "lattice-sum",
            Route::StratumSum => "stratum-sum",
            Route::Enumeration => "enumeration",
            Route::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(Route::ClosedForm),
            "lattice-sum" => Ok(Route::LatticeSum),
            "stratum-sum" => Ok(Route::StratumSum),
            "enumeration" => Ok(Route::Enumeration),
            "oracle" => Ok(Route::Oracle),
            _ => Err(Error::Parse(format!("unknown route {s}"))),
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A value with the route that produced it. Values for the same key from
/// different routes must agree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityValue {
    pub value: QRat,
    pub route: Route,
    pub key: String,
}

fn check_parity(val: i64, h: i64) -> Result<()> {
    if (val - h - 1).rem_euclid(2) != 0 {
        return Err(Error::ParityMismatch { val, target: h + 1 });
    }
    Ok(())
}

/// `sum_{L ⊆ L' ⊆ L'^vee} D_{n,h}(L')` over all integral overlattices.
///
/// Lattices are enumerated at the prime of `l`, so the result is the
/// rational function obtained from that prime's lattice counts.
pub fn pden_lattice(l: &HermLattice, h: i64, budget: u128) -> Result<DensityValue> {
    let inv = l.invariants()?;
    let n = inv.rank() as i64;
    check_parity(inv.val(), h)?;
    let ys = integral_overlattices(l, budget)?;
    let mut acc = QRat::zero();
    for y in &ys {
        acc = acc + cy_d_lambda(n, h, &y.invariants)?;
    }
    Ok(DensityValue { value: acc, route: Route::LatticeSum, key: format!("pden {inv} h={h}") })
}

/// Alternating sum `sum_i (-1)^i q^{i(i-1)} sum_{l(L'/L)=i} pden(L')` over
/// `L ⊆ L' ⊆ pi^{-1} L`. The weight uses `q^2`, the size of the residue field
/// of `F`.
pub fn ppden_moebius(l: &HermLattice, h: i64, budget: u128) -> Result<DensityValue> {
    let inv = l.invariants()?;
    check_parity(inv.val(), h)?;
    let set = overlattices(l, 1, Filter::Integral, budget)?;
    let mut acc = QRat::zero();
    for y in &set.items {
        let i = y.length as i64;
        let yl = HermLattice::diag(l.gram.p, &y.invariants.vals)?;
        let inner = pden_lattice(&yl, h, budget)?.value;
        let sign = if i % 2 == 0 { QRat::one() } else { -QRat::one() };
        acc = acc + sign * QRat::q_pow(i * (i - 1)) * inner;
    }
    Ok(DensityValue { value: acc, route: Route::LatticeSum, key: format!("ppden {inv} h={h}") })
}

/// Exact integer norm `a^2 - u b^2` of a digit pair.
fn int_norm(x: OFElem, u: i128) -> i128 {
    let (a, b) = (x.a as i128, x.b as i128);
    a * a - u * b * b
}

/// Invariants of `L♭ + <v>` where `L♭ = A_lambda` and `v` has pairings
/// `(e_i, v) = conj(t_i)` and norm `nv` (exact integer).
fn extended_invariants(lam: &[i64], t: &[OFElem], nv: i128, p: u64, prec: u32) -> Result<Invariants> {
    let ring = RingModel::new(p, prec)?;
    let n = lam.len() + 1;
    let mut g = vec![vec![ring.zero(); n]; n];
    for (i, &l) in lam.iter().enumerate() {
        g[i][i] = ring.from_int((p as i128).pow(l as u32));
        let ti = ring.elem(t[i].a as i128, t[i].b as i128);
        g[i][n - 1] = ring.conj(ti);
        g[n - 1][i] = ti;
    }
    g[n - 1][n - 1] = ring.from_int(nv);
    let vals = chain_smith_vals(&ring, &g);
    if vals.iter().any(|&v| v >= prec) {
        return Err(Error::PrecisionLoss(format!("invariant reached precision {prec}")));
    }
    Ok(Invariants::new(vals.into_iter().map(|v| v as i64).collect()))
}

/// `sum D_{n,h}(L')` over integral `L' ⊇ L♭ ⊕ <x>` with `L' ∩ L♭_F = L♭`,
/// where `L♭ = A_lambda` has rank `n-1` and `(x,x) = p^{x_val}`.
///
/// Such `L'` are `L♭ + O(pi^{-k} x + w)` with `0 <= k <= x_val`,
/// `w ∈ (L♭)^vee / L♭`, `pi^k w ∈ L♭` and integral norm.
pub fn pden_primitive_at(lam: &Invariants, h: i64, x_val: i64, p: u64, budget: u128) -> Result<DensityValue> {
    if x_val < 0 {
        return Err(Error::IndexOutOfRange(format!("x_val {x_val} must be >= 0")));
    }
    if !lam.is_integral() {
        return Err(Error::InvalidInvariants(format!("{lam} is not integral")));
    }
    check_parity(lam.val() + x_val, h)?;
    let n = lam.rank() as i64 + 1;
    let required: u128 = (0..=x_val)
        .map(|k| {
            let e: i64 = lam.vals.iter().map(|&l| l.min(k)).sum();
            (p as u128).checked_pow(2 * e as u32).unwrap_or(u128::MAX)
        })
        .fold(0u128, |a, b| a.saturating_add(b));
    check_budget(required, budget)?;
    let ring1 = RingModel::new(p, 1)?;
    let u = ring1.u as i128;
    let pi = p as i128;
    let big_k = lam.largest().max(0);
    let prec = (lam.val() + x_val + 2) as u32;
    let mut acc = QRat::zero();
    for k in 0..=x_val {
        // w = sum t_i p^{-lambda_i} e_i with p^k w ∈ L♭: t_i ≡ 0 mod p^{max(lambda_i - k, 0)}
        let steps: Vec<(i128, i128)> = lam
            .vals
            .iter()
            .map(|&l| {
                let step = pi.pow((l - k).max(0) as u32);
                (step, pi.pow(l as u32))
            })
            .collect();
        let mut digits: Vec<(i128, i128)> = vec![(0, 0); lam.rank()];
        loop {
            // norm of v = pi^{-k} x + w, scaled by p^{K + 2k}
            let scale_exp = big_k + 2 * k;
            let mut s: i128 = pi.pow((x_val + big_k) as u32);
            for (i, &(a, b)) in digits.iter().enumerate() {
                s += (a * a - u * b * b) * pi.pow((scale_exp - lam.vals[i]) as u32);
            }
            let integral = s % pi.pow(scale_exp as u32) == 0;
            if integral {
                let nv = s / pi.pow(scale_exp as u32);
                // the pairing (pi^{-k}x + w, e_i) = t_i in L♭-coordinates
                let t: Vec<OFElem> =
                    digits.iter().map(|&(a, b)| OFElem { a: a as u64, b: b as u64 }).collect();
                let inv = extended_invariants(&lam.vals, &t, nv, p, prec)?;
                acc = acc + cy_d_lambda(n, h, &inv)?;
            }
            let mut i = 0;
            loop {
                if i == digits.len() {
                    break;
                }
                let (step, range) = steps[i];
                digits[i].0 += step;
                if digits[i].0 < range {
                    break;
                }
                digits[i].0 = 0;
                digits[i].1 += step;
                if digits[i].1 < range {
                    break;
                }
                digits[i].1 = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
    }
    Ok(DensityValue {
        value: acc,
        route: Route::LatticeSum,
        key: format!("pden-prim {lam} h={h} x_val={x_val}"),
    })
}

/// Profile of `L♭ + <u♭ + u⊥>` for `u♭` in a given stratum, where
/// `val(u⊥,u⊥) = val_uperp`. For `val_uperp = 1` the stratum `1-2` splits;
/// `split` picks the sub-case (`false` for 1-2-1, `true` for 1-2-2).
pub fn extend_profile(p: Profile, stratum: Stratum, val_uperp: i64, split: bool) -> Result<Profile> {
    if val_uperp < 1 {
        return Err(Error::InvalidCase(format!("val_uperp {val_uperp} must be >= 1")));
    }
    let (a, b, c) = (p.a as i64, p.b as i64, p.c as i64);
    let out = match (stratum, val_uperp) {
        (Stratum::C11, 1) => (a, b + 1, c),
        (Stratum::C12, 1) if !split => (a, b + 1, c),
        (Stratum::C12, 1) => (a + 1, b, c),
        (Stratum::C11, _) => (a + 1, b, c),
        (Stratum::C12, _) => (a, b + 1, c),
        (Stratum::C13C32, _) => (a, b, c + 1),
        (Stratum::C21C41, _) => (a + 1, b - 2, c + 2),
        (Stratum::C22C42, _) => (a, b - 1, c + 2),
        (Stratum::C31, _) => (a - 1, b + 2, c),
        (Stratum::C5, _) => (a - 1, b, c + 2),
    };
    Profile::try_new(out.0, out.1, out.2).map_err(|_| Error::EmptyStratum(format!("{stratum} for {p}")))
}

/// The five profiles with extra horizontal contributions.
fn exceptional(n: i64, h: i64, p: Profile) -> Option<usize> {
    let t = (p.a as i64, p.b as i64, p.c as i64);
    [(1, h, n - h - 2), (1, h - 2, n - h), (0, h - 1, n - h), (0, h, n - h - 1), (0, h + 1, n - h - 2)]
        .iter()
        .position(|&e| e == t)
}

/// Fourier transform of the primitive density at `val(x,x) = x_val < 0`.
pub fn fourier_pden_primitive(
    n: i64,
    h: i64,
    lam: &Invariants,
    x_val: i64,
    route: Route,
    p: u64,
    budget: u128,
) -> Result<DensityValue> {
    if x_val >= 0 {
        return Err(Error::IndexOutOfRange(format!("x_val {x_val} must be negative")));
    }
    if lam.rank() as i64 != n - 1 || !lam.is_integral() {
        return Err(Error::InvalidInvariants(format!("{lam} must be integral of rank {}", n - 1)));
    }
    if !(1 <= h && h <= n) {
        return Err(Error::IndexOutOfRange(format!("h={h} outside 1..={n}")));
    }
    check_parity(lam.val() + x_val, h)?;
    let value = match route {
        Route::ClosedForm => fourier_closed(n, h, lam, x_val)?,
        Route::StratumSum => fourier_strata(n, h, lam, x_val)?,
        Route::Enumeration => fourier_enumerate(n, h, lam, x_val, p, budget)?,
        _ => return Err(Error::InvalidCase(format!("route {route} does not apply"))),
    };
    Ok(DensityValue { value, route, key: format!("fourier {lam} n={n} h={h} x_val={x_val}") })
}

fn fourier_closed(n: i64, h: i64, lam: &Invariants, x_val: i64) -> Result<QRat> {
    let p = lam.profile()?;
    let q = QRat::q_pow(1);
    let one = QRat::one();
    let geo = &one / (&one - QRat::q_pow(-2));
    let vx = QRat::q_pow(x_val);
    let base = || -> Result<QRat> {
        if h == 0 {
            return Ok(QRat::zero());
        }
        Ok(-(QRat::q_pow(-h) * cy_d(n - 1, h - 1, p)?))
    };
    let exc = exceptional(n, h, p);
    if x_val <= -2 {
        let v = &geo * &vx;
        return Ok(match exc {
            None => QRat::zero(),
            Some(0) => QRat::q_pow(h - 1) * (&q + &one) * v,
            Some(1) => QRat::q_pow(-h) * (&q + &one) * v,
            Some(2) => QRat::q_pow(-(h - 1)) * v,
            Some(3) => QRat::q_pow(-h) * v,
            Some(_) => QRat::q_pow(-(h + 1)) * (QRat::q_pow(2 * h + 1) + QRat::neg_q_pow(h)) * v,
        });
    }
    Ok(match exc {
        None => base()?,
        Some(0) => QRat::q_pow(h - 2) * (&q + &one) * &geo + base()?,
        Some(1) => QRat::q_pow(-h - 1) * (&q + &one) * &geo + base()?,
        Some(3) => QRat::q_pow(-h - 1) * &geo + base()?,
        Some(_) => {
            return Err(Error::InvalidParity(format!(
                "profile {p} cannot occur at x_val = -1 for (n,h)=({n},{h})"
            )))
        }
    })
}

fn strata_sum(n: i64, h: i64, p: Profile, counts: &std::collections::BTreeMap<Stratum, QRat>, val_uperp: i64) -> Result<QRat> {
    let mut acc = QRat::zero();
    let q = QRat::q_pow(1);
    let one = QRat::one();
    for (&st, cnt) in counts {
        if cnt.is_zero() {
            continue;
        }
        if val_uperp == 1 && st == Stratum::C12 {
            let d1 = cy_d(n, h, extend_profile(p, st, 1, false)?)?;
            let d2 = cy_d(n, h, extend_profile(p, st, 1, true)?)?;
            let w1 = (&q - QRat::from_int(2)) / (&q - &one);
            let w2 = &one / (&q - &one);
            acc = acc + cnt * &(w1 * d1 + w2 * d2);
        } else {
            acc = acc + cnt * &cy_d(n, h, extend_profile(p, st, val_uperp, false)?)?;
        }
    }
    Ok(acc)
}

fn fourier_strata(n: i64, h: i64, lam: &Invariants, x_val: i64) -> Result<QRat> {
    let p = lam.profile()?;
    let counts = stratum_counts(lam)?;
    let vol = QRat::q_pow(-lam.val());
    let one = QRat::one();
    let geo = &one / (&one - QRat::q_pow(-2));
    let s2 = strata_sum(n, h, p, &counts, 2)?;
    if x_val <= -2 {
        return Ok(vol * QRat::q_pow(x_val) * geo * s2);
    }
    let s1 = strata_sum(n, h, p, &counts, 1)?;
    Ok(vol * (QRat::q_pow(-1) * s1 + QRat::q_pow(-3) * geo * s2))
}

/// Raw coset sum: for each shell `u⊥ = pi^i x^vee` and each `u♭` in
/// `(L♭)^{vee,>=0}/L♭`, add `D_{n,h}(L♭+<u>) vol(L♭+<u>)`. Shells `0`, `1`
/// and `2` are computed; shells beyond are summed geometrically after
/// checking that shells 1 and 2 agree.
fn fourier_enumerate(n: i64, h: i64, lam: &Invariants, x_val: i64, p: u64, budget: u128) -> Result<QRat> {
    let cosets = dual_cosets(lam, p, budget)?;
    let u = RingModel::new(p, 1)?.u as i128;
    let pi = p as i128;
    let big_k = lam.largest().max(1);
    let shell = |i: i64| -> Result<QRat> {
        let vu = -x_val + 2 * i;
        let prec = (lam.val() + vu + 2) as u32;
        let parts: Vec<Result<QRat>> = cosets
            .par_iter()
            .map(|c| {
                let mut s: i128 = pi.pow((vu + big_k) as u32);
                for (j, t) in c.t.iter().enumerate() {
                    s += int_norm(*t, u) * pi.pow((big_k - lam.vals[j]) as u32);
                }
                debug_assert_eq!(s % pi.pow(big_k as u32), 0);
                let nv = s / pi.pow(big_k as u32);
                let inv = extended_invariants(&lam.vals, &c.t, nv, p, prec)?;
                cy_d_lambda(n, h, &inv)
            })
            .collect();
        let mut acc = QRat::zero();
        for x in parts {
            acc = acc + x?;
        }
        Ok(acc)
    };
    let s0 = shell(0)?;
    let s1 = shell(1)?;
    let s2 = shell(2)?;
    if s1 != s2 {
        return Err(Error::NotStabilized { d: 1, next: 2, first: s1.to_string(), second: s2.to_string() });
    }
    let vol = QRat::q_pow(-lam.val());
    let one = QRat::one();
    let geo = &one / (&one - QRat::q_pow(-2));
    Ok(vol * (QRat::q_pow(x_val) * s0 + QRat::q_pow(x_val - 2) * geo * s1))
}

/// Number of overlattices of `A_{(lam,2^{n-1})}` isometric to
/// `A_{(lam,0^{n-1})}`, divided by the same count one rank lower. Returns
/// the two counts.
pub fn horizontal_counts(n: i64, lam: i64, p: u64, budget: u128) -> Result<(usize, usize)> {
    if n < 2 || lam < 2 {
        return Err(Error::IndexOutOfRange(format!("horizontal_counts({n},{lam})")));
    }
    let count = |rank: i64, top: Option<i64>| -> Result<usize> {
        let mut big = vec![2; rank as usize];
        let mut small = vec![0; rank as usize];
        if let Some(t) = top {
            big[0] = t;
            small[0] = t;
        }
        let l = HermLattice::diag(p, &big)?;
        let target = Invariants::new(small);
        Ok(integral_overlattices(&l, budget)?.iter().filter(|y| y.invariants == target).count())
    };
    let _ = n;
    Ok((count(n, Some(lam))?, count(n - 1, None)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DEFAULT_BUDGET;
    use num_rational::BigRational;

    fn inv(v: &[i64]) -> Invariants {
        Invariants::new(v.to_vec())
    }

    fn at3(x: &QRat) -> BigRational {
        x.eval(3).unwrap()
    }

    fn int(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn rank_one_chain_count() {
        for a in [1, 3, 5] {
            let l = HermLattice::diag(3, &[a]).unwrap();
            let v = pden_lattice(&l, 0, DEFAULT_BUDGET).unwrap();
            assert_eq!(at3(&v.value), int((a + 1) / 2));
        }
    }

    #[test]
    fn parity_gate() {
        let l = HermLattice::diag(3, &[1, 0, 0, 0]).unwrap();
        assert!(matches!(pden_lattice(&l, 1, DEFAULT_BUDGET), Err(Error::ParityMismatch { .. })));
    }

    #[test]
    fn primitive_examples() {
        let v = pden_primitive_at(&inv(&[1, 0, 0]), 2, 2, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(at3(&v.value), int(1));
        let v = pden_primitive_at(&inv(&[2, 1, 0]), 2, 2, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(at3(&v.value), int(25));
    }

    #[test]
    fn extend_profile_tables() {
        let p = Profile::new(2, 1, 1);
        assert_eq!(extend_profile(p, Stratum::C11, 2, false).unwrap(), Profile::new(3, 1, 1));
        assert_eq!(extend_profile(p, Stratum::C11, 1, false).unwrap(), Profile::new(2, 2, 1));
        assert_eq!(extend_profile(p, Stratum::C5, 3, false).unwrap(), Profile::new(1, 1, 3));
        assert!(matches!(
            extend_profile(Profile::new(0, 1, 1), Stratum::C21C41, 2, false),
            Err(Error::EmptyStratum(_))
        ));
    }

    #[test]
    fn fourier_closed_examples() {
        let v = fourier_pden_primitive(4, 2, &inv(&[3, 1, 0]), -1, Route::ClosedForm, 3, 0).unwrap();
        assert_eq!(v.value, -QRat::q_pow(-2));
        let v = fourier_pden_primitive(4, 2, &inv(&[2, 2, 1]), -2, Route::ClosedForm, 3, 0).unwrap();
        assert!(v.value.is_zero());
        assert!(matches!(
            fourier_pden_primitive(4, 2, &inv(&[2, 1, 0]), -1, Route::ClosedForm, 3, 0),
            Err(Error::ParityMismatch { .. })
        ));
    }

    #[test]
    fn fourier_routes_agree_small() {
        for (lam, x) in [(vec![3, 1, 0], -1), (vec![2, 2, 1], -2), (vec![1, 0, 0], -2), (vec![1, 1, 0], -1)] {
            let l = inv(&lam);
            let c = fourier_pden_primitive(4, 2, &l, x, Route::ClosedForm, 3, DEFAULT_BUDGET).unwrap();
            let s = fourier_pden_primitive(4, 2, &l, x, Route::StratumSum, 3, DEFAULT_BUDGET).unwrap();
            let e = fourier_pden_primitive(4, 2, &l, x, Route::Enumeration, 3, DEFAULT_BUDGET).unwrap();
            assert_eq!(c.value, s.value, "{lam:?}");
            assert_eq!(at3(&c.value), at3(&e.value), "{lam:?}");
        }
    }

    #[test]
    fn horizontal_small() {
        let (a, b) = horizontal_counts(2, 2, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!((a / b) as i64, 6);
    }
}
