//! Closed-form constants: `C_j`, `M_{n,h}`, `D_{n,h}`, `kappa`, the
//! correction coefficients and the beta constants, and quoted self-densities.

use std::collections::HashMap;

use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::padic::{Invariants, Profile};
use crate::qexact::{pm, pp, QRat};

fn nq(k: i64) -> QRat {
    QRat::neg_q_pow(k)
}

fn sign(k: i64) -> QRat {
    QRat::from_int(if k.rem_euclid(2) == 0 { 1 } else { -1 })
}

/// `C_j(a,b,c)`: the sign `(-1)^{j+1}` times `prod_{i=1}^{a+b-1}(1-(-q)^i)`,
/// except for the unimodular profile `(0,0,n)` where it is
/// `sum_{l=1}^{n} 1/((-q)^l - 1)` (empty, so zero, in rank 0).
pub fn c_const(p: Profile, j: i64) -> Result<QRat> {
    let n = p.n() as i64;
    if p.a == 0 && p.b == 0 {
        return Ok((1..=n).map(|l| QRat::one() / (nq(l) - QRat::one())).sum());
    }
    Ok(sign(j + 1) * pp(1, (p.a + p.b) as i64 - 1))
}

/// The summand `M_{n,h}(a,b,c,i,s)`.
pub fn m_term(n: i64, h: i64, p: Profile, i: i64, s: i64) -> Result<QRat> {
    let (a, b, c) = (p.a as i64, p.b as i64, p.c as i64);
    if a + b + c != n || !(0 <= s && s <= i && i <= h && h <= n) || s > b || i - s > c {
        return Err(Error::IndexOutOfRange(format!("M_{{{n},{h}}}({a},{b},{c},{i},{s})")));
    }
    let twice = 2 * n * (h - i) + (i - s) * (2 * n - i + s + 1) - 2 * h * h + 2 * s * (2 * n - 2 * c - s);
    debug_assert_eq!(twice % 2, 0);
    let e = twice / 2;
    let head = nq(e) * sign(i + h);
    let r1 = pm(1, n - i) / (pm(1, n - h) * pm(1, h));
    let r2 = pm(s + 1, h) / (pm(1, h - i) * pm(1, i - s));
    let r3 = (pm(1, c) * pm(1, b)) / (pm(1, c - i + s) * pm(1, b - s));
    let cc = c_const(Profile::new(p.a, (b - s) as usize, (c + s - i) as usize), h + 1 - s)?;
    Ok(head * r1 * r2 * r3 * cc)
}

/// Extra term `(-q)^{-(h-t)(h+t+1)/2} / (1 - (-q)^{-(h-t)})` for profiles `(0,t,n-t)`, `t <= h-1`.
pub fn boundary_term(h: i64, t: i64) -> QRat {
    let twice = (h - t) * (h + t + 1);
    nq(-twice / 2) / (QRat::one() - nq(-(h - t)))
}

static CY_CACHE: Lazy<RwLock<HashMap<(i64, i64, Profile), QRat>>> = Lazy::new(|| RwLock::new(HashMap::new()));

/// `D_{n,h}(a,b,c)` as a rational function, without any parity gate.
pub fn cy_d(n: i64, h: i64, p: Profile) -> Result<QRat> {
    if !(0 <= h && h <= n) {
        return Err(Error::IndexOutOfRange(format!("h={h} outside 0..={n}")));
    }
    if p.n() as i64 != n {
        return Err(Error::InvalidProfile(format!("{p} does not have rank {n}")));
    }
    let key = (n, h, p);
    if let Some(v) = CY_CACHE.read().get(&key) {
        return Ok(v.clone());
    }
    let (b, c) = (p.b as i64, p.c as i64);
    let mut acc = QRat::zero();
    for s in 0..=h.min(b) {
        for i in s..=(s + c).min(h) {
            acc = acc + m_term(n, h, p, i, s)?;
        }
    }
    if p.a == 0 && b <= h - 1 {
        acc = acc + boundary_term(h, b);
    }
    CY_CACHE.write().insert(key, acc.clone());
    Ok(acc)
}

/// Parity-gated entry point: `val` is `|lambda|` of the lattice the constant
/// is attached to, and must be congruent to `h+1` mod 2 unless `unchecked`.
pub fn cy_d_gated(n: i64, h: i64, p: Profile, val: i64, unchecked: bool) -> Result<QRat> {
    if !unchecked && (val - h - 1).rem_euclid(2) != 0 {
        return Err(Error::ParityMismatch { val, target: h + 1 });
    }
    cy_d(n, h, p)
}

/// `D_{n,h}(lambda)` through the profile of `lambda`, with the parity gate.
pub fn cy_d_lambda(n: i64, h: i64, lam: &Invariants) -> Result<QRat> {
    if lam.rank() as i64 != n {
        return Err(Error::InvalidInvariants(format!("{lam} does not have rank {n}")));
    }
    let p = lam.profile()?;
    cy_d_gated(n, h, p, lam.val(), false)
}

/// Coefficient of `X^i` in `(1-X)(1-(-q)X)...(1-(-q)^{a-2}X)`.
pub fn kappa(a: i64, i: i64) -> Result<QRat> {
    if a < 1 || i < 0 || i > a - 1 {
        return Err(Error::IndexOutOfRange(format!("kappa_{{{a},{i}}}")));
    }
    Ok(kappa_row(a)[i as usize].clone())
}

fn kappa_row(a: i64) -> Vec<QRat> {
    let mut coeffs = vec![QRat::one()];
    for j in 0..=a - 2 {
        let f = -nq(j);
        let mut next = vec![QRat::zero(); coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k] = &next[k] + c;
            next[k + 1] = &next[k + 1] + &(c * &f);
        }
        coeffs = next;
    }
    coeffs
}

/// `(-q)^{-(h-k)(h+k+1)/2} / (1-(-q)^{-(h-k)})`, the weight of the
/// normalized `Den(Lambda_k)` term.
pub fn correction_coeff(n: i64, h: i64, k: i64) -> Result<QRat> {
    if !(0 <= k && k < h && h <= n) {
        return Err(Error::IndexOutOfRange(format!("correction ({n},{h},{k})")));
    }
    Ok(boundary_term(h, k))
}

fn beta_x(n: i64, m: i64) -> QRat {
    if m <= n {
        nq(n + 1 - m)
    } else if m <= 2 * n {
        nq(m - 2 * n - 1)
    } else {
        QRat::one()
    }
}

fn beta_alpha(n: i64, m: i64, h: i64) -> QRat {
    if m <= n {
        nq((n + 1 - m) * (2 * n - h))
    } else if m <= 2 * n {
        nq((2 * n + 1 - m) * (2 * n + h))
    } else {
        QRat::one()
    }
}

/// `beta_i^h` from the interpolation nodes `x_m` and weights `alpha_{m,h}`.
pub fn beta_const(n: i64, i: i64, h: i64) -> Result<QRat> {
    if !(0 <= i && i <= 2 * n && 0 <= h && h <= 2 * n) {
        return Err(Error::IndexOutOfRange(format!("beta_{i}^{h} with n={n}")));
    }
    let xi = beta_x(n, i + 1);
    let num: QRat = (1..=2 * n).filter(|&m| m != i + 1).map(|m| QRat::one() - beta_x(n, m)).product();
    let den: QRat = (1..=2 * n + 1).filter(|&m| m != i + 1).map(|m| beta_x(n, m) - &xi).product();
    Ok(num / den / beta_alpha(n, i + 1, h))
}

/// Quoted self-densities `alpha(M, M)` and related closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelfDensityKind {
    /// `alpha(I_{n,k}, I_{n,k})` with `I_{n,k} = I_{n-k} ⊥ pi I_k`.
    INk { n: i64, k: i64 },
    /// `alpha(pi A_t, I_{n-h})`.
    PiAt { n: i64, h: i64, t: i64 },
    /// `alpha(I_{n+h, t-n+h}, I_h)`.
    IPlus { n: i64, h: i64, t: i64 },
    /// `W_{n,n}(A_n, 1)`.
    Wnn { n: i64 },
    /// `alpha(A_{(2^{m})}, A_{(2^{m})})`.
    TwoScaled { m: i64 },
    /// `alpha(A_{(lam,0^{n-1})}, A_{(lam,0^{n-1})})`, `lam >= 1`.
    LamZeros { n: i64, lam: i64 },
    /// `alpha(A_{(lam,2^{n-1})}, A_{(lam,2^{n-1})})`, `lam >= 2`.
    LamTwos { n: i64, lam: i64 },
}

pub fn self_density(kind: SelfDensityKind) -> Result<QRat> {
    use SelfDensityKind::*;
    let bad = || Error::UnsupportedKind(format!("{kind:?} outside its quoted range"));
    match kind {
        INk { n, k } if 0 <= k && k <= n => Ok(QRat::q_pow(k * k) * pm(1, n - k) * pm(1, k)),
        PiAt { n, h, t } if 0 <= h && h <= n && t >= 0 => Ok(pm(t - n + h + 1, t)),
        IPlus { n, h, t } if 0 <= h && h <= n => Ok(pm(2 * n - h - t + 1, 2 * n - t)),
        Wnn { n } if n >= 0 => Ok(QRat::q_pow(-3 * n * n) * pm(1, n) * pm(1, n)),
        TwoScaled { m } if m >= 0 => Ok(QRat::q_pow(2 * m * m) * pm(1, m)),
        LamZeros { n, lam } if n >= 1 && lam >= 1 => Ok(QRat::q_pow(lam) * pm(1, 1) * pm(1, n - 1)),
        LamTwos { n, lam } if n >= 1 && lam >= 3 => {
            Ok(QRat::q_pow(2 * (n * n - 1) + lam) * pm(1, 1) * pm(1, n - 1))
        }
        LamTwos { n, lam: 2 } if n >= 1 => Ok(QRat::q_pow(2 * n * n) * pm(1, n)),
        _ => Err(bad()),
    }
}

/// The coefficient of `alpha(I_{n,k},T)/alpha(I_{n,k},I_{n,k})` rebuilt from
/// `beta_t^{n-h}` and the quoted densities, with `t = n-h+k`. It must equal
/// [`correction_coeff`].
pub fn correction_via_beta(n: i64, h: i64, k: i64) -> Result<QRat> {
    use SelfDensityKind::*;
    let t = n - h + k;
    let beta = beta_const(n, t, n - h)?;
    let w_scale = QRat::q_pow(-4 * n * n + (n + h) * (3 * n - 2 * t - h));
    let num = beta
        * w_scale
        * self_density(PiAt { n, h, t })?
        * self_density(IPlus { n, h, t })?
        * self_density(INk { n, k })?;
    Ok(-(num / self_density(Wnn { n })?))
}

/// Right side of the beta/W quotient identity:
/// `-(-q)^{(n-t)(n-t-1-2h)/2} / (1-(-q)^{-(n-t)})`.
pub fn beta_quotient_rhs(n: i64, h: i64, t: i64) -> QRat {
    let twice = (n - t) * (n - t - 1 - 2 * h);
    -(nq(twice / 2) / (QRat::one() - nq(-(n - t))))
}

/// Left side of the same identity, times `alpha(I_{n,k},I_{n,k})`.
pub fn beta_quotient_lhs(n: i64, h: i64, t: i64) -> Result<QRat> {
    use SelfDensityKind::*;
    let k = t - n + h;
    let beta = beta_const(n, t, n - h)?;
    let w_scale = QRat::q_pow(-4 * n * n + (n + h) * (3 * n - 2 * t - h));
    let num = beta
        * w_scale
        * self_density(PiAt { n, h, t })?
        * self_density(IPlus { n, h, t })?
        * self_density(INk { n, k })?;
    Ok(num / self_density(Wnn { n })?)
}

/// Ratio of normalized horizontal counts for `(lam, 0^{n-1})` against `(0^{n-1})`.
pub fn horizontal_ratio(n: i64, lam: i64) -> Result<QRat> {
    if lam < 2 || n < 1 {
        return Err(Error::IndexOutOfRange(format!("horizontal_ratio({n},{lam})")));
    }
    let base = QRat::q_pow(2 * n - 2);
    if lam >= 3 {
        Ok(base)
    } else {
        Ok(base * (QRat::one() - nq(-n)) / (QRat::one() - nq(-1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QRat {
        QRat::q_pow(1)
    }

    fn poly(terms: &[(i64, i64)]) -> QRat {
        QRat::from_terms(terms)
    }

    #[test]
    fn c_examples() {
        assert_eq!(c_const(Profile::new(1, 0, 0), 1).unwrap(), QRat::one());
        assert_eq!(c_const(Profile::new(0, 2, 0), 0).unwrap(), -(QRat::one() + q()));
        assert_eq!(c_const(Profile::new(0, 0, 1), 0).unwrap(), -(QRat::one() / (q() + QRat::one())));
    }

    #[test]
    fn m_zero_zero_matches_quoted_form() {
        for n in 1..=5 {
            for h in 0..=n {
                for p in profiles(n) {
                    let j = h + 1;
                    let expect = QRat::q_pow(h * (n - h)) * pm(1, n) / (pm(1, h) * pm(1, n - h))
                        * c_const(p, j).unwrap();
                    let got = m_term(n, h, p, 0, 0).unwrap();
                    // the quoted display drops the (-1)^h sign and uses q^{h(n-h)} for (-q)^{h(n-h)}
                    let adj = sign(h) * nq(h * (n - h)) / QRat::q_pow(h * (n - h));
                    assert_eq!(got, expect * adj, "n={n} h={h} {p}");
                }
            }
        }
    }

    #[test]
    fn h_zero_reduces_to_c() {
        for n in 1..=6 {
            for p in profiles(n) {
                assert_eq!(cy_d(n, 0, p).unwrap(), c_const(p, 1).unwrap());
            }
        }
    }

    #[test]
    fn m_range_is_checked() {
        assert!(matches!(m_term(3, 1, Profile::new(3, 0, 0), 1, 0), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn d31_table() {
        let one = QRat::one();
        let q2m1 = QRat::q_pow(2) - &one;
        let p = |a, b, c| Profile::new(a, b, c);
        assert_eq!(cy_d(3, 1, p(3, 0, 0)).unwrap(), -(&q2m1 * (QRat::q_pow(3) + &one)));
        assert_eq!(cy_d(3, 1, p(2, 1, 0)).unwrap(), (q() + &one) * poly(&[(1, 3), (-1, 1), (1, 0)]));
        assert_eq!(cy_d(3, 1, p(2, 0, 1)).unwrap(), -q2m1);
        assert_eq!(cy_d(3, 1, p(1, 1, 1)).unwrap(), one);
    }

    #[test]
    fn d_equals_one_on_boundary() {
        for n in 2..=7 {
            for h in 1..=n - 1 {
                let c = n - 1 - h;
                assert_eq!(cy_d(n, h, Profile::new(1, h as usize, c as usize)).unwrap(), QRat::one());
            }
        }
    }

    #[test]
    fn lambda_entry_point_gates_parity() {
        let lam = Invariants::new(vec![3, 1, 0]);
        assert_eq!(cy_d_lambda(3, 1, &lam).unwrap(), QRat::one());
        let lam = Invariants::new(vec![4, 4, 0]);
        assert_eq!(cy_d_lambda(3, 1, &lam).unwrap(), -(QRat::q_pow(2) - QRat::one()));
        let odd = Invariants::new(vec![2, 1, 0]);
        assert!(matches!(cy_d_lambda(3, 1, &odd), Err(Error::ParityMismatch { .. })));
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(1, 0).unwrap(), QRat::one());
        assert_eq!(kappa(2, 1).unwrap(), QRat::from_int(-1));
        assert_eq!(kappa(3, 1).unwrap(), q() - QRat::one());
        assert_eq!(kappa(3, 2).unwrap(), -q());
        assert!(kappa(3, 3).is_err());
    }

    #[test]
    fn correction_examples() {
        let one = QRat::one();
        assert_eq!(correction_coeff(1, 1, 0).unwrap(), -(&one / (q() + &one)));
        assert_eq!(correction_coeff(2, 2, 1).unwrap(), &one / (q() * (q() + &one)));
        assert_eq!(correction_coeff(2, 2, 0).unwrap(), -(&one / (q() * (QRat::q_pow(2) - &one))));
    }

    #[test]
    fn beta_quotient_example() {
        let rhs = beta_quotient_rhs(2, 1, 1);
        assert_eq!(rhs, QRat::one() / (q() + QRat::one()));
        assert_eq!(beta_quotient_lhs(2, 1, 1).unwrap(), rhs);
    }

    #[test]
    fn self_density_examples() {
        use SelfDensityKind::*;
        assert_eq!(self_density(INk { n: 1, k: 0 }).unwrap(), QRat::one() + QRat::q_pow(-1));
        let f = QRat::one() + QRat::q_pow(-1);
        assert_eq!(self_density(INk { n: 2, k: 1 }).unwrap(), q() * &f * &f);
        assert_eq!(self_density(TwoScaled { m: 2 }).unwrap(), QRat::q_pow(8) * pm(1, 2));
        assert!(self_density(LamTwos { n: 2, lam: 1 }).is_err());
    }

    #[test]
    fn horizontal_ratio_values() {
        assert_eq!(horizontal_ratio(3, 3).unwrap(), QRat::q_pow(4));
        assert_eq!(horizontal_ratio(2, 2).unwrap().eval(3).unwrap(), num_rational::BigRational::from_integer(6.into()));
        assert!(horizontal_ratio(2, 1).is_err());
    }

    pub(crate) fn profiles(n: i64) -> Vec<Profile> {
        let n = n as usize;
        let mut v = Vec::new();
        for a in 0..=n {
            for b in 0..=n - a {
                v.push(Profile::new(a, b, n - a - b));
            }
        }
        v
    }
}
