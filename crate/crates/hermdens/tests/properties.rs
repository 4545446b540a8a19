//! Randomized invariants across modules.

use hermdens::cy::{cy_d_lambda, fourier_pden_primitive, Route};
use hermdens::error::{Error, DEFAULT_BUDGET};
use hermdens::oracle::{herm_count, CountJob, CountMode};
use hermdens::padic::{gram_invariants, lattice_dual, lattice_val_vol, ExactScalar, GramMatrix, HermLattice, Invariants};
use hermdens::qexact::{pm, pp};
use hermdens::QRat;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn laurent() -> impl Strategy<Value = QRat> {
    prop::collection::vec((-5i64..=5, -3i64..=4), 0..5).prop_map(|t| QRat::from_terms(&t))
}

fn nonzero_laurent() -> impl Strategy<Value = QRat> {
    laurent().prop_filter("nonzero", |x| !x.is_zero())
}

fn invariants(max_rank: usize, max_val: i64) -> impl Strategy<Value = Invariants> {
    prop::collection::vec(0..=max_val, 1..=max_rank).prop_map(Invariants::new)
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Unipotent lower-triangular change of basis with entries `a + b sqrt(u)`.
fn unipotent(n: usize) -> impl Strategy<Value = Vec<Vec<ExactScalar>>> {
    prop::collection::vec((-4i64..=4, -4i64..=4), n * n).prop_map(move |e| {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            ExactScalar::one()
                        } else if j < i {
                            let (a, b) = e[i * n + j];
                            ExactScalar::new(rat(a), rat(b))
                        } else {
                            ExactScalar::zero()
                        }
                    })
                    .collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn evaluation_is_a_ring_map(x in laurent(), y in nonzero_laurent(), q0 in prop::sample::select(vec![2i64, 3, 5, 7])) {
        let (ex, ey) = (x.eval(q0).unwrap(), y.eval(q0).unwrap());
        prop_assert_eq!((&x + &y).eval(q0).unwrap(), &ex + &ey);
        prop_assert_eq!((&x * &y).eval(q0).unwrap(), &ex * &ey);
        if !ey.numer().eq(&BigInt::from(0)) {
            prop_assert_eq!(x.checked_div(&y).unwrap().eval(q0).unwrap(), ex / ey);
        }
    }

    #[test]
    fn quotient_round_trips(x in laurent(), y in nonzero_laurent()) {
        let z = x.checked_div(&y).unwrap();
        prop_assert_eq!(&z * &y, x);
        let back = QRat::from_json(&z.to_json()).unwrap();
        prop_assert_eq!(back, z);
    }

    #[test]
    fn pochhammer_splits(lo in 0i64..4, len1 in 0i64..4, len2 in 0i64..4) {
        let mid = lo + len1;
        let hi = mid + len2;
        prop_assert_eq!(pm(lo, hi), pm(lo, mid) * pm(mid + 1, hi));
        prop_assert_eq!(pp(lo, hi), pp(lo, mid) * pp(mid + 1, hi));
    }

    #[test]
    fn invariants_ignore_unimodular_basis_change(inv in invariants(3, 3), seed in unipotent(3)) {
        let g = GramMatrix::from_invariants(3, &inv).unwrap();
        let n = g.n;
        let u: Vec<Vec<ExactScalar>> = seed.iter().take(n).map(|r| r.iter().take(n).cloned().collect()).collect();
        let h = g.transform(&u);
        prop_assert_eq!(gram_invariants(&h).unwrap(), inv);
    }

    #[test]
    fn dual_volume_inverts(inv in invariants(4, 4)) {
        let l = HermLattice::diag(3, &inv.vals).unwrap();
        let (v, _) = lattice_val_vol(&l.gram).unwrap();
        let (vd, _) = lattice_val_vol(&lattice_dual(&l).unwrap().gram).unwrap();
        prop_assert_eq!(vd, -v);
    }

    #[test]
    fn parity_gate_matches_valuation(inv in invariants(4, 3), h in 0i64..=4) {
        let n = inv.rank() as i64;
        prop_assume!(h <= n);
        let r = cy_d_lambda(n, h, &inv);
        if (inv.val() - h - 1).rem_euclid(2) == 0 {
            prop_assert!(r.is_ok());
        } else {
            let is_mismatch = matches!(r, Err(Error::ParityMismatch { .. }));
            prop_assert!(is_mismatch);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn herm_count_ignores_source_basis(l in invariants(2, 2), m in invariants(2, 1), seed in unipotent(2), d in 1u32..=2) {
        prop_assume!(m.rank() >= l.rank());
        let gl = GramMatrix::from_invariants(3, &l).unwrap();
        let n = gl.n;
        let u: Vec<Vec<ExactScalar>> = seed.iter().take(n).map(|r| r.iter().take(n).cloned().collect()).collect();
        let gm = GramMatrix::from_invariants(3, &m).unwrap();
        let base = CountJob { m_gram: gm.clone(), l_gram: gl.clone(), p: 3, d, mode: CountMode::All };
        let moved = CountJob { m_gram: gm, l_gram: gl.transform(&u), p: 3, d, mode: CountMode::All };
        prop_assert_eq!(herm_count(&base, DEFAULT_BUDGET).unwrap(), herm_count(&moved, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn fourier_routes_agree(lam in prop::collection::vec(0i64..=2, 3), h in 1i64..=4, x in -3i64..=-1) {
        let inv = Invariants::new(lam);
        prop_assume!((inv.val() + x - h - 1).rem_euclid(2) == 0);
        let c = fourier_pden_primitive(4, h, &inv, x, Route::ClosedForm, 3, DEFAULT_BUDGET).unwrap().value;
        let s = fourier_pden_primitive(4, h, &inv, x, Route::StratumSum, 3, DEFAULT_BUDGET).unwrap().value;
        let e = fourier_pden_primitive(4, h, &inv, x, Route::Enumeration, 3, DEFAULT_BUDGET).unwrap().value;
        prop_assert_eq!(&c, &s);
        prop_assert_eq!(c.eval(3).unwrap(), e.eval(3).unwrap());
    }
}
