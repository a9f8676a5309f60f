//! Property-based invariants: interval soundness, oracle equivalences, and
//! exact-arithmetic cross-checks on randomized inputs.

use kfree::critical::{divided_difference, enumerate_s};
use kfree::primes::{pi_exact, rs_pi_upper};
use kfree::sieve::{count_kfree, is_kfree, scan_gaps_detailed, sieve_segment};
use kfree::CertInterval;
use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};

fn small_rational() -> impl Strategy<Value = Rational> {
    (-10_000i64..10_000, 1i64..1_000).prop_map(|(n, d)| Rational::from((n, d)))
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..10_000, 1i64..1_000).prop_map(|(n, d)| Rational::from((n, d)))
}

proptest! {
    /// Every arithmetic enclosure contains the exact rational result.
    #[test]
    fn interval_contains_exact_value(
        a in small_rational(),
        b in small_rational(),
        c in positive_rational(),
        n in 1i32..5,
    ) {
        let prec = 40; // deliberately coarse so rounding is visible
        let ia = CertInterval::from_rational(&a, prec);
        let ib = CertInterval::from_rational(&b, prec);
        let ic = CertInterval::from_rational(&c, prec);
        let expr = ia.add(&ib).mul(&ic).sub(&ia.mul(&ib)).add(&ic.pow_int(n).unwrap());
        let exact = (a.clone() + b.clone()) * c.clone() - a * b
            + c.clone().pow(n as u32);
        prop_assert!(expr.contains_rational(&exact), "{expr} misses {exact}");
        // Division keeps containment too.
        let quotient = expr.div(&ic).unwrap();
        let exact_q = exact / c;
        prop_assert!(quotient.contains_rational(&exact_q));
    }

    /// Raising the working precision refines the enclosure: the tighter
    /// interval nests inside the coarser one.
    #[test]
    fn precision_refinement_nests(a in small_rational(), b in positive_rational()) {
        let coarse = CertInterval::from_rational(&a, 32)
            .mul(&CertInterval::from_rational(&b, 32))
            .add(&CertInterval::from_rational(&b, 32).sqrt().unwrap());
        let fine = CertInterval::from_rational(&a, 160)
            .mul(&CertInterval::from_rational(&b, 160))
            .add(&CertInterval::from_rational(&b, 160).sqrt().unwrap());
        prop_assert!(coarse.lo() <= fine.lo(), "{} > {}", coarse.lo(), fine.lo());
        prop_assert!(fine.hi() <= coarse.hi(), "{} > {}", fine.hi(), coarse.hi());
    }

    /// The explicit prime-counting upper bound dominates the exact count.
    #[test]
    fn rs_upper_dominates_exact_pi(x in 3u64..200_000) {
        let bound = rs_pi_upper(&CertInterval::from_integer(x, 96)).unwrap();
        let exact = pi_exact(x);
        prop_assert!(
            bound.hi() > &Integer::from(exact),
            "pi({x}) = {exact} not below {}",
            bound.hi()
        );
    }

    /// Segmented sieving agrees with per-element trial division on random
    /// windows, including far from the origin.
    #[test]
    fn sieve_matches_pointwise_oracle(
        lo in 2u64..10_000_000_000,
        len in 1u64..2_048,
        k in 2u32..4,
    ) {
        let seg = sieve_segment(lo, lo + len, k).unwrap();
        for n in lo..lo + len {
            prop_assert_eq!(seg.is_free(n), is_kfree(n, k), "n = {}", n);
        }
    }

    /// The Mobius count equals the sieve count on random prefixes and is
    /// monotone in x.
    #[test]
    fn mobius_count_matches_sieve(x in 2u64..200_000, k in 2u32..4) {
        let seg = sieve_segment(2, x + 1, k).unwrap();
        let sieved = seg.count_free() + 1; // n = 1 is k-free
        prop_assert_eq!(count_kfree(x, k).unwrap(), sieved);
        prop_assert!(count_kfree(x + 1, k).unwrap() >= sieved);
    }

    /// Divided differences are linear in the value vector.
    #[test]
    fn divided_difference_linearity(
        base in 1i64..100,
        steps in proptest::collection::vec(1i64..50, 1..5),
        scale in small_rational(),
    ) {
        let mut pts = vec![Rational::from(base)];
        for s in &steps {
            let last = pts.last().unwrap().clone();
            pts.push(last + Rational::from(*s));
        }
        let f: Vec<Rational> = pts.iter().map(|t| Rational::from(t * t)).collect();
        let g: Vec<Rational> = pts.iter().map(|t| Rational::from(t) + 1u32).collect();
        let combined: Vec<Rational> = f
            .iter()
            .zip(&g)
            .map(|(a, b)| a.clone() * scale.clone() + b.clone())
            .collect();
        let lhs = divided_difference(&pts, &combined).unwrap();
        let rhs = divided_difference(&pts, &f).unwrap() * scale.clone()
            + divided_difference(&pts, &g).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// Critical-set membership follows the exact residue condition, and the
    /// enumeration is complete over its window.
    #[test]
    fn critical_set_membership_exact(
        x in 1u64..1_000_000_000,
        h in 1u64..10_000,
        m in 2u64..2_000,
        span in 2u64..500,
    ) {
        let n = m + span;
        let set = enumerate_s(x, h, m, n).unwrap();
        let members: std::collections::BTreeSet<u64> = set.members.iter().copied().collect();
        prop_assert_eq!(members.len(), set.members.len(), "duplicates");
        for u in (m + 1)..=n {
            if u % 2 == 0 {
                prop_assert!(!members.contains(&u));
                continue;
            }
            let u2 = u as u128 * u as u128;
            let expected = (x as u128 % u2) >= u2.saturating_sub(h as u128);
            prop_assert_eq!(members.contains(&u), expected, "u = {}", u);
        }
    }

    /// Gap scans are independent of the segmentation.
    #[test]
    fn gap_scan_segmentation_invariance(
        limit in 100u64..50_000,
        seg_a in 64u64..5_000,
        seg_b in 64u64..5_000,
    ) {
        let a = scan_gaps_detailed(limit, 2, seg_a, None).unwrap();
        let b = scan_gaps_detailed(limit, 2, seg_b, None).unwrap();
        prop_assert_eq!(a.first_occurrence, b.first_occurrence);
        prop_assert_eq!(a.max, b.max);
    }
}
