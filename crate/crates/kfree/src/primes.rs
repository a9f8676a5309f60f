//! Prime generation, exact and certified prime counting, and the prime
//! sums/products entering σ₀, σ₁, σ₂.

use crate::error::{Error, Result};
use crate::interval::CertInterval;
use rug::{Integer, Rational};

/// Largest supported sieve limit (memory budget).
pub const PRIME_LIMIT: u64 = 1_000_000_000;

/// Ascending list of all primes up to a limit.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// π(n) for n ≤ limit, by binary search.
    pub fn pi(&self, n: u64) -> u64 {
        assert!(n <= self.limit);
        self.primes.partition_point(|&p| p <= n) as u64
    }
}

/// Odd-only bitset sieve of Eratosthenes.
///
/// Bit i of the set represents the odd number 2i+1; bit 0 (the number 1) is
/// marked composite up front.
fn odd_sieve_bits(limit: u64) -> Vec<u64> {
    let n_odd = limit.div_ceil(2) as usize; // odds in [1, limit]
    let mut bits = vec![!0u64; n_odd.div_ceil(64)];
    let clear = |bits: &mut [u64], i: usize| bits[i / 64] &= !(1u64 << (i % 64));
    if n_odd > 0 {
        clear(&mut bits, 0); // 1 is not prime
    }
    let mut p = 3u64;
    while p * p <= limit {
        let idx = ((p - 1) / 2) as usize;
        if bits[idx / 64] >> (idx % 64) & 1 == 1 {
            let mut m = p * p;
            while m <= limit {
                clear(&mut bits, ((m - 1) / 2) as usize);
                m += 2 * p;
            }
        }
        p += 2;
    }
    // Mask out bits beyond the last odd ≤ limit.
    let extra = n_odd % 64;
    if extra != 0 {
        if let Some(last) = bits.last_mut() {
            *last &= (1u64 << extra) - 1;
        }
    }
    bits
}

/// All primes ≤ n.
pub fn primes_up_to(n: u64) -> Result<PrimeTable> {
    if n < 2 {
        return Err(Error::Domain(format!("primes_up_to requires n >= 2, got {n}")));
    }
    if n > PRIME_LIMIT {
        return Err(Error::Limit(format!(
            "primes_up_to limit is {PRIME_LIMIT} (memory budget), got {n}"
        )));
    }
    let bits = odd_sieve_bits(n);
    let mut primes = Vec::with_capacity(estimate_pi(n));
    primes.push(2);
    for (w, &word) in bits.iter().enumerate() {
        let mut word = word;
        while word != 0 {
            let b = word.trailing_zeros() as usize;
            word &= word - 1;
            let value = 2 * (w * 64 + b) as u64 + 1;
            if value <= n && value >= 3 {
                primes.push(value);
            }
        }
    }
    Ok(PrimeTable { limit: n, primes })
}

fn estimate_pi(n: u64) -> usize {
    if n < 17 {
        8
    } else {
        let x = n as f64;
        (1.3 * x / x.ln()) as usize
    }
}

/// Exact π(n), without retaining the primes.
pub fn pi_exact(n: u64) -> u64 {
    if n < 2 {
        return 0;
    }
    let bits = odd_sieve_bits(n);
    let mut count = 1u64; // the prime 2
    for &w in &bits {
        count += w.count_ones() as u64;
    }
    count
}

/// Rosser–Schoenfeld explicit upper bound π(x) < (x/log x)(1 + 1.5/log x),
/// evaluated as a certified interval.
pub fn rs_pi_upper(x: &CertInterval) -> Result<CertInterval> {
    if x.lo() <= &1 {
        return Err(Error::Domain("rs_pi_upper requires x.lo > 1".into()));
    }
    let prec = x.precision_bits();
    let ln = x.ln()?;
    let one = CertInterval::from_integer(1, prec);
    let three_halves = CertInterval::from_rational(&Rational::from((3, 2)), prec);
    Ok(x.div(&ln)?.mul(&one.add(&three_halves.div(&ln)?)))
}

/// (Σ_{p≤J} p⁻², ∏_{p≤J} (1 − p⁻²)) as exact rationals in lowest terms.
pub fn prime_square_aggregates(j: u64) -> Result<(Rational, Rational)> {
    if !(2..=1_000_000).contains(&j) {
        return Err(Error::Domain(format!(
            "prime_square_aggregates requires 2 <= J <= 10^6, got {j}"
        )));
    }
    let table = primes_up_to(j)?;
    let mut sum = Rational::new();
    let mut product = Rational::from(1);
    for &p in table.primes() {
        let p2 = Integer::from(p) * Integer::from(p);
        sum += Rational::from((Integer::from(1), p2.clone()));
        product *= Rational::from((p2.clone() - 1, p2));
    }
    Ok((sum, product))
}

/// Certified upper bound on σ₁ = Σ_p p⁻²: directed-rounded partial sum over
/// p ≤ P plus the odd-integer tail bound Σ_{p>P} p⁻² ≤ 1/(2(P−1)).
pub fn sigma1_upper(p_limit: u64) -> Result<CertInterval> {
    if p_limit < 1_000 {
        return Err(Error::Domain(format!(
            "sigma1_upper requires P >= 10^3, got {p_limit}"
        )));
    }
    let prec = 128;
    let table = primes_up_to(p_limit)?;
    let mut sum = CertInterval::from_integer(0, prec);
    for &p in table.primes() {
        let p2 = Integer::from(p) * Integer::from(p);
        sum = sum.add(&CertInterval::from_rational(&Rational::from((Integer::from(1), p2)), prec));
    }
    let tail = Rational::from((Integer::from(1), Integer::from(2) * (Integer::from(p_limit) - 1)));
    let tail = CertInterval::from_rational_pair(&Rational::new(), &tail, prec);
    Ok(sum.add(&tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::parse_rational;

    fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn small_tables() {
        assert_eq!(primes_up_to(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(primes_up_to(2).unwrap().primes(), &[2]);
        assert!(primes_up_to(1).is_err());
        assert!(primes_up_to(PRIME_LIMIT + 1).is_err());
    }

    #[test]
    fn table_agrees_with_trial_division() {
        let table = primes_up_to(100_000).unwrap();
        let mut expected = Vec::new();
        for n in 2..=100_000u64 {
            if is_prime_trial(n) {
                expected.push(n);
            }
        }
        assert_eq!(table.primes(), expected.as_slice());
    }

    #[test]
    fn pi_values() {
        assert_eq!(pi_exact(0), 0);
        assert_eq!(pi_exact(1), 0);
        assert_eq!(pi_exact(2), 1);
        assert_eq!(pi_exact(100), 25);
        // Feeds 2^{π(120)} in the J=120 budget.
        assert_eq!(pi_exact(120), 30);
        assert_eq!(pi_exact(1_000_000), 78_498);
        let table = primes_up_to(1_000_000).unwrap();
        assert_eq!(table.primes().len() as u64, 78_498);
        assert_eq!(table.pi(1_000_000), 78_498);
        assert_eq!(table.pi(100), 25);
    }

    #[test]
    fn rs_upper_examples() {
        let x = CertInterval::from_integer(100, 96);
        let v = rs_pi_upper(&x).unwrap();
        // (100/log 100)(1 + 1.5/log 100) ≈ 28.787
        assert!(v.contains_rational(&parse_rational("28.7876").unwrap()) || {
            v.lo() < &parse_rational("28.79").unwrap() && v.hi() > &parse_rational("28.78").unwrap()
        });
        assert!(v.lo() > &25);
        // x = e²: (e²/2)(1.75) ≈ 6.4652 ≥ π(7) = 4.
        let e2 = CertInterval::exp_rational(&rug::Rational::from(2), 96);
        let v = rs_pi_upper(&e2).unwrap();
        assert!(v.lo() < &parse_rational("6.466").unwrap());
        assert!(v.hi() > &parse_rational("6.465").unwrap());
        assert!(v.lo() > &4);
        assert!(rs_pi_upper(&CertInterval::from_integer(1, 96)).is_err());
    }

    #[test]
    fn aggregates_examples() {
        let (sum, product) = prime_square_aggregates(2).unwrap();
        assert_eq!(sum, Rational::from((1, 4)));
        assert_eq!(product, Rational::from((3, 4)));
        let (sum, _) = prime_square_aggregates(10).unwrap();
        assert_eq!(sum, Rational::from((18589, 44100)));
        let (_, product) = prime_square_aggregates(3).unwrap();
        assert_eq!(product, Rational::from((2, 3)));
    }

    #[test]
    fn aggregates_monotone() {
        let mut prev_sum = Rational::new();
        let mut prev_product = Rational::from(2);
        for j in [2u64, 3, 5, 7, 11, 13, 100, 1000] {
            let (sum, product) = prime_square_aggregates(j).unwrap();
            assert!(sum > prev_sum);
            assert!(product < prev_product);
            prev_sum = sum;
            prev_product = product;
        }
    }

    #[test]
    fn sigma1_tail_and_monotonicity() {
        let s5 = sigma1_upper(100_000).unwrap();
        let s6 = sigma1_upper(1_000_000).unwrap();
        // Larger exact part, smaller tail.
        assert!(s5.hi() >= s6.hi());
        assert!(sigma1_upper(999).is_err());
        // Upper endpoint within 10⁻⁶ of the partial sum: the tail is
        // 1/(2(P−1)) ≈ 5·10⁻⁷.
        let partial = {
            let table = primes_up_to(1_000_000).unwrap();
            let mut sum = CertInterval::from_integer(0, 128);
            for &p in table.primes() {
                let p2 = Integer::from(p) * Integer::from(p);
                sum = sum.add(&CertInterval::from_rational(&Rational::from((Integer::from(1), p2)), 128));
            }
            sum
        };
        let gap = s6.sub(&partial);
        assert!(gap.hi() < &1e-6);
        // The lower endpoint only dips below zero by the accumulated
        // enclosure width of the two 78498-term sums.
        assert!(gap.lo() > &-1e-25);
    }
}
