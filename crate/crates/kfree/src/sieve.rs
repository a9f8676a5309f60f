//! High-performance segmented detection of k-free integers, gap scanning,
//! interval checking, and record-run verification.

use crate::error::{Error, Result};
use crate::interval::CertInterval;
use crate::primes::{primes_up_to, PrimeTable};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Maximum elements per segment.
pub const MAX_SEGMENT: u64 = 1 << 30;

/// Default segment size: cache-resident bitmaps.
pub const DEFAULT_SEGMENT: u64 = 1 << 22;

/// Desk-scale scan budget.
pub const SCAN_LIMIT: u64 = 1_000_000_000_000;

/// A sieved window `[lo, hi)` with one flag bit per element
/// (`true` = k-free).
#[derive(Clone, Debug)]
pub struct SieveSegment {
    lo: u64,
    hi: u64,
    k: u32,
    bits: Vec<u64>,
}

impl SieveSegment {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn is_free(&self, n: u64) -> bool {
        assert!(n >= self.lo && n < self.hi);
        let i = (n - self.lo) as usize;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    /// Count of k-free elements in the window.
    pub fn count_free(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn raw_words(&self) -> &[u64] {
        &self.bits
    }
}

/// Floor of n^(1/k) in exact integer arithmetic.
pub fn integer_kth_root(n: u64, k: u32) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).powf(1.0 / k as f64) as u64;
    // Fix up the floating-point guess in both directions.
    while r > 0 && pow_u128(r, k) > n as u128 {
        r -= 1;
    }
    while pow_u128(r + 1, k) <= n as u128 {
        r += 1;
    }
    r
}

fn pow_u128(base: u64, exp: u32) -> u128 {
    let mut out: u128 = 1;
    for _ in 0..exp {
        out = out.saturating_mul(base as u128);
    }
    out
}

fn is_square(n: u64) -> bool {
    let s = (n as f64).sqrt() as u64;
    for c in s.saturating_sub(2)..=s + 2 {
        if c.checked_mul(c) == Some(n) {
            return true;
        }
    }
    false
}

/// Primes up to the cube root of u64::MAX, shared by `is_kfree`.
fn small_primes() -> &'static PrimeTable {
    static TABLE: OnceLock<PrimeTable> = OnceLock::new();
    TABLE.get_or_init(|| primes_up_to(2_642_246).expect("static prime table"))
}

/// True iff no prime p has p^k | n.
///
/// For k = 2: trial-divide by primes ≤ n^(1/3) tracking repeated factors;
/// the residual cofactor has at most two prime factors, so n is
/// non-squarefree iff a repeated small factor was found or the residual is a
/// perfect square.
pub fn is_kfree(n: u64, k: u32) -> bool {
    assert!(n >= 1 && k >= 2);
    if n < 4 {
        return true;
    }
    let mut m = n;
    for &p in small_primes().primes() {
        let p3 = pow_u128(p, 3);
        if p3 > n as u128 {
            break;
        }
        if m.is_multiple_of(p) {
            let mut e = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            if e >= k {
                return false;
            }
        }
    }
    // Residual prime factors all exceed n^(1/3), so their exponents are ≤ 2;
    // only k = 2 can still fail, and only when the residual is p².
    if k == 2 && m > 1 && is_square(m) {
        return false;
    }
    true
}

/// Sieve `[lo, hi)` by striding multiples of p^k for p ≤ hi^(1/k).
pub fn sieve_segment(lo: u64, hi: u64, k: u32) -> Result<SieveSegment> {
    if !(2 <= lo && lo < hi && hi <= 1u64 << 63) {
        return Err(Error::Domain(format!(
            "sieve_segment requires 2 <= lo < hi <= 2^63, got [{lo}, {hi})"
        )));
    }
    if hi - lo > MAX_SEGMENT {
        return Err(Error::Limit(format!(
            "segment length {} exceeds 2^30",
            hi - lo
        )));
    }
    if k < 2 {
        return Err(Error::Domain("sieve_segment requires k >= 2".into()));
    }
    let root = integer_kth_root(hi - 1, k);
    if root > crate::primes::PRIME_LIMIT {
        return Err(Error::Limit(format!(
            "sieving [{lo}, {hi}) needs primes up to {root}, beyond the 10^9 budget"
        )));
    }
    let len = (hi - lo) as usize;
    let mut bits = vec![!0u64; len.div_ceil(64)];
    if root >= 2 {
        let table = primes_up_to(root)?;
        for &p in table.primes() {
            let q = pow_u128(p, k);
            // First multiple of p^k that is ≥ lo, in 128-bit arithmetic.
            let mut m = (lo as u128).div_ceil(q) * q;
            while m < hi as u128 {
                let i = (m as u64 - lo) as usize;
                bits[i / 64] &= !(1u64 << (i % 64));
                m += q;
            }
        }
    }
    // Clear padding bits past the end of the window.
    let extra = len % 64;
    if extra != 0 {
        if let Some(last) = bits.last_mut() {
            *last &= (1u64 << extra) - 1;
        }
    }
    Ok(SieveSegment { lo, hi, k, bits })
}

/// A maximal run of consecutive non-k-free integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GapRecord {
    pub start: u64,
    pub length: u64,
    pub k: u32,
}

/// Result of a gap scan.
#[derive(Clone, Debug, Default)]
pub struct GapScan {
    /// `first_occurrence[L]` = least start of a maximal run of length ≥ L.
    pub first_occurrence: BTreeMap<u64, u64>,
    /// Longest run found (earliest on ties).
    pub max: Option<GapRecord>,
}

struct RunAccum<'a> {
    k: u32,
    scan: GapScan,
    current: Option<(u64, u64)>,
    on_run: Option<&'a mut dyn FnMut(u64, u64)>,
}

impl<'a> RunAccum<'a> {
    fn feed(&mut self, n: u64, free: bool) {
        if free {
            self.close();
        } else {
            match &mut self.current {
                Some((_, len)) => *len += 1,
                None => self.current = Some((n, 1)),
            }
        }
    }

    fn close(&mut self) {
        if let Some((start, len)) = self.current.take() {
            for l in 1..=len {
                self.scan.first_occurrence.entry(l).or_insert(start);
            }
            let better = match self.scan.max {
                Some(rec) => len > rec.length,
                None => true,
            };
            if better {
                self.scan.max = Some(GapRecord { start, length: len, k: self.k });
            }
            if let Some(f) = self.on_run.as_mut() {
                f(start, len);
            }
        }
    }

    fn open(&self) -> bool {
        self.current.is_some()
    }
}

fn feed_segment(acc: &mut RunAccum, seg: &SieveSegment) {
    let words = seg.raw_words();
    let len = (seg.hi - seg.lo) as usize;
    for (w, &word) in words.iter().enumerate() {
        let base = seg.lo + (w * 64) as u64;
        let valid = (len - w * 64).min(64);
        if word == !0u64 && valid == 64 {
            // All 64 numbers are free: at most one run to close.
            acc.close();
            continue;
        }
        for b in 0..valid {
            acc.feed(base + b as u64, word >> b & 1 == 1);
        }
    }
}

/// Scans maximal runs of non-k-free integers with starts ≤ limit.
///
/// Runs still open at the limit are completed by sieving past it, so the
/// output is independent of the limit's position inside a run and of the
/// segmentation. Segments are sieved in parallel in batches and consumed by
/// a sequential reducer, making the result bit-identical to a sequential
/// scan.
pub fn scan_gaps(limit: u64, k: u32) -> Result<GapScan> {
    scan_gaps_detailed(limit, k, DEFAULT_SEGMENT, None)
}

pub fn scan_gaps_detailed(
    limit: u64,
    k: u32,
    segment: u64,
    on_run: Option<&mut dyn FnMut(u64, u64)>,
) -> Result<GapScan> {
    if limit > SCAN_LIMIT {
        return Err(Error::Limit(format!("scan limit {limit} exceeds {SCAN_LIMIT}")));
    }
    if limit < 2 || k < 2 {
        return Err(Error::Domain("scan_gaps requires limit >= 2, k >= 2".into()));
    }
    let segment = segment.clamp(64, MAX_SEGMENT);
    let mut acc = RunAccum {
        k,
        scan: GapScan::default(),
        current: None,
        on_run,
    };
    let batch = (rayon::current_num_threads() as u64 * 4).max(4);
    let mut pos = 2u64;
    while pos <= limit {
        let ranges: Vec<(u64, u64)> = (0..batch)
            .map(|i| pos + i * segment)
            .take_while(|&lo| lo <= limit)
            .map(|lo| (lo, (lo + segment).min(limit + 1)))
            .collect();
        let segs: Vec<SieveSegment> = ranges
            .par_iter()
            .map(|&(lo, hi)| sieve_segment(lo, hi, k))
            .collect::<Result<Vec<_>>>()?;
        for seg in &segs {
            feed_segment(&mut acc, seg);
        }
        pos = ranges.last().unwrap().1;
    }
    // Complete a run that straddles the limit: feed one element at a time and
    // stop at the first k-free integer, so no run starting past the limit is
    // ever recorded.
    'completion: while acc.open() {
        let hi = pos + segment;
        let seg = sieve_segment(pos, hi, k)?;
        for n in pos..hi {
            acc.feed(n, seg.is_free(n));
            if !acc.open() {
                break 'completion;
            }
        }
        pos = hi;
    }
    Ok(acc.scan)
}

/// Least k-free integer in (x, x + floor(h.lo)], if any.
pub fn check_interval(x: u64, h: &CertInterval, k: u32) -> Result<Option<u64>> {
    if x < 2 {
        return Err(Error::Domain("check_interval requires x >= 2".into()));
    }
    let h_floor = h.lo().clone().floor();
    let h_int = h_floor
        .to_integer()
        .and_then(|i| i.to_u64())
        .ok_or_else(|| Error::Domain(format!("h out of range: {h}")))?;
    let mut lo = x + 1;
    let end = x
        .checked_add(h_int)
        .ok_or_else(|| Error::Overflow("interval end exceeds u64".into()))?;
    while lo <= end {
        let hi = (lo + DEFAULT_SEGMENT).min(end + 1);
        let seg = sieve_segment(lo, hi, k)?;
        for n in lo..hi {
            if seg.is_free(n) {
                return Ok(Some(n));
            }
        }
        lo = hi;
    }
    Ok(None)
}

/// Verification report for a claimed maximal run of non-squarefree integers.
#[derive(Clone, Debug, Serialize)]
pub struct RecordReport {
    pub start: u64,
    pub length: u64,
    pub confirmed: bool,
    /// Human-readable description of each failed index, if any.
    pub failures: Vec<String>,
}

/// Confirms that start..start+length-1 are all non-squarefree and that the
/// neighbors start-1 and start+length are squarefree (maximality).
pub fn verify_record_run(start: u64, length: u64) -> Result<RecordReport> {
    if start < 2 || length < 1 {
        return Err(Error::Domain("verify_record_run requires start >= 2, length >= 1".into()));
    }
    let end = start
        .checked_add(length)
        .filter(|&e| e < 1u64 << 63)
        .ok_or_else(|| Error::Overflow("run extends past 2^63".into()))?;
    let mut failures = Vec::new();
    for n in start..end {
        if is_kfree(n, 2) {
            failures.push(format!("{n} is squarefree but lies inside the claimed run"));
        }
    }
    for n in [start - 1, end] {
        if !is_kfree(n, 2) {
            failures.push(format!("boundary {n} is non-squarefree; the run is not maximal"));
        }
    }
    Ok(RecordReport {
        start,
        length,
        confirmed: failures.is_empty(),
        failures,
    })
}

/// Exact Q_k(x) = #{n ≤ x : n is k-free}, by the Möbius identity
/// Q_k(x) = Σ_{d ≤ x^(1/k)} μ(d)·floor(x/d^k).
pub fn count_kfree(x: u64, k: u32) -> Result<u64> {
    if x > SCAN_LIMIT {
        return Err(Error::Limit(format!("count_kfree budget is x <= {SCAN_LIMIT}")));
    }
    if k < 2 {
        return Err(Error::Domain("count_kfree requires k >= 2".into()));
    }
    if x == 0 {
        return Ok(0);
    }
    let root = integer_kth_root(x, k);
    let mu = mobius_up_to(root);
    let mut total: i128 = 0;
    for d in 1..=root {
        let m = mu[d as usize];
        if m == 0 {
            continue;
        }
        let dk = pow_u128(d, k);
        total += m as i128 * (x as u128 / dk) as i128;
    }
    Ok(total as u64)
}

/// μ(d) for d = 0..=n (μ(0) unused, set to 0).
fn mobius_up_to(n: u64) -> Vec<i8> {
    let n = n as usize;
    let mut mu = vec![1i8; n + 1];
    if n >= 1 {
        mu[0] = 0;
    }
    let mut is_comp = vec![false; n + 1];
    for p in 2..=n {
        if is_comp[p] {
            continue;
        }
        for m in (p..=n).step_by(p) {
            if m > p {
                is_comp[m] = true;
            }
            mu[m] = -mu[m];
        }
        if let Some(p2) = p.checked_mul(p) {
            for m in (p2..=n).step_by(p2) {
                mu[m] = 0;
            }
        }
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_kfree_brute(n: u64, k: u32) -> bool {
        let mut p = 2u64;
        while pow_u128(p, k) <= n as u128 {
            if n.is_multiple_of(p.pow(k)) {
                return false;
            }
            p += 1;
        }
        true
    }

    #[test]
    fn kth_root() {
        assert_eq!(integer_kth_root(0, 2), 0);
        assert_eq!(integer_kth_root(1, 2), 1);
        assert_eq!(integer_kth_root(99, 2), 9);
        assert_eq!(integer_kth_root(100, 2), 10);
        assert_eq!(integer_kth_root(1_000_000_000_000, 2), 1_000_000);
        assert_eq!(integer_kth_root(26, 3), 2);
        assert_eq!(integer_kth_root(27, 3), 3);
        assert_eq!(integer_kth_root(u64::MAX, 3), 2_642_245);
    }

    #[test]
    fn is_kfree_examples() {
        assert!(!is_kfree(49, 2));
        assert!(is_kfree(1, 2));
        assert!(!is_kfree(125781000834058568, 2));
        assert!(!is_kfree(8, 2));
        assert!(!is_kfree(8, 3));
        assert!(is_kfree(10, 2));
        assert!(is_kfree(12, 3));
        assert!(!is_kfree(16, 3));
    }

    #[test]
    fn is_kfree_matches_brute_force() {
        for n in 1..=20_000u64 {
            assert_eq!(is_kfree(n, 2), is_kfree_brute(n, 2), "n={n} k=2");
            assert_eq!(is_kfree(n, 3), is_kfree_brute(n, 3), "n={n} k=3");
        }
        // Residual-square path: p² for primes above the cube root.
        for p in [1009u64, 65537, 2_750_159] {
            assert!(!is_kfree(p * p, 2), "p²={p}²");
            assert!(is_kfree(p * p, 3));
        }
    }

    #[test]
    fn segment_examples() {
        let seg = sieve_segment(48, 51, 2).unwrap();
        assert!(!seg.is_free(48) && !seg.is_free(49) && !seg.is_free(50));
        let seg = sieve_segment(2, 8, 2).unwrap();
        for n in [2, 3, 5, 6, 7] {
            assert!(seg.is_free(n));
        }
        assert!(!seg.is_free(4));
        assert!(sieve_segment(2, 2 + MAX_SEGMENT + 1, 2).is_err());
        assert!(sieve_segment(5, 3, 2).is_err());
    }

    #[test]
    fn segment_matches_pointwise_oracle() {
        let seg = sieve_segment(1_000_000_000_000, 1_000_000_000_000 + 4096, 2).unwrap();
        for n in seg.lo()..seg.hi() {
            assert_eq!(seg.is_free(n), is_kfree(n, 2), "n={n}");
        }
        let seg = sieve_segment(2, 20_000, 3).unwrap();
        for n in seg.lo()..seg.hi() {
            assert_eq!(seg.is_free(n), is_kfree(n, 3), "n={n}");
        }
    }

    #[test]
    fn gap_scan_small() {
        let scan = scan_gaps(100, 2).unwrap();
        assert_eq!(scan.first_occurrence.get(&1), Some(&4));
        assert_eq!(scan.first_occurrence.get(&2), Some(&8));
        assert_eq!(scan.first_occurrence.get(&3), Some(&48));
        let scan = scan_gaps(300, 2).unwrap();
        assert_eq!(scan.first_occurrence.get(&4), Some(&242));
        let scan = scan_gaps(100, 3).unwrap();
        assert_eq!(scan.first_occurrence.get(&1), Some(&8));
    }

    #[test]
    fn gap_scan_closes_run_past_limit() {
        // 48,49,50 are non-squarefree; a limit inside the run must still
        // report the full run.
        let scan = scan_gaps(49, 2).unwrap();
        assert_eq!(scan.first_occurrence.get(&3), Some(&48));
    }

    #[test]
    fn gap_scan_segmentation_independent() {
        let a = scan_gaps_detailed(200_000, 2, 1 << 16, None).unwrap();
        let b = scan_gaps_detailed(200_000, 2, 1 << 20, None).unwrap();
        let c = scan_gaps_detailed(200_000, 2, 977, None).unwrap();
        assert_eq!(a.first_occurrence, b.first_occurrence);
        assert_eq!(a.first_occurrence, c.first_occurrence);
        assert_eq!(a.max, b.max);
        assert_eq!(a.max, c.max);
    }

    #[test]
    fn check_interval_examples() {
        let one = CertInterval::from_integer(1, 64);
        assert_eq!(check_interval(48, &one, 2).unwrap(), None);
        let three = CertInterval::from_integer(3, 64);
        assert_eq!(check_interval(48, &three, 2).unwrap(), Some(51));
    }

    #[test]
    fn record_run_examples() {
        let r = verify_record_run(48, 3).unwrap();
        assert!(r.confirmed, "{:?}", r.failures);
        let r = verify_record_run(48, 4).unwrap();
        assert!(!r.confirmed);
        assert!(r.failures.iter().any(|f| f.contains("51")));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_kfree(1, 2).unwrap(), 1);
        assert_eq!(count_kfree(10, 2).unwrap(), 7);
        assert_eq!(count_kfree(100, 2).unwrap(), 61);
        // Cross-check against a direct scan.
        let mut brute = 0;
        for n in 1..=10_000u64 {
            if is_kfree(n, 2) {
                brute += 1;
            }
        }
        assert_eq!(count_kfree(10_000, 2).unwrap(), brute);
        let mut brute3 = 0;
        for n in 1..=10_000u64 {
            if is_kfree(n, 3) {
                brute3 += 1;
            }
        }
        assert_eq!(count_kfree(10_000, 3).unwrap(), brute3);
    }
}
