//! Integer and multiplicative-function primitives.
//!
//! All exact arithmetic is done in `u64`/`i64`; anything that could overflow is
//! checked and reported as [`Error::Overflow`] instead of wrapping.

use crate::error::{domain, Error, Result};

/// Largest sieve bound accepted by [`sieve_primes`] (about 125 MB of flags).
pub const SIEVE_LIMIT_CAP: u64 = 1_000_000_000;

/// Ascending list of all primes up to `limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
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

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// Primes in the closed real interval `[lo, hi]`.
    pub fn in_window(&self, lo: f64, hi: f64) -> impl Iterator<Item = u64> + '_ {
        self.primes
            .iter()
            .copied()
            .filter(move |&p| (p as f64) >= lo && (p as f64) <= hi)
    }
}

/// Sieve of Eratosthenes over odd numbers.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return domain(format!("sieve limit must be at least 2, got {limit}"));
    }
    if limit > SIEVE_LIMIT_CAP {
        return Err(Error::Resource {
            what: "prime sieve limit",
            requested: limit,
            cap: SIEVE_LIMIT_CAP,
        });
    }
    // index i stands for 2i+1
    let half = (limit as usize - 1) / 2 + 1;
    let mut composite = vec![false; half];
    composite[0] = true;
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= limit as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p - 1) / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut primes = Vec::with_capacity(estimate_pi(limit));
    primes.push(2);
    primes.extend(
        composite
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| 2 * i as u64 + 1),
    );
    Ok(PrimeTable { limit, primes })
}

fn estimate_pi(x: u64) -> usize {
    let xf = x as f64;
    if xf < 17.0 {
        8
    } else {
        (1.3 * xf / xf.ln()) as usize
    }
}

/// Prime factorization with strictly increasing primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Number of divisors.
    pub fn tau(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Trial-division factorization; fine for the desk-scale ranges used here.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut factors = Vec::new();
    let mut m = n;
    let mut push = |p: u64, m: &mut u64| {
        let mut e = 0;
        while *m % p == 0 {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(2, &mut m);
    push(3, &mut m);
    let mut p = 5u64;
    while p.saturating_mul(p) <= m {
        push(p, &mut m);
        push(p + 2, &mut m);
        p += 6;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Factorization { n, factors }
}

/// Smallest-prime-factor table for fast factorization of every `n <= limit`.
#[derive(Debug, Clone)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    /// Cap on the table size (4 bytes per entry).
    pub const CAP: u64 = 200_000_000;

    pub fn new(limit: u64) -> Result<Self> {
        if limit > Self::CAP {
            return Err(Error::Resource {
                what: "smallest-prime-factor sieve",
                requested: limit,
                cap: Self::CAP,
            });
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Ok(SpfSieve { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        assert!(n >= 1 && n <= self.limit());
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p as u64, e));
        }
        Factorization { n, factors }
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Kronecker symbol `(a/n)` for `n >= 1`.
///
/// `(a/2)` is 0 for even `a`, 1 for `a ≡ ±1 (mod 8)` and -1 for `a ≡ ±3 (mod 8)`.
pub fn kronecker(a: i64, n: u64) -> i8 {
    assert!(n >= 1, "kronecker requires n >= 1");
    let twos = n.trailing_zeros();
    let odd = n >> twos;
    let mut sign = 1i8;
    if twos > 0 {
        match a.rem_euclid(8) {
            0 | 2 | 4 | 6 => return 0,
            1 | 7 => {}
            _ => {
                if twos % 2 == 1 {
                    sign = -1;
                }
            }
        }
    }
    sign * jacobi(a.rem_euclid(odd as i64) as u64, odd)
}

/// Jacobi symbol for odd positive `n`.
pub fn jacobi(a: u64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a % n;
    let mut n = n;
    let mut result = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Möbius function together with the squarefree flag.
pub fn mu_and_squarefree(n: u64) -> (i8, bool) {
    let f = factorize(n);
    if f.is_squarefree() {
        let mu = if f.factors.len() % 2 == 0 { 1 } else { -1 };
        (mu, true)
    } else {
        (0, false)
    }
}

pub fn mobius(n: u64) -> i8 {
    mu_and_squarefree(n).0
}

/// Ascending list of all divisors of `n`.
pub fn divisors(n: u64) -> Vec<u64> {
    factorize(n).divisors()
}

/// `sigma(gcd(m, n))`, the divisor sum of the gcd.
pub fn sigma_gcd(m: u64, n: u64) -> Result<u64> {
    if m == 0 || n == 0 {
        return domain("sigma_gcd requires m, n >= 1");
    }
    sigma(gcd(m, n))
}

/// Sum of divisors with overflow checks.
pub fn sigma(n: u64) -> Result<u64> {
    let f = factorize(n);
    let mut total = 1u64;
    for &(p, e) in &f.factors {
        let mut term = 1u64;
        let mut pk = 1u64;
        for _ in 0..e {
            pk = pk.checked_mul(p).ok_or(Error::Overflow("sigma"))?;
            term = term.checked_add(pk).ok_or(Error::Overflow("sigma"))?;
        }
        total = total.checked_mul(term).ok_or(Error::Overflow("sigma"))?;
    }
    Ok(total)
}

/// Inverse of `a` modulo `c`, if `gcd(a, c) = 1`.
pub fn mod_inverse(a: u64, c: u64) -> Option<u64> {
    if c == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % c as i128, c as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(c as i128) as u64)
}

/// The squarefree kernel: product of the primes dividing `n` to an odd power.
pub fn squarefree_part(n: u64) -> u64 {
    factorize(n)
        .factors
        .iter()
        .filter(|&&(_, e)| e % 2 == 1)
        .map(|&(p, _)| p)
        .product()
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = isqrt(n);
    r.checked_mul(r) == Some(n)
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = ((n as f64).sqrt() as u64).min(u32::MAX as u64);
    while r * r > n {
        r -= 1;
    }
    while r < u32::MAX as u64 && (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Odd squarefree integers in `[lo, hi]`, via a segmented sieve by prime squares.
pub fn odd_squarefree_in_range(lo: u64, hi: u64) -> Result<Vec<u64>> {
    if hi < lo {
        return Ok(Vec::new());
    }
    let lo = lo.max(1);
    let root = isqrt(hi);
    let primes = if root >= 2 {
        sieve_primes(root)?.primes
    } else {
        Vec::new()
    };
    const SEGMENT: u64 = 1 << 16;
    let mut out = Vec::new();
    let mut start = lo;
    while start <= hi {
        let end = (start + SEGMENT - 1).min(hi);
        let mut ok = vec![true; (end - start + 1) as usize];
        for &p in &primes {
            let q = p * p;
            if q > end {
                break;
            }
            let mut m = start.div_ceil(q) * q;
            while m <= end {
                ok[(m - start) as usize] = false;
                m += q;
            }
        }
        out.extend(
            ok.iter()
                .enumerate()
                .map(|(i, &f)| (start + i as u64, f))
                .filter(|&(d, f)| f && d % 2 == 1)
                .map(|(d, _)| d),
        );
        start = end + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_small_cases() {
        assert_eq!(sieve_primes(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap().primes(), &[2]);
        assert_eq!(sieve_primes(3).unwrap().primes(), &[2, 3]);
        assert!(matches!(sieve_primes(1), Err(Error::Domain(_))));
        assert!(matches!(
            sieve_primes(SIEVE_LIMIT_CAP + 1),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn sieve_million_matches_trial_division_count() {
        let table = sieve_primes(1_000_000).unwrap();
        let brute = (2..=1_000_000u64)
            .filter(|&n| {
                let mut d = 2;
                while d * d <= n {
                    if n % d == 0 {
                        return false;
                    }
                    d += 1;
                }
                true
            })
            .count();
        assert_eq!(brute, 78498);
        assert_eq!(table.len(), 78498);
        assert!(table.primes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(1, 7), 1);
        assert_eq!(kronecker(5, 5), 0);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(3, 2), -1);
        assert_eq!(kronecker(7, 2), 1);
        assert_eq!(kronecker(6, 4), 0);
        assert_eq!(kronecker(5, 1), 1);
        assert_eq!(kronecker(-1, 3), -1);
    }

    #[test]
    fn kronecker_vanishes_exactly_on_shared_factors() {
        for n in 1..200u64 {
            for a in -50i64..50 {
                let zero = kronecker(a, n) == 0;
                assert_eq!(zero, gcd(a.unsigned_abs(), n) > 1, "a={a} n={n}");
            }
        }
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_and_squarefree(1), (1, true));
        assert_eq!(mu_and_squarefree(30), (-1, true));
        assert_eq!(mu_and_squarefree(12), (0, false));
        assert_eq!(mu_and_squarefree(2), (-1, true));
        assert_eq!(mu_and_squarefree(6), (1, true));
    }

    #[test]
    fn mobius_inversion_identity() {
        for n in 1..=10_000u64 {
            let s: i64 = divisors(n).iter().map(|&d| mobius(d) as i64).sum();
            assert_eq!(s, i64::from(n == 1), "n={n}");
        }
    }

    #[test]
    fn sigma_gcd_examples() {
        assert_eq!(sigma_gcd(4, 6).unwrap(), 3);
        assert_eq!(sigma_gcd(5, 7).unwrap(), 1);
        assert_eq!(sigma_gcd(36, 48).unwrap(), 28);
        assert!(sigma_gcd(0, 3).is_err());
    }

    #[test]
    fn divisor_examples() {
        assert_eq!(divisors(1), vec![1]);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(97), vec![1, 97]);
    }

    #[test]
    fn spf_agrees_with_trial_division() {
        let spf = SpfSieve::new(5000).unwrap();
        for n in 1..=5000 {
            assert_eq!(spf.factorize(n), factorize(n));
        }
    }

    #[test]
    fn inverse_and_square_helpers() {
        assert_eq!(mod_inverse(3, 7), Some(5));
        assert_eq!(mod_inverse(2, 4), None);
        assert_eq!(squarefree_part(72), 2);
        assert!(is_perfect_square(144));
        assert!(!is_perfect_square(143));
        assert_eq!(isqrt(u64::MAX), 4_294_967_295);
    }

    #[test]
    fn odd_squarefree_range_matches_filter() {
        let got = odd_squarefree_in_range(100, 70_000).unwrap();
        let want: Vec<u64> = (100..=70_000u64)
            .filter(|&d| d % 2 == 1 && mu_and_squarefree(d).1)
            .collect();
        assert_eq!(got, want);
    }
}
