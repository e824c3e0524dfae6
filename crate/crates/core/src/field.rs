//! Small prime fields, prime-basis selection and CRT reconstruction.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// An element of F_p. The invariant `value < p` is kept by every constructor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElem {
    pub value: u64,
    pub p: u64,
}

impl FieldElem {
    pub fn new(value: u64, p: u64) -> Self {
        FieldElem { value: value % p, p }
    }
    pub fn from_i64(value: i64, p: u64) -> Self {
        FieldElem { value: value.rem_euclid(p as i64) as u64, p }
    }
    pub fn zero(p: u64) -> Self {
        FieldElem { value: 0, p }
    }
    pub fn add(self, o: Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        FieldElem { value: add_mod(self.value, o.value, self.p), p: self.p }
    }
    pub fn sub(self, o: Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        FieldElem { value: sub_mod(self.value, o.value, self.p), p: self.p }
    }
    pub fn mul(self, o: Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        FieldElem { value: mul_mod(self.value, o.value, self.p), p: self.p }
    }
    pub fn pow(self, e: u64) -> Self {
        FieldElem { value: pow_mod(self.value, e, self.p), p: self.p }
    }
    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self) -> Option<Self> {
        inv_mod(self.value, self.p).map(|value| FieldElem { value, p: self.p })
    }
}

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    if a < p && b < p && p <= 1 << 63 {
        let s = a + b;
        return if s >= p { s - p } else { s };
    }
    let s = a as u128 + b as u128;
    (s % p as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        p - (b - a)
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    if (a | b) >> 32 == 0 {
        return (a * b) % p;
    }
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

/// Inverse via extended Euclid, valid for any modulus coprime to `a`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller-Rabin, exact for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(sp) {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= from`.
pub fn next_prime(from: u64) -> u64 {
    let mut q = from.max(2);
    while !is_prime(q) {
        q += 1;
    }
    q
}

/// ⌈lg n⌉ for n ≥ 1.
pub fn ceil_lg(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// A CRT prime family whose product covers the squared output range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeBasis {
    pub primes: Vec<u64>,
    pub product: BigUint,
    pub c: u32,
    pub n: u64,
}

impl PrimeBasis {
    pub fn s(&self) -> usize {
        self.primes.len()
    }
}

/// Primes from a window starting at `max(5, ⌈lg n⌉)` until the product reaches n^{2c}.
pub fn select_primes(n: u64, c: u32) -> Result<PrimeBasis> {
    select_primes_from(n, c, 0)
}

/// Same as [`select_primes`] but never returns a prime below `floor`.
///
/// The window grows geometrically (doubling its upper end) and the sieve is
/// rerun over each new stretch; within the window the smallest primes are
/// taken greedily.
pub fn select_primes_from(n: u64, c: u32, floor: u64) -> Result<PrimeBasis> {
    if n < 2 || c == 0 {
        return Err(Error::InvalidParameters(format!("select_primes needs n >= 2 and c >= 1 (n={n}, c={c})")));
    }
    let target = BigUint::from(n).pow(2 * c);
    let lo = (ceil_lg(n) as u64).max(5).max(floor);
    let mut hi = lo.max(64);
    let mut scanned = lo;
    let mut primes = Vec::new();
    let mut product = BigUint::one();
    loop {
        for q in sieve_range(scanned, hi) {
            primes.push(q);
            product *= q;
            if product >= target {
                return Ok(PrimeBasis { primes, product, c, n });
            }
        }
        scanned = hi + 1;
        hi = hi.checked_mul(2).ok_or_else(|| Error::InvalidParameters("prime window overflow".into()))?;
    }
}

/// Primes in `[lo, hi]` by a segmented sieve of Eratosthenes.
fn sieve_range(lo: u64, hi: u64) -> Vec<u64> {
    if hi < lo {
        return Vec::new();
    }
    let lo = lo.max(2);
    let len = (hi - lo + 1) as usize;
    let mut composite = vec![false; len];
    let mut f = 2u64;
    while f * f <= hi {
        let start = (lo.div_ceil(f) * f).max(f * f);
        let mut m = start;
        while m <= hi {
            composite[(m - lo) as usize] = true;
            m += f;
        }
        f += 1;
    }
    (0..len).filter(|&i| !composite[i]).map(|i| lo + i as u64).collect()
}

/// The unique x in `[0, Π p_i)` congruent to every residue.
pub fn crt_reconstruct(residues: &[FieldElem]) -> Result<BigUint> {
    for (i, a) in residues.iter().enumerate() {
        for b in &residues[i + 1..] {
            if a.p.gcd(&b.p) != 1 {
                return Err(Error::CrtModuliNotCoprime(a.p, b.p));
            }
        }
    }
    // Incremental Garner: keep x mod M, lift to x mod M·p.
    let mut x = BigUint::zero();
    let mut m = BigUint::one();
    for r in residues {
        let p = r.p;
        let x_mod_p = (&x % p).to_u64().unwrap();
        let m_mod_p = (&m % p).to_u64().unwrap();
        let diff = sub_mod(r.value % p, x_mod_p, p);
        let k = if p == 1 { 0 } else { mul_mod(diff, inv_mod(m_mod_p, p).expect("coprime moduli"), p) };
        x += &m * k;
        m *= p;
    }
    Ok(x)
}
