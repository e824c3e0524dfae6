//! Lifting field residues to t-bit integers with near-Bernoulli bits by rejection.

use crate::error::{Error, Result};
use crate::field::FieldElem;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

/// Widest lifted value we represent natively.
pub const MAX_T: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub mu: f64,
    pub t: u32,
    pub epsilon: f64,
    /// Constant in the bit-length formula.
    pub c_const: f64,
    pub rejection_cap: u64,
}

pub const DEFAULT_C: f64 = 4.0;

fn check_bias(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidBias(mu))
    }
}

/// t = ⌈C · μ⁻¹(1−μ)⁻¹ · (lg p + 6 lg n) · lg p⌉.
pub fn choose_t_with(p: u64, mu: f64, n: u64, c_const: f64) -> Result<u64> {
    check_bias(mu)?;
    if p < 2 || n < 2 {
        return Err(Error::InvalidParameters(format!("choose_t needs p >= 2 and n >= 2 (p={p}, n={n})")));
    }
    let lp = (p as f64).log2();
    let ln = (n as f64).log2();
    Ok((c_const / (mu * (1.0 - mu)) * (lp + 6.0 * ln) * lp).ceil() as u64)
}

pub fn choose_t(p: u64, mu: f64, n: u64) -> Result<u64> {
    choose_t_with(p, mu, n, DEFAULT_C)
}

impl SamplerConfig {
    /// Config for prime `p` and instance size `n` with an explicit bit-length.
    /// Uses ε = 1/n³ when that is below 1/p, otherwise 1/(2p).
    pub fn new(p: u64, mu: f64, n: u64, t: u32) -> Result<Self> {
        check_bias(mu)?;
        if t == 0 || t > MAX_T {
            return Err(Error::InvalidParameters(format!("bit-length t={t} outside [1, {MAX_T}]")));
        }
        if n < 2 || p < 2 {
            return Err(Error::InvalidParameters("sampler needs n >= 2 and p >= 2".into()));
        }
        let mut epsilon = 1.0 / (n as f64).powi(3);
        if epsilon >= 1.0 / p as f64 {
            epsilon = 0.5 / p as f64;
        }
        Ok(SamplerConfig { mu, t, epsilon, c_const: DEFAULT_C, rejection_cap: rejection_cap(t, p, epsilon, n) })
    }
}

/// ⌈t · (1/p − ε)⁻¹ · lg³ n⌉.
pub fn rejection_cap(t: u32, p: u64, epsilon: f64, n: u64) -> u64 {
    let lg = (n as f64).log2();
    (t as f64 / (1.0 / p as f64 - epsilon) * lg * lg * lg).ceil().max(1.0) as u64
}

/// One draw of t i.i.d. Ber(μ) bits, bit i of the result being draw i.
#[inline]
pub fn bernoulli_bits<R: RngCore + ?Sized>(t: u32, mu: f64, rng: &mut R) -> u128 {
    if mu == 0.5 {
        let lo = rng.next_u64() as u128;
        let v = if t > 64 { lo | ((rng.next_u64() as u128) << 64) } else { lo };
        if t == 128 {
            v
        } else {
            v & ((1u128 << t) - 1)
        }
    } else {
        let mut v = 0u128;
        for i in 0..t {
            if rng.gen_bool(mu) {
                v |= 1 << i;
            }
        }
        v
    }
}

/// Rejection-sample y ~ Ber(μ)^t conditioned on y ≡ x (mod p).
pub fn lift<R: RngCore + ?Sized>(x: FieldElem, cfg: &SamplerConfig, rng: &mut R) -> Result<u128> {
    let p = x.p as u128;
    let target = x.value as u128;
    for _ in 0..cfg.rejection_cap {
        let y = bernoulli_bits(cfg.t, cfg.mu, rng);
        if y % p == target {
            return Ok(y);
        }
    }
    Err(Error::SamplerTimeout(cfg.rejection_cap))
}

/// Independent [`lift`] of every coordinate.
pub fn lift_vector<R: RngCore + ?Sized>(xs: &[FieldElem], cfg: &SamplerConfig, rng: &mut R) -> Result<Vec<u128>> {
    xs.iter().map(|&x| lift(x, cfg, rng)).collect()
}

/// [`lift_vector`] over raw residues, writing into `out`.
pub fn lift_residues_into<R: RngCore + ?Sized>(xs: &[u64], p: u64, cfg: &SamplerConfig, rng: &mut R, out: &mut Vec<u128>) -> Result<()> {
    out.clear();
    for &x in xs {
        out.push(lift(FieldElem { value: x, p }, cfg, rng)?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn t_formula() {
        let t = choose_t(5, 0.5, 256).unwrap();
        let lp = 5f64.log2();
        assert_eq!(t, (4.0 * 4.0 * (lp + 48.0) * lp).ceil() as u64);
        assert_eq!(choose_t(5, 0.0, 256), Err(Error::InvalidBias(0.0)));
        assert!(choose_t(3, 0.5, 16).unwrap() < choose_t(3, 0.5, 17).unwrap());
        assert!(choose_t(3, 0.5, 1 << 10).unwrap() < choose_t(3, 0.5, 1 << 11).unwrap());
    }

    #[test]
    fn lift_is_congruent_and_reproducible() {
        let cfg = SamplerConfig::new(5, 0.5, 256, 40).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for v in 0..5 {
            let x = FieldElem::new(v, 5);
            let ya = lift(x, &cfg, &mut a).unwrap();
            assert_eq!(ya % 5, v as u128);
            assert!(ya < 1 << 40);
            assert_eq!(ya, lift(x, &cfg, &mut b).unwrap());
        }
    }

    struct Stuck;
    impl RngCore for Stuck {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, d: &mut [u8]) {
            d.fill(0)
        }
        fn try_fill_bytes(&mut self, d: &mut [u8]) -> std::result::Result<(), rand::Error> {
            d.fill(0);
            Ok(())
        }
    }

    #[test]
    fn timeout_path() {
        let mut cfg = SamplerConfig::new(5, 0.5, 16, 8).unwrap();
        cfg.rejection_cap = 1;
        assert_eq!(lift(FieldElem::new(3, 5), &cfg, &mut Stuck), Err(Error::SamplerTimeout(1)));
    }

    #[test]
    fn biased_bits_and_vectors() {
        let cfg = SamplerConfig::new(7, 0.3, 64, 20).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<_> = (0..50).map(|_| FieldElem::new(0, 7)).collect();
        let out = lift_vector(&xs, &cfg, &mut r).unwrap();
        assert_eq!(out.len(), 50);
        assert!(out.iter().all(|y| y % 7 == 0 && *y < 1 << 20));
    }

    #[test]
    fn cap_formula() {
        let c = rejection_cap(10, 5, 0.01, 16);
        assert_eq!(c, (10.0 / (0.2 - 0.01) * 64.0f64).ceil() as u64);
    }
}
