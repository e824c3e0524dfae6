//! Average-case #OV: long vectors almost never have an orthogonal pair, so
//! above a dimension threshold the count is taken to be zero; below it the
//! lists are deduplicated and counted exactly.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Two lists of d-bit vectors, each packed into ⌈d/64⌉ words.
#[derive(Debug, Clone, PartialEq)]
pub struct OvInstance {
    pub d: usize,
    /// Bias the lists were drawn with; drives the threshold.
    pub mu: f64,
    pub a: Vec<Vec<u64>>,
    pub b: Vec<Vec<u64>>,
}

impl OvInstance {
    pub fn new(d: usize, mu: f64, a: Vec<Vec<u64>>, b: Vec<Vec<u64>>) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::InvalidBias(mu));
        }
        let words = d.div_ceil(64);
        for v in a.iter().chain(&b) {
            if v.len() != words {
                return Err(Error::WidthMismatch(format!("vector has {} words, expected {words}", v.len())));
            }
            if !d.is_multiple_of(64) && words > 0 && v[words - 1] >> (d % 64) != 0 {
                return Err(Error::WidthMismatch(format!("vector wider than d={d}")));
            }
        }
        Ok(OvInstance { d, mu, a, b })
    }

    pub fn n(&self) -> usize {
        self.a.len().max(self.b.len())
    }
}

/// Every coordinate of every vector is 1 with probability μ.
pub fn gen_ov(n: usize, d: usize, mu: f64, seed: u64) -> Result<OvInstance> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidBias(mu));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = d.div_ceil(64);
    let vec = |rng: &mut ChaCha8Rng| {
        let mut v = vec![0u64; words];
        for i in 0..d {
            if rng.gen_bool(mu) {
                v[i / 64] |= 1 << (i % 64);
            }
        }
        v
    };
    let a = (0..n).map(|_| vec(&mut rng)).collect();
    let b = (0..n).map(|_| vec(&mut rng)).collect();
    OvInstance::new(d, mu, a, b)
}

/// 2·lg(e)·lg(n)/μ⁴, with n floored at 2.
pub fn long_threshold(n: usize, mu: f64) -> f64 {
    2.0 * std::f64::consts::LOG2_E * (n.max(2) as f64).log2() / mu.powi(4)
}

fn orthogonal(x: &[u64], y: &[u64]) -> bool {
    x.iter().zip(y).all(|(p, q)| p & q == 0)
}

fn multiplicities(list: &[Vec<u64>]) -> Vec<(&[u64], u64)> {
    let mut m: HashMap<&[u64], u64> = HashMap::new();
    for v in list {
        *m.entry(v.as_slice()).or_insert(0) += 1;
    }
    m.into_iter().collect()
}

/// Which branch `count_ov_avg` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OvRegime {
    Long,
    Short,
}

pub fn regime(inst: &OvInstance) -> OvRegime {
    if inst.d as f64 > long_threshold(inst.n(), inst.mu) {
        OvRegime::Long
    } else {
        OvRegime::Short
    }
}

pub fn count_ov_avg(inst: &OvInstance) -> u128 {
    if regime(inst) == OvRegime::Long {
        return 0;
    }
    let (ma, mb) = (multiplicities(&inst.a), multiplicities(&inst.b));
    let mut total = 0u128;
    for (x, cx) in &ma {
        for (y, cy) in &mb {
            if orthogonal(x, y) {
                total += *cx as u128 * *cy as u128;
            }
        }
    }
    total
}

pub fn brute_count_ov(inst: &OvInstance) -> u128 {
    let mut total = 0u128;
    for x in &inst.a {
        for y in &inst.b {
            total += orthogonal(x, y) as u128;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_value() {
        let t = long_threshold(256, 0.5);
        assert!((t - 369.3).abs() < 0.1, "{t}");
    }

    #[test]
    fn trivial_cases() {
        let zeros = OvInstance::new(3, 0.5, vec![vec![0]; 2], vec![vec![0]; 2]).unwrap();
        assert_eq!(brute_count_ov(&zeros), 4);
        assert_eq!(count_ov_avg(&zeros), 4);
        let ones = OvInstance::new(3, 0.5, vec![vec![7]; 4], vec![vec![7]; 4]).unwrap();
        assert_eq!(brute_count_ov(&ones), 0);
        assert_eq!(count_ov_avg(&ones), 0);
    }
}
