//! Random-curve self-correction of low-degree polynomial oracles.

use crate::error::{Error, Result};
use crate::field::{add_mod, inv_mod, mul_mod, sub_mod};
use rand::{Rng, RngCore};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionParams {
    pub d: usize,
    pub p: u64,
    pub epsilon: f64,
    /// Number of curve points queried.
    pub m: usize,
}

impl CorrectionParams {
    /// Defaults: m = 12d + 1, ε = 0.1.
    pub fn new(d: usize, p: u64) -> Result<Self> {
        Self::with_m(d, p, 12 * d + 1)
    }

    pub fn with_m(d: usize, p: u64, m: usize) -> Result<Self> {
        let c = CorrectionParams { d, p, epsilon: 0.1, m };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameters(s));
        if self.d == 0 {
            return bad("degree must be at least 1".into());
        }
        if self.p <= 12 * self.d as u64 {
            return bad(format!("prime {} must exceed 12d = {}", self.p, 12 * self.d));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / 3.0) {
            return bad(format!("error rate {} outside (0, 1/3)", self.epsilon));
        }
        if self.m < 4 * self.d + 3 {
            return bad(format!("m = {} below 4d + 3", self.m));
        }
        if self.m as u64 >= self.p {
            return bad(format!("m = {} needs distinct nonzero abscissae below p = {}", self.m, self.p));
        }
        Ok(())
    }

    /// Error budget of the decoder: ⌊(m − 2d − 1)/2⌋.
    pub fn error_budget(&self) -> usize {
        (self.m - 2 * self.d - 1) / 2
    }

    /// Low degrees are accepted but worth flagging in reports.
    pub fn low_degree_flag(&self) -> bool {
        self.d <= 9
    }
}

/// Evaluates a coefficient vector (lowest degree first) at `x`.
pub fn poly_eval(coeffs: &[u64], x: u64, p: u64) -> u64 {
    coeffs.iter().rev().fold(0, |acc, &c| add_mod(mul_mod(acc, x, p), c, p))
}

/// Solves `a · z = rhs` mod p, returning any solution.
fn solve_linear(mut a: Vec<Vec<u64>>, mut rhs: Vec<u64>, p: u64) -> Option<Vec<u64>> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, piv);
        rhs.swap(r, piv);
        let inv = inv_mod(a[r][c], p)?;
        for v in a[r].iter_mut() {
            *v = mul_mod(*v, inv, p);
        }
        rhs[r] = mul_mod(rhs[r], inv, p);
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in c..cols {
                    a[i][j] = sub_mod(a[i][j], mul_mod(f, a[r][j], p), p);
                }
                rhs[i] = sub_mod(rhs[i], mul_mod(f, rhs[r], p), p);
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if rhs[r..].iter().any(|&v| v != 0) {
        return None;
    }
    let mut z = vec![0; cols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        z[c] = rhs[i];
    }
    Some(z)
}

/// Divides `num` by `den` (both lowest degree first); `None` on nonzero remainder.
fn poly_div_exact(num: &[u64], den: &[u64], p: u64) -> Option<Vec<u64>> {
    let dd = den.iter().rposition(|&c| c != 0)?;
    let lead_inv = inv_mod(den[dd], p)?;
    let mut rem = num.to_vec();
    if rem.len() < dd + 1 {
        return if rem.iter().all(|&c| c == 0) { Some(vec![0]) } else { None };
    }
    let mut q = vec![0; rem.len() - dd];
    for i in (0..q.len()).rev() {
        let c = mul_mod(rem[i + dd], lead_inv, p);
        q[i] = c;
        if c != 0 {
            for j in 0..=dd {
                rem[i + j] = sub_mod(rem[i + j], mul_mod(c, den[j], p), p);
            }
        }
    }
    if rem.iter().any(|&c| c != 0) {
        return None;
    }
    Some(q)
}

/// Recovers the degree-≤D polynomial agreeing with all but at most `e` points.
pub fn berlekamp_welch(xs: &[u64], ys: &[u64], deg: usize, e: usize, p: u64) -> Result<Vec<u64>> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::ArityMismatch { expected: n, got: ys.len() });
    }
    if n < deg + 2 * e + 1 {
        return Err(Error::InvalidParameters(format!("{n} points cannot decode degree {deg} with {e} errors")));
    }
    for i in 0..n {
        if xs[..i].iter().any(|&x| x % p == xs[i] % p) {
            return Err(Error::InvalidParameters("abscissae must be distinct".into()));
        }
    }
    // Unknowns: Q_0..Q_{deg+e}, then E_0..E_{e-1}; E is monic of degree e.
    // Q(x_i) - y_i Σ_{j<e} E_j x_i^j = y_i x_i^e.
    let nq = deg + e + 1;
    let mut a = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for (&x, &y) in xs.iter().zip(ys) {
        let mut row = Vec::with_capacity(nq + e);
        let mut pw = 1u64;
        let mut powers = Vec::with_capacity(nq);
        for _ in 0..nq {
            powers.push(pw);
            pw = mul_mod(pw, x, p);
        }
        row.extend_from_slice(&powers);
        for &pj in powers.iter().take(e) {
            row.push(sub_mod(0, mul_mod(y, pj, p), p));
        }
        rhs.push(mul_mod(y % p, powers.get(e).copied().unwrap_or_else(|| crate::field::pow_mod(x, e as u64, p)), p));
        a.push(row);
    }
    let z = solve_linear(a, rhs, p).ok_or(Error::DecodeFailure)?;
    let q = &z[..nq];
    let mut epoly = z[nq..].to_vec();
    epoly.push(1);
    let mut coeffs = poly_div_exact(q, &epoly, p).ok_or(Error::DecodeFailure)?;
    if coeffs.iter().skip(deg + 1).any(|&c| c != 0) {
        return Err(Error::DecodeFailure);
    }
    coeffs.resize(deg + 1, 0);
    let agree = xs.iter().zip(ys).filter(|(&x, &y)| poly_eval(&coeffs, x, p) == y % p).count();
    if agree + e < n {
        return Err(Error::DecodeFailure);
    }
    Ok(coeffs)
}

/// One randomized correction at `x` through `oracle`.
///
/// The oracle is queried on x + t·y + t²·z for t = 1..m; the restriction has
/// degree at most 2d and is decoded to recover its value at t = 0.
pub fn correct<R, F>(x: &[u64], oracle: &mut F, params: &CorrectionParams, rng: &mut R) -> Result<u64>
where
    R: RngCore + ?Sized,
    F: FnMut(&[u64], &mut R) -> Result<u64>,
{
    params.validate()?;
    let p = params.p;
    let n = x.len();
    let y: Vec<u64> = (0..n).map(|_| rng.gen_range(0..p)).collect();
    let z: Vec<u64> = (0..n).map(|_| rng.gen_range(0..p)).collect();
    let mut xs = Vec::with_capacity(params.m);
    let mut ys = Vec::with_capacity(params.m);
    let mut point = vec![0u64; n];
    for t in 1..=params.m as u64 {
        let t2 = mul_mod(t, t, p);
        for i in 0..n {
            point[i] = add_mod(add_mod(x[i] % p, mul_mod(t, y[i], p), p), mul_mod(t2, z[i], p), p);
        }
        xs.push(t);
        ys.push(oracle(&point, rng)? % p);
    }
    let coeffs = berlekamp_welch(&xs, &ys, 2 * params.d, params.error_budget(), p)?;
    Ok(coeffs[0])
}

/// Plurality over up to `reps` runs, ties toward the smaller value.
///
/// Stops as soon as the remaining runs could not change the winner, which
/// yields the same value as running all repetitions.
pub fn amplify<R, F>(mut op: F, reps: usize, rng: &mut R) -> Result<u64>
where
    R: RngCore + ?Sized,
    F: FnMut(&mut R) -> Result<u64>,
{
    if reps == 0 {
        return Err(Error::InvalidParameters("amplify needs at least one repetition".into()));
    }
    let mut tally: BTreeMap<u64, usize> = BTreeMap::new();
    for done in 1..=reps {
        if let Ok(v) = op(rng) {
            *tally.entry(v).or_insert(0) += 1;
        }
        let remaining = reps - done;
        if let Some((lead, lc)) = leader(&tally) {
            let rival = tally.iter().filter(|(&v, _)| v != lead).map(|(_, &c)| c).max().unwrap_or(0);
            if lc > rival + remaining {
                return Ok(lead);
            }
        }
    }
    leader(&tally).map(|(v, _)| v).ok_or(Error::AmplifyExhausted(reps))
}

fn leader(tally: &BTreeMap<u64, usize>) -> Option<(u64, usize)> {
    // Iteration is in increasing value, so a strict comparison keeps the smallest on ties.
    let mut best: Option<(u64, usize)> = None;
    for (&v, &c) in tally {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((v, c));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bw_examples() {
        let p = 7;
        let xs = [1u64, 2, 3, 4, 5];
        let ys: Vec<u64> = xs.iter().map(|&x| (x * x + 1) % p).collect();
        assert_eq!(berlekamp_welch(&xs, &ys, 2, 1, p).unwrap(), vec![1, 0, 1]);
        let mut bad = ys.clone();
        bad[2] = (bad[2] + 3) % p;
        assert_eq!(berlekamp_welch(&xs, &bad, 2, 1, p).unwrap(), vec![1, 0, 1]);
        let mut two = ys.clone();
        two[0] = (two[0] + 1) % p;
        two[1] = (two[1] + 1) % p;
        assert_eq!(berlekamp_welch(&xs, &two, 2, 1, p), Err(Error::DecodeFailure));
    }

    #[test]
    fn bw_random_within_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = 101;
        for _ in 0..200 {
            let deg = rng.gen_range(0..6);
            let e = rng.gen_range(0..5);
            let n = deg + 2 * e + 1 + rng.gen_range(0..3);
            let coeffs: Vec<u64> = (0..=deg).map(|_| rng.gen_range(0..p)).collect();
            let xs: Vec<u64> = (1..=n as u64).collect();
            let mut ys: Vec<u64> = xs.iter().map(|&x| poly_eval(&coeffs, x, p)).collect();
            let errs = rng.gen_range(0..=e);
            for i in 0..errs {
                ys[i * 2 % n] = (ys[i * 2 % n] + 1 + rng.gen_range(0..p - 1)) % p;
            }
            let got = berlekamp_welch(&xs, &ys, deg, e, p).unwrap();
            assert_eq!(got, coeffs);
        }
    }

    #[test]
    fn amplify_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(amplify(|_: &mut ChaCha8Rng| Ok(9), 7, &mut rng).unwrap(), 9);
        assert_eq!(amplify(|_: &mut ChaCha8Rng| Ok(4), 1, &mut rng).unwrap(), 4);
        assert_eq!(amplify(|_: &mut ChaCha8Rng| Err::<u64, _>(Error::DecodeFailure), 5, &mut rng), Err(Error::AmplifyExhausted(5)));
        let mut seq = [3u64, 1, 3, 1].into_iter();
        assert_eq!(amplify(|_: &mut ChaCha8Rng| Ok(seq.next().unwrap()), 4, &mut rng).unwrap(), 1);
    }

    #[test]
    fn params_validation() {
        assert!(CorrectionParams::new(3, 101).is_ok());
        assert!(CorrectionParams::new(3, 31).is_err());
        assert!(CorrectionParams::with_m(3, 101, 14).is_err());
        assert!(CorrectionParams::new(0, 101).is_err());
        assert_eq!(CorrectionParams::new(3, 101).unwrap().error_budget(), 15);
    }
}
