//! Worst-case to average-case pipeline: CRT split, corrected evaluation through
//! a zero-one average-case solver, amplification and CRT recombination.

use crate::bits::Bits;
use crate::corrector::{amplify, correct, CorrectionParams};
use crate::dpoly::{slice_count, verify_partite, PartitePolynomial, DEFAULT_SLICE_BUDGET};
use crate::error::{Error, Result};
use crate::factored::{build_f_ckfunc, count_fkf, fkf_indicator, FkfInstance, FkfShape, PackedFkfCounter, Predicate};
use crate::field::{add_mod, ceil_lg, crt_reconstruct, mul_mod, pow_mod, select_primes_from, FieldElem};
use crate::sampler::{lift, SamplerConfig};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A counting problem with a good low-degree polynomial for every prime.
pub struct GoodPolyProblem<'a> {
    /// Input bit-length.
    pub n: usize,
    /// Outputs lie in [0, n^c].
    pub c: u32,
    pub exact_solver: Box<dyn Fn(&Bits) -> BigUint + 'a>,
    pub poly_builder: Box<dyn Fn(u64) -> Result<PartitePolynomial> + 'a>,
    pub d: usize,
    pub mu: f64,
}

/// The average-case solver being reduced to.
pub struct AvgSolver<'a> {
    pub answer: Box<dyn FnMut(&Bits) -> u128 + 'a>,
    pub error_rate: f64,
    pub calls: u64,
}

impl<'a> AvgSolver<'a> {
    pub fn exact(f: impl FnMut(&Bits) -> u128 + 'a) -> Self {
        AvgSolver { answer: Box::new(f), error_rate: 0.0, calls: 0 }
    }

    /// Wraps `f` so every call independently returns a wrong value with probability `rate`.
    pub fn noisy(mut f: impl FnMut(&Bits) -> u128 + 'a, rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AvgSolver {
            answer: Box::new(move |x| {
                let v = f(x);
                if rng.gen_bool(rate) {
                    v + rng.gen_range(1..=1u128 << 20)
                } else {
                    v
                }
            }),
            error_rate: rate,
            calls: 0,
        }
    }

    pub fn call(&mut self, x: &Bits) -> u128 {
        self.calls += 1;
        (self.answer)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Lift bit-length; `None` picks ⌈lg p⌉ per prime.
    pub t: Option<u32>,
    /// Curve points per correction; `None` picks 4d + 3.
    pub m: Option<usize>,
    /// Amplification repetitions; `None` picks ⌈lg³ max(n, 16)⌉ capped at 201.
    pub reps: Option<usize>,
    pub slice_budget: u128,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { t: None, m: None, reps: None, slice_budget: DEFAULT_SLICE_BUDGET }
    }
}

pub fn default_reps(n: usize) -> usize {
    let lg = (n.max(16) as f64).log2();
    (lg * lg * lg).ceil().min(201.0) as usize
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub primes: Vec<u64>,
    pub residues: Vec<u64>,
    pub avg_calls: u64,
    /// s · reps · m · t^d summed over primes.
    pub call_bound: u128,
}

/// Evaluates `f` at `x` using only zero-one queries to `a`.
///
/// `x` is lifted coordinatewise, split into t^d bit slices, each slice is
/// answered by `a` and the weighted answers are recombined mod p.
pub fn eval_via_avg<R: RngCore + ?Sized>(
    x: &[u64],
    f: &PartitePolynomial,
    a: &mut AvgSolver,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<u64> {
    let p = f.p;
    if x.len() != f.n_vars {
        return Err(Error::ArityMismatch { expected: f.n_vars, got: x.len() });
    }
    let t = cfg.t as usize;
    let d = f.d;
    let q = slice_count(cfg.t, d);
    if q > DEFAULT_SLICE_BUDGET {
        return Err(Error::SliceBudgetExceeded { queries: q, budget: DEFAULT_SLICE_BUDGET });
    }
    // masks[l][r]: variables of partition l whose lifted value has bit r.
    let words = f.n_vars.div_ceil(64);
    let mut masks = vec![vec![vec![0u64; words]; t]; d];
    for (v, &xv) in x.iter().enumerate() {
        let y = lift(FieldElem { value: xv % p, p }, cfg, rng)?;
        let l = f.partition[v];
        for (r, m) in masks[l].iter_mut().enumerate() {
            if y >> r & 1 == 1 {
                m[v / 64] |= 1 << (v % 64);
            }
        }
    }
    if d == 0 {
        return Ok((a.call(&Bits::zeros(f.n_vars)) % p as u128) as u64);
    }
    // prefix[l] holds the union of the chosen masks of partitions 0..=l.
    let mut idx = vec![0usize; d];
    let mut prefix = vec![vec![0u64; words]; d];
    let mut rebuild_from = 0;
    let mut acc = 0u64;
    let mut query = Bits::zeros(f.n_vars);
    let pow2: Vec<u64> = (0..=(t * d) as u64).map(|e| pow_mod(2, e, p)).collect();
    loop {
        for l in rebuild_from..d {
            for w in 0..words {
                let below = if l == 0 { 0 } else { prefix[l - 1][w] };
                prefix[l][w] = below | masks[l][idx[l]][w];
            }
        }
        query.words.copy_from_slice(&prefix[d - 1]);
        let raw = a.call(&query);
        let ans = if raw >> 64 == 0 { raw as u64 % p } else { (raw % p as u128) as u64 };
        let exp: usize = idx.iter().sum();
        acc = add_mod(acc, mul_mod(ans, pow2[exp], p), p);
        let mut pos = d;
        loop {
            if pos == 0 {
                return Ok(acc);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < t {
                break;
            }
            idx[pos] = 0;
        }
        rebuild_from = pos;
    }
}

/// Runs the whole pipeline on a worst-case zero-one input.
pub fn solve_worst_case<R: RngCore + ?Sized>(
    input: &Bits,
    gpp: &GoodPolyProblem,
    a: &mut AvgSolver,
    cfg: &PipelineConfig,
    rng: &mut R,
) -> Result<(BigUint, SolveStats)> {
    if input.len != gpp.n {
        return Err(Error::ArityMismatch { expected: gpp.n, got: input.len });
    }
    let d = gpp.d;
    let basis = select_primes_from(gpp.n.max(2) as u64, gpp.c, 12 * d as u64 + 1)?;
    let reps = cfg.reps.unwrap_or_else(|| default_reps(gpp.n));
    let m = cfg.m.unwrap_or(4 * d + 3);
    let x: Vec<u64> = input.iter().map(u64::from).collect();
    let calls_before = a.calls;
    let mut stats = SolveStats::default();
    let mut residues = Vec::new();
    for &p in &basis.primes {
        let f = (gpp.poly_builder)(p)?;
        if let Err(v) = verify_partite(&f) {
            return Err(Error::InvalidParameters(format!("polynomial is not strongly partite: {v:?}")));
        }
        if f.d != d {
            return Err(Error::InvalidParameters(format!("degree {} differs from declared {d}", f.d)));
        }
        let t = cfg.t.unwrap_or_else(|| ceil_lg(p));
        let q = slice_count(t, d);
        if q > cfg.slice_budget {
            return Err(Error::SliceBudgetExceeded { queries: q, budget: cfg.slice_budget });
        }
        let scfg = SamplerConfig::new(p, gpp.mu, gpp.n.max(2) as u64, t)?;
        let params = CorrectionParams::with_m(d, p, m)?;
        let mut oracle = |pt: &[u64], r: &mut R| eval_via_avg(pt, &f, a, &scfg, r);
        let v = amplify(|r: &mut R| correct(&x, &mut oracle, &params, r), reps, rng)?;
        residues.push(FieldElem { value: v, p });
        stats.call_bound += reps as u128 * m as u128 * q;
    }
    stats.primes = basis.primes.clone();
    stats.residues = residues.iter().map(|r| r.value).collect();
    stats.avg_calls = a.calls - calls_before;
    Ok((crt_reconstruct(&residues)?, stats))
}

/// Smallest c with `max_output ≤ n^c`.
pub fn output_exponent(n: usize, max_output: &BigUint) -> u32 {
    let n = BigUint::from(n.max(2));
    let mut c = 1;
    while &n.pow(c) < max_output {
        c += 1;
    }
    c
}

/// The factored k-function problem on a fixed shape, with the f_ckfunc builder.
pub fn fkf_problem<'a>(shape: FkfShape, pred: &'a Predicate, mu: f64) -> Result<GoodPolyProblem<'a>> {
    let acc = pred.accepted_tuples(shape.b)?.len();
    let max = BigUint::from(shape.n).pow(shape.k as u32) * BigUint::from(acc).pow(shape.g as u32);
    let n = shape.n_vars();
    Ok(GoodPolyProblem {
        n,
        c: output_exponent(n, &max),
        exact_solver: Box::new(move |bits| count_fkf(&decode_fkf(shape, pred, bits)).expect("well-formed instance")),
        poly_builder: Box::new(move |p| build_f_ckfunc(shape, pred, p)),
        d: shape.k * shape.g,
        mu,
    })
}

/// Reads a zero-one input of the f_ckfunc layout back into an instance.
pub fn decode_fkf(shape: FkfShape, pred: &Predicate, bits: &Bits) -> FkfInstance {
    let FkfShape { k, n, g, b } = shape;
    let lists = (0..k)
        .map(|j| {
            (0..n)
                .map(|v| {
                    let groups = (0..g)
                        .map(|i| (0..1usize << b).filter(|&s| bits.get(shape.var(j, v, i, s))).map(BigUint::from).collect())
                        .collect();
                    crate::factored::FactoredVector::new(b, groups).expect("in-range strings")
                })
                .collect()
        })
        .collect();
    FkfInstance::new(lists, g, b, pred.clone()).expect("consistent shape")
}

/// Exact zero-one solver for a factored k-function shape.
pub fn packed_exact_solver(shape: FkfShape, pred: &Predicate) -> Result<impl FnMut(&Bits) -> u128> {
    let counter = PackedFkfCounter::new(shape, pred)?;
    Ok(move |x: &Bits| counter.count(x))
}

/// One worst-case instance through the pipeline, compared to brute force.
pub fn solve_fkf_instance<R: RngCore + ?Sized>(
    inst: &FkfInstance,
    a: &mut AvgSolver,
    cfg: &PipelineConfig,
    mu: f64,
    rng: &mut R,
) -> Result<(BigUint, SolveStats)> {
    let gpp = fkf_problem(FkfShape::of(inst), &inst.predicate, mu)?;
    solve_worst_case(&fkf_indicator(inst), &gpp, a, cfg, rng)
}

pub fn to_u64(b: &BigUint) -> Option<u64> {
    b.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factored::gen_fkf;

    #[test]
    fn eval_matches_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = gen_fkf(2, 2, 1, 2, 0.5, 3, Predicate::ov(2)).unwrap();
        let shape = FkfShape::of(&inst);
        let p = 29;
        let f = build_f_ckfunc(shape, &inst.predicate, p).unwrap();
        let mut a = AvgSolver::exact(packed_exact_solver(shape, &inst.predicate).unwrap());
        let cfg = SamplerConfig::new(p, 0.5, shape.n_vars() as u64, 5).unwrap();
        for _ in 0..30 {
            let x: Vec<u64> = (0..f.n_vars).map(|_| rng.gen_range(0..p)).collect();
            let want = f.evaluate_raw(&x);
            assert_eq!(eval_via_avg(&x, &f, &mut a, &cfg, &mut rng).unwrap(), want);
        }
        let zero = vec![0u64; f.n_vars];
        assert_eq!(eval_via_avg(&zero, &f, &mut a, &cfg, &mut rng).unwrap(), f.evaluate_raw(&zero));
    }

    #[test]
    fn single_wrong_slice_shifts_by_weight() {
        // f = x0 * x1 with t = 2: slice (1, 0) has weight 2.
        let p = 101;
        let f = PartitePolynomial::from_monomials(2, vec![0, 1], 2, p, vec![(vec![0, 1], 1)]);
        let cfg = SamplerConfig::new(p, 0.5, 16, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = 0;
        let mut a = AvgSolver::exact(|b: &Bits| {
            seen += 1;
            let v = (b.get(0) && b.get(1)) as u128;
            if seen == 8 {
                v + 1
            } else {
                v
            }
        });
        // Slice order is odometer order, so call 8 is slice (1, 0) with weight 2.
        let x = [3u64, 4];
        let got = eval_via_avg(&x, &f, &mut a, &cfg, &mut rng).unwrap();
        assert_eq!(got, (12 + 2) % p);
    }

    #[test]
    fn exact_pipeline_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..3 {
            let inst = gen_fkf(2, 2, 1, 2, 0.5, seed, Predicate::ov(2)).unwrap();
            let shape = FkfShape::of(&inst);
            let mut a = AvgSolver::exact(packed_exact_solver(shape, &inst.predicate).unwrap());
            let cfg = PipelineConfig { reps: Some(3), ..Default::default() };
            let (got, stats) = solve_fkf_instance(&inst, &mut a, &cfg, 0.5, &mut rng).unwrap();
            assert_eq!(got, count_fkf(&inst).unwrap());
            assert!(stats.avg_calls as u128 <= stats.call_bound);
        }
    }
}
