//! Average-case zero-k-clique: generation, brute force, the small-range
//! counter, the random splitter and the counting ← search ← detection chain.
//!
//! A clique is a `Vec<usize>` holding one node index per partition.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::factored::{canonical_pairs, pair_index};
use num_integer::Integer;

pub type Clique = Vec<usize>;

/// Complete k-partite graph with edge weights in [0, R); a clique is a
/// witness when its ℓ weights sum to 0 mod R.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZkcInstance {
    pub k: usize,
    pub n: usize,
    pub r: u64,
    /// `weights[q][a * n + c]` for pair q = (i, j), i < j, node a of i, c of j.
    pub weights: Vec<Vec<u64>>,
}

impl ZkcInstance {
    pub fn new(k: usize, n: usize, r: u64, weights: Vec<Vec<u64>>) -> Result<Self> {
        if k < 2 || r == 0 {
            return Err(Error::InvalidParameters(format!("need k >= 2 and R >= 1 (k={k}, R={r})")));
        }
        let ell = k * (k - 1) / 2;
        if weights.len() != ell || weights.iter().any(|w| w.len() != n * n) {
            return Err(Error::InvalidParameters("weight table shape does not match k and n".into()));
        }
        if weights.iter().flatten().any(|&w| w >= r) {
            return Err(Error::RangeViolation(format!("weight outside [0, {r})")));
        }
        Ok(ZkcInstance { k, n, r, weights })
    }

    pub fn ell(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    pub fn weight(&self, i: usize, a: usize, j: usize, c: usize) -> u64 {
        if i < j {
            self.weights[pair_index(self.k, i, j)][a * self.n + c]
        } else {
            self.weights[pair_index(self.k, j, i)][c * self.n + a]
        }
    }

    pub fn clique_weight(&self, nodes: &[usize]) -> u64 {
        let mut s = 0u128;
        for (i, j) in canonical_pairs(self.k) {
            s += self.weight(i, nodes[i], j, nodes[j]) as u128;
        }
        (s % self.r as u128) as u64
    }

    pub fn is_zero_clique(&self, nodes: &[usize]) -> bool {
        nodes.len() == self.k && nodes.iter().all(|&v| v < self.n) && self.clique_weight(nodes) == 0
    }

    /// The sub-instance induced by `nodes[i]` (global indices) in partition i.
    pub fn induced(&self, nodes: &[Vec<usize>]) -> ZkcInstance {
        let m = nodes[0].len();
        let mut weights = Vec::with_capacity(self.ell());
        for (i, j) in canonical_pairs(self.k) {
            let mut w = Vec::with_capacity(m * m);
            for &a in &nodes[i] {
                for &c in &nodes[j] {
                    w.push(self.weights[pair_index(self.k, i, j)][a * self.n + c]);
                }
            }
            weights.push(w);
        }
        ZkcInstance { k: self.k, n: m, r: self.r, weights }
    }
}

/// Every weight iid uniform in [0, R).
pub fn gen_aczkc(n: usize, k: usize, r: u64, seed: u64) -> Result<ZkcInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ell = k * k.saturating_sub(1) / 2;
    if r == 0 {
        return Err(Error::InvalidParameters("R must be positive".into()));
    }
    let weights = (0..ell).map(|_| (0..n * n).map(|_| rng.gen_range(0..r)).collect()).collect();
    ZkcInstance::new(k, n, r, weights)
}

/// Sets pair weights so that `clique` sums to zero, changing only the weight
/// of the last pair.
pub fn plant(inst: &mut ZkcInstance, clique: &[usize]) {
    let k = inst.k;
    let n = inst.n;
    let mut s = 0u128;
    let pairs = canonical_pairs(k);
    for &(i, j) in &pairs[..pairs.len() - 1] {
        s += inst.weight(i, clique[i], j, clique[j]) as u128;
    }
    let need = ((inst.r as u128 - s % inst.r as u128) % inst.r as u128) as u64;
    let (i, j) = pairs[pairs.len() - 1];
    inst.weights[pair_index(k, i, j)][clique[i] * n + clique[j]] = need;
}

fn next_tuple(idx: &mut [usize], n: usize) -> bool {
    for p in (0..idx.len()).rev() {
        idx[p] += 1;
        if idx[p] < n {
            return true;
        }
        idx[p] = 0;
    }
    false
}

/// Every zero clique, in lexicographic order.
pub fn brute_list(inst: &ZkcInstance) -> Vec<Clique> {
    let mut out = Vec::new();
    if inst.n == 0 {
        return out;
    }
    let mut idx = vec![0usize; inst.k];
    loop {
        if inst.clique_weight(&idx) == 0 {
            out.push(idx.clone());
        }
        if !next_tuple(&mut idx, inst.n) {
            return out;
        }
    }
}

pub fn brute_count(inst: &ZkcInstance) -> u64 {
    if inst.n == 0 {
        return 0;
    }
    let mut idx = vec![0usize; inst.k];
    let mut count = 0;
    loop {
        count += (inst.clique_weight(&idx) == 0) as u64;
        if !next_tuple(&mut idx, inst.n) {
            return count;
        }
    }
}

pub fn brute_search(inst: &ZkcInstance) -> Option<Clique> {
    if inst.n == 0 {
        return None;
    }
    let mut idx = vec![0usize; inst.k];
    loop {
        if inst.clique_weight(&idx) == 0 {
            return Some(idx);
        }
        if !next_tuple(&mut idx, inst.n) {
            return None;
        }
    }
}

/// Cap on super-nodes per group in `count_small_range`.
pub const SUPER_NODE_CAP: usize = 1 << 14;
/// Largest range `count_small_range` accepts; it loops over R² weight guesses.
pub const SMALL_RANGE_CAP: u64 = 1 << 12;

/// Counts zero cliques by grouping the partitions into three blocks, turning
/// each block's node tuples into super-nodes, and counting zero triangles by
/// guessing two of the three superedge weights. Each block's internal weight
/// rides on one superedge (A on AB, B on BC, C on CA) so a triangle's weight
/// equals the clique weight.
pub fn count_small_range(inst: &ZkcInstance) -> Result<u64> {
    let k = inst.k;
    if k < 3 {
        return Err(Error::InvalidParameters("count_small_range needs k >= 3".into()));
    }
    let (n, r) = (inst.n, inst.r as usize);
    if n == 0 {
        return Ok(0);
    }
    if inst.r > SMALL_RANGE_CAP {
        return Err(Error::InvalidParameters(format!("R={} too large for the small-range counter", inst.r)));
    }
    // Block sizes ⌈k/3⌉ then ⌊k/3⌋, summing to k.
    let sizes = {
        let base = k / 3;
        let extra = k % 3;
        [base + (extra > 0) as usize, base + (extra > 1) as usize, base]
    };
    let starts = [0, sizes[0], sizes[0] + sizes[1]];
    let blocks: Vec<Vec<usize>> = (0..3).map(|b| (starts[b]..starts[b] + sizes[b]).collect()).collect();
    let count_of = |s: usize| n.checked_pow(s as u32).filter(|&c| c <= SUPER_NODE_CAP);
    let mut supers: Vec<Vec<Vec<usize>>> = Vec::with_capacity(3);
    for b in &blocks {
        let total = count_of(b.len()).ok_or(Error::ExpansionCapExceeded { got: usize::MAX, cap: SUPER_NODE_CAP })?;
        let mut list = Vec::with_capacity(total);
        let mut idx = vec![0usize; b.len()];
        loop {
            list.push(idx.clone());
            if !next_tuple(&mut idx, n) {
                break;
            }
        }
        supers.push(list);
    }
    let internal = |b: usize, t: &[usize]| -> u64 {
        let mut s = 0u64;
        for x in 0..t.len() {
            for y in x + 1..t.len() {
                s = (s + inst.weight(blocks[b][x], t[x], blocks[b][y], t[y])) % inst.r;
            }
        }
        s
    };
    let cross = |b1: usize, t1: &[usize], b2: usize, t2: &[usize]| -> u64 {
        let mut s = 0u64;
        for (x, &p) in blocks[b1].iter().enumerate() {
            for (y, &q) in blocks[b2].iter().enumerate() {
                s = (s + inst.weight(p, t1[x], q, t2[y])) % inst.r;
            }
        }
        s
    };
    // Superedge weight tables for (A,B), (B,C), (C,A).
    let table = |b1: usize, b2: usize| -> Vec<Vec<usize>> {
        supers[b1]
            .iter()
            .map(|t1| {
                let own = internal(b1, t1);
                supers[b2].iter().map(|t2| ((own + cross(b1, t1, b2, t2)) % inst.r) as usize).collect()
            })
            .collect()
    };
    let ab = table(0, 1);
    let bc = table(1, 2);
    let ca = table(2, 0);
    let (na, nb, nc) = (supers[0].len(), supers[1].len(), supers[2].len());
    let wa = nb.div_ceil(64);
    // x[α][a]: bitset over b of AB edges of weight α; yt[β][c]: bitset over b of BC edges of weight β.
    let mut x = vec![vec![vec![0u64; wa]; na]; r];
    for a in 0..na {
        for b in 0..nb {
            x[ab[a][b]][a][b / 64] |= 1 << (b % 64);
        }
    }
    let mut yt = vec![vec![vec![0u64; wa]; nc]; r];
    for b in 0..nb {
        for c in 0..nc {
            yt[bc[b][c]][c][b / 64] |= 1 << (b % 64);
        }
    }
    let mut total = 0u64;
    for alpha in 0..r {
        for beta in 0..r {
            let gamma = (2 * r - alpha - beta) % r;
            // trace(X_α · Y_β · Z_γ) with the product entries formed by bitset dot products.
            for c in 0..nc {
                let ycol = &yt[beta][c];
                for a in 0..na {
                    if ca[c][a] != gamma {
                        continue;
                    }
                    let xrow = &x[alpha][a];
                    total += xrow.iter().zip(ycol).map(|(p, q)| (p & q).count_ones() as u64).sum::<u64>();
                }
            }
        }
    }
    Ok(total)
}

/// Splits each partition at random into n/x blocks of x nodes and returns the
/// (n/x)^k induced sub-instances with, for each, the global node indices.
pub fn split(inst: &ZkcInstance, x: usize, seed: u64) -> Result<Vec<(ZkcInstance, Vec<Vec<usize>>)>> {
    let n = inst.n;
    if x == 0 || !n.is_multiple_of(x) {
        return Err(Error::InvalidParameters(format!("block size {x} must divide n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = n / x;
    let perms: Vec<Vec<usize>> = (0..inst.k)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; inst.k];
    loop {
        let nodes: Vec<Vec<usize>> = (0..inst.k).map(|i| perms[i][idx[i] * x..(idx[i] + 1) * x].to_vec()).collect();
        out.push((inst.induced(&nodes), nodes));
        if !next_tuple(&mut idx, blocks) {
            return Ok(out);
        }
    }
}

/// Divisor of n closest to `target` (ties go to the smaller one).
pub fn closest_divisor(n: usize, target: f64) -> usize {
    (1..=n.max(1))
        .filter(|d| n.is_multiple_of(*d))
        .min_by(|a, b| {
            let da = (*a as f64 - target).abs();
            let db = (*b as f64 - target).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(b))
        })
        .unwrap_or(1)
}

/// Search from detection: split into blocks of about n^{1−ε} nodes, ask the
/// detector about each sub-instance and brute-force the first positive one
/// that actually holds a witness.
pub fn search_via_detection<R: RngCore + ?Sized>(
    inst: &ZkcInstance,
    detector: &mut dyn FnMut(&ZkcInstance) -> bool,
    epsilon: f64,
    rng: &mut R,
) -> Result<Option<Clique>> {
    if inst.n == 0 {
        return Ok(None);
    }
    let x = closest_divisor(inst.n, (inst.n as f64).powf(1.0 - epsilon));
    for (sub, nodes) in split(inst, x, rng.next_u64())? {
        if detector(&sub) {
            if let Some(c) = brute_search(&sub) {
                return Ok(Some((0..inst.k).map(|i| nodes[i][c[i]]).collect()));
            }
        }
    }
    Ok(None)
}

/// Tuning for listing and counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZkcConfig {
    /// Ranges at or below this go to `count_small_range`.
    pub small_range: u64,
    /// Split exponent for search from detection.
    pub epsilon: f64,
    /// Subsampling keeps n/x nodes per partition.
    pub subsample_divisor: usize,
    /// Assumed bound on the number of witnesses when sizing the rounds.
    pub witness_bound: usize,
    /// Per-witness miss probability the round count is sized for.
    pub miss_probability: f64,
    /// Explicit round count, overriding the sizing rule.
    pub rounds: Option<usize>,
}

impl Default for ZkcConfig {
    fn default() -> Self {
        ZkcConfig { small_range: 8, epsilon: 0.5, subsample_divisor: 2, witness_bound: 8, miss_probability: 1e-6, rounds: None }
    }
}

impl ZkcConfig {
    /// ⌈ln(1/δ) / (x^{-k}(1 − x^{-k})^s)⌉ rounds.
    pub fn list_rounds(&self, k: usize) -> usize {
        if let Some(r) = self.rounds {
            return r;
        }
        let hit = (self.subsample_divisor as f64).powi(-(k as i32));
        let per_round = hit * (1.0 - hit).powi(self.witness_bound as i32);
        ((1.0 / self.miss_probability).ln() / per_round).ceil().max(1.0) as usize
    }
}

/// Every zero clique meeting `hit` in at least one node, checked exhaustively.
fn cliques_touching(inst: &ZkcInstance, hit: &[usize], out: &mut BTreeSet<Clique>) {
    let k = inst.k;
    let mut idx = vec![0usize; k - 1];
    for fixed in 0..k {
        loop {
            let mut c = Vec::with_capacity(k);
            c.extend_from_slice(&idx[..fixed]);
            c.push(hit[fixed]);
            c.extend_from_slice(&idx[fixed..]);
            if inst.clique_weight(&c) == 0 {
                out.insert(c);
            }
            if !next_tuple(&mut idx, inst.n) {
                break;
            }
        }
    }
}

/// Lists zero cliques by repeatedly searching random node subsets and
/// sweeping the neighbourhood of each hit. Every listed clique is verified.
pub fn list_all_via_search<R: RngCore + ?Sized>(
    inst: &ZkcInstance,
    searcher: &mut dyn FnMut(&ZkcInstance, &mut dyn RngCore) -> Result<Option<Clique>>,
    cfg: &ZkcConfig,
    rng: &mut R,
) -> Result<BTreeSet<Clique>> {
    let mut found = BTreeSet::new();
    let n = inst.n;
    if n == 0 {
        return Ok(found);
    }
    let keep = (n / cfg.subsample_divisor.max(1)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    for _ in 0..cfg.list_rounds(inst.k) {
        let nodes: Vec<Vec<usize>> = (0..inst.k)
            .map(|_| {
                let mut s = rand::seq::index::sample(&mut rng, n, keep).into_vec();
                s.sort_unstable();
                s
            })
            .collect();
        let sub = inst.induced(&nodes);
        if let Some(c) = searcher(&sub, &mut rng)? {
            let global: Clique = (0..inst.k).map(|i| nodes[i][c[i]]).collect();
            if inst.is_zero_clique(&global) {
                cliques_touching(inst, &global, &mut found);
            }
        }
    }
    Ok(found)
}

/// Range reduction by a scaled multiplicative hash h(w) = ⌊(a·w mod R)·T/R⌋
/// with a random unit a. For a true witness the hashed weights sum to
/// −δ (mod T) for a unique δ in [0, ℓ), so the returned ℓ instances (pair 0
/// shifted by +δ) together keep every witness. Candidates must be re-checked
/// with `ZkcInstance::is_zero_clique` on the original.
pub fn reduce_range(inst: &ZkcInstance, target: u64, seed: u64) -> Result<Vec<ZkcInstance>> {
    if target == 0 {
        return Err(Error::InvalidParameters("target range must be positive".into()));
    }
    if target >= inst.r {
        return Ok(vec![inst.clone()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = inst.r;
    let a = loop {
        let a = rng.gen_range(1..r.max(2));
        if a.gcd(&r) == 1 {
            break a;
        }
    };
    let h = |w: u64| ((((a as u128 * w as u128) % r as u128) * target as u128) / r as u128) as u64;
    let hashed: Vec<Vec<u64>> = inst.weights.iter().map(|ws| ws.iter().map(|&w| h(w)).collect()).collect();
    let mut out = Vec::with_capacity(inst.ell());
    for delta in 0..inst.ell() as u64 {
        let mut w = hashed.clone();
        for x in &mut w[0] {
            *x = (*x + delta) % target;
        }
        out.push(ZkcInstance::new(inst.k, inst.n, target, w)?);
    }
    Ok(out)
}

/// Counting from detection. Small ranges go to `count_small_range`; ranges
/// above n^k are hashed down to n^k and listed; otherwise the instance is
/// split into blocks of x ≈ R^{1/k} nodes and each block is listed. Listing
/// uses search from detection. Exact whenever every detector call is right.
pub fn count_via_detection<R: RngCore + ?Sized>(
    inst: &ZkcInstance,
    detector: &mut dyn FnMut(&ZkcInstance) -> bool,
    cfg: &ZkcConfig,
    rng: &mut R,
) -> Result<u64> {
    let (n, k, r) = (inst.n, inst.k, inst.r);
    if n == 0 {
        return Ok(0);
    }
    if r <= cfg.small_range && k >= 3 {
        return count_small_range(inst);
    }
    let eps = cfg.epsilon;
    let mut searcher = |sub: &ZkcInstance, rng: &mut dyn RngCore| search_via_detection(sub, detector, eps, rng);
    let nk = (n as u128).pow(k as u32);
    if r as u128 > nk {
        let mut found = BTreeSet::new();
        for shifted in reduce_range(inst, nk as u64, rng.next_u64())? {
            for c in list_all_via_search(&shifted, &mut searcher, cfg, rng)? {
                if inst.is_zero_clique(&c) {
                    found.insert(c);
                }
            }
        }
        return Ok(found.len() as u64);
    }
    let root = (r as f64).powf(1.0 / k as f64);
    let x = (1..=n).filter(|d| n % d == 0 && *d as f64 <= root + 1e-9).max().unwrap_or(1);
    let mut total = 0u64;
    for (sub, _) in split(inst, x, rng.next_u64())? {
        total += list_all_via_search(&sub, &mut searcher, cfg, rng)?.len() as u64;
    }
    Ok(total)
}

/// A detector that answers exactly.
pub fn exact_detector() -> impl FnMut(&ZkcInstance) -> bool {
    |inst: &ZkcInstance| brute_search(inst).is_some()
}

/// An exact detector whose answer is flipped with probability p.
pub fn noisy_detector(p: f64, seed: u64) -> impl FnMut(&ZkcInstance) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |inst: &ZkcInstance| brute_search(inst).is_some() ^ rng.gen_bool(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_triangles() {
        let inst = ZkcInstance::new(3, 2, 5, vec![vec![0; 4]; 3]).unwrap();
        assert_eq!(brute_count(&inst), 8);
        assert_eq!(count_small_range(&inst).unwrap(), 8);
    }

    #[test]
    fn closest_divisor_picks_nearest() {
        assert_eq!(closest_divisor(12, 12f64.sqrt()), 3);
        assert_eq!(closest_divisor(6, 6f64.sqrt()), 2);
        assert_eq!(closest_divisor(7, 2.6), 1);
    }

    #[test]
    fn reduce_range_identity_when_target_large() {
        let inst = gen_aczkc(3, 3, 10, 1).unwrap();
        assert_eq!(reduce_range(&inst, 10, 2).unwrap(), vec![inst]);
    }
}
