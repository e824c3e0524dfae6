//! Factored vectors, the per-group and product counting operators, brute-force
//! solvers, random generators and good-polynomial builders.

use crate::dpoly::PartitePolynomial;
use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Widest string representable by the random generators and polynomial builders.
pub const MAX_GEN_B: usize = 20;
/// Default ceiling on monomials in a built polynomial.
pub const DEFAULT_MONOMIAL_CAP: u128 = 20_000_000;

/// g groups, each a sorted set of b-bit strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactoredVector {
    pub g: usize,
    pub b: usize,
    pub groups: Vec<Vec<BigUint>>,
}

impl FactoredVector {
    /// Sorts and deduplicates every group; rejects strings wider than b.
    pub fn new(b: usize, groups: Vec<Vec<BigUint>>) -> Result<Self> {
        let mut groups = groups;
        for gr in &mut groups {
            gr.sort();
            gr.dedup();
            if let Some(s) = gr.iter().find(|s| s.bits() as usize > b) {
                return Err(Error::WidthMismatch(format!("string {s} wider than b={b}")));
            }
        }
        Ok(FactoredVector { g: groups.len(), b, groups })
    }

    pub fn from_u64(b: usize, groups: &[&[u64]]) -> Result<Self> {
        Self::new(b, groups.iter().map(|g| g.iter().map(|&s| BigUint::from(s)).collect()).collect())
    }

    /// Parses groups written as bit-strings, leftmost character highest.
    pub fn from_strs(b: usize, groups: &[&[&str]]) -> Result<Self> {
        let mut out = Vec::new();
        for gr in groups {
            let mut set = Vec::new();
            for s in *gr {
                set.push(parse_bitstring(s, b)?);
            }
            out.push(set);
        }
        Self::new(b, out)
    }

    pub fn contains(&self, group: usize, s: &BigUint) -> bool {
        self.groups[group].binary_search(s).is_ok()
    }
}

pub fn parse_bitstring(s: &str, b: usize) -> Result<BigUint> {
    if s.len() != b || !s.bytes().all(|c| c == b'0' || c == b'1') {
        return Err(Error::WidthMismatch(format!("'{s}' is not a {b}-bit string")));
    }
    if b == 0 {
        return Ok(BigUint::zero());
    }
    Ok(BigUint::parse_bytes(s.as_bytes(), 2).unwrap())
}

pub fn format_bitstring(v: &BigUint, b: usize) -> String {
    let raw = if v.is_zero() { String::new() } else { v.to_str_radix(2) };
    format!("{}{}", "0".repeat(b.saturating_sub(raw.len())), raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredKind {
    /// Bitwise AND of all strings is zero.
    Ov,
    /// XOR of all strings is zero.
    Xor,
    /// Sum of all strings is 0 mod 2^b.
    SumZero,
    /// The first ℓ−1 strings sum exactly to the last.
    SumTarget,
    /// Membership in an explicit accepted-tuple set.
    Table,
}

impl PredKind {
    pub fn name(self) -> &'static str {
        match self {
            PredKind::Ov => "OV",
            PredKind::Xor => "XOR",
            PredKind::SumZero => "SUM_ZERO",
            PredKind::SumTarget => "SUM_TARGET",
            PredKind::Table => "TABLE",
        }
    }
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "OV" => PredKind::Ov,
            "XOR" => PredKind::Xor,
            "SUM_ZERO" | "SUM" => PredKind::SumZero,
            "SUM_TARGET" => PredKind::SumTarget,
            "TABLE" => PredKind::Table,
            other => return Err(Error::Parse(format!("unknown predicate '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    pub kind: PredKind,
    pub arity: usize,
    pub table: BTreeSet<Vec<BigUint>>,
}

impl Predicate {
    pub fn new(kind: PredKind, arity: usize) -> Self {
        Predicate { kind, arity, table: BTreeSet::new() }
    }
    pub fn ov(arity: usize) -> Self {
        Self::new(PredKind::Ov, arity)
    }
    pub fn xor(arity: usize) -> Self {
        Self::new(PredKind::Xor, arity)
    }
    pub fn sum_zero(arity: usize) -> Self {
        Self::new(PredKind::SumZero, arity)
    }
    pub fn sum_target(arity: usize) -> Self {
        Self::new(PredKind::SumTarget, arity)
    }
    pub fn table(arity: usize, b: usize, tuples: BTreeSet<Vec<BigUint>>) -> Result<Self> {
        for t in &tuples {
            if t.len() != arity {
                return Err(Error::ArityMismatch { expected: arity, got: t.len() });
            }
            if t.iter().any(|s| s.bits() as usize > b) {
                return Err(Error::WidthMismatch(format!("table entry wider than b={b}")));
            }
        }
        Ok(Predicate { kind: PredKind::Table, arity, table: tuples })
    }

    /// Evaluates the predicate on one tuple of b-bit strings.
    pub fn eval(&self, tuple: &[&BigUint], b: usize) -> bool {
        match self.kind {
            PredKind::Ov => {
                let mut acc = (BigUint::one() << b) - 1u32;
                for s in tuple {
                    acc &= *s;
                }
                acc.is_zero()
            }
            PredKind::Xor => {
                let mut acc = BigUint::zero();
                for s in tuple {
                    acc ^= *s;
                }
                acc.is_zero()
            }
            PredKind::SumZero => {
                let acc: BigUint = tuple.iter().copied().sum();
                (acc % (BigUint::one() << b)).is_zero()
            }
            PredKind::SumTarget => match tuple.split_last() {
                Some((last, rest)) => rest.iter().copied().sum::<BigUint>() == **last,
                None => true,
            },
            PredKind::Table => self.table.contains(&tuple.iter().map(|s| (*s).clone()).collect::<Vec<_>>()),
        }
    }

    /// Evaluates on small strings.
    pub fn eval_u64(&self, tuple: &[u64], b: usize) -> bool {
        debug_assert!(b < 64);
        let mask = (1u64 << b) - 1;
        match self.kind {
            PredKind::Ov => tuple.iter().fold(mask, |a, &s| a & s) == 0,
            PredKind::Xor => tuple.iter().fold(0, |a, &s| a ^ s) == 0,
            PredKind::SumZero => tuple.iter().fold(0u64, |a, &s| a.wrapping_add(s)) & mask == 0,
            PredKind::SumTarget => match tuple.split_last() {
                Some((last, rest)) => rest.iter().map(|&s| s as u128).sum::<u128>() == *last as u128,
                None => true,
            },
            PredKind::Table => self.table.contains(&tuple.iter().map(|&s| BigUint::from(s)).collect::<Vec<_>>()),
        }
    }

    /// Every accepted tuple over {0,1}^b, each as a list of small strings.
    pub fn accepted_tuples(&self, b: usize) -> Result<Vec<Vec<u64>>> {
        if b > MAX_GEN_B {
            return Err(Error::WidthMismatch(format!("b={b} too wide for enumeration")));
        }
        if self.kind == PredKind::Table {
            return Ok(self.table.iter().map(|t| t.iter().map(|s| s.to_u64().unwrap()).collect()).collect());
        }
        let total = 1u128 << (b * self.arity);
        if total > 1 << 26 {
            return Err(Error::ExpansionCapExceeded { got: usize::MAX, cap: 1 << 26 });
        }
        let mask = (1u64 << b) - 1;
        let mut out = Vec::new();
        let mut tuple = vec![0u64; self.arity];
        for code in 0..total as u64 {
            for (j, slot) in tuple.iter_mut().enumerate() {
                *slot = (code >> (b * (self.arity - 1 - j))) & mask;
            }
            if self.eval_u64(&tuple, b) {
                out.push(tuple.clone());
            }
        }
        Ok(out)
    }
}

/// Number of accepted tuples with the i-th string drawn from `sets[i]`.
pub fn circ(sets: &[&[BigUint]], pred: &Predicate, b: usize) -> Result<u128> {
    if sets.len() != pred.arity {
        return Err(Error::ArityMismatch { expected: pred.arity, got: sets.len() });
    }
    for s in sets.iter().flat_map(|s| s.iter()) {
        if s.bits() as usize > b {
            return Err(Error::WidthMismatch(format!("string {s} wider than b={b}")));
        }
    }
    if sets.iter().any(|s| s.is_empty()) {
        return Ok(0);
    }
    if sets.is_empty() {
        return Ok(if pred.eval(&[], b) { 1 } else { 0 });
    }
    if b < 64 {
        let small: Vec<Vec<u64>> = sets.iter().map(|s| s.iter().map(|v| v.to_u64().unwrap()).collect()).collect();
        return Ok(circ_small(&small, pred, b));
    }
    Ok(circ_wide(sets, pred, b))
}

/// Counting over u64 strings; sets must be sorted.
pub fn circ_small(sets: &[Vec<u64>], pred: &Predicate, b: usize) -> u128 {
    let l = sets.len();
    if sets.iter().any(|s| s.is_empty()) {
        return 0;
    }
    let mask = if b == 64 { u64::MAX } else { (1u64 << b) - 1 };
    let last = &sets[l - 1];
    let mut count = 0u128;
    let mut idx = vec![0usize; l - 1];
    let mut tuple = vec![0u64; l];
    loop {
        for j in 0..l - 1 {
            tuple[j] = sets[j][idx[j]];
        }
        count += match pred.kind {
            PredKind::Xor => {
                let need = tuple[..l - 1].iter().fold(0, |a, &s| a ^ s);
                last.binary_search(&need).is_ok() as u128
            }
            PredKind::SumZero => {
                let acc = tuple[..l - 1].iter().fold(0u64, |a, &s| a.wrapping_add(s)) & mask;
                let need = acc.wrapping_neg() & mask;
                last.binary_search(&need).is_ok() as u128
            }
            PredKind::SumTarget => {
                let acc: u128 = tuple[..l - 1].iter().map(|&s| s as u128).sum();
                (acc <= u64::MAX as u128 && last.binary_search(&(acc as u64)).is_ok()) as u128
            }
            PredKind::Ov => {
                let acc = tuple[..l - 1].iter().fold(mask, |a, &s| a & s);
                last.iter().filter(|&&s| s & acc == 0).count() as u128
            }
            PredKind::Table => last
                .iter()
                .filter(|&&s| {
                    tuple[l - 1] = s;
                    pred.eval_u64(&tuple, b)
                })
                .count() as u128,
        };
        // Advance the odometer over the first l-1 sets.
        let mut j = l - 1;
        loop {
            if j == 0 {
                return count;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < sets[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

fn circ_wide(sets: &[&[BigUint]], pred: &Predicate, b: usize) -> u128 {
    let l = sets.len();
    let last = sets[l - 1];
    let modulus = BigUint::one() << b;
    let full = &modulus - 1u32;
    let mut count = 0u128;
    let mut idx = vec![0usize; l - 1];
    loop {
        let head: Vec<&BigUint> = (0..l - 1).map(|j| &sets[j][idx[j]]).collect();
        count += match pred.kind {
            PredKind::Xor => {
                let mut acc = BigUint::zero();
                for s in &head {
                    acc ^= *s;
                }
                last.binary_search(&acc).is_ok() as u128
            }
            PredKind::SumZero => {
                let acc: BigUint = head.iter().copied().sum::<BigUint>() % &modulus;
                let need = (&modulus - acc) % &modulus;
                last.binary_search(&need).is_ok() as u128
            }
            PredKind::SumTarget => {
                let acc: BigUint = head.iter().copied().sum();
                last.binary_search(&acc).is_ok() as u128
            }
            PredKind::Ov => {
                let mut acc = full.clone();
                for s in &head {
                    acc &= *s;
                }
                last.iter().filter(|s| (*s & &acc).is_zero()).count() as u128
            }
            PredKind::Table => last
                .iter()
                .filter(|s| {
                    let mut t = head.clone();
                    t.push(s);
                    pred.eval(&t, b)
                })
                .count() as u128,
        };
        let mut j = l - 1;
        loop {
            if j == 0 {
                return count;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < sets[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Product over groups of the per-group accepted-tuple counts.
pub fn circledcirc(vs: &[&FactoredVector], pred: &Predicate) -> Result<BigUint> {
    if vs.len() != pred.arity {
        return Err(Error::ArityMismatch { expected: pred.arity, got: vs.len() });
    }
    let Some(first) = vs.first() else { return Ok(BigUint::one()) };
    let (g, b) = (first.g, first.b);
    if vs.iter().any(|v| v.g != g || v.b != b) {
        return Err(Error::WidthMismatch("factored vectors disagree on (g, b)".into()));
    }
    let mut prod = BigUint::one();
    for i in 0..g {
        let sets: Vec<&[BigUint]> = vs.iter().map(|v| v.groups[i].as_slice()).collect();
        let c = circ(&sets, pred, b)?;
        if c == 0 {
            return Ok(BigUint::zero());
        }
        prod *= c;
    }
    Ok(prod)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FkfInstance {
    pub k: usize,
    pub n: usize,
    pub g: usize,
    pub b: usize,
    pub lists: Vec<Vec<FactoredVector>>,
    pub predicate: Predicate,
}

impl FkfInstance {
    pub fn new(lists: Vec<Vec<FactoredVector>>, g: usize, b: usize, predicate: Predicate) -> Result<Self> {
        let k = lists.len();
        if predicate.arity != k {
            return Err(Error::ArityMismatch { expected: k, got: predicate.arity });
        }
        let n = lists.first().map_or(0, |l| l.len());
        if lists.iter().any(|l| l.len() != n) {
            return Err(Error::InvalidParameters("lists must have equal length".into()));
        }
        if lists.iter().flatten().any(|v| v.g != g || v.b != b) {
            return Err(Error::WidthMismatch(format!("every vector must have g={g}, b={b}")));
        }
        Ok(FkfInstance { k, n, g, b, lists, predicate })
    }
}

/// Σ over all k-tuples (one vector per list) of ⊛.
pub fn count_fkf(inst: &FkfInstance) -> Result<BigUint> {
    let k = inst.k;
    if k == 0 {
        return Ok(BigUint::one());
    }
    if inst.lists.iter().any(|l| l.is_empty()) {
        return Ok(BigUint::zero());
    }
    let mut total = BigUint::zero();
    let mut idx = vec![0usize; k];
    loop {
        let tuple: Vec<&FactoredVector> = (0..k).map(|j| &inst.lists[j][idx[j]]).collect();
        total += circledcirc(&tuple, &inst.predicate)?;
        let mut j = k;
        loop {
            if j == 0 {
                return Ok(total);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < inst.lists[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

pub fn detect_fkf(inst: &FkfInstance) -> Result<bool> {
    Ok(!count_fkf(inst)?.is_zero())
}

/// Index of the unordered partition pair (i, j), i < j, in lexicographic order.
pub fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

/// All partition pairs in canonical order.
pub fn canonical_pairs(k: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            v.push((i, j));
        }
    }
    v
}

/// A k-partite graph, n nodes per partition, edges labeled by factored vectors.
///
/// `edges[q][a * n + c]` is the label of the edge between node a of the first
/// partition of pair q and node c of the second, if present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FfkcInstance {
    pub k: usize,
    pub n: usize,
    pub g: usize,
    pub b: usize,
    pub edges: Vec<Vec<Option<FactoredVector>>>,
    pub predicate: Predicate,
}

impl FfkcInstance {
    pub fn empty(k: usize, n: usize, g: usize, b: usize, predicate: Predicate) -> Result<Self> {
        let l = k * k.saturating_sub(1) / 2;
        if predicate.arity != l {
            return Err(Error::ArityMismatch { expected: l, got: predicate.arity });
        }
        Ok(FfkcInstance { k, n, g, b, edges: vec![vec![None; n * n]; l], predicate })
    }

    pub fn ell(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    /// Label of the edge between (partition i, node a) and (partition j, node c).
    pub fn edge(&self, i: usize, a: usize, j: usize, c: usize) -> Option<&FactoredVector> {
        if i < j {
            self.edges[pair_index(self.k, i, j)][a * self.n + c].as_ref()
        } else {
            self.edges[pair_index(self.k, j, i)][c * self.n + a].as_ref()
        }
    }

    pub fn set_edge(&mut self, i: usize, a: usize, j: usize, c: usize, label: Option<FactoredVector>) -> Result<()> {
        if i == j {
            return Err(Error::InvalidParameters("edges must join distinct partitions".into()));
        }
        if let Some(l) = &label {
            if l.g != self.g || l.b != self.b {
                return Err(Error::WidthMismatch("edge label shape differs from instance".into()));
            }
        }
        let (i, a, j, c) = if i < j { (i, a, j, c) } else { (j, c, i, a) };
        self.edges[pair_index(self.k, i, j)][a * self.n + c] = label;
        Ok(())
    }

    /// Labels of a node tuple's ℓ edges in canonical order, or `None` if one is missing.
    pub fn clique_labels(&self, nodes: &[usize]) -> Option<Vec<&FactoredVector>> {
        let mut out = Vec::with_capacity(self.ell());
        for (i, j) in canonical_pairs(self.k) {
            out.push(self.edge(i, nodes[i], j, nodes[j])?);
        }
        Some(out)
    }
}

/// Σ over node k-tuples of isClique · ⊛ over the ℓ labels.
pub fn count_ffkc(inst: &FfkcInstance) -> Result<BigUint> {
    let k = inst.k;
    let mut total = BigUint::zero();
    if inst.n == 0 {
        return Ok(total);
    }
    let mut idx = vec![0usize; k];
    loop {
        if let Some(labels) = inst.clique_labels(&idx) {
            total += circledcirc(&labels, &inst.predicate)?;
        }
        let mut j = k;
        loop {
            if j == 0 {
                return Ok(total);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < inst.n {
                break;
            }
            idx[j] = 0;
        }
    }
}

pub fn detect_ffkc(inst: &FfkcInstance) -> Result<bool> {
    Ok(!count_ffkc(inst)?.is_zero())
}

fn check_gen(mu: f64, b: usize) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidBias(mu));
    }
    if b > MAX_GEN_B {
        return Err(Error::WidthMismatch(format!("b={b} exceeds {MAX_GEN_B}")));
    }
    Ok(())
}

/// A vector whose groups include each b-bit string independently with probability μ.
pub fn random_vector<R: Rng + ?Sized>(g: usize, b: usize, mu: f64, rng: &mut R) -> FactoredVector {
    let groups = (0..g).map(|_| (0..1u64 << b).filter(|_| rng.gen_bool(mu)).map(BigUint::from).collect()).collect();
    FactoredVector { g, b, groups }
}

pub fn gen_fkf(n: usize, k: usize, g: usize, b: usize, mu: f64, seed: u64, predicate: Predicate) -> Result<FkfInstance> {
    check_gen(mu, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lists = (0..k).map(|_| (0..n).map(|_| random_vector(g, b, mu, &mut rng)).collect()).collect();
    FkfInstance::new(lists, g, b, predicate)
}

/// Complete k-partite graph with random labels.
pub fn gen_ffkc(n: usize, k: usize, g: usize, b: usize, mu: f64, seed: u64, predicate: Predicate) -> Result<FfkcInstance> {
    check_gen(mu, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = FfkcInstance::empty(k, n, g, b, predicate)?;
    for q in 0..inst.ell() {
        for e in 0..n * n {
            inst.edges[q][e] = Some(random_vector(g, b, mu, &mut rng));
        }
    }
    Ok(inst)
}

/// Variable layout for the factored k-function polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FkfShape {
    pub k: usize,
    pub n: usize,
    pub g: usize,
    pub b: usize,
}

impl FkfShape {
    pub fn of(inst: &FkfInstance) -> Self {
        FkfShape { k: inst.k, n: inst.n, g: inst.g, b: inst.b }
    }
    pub fn n_vars(&self) -> usize {
        (self.k * self.n * self.g) << self.b
    }
    /// Variable for string s in group i of vector v of list j.
    pub fn var(&self, j: usize, v: usize, i: usize, s: usize) -> usize {
        (((j * self.n + v) * self.g + i) << self.b) + s
    }
    /// Partition of a variable: one per (list, group).
    pub fn partition_of(&self, var: usize) -> usize {
        let i = (var >> self.b) % self.g;
        let j = (var >> self.b) / self.g / self.n;
        j * self.g + i
    }
}

/// Zero-one indicator encoding: bit x_{j,v,i,s} is set iff s ∈ v[i].
pub fn fkf_indicator(inst: &FkfInstance) -> crate::bits::Bits {
    let sh = FkfShape::of(inst);
    let mut bits = crate::bits::Bits::zeros(sh.n_vars());
    for (j, list) in inst.lists.iter().enumerate() {
        for (v, fv) in list.iter().enumerate() {
            for (i, gr) in fv.groups.iter().enumerate() {
                for s in gr {
                    bits.set(sh.var(j, v, i, s.to_usize().unwrap()), true);
                }
            }
        }
    }
    bits
}

fn check_monomials(count: u128, n_vars: usize, d: usize, cap: u128) -> Result<()> {
    let structural = (n_vars as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    let lim = cap.min(structural);
    if count > lim {
        return Err(Error::MonomialCapExceeded { got: count, cap: lim });
    }
    Ok(())
}

/// f_ckfunc: Σ over vector tuples of Π over groups of Σ over accepted string tuples
/// of the product of indicator variables. Degree k·g.
pub fn build_f_ckfunc(shape: FkfShape, pred: &Predicate, p: u64) -> Result<PartitePolynomial> {
    build_f_ckfunc_capped(shape, pred, p, DEFAULT_MONOMIAL_CAP)
}

pub fn build_f_ckfunc_capped(shape: FkfShape, pred: &Predicate, p: u64, cap: u128) -> Result<PartitePolynomial> {
    let FkfShape { k, n, g, b } = shape;
    if pred.arity != k {
        return Err(Error::ArityMismatch { expected: k, got: pred.arity });
    }
    let acc = pred.accepted_tuples(b)?;
    let d = k * g;
    let n_vars = shape.n_vars();
    let count = (n as u128).pow(k as u32) * (acc.len() as u128).pow(g as u32);
    check_monomials(count, n_vars, d, cap)?;
    let partition: Vec<usize> = (0..n_vars).map(|v| shape.partition_of(v)).collect();
    let mut vars = Vec::with_capacity(count as usize * d);
    let mut vt = vec![0usize; k];
    let mut st = vec![0usize; g];
    if n == 0 || (acc.is_empty() && g > 0) {
        return Ok(PartitePolynomial::from_sorted_raw(n_vars, partition, d, p, vars, vec![]));
    }
    loop {
        loop {
            // Partition order is j*g + i, so emit list-major.
            for j in 0..k {
                for i in 0..g {
                    vars.push(shape.var(j, vt[j], i, acc[st[i]][j] as usize) as u32);
                }
            }
            if !odometer(&mut st, acc.len()) {
                break;
            }
        }
        if !odometer(&mut vt, n) {
            break;
        }
    }
    let m = vars.len() / d.max(1);
    Ok(PartitePolynomial::from_sorted_raw(n_vars, partition, d, p, vars, vec![1 % p; m]))
}

/// Advances a base-`radix` counter; false once it wraps to all zeros.
pub(crate) fn odometer(idx: &mut [usize], radix: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < radix {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Edge presence pattern of an FfkC graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FfkcShape {
    pub k: usize,
    pub n: usize,
    pub g: usize,
    pub b: usize,
    pub present: Vec<Vec<bool>>,
}

impl FfkcShape {
    pub fn of(inst: &FfkcInstance) -> Self {
        FfkcShape {
            k: inst.k,
            n: inst.n,
            g: inst.g,
            b: inst.b,
            present: inst.edges.iter().map(|row| row.iter().map(Option::is_some).collect()).collect(),
        }
    }
    pub fn ell(&self) -> usize {
        self.k * (self.k - 1) / 2
    }
    pub fn n_vars(&self) -> usize {
        (self.ell() * self.n * self.n * self.g) << self.b
    }
    /// Variable for string s of group i of the label on edge e of pair q.
    pub fn var(&self, q: usize, e: usize, i: usize, s: usize) -> usize {
        (((q * self.n * self.n + e) * self.g + i) << self.b) + s
    }
    pub fn partition_of(&self, var: usize) -> usize {
        let i = (var >> self.b) % self.g;
        let q = (var >> self.b) / self.g / (self.n * self.n);
        q * self.g + i
    }
}

pub fn ffkc_indicator(inst: &FfkcInstance) -> crate::bits::Bits {
    let sh = FfkcShape::of(inst);
    let mut bits = crate::bits::Bits::zeros(sh.n_vars());
    for (q, row) in inst.edges.iter().enumerate() {
        for (e, lab) in row.iter().enumerate() {
            if let Some(fv) = lab {
                for (i, gr) in fv.groups.iter().enumerate() {
                    for s in gr {
                        bits.set(sh.var(q, e, i, s.to_usize().unwrap()), true);
                    }
                }
            }
        }
    }
    bits
}

/// f_ffkc: Σ over node tuples forming a clique in the shape, of Π over groups
/// of Σ over accepted ℓ-tuples. Degree ℓ·g.
pub fn build_f_ffkc(shape: &FfkcShape, pred: &Predicate, p: u64) -> Result<PartitePolynomial> {
    let (k, n, g) = (shape.k, shape.n, shape.g);
    let l = shape.ell();
    if pred.arity != l {
        return Err(Error::ArityMismatch { expected: l, got: pred.arity });
    }
    let acc = pred.accepted_tuples(shape.b)?;
    let d = l * g;
    let n_vars = shape.n_vars();
    let pairs = canonical_pairs(k);
    let mut cliques = Vec::new();
    let mut nt = vec![0usize; k];
    if n > 0 {
        loop {
            let edges: Option<Vec<usize>> = pairs
                .iter()
                .enumerate()
                .map(|(q, &(i, j))| {
                    let e = nt[i] * n + nt[j];
                    shape.present[q][e].then_some(e)
                })
                .collect();
            if let Some(e) = edges {
                cliques.push(e);
            }
            if !odometer(&mut nt, n) {
                break;
            }
        }
    }
    let count = cliques.len() as u128 * (acc.len() as u128).pow(g as u32);
    check_monomials(count, n_vars, d, DEFAULT_MONOMIAL_CAP)?;
    let partition: Vec<usize> = (0..n_vars).map(|v| shape.partition_of(v)).collect();
    let mut vars = Vec::with_capacity(count as usize * d);
    if !(acc.is_empty() && g > 0) {
        for es in &cliques {
            let mut st = vec![0usize; g];
            loop {
                for (q, &e) in es.iter().enumerate() {
                    for i in 0..g {
                        vars.push(shape.var(q, e, i, acc[st[i]][q] as usize) as u32);
                    }
                }
                if !odometer(&mut st, acc.len()) {
                    break;
                }
            }
        }
    }
    let m = vars.len() / d.max(1);
    Ok(PartitePolynomial::from_sorted_raw(n_vars, partition, d, p, vars, vec![1 % p; m]))
}

/// Exact counter for zero-one inputs of the f_ckfunc layout, working on packed
/// group masks instead of expanded monomials. Needs 2^b ≤ 64.
#[derive(Debug, Clone)]
pub struct PackedFkfCounter {
    pub shape: FkfShape,
    accepted: Vec<Vec<u64>>,
    table: Option<Vec<u64>>,
    // k = 2 with g·2^b ≤ 8: product over groups keyed by both whole-vector codes.
    pair_table: Option<Vec<u32>>,
}

impl PackedFkfCounter {
    pub fn new(shape: FkfShape, pred: &Predicate) -> Result<Self> {
        if shape.b > 6 || shape.k > 16 {
            return Err(Error::WidthMismatch("packed counter needs b <= 6 and k <= 16".into()));
        }
        let accepted = pred.accepted_tuples(shape.b)?;
        let w = 1usize << shape.b;
        // A lookup on concatenated masks when it stays small.
        let table = if w * shape.k <= 16 {
            let mut t = vec![0u64; 1 << (w * shape.k)];
            for tup in &accepted {
                let key = tup.iter().fold(0usize, |a, &s| (a << w) | (1 << s));
                t[key] += 1;
            }
            // Superset sums: entry for masks M counts accepted tuples inside M.
            for bit in 0..w * shape.k {
                for m in 0..t.len() {
                    if m >> bit & 1 == 1 {
                        t[m] += t[m ^ (1 << bit)];
                    }
                }
            }
            Some(t)
        } else {
            None
        };
        let gw = shape.g * w;
        let pair_table = match &table {
            Some(t) if shape.k == 2 && gw <= 8 && 64 % gw == 0 && shape.g > 0 => {
                let mut pt = vec![0u32; 1 << (2 * gw)];
                let lm = (1usize << w) - 1;
                for (key, e) in pt.iter_mut().enumerate() {
                    let (a, c) = (key >> gw, key & ((1 << gw) - 1));
                    *e = (0..shape.g).map(|i| t[(a >> (i * w) & lm) << w | (c >> (i * w) & lm)] as u32).product();
                }
                Some(pt)
            }
            _ => None,
        };
        Ok(PackedFkfCounter { shape, accepted, table, pair_table })
    }

    /// Σ over vector tuples of Π over groups of accepted tuples inside the masks.
    pub fn count(&self, x: &crate::bits::Bits) -> u128 {
        let FkfShape { k, n, g, .. } = self.shape;
        let total = k * n * g;
        if total <= 256 {
            let mut buf = [0u64; 256];
            self.count_into(x, &mut buf[..total])
        } else {
            let mut buf = vec![0u64; total];
            self.count_into(x, &mut buf)
        }
    }

    fn count_into(&self, x: &crate::bits::Bits, masks: &mut [u64]) -> u128 {
        let FkfShape { k, n, g, b } = self.shape;
        if n == 0 {
            return 0;
        }
        let w = 1usize << b;
        if let Some(pt) = &self.pair_table {
            let gw = g * w;
            let lm = (1u64 << gw) - 1;
            let code = |v: usize| {
                let bit = v * gw;
                let lo = x.words[bit / 64] >> (bit % 64);
                (lo & lm) as usize
            };
            let mut c2 = [0usize; 256];
            let c2 = &mut c2[..n.min(256)];
            if n <= 256 {
                for (v2, c) in c2.iter_mut().enumerate() {
                    *c = code(n + v2);
                }
                let mut total = 0u64;
                for v1 in 0..n {
                    let a = code(v1);
                    if a == 0 {
                        continue;
                    }
                    let row = &pt[a << gw..(a + 1) << gw];
                    total += c2.iter().map(|&c| row[c] as u64).sum::<u64>();
                }
                return total as u128;
            }
        }
        // Chunk c = (j * n + v) * g + i; w divides 64 so chunks never straddle words.
        let lowmask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        for (c, m) in masks.iter_mut().enumerate() {
            let bit = c * w;
            *m = (x.words[bit / 64] >> (bit % 64)) & lowmask;
        }
        if let (Some(t), 2) = (&self.table, k) {
            let mut total = 0u128;
            for v1 in 0..n {
                let a = &masks[v1 * g..(v1 + 1) * g];
                for v2 in 0..n {
                    let c = &masks[(n + v2) * g..(n + v2 + 1) * g];
                    let mut prod = 1u64;
                    for i in 0..g {
                        prod *= t[(a[i] as usize) << w | c[i] as usize];
                        if prod == 0 {
                            break;
                        }
                    }
                    total += prod as u128;
                }
            }
            return total;
        }
        let mut total = 0u128;
        let mut vt = [0usize; 16];
        let vt = &mut vt[..k];
        loop {
            let mut prod = 1u128;
            for i in 0..g {
                let c = match &self.table {
                    Some(t) => t[vt.iter().enumerate().fold(0usize, |a, (j, &v)| (a << w) | masks[(j * n + v) * g + i] as usize)] as u128,
                    None => self
                        .accepted
                        .iter()
                        .filter(|tup| tup.iter().enumerate().all(|(j, &s)| masks[(j * n + vt[j]) * g + i] >> s & 1 == 1))
                        .count() as u128,
                };
                prod *= c;
                if prod == 0 {
                    break;
                }
            }
            total += prod;
            if !odometer(vt, n) {
                return total;
            }
        }
    }
}

/// The three vectors of the preliminaries' worked example (b = 3, g = 2).
pub fn worked_example() -> (FactoredVector, FactoredVector, FactoredVector) {
    let u = FactoredVector::from_strs(3, &[&["001", "010"], &["001", "010"]]).unwrap();
    let v = FactoredVector::from_strs(3, &[&["000", "010", "110"], &["110", "101"]]).unwrap();
    let w = FactoredVector::from_strs(3, &[&[], &["000", "011", "100", "111"]]).unwrap();
    (u, v, w)
}
