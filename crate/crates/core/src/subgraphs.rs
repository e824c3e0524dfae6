//! Subgraph counting: the H-partite counting polynomial, labeled tree and
//! forest counting, and inclusion-edgesclusion, which recovers labeled counts
//! in a k-partite graph from unlabeled counts over a family of correlated
//! random-looking graphs.
//!
//! A labeled subgraph is a set of partition pairs, stored as a bitmask over
//! `canonical_pairs(k)`. Its vertices are the endpoints of its pairs, and its
//! count in G is the number of maps sending label i into partition i that keep
//! every listed pair an edge.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dpoly::PartitePolynomial;
use crate::error::{Error, Result};
use crate::factored::{canonical_pairs, odometer, pair_index};
use crate::field::is_prime;

/// Largest k accepted by the edgesclusion pipeline.
pub const MAX_K: usize = 6;
/// Ceiling on b^(k choose 2), the edgesclusion family size.
pub const FAMILY_CAP: usize = 1 << 16;
pub const DEFAULT_MONOMIAL_CAP: u128 = 1 << 22;

/// A simple graph on vertices 0..k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub k: usize,
    /// Sorted, each pair (i, j) with i < j.
    pub edges: Vec<(usize, usize)>,
}

impl Pattern {
    pub fn new(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b || a >= k || b >= k {
                return Err(Error::InvalidParameters(format!("bad pattern edge ({a},{b}) for k={k}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Pattern { k, edges: set.into_iter().collect() })
    }

    pub fn triangle() -> Self {
        Pattern::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    /// Path on three vertices with the middle vertex labeled 1.
    pub fn p3() -> Self {
        Pattern::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    pub fn k4() -> Self {
        Pattern::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    /// Parses "0-1,1-2,..." with k = 1 + the largest vertex mentioned.
    pub fn parse(s: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part.split_once('-').ok_or_else(|| Error::Parse(format!("edge '{part}' is not a-b")))?;
            let a: usize = a.trim().parse().map_err(|_| Error::Parse(format!("bad vertex '{a}'")))?;
            let b: usize = b.trim().parse().map_err(|_| Error::Parse(format!("bad vertex '{b}'")))?;
            edges.push((a, b));
        }
        let k = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        Pattern::new(k, &edges)
    }

    pub fn e(&self) -> usize {
        self.edges.len()
    }

    /// Bitmask of the pattern's pairs among the pairs of a k'-vertex graph.
    pub fn mask_in(&self, k: usize) -> u32 {
        self.edges.iter().fold(0, |m, &(a, b)| m | 1 << pair_index(k, a, b))
    }
}

/// Plain undirected graph given by a dense adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    pub order: usize,
    adj: Vec<bool>,
}

impl SimpleGraph {
    pub fn empty(order: usize) -> Self {
        SimpleGraph { order, adj: vec![false; order * order] }
    }

    pub fn has(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.order + v]
    }

    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        if u != v {
            self.adj[u * self.order + v] = on;
            self.adj[v * self.order + u] = on;
        }
    }

    pub fn induced(&self, keep: &[usize]) -> SimpleGraph {
        let mut g = SimpleGraph::empty(keep.len());
        for (x, &u) in keep.iter().enumerate() {
            for (y, &v) in keep.iter().enumerate() {
                g.adj[x * keep.len() + y] = self.has(u, v);
            }
        }
        g
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&x| x).count() / 2
    }
}

/// Per-pair edge classes in [1, b]: class 1 is exactly the edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLabels {
    pub b: usize,
    /// `classes[q][a * n + c]` for pair q = (i, j), i < j.
    pub classes: Vec<Vec<u8>>,
}

/// k partitions of n vertices each; vertex a of partition i is `i * n + a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedGraph {
    pub k: usize,
    pub n: usize,
    pub graph: SimpleGraph,
    pub labels: Option<EdgeLabels>,
}

impl PartitionedGraph {
    pub fn empty(k: usize, n: usize) -> Self {
        PartitionedGraph { k, n, graph: SimpleGraph::empty(k * n), labels: None }
    }

    pub fn vertex(&self, part: usize, a: usize) -> usize {
        part * self.n + a
    }

    pub fn has(&self, i: usize, a: usize, j: usize, c: usize) -> bool {
        self.graph.has(i * self.n + a, j * self.n + c)
    }

    pub fn set(&mut self, i: usize, a: usize, j: usize, c: usize, on: bool) {
        let (u, v) = (self.vertex(i, a), self.vertex(j, c));
        self.graph.set(u, v, on);
    }

    /// Edges between partitions i and j.
    pub fn cross_edges(&self, i: usize, j: usize) -> u128 {
        let mut t = 0;
        for a in 0..self.n {
            for c in 0..self.n {
                t += self.has(i, a, j, c) as u128;
            }
        }
        t
    }

    /// True when no edge joins two vertices of the same partition.
    pub fn is_kpartite(&self) -> bool {
        (0..self.k).all(|i| self.cross_edges_within(i) == 0)
    }

    fn cross_edges_within(&self, i: usize) -> usize {
        let mut t = 0;
        for a in 0..self.n {
            for c in a + 1..self.n {
                t += self.has(i, a, i, c) as usize;
            }
        }
        t
    }
}

/// Every cross-partition pair is an edge with probability 1/b.
pub fn gen_kpartite(k: usize, n: usize, b: usize, seed: u64) -> PartitionedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = PartitionedGraph::empty(k, n);
    for (i, j) in canonical_pairs(k) {
        for a in 0..n {
            for c in 0..n {
                if rng.gen_range(0..b.max(1)) == 0 {
                    g.set(i, a, j, c, true);
                }
            }
        }
    }
    g
}

/// Like [`gen_kpartite`] but only on the partition pairs that are edges of H.
pub fn gen_hpartite(h: &Pattern, n: usize, b: usize, seed: u64) -> PartitionedGraph {
    let mut g = gen_kpartite(h.k, n, b, seed);
    for (i, j) in canonical_pairs(h.k) {
        if !h.edges.contains(&(i, j)) {
            clear_pair(&mut g, i, j);
        }
    }
    g
}

fn clear_pair(g: &mut PartitionedGraph, i: usize, j: usize) {
    for a in 0..g.n {
        for c in 0..g.n {
            g.set(i, a, j, c, false);
        }
    }
}

/// Copies of H with one vertex in each partition, H's vertex i in partition i.
pub fn count_chghp_brute(h: &Pattern, g: &PartitionedGraph) -> Result<u128> {
    if h.k != g.k {
        return Err(Error::ArityMismatch { expected: g.k, got: h.k });
    }
    let mut idx = vec![0usize; h.k];
    let mut total = 0u128;
    if g.n == 0 {
        return Ok(0);
    }
    loop {
        total += h.edges.iter().all(|&(i, j)| g.has(i, idx[i], j, idx[j])) as u128;
        if !odometer(&mut idx, g.n) {
            return Ok(total);
        }
    }
}

/// The smallest prime in [2n^k, n^{2k}] (2 when n ≤ 1).
pub fn chghp_prime(n: usize, k: usize) -> u64 {
    let lo = (2 * (n as u128).pow(k as u32)).max(2) as u64;
    crate::field::next_prime(lo)
}

/// Variable index of the indicator for edge (a of i, c of j), where (i, j)
/// is H's t-th edge.
pub fn chghp_var(n: usize, t: usize, a: usize, c: usize) -> u32 {
    (t * n * n + a * n + c) as u32
}

/// Σ over k-tuples of Π over H's edges of the edge indicator. One partition
/// per H edge, so the polynomial is strongly |E_H|-partite.
pub fn build_chghp_poly(h: &Pattern, n: usize, p: u64) -> Result<PartitePolynomial> {
    build_chghp_poly_capped(h, n, p, DEFAULT_MONOMIAL_CAP)
}

pub fn build_chghp_poly_capped(h: &Pattern, n: usize, p: u64, cap: u128) -> Result<PartitePolynomial> {
    if !is_prime(p) {
        return Err(Error::InvalidParameters(format!("{p} is not prime")));
    }
    let monos = (n as u128).checked_pow(h.k as u32).unwrap_or(u128::MAX);
    if monos > cap {
        return Err(Error::MonomialCapExceeded { got: monos, cap });
    }
    let d = h.e();
    let n_vars = d * n * n;
    let partition: Vec<usize> = (0..n_vars).map(|v| v / (n * n).max(1)).collect();
    let mut vars = Vec::with_capacity(monos as usize * d);
    let mut mult = Vec::with_capacity(monos as usize);
    if n > 0 {
        let mut idx = vec![0usize; h.k];
        loop {
            for (t, &(i, j)) in h.edges.iter().enumerate() {
                vars.push(chghp_var(n, t, idx[i], idx[j]));
            }
            mult.push(1 % p);
            if !odometer(&mut idx, n) {
                break;
            }
        }
    }
    if d == 0 {
        // Degree-zero polynomial: the constant n^k.
        let c = (monos % p as u128) as u64;
        return Ok(PartitePolynomial::from_monomials(0, vec![], 0, p, [(vec![], c)]));
    }
    // Each tuple yields a distinct variable set, so no merging is needed.
    let poly = PartitePolynomial::from_monomials(n_vars, partition, d, p, vars.chunks(d).map(|m| (m.to_vec(), 1)));
    Ok(poly)
}

/// Edge indicators of G in the variable order of [`build_chghp_poly`].
pub fn chghp_assignment(h: &Pattern, g: &PartitionedGraph) -> Vec<u64> {
    let n = g.n;
    let mut x = vec![0u64; h.e() * n * n];
    for (t, &(i, j)) in h.edges.iter().enumerate() {
        for a in 0..n {
            for c in 0..n {
                x[chghp_var(n, t, a, c) as usize] = g.has(i, a, j, c) as u64;
            }
        }
    }
    x
}

fn endpoints(k: usize, mask: u32) -> Vec<usize> {
    let mut seen = vec![false; k];
    for (q, (i, j)) in canonical_pairs(k).into_iter().enumerate() {
        if mask >> q & 1 == 1 {
            seen[i] = true;
            seen[j] = true;
        }
    }
    (0..k).filter(|&v| seen[v]).collect()
}

/// Edge masks of the connected components of `mask`.
fn components(k: usize, mask: u32) -> Vec<u32> {
    let pairs = canonical_pairs(k);
    let mut comp: Vec<usize> = (0..k).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while c[r] != r {
            r = c[r];
        }
        c[x] = r;
        r
    }
    for (q, &(i, j)) in pairs.iter().enumerate() {
        if mask >> q & 1 == 1 {
            let (a, b) = (find(&mut comp, i), find(&mut comp, j));
            comp[a] = b;
        }
    }
    let mut by_root: HashMap<usize, u32> = HashMap::new();
    for (q, &(i, _)) in pairs.iter().enumerate() {
        if mask >> q & 1 == 1 {
            *by_root.entry(find(&mut comp, i)).or_insert(0) |= 1 << q;
        }
    }
    let mut out: Vec<u32> = by_root.into_values().collect();
    out.sort_unstable();
    out
}

fn is_forest(k: usize, mask: u32) -> bool {
    components(k, mask).iter().all(|&c| endpoints(k, c).len() == c.count_ones() as usize + 1)
}

/// Brute-force count of a labeled subgraph given as a pair mask.
pub fn count_labeled_mask_brute(g: &PartitionedGraph, mask: u32) -> u128 {
    let verts = endpoints(g.k, mask);
    let pairs: Vec<(usize, usize)> =
        canonical_pairs(g.k).into_iter().enumerate().filter(|(q, _)| mask >> q & 1 == 1).map(|(_, p)| p).collect();
    if verts.is_empty() {
        return 1;
    }
    if g.n == 0 {
        return 0;
    }
    let mut at = vec![0usize; g.k];
    let mut idx = vec![0usize; verts.len()];
    let mut total = 0;
    loop {
        for (s, &v) in verts.iter().enumerate() {
            at[v] = idx[s];
        }
        total += pairs.iter().all(|&(i, j)| g.has(i, at[i], j, at[j])) as u128;
        if !odometer(&mut idx, g.n) {
            return total;
        }
    }
}

/// Brute-force labeled count of a pattern over its non-isolated vertices.
pub fn count_labeled_brute(p: &Pattern, g: &PartitionedGraph) -> Result<u128> {
    check_fits(p, g)?;
    Ok(count_labeled_mask_brute(g, p.mask_in(g.k)))
}

fn check_fits(p: &Pattern, g: &PartitionedGraph) -> Result<()> {
    if p.k > g.k {
        return Err(Error::InvalidParameters(format!("pattern has {} labels but G has {} partitions", p.k, g.k)));
    }
    Ok(())
}

/// Bottom-up count for one tree component.
fn tree_dp(g: &PartitionedGraph, mask: u32) -> u128 {
    let k = g.k;
    let mut nbrs = vec![Vec::new(); k];
    for (q, (i, j)) in canonical_pairs(k).into_iter().enumerate() {
        if mask >> q & 1 == 1 {
            nbrs[i].push(j);
            nbrs[j].push(i);
        }
    }
    let root = endpoints(k, mask)[0];
    // Order vertices so every child precedes its parent.
    let mut order = vec![(root, usize::MAX)];
    let mut at = 0;
    while at < order.len() {
        let (v, par) = order[at];
        for &w in &nbrs[v] {
            if w != par {
                order.push((w, v));
            }
        }
        at += 1;
    }
    let mut f: Vec<Vec<u128>> = vec![vec![1; g.n]; k];
    for &(v, par) in order.iter().rev() {
        if par == usize::MAX {
            continue;
        }
        let mut up = vec![0u128; g.n];
        for (a, slot) in up.iter_mut().enumerate() {
            for c in 0..g.n {
                if g.has(par, a, v, c) {
                    *slot += f[v][c];
                }
            }
        }
        for a in 0..g.n {
            f[par][a] *= up[a];
        }
    }
    f[root].iter().sum()
}

/// Counts a labeled tree in linear time in the number of cross edges touched.
pub fn count_labeled_trees(t: &Pattern, g: &PartitionedGraph) -> Result<u128> {
    check_fits(t, g)?;
    let mask = t.mask_in(g.k);
    let comps = components(g.k, mask);
    if comps.len() != 1 || !is_forest(g.k, mask) {
        return Err(Error::InvalidParameters("pattern is not a tree".into()));
    }
    Ok(tree_dp(g, mask))
}

/// Count of a union of two vertex-disjoint labeled subgraphs.
pub fn count_disconnected_union(count_l: u128, count_l2: u128) -> u128 {
    count_l * count_l2
}

/// Counts of every labeled subgraph on at most two vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseCounts {
    /// Single labeled vertex in partition i.
    pub vertices: Vec<u128>,
    /// Single edge between partitions i < j, indexed like `canonical_pairs`.
    pub edges: Vec<u128>,
}

pub fn base_counts(g: &PartitionedGraph) -> BaseCounts {
    let edges = canonical_pairs(g.k).into_iter().map(|(i, j)| tree_dp(g, 1 << pair_index(g.k, i, j))).collect();
    BaseCounts { vertices: vec![g.n as u128; g.k], edges }
}

/// Fixed data for the edgesclusion recursion on k partitions.
#[derive(Debug, Clone)]
pub struct EdgesclusionCtx {
    pub k: usize,
    pub n: usize,
    pub b: usize,
    pub e_h: usize,
    /// Pair masks of every copy of H inside K_k.
    pub copies: Vec<u32>,
}

impl EdgesclusionCtx {
    pub fn new(h: &Pattern, n: usize, b: usize) -> Result<Self> {
        let k = h.k;
        if !(2..=MAX_K).contains(&k) || b < 2 {
            return Err(Error::InvalidParameters(format!("need 2 <= k <= {MAX_K} and b >= 2 (k={k}, b={b})")));
        }
        let m = k * (k - 1) / 2;
        let family = (b as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        if family > FAMILY_CAP as u128 {
            return Err(Error::InvalidParameters(format!("family size b^{m} = {family} exceeds {FAMILY_CAP}")));
        }
        Ok(EdgesclusionCtx { k, n, b, e_h: h.e(), copies: h_copies(h) })
    }

    fn m(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    /// Number of H copies F in K_k with F ∩ within = j.
    pub fn overlap(&self, j: u32, within: u32) -> u128 {
        self.copies.iter().filter(|&&f| f & within == j).count() as u128
    }

    /// Family index of a label vector (labels in 1..=b, one per pair).
    pub fn family_index(&self, labels: &[usize]) -> usize {
        labels.iter().rev().fold(0, |acc, &l| acc * self.b + (l - 1))
    }

    pub fn family_size(&self) -> usize {
        self.b.pow(self.m() as u32)
    }

    /// Sum of family counts over members whose pairs in `fixed` carry label 1.
    pub fn restricted_sum(&self, family_counts: &[u128], fixed: u32) -> u128 {
        let m = self.m();
        let free: Vec<usize> = (0..m).filter(|q| fixed >> q & 1 == 0).collect();
        let mut idx = vec![0usize; free.len()];
        let mut total = 0;
        loop {
            let mut at = 0;
            for (s, &q) in free.iter().enumerate() {
                at += idx[s] * self.b.pow(q as u32);
            }
            total += family_counts[at];
            if free.is_empty() || !odometer(&mut idx, self.b) {
                return total;
            }
        }
    }

    /// Count of labeled subgraph `l` from the family sums and the counts of
    /// every proper sub-mask of `l` in `table`.
    pub fn step(&self, family_counts: &[u128], table: &HashMap<u32, u128>, l: u32) -> Result<u128> {
        let m = self.m() as i64;
        let total = self.restricted_sum(family_counts, l) as i128;
        let n = self.n as i128;
        let b = self.b as i128;
        let mut rest = total;
        let mut j = l;
        // Proper sub-masks of l, including the empty one.
        loop {
            j = j.wrapping_sub(1) & l;
            let c = self.overlap(j, l);
            if c > 0 {
                let cnt =
                    *table.get(&j).ok_or_else(|| Error::EdgesclusionInconsistency(format!("missing count for sub-mask {j:#b}")))? as i128;
                let v = endpoints(self.k, j).len() as u32;
                let exp = m - l.count_ones() as i64 - self.e_h as i64 + j.count_ones() as i64;
                debug_assert!(exp >= 0);
                rest -= cnt * n.pow(self.k as u32 - v) * c as i128 * b.pow(exp as u32);
            }
            if j == 0 {
                break;
            }
        }
        let c = self.overlap(l, l) as i128;
        if c == 0 {
            return Err(Error::InvalidParameters(format!("{l:#b} is not contained in any copy of H")));
        }
        let v = endpoints(self.k, l).len() as u32;
        let denom = n.pow(self.k as u32 - v) * c * b.pow((m - self.e_h as i64) as u32);
        if rest < 0 || denom == 0 || rest % denom != 0 {
            return Err(Error::EdgesclusionInconsistency(format!("remainder {rest} is not a nonnegative multiple of {denom} for {l:#b}")));
        }
        Ok((rest / denom) as u128)
    }
}

/// Pair masks of the distinct images of H under all permutations of [k].
pub fn h_copies(h: &Pattern) -> Vec<u32> {
    let k = h.k;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut out = BTreeSet::new();
    permute(&mut perm, 0, &mut |p| {
        let mask = h.edges.iter().fold(0u32, |acc, &(a, b)| {
            let (x, y) = (p[a].min(p[b]), p[a].max(p[b]));
            acc | 1 << pair_index(k, x, y)
        });
        out.insert(mask);
    });
    out.into_iter().collect()
}

fn permute(p: &mut Vec<usize>, at: usize, f: &mut dyn FnMut(&[usize])) {
    if at == p.len() {
        f(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, f);
        p.swap(at, i);
    }
}

/// One edgesclusion step, building the fixed context on the fly.
pub fn edgesclusion_step(family_counts: &[u128], table: &HashMap<u32, u128>, l: u32, h: &Pattern, n: usize, b: usize) -> Result<u128> {
    EdgesclusionCtx::new(h, n, b)?.step(family_counts, table, l)
}

/// Random classes for the edge set: edges get 1, non-edges uniform in [2, b].
pub fn label_edges(g: &PartitionedGraph, b: usize, rng: &mut impl Rng) -> EdgeLabels {
    let classes = canonical_pairs(g.k)
        .into_iter()
        .map(|(i, j)| {
            let mut row = vec![0u8; g.n * g.n];
            for a in 0..g.n {
                for c in 0..g.n {
                    row[a * g.n + c] = if g.has(i, a, j, c) { 1 } else { rng.gen_range(2..=b) as u8 };
                }
            }
            row
        })
        .collect();
    EdgeLabels { b, classes }
}

/// The family member choosing class `labels[q]` on pair q.
pub fn family_member(g: &PartitionedGraph, el: &EdgeLabels, labels: &[usize]) -> PartitionedGraph {
    let mut out = PartitionedGraph::empty(g.k, g.n);
    for (q, (i, j)) in canonical_pairs(g.k).into_iter().enumerate() {
        for a in 0..g.n {
            for c in 0..g.n {
                if el.classes[q][a * g.n + c] as usize == labels[q] {
                    out.set(i, a, j, c, true);
                }
            }
        }
    }
    out
}

/// Counts (vertex set, edge set) copies of an unlabeled H in a simple graph
/// by tabulating H-copies inside every induced k-vertex pattern.
#[derive(Debug, Clone)]
pub struct UnlabeledCounter {
    k: usize,
    table: Vec<u32>,
}

impl UnlabeledCounter {
    pub fn new(h: &Pattern) -> Self {
        let k = h.k;
        let copies = h_copies(h);
        let m = k * (k - 1) / 2;
        let table = (0..1u32 << m).map(|code| copies.iter().filter(|&&f| f & code == f).count() as u32).collect();
        UnlabeledCounter { k, table }
    }

    pub fn count(&self, g: &SimpleGraph) -> u128 {
        if self.k == 0 {
            return 1;
        }
        let mut chosen = Vec::with_capacity(self.k);
        let mut total = 0u128;
        self.rec(g, 0, 0, &mut chosen, &mut total);
        total
    }

    fn rec(&self, g: &SimpleGraph, from: usize, code: u32, chosen: &mut Vec<usize>, total: &mut u128) {
        let s = chosen.len();
        if s == self.k {
            *total += self.table[code as usize] as u128;
            return;
        }
        for v in from..g.order {
            if g.order - v < self.k - s {
                break;
            }
            let mut c = code;
            for (x, &u) in chosen.iter().enumerate() {
                if g.has(u, v) {
                    c |= 1 << pair_index(self.k, x, s);
                }
            }
            chosen.push(v);
            self.rec(g, v + 1, c, chosen, total);
            chosen.pop();
        }
    }
}

/// The brute-force unlabeled oracle for H.
pub fn brute_oracle(h: &Pattern) -> impl FnMut(&SimpleGraph) -> u128 {
    let c = UnlabeledCounter::new(h);
    move |g: &SimpleGraph| c.count(g)
}

/// Copies of H with exactly one vertex in each partition, from 2^k unlabeled
/// oracle calls on unions of partitions.
pub fn one_per_partition(g: &PartitionedGraph, oracle: &mut dyn FnMut(&SimpleGraph) -> u128) -> i128 {
    let k = g.k;
    let mut total = 0i128;
    for t in 0u32..1 << k {
        let keep: Vec<usize> = (0..k).filter(|i| t >> i & 1 == 1).flat_map(|i| (0..g.n).map(move |a| i * g.n + a)).collect();
        let c = oracle(&g.graph.induced(&keep)) as i128;
        if (k - t.count_ones() as usize).is_multiple_of(2) {
            total += c;
        } else {
            total -= c;
        }
    }
    total
}

/// Intermediate data of one edgesclusion run.
#[derive(Debug, Clone)]
pub struct EdgesclusionRun {
    pub count: u128,
    /// Labeled count of every sub-mask of the target.
    pub table: HashMap<u32, u128>,
    /// One-per-partition H counts over the family, by family index.
    pub family_counts: Vec<u128>,
    pub oracle_calls: usize,
}

/// Labeled count of `target` (a copy of H on the partition pairs) in a
/// k-partite G, using only unlabeled H counts on family members with
/// Erdős–Rényi noise edges added inside partitions.
pub fn count_labeled_h_er(
    g: &PartitionedGraph,
    h: &Pattern,
    target: &Pattern,
    b: usize,
    oracle: &mut dyn FnMut(&SimpleGraph) -> u128,
    seed: u64,
) -> Result<EdgesclusionRun> {
    if h.k != g.k || target.k != g.k {
        return Err(Error::ArityMismatch { expected: g.k, got: h.k.max(target.k) });
    }
    if !g.is_kpartite() {
        return Err(Error::InvalidParameters("G has edges inside a partition".into()));
    }
    let ctx = EdgesclusionCtx::new(h, g.n, b)?;
    let target_mask = target.mask_in(g.k);
    if !ctx.copies.contains(&target_mask) {
        return Err(Error::InvalidParameters("target is not a copy of H".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let el = label_edges(g, b, &mut rng);
    let m = g.k * (g.k - 1) / 2;
    let mut family_counts = vec![0u128; ctx.family_size()];
    let mut labels = vec![1usize; m];
    let mut oracle_calls = 0;
    loop {
        let mut member = family_member(g, &el, &labels);
        for i in 0..g.k {
            for a in 0..g.n {
                for c in a + 1..g.n {
                    if rng.gen_range(0..b) == 0 {
                        member.set(i, a, i, c, true);
                    }
                }
            }
        }
        let c = one_per_partition(&member, oracle);
        oracle_calls += 1 << g.k;
        if c < 0 {
            return Err(Error::EdgesclusionInconsistency(format!("negative one-per-partition count {c}")));
        }
        family_counts[ctx.family_index(&labels)] = c as u128;
        // Labels run over 1..=b; shift to 0-based for the odometer.
        let mut z: Vec<usize> = labels.iter().map(|l| l - 1).collect();
        if !odometer(&mut z, b) {
            break;
        }
        labels = z.iter().map(|l| l + 1).collect();
    }
    let table = fill_table(g, &ctx, &family_counts, target_mask)?;
    Ok(EdgesclusionRun { count: table[&target_mask], table, family_counts, oracle_calls })
}

fn fill_table(g: &PartitionedGraph, ctx: &EdgesclusionCtx, family_counts: &[u128], target: u32) -> Result<HashMap<u32, u128>> {
    let mut subs = Vec::new();
    let mut j = target;
    loop {
        subs.push(j);
        if j == 0 {
            break;
        }
        j = (j - 1) & target;
    }
    subs.sort_by_key(|s| s.count_ones());
    let mut table = HashMap::new();
    for s in subs {
        let val = if s == 0 {
            1
        } else if is_forest(g.k, s) {
            components(g.k, s).into_iter().map(|c| tree_dp(g, c)).fold(1, count_disconnected_union)
        } else {
            let comps = components(g.k, s);
            if comps.len() > 1 {
                comps.iter().map(|c| table[c]).fold(1, count_disconnected_union)
            } else {
                ctx.step(family_counts, &table, s)?
            }
        };
        table.insert(s, val);
    }
    Ok(table)
}

/// How often the family sum counts each copy of H in the complete k-partite
/// graph: pairs unused by a copy keep a free label, so b^{C(k,2) − e_H}.
/// The family sum equals this times the complete-graph count.
pub fn warm_up_multiplicity(h: &Pattern, b: usize) -> u128 {
    (b as u128).pow((h.k * (h.k - 1) / 2 - h.e()) as u32)
}

/// Pair masks inside K_k that form a copy of H, i.e. the H-partite selections.
pub fn h_partite_selections(h: &Pattern) -> Vec<u32> {
    h_copies(h)
}

/// Copies of H in a k-partite G with one vertex per partition: the sum, over
/// every selection of partition pairs shaped like H, of the labeled count
/// from [`count_labeled_h_er`]. Pairs outside a selection are refilled with
/// fresh random edges before the call; they do not affect the labeled count.
pub fn count_h_kpartite_via_er(
    g: &PartitionedGraph,
    h: &Pattern,
    b: usize,
    oracle: &mut dyn FnMut(&SimpleGraph) -> u128,
    seed: u64,
) -> Result<u128> {
    let k = g.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    for sel in h_partite_selections(h) {
        let mut gp = g.clone();
        for (q, (i, j)) in canonical_pairs(k).into_iter().enumerate() {
            if sel >> q & 1 == 0 {
                for a in 0..g.n {
                    for c in 0..g.n {
                        gp.set(i, a, j, c, rng.gen_range(0..b) == 0);
                    }
                }
            }
        }
        let edges: Vec<(usize, usize)> =
            canonical_pairs(k).into_iter().enumerate().filter(|(q, _)| sel >> q & 1 == 1).map(|(_, p)| p).collect();
        let target = Pattern::new(k, &edges)?;
        total += count_labeled_h_er(&gp, h, &target, b, oracle, rng.gen())?.count;
    }
    Ok(total)
}

/// Direct count of H copies with one vertex per partition.
pub fn brute_count_one_per_partition(h: &Pattern, g: &PartitionedGraph) -> u128 {
    h_copies(h).into_iter().map(|sel| count_labeled_mask_brute(g, sel)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copies_of_small_patterns() {
        assert_eq!(h_copies(&Pattern::triangle()).len(), 1);
        assert_eq!(h_copies(&Pattern::p3()).len(), 3);
        assert_eq!(h_copies(&Pattern::k4()).len(), 1);
        assert_eq!(h_copies(&Pattern::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()).len(), 3);
    }

    #[test]
    fn components_and_forests() {
        let k = 4;
        let m = Pattern::new(k, &[(0, 1), (2, 3)]).unwrap().mask_in(k);
        assert_eq!(components(k, m).len(), 2);
        assert!(is_forest(k, m));
        assert!(!is_forest(k, Pattern::triangle().mask_in(k)));
    }

    #[test]
    fn parse_pattern() {
        assert_eq!(Pattern::parse("0-1, 1-2,2-0").unwrap(), Pattern::triangle());
        assert!(Pattern::parse("0-0").is_err());
        assert!(Pattern::parse("01").is_err());
    }
}
