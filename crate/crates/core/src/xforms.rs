//! Count-preserving transforms between factored problems.
//!
//! Slot indices are 0-based: `i` in `[0, k)`. Strings are laid out with the
//! leftmost block in the highest-order bits.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::factored::{canonical_pairs, FactoredVector, FfkcInstance, FkfInstance, PredKind, Predicate};
use crate::field::ceil_lg;

/// Default limit on strings per transformed group.
pub const DEFAULT_EXPANSION_CAP: usize = 1 << 16;

fn ones(bits: usize) -> BigUint {
    (BigUint::one() << bits) - 1u32
}

/// Splits each d-bit vector into g = b = ⌈√d⌉ singleton groups.
///
/// Missing low-order bits are filled with zeros so no orthogonal tuple is
/// created or destroyed.
pub fn embed_kov(lists: &[Vec<u64>], d: usize) -> Result<FkfInstance> {
    if d > 64 {
        return Err(Error::WidthMismatch(format!("d={d} exceeds 64")));
    }
    let k = lists.len();
    let s = (1..).find(|s| s * s >= d).unwrap_or(1);
    let width = s * s;
    let mut out = Vec::with_capacity(k);
    for list in lists {
        let mut l = Vec::with_capacity(list.len());
        for &v in list {
            if d < 64 && v >> d != 0 {
                return Err(Error::WidthMismatch(format!("vector {v:#b} wider than d={d}")));
            }
            let padded = BigUint::from(v) << (width - d);
            let groups = (0..s).map(|j| vec![(&padded >> (s * (s - 1 - j))) & ones(s)]).collect();
            l.push(FactoredVector::new(s, groups)?);
        }
        out.push(l);
    }
    FkfInstance::new(out, s, s, Predicate::ov(k))
}

/// Embeds an integer k-SUM instance as one SUM_ZERO factored instance per
/// guess of the g inter-chunk carries. Each zero-sum tuple is counted by
/// exactly one instance of the family.
///
/// Values must lie in `[-B, B]` with `B = max(n, 2)^k`.
pub fn embed_ksum(numbers: &[Vec<i64>], k: usize) -> Result<Vec<FkfInstance>> {
    if numbers.len() != k || k < 2 {
        return Err(Error::InvalidParameters(format!("need k >= 2 lists, got {} for k={k}", numbers.len())));
    }
    let n = numbers[0].len();
    if numbers.iter().any(|l| l.len() != n) {
        return Err(Error::InvalidParameters("lists must have equal length".into()));
    }
    let bound = (n.max(2) as i128)
        .checked_pow(k as u32)
        .filter(|b| *b < 1 << 60)
        .ok_or_else(|| Error::RangeViolation("range bound overflows".into()))?;
    if let Some(x) = numbers.iter().flatten().find(|x| (**x as i128).abs() > bound) {
        return Err(Error::RangeViolation(format!("{x} outside [-{bound}, {bound}]")));
    }
    // 2^w exceeds every possible |sum|, so a zero residue means a zero sum.
    let w = (128 - (k as i128 * bound).leading_zeros()) as usize;
    let g = ((w as f64).sqrt().ceil() as usize).max(1);
    let b = w.div_ceil(g);
    let total = g * b;
    let chunk_mask = (1u128 << b) - 1;
    let wide = b + ceil_lg(k as u64) as usize + 1;
    let wide_mod = 1i128 << wide;
    let chunks = |x: i64| -> Vec<i128> {
        let u = (x as i128).rem_euclid(1i128 << total) as u128;
        (0..g).map(|j| ((u >> (b * j)) & chunk_mask) as i128).collect()
    };
    let split: Vec<Vec<Vec<i128>>> = numbers.iter().map(|l| l.iter().map(|&x| chunks(x)).collect()).collect();
    let mut family = Vec::new();
    // carries[j] flows into chunk j (low to high); carries[0] = 0.
    let mut guess = vec![0usize; g];
    loop {
        let carry_in = |j: usize| if j == 0 { 0 } else { guess[j - 1] as i128 };
        let mut lists = Vec::with_capacity(k);
        for (li, list) in split.iter().enumerate() {
            let mut l = Vec::with_capacity(n);
            for cs in list {
                let groups = (0..g)
                    .map(|j| {
                        let mut v = cs[j];
                        if li == 0 {
                            v += carry_in(j) - ((guess[j] as i128) << b);
                        }
                        vec![BigUint::from(v.rem_euclid(wide_mod) as u128)]
                    })
                    .collect();
                l.push(FactoredVector::new(wide, groups)?);
            }
            lists.push(l);
        }
        family.push(FkfInstance::new(lists, g, wide, Predicate::sum_zero(k))?);
        if !crate::factored::odometer(&mut guess, k) {
            return Ok(family);
        }
    }
}

/// Accepted tuples of `pred` over {0,1}^b grouped by the string in `slot`.
pub fn tuples_by_slot(pred: &Predicate, b: usize, slot: usize) -> Result<HashMap<u64, Vec<Vec<u64>>>> {
    let mut map: HashMap<u64, Vec<Vec<u64>>> = HashMap::new();
    for t in pred.accepted_tuples(b)? {
        map.entry(t[slot]).or_default().push(t);
    }
    Ok(map)
}

fn expand_groups(
    v: &FactoredVector,
    new_b: usize,
    cap: usize,
    mut per_string: impl FnMut(u64, &mut Vec<BigUint>) -> Result<()>,
) -> Result<FactoredVector> {
    let mut groups = Vec::with_capacity(v.g);
    for gr in &v.groups {
        let mut out = Vec::new();
        for s in gr {
            let s = s.to_u64().ok_or_else(|| Error::WidthMismatch("string exceeds 64 bits".into()))?;
            per_string(s, &mut out)?;
            if out.len() > cap {
                return Err(Error::ExpansionCapExceeded { got: out.len(), cap });
            }
        }
        groups.push(out);
    }
    FactoredVector::new(new_b, groups)
}

/// k³ blocks of `block_bits` each, block (x, y, z) at lexicographic position.
fn pack_blocks(k: usize, block_bits: usize, mut block: impl FnMut(usize, usize, usize) -> BigUint) -> BigUint {
    let mut acc = BigUint::zero();
    for x in 0..k {
        for y in 0..k {
            for z in 0..k {
                acc = (acc << block_bits) | block(x, y, z);
            }
        }
    }
    acc
}

fn f_to_xor_string(t: &[u64], i: usize, b: usize) -> BigUint {
    let k = t.len();
    pack_blocks(k, b, |x, y, z| if x != y && (x == i || y == i) { BigUint::from(t[z]) } else { BigUint::zero() })
}

fn xor_to_ov_string(t: &[u64], i: usize, b: usize) -> BigUint {
    let k = t.len();
    let m = (1u64 << b) - 1;
    pack_blocks(k, 2 * b, |x, y, z| {
        let w = t[z];
        if x == y {
            BigUint::zero()
        } else if x == i {
            BigUint::from((w << b) | (!w & m))
        } else if y == i {
            BigUint::from(((!w & m) << b) | w)
        } else {
            ones(2 * b)
        }
    })
}

fn check_slot(i: usize, k: usize, b: usize) -> Result<()> {
    if k < 2 || i >= k {
        return Err(Error::InvalidParameters(format!("slot {i} invalid for k={k} (k >= 2 required)")));
    }
    if b > 20 {
        return Err(Error::WidthMismatch(format!("b={b} too wide to expand")));
    }
    Ok(())
}

/// Replaces each string u in slot i by one k³b-bit string per accepted
/// tuple through u. Transformed tuples XOR to zero exactly when all k
/// vectors encode the same accepted tuple.
pub fn gamma_f_to_xor(v: &FactoredVector, i: usize, pred: &Predicate, k: usize) -> Result<FactoredVector> {
    check_slot(i, k, v.b)?;
    if pred.arity != k {
        return Err(Error::ArityMismatch { expected: k, got: pred.arity });
    }
    let by = tuples_by_slot(pred, v.b, i)?;
    gamma_f_to_xor_with(v, i, k, &by, DEFAULT_EXPANSION_CAP)
}

pub fn gamma_f_to_xor_with(
    v: &FactoredVector,
    i: usize,
    k: usize,
    by_slot: &HashMap<u64, Vec<Vec<u64>>>,
    cap: usize,
) -> Result<FactoredVector> {
    check_slot(i, k, v.b)?;
    let b = v.b;
    expand_groups(v, k * k * k * b, cap, |u, out| {
        if let Some(ts) = by_slot.get(&u) {
            out.extend(ts.iter().map(|t| f_to_xor_string(t, i, b)));
        }
        Ok(())
    })
}

/// XOR to OV: one 2k³b-bit string per zero-XOR tuple through u, checking
/// pairwise agreement via string-and-complement blocks.
pub fn xor_to_ov(v: &FactoredVector, i: usize, k: usize) -> Result<FactoredVector> {
    check_slot(i, k, v.b)?;
    let by = tuples_by_slot(&Predicate::xor(k), v.b, i)?;
    xor_to_ov_with(v, i, k, &by, DEFAULT_EXPANSION_CAP)
}

pub fn xor_to_ov_with(v: &FactoredVector, i: usize, k: usize, by_slot: &HashMap<u64, Vec<Vec<u64>>>, cap: usize) -> Result<FactoredVector> {
    check_slot(i, k, v.b)?;
    let b = v.b;
    expand_groups(v, 2 * k * k * k * b, cap, |u, out| {
        if let Some(ts) = by_slot.get(&u) {
            out.extend(ts.iter().map(|t| xor_to_ov_string(t, i, b)));
        }
        Ok(())
    })
}

/// Width of one per-bit field in the XOR to SUM_TARGET transform.
pub fn sum_field_bits(k: usize) -> usize {
    ceil_lg(k as u64) as usize + 1
}

/// XOR to SUM_TARGET. Every bit widens to a field of ⌈lg k⌉+1 bits; the
/// last slot enumerates every value in [0, k−1] of the bit's parity, so a
/// zero-XOR tuple has exactly one matching target.
pub fn gamma_xor_to_sum(v: &FactoredVector, i: usize, k: usize) -> Result<FactoredVector> {
    gamma_xor_to_sum_with(v, i, k, DEFAULT_EXPANSION_CAP)
}

pub fn gamma_xor_to_sum_with(v: &FactoredVector, i: usize, k: usize, cap: usize) -> Result<FactoredVector> {
    gamma_xor_to_sum_bounded(v, i, k, cap, |_| k - 1)
}

/// As `gamma_xor_to_sum`, but the last slot only enumerates target values up
/// to `head_max(bit)`, the largest sum the other slots can reach at that bit.
/// Larger targets never match, so counts are unchanged.
pub fn gamma_xor_to_sum_bounded(
    v: &FactoredVector,
    i: usize,
    k: usize,
    cap: usize,
    head_max: impl Fn(usize) -> usize,
) -> Result<FactoredVector> {
    if k < 1 || i >= k {
        return Err(Error::InvalidParameters(format!("slot {i} invalid for k={k}")));
    }
    let f = sum_field_bits(k);
    let b = v.b;
    let mut groups = Vec::with_capacity(v.g);
    for gr in &v.groups {
        let mut out: Vec<BigUint> = Vec::new();
        for s in gr {
            if i + 1 < k {
                let mut acc = BigUint::zero();
                for p in (0..b).rev() {
                    acc = (acc << f) | BigUint::from(s.bit(p as u64) as u8);
                }
                out.push(acc);
                continue;
            }
            // Cartesian product over bits, highest first.
            let mut partial = vec![BigUint::zero()];
            for p in (0..b).rev() {
                let parity = s.bit(p as u64) as usize;
                let top = head_max(p).min(k - 1);
                let vals: Vec<usize> = (0..=top).filter(|x| x % 2 == parity).collect();
                if partial.len().saturating_mul(vals.len()).saturating_add(out.len()) > cap {
                    return Err(Error::ExpansionCapExceeded {
                        got: partial.len().saturating_mul(vals.len()).saturating_add(out.len()),
                        cap,
                    });
                }
                partial = partial.iter().flat_map(|a| vals.iter().map(move |&x| (a.clone() << f) | BigUint::from(x))).collect();
            }
            out.extend(partial);
            if out.len() > cap {
                return Err(Error::ExpansionCapExceeded { got: out.len(), cap });
            }
        }
        groups.push(out);
    }
    FactoredVector::new(f * b, groups)
}

fn map_lists(
    inst: &FkfInstance,
    new_b: usize,
    pred: Predicate,
    mut f: impl FnMut(&FactoredVector, usize) -> Result<FactoredVector>,
) -> Result<FkfInstance> {
    let mut lists = Vec::with_capacity(inst.k);
    for (i, l) in inst.lists.iter().enumerate() {
        lists.push(l.iter().map(|v| f(v, i)).collect::<Result<Vec<_>>>()?);
    }
    FkfInstance::new(lists, inst.g, new_b, pred)
}

/// Applies `gamma_f_to_xor` to every vector of every list.
pub fn fkf_to_xor(inst: &FkfInstance) -> Result<FkfInstance> {
    let k = inst.k;
    let maps: Vec<_> = (0..k).map(|i| tuples_by_slot(&inst.predicate, inst.b, i)).collect::<Result<_>>()?;
    map_lists(inst, k * k * k * inst.b, Predicate::xor(k), |v, i| gamma_f_to_xor_with(v, i, k, &maps[i], DEFAULT_EXPANSION_CAP))
}

/// Applies `xor_to_ov` to every vector of an XOR instance.
pub fn fkf_xor_to_ov(inst: &FkfInstance) -> Result<FkfInstance> {
    require_kind(&inst.predicate, &[PredKind::Xor])?;
    let k = inst.k;
    let pred = Predicate::xor(k);
    let maps: Vec<_> = (0..k).map(|i| tuples_by_slot(&pred, inst.b, i)).collect::<Result<_>>()?;
    map_lists(inst, 2 * k * k * k * inst.b, Predicate::ov(k), |v, i| xor_to_ov_with(v, i, k, &maps[i], DEFAULT_EXPANSION_CAP))
}

/// Applies `gamma_xor_to_sum` to every vector of an XOR instance.
pub fn fkf_xor_to_sum(inst: &FkfInstance) -> Result<FkfInstance> {
    require_kind(&inst.predicate, &[PredKind::Xor])?;
    let k = inst.k;
    map_lists(inst, sum_field_bits(k) * inst.b, Predicate::sum_target(k), |v, i| gamma_xor_to_sum(v, i, k))
}

fn require_kind(pred: &Predicate, kinds: &[PredKind]) -> Result<()> {
    if kinds.contains(&pred.kind) {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!("predicate {} not accepted here", pred.kind.name())))
    }
}

/// SUM_TARGET to SUM_ZERO: widen by ⌈lg k⌉ bits so the head sum cannot wrap,
/// then negate the target list modulo the new width.
pub fn target_to_zero(inst: &FkfInstance) -> Result<FkfInstance> {
    require_kind(&inst.predicate, &[PredKind::SumTarget])?;
    let k = inst.k;
    let nb = inst.b + ceil_lg(k as u64) as usize;
    let modulus = BigUint::one() << nb;
    map_lists(inst, nb, Predicate::sum_zero(k), |v, i| {
        if i + 1 < k {
            return FactoredVector::new(nb, v.groups.clone());
        }
        let groups = v.groups.iter().map(|gr| gr.iter().map(|s| (&modulus - s) % &modulus).collect()).collect();
        FactoredVector::new(nb, groups)
    })
}

/// Factored k-SUM to factored zero-k-clique on the complete k-partite graph:
/// edges (i, i+1 mod k) carry the list-i number, all others the zero vector.
pub fn sum_to_zkc(inst: &FkfInstance) -> Result<FfkcInstance> {
    let zero_form;
    let src = match inst.predicate.kind {
        PredKind::SumZero => inst,
        PredKind::SumTarget => {
            zero_form = target_to_zero(inst)?;
            &zero_form
        }
        _ => return Err(Error::InvalidParameters("sum_to_zkc needs a SUM predicate".into())),
    };
    let k = src.k;
    if k < 3 {
        return Err(Error::InvalidParameters("sum_to_zkc needs k >= 3".into()));
    }
    let (n, g, b) = (src.n, src.g, src.b);
    let ell = k * (k - 1) / 2;
    let zero = FactoredVector::new(b, vec![vec![BigUint::zero()]; g])?;
    let mut out = FfkcInstance::empty(k, n, g, b, Predicate::sum_zero(ell))?;
    for i in 0..k {
        for j in i + 1..k {
            for a in 0..n {
                for c in 0..n {
                    let label = if j == i + 1 {
                        src.lists[i][a].clone()
                    } else if i == 0 && j == k - 1 {
                        src.lists[k - 1][c].clone()
                    } else {
                        zero.clone()
                    };
                    out.set_edge(i, a, j, c, Some(label))?;
                }
            }
        }
    }
    Ok(out)
}

/// Factored f-clique to factored zero-clique (SUM_TARGET) by composing the
/// two γ transforms on each edge label, with the pair index as the slot.
pub fn ffkc_to_fzkc(inst: &FfkcInstance) -> Result<FfkcInstance> {
    ffkc_to_fzkc_with(inst, DEFAULT_EXPANSION_CAP)
}

pub fn ffkc_to_fzkc_with(inst: &FfkcInstance, cap: usize) -> Result<FfkcInstance> {
    let ell = inst.ell();
    if ell < 2 {
        return Err(Error::InvalidParameters("ffkc_to_fzkc needs k >= 3".into()));
    }
    let xb = ell * ell * ell * inst.b;
    let nb = sum_field_bits(ell) * xb;
    let mut out = FfkcInstance::empty(inst.k, inst.n, inst.g, nb, Predicate::sum_target(ell))?;
    for (q, (i, j)) in canonical_pairs(inst.k).into_iter().enumerate() {
        let by = tuples_by_slot(&inst.predicate, inst.b, q)?;
        for a in 0..inst.n {
            for c in 0..inst.n {
                if let Some(e) = inst.edge(i, a, j, c) {
                    let x = gamma_f_to_xor_with(e, q, ell, &by, cap)?;
                    let y = gamma_xor_to_sum_bounded(&x, q, ell, cap, |p| block_writers(ell, inst.b, q, p))?;
                    out.set_edge(i, a, j, c, Some(y))?;
                }
            }
        }
    }
    Ok(out)
}

/// Slots other than `slot` that may write a nonzero bit at position `p` of
/// a `gamma_f_to_xor` string: block (x, y, z) is written only by x and y.
fn block_writers(k: usize, b: usize, slot: usize, p: usize) -> usize {
    let q = k * k * k - 1 - p / b;
    let (x, y) = (q / (k * k), (q / k) % k);
    if x == y {
        0
    } else {
        [x, y].iter().filter(|&&s| s != slot).count()
    }
}

/// One node-colored graph of a partitioned matching triangles instance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PmtGraph {
    pub colors: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl PmtGraph {
    pub fn add_node(&mut self, color: usize) -> usize {
        self.colors.push(color);
        self.colors.len() - 1
    }
}

/// g disjoint node-colored graphs over a shared palette.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PmtInstance {
    pub graphs: Vec<PmtGraph>,
}

/// Triangle counts of one graph keyed by sorted color triple; triangles
/// repeating a color are ignored.
pub fn colored_triangles(gr: &PmtGraph) -> BTreeMap<[usize; 3], u128> {
    let nv = gr.colors.len();
    let words = nv.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; nv];
    for &(a, b) in &gr.edges {
        if a != b && a < nv && b < nv {
            adj[a][b / 64] |= 1 << (b % 64);
            adj[b][a / 64] |= 1 << (a % 64);
        }
    }
    let mut out = BTreeMap::new();
    for a in 0..nv {
        for b in a + 1..nv {
            if adj[a][b / 64] >> (b % 64) & 1 == 0 {
                continue;
            }
            for c in b + 1..nv {
                if adj[a][c / 64] >> (c % 64) & 1 == 1 && adj[b][c / 64] >> (c % 64) & 1 == 1 {
                    let mut key = [gr.colors[a], gr.colors[b], gr.colors[c]];
                    key.sort_unstable();
                    if key[0] != key[1] && key[1] != key[2] {
                        *out.entry(key).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    out
}

/// Σ over color triples of Π over graphs of that triple's triangle count.
pub fn count_pmt(inst: &PmtInstance) -> BigUint {
    let Some((first, rest)) = inst.graphs.split_first() else { return BigUint::zero() };
    let maps: Vec<_> = rest.iter().map(colored_triangles).collect();
    let mut total = BigUint::zero();
    'triples: for (key, &c0) in &colored_triangles(first) {
        let mut prod = BigUint::from(c0);
        for m in &maps {
            match m.get(key) {
                Some(&c) => prod *= c,
                None => continue 'triples,
            }
        }
        total += prod;
    }
    total
}

/// Factored zero-triangle to PMT. Colors: partition-0 node a → a, partition-1
/// node v → n + v, partition-2 node w → 2n + w. Graph j holds u, v_x and
/// w_y; a triangle (u, v_x, w_y) picks e01 = x, e12 from x − y (or y − x)
/// and e02 from −y, so color-(u,v,w) triangles in graph j biject with zero
/// triples in group j.
pub fn fzkc3_to_pmt(inst: &FfkcInstance) -> Result<PmtInstance> {
    if inst.k != 3 {
        return Err(Error::InvalidParameters("fzkc3_to_pmt needs k = 3".into()));
    }
    if inst.g == 0 {
        return Err(Error::InvalidParameters("fzkc3_to_pmt needs g >= 1".into()));
    }
    let kind = inst.predicate.kind;
    require_kind(&inst.predicate, &[PredKind::SumZero, PredKind::SumTarget])?;
    if inst.b > 16 {
        return Err(Error::WidthMismatch("PMT node sets need b <= 16".into()));
    }
    let n = inst.n;
    let m = 1i64 << inst.b;
    let modular = kind == PredKind::SumZero;
    // Value ranges for v_x and w_y.
    let xs: Vec<i64> = (0..m).collect();
    let ys: Vec<i64> = if modular { (0..m).collect() } else { (1 - m..=0).collect() };
    let norm = |z: i64| if modular { z.rem_euclid(m) } else { z };
    let has = |label: Option<&FactoredVector>, grp: usize, z: i64| -> bool {
        z >= 0 && label.is_some_and(|l| l.contains(grp, &BigUint::from(z as u64)))
    };
    let mut graphs = Vec::with_capacity(inst.g);
    for grp in 0..inst.g {
        let mut gr = PmtGraph::default();
        let us: Vec<usize> = (0..n).map(|a| gr.add_node(a)).collect();
        let vx: Vec<Vec<usize>> = (0..n).map(|v| xs.iter().map(|_| gr.add_node(n + v)).collect()).collect();
        let wy: Vec<Vec<usize>> = (0..n).map(|w| ys.iter().map(|_| gr.add_node(2 * n + w)).collect()).collect();
        for u in 0..n {
            for v in 0..n {
                for (xi, &x) in xs.iter().enumerate() {
                    if has(inst.edge(0, u, 1, v), grp, x) {
                        gr.edges.push((us[u], vx[v][xi]));
                    }
                }
            }
            for w in 0..n {
                for (yi, &y) in ys.iter().enumerate() {
                    if has(inst.edge(0, u, 2, w), grp, norm(-y)) {
                        gr.edges.push((us[u], wy[w][yi]));
                    }
                }
            }
        }
        for v in 0..n {
            for w in 0..n {
                let e = inst.edge(1, v, 2, w);
                for (xi, &x) in xs.iter().enumerate() {
                    for (yi, &y) in ys.iter().enumerate() {
                        // Zero form: e12 = y − x. Target form: e01 + e02 = e12, e12 = x − y.
                        let z = if modular { norm(y - x) } else { x - y };
                        if has(e, grp, z) {
                            gr.edges.push((vx[v][xi], wy[w][yi]));
                        }
                    }
                }
            }
        }
        graphs.push(gr);
    }
    Ok(PmtInstance { graphs })
}
