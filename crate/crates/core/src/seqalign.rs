//! Counting regular-expression alignments through an NFA whose only cycles
//! are self-loops, the factored 2-OV to regex construction, and the
//! inclusion–exclusion dynamic program for counting weighted LCSs.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;

use crate::error::{Error, Result};
use crate::factored::{format_bitstring, FkfInstance, PredKind};

/// Maximum operator nesting accepted by [`validate_t0`].
pub const MAX_DEPTH: usize = 5;

/// Regular expression AST. Symbols are bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Regex {
    Sym(u8),
    /// An empty `Or` matches nothing.
    Or(Vec<Regex>),
    Concat(Vec<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    pub fn set(symbols: &[u8]) -> Regex {
        Regex::Or(symbols.iter().map(|&s| Regex::Sym(s)).collect())
    }

    pub fn star_of(symbols: &[u8]) -> Regex {
        Regex::Star(Box::new(Regex::set(symbols)))
    }

    /// Operator nesting depth; a bare symbol has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Regex::Sym(_) => 0,
            Regex::Or(c) | Regex::Concat(c) => 1 + c.iter().map(Regex::depth).max().unwrap_or(0),
            Regex::Star(a) => 1 + a.depth(),
        }
    }

    /// Number of symbol occurrences.
    pub fn size(&self) -> usize {
        match self {
            Regex::Sym(_) => 1,
            Regex::Or(c) | Regex::Concat(c) => c.iter().map(Regex::size).sum(),
            Regex::Star(a) => a.size(),
        }
    }

    fn symbol_set(&self) -> Option<Vec<u8>> {
        match self {
            Regex::Sym(s) => Some(vec![*s]),
            Regex::Or(c) => c.iter().map(|x| if let Regex::Sym(s) = x { Some(*s) } else { None }).collect(),
            _ => None,
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regex::Sym(s) => write!(f, "{}", *s as char),
            Regex::Or(c) if c.iter().all(|x| matches!(x, Regex::Sym(_))) && c.len() != 1 => {
                write!(f, "[")?;
                for x in c {
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            Regex::Or(c) => {
                write!(f, "(")?;
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Regex::Concat(c) => {
                if c.is_empty() {
                    return write!(f, "()");
                }
                for x in c {
                    match x {
                        Regex::Concat(_) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
            Regex::Star(a) => match **a {
                Regex::Sym(_) | Regex::Or(_) => write!(f, "{a}*"),
                _ => write!(f, "({a})*"),
            },
        }
    }
}

/// Parses `|`, juxtaposition, `*`, parentheses and `[abc]` symbol classes.
/// Any other non-space character is a symbol.
pub fn parse_regex(s: &str) -> Result<Regex> {
    let toks: Vec<u8> = s.bytes().filter(|c| !c.is_ascii_whitespace()).collect();
    let mut p = Parser { t: &toks, at: 0 };
    let r = p.alt()?;
    if p.at != toks.len() {
        return Err(Error::Parse(format!("unexpected '{}' at {}", toks[p.at] as char, p.at)));
    }
    Ok(r)
}

struct Parser<'a> {
    t: &'a [u8],
    at: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.t.get(self.at).copied()
    }

    fn alt(&mut self) -> Result<Regex> {
        let mut alts = vec![self.concat()?];
        while self.peek() == Some(b'|') {
            self.at += 1;
            alts.push(self.concat()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Regex::Or(alts) })
    }

    fn concat(&mut self) -> Result<Regex> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == b'|' || c == b')' {
                break;
            }
            items.push(self.repeat()?);
        }
        match items.len() {
            0 => Err(Error::Parse(format!("empty expression at {}", self.at))),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(Regex::Concat(items)),
        }
    }

    fn repeat(&mut self) -> Result<Regex> {
        let mut a = self.atom()?;
        while self.peek() == Some(b'*') {
            self.at += 1;
            a = Regex::Star(Box::new(a));
        }
        Ok(a)
    }

    fn atom(&mut self) -> Result<Regex> {
        match self.peek() {
            Some(b'(') => {
                self.at += 1;
                let r = self.alt()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                self.at += 1;
                Ok(r)
            }
            Some(b'[') => {
                self.at += 1;
                let mut syms = Vec::new();
                loop {
                    match self.peek() {
                        Some(b']') => break,
                        Some(c) if !b"[()|*".contains(&c) => syms.push(c),
                        _ => return Err(Error::Parse("bad symbol class".into())),
                    }
                    self.at += 1;
                }
                self.at += 1;
                Ok(Regex::set(&syms))
            }
            Some(c) if !b")|*]".contains(&c) => {
                self.at += 1;
                Ok(Regex::Sym(c))
            }
            Some(c) => Err(Error::Parse(format!("unexpected '{}' at {}", c as char, self.at))),
            None => Err(Error::Parse("unexpected end".into())),
        }
    }
}

/// Accepts expressions whose stars apply only to symbols or sets of symbols,
/// nested at most [`MAX_DEPTH`] operators deep.
pub fn validate_t0(e: &Regex) -> Result<()> {
    if e.depth() > MAX_DEPTH {
        return Err(Error::UnsupportedRegexType(format!("depth {} > {MAX_DEPTH}", e.depth())));
    }
    fn walk(e: &Regex) -> Result<()> {
        match e {
            Regex::Sym(_) => Ok(()),
            Regex::Or(c) | Regex::Concat(c) => c.iter().try_for_each(walk),
            Regex::Star(a) => {
                if a.symbol_set().is_none_or(|s| s.is_empty()) {
                    Err(Error::UnsupportedRegexType(format!("star over '{a}', not a symbol set")))
                } else {
                    Ok(())
                }
            }
        }
    }
    walk(e)
}

/// NFA whose only cycles are symbol self-loops, with a single accepting
/// state that has no outgoing transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcyclicNfa {
    pub states: usize,
    pub start: usize,
    pub accept: usize,
    /// `(from, symbol or ε, to)`.
    pub transitions: Vec<(usize, Option<u8>, usize)>,
    /// States ordered so that every non-loop transition goes forward.
    order: Vec<usize>,
}

impl AcyclicNfa {
    pub fn new(states: usize, start: usize, accept: usize, transitions: Vec<(usize, Option<u8>, usize)>) -> Result<Self> {
        if start >= states || accept >= states || transitions.iter().any(|&(a, _, b)| a >= states || b >= states) {
            return Err(Error::InvalidParameters("transition or endpoint out of range".into()));
        }
        if transitions.iter().any(|&(a, _, _)| a == accept) {
            return Err(Error::InvalidParameters("accept state has an outgoing transition".into()));
        }
        if let Some(&(a, _, _)) = transitions.iter().find(|&&(a, s, b)| a == b && s.is_none()) {
            return Err(Error::NfaNotAcyclic(a));
        }
        // Kahn's algorithm on the graph without self-loops.
        let mut indeg = vec![0usize; states];
        let mut out = vec![Vec::new(); states];
        for &(a, _, b) in &transitions {
            if a != b {
                indeg[b] += 1;
                out[a].push(b);
            }
        }
        let mut order: Vec<usize> = (0..states).filter(|&s| indeg[s] == 0).collect();
        let mut i = 0;
        while i < order.len() {
            for &b in &out[order[i]] {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    order.push(b);
                }
            }
            i += 1;
        }
        if order.len() != states {
            let s = (0..states).find(|&s| indeg[s] > 0).unwrap();
            return Err(Error::NfaNotAcyclic(s));
        }
        Ok(AcyclicNfa { states, start, accept, transitions, order })
    }

    pub fn edge_count(&self) -> usize {
        self.transitions.len()
    }

    fn out_lists(&self) -> Vec<Vec<(Option<u8>, usize)>> {
        let mut out = vec![Vec::new(); self.states];
        for &(a, s, b) in &self.transitions {
            out[a].push((s, b));
        }
        out
    }

    /// `f[j][s]`: computations from s that consume a prefix of `text[j..]`
    /// and stop in the accepting state, mod r.
    fn suffix_table(&self, text: &[u8], r: u64) -> Vec<Vec<u64>> {
        let out = self.out_lists();
        let n = text.len();
        let r = r as u128;
        let mut f = vec![vec![0u64; self.states]; n + 1];
        for j in (0..=n).rev() {
            for &s in self.order.iter().rev() {
                if s == self.accept {
                    f[j][s] = (1 % r) as u64;
                    continue;
                }
                let mut acc = 0u128;
                for &(sym, t) in &out[s] {
                    match sym {
                        None => acc += f[j][t] as u128,
                        Some(c) if j < n && text[j] == c => acc += f[j + 1][t] as u128,
                        _ => {}
                    }
                }
                f[j][s] = (acc % r) as u64;
            }
        }
        f
    }

    /// Accepting computations on exactly `s`, by a forward pass.
    pub fn count_computations(&self, s: &[u8]) -> u128 {
        let out = self.out_lists();
        let mut cur = vec![0u128; self.states];
        cur[self.start] = 1;
        for step in 0..=s.len() {
            // ε-closure in forward order.
            for &q in &self.order {
                if cur[q] == 0 {
                    continue;
                }
                for &(sym, t) in &out[q] {
                    if sym.is_none() {
                        cur[t] += cur[q];
                    }
                }
            }
            if step == s.len() {
                break;
            }
            let mut next = vec![0u128; self.states];
            for q in 0..self.states {
                if cur[q] == 0 {
                    continue;
                }
                for &(sym, t) in &out[q] {
                    if sym == Some(s[step]) {
                        next[t] += cur[q];
                    }
                }
            }
            cur = next;
        }
        cur[self.accept]
    }

    pub fn accepts(&self, s: &[u8]) -> bool {
        self.count_computations(s) > 0
    }
}

struct Builder {
    states: usize,
    trans: Vec<(usize, Option<u8>, usize)>,
}

impl Builder {
    fn state(&mut self) -> usize {
        self.states += 1;
        self.states - 1
    }

    fn build(&mut self, e: &Regex) -> (usize, usize) {
        match e {
            Regex::Sym(c) => {
                let (s, t) = (self.state(), self.state());
                self.trans.push((s, Some(*c), t));
                (s, t)
            }
            Regex::Concat(items) => {
                let mut ends: Option<(usize, usize)> = None;
                for x in items {
                    let (s, t) = self.build(x);
                    ends = Some(match ends {
                        None => (s, t),
                        Some((s0, t0)) => {
                            self.trans.push((t0, None, s));
                            (s0, t)
                        }
                    });
                }
                ends.unwrap_or_else(|| {
                    let (s, t) = (self.state(), self.state());
                    self.trans.push((s, None, t));
                    (s, t)
                })
            }
            Regex::Or(alts) => {
                let (s, t) = (self.state(), self.state());
                for x in alts {
                    let (a, b) = self.build(x);
                    self.trans.push((s, None, a));
                    self.trans.push((b, None, t));
                }
                (s, t)
            }
            Regex::Star(a) => {
                let syms = a.symbol_set().expect("validated");
                let (s, mid, t) = (self.state(), self.state(), self.state());
                self.trans.push((s, None, mid));
                for c in syms {
                    self.trans.push((mid, Some(c), mid));
                }
                self.trans.push((mid, None, t));
                (s, t)
            }
        }
    }
}

/// Recursive construction: symbol edges, ε-chained concatenation, fresh
/// start and accept states around alternatives, and a single looping
/// state for starred symbol sets. Uses O(|E|) transitions.
pub fn regex_to_nfa(e: &Regex) -> Result<AcyclicNfa> {
    validate_t0(e)?;
    let mut b = Builder { states: 0, trans: Vec::new() };
    let (s, t) = b.build(e);
    AcyclicNfa::new(b.states, s, t, b.trans)
}

/// Σ over start positions j < |T| of the computations that match a prefix
/// of `T[j..]` (including the empty prefix), mod r.
pub fn count_matches_nfa(m: &AcyclicNfa, text: &[u8], r: u64) -> Result<u64> {
    if r == 0 {
        return Err(Error::InvalidParameters("modulus must be positive".into()));
    }
    let f = m.suffix_table(text, r);
    let total: u128 = (0..text.len()).map(|j| f[j][m.start] as u128).sum();
    Ok((total % r as u128) as u64)
}

pub fn count_matches(e: &Regex, text: &[u8], r: u64) -> Result<u64> {
    count_matches_nfa(&regex_to_nfa(e)?, text, r)
}

/// Random expression of the supported shape: an alternative of
/// concatenations of symbols, symbol sets, starred symbol sets and nested
/// alternatives of concatenations. Roughly `budget` symbols in total.
pub fn gen_t0_regex<R: Rng + ?Sized>(rng: &mut R, alphabet: &[u8], budget: usize) -> Regex {
    fn set<R: Rng + ?Sized>(rng: &mut R, alphabet: &[u8], left: &mut usize) -> Vec<u8> {
        let k = rng.gen_range(1..=alphabet.len().min(3).min((*left).max(1)));
        *left = left.saturating_sub(k);
        (0..k).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
    }
    fn leaf<R: Rng + ?Sized>(rng: &mut R, alphabet: &[u8], left: &mut usize, nest: bool) -> Regex {
        match rng.gen_range(0..if nest { 4 } else { 2 }) {
            0 => {
                *left = left.saturating_sub(1);
                Regex::Sym(alphabet[rng.gen_range(0..alphabet.len())])
            }
            1 => Regex::set(&set(rng, alphabet, left)),
            2 => Regex::star_of(&set(rng, alphabet, left)),
            _ => {
                let alts = rng.gen_range(1..=2);
                Regex::Or((0..alts).map(|_| concat(rng, alphabet, left, false)).collect())
            }
        }
    }
    fn concat<R: Rng + ?Sized>(rng: &mut R, alphabet: &[u8], left: &mut usize, nest: bool) -> Regex {
        let len = rng.gen_range(1..=3);
        Regex::Concat((0..len).map(|_| leaf(rng, alphabet, left, nest)).collect())
    }
    let mut left = budget.max(1);
    let mut alts = vec![concat(rng, alphabet, &mut left, true)];
    while left > 0 && alts.len() < 4 && rng.gen_bool(0.5) {
        alts.push(concat(rng, alphabet, &mut left, true));
    }
    Regex::Or(alts)
}

/// Symbols used by [`fkov2_to_regex`].
pub mod sym {
    pub const ZERO: u8 = b'0';
    pub const ONE: u8 = b'1';
    pub const GAP: u8 = b'2';
    pub const GROUP: u8 = b'3';
    pub const VECTOR: u8 = b'4';
}

fn bits_of(v: &BigUint, b: usize) -> Vec<u8> {
    format_bitstring(v, b).into_bytes()
}

/// Pattern from the first list and text from the second list of a factored
/// 2-OV instance, such that the number of alignments equals the count.
///
/// Each first-list vector becomes `4·[012]*·p₁·[012]*·3·…·3·[012]*·p_g·[012]*·4`
/// where p_j is the alternative over the group's strings of per-bit gadgets
/// (`0` for a 1-bit, `[01]` for a 0-bit). Each second-list vector becomes
/// its groups' strings joined by `2`, groups joined by `3`; vectors are
/// separated (and the text bracketed) by `4`.
pub fn fkov2_to_regex(inst: &FkfInstance) -> Result<(Regex, Vec<u8>)> {
    if inst.k != 2 || inst.predicate.kind != PredKind::Ov {
        return Err(Error::InvalidParameters("need a factored 2-OV instance".into()));
    }
    if inst.b == 0 || inst.g == 0 {
        return Err(Error::InvalidParameters("need b >= 1 and g >= 1".into()));
    }
    let pad = || Regex::star_of(&[sym::ZERO, sym::ONE, sym::GAP]);
    let mut alts = Vec::new();
    for u in &inst.lists[0] {
        let mut items = vec![Regex::Sym(sym::VECTOR)];
        for (j, group) in u.groups.iter().enumerate() {
            if j > 0 {
                items.push(Regex::Sym(sym::GROUP));
            }
            let vg: Vec<Regex> = group
                .iter()
                .map(|s| {
                    let gad = bits_of(s, inst.b).into_iter().map(|c| {
                        if c == b'1' {
                            Regex::Sym(sym::ZERO)
                        } else {
                            Regex::set(&[sym::ZERO, sym::ONE])
                        }
                    });
                    Regex::Concat(gad.collect())
                })
                .collect();
            items.push(pad());
            items.push(Regex::Or(vg));
            items.push(pad());
        }
        items.push(Regex::Sym(sym::VECTOR));
        alts.push(Regex::Concat(items));
    }
    let mut text = vec![sym::VECTOR];
    for v in &inst.lists[1] {
        for (j, group) in v.groups.iter().enumerate() {
            if j > 0 {
                text.push(sym::GROUP);
            }
            for (t, s) in group.iter().enumerate() {
                if t > 0 {
                    text.push(sym::GAP);
                }
                text.extend(bits_of(s, inst.b));
            }
        }
        text.push(sym::VECTOR);
    }
    Ok((Regex::Or(alts), text))
}

/// Reduces a big count mod r, for comparisons with [`count_matches`].
pub fn biguint_mod(x: &BigUint, r: u64) -> u64 {
    (x % BigUint::from(r)).to_u64().unwrap()
}

/// Longest-weight common subsequence value and the number of its
/// alignments (index-tuple sequences), mod r.
///
/// Cells hold the best weight ℓ and the count C for every prefix tuple v.
/// The count sums, with sign (−1)^{|J|+1}, the counts of v − e_J over
/// nonempty J whose best weight equals ℓ(v); when every last symbol agrees,
/// the alignments through v − 1 extended by that symbol are added.
pub fn count_kwlcs(strings: &[&[u8]], weights: &BTreeMap<u8, u64>, r: u64) -> Result<(u64, u64)> {
    let k = strings.len();
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidParameters(format!("k = {k} outside 1..=3")));
    }
    if r == 0 {
        return Err(Error::InvalidParameters("modulus must be positive".into()));
    }
    for s in strings {
        for c in s.iter() {
            match weights.get(c) {
                Some(&w) if w > 0 => {}
                _ => return Err(Error::InvalidParameters(format!("no positive weight for '{}'", *c as char))),
            }
        }
    }
    let dims: Vec<usize> = strings.iter().map(|s| s.len() + 1).collect();
    let mut stride = vec![1usize; k];
    for t in (0..k.saturating_sub(1)).rev() {
        stride[t] = stride[t + 1] * dims[t + 1];
    }
    let cells: usize = dims.iter().product();
    let mut len = vec![0u64; cells];
    let mut cnt = vec![0u64; cells];
    let r128 = r as i128;
    let mut v = vec![0usize; k];
    // Row-major order visits every v − e_J before v.
    for idx in 0..cells {
        let mut rest = idx;
        for t in 0..k {
            v[t] = rest / stride[t];
            rest %= stride[t];
        }
        if v.contains(&0) {
            cnt[idx] = 1 % r;
            continue;
        }
        let sym = strings[0][v[0] - 1];
        let all_match = (0..k).all(|t| strings[t][v[t] - 1] == sym);
        let diag: usize = stride.iter().sum();
        let best = if all_match {
            len[idx - diag] + weights[&sym]
        } else {
            (1u32..1 << k).filter(|&j| j != (1 << k) - 1).map(|j| len[idx - offset(j, &stride)]).max().unwrap_or(0)
        };
        let mut c: i128 = if all_match { cnt[idx - diag] as i128 } else { 0 };
        for j in 1u32..1 << k {
            let u = idx - offset(j, &stride);
            if len[u] == best {
                let sign = if j.count_ones() % 2 == 1 { 1 } else { -1 };
                c += sign * cnt[u] as i128;
            }
        }
        len[idx] = best;
        cnt[idx] = c.rem_euclid(r128) as u64;
    }
    Ok((len[cells - 1], cnt[cells - 1]))
}

fn offset(j: u32, stride: &[usize]) -> usize {
    stride.iter().enumerate().filter(|(t, _)| j >> t & 1 == 1).map(|(_, s)| s).sum()
}

/// Unit-weight special case of [`count_kwlcs`].
pub fn count_klcs(strings: &[&[u8]], r: u64) -> Result<(u64, u64)> {
    let weights = strings.iter().flat_map(|s| s.iter().map(|&c| (c, 1))).collect();
    count_kwlcs(strings, &weights, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        for s in ["a", "[ab]", "(a|bc)", "[ab]*c", "(a|[ab]*c)d"] {
            let e = parse_regex(s).unwrap();
            assert_eq!(parse_regex(&e.to_string()).unwrap(), e, "{s}");
        }
        assert!(parse_regex("(a").is_err());
        assert!(parse_regex("a||b").is_err());
    }

    #[test]
    fn validation() {
        assert!(validate_t0(&parse_regex("[ab]*c|d").unwrap()).is_ok());
        assert!(matches!(validate_t0(&parse_regex("(ab)*").unwrap()), Err(Error::UnsupportedRegexType(_))));
        assert!(matches!(validate_t0(&parse_regex("a**").unwrap()), Err(Error::UnsupportedRegexType(_))));
        assert!(matches!(validate_t0(&parse_regex("(a(b(c(d(e(f|g)|h)|i)|j)|k)|l)").unwrap()), Err(Error::UnsupportedRegexType(_))));
    }

    #[test]
    fn cyclic_nfa_rejected() {
        let e = AcyclicNfa::new(3, 0, 2, vec![(0, Some(b'a'), 1), (1, Some(b'b'), 0), (1, None, 2)]);
        assert!(matches!(e, Err(Error::NfaNotAcyclic(_))));
        let e = AcyclicNfa::new(2, 0, 1, vec![(0, None, 0), (0, None, 1)]);
        assert!(matches!(e, Err(Error::NfaNotAcyclic(0))));
        assert!(AcyclicNfa::new(2, 0, 1, vec![(0, Some(b'a'), 0), (0, None, 1)]).is_ok());
    }

    #[test]
    fn small_examples() {
        let m = regex_to_nfa(&Regex::Sym(b'a')).unwrap();
        assert_eq!(m.states, 2);
        assert_eq!(count_matches(&parse_regex("a|b").unwrap(), b"ab", 1_000).unwrap(), 2);
        assert_eq!(count_matches(&Regex::Sym(b'a'), b"", 1_000).unwrap(), 0);
        assert_eq!(count_klcs(&[b"ab", b"ab"], 1_000).unwrap(), (2, 1));
        assert_eq!(count_klcs(&[b"ab", b"ba"], 1_000).unwrap(), (1, 2));
    }
}
