use std::collections::BTreeMap;

use facred::factored::{count_fkf, gen_fkf, worked_example, FkfInstance, Predicate};
use facred::seqalign::*;
use facred::{Error, FactoredVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: u64 = 1_000_000_007;

/// Number of parse derivations of exactly `s` by `e`.
fn derivations(e: &Regex, s: &[u8]) -> u128 {
    match e {
        Regex::Sym(c) => (s == [*c]) as u128,
        Regex::Or(alts) => alts.iter().map(|a| derivations(a, s)).sum(),
        Regex::Concat(items) => {
            // ways[i]: derivations of s[..i] by the items seen so far.
            let mut ways = vec![0u128; s.len() + 1];
            ways[0] = 1;
            for it in items {
                let mut next = vec![0u128; s.len() + 1];
                for i in 0..=s.len() {
                    if ways[i] == 0 {
                        continue;
                    }
                    for j in i..=s.len() {
                        next[j] += ways[i] * derivations(it, &s[i..j]);
                    }
                }
                ways = next;
            }
            ways[s.len()]
        }
        Regex::Star(a) => {
            let Regex::Or(alts) = &**a else {
                return s.iter().all(|c| derivations(a, &[*c]) == 1) as u128;
            };
            s.iter().map(|c| alts.iter().filter(|x| **x == Regex::Sym(*c)).count() as u128).product()
        }
    }
}

fn brute_matches(e: &Regex, t: &[u8]) -> u128 {
    let mut total = 0;
    for i in 0..t.len() {
        for j in i..=t.len() {
            total += derivations(e, &t[i..j]);
        }
    }
    total
}

fn all_strings(alpha: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        layer = layer.iter().flat_map(|s: &Vec<u8>| alpha.iter().map(move |&c| [s.as_slice(), &[c]].concat())).collect();
        out.extend(layer.iter().cloned());
    }
    out
}

#[test]
fn nfa_examples() {
    let m = regex_to_nfa(&Regex::Sym(b'a')).unwrap();
    assert_eq!((m.states, m.edge_count()), (2, 1));
    let or = regex_to_nfa(&parse_regex("a|b").unwrap()).unwrap();
    assert!(or.accepts(b"a") && or.accepts(b"b"));
    assert!(!or.accepts(b"") && !or.accepts(b"ab"));
    let st = regex_to_nfa(&parse_regex("[ab]*c").unwrap()).unwrap();
    assert!(st.accepts(b"aabc") && st.accepts(b"c"));
    assert!(!st.accepts(b"aab") && !st.accepts(b"cc"));
}

#[test]
fn nfa_language_and_computations_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let strings = all_strings(b"abc", 6);
    for _ in 0..30 {
        let e = gen_t0_regex(&mut rng, b"abc", 8);
        let m = regex_to_nfa(&e).unwrap();
        assert!(m.edge_count() <= 6 * e.size() + 8, "{e}: {} edges", m.edge_count());
        for s in &strings {
            assert_eq!(m.count_computations(s), derivations(&e, s), "{e} on {:?}", String::from_utf8_lossy(s));
        }
    }
}

#[test]
fn unsupported_shapes() {
    for s in ["(ab)*", "(a*)*", "((a|b)c)*"] {
        let e = parse_regex(s).unwrap();
        assert!(matches!(regex_to_nfa(&e), Err(Error::UnsupportedRegexType(_))), "{s}");
        assert!(matches!(count_matches(&e, b"ab", R), Err(Error::UnsupportedRegexType(_))));
    }
}

#[test]
fn count_matches_examples() {
    assert_eq!(count_matches(&parse_regex("a|b").unwrap(), b"ab", R).unwrap(), 2);
    assert_eq!(count_matches(&Regex::Sym(b'a'), b"", R).unwrap(), 0);
    // Two stars split "aa" three ways, one star twice, plus the empty matches.
    let e = parse_regex("a*a*").unwrap();
    assert_eq!(count_matches(&e, b"aa", R).unwrap() as u128, brute_matches(&e, b"aa"));
}

#[test]
fn count_matches_vs_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let budget = rng.gen_range(1..=20);
        let e = gen_t0_regex(&mut rng, b"abc", budget);
        assert!(e.size() <= 26);
        let len = rng.gen_range(0..=12);
        let t: Vec<u8> = (0..len).map(|_| b"abc"[rng.gen_range(0..3)]).collect();
        let want = brute_matches(&e, &t);
        assert_eq!(count_matches(&e, &t, R).unwrap() as u128, want % R as u128, "{e}");
        assert_eq!(count_matches(&e, &t, 7).unwrap() as u128, want % 7);
    }
}

#[test]
fn regex_reduction_paper_pair() {
    let (u, v, _) = worked_example();
    let inst = FkfInstance::new(vec![vec![u], vec![v]], 2, 3, Predicate::ov(2)).unwrap();
    let (p, t) = fkov2_to_regex(&inst).unwrap();
    assert!(p.depth() <= MAX_DEPTH);
    assert_eq!(count_matches(&p, &t, R).unwrap(), 8);
}

#[test]
fn regex_reduction_empty_group() {
    let (u, _, w) = worked_example();
    let inst = FkfInstance::new(vec![vec![w.clone()], vec![u.clone()]], 2, 3, Predicate::ov(2)).unwrap();
    let (p, t) = fkov2_to_regex(&inst).unwrap();
    assert_eq!(count_matches(&p, &t, R).unwrap(), 0);
    let inst = FkfInstance::new(vec![vec![u], vec![w]], 2, 3, Predicate::ov(2)).unwrap();
    let (p, t) = fkov2_to_regex(&inst).unwrap();
    assert_eq!(count_matches(&p, &t, R).unwrap(), 0);
}

#[test]
fn regex_reduction_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let g = rng.gen_range(1..=2);
        let inst = gen_fkf(n, 2, g, 2, 0.5, rng.gen(), Predicate::ov(2)).unwrap();
        let (p, t) = fkov2_to_regex(&inst).unwrap();
        let want = biguint_mod(&count_fkf(&inst).unwrap(), R);
        assert_eq!(count_matches(&p, &t, R).unwrap(), want);
    }
    let bad = gen_fkf(2, 2, 1, 2, 0.5, 0, Predicate::xor(2)).unwrap();
    assert!(fkov2_to_regex(&bad).is_err());
    let one = FactoredVector::from_u64(1, &[&[0, 1]]).unwrap();
    let inst = FkfInstance::new(vec![vec![one.clone()], vec![one]], 1, 1, Predicate::ov(2)).unwrap();
    let (p, t) = fkov2_to_regex(&inst).unwrap();
    assert_eq!(count_matches(&p, &t, R).unwrap(), 3);
}

/// Alignments of a max-weight common subsequence: choose positions in the
/// first string, then multiply the embedding counts in the others.
fn brute_kwlcs(strings: &[&[u8]], w: &BTreeMap<u8, u64>) -> (u64, u128) {
    fn embeddings(x: &[u8], s: &[u8]) -> u128 {
        let mut ways = vec![0u128; x.len() + 1];
        ways[0] = 1;
        for &c in s {
            for i in (0..x.len()).rev() {
                if x[i] == c {
                    ways[i + 1] += ways[i];
                }
            }
        }
        ways[x.len()]
    }
    let first = strings[0];
    let mut best = (0u64, 0u128);
    for mask in 0u32..1 << first.len() {
        let x: Vec<u8> = (0..first.len()).filter(|i| mask >> i & 1 == 1).map(|i| first[i]).collect();
        let ways: u128 = strings[1..].iter().map(|s| embeddings(&x, s)).product();
        if ways == 0 {
            continue;
        }
        let wt: u64 = x.iter().map(|c| w[c]).sum();
        if wt > best.0 {
            best = (wt, ways);
        } else if wt == best.0 {
            best.1 += ways;
        }
    }
    best
}

#[test]
fn klcs_examples() {
    assert_eq!(count_klcs(&[b"ab", b"ab"], R).unwrap(), (2, 1));
    assert_eq!(count_klcs(&[b"ab", b"ba"], R).unwrap(), (1, 2));
    assert_eq!(count_klcs(&[b"abcab", b"abcab", b"abcab"], R).unwrap(), (5, 1));
    assert_eq!(count_klcs(&[b"ab", b"cd"], R).unwrap(), (0, 1));
    assert_eq!(count_klcs(&[b"", b"abc"], R).unwrap(), (0, 1));
    assert!(count_klcs(&[b"a", b"a", b"a", b"a"], R).is_err());
    let w = BTreeMap::from([(b'a', 1)]);
    assert!(count_kwlcs(&[b"ab", b"a"], &w, R).is_err());
}

#[test]
fn kwlcs_vs_brute() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..200 {
        let k = 2 + case % 2;
        let alpha = &b"abc"[..rng.gen_range(1..=3)];
        let w: BTreeMap<u8, u64> = alpha.iter().map(|&c| (c, rng.gen_range(1..=4))).collect();
        let strs: Vec<Vec<u8>> =
            (0..k).map(|_| (0..rng.gen_range(0..=7)).map(|_| alpha[rng.gen_range(0..alpha.len())]).collect()).collect();
        let refs: Vec<&[u8]> = strs.iter().map(|s| s.as_slice()).collect();
        let (bl, bc) = brute_kwlcs(&refs, &w);
        let (l, c) = count_kwlcs(&refs, &w, R).unwrap();
        assert_eq!((l, c as u128), (bl, bc % R as u128), "{strs:?} {w:?}");
        let (_, c7) = count_kwlcs(&refs, &w, 7).unwrap();
        assert_eq!(c7 as u128, bc % 7);
    }
}

#[test]
fn klcs_pairs_vs_brute() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let strs: Vec<Vec<u8>> = (0..2).map(|_| (0..rng.gen_range(0..=8)).map(|_| b"ab"[rng.gen_range(0..2)]).collect()).collect();
        let refs: Vec<&[u8]> = strs.iter().map(|s| s.as_slice()).collect();
        let unit = BTreeMap::from([(b'a', 1), (b'b', 1)]);
        let (bl, bc) = brute_kwlcs(&refs, &unit);
        assert_eq!(count_klcs(&refs, R).unwrap(), (bl, bc as u64));
    }
}

#[test]
fn lcs_length_monotone() {
    let a = b"abcabba";
    let b = b"cbabac";
    let mut prev_row = vec![0u64; b.len() + 1];
    for i in 0..=a.len() {
        let mut row = Vec::new();
        for j in 0..=b.len() {
            let (l, _) = count_klcs(&[&a[..i], &b[..j]], R).unwrap();
            assert!(l >= prev_row[j]);
            if j > 0 {
                assert!(l >= row[j - 1]);
            }
            row.push(l);
        }
        prev_row = row;
    }
}
