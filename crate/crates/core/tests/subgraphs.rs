use std::collections::{BTreeSet, HashMap};

use facred::dpoly::verify_partite;
use facred::factored::canonical_pairs;
use facred::subgraphs::*;
use facred::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All permutations of 0..k, generated independently of the library.
fn perms(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in perms(k - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, k - 1);
            out.push(q);
        }
    }
    out
}

fn tuples(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out.into_iter().flat_map(|t| (0..n).map(move |a| [t.clone(), vec![a]].concat())).collect();
    }
    out
}

/// Copies of H that use one vertex per partition: for every k-tuple, the
/// number of distinct edge sets isomorphic to H among present cross edges.
fn oracle_one_per_partition(h: &Pattern, g: &PartitionedGraph) -> u128 {
    let ps = perms(h.k);
    let mut total = 0;
    for t in tuples(g.k, g.n) {
        let mut seen = BTreeSet::new();
        for p in &ps {
            let img: BTreeSet<(usize, usize)> = h.edges.iter().map(|&(a, b)| (p[a].min(p[b]), p[a].max(p[b]))).collect();
            if img.iter().all(|&(i, j)| g.has(i, t[i], j, t[j])) {
                seen.insert(img);
            }
        }
        total += seen.len() as u128;
    }
    total
}

/// Labeled count of pattern over its non-isolated vertices: full k-tuple
/// count divided by n per unused label.
fn oracle_labeled(p: &Pattern, g: &PartitionedGraph) -> u128 {
    let used: BTreeSet<usize> = p.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let full = tuples(g.k, g.n).into_iter().filter(|t| p.edges.iter().all(|&(i, j)| g.has(i, t[i], j, t[j]))).count() as u128;
    full / (g.n as u128).pow((g.k - used.len()) as u32)
}

fn complete(k: usize, n: usize) -> PartitionedGraph {
    let mut g = PartitionedGraph::empty(k, n);
    for (i, j) in canonical_pairs(k) {
        for a in 0..n {
            for c in 0..n {
                g.set(i, a, j, c, true);
            }
        }
    }
    g
}

fn c4() -> Pattern {
    Pattern::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()
}

#[test]
fn chghp_brute_examples() {
    let h = Pattern::triangle();
    let mut g = complete(3, 1);
    assert_eq!(count_chghp_brute(&h, &g).unwrap(), 1);
    g.set(0, 0, 2, 0, false);
    assert_eq!(count_chghp_brute(&h, &g).unwrap(), 0);
    for seed in 0..20 {
        let g = gen_hpartite(&h, 5, 2, seed);
        let mut want = 0;
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    want += (g.has(0, a, 1, b) && g.has(0, a, 2, c) && g.has(1, b, 2, c)) as u128;
                }
            }
        }
        assert_eq!(count_chghp_brute(&h, &g).unwrap(), want);
    }
}

#[test]
fn chghp_polynomial_matches_brute() {
    for h in [Pattern::triangle(), Pattern::p3(), Pattern::k4()] {
        let n = 2;
        let p = chghp_prime(n, h.k);
        assert!(p >= 2 * (n as u64).pow(h.k as u32) && p <= (n as u64).pow(2 * h.k as u32));
        let poly = build_chghp_poly(&h, n, p).unwrap();
        assert!(verify_partite(&poly).is_ok());
        assert_eq!(poly.d, h.e());
        let empty = PartitionedGraph::empty(h.k, n);
        assert_eq!(poly.evaluate_raw(&chghp_assignment(&h, &empty)), 0);
        for seed in 0..20 {
            let g = gen_hpartite(&h, n, 2, seed);
            let want = count_chghp_brute(&h, &g).unwrap() % p as u128;
            assert_eq!(poly.evaluate_raw(&chghp_assignment(&h, &g)) as u128, want);
        }
    }
    let e = build_chghp_poly_capped(&Pattern::k4(), 7, chghp_prime(7, 4), 100);
    assert!(matches!(e, Err(Error::MonomialCapExceeded { .. })));
}

#[test]
fn labeled_tree_examples() {
    let edge = Pattern::new(2, &[(0, 1)]).unwrap();
    let mut g = PartitionedGraph::empty(2, 2);
    g.set(0, 0, 1, 0, true);
    g.set(0, 1, 1, 0, true);
    assert_eq!(count_labeled_trees(&edge, &g).unwrap(), 2);
    assert_eq!(count_labeled_trees(&edge, &PartitionedGraph::empty(2, 3)).unwrap(), 0);

    let star = Pattern::new(3, &[(0, 1), (0, 2)]).unwrap();
    let tri = complete(3, 1);
    assert_eq!(count_labeled_trees(&star, &tri).unwrap(), 1);
    assert!(count_labeled_trees(&Pattern::triangle(), &tri).is_err());
    assert!(count_labeled_trees(&Pattern::new(4, &[(0, 1), (2, 3)]).unwrap(), &complete(4, 1)).is_err());
}

#[test]
fn labeled_trees_match_brute() {
    let trees = [
        Pattern::new(3, &[(0, 1), (1, 2)]).unwrap(),
        Pattern::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap(),
        Pattern::new(4, &[(0, 2), (2, 1), (1, 3)]).unwrap(),
        Pattern::new(4, &[(1, 3)]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.gen_range(1..=5);
        let b = rng.gen_range(2..=3);
        let mut g = gen_kpartite(4, n, b, rng.gen());
        // Edges inside partitions must be ignored.
        g.set(0, 0, 0, n - 1, true);
        for t in &trees {
            assert_eq!(count_labeled_trees(t, &g).unwrap(), oracle_labeled(t, &g));
            assert_eq!(count_labeled_brute(t, &g).unwrap(), oracle_labeled(t, &g));
        }
    }
}

#[test]
fn disconnected_union() {
    assert_eq!(count_disconnected_union(2, 3), 6);
    assert_eq!(count_disconnected_union(0, 9), 0);
    assert_eq!(count_disconnected_union(9, 0), 0);
    let l = Pattern::new(4, &[(0, 1)]).unwrap();
    let l2 = Pattern::new(4, &[(2, 3)]).unwrap();
    let both = Pattern::new(4, &[(0, 1), (2, 3)]).unwrap();
    for seed in 0..30 {
        let g = gen_kpartite(4, 4, 2, seed);
        let (a, b) = (count_labeled_trees(&l, &g).unwrap(), count_labeled_trees(&l2, &g).unwrap());
        assert_eq!(count_disconnected_union(a, b), oracle_labeled(&both, &g));
    }
}

#[test]
fn base_count_tallies() {
    let g = gen_kpartite(3, 4, 2, 11);
    let base = base_counts(&g);
    assert_eq!(base.vertices, vec![4, 4, 4]);
    for (q, (i, j)) in canonical_pairs(3).into_iter().enumerate() {
        let mut tally = 0;
        for a in 0..4 {
            for c in 0..4 {
                tally += g.has(i, a, j, c) as u128;
            }
        }
        assert_eq!(base.edges[q], tally);
    }
    let e = base_counts(&PartitionedGraph::empty(3, 5));
    assert_eq!(e.vertices, vec![5, 5, 5]);
    assert!(e.edges.iter().all(|&x| x == 0));
}

#[test]
fn unlabeled_counter_matches_oracle_on_kpartite() {
    for h in [Pattern::triangle(), Pattern::p3(), Pattern::k4(), c4()] {
        for seed in 0..5 {
            let g = gen_kpartite(h.k, 3, 2, seed);
            let mut o = brute_oracle(&h);
            assert_eq!(one_per_partition(&g, &mut o), oracle_one_per_partition(&h, &g) as i128);
        }
    }
}

#[test]
fn warm_up_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for h in [Pattern::triangle(), Pattern::p3(), Pattern::k4()] {
        for b in [2, 3] {
            for _ in 0..3 {
                let n = rng.gen_range(2..=4);
                let g = gen_kpartite(h.k, n, b, rng.gen());
                let run = count_labeled_h_er(&g, &h, &h, b, &mut brute_oracle(&h), rng.gen()).unwrap();
                let lhs: u128 = run.family_counts.iter().sum();
                assert_eq!(lhs, warm_up_multiplicity(&h, b) * oracle_one_per_partition(&h, &complete(h.k, n)));
            }
        }
    }
}

#[test]
fn edgesclusion_matches_brute() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for h in [Pattern::triangle(), Pattern::p3(), Pattern::k4(), c4()] {
        for b in [2, 3] {
            for _ in 0..4 {
                let n = rng.gen_range(1..=4);
                let g = gen_kpartite(h.k, n, b, rng.gen());
                let run = count_labeled_h_er(&g, &h, &h, b, &mut brute_oracle(&h), rng.gen()).unwrap();
                assert_eq!(run.count, oracle_labeled(&h, &g), "{h:?} b={b} n={n}");
                for (&mask, &v) in &run.table {
                    let sub: Vec<(usize, usize)> =
                        canonical_pairs(h.k).into_iter().enumerate().filter(|(q, _)| mask >> q & 1 == 1).map(|(_, p)| p).collect();
                    assert_eq!(v, oracle_labeled(&Pattern::new(h.k, &sub).unwrap(), &g));
                }
            }
        }
    }
}

#[test]
fn single_edge_and_empty() {
    let h = Pattern::new(2, &[(0, 1)]).unwrap();
    let g = gen_kpartite(2, 5, 2, 1);
    let run = count_labeled_h_er(&g, &h, &h, 2, &mut brute_oracle(&h), 2).unwrap();
    assert_eq!(run.count, g.cross_edges(0, 1));
    let empty = PartitionedGraph::empty(3, 4);
    let t = Pattern::triangle();
    assert_eq!(count_labeled_h_er(&empty, &t, &t, 2, &mut brute_oracle(&t), 0).unwrap().count, 0);
}

#[test]
fn step_with_true_table() {
    let h = Pattern::k4();
    let (n, b) = (3, 2);
    let g = gen_kpartite(4, n, b, 77);
    let run = count_labeled_h_er(&g, &h, &h, b, &mut brute_oracle(&h), 1).unwrap();
    let full = h.mask_in(4);
    let mut table = HashMap::new();
    for &mask in run.table.keys() {
        if mask != full {
            let sub: Vec<(usize, usize)> =
                canonical_pairs(4).into_iter().enumerate().filter(|(q, _)| mask >> q & 1 == 1).map(|(_, p)| p).collect();
            table.insert(mask, oracle_labeled(&Pattern::new(4, &sub).unwrap(), &g));
        }
    }
    let got = edgesclusion_step(&run.family_counts, &table, full, &h, n, b).unwrap();
    assert_eq!(got, oracle_labeled(&h, &g));
}

#[test]
fn corrupted_family_is_detected() {
    let h = c4();
    let (n, b) = (3, 2);
    let g = gen_kpartite(4, n, b, 4);
    let run = count_labeled_h_er(&g, &h, &h, b, &mut brute_oracle(&h), 8).unwrap();
    let mut fam = run.family_counts.clone();
    fam[0] += 1;
    let mut table = run.table.clone();
    table.remove(&h.mask_in(4));
    let e = edgesclusion_step(&fam, &table, h.mask_in(4), &h, n, b);
    assert!(matches!(e, Err(Error::EdgesclusionInconsistency(_))), "{e:?}");
}

#[test]
fn kpartite_via_er_matches_brute() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for h in [Pattern::triangle(), Pattern::p3()] {
        for _ in 0..8 {
            let n = rng.gen_range(1..=7);
            let g = gen_kpartite(3, n, 2, rng.gen());
            let got = count_h_kpartite_via_er(&g, &h, 2, &mut brute_oracle(&h), rng.gen()).unwrap();
            assert_eq!(got, oracle_one_per_partition(&h, &g));
            assert_eq!(got, brute_count_one_per_partition(&h, &g));
        }
    }
    let g = PartitionedGraph::empty(3, 5);
    let t = Pattern::triangle();
    assert_eq!(count_h_kpartite_via_er(&g, &t, 2, &mut brute_oracle(&t), 0).unwrap(), 0);
}

#[test]
fn rejects_bad_parameters() {
    let t = Pattern::triangle();
    let g = gen_kpartite(3, 3, 2, 0);
    assert!(count_labeled_h_er(&g, &t, &t, 1, &mut brute_oracle(&t), 0).is_err());
    let mut inside = g.clone();
    inside.set(0, 0, 0, 1, true);
    assert!(count_labeled_h_er(&inside, &t, &t, 2, &mut brute_oracle(&t), 0).is_err());
    let p3 = Pattern::p3();
    assert!(count_labeled_h_er(&g, &p3, &t, 2, &mut brute_oracle(&p3), 0).is_err());
}
