//! Brute-force oracles shared by the integration tests. They avoid the
//! library's counting code paths on purpose.
#![allow(dead_code)]

use facred::{BigUint, FactoredVector, FfkcInstance, FkfInstance, PredKind};
use num_traits::{One, Zero};

pub fn pred_holds(kind: PredKind, t: &[BigUint], b: usize) -> bool {
    let modulus = BigUint::one() << b;
    match kind {
        PredKind::Ov => {
            let mut acc = &modulus - 1u32;
            for s in t {
                acc &= s;
            }
            acc.is_zero()
        }
        PredKind::Xor => t.iter().fold(BigUint::zero(), |a, s| a ^ s).is_zero(),
        PredKind::SumZero => (t.iter().sum::<BigUint>() % &modulus).is_zero(),
        PredKind::SumTarget => {
            let (last, head) = t.split_last().unwrap();
            head.iter().sum::<BigUint>() == *last
        }
        PredKind::Table => panic!("table predicates are checked by membership"),
    }
}

/// Every choice of one string from each set, in order.
pub fn product<T: Clone>(sets: &[&[T]]) -> Vec<Vec<T>> {
    let mut out = vec![vec![]];
    for s in sets {
        out = out
            .into_iter()
            .flat_map(|p| {
                s.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(x.clone());
                    q
                })
            })
            .collect();
    }
    out
}

pub fn oracle_tuple(vs: &[&FactoredVector], inst_pred: &facred::Predicate, b: usize) -> BigUint {
    let g = vs[0].g;
    let mut prod = BigUint::one();
    for i in 0..g {
        let sets: Vec<&[BigUint]> = vs.iter().map(|v| v.groups[i].as_slice()).collect();
        let c = product(&sets)
            .into_iter()
            .filter(|t| match inst_pred.kind {
                PredKind::Table => inst_pred.table.contains(t),
                k => pred_holds(k, t, b),
            })
            .count();
        prod *= c;
    }
    prod
}

pub fn oracle_fkf(inst: &FkfInstance) -> BigUint {
    let idx: Vec<usize> = (0..inst.n).collect();
    let lists: Vec<&[usize]> = (0..inst.k).map(|_| idx.as_slice()).collect();
    let mut total = BigUint::zero();
    for t in product(&lists) {
        let vs: Vec<&FactoredVector> = t.iter().enumerate().map(|(j, &v)| &inst.lists[j][v]).collect();
        total += oracle_tuple(&vs, &inst.predicate, inst.b);
    }
    total
}

pub fn oracle_ffkc(inst: &FfkcInstance) -> BigUint {
    let idx: Vec<usize> = (0..inst.n).collect();
    let parts: Vec<&[usize]> = (0..inst.k).map(|_| idx.as_slice()).collect();
    let mut total = BigUint::zero();
    'tuples: for nodes in product(&parts) {
        let mut labels = Vec::new();
        for i in 0..inst.k {
            for j in i + 1..inst.k {
                match inst.edge(i, nodes[i], j, nodes[j]) {
                    Some(l) => labels.push(l),
                    None => continue 'tuples,
                }
            }
        }
        total += oracle_tuple(&labels, &inst.predicate, inst.b);
    }
    total
}
