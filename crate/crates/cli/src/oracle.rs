//! Brute-force oracles for `verify`: expand every factored vector into its
//! concatenated vectors and test the predicate block by block.

use facred::factored::canonical_pairs;
use facred::{BigUint, FactoredVector, FfkcInstance, FkfInstance, Predicate};

/// Refuse oracle runs above this many predicate checks.
pub const ORACLE_CAP: u128 = 50_000_000;

fn expand(v: &FactoredVector) -> Vec<Vec<&BigUint>> {
    let mut out = vec![vec![]];
    for grp in &v.groups {
        out = out.into_iter().flat_map(|pre| grp.iter().map(move |s| [pre.clone(), vec![s]].concat())).collect();
    }
    out
}

fn work(vs: &[&FactoredVector]) -> u128 {
    vs.iter().map(|v| v.groups.iter().map(|g| g.len() as u128).product::<u128>()).product()
}

/// Accepted tuples of expanded vectors, one from each of `vs`.
fn tuple_count(vs: &[&FactoredVector], pred: &Predicate, g: usize, b: usize) -> u128 {
    let expanded: Vec<Vec<Vec<&BigUint>>> = vs.iter().map(|v| expand(v)).collect();
    let mut total = 0u128;
    let mut idx = vec![0usize; vs.len()];
    if expanded.iter().any(|e| e.is_empty()) {
        return 0;
    }
    loop {
        let ok = (0..g).all(|blk| {
            let t: Vec<&BigUint> = idx.iter().enumerate().map(|(j, &i)| expanded[j][i][blk]).collect();
            pred.eval(&t, b)
        });
        total += ok as u128;
        let mut j = vs.len();
        loop {
            if j == 0 {
                return total;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < expanded[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

fn index_tuples(k: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n.pow(k as u32)).map(move |mut c| {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = c % n;
            c /= n;
        }
        t
    })
}

pub fn fkf(inst: &FkfInstance) -> Result<u128, String> {
    if inst.n == 0 {
        return Ok(0);
    }
    let mut budget = 0u128;
    let mut total = 0u128;
    for t in index_tuples(inst.k, inst.n) {
        let vs: Vec<&FactoredVector> = t.iter().enumerate().map(|(j, &i)| &inst.lists[j][i]).collect();
        budget += work(&vs);
        if budget > ORACLE_CAP {
            return Err(format!("instance too large for the expanded oracle (> {ORACLE_CAP} checks)"));
        }
        total += tuple_count(&vs, &inst.predicate, inst.g, inst.b);
    }
    Ok(total)
}

pub fn ffkc(inst: &FfkcInstance) -> Result<u128, String> {
    if inst.n == 0 {
        return Ok(0);
    }
    let pairs = canonical_pairs(inst.k);
    let mut budget = 0u128;
    let mut total = 0u128;
    'tuples: for t in index_tuples(inst.k, inst.n) {
        let mut labels = Vec::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            match inst.edge(i, t[i], j, t[j]) {
                Some(l) => labels.push(l),
                None => continue 'tuples,
            }
        }
        budget += work(&labels);
        if budget > ORACLE_CAP {
            return Err(format!("instance too large for the expanded oracle (> {ORACLE_CAP} checks)"));
        }
        total += tuple_count(&labels, &inst.predicate, inst.g, inst.b);
    }
    Ok(total)
}
