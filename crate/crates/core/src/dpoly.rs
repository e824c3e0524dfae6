//! Strongly d-partite polynomials over F_p and their bit-slice decomposition.

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::field::{add_mod, mul_mod, pow_mod, FieldElem};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default ceiling on the degree.
pub const DEFAULT_DEGREE_CAP: usize = 16;
/// Default ceiling on t^d slice queries.
pub const DEFAULT_SLICE_BUDGET: u128 = 10_000_000;

/// Sum of monomials, each taking one variable from every partition.
///
/// Partitions are numbered `0..d`. Monomials are stored flat: monomial `j`
/// occupies `vars[j*d .. (j+1)*d]`, ordered by partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitePolynomial {
    pub n_vars: usize,
    pub d: usize,
    pub partition: Vec<usize>,
    pub vars: Vec<u32>,
    pub mult: Vec<u64>,
    pub p: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartiteViolation {
    WrongArity { monomial: usize, len: usize },
    UnknownVariable { monomial: usize, var: u32 },
    RepeatedVariable { monomial: usize, var: u32 },
    PartitionHit { monomial: usize, partition: usize, times: usize },
    PartitionOutOfRange { var: u32, partition: usize },
}

impl PartitePolynomial {
    /// Builds a polynomial from unordered monomials, canonicalizing order and
    /// merging duplicates. No structural check is done here; see [`verify_partite`].
    pub fn from_monomials<I>(n_vars: usize, partition: Vec<usize>, d: usize, p: u64, monos: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, u64)>,
    {
        let mut merged: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (mut m, c) in monos {
            m.sort_by_key(|&v| (partition.get(v as usize).copied().unwrap_or(usize::MAX), v));
            let e = merged.entry(m).or_insert(0);
            *e = add_mod(*e, c % p, p);
        }
        let mut vars = Vec::new();
        let mut mult = Vec::new();
        for (m, c) in merged {
            if c != 0 {
                vars.extend(m);
                mult.push(c);
            }
        }
        PartitePolynomial { n_vars, d, partition, vars, mult, p }
    }

    /// Builds from monomials already in partition order with no duplicates.
    pub fn from_sorted_raw(n_vars: usize, partition: Vec<usize>, d: usize, p: u64, vars: Vec<u32>, mult: Vec<u64>) -> Self {
        PartitePolynomial { n_vars, d, partition, vars, mult, p }
    }

    pub fn monomial_count(&self) -> usize {
        self.mult.len()
    }

    pub fn monomial(&self, j: usize) -> &[u32] {
        &self.vars[j * self.d..(j + 1) * self.d]
    }

    /// Direct evaluation mod p.
    pub fn evaluate(&self, x: &[FieldElem]) -> Result<FieldElem> {
        if x.len() != self.n_vars {
            return Err(Error::ArityMismatch { expected: self.n_vars, got: x.len() });
        }
        let raw: Vec<u64> = x.iter().map(|e| e.value % self.p).collect();
        Ok(FieldElem { value: self.evaluate_raw(&raw), p: self.p })
    }

    /// Evaluation on residues already reduced mod p; length is not checked.
    pub fn evaluate_raw(&self, x: &[u64]) -> u64 {
        let p = self.p;
        let mut acc = 0u64;
        for (j, &c) in self.mult.iter().enumerate() {
            let mut term = c;
            for &v in self.monomial(j) {
                term = mul_mod(term, x[v as usize], p);
                if term == 0 {
                    break;
                }
            }
            acc = add_mod(acc, term, p);
        }
        acc
    }

    /// Evaluation on a zero-one assignment: counts monomials whose variables are all set.
    pub fn evaluate_bits(&self, x: &Bits) -> u64 {
        let mut acc = 0u64;
        for (j, &c) in self.mult.iter().enumerate() {
            if self.monomial(j).iter().all(|&v| x.get(v as usize)) {
                acc = add_mod(acc, c, self.p);
            }
        }
        acc
    }
}

/// First violation of the one-variable-per-partition rule, if any.
pub fn verify_partite(poly: &PartitePolynomial) -> std::result::Result<(), PartiteViolation> {
    for (v, &q) in poly.partition.iter().enumerate() {
        if q >= poly.d {
            return Err(PartiteViolation::PartitionOutOfRange { var: v as u32, partition: q });
        }
    }
    if poly.d == 0 {
        if poly.vars.is_empty() {
            return Ok(());
        }
        return Err(PartiteViolation::WrongArity { monomial: 0, len: poly.vars.len() });
    }
    if poly.vars.len() != poly.mult.len() * poly.d {
        return Err(PartiteViolation::WrongArity { monomial: poly.vars.len() / poly.d, len: poly.vars.len() % poly.d });
    }
    let mut hits = vec![0usize; poly.d];
    for j in 0..poly.monomial_count() {
        hits.iter_mut().for_each(|h| *h = 0);
        let m = poly.monomial(j);
        for (a, &v) in m.iter().enumerate() {
            if v as usize >= poly.n_vars {
                return Err(PartiteViolation::UnknownVariable { monomial: j, var: v });
            }
            if m[..a].contains(&v) {
                return Err(PartiteViolation::RepeatedVariable { monomial: j, var: v });
            }
            hits[poly.partition[v as usize]] += 1;
        }
        if let Some((q, &times)) = hits.iter().enumerate().find(|(_, &h)| h != 1) {
            return Err(PartiteViolation::PartitionHit { monomial: j, partition: q, times });
        }
    }
    Ok(())
}

/// Checks a list of monomials given as raw variable lists (possibly of the wrong
/// length) against a partition map.
pub fn verify_monomials(partition: &[usize], d: usize, monos: &[Vec<u32>]) -> std::result::Result<(), PartiteViolation> {
    for (j, m) in monos.iter().enumerate() {
        let mut hits = vec![0usize; d];
        for (a, &v) in m.iter().enumerate() {
            if m[..a].contains(&v) {
                return Err(PartiteViolation::RepeatedVariable { monomial: j, var: v });
            }
            let q = *partition.get(v as usize).ok_or(PartiteViolation::UnknownVariable { monomial: j, var: v })?;
            if q >= d {
                return Err(PartiteViolation::PartitionOutOfRange { var: v, partition: q });
            }
            hits[q] += 1;
        }
        if let Some((q, &times)) = hits.iter().enumerate().find(|(_, &h)| h != 1) {
            return Err(PartiteViolation::PartitionHit { monomial: j, partition: q, times });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceQuery {
    pub slice_index: Vec<u32>,
    pub assignment: Bits,
    pub weight: u64,
}

/// Lazily enumerates the t^d slice queries of a lifted point.
///
/// For partition ℓ and bit r the set of variables in ℓ whose lifted value has
/// bit r is precomputed; an assignment is the union of one such set per partition.
pub struct SliceStream {
    masks: Vec<Vec<Bits>>,
    t: u32,
    d: usize,
    p: u64,
    n_vars: usize,
    next: Option<Vec<u32>>,
}

/// Number of slice queries for a given bit-length and degree.
pub fn slice_count(t: u32, d: usize) -> u128 {
    (t as u128).saturating_pow(d as u32)
}

pub fn bit_slice_queries(lifted: &[u128], t: u32, poly: &PartitePolynomial) -> Result<SliceStream> {
    bit_slice_queries_with_budget(lifted, t, poly, DEFAULT_SLICE_BUDGET)
}

pub fn bit_slice_queries_with_budget(lifted: &[u128], t: u32, poly: &PartitePolynomial, budget: u128) -> Result<SliceStream> {
    if lifted.len() != poly.n_vars {
        return Err(Error::ArityMismatch { expected: poly.n_vars, got: lifted.len() });
    }
    if t == 0 {
        return Err(Error::InvalidParameters("slice bit-length must be positive".into()));
    }
    let q = slice_count(t, poly.d);
    if q > budget {
        return Err(Error::SliceBudgetExceeded { queries: q, budget });
    }
    let mut masks = vec![vec![Bits::zeros(poly.n_vars); t as usize]; poly.d];
    for (v, &y) in lifted.iter().enumerate() {
        let part = poly.partition[v];
        for r in 0..t {
            if y >> r & 1 == 1 {
                masks[part][r as usize].set(v, true);
            }
        }
    }
    Ok(SliceStream { masks, t, d: poly.d, p: poly.p, n_vars: poly.n_vars, next: Some(vec![0; poly.d]) })
}

impl Iterator for SliceStream {
    type Item = SliceQuery;
    fn next(&mut self) -> Option<SliceQuery> {
        let idx = self.next.take()?;
        let mut assignment = Bits::zeros(self.n_vars);
        let mut exp = 0u64;
        for (l, &r) in idx.iter().enumerate() {
            assignment.or_assign(&self.masks[l][r as usize]);
            exp += r as u64;
        }
        let weight = pow_mod(2, exp, self.p);
        // Odometer with the last partition varying fastest.
        let mut succ = idx.clone();
        let mut pos = self.d;
        let mut done = true;
        while pos > 0 {
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.t {
                done = false;
                break;
            }
            succ[pos] = 0;
        }
        if !done {
            self.next = Some(succ);
        }
        Some(SliceQuery { slice_index: idx, assignment, weight })
    }
}

/// Σ weight_j · value_j mod p.
pub fn recombine(values: &[FieldElem], queries: &[SliceQuery]) -> Result<FieldElem> {
    if values.len() != queries.len() {
        return Err(Error::ArityMismatch { expected: queries.len(), got: values.len() });
    }
    let weights: Vec<u64> = queries.iter().map(|q| q.weight).collect();
    let p = values.first().map(|v| v.p).unwrap_or(2);
    recombine_weights(values, &weights, p)
}

pub fn recombine_weights(values: &[FieldElem], weights: &[u64], p: u64) -> Result<FieldElem> {
    if values.len() != weights.len() {
        return Err(Error::ArityMismatch { expected: weights.len(), got: values.len() });
    }
    let mut acc = 0;
    for (v, &w) in values.iter().zip(weights) {
        acc = add_mod(acc, mul_mod(v.value % p, w % p, p), p);
    }
    Ok(FieldElem { value: acc, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy(p: u64) -> PartitePolynomial {
        PartitePolynomial::from_monomials(2, vec![0, 1], 2, p, vec![(vec![0, 1], 1)])
    }

    #[test]
    fn evaluate_examples() {
        let f = xy(7);
        let x = [FieldElem::new(3, 7), FieldElem::new(4, 7)];
        assert_eq!(f.evaluate(&x).unwrap().value, 5);
        let empty = PartitePolynomial::from_monomials(2, vec![0, 1], 2, 7, vec![]);
        assert_eq!(empty.evaluate(&x).unwrap().value, 0);
        assert_eq!(f.evaluate(&x[..1]), Err(Error::ArityMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn partite_checks() {
        let ok = PartitePolynomial::from_monomials(4, vec![0, 0, 1, 1], 2, 7, vec![(vec![0, 2], 1), (vec![1, 3], 1)]);
        assert_eq!(verify_partite(&ok), Ok(()));
        let bad = PartitePolynomial::from_sorted_raw(2, vec![0, 0], 2, 7, vec![0, 1], vec![1]);
        assert!(matches!(verify_partite(&bad), Err(PartiteViolation::PartitionHit { monomial: 0, .. })));
        assert!(matches!(
            verify_monomials(&[0, 1, 2], 3, &[vec![0, 1]]),
            Err(PartiteViolation::PartitionHit { monomial: 0, partition: 2, times: 0 })
        ));
        let rep = PartitePolynomial::from_sorted_raw(2, vec![0, 1], 2, 7, vec![0, 0], vec![1]);
        assert!(matches!(verify_partite(&rep), Err(PartiteViolation::RepeatedVariable { .. })));
    }

    #[test]
    fn slice_examples() {
        let f = PartitePolynomial::from_monomials(1, vec![0], 1, 11, vec![(vec![0], 1)]);
        let qs: Vec<_> = bit_slice_queries(&[3], 2, &f).unwrap().collect();
        assert_eq!(qs.len(), 2);
        assert_eq!((qs[0].assignment.get(0), qs[0].weight), (true, 1));
        assert_eq!((qs[1].assignment.get(0), qs[1].weight), (true, 2));

        let g = xy(101);
        let qs: Vec<_> = bit_slice_queries(&[3, 2], 2, &g).unwrap().collect();
        let vals: Vec<_> = qs.iter().map(|q| FieldElem::new(g.evaluate_bits(&q.assignment), 101)).collect();
        assert_eq!(recombine(&vals, &qs).unwrap().value, 6);

        let h = PartitePolynomial::from_monomials(4, vec![0, 0, 1, 1], 2, 11, vec![(vec![0, 2], 1)]);
        assert_eq!(bit_slice_queries(&[1, 2, 3, 4], 3, &h).unwrap().count(), 9);
        assert!(matches!(
            bit_slice_queries_with_budget(&[1, 2, 3, 4], 3, &h, 8),
            Err(Error::SliceBudgetExceeded { queries: 9, budget: 8 })
        ));
    }

    #[test]
    fn recombine_trivia() {
        let v = [FieldElem::new(0, 7); 3];
        assert_eq!(recombine_weights(&v, &[1, 2, 4], 7).unwrap().value, 0);
        assert_eq!(recombine_weights(&[FieldElem::new(5, 7)], &[1], 7).unwrap().value, 5);
        assert!(recombine_weights(&v, &[1], 7).is_err());
    }
}
