use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use facred::avgov::{count_ov_avg, gen_ov};
use facred::corrector::{correct, CorrectionParams};
use facred::dpoly::{bit_slice_queries, recombine};
use facred::factored::{count_fkf, gen_fkf, FkfShape};
use facred::field::{crt_reconstruct, select_primes};
use facred::sampler::lift;
use facred::seqalign::{count_kwlcs, count_matches, parse_regex};
use facred::subgraphs::{brute_oracle, count_labeled_h_er, gen_kpartite, Pattern};
use facred::wc2ac::packed_exact_solver;
use facred::zkc::{count_small_range, gen_aczkc};
use facred::{FieldElem, PartitePolynomial, Predicate, SamplerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field_and_sampler(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let basis = select_primes(128, 2).unwrap();
    let residues: Vec<FieldElem> = basis.primes.iter().map(|&p| FieldElem::new(r.gen_range(0..p), p)).collect();
    c.bench_function("crt_reconstruct", |b| b.iter(|| crt_reconstruct(black_box(&residues)).unwrap()));
    let cfg = SamplerConfig::new(61, 0.5, 128, 6).unwrap();
    c.bench_function("lift_p61_t6", |b| b.iter(|| lift(FieldElem::new(17, 61), &cfg, &mut r).unwrap()));
}

fn corrector(c: &mut Criterion) {
    let p = 101;
    let params = CorrectionParams::new(3, p).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut oracle = |x: &[u64], _: &mut ChaCha8Rng| Ok((x[0] * x[1] % p * x[2] + x[3]) % p);
    c.bench_function("correct_d3_p101", |b| b.iter(|| correct(&[1, 2, 3, 4], &mut oracle, &params, &mut r).unwrap()));
}

fn bit_slices(c: &mut Criterion) {
    let mut g = c.benchmark_group("bit_slice_recombine");
    let p = 101;
    for t in [4u32, 8] {
        let partition: Vec<usize> = (0..12).map(|v| v % 3).collect();
        let monos = (0..4u32).flat_map(|x| (0..4u32).flat_map(move |y| (0..4u32).map(move |z| (vec![3 * x, 3 * y + 1, 3 * z + 2], 1))));
        let poly = PartitePolynomial::from_monomials(12, partition, 3, p, monos);
        let lifted: Vec<u128> = (0..12u128).map(|v| (v * 37 + 5) % (1 << t)).collect();
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| {
                let qs: Vec<_> = bit_slice_queries(&lifted, t, &poly).unwrap().collect();
                let vals: Vec<FieldElem> = qs.iter().map(|q| FieldElem::new(poly.evaluate_bits(&q.assignment), p)).collect();
                recombine(&vals, &qs).unwrap()
            })
        });
    }
    g.finish();
}

fn factored(c: &mut Criterion) {
    let inst = gen_fkf(8, 2, 2, 2, 0.5, 3, Predicate::ov(2)).unwrap();
    c.bench_function("count_fkf_ov_n8", |b| b.iter(|| count_fkf(black_box(&inst)).unwrap()));
    let mut solver = packed_exact_solver(FkfShape::of(&inst), &inst.predicate).unwrap();
    let x = facred::factored::fkf_indicator(&inst);
    c.bench_function("packed_solver_ov_n8", |b| b.iter(|| solver(black_box(&x))));
}

fn counting(c: &mut Criterion) {
    let z = gen_aczkc(10, 4, 8, 4).unwrap();
    c.bench_function("zkc_small_range_k4_n10", |b| b.iter(|| count_small_range(black_box(&z)).unwrap()));
    let ov = gen_ov(1024, 8, 0.5, 5).unwrap();
    c.bench_function("avgov_short_n1024_d8", |b| b.iter(|| count_ov_avg(black_box(&ov))));
    let h = Pattern::triangle();
    let g = gen_kpartite(3, 5, 2, 6);
    c.bench_function("edgesclusion_triangle_n5_b2", |b| {
        b.iter(|| count_labeled_h_er(&g, &h, &h, 2, &mut brute_oracle(&h), 7).unwrap().count)
    });
}

fn sequences(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let e = parse_regex("[ab]*(a|c)[bc]*b").unwrap();
    let text: Vec<u8> = (0..2000).map(|_| b"abc"[r.gen_range(0..3)]).collect();
    c.bench_function("regex_count_2000", |b| b.iter(|| count_matches(&e, black_box(&text), 1_000_000_007).unwrap()));
    let s: Vec<Vec<u8>> = (0..3).map(|_| (0..60).map(|_| b"acgt"[r.gen_range(0..4)]).collect()).collect();
    let refs: Vec<&[u8]> = s.iter().map(|x| x.as_slice()).collect();
    let w: BTreeMap<u8, u64> = b"acgt".iter().map(|&ch| (ch, 1 + (ch % 3) as u64)).collect();
    c.bench_function("kwlcs_3x60", |b| b.iter(|| count_kwlcs(black_box(&refs), &w, 1_000_000_007).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = field_and_sampler, corrector, bit_slices, factored, counting, sequences
}
criterion_main!(benches);
