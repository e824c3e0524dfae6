use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use facred::avgov::{brute_count_ov, count_ov_avg, gen_ov, regime};
use facred::corrector::{amplify, correct, CorrectionParams};
use facred::dpoly::{bit_slice_queries, recombine};
use facred::factored::{circledcirc, count_ffkc, count_fkf, detect_ffkc, detect_fkf, gen_ffkc, gen_fkf, worked_example, FkfShape};
use facred::io::{from_json, to_json, Instance};
use facred::seqalign::{biguint_mod, count_kwlcs, count_matches, fkov2_to_regex, parse_regex};
use facred::subgraphs::{
    brute_count_one_per_partition, brute_oracle, count_h_kpartite_via_er, count_labeled_brute, count_labeled_h_er, gen_kpartite, Pattern,
};
use facred::wc2ac::{packed_exact_solver, solve_fkf_instance, AvgSolver, PipelineConfig};
use facred::xforms::{count_pmt, ffkc_to_fzkc, fkf_to_xor, fkf_xor_to_ov, fkf_xor_to_sum, fzkc3_to_pmt, sum_to_zkc, target_to_zero};
use facred::zkc::{brute_count, count_small_range, count_via_detection, exact_detector, gen_aczkc, ZkcConfig};
use facred::{FieldElem, PartitePolynomial, PredKind, Predicate};
use rand::Rng;
use serde_json::{json, Value};

use crate::report::{substream, Ctx, ExperimentReport};
use crate::*;

pub struct Output {
    pub json: Value,
    pub mismatch: bool,
}

type Res = Result<Output, String>;

fn ok(json: Value) -> Res {
    Ok(Output { json, mismatch: false })
}

fn e2s(e: facred::Error) -> String {
    e.to_string()
}

fn read_instance(p: &Path) -> Result<Instance, String> {
    let s = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    from_json(&s).map_err(e2s)
}

fn write_or_embed(out: &Option<std::path::PathBuf>, text: String) -> Result<Option<Value>, String> {
    match out {
        Some(p) => {
            std::fs::write(p, text + "\n").map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(None)
        }
        None => Ok(Some(serde_json::from_str(&text).map_err(|e| e.to_string())?)),
    }
}

fn report(ctx: &Ctx, params: Value, trials: (Vec<report::Trial>, f64), min_success: f64) -> Res {
    let rep = ExperimentReport::new(ctx, params, trials.0, trials.1);
    let mismatch = rep.success_frequency < min_success;
    Ok(Output { json: serde_json::to_value(&rep).expect("serializable"), mismatch })
}

pub fn run(cli: Cli, argv: Vec<String>) -> Res {
    if cli.jobs == 0 {
        return Err("--jobs must be at least 1".into());
    }
    let ctx = Ctx { argv, seed: cli.seed, jobs: cli.jobs };
    match cli.cmd {
        Cmd::Gen(a) => gen(&ctx, a),
        Cmd::Count(a) => match read_instance(&a.instance)? {
            Instance::Fkf(f) => ok(json!({"kind": "fkf", "count": count_fkf(&f).map_err(e2s)?.to_string()})),
            Instance::Ffkc(f) => ok(json!({"kind": "ffkc", "count": count_ffkc(&f).map_err(e2s)?.to_string()})),
        },
        Cmd::Detect(a) => match read_instance(&a.instance)? {
            Instance::Fkf(f) => ok(json!({"kind": "fkf", "detected": detect_fkf(&f).map_err(e2s)?})),
            Instance::Ffkc(f) => ok(json!({"kind": "ffkc", "detected": detect_ffkc(&f).map_err(e2s)?})),
        },
        Cmd::Reduce(a) => reduce(a),
        Cmd::FrameworkDemo(a) => framework(&ctx, a),
        Cmd::CorrectDemo(a) => correct_demo(&ctx, a),
        Cmd::Zkc(a) => zkc(&ctx, a),
        Cmd::Avgov(a) => avgov(&ctx, a),
        Cmd::Subgraph(a) => subgraph(&ctx, a),
        Cmd::Regex(a) => regex(a),
        Cmd::Lcs(a) => lcs(a),
        Cmd::Verify(a) => verify(&a.instance),
        Cmd::Bench(a) => bench(&ctx, a),
    }
}

fn predicate(name: &str, arity: usize) -> Result<Predicate, String> {
    let kind = PredKind::parse(name).map_err(e2s)?;
    if kind == PredKind::Table {
        return Err("table predicates are read from instance files, not generated".into());
    }
    Ok(Predicate::new(kind, arity))
}

fn gen(ctx: &Ctx, a: GenArgs) -> Res {
    let text = match a.kind {
        GenKind::Fkf => to_json(&Instance::Fkf(gen_fkf(a.n, a.k, a.g, a.b, a.mu, ctx.seed, predicate(&a.predicate, a.k)?).map_err(e2s)?)),
        GenKind::Ffkc => {
            let ell = a.k * a.k.saturating_sub(1) / 2;
            to_json(&Instance::Ffkc(gen_ffkc(a.n, a.k, a.g, a.b, a.mu, ctx.seed, predicate(&a.predicate, ell)?).map_err(e2s)?))
        }
        GenKind::Zkc => {
            let z = gen_aczkc(a.n, a.k, a.r, ctx.seed).map_err(e2s)?;
            serde_json::to_string_pretty(&json!({"kind": "zkc", "k": z.k, "n": z.n, "r": z.r, "weights": z.weights})).unwrap()
        }
        GenKind::Ov => {
            let o = gen_ov(a.n, a.d, a.mu, ctx.seed).map_err(e2s)?;
            let row = |v: &Vec<u64>| (0..o.d).map(|i| if v[i / 64] >> (i % 64) & 1 == 1 { '1' } else { '0' }).collect::<String>();
            let a_rows: Vec<String> = o.a.iter().map(row).collect();
            let b_rows: Vec<String> = o.b.iter().map(row).collect();
            serde_json::to_string_pretty(&json!({"kind": "ov", "d": o.d, "mu": o.mu, "a": a_rows, "b": b_rows})).unwrap()
        }
    };
    match write_or_embed(&a.out, text)? {
        Some(v) => ok(v),
        None => ok(json!({"written": a.out.unwrap().display().to_string()})),
    }
}

fn reduce(a: ReduceArgs) -> Res {
    let inst = read_instance(&a.instance)?;
    let count_of = |i: &Instance| match i {
        Instance::Fkf(f) => count_fkf(f).map(|c| c.to_string()),
        Instance::Ffkc(f) => count_ffkc(f).map(|c| c.to_string()),
    };
    let need_fkf = || match &inst {
        Instance::Fkf(f) => Ok(f),
        Instance::Ffkc(_) => Err(format!("--to {:?} needs an fkf instance", a.to)),
    };
    let need_ffkc = || match &inst {
        Instance::Ffkc(f) => Ok(f),
        Instance::Fkf(_) => Err(format!("--to {:?} needs an ffkc instance", a.to)),
    };
    let reduced = match a.to {
        ReduceTo::Xor => Instance::Fkf(fkf_to_xor(need_fkf()?).map_err(e2s)?),
        ReduceTo::Ov => Instance::Fkf(fkf_xor_to_ov(need_fkf()?).map_err(e2s)?),
        ReduceTo::Sum => Instance::Fkf(fkf_xor_to_sum(need_fkf()?).map_err(e2s)?),
        ReduceTo::TargetZero => Instance::Fkf(target_to_zero(need_fkf()?).map_err(e2s)?),
        ReduceTo::Zkc => Instance::Ffkc(sum_to_zkc(need_fkf()?).map_err(e2s)?),
        ReduceTo::Fzkc => Instance::Ffkc(ffkc_to_fzkc(need_ffkc()?).map_err(e2s)?),
        ReduceTo::Pmt => {
            // Matching-triangle instances have no file format; report counts only.
            let src = need_ffkc()?;
            let pmt = fzkc3_to_pmt(src).map_err(e2s)?;
            let after = count_pmt(&pmt).to_string();
            let mut out = json!({"to": "pmt", "graphs": pmt.graphs.len(), "count_after": after});
            if a.check {
                let before = count_ffkc(src).map_err(e2s)?.to_string();
                let mismatch = before != after;
                out["count_before"] = json!(before);
                out["match"] = json!(!mismatch);
                return Ok(Output { json: out, mismatch });
            }
            return ok(out);
        }
    };
    let mut out = json!({"to": format!("{:?}", a.to).to_lowercase()});
    let mut mismatch = false;
    if a.check {
        let (before, after) = (count_of(&inst).map_err(e2s)?, count_of(&reduced).map_err(e2s)?);
        mismatch = before != after;
        out["count_before"] = json!(before);
        out["count_after"] = json!(after);
        out["match"] = json!(!mismatch);
    }
    if let Some(v) = write_or_embed(&a.out, to_json(&reduced))? {
        out["instance"] = v;
    }
    Ok(Output { json: out, mismatch })
}

fn framework(ctx: &Ctx, a: FrameworkArgs) -> Res {
    let pred = match a.problem.as_str() {
        "fkov2" => Predicate::ov(2),
        "fkxor2" => Predicate::xor(2),
        p => return Err(format!("unknown problem '{p}' (fkov2, fkxor2)")),
    };
    if !(0.0..=1.0).contains(&a.error_rate) {
        return Err("--error-rate must lie in [0, 1]".into());
    }
    // Surface parameter errors before spawning trials.
    let probe = gen_fkf(a.n, 2, a.g, a.b, a.mu, 0, pred.clone()).map_err(e2s)?;
    let _ = packed_exact_solver(FkfShape::of(&probe), &pred).map_err(e2s)?;
    let cfg = PipelineConfig::default();
    let trials = ctx.trials("framework", a.trials, |_, r| {
        let inst = gen_fkf(a.n, 2, a.g, a.b, a.mu, r.gen(), pred.clone()).expect("checked parameters");
        let truth = count_fkf(&inst).expect("well-formed").to_string();
        let f = packed_exact_solver(FkfShape::of(&inst), &pred).expect("checked shape");
        let mut solver = if a.error_rate > 0.0 { AvgSolver::noisy(f, a.error_rate, r.gen()) } else { AvgSolver::exact(f) };
        let got = solve_fkf_instance(&inst, &mut solver, &cfg, a.mu, r).map(|(c, _)| c.to_string()).map_err(e2s);
        (truth, got)
    });
    let params = json!({"problem": a.problem, "n": a.n, "g": a.g, "b": a.b, "mu": a.mu, "error_rate": a.error_rate});
    report(ctx, params, trials, a.min_success)
}

/// Every monomial of total degree ≤ d in `vars` variables, as exponent vectors.
fn exponents(vars: usize, d: u32) -> Vec<Vec<u32>> {
    if vars == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for e in 0..=d {
        for mut rest in exponents(vars - 1, d - e) {
            rest.insert(0, e);
            out.push(rest);
        }
    }
    out
}

fn eval_dense(terms: &[(u64, Vec<u32>)], x: &[u64], p: u64) -> u64 {
    terms.iter().fold(0, |acc, (c, e)| {
        let t = x.iter().zip(e).fold(*c as u128, |t, (&xi, &ei)| t * (xi as u128).pow(ei) % p as u128);
        ((acc as u128 + t) % p as u128) as u64
    })
}

fn correct_demo(ctx: &Ctx, a: CorrectArgs) -> Res {
    if a.vars == 0 || a.vars > 8 || a.d == 0 || a.d > 6 {
        return Err("correct-demo supports 1..=8 variables and degree 1..=6".into());
    }
    if !(0.0..=1.0).contains(&a.corruption) || a.reps == 0 {
        return Err("--corruption must lie in [0, 1] and --reps must be positive".into());
    }
    let params = CorrectionParams::new(a.d, a.p).map_err(e2s)?;
    let mut pr = substream(ctx.seed, "poly", 0);
    let terms: Vec<(u64, Vec<u32>)> = exponents(a.vars, a.d as u32).into_iter().map(|e| (pr.gen_range(0..a.p), e)).collect();
    let p = a.p;
    let trials = ctx.trials("correct", a.trials, |_, r| {
        let x: Vec<u64> = (0..a.vars).map(|_| r.gen_range(0..p)).collect();
        let mut oracle = |pt: &[u64], r: &mut rand_chacha::ChaCha8Rng| -> facred::Result<u64> {
            let v = eval_dense(&terms, pt, p);
            Ok(if r.gen_bool(a.corruption) { (v + r.gen_range(1..p)) % p } else { v })
        };
        let got = amplify(|r| correct(&x, &mut oracle, &params, r), a.reps, r);
        (eval_dense(&terms, &x, p), got.map(|v| v.to_string()).map_err(e2s))
    });
    let info = json!({"p": a.p, "d": a.d, "vars": a.vars, "corruption": a.corruption, "reps": a.reps, "m": params.m});
    report(ctx, info, trials, a.min_success)
}

fn zkc(ctx: &Ctx, a: ZkcArgs) -> Res {
    gen_aczkc(a.n, a.k, a.r, 0).map_err(e2s)?;
    let cfg = ZkcConfig::default();
    let trials = ctx.trials("zkc", a.trials, |_, r| {
        let inst = gen_aczkc(a.n, a.k, a.r, r.gen()).expect("checked parameters");
        let got = match a.method {
            ZkcMethod::Detection => count_via_detection(&inst, &mut exact_detector(), &cfg, r),
            ZkcMethod::SmallRange => count_small_range(&inst),
            ZkcMethod::Brute => Ok(brute_count(&inst)),
        };
        (brute_count(&inst), got.map(|c| c.to_string()).map_err(e2s))
    });
    let params = json!({"n": a.n, "k": a.k, "r": a.r, "method": format!("{:?}", a.method).to_lowercase()});
    report(ctx, params, trials, 1.0)
}

fn avgov(ctx: &Ctx, a: AvgovArgs) -> Res {
    let probe = gen_ov(a.n, a.d, a.mu, 0).map_err(e2s)?;
    let trials = ctx.trials("avgov", a.trials, |_, r| {
        let inst = gen_ov(a.n, a.d, a.mu, r.gen()).expect("checked parameters");
        (brute_count_ov(&inst), Ok(count_ov_avg(&inst).to_string()))
    });
    let params = json!({"n": a.n, "d": a.d, "mu": a.mu, "regime": format!("{:?}", regime(&probe)).to_lowercase()});
    // The long regime answers zero by design; disagreements there are expected rare events.
    report(ctx, params, trials, 0.0)
}

fn pattern(s: &str) -> Result<Pattern, String> {
    match s {
        "triangle" => Ok(Pattern::triangle()),
        "p3" => Ok(Pattern::p3()),
        "k4" => Ok(Pattern::k4()),
        other => Pattern::parse(other).map_err(e2s),
    }
}

fn subgraph(ctx: &Ctx, a: SubgraphArgs) -> Res {
    let h = pattern(&a.pattern)?;
    // Surface parameter errors once, outside the trial loop.
    let probe = gen_kpartite(h.k, a.n, a.b, 0);
    if a.one_per_partition {
        count_h_kpartite_via_er(&probe, &h, a.b, &mut brute_oracle(&h), 0).map_err(e2s)?;
    } else {
        count_labeled_h_er(&probe, &h, &h, a.b, &mut brute_oracle(&h), 0).map_err(e2s)?;
    }
    let trials = ctx.trials("subgraph", a.trials, |_, r| {
        let g = gen_kpartite(h.k, a.n, a.b, r.gen());
        let seed = r.gen();
        if a.one_per_partition {
            let got = count_h_kpartite_via_er(&g, &h, a.b, &mut brute_oracle(&h), seed);
            (brute_count_one_per_partition(&h, &g), got.map(|c| c.to_string()).map_err(e2s))
        } else {
            let got = count_labeled_h_er(&g, &h, &h, a.b, &mut brute_oracle(&h), seed);
            (count_labeled_brute(&h, &g).expect("checked pattern"), got.map(|run| run.count.to_string()).map_err(e2s))
        }
    });
    let params = json!({"pattern": a.pattern, "k": h.k, "edges": h.edges, "n": a.n, "b": a.b, "one_per_partition": a.one_per_partition});
    report(ctx, params, trials, 1.0)
}

fn regex(a: RegexArgs) -> Res {
    if a.modulus < 2 {
        return Err("--modulus must be at least 2".into());
    }
    if let Some(path) = &a.instance {
        let Instance::Fkf(inst) = read_instance(path)? else {
            return Err("--instance must be an fkf instance".into());
        };
        let (pat, text) = fkov2_to_regex(&inst).map_err(e2s)?;
        let got = count_matches(&pat, &text, a.modulus).map_err(e2s)?;
        let want = biguint_mod(&count_fkf(&inst).map_err(e2s)?, a.modulus);
        return Ok(Output {
            json: json!({
                "pattern": pat.to_string(),
                "text": String::from_utf8_lossy(&text),
                "count": got,
                "oracle": want,
                "match": got == want,
                "modulus": a.modulus,
            }),
            mismatch: got != want,
        });
    }
    let e = parse_regex(a.pattern.as_deref().unwrap_or_default()).map_err(e2s)?;
    let count = count_matches(&e, a.text.as_bytes(), a.modulus).map_err(e2s)?;
    ok(json!({"pattern": e.to_string(), "depth": e.depth(), "text": a.text, "count": count, "modulus": a.modulus}))
}

fn lcs(a: LcsArgs) -> Res {
    if a.modulus < 2 {
        return Err("--modulus must be at least 2".into());
    }
    let strs: Vec<&[u8]> = a.strings.iter().map(|s| s.as_bytes()).collect();
    let weights: BTreeMap<u8, u64> = match &a.weights {
        Some(spec) => spec
            .split(',')
            .map(|kv| {
                let (k, v) = kv.split_once('=').ok_or_else(|| format!("weight '{kv}' is not sym=value"))?;
                let &[c] = k.trim().as_bytes() else { return Err(format!("weight key '{k}' must be one byte")) };
                Ok((c, v.trim().parse::<u64>().map_err(|e| format!("weight '{kv}': {e}"))?))
            })
            .collect::<Result<_, String>>()?,
        None => strs.iter().flat_map(|s| s.iter()).map(|&c| (c, 1)).collect(),
    };
    let (length, count) = count_kwlcs(&strs, &weights, a.modulus).map_err(e2s)?;
    let w: BTreeMap<String, u64> = weights.iter().map(|(&c, &v)| ((c as char).to_string(), v)).collect();
    ok(json!({"strings": a.strings, "weights": w, "weight": length, "count": count, "modulus": a.modulus}))
}

fn verify(path: &Path) -> Res {
    let inst = read_instance(path)?;
    let (kind, fast, slow) = match &inst {
        Instance::Fkf(f) => ("fkf", count_fkf(f).map_err(e2s)?, oracle::fkf(f)?),
        Instance::Ffkc(f) => ("ffkc", count_ffkc(f).map_err(e2s)?, oracle::ffkc(f)?),
    };
    let matched = fast == slow.into();
    Ok(Output { json: json!({"kind": kind, "count": fast.to_string(), "oracle": slow.to_string(), "match": matched}), mismatch: !matched })
}

fn time_us(reps: usize, mut f: impl FnMut()) -> Value {
    let mut ts: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() * 1e6
        })
        .collect();
    ts.sort_by(f64::total_cmp);
    json!({"reps": ts.len(), "min_us": ts[0], "median_us": ts[ts.len() / 2]})
}

fn bench(ctx: &Ctx, a: BenchArgs) -> Res {
    let mut out = serde_json::Map::new();
    let want = |k: Kernel| a.kernel == Kernel::All || a.kernel == k;
    let mut r = substream(ctx.seed, "bench", 0);
    if want(Kernel::Circledcirc) {
        let (u, v, _) = worked_example();
        let ov = Predicate::ov(2);
        out.insert(
            "circledcirc".into(),
            time_us(a.reps, || {
                let _ = std::hint::black_box(circledcirc(&[&v, &u], &ov));
            }),
        );
    }
    if want(Kernel::BitSlice) {
        let (d, t, p) = (3usize, 8u32, 101u64);
        let partition: Vec<usize> = (0..12).map(|v| v % d).collect();
        let monos: Vec<(Vec<u32>, u64)> = (0..4u32)
            .flat_map(|x| (0..4u32).flat_map(move |y| (0..4u32).map(move |z| (vec![3 * x, 3 * y + 1, 3 * z + 2], 1 + (x + y + z) as u64))))
            .collect();
        let poly = PartitePolynomial::from_monomials(12, partition, d, p, monos);
        let lifted: Vec<u128> = (0..12).map(|_| r.gen_range(0..1u128 << t)).collect();
        out.insert(
            "bit_slice".into(),
            time_us(a.reps, || {
                let qs: Vec<_> = bit_slice_queries(&lifted, t, &poly).unwrap().collect();
                let vals: Vec<FieldElem> = qs.iter().map(|q| FieldElem::new(poly.evaluate_bits(&q.assignment), p)).collect();
                std::hint::black_box(recombine(&vals, &qs).unwrap());
            }),
        );
    }
    if want(Kernel::SmallRange) {
        let inst = gen_aczkc(10, 4, 8, r.gen()).unwrap();
        out.insert(
            "zkc_small_range".into(),
            time_us(a.reps, || {
                let _ = std::hint::black_box(count_small_range(&inst));
            }),
        );
    }
    if want(Kernel::Regex) {
        let e = parse_regex("[ab]*(a|c)[bc]*b").unwrap();
        let text: Vec<u8> = (0..2000).map(|_| b"abc"[r.gen_range(0..3)]).collect();
        out.insert(
            "regex_count".into(),
            time_us(a.reps, || {
                let _ = std::hint::black_box(count_matches(&e, &text, 1_000_000_007));
            }),
        );
    }
    if want(Kernel::Kwlcs) {
        let s: Vec<Vec<u8>> = (0..3).map(|_| (0..60).map(|_| b"acgt"[r.gen_range(0..4)]).collect()).collect();
        let refs: Vec<&[u8]> = s.iter().map(|x| x.as_slice()).collect();
        let w: BTreeMap<u8, u64> = b"acgt".iter().map(|&c| (c, 1 + (c % 3) as u64)).collect();
        out.insert(
            "kwlcs_3x60".into(),
            time_us(a.reps, || {
                let _ = std::hint::black_box(count_kwlcs(&refs, &w, 1_000_000_007));
            }),
        );
    }
    if want(Kernel::Avgov) {
        let inst = gen_ov(1024, 8, 0.5, r.gen()).unwrap();
        out.insert(
            "avgov_short_1024x8".into(),
            time_us(a.reps, || {
                let _ = std::hint::black_box(count_ov_avg(&inst));
            }),
        );
    }
    ok(json!({"seed": ctx.seed, "kernels": out}))
}
