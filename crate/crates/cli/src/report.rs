//! Experiment reports and seeded substreams.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

/// Independent generator for `(name, index)` derived from the run seed.
pub fn substream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    // FNV-1a over the name picks the stream; the index offsets it.
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, c| (h ^ c as u64).wrapping_mul(0x0100_0000_01b3));
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(h.wrapping_add(index));
    r
}

#[derive(Debug, Clone, Serialize)]
pub struct Trial {
    pub index: usize,
    pub expected: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub got: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub ok: bool,
    pub millis: f64,
}

impl Trial {
    pub fn compare(index: usize, expected: impl ToString, got: Result<String, String>, millis: f64) -> Trial {
        let expected = expected.to_string();
        match got {
            Ok(g) => Trial { index, ok: g == expected, expected, got: Some(g), error: None, millis },
            Err(e) => Trial { index, expected, got: None, error: Some(e), ok: false, millis },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub jobs: usize,
    pub params: Value,
    pub total_millis: f64,
    pub trials: Vec<Trial>,
    pub matches: usize,
    pub success_frequency: f64,
    /// Trial indices whose output disagreed with the oracle.
    pub disagreements: Vec<usize>,
}

impl ExperimentReport {
    pub fn new(ctx: &Ctx, params: Value, trials: Vec<Trial>, total_millis: f64) -> Self {
        let matches = trials.iter().filter(|t| t.ok).count();
        let disagreements = trials.iter().filter(|t| !t.ok).map(|t| t.index).collect();
        let success_frequency = if trials.is_empty() { 1.0 } else { matches as f64 / trials.len() as f64 };
        ExperimentReport {
            command: ctx.argv.clone(),
            seed: ctx.seed,
            jobs: ctx.jobs,
            params,
            total_millis,
            trials,
            matches,
            success_frequency,
            disagreements,
        }
    }
}

/// Run-wide settings shared by every subcommand.
pub struct Ctx {
    pub argv: Vec<String>,
    pub seed: u64,
    pub jobs: usize,
}

impl Ctx {
    /// Runs `f` on every trial index on a pool of `jobs` workers. Each trial
    /// draws only from its own substream, so results do not depend on `jobs`.
    pub fn trials<E, F>(&self, name: &str, count: usize, f: F) -> (Vec<Trial>, f64)
    where
        E: ToString,
        F: Fn(usize, &mut ChaCha8Rng) -> (E, Result<String, String>) + Sync,
    {
        let start = Instant::now();
        let run = |i: usize| {
            let t0 = Instant::now();
            let mut r = substream(self.seed, name, i as u64);
            let (expected, got) = f(i, &mut r);
            Trial::compare(i, expected, got, t0.elapsed().as_secs_f64() * 1e3)
        };
        let trials = if self.jobs <= 1 {
            (0..count).map(run).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build().expect("thread pool");
            pool.install(|| (0..count).into_par_iter().map(run).collect())
        };
        (trials, start.elapsed().as_secs_f64() * 1e3)
    }
}
