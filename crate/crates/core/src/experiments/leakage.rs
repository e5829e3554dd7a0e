//! Empirical eavesdropper-leakage evaluation for the secure code.
//!
//! Per trial the sink and the eavesdropper decode the same transmission:
//! the sink from the full outcome vector, Eve from her erasure-channel
//! view restricted to observed positions. Both run the strongest
//! terminating decoder available (prefiltered exact-match search). The
//! report contrasts the sink's exact-recovery rate with Eve's, Eve's
//! frequency of proving at least one pair, and the mean size of her
//! surviving candidate pool.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{eavesdrop, or_superpose, EveParams};
use crate::codebook::{CodeParams, Codebook, RowId};
use crate::decoders::{decode_eve, decode_ml, MlOptions};
use crate::experiments::stats::{wilson_interval, Z_95};
use crate::experiments::{derive_subbin_count, DEFAULT_MAX_CODEBOOK_BITS};
use crate::rng::derive_seed;
use crate::{ActiveSet, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageReport {
    pub n_sensors: usize,
    pub k_active: usize,
    pub n_messages: usize,
    pub code_length: usize,
    pub delta: f64,
    pub f_subbins: usize,
    pub trials: usize,
    /// Sink exact recoveries on the same trials.
    pub sink_successes: usize,
    /// Eve unique-decodes equal to the full truth.
    pub eve_exact: usize,
    /// Trials where Eve proved at least one transmitted pair.
    pub eve_partial: usize,
    /// Mean distinct (sensor, message) pairs surviving Eve's filter.
    pub mean_candidate_pairs: f64,
    pub sink_rate: f64,
    pub sink_wilson_low: f64,
    pub eve_exact_rate: f64,
    pub eve_exact_wilson_high: f64,
    pub wall_ms: u128,
}

impl LeakageReport {
    pub const CSV_HEADER: &'static str = "n,k,c,t,delta,f,trials,sink_successes,eve_exact,\
eve_partial,mean_candidate_pairs,sink_rate,sink_wilson_low,eve_exact_rate,eve_exact_wilson_high,wall_ms";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.2},{:.6},{:.6},{:.6},{:.6},{}",
            self.n_sensors,
            self.k_active,
            self.n_messages,
            self.code_length,
            self.delta,
            self.f_subbins,
            self.trials,
            self.sink_successes,
            self.eve_exact,
            self.eve_partial,
            self.mean_candidate_pairs,
            self.sink_rate,
            self.sink_wilson_low,
            self.eve_exact_rate,
            self.eve_exact_wilson_high,
            self.wall_ms,
        )
    }
}

/// Eve's combination budget before she gives up certifying uniqueness.
const EVE_MAX_COMBINATIONS: u128 = 2_000_000;

pub fn run_leakage_experiment(
    n: usize,
    k: usize,
    c: usize,
    delta: f64,
    t: usize,
    trials: usize,
    base_seed: u64,
) -> Result<LeakageReport> {
    let f = derive_subbin_count(t, delta, k, n * c, DEFAULT_MAX_CODEBOOK_BITS)?;
    let eve_params = EveParams::from_observe_prob(delta)?;
    let start = Instant::now();

    let per_trial: Vec<Result<(bool, bool, bool, usize)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(base_seed, &[trial as u64]);
            let params = CodeParams::new(n, k, c, f, t, derive_seed(seed, &[1]))?;
            let cb = Codebook::generate(params)?;
            let truth = draw_truth(&cb, derive_seed(seed, &[2]));
            let y = or_superpose(t, truth.entries().iter().map(|&e| cb.row(e)))?;

            let sink = decode_ml(&cb, &y, k, &MlOptions::default())?;
            let sink_ok = sink.matches_truth(&truth);

            let z = eavesdrop(&y, &eve_params, derive_seed(seed, &[3]))?;
            let eve = decode_eve(&cb, &z, k, EVE_MAX_COMBINATIONS)?;
            let eve_ok = eve.result.matches_truth(&truth);
            let truth_pairs = truth.pairs();
            let eve_partial =
                eve.definite_pairs.iter().any(|p| truth_pairs.contains(p));
            Ok((sink_ok, eve_ok, eve_partial, eve.candidate_pairs))
        })
        .collect();

    let mut sink_successes = 0;
    let mut eve_exact = 0;
    let mut eve_partial = 0;
    let mut candidate_sum = 0usize;
    for r in per_trial {
        let (s, e, ep, cand) = r?;
        sink_successes += s as usize;
        eve_exact += e as usize;
        eve_partial += ep as usize;
        candidate_sum += cand;
    }

    let (sink_wilson_low, _) = wilson_interval(sink_successes, trials, Z_95);
    let (_, eve_exact_wilson_high) = wilson_interval(eve_exact, trials, Z_95);
    Ok(LeakageReport {
        n_sensors: n,
        k_active: k,
        n_messages: c,
        code_length: t,
        delta,
        f_subbins: f,
        trials,
        sink_successes,
        eve_exact,
        eve_partial,
        mean_candidate_pairs: candidate_sum as f64 / trials as f64,
        sink_rate: sink_successes as f64 / trials as f64,
        sink_wilson_low,
        eve_exact_rate: eve_exact as f64 / trials as f64,
        eve_exact_wilson_high,
        wall_ms: start.elapsed().as_millis(),
    })
}

fn draw_truth(cb: &Codebook, seed: u64) -> ActiveSet {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let p = cb.params();
    let mut sensors: Vec<usize> = (0..p.n_sensors).collect();
    sensors.shuffle(&mut rng);
    let entries = sensors[..p.k_active]
        .iter()
        .map(|&s| RowId {
            sensor: s,
            message: rng.gen_range(0..p.n_messages),
            subcodeword: rng.gen_range(0..p.n_subcodewords),
        })
        .collect();
    ActiveSet::new(entries).expect("distinct sensors")
}
