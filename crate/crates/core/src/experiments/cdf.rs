//! Success-rate experiments over codeword-length grids.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::NoiseParams;
use crate::codebook::CodeParams;
use crate::experiments::stats::{wilson_interval, Z_95};
use crate::experiments::{derive_subbin_count, SweepSpec, DEFAULT_MAX_CODEBOOK_BITS};
use crate::protocol::{run_collection_round, Activation, ChannelKind, DecoderKind, SessionConfig};
use crate::rng::derive_seed;
use crate::Result;

/// Rates measured at one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub n_sensors: usize,
    pub k_active: usize,
    pub n_messages: usize,
    pub code_length: usize,
    pub delta: f64,
    pub q: f64,
    /// Sub-bin count actually used (1 for the non-secure code).
    pub f_subbins: usize,
    pub trials: usize,
    pub successes: usize,
    pub ambiguous: usize,
    pub infeasible: usize,
    /// Unique decodes containing a message nobody sent.
    pub false_positive_messages: usize,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_rounds: f64,
    pub wall_ms: u128,
}

impl PointResult {
    pub const CSV_HEADER: &'static str = "n,k,c,t,delta,q,f,trials,successes,ambiguous,\
infeasible,false_positive_messages,success_rate,wilson_low,wilson_high,mean_rounds,wall_ms";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.4},{}",
            self.n_sensors,
            self.k_active,
            self.n_messages,
            self.code_length,
            self.delta,
            self.q,
            self.f_subbins,
            self.trials,
            self.successes,
            self.ambiguous,
            self.infeasible,
            self.false_positive_messages,
            self.success_rate,
            self.wilson_low,
            self.wilson_high,
            self.mean_rounds,
            self.wall_ms,
        )
    }
}

/// A sweep's rows plus the spec that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<PointResult>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(PointResult::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv_row());
            out.push('\n');
        }
        out
    }
}

/// Measures one grid point: `trials` independent collection intervals,
/// each with a freshly seeded codebook, all seeds derived from
/// (base_seed, point index, trial index).
pub fn run_point(
    n: usize,
    k: usize,
    c: usize,
    t: usize,
    delta: f64,
    q: f64,
    decoder: DecoderKind,
    trials: usize,
    base_seed: u64,
    point_index: u64,
) -> Result<PointResult> {
    let f = derive_subbin_count(t, delta, k, n * c, DEFAULT_MAX_CODEBOOK_BITS)?;
    let start = Instant::now();

    let outcomes: Vec<Result<(bool, bool, bool, bool, usize)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(base_seed, &[point_index, trial as u64]);
            let params = CodeParams::new(n, k, c, f, t, derive_seed(seed, &[101]))?;
            let cfg = SessionConfig {
                code_params: params,
                channel: ChannelKind::Ideal,
                noise: NoiseParams::symmetric(q),
                activation: Activation::ExactlyK,
                decoder,
                rr_participation: 1.0,
                max_rounds: 1,
            };
            let out = run_collection_round(&cfg, derive_seed(seed, &[102]))?;
            let res = out.final_result();
            let truth_pairs = out.truth.pairs();
            let fp = res.status == crate::DecodeStatus::Unique
                && res.estimate.pairs().iter().any(|p| !truth_pairs.contains(p));
            Ok((
                out.success,
                res.status == crate::DecodeStatus::Ambiguous,
                res.status == crate::DecodeStatus::Infeasible,
                fp,
                out.rounds_used,
            ))
        })
        .collect();

    let mut successes = 0;
    let mut ambiguous = 0;
    let mut infeasible = 0;
    let mut false_positive_messages = 0;
    let mut total_rounds = 0usize;
    for o in outcomes {
        let (s, a, i, fp, rounds) = o?;
        successes += s as usize;
        ambiguous += a as usize;
        infeasible += i as usize;
        false_positive_messages += fp as usize;
        total_rounds += rounds;
    }

    let (wilson_low, wilson_high) = wilson_interval(successes, trials, Z_95);
    Ok(PointResult {
        n_sensors: n,
        k_active: k,
        n_messages: c,
        code_length: t,
        delta,
        q,
        f_subbins: f,
        trials,
        successes,
        ambiguous,
        infeasible,
        false_positive_messages,
        success_rate: successes as f64 / trials as f64,
        wilson_low,
        wilson_high,
        mean_rounds: total_rounds as f64 / trials as f64,
        wall_ms: start.elapsed().as_millis(),
    })
}

/// Exact-recovery frequency as a function of the codeword length, for the
/// non-secure code.
pub fn run_cdf_experiment(
    n: usize,
    k: usize,
    c: usize,
    decoder: DecoderKind,
    t_grid: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    let spec = SweepSpec {
        n_grid: vec![n],
        k_grid: vec![k],
        c_grid: vec![c],
        t_grid: t_grid.to_vec(),
        delta_grid: vec![0.0],
        q_grid: vec![0.0],
        f_ch_grid: vec![1],
        epsilon: 0.0,
        decoder,
        trials,
        base_seed,
    };
    run_sweep(&spec)
}

/// Same experiment over the sub-binned secure code: the sub-bin count is
/// derived from (T, delta, K) at every grid point.
pub fn run_secure_cdf_experiment(
    n: usize,
    k: usize,
    c: usize,
    delta: f64,
    decoder: DecoderKind,
    t_grid: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    let spec = SweepSpec {
        n_grid: vec![n],
        k_grid: vec![k],
        c_grid: vec![c],
        t_grid: t_grid.to_vec(),
        delta_grid: vec![delta],
        q_grid: vec![0.0],
        f_ch_grid: vec![1],
        epsilon: 0.0,
        decoder,
        trials,
        base_seed,
    };
    run_sweep(&spec)
}

/// Full cross-product sweep over the spec's grids.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut point_index = 0u64;
    for &n in &spec.n_grid {
        for &k in &spec.k_grid {
            for &c in &spec.c_grid {
                for &t in &spec.t_grid {
                    for &delta in &spec.delta_grid {
                        for &q in &spec.q_grid {
                            rows.push(run_point(
                                n,
                                k,
                                c,
                                t,
                                delta,
                                q,
                                spec.decoder,
                                spec.trials,
                                spec.base_seed,
                                point_index,
                            )?);
                            point_index += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(SweepResult { spec: spec.clone(), rows })
}
