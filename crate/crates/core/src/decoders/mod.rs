//! The decoder family: CoMa, Noisy-CoMa, exhaustive/prefiltered ML, the
//! secure sub-bin wrapper, per-sensor dissemination decoding, and the
//! eavesdropper's erasure-aware decoder.
//!
//! All decoders treat two rows of the same sub-bin as the same message:
//! the estimate is a set of (sensor, message) pairs, with the subcodeword
//! kept only as a representative.

mod eve;
mod ml;

pub use eve::{decode_eve, EveDecode};
pub use ml::{decode_ml, decode_ml_hamming, ml_combination_count, MlOptions};

use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::channel::OutcomeVector;
use crate::codebook::{Codebook, RowId};
use crate::{Error, Result};

/// The set of transmitting (sensor, message, subcodeword) triples.
/// One entry per sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    entries: Vec<RowId>,
}

impl ActiveSet {
    pub fn empty() -> Self {
        ActiveSet { entries: Vec::new() }
    }

    /// Sorts by sensor and rejects duplicate sensors.
    pub fn new(mut entries: Vec<RowId>) -> Result<Self> {
        entries.sort();
        if entries.windows(2).any(|w| w[0].sensor == w[1].sensor) {
            return Err(Error::InvalidParameter(
                "active set has two entries for one sensor".into(),
            ));
        }
        Ok(ActiveSet { entries })
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<RowId>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].sensor < w[1].sensor));
        ActiveSet { entries }
    }

    pub fn entries(&self) -> &[RowId] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (sensor, message) pairs, sorted; subcodeword identity dropped.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.sensor, e.message)).collect()
    }

    pub fn sensors(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.sensor).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeStatus {
    /// Exactly one explanation remains; `estimate` is it.
    Unique,
    /// At least two distinct explanations remain; `estimate` is one of them.
    Ambiguous,
    /// No explanation is consistent with the observation.
    Infeasible,
}

/// Decoder output: the estimated active set plus diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub status: DecodeStatus,
    pub estimate: ActiveSet,
    /// Codewords (rows) not invalidated, per sensor, sparse; CoMa-family
    /// diagnostic.
    pub candidates_surviving: Vec<(usize, usize)>,
    /// Total surviving rows across sensors.
    pub survivor_rows: usize,
}

impl DecodeResult {
    pub fn infeasible() -> Self {
        DecodeResult {
            status: DecodeStatus::Infeasible,
            estimate: ActiveSet::empty(),
            candidates_surviving: Vec::new(),
            survivor_rows: 0,
        }
    }

    /// Reliability per the exact-recovery criterion: status is unique and
    /// the estimated (sensor, message) set equals the truth, subcodeword
    /// identity excluded.
    pub fn matches_truth(&self, truth: &ActiveSet) -> bool {
        self.status == DecodeStatus::Unique && self.estimate.pairs() == truth.pairs()
    }

    /// One-line structured record: status, survivor count, estimate triples.
    pub fn to_record(&self) -> String {
        let est = self
            .estimate
            .entries()
            .iter()
            .map(|e| format!("({},{},{})", e.sensor, e.message, e.subcodeword))
            .collect::<Vec<_>>()
            .join(";");
        let status = match self.status {
            DecodeStatus::Unique => "unique",
            DecodeStatus::Ambiguous => "ambiguous",
            DecodeStatus::Infeasible => "infeasible",
        };
        format!("status={status} survivors={} estimate={est}", self.survivor_rows)
    }
}

/// Builds a CoMa-family result from the surviving row indices.
///
/// Unique requires (a) at most one distinct message per sensor among the
/// survivors and (b) every busy minislot of `y` covered by some survivor;
/// an uncovered busy slot means more than K transmitters or noise, which
/// is the retransmission trigger.
fn result_from_survivors(cb: &Codebook, y: &OutcomeVector, survivors: &[usize]) -> DecodeResult {
    let mut acc = BitVec::zeros(y.len());
    let mut estimate: Vec<RowId> = Vec::new();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let mut messages_unique = true;

    for &r in survivors {
        cb.row_at(r).or_into(&mut acc);
        let id = cb.row_id(r);
        match candidates.last_mut() {
            Some((sensor, count)) if *sensor == id.sensor => *count += 1,
            _ => candidates.push((id.sensor, 1)),
        }
        match estimate.last() {
            Some(last) if last.sensor == id.sensor => {
                if last.message != id.message {
                    messages_unique = false;
                }
            }
            _ => estimate.push(id),
        }
    }

    let covered = y.as_row().is_subset_of(&acc);
    let status = if messages_unique && covered {
        DecodeStatus::Unique
    } else {
        DecodeStatus::Ambiguous
    };
    DecodeResult {
        status,
        estimate: ActiveSet::from_sorted_unchecked(estimate),
        candidates_surviving: candidates,
        survivor_rows: survivors.len(),
    }
}

/// Column-matching decoder: a codeword survives iff its support is
/// contained in the support of `y`. Never misses a transmitted codeword on
/// a noiseless channel.
pub fn decode_coma(cb: &Codebook, y: &OutcomeVector) -> Result<DecodeResult> {
    expect_len(cb, y)?;
    let survivors: Vec<usize> =
        (0..cb.n_rows()).filter(|&r| cb.row_at(r).is_subset_of(y)).collect();
    Ok(result_from_survivors(cb, y, &survivors))
}

/// Noisy column matching: a codeword with support size |zeta| survives iff
/// its overlap with the busy slots, |beta|, satisfies
/// |beta| >= |zeta| * (1 - q(1+epsilon)). With q = 0 this degenerates to
/// exact containment and the output is identical to `decode_coma`.
pub fn decode_noisy_coma(
    cb: &Codebook,
    y: &OutcomeVector,
    q: f64,
    epsilon: f64,
) -> Result<DecodeResult> {
    expect_len(cb, y)?;
    if !(0.0..0.5).contains(&q) {
        return Err(Error::InvalidParameter("q must be in [0, 0.5)".into()));
    }
    if epsilon < 0.0 {
        return Err(Error::InvalidParameter("epsilon must be >= 0".into()));
    }
    let keep_fraction = 1.0 - q * (1.0 + epsilon);
    let survivors: Vec<usize> = (0..cb.n_rows())
        .filter(|&r| {
            let row = cb.row_at(r);
            let zeta = row.count_ones();
            let beta = row.and_count(y);
            // Tiny slack so an exactly-attained integer threshold is not
            // lost to floating-point rounding.
            beta as f64 >= zeta as f64 * keep_fraction - 1e-9
        })
        .collect();
    Ok(result_from_survivors(cb, y, &survivors))
}

/// Which machinery the secure decode runs over the N*C*F row set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SecureDecoder {
    Coma,
    Ml { prefilter: bool },
}

/// Decoding for the sub-binned code: the chosen machinery runs over all
/// N*C*F rows and survivors map back to their (sensor, message) sub-bin.
/// Picking a wrong subcodeword inside the correct sub-bin is not an error,
/// which is already how `DecodeResult` accounts estimates. With F = 1 this
/// is exactly the non-secure decode.
pub fn decode_secure(
    cb: &Codebook,
    y: &OutcomeVector,
    k: usize,
    which: SecureDecoder,
) -> Result<DecodeResult> {
    match which {
        SecureDecoder::Coma => decode_coma(cb, y),
        SecureDecoder::Ml { prefilter } => {
            decode_ml(cb, y, k, &MlOptions { prefilter, ..MlOptions::default() })
        }
    }
}

/// Downstream decoding at one sensor: CoMa restricted to the sensor's own
/// bin. A unique empty estimate means no message was destined to this
/// sensor. Coverage of `y` is not required since other addressees'
/// codewords share the same broadcast.
pub fn decode_dissemination(cb: &Codebook, sensor: usize, y: &OutcomeVector) -> Result<DecodeResult> {
    expect_len(cb, y)?;
    if sensor >= cb.params().n_sensors {
        return Err(Error::InvalidParameter(format!(
            "sensor {sensor} out of range (N = {})",
            cb.params().n_sensors
        )));
    }
    let survivors: Vec<usize> =
        cb.bin_range(sensor).filter(|&r| cb.row_at(r).is_subset_of(y)).collect();

    let mut estimate: Vec<RowId> = Vec::new();
    let mut distinct_messages = 0usize;
    for &r in &survivors {
        let id = cb.row_id(r);
        if estimate.last().map(|e| e.message) != Some(id.message) {
            distinct_messages += 1;
            if estimate.is_empty() {
                estimate.push(id);
            }
        }
    }
    let status = if distinct_messages <= 1 { DecodeStatus::Unique } else { DecodeStatus::Ambiguous };
    Ok(DecodeResult {
        status,
        estimate: ActiveSet::from_sorted_unchecked(estimate),
        candidates_surviving: if survivors.is_empty() {
            Vec::new()
        } else {
            vec![(sensor, survivors.len())]
        },
        survivor_rows: survivors.len(),
    })
}

fn expect_len(cb: &Codebook, y: &OutcomeVector) -> Result<()> {
    if y.len() != cb.code_length() {
        return Err(Error::ShapeMismatch { expected: cb.code_length(), got: y.len() });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Uniform truth: K distinct sensors, uniform message and subcodeword.
    pub(crate) fn random_truth(cb: &Codebook, seed: u64) -> ActiveSet {
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
        ActiveSet::new(entries).unwrap()
    }
}
