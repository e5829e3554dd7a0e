//! Erasure-aware decoding at the eavesdropper.
//!
//! Eve sees `z` in {0, 1, erased}^T; erased positions impose no constraint.
//! Her strongest terminating attack mirrors the sink's machinery on the
//! observed positions: containment filtering, then an exact-match search
//! over the survivors when the combination count permits. A pool past the
//! cap cannot certify a unique explanation, so the (weaker) filtered
//! status stands in that case.
//!
//! On top of the decode, the definite set collects pairs Eve can prove
//! transmitted: every transmitted row survives the filter, so an observed
//! busy slot whose surviving coverage comes from a single sub-bin pins
//! that sub-bin.

use crate::bits::BitVec;
use crate::channel::EveOutcome;
use crate::codebook::{Codebook, RowId};
use crate::decoders::ml::exact_match_over_rows;
use crate::decoders::{ActiveSet, DecodeResult, DecodeStatus};
use crate::{Error, Result};

/// Eve's decode plus certainty diagnostics.
#[derive(Debug, Clone)]
pub struct EveDecode {
    /// Outcome of the strongest terminating decoder on the observed positions.
    pub result: DecodeResult,
    /// (sensor, message) pairs provably transmitted given `z`, sorted.
    pub definite_pairs: Vec<(usize, usize)>,
    /// Distinct (sensor, message) pairs not ruled out by the observation.
    pub candidate_pairs: usize,
}

pub fn decode_eve(
    cb: &Codebook,
    z: &EveOutcome,
    k: usize,
    max_combinations: u128,
) -> Result<EveDecode> {
    if z.len() != cb.code_length() {
        return Err(Error::ShapeMismatch { expected: cb.code_length(), got: z.len() });
    }
    let mask = z.observed_mask();
    let survivors: Vec<usize> = (0..cb.n_rows())
        .filter(|&r| cb.row_at(r).is_subset_of_masked(&z.bits, &mask))
        .collect();

    let mut candidate_pairs = 0usize;
    let mut last_pair = None;
    for &r in &survivors {
        let id = cb.row_id(r);
        if last_pair != Some((id.sensor, id.message)) {
            candidate_pairs += 1;
            last_pair = Some((id.sensor, id.message));
        }
    }

    let definite_pairs = definite_pairs(cb, z, &mask, &survivors);
    let filtered = filtered_status(cb, z, &mask, &survivors);
    let result = exact_match_over_rows(cb, &survivors, k, &z.bits, Some(&mask), max_combinations)
        .unwrap_or(filtered);
    Ok(EveDecode { result, definite_pairs, candidate_pairs })
}

/// Masked CoMa status: per-sensor message uniqueness plus coverage of
/// every observed busy slot by some survivor.
fn filtered_status(
    cb: &Codebook,
    z: &EveOutcome,
    mask: &BitVec,
    survivors: &[usize],
) -> DecodeResult {
    let mut acc = BitVec::zeros(z.len());
    let mut estimate: Vec<RowId> = Vec::new();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let mut messages_unique = true;
    for &r in survivors {
        cb.row_at(r).or_into(&mut acc);
        let id = cb.row_id(r);
        match candidates.last_mut() {
            Some((s, c)) if *s == id.sensor => *c += 1,
            _ => candidates.push((id.sensor, 1)),
        }
        match estimate.last() {
            Some(prev) if prev.sensor == id.sensor => {
                if prev.message != id.message {
                    messages_unique = false;
                }
            }
            _ => estimate.push(id),
        }
    }
    let covered = z
        .bits
        .words()
        .iter()
        .zip(mask.words())
        .zip(acc.words())
        .all(|((zb, m), a)| zb & m & !a == 0);
    DecodeResult {
        status: if messages_unique && covered {
            DecodeStatus::Unique
        } else {
            DecodeStatus::Ambiguous
        },
        estimate: ActiveSet::from_sorted_unchecked(estimate),
        candidates_surviving: candidates,
        survivor_rows: survivors.len(),
    }
}

fn definite_pairs(
    cb: &Codebook,
    z: &EveOutcome,
    mask: &BitVec,
    survivors: &[usize],
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for t in 0..z.len() {
        if !mask.get(t) || !z.bits.get(t) {
            continue;
        }
        let mut covering: Option<(usize, usize)> = None;
        let mut unique = true;
        for &r in survivors {
            if cb.row_at(r).get(t) {
                let id = cb.row_id(r);
                let pair = (id.sensor, id.message);
                match covering {
                    None => covering = Some(pair),
                    Some(seen) if seen == pair => {}
                    Some(_) => {
                        unique = false;
                        break;
                    }
                }
            }
        }
        if unique {
            if let Some(pair) = covering {
                if !out.contains(&pair) {
                    out.push(pair);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{eavesdrop, or_superpose, EveParams};
    use crate::codebook::CodeParams;
    use crate::decoders::testutil::random_truth;
    use crate::decoders::{decode_coma, decode_ml, MlOptions};
    use crate::rng::derive_seed;

    #[test]
    fn full_observation_equals_sink_decode() {
        // delta = 1, F = 1: Eve sees Y exactly and decodes like the sink.
        for trial in 0..20u64 {
            let seed = derive_seed(808, &[trial]);
            let params = CodeParams::new(20, 2, 3, 1, 60, seed).unwrap();
            let cb = Codebook::generate(params).unwrap();
            let truth = random_truth(&cb, derive_seed(seed, &[1]));
            let y = or_superpose(60, truth.entries().iter().map(|&e| cb.row(e))).unwrap();
            let z = eavesdrop(&y, &EveParams::from_observe_prob(1.0).unwrap(), 5).unwrap();
            let eve = decode_eve(&cb, &z, 2, 1_000_000).unwrap();
            let sink = decode_ml(&cb, &y, 2, &MlOptions::default()).unwrap();
            assert_eq!(eve.result.status, sink.status);
            assert_eq!(eve.result.estimate.pairs(), sink.estimate.pairs());
            assert_eq!(eve.candidate_pairs, decode_coma(&cb, &y).unwrap().survivor_rows);
        }
    }

    #[test]
    fn no_observation_rules_nothing_out() {
        let params = CodeParams::new(15, 2, 2, 1, 40, 4).unwrap();
        let cb = Codebook::generate(params).unwrap();
        let truth = random_truth(&cb, 6);
        let y = or_superpose(40, truth.entries().iter().map(|&e| cb.row(e))).unwrap();
        let z = eavesdrop(&y, &EveParams::from_observe_prob(0.0).unwrap(), 5).unwrap();
        let eve = decode_eve(&cb, &z, 2, 1_000_000).unwrap();
        assert_eq!(eve.candidate_pairs, cb.n_rows());
        assert!(eve.definite_pairs.is_empty());
        assert_ne!(eve.result.status, DecodeStatus::Unique);
    }

    #[test]
    fn definite_pairs_are_always_true_pairs() {
        for trial in 0..40u64 {
            let seed = derive_seed(117, &[trial]);
            let params = CodeParams::new(25, 3, 2, 1, 80, seed).unwrap();
            let cb = Codebook::generate(params).unwrap();
            let truth = random_truth(&cb, derive_seed(seed, &[2]));
            let y = or_superpose(80, truth.entries().iter().map(|&e| cb.row(e))).unwrap();
            let z = eavesdrop(&y, &EveParams::from_observe_prob(0.5).unwrap(), seed).unwrap();
            let eve = decode_eve(&cb, &z, 3, 1_000_000).unwrap();
            let truth_pairs = truth.pairs();
            for pair in &eve.definite_pairs {
                assert!(truth_pairs.contains(pair), "definite pair {pair:?} not transmitted");
            }
        }
    }

    #[test]
    fn oversized_pool_reports_ambiguous_without_search() {
        let params = CodeParams::new(30, 3, 4, 1, 50, 9).unwrap();
        let cb = Codebook::generate(params).unwrap();
        let truth = random_truth(&cb, 3);
        let y = or_superpose(50, truth.entries().iter().map(|&e| cb.row(e))).unwrap();
        // Nothing observed: every row survives, combination count blows the
        // tiny cap, and the filtered status must say ambiguous.
        let z = eavesdrop(&y, &EveParams::from_observe_prob(0.0).unwrap(), 1).unwrap();
        let eve = decode_eve(&cb, &z, 3, 10).unwrap();
        assert_eq!(eve.result.status, DecodeStatus::Ambiguous);
    }
}
