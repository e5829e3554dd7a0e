//! Exhaustive maximum-likelihood decoding.
//!
//! On the noiseless Boolean-OR channel the likelihood of a candidate set is
//! 1 exactly when the OR of its rows reproduces `y`, so ML reduces to an
//! exact-match search over K-subsets of sensors with one codeword chosen
//! per sensor. Any row with support not contained in `y` cannot take part
//! in an exact match, which is why restricting the search to CoMa
//! survivors (the prefilter) cannot change the result on this channel.
//!
//! Two candidate sets that map to the same (sensor, message) pairs are the
//! same explanation; sub-codeword ties inside one sub-bin are not
//! ambiguity.

use crate::bits::BitVec;
use crate::channel::OutcomeVector;
use crate::codebook::{Codebook, RowId};
use crate::decoders::{ActiveSet, DecodeResult, DecodeStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct MlOptions {
    /// Restrict enumeration to CoMa survivors.
    pub prefilter: bool,
    /// Hard cap on the number of candidate combinations.
    pub max_combinations: u128,
}

impl Default for MlOptions {
    fn default() -> Self {
        MlOptions { prefilter: true, max_combinations: 20_000_000 }
    }
}

/// Candidate rows grouped per sensor, sensors ascending. Row indices come
/// in ascending order, which is sensor-major by construction.
struct CandidatePool {
    sensors: Vec<usize>,
    rows: Vec<Vec<usize>>,
}

impl CandidatePool {
    fn from_rows(cb: &Codebook, row_indices: impl Iterator<Item = usize>) -> Self {
        let mut sensors = Vec::new();
        let mut rows: Vec<Vec<usize>> = Vec::new();
        for r in row_indices {
            let s = cb.row_id(r).sensor;
            match sensors.last() {
                Some(&last) if last == s => rows.last_mut().unwrap().push(r),
                _ => {
                    sensors.push(s);
                    rows.push(vec![r]);
                }
            }
        }
        CandidatePool { sensors, rows }
    }

    /// Number of ways to pick k sensors and one row each: the k-th
    /// elementary symmetric polynomial of the per-sensor counts.
    fn combinations(&self, k: usize) -> u128 {
        let mut e = vec![0u128; k + 1];
        e[0] = 1;
        for counts in self.rows.iter().map(|r| r.len() as u128) {
            for j in (1..=k).rev() {
                e[j] = e[j].saturating_add(e[j - 1].saturating_mul(counts));
            }
        }
        e[k]
    }

    fn survivors_per_sensor(&self) -> Vec<(usize, usize)> {
        self.sensors.iter().zip(&self.rows).map(|(&s, r)| (s, r.len())).collect()
    }

    fn total_rows(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

#[inline]
fn masked_eq(a: &BitVec, b: &BitVec, mask: Option<&BitVec>) -> bool {
    match mask {
        None => a == b,
        Some(m) => a
            .words()
            .iter()
            .zip(b.words())
            .zip(m.words())
            .all(|((x, y), m)| (x ^ y) & m == 0),
    }
}

/// Depth-first search for up to two distinct (by pair set) exact matches.
struct ExactMatchSearch<'a> {
    cb: &'a Codebook,
    target: &'a BitVec,
    mask: Option<&'a BitVec>,
    pool: &'a CandidatePool,
    k: usize,
    /// acc[d] = OR of the rows chosen at depths < d.
    acc: Vec<BitVec>,
    chosen: Vec<RowId>,
    matches: Vec<Vec<RowId>>,
}

impl ExactMatchSearch<'_> {
    fn recurse(&mut self, from_slot: usize, depth: usize) {
        if self.matches.len() >= 2 {
            return;
        }
        if depth == self.k {
            if masked_eq(&self.acc[depth], self.target, self.mask) {
                let candidate = self.chosen.clone();
                let is_new =
                    !self.matches.iter().any(|m| pairs_of(m) == pairs_of(&candidate));
                if is_new {
                    self.matches.push(candidate);
                }
            }
            return;
        }
        let slots = self.pool.sensors.len();
        let remaining = self.k - depth;
        if from_slot + remaining > slots {
            return;
        }
        for slot in from_slot..=(slots - remaining) {
            for &r in &self.pool.rows[slot] {
                let (lo, hi) = self.acc.split_at_mut(depth + 1);
                hi[0].clone_from(&lo[depth]);
                self.cb.row_at(r).or_into(&mut hi[0]);
                self.chosen.push(self.cb.row_id(r));
                self.recurse(slot + 1, depth + 1);
                self.chosen.pop();
                if self.matches.len() >= 2 {
                    return;
                }
            }
        }
    }
}

fn pairs_of(entries: &[RowId]) -> Vec<(usize, usize)> {
    entries.iter().map(|e| (e.sensor, e.message)).collect()
}

fn result_from_matches(pool: &CandidatePool, mut matches: Vec<Vec<RowId>>) -> DecodeResult {
    let candidates_surviving = pool.survivors_per_sensor();
    let survivor_rows = pool.total_rows();
    match matches.len() {
        0 => DecodeResult {
            status: DecodeStatus::Infeasible,
            estimate: ActiveSet::empty(),
            candidates_surviving,
            survivor_rows,
        },
        n => DecodeResult {
            status: if n == 1 { DecodeStatus::Unique } else { DecodeStatus::Ambiguous },
            estimate: ActiveSet::from_sorted_unchecked(matches.swap_remove(0)),
            candidates_surviving,
            survivor_rows,
        },
    }
}

/// Exact-match search over an explicit row list. Positions outside `mask`
/// (when given) are unconstrained. Returns `None` when the combination
/// count exceeds the cap, in which case no unique certificate is possible
/// by this route.
pub(crate) fn exact_match_over_rows(
    cb: &Codebook,
    rows: &[usize],
    k: usize,
    target: &BitVec,
    mask: Option<&BitVec>,
    max_combinations: u128,
) -> Option<DecodeResult> {
    let pool = CandidatePool::from_rows(cb, rows.iter().copied());
    if pool.combinations(k) > max_combinations {
        return None;
    }
    let mut search = ExactMatchSearch {
        cb,
        target,
        mask,
        pool: &pool,
        k,
        acc: vec![BitVec::zeros(target.len()); k + 1],
        chosen: Vec::with_capacity(k),
        matches: Vec::new(),
    };
    search.recurse(0, 0);
    Some(result_from_matches(&pool, search.matches))
}

/// Exhaustive ML: the unique K-row, one-row-per-sensor exact OR match for
/// `y`. Ties across distinct (sensor, message) sets report ambiguity with
/// one representative; no match reports infeasible.
pub fn decode_ml(
    cb: &Codebook,
    y: &OutcomeVector,
    k: usize,
    opts: &MlOptions,
) -> Result<DecodeResult> {
    if y.len() != cb.code_length() {
        return Err(Error::ShapeMismatch { expected: cb.code_length(), got: y.len() });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }

    let pool = if opts.prefilter {
        // CoMa's survivor rule: containment in the busy support.
        CandidatePool::from_rows(cb, (0..cb.n_rows()).filter(|&r| cb.row_at(r).is_subset_of(y)))
    } else {
        CandidatePool::from_rows(cb, 0..cb.n_rows())
    };

    let combos = pool.combinations(k);
    if combos > opts.max_combinations {
        return Err(Error::Capacity {
            what: "ML candidate combinations",
            needed: combos,
            cap: opts.max_combinations,
            advice: Some(if opts.prefilter {
                "raise max_combinations or shorten the codeword pool".into()
            } else {
                "enable the CoMa prefilter".into()
            }),
        });
    }

    let mut search = ExactMatchSearch {
        cb,
        target: y,
        mask: None,
        pool: &pool,
        k,
        acc: vec![BitVec::zeros(y.len()); k + 1],
        chosen: Vec::with_capacity(k),
        matches: Vec::new(),
    };
    search.recurse(0, 0);
    Ok(result_from_matches(&pool, search.matches))
}

/// Combination count the unfiltered search would face: C(N, k) * (C*F)^k.
pub fn ml_combination_count(cb: &Codebook, k: usize) -> u128 {
    let per_sensor = (cb.params().n_messages * cb.params().n_subcodewords) as u128;
    let mut binom: u128 = 1;
    for i in 0..k {
        binom = binom.saturating_mul((cb.params().n_sensors - i) as u128) / (i as u128 + 1);
    }
    let mut total = binom;
    for _ in 0..k {
        total = total.saturating_mul(per_sensor);
    }
    total
}

/// Noise-tolerant ML: minimizes the Hamming distance between the candidate
/// OR and `y` over K-subsets drawn from the Noisy-CoMa survivor pool
/// (q > 0) or all rows (q = 0). `tolerance` rejects explanations farther
/// than the given distance. Distance ties across distinct pair sets report
/// ambiguity.
pub fn decode_ml_hamming(
    cb: &Codebook,
    y: &OutcomeVector,
    k: usize,
    q: f64,
    epsilon: f64,
    tolerance: Option<usize>,
    max_combinations: u128,
) -> Result<DecodeResult> {
    if y.len() != cb.code_length() {
        return Err(Error::ShapeMismatch { expected: cb.code_length(), got: y.len() });
    }
    if !(0.0..0.5).contains(&q) || epsilon < 0.0 {
        return Err(Error::InvalidParameter("q must be in [0, 0.5) and epsilon >= 0".into()));
    }
    let pool = if q > 0.0 {
        let keep = 1.0 - q * (1.0 + epsilon);
        CandidatePool::from_rows(
            cb,
            (0..cb.n_rows()).filter(|&r| {
                let row = cb.row_at(r);
                row.and_count(y) as f64 >= row.count_ones() as f64 * keep - 1e-9
            }),
        )
    } else {
        CandidatePool::from_rows(cb, 0..cb.n_rows())
    };
    let combos = pool.combinations(k);
    if combos > max_combinations {
        return Err(Error::Capacity {
            what: "Hamming-ML candidate combinations",
            needed: combos,
            cap: max_combinations,
            advice: Some("tighten q/epsilon or raise the cap".into()),
        });
    }

    let mut state = HammingSearch {
        cb,
        y,
        pool: &pool,
        k,
        acc: vec![BitVec::zeros(y.len()); k + 1],
        chosen: Vec::with_capacity(k),
        best_distance: usize::MAX,
        best: Vec::new(),
    };
    state.recurse(0, 0);

    let within = tolerance.map_or(true, |tol| state.best_distance <= tol);
    if state.best.is_empty() || !within {
        return Ok(DecodeResult {
            status: DecodeStatus::Infeasible,
            estimate: ActiveSet::empty(),
            candidates_surviving: pool.survivors_per_sensor(),
            survivor_rows: pool.total_rows(),
        });
    }
    let status =
        if state.best.len() == 1 { DecodeStatus::Unique } else { DecodeStatus::Ambiguous };
    let representative = state.best.swap_remove(0);
    Ok(DecodeResult {
        status,
        estimate: ActiveSet::from_sorted_unchecked(representative),
        candidates_surviving: pool.survivors_per_sensor(),
        survivor_rows: pool.total_rows(),
    })
}

struct HammingSearch<'a> {
    cb: &'a Codebook,
    y: &'a OutcomeVector,
    pool: &'a CandidatePool,
    k: usize,
    acc: Vec<BitVec>,
    chosen: Vec<RowId>,
    best_distance: usize,
    /// Up to two distinct pair sets attaining the minimum.
    best: Vec<Vec<RowId>>,
}

impl HammingSearch<'_> {
    fn recurse(&mut self, from_slot: usize, depth: usize) {
        if depth == self.k {
            let d = hamming(&self.acc[depth], self.y);
            if d < self.best_distance {
                self.best_distance = d;
                self.best.clear();
                self.best.push(self.chosen.clone());
            } else if d == self.best_distance
                && self.best.len() < 2
                && !self.best.iter().any(|m| pairs_of(m) == pairs_of(&self.chosen))
            {
                self.best.push(self.chosen.clone());
            }
            return;
        }
        let slots = self.pool.sensors.len();
        let remaining = self.k - depth;
        if from_slot + remaining > slots {
            return;
        }
        for slot in from_slot..=(slots - remaining) {
            for &r in &self.pool.rows[slot] {
                let (lo, hi) = self.acc.split_at_mut(depth + 1);
                hi[0].clone_from(&lo[depth]);
                self.cb.row_at(r).or_into(&mut hi[0]);
                self.chosen.push(self.cb.row_id(r));
                self.recurse(slot + 1, depth + 1);
                self.chosen.pop();
            }
        }
    }
}

fn hamming(a: &BitVec, b: &BitVec) -> usize {
    a.words().iter().zip(b.words()).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
}
