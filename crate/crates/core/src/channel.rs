//! The multiple-access channel: Boolean-OR superposition, the analog
//! energy/threshold front end, per-minislot detector flip noise, and the
//! eavesdropper's erasure channel.
//!
//! All noise operations take an explicit seed and are pure given it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bits::{BitRow, BitVec};
use crate::{Error, Result};

/// The sink's binary observation, one bit per minislot.
pub type OutcomeVector = BitVec;

/// Analog front-end parameters: per-sensor channel fades, aggregated
/// per-minislot Gaussian noise power, and the hard-decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogParams {
    /// Channel fade per sensor, indexed by sensor id.
    pub gains: Vec<f64>,
    /// Variance of the additive noise on the decision statistic.
    pub noise_power: f64,
    /// Hard-decision power threshold.
    pub threshold: f64,
    /// Energy contributed by one transmitted 1.
    pub tx_amplitude: f64,
}

impl AnalogParams {
    pub fn validate(&self) -> Result<()> {
        if self.threshold <= 0.0 {
            return Err(Error::InvalidParameter("threshold must be > 0".into()));
        }
        if self.tx_amplitude <= 0.0 {
            return Err(Error::InvalidParameter("tx_amplitude must be > 0".into()));
        }
        if self.noise_power < 0.0 {
            return Err(Error::InvalidParameter("noise_power must be >= 0".into()));
        }
        if self.gains.iter().any(|&g| g <= 0.0) {
            return Err(Error::InvalidParameter("gains must all be > 0".into()));
        }
        Ok(())
    }
}

/// Detector flip probabilities. The symmetric single-q model sets both
/// fields equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Probability an idle minislot reads busy.
    pub q_false_pos: f64,
    /// Probability a busy minislot reads idle.
    pub q_false_neg: f64,
}

impl NoiseParams {
    pub const NOISELESS: NoiseParams = NoiseParams { q_false_pos: 0.0, q_false_neg: 0.0 };

    pub fn symmetric(q: f64) -> Self {
        NoiseParams { q_false_pos: q, q_false_neg: q }
    }

    /// Any probability is a valid flip model; decoders that assume a
    /// sub-majority detector error rate check q < 0.5 themselves.
    pub fn validate(&self) -> Result<()> {
        for (q, name) in [(self.q_false_pos, "q_false_pos"), (self.q_false_neg, "q_false_neg")] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.q_false_pos == 0.0 && self.q_false_neg == 0.0
    }
}

/// Eavesdropper channel: each minislot is erased independently.
/// The paper's convention observes a slot with probability delta, so
/// `erase_prob = 1 - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveParams {
    pub erase_prob: f64,
}

impl EveParams {
    /// From the observation probability delta.
    pub fn from_observe_prob(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter("delta must be in [0,1]".into()));
        }
        Ok(EveParams { erase_prob: 1.0 - delta })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.erase_prob) {
            return Err(Error::InvalidParameter("erase_prob must be in [0,1]".into()));
        }
        Ok(())
    }
}

/// The eavesdropper's view: observed bits plus an erasure mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EveOutcome {
    pub bits: BitVec,
    /// Set where the minislot was erased; `bits` is meaningless there.
    pub erased: BitVec,
}

impl EveOutcome {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Mask of positions Eve actually observed.
    pub fn observed_mask(&self) -> BitVec {
        let mut m = BitVec::zeros(self.len());
        for i in 0..self.len() {
            m.set(i, !self.erased.get(i));
        }
        m
    }

    /// `'0'`/`'1'`/`'?'` text form.
    pub fn to_text(&self) -> String {
        (0..self.len())
            .map(|i| {
                if self.erased.get(i) {
                    '?'
                } else if self.bits.get(i) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

/// Position-wise OR of the given rows; the empty set yields all zeros.
pub fn or_superpose<'a, I>(code_length: usize, rows: I) -> Result<OutcomeVector>
where
    I: IntoIterator<Item = BitRow<'a>>,
{
    let mut acc = BitVec::zeros(code_length);
    for row in rows {
        if row.len() != code_length {
            return Err(Error::ShapeMismatch { expected: code_length, got: row.len() });
        }
        row.or_into(&mut acc);
    }
    Ok(acc)
}

/// Analog superposition followed by hard decision: per minislot the
/// statistic is sum_j gain_j * x_j(t) * tx_amplitude plus Gaussian noise,
/// and the output bit is 1 iff the statistic reaches the threshold.
///
/// `row_gains` supplies the fade for each row, aligned with `rows`.
pub fn analog_superpose_detect<'a>(
    code_length: usize,
    rows: &[BitRow<'a>],
    row_gains: &[f64],
    analog: &AnalogParams,
    seed: u64,
) -> Result<OutcomeVector> {
    analog.validate()?;
    if rows.len() != row_gains.len() {
        return Err(Error::InvalidParameter(format!(
            "{} rows but {} gains",
            rows.len(),
            row_gains.len()
        )));
    }
    for row in rows {
        if row.len() != code_length {
            return Err(Error::ShapeMismatch { expected: code_length, got: row.len() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if analog.noise_power > 0.0 {
        Some(Normal::new(0.0, analog.noise_power.sqrt()).expect("valid sigma"))
    } else {
        None
    };
    let mut out = BitVec::zeros(code_length);
    for t in 0..code_length {
        let mut statistic = 0.0;
        for (row, &g) in rows.iter().zip(row_gains) {
            if row.get(t) {
                statistic += g * analog.tx_amplitude;
            }
        }
        if let Some(n) = &noise {
            statistic += n.sample(&mut rng);
        }
        out.set(t, statistic >= analog.threshold);
    }
    Ok(out)
}

/// Flips each 0 with `q_false_pos` and each 1 with `q_false_neg`,
/// independently per minislot.
pub fn apply_flip_noise(y: &OutcomeVector, noise: &NoiseParams, seed: u64) -> Result<OutcomeVector> {
    noise.validate()?;
    if noise.is_noiseless() {
        return Ok(y.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = y.clone();
    for t in 0..y.len() {
        let q = if y.get(t) { noise.q_false_neg } else { noise.q_false_pos };
        if q > 0.0 && rng.gen::<f64>() < q {
            out.set(t, !y.get(t));
        }
    }
    Ok(out)
}

/// Erases each minislot independently with `erase_prob`; unerased
/// positions copy `y` unchanged.
pub fn eavesdrop(y: &OutcomeVector, eve: &EveParams, seed: u64) -> Result<EveOutcome> {
    eve.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut erased = BitVec::zeros(y.len());
    let mut bits = BitVec::zeros(y.len());
    for t in 0..y.len() {
        if rng.gen::<f64>() < eve.erase_prob {
            erased.set(t, true);
        } else {
            bits.set(t, y.get(t));
        }
    }
    Ok(EveOutcome { bits, erased })
}
