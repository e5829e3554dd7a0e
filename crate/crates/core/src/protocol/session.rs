//! Collection and dissemination sessions.
//!
//! A collection session opens with a report-request beacon: every pending
//! sensor transmits its pattern in the following T minislots and the sink
//! decodes the superposition. If the decode is not unique, a
//! retransmission beacon follows and pending sensors participate in the
//! repeat interval with a configured probability; after a unique decode
//! the decoded sensors are acknowledged and any still-pending sensors
//! transmit again in the next interval. Rounds are logical; nothing is
//! simulated in wall-clock terms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::bits::BitRow;
use crate::channel::{
    analog_superpose_detect, apply_flip_noise, or_superpose, AnalogParams, NoiseParams,
    OutcomeVector,
};
use crate::codebook::{CodeParams, Codebook, RowId};
use crate::decoders::{
    decode_coma, decode_ml, decode_ml_hamming, decode_noisy_coma, ActiveSet, DecodeResult,
    DecodeStatus, MlOptions,
};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// How the active set of a round is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    /// A fixed active set.
    Explicit(ActiveSet),
    /// Exactly K sensors drawn uniformly without replacement, messages
    /// uniform; the simulation default.
    ExactlyK,
    /// Poisson(mean) awake sensors, truncated to N; for retransmission
    /// studies.
    PoissonTruncated { mean: f64 },
}

/// Physical layer between the transmit patterns and the binary outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChannelKind {
    /// Exact Boolean OR.
    Ideal,
    /// Analog superposition with fades, additive Gaussian noise and a
    /// hard-decision threshold.
    Analog(AnalogParams),
}

/// Which decoder the sink runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecoderKind {
    Coma,
    NoisyComa { q: f64, epsilon: f64 },
    Ml { prefilter: bool },
    MlHamming { q: f64, epsilon: f64, tolerance: Option<usize> },
}

impl DecoderKind {
    pub fn decode(&self, cb: &Codebook, y: &OutcomeVector, k: usize) -> Result<DecodeResult> {
        match *self {
            DecoderKind::Coma => decode_coma(cb, y),
            DecoderKind::NoisyComa { q, epsilon } => decode_noisy_coma(cb, y, q, epsilon),
            DecoderKind::Ml { prefilter } => {
                decode_ml(cb, y, k, &MlOptions { prefilter, ..MlOptions::default() })
            }
            DecoderKind::MlHamming { q, epsilon, tolerance } => {
                decode_ml_hamming(cb, y, k, q, epsilon, tolerance, 20_000_000)
            }
        }
    }
}

/// Everything one session needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub code_params: CodeParams,
    pub channel: ChannelKind,
    pub noise: NoiseParams,
    pub activation: Activation,
    pub decoder: DecoderKind,
    /// Probability a pending sensor participates in a retransmission
    /// interval.
    pub rr_participation: f64,
    pub max_rounds: usize,
}

impl SessionConfig {
    pub fn ideal(code_params: CodeParams, decoder: DecoderKind) -> Self {
        SessionConfig {
            code_params,
            channel: ChannelKind::Ideal,
            noise: NoiseParams::NOISELESS,
            activation: Activation::ExactlyK,
            decoder,
            rr_participation: 1.0,
            max_rounds: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.code_params.validate()?;
        self.noise.validate()?;
        if let ChannelKind::Analog(a) = &self.channel {
            a.validate()?;
            if a.gains.len() < self.code_params.n_sensors {
                return Err(Error::InvalidParameter(format!(
                    "analog channel provides {} gains for {} sensors",
                    a.gains.len(),
                    self.code_params.n_sensors
                )));
            }
        }
        if !(self.rr_participation > 0.0 && self.rr_participation <= 1.0) {
            return Err(Error::InvalidParameter("rr_participation must be in (0,1]".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParameter("max_rounds must be >= 1".into()));
        }
        if let Activation::Explicit(set) = &self.activation {
            for e in set.entries() {
                if e.sensor >= self.code_params.n_sensors
                    || e.message >= self.code_params.n_messages
                    || e.subcodeword >= self.code_params.n_subcodewords
                {
                    return Err(Error::InvalidParameter(format!(
                        "explicit activation entry {e:?} outside the codebook"
                    )));
                }
            }
        }
        if let Activation::PoissonTruncated { mean } = self.activation {
            if !(mean > 0.0) {
                return Err(Error::InvalidParameter("Poisson mean must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// One interval within a session.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Sensors that actually transmitted this interval.
    pub participants: ActiveSet,
    pub y: OutcomeVector,
    pub result: DecodeResult,
}

impl RoundRecord {
    /// Line-delimited trace record.
    pub fn to_trace_line(&self) -> String {
        format!("round={} y={} {}", self.round, self.y.to_01(), self.result.to_record())
    }
}

/// Outcome of a whole collection session.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    /// The drawn truth: what the awake sensors wanted to deliver.
    pub truth: ActiveSet,
    /// (sensor, message) pairs the sink accepted across rounds.
    pub collected: Vec<(usize, usize)>,
    pub rounds: Vec<RoundRecord>,
    pub rounds_used: usize,
    /// Exact recovery: collected equals the truth's pairs.
    pub success: bool,
}

impl RoundOutcome {
    /// The last interval's decode.
    pub fn final_result(&self) -> &DecodeResult {
        &self.rounds.last().expect("at least one round").result
    }
}

fn draw_truth(cfg: &SessionConfig, rng: &mut ChaCha8Rng) -> Result<ActiveSet> {
    let p = &cfg.code_params;
    let count = match &cfg.activation {
        Activation::Explicit(set) => return Ok(set.clone()),
        Activation::ExactlyK => p.k_active,
        Activation::PoissonTruncated { mean } => {
            let poisson = Poisson::new(*mean)
                .map_err(|e| Error::InvalidParameter(format!("Poisson mean: {e}")))?;
            (poisson.sample(rng) as usize).min(p.n_sensors)
        }
    };
    let mut sensors: Vec<usize> = (0..p.n_sensors).collect();
    sensors.shuffle(rng);
    sensors.truncate(count);
    let entries = sensors
        .into_iter()
        .map(|s| RowId {
            sensor: s,
            message: rng.gen_range(0..p.n_messages),
            // Stochastic encoder: uniform subcodeword within the sub-bin.
            subcodeword: rng.gen_range(0..p.n_subcodewords),
        })
        .collect();
    ActiveSet::new(entries)
}

/// Transmit `participants` over the configured channel.
fn transmit(
    cfg: &SessionConfig,
    cb: &Codebook,
    participants: &ActiveSet,
    seed: u64,
) -> Result<OutcomeVector> {
    let t = cfg.code_params.code_length;
    let rows: Vec<BitRow> = participants.entries().iter().map(|&e| cb.row(e)).collect();
    let clean = match &cfg.channel {
        ChannelKind::Ideal => or_superpose(t, rows)?,
        ChannelKind::Analog(analog) => {
            let gains: Vec<f64> =
                participants.entries().iter().map(|e| analog.gains[e.sensor]).collect();
            analog_superpose_detect(t, &rows, &gains, analog, derive_seed(seed, &[1]))?
        }
    };
    apply_flip_noise(&clean, &cfg.noise, derive_seed(seed, &[2]))
}

/// Runs one collection session: draw (or take) the active set, then run
/// intervals until every pending sensor has been decoded or `max_rounds`
/// is exhausted. Deterministic given (cfg, seed).
pub fn run_collection_round(cfg: &SessionConfig, seed: u64) -> Result<RoundOutcome> {
    cfg.validate()?;
    let cb = Codebook::generate(cfg.code_params)?;
    run_collection_round_with_codebook(cfg, &cb, seed)
}

/// Same as [`run_collection_round`] but over an existing codebook, so a
/// sweep can share one code across trials when desired.
pub fn run_collection_round_with_codebook(
    cfg: &SessionConfig,
    cb: &Codebook,
    seed: u64,
) -> Result<RoundOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let truth = draw_truth(cfg, &mut rng)?;

    let mut pending: Vec<RowId> = truth.entries().to_vec();
    let mut collected: Vec<(usize, usize)> = Vec::new();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut previous_failed = false;

    for round in 1..=cfg.max_rounds {
        // After a failed interval the sink sends a retransmission beacon
        // and pending sensors join only with the configured probability;
        // otherwise every pending sensor transmits.
        let participants: Vec<RowId> = if previous_failed {
            pending
                .iter()
                .copied()
                .filter(|_| rng.gen::<f64>() < cfg.rr_participation)
                .collect()
        } else {
            pending.clone()
        };
        let participants = ActiveSet::from_sorted_unchecked(participants);

        let y = transmit(cfg, cb, &participants, derive_seed(seed, &[round as u64, 7]))?;
        let result = cfg.decoder.decode(cb, &y, cfg.code_params.k_active)?;

        // The sink accepts a decode only when it is unique and names at
        // most K sensors; a longer list means more than K transmitted (or
        // the channel lied), which is the retransmission trigger.
        let unique = result.status == DecodeStatus::Unique
            && result.estimate.len() <= cfg.code_params.k_active;
        if unique {
            for pair in result.estimate.pairs() {
                if !collected.contains(&pair) {
                    collected.push(pair);
                }
                pending.retain(|p| p.sensor != pair.0);
            }
        }
        previous_failed = !unique;
        rounds.push(RoundRecord { round, participants, y, result });
        if pending.is_empty() {
            break;
        }
    }

    collected.sort_unstable();
    let success = collected == truth.pairs();
    let rounds_used = rounds.len();
    Ok(RoundOutcome { truth, collected, rounds, rounds_used, success })
}

/// Per-sensor results of one dissemination interval.
#[derive(Debug, Clone)]
pub struct DisseminationOutcome {
    pub addressees: ActiveSet,
    pub y_broadcast: OutcomeVector,
    /// Decode result of every sensor's own-bin matching, indexed by sensor.
    pub per_sensor: Vec<DecodeResult>,
}

impl DisseminationOutcome {
    /// Every addressee got exactly its message and nobody else decoded one.
    pub fn all_correct(&self) -> bool {
        let pairs = self.addressees.pairs();
        self.per_sensor.iter().enumerate().all(|(s, res)| {
            match pairs.iter().find(|(sensor, _)| *sensor == s) {
                Some(&(sensor, message)) => {
                    res.status == DecodeStatus::Unique
                        && res.estimate.pairs() == vec![(sensor, message)]
                }
                None => res.status == DecodeStatus::Unique && res.estimate.is_empty(),
            }
        })
    }
}

/// Runs one downstream interval: the sink superposes the addressees'
/// patterns into one broadcast and every sensor matches its own bin
/// against what it received.
pub fn run_dissemination_round(
    cfg: &SessionConfig,
    addressees: &ActiveSet,
    seed: u64,
) -> Result<DisseminationOutcome> {
    cfg.validate()?;
    if addressees.len() > cfg.code_params.k_active {
        return Err(Error::InvalidParameter(format!(
            "{} addressees exceed K = {}",
            addressees.len(),
            cfg.code_params.k_active
        )));
    }
    for e in addressees.entries() {
        if e.sensor >= cfg.code_params.n_sensors
            || e.message >= cfg.code_params.n_messages
            || e.subcodeword >= cfg.code_params.n_subcodewords
        {
            return Err(Error::InvalidParameter(format!("addressee {e:?} outside the codebook")));
        }
    }
    let cb = Codebook::generate(cfg.code_params)?;
    let t = cfg.code_params.code_length;
    let rows: Vec<BitRow> = addressees.entries().iter().map(|&e| cb.row(e)).collect();

    let n = cfg.code_params.n_sensors;
    let mut per_sensor = Vec::with_capacity(n);
    match &cfg.channel {
        ChannelKind::Ideal => {
            let clean = or_superpose(t, rows)?;
            let y = apply_flip_noise(&clean, &cfg.noise, derive_seed(seed, &[3]))?;
            for sensor in 0..n {
                per_sensor.push(crate::decoders::decode_dissemination(&cb, sensor, &y)?);
            }
            Ok(DisseminationOutcome { addressees: addressees.clone(), y_broadcast: y, per_sensor })
        }
        ChannelKind::Analog(analog) => {
            // Downstream, the superposition happens inside the sink's
            // transmit amplitude and each sensor sees it through its own
            // fade: the detection statistic at sensor j is
            // gain_j * (count of addressee patterns with a 1) + noise.
            let mut y_repr = None;
            for sensor in 0..n {
                let gains = vec![analog.gains[sensor]; rows.len()];
                let y_j = analog_superpose_detect(
                    t,
                    &rows,
                    &gains,
                    analog,
                    derive_seed(seed, &[4, sensor as u64]),
                )?;
                let y_j = apply_flip_noise(&y_j, &cfg.noise, derive_seed(seed, &[5, sensor as u64]))?;
                per_sensor.push(crate::decoders::decode_dissemination(&cb, sensor, &y_j)?);
                if sensor == 0 {
                    y_repr = Some(y_j);
                }
            }
            Ok(DisseminationOutcome {
                addressees: addressees.clone(),
                y_broadcast: y_repr.unwrap_or_else(|| OutcomeVector::zeros(t)),
                per_sensor,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;

    fn base_cfg(n: usize, k: usize, c: usize, t: usize, seed: u64) -> SessionConfig {
        SessionConfig::ideal(CodeParams::new(n, k, c, 1, t, seed).unwrap(), DecoderKind::Coma)
    }

    #[test]
    fn empty_activation_is_vacuous_success() {
        let mut cfg = base_cfg(50, 2, 4, 60, 5);
        cfg.activation = Activation::Explicit(ActiveSet::empty());
        let out = run_collection_round(&cfg, 1).unwrap();
        assert!(out.success);
        assert_eq!(out.rounds_used, 1);
        assert!(out.collected.is_empty());
        assert_eq!(out.rounds[0].y.count_ones(), 0);
        assert_eq!(out.final_result().status, DecodeStatus::Unique);
    }

    // One active sensor against a code sized for K = 3 at the operating
    // length where CoMa is clean: first-round success throughout.
    #[test]
    fn single_active_sensor_decodes_first_round() {
        let mut ok = 0;
        let trials = 300;
        for trial in 0..trials {
            let seed = derive_seed(42, &[trial]);
            let mut cfg = base_cfg(500, 3, 10, 105, seed);
            cfg.activation = Activation::Explicit(
                ActiveSet::new(vec![RowId {
                    sensor: (trial as usize * 13) % 500,
                    message: (trial as usize) % 10,
                    subcodeword: 0,
                }])
                .unwrap(),
            );
            let out = run_collection_round(&cfg, seed).unwrap();
            if out.success && out.rounds_used == 1 {
                ok += 1;
            }
        }
        assert!(ok as f64 / trials as f64 >= 0.99, "{ok}/{trials}");
    }

    #[test]
    fn sessions_are_deterministic() {
        let mut cfg = base_cfg(100, 3, 4, 80, 11);
        cfg.activation = Activation::ExactlyK;
        cfg.max_rounds = 4;
        cfg.rr_participation = 0.5;
        let a = run_collection_round(&cfg, 77).unwrap();
        let b = run_collection_round(&cfg, 77).unwrap();
        assert_eq!(a, b);
        let c = run_collection_round(&cfg, 78).unwrap();
        assert!(a.truth != c.truth || a.rounds.len() == c.rounds.len());
    }

    // Overload: K+2 sensors against a code sized for K. Round 1 is usually
    // ambiguous; the retransmission path with participation 0.5 resolves
    // it within the round budget most of the time.
    #[test]
    fn overload_resolves_through_retransmission() {
        let trials = 150;
        let mut round1_ambiguous = 0;
        let mut eventual = 0;
        for trial in 0..trials {
            let seed = derive_seed(4242, &[trial]);
            let mut cfg = base_cfg(500, 3, 10, 105, seed);
            cfg.max_rounds = 8;
            cfg.rr_participation = 0.5;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[100]));
            let mut sensors: Vec<usize> = (0..500).collect();
            sensors.shuffle(&mut rng);
            let entries: Vec<RowId> = sensors[..5]
                .iter()
                .map(|&s| RowId { sensor: s, message: rng.gen_range(0..10), subcodeword: 0 })
                .collect();
            cfg.activation = Activation::Explicit(ActiveSet::new(entries).unwrap());
            let out = run_collection_round(&cfg, seed).unwrap();
            let round1_rejected = out.rounds[0].result.status != DecodeStatus::Unique
                || out.rounds[0].result.estimate.len() > 3;
            if round1_rejected {
                round1_ambiguous += 1;
            }
            if out.success {
                eventual += 1;
            }
        }
        assert!(
            round1_ambiguous as f64 / trials as f64 > 0.5,
            "round-1 undecodable rate {round1_ambiguous}/{trials}"
        );
        assert!(eventual as f64 / trials as f64 >= 0.90, "eventual {eventual}/{trials}");
    }

    #[test]
    fn dissemination_single_addressee() {
        let cfg = base_cfg(60, 3, 5, 90, 9);
        let addressees =
            ActiveSet::new(vec![RowId { sensor: 12, message: 3, subcodeword: 0 }]).unwrap();
        let out = run_dissemination_round(&cfg, &addressees, 3).unwrap();
        assert!(out.all_correct());
        assert_eq!(out.per_sensor[12].estimate.pairs(), vec![(12, 3)]);
        assert!(out.per_sensor[13].estimate.is_empty());
    }

    #[test]
    fn dissemination_null_beacon_everyone_idle() {
        let cfg = base_cfg(30, 2, 3, 60, 9);
        let out = run_dissemination_round(&cfg, &ActiveSet::empty(), 3).unwrap();
        assert!(out.all_correct());
        assert!(out.per_sensor.iter().all(|r| r.estimate.is_empty()));
    }

    #[test]
    fn dissemination_rejects_too_many_addressees() {
        let cfg = base_cfg(30, 2, 3, 60, 9);
        let addressees = ActiveSet::new(
            (0..3)
                .map(|s| RowId { sensor: s, message: 0, subcodeword: 0 })
                .collect(),
        )
        .unwrap();
        assert!(run_dissemination_round(&cfg, &addressees, 3).is_err());
    }

    #[test]
    fn analog_channel_session_matches_ideal_when_clean() {
        let params = CodeParams::new(40, 2, 3, 1, 70, 15).unwrap();
        let analog = AnalogParams {
            gains: vec![1.0; 40],
            noise_power: 0.0,
            threshold: 0.5,
            tx_amplitude: 1.0,
        };
        let mut ideal_cfg = SessionConfig::ideal(params, DecoderKind::Coma);
        ideal_cfg.activation = Activation::ExactlyK;
        let mut analog_cfg = ideal_cfg.clone();
        analog_cfg.channel = ChannelKind::Analog(analog);
        let a = run_collection_round(&ideal_cfg, 21).unwrap();
        let b = run_collection_round(&analog_cfg, 21).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.rounds[0].y, b.rounds[0].y);
        assert_eq!(a.success, b.success);
    }

    #[test]
    fn config_validation_catches_inconsistencies() {
        let mut cfg = base_cfg(10, 2, 2, 20, 0);
        cfg.rr_participation = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = base_cfg(10, 2, 2, 20, 0);
        cfg.max_rounds = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = base_cfg(10, 2, 2, 20, 0);
        cfg.activation = Activation::Explicit(
            ActiveSet::new(vec![RowId { sensor: 10, message: 0, subcodeword: 0 }]).unwrap(),
        );
        assert!(cfg.validate().is_err());
    }
}
