//! Group-testing multiple access for dense sensor networks.
//!
//! A sink collects reports from up to K simultaneously active sensors out
//! of N, without scheduling or sender identification: each (sensor,
//! message) pair owns a random binary transmission pattern, the channel
//! delivers the position-wise Boolean OR of the transmitted patterns, and
//! the sink inverts that superposition. This crate implements the whole
//! pipeline:
//!
//! - [`codebook`]: seeded random codebook construction (plain and
//!   sub-binned secure variants), the analytic codeword-length bounds, the
//!   decoding error exponent, and the portable codebook file format;
//! - [`channel`]: Boolean-OR superposition, the analog energy/threshold
//!   front end, detector flip noise, and the eavesdropper erasure channel;
//! - [`decoders`]: CoMa, Noisy-CoMa, exhaustive/prefiltered ML, secure
//!   sub-bin decoding, per-sensor dissemination decoding, and the
//!   eavesdropper's decoder;
//! - [`protocol`]: collection rounds with retransmission, dissemination
//!   rounds, and the two multi-hop forwarding schemes;
//! - [`experiments`]: deterministic Monte Carlo harness emitting CSV
//!   tables with Wilson intervals.

pub mod bits;
pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod decoders;
mod error;
pub mod experiments;
pub mod protocol;
pub mod rng;

pub use bits::{BitMatrix, BitRow, BitVec};
pub use bounds::{
    bound_t_lemma1, bound_t_lemma2, closed_form_lemma1, closed_form_lemma2, error_exponent_bound,
    gallager_e0, ofdma_minislots, Bound, BoundParams,
};
pub use channel::{
    analog_superpose_detect, apply_flip_noise, eavesdrop, or_superpose, AnalogParams, EveOutcome,
    EveParams, NoiseParams, OutcomeVector,
};
pub use codebook::{CodeParams, Codebook, RowId};
pub use decoders::{
    decode_coma, decode_dissemination, decode_eve, decode_ml, decode_ml_hamming,
    decode_noisy_coma, decode_secure, ActiveSet, DecodeResult, DecodeStatus, EveDecode, MlOptions,
    SecureDecoder,
};
pub use error::{Error, Result};
