//! Analytical codeword-length bounds and the decoding error exponent.
//!
//! All logarithms are base 2. Each bound is exposed both as the raw real
//! value (for tables and ratio tests) and as its ceiling.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Inputs shared by the length bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n_sensors: usize,
    pub k_active: usize,
    pub n_messages: usize,
    /// Slack epsilon >= 0.
    pub epsilon: f64,
    /// Eavesdropper observation probability complement handled by the
    /// secure bound; 0 for the non-secure code.
    pub delta: f64,
}

impl BoundParams {
    pub fn new(n_sensors: usize, k_active: usize, n_messages: usize) -> Self {
        BoundParams { n_sensors, k_active, n_messages, epsilon: 0.0, delta: 0.0 }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 || self.k_active == 0 || self.n_messages == 0 {
            return Err(Error::InvalidParameter("N, K, C must all be >= 1".into()));
        }
        if self.k_active > self.n_sensors {
            return Err(Error::InvalidParameter(format!(
                "K = {} exceeds N = {}",
                self.k_active, self.n_sensors
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter("epsilon must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter("delta must be in [0,1)".into()));
        }
        Ok(())
    }
}

/// A length bound: the raw real value and its ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub raw: f64,
    pub ceil: u64,
    /// The i attaining the max.
    pub argmax_i: usize,
}

/// log2 of C(n, k) via log-gamma.
pub fn log2_binom(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
        / std::f64::consts::LN_2
}

/// Exact C(n, k) for cross-checking the log-domain path (n <= 60 keeps the
/// product inside u128).
pub fn binom_exact_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

fn max_over_i(bp: &BoundParams, factor: f64) -> Bound {
    let n = bp.n_sensors;
    let k = bp.k_active;
    let log2_c = (bp.n_messages as f64).log2();
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 1;
    for i in 1..=k {
        let confusable = log2_binom(n - k, i);
        if confusable == f64::NEG_INFINITY {
            continue; // no set of i other sensors exists
        }
        let v = factor * ((1.0 + bp.epsilon) * k as f64 / i as f64)
            * (confusable + i as f64 * log2_c);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if best == f64::NEG_INFINITY {
        // N = K: no confusable sensor set; the max is vacuous.
        best = 0.0;
    }
    // Snap values a rounding error away from an integer before ceiling,
    // so log-gamma noise cannot inflate an exact bound by one slot.
    let snapped = if (best - best.round()).abs() < 1e-9 { best.round() } else { best };
    Bound { raw: best, ceil: snapped.max(0.0).ceil() as u64, argmax_i: best_i }
}

/// Sufficient codeword length for the non-secure code:
/// max over 1 <= i <= K of ((1+eps) K / i) * log2(C(N-K, i) C^i).
pub fn bound_t_lemma1(bp: &BoundParams) -> Result<Bound> {
    bp.validate()?;
    Ok(max_over_i(bp, 1.0))
}

/// Sufficient codeword length for the secure code: the non-secure max
/// scaled by 1 / (1 - (1+eps) delta). Requires (1+eps) delta < 1; at
/// delta = 0 it equals `bound_t_lemma1` exactly.
pub fn bound_t_lemma2(bp: &BoundParams) -> Result<Bound> {
    bp.validate()?;
    let shrink = 1.0 - (1.0 + bp.epsilon) * bp.delta;
    if shrink <= 0.0 {
        return Err(Error::Infeasible(format!(
            "(1+epsilon)*delta = {} >= 1; the secure bound diverges",
            (1.0 + bp.epsilon) * bp.delta
        )));
    }
    Ok(max_over_i(bp, 1.0 / shrink))
}

/// Closed-form relaxation of the non-secure bound: (1+eps) K log2((N-K) C e).
pub fn closed_form_lemma1(bp: &BoundParams) -> Result<f64> {
    bp.validate()?;
    let arg =
        (bp.n_sensors - bp.k_active) as f64 * bp.n_messages as f64 * std::f64::consts::E;
    Ok((1.0 + bp.epsilon) * bp.k_active as f64 * arg.log2())
}

/// Closed-form relaxation of the secure bound: ((1+eps)/(1-delta)) K log2((N-K) C e).
pub fn closed_form_lemma2(bp: &BoundParams) -> Result<f64> {
    Ok(closed_form_lemma1(bp)? / (1.0 - bp.delta))
}

/// Minislots needed to send T codeword symbols over f_ch parallel
/// subcarriers: ceil(T / f_ch).
pub fn ofdma_minislots(t: usize, f_ch: usize) -> Result<usize> {
    if t == 0 || f_ch == 0 {
        return Err(Error::InvalidParameter("T and f_ch must be >= 1".into()));
    }
    Ok(t.div_ceil(f_ch))
}

/// Enumeration guard for the error exponent: 2^K terms.
pub const EXPONENT_ENUM_MAX_K: usize = 20;

/// Gallager-style exponent term E_o(rho) for the Boolean-OR channel, by
/// exact enumeration: the wrong-set bits X1 range over {0,1}^i with
/// product-Bernoulli(bit_prob) weights, the kept-set bits X2 over
/// {0,1}^(K-i), and Y is the OR of all K bits.
pub fn gallager_e0(
    i: usize,
    rho: f64,
    k_active: usize,
    bit_prob: f64,
) -> Result<f64> {
    if i == 0 || i > k_active {
        return Err(Error::InvalidParameter(format!(
            "i must be in 1..=K, got i = {i}, K = {k_active}"
        )));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter("rho must be in [0,1]".into()));
    }
    if !(bit_prob > 0.0 && bit_prob < 1.0) {
        return Err(Error::InvalidParameter("bit_prob must be in (0,1)".into()));
    }
    if k_active > EXPONENT_ENUM_MAX_K {
        return Err(Error::Capacity {
            what: "error-exponent enumeration (2^K terms)",
            needed: 1u128 << k_active.min(127),
            cap: 1u128 << EXPONENT_ENUM_MAX_K,
            advice: Some("K above the enumeration cap; the exact sum is refused rather than approximated".into()),
        });
    }

    let p = bit_prob;
    let s = 1.0 / (1.0 + rho);
    let weight = |bits: u64, len: usize| -> f64 {
        let ones = bits.count_ones() as i32;
        p.powi(ones) * (1.0 - p).powi(len as i32 - ones)
    };

    let kept = k_active - i;
    let mut total = 0.0;
    for y in 0..2u64 {
        for x2 in 0..(1u64 << kept) {
            let p_x2 = weight(x2, kept);
            let mut inner = 0.0;
            for x1 in 0..(1u64 << i) {
                let or_all = (x1 != 0 || x2 != 0) as u64;
                if or_all == y {
                    // p(Y, X2 | X1) = P(X2) * 1{Y = OR}; the indicator
                    // survives the 1/(1+rho) power unchanged.
                    inner += weight(x1, i) * p_x2.powf(s);
                }
            }
            total += inner.powf(1.0 + rho);
        }
    }
    Ok(-total.log2())
}

/// The exponent of the error-probability bound for error class i:
/// T*E_o(rho) - rho*log2(C(N-K,i) C^i) - log2(C(K,i)).
/// Positive values certify decay of P(E_i).
pub fn error_exponent_bound(
    i: usize,
    rho: f64,
    bp: &BoundParams,
    bit_prob: f64,
    t: usize,
) -> Result<f64> {
    bp.validate()?;
    let e0 = gallager_e0(i, rho, bp.k_active, bit_prob)?;
    let rate = log2_binom(bp.n_sensors - bp.k_active, i)
        + i as f64 * (bp.n_messages as f64).log2();
    Ok(t as f64 * e0 - rho * rate - log2_binom(bp.k_active, i))
}
