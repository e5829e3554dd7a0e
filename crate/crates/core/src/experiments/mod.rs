//! Deterministic Monte Carlo harness.
//!
//! Every experiment is a pure function of its spec and base seed:
//! per-trial seeds are derived by hashing (base seed, grid point, trial),
//! so parallel and serial runs emit identical numbers. Results go to CSV
//! with a fixed column schema plus a JSON sidecar of the spec.

mod bounds_sweep;
mod cdf;
mod leakage;
pub mod stats;

pub use bounds_sweep::{run_bound_sweeps, BoundRow, BoundTable};
pub use cdf::{run_cdf_experiment, run_secure_cdf_experiment, run_sweep, PointResult, SweepResult};
pub use leakage::{run_leakage_experiment, LeakageReport};

use serde::{Deserialize, Serialize};

use crate::protocol::DecoderKind;
use crate::{Error, Result};

/// Memory guard for the derived sub-bin count: total packed codebook bits.
pub const DEFAULT_MAX_CODEBOOK_BITS: u128 = 1 << 31;

/// Sub-bin size for the secure code at observation probability `delta`:
/// F = 2^ceil(T*delta/K), one codeword per potentially leaked bit of
/// randomness, normalized by the number of active sensors. delta = 0
/// degenerates to F = 1.
pub fn derive_subbin_count(
    t: usize,
    delta: f64,
    k_active: usize,
    n_rows_without_f: usize,
    max_bits: u128,
) -> Result<usize> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter("delta must be in [0,1)".into()));
    }
    let exponent = (t as f64 * delta / k_active as f64).ceil() as u32;
    let f = 1usize << exponent.min(63);
    let bits = n_rows_without_f as u128 * f as u128 * t as u128;
    if bits > max_bits {
        return Err(Error::Capacity {
            what: "secure codebook bits",
            needed: bits,
            cap: max_bits,
            advice: Some(format!("F = 2^{exponent} at T = {t}, delta = {delta}")),
        });
    }
    Ok(f)
}

/// Grids for sweep-style runs; one row is emitted per cross-product point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub c_grid: Vec<usize>,
    pub t_grid: Vec<usize>,
    #[serde(default = "zero_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "zero_grid")]
    pub q_grid: Vec<f64>,
    #[serde(default = "one_grid")]
    pub f_ch_grid: Vec<usize>,
    pub epsilon: f64,
    pub decoder: DecoderKind,
    pub trials: usize,
    pub base_seed: u64,
}

fn zero_grid() -> Vec<f64> {
    vec![0.0]
}

fn one_grid() -> Vec<usize> {
    vec![1]
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        for (empty, name) in [
            (self.n_grid.is_empty(), "n_grid"),
            (self.k_grid.is_empty(), "k_grid"),
            (self.c_grid.is_empty(), "c_grid"),
            (self.delta_grid.is_empty(), "delta_grid"),
            (self.q_grid.is_empty(), "q_grid"),
            (self.f_ch_grid.is_empty(), "f_ch_grid"),
        ] {
            if empty {
                return Err(Error::InvalidParameter(format!("{name} must be nonempty")));
            }
        }
        Ok(())
    }

    /// JSON sidecar for provenance, written next to the CSV.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}
