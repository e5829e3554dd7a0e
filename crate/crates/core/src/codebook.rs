//! Random superimposed codebook construction.
//!
//! Every (sensor, message, subcodeword) triple owns one length-T binary
//! codeword whose bits are i.i.d. Bernoulli(`bit_prob`), default ln(2)/K.
//! A non-secure code has one subcodeword per message (F = 1); the secure
//! construction groups F codewords into a sub-bin per message and the
//! stochastic encoder picks one uniformly at transmit time.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitRow};
use crate::rng::{chain, derive_seed, BernoulliCounter};
use crate::{Error, Result};

/// Dimensions and seed of a codebook.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Total number of sensors (N).
    pub n_sensors: usize,
    /// Maximum number of simultaneously active sensors the code is sized for (K).
    pub k_active: usize,
    /// Messages per sensor (C).
    pub n_messages: usize,
    /// Codewords per sub-bin (F); 1 for the non-secure code.
    pub n_subcodewords: usize,
    /// Codeword length in minislots (T).
    pub code_length: usize,
    /// Per-bit probability of a 1.
    pub bit_prob: f64,
    pub seed: u64,
}

impl CodeParams {
    /// Parameters with the default bit probability ln(2)/K.
    pub fn new(
        n_sensors: usize,
        k_active: usize,
        n_messages: usize,
        n_subcodewords: usize,
        code_length: usize,
        seed: u64,
    ) -> Result<Self> {
        let p = CodeParams {
            n_sensors,
            k_active,
            n_messages,
            n_subcodewords,
            code_length,
            bit_prob: Self::default_bit_prob(k_active),
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_bit_prob(mut self, bit_prob: f64) -> Result<Self> {
        self.bit_prob = bit_prob;
        self.validate()?;
        Ok(self)
    }

    /// ln(2)/K.
    pub fn default_bit_prob(k_active: usize) -> f64 {
        std::f64::consts::LN_2 / k_active as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 {
            return Err(Error::InvalidParameter("n_sensors must be >= 1".into()));
        }
        if self.k_active == 0 || self.k_active > self.n_sensors {
            return Err(Error::InvalidParameter(format!(
                "k_active must be in 1..=n_sensors, got {} (N = {})",
                self.k_active, self.n_sensors
            )));
        }
        if self.n_messages == 0 {
            return Err(Error::InvalidParameter("n_messages must be >= 1".into()));
        }
        if self.n_subcodewords == 0 {
            return Err(Error::InvalidParameter("n_subcodewords must be >= 1".into()));
        }
        if self.code_length == 0 {
            return Err(Error::InvalidParameter("code_length must be >= 1".into()));
        }
        if !(self.bit_prob > 0.0 && self.bit_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bit_prob must be in (0,1), got {}",
                self.bit_prob
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_sensors * self.n_messages * self.n_subcodewords
    }
}

/// A (sensor, message, subcodeword) row address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId {
    pub sensor: usize,
    pub message: usize,
    pub subcodeword: usize,
}

/// The full N*C*F x T transmission matrix.
#[derive(Debug, Clone)]
pub struct Codebook {
    params: CodeParams,
    bits: BitMatrix,
}

impl Codebook {
    /// Generates the matrix. Bit (sensor, message, subcodeword, position) is
    /// a pure function of those indices plus the seed, so regeneration is
    /// bit-identical and any row can be recomputed on its own.
    pub fn generate(params: CodeParams) -> Result<Self> {
        params.validate()?;
        let mut bits = BitMatrix::zeros(params.n_rows(), params.code_length);
        let t = params.code_length;
        for s in 0..params.n_sensors {
            for c in 0..params.n_messages {
                for f in 0..params.n_subcodewords {
                    let r = ((s * params.n_messages) + c) * params.n_subcodewords + f;
                    let sampler = BernoulliCounter::new(
                        Self::row_key(params.seed, s, c, f),
                        params.bit_prob,
                    );
                    let words = bits.row_words_mut(r);
                    for (wi, word) in words.iter_mut().enumerate() {
                        let base = wi * 64;
                        let mut w = 0u64;
                        for b in 0..64.min(t - base) {
                            w |= (sampler.bit(base + b) as u64) << b;
                        }
                        *word = w;
                    }
                }
            }
        }
        Ok(Codebook { params, bits })
    }

    fn row_key(seed: u64, sensor: usize, message: usize, sub: usize) -> u64 {
        let k = derive_seed(seed, &[sensor as u64]);
        chain(chain(k, message as u64), sub as u64)
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn n_rows(&self) -> usize {
        self.bits.rows()
    }

    pub fn code_length(&self) -> usize {
        self.params.code_length
    }

    #[inline]
    pub fn row_index(&self, id: RowId) -> usize {
        debug_assert!(id.sensor < self.params.n_sensors);
        debug_assert!(id.message < self.params.n_messages);
        debug_assert!(id.subcodeword < self.params.n_subcodewords);
        ((id.sensor * self.params.n_messages) + id.message) * self.params.n_subcodewords
            + id.subcodeword
    }

    #[inline]
    pub fn row_id(&self, index: usize) -> RowId {
        let f = self.params.n_subcodewords;
        let c = self.params.n_messages;
        RowId {
            sensor: index / (c * f),
            message: (index / f) % c,
            subcodeword: index % f,
        }
    }

    #[inline]
    pub fn row(&self, id: RowId) -> BitRow<'_> {
        self.bits.row(self.row_index(id))
    }

    #[inline]
    pub fn row_at(&self, index: usize) -> BitRow<'_> {
        self.bits.row(index)
    }

    /// Row range of one sensor's bin (all messages, all subcodewords).
    pub fn bin_range(&self, sensor: usize) -> std::ops::Range<usize> {
        let per = self.params.n_messages * self.params.n_subcodewords;
        sensor * per..(sensor + 1) * per
    }

    pub fn fraction_of_ones(&self) -> f64 {
        self.bits.count_ones() as f64 / (self.n_rows() * self.code_length()) as f64
    }

    /// Writes the portable text form:
    /// one header line `BOOLMAC v1 N K C F T seed p_over_ln2`, then one
    /// `0`/`1` row per line in (sensor, message, subcodeword) order.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let p = &self.params;
        writeln!(
            w,
            "BOOLMAC v1 {} {} {} {} {} {} {}",
            p.n_sensors,
            p.k_active,
            p.n_messages,
            p.n_subcodewords,
            p.code_length,
            p.seed,
            p.bit_prob / std::f64::consts::LN_2,
        )?;
        for r in 0..self.n_rows() {
            writeln!(w, "{}", self.row_at(r).to_bitvec().to_01())?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty codebook file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 9 || fields[0] != "BOOLMAC" || fields[1] != "v1" {
            return Err(Error::Parse(format!("bad codebook header: {header:?}")));
        }
        let parse_usize = |i: usize, name: &str| -> Result<usize> {
            fields[i]
                .parse()
                .map_err(|_| Error::Parse(format!("bad {name} in header: {:?}", fields[i])))
        };
        let params = CodeParams {
            n_sensors: parse_usize(2, "N")?,
            k_active: parse_usize(3, "K")?,
            n_messages: parse_usize(4, "C")?,
            n_subcodewords: parse_usize(5, "F")?,
            code_length: parse_usize(6, "T")?,
            seed: fields[7]
                .parse()
                .map_err(|_| Error::Parse(format!("bad seed in header: {:?}", fields[7])))?,
            bit_prob: fields[8]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad bit_prob in header: {:?}", fields[8])))?
                * std::f64::consts::LN_2,
        };
        params.validate()?;
        let mut bits = BitMatrix::zeros(params.n_rows(), params.code_length);
        let mut rows_read = 0;
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            if rows_read >= bits.rows() {
                return Err(Error::Parse("too many rows in codebook file".into()));
            }
            if line.len() != params.code_length {
                return Err(Error::ShapeMismatch {
                    expected: params.code_length,
                    got: line.len(),
                });
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => bits.set(rows_read, c, true),
                    other => {
                        return Err(Error::Parse(format!("unexpected character {other:?} in row")))
                    }
                }
            }
            rows_read += 1;
        }
        if rows_read != bits.rows() {
            return Err(Error::Parse(format!(
                "expected {} rows, found {rows_read}",
                bits.rows()
            )));
        }
        Ok(Codebook { params, bits })
    }
}

impl PartialEq for Codebook {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.bits == other.bits
    }
}

#[cfg(test)]
impl Codebook {
    /// Hand-built matrices for worked unit-test instances.
    pub(crate) fn from_parts_for_tests(params: CodeParams, bits: BitMatrix) -> Self {
        assert_eq!(bits.rows(), params.n_rows());
        assert_eq!(bits.cols(), params.code_length);
        Codebook { params, bits }
    }
}
