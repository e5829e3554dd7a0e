//! Word-packed bit vectors and row-major bit matrices.
//!
//! Decoding is dominated by support-containment tests (`row & !y == 0`), so
//! rows are stored as contiguous `u64` words and the hot predicates operate
//! word-at-a-time. Trailing bits past `len` are kept zero; every mutating op
//! preserves that so equality and popcounts can stay word-wise.

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Fixed-length bit vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let w = &mut self.words[i / WORD_BITS];
        let mask = 1u64 << (i % WORD_BITS);
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn as_row(&self) -> BitRow<'_> {
        BitRow {
            len: self.len,
            words: &self.words,
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positions of the set bits, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn or_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "or_assign length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Builds a vector with the given support positions set.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    /// `'0'`/`'1'` text form, position 0 first.
    pub fn to_01(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn from_01(s: &str) -> crate::Result<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                other => {
                    return Err(crate::Error::Parse(format!(
                        "unexpected character {other:?} in bit string"
                    )))
                }
            }
        }
        Ok(v)
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec({})", self.to_01())
    }
}

/// Borrowed view of one packed row.
#[derive(Clone, Copy)]
pub struct BitRow<'a> {
    len: usize,
    words: &'a [u64],
}

impl<'a> BitRow<'a> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `self ⊆ other`, i.e. no position where self has 1 and other 0.
    #[inline]
    pub fn is_subset_of(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(r, y)| r & !y == 0)
    }

    /// Same containment test restricted to the positions set in `mask`.
    #[inline]
    pub fn is_subset_of_masked(&self, other: &BitVec, mask: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        debug_assert_eq!(self.len, mask.len);
        self.words
            .iter()
            .zip(&other.words)
            .zip(&mask.words)
            .all(|((r, y), m)| r & !y & m == 0)
    }

    /// Popcount of `self & other`.
    #[inline]
    pub fn and_count(&self, other: &BitVec) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(r, y)| (r & y).count_ones() as usize)
            .sum()
    }

    pub fn or_into(&self, acc: &mut BitVec) {
        debug_assert_eq!(self.len, acc.len);
        for (a, r) in acc.words.iter_mut().zip(self.words) {
            *a |= r;
        }
    }

    pub fn to_bitvec(&self) -> BitVec {
        BitVec {
            len: self.len,
            words: self.words.to_vec(),
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }
}

/// Dense bit matrix with row-major packed storage.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    row_words: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let row_words = words_for(cols);
        BitMatrix {
            rows,
            cols,
            row_words,
            words: vec![0; rows * row_words],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> BitRow<'_> {
        let start = r * self.row_words;
        BitRow {
            len: self.cols,
            words: &self.words[start..start + self.row_words],
        }
    }

    pub(crate) fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        let start = r * self.row_words;
        &mut self.words[start..start + self.row_words]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row(r).get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(c < self.cols);
        let w = &mut self.row_words_mut(r)[c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitMatrix({}x{})", self.rows, self.cols)
    }
}
