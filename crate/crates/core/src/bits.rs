//! Fixed-width bit rows backing the query-attribute matrix.
//!
//! Pair similarity and dissimilarity reduce to popcounts over AND / XOR of
//! two rows, so the matrix rows are stored as packed u64 words.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.len, "bit {bit} out of range {}", self.len);
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        assert!(bit < self.len, "bit {bit} out of range {}", self.len);
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    #[allow(dead_code)] // used by oracle tests
    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Number of positions where both rows hold a 1.
    pub fn and_count(&self, other: &BitRow) -> u64 {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a & b).count_ones()))
            .sum()
    }

    /// Number of positions where exactly one row holds a 1.
    pub fn xor_count(&self, other: &BitRow) -> u64 {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_naive_loops() {
        let mut a = BitRow::zeros(130);
        let mut b = BitRow::zeros(130);
        for i in (0..130).step_by(3) {
            a.set(i);
        }
        for i in (0..130).step_by(5) {
            b.set(i);
        }
        let naive_and = (0..130).filter(|&i| a.get(i) && b.get(i)).count() as u64;
        let naive_xor = (0..130).filter(|&i| a.get(i) != b.get(i)).count() as u64;
        assert_eq!(a.and_count(&b), naive_and);
        assert_eq!(a.xor_count(&b), naive_xor);
        assert_eq!(a.count_ones(), 44);
    }
}
