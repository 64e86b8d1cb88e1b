/// Fixed-size bitset over trajectory indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrajMask {
    words: Vec<u64>,
}

impl TrajMask {
    pub fn new(n: usize) -> Self {
        TrajMask {
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = TrajMask::new(n);
        for i in indices {
            mask.insert(i);
        }
        mask
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `|self ∩ other|`
    pub fn intersection_count(&self, other: &TrajMask) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }
}
