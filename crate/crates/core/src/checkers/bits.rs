/// Fixed-length bitset over times `1..=len`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bits {
    len: u64,
    words: Vec<u64>,
}

impl Bits {
    pub fn new(len: u64) -> Self {
        Bits { len, words: vec![0; len.div_ceil(64) as usize] }
    }

    pub fn full(len: u64) -> Self {
        let mut b = Bits::new(len);
        for n in 1..=len {
            b.set(n);
        }
        b
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn set(&mut self, n: u64) {
        let i = n - 1;
        self.words[(i / 64) as usize] |= 1 << (i % 64);
    }

    pub fn get(&self, n: u64) -> bool {
        if n == 0 || n > self.len {
            return false;
        }
        let i = n - 1;
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    pub fn and(&self, other: &Bits) -> Bits {
        Bits { len: self.len.min(other.len), words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn and_assign(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn first(&self) -> Option<u64> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i as u64 * 64 + w.trailing_zeros() as u64 + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_subset(&self, other: &Bits) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn members(&self) -> Vec<u64> {
        (1..=self.len).filter(|&n| self.get(n)).collect()
    }

    /// The `k`-th member (1-based).
    pub fn nth(&self, k: u64) -> Option<u64> {
        (1..=self.len).filter(|&n| self.get(n)).nth(k.checked_sub(1)? as usize)
    }
}

/// Indices of the inclusion-minimal sets among distinct `sets`.
pub fn minimal_antichain(sets: &[Bits]) -> Vec<usize> {
    (0..sets.len())
        .filter(|&i| !(0..sets.len()).any(|j| j != i && sets[j].is_subset(&sets[i]) && sets[j] != sets[i]))
        .collect()
}
