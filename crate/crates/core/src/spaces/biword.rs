//! Bi-infinite symbol sequences with eventually periodic tails.

use std::fmt;

use num::integer::lcm;
use num::{BigInt, BigRational, One, Zero};

use super::alpha::pow2_neg;
use super::SpaceError;

/// A point of the full shift: a finite window `word` on
/// `[offset, offset + len)`, a periodic left tail read leftwards from
/// `offset - 1`, and a periodic right tail read rightwards from the window end.
#[derive(Clone, Debug, Eq)]
pub struct BiWord {
    offset: i64,
    left: Vec<u8>,
    word: Vec<u8>,
    right: Vec<u8>,
}

impl BiWord {
    pub fn new(offset: i64, left: Vec<u8>, word: Vec<u8>, right: Vec<u8>) -> Result<Self, SpaceError> {
        if left.is_empty() || right.is_empty() {
            return Err(SpaceError::Malformed("periodic tails must be nonempty".into()));
        }
        Ok(BiWord { offset, left, word, right })
    }

    /// The constant sequence `s^Z`.
    pub fn constant(s: u8) -> Self {
        BiWord { offset: 0, left: vec![s], word: Vec::new(), right: vec![s] }
    }

    /// `word` on `[start, start + len)`, `fill` elsewhere.
    pub fn from_window(start: i64, word: Vec<u8>, fill: u8) -> Self {
        BiWord { offset: start, left: vec![fill], word, right: vec![fill] }
    }

    /// The periodic point repeating `word` with phase fixed so that
    /// `x[start + j] = word[j]`.
    pub fn periodic(start: i64, word: Vec<u8>) -> Result<Self, SpaceError> {
        if word.is_empty() {
            return Err(SpaceError::Malformed("empty period".into()));
        }
        let mut left = word.clone();
        left.reverse();
        Ok(BiWord { offset: start, left, word: word.clone(), right: word })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn window_end(&self) -> i64 {
        self.offset + self.word.len() as i64
    }

    pub fn left_period(&self) -> &[u8] {
        &self.left
    }

    pub fn right_period(&self) -> &[u8] {
        &self.right
    }

    pub fn window(&self) -> &[u8] {
        &self.word
    }

    /// Coordinate `x_i`.
    pub fn at(&self, i: i64) -> u8 {
        if i < self.offset {
            let j = (self.offset - 1 - i) as u64 % self.left.len() as u64;
            self.left[j as usize]
        } else if i < self.window_end() {
            self.word[(i - self.offset) as usize]
        } else {
            let j = (i - self.window_end()) as u64 % self.right.len() as u64;
            self.right[j as usize]
        }
    }

    pub fn max_symbol(&self) -> u8 {
        self.left.iter().chain(&self.word).chain(&self.right).copied().max().unwrap_or(0)
    }

    /// `σ^e(x)`, i.e. `(σ^e x)_i = x_{i+e}`.
    pub fn shifted(&self, e: i64) -> BiWord {
        BiWord { offset: self.offset - e, ..self.clone() }
    }

    /// Range `[lo, hi)` outside of which both sequences are purely periodic,
    /// widened to contain 0.
    fn joint_range(&self, other: &BiWord) -> (i64, i64) {
        let lo = self.offset.min(other.offset).min(0);
        let hi = self.window_end().max(other.window_end()).max(1);
        (lo, hi)
    }

    /// Exact `Σ_i |x_i − y_i| 2^{−|i|}`.
    pub fn distance(&self, other: &BiWord) -> BigRational {
        let (lo, hi) = self.joint_range(other);
        let diff = |i: i64| (self.at(i) as i64 - other.at(i) as i64).unsigned_abs();
        let weight = |i: i64| pow2_neg(i.unsigned_abs() as u32);
        let mut total = BigRational::zero();
        for i in lo..hi {
            let d = diff(i);
            if d != 0 {
                total += weight(i) * BigRational::from_integer(BigInt::from(d));
            }
        }
        // right tail: indices >= hi >= 1, period L, geometric factor 1/(1 - 2^-L)
        let lr = lcm(self.right.len(), other.right.len());
        let mut block = BigRational::zero();
        for j in 0..lr as i64 {
            let d = diff(hi + j);
            if d != 0 {
                block += weight(hi + j) * BigRational::from_integer(BigInt::from(d));
            }
        }
        total += block * geometric_factor(lr);
        // left tail: indices <= lo - 1 <= -1
        let ll = lcm(self.left.len(), other.left.len());
        let mut block = BigRational::zero();
        for j in 0..ll as i64 {
            let i = lo - 1 - j;
            let d = diff(i);
            if d != 0 {
                block += weight(i) * BigRational::from_integer(BigInt::from(d));
            }
        }
        total += block * geometric_factor(ll);
        total
    }

    /// The window `[-w, w]` read off this point.
    pub fn window_word(&self, start: i64, end_inclusive: i64) -> Vec<u8> {
        (start..=end_inclusive).map(|i| self.at(i)).collect()
    }
}

fn geometric_factor(period: usize) -> BigRational {
    let one = BigRational::one();
    &one / (&one - pow2_neg(period as u32))
}

impl PartialEq for BiWord {
    fn eq(&self, other: &Self) -> bool {
        let (lo, hi) = self.joint_range(other);
        let lr = lcm(self.right.len(), other.right.len()) as i64;
        let ll = lcm(self.left.len(), other.left.len()) as i64;
        (lo - ll..hi + lr).all(|i| self.at(i) == other.at(i))
    }
}

/// Least rotation of the primitive root of a period: equal tails give equal
/// canonical periods whatever the representation.
fn canonical_period(p: &[u8]) -> Vec<u8> {
    let n = p.len();
    let root = (1..=n).find(|&d| n.is_multiple_of(d) && (d..n).all(|i| p[i] == p[i - d])).unwrap_or(n);
    (0..root).map(|r| [&p[r..root], &p[..r]].concat()).min().unwrap_or_default()
}

// Consistent with the value equality above: the window and phase can vary
// between equal points, the tails' periods up to rotation cannot.
impl std::hash::Hash for BiWord {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        canonical_period(&self.left).hash(state);
        canonical_period(&self.right).hash(state);
    }
}

impl fmt::Display for BiWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: &[u8]| v.iter().map(|c| c.to_string()).collect::<String>();
        let mut l = self.left.clone();
        l.reverse();
        write!(f, "({})*[{}@{}]({})*", s(&l), s(&self.word), self.offset, s(&self.right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Truncated sum over [-n, n] with exact rationals.
    fn truncated(x: &BiWord, y: &BiWord, n: i64) -> BigRational {
        let mut t = BigRational::zero();
        for i in -n..=n {
            let d = (x.at(i) as i64 - y.at(i) as i64).abs();
            t += pow2_neg(i.unsigned_abs() as u32) * BigRational::from_integer(d.into());
        }
        t
    }

    #[test]
    fn all_zeros_vs_all_ones_is_three() {
        let z = BiWord::constant(0);
        let o = BiWord::constant(1);
        assert_eq!(z.distance(&o), rat(3, 1));
        // brute-force truncation approaches 3 from below: 3 - 2^{1-n}
        let t = truncated(&z, &o, 40);
        assert_eq!(rat(3, 1) - t, pow2_neg(39));
    }

    #[test]
    fn distance_matches_truncation_for_periodic_points() {
        let x = BiWord::new(-3, vec![1, 0, 0], vec![1, 1, 0, 1], vec![0, 1]).unwrap();
        let y = BiWord::new(2, vec![0, 1], vec![0], vec![1, 1, 0]).unwrap();
        let exact = x.distance(&y);
        let t = truncated(&x, &y, 60);
        let gap = &exact - &t;
        assert!(gap >= BigRational::zero());
        assert!(gap <= rat(3, 1) * pow2_neg(59));
    }

    #[test]
    fn equality_ignores_representation() {
        let a = BiWord::constant(0);
        let b = BiWord::new(5, vec![0, 0], vec![0, 0, 0], vec![0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.distance(&b), BigRational::zero());
        let c = BiWord::from_window(100, vec![1], 0);
        assert_ne!(a, c);
    }

    #[test]
    fn shift_reindexes() {
        let x = BiWord::from_window(0, vec![1], 0);
        let y = x.shifted(1);
        assert_eq!(y.at(-1), 1);
        assert_eq!(y.at(0), 0);
        for i in -10..10 {
            assert_eq!(y.at(i), x.at(i + 1));
        }
    }

    #[test]
    fn equal_points_hash_alike() {
        use std::collections::HashSet;
        let reps = [
            BiWord::constant(0),
            BiWord::from_window(-3, vec![0, 0, 0], 0),
            BiWord::new(5, vec![0, 0], vec![], vec![0, 0, 0]).unwrap(),
        ];
        assert!(reps.iter().all(|r| *r == reps[0]));
        assert_eq!(reps.iter().cloned().collect::<HashSet<_>>().len(), 1);
        // same sequence, tail periods written at different phases
        let a = BiWord::periodic(0, vec![0, 1]).unwrap();
        let b = BiWord::periodic(1, vec![1, 0]).unwrap();
        assert_eq!(a, b);
        assert_eq!([a, b].into_iter().collect::<HashSet<_>>().len(), 1);
        assert_ne!(BiWord::periodic(0, vec![0, 1]).unwrap(), BiWord::periodic(1, vec![0, 1]).unwrap());
    }
}
