//! Rigorous rational enclosures of the irrational rotation number.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

use super::SpaceError;

/// Smallest precision accepted for an enclosure: width strictly below 2^-64.
pub const MIN_ALPHA_BITS: u32 = 65;
/// Precision used when `NDSLAB_ALPHA_BITS` is unset.
pub const DEFAULT_ALPHA_BITS: u32 = 96;
/// Bounded number of one-bit refinements tried before a comparison is
/// reported as undecided.
pub const MAX_REFINEMENTS: u32 = 64;

/// Reads the enclosure precision from `NDSLAB_ALPHA_BITS`, clamped to
/// [`MIN_ALPHA_BITS`].
pub fn default_alpha_bits() -> u32 {
    std::env::var("NDSLAB_ALPHA_BITS")
        .ok()
        .and_then(|s| s.trim().parse::<u32>().ok())
        .map(|b| b.max(MIN_ALPHA_BITS))
        .unwrap_or(DEFAULT_ALPHA_BITS)
}

/// Where the enclosure comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AlphaSource {
    /// √2 − 1, refinable to any precision.
    Sqrt2Minus1,
    /// A user-declared enclosure `num/den ± 2^-radius_log2`; not refinable.
    Custom { num: i64, den: u64, radius_log2: u32 },
}

impl fmt::Display for AlphaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSource::Sqrt2Minus1 => write!(f, "sqrt2m1"),
            AlphaSource::Custom { num, den, radius_log2 } => {
                write!(f, "alpha({num}/{den} +- 1/2^{radius_log2})")
            }
        }
    }
}

/// Closed rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Enclosure {
    pub fn exact(v: BigRational) -> Self {
        Enclosure { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// `self * c + shift`, exact interval arithmetic.
    pub fn affine(&self, c: &BigInt, shift: &BigRational) -> Enclosure {
        let c = BigRational::from_integer(c.clone());
        let a = &self.lo * &c + shift;
        let b = &self.hi * &c + shift;
        if a <= b {
            Enclosure { lo: a, hi: b }
        } else {
            Enclosure { lo: b, hi: a }
        }
    }
}

/// An irrational α in (0, 1) given by a source and a working precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IrrationalEnclosure {
    source: AlphaSource,
    bits: u32,
}

impl IrrationalEnclosure {
    pub fn sqrt2_minus_1() -> Self {
        IrrationalEnclosure { source: AlphaSource::Sqrt2Minus1, bits: default_alpha_bits() }
    }

    pub fn sqrt2_minus_1_with_bits(bits: u32) -> Self {
        IrrationalEnclosure { source: AlphaSource::Sqrt2Minus1, bits: bits.max(MIN_ALPHA_BITS) }
    }

    pub fn custom(num: i64, den: u64, radius_log2: u32) -> Result<Self, SpaceError> {
        if den == 0 {
            return Err(SpaceError::InvalidAlpha("zero denominator".into()));
        }
        // width 2^(1-m) < 2^-64
        if radius_log2 < MIN_ALPHA_BITS + 1 {
            return Err(SpaceError::InvalidAlpha(format!(
                "enclosure radius 1/2^{radius_log2} too wide; need exponent >= {}",
                MIN_ALPHA_BITS + 1
            )));
        }
        let center = BigRational::new(BigInt::from(num), BigInt::from(den));
        let r = pow2_neg(radius_log2);
        if &center - &r <= BigRational::zero() || &center + &r >= BigRational::one() {
            return Err(SpaceError::InvalidAlpha("enclosure must lie inside (0, 1)".into()));
        }
        Ok(IrrationalEnclosure { source: AlphaSource::Custom { num, den, radius_log2 }, bits: radius_log2 - 1 })
    }

    pub fn source(&self) -> &AlphaSource {
        &self.source
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// The rational interval containing α at the current precision.
    pub fn enclosure(&self) -> Enclosure {
        match &self.source {
            AlphaSource::Sqrt2Minus1 => sqrt2_minus_1_enclosure(self.bits),
            AlphaSource::Custom { num, den, radius_log2 } => {
                let c = BigRational::new(BigInt::from(*num), BigInt::from(*den));
                let r = pow2_neg(*radius_log2);
                Enclosure { lo: &c - &r, hi: &c + &r }
            }
        }
    }

    /// Halves the enclosure width; `None` when the source cannot be refined.
    pub fn refined(&self) -> Option<Self> {
        match self.source {
            AlphaSource::Sqrt2Minus1 => Some(IrrationalEnclosure { source: self.source.clone(), bits: self.bits + 1 }),
            AlphaSource::Custom { .. } => None,
        }
    }

    /// log2 of the enclosure width (negative).
    pub fn width_log2(&self) -> i64 {
        match self.source {
            AlphaSource::Sqrt2Minus1 => -(self.bits as i64),
            AlphaSource::Custom { radius_log2, .. } => 1 - radius_log2 as i64,
        }
    }
}

/// 2^-k as an exact rational.
pub fn pow2_neg(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k as usize)
}

fn sqrt2_minus_1_enclosure(bits: u32) -> Enclosure {
    let scale = BigInt::one() << bits as usize;
    let s = (BigInt::from(2) << (2 * bits as usize)).sqrt();
    let one = BigRational::one();
    let lo = BigRational::new(s.clone(), scale.clone()) - &one;
    let hi = BigRational::new(s + 1, scale) - one;
    Enclosure { lo, hi }
}

/// Fractional part in [0, 1).
pub fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// Circle distance `min(frac x, 1 - frac x)` of an exact value.
pub fn circle_dist_exact(x: &BigRational) -> BigRational {
    let f = frac(x);
    let g = BigRational::one() - &f;
    if f <= g {
        f
    } else {
        g
    }
}

/// Bounds of the circle distance over an interval of reals.
pub fn circle_dist_bounds(e: &Enclosure) -> (BigRational, BigRational) {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if e.width() >= BigRational::one() {
        return (BigRational::zero(), half);
    }
    let base = e.lo.floor();
    let a = &e.lo - &base;
    let b = &e.hi - &base;
    let ga = circle_dist_exact(&a);
    let gb = circle_dist_exact(&b);
    let mut lo = if ga < gb { ga.clone() } else { gb.clone() };
    let mut hi = if ga > gb { ga } else { gb };
    let one = BigRational::one();
    if a <= one && one <= b {
        lo = BigRational::zero();
    }
    let three_half = &one + &half;
    if (a <= half && half <= b) || (a <= three_half && three_half <= b) {
        hi = half;
    }
    debug_assert!(!lo.is_negative());
    (lo, hi)
}

/// Three-valued outcome for comparisons against an enclosure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Decision {
    Yes,
    No,
    Undecided,
}

impl Decision {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Decision::Yes
        } else {
            Decision::No
        }
    }
}

/// Decides `dist(q + c·α) < bound` (strict), refining the enclosure up to
/// [`MAX_REFINEMENTS`] times.
pub fn decide_circle_dist_lt(alpha: &IrrationalEnclosure, q: &BigRational, c: i64, bound: &BigRational) -> Decision {
    if c == 0 {
        return Decision::from_bool(&circle_dist_exact(q) < bound);
    }
    let c = BigInt::from(c);
    let mut a = alpha.clone();
    for _ in 0..=MAX_REFINEMENTS {
        let e = a.enclosure().affine(&c, q);
        let (lo, hi) = circle_dist_bounds(&e);
        if &hi < bound {
            return Decision::Yes;
        }
        if &lo >= bound {
            return Decision::No;
        }
        match a.refined() {
            Some(r) => a = r,
            None => break,
        }
    }
    Decision::Undecided
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn sqrt2_enclosure_brackets_and_is_narrow() {
        let a = IrrationalEnclosure::sqrt2_minus_1_with_bits(70);
        let e = a.enclosure();
        // (lo+1)^2 < 2 < (hi+1)^2
        let one = BigRational::one();
        let two = BigRational::from_integer(BigInt::from(2));
        let l = &e.lo + &one;
        let h = &e.hi + &one;
        assert!(&l * &l < two);
        assert!(&h * &h > two);
        assert!(e.width() < pow2_neg(64));
        let r = a.refined().unwrap().enclosure();
        assert!(r.width() < e.width());
        assert!(r.lo >= e.lo && r.hi <= e.hi);
    }

    #[test]
    fn custom_enclosure_rejects_wide_radius() {
        assert!(IrrationalEnclosure::custom(41421, 100000, 10).is_err());
        let ok = IrrationalEnclosure::custom(41421, 100000, 70).unwrap();
        assert!(ok.refined().is_none());
    }

    #[test]
    fn circle_distance_bounds() {
        let e = Enclosure { lo: rat(9, 10), hi: rat(11, 10) };
        let (lo, hi) = circle_dist_bounds(&e);
        assert_eq!(lo, BigRational::zero());
        assert_eq!(hi, rat(1, 10));
        let e = Enclosure { lo: rat(2, 5), hi: rat(3, 5) };
        let (lo, hi) = circle_dist_bounds(&e);
        assert_eq!(lo, rat(2, 5));
        assert_eq!(hi, rat(1, 2));
    }

    #[test]
    fn decides_rotation_distance() {
        let a = IrrationalEnclosure::sqrt2_minus_1();
        // α ≈ 0.41421: dist(α) ≈ 0.414 < 1/2, not < 2/5
        assert_eq!(decide_circle_dist_lt(&a, &BigRational::zero(), 1, &rat(1, 2)), Decision::Yes);
        assert_eq!(decide_circle_dist_lt(&a, &BigRational::zero(), 1, &rat(2, 5)), Decision::No);
        // 5α ≈ 2.071: dist ≈ 0.0711
        assert_eq!(decide_circle_dist_lt(&a, &BigRational::zero(), 5, &rat(1, 10)), Decision::Yes);
    }
}
