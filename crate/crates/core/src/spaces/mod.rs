//! Phase spaces: the full shift, finite discrete spaces, the circle under an
//! irrational rotation number, and finite products of these.

pub mod alpha;
pub mod biword;

use std::collections::BTreeSet;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

pub use alpha::{AlphaSource, Decision, Enclosure, IrrationalEnclosure};
pub use biword::BiWord;

use alpha::{circle_dist_bounds, circle_dist_exact, frac, pow2_neg};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("space mismatch: {0}")]
    Mismatch(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid alpha enclosure: {0}")]
    InvalidAlpha(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpaceDesc {
    Shift { alphabet_size: u8 },
    Finite { point_count: u32 },
    Circle { alpha: IrrationalEnclosure },
    Product(Vec<SpaceDesc>),
}

impl SpaceDesc {
    pub fn shift() -> Self {
        SpaceDesc::Shift { alphabet_size: 2 }
    }

    pub fn shift_with(alphabet_size: u8) -> Result<Self, SpaceError> {
        if alphabet_size < 2 {
            return Err(SpaceError::Malformed("alphabet size must be >= 2".into()));
        }
        Ok(SpaceDesc::Shift { alphabet_size })
    }

    pub fn finite(point_count: u32) -> Result<Self, SpaceError> {
        if point_count == 0 {
            return Err(SpaceError::Malformed("finite space needs at least one point".into()));
        }
        Ok(SpaceDesc::Finite { point_count })
    }

    pub fn circle() -> Self {
        SpaceDesc::Circle { alpha: IrrationalEnclosure::sqrt2_minus_1() }
    }

    /// Whether the space has an isolated point (finite spaces, or a product
    /// all of whose factors have one).
    pub fn has_isolated_points(&self) -> bool {
        match self {
            SpaceDesc::Finite { .. } => true,
            SpaceDesc::Shift { .. } | SpaceDesc::Circle { .. } => false,
            SpaceDesc::Product(parts) => parts.iter().all(|p| p.has_isolated_points()),
        }
    }

    /// Supremum of the metric over the whole space.
    pub fn diameter(&self) -> BigRational {
        match self {
            SpaceDesc::Shift { alphabet_size } => {
                BigRational::from_integer(BigInt::from(3 * (*alphabet_size as i64 - 1)))
            }
            SpaceDesc::Finite { point_count } => {
                if *point_count > 1 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            SpaceDesc::Circle { .. } => half(),
            SpaceDesc::Product(parts) => parts.iter().map(|p| p.diameter()).max().unwrap_or_else(BigRational::zero),
        }
    }

    pub fn alpha(&self) -> Option<&IrrationalEnclosure> {
        match self {
            SpaceDesc::Circle { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SpaceDesc::Shift { .. } => "shift",
            SpaceDesc::Finite { .. } => "finite",
            SpaceDesc::Circle { .. } => "circle",
            SpaceDesc::Product(_) => "product",
        }
    }
}

impl fmt::Display for SpaceDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDesc::Shift { alphabet_size } => write!(f, "shift({alphabet_size})"),
            SpaceDesc::Finite { point_count } => write!(f, "finite({point_count})"),
            SpaceDesc::Circle { alpha } => write!(f, "circle({})", alpha.source()),
            SpaceDesc::Product(parts) => {
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "product({})", s.join(", "))
            }
        }
    }
}

pub(crate) fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// The angle `q + c·α (mod 1)`; `q` is kept reduced to `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineAngle {
    q: BigRational,
    c: i64,
}

impl AffineAngle {
    pub fn new(q: BigRational, c: i64) -> Self {
        AffineAngle { q: frac(&q), c }
    }

    pub fn rational(q: BigRational) -> Self {
        Self::new(q, 0)
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    pub fn rotated(&self, by: i64) -> Self {
        AffineAngle { q: self.q.clone(), c: self.c + by }
    }

    pub fn offset(&self, dq: &BigRational) -> Self {
        Self::new(&self.q + dq, self.c)
    }

    /// Enclosure of the real angle in `[0, 1)` modulo integer shifts.
    pub fn enclosure(&self, alpha: &IrrationalEnclosure) -> Enclosure {
        alpha.enclosure().affine(&BigInt::from(self.c), &self.q)
    }
}

impl fmt::Display for AffineAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}a", self.q, self.c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    /// 1-based point index of a finite space.
    FiniteId(u32),
    BiWord(BiWord),
    Angle(AffineAngle),
    Tuple(Vec<Point>),
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::FiniteId(i) => write!(f, "{i}"),
            Point::BiWord(w) => write!(f, "{w}"),
            Point::Angle(a) => write!(f, "{a}"),
            Point::Tuple(ps) => {
                let s: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                write!(f, "({})", s.join(", "))
            }
        }
    }
}

/// Exact distance or a rigorous enclosure of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distance {
    Exact(BigRational),
    Enclosed(Enclosure),
}

impl Distance {
    pub fn lower(&self) -> &BigRational {
        match self {
            Distance::Exact(v) => v,
            Distance::Enclosed(e) => &e.lo,
        }
    }

    pub fn upper(&self) -> &BigRational {
        match self {
            Distance::Exact(v) => v,
            Distance::Enclosed(e) => &e.hi,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Distance::Exact(v) => Some(v),
            Distance::Enclosed(_) => None,
        }
    }

    pub fn max(self, other: Distance) -> Distance {
        match (self, other) {
            (Distance::Exact(a), Distance::Exact(b)) => Distance::Exact(a.max(b)),
            (a, b) => Distance::Enclosed(Enclosure {
                lo: a.lower().clone().max(b.lower().clone()),
                hi: a.upper().clone().max(b.upper().clone()),
            }),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact(v) => write!(f, "{v}"),
            Distance::Enclosed(e) => write!(f, "[{}, {}]", e.lo, e.hi),
        }
    }
}

/// Metric of the space. Products use the maximum of component distances.
pub fn distance(space: &SpaceDesc, p: &Point, q: &Point) -> Result<Distance, SpaceError> {
    match (space, p, q) {
        (SpaceDesc::Shift { .. }, Point::BiWord(a), Point::BiWord(b)) => Ok(Distance::Exact(a.distance(b))),
        (SpaceDesc::Finite { point_count }, Point::FiniteId(a), Point::FiniteId(b)) => {
            check_id(*a, *point_count)?;
            check_id(*b, *point_count)?;
            Ok(Distance::Exact(if a == b { BigRational::zero() } else { BigRational::one() }))
        }
        (SpaceDesc::Circle { alpha }, Point::Angle(a), Point::Angle(b)) => {
            let dq = &a.q - &b.q;
            let dc = a.c - b.c;
            if dc == 0 {
                return Ok(Distance::Exact(circle_dist_exact(&dq)));
            }
            let e = alpha.enclosure().affine(&BigInt::from(dc), &dq);
            let (lo, hi) = circle_dist_bounds(&e);
            Ok(Distance::Enclosed(Enclosure { lo, hi }))
        }
        (SpaceDesc::Product(parts), Point::Tuple(xs), Point::Tuple(ys))
            if xs.len() == parts.len() && ys.len() == parts.len() =>
        {
            let mut acc = Distance::Exact(BigRational::zero());
            for ((s, x), y) in parts.iter().zip(xs).zip(ys) {
                acc = acc.max(distance(s, x, y)?);
            }
            Ok(acc)
        }
        _ => Err(SpaceError::Mismatch(format!("points do not belong to {space}"))),
    }
}

fn check_id(i: u32, n: u32) -> Result<(), SpaceError> {
    if i == 0 || i > n {
        Err(SpaceError::Malformed(format!("point id {i} outside 1..={n}")))
    } else {
        Ok(())
    }
}

/// An exactly representable nonempty open set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicOpen {
    /// Points agreeing with `word` on `[start, start + len)`.
    Cylinder {
        start: i64,
        word: Vec<u8>,
    },
    FiniteSet(BTreeSet<u32>),
    /// Open arc of half-width `radius` around `center`.
    Arc {
        center: ArcCenter,
        radius: BigRational,
    },
    Rect(Vec<BasicOpen>),
}

/// Orderable wrapper so that basic opens can key ordered collections.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArcCenter(pub AffineAngle);

impl PartialOrd for ArcCenter {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ArcCenter {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.c, &self.0.q).cmp(&(other.0.c, &other.0.q))
    }
}

impl BasicOpen {
    pub fn cylinder(start: i64, word: Vec<u8>) -> Result<Self, SpaceError> {
        if word.is_empty() {
            return Err(SpaceError::Malformed("cylinder word must be nonempty".into()));
        }
        Ok(BasicOpen::Cylinder { start, word })
    }

    pub fn finite_set<I: IntoIterator<Item = u32>>(ids: I) -> Result<Self, SpaceError> {
        let s: BTreeSet<u32> = ids.into_iter().collect();
        if s.is_empty() {
            return Err(SpaceError::Malformed("finite set must be nonempty".into()));
        }
        Ok(BasicOpen::FiniteSet(s))
    }

    pub fn arc(center: AffineAngle, radius: BigRational) -> Result<Self, SpaceError> {
        if !radius.is_positive() || radius > half() {
            return Err(SpaceError::Malformed("arc radius must lie in (0, 1/2]".into()));
        }
        Ok(BasicOpen::Arc { center: ArcCenter(center), radius })
    }

    /// Window `[start, end]` of a cylinder.
    pub fn window(&self) -> Option<(i64, i64)> {
        match self {
            BasicOpen::Cylinder { start, word } => Some((*start, *start + word.len() as i64 - 1)),
            _ => None,
        }
    }

    /// Membership of a point; arcs may be undecidable at the current precision.
    pub fn contains(&self, space: &SpaceDesc, p: &Point) -> Result<Decision, SpaceError> {
        match (self, p) {
            (BasicOpen::Cylinder { start, word }, Point::BiWord(x)) => {
                Ok(Decision::from_bool(word.iter().enumerate().all(|(j, s)| x.at(start + j as i64) == *s)))
            }
            (BasicOpen::FiniteSet(ids), Point::FiniteId(i)) => Ok(Decision::from_bool(ids.contains(i))),
            (BasicOpen::Arc { center, radius }, Point::Angle(a)) => {
                let alpha = space.alpha().ok_or_else(|| SpaceError::Mismatch("arc outside a circle space".into()))?;
                let dq = &a.q - &center.0.q;
                Ok(alpha::decide_circle_dist_lt(alpha, &dq, a.c - center.0.c, radius))
            }
            (BasicOpen::Rect(parts), Point::Tuple(xs)) => {
                let SpaceDesc::Product(spaces) = space else {
                    return Err(SpaceError::Mismatch("rectangle outside a product space".into()));
                };
                let mut out = Decision::Yes;
                for ((o, s), x) in parts.iter().zip(spaces).zip(xs) {
                    match o.contains(s, x)? {
                        Decision::No => return Ok(Decision::No),
                        Decision::Undecided => out = Decision::Undecided,
                        Decision::Yes => {}
                    }
                }
                Ok(out)
            }
            _ => Err(SpaceError::Mismatch("point and open set of different kinds".into())),
        }
    }

    /// A point inside the set (cylinders filled with 0, arcs at the center).
    pub fn sample_point(&self) -> Point {
        match self {
            BasicOpen::Cylinder { start, word } => Point::BiWord(BiWord::from_window(*start, word.clone(), 0)),
            BasicOpen::FiniteSet(ids) => Point::FiniteId(*ids.iter().next().expect("nonempty")),
            BasicOpen::Arc { center, .. } => Point::Angle(center.0.clone()),
            BasicOpen::Rect(parts) => Point::Tuple(parts.iter().map(|p| p.sample_point()).collect()),
        }
    }
}

impl fmt::Display for BasicOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicOpen::Cylinder { start, word } => {
                let w: String = word.iter().map(|c| c.to_string()).collect();
                write!(f, "[{w}@{start}]")
            }
            BasicOpen::FiniteSet(ids) => {
                let s: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
                write!(f, "{{{}}}", s.join(","))
            }
            BasicOpen::Arc { center, radius } => write!(f, "arc({}, r={radius})", center.0),
            BasicOpen::Rect(parts) => {
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", s.join("x"))
            }
        }
    }
}

/// Result of [`intersect_basic`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Intersection {
    Empty,
    /// A nonempty basic open inside `A ∩ B`; `split` flags that `set` may be
    /// a strict subset of the intersection.
    Nonempty {
        set: BasicOpen,
        split: bool,
    },
    /// Arc endpoints could not be ordered within the refinement budget.
    Undecided,
}

impl Intersection {
    pub fn decision(&self) -> Decision {
        match self {
            Intersection::Empty => Decision::No,
            Intersection::Nonempty { .. } => Decision::Yes,
            Intersection::Undecided => Decision::Undecided,
        }
    }
}

pub fn intersect_basic(space: &SpaceDesc, a: &BasicOpen, b: &BasicOpen) -> Result<Intersection, SpaceError> {
    match (a, b) {
        (BasicOpen::Cylinder { start: s1, word: w1 }, BasicOpen::Cylinder { start: s2, word: w2 }) => {
            Ok(intersect_cylinders(*s1, w1, *s2, w2))
        }
        (BasicOpen::FiniteSet(x), BasicOpen::FiniteSet(y)) => {
            let s: BTreeSet<u32> = x.intersection(y).copied().collect();
            if s.is_empty() {
                Ok(Intersection::Empty)
            } else {
                Ok(Intersection::Nonempty { set: BasicOpen::FiniteSet(s), split: false })
            }
        }
        (BasicOpen::Arc { center: c1, radius: r1 }, BasicOpen::Arc { center: c2, radius: r2 }) => {
            let alpha = space.alpha().ok_or_else(|| SpaceError::Mismatch("arcs outside a circle space".into()))?;
            Ok(intersect_arcs(alpha, &c1.0, r1, &c2.0, r2))
        }
        (BasicOpen::Rect(xs), BasicOpen::Rect(ys)) => {
            let SpaceDesc::Product(spaces) = space else {
                return Err(SpaceError::Mismatch("rectangles outside a product space".into()));
            };
            if xs.len() != ys.len() || xs.len() != spaces.len() {
                return Err(SpaceError::Mismatch("rectangle arity".into()));
            }
            let mut parts = Vec::with_capacity(xs.len());
            let mut split = false;
            let mut undecided = false;
            for ((s, x), y) in spaces.iter().zip(xs).zip(ys) {
                match intersect_basic(s, x, y)? {
                    Intersection::Empty => return Ok(Intersection::Empty),
                    Intersection::Undecided => undecided = true,
                    Intersection::Nonempty { set, split: sp } => {
                        split |= sp;
                        parts.push(set)
                    }
                }
            }
            if undecided {
                Ok(Intersection::Undecided)
            } else {
                Ok(Intersection::Nonempty { set: BasicOpen::Rect(parts), split })
            }
        }
        _ => Err(SpaceError::Mismatch("cannot intersect open sets of different kinds".into())),
    }
}

/// Merges two cylinders; `Empty` on any symbol conflict in the overlap.
pub fn intersect_cylinders(s1: i64, w1: &[u8], s2: i64, w2: &[u8]) -> Intersection {
    let e1 = s1 + w1.len() as i64;
    let e2 = s2 + w2.len() as i64;
    let lo = s1.max(s2);
    let hi = e1.min(e2);
    for i in lo..hi {
        if w1[(i - s1) as usize] != w2[(i - s2) as usize] {
            return Intersection::Empty;
        }
    }
    if e1 < s2 || e2 < s1 {
        // a free gap between the windows: return the sub-cylinder with the gap
        // filled by 0
        let start = s1.min(s2);
        let end = e1.max(e2);
        let mut word = vec![0u8; (end - start) as usize];
        word[(s1 - start) as usize..(e1 - start) as usize].copy_from_slice(w1);
        word[(s2 - start) as usize..(e2 - start) as usize].copy_from_slice(w2);
        return Intersection::Nonempty { set: BasicOpen::Cylinder { start, word }, split: true };
    }
    let start = s1.min(s2);
    let end = e1.max(e2);
    let word =
        (start..end).map(|i| if i >= s1 && i < e1 { w1[(i - s1) as usize] } else { w2[(i - s2) as usize] }).collect();
    Intersection::Nonempty { set: BasicOpen::Cylinder { start, word }, split: false }
}

fn intersect_arcs(
    alpha: &IrrationalEnclosure,
    c1: &AffineAngle,
    r1: &BigRational,
    c2: &AffineAngle,
    r2: &BigRational,
) -> Intersection {
    let dq = &c2.q - &c1.q;
    let dc = c2.c - c1.c;
    let bound = r1 + r2;
    match alpha::decide_circle_dist_lt(alpha, &dq, dc, &bound) {
        Decision::No => Intersection::Empty,
        Decision::Undecided => Intersection::Undecided,
        Decision::Yes => {
            // offset of c2 relative to c1, representative nearest 0
            let mut a = alpha.clone();
            loop {
                let e = a.enclosure().affine(&BigInt::from(dc), &dq);
                let shift = (&e.lo + half()).floor();
                let lo = &e.lo - &shift;
                let hi = &e.hi - &shift;
                // rigorous inner sub-interval of (-r1, r1) ∩ (Δ - r2, Δ + r2)
                let left = (-r1.clone()).max(&hi - r2);
                let right = r1.clone().min(&lo + r2);
                if left < right {
                    let mid = (&left + &right) / BigRational::from_integer(BigInt::from(2));
                    let rad = (&right - &left) / BigRational::from_integer(BigInt::from(2));
                    let split = dc != 0 || bound > half();
                    return Intersection::Nonempty {
                        set: BasicOpen::Arc { center: ArcCenter(c1.offset(&mid)), radius: rad },
                        split,
                    };
                }
                match a.refined() {
                    Some(r) => a = r,
                    None => return Intersection::Undecided,
                }
            }
        }
    }
}

/// Σ_{i > b} 2^{-|i|}.
fn right_tail(b: i64) -> BigRational {
    if b >= 0 {
        pow2_neg(b as u32)
    } else {
        BigRational::from_integer(BigInt::from(3)) - pow2_pos(b + 1)
    }
}

fn pow2_pos(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as usize)
    } else {
        pow2_neg((-e) as u32)
    }
}

/// Exact supremum of pairwise distances within `a`.
pub fn diameter(space: &SpaceDesc, a: &BasicOpen) -> Result<BigRational, SpaceError> {
    match (space, a) {
        (SpaceDesc::Shift { alphabet_size }, BasicOpen::Cylinder { .. }) => {
            let (s, e) = a.window().expect("cylinder");
            let k = BigRational::from_integer(BigInt::from(*alphabet_size as i64 - 1));
            Ok(k * (right_tail(e) + right_tail(-s)))
        }
        (SpaceDesc::Finite { .. }, BasicOpen::FiniteSet(ids)) => {
            Ok(if ids.len() > 1 { BigRational::one() } else { BigRational::zero() })
        }
        (SpaceDesc::Circle { .. }, BasicOpen::Arc { radius, .. }) => {
            let d = radius * BigRational::from_integer(BigInt::from(2));
            Ok(d.min(half()))
        }
        (SpaceDesc::Product(spaces), BasicOpen::Rect(parts)) if spaces.len() == parts.len() => {
            let mut m = BigRational::zero();
            for (s, p) in spaces.iter().zip(parts) {
                m = m.max(diameter(s, p)?);
            }
            Ok(m)
        }
        _ => Err(SpaceError::Mismatch(format!("open set does not belong to {space}"))),
    }
}

/// A finite generating family of basic open sets at the given resolution.
pub fn enumerate_basis(space: &SpaceDesc, resolution: u32) -> Vec<BasicOpen> {
    let r = resolution.max(1);
    match space {
        SpaceDesc::Shift { alphabet_size } => {
            let len = 2 * r as usize + 1;
            let k = *alphabet_size as u64;
            let count = k.pow(len as u32);
            (0..count)
                .map(|mut code| {
                    let mut word = vec![0u8; len];
                    for slot in word.iter_mut().rev() {
                        *slot = (code % k) as u8;
                        code /= k;
                    }
                    BasicOpen::Cylinder { start: -(r as i64), word }
                })
                .collect()
        }
        SpaceDesc::Finite { point_count } => {
            (1..=*point_count).map(|i| BasicOpen::FiniteSet(BTreeSet::from([i]))).collect()
        }
        SpaceDesc::Circle { .. } => {
            let radius = BigRational::new(BigInt::one(), BigInt::from(2 * r as i64));
            (0..r as i64)
                .map(|k| BasicOpen::Arc {
                    center: ArcCenter(AffineAngle::rational(BigRational::new(k.into(), (r as i64).into()))),
                    radius: radius.clone(),
                })
                .collect()
        }
        SpaceDesc::Product(parts) => {
            let mut acc: Vec<Vec<BasicOpen>> = vec![Vec::new()];
            for p in parts {
                let b = enumerate_basis(p, resolution);
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        b.iter().map(move |x| {
                            let mut v = prefix.clone();
                            v.push(x.clone());
                            v
                        })
                    })
                    .collect();
            }
            acc.into_iter().map(BasicOpen::Rect).collect()
        }
    }
}

/// Cylinder of `x` on `[-w, w]`; it lies inside the ball `B(x, 2^{1-w})`.
pub fn ball_cylinder(x: &BiWord, w: u32) -> BasicOpen {
    let w = w as i64;
    BasicOpen::Cylinder { start: -w, word: x.window_word(-w, w) }
}

/// Smallest `w` with `2^{1-w} <= eps`.
pub fn window_for_radius(eps: &BigRational) -> u32 {
    let mut w = 0u32;
    while pow2_pos(1 - w as i64) > *eps {
        w += 1;
    }
    w
}
