//! Li-Yorke pair scanning over a finite horizon and the nested-cylinder
//! construction that splits orbits between neighbourhoods of two points.

use num::{BigInt, BigRational, One};
use rayon::prelude::*;
use serde::Serialize;

use crate::maps::{orbit, MapError, NdsSpec, PrefixTable};
use crate::spaces::biword::BiWord;
use crate::spaces::{
    ball_cylinder, distance, intersect_basic, window_for_radius, BasicOpen, Decision, Distance, Intersection, Point,
    SpaceDesc, SpaceError,
};

#[derive(Debug, thiserror::Error)]
pub enum ChaosError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("{0}")]
    Invalid(String),
}

pub const SCAN_CAVEAT: &str =
    "finite-horizon surrogate: a qualifying pair is evidence of liminf 0 and positive limsup, not a proof";

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub horizon: u64,
    pub eps_low: BigRational,
    pub delta_high: BigRational,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            horizon: 4096,
            eps_low: BigRational::new(BigInt::one(), BigInt::from(1024)),
            delta_high: BigRational::new(BigInt::one(), BigInt::from(2)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LiYorkeReport {
    pub pair: (String, String),
    pub horizon: u64,
    /// Tail is `n >= tail_start`.
    pub tail_start: u64,
    /// Least lower bound of the tail distances.
    pub liminf_estimate: String,
    /// Greatest upper bound of the tail distances.
    pub limsup_estimate: String,
    /// A tail time with distance certainly below `eps_low`.
    pub close_at: Option<u64>,
    /// A tail time with distance certainly above `delta_high`.
    pub far_at: Option<u64>,
    pub qualifies: bool,
    pub caveat: &'static str,
    /// `d(f_1^n x, f_1^n y)` for `n = 0..=H`.
    #[serde(skip)]
    pub trace: Vec<Distance>,
}

/// Orbit distance trace of one pair.
pub fn distance_trace(spec: &NdsSpec, x: &Point, y: &Point, h: u64) -> Result<Vec<Distance>, ChaosError> {
    let ox = orbit(spec, x, h)?;
    let oy = orbit(spec, y, h)?;
    ox.iter().zip(&oy).map(|(a, b)| Ok(distance(spec.space(), a, b)?)).collect()
}

pub fn li_yorke_scan(
    spec: &NdsSpec,
    candidates: &[(Point, Point)],
    cfg: &ScanConfig,
) -> Result<Vec<LiYorkeReport>, ChaosError> {
    if cfg.eps_low >= cfg.delta_high {
        return Err(ChaosError::Invalid("eps_low must be below delta_high".into()));
    }
    let h = cfg.horizon;
    let tail_start = h / 2;
    candidates
        .par_iter()
        .map(|(x, y)| {
            let trace = distance_trace(spec, x, y, h)?;
            let tail = &trace[tail_start as usize..];
            let lo = tail.iter().map(|d| d.lower()).min().expect("nonempty tail").clone();
            let hi = tail.iter().map(|d| d.upper()).max().expect("nonempty tail").clone();
            let close_at = tail.iter().position(|d| d.upper() < &cfg.eps_low).map(|i| tail_start + i as u64);
            let far_at = tail.iter().position(|d| d.lower() > &cfg.delta_high).map(|i| tail_start + i as u64);
            Ok(LiYorkeReport {
                pair: (x.to_string(), y.to_string()),
                horizon: h,
                tail_start,
                liminf_estimate: lo.to_string(),
                limsup_estimate: hi.to_string(),
                qualifies: close_at.is_some() && far_at.is_some(),
                close_at,
                far_at,
                caveat: SCAN_CAVEAT,
                trace,
            })
        })
        .collect()
}

/// Pairs `(0^Z, x_L)` where `x_L` is zero on the left and repeats
/// `0^{L-1} 1` on the right; under shifts the lone ones pass index 0 every
/// `L` steps and are far away in between.
pub fn sparse_tail_pairs(periods: &[usize]) -> Vec<(Point, Point)> {
    periods
        .iter()
        .filter(|&&l| l >= 2)
        .map(|&l| {
            let mut right = vec![0u8; l - 1];
            right.push(1);
            let x = BiWord::new(0, vec![0], Vec::new(), right).expect("nonempty tails");
            (Point::BiWord(BiWord::constant(0)), Point::BiWord(x))
        })
        .collect()
}

/// One point per `{A,B}`-word, with `f_1^{p_i}(x) ∈ C_i` for each letter.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub word: String,
    pub point: String,
    #[serde(skip)]
    pub x: Point,
}

#[derive(Clone, Debug, Serialize)]
pub struct Construction {
    pub times: Vec<u64>,
    /// `A_i` and `B_i` as cylinders.
    pub targets: Vec<(String, String)>,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Lemma21Outcome {
    Success(Construction),
    /// No time in `(p_{level-1}, H]` serves `word` and its extensions.
    Failure {
        level: usize,
        word: String,
        horizon: u64,
    },
}

fn bi(p: &Point) -> Result<&BiWord, ChaosError> {
    match p {
        Point::BiWord(w) => Ok(w),
        _ => Err(ChaosError::Invalid(format!("{p} is not a point of the shift"))),
    }
}

fn meet(space: &SpaceDesc, a: &BasicOpen, b: &BasicOpen) -> Result<Option<BasicOpen>, ChaosError> {
    Ok(match intersect_basic(space, a, b)? {
        Intersection::Nonempty { set, .. } => Some(set),
        _ => None,
    })
}

/// Nested cylinders `A_i ∋ a`, `B_i ∋ b` of radius `1/i`, and times
/// `p_1 < ... < p_K <= H` such that every `{A,B}`-word of length `K` is
/// realised by an orbit. The root cell is `A_1`.
pub fn lemma21_construct(spec: &NdsSpec, a: &Point, b: &Point, k: usize, h: u64) -> Result<Lemma21Outcome, ChaosError> {
    if !matches!(spec.space(), SpaceDesc::Shift { .. }) {
        return Err(ChaosError::Invalid("the construction runs on the shift space".into()));
    }
    if a == b {
        return Err(ChaosError::Invalid("the two points must differ".into()));
    }
    let (wa, wb) = (bi(a)?, bi(b)?);
    let space = spec.space();
    let cyl =
        |x: &BiWord, i: usize| ball_cylinder(x, window_for_radius(&BigRational::new(1.into(), (i as i64).into())));
    let targets: Vec<(BasicOpen, BasicOpen)> = (1..=k.max(1)).map(|i| (cyl(wa, i), cyl(wb, i))).collect();
    let table = PrefixTable::build(spec, h)?;
    let mut cells: Vec<(String, BasicOpen)> = vec![(String::new(), targets[0].0.clone())];
    let mut times = Vec::with_capacity(k);
    for level in 1..=k {
        let (ta, tb) = &targets[level - 1];
        let from = times.last().map_or(1, |p| p + 1);
        let mut found = None;
        let mut stuck = String::new();
        for p in from..=h {
            let f = table.get(p);
            let mut next = Vec::with_capacity(2 * cells.len());
            let mut ok = true;
            for (word, cell) in &cells {
                for (letter, t) in [('A', ta), ('B', tb)] {
                    match f.preimage(t).map(|pre| meet(space, cell, &pre)).transpose()?.flatten() {
                        Some(c) => next.push((format!("{word}{letter}"), c)),
                        None => {
                            ok = false;
                            stuck = format!("{word}{letter}");
                        }
                    }
                    if !ok {
                        break;
                    }
                }
                if !ok {
                    break;
                }
            }
            if ok {
                found = Some((p, next));
                break;
            }
        }
        match found {
            Some((p, next)) => {
                times.push(p);
                cells = next;
            }
            None => return Ok(Lemma21Outcome::Failure { level, word: stuck, horizon: h }),
        }
    }
    let witnesses = cells
        .into_iter()
        .map(|(word, cell)| {
            let x = if word.is_empty() { a.clone() } else { cell.sample_point() };
            Witness { word, point: x.to_string(), x }
        })
        .collect();
    Ok(Lemma21Outcome::Success(Construction {
        times,
        targets: targets.iter().take(k).map(|(x, y)| (x.to_string(), y.to_string())).collect(),
        witnesses,
    }))
}

/// Recomputes each witness orbit step by step and tests every target.
pub fn verify_construction(spec: &NdsSpec, a: &Point, b: &Point, c: &Construction) -> Result<(), String> {
    let k = c.times.len();
    if c.witnesses.len() != 1 << k {
        return Err(format!("{} witnesses for {k} levels", c.witnesses.len()));
    }
    if c.times.windows(2).any(|w| w[0] >= w[1]) {
        return Err("times do not strictly increase".into());
    }
    let (wa, wb) = (bi(a).map_err(|e| e.to_string())?, bi(b).map_err(|e| e.to_string())?);
    let cyl =
        |x: &BiWord, i: usize| ball_cylinder(x, window_for_radius(&BigRational::new(1.into(), (i as i64).into())));
    let last = c.times.last().copied().unwrap_or(0);
    for w in &c.witnesses {
        let orb = orbit(spec, &w.x, last).map_err(|e| e.to_string())?;
        for (i, (letter, &p)) in w.word.chars().zip(&c.times).enumerate() {
            let target = if letter == 'A' { cyl(wa, i + 1) } else { cyl(wb, i + 1) };
            if target.contains(spec.space(), &orb[p as usize]).map_err(|e| e.to_string())? != Decision::Yes {
                return Err(format!("witness {} misses {target} at time {p}", w.word));
            }
        }
    }
    Ok(())
}
