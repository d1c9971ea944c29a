use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, Signed};
use serde::{Serialize, Serializer};

/// A property of a map sequence, with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PropertyKind {
    Transitive,
    WeaklyMixing {
        order: u32,
    },
    Mixing,
    MildlyMixing,
    TotallyTransitive {
        s_max: u32,
    },
    StronglyTransitive,
    MultiTransitive {
        m_max: u32,
    },
    SyndeticallyTransitive,
    Minimal,
    FeebleOpen,
    DensePeriodicPoints,
    /// Point id on finite spaces; otherwise the space's first representative.
    AlmostPeriodicPoint {
        point: Option<u32>,
    },
    Sensitive {
        delta: BigRational,
    },
    SyndeticallySensitive {
        delta: BigRational,
    },
    ThicklySensitive {
        delta: BigRational,
    },
    MultiSensitive {
        delta: BigRational,
    },
    SurjectiveSequence,
}

/// Kebab-case names accepted on the command line and in check directives.
pub const PROPERTY_NAMES: &[&str] = &[
    "transitive",
    "weakly-mixing",
    "mixing",
    "mildly-mixing",
    "totally-transitive",
    "strongly-transitive",
    "multi-transitive",
    "syndetically-transitive",
    "minimal",
    "feeble-open",
    "dense-periodic-points",
    "almost-periodic-point",
    "sensitive",
    "syndetically-sensitive",
    "thickly-sensitive",
    "multi-sensitive",
    "surjective-sequence",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct PropertyParseError(pub String);

impl PropertyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PropertyKind::Transitive => "transitive",
            PropertyKind::WeaklyMixing { .. } => "weakly-mixing",
            PropertyKind::Mixing => "mixing",
            PropertyKind::MildlyMixing => "mildly-mixing",
            PropertyKind::TotallyTransitive { .. } => "totally-transitive",
            PropertyKind::StronglyTransitive => "strongly-transitive",
            PropertyKind::MultiTransitive { .. } => "multi-transitive",
            PropertyKind::SyndeticallyTransitive => "syndetically-transitive",
            PropertyKind::Minimal => "minimal",
            PropertyKind::FeebleOpen => "feeble-open",
            PropertyKind::DensePeriodicPoints => "dense-periodic-points",
            PropertyKind::AlmostPeriodicPoint { .. } => "almost-periodic-point",
            PropertyKind::Sensitive { .. } => "sensitive",
            PropertyKind::SyndeticallySensitive { .. } => "syndetically-sensitive",
            PropertyKind::ThicklySensitive { .. } => "thickly-sensitive",
            PropertyKind::MultiSensitive { .. } => "multi-sensitive",
            PropertyKind::SurjectiveSequence => "surjective-sequence",
        }
    }

    pub fn delta(&self) -> Option<&BigRational> {
        match self {
            PropertyKind::Sensitive { delta }
            | PropertyKind::SyndeticallySensitive { delta }
            | PropertyKind::ThicklySensitive { delta }
            | PropertyKind::MultiSensitive { delta } => Some(delta),
            _ => None,
        }
    }

    /// Builds a property from its name and optional parameter text.
    pub fn from_parts(name: &str, param: Option<&str>) -> Result<Self, PropertyParseError> {
        let int = |default: Option<u32>, min: u32| -> Result<u32, PropertyParseError> {
            let v = match param {
                Some(p) => p
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| PropertyParseError(format!("{name}: expected an integer parameter, got `{p}`")))?,
                None => default.ok_or_else(|| PropertyParseError(format!("{name} needs an integer parameter")))?,
            };
            if v < min {
                return Err(PropertyParseError(format!("{name}: parameter must be >= {min}")));
            }
            Ok(v)
        };
        let delta = || -> Result<BigRational, PropertyParseError> {
            let p = param.ok_or_else(|| PropertyParseError(format!("{name} needs a positive rational delta")))?;
            let d = parse_rational(p).ok_or_else(|| PropertyParseError(format!("{name}: bad rational `{p}`")))?;
            if !d.is_positive() {
                return Err(PropertyParseError(format!("{name}: delta must be positive")));
            }
            Ok(d)
        };
        let none = |p: PropertyKind| -> Result<PropertyKind, PropertyParseError> {
            match param {
                None => Ok(p),
                Some(x) => Err(PropertyParseError(format!("{name} takes no parameter, got `{x}`"))),
            }
        };
        match name {
            "transitive" => none(PropertyKind::Transitive),
            "weakly-mixing" => Ok(PropertyKind::WeaklyMixing { order: int(Some(2), 2)? }),
            "mixing" => none(PropertyKind::Mixing),
            "mildly-mixing" => none(PropertyKind::MildlyMixing),
            "totally-transitive" => Ok(PropertyKind::TotallyTransitive { s_max: int(Some(3), 1)? }),
            "strongly-transitive" => none(PropertyKind::StronglyTransitive),
            "multi-transitive" => Ok(PropertyKind::MultiTransitive { m_max: int(Some(2), 1)? }),
            "syndetically-transitive" => none(PropertyKind::SyndeticallyTransitive),
            "minimal" => none(PropertyKind::Minimal),
            "feeble-open" => none(PropertyKind::FeebleOpen),
            "dense-periodic-points" => none(PropertyKind::DensePeriodicPoints),
            "almost-periodic-point" => Ok(PropertyKind::AlmostPeriodicPoint {
                point: match param {
                    Some(_) => Some(int(None, 1)?),
                    None => None,
                },
            }),
            "sensitive" => Ok(PropertyKind::Sensitive { delta: delta()? }),
            "syndetically-sensitive" => Ok(PropertyKind::SyndeticallySensitive { delta: delta()? }),
            "thickly-sensitive" => Ok(PropertyKind::ThicklySensitive { delta: delta()? }),
            "multi-sensitive" => Ok(PropertyKind::MultiSensitive { delta: delta()? }),
            "surjective-sequence" => none(PropertyKind::SurjectiveSequence),
            _ => Err(PropertyParseError(format!("unknown property `{name}`"))),
        }
    }
}

/// `p`, `p/q`; whitespace around the slash is ignored.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let n: BigInt = a.trim().parse().ok()?;
            let d: BigInt = b.trim().parse().ok()?;
            if d == BigInt::from(0) {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            PropertyKind::WeaklyMixing { order } => write!(f, ":{order}"),
            PropertyKind::TotallyTransitive { s_max } => write!(f, ":{s_max}"),
            PropertyKind::MultiTransitive { m_max } => write!(f, ":{m_max}"),
            PropertyKind::AlmostPeriodicPoint { point: Some(p) } => write!(f, ":{p}"),
            _ => match self.delta() {
                Some(d) => write!(f, ":{d}"),
                None => Ok(()),
            },
        }
    }
}

impl FromStr for PropertyKind {
    type Err = PropertyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((n, p)) => Self::from_parts(n.trim(), Some(p)),
            None => Self::from_parts(s.trim(), None),
        }
    }
}

impl Serialize for PropertyKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Witnessed,
    Refuted,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Witnessed => "witnessed",
            Status::Refuted => "refuted",
            Status::Inconclusive => "inconclusive",
        })
    }
}

impl FromStr for Status {
    type Err = PropertyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "witnessed" => Ok(Status::Witnessed),
            "refuted" => Ok(Status::Refuted),
            "inconclusive" => Ok(Status::Inconclusive),
            _ => Err(PropertyParseError(format!("unknown status `{s}`"))),
        }
    }
}
