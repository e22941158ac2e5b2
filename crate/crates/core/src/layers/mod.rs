//! Parameter sequences `(k_s, l_s)` of the diagonal product, built from a
//! speed function, with the surrogate `fbar` and the critical layers.

mod builder;
mod critical;
mod speed;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use builder::{build_layers, build_layers_covering};
pub use critical::{
    critical_layers, scaling_from_f, scaling_g, scaling_g_at, scaling_h, scaling_h_at,
    CriticalLayers, ScalingMode,
};
pub use speed::{validate_speed, SpeedFunction, SpeedKind, SpeedReport, SpeedViolation};

#[derive(Debug, Error)]
pub enum LayerError {
    #[error("invalid speed function: {0}")]
    Speed(String),
    #[error("speed function rejected: {0}")]
    Rejected(String),
    #[error("invalid layer parameters: {0}")]
    Invalid(String),
    #[error("x = {x} is outside the layer horizon")]
    OutOfRange { x: f64 },
    #[error("layer horizon too small: {0}")]
    Horizon(String),
    #[error("n = {0} is below 16, where log log n is not usable")]
    SmallN(u64),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A layer parameter: a positive integer of any size, or infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerValue {
    Finite(BigUint),
    Infinite,
}

impl LayerValue {
    pub fn from_u64(v: u64) -> Self {
        LayerValue::Finite(BigUint::from(v))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, LayerValue::Finite(_))
    }

    pub fn finite(&self) -> Option<&BigUint> {
        match self {
            LayerValue::Finite(v) => Some(v),
            LayerValue::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            LayerValue::Finite(v) => v.to_f64().unwrap_or(f64::INFINITY),
            LayerValue::Infinite => f64::INFINITY,
        }
    }

    /// The value if it fits in a `u64`.
    pub fn to_u64(&self) -> Option<u64> {
        self.finite().and_then(|v| v.to_u64())
    }

    /// Natural log; `+inf` for infinity, `-inf` for zero.
    pub fn ln(&self) -> f64 {
        match self {
            LayerValue::Finite(v) => big_ln(v),
            LayerValue::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for LayerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerValue::Finite(v) => write!(f, "{v}"),
            LayerValue::Infinite => f.write_str("inf"),
        }
    }
}

/// Largest integer that JSON readers in every language hold exactly.
const JSON_SAFE: u64 = 1 << 53;

impl Serialize for LayerValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LayerValue::Finite(v) => match v.to_u64() {
                Some(x) if x <= JSON_SAFE => s.serialize_u64(x),
                _ => s.serialize_str(&v.to_string()),
            },
            LayerValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LayerValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(LayerValue::from_u64(v)),
            Raw::S(s) if s == "inf" => Ok(LayerValue::Infinite),
            Raw::S(s) => s.parse::<BigUint>().map(LayerValue::Finite).map_err(|_| {
                serde::de::Error::custom(format!("expected an integer or \"inf\", got {s:?}"))
            }),
        }
    }
}

/// `ln v` for arbitrarily large integers.
pub fn big_ln(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (v >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// The sequences `(k_s, l_s)` and their growth factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerParams {
    pub m0: f64,
    pub k: Vec<LayerValue>,
    pub l: Vec<LayerValue>,
    /// Speed function the layers were built from, as a spec string.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Horizon `x_max` of the construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
}

impl LayerParams {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// `k_s l_s` as a float (`inf` when either factor is infinite).
    pub fn product(&self, s: usize) -> f64 {
        (self.k[s].ln() + self.l[s].ln()).exp()
    }

    fn ln_product(&self, s: usize) -> f64 {
        self.k[s].ln() + self.l[s].ln()
    }

    /// True when no more layers follow the last one: the construction ended
    /// with an infinite entry.
    pub fn is_closed(&self) -> bool {
        self.k.last().is_some_and(|v| !v.is_finite()) || self.l.last().is_some_and(|v| !v.is_finite())
    }

    /// Structural checks: equal lengths, `k_0 = l_0 = 1`, growth by at least
    /// `m0` between finite entries, and infinity only in the final layer.
    pub fn validate(&self) -> Result<(), LayerError> {
        let bad = |m: String| Err(LayerError::Invalid(m));
        if !(self.m0 > 1.0) {
            return bad(format!("m0 must exceed 1, got {}", self.m0));
        }
        if self.k.is_empty() || self.k.len() != self.l.len() {
            return bad("k and l must be nonempty and of equal length".into());
        }
        let one = LayerValue::Finite(BigUint::one());
        if self.k[0] != one || self.l[0] != one {
            return bad("k_0 and l_0 must be 1".into());
        }
        let last = self.k.len() - 1;
        for (name, seq) in [("k", &self.k), ("l", &self.l)] {
            for s in 0..last {
                if !seq[s].is_finite() {
                    return bad(format!("{name}_{s} is infinite before the last layer"));
                }
                if let LayerValue::Finite(next) = &seq[s + 1] {
                    if !grows(seq[s].finite().unwrap(), next, self.m0) {
                        return bad(format!("{name}_{} < m0 * {name}_{s}", s + 1));
                    }
                }
            }
        }
        if !self.k[last].is_finite() && !self.l[last].is_finite() {
            return bad("k and l are both infinite".into());
        }
        Ok(())
    }

    /// Smallest growth ratio over consecutive finite pairs of either sequence.
    pub fn min_growth(&self) -> f64 {
        let mut g = f64::INFINITY;
        for seq in [&self.k, &self.l] {
            for w in seq.windows(2) {
                if let (LayerValue::Finite(a), LayerValue::Finite(b)) = (&w[0], &w[1]) {
                    let (fa, fb) = (a.to_f64().unwrap(), b.to_f64().unwrap());
                    let ratio = if fa.is_finite() && fb.is_finite() {
                        fb / fa
                    } else {
                        (big_ln(b) - big_ln(a)).exp()
                    };
                    g = g.min(ratio);
                }
            }
        }
        g
    }

    /// Smallest index from which `ln ln k_s <= l_s` holds for every later
    /// layer. Infinite `l_s` always passes, infinite `k_s` never does.
    pub fn loglog_index(&self) -> usize {
        let holds = |s: usize| match (&self.k[s], &self.l[s]) {
            (LayerValue::Infinite, _) => false,
            (_, LayerValue::Infinite) => true,
            (k, l) => k.ln().ln() <= l.to_f64(),
        };
        let mut idx = self.len();
        while idx > 0 && holds(idx - 1) {
            idx -= 1;
        }
        idx
    }

    /// `fbar(x) = sqrt(x) l_s + x / k_{s+1}` on `[(k_s l_s)^2, (k_{s+1} l_{s+1})^2)`.
    pub fn fbar(&self, x: f64) -> Result<f64, LayerError> {
        if !(x >= 1.0) {
            return Err(LayerError::OutOfRange { x });
        }
        let lx = x.ln();
        let mut s = 0;
        loop {
            if s + 1 >= self.len() {
                return Err(LayerError::OutOfRange { x });
            }
            if 2.0 * self.ln_product(s + 1) > lx {
                break;
            }
            s += 1;
        }
        let lin = match &self.k[s + 1] {
            LayerValue::Infinite => 0.0,
            k => x / k.to_f64(),
        };
        Ok(x.sqrt() * self.l[s].to_f64() + lin)
    }
}

/// `b >= m0 * a`, exactly for integral `m0` and to 2^-32 otherwise.
fn grows(a: &BigUint, b: &BigUint, m0: f64) -> bool {
    b * BigUint::from(1u64 << 32) >= a * builder::m0_fixed(m0)
}
