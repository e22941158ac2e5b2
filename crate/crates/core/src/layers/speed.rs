use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LayerError;

#[derive(Clone, Debug, PartialEq)]
pub enum SpeedKind {
    /// `f(x) = x^alpha`
    PowerLaw { alpha: f64 },
    /// Piecewise linear in log-log coordinates through `(ln x, ln f)` points,
    /// extended linearly past either end.
    Table { path: String, points: Vec<(f64, f64)> },
}

/// Target speed function `f` on `[1, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedFunction {
    pub kind: SpeedKind,
    /// Declared margin over `sqrt(x) (ln ln x)^{1+eps}`.
    pub eps: Option<f64>,
}

impl SpeedFunction {
    pub fn power_law(alpha: f64) -> Self {
        SpeedFunction {
            kind: SpeedKind::PowerLaw { alpha },
            eps: None,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    /// Parse `powerlaw:<alpha>` or `table:<path>`, optionally followed by
    /// `;eps=<value>`. Table files hold `x,f` rows; a non-numeric first row
    /// is taken as a header.
    pub fn parse(spec: &str) -> Result<Self, LayerError> {
        let (main, eps) = match spec.split_once(";eps=") {
            Some((m, e)) => {
                let e: f64 = e
                    .parse()
                    .map_err(|_| LayerError::Speed(format!("bad eps in {spec:?}")))?;
                if !(e >= 0.0) {
                    return Err(LayerError::Speed(format!("eps must be >= 0 in {spec:?}")));
                }
                (m, Some(e))
            }
            None => (spec, None),
        };
        let kind = if let Some(a) = main.strip_prefix("powerlaw:") {
            let alpha: f64 = a
                .parse()
                .map_err(|_| LayerError::Speed(format!("bad exponent in {spec:?}")))?;
            if !alpha.is_finite() {
                return Err(LayerError::Speed(format!("bad exponent in {spec:?}")));
            }
            SpeedKind::PowerLaw { alpha }
        } else if let Some(path) = main.strip_prefix("table:") {
            let text = std::fs::read_to_string(path).map_err(|source| LayerError::Io {
                path: path.to_string(),
                source,
            })?;
            SpeedKind::Table {
                path: path.to_string(),
                points: parse_table(&text)?,
            }
        } else {
            return Err(LayerError::Speed(format!(
                "expected powerlaw:<alpha> or table:<path>, got {spec:?}"
            )));
        };
        Ok(SpeedFunction { kind, eps })
    }

    /// Build a table function from `(x, f)` samples.
    pub fn from_samples(path: &str, samples: &[(f64, f64)]) -> Result<Self, LayerError> {
        Ok(SpeedFunction {
            kind: SpeedKind::Table {
                path: path.to_string(),
                points: log_points(samples)?,
            },
            eps: None,
        })
    }

    /// `ln f(e^lx)`.
    pub fn ln_eval(&self, lx: f64) -> f64 {
        match &self.kind {
            SpeedKind::PowerLaw { alpha } => alpha * lx,
            SpeedKind::Table { points, .. } => {
                let i = points.partition_point(|p| p.0 <= lx);
                let (a, b) = if points.len() == 1 {
                    return points[0].1 + (lx - points[0].0);
                } else if i == 0 {
                    (points[0], points[1])
                } else if i >= points.len() {
                    (points[points.len() - 2], points[points.len() - 1])
                } else {
                    (points[i - 1], points[i])
                };
                a.1 + (lx - a.0) * (b.1 - a.1) / (b.0 - a.0)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x.ln()).exp()
    }
}

fn parse_table(text: &str) -> Result<Vec<(f64, f64)>, LayerError> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let parsed = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => samples.push(p),
            None if i == 0 => continue,
            None => {
                return Err(LayerError::Speed(format!(
                    "table line {} is not an x,f pair",
                    i + 1
                )))
            }
        }
    }
    log_points(&samples)
}

fn log_points(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, LayerError> {
    if samples.is_empty() {
        return Err(LayerError::Speed("table has no points".into()));
    }
    let mut pts = Vec::with_capacity(samples.len());
    for &(x, f) in samples {
        if !(x >= 1.0 && f > 0.0 && x.is_finite() && f.is_finite()) {
            return Err(LayerError::Speed(format!(
                "table point ({x}, {f}) needs x >= 1 and f > 0"
            )));
        }
        pts.push((x.ln(), f.ln()));
    }
    if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(LayerError::Speed("table x values must increase".into()));
    }
    Ok(pts)
}

impl fmt::Display for SpeedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SpeedKind::PowerLaw { alpha } => write!(f, "powerlaw:{alpha}")?,
            SpeedKind::Table { path, .. } => write!(f, "table:{path}")?,
        }
        if let Some(e) = self.eps {
            write!(f, ";eps={e}")?;
        }
        Ok(())
    }
}

impl Serialize for SpeedFunction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SpeedFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SpeedFunction::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedViolation {
    /// `x_over_f`, `f_over_sqrt` or `eps`
    pub check: &'static str,
    pub x_a: f64,
    pub x_b: f64,
    pub value_a: f64,
    pub value_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedReport {
    pub f_at_one: f64,
    pub grid_points: usize,
    pub x_max: f64,
    pub violations: Vec<SpeedViolation>,
    pub accepted: bool,
}

/// Check the monotonicity hypotheses on `points` geometrically spaced grid
/// points over `[1, x_max]`. Values are compared in log space with an
/// absolute slack of `1e-12`, so exact power laws on the boundary pass.
pub fn validate_speed(f: &SpeedFunction, x_max: f64, points: usize) -> SpeedReport {
    assert!(points >= 2 && x_max > 1.0);
    let lmax = x_max.ln();
    let grid: Vec<f64> = (0..points)
        .map(|i| lmax * i as f64 / (points - 1) as f64)
        .collect();
    let mut violations = Vec::new();
    let mut check = |name: &'static str, lxs: &[f64], val: &dyn Fn(f64) -> f64| {
        for w in lxs.windows(2) {
            let (a, b) = (val(w[0]), val(w[1]));
            if b < a - 1e-12 {
                violations.push(SpeedViolation {
                    check: name,
                    x_a: w[0].exp(),
                    x_b: w[1].exp(),
                    value_a: a.exp(),
                    value_b: b.exp(),
                });
            }
        }
    };
    check("x_over_f", &grid, &|lx| lx - f.ln_eval(lx));
    check("f_over_sqrt", &grid, &|lx| f.ln_eval(lx) - 0.5 * lx);
    if let Some(eps) = f.eps {
        let tail: Vec<f64> = grid.iter().copied().filter(|&lx| lx >= std::f64::consts::E).collect();
        check("eps", &tail, &|lx| {
            f.ln_eval(lx) - 0.5 * lx - (1.0 + eps) * lx.ln().ln()
        });
    }
    let f_at_one = f.ln_eval(0.0).exp();
    SpeedReport {
        accepted: violations.is_empty() && (f_at_one - 1.0).abs() <= 1e-9,
        f_at_one,
        grid_points: points,
        x_max,
        violations,
    }
}
