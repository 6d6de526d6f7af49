//! Distortion functions and spectra.
//!
//! A distortion function `g: [0,1] -> [0,1]` is increasing with `g(0) = 0`
//! and `g(1) = 1`. Named presets serialize as short strings (`"identity"`,
//! `"ph:0.5"`, `"es:0.9"`, `"var:0.95"`); anything else is given as a table of
//! `(u, g(u))` pairs and interpolated linearly.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of equally spaced probe points used to check user-supplied functions.
pub const PROBE_POINTS: usize = 1001;
const PROBE_SLACK: f64 = 1e-12;

/// Boxed user-supplied function on `[0, 1]`.
pub type UnitFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Distortion {
    Identity,
    /// `g(u) = u^gamma`, the proportional hazard transform.
    PowerHazard(f64),
    /// `g(u) = min(u / (1 - alpha), 1)`.
    ExpectedShortfall(f64),
    /// `g(u) = 1{u > 1 - alpha}`.
    ValueAtRisk(f64),
    /// Piecewise-linear interpolation of sorted `(u, g(u))` knots.
    Tabulated(Vec<(f64, f64)>),
    /// Arbitrary code. Not serializable.
    Custom { name: String, g: UnitFn },
}

impl Distortion {
    pub fn custom(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Distortion::Custom {
            name: name.into(),
            g: Arc::new(g),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Distortion::Identity => u,
            Distortion::PowerHazard(gamma) => {
                if u <= 0.0 {
                    0.0
                } else {
                    u.powf(*gamma)
                }
            }
            Distortion::ExpectedShortfall(alpha) => (u / (1.0 - alpha)).min(1.0),
            Distortion::ValueAtRisk(alpha) => {
                if u > 1.0 - alpha {
                    1.0
                } else {
                    0.0
                }
            }
            Distortion::Tabulated(knots) => interpolate(knots, u),
            Distortion::Custom { g, .. } => g(u),
        }
    }

    /// Dual distortion `1 - g(1 - u)`.
    pub fn dual(&self, u: f64) -> f64 {
        match self {
            Distortion::Identity => u,
            // Written so that the jump sits exactly at F >= alpha.
            Distortion::ValueAtRisk(alpha) => {
                if u >= *alpha {
                    1.0
                } else {
                    0.0
                }
            }
            Distortion::ExpectedShortfall(alpha) => ((u - alpha) / (1.0 - alpha)).max(0.0),
            _ => 1.0 - self.eval(1.0 - u),
        }
    }

    /// Checks parameters, boundary values and monotonicity on the probe grid.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistortion(msg));
        match self {
            Distortion::PowerHazard(g) if !(*g > 0.0 && *g <= 1.0) => {
                return bad(format!("power-hazard exponent {g} outside (0, 1]"))
            }
            Distortion::ExpectedShortfall(a) if !(*a >= 0.0 && *a < 1.0) => {
                return bad(format!("expected-shortfall level {a} outside [0, 1)"))
            }
            Distortion::ValueAtRisk(a) if !(*a > 0.0 && *a < 1.0) => {
                return bad(format!("value-at-risk level {a} outside (0, 1)"))
            }
            Distortion::Tabulated(knots) => {
                if knots.len() < 2 || knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return bad("table needs at least two strictly increasing u knots".into());
                }
                if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
                    return bad("table must span u = 0 to u = 1".into());
                }
            }
            _ => {}
        }
        if self.eval(0.0).abs() > PROBE_SLACK || (self.eval(1.0) - 1.0).abs() > PROBE_SLACK {
            return bad(format!("{self}: g(0) must be 0 and g(1) must be 1"));
        }
        let mut prev = self.eval(0.0);
        for k in 1..PROBE_POINTS {
            let u = k as f64 / (PROBE_POINTS - 1) as f64;
            let cur = self.eval(u);
            if !cur.is_finite() || cur < prev - PROBE_SLACK || !(-PROBE_SLACK..=1.0 + PROBE_SLACK).contains(&cur) {
                return bad(format!("{self}: not increasing into [0, 1] near u = {u}"));
            }
            prev = cur;
        }
        Ok(())
    }

    /// Concavity probe on the same grid (midpoint test on consecutive triples).
    pub fn is_concave(&self) -> bool {
        match self {
            Distortion::Identity | Distortion::PowerHazard(_) | Distortion::ExpectedShortfall(_) => true,
            Distortion::ValueAtRisk(_) => false,
            _ => {
                let h = 1.0 / (PROBE_POINTS - 1) as f64;
                (1..PROBE_POINTS - 1).all(|k| {
                    let u = k as f64 * h;
                    2.0 * self.eval(u) + 1e-12 >= self.eval(u - h) + self.eval(u + h)
                })
            }
        }
    }

    fn preset_string(&self) -> Option<String> {
        match self {
            Distortion::Identity => Some("identity".into()),
            Distortion::PowerHazard(g) => Some(format!("ph:{g}")),
            Distortion::ExpectedShortfall(a) => Some(format!("es:{a}")),
            Distortion::ValueAtRisk(a) => Some(format!("var:{a}")),
            _ => None,
        }
    }

    fn from_preset(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = || -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidDistortion(format!("preset `{s}` needs a parameter")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidDistortion(format!("preset `{s}`: {e}")))
        };
        let d = match name.trim() {
            "identity" => Distortion::Identity,
            "ph" => Distortion::PowerHazard(param()?),
            "es" => Distortion::ExpectedShortfall(param()?),
            "var" => Distortion::ValueAtRisk(param()?),
            other => return Err(Error::InvalidDistortion(format!("unknown preset `{other}`"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.preset_string() {
            Some(s) => f.write_str(&s),
            None => match self {
                Distortion::Tabulated(k) => write!(f, "tabulated({} knots)", k.len()),
                Distortion::Custom { name, .. } => write!(f, "custom({name})"),
                _ => unreachable!(),
            },
        }
    }
}

impl fmt::Debug for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Distortion({self})")
    }
}

impl PartialEq for Distortion {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Distortion::Identity, Distortion::Identity) => true,
            (Distortion::PowerHazard(a), Distortion::PowerHazard(b))
            | (Distortion::ExpectedShortfall(a), Distortion::ExpectedShortfall(b))
            | (Distortion::ValueAtRisk(a), Distortion::ValueAtRisk(b)) => a == b,
            (Distortion::Tabulated(a), Distortion::Tabulated(b)) => a == b,
            (Distortion::Custom { g: a, .. }, Distortion::Custom { g: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TableOrPreset {
    Preset(String),
    Table(Vec<(f64, f64)>),
}

impl Serialize for Distortion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match (self.preset_string(), self) {
            (Some(s), _) => TableOrPreset::Preset(s).serialize(serializer),
            (None, Distortion::Tabulated(k)) => TableOrPreset::Table(k.clone()).serialize(serializer),
            _ => Err(serde::ser::Error::custom(format!("{self} cannot be serialized"))),
        }
    }
}

impl<'de> Deserialize<'de> for Distortion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let d = match TableOrPreset::deserialize(deserializer)? {
            TableOrPreset::Preset(s) => Distortion::from_preset(&s).map_err(de::Error::custom)?,
            TableOrPreset::Table(t) => {
                let d = Distortion::Tabulated(t);
                d.validate().map_err(de::Error::custom)?;
                d
            }
        };
        Ok(d)
    }
}

fn interpolate(knots: &[(f64, f64)], u: f64) -> f64 {
    let idx = knots.partition_point(|k| k.0 <= u);
    if idx == 0 {
        return knots[0].1;
    }
    if idx == knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (u0, g0) = knots[idx - 1];
    let (u1, g1) = knots[idx];
    g0 + (g1 - g0) * (u - u0) / (u1 - u0)
}

/// Weight function of a spectral risk measure: increasing, non-negative,
/// integrating to one over `[0, 1]`.
#[derive(Clone)]
pub enum Spectrum {
    /// `phi = 1`, the expectation.
    Uniform,
    /// `phi(u) = 1{u >= alpha} / (1 - alpha)`.
    ExpectedShortfall(f64),
    /// `phi(u) = (k + 1) u^k`.
    Power(f64),
    /// Piecewise-linear `phi` through sorted `(u, phi(u))` knots.
    Tabulated(Vec<(f64, f64)>),
    /// Arbitrary code; integrated by Gauss-Legendre quadrature.
    Custom { name: String, phi: UnitFn },
}

impl Spectrum {
    pub fn custom(name: impl Into<String>, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Spectrum::Custom {
            name: name.into(),
            phi: Arc::new(phi),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Spectrum::Uniform => 1.0,
            Spectrum::ExpectedShortfall(a) => {
                if u >= *a {
                    1.0 / (1.0 - a)
                } else {
                    0.0
                }
            }
            Spectrum::Power(k) => (k + 1.0) * u.max(0.0).powf(*k),
            Spectrum::Tabulated(knots) => interpolate(knots, u),
            Spectrum::Custom { phi, .. } => phi(u),
        }
    }

    /// `int_0^u phi`, when known in closed form.
    pub fn antiderivative(&self, u: f64) -> Option<f64> {
        let u = u.clamp(0.0, 1.0);
        match self {
            Spectrum::Uniform => Some(u),
            Spectrum::ExpectedShortfall(a) => Some((u - a).max(0.0) / (1.0 - a)),
            Spectrum::Power(k) => Some(u.powf(k + 1.0)),
            Spectrum::Tabulated(knots) => {
                let mut acc = 0.0;
                for w in knots.windows(2) {
                    let (u0, p0) = w[0];
                    let (u1, p1) = w[1];
                    if u <= u0 {
                        break;
                    }
                    let hi = u.min(u1);
                    let p_hi = p0 + (p1 - p0) * (hi - u0) / (u1 - u0);
                    acc += 0.5 * (p0 + p_hi) * (hi - u0);
                }
                Some(acc)
            }
            Spectrum::Custom { .. } => None,
        }
    }

    /// `int_lo^hi phi`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match (self.antiderivative(hi), self.antiderivative(lo)) {
            (Some(b), Some(a)) => b - a,
            _ => gauss_legendre(|u| self.eval(u), lo, hi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpectrum(msg));
        match self {
            Spectrum::ExpectedShortfall(a) if !(*a >= 0.0 && *a < 1.0) => {
                return bad(format!("level {a} outside [0, 1)"))
            }
            Spectrum::Power(k) if !(*k >= 0.0) => return bad(format!("exponent {k} is negative")),
            Spectrum::Tabulated(knots)
                if knots.len() < 2
                    || knots.windows(2).any(|w| w[0].0 >= w[1].0)
                    || knots[0].0 != 0.0
                    || knots[knots.len() - 1].0 != 1.0 =>
            {
                return bad("table must have strictly increasing u knots spanning [0, 1]".into())
            }
            _ => {}
        }
        let mut prev = f64::NEG_INFINITY;
        for k in 0..PROBE_POINTS {
            let u = k as f64 / (PROBE_POINTS - 1) as f64;
            let v = self.eval(u);
            if !v.is_finite() || v < -PROBE_SLACK || v < prev - PROBE_SLACK {
                return bad(format!("phi must be finite, non-negative and increasing (u = {u})"));
            }
            prev = v;
        }
        let total = match self.antiderivative(1.0) {
            Some(t) => t,
            None => (0..64)
                .map(|i| gauss_legendre(|u| self.eval(u), i as f64 / 64.0, (i + 1) as f64 / 64.0))
                .sum(),
        };
        if (total - 1.0).abs() > 1e-6 {
            return bad(format!("phi integrates to {total}, expected 1"));
        }
        Ok(())
    }
}

impl fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spectrum::Uniform => write!(f, "Spectrum(uniform)"),
            Spectrum::ExpectedShortfall(a) => write!(f, "Spectrum(es:{a})"),
            Spectrum::Power(k) => write!(f, "Spectrum(power:{k})"),
            Spectrum::Tabulated(k) => write!(f, "Spectrum(tabulated, {} knots)", k.len()),
            Spectrum::Custom { name, .. } => write!(f, "Spectrum(custom {name})"),
        }
    }
}

impl PartialEq for Spectrum {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Spectrum::Uniform, Spectrum::Uniform) => true,
            (Spectrum::ExpectedShortfall(a), Spectrum::ExpectedShortfall(b))
            | (Spectrum::Power(a), Spectrum::Power(b)) => a == b,
            (Spectrum::Tabulated(a), Spectrum::Tabulated(b)) => a == b,
            (Spectrum::Custom { phi: a, .. }, Spectrum::Custom { phi: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Serialize for Spectrum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let preset = match self {
            Spectrum::Uniform => TableOrPreset::Preset("uniform".into()),
            Spectrum::ExpectedShortfall(a) => TableOrPreset::Preset(format!("es:{a}")),
            Spectrum::Power(k) => TableOrPreset::Preset(format!("power:{k}")),
            Spectrum::Tabulated(t) => TableOrPreset::Table(t.clone()),
            Spectrum::Custom { name, .. } => {
                return Err(serde::ser::Error::custom(format!("custom spectrum {name} cannot be serialized")))
            }
        };
        preset.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Spectrum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = match TableOrPreset::deserialize(deserializer)? {
            TableOrPreset::Table(t) => Spectrum::Tabulated(t),
            TableOrPreset::Preset(p) => {
                let (name, arg) = match p.split_once(':') {
                    Some((n, a)) => (n.trim().to_string(), Some(a.trim().to_string())),
                    None => (p.trim().to_string(), None),
                };
                let param = || -> std::result::Result<f64, D::Error> {
                    arg.as_deref()
                        .ok_or_else(|| de::Error::custom(format!("spectrum `{p}` needs a parameter")))?
                        .parse()
                        .map_err(de::Error::custom)
                };
                match name.as_str() {
                    "uniform" => Spectrum::Uniform,
                    "es" => Spectrum::ExpectedShortfall(param()?),
                    "power" => Spectrum::Power(param()?),
                    other => return Err(de::Error::custom(format!("unknown spectrum `{other}`"))),
                }
            }
        };
        s.validate().map_err(de::Error::custom)?;
        Ok(s)
    }
}

const GL_ORDER: usize = 64;

/// Nodes and weights of the 64-point Gauss-Legendre rule on `[-1, 1]`.
fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = Vec::with_capacity(n);
        for i in 1..=n {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Three-term recurrence for P_n(x) and its derivative.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

/// 64-point Gauss-Legendre approximation of `int_lo^hi f`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    half * gl_rule().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}
