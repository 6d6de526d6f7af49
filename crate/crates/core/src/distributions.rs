//! Finite-support probability distributions.
//!
//! Every risk that enters a risk measure or a premium principle is carried as a
//! [`DiscreteDistribution`]: a strictly increasing list of atoms with positive
//! probabilities. Claims and premium income are discretized once from a
//! [`FamilySpec`] and all derived risks (retained loss, ceded loss, the
//! composite risk inside the Bellman operator) are built by
//! [`DiscreteDistribution::push_forward`] and [`independent_product`].

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Probabilities may deviate from 1 by this much before construction fails.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Sums already this close to 1 are left untouched (no renormalization).
const CANONICAL_MASS_TOLERANCE: f64 = 1e-12;

/// A probability law with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    /// `cdf[i] = P(X <= values[i])`; the last entry is exactly 1.
    cdf: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from `(value, prob)` pairs in any order.
    ///
    /// Equal values are merged (exact equality only) and the result is sorted.
    /// A total mass within [`MASS_TOLERANCE`] of one is rescaled to one.
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut total = 0.0;
        for &(v, p) in pairs {
            if !v.is_finite() {
                return Err(Error::OutOfRange {
                    what: "atom value",
                    value: v,
                });
            }
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::NonpositiveProb(p));
            }
            total += p;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MassNotOne(total));
        }
        let mut atoms = pairs.to_vec();
        if (total - 1.0).abs() > CANONICAL_MASS_TOLERANCE {
            for a in &mut atoms {
                a.1 /= total;
            }
        }
        Ok(Self::from_atoms(atoms))
    }

    /// A degenerate law at `value`.
    pub fn point_mass(value: f64) -> Self {
        Self {
            values: vec![value],
            probs: vec![1.0],
            cdf: vec![1.0],
        }
    }

    /// Sorts, merges and indexes atoms whose probabilities are already valid.
    fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        let sorted = atoms.windows(2).all(|w| w[0].0 <= w[1].0);
        if !sorted {
            atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let mut values = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match values.last() {
                Some(&last) if last == v => *probs.last_mut().unwrap() += p,
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().unwrap() = 1.0;
        Self { values, probs, cdf }
    }

    /// Discretizes a named family by midpoint quantiles.
    pub fn discretize(spec: &FamilySpec) -> Result<Self> {
        spec.validate()?;
        if spec.family == Family::PointMass {
            return Ok(Self::point_mass(spec.params[0]));
        }
        let m = spec.atoms;
        let cap = spec.truncation.unwrap_or(f64::INFINITY);
        let w = 1.0 / m as f64;
        let atoms = (0..m)
            .map(|i| {
                let u = (i as f64 + 0.5) / m as f64;
                (spec.inverse_cdf(u).min(cap), w)
            })
            .collect();
        Ok(Self::from_atoms(atoms))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted atom values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Atom probabilities, aligned with [`values`](Self::values).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Cumulative probabilities `F(v_i)`, aligned with [`values`](Self::values).
    pub fn cdf_at_atoms(&self) -> &[f64] {
        &self.cdf
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    /// `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= t);
        if idx == 0 {
            0.0
        } else {
            self.cdf[idx - 1]
        }
    }

    /// `P(X > t)`, right-continuous in `t`.
    pub fn survival(&self, t: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= t);
        self.probs[idx..].iter().sum()
    }

    /// Tail masses `P(X > v_i)` at every atom.
    pub fn survival_at_atoms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut acc = 0.0;
        for i in (0..self.len()).rev() {
            out[i] = acc;
            acc += self.probs[i];
        }
        out
    }

    /// Left-continuous generalized inverse `inf{x : F(x) >= u}` for `u` in `(0, 1]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::OutOfRange {
                what: "quantile level",
                value: u,
            });
        }
        Ok(self.values[self.quantile_index(u)])
    }

    /// Index of the atom returned by [`quantile`](Self::quantile).
    pub(crate) fn quantile_index(&self, u: f64) -> usize {
        self.cdf
            .partition_point(|&c| c < u)
            .min(self.len() - 1)
    }

    /// Largest atom.
    pub fn ess_sup(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Smallest atom.
    pub fn ess_inf(&self) -> f64 {
        self.values[0]
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms().map(|(v, p)| p * (v - m) * (v - m)).sum()
    }

    /// Law of `phi(X)`.
    pub fn push_forward(&self, phi: impl Fn(f64) -> f64) -> Self {
        Self::from_atoms(self.atoms().map(|(v, p)| (phi(v), p)).collect())
    }

    /// Law of `X + m`.
    pub fn shift(&self, m: f64) -> Self {
        self.push_forward(|v| v + m)
    }

    /// Law of `lambda * X`.
    pub fn scale(&self, lambda: f64) -> Self {
        self.push_forward(|v| lambda * v)
    }
}

/// Law of `phi(Y, Z)` for independent `Y` and `Z`.
pub fn independent_product(
    dy: &DiscreteDistribution,
    dz: &DiscreteDistribution,
    phi: impl Fn(f64, f64) -> f64,
) -> DiscreteDistribution {
    let mut atoms = Vec::with_capacity(dy.len() * dz.len());
    for (y, p) in dy.atoms() {
        for (z, q) in dz.atoms() {
            atoms.push((phi(y, z), p * q));
        }
    }
    DiscreteDistribution::from_atoms(atoms)
}

impl Serialize for DiscreteDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for atom in self.atoms() {
            seq.serialize_element(&[atom.0, atom.1])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for DiscreteDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<(f64, f64)> = Deserialize::deserialize(deserializer)?;
        DiscreteDistribution::new(&pairs).map_err(de::Error::custom)
    }
}

/// Named parametric families that can be discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `params = [low, high]`
    Uniform,
    /// `params = [rate]`
    Exponential,
    /// `params = [mu, sigma]` of the underlying normal
    Lognormal,
    /// `params` are the observed sample values
    Empirical,
    /// `params = [value]`
    PointMass,
}

/// A declarative description of a claim or income law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Values above this bound are moved onto it. Required for unbounded families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    /// Number of equally weighted atoms.
    #[serde(default = "default_atoms")]
    pub atoms: usize,
}

fn default_atoms() -> usize {
    1001
}

impl FamilySpec {
    pub fn uniform(low: f64, high: f64, atoms: usize) -> Self {
        Self {
            family: Family::Uniform,
            params: vec![low, high],
            truncation: None,
            atoms,
        }
    }

    pub fn exponential(rate: f64, atoms: usize, truncation: f64) -> Self {
        Self {
            family: Family::Exponential,
            params: vec![rate],
            truncation: Some(truncation),
            atoms,
        }
    }

    pub fn lognormal(mu: f64, sigma: f64, atoms: usize, truncation: f64) -> Self {
        Self {
            family: Family::Lognormal,
            params: vec![mu, sigma],
            truncation: Some(truncation),
            atoms,
        }
    }

    pub fn point_mass(value: f64) -> Self {
        Self {
            family: Family::PointMass,
            params: vec![value],
            truncation: None,
            atoms: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::UnsupportedFamily(format!("{:?}: {msg}", self.family)));
        if let Some(t) = self.truncation {
            if !(t.is_finite() && t > 0.0) {
                return bad("truncation bound must be finite and positive");
            }
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return bad("parameters must be finite");
        }
        if self.family != Family::PointMass && self.atoms < 2 {
            return bad("atom count must be at least 2");
        }
        match self.family {
            Family::Uniform => {
                if self.params.len() != 2 || self.params[0] >= self.params[1] {
                    return bad("expected params [low, high] with low < high");
                }
            }
            Family::Exponential => {
                if self.params.len() != 1 || self.params[0] <= 0.0 {
                    return bad("expected params [rate] with rate > 0");
                }
                if self.truncation.is_none() {
                    return bad("unbounded family needs a truncation bound");
                }
            }
            Family::Lognormal => {
                if self.params.len() != 2 || self.params[1] <= 0.0 {
                    return bad("expected params [mu, sigma] with sigma > 0");
                }
                if self.truncation.is_none() {
                    return bad("unbounded family needs a truncation bound");
                }
            }
            Family::Empirical => {
                if self.params.is_empty() {
                    return bad("empirical family needs at least one sample");
                }
            }
            Family::PointMass => {
                if self.params.len() != 1 {
                    return bad("expected params [value]");
                }
            }
        }
        Ok(())
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Uniform => p[0] + (p[1] - p[0]) * u,
            Family::Exponential => -(1.0 - u).ln() / p[0],
            Family::Lognormal => {
                let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(u);
                (p[0] + p[1] * z).exp()
            }
            Family::Empirical => {
                let mut sample = p.clone();
                sample.sort_by(f64::total_cmp);
                let n = sample.len();
                let k = (u * n as f64).ceil() as usize;
                sample[k.clamp(1, n) - 1]
            }
            Family::PointMass => p[0],
        }
    }
}
