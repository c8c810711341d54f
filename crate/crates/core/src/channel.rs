//! Block-fading channel model: gain marginals, sampling and the per-block
//! information functionals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Error, Result};
use crate::rng::{par_chunks, RngStream, CHUNK_LEN};

/// Marginal law of a nonnegative power gain.
///
/// JSON form: `{"exp": mean}`, `{"point": value}` or
/// `{"discrete": {"atoms": [...], "probs": [...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", try_from = "RawGainDist", into = "RawGainDist")]
pub enum GainDist {
    Exp(f64),
    Point(f64),
    Discrete { atoms: Vec<f64>, probs: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawGainDist {
    Exp(f64),
    Point(f64),
    Discrete { atoms: Vec<f64>, probs: Vec<f64> },
}

impl TryFrom<RawGainDist> for GainDist {
    type Error = Error;

    fn try_from(raw: RawGainDist) -> Result<Self> {
        let d = match raw {
            RawGainDist::Exp(m) => GainDist::Exp(m),
            RawGainDist::Point(v) => GainDist::Point(v),
            RawGainDist::Discrete { atoms, probs } => GainDist::Discrete { atoms, probs },
        };
        d.validate()?;
        Ok(d)
    }
}

impl From<GainDist> for RawGainDist {
    fn from(d: GainDist) -> Self {
        match d {
            GainDist::Exp(m) => RawGainDist::Exp(m),
            GainDist::Point(v) => RawGainDist::Point(v),
            GainDist::Discrete { atoms, probs } => RawGainDist::Discrete { atoms, probs },
        }
    }
}

impl GainDist {
    pub fn exponential(mean: f64) -> Result<Self> {
        let d = GainDist::Exp(mean);
        d.validate()?;
        Ok(d)
    }

    pub fn point(value: f64) -> Result<Self> {
        let d = GainDist::Point(value);
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let d = GainDist::Discrete { atoms, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GainDist::Exp(m) => {
                if !(m.is_finite() && *m > 0.0) {
                    return config(format!("exponential mean must be finite and > 0, got {m}"));
                }
            }
            GainDist::Point(v) => {
                if !(v.is_finite() && *v >= 0.0) {
                    return config(format!("point mass must be finite and >= 0, got {v}"));
                }
            }
            GainDist::Discrete { atoms, probs } => {
                if atoms.is_empty() || atoms.len() != probs.len() {
                    return config("discrete gain needs equally many atoms and probs (at least one)");
                }
                if atoms.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                    return config("discrete gain atoms must be finite and >= 0");
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return config("discrete gain probs must be >= 0");
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return config(format!("discrete gain probs sum to {total}, expected 1"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            GainDist::Exp(m) => *m,
            GainDist::Point(v) => *v,
            GainDist::Discrete { atoms, probs } => {
                atoms.iter().zip(probs).map(|(a, p)| a * p).sum()
            }
        }
    }

    /// Essential supremum (infinite for the exponential).
    pub fn ess_sup(&self) -> f64 {
        match self {
            GainDist::Exp(_) => f64::INFINITY,
            GainDist::Point(v) => *v,
            GainDist::Discrete { atoms, probs } => atoms
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(a, _)| *a)
                .fold(0.0, f64::max),
        }
    }

    pub fn ess_inf(&self) -> f64 {
        match self {
            GainDist::Exp(_) => 0.0,
            GainDist::Point(v) => *v,
            GainDist::Discrete { atoms, probs } => atoms
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(a, _)| *a)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        match self {
            GainDist::Exp(m) => -m * (1.0 - u).ln(),
            GainDist::Point(v) => *v,
            GainDist::Discrete { atoms, probs } => {
                let mut acc = 0.0;
                let mut last = 0;
                for (i, p) in probs.iter().enumerate() {
                    if *p <= 0.0 {
                        continue;
                    }
                    last = i;
                    acc += p;
                    if u < acc {
                        return atoms[i];
                    }
                }
                atoms[last]
            }
        }
    }

    /// Every family consumes exactly one uniform, so models that differ only
    /// in one marginal still share the draws of the others.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        self.from_uniform(u)
    }
}

/// Independent marginals of the main (`hm`), eavesdropper (`he`) and
/// jammer-to-receiver (`hz`) power gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub hm: GainDist,
    pub he: GainDist,
    pub hz: GainDist,
}

impl ChannelModel {
    pub fn new(hm: GainDist, he: GainDist, hz: GainDist) -> Result<Self> {
        let m = Self { hm, he, hz };
        m.validate()?;
        Ok(m)
    }

    /// Exponential fading with the given means.
    pub fn exponential(hm: f64, he: f64, hz: f64) -> Result<Self> {
        Self::new(
            GainDist::exponential(hm)?,
            GainDist::exponential(he)?,
            GainDist::exponential(hz)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.hm.validate()?;
        self.he.validate()?;
        self.hz.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("channel model: {e}")))
    }

    /// Draw order is `hm`, `he`, `hz`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GainSample {
        let hm = self.hm.draw(rng);
        let he = self.he.draw(rng);
        let hz = self.hz.draw(rng);
        GainSample { hm, he, hz }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Transmit power.
    pub pt: f64,
    /// Jamming power.
    pub pj: f64,
}

impl PowerConfig {
    pub fn new(pt: f64, pj: f64) -> Result<Self> {
        let p = Self { pt, pj };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pt.is_finite() && self.pt >= 0.0) {
            return config(format!("transmit power must be finite and >= 0, got {}", self.pt));
        }
        if !(self.pj.is_finite() && self.pj >= 0.0) {
            return config(format!("jamming power must be finite and >= 0, got {}", self.pj));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub hm: f64,
    pub he: f64,
    pub hz: f64,
}

/// `n` i.i.d. gain triples; identical for identical `rng` under any pool size.
pub fn sample_gains(model: &ChannelModel, n: usize, rng: &RngStream) -> Result<Vec<GainSample>> {
    model.validate()?;
    if n == 0 {
        return usage("sample count must be >= 1");
    }
    let chunks = par_chunks(n, CHUNK_LEN, rng, |r, _, len| {
        (0..len).map(|_| model.draw(r)).collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Received SNR of one block under jamming.
#[inline]
pub fn main_snr(sample: &GainSample, power: &PowerConfig) -> f64 {
    power.pt * sample.hm / (1.0 + power.pj * sample.hz)
}

/// `log2(1 + pt*hm / (1 + pj*hz))`, bits per channel use.
#[inline]
pub fn main_info(sample: &GainSample, power: &PowerConfig) -> f64 {
    main_snr(sample, power).ln_1p() / std::f64::consts::LN_2
}

/// `log2(1 + pt*he)`, bits per channel use.
#[inline]
pub fn eaves_info(sample: &GainSample, power: &PowerConfig) -> f64 {
    log2_1p(power.pt * sample.he)
}

#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Order-statistic quantile of sorted `samples`: element `ceil(u*n)`
/// (1-based), clamped to the sample range.
pub fn empirical_quantile(samples: &[f64], u: f64) -> Result<f64> {
    if samples.is_empty() {
        return usage("quantile of an empty sample set");
    }
    if !(0.0..=1.0).contains(&u) {
        return usage(format!("quantile level must lie in [0, 1], got {u}"));
    }
    let n = samples.len();
    let idx = ((u * n as f64).ceil() as usize).clamp(1, n);
    Ok(samples[idx - 1])
}
