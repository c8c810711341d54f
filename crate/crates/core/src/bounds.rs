//! Secrecy-capacity bounds without feedback.
//!
//! The lower bound averages `main_info - eaves_info` and clamps afterwards;
//! the upper bound clamps per pair under the cheapest coupling of the two
//! information marginals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{eaves_info, main_info, sample_gains, ChannelModel, GainSample, PowerConfig};
use crate::coupling::{min_positive_gap_stat, EmpiricalDist};
use crate::error::{config, Result};
use crate::rng::{RngStream, CHUNK_LEN};
use crate::stats::MeanStat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// Monte Carlo estimate of a rate bound, bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub value: f64,
    /// 95% half-width, computed before any positive-part clamp.
    pub ci_halfwidth: f64,
    pub n_samples: u64,
    pub kind: BoundKind,
}

impl BoundEstimate {
    pub fn zero(kind: BoundKind, n_samples: u64) -> Self {
        Self {
            value: 0.0,
            ci_halfwidth: 0.0,
            n_samples,
            kind,
        }
    }

    pub(crate) fn clamped(stat: &MeanStat, kind: BoundKind) -> Self {
        Self {
            value: stat.mean().max(0.0),
            ci_halfwidth: stat.ci95(),
            n_samples: stat.n,
            kind,
        }
    }
}

/// Reduces `f` over `samples` in fixed-size chunks merged in order.
pub(crate) fn chunked_stat<F>(samples: &[GainSample], f: F) -> MeanStat
where
    F: Fn(&GainSample) -> f64 + Sync,
{
    let parts: Vec<MeanStat> = samples
        .par_chunks(CHUNK_LEN)
        .map(|c| c.iter().map(&f).collect())
        .collect();
    let mut total = MeanStat::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

pub fn lower_bound_from_samples(samples: &[GainSample], power: &PowerConfig) -> BoundEstimate {
    let stat = chunked_stat(samples, |g| main_info(g, power) - eaves_info(g, power));
    BoundEstimate::clamped(&stat, BoundKind::Lower)
}

/// Draws of `main_info` and `eaves_info` as two separate marginals.
pub fn info_marginals(samples: &[GainSample], power: &PowerConfig) -> (Vec<f64>, Vec<f64>) {
    samples
        .par_iter()
        .map(|g| (main_info(g, power), eaves_info(g, power)))
        .unzip()
}

pub fn upper_bound_from_samples(samples: &[GainSample], power: &PowerConfig) -> Result<BoundEstimate> {
    let (a, b) = info_marginals(samples, power);
    let stat = min_positive_gap_stat(&EmpiricalDist::new(a)?, &EmpiricalDist::new(b)?);
    Ok(BoundEstimate::clamped(&stat, BoundKind::Upper))
}

pub fn lower_bound(model: &ChannelModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<BoundEstimate> {
    power.validate()?;
    let samples = sample_gains(model, n, rng)?;
    Ok(lower_bound_from_samples(&samples, power))
}

pub fn upper_bound(model: &ChannelModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<BoundEstimate> {
    power.validate()?;
    let samples = sample_gains(model, n, rng)?;
    upper_bound_from_samples(&samples, power)
}

/// Lower bound when the receiver only knows the mean jammer gain: the
/// jamming term is replaced by `pj * E[hz]`.
pub fn lower_bound_no_jammer_csi(
    model: &ChannelModel,
    power: &PowerConfig,
    n: usize,
    rng: &RngStream,
) -> Result<BoundEstimate> {
    power.validate()?;
    let samples = sample_gains(model, n, rng)?;
    let mean_hz = model.hz.mean();
    let stat = chunked_stat(&samples, |g| {
        let averaged = GainSample { hz: mean_hz, ..*g };
        main_info(&averaged, power) - eaves_info(g, power)
    });
    Ok(BoundEstimate::clamped(&stat, BoundKind::Lower))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// `F_He(a) <= F_Hm*(a) + eps_stat` at every merged grid point.
    pub dominated: bool,
    /// `max_a F_He(a) - F_Hm*(a)`; negative when `He` dominates strictly.
    pub max_cdf_gap: f64,
    pub eps_stat: f64,
    pub n_samples: u64,
}

/// Twice the 95% Dvoretzky-Kiefer-Wolfowitz band for an `n`-sample ECDF.
pub fn dkw_slack(n: usize) -> f64 {
    2.0 * ((2.0f64 / 0.05).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical test of whether `He` stochastically dominates the effective
/// main gain `Hm* = hm / (1 + pj*hz)`.
pub fn dominance_check(
    model: &ChannelModel,
    power: &PowerConfig,
    n: usize,
    rng: &RngStream,
) -> Result<DominanceReport> {
    power.validate()?;
    let samples = sample_gains(model, n, rng)?;
    let (mut eff, mut he): (Vec<f64>, Vec<f64>) = samples
        .par_iter()
        .map(|g| (g.hm / (1.0 + power.pj * g.hz), g.he))
        .unzip();
    eff.par_sort_unstable_by(f64::total_cmp);
    he.par_sort_unstable_by(f64::total_cmp);
    let max_gap = max_cdf_difference(&he, &eff);
    let eps = dkw_slack(n);
    Ok(DominanceReport {
        dominated: max_gap <= eps,
        max_cdf_gap: max_gap,
        eps_stat: eps,
        n_samples: n as u64,
    })
}

/// `max_x F_x(t) - F_y(t)` over the merged support of two sorted samples.
fn max_cdf_difference(x: &[f64], y: &[f64]) -> f64 {
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = f64::NEG_INFINITY;
    while i < x.len() || j < y.len() {
        let t = match (x.get(i), y.get(j)) {
            (Some(a), Some(b)) => a.min(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => unreachable!(),
        };
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        best = best.max(i as f64 / nx - j as f64 / ny);
    }
    best
}

/// `coef * P^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerScaling {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerScaling {
    pub fn linear() -> Self {
        Self { coef: 1.0, exponent: 1.0 }
    }

    pub fn at(&self, p: f64) -> f64 {
        if self.coef == 0.0 {
            0.0
        } else {
            self.coef * p.powf(self.exponent)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub power: PowerConfig,
    pub estimate: BoundEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Set when the transmit power outgrows the jamming power.
    pub warning: Option<String>,
}

/// Upper bound along `P -> (pt(P), pj(P))`, every grid point evaluated on
/// the same gain draws.
pub fn power_scaling_sweep(
    model: &ChannelModel,
    pt_of_p: PowerScaling,
    pj_of_p: PowerScaling,
    p_grid: &[f64],
    n: usize,
    rng: &RngStream,
) -> Result<Sweep> {
    if p_grid.is_empty() {
        return config("power grid is empty");
    }
    if p_grid.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return config("power grid values must be finite and >= 0");
    }
    if p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return config("power grid must be strictly ascending");
    }
    for s in [&pt_of_p, &pj_of_p] {
        if !(s.coef.is_finite() && s.coef >= 0.0 && s.exponent.is_finite() && s.exponent > 0.0) {
            return config("power scaling needs coef >= 0 and exponent > 0");
        }
    }
    let grows_faster = pt_of_p.coef > 0.0 && (pj_of_p.coef == 0.0 || pt_of_p.exponent > pj_of_p.exponent);
    let warning = grows_faster.then(|| {
        let msg = format!(
            "transmit power {}*P^{} is not O(jamming power {}*P^{}); the upper bound need not vanish",
            pt_of_p.coef, pt_of_p.exponent, pj_of_p.coef, pj_of_p.exponent
        );
        log::warn!("{msg}");
        msg
    });
    let samples = sample_gains(model, n, rng)?;
    let mut points = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let power = PowerConfig::new(pt_of_p.at(p), pj_of_p.at(p))?;
        let estimate = upper_bound_from_samples(&samples, &power)?;
        points.push(SweepPoint { p, power, estimate });
    }
    Ok(Sweep { points, warning })
}
