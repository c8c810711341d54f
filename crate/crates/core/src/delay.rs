//! Delay-limited secrecy with an outage budget `alpha`.
//!
//! A fraction `gamma` of every block generates key bits at rate
//! `r_key = gamma * C` (C being a no-feedback or one-bit key capacity);
//! the remaining `1 - gamma` carries the per-block message at codebook rate
//! `r_tilde`, of which `r_s` secret bits are delivered. A block succeeds
//! when it decodes and the eavesdropper's equivocation covers the part of
//! the message not protected by the one-time pad.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{lower_bound, BoundEstimate, BoundKind};
use crate::channel::{eaves_info, empirical_quantile, main_info, sample_gains, ChannelModel, PowerConfig};
use crate::error::{config, usage, Error, Result};
use crate::feedback::{one_bit_lower_bound, RateSearch};
use crate::rng::RngStream;
use crate::stats::wilson95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyMode {
    NoFeedback,
    OneBit,
}

impl std::str::FromStr for KeyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_feedback" => Ok(KeyMode::NoFeedback),
            "one_bit" => Ok(KeyMode::OneBit),
            other => config(format!("unknown key mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayConfig {
    pub alpha: f64,
    pub gamma_grid: Vec<f64>,
    /// Points of the `r_tilde` grid per `gamma`.
    pub rate_grid_points: usize,
    pub key_mode: KeyMode,
}

impl DelayConfig {
    /// `gamma` in `{0, 0.05, ..., 1}`, 64 rate points.
    pub fn new(alpha: f64, key_mode: KeyMode) -> Result<Self> {
        let c = Self {
            alpha,
            gamma_grid: (0..=20).map(|k| k as f64 / 20.0).collect(),
            rate_grid_points: 64,
            key_mode,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return config(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.gamma_grid.is_empty() || self.gamma_grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return config("gamma grid must be nonempty and within [0, 1]");
        }
        if self.rate_grid_points < 2 {
            return config("rate grid needs at least 2 points");
        }
        Ok(())
    }
}

/// Estimated per-block success probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub p_success: f64,
    /// Half-width of the 95% Wilson interval.
    pub ci_halfwidth: f64,
    /// Lower edge of that interval; feasibility is judged on it.
    pub lower: f64,
    pub n: u64,
}

impl OutageEstimate {
    fn from_counts(k: u64, n: u64) -> Self {
        let (lo, hi) = wilson95(k, n);
        Self {
            p_success: k as f64 / n as f64,
            ci_halfwidth: (hi - lo) / 2.0,
            lower: lo,
            n,
        }
    }
}

/// A time-sharing operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayTriple {
    pub gamma: f64,
    pub r_tilde: f64,
    pub r_s: f64,
    pub r_key: f64,
}

impl DelayTriple {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return usage(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if [self.r_tilde, self.r_s, self.r_key].iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return usage("rates must be finite and >= 0");
        }
        if self.r_s > self.r_tilde {
            return usage(format!("secret rate {} exceeds codebook rate {}", self.r_s, self.r_tilde));
        }
        if self.r_key > self.r_s {
            return usage(format!("key rate {} exceeds secret rate {}", self.r_key, self.r_s));
        }
        Ok(())
    }

    /// Both events for one block with the given information values.
    pub fn block_succeeds(&self, main: f64, eaves: f64) -> bool {
        let share = 1.0 - self.gamma;
        let decoded = share * main >= self.r_tilde;
        let equivocation = (self.r_tilde - share * eaves).max(0.0) >= self.r_s - self.r_key;
        decoded && equivocation
    }
}

/// Per-draw `(main_info, eaves_info)`.
fn info_pairs(model: &ChannelModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<Vec<(f64, f64)>> {
    power.validate()?;
    let samples = sample_gains(model, n, rng)?;
    Ok(samples.par_iter().map(|g| (main_info(g, power), eaves_info(g, power))).collect())
}

#[allow(clippy::too_many_arguments)]
pub fn success_probability(
    model: &ChannelModel,
    power: &PowerConfig,
    gamma: f64,
    r_tilde: f64,
    r_s: f64,
    r_key: f64,
    n: usize,
    rng: &RngStream,
) -> Result<OutageEstimate> {
    let triple = DelayTriple { gamma, r_tilde, r_s, r_key };
    triple.validate()?;
    let pairs = info_pairs(model, power, n, rng)?;
    Ok(success_from_pairs(&pairs, &triple))
}

fn success_from_pairs(pairs: &[(f64, f64)], triple: &DelayTriple) -> OutageEstimate {
    let k = pairs.par_iter().filter(|(m, e)| triple.block_succeeds(*m, *e)).count();
    OutageEstimate::from_counts(k as u64, pairs.len() as u64)
}

/// Key capacity before time sharing: `C_s^-` or `max(C_s^-, R_s^{1-bit})`.
pub fn base_key_rate(model: &ChannelModel, power: &PowerConfig, key_mode: KeyMode, n: usize, rng: &RngStream) -> Result<f64> {
    match key_mode {
        KeyMode::NoFeedback => Ok(lower_bound(model, power, n, rng)?.value),
        KeyMode::OneBit => {
            let search = RateSearch::auto(model, power, n.min(200_000), rng)?;
            let renewals = (n / 4).max(1000);
            Ok(one_bit_lower_bound(model, power, n, renewals, &search, rng)?.value())
        }
    }
}

pub fn key_rate(
    model: &ChannelModel,
    power: &PowerConfig,
    gamma: f64,
    key_mode: KeyMode,
    n: usize,
    rng: &RngStream,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return usage(format!("gamma must lie in [0, 1], got {gamma}"));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma * base_key_rate(model, power, key_mode, n, rng)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageOptimum {
    pub triple: DelayTriple,
    pub value: BoundEstimate,
    pub success: OutageEstimate,
    /// False when no grid point met the outage constraint; the triple is
    /// then all zeros.
    pub feasible: bool,
}

/// Smallest success count whose Wilson lower edge reaches `target`.
fn min_successes(target: f64, n: u64) -> Option<u64> {
    if target <= 0.0 {
        return Some(0);
    }
    if wilson95(n, n).0 < target {
        return None;
    }
    let (mut lo, mut hi) = (0u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if wilson95(mid, n).0 >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// Largest admissible `r_s` for fixed `(gamma, r_tilde, r_key)`.
fn best_secret_rate(pairs: &[(f64, f64)], gamma: f64, r_tilde: f64, r_key: f64, need: u64, buf: &mut Vec<f64>) -> Option<f64> {
    if r_tilde < r_key {
        return None;
    }
    if need == 0 {
        return Some(r_tilde);
    }
    let share = 1.0 - gamma;
    buf.clear();
    buf.extend(
        pairs
            .iter()
            .filter(|(m, _)| share * m >= r_tilde)
            .map(|(_, e)| r_key + (r_tilde - share * e).max(0.0)),
    );
    let need = need as usize;
    if buf.len() < need {
        return None;
    }
    // need-th largest slack.
    let idx = buf.len() - need;
    let (_, nth, _) = buf.select_nth_unstable_by(idx, f64::total_cmp);
    Some(nth.min(r_tilde))
}

fn better(a: &DelayTriple, b: &DelayTriple) -> bool {
    (a.r_s, -a.gamma, a.r_tilde) > (b.r_s, -b.gamma, b.r_tilde)
}

/// Grid search for the largest secret rate meeting the outage budget.
pub fn maximize_outage_rate(
    model: &ChannelModel,
    power: &PowerConfig,
    cfg: &DelayConfig,
    n: usize,
    rng: &RngStream,
) -> Result<OutageOptimum> {
    cfg.validate()?;
    let pairs = info_pairs(model, power, n, rng)?;
    let base = if cfg.gamma_grid.iter().any(|g| *g > 0.0) {
        base_key_rate(model, power, cfg.key_mode, n, rng)?
    } else {
        0.0
    };
    maximize_with_key_rate(&pairs, base, cfg)
}

/// As [`maximize_outage_rate`] with a precomputed key capacity.
pub fn maximize_outage_rate_with_key(
    model: &ChannelModel,
    power: &PowerConfig,
    cfg: &DelayConfig,
    base_key: f64,
    n: usize,
    rng: &RngStream,
) -> Result<OutageOptimum> {
    cfg.validate()?;
    if !(base_key.is_finite() && base_key >= 0.0) {
        return config("key capacity must be finite and >= 0");
    }
    let pairs = info_pairs(model, power, n, rng)?;
    maximize_with_key_rate(&pairs, base_key, cfg)
}

fn maximize_with_key_rate(pairs: &[(f64, f64)], base_key: f64, cfg: &DelayConfig) -> Result<OutageOptimum> {
    let n = pairs.len() as u64;
    let mut main_sorted: Vec<f64> = pairs.iter().map(|(m, _)| *m).collect();
    main_sorted.par_sort_unstable_by(f64::total_cmp);
    let q_main = empirical_quantile(&main_sorted, 0.999)?;

    let infeasible = OutageOptimum {
        triple: DelayTriple { gamma: 0.0, r_tilde: 0.0, r_s: 0.0, r_key: 0.0 },
        value: BoundEstimate::zero(BoundKind::Lower, n),
        success: OutageEstimate::from_counts(0, n),
        feasible: false,
    };
    let Some(need) = min_successes(1.0 - cfg.alpha, n) else {
        return Ok(infeasible);
    };
    let points = cfg.rate_grid_points;

    let per_gamma: Vec<Option<DelayTriple>> = cfg
        .gamma_grid
        .par_iter()
        .map(|&gamma| {
            let r_key = gamma * base_key;
            let ceiling = (1.0 - gamma) * q_main;
            let mut buf = Vec::with_capacity(pairs.len());
            let mut best: Option<DelayTriple> = None;
            let mut consider = |r_tilde: f64, best: &mut Option<DelayTriple>| {
                if let Some(r_s) = best_secret_rate(pairs, gamma, r_tilde, r_key, need, &mut buf) {
                    let t = DelayTriple { gamma, r_tilde, r_s, r_key };
                    if best.is_none_or(|b| better(&t, &b)) {
                        *best = Some(t);
                    }
                }
            };
            let step = ceiling / points as f64;
            let mut best_j = None;
            for j in 0..=points {
                let r_tilde = if j == points { ceiling } else { step * j as f64 };
                let before = best;
                consider(r_tilde, &mut best);
                if best != before {
                    best_j = Some(j);
                }
            }
            // The one-time-pad-only point r_tilde = r_s = r_key.
            consider(r_key, &mut best);
            if let (Some(j), true) = (best_j, step > 0.0) {
                let lo = step * (j as f64 - 1.0).max(0.0);
                let hi = (step * (j as f64 + 1.0)).min(ceiling);
                for k in 0..=points {
                    consider(lo + (hi - lo) * k as f64 / points as f64, &mut best);
                }
            }
            best
        })
        .collect();

    let mut best: Option<DelayTriple> = None;
    for t in per_gamma.into_iter().flatten() {
        if best.is_none_or(|b| better(&t, &b)) {
            best = Some(t);
        }
    }
    let Some(triple) = best else {
        return Ok(infeasible);
    };
    let success = success_from_pairs(pairs, &triple);
    Ok(OutageOptimum {
        triple,
        value: BoundEstimate {
            value: triple.r_s,
            ci_halfwidth: 0.0,
            n_samples: n,
            kind: BoundKind::Lower,
        },
        success,
        feasible: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainDist;

    fn pm(v: f64) -> GainDist {
        GainDist::point(v).unwrap()
    }

    const RNG: RngStream = RngStream { seed: 41, stream_id: 2 };

    fn ninety_percent() -> ChannelModel {
        let hm = GainDist::discrete(vec![0.0, 3.0], vec![0.1, 0.9]).unwrap();
        ChannelModel::new(hm, pm(0.0), pm(0.0)).unwrap()
    }

    #[test]
    fn vacuous_events() {
        let m = ChannelModel::exponential(1.0, 1.0, 1.0).unwrap();
        let p = PowerConfig::new(1.0, 1.0).unwrap();
        let e = success_probability(&m, &p, 0.3, 0.0, 0.0, 0.0, 10_000, &RNG).unwrap();
        assert_eq!(e.p_success, 1.0);
        let e = success_probability(&m, &p, 0.0, 1.0, 1.0, 0.0, 10_000, &RNG).unwrap();
        assert_eq!(e.p_success, 0.0);
    }

    #[test]
    fn discrete_success_probability() {
        let p = PowerConfig::new(1.0, 0.0).unwrap();
        let e = success_probability(&ninety_percent(), &p, 0.0, 2.0, 2.0, 0.0, 200_000, &RNG).unwrap();
        assert!((e.p_success - 0.9).abs() < 3.0 * e.ci_halfwidth);
    }

    #[test]
    fn rate_ordering_is_enforced() {
        let m = ninety_percent();
        let p = PowerConfig::new(1.0, 0.0).unwrap();
        assert!(matches!(
            success_probability(&m, &p, 0.0, 1.0, 2.0, 0.0, 10, &RNG),
            Err(Error::Usage(_))
        ));
        assert!(success_probability(&m, &p, 0.0, 2.0, 1.0, 1.5, 10, &RNG).is_err());
        assert!(success_probability(&m, &p, 1.5, 2.0, 1.0, 0.0, 10, &RNG).is_err());
    }

    #[test]
    fn key_rate_scaling() {
        let m = ChannelModel::exponential(5.0, 2.0, 2.0).unwrap();
        let p = PowerConfig::new(1.0, 1.0).unwrap();
        assert_eq!(key_rate(&m, &p, 0.0, KeyMode::NoFeedback, 1000, &RNG).unwrap(), 0.0);
        let full = key_rate(&m, &p, 1.0, KeyMode::NoFeedback, 50_000, &RNG).unwrap();
        assert_eq!(full, lower_bound(&m, &p, 50_000, &RNG).unwrap().value);
    }

    #[test]
    fn discrete_optimum_uses_full_rate() {
        let p = PowerConfig::new(1.0, 0.0).unwrap();
        let mut cfg = DelayConfig::new(0.2, KeyMode::NoFeedback).unwrap();
        cfg.gamma_grid = vec![0.0];
        let opt = maximize_outage_rate(&ninety_percent(), &p, &cfg, 100_000, &RNG).unwrap();
        assert!(opt.feasible);
        assert_eq!(opt.triple.r_s, 2.0);
        assert_eq!(opt.triple.r_tilde, 2.0);
    }

    #[test]
    fn zero_outage_budget_with_fading() {
        let m = ChannelModel::exponential(5.0, 2.0, 2.0).unwrap();
        let p = PowerConfig::new(10.0, 1.0).unwrap();
        let cfg = DelayConfig::new(0.0, KeyMode::NoFeedback).unwrap();
        let opt = maximize_outage_rate(&m, &p, &cfg, 20_000, &RNG).unwrap();
        assert_eq!(opt.value.value, 0.0);
    }

    #[test]
    fn min_successes_is_monotone() {
        let n = 1000;
        let a = min_successes(0.8, n).unwrap();
        let b = min_successes(0.9, n).unwrap();
        assert!(a < b);
        assert!(wilson95(a, n).0 >= 0.8 && wilson95(a - 1, n).0 < 0.8);
        assert_eq!(min_successes(1.0, n), None);
        assert_eq!(min_successes(0.0, n), Some(0));
    }
}
