//! Rates achievable with one bit of ACK/NAK feedback per block.
//!
//! A bit group of `r` bits is resent until the receiver has collected `r`
//! bits of mutual information. Each completed group is one renewal epoch;
//! its secure reward is `[r - log2(1 + pt * sum he)]^+` where the sum runs
//! over the blocks the adversary is credited with. The long-run secure rate
//! is `E[reward] / E[T]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{chunked_stat, lower_bound_from_samples, BoundEstimate, BoundKind};
use crate::channel::{
    empirical_quantile, log2_1p, main_info, main_snr, sample_gains, ChannelModel, PowerConfig,
};
use crate::error::{config, Error, Result};
use crate::rng::{par_chunks, RngStream};
use crate::stats::RatioStat;

/// Epoch cap after which a group is abandoned.
pub const DEFAULT_T_MAX: usize = 10_000;

const EPOCHS_PER_CHUNK: usize = 1024;

/// Retransmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Maximal-ratio combining: SNRs of all copies add inside one log.
    Mrc,
    /// Failed copies are discarded.
    PlainArq,
    /// Plain ARQ plus rate adaptation on main-channel CSI; only the
    /// decoded copy is credited to the adversary.
    MainCsi,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Mrc, Scheme::PlainArq, Scheme::MainCsi];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Mrc => "mrc",
            Scheme::PlainArq => "plain_arq",
            Scheme::MainCsi => "main_csi",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mrc" => Ok(Scheme::Mrc),
            "plain_arq" => Ok(Scheme::PlainArq),
            "main_csi" => Ok(Scheme::MainCsi),
            other => config(format!("unknown scheme {other:?}")),
        }
    }
}

/// One renewal epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalSample {
    /// Transmissions spent on the group.
    pub t: u64,
    /// Eavesdropper gain credited to the adversary for this group.
    pub sum_he: f64,
    pub reward: f64,
    /// Abandoned at `t_max`; carries zero reward.
    pub truncated: bool,
}

/// Largest per-block SNR the model can produce.
fn snr_sup(model: &ChannelModel, power: &PowerConfig) -> f64 {
    if power.pt == 0.0 {
        return 0.0;
    }
    let hm = model.hm.ess_sup();
    if hm == 0.0 {
        return 0.0;
    }
    power.pt * hm / (1.0 + power.pj * model.hz.ess_inf())
}

/// Essential supremum of the information one group can gather within
/// `t_max` transmissions.
pub fn accumulable_sup(model: &ChannelModel, power: &PowerConfig, scheme: Scheme, t_max: usize) -> f64 {
    let s = snr_sup(model, power);
    match scheme {
        Scheme::Mrc => log2_1p(t_max as f64 * s),
        Scheme::PlainArq | Scheme::MainCsi => log2_1p(s),
    }
}

fn check_args(model: &ChannelModel, power: &PowerConfig, r: f64, n: usize, t_max: usize) -> Result<()> {
    model.validate()?;
    power.validate()?;
    if !(r.is_finite() && r > 0.0) {
        return config(format!("rate must be finite and > 0, got {r}"));
    }
    if n == 0 || t_max == 0 {
        return config("renewal count and t_max must be >= 1");
    }
    Ok(())
}

fn check_reachable(model: &ChannelModel, power: &PowerConfig, r: f64, scheme: Scheme, t_max: usize) -> Result<()> {
    let sup = accumulable_sup(model, power, scheme, t_max);
    if r > sup {
        return Err(Error::UnreachableThreshold { rate: r, sup, t_max });
    }
    Ok(())
}

fn simulate_epoch<R: Rng + ?Sized>(
    rng: &mut R,
    model: &ChannelModel,
    power: &PowerConfig,
    r: f64,
    scheme: Scheme,
    t_max: usize,
) -> RenewalSample {
    let mut acc_snr = 0.0;
    let mut sum_he = 0.0;
    for t in 1..=t_max {
        let g = model.draw(rng);
        let decoded = match scheme {
            Scheme::Mrc => {
                acc_snr += main_snr(&g, power);
                log2_1p(acc_snr) >= r
            }
            Scheme::PlainArq | Scheme::MainCsi => main_info(&g, power) >= r,
        };
        match scheme {
            Scheme::MainCsi => {
                if decoded {
                    sum_he = g.he;
                }
            }
            _ => sum_he += g.he,
        }
        if decoded {
            let reward = (r - log2_1p(power.pt * sum_he)).max(0.0);
            return RenewalSample {
                t: t as u64,
                sum_he,
                reward,
                truncated: false,
            };
        }
    }
    RenewalSample {
        t: t_max as u64,
        sum_he,
        reward: 0.0,
        truncated: true,
    }
}

/// `n_renewals` independent epochs in a deterministic order.
pub fn simulate_renewals(
    model: &ChannelModel,
    power: &PowerConfig,
    r: f64,
    scheme: Scheme,
    n_renewals: usize,
    t_max: usize,
    rng: &RngStream,
) -> Result<Vec<RenewalSample>> {
    check_args(model, power, r, n_renewals, t_max)?;
    check_reachable(model, power, r, scheme, t_max)?;
    let chunks = par_chunks(n_renewals, EPOCHS_PER_CHUNK, rng, |g, _, len| {
        (0..len)
            .map(|_| simulate_epoch(g, model, power, r, scheme, t_max))
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Renewal-reward estimate at one rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub scheme: Scheme,
    pub r: f64,
    pub estimate: BoundEstimate,
    pub mean_t: f64,
    pub truncation_fraction: f64,
}

/// `mean(reward) / mean(t)`. For the ARQ variants this is the same number
/// as `p_hat * mean(reward)` with `p_hat = 1 / mean(t)`.
pub fn rate_at(
    model: &ChannelModel,
    power: &PowerConfig,
    r: f64,
    scheme: Scheme,
    n_renewals: usize,
    t_max: usize,
    rng: &RngStream,
) -> Result<RateReport> {
    check_args(model, power, r, n_renewals, t_max)?;
    check_reachable(model, power, r, scheme, t_max)?;
    let parts = par_chunks(n_renewals, EPOCHS_PER_CHUNK, rng, |g, _, len| {
        let mut stat = RatioStat::default();
        let mut truncated = 0u64;
        for _ in 0..len {
            let e = simulate_epoch(g, model, power, r, scheme, t_max);
            stat.push(e.reward, e.t as f64);
            truncated += u64::from(e.truncated);
        }
        (stat, truncated)
    });
    let mut stat = RatioStat::default();
    let mut truncated = 0;
    for (s, k) in &parts {
        stat.merge(s);
        truncated += k;
    }
    Ok(RateReport {
        scheme,
        r,
        estimate: BoundEstimate {
            value: stat.ratio().max(0.0),
            ci_halfwidth: stat.ci95(),
            n_samples: stat.n,
            kind: BoundKind::Lower,
        },
        mean_t: stat.mean_len(),
        truncation_fraction: truncated as f64 / n_renewals as f64,
    })
}

/// Coarse grid then golden-section refinement over the group rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSearch {
    pub r_max: f64,
    pub grid_points: usize,
    pub refine_iters: usize,
    pub t_max: usize,
}

impl RateSearch {
    pub fn new(r_max: f64, grid_points: usize, refine_iters: usize) -> Result<Self> {
        let s = Self {
            r_max,
            grid_points,
            refine_iters,
            t_max: DEFAULT_T_MAX,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return config(format!("search ceiling must be > 0, got {}", self.r_max));
        }
        if self.grid_points < 8 {
            return config("rate search needs at least 8 grid points");
        }
        if self.t_max == 0 {
            return config("t_max must be >= 1");
        }
        Ok(())
    }

    /// 64-point grid up to the 0.999-quantile of per-block main information
    /// (from a pilot of `pilot` draws), 20 golden-section steps.
    pub fn auto(model: &ChannelModel, power: &PowerConfig, pilot: usize, rng: &RngStream) -> Result<Self> {
        let samples = sample_gains(model, pilot.max(1), &rng.derive(0x5EA2C4))?;
        let mut info: Vec<f64> = samples.iter().map(|g| main_info(g, power)).collect();
        info.sort_unstable_by(f64::total_cmp);
        let q = empirical_quantile(&info, 0.999)?;
        let r_max = if q > 0.0 { q } else { info[info.len() - 1].max(1.0) };
        Self::new(r_max, 64, 20)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptimum {
    pub r_star: f64,
    pub report: RateReport,
    /// Rates evaluated during the search.
    pub evaluations: usize,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximizes [`rate_at`] over `(0, r_max]`. Every evaluation reuses `rng`,
/// so the comparison between rates uses common random numbers.
pub fn maximize_rate(
    model: &ChannelModel,
    power: &PowerConfig,
    scheme: Scheme,
    search: &RateSearch,
    n_renewals: usize,
    rng: &RngStream,
) -> Result<RateOptimum> {
    search.validate()?;
    model.validate()?;
    power.validate()?;
    let zero = |r: f64| RateReport {
        scheme,
        r,
        estimate: BoundEstimate::zero(BoundKind::Lower, n_renewals as u64),
        mean_t: 0.0,
        truncation_fraction: 0.0,
    };
    if snr_sup(model, power) == 0.0 {
        return Ok(RateOptimum {
            r_star: 0.0,
            report: zero(0.0),
            evaluations: 0,
        });
    }
    let mut evaluations = 0usize;
    let mut eval = |r: f64| -> Result<RateReport> {
        evaluations += 1;
        match rate_at(model, power, r, scheme, n_renewals, search.t_max, rng) {
            Err(Error::UnreachableThreshold { .. }) => Ok(zero(r)),
            other => other,
        }
    };

    let step = search.r_max / search.grid_points as f64;
    let mut best: Option<RateReport> = None;
    let mut best_k = 1;
    for k in 1..=search.grid_points {
        let rep = eval(step * k as f64)?;
        if best.is_none_or(|b| rep.estimate.value > b.estimate.value) {
            best = Some(rep);
            best_k = k;
        }
    }
    let mut best = best.expect("grid is nonempty");

    let mut lo = (step * (best_k as f64 - 1.0)).max(step * 1e-6);
    let mut hi = (step * (best_k as f64 + 1.0)).min(search.r_max);
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    for _ in 0..search.refine_iters {
        for f in [&f1, &f2] {
            if f.estimate.value > best.estimate.value {
                best = *f;
            }
        }
        if f1.estimate.value >= f2.estimate.value {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    for f in [&f1, &f2] {
        if f.estimate.value > best.estimate.value {
            best = *f;
        }
    }
    Ok(RateOptimum {
        r_star: best.r,
        report: best,
        evaluations,
    })
}

/// `E[log2(1 + pt*hm / (1 + max(pj*hz, pt*he)))]`.
pub fn upper_bound_1bit(model: &ChannelModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<BoundEstimate> {
    power.validate()?;
    let samples = sample_gains(model, n, rng)?;
    let stat = chunked_stat(&samples, |g| {
        let interference = (power.pj * g.hz).max(power.pt * g.he);
        log2_1p(power.pt * g.hm / (1.0 + interference))
    });
    Ok(BoundEstimate::clamped(&stat, BoundKind::Upper))
}

/// `max(C_s^-, R_s^{1-bit})`: the better of the no-feedback lower bound and
/// the optimized MRC renewal rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneBitLower {
    pub no_feedback: BoundEstimate,
    pub renewal: RateOptimum,
}

impl OneBitLower {
    pub fn value(&self) -> f64 {
        self.no_feedback.value.max(self.renewal.report.estimate.value)
    }

    pub fn ci_halfwidth(&self) -> f64 {
        if self.no_feedback.value >= self.renewal.report.estimate.value {
            self.no_feedback.ci_halfwidth
        } else {
            self.renewal.report.estimate.ci_halfwidth
        }
    }
}

pub fn one_bit_lower_bound(
    model: &ChannelModel,
    power: &PowerConfig,
    n_samples: usize,
    n_renewals: usize,
    search: &RateSearch,
    rng: &RngStream,
) -> Result<OneBitLower> {
    let samples = sample_gains(model, n_samples, rng)?;
    let no_feedback = lower_bound_from_samples(&samples, power);
    let renewal = maximize_rate(model, power, Scheme::Mrc, search, n_renewals, rng)?;
    Ok(OneBitLower { no_feedback, renewal })
}
