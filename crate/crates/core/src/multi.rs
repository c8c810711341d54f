//! Bounds for `S` hybrid adversaries, colluding or not.
//!
//! Every adversary's jamming lands on the legitimate receiver, so the main
//! channel sees the summed jammer gain. Non-colluding bounds take the worst
//! adversary; colluding bounds give the coalition the summed eavesdropper
//! gain. Each bound reuses the single-adversary estimators on derived gain
//! triples, which makes `S = 1` reproduce them exactly.

use serde::{Deserialize, Serialize};

use crate::bounds::{lower_bound_from_samples, upper_bound_from_samples, BoundEstimate};
use crate::channel::{ChannelModel, GainDist, GainSample, PowerConfig};
use crate::error::{config, usage, Error, Result};
use crate::rng::{par_chunks, RngStream, CHUNK_LEN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiModel {
    pub hm: GainDist,
    /// Transmitter-to-adversary gains, one per adversary.
    pub he_list: Vec<GainDist>,
    /// Adversary-to-receiver gains, one per adversary.
    pub hz_list: Vec<GainDist>,
    /// Adversary-to-adversary gains. Accepted for completeness; none of the
    /// bounds depend on them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_gains: Option<Vec<Vec<GainDist>>>,
}

impl MultiModel {
    pub fn new(hm: GainDist, he_list: Vec<GainDist>, hz_list: Vec<GainDist>) -> Result<Self> {
        let m = Self {
            hm,
            he_list,
            hz_list,
            cross_gains: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_single(model: &ChannelModel) -> Self {
        Self {
            hm: model.hm.clone(),
            he_list: vec![model.he.clone()],
            hz_list: vec![model.hz.clone()],
            cross_gains: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("multi-adversary model: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn s_count(&self) -> usize {
        self.he_list.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.he_list.is_empty() {
            return config("multi-adversary model needs at least one adversary");
        }
        if self.he_list.len() != self.hz_list.len() {
            return config("he_list and hz_list must have one entry per adversary");
        }
        self.hm.validate()?;
        for d in self.he_list.iter().chain(&self.hz_list) {
            d.validate()?;
        }
        if let Some(cross) = &self.cross_gains {
            for d in cross.iter().flatten() {
                d.validate()?;
            }
        }
        Ok(())
    }
}

/// Flattened draws: `he[i * S + s]`, `hz[i * S + s]`.
struct MultiSamples {
    s: usize,
    hm: Vec<f64>,
    he: Vec<f64>,
    hz: Vec<f64>,
}

fn sample_multi(mm: &MultiModel, n: usize, rng: &RngStream) -> Result<MultiSamples> {
    mm.validate()?;
    if n == 0 {
        return usage("sample count must be >= 1");
    }
    let s = mm.s_count();
    // Per draw: hm, then (he_s, hz_s) for each adversary, matching the
    // single-adversary order when S = 1.
    let chunks = par_chunks(n, CHUNK_LEN, rng, |r, _, len| {
        let mut hm = Vec::with_capacity(len);
        let mut he = Vec::with_capacity(len * s);
        let mut hz = Vec::with_capacity(len * s);
        for _ in 0..len {
            hm.push(mm.hm.draw(r));
            for k in 0..s {
                he.push(mm.he_list[k].draw(r));
                hz.push(mm.hz_list[k].draw(r));
            }
        }
        (hm, he, hz)
    });
    let mut out = MultiSamples {
        s,
        hm: Vec::with_capacity(n),
        he: Vec::with_capacity(n * s),
        hz: Vec::with_capacity(n * s),
    };
    for (a, b, c) in chunks {
        out.hm.extend(a);
        out.he.extend(b);
        out.hz.extend(c);
    }
    Ok(out)
}

impl MultiSamples {
    fn sum_row(v: &[f64], s: usize, i: usize) -> f64 {
        v[i * s..(i + 1) * s].iter().fold(0.0, |acc, x| acc + x)
    }

    /// Triples seen by adversary `k` alone, with the summed jammer gain.
    fn for_adversary(&self, k: usize) -> Vec<GainSample> {
        (0..self.hm.len())
            .map(|i| GainSample {
                hm: self.hm[i],
                he: self.he[i * self.s + k],
                hz: Self::sum_row(&self.hz, self.s, i),
            })
            .collect()
    }

    /// Triples seen by the coalition.
    fn for_coalition(&self) -> Vec<GainSample> {
        (0..self.hm.len())
            .map(|i| GainSample {
                hm: self.hm[i],
                he: Self::sum_row(&self.he, self.s, i),
                hz: Self::sum_row(&self.hz, self.s, i),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiBound {
    pub estimate: BoundEstimate,
    /// Adversary attaining the minimum (non-colluding bounds only).
    pub s_argmin: Option<usize>,
}

fn worst_adversary<F>(samples: &MultiSamples, mut per_adversary: F) -> Result<MultiBound>
where
    F: FnMut(&[GainSample]) -> Result<BoundEstimate>,
{
    let mut best: Option<(usize, BoundEstimate)> = None;
    for k in 0..samples.s {
        let est = per_adversary(&samples.for_adversary(k))?;
        if best.is_none_or(|(_, b)| est.value < b.value) {
            best = Some((k, est));
        }
    }
    let (k, estimate) = best.expect("at least one adversary");
    Ok(MultiBound {
        estimate,
        s_argmin: Some(k),
    })
}

pub fn lower_noncolluding(mm: &MultiModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<MultiBound> {
    power.validate()?;
    let samples = sample_multi(mm, n, rng)?;
    worst_adversary(&samples, |g| Ok(lower_bound_from_samples(g, power)))
}

pub fn upper_noncolluding(mm: &MultiModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<MultiBound> {
    power.validate()?;
    let samples = sample_multi(mm, n, rng)?;
    worst_adversary(&samples, |g| upper_bound_from_samples(g, power))
}

pub fn lower_colluding(mm: &MultiModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<MultiBound> {
    power.validate()?;
    let samples = sample_multi(mm, n, rng)?;
    Ok(MultiBound {
        estimate: lower_bound_from_samples(&samples.for_coalition(), power),
        s_argmin: None,
    })
}

pub fn upper_colluding(mm: &MultiModel, power: &PowerConfig, n: usize, rng: &RngStream) -> Result<MultiBound> {
    power.validate()?;
    let samples = sample_multi(mm, n, rng)?;
    Ok(MultiBound {
        estimate: upper_bound_from_samples(&samples.for_coalition(), power)?,
        s_argmin: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{lower_bound, upper_bound};

    fn pm(v: f64) -> GainDist {
        GainDist::point(v).unwrap()
    }

    const RNG: RngStream = RngStream { seed: 31, stream_id: 4 };

    fn two_point_mass() -> MultiModel {
        MultiModel::new(pm(7.0), vec![pm(0.5), pm(0.5)], vec![pm(0.0), pm(0.0)]).unwrap()
    }

    #[test]
    fn point_mass_instance() {
        let p = PowerConfig::new(1.0, 1.0).unwrap();
        let mm = two_point_mass();
        let nc = 8f64.log2() - 1.5f64.log2();
        let lo = lower_noncolluding(&mm, &p, 1000, &RNG).unwrap();
        let up = upper_noncolluding(&mm, &p, 1000, &RNG).unwrap();
        assert!((lo.estimate.value - nc).abs() < 1e-9);
        assert!((up.estimate.value - nc).abs() < 1e-9);
        let lc = lower_colluding(&mm, &p, 1000, &RNG).unwrap();
        let uc = upper_colluding(&mm, &p, 1000, &RNG).unwrap();
        assert!((lc.estimate.value - 2.0).abs() < 1e-9);
        assert!((uc.estimate.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_adversary_reduces_exactly() {
        let m = ChannelModel::exponential(2.0, 0.7, 1.3).unwrap();
        let mm = MultiModel::from_single(&m);
        let p = PowerConfig::new(5.0, 2.0).unwrap();
        let n = 70_000;
        let lo = lower_bound(&m, &p, n, &RNG).unwrap();
        let up = upper_bound(&m, &p, n, &RNG).unwrap();
        assert_eq!(lower_noncolluding(&mm, &p, n, &RNG).unwrap().estimate, lo);
        assert_eq!(lower_colluding(&mm, &p, n, &RNG).unwrap().estimate, lo);
        assert_eq!(upper_noncolluding(&mm, &p, n, &RNG).unwrap().estimate, up);
        assert_eq!(upper_colluding(&mm, &p, n, &RNG).unwrap().estimate, up);
    }

    #[test]
    fn strong_adversary_clamps_to_zero() {
        let mm = MultiModel::new(pm(7.0), vec![pm(0.5), pm(1e9)], vec![pm(0.0), pm(0.0)]).unwrap();
        let p = PowerConfig::new(1.0, 1.0).unwrap();
        let lo = lower_noncolluding(&mm, &p, 100, &RNG).unwrap();
        assert_eq!(lo.estimate.value, 0.0);
        assert_eq!(lo.s_argmin, Some(1));
    }

    #[test]
    fn silent_eavesdroppers_make_collusion_irrelevant() {
        let e = GainDist::exponential(1.0).unwrap();
        let mm = MultiModel::new(GainDist::exponential(3.0).unwrap(), vec![pm(0.0), pm(0.0)], vec![e.clone(), e])
            .unwrap();
        let p = PowerConfig::new(4.0, 1.0).unwrap();
        let a = lower_colluding(&mm, &p, 20_000, &RNG).unwrap();
        let b = lower_noncolluding(&mm, &p, 20_000, &RNG).unwrap();
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn cross_gains_are_ignored() {
        let mut mm = MultiModel::new(
            GainDist::exponential(3.0).unwrap(),
            vec![GainDist::exponential(0.5).unwrap(), GainDist::exponential(0.8).unwrap()],
            vec![GainDist::exponential(1.0).unwrap(), pm(0.3)],
        )
        .unwrap();
        let p = PowerConfig::new(4.0, 1.0).unwrap();
        let before = upper_noncolluding(&mm, &p, 20_000, &RNG).unwrap();
        mm.cross_gains = Some(vec![vec![pm(0.0), pm(5.0)], vec![pm(2.0), pm(0.0)]]);
        assert_eq!(upper_noncolluding(&mm, &p, 20_000, &RNG).unwrap(), before);
    }

    #[test]
    fn config_errors() {
        assert!(MultiModel::new(pm(1.0), vec![], vec![]).is_err());
        assert!(MultiModel::new(pm(1.0), vec![pm(1.0)], vec![]).is_err());
        assert!(MultiModel::from_json(r#"{"hm":{"exp":1},"he_list":[{"exp":1}],"hz_list":[{"exp":1}],"joint":true}"#).is_err());
        let ok = MultiModel::from_json(r#"{"hm":{"exp":1},"he_list":[{"exp":1}],"hz_list":[{"point":0}]}"#).unwrap();
        assert_eq!(ok.s_count(), 1);
    }
}
