//! Small Monte Carlo summary statistics.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Running sums for a sample mean. Merging is order-sensitive in the last
/// bits, so callers merge chunk results in chunk order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanStat {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanStat {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &MeanStat) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum / n;
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Half-width of the 95% normal-approximation interval for the mean.
    pub fn ci95(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        Z95 * (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanStat {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = MeanStat::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Sums for the renewal-reward ratio `E[reward] / E[length]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioStat {
    pub n: u64,
    pub sum_reward: f64,
    pub sum_len: f64,
    pub sum_reward_sq: f64,
    pub sum_len_sq: f64,
    pub sum_cross: f64,
}

impl RatioStat {
    pub fn push(&mut self, reward: f64, len: f64) {
        self.n += 1;
        self.sum_reward += reward;
        self.sum_len += len;
        self.sum_reward_sq += reward * reward;
        self.sum_len_sq += len * len;
        self.sum_cross += reward * len;
    }

    pub fn merge(&mut self, o: &RatioStat) {
        self.n += o.n;
        self.sum_reward += o.sum_reward;
        self.sum_len += o.sum_len;
        self.sum_reward_sq += o.sum_reward_sq;
        self.sum_len_sq += o.sum_len_sq;
        self.sum_cross += o.sum_cross;
    }

    pub fn ratio(&self) -> f64 {
        if self.sum_len > 0.0 {
            self.sum_reward / self.sum_len
        } else {
            0.0
        }
    }

    pub fn mean_len(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum_len / self.n as f64
        }
    }

    /// Delta-method 95% half-width: the variance of `reward - ratio * len`
    /// divided by `n * mean_len^2`.
    pub fn ci95(&self) -> f64 {
        if self.n < 2 || self.sum_len <= 0.0 {
            return 0.0;
        }
        let n = self.n as f64;
        let r = self.ratio();
        let mean_len = self.sum_len / n;
        let mean_resid = (self.sum_reward - r * self.sum_len) / n;
        let sq = self.sum_reward_sq - 2.0 * r * self.sum_cross + r * r * self.sum_len_sq;
        let var = ((sq - n * mean_resid * mean_resid) / (n - 1.0)).max(0.0);
        Z95 * (var / n).sqrt() / mean_len
    }
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson95(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Normal-approximation 95% half-width for a binomial proportion.
pub fn binomial_ci95(k: u64, n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let p = k as f64 / n as f64;
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}
