//! Minimum of `E[(A - B)^+]` over joint laws of `(A, B)` with fixed marginals.
//!
//! The cost `(a - b)^+` is submodular, so pairing equal quantiles
//! (the comonotone coupling) attains the minimum. [`lp_oracle`] solves the
//! same problem as a transportation LP on finite atoms and is used to check
//! that claim; [`min_positive_gap_discrete`] falls back to the LP value if the
//! two ever disagree.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;

use crate::channel::empirical_quantile;
use crate::error::{config, usage, Result};
use crate::rng::RngStream;
use crate::stats::MeanStat;

/// Largest marginal the LP oracle accepts.
pub const LP_MAX_ATOMS: usize = 64;

const MARGINAL_TOL: f64 = 1e-9;

/// Equal-weight sample of a scalar law, kept sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    samples: Vec<f64>,
}

impl EmpiricalDist {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return usage("empirical distribution needs at least one sample");
        }
        if samples.iter().any(|x| x.is_nan()) {
            return usage("empirical distribution contains NaN");
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Re-expresses the law on `m` equally likely quantile points
    /// `F^{-1}(k/m)`, `k = 1..=m`. The identity when `m == len()`.
    pub fn on_grid(&self, m: usize) -> Vec<f64> {
        if m == self.samples.len() {
            return self.samples.clone();
        }
        (1..=m)
            .map(|k| empirical_quantile(&self.samples, k as f64 / m as f64).expect("nonempty"))
            .collect()
    }
}

/// Finite law with explicit atom weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    pub atoms: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let d = Self { atoms, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() || self.atoms.len() != self.probs.len() {
            return config("discrete law needs equally many atoms and probs (at least one)");
        }
        if self.atoms.iter().any(|a| !a.is_finite()) {
            return config("discrete law atoms must be finite");
        }
        if self.probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return config("discrete law probs must be >= 0");
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > MARGINAL_TOL {
            return config(format!("discrete law probs sum to {total}, expected 1"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Joint weights, rows indexed by atoms of A and columns by atoms of B.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub weights: Vec<Vec<f64>>,
}

impl CouplingMatrix {
    /// Checks nonnegativity and both marginals within `1e-9`.
    pub fn is_coupling_of(&self, a: &DiscreteDist, b: &DiscreteDist) -> bool {
        if self.weights.len() != a.len() || self.weights.iter().any(|r| r.len() != b.len()) {
            return false;
        }
        if self.weights.iter().flatten().any(|w| *w < -MARGINAL_TOL) {
            return false;
        }
        let rows_ok = self
            .weights
            .iter()
            .zip(&a.probs)
            .all(|(r, p)| (r.iter().sum::<f64>() - p).abs() <= MARGINAL_TOL);
        let cols_ok = (0..b.len()).all(|j| {
            let s: f64 = self.weights.iter().map(|r| r[j]).sum();
            (s - b.probs[j]).abs() <= MARGINAL_TOL
        });
        rows_ok && cols_ok
    }

    pub fn expected_positive_gap(&self, a: &DiscreteDist, b: &DiscreteDist) -> f64 {
        let mut total = 0.0;
        for (i, row) in self.weights.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                total += w * (a.atoms[i] - b.atoms[j]).max(0.0);
            }
        }
        total
    }
}

/// Per-pair terms `(a_(k) - b_(k))^+` of the comonotone coupling, after
/// aligning both sides on a common quantile grid of `max(|a|, |b|)` points.
pub fn min_positive_gap_stat(a: &EmpiricalDist, b: &EmpiricalDist) -> MeanStat {
    let m = a.len().max(b.len());
    let ga = a.on_grid(m);
    let gb = b.on_grid(m);
    ga.iter().zip(&gb).map(|(x, y)| (x - y).max(0.0)).collect()
}

/// `min E[(A - B)^+]` over couplings of two equal-weight samples.
pub fn min_positive_gap(a: &EmpiricalDist, b: &EmpiricalDist) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return usage("min_positive_gap needs nonempty inputs");
    }
    Ok(min_positive_gap_stat(a, b).mean())
}

/// Comonotone (north-west corner on sorted atoms) coupling of two finite
/// laws, with its value.
pub fn comonotone_coupling(a: &DiscreteDist, b: &DiscreteDist) -> Result<(f64, CouplingMatrix)> {
    a.validate()?;
    b.validate()?;
    let order = |d: &DiscreteDist| {
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&i, &j| d.atoms[i].total_cmp(&d.atoms[j]));
        idx
    };
    let (oa, ob) = (order(a), order(b));
    let mut weights = vec![vec![0.0; b.len()]; a.len()];
    let (mut i, mut j) = (0, 0);
    let mut ra = a.probs[oa[0]];
    let mut rb = b.probs[ob[0]];
    loop {
        let w = ra.min(rb);
        weights[oa[i]][ob[j]] += w;
        ra -= w;
        rb -= w;
        // Advance whichever side is exhausted; on a tie advance both.
        let adv_a = ra <= rb;
        let adv_b = rb <= ra;
        if adv_a {
            i += 1;
            if i == oa.len() {
                break;
            }
            ra = a.probs[oa[i]];
        }
        if adv_b {
            j += 1;
            if j == ob.len() {
                break;
            }
            rb = b.probs[ob[j]];
        }
    }
    let m = CouplingMatrix { weights };
    let v = m.expected_positive_gap(a, b);
    Ok((v, m))
}

/// Exact transportation-LP minimum of `sum w_ij (a_i - b_j)^+` over all
/// couplings.
pub fn lp_oracle(a: &DiscreteDist, b: &DiscreteDist) -> Result<(f64, CouplingMatrix)> {
    a.validate()?;
    b.validate()?;
    if a.len() > LP_MAX_ATOMS || b.len() > LP_MAX_ATOMS {
        return usage(format!("lp_oracle accepts at most {LP_MAX_ATOMS} atoms per marginal"));
    }
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = a
        .atoms
        .iter()
        .map(|ai| {
            b.atoms
                .iter()
                .map(|bj| problem.add_var((ai - bj).max(0.0), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for (i, p) in a.probs.iter().enumerate() {
        let expr: Vec<_> = vars[i].iter().map(|v| (*v, 1.0)).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Eq, *p);
    }
    // The last column constraint is implied by the others.
    for (j, q) in b.probs.iter().enumerate().take(b.len() - 1) {
        let expr: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Eq, *q);
    }
    let solution = problem
        .solve()
        .map_err(|e| crate::error::Error::Config(format!("transportation LP failed: {e}")))?;
    let weights: Vec<Vec<f64>> = vars
        .iter()
        .map(|row| row.iter().map(|v| solution[*v].max(0.0)).collect())
        .collect();
    let m = CouplingMatrix { weights };
    let v = m.expected_positive_gap(a, b);
    Ok((v, m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSolution {
    pub value: f64,
    pub coupling: CouplingMatrix,
    /// Set when the LP found a strictly cheaper coupling than the quantile
    /// pairing and its value was returned instead.
    pub lp_fallback: bool,
}

/// Quantile-coupling minimum for finite laws, cross-checked against the LP
/// whenever both marginals are small enough.
pub fn min_positive_gap_discrete(a: &DiscreteDist, b: &DiscreteDist) -> Result<GapSolution> {
    let (value, coupling) = comonotone_coupling(a, b)?;
    if a.len() <= LP_MAX_ATOMS && b.len() <= LP_MAX_ATOMS {
        let (lp_value, lp_coupling) = lp_oracle(a, b)?;
        if lp_value < value - 1e-9 {
            log::warn!("quantile coupling beaten by LP ({value} > {lp_value}); using LP value");
            return Ok(GapSolution {
                value: lp_value,
                coupling: lp_coupling,
                lp_fallback: true,
            });
        }
    }
    Ok(GapSolution {
        value,
        coupling,
        lp_fallback: false,
    })
}

/// Pairs drawn by shuffling per round; enough rounds to reach this many.
const INDEPENDENT_MIN_PAIRS: usize = 1 << 17;

/// `E[(A - B)^+]` under independent pairing, estimated by repeatedly
/// shuffling one side against the other.
pub fn independent_gap(a: &EmpiricalDist, b: &EmpiricalDist, rng: &RngStream) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return usage("independent_gap needs nonempty inputs");
    }
    let m = a.len().max(b.len());
    let ga = a.on_grid(m);
    let mut gb = b.on_grid(m);
    let rounds = INDEPENDENT_MIN_PAIRS.div_ceil(m).max(1);
    let mut r = rng.sequential();
    let mut stat = MeanStat::default();
    for _ in 0..rounds {
        gb.shuffle(&mut r);
        for (x, y) in ga.iter().zip(&gb) {
            stat.push((x - y).max(0.0));
        }
    }
    Ok(stat.mean())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emp(v: &[f64]) -> EmpiricalDist {
        EmpiricalDist::new(v.to_vec()).unwrap()
    }

    fn disc(atoms: &[f64], probs: &[f64]) -> DiscreteDist {
        DiscreteDist::new(atoms.to_vec(), probs.to_vec()).unwrap()
    }

    #[test]
    fn identical_marginals_give_zero() {
        let a = emp(&[0.3, 1.0, 2.5, 7.0]);
        assert_eq!(min_positive_gap(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn two_point_example() {
        // Couplings of {1,3} and {0,2}: comonotone (1+1)/2 = 1, anti (3+0)/2 = 1.5.
        let v = min_positive_gap(&emp(&[3.0, 1.0]), &emp(&[2.0, 0.0])).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn dominated_case_is_zero() {
        let v = min_positive_gap(&emp(&[0.0, 1.0, 2.0]), &emp(&[0.5, 1.0, 9.0])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn unequal_sizes_are_aligned() {
        // {1, 3} on a 4-point grid is {1, 1, 3, 3}.
        let v = min_positive_gap(&emp(&[1.0, 3.0]), &emp(&[0.0, 0.0, 2.0, 2.0])).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn empty_input_is_a_usage_error() {
        assert!(EmpiricalDist::new(vec![]).is_err());
    }

    #[test]
    fn lp_two_point_example() {
        let a = disc(&[1.0, 3.0], &[0.5, 0.5]);
        let b = disc(&[0.0, 2.0], &[0.5, 0.5]);
        let (v, m) = lp_oracle(&a, &b).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(m.is_coupling_of(&a, &b));
        assert!((m.weights[0][0] - 0.5).abs() < 1e-12);
        assert!((m.weights[1][1] - 0.5).abs() < 1e-12);
        let (cv, cm) = comonotone_coupling(&a, &b).unwrap();
        assert_eq!(cv, 1.0);
        assert_eq!(cm.weights, vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
    }

    #[test]
    fn lp_single_atoms() {
        let (v, _) = lp_oracle(&disc(&[5.0], &[1.0]), &disc(&[2.0], &[1.0])).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        let (v, _) = lp_oracle(&disc(&[0.0], &[1.0]), &disc(&[0.0, 4.0], &[0.3, 0.7])).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn lp_rejects_bad_marginals() {
        let bad = DiscreteDist {
            atoms: vec![1.0, 2.0],
            probs: vec![0.5, 0.6],
        };
        assert!(lp_oracle(&bad, &disc(&[0.0], &[1.0])).is_err());
        let big = DiscreteDist {
            atoms: (0..65).map(f64::from).collect(),
            probs: vec![1.0 / 65.0; 65],
        };
        assert!(lp_oracle(&big, &disc(&[0.0], &[1.0])).is_err());
    }

    #[test]
    fn independent_pairing_two_point() {
        // Four equally likely pairs: (1,0),(1,2),(3,0),(3,2) -> (1+0+3+1)/4.
        let v = independent_gap(&emp(&[1.0, 3.0]), &emp(&[0.0, 2.0]), &RngStream::new(1, 0)).unwrap();
        assert!((v - 1.25).abs() < 0.01, "{v}");
        let p = emp(&[2.0]);
        assert_eq!(independent_gap(&p, &p, &RngStream::new(1, 0)).unwrap(), 0.0);
        let v = independent_gap(&emp(&[0.0, 1.0]), &emp(&[1.0, 5.0]), &RngStream::new(1, 0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn discrete_solver_agrees_without_fallback() {
        let a = disc(&[0.0, 2.0, 5.0], &[0.2, 0.5, 0.3]);
        let b = disc(&[1.0, 4.0], &[0.6, 0.4]);
        let s = min_positive_gap_discrete(&a, &b).unwrap();
        assert!(!s.lp_fallback);
        assert!(s.coupling.is_coupling_of(&a, &b));
    }
}
