use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

/// Competence ranges of simulated experts, 0-based half-open `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertRangeSpec {
    pub ranges: Vec<(usize, usize)>,
}

impl ExpertRangeSpec {
    /// Consecutive ranges covering `0..n` in the given proportions, e.g.
    /// `[0.3, 0.3, 0.4]`. Boundaries are rounded to the nearest class.
    pub fn fractions(n: usize, shares: &[f64]) -> Result<Self> {
        let total: f64 = shares.iter().sum();
        if shares.iter().any(|s| !(*s > 0.0)) || !total.is_finite() {
            return Err(Error::InvalidConfig("shares must be positive".into()));
        }
        let mut acc = 0.0;
        let mut lo = 0;
        let mut ranges = Vec::with_capacity(shares.len());
        for s in shares {
            acc += s;
            let hi = ((acc / total) * n as f64).round() as usize;
            ranges.push((lo, hi.min(n)));
            lo = hi.min(n);
        }
        let spec = Self { ranges };
        spec.validate(n)?;
        Ok(spec)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.ranges.is_empty() {
            return Err(Error::InvalidConfig("no experts".into()));
        }
        for (j, &(lo, hi)) in self.ranges.iter().enumerate() {
            if lo >= hi || hi > n {
                return Err(Error::InvalidConfig(format!("expert {j} has empty or out-of-range classes {lo}..{hi}")));
            }
        }
        Ok(())
    }
}

/// Experts that answer correctly inside their class range and otherwise
/// guess uniformly within it.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassRangeExperts {
    n: usize,
    spec: ExpertRangeSpec,
    seed: u64,
}

pub fn gen_class_range_experts(n: usize, spec: ExpertRangeSpec, seed: u64) -> Result<ClassRangeExperts> {
    spec.validate(n)?;
    Ok(ClassRangeExperts { n, spec, seed })
}

impl ClassRangeExperts {
    pub fn n_e(&self) -> usize {
        self.spec.ranges.len()
    }

    /// Prediction of expert `j` for true label `y` on row `row`. The guess
    /// outside the range depends only on `(seed, row, j)`.
    pub fn predict(&self, j: usize, y: usize, row: u64) -> usize {
        let (lo, hi) = self.spec.ranges[j];
        if (lo..hi).contains(&y) {
            y
        } else {
            stream(derive_seed(self.seed, "experts/row", row), "experts/guess", j as u64).gen_range(lo..hi)
        }
    }

    /// Realized costs `1{prediction ≠ y}` of every expert.
    pub fn costs(&self, y: usize, row: u64) -> Result<Vec<f64>> {
        if y >= self.n {
            return Err(Error::LabelOutOfRange { label: y, n: self.n });
        }
        Ok((0..self.n_e()).map(|j| f64::from(u8::from(self.predict(j, y, row) != y))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_range_is_free_out_of_range_costs_one() {
        let spec = ExpertRangeSpec { ranges: vec![(0, 3), (3, 10)] };
        let e = gen_class_range_experts(10, spec, 1).unwrap();
        assert_eq!(e.costs(2, 0).unwrap(), vec![0.0, 1.0]);
        assert_eq!(e.costs(7, 5).unwrap(), vec![1.0, 0.0]);
        let guess = e.predict(0, 7, 5);
        assert!(guess < 3);
        assert_eq!(guess, e.predict(0, 7, 5));
    }

    #[test]
    fn three_expert_partition() {
        let spec = ExpertRangeSpec::fractions(10, &[0.3, 0.3, 0.4]).unwrap();
        assert_eq!(spec.ranges, vec![(0, 3), (3, 6), (6, 10)]);
        let e = gen_class_range_experts(10, spec, 9).unwrap();
        for y in 0..10 {
            let zeros = e.costs(y, y as u64).unwrap().iter().filter(|c| **c == 0.0).count();
            assert_eq!(zeros, 1, "label {y}");
        }
    }

    #[test]
    fn empty_range_is_rejected() {
        let spec = ExpertRangeSpec { ranges: vec![(2, 2)] };
        assert!(gen_class_range_experts(4, spec, 0).is_err());
        assert!(gen_class_range_experts(4, ExpertRangeSpec { ranges: vec![(0, 5)] }, 0).is_err());
    }
}
