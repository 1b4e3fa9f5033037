//! Validated weight tuples `(a_1, …, a_m)` and their exact ratio table.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldError, Multiples, QuadIrrational};

/// A pair `j ≠ k` (1-based) whose ratio `a_j/a_k` is rational.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RationalRatio {
    pub j: usize,
    pub k: usize,
    pub ratio: QuadIrrational,
}

impl fmt::Display for RationalRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a_{}/a_{} = {} is rational", self.j, self.k, self.ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("at least one weight is required")]
    Empty,
    #[error("weights from different fields: {0}")]
    MixedFields(#[from] FieldError),
    #[error("weight a_{index} = {weight} is not positive")]
    NonPositive {
        index: usize,
        weight: QuadIrrational,
    },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(RationalRatio),
}

#[derive(Debug, Clone)]
pub struct WeightTuple {
    weights: Vec<QuadIrrational>,
    ratios: Vec<Vec<QuadIrrational>>,
    multiples: Vec<Vec<Multiples>>,
    violation: Option<RationalRatio>,
}

impl WeightTuple {
    /// Checks positivity and the shared radicand, and records (without
    /// rejecting) the first pair with a rational ratio, oriented so the
    /// ratio is at least 1.
    pub fn new(weights: Vec<QuadIrrational>) -> Result<Self, WeightError> {
        let first = weights.first().ok_or(WeightError::Empty)?;
        for (i, w) in weights.iter().enumerate() {
            if w.radicand() != first.radicand() {
                return Err(FieldError::RadicandMismatch {
                    expected: first.radicand(),
                    found: w.radicand().into(),
                }
                .into());
            }
            if w.signum() != Ordering::Greater {
                return Err(WeightError::NonPositive {
                    index: i + 1,
                    weight: w.clone(),
                });
            }
        }
        let ratios: Vec<Vec<QuadIrrational>> = weights
            .iter()
            .map(|aj| {
                weights
                    .iter()
                    .map(|ak| aj.try_div(ak))
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        let multiples = ratios
            .iter()
            .map(|row| row.iter().map(Multiples::new).collect())
            .collect();
        let m = weights.len();
        let one = first.context().one();
        let violation = (0..m)
            .flat_map(|j| (0..j).map(move |k| (j, k)))
            .find(|&(j, k)| ratios[j][k].is_rational())
            .map(|(j, k)| {
                let (j, k) = if ratios[j][k] >= one { (j, k) } else { (k, j) };
                RationalRatio {
                    j: j + 1,
                    k: k + 1,
                    ratio: ratios[j][k].clone(),
                }
            });
        Ok(WeightTuple {
            weights,
            ratios,
            multiples,
            violation,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[QuadIrrational] {
        &self.weights
    }

    pub fn radicand(&self) -> u64 {
        self.weights[0].radicand()
    }

    /// `a_j / a_k`, 0-based.
    pub fn ratio(&self, j: usize, k: usize) -> &QuadIrrational {
        &self.ratios[j][k]
    }

    /// True iff every ratio `a_j/a_k` with `j ≠ k` is irrational.
    pub fn hypothesis_holds(&self) -> bool {
        self.violation.is_none()
    }

    pub fn violation(&self) -> Option<&RationalRatio> {
        self.violation.as_ref()
    }

    pub fn require_hypothesis(&self) -> Result<(), WeightError> {
        match &self.violation {
            Some(v) => Err(WeightError::HypothesisViolated(v.clone())),
            None => Ok(()),
        }
    }

    /// `Σ_k ⌊n·a_j/a_k⌋` for 0-based `j`, exact.
    pub fn floor_sum(&self, j: usize, n: u64) -> i64 {
        self.multiples[j]
            .iter()
            .enumerate()
            .map(|(k, mult)| if k == j { n as i64 } else { mult.floor_i64(n) })
            .fold(0i64, i64::saturating_add)
    }

    /// The same tuple with every weight multiplied by `c`.
    pub fn scaled(&self, c: &QuadIrrational) -> Result<Self, WeightError> {
        let ws = self
            .weights
            .iter()
            .map(|w| w.try_mul(c))
            .collect::<Result<Vec<_>, _>>()?;
        WeightTuple::new(ws)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldContext;

    #[test]
    fn hypothesis_detection() {
        let k = FieldContext::new(2).unwrap();
        let ok =
            WeightTuple::new(vec![k.one(), k.sqrt_d(), k.parse("1+sqrt(2)").unwrap()]).unwrap();
        assert!(ok.hypothesis_holds());
        let bad = WeightTuple::new(vec![k.one(), k.int(2)]).unwrap();
        let v = bad.violation().unwrap();
        assert_eq!((v.j, v.k), (2, 1));
        assert_eq!(v.ratio, k.int(2));
        let v = WeightTuple::new(vec![k.int(3), k.sqrt_d(), k.one()]).unwrap();
        assert_eq!(v.violation().unwrap().ratio, k.int(3));
        assert!(matches!(
            bad.require_hypothesis(),
            Err(WeightError::HypothesisViolated(_))
        ));
        // a single weight has no pair to violate
        assert!(WeightTuple::new(vec![k.int(3)]).unwrap().hypothesis_holds());
    }

    #[test]
    fn invalid_tuples() {
        let k = FieldContext::new(2).unwrap();
        assert_eq!(WeightTuple::new(vec![]).unwrap_err(), WeightError::Empty);
        assert!(matches!(
            WeightTuple::new(vec![k.one(), k.parse("1-sqrt(2)").unwrap()]),
            Err(WeightError::NonPositive { index: 2, .. })
        ));
        let k5 = FieldContext::new(5).unwrap();
        assert!(matches!(
            WeightTuple::new(vec![k.one(), k5.sqrt_d()]),
            Err(WeightError::MixedFields(_))
        ));
    }

    #[test]
    fn floor_sums() {
        let k = FieldContext::new(2).unwrap();
        let w = WeightTuple::new(vec![k.one(), k.sqrt_d()]).unwrap();
        assert_eq!(w.floor_sum(0, 3), 5);
        assert_eq!(w.floor_sum(1, 2), 4);
    }
}
