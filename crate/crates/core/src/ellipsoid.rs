//! Periodic Reeb orbits on the boundary of an irrational ellipsoid
//! `E(a_1, …, a_m) ⊂ ℂ^m`.
//!
//! The Reeb flow rotates the `l`-th coordinate with angular speed `2/a_l`,
//! so the simple orbits are the coordinate circles `γ_j` of period `π·a_j`.
//! The iterate `γ_j^n` has index `m − 1 + 2·Σ_k ⌊n·a_j/a_k⌋`, evaluated
//! here exactly. [`Ellipsoid::cross_check_index`] recomputes the same number
//! numerically from the linearized flow `⊕_l R(2t/a_l)` on `[0, nπa_j]`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cz::{cz_index, cz_rotation_exact, HalfInteger, RotationPath, Tolerances};
use crate::field::QuadIrrational;
use crate::weights::{RationalRatio, WeightError, WeightTuple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EllipsoidError {
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("orbit family {j} out of range 1..={m}")]
    FamilyOutOfRange { j: usize, m: usize },
    #[error("iterate count must be at least 1")]
    ZeroIterate,
}

#[derive(Debug, Clone)]
pub struct Ellipsoid {
    weights: WeightTuple,
}

/// The iterate `γ_j^n`, with period `n·π·a_j` kept symbolic as `n·a_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReebOrbit {
    pub j: usize,
    pub n: u64,
    pub cz: i64,
    /// `n·a_j`; the period is this times π.
    pub period_coeff: QuadIrrational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodnessReport {
    pub max_degree: i64,
    pub orbit_count: usize,
    pub all_good: bool,
    /// First iterate whose index parity differs from its simple orbit's.
    pub first_bad: Option<(usize, u64)>,
    pub lacunary: bool,
    /// First pair of consecutive integers among the indices.
    pub first_consecutive: Option<(i64, i64)>,
}

impl GoodnessReport {
    pub fn passed(&self) -> bool {
        self.all_good && self.lacunary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossCheckStatus {
    Agree,
    Disagree,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub j: usize,
    pub n: u64,
    pub formula: i64,
    pub numeric: Option<HalfInteger>,
    pub error: Option<String>,
    pub status: CrossCheckStatus,
}

impl Ellipsoid {
    pub fn new(weights: Vec<QuadIrrational>) -> Result<Self, EllipsoidError> {
        Ok(Ellipsoid {
            weights: WeightTuple::new(weights)?,
        })
    }

    pub fn from_tuple(weights: WeightTuple) -> Self {
        Ellipsoid { weights }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &WeightTuple {
        &self.weights
    }

    pub fn hypothesis_holds(&self) -> bool {
        self.weights.hypothesis_holds()
    }

    pub fn violation(&self) -> Option<&RationalRatio> {
        self.weights.violation()
    }

    fn check_orbit(&self, j: usize, n: u64) -> Result<(), EllipsoidError> {
        self.weights.require_hypothesis()?;
        let m = self.dim();
        if j == 0 || j > m {
            return Err(EllipsoidError::FamilyOutOfRange { j, m });
        }
        if n == 0 {
            return Err(EllipsoidError::ZeroIterate);
        }
        Ok(())
    }

    fn index_unchecked(&self, j: usize, n: u64) -> i64 {
        (self.dim() as i64 - 1) + 2 * self.weights.floor_sum(j - 1, n)
    }

    /// Conley-Zehnder index of `γ_j^n` (1-based `j`).
    pub fn orbit_index(&self, j: usize, n: u64) -> Result<i64, EllipsoidError> {
        self.check_orbit(j, n)?;
        Ok(self.index_unchecked(j, n))
    }

    pub fn orbit(&self, j: usize, n: u64) -> Result<ReebOrbit, EllipsoidError> {
        let cz = self.orbit_index(j, n)?;
        Ok(self.make_orbit(j, n, cz))
    }

    fn make_orbit(&self, j: usize, n: u64, cz: i64) -> ReebOrbit {
        let n_rat = BigRational::from_integer(BigInt::from(n));
        ReebOrbit {
            j,
            n,
            cz,
            period_coeff: self.weights.weights()[j - 1].scale(&n_rat),
        }
    }

    /// Every orbit with index `≤ max_degree`, sorted by `(cz, j, n)`.
    ///
    /// Per family the index grows by at least 2 per iterate (the `k = j`
    /// floor term alone adds 1), so each family stops at its first overshoot.
    pub fn spectrum(&self, max_degree: i64) -> Result<Vec<ReebOrbit>, EllipsoidError> {
        self.weights.require_hypothesis()?;
        let mut out = Vec::new();
        for j in 1..=self.dim() {
            for n in 1u64.. {
                let cz = self.index_unchecked(j, n);
                if cz > max_degree {
                    break;
                }
                out.push(self.make_orbit(j, n, cz));
            }
        }
        out.sort_by_key(|o| (o.cz, o.j, o.n));
        Ok(out)
    }

    /// Goodness of every iterate and lacunarity of the index set, up to
    /// `max_degree`.
    pub fn check_goodness_and_lacunarity(
        &self,
        max_degree: i64,
    ) -> Result<GoodnessReport, EllipsoidError> {
        let orbits = self.spectrum(max_degree)?;
        Ok(goodness_report(self, &orbits, max_degree))
    }

    /// The linearized Reeb flow along `γ_j^n`: rotation speeds `2/a_l`
    /// over the time `n·π·a_j`.
    pub fn rotation_path(&self, j: usize, n: u64) -> Result<RotationPath, EllipsoidError> {
        self.check_orbit(j, n)?;
        let two = self.weights.weights()[0].context().int(2);
        let freqs = self
            .weights
            .weights()
            .iter()
            .map(|a| two.try_div(a).map(|f| f.to_f64()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(WeightError::from)?;
        let duration = pi_times(&self.make_orbit(j, n, 0).period_coeff);
        Ok(RotationPath::new(freqs, duration).expect("positive weights give a valid path"))
    }

    /// The closed rotation formula evaluated on the exact rotation numbers
    /// `n·a_j/a_l` of the linearized flow.
    pub fn exact_rotation_index(&self, j: usize, n: u64) -> Result<HalfInteger, EllipsoidError> {
        self.check_orbit(j, n)?;
        let n_rat = BigRational::from_integer(BigInt::from(n));
        let turns: Vec<QuadIrrational> = (0..self.dim())
            .map(|l| self.weights.ratio(j - 1, l).scale(&n_rat))
            .collect();
        Ok(cz_rotation_exact(&turns))
    }

    /// Numeric crossing-form index of the linearized flow against the exact
    /// formula. Numeric-engine failures are inconclusive, not disagreements.
    pub fn cross_check_index(&self, j: usize, n: u64) -> Result<CrossCheck, EllipsoidError> {
        self.cross_check_index_with(j, n, Tolerances::default())
    }

    pub fn cross_check_index_with(
        &self,
        j: usize,
        n: u64,
        tol: Tolerances,
    ) -> Result<CrossCheck, EllipsoidError> {
        let formula = self.orbit_index(j, n)?;
        let path = self.rotation_path(j, n)?.to_path().with_tolerances(tol);
        Ok(match cz_index(&path) {
            Ok(idx) => CrossCheck {
                j,
                n,
                formula,
                numeric: Some(idx),
                error: None,
                status: if idx == HalfInteger::from_int(formula) {
                    CrossCheckStatus::Agree
                } else {
                    CrossCheckStatus::Disagree
                },
            },
            Err(e) => CrossCheck {
                j,
                n,
                formula,
                numeric: None,
                error: Some(e.to_string()),
                status: CrossCheckStatus::Inconclusive,
            },
        })
    }
}

pub(crate) fn goodness_report(
    e: &Ellipsoid,
    orbits: &[ReebOrbit],
    max_degree: i64,
) -> GoodnessReport {
    let m = e.dim();
    let simple: Vec<Option<i64>> = (1..=m)
        .map(|j| orbits.iter().find(|o| o.j == j && o.n == 1).map(|o| o.cz))
        .collect();
    let first_bad = orbits
        .iter()
        .filter(|o| o.n > 1)
        .find(|o| match simple[o.j - 1] {
            Some(base) => (o.cz - base).rem_euclid(2) != 0,
            None => false,
        })
        .map(|o| (o.j, o.n));
    let degrees: BTreeSet<i64> = orbits.iter().map(|o| o.cz).collect();
    let first_consecutive = degrees
        .iter()
        .find(|&&k| degrees.contains(&(k + 1)))
        .map(|&k| (k, k + 1));
    GoodnessReport {
        max_degree,
        orbit_count: orbits.len(),
        all_good: first_bad.is_none(),
        first_bad,
        lacunary: first_consecutive.is_none(),
        first_consecutive,
    }
}

const PI_50: &str = "314159265358979323846264338327950288419716939937510";

/// `π·x` to about 30 significant digits, rounded once to `f64`.
pub fn pi_times(x: &QuadIrrational) -> f64 {
    let digits = 40u32;
    let scale = BigInt::from(10).pow(digits);
    let pi = BigRational::new(
        PI_50[..(digits as usize + 1)]
            .parse::<BigInt>()
            .expect("digits"),
        scale.clone(),
    );
    let d = BigInt::from(x.radicand());
    let sqrt_d = BigRational::new((d * &scale * &scale).sqrt(), scale);
    let value = if x.q().is_zero() {
        x.p().clone()
    } else {
        x.p() + x.q() * sqrt_d
    };
    (pi * value).to_f64().unwrap_or(f64::NAN)
}
