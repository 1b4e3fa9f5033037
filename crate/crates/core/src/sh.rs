//! Degree-wise dimensions of positive S¹-equivariant symplectic homology of
//! an ellipsoid, computed two ways.
//!
//! The closed formula puts a one-dimensional group in every degree
//! `m + 2j − 1`, `j ≥ 1`. The orbit count puts one generator in the degree
//! of each good Reeb orbit, which is legitimate once goodness and
//! lacunarity hold. The two vectors agree on `[0, m − 1 + 2N]` exactly when
//! the Tamura sets partition `{1, …, N}`.

use serde::Serialize;
use thiserror::Error;

use crate::ellipsoid::{goodness_report, Ellipsoid, EllipsoidError, GoodnessReport, ReebOrbit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShError {
    #[error(transparent)]
    Ellipsoid(#[from] EllipsoidError),
    #[error("orbit-counting hypotheses fail on the window: {0:?}")]
    CountingHypotheses(GoodnessReport),
}

/// Multiplicities on the closed degree window `[0, k_max]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeVector {
    pub k_max: i64,
    multiplicity: Vec<u32>,
}

impl DegreeVector {
    pub fn zeros(k_max: i64) -> Self {
        DegreeVector {
            k_max,
            multiplicity: vec![0; (k_max.max(-1) + 1) as usize],
        }
    }

    pub fn k_min(&self) -> i64 {
        0
    }

    /// `None` outside the window.
    pub fn get(&self, k: i64) -> Option<u32> {
        usize::try_from(k)
            .ok()
            .and_then(|i| self.multiplicity.get(i).copied())
    }

    fn bump(&mut self, k: i64) {
        if let Some(slot) = usize::try_from(k)
            .ok()
            .and_then(|i| self.multiplicity.get_mut(i))
        {
            *slot += 1;
        }
    }

    /// Degrees with nonzero multiplicity, ascending.
    pub fn support(&self) -> Vec<i64> {
        self.multiplicity
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(k, _)| k as i64)
            .collect()
    }

    pub fn max_multiplicity(&self) -> u32 {
        self.multiplicity.iter().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.multiplicity
            .iter()
            .enumerate()
            .map(|(k, &m)| (k as i64, m))
    }
}

/// One in degrees `m + 2j − 1` (`j ≥ 1`), zero elsewhere.
pub fn sh_dims_formula(m: usize, k_max: i64) -> DegreeVector {
    let mut v = DegreeVector::zeros(k_max);
    let mut k = m as i64 + 1;
    while k <= k_max {
        v.bump(k);
        k += 2;
    }
    v
}

/// One generator per orbit, in the orbit's index degree.
pub fn sh_dims_from_orbits(orbits: &[ReebOrbit], k_max: i64) -> DegreeVector {
    let mut v = DegreeVector::zeros(k_max);
    for o in orbits {
        v.bump(o.cz);
    }
    v
}

/// Counts good orbits by degree after confirming goodness and lacunarity.
pub fn sh_dims_gutt(e: &Ellipsoid, k_max: i64) -> Result<DegreeVector, ShError> {
    let orbits = e.spectrum(k_max)?;
    let report = goodness_report(e, &orbits, k_max);
    if !report.passed() {
        return Err(ShError::CountingHypotheses(report));
    }
    Ok(sh_dims_from_orbits(&orbits, k_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Difference {
    pub degree: i64,
    pub gutt: u32,
    pub formula: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub k_max: i64,
    pub gutt: DegreeVector,
    pub formula: DegreeVector,
    pub first_difference: Option<Difference>,
}

impl Comparison {
    pub fn equal(&self) -> bool {
        self.first_difference.is_none()
    }
}

pub fn compare_vectors(gutt: DegreeVector, formula: DegreeVector) -> Comparison {
    assert_eq!(gutt.k_max, formula.k_max, "windows must agree");
    let first_difference = gutt
        .iter()
        .zip(formula.iter())
        .find(|((_, a), (_, b))| a != b)
        .map(|((degree, g), (_, f))| Difference {
            degree,
            gutt: g,
            formula: f,
        });
    Comparison {
        k_max: gutt.k_max,
        gutt,
        formula,
        first_difference,
    }
}

pub fn compare(e: &Ellipsoid, k_max: i64) -> Result<Comparison, ShError> {
    let gutt = sh_dims_gutt(e, k_max)?;
    Ok(compare_vectors(gutt, sh_dims_formula(e.dim(), k_max)))
}
