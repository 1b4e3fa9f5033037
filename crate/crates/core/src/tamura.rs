//! Beatty and Tamura sequences in exact arithmetic, with partition checks.
//!
//! A family of non-decreasing integer sequences partitions `{1, …, N}` when
//! every value in that range is hit by exactly one family. Repeats inside a
//! single family (possible for naive Beatty sequences with `a < 1`) and
//! values below 1 are ignored; only the sets matter.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::field::{Multiples, QuadIrrational};
use crate::weights::{WeightError, WeightTuple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("alpha = {0} is rational")]
    RationalAlpha(QuadIrrational),
    #[error("alpha = {0} is not greater than 1")]
    AlphaNotAboveOne(QuadIrrational),
    #[error("the scanner needs at least 3 families, got {0}")]
    TooFewFamilies(usize),
    #[error("bound must be at least 1")]
    ZeroBound,
    #[error("family {j} out of range 1..={m}")]
    FamilyOutOfRange { j: usize, m: usize },
    #[error("iterate count must be at least 1")]
    ZeroIterate,
}

/// A non-decreasing integer sequence indexed by `n ≥ 1`.
pub trait Sequence {
    fn value(&self, n: u64) -> i64;

    /// Smallest `n` with `value(n) == v`, if any.
    fn position_of(&self, v: i64) -> Option<u64> {
        let mut hi = 1u64;
        while self.value(hi) < v {
            hi = hi.checked_mul(2)?;
        }
        let mut lo = 1u64;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.value(mid) < v {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (self.value(lo) == v).then_some(lo)
    }
}

/// `n ↦ ⌊n·α⌋`.
#[derive(Debug, Clone)]
pub struct Beatty(Multiples);

impl Beatty {
    pub fn new(alpha: &QuadIrrational) -> Self {
        Beatty(Multiples::new(alpha))
    }
}

impl Sequence for Beatty {
    fn value(&self, n: u64) -> i64 {
        self.0.floor_i64(n)
    }
}

/// `n ↦ Σ_k ⌊n·a_j/a_k⌋` for one fixed `j`.
#[derive(Debug, Clone, Copy)]
pub struct TamuraSequence<'a> {
    weights: &'a WeightTuple,
    j: usize,
}

impl Sequence for TamuraSequence<'_> {
    fn value(&self, n: u64) -> i64 {
        self.weights.floor_sum(self.j, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub j: usize,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Verdict {
    Partition,
    Collision {
        value: i64,
        first: Witness,
        second: Witness,
    },
    Gap {
        value: i64,
    },
}

impl Verdict {
    fn value(&self) -> Option<i64> {
        match self {
            Verdict::Partition => None,
            Verdict::Collision { value, .. } | Verdict::Gap { value } => Some(*value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionReport {
    pub bound: u64,
    pub verdict: Verdict,
    /// Number of distinct values in `[1, bound]` per family.
    pub counts: Vec<u64>,
}

impl PartitionReport {
    pub fn is_partition(&self) -> bool {
        self.verdict == Verdict::Partition
    }
}

/// How [`scan`] builds the owner check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanStrategy {
    /// Bit-set for bounds up to [`BITSET_LIMIT`], streaming merge beyond.
    Auto,
    BitSet,
    Streaming,
}

pub const BITSET_LIMIT: u64 = 100_000_000;

/// Checks whether the families partition `[1, bound]` and reports the
/// smallest violating value.
pub fn scan(families: &[&dyn Sequence], bound: u64, strategy: ScanStrategy) -> PartitionReport {
    let use_bits = match strategy {
        ScanStrategy::Auto => bound <= BITSET_LIMIT,
        ScanStrategy::BitSet => true,
        ScanStrategy::Streaming => false,
    };
    if use_bits {
        scan_bitset(families, bound)
    } else {
        scan_streaming(families, bound)
    }
}

fn to_bound(bound: u64) -> i64 {
    i64::try_from(bound).unwrap_or(i64::MAX)
}

fn collision_at(families: &[&dyn Sequence], v: i64) -> Verdict {
    let mut owners = families
        .iter()
        .enumerate()
        .filter_map(|(j, f)| f.position_of(v).map(|n| Witness { j: j + 1, n }));
    let first = owners.next().expect("collision value has an owner");
    let second = owners.next().expect("collision value has two owners");
    Verdict::Collision {
        value: v,
        first,
        second,
    }
}

fn scan_bitset(families: &[&dyn Sequence], bound: u64) -> PartitionReport {
    let limit = to_bound(bound);
    let mut bits = vec![0u64; (bound as usize) / 64 + 1];
    let mut counts = vec![0u64; families.len()];
    let mut min_collision: Option<i64> = None;
    for (j, fam) in families.iter().enumerate() {
        let mut last = None;
        for n in 1u64.. {
            let v = fam.value(n);
            if v > limit {
                break;
            }
            if v < 1 || last == Some(v) {
                continue;
            }
            last = Some(v);
            counts[j] += 1;
            let (w, b) = ((v / 64) as usize, v % 64);
            if bits[w] >> b & 1 == 1 {
                min_collision = Some(min_collision.map_or(v, |c| c.min(v)));
            } else {
                bits[w] |= 1 << b;
            }
        }
    }
    let first_gap = (1..=limit).find(|&v| bits[(v / 64) as usize] >> (v % 64) & 1 == 0);
    let verdict = match (min_collision, first_gap) {
        (None, None) => Verdict::Partition,
        (Some(c), Some(g)) if g < c => Verdict::Gap { value: g },
        (None, Some(g)) => Verdict::Gap { value: g },
        (Some(c), _) => collision_at(families, c),
    };
    PartitionReport {
        bound,
        verdict,
        counts,
    }
}

/// k-way merge of the sorted families; O(m) memory.
fn scan_streaming(families: &[&dyn Sequence], bound: u64) -> PartitionReport {
    let limit = to_bound(bound);
    let mut heap = BinaryHeap::new();
    for (j, fam) in families.iter().enumerate() {
        heap.push(Reverse((fam.value(1), j, 1u64)));
    }
    let mut counts = vec![0u64; families.len()];
    let mut verdict: Option<Verdict> = None;
    let mut expected = 1i64;
    let mut prev: Option<(i64, usize, u64)> = None;
    let mut last: Vec<Option<i64>> = vec![None; families.len()];
    while let Some(Reverse((v, j, n))) = heap.pop() {
        if v > limit {
            continue;
        }
        heap.push(Reverse((families[j].value(n + 1), j, n + 1)));
        if v < 1 || last[j] == Some(v) {
            continue;
        }
        last[j] = Some(v);
        counts[j] += 1;
        if let Some((pv, pj, pn)) = prev {
            if pv == v {
                verdict.get_or_insert(Verdict::Collision {
                    value: v,
                    first: Witness { j: pj + 1, n: pn },
                    second: Witness { j: j + 1, n },
                });
                continue;
            }
        }
        if v > expected {
            verdict.get_or_insert(Verdict::Gap { value: expected });
        }
        expected = v + 1;
        prev = Some((v, j, n));
    }
    if expected <= limit {
        verdict.get_or_insert(Verdict::Gap { value: expected });
    }
    PartitionReport {
        bound,
        verdict: verdict.unwrap_or(Verdict::Partition),
        counts,
    }
}

/// The Tamura sets `A_j = { Σ_k ⌊n·a_j/a_k⌋ : n ≥ 1 }` of a weight tuple.
#[derive(Debug, Clone)]
pub struct TamuraFamily {
    weights: WeightTuple,
}

impl TamuraFamily {
    /// Requires pairwise-irrational ratios; a single weight gives `A_1 = ℕ`.
    pub fn new(weights: Vec<QuadIrrational>) -> Result<Self, PartitionError> {
        Self::from_tuple(WeightTuple::new(weights)?)
    }

    pub fn from_tuple(weights: WeightTuple) -> Result<Self, PartitionError> {
        weights.require_hypothesis()?;
        Ok(TamuraFamily { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &WeightTuple {
        &self.weights
    }

    pub fn sequence(&self, j: usize) -> TamuraSequence<'_> {
        TamuraSequence {
            weights: &self.weights,
            j: j - 1,
        }
    }

    /// The `n`-th element of `A_j` (1-based `j`).
    pub fn element(&self, j: usize, n: u64) -> Result<i64, PartitionError> {
        let m = self.len();
        if j == 0 || j > m {
            return Err(PartitionError::FamilyOutOfRange { j, m });
        }
        if n == 0 {
            return Err(PartitionError::ZeroIterate);
        }
        Ok(self.weights.floor_sum(j - 1, n))
    }

    pub fn verify_partition(&self, bound: u64) -> Result<PartitionReport, PartitionError> {
        self.verify_partition_with(bound, ScanStrategy::Auto)
    }

    pub fn verify_partition_with(
        &self,
        bound: u64,
        strategy: ScanStrategy,
    ) -> Result<PartitionReport, PartitionError> {
        if bound == 0 {
            return Err(PartitionError::ZeroBound);
        }
        let seqs: Vec<TamuraSequence<'_>> = (1..=self.len()).map(|j| self.sequence(j)).collect();
        let refs: Vec<&dyn Sequence> = seqs.iter().map(|s| s as &dyn Sequence).collect();
        Ok(scan(&refs, bound, strategy))
    }

    /// `A_j ∩ [1, bound]` for every `j`.
    pub fn sets_up_to(&self, bound: u64) -> Vec<Vec<i64>> {
        (1..=self.len())
            .map(|j| take_up_to(&self.sequence(j), bound))
            .collect()
    }
}

fn take_up_to(seq: &dyn Sequence, bound: u64) -> Vec<i64> {
    let limit = to_bound(bound);
    let mut out: Vec<i64> = Vec::new();
    for n in 1u64.. {
        let v = seq.value(n);
        if v > limit {
            break;
        }
        if v >= 1 && out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

pub fn tamura_element(
    weights: Vec<QuadIrrational>,
    j: usize,
    n: u64,
) -> Result<i64, PartitionError> {
    TamuraFamily::new(weights)?.element(j, n)
}

pub fn verify_partition(
    weights: Vec<QuadIrrational>,
    bound: u64,
) -> Result<PartitionReport, PartitionError> {
    TamuraFamily::new(weights)?.verify_partition(bound)
}

fn check_alpha(alpha: &QuadIrrational) -> Result<(), PartitionError> {
    if alpha.is_rational() {
        return Err(PartitionError::RationalAlpha(alpha.clone()));
    }
    if alpha.try_cmp(&alpha.context().one()) != Ok(Ordering::Greater) {
        return Err(PartitionError::AlphaNotAboveOne(alpha.clone()));
    }
    Ok(())
}

/// `{⌊nα⌋ ≤ bound}` for irrational `α > 1`.
pub fn beatty_set(alpha: &QuadIrrational, bound: u64) -> Result<Vec<i64>, PartitionError> {
    check_alpha(alpha)?;
    Ok(take_up_to(&Beatty::new(alpha), bound))
}

/// `β = α/(α − 1)`, the exponent with `1/α + 1/β = 1`.
pub fn rayleigh_conjugate(alpha: &QuadIrrational) -> Result<QuadIrrational, PartitionError> {
    check_alpha(alpha)?;
    let shifted = alpha.try_sub(&alpha.context().one()).expect("same field");
    Ok(alpha.try_div(&shifted).expect("alpha > 1"))
}

/// Checks that the Beatty sets of `α` and its conjugate partition `[1, bound]`.
pub fn rayleigh_pair(
    alpha: &QuadIrrational,
    bound: u64,
) -> Result<PartitionReport, PartitionError> {
    let beta = rayleigh_conjugate(alpha)?;
    if bound == 0 {
        return Err(PartitionError::ZeroBound);
    }
    let (a, b) = (Beatty::new(alpha), Beatty::new(&beta));
    Ok(scan(&[&a, &b], bound, ScanStrategy::Auto))
}

/// Scans the naive family `{⌊n·a_i⌋}` for a collision or gap below `bound`.
///
/// A partition verdict here only means "no witness ≤ bound".
pub fn uspensky_scan(
    weights: Vec<QuadIrrational>,
    bound: u64,
) -> Result<PartitionReport, PartitionError> {
    let tuple = WeightTuple::new(weights)?;
    if tuple.len() < 3 {
        return Err(PartitionError::TooFewFamilies(tuple.len()));
    }
    if bound == 0 {
        return Err(PartitionError::ZeroBound);
    }
    let seqs: Vec<Beatty> = tuple.weights().iter().map(Beatty::new).collect();
    let refs: Vec<&dyn Sequence> = seqs.iter().map(|s| s as &dyn Sequence).collect();
    Ok(scan(&refs, bound, ScanStrategy::Auto))
}

/// Smallest violating value of a report, if any.
pub fn first_violation(report: &PartitionReport) -> Option<i64> {
    report.verdict.value()
}
