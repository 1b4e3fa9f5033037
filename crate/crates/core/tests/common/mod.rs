//! Test-only oracles that share no code with the library's floor and
//! comparison routines.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use tamura_sh::field::{FieldContext, QuadIrrational};

const BITS: usize = 256;

/// `[⌊√d·2^256⌋, ⌊√d·2^256⌋ + 1]`.
fn sqrt_bracket(d: u64) -> (BigInt, BigInt) {
    let lo = (BigInt::from(d) << (2 * BITS)).sqrt();
    let hi = &lo + 1;
    (lo, hi)
}

/// Integer interval containing `(p + q√d)·2^256`.
fn scaled_interval(p: &BigRational, q: &BigRational, d: u64) -> (BigInt, BigInt) {
    let one = BigInt::one() << BITS;
    let pn = p.numer() * &one;
    let (p_lo, p_hi) = (pn.div_floor(p.denom()), pn.div_ceil(p.denom()));
    let (s_lo, s_hi) = sqrt_bracket(d);
    let (lo_root, hi_root) = if q.is_negative() {
        (s_hi, s_lo)
    } else {
        (s_lo, s_hi)
    };
    let q_lo = (q.numer() * lo_root).div_floor(q.denom());
    let q_hi = (q.numer() * hi_root).div_ceil(q.denom());
    (p_lo + q_lo, p_hi + q_hi)
}

/// `⌊p + q√d⌋`, or `None` when the interval straddles an integer.
pub fn interval_floor_parts(p: &BigRational, q: &BigRational, d: u64) -> Option<BigInt> {
    let (lo, hi) = scaled_interval(p, q, d);
    let (f_lo, f_hi) = (lo >> BITS, hi >> BITS);
    (f_lo == f_hi).then_some(f_lo)
}

pub fn interval_floor(n: u64, x: &QuadIrrational) -> Option<BigInt> {
    let n = BigRational::from_integer(n.into());
    interval_floor_parts(&(x.p() * &n), &(x.q() * &n), x.radicand())
}

/// Sign of `x − y` from the interval, exact when the components coincide.
pub fn interval_cmp(x: &QuadIrrational, y: &QuadIrrational) -> Option<Ordering> {
    assert_eq!(x.radicand(), y.radicand());
    let p = x.p() - y.p();
    let q = x.q() - y.q();
    if p.is_zero() && q.is_zero() {
        return Some(Ordering::Equal);
    }
    let (lo, hi) = scaled_interval(&p, &q, x.radicand());
    if lo.is_positive() {
        Some(Ordering::Greater)
    } else if hi.is_negative() {
        Some(Ordering::Less)
    } else {
        None
    }
}

pub fn random_element<R: Rng>(rng: &mut R, d: u64, max_num: i64, max_den: i64) -> QuadIrrational {
    let ctx = FieldContext::new(d).unwrap();
    ctx.from_parts(
        (
            rng.gen_range(-max_num..=max_num),
            rng.gen_range(1..=max_den),
        ),
        (
            rng.gen_range(-max_num..=max_num),
            rng.gen_range(1..=max_den),
        ),
    )
}

pub fn random_positive<R: Rng>(rng: &mut R, d: u64, max_num: i64, max_den: i64) -> QuadIrrational {
    loop {
        let x = random_element(rng, d, max_num, max_den);
        if x.to_f64() > 0.05 && x.is_positive() {
            return x;
        }
    }
}

/// `a_j/a_k` rational iff `a_j·conj(a_k)` has no `√d` part.
fn proportional(a: &QuadIrrational, b: &QuadIrrational) -> bool {
    let (p1, q1, p2, q2) = (a.p(), a.q(), b.p(), b.q());
    (p1 * q2 - q1 * p2).is_zero()
}

/// `m` positive weights in ℚ(√d) with pairwise irrational ratios.
pub fn random_tuple<R: Rng>(rng: &mut R, d: u64, m: usize) -> Vec<QuadIrrational> {
    loop {
        let ws: Vec<QuadIrrational> = (0..m).map(|_| random_positive(rng, d, 9, 4)).collect();
        let ok = (0..m).all(|j| (0..j).all(|k| !proportional(&ws[j], &ws[k])));
        if ok {
            return ws;
        }
    }
}

/// Brute-force owner count over `[1, n]` from explicit sets.
pub fn brute_partition(sets: &[Vec<i64>], n: i64) -> bool {
    let mut owners: HashMap<i64, usize> = HashMap::new();
    for s in sets {
        for &v in s {
            *owners.entry(v).or_default() += 1;
        }
    }
    (1..=n).all(|v| owners.get(&v) == Some(&1))
}

/// `{Σ_k ⌊n·a_j/a_k⌋ ≤ bound}` from the interval oracle alone.
pub fn oracle_tamura_set(weights: &[QuadIrrational], j: usize, bound: i64) -> Vec<i64> {
    let ratios: Vec<(BigRational, BigRational, u64)> = weights
        .iter()
        .map(|ak| {
            let aj = &weights[j];
            // aj/ak = aj·conj(ak)/N(ak)
            let d = BigRational::from_integer(ak.radicand().into());
            let norm = ak.p() * ak.p() - ak.q() * ak.q() * &d;
            let p = (aj.p() * ak.p() - aj.q() * ak.q() * &d) / &norm;
            let q = (aj.q() * ak.p() - aj.p() * ak.q()) / &norm;
            (p, q, ak.radicand())
        })
        .collect();
    let mut out = Vec::new();
    for n in 1i64.. {
        let nr = BigRational::from_integer(n.into());
        let v: BigInt = ratios
            .iter()
            .map(|(p, q, d)| {
                interval_floor_parts(&(p * &nr), &(q * &nr), *d).expect("irrational ratio resolves")
            })
            .sum();
        let v: i64 = v.try_into().unwrap();
        if v > bound {
            break;
        }
        out.push(v);
    }
    out
}

/// Closed rotation index computed directly from the turn counts.
pub fn rotation_oracle(freqs: &[f64], duration: f64) -> i64 {
    freqs
        .iter()
        .map(|a| {
            let turns = a * duration / TAU;
            1 + 2 * turns.floor() as i64
        })
        .sum()
}

/// `(α, T)` with `α·T` at least `margin` from an integer.
pub fn random_rotation<R: Rng>(rng: &mut R, margin: f64) -> (f64, f64) {
    loop {
        let alpha: f64 = rng.gen_range(0.1..10.0);
        let t: f64 = rng.gen_range(0.1..10.0);
        let x = alpha * t;
        if (x - x.round()).abs() > margin {
            return (alpha, t);
        }
    }
}
