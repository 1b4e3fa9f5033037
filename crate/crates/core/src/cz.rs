//! Conley-Zehnder indices of paths in Sp(2n) from crossing-form signatures.
//!
//! Coordinates are ordered `(x_1, y_1, …, x_n, y_n)`, so the skew form is
//! `J = ⊕ [[0, 1], [-1, 0]]` and direct sums of paths are plain
//! block-diagonal matrices.
//!
//! Crossings are located as zeros of `σ_min(Ψ_t − id)`. The determinant
//! `det(Ψ_t − id)` is useless here: for a rotation block it equals
//! `2 − 2cos(αt) ≥ 0` and touches zero without changing sign.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{Signed, ToPrimitive};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::field::QuadIrrational;

pub type Matrix = DMatrix<f64>;

type MatrixFn = Arc<dyn Fn(f64) -> Matrix + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CzError {
    #[error("invalid domain [{start}, {end}]")]
    InvalidDomain { start: f64, end: f64 },
    #[error("matrix dimension {0} is not a positive even number")]
    OddDimension(usize),
    #[error("path matrices have dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix at t={t} is not symplectic (defect {defect:e})")]
    NotSymplectic { t: f64, defect: f64 },
    #[error("domain mismatch: [{a0}, {b0}] vs [{a1}, {b1}]")]
    DomainMismatch { a0: f64, b0: f64, a1: f64, b1: f64 },
    #[error(
        "crossing too flat near t={t}: sigma_min={sigma:e} is neither zero nor clearly positive"
    )]
    CrossingTooFlat { t: f64, sigma: f64 },
    #[error("non-isolated crossings at t={t1} and t={t2}")]
    NonIsolatedCrossings { t1: f64, t2: f64 },
    #[error("degenerate crossing at t={t}: crossing-form eigenvalue {eigenvalue:e}")]
    DegenerateCrossing { t: f64, eigenvalue: f64 },
    #[error("t={t} is not a crossing (sigma_min={sigma:e})")]
    NotACrossing { t: f64, sigma: f64 },
    #[error("invalid rotation path: {0}")]
    InvalidRotation(String),
}

/// Numerical thresholds used by the crossing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound on `‖ΨᵀJΨ − J‖_∞` for every sampled matrix.
    pub symplectic: f64,
    /// Singular values at or below this span the kernel of `Ψ_t − id`.
    pub kernel: f64,
    /// Minima of `σ_min` in `[kernel, accept)` are ambiguous and rejected.
    pub accept: f64,
    /// Crossing-form eigenvalues with `|λ| < eigen` make a crossing degenerate.
    pub eigen: f64,
    /// Minimum separation of distinct crossings, relative to `b − a`.
    pub isolation: f64,
    /// Target bracket width of the minimum search, relative to `b − a`.
    pub refine: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symplectic: 1e-9,
            kernel: 1e-7,
            accept: 1e-3,
            eigen: 1e-6,
            isolation: 1e-7,
            refine: 1e-12,
        }
    }
}

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInteger(i64);

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger(0);

    pub fn from_twice(twice: i64) -> Self {
        HalfInteger(twice)
    }

    pub fn from_int(value: i64) -> Self {
        HalfInteger(2 * value)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.0 / 2)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl Add for HalfInteger {
    type Output = HalfInteger;
    fn add(self, rhs: HalfInteger) -> HalfInteger {
        HalfInteger(self.0 + rhs.0)
    }
}

impl std::iter::Sum for HalfInteger {
    fn sum<I: Iterator<Item = HalfInteger>>(iter: I) -> Self {
        iter.fold(HalfInteger::ZERO, Add::add)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_integer() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}/2", self.0),
        }
    }
}

/// Integers serialize as JSON numbers, proper halves as `"k/2"` strings.
impl Serialize for HalfInteger {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.to_integer() {
            Some(v) => s.serialize_i64(v),
            None => s.collect_str(self),
        }
    }
}

/// `J = ⊕_n [[0, 1], [-1, 0]]` on ℝ^{2n}.
pub fn standard_form(half_dim: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * half_dim, 2 * half_dim);
    for l in 0..half_dim {
        j[(2 * l, 2 * l + 1)] = 1.0;
        j[(2 * l + 1, 2 * l)] = -1.0;
    }
    j
}

/// `‖ΨᵀJΨ − J‖_∞` (maximum absolute row sum).
pub fn symplectic_defect(m: &Matrix) -> f64 {
    let j = standard_form(m.nrows() / 2);
    let r = m.transpose() * &j * m - j;
    r.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// A square matrix that preserves `J` up to a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(Matrix);

impl SymplecticMatrix {
    pub fn new(m: Matrix, tol: f64) -> Result<Self, CzError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 || m.nrows() % 2 != 0 {
            return Err(CzError::OddDimension(m.nrows()));
        }
        let defect = symplectic_defect(&m);
        if !(defect <= tol) {
            return Err(CzError::NotSymplectic {
                t: f64::NAN,
                defect,
            });
        }
        Ok(SymplecticMatrix(m))
    }

    pub fn half_dim(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    /// `Ψ⁻¹ = −JΨᵀJ`.
    pub fn inverse(&self) -> Matrix {
        symplectic_inverse(&self.0)
    }
}

fn symplectic_inverse(m: &Matrix) -> Matrix {
    let j = standard_form(m.nrows() / 2);
    -(&j * m.transpose() * &j)
}

/// A smooth path `t ↦ Ψ_t` in Sp(2n) on `[start, end]`.
#[derive(Clone)]
pub struct SymplecticPath {
    start: f64,
    end: f64,
    dim: usize,
    eval: MatrixFn,
    deriv: Option<MatrixFn>,
    sample_count: usize,
    tol: Tolerances,
}

impl fmt::Debug for SymplecticPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymplecticPath")
            .field("start", &self.start)
            .field("end", &self.end)
            .field("dim", &self.dim)
            .field("analytic_derivative", &self.deriv.is_some())
            .field("sample_count", &self.sample_count)
            .finish()
    }
}

pub const DEFAULT_SAMPLE_COUNT: usize = 4096;

impl SymplecticPath {
    pub fn new<F>(start: f64, end: f64, dim: usize, eval: F) -> Result<Self, CzError>
    where
        F: Fn(f64) -> Matrix + Send + Sync + 'static,
    {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(CzError::InvalidDomain { start, end });
        }
        if dim == 0 || dim % 2 != 0 {
            return Err(CzError::OddDimension(dim));
        }
        Ok(SymplecticPath {
            start,
            end,
            dim,
            eval: Arc::new(eval),
            deriv: None,
            sample_count: DEFAULT_SAMPLE_COUNT,
            tol: Tolerances::default(),
        })
    }

    pub fn constant(m: SymplecticMatrix, start: f64, end: f64) -> Result<Self, CzError> {
        let dim = m.0.nrows();
        let m = m.into_inner();
        let zero = Matrix::zeros(dim, dim);
        Ok(SymplecticPath::new(start, end, dim, move |_| m.clone())?
            .with_derivative(move |_| zero.clone()))
    }

    pub fn with_derivative<F>(mut self, deriv: F) -> Self
    where
        F: Fn(f64) -> Matrix + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_sample_count(mut self, sample_count: usize) -> Self {
        self.sample_count = sample_count.max(2);
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    fn raw(&self, t: f64) -> Result<Matrix, CzError> {
        let m = (self.eval)(t);
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(CzError::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        Ok(m)
    }

    /// `Ψ_t`, checked for symplecticity.
    pub fn eval(&self, t: f64) -> Result<SymplecticMatrix, CzError> {
        let m = self.raw(t)?;
        let defect = symplectic_defect(&m);
        if !(defect <= self.tol.symplectic) {
            return Err(CzError::NotSymplectic { t, defect });
        }
        Ok(SymplecticMatrix(m))
    }

    /// `∂_tΨ_t`: analytic when provided, else a central difference with
    /// step `10⁻⁶·(b − a)` (one-sided, second order, at the ends).
    pub fn derivative(&self, t: f64) -> Result<Matrix, CzError> {
        if let Some(d) = &self.deriv {
            return Ok(d(t));
        }
        let h = 1e-6 * (self.end - self.start);
        if t - h < self.start {
            let (f0, f1, f2) = (self.raw(t)?, self.raw(t + h)?, self.raw(t + 2.0 * h)?);
            Ok((f1 * 4.0 - f0 * 3.0 - f2) / (2.0 * h))
        } else if t + h > self.end {
            let (f0, f1, f2) = (self.raw(t)?, self.raw(t - h)?, self.raw(t - 2.0 * h)?);
            Ok((f0 * 3.0 - f1 * 4.0 + f2) / (2.0 * h))
        } else {
            Ok((self.raw(t + h)? - self.raw(t - h)?) / (2.0 * h))
        }
    }

    /// The path `s ↦ Ψ_{φ(s)}` on `[s0, s1]` for an increasing `φ` with
    /// `φ(s0) = a` and `φ(s1) = b`.
    pub fn reparametrize<F, D>(&self, s0: f64, s1: f64, phi: F, dphi: D) -> Result<Self, CzError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let phi = Arc::new(phi);
        let inner = self.clone();
        let eval_phi = phi.clone();
        let eval_inner = inner.clone();
        let mut out =
            SymplecticPath::new(s0, s1, self.dim, move |s| (eval_inner.eval)(eval_phi(s)))?
                .with_sample_count(self.sample_count)
                .with_tolerances(self.tol);
        out.deriv = Some(Arc::new(move |s| {
            let t = phi(s);
            let d = inner
                .derivative(t)
                .unwrap_or_else(|_| Matrix::zeros(inner.dim, inner.dim));
            d * dphi(s)
        }));
        Ok(out)
    }

    /// `t ↦ diag(Φ_t, Ψ_t)`.
    pub fn direct_sum(&self, other: &SymplecticPath) -> Result<SymplecticPath, CzError> {
        if self.start != other.start || self.end != other.end {
            return Err(CzError::DomainMismatch {
                a0: self.start,
                b0: self.end,
                a1: other.start,
                b1: other.end,
            });
        }
        let (n1, n2) = (self.dim, other.dim);
        let (e1, e2) = (self.eval.clone(), other.eval.clone());
        let (p1, p2) = (self.clone(), other.clone());
        let mut out = SymplecticPath::new(self.start, self.end, n1 + n2, move |t| {
            block_diag(&e1(t), &e2(t))
        })?
        .with_sample_count(self.sample_count.max(other.sample_count))
        .with_tolerances(self.tol);
        if self.deriv.is_some() || other.deriv.is_some() {
            out.deriv = Some(Arc::new(move |t| {
                let d1 = p1.derivative(t).unwrap_or_else(|_| Matrix::zeros(n1, n1));
                let d2 = p2.derivative(t).unwrap_or_else(|_| Matrix::zeros(n2, n2));
                block_diag(&d1, &d2)
            }));
        }
        Ok(out)
    }
}

/// Free-function form of [`SymplecticPath::direct_sum`].
pub fn direct_sum(p1: &SymplecticPath, p2: &SymplecticPath) -> Result<SymplecticPath, CzError> {
    p1.direct_sum(p2)
}

pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = Matrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// `t ↦ ⊕_l R(α_l t)` on `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPath {
    freqs: Vec<f64>,
    duration: f64,
}

fn check_rotation(freqs: &[f64], duration: f64) -> Result<(), CzError> {
    if freqs.is_empty() {
        return Err(CzError::InvalidRotation("no frequencies".into()));
    }
    if let Some(a) = freqs.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(CzError::InvalidRotation(format!(
            "frequency {a} is not positive"
        )));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(CzError::InvalidRotation(format!(
            "duration {duration} is not positive"
        )));
    }
    Ok(())
}

impl RotationPath {
    pub fn new(freqs: Vec<f64>, duration: f64) -> Result<Self, CzError> {
        check_rotation(&freqs, duration)?;
        Ok(RotationPath { freqs, duration })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn matrix_at(&self, t: f64) -> Matrix {
        rotation_blocks(&self.freqs, t, false)
    }

    pub fn to_path(&self) -> SymplecticPath {
        let (f1, f2) = (self.freqs.clone(), self.freqs.clone());
        SymplecticPath::new(0.0, self.duration, 2 * self.freqs.len(), move |t| {
            rotation_blocks(&f1, t, false)
        })
        .expect("validated rotation path")
        .with_derivative(move |t| rotation_blocks(&f2, t, true))
    }

    pub fn analytic_index(&self) -> HalfInteger {
        cz_rotation_analytic(&self.freqs, self.duration).expect("validated rotation path")
    }
}

fn rotation_blocks(freqs: &[f64], t: f64, derivative: bool) -> Matrix {
    let n = freqs.len();
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for (l, &a) in freqs.iter().enumerate() {
        let (s, c) = (a * t).sin_cos();
        let (i, k) = (2 * l, 2 * l + 1);
        if derivative {
            m[(i, i)] = -a * s;
            m[(i, k)] = -a * c;
            m[(k, i)] = a * c;
            m[(k, k)] = -a * s;
        } else {
            m[(i, i)] = c;
            m[(i, k)] = -s;
            m[(k, i)] = s;
            m[(k, k)] = c;
        }
    }
    m
}

/// Where a crossing sits in the domain; endpoint crossings carry half weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingPosition {
    Start,
    Interior,
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub position: CrossingPosition,
    /// Orthonormal columns spanning `ker(Ψ_t − id)`.
    pub kernel_basis: Matrix,
    pub eigenvalues: Vec<f64>,
    pub signature: i64,
    pub degenerate: bool,
}

impl Crossing {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    /// Contribution to twice the index.
    fn weight_twice(&self) -> i64 {
        match self.position {
            CrossingPosition::Interior => 2 * self.signature,
            _ => self.signature,
        }
    }
}

/// The crossing form at `t` in coordinates of the kernel basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingForm {
    pub kernel_basis: Matrix,
    /// `Kᵀ·sym(S_t)·K`.
    pub form: Matrix,
}

fn sigma_min(m: &Matrix) -> f64 {
    let eye = Matrix::identity(m.nrows(), m.ncols());
    (m - eye)
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `(σ_min, ln|det(Ψ_t − id)|)`.
///
/// Minima of `σ_min` alone can hide a fast block's zero on the shoulder of
/// a slow block's: `σ_min` only dips inside a funnel narrower than one
/// sample. The log-determinant dips at every zero of every singular value.
fn probe(path: &SymplecticPath, t: f64) -> Result<(f64, f64), CzError> {
    let psi = path.eval(t)?.into_inner();
    let sv = (psi - Matrix::identity(path.dim, path.dim)).singular_values();
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let log_det = sv.iter().map(|s| s.max(f64::MIN_POSITIVE).ln()).sum();
    Ok((min, log_det))
}

fn kernel_basis(m: &Matrix, tol: f64) -> Matrix {
    let dim = m.nrows();
    let svd = (m - Matrix::identity(dim, dim)).svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(dim, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// `(ζ, η) ↦ ζᵀS_tη` on `ker(Ψ_t − id)`, with `S_t = J(∂_tΨ_t)Ψ_t⁻¹`
/// symmetrized before restriction.
pub fn crossing_form(path: &SymplecticPath, t: f64) -> Result<CrossingForm, CzError> {
    let psi = path.eval(t)?;
    let sigma = sigma_min(psi.matrix());
    if sigma > path.tol.kernel {
        return Err(CzError::NotACrossing { t, sigma });
    }
    let j = standard_form(psi.half_dim());
    let s = &j * path.derivative(t)? * psi.inverse();
    let sym = (&s + s.transpose()) * 0.5;
    let k = kernel_basis(psi.matrix(), path.tol.kernel);
    let form = k.transpose() * sym * &k;
    Ok(CrossingForm {
        kernel_basis: k,
        form,
    })
}

fn build_crossing(
    path: &SymplecticPath,
    t: f64,
    position: CrossingPosition,
) -> Result<Crossing, CzError> {
    let CrossingForm { kernel_basis, form } = crossing_form(path, t)?;
    let eigenvalues: Vec<f64> = if form.nrows() == 0 {
        Vec::new()
    } else {
        let mut ev: Vec<f64> = SymmetricEigen::new(form)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    };
    let eps = path.tol.eigen;
    let pos = eigenvalues.iter().filter(|&&l| l > eps).count() as i64;
    let neg = eigenvalues.iter().filter(|&&l| l < -eps).count() as i64;
    let degenerate = eigenvalues.iter().any(|l| l.abs() < eps);
    Ok(Crossing {
        t,
        position,
        kernel_basis,
        eigenvalues,
        signature: pos - neg,
        degenerate,
    })
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
fn golden_min<F>(mut lo: f64, mut hi: f64, width: f64, f: F) -> Result<(f64, f64), CzError>
where
    F: Fn(f64) -> Result<f64, CzError>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    // the bracket ends may beat the interior probes on a one-sided minimum
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Sub-samples per bracket in [`subdivide`].
const SUBDIVISIONS: usize = 16;

/// Brackets stop shrinking at this many isolation gaps.
const LEAF_GAPS: f64 = 4.0;

/// Splits `[lo, hi]` until every sampled local minimum of the score sits in
/// its own bracket no wider than `min_width`, so two zeros sharing one
/// coarse bracket are both refined.
///
/// `score(t)` is `(σ_min, g)` with `g` the (possibly deflated)
/// log-determinant. Each bracket reaches two samples either side of its
/// minimum and each level samples two points past either end, so a zero
/// just outside the parent bracket is still seen. Brackets whose minimum
/// sample exceeds what the local slope bound `‖Ψ'‖_F` could bring down to
/// zero are dropped.
fn subdivide(
    path: &SymplecticPath,
    score: &dyn Fn(f64) -> Result<(f64, f64), CzError>,
    lo: f64,
    hi: f64,
    min_width: f64,
    out: &mut Vec<(f64, f64)>,
) -> Result<(), CzError> {
    if hi - lo <= min_width {
        out.push((lo, hi));
        return Ok(());
    }
    let (a, b) = path.domain();
    let w = (hi - lo) / SUBDIVISIONS as f64;
    let mut ts: Vec<f64> = (-2..=SUBDIVISIONS as i64 + 2)
        .map(|i| match i {
            0 => lo,
            i if i == SUBDIVISIONS as i64 => hi,
            i => (lo + w * i as f64).clamp(a, b),
        })
        .collect();
    ts.dedup();
    let mut sig = Vec::with_capacity(ts.len());
    let mut g = Vec::with_capacity(ts.len());
    let mut slope = 0.0f64;
    for &t in &ts {
        let (s, l) = score(t)?;
        sig.push(s);
        g.push(l);
        slope = slope.max(path.derivative(t)?.norm());
    }
    let reach = 4.0 * slope * w + path.tol.accept;

    for i in local_minima(&g, ts[0] == a, ts[ts.len() - 1] == b) {
        if sig[i] <= reach {
            let (x, y) = (i.saturating_sub(2), (i + 2).min(ts.len() - 1));
            subdivide(path, score, ts[x], ts[y], min_width, out)?;
        }
    }
    Ok(())
}

/// Indices of sampled local minima; an end index counts only if it is an
/// end of the domain.
fn local_minima(g: &[f64], first_is_end: bool, last_is_end: bool) -> Vec<usize> {
    let last = g.len() - 1;
    (0..=last)
        .filter(|&i| {
            if (i == 0 && !first_is_end) || (i == last && !last_is_end) {
                return false;
            }
            let left = if i == 0 { f64::INFINITY } else { g[i - 1] };
            let right = if i == last { f64::INFINITY } else { g[i + 1] };
            g[i] <= left && g[i] <= right && g[i] != left
        })
        .collect()
}

/// `Σ_k m_k·ln|t − z_k|` over known zeros `z_k` of multiplicity `m_k`.
fn deflation(t: f64, zeros: &[(f64, f64)]) -> f64 {
    zeros
        .iter()
        .map(|&(z, m)| m * (t - z).abs().max(f64::MIN_POSITIVE).ln())
        .sum()
}

fn kernel_dim_at(path: &SymplecticPath, t: f64) -> Result<usize, CzError> {
    let eye = Matrix::identity(path.dim, path.dim);
    let sv = (path.eval(t)?.into_inner() - eye).singular_values();
    Ok(sv.iter().filter(|&&s| s <= path.tol.kernel).count())
}

/// Upper bound on deflation passes; each pass must find a new zero.
const MAX_PASSES: usize = 64;

/// All crossings of the path, sorted by time.
///
/// `ln|det(Ψ_t − id)|` is sampled on a uniform grid; every local minimum
/// (and each one-sided minimum next to an end) is split further by
/// [`subdivide`], refined by golden-section search, and classified by
/// `σ_min` against the kernel and acceptance thresholds. The endpoints are
/// examined directly.
///
/// A zero whose well is swamped by deeper neighbours leaves no sampled
/// minimum, so the search repeats with the log singularities of the zeros
/// found so far divided out, until a pass finds nothing new. Later passes
/// only collect zeros: a shallow minimum there is usually the residue of a
/// known zero, not an ambiguous crossing.
pub fn find_crossings(path: &SymplecticPath) -> Result<Vec<Crossing>, CzError> {
    let (a, b) = path.domain();
    let tol = path.tol;
    let span = b - a;
    let n = path.sample_count;

    let ts: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + span * i as f64 / n as f64
            }
        })
        .collect();
    let probes = ts
        .iter()
        .map(|&t| probe(path, t))
        .collect::<Result<Vec<_>, _>>()?;
    let sig: Vec<f64> = probes.iter().map(|p| p.0).collect();
    let g: Vec<f64> = probes.iter().map(|p| p.1).collect();

    for i in 0..n {
        if sig[i] <= tol.kernel && sig[i + 1] <= tol.kernel {
            return Err(CzError::NonIsolatedCrossings {
                t1: ts[i],
                t2: ts[i + 1],
            });
        }
    }

    let gap = tol.isolation * span;
    let same = 1e3 * tol.refine * span;
    let classify = |t: f64, s: f64| -> Result<bool, CzError> {
        if s <= tol.kernel {
            Ok(true)
        } else if s < tol.accept {
            Err(CzError::CrossingTooFlat { t, sigma: s })
        } else {
            Ok(false)
        }
    };

    let mut times: Vec<(f64, CrossingPosition)> = Vec::new();
    if classify(a, sig[0])? {
        times.push((a, CrossingPosition::Start));
    }
    if classify(b, sig[n])? {
        times.push((b, CrossingPosition::End));
    }
    let mut zeros: Vec<(f64, f64)> = Vec::new();
    for &(t, _) in &times {
        zeros.push((t, kernel_dim_at(path, t)? as f64));
    }

    for pass in 0..MAX_PASSES {
        let active: &[(f64, f64)] = if pass == 0 { &[] } else { &zeros };
        let score = |t: f64| -> Result<(f64, f64), CzError> {
            let (s, l) = probe(path, t)?;
            Ok((s, l - deflation(t, active)))
        };
        let deflated: Vec<f64> = ts
            .iter()
            .zip(&g)
            .map(|(&t, &l)| l - deflation(t, active))
            .collect();
        let mut leaves = Vec::new();
        for i in local_minima(&deflated, true, true) {
            let (lo, hi) = (ts[i.saturating_sub(2)], ts[(i + 2).min(n)]);
            subdivide(path, &score, lo, hi, LEAF_GAPS * gap, &mut leaves)?;
        }
        let mut found: Vec<(f64, CrossingPosition)> = Vec::new();
        for (lo, hi) in leaves {
            let (t, _) = golden_min(lo, hi, tol.refine * span, |t| Ok(score(t)?.1))?;
            // minima that run into an end are the endpoint's business
            if t - a < gap || b - t < gap {
                continue;
            }
            let s = probe(path, t)?.0;
            let is_zero = if pass == 0 {
                classify(t, s)?
            } else {
                s <= tol.kernel
            };
            let known = times
                .iter()
                .chain(&found)
                .any(|&(u, _)| (u - t).abs() <= same);
            if is_zero && !known {
                found.push((t, CrossingPosition::Interior));
            }
        }
        if found.is_empty() {
            break;
        }
        for &(t, _) in &found {
            zeros.push((t, kernel_dim_at(path, t)? as f64));
        }
        times.extend(found);
    }
    times.sort_by(|x, y| x.0.total_cmp(&y.0));

    for w in times.windows(2) {
        if w[1].0 - w[0].0 < gap {
            return Err(CzError::NonIsolatedCrossings {
                t1: w[0].0,
                t2: w[1].0,
            });
        }
    }

    let instants: Vec<f64> = times.iter().map(|m| m.0).collect();
    let near = 4.0 * span / n as f64;
    times
        .into_iter()
        .map(|(t, pos)| {
            check_hidden_zero(path, t, &instants, near)?;
            build_crossing(path, t, pos)
        })
        .collect()
}

/// Rejects a crossing with a singular value of `Ψ_t − id` in
/// `(kernel, accept)`, which means a second zero too close to separate,
/// unless a found crossing within `near` has that singular direction in
/// its kernel.
fn check_hidden_zero(
    path: &SymplecticPath,
    t: f64,
    times: &[f64],
    near: f64,
) -> Result<(), CzError> {
    let tol = path.tol;
    let eye = Matrix::identity(path.dim, path.dim);
    let svd = (path.eval(t)?.into_inner() - &eye).svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol.kernel || s >= tol.accept {
            continue;
        }
        let v = v_t.row(i).transpose();
        let explained = times
            .iter()
            .filter(|&&u| u != t && (u - t).abs() <= near)
            .map(|&u| Ok((path.eval(u)?.into_inner() - &eye) * &v))
            .collect::<Result<Vec<_>, CzError>>()?
            .iter()
            .any(|r| r.norm() <= (s / 4.0).max(10.0 * tol.kernel));
        if !explained {
            return Err(CzError::CrossingTooFlat { t, sigma: s });
        }
    }
    Ok(())
}

/// Conley-Zehnder index from the crossing-form signatures: half weight at
/// endpoint crossings, full weight at interior ones.
pub fn cz_index(path: &SymplecticPath) -> Result<HalfInteger, CzError> {
    let crossings = find_crossings(path)?;
    if let Some(c) = crossings.iter().find(|c| c.degenerate) {
        let eigenvalue = c
            .eigenvalues
            .iter()
            .copied()
            .min_by(|x, y| x.abs().total_cmp(&y.abs()))
            .unwrap_or(0.0);
        return Err(CzError::DegenerateCrossing { t: c.t, eigenvalue });
    }
    Ok(HalfInteger::from_twice(
        crossings.iter().map(Crossing::weight_twice).sum(),
    ))
}

/// Tolerance for deciding that a rotation number `Tα` is an integer.
pub const INTEGER_TURN_TOL: f64 = 1e-9;

/// Closed-form index of `⊕_l R(α_l t)` on `[0, duration]`: with
/// `τ_l = duration·α_l/2π`, each block contributes `1 + 2⌊τ_l⌋` when `τ_l`
/// is not an integer and `2τ_l` when it is.
pub fn cz_rotation_analytic(freqs: &[f64], duration: f64) -> Result<HalfInteger, CzError> {
    check_rotation(freqs, duration)?;
    Ok(freqs
        .iter()
        .map(|&alpha| {
            let turns = duration * alpha / TAU;
            let k = turns.round();
            if (turns - k).abs() <= INTEGER_TURN_TOL {
                HalfInteger::from_int(2 * k as i64)
            } else {
                HalfInteger::from_int(1 + 2 * turns.floor() as i64)
            }
        })
        .sum())
}

/// The same closed form with exact rotation numbers `τ_l`, each `> 0`.
pub fn cz_rotation_exact(turns: &[QuadIrrational]) -> HalfInteger {
    turns
        .iter()
        .map(|tau| {
            if tau.is_rational() && tau.p().is_integer() {
                let k = tau
                    .p()
                    .to_integer()
                    .to_i64()
                    .expect("rotation number fits i64");
                HalfInteger::from_int(2 * k)
            } else {
                let f = tau.floor_product(1);
                debug_assert!(!f.is_negative());
                HalfInteger::from_int(1 + 2 * f.to_i64().expect("rotation number fits i64"))
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rotation_matrices_are_symplectic() {
        let r = RotationPath::new(vec![1.0, 3.0, 0.7], 10.0).unwrap();
        let path = r.to_path();
        for i in 0..=100 {
            let t = 10.0 * i as f64 / 100.0;
            assert!(symplectic_defect(path.eval(t).unwrap().matrix()) <= 1e-9);
        }
    }

    #[test]
    fn symplectic_inverse_matches_lu() {
        let m = RotationPath::new(vec![0.3, 2.0], 1.0)
            .unwrap()
            .matrix_at(0.8);
        let m = SymplecticMatrix::new(m, 1e-9).unwrap();
        let lu = m.matrix().clone().try_inverse().unwrap();
        assert!((m.inverse() - lu).abs().max() < 1e-12);
    }

    #[test]
    fn non_symplectic_matrix_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!(matches!(
            SymplecticMatrix::new(m, 1e-9),
            Err(CzError::NotSymplectic { .. })
        ));
        let path =
            SymplecticPath::new(0.0, 1.0, 2, |t| Matrix::identity(2, 2) * (1.0 + t)).unwrap();
        assert!(matches!(
            cz_index(&path),
            Err(CzError::NotSymplectic { .. })
        ));
    }

    #[test]
    fn crossings_of_one_and_a_half_turns() {
        let path = RotationPath::new(vec![1.0], 2.0 * PI * 1.5)
            .unwrap()
            .to_path();
        let cs = find_crossings(&path).unwrap();
        let ts: Vec<f64> = cs.iter().map(|c| c.t).collect();
        assert_eq!(cs.len(), 2, "{ts:?}");
        assert_eq!(cs[0].t, 0.0);
        assert_eq!(cs[0].position, CrossingPosition::Start);
        assert!((cs[1].t - 2.0 * PI).abs() < 1e-8);
        assert_eq!(cs[1].position, CrossingPosition::Interior);
        for c in &cs {
            assert_eq!(c.kernel_dim(), 2);
            assert_eq!(c.signature, 2);
        }
    }

    #[test]
    fn half_turn_has_only_the_start_crossing() {
        let path = RotationPath::new(vec![1.0], PI).unwrap().to_path();
        let cs = find_crossings(&path).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].t, 0.0);
    }

    #[test]
    fn constant_identity_is_non_isolated() {
        let id = SymplecticMatrix::new(Matrix::identity(2, 2), 1e-9).unwrap();
        let path = SymplecticPath::constant(id, 0.0, 1.0).unwrap();
        assert!(matches!(
            find_crossings(&path),
            Err(CzError::NonIsolatedCrossings { .. })
        ));
    }

    #[test]
    fn crossing_form_of_rotation_is_alpha_identity() {
        for alpha in [0.5, 2.0, 7.0] {
            let path = RotationPath::new(vec![alpha], 3.0).unwrap().to_path();
            let f = crossing_form(&path, 0.0).unwrap();
            // basis is orthonormal, so the form is α·id in any such basis
            let expect = Matrix::identity(2, 2) * alpha;
            assert!((f.form - expect).abs().max() < 1e-12);
        }
    }

    #[test]
    fn crossing_form_of_two_blocks_at_start() {
        let path = RotationPath::new(vec![1.0, 3.0], 1.0).unwrap().to_path();
        let f = crossing_form(&path, 0.0).unwrap();
        assert_eq!(f.kernel_basis.ncols(), 4);
        let mut ev: Vec<f64> = SymmetricEigen::new(f.form)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        for (got, want) in ev.iter().zip([1.0, 1.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(
            build_crossing(&path, 0.0, CrossingPosition::Start)
                .unwrap()
                .signature,
            4
        );
    }

    #[test]
    fn crossing_form_off_crossing_errors() {
        let path = RotationPath::new(vec![1.0], 3.0).unwrap().to_path();
        assert!(matches!(
            crossing_form(&path, 1.0),
            Err(CzError::NotACrossing { .. })
        ));
    }

    #[test]
    fn index_examples() {
        let idx =
            |f: Vec<f64>, d: f64| cz_index(&RotationPath::new(f, d).unwrap().to_path()).unwrap();
        assert_eq!(idx(vec![1.0], 3.0 * PI), HalfInteger::from_int(3));
        assert_eq!(idx(vec![1.0], 2.0 * PI), HalfInteger::from_int(2));
        assert_eq!(idx(vec![1.0, 1.0], PI), HalfInteger::from_int(2));
    }

    #[test]
    fn constant_non_identity_has_index_zero() {
        let m = SymplecticMatrix::new(
            RotationPath::new(vec![1.0], 1.0).unwrap().matrix_at(2.0),
            1e-9,
        )
        .unwrap();
        let path = SymplecticPath::constant(m, 0.0, 5.0).unwrap();
        assert_eq!(cz_index(&path).unwrap(), HalfInteger::ZERO);
    }

    #[test]
    fn finite_difference_derivative_agrees() {
        let freqs = vec![0.9, 2.3];
        let f = freqs.clone();
        let numeric =
            SymplecticPath::new(0.0, 4.0 * PI, 4, move |t| rotation_blocks(&f, t, false)).unwrap();
        let exact = RotationPath::new(freqs, 4.0 * PI).unwrap();
        assert_eq!(cz_index(&numeric).unwrap(), exact.analytic_index());
        for t in [0.0, 1.0, 4.0 * PI] {
            let diff = numeric.derivative(t).unwrap() - exact.to_path().derivative(t).unwrap();
            assert!(diff.abs().max() < 1e-6);
        }
    }

    #[test]
    fn degenerate_crossing_is_an_error() {
        // R(t²) has a crossing form that vanishes at t = 0; on [0, 2] the
        // first sample already sits above the kernel threshold
        let path = SymplecticPath::new(0.0, 2.0, 2, |t| rotation_blocks(&[1.0], t * t, false))
            .unwrap()
            .with_derivative(|t| rotation_blocks(&[1.0], t * t, true) * (2.0 * t));
        assert!(matches!(
            cz_index(&path),
            Err(CzError::DegenerateCrossing { t, .. }) if t == 0.0
        ));
    }

    #[test]
    fn negative_rotation_has_negative_signature() {
        // R(−t) on [0, 3π]: inverse rotation sense, crossings carry signature −2
        let path = SymplecticPath::new(0.0, 3.0 * PI, 2, |t| rotation_blocks(&[1.0], -t, false))
            .unwrap()
            .with_derivative(|t| -rotation_blocks(&[1.0], -t, true));
        assert_eq!(cz_index(&path).unwrap(), HalfInteger::from_int(-3));
    }

    #[test]
    fn near_integer_endpoint_is_too_flat() {
        let path = RotationPath::new(vec![1.0], 2.0 * PI * (1.0 - 1e-6))
            .unwrap()
            .to_path();
        assert!(matches!(
            cz_index(&path),
            Err(CzError::CrossingTooFlat { .. })
        ));
    }

    #[test]
    fn nearly_coincident_crossings_merge() {
        // second block crosses 1e-8 after the first: one crossing, kernel dim 4
        let path = RotationPath::new(vec![1.0, 1.0 - 1e-8 / (2.0 * PI)], 3.0 * PI)
            .unwrap()
            .to_path();
        let cs = find_crossings(&path).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].kernel_dim(), 4);
        assert_eq!(cz_index(&path).unwrap(), HalfInteger::from_int(6));
    }

    #[test]
    fn close_crossings_are_resolved() {
        // crossings 1e-5 apart share a coarse sampling interval
        let path = RotationPath::new(vec![1.0, 1.0 - 1e-5 / (2.0 * PI)], 3.0 * PI)
            .unwrap()
            .to_path();
        let cs = find_crossings(&path).unwrap();
        assert_eq!(cs.len(), 3);
        assert!((cs[2].t - cs[1].t - 1e-5).abs() < 1e-9);
        assert_eq!(cz_index(&path).unwrap(), HalfInteger::from_int(6));
    }

    #[test]
    fn crossings_closer_than_the_isolation_gap_are_rejected() {
        let path = RotationPath::new(vec![1.0, 1.0 - 3e-7 / (2.0 * PI)], 3.0 * PI)
            .unwrap()
            .to_path();
        assert!(matches!(
            cz_index(&path),
            Err(CzError::CrossingTooFlat { .. } | CzError::NonIsolatedCrossings { .. })
        ));
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(
            cz_rotation_analytic(&[1.0], 3.0 * PI).unwrap(),
            HalfInteger::from_int(3)
        );
        assert_eq!(
            cz_rotation_analytic(&[1.0, 1.0], PI).unwrap(),
            HalfInteger::from_int(2)
        );
        assert_eq!(
            cz_rotation_analytic(&[1.0], 2.0 * PI).unwrap(),
            HalfInteger::from_int(2)
        );
        assert!(cz_rotation_analytic(&[], 1.0).is_err());
        assert!(cz_rotation_analytic(&[1.0], -1.0).is_err());
        assert!(RotationPath::new(vec![0.0], 1.0).is_err());
    }

    #[test]
    fn exact_rotation_numbers() {
        let k = crate::field::FieldContext::new(2).unwrap();
        // τ = 1, √2/2, 3/2
        let turns = [k.int(1), k.from_parts((0, 1), (1, 2)), k.ratio(3, 2)];
        assert_eq!(cz_rotation_exact(&turns), HalfInteger::from_int(2 + 1 + 3));
    }

    #[test]
    fn direct_sum_is_block_assembly() {
        let p = RotationPath::new(vec![1.0], PI).unwrap().to_path();
        let q = RotationPath::new(vec![2.0], PI).unwrap().to_path();
        let s = direct_sum(&p, &q).unwrap();
        let r = RotationPath::new(vec![1.0, 2.0], PI).unwrap();
        for t in [0.0, 0.4, 1.7, PI] {
            assert!(
                (s.eval(t).unwrap().into_inner() - r.matrix_at(t))
                    .abs()
                    .max()
                    < 1e-15
            );
        }
        let other = RotationPath::new(vec![2.0], 1.0).unwrap().to_path();
        assert!(matches!(
            direct_sum(&p, &other),
            Err(CzError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn half_integer_display_and_json() {
        assert_eq!(HalfInteger::from_twice(5).to_string(), "5/2");
        assert_eq!(HalfInteger::from_int(-3).to_string(), "-3");
        assert_eq!(
            serde_json::to_string(&HalfInteger::from_int(3)).unwrap(),
            "3"
        );
        assert_eq!(
            serde_json::to_string(&HalfInteger::from_twice(3)).unwrap(),
            "\"3/2\""
        );
    }
}
