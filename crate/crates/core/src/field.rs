//! Exact arithmetic in a real quadratic field ℚ(√d).
//!
//! Every weight and every weight ratio used by the partition and spectrum
//! code lives here, so that "is this ratio rational?" and "what is ⌊n·x⌋?"
//! are decided exactly instead of in floating point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("radicand {0} is invalid: it must be at least 2")]
    RadicandTooSmall(u64),
    #[error("perfect-square radicand {0}")]
    PerfectSquareRadicand(BigInt),
    #[error("radicand mismatch: sqrt({found}) used in the field Q(sqrt({expected}))")]
    RadicandMismatch { expected: u64, found: BigInt },
    #[error("division by zero")]
    DivisionByZero,
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

/// The radicand shared by all values of one computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldContext {
    d: u64,
}

fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

impl FieldContext {
    pub fn new(d: u64) -> Result<Self, FieldError> {
        if d < 2 {
            return Err(FieldError::RadicandTooSmall(d));
        }
        if is_perfect_square(&BigInt::from(d)) {
            return Err(FieldError::PerfectSquareRadicand(BigInt::from(d)));
        }
        Ok(FieldContext { d })
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn element(&self, p: BigRational, q: BigRational) -> QuadIrrational {
        QuadIrrational { p, q, d: self.d }
    }

    pub fn rational(&self, p: BigRational) -> QuadIrrational {
        self.element(p, BigRational::zero())
    }

    pub fn int(&self, value: i64) -> QuadIrrational {
        self.rational(BigRational::from_integer(value.into()))
    }

    /// `num/den + 0·√d`.
    pub fn ratio(&self, num: i64, den: i64) -> QuadIrrational {
        self.rational(BigRational::new(num.into(), den.into()))
    }

    /// `(p_num/p_den) + (q_num/q_den)·√d`.
    pub fn from_parts(&self, p: (i64, i64), q: (i64, i64)) -> QuadIrrational {
        self.element(
            BigRational::new(p.0.into(), p.1.into()),
            BigRational::new(q.0.into(), q.1.into()),
        )
    }

    pub fn sqrt_d(&self) -> QuadIrrational {
        self.element(BigRational::zero(), BigRational::one())
    }

    pub fn zero(&self) -> QuadIrrational {
        self.int(0)
    }

    pub fn one(&self) -> QuadIrrational {
        self.int(1)
    }

    pub fn parse(&self, text: &str) -> Result<QuadIrrational, FieldError> {
        Parser::new(text, *self)?.parse_expr()
    }
}

/// An element `p + q·√d` of ℚ(√d).
///
/// `p` and `q` are kept in lowest terms with positive denominators, so
/// structural equality is value equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadIrrational {
    p: BigRational,
    q: BigRational,
    d: u64,
}

/// Sign of `a + b·√d` for integer or rational `a`, `b` and non-square `d`.
fn surd_sign<T>(a: &T, b: &T, d: u64) -> Ordering
where
    T: Signed + Clone + Mul<Output = T> + Ord + From<BigInt>,
{
    let sa = sign_of(a);
    let sb = sign_of(b);
    match (sa, sb) {
        (s, Ordering::Equal) => s,
        (Ordering::Equal, s) => s,
        (x, y) if x == y => x,
        _ => {
            let a2 = a.clone() * a.clone();
            let b2d = b.clone() * b.clone() * T::from(BigInt::from(d));
            // a² = b²d is impossible for non-square d unless both vanish
            if a2 > b2d {
                sa
            } else {
                sb
            }
        }
    }
}

fn sign_of<T: Signed>(x: &T) -> Ordering {
    if x.is_positive() {
        Ordering::Greater
    } else if x.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl QuadIrrational {
    pub fn p(&self) -> &BigRational {
        &self.p
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn context(&self) -> FieldContext {
        FieldContext { d: self.d }
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    /// True iff the value lies in ℚ, which for non-square `d` means `q = 0`.
    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.d == other.d {
            Ok(())
        } else {
            Err(FieldError::RadicandMismatch {
                expected: self.d,
                found: other.d.into(),
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(QuadIrrational {
            p: &self.p + &other.p,
            q: &self.q + &other.q,
            d: self.d,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(QuadIrrational {
            p: &self.p - &other.p,
            q: &self.q - &other.q,
            d: self.d,
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        let d = BigRational::from_integer(self.d.into());
        Ok(QuadIrrational {
            p: &self.p * &other.p + &self.q * &other.q * d,
            q: &self.p * &other.q + &other.p * &self.q,
            d: self.d,
        })
    }

    /// `x / y = x·ȳ / N(y)`.
    pub fn try_div(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        let inv = other.recip()?;
        self.try_mul(&inv)
    }

    pub fn conjugate(&self) -> Self {
        QuadIrrational {
            p: self.p.clone(),
            q: -self.q.clone(),
            d: self.d,
        }
    }

    /// `p² − q²d`; nonzero for every nonzero element.
    pub fn norm(&self) -> BigRational {
        &self.p * &self.p - &self.q * &self.q * BigRational::from_integer(self.d.into())
    }

    pub fn recip(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let n = self.norm();
        Ok(QuadIrrational {
            p: &self.p / &n,
            q: -(&self.q / &n),
            d: self.d,
        })
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        QuadIrrational {
            p: &self.p * c,
            q: &self.q * c,
            d: self.d,
        }
    }

    /// Exact sign.
    pub fn signum(&self) -> Ordering {
        surd_sign(&self.p, &self.q, self.d)
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    /// Exact ordering, decided by the sign of `self − other`.
    pub fn try_cmp(&self, other: &Self) -> Result<Ordering, FieldError> {
        self.check(other)?;
        let dp = &self.p - &other.p;
        let dq = &self.q - &other.q;
        Ok(surd_sign(&dp, &dq, self.d))
    }

    pub fn to_f64(&self) -> f64 {
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        p + q * (self.d as f64).sqrt()
    }

    /// Certified `⌊n·self⌋`.
    pub fn floor_product(&self, n: u64) -> BigInt {
        Multiples::new(self).floor(n)
    }
}

/// Certified `⌊n·x⌋` for a fixed `x`, with `x` pre-split as `(a + c√d)/den`.
///
/// A double-precision estimate seeds the candidate; the result is then
/// confirmed (and stepped if needed) by exact integer sign tests, so the
/// float never decides the answer.
/// Below this magnitude the float seed is within a few units of the floor.
const FLOAT_SEED_LIMIT: f64 = (1u64 << 50) as f64;

#[derive(Debug, Clone)]
pub struct Multiples {
    a: BigInt,
    c: BigInt,
    den: BigInt,
    d: u64,
    approx: f64,
}

impl Multiples {
    pub fn new(x: &QuadIrrational) -> Self {
        let den = x.p.denom().lcm(x.q.denom());
        let a = x.p.numer() * (&den / x.p.denom());
        let c = x.q.numer() * (&den / x.q.denom());
        Multiples {
            a,
            c,
            den,
            d: x.d,
            approx: x.to_f64(),
        }
    }

    /// Ordering of the integer `f` against `n·x`.
    fn cmp_int(&self, f: &BigInt, na: &BigInt, nc: &BigInt) -> Ordering {
        // f − (na + nc√d)/den has the sign of (f·den − na) − nc√d
        let lhs = f * &self.den - na;
        let neg_c = -nc;
        surd_sign(&lhs, &neg_c, self.d)
    }

    fn seed(&self, n: u64, na: &BigInt, nc: &BigInt) -> BigInt {
        let est = (n as f64 * self.approx).floor();
        if est.is_finite() && est.abs() < FLOAT_SEED_LIMIT {
            if let Some(f) = BigInt::from_f64(est) {
                return f;
            }
        }
        // beyond the float seed's unit accuracy: ⌊(na + ⌊nc√d⌋)/den⌋, off by
        // at most one
        let s = (nc * nc * BigInt::from(self.d)).sqrt();
        let s = if nc.is_negative() { -s } else { s };
        (na + s).div_floor(&self.den)
    }

    pub fn floor(&self, n: u64) -> BigInt {
        let nb = BigInt::from(n);
        let na = &self.a * &nb;
        let nc = &self.c * &nb;
        let mut f = self.seed(n, &na, &nc);
        while self.cmp_int(&f, &na, &nc) == Ordering::Greater {
            f -= 1;
        }
        loop {
            let next = &f + 1;
            if self.cmp_int(&next, &na, &nc) == Ordering::Greater {
                return f;
            }
            f = next;
        }
    }

    /// `⌊n·x⌋` as `i64`, saturating at `i64::MAX`/`i64::MIN`.
    pub fn floor_i64(&self, n: u64) -> i64 {
        let f = self.floor(n);
        f.to_i64()
            .unwrap_or(if f.is_negative() { i64::MIN } else { i64::MAX })
    }
}

/// Free-function form of [`QuadIrrational::floor_product`].
pub fn floor_product(n: u64, x: &QuadIrrational) -> BigInt {
    x.floor_product(n)
}

/// Parse an expression such as `3/2 - 1/2*sqrt(5)` in the given field.
pub fn parse_expr(text: &str, ctx: FieldContext) -> Result<QuadIrrational, FieldError> {
    ctx.parse(text)
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for QuadIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if !self.p.is_zero() {
            write_rational(f, &self.p)?;
        }
        if self.q.is_zero() {
            return Ok(());
        }
        let mag = self.q.abs();
        match (self.p.is_zero(), self.q.is_negative()) {
            (true, false) => {}
            (true, true) => write!(f, "-")?,
            (false, false) => write!(f, " + ")?,
            (false, true) => write!(f, " - ")?,
        }
        if !mag.is_one() {
            write_rational(f, &mag)?;
            write!(f, "*")?;
        }
        write!(f, "sqrt({})", self.d)
    }
}

impl Serialize for QuadIrrational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl PartialOrd for QuadIrrational {
    /// `None` across different fields.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.try_cmp(other).ok()
    }
}

// Operator forms panic on mismatched radicands; use the `try_*` methods when
// the inputs are not already known to share a field.
macro_rules! forward_op {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl<'a> $tr<&'a QuadIrrational> for &'a QuadIrrational {
            type Output = QuadIrrational;
            fn $method(self, rhs: &'a QuadIrrational) -> QuadIrrational {
                self.$inner(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr for QuadIrrational {
            type Output = QuadIrrational;
            fn $method(self, rhs: QuadIrrational) -> QuadIrrational {
                (&self).$inner(&rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}

forward_op!(Add, add, try_add);
forward_op!(Sub, sub, try_sub);
forward_op!(Mul, mul, try_mul);
forward_op!(Div, div, try_div);

impl Neg for QuadIrrational {
    type Output = QuadIrrational;
    fn neg(self) -> QuadIrrational {
        QuadIrrational {
            p: -self.p,
            q: -self.q,
            d: self.d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Plus,
    Minus,
    Slash,
    Star,
    Sqrt,
    LParen,
    RParen,
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    ctx: FieldContext,
}

fn syntax(pos: usize, msg: impl Into<String>) -> FieldError {
    FieldError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FieldError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'/' => Tok::Slash,
            b'*' => Tok::Star,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v: BigInt = text[start..i].parse().expect("digits");
                out.push((start, Tok::Int(v)));
                continue;
            }
            _ if text[i..].starts_with("sqrt") => {
                out.push((i, Tok::Sqrt));
                i += 4;
                continue;
            }
            _ => return Err(syntax(i, format!("unexpected character {:?}", c as char))),
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

impl Parser {
    fn new(text: &str, ctx: FieldContext) -> Result<Self, FieldError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            end: text.len(),
            ctx,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FieldError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.here(), format!("expected {what}")))
        }
    }

    fn int(&mut self) -> Result<BigInt, FieldError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(v)
            }
            _ => Err(syntax(self.here(), "expected integer")),
        }
    }

    fn sqrt_call(&mut self) -> Result<(), FieldError> {
        self.expect(Tok::Sqrt, "'sqrt'")?;
        self.expect(Tok::LParen, "'('")?;
        let r = self.int()?;
        self.expect(Tok::RParen, "')'")?;
        if is_perfect_square(&r) {
            return Err(FieldError::PerfectSquareRadicand(r));
        }
        if r != BigInt::from(self.ctx.d) {
            return Err(FieldError::RadicandMismatch {
                expected: self.ctx.d,
                found: r,
            });
        }
        Ok(())
    }

    fn rational(&mut self) -> Result<BigRational, FieldError> {
        let num = self.int()?;
        if self.peek() == Some(&Tok::Slash) {
            self.pos += 1;
            let at = self.here();
            let den = self.int()?;
            if den.is_zero() {
                return Err(syntax(at, "zero denominator"));
            }
            Ok(BigRational::new(num, den))
        } else {
            Ok(BigRational::from_integer(num))
        }
    }

    fn term(&mut self) -> Result<QuadIrrational, FieldError> {
        match self.peek() {
            Some(Tok::Sqrt) => {
                self.sqrt_call()?;
                Ok(self.ctx.sqrt_d())
            }
            Some(Tok::Int(_)) => {
                let r = self.rational()?;
                if self.peek() == Some(&Tok::Star) {
                    self.pos += 1;
                    self.sqrt_call()?;
                    Ok(self.ctx.element(BigRational::zero(), r))
                } else {
                    Ok(self.ctx.rational(r))
                }
            }
            _ => Err(syntax(self.here(), "expected a number or sqrt(...)")),
        }
    }

    fn parse_expr(mut self) -> Result<QuadIrrational, FieldError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let first = self.term()?;
        let mut acc = if negate { -first } else { first };
        while let Some(t) = self.peek() {
            let sub = match t {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => return Err(syntax(self.here(), "expected '+' or '-'")),
            };
            self.pos += 1;
            let t = self.term()?;
            acc = if sub { &acc - &t } else { &acc + &t };
        }
        Ok(acc)
    }
}
