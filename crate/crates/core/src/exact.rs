//! Exact scalar and dense-matrix arithmetic.
//!
//! Scalars live in the field `Q(√2)(i)`: complex numbers whose real and
//! imaginary parts are `a + b·√2` with rational `a`, `b`. Gaussian rationals
//! are the `b = 0` subfield; the `√2` extension is what lets the Peres
//! three-dimensional ray set be written down exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix rows are not square (row {row} has {len} entries, expected {dim})")]
    Ragged { row: usize, len: usize, dim: usize },
    #[error("empty matrix")]
    Empty,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse scalar `{0}`")]
    Parse(String),
}

pub fn rational(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `n` or `n/d`.
pub fn parse_rational(s: &str) -> Result<Rational, ExactError> {
    let s = s.trim();
    let bad = || ExactError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(ExactError::DivisionByZero);
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

/// A real number `rat + surd·√2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Real {
    rat: Rational,
    surd: Rational,
}

impl Real {
    pub fn new(rat: Rational, surd: Rational) -> Self {
        Real { rat, surd }
    }

    pub fn from_rational(r: Rational) -> Self {
        Real { rat: r, surd: Rational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Real::from_rational(int(n))
    }

    pub fn sqrt2() -> Self {
        Real { rat: Rational::zero(), surd: Rational::one() }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rat
    }

    pub fn surd_part(&self) -> &Rational {
        &self.surd
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.surd.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.rat.is_one() && self.surd.is_zero()
    }

    pub fn to_rational(&self) -> Option<Rational> {
        self.surd.is_zero().then(|| self.rat.clone())
    }

    /// Sign as -1, 0 or 1, decided exactly.
    pub fn signum(&self) -> i8 {
        let sa = sign(&self.rat);
        let sb = sign(&self.surd);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // opposite signs: compare a^2 with 2 b^2
        let a2 = &self.rat * &self.rat;
        let b2 = &self.surd * &self.surd * int(2);
        match a2.cmp(&b2) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    /// Field conjugate `a - b√2`.
    fn galois(&self) -> Real {
        Real { rat: self.rat.clone(), surd: -self.surd.clone() }
    }

    pub fn inv(&self) -> Result<Real, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        // (a + b√2)(a - b√2) = a^2 - 2b^2, nonzero because √2 is irrational
        let norm = &self.rat * &self.rat - &self.surd * &self.surd * int(2);
        let g = self.galois();
        Ok(Real { rat: g.rat / &norm, surd: g.surd / norm })
    }
}

fn sign(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl From<Rational> for Real {
    fn from(r: Rational) -> Self {
        Real::from_rational(r)
    }
}

impl<'a> Add<&'a Real> for &'a Real {
    type Output = Real;
    fn add(self, o: &Real) -> Real {
        Real { rat: &self.rat + &o.rat, surd: &self.surd + &o.surd }
    }
}

impl<'a> Sub<&'a Real> for &'a Real {
    type Output = Real;
    fn sub(self, o: &Real) -> Real {
        Real { rat: &self.rat - &o.rat, surd: &self.surd - &o.surd }
    }
}

impl<'a> Mul<&'a Real> for &'a Real {
    type Output = Real;
    fn mul(self, o: &Real) -> Real {
        let two = int(2);
        Real { rat: &self.rat * &o.rat + &self.surd * &o.surd * two, surd: &self.rat * &o.surd + &self.surd * &o.rat }
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real { rat: -self.rat.clone(), surd: -self.surd.clone() }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real { rat: -self.rat, surd: -self.surd }
    }
}

macro_rules! forward_owned_binop {
    ($ty:ty, $tr:ident, $m:ident) => {
        impl $tr<$ty> for $ty {
            type Output = $ty;
            fn $m(self, o: $ty) -> $ty {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a $ty> for $ty {
            type Output = $ty;
            fn $m(self, o: &'a $ty) -> $ty {
                (&self).$m(o)
            }
        }
    };
}

forward_owned_binop!(Real, Add, add);
forward_owned_binop!(Real, Sub, sub);
forward_owned_binop!(Real, Mul, mul);

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_surd(b: &Rational) -> String {
    if b.is_one() {
        "sqrt2".to_string()
    } else if (-b).is_one() {
        "-sqrt2".to_string()
    } else {
        format!("{}*sqrt2", fmt_rational(b))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rat.is_zero(), self.surd.is_zero()) {
            (_, true) => f.write_str(&fmt_rational(&self.rat)),
            (true, false) => f.write_str(&fmt_surd(&self.surd)),
            (false, false) => {
                let s = fmt_surd(&self.surd);
                if s.starts_with('-') {
                    write!(f, "{}{}", fmt_rational(&self.rat), s)
                } else {
                    write!(f, "{}+{}", fmt_rational(&self.rat), s)
                }
            }
        }
    }
}

impl FromStr for Real {
    type Err = ExactError;

    /// Accepts sums of rational terms and `q*sqrt2` terms, e.g. `1/2`,
    /// `-sqrt2`, `1-3/2*sqrt2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(ExactError::Parse(s.to_string()));
        }
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, c) in compact.char_indices() {
            if (c == '+' || c == '-') && i > 0 {
                terms.push(&compact[start..i]);
                start = i;
            }
        }
        terms.push(&compact[start..]);
        let mut out = Real::default();
        for term in terms {
            let (neg, body) = match term.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, term.strip_prefix('+').unwrap_or(term)),
            };
            let mut value = if let Some(coef) = body.strip_suffix("sqrt2") {
                let coef = coef.strip_suffix('*').unwrap_or(coef);
                let q = if coef.is_empty() { Rational::one() } else { parse_rational(coef)? };
                Real::new(Rational::zero(), q)
            } else {
                Real::from_rational(parse_rational(body).map_err(|_| ExactError::Parse(s.to_string()))?)
            };
            if neg {
                value = -value;
            }
            out = out + value;
        }
        Ok(out)
    }
}

/// An exact complex scalar `re + im·i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Scalar {
    re: Real,
    im: Real,
}

impl Scalar {
    pub fn new(re: Real, im: Real) -> Self {
        Scalar { re, im }
    }

    pub fn zero() -> Self {
        Scalar::default()
    }

    pub fn one() -> Self {
        Scalar::from_int(1)
    }

    pub fn i() -> Self {
        Scalar { re: Real::default(), im: Real::from_int(1) }
    }

    pub fn from_int(n: i64) -> Self {
        Scalar { re: Real::from_int(n), im: Real::default() }
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar { re: Real::from_rational(r), im: Real::default() }
    }

    pub fn from_real(r: Real) -> Self {
        Scalar { re: r, im: Real::default() }
    }

    /// Gaussian rational `re + im·i`.
    pub fn gaussian(re: Rational, im: Rational) -> Self {
        Scalar { re: Real::from_rational(re), im: Real::from_rational(im) }
    }

    pub fn re(&self) -> &Real {
        &self.re
    }

    pub fn im(&self) -> &Real {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn to_rational(&self) -> Option<Rational> {
        if self.im.is_zero() {
            self.re.to_rational()
        } else {
            None
        }
    }

    pub fn conj(&self) -> Scalar {
        Scalar { re: self.re.clone(), im: -&self.im }
    }

    /// `|z|^2`, always real.
    pub fn norm_sqr(&self) -> Real {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Scalar, ExactError> {
        let n = self.norm_sqr().inv()?;
        let c = self.conj();
        Ok(Scalar { re: &c.re * &n, im: &c.im * &n })
    }

    pub fn checked_div(&self, o: &Scalar) -> Result<Scalar, ExactError> {
        Ok(self * &o.inv()?)
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::from_rational(r)
    }
}

impl From<Real> for Scalar {
    fn from(r: Real) -> Self {
        Scalar::from_real(r)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        Scalar { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        Scalar { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        Scalar { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    /// Panics on division by zero; use [`Scalar::checked_div`] otherwise.
    fn div(self, o: &Scalar) -> Scalar {
        self.checked_div(o).expect("division by zero scalar")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -&self.re, im: -&self.im }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -self.re, im: -self.im }
    }
}

forward_owned_binop!(Scalar, Add, add);
forward_owned_binop!(Scalar, Sub, sub);
forward_owned_binop!(Scalar, Mul, mul);
forward_owned_binop!(Scalar, Div, div);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        *self = &*self + o;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        *self = &*self - o;
    }
}

impl fmt::Display for Scalar {
    /// Real scalars print bare (`-1/2`, `sqrt2`); complex ones as a pair
    /// `(re,im)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "({},{})", self.re, self.im)
        }
    }
}

impl FromStr for Scalar {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            if let Some((re, im)) = inner.split_once(',') {
                return Ok(Scalar::new(re.parse()?, im.parse()?));
            }
            return Ok(Scalar::from_real(inner.parse()?));
        }
        Ok(Scalar::from_real(t.parse()?))
    }
}

/// Dense square matrix over [`Scalar`], stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    dim: usize,
    data: Vec<Scalar>,
}

impl ExactMatrix {
    pub fn zeros(dim: usize) -> Self {
        ExactMatrix { dim, data: vec![Scalar::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = ExactMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Scalar::one();
        }
        m
    }

    pub fn scalar_identity(dim: usize, s: &Scalar) -> Self {
        let mut m = ExactMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = s.clone();
        }
        m
    }

    pub fn diagonal(entries: Vec<Scalar>) -> Self {
        let dim = entries.len();
        let mut m = ExactMatrix::zeros(dim);
        for (i, e) in entries.into_iter().enumerate() {
            m.data[i * dim + i] = e;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self, ExactError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(ExactError::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(ExactError::Ragged { row, len: r.len(), dim });
            }
            data.extend(r);
        }
        Ok(ExactMatrix { dim, data })
    }

    /// Convenience constructor from integer entries.
    pub fn from_ints(rows: &[&[i64]]) -> Result<Self, ExactError> {
        ExactMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| Scalar::from_int(x)).collect()).collect())
    }

    /// Outer product `u v†`.
    pub fn outer(u: &[Scalar], v: &[Scalar]) -> Result<Self, ExactError> {
        if u.len() != v.len() {
            return Err(ExactError::DimensionMismatch(u.len(), v.len()));
        }
        let dim = u.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in u {
            for b in v {
                data.push(a * &b.conj());
            }
        }
        Ok(ExactMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &Scalar {
        &self.data[row * self.dim + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Scalar]> {
        self.data.chunks(self.dim)
    }

    fn check_dim(&self, other: &ExactMatrix) -> Result<(), ExactError> {
        if self.dim != other.dim {
            return Err(ExactError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn mat_mul(&self, other: &ExactMatrix) -> Result<ExactMatrix, ExactError> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Scalar::zero();
                for k in 0..n {
                    let a = &self.data[i * n + k];
                    let b = &other.data[k * n + j];
                    if !a.is_zero() && !b.is_zero() {
                        acc += &(a * b);
                    }
                }
                data.push(acc);
            }
        }
        Ok(ExactMatrix { dim: n, data })
    }

    pub fn add(&self, other: &ExactMatrix) -> Result<ExactMatrix, ExactError> {
        self.check_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(ExactMatrix { dim: self.dim, data })
    }

    pub fn sub(&self, other: &ExactMatrix) -> Result<ExactMatrix, ExactError> {
        self.check_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(ExactMatrix { dim: self.dim, data })
    }

    pub fn scale(&self, s: &Scalar) -> ExactMatrix {
        ExactMatrix { dim: self.dim, data: self.data.iter().map(|a| a * s).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ExactMatrix {
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(self.data[j * n + i].conj());
            }
        }
        ExactMatrix { dim: n, data }
    }

    pub fn is_hermitian(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (i..n).all(|j| self.data[i * n + j] == self.data[j * n + i].conj()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.scalar_multiple_of_identity().is_some_and(|s| s.is_one())
    }

    /// `Some(s)` iff the matrix equals `s·I`.
    pub fn scalar_multiple_of_identity(&self) -> Option<Scalar> {
        let n = self.dim;
        let s = self.data[0].clone();
        for i in 0..n {
            for j in 0..n {
                let e = &self.data[i * n + j];
                if i == j {
                    if *e != s {
                        return None;
                    }
                } else if !e.is_zero() {
                    return None;
                }
            }
        }
        Some(s)
    }

    /// Exact test of `ab - ba = 0`.
    pub fn commutes(&self, other: &ExactMatrix) -> Result<bool, ExactError> {
        Ok(self.mat_mul(other)? == other.mat_mul(self)?)
    }

    /// Tensor product; the result has dimension `a.dim * b.dim`.
    pub fn kron(&self, other: &ExactMatrix) -> ExactMatrix {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut data = vec![Scalar::zero(); dim * dim];
        for i in 0..n {
            for j in 0..n {
                let a = &self.data[i * n + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        data[(i * m + k) * dim + (j * m + l)] = a * &other.data[k * m + l];
                    }
                }
            }
        }
        ExactMatrix { dim, data }
    }

    pub fn trace(&self) -> Scalar {
        let mut acc = Scalar::zero();
        for i in 0..self.dim {
            acc += &self.data[i * self.dim + i];
        }
        acc
    }

    /// `v† M v`.
    pub fn quadratic_form(&self, v: &[Scalar]) -> Result<Scalar, ExactError> {
        if v.len() != self.dim {
            return Err(ExactError::DimensionMismatch(self.dim, v.len()));
        }
        let n = self.dim;
        let mut acc = Scalar::zero();
        for i in 0..n {
            if v[i].is_zero() {
                continue;
            }
            let mut row = Scalar::zero();
            for (a, x) in self.data[i * n..(i + 1) * n].iter().zip(v) {
                row += &(a * x);
            }
            acc += &(&v[i].conj() * &row);
        }
        Ok(acc)
    }
}

/// Hermitian inner product `u† v`.
pub fn inner(u: &[Scalar], v: &[Scalar]) -> Result<Scalar, ExactError> {
    if u.len() != v.len() {
        return Err(ExactError::DimensionMismatch(u.len(), v.len()));
    }
    let mut acc = Scalar::zero();
    for (a, b) in u.iter().zip(v) {
        acc += &(&a.conj() * b);
    }
    Ok(acc)
}

pub fn mat_mul(a: &ExactMatrix, b: &ExactMatrix) -> Result<ExactMatrix, ExactError> {
    a.mat_mul(b)
}

pub fn commutes(a: &ExactMatrix, b: &ExactMatrix) -> Result<bool, ExactError> {
    a.commutes(b)
}

pub fn kron(a: &ExactMatrix, b: &ExactMatrix) -> ExactMatrix {
    a.kron(b)
}
