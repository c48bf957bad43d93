//! Polynomials in commuting observables with exact coefficients.
//!
//! [`Poly`] is a plain multivariate polynomial keyed by observable id.
//! [`ContextPolynomial`] binds one to a [`Context`] together with the spectra
//! of its variables, so every operation can reduce exponents modulo the
//! variables' minimal polynomials.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::assign::ValueAssignment;
use crate::compat::Context;
use crate::exact::{ExactError, ExactMatrix, Rational, Real, Scalar};
use crate::model::{ObsId, ObservableSet, Spectrum};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable {0} lies outside the polynomial's context")]
    VariableOutsideContext(ObsId),
    #[error("unknown variable {0}")]
    UnknownVariable(ObsId),
    #[error("variable {0} is not assigned")]
    UnassignedVariable(ObsId),
    #[error("contexts {0} and {1} are incompatible")]
    IncompatibleContexts(Context, Context),
    #[error("polynomial vanishes at every spectral assignment")]
    IdenticallyZeroOnAssignments,
    #[error("normalization constant {0} is not rational")]
    IrrationalNormalization(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Product of observable powers, exponents positive, ids increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(ObsId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(id: ObsId) -> Self {
        Monomial(vec![(id, 1)])
    }

    pub fn from_powers(mut powers: Vec<(ObsId, u32)>) -> Self {
        powers.retain(|&(_, e)| e > 0);
        powers.sort();
        let mut out: Vec<(ObsId, u32)> = Vec::with_capacity(powers.len());
        for (id, e) in powers {
            match out.last_mut() {
                Some((last, acc)) if *last == id => *acc += e,
                _ => out.push((id, e)),
            }
        }
        Monomial(out)
    }

    pub fn powers(&self) -> &[(ObsId, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = ObsId> + '_ {
        self.0.iter().map(|&(id, _)| id)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Monomial::from_powers(v)
    }
}

impl Ord for Monomial {
    /// Graded lexicographic with lower ids ranking higher; higher-degree
    /// monomials sort first.
    fn cmp(&self, other: &Self) -> Ordering {
        match other.degree().cmp(&self.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (mut a, mut b) = (self.0.iter(), other.0.iter());
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some(&(ia, ea)), Some(&(ib, eb))) => {
                    if ia != ib {
                        return ia.cmp(&ib);
                    }
                    if ea != eb {
                        return eb.cmp(&ea);
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Where reduction finds each variable's spectrum.
pub trait Spectra {
    fn spectrum_of(&self, id: ObsId) -> Option<&Spectrum>;
}

impl Spectra for ObservableSet {
    fn spectrum_of(&self, id: ObsId) -> Option<&Spectrum> {
        self.get(id).map(|o| o.spectrum())
    }
}

impl Spectra for BTreeMap<ObsId, Spectrum> {
    fn spectrum_of(&self, id: ObsId) -> Option<&Spectrum> {
        self.get(&id)
    }
}

/// A polynomial over observables. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Scalar) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn from_int(n: i64) -> Self {
        Poly::constant(Scalar::from_int(n))
    }

    pub fn var(id: ObsId) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::var(id), Scalar::one());
        p
    }

    pub fn monomial(m: Monomial, c: Scalar) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    /// Product of the given variables, each to the first power.
    pub fn product_of(ids: &[ObsId]) -> Self {
        Poly::monomial(Monomial::from_powers(ids.iter().map(|&i| (i, 1)).collect()), Scalar::one())
    }

    /// Sum of the given variables.
    pub fn sum_of(ids: &[ObsId]) -> Self {
        ids.iter().fold(Poly::zero(), |acc, &i| acc.add(&Poly::var(i)))
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.get(&m) {
            Some(existing) => existing + &c,
            None => c,
        };
        if sum.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Scalar {
        self.coefficient(&Monomial::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<ObsId> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&Scalar::from_int(-1))
    }

    pub fn scale(&self, s: &Scalar) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Raw product, not reduced.
    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::from_int(1), |acc, _| acc.mul(self))
    }

    /// Conjugates coefficients; variables are Hermitian and commute, so
    /// every monomial is self-adjoint.
    pub fn conjugate(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.conj())).collect() }
    }

    /// Rewrites every power `x^e` with `e` at least the degree of `x`'s
    /// minimal polynomial by its remainder modulo that polynomial. Variables
    /// without a known spectrum are left alone.
    pub fn reduce(&self, spectra: &dyn Spectra) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let needs =
                m.powers().iter().any(|&(id, e)| spectra.spectrum_of(id).is_some_and(|s| e as usize >= s.degree()));
            if !needs {
                out.add_term(m.clone(), c.clone());
                continue;
            }
            let mut expanded = Poly::constant(c.clone());
            for &(id, e) in m.powers() {
                let factor = match spectra.spectrum_of(id) {
                    Some(s) if e as usize >= s.degree() => univariate_remainder(id, e, s),
                    _ => Poly::monomial(Monomial(vec![(id, e)]), Scalar::one()),
                };
                expanded = expanded.mul(&factor);
            }
            out = out.add(&expanded);
        }
        out
    }

    /// Replaces each variable for which `f` returns a polynomial.
    pub fn substitute(&self, f: &dyn Fn(ObsId) -> Option<Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for &(id, e) in m.powers() {
                let base = f(id).unwrap_or_else(|| Poly::var(id));
                term = term.mul(&base.pow(e));
            }
            out = out.add(&term);
        }
        out
    }

    /// Value at a point; `value` supplies each variable's number.
    pub fn eval(&self, value: &dyn Fn(ObsId) -> Option<Rational>) -> Result<Scalar, PolyError> {
        let mut acc = Scalar::zero();
        for (m, c) in &self.terms {
            let mut t = Rational::one();
            for &(id, e) in m.powers() {
                let v = value(id).ok_or(PolyError::UnassignedVariable(id))?;
                t *= num_traits::pow(v, e as usize);
            }
            acc += &(c * &Scalar::from_rational(t));
        }
        Ok(acc)
    }

    pub fn eval_assignment(&self, v: &ValueAssignment) -> Result<Scalar, PolyError> {
        self.eval(&|id| v.get(id).cloned())
    }

    /// Substitutes operators for variables, multiplying the factors of each
    /// monomial in increasing id order. For polynomials over a context the
    /// order is irrelevant.
    pub fn eval_operator(&self, set: &ObservableSet) -> Result<ExactMatrix, PolyError> {
        let n = set.dim();
        let mut acc = ExactMatrix::zeros(n);
        for (m, c) in &self.terms {
            let mut term = ExactMatrix::identity(n);
            for &(id, e) in m.powers() {
                let op = set.get(id).ok_or(PolyError::UnknownVariable(id))?.matrix();
                for _ in 0..e {
                    term = term.mat_mul(op)?;
                }
            }
            acc = acc.add(&term.scale(c))?;
        }
        Ok(acc)
    }

    /// Canonical text: graded-lex term order, `*` between factors, `^` for
    /// powers, complex coefficients as `(re,im)` pairs.
    pub fn render(&self, name: &dyn Fn(ObsId) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_real() && c.re().signum() < 0;
            let mag = if negative { -c } else { c.clone() };
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let factors: Vec<String> = m
                .powers()
                .iter()
                .map(|&(id, e)| if e == 1 { name(id) } else { format!("{}^{}", name(id), e) })
                .collect();
            let coef = render_coefficient(&mag);
            if factors.is_empty() {
                out.push_str(&coef);
            } else if mag.is_one() {
                out.push_str(&factors.join("*"));
            } else {
                out.push_str(&coef);
                out.push('*');
                out.push_str(&factors.join("*"));
            }
        }
        out
    }

    /// Parses the text produced by [`Poly::render`] and ordinary arithmetic
    /// on top of it. Variables are `A<k>` or `P<k>` with one-based `k`.
    pub fn parse(text: &str) -> Result<Poly, PolyError> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(out)
    }
}

fn render_coefficient(c: &Scalar) -> String {
    if !c.is_real() {
        return c.to_string();
    }
    let re = c.re();
    if !re.rational_part().is_zero() && !re.surd_part().is_zero() {
        format!("({re})")
    } else {
        re.to_string()
    }
}

/// `x^e mod m(x)` as a polynomial in `id`.
fn univariate_remainder(id: ObsId, e: u32, spectrum: &Spectrum) -> Poly {
    let m = spectrum.minimal_polynomial();
    let d = m.len() - 1;
    let mut r = vec![Rational::zero(); d];
    if d == 0 {
        return Poly::zero();
    }
    r[0] = Rational::one();
    for _ in 0..e {
        // multiply by x, then fold x^d back using the monic minimal polynomial
        let top = r[d - 1].clone();
        for k in (1..d).rev() {
            r[k] = r[k - 1].clone();
        }
        r[0] = Rational::zero();
        if !top.is_zero() {
            for k in 0..d {
                r[k] -= &top * &m[k];
            }
        }
    }
    let mut out = Poly::zero();
    for (k, c) in r.into_iter().enumerate() {
        let mono = Monomial::from_powers(vec![(id, k as u32)]);
        out.add_term(mono, Scalar::from_rational(c));
    }
    out
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|id| format!("A{id}")))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.unary()?;
        while self.eat(b'*') {
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly, PolyError> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.integer()?;
            let e = u32::try_from(e).map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<num_bigint::BigInt, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(s.parse().expect("digits"))
    }

    fn atom(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let first = self.expr()?;
                if self.eat(b',') {
                    let second = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected `)`"));
                    }
                    if !first.is_constant() || !second.is_constant() {
                        return Err(self.err("complex pair must be constant"));
                    }
                    let re = first.constant_term();
                    let im = second.constant_term();
                    return Ok(Poly::constant(re + im * Scalar::i()));
                }
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(first)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                let mut q = Rational::from_integer(n);
                if self.eat(b'/') {
                    let d = self.integer()?;
                    if d.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                    q /= Rational::from_integer(d);
                }
                Ok(Poly::constant(Scalar::from_rational(q)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if word == "sqrt" {
                    if self.src.get(self.pos) == Some(&b'2') {
                        self.pos += 1;
                        return Ok(Poly::constant(Scalar::from_real(Real::sqrt2())));
                    }
                    return Err(self.err("only sqrt2 is supported"));
                }
                if word != "A" && word != "P" {
                    self.pos = start;
                    return Err(self.err("expected variable A<k> or P<k>"));
                }
                if !self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    return Err(self.err("expected variable number"));
                }
                let n = self.integer()?;
                let id = usize::try_from(&n)
                    .ok()
                    .and_then(ObsId::from_number)
                    .ok_or_else(|| self.err("variable numbers start at 1"))?;
                Ok(Poly::var(id))
            }
            _ => Err(self.err("unexpected token")),
        }
    }
}

/// Calls `f` on every assignment of `vars` drawn from their spectra, in
/// odometer order (last variable fastest).
pub(crate) fn for_each_assignment(
    vars: &[ObsId],
    spectra: &dyn Spectra,
    mut f: impl FnMut(&dyn Fn(ObsId) -> Option<Rational>),
) -> Result<(), PolyError> {
    let domains: Vec<&[Rational]> = vars
        .iter()
        .map(|&v| spectra.spectrum_of(v).map(|s| s.values()).ok_or(PolyError::UnknownVariable(v)))
        .collect::<Result<_, _>>()?;
    let mut idx = vec![0usize; vars.len()];
    loop {
        let lookup = |id: ObsId| vars.iter().position(|&v| v == id).map(|k| domains[k][idx[k]].clone());
        f(&lookup);
        let mut k = vars.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// A polynomial in the observables of one context, with the spectra needed
/// to keep it reduced and a normalization constant `c` (1 until
/// [`ContextPolynomial::normalized`] is called).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPolynomial {
    context: Context,
    poly: Poly,
    spectra: BTreeMap<ObsId, Spectrum>,
    normalization: Rational,
}

impl ContextPolynomial {
    pub fn new(set: &ObservableSet, context: Context, poly: Poly) -> Result<Self, PolyError> {
        let mut spectra = BTreeMap::new();
        for &id in context.members() {
            let obs = set.get(id).ok_or(PolyError::UnknownVariable(id))?;
            spectra.insert(id, obs.spectrum().clone());
        }
        if let Some(&bad) = poly.variables().iter().find(|&&v| !context.contains(v)) {
            return Err(PolyError::VariableOutsideContext(bad));
        }
        let poly = poly.reduce(&spectra);
        Ok(ContextPolynomial { context, poly, spectra, normalization: Rational::one() })
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn normalization(&self) -> &Rational {
        &self.normalization
    }

    pub fn spectra(&self) -> &BTreeMap<ObsId, Spectrum> {
        &self.spectra
    }

    fn combine_context(&self, other: &ContextPolynomial) -> Result<(Context, BTreeMap<ObsId, Spectrum>), PolyError> {
        let mut spectra = self.spectra.clone();
        spectra.extend(other.spectra.iter().map(|(k, v)| (*k, v.clone())));
        if other.poly.variables().iter().all(|&v| self.context.contains(v)) {
            Ok((self.context.clone(), spectra))
        } else if self.poly.variables().iter().all(|&v| other.context.contains(v)) {
            Ok((other.context.clone(), spectra))
        } else {
            Err(PolyError::IncompatibleContexts(self.context.clone(), other.context.clone()))
        }
    }

    fn with_poly(context: Context, spectra: BTreeMap<ObsId, Spectrum>, poly: Poly) -> Self {
        let poly = poly.reduce(&spectra);
        ContextPolynomial { context, poly, spectra, normalization: Rational::one() }
    }

    pub fn add(&self, other: &ContextPolynomial) -> Result<Self, PolyError> {
        let (ctx, spectra) = self.combine_context(other)?;
        Ok(Self::with_poly(ctx, spectra, self.poly.add(&other.poly)))
    }

    pub fn sub(&self, other: &ContextPolynomial) -> Result<Self, PolyError> {
        let (ctx, spectra) = self.combine_context(other)?;
        Ok(Self::with_poly(ctx, spectra, self.poly.sub(&other.poly)))
    }

    pub fn mul(&self, other: &ContextPolynomial) -> Result<Self, PolyError> {
        let (ctx, spectra) = self.combine_context(other)?;
        Ok(Self::with_poly(ctx, spectra, self.poly.mul(&other.poly)))
    }

    pub fn conjugate(&self) -> Self {
        ContextPolynomial { poly: self.poly.conjugate(), ..self.clone() }
    }

    /// Idempotent; stored polynomials are always reduced already.
    pub fn reduce(&self) -> Self {
        ContextPolynomial { poly: self.poly.reduce(&self.spectra), ..self.clone() }
    }

    pub fn eval_operator(&self, set: &ObservableSet) -> Result<ExactMatrix, PolyError> {
        self.poly.eval_operator(set)
    }

    pub fn eval_assignment(&self, v: &ValueAssignment) -> Result<Scalar, PolyError> {
        self.poly.eval_assignment(v)
    }

    /// Minimum of `|p(v)|^2` over spectral assignments where `p(v) != 0`.
    pub fn normalization_constant(&self) -> Result<Rational, PolyError> {
        let vars: Vec<ObsId> = self.poly.variables().into_iter().collect();
        let mut best: Option<Real> = None;
        let mut failure = None;
        for_each_assignment(&vars, &self.spectra, |value| match self.poly.eval(value) {
            Ok(s) if !s.is_zero() => {
                let n = s.norm_sqr();
                if best.as_ref().is_none_or(|b| n < *b) {
                    best = Some(n);
                }
            }
            Ok(_) => {}
            Err(e) => failure = Some(e),
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        let best = best.ok_or(PolyError::IdenticallyZeroOnAssignments)?;
        best.to_rational().ok_or_else(|| PolyError::IrrationalNormalization(best.to_string()))
    }

    /// Same polynomial with `c` set to its normalization constant.
    pub fn normalized(&self) -> Result<Self, PolyError> {
        let c = self.normalization_constant()?;
        Ok(ContextPolynomial { normalization: c, ..self.clone() })
    }

    /// `p† p / c`, reduced. `√c` never appears.
    pub fn normalized_square(&self) -> Result<Self, PolyError> {
        let c = self.normalization_constant()?;
        let sq = self.poly.conjugate().mul(&self.poly).reduce(&self.spectra);
        let inv = Scalar::from_rational(Rational::one() / c);
        Ok(ContextPolynomial {
            context: self.context.clone(),
            poly: sq.scale(&inv),
            spectra: self.spectra.clone(),
            normalization: Rational::one(),
        })
    }

    pub fn render(&self, set: &ObservableSet) -> String {
        self.poly.render(&|id| set.symbol(id))
    }
}
