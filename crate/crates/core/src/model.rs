//! Observables, rays and the observable set a proof is stated over.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::compat::Context;
use crate::exact::{inner, int, ExactError, ExactMatrix, Rational, Scalar};

/// Index of an observable inside its [`ObservableSet`]. Stored zero-based,
/// displayed one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsId(pub usize);

impl ObsId {
    pub fn index(self) -> usize {
        self.0
    }

    /// One-based number used in rendered output and input files.
    pub fn number(self) -> usize {
        self.0 + 1
    }

    pub fn from_number(n: usize) -> Option<ObsId> {
        n.checked_sub(1).map(ObsId)
    }
}

impl fmt::Display for ObsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("matrix is not Hermitian")]
    NonHermitian,
    #[error("declared spectrum does not annihilate the operator")]
    AnnihilationFailure,
    #[error("declared value {0} is not an eigenvalue")]
    SpuriousEigenvalue(String),
    #[error("spectrum value {0} declared twice")]
    RepeatedEigenvalue(String),
    #[error("empty spectrum")]
    EmptySpectrum,
    #[error("spectrum must be declared (operator is neither idempotent nor involutory)")]
    SpectrumRequired,
    #[error("ray vector is zero")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("observable {new} duplicates observable {existing}")]
    DuplicateObservable { existing: ObsId, new: ObsId },
    #[error("invalid Pauli string `{0}`")]
    BadPauli(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Distinct eigenvalues of an observable, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Spectrum(Vec<Rational>);

impl Spectrum {
    pub fn new(mut values: Vec<Rational>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptySpectrum);
        }
        values.sort();
        if let Some(w) = values.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::RepeatedEigenvalue(w[0].to_string()));
        }
        Ok(Spectrum(values))
    }

    pub fn from_ints(values: &[i64]) -> Result<Self, ModelError> {
        Spectrum::new(values.iter().map(|&v| int(v)).collect())
    }

    pub fn dichotomic() -> Self {
        Spectrum(vec![int(-1), int(1)])
    }

    pub fn binary() -> Self {
        Spectrum(vec![int(0), int(1)])
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    /// Degree of the minimal polynomial.
    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: &Rational) -> bool {
        self.0.binary_search(v).is_ok()
    }

    pub fn is_dichotomic(&self) -> bool {
        *self == Spectrum::dichotomic()
    }

    pub fn is_binary(&self) -> bool {
        *self == Spectrum::binary()
    }

    /// Search value order: `+1` before `-1` for dichotomic observables,
    /// ascending otherwise (so `0` before `1` for projectors).
    pub fn search_order(&self) -> Vec<Rational> {
        if self.is_dichotomic() {
            vec![int(1), int(-1)]
        } else {
            self.0.clone()
        }
    }

    /// Coefficients of `prod_j (x - a_j)`, lowest degree first; monic.
    pub fn minimal_polynomial(&self) -> Vec<Rational> {
        let mut coeffs = vec![Rational::one()];
        for a in &self.0 {
            let mut next = vec![Rational::zero(); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * a;
            }
            coeffs = next;
        }
        coeffs
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `prod_{j in keep} (M - a_j I)`.
fn spectral_product<'a>(m: &ExactMatrix, values: impl Iterator<Item = &'a Rational>) -> ExactMatrix {
    let n = m.dim();
    let mut acc = ExactMatrix::identity(n);
    for a in values {
        let shifted =
            m.sub(&ExactMatrix::scalar_identity(n, &Scalar::from_rational(a.clone()))).expect("same dimension");
        acc = acc.mat_mul(&shifted).expect("same dimension");
    }
    acc
}

/// Checks that `spectrum` is exactly the set of eigenvalues of `m`: the
/// product over all values annihilates `m` and dropping any one value does
/// not.
pub fn check_spectrum(m: &ExactMatrix, spectrum: &Spectrum) -> Result<(), ModelError> {
    if !spectrum_product_is_zero(m, spectrum.values().iter()) {
        return Err(ModelError::AnnihilationFailure);
    }
    for (j, a) in spectrum.values().iter().enumerate() {
        let rest = spectrum.values().iter().enumerate().filter(|&(k, _)| k != j).map(|(_, v)| v);
        if spectrum_product_is_zero(m, rest) {
            return Err(ModelError::SpuriousEigenvalue(a.to_string()));
        }
    }
    Ok(())
}

fn spectrum_product_is_zero<'a>(m: &ExactMatrix, values: impl Iterator<Item = &'a Rational>) -> bool {
    spectral_product(m, values).is_zero()
}

/// Finds the spectrum of an idempotent or involutory matrix.
pub fn detect_spectrum(m: &ExactMatrix) -> Result<Spectrum, ModelError> {
    let n = m.dim();
    let sq = m.mat_mul(m)?;
    if sq == *m {
        if m.is_zero() {
            return Spectrum::from_ints(&[0]);
        }
        if *m == ExactMatrix::identity(n) {
            return Spectrum::from_ints(&[1]);
        }
        return Ok(Spectrum::binary());
    }
    if sq == ExactMatrix::identity(n) {
        if *m == ExactMatrix::identity(n) {
            return Spectrum::from_ints(&[1]);
        }
        if *m == ExactMatrix::identity(n).scale(&Scalar::from_int(-1)) {
            return Spectrum::from_ints(&[-1]);
        }
        return Ok(Spectrum::dichotomic());
    }
    Err(ModelError::SpectrumRequired)
}

/// A rank-one projector given by an unnormalized vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ray {
    vector: Vec<Scalar>,
    projector: ExactMatrix,
}

impl Ray {
    pub fn vector(&self) -> &[Scalar] {
        &self.vector
    }

    pub fn projector(&self) -> &ExactMatrix {
        &self.projector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn is_orthogonal(&self, other: &Ray) -> Result<bool, ExactError> {
        Ok(inner(&self.vector, &other.vector)?.is_zero())
    }
}

/// Builds the projector `v v† / (v† v)`.
pub fn make_ray(vector: Vec<Scalar>) -> Result<Ray, ModelError> {
    if vector.is_empty() || vector.iter().all(Scalar::is_zero) {
        return Err(ModelError::ZeroVector);
    }
    let norm = inner(&vector, &vector)?;
    let projector = ExactMatrix::outer(&vector, &vector)?.scale(&norm.inv()?);
    Ok(Ray { vector, projector })
}

/// How an observable was specified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservableKind {
    Ray(Ray),
    Pauli(String),
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    id: ObsId,
    matrix: ExactMatrix,
    spectrum: Spectrum,
    label: String,
    kind: ObservableKind,
}

impl Observable {
    pub fn id(&self) -> ObsId {
        self.id
    }

    pub fn matrix(&self) -> &ExactMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn ray(&self) -> Option<&Ray> {
        match &self.kind {
            ObservableKind::Ray(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_ray(&self) -> bool {
        self.ray().is_some()
    }

    pub fn is_dichotomic(&self) -> bool {
        self.spectrum.is_dichotomic()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Symbol used when rendering polynomials: `P` for rays, `A` otherwise.
    pub fn symbol(&self) -> String {
        let prefix = if self.is_ray() { "P" } else { "A" };
        format!("{prefix}{}", self.id)
    }
}

/// Validates `matrix` and its spectrum. With no spectrum given, only
/// idempotent and involutory operators are accepted.
pub fn make_observable(matrix: ExactMatrix, spectrum: Option<Spectrum>) -> Result<Observable, ModelError> {
    if !matrix.is_hermitian() {
        return Err(ModelError::NonHermitian);
    }
    let spectrum = match spectrum {
        Some(s) => {
            check_spectrum(&matrix, &s)?;
            s
        }
        None => detect_spectrum(&matrix)?,
    };
    Ok(Observable { id: ObsId(0), matrix, spectrum, label: String::new(), kind: ObservableKind::Matrix })
}

pub fn ray_observable(ray: Ray) -> Observable {
    let matrix = ray.projector.clone();
    let spectrum = detect_spectrum(&matrix).expect("projectors are idempotent");
    Observable { id: ObsId(0), matrix, spectrum, label: String::new(), kind: ObservableKind::Ray(ray) }
}

/// The `{-1, 1}` observable `I - 2P`.
pub fn dichotomize(ray: &Ray) -> Observable {
    let n = ray.dim();
    let matrix = ExactMatrix::identity(n).sub(&ray.projector.scale(&Scalar::from_int(2))).expect("same dimension");
    let spectrum = detect_spectrum(&matrix).expect("I - 2P is involutory");
    Observable { id: ObsId(0), matrix, spectrum, label: String::new(), kind: ObservableKind::Matrix }
}

pub fn pauli_matrix(letter: char) -> Option<ExactMatrix> {
    let z = Scalar::zero;
    let one = Scalar::one;
    let rows = match letter {
        'I' => vec![vec![one(), z()], vec![z(), one()]],
        'X' => vec![vec![z(), one()], vec![one(), z()]],
        'Y' => vec![vec![z(), -Scalar::i()], vec![Scalar::i(), z()]],
        'Z' => vec![vec![one(), z()], vec![z(), -one()]],
        _ => return None,
    };
    Some(ExactMatrix::from_rows(rows).expect("2x2"))
}

/// Parses a signed Pauli word such as `+XY` or `-ZZI` into its tensor
/// product, leftmost letter acting on the most significant factor.
pub fn parse_pauli(word: &str) -> Result<ExactMatrix, ModelError> {
    let bad = || ModelError::BadPauli(word.to_string());
    let w = word.trim();
    let (sign, letters) = match w.chars().next() {
        Some('+') => (1, &w[1..]),
        Some('-') => (-1, &w[1..]),
        _ => (1, w),
    };
    if letters.is_empty() {
        return Err(bad());
    }
    let mut acc: Option<ExactMatrix> = None;
    for c in letters.chars() {
        let m = pauli_matrix(c).ok_or_else(bad)?;
        acc = Some(match acc {
            None => m,
            Some(a) => a.kron(&m),
        });
    }
    Ok(acc.expect("non-empty").scale(&Scalar::from_int(sign)))
}

pub fn pauli_observable(word: &str) -> Result<Observable, ModelError> {
    let matrix = parse_pauli(word)?;
    let mut obs = make_observable(matrix, None)?;
    let canonical = if word.starts_with(['+', '-']) { word.to_string() } else { format!("+{word}") };
    obs.kind = ObservableKind::Pauli(canonical);
    Ok(obs)
}

/// The set of observables a proof is stated over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservableSet {
    dim: usize,
    observables: Vec<Observable>,
    declared_contexts: Option<Vec<Context>>,
}

impl ObservableSet {
    pub fn new(dim: usize) -> Self {
        ObservableSet { dim, observables: Vec::new(), declared_contexts: None }
    }

    /// Builds a set from ray vectors, rejecting duplicates.
    pub fn from_rays(dim: usize, vectors: Vec<Vec<Scalar>>) -> Result<Self, ModelError> {
        let mut set = ObservableSet::new(dim);
        for v in vectors {
            set.push(ray_observable(make_ray(v)?))?;
        }
        Ok(set)
    }

    pub fn from_int_rays(dim: usize, vectors: &[&[i64]]) -> Result<Self, ModelError> {
        ObservableSet::from_rays(
            dim,
            vectors.iter().map(|v| v.iter().map(|&x| Scalar::from_int(x)).collect()).collect(),
        )
    }

    pub fn from_paulis(words: &[&str]) -> Result<Self, ModelError> {
        let first = words.first().ok_or_else(|| ModelError::BadPauli(String::new()))?;
        let dim = parse_pauli(first)?.dim();
        let mut set = ObservableSet::new(dim);
        for w in words {
            set.push(pauli_observable(w)?)?;
        }
        Ok(set)
    }

    /// Appends an observable, assigning it the next id. Observables are
    /// re-verified here: a set never holds an observable whose spectrum
    /// fails the annihilation check.
    pub fn push(&mut self, mut obs: Observable) -> Result<ObsId, ModelError> {
        if obs.matrix.dim() != self.dim {
            return Err(ModelError::DimensionMismatch { expected: self.dim, found: obs.matrix.dim() });
        }
        if !obs.matrix.is_hermitian() {
            return Err(ModelError::NonHermitian);
        }
        check_spectrum(&obs.matrix, &obs.spectrum)?;
        let id = ObsId(self.observables.len());
        if let Some(existing) = self.observables.iter().find(|o| o.matrix == obs.matrix) {
            return Err(ModelError::DuplicateObservable { existing: existing.id, new: id });
        }
        obs.id = id;
        self.observables.push(obs);
        Ok(id)
    }

    pub fn set_declared_contexts(&mut self, contexts: Vec<Context>) {
        self.declared_contexts = Some(contexts);
    }

    pub fn declared_contexts(&self) -> Option<&[Context]> {
        self.declared_contexts.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn get(&self, id: ObsId) -> Option<&Observable> {
        self.observables.get(id.0)
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn ids(&self) -> impl Iterator<Item = ObsId> + '_ {
        (0..self.observables.len()).map(ObsId)
    }

    pub fn all_rays(&self) -> bool {
        !self.is_empty() && self.observables.iter().all(Observable::is_ray)
    }

    pub fn all_dichotomic(&self) -> bool {
        !self.is_empty() && self.observables.iter().all(Observable::is_dichotomic)
    }

    pub fn symbol(&self, id: ObsId) -> String {
        match self.get(id) {
            Some(o) => o.symbol(),
            None => format!("A{id}"),
        }
    }

    /// Same set with every ray replaced by `I - 2P`; ids are preserved.
    pub fn dichotomized(&self) -> ObservableSet {
        let observables = self
            .observables
            .iter()
            .map(|o| match o.ray() {
                Some(r) => {
                    let mut d = dichotomize(r).with_label(o.label.clone());
                    d.id = o.id;
                    d
                }
                None => o.clone(),
            })
            .collect();
        ObservableSet { dim: self.dim, observables, declared_contexts: self.declared_contexts.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational;

    fn ints(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| Scalar::from_int(x)).collect()
    }

    #[test]
    fn zz_is_dichotomic() {
        let zz = parse_pauli("ZZ").unwrap();
        let obs = make_observable(zz.clone(), Some(Spectrum::from_ints(&[-1, 1]).unwrap())).unwrap();
        assert_eq!(obs.spectrum().degree(), 2);
        // (M - I)(M + I) = 0
        let id = ExactMatrix::identity(4);
        assert!(zz.sub(&id).unwrap().mat_mul(&zz.add(&id).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn identity_has_degree_one() {
        let obs = make_observable(ExactMatrix::identity(3), Some(Spectrum::from_ints(&[1]).unwrap())).unwrap();
        assert_eq!(obs.spectrum().degree(), 1);
        let auto = make_observable(ExactMatrix::identity(3), None).unwrap();
        assert_eq!(auto.spectrum().values(), &[int(1)]);
    }

    #[test]
    fn x_is_not_a_projector() {
        let x = parse_pauli("X").unwrap();
        let err = make_observable(x, Some(Spectrum::binary())).unwrap_err();
        assert_eq!(err, ModelError::AnnihilationFailure);
    }

    #[test]
    fn spurious_value_rejected() {
        let z = parse_pauli("Z").unwrap();
        let err = make_observable(z, Some(Spectrum::from_ints(&[-1, 0, 1]).unwrap())).unwrap_err();
        assert_eq!(err, ModelError::SpuriousEigenvalue("0".into()));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = parse_pauli("Z").unwrap().scale(&Scalar::i());
        assert_eq!(make_observable(m, None).unwrap_err(), ModelError::NonHermitian);
    }

    #[test]
    fn spectrum_required_for_general_operators() {
        let m = ExactMatrix::diagonal(ints(&[0, 1, 2]));
        assert_eq!(make_observable(m.clone(), None).unwrap_err(), ModelError::SpectrumRequired);
        let obs = make_observable(m, Some(Spectrum::from_ints(&[2, 0, 1]).unwrap())).unwrap();
        assert_eq!(obs.spectrum().values(), &[int(0), int(1), int(2)]);
    }

    #[test]
    fn ray_projectors() {
        let r = make_ray(ints(&[1, 0, 0])).unwrap();
        assert_eq!(r.projector(), &ExactMatrix::diagonal(ints(&[1, 0, 0])));
        let r = make_ray(ints(&[1, 1, 0])).unwrap();
        let half = Scalar::from_rational(rational(1, 2));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i < 2 && j < 2 { half.clone() } else { Scalar::zero() };
                assert_eq!(r.projector().get(i, j), &expect);
            }
        }
        let p = r.projector();
        assert_eq!(&p.mat_mul(p).unwrap(), p);
        assert_eq!(&p.adjoint(), p);
        assert_eq!(make_ray(ints(&[2, 0, 0])).unwrap().projector(), make_ray(ints(&[1, 0, 0])).unwrap().projector());
        assert_eq!(make_ray(ints(&[0, 0, 0])).unwrap_err(), ModelError::ZeroVector);
    }

    #[test]
    fn complex_ray_projector() {
        let v = vec![Scalar::one(), Scalar::i()];
        let r = make_ray(v).unwrap();
        let p = r.projector();
        assert_eq!(&p.mat_mul(p).unwrap(), p);
        assert!(p.is_hermitian());
        assert_eq!(p.trace(), Scalar::one());
    }

    #[test]
    fn dichotomize_ray() {
        let r = make_ray(ints(&[1, 0, 0])).unwrap();
        let a = dichotomize(&r);
        assert_eq!(a.matrix(), &ExactMatrix::diagonal(ints(&[-1, 1, 1])));
        assert!(a.is_dichotomic());
        let r = make_ray(ints(&[1, -1, 1])).unwrap();
        let a = dichotomize(&r);
        assert_eq!(a.matrix().mat_mul(a.matrix()).unwrap(), ExactMatrix::identity(3));
        // P = (I - A)/2
        let back = ExactMatrix::identity(3).sub(a.matrix()).unwrap().scale(&Scalar::from_rational(rational(1, 2)));
        assert_eq!(&back, r.projector());
    }

    #[test]
    fn dichotomize_in_dimension_one() {
        let r = make_ray(ints(&[3])).unwrap();
        let a = dichotomize(&r);
        assert_eq!(a.spectrum().values(), &[int(-1)]);
    }

    #[test]
    fn duplicate_rays_rejected() {
        let err = ObservableSet::from_int_rays(3, &[&[1, 0, 0], &[0, 1, 0], &[-2, 0, 0]]).unwrap_err();
        assert_eq!(err, ModelError::DuplicateObservable { existing: ObsId(0), new: ObsId(2) });
    }

    #[test]
    fn set_dimension_checked() {
        let mut set = ObservableSet::new(4);
        let r = ray_observable(make_ray(ints(&[1, 0, 0])).unwrap());
        assert_eq!(set.push(r).unwrap_err(), ModelError::DimensionMismatch { expected: 4, found: 3 });
    }

    #[test]
    fn pauli_words() {
        let m = parse_pauli("-XY").unwrap();
        assert_eq!(m.dim(), 4);
        let obs = pauli_observable("XX").unwrap();
        assert!(obs.is_dichotomic());
        assert_eq!(obs.kind(), &ObservableKind::Pauli("+XX".into()));
        assert!(parse_pauli("+XQ").is_err());
        assert!(parse_pauli("+").is_err());
    }

    #[test]
    fn minimal_polynomial_coefficients() {
        // (x - 0)(x - 1) = x^2 - x
        assert_eq!(Spectrum::binary().minimal_polynomial(), vec![int(0), int(-1), int(1)]);
        // (x + 1)(x - 1) = x^2 - 1
        assert_eq!(Spectrum::dichotomic().minimal_polynomial(), vec![int(-1), int(0), int(1)]);
    }
}
