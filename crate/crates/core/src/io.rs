//! Proof files and exported inequality records.
//!
//! Inputs are TOML documents with an explicit `dim` header:
//!
//! ```toml
//! dim = 4
//! mode = "parity"                 # ray | bases-only | parity | general | auto
//! contexts = [[1, 2, 3], [4, 5, 6]]  # one-based observable numbers
//!
//! [[observable]]
//! pauli = "XI"                    # signed word over I, X, Y, Z
//!
//! [[observable]]
//! ray = [1, "-sqrt2", "(0,1)"]    # unnormalized vector
//!
//! [[observable]]
//! matrix = [[1, 0], [0, -1]]
//! spectrum = [-1, 1]              # optional for matrices
//!
//! [[polynomial]]                  # optional user-supplied complete set
//! context = [1, 2]
//! expr = "P1*P2"
//! ```
//!
//! Scalars are integers or strings: `3/4`, `1-sqrt2`, `(re,im)`. An exported
//! record is the canonical input document plus a `[derivation]` table, so it
//! can be re-imported and re-derived.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compat::{validate_context, Context};
use crate::exact::{parse_rational, ExactMatrix, Rational, Scalar};
use crate::model::{make_observable, make_ray, pauli_observable, ray_observable, ObsId, ObservableSet, Spectrum};
use crate::poly::{ContextPolynomial, Poly};

/// A located input problem.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {message}")]
pub struct InputError {
    pub location: String,
    pub message: String,
}

impl InputError {
    fn at(location: impl Into<String>, message: impl fmt::Display) -> Self {
        InputError { location: location.into(), message: message.to_string() }
    }
}

/// Which construction a file asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ray,
    BasesOnly,
    Parity,
    General,
    #[default]
    Auto,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ray => "ray",
            Mode::BasesOnly => "bases-only",
            Mode::Parity => "parity",
            Mode::General => "general",
            Mode::Auto => "auto",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ray" => Ok(Mode::Ray),
            "bases-only" => Ok(Mode::BasesOnly),
            "parity" => Ok(Mode::Parity),
            "general" => Ok(Mode::General),
            "auto" => Ok(Mode::Auto),
            other => Err(format!("unknown mode '{other}' (expected ray, bases-only, parity, general or auto)")),
        }
    }
}

/// A number written either as a TOML integer or as exact text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Text(String),
}

impl Number {
    fn scalar(&self) -> Result<Scalar, String> {
        match self {
            Number::Int(n) => Ok(Scalar::from_int(*n)),
            Number::Text(t) => t.parse().map_err(|e| format!("bad scalar '{t}': {e}")),
        }
    }

    fn rational(&self) -> Result<Rational, String> {
        match self {
            Number::Int(n) => Ok(Rational::from_integer((*n).into())),
            Number::Text(t) => parse_rational(t).map_err(|e| format!("bad rational '{t}': {e}")),
        }
    }

    /// Integers stay integers, everything else becomes canonical text.
    fn from_scalar(s: &Scalar) -> Number {
        match s.to_rational() {
            Some(q) if q.is_integer() => match i64::try_from(q.to_integer()) {
                Ok(n) => Number::Int(n),
                Err(_) => Number::Text(s.to_string()),
            },
            _ => Number::Text(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDecl {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ray: Option<Vec<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<Number>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<Number>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialDecl {
    pub context: Vec<usize>,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRecord {
    pub nodes: u64,
    pub propagations: u64,
    pub conflicts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialRecord {
    pub context: Vec<usize>,
    pub poly: String,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hashes {
    /// SHA-256 of the canonical input document.
    pub input: String,
    pub f: String,
    pub score: String,
}

/// Machine-readable outcome of a derivation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivationRecord {
    pub verdict: String,
    pub method: String,
    pub provenance: String,
    pub form: String,
    pub polynomial_count: usize,
    pub f: String,
    pub score: String,
    pub scale: String,
    pub offset: String,
    pub classical_bound: String,
    /// `certified` (F <= -1 by exhaustive search) or `exact`.
    pub bound_kind: String,
    pub quantum_value: String,
    pub inequality: String,
    pub rendering: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchRecord>,
    pub hashes: Hashes,
    pub complete_set: Vec<PolynomialRecord>,
}

/// A proof input document, optionally carrying an exported derivation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dim: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contexts: Option<Vec<Vec<usize>>>,
    #[serde(rename = "observable", default)]
    pub observables: Vec<ObservableDecl>,
    #[serde(rename = "polynomial", default, skip_serializing_if = "Vec::is_empty")]
    pub polynomials: Vec<PolynomialDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<DerivationRecord>,
}

/// Model objects built from a [`ProofFile`].
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ProofFile,
    pub set: ObservableSet,
    pub contexts: Vec<Context>,
    pub polynomials: Vec<ContextPolynomial>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

fn ids_from_numbers(numbers: &[usize], count: usize, location: &str) -> Result<Vec<ObsId>, InputError> {
    numbers
        .iter()
        .map(|&n| {
            ObsId::from_number(n)
                .filter(|id| id.0 < count)
                .ok_or_else(|| InputError::at(location, format!("observable number {n} out of range 1..={count}")))
        })
        .collect()
}

impl ProofFile {
    pub fn parse(text: &str) -> Result<ProofFile, InputError> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("line {line}, column {col}")
                }
                None => "document".to_string(),
            };
            InputError::at(location, e.message())
        })
    }

    pub fn read(path: &std::path::Path) -> Result<ProofFile, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::at(path.display().to_string(), e))?;
        ProofFile::parse(&text).map_err(|e| InputError::at(format!("{}: {}", path.display(), e.location), e.message))
    }

    /// Same document with scalars and words in canonical spelling and no
    /// derivation.
    pub fn canonical(&self) -> Result<ProofFile, InputError> {
        let loaded = self.load()?;
        let observables = self
            .observables
            .iter()
            .zip(loaded.set.observables())
            .map(|(decl, obs)| {
                let mut out = ObservableDecl { label: decl.label.clone(), ..Default::default() };
                if let Some(p) = &decl.pauli {
                    out.pauli = Some(p.trim().to_string());
                } else if let Some(r) = obs.ray() {
                    out.ray = Some(r.vector().iter().map(Number::from_scalar).collect());
                } else {
                    let m = obs.matrix();
                    out.matrix = Some(
                        (0..m.dim())
                            .map(|i| (0..m.dim()).map(|j| Number::from_scalar(m.get(i, j))).collect())
                            .collect(),
                    );
                }
                if decl.spectrum.is_some() {
                    out.spectrum = Some(
                        obs.spectrum()
                            .values()
                            .iter()
                            .map(|v| Number::from_scalar(&Scalar::from_rational(v.clone())))
                            .collect(),
                    );
                }
                out
            })
            .collect();
        let polynomials = self
            .polynomials
            .iter()
            .zip(&loaded.polynomials)
            .map(|(decl, p)| PolynomialDecl { context: decl.context.clone(), expr: p.render(&loaded.set) })
            .collect();
        Ok(ProofFile {
            name: self.name.clone(),
            description: self.description.clone(),
            dim: self.dim,
            mode: self.mode,
            contexts: self.contexts.clone(),
            observables,
            polynomials,
            derivation: None,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("proof files always serialize")
    }

    /// SHA-256 of the canonical input document, hex encoded.
    pub fn input_hash(&self) -> Result<String, InputError> {
        Ok(sha256_hex(&self.canonical()?.to_toml()))
    }

    /// Validates every declaration and builds the model objects.
    pub fn load(&self) -> Result<Loaded, InputError> {
        if self.dim == 0 {
            return Err(InputError::at("dim", "dimension must be positive"));
        }
        if self.observables.is_empty() {
            return Err(InputError::at("observable", "no observables declared"));
        }
        let mut set = ObservableSet::new(self.dim);
        for (k, decl) in self.observables.iter().enumerate() {
            let loc = format!("observable[{}]", k + 1);
            let obs = load_observable(decl, self.dim, &loc)?;
            set.push(obs).map_err(|e| InputError::at(&loc, e))?;
        }
        let mut contexts = Vec::new();
        for (k, members) in self.contexts.iter().flatten().enumerate() {
            let loc = format!("contexts[{}]", k + 1);
            let ids = ids_from_numbers(members, set.len(), &loc)?;
            contexts.push(validate_context(&set, &ids).map_err(|e| InputError::at(&loc, e))?);
        }
        if self.contexts.is_some() {
            set.set_declared_contexts(contexts.clone());
        }
        let mut polynomials = Vec::new();
        for (k, decl) in self.polynomials.iter().enumerate() {
            let loc = format!("polynomial[{}]", k + 1);
            let ids = ids_from_numbers(&decl.context, set.len(), &loc)?;
            let ctx = validate_context(&set, &ids).map_err(|e| InputError::at(&loc, e))?;
            let poly = Poly::parse(&decl.expr).map_err(|e| InputError::at(format!("{loc}.expr"), e))?;
            polynomials.push(ContextPolynomial::new(&set, ctx, poly).map_err(|e| InputError::at(&loc, e))?);
        }
        Ok(Loaded { file: self.clone(), set, contexts, polynomials })
    }
}

fn load_observable(decl: &ObservableDecl, dim: usize, loc: &str) -> Result<crate::model::Observable, InputError> {
    let spectrum = match &decl.spectrum {
        None => None,
        Some(values) => {
            let values = values
                .iter()
                .map(Number::rational)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| InputError::at(format!("{loc}.spectrum"), e))?;
            Some(Spectrum::new(values).map_err(|e| InputError::at(format!("{loc}.spectrum"), e))?)
        }
    };
    let given = [decl.ray.is_some(), decl.pauli.is_some(), decl.matrix.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(InputError::at(loc, "exactly one of ray, pauli or matrix must be given"));
    }
    let obs = if let Some(entries) = &decl.ray {
        let v = entries
            .iter()
            .map(Number::scalar)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| InputError::at(format!("{loc}.ray"), e))?;
        if v.len() != dim {
            return Err(InputError::at(
                format!("{loc}.ray"),
                format!("vector has {} components but the file declares dim = {dim}", v.len()),
            ));
        }
        if let Some(s) = &spectrum {
            if !s.is_binary() {
                return Err(InputError::at(format!("{loc}.spectrum"), "a ray has spectrum {0, 1}"));
            }
        }
        ray_observable(make_ray(v).map_err(|e| InputError::at(format!("{loc}.ray"), e))?)
    } else if let Some(word) = &decl.pauli {
        let obs = pauli_observable(word).map_err(|e| InputError::at(format!("{loc}.pauli"), e))?;
        if obs.matrix().dim() != dim {
            return Err(InputError::at(
                format!("{loc}.pauli"),
                format!("'{word}' acts on dimension {} but the file declares dim = {dim}", obs.matrix().dim()),
            ));
        }
        match spectrum {
            Some(s) => make_observable(obs.matrix().clone(), Some(s)).map_err(|e| InputError::at(loc, e))?,
            None => obs,
        }
    } else {
        let rows = decl.matrix.as_ref().expect("one payload");
        let rows = rows
            .iter()
            .map(|r| r.iter().map(Number::scalar).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| InputError::at(format!("{loc}.matrix"), e))?;
        let m = ExactMatrix::from_rows(rows).map_err(|e| InputError::at(format!("{loc}.matrix"), e))?;
        if m.dim() != dim {
            return Err(InputError::at(
                format!("{loc}.matrix"),
                format!("matrix is {0}x{0} but the file declares dim = {dim}", m.dim()),
            ));
        }
        make_observable(m, spectrum).map_err(|e| InputError::at(loc, e))?
    };
    Ok(match &decl.label {
        Some(l) => obs.with_label(l.clone()),
        None => obs,
    })
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
