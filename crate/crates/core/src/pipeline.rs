//! End-to-end workflow over a loaded proof file: choose a construction,
//! verify, derive, present and export.

use thiserror::Error;

use crate::assign::{
    context_deltas, ks_colorability_with, parity_certify, AssignError, BoundMode, ClassicalBound, ProofCertificate,
    SearchConfig, Verdict, Witness,
};
use crate::compat::{build_orthogonality_graph, enumerate_bases_with, Context};
use crate::derive::{
    assemble_f, build_complete_set_bases_only, build_complete_set_parity, build_complete_set_rays,
    build_complete_set_user, present, verify_complete_set, CompleteSet, DeriveError, Form, Inequality, Presentation,
    Provenance,
};
use crate::io::{
    sha256_hex, DerivationRecord, Hashes, InputError, Loaded, Mode, PolynomialRecord, ProofFile, SearchRecord,
};
use crate::model::ObservableSet;
use crate::poly::{ContextPolynomial, Poly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("input error at {0}")]
    Input(#[from] InputError),
    #[error("{0}")]
    Usage(String),
    #[error("not a KS proof")]
    NotKsProof(Box<ProofCertificate>),
    #[error(transparent)]
    Derive(DeriveError),
    #[error(transparent)]
    Assign(AssignError),
    #[error("exported derivation does not match a fresh derivation: {0}")]
    RecordMismatch(String),
}

impl From<DeriveError> for PipelineError {
    fn from(e: DeriveError) -> Self {
        match e {
            DeriveError::NotKsProof(c) | DeriveError::NotParityProof(c) => PipelineError::NotKsProof(c),
            DeriveError::Assign(a) => PipelineError::Assign(a),
            other => PipelineError::Derive(other),
        }
    }
}

impl From<AssignError> for PipelineError {
    fn from(e: AssignError) -> Self {
        PipelineError::Assign(e)
    }
}

impl PipelineError {
    /// 2: not a KS proof, 3: input error, 4: search budget exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::NotKsProof(_) => 2,
            PipelineError::Assign(AssignError::SearchBudgetExceeded { .. }) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable error class.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::NotKsProof(_) => "not-a-ks-proof",
            PipelineError::Assign(AssignError::SearchBudgetExceeded { .. }) => "budget-exceeded",
            PipelineError::Input(_) => "input",
            PipelineError::Usage(_) => "usage",
            PipelineError::RecordMismatch(_) => "record-mismatch",
            PipelineError::Derive(_) | PipelineError::Assign(_) => "invalid-proof-data",
        }
    }

    pub fn certificate(&self) -> Option<&ProofCertificate> {
        match self {
            PipelineError::NotKsProof(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    /// Overrides the file's mode when set.
    pub mode: Option<Mode>,
    pub form: Form,
    pub bound: BoundMode,
    pub config: SearchConfig,
}

impl Default for Options {
    fn default() -> Self {
        Options { mode: None, form: Form::default(), bound: BoundMode::CertifyOnly, config: SearchConfig::default() }
    }
}

/// A mode with `auto` decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolved {
    Ray,
    BasesOnly,
    Parity,
    General,
}

fn contexts_have_scalar_products(loaded: &Loaded) -> bool {
    !loaded.contexts.is_empty() && context_deltas(&loaded.set, &loaded.contexts).is_ok()
}

/// `auto` picks user polynomials when given, then parity for dichotomic
/// observables with `±I` context products, then rays, then the general
/// search.
pub fn resolve_mode(loaded: &Loaded, requested: Mode) -> Resolved {
    match requested {
        Mode::Ray => Resolved::Ray,
        Mode::BasesOnly => Resolved::BasesOnly,
        Mode::Parity => Resolved::Parity,
        Mode::General => Resolved::General,
        Mode::Auto => {
            if !loaded.polynomials.is_empty() {
                Resolved::General
            } else if loaded.set.all_dichotomic() && contexts_have_scalar_products(loaded) {
                Resolved::Parity
            } else if loaded.set.all_rays() {
                Resolved::Ray
            } else {
                Resolved::General
            }
        }
    }
}

fn requested_mode(loaded: &Loaded, opts: &Options) -> Mode {
    opts.mode.unwrap_or(loaded.file.mode)
}

fn bases(loaded: &Loaded, opts: &Options) -> Result<(crate::compat::OrthogonalityGraph, Vec<Context>), PipelineError> {
    if !loaded.set.all_rays() {
        return Err(PipelineError::Usage("ray modes need every observable to be a ray".into()));
    }
    let graph = build_orthogonality_graph(&loaded.set).map_err(DeriveError::from)?;
    let bases = enumerate_bases_with(&graph, loaded.set.dim(), opts.config.execution);
    Ok((graph, bases))
}

fn require_contexts(loaded: &Loaded) -> Result<(), PipelineError> {
    if loaded.contexts.is_empty() {
        return Err(PipelineError::Usage("parity mode needs declared contexts".into()));
    }
    Ok(())
}

/// The complete set a mode derives from.
pub fn complete_set(loaded: &Loaded, resolved: Resolved, opts: &Options) -> Result<CompleteSet, PipelineError> {
    Ok(match resolved {
        Resolved::Ray => {
            let (g, b) = bases(loaded, opts)?;
            build_complete_set_rays(&loaded.set, &g, &b)?
        }
        Resolved::BasesOnly => {
            let (g, b) = bases(loaded, opts)?;
            build_complete_set_bases_only(&loaded.set, &g, &b)?
        }
        Resolved::Parity => {
            require_contexts(loaded)?;
            build_complete_set_parity(&loaded.set, &loaded.contexts)?
        }
        Resolved::General => {
            if !loaded.polynomials.is_empty() {
                build_complete_set_user(loaded.polynomials.clone())?
            } else if loaded.set.all_rays() {
                let (g, b) = bases(loaded, opts)?;
                build_complete_set_rays(&loaded.set, &g, &b)?
            } else if contexts_have_scalar_products(loaded) {
                let deltas = context_deltas(&loaded.set, &loaded.contexts)?;
                let polys = loaded
                    .contexts
                    .iter()
                    .zip(deltas)
                    .map(|(c, d)| {
                        let p = Poly::product_of(c.members()).sub(&Poly::from_int(d as i64));
                        ContextPolynomial::new(&loaded.set, c.clone(), p)
                    })
                    .collect::<Result<_, _>>()
                    .map_err(DeriveError::from)?;
                build_complete_set_user(polys)?
            } else {
                return Err(PipelineError::Usage(
                    "general mode needs [[polynomial]] entries, a ray set, or contexts with ±I products".into(),
                ));
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub resolved: Resolved,
    pub certificate: ProofCertificate,
    /// Bases found for ray modes.
    pub bases: Vec<Context>,
    pub edge_count: usize,
}

/// Decides whether the input is a KS proof with the engine its mode calls
/// for: ray coloring, the parity argument, or the general search.
pub fn verify(loaded: &Loaded, opts: &Options) -> Result<Verification, PipelineError> {
    let resolved = resolve_mode(loaded, requested_mode(loaded, opts));
    let exec = opts.config.execution;
    Ok(match resolved {
        Resolved::Ray | Resolved::BasesOnly => {
            let (g, b) = bases(loaded, opts)?;
            let certificate = ks_colorability_with(&loaded.set, &g, &b, exec)?;
            Verification { resolved, certificate, edge_count: g.edge_count(), bases: b }
        }
        Resolved::Parity => {
            require_contexts(loaded)?;
            let certificate = parity_certify(&loaded.set, &loaded.contexts)?;
            Verification { resolved, certificate, bases: Vec::new(), edge_count: 0 }
        }
        Resolved::General => {
            let cs = complete_set(loaded, resolved, opts)?;
            let certificate = verify_complete_set(&loaded.set, &cs, exec)?;
            Verification { resolved, certificate, bases: Vec::new(), edge_count: 0 }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub verification: Verification,
    pub inequality: Inequality,
    pub presentation: Presentation,
}

/// Verifies, builds the complete set, assembles `F` and presents it.
pub fn derive(loaded: &Loaded, opts: &Options) -> Result<Derivation, PipelineError> {
    let verification = verify(loaded, opts)?;
    if verification.certificate.verdict != Verdict::KsProof {
        return Err(PipelineError::NotKsProof(Box::new(verification.certificate)));
    }
    let cs = complete_set(loaded, verification.resolved, opts)?;
    let inequality = assemble_f(&loaded.set, &cs, opts.bound, opts.config)?;
    let presentation = present(&loaded.set, &inequality, opts.form);
    Ok(Derivation { verification, inequality, presentation })
}

fn describe_bound(c: &ClassicalBound) -> String {
    match c {
        ClassicalBound::Certified { stats } => format!(
            "F <= -1 for every noncontextual assignment (exhaustive search: {} nodes, {} propagations, {} conflicts)",
            stats.nodes, stats.propagations, stats.conflicts
        ),
        ClassicalBound::Exact { max, argmax: _, nodes: _ } => {
            format!("max F = {max} over noncontextual assignments (exact branch and bound)")
        }
    }
}

/// Human-readable account of a derivation.
pub fn render_derivation(loaded: &Loaded, d: &Derivation) -> String {
    let set = &loaded.set;
    let ineq = &d.inequality;
    let p = &d.presentation;
    let mut out = String::new();
    if let Some(name) = &loaded.file.name {
        out.push_str(&format!("proof: {name}\n"));
    }
    out.push_str(&format!("dimension: {}, observables: {}\n", set.dim(), set.len()));
    out.push_str(&format!("verdict: {} ({})\n", d.verification.certificate.verdict, d.verification.certificate.method));
    let cs = &ineq.complete_set;
    out.push_str(&format!("complete set ({}): {} polynomials\n", cs.provenance(), cs.len()));
    for (k, r) in cs.polynomials().iter().enumerate() {
        out.push_str(&format!(
            "  r{} = {}    [c = {}, context {}]\n",
            k + 1,
            r.render(set),
            r.normalization(),
            r.context()
        ));
    }
    out.push_str(&format!("F = {}\n", ineq.f.render(&|id| set.symbol(id))));
    out.push_str(&format!(
        "quantum: F is the {0}x{0} zero operator, so <F> = 0 in every state\n",
        ineq.certificates.operator_zero_dim
    ));
    out.push_str(&format!("classical: {}\n", describe_bound(&ineq.certificates.classical)));
    out.push_str(&format!("F = {} * G + ({})\n", p.scale, p.offset));
    out.push_str(&format!("inequality ({} form): {}\n", p.form, p.render(set)));
    out.push_str(&format!(
        "classical bound: {} ({})\n",
        p.classical_bound,
        if p.bound_is_exact { "exact maximum" } else { "certified" }
    ));
    out.push_str(&format!("quantum value: {} (every state)\n", p.quantum_value));
    out
}

fn context_numbers(c: &Context) -> Vec<usize> {
    c.members().iter().map(|m| m.number()).collect()
}

/// Canonical input document plus the derivation record.
pub fn export(loaded: &Loaded, d: &Derivation) -> Result<ProofFile, PipelineError> {
    let mut file = loaded.file.canonical()?;
    let set = &loaded.set;
    let ineq = &d.inequality;
    let p = &d.presentation;
    let f = ineq.f.render(&|id| set.symbol(id));
    let score = p.render_score(set);
    let search = ineq.certificates.completeness.stats().map(|s| SearchRecord {
        nodes: s.nodes,
        propagations: s.propagations,
        conflicts: s.conflicts,
    });
    let record = DerivationRecord {
        verdict: d.verification.certificate.verdict.to_string(),
        method: d.verification.certificate.method.to_string(),
        provenance: ineq.complete_set.provenance().to_string(),
        form: p.form.to_string(),
        polynomial_count: ineq.complete_set.len(),
        hashes: Hashes { input: sha256_hex(&file.to_toml()), f: sha256_hex(&f), score: sha256_hex(&score) },
        f,
        score,
        scale: p.scale.to_string(),
        offset: p.offset.to_string(),
        classical_bound: p.classical_bound.to_string(),
        bound_kind: if p.bound_is_exact { "exact" } else { "certified" }.to_string(),
        quantum_value: p.quantum_value.to_string(),
        inequality: p.render(set),
        rendering: render_derivation(loaded, d),
        search,
        complete_set: ineq
            .complete_set
            .polynomials()
            .iter()
            .map(|r| PolynomialRecord {
                context: context_numbers(r.context()),
                poly: r.render(set),
                c: r.normalization().to_string(),
            })
            .collect(),
    };
    file.derivation = Some(record);
    Ok(file)
}

/// Re-derives an exported record with the options it was produced under
/// and checks that every field matches.
pub fn check_record(loaded: &Loaded, opts: &Options) -> Result<(), PipelineError> {
    let Some(recorded) = &loaded.file.derivation else {
        return Ok(());
    };
    let form: Form = recorded.form.parse().map_err(PipelineError::Usage)?;
    let bound = if recorded.bound_kind == "exact" { BoundMode::Exact } else { BoundMode::CertifyOnly };
    let opts = Options { form, bound, ..*opts };
    let fresh = export(loaded, &derive(loaded, &opts)?)?;
    let fresh = fresh.derivation.expect("export sets a derivation");
    if &fresh != recorded {
        let field = if fresh.hashes.input != recorded.hashes.input {
            "input hash"
        } else if fresh.f != recorded.f {
            "F"
        } else if fresh.score != recorded.score {
            "score"
        } else {
            "record fields"
        };
        return Err(PipelineError::RecordMismatch(field.to_string()));
    }
    Ok(())
}

/// Text for a certificate, including a satisfying witness when present.
pub fn render_certificate(set: &ObservableSet, cert: &ProofCertificate) -> String {
    let mut out = cert.render(set);
    if let Witness::Satisfying(_) = cert.witness {
        out.push_str("every constraint holds at the witness, so no contradiction arises\n");
    }
    out
}

/// Convenience for callers holding only text.
pub fn load_text(text: &str) -> Result<Loaded, PipelineError> {
    Ok(ProofFile::parse(text)?.load()?)
}

/// Provenance a resolved mode produces when no user polynomials are given.
pub fn default_provenance(resolved: Resolved) -> Provenance {
    match resolved {
        Resolved::Ray => Provenance::Ray,
        Resolved::BasesOnly => Provenance::RayBasesOnly,
        Resolved::Parity => Provenance::Parity,
        Resolved::General => Provenance::UserSupplied,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIS: &str =
        "dim = 3\n[[observable]]\nray = [1,0,0]\n[[observable]]\nray = [0,1,0]\n[[observable]]\nray = [0,0,1]\n";

    #[test]
    fn single_basis_is_not_a_proof() {
        let l = load_text(BASIS).unwrap();
        assert_eq!(resolve_mode(&l, Mode::Auto), Resolved::Ray);
        let err = derive(&l, &Options::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let cert = err.certificate().unwrap();
        assert!(cert.satisfying_assignment().is_some());
        assert!(render_certificate(&l.set, cert).contains("witness: P1=0 P2=0 P3=1"));
    }

    #[test]
    fn parity_needs_contexts() {
        let l = load_text(BASIS).unwrap();
        let opts = Options { mode: Some(Mode::Parity), ..Default::default() };
        assert_eq!(verify(&l, &opts).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn budget_maps_to_exit_four() {
        let e = PipelineError::Assign(AssignError::SearchBudgetExceeded { cap: 1 });
        assert_eq!(e.exit_code(), 4);
        assert_eq!(e.kind(), "budget-exceeded");
    }
}
