//! From a verified proof to a state-independent inequality.
//!
//! 1. Build a complete set of polynomials `{r_1, …, r_N}`: each vanishes as an
//!    operator, and no value assignment zeroes all of them.
//! 2. Assemble `F = -Σ r_i† r_i / c_i`. It is the zero operator, so its
//!    expectation is 0 in every quantum state, while every noncontextual
//!    assignment gives `F <= -1`.
//! 3. Present `F = s·G + t` with an integer score `G`, so that `G <= (-1-t)/s`
//!    classically and `⟨G⟩ = -t/s` quantum mechanically.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::assign::{
    classical_max, context_deltas, general_unsat_with, parity_certify, AssignError, BoundMode, ClassicalBound,
    ProofCertificate, SearchConfig, Verdict,
};
use crate::compat::{validate_context, CompatError, Context, OrthogonalityGraph};
use crate::exact::{ExactError, ExactMatrix, Rational, Real, Scalar};
use crate::exec::{self, Execution};
use crate::model::{ObsId, ObservableSet, Spectrum};
use crate::poly::{ContextPolynomial, Poly, PolyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeriveError {
    #[error("orthogonal rays {0} and {1} lie in no common basis")]
    EdgeOutsideBases(ObsId, ObsId),
    #[error("not a parity proof")]
    NotParityProof(Box<ProofCertificate>),
    #[error("not a KS proof")]
    NotKsProof(Box<ProofCertificate>),
    #[error("polynomial #{index} of the complete set is not the zero operator")]
    Condition1Violated { index: usize, matrix: ExactMatrix },
    #[error("F is not the zero operator")]
    NonZeroF(ExactMatrix),
    #[error("observable {0} is not a ray")]
    NotRay(ObsId),
    #[error("state vector is zero")]
    ZeroState,
    #[error("state has dimension {found}, expected {expected}")]
    StateDimension { expected: usize, found: usize },
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Compat(#[from] CompatError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// How a complete set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Orthogonal pairs `P_i P_j` plus `Σ P - 1` per basis.
    Ray,
    /// `Σ P - 1` per basis, valid when every orthogonal pair shares a basis.
    RayBasesOnly,
    /// `Π A - δ` per context.
    Parity,
    UserSupplied,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Ray => "ray",
            Provenance::RayBasesOnly => "bases-only",
            Provenance::Parity => "parity",
            Provenance::UserSupplied => "user",
        })
    }
}

/// Candidate complete set; members carry their normalization constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompleteSet {
    polynomials: Vec<ContextPolynomial>,
    provenance: Provenance,
}

impl CompleteSet {
    /// Normalizes each member. Members vanishing at every assignment are
    /// rejected since they cannot contribute to completeness.
    pub fn new(polynomials: Vec<ContextPolynomial>, provenance: Provenance) -> Result<Self, DeriveError> {
        let polynomials = polynomials.iter().map(ContextPolynomial::normalized).collect::<Result<_, _>>()?;
        Ok(CompleteSet { polynomials, provenance })
    }

    pub fn polynomials(&self) -> &[ContextPolynomial] {
        &self.polynomials
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.polynomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polynomials.is_empty()
    }
}

fn require_rays(set: &ObservableSet) -> Result<(), DeriveError> {
    match set.observables().iter().find(|o| !o.is_ray()) {
        Some(o) => Err(DeriveError::NotRay(o.id())),
        None => Ok(()),
    }
}

fn basis_polynomial(set: &ObservableSet, basis: &Context) -> Result<ContextPolynomial, DeriveError> {
    let p = Poly::sum_of(basis.members()).sub(&Poly::from_int(1));
    Ok(ContextPolynomial::new(set, basis.clone(), p)?)
}

/// One `P_i P_j` per orthogonality edge and one `Σ P - 1` per basis.
pub fn build_complete_set_rays(
    set: &ObservableSet,
    graph: &OrthogonalityGraph,
    bases: &[Context],
) -> Result<CompleteSet, DeriveError> {
    require_rays(set)?;
    let mut polys = Vec::with_capacity(graph.edge_count() + bases.len());
    for (a, b) in graph.edges() {
        let ctx = validate_context(set, &[a, b])?;
        polys.push(ContextPolynomial::new(set, ctx, Poly::product_of(&[a, b]))?);
    }
    for basis in bases {
        polys.push(basis_polynomial(set, basis)?);
    }
    CompleteSet::new(polys, Provenance::Ray)
}

/// One `Σ P - 1` per basis, provided every orthogonal pair shares a basis.
pub fn build_complete_set_bases_only(
    set: &ObservableSet,
    graph: &OrthogonalityGraph,
    bases: &[Context],
) -> Result<CompleteSet, DeriveError> {
    require_rays(set)?;
    if let Some((a, b)) = uncovered_edge(graph, bases) {
        return Err(DeriveError::EdgeOutsideBases(a, b));
    }
    let polys = bases.iter().map(|b| basis_polynomial(set, b)).collect::<Result<_, _>>()?;
    CompleteSet::new(polys, Provenance::RayBasesOnly)
}

/// First orthogonal pair, in edge order, contained in none of `bases`.
pub fn uncovered_edge(graph: &OrthogonalityGraph, bases: &[Context]) -> Option<(ObsId, ObsId)> {
    graph.edges().into_iter().find(|&(a, b)| !bases.iter().any(|c| c.contains(a) && c.contains(b)))
}

/// Orthogonal pairs contained in none of `bases`, in edge order.
pub fn uncovered_edges(graph: &OrthogonalityGraph, bases: &[Context]) -> Vec<(ObsId, ObsId)> {
    graph.edges().into_iter().filter(|&(a, b)| !bases.iter().any(|c| c.contains(a) && c.contains(b))).collect()
}

/// One `Π A - δ` per context, after the parity argument succeeds.
pub fn build_complete_set_parity(set: &ObservableSet, contexts: &[Context]) -> Result<CompleteSet, DeriveError> {
    let cert = parity_certify(set, contexts)?;
    if !cert.is_proof() {
        return Err(DeriveError::NotParityProof(Box::new(cert)));
    }
    let deltas = context_deltas(set, contexts)?;
    let polys = contexts
        .iter()
        .zip(deltas)
        .map(|(c, d)| {
            let p = Poly::product_of(c.members()).sub(&Poly::from_int(d as i64));
            ContextPolynomial::new(set, c.clone(), p)
        })
        .collect::<Result<_, _>>()?;
    CompleteSet::new(polys, Provenance::Parity)
}

pub fn build_complete_set_user(polynomials: Vec<ContextPolynomial>) -> Result<CompleteSet, DeriveError> {
    CompleteSet::new(polynomials, Provenance::UserSupplied)
}

/// Checks that every member is the zero operator, then searches for an
/// assignment zeroing all members. A proof iff both conditions hold.
pub fn verify_complete_set(
    set: &ObservableSet,
    cs: &CompleteSet,
    exec: Execution,
) -> Result<ProofCertificate, DeriveError> {
    let checks = exec::map(exec, cs.polynomials.iter().enumerate().collect(), |(index, p)| {
        p.eval_operator(set).map(|m| (index, m))
    });
    for r in checks {
        let (index, m) = r?;
        if !m.is_zero() {
            return Err(DeriveError::Condition1Violated { index, matrix: m });
        }
    }
    Ok(general_unsat_with(set, &cs.polynomials, exec)?)
}

/// Certificates gathered while deriving an inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificates {
    /// Outcome of the completeness search.
    pub completeness: ProofCertificate,
    /// Dimension of the zero matrix `F` evaluates to.
    pub operator_zero_dim: usize,
    /// Bound on `F` over noncontextual assignments.
    pub classical: ClassicalBound,
}

/// `F = -Σ r_i† r_i / c_i` with its certificates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inequality {
    pub f: Poly,
    pub complete_set: CompleteSet,
    pub certificates: Certificates,
}

impl Inequality {
    /// Upper bound on `F` over noncontextual assignments.
    pub fn f_bound(&self) -> Real {
        self.certificates.classical.upper_bound()
    }
}

/// `-Σ r_i† r_i / c_i`, reduced over the set's spectra.
pub fn f_polynomial(set: &ObservableSet, cs: &CompleteSet) -> Result<Poly, DeriveError> {
    let mut f = Poly::zero();
    for p in &cs.polynomials {
        f = f.sub(p.normalized_square()?.poly());
    }
    Ok(f.reduce(set))
}

/// Verifies the complete set, builds `F`, checks it is the zero operator and
/// bounds it classically.
pub fn assemble_f(
    set: &ObservableSet,
    cs: &CompleteSet,
    mode: BoundMode,
    config: SearchConfig,
) -> Result<Inequality, DeriveError> {
    let completeness = verify_complete_set(set, cs, config.execution)?;
    if completeness.verdict != Verdict::KsProof {
        return Err(DeriveError::NotKsProof(Box::new(completeness)));
    }
    let f = f_polynomial(set, cs)?;
    let op = f.eval_operator(set)?;
    if !op.is_zero() {
        return Err(DeriveError::NonZeroF(op));
    }
    let classical = match mode {
        // the completeness search already exhausted every assignment
        BoundMode::CertifyOnly => match completeness.stats() {
            Some(s) => ClassicalBound::Certified { stats: *s },
            None => classical_max(set, &cs.polynomials, mode, config)?,
        },
        BoundMode::Exact => classical_max(set, &cs.polynomials, mode, config)?,
    };
    Ok(Inequality {
        f,
        complete_set: cs.clone(),
        certificates: Certificates { completeness, operator_zero_dim: set.dim(), classical },
    })
}

/// Variables in which a presented score is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Form {
    /// Native variables: projectors for rays, observables otherwise.
    #[default]
    Projector,
    /// Every ray `P` rewritten through `A = 1 - 2P`.
    Dichotomic,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Form::Projector => "projector",
            Form::Dichotomic => "dichotomic",
        })
    }
}

impl std::str::FromStr for Form {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "projector" => Ok(Form::Projector),
            "dichotomic" => Ok(Form::Dichotomic),
            other => Err(format!("unknown form '{other}' (expected projector or dichotomic)")),
        }
    }
}

/// `F = scale·score + offset`; the score is bounded by `classical_bound`
/// classically and has expectation `quantum_value` in every state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub form: Form,
    pub score: Poly,
    pub scale: Rational,
    pub offset: Real,
    pub classical_bound: Real,
    /// True when the bound is the exact classical maximum of the score.
    pub bound_is_exact: bool,
    pub quantum_value: Real,
}

impl Presentation {
    /// The set whose operators the score's variables denote.
    pub fn operators(&self, set: &ObservableSet) -> ObservableSet {
        match self.form {
            Form::Projector => set.clone(),
            Form::Dichotomic => set.dichotomized(),
        }
    }

    pub fn render_score(&self, set: &ObservableSet) -> String {
        let ops = self.operators(set);
        self.score.render(&|id| ops.symbol(id))
    }

    /// `score <= bound`.
    pub fn render(&self, set: &ObservableSet) -> String {
        format!("{} <= {}", self.render_score(set), self.classical_bound)
    }

    /// Score value at an assignment of the set's own observables.
    pub fn eval_native(&self, set: &ObservableSet, v: &crate::assign::ValueAssignment) -> Result<Scalar, PolyError> {
        match self.form {
            Form::Projector => self.score.eval_assignment(v),
            Form::Dichotomic => self.score.eval(&|id| {
                let x = v.get(id)?.clone();
                Some(if set.get(id).is_some_and(|o| o.is_ray()) {
                    Rational::one() - x * Rational::from_integer(2.into())
                } else {
                    x
                })
            }),
        }
    }
}

/// Rationals `q_k` as a positive factor `s` and integers `q_k / s` with gcd 1.
fn primitive_scale(coefficients: &[Rational]) -> Rational {
    let mut lcm = BigInt::one();
    for q in coefficients {
        lcm = lcm.lcm(q.denom());
    }
    let mut gcd = BigInt::zero();
    for q in coefficients {
        let n = (q * Rational::from_integer(lcm.clone())).to_integer();
        gcd = gcd.gcd(&n);
    }
    if gcd.is_zero() {
        return Rational::one();
    }
    Rational::new(gcd.abs(), lcm)
}

fn affine(form: Form, f: &Poly, scale: Rational, f_bound: &Real, exact: bool) -> Presentation {
    let offset = f.constant_term().re().clone();
    let inv = Rational::one() / &scale;
    let score = f.sub(&Poly::constant(Scalar::from_real(offset.clone()))).scale(&Scalar::from_rational(inv.clone()));
    let inv_real = Real::from_rational(inv);
    Presentation {
        form,
        score,
        classical_bound: (f_bound - &offset) * &inv_real,
        quantum_value: -(offset.clone() * &inv_real),
        scale,
        offset,
        bound_is_exact: exact,
    }
}

/// Rewrites `F` as `s·G + t` with integer `G` (gcd 1, `s > 0`). In the
/// dichotomic form rays are replaced by `(1 - A)/2`, reduced with `A² = 1`,
/// and the score is the projector score times `2^degree`, which keeps it
/// integral without changing its shape.
pub fn present(set: &ObservableSet, ineq: &Inequality, form: Form) -> Presentation {
    let exact = ineq.certificates.classical.is_exact();
    let bound = ineq.f_bound();
    let f = &ineq.f;
    // The constant joins the content so that `G` and the quantum value `-t/s`
    // are integral together: per-basis sums whose rays each occur twice keep
    // scale 1 rather than halving into a fractional quantum value.
    let rational_coefficients: Option<Vec<Rational>> = f.terms().map(|(_, c)| c.to_rational()).collect();
    let projector_scale = rational_coefficients.as_deref().map(primitive_scale).unwrap_or_else(Rational::one);
    let projector = affine(Form::Projector, f, projector_scale.clone(), &bound, exact);
    let has_rays = f.variables().iter().any(|&id| set.get(id).is_some_and(|o| o.is_ray()));
    match form {
        Form::Projector => projector,
        Form::Dichotomic if !has_rays => Presentation { form: Form::Dichotomic, ..projector },
        Form::Dichotomic => {
            let half = Scalar::from_rational(Rational::new(1.into(), 2.into()));
            let fa = f.substitute(&|id| {
                set.get(id).filter(|o| o.is_ray()).map(|_| Poly::from_int(1).sub(&Poly::var(id)).scale(&half))
            });
            let spectra: std::collections::BTreeMap<ObsId, Spectrum> = set
                .observables()
                .iter()
                .map(|o| (o.id(), if o.is_ray() { Spectrum::dichotomic() } else { o.spectrum().clone() }))
                .collect();
            let fa = fa.reduce(&spectra);
            let power = Rational::from_integer(BigInt::one() << projector.score.degree());
            affine(Form::Dichotomic, &fa, projector_scale / power, &bound, exact)
        }
    }
}

/// `⟨ψ|G|ψ⟩ / ⟨ψ|ψ⟩` for a polynomial in the set's operators.
pub fn expectation(set: &ObservableSet, g: &Poly, state: &[Scalar]) -> Result<Scalar, DeriveError> {
    if state.len() != set.dim() {
        return Err(DeriveError::StateDimension { expected: set.dim(), found: state.len() });
    }
    let norm: Scalar = state.iter().map(|x| Scalar::from_real(x.norm_sqr())).fold(Scalar::zero(), |a, b| a + b);
    if norm.is_zero() {
        return Err(DeriveError::ZeroState);
    }
    let op = g.eval_operator(set)?;
    let num = op.quadratic_form(state)?;
    Ok(num.checked_div(&norm)?)
}

/// Expectation of a presented score.
pub fn presented_expectation(set: &ObservableSet, p: &Presentation, state: &[Scalar]) -> Result<Scalar, DeriveError> {
    expectation(&p.operators(set), &p.score, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::ValueAssignment;
    use crate::compat::{build_orthogonality_graph, enumerate_bases};
    use crate::exact::int;

    fn ids(v: &[usize]) -> Vec<ObsId> {
        v.iter().map(|&k| ObsId(k)).collect()
    }

    fn square() -> (ObservableSet, Vec<Context>) {
        let set = ObservableSet::from_paulis(&["XI", "IX", "XX", "IZ", "ZI", "ZZ", "XZ", "ZX", "YY"]).unwrap();
        let ctx = [[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8]]
            .iter()
            .map(|c| validate_context(&set, &ids(c)).unwrap())
            .collect();
        (set, ctx)
    }

    fn basis3() -> ObservableSet {
        ObservableSet::from_int_rays(3, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap()
    }

    #[test]
    fn single_basis_ray_set() {
        let set = basis3();
        let g = build_orthogonality_graph(&set).unwrap();
        let bases = enumerate_bases(&g, 3);
        let cs = build_complete_set_rays(&set, &g, &bases).unwrap();
        assert_eq!(cs.len(), 4);
        assert!(cs.polynomials().iter().all(|p| p.normalization().is_one()));
        let cert = verify_complete_set(&set, &cs, Execution::Sequential).unwrap();
        assert_eq!(cert.verdict, Verdict::NotKsProof);
        let err = assemble_f(&set, &cs, BoundMode::CertifyOnly, SearchConfig::default()).unwrap_err();
        assert!(matches!(err, DeriveError::NotKsProof(_)));

        let only = build_complete_set_bases_only(&set, &g, &bases).unwrap();
        assert_eq!(only.len(), 1);
    }

    #[test]
    fn two_orthogonal_rays_without_basis() {
        let set = ObservableSet::from_int_rays(3, &[&[1, 0, 0], &[0, 1, 0]]).unwrap();
        let g = build_orthogonality_graph(&set).unwrap();
        let bases = enumerate_bases(&g, 3);
        let cs = build_complete_set_rays(&set, &g, &bases).unwrap();
        assert_eq!(cs.len(), 1);
    }

    #[test]
    fn uncovered_edge_detected() {
        let set = ObservableSet::from_int_rays(3, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[0, 1, 1]]).unwrap();
        let g = build_orthogonality_graph(&set).unwrap();
        let bases = enumerate_bases(&g, 3);
        assert_eq!(
            build_complete_set_bases_only(&set, &g, &bases).unwrap_err(),
            DeriveError::EdgeOutsideBases(ObsId(0), ObsId(3))
        );
    }

    #[test]
    fn non_orthogonal_pair_violates_condition_one() {
        let set = ObservableSet::from_int_rays(3, &[&[1, 0, 0], &[1, 1, 0]]).unwrap();
        let ctx = Context::new_unchecked(ids(&[0, 1]));
        let p = ContextPolynomial::new(&set, ctx, Poly::product_of(&ids(&[0, 1]))).unwrap();
        let cs = build_complete_set_user(vec![p]).unwrap();
        let err = verify_complete_set(&set, &cs, Execution::Sequential).unwrap_err();
        let DeriveError::Condition1Violated { index: 0, matrix } = err else { panic!("{err:?}") };
        assert!(!matrix.is_zero());
    }

    #[test]
    fn mermin_peres_pipeline() {
        let (set, ctx) = square();
        let cs = build_complete_set_parity(&set, &ctx).unwrap();
        assert_eq!(cs.len(), 6);
        assert!(cs.polynomials().iter().all(|p| p.normalization() == &int(4)));
        let ineq = assemble_f(&set, &cs, BoundMode::Exact, SearchConfig::default()).unwrap();
        assert_eq!(
            ineq.f.render(&|id| set.symbol(id)),
            "1/2*A1*A2*A3 + 1/2*A1*A4*A7 + 1/2*A2*A5*A8 - 1/2*A3*A6*A9 + 1/2*A4*A5*A6 + 1/2*A7*A8*A9 - 3"
        );
        assert_eq!(ineq.f_bound(), Real::from_int(-1));
        for form in [Form::Projector, Form::Dichotomic] {
            let p = present(&set, &ineq, form);
            assert_eq!(p.scale, Rational::new(1.into(), 2.into()));
            assert_eq!(p.classical_bound, Real::from_int(4));
            assert_eq!(p.quantum_value, Real::from_int(6));
            assert!(p.bound_is_exact);
            let psi = vec![Scalar::one(), Scalar::zero(), Scalar::zero(), Scalar::zero()];
            assert_eq!(presented_expectation(&set, &p, &psi).unwrap(), Scalar::from_int(6));
        }
        let psi = vec![Scalar::from_int(1), Scalar::i(), Scalar::from_int(-2), Scalar::from_int(3)];
        assert!(expectation(&set, &ineq.f, &psi).unwrap().is_zero());
    }

    #[test]
    fn square_minus_context_not_parity_proof() {
        let (set, ctx) = square();
        assert!(matches!(build_complete_set_parity(&set, &ctx[..5]).unwrap_err(), DeriveError::NotParityProof(_)));
    }

    #[test]
    fn single_basis_projector_score_on_basis_vector() {
        let set = basis3();
        let basis = Context::new_unchecked(ids(&[0, 1, 2]));
        let cs = build_complete_set_user(vec![basis_polynomial(&set, &basis).unwrap()]).unwrap();
        let f = f_polynomial(&set, &cs).unwrap();
        assert_eq!(f.render(&|id| set.symbol(id)), "-2*P1*P2 - 2*P1*P3 - 2*P2*P3 + P1 + P2 + P3 - 1");
        let ineq = Inequality {
            f,
            complete_set: cs,
            certificates: Certificates {
                completeness: general_unsat_with(&set, &[], Execution::Sequential).unwrap(),
                operator_zero_dim: 3,
                classical: ClassicalBound::Certified { stats: Default::default() },
            },
        };
        let p = present(&set, &ineq, Form::Projector);
        assert_eq!(p.render_score(&set), "-2*P1*P2 - 2*P1*P3 - 2*P2*P3 + P1 + P2 + P3");
        let e1 = vec![Scalar::one(), Scalar::zero(), Scalar::zero()];
        assert_eq!(presented_expectation(&set, &p, &e1).unwrap(), Scalar::one());
    }

    #[test]
    fn dichotomic_form_matches_projector_form_pointwise() {
        let set = basis3();
        let basis = Context::new_unchecked(ids(&[0, 1, 2]));
        let cs = build_complete_set_user(vec![basis_polynomial(&set, &basis).unwrap()]).unwrap();
        let ineq = Inequality {
            f: f_polynomial(&set, &cs).unwrap(),
            complete_set: cs,
            certificates: Certificates {
                completeness: general_unsat_with(&set, &[], Execution::Sequential).unwrap(),
                operator_zero_dim: 3,
                classical: ClassicalBound::Certified { stats: Default::default() },
            },
        };
        let pp = present(&set, &ineq, Form::Projector);
        let pd = present(&set, &ineq, Form::Dichotomic);
        // n = 3: 2(n-2) ΣA - 2 Σ AA
        assert_eq!(pd.render_score(&set), "-2*A1*A2 - 2*A1*A3 - 2*A2*A3 + 2*A1 + 2*A2 + 2*A3");
        assert_eq!(pd.scale, Rational::new(1.into(), 4.into()));
        for mask in 0..8u32 {
            let v = ValueAssignment::from_values((0..3).map(|k| int((mask >> k & 1) as i64)).collect());
            let lhs = pp.eval_native(&set, &v).unwrap() * Scalar::from_rational(pp.scale.clone())
                + Scalar::from_real(pp.offset.clone());
            let rhs = pd.eval_native(&set, &v).unwrap() * Scalar::from_rational(pd.scale.clone())
                + Scalar::from_real(pd.offset.clone());
            assert_eq!(lhs, rhs);
            assert_eq!(lhs, ineq.f.eval_assignment(&v).unwrap());
        }
    }

    #[test]
    fn zero_state_rejected() {
        let set = basis3();
        let zero = vec![Scalar::zero(); 3];
        assert_eq!(expectation(&set, &Poly::from_int(1), &zero).unwrap_err(), DeriveError::ZeroState);
    }

    #[test]
    fn primitive_scale_examples() {
        let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
        assert_eq!(primitive_scale(&[r(1, 2), r(-1, 2)]), r(1, 2));
        assert_eq!(primitive_scale(&[r(2, 1), r(4, 1), r(-6, 1)]), r(2, 1));
        assert_eq!(primitive_scale(&[r(2, 3), r(1, 2)]), r(1, 6));
    }
}
