//! Oracles, strategies and property checks shared by the acceptance and
//! property test targets.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use ksineq::assign::{
    classical_max, general_unsat, ks_colorability, BoundMode, SearchConfig, ValueAssignment, Verdict,
};
use ksineq::catalog;
use ksineq::compat::{build_orthogonality_graph, enumerate_bases, validate_context, Context, OrthogonalityGraph};
use ksineq::exact::{int, rational, Rational, Real, Scalar};
use ksineq::io::Mode;
use ksineq::model::{ObsId, ObservableSet, Spectrum};
use ksineq::pipeline::{self, Options};
use ksineq::poly::{ContextPolynomial, Monomial, Poly};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn ids(v: &[usize]) -> Vec<ObsId> {
    v.iter().map(|&k| ObsId(k)).collect()
}

/// Every assignment of `vars` drawn from `domain(var)`.
pub fn assignments(vars: &[ObsId], domain: &dyn Fn(ObsId) -> Vec<Rational>) -> Vec<ValueAssignment> {
    let mut out = vec![ValueAssignment::new()];
    for &v in vars {
        let values = domain(v);
        out = out
            .into_iter()
            .flat_map(|a| {
                values.iter().map(move |x| {
                    let mut b = a.clone();
                    b.insert(v, x.clone());
                    b
                })
            })
            .collect();
    }
    out
}

fn pair(a: ObsId, b: ObsId) -> Poly {
    Poly::var(a).mul(&Poly::var(b))
}

fn sum_of_pairs(members: &[ObsId]) -> Poly {
    let mut p = Poly::zero();
    for (k, &a) in members.iter().enumerate() {
        for &b in &members[k + 1..] {
            p = p.add(&pair(a, b));
        }
    }
    p
}

/// `2 Σ_{i<j} P_i P_j - Σ P_i + 1` for one basis.
fn basis_square(basis: &Context) -> Poly {
    sum_of_pairs(basis.members())
        .scale(&Scalar::from_int(2))
        .sub(&Poly::sum_of(basis.members()))
        .add(&Poly::from_int(1))
}

/// Oracle for the ray construction: `-Σ_edges P_i P_j - Σ_bases (2ΣPP - ΣP + 1)`.
pub fn ray_f_oracle(graph: &OrthogonalityGraph, bases: &[Context]) -> Poly {
    let mut f = Poly::zero();
    for (a, b) in graph.edges() {
        f = f.sub(&pair(a, b));
    }
    for b in bases {
        f = f.sub(&basis_square(b));
    }
    f
}

/// Oracle for the bases-only construction: `-Σ_bases (2ΣPP - ΣP + 1)`.
pub fn bases_f_oracle(bases: &[Context]) -> Poly {
    bases.iter().fold(Poly::zero(), |f, b| f.sub(&basis_square(b)))
}

/// Projector score `Σ_bases (ΣP - 2ΣPP)`.
pub fn bases_projector_score(bases: &[Context]) -> Poly {
    bases.iter().fold(Poly::zero(), |g, b| g.sub(&basis_square(b)).add(&Poly::from_int(1)))
}

/// Dichotomic score `Σ_bases (2(n-2) ΣA - 2 ΣAA)`.
pub fn bases_dichotomic_score(bases: &[Context], n: i64) -> Poly {
    bases.iter().fold(Poly::zero(), |g, b| {
        g.add(&Poly::sum_of(b.members()).scale(&Scalar::from_int(2 * (n - 2))))
            .sub(&sum_of_pairs(b.members()).scale(&Scalar::from_int(2)))
    })
}

/// Oracle for the parity construction: `Σ_α δ_α ΠA / 2 - N/2`.
pub fn parity_f_oracle(contexts: &[Context], deltas: &[i8]) -> Poly {
    let half = Scalar::from_rational(rational(1, 2));
    parity_score(contexts, deltas)
        .scale(&half)
        .sub(&Poly::constant(Scalar::from_rational(rational(contexts.len() as i64, 2))))
}

/// Parity score `Σ_α δ_α ΠA`.
pub fn parity_score(contexts: &[Context], deltas: &[i8]) -> Poly {
    contexts
        .iter()
        .zip(deltas)
        .fold(Poly::zero(), |g, (c, &d)| g.add(&Poly::product_of(c.members()).scale(&Scalar::from_int(d as i64))))
}

/// Exhaustive maximum of `g` over `±1` assignments of its variables.
pub fn brute_max_dichotomic(g: &Poly) -> Real {
    let vars: Vec<ObsId> = g.variables().into_iter().collect();
    assignments(&vars, &|_| vec![int(-1), int(1)])
        .iter()
        .map(|v| g.eval_assignment(v).unwrap().re().clone())
        .max()
        .unwrap()
}

/// Checks a satisfying assignment of a ray set against the coloring rules.
pub fn coloring_holds(graph: &OrthogonalityGraph, bases: &[Context], v: &ValueAssignment) -> Result<(), String> {
    let value = |id: ObsId| v.get(id).cloned().ok_or(format!("P{} unassigned", id.number()));
    for id in 0..graph.vertex_count() {
        let x = value(ObsId(id))?;
        if x != int(0) && x != int(1) {
            return Err(format!("P{} = {x} is not 0 or 1", id + 1));
        }
    }
    for (a, b) in graph.edges() {
        if value(a)? * value(b)? != int(0) {
            return Err(format!("orthogonal P{} and P{} both 1", a.number(), b.number()));
        }
    }
    for b in bases {
        let mut s = int(0);
        for &m in b.members() {
            s += value(m)?;
        }
        if s != int(1) {
            return Err(format!("basis sums to {s}"));
        }
    }
    Ok(())
}

pub fn mermin_peres() -> (ObservableSet, Vec<Context>) {
    let l = catalog::find("mermin-peres").unwrap().load();
    (l.set, l.contexts)
}

pub fn parity_polys(set: &ObservableSet, contexts: &[Context], deltas: &[i8]) -> Vec<ContextPolynomial> {
    contexts
        .iter()
        .zip(deltas)
        .map(|(c, &d)| {
            ContextPolynomial::new(set, c.clone(), Poly::product_of(c.members()).sub(&Poly::from_int(d as i64)))
                .unwrap()
        })
        .collect()
}

/// The 18-ray set with its graph and bases, built once.
pub fn cabello_parts() -> &'static (ObservableSet, OrthogonalityGraph, Vec<Context>) {
    static PARTS: OnceLock<(ObservableSet, OrthogonalityGraph, Vec<Context>)> = OnceLock::new();
    PARTS.get_or_init(|| {
        let set = catalog::find("cabello-18").unwrap().load().set;
        let graph = build_orthogonality_graph(&set).unwrap();
        let bases = enumerate_bases(&graph, set.dim());
        (set, graph, bases)
    })
}

pub fn cabello() -> ObservableSet {
    cabello_parts().0.clone()
}

pub fn basis_polys(set: &ObservableSet, bases: &[Context]) -> Vec<ContextPolynomial> {
    bases
        .iter()
        .map(|b| ContextPolynomial::new(set, b.clone(), Poly::sum_of(b.members()).sub(&Poly::from_int(1))).unwrap())
        .collect()
}

/// The rays of `set` at `keep`, as a new set.
pub fn ray_subset(set: &ObservableSet, keep: &[usize]) -> ObservableSet {
    let vectors = keep.iter().map(|&k| set.observables()[k].ray().unwrap().vector().to_vec()).collect();
    ObservableSet::from_rays(set.dim(), vectors).unwrap()
}

// ---------------------------------------------------------------- strategies

fn spectrum_choices() -> Vec<Spectrum> {
    vec![
        Spectrum::dichotomic(),
        Spectrum::binary(),
        Spectrum::from_ints(&[-1, 0, 1]).unwrap(),
        Spectrum::from_ints(&[0, 1, 2]).unwrap(),
        Spectrum::new(vec![rational(-1, 2), rational(3, 2)]).unwrap(),
    ]
}

/// Random polynomials in `vars` variables with Gaussian-rational coefficients.
pub fn random_poly(vars: usize, max_exp: u32) -> impl Strategy<Value = Poly> {
    proptest::collection::vec((proptest::collection::vec(0..=max_exp, vars), -5i64..6, 1i64..4, -3i64..4), 1..6)
        .prop_map(move |terms| {
            let mut p = Poly::zero();
            for (exps, n, d, im) in terms {
                let m = Monomial::from_powers(exps.iter().enumerate().map(|(k, &e)| (ObsId(k), e)).collect());
                p.add_term(m, Scalar::gaussian(rational(n, d), int(im)));
            }
            p
        })
}

/// A polynomial in three variables with a spectrum per variable.
pub fn poly_with_spectra() -> impl Strategy<Value = (Poly, Vec<usize>)> {
    (random_poly(3, 4), proptest::collection::vec(0..spectrum_choices().len(), 3))
}

pub fn real_poly(vars: usize, max_exp: u32) -> impl Strategy<Value = Poly> {
    proptest::collection::vec((proptest::collection::vec(0..=max_exp, vars), -4i64..5, 1i64..3), 1..5).prop_map(
        move |terms| {
            let mut p = Poly::zero();
            for (exps, n, d) in terms {
                let m = Monomial::from_powers(exps.iter().enumerate().map(|(k, &e)| (ObsId(k), e)).collect());
                p.add_term(m, Scalar::from_rational(rational(n, d)));
            }
            p
        },
    )
}

/// Which of two commuting triples a context polynomial lives on.
pub fn context_family() -> impl Strategy<Value = bool> {
    any::<bool>()
}

pub fn nonempty_subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n)
}

// ---------------------------------------------------------------- properties

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(TestCaseError::fail(format!($($fmt)+)));
        }
    };
}

/// Reduction by the minimal polynomials leaves every spectral value alone.
pub fn reduce_preserves_evaluation((p, choice): (Poly, Vec<usize>)) -> Result<(), TestCaseError> {
    let choices = spectrum_choices();
    let spectra: BTreeMap<ObsId, Spectrum> =
        choice.iter().enumerate().map(|(k, &c)| (ObsId(k), choices[c].clone())).collect();
    let reduced = p.reduce(&spectra);
    for (m, _) in reduced.terms() {
        for &(id, e) in m.powers() {
            check!((e as usize) < spectra[&id].degree(), "power {e} survives reduction");
        }
    }
    let vars = ids(&[0, 1, 2]);
    for v in assignments(&vars, &|id| spectra[&id].values().to_vec()) {
        check!(p.eval_assignment(&v).unwrap() == reduced.eval_assignment(&v).unwrap(), "value changed at {v:?}");
    }
    Ok(())
}

/// `|r|^2 / c` is 0 where `r` vanishes, at least 1 elsewhere, and exactly 1
/// somewhere.
pub fn normalized_square_bounds((p, rays): (Poly, bool)) -> Result<(), TestCaseError> {
    let set = if rays {
        ObservableSet::from_int_rays(3, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap()
    } else {
        ObservableSet::from_paulis(&["ZI", "IZ", "ZZ"]).unwrap()
    };
    let ctx = validate_context(&set, &ids(&[0, 1, 2])).unwrap();
    let cp = ContextPolynomial::new(&set, ctx, p).unwrap();
    let vars = ids(&[0, 1, 2]);
    let all = assignments(&vars, &|id| set.get(id).unwrap().spectrum().values().to_vec());
    let nonzero_somewhere = all.iter().any(|v| !cp.eval_assignment(v).unwrap().is_zero());
    let ns = match cp.normalized_square() {
        Ok(ns) => ns,
        Err(e) => {
            check!(!nonzero_somewhere, "normalized_square failed on a nonzero polynomial: {e}");
            return Ok(());
        }
    };
    let mut hit_one = false;
    for v in &all {
        let base = cp.eval_assignment(v).unwrap();
        let sq = ns.eval_assignment(v).unwrap().to_rational().expect("squares are real");
        if base.is_zero() {
            check!(sq == int(0), "square nonzero where base vanishes");
        } else {
            check!(sq >= int(1), "square {sq} below 1");
            hit_one |= sq == int(1);
        }
    }
    check!(!nonzero_somewhere || hit_one, "normalized square never equals 1");
    Ok(())
}

/// Non-proof verdicts on ray subsets carry witnesses obeying the rules.
pub fn ray_witnesses_reverify(keep: Vec<usize>) -> Result<(), TestCaseError> {
    let set = ray_subset(&cabello_parts().0, &keep);
    let graph = build_orthogonality_graph(&set).unwrap();
    let bases = enumerate_bases(&graph, set.dim());
    let cert = ks_colorability(&set, &graph, &bases).unwrap();
    if cert.verdict == Verdict::NotKsProof {
        let v = cert.satisfying_assignment().expect("non-proofs carry a witness");
        if let Err(e) = coloring_holds(&graph, &bases, v) {
            return Err(TestCaseError::fail(e));
        }
    }
    Ok(())
}

/// Non-proof verdicts of the general search carry witnesses zeroing every
/// polynomial.
pub fn general_witnesses_reverify(keep: Vec<usize>) -> Result<(), TestCaseError> {
    let (set, contexts) = mermin_peres();
    let deltas = ksineq::assign::context_deltas(&set, &contexts).unwrap();
    let polys = parity_polys(&set, &contexts, &deltas);
    let chosen: Vec<ContextPolynomial> = keep.iter().map(|&k| polys[k].clone()).collect();
    let cert = general_unsat(&set, &chosen).unwrap();
    if let Some(v) = cert.satisfying_assignment() {
        check!(v.is_spectral(&set), "witness leaves the spectra");
        for p in &chosen {
            check!(p.eval_assignment(v).unwrap().is_zero(), "witness violates {}", p.render(&set));
        }
    } else {
        check!(cert.verdict == Verdict::KsProof, "non-proof without witness");
    }
    Ok(())
}

/// `max F = 0` exactly when some assignment satisfies every polynomial.
fn max_zero_iff_satisfiable(set: &ObservableSet, polys: &[ContextPolynomial]) -> Result<(), TestCaseError> {
    let sat = general_unsat(set, polys).unwrap().verdict == Verdict::NotKsProof;
    let max = classical_max(set, polys, BoundMode::Exact, SearchConfig::default()).unwrap().upper_bound();
    check!((max == Real::from_int(0)) == sat, "max F = {max} but satisfiable = {sat}");
    check!(max <= Real::from_int(0), "max F = {max} is positive");
    if !sat {
        check!(max <= Real::from_int(-1), "unsatisfiable yet max F = {max}");
    }
    Ok(())
}

pub fn max_zero_iff_satisfiable_parity(keep: Vec<usize>) -> Result<(), TestCaseError> {
    let (set, contexts) = mermin_peres();
    let deltas = ksineq::assign::context_deltas(&set, &contexts).unwrap();
    let polys = parity_polys(&set, &contexts, &deltas);
    let chosen: Vec<ContextPolynomial> = keep.iter().map(|&k| polys[k].clone()).collect();
    max_zero_iff_satisfiable(&set, &chosen)
}

pub fn max_zero_iff_satisfiable_bases(keep: Vec<usize>) -> Result<(), TestCaseError> {
    let (set, _, bases) = cabello_parts();
    let chosen: Vec<Context> = keep.iter().filter_map(|&k| bases.get(k).cloned()).collect();
    if chosen.is_empty() {
        return Ok(());
    }
    max_zero_iff_satisfiable(set, &basis_polys(set, &chosen))
}

/// Each catalog entry gets the same verdict from its specialised engine and
/// from the general search.
pub fn cross_method_agreement() -> Result<Vec<String>, String> {
    let mut lines = Vec::new();
    for entry in catalog::entries() {
        let loaded = entry.load();
        let native = pipeline::verify(&loaded, &Options::default()).map_err(|e| e.to_string())?;
        let general = pipeline::verify(&loaded, &Options { mode: Some(Mode::General), ..Default::default() })
            .map_err(|e| e.to_string())?;
        if native.certificate.verdict != general.certificate.verdict || native.certificate.verdict != entry.verdict {
            return Err(format!(
                "{}: {} gives {}, general search gives {}",
                entry.name, native.certificate.method, native.certificate.verdict, general.certificate.verdict
            ));
        }
        lines.push(format!("{} {}={}", entry.name, native.certificate.method, general.certificate.verdict));
    }
    Ok(lines)
}
