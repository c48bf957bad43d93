//! Noncontextual value-assignment search.
//!
//! Three engines decide whether an observable set admits a value assignment
//! respecting its compatibility constraints:
//!
//! * [`ks_colorability`]: `{0,1}` colorings of a ray set, complete
//!   backtracking with unit propagation over orthogonality and basis rules.
//! * [`parity_certify`]: the sign/occurrence counting argument for sets of
//!   dichotomic observables whose context products are `±I`.
//! * [`general_unsat`]: eigenvalue assignments against an arbitrary list of
//!   context polynomials, backtracking with forward checking.
//!
//! [`classical_max`] bounds `F = -Σ |r_i|^2 / c_i` over all assignments,
//! either by reusing the unsatisfiability search or by exact branch and
//! bound.
//!
//! Searches may split their tree into independent subtrees and explore them
//! in parallel. Subtrees are combined in left-to-right order, so verdicts,
//! witnesses and the statistics of unsatisfiable runs match the sequential
//! search exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use num_traits::One;
use thiserror::Error;

use crate::compat::{context_product, CompatError, Context, OrthogonalityGraph};
use crate::exact::{int, Rational, Real, Scalar};
use crate::exec::{self, Execution};
use crate::model::{ObsId, ObservableSet};
use crate::poly::{ContextPolynomial, PolyError, Spectra};

/// Default node cap for exact classical maxima.
pub const DEFAULT_NODE_CAP: u64 = 100_000_000;

/// Largest per-polynomial assignment table the CSP engine will build.
const MAX_TABLE: usize = 1 << 20;

/// Frontier size aimed for when splitting a search for parallel execution.
const SPLIT_TARGET: usize = 64;
const SPLIT_MAX_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignError {
    #[error("observable {0} is not {{-1,1}}-dichotomic")]
    NotDichotomic(ObsId),
    #[error("observable {0} is not a ray")]
    NotRay(ObsId),
    #[error("product of context #{index} {context} is not ±I")]
    NotScalarMultiple { index: usize, context: Context },
    #[error("variable {0} lies outside its polynomial's context")]
    VariableOutsideContext(ObsId),
    #[error("context {0} has too many joint assignments to tabulate")]
    ContextTooLarge(Context),
    #[error("search budget of {cap} nodes exceeded")]
    SearchBudgetExceeded { cap: u64 },
    #[error(transparent)]
    Compat(#[from] CompatError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Values for (some of) the observables of a set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ValueAssignment(BTreeMap<ObsId, Rational>);

impl ValueAssignment {
    pub fn new() -> Self {
        ValueAssignment::default()
    }

    /// Assigns `values[k]` to observable `k`.
    pub fn from_values(values: Vec<Rational>) -> Self {
        ValueAssignment(values.into_iter().enumerate().map(|(k, v)| (ObsId(k), v)).collect())
    }

    pub fn get(&self, id: ObsId) -> Option<&Rational> {
        self.0.get(&id)
    }

    pub fn insert(&mut self, id: ObsId, v: Rational) {
        self.0.insert(id, v);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObsId, &Rational)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    /// Every value is an eigenvalue of its observable.
    pub fn is_spectral(&self, set: &ObservableSet) -> bool {
        self.iter().all(|(id, v)| set.get(id).is_some_and(|o| o.spectrum().contains(v)))
    }

    pub fn render(&self, set: &ObservableSet) -> String {
        let parts: Vec<String> = self.iter().map(|(id, v)| format!("{}={}", set.symbol(id), v)).collect();
        parts.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    KsProof,
    NotKsProof,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::KsProof => "KSProof",
            Verdict::NotKsProof => "NotKSProof",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    RayColoring,
    Parity,
    GeneralCsp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::RayColoring => "RayColoring",
            Method::Parity => "Parity",
            Method::GeneralCsp => "GeneralCSP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SearchStats {
    /// Branches tried, one per value attempted at a decision.
    pub nodes: u64,
    /// Values forced by propagation.
    pub propagations: u64,
    /// Branches closed by a conflict.
    pub conflicts: u64,
}

impl SearchStats {
    fn absorb(&mut self, o: &SearchStats) {
        self.nodes += o.nodes;
        self.propagations += o.propagations;
        self.conflicts += o.conflicts;
    }
}

/// Outcome of the parity argument, per context and per observable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParityReport {
    /// `δ_α` for each context, in input order.
    pub deltas: Vec<i8>,
    /// Number of contexts containing each observable.
    pub occurrences: Vec<usize>,
}

impl ParityReport {
    pub fn delta_product(&self) -> i8 {
        self.deltas.iter().product()
    }

    pub fn odd_observables(&self) -> Vec<ObsId> {
        self.occurrences.iter().enumerate().filter(|(_, &c)| c % 2 == 1).map(|(k, _)| ObsId(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParityViolation {
    /// `Π δ_α = +1`.
    DeltaProductPositive,
    /// These observables appear in an odd number of contexts.
    OddOccurrence(Vec<ObsId>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Witness {
    /// The search space was exhausted.
    Exhausted(SearchStats),
    /// An assignment satisfying every constraint.
    Satisfying(ValueAssignment),
    ParityHolds(ParityReport),
    ParityFails(ParityReport, Vec<ParityViolation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProofCertificate {
    pub verdict: Verdict,
    pub method: Method,
    pub witness: Witness,
}

impl ProofCertificate {
    pub fn is_proof(&self) -> bool {
        self.verdict == Verdict::KsProof
    }

    pub fn satisfying_assignment(&self) -> Option<&ValueAssignment> {
        match &self.witness {
            Witness::Satisfying(v) => Some(v),
            _ => None,
        }
    }

    pub fn stats(&self) -> Option<&SearchStats> {
        match &self.witness {
            Witness::Exhausted(s) => Some(s),
            _ => None,
        }
    }

    /// Multi-line human-readable summary.
    pub fn render(&self, set: &ObservableSet) -> String {
        let mut out = format!("verdict: {}\nmethod: {}\n", self.verdict, self.method);
        match &self.witness {
            Witness::Exhausted(s) => {
                out.push_str(&format!(
                    "search: exhausted ({} nodes, {} propagations, {} conflicts)\n",
                    s.nodes, s.propagations, s.conflicts
                ));
            }
            Witness::Satisfying(v) => out.push_str(&format!("witness: {}\n", v.render(set))),
            Witness::ParityHolds(r) | Witness::ParityFails(r, _) => {
                let d: Vec<String> = r.deltas.iter().map(|x| format!("{x:+}")).collect();
                out.push_str(&format!("deltas: {}\n", d.join(" ")));
                out.push_str(&format!("delta product: {:+}\n", r.delta_product()));
                if let Witness::ParityFails(_, vs) = &self.witness {
                    for v in vs {
                        match v {
                            ParityViolation::DeltaProductPositive => {
                                out.push_str("violated: product of deltas is +1\n")
                            }
                            ParityViolation::OddOccurrence(ids) => {
                                let names: Vec<String> = ids
                                    .iter()
                                    .map(|&i| format!("{} (appears {} times)", set.symbol(i), r.occurrences[i.0]))
                                    .collect();
                                out.push_str(&format!("violated: odd occurrence of {}\n", names.join(", ")));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Tuning for the search engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub execution: Execution,
    /// Node cap for exact branch and bound.
    pub node_cap: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { execution: Execution::default(), node_cap: DEFAULT_NODE_CAP }
    }
}

impl SearchConfig {
    pub fn sequential() -> Self {
        SearchConfig { execution: Execution::Sequential, ..Default::default() }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_node_cap(mut self, cap: u64) -> Self {
        self.node_cap = cap;
        self
    }
}

// ---------------------------------------------------------------------------
// generic backtracking driver

enum Expansion<S> {
    Complete,
    Branch(Vec<Option<S>>),
}

trait Engine: Sync {
    type State: Clone + Send;

    /// `Complete` when the state is a full solution; otherwise one child per
    /// value tried, `None` where propagation failed.
    fn expand(&self, s: &Self::State, stats: &mut SearchStats) -> Expansion<Self::State>;

    fn solution(&self, s: &Self::State) -> ValueAssignment;
}

/// Depth-first search; `abort` is polled at every node.
fn dfs<E: Engine>(e: &E, s: E::State, stats: &mut SearchStats, abort: &dyn Fn() -> bool) -> Option<ValueAssignment> {
    if abort() {
        return None;
    }
    match e.expand(&s, stats) {
        Expansion::Complete => Some(e.solution(&s)),
        Expansion::Branch(children) => {
            for child in children {
                stats.nodes += 1;
                match child {
                    None => stats.conflicts += 1,
                    Some(c) => {
                        if let Some(sol) = dfs(e, c, stats, abort) {
                            return Some(sol);
                        }
                    }
                }
            }
            None
        }
    }
}

enum Frontier<S> {
    Open(S),
    Solved(S),
}

/// Expands breadth-first until the frontier is large enough, keeping
/// left-to-right order and counting exactly what `dfs` would count.
fn split<E: Engine>(e: &E, root: E::State, stats: &mut SearchStats) -> Vec<Frontier<E::State>> {
    let mut level = vec![Frontier::Open(root)];
    for _ in 0..SPLIT_MAX_DEPTH {
        if level.len() >= SPLIT_TARGET || level.iter().all(|f| matches!(f, Frontier::Solved(_))) {
            break;
        }
        let mut next = Vec::new();
        for item in level {
            match item {
                Frontier::Solved(s) => next.push(Frontier::Solved(s)),
                Frontier::Open(s) => match e.expand(&s, stats) {
                    Expansion::Complete => next.push(Frontier::Solved(s)),
                    Expansion::Branch(children) => {
                        for child in children {
                            stats.nodes += 1;
                            match child {
                                None => stats.conflicts += 1,
                                Some(c) => next.push(Frontier::Open(c)),
                            }
                        }
                    }
                },
            }
        }
        level = next;
    }
    level
}

/// Runs the search sequentially or split into parallel subtrees. Returns
/// the leftmost solution; statistics are exact when no solution exists.
fn run<E: Engine>(e: &E, root: E::State, exec: Execution) -> (Option<ValueAssignment>, SearchStats) {
    let mut stats = SearchStats::default();
    if !exec.is_parallel() {
        let sol = dfs(e, root, &mut stats, &|| false);
        return (sol, stats);
    }
    let frontier = split(e, root, &mut stats);
    let found = AtomicUsize::new(usize::MAX);
    let items: Vec<(usize, Frontier<E::State>)> = frontier.into_iter().enumerate().collect();
    let results = exec::map(exec, items, |(k, item)| {
        let mut local = SearchStats::default();
        let sol = match item {
            Frontier::Solved(s) => Some(e.solution(&s)),
            Frontier::Open(s) => dfs(e, s, &mut local, &|| found.load(AtomicOrdering::Relaxed) < k),
        };
        if sol.is_some() {
            found.fetch_min(k, AtomicOrdering::Relaxed);
        }
        (sol, local)
    });
    let mut solution = None;
    for (sol, local) in results {
        stats.absorb(&local);
        if solution.is_none() {
            solution = sol;
        }
    }
    (solution, stats)
}

// ---------------------------------------------------------------------------
// ray coloring

struct Coloring<'a> {
    neighbors: Vec<Vec<usize>>,
    bases: Vec<Vec<usize>>,
    bases_of: Vec<Vec<usize>>,
    set: &'a ObservableSet,
}

#[derive(Clone)]
struct ColorState {
    values: Vec<Option<bool>>,
}

impl Coloring<'_> {
    /// Assigns and propagates; false on conflict.
    fn assign(&self, s: &mut ColorState, var: usize, val: bool, stats: &mut SearchStats) -> bool {
        let mut queue = vec![(var, val)];
        let mut first = true;
        while let Some((v, b)) = queue.pop() {
            match s.values[v] {
                Some(existing) if existing == b => continue,
                Some(_) => return false,
                None => {}
            }
            s.values[v] = Some(b);
            if !first {
                stats.propagations += 1;
            }
            first = false;
            if b {
                // rule (i): orthogonal rays cannot both be 1
                for &u in &self.neighbors[v] {
                    match s.values[u] {
                        Some(true) => return false,
                        Some(false) => {}
                        None => queue.push((u, false)),
                    }
                }
            } else {
                // rule (ii): each basis needs exactly one 1
                for &bi in &self.bases_of[v] {
                    let mut unassigned = None;
                    let mut open = 0;
                    let mut has_one = false;
                    for &m in &self.bases[bi] {
                        match s.values[m] {
                            Some(true) => has_one = true,
                            Some(false) => {}
                            None => {
                                open += 1;
                                unassigned = Some(m);
                            }
                        }
                    }
                    if has_one {
                        continue;
                    }
                    match open {
                        0 => return false,
                        1 => queue.push((unassigned.expect("one open"), true)),
                        _ => {}
                    }
                }
            }
        }
        true
    }

    fn choose(&self, s: &ColorState) -> Option<usize> {
        // the open basis with fewest unassigned members, then the member in
        // the most open bases, then lowest index
        let mut best: Option<(usize, usize)> = None;
        for (bi, members) in self.bases.iter().enumerate() {
            if members.iter().any(|&m| s.values[m] == Some(true)) {
                continue;
            }
            let open = members.iter().filter(|&&m| s.values[m].is_none()).count();
            if best.is_none_or(|(_, o)| open < o) {
                best = Some((bi, open));
            }
        }
        let (bi, _) = best?;
        let open_bases = |m: usize| {
            self.bases_of[m].iter().filter(|&&b| !self.bases[b].iter().any(|&x| s.values[x] == Some(true))).count()
        };
        self.bases[bi]
            .iter()
            .copied()
            .filter(|&m| s.values[m].is_none())
            .max_by_key(|&m| (open_bases(m), std::cmp::Reverse(m)))
    }
}

impl Engine for Coloring<'_> {
    type State = ColorState;

    fn expand(&self, s: &ColorState, stats: &mut SearchStats) -> Expansion<ColorState> {
        let Some(var) = self.choose(s) else {
            return Expansion::Complete;
        };
        let children = [false, true]
            .into_iter()
            .map(|val| {
                let mut c = s.clone();
                self.assign(&mut c, var, val, stats).then_some(c)
            })
            .collect();
        Expansion::Branch(children)
    }

    fn solution(&self, s: &ColorState) -> ValueAssignment {
        // every basis already holds a 1; remaining rays take 0
        let values = s.values.iter().map(|v| if v.unwrap_or(false) { int(1) } else { int(0) }).collect();
        let out = ValueAssignment::from_values(values);
        debug_assert!(out.is_spectral(self.set));
        out
    }
}

pub fn ks_colorability(
    set: &ObservableSet,
    graph: &OrthogonalityGraph,
    bases: &[Context],
) -> Result<ProofCertificate, AssignError> {
    ks_colorability_with(set, graph, bases, Execution::default())
}

/// Searches for a `{0,1}` assignment with no two orthogonal rays both 1 and
/// exactly one 1 in every basis.
pub fn ks_colorability_with(
    set: &ObservableSet,
    graph: &OrthogonalityGraph,
    bases: &[Context],
    exec: Execution,
) -> Result<ProofCertificate, AssignError> {
    if let Some(o) = set.observables().iter().find(|o| !o.is_ray()) {
        return Err(AssignError::NotRay(o.id()));
    }
    let n = set.len();
    let neighbors: Vec<Vec<usize>> = (0..n).map(|v| graph.neighbors(ObsId(v)).map(|u| u.0).collect()).collect();
    let bases: Vec<Vec<usize>> = bases.iter().map(|c| c.members().iter().map(|m| m.0).collect()).collect();
    let mut bases_of = vec![Vec::new(); n];
    for (bi, b) in bases.iter().enumerate() {
        for &m in b {
            bases_of[m].push(bi);
        }
    }
    let engine = Coloring { neighbors, bases, bases_of, set };
    let root = ColorState { values: vec![None; n] };
    let (sol, stats) = run(&engine, root, exec);
    Ok(match sol {
        Some(v) => ProofCertificate {
            verdict: Verdict::NotKsProof,
            method: Method::RayColoring,
            witness: Witness::Satisfying(v),
        },
        None => ProofCertificate {
            verdict: Verdict::KsProof,
            method: Method::RayColoring,
            witness: Witness::Exhausted(stats),
        },
    })
}

// ---------------------------------------------------------------------------
// parity

/// Computes `δ_α` for every context (each product must be `±I`).
pub fn context_deltas(set: &ObservableSet, contexts: &[Context]) -> Result<Vec<i8>, AssignError> {
    let plus = Scalar::one();
    let minus = Scalar::from_int(-1);
    contexts
        .iter()
        .enumerate()
        .map(|(index, ctx)| {
            let p = context_product(set, ctx)?;
            match p.delta {
                Some(d) if d == plus => Ok(1),
                Some(d) if d == minus => Ok(-1),
                _ => Err(AssignError::NotScalarMultiple { index, context: ctx.clone() }),
            }
        })
        .collect()
}

/// The parity argument: a proof iff `Π δ_α = -1` and every observable lies
/// in an even number of contexts.
pub fn parity_certify(set: &ObservableSet, contexts: &[Context]) -> Result<ProofCertificate, AssignError> {
    if let Some(o) = set.observables().iter().find(|o| !o.is_dichotomic()) {
        return Err(AssignError::NotDichotomic(o.id()));
    }
    let deltas = context_deltas(set, contexts)?;
    let mut occurrences = vec![0usize; set.len()];
    for ctx in contexts {
        for m in ctx.members() {
            occurrences[m.0] += 1;
        }
    }
    let report = ParityReport { deltas, occurrences };
    let mut violations = Vec::new();
    if report.delta_product() != -1 {
        violations.push(ParityViolation::DeltaProductPositive);
    }
    let odd = report.odd_observables();
    if !odd.is_empty() {
        violations.push(ParityViolation::OddOccurrence(odd));
    }
    Ok(if violations.is_empty() {
        ProofCertificate { verdict: Verdict::KsProof, method: Method::Parity, witness: Witness::ParityHolds(report) }
    } else {
        ProofCertificate {
            verdict: Verdict::NotKsProof,
            method: Method::Parity,
            witness: Witness::ParityFails(report, violations),
        }
    })
}

// ---------------------------------------------------------------------------
// general CSP over context polynomials

/// A polynomial tabulated over the joint spectra of its variables.
struct Compiled {
    /// Dense variable indices, increasing.
    vars: Vec<usize>,
    /// Mixed-radix strides matching `vars`.
    strides: Vec<usize>,
    /// `|r(v)|^2 / c` per joint assignment; zero exactly where `r(v) = 0`.
    weight: Vec<Real>,
}

impl Compiled {
    fn index(&self, values: &[Option<u8>]) -> Option<usize> {
        let mut idx = 0;
        for (k, &v) in self.vars.iter().enumerate() {
            idx += values[v]? as usize * self.strides[k];
        }
        Some(idx)
    }
}

/// Shared compilation of a polynomial list for the CSP and branch and bound.
struct Problem {
    /// Observable id of each dense variable.
    ids: Vec<ObsId>,
    /// Spectrum values of each variable, ascending.
    domains: Vec<Vec<Rational>>,
    /// Value indices in search order.
    order: Vec<Vec<u8>>,
    constraints: Vec<Compiled>,
    occurs: Vec<Vec<usize>>,
    /// Observables not constrained by any polynomial, with a default value.
    free: Vec<(ObsId, Rational)>,
}

impl Problem {
    fn compile(set: &ObservableSet, polys: &[ContextPolynomial], normalize: bool) -> Result<Problem, AssignError> {
        let mut used = std::collections::BTreeSet::new();
        for p in polys {
            for v in p.poly().variables() {
                if !p.context().contains(v) {
                    return Err(AssignError::VariableOutsideContext(v));
                }
                if set.get(v).is_none() {
                    return Err(PolyError::UnknownVariable(v).into());
                }
                used.insert(v);
            }
        }
        let ids: Vec<ObsId> = used.iter().copied().collect();
        let dense: BTreeMap<ObsId, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        let domains: Vec<Vec<Rational>> =
            ids.iter().map(|&id| set.spectrum_of(id).expect("checked").values().to_vec()).collect();
        let order = ids
            .iter()
            .zip(&domains)
            .map(|(&id, dom)| {
                set.spectrum_of(id)
                    .expect("checked")
                    .search_order()
                    .iter()
                    .map(|v| dom.iter().position(|d| d == v).expect("in spectrum") as u8)
                    .collect()
            })
            .collect();
        let mut constraints = Vec::with_capacity(polys.len());
        for p in polys {
            let pv: Vec<ObsId> = p.poly().variables().into_iter().collect();
            let vars: Vec<usize> = pv.iter().map(|id| dense[id]).collect();
            let mut size = 1usize;
            let mut strides = vec![0; vars.len()];
            for k in (0..vars.len()).rev() {
                strides[k] = size;
                size = size
                    .checked_mul(domains[vars[k]].len())
                    .filter(|&s| s <= MAX_TABLE)
                    .ok_or_else(|| AssignError::ContextTooLarge(p.context().clone()))?;
            }
            let c = if normalize {
                match p.normalization_constant() {
                    Ok(c) => c,
                    Err(PolyError::IdenticallyZeroOnAssignments) => Rational::one(),
                    Err(e) => return Err(e.into()),
                }
            } else {
                Rational::one()
            };
            let scale = Real::from_rational(Rational::one() / c);
            let mut weight = Vec::with_capacity(size);
            crate::poly::for_each_assignment(&pv, set, |value| {
                let r = p.poly().eval(value).expect("all variables assigned");
                weight.push(r.norm_sqr() * &scale);
            })?;
            constraints.push(Compiled { vars, strides, weight });
        }
        let mut occurs = vec![Vec::new(); ids.len()];
        for (ci, c) in constraints.iter().enumerate() {
            for &v in &c.vars {
                occurs[v].push(ci);
            }
        }
        let free = set
            .observables()
            .iter()
            .filter(|o| !used.contains(&o.id()))
            .map(|o| (o.id(), o.spectrum().search_order()[0].clone()))
            .collect();
        Ok(Problem { ids, domains, order, constraints, occurs, free })
    }

    fn assignment(&self, values: &[Option<u8>]) -> ValueAssignment {
        let mut out = ValueAssignment::new();
        for (k, v) in values.iter().enumerate() {
            let idx = v.unwrap_or(self.order[k][0]);
            out.insert(self.ids[k], self.domains[k][idx as usize].clone());
        }
        for (id, v) in &self.free {
            out.insert(*id, v.clone());
        }
        out
    }
}

struct Csp<'a> {
    problem: &'a Problem,
}

#[derive(Clone)]
struct CspState {
    values: Vec<Option<u8>>,
    /// Bitmask of still-allowed value indices.
    domains: Vec<u32>,
}

impl Csp<'_> {
    fn assign(&self, s: &mut CspState, var: usize, val: u8, stats: &mut SearchStats) -> bool {
        let p = self.problem;
        let mut queue = vec![(var, val)];
        let mut first = true;
        while let Some((v, x)) = queue.pop() {
            match s.values[v] {
                Some(existing) if existing == x => continue,
                Some(_) => return false,
                None => {}
            }
            if s.domains[v] & (1 << x) == 0 {
                return false;
            }
            s.values[v] = Some(x);
            s.domains[v] = 1 << x;
            if !first {
                stats.propagations += 1;
            }
            first = false;
            for &ci in &p.occurs[v] {
                if !self.check(s, ci, &mut queue) {
                    return false;
                }
            }
        }
        true
    }

    /// Forward check of one constraint: a fully assigned constraint must
    /// vanish; with one variable left its domain is filtered to zeros.
    fn check(&self, s: &mut CspState, ci: usize, queue: &mut Vec<(usize, u8)>) -> bool {
        let c = &self.problem.constraints[ci];
        let mut open = None;
        for &v in &c.vars {
            if s.values[v].is_none() {
                if open.is_some() {
                    return true;
                }
                open = Some(v);
            }
        }
        match open {
            None => c.index(&s.values).is_some_and(|i| c.weight[i].is_zero()),
            Some(u) => {
                let mut allowed = 0u32;
                for x in 0..self.problem.domains[u].len() as u8 {
                    if s.domains[u] & (1 << x) == 0 {
                        continue;
                    }
                    s.values[u] = Some(x);
                    if c.index(&s.values).is_some_and(|i| c.weight[i].is_zero()) {
                        allowed |= 1 << x;
                    }
                    s.values[u] = None;
                }
                s.domains[u] = allowed;
                match allowed.count_ones() {
                    0 => false,
                    1 => {
                        queue.push((u, allowed.trailing_zeros() as u8));
                        true
                    }
                    _ => true,
                }
            }
        }
    }

    fn choose(&self, s: &CspState) -> Option<usize> {
        (0..s.values.len())
            .filter(|&v| s.values[v].is_none())
            .min_by_key(|&v| (s.domains[v].count_ones(), std::cmp::Reverse(self.problem.occurs[v].len()), v))
    }
}

impl Engine for Csp<'_> {
    type State = CspState;

    fn expand(&self, s: &CspState, stats: &mut SearchStats) -> Expansion<CspState> {
        let Some(var) = self.choose(s) else {
            return Expansion::Complete;
        };
        let children = self.problem.order[var]
            .iter()
            .filter(|&&x| s.domains[var] & (1 << x) != 0)
            .map(|&x| {
                let mut c = s.clone();
                self.assign(&mut c, var, x, stats).then_some(c)
            })
            .collect();
        Expansion::Branch(children)
    }

    fn solution(&self, s: &CspState) -> ValueAssignment {
        self.problem.assignment(&s.values)
    }
}

/// Root state after propagating constant and single-variable constraints.
fn csp_root(problem: &Problem) -> Option<CspState> {
    let n = problem.ids.len();
    let mut s = CspState {
        values: vec![None; n],
        domains: problem.domains.iter().map(|d| if d.len() >= 32 { u32::MAX } else { (1u32 << d.len()) - 1 }).collect(),
    };
    let csp = Csp { problem };
    let mut queue = Vec::new();
    for (ci, c) in problem.constraints.iter().enumerate() {
        if c.vars.len() <= 1 && !csp.check(&mut s, ci, &mut queue) {
            return None;
        }
    }
    let mut stats = SearchStats::default();
    for (v, x) in queue {
        if !csp.assign(&mut s, v, x, &mut stats) {
            return None;
        }
    }
    Some(s)
}

pub fn general_unsat(set: &ObservableSet, polys: &[ContextPolynomial]) -> Result<ProofCertificate, AssignError> {
    general_unsat_with(set, polys, Execution::default())
}

/// Searches for an eigenvalue assignment at which every polynomial vanishes.
pub fn general_unsat_with(
    set: &ObservableSet,
    polys: &[ContextPolynomial],
    exec: Execution,
) -> Result<ProofCertificate, AssignError> {
    if set.observables().iter().any(|o| o.spectrum().degree() > 32) {
        return Err(AssignError::ContextTooLarge(Context::new_unchecked(Vec::new())));
    }
    let problem = Problem::compile(set, polys, false)?;
    let csp = Csp { problem: &problem };
    let (sol, stats) = match csp_root(&problem) {
        None => (None, SearchStats { nodes: 0, propagations: 0, conflicts: 1 }),
        Some(root) => run(&csp, root, exec),
    };
    Ok(match sol {
        Some(v) => ProofCertificate {
            verdict: Verdict::NotKsProof,
            method: Method::GeneralCsp,
            witness: Witness::Satisfying(v),
        },
        None => ProofCertificate {
            verdict: Verdict::KsProof,
            method: Method::GeneralCsp,
            witness: Witness::Exhausted(stats),
        },
    })
}

// ---------------------------------------------------------------------------
// classical maximum of F = -Σ |r_i|^2 / c_i

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Exact maximum by branch and bound.
    Exact,
    /// Only establish `max F <= -1` through the unsatisfiability search.
    CertifyOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassicalBound {
    /// `max F <= -1`, established by exhausting the assignment search.
    Certified { stats: SearchStats },
    /// The exact maximum of `F` and the first assignment attaining it.
    Exact {
        max: Real,
        argmax: ValueAssignment,
        /// Nodes visited; informational only, it varies under parallel
        /// execution.
        nodes: u64,
    },
}

impl ClassicalBound {
    /// Upper bound on `F` over all assignments.
    pub fn upper_bound(&self) -> Real {
        match self {
            ClassicalBound::Certified { .. } => Real::from_int(-1),
            ClassicalBound::Exact { max, .. } => max.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ClassicalBound::Exact { .. })
    }
}

/// Maximum over value assignments of `F = -Σ |r_i|^2 / c_i` for the given
/// complete-set candidates, with `c_i` their normalization constants.
pub fn classical_max(
    set: &ObservableSet,
    polys: &[ContextPolynomial],
    mode: BoundMode,
    config: SearchConfig,
) -> Result<ClassicalBound, AssignError> {
    match mode {
        BoundMode::CertifyOnly => {
            let cert = general_unsat_with(set, polys, config.execution)?;
            match cert.witness {
                Witness::Exhausted(stats) => Ok(ClassicalBound::Certified { stats }),
                // every term vanishes at the witness, and F <= 0 everywhere
                Witness::Satisfying(v) => Ok(ClassicalBound::Exact { max: Real::default(), argmax: v, nodes: 0 }),
                _ => unreachable!("general search yields search witnesses"),
            }
        }
        BoundMode::Exact => branch_and_bound(set, polys, config),
    }
}

struct Bnb<'a> {
    problem: &'a Problem,
    /// Variable assigned at each depth.
    order: Vec<usize>,
    /// Constraints whose last variable is assigned at each depth.
    completes_at: Vec<Vec<usize>>,
    cap: u64,
    nodes: &'a AtomicU64,
    /// Best value found by any subtree; subtrees prune strictly below it.
    shared: &'a Mutex<Option<Real>>,
}

struct Best {
    value: Option<Real>,
    argmax: Option<Vec<Option<u8>>>,
}

impl Bnb<'_> {
    fn search(
        &self,
        depth: usize,
        values: &mut [Option<u8>],
        penalty: Real,
        best: &mut Best,
    ) -> Result<(), AssignError> {
        let score = -penalty.clone();
        if let Some(b) = &best.value {
            if score <= *b {
                return Ok(());
            }
        }
        if let Some(g) = self.shared.lock().expect("not poisoned").as_ref() {
            if score < *g {
                return Ok(());
            }
        }
        if depth == self.order.len() {
            best.value = Some(score.clone());
            best.argmax = Some(values.to_vec());
            let mut g = self.shared.lock().expect("not poisoned");
            if g.as_ref().is_none_or(|x| score > *x) {
                *g = Some(score);
            }
            return Ok(());
        }
        let var = self.order[depth];
        for &x in &self.problem.order[var] {
            let n = self.nodes.fetch_add(1, AtomicOrdering::Relaxed) + 1;
            if n > self.cap {
                return Err(AssignError::SearchBudgetExceeded { cap: self.cap });
            }
            values[var] = Some(x);
            let mut p = penalty.clone();
            for &ci in &self.completes_at[depth] {
                let c = &self.problem.constraints[ci];
                p = p + &c.weight[c.index(values).expect("complete")];
            }
            self.search(depth + 1, values, p, best)?;
            values[var] = None;
            if best.value.as_ref().is_some_and(|b| b.is_zero()) {
                // F <= 0, nothing can beat zero
                return Ok(());
            }
        }
        Ok(())
    }
}

fn branch_and_bound(
    set: &ObservableSet,
    polys: &[ContextPolynomial],
    config: SearchConfig,
) -> Result<ClassicalBound, AssignError> {
    let problem = Problem::compile(set, polys, true)?;
    let n = problem.ids.len();
    // static order: most occurrences first, index tie-break
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(problem.occurs[v].len()), v));
    let mut position = vec![0; n];
    for (d, &v) in order.iter().enumerate() {
        position[v] = d;
    }
    let mut completes_at = vec![Vec::new(); n];
    let mut constant_penalty = Real::default();
    for (ci, c) in problem.constraints.iter().enumerate() {
        match c.vars.iter().map(|&v| position[v]).max() {
            Some(d) => completes_at[d].push(ci),
            None => constant_penalty = constant_penalty + &c.weight[0],
        }
    }
    let nodes = AtomicU64::new(0);
    let shared = Mutex::new(None);
    let bnb = Bnb { problem: &problem, order, completes_at, cap: config.node_cap, nodes: &nodes, shared: &shared };

    // split on the first few variables so subtrees can run independently
    let split_depth = if config.execution.is_parallel() {
        let mut d = 0;
        let mut width = 1usize;
        while d < n && width < SPLIT_TARGET {
            width *= problem.domains[bnb.order[d]].len();
            d += 1;
        }
        d
    } else {
        0
    };
    let mut prefixes: Vec<Vec<u8>> = vec![Vec::new()];
    for d in 0..split_depth {
        let var = bnb.order[d];
        prefixes = prefixes
            .into_iter()
            .flat_map(|p| {
                problem.order[var].iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    let results = exec::map(config.execution, prefixes, |prefix| -> Result<Best, AssignError> {
        let mut values = vec![None; n];
        let mut penalty = constant_penalty.clone();
        for (d, &x) in prefix.iter().enumerate() {
            nodes.fetch_add(1, AtomicOrdering::Relaxed);
            values[bnb.order[d]] = Some(x);
            for &ci in &bnb.completes_at[d] {
                let c = &problem.constraints[ci];
                penalty = penalty + &c.weight[c.index(&values).expect("complete")];
            }
        }
        let mut best = Best { value: None, argmax: None };
        bnb.search(prefix.len(), &mut values, penalty, &mut best)?;
        Ok(best)
    });
    let mut overall: Option<(Real, Vec<Option<u8>>)> = None;
    for r in results {
        let b = r?;
        if let (Some(v), Some(a)) = (b.value, b.argmax) {
            if overall.as_ref().is_none_or(|(o, _)| v > *o) {
                overall = Some((v, a));
            }
        }
    }
    let (max, argmax) = overall.expect("at least one complete assignment");
    debug_assert!(max.signum() <= 0);
    Ok(ClassicalBound::Exact { max, argmax: problem.assignment(&argmax), nodes: nodes.load(AtomicOrdering::Relaxed) })
}
