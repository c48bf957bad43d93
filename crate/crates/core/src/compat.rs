//! Compatibility structure: contexts, the ray orthogonality graph and its
//! bases.

use std::fmt;

use thiserror::Error;

use crate::exact::{ExactError, ExactMatrix, Scalar};
use crate::exec::{self, Execution};
use crate::model::{ObsId, ObservableSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompatError {
    #[error("observables {0} and {1} do not commute")]
    NotCommuting(ObsId, ObsId),
    #[error("observable {0} is not a ray")]
    NonRayMember(ObsId),
    #[error("observable {0} out of range")]
    OutOfRange(ObsId),
    #[error("observable {0} listed twice in a context")]
    RepeatedMember(ObsId),
    #[error("empty context")]
    EmptyContext,
    #[error("product of context {0} is not a multiple of the identity")]
    NotScalarMultiple(Context),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Pairwise commuting observables, members strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    members: Vec<ObsId>,
}

impl Context {
    /// Sorts `members`; callers are responsible for commutation.
    pub(crate) fn new_unchecked(mut members: Vec<ObsId>) -> Self {
        members.sort();
        members.dedup();
        Context { members }
    }

    pub fn members(&self) -> &[ObsId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: ObsId) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Checks that `ids` are distinct, in range and pairwise commuting.
pub fn validate_context(set: &ObservableSet, ids: &[ObsId]) -> Result<Context, CompatError> {
    if ids.is_empty() {
        return Err(CompatError::EmptyContext);
    }
    let mut sorted = ids.to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(CompatError::RepeatedMember(w[0]));
        }
    }
    for &id in &sorted {
        if set.get(id).is_none() {
            return Err(CompatError::OutOfRange(id));
        }
    }
    for (k, &a) in sorted.iter().enumerate() {
        for &b in &sorted[k + 1..] {
            let ma = set.get(a).expect("checked").matrix();
            let mb = set.get(b).expect("checked").matrix();
            if !ma.commutes(mb)? {
                return Err(CompatError::NotCommuting(a, b));
            }
        }
    }
    Ok(Context { members: sorted })
}

/// Product of a context's member operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextProduct {
    pub matrix: ExactMatrix,
    /// `Some(δ)` when the product equals `δ·I`.
    pub delta: Option<Scalar>,
}

impl ContextProduct {
    pub fn delta_or_err(&self, ctx: &Context) -> Result<Scalar, CompatError> {
        self.delta.clone().ok_or_else(|| CompatError::NotScalarMultiple(ctx.clone()))
    }
}

pub fn context_product(set: &ObservableSet, ctx: &Context) -> Result<ContextProduct, CompatError> {
    let mut acc = ExactMatrix::identity(set.dim());
    for &id in ctx.members() {
        let m = set.get(id).ok_or(CompatError::OutOfRange(id))?.matrix();
        acc = acc.mat_mul(m)?;
    }
    let delta = acc.scalar_multiple_of_identity();
    Ok(ContextProduct { matrix: acc, delta })
}

/// Graph with one vertex per ray (vertex `k` is observable `k`) and an edge
/// for every orthogonal pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthogonalityGraph {
    adjacency: Vec<Vec<bool>>,
    projectors: Vec<ExactMatrix>,
}

impl OrthogonalityGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_edge(&self, a: ObsId, b: ObsId) -> bool {
        self.adjacency[a.0][b.0]
    }

    pub fn neighbors(&self, v: ObsId) -> impl Iterator<Item = ObsId> + '_ {
        self.adjacency[v.0].iter().enumerate().filter(|(_, &e)| e).map(|(k, _)| ObsId(k))
    }

    pub fn degree(&self, v: ObsId) -> usize {
        self.adjacency[v.0].iter().filter(|&&e| e).count()
    }

    /// Edges `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> Vec<(ObsId, ObsId)> {
        let n = self.vertex_count();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.adjacency[i][j] {
                    out.push((ObsId(i), ObsId(j)));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }
}

pub fn build_orthogonality_graph(set: &ObservableSet) -> Result<OrthogonalityGraph, CompatError> {
    let mut rays = Vec::with_capacity(set.len());
    for obs in set.observables() {
        rays.push(obs.ray().ok_or(CompatError::NonRayMember(obs.id()))?);
    }
    let n = rays.len();
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rays[i].is_orthogonal(rays[j])? {
                adjacency[i][j] = true;
                adjacency[j][i] = true;
            }
        }
    }
    let projectors = rays.iter().map(|r| r.projector().clone()).collect();
    Ok(OrthogonalityGraph { adjacency, projectors })
}

pub fn enumerate_bases(graph: &OrthogonalityGraph, n: usize) -> Vec<Context> {
    enumerate_bases_with(graph, n, Execution::default())
}

/// All `n`-cliques of the graph, i.e. the orthogonal bases of an
/// `n`-dimensional space found among the rays. Cliques whose projectors do
/// not sum to the identity (only possible when `n` is not the ambient
/// dimension) are dropped. Top-level Bron–Kerbosch
/// branches are independent and may run in parallel; the output is sorted
/// either way.
pub fn enumerate_bases_with(graph: &OrthogonalityGraph, n: usize, exec: Execution) -> Vec<Context> {
    let count = graph.vertex_count();
    if n == 0 {
        return Vec::new();
    }
    let starts: Vec<usize> = (0..count).collect();
    let per_vertex = exec::map(exec, starts, |v| {
        let nbrs: Vec<usize> = (0..count).filter(|&u| graph.adjacency[v][u]).collect();
        let p: Vec<usize> = nbrs.iter().copied().filter(|&u| u > v).collect();
        let x: Vec<usize> = nbrs.iter().copied().filter(|&u| u < v).collect();
        let mut found = Vec::new();
        bron_kerbosch(graph, n, &mut vec![v], p, x, &mut found);
        found
    });
    let mut cliques: Vec<Vec<usize>> = per_vertex.into_iter().flatten().collect();
    for c in &mut cliques {
        c.sort_unstable();
    }
    cliques.sort();
    cliques
        .into_iter()
        .filter(|c| sums_to_identity(graph, c))
        .map(|c| Context::new_unchecked(c.into_iter().map(ObsId).collect()))
        .collect()
}

fn sums_to_identity(graph: &OrthogonalityGraph, clique: &[usize]) -> bool {
    let dim = graph.projectors[clique[0]].dim();
    let mut acc = ExactMatrix::zeros(dim);
    for &v in clique {
        acc = acc.add(&graph.projectors[v]).expect("same dimension");
    }
    acc.is_identity()
}

/// Pivoting Bron–Kerbosch restricted to maximal cliques of size exactly
/// `target`.
fn bron_kerbosch(
    graph: &OrthogonalityGraph,
    target: usize,
    r: &mut Vec<usize>,
    p: Vec<usize>,
    mut x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() && r.len() == target {
            out.push(r.clone());
        }
        return;
    }
    if r.len() + p.len() < target || r.len() >= target {
        return;
    }
    let adj = &graph.adjacency;
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| (p.iter().filter(|&&w| adj[u][w]).count(), std::cmp::Reverse(u)))
        .expect("p non-empty");
    let candidates: Vec<usize> = p.iter().copied().filter(|&u| !adj[pivot][u]).collect();
    let mut p = p;
    for v in candidates {
        let np: Vec<usize> = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let nx: Vec<usize> = x.iter().copied().filter(|&u| adj[v][u]).collect();
        r.push(v);
        bron_kerbosch(graph, target, r, np, nx, out);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}
