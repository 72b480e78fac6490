//! Weighted undirected graphs and the reversible walk they define.
//!
//! A graph stores a symmetric weight `ω(u, v) > 0` once per unordered pair
//! (self-loops allowed, counted once in the vertex total `ω(x)`). From it we
//! derive the stationary measure `π(x) = ω(x) / Σ ω`, the one-step kernel
//! `K(x, y) = ω(x, y) / ω(x)` and the Laplacian `Δ = I − K`, all in the
//! `L²(π)` inner product `⟨f, g⟩ = Σ f g π`.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::ops::Add;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Edge weight type: floats for numerics, exact rationals for the
/// construction's bookkeeping.
pub trait Weight: Clone + Debug + PartialOrd + Zero + Add<Output = Self> + Send + Sync {
    /// Finite (NaN/inf are rejected like nonpositive weights).
    fn is_finite_weight(&self) -> bool;
}

impl Weight for f32 {
    fn is_finite_weight(&self) -> bool {
        self.is_finite()
    }
}

impl Weight for f64 {
    fn is_finite_weight(&self) -> bool {
        self.is_finite()
    }
}

impl Weight for BigRational {
    fn is_finite_weight(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub weight: T,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph<T> {
    num_vertices: usize,
    edges: Vec<Edge<T>>,
    adjacency: Vec<Vec<(usize, T)>>,
    vertex_weight: Vec<T>,
    total_weight: T,
}

impl<T: Weight> WeightedGraph<T> {
    /// Validates an edge list. Pairs are unordered: `(1, 0)` and `(0, 1)`
    /// name the same edge.
    pub fn new(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut list: Vec<Edge<T>> = Vec::new();
        for (a, b, w) in edges {
            let (u, v) = if a <= b { (a, b) } else { (b, a) };
            if v >= num_vertices {
                return Err(Error::VertexOutOfRange(v, num_vertices));
            }
            if !w.is_finite_weight() || !(w > T::zero()) {
                return Err(Error::NonpositiveWeight(u, v, format!("{w:?}")));
            }
            list.push(Edge { u, v, weight: w });
        }
        list.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = list.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::DuplicateEdge(w[0].u, w[0].v));
        }

        let mut adjacency: Vec<Vec<(usize, T)>> = vec![Vec::new(); num_vertices];
        let mut vertex_weight = vec![T::zero(); num_vertices];
        for e in &list {
            adjacency[e.u].push((e.v, e.weight.clone()));
            vertex_weight[e.u] = vertex_weight[e.u].clone() + e.weight.clone();
            if e.u != e.v {
                adjacency[e.v].push((e.u, e.weight.clone()));
                vertex_weight[e.v] = vertex_weight[e.v].clone() + e.weight.clone();
            }
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(y, _)| y);
        }
        if let Some(x) = vertex_weight.iter().position(|w| !(*w > T::zero())) {
            return Err(Error::IsolatedVertex(x));
        }
        let total_weight = vertex_weight
            .iter()
            .cloned()
            .fold(T::zero(), |acc, w| acc + w);
        Ok(Self {
            num_vertices,
            edges: list,
            adjacency,
            vertex_weight,
            total_weight,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Canonical edges, `u <= v`, sorted.
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Neighbours of `x` with weights, sorted by index (self-loop included).
    pub fn neighbors(&self, x: usize) -> &[(usize, T)] {
        &self.adjacency[x]
    }

    /// `ω(x, y)`, zero when the pair carries no edge.
    pub fn weight(&self, x: usize, y: usize) -> T {
        self.adjacency[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .map(|i| self.adjacency[x][i].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    /// `ω(x) = Σ_z ω(x, z)`.
    pub fn vertex_weight(&self, x: usize) -> &T {
        &self.vertex_weight[x]
    }

    pub fn vertex_weights(&self) -> &[T] {
        &self.vertex_weight
    }

    pub fn total_weight(&self) -> &T {
        &self.total_weight
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }

    /// Number of connected components (self-loops do not connect anything).
    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.num_vertices];
        let mut count = 0;
        for s in 0..self.num_vertices {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &(y, _) in &self.adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        count
    }

    pub fn map_weights<U: Weight>(&self, f: impl Fn(&T) -> U) -> Result<WeightedGraph<U>> {
        WeightedGraph::new(
            self.num_vertices,
            self.edges.iter().map(|e| (e.u, e.v, f(&e.weight))),
        )
    }
}

/// The two matrices describing `Δ`: `I − K` itself and the conjugate
/// `I − M` with `M(x, y) = √(π(x)/π(y)) K(x, y)`, which is symmetric.
#[derive(Debug, Clone)]
pub struct Laplacian<T> {
    pub delta: Matrix<T>,
    pub symmetrized_kernel: Matrix<T>,
}

impl<T: Scalar> Laplacian<T> {
    /// `I − M`, symmetric with the same spectrum as `Δ`.
    pub fn symmetric(&self) -> Matrix<T> {
        let n = self.symmetrized_kernel.rows();
        Matrix::from_fn(n, n, |i, j| {
            let id = if i == j { T::one() } else { T::zero() };
            id - self.symmetrized_kernel[(i, j)]
        })
    }
}

/// Dirichlet form and `L^p(π)` norms of one test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormSummary<T> {
    /// `⟨Δf, f⟩` evaluated as `Σ_x π(x) f(x) (Δf)(x)`.
    pub energy: T,
    /// `½ Σ_{x,y} π(x) K(x,y) (f(x) − f(y))²`.
    pub energy_pairwise: T,
    pub l1: T,
    pub l2: T,
    /// `Var_π f`.
    pub variance: T,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn stationary(&self) -> Vec<T> {
        self.vertex_weight
            .iter()
            .map(|&w| w / self.total_weight)
            .collect()
    }

    /// `π_* = min_x π(x)`, the smallest measure of a nonempty set.
    pub fn pi_star(&self) -> T {
        self.stationary().into_iter().fold(T::infinity(), T::min)
    }

    pub fn transition_kernel(&self) -> Matrix<T> {
        let n = self.num_vertices;
        let mut k = Matrix::zeros(n, n);
        for x in 0..n {
            let wx = self.vertex_weight[x];
            for &(y, w) in &self.adjacency[x] {
                k[(x, y)] = w / wx;
            }
        }
        k
    }

    /// `M(x, y) = ω(x, y) / √(ω(x) ω(y))`.
    pub fn symmetrized_kernel(&self) -> Matrix<T> {
        let n = self.num_vertices;
        let sqrt_w: Vec<T> = self.vertex_weight.iter().map(|w| w.sqrt()).collect();
        let mut m = Matrix::zeros(n, n);
        for x in 0..n {
            for &(y, w) in &self.adjacency[x] {
                m[(x, y)] = w / (sqrt_w[x] * sqrt_w[y]);
            }
        }
        m
    }

    pub fn laplacian(&self) -> Laplacian<T> {
        let n = self.num_vertices;
        let k = self.transition_kernel();
        let delta = Matrix::from_fn(n, n, |i, j| {
            let id = if i == j { T::one() } else { T::zero() };
            id - k[(i, j)]
        });
        Laplacian {
            delta,
            symmetrized_kernel: self.symmetrized_kernel(),
        }
    }

    /// Matrix of `Δ_A` acting on functions supported in `A`: the principal
    /// submatrix of `Δ` on the members of `A` (in increasing order).
    pub fn dirichlet_operator(&self, a: &VertexSet) -> Result<Matrix<T>> {
        self.check_set(a)?;
        let n = a.len();
        let idx = a.members();
        Ok(Matrix::from_fn(n, n, |i, j| {
            let id = if i == j { T::one() } else { T::zero() };
            id - self.weight(idx[i], idx[j]) / self.vertex_weight[idx[i]]
        }))
    }

    /// Principal submatrix of the symmetric `I − M` on `A`.
    pub fn symmetric_dirichlet(&self, a: &VertexSet) -> Result<Matrix<T>> {
        self.check_set(a)?;
        let idx = a.members();
        let n = idx.len();
        Ok(Matrix::from_fn(n, n, |i, j| {
            let id = if i == j { T::one() } else { T::zero() };
            let (x, y) = (idx[i], idx[j]);
            id - self.weight(x, y) / (self.vertex_weight[x] * self.vertex_weight[y]).sqrt()
        }))
    }

    pub fn dirichlet_form(&self, f: &VertexFunction<T>) -> FormSummary<T> {
        assert_eq!(f.len(), self.num_vertices, "function length must match the graph");
        let total = self.total_weight;
        let mut energy = T::zero();
        let mut l1 = T::zero();
        let mut l2 = T::zero();
        for x in 0..self.num_vertices {
            let fx = f[x];
            let pix = self.vertex_weight[x] / total;
            let kf: T = self.adjacency[x]
                .iter()
                .map(|&(y, w)| w * f[y])
                .sum::<T>()
                / self.vertex_weight[x];
            energy = energy + pix * fx * (fx - kf);
            l1 = l1 + pix * fx.abs();
            l2 = l2 + pix * fx * fx;
        }
        let energy_pairwise = self
            .edges
            .iter()
            .filter(|e| e.u != e.v)
            .map(|e| {
                let d = f[e.u] - f[e.v];
                e.weight / total * d * d
            })
            .sum();
        let mean: T = (0..self.num_vertices)
            .map(|x| self.vertex_weight[x] / total * f[x])
            .sum();
        let variance = (0..self.num_vertices)
            .map(|x| {
                let d = f[x] - mean;
                self.vertex_weight[x] / total * d * d
            })
            .sum();
        FormSummary {
            energy,
            energy_pairwise,
            l1,
            l2: l2.sqrt(),
            variance,
        }
    }

    pub(crate) fn check_set(&self, a: &VertexSet) -> Result<()> {
        if a.is_empty() {
            return Err(Error::EmptySet);
        }
        match a.members().last() {
            Some(&v) if v >= self.num_vertices => Err(Error::VertexOutOfRange(v, self.num_vertices)),
            _ => Ok(()),
        }
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            num_vertices: self.num_vertices,
            edges: self
                .edges
                .iter()
                .map(|e| (e.u, e.v, e.weight.as_f64()))
                .collect(),
        }
    }
}

/// A subset of vertices, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSet {
    members: Vec<usize>,
}

impl VertexSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn full(n: usize) -> Self {
        Self {
            members: (0..n).collect(),
        }
    }

    pub fn singleton(v: usize) -> Self {
        Self { members: vec![v] }
    }

    /// Bit `i` of `mask` selects vertex `i`.
    pub fn from_mask(mask: u64) -> Self {
        Self {
            members: (0..64).filter(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn mask(&self) -> u64 {
        self.members.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn is_full(&self, n: usize) -> bool {
        self.members.len() == n
    }

    pub fn measure<T: Scalar>(&self, pi: &[T]) -> T {
        self.members.iter().map(|&x| pi[x]).sum()
    }
}

/// A real function on the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction<T>(pub Vec<T>);

impl<T: Scalar> VertexFunction<T> {
    pub fn constant(n: usize, c: T) -> Self {
        Self(vec![c; n])
    }

    pub fn indicator(n: usize, a: &VertexSet) -> Self {
        Self((0..n).map(|x| if a.contains(x) { T::one() } else { T::zero() }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> VertexSet {
        VertexSet::new(self.0.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(|(i, _)| i))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= T::zero())
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }
}

impl<T> std::ops::Index<usize> for VertexFunction<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// On-disk graph format: `{"num_vertices": n, "edges": [[u, v, w], ...]}`
/// with `u <= v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadInputFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph files always serialise")
    }

    pub fn into_graph(self) -> Result<WeightedGraph<f64>> {
        for &(u, v, _) in &self.edges {
            if u > v {
                return Err(Error::MalformedEdge(format!("edge [{u}, {v}, ..] must list u <= v")));
            }
        }
        WeightedGraph::new(self.num_vertices, self.edges)
    }
}

/// Parses a graph JSON document.
pub fn parse_graph_json(text: &str) -> Result<WeightedGraph<f64>> {
    GraphFile::from_json(text)?.into_graph()
}
