//! Continuous-time heat kernel `H_t = e^{−tΔ}` and `L^∞` mixing times.
//!
//! With `L²(π)`-orthonormal eigenfunctions `ψ_i` of `Δ`,
//! `H_t(x, y)/π(y) = Σ_i e^{−λ_i t} ψ_i(x) ψ_i(y)`. The relative deviation
//! `|H_t(x,y)/π(y) − 1|` is largest on the diagonal, so
//! `d(t) = max_x Σ_{i≥1} e^{−λ_i t} ψ_i(x)²`, which is non-increasing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{Matrix, SymmetricEigen};
use crate::scalar::Scalar;

/// Relative width at which the `τ∞` bisections stop.
pub const BISECTION_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T> {
    /// `0 = λ_1 ≤ … ≤ λ_n ≤ 2`.
    pub eigenvalues: Vec<T>,
    /// Row `i` is `ψ_i` on the vertices.
    pub eigenfunctions: Matrix<T>,
    pub pi: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingReport<T> {
    pub epsilon: T,
    pub tau_inf: T,
    /// `(t, d(t))` pairs on a geometric grid around `τ∞`.
    pub samples: Vec<(T, T)>,
    /// `(x, τ∞^x)` for requested start vertices.
    pub per_start: Vec<(usize, T)>,
    pub rho: Option<T>,
}

impl<T: Scalar> MixingReport<T> {
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("t,d\n");
        for (t, d) in &self.samples {
            out.push_str(&format!("{:.12e},{:.12e}\n", t.as_f64(), d.as_f64()));
        }
        out
    }
}

fn check_time<T: Scalar>(t: T) -> Result<()> {
    if t < T::zero() || t.is_nan() {
        Err(Error::NegativeTime(t.as_f64()))
    } else {
        Ok(())
    }
}

fn check_epsilon<T: Scalar>(eps: T) -> Result<()> {
    if eps > T::zero() && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::BadEpsilon(eps.as_f64()))
    }
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn new(g: &WeightedGraph<T>) -> Self {
        let eig = SymmetricEigen::new(&g.laplacian().symmetric());
        let pi = g.stationary();
        let n = pi.len();
        let mut psi = Matrix::from_fn(n, n, |i, x| eig.vectors[(i, x)] / pi[x].sqrt());
        if psi[(0, 0)] < T::zero() {
            for v in psi.row_mut(0) {
                *v = -*v;
            }
        }
        Self {
            eigenvalues: eig.values.iter().map(|&v| v.max(T::zero())).collect(),
            eigenfunctions: psi,
            pi,
        }
    }

    /// Requires a connected graph.
    pub fn connected(g: &WeightedGraph<T>) -> Result<Self> {
        if g.num_vertices() < 2 {
            return Err(Error::SingletonGraph);
        }
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(Self::new(g))
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn gap(&self) -> T {
        self.eigenvalues[1]
    }

    fn weights(&self, t: T) -> Vec<T> {
        self.eigenvalues.iter().map(|&l| (-l * t).exp()).collect()
    }

    /// `H_t(x, y) = Σ_i e^{−λ_i t} ψ_i(x) ψ_i(y) π(y)`.
    pub fn heat_kernel(&self, t: T) -> Result<Matrix<T>> {
        check_time(t)?;
        let n = self.len();
        let w = self.weights(t);
        let psi = &self.eigenfunctions;
        Ok(Matrix::from_fn(n, n, |x, y| {
            let s: T = (0..n).map(|i| w[i] * psi[(i, x)] * psi[(i, y)]).sum();
            s * self.pi[y]
        }))
    }

    /// `h_t(x, y) − 1 = Σ_{i≥1} e^{−λ_i t} ψ_i(x) ψ_i(y)`.
    fn centered(&self, w: &[T], x: usize, y: usize) -> T {
        let psi = &self.eigenfunctions;
        (1..self.len()).map(|i| w[i] * psi[(i, x)] * psi[(i, y)]).sum()
    }

    /// `d(t) = max_x (H_t(x,x)/π(x) − 1)`.
    pub fn deviation(&self, t: T) -> T {
        let w = self.weights(t);
        (0..self.len())
            .map(|x| self.centered(&w, x, x))
            .fold(T::neg_infinity(), T::max)
    }

    /// Full scan `sup_{x,y} |H_t(x,y)/π(y) − 1|`.
    pub fn sup_deviation(&self, t: T) -> T {
        let w = self.weights(t);
        let n = self.len();
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .map(|(x, y)| self.centered(&w, x, y).abs())
            .fold(T::zero(), T::max)
    }

    /// `max_y |H_t(x,y)/π(y) − 1|` for one start.
    pub fn point_deviation(&self, x: usize, t: T) -> T {
        let w = self.weights(t);
        (0..self.len())
            .map(|y| self.centered(&w, x, y).abs())
            .fold(T::zero(), T::max)
    }

    /// First `t` with `d(t) ≤ ε`: bracket by doubling from `1/gap`, then
    /// bisect; the returned value is the upper end of the final bracket.
    pub fn tau_inf(&self, epsilon: T) -> Result<T> {
        check_epsilon(epsilon)?;
        Ok(self.first_time_below(epsilon, |t| self.deviation(t)))
    }

    fn first_time_below(&self, epsilon: T, d: impl Fn(T) -> T) -> T {
        if d(T::zero()) <= epsilon {
            return T::zero();
        }
        let mut lo = T::zero();
        let mut hi = T::one() / self.gap();
        while d(hi) > epsilon {
            lo = hi;
            hi = hi * T::lit(2.0);
        }
        bisect(lo, hi, |t| d(t) > epsilon)
    }

    /// `τ∞^x(ε)`: the map `t ↦ max_y |h_t(x,y) − 1|` is sampled on a
    /// geometric grid below the global `τ∞` (beyond which it is `≤ ε`) and
    /// bisected on the last grid interval where it crosses `ε`.
    pub fn tau_inf_from(&self, x: usize, epsilon: T) -> Result<T> {
        check_epsilon(epsilon)?;
        if x >= self.len() {
            return Err(Error::VertexOutOfRange(x, self.len()));
        }
        let global = self.tau_inf(epsilon)?;
        let f = |t: T| self.point_deviation(x, t);
        if f(T::zero()) <= epsilon {
            return Ok(T::zero());
        }
        let steps = 240;
        let ratio = T::lit(2f64.powf(-1.0 / 8.0));
        let mut grid = vec![T::zero()];
        let mut t = global;
        let mut descending = Vec::with_capacity(steps);
        for _ in 0..steps {
            descending.push(t);
            t = t * ratio;
        }
        grid.extend(descending.into_iter().rev());
        let last_above = grid
            .iter()
            .rposition(|&t| f(t) > epsilon)
            .expect("f(0) > epsilon");
        if last_above + 1 == grid.len() {
            return Ok(global);
        }
        Ok(bisect(grid[last_above], grid[last_above + 1], |t| f(t) > epsilon))
    }
}

/// Bisection of `[lo, hi]` with `above(lo)` and `!above(hi)`, returning
/// the final upper end.
fn bisect<T: Scalar>(mut lo: T, mut hi: T, above: impl Fn(T) -> bool) -> T {
    let rel = T::tol(BISECTION_REL_TOL);
    while hi - lo > rel * hi {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn heat_kernel<T: Scalar>(g: &WeightedGraph<T>, t: T) -> Result<Matrix<T>> {
    SpectralDecomposition::new(g).heat_kernel(t)
}

pub fn linf_deviation<T: Scalar>(g: &WeightedGraph<T>, t: T) -> Result<T> {
    check_time(t)?;
    Ok(SpectralDecomposition::connected(g)?.deviation(t))
}

pub fn sup_deviation<T: Scalar>(g: &WeightedGraph<T>, t: T) -> Result<T> {
    check_time(t)?;
    Ok(SpectralDecomposition::connected(g)?.sup_deviation(t))
}

/// `τ∞(ε)` with deviation samples on a geometric grid `τ·2^{j/4}`,
/// `j = −20..=8`, plus `t = 0`.
pub fn tau_inf<T: Scalar>(g: &WeightedGraph<T>, epsilon: T) -> Result<MixingReport<T>> {
    let dec = SpectralDecomposition::connected(g)?;
    let tau = dec.tau_inf(epsilon)?;
    let base = if tau > T::zero() { tau } else { T::one() / dec.gap() };
    let mut samples = vec![(T::zero(), dec.deviation(T::zero()))];
    for j in -20..=8 {
        let t = base * T::lit(2f64.powf(j as f64 / 4.0));
        samples.push((t, dec.deviation(t)));
    }
    Ok(MixingReport {
        epsilon,
        tau_inf: tau,
        samples,
        per_start: Vec::new(),
        rho: None,
    })
}

pub fn tau_inf_from<T: Scalar>(g: &WeightedGraph<T>, x: usize, epsilon: T) -> Result<T> {
    SpectralDecomposition::connected(g)?.tau_inf_from(x, epsilon)
}
