//! Spectral profile `Λ(r) = min{λ(A) : 0 < π(A) ≤ r}`, dyadic Rayleigh
//! sets and the integral `ρ = ∫_{4π_*}^{4/ε} 2 dr / (r Λ(r))`.
//!
//! The exact profile enumerates every vertex subset. For each proper subset
//! `S` the smallest nonnegative stationary value `μ°(S)` comes from the face
//! solver; `λ(A)` is then the minimum of `μ°` over subsets of `A`, a
//! sum-over-subsets pass.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{VertexSet, WeightedGraph};
use crate::scalar::Scalar;
use crate::spectral::{lambda_fk, spectral_gap, FaceSolver};

/// Largest graph the exact profile enumerates.
pub const MAX_EXACT_VERTICES: usize = 20;

/// Measures closer than this are the same breakpoint.
const MEASURE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileMode {
    /// All `2^n − 1` subsets.
    Exact,
    /// Only the given sets (plus the whole graph): an upper bound on `Λ`.
    TestSets(Vec<VertexSet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfileCurve<T> {
    /// Increasing achievable measures; the last is `1`.
    pub breakpoints: Vec<T>,
    /// `Λ` on `[r_i, r_{i+1})`.
    pub values: Vec<T>,
    /// A set attaining `values[i]` (lexicographically smallest on ties).
    pub sets: Vec<VertexSet>,
    pub pi_star: T,
    /// `λ(G)`, the value for all `r ≥ 1`.
    pub gap: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSegment {
    pub r_from: f64,
    /// `None` for the final, unbounded segment.
    pub r_to: Option<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveJson {
    pub pi_star: f64,
    pub segments: Vec<CurveSegment>,
}

impl<T: Scalar> SpectralProfileCurve<T> {
    /// `Λ(r)`; `None` below the first breakpoint.
    pub fn eval(&self, r: T) -> Option<T> {
        let idx = self
            .breakpoints
            .partition_point(|&b| b <= r + T::lit(MEASURE_TOL));
        idx.checked_sub(1).map(|i| self.values[i])
    }

    pub fn to_json(&self) -> CurveJson {
        let m = self.breakpoints.len();
        CurveJson {
            pi_star: self.pi_star.as_f64(),
            segments: (0..m)
                .map(|i| CurveSegment {
                    r_from: self.breakpoints[i].as_f64(),
                    r_to: self.breakpoints.get(i + 1).map(|r| r.as_f64()),
                    lambda: self.values[i].as_f64(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighSet<T> {
    pub k: u32,
    pub set: VertexSet,
    pub measure: T,
    pub lambda: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighSets<T> {
    pub sets: Vec<RayleighSet<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band<T> {
    pub r_from: T,
    pub r_to: T,
    pub lambda: T,
    pub contribution: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoResult<T> {
    pub rho: T,
    pub epsilon: T,
    pub bands: Vec<Band<T>>,
    /// `Σ_k 1/λ(A_k)` over the Rayleigh sets.
    pub dyadic_sum: T,
    pub pi_star: T,
}

fn mask_members(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// Lexicographic order of the sorted member lists.
fn lex_less(a: u64, b: u64) -> bool {
    mask_members(a) < mask_members(b)
}

fn ties<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::tol(1e-12) * a.abs().max(T::one())
}

fn validate<T: Scalar>(g: &WeightedGraph<T>) -> Result<()> {
    let n = g.num_vertices();
    if n < 2 {
        return Err(Error::SingletonGraph);
    }
    if n > MAX_EXACT_VERTICES {
        return Err(Error::TooLargeForExact(n, MAX_EXACT_VERTICES));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

/// `π(S)` and `λ(S)` for every subset mask.
struct SubsetTable<T> {
    measure: Vec<T>,
    lambda: Vec<T>,
}

fn subset_table<T: Scalar>(g: &WeightedGraph<T>) -> Result<SubsetTable<T>> {
    validate(g)?;
    let n = g.num_vertices();
    let full = (1u64 << n) - 1;
    let gap = spectral_gap(g)?;
    let solver = FaceSolver::new(g);
    let mut lambda: Vec<T> = (0..=full)
        .into_par_iter()
        .map(|mask| match mask {
            0 => T::infinity(),
            m if m == full => gap,
            m => solver
                .solve(&mask_members(m))
                .map_or(T::infinity(), |(v, _)| v),
        })
        .collect();
    for i in 0..n {
        let bit = 1u64 << i;
        for mask in 0..=full {
            if mask & bit != 0 {
                let sub = lambda[(mask ^ bit) as usize];
                if sub < lambda[mask as usize] {
                    lambda[mask as usize] = sub;
                }
            }
        }
    }
    let pi = g.stationary();
    let mut measure = vec![T::zero(); (full + 1) as usize];
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        measure[mask as usize] = measure[(mask & (mask - 1)) as usize] + pi[low];
    }
    measure[full as usize] = T::one();
    Ok(SubsetTable { measure, lambda })
}

fn exact_curve<T: Scalar>(g: &WeightedGraph<T>) -> Result<SpectralProfileCurve<T>> {
    let table = subset_table(g)?;
    let n = g.num_vertices();
    let full = (1u64 << n) - 1;
    let mut order: Vec<u64> = (1..=full).collect();
    order.sort_by(|&a, &b| {
        table.measure[a as usize]
            .partial_cmp(&table.measure[b as usize])
            .unwrap()
    });
    let tol = T::lit(MEASURE_TOL);
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    let mut sets = Vec::new();
    let mut best: Option<(T, u64)> = None;
    let mut i = 0;
    while i < order.len() {
        let start = table.measure[order[i] as usize];
        let mut j = i;
        let mut group_max = start;
        while j < order.len() && table.measure[order[j] as usize] - start <= tol {
            let mask = order[j];
            let v = table.lambda[mask as usize];
            group_max = group_max.max(table.measure[mask as usize]);
            best = match best {
                None => Some((v, mask)),
                Some((bv, _)) if v < bv && !ties(v, bv) => Some((v, mask)),
                Some((bv, bm)) if ties(v, bv) && lex_less(mask, bm) => Some((v.min(bv), mask)),
                Some((bv, bm)) => Some((bv.min(v), bm)),
            };
            j += 1;
        }
        let (bv, bm) = best.expect("group is nonempty");
        breakpoints.push(group_max);
        values.push(bv);
        sets.push(VertexSet::from_mask(bm));
        i = j;
    }
    let pi_star = breakpoints[0];
    let gap = table.lambda[full as usize];
    Ok(SpectralProfileCurve {
        breakpoints,
        values,
        sets,
        pi_star,
        gap,
    })
}

fn test_set_curve<T: Scalar>(g: &WeightedGraph<T>, candidates: &[VertexSet]) -> Result<SpectralProfileCurve<T>> {
    let n = g.num_vertices();
    if n < 2 {
        return Err(Error::SingletonGraph);
    }
    let gap = spectral_gap(g)?;
    let pi = g.stationary();
    let mut entries: Vec<(T, T, VertexSet)> = candidates
        .par_iter()
        .filter(|s| !s.is_full(n))
        .map(|s| Ok((s.measure(&pi), lambda_fk(g, s)?.lambda, s.clone())))
        .collect::<Result<_>>()?;
    entries.push((T::one(), gap, VertexSet::full(n)));
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.2.cmp(&b.2)));
    let mut curve = SpectralProfileCurve {
        breakpoints: Vec::new(),
        values: Vec::new(),
        sets: Vec::new(),
        pi_star: g.pi_star(),
        gap,
    };
    for (r, v, s) in entries {
        let improves = curve.values.last().is_none_or(|&b| v < b);
        let same_r = curve
            .breakpoints
            .last()
            .is_some_and(|&b| r - b <= T::lit(MEASURE_TOL));
        match (same_r, improves) {
            (true, true) => {
                *curve.values.last_mut().unwrap() = v;
                *curve.sets.last_mut().unwrap() = s;
            }
            (true, false) => {}
            (false, _) => {
                let (bv, bs) = if improves {
                    (v, s)
                } else {
                    (*curve.values.last().unwrap(), curve.sets.last().unwrap().clone())
                };
                curve.breakpoints.push(r);
                curve.values.push(bv);
                curve.sets.push(bs);
            }
        }
    }
    Ok(curve)
}

pub fn spectral_profile<T: Scalar>(g: &WeightedGraph<T>, mode: &ProfileMode) -> Result<SpectralProfileCurve<T>> {
    match mode {
        ProfileMode::Exact => exact_curve(g),
        ProfileMode::TestSets(sets) => test_set_curve(g, sets),
    }
}

fn rayleigh_from_curve<T: Scalar>(curve: &SpectralProfileCurve<T>, pi: &[T]) -> RayleighSets<T> {
    let mut sets = Vec::new();
    for k in 1u32..64 {
        let r = T::lit(0.5f64.powi(k as i32));
        if r < curve.pi_star - T::lit(MEASURE_TOL) {
            break;
        }
        let found = curve
            .breakpoints
            .partition_point(|&b| b <= r + T::lit(MEASURE_TOL))
            .checked_sub(1);
        if let Some(i) = found {
            let set = curve.sets[i].clone();
            sets.push(RayleighSet {
                k,
                measure: set.measure(pi),
                set,
                lambda: curve.values[i],
            });
        }
    }
    RayleighSets { sets }
}

/// Sets `A_k` minimising `λ` among sets of measure at most `2^{−k}`.
pub fn rayleigh_sets<T: Scalar>(g: &WeightedGraph<T>) -> Result<RayleighSets<T>> {
    let curve = exact_curve(g)?;
    Ok(rayleigh_from_curve(&curve, &g.stationary()))
}

/// Integral of `2 / (r Λ(r))` over `[lo, hi]` for a piecewise-constant
/// curve extended by `gap` beyond its last breakpoint.
pub fn integrate_curve<T: Scalar>(curve: &SpectralProfileCurve<T>, lo: T, hi: T) -> Vec<Band<T>> {
    let m = curve.breakpoints.len();
    let two = T::lit(2.0);
    let mut bands = Vec::new();
    for i in 0..m {
        let from = curve.breakpoints[i].max(lo);
        let to = curve.breakpoints.get(i + 1).map_or(hi, |&b| b.min(hi));
        if to > from {
            let lambda = if i + 1 == m { curve.gap } else { curve.values[i] };
            bands.push(Band {
                r_from: from,
                r_to: to,
                lambda,
                contribution: two / lambda * (to / from).ln(),
            });
        }
    }
    bands
}

pub fn rho<T: Scalar>(g: &WeightedGraph<T>, epsilon: T) -> Result<RhoResult<T>> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::BadEpsilon(epsilon.as_f64()));
    }
    let curve = exact_curve(g)?;
    Ok(rho_from_curve(&curve, &g.stationary(), epsilon))
}

pub fn rho_from_curve<T: Scalar>(curve: &SpectralProfileCurve<T>, pi: &[T], epsilon: T) -> RhoResult<T> {
    let lo = T::lit(4.0) * curve.pi_star;
    let hi = T::lit(4.0) / epsilon;
    let bands = integrate_curve(curve, lo, hi);
    let rho = bands.iter().map(|b| b.contribution).sum();
    let dyadic_sum = rayleigh_from_curve(curve, pi)
        .sets
        .iter()
        .map(|s| T::one() / s.lambda)
        .sum();
    RhoResult {
        rho,
        epsilon,
        bands,
        dyadic_sum,
        pi_star: curve.pi_star,
    }
}
