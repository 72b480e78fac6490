//! Exact aggregation of the walk on `G_k` started at a vertex `v` of
//! piece `l`. Weights only depend on the classes `{v}`, `Ã_l∖{v}`,
//! `H_l∖Ã_l` and `H_j` (`j ≠ l`), so the class process is a Markov chain
//! and `P_v(X_t ∈ C)/|C|` is the heat kernel at every vertex of `C`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{construction_sizes, int, pow2, ConstructionParams, MAX_K};
use crate::bigvalue::{BigValue, ChainValue};
use crate::error::{Error, Result};
use crate::mixing::BISECTION_REL_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ClassLabel {
    /// `{v}`.
    Start,
    /// `Ã_l ∖ {v}`, the rest of the copy of `A_l` through `v`.
    StartCopy,
    /// `H_l ∖ Ã_l`.
    StartPiece,
    /// A whole other piece `H_j`.
    Piece(u32),
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Start => write!(f, "C0"),
            ClassLabel::StartCopy => write!(f, "C1"),
            ClassLabel::StartPiece => write!(f, "C2"),
            ClassLabel::Piece(j) => write!(f, "H{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LumpedChain {
    pub params: ConstructionParams,
    pub l: u32,
    pub labels: Vec<ClassLabel>,
    pub sizes: Vec<BigInt>,
    /// One-step class transition probabilities; rows sum to 1 exactly.
    pub transition: Vec<Vec<BigRational>>,
}

impl LumpedChain {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Continuous-time generator `P − I` (rows sum to 0).
    pub fn generator(&self) -> Vec<Vec<BigRational>> {
        self.transition
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, p)| if i == j { p - int(1) } else { p.clone() })
                    .collect()
            })
            .collect()
    }

    pub fn sizes_big(&self) -> Vec<BigValue> {
        self.sizes.iter().map(BigValue::from_bigint).collect()
    }

    fn transition_as<V: ChainValue>(&self) -> Vec<Vec<V>> {
        self.transition
            .iter()
            .map(|row| row.iter().map(V::from_rational).collect())
            .collect()
    }

    /// `n_k/|C|` for every class.
    fn inverse_measures<V: ChainValue>(&self) -> Vec<V> {
        let n = int(self.params.n());
        self.sizes.iter().map(|s| V::from_rational(&(&n / int(s.clone())))).collect()
    }

    /// `max_C |P_v(X_t ∈ C)·n_k/|C| − 1|` for a class row.
    pub fn deviation<V: ChainValue>(&self, row: &[V]) -> V {
        let one = V::one();
        self.inverse_measures::<V>()
            .iter()
            .zip(row)
            .map(|(&s, &p)| (p * s - one).abs())
            .fold(V::zero(), |a, b| if b > a { b } else { a })
    }
}

pub fn lumped_chain(k: u32, l: u32) -> Result<LumpedChain> {
    let params = construction_sizes(k)?;
    params.check_piece(l)?;
    let a = params.a_size(l);
    let h = params.h_size();
    let w = params.vertex_weight();
    let c = params.cross_weight();
    let pw = params.piece_weights(l);
    let others: Vec<u32> = params.pieces().filter(|&j| j != l).collect();

    let mut labels = vec![ClassLabel::Start];
    let mut sizes = vec![BigInt::one()];
    let has_copy = a > BigInt::one();
    if has_copy {
        labels.push(ClassLabel::StartCopy);
        sizes.push(&a - 1);
    }
    labels.push(ClassLabel::StartPiece);
    sizes.push(&h - &a);
    for &j in &others {
        labels.push(ClassLabel::Piece(j));
        sizes.push(h.clone());
    }

    let (ar, hr, nr) = (int(a.clone()), int(h.clone()), int(params.n()));
    let piece_mass = &hr * &c;
    // Weight from one vertex of a class into each class, in label order.
    let row = |to_start: BigRational, to_copy: BigRational, to_piece: BigRational, own: Option<usize>| {
        let mut r = vec![to_start];
        if has_copy {
            r.push(to_copy);
        }
        r.push(to_piece);
        for (i, _) in others.iter().enumerate() {
            r.push(if own == Some(i) {
                &w - (&nr - &hr) * &c
            } else {
                piece_mass.clone()
            });
        }
        r.into_iter().map(|x| x / &w).collect::<Vec<_>>()
    };
    let one = int(1);
    let mut transition = vec![row(
        pw.self_loop.clone(),
        (&ar - &one) * &pw.same_copy,
        (&hr - &ar) * &pw.other_copy,
        None,
    )];
    if has_copy {
        transition.push(row(
            pw.same_copy.clone(),
            &pw.self_loop + (&ar - int(2)) * &pw.same_copy,
            (&hr - &ar) * &pw.other_copy,
            None,
        ));
    }
    transition.push(row(
        pw.other_copy.clone(),
        (&ar - &one) * &pw.other_copy,
        &pw.self_loop + (&ar - &one) * &pw.same_copy + (&hr - int(2) * &ar) * &pw.other_copy,
        None,
    ));
    for i in 0..others.len() {
        transition.push(row(c.clone(), (&ar - &one) * &c, (&hr - &ar) * &c, Some(i)));
    }
    Ok(LumpedChain {
        params,
        l,
        labels,
        sizes,
        transition,
    })
}

type Square<V> = Vec<Vec<V>>;

fn matmul<V: ChainValue>(a: &Square<V>, b: &Square<V>) -> Square<V> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).fold(V::zero(), |s, m| s + a[i][m] * b[m][j]))
                .collect()
        })
        .collect()
}

fn identity<V: ChainValue>(d: usize) -> Square<V> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { V::one() } else { V::zero() }).collect())
        .collect()
}

/// `e^{t(P − I)}` by scaling and squaring. The scaled factor `e^{sP}`,
/// `s ≤ 1/2`, is summed as a nonnegative series and row-normalised, which
/// removes the `e^{−s}` factor without any cancellation.
fn semigroup<V: ChainValue>(p: &Square<V>, t: f64) -> Square<V> {
    let d = p.len();
    let mut squarings = 0u32;
    let mut s = t;
    while s > 0.5 {
        s /= 2.0;
        squarings += 1;
    }
    let s = V::from_f64(s);
    let tol = V::series_tolerance();
    let mut sum = identity::<V>(d);
    let mut term = identity::<V>(d);
    for n in 1..400u32 {
        let scale = s / V::from_f64(n as f64);
        term = matmul(&term, p)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x * scale).collect())
            .collect();
        let mut converged = true;
        for (sr, tr) in sum.iter_mut().zip(&term) {
            for (x, &y) in sr.iter_mut().zip(tr) {
                *x = *x + y;
                if y > tol * *x {
                    converged = false;
                }
            }
        }
        if converged {
            break;
        }
    }
    for row in &mut sum {
        let total = row.iter().fold(V::zero(), |a, &b| a + b);
        for x in row.iter_mut() {
            *x = *x / total;
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// Class-to-class heat kernel `H_t(C, D) = P(X_t ∈ D | X_0 ∈ C)`.
pub fn lumped_heat_kernel<V: ChainValue>(chain: &LumpedChain, t: f64) -> Result<Vec<Vec<V>>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    Ok(semigroup(&chain.transition_as::<V>(), t))
}

struct PieceEval {
    chain: LumpedChain,
    p: Square<BigValue>,
}

impl PieceEval {
    fn deviation(&self, t: f64) -> BigValue {
        let h = semigroup(&self.p, t);
        self.chain.deviation(&h[0])
    }
}

/// Uniform deviation `max_x ‖h_t(x, ·) − 1‖_∞` of `G_k` (every vertex is
/// equivalent to the start vertex of its piece).
pub fn construction_deviation(k: u32, t: f64) -> Result<BigValue> {
    let pieces = piece_evals(k)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    Ok(max_deviation(&pieces, t))
}

fn piece_evals(k: u32) -> Result<Vec<PieceEval>> {
    let params = construction_sizes(k)?;
    params
        .pieces()
        .map(|l| {
            let chain = lumped_chain(k, l)?;
            let p = chain.transition_as::<BigValue>();
            Ok(PieceEval { chain, p })
        })
        .collect()
}

fn max_deviation(pieces: &[PieceEval], t: f64) -> BigValue {
    pieces
        .par_iter()
        .map(|p| p.deviation(t))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(BigValue::zero(), BigValue::max)
}

/// `τ∞(ε)` of `G_k` from the lumped chains of all start pieces, bisected
/// to the same relative tolerance as [`crate::mixing::tau_inf`].
pub fn tau_construction(k: u32, epsilon: f64) -> Result<f64> {
    if !(3..=MAX_K).contains(&k) {
        return Err(Error::KOutOfRange(k, 3, MAX_K));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::BadEpsilon(epsilon));
    }
    let pieces = piece_evals(k)?;
    let eps = BigValue::from_f64(epsilon);
    let above = |t: f64| max_deviation(&pieces, t) > eps;
    if !above(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while above(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > BISECTION_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// One band of the certified lower bound: on `[from, to]` the profile is at
/// most `λ(Ã_l) ≤ lambda_ub`.
#[derive(Debug, Clone, Serialize)]
pub struct RhoBand {
    pub l: u32,
    pub from: BigValue,
    pub to: BigValue,
    /// `Φ(Ã_l)/(1 − π(Ã_l))`.
    pub lambda_ub: f64,
    /// `λ_ub / 2^{l−k}`.
    pub scaled_lambda: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoLowerBound {
    pub k: u32,
    pub bands: Vec<RhoBand>,
    pub total: BigValue,
}

impl RhoLowerBound {
    pub fn value(&self) -> f64 {
        self.total.to_f64()
    }
}

/// Certified lower bound on `ρ(1/2)` of `G_k`: since `Λ` is non-increasing
/// and `Λ(r) ≤ λ(Ã_l) ≤ Φ(Ã_l)/(1 − π(Ã_l))` for `r ≥ π(Ã_l)`, each band
/// `[π(Ã_l), π(Ã_{l−1})]` contributes `2 ln(to/from)/λ_ub`. Bands are
/// clipped to the integration range `[4π_*, 8]`.
pub fn rho_lower_bound(k: u32) -> Result<RhoLowerBound> {
    let params = construction_sizes(k)?;
    let h = int(params.h_size());
    let n = int(params.n());
    let c = params.cross_weight();
    let w = params.vertex_weight();
    let lower = BigValue::from_rational(&(int(4) / &n));
    let bands: Vec<RhoBand> = params
        .pieces()
        .map(|l| {
            let a = int(params.a_size(l));
            let ratio = pow2(l as i64 - k as i64);
            let boundary = ((&h - &a) * (&ratio / &h + &c) + (&n - &h) * &c) / &w;
            let pi_a = &a / &n;
            let lambda = boundary / (int(1) - &pi_a);
            let lambda_ub = BigValue::from_rational(&lambda).to_f64();
            let pi_a = BigValue::from_rational(&pi_a);
            let width = (1u64 << l) - (1u64 << (l - 1));
            let to = pi_a * BigValue::pow2(width as i64);
            let from = pi_a.max(lower);
            let contribution = if to > from {
                2.0 * (to / from).ln() / lambda_ub
            } else {
                0.0
            };
            RhoBand {
                l,
                from,
                to,
                lambda_ub,
                scaled_lambda: lambda_ub / BigValue::from_rational(&ratio).to_f64(),
                contribution,
            }
        })
        .collect();
    let total = bands.iter().map(|b| BigValue::from_f64(b.contribution)).sum();
    Ok(RhoLowerBound { k, bands, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::DenseLayout;
    use crate::construction::build_gk_dense;
    use crate::mixing::SpectralDecomposition;
    use num_traits::ToPrimitive;

    /// Closed-form law of the class process. The three coins fire as
    /// independent Poisson clocks of rates `r₁`, `r₂`, `r₃` (thinning of the
    /// rate-1 step clock); the last clock to fire determines the law.
    fn closed_form_row(k: u32, l: u32, t: f64) -> Vec<BigValue> {
        let chain = lumped_chain(k, l).unwrap();
        let (p1, p2, p3) = crate::construction::three_coin_probs(k, l).unwrap();
        let (p1, p2, p3) = (p1.to_f64().unwrap(), p2.to_f64().unwrap(), p3.to_f64().unwrap());
        let r1 = p1;
        let r2 = (1.0 - p1) * p2;
        let r3 = (1.0 - p1) * (1.0 - p2) * p3;
        // e^{−x} as 2^{−q}·2^{−f} so that it does not underflow.
        let e = |r: f64| {
            let x = r * t / std::f64::consts::LN_2;
            let q = x.floor();
            BigValue::pow2(-(q as i64)) * BigValue::from_f64((-(x - q)).exp2())
        };
        let one = BigValue::one();
        let p = &chain.params;
        let a = BigValue::from_bigint(&p.a_size(l));
        let h = BigValue::from_bigint(&p.h_size());
        let n = BigValue::from_bigint(&p.n());
        let uniform = (one - e(r1)) / n;
        let piece = e(r1) * (one - e(r2)) / h;
        let copy = e(r1 + r2) * (one - e(r3)) / a;
        let stay = e(r1 + r2 + r3);
        chain
            .labels
            .iter()
            .zip(chain.sizes_big())
            .map(|(label, size)| match label {
                ClassLabel::Start => stay + copy + piece + uniform,
                ClassLabel::StartCopy => (copy + piece + uniform) * size,
                ClassLabel::StartPiece => (piece + uniform) * size,
                ClassLabel::Piece(_) => uniform * size,
            })
            .collect()
    }

    #[test]
    fn class_sizes() {
        let c = lumped_chain(3, 2).unwrap();
        let sizes: Vec<BigInt> = c.sizes.clone();
        assert_eq!(sizes, vec![1.into(), 15.into(), 240.into(), 256.into()]);
        let c3 = lumped_chain(3, 3).unwrap();
        assert_eq!(c3.labels, vec![ClassLabel::Start, ClassLabel::StartPiece, ClassLabel::Piece(2)]);
        for k in 3..=12 {
            let params = construction_sizes(k).unwrap();
            for l in params.pieces() {
                let c = lumped_chain(k, l).unwrap();
                assert_eq!(c.len(), if l == k { 2 } else { 3 } + params.m as usize - 1);
                let total: BigInt = c.sizes.iter().sum();
                assert_eq!(total, params.n());
                for row in c.generator() {
                    assert!(row.iter().fold(BigRational::zero(), |a, b| a + b).is_zero());
                }
                assert!(c.transition.iter().flatten().all(|p| *p > BigRational::zero()));
            }
        }
    }

    #[test]
    fn lumped_kernel_matches_closed_form() {
        for k in [3, 5, 9, 13] {
            let params = construction_sizes(k).unwrap();
            for l in params.pieces() {
                let chain = lumped_chain(k, l).unwrap();
                for t in [0.3, 2.0, 17.5, (1u64 << k) as f64] {
                    let row = &lumped_heat_kernel::<BigValue>(&chain, t).unwrap()[0];
                    let oracle = closed_form_row(k, l, t);
                    for (x, y) in row.iter().zip(&oracle) {
                        let rel = ((*x - *y) / *y).abs().to_f64();
                        assert!(rel < 1e-10, "k={k} l={l} t={t}: {x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn dense_aggregation_matches_lumped() {
        let g = build_gk_dense(3).unwrap();
        let layout = DenseLayout::new(3).unwrap();
        let spec = SpectralDecomposition::connected(&g).unwrap();
        for l in [2, 3] {
            let chain = lumped_chain(3, l).unwrap();
            let classes = layout.class_partition(&chain);
            let start = layout.start_vertex(l).unwrap();
            for t in [1.0, 4.0, 16.0] {
                let dense = spec.heat_kernel(t).unwrap();
                let mut agg = vec![0.0; chain.len()];
                for (y, &c) in classes.iter().enumerate() {
                    agg[c] += dense[(start, y)];
                }
                let lumped = &lumped_heat_kernel::<f64>(&chain, t).unwrap()[0];
                for (x, y) in agg.iter().zip(lumped) {
                    assert!((x - y).abs() <= 1e-9 * y.abs(), "l={l} t={t}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn tau_matches_dense_and_frozen_value() {
        let lumped = tau_construction(3, 0.5).unwrap();
        assert!((lumped - 12.52547275778402).abs() < 1e-9 * lumped);
        let dense = crate::mixing::tau_inf(&build_gk_dense(3).unwrap(), 0.5).unwrap();
        assert!((dense.tau_inf - lumped).abs() < 1e-6 * lumped);
        assert_eq!(tau_construction(17, 0.5).unwrap_err(), Error::KOutOfRange(17, 3, 16));
        assert_eq!(tau_construction(2, 0.5).unwrap_err(), Error::KOutOfRange(2, 3, 16));
    }

    #[test]
    fn stationary_after_long_time() {
        // At k = 3 the slowest coin still leaves e^{−p₁t} ≈ 1.7e−9.
        let t = 128.0;
        let d = construction_deviation(3, t).unwrap().to_f64();
        assert!((d - (-t * 3.0 / 19.0f64).exp()).abs() < 1e-9 * d, "{d}");
        for k in [4, 6, 11, 16] {
            let d = construction_deviation(k, (1u64 << (k + 4)) as f64).unwrap();
            assert!(d < BigValue::pow2(-40), "k={k}: {d}");
        }
    }

    #[test]
    fn rho_bound() {
        let r = rho_lower_bound(3).unwrap();
        assert!((r.value() - 12.4628).abs() < 1e-3, "{}", r.value());
        assert!(r.bands.iter().all(|b| b.contribution > 0.0));
        let mut worst: f64 = 0.0;
        for k in 3..=12 {
            for b in rho_lower_bound(k).unwrap().bands {
                worst = worst.max(b.scaled_lambda);
            }
        }
        assert!(worst < 2.0, "{worst}");
        assert_eq!(rho_lower_bound(2).unwrap_err(), Error::KTooSmall(2));
    }
}
