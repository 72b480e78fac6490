//! The graphs `G_k`: pieces `H_l = A_l × B_l` for `l = ⌈log₂ k⌉, …, k`
//! with `|A_l| = 2^{2^k − 2^l}`, `|B_l| = 2^{2^l}`, joined by a uniform
//! cross weight `k2^{−k}/n_k`. Inside a piece, vertices with equal `B`
//! coordinate get the extra weight `1/|A_l|`, all pairs get
//! `2^{l−k}/|H_l|`, and a self-loop tops every vertex up to
//! `ω(v) = 2 + k2^{−k}`.
//!
//! Weights are exact rationals. Only `k = 3` (512 vertices) is materialised;
//! larger `k` go through the lumped chain in [`lumped`].

pub mod lumped;
pub mod walk;

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub use lumped::{
    construction_deviation,
    lumped_chain, lumped_heat_kernel, rho_lower_bound, tau_construction, ClassLabel, LumpedChain, RhoBand,
    RhoLowerBound,
};
pub use walk::{simulate_walk, WalkMode, WalkStats, WalkTrace};

/// Largest `k` accepted by [`tau_construction`].
pub const MAX_K: u32 = 16;

pub(crate) fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs() as usize;
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

pub(crate) fn int(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionParams {
    pub k: u32,
    /// `⌈log₂ k⌉`, the smallest piece label.
    pub log_k: u32,
    /// Number of pieces, `k − ⌈log₂ k⌉ + 1`.
    pub m: u32,
}

/// Intra-piece weights of one piece (rationals).
#[derive(Debug, Clone, PartialEq)]
pub struct PieceWeights {
    /// `ω(v, v)`.
    pub self_loop: BigRational,
    /// Same `B` coordinate, different `A` coordinate.
    pub same_copy: BigRational,
    /// Different `B` coordinate.
    pub other_copy: BigRational,
}

impl ConstructionParams {
    pub fn pieces(&self) -> RangeInclusive<u32> {
        self.log_k..=self.k
    }

    pub fn check_piece(&self, l: u32) -> Result<()> {
        if self.pieces().contains(&l) {
            Ok(())
        } else {
            Err(Error::BadPieceLabel {
                l,
                lo: self.log_k,
                hi: self.k,
            })
        }
    }

    /// `log₂|A_l| = 2^k − 2^l`.
    pub fn a_log2(&self, l: u32) -> u64 {
        (1u64 << self.k) - (1u64 << l)
    }

    pub fn h_log2(&self) -> u64 {
        1u64 << self.k
    }

    pub fn a_size(&self, l: u32) -> BigInt {
        BigInt::one() << self.a_log2(l) as usize
    }

    pub fn b_size(&self, l: u32) -> BigInt {
        BigInt::one() << (1u64 << l) as usize
    }

    pub fn h_size(&self) -> BigInt {
        BigInt::one() << self.h_log2() as usize
    }

    /// `n_k = m · 2^{2^k}`.
    pub fn n(&self) -> BigInt {
        BigInt::from(self.m) * self.h_size()
    }

    /// Constant vertex weight `W = 2 + k2^{−k}`.
    pub fn vertex_weight(&self) -> BigRational {
        int(2) + int(self.k) * pow2(-(self.k as i64))
    }

    /// Cross-piece weight `k2^{−k}/n_k`.
    pub fn cross_weight(&self) -> BigRational {
        int(self.k) * pow2(-(self.k as i64)) / int(self.n())
    }

    pub fn piece_weights(&self, l: u32) -> PieceWeights {
        let c = self.cross_weight();
        let ratio = pow2(l as i64 - self.k as i64);
        let other_copy = &ratio / int(self.h_size()) + c;
        let same_copy = pow2(-(self.a_log2(l) as i64)) + &other_copy;
        let self_loop = int(1) - ratio + &same_copy;
        PieceWeights {
            self_loop,
            same_copy,
            other_copy,
        }
    }
}

pub fn construction_sizes(k: u32) -> Result<ConstructionParams> {
    if k < 3 {
        return Err(Error::KTooSmall(k));
    }
    if k > 24 {
        return Err(Error::KOutOfRange(k, 3, 24));
    }
    let log_k = 32 - (k - 1).leading_zeros();
    Ok(ConstructionParams {
        k,
        log_k,
        m: k - log_k + 1,
    })
}

/// `(p₁, p₂, p₃)`: probability of a uniform jump over `G`, then (failing
/// that) over `H_l`, then over the copy of `A_l` through the current vertex.
pub fn three_coin_probs(k: u32, l: u32) -> Result<(BigRational, BigRational, BigRational)> {
    let p = construction_sizes(k)?;
    p.check_piece(l)?;
    let p1 = int(k) * pow2(-(k as i64)) / p.vertex_weight();
    let p2 = pow2(l as i64 - k as i64 - 1);
    let p3 = int(1) / (int(2) - pow2(l as i64 - k as i64));
    Ok((p1, p2, p3))
}

/// Vertex layout of the materialised `G_3`: piece `l` occupies a
/// contiguous block and `(a, b)` sits at `offset + b·|A_l| + a`, so every
/// copy `A_l × {b}` is contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseLayout {
    pub params: ConstructionParams,
    pub offsets: Vec<usize>,
    pub a_sizes: Vec<usize>,
    pub h_size: usize,
}

impl DenseLayout {
    pub fn new(k: u32) -> Result<Self> {
        let params = construction_sizes(k)?;
        if k != 3 {
            return Err(Error::KTooLargeForDense(k));
        }
        let h_size = params.h_size().to_usize().expect("k = 3");
        let pieces: Vec<u32> = params.pieces().collect();
        Ok(Self {
            offsets: (0..pieces.len()).map(|i| i * h_size).collect(),
            a_sizes: pieces.iter().map(|&l| params.a_size(l).to_usize().expect("k = 3")).collect(),
            params,
            h_size,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() * self.h_size
    }

    /// `(piece index, a, b)` of a vertex.
    pub fn coordinates(&self, v: usize) -> (usize, usize, usize) {
        let piece = v / self.h_size;
        let local = v % self.h_size;
        let a = self.a_sizes[piece];
        (piece, local % a, local / a)
    }

    /// Representative start vertex `(0, 0)` of piece `l`.
    pub fn start_vertex(&self, l: u32) -> Result<usize> {
        self.params.check_piece(l)?;
        Ok(self.offsets[(l - self.params.log_k) as usize])
    }

    /// Lumped class of every vertex relative to the start vertex of piece
    /// `l`, indexed like [`LumpedChain::labels`].
    pub fn class_partition(&self, chain: &LumpedChain) -> Vec<usize> {
        let start = self.start_vertex(chain.l).expect("chain has a valid piece");
        let (sp, _, sb) = self.coordinates(start);
        (0..self.num_vertices())
            .map(|v| {
                let (piece, _, b) = self.coordinates(v);
                let label = if v == start {
                    ClassLabel::Start
                } else if piece != sp {
                    ClassLabel::Piece(self.params.log_k + piece as u32)
                } else if b == sb {
                    ClassLabel::StartCopy
                } else {
                    ClassLabel::StartPiece
                };
                chain.labels.iter().position(|&c| c == label).expect("class exists")
            })
            .collect()
    }
}

/// `G_3` with exact rational weights.
pub fn build_gk_exact(k: u32) -> Result<WeightedGraph<BigRational>> {
    let layout = DenseLayout::new(k)?;
    let p = &layout.params;
    let n = layout.num_vertices();
    let cross = p.cross_weight();
    let weights: Vec<PieceWeights> = p.pieces().map(|l| p.piece_weights(l)).collect();
    let mut edges = Vec::with_capacity(n * (n + 1) / 2);
    for u in 0..n {
        let (pu, _, bu) = layout.coordinates(u);
        for v in u..n {
            let (pv, _, bv) = layout.coordinates(v);
            let w = if pu != pv {
                cross.clone()
            } else if u == v {
                weights[pu].self_loop.clone()
            } else if bu == bv {
                weights[pu].same_copy.clone()
            } else {
                weights[pu].other_copy.clone()
            };
            edges.push((u, v, w));
        }
    }
    let g = WeightedGraph::new(n, edges)?;
    let w = p.vertex_weight();
    assert!(
        g.vertex_weights().iter().all(|x| *x == w),
        "every vertex of G_k must have weight 2 + k2^-k"
    );
    Ok(g)
}

/// `G_3` in double precision.
pub fn build_gk_dense(k: u32) -> Result<WeightedGraph<f64>> {
    let exact = build_gk_exact(k)?;
    let g = exact.map_weights(|w| w.to_f64().unwrap_or(0.0))?;
    let w = construction_sizes(k)?.vertex_weight().to_f64().unwrap_or(0.0);
    assert!(g.vertex_weights().iter().all(|x| (x - w).abs() <= 1e-12));
    Ok(g)
}

/// Law of one coin-throw step from a vertex of piece `l`, aggregated over
/// the lumped classes (exact).
#[derive(Debug, Clone, PartialEq)]
pub struct OneStepLaw {
    pub k: u32,
    pub l: u32,
    pub labels: Vec<ClassLabel>,
    pub class_mass: Vec<BigRational>,
    /// Probability of remaining exactly at the current vertex.
    pub stay: BigRational,
}

impl OneStepLaw {
    pub fn total(&self) -> BigRational {
        self.class_mass.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    /// Per-vertex law from the start vertex of piece `l` in the `G_3` layout.
    pub fn vertex_row(&self, layout: &DenseLayout, chain: &LumpedChain) -> Vec<BigRational> {
        let classes = layout.class_partition(chain);
        classes
            .iter()
            .map(|&c| &self.class_mass[c] / int(chain.sizes[c].clone()))
            .collect()
    }
}

/// Applies the three coins: `ξ₁` uniform over `G` (current vertex
/// included), else `ξ₂` uniform over `H_l`, else `ξ₃` uniform over the copy
/// of `A_l` through the current vertex, else stay.
pub fn one_step_law(k: u32, l: u32) -> Result<OneStepLaw> {
    let (p1, p2, p3) = three_coin_probs(k, l)?;
    let chain = lumped_chain(k, l)?;
    let params = &chain.params;
    let n = int(params.n());
    let h = int(params.h_size());
    let a = int(params.a_size(l));
    let q1 = int(1) - &p1;
    let xi2 = &q1 * &p2;
    let xi3 = &q1 * (int(1) - &p2) * &p3;
    let none = &q1 * (int(1) - &p2) * (int(1) - &p3);
    let class_mass = chain
        .labels
        .iter()
        .zip(&chain.sizes)
        .map(|(label, size)| {
            let size = int(size.clone());
            let mut mass = &p1 * &size / &n;
            match label {
                ClassLabel::Start => {
                    mass += &xi2 / &h + &xi3 / &a + &none;
                }
                ClassLabel::StartCopy => {
                    mass += &xi2 * &size / &h + &xi3 * &size / &a;
                }
                ClassLabel::StartPiece => {
                    mass += &xi2 * &size / &h;
                }
                ClassLabel::Piece(_) => {}
            }
            mass
        })
        .collect();
    let stay = &p1 / &n + &xi2 / &h + &xi3 / &a + &none;
    Ok(OneStepLaw {
        k,
        l,
        labels: chain.labels.clone(),
        class_mass,
        stay,
    })
}
