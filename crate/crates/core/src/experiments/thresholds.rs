//! Calibrated acceptance thresholds. Each constant records the oracle run
//! it was frozen from; bump [`VERSION`] whenever one changes.

pub const VERSION: u32 = 1;

/// `τ∞(1/2) ≤ ρ + GMT_SLACK` on every suite graph.
pub const GMT_SLACK: f64 = 1e-9;

/// Upper bound on `ρ / (τ∞ · max(1, log₂ log₂ 1/π_*))` over the default
/// suite. Calibration run over the full suite (exact subset enumeration):
/// maximum 4.0 at `K_2` (closed form `ln 4 / (ln 2 / 2)`), minimum 0.998,
/// every other graph below 2.8.
pub const THM1_MAX_RATIO: f64 = 40.0;

/// `τ(k) ≤ 2^{k + TAU_EXPONENT_OFFSET}` for the construction. Oracle run
/// (mpmath, closed-form class law): `τ(k)/2^{k+1}` is 0.78 at `k = 3` and
/// decreases to 0.69 by `k = 12`.
pub const TAU_EXPONENT_OFFSET: u32 = 2;

/// `(ratio/k)(k) ≥ THM2_SLOPE_FRACTION · (ratio/k)(3)`. Oracle run at
/// `k = 3..5`: `ratio/k` = 0.332, 0.466, 0.454.
pub const THM2_SLOPE_FRACTION: f64 = 0.5;

/// Tolerance for `tau_construction(3)` against the dense `G_3`.
pub const DENSE_LUMPED_REL: f64 = 1e-6;

/// `ε` for the binary-tree demonstration. At `ε = 1/2` the slow mode seen
/// from the root's child has amplitude close to `ε`, which hides the
/// exponential growth; at `1/4` the separation is clean.
pub const TREE_EPSILON: f64 = 0.25;

/// Per-level growth of `τ^{child}` for `h ≥ 6`. Oracle run (numpy `eigh`,
/// `h = 4..9`, `ε = 1/4`): 2.02, 1.98, 1.97, 1.97, 1.98.
pub const TREE_GAMMA_EXP: f64 = 1.9;

/// Per-level growth of `τ^{root}` for `h ≥ 6`. Same run: 1.57, 1.43, 1.34,
/// 1.28, 1.23.
pub const TREE_GAMMA_LIN: f64 = 1.4;

/// Smallest height at which the tree growth thresholds are asserted.
pub const TREE_MIN_HEIGHT: u32 = 6;

/// Seed of the random part of the default suite.
pub const SUITE_SEED: u64 = 0x5u64 << 32 | 0x0f1a;
