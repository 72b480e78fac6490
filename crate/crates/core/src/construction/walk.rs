//! Monte Carlo of the three-coin walk on `G_k`, tracked through the
//! lumped classes of the start vertex.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use super::{three_coin_probs, ClassLabel, ConstructionParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkMode {
    /// A fixed number of coin-throw steps.
    Discrete { steps: u64 },
    /// `Poisson(time)` steps per replica.
    Poissonized { time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkTrace {
    pub l: u32,
    pub steps: u64,
    pub tau1: Option<u64>,
    pub tau2: Option<u64>,
    pub tau3: Option<u64>,
    pub final_class: ClassLabel,
}

impl WalkTrace {
    fn survives(&self, which: &[Option<u64>]) -> bool {
        which.iter().all(|t| t.is_none_or(|t| t > self.steps))
    }
}

/// Estimate with binomial standard error and the exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub empirical: f64,
    pub std_error: f64,
    pub exact: f64,
}

impl Estimate {
    fn new(hits: usize, replicas: usize, exact: f64) -> Self {
        let p = hits as f64 / replicas as f64;
        Self {
            empirical: p,
            std_error: (p * (1.0 - p) / replicas as f64).sqrt(),
            exact,
        }
    }

    /// `|empirical − exact| ≤ z·σ`, with `σ` taken at the exact value.
    pub fn within_sigmas(&self, z: f64, replicas: usize) -> bool {
        let sigma = (self.exact * (1.0 - self.exact) / replicas as f64).sqrt();
        (self.empirical - self.exact).abs() <= z * sigma.max(1.0 / replicas as f64)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkStats {
    pub k: u32,
    pub l: u32,
    pub mode: WalkMode,
    pub seed: u64,
    pub replicas: usize,
    /// `P(τ₁ > steps)`.
    pub no_uniform: Estimate,
    /// `P(min{τ₁, τ₂} > steps)`.
    pub no_piece: Estimate,
    /// `P(min{τ₁, τ₂, τ₃} > steps)`.
    pub no_event: Estimate,
    #[serde(skip)]
    pub traces: Vec<WalkTrace>,
}

/// Position relative to the start vertex: its class and the current piece.
#[derive(Clone, Copy)]
struct State {
    class: ClassLabel,
    piece: u32,
}

struct Coins {
    k: u32,
    l: u32,
    p1: f64,
    p2: Vec<f64>,
    p3: Vec<f64>,
    log_k: u32,
    // Class probabilities of a uniform vertex of G and of H_l.
    uniform: Vec<(ClassLabel, f64)>,
    in_piece: Vec<(ClassLabel, f64)>,
    copy_start: f64,
}

impl Coins {
    fn new(params: &ConstructionParams, l: u32) -> Result<Self> {
        let k = params.k;
        let probs: Vec<_> = params.pieces().map(|j| three_coin_probs(k, j)).collect::<Result<_>>()?;
        let f = |x: &num_rational::BigRational| x.to_f64().unwrap_or(0.0);
        let n = params.n().to_f64().unwrap_or(f64::INFINITY);
        let h = params.h_size().to_f64().unwrap_or(f64::INFINITY);
        let a = params.a_size(l).to_f64().unwrap_or(f64::INFINITY);
        let piece_share = 1.0 / params.m as f64;
        let mut uniform = vec![
            (ClassLabel::Start, 1.0 / n),
            (ClassLabel::StartCopy, (a - 1.0) / n),
            (ClassLabel::StartPiece, piece_share * (1.0 - a / h)),
        ];
        uniform.extend(params.pieces().filter(|&j| j != l).map(|j| (ClassLabel::Piece(j), piece_share)));
        let in_piece = vec![
            (ClassLabel::Start, 1.0 / h),
            (ClassLabel::StartCopy, (a - 1.0) / h),
            (ClassLabel::StartPiece, 1.0 - a / h),
        ];
        Ok(Self {
            k,
            l,
            p1: f(&probs[0].0),
            p2: probs.iter().map(|p| f(&p.1)).collect(),
            p3: probs.iter().map(|p| f(&p.2)).collect(),
            log_k: params.log_k,
            uniform,
            in_piece,
            copy_start: 1.0 / a,
        })
    }

    fn pick(rng: &mut ChaCha8Rng, table: &[(ClassLabel, f64)]) -> ClassLabel {
        let mut u: f64 = rng.gen();
        for &(c, p) in table {
            if u < p {
                return c;
            }
            u -= p;
        }
        table.iter().rev().find(|(_, p)| *p > 0.0).expect("nonempty table").0
    }

    fn run(&self, rng: &mut ChaCha8Rng, steps: u64) -> WalkTrace {
        let mut s = State {
            class: ClassLabel::Start,
            piece: self.l,
        };
        let (mut tau1, mut tau2, mut tau3) = (None, None, None);
        for step in 1..=steps {
            let idx = (s.piece - self.log_k) as usize;
            if rng.gen_bool(self.p1) {
                tau1.get_or_insert(step);
                s.class = Self::pick(rng, &self.uniform);
                s.piece = match s.class {
                    ClassLabel::Piece(j) => j,
                    _ => self.l,
                };
            } else if rng.gen_bool(self.p2[idx]) {
                tau2.get_or_insert(step);
                if s.piece == self.l {
                    s.class = Self::pick(rng, &self.in_piece);
                }
            } else if rng.gen_bool(self.p3[idx]) {
                tau3.get_or_insert(step);
                if matches!(s.class, ClassLabel::Start | ClassLabel::StartCopy) {
                    s.class = if rng.gen_bool(self.copy_start) {
                        ClassLabel::Start
                    } else {
                        ClassLabel::StartCopy
                    };
                }
            }
        }
        WalkTrace {
            l: self.l,
            steps,
            tau1,
            tau2,
            tau3,
            final_class: s.class,
        }
    }
}

/// Runs `replicas` independent walks from the start vertex of piece `l`.
/// Replica `r` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `r`,
/// so results do not depend on scheduling.
pub fn simulate_walk(k: u32, l: u32, mode: WalkMode, seed: u64, replicas: usize) -> Result<WalkStats> {
    let params = super::construction_sizes(k)?;
    params.check_piece(l)?;
    match mode {
        WalkMode::Discrete { steps: 0 } => {
            return Err(Error::BadParameter("steps must be at least 1".into()))
        }
        WalkMode::Poissonized { time } if !(time > 0.0) || !time.is_finite() => {
            return Err(Error::NegativeTime(time))
        }
        _ => {}
    }
    if replicas == 0 {
        return Err(Error::BadParameter("replicas must be at least 1".into()));
    }
    let coins = Coins::new(&params, l)?;
    let traces: Vec<WalkTrace> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let steps = match mode {
                WalkMode::Discrete { steps } => steps,
                WalkMode::Poissonized { time } => {
                    Poisson::new(time).expect("positive rate").sample(&mut rng) as u64
                }
            };
            coins.run(&mut rng, steps)
        })
        .collect();

    let idx = (l - coins.log_k) as usize;
    let q1 = 1.0 - coins.p1;
    let q2 = q1 * (1.0 - coins.p2[idx]);
    let q3 = q2 * (1.0 - coins.p3[idx]);
    let survival = |q: f64| match mode {
        WalkMode::Discrete { steps } => q.powf(steps as f64),
        WalkMode::Poissonized { time } => (-(1.0 - q) * time).exp(),
    };
    let count = |which: &dyn Fn(&WalkTrace) -> Vec<Option<u64>>| {
        traces.iter().filter(|t| t.survives(&which(t))).count()
    };
    let no_uniform = Estimate::new(count(&|t| vec![t.tau1]), replicas, survival(q1));
    let no_piece = Estimate::new(count(&|t| vec![t.tau1, t.tau2]), replicas, survival(q2));
    let no_event = Estimate::new(count(&|t| vec![t.tau1, t.tau2, t.tau3]), replicas, survival(q3));
    Ok(WalkStats {
        k: coins.k,
        l,
        mode,
        seed,
        replicas,
        no_uniform,
        no_piece,
        no_event,
        traces,
    })
}
