//! Verification suites over graph families, the construction `G_k` and
//! binary trees. Every report carries its rows and the checks derived
//! from them; [`TheoremReport::recheck`] recomputes the checks.

pub mod thresholds;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::construction::{construction_sizes, rho_lower_bound, tau_construction, build_gk_dense};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::mixing::SpectralDecomposition;
use crate::profile::{rayleigh_sets, rho_from_curve, spectral_profile, ProfileMode};
use crate::rough_isometry::binary_tree;
use crate::Graph;

use thresholds::*;

#[derive(Debug, Clone)]
pub struct NamedGraph {
    pub name: String,
    pub graph: Graph,
}

#[derive(Debug, Clone)]
pub struct SuiteSpec {
    pub name: String,
    pub graphs: Vec<NamedGraph>,
}

pub fn complete_graph(n: usize) -> Result<Graph> {
    let edges = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b, 1.0)));
    WeightedGraph::new(n, edges)
}

pub fn path_graph(n: usize) -> Result<Graph> {
    WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, 1.0)))
}

pub fn cycle_graph(n: usize) -> Result<Graph> {
    WeightedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))
}

pub fn star_graph(n: usize) -> Result<Graph> {
    WeightedGraph::new(n, (1..n).map(|i| (0, i, 1.0)))
}

/// Connected graph on `n` vertices: a random recursive tree plus each
/// remaining pair with probability `density`, weights uniform in `[0.5, 2]`.
pub fn random_connected_graph(n: usize, density: f64, rng: &mut impl Rng) -> Result<Graph> {
    let mut edges = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        edges.push((parent, v, rng.gen_range(0.5..=2.0)));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if !edges.iter().any(|&(u, v, _)| (u, v) == (a, b)) && rng.gen_bool(density) {
                edges.push((a, b, rng.gen_range(0.5..=2.0)));
            }
        }
    }
    WeightedGraph::new(n, edges)
}

impl SuiteSpec {
    /// `K_n` (`n = 2..8`), paths and cycles (`n = 3..12`), the star on 8
    /// vertices and 20 seeded random graphs with `3 ≤ n ≤ 12`.
    pub fn default_suite() -> Self {
        let mut graphs = Vec::new();
        let mut add = |name: String, g: Result<Graph>| {
            graphs.push(NamedGraph {
                name,
                graph: g.expect("suite graphs are valid"),
            })
        };
        for n in 2..=8 {
            add(format!("K{n}"), complete_graph(n));
        }
        for n in 3..=12 {
            add(format!("path{n}"), path_graph(n));
        }
        for n in 3..=12 {
            add(format!("cycle{n}"), cycle_graph(n));
        }
        add("star8".into(), star_graph(8));
        for i in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
            rng.set_stream(i);
            let n = rng.gen_range(3..=12);
            add(format!("random{i}"), random_connected_graph(n, 0.3, &mut rng));
        }
        Self {
            name: "default".into(),
            graphs,
        }
    }

    /// The default suite restricted to graphs with at most `n` vertices.
    pub fn small_suite(n: usize) -> Self {
        let mut s = Self::default_suite();
        s.graphs.retain(|g| g.graph.num_vertices() <= n);
        s.name = format!("small{n}");
        s
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default_suite()),
            "small" => Ok(Self::small_suite(8)),
            other => Err(Error::BadParameter(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Gmt,
    Thm1,
    Thm2,
    TreeDemo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub kind: ReportKind,
    pub thresholds_version: u32,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub aggregates: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    /// Checks recomputed from the rows alone.
    pub fn recheck(&self) -> Vec<Check> {
        match self.kind {
            ReportKind::Gmt => gmt_checks(&self.rows),
            ReportKind::Thm1 => thm1_checks(&self.rows),
            ReportKind::Thm2 => thm2_checks(&self.rows),
            ReportKind::TreeDemo => tree_checks(&self.rows),
        }
    }

    /// Header row then one line per row; numbers with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = format!("label,{}\n", self.columns.join(","));
        for row in &self.rows {
            out.push_str(&row.label);
            for v in &row.values {
                out.push(',');
                out.push_str(&format_number(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// 12 significant digits, shortest form.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

struct GraphRun {
    tau: f64,
    rho: f64,
    pi_star: f64,
    min_tau_lambda_over_k: f64,
}

fn run_graph(g: &Graph) -> Result<GraphRun> {
    let dec = SpectralDecomposition::connected(g)?;
    let tau = dec.tau_inf(0.5)?;
    let curve = spectral_profile(g, &ProfileMode::Exact)?;
    let pi = g.stationary();
    let rho = rho_from_curve(&curve, &pi, 0.5).rho;
    let min_tau_lambda_over_k = rayleigh_sets(g)?
        .sets
        .iter()
        .map(|s| tau * s.lambda / s.k as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(GraphRun {
        tau,
        rho,
        pi_star: curve.pi_star,
        min_tau_lambda_over_k,
    })
}

fn suite_runs(suite: &SuiteSpec) -> Result<Vec<(String, usize, GraphRun)>> {
    suite
        .graphs
        .par_iter()
        .map(|g| Ok((g.name.clone(), g.graph.num_vertices(), run_graph(&g.graph)?)))
        .collect()
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn gmt_checks(rows: &[Row]) -> Vec<Check> {
    rows.iter()
        .map(|r| {
            let (tau, rho) = (r.values[2], r.values[3]);
            check(
                format!("gmt:{}", r.label),
                tau <= rho + GMT_SLACK,
                format!("tau = {}, rho = {}", format_number(tau), format_number(rho)),
            )
        })
        .collect()
}

/// `τ∞(1/2) ≤ ρ` on every graph of the suite; rows carry the slack `ρ/τ∞`.
pub fn verify_gmt(suite: &SuiteSpec) -> Result<TheoremReport> {
    let rows: Vec<Row> = suite_runs(suite)?
        .into_iter()
        .map(|(label, n, r)| Row {
            label,
            values: vec![n as f64, r.pi_star, r.tau, r.rho, r.rho / r.tau],
        })
        .collect();
    let slack: Vec<f64> = rows.iter().map(|r| r.values[4]).collect();
    Ok(TheoremReport {
        kind: ReportKind::Gmt,
        thresholds_version: VERSION,
        columns: ["n", "pi_star", "tau", "rho", "slack"].map(String::from).to_vec(),
        aggregates: vec![
            ("min_slack".into(), slack.iter().cloned().fold(f64::INFINITY, f64::min)),
            ("max_slack".into(), slack.iter().cloned().fold(0.0, f64::max)),
        ],
        checks: gmt_checks(&rows),
        rows,
    })
}

/// `max(1, log₂ log₂ (1/π_*))`.
pub fn loglog_guard(pi_star: f64) -> f64 {
    (1.0 / pi_star).log2().log2().max(1.0)
}

fn thm1_checks(rows: &[Row]) -> Vec<Check> {
    let ratios: Vec<f64> = rows.iter().map(|r| r.values[5]).collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    vec![
        check(
            "ratio-positive",
            ratios.iter().all(|r| r.is_finite() && *r > 0.0),
            "every ratio finite and positive",
        ),
        check(
            "ratio-bounded",
            max <= THM1_MAX_RATIO,
            format!("max ratio {} <= {}", format_number(max), THM1_MAX_RATIO),
        ),
    ]
}

/// `ρ / (τ∞ · max(1, log₂ log₂ 1/π_*))` over the suite, plus the smallest
/// `τ∞ λ(A_k)/k` over the Rayleigh sets.
pub fn thm1_report(suite: &SuiteSpec) -> Result<TheoremReport> {
    let rows: Vec<Row> = suite_runs(suite)?
        .into_iter()
        .map(|(label, n, r)| {
            let guard = loglog_guard(r.pi_star);
            Row {
                label,
                values: vec![
                    n as f64,
                    r.pi_star,
                    r.tau,
                    r.rho,
                    guard,
                    r.rho / (r.tau * guard),
                    r.min_tau_lambda_over_k,
                ],
            }
        })
        .collect();
    let col = |i: usize| rows.iter().map(move |r| r.values[i]);
    Ok(TheoremReport {
        kind: ReportKind::Thm1,
        thresholds_version: VERSION,
        columns: ["n", "pi_star", "tau", "rho", "loglog", "ratio", "min_tau_lambda_over_k"]
            .map(String::from)
            .to_vec(),
        aggregates: vec![
            ("max_ratio".into(), col(5).fold(0.0, f64::max)),
            ("min_ratio".into(), col(5).fold(f64::INFINITY, f64::min)),
            ("min_tau_lambda_over_k".into(), col(6).fold(f64::INFINITY, f64::min)),
        ],
        checks: thm1_checks(&rows),
        rows,
    })
}

fn thm2_checks(rows: &[Row]) -> Vec<Check> {
    let mut out = Vec::new();
    for r in rows {
        let k = r.values[0];
        let bound = 2f64.powf(k + TAU_EXPONENT_OFFSET as f64);
        out.push(check(
            format!("tau-bound:k={k}"),
            r.values[1] <= bound,
            format!("tau = {} <= {bound}", format_number(r.values[1])),
        ));
    }
    let ratio: Vec<f64> = rows.iter().map(|r| r.values[3]).collect();
    out.push(check(
        "ratio-increasing",
        ratio.windows(2).all(|w| w[1] > w[0]),
        format!("{ratio:?}"),
    ));
    if let Some(first) = rows.first() {
        let base = first.values[4];
        let worst = rows.iter().map(|r| r.values[4] / base).fold(f64::INFINITY, f64::min);
        out.push(check(
            "ratio-over-k",
            worst >= THM2_SLOPE_FRACTION,
            format!("min (ratio/k) / (ratio/k at k = {}) = {}", first.values[0], format_number(worst)),
        ));
    }
    out
}

/// `τ(k)`, the certified `ρ(k)` lower bound and their ratio for
/// `k = 3..=k_max`, plus the dense cross-check of `τ(3)`.
pub fn thm2_report(k_max: u32) -> Result<TheoremReport> {
    if !(3..=12).contains(&k_max) {
        return Err(Error::KOutOfRange(k_max, 3, 12));
    }
    let rows: Vec<Row> = (3..=k_max)
        .into_par_iter()
        .map(|k| {
            let tau = tau_construction(k, 0.5)?;
            let rho = rho_lower_bound(k)?.value();
            let p = construction_sizes(k)?;
            let log2_n = (p.m as f64).log2() + p.h_log2() as f64;
            Ok(Row {
                label: format!("k={k}"),
                values: vec![k as f64, tau, rho, rho / tau, rho / tau / k as f64, log2_n.log2()],
            })
        })
        .collect::<Result<_>>()?;
    let dense = crate::mixing::tau_inf(&build_gk_dense(3)?, 0.5)?.tau_inf;
    let lumped = rows[0].values[1];
    let mut checks = thm2_checks(&rows);
    checks.push(check(
        "dense-k3",
        (dense - lumped).abs() <= DENSE_LUMPED_REL * lumped,
        format!("dense {} vs lumped {}", format_number(dense), format_number(lumped)),
    ));
    Ok(TheoremReport {
        kind: ReportKind::Thm2,
        thresholds_version: VERSION,
        columns: ["k", "tau", "rho_lb", "ratio", "ratio_over_k", "loglog_n"]
            .map(String::from)
            .to_vec(),
        aggregates: vec![("dense_tau_k3".into(), dense)],
        checks,
        rows,
    })
}

fn tree_checks(rows: &[Row]) -> Vec<Check> {
    let mut out = Vec::new();
    for r in rows {
        out.push(check(
            format!("child-slower:h={}", r.values[0]),
            r.values[2] > r.values[1],
            format!("child {} vs root {}", format_number(r.values[2]), format_number(r.values[1])),
        ));
    }
    let sep: Vec<f64> = rows.iter().map(|r| r.values[3]).collect();
    out.push(check(
        "separation-increasing",
        sep.windows(2).all(|w| w[1] > w[0]),
        format!("{sep:?}"),
    ));
    for w in rows.windows(2) {
        let h = w[0].values[0];
        if h < TREE_MIN_HEIGHT as f64 {
            continue;
        }
        let child = w[1].values[2] / w[0].values[2];
        let root = w[1].values[1] / w[0].values[1];
        out.push(check(
            format!("child-exponential:h={h}"),
            child >= TREE_GAMMA_EXP,
            format!("{} >= {TREE_GAMMA_EXP}", format_number(child)),
        ));
        out.push(check(
            format!("root-linear:h={h}"),
            root <= TREE_GAMMA_LIN,
            format!("{} <= {TREE_GAMMA_LIN}", format_number(root)),
        ));
    }
    out
}

/// `τ∞` from the root and from a child of the root of binary trees of
/// height `4..=h_max`, at `ε = TREE_EPSILON`.
pub fn tree_demo(h_max: u32) -> Result<TheoremReport> {
    if !(4..=10).contains(&h_max) {
        return Err(Error::BadParameter(format!("height must be in [4, 10], got {h_max}")));
    }
    let rows: Vec<Row> = (4..=h_max)
        .into_par_iter()
        .map(|h| {
            let t = binary_tree::<f64>(h)?;
            let dec = SpectralDecomposition::connected(&t)?;
            let root = dec.tau_inf_from(0, TREE_EPSILON)?;
            let child = dec.tau_inf_from(1, TREE_EPSILON)?;
            Ok(Row {
                label: format!("h={h}"),
                values: vec![h as f64, root, child, child / root],
            })
        })
        .collect::<Result<_>>()?;
    Ok(TheoremReport {
        kind: ReportKind::TreeDemo,
        thresholds_version: VERSION,
        columns: ["h", "tau_root", "tau_child", "child_over_root"].map(String::from).to_vec(),
        aggregates: vec![("epsilon".into(), TREE_EPSILON)],
        checks: tree_checks(&rows),
        rows,
    })
}
