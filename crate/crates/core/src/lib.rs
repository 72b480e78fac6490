//! Spectral profiles, Faber–Krahn functions and uniform mixing of
//! reversible random walks on finite weighted graphs.

pub mod bigvalue;
pub mod construction;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod mixing;
pub mod profile;
pub mod rough_isometry;
pub mod scalar;
pub mod spectral;

pub use bigvalue::{BigValue, ChainValue};
pub use construction::{
    build_gk_dense, build_gk_exact, construction_sizes, lumped_chain, lumped_heat_kernel, one_step_law,
    rho_lower_bound, simulate_walk, tau_construction, three_coin_probs, ConstructionParams, LumpedChain,
    WalkMode, WalkStats, WalkTrace,
};
pub use error::{Error, Result};
pub use experiments::{thm1_report, thm2_report, tree_demo, verify_gmt, SuiteSpec, TheoremReport};
pub use graph::{
    parse_graph_json, Edge, FormSummary, GraphFile, Laplacian, VertexFunction, VertexSet, Weight,
    WeightedGraph,
};
pub use linalg::{Matrix, SymmetricEigen};
pub use mixing::{
    heat_kernel, linf_deviation, sup_deviation, tau_inf, tau_inf_from, MixingReport, SpectralDecomposition,
};
pub use profile::{
    rayleigh_sets, rho, spectral_profile, ProfileMode, RayleighSets, RhoResult, SpectralProfileCurve,
};
pub use rough_isometry::{binary_tree, check_rough_isometry, path_metric, PathMetric, RoughIsometryReport, Witness};
pub use scalar::Scalar;
pub use spectral::{
    conductance, entropy, face_stationary_value, lambda0, lambda_fk, lambda_fk_exact, lambda_fk_with,
    log_sobolev, spectral_gap, FaberKrahnValue, FaceSolver, FkMethod, FkOptions, LogSobolevValue,
};

pub type Rational = num_rational::BigRational;
pub type Graph = WeightedGraph<f64>;
pub type Graph32 = WeightedGraph<f32>;
pub type ExactGraph = WeightedGraph<Rational>;
