use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use specprof::experiments::{self, format_number, SuiteSpec, TheoremReport};
use specprof::{
    check_rough_isometry, construction, parse_graph_json, path_metric, profile, Error, Graph, ProfileMode,
    SpectralDecomposition, WalkMode,
};

#[derive(Parser)]
#[command(name = "specprof", version, about = "Spectral profiles and L-infinity mixing of weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Report format; commands that compute a single number print it bare
    /// when no format is given.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphInput {
    /// Graph JSON: {"num_vertices": n, "edges": [[u, v, w], ...]}.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary measure and pi_*.
    Stationary {
        #[command(flatten)]
        graph: GraphInput,
        #[command(flatten)]
        output: Output,
    },
    /// Exact spectral profile curve.
    Profile {
        #[command(flatten)]
        graph: GraphInput,
        #[command(flatten)]
        output: Output,
    },
    /// The profile integral rho(epsilon).
    Rho {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Uniform mixing time tau_inf(epsilon).
    Tau {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Mixing time from one start vertex.
    TauFrom {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        start: usize,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[command(flatten)]
        output: Output,
    },
    /// tau_inf(1/2) <= rho on every graph of a suite.
    VerifyGmt {
        #[arg(long, default_value = "default")]
        suite: String,
        #[command(flatten)]
        output: Output,
    },
    /// rho / (tau_inf * loglog(1/pi_*)) over a suite.
    Thm1 {
        #[arg(long, default_value = "default")]
        suite: String,
        #[command(flatten)]
        output: Output,
    },
    /// Emit the dense construction graph (k = 3) as graph JSON.
    Construct {
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// tau, certified rho lower bound and their ratio for k = 3..kmax.
    Thm2 {
        #[arg(long, default_value_t = 12)]
        kmax: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo of the three-coin walk on the construction.
    Simulate {
        #[arg(long, default_value_t = 3)]
        k: u32,
        /// Start piece label l (defaults to the smallest piece).
        #[arg(long)]
        start: Option<u32>,
        /// Discrete steps (default 2^(k+1)).
        #[arg(long, conflicts_with = "time")]
        steps: Option<u64>,
        /// Continuous time: Poisson(time) steps per replica.
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Mixing from the root and from a child of the root of binary trees.
    TreeDemo {
        #[arg(long, default_value_t = 9)]
        height: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Check that a vertex map is a K-rough isometry.
    RoughIso {
        #[command(flatten)]
        graph: GraphInput,
        /// Target graph (defaults to the input graph).
        #[arg(long)]
        target: Option<PathBuf>,
        /// JSON array of target vertex indices, one per source vertex.
        #[arg(long)]
        map: PathBuf,
        #[arg(long = "K")]
        k: f64,
        #[command(flatten)]
        output: Output,
    },
}

type Outcome = Result<(String, bool), Error>;

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::BadInputFile(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<Graph, Error> {
    parse_graph_json(&read(path)?).map_err(|e| match e {
        Error::BadInputFile(msg) => Error::BadInputFile(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Rounds every float to 12 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = format!("{x:.11e}").parse().expect("formatted float");
            json!(r)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_json(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("serialisable");
    s.push('\n');
    s
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn report(r: &TheoremReport, format: Option<Format>) -> (String, bool) {
    let body = match format {
        Some(Format::Json) => to_json(serde_json::to_value(r).expect("serialisable")),
        _ => r.to_csv(),
    };
    (body, r.passed())
}

fn suite(name: &str) -> Result<SuiteSpec, Error> {
    SuiteSpec::by_name(name)
}

fn single_number(label: &str, x: f64, extra: Value, format: Option<Format>) -> String {
    match format {
        None => format!("{}\n", format_number(x)),
        Some(Format::Csv) => csv(label, [vec![format_number(x)]]),
        Some(Format::Json) => {
            let mut v = extra;
            v[label] = json!(x);
            to_json(v)
        }
    }
}

fn run(command: &Command) -> Outcome {
    match command {
        Command::Stationary { graph, output } => {
            let g = load_graph(&graph.input)?;
            let pi = g.stationary();
            let body = match output.format {
                Some(Format::Csv) => csv(
                    "vertex,pi",
                    pi.iter().enumerate().map(|(x, p)| vec![x.to_string(), format_number(*p)]),
                ),
                _ => to_json(json!({
                    "num_vertices": g.num_vertices(),
                    "total_weight": g.total_weight(),
                    "pi": pi,
                    "pi_star": g.pi_star(),
                })),
            };
            Ok((body, true))
        }
        Command::Profile { graph, output } => {
            let g = load_graph(&graph.input)?;
            let curve = profile::spectral_profile(&g, &ProfileMode::Exact)?;
            let body = match output.format {
                Some(Format::Csv) => csv(
                    "r_from,r_to,lambda,set",
                    curve.to_json().segments.iter().zip(&curve.sets).map(|(s, set)| {
                        let members: Vec<String> = set.members().iter().map(|v| v.to_string()).collect();
                        vec![
                            format_number(s.r_from),
                            s.r_to.map_or_else(|| "inf".into(), format_number),
                            format_number(s.lambda),
                            members.join(" "),
                        ]
                    }),
                ),
                _ => {
                    let mut v = serde_json::to_value(curve.to_json()).expect("serialisable");
                    v["gap"] = json!(curve.gap);
                    v["sets"] = json!(curve.sets.iter().map(|s| s.members().to_vec()).collect::<Vec<_>>());
                    to_json(v)
                }
            };
            Ok((body, true))
        }
        Command::Rho { graph, epsilon, output } => {
            let g = load_graph(&graph.input)?;
            let r = profile::rho(&g, *epsilon)?;
            let body = match output.format {
                Some(Format::Csv) => csv(
                    "r_from,r_to,lambda,contribution",
                    r.bands.iter().map(|b| {
                        [b.r_from, b.r_to, b.lambda, b.contribution].iter().map(|x| format_number(*x)).collect()
                    }),
                ),
                None => format!("{}\n", format_number(r.rho)),
                Some(Format::Json) => to_json(json!({
                    "epsilon": r.epsilon,
                    "rho": r.rho,
                    "pi_star": r.pi_star,
                    "dyadic_sum": r.dyadic_sum,
                    "bands": r.bands,
                })),
            };
            Ok((body, true))
        }
        Command::Tau { graph, epsilon, output } => {
            let g = load_graph(&graph.input)?;
            let r = specprof::tau_inf(&g, *epsilon)?;
            let body = match output.format {
                Some(Format::Csv) => r.samples_csv(),
                _ => single_number(
                    "tau_inf",
                    r.tau_inf,
                    json!({ "epsilon": r.epsilon, "samples": r.samples }),
                    output.format,
                ),
            };
            Ok((body, true))
        }
        Command::TauFrom { graph, start, epsilon, output } => {
            let g = load_graph(&graph.input)?;
            let t = SpectralDecomposition::connected(&g)?.tau_inf_from(*start, *epsilon)?;
            let body = single_number(
                "tau_inf_from",
                t,
                json!({ "start": start, "epsilon": epsilon }),
                output.format,
            );
            Ok((body, true))
        }
        Command::VerifyGmt { suite: name, output } => Ok(report(&experiments::verify_gmt(&suite(name)?)?, output.format)),
        Command::Thm1 { suite: name, output } => Ok(report(&experiments::thm1_report(&suite(name)?)?, output.format)),
        Command::Thm2 { kmax, output } => Ok(report(&experiments::thm2_report(*kmax)?, output.format)),
        Command::TreeDemo { height, output } => Ok(report(&experiments::tree_demo(*height)?, output.format)),
        Command::Construct { k, .. } => {
            let g = construction::build_gk_dense(*k)?;
            Ok((format!("{}\n", g.to_file().to_json()), true))
        }
        Command::Simulate {
            k,
            start,
            steps,
            time,
            replicas,
            seed,
            output,
        } => {
            let params = construction::construction_sizes(*k)?;
            let l = start.unwrap_or(params.log_k);
            let mode = match (steps, time) {
                (_, Some(t)) => WalkMode::Poissonized { time: *t },
                (Some(s), None) => WalkMode::Discrete { steps: *s },
                (None, None) => WalkMode::Discrete { steps: 1 << (k + 1) },
            };
            let s = construction::simulate_walk(*k, l, mode, *seed, *replicas)?;
            let events = [
                ("tau1", s.no_uniform),
                ("min_tau1_tau2", s.no_piece),
                ("min_tau1_tau2_tau3", s.no_event),
            ];
            let body = match output.format {
                Some(Format::Csv) => csv(
                    "event,empirical,std_error,exact",
                    events.iter().map(|(name, e)| {
                        vec![
                            name.to_string(),
                            format_number(e.empirical),
                            format_number(e.std_error),
                            format_number(e.exact),
                        ]
                    }),
                ),
                _ => to_json(serde_json::to_value(&s).expect("serialisable")),
            };
            Ok((body, true))
        }
        Command::RoughIso {
            graph,
            target,
            map,
            k,
            output,
        } => {
            let x = load_graph(&graph.input)?;
            let y = match target {
                Some(p) => load_graph(p)?,
                None => x.clone(),
            };
            let text = read(map)?;
            let map: Vec<usize> = serde_json::from_str(&text)
                .map_err(|e| Error::BadInputFile(format!("{}: {e}", map.display())))?;
            let r = check_rough_isometry(&path_metric(&x), &path_metric(&y), &map, *k)?;
            let body = match output.format {
                Some(Format::Csv) => csv(
                    "K,holds,violation",
                    [vec![format_number(r.k), r.holds.to_string(), format_number(r.violation)]],
                ),
                _ => to_json(serde_json::to_value(&r).expect("serialisable")),
            };
            Ok((body, r.holds))
        }
    }
}

fn out_path(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Construct { out, .. } => out.as_ref(),
        Command::Stationary { output, .. }
        | Command::Profile { output, .. }
        | Command::Rho { output, .. }
        | Command::Tau { output, .. }
        | Command::TauFrom { output, .. }
        | Command::VerifyGmt { output, .. }
        | Command::Thm1 { output, .. }
        | Command::Thm2 { output, .. }
        | Command::Simulate { output, .. }
        | Command::TreeDemo { output, .. }
        | Command::RoughIso { output, .. } => output.out.as_ref(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((body, passed)) => {
            match out_path(&cli.command) {
                Some(path) => {
                    if let Err(e) = fs::write(path, &body) {
                        eprintln!("error: BadOutputFile: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{body}"),
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: assertion failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
