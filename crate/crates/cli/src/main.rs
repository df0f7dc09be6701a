use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use tree_entropy::distributions::PgwConditioning;
use tree_entropy::entropy::EstimatorKind;
use tree_entropy::harness::{parse_keyword, run, Command, ExperimentConfig, PairKind, RunOptions};
use tree_entropy::Error;

#[derive(Parser, Debug)]
#[command(name = "tel", version, about = "Spanning-tree counts and tree entropy of rooted graphs")]
struct Cli {
    /// TOML experiment config; flags given here override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Recompute even if a cached record exists.
    #[arg(long, global = true)]
    force: bool,
    /// Do not read or write the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Weighted spanning-tree count of a graph file.
    Tau(Flags),
    /// Tree entropy of a rooted distribution.
    Entropy(Flags),
    /// Wired resistance R(s) over a grid of killing rates.
    ResistanceCurve(Flags),
    /// (1/|V|) log tau along a sequence of finite graphs.
    Converge(Flags),
    /// Quadrature checks of the two log identities.
    Identities(Flags),
    /// Domination witnesses and resistance ordering for coupled pairs.
    Domination(Flags),
    /// Spectral-measure estimate from a finite ball.
    Spectral(Flags),
    /// Run whatever command the config file names.
    Run(Flags),
}

fn keyword<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    parse_keyword(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Exact rational arithmetic where available.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    leaves: Option<usize>,
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long, value_parser = keyword::<PgwConditioning>)]
    conditioning: Option<PgwConditioning>,
    #[arg(long)]
    working_radius: Option<usize>,
    #[arg(long)]
    with_loop: bool,
    #[arg(long)]
    weight_scale: Option<f64>,
    #[arg(long)]
    enumerate_roots: bool,
    #[arg(long, value_parser = keyword::<EstimatorKind>)]
    method: Option<EstimatorKind>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    s_floor: Option<f64>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    max_radius: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    s_points: Option<usize>,
    #[arg(long, value_parser = keyword::<PairKind>)]
    pair: Option<PairKind>,
    #[arg(long)]
    factor: Option<f64>,
}

impl Flags {
    fn into_config(self, command: Option<Command>) -> ExperimentConfig {
        ExperimentConfig {
            command,
            seed: self.seed,
            output: self.output,
            graph: self.graph,
            exact: self.exact.then_some(true),
            family: self.family,
            n: self.n,
            d: self.d,
            leaves: self.leaves,
            mean: self.mean,
            conditioning: self.conditioning,
            working_radius: self.working_radius,
            with_loop: self.with_loop.then_some(true),
            weight_scale: self.weight_scale,
            enumerate_roots: self.enumerate_roots.then_some(true),
            method: self.method,
            k: self.k,
            samples: self.samples,
            tol: self.tol,
            s_floor: self.s_floor,
            radius: self.radius,
            max_radius: self.max_radius,
            radii: self.radii,
            sizes: self.sizes,
            s_grid: self.s_grid,
            s_min: self.s_min,
            s_max: self.s_max,
            s_points: self.s_points,
            pair: self.pair,
            factor: self.factor,
        }
    }
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let (command, flags) = match cli.command {
        Some(Sub::Tau(f)) => (Some(Command::Tau), f),
        Some(Sub::Entropy(f)) => (Some(Command::Entropy), f),
        Some(Sub::ResistanceCurve(f)) => (Some(Command::ResistanceCurve), f),
        Some(Sub::Converge(f)) => (Some(Command::Converge), f),
        Some(Sub::Identities(f)) => (Some(Command::Identities), f),
        Some(Sub::Domination(f)) => (Some(Command::Domination), f),
        Some(Sub::Spectral(f)) => (Some(Command::Spectral), f),
        Some(Sub::Run(f)) => (None, f),
        None => (None, Flags::default()),
    };
    let base = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_for(&e);
            }
        },
        None => ExperimentConfig::default(),
    };
    let config = base.merged(&flags.into_config(command));
    let opts = RunOptions {
        force: cli.force,
        no_cache: cli.no_cache,
        cache_dir: None,
    };
    match run(&config, &opts) {
        Ok(record) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&record).expect("record serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
