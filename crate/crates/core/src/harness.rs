//! Experiment configs, result records, caching and plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::distributions::{
    coupled_weight_scaling, embedding_pairs, loop_counterexample_pair, random_regular_graph,
    CoupledPair, Family, PgwConditioning, RootedDistribution,
};
use crate::entropy::{
    entropy_finite_limit, entropy_resistance, entropy_series, entropy_spectral, identity_checks,
    EstimatorKind, ResistanceOptions, SeriesOptions,
};
use crate::error::{Error, Result};
use crate::graph::{families, parse_graph, verify_domination, RootedGraph, WeightedMultigraph};
use crate::resistance::{log_grid, rayleigh_check, resistance_curve, write_curve_csv};
use crate::spanning::{tau, tau_bruteforce, BRUTE_FORCE_EDGE_LIMIT};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tau,
    Entropy,
    ResistanceCurve,
    Converge,
    Identities,
    Domination,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    LoopCounterexample,
    WeightScaling,
    Embeddings,
}

/// A flat experiment description. Every field other than `command` is
/// optional; which ones are required depends on the command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaves: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<PgwConditioning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with_loop: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerate_roots: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<EstimatorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

macro_rules! override_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn merged(mut self, flags: &ExperimentConfig) -> Self {
        override_fields!(self, flags;
            command, seed, output, graph, exact, family, n, d, leaves, mean, conditioning,
            working_radius, with_loop, weight_scale, enumerate_roots, method, k, samples, tol,
            s_floor, radius, max_radius, radii, sizes, s_grid, s_min, s_max, s_points, pair, factor);
        self
    }

    pub fn seed_value(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Check every field the command needs; all violations are reported at once.
    pub fn validate(&self) -> Result<Command> {
        let mut errs = Vec::new();
        let Some(command) = self.command else {
            return Err(Error::Config(vec!["missing `command`".into()]));
        };
        let positive = |v: Option<f64>, name: &str, errs: &mut Vec<String>| {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    errs.push(format!("`{name}` must be positive, got {x}"));
                }
            }
        };
        positive(self.tol, "tol", &mut errs);
        positive(self.s_floor, "s_floor", &mut errs);
        positive(self.mean, "mean", &mut errs);
        positive(self.weight_scale, "weight_scale", &mut errs);
        positive(self.s_min, "s_min", &mut errs);
        positive(self.s_max, "s_max", &mut errs);
        if self.samples == Some(0) {
            errs.push("`samples` must be at least 1".into());
        }
        if self.k == Some(0) {
            errs.push("`k` must be at least 1".into());
        }
        if let Some(g) = &self.s_grid {
            if g.is_empty() || g.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                errs.push("`s_grid` must be a non-empty list of non-negative numbers".into());
            }
        }
        if let (Some(a), Some(b)) = (self.s_min, self.s_max) {
            if a >= b {
                errs.push(format!("`s_min` ({a}) must be below `s_max` ({b})"));
            }
        }
        if self.s_points.is_some_and(|p| p < 2) {
            errs.push("`s_points` must be at least 2".into());
        }
        if let Some(p) = &self.graph {
            if !p.is_file() {
                errs.push(format!("graph file {} does not exist", p.display()));
            }
        }
        match command {
            Command::Tau => {
                if self.graph.is_none() {
                    errs.push("`tau` needs `graph`".into());
                }
            }
            Command::Entropy | Command::Spectral | Command::ResistanceCurve => {
                if self.graph.is_none() {
                    match &self.family {
                        None => errs.push(format!("`{}` needs `family` or `graph`", command_name(command))),
                        Some(_) => {
                            self.family_spec(&mut errs);
                        }
                    }
                }
                if command == Command::Spectral && self.radius.is_none() {
                    errs.push("`spectral` needs `radius`".into());
                }
                if command == Command::Entropy && self.method == Some(EstimatorKind::FiniteLimit) {
                    errs.push("the finite-limit estimator runs under the `converge` command".into());
                }
            }
            Command::Converge => {
                match self.family.as_deref() {
                    Some("torus" | "cycle" | "complete" | "random_regular") => {}
                    Some(f) => errs.push(format!(
                        "`converge` supports torus, cycle, complete and random_regular, not `{f}`"
                    )),
                    None => errs.push("`converge` needs `family`".into()),
                }
                if self.family.as_deref() == Some("random_regular") && self.d.is_none() {
                    errs.push("random_regular needs `d`".into());
                }
                match &self.sizes {
                    None => errs.push("`converge` needs `sizes`".into()),
                    Some(s) if s.is_empty() => errs.push("`sizes` is empty".into()),
                    Some(s) if s.windows(2).any(|w| w[1] <= w[0]) => {
                        errs.push("`sizes` must be strictly increasing".into())
                    }
                    _ => {}
                }
            }
            Command::Identities => {}
            Command::Domination => match self.pair {
                None => errs.push("`domination` needs `pair`".into()),
                Some(PairKind::WeightScaling) => {
                    match self.factor {
                        None => errs.push("weight_scaling needs `factor`".into()),
                        Some(f) if f <= 1.0 => errs.push(format!("`factor` must exceed 1, got {f}")),
                        _ => {}
                    }
                    if self.family.is_none() {
                        errs.push("weight_scaling needs a base `family`".into());
                    } else {
                        self.family_spec(&mut errs);
                    }
                }
                Some(PairKind::LoopCounterexample | PairKind::Embeddings) => {
                    if self.d.is_some_and(|d| d < 3) {
                        errs.push("`d` must be at least 3".into());
                    }
                }
            },
        }
        if errs.is_empty() {
            Ok(command)
        } else {
            Err(Error::Config(errs))
        }
    }

    fn family_spec(&self, errs: &mut Vec<String>) -> Option<Family> {
        let name = self.family.as_deref()?;
        let before = errs.len();
        let mut need = |v: Option<usize>, field: &str| {
            if v.is_none() {
                errs.push(format!("family `{name}` needs `{field}`"));
            }
            v.unwrap_or(0)
        };
        let family = match name {
            "cycle" => Family::Cycle { n: need(self.n, "n") },
            "path" => Family::Path { n: need(self.n, "n") },
            "complete" => Family::Complete { n: need(self.n, "n") },
            "star" => Family::Star { leaves: need(self.leaves, "leaves") },
            "torus" => Family::Torus { n: need(self.n, "n") },
            "random_regular" => Family::RandomRegular {
                n: need(self.n, "n"),
                d: need(self.d, "d"),
            },
            "z" => Family::Z,
            "z2" => Family::Z2,
            "z_next_nearest" => Family::ZNextNearest,
            "triangular" => Family::Triangular,
            "regular_tree" => Family::RegularTree { d: need(self.d, "d") },
            "loop_path" => Family::LoopPath {
                d: need(self.d, "d"),
                with_loop: self.with_loop.unwrap_or(false),
            },
            "heavy_tail_z" => Family::HeavyTailZ,
            "pgw" => {
                if self.mean.is_none() {
                    errs.push("family `pgw` needs `mean`".into());
                }
                Family::Pgw {
                    mean: self.mean.unwrap_or(1.0),
                    conditioning: self.conditioning.unwrap_or(PgwConditioning::None),
                    working_radius: self.working_radius.unwrap_or(0),
                }
            }
            other => {
                errs.push(format!("unknown family `{other}`"));
                return None;
            }
        };
        if let Err(e) = RootedDistribution::new(family.clone(), 0) {
            if errs.len() == before {
                errs.push(e.to_string());
            }
        }
        Some(family)
    }

    fn distribution(&self) -> Result<RootedDistribution> {
        let mut dist = match &self.graph {
            Some(path) => {
                let g = load_graph(path)?;
                RootedDistribution::uniform_root(g.into_parts().0, path.display().to_string())
                    .with_seed(self.seed_value())
            }
            None => {
                let mut errs = Vec::new();
                let family = self.family_spec(&mut errs);
                match family {
                    Some(f) if errs.is_empty() => RootedDistribution::new(f, self.seed_value())?,
                    _ => return Err(Error::Config(errs)),
                }
            }
        };
        if let Some(w) = self.weight_scale {
            dist = dist.with_weight_scale(w)?;
        }
        if self.enumerate_roots == Some(true) {
            dist = dist.enumerated();
        }
        Ok(dist)
    }

    fn s_values(&self, default: (f64, f64, usize)) -> Vec<f64> {
        match &self.s_grid {
            Some(g) => g.clone(),
            None => log_grid(
                self.s_min.unwrap_or(default.0),
                self.s_max.unwrap_or(default.1),
                self.s_points.unwrap_or(default.2),
            ),
        }
    }
}

/// Parse a snake_case or kebab-case keyword into one of the config enums.
pub fn parse_keyword<T: serde::de::DeserializeOwned>(word: &str) -> Result<T> {
    serde_json::from_value(Value::String(word.to_string()))
        .or_else(|_| serde_json::from_value(Value::String(word.replace('-', "_"))))
        .or_else(|_| serde_json::from_value(Value::String(word.replace('_', "-"))))
        .map_err(|_| Error::Config(vec![format!("unrecognized value `{word}`")]))
}

fn command_name(c: Command) -> String {
    serde_json::to_value(c).unwrap().as_str().unwrap().to_string()
}

fn load_graph(path: &Path) -> Result<RootedGraph> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_graph(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_radius: Option<usize>,
    pub cached: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub config: ExperimentConfig,
    /// SHA-256 over the config and the contents of any input file.
    pub input_hash: String,
    pub outputs: Value,
    pub diagnostics: RunDiagnostics,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Content hash of everything that determines the outputs. The output
/// path does not.
pub fn input_hash(config: &ExperimentConfig) -> Result<String> {
    let mut hashed = config.clone();
    hashed.output = None;
    let mut h = Sha256::new();
    let text = serde_json::to_string(&hashed).expect("config serializes");
    h.update(format!("config {}\0", text.len()));
    h.update(text.as_bytes());
    if let Some(p) = &config.graph {
        let bytes = fs::read(p)?;
        h.update(format!("graph {}\0", bytes.len()));
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// Cache directory: `TEL_CACHE_DIR`, else `tel-cache` under the system
/// temporary directory.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("TEL_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("tel-cache"))
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Recompute even when the cache has a record.
    pub force: bool,
    /// Overrides [`cache_dir`]; `None` uses it.
    pub cache_dir: Option<PathBuf>,
    /// Skip the cache entirely.
    pub no_cache: bool,
}

/// Validate, compute (or load from cache), and write the record and any
/// plot data next to `config.output`.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<ResultRecord> {
    let command = config.validate()?;
    let hash = input_hash(config)?;
    let cache = opts.cache_dir.clone().unwrap_or_else(cache_dir);
    let cache_file = cache.join(format!("{hash}.json"));
    let started = Instant::now();
    let cached = if opts.force || opts.no_cache {
        None
    } else {
        fs::read(&cache_file)
            .ok()
            .and_then(|b| serde_json::from_slice::<ResultRecord>(&b).ok())
    };
    let record = match cached {
        Some(mut r) => {
            r.config = config.clone();
            r.diagnostics.cached = true;
            r.diagnostics.wall_clock_seconds = started.elapsed().as_secs_f64();
            r
        }
        None => {
            let (outputs, peak_radius) = compute(command, config)?;
            let record = ResultRecord {
                schema: SCHEMA_VERSION,
                config: config.clone(),
                input_hash: hash,
                outputs,
                diagnostics: RunDiagnostics {
                    wall_clock_seconds: started.elapsed().as_secs_f64(),
                    peak_radius,
                    cached: false,
                },
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
            };
            if !opts.no_cache {
                write_atomic(&cache_file, &serde_json::to_vec_pretty(&record).unwrap())?;
            }
            record
        }
    };
    if let Some(out) = &config.output {
        write_atomic(out, &serde_json::to_vec_pretty(&record).unwrap())?;
        if matches!(command, Command::ResistanceCurve | Command::Converge) {
            emit_plotdata(&record, &out.with_extension("csv"))?;
        }
    }
    Ok(record)
}

fn compute(command: Command, c: &ExperimentConfig) -> Result<(Value, Option<usize>)> {
    match command {
        Command::Tau => {
            let path = c.graph.as_ref().unwrap();
            let g = load_graph(path)?;
            let g = g.graph();
            let t = tau(g, c.exact.unwrap_or(true))?;
            let mut out = json!({
                "vertices": g.vertex_count(),
                "edges": g.edge_count(),
                "tau": t,
            });
            if c.exact.unwrap_or(true) && g.edge_count() <= BRUTE_FORCE_EDGE_LIMIT {
                let brute = tau_bruteforce(g)?;
                out["bruteforce_agrees"] = json!(t.exact.as_ref() == Some(&brute));
            }
            Ok((out, None))
        }
        Command::Entropy => {
            let dist = c.distribution()?;
            let estimate = match c.method.unwrap_or(EstimatorKind::Series) {
                EstimatorKind::Series => {
                    let mut o = SeriesOptions::default();
                    o.k_max = c.k.unwrap_or(o.k_max);
                    o.samples = c.samples.unwrap_or(o.samples);
                    o.tol = c.tol.unwrap_or(o.tol);
                    entropy_series(&dist, &o)?
                }
                EstimatorKind::Resistance => entropy_resistance(&dist, &resistance_options(c))?,
                EstimatorKind::Spectral => {
                    entropy_spectral(&dist, c.samples.unwrap_or(1), c.radius.unwrap_or(64))?
                }
                EstimatorKind::FiniteLimit => unreachable!("rejected by validation"),
            };
            Ok((json!({ "distribution": dist.descriptor(), "estimate": estimate }), None))
        }
        Command::Spectral => {
            let dist = c.distribution()?;
            let est = entropy_spectral(&dist, c.samples.unwrap_or(1), c.radius.unwrap())?;
            Ok((
                json!({ "distribution": dist.descriptor(), "estimate": est }),
                c.radius,
            ))
        }
        Command::ResistanceCurve => {
            let dist = c.distribution()?;
            let sample = dist.sample(0)?;
            let s = c.s_values((1e-4, 1e4, 48));
            let curve = resistance_curve(&sample, &s, c.tol.unwrap_or(1e-9))?;
            let peak = curve.iter().map(|v| v.radius_used).max();
            Ok((
                json!({ "distribution": dist.descriptor(), "curve": curve }),
                peak,
            ))
        }
        Command::Converge => {
            let family = c.family.as_deref().unwrap();
            let seq: Vec<(String, WeightedMultigraph)> = c
                .sizes
                .as_ref()
                .unwrap()
                .iter()
                .map(|&n| {
                    let g = match family {
                        "torus" => families::torus(n),
                        "cycle" => families::cycle(n),
                        "complete" => families::complete(n),
                        _ => random_regular_graph(
                            n,
                            c.d.unwrap(),
                            crate::distributions::derive_seed(c.seed_value(), 4, n as u64),
                        ),
                    }?;
                    Ok((n.to_string(), g))
                })
                .collect::<Result<_>>()?;
            let (points, estimate) = entropy_finite_limit(&seq)?;
            let rows: Vec<Value> = points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    json!({
                        "n": p.label.parse::<usize>().unwrap(),
                        "vertices": p.vertices,
                        "value": p.value,
                        "gap": if i == 0 { Value::Null } else { json!(p.value - points[i - 1].value) },
                    })
                })
                .collect();
            Ok((json!({ "family": family, "sequence": rows, "estimate": estimate }), None))
        }
        Command::Identities => {
            let checks = identity_checks();
            let pass = checks
                .iter()
                .all(|c| c.log_error.abs() <= 1e-8 && c.positive_part_error.abs() <= 1e-8);
            Ok((json!({ "checks": checks, "all_pass": pass, "tolerance": 1e-8 }), None))
        }
        Command::Domination => {
            let d = c.d.unwrap_or(20);
            let pairs: Vec<CoupledPair> = match c.pair.unwrap() {
                PairKind::LoopCounterexample => vec![loop_counterexample_pair(d)?],
                PairKind::Embeddings => embedding_pairs(c.d.unwrap_or(3))?,
                PairKind::WeightScaling => {
                    vec![coupled_weight_scaling(&c.distribution()?, c.factor.unwrap())?]
                }
            };
            let radii = c.radii.clone().unwrap_or_else(|| vec![0, 1, 2, 3]);
            let s = c.s_values((1e-2, 1e2, 9));
            let tol = c.tol.unwrap_or(1e-9);
            let index = c.seed_value();
            let mut rows = Vec::new();
            for p in &pairs {
                let mut witness = Vec::new();
                for &r in &radii {
                    let v = verify_domination(&p.witness(index, r)?);
                    witness.push(json!({ "radius": r, "holds": v.holds, "diagnostic": v.diagnostic }));
                }
                let report = rayleigh_check(&p.high.sample(index)?, &p.low.sample(index)?, &s, tol)?;
                rows.push(json!({
                    "label": p.label,
                    "high": p.high.descriptor(),
                    "low": p.low.descriptor(),
                    "unimodular": p.unimodular,
                    "witness": witness,
                    "rayleigh": report,
                    "rayleigh_holds": report.holds(),
                }));
            }
            Ok((json!({ "pairs": rows }), radii.iter().copied().max()))
        }
    }
}

fn resistance_options(c: &ExperimentConfig) -> ResistanceOptions {
    let mut o = ResistanceOptions::default();
    o.samples = c.samples.unwrap_or(o.samples);
    o.tol = c.tol.unwrap_or(o.tol);
    o.s_floor = c.s_floor.unwrap_or(o.s_floor);
    o.max_radius = c.max_radius.unwrap_or(o.max_radius);
    o
}

/// Write the curve or sequence of a record as CSV with a one-line header.
pub fn emit_plotdata(record: &ResultRecord, path: &Path) -> Result<PathBuf> {
    let mut out = String::new();
    if let Some(curve) = record.outputs.get("curve") {
        let curve: Vec<crate::resistance::ResistanceValue> =
            serde_json::from_value(curve.clone()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve)?;
        out = String::from_utf8(buf).expect("csv is utf-8");
    } else if let Some(Value::Array(rows)) = record.outputs.get("sequence") {
        out.push_str("n,value,gap\n");
        for r in rows {
            let gap = r["gap"].as_f64().map(|g| g.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", r["n"], r["value"], gap);
        }
    } else {
        return Err(Error::InvalidArgument(
            "record has no curve or sequence to plot".into(),
        ));
    }
    write_atomic(path, out.as_bytes())?;
    Ok(path.to_path_buf())
}
