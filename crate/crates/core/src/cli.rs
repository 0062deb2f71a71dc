//! Command-line front end: dataset generation, factorization, method
//! comparison, wavelet export and wavelet-network training.
//!
//! Every command writes its files into `--out` together with a
//! `<command>.manifest.json` that records the arguments, input hashes and
//! outputs, and can be replayed with `lmmf rerun`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::baselines::{greedy_mmf, nystrom};
use crate::error::{Error, Result};
use crate::graphgen::{
    cayley_tree, fmt_real, karate_factions, karate_graph, kronecker_matrix, normalized_laplacian,
    read_labels, read_matrix_market, write_edge_list, write_file, write_labels,
    write_matrix_market,
};
use crate::matcore::{SymMatrix, ORTHOGONALITY_TOL};
use crate::mmf::{self, level_errors, levels_for_core_size, objective, Factorization, MmfConfig};
use crate::rlpolicy::{self, TrainConfig};
use crate::seeding;
use crate::wavelets::{self, BasisMode, SPARSITY_TOL};
use crate::wnn::{self, AdamConfig, NodeFeatures, Split, WnnModel};

/// Seed matrix of the Kronecker generator.
pub const KRONECKER_SEED: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 1.0]];

#[derive(Debug, Parser)]
#[command(
    name = "lmmf",
    version,
    about = "Learnable multiresolution matrix factorization toolkit"
)]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate a benchmark matrix.
    Gen(GenArgs),
    /// Factorize a symmetric matrix.
    Factorize(FactorizeArgs),
    /// Compare learnable MMF, greedy MMF and Nyström over core sizes.
    Compare(CompareArgs),
    /// Export the wavelet basis of a factorization.
    Wavelets(WaveletsArgs),
    /// Train a wavelet network for node classification.
    Wnn(WnnArgs),
    /// Replay the run recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Factorize(_) => "factorize",
            Command::Compare(_) => "compare",
            Command::Wavelets(_) => "wavelets",
            Command::Wnn(_) => "wnn",
            Command::Rerun(_) => "rerun",
        }
    }

    /// Resolves relative paths against `base`.
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            Command::Gen(a) => fix(&mut a.out),
            Command::Factorize(a) => {
                fix(&mut a.matrix);
                fix(&mut a.out);
            }
            Command::Compare(a) => {
                fix(&mut a.matrix);
                fix(&mut a.out);
            }
            Command::Wavelets(a) => {
                fix(&mut a.matrix);
                fix(&mut a.factorization);
                fix(&mut a.out);
            }
            Command::Wnn(a) => {
                fix(&mut a.matrix);
                fix(&mut a.factorization);
                fix(&mut a.labels);
                fix(&mut a.out);
            }
            Command::Rerun(a) => fix(&mut a.manifest),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    /// Normalized Laplacian of Zachary's karate club.
    Karate,
    /// Raw Kronecker power of a 2×2 seed.
    Kronecker,
    /// Normalized Laplacian of a Cayley tree.
    Cayley,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub dataset: Dataset,
    /// Kronecker order.
    #[arg(long, default_value_t = 9)]
    pub order: u32,
    /// Cayley tree coordination number.
    #[arg(long, default_value_t = 4)]
    pub z: usize,
    /// Cayley tree depth.
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Learnable,
    Greedy,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FactorizeArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Learnable)]
    pub method: Method,
    /// Number of levels; defaults to the count reaching `--core-size`.
    #[arg(long, visible_alias = "L")]
    pub levels: Option<usize>,
    /// Final core size `n − c·L`, used when `--levels` is absent.
    #[arg(long, default_value_t = 8)]
    pub core_size: usize,
    /// Rotation size (greedy is limited to 2).
    #[arg(long, visible_alias = "K")]
    pub k: Option<usize>,
    /// Wavelets retired per level.
    #[arg(long, default_value_t = 1)]
    pub c: usize,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Policy-training knobs shared by `factorize` and `compare`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = 1000)]
    pub max_episodes: usize,
    #[arg(long, default_value_t = 50)]
    pub omega: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Best distinct index sequences given the final manifold optimization.
    #[arg(long, default_value_t = 1)]
    pub polish_top: usize,
}

impl TrainingArgs {
    fn config(&self, mmf: MmfConfig) -> TrainConfig {
        TrainConfig {
            max_episodes: self.max_episodes,
            omega: self.omega,
            eta: self.eta,
            gamma: self.gamma,
            polish_top: self.polish_top,
            ..TrainConfig::new(mmf)
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Final core sizes `d_L`, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [6, 8, 10, 12])]
    pub core_sizes: Vec<usize>,
    /// Training seeds per core size for the learnable method.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 20)]
    pub nystrom_seeds: usize,
    /// Rotation size of the learnable method.
    #[arg(long, visible_alias = "K", default_value_t = 8)]
    pub k: usize,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WaveletsArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub factorization: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Orthonormal)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Orthonormal,
    Literal,
}

impl From<ModeArg> for BasisMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Orthonormal => BasisMode::Orthonormal,
            ModeArg::Literal => BasisMode::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesArg {
    Identity,
    Diffusion,
}

impl From<FeaturesArg> for NodeFeatures {
    fn from(f: FeaturesArg) -> Self {
        match f {
            FeaturesArg::Identity => NodeFeatures::Identity,
            FeaturesArg::Diffusion => NodeFeatures::Diffusion,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WnnArgs {
    /// Normalized Laplacian of the graph.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub factorization: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Labeled training nodes, comma separated; all others are test nodes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub train: Vec<usize>,
    #[arg(long, value_enum, default_value_t = FeaturesArg::Diffusion)]
    pub features: FeaturesArg,
    #[arg(long, default_value_t = wnn::DEFAULT_DIFFUSION_STEPS)]
    pub diffusion_steps: usize,
    /// Hidden layer widths, comma separated; none gives a single layer.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 256)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of one command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    /// Arguments after the program name, as typed.
    pub argv: Vec<String>,
    /// Directory the arguments were relative to.
    pub working_dir: PathBuf,
    pub seed: u64,
    pub params: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<PathBuf>,
    /// Headline results of the run.
    pub summary: serde_json::Value,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

/// What a command produced, before the manifest is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

fn write_output(outputs: &mut Vec<PathBuf>, path: PathBuf, contents: &str) -> Result<()> {
    write_file(&path, contents)?;
    outputs.push(path);
    Ok(())
}

pub fn manifest_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}.manifest.json"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<RunManifest>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let argv = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let cwd = std::env::current_dir().map_err(|e| Error::io(".", e))?;
    run(cli, argv, &cwd)
}

/// Runs a parsed command line; relative paths are taken from `working_dir`.
pub fn run(cli: Cli, argv: Vec<String>, working_dir: &Path) -> Result<RunManifest> {
    let mut command = cli.command;
    if let Command::Rerun(args) = &command {
        return rerun(&args.manifest, working_dir);
    }
    command.rebase(working_dir);
    let start = Instant::now();
    let (out_dir, outcome) = match &command {
        Command::Gen(a) => (&a.out, cmd_gen(a)?),
        Command::Factorize(a) => (&a.out, cmd_factorize(a, cli.seed)?),
        Command::Compare(a) => (&a.out, cmd_compare(a, cli.seed)?),
        Command::Wavelets(a) => (&a.out, cmd_wavelets(a)?),
        Command::Wnn(a) => (&a.out, cmd_wnn(a, cli.seed)?),
        Command::Rerun(_) => unreachable!("handled above"),
    };
    let inputs = outcome
        .inputs
        .iter()
        .map(|p| {
            Ok(InputRecord {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let params = serde_json::to_value(&command).expect("arguments serialize");
    let manifest = RunManifest {
        tool: format!("lmmf {}", env!("CARGO_PKG_VERSION")),
        command: command.name().to_string(),
        argv,
        working_dir: working_dir.to_path_buf(),
        seed: cli.seed,
        params,
        inputs,
        outputs: outcome.outputs,
        summary: outcome.summary,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path(out_dir, command.name()), &text)?;
    Ok(manifest)
}

/// Re-executes the run recorded in `manifest` after checking that its inputs
/// are unchanged.
pub fn rerun(manifest: &Path, working_dir: &Path) -> Result<RunManifest> {
    let manifest = if manifest.is_relative() {
        working_dir.join(manifest)
    } else {
        manifest.to_path_buf()
    };
    let recorded = RunManifest::load(&manifest)?;
    for input in &recorded.inputs {
        let now = sha256_file(&input.path)?;
        if now != input.sha256 {
            return Err(Error::Invariant(format!(
                "input {} changed since the recorded run",
                input.path.display()
            )));
        }
    }
    let args = std::iter::once("lmmf".to_string()).chain(recorded.argv.iter().cloned());
    let cli =
        Cli::try_parse_from(args).map_err(|e| Error::Schema(format!("recorded arguments: {e}")))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(Error::Schema("a manifest cannot record a rerun".into()));
    }
    run(cli, recorded.argv, &recorded.working_dir)
}

/// Entry point of the `lmmf` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = std::env::current_dir()
        .map_err(|e| Error::io(".", e))
        .and_then(|cwd| run(cli, argv, &cwd));
    match result {
        Ok(manifest) => {
            for p in &manifest.outputs {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_gen(args: &GenArgs) -> Result<Outcome> {
    let mut outputs = Vec::new();
    let (name, matrix) = match args.dataset {
        Dataset::Karate => {
            let g = karate_graph();
            write_edge_list(&g, args.out.join("karate.edges"))?;
            outputs.push(args.out.join("karate.edges"));
            write_labels(&karate_factions(), args.out.join("karate.labels"))?;
            outputs.push(args.out.join("karate.labels"));
            ("karate", normalized_laplacian(&g)?)
        }
        Dataset::Kronecker => ("kronecker", kronecker_matrix(KRONECKER_SEED, args.order)?),
        Dataset::Cayley => {
            let g = cayley_tree(args.z, args.depth)?;
            write_edge_list(&g, args.out.join("cayley.edges"))?;
            outputs.push(args.out.join("cayley.edges"));
            ("cayley", normalized_laplacian(&g)?)
        }
    };
    let path = args.out.join(format!("{name}.mtx"));
    write_matrix_market(&matrix, &path)?;
    outputs.insert(0, path);
    Ok(Outcome {
        inputs: Vec::new(),
        outputs,
        summary: json!({ "n": matrix.dim() }),
    })
}

fn resolve_levels(n: usize, c: usize, levels: Option<usize>, core_size: usize) -> Result<usize> {
    match levels {
        Some(l) => Ok(l),
        None => levels_for_core_size(n, c, core_size),
    }
}

fn frobenius_error(a: &SymMatrix, f: &Factorization) -> Result<f64> {
    Ok(objective(a, f)?.max(0.0).sqrt())
}

fn level_errors_csv(errors: &[f64]) -> String {
    let mut out = String::from("level,level_error,cumulative_error\n");
    let mut total = 0.0;
    for (l, e) in errors.iter().enumerate() {
        total += e;
        let _ = writeln!(out, "{},{},{}", l + 1, fmt_real(*e), fmt_real(total));
    }
    out
}

pub fn cmd_factorize(args: &FactorizeArgs, seed: u64) -> Result<Outcome> {
    let a = read_matrix_market(&args.matrix)?;
    let n = a.dim();
    let levels = resolve_levels(n, args.c, args.levels, args.core_size)?;
    let mut outputs = Vec::new();
    let f = match args.method {
        Method::Greedy => {
            if args.k.is_some_and(|k| k != 2) || args.c != 1 {
                return Err(Error::InvalidArgument(
                    "greedy MMF uses k = 2 and c = 1".into(),
                ));
            }
            greedy_mmf(&a, levels)?
        }
        Method::Learnable => {
            let mut mmf = MmfConfig::new(levels, args.k.unwrap_or(8), args.c);
            mmf.seed = seed;
            let outcome = rlpolicy::train(&a, &args.training.config(mmf))?;
            write_output(
                &mut outputs,
                args.out.join("trace.csv"),
                &rlpolicy::trace_csv(&outcome.trace),
            )?;
            write_output(
                &mut outputs,
                args.out.join("policy.json"),
                &rlpolicy::params_to_json(&outcome.params),
            )?;
            outcome.factorization
        }
    };
    let error = frobenius_error(&a, &f)?;
    write_output(
        &mut outputs,
        args.out.join("factorization.json"),
        &mmf::to_json(&f),
    )?;
    write_output(
        &mut outputs,
        args.out.join("errors.csv"),
        &level_errors_csv(&level_errors(&a, &f)?),
    )?;
    outputs.rotate_right(2);
    let summary = json!({
        "n": n,
        "levels": f.levels(),
        "k": f.k(),
        "c": f.c(),
        "core_size": f.final_active().len(),
        "frobenius_error": error,
    });
    Ok(Outcome {
        inputs: vec![args.matrix.clone()],
        outputs,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMethod {
    Learnable,
    Greedy,
    Nystrom,
}

impl CompareMethod {
    fn name(self) -> &'static str {
        match self {
            CompareMethod::Learnable => "learnable",
            CompareMethod::Greedy => "greedy",
            CompareMethod::Nystrom => "nystrom",
        }
    }
}

/// One aggregated row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub core_size: usize,
    pub method: CompareMethod,
    pub mean_error: f64,
    pub std_error: f64,
    pub seeds: usize,
}

/// Sample mean and standard deviation (zero for a single value).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed of the `index`-th learnable run.
pub fn learnable_run_seed(seed: u64, index: usize) -> u64 {
    seeding::stream(seed, &format!("compare/learnable/{index}")).next_u64()
}

/// Runs every (core size, method, seed) cell in parallel and aggregates them
/// in a fixed order.
pub fn compare(a: &SymMatrix, args: &CompareArgs, seed: u64) -> Result<Vec<CompareRow>> {
    let n = a.dim();
    if args.core_sizes.is_empty() || args.seeds == 0 || args.nystrom_seeds == 0 {
        return Err(Error::InvalidArgument(
            "need at least one core size and one seed per method".into(),
        ));
    }
    let mut cells = Vec::new();
    for &d in &args.core_sizes {
        levels_for_core_size(n, 1, d)?;
        cells.push((d, CompareMethod::Greedy, 0));
        cells.extend((0..args.seeds).map(|s| (d, CompareMethod::Learnable, s)));
        cells.extend((0..args.nystrom_seeds).map(|s| (d, CompareMethod::Nystrom, s)));
    }
    let errors = cells
        .par_iter()
        .map(|&(d, method, s)| {
            let levels = levels_for_core_size(n, 1, d)?;
            match method {
                CompareMethod::Greedy => frobenius_error(a, &greedy_mmf(a, levels)?),
                CompareMethod::Learnable => {
                    let mut mmf = MmfConfig::new(levels, args.k, 1);
                    mmf.seed = learnable_run_seed(seed, s);
                    Ok(rlpolicy::train(a, &args.training.config(mmf))?.error)
                }
                CompareMethod::Nystrom => {
                    let mut rng = seeding::stream(seed, &format!("compare/nystrom/{d}/{s}"));
                    Ok(nystrom(a, d, &mut rng)?.error)
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut rows = Vec::new();
    for &d in &args.core_sizes {
        for method in [
            CompareMethod::Learnable,
            CompareMethod::Greedy,
            CompareMethod::Nystrom,
        ] {
            let values: Vec<f64> = cells
                .iter()
                .zip(&errors)
                .filter(|((cd, cm, _), _)| *cd == d && *cm == method)
                .map(|(_, e)| *e)
                .collect();
            let (mean_error, std_error) = mean_std(&values);
            rows.push(CompareRow {
                core_size: d,
                method,
                mean_error,
                std_error,
                seeds: values.len(),
            });
        }
    }
    Ok(rows)
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("d_L,method,mean_error,std_error,seeds\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.core_size,
            r.method.name(),
            fmt_real(r.mean_error),
            fmt_real(r.std_error),
            r.seeds
        );
    }
    out
}

pub fn cmd_compare(args: &CompareArgs, seed: u64) -> Result<Outcome> {
    let a = read_matrix_market(&args.matrix)?;
    let rows = compare(&a, args, seed)?;
    let mut outputs = Vec::new();
    write_output(
        &mut outputs,
        args.out.join("compare.csv"),
        &compare_csv(&rows),
    )?;
    let summary = rows
        .iter()
        .map(|r| json!({ "d_L": r.core_size, "method": r.method, "mean_error": r.mean_error }))
        .collect::<Vec<_>>();
    Ok(Outcome {
        inputs: vec![args.matrix.clone()],
        outputs,
        summary: json!(summary),
    })
}

pub fn cmd_wavelets(args: &WaveletsArgs) -> Result<Outcome> {
    let a = read_matrix_market(&args.matrix)?;
    let f = mmf::load(&args.factorization)?;
    let basis = wavelets::extract_basis(&a, &f, args.mode.into())?;
    let (matrix_path, labels_path) = (
        args.out.join("basis.mtx"),
        args.out.join("basis_labels.json"),
    );
    wavelets::export(&basis, &matrix_path, &labels_path)?;
    let orthogonality_error = basis.orthogonality_error();
    let report = json!({
        "n": basis.n(),
        "mode": basis.mode(),
        "mother_count": basis.mother_count(),
        "father_count": basis.father_count(),
        "orthogonality_error": orthogonality_error,
        "orthogonality_pass": orthogonality_error <= ORTHOGONALITY_TOL,
        "sparsity": basis.sparsity(SPARSITY_TOL),
    });
    let mut outputs = vec![matrix_path, labels_path];
    let report_text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_output(
        &mut outputs,
        args.out.join("wavelet_report.json"),
        &report_text,
    )?;
    Ok(Outcome {
        inputs: vec![args.matrix.clone(), args.factorization.clone()],
        outputs,
        summary: report,
    })
}

pub fn cmd_wnn(args: &WnnArgs, seed: u64) -> Result<Outcome> {
    let a = read_matrix_market(&args.matrix)?;
    let f = mmf::load(&args.factorization)?;
    let n = a.dim();
    let labels = read_labels(&args.labels, n)?;
    let basis = wavelets::extract_basis(&a, &f, BasisMode::Orthonormal)?;
    let features = wnn::node_features(&a, args.features.into(), args.diffusion_steps);
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut dims = vec![features.ncols()];
    dims.extend_from_slice(&args.hidden);
    dims.push(classes);
    let model = WnnModel::initialized(basis, &dims, &mut seeding::stream(seed, "wnn-init"))?;
    let split = Split::complement(n, args.train.clone())?;
    let adam = AdamConfig {
        lr: args.lr,
        ..AdamConfig::default()
    };
    let (trained, trace) = wnn::train(&model, &features, &labels, &split, args.epochs, &adam)?;
    let mut outputs = Vec::new();
    write_output(
        &mut outputs,
        args.out.join("metrics.csv"),
        &wnn::metrics_csv(&trace),
    )?;
    write_output(
        &mut outputs,
        args.out.join("weights.json"),
        &wnn::weights_to_json(&trained),
    )?;
    let last = trace.last();
    let summary = json!({
        "epochs": trace.len(),
        "final_loss": last.map(|r| r.loss),
        "test_accuracy": last.map(|r| r.accuracy),
        "train_nodes": split.train,
    });
    Ok(Outcome {
        inputs: vec![
            args.matrix.clone(),
            args.factorization.clone(),
            args.labels.clone(),
        ],
        outputs,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn level_error_csv_accumulates() {
        let csv = level_errors_csv(&[0.5, 0.25]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "level,level_error,cumulative_error");
        assert!(lines[2].starts_with("2,2.5"));
        assert!(lines[2].ends_with(&fmt_real(0.75)));
    }

    #[test]
    fn cli_parses_aliases_and_lists() {
        let cli = Cli::try_parse_from([
            "lmmf",
            "--seed",
            "3",
            "factorize",
            "--matrix",
            "m.mtx",
            "--method",
            "greedy",
            "--K",
            "2",
            "--L",
            "26",
            "--out",
            "o",
        ])
        .unwrap();
        assert_eq!(cli.seed, 3);
        let Command::Factorize(args) = cli.command else {
            panic!("wrong command")
        };
        assert_eq!((args.k, args.levels, args.c), (Some(2), Some(26), 1));

        let cli = Cli::try_parse_from([
            "lmmf",
            "compare",
            "--matrix",
            "m",
            "--core-sizes",
            "6,8",
            "--out",
            "o",
        ])
        .unwrap();
        let Command::Compare(args) = cli.command else {
            panic!("wrong command")
        };
        assert_eq!(args.core_sizes, vec![6, 8]);
        assert!(Cli::try_parse_from(["lmmf", "gen", "mystery", "--out", "o"]).is_err());
    }

    #[test]
    fn rebase_only_touches_relative_paths() {
        let mut cmd = Command::Wavelets(WaveletsArgs {
            matrix: PathBuf::from("a.mtx"),
            factorization: PathBuf::from("/abs/f.json"),
            mode: ModeArg::Orthonormal,
            out: PathBuf::from("out"),
        });
        cmd.rebase(Path::new("/base"));
        let Command::Wavelets(a) = cmd else {
            unreachable!()
        };
        assert_eq!(a.matrix, PathBuf::from("/base/a.mtx"));
        assert_eq!(a.factorization, PathBuf::from("/abs/f.json"));
        assert_eq!(a.out, PathBuf::from("/base/out"));
    }

    #[test]
    fn sha256_of_known_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
