//! Command-line front end: calibrate, extract, dist, classify, mean, synth.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kshs::eval::{ncc_loo, one_nn_loo};
use kshs::frechet::{frechet_mean, FrechetConfig};
use kshs::io::binary::{load_calibration, save_calibration, save_descriptor};
use kshs::io::export::{load_descriptor_set, write_distance_csv, write_report};
use kshs::io::manifest::DatasetManifest;
use kshs::metric::pairwise_distances;
use kshs::pipeline::{calibrate_manifest, extract_manifest, worker_pool, write_descriptor_dir, CalibrationOptions};
use kshs::subspace::{SubspaceParams, SupportStrategy};
use kshs::synth::{generate_synthetic_corpus, SynthConfig};
use kshs::{KshsError, Result};

#[derive(Parser)]
#[command(name = "kshs", version, about = "Kernel scattering-histogram subspace descriptors for dynamic textures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate histogram bin edges on a strided frame sample.
    Calibrate(CalibrateArgs),
    /// Compute one descriptor file per manifest entry.
    Extract(ExtractArgs),
    /// Pairwise Nuclear distances as CSV.
    Dist(DistArgs),
    /// Leave-one-out 1-NN or nearest-class-center evaluation.
    Classify(ClassifyArgs),
    /// Fréchet mean of all descriptors with one label.
    Mean(MeanArgs),
    /// Write the seeded synthetic corpus and its manifest.
    Synth(SynthArgs),
}

/// Scattering normalization choice; absent means the default (calibrate)
/// or whatever the edges file records (extract).
#[derive(Args)]
#[group(multiple = false)]
struct Normalization {
    /// Normalized scattering (order 1 by frame mean, order 2 by parent).
    #[arg(long)]
    normalized: bool,
    /// Plain scattering coefficients.
    #[arg(long)]
    raw: bool,
}

impl Normalization {
    fn choice(&self) -> Option<bool> {
        match (self.normalized, self.raw) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 0.99)]
    quantile: f64,
    /// Every n-th frame of each video enters the calibration sample.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long, default_value_t = 4)]
    scales: usize,
    #[arg(long, default_value_t = 4)]
    orientations: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[command(flatten)]
    normalization: Normalization,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    UniformStride,
    Kmedoids,
    Centroids,
}

impl From<Strategy> for SupportStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::UniformStride => SupportStrategy::UniformStride,
            Strategy::Kmedoids => SupportStrategy::KMedoids,
            Strategy::Centroids => SupportStrategy::Centroids,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    edges: PathBuf,
    #[arg(long, default_value_t = 5)]
    dim: usize,
    #[arg(long, default_value_t = 15)]
    support: usize,
    #[arg(long, value_enum, default_value_t = Strategy::UniformStride)]
    strategy: Strategy,
    #[command(flatten)]
    normalization: Normalization,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long)]
    descriptors: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "1nn")]
    OneNn,
    Ncc,
}

#[derive(Args)]
struct MeanOptions {
    /// Centroid count of the Fréchet mean support.
    #[arg(long, default_value_t = 15)]
    support_mean: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

impl MeanOptions {
    fn config(&self) -> FrechetConfig {
        FrechetConfig {
            support: self.support_mean,
            seed: self.seed,
            max_iter: self.max_iter,
            ..FrechetConfig::default()
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    descriptors: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    #[command(flatten)]
    mean: MeanOptions,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MeanArgs {
    #[arg(long)]
    descriptors: PathBuf,
    #[arg(long)]
    label: String,
    #[command(flatten)]
    mean: MeanOptions,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 10)]
    videos_per_class: usize,
    #[arg(long, default_value_t = 40)]
    frames: usize,
    #[arg(long, default_value_t = 128)]
    size: usize,
}

fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let options = CalibrationOptions {
        scales: args.scales,
        orientations: args.orientations,
        depth: args.depth,
        normalized: args.normalization.choice().unwrap_or(true),
        n_bins: args.bins,
        quantile: args.quantile,
        stride: args.stride,
    };
    let calibration = calibrate_manifest(&manifest, &options)?;
    save_calibration(&args.out, &calibration)?;
    eprintln!(
        "calibrated {} subbands x {} bins, fingerprint {}",
        calibration.edges.n_bands(),
        calibration.n_bins(),
        calibration.fingerprint()
    );
    Ok(())
}

fn extract(args: &ExtractArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let calibration = load_calibration(&args.edges)?;
    if let Some(normalized) = args.normalization.choice() {
        if normalized != calibration.normalized {
            return Err(KshsError::InvalidArgument(format!(
                "edges were calibrated with normalized={}, extract requested normalized={normalized}",
                calibration.normalized
            )));
        }
    }
    let params = SubspaceParams {
        dim: args.dim,
        support: args.support,
        strategy: args.strategy.into(),
    };
    let extracted = extract_manifest(&manifest, &calibration, &params)?;
    write_descriptor_dir(&args.out, &calibration, &extracted)?;
    eprintln!("wrote {} descriptors to {}", extracted.len(), args.out.display());
    Ok(())
}

fn dist(args: &DistArgs) -> Result<()> {
    let set = load_descriptor_set(&args.descriptors)?;
    let distances = pairwise_distances(set.descriptors())?
        .with_ids(set.ids().to_vec())?
        .with_labels(set.labels().to_vec())?;
    write_distance_csv(&args.out, &distances)
}

fn classify(args: &ClassifyArgs) -> Result<()> {
    let set = load_descriptor_set(&args.descriptors)?;
    let report = match args.mode {
        Mode::OneNn => one_nn_loo(&set)?,
        Mode::Ncc => ncc_loo(&set, &args.mean.config())?,
    };
    write_report(&args.out, &report)?;
    print!("{}", report.to_table());
    Ok(())
}

fn mean(args: &MeanArgs) -> Result<()> {
    let set = load_descriptor_set(&args.descriptors)?;
    let members: Vec<_> = set
        .class_members(&args.label)
        .ok_or_else(|| KshsError::InvalidArgument(format!("no descriptors labelled {:?}", args.label)))?
        .iter()
        .map(|&i| set.descriptors()[i].clone())
        .collect();
    let result = frechet_mean(&members, &args.mean.config())?;
    save_descriptor(&args.out, &result.mean)?;
    eprintln!(
        "mean of {} descriptors: loss {:.6e} after {} iterations (converged: {})",
        members.len(),
        result.loss_trace.last().copied().unwrap_or(f64::NAN),
        result.iterations,
        result.converged
    );
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        classes: args.classes,
        videos_per_class: args.videos_per_class,
        frames: args.frames,
        size: (args.size, args.size),
        seed: args.seed,
    };
    let manifest = generate_synthetic_corpus(&args.out, &config)?;
    eprintln!(
        "wrote {} videos to {}",
        manifest.entries.len(),
        args.out.join("manifest.json").display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    worker_pool()?.install(|| match &cli.command {
        Command::Calibrate(a) => calibrate(a),
        Command::Extract(a) => extract(a),
        Command::Dist(a) => dist(a),
        Command::Classify(a) => classify(a),
        Command::Mean(a) => mean(a),
        Command::Synth(a) => synth(a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
