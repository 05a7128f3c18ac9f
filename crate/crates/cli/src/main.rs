mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Exit statuses.
const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "invpat",
    version,
    about = "Inverse-pattern classifier, predictor and image tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a model file from training data.
    Train(TrainArgs),
    /// Classify inputs against a numeric or categorical model.
    Classify(ClassifyArgs),
    /// Predict a parameter for each input row.
    Predict(PredictArgs),
    /// Label image pixels from teacher areas.
    Segment(SegmentArgs),
    /// Learn objects from difference images and find them in frames.
    Detect(DetectArgs),
    /// Measure classification latency against posting-list height.
    Bench(BenchArgs),
    /// Train and evaluate remaining-life prediction on the turbofan data.
    Cmapss(CmapssArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum TrainMode {
    /// Integer feature rows, one class per unmatched row.
    Numeric,
    /// Lines of present category indices (1-based).
    Categorical,
    /// Feature rows with a parameter column, for `predict`.
    Predict,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RadiusArgs {
    /// Generalization radius in feature units.
    #[arg(long = "r", conflicts_with = "r_pct")]
    r: Option<u32>,
    /// Generalization radius as a percentage of the feature range.
    #[arg(long = "r-pct")]
    r_pct: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum, default_value = "numeric")]
    mode: TrainMode,
    /// Training data file.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the model file.
    #[arg(long)]
    model: PathBuf,
    /// Column roles and bounds (TOML). Without it, numeric rows must already be integers in [0, X).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Expected number of features.
    #[arg(long)]
    k: Option<usize>,
    /// Feature range; for categorical mode, the category count.
    #[arg(long)]
    x: Option<u32>,
    #[command(flatten)]
    radius: RadiusArgs,
    /// Recognition threshold for categorical training.
    #[arg(long, default_value_t = 1)]
    threshold: u32,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    /// Override the model's radius for this run (numeric models).
    #[command(flatten)]
    radius: RadiusArgs,
    /// Directory receiving one histogram file per input.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Rows laid out like the training file; the parameter column is ignored.
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving one histogram file per input.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SegmentArgs {
    /// Binary PPM/PGM image. Without it a synthetic three-region scene is generated.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Teacher areas (TOML `[[area]]` tables with x, y, width, height, label).
    #[arg(long, required_unless_present = "synthetic")]
    areas: Option<PathBuf>,
    /// Side length of the synthetic scene.
    #[arg(long, conflicts_with = "image")]
    synthetic: Option<u32>,
    /// Noise standard deviation of the synthetic scene.
    #[arg(long, default_value_t = 8.0)]
    sigma: f64,
    /// Side of each synthetic teacher area.
    #[arg(long, default_value_t = 40)]
    area_size: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    radius: RadiusArgs,
    /// Rendered label map (PPM).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DetectArgs {
    /// Background frame.
    #[arg(long, required_unless_present = "synthetic")]
    background: Option<PathBuf>,
    /// Training frame and its label, as PATH=LABEL. Repeatable.
    #[arg(long = "train", value_name = "PATH=LABEL")]
    train: Vec<String>,
    /// Frame to search. Repeatable.
    #[arg(long = "query")]
    query: Vec<PathBuf>,
    /// Generate a textured background, train one shape, and query both frames.
    #[arg(long, conflicts_with = "background")]
    synthetic: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    radius: RadiusArgs,
    /// Side of the averaging window of the difference image.
    #[arg(long, default_value_t = 3)]
    window: u32,
    /// Mean per-sample difference a pixel must exceed to count as changed.
    #[arg(long, default_value_t = 12)]
    diff_threshold: u32,
    /// Background pixels a class may win before it is masked.
    #[arg(long, default_value_t = 5)]
    freq_threshold: u64,
    /// Chebyshev distance joining pixels into one cluster.
    #[arg(long, default_value_t = 1)]
    cluster_dist: u32,
    /// Votes a pixel class needs to enter a cluster's meta-pattern.
    #[arg(long, default_value_t = invpat::levels::DEFAULT_META_THRESHOLD)]
    meta_threshold: u32,
    /// Recognition threshold of the object level.
    #[arg(long, default_value_t = 2)]
    threshold: u32,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    /// Class counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 26)]
    k: usize,
    #[arg(long, default_value_t = 256)]
    x: u32,
    #[command(flatten)]
    radius: RadiusArgs,
    #[arg(long, default_value_t = 2000)]
    queries: usize,
    /// Timed passes per size; the median is reported.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    layout: Layout,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Layout {
    Uniform,
    Spread,
}

#[derive(Args, Debug, Serialize)]
struct CmapssArgs {
    /// Directory holding the data files; defaults to $INVPAT_DATA_DIR.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "FD001")]
    subset: String,
    #[arg(long, default_value_t = 256)]
    x: u32,
}

/// A problem with how the program was invoked.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Malformed input outside the library's own error types.
#[derive(Debug)]
struct DataError(String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<DataError>() || cause.is::<std::io::Error>() {
            return EXIT_DATA;
        }
        if let Some(e) = cause.downcast_ref::<invpat::Error>() {
            return if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            };
        }
    }
    EXIT_INTERNAL
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| commands::run(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
