//! `iriskit`: batch front end for the iris pipeline.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, configuration or input files. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Inputs were valid but the work failed. Exit code 2.
    #[error("{0}")]
    Processing(String),
}

impl From<iriskit_core::io::IoError> for CliError {
    fn from(e: iriskit_core::io::IoError) -> Self {
        use iriskit_core::io::IoError;
        match e {
            IoError::Io { ref source, .. } if source.kind() != std::io::ErrorKind::NotFound => {
                Self::Processing(e.to_string())
            }
            _ => Self::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "iriskit", version, about = "Iris recognition pipeline: segmentation geometry, encoding, matching and evaluation")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one configuration key (repeatable), e.g. `--set max_shift=8`.
    #[arg(short, long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Log more detail to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit pupil and iris circles to segmentation masks.
    FitCircles(FitCirclesArgs),
    /// Preprocess images, gate them on circle quality and unwrap them to polar form.
    Normalize(NormalizeArgs),
    /// Build templates from polar images, external embeddings or crypt masks.
    Encode(EncodeArgs),
    /// Copy manifest templates into a gallery directory.
    Enroll(EnrollArgs),
    /// 1:N search of probe templates against a gallery.
    Search(SearchArgs),
    /// 1:1 comparisons for a list of template pairs.
    Verify(VerifyArgs),
    /// Metrics report from score files.
    Eval(EvalArgs),
    /// Agreement statistics between two score files.
    Parity(ParityArgs),
    /// EMD comparisons for a list of crypt-mask pairs.
    CryptsMatch(CryptsMatchArgs),
}

#[derive(Debug, Args)]
pub struct FitCirclesArgs {
    /// Segmentation masks (PGM or PNG); the image id is the file stem.
    #[arg(required = true)]
    pub masks: Vec<PathBuf>,
    /// Output circles CSV.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Eye images (PGM or PNG); the image id is the file stem.
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Circles CSV in the raw image frame.
    #[arg(long)]
    pub circles: PathBuf,
    /// Directory holding `<image id>.pgm` or `<image id>.png` occlusion masks.
    #[arg(long)]
    pub mask_dir: Option<PathBuf>,
    /// Output directory for `<id>.polar.pgm`, `<id>.polarmask.pgm` and `rejected.csv`.
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Directory of `<id>.polar.pgm` / `<id>.polarmask.pgm` pairs to encode with HDBIF.
    #[arg(long, group = "source")]
    pub polar_dir: Option<PathBuf>,
    /// Embedding CSV (`image_id,eye,v1..vd`) to wrap as templates.
    #[arg(long, group = "source")]
    pub embeddings: Option<PathBuf>,
    /// Crypt masks (PGM or PNG) to wrap as templates.
    #[arg(long, group = "source", num_args = 1..)]
    pub crypt_masks: Vec<PathBuf>,
    /// CSV `image_id,eye` assigning eye labels; others get the `eye` setting.
    #[arg(long)]
    pub eyes: Option<PathBuf>,
    /// Also write the `.irxw` wire form next to each `.irxt`.
    #[arg(long)]
    pub wire: bool,
    /// Output directory for `<id>.irxt`.
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnrollArgs {
    /// Manifest CSV `identity_id,eye,template_path`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Gallery directory to create.
    #[arg(short, long)]
    pub gallery: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Probe manifest `probe_id,eye,template_path`; rows sharing a probe id form one probe.
    #[arg(long)]
    pub probes: PathBuf,
    /// Gallery directory written by `enroll`.
    #[arg(short, long)]
    pub gallery: PathBuf,
    /// Output candidate CSV.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Optional timing report JSON.
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Matcher name (overrides `matcher`).
    #[arg(long)]
    pub matcher: Option<String>,
    /// Candidate list length (overrides `candidate_list_length`).
    #[arg(long)]
    pub candidates: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Pair list CSV `probe_id,gallery_id,genuine`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Directory holding `<id>.irxt` for every id in the pair list.
    #[arg(long)]
    pub templates: PathBuf,
    /// Output score CSV.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Matcher name (overrides `matcher`).
    #[arg(long)]
    pub matcher: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score CSVs `method_id,probe_id,gallery_id,genuine,score`.
    #[arg(required = true)]
    pub scores: Vec<PathBuf>,
    /// discard, failure-as-nonmatch or intersection (overrides `protocol`).
    #[arg(long)]
    pub protocol: Option<String>,
    /// Candidate CSV for rank metrics; otherwise ranks come from the scores.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Output report JSON.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Optional aligned text table.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParityArgs {
    /// Score CSV of the implementation under test.
    pub a: PathBuf,
    /// Score CSV of the reference implementation.
    pub b: PathBuf,
    /// Output parity JSON.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Optional score-difference histogram CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CryptsMatchArgs {
    /// Pair list CSV `probe_id,gallery_id,genuine`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Directory holding `<id>.pgm` or `<id>.png` crypt masks.
    #[arg(long)]
    pub masks: PathBuf,
    /// Output score CSV.
    #[arg(short, long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cwd = PathBuf::from(".");
    for a in &cli.set {
        cfg.assign(a, &cwd).map_err(CliError::Validation)?;
    }
    match cli.command {
        Command::FitCircles(a) => commands::fit_circles(&cfg, &a),
        Command::Normalize(a) => commands::normalize(&cfg, &a),
        Command::Encode(a) => commands::encode(&cfg, &a),
        Command::Enroll(a) => commands::enroll(&cfg, &a),
        Command::Search(a) => commands::search(&mut cfg, &a),
        Command::Verify(a) => commands::verify(&mut cfg, &a),
        Command::Eval(a) => commands::eval(&mut cfg, &a),
        Command::Parity(a) => commands::parity(&cfg, &a),
        Command::CryptsMatch(a) => commands::crypts_match(&cfg, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Validation(_) => 1,
                CliError::Processing(_) => 2,
            })
        }
    }
}
