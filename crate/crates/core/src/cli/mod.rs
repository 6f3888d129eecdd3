//! Command-line front end.
//!
//! Every option can also come from a TOML config file (`--config`), in a
//! table named after the subcommand with the flag names as keys (dashes
//! become underscores). Flags win over file values; unknown keys are errors.
//!
//! Exit statuses: 0 success, 1 usage error, 2 data/validation error,
//! 3 numeric/training failure.

mod execute;

use std::ffi::OsString;
use std::fmt::Debug;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::ann::{NetworkConfig, NetworkKind};
use crate::error::Error;
use crate::evaluation::DEFAULT_BIN_COUNT;
use crate::harness::{RmseScope, SweepGrid};
use crate::pipeline::LinkBudget;
use crate::synthetic::SyntheticParams;

pub use execute::execute;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CHANPRED_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(e) if e.is_numeric() => EXIT_NUMERIC,
            CliError::Run(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "chanpred",
    version,
    about = "Predict path loss and shadow fading at unmeasured positions"
)]
pub struct Cli {
    /// TOML file supplying option values; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic path-loss trace (and optionally transfer functions)
    Synth(SynthArgs),
    /// Convert transfer functions into smoothed path loss and LSF
    Pipeline(PipelineArgs),
    /// Train one network and predict the withheld points of a trace
    Predict(PredictArgs),
    /// Run a grid of predictions over kinds, neuron counts, q and seeds
    Sweep(SweepArgs),
    /// Build comparison tables and plot data from a sweep directory
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthArgs {
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Number of samples
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample spacing in meters
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Distance of the first sample in meters
    #[arg(long)]
    pub start: Option<f64>,
    /// Carrier frequency in Hz
    #[arg(long)]
    pub carrier: Option<f64>,
    #[arg(long)]
    pub intercept: Option<f64>,
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Shadowing standard deviation in dB
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Shadowing decorrelation distance in meters
    #[arg(long)]
    pub decorrelation: Option<f64>,
    /// Rayleigh per-tone fading in generated transfer functions
    #[arg(long, action = ArgAction::Set)]
    pub ssf: Option<bool>,
    #[arg(long)]
    pub n_f: Option<usize>,
    #[arg(long)]
    pub pt: Option<f64>,
    #[arg(long)]
    pub gtx: Option<f64>,
    #[arg(long)]
    pub grx: Option<f64>,
    /// Also write transfer_functions.csv
    #[arg(long, action = ArgAction::Set)]
    pub transfer_functions: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineArgs {
    /// Transfer-function file
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub carrier: Option<f64>,
    #[arg(long)]
    pub pt: Option<f64>,
    #[arg(long)]
    pub gtx: Option<f64>,
    #[arg(long)]
    pub grx: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingArgs {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub error_threshold: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// predicted_only or all_points
    #[arg(long)]
    pub rmse_scope: Option<String>,
    /// Apply the 40-wavelength sliding average before training
    #[arg(long, action = ArgAction::Set)]
    pub smooth: Option<bool>,
    /// Carrier frequency of the trace in Hz
    #[arg(long)]
    pub carrier: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictArgs {
    /// Trace file
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// bpn, elm or rbf
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub neurons: Option<usize>,
    /// Predicted points between adjacent training points
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub neurons: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Single seed; shorthand for --seeds N
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    /// Sweep output directory
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
}

/// Config-file layout: one table per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub synth: SynthArgs,
    #[serde(default)]
    pub pipeline: PipelineArgs,
    #[serde(default)]
    pub predict: PredictArgs,
    #[serde(default)]
    pub sweep: SweepArgs,
    #[serde(default)]
    pub report: ReportArgs,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Synth,
    Pipeline,
    Predict,
    Sweep,
    Report,
}

/// Fully resolved configuration; written as the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub synth: Option<SyntheticParams>,
    pub write_transfer_functions: bool,
    pub carrier_hz: f64,
    pub link: LinkBudget,
    pub network: Option<NetworkConfig>,
    pub q: Option<usize>,
    pub grid: Option<SweepGrid>,
    pub rmse_scope: RmseScope,
    pub smooth: bool,
    pub bin_count: usize,
}

/// Flag value if given, else the file value. Disagreements are logged.
fn pick<T: PartialEq + Clone + Debug>(name: &str, flag: &Option<T>, file: &Option<T>) -> Option<T> {
    if let (Some(f), Some(c)) = (flag, file) {
        if f != c {
            log::warn!("--{name} {f:?} overrides config value {c:?}");
        }
    }
    flag.clone().or_else(|| file.clone())
}

fn output_dir(flag: &Option<PathBuf>, file: &Option<PathBuf>) -> PathBuf {
    pick("output-dir", flag, file)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}

fn required_input(flag: &Option<PathBuf>, file: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    match pick("input", flag, file) {
        Some(p) if !p.as_os_str().is_empty() => Ok(p),
        _ => Err(CliError::Usage("missing required --input path".into())),
    }
}

fn usage<T>(r: crate::error::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

fn link(pt: Option<f64>, gtx: Option<f64>, grx: Option<f64>) -> Result<LinkBudget, CliError> {
    let d = LinkBudget::default();
    usage(LinkBudget::new(
        pt.unwrap_or(d.p_t_dbm),
        gtx.unwrap_or(d.g_tx_db),
        grx.unwrap_or(d.g_rx_db),
    ))
}

struct Training {
    learning_rate: f64,
    error_threshold: f64,
    max_iterations: usize,
    scope: RmseScope,
    smooth: bool,
    carrier_hz: f64,
}

fn training(flag: &TrainingArgs, file: &TrainingArgs) -> Result<Training, CliError> {
    let scope = match pick("rmse-scope", &flag.rmse_scope, &file.rmse_scope) {
        Some(s) => usage(s.parse())?,
        None => RmseScope::default(),
    };
    Ok(Training {
        learning_rate: pick("learning-rate", &flag.learning_rate, &file.learning_rate)
            .unwrap_or(NetworkConfig::DEFAULT_LEARNING_RATE),
        error_threshold: pick(
            "error-threshold",
            &flag.error_threshold,
            &file.error_threshold,
        )
        .unwrap_or(NetworkConfig::DEFAULT_ERROR_THRESHOLD),
        max_iterations: pick("max-iterations", &flag.max_iterations, &file.max_iterations)
            .unwrap_or(NetworkConfig::DEFAULT_MAX_ITERATIONS),
        scope,
        smooth: pick("smooth", &flag.smooth, &file.smooth).unwrap_or(true),
        carrier_hz: pick("carrier", &flag.carrier, &file.carrier)
            .unwrap_or(SyntheticParams::default().carrier_hz),
    })
}

fn base(command: CommandKind, output_dir: PathBuf) -> RunConfig {
    RunConfig {
        command,
        input_path: None,
        output_dir,
        synth: None,
        write_transfer_functions: false,
        carrier_hz: SyntheticParams::default().carrier_hz,
        link: LinkBudget::default(),
        network: None,
        q: None,
        grid: None,
        rmse_scope: RmseScope::default(),
        smooth: true,
        bin_count: DEFAULT_BIN_COUNT,
    }
}

fn resolve_synth(a: &SynthArgs, f: &SynthArgs) -> Result<RunConfig, CliError> {
    let d = SyntheticParams::default();
    let p = SyntheticParams {
        n_points: pick("n", &a.n, &f.n).unwrap_or(d.n_points),
        spacing_m: pick("spacing", &a.spacing, &f.spacing).unwrap_or(d.spacing_m),
        start_m: pick("start", &a.start, &f.start).unwrap_or(d.start_m),
        carrier_hz: pick("carrier", &a.carrier, &f.carrier).unwrap_or(d.carrier_hz),
        intercept_db: pick("intercept", &a.intercept, &f.intercept).unwrap_or(d.intercept_db),
        exponent: pick("exponent", &a.exponent, &f.exponent).unwrap_or(d.exponent),
        shadow_sigma_db: pick("sigma", &a.sigma, &f.sigma).unwrap_or(d.shadow_sigma_db),
        decorrelation_m: pick("decorrelation", &a.decorrelation, &f.decorrelation)
            .unwrap_or(d.decorrelation_m),
        ssf_enabled: pick("ssf", &a.ssf, &f.ssf).unwrap_or(d.ssf_enabled),
        n_f: pick("n-f", &a.n_f, &f.n_f).unwrap_or(d.n_f),
        link: link(
            pick("pt", &a.pt, &f.pt),
            pick("gtx", &a.gtx, &f.gtx),
            pick("grx", &a.grx, &f.grx),
        )?,
        seed: pick("seed", &a.seed, &f.seed).unwrap_or(d.seed),
    };
    usage(p.validate())?;
    let mut cfg = base(CommandKind::Synth, output_dir(&a.output_dir, &f.output_dir));
    cfg.carrier_hz = p.carrier_hz;
    cfg.link = p.link;
    cfg.write_transfer_functions = pick(
        "transfer-functions",
        &a.transfer_functions,
        &f.transfer_functions,
    )
    .unwrap_or(false);
    cfg.synth = Some(p);
    Ok(cfg)
}

fn resolve_pipeline(a: &PipelineArgs, f: &PipelineArgs) -> Result<RunConfig, CliError> {
    let mut cfg = base(
        CommandKind::Pipeline,
        output_dir(&a.output_dir, &f.output_dir),
    );
    cfg.input_path = Some(required_input(&a.input, &f.input)?);
    cfg.carrier_hz = pick("carrier", &a.carrier, &f.carrier).unwrap_or(cfg.carrier_hz);
    if !(cfg.carrier_hz.is_finite() && cfg.carrier_hz > 0.0) {
        return Err(CliError::Usage("--carrier must be positive".into()));
    }
    cfg.link = link(
        pick("pt", &a.pt, &f.pt),
        pick("gtx", &a.gtx, &f.gtx),
        pick("grx", &a.grx, &f.grx),
    )?;
    Ok(cfg)
}

fn resolve_predict(a: &PredictArgs, f: &PredictArgs) -> Result<RunConfig, CliError> {
    let t = training(&a.training, &f.training)?;
    let kind: NetworkKind = match pick("kind", &a.kind, &f.kind) {
        Some(k) => usage(k.parse())?,
        None => NetworkKind::Bpn,
    };
    let network = NetworkConfig {
        kind,
        hidden_neurons: pick("neurons", &a.neurons, &f.neurons).unwrap_or(10),
        learning_rate: t.learning_rate,
        error_threshold: t.error_threshold,
        max_iterations: t.max_iterations,
        seed: pick("seed", &a.seed, &f.seed).unwrap_or(0),
    };
    usage(network.validate())?;
    let mut cfg = base(
        CommandKind::Predict,
        output_dir(&a.output_dir, &f.output_dir),
    );
    cfg.input_path = Some(required_input(&a.input, &f.input)?);
    cfg.network = Some(network);
    cfg.q = Some(pick("q", &a.q, &f.q).unwrap_or(6));
    cfg.rmse_scope = t.scope;
    cfg.smooth = t.smooth;
    cfg.carrier_hz = t.carrier_hz;
    Ok(cfg)
}

fn resolve_sweep(a: &SweepArgs, f: &SweepArgs) -> Result<RunConfig, CliError> {
    let t = training(&a.training, &f.training)?;
    let reference = SweepGrid::reference(vec![0]);
    let kinds = match pick("kinds", &a.kinds, &f.kinds) {
        Some(ks) => usage(ks.iter().map(|k| k.parse()).collect())?,
        None => reference.kinds.clone(),
    };
    let seeds = match (
        pick("seeds", &a.seeds, &f.seeds),
        pick("seed", &a.seed, &f.seed),
    ) {
        (Some(s), _) => s,
        (None, Some(s)) => vec![s],
        (None, None) => vec![0],
    };
    let grid = SweepGrid {
        kinds,
        neuron_counts: pick("neurons", &a.neurons, &f.neurons).unwrap_or(reference.neuron_counts),
        q_values: pick("q", &a.q, &f.q).unwrap_or(reference.q_values),
        seeds,
    };
    usage(grid.validate())?;
    let probe = NetworkConfig {
        learning_rate: t.learning_rate,
        error_threshold: t.error_threshold,
        max_iterations: t.max_iterations,
        ..NetworkConfig::new(NetworkKind::Bpn, 1)
    };
    usage(probe.validate())?;
    let mut cfg = base(CommandKind::Sweep, output_dir(&a.output_dir, &f.output_dir));
    cfg.input_path = Some(required_input(&a.input, &f.input)?);
    cfg.network = Some(probe);
    cfg.grid = Some(grid);
    cfg.rmse_scope = t.scope;
    cfg.smooth = t.smooth;
    cfg.carrier_hz = t.carrier_hz;
    Ok(cfg)
}

fn resolve_report(a: &ReportArgs, f: &ReportArgs) -> Result<RunConfig, CliError> {
    let input = required_input(&a.input, &f.input)?;
    let mut cfg = base(
        CommandKind::Report,
        output_dir(&a.output_dir, &f.output_dir),
    );
    if a.output_dir.is_none() && f.output_dir.is_none() {
        cfg.output_dir = input.clone();
    }
    cfg.input_path = Some(input);
    cfg.bin_count = pick("bins", &a.bins, &f.bins).unwrap_or(DEFAULT_BIN_COUNT);
    if cfg.bin_count == 0 {
        return Err(CliError::Usage("--bins must be positive".into()));
    }
    Ok(cfg)
}

/// Resolves parsed flags against an optional config file text.
pub fn resolve(cli: &Cli, file: Option<&str>) -> Result<RunConfig, CliError> {
    let file = match file {
        Some(text) => FileConfig::parse(text)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Synth(a) => resolve_synth(a, &file.synth),
        Command::Pipeline(a) => resolve_pipeline(a, &file.pipeline),
        Command::Predict(a) => resolve_predict(a, &file.predict),
        Command::Sweep(a) => resolve_sweep(a, &file.sweep),
        Command::Report(a) => resolve_report(a, &file.report),
    }
}

/// Parses command-line arguments, reading the `--config` file if given.
///
/// `--help` and `--version` come back as `Ok(None)` after printing.
pub fn parse_config<I, T>(args: I) -> Result<Option<RunConfig>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return Ok(None);
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    let text = match &cli.config {
        Some(p) => Some(crate::io::read_text(p).map_err(|e| CliError::Usage(e.to_string()))?),
        None => None,
    };
    resolve(&cli, text.as_deref()).map(Some)
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = parse_config(args).and_then(|cfg| match cfg {
        Some(cfg) => execute(&cfg),
        None => Ok(()),
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("chanpred: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str], file: Option<&str>) -> Result<RunConfig, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("chanpred").chain(args.iter().copied()))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        resolve(&cli, file)
    }

    #[test]
    fn synth_flags_with_defaults() {
        let cfg = parse(
            &["synth", "--n", "3000", "--spacing", "1.42", "--seed", "7"],
            None,
        )
        .unwrap();
        let p = cfg.synth.unwrap();
        assert_eq!(p.n_points, 3000);
        assert_eq!(p.spacing_m, 1.42);
        assert_eq!(p.seed, 7);
        let d = SyntheticParams::default();
        assert_eq!(p.carrier_hz, d.carrier_hz);
        assert_eq!(p.shadow_sigma_db, d.shadow_sigma_db);
        assert_eq!(p.n_f, 1024);
    }

    #[test]
    fn sweep_grid_from_lists() {
        let cfg = parse(
            &[
                "sweep",
                "--input",
                "t.csv",
                "--kinds",
                "bpn,elm,rbf",
                "--neurons",
                "10,20,30,40,50",
                "--q",
                "1,2,4,6",
            ],
            None,
        )
        .unwrap();
        let g = cfg.grid.unwrap();
        assert_eq!(g.kinds.len() * g.neuron_counts.len(), 15);
        assert_eq!(g.q_values, vec![1, 2, 4, 6]);
        assert_eq!(g.points().len(), 60);
    }

    #[test]
    fn flag_beats_file() {
        let file = "[synth]\nseed = 3\nn = 100\n";
        let cfg = parse(&["synth", "--seed", "9"], Some(file)).unwrap();
        let p = cfg.synth.unwrap();
        assert_eq!(p.seed, 9);
        assert_eq!(p.n_points, 100);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let err = parse(&["synth"], Some("[synth]\nbogus = 1\n")).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
        let err = parse(&["synth"], Some("[nonsense]\n")).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn usage_errors() {
        assert!(matches!(parse(&["predict"], None), Err(CliError::Usage(_))));
        assert!(matches!(
            parse(&["synth", "--bogus", "1"], None),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse(&["synth", "--n", "abc"], None),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse(&["predict", "--input", "x", "--kind", "mlp"], None),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse(&["synth", "--n", "1"], None),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Run(Error::invalid("x")).exit_code(), EXIT_DATA);
        let diverged = Error::TrainingDiverged {
            epoch: 3,
            loss: f64::NAN,
        };
        assert_eq!(CliError::Run(diverged).exit_code(), EXIT_NUMERIC);
        assert_eq!(
            CliError::Run(Error::Numeric("x".into())).exit_code(),
            EXIT_NUMERIC
        );
    }

    #[test]
    fn predict_reads_training_table() {
        let file = "[predict]\ninput = \"a.csv\"\nkind = \"elm\"\nneurons = 30\nrmse_scope = \"all_points\"\n";
        let cfg = parse(&["predict", "--q", "2"], Some(file)).unwrap();
        let n = cfg.network.unwrap();
        assert_eq!(n.kind, NetworkKind::Elm);
        assert_eq!(n.hidden_neurons, 30);
        assert_eq!(cfg.q, Some(2));
        assert_eq!(cfg.rmse_scope, RmseScope::AllPoints);
        assert_eq!(cfg.input_path.unwrap(), PathBuf::from("a.csv"));
    }
}
