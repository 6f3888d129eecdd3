use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CliError, CommandKind, RunConfig};
use crate::error::{Error, Result};
use crate::evaluation::{compare_runs, empirical_density, fit_zero_mean_gaussian, GaussianFit};
use crate::harness::{
    run_prediction_with, sweep_with, PredictionOptions, PredictionRun, RunSummary, SweepReport,
    SweepSettings, SweepTimings,
};
use crate::io;
use crate::pipeline::{
    extract_lsf, fit_log_distance, path_loss_trace, sliding_window_average, window_length,
    ChannelTrace, LogDistanceModel,
};
use crate::synthetic::{generate_trace, generate_transfer_functions};

const MANIFEST: &str = "manifest.json";
const REPORT: &str = "report.json";
const RUNS_DIR: &str = "runs";

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: &'a RunConfig,
    outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        io::write_text(&self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &to_json(value))
    }

    fn finish(mut self, cfg: &RunConfig) -> Result<()> {
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            outputs: std::mem::take(&mut self.written),
        };
        self.write_json(MANIFEST, &manifest)?;
        log::info!("wrote {}", self.dir.display());
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn input(cfg: &RunConfig) -> &Path {
    cfg.input_path
        .as_deref()
        .expect("resolved config carries an input")
}

fn trace_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads a trace and applies the sliding average when configured.
fn load_trace(cfg: &RunConfig) -> Result<ChannelTrace> {
    let raw = io::read_trace(input(cfg), cfg.carrier_hz)?;
    if cfg.smooth {
        sliding_window_average(&raw)
    } else {
        Ok(raw)
    }
}

pub fn execute(cfg: &RunConfig) -> std::result::Result<(), CliError> {
    match cfg.command {
        CommandKind::Synth => synth(cfg),
        CommandKind::Pipeline => pipeline(cfg),
        CommandKind::Predict => predict(cfg),
        CommandKind::Sweep => sweep(cfg),
        CommandKind::Report => report(cfg),
    }
    .map_err(CliError::Run)
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let p = cfg.synth.as_ref().expect("synth config");
    let mut out = Outputs::new(&cfg.output_dir);
    let trace = generate_trace(p)?;
    out.write("trace.csv", &io::format_trace(&trace))?;
    if cfg.write_transfer_functions {
        let tfs = generate_transfer_functions(&trace, p)?;
        out.write(
            "transfer_functions.csv",
            &io::format_transfer_functions(&tfs),
        )?;
    }
    out.finish(cfg)
}

#[derive(Serialize)]
struct FitSummary {
    model: LogDistanceModel,
    window_samples: usize,
    lsf_mean_db: f64,
    lsf_gaussian: GaussianFit,
}

fn pipeline(cfg: &RunConfig) -> Result<()> {
    let records = io::read_transfer_functions(input(cfg))?;
    let raw = path_loss_trace(&records, &cfg.link, cfg.carrier_hz)?;
    let smooth = sliding_window_average(&raw)?;
    let model = fit_log_distance(&smooth)?;
    let lsf = extract_lsf(&smooth, &model)?;
    let mut out = Outputs::new(&cfg.output_dir);
    out.write("raw_trace.csv", &io::format_trace(&raw))?;
    out.write("trace.csv", &io::format_trace(&smooth))?;
    out.write("lsf.csv", &io::format_lsf(&lsf))?;
    out.write_json(
        "fit.json",
        &FitSummary {
            model,
            window_samples: window_length(cfg.carrier_hz, raw.spacing_m())?,
            lsf_mean_db: lsf.x_sigma_db.iter().sum::<f64>() / lsf.x_sigma_db.len() as f64,
            lsf_gaussian: fit_zero_mean_gaussian(&lsf.x_sigma_db)?,
        },
    )?;
    out.finish(cfg)
}

#[derive(Serialize)]
struct RunRecord<'a> {
    trace_id: &'a str,
    #[serde(flatten)]
    summary: RunSummary,
    n_train: usize,
    n_predicted: usize,
    train_fit: Option<LogDistanceModel>,
    reference_fit: Option<LogDistanceModel>,
    train_seconds: f64,
}

fn write_run_series(
    out: &mut Outputs,
    prefix: &str,
    trace: &ChannelTrace,
    run: &PredictionRun,
) -> Result<()> {
    let idx = &run.split.predict_indices;
    out.write(
        &format!("{prefix}predictions.csv"),
        &io::format_predictions(trace, idx, &run.predicted_pl_db),
    )?;
    if let Some(fit) = &run.reference_fit {
        let d = trace.distances_m();
        let measured: Vec<f64> = d
            .iter()
            .zip(trace.pl_db())
            .map(|(&x, &pl)| pl - fit.predict_db(x))
            .collect();
        out.write(
            &format!("{prefix}lsf_predictions.csv"),
            &io::format_lsf_predictions(d, &measured, idx, &run.predicted_lsf_db),
        )?;
    }
    Ok(())
}

fn predict(cfg: &RunConfig) -> Result<()> {
    let trace = load_trace(cfg)?;
    let network = cfg.network.as_ref().expect("predict config");
    let q = cfg.q.expect("predict config");
    let id = trace_id(input(cfg));
    let opts = PredictionOptions {
        trace_id: id.clone(),
        scope: cfg.rmse_scope,
    };
    let run = run_prediction_with(&trace, q, network, &opts)?;
    let mut out = Outputs::new(&cfg.output_dir);
    out.write_json(
        "run.json",
        &RunRecord {
            trace_id: &id,
            summary: RunSummary::from_run(&run),
            n_train: run.split.train_indices.len(),
            n_predicted: run.split.predict_indices.len(),
            train_fit: run.train_fit,
            reference_fit: run.reference_fit,
            train_seconds: run.train_seconds,
        },
    )?;
    write_run_series(&mut out, "", &trace, &run)?;
    if let Some(model) = &run.model {
        out.write("model.txt", &model.to_record())?;
    }
    if let (Some(pl), Some(lsf)) = (run.rmse_pl_db, run.rmse_lsf_db) {
        log::info!("{}: rmse pl {pl:.4} dB, lsf {lsf:.4} dB", run.run_id());
    }
    out.finish(cfg)
}

fn sweep(cfg: &RunConfig) -> Result<()> {
    let trace = load_trace(cfg)?;
    let grid = cfg.grid.as_ref().expect("sweep config");
    let probe = cfg.network.as_ref().expect("sweep config");
    let settings = SweepSettings {
        learning_rate: probe.learning_rate,
        error_threshold: probe.error_threshold,
        max_iterations: probe.max_iterations,
        scope: cfg.rmse_scope,
    };
    let id = trace_id(input(cfg));
    let runs = sweep_with(&trace, grid, &settings, &id)?;

    let mut out = Outputs::new(&cfg.output_dir);
    out.write(
        REPORT,
        &SweepReport::new(&id, trace.len(), cfg.rmse_scope, &runs).to_json(),
    )?;
    out.write_json("timings.json", &SweepTimings::new(&runs))?;
    for run in runs.iter().filter(|r| r.error.is_none()) {
        write_run_series(
            &mut out,
            &format!("{RUNS_DIR}/{}_", run.run_id()),
            &trace,
            run,
        )?;
    }
    let failed: Vec<&PredictionRun> = runs.iter().filter(|r| r.error.is_some()).collect();
    for r in &failed {
        log::warn!(
            "{} failed: {}",
            r.run_id(),
            r.error.as_deref().unwrap_or("")
        );
    }
    out.finish(cfg)?;
    if !runs.is_empty() && failed.len() == runs.len() {
        return Err(Error::Numeric("every run of the sweep failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct DensitySummary {
    run_id: String,
    measured: GaussianFit,
    predicted: GaussianFit,
}

fn report(cfg: &RunConfig) -> Result<()> {
    let dir = input(cfg);
    let report_path = if dir.is_dir() {
        dir.join(REPORT)
    } else {
        dir.to_path_buf()
    };
    let sweep_dir = report_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let report = SweepReport::from_json(&io::read_text(&report_path)?).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: report_path.display().to_string(),
            line,
            message,
        },
        other => other,
    })?;
    let mut out = Outputs::new(&cfg.output_dir);
    out.write_json("comparison.json", &compare_runs(&report.to_runs()))?;

    let mut densities = Vec::new();
    let mut plots = Vec::new();
    for summary in report.runs.iter().filter(|r| r.error.is_none()) {
        let id = crate::harness::run_id(&summary.config(), summary.q);
        let path = sweep_dir
            .join(RUNS_DIR)
            .join(format!("{id}_lsf_predictions.csv"));
        if !path.exists() {
            log::warn!("no LSF series for {id}; skipping its density");
            continue;
        }
        let (measured, predicted) = io::parse_series_with_source(
            &io::read_text(&path)?,
            io::LSF_PREDICTION_HEADER,
            &path.display().to_string(),
        )?;
        if predicted.is_empty() {
            continue;
        }
        for (name, samples) in [("measured", &measured), ("predicted", &predicted)] {
            let est = empirical_density(samples, cfg.bin_count)?;
            out.write(
                &format!("density/{id}_{name}.dat"),
                &io::format_density(&est),
            )?;
        }
        densities.push(DensitySummary {
            run_id: id.clone(),
            measured: fit_zero_mean_gaussian(&measured)?,
            predicted: fit_zero_mean_gaussian(&predicted)?,
        });
        plots.push(id);
    }
    out.write_json("densities.json", &densities)?;
    out.write("plot.gp", &plot_script(&plots))?;
    out.finish(cfg)
}

fn plot_script(ids: &[String]) -> String {
    let mut s = String::from(
        "# gnuplot script: measured vs predicted LSF densities\n\
         set xlabel 'LSF (dB)'\nset ylabel 'density'\nset style data histeps\n",
    );
    for id in ids {
        s.push_str(&format!(
            "set title '{id}'\nplot 'density/{id}_measured.dat' title 'measured', \
             'density/{id}_predicted.dat' title 'predicted'\npause -1\n"
        ));
    }
    s
}
