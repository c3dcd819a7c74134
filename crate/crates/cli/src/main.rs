use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qnd_core::analysis::{self, AnalysisConfig, AnalysisReport};
use qnd_core::config::PhysicsConfig;
use qnd_core::io::{self as qio, CampaignSidecar};
use qnd_core::predict::{predict, Prediction};
use qnd_core::qnd::{self, TradeoffModel};
use qnd_core::sim::{self, DriftSpec};
use qnd_core::{Error, VERSION};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "qndsim", version, about = "Dichromatic QND spin-squeezing simulator and analysis")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form predictions for a physics config.
    Predict {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a campaign and write campaign.csv plus campaign.json.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Disable the per-cycle drift.
        #[arg(long)]
        no_drift: bool,
    },
    /// Analyze a campaign CSV and write report.json plus plot.csv.
    Analyze {
        /// Campaign CSV; its sidecar `<stem>.json` is read when present.
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        opts: AnalysisOpts,
    },
    /// Empirical and theoretical (η, ξ) curves.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Campaign CSV to sweep; simulated from the config when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        opts: AnalysisOpts,
    },
}

#[derive(Args, Clone, Copy)]
struct AnalysisOpts {
    #[arg(long)]
    pulses_combined: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    no_differencing: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Data(_) => EXIT_DATA,
            Failure::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config { .. } | Error::InvalidParameter { .. } => Failure::Config(msg),
            Error::NoBracket { .. }
            | Error::RankDeficient(_)
            | Error::NonPositive(_)
            | Error::ZeroMeanVector
            | Error::NonUnitDirection(_) => Failure::Numeric(msg),
            _ => Failure::Data(msg),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<PhysicsConfig, Failure> {
    match path {
        Some(p) => Ok(PhysicsConfig::load(p)?),
        None => Ok(PhysicsConfig::paper_defaults()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_failure(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_failure(path, e))
}

#[derive(Serialize)]
struct PredictOutput<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a PhysicsConfig,
    prediction: Prediction,
}

fn cmd_predict(config: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let output = PredictOutput {
        tool: "qndsim",
        version: VERSION,
        config: &cfg,
        prediction: predict(&cfg)?,
    };
    let text = serde_json::to_string_pretty(&output).map_err(|e| Failure::Data(e.to_string()))?;
    println!("{text}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("predict.json"), &output)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateSidecar<'a> {
    #[serde(flatten)]
    campaign: CampaignSidecar,
    config: &'a PhysicsConfig,
}

fn cmd_simulate(config: Option<&Path>, out: &Path, seed: Option<u64>, no_drift: bool) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.campaign.seed = s;
    }
    if no_drift {
        cfg.campaign.drift = DriftSpec::default();
    }
    let campaign_cfg = cfg.campaign();
    let physics = cfg.sim_physics()?;
    let campaign = sim::simulate_campaign(&campaign_cfg, &physics)?;

    ensure_dir(out)?;
    let csv_path = out.join("campaign.csv");
    qio::write_campaign_csv(&campaign.records(), create(&csv_path)?)?;
    let sidecar = SimulateSidecar {
        campaign: CampaignSidecar::new(&campaign_cfg, &physics),
        config: &cfg,
    };
    write_json(&out.join("campaign.json"), &sidecar)?;
    eprintln!(
        "wrote {} runs to {} (seed {})",
        campaign.runs.len(),
        csv_path.display(),
        campaign_cfg.seed
    );
    Ok(())
}

fn read_sidecar(csv: &Path) -> Option<CampaignSidecar> {
    let path = csv.with_extension("json");
    let file = File::open(path).ok()?;
    serde_json::from_reader(BufReader::new(file)).ok()
}

/// Analysis settings: defaults, then sidecar or config, then flags.
fn analysis_config(
    cfg: Option<&PhysicsConfig>,
    sidecar: Option<&CampaignSidecar>,
    opts: AnalysisOpts,
) -> AnalysisConfig {
    let mut a = AnalysisConfig::default();
    if let Some(c) = cfg {
        a.pulses_combined = c.photons.pulses_combined;
        a.photons_per_pulse_per_color = c.photons.pulse_photons_per_color;
        a.coupling = c.calibrated_coupling;
        a.eta_se = c.decoherence.eta_ref;
        a.n_se = c.decoherence.n_ref;
    }
    if let Some(s) = sidecar {
        a.photons_per_pulse_per_color = s.campaign.photons_per_pulse_per_color;
        a.coupling = Some(s.physics.coupling);
    }
    if let Some(p) = opts.pulses_combined {
        a.pulses_combined = p;
    }
    if let Some(k) = opts.bins {
        a.bins = k;
    }
    a.differencing = !opts.no_differencing;
    a
}

fn read_campaign(path: &Path) -> Result<Vec<qnd_core::sim::RunRecord>, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    Ok(qio::read_campaign_csv(BufReader::new(file))?)
}

fn cmd_analyze(
    input: &Path,
    config: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    opts: AnalysisOpts,
) -> Result<AnalysisReport, Failure> {
    let cfg = match config {
        Some(p) => Some(PhysicsConfig::load(p)?),
        None => None,
    };
    let records = read_campaign(input)?;
    let sidecar = read_sidecar(input);
    let acfg = analysis_config(cfg.as_ref(), sidecar.as_ref(), opts);
    let seed = seed.or(sidecar.as_ref().map(|s| s.seed));
    let report = analysis::analyze(&records, &acfg, seed)?;

    ensure_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    analysis::write_plot_csv(&report.fit, create(&out.join("plot.csv"))?)?;
    if let Some(s) = &report.squeezing {
        eprintln!(
            "P = {}: conditional {:.2} dB, xi {:.2} ± {:.2} dB (eta = {:.3})",
            s.pulses_combined, s.conditional_db, s.xi_db, s.xi_db_std, s.eta
        );
    }
    Ok(report)
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    tool: &'static str,
    version: &'static str,
    seed: Option<u64>,
    analysis: &'a AnalysisConfig,
    tradeoff: TradeoffModel,
    optimal_eta: f64,
    xi_min_db: f64,
    /// Slope of ln ξ_min against ln d over d in [1e3, 1e6].
    xi_min_log_slope: f64,
    empirical_min_eta: Option<f64>,
    report: &'a AnalysisReport,
}

fn theory_db(model: &TradeoffModel, eta: f64) -> Result<f64, Failure> {
    Ok(10.0 * qnd::xi_vs_eta(model, eta)?.log10())
}

fn cmd_sweep(
    config: Option<&Path>,
    out: &Path,
    input: Option<&Path>,
    seed: Option<u64>,
    opts: AnalysisOpts,
) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.campaign.seed = s;
    }
    ensure_dir(out)?;
    let csv_path = match input {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = out.join("campaign");
            cmd_simulate(config, &dir, Some(cfg.campaign.seed), false)?;
            dir.join("campaign.csv")
        }
    };
    let records = read_campaign(&csv_path)?;
    let sidecar = read_sidecar(&csv_path);
    let acfg = analysis_config(Some(&cfg), sidecar.as_ref(), opts);
    let seed = sidecar.as_ref().map(|s| s.seed).or(Some(cfg.campaign.seed));
    let report = analysis::analyze(&records, &acfg, seed)?;

    let model = cfg.tradeoff;
    let (optimal_eta, xi_min) = qnd::find_optimal_eta(&model)?;
    let xi_min_log_slope = qnd::xi_min_scaling(model.kappa2_per_eta, 1e3, 1e6, 31)?;

    let table = out.join("sweep.csv");
    let mut w = create(&table)?;
    let mut rows = String::from(
        "pulses_combined,n_probe,eta,xi_db,xi_db_mean,xi_db_std,conditional_db_mean,conditional_db_std,theory_xi_db\n",
    );
    for s in &report.sweep {
        let cells = [
            s.n_probe,
            s.eta,
            s.xi_db,
            s.xi_db_mean,
            s.xi_db_std,
            s.conditional_db_mean,
            s.conditional_db_std,
            theory_db(&model, s.eta)?,
        ];
        rows.push_str(&s.pulses_combined.to_string());
        for c in cells {
            rows.push(',');
            rows.push_str(&qio::format_float(c));
        }
        rows.push('\n');
    }
    w.write_all(rows.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_failure(&table, e))?;

    let empirical_min_eta = report
        .sweep
        .iter()
        .min_by(|a, b| a.xi_db_mean.total_cmp(&b.xi_db_mean))
        .map(|s| s.eta);
    let summary = SweepSummary {
        tool: "qndsim",
        version: VERSION,
        seed,
        analysis: &acfg,
        tradeoff: model,
        optimal_eta,
        xi_min_db: 10.0 * xi_min.log10(),
        xi_min_log_slope,
        empirical_min_eta,
        report: &report,
    };
    write_json(&out.join("sweep.json"), &summary)?;
    eprintln!(
        "theory optimum eta = {optimal_eta:.3}; empirical minimum at eta = {}",
        empirical_min_eta.map_or("n/a".into(), |e| format!("{e:.3}"))
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Predict { config, out } => cmd_predict(config.as_deref(), out.as_deref()),
        Command::Simulate {
            config,
            out,
            seed,
            no_drift,
        } => cmd_simulate(config.as_deref(), out, *seed, *no_drift),
        Command::Analyze {
            input,
            config,
            out,
            seed,
            opts,
        } => cmd_analyze(input, config.as_deref(), out, *seed, *opts).map(|_| ()),
        Command::Sweep {
            config,
            out,
            input,
            seed,
            opts,
        } => cmd_sweep(config.as_deref(), out, input.as_deref(), *seed, *opts),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
