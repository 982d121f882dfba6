use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use marginal_lds::harness::{
    diagnose, steady_state_for, DiagnoseOptions, Experiment, ExperimentConfig, OutputFormat, Setting,
};
use marginal_lds::kalman::{sufficient_length, unroll_filter};
use marginal_lds::systems::write_vector_csv;
use marginal_lds::Error;

const THREADS_ENV: &str = "MARGINAL_LDS_THREADS";

#[derive(Parser)]
#[command(name = "marginal-lds", version, about = "Online least squares experiments on marginally stable systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write its states (and observations).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run the learner on one trajectory and write its predictions.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Sweep every (horizon, trial) cell and fit the regret exponent.
    RegretSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Structural diagnostics on one simulated trajectory.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Steady-state Kalman filter, its unrolled taps and sufficient length.
    Kalman {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// The regression counterexample on which least squares pays T².
    LowerBound {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 10, 100])]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        trials: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; MARGINAL_LDS_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

impl Common {
    fn setup(&self) -> Result<(), Error> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| Error::Config {
                field: THREADS_ENV.into(),
                message: format!("`{v}` is not a thread count"),
            })?),
            Err(_) => self.threads,
        };
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        }
        std::fs::create_dir_all(&self.out_dir).map_err(|e| io_error(&self.out_dir, e))
    }

    fn load(&self) -> Result<ExperimentConfig, Error> {
        let path = self.config.as_ref().ok_or_else(|| Error::Config {
            field: "--config".into(),
            message: "this command needs a config file".into(),
        })?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { common, horizon, trial } => {
            common.setup()?;
            let exp = Experiment::new(&common.load()?)?;
            let t = horizon.unwrap_or(*exp.config.horizons.last().expect("validated"));
            let run = exp.predict(t, trial)?;
            let dir = &common.out_dir;
            match common.format {
                Format::Csv => {
                    write_vector_csv(&dir.join("states.csv"), "x", 0, &run.trajectory.states)?;
                    if let Some(ys) = &run.trajectory.observations {
                        write_vector_csv(&dir.join("observations.csv"), "y", 0, ys)?;
                    }
                }
                Format::Json => write_json(
                    &dir.join("trajectory.json"),
                    &serde_json::json!({
                        "states": run.trajectory.states,
                        "inputs": run.trajectory.inputs,
                        "observations": run.trajectory.observations,
                    }),
                )?,
            }
            println!("simulated T={t} trial={trial}, max state norm {}", run.trajectory.max_state_norm());
            Ok(0)
        }
        Command::Predict { common, horizon, trial } => {
            common.setup()?;
            let exp = Experiment::new(&common.load()?)?;
            let t = horizon.unwrap_or(*exp.config.horizons.last().expect("validated"));
            let run = exp.predict(t, trial)?;
            let first = if exp.config.setting == Setting::PartialStochastic { 0 } else { 1 };
            let dir = &common.out_dir;
            match common.format {
                Format::Csv => write_vector_csv(&dir.join("predictions.csv"), "pred", first, &run.predictions)?,
                Format::Json => write_json(&dir.join("predictions.json"), &run.predictions)?,
            }
            write_json(&dir.join("regret.json"), &run.record)?;
            println!("T={t} trial={trial} mu={} regret={}", run.mu, run.record.regret);
            Ok(0)
        }
        Command::RegretSweep { common } => {
            common.setup()?;
            let out = Experiment::new(&common.load()?)?.run()?;
            out.write(&common.out_dir, common.format.into())?;
            for h in &out.summary.horizons {
                println!("T={} mu={} mean regret {}", h.horizon, h.mu, h.mean_regret);
            }
            if let Some(fit) = out.summary.fit {
                println!("fitted exponent {}", fit.slope);
            }
            for v in &out.summary.violations {
                eprintln!("violation: {v}");
            }
            Ok(out.exit_code() as u8)
        }
        Command::Diagnose { common, horizon, trial } => {
            common.setup()?;
            let exp = Experiment::new(&common.load()?)?;
            let t = horizon.unwrap_or(*exp.config.horizons.last().expect("validated"));
            let rep = diagnose(&exp, t, trial, &DiagnoseOptions::default())?;
            let dir = &common.out_dir;
            write_json(&dir.join("diagnostics.json"), &rep)?;
            if let (Format::Csv, Some(a)) = (common.format, &rep.anomaly) {
                write_text(&dir.join("diagnostics.csv"), &a.to_csv())?;
            }
            for v in &rep.violations {
                eprintln!("violation: {v}");
            }
            Ok(if rep.violations.is_empty() { 0 } else { 2 })
        }
        Command::Kalman { common, eps } => {
            common.setup()?;
            let cfg = common.load()?;
            let sys = cfg
                .system
                .as_ref()
                .ok_or_else(|| Error::Config {
                    field: "system".into(),
                    message: "missing".into(),
                })?
                .build()?;
            let kf = steady_state_for(&sys)?;
            let len = sufficient_length(&kf, eps)?;
            let filter = unroll_filter(&kf, len.length)?;
            let dir = &common.out_dir;
            write_json(
                &dir.join("kalman.json"),
                &serde_json::json!({ "steady_state": kf, "sufficient_length": len }),
            )?;
            if let Format::Csv = common.format {
                let taps: Vec<Vec<f64>> = (0..filter.len()).map(|k| vec![filter.tap_norm(k)]).collect();
                write_vector_csv(&dir.join("taps.csv"), "norm", 0, &taps)?;
            }
            println!("rho(A_KF) = {}, sufficient length {} at eps {eps}", kf.rho, len.length);
            Ok(0)
        }
        Command::LowerBound {
            common,
            horizons,
            trials,
        } => {
            common.setup()?;
            let mut cfg = match &common.config {
                Some(_) => common.load()?,
                None => ExperimentConfig::from_json(
                    &serde_json::json!({ "setting": "ols-lower-bound", "horizons": horizons, "trials": trials })
                        .to_string(),
                )?,
            };
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let out = Experiment::new(&cfg)?.run()?;
            out.write(&common.out_dir, common.format.into())?;
            for h in &out.summary.horizons {
                println!("T={} mean regret {} (T^2 = {})", h.horizon, h.mean_regret, h.horizon * h.horizon);
            }
            Ok(out.exit_code() as u8)
        }
    }
}
