use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use smoothlasso::benchmark::run_benchmark;
use smoothlasso::estimators::{fit_timecourse, parse_estimator_list, EstimatorSpec, TimeCourseFit};
use smoothlasso::io::{
    format_g17, load_dataset, read_report, save_dataset, write_report, BenchmarkConfig,
    ReportFormat,
};
use smoothlasso::metrics::{false_positives, model_size, mse_beta};
use smoothlasso::simulation::{derive_seed, simulate_dataset, TimeCourseDataset};
use smoothlasso::smoothing::Kernel;
use smoothlasso::tuning::{tune_prepared, TunedParams, ValidationSet};
use smoothlasso::{Error, Result};

#[derive(Parser)]
#[command(
    name = "smoothlasso",
    version,
    about = "Smoothed (adaptive) Lasso for time-courses of linear models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Estimator ids, e.g. "1,4,7" or "1-7".
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    kernel: Option<Kernel>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pretty,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Pretty => ReportFormat::Pretty,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a training set (and optionally a validation set) from the configured model.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Training dataset CSV.
        #[arg(long)]
        out: PathBuf,
        /// Validation dataset CSV with half as many observations.
        #[arg(long)]
        valid_out: Option<PathBuf>,
        /// Run index used to derive the seeds.
        #[arg(long, default_value_t = 0)]
        run: u64,
    },
    /// Select (lambda, h) per time-point on a validation set.
    Tune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        /// Tuned parameters as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit estimators, with parameters from `tune` or tuned on the fly.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long, required_unless_present = "params")]
        valid: Option<PathBuf>,
        /// Parameters written by `tune`.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Coefficient CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo comparison of estimators on simulated data.
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Re-render a report CSV.
    Report {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "pretty")]
        format: Format,
    },
}

/// Parameters file written by `tune` and read by `fit`.
#[derive(Serialize, Deserialize)]
struct ParamsFile {
    kernel: Kernel,
    gamma: f64,
    estimators: Vec<TunedParams>,
}

fn load_config(common: &Common) -> Result<BenchmarkConfig> {
    let mut cfg = match &common.config {
        Some(p) => BenchmarkConfig::load(p)?,
        None => BenchmarkConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(e) = &common.estimators {
        cfg.estimators = parse_estimator_list(e)?;
    }
    if let Some(r) = common.runs {
        cfg.runs = r;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(k) = common.kernel {
        cfg.kernel = k;
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: Box<dyn Write>) -> Result<()> {
    w.flush().map_err(|e| Error::Io {
        path: "<output>".into(),
        source: e,
    })
}

fn set_threads(threads: usize) {
    // Ignored if a global pool already exists.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
}

fn simulate(common: &Common, out: &Path, valid_out: Option<&Path>, run: u64) -> Result<()> {
    let cfg = load_config(common)?;
    let draw = |n: usize, stream: u64| {
        simulate_dataset(
            cfg.model,
            n,
            cfg.p,
            cfg.sigma,
            cfg.n_times,
            derive_seed(cfg.seed, run, stream),
        )
    };
    save_dataset(&draw(cfg.n, 0)?, out)?;
    if let Some(v) = valid_out {
        save_dataset(&draw(cfg.n / 2, 1)?, v)?;
    }
    Ok(())
}

fn tune(
    cfg: &BenchmarkConfig,
    train: &TimeCourseDataset,
    valid: &TimeCourseDataset,
) -> Result<ParamsFile> {
    let prepared = train.prepare()?;
    let vset = ValidationSet::new(&prepared, valid)?;
    let grid = cfg.grid.to_grid(&train.times, train.n(), train.p());
    let tuned = tune_prepared(&cfg.specs(), &prepared, &vset, &grid, &cfg.solver)?;
    Ok(ParamsFile {
        kernel: cfg.kernel,
        gamma: cfg.gamma,
        estimators: tuned,
    })
}

fn write_fits<W: Write>(
    fits: &[TimeCourseFit],
    times: &[f64],
    p: usize,
    mut w: W,
) -> io::Result<()> {
    write!(w, "estimator,index,time,intercept")?;
    for j in 0..p {
        write!(w, ",b{j}")?;
    }
    writeln!(w)?;
    for tc in fits {
        for (r, f) in tc.fits.iter().enumerate() {
            write!(
                w,
                "{},{},{},{}",
                tc.spec.id.number(),
                r,
                format_g17(times[r]),
                format_g17(f.intercept)
            )?;
            for b in &f.coefficients {
                write!(w, ",{}", format_g17(*b))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

fn fit(
    common: &Common,
    train: &Path,
    valid: Option<&Path>,
    params: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(common)?;
    set_threads(cfg.threads);
    let data = load_dataset(train)?;
    let params = match params {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            serde_json::from_str::<ParamsFile>(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => {
            let v = load_dataset(valid.expect("clap enforces --valid"))?;
            tune(&cfg, &data, &v)?
        }
    };
    let prepared = data.prepare()?;
    let mut fits = Vec::new();
    for tuned in &params.estimators {
        let spec = EstimatorSpec::new(tuned.estimator)
            .with_kernel(params.kernel)
            .with_gamma(params.gamma);
        fits.push(fit_timecourse(&spec, &prepared, tuned, &cfg.solver)?);
    }
    if let Some(truth) = &data.truth {
        for f in &fits {
            eprintln!(
                "estimator {}: mse_beta {} msize {} fp {}",
                f.spec.id,
                format_g17(mse_beta(&f.fits, truth.view())?),
                format_g17(model_size(&f.fits)),
                format_g17(false_positives(&f.fits, truth.view())?)
            );
        }
    }
    let mut w = output(out)?;
    write_fits(&fits, &data.times, data.p(), &mut w).map_err(|e| Error::Io {
        path: out.map_or_else(|| "<stdout>".into(), Path::to_path_buf),
        source: e,
    })?;
    finish(w)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            out,
            valid_out,
            run,
        } => simulate(&common, &out, valid_out.as_deref(), run),
        Command::Tune {
            common,
            train,
            valid,
            out,
        } => {
            let cfg = load_config(&common)?;
            set_threads(cfg.threads);
            let params = tune(&cfg, &load_dataset(&train)?, &load_dataset(&valid)?)?;
            let mut w = output(out.as_deref())?;
            let json =
                serde_json::to_string_pretty(&params).map_err(|e| Error::Config(e.to_string()))?;
            writeln!(w, "{json}").map_err(|e| Error::Io {
                path: "<output>".into(),
                source: e,
            })?;
            finish(w)
        }
        Command::Fit {
            common,
            train,
            valid,
            params,
            out,
        } => fit(
            &common,
            &train,
            valid.as_deref(),
            params.as_deref(),
            out.as_deref(),
        ),
        Command::Benchmark {
            common,
            out,
            format,
        } => {
            let cfg = load_config(&common)?;
            let rows = run_benchmark(&cfg)?;
            let mut w = output(out.as_deref())?;
            write_report(&rows, format.into(), &mut w)?;
            finish(w)
        }
        Command::Report { input, out, format } => {
            let rows = read_report(&input)?;
            let mut w = output(out.as_deref())?;
            write_report(&rows, format.into(), &mut w)?;
            finish(w)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
