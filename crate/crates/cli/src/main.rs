use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use lagrange_core::io::{
    scan_command, write_mc_bench, write_synth_bubble, ModelKind, ScanRequest, MC_CSV_FILE,
    SYNTH_CSV_FILE,
};
use lagrange_core::linreg::{monte_carlo_bench, ChangePointConfig};
use lagrange_core::synthetic::{synthetic_bubble, SyntheticBubbleConfig};
use lagrange_core::LambdaMode;

#[derive(Parser)]
#[command(
    name = "lagrange",
    version,
    about = "Lagrange-regularised window selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base seed for every random draw of the command.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Intercept)]
    lambda_mode: Mode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Intercept,
    ZeroIntercept,
}

impl From<Mode> for LambdaMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Intercept => LambdaMode::Intercept,
            Mode::ZeroIntercept => LambdaMode::ZeroIntercept,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    PaperText,
    Appendix,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Ols,
    Lppls,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo study of the change-point regression.
    McBench {
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long, value_enum, default_value_t = Generator::PaperText)]
        config: Generator,
        /// Band table path; the JSON sidecar goes next to it.
        /// Defaults to `mc_bench.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a mirrored synthetic LPPLS bubble.
    SynthBubble {
        /// Noise standard deviation of the log price.
        #[arg(long, default_value_t = 0.03)]
        sigma: f64,
        /// Series path; the generation record goes next to it.
        /// Defaults to `synth_bubble.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Scan window starts at one pseudo-present date and select tau.
    Scan {
        /// CSV with header `date,price` or `date,log_price`.
        #[arg(long)]
        input: PathBuf,
        /// `ols` regresses on the time index; `lppls` fits log prices.
        #[arg(long, value_enum)]
        model: Model,
        /// Pseudo-present date (YYYY-MM-DD); must be an observation.
        #[arg(long)]
        t2: Option<NaiveDate>,
        #[arg(long, default_value_t = 1600)]
        max_window: usize,
        #[arg(long, default_value_t = 30)]
        min_window: usize,
        #[arg(long, default_value_t = 3)]
        step: usize,
        /// Index of the first observation on the time axis.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        index_origin: i64,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::McBench { common, .. }
            | Command::SynthBubble { common, .. }
            | Command::Scan { common, .. } => common,
        }
    }
}

fn target(out: &Option<PathBuf>, common: &Common, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| common.out_dir.join(default))
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.command.common();
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::McBench {
            runs,
            config,
            out,
            common,
        } => {
            let cfg = match config {
                Generator::PaperText => ChangePointConfig::paper_text(),
                Generator::Appendix => ChangePointConfig::appendix(),
            };
            let grid = cfg.default_grid()?;
            let summary =
                monte_carlo_bench(&cfg, *runs, &grid, common.seed, common.lambda_mode.into())?;
            for path in write_mc_bench(&summary, &target(out, common, MC_CSV_FILE))? {
                println!("wrote {}", path.display());
            }
            let show = |name: &str, b| match summary.mean_argmin(b) {
                Some(t1) => println!("{name} mean curve minimum at t1 = {t1}"),
                None => println!("{name} mean curve has no finite minimum"),
            };
            show("chi2", &summary.chi2);
            show("chi2_np", &summary.chi2_np);
            show("chi2_lambda", &summary.chi2_lambda);
            println!(
                "lambda mean {:.6e} [{:.6e}, {:.6e}]",
                summary.lambda_mean, summary.lambda_q05, summary.lambda_q95
            );
        }
        Command::SynthBubble { sigma, out, common } => {
            let cfg = SyntheticBubbleConfig {
                sigma: *sigma,
                ..Default::default()
            };
            let series = synthetic_bubble(&cfg, common.seed)?;
            for path in write_synth_bubble(
                &series,
                &cfg,
                common.seed,
                &target(out, common, SYNTH_CSV_FILE),
            )? {
                println!("wrote {}", path.display());
            }
        }
        Command::Scan {
            input,
            model,
            t2,
            max_window,
            min_window,
            step,
            index_origin,
            common,
        } => {
            let model = match model {
                Model::Ols => ModelKind::Ols,
                Model::Lppls => ModelKind::Lppls,
            };
            let req = ScanRequest {
                t2: *t2,
                max_window: *max_window,
                min_window: *min_window,
                step: *step,
                lambda_mode: common.lambda_mode.into(),
                index_origin: *index_origin,
                ..ScanRequest::new(input, model, common.seed, &common.out_dir)
            };
            let out = scan_command(&req).with_context(|| format!("scan of {}", input.display()))?;
            for path in &out.written {
                println!("wrote {}", path.display());
            }
            let r = &out.report;
            let date = r
                .tau_date
                .map(|d| d.to_string())
                .unwrap_or_else(|| "-".into());
            println!(
                "tau = {} ({date}), lambda = {:.6e}, valid windows = {}",
                r.tau_index, r.lambda, r.n_valid_windows
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
