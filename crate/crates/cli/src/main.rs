use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divpot::matrix_stats::write_square_csv;
use divpot::{
    complete_universe_full, correlation_matrix, correlation_spectrum, covariance_matrix,
    factor_model_returns, load_index, load_panel_files, prices_from_returns, run_series,
    window_schedule, write_panel_csv, Error, ErrorKind, FactorSpec, IndexSeries64, MeasureSet,
    SelectionCriteria64, StockPanel64, WindowConfig64,
};

type Result<T> = divpot::Result<T>;

#[derive(Parser)]
#[command(
    name = "divpot",
    version,
    about = "Rolling-window diversification-potential measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the rolling metrics series and write it as CSV.
    Run(RunArgs),
    /// Write the prices/dividends CSV pair generated from a factor-model spec.
    Synth(SynthArgs),
    /// Print one window's correlation, covariance, spectrum and selection.
    Inspect(InspectArgs),
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct Input {
    /// Long-format `date,ticker,close` prices.
    #[arg(long, requires = "dividends", conflicts_with = "synth_spec")]
    prices: Option<PathBuf>,
    /// Long-format `date,ticker,amount` cash dividends.
    #[arg(long, requires = "prices", conflicts_with = "synth_spec")]
    dividends: Option<PathBuf>,
    /// Factor-model spec (JSON) generated in memory instead of reading prices.
    #[arg(long)]
    synth_spec: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    /// Window length in return rows.
    #[arg(long, default_value_t = divpot::rolling::DEFAULT_WINDOW_LENGTH)]
    window_length: usize,
    /// Rows between consecutive window starts.
    #[arg(long, default_value_t = divpot::rolling::DEFAULT_STEP)]
    step: usize,
    /// Eigenvalue below which a component marks a stock for deletion.
    #[arg(long, default_value_t = 0.7)]
    deletion: f64,
    /// Selection stops once the smallest eigenvalue reaches this value.
    #[arg(long, default_value_t = 0.5)]
    stop: f64,
    /// Selection never shrinks the universe below this many stocks.
    #[arg(long, default_value_t = 2)]
    min_retained: usize,
}

impl WindowArgs {
    fn config(&self) -> Result<WindowConfig64> {
        let criteria = SelectionCriteria64::new(self.deletion, self.stop, self.min_retained)?;
        WindowConfig64::new(self.window_length, self.step, criteria)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: Input,
    /// `date,value` index levels for the index_return column.
    #[arg(long)]
    index: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Restrict computation to these measures (kmo, pc1, select, dr).
    #[arg(long, value_delimiter = ',')]
    measure: Vec<String>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Metrics CSV destination.
    #[arg(long)]
    output: PathBuf,
    /// Per-window failure log; defaults to `<output stem>_diagnostics.csv`.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Factor-model spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory receiving prices.csv and dividends.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    window: WindowArgs,
    /// Zero-based position of the window in the schedule.
    #[arg(long, default_value_t = 0)]
    window_index: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Inspect(args) => cmd_inspect(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 1,
        ErrorKind::Io => 2,
        ErrorKind::Numeric => 3,
    }
}

fn io_error(context: String, source: io::Error) -> Error {
    Error::Io { context, source }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(format!("creating {}", path.display()), e))
}

fn read_spec(path: &Path) -> Result<FactorSpec> {
    let text =
        fs::read_to_string(path).map_err(|e| io_error(format!("reading {}", path.display()), e))?;
    let spec: FactorSpec = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

fn synth_panel(spec: &FactorSpec) -> Result<StockPanel64> {
    prices_from_returns(&factor_model_returns(spec)?)
}

fn load_input(input: &Input) -> Result<StockPanel64> {
    let panel = match (&input.prices, &input.dividends, &input.synth_spec) {
        (Some(p), Some(d), None) => load_panel_files(p, d)?,
        (None, None, Some(spec)) => synth_panel(&read_spec(spec)?)?,
        _ => {
            return Err(Error::Validation(
                "give either --prices with --dividends, or --synth-spec".into(),
            ))
        }
    };
    complete_universe_full(&panel)
}

fn measures(names: &[String]) -> Result<MeasureSet> {
    if names.is_empty() {
        return Ok(MeasureSet::ALL);
    }
    names
        .iter()
        .try_fold(MeasureSet::NONE, |set, name| set.with(name.trim()))
}

fn diagnostics_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "metrics".into());
    output.with_file_name(format!("{stem}_diagnostics.csv"))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = args.window.config()?;
    let measures = measures(&args.measure)?;
    let panel = load_input(&args.input)?;
    let index: Option<IndexSeries64> = match &args.index {
        Some(path) => {
            let file =
                File::open(path).map_err(|e| io_error(format!("opening {}", path.display()), e))?;
            Some(load_index(file, &path.display().to_string())?)
        }
        None => None,
    };

    let series = if args.threads == 1 {
        run_series(&panel, &cfg, measures, index.as_ref(), false)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| Error::Validation(format!("cannot start thread pool: {e}")))?;
        pool.install(|| run_series(&panel, &cfg, measures, index.as_ref(), true))?
    };

    series.write_csv(create(&args.output)?)?;
    let diagnostics = args
        .diagnostics
        .clone()
        .unwrap_or_else(|| diagnostics_path(&args.output));
    series.write_diagnostics_csv(create(&diagnostics)?)?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let panel = synth_panel(&read_spec(&args.spec)?)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| io_error(format!("creating {}", args.out_dir.display()), e))?;
    write_panel_csv(
        &panel,
        create(&args.out_dir.join("prices.csv"))?,
        create(&args.out_dir.join("dividends.csv"))?,
    )
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let cfg = args.window.config()?;
    let panel = load_input(&args.input)?;
    let returns = divpot::simple_returns(&panel)?;
    let schedule = window_schedule(returns.n_rows(), &cfg)?;
    let range = schedule.get(args.window_index).ok_or_else(|| {
        Error::Validation(format!(
            "window index {} is out of range (the schedule has {} windows)",
            args.window_index,
            schedule.len()
        ))
    })?;
    let window = returns.window(range.start, range.len())?;
    let corr = correlation_matrix(&window)?;
    let cov = covariance_matrix(&window)?;
    let spectrum = correlation_spectrum(&corr)?;
    let selection = divpot::selection::select_stocks_from(&corr, spectrum.clone(), cfg.criteria())?;

    let mut out = BufWriter::new(io::stdout().lock());
    let stdout_err = |e| io_error("writing to stdout".into(), e);
    writeln!(
        out,
        "# window {}: {} to {} ({} stocks)",
        args.window_index,
        window.first_date().format(divpot::market_data::DATE_FORMAT),
        window.last_date().format(divpot::market_data::DATE_FORMAT),
        window.cols()
    )
    .map_err(stdout_err)?;
    writeln!(out, "# correlation").map_err(stdout_err)?;
    write_square_csv(corr.tickers(), corr.values(), &mut out)?;
    writeln!(out, "# covariance").map_err(stdout_err)?;
    write_square_csv(cov.tickers(), cov.values(), &mut out)?;
    writeln!(out, "# spectrum").map_err(stdout_err)?;
    spectrum.write_csv(corr.tickers(), &mut out)?;
    writeln!(out, "# selection").map_err(stdout_err)?;
    writeln!(out, "{}", selection.to_json()).map_err(stdout_err)?;
    out.flush().map_err(stdout_err)
}
