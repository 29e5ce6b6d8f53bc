use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dseqmark::analysis::{self, sig12};
use dseqmark::dseq::{self, PeriodCheck};
use dseqmark::pnm;
use dseqmark::sweep::{self, CoverSource, MarkSource, SweepConfig};
use dseqmark::synth::SynthSpec;
use dseqmark::watermark::{
    self, BitMatrix, Correlator, GrayImage, ShiftMode, SpreadCode, WatermarkPlan,
};
use dseqmark::Error;

#[derive(Parser)]
#[command(
    name = "dseqmark",
    version,
    about = "Decimal-sequence spread-spectrum watermarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the digits of 1/q in a base.
    Gen(GenArgs),
    /// Autocorrelation report for the binary d-sequence of 1/q.
    Analyze(AnalyzeArgs),
    /// Embed a watermark into a cover image.
    Embed(EmbedArgs),
    /// Recover a watermark using a plan sidecar.
    Extract(ExtractArgs),
    /// Run an embed/extract parameter sweep and write CSV rows.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFormat {
    Digits,
    Chips,
    Register,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    q: u64,
    #[arg(long, default_value_t = 2)]
    base: u64,
    /// Number of digits; defaults to one period.
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, value_enum, default_value = "digits")]
    format: GenFormat,
    /// Shorthand for --format register.
    #[arg(long)]
    register: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    q: u64,
    /// Where to write the `shift,value` CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// How many low-autocorrelation shifts to list.
    #[arg(long, default_value_t = 5)]
    best: usize,
    /// Compare the computed period against a claimed value.
    #[arg(long)]
    expect_period: Option<usize>,
}

#[derive(Args)]
struct CodeArgs {
    /// Prime q of the binary d-sequence 1/q.
    #[arg(long, conflicts_with = "lfsr", required_unless_present = "lfsr")]
    q: Option<u64>,
    /// Use the m-sequence of this degree instead of a d-sequence.
    #[arg(long)]
    lfsr: Option<u32>,
}

impl CodeArgs {
    fn code(&self) -> SpreadCode {
        match (self.q, self.lfsr) {
            (_, Some(degree)) => SpreadCode::MSequence { degree },
            (Some(q), None) => SpreadCode::DSequence { q },
            (None, None) => unreachable!("clap requires one of --q/--lfsr"),
        }
    }
}

#[derive(Args)]
struct EmbedArgs {
    /// PGM path or `synth:<flat|gradient|checker|texture|busy>:<W>x<H>[:seed]`.
    #[arg(long)]
    cover: String,
    /// PBM watermark.
    #[arg(long)]
    mark: PathBuf,
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// selected, circular, random or fixed:<shift>.
    #[arg(long, default_value = "selected")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    key: u64,
    #[arg(long)]
    out: PathBuf,
    /// Plan sidecar; defaults to the output path with a `.wmplan` extension.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Write P2 instead of P5.
    #[arg(long)]
    ascii: bool,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Original watermark, to count noise pixels.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Plain mean(pixel * chip) correlation instead of the detrended one.
    #[arg(long)]
    raw: bool,
    /// Write P1 instead of P4.
    #[arg(long)]
    ascii: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Msequence,
}

#[derive(Args)]
struct SweepArgs {
    /// PGM path or synthetic cover; seeded synthetic kinds vary per trial.
    #[arg(long)]
    cover: String,
    /// PBM path or `random:<cols>x<rows>` for a fresh mark per trial.
    #[arg(long)]
    mark: String,
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    gains: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "selected")]
    modes: Vec<String>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    key: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// Degree of the baseline m-sequence.
    #[arg(long, default_value_t = 6)]
    degree: u32,
}

enum CliError {
    Param(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Plan(_) | Error::Image(_) => CliError::Io(e.to_string()),
            _ => CliError::Param(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_cover(spec: &str) -> CliResult<GrayImage> {
    if spec.starts_with("synth:") {
        return Ok(spec.parse::<SynthSpec>()?.render()?);
    }
    Ok(pnm::read_pgm(&read(Path::new(spec))?).map_err(Error::from)?)
}

fn load_mark(path: &Path) -> CliResult<BitMatrix> {
    Ok(pnm::read_pbm(&read(path)?).map_err(Error::from)?)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_gen(args: GenArgs) -> CliResult<()> {
    let format = if args.register {
        GenFormat::Register
    } else {
        args.format
    };
    let len = match args.len {
        Some(n) => n,
        None => dseq::period(args.q, args.base)?,
    };
    match format {
        GenFormat::Digits => println!("{}", join(dseq::generate(args.q, args.base, len)?.digits)),
        GenFormat::Chips => {
            let seq = dseq::generate(args.q, args.base, len)?;
            println!(
                "{}",
                join(analysis::bipolarize(&seq.digits, args.base)?.chips().iter())
            );
        }
        GenFormat::Register => {
            let t = dseq::register_multiplier(args.q, args.base).ok_or_else(|| {
                CliError::Param(format!(
                    "q = {} is not of the form t*{} - 1",
                    args.q, args.base
                ))
            })?;
            dseq::check_params(args.q, args.base)?;
            let trace = dseq::register_generate(t, args.base, len)?;
            println!("carries: {}", join(&trace.carry_row));
            println!("digits:  {}", join(&trace.digit_row));
            println!("reversed: {}", join(trace.reversed_digits()));
        }
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    let report = analysis::correlation_report(args.q, 2)?;
    let csv = report.to_csv();
    match &args.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    let best = analysis::select_shifts(&report, args.best.clamp(1, report.period() - 1))?;
    let worst = report.worst_shift();
    println!(
        "period={} mean={} std={} best_shifts={} worst_shift={} worst_value={}",
        report.period(),
        sig12(report.mean),
        sig12(report.std),
        best.iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
        worst,
        sig12(report.values[worst])
    );
    if let Some(claimed) = args.expect_period {
        match dseq::check_claimed_period(args.q, 2, claimed)? {
            PeriodCheck::Matches(p) => println!("expected period {p}: matches"),
            PeriodCheck::Differs {
                actual,
                claimed,
                claimed_possible,
            } => {
                let note = if claimed_possible {
                    format!("{claimed} divides q-1 but is not the order")
                } else {
                    format!(
                        "{claimed} does not divide q-1 = {}, so it cannot be a period",
                        args.q - 1
                    )
                };
                println!("expected period {claimed}: MISMATCH, actual {actual}; {note}");
            }
        }
    }
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> CliResult<()> {
    let cover = load_cover(&args.cover)?;
    let mark = load_mark(&args.mark)?;
    let mode: ShiftMode = args
        .mode
        .parse()
        .map_err(|e: Error| CliError::Param(e.to_string()))?;
    let plan = watermark::make_plan(
        args.code.code(),
        args.k,
        (cover.width(), cover.height()),
        (mark.cols(), mark.rows()),
        mode,
        args.key,
    )?;
    let marked = watermark::embed(&cover, &mark, &plan)?;
    let plan_path = args
        .plan
        .clone()
        .unwrap_or_else(|| args.out.with_extension("wmplan"));
    write(&args.out, pnm::write_pgm(&marked, args.ascii))?;
    write(&plan_path, plan.to_sidecar())?;
    let psnr = watermark::psnr(&cover, &marked)?;
    let psnr = if psnr.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psnr:.4}")
    };
    println!(
        "wrote {} and {}; period={} block={}x{} black_bits={} psnr={psnr}",
        args.out.display(),
        plan_path.display(),
        plan.period(),
        plan.block_w,
        plan.block_h,
        mark.count_black()
    );
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> CliResult<()> {
    let plan_text = String::from_utf8(read(&args.plan)?)
        .map_err(|_| CliError::Io(format!("{}: not a text file", args.plan.display())))?;
    let plan = WatermarkPlan::from_sidecar(&plan_text)?;
    let image = pnm::read_pgm(&read(&args.input)?).map_err(Error::from)?;
    let correlator = if args.raw {
        Correlator::Raw
    } else {
        Correlator::Detrended
    };
    let result = watermark::extract_with(&image, &plan, correlator)?;
    write(&args.out, pnm::write_pbm(&result.recovered, args.ascii))?;
    let c = &result.correlations;
    let min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "threshold={} min={} max={} black_bits={}",
        sig12(result.threshold),
        sig12(min),
        sig12(max),
        result.recovered.count_black()
    );
    if let Some(truth) = &args.truth {
        let truth = load_mark(truth)?;
        println!(
            "noise_pixels={}",
            watermark::noise_pixels(&result.recovered, &truth)?
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let cover = if args.cover.starts_with("synth:") {
        CoverSource::Synth(args.cover.parse()?)
    } else {
        CoverSource::Image(load_cover(&args.cover)?)
    };
    let mark = match args.mark.strip_prefix("random:") {
        Some(dims) => {
            let (cols, rows) =
                watermark::parse_dims(dims).map_err(|e| CliError::Param(e.to_string()))?;
            MarkSource::Random { cols, rows }
        }
        None => MarkSource::Fixed(load_mark(Path::new(&args.mark))?),
    };
    let mut codes: Vec<SpreadCode> = args
        .primes
        .iter()
        .map(|&q| SpreadCode::DSequence { q })
        .collect();
    if args.baseline.is_some() {
        codes.push(SpreadCode::MSequence {
            degree: args.degree,
        });
    }
    let modes = args
        .modes
        .iter()
        .map(|m| m.parse().map_err(|e: Error| CliError::Param(e.to_string())))
        .collect::<CliResult<Vec<ShiftMode>>>()?;
    let config = SweepConfig {
        cover,
        mark,
        codes,
        gains: args.gains,
        modes,
        trials: args.trials,
        key: args.key,
    };
    let rows = sweep::run_sweep(&config)?;
    write(&args.out, sweep::to_csv(&rows))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Param(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
