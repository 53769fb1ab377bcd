//! Sample-size planning for regressions on densely sampled OU-correlated data.
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use infill_sizing::matrix_oracle::{self, VerificationGrid};
use infill_sizing::report::{self, OutputFormat, RunConfig, CURVE_RESOLUTION};
use infill_sizing::sizing::{self, LambdaInput, SizingRequest, ThresholdSource};
use infill_sizing::threshold_fit::{self, ThresholdSpec};
use infill_sizing::{variance_formulas, Error, Result};

#[derive(Parser)]
#[command(name = "infill-sizing", version, about, long_about = None)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Design seed [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Design size before rounding [default: 200]
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Maximin restarts [default: 50]
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Comma-separated target ratios [default: 0.75,0.80,0.90,0.95]
    #[arg(long, global = true)]
    targets: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Flat key = value file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sources {
    Fitted,
    Published,
    RuleOfThumb,
}

#[derive(Subcommand)]
enum Command {
    /// Sample size for a target variance ratio
    Size(SizeArgs),
    /// Threshold table for every spec and target
    Thresholds,
    /// Check the closed forms against the GLS and OLS matrix oracles
    Verify(VerifyArgs),
    /// Observed and fitted variance ratios for one spec
    Curve(CurveArgs),
    /// The Latin hypercube design and its metrics
    Design,
}

#[derive(Args)]
struct ModelArgs {
    /// intercept-only, slope-only, intercept-slope or agnostic
    #[arg(long, default_value = "agnostic")]
    model: String,
    /// intercept, slope or covariance (required for intercept-slope)
    #[arg(long)]
    param: Option<String>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ThresholdSpec> {
        let label = match &self.param {
            Some(p) => format!("{}:{p}", self.model),
            None => self.model.clone(),
        };
        label.parse().map_err(|e: Error| match e {
            Error::Usage(_) => e,
            other => Error::Usage(other.to_string()),
        })
    }
}

#[derive(Args)]
struct SizeArgs {
    /// Signal-to-noise ratio (effect size in standard deviations)
    #[arg(
        long,
        conflicts_with = "lambda",
        required_unless_present = "lambda",
        allow_negative_numbers = true
    )]
    snr: Option<f64>,
    /// OU rate on the unit interval, instead of --snr
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Process variance
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    sigma2: f64,
    /// Variance ratio to reach, in (0.7, 1)
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    target: f64,
    #[command(flatten)]
    model: ModelArgs,
    /// Where the lambda/n threshold comes from
    #[arg(long, value_enum, default_value = "fitted")]
    thresholds: Sources,
}

#[derive(Args)]
struct VerifyArgs {
    /// Sweep override: n=3..50, lambda=0.1,1,5 or sigma2=1,0.5 (repeatable)
    #[arg(long)]
    grid: Vec<String>,
    /// Scale every closed form by (1 + eps); a negative control
    #[arg(long, hide = true)]
    perturb: Option<f64>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Fitted grid points
    #[arg(long, default_value_t = CURVE_RESOLUTION)]
    resolution: usize,
}

fn run_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.points {
        cfg.design_points = v;
    }
    if let Some(v) = g.restarts {
        cfg.maximin_restarts = v;
    }
    if let Some(v) = &g.targets {
        cfg.targets = report::parse_targets(v)?;
    }
    if let Some(f) = g.format {
        cfg.output_format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    if let Some(p) = &g.output {
        cfg.output_path = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Usage(format!("invalid {key} value '{}'", v.trim())))
        })
        .collect()
}

fn parse_grid(items: &[String]) -> Result<VerificationGrid> {
    let mut grid = VerificationGrid::default();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--grid expects key=values, got '{item}'")))?;
        match key.trim() {
            "n" => {
                grid.ns = match value.split_once("..") {
                    Some((a, b)) => {
                        let a: usize = a
                            .trim()
                            .parse()
                            .map_err(|_| Error::Usage(format!("invalid range '{value}'")))?;
                        let b: usize = b
                            .trim()
                            .parse()
                            .map_err(|_| Error::Usage(format!("invalid range '{value}'")))?;
                        (a..=b).collect()
                    }
                    None => parse_list("n", value)?,
                }
            }
            "lambda" => grid.lambdas = parse_list("lambda", value)?,
            "sigma2" => grid.sigma2s = parse_list("sigma2", value)?,
            other => return Err(Error::Usage(format!("unknown grid key '{other}'"))),
        }
    }
    Ok(grid)
}

/// Writes the command's output; `Ok(false)` means it ran but failed its check.
fn execute(cli: &Cli) -> Result<bool> {
    let cfg = run_config(&cli.global)?;
    let (text, ok) = render(&cli.command, &cfg)?;
    report::write_output(cfg.output_path.as_deref(), &text)?;
    Ok(ok)
}

fn render(command: &Command, cfg: &RunConfig) -> Result<(String, bool)> {
    let fmt = cfg.output_format;
    match command {
        Command::Design => {
            let design = cfg.design()?;
            Ok((report::design_table(&design, cfg).render(fmt)?, true))
        }
        Command::Thresholds => {
            let design = cfg.design()?;
            let table = threshold_fit::threshold_table(&design, &cfg.targets)?;
            Ok((
                report::thresholds_table(&table, &design, cfg).render(fmt)?,
                true,
            ))
        }
        Command::Curve(args) => {
            let spec = args.model.spec()?;
            if args.resolution < 2 {
                return Err(Error::Usage("--resolution must be at least 2".into()));
            }
            let design = cfg.design()?;
            let (data, fit) = report::curve_data(&design, spec)?;
            let t = report::curve_table(spec, &data, &fit, args.resolution, cfg);
            Ok((t.render(fmt)?, true))
        }
        Command::Verify(args) => {
            let grid = parse_grid(&args.grid)?;
            let report = match args.perturb {
                None => matrix_oracle::verify_closed_forms(&grid)?,
                Some(eps) => matrix_oracle::verify_sweep(&grid, |spec, n, lambda| {
                    Ok(variance_formulas::actual_variance(spec, n, lambda)? * (1.0 + eps))
                })?,
            };
            Ok((
                report::verify_table(&report, cfg).render(fmt)?,
                report.passed,
            ))
        }
        Command::Size(args) => {
            let spec = args.model.spec()?;
            let input = match (args.snr, args.lambda) {
                (Some(s), None) => LambdaInput::Snr(s),
                (None, Some(l)) => LambdaInput::Lambda(l),
                _ => {
                    return Err(Error::Usage(
                        "exactly one of --snr and --lambda is required".into(),
                    ))
                }
            };
            let request = SizingRequest {
                input,
                sigma2: args.sigma2,
                target_ratio: args.target,
                spec,
            };
            request.validate()?;
            let source = match args.thresholds {
                Sources::Fitted => ThresholdSource::fitted(&cfg.design()?, spec, args.target)?,
                Sources::Published => ThresholdSource::Published,
                Sources::RuleOfThumb => ThresholdSource::RuleOfThumb,
            };
            let result = sizing::size(&request, &source)?;
            Ok((report::size_table(&result, cfg).render(fmt)?, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed: at least one row matches neither oracle");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(match e {
                Error::Usage(_) | Error::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
