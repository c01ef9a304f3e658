//! `nonspam` — command-line front end for the retinal-inspired
//! spatiotemporal filter bank.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use config::Config;
use error::CliError;

const USAGE: &str = "\
nonspam <kernels|decompose|reconstruct|curve|bounds> [options]

Commands:
  kernels --out DIR [--grid N]
      Write the temporal-kernel CSV (time_s,T,TS,RC,RS) and the per-bin
      spectrum-cut CSV into DIR.
  decompose IMAGE.pgm --out COEFFS.nspm [--render DIR]
      Decompose a grayscale PGM (P2/P5, 8- or 16-bit) into an NSPM
      coefficient file; optionally render each bin as a normalized PGM.
  reconstruct COEFFS.nspm --percent P --out IMAGE.pgm [--original IMAGE.pgm]
      Reconstruct from the highest-magnitude P% of coefficients per bin;
      writes the image and a text report (stdout + IMAGE.report.txt).
  curve IMAGE.pgm --percent P[,P...] --out CURVE.csv
      Progressive-quality experiment: one CSV row per percentage.
  bounds [--grid N] [--seed N] [--oracle]
      Print frame bounds, run the seeded energy-ratio check; --oracle
      cross-checks against the dense SVD oracle (small grids only).

Options:
  --config PATH    flat key = value configuration file
  --seed N         override the configured RNG seed
  --percent LIST   comma-separated percentages in (0, 100]
  --grid N         square pixel grid side (default 64)
  --out PATH       output file or directory
  --original PATH  reference image for the reconstruction report
  --render DIR     per-bin PGM renders for decompose
  --oracle         enable the dense-matrix cross-check

Environment:
  NONSPAM_THREADS  cap internal parallelism (results are identical).
";

struct Flags {
    positionals: Vec<String>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    percent: Option<Vec<f64>>,
    grid: Option<usize>,
    out: Option<PathBuf>,
    original: Option<PathBuf>,
    render: Option<PathBuf>,
    oracle: bool,
}

fn parse_flags(args: &[String]) -> Result<Flags, CliError> {
    let mut flags = Flags {
        positionals: Vec::new(),
        config: None,
        seed: None,
        percent: None,
        grid: None,
        out: None,
        original: None,
        render: None,
        oracle: false,
    };
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let mut value_of = |name: &str| -> Result<String, CliError> {
            iter.next()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("{name} requires a value")))
        };
        match arg.as_str() {
            "--config" => flags.config = Some(PathBuf::from(value_of("--config")?)),
            "--seed" => {
                let v = value_of("--seed")?;
                flags.seed = Some(v.parse().map_err(|_| {
                    CliError::Usage(format!("--seed expects an unsigned integer, got {v:?}"))
                })?);
            }
            "--percent" => {
                let v = value_of("--percent")?;
                let list = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|_| {
                        CliError::Usage(format!("--percent expects numbers, got {v:?}"))
                    })?;
                flags.percent = Some(list);
            }
            "--grid" => {
                let v = value_of("--grid")?;
                flags.grid = Some(v.parse().map_err(|_| {
                    CliError::Usage(format!("--grid expects a positive integer, got {v:?}"))
                })?);
            }
            "--out" => flags.out = Some(PathBuf::from(value_of("--out")?)),
            "--original" => flags.original = Some(PathBuf::from(value_of("--original")?)),
            "--render" => flags.render = Some(PathBuf::from(value_of("--render")?)),
            "--oracle" => flags.oracle = true,
            other if other.starts_with("--") => {
                return Err(CliError::Usage(format!("unknown option {other}")));
            }
            other => flags.positionals.push(other.to_string()),
        }
    }
    Ok(flags)
}

fn load_config(flags: &Flags) -> Result<Config, CliError> {
    let mut config = match &flags.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn require_out(flags: &Flags, what: &str) -> Result<PathBuf, CliError> {
    flags
        .out
        .clone()
        .ok_or_else(|| CliError::Usage(format!("--out is required for {what}")))
}

fn one_positional(flags: &Flags, what: &str) -> Result<PathBuf, CliError> {
    match flags.positionals.as_slice() {
        [p] => Ok(PathBuf::from(p)),
        [] => Err(CliError::Usage(format!("missing {what}"))),
        more => Err(CliError::Usage(format!(
            "expected a single {what}, got {} arguments",
            more.len()
        ))),
    }
}

fn run(args: &[String]) -> Result<(), CliError> {
    let command = args
        .first()
        .ok_or_else(|| CliError::Usage("missing command; try --help".into()))?;
    if command == "--help" || command == "-h" || command == "help" {
        print!("{USAGE}");
        return Ok(());
    }
    let flags = parse_flags(&args[1..])?;
    let config = load_config(&flags)?;
    let grid_side = flags.grid.unwrap_or(64);
    if flags.grid == Some(0) {
        return Err(CliError::Usage("--grid must be at least 1".into()));
    }
    match command.as_str() {
        "kernels" => {
            if !flags.positionals.is_empty() {
                return Err(CliError::Usage("kernels takes no positional arguments".into()));
            }
            let out = require_out(&flags, "kernels")?;
            commands::cmd_kernels(&config, &out, grid_side)
        }
        "decompose" => {
            let image = one_positional(&flags, "input image path")?;
            let out = require_out(&flags, "decompose")?;
            commands::cmd_decompose(&image, &config, &out, flags.render.as_deref())
        }
        "reconstruct" => {
            let coeffs = one_positional(&flags, "coefficient file path")?;
            let out = require_out(&flags, "reconstruct")?;
            let percent = match flags.percent.as_deref() {
                Some([p]) => *p,
                Some(_) => {
                    return Err(CliError::Usage(
                        "reconstruct expects exactly one --percent value".into(),
                    ))
                }
                None => return Err(CliError::Usage("--percent is required for reconstruct".into())),
            };
            commands::cmd_reconstruct(&coeffs, &config, percent, &out, flags.original.as_deref())
        }
        "curve" => {
            let image = one_positional(&flags, "input image path")?;
            let out = require_out(&flags, "curve")?;
            let percents = flags
                .percent
                .clone()
                .ok_or_else(|| CliError::Usage("--percent is required for curve".into()))?;
            commands::cmd_curve(&image, &config, &percents, &out)
        }
        "bounds" => {
            if !flags.positionals.is_empty() {
                return Err(CliError::Usage("bounds takes no positional arguments".into()));
            }
            commands::cmd_bounds(&config, grid_side, flags.oracle)
        }
        other => Err(CliError::Usage(format!("unknown command {other:?}; try --help"))),
    }
}

fn configure_threads() -> Result<(), CliError> {
    match std::env::var("NONSPAM_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                CliError::Usage(format!(
                    "NONSPAM_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
            if n == 0 {
                return Err(CliError::Usage("NONSPAM_THREADS must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("thread pool setup failed: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = configure_threads().and_then(|()| run(&args));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
