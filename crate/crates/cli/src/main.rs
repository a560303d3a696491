//! `keydyn` — keystroke-dynamics continuous-authentication pipelines.
//!
//! Exit codes: 0 success (auth: accepted), 1 validation failure (auth:
//! rejected), 2 bad arguments or missing files, 3 internal errors.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use keydyn_core::{
    default_cohort, extract_features, generate_log, parse_log, parse_model, run_initial, run_kfold,
    run_stream, train, AuthConfig, CohortUserLogs, EvalError, EvalOutcome, FoldStrategy, GammaSpec,
    InitialProtocol, KFoldProtocol, KeystrokeLog, OcsvmConfig, OcsvmError, Outcome, Phase,
    SynthError,
};

#[derive(Parser)]
#[command(
    name = "keydyn",
    version,
    about = "Keystroke-dynamics continuous authentication"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a keystroke log.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Train a one-class SVM on a stroke range of a log.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Stroke range `start:len`; the whole log when omitted.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        nu: f64,
        /// RBF width: a positive number, or `scale` for the data heuristic.
        #[arg(long, default_value = "scale")]
        gamma: String,
        #[arg(long, default_value_t = 1e-3)]
        kkt_tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream a log through a model block by block.
    Auth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 80)]
        block_size: usize,
        #[arg(long, default_value_t = 0.65)]
        threshold: f64,
    },
    /// Generate a seeded synthetic cohort (two phases per user).
    Synth {
        #[arg(long)]
        users: usize,
        #[arg(long, default_value_t = 2000)]
        strokes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run an evaluation protocol over a cohort directory.
    Eval {
        #[arg(long)]
        cohort_dir: PathBuf,
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::All)]
        fold_strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        nu: f64,
        #[arg(long, default_value = "scale")]
        gamma: String,
        #[arg(long, default_value_t = 0.65)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also render the report as Markdown tables.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Initial,
    Kfold,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    All,
    Single,
}

enum CliError {
    Usage(String),
    Validation(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Validate { input } => {
            let log = load_log(&input)?;
            println!(
                "strokes={} duration_ms={}",
                log.stroke_count(),
                log.duration_ms()
            );
            Ok(0)
        }
        Command::Train {
            input,
            range,
            nu,
            gamma,
            kkt_tol,
            max_iter,
            out,
        } => {
            let cfg = ocsvm_config(nu, &gamma, kkt_tol, max_iter)?;
            let log = load_log(&input)?;
            let slice = match range {
                Some(spec) => {
                    let (start, len) = parse_range(&spec)?;
                    log.slice_strokes(start, len)
                        .map_err(|e| CliError::Validation(e.to_string()))?
                }
                None => log,
            };
            let model =
                train(&extract_features(&slice), &cfg, slice.user_id()).map_err(model_error)?;
            if !model.converged {
                eprintln!("warning: solver hit max_iter before reaching kkt_tol");
            }
            write_atomic(&out, model.serialize().as_bytes())?;
            println!("model written to {}", out.display());
            Ok(0)
        }
        Command::Auth {
            model,
            input,
            block_size,
            threshold,
        } => {
            check_threshold(threshold)?;
            if block_size < 2 {
                return Err(CliError::Usage("block-size must be at least 2".into()));
            }
            let model = parse_model(&read_text(&model)?).map_err(model_error)?;
            let log = load_log(&input)?;
            let cfg = AuthConfig {
                block_size,
                threshold,
                drop_partial_final_block: true,
            };
            let trace =
                run_stream(&model, &log, &cfg).map_err(|e| CliError::Validation(e.to_string()))?;
            print!("{}", trace.to_csv());
            Ok(match trace.outcome {
                Outcome::DataExhausted => 0,
                Outcome::Rejected => 1,
            })
        }
        Command::Synth {
            users,
            strokes,
            seed,
            out_dir,
        } => {
            let mut spec = default_cohort(users, seed).map_err(synth_error)?;
            spec.strokes_per_user = strokes;
            fs::create_dir_all(&out_dir).map_err(|e| {
                CliError::Internal(format!("cannot create {}: {e}", out_dir.display()))
            })?;
            write_atomic(&out_dir.join("cohort.txt"), spec.serialize().as_bytes())?;
            let mut files = 1usize;
            for profile in &spec.profiles {
                for phase in [Phase::Prompted, Phase::Freestyle] {
                    let log = generate_log(profile, strokes, phase).map_err(synth_error)?;
                    let name = format!("{}_{}.log", profile.user_id, phase);
                    write_atomic(&out_dir.join(name), log.serialize().as_bytes())?;
                    files += 1;
                }
            }
            println!("wrote {files} files to {}", out_dir.display());
            Ok(0)
        }
        Command::Eval {
            cohort_dir,
            protocol,
            folds,
            fold_strategy,
            seed,
            nu,
            gamma,
            threshold,
            out,
            markdown,
        } => {
            check_threshold(threshold)?;
            let cfg = ocsvm_config(nu, &gamma, 1e-3, 100_000)?;
            let (cohort, missing_phase) = load_cohort_dir(&cohort_dir)?;
            let outcome: EvalOutcome = match protocol {
                ProtocolArg::Initial => {
                    let proto = InitialProtocol {
                        threshold,
                        ..InitialProtocol::default()
                    };
                    run_initial(&cohort, &proto, &cfg).map_err(eval_error)?
                }
                ProtocolArg::Kfold => {
                    let proto = KFoldProtocol {
                        n_folds: folds,
                        threshold,
                        fold_strategy: match fold_strategy {
                            StrategyArg::All => FoldStrategy::AllFolds,
                            StrategyArg::Single => FoldStrategy::SingleRandomFold,
                        },
                        seed,
                        ..KFoldProtocol::default()
                    };
                    run_kfold(&cohort, &proto, &cfg).map_err(eval_error)?
                }
            };
            let mut report = outcome.report;
            report.meta.users = cohort.len() + missing_phase.len();
            for user in missing_phase {
                if !report.meta.skipped_users.contains(&user) {
                    report.meta.skipped_users.push(user);
                }
            }
            write_atomic(&out, report.serialize().as_bytes())?;
            println!("report written to {}", out.display());
            if let Some(md) = markdown {
                write_atomic(&md, report.to_markdown().as_bytes())?;
            }
            Ok(0)
        }
    }
}

fn check_threshold(threshold: f64) -> Result<(), CliError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "threshold must be in (0, 1), got {threshold}"
        )))
    }
}

fn ocsvm_config(
    nu: f64,
    gamma: &str,
    kkt_tol: f64,
    max_iter: usize,
) -> Result<OcsvmConfig, CliError> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(CliError::Usage(format!("nu must be in (0, 1], got {nu}")));
    }
    let gamma = if gamma == "scale" {
        GammaSpec::ScaleHeuristic
    } else {
        match gamma.parse::<f64>() {
            Ok(g) if g.is_finite() && g > 0.0 => GammaSpec::Fixed(g),
            _ => {
                return Err(CliError::Usage(format!(
                    "gamma must be `scale` or a positive number, got {gamma:?}"
                )))
            }
        }
    };
    if !(kkt_tol > 0.0 && kkt_tol.is_finite()) {
        return Err(CliError::Usage("kkt-tol must be positive".into()));
    }
    Ok(OcsvmConfig {
        nu,
        gamma,
        kkt_tol,
        max_iter,
    })
}

fn parse_range(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("range must be `start:len`, got {spec:?}"));
    let (start, len) = spec.split_once(':').ok_or_else(bad)?;
    Ok((
        start.parse().map_err(|_| bad())?,
        len.parse().map_err(|_| bad())?,
    ))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            CliError::Usage(format!("{}: file not found", path.display()))
        }
        _ => CliError::Internal(format!("cannot read {}: {e}", path.display())),
    })
}

fn load_log(path: &Path) -> Result<KeystrokeLog, CliError> {
    parse_log(&read_text(path)?).map_err(|e| CliError::Validation(e.to_string()))
}

fn model_error(e: OcsvmError) -> CliError {
    match e {
        OcsvmError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

fn synth_error(e: SynthError) -> CliError {
    match e {
        SynthError::TooFewUsers(_) | SynthError::TooManyUsers { .. } => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Validation(e.to_string()),
    }
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::InvalidProtocol(_) => CliError::Usage(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

/// Load every `*.log` in a directory, pairing phases per user. Returns the
/// usable cohort (sorted by user id) and users missing a phase.
fn load_cohort_dir(dir: &Path) -> Result<(Vec<CohortUserLogs>, Vec<String>), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            CliError::Usage(format!("{}: cohort directory not found", dir.display()))
        }
        _ => CliError::Internal(format!("cannot read {}: {e}", dir.display())),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "log"))
        .collect();
    paths.sort();

    let mut by_user: BTreeMap<String, (Option<KeystrokeLog>, Option<KeystrokeLog>)> =
        BTreeMap::new();
    for path in &paths {
        let log = load_log(path)?;
        let slot = by_user.entry(log.user_id().to_string()).or_default();
        match log.phase() {
            Phase::Prompted => slot.0 = Some(log),
            Phase::Freestyle => slot.1 = Some(log),
        }
    }
    if by_user.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no .log files found",
            dir.display()
        )));
    }

    let mut cohort = Vec::new();
    let mut missing = Vec::new();
    for (user_id, logs) in by_user {
        match logs {
            (Some(prompted), Some(freestyle)) => cohort.push(CohortUserLogs {
                user_id,
                prompted,
                freestyle,
            }),
            _ => missing.push(user_id),
        }
    }
    Ok((cohort, missing))
}

/// Write via a sibling temp file and rename, so interrupted runs never leave
/// a partial file at the destination.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}
