//! Evaluation report files: `keydyn-report v1`.
//!
//! A report is self-describing: the header echoes every hyperparameter that
//! produced it, then one CSV section carries the per-cell metrics. Reals are
//! printed as shortest round-trip decimals so files parse back bit-exactly.

use std::fmt::Write as _;

use thiserror::Error;

use crate::evaluation::FoldStrategy;
use crate::events::Phase;
use crate::ocsvm::GammaSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub phase: Phase,
    pub protocol: String,
    /// Block size (initial protocol) or fold count (k-fold).
    pub param: usize,
    pub far: f64,
    pub frr: f64,
    pub avg_blocks: f64,
    pub impostor_runs: usize,
    pub genuine_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolEcho {
    Initial {
        train_strokes: usize,
        test_strokes: usize,
        block_sizes: Vec<usize>,
    },
    KFold {
        n_folds: usize,
        block_size: usize,
        fold_strategy: FoldStrategy,
        seed: u64,
        /// Block capacity of a test fold: floor(fold length / block size).
        max_blocks_per_run: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub users: usize,
    pub skipped_users: Vec<String>,
    pub nu: f64,
    pub gamma: GammaSpec,
    pub kkt_tol: f64,
    pub max_iter: usize,
    pub threshold: f64,
    pub echo: ProtocolEcho,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("VersionMismatch: expected `keydyn-report v1`, found {found:?}")]
    VersionMismatch { found: String },
    #[error("CorruptReport: {0}")]
    CorruptReport(String),
}

const CSV_HEADER: &str = "phase,protocol,param,far,frr,avg_blocks,impostor_runs,genuine_runs";

fn gamma_str(g: GammaSpec) -> String {
    match g {
        GammaSpec::ScaleHeuristic => "scale".to_string(),
        GammaSpec::Fixed(v) => format!("{v}"),
    }
}

fn parse_gamma(s: &str) -> Option<GammaSpec> {
    if s == "scale" {
        return Some(GammaSpec::ScaleHeuristic);
    }
    let v: f64 = s.parse().ok()?;
    (v.is_finite() && v > 0.0).then_some(GammaSpec::Fixed(v))
}

impl EvalReport {
    pub fn serialize(&self) -> String {
        let m = &self.meta;
        let mut out = String::from("keydyn-report v1\n");
        let protocol = match m.echo {
            ProtocolEcho::Initial { .. } => "initial",
            ProtocolEcho::KFold { .. } => "kfold",
        };
        let _ = writeln!(out, "protocol={protocol}");
        let _ = writeln!(out, "users={}", m.users);
        let _ = writeln!(out, "skipped_users={}", m.skipped_users.join(","));
        let _ = writeln!(out, "nu={}", m.nu);
        let _ = writeln!(out, "gamma={}", gamma_str(m.gamma));
        let _ = writeln!(out, "kkt_tol={}", m.kkt_tol);
        let _ = writeln!(out, "max_iter={}", m.max_iter);
        let _ = writeln!(out, "threshold={}", m.threshold);
        let _ = writeln!(out, "drop_partial=true");
        let _ = writeln!(out, "avg_blocks=all_runs");
        match &m.echo {
            ProtocolEcho::Initial {
                train_strokes,
                test_strokes,
                block_sizes,
            } => {
                let _ = writeln!(out, "train_strokes={train_strokes}");
                let _ = writeln!(out, "test_strokes={test_strokes}");
                let sizes: Vec<String> = block_sizes.iter().map(|b| b.to_string()).collect();
                let _ = writeln!(out, "block_sizes={}", sizes.join(","));
            }
            ProtocolEcho::KFold {
                n_folds,
                block_size,
                fold_strategy,
                seed,
                max_blocks_per_run,
            } => {
                let _ = writeln!(out, "folds={n_folds}");
                let _ = writeln!(out, "block_size={block_size}");
                let _ = writeln!(out, "fold_strategy={}", fold_strategy.as_str());
                let _ = writeln!(out, "seed={seed}");
                let _ = writeln!(out, "max_blocks_per_run={max_blocks_per_run}");
            }
        }
        let _ = writeln!(out, "section=results");
        let _ = writeln!(out, "{CSV_HEADER}");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.phase,
                r.protocol,
                r.param,
                r.far,
                r.frr,
                r.avg_blocks,
                r.impostor_runs,
                r.genuine_runs
            );
        }
        out
    }

    /// Markdown rendering: one table
    /// per phase for the initial protocol, one row per (phase, folds) for
    /// k-fold.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        match &self.meta.echo {
            ProtocolEcho::Initial { block_sizes, .. } => {
                for phase in [Phase::Prompted, Phase::Freestyle] {
                    let cells: Vec<&ReportRow> = block_sizes
                        .iter()
                        .filter_map(|bs| {
                            self.rows
                                .iter()
                                .find(|r| r.phase == phase && r.param == *bs)
                        })
                        .collect();
                    if cells.is_empty() {
                        continue;
                    }
                    let _ = writeln!(out, "### {phase} phase\n");
                    let _ = write!(out, "| | ");
                    for c in &cells {
                        let _ = write!(out, "{} | ", c.param);
                    }
                    let _ = writeln!(out);
                    let _ = writeln!(out, "|{}", "---|".repeat(cells.len() + 1));
                    for (name, get) in [
                        ("FAR", (|r: &ReportRow| r.far) as fn(&ReportRow) -> f64),
                        ("FRR", |r| r.frr),
                        ("Avg. blocks", |r| r.avg_blocks),
                    ] {
                        let _ = write!(out, "| {name} | ");
                        for c in &cells {
                            let _ = write!(out, "{:.4} | ", get(c));
                        }
                        let _ = writeln!(out);
                    }
                    let _ = writeln!(out);
                }
            }
            ProtocolEcho::KFold { .. } => {
                let _ = writeln!(out, "| Phase | Folds | FAR | FRR | Avg. blocks |");
                let _ = writeln!(out, "|---|---|---|---|---|");
                for r in &self.rows {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {:.4} | {:.4} | {:.4} |",
                        r.phase, r.param, r.far, r.frr, r.avg_blocks
                    );
                }
            }
        }
        out
    }
}

/// Parse a `keydyn-report v1` file.
pub fn parse_report(text: &str) -> Result<EvalReport, ReportError> {
    let corrupt = |m: String| ReportError::CorruptReport(m);
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "keydyn-report v1" {
        if header.starts_with("keydyn-report ") {
            return Err(ReportError::VersionMismatch {
                found: header.to_string(),
            });
        }
        return Err(corrupt("missing `keydyn-report v1` header".into()));
    }

    let mut field = |key: &str| -> Result<String, ReportError> {
        let line = lines
            .next()
            .ok_or_else(|| ReportError::CorruptReport(format!("missing {key}= line")))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| ReportError::CorruptReport(format!("expected {key}=, got {line:?}")))
    };

    let protocol = field("protocol")?;
    let users: usize = field("users")?
        .parse()
        .map_err(|_| corrupt("bad users".into()))?;
    let skipped_raw = field("skipped_users")?;
    let skipped_users: Vec<String> = if skipped_raw.is_empty() {
        Vec::new()
    } else {
        skipped_raw.split(',').map(str::to_string).collect()
    };
    let nu: f64 = field("nu")?.parse().map_err(|_| corrupt("bad nu".into()))?;
    let gamma = parse_gamma(&field("gamma")?).ok_or_else(|| corrupt("bad gamma".into()))?;
    let kkt_tol: f64 = field("kkt_tol")?
        .parse()
        .map_err(|_| corrupt("bad kkt_tol".into()))?;
    let max_iter: usize = field("max_iter")?
        .parse()
        .map_err(|_| corrupt("bad max_iter".into()))?;
    let threshold: f64 = field("threshold")?
        .parse()
        .map_err(|_| corrupt("bad threshold".into()))?;
    if field("drop_partial")? != "true" {
        return Err(corrupt("unexpected drop_partial".into()));
    }
    if field("avg_blocks")? != "all_runs" {
        return Err(corrupt("unexpected avg_blocks rule".into()));
    }

    let echo = match protocol.as_str() {
        "initial" => {
            let train_strokes = field("train_strokes")?
                .parse()
                .map_err(|_| corrupt("bad train_strokes".into()))?;
            let test_strokes = field("test_strokes")?
                .parse()
                .map_err(|_| corrupt("bad test_strokes".into()))?;
            let block_sizes = field("block_sizes")?
                .split(',')
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| corrupt("bad block_sizes".into()))?;
            ProtocolEcho::Initial {
                train_strokes,
                test_strokes,
                block_sizes,
            }
        }
        "kfold" => {
            let n_folds = field("folds")?
                .parse()
                .map_err(|_| corrupt("bad folds".into()))?;
            let block_size = field("block_size")?
                .parse()
                .map_err(|_| corrupt("bad block_size".into()))?;
            let fold_strategy = match field("fold_strategy")?.as_str() {
                "all" => FoldStrategy::AllFolds,
                "single" => FoldStrategy::SingleRandomFold,
                other => return Err(corrupt(format!("bad fold_strategy {other:?}"))),
            };
            let seed = field("seed")?
                .parse()
                .map_err(|_| corrupt("bad seed".into()))?;
            let max_blocks_per_run = field("max_blocks_per_run")?
                .parse()
                .map_err(|_| corrupt("bad max_blocks_per_run".into()))?;
            ProtocolEcho::KFold {
                n_folds,
                block_size,
                fold_strategy,
                seed,
                max_blocks_per_run,
            }
        }
        other => return Err(corrupt(format!("unknown protocol {other:?}"))),
    };

    if field("section")?.as_str() != "results" {
        return Err(corrupt("expected section=results".into()));
    }
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(corrupt(format!("bad csv header {other:?}"))),
    }

    let mut rows = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(corrupt(format!("bad row {line:?}")));
        }
        let phase = match f[0] {
            "prompted" => Phase::Prompted,
            "freestyle" => Phase::Freestyle,
            other => return Err(corrupt(format!("bad phase {other:?}"))),
        };
        let parse_f = |s: &str| -> Result<f64, ReportError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ReportError::CorruptReport(format!("bad real {s:?}")))
        };
        let parse_u = |s: &str| -> Result<usize, ReportError> {
            s.parse()
                .map_err(|_| ReportError::CorruptReport(format!("bad count {s:?}")))
        };
        rows.push(ReportRow {
            phase,
            protocol: f[1].to_string(),
            param: parse_u(f[2])?,
            far: parse_f(f[3])?,
            frr: parse_f(f[4])?,
            avg_blocks: parse_f(f[5])?,
            impostor_runs: parse_u(f[6])?,
            genuine_runs: parse_u(f[7])?,
        });
    }

    Ok(EvalReport {
        meta: ReportMeta {
            users,
            skipped_users,
            nu,
            gamma,
            kkt_tol,
            max_iter,
            threshold,
            echo,
        },
        rows,
    })
}
