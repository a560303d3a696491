//! FAR / FRR / blocks-to-decision evaluation protocols.
//!
//! Two protocols over a cohort of users, each phase assessed separately:
//!
//! * initial: fixed 1500-stroke train / 500-stroke test split, streamed at
//!   several block sizes;
//! * k-fold: equal contiguous folds, either full cross-validation (every
//!   fold serves once as the test set) or a single seeded fold.
//!
//! Every model is tested against every user's test data, including its own.
//! Impostor runs that exhaust the data count as false accepts; genuine runs
//! that get rejected count as false rejects.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::authenticator::{
    classify_outcome, run_stream, AuthConfig, AuthError, DecisionTrace, RunClass,
};
use crate::events::{KeystrokeLog, Phase};
use crate::features::{extract_features, FeatureMatrix};
use crate::ocsvm::{train, OcsvmConfig, OcsvmError, OcsvmModel};
use crate::report::{EvalReport, ProtocolEcho, ReportMeta, ReportRow};
use crate::synth::CohortUserLogs;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialProtocol {
    pub train_strokes: usize,
    pub test_strokes: usize,
    pub block_sizes: Vec<usize>,
    pub threshold: f64,
}

impl Default for InitialProtocol {
    fn default() -> Self {
        Self {
            train_strokes: 1500,
            test_strokes: 500,
            block_sizes: vec![30, 50, 80, 100],
            threshold: 0.65,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldStrategy {
    /// Every fold serves once as the test set; results aggregate over folds.
    AllFolds,
    /// One seeded fold per (phase, user) is the test set.
    SingleRandomFold,
}

impl FoldStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            FoldStrategy::AllFolds => "all",
            FoldStrategy::SingleRandomFold => "single",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KFoldProtocol {
    pub n_folds: usize,
    pub block_size: usize,
    pub threshold: f64,
    pub fold_strategy: FoldStrategy,
    pub seed: u64,
}

impl Default for KFoldProtocol {
    fn default() -> Self {
        Self {
            n_folds: 5,
            block_size: 80,
            threshold: 0.65,
            fold_strategy: FoldStrategy::AllFolds,
            seed: 0,
        }
    }
}

/// One (model user, test user) authentication run.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRun {
    pub model_user: String,
    pub test_user: String,
    pub fold: Option<usize>,
    pub trace: DecisionTrace,
    pub class: RunClass,
}

/// Every pair run behind one report cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMatrix {
    pub phase: Phase,
    pub protocol: &'static str,
    /// Block size (initial protocol) or fold count (k-fold).
    pub param: usize,
    pub runs: Vec<PairRun>,
}

impl RunMatrix {
    pub fn impostor_runs(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.model_user != r.test_user)
            .count()
    }

    pub fn genuine_runs(&self) -> usize {
        self.runs.len() - self.impostor_runs()
    }

    pub fn count(&self, class: RunClass) -> usize {
        self.runs.iter().filter(|r| r.class == class).count()
    }

    /// Mean blocks consumed over all runs in the cell.
    pub fn avg_blocks(&self) -> f64 {
        let total: usize = self.runs.iter().map(|r| r.trace.blocks_consumed()).sum();
        total as f64 / self.runs.len() as f64
    }

    /// Mean blocks consumed over impostor runs only.
    pub fn impostor_avg_blocks(&self) -> f64 {
        let (total, n) = self
            .runs
            .iter()
            .filter(|r| r.model_user != r.test_user)
            .fold((0usize, 0usize), |(t, n), r| {
                (t + r.trace.blocks_consumed(), n + 1)
            });
        total as f64 / n as f64
    }

    fn to_row(&self) -> ReportRow {
        ReportRow {
            phase: self.phase,
            protocol: self.protocol.to_string(),
            param: self.param,
            far: self.count(RunClass::FalseAccept) as f64 / self.impostor_runs() as f64,
            frr: self.count(RunClass::FalseReject) as f64 / self.genuine_runs() as f64,
            avg_blocks: self.avg_blocks(),
            impostor_runs: self.impostor_runs(),
            genuine_runs: self.genuine_runs(),
        }
    }
}

/// Report plus the underlying run grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub matrices: Vec<RunMatrix>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("InsufficientData: {0}")]
    InsufficientData(String),
    #[error("InvalidProtocol: {0}")]
    InvalidProtocol(String),
    #[error(transparent)]
    Model(#[from] OcsvmError),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

const PHASES: [Phase; 2] = [Phase::Prompted, Phase::Freestyle];

fn phase_log(user: &CohortUserLogs, phase: Phase) -> &KeystrokeLog {
    match phase {
        Phase::Prompted => &user.prompted,
        Phase::Freestyle => &user.freestyle,
    }
}

/// Fixed train/test split streamed at every configured block size.
pub fn run_initial(
    cohort: &[CohortUserLogs],
    proto: &InitialProtocol,
    ocsvm_cfg: &OcsvmConfig,
) -> Result<EvalOutcome, EvalError> {
    if proto.block_sizes.is_empty() {
        return Err(EvalError::InvalidProtocol("no block sizes".into()));
    }
    if proto.test_strokes < *proto.block_sizes.iter().max().unwrap() {
        return Err(EvalError::InvalidProtocol(
            "test split smaller than a block".into(),
        ));
    }
    let needed = proto.train_strokes + proto.test_strokes;

    let mut skipped: Vec<String> = Vec::new();
    let mut matrices = Vec::new();
    for phase in PHASES {
        // one model and one test slice per user; block size only affects
        // streaming
        let mut prepared: Vec<(String, OcsvmModel, KeystrokeLog)> = Vec::new();
        for user in cohort {
            let log = phase_log(user, phase);
            if log.stroke_count() < needed {
                note_skip(&mut skipped, &user.user_id);
                continue;
            }
            let train_slice = log.slice_strokes(0, proto.train_strokes).expect("bounds");
            let test_slice = log
                .slice_strokes(log.stroke_count() - proto.test_strokes, proto.test_strokes)
                .expect("bounds");
            match train(&extract_features(&train_slice), ocsvm_cfg, &user.user_id) {
                Ok(model) => prepared.push((user.user_id.clone(), model, test_slice)),
                Err(OcsvmError::InsufficientData { .. }) => note_skip(&mut skipped, &user.user_id),
                Err(e) => return Err(e.into()),
            }
        }
        if prepared.len() < 2 {
            return Err(EvalError::InsufficientData(format!(
                "phase {phase}: only {} usable users",
                prepared.len()
            )));
        }

        for &block_size in &proto.block_sizes {
            let cfg = AuthConfig {
                block_size,
                threshold: proto.threshold,
                drop_partial_final_block: true,
            };
            let mut runs = Vec::with_capacity(prepared.len() * prepared.len());
            for (model_user, model, _) in &prepared {
                for (test_user, _, test_slice) in &prepared {
                    let trace = run_stream(model, test_slice, &cfg)?;
                    let class = classify_outcome(&trace, model_user == test_user);
                    runs.push(PairRun {
                        model_user: model_user.clone(),
                        test_user: test_user.clone(),
                        fold: None,
                        trace,
                        class,
                    });
                }
            }
            matrices.push(RunMatrix {
                phase,
                protocol: "initial",
                param: block_size,
                runs,
            });
        }
    }

    let report = EvalReport {
        meta: ReportMeta {
            users: cohort.len(),
            skipped_users: skipped,
            nu: ocsvm_cfg.nu,
            gamma: ocsvm_cfg.gamma,
            kkt_tol: ocsvm_cfg.kkt_tol,
            max_iter: ocsvm_cfg.max_iter,
            threshold: proto.threshold,
            echo: ProtocolEcho::Initial {
                train_strokes: proto.train_strokes,
                test_strokes: proto.test_strokes,
                block_sizes: proto.block_sizes.clone(),
            },
        },
        rows: matrices.iter().map(RunMatrix::to_row).collect(),
    };
    Ok(EvalOutcome { report, matrices })
}

/// Contiguous equal folds; under [`FoldStrategy::AllFolds`] each fold serves
/// once as the test set and results aggregate across folds.
pub fn run_kfold(
    cohort: &[CohortUserLogs],
    proto: &KFoldProtocol,
    ocsvm_cfg: &OcsvmConfig,
) -> Result<EvalOutcome, EvalError> {
    if proto.n_folds < 2 {
        return Err(EvalError::InvalidProtocol(format!(
            "need at least 2 folds, got {}",
            proto.n_folds
        )));
    }

    let mut skipped: Vec<String> = Vec::new();
    let mut matrices = Vec::new();
    let mut max_blocks_per_run = 0usize;
    for phase in PHASES {
        let mut usable: Vec<&CohortUserLogs> = Vec::new();
        for user in cohort {
            let log = phase_log(user, phase);
            let n = log.stroke_count();
            if n == 0 || !n.is_multiple_of(proto.n_folds) || n / proto.n_folds < proto.block_size {
                note_skip(&mut skipped, &user.user_id);
                continue;
            }
            max_blocks_per_run = max_blocks_per_run.max(n / proto.n_folds / proto.block_size);
            usable.push(user);
        }
        if usable.len() < 2 {
            return Err(EvalError::InsufficientData(format!(
                "phase {phase}: only {} usable users",
                usable.len()
            )));
        }

        // Each user contributes one (model, test fold) per served fold:
        // every fold under AllFolds, the seeded fold otherwise. Pair grids
        // align on the fold index under AllFolds; the single-fold reading
        // pairs each model with every user's one test fold.
        let cfg = AuthConfig {
            block_size: proto.block_size,
            threshold: proto.threshold,
            drop_partial_final_block: true,
        };
        let mut runs = Vec::new();
        match proto.fold_strategy {
            FoldStrategy::AllFolds => {
                for fold in 0..proto.n_folds {
                    let mut prepared = Vec::new();
                    for user in &usable {
                        match prepare_fold(user, phase, proto, fold, ocsvm_cfg) {
                            Ok(entry) => prepared.push(entry),
                            Err(EvalError::Model(OcsvmError::InsufficientData { .. })) => {
                                note_skip(&mut skipped, &user.user_id)
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    if prepared.len() < 2 {
                        continue;
                    }
                    run_grid(&prepared, &cfg, Some(fold), &mut runs)?;
                }
            }
            FoldStrategy::SingleRandomFold => {
                let mut prepared = Vec::new();
                for user in &usable {
                    let fold = seeded_fold(proto, phase, &user.user_id);
                    match prepare_fold(user, phase, proto, fold, ocsvm_cfg) {
                        Ok(entry) => prepared.push(entry),
                        Err(EvalError::Model(OcsvmError::InsufficientData { .. })) => {
                            note_skip(&mut skipped, &user.user_id)
                        }
                        Err(e) => return Err(e),
                    }
                }
                if prepared.len() >= 2 {
                    run_grid(&prepared, &cfg, None, &mut runs)?;
                }
            }
        }
        if runs.is_empty() {
            return Err(EvalError::InsufficientData(format!(
                "phase {phase}: no usable fold runs"
            )));
        }
        matrices.push(RunMatrix {
            phase,
            protocol: "kfold",
            param: proto.n_folds,
            runs,
        });
    }

    let report = EvalReport {
        meta: ReportMeta {
            users: cohort.len(),
            skipped_users: skipped,
            nu: ocsvm_cfg.nu,
            gamma: ocsvm_cfg.gamma,
            kkt_tol: ocsvm_cfg.kkt_tol,
            max_iter: ocsvm_cfg.max_iter,
            threshold: proto.threshold,
            echo: ProtocolEcho::KFold {
                n_folds: proto.n_folds,
                block_size: proto.block_size,
                fold_strategy: proto.fold_strategy,
                seed: proto.seed,
                max_blocks_per_run,
            },
        },
        rows: matrices.iter().map(RunMatrix::to_row).collect(),
    };
    Ok(EvalOutcome { report, matrices })
}

fn note_skip(skipped: &mut Vec<String>, user: &str) {
    if !skipped.iter().any(|u| u == user) {
        skipped.push(user.to_string());
    }
}

/// Train one user's fold model and cut out its test slice.
fn prepare_fold(
    user: &CohortUserLogs,
    phase: Phase,
    proto: &KFoldProtocol,
    fold: usize,
    ocsvm_cfg: &OcsvmConfig,
) -> Result<(String, OcsvmModel, KeystrokeLog), EvalError> {
    let log = phase_log(user, phase);
    let fold_len = log.stroke_count() / proto.n_folds;
    let test_slice = log
        .slice_strokes(fold * fold_len, fold_len)
        .expect("bounds");
    let train_matrix = holdout_features(log, fold * fold_len, fold_len);
    let model = train(&train_matrix, ocsvm_cfg, &user.user_id)?;
    Ok((user.user_id.clone(), model, test_slice))
}

fn run_grid(
    prepared: &[(String, OcsvmModel, KeystrokeLog)],
    cfg: &AuthConfig,
    fold: Option<usize>,
    runs: &mut Vec<PairRun>,
) -> Result<(), EvalError> {
    for (model_user, model, _) in prepared {
        for (test_user, _, test_slice) in prepared {
            let trace = run_stream(model, test_slice, cfg)?;
            let class = classify_outcome(&trace, model_user == test_user);
            runs.push(PairRun {
                model_user: model_user.clone(),
                test_user: test_user.clone(),
                fold,
                trace,
                class,
            });
        }
    }
    Ok(())
}

/// Training features for a fold: extract per contiguous segment so no
/// digraph spans the hole left by the test fold.
fn holdout_features(log: &KeystrokeLog, start: usize, len: usize) -> FeatureMatrix {
    let mut m = FeatureMatrix::default();
    if start > 0 {
        m.extend(&extract_features(
            &log.slice_strokes(0, start).expect("bounds"),
        ));
    }
    let tail_start = start + len;
    let tail_len = log.stroke_count() - tail_start;
    if tail_len > 0 {
        m.extend(&extract_features(
            &log.slice_strokes(tail_start, tail_len).expect("bounds"),
        ));
    }
    m
}

fn seeded_fold(proto: &KFoldProtocol, phase: Phase, user_id: &str) -> usize {
    let mut h = proto.seed ^ 0xD6E8_FEB8_6659_FD93;
    for b in user_id.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3);
    }
    h ^= match phase {
        Phase::Prompted => 0x1,
        Phase::Freestyle => 0x2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    rng.random_range(0..proto.n_folds)
}

/// Monotonicity of the block-size trade-off in an initial-protocol report:
/// FAR must not decrease and FRR must not increase as blocks grow.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendFinding {
    pub phase: Phase,
    pub metric: &'static str,
    pub pass: bool,
    /// (param, value) pairs of cells breaking the trend.
    pub offending: Vec<(usize, f64)>,
}

pub fn trend_check(report: &EvalReport) -> Vec<TrendFinding> {
    let mut findings = Vec::new();
    for phase in PHASES {
        let mut cells: Vec<&ReportRow> = report
            .rows
            .iter()
            .filter(|r| r.phase == phase && r.protocol == "initial")
            .collect();
        if cells.is_empty() {
            continue;
        }
        cells.sort_by_key(|r| r.param);
        for (metric, value, non_decreasing) in [
            (
                "far",
                (|r: &ReportRow| r.far) as fn(&ReportRow) -> f64,
                true,
            ),
            (
                "frr",
                (|r: &ReportRow| r.frr) as fn(&ReportRow) -> f64,
                false,
            ),
        ] {
            let mut offending = Vec::new();
            for w in cells.windows(2) {
                let (a, b) = (value(w[0]), value(w[1]));
                let broken = if non_decreasing { b < a } else { b > a };
                if broken {
                    offending.push((w[1].param, b));
                }
            }
            findings.push(TrendFinding {
                phase,
                metric,
                pass: offending.is_empty(),
                offending,
            });
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_cohort, CohortSpec, TypistProfile};

    fn degenerate_cohort(n: usize, strokes: usize) -> Vec<CohortUserLogs> {
        let profiles = (0..n)
            .map(|i| TypistProfile {
                user_id: format!("dup{i}"),
                hold_mean_ms: 80.0,
                hold_jitter_ms: 0.0,
                dd_mean_ms: 130.0,
                dd_jitter_ms: 0.0,
                rollover_prob: 0.0,
                drift_per_1000: 0.0,
                seed: 1,
            })
            .collect();
        generate_cohort(&CohortSpec {
            profiles,
            strokes_per_user: strokes,
        })
        .unwrap()
    }

    fn separated_pair(strokes: usize) -> Vec<CohortUserLogs> {
        let mk = |id: &str, hold: f64, dd: f64, seed: u64| TypistProfile {
            user_id: id.into(),
            hold_mean_ms: hold,
            hold_jitter_ms: 2.0,
            dd_mean_ms: dd,
            dd_jitter_ms: 2.0,
            rollover_prob: 0.0,
            drift_per_1000: 0.0,
            seed,
        };
        generate_cohort(&CohortSpec {
            profiles: vec![mk("near", 60.0, 110.0, 11), mk("far", 140.0, 260.0, 22)],
            strokes_per_user: strokes,
        })
        .unwrap()
    }

    #[test]
    fn identical_users_are_never_told_apart() {
        let cohort = degenerate_cohort(3, 2000);
        let out = run_initial(
            &cohort,
            &InitialProtocol::default(),
            &OcsvmConfig::default(),
        )
        .unwrap();
        for row in &out.report.rows {
            assert_eq!(row.far, 1.0, "block {}", row.param);
            assert_eq!(row.frr, 0.0, "block {}", row.param);
            assert_eq!(row.impostor_runs, 6);
            assert_eq!(row.genuine_runs, 3);
        }
        let kf = run_kfold(&cohort, &KFoldProtocol::default(), &OcsvmConfig::default()).unwrap();
        for row in &kf.report.rows {
            assert_eq!(row.far, 1.0);
            assert_eq!(row.frr, 0.0);
        }
    }

    #[test]
    fn far_separated_pair_rejects_impostors_on_block_one() {
        let cohort = separated_pair(2000);
        let out = run_initial(
            &cohort,
            &InitialProtocol::default(),
            &OcsvmConfig::default(),
        )
        .unwrap();
        for row in &out.report.rows {
            assert_eq!(row.far, 0.0);
            assert_eq!(row.frr, 0.0);
        }
        for m in &out.matrices {
            assert_eq!(
                m.impostor_avg_blocks(),
                1.0,
                "cell {:?}",
                (m.phase, m.param)
            );
            for run in m.runs.iter().filter(|r| r.model_user != r.test_user) {
                assert_eq!(run.trace.verdicts[0].intruder_fraction, 1.0);
            }
        }
    }

    #[test]
    fn every_impostor_digraph_is_negative_for_separated_pair() {
        // direct computation backing the block-level expectations above
        let cohort = separated_pair(2000);
        let log = &cohort[0].prompted;
        let model = train(
            &extract_features(&log.slice_strokes(0, 1500).unwrap()),
            &OcsvmConfig::default(),
            "near",
        )
        .unwrap();
        let impostor = extract_features(&cohort[1].prompted.slice_strokes(1500, 500).unwrap());
        let verdicts = model.predict_block(&impostor).unwrap();
        assert!(verdicts.iter().all(|v| v.label == -1));
    }

    #[test]
    fn accounting_is_exact() {
        let cohort = separated_pair(2000);
        let out = run_initial(
            &cohort,
            &InitialProtocol::default(),
            &OcsvmConfig::default(),
        )
        .unwrap();
        for m in &out.matrices {
            assert_eq!(
                m.count(RunClass::FalseAccept) + m.count(RunClass::TrueReject),
                m.impostor_runs()
            );
            assert_eq!(
                m.count(RunClass::FalseReject) + m.count(RunClass::TrueAccept),
                m.genuine_runs()
            );
            assert_eq!(m.impostor_runs(), 2);
            assert_eq!(m.genuine_runs(), 2);
        }
    }

    #[test]
    fn ten_folds_cap_blocks_at_two() {
        let cohort = separated_pair(2000);
        let proto = KFoldProtocol {
            n_folds: 10,
            ..KFoldProtocol::default()
        };
        let out = run_kfold(&cohort, &proto, &OcsvmConfig::default()).unwrap();
        let max_blocks = out
            .matrices
            .iter()
            .flat_map(|m| m.runs.iter())
            .map(|r| r.trace.blocks_consumed())
            .max()
            .unwrap();
        assert_eq!(max_blocks, 2);
        // a 200-stroke fold holds exactly two 80-stroke blocks
        assert!(matches!(
            out.report.meta.echo,
            ProtocolEcho::KFold {
                max_blocks_per_run: 2,
                ..
            }
        ));
        // every fold of every pair ran: 10 folds x (2 genuine + 2 impostor)
        for m in &out.matrices {
            assert_eq!(m.runs.len(), 40);
        }
    }

    #[test]
    fn single_random_fold_runs_once_per_user() {
        let cohort = separated_pair(2000);
        let proto = KFoldProtocol {
            fold_strategy: FoldStrategy::SingleRandomFold,
            seed: 3,
            ..KFoldProtocol::default()
        };
        let out = run_kfold(&cohort, &proto, &OcsvmConfig::default()).unwrap();
        for m in &out.matrices {
            assert_eq!(m.genuine_runs(), 2);
        }
        let again = run_kfold(&cohort, &proto, &OcsvmConfig::default()).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn reports_are_deterministic() {
        let cohort = separated_pair(2000);
        let a = run_initial(
            &cohort,
            &InitialProtocol::default(),
            &OcsvmConfig::default(),
        )
        .unwrap();
        let b = run_initial(
            &cohort,
            &InitialProtocol::default(),
            &OcsvmConfig::default(),
        )
        .unwrap();
        assert_eq!(a.report.serialize(), b.report.serialize());
    }

    #[test]
    fn short_users_are_skipped_and_noted() {
        let mut cohort = separated_pair(2000);
        cohort.extend(degenerate_cohort(1, 500));
        let out = run_initial(
            &cohort,
            &InitialProtocol::default(),
            &OcsvmConfig::default(),
        )
        .unwrap();
        assert_eq!(out.report.meta.skipped_users, vec!["dup0".to_string()]);
        assert_eq!(out.report.rows[0].genuine_runs, 2);
    }

    #[test]
    fn trend_check_passes_on_expected_direction() {
        // a block-size sweep where FAR grows and FRR shrinks
        let rows = |vals: [(usize, f64, f64); 4], phase| {
            vals.map(|(bs, far, frr)| ReportRow {
                phase,
                protocol: "initial".into(),
                param: bs,
                far,
                frr,
                avg_blocks: 2.5,
                impostor_runs: 380,
                genuine_runs: 20,
            })
        };
        let mut report_rows = rows(
            [
                (30, 0.0025, 0.05),
                (50, 0.015, 0.035),
                (80, 0.04, 0.0175),
                (100, 0.0525, 0.0125),
            ],
            Phase::Prompted,
        )
        .to_vec();
        report_rows.extend(rows(
            [
                (30, 0.0, 0.05),
                (50, 0.0, 0.04),
                (80, 0.01, 0.03),
                (100, 0.015, 0.0225),
            ],
            Phase::Freestyle,
        ));
        let report = EvalReport {
            meta: test_meta(),
            rows: report_rows,
        };
        let findings = trend_check(&report);
        assert_eq!(findings.len(), 4);
        assert!(findings.iter().all(|f| f.pass), "{findings:?}");
    }

    #[test]
    fn trend_check_flags_violations_and_accepts_constants() {
        let mk = |param, far, frr| ReportRow {
            phase: Phase::Prompted,
            protocol: "initial".into(),
            param,
            far,
            frr,
            avg_blocks: 2.0,
            impostor_runs: 10,
            genuine_runs: 5,
        };
        let constant = EvalReport {
            meta: test_meta(),
            rows: vec![mk(30, 0.02, 0.02), mk(50, 0.02, 0.02)],
        };
        assert!(trend_check(&constant).iter().all(|f| f.pass));

        let broken = EvalReport {
            meta: test_meta(),
            rows: vec![mk(30, 0.05, 0.01), mk(50, 0.02, 0.03)],
        };
        let findings = trend_check(&broken);
        let far = findings.iter().find(|f| f.metric == "far").unwrap();
        assert!(!far.pass);
        assert_eq!(far.offending, vec![(50, 0.02)]);
        let frr = findings.iter().find(|f| f.metric == "frr").unwrap();
        assert!(!frr.pass);
    }

    fn test_meta() -> ReportMeta {
        ReportMeta {
            users: 20,
            skipped_users: vec![],
            nu: 0.1,
            gamma: crate::ocsvm::GammaSpec::ScaleHeuristic,
            kkt_tol: 1e-3,
            max_iter: 100_000,
            threshold: 0.65,
            echo: ProtocolEcho::Initial {
                train_strokes: 1500,
                test_strokes: 500,
                block_sizes: vec![30, 50, 80, 100],
            },
        }
    }
}
