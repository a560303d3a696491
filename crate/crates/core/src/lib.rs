//! Keystroke-dynamics continuous authentication toolkit.
//!
//! The pipeline: anonymized press/release timing logs ([`events`]) are turned
//! into per-digraph feature vectors ([`features`]), a one-class SVM is
//! trained per genuine user ([`ocsvm`]), incoming keystrokes are judged in
//! fixed-size blocks against a certainty threshold ([`authenticator`]), and
//! seeded synthetic typist cohorts ([`synth`]) feed the FAR/FRR evaluation
//! protocols ([`evaluation`]).

pub mod authenticator;
pub mod evaluation;
pub mod events;
pub mod features;
pub mod ocsvm;
pub mod report;
pub mod synth;

pub use authenticator::{
    classify_outcome, run_stream, AuthConfig, AuthError, BlockVerdict, Decision, DecisionTrace,
    Outcome, RunClass,
};
pub use evaluation::{
    run_initial, run_kfold, trend_check, EvalError, EvalOutcome, FoldStrategy, InitialProtocol,
    KFoldProtocol, PairRun, RunMatrix, TrendFinding,
};
pub use events::{parse_log, EventKind, KeyEvent, KeystrokeLog, LogError, Phase, Stroke};
pub use features::{
    apply_scaler, extract_features, fit_scaler, DigraphFeatures, FeatureError, FeatureMatrix,
    Scaler,
};
pub use ocsvm::{
    parse_model, train, GammaSpec, OcsvmConfig, OcsvmError, OcsvmModel, SupportVector, Verdict,
};
pub use report::{parse_report, EvalReport, ProtocolEcho, ReportError, ReportMeta, ReportRow};
pub use synth::{
    default_cohort, generate_cohort, generate_log, parse_cohort, CohortSpec, CohortUserLogs,
    SynthError, TypistProfile,
};
