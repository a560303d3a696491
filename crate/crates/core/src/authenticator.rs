//! Block-based continuous-authentication decision loop.
//!
//! Test strokes are consumed in fixed-size blocks. Each block's digraphs are
//! classified by the user's model; when the fraction labeled intruder reaches
//! the certainty threshold the stream is rejected, otherwise it continues
//! until the data runs out. Digraphs never span block boundaries, so a block
//! of B strokes contributes B-1 samples.

use std::fmt::Write as _;

use thiserror::Error;

use crate::events::KeystrokeLog;
use crate::features::extract_features;
use crate::ocsvm::{OcsvmError, OcsvmModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthConfig {
    /// Strokes per block. At least 2, so every block holds a digraph.
    pub block_size: usize,
    /// Reject when the block's intruder fraction is >= this, in (0, 1).
    pub threshold: f64,
    /// Drop a trailing block with fewer than `block_size` strokes.
    pub drop_partial_final_block: bool,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self {
            block_size: 80,
            threshold: 0.65,
            drop_partial_final_block: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockVerdict {
    pub block_index: usize,
    /// Fraction of the block's digraph verdicts labeled -1.
    pub intruder_fraction: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Rejected,
    DataExhausted,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Rejected => "Rejected",
            Outcome::DataExhausted => "DataExhausted",
        }
    }
}

/// One authentication run: the sequence of block verdicts and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTrace {
    pub model_user: String,
    pub test_user: String,
    pub verdicts: Vec<BlockVerdict>,
    pub outcome: Outcome,
}

impl DecisionTrace {
    pub fn blocks_consumed(&self) -> usize {
        self.verdicts.len()
    }

    /// CSV dump plus an `outcome=... blocks=N` trailer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("block_index,intruder_fraction,decision\n");
        for v in &self.verdicts {
            let decision = match v.decision {
                Decision::Continue => "Continue",
                Decision::Reject => "Reject",
            };
            let _ = writeln!(
                out,
                "{},{},{}",
                v.block_index, v.intruder_fraction, decision
            );
        }
        let _ = writeln!(
            out,
            "outcome={} blocks={}",
            self.outcome.as_str(),
            self.blocks_consumed()
        );
        out
    }
}

/// Run classification against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunClass {
    TrueReject,
    FalseAccept,
    FalseReject,
    TrueAccept,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuthError {
    #[error("InsufficientData: test log has {got} strokes, one block needs {need}")]
    InsufficientData { need: usize, got: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] OcsvmError),
}

pub fn validate_config(cfg: &AuthConfig) -> Result<(), AuthError> {
    if cfg.block_size < 2 {
        return Err(AuthError::InvalidConfig(format!(
            "block_size must be >= 2, got {}",
            cfg.block_size
        )));
    }
    if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
        return Err(AuthError::InvalidConfig(format!(
            "threshold must be in (0, 1), got {}",
            cfg.threshold
        )));
    }
    Ok(())
}

/// Stream a test log through a model block by block, stopping at the first
/// rejection or when the strokes run out.
pub fn run_stream(
    model: &OcsvmModel,
    test_log: &KeystrokeLog,
    cfg: &AuthConfig,
) -> Result<DecisionTrace, AuthError> {
    validate_config(cfg)?;
    let total = test_log.stroke_count();
    if total < cfg.block_size {
        return Err(AuthError::InsufficientData {
            need: cfg.block_size,
            got: total,
        });
    }

    let mut verdicts = Vec::new();
    let mut outcome = Outcome::DataExhausted;
    let mut start = 0usize;
    let mut block_index = 0usize;
    while start < total {
        let len = cfg.block_size.min(total - start);
        if len < cfg.block_size && cfg.drop_partial_final_block {
            break;
        }
        if len < 2 {
            break; // a lone stroke yields no digraph
        }
        let block = test_log
            .slice_strokes(start, len)
            .expect("block bounds checked");
        let samples = extract_features(&block);
        let labels = model.predict_block(&samples)?;
        let intruders = labels.iter().filter(|v| v.label == -1).count();
        let intruder_fraction = intruders as f64 / labels.len() as f64;
        let decision = if intruder_fraction >= cfg.threshold {
            Decision::Reject
        } else {
            Decision::Continue
        };
        verdicts.push(BlockVerdict {
            block_index,
            intruder_fraction,
            decision,
        });
        if decision == Decision::Reject {
            outcome = Outcome::Rejected;
            break;
        }
        start += len;
        block_index += 1;
    }

    Ok(DecisionTrace {
        model_user: model.train_user.clone(),
        test_user: test_log.user_id().to_string(),
        verdicts,
        outcome,
    })
}

/// Map a finished run to its confusion-matrix cell. Impostor runs that
/// exhaust the data are false accepts; genuine runs that get rejected are
/// false rejects.
pub fn classify_outcome(trace: &DecisionTrace, ground_truth_same_user: bool) -> RunClass {
    match (ground_truth_same_user, trace.outcome) {
        (false, Outcome::Rejected) => RunClass::TrueReject,
        (false, Outcome::DataExhausted) => RunClass::FalseAccept,
        (true, Outcome::Rejected) => RunClass::FalseReject,
        (true, Outcome::DataExhausted) => RunClass::TrueAccept,
    }
}
