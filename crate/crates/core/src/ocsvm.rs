//! One-class SVM (nu-formulation, RBF kernel), trained from scratch.
//!
//! The dual
//!
//! ```text
//!     minimize    1/2 a' Q a      Q_ij = exp(-gamma |x_i - x_j|^2)
//!     subject to  sum a = 1,      0 <= a_i <= 1/(nu l)
//! ```
//!
//! is solved by SMO-style two-coordinate updates that keep `sum a = 1`
//! invariant: each step moves mass between the pair of coordinates with the
//! maximal KKT violation, ties broken by lowest index, so training is fully
//! deterministic. The decision function is
//! `f(x) = sum_i a_i k(x_i, x) - rho`, with `rho` set so that on-boundary
//! support vectors score zero.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{self, DigraphFeatures, FeatureMatrix, Scaler};

/// RBF width: fixed, or derived from the scaled training data as
/// `1 / (4 * mean per-column variance)` (1/4 after clean standardization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Fixed(f64),
    ScaleHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcsvmConfig {
    /// Upper bound on the training outlier fraction, lower bound on the
    /// support-vector fraction. In (0, 1].
    pub nu: f64,
    pub gamma: GammaSpec,
    /// Solver stopping tolerance on the KKT gap.
    pub kkt_tol: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
}

impl Default for OcsvmConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            gamma: GammaSpec::ScaleHeuristic,
            kkt_tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

/// Support vectors are training points whose multiplier exceeds this floor.
pub const ALPHA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportVector {
    pub alpha: f64,
    /// Coordinates in scaled feature space.
    pub x: [f64; 4],
}

/// Trained one-class SVM for a single genuine user.
#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    pub train_user: String,
    pub nu: f64,
    /// Resolved RBF width (always concrete, even when trained with the
    /// scale heuristic).
    pub gamma: f64,
    pub rho: f64,
    pub scaler: Scaler,
    /// Hex SHA-256 of the raw training matrix.
    pub train_digest: String,
    pub support: Vec<SupportVector>,
    /// False when training hit `max_iter` with the KKT gap above tolerance.
    /// Not persisted; parsing a model file yields `true`.
    pub converged: bool,
}

/// Per-sample classification: +1 genuine, -1 intruder. Ties at score zero
/// resolve to +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub label: i8,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcsvmError {
    #[error("InsufficientData: need at least {need} training rows, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("NonFiniteInput")]
    NonFiniteInput,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("VersionMismatch: expected `keydyn-model v1`, found {found:?}")]
    VersionMismatch { found: String },
    #[error("CorruptModel: {0}")]
    CorruptModel(String),
}

fn rbf(a: &[f64; 4], b: &[f64; 4], gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for c in 0..4 {
        let d = a[c] - b[c];
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

fn resolve_gamma(spec: GammaSpec, scaled: &[[f64; 4]]) -> f64 {
    match spec {
        GammaSpec::Fixed(g) => g,
        GammaSpec::ScaleHeuristic => {
            let n = scaled.len() as f64;
            let mut mean = [0.0f64; 4];
            for r in scaled {
                for c in 0..4 {
                    mean[c] += r[c];
                }
            }
            for m in &mut mean {
                *m /= n;
            }
            let mut var_sum = 0.0;
            for r in scaled {
                for c in 0..4 {
                    let d = r[c] - mean[c];
                    var_sum += d * d;
                }
            }
            let mean_var = var_sum / (4.0 * n);
            if mean_var > 0.0 {
                1.0 / (4.0 * mean_var)
            } else {
                0.25
            }
        }
    }
}

/// Train on the raw (unscaled) feature matrix of the genuine user. The
/// scaler is fitted here and stored in the model; inputs to [`OcsvmModel::decision`]
/// are scaled automatically.
pub fn train(
    features_raw: &FeatureMatrix,
    cfg: &OcsvmConfig,
    train_user: &str,
) -> Result<OcsvmModel, OcsvmError> {
    if !(cfg.nu > 0.0 && cfg.nu <= 1.0) {
        return Err(OcsvmError::InvalidConfig(format!(
            "nu must be in (0, 1], got {}",
            cfg.nu
        )));
    }
    if let GammaSpec::Fixed(g) = cfg.gamma {
        if !(g > 0.0 && g.is_finite()) {
            return Err(OcsvmError::InvalidConfig(format!(
                "gamma must be positive, got {g}"
            )));
        }
    }
    if cfg.kkt_tol.is_nan() || cfg.kkt_tol <= 0.0 {
        return Err(OcsvmError::InvalidConfig("kkt_tol must be positive".into()));
    }
    let l = features_raw.len();
    let need = 4usize.max((1.0 / cfg.nu).ceil() as usize);
    if l < need {
        return Err(OcsvmError::InsufficientData { need, got: l });
    }
    if features_raw.rows().iter().any(|r| !r.is_finite()) {
        return Err(OcsvmError::NonFiniteInput);
    }

    let scaler = features::fit_scaler(features_raw)
        .map_err(|_| OcsvmError::InsufficientData { need, got: l })?;
    let scaled: Vec<[f64; 4]> = features_raw
        .rows()
        .iter()
        .map(|r| features::scale_row(&r.as_array(), &scaler))
        .collect();
    let gamma = resolve_gamma(cfg.gamma, &scaled);

    let (alpha, grad, converged) = smo_solve(&scaled, cfg.nu, gamma, cfg.kkt_tol, cfg.max_iter);
    let cap = 1.0 / (cfg.nu * l as f64);
    let rho = compute_rho(&alpha, &grad, cap);

    let support = alpha
        .iter()
        .zip(&scaled)
        .filter(|(&a, _)| a > ALPHA_FLOOR)
        .map(|(&a, x)| SupportVector { alpha: a, x: *x })
        .collect();

    Ok(OcsvmModel {
        train_user: train_user.to_string(),
        nu: cfg.nu,
        gamma,
        rho,
        scaler,
        train_digest: matrix_digest(features_raw),
        support,
        converged,
    })
}

/// Deterministic maximal-violating-pair SMO. Returns the multipliers, their
/// final gradient `Q a`, and whether the KKT gap closed below tolerance.
fn smo_solve(
    points: &[[f64; 4]],
    nu: f64,
    gamma: f64,
    kkt_tol: f64,
    max_iter: usize,
) -> (Vec<f64>, Vec<f64>, bool) {
    let l = points.len();
    let nl = nu * l as f64;
    let cap = 1.0 / nl;

    let mut q = vec![0.0f64; l * l];
    for i in 0..l {
        q[i * l + i] = 1.0;
        for j in 0..i {
            let k = rbf(&points[i], &points[j], gamma);
            q[i * l + j] = k;
            q[j * l + i] = k;
        }
    }

    // Initial feasible point: the first floor(nu*l) coordinates at the cap,
    // the remainder of the unit mass on the next one.
    let mut alpha = vec![0.0f64; l];
    let n_full = (nl.floor() as usize).min(l);
    for a in alpha.iter_mut().take(n_full) {
        *a = cap;
    }
    let rem = 1.0 - cap * n_full as f64;
    if rem > 0.0 && n_full < l {
        alpha[n_full] = rem;
    }

    let mut grad = vec![0.0f64; l];
    for (j, &aj) in alpha.iter().enumerate() {
        if aj != 0.0 {
            for i in 0..l {
                grad[i] += aj * q[i * l + j];
            }
        }
    }

    let mut converged = false;
    for _ in 0..max_iter {
        // max-violating pair: lowest gradient among coordinates that can
        // grow, highest among those that can shrink
        let mut up: Option<usize> = None;
        let mut down: Option<usize> = None;
        for i in 0..l {
            if alpha[i] < cap && up.is_none_or(|u| grad[i] < grad[u]) {
                up = Some(i);
            }
            if alpha[i] > 0.0 && down.is_none_or(|d| grad[i] > grad[d]) {
                down = Some(i);
            }
        }
        let (up, down) = match (up, down) {
            (Some(u), Some(d)) => (u, d),
            _ => {
                converged = true;
                break;
            }
        };
        let gap = grad[down] - grad[up];
        if gap <= kkt_tol {
            converged = true;
            break;
        }

        let up_room = cap - alpha[up];
        let down_room = alpha[down];
        let eta = q[up * l + up] + q[down * l + down] - 2.0 * q[up * l + down];
        let unconstrained = if eta > 1e-12 {
            gap / eta
        } else {
            f64::INFINITY
        };
        let t = unconstrained.min(up_room).min(down_room);

        if t >= up_room {
            alpha[up] = cap;
        } else {
            alpha[up] += t;
        }
        if t >= down_room {
            alpha[down] = 0.0;
        } else {
            alpha[down] -= t;
        }
        for i in 0..l {
            grad[i] += t * (q[i * l + up] - q[i * l + down]);
        }
    }

    (alpha, grad, converged)
}

/// Offset such that on-boundary support vectors score zero: the mean
/// gradient over multipliers strictly inside (0, cap), or the midpoint of
/// the bound bracket when none are free.
fn compute_rho(alpha: &[f64], grad: &[f64], cap: f64) -> f64 {
    let upper_tol = cap - ALPHA_FLOOR;
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut down = f64::NEG_INFINITY;
    let mut up = f64::INFINITY;
    for (&a, &g) in alpha.iter().zip(grad) {
        let at_lower = a <= ALPHA_FLOOR;
        let at_upper = a >= upper_tol;
        if !at_lower && !at_upper {
            free_sum += g;
            free_n += 1;
        }
        if !at_lower {
            down = down.max(g);
        }
        if !at_upper {
            up = up.min(g);
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else if up.is_finite() && down.is_finite() {
        0.5 * (down + up)
    } else if down.is_finite() {
        // nu = 1: everything is capped and the bracket is open above, so
        // the boundary hugs the farthest training point
        down
    } else {
        up
    }
}

fn matrix_digest(m: &FeatureMatrix) -> String {
    let mut hasher = Sha256::new();
    for r in m.rows() {
        for v in r.as_array() {
            hasher.update(v.to_le_bytes());
        }
    }
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in out {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

impl OcsvmModel {
    /// Signed decision value and label for one raw feature vector.
    pub fn decision(&self, x: &DigraphFeatures) -> Result<Verdict, OcsvmError> {
        if !x.is_finite() {
            return Err(OcsvmError::NonFiniteInput);
        }
        let s = features::scale_row(&x.as_array(), &self.scaler);
        let mut score = 0.0;
        for sv in &self.support {
            score += sv.alpha * rbf(&sv.x, &s, self.gamma);
        }
        score -= self.rho;
        Ok(Verdict {
            label: if score >= 0.0 { 1 } else { -1 },
            score,
        })
    }

    /// Elementwise [`decision`](Self::decision) over a block, order preserved.
    pub fn predict_block(&self, block: &FeatureMatrix) -> Result<Vec<Verdict>, OcsvmError> {
        block.rows().iter().map(|r| self.decision(r)).collect()
    }

    /// Serialize to the `keydyn-model v1` text format. Reals print as
    /// shortest round-trip decimals.
    pub fn serialize(&self) -> String {
        let mut out = String::from("keydyn-model v1\n");
        let _ = writeln!(out, "user={}", self.train_user);
        let _ = writeln!(out, "nu={}", self.nu);
        let _ = writeln!(out, "gamma={}", self.gamma);
        let _ = writeln!(out, "rho={}", self.rho);
        let _ = writeln!(out, "scaler_mean={}", join4(&self.scaler.mean));
        let _ = writeln!(out, "scaler_std={}", join4(&self.scaler.std));
        let _ = writeln!(out, "digest={}", self.train_digest);
        for sv in &self.support {
            let _ = writeln!(out, "{},{}", sv.alpha, join4(&sv.x));
        }
        out
    }
}

fn join4(v: &[f64; 4]) -> String {
    format!("{},{},{},{}", v[0], v[1], v[2], v[3])
}

/// Parse a `keydyn-model v1` file.
pub fn parse_model(text: &str) -> Result<OcsvmModel, OcsvmError> {
    let corrupt = |reason: &str| OcsvmError::CorruptModel(reason.to_string());
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "keydyn-model v1" {
        if header.starts_with("keydyn-model ") {
            return Err(OcsvmError::VersionMismatch {
                found: header.to_string(),
            });
        }
        return Err(corrupt("missing `keydyn-model v1` header"));
    }

    let mut field = |key: &str| -> Result<String, OcsvmError> {
        let line = lines
            .next()
            .ok_or_else(|| corrupt(&format!("missing {key}= line")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| corrupt(&format!("expected {key}= line, got {line:?}")))
    };

    let train_user = field("user")?;
    let nu: f64 = parse_real(&field("nu")?).ok_or_else(|| corrupt("bad nu"))?;
    let gamma: f64 = parse_real(&field("gamma")?).ok_or_else(|| corrupt("bad gamma"))?;
    let rho: f64 = parse_real(&field("rho")?).ok_or_else(|| corrupt("bad rho"))?;
    let mean = parse4(&field("scaler_mean")?).ok_or_else(|| corrupt("bad scaler_mean"))?;
    let std = parse4(&field("scaler_std")?).ok_or_else(|| corrupt("bad scaler_std"))?;
    let train_digest = field("digest")?;

    if !(nu > 0.0 && nu <= 1.0) {
        return Err(corrupt("nu out of (0, 1]"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(corrupt("gamma not positive"));
    }
    if !rho.is_finite() {
        return Err(corrupt("rho not finite"));
    }
    if std.iter().any(|&s| s <= 0.0) {
        return Err(corrupt("scaler std not positive"));
    }
    if train_digest.len() != 64 || !train_digest.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(corrupt("digest is not 64 hex chars"));
    }

    let mut support = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(corrupt(&format!("bad support vector line {line:?}")));
        }
        let mut vals = [0.0f64; 5];
        for (slot, f) in vals.iter_mut().zip(&fields) {
            *slot = parse_real(f).ok_or_else(|| corrupt("bad real in support vector"))?;
        }
        if vals[0] <= 0.0 {
            return Err(corrupt("support vector alpha not positive"));
        }
        support.push(SupportVector {
            alpha: vals[0],
            x: [vals[1], vals[2], vals[3], vals[4]],
        });
    }
    if support.is_empty() {
        return Err(corrupt("no support vectors"));
    }
    let alpha_sum: f64 = support.iter().map(|sv| sv.alpha).sum();
    if (alpha_sum - 1.0).abs() > 1e-3 {
        return Err(corrupt(&format!(
            "support multipliers sum to {alpha_sum}, expected 1"
        )));
    }

    Ok(OcsvmModel {
        train_user,
        nu,
        gamma,
        rho,
        scaler: Scaler { mean, std },
        train_digest,
        support,
        converged: true,
    })
}

fn parse_real(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse4(s: &str) -> Option<[f64; 4]> {
    let mut out = [0.0f64; 4];
    let mut parts = s.split(',');
    for slot in &mut out {
        *slot = parse_real(parts.next()?)?;
    }
    parts.next().is_none().then_some(out)
}
