//! Seeded synthetic typist cohorts.
//!
//! A clamped-normal timing model with optional induced rollover and linear
//! per-phase drift. This is the desk-scale stand-in for a human study: it
//! exercises negative UD, phase differences, and user separability without
//! claiming to model real typing.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::events::{KeystrokeLog, Phase, Stroke};

/// Holds never drop below this, whatever the jitter draws.
pub const HOLD_FLOOR_MS: f64 = 5.0;
/// Press intervals stay strictly positive so presses remain ordered.
pub const DD_FLOOR_MS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TypistProfile {
    pub user_id: String,
    pub hold_mean_ms: f64,
    pub hold_jitter_ms: f64,
    pub dd_mean_ms: f64,
    pub dd_jitter_ms: f64,
    /// Probability of forcing a stroke to overlap the next press (UD < 0).
    /// Overlap also arises naturally when the hold and press-interval
    /// distributions cross.
    pub rollover_prob: f64,
    /// Additive mean drift in ms per 1000 strokes, applied in the freestyle
    /// phase only.
    pub drift_per_1000: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub profiles: Vec<TypistProfile>,
    pub strokes_per_user: usize,
}

/// Both phases of one synthetic user.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortUserLogs {
    pub user_id: String,
    pub prompted: KeystrokeLog,
    pub freestyle: KeystrokeLog,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("TooFewUsers: need at least 2, got {0}")]
    TooFewUsers(usize),
    #[error("TooManyUsers: {n} users cannot keep >= {min_sep} ms pairwise separation")]
    TooManyUsers { n: usize, min_sep: f64 },
    #[error("InvalidProfile: {0}")]
    InvalidProfile(String),
    #[error("CorruptCohort: {0}")]
    CorruptCohort(String),
}

impl TypistProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidProfile(msg));
        let finite = [
            self.hold_mean_ms,
            self.hold_jitter_ms,
            self.dd_mean_ms,
            self.dd_jitter_ms,
            self.rollover_prob,
            self.drift_per_1000,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad(format!("{}: non-finite parameter", self.user_id));
        }
        if self.hold_jitter_ms < 0.0 || self.dd_jitter_ms < 0.0 {
            return bad(format!("{}: negative jitter", self.user_id));
        }
        if self.hold_mean_ms <= 3.0 * self.hold_jitter_ms {
            return bad(format!(
                "{}: hold_mean {} must exceed 3x hold_jitter {}",
                self.user_id, self.hold_mean_ms, self.hold_jitter_ms
            ));
        }
        if self.dd_mean_ms <= 3.0 * self.dd_jitter_ms {
            return bad(format!(
                "{}: dd_mean {} must exceed 3x dd_jitter {}",
                self.user_id, self.dd_mean_ms, self.dd_jitter_ms
            ));
        }
        if !(0.0..=1.0).contains(&self.rollover_prob) {
            return bad(format!(
                "{}: rollover_prob {} outside [0, 1]",
                self.user_id, self.rollover_prob
            ));
        }
        Ok(())
    }
}

fn grid_spacing((rows, cols): (usize, usize)) -> f64 {
    let hold = 80.0 / (rows - 1) as f64;
    let dd = if cols > 1 {
        150.0 / (cols - 1) as f64
    } else {
        f64::INFINITY
    };
    hold.min(dd)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal via Box-Muller.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Deterministic log for `(profile, strokes, phase)`. The freestyle phase
/// widens jitter by 25% and applies the linear drift.
pub fn generate_log(
    profile: &TypistProfile,
    strokes: usize,
    phase: Phase,
) -> Result<KeystrokeLog, SynthError> {
    profile.validate()?;
    let (jitter_scale, drifting) = match phase {
        Phase::Prompted => (1.0, false),
        Phase::Freestyle => (1.25, true),
    };
    let hold_sd = profile.hold_jitter_ms * jitter_scale;
    let dd_sd = profile.dd_jitter_ms * jitter_scale;

    let phase_tag = match phase {
        Phase::Prompted => 1u64,
        Phase::Freestyle => 2u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(profile.seed ^ splitmix64(phase_tag)));

    let mut out = Vec::with_capacity(strokes);
    let mut press = 0.0f64;
    for i in 0..strokes {
        let drift = if drifting {
            profile.drift_per_1000 * i as f64 / 1000.0
        } else {
            0.0
        };
        let hold_draw = profile.hold_mean_ms + drift + hold_sd * gauss(&mut rng);
        let dd = (profile.dd_mean_ms + drift + dd_sd * gauss(&mut rng)).max(DD_FLOOR_MS);
        let forced_rollover = rng.random_range(0.0..1.0) < profile.rollover_prob;
        let hold = if forced_rollover {
            let overlap = (0.2 * profile.hold_mean_ms + 0.5 * hold_sd * gauss(&mut rng)).max(2.0);
            dd + overlap
        } else {
            hold_draw.max(HOLD_FLOOR_MS)
        };
        out.push(Stroke {
            stroke_id: i as u64,
            press_ms: press,
            release_ms: press + hold,
        });
        press += dd;
    }
    KeystrokeLog::from_strokes(profile.user_id.clone(), phase, out)
        .map_err(|e| SynthError::InvalidProfile(format!("generated invalid log: {e}")))
}

/// Generate both phases for every profile in the cohort.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<CohortUserLogs>, SynthError> {
    spec.profiles
        .iter()
        .map(|p| {
            Ok(CohortUserLogs {
                user_id: p.user_id.clone(),
                prompted: generate_log(p, spec.strokes_per_user, Phase::Prompted)?,
                freestyle: generate_log(p, spec.strokes_per_user, Phase::Freestyle)?,
            })
        })
        .collect()
}

/// Deterministic cohort with hold means spread over [60, 140] ms and DD
/// means over [110, 260] ms on a grid keeping every pair of profiles at
/// least 8 ms apart in parameter space.
pub fn default_cohort(n_users: usize, master_seed: u64) -> Result<CohortSpec, SynthError> {
    const MIN_SEP: f64 = 8.0;
    if n_users < 2 {
        return Err(SynthError::TooFewUsers(n_users));
    }
    // grid split maximizing the smaller of the two mean spacings
    let (rows, cols) = (2..=n_users)
        .map(|rows| (rows, n_users.div_ceil(rows)))
        .max_by(|a, b| {
            grid_spacing(*a)
                .partial_cmp(&grid_spacing(*b))
                .unwrap()
                .then(b.0.cmp(&a.0))
        })
        .unwrap();
    let hold_step = 80.0 / (rows - 1) as f64;
    let dd_step = if cols > 1 {
        150.0 / (cols - 1) as f64
    } else {
        f64::INFINITY
    };
    if hold_step.min(dd_step) < MIN_SEP {
        return Err(SynthError::TooManyUsers {
            n: n_users,
            min_sep: MIN_SEP,
        });
    }

    let profiles = (0..n_users)
        .map(|i| {
            let r = i / cols;
            let c = i % cols;
            let hold_mean_ms = 60.0 + hold_step * r as f64;
            let dd_mean_ms = if cols > 1 {
                110.0 + dd_step * c as f64
            } else {
                185.0
            };
            TypistProfile {
                user_id: format!("u{i:02}"),
                hold_mean_ms,
                hold_jitter_ms: 8.0,
                dd_mean_ms,
                dd_jitter_ms: 11.0,
                rollover_prob: [0.02, 0.06, 0.10, 0.15][i % 4],
                drift_per_1000: [-1.5, 0.0, 1.5][i % 3],
                seed: splitmix64(master_seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            }
        })
        .collect();
    Ok(CohortSpec {
        profiles,
        strokes_per_user: 2000,
    })
}

impl CohortSpec {
    /// Serialize to the `keydyn-cohort v1` text format, one profile per line.
    pub fn serialize(&self) -> String {
        let mut out = String::from("keydyn-cohort v1\n");
        let _ = writeln!(out, "strokes_per_user={}", self.strokes_per_user);
        for p in &self.profiles {
            let _ = writeln!(
                out,
                "user={} hold_mean={} hold_jitter={} dd_mean={} dd_jitter={} rollover_prob={} drift_per_1000={} seed={}",
                p.user_id,
                p.hold_mean_ms,
                p.hold_jitter_ms,
                p.dd_mean_ms,
                p.dd_jitter_ms,
                p.rollover_prob,
                p.drift_per_1000,
                p.seed
            );
        }
        out
    }
}

/// Parse a `keydyn-cohort v1` file.
pub fn parse_cohort(text: &str) -> Result<CohortSpec, SynthError> {
    let corrupt = |m: &str| SynthError::CorruptCohort(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some("keydyn-cohort v1") {
        return Err(corrupt("missing `keydyn-cohort v1` header"));
    }
    let strokes_line = lines
        .next()
        .ok_or_else(|| corrupt("missing strokes_per_user"))?;
    let strokes_per_user: usize = strokes_line
        .strip_prefix("strokes_per_user=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt("bad strokes_per_user line"))?;

    let mut profiles = Vec::new();
    for line in lines {
        let mut get = {
            let mut parts = line.split(' ');
            move |key: &str| -> Result<String, SynthError> {
                parts
                    .next()
                    .and_then(|tok| tok.strip_prefix(key))
                    .and_then(|tok| tok.strip_prefix('='))
                    .map(str::to_string)
                    .ok_or_else(|| {
                        SynthError::CorruptCohort(format!("expected {key}= in {line:?}"))
                    })
            }
        };
        let real = |s: String| -> Result<f64, SynthError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SynthError::CorruptCohort(format!("bad real {s:?}")))
        };
        let profile = TypistProfile {
            user_id: get("user")?,
            hold_mean_ms: real(get("hold_mean")?)?,
            hold_jitter_ms: real(get("hold_jitter")?)?,
            dd_mean_ms: real(get("dd_mean")?)?,
            dd_jitter_ms: real(get("dd_jitter")?)?,
            rollover_prob: real(get("rollover_prob")?)?,
            drift_per_1000: real(get("drift_per_1000")?)?,
            seed: get("seed")?.parse().map_err(|_| corrupt("bad seed"))?,
        };
        profile.validate()?;
        profiles.push(profile);
    }
    let spec = CohortSpec {
        profiles,
        strokes_per_user,
    };
    let mut ids: Vec<&str> = spec.profiles.iter().map(|p| p.user_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != spec.profiles.len() {
        return Err(corrupt("duplicate user ids"));
    }
    Ok(spec)
}
