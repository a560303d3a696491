//! Digraph timing features and z-score standardization.
//!
//! Each consecutive stroke pair yields one sample: the first key's hold time
//! plus the UD/DD/UU intervals to the next key. UD may be negative under
//! rollover; DD never is, because presses are ordered.

use thiserror::Error;

use crate::events::KeystrokeLog;

/// Timing features of one digraph, all in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigraphFeatures {
    /// Press-to-release of the first key.
    pub hold_ms: f64,
    /// Release of first key to press of second; negative under rollover.
    pub ud_ms: f64,
    /// Press to press. Always `hold + ud`.
    pub dd_ms: f64,
    /// Release to release.
    pub uu_ms: f64,
}

impl DigraphFeatures {
    pub fn as_array(&self) -> [f64; 4] {
        [self.hold_ms, self.ud_ms, self.dd_ms, self.uu_ms]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            hold_ms: v[0],
            ud_ms: v[1],
            dd_ms: v[2],
            uu_ms: v[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }
}

/// Ordered digraph samples extracted from one log (or concatenated segments).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    rows: Vec<DigraphFeatures>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<DigraphFeatures>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[DigraphFeatures] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: &FeatureMatrix) {
        self.rows.extend_from_slice(&other.rows);
    }

    /// CSV dump: header plus one row per digraph, 6 decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hold_ms,ud_ms,dd_ms,uu_ms\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.6},{:.6},{:.6},{:.6}\n",
                r.hold_ms, r.ud_ms, r.dd_ms, r.uu_ms
            ));
        }
        out
    }
}

/// Per-column standardization parameters fitted on a training matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub mean: [f64; 4],
    pub std: [f64; 4],
}

/// Lower bound applied to each standard deviation so constant columns stay
/// usable.
pub const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("InsufficientData: need at least {need} rows, got {got}")]
    InsufficientData { need: usize, got: usize },
}

/// One row per consecutive stroke pair. Empty for logs with fewer than two
/// strokes.
///
/// Log timestamps are quantized to microseconds, so intervals are computed in
/// integer microseconds: a constant shift of every timestamp cancels exactly
/// and the identities `dd = hold + ud` and `uu = dd + hold2 - hold1` hold
/// bit-exactly, because dd and uu are derived from those sums.
pub fn extract_features(log: &KeystrokeLog) -> FeatureMatrix {
    let us = |t_ms: f64| (t_ms * 1000.0).round() as i64;
    let ms = |d_us: i64| d_us as f64 / 1000.0;
    let strokes = log.strokes();
    let rows = strokes
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let hold = ms(us(a.release_ms) - us(a.press_ms));
            let ud = ms(us(b.press_ms) - us(a.release_ms));
            let next_hold = ms(us(b.release_ms) - us(b.press_ms));
            let dd = hold + ud;
            DigraphFeatures {
                hold_ms: hold,
                ud_ms: ud,
                dd_ms: dd,
                uu_ms: dd + (next_hold - hold),
            }
        })
        .collect();
    FeatureMatrix::new(rows)
}

/// Per-column mean and population standard deviation, floored at
/// [`STD_FLOOR`].
pub fn fit_scaler(train: &FeatureMatrix) -> Result<Scaler, FeatureError> {
    let n = train.len();
    if n < 2 {
        return Err(FeatureError::InsufficientData { need: 2, got: n });
    }
    let mut mean = [0.0f64; 4];
    for r in train.rows() {
        let v = r.as_array();
        for c in 0..4 {
            mean[c] += v[c];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = [0.0f64; 4];
    for r in train.rows() {
        let v = r.as_array();
        for c in 0..4 {
            let d = v[c] - mean[c];
            var[c] += d * d;
        }
    }
    let mut std = [0.0f64; 4];
    for c in 0..4 {
        std[c] = (var[c] / n as f64).sqrt().max(STD_FLOOR);
    }
    Ok(Scaler { mean, std })
}

/// Transform every column to `(x - mean) / std`, preserving row order.
pub fn apply_scaler(m: &FeatureMatrix, s: &Scaler) -> FeatureMatrix {
    let rows = m
        .rows()
        .iter()
        .map(|r| DigraphFeatures::from_array(scale_row(&r.as_array(), s)))
        .collect();
    FeatureMatrix::new(rows)
}

pub(crate) fn scale_row(v: &[f64; 4], s: &Scaler) -> [f64; 4] {
    let mut out = [0.0f64; 4];
    for c in 0..4 {
        out[c] = (v[c] - s.mean[c]) / s.std[c];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{KeystrokeLog, Phase, Stroke};

    fn log_of(pairs: &[(f64, f64)]) -> KeystrokeLog {
        let strokes = pairs
            .iter()
            .enumerate()
            .map(|(i, &(p, r))| Stroke {
                stroke_id: i as u64,
                press_ms: p,
                release_ms: r,
            })
            .collect();
        KeystrokeLog::from_strokes("t", Phase::Prompted, strokes).unwrap()
    }

    fn row_of(vals: [f64; 4]) -> DigraphFeatures {
        DigraphFeatures::from_array(vals)
    }

    #[test]
    fn plain_digraph() {
        let m = extract_features(&log_of(&[(100.0, 180.0), (230.0, 300.0)]));
        assert_eq!(m.rows(), &[row_of([80.0, 50.0, 130.0, 120.0])]);
    }

    #[test]
    fn rollover_digraph_has_negative_ud() {
        let m = extract_features(&log_of(&[(0.0, 70.0), (50.0, 120.0)]));
        assert_eq!(m.rows(), &[row_of([70.0, -20.0, 50.0, 50.0])]);
    }

    #[test]
    fn short_logs_give_empty_matrix() {
        assert!(extract_features(&log_of(&[])).is_empty());
        assert!(extract_features(&log_of(&[(0.0, 10.0)])).is_empty());
    }

    #[test]
    fn scaler_hand_arithmetic() {
        let m = FeatureMatrix::new(vec![row_of([0.0; 4]), row_of([2.0; 4])]);
        let s = fit_scaler(&m).unwrap();
        assert_eq!(s.mean, [1.0; 4]);
        assert_eq!(s.std, [1.0; 4]);
    }

    #[test]
    fn zero_variance_hits_floor() {
        let m = FeatureMatrix::new(vec![row_of([5.0, 1.0, 6.0, 7.0]); 2]);
        let s = fit_scaler(&m).unwrap();
        assert_eq!(s.std, [STD_FLOOR; 4]);
    }

    #[test]
    fn one_row_is_insufficient() {
        let m = FeatureMatrix::new(vec![row_of([1.0; 4])]);
        assert_eq!(
            fit_scaler(&m).unwrap_err(),
            FeatureError::InsufficientData { need: 2, got: 1 }
        );
    }

    #[test]
    fn standardized_columns_center_on_zero() {
        let rows: Vec<DigraphFeatures> = (0..50)
            .map(|i| {
                let x = i as f64;
                row_of([80.0 + x, 40.0 - x, 120.0 + 2.0 * x, 119.0 + x * x * 0.01])
            })
            .collect();
        let m = FeatureMatrix::new(rows);
        let scaled = apply_scaler(&m, &fit_scaler(&m).unwrap());
        for c in 0..4 {
            let mean: f64 =
                scaled.rows().iter().map(|r| r.as_array()[c]).sum::<f64>() / scaled.len() as f64;
            assert!(mean.abs() < 1e-9, "column {c} mean {mean}");
        }
    }

    #[test]
    fn identity_scaler_is_identity() {
        let m = FeatureMatrix::new(vec![row_of([3.0, -1.0, 2.0, 5.0]); 3]);
        let s = Scaler {
            mean: [0.0; 4],
            std: [1.0; 4],
        };
        assert_eq!(apply_scaler(&m, &s), m);
    }

    #[test]
    fn floored_constant_column_maps_to_zero() {
        // Oracle: compute (x - mean)/std per element directly.
        let m = FeatureMatrix::new(vec![row_of([5.0, 1.0, 6.0, 7.0]); 4]);
        let s = fit_scaler(&m).unwrap();
        let scaled = apply_scaler(&m, &s);
        for (r, orig) in scaled.rows().iter().zip(m.rows()) {
            let expect: Vec<f64> = (0..4)
                .map(|c| (orig.as_array()[c] - s.mean[c]) / s.std[c])
                .collect();
            assert_eq!(r.as_array().to_vec(), expect);
            assert_eq!(r.as_array(), [0.0; 4]);
        }
    }

    #[test]
    fn csv_dump_format() {
        let m = FeatureMatrix::new(vec![row_of([80.0, -20.5, 59.5, 60.0])]);
        assert_eq!(
            m.to_csv(),
            "hold_ms,ud_ms,dd_ms,uu_ms\n80.000000,-20.500000,59.500000,60.000000\n"
        );
    }
}
