//! Anonymized keystroke timing logs: parsing, validation, slicing, replay.
//!
//! A log records *when* keys were pressed and released, never *which* keys.
//! Presses and releases are correlated by an ephemeral per-stroke id so hold
//! time stays well-defined under rollover typing without leaking content.

use std::fmt;

use thiserror::Error;

/// One press or release event. Timestamps are milliseconds since stream
/// start, quantized to 3 decimal places (microsecond resolution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyEvent {
    pub stroke_id: u64,
    pub kind: EventKind,
    pub t_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Press,
    Release,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Press => f.write_str("P"),
            EventKind::Release => f.write_str("R"),
        }
    }
}

/// Collection phase the log was captured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Prompted,
    Freestyle,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Prompted => "prompted",
            Phase::Freestyle => "freestyle",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A complete stroke: one press paired with its release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stroke {
    pub stroke_id: u64,
    pub press_ms: f64,
    pub release_ms: f64,
}

impl Stroke {
    pub fn hold_ms(&self) -> f64 {
        self.release_ms - self.press_ms
    }
}

/// Validated, immutable keystroke timing log.
///
/// Strokes are stored in press order (ascending stroke id). Every stroke is
/// complete, releases never precede their presses, and presses are ordered
/// by stroke id. Releases may interleave freely (rollover).
#[derive(Debug, Clone, PartialEq)]
pub struct KeystrokeLog {
    user_id: String,
    phase: Phase,
    strokes: Vec<Stroke>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("MalformedLine line={line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("DuplicateStrokeKind stroke_id={stroke_id} kind={kind}")]
    DuplicateStrokeKind { stroke_id: u64, kind: EventKind },
    #[error("OrphanStroke stroke_id={stroke_id}")]
    OrphanStroke { stroke_id: u64 },
    #[error("NegativeHold stroke_id={stroke_id}")]
    NegativeHold { stroke_id: u64 },
    #[error("NonMonotonicPress stroke_id={stroke_id}")]
    NonMonotonicPress { stroke_id: u64 },
    #[error("OutOfRange start={start} len={len} stroke_count={stroke_count}")]
    OutOfRange {
        start: usize,
        len: usize,
        stroke_count: usize,
    },
    #[error("InvalidUserId: {0:?}")]
    InvalidUserId(String),
    #[error("InvalidTimestamp stroke_id={stroke_id}")]
    InvalidTimestamp { stroke_id: u64 },
}

/// First line of every log file.
const HEADER_PREFIX: &str = "# keydyn-log v1 ";

/// Quantize a timestamp to 3 decimals and normalize -0.0 away.
pub(crate) fn quantize_ms(t: f64) -> f64 {
    let q = (t * 1000.0).round() / 1000.0;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Print a quantized timestamp with at most 3 decimal places.
pub(crate) fn format_ms(t: f64) -> String {
    let mut s = format!("{t:.3}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn valid_user_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl KeystrokeLog {
    /// Build a log from paired strokes, validating every invariant.
    /// Timestamps are quantized to 3 decimals.
    pub fn from_strokes(
        user_id: impl Into<String>,
        phase: Phase,
        strokes: Vec<Stroke>,
    ) -> Result<Self, LogError> {
        let user_id = user_id.into();
        if !valid_user_id(&user_id) {
            return Err(LogError::InvalidUserId(user_id));
        }
        let mut strokes: Vec<Stroke> = strokes
            .into_iter()
            .map(|s| Stroke {
                stroke_id: s.stroke_id,
                press_ms: quantize_ms(s.press_ms),
                release_ms: quantize_ms(s.release_ms),
            })
            .collect();
        strokes.sort_by_key(|s| s.stroke_id);
        for w in strokes.windows(2) {
            if w[0].stroke_id == w[1].stroke_id {
                return Err(LogError::DuplicateStrokeKind {
                    stroke_id: w[0].stroke_id,
                    kind: EventKind::Press,
                });
            }
        }
        validate_strokes(&strokes)?;
        Ok(Self {
            user_id,
            phase,
            strokes,
        })
    }

    /// Build a log from raw events, pairing presses with releases.
    pub fn from_events(
        user_id: impl Into<String>,
        phase: Phase,
        events: Vec<KeyEvent>,
    ) -> Result<Self, LogError> {
        let strokes = pair_events(events)?;
        Self::from_strokes(user_id, phase, strokes)
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Number of complete strokes.
    pub fn stroke_count(&self) -> usize {
        self.strokes.len()
    }

    /// Strokes in press order.
    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    /// Stream duration: time from first event to last event, 0 for empty logs.
    pub fn duration_ms(&self) -> f64 {
        if self.strokes.is_empty() {
            return 0.0;
        }
        let first = self.strokes[0].press_ms;
        let last = self
            .strokes
            .iter()
            .map(|s| s.release_ms)
            .fold(f64::NEG_INFINITY, f64::max);
        last - first
    }

    /// Events in canonical order: by time, ties by (stroke id, press first).
    pub fn events(&self) -> Vec<KeyEvent> {
        let mut ev: Vec<KeyEvent> = Vec::with_capacity(self.strokes.len() * 2);
        for s in &self.strokes {
            ev.push(KeyEvent {
                stroke_id: s.stroke_id,
                kind: EventKind::Press,
                t_ms: s.press_ms,
            });
            ev.push(KeyEvent {
                stroke_id: s.stroke_id,
                kind: EventKind::Release,
                t_ms: s.release_ms,
            });
        }
        ev.sort_by(|a, b| {
            a.t_ms
                .partial_cmp(&b.t_ms)
                .unwrap()
                .then(a.stroke_id.cmp(&b.stroke_id))
                .then(a.kind.cmp(&b.kind))
        });
        ev
    }

    /// Sub-log of strokes `[start, start+len)` by press order. Timestamps
    /// are unchanged.
    pub fn slice_strokes(&self, start: usize, len: usize) -> Result<KeystrokeLog, LogError> {
        let end = start.checked_add(len);
        match end {
            Some(end) if end <= self.strokes.len() => Ok(KeystrokeLog {
                user_id: self.user_id.clone(),
                phase: self.phase,
                strokes: self.strokes[start..end].to_vec(),
            }),
            _ => Err(LogError::OutOfRange {
                start,
                len,
                stroke_count: self.strokes.len(),
            }),
        }
    }

    /// Serialize to the `keydyn-log v1` text format.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# keydyn-log v1 user={} phase={}\n",
            self.user_id, self.phase
        ));
        for e in self.events() {
            out.push_str(&format!(
                "{},{},{}\n",
                e.stroke_id,
                e.kind,
                format_ms(e.t_ms)
            ));
        }
        out
    }
}

/// Parse a `keydyn-log v1` file.
pub fn parse_log(source: &str) -> Result<KeystrokeLog, LogError> {
    let mut lines = source.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| LogError::MalformedLine {
        line: 1,
        reason: "empty input, missing header".into(),
    })?;
    let (user_id, phase) = parse_header(header)?;

    let mut events = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.starts_with('#') {
            continue;
        }
        events.push(parse_event_line(raw, line_no)?);
    }
    KeystrokeLog::from_events(user_id, phase, events)
}

fn parse_header(header: &str) -> Result<(String, Phase), LogError> {
    let malformed = |reason: &str| LogError::MalformedLine {
        line: 1,
        reason: reason.into(),
    };
    let rest = header
        .strip_prefix(HEADER_PREFIX)
        .ok_or_else(|| malformed("expected `# keydyn-log v1 user=<id> phase=<phase>`"))?;
    let mut parts = rest.split(' ');
    let user = parts
        .next()
        .and_then(|p| p.strip_prefix("user="))
        .ok_or_else(|| malformed("missing user= field"))?;
    let phase = parts
        .next()
        .and_then(|p| p.strip_prefix("phase="))
        .ok_or_else(|| malformed("missing phase= field"))?;
    if parts.next().is_some() {
        return Err(malformed("trailing tokens in header"));
    }
    let phase = match phase {
        "prompted" => Phase::Prompted,
        "freestyle" => Phase::Freestyle,
        other => return Err(malformed(&format!("unknown phase {other:?}"))),
    };
    if !valid_user_id(user) {
        return Err(malformed(&format!("invalid user id {user:?}")));
    }
    Ok((user.to_string(), phase))
}

fn parse_event_line(raw: &str, line_no: usize) -> Result<KeyEvent, LogError> {
    let malformed = |reason: String| LogError::MalformedLine {
        line: line_no,
        reason,
    };
    let mut fields = raw.split(',');
    let (id, kind, t) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
        (Some(a), Some(b), Some(c), None) => (a, b, c),
        _ => return Err(malformed(format!("expected 3 fields, got {raw:?}"))),
    };
    let stroke_id: u64 = id
        .parse()
        .map_err(|_| malformed(format!("bad stroke id {id:?}")))?;
    let kind = match kind {
        "P" => EventKind::Press,
        "R" => EventKind::Release,
        other => return Err(malformed(format!("bad event kind {other:?}"))),
    };
    let t_ms = parse_t_ms(t).ok_or_else(|| malformed(format!("bad timestamp {t:?}")))?;
    Ok(KeyEvent {
        stroke_id,
        kind,
        t_ms,
    })
}

/// Timestamps are non-negative decimals with at most 3 fractional digits.
fn parse_t_ms(text: &str) -> Option<f64> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((_, "")) => return None,
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() || int_part.bytes().any(|b| !b.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 3 || frac_part.bytes().any(|b| !b.is_ascii_digit()) {
        return None;
    }
    text.parse::<f64>().ok().map(quantize_ms)
}

fn pair_events(events: Vec<KeyEvent>) -> Result<Vec<Stroke>, LogError> {
    // (press, release) per stroke id, in first-seen order for deterministic
    // error reporting.
    let mut ids: Vec<u64> = Vec::new();
    let mut pairs: std::collections::HashMap<u64, (Option<f64>, Option<f64>)> =
        std::collections::HashMap::new();
    for e in &events {
        let slot = pairs.entry(e.stroke_id).or_insert_with(|| {
            ids.push(e.stroke_id);
            (None, None)
        });
        let cell = match e.kind {
            EventKind::Press => &mut slot.0,
            EventKind::Release => &mut slot.1,
        };
        if cell.is_some() {
            return Err(LogError::DuplicateStrokeKind {
                stroke_id: e.stroke_id,
                kind: e.kind,
            });
        }
        *cell = Some(e.t_ms);
    }
    ids.sort_unstable();
    let mut strokes = Vec::with_capacity(ids.len());
    for id in ids {
        let (press, release) = pairs[&id];
        match (press, release) {
            (Some(p), Some(r)) => strokes.push(Stroke {
                stroke_id: id,
                press_ms: p,
                release_ms: r,
            }),
            _ => return Err(LogError::OrphanStroke { stroke_id: id }),
        }
    }
    Ok(strokes)
}

/// Strokes must be sorted by ascending stroke id on entry.
fn validate_strokes(strokes: &[Stroke]) -> Result<(), LogError> {
    for s in strokes {
        if !s.press_ms.is_finite() || !s.release_ms.is_finite() || s.press_ms < 0.0 {
            return Err(LogError::InvalidTimestamp {
                stroke_id: s.stroke_id,
            });
        }
        if s.release_ms < s.press_ms {
            return Err(LogError::NegativeHold {
                stroke_id: s.stroke_id,
            });
        }
    }
    for w in strokes.windows(2) {
        if w[1].press_ms < w[0].press_ms {
            return Err(LogError::NonMonotonicPress {
                stroke_id: w[1].stroke_id,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_from(text: &str) -> Result<KeystrokeLog, LogError> {
        parse_log(text)
    }

    const HEADER: &str = "# keydyn-log v1 user=alice phase=prompted\n";

    #[test]
    fn minimal_complete_stroke() {
        let log = log_from(&format!("{HEADER}0,P,100.0\n0,R,180.0\n")).unwrap();
        assert_eq!(log.stroke_count(), 1);
        assert_eq!(log.strokes()[0].hold_ms(), 80.0);
        assert_eq!(log.user_id(), "alice");
        assert_eq!(log.phase(), Phase::Prompted);
    }

    #[test]
    fn negative_hold_rejected() {
        let err = log_from(&format!("{HEADER}0,P,100.0\n0,R,90.0\n")).unwrap_err();
        assert_eq!(err, LogError::NegativeHold { stroke_id: 0 });
    }

    #[test]
    fn rollover_is_legal() {
        let log = log_from(&format!("{HEADER}0,P,0\n1,P,50\n0,R,70\n1,R,120\n")).unwrap();
        assert_eq!(log.stroke_count(), 2);
        // release of stroke 0 comes after press of stroke 1
        assert!(log.strokes()[0].release_ms > log.strokes()[1].press_ms);
    }

    #[test]
    fn orphan_stroke_rejected() {
        let err = log_from(&format!("{HEADER}0,P,0\n0,R,10\n17,P,20\n")).unwrap_err();
        assert_eq!(err, LogError::OrphanStroke { stroke_id: 17 });
    }

    #[test]
    fn duplicate_stroke_kind_rejected() {
        let err = log_from(&format!("{HEADER}0,P,0\n0,P,5\n0,R,10\n")).unwrap_err();
        assert_eq!(
            err,
            LogError::DuplicateStrokeKind {
                stroke_id: 0,
                kind: EventKind::Press
            }
        );
    }

    #[test]
    fn non_monotonic_press_rejected() {
        let err = log_from(&format!("{HEADER}0,P,100\n0,R,130\n1,P,40\n1,R,90\n")).unwrap_err();
        assert_eq!(err, LogError::NonMonotonicPress { stroke_id: 1 });
    }

    #[test]
    fn malformed_lines_rejected() {
        for bad in [
            "x,P,0",
            "0,Q,0",
            "0,P",
            "0,P,0,extra",
            "0,P,-5",
            "0,P,1.2345",
            "0,P,1.",
            "0,P,nan",
            "",
        ] {
            let err = log_from(&format!("{HEADER}{bad}\n")).unwrap_err();
            assert!(
                matches!(err, LogError::MalformedLine { line: 2, .. }),
                "{bad:?} gave {err:?}"
            );
        }
    }

    #[test]
    fn header_required() {
        assert!(matches!(
            log_from("0,P,0\n0,R,1\n").unwrap_err(),
            LogError::MalformedLine { line: 1, .. }
        ));
        assert!(matches!(
            log_from("# keydyn-log v2 user=a phase=prompted\n").unwrap_err(),
            LogError::MalformedLine { line: 1, .. }
        ));
        assert!(matches!(
            log_from("# keydyn-log v1 user=a phase=sitting\n").unwrap_err(),
            LogError::MalformedLine { line: 1, .. }
        ));
    }

    #[test]
    fn comments_are_skipped() {
        let log = log_from(&format!("{HEADER}# midstream note\n0,P,0\n0,R,1\n")).unwrap();
        assert_eq!(log.stroke_count(), 1);
    }

    #[test]
    fn empty_log_is_valid() {
        let log = log_from(HEADER).unwrap();
        assert_eq!(log.stroke_count(), 0);
        assert_eq!(log.duration_ms(), 0.0);
    }

    #[test]
    fn unsorted_event_lines_are_normalized() {
        let shuffled = log_from(&format!("{HEADER}1,R,120\n0,P,0\n1,P,50\n0,R,70\n")).unwrap();
        let sorted = log_from(&format!("{HEADER}0,P,0\n1,P,50\n0,R,70\n1,R,120\n")).unwrap();
        assert_eq!(shuffled, sorted);
        assert_eq!(shuffled.serialize(), sorted.serialize());
    }

    #[test]
    fn slice_identity_and_bounds() {
        let log = log_from(&format!(
            "{HEADER}0,P,0\n0,R,10\n1,P,20\n1,R,30\n2,P,40\n2,R,50\n"
        ))
        .unwrap();
        assert_eq!(log.slice_strokes(0, 3).unwrap(), log);
        let mid = log.slice_strokes(1, 1).unwrap();
        assert_eq!(mid.stroke_count(), 1);
        assert_eq!(mid.strokes()[0].stroke_id, 1);
        assert!(matches!(
            log.slice_strokes(0, 4).unwrap_err(),
            LogError::OutOfRange { .. }
        ));
        assert!(log.slice_strokes(3, 0).is_ok());
    }

    #[test]
    fn serialize_round_trip() {
        let text = format!("{HEADER}0,P,0\n1,P,50.5\n0,R,70.125\n1,R,120.002\n");
        let log = log_from(&text).unwrap();
        let re = parse_log(&log.serialize()).unwrap();
        assert_eq!(log, re);
        assert_eq!(log.serialize(), re.serialize());
    }

    #[test]
    fn timestamp_formatting_trims_zeros() {
        assert_eq!(format_ms(100.0), "100");
        assert_eq!(format_ms(100.5), "100.5");
        assert_eq!(format_ms(100.25), "100.25");
        assert_eq!(format_ms(100.125), "100.125");
        assert_eq!(format_ms(0.0), "0");
    }
}
