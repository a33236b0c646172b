//! Piecewise-constant control record for the second beam splitter.
//!
//! A [`Schedule`] covers the accumulation window [0, T] with contiguous
//! half-open segments, each wholly `In` or wholly `Out` — the two states are
//! mutually exclusive at every instant. Switching is instantaneous (particle
//! transit is assumed much faster than the modulation), so the only
//! quantities the rest of the pipeline needs are the state at an arrival
//! instant and the duty fractions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("schedule has no segments")]
    EmptySchedule,
    #[error("total time must be positive and finite, got {total}")]
    InvalidTotalTime { total: f64 },
    #[error("segment {index} is empty or inverted: [{t_start}, {t_end})")]
    InvalidSegment {
        index: usize,
        t_start: f64,
        t_end: f64,
    },
    #[error("segments overlap at t = {boundary}")]
    OverlappingSegments { boundary: f64 },
    #[error("coverage gap at t = {boundary}")]
    GapInCoverage { boundary: f64 },
    #[error("time {t} is outside the schedule window [0, {total})")]
    TimeOutOfRange { t: f64, total: f64 },
    #[error("duty must lie in [0, 1], got {duty}")]
    InvalidDuty { duty: f64 },
    #[error("period must be positive and finite, got {period}")]
    InvalidPeriod { period: f64 },
    #[error("total {total} is not a positive integer multiple of period {period}")]
    NonIntegerPeriodCount { total: f64, period: f64 },
    #[error("probability must lie in [0, 1], got {p}")]
    InvalidProbability { p: f64 },
    #[error("schedule text line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Status of the second beam splitter over one segment. Exactly one state
/// holds at every instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bs2State {
    /// BS2 sits in the beam path: interference configuration.
    In,
    /// BS2 is removed: which-path configuration.
    Out,
}

impl fmt::Display for Bs2State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bs2State::In => write!(f, "IN"),
            Bs2State::Out => write!(f, "OUT"),
        }
    }
}

/// One half-open slice [t_start, t_end) of the control record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub state: Bs2State,
}

impl Segment {
    pub const fn new(t_start: f64, t_end: f64, state: Bs2State) -> Self {
        Self {
            t_start,
            t_end,
            state,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Duty fractions of the control record over the accumulation window:
/// `a_frac` is the In share, `b_frac = 1 − a_frac` the Out share, and
/// `theta = asin(√a_frac)` the mixing angle with a_frac = sin²θ. `theta` is
/// always derived from `a_frac`, never stored independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyFractions {
    pub a_frac: f64,
    pub b_frac: f64,
    pub theta: f64,
}

impl DutyFractions {
    pub fn from_in_fraction(a_frac: f64) -> Result<Self, ScheduleError> {
        if !a_frac.is_finite() || !(0.0..=1.0).contains(&a_frac) {
            return Err(ScheduleError::InvalidDuty { duty: a_frac });
        }
        Ok(Self {
            a_frac,
            b_frac: 1.0 - a_frac,
            theta: a_frac.sqrt().asin(),
        })
    }
}

/// Validated control record: contiguous, non-overlapping segments covering
/// [0, T] exactly. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
    total_time: f64,
}

impl Schedule {
    /// Validates the segment list and builds the schedule. Boundaries must
    /// match exactly: segment k+1 starts where segment k ends, the first
    /// segment starts at 0, and the last ends at `total_time`.
    pub fn new(segments: Vec<Segment>, total_time: f64) -> Result<Self, ScheduleError> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(ScheduleError::InvalidTotalTime { total: total_time });
        }
        if segments.is_empty() {
            return Err(ScheduleError::EmptySchedule);
        }
        for (index, seg) in segments.iter().enumerate() {
            if !(seg.t_start.is_finite() && seg.t_end.is_finite() && seg.t_start < seg.t_end) {
                return Err(ScheduleError::InvalidSegment {
                    index,
                    t_start: seg.t_start,
                    t_end: seg.t_end,
                });
            }
        }
        let first = segments.first().expect("nonempty");
        if first.t_start > 0.0 {
            return Err(ScheduleError::GapInCoverage { boundary: 0.0 });
        }
        if first.t_start < 0.0 {
            return Err(ScheduleError::OverlappingSegments { boundary: 0.0 });
        }
        for pair in segments.windows(2) {
            if pair[1].t_start < pair[0].t_end {
                return Err(ScheduleError::OverlappingSegments {
                    boundary: pair[1].t_start,
                });
            }
            if pair[1].t_start > pair[0].t_end {
                return Err(ScheduleError::GapInCoverage {
                    boundary: pair[0].t_end,
                });
            }
        }
        let last = segments.last().expect("nonempty");
        if last.t_end < total_time {
            return Err(ScheduleError::GapInCoverage {
                boundary: last.t_end,
            });
        }
        if last.t_end > total_time {
            return Err(ScheduleError::OverlappingSegments {
                boundary: total_time,
            });
        }
        Ok(Self {
            segments,
            total_time,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// State of BS2 at instant `t`. A boundary instant belongs to the
    /// following segment (half-open convention).
    pub fn state_at(&self, t: f64) -> Result<Bs2State, ScheduleError> {
        if !t.is_finite() || t < 0.0 || t >= self.total_time {
            return Err(ScheduleError::TimeOutOfRange {
                t,
                total: self.total_time,
            });
        }
        let idx = self.segments.partition_point(|seg| seg.t_start <= t) - 1;
        Ok(self.segments[idx].state)
    }

    /// Time-averaged duty fractions. For step-function control the integral
    /// of the squared indicator reduces exactly to the duration sum.
    pub fn duty_fractions(&self) -> DutyFractions {
        let in_time: f64 = self
            .segments
            .iter()
            .filter(|seg| seg.state == Bs2State::In)
            .map(Segment::duration)
            .sum();
        let a_frac = (in_time / self.total_time).clamp(0.0, 1.0);
        DutyFractions::from_in_fraction(a_frac).expect("clamped in-fraction is valid")
    }

    /// Indices of segments shorter than `transit_time`, where the
    /// instantaneous-switching approximation is suspect. Zero disables the
    /// check.
    pub fn segments_shorter_than(&self, transit_time: f64) -> Vec<usize> {
        if transit_time <= 0.0 {
            return Vec::new();
        }
        self.segments
            .iter()
            .enumerate()
            .filter(|(_, seg)| seg.duration() < transit_time)
            .map(|(i, _)| i)
            .collect()
    }

    /// Line-based text form: header `T=<total>`, then one `t_start t_end
    /// IN|OUT` line per segment. Floats are printed with shortest
    /// round-trip precision, so `from_text(to_text())` is bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = format!("T={}\n", self.total_time);
        for seg in &self.segments {
            out.push_str(&format!("{} {} {}\n", seg.t_start, seg.t_end, seg.state));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ScheduleError> {
        let mut total = None;
        let mut segments = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(value) = line.strip_prefix("T=") {
                if total.is_some() {
                    return Err(ScheduleError::Parse {
                        line: lineno,
                        reason: "duplicate T= header".into(),
                    });
                }
                total = Some(value.trim().parse::<f64>().map_err(|e| {
                    ScheduleError::Parse {
                        line: lineno,
                        reason: format!("bad total time: {e}"),
                    }
                })?);
                continue;
            }
            let mut fields = line.split_whitespace();
            let (t_start, t_end, state) = match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(ScheduleError::Parse {
                        line: lineno,
                        reason: "expected `t_start t_end IN|OUT`".into(),
                    })
                }
            };
            if fields.next().is_some() {
                return Err(ScheduleError::Parse {
                    line: lineno,
                    reason: "trailing fields after segment".into(),
                });
            }
            let t_start = t_start.parse::<f64>().map_err(|e| ScheduleError::Parse {
                line: lineno,
                reason: format!("bad t_start: {e}"),
            })?;
            let t_end = t_end.parse::<f64>().map_err(|e| ScheduleError::Parse {
                line: lineno,
                reason: format!("bad t_end: {e}"),
            })?;
            let state = match state {
                "IN" => Bs2State::In,
                "OUT" => Bs2State::Out,
                other => {
                    return Err(ScheduleError::Parse {
                        line: lineno,
                        reason: format!("unknown state `{other}` (expected IN or OUT)"),
                    })
                }
            };
            segments.push(Segment::new(t_start, t_end, state));
        }
        let total = total.ok_or(ScheduleError::Parse {
            line: 0,
            reason: "missing T= header".into(),
        })?;
        Schedule::new(segments, total)
    }
}

fn period_count(total: f64, period: f64) -> Result<usize, ScheduleError> {
    if !(period.is_finite() && period > 0.0) {
        return Err(ScheduleError::InvalidPeriod { period });
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(ScheduleError::InvalidTotalTime { total });
    }
    let ratio = total / period;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
        return Err(ScheduleError::NonIntegerPeriodCount { total, period });
    }
    Ok(n as usize)
}

/// Periodic square-wave schedule: each period opens with an In stretch of
/// `duty·period` followed by Out for the remainder.
pub fn make_periodic(duty: f64, period: f64, total: f64) -> Result<Schedule, ScheduleError> {
    if !duty.is_finite() || !(0.0..=1.0).contains(&duty) {
        return Err(ScheduleError::InvalidDuty { duty });
    }
    let n = period_count(total, period)?;
    // The shared boundary between periods is computed once per k so adjacent
    // segments agree bit-for-bit; the last boundary is pinned to `total`.
    let boundary = |k: usize| if k == n { total } else { k as f64 * period };
    let mut segments = Vec::with_capacity(2 * n);
    for k in 0..n {
        let start = boundary(k);
        let end = boundary(k + 1);
        if duty == 0.0 {
            segments.push(Segment::new(start, end, Bs2State::Out));
            continue;
        }
        if duty == 1.0 {
            segments.push(Segment::new(start, end, Bs2State::In));
            continue;
        }
        let mid = start + duty * period;
        if mid >= end {
            // Out slice thinner than fp resolution; fold it into the In span.
            segments.push(Segment::new(start, end, Bs2State::In));
        } else if mid <= start {
            segments.push(Segment::new(start, end, Bs2State::Out));
        } else {
            segments.push(Segment::new(start, mid, Bs2State::In));
            segments.push(Segment::new(mid, end, Bs2State::Out));
        }
    }
    Schedule::new(segments, total)
}

/// Random telegraph schedule: each dwell-length slot is independently In
/// with probability `p_in`, drawn from a generator seeded with `seed`.
/// Identical inputs produce identical schedules.
pub fn make_random_telegraph(
    p_in: f64,
    dwell: f64,
    total: f64,
    seed: u64,
) -> Result<Schedule, ScheduleError> {
    if !p_in.is_finite() || !(0.0..=1.0).contains(&p_in) {
        return Err(ScheduleError::InvalidProbability { p: p_in });
    }
    let n = period_count(total, dwell)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boundary = |k: usize| if k == n { total } else { k as f64 * dwell };
    let segments = (0..n)
        .map(|k| {
            let state = if rng.gen_bool(p_in) {
                Bs2State::In
            } else {
                Bs2State::Out
            };
            Segment::new(boundary(k), boundary(k + 1), state)
        })
        .collect();
    Schedule::new(segments, total)
}
