//! Event-by-event detection simulation against a schedule.
//!
//! Particles arrive one by one in time; each event samples the schedule at
//! its arrival instant, draws a detector from the per-state click
//! probabilities, and lands in a per-phase count table. Every phase point
//! owns an independent random substream derived from the master seed (stream
//! id = grid index), so results are bitwise identical whether phase points
//! run serially or in parallel.

use crate::modulation::{Bs2State, Schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("phase grid is empty")]
    EmptyPhaseGrid,
    #[error("phase grid contains a non-finite value: {phase}")]
    NonFinitePhase { phase: f64 },
    #[error("event count per phase must be at least 1")]
    InvalidEventCount,
    #[error("arrival rate must be positive and finite, got {rate}")]
    InvalidArrivalRate { rate: f64 },
    #[error("event carries phase {phase} that is not on the grid")]
    UnknownPhase { phase: f64 },
}

/// How arrival times are drawn over the accumulation window. Streams longer
/// than the window wrap modulo the schedule's total time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalModel {
    /// Evenly spaced arrivals at the given rate (events/second).
    Uniform { rate: f64 },
    /// Exponential inter-arrival times at the given mean rate.
    Poisson { rate: f64 },
}

impl ArrivalModel {
    pub fn rate(&self) -> f64 {
        match self {
            ArrivalModel::Uniform { rate } | ArrivalModel::Poisson { rate } => *rate,
        }
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        let rate = self.rate();
        if rate.is_finite() && rate > 0.0 {
            Ok(())
        } else {
            Err(MonteCarloError::InvalidArrivalRate { rate })
        }
    }
}

/// Which detector clicked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    X,
    Y,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detector::X => write!(f, "X"),
            Detector::Y => write!(f, "Y"),
        }
    }
}

/// One detected particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    /// Arrival instant within [0, T).
    pub time: f64,
    /// Schedule state at the arrival instant.
    pub bs2_state: Bs2State,
    /// Phase setting of the run that produced this event.
    pub phase: f64,
    pub detector: Detector,
}

/// Detection counts at one phase point, partitioned by schedule state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseCounts {
    pub n_x: u64,
    pub n_y: u64,
    pub n_x_in: u64,
    pub n_y_in: u64,
    pub n_x_out: u64,
    pub n_y_out: u64,
}

impl PhaseCounts {
    pub fn record(&mut self, detector: Detector, state: Bs2State) {
        match (detector, state) {
            (Detector::X, Bs2State::In) => {
                self.n_x += 1;
                self.n_x_in += 1;
            }
            (Detector::X, Bs2State::Out) => {
                self.n_x += 1;
                self.n_x_out += 1;
            }
            (Detector::Y, Bs2State::In) => {
                self.n_y += 1;
                self.n_y_in += 1;
            }
            (Detector::Y, Bs2State::Out) => {
                self.n_y += 1;
                self.n_y_out += 1;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.n_x + self.n_y
    }

    pub fn total_in(&self) -> u64 {
        self.n_x_in + self.n_y_in
    }

    pub fn total_out(&self) -> u64 {
        self.n_x_out + self.n_y_out
    }

    /// Partition identity: detector totals equal the sum over states.
    pub fn is_consistent(&self) -> bool {
        self.n_x == self.n_x_in + self.n_x_out && self.n_y == self.n_y_in + self.n_y_out
    }
}

/// Per-phase detection counts for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    phases: Vec<f64>,
    rows: Vec<PhaseCounts>,
}

impl CountTable {
    pub const CSV_HEADER: &'static str = "phase,n_x,n_y,n_x_in,n_y_in,n_x_out,n_y_out";

    pub fn new(phases: Vec<f64>, rows: Vec<PhaseCounts>) -> Self {
        assert_eq!(phases.len(), rows.len(), "one count row per phase");
        debug_assert!(rows.iter().all(PhaseCounts::is_consistent));
        Self { phases, rows }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn rows(&self) -> &[PhaseCounts] {
        &self.rows
    }

    pub fn total_events(&self) -> u64 {
        self.rows.iter().map(PhaseCounts::total).sum()
    }

    pub fn total_out_events(&self) -> u64 {
        self.rows.iter().map(PhaseCounts::total_out).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for (phase, row) in self.phases.iter().zip(&self.rows) {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                phase, row.n_x, row.n_y, row.n_x_in, row.n_y_in, row.n_x_out, row.n_y_out
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Detector click probabilities at phase `phi` for a given BS2 state: the
/// interference fringe when In, the flat half/half split when Out. The pair
/// sums to exactly 1.
pub fn detection_probs(phi: f64, state: Bs2State) -> (f64, f64) {
    let p_x = match state {
        Bs2State::In => 0.5 * (1.0 - phi.cos()),
        Bs2State::Out => 0.5,
    };
    (p_x, 1.0 - p_x)
}

/// Event log CSV, one row per detected particle.
pub fn write_event_csv<W: Write>(events: &[EventRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "time,phase,bs2_state,detector")?;
    for ev in events {
        writeln!(w, "{},{},{},{}", ev.time, ev.phase, ev.bs2_state, ev.detector)?;
    }
    Ok(())
}

/// Independent per-phase substream: same master seed, stream id = grid index.
fn phase_rng(seed: u64, phase_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase_index as u64);
    rng
}

/// Inverse-CDF exponential draw; one uniform per event.
fn exponential_wait<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

fn simulate_phase(
    schedule: &Schedule,
    phi: f64,
    phase_index: usize,
    n_events: u64,
    arrivals: ArrivalModel,
    seed: u64,
) -> (Vec<EventRecord>, PhaseCounts) {
    let mut rng = phase_rng(seed, phase_index);
    let total = schedule.total_time();
    let p_x_in = detection_probs(phi, Bs2State::In).0;
    let p_x_out = detection_probs(phi, Bs2State::Out).0;

    let mut events = Vec::with_capacity(n_events as usize);
    let mut counts = PhaseCounts::default();
    let mut poisson_cursor = 0.0;
    for i in 0..n_events {
        let raw_time = match arrivals {
            ArrivalModel::Uniform { rate } => i as f64 / rate,
            ArrivalModel::Poisson { rate } => {
                poisson_cursor += exponential_wait(&mut rng, rate);
                poisson_cursor
            }
        };
        let time = raw_time % total;
        let state = schedule
            .state_at(time)
            .expect("wrapped arrival time lies inside the window");
        let p_x = match state {
            Bs2State::In => p_x_in,
            Bs2State::Out => p_x_out,
        };
        let detector = if rng.gen::<f64>() < p_x {
            Detector::X
        } else {
            Detector::Y
        };
        counts.record(detector, state);
        events.push(EventRecord {
            time,
            bs2_state: state,
            phase: phi,
            detector,
        });
    }
    (events, counts)
}

/// Run the experiment: `n_events_per_phase` particles at every phase point,
/// counted per detector and schedule state. Fully deterministic for a fixed
/// seed, independent of how many workers execute the phase points.
pub fn run(
    schedule: &Schedule,
    phases: &[f64],
    n_events_per_phase: u64,
    arrivals: ArrivalModel,
    seed: u64,
) -> Result<(Vec<EventRecord>, CountTable), MonteCarloError> {
    if phases.is_empty() {
        return Err(MonteCarloError::EmptyPhaseGrid);
    }
    if let Some(&phase) = phases.iter().find(|p| !p.is_finite()) {
        return Err(MonteCarloError::NonFinitePhase { phase });
    }
    if n_events_per_phase == 0 {
        return Err(MonteCarloError::InvalidEventCount);
    }
    arrivals.validate()?;

    let per_phase: Vec<(Vec<EventRecord>, PhaseCounts)> = phases
        .par_iter()
        .enumerate()
        .map(|(idx, &phi)| simulate_phase(schedule, phi, idx, n_events_per_phase, arrivals, seed))
        .collect();

    let mut events = Vec::with_capacity(phases.len() * n_events_per_phase as usize);
    let mut rows = Vec::with_capacity(phases.len());
    for (phase_events, counts) in per_phase {
        events.extend(phase_events);
        rows.push(counts);
    }
    Ok((events, CountTable::new(phases.to_vec(), rows)))
}

/// Recount a list of events onto a phase grid, partitioned by detector and
/// schedule state. Totals are conserved by construction.
pub fn accumulate(events: &[EventRecord], phases: &[f64]) -> Result<CountTable, MonteCarloError> {
    if phases.is_empty() {
        return Err(MonteCarloError::EmptyPhaseGrid);
    }
    let index: HashMap<u64, usize> = phases
        .iter()
        .enumerate()
        .map(|(i, p)| (p.to_bits(), i))
        .collect();
    let mut rows = vec![PhaseCounts::default(); phases.len()];
    for ev in events {
        let &i = index
            .get(&ev.phase.to_bits())
            .ok_or(MonteCarloError::UnknownPhase { phase: ev.phase })?;
        rows[i].record(ev.detector, ev.bs2_state);
    }
    Ok(CountTable::new(phases.to_vec(), rows))
}
