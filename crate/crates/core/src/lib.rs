//! Single-particle Mach-Zehnder interferometer simulator with a
//! time-modulated second beam splitter.
//!
//! The crate builds the two stationary device pipelines (splitter in /
//! splitter out), drives single-particle detection events against a
//! piecewise-constant in/out schedule, estimates fringe visibility and
//! which-path distinguishability from the resulting counts, and compares the
//! averaged signal against the stationary-superposition (duty-weighted
//! mixture / ancilla-tagged) description of the same experiment.
//!
//! Modules:
//! - [`optics`] — two-mode states and 2×2 unitary pipeline elements;
//! - [`interferometer`] — the stationary configurations and their signals;
//! - [`modulation`] — schedules for the splitter's in/out control;
//! - [`montecarlo`] — seeded event-by-event detection with per-phase
//!   substreams;
//! - [`analysis`] — fringe fits, duality measures, complementarity residual;
//! - [`quantum_dc`] — the stationary-superposition comparator and the
//!   event-level discriminator between the two pictures.
//!
//! # Example
//!
//! A half-duty run: the measured visibility and distinguishability each come
//! out near 1/2 and sum to 1.
//!
//! ```
//! use mzi_core::analysis::{estimate_distinguishability, estimate_visibility, FringeScan};
//! use mzi_core::modulation::make_periodic;
//! use mzi_core::montecarlo::{run, ArrivalModel};
//! use mzi_core::linspace;
//!
//! let schedule = make_periodic(0.5, 0.1, 1.0).unwrap();
//! let phases = linspace(0.0, std::f64::consts::TAU, 21);
//! let arrivals = ArrivalModel::Uniform { rate: 10_000.0 };
//! let (_events, table) = run(&schedule, &phases, 10_000, arrivals, 42).unwrap();
//!
//! let scan = FringeScan::from_counts(&table).unwrap();
//! let (v, _) = estimate_visibility(&scan).unwrap();
//! let (d, _) = estimate_distinguishability(&table, &schedule.duty_fractions()).unwrap();
//! assert!((v + d - 1.0).abs() < 0.05);
//! ```

pub mod analysis;
pub mod interferometer;
pub mod modulation;
pub mod montecarlo;
pub mod optics;
pub mod quantum_dc;

pub use analysis::{DualityMeasures, FringeScan};
pub use interferometer::{OutputAmplitudes, PipelineConfig, PortIntensities};
pub use modulation::{Bs2State, DutyFractions, Schedule, Segment};
pub use montecarlo::{ArrivalModel, CountTable, Detector, EventRecord};
pub use optics::{ComplexAmp, ModeState, Unitary2};
pub use quantum_dc::{AncillaState, DiscriminatorReport, MixtureModel};

/// Evenly spaced grid with both endpoints included; the last point is
/// pinned to `stop` exactly.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|j| {
                    if j + 1 == count {
                        stop
                    } else {
                        start + j as f64 * step
                    }
                })
                .collect()
        }
    }
}
