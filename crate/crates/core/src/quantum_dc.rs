//! The rival stationary-superposition picture and its comparison against
//! duty-modulated control.
//!
//! Three routes to the same averaged signal live here or next door:
//! the duty-damped fringe prediction ([`crate::analysis`]), the
//! duty-weighted mixture of the two stationary configurations, and the
//! marginal of an ancilla-tagged superposition state in which a control
//! qubit records whether the second splitter acted. The three agree to
//! rounding at every (θ, φ) — averaged statistics cannot tell the pictures
//! apart. What can: conditioning events on the schedule state, a statistic
//! that exists only for schedule-tagged records. [`event_level_discriminator`]
//! computes it.

use crate::analysis::{self, AnalysisError, FringeScan};
use crate::interferometer::{closed_form_amplitudes, PipelineConfig};
use crate::modulation::Bs2State;
use crate::montecarlo::{accumulate, Detector, EventRecord};
use crate::optics::ComplexAmp;
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};
use thiserror::Error;

/// Conditioned-visibility thresholds for calling a record time-modulated:
/// the In subset must show an essentially full fringe, the Out subset an
/// essentially flat line.
pub const CONDITIONED_VIS_IN_MIN: f64 = 0.99;
pub const CONDITIONED_VIS_OUT_MAX: f64 = 0.02;

/// Tolerance on the squared norm of states fed to [`ancilla_marginal`].
pub const MARGINAL_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumDcError {
    #[error("theta must lie in [0, \u{03c0}/2], got {theta}")]
    ThetaOutOfRange { theta: f64 },
    #[error("state is not normalized: norm\u{00b2} = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },
    #[error("mixture weights must be in [0, 1] and sum to 1, got {a_weight} and {b_weight}")]
    InvalidWeights { a_weight: f64, b_weight: f64 },
    #[error("no events to discriminate")]
    EmptySubset,
    #[error("conditioned fit failed: {0}")]
    Fit(#[from] AnalysisError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for QuantumDcError {
    fn from(e: io::Error) -> Self {
        QuantumDcError::Io(e.to_string())
    }
}

fn check_theta(theta: f64) -> Result<(), QuantumDcError> {
    if theta.is_finite() && (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(QuantumDcError::ThetaOutOfRange { theta })
    }
}

/// Duty-weighted average of the two stationary configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureModel {
    pub a_weight: f64,
    pub b_weight: f64,
}

impl MixtureModel {
    pub fn new(a_weight: f64, b_weight: f64) -> Result<Self, QuantumDcError> {
        let valid = a_weight.is_finite()
            && b_weight.is_finite()
            && (0.0..=1.0).contains(&a_weight)
            && (0.0..=1.0).contains(&b_weight)
            && (a_weight + b_weight - 1.0).abs() <= 1e-12;
        if valid {
            Ok(Self { a_weight, b_weight })
        } else {
            Err(QuantumDcError::InvalidWeights { a_weight, b_weight })
        }
    }

    pub fn from_in_fraction(a_weight: f64) -> Result<Self, QuantumDcError> {
        Self::new(a_weight, 1.0 - a_weight)
    }
}

/// Mixture-averaged detector rates: A times the fringe plus B times the
/// flat which-path signal. Identical (up to rounding) to the duty-damped
/// prediction at sin²θ = A.
pub fn mixture_intensity(model: &MixtureModel, phi: f64) -> (f64, f64) {
    let fringe_x = 0.5 * (1.0 - phi.cos());
    let fringe_y = 0.5 * (1.0 + phi.cos());
    (
        model.a_weight * fringe_x + model.b_weight * 0.5,
        model.a_weight * fringe_y + model.b_weight * 0.5,
    )
}

/// Joint state of the output port and a control ancilla: four complex
/// amplitudes indexed by (port, ancilla).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaState {
    amps: [ComplexAmp; 4],
}

impl AncillaState {
    pub fn new(amps: [ComplexAmp; 4]) -> Self {
        Self { amps }
    }

    fn index(port: Detector, ancilla: bool) -> usize {
        let port_bit = match port {
            Detector::X => 0,
            Detector::Y => 1,
        };
        port_bit * 2 + ancilla as usize
    }

    pub fn amplitude(&self, port: Detector, ancilla: bool) -> ComplexAmp {
        self.amps[Self::index(port, ancilla)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Stationary-superposition state with the ancilla tagging which splitter
/// configuration acted: cos θ weights the which-path branch on ancilla |0⟩,
/// sin θ the fringe branch on ancilla |1⟩. The two branches are orthogonal
/// through the tag, so the state is normalized by construction.
pub fn ancilla_evolve(theta: f64, phi: f64) -> Result<AncillaState, QuantumDcError> {
    check_theta(theta)?;
    let source = Complex64::new(1.0, 0.0);
    let particle = closed_form_amplitudes(&PipelineConfig {
        bs2_present: false,
        phase: phi,
        source_amplitude: source,
    });
    let wave = closed_form_amplitudes(&PipelineConfig {
        bs2_present: true,
        phase: phi,
        source_amplitude: source,
    });
    let (s, c) = (theta.sin(), theta.cos());
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    amps[AncillaState::index(Detector::X, false)] = particle.at_x * c;
    amps[AncillaState::index(Detector::Y, false)] = particle.at_y * c;
    amps[AncillaState::index(Detector::X, true)] = wave.at_x * s;
    amps[AncillaState::index(Detector::Y, true)] = wave.at_y * s;
    Ok(AncillaState::new(amps))
}

/// Port probabilities with the ancilla traced out.
pub fn ancilla_marginal(state: &AncillaState) -> Result<(f64, f64), QuantumDcError> {
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > MARGINAL_NORM_TOL {
        return Err(QuantumDcError::NotNormalized { norm_sqr });
    }
    let p_x = state.amplitude(Detector::X, false).norm_sqr()
        + state.amplitude(Detector::X, true).norm_sqr();
    let p_y = state.amplitude(Detector::Y, false).norm_sqr()
        + state.amplitude(Detector::Y, true).norm_sqr();
    Ok((p_x, p_y))
}

/// Detector-x rate at one (θ, φ) under all three routes, with the largest
/// pairwise discrepancy over both ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeModelPoint {
    pub theta: f64,
    pub phi: f64,
    pub p_modulated: f64,
    pub p_mixture: f64,
    pub p_ancilla: f64,
    pub max_abs_diff: f64,
}

pub fn three_model_intensities(theta: f64, phi: f64) -> Result<ThreeModelPoint, QuantumDcError> {
    check_theta(theta)?;
    let (mod_x, mod_y) =
        analysis::predicted_modulated_intensity(theta, phi).map_err(QuantumDcError::Fit)?;
    let mixture = MixtureModel::from_in_fraction(theta.sin().powi(2))?;
    let (mix_x, mix_y) = mixture_intensity(&mixture, phi);
    let (anc_x, anc_y) = ancilla_marginal(&ancilla_evolve(theta, phi)?)?;
    let max_abs_diff = [
        (mod_x - mix_x).abs(),
        (mod_x - anc_x).abs(),
        (mix_x - anc_x).abs(),
        (mod_y - mix_y).abs(),
        (mod_y - anc_y).abs(),
        (mix_y - anc_y).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(ThreeModelPoint {
        theta,
        phi,
        p_modulated: mod_x,
        p_mixture: mix_x,
        p_ancilla: anc_x,
        max_abs_diff,
    })
}

/// Comparison CSV over a (θ, φ) grid; returns the global max pairwise
/// discrepancy.
pub fn write_comparison_csv<W: Write>(
    mut w: W,
    thetas: &[f64],
    phis: &[f64],
) -> Result<f64, QuantumDcError> {
    writeln!(w, "theta,phi,p_modulated,p_mixture,p_ancilla,max_abs_diff")?;
    let mut global_max: f64 = 0.0;
    for &theta in thetas {
        for &phi in phis {
            let point = three_model_intensities(theta, phi)?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                point.theta,
                point.phi,
                point.p_modulated,
                point.p_mixture,
                point.p_ancilla,
                point.max_abs_diff
            )?;
            global_max = global_max.max(point.max_abs_diff);
        }
    }
    Ok(global_max)
}

/// Fit result over one schedule-state subset of a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetVisibility {
    pub n_events: u64,
    pub visibility: f64,
    pub visibility_err: f64,
}

/// Conditioned visibilities of a schedule-tagged event record. A record
/// produced by duty modulation splits into a full-visibility In subset and a
/// flat Out subset even when the unconditioned scan shows only the damped
/// fringe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminatorReport {
    pub in_subset: Option<SubsetVisibility>,
    pub out_subset: Option<SubsetVisibility>,
    /// Which-path identification rate over the Out subset; 1 whenever that
    /// subset is nonempty.
    pub out_distinguishability: Option<f64>,
    /// Whether V(In) ≥ [`CONDITIONED_VIS_IN_MIN`] and V(Out) ≤
    /// [`CONDITIONED_VIS_OUT_MAX`]; `None` when a subset is empty.
    pub consistent_with_modulation: Option<bool>,
}

impl DiscriminatorReport {
    /// The schedule state whose subset is empty, if any.
    pub fn empty_subset(&self) -> Option<Bs2State> {
        if self.in_subset.is_none() {
            Some(Bs2State::In)
        } else if self.out_subset.is_none() {
            Some(Bs2State::Out)
        } else {
            None
        }
    }
}

/// Split a record by schedule state and fit each subset's fringe.
pub fn event_level_discriminator(
    events: &[EventRecord],
) -> Result<DiscriminatorReport, QuantumDcError> {
    if events.is_empty() {
        return Err(QuantumDcError::EmptySubset);
    }
    let mut phases: Vec<f64> = events.iter().map(|ev| ev.phase).collect();
    phases.sort_by(f64::total_cmp);
    phases.dedup_by(|a, b| a.to_bits() == b.to_bits());
    let table = accumulate(events, &phases).expect("grid was built from the events themselves");

    let fit_subset = |state: Bs2State| -> Result<Option<SubsetVisibility>, QuantumDcError> {
        let scan = match FringeScan::from_counts_conditioned(&table, state) {
            Ok(scan) => scan,
            Err(AnalysisError::EmptyTable) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let n_events: u64 = table
            .rows()
            .iter()
            .map(|row| match state {
                Bs2State::In => row.total_in(),
                Bs2State::Out => row.total_out(),
            })
            .sum();
        let (visibility, visibility_err) = analysis::estimate_visibility(&scan)?;
        Ok(Some(SubsetVisibility {
            n_events,
            visibility,
            visibility_err,
        }))
    };

    let in_subset = fit_subset(Bs2State::In)?;
    let out_subset = fit_subset(Bs2State::Out)?;
    let out_distinguishability = out_subset.as_ref().map(|_| 1.0);
    let consistent_with_modulation = match (&in_subset, &out_subset) {
        (Some(vin), Some(vout)) => Some(
            vin.visibility >= CONDITIONED_VIS_IN_MIN
                && vout.visibility <= CONDITIONED_VIS_OUT_MAX,
        ),
        _ => None,
    };
    Ok(DiscriminatorReport {
        in_subset,
        out_subset,
        out_distinguishability,
        consistent_with_modulation,
    })
}
