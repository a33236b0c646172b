//! The two stationary interferometer pipelines and their output signals.
//!
//! With the second splitter in place the device is BS1 → phase plate → BS2
//! and detector x sees the full interference fringe; with it removed the
//! pipeline stops after the phase plate and each detector sees a constant
//! which-path signal.
//!
//! Conventions (fixed so the closed forms come out with no residual global
//! phase):
//! - beam splitters use the real Hadamard matrix (1/√2)·[[1, 1], [1, −1]];
//! - the phase φ is applied to path Y only, as diag(1, e^{iφ});
//! - mirrors add equal phase to both arms and are absorbed into the identity;
//! - detector x reads the second vector component: the minus-combination
//!   when BS2 is in, the phase-shifted path-Y beam when it is out.

use crate::optics::{ComplexAmp, ModeState, Unitary2};
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterferometerError {
    #[error("phase must be finite, got {phase}")]
    NonFinitePhase { phase: f64 },
    #[error("source amplitude must be finite and nonzero")]
    InvalidSourceAmplitude,
}

/// 50:50 beam splitter in the real Hadamard convention.
pub fn beam_splitter() -> Unitary2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Unitary2::new(h, h, h, -h)
}

/// Phase plate diag(1, e^{iφ}); the phase rides path Y only.
pub fn phase_plate(phi: f64) -> Unitary2 {
    Unitary2::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, phi),
    )
}

/// One stationary measurement configuration: BS2 status, arm phase, and the
/// source amplitude entering the upper port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// `true` means BS2 sits in the beam path (interference configuration).
    pub bs2_present: bool,
    /// Relative phase φ between the two arms, radians.
    pub phase: f64,
    /// Source amplitude ψ₀.
    pub source_amplitude: ComplexAmp,
}

impl PipelineConfig {
    pub fn new(
        bs2_present: bool,
        phase: f64,
        source_amplitude: ComplexAmp,
    ) -> Result<Self, InterferometerError> {
        let cfg = Self {
            bs2_present,
            phase,
            source_amplitude,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), InterferometerError> {
        if !self.phase.is_finite() {
            return Err(InterferometerError::NonFinitePhase { phase: self.phase });
        }
        if !self.source_amplitude.is_finite() || self.source_amplitude.norm_sqr() == 0.0 {
            return Err(InterferometerError::InvalidSourceAmplitude);
        }
        Ok(())
    }
}

/// Output amplitudes at the two detector ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputAmplitudes {
    pub at_x: ComplexAmp,
    pub at_y: ComplexAmp,
}

/// Detector intensities. `p0` is the per-path signal level |ψ₀|²/2; the two
/// ports always sum to 2·p0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortIntensities {
    pub p_x: f64,
    pub p_y: f64,
    pub p0: f64,
}

/// Propagate the source through the composed device pipeline.
///
/// The result is computed by composing the element matrices, never from the
/// closed forms directly; in debug builds it is cross-checked entrywise
/// against [`closed_form_amplitudes`].
pub fn propagate(cfg: &PipelineConfig) -> OutputAmplitudes {
    debug_assert!(cfg.validate().is_ok(), "invalid pipeline config");
    let input = ModeState::new(cfg.source_amplitude, Complex64::new(0.0, 0.0));
    let first_half = beam_splitter()
        .compose(&phase_plate(cfg.phase))
        .expect("pipeline elements are unitary by construction");
    let pipeline = if cfg.bs2_present {
        first_half
            .compose(&beam_splitter())
            .expect("pipeline elements are unitary by construction")
    } else {
        first_half
    };
    let out = pipeline
        .apply_element(&input)
        .expect("composed pipeline stays unitary");
    let result = OutputAmplitudes {
        at_x: out.amp_y,
        at_y: out.amp_x,
    };
    debug_assert!({
        let reference = closed_form_amplitudes(cfg);
        (result.at_x - reference.at_x).norm() <= 1e-12
            && (result.at_y - reference.at_y).norm() <= 1e-12
    });
    result
}

/// Closed-form output amplitudes: the independent algebraic route used to
/// cross-check the composed pipeline.
///
/// BS2 in:  at_x = ψ₀(1 − e^{iφ})/2,  at_y = ψ₀(1 + e^{iφ})/2.
/// BS2 out: at_x = ψ₀ e^{iφ}/√2,      at_y = ψ₀/√2.
pub fn closed_form_amplitudes(cfg: &PipelineConfig) -> OutputAmplitudes {
    let psi0 = cfg.source_amplitude;
    let e = Complex64::from_polar(1.0, cfg.phase);
    let one = Complex64::new(1.0, 0.0);
    if cfg.bs2_present {
        OutputAmplitudes {
            at_x: psi0 * (one - e) * 0.5,
            at_y: psi0 * (one + e) * 0.5,
        }
    } else {
        OutputAmplitudes {
            at_x: psi0 * e * FRAC_1_SQRT_2,
            at_y: psi0 * FRAC_1_SQRT_2,
        }
    }
}

/// Detector intensities from output amplitudes.
pub fn intensities(out: &OutputAmplitudes) -> PortIntensities {
    let p_x = out.at_x.norm_sqr();
    let p_y = out.at_y.norm_sqr();
    PortIntensities {
        p_x,
        p_y,
        p0: 0.5 * (p_x + p_y),
    }
}
