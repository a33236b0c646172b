//! Complex two-mode linear algebra: amplitudes on the two interferometer
//! paths, 2×2 unitary elements, and their composition.
//!
//! Every device in the scattering pipeline (beam splitter, phase plate,
//! mirror) is a [`Unitary2`] acting on a [`ModeState`]. Amplitudes are kept
//! as raw complex pairs rather than polar form so destructive-interference
//! zeros come out exact.

use num_complex::Complex64;
use thiserror::Error;

/// Complex amplitude on an interferometer path or output port.
pub type ComplexAmp = Complex64;

/// Tolerance for the unitarity precondition on pipeline elements.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    /// The element failed the U†U = I check.
    #[error("element is not unitary: max entrywise |U\u{2020}U - I| = {deviation:.3e}")]
    NonUnitaryElement { deviation: f64 },
}

/// Amplitudes on the two paths (equivalently, the two ports) of the
/// interferometer. `amp_x` rides the upper path, `amp_y` the lower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub amp_x: ComplexAmp,
    pub amp_y: ComplexAmp,
}

impl ModeState {
    pub const fn new(amp_x: ComplexAmp, amp_y: ComplexAmp) -> Self {
        Self { amp_x, amp_y }
    }

    /// Total intensity |amp_x|² + |amp_y|²; conserved by every unitary element.
    pub fn norm_sqr(&self) -> f64 {
        self.amp_x.norm_sqr() + self.amp_y.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.amp_x.is_finite() && self.amp_y.is_finite()
    }
}

/// A 2×2 unitary element of the scattering pipeline, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub u00: ComplexAmp,
    pub u01: ComplexAmp,
    pub u10: ComplexAmp,
    pub u11: ComplexAmp,
}

impl Unitary2 {
    pub const fn new(u00: ComplexAmp, u01: ComplexAmp, u10: ComplexAmp, u11: ComplexAmp) -> Self {
        Self { u00, u01, u10, u11 }
    }

    pub fn identity() -> Self {
        Self::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
    }

    /// Max entrywise modulus of U†U − I.
    pub fn unitarity_deviation(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        let d00 = self.u00.conj() * self.u00 + self.u10.conj() * self.u10 - one;
        let d01 = self.u00.conj() * self.u01 + self.u10.conj() * self.u11;
        let d10 = self.u01.conj() * self.u00 + self.u11.conj() * self.u10;
        let d11 = self.u01.conj() * self.u01 + self.u11.conj() * self.u11 - one;
        [d00.norm(), d01.norm(), d10.norm(), d11.norm()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// True iff max entrywise |U†U − I| ≤ `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        debug_assert!(tol > 0.0, "unitarity tolerance must be positive");
        self.unitarity_deviation() <= tol
    }

    fn require_unitary(&self) -> Result<(), OpticsError> {
        let deviation = self.unitarity_deviation();
        if deviation <= UNITARITY_TOL {
            Ok(())
        } else {
            Err(OpticsError::NonUnitaryElement { deviation })
        }
    }

    /// Apply this element to a state (matrix-vector product). Norm² is
    /// preserved to 1e-12 relative.
    pub fn apply_element(&self, state: &ModeState) -> Result<ModeState, OpticsError> {
        self.require_unitary()?;
        Ok(ModeState::new(
            self.u00 * state.amp_x + self.u01 * state.amp_y,
            self.u10 * state.amp_x + self.u11 * state.amp_y,
        ))
    }

    /// `self` followed by `then`; the result is the matrix product
    /// `then · self`.
    pub fn compose(&self, then: &Unitary2) -> Result<Unitary2, OpticsError> {
        self.require_unitary()?;
        then.require_unitary()?;
        Ok(Unitary2::new(
            then.u00 * self.u00 + then.u01 * self.u10,
            then.u00 * self.u01 + then.u01 * self.u11,
            then.u10 * self.u00 + then.u11 * self.u10,
            then.u10 * self.u01 + then.u11 * self.u11,
        ))
    }
}
