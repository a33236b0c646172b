//! Closed-form fringe predictions and statistical estimators.
//!
//! All rates here are normalized so the two ports sum to 1 (per-path level
//! P₀ = 1/2), matching count fractions directly. The visibility estimator is
//! a cosine least-squares fit — grid extremes are biased upward under noise,
//! so the raw max/min contrast is exposed separately. Distinguishability is
//! the fraction of events recorded with the splitter out, during which the
//! path is fully identified.

use crate::modulation::{Bs2State, DutyFractions};
use crate::montecarlo::{CountTable, PhaseCounts};
use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};
use thiserror::Error;

/// Normalized per-path signal level: rates are count fractions.
pub const P0_NORMALIZED: f64 = 0.5;

/// Minimum phase span the fit accepts; the cosine model is identifiable
/// once the grid covers half a fringe period.
pub const MIN_FIT_SPAN: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("theta must lie in [0, \u{03c0}/2], got {theta}")]
    ThetaOutOfRange { theta: f64 },
    #[error("fringe fit needs at least 5 phase points spanning {MIN_FIT_SPAN} rad, got {points} over {span}")]
    InsufficientPhaseCoverage { points: usize, span: f64 },
    #[error("fringe fit is rank-deficient on this phase grid")]
    DegenerateFit,
    #[error("count table holds no events")]
    EmptyTable,
    #[error("scan vectors must have equal lengths")]
    LengthMismatch,
    #[error("rate {rate} at index {index} is outside [0, 1]")]
    InvalidRate { index: usize, rate: f64 },
    #[error(
        "count table contradicts the schedule: out-event fraction {observed} vs duty {expected}"
    )]
    ScheduleMismatch { expected: f64, observed: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for AnalysisError {
    fn from(e: io::Error) -> Self {
        AnalysisError::Io(e.to_string())
    }
}

fn check_theta(theta: f64) -> Result<(), AnalysisError> {
    if theta.is_finite() && (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(AnalysisError::ThetaOutOfRange { theta })
    }
}

/// Detector-x rates versus phase, with binomial standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub phases: Vec<f64>,
    pub rates_x: Vec<f64>,
    pub uncertainties: Vec<f64>,
}

impl FringeScan {
    pub fn new(
        phases: Vec<f64>,
        rates_x: Vec<f64>,
        uncertainties: Vec<f64>,
    ) -> Result<Self, AnalysisError> {
        if phases.len() != rates_x.len() || phases.len() != uncertainties.len() {
            return Err(AnalysisError::LengthMismatch);
        }
        for (index, &rate) in rates_x.iter().enumerate() {
            if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
                return Err(AnalysisError::InvalidRate { index, rate });
            }
        }
        Ok(Self {
            phases,
            rates_x,
            uncertainties,
        })
    }

    /// Unconditioned scan: all events at each phase.
    pub fn from_counts(table: &CountTable) -> Result<Self, AnalysisError> {
        Self::from_rows(table, |row| (row.n_x, row.total()))
    }

    /// Scan restricted to events recorded with the given BS2 state. Phases
    /// where the subset is empty are skipped.
    pub fn from_counts_conditioned(
        table: &CountTable,
        state: Bs2State,
    ) -> Result<Self, AnalysisError> {
        match state {
            Bs2State::In => Self::from_rows(table, |row| (row.n_x_in, row.total_in())),
            Bs2State::Out => Self::from_rows(table, |row| (row.n_x_out, row.total_out())),
        }
    }

    fn from_rows(
        table: &CountTable,
        select: impl Fn(&PhaseCounts) -> (u64, u64),
    ) -> Result<Self, AnalysisError> {
        let mut phases = Vec::new();
        let mut rates = Vec::new();
        let mut errors = Vec::new();
        for (&phase, row) in table.phases().iter().zip(table.rows()) {
            let (hits, total) = select(row);
            if total == 0 {
                continue;
            }
            let n = total as f64;
            let rate = hits as f64 / n;
            phases.push(phase);
            rates.push(rate);
            errors.push((rate * (1.0 - rate) / n).sqrt());
        }
        if phases.is_empty() {
            return Err(AnalysisError::EmptyTable);
        }
        Self::new(phases, rates, errors)
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Estimated visibility and distinguishability, with the residual of the
/// complementarity identity V + D = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityMeasures {
    pub visibility: f64,
    pub distinguishability: f64,
    pub residual: f64,
}

impl DualityMeasures {
    pub fn new(visibility: f64, distinguishability: f64) -> Self {
        Self {
            visibility,
            distinguishability,
            residual: (visibility + distinguishability - 1.0).abs(),
        }
    }
}

/// Detector rates under duty-modulated control: p_x = (1 − sin²θ·cos φ)/2,
/// the fringe damped by the In-duty sin²θ. The ports sum to exactly 1.
pub fn predicted_modulated_intensity(theta: f64, phi: f64) -> Result<(f64, f64), AnalysisError> {
    check_theta(theta)?;
    let damping = theta.sin().powi(2);
    let p_x = 0.5 * (1.0 - damping * phi.cos());
    Ok((p_x, 1.0 - p_x))
}

/// Absolute discrepancy between the offset-cosine form
/// 2·P₀·[cos²(φ/2)·sin²θ + ½·cos²θ] and the detector-y rate
/// P₀·(1 + sin²θ·cos φ). The two are algebraically identical (the offset
/// form matches the y port, i.e. the x-port fringe shifted by π), so the
/// returned value is zero to rounding for every input.
pub fn offset_fringe_discrepancy(theta: f64, phi: f64) -> Result<f64, AnalysisError> {
    check_theta(theta)?;
    let sin2 = theta.sin().powi(2);
    let cos2 = theta.cos().powi(2);
    let offset_form = 2.0 * P0_NORMALIZED * ((0.5 * phi).cos().powi(2) * sin2 + 0.5 * cos2);
    let y_port = P0_NORMALIZED * (1.0 + sin2 * phi.cos());
    Ok((offset_form - y_port).abs())
}

/// Least-squares fit of rate(φ) = c₀ + c₁·cos φ; the visibility estimate is
/// |c₁|/c₀ clipped to [0, 1], with its uncertainty propagated from the fit
/// covariance (per-point binomial errors when available, residual scatter
/// otherwise). On noise-free model rates this recovers the duty sin²θ.
pub fn estimate_visibility(scan: &FringeScan) -> Result<(f64, f64), AnalysisError> {
    let n = scan.len();
    let span = scan
        .phases
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            (lo.min(p), hi.max(p))
        });
    let span = span.1 - span.0;
    if n < 5 || !span.is_finite() || span < MIN_FIT_SPAN - 1e-9 {
        return Err(AnalysisError::InsufficientPhaseCoverage { points: n, span });
    }

    let cosines: Vec<f64> = scan.phases.iter().map(|p| p.cos()).collect();
    let sn = n as f64;
    let sc: f64 = cosines.iter().sum();
    let scc: f64 = cosines.iter().map(|c| c * c).sum();
    let sr: f64 = scan.rates_x.iter().sum();
    let src: f64 = scan
        .rates_x
        .iter()
        .zip(&cosines)
        .map(|(r, c)| r * c)
        .sum();

    let det = sn * scc - sc * sc;
    if det <= 1e-12 * sn * scc.max(1.0) {
        // All cosines effectively equal: the offset and the fringe amplitude
        // cannot be separated. A flat scan still has a well-defined answer.
        let mean = sr / sn;
        let scatter = (scan
            .rates_x
            .iter()
            .map(|r| (r - mean).powi(2))
            .sum::<f64>()
            / sn)
            .sqrt();
        if scan.rates_x.iter().all(|r| (r - mean).abs() <= 1e-9) {
            return Ok((0.0, scatter));
        }
        return Err(AnalysisError::DegenerateFit);
    }

    let c0 = (scc * sr - sc * src) / det;
    let c1 = (sn * src - sc * sr) / det;
    if c0 <= 0.0 {
        return Err(AnalysisError::DegenerateFit);
    }

    // Covariance of (c0, c1). With per-point errors: the sandwich
    // A⁻¹ (Xᵀ diag(σ²) X) A⁻¹; without: residual variance times A⁻¹.
    let inv00 = scc / det;
    let inv01 = -sc / det;
    let inv11 = sn / det;
    let (v00, v01, v11) = if scan.uncertainties.iter().any(|&s| s > 0.0) {
        let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
        for (&sigma, &c) in scan.uncertainties.iter().zip(&cosines) {
            let s2 = sigma * sigma;
            m00 += s2;
            m01 += s2 * c;
            m11 += s2 * c * c;
        }
        (
            inv00 * (m00 * inv00 + m01 * inv01) + inv01 * (m01 * inv00 + m11 * inv01),
            inv00 * (m00 * inv01 + m01 * inv11) + inv01 * (m01 * inv01 + m11 * inv11),
            inv01 * (m00 * inv01 + m01 * inv11) + inv11 * (m01 * inv01 + m11 * inv11),
        )
    } else {
        let rss: f64 = scan
            .rates_x
            .iter()
            .zip(&cosines)
            .map(|(r, c)| (r - c0 - c1 * c).powi(2))
            .sum();
        let s2 = rss / (sn - 2.0);
        (s2 * inv00, s2 * inv01, s2 * inv11)
    };

    let v_raw = c1.abs() / c0;
    let g0 = -v_raw / c0;
    let g1 = c1.signum() / c0;
    let var_v = (g0 * g0 * v00 + 2.0 * g0 * g1 * v01 + g1 * g1 * v11).max(0.0);
    Ok((v_raw.clamp(0.0, 1.0), var_v.sqrt()))
}

/// Raw fringe contrast (max − min)/(max + min) over the grid. Biased upward
/// on noisy scans; the fit estimator is the default.
pub fn visibility_from_extremes(scan: &FringeScan) -> Result<f64, AnalysisError> {
    if scan.is_empty() {
        return Err(AnalysisError::EmptyTable);
    }
    let (min, max) = scan
        .rates_x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    if max + min == 0.0 {
        return Ok(0.0);
    }
    Ok((max - min) / (max + min))
}

/// Which-path distinguishability: the fraction of events recorded with the
/// splitter out, since each such event's path is fully identified and an
/// In event's path not at all. The expected value is the Out duty cos²θ.
/// `fractions` carries the schedule's duty for a consistency check against
/// degenerate tables.
pub fn estimate_distinguishability(
    table: &CountTable,
    fractions: &DutyFractions,
) -> Result<(f64, f64), AnalysisError> {
    let total = table.total_events();
    if total == 0 {
        return Err(AnalysisError::EmptyTable);
    }
    let out = table.total_out_events();
    let observed = out as f64 / total as f64;
    // A schedule that never leaves one state cannot produce events in the
    // other; counts saying otherwise were built against a different schedule.
    if (fractions.b_frac == 0.0 && out > 0) || (fractions.a_frac == 0.0 && out < total) {
        return Err(AnalysisError::ScheduleMismatch {
            expected: fractions.b_frac,
            observed,
        });
    }
    let err = (observed * (1.0 - observed) / total as f64).sqrt();
    Ok((observed, err))
}

/// Residual |V + D − 1| of the complementarity identity.
pub fn complementarity_check(measures: &DualityMeasures) -> f64 {
    (measures.visibility + measures.distinguishability - 1.0).abs()
}

/// Analysis report CSV: per-phase predicted and observed rates, then a
/// summary line `V=<v> D=<d> residual=<r>`.
pub fn write_report<W: Write>(
    mut w: W,
    theta: f64,
    scan: &FringeScan,
    measures: &DualityMeasures,
) -> Result<(), AnalysisError> {
    check_theta(theta)?;
    writeln!(w, "theta,phase,rate_pred,rate_obs,stderr")?;
    for ((&phase, &rate), &sigma) in scan
        .phases
        .iter()
        .zip(&scan.rates_x)
        .zip(&scan.uncertainties)
    {
        let (pred, _) = predicted_modulated_intensity(theta, phase)?;
        writeln!(w, "{},{},{},{},{}", theta, phase, pred, rate, sigma)?;
    }
    writeln!(
        w,
        "V={} D={} residual={}",
        measures.visibility, measures.distinguishability, measures.residual
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linspace;
    use crate::montecarlo::PhaseCounts;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

    fn exact_scan(theta: f64, points: usize) -> FringeScan {
        let phases = linspace(0.0, 2.0 * PI, points);
        let rates = phases
            .iter()
            .map(|&p| predicted_modulated_intensity(theta, p).unwrap().0)
            .collect();
        let sigmas = vec![0.0; points];
        FringeScan::new(phases, rates, sigmas).unwrap()
    }

    fn table_with(rows: Vec<PhaseCounts>) -> CountTable {
        let phases = (0..rows.len()).map(|i| i as f64).collect();
        CountTable::new(phases, rows)
    }

    #[test]
    fn predicted_reduces_to_pure_fringe_and_flat_line() {
        for &phi in &[0.0, 0.7, 2.0, PI, 5.0] {
            let (fringe, _) = predicted_modulated_intensity(FRAC_PI_2, phi).unwrap();
            assert!((fringe - 0.5 * (1.0 - phi.cos())).abs() <= 1e-15);
            let (flat, _) = predicted_modulated_intensity(0.0, phi).unwrap();
            assert_eq!(flat, 0.5);
        }
        let (quarter, _) = predicted_modulated_intensity(FRAC_PI_4, 0.0).unwrap();
        assert!((quarter - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn predicted_ports_sum_to_one() {
        for &theta in &linspace(0.0, FRAC_PI_2, 50) {
            for &phi in &linspace(0.0, 2.0 * PI, 50) {
                let (px, py) = predicted_modulated_intensity(theta, phi).unwrap();
                assert_eq!(px + py, 1.0);
            }
        }
    }

    #[test]
    fn theta_outside_quarter_turn_is_rejected() {
        assert!(matches!(
            predicted_modulated_intensity(-0.1, 0.0),
            Err(AnalysisError::ThetaOutOfRange { .. })
        ));
        assert!(matches!(
            offset_fringe_discrepancy(FRAC_PI_2 + 0.1, 0.0),
            Err(AnalysisError::ThetaOutOfRange { .. })
        ));
    }

    #[test]
    fn offset_form_matches_y_port_everywhere() {
        assert_eq!(offset_fringe_discrepancy(FRAC_PI_2, 0.0).unwrap(), 0.0);
        assert!(offset_fringe_discrepancy(0.0, 2.5).unwrap() <= 1e-15);
        assert!(offset_fringe_discrepancy(FRAC_PI_3, 2.0 * PI / 3.0).unwrap() <= 1e-12);
        for &theta in &linspace(0.0, FRAC_PI_2, 100) {
            for &phi in &linspace(0.0, 2.0 * PI, 100) {
                assert!(offset_fringe_discrepancy(theta, phi).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn fit_recovers_exact_visibilities() {
        let (v, _) = estimate_visibility(&exact_scan(FRAC_PI_2, 21)).unwrap();
        assert!((v - 1.0).abs() <= 1e-9);
        let (v, _) = estimate_visibility(&exact_scan(0.0, 21)).unwrap();
        assert!(v.abs() <= 1e-9);
        let (v, _) = estimate_visibility(&exact_scan(FRAC_PI_4, 21)).unwrap();
        assert!((v - 0.5).abs() <= 1e-9);
        for theta in [0.0, FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2] {
            let (v, _) = estimate_visibility(&exact_scan(theta, 21)).unwrap();
            assert!((v - theta.sin().powi(2)).abs() <= 1e-9, "theta = {theta}");
        }
    }

    #[test]
    fn extremes_estimator_matches_on_exact_data() {
        let v = visibility_from_extremes(&exact_scan(FRAC_PI_4, 21)).unwrap();
        assert!((v - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn fit_rejects_sparse_or_narrow_grids() {
        let narrow = FringeScan::new(
            vec![0.0, 0.1, 0.2, 0.3, 0.4],
            vec![0.5; 5],
            vec![0.0; 5],
        )
        .unwrap();
        assert!(matches!(
            estimate_visibility(&narrow),
            Err(AnalysisError::InsufficientPhaseCoverage { .. })
        ));
        let sparse = FringeScan::new(vec![0.0, PI, 2.0 * PI], vec![0.5; 3], vec![0.0; 3]).unwrap();
        assert!(matches!(
            estimate_visibility(&sparse),
            Err(AnalysisError::InsufficientPhaseCoverage { .. })
        ));
    }

    #[test]
    fn degenerate_grid_with_flat_rates_reports_zero_visibility() {
        // Five phases with identical cosines: rank-deficient design matrix.
        let phases = vec![
            FRAC_PI_3,
            2.0 * PI - FRAC_PI_3,
            2.0 * PI + FRAC_PI_3,
            4.0 * PI - FRAC_PI_3,
            4.0 * PI + FRAC_PI_3,
        ];
        let flat = FringeScan::new(phases.clone(), vec![0.5; 5], vec![0.0; 5]).unwrap();
        let (v, err) = estimate_visibility(&flat).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(err, 0.0);

        let varying =
            FringeScan::new(phases, vec![0.1, 0.2, 0.3, 0.4, 0.5], vec![0.0; 5]).unwrap();
        assert!(matches!(
            estimate_visibility(&varying),
            Err(AnalysisError::DegenerateFit)
        ));
    }

    #[test]
    fn fit_visibility_is_monotone_in_theta_on_exact_data() {
        let mut previous = -1.0;
        for i in 0..=20 {
            let theta = FRAC_PI_2 * i as f64 / 20.0;
            let (v, _) = estimate_visibility(&exact_scan(theta, 21)).unwrap();
            assert!(v >= previous - 1e-12, "visibility dipped at theta = {theta}");
            previous = v;
        }
    }

    #[test]
    fn distinguishability_counts_out_events() {
        let all_out = table_with(vec![PhaseCounts {
            n_x: 10,
            n_y: 10,
            n_x_out: 10,
            n_y_out: 10,
            ..Default::default()
        }]);
        let fractions = DutyFractions::from_in_fraction(0.0).unwrap();
        let (d, _) = estimate_distinguishability(&all_out, &fractions).unwrap();
        assert_eq!(d, 1.0);

        let all_in = table_with(vec![PhaseCounts {
            n_x: 5,
            n_y: 15,
            n_x_in: 5,
            n_y_in: 15,
            ..Default::default()
        }]);
        let fractions = DutyFractions::from_in_fraction(1.0).unwrap();
        let (d, _) = estimate_distinguishability(&all_in, &fractions).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn distinguishability_rejects_empty_and_mismatched_tables() {
        let empty = table_with(vec![PhaseCounts::default()]);
        let fractions = DutyFractions::from_in_fraction(0.5).unwrap();
        assert!(matches!(
            estimate_distinguishability(&empty, &fractions),
            Err(AnalysisError::EmptyTable)
        ));

        // All-In schedule cannot have produced Out events.
        let table = table_with(vec![PhaseCounts {
            n_x: 1,
            n_x_out: 1,
            ..Default::default()
        }]);
        let all_in = DutyFractions::from_in_fraction(1.0).unwrap();
        assert!(matches!(
            estimate_distinguishability(&table, &all_in),
            Err(AnalysisError::ScheduleMismatch { .. })
        ));
    }

    #[test]
    fn complementarity_residual_vanishes_on_exact_pairs() {
        assert_eq!(complementarity_check(&DualityMeasures::new(1.0, 0.0)), 0.0);
        assert_eq!(complementarity_check(&DualityMeasures::new(0.0, 1.0)), 0.0);
        assert_eq!(complementarity_check(&DualityMeasures::new(0.5, 0.5)), 0.0);
        for theta in [0.0, FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2] {
            let (v, _) = estimate_visibility(&exact_scan(theta, 21)).unwrap();
            let d = theta.cos().powi(2);
            assert!(complementarity_check(&DualityMeasures::new(v, d)) <= 1e-9);
        }
    }

    #[test]
    fn report_has_header_rows_and_summary() {
        let scan = exact_scan(FRAC_PI_4, 5);
        let measures = DualityMeasures::new(0.5, 0.5);
        let mut buf = Vec::new();
        write_report(&mut buf, FRAC_PI_4, &scan, &measures).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta,phase,rate_pred,rate_obs,stderr");
        assert_eq!(lines.len(), 7);
        assert!(lines[6].starts_with("V=0.5 D=0.5 residual="));
    }

    #[test]
    fn scan_validation_catches_bad_shapes_and_rates() {
        assert!(matches!(
            FringeScan::new(vec![0.0], vec![], vec![]),
            Err(AnalysisError::LengthMismatch)
        ));
        assert!(matches!(
            FringeScan::new(vec![0.0], vec![1.5], vec![0.0]),
            Err(AnalysisError::InvalidRate { .. })
        ));
    }

    proptest! {
        #[test]
        fn fit_tracks_duty_for_random_theta(theta in 0.0..FRAC_PI_2) {
            let (v, _) = estimate_visibility(&exact_scan(theta, 25)).unwrap();
            prop_assert!((v - theta.sin().powi(2)).abs() <= 1e-9);
        }
    }
}
