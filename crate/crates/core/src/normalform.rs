//! Closed-form quantities of the pitchfork (symmetry-breaking) bifurcation
//! of the constant branch: thresholds, the cubic normal-form coefficient,
//! the eigenvalue coefficient of the linearization, and the slope-condition
//! sum that decides constrained minimality.

use crate::spectrum::{self, SpectrumError};
use std::f64::consts::PI;

/// The three slope-condition terms; each is negative for every `L > 0`.
#[derive(Debug, Clone, Copy)]
pub struct SlopeParts {
    pub part_i: f64,
    pub part_ii: f64,
    pub part_iii: f64,
}

impl SlopeParts {
    pub fn sum(&self) -> f64 {
        self.part_i + self.part_ii + self.part_iii
    }
}

/// Everything the pitchfork analysis produces for one `L`.
#[derive(Debug, Clone)]
pub struct PitchforkReport {
    pub l: f64,
    /// First root of the odd dispersion relation.
    pub omega1_odd: f64,
    /// First root of the even dispersion relation.
    pub omega1_even: f64,
    /// Bifurcation point `Lambda_0 = -Omega_1^2 / 2` of the constant branch.
    pub lambda0: f64,
    /// Charge threshold of the symmetry-breaking bifurcation.
    pub q0_star: f64,
    /// Charge threshold of the second (symmetry-preserving) bifurcation.
    pub q0_double_star: f64,
    /// Cubic normal-form coefficient; negative for every `L`.
    pub omega_coef: f64,
    /// Coefficients of the explicit solution of the second-order correction.
    pub a_coef: f64,
    pub b_coef: f64,
    /// Coefficient of the small positive eigenvalue of `L+` on the
    /// bifurcating branch: `-2 * omega_coef`.
    pub eig_coef: f64,
    pub slope: SlopeParts,
}

/// Bifurcation thresholds `(Lambda_0, Q_0^*, Q_0^{**})`.
pub fn thresholds(l: f64) -> Result<(f64, f64, f64), SpectrumError> {
    let omega_odd = spectrum::odd_dispersion_roots(l, 1)?[0];
    let omega_even = spectrum::even_dispersion_roots(l, 1)?[0];
    let lambda0 = -0.5 * omega_odd * omega_odd;
    let q0_star = 0.5 * (l + 2.0 * PI) * omega_odd * omega_odd;
    let q0_dstar = 0.5 * (l + 2.0 * PI) * omega_even * omega_even;
    Ok((lambda0, q0_star, q0_dstar))
}

/// Squared L2 norm of the critical odd eigenfunction,
/// `L + 2 pi sin^2(L W) / cos^2(pi W)` with `W = Omega_1`.
pub fn critical_mode_norm_sq(l: f64, omega_odd: f64) -> f64 {
    let s = (l * omega_odd).sin();
    let c = (PI * omega_odd).cos();
    l + 2.0 * PI * s * s / (c * c)
}

/// Normal-form coefficient and the explicit correction coefficients `(A, B)`.
pub fn omega_coefficient(l: f64) -> Result<(f64, f64, f64), SpectrumError> {
    let w = spectrum::odd_dispersion_roots(l, 1)?[0];
    let (sl, cl) = (l * w).sin_cos();
    let cp = (PI * w).cos();
    let a_coef = cl.powi(3) / (2.0 * w * w);
    let b_coef = -sl * sl * cl * cl / (2.0 * w * w * cp);
    let numerator = -3.0 * l * (1.0 - (2.0 * l * w).sin() / (2.0 * l * w))
        - 6.0 * PI * sl.powi(4) / cp.powi(4)
        - 3.0 * sl.powi(3) * cl * (1.0 + 2.0 * cl * cl) / (w * cp * cp);
    Ok((numerator / critical_mode_norm_sq(l, w), a_coef, b_coef))
}

/// The regrouped slope-condition terms `I`, `II`, `III`.
pub fn slope_sum(l: f64) -> Result<SlopeParts, SpectrumError> {
    let w = spectrum::odd_dispersion_roots(l, 1)?[0];
    let (sl, cl) = (l * w).sin_cos();
    let cp = (PI * w).cos();
    let s = sl * sl / (cp * cp);
    let part_i = -0.25 * l * l
        - 0.5 * PI * l * (9.0 - 16.0 * s + 12.0 * s * s)
        - 4.0 * PI * PI * s * s;
    let part_ii = -0.75 * (l + 2.0 * PI) * l * (1.0 - (2.0 * l * w).sin() / (2.0 * l * w));
    let part_iii = -3.0 * (l + 2.0 * PI) * sl * cl / w * (s * (1.0 + 2.0 * cl * cl) - 0.75);
    Ok(SlopeParts { part_i, part_ii, part_iii })
}

impl PitchforkReport {
    pub fn compute(l: f64) -> Result<Self, SpectrumError> {
        let omega1_odd = spectrum::odd_dispersion_roots(l, 1)?[0];
        let omega1_even = spectrum::even_dispersion_roots(l, 1)?[0];
        let (lambda0, q0_star, q0_double_star) = thresholds(l)?;
        let (omega_coef, a_coef, b_coef) = omega_coefficient(l)?;
        let slope = slope_sum(l)?;
        Ok(Self {
            l,
            omega1_odd,
            omega1_even,
            lambda0,
            q0_star,
            q0_double_star,
            omega_coef,
            a_coef,
            b_coef,
            eig_coef: -2.0 * omega_coef,
            slope,
        })
    }
}
