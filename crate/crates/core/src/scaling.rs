//! Derived spreading constants and asymptotics.
//!
//! From a critical profile, the physically meaningful constants are the
//! similarity exponent β = 1/(7λ+3), the spreading prefactor S_λ entering
//! r_f(t), the angle prefactor Q_λ entering tan θ(t), the degenerate front
//! asymptote, and the (dimensionless) viscous dissipation integral whose
//! convergence near the front distinguishes shear-thinning drops from the
//! Newtonian contact-line paradox.

use crate::error::{Error, Result};
use crate::shooting::find_critical_kappa;
use crate::similarity::{
    front_coefficient, front_exponent, Classification, IntegratorOptions, SimilarityProfile,
};
use serde::Serialize;
use std::f64::consts::TAU;

/// One row of the spreading-constants table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsRow {
    /// Rheology index λ of the row.
    pub lambda: f64,
    /// Critical center curvature κ_λ.
    pub kappa_lambda: f64,
    /// Front coordinate η_f of the critical profile.
    pub eta_f: f64,
    /// Shape factor I = ∫ 2πηH dη.
    pub shape_factor: f64,
    /// Spreading prefactor S_λ of r_f(t).
    pub s_lambda: f64,
    /// Angle prefactor Q_λ of tan θ(t).
    pub q_lambda: f64,
}

/// The default λ grid of the constants table.
pub const TABLE_LAMBDAS: [f64; 7] = [1.1, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0];

/// Similarity exponent β = 1/(7λ+3) of the spreading law r_f ∝ t^β.
pub fn similarity_exponent(lambda: f64) -> f64 {
    1.0 / (7.0 * lambda + 3.0)
}

/// Spreading prefactor S_λ = ((7λ+3)/(λ+2))^{1/(7λ+3)} · η_f · I^{-(2λ+1)/(7λ+3)}.
pub fn spreading_prefactor(lambda: f64, eta_f: f64, shape_factor: f64) -> f64 {
    let n = 7.0 * lambda + 3.0;
    (n / (lambda + 2.0)).powf(1.0 / n) * eta_f * shape_factor.powf(-(2.0 * lambda + 1.0) / n)
}

/// Angle prefactor Q_λ = -H'(η_i) · ((λ+2)/(7λ+3))^{3/(7λ+3)} · I^{-λ/(7λ+3)}.
pub fn angle_prefactor(lambda: f64, hp_at_eta_i: f64, shape_factor: f64) -> f64 {
    let n = 7.0 * lambda + 3.0;
    -hp_at_eta_i * ((lambda + 2.0) / n).powf(3.0 / n) * shape_factor.powf(-lambda / n)
}

/// Height of the degenerate front model at a coordinate η near the front:
/// H = ((2λ+1)³/(3λ(λ-1)(λ+2)))^{λ/(2λ+1)} · η_f^{1/(2λ+1)} · (η_f-η)^{3λ/(2λ+1)}.
pub fn asymptotic_front_height(lambda: f64, eta_f: f64, eta: f64) -> Result<f64> {
    if lambda <= 1.0 {
        return Err(Error::Domain(format!(
            "the degenerate front model requires lambda > 1, got {lambda}"
        )));
    }
    Ok(front_coefficient(lambda, eta_f) * (eta_f - eta).powf(front_exponent(lambda)))
}

/// Full coefficient C(λ, η_f) of the front model H = C·(η_f-η)^{3λ/(2λ+1)}.
pub fn asymptotic_front_coefficient(lambda: f64, eta_f: f64) -> Result<f64> {
    if lambda <= 1.0 {
        return Err(Error::Domain(format!(
            "the degenerate front model requires lambda > 1, got {lambda}"
        )));
    }
    Ok(front_coefficient(lambda, eta_f))
}

/// Dissipation integral 2π ∫ η |K'|^{λ+1} H^{λ+2} dη over a front-reaching
/// profile, proportional to the viscous dissipation rate of the drop.
///
/// K' is evaluated by finite differences of the sampled curvature, so the
/// integrand vanishes identically on profiles with constant K. The portion
/// beyond the last sample uses the classification's local front model, under
/// which the integrand behaves like (η_f-η)^{-3/(2λ+1)}: a weak singularity,
/// integrable precisely when λ > 1.
pub fn dissipation_integral(profile: &SimilarityProfile) -> Result<f64> {
    let lam = profile.params.lambda;
    match profile.classification {
        Classification::Subcritical => {
            return Err(Error::Mismatch(
                "dissipation integral is defined for front-reaching profiles only".into(),
            ))
        }
        Classification::FiniteAngle | Classification::ZeroAngleCandidate => {}
    }
    if lam <= 1.0 {
        return Err(Error::Domain(format!(
            "the dissipation tail converges only for lambda > 1, got {lam}"
        )));
    }
    let s = &profile.samples;
    if s.len() < 3 {
        return Err(Error::Mismatch("too few samples for quadrature".into()));
    }

    // K' by finite differences: centered in the interior, one-sided at the ends.
    let n = s.len();
    let kp = |i: usize| -> f64 {
        if i == 0 {
            (s[1].k - s[0].k) / (s[1].eta - s[0].eta)
        } else if i == n - 1 {
            (s[n - 1].k - s[n - 2].k) / (s[n - 1].eta - s[n - 2].eta)
        } else {
            (s[i + 1].k - s[i - 1].k) / (s[i + 1].eta - s[i - 1].eta)
        }
    };
    let integrand = |i: usize| -> f64 {
        let st = &s[i];
        TAU * st.eta * kp(i).abs().powf(lam + 1.0) * st.h.powf(lam + 2.0)
    };
    let mut total = 0.0;
    let mut prev = integrand(0);
    for i in 1..n {
        let cur = integrand(i);
        total += 0.5 * (prev + cur) * (s[i].eta - s[i - 1].eta);
        prev = cur;
    }

    // Front tail: with the local model H(τ), the integrand reduces to
    // 2π η^{(2λ+1)/λ} H^{-1/λ} (the once-integrated equation eliminates K').
    let tail = s[n - 1];
    let eta_f = profile.eta_f.ok_or_else(|| {
        Error::Mismatch("front-reaching profile is missing eta_f".into())
    })?;
    let tau_last = eta_f - tail.eta;
    if tau_last > 0.0 {
        let front_factor = TAU * eta_f.powf((2.0 * lam + 1.0) / lam);
        let tail_int = match profile.classification {
            Classification::ZeroAngleCandidate => {
                // H = C τ^q, H^{-1/λ} = C^{-1/λ} τ^{-3/(2λ+1)}.
                let c = front_coefficient(lam, eta_f);
                let e = 1.0 - 3.0 / (2.0 * lam + 1.0);
                c.powf(-1.0 / lam) * tau_last.powf(e) / e
            }
            Classification::FiniteAngle => {
                // H = s τ.
                let slope = profile.contact_slope.ok_or_else(|| {
                    Error::Mismatch("FiniteAngle profile is missing contact_slope".into())
                })?;
                let e = 1.0 - 1.0 / lam;
                slope.powf(-1.0 / lam) * tau_last.powf(e) / e
            }
            Classification::Subcritical => unreachable!(),
        };
        total += front_factor * tail_int;
    }
    Ok(total)
}

/// Computes one constants-table row at the critical curvature.
pub fn critical_constants_row(
    lambda: f64,
    tolerance: f64,
    opts: &IntegratorOptions,
) -> Result<ConstantsRow> {
    let sol = find_critical_kappa(lambda, tolerance, opts)?;
    let p = &sol.profile;
    let eta_f = p
        .eta_f
        .ok_or_else(|| Error::NonConvergence("critical profile has no front".into()))?;
    let shape_factor = p
        .shape_factor
        .ok_or_else(|| Error::NonConvergence("critical profile has no shape factor".into()))?;
    let hp_i = p.hp_at_eta_i.ok_or_else(|| {
        Error::NoInflection("critical profile has no curvature sign change".into())
    })?;
    Ok(ConstantsRow {
        lambda,
        kappa_lambda: sol.kappa_lambda,
        eta_f,
        shape_factor,
        s_lambda: spreading_prefactor(lambda, eta_f, shape_factor),
        q_lambda: angle_prefactor(lambda, hp_i, shape_factor),
    })
}

/// Builds the constants table for a list of λ values. Rows are computed
/// independently and returned in input order; a failed row carries its error
/// instead of aborting the batch.
pub fn build_constants_table(
    lambdas: &[f64],
    tolerance: f64,
    opts: &IntegratorOptions,
) -> Vec<Result<ConstantsRow>> {
    lambdas
        .iter()
        .map(|&lam| critical_constants_row(lam, tolerance, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::solve_drop;
    use crate::similarity::{OdeParams, SimilarityState};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn exponent_known_values_and_monotone_decay() {
        assert_abs_diff_eq!(similarity_exponent(1.0), 0.1, epsilon = 1e-16);
        assert_relative_eq!(similarity_exponent(2.5), 1.0 / 20.5, max_relative = 1e-15);
        let mut prev = similarity_exponent(0.5);
        for lam in [1.0, 2.0, 4.0, 8.0, 100.0, 1e6] {
            let b = similarity_exponent(lam);
            assert!(b < prev);
            prev = b;
        }
        assert!(similarity_exponent(1e12) < 1e-12);
    }

    #[test]
    fn spreading_prefactor_matches_reference_rows() {
        assert_relative_eq!(
            spreading_prefactor(2.0, 1.19915, 2.08030),
            1.05262,
            max_relative = 1e-4
        );
        assert_relative_eq!(
            spreading_prefactor(2.5, 1.28882, 2.34984),
            1.08074,
            max_relative = 1e-4
        );
    }

    #[test]
    fn spreading_prefactor_is_linear_in_front_position() {
        let s1 = spreading_prefactor(1.7, 1.1, 2.0);
        let s2 = spreading_prefactor(1.7, 2.2, 2.0);
        assert_relative_eq!(s2, 2.0 * s1, max_relative = 1e-14);
    }

    #[test]
    fn angle_prefactor_matches_reference_row_and_is_linear() {
        assert_relative_eq!(
            angle_prefactor(2.0, -1.3395, 2.08030),
            0.951946,
            max_relative = 1e-3
        );
        let q1 = angle_prefactor(3.0, -1.0, 2.5);
        let q2 = angle_prefactor(3.0, -2.0, 2.5);
        assert_relative_eq!(q2, 2.0 * q1, max_relative = 1e-14);
    }

    #[test]
    fn front_model_vanishes_at_front_and_matches_closed_form() {
        assert_abs_diff_eq!(asymptotic_front_height(2.0, 1.19915, 1.19915).unwrap(), 0.0);
        // λ=2, η_f = 1.19915, τ = 0.01: C = 2.00656951951, H = 7.98829713931e-3.
        assert_relative_eq!(
            asymptotic_front_coefficient(2.0, 1.19915).unwrap(),
            2.00656951951,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            asymptotic_front_height(2.0, 1.19915, 1.19915 - 0.01).unwrap(),
            7.98829713931e-3,
            max_relative = 1e-10
        );
        assert_relative_eq!(front_exponent(2.5), 1.25, max_relative = 1e-15);
        assert!(matches!(
            asymptotic_front_height(1.0, 1.0, 0.99),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dissipation_vanishes_for_constant_curvature_profile() {
        let params = OdeParams::new(2.5, 3.0).unwrap();
        let samples: Vec<SimilarityState> = (1..50)
            .map(|i| {
                let eta = i as f64 * 0.01;
                SimilarityState { eta, h: 1.0 - eta, hp: -1.0, k: 2.0, i_acc: 0.0 }
            })
            .collect();
        let tail = *samples.last().unwrap();
        let profile = SimilarityProfile {
            params,
            samples,
            classification: Classification::FiniteAngle,
            eta_f: Some(tail.eta + tail.h),
            contact_slope: Some(1.0),
            eta_i: None,
            hp_at_eta_i: None,
            shape_factor: Some(1.0),
        };
        // The sampled quadrature sees K' = 0 everywhere; only the model tail
        // beyond the last sample contributes.
        let d = dissipation_integral(&profile).unwrap();
        let tail_only = TAU
            * profile.eta_f.unwrap().powf((2.0 * 2.5 + 1.0) / 2.5)
            * tail.h.powf(1.0 - 1.0 / 2.5) // slope 1: s^{-1/λ} τ^{1-1/λ} with τ = h
            / (1.0 - 1.0 / 2.5);
        assert_relative_eq!(d, tail_only, max_relative = 1e-12);
    }

    #[test]
    fn dissipation_rejects_subcritical_profiles() {
        let prof = solve_drop(2.5, 2.0, &IntegratorOptions::default()).unwrap();
        assert!(matches!(dissipation_integral(&prof), Err(Error::Mismatch(_))));
    }

    #[test]
    fn dissipation_is_finite_on_a_real_drop() {
        let prof = solve_drop(2.5, 4.0, &IntegratorOptions::default()).unwrap();
        let d = dissipation_integral(&prof).unwrap();
        assert!(d.is_finite() && d > 0.0);
    }

    #[test]
    fn constants_row_reproduces_reference_at_lambda_2p5() {
        let row = critical_constants_row(2.5, 1e-8, &IntegratorOptions::default()).unwrap();
        assert_relative_eq!(row.kappa_lambda, 3.00428, max_relative = 1e-3);
        assert_relative_eq!(row.eta_f, 1.28882, max_relative = 5e-3);
        assert_relative_eq!(row.shape_factor, 2.34984, max_relative = 5e-3);
        assert_relative_eq!(row.s_lambda, 1.08074, max_relative = 1e-2);
        assert_relative_eq!(row.q_lambda, 0.878580, max_relative = 1e-2);
    }

    #[test]
    fn table_keeps_failed_rows_in_place() {
        let out = build_constants_table(&[2.5, 0.5], 1e-6, &IntegratorOptions::default());
        assert_eq!(out.len(), 2);
        assert!(out[0].is_ok());
        assert!(matches!(out[1], Err(Error::InvalidParameter(_))));
    }
}
