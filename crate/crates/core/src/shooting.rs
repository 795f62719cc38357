//! Shooting search in the central curvature κ₀.
//!
//! Trajectories with small κ₀ never reach the front (the slope turns back up);
//! large κ₀ drives the height through zero at a finite contact angle. The
//! boundary between the two behaviors is the critical curvature κ_λ, at which
//! the profile lands on the front with zero contact angle. The search bisects
//! on a deep classification that follows each trajectory below h_stop until it
//! either crashes through front_depth or turns.

use crate::error::{Error, Result};
use crate::similarity::{
    classify_deep, integrate_as_zero_angle, integrate_profile, IntegratorOptions, OdeParams, Side,
    SimilarityProfile,
};

/// Search limits for the κ₀ bracket, generous around all known criticals.
const KAPPA_SEARCH_MIN: f64 = 1e-3;
const KAPPA_SEARCH_MAX: f64 = 1e3;
const KAPPA_INITIAL: f64 = 3.0;

/// A zero-contact-angle solution at the critical curvature.
#[derive(Debug, Clone)]
pub struct CriticalSolution {
    /// Rheology index λ the solve was run at.
    pub lambda: f64,
    /// The critical central curvature κ_λ (final bracket midpoint).
    pub kappa_lambda: f64,
    /// Profile integrated at κ_λ, classified ZeroAngleCandidate.
    pub profile: SimilarityProfile,
    /// Width of the final bisection bracket.
    pub bracket_width: f64,
}

/// Integrates a single drop profile at a chosen κ₀ and classifies it.
pub fn solve_drop(lambda: f64, kappa0: f64, opts: &IntegratorOptions) -> Result<SimilarityProfile> {
    let params = OdeParams::new(lambda, kappa0)?;
    integrate_profile(&params, opts)
}

/// Finds the critical curvature κ_λ by bisection.
///
/// Starts from κ₀ = 3 and expands geometrically until the bracket spans the
/// subcritical/front boundary, then bisects until the bracket is narrower than
/// `tolerance`. Returns the profile at the bracket midpoint under the
/// zero-angle front model. Requires λ > 1: at λ = 1 the degenerate front
/// model breaks down and no zero-angle solution exists.
pub fn find_critical_kappa(
    lambda: f64,
    tolerance: f64,
    opts: &IntegratorOptions,
) -> Result<CriticalSolution> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "the critical curvature is defined only for lambda > 1, got {lambda}"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be > 0, got {tolerance}"
        )));
    }
    opts.validate()?;

    let side_at = |kappa0: f64| -> Result<Side> {
        let params = OdeParams::new(lambda, kappa0)?;
        classify_deep(&params, opts)
    };

    // Bracket: lo must land on the subcritical side, hi on the front side.
    let (mut lo, mut hi);
    match side_at(KAPPA_INITIAL)? {
        Side::Front => {
            hi = KAPPA_INITIAL;
            lo = KAPPA_INITIAL;
            loop {
                lo *= 0.5;
                if lo < KAPPA_SEARCH_MIN {
                    return Err(Error::NoBracket(format!(
                        "no subcritical trajectory found down to kappa0 = {KAPPA_SEARCH_MIN} \
                         at lambda = {lambda}"
                    )));
                }
                if side_at(lo)? == Side::Subcritical {
                    break;
                }
                hi = lo;
            }
        }
        Side::Subcritical => {
            lo = KAPPA_INITIAL;
            hi = KAPPA_INITIAL;
            loop {
                hi *= 2.0;
                if hi > KAPPA_SEARCH_MAX {
                    return Err(Error::NoBracket(format!(
                        "no front-reaching trajectory found up to kappa0 = {KAPPA_SEARCH_MAX} \
                         at lambda = {lambda}"
                    )));
                }
                if side_at(hi)? == Side::Front {
                    break;
                }
                lo = hi;
            }
        }
    }

    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        match side_at(mid)? {
            Side::Front => hi = mid,
            Side::Subcritical => lo = mid,
        }
    }

    let kappa_lambda = 0.5 * (lo + hi);
    let mid_params = OdeParams::new(lambda, kappa_lambda)?;
    let profile = match integrate_as_zero_angle(&mid_params, opts)? {
        Some(p) => p,
        // With a loose tolerance the midpoint may turn before h_stop; the
        // upper endpoint is on the front side and reaches it.
        None => {
            let hi_params = OdeParams::new(lambda, hi)?;
            integrate_as_zero_angle(&hi_params, opts)?.ok_or_else(|| {
                Error::NonConvergence(format!(
                    "front-side endpoint kappa0 = {hi} failed to reach h_stop"
                ))
            })?
        }
    };

    Ok(CriticalSolution {
        lambda,
        kappa_lambda,
        profile,
        bracket_width: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::Classification;
    use approx::assert_relative_eq;

    fn opts() -> IntegratorOptions {
        IntegratorOptions::default()
    }

    #[test]
    fn rejects_lambda_at_most_one_and_bad_tolerance() {
        assert!(matches!(
            find_critical_kappa(1.0, 1e-8, &opts()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            find_critical_kappa(0.5, 1e-8, &opts()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            find_critical_kappa(2.5, 0.0, &opts()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn critical_curvature_at_lambda_2p5_matches_reference() {
        let sol = find_critical_kappa(2.5, 1e-8, &opts()).unwrap();
        assert_relative_eq!(sol.kappa_lambda, 3.00428, max_relative = 1e-3);
        assert!(sol.bracket_width <= 1e-8);
        assert_eq!(sol.profile.classification, Classification::ZeroAngleCandidate);
        assert!(sol.profile.eta_f.is_some());
        assert!(sol.profile.contact_slope.is_none());
    }

    #[test]
    fn loose_tolerance_still_returns_a_front_profile() {
        let sol = find_critical_kappa(2.5, 0.5, &opts()).unwrap();
        assert_eq!(sol.profile.classification, Classification::ZeroAngleCandidate);
        assert!(sol.bracket_width <= 0.5);
        // Even a crude bracket stays in the right neighborhood.
        assert!(sol.kappa_lambda > 2.0 && sol.kappa_lambda < 4.5);
    }

    #[test]
    fn drops_on_either_side_of_critical_classify_accordingly() {
        let sol = find_critical_kappa(2.5, 1e-8, &opts()).unwrap();
        let low = solve_drop(2.5, 0.9 * sol.kappa_lambda, &opts()).unwrap();
        assert_eq!(low.classification, Classification::Subcritical);
        let high = solve_drop(2.5, 1.1 * sol.kappa_lambda, &opts()).unwrap();
        assert_eq!(high.classification, Classification::FiniteAngle);
    }
}
