//! Similarity ODE for the spreading drop profile.
//!
//! The profile H(η) of a self-similar drop satisfies, after one integration of
//! the thin-film equation in similarity variables,
//!
//! ```text
//! H'' = -K - H'/η,          K' = -η^{1/λ} H^{-(λ+1)/λ},
//! ```
//!
//! with H(0) = 1, H'(0) = 0, K(0) = κ₀. K is the (negative) mean curvature of
//! the profile and K' ≤ 0 wherever H > 0. The integrator marches from a series
//! start near η = 0 toward the front with a height-proportional step, carrying
//! the running volume integral ∫ 2πηH dη as a fourth state component.

use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::TAU;

/// Parameters of the similarity ODE: rheology exponent and central curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeParams {
    /// Rheology exponent λ (> 0). λ > 1 is shear-thinning.
    pub lambda: f64,
    /// Central curvature κ₀ = K(0) (> 0), the shooting parameter.
    pub kappa0: f64,
}

impl OdeParams {
    /// Validated constructor.
    pub fn new(lambda: f64, kappa0: f64) -> Result<Self> {
        let p = OdeParams { lambda, kappa0 };
        p.validate()?;
        Ok(p)
    }

    /// Checks both parameters are finite and positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and > 0, got {}",
                self.lambda
            )));
        }
        if !(self.kappa0 > 0.0) || !self.kappa0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa0 must be finite and > 0, got {}",
                self.kappa0
            )));
        }
        Ok(())
    }
}

/// Step-control and termination settings for the profile integrator.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Starting coordinate ε of the series launch (0 < ε < 1e-3).
    pub epsilon_start: f64,
    /// Height below which the front is considered reached (0 < h_stop < 1e-2).
    pub h_stop: f64,
    /// Step is step_fraction · H before clamping.
    pub step_fraction: f64,
    /// Lower clamp on the step.
    pub step_min: f64,
    /// Upper clamp on the step.
    pub step_max: f64,
    /// Safety cutoff: integration stops (Subcritical) once η exceeds this.
    pub eta_max: f64,
    /// Depth of the eigenvalue discriminator: when classifying for the
    /// critical-curvature search, the integrator silently continues below
    /// h_stop and declares the front side only once H < front_depth (a turn,
    /// H' ≥ 0, declares the subcritical side). The default is calibrated so
    /// the critical curvatures match the six-figure reference values.
    pub front_depth: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            epsilon_start: 1e-6,
            h_stop: 1e-6,
            step_fraction: 1e-4,
            step_min: 1e-12,
            step_max: 1e-3,
            eta_max: 10.0,
            front_depth: 1e-12,
        }
    }
}

impl IntegratorOptions {
    /// Checks every knob against its documented range.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidParameter(m));
        if !(self.epsilon_start > 0.0 && self.epsilon_start < 1e-3) {
            return fail(format!(
                "epsilon_start must lie in (0, 1e-3), got {}",
                self.epsilon_start
            ));
        }
        if !(self.h_stop > 0.0 && self.h_stop < 1e-2) {
            return fail(format!("h_stop must lie in (0, 1e-2), got {}", self.h_stop));
        }
        if !(self.step_fraction > 0.0) {
            return fail(format!("step_fraction must be > 0, got {}", self.step_fraction));
        }
        if !(self.step_min > 0.0 && self.step_min < self.step_max) {
            return fail(format!(
                "need 0 < step_min < step_max, got {} and {}",
                self.step_min, self.step_max
            ));
        }
        if !(self.eta_max > self.epsilon_start) {
            return fail(format!("eta_max must exceed epsilon_start, got {}", self.eta_max));
        }
        if !(self.front_depth > 0.0 && self.front_depth <= self.h_stop) {
            return fail(format!(
                "front_depth must lie in (0, h_stop], got {}",
                self.front_depth
            ));
        }
        Ok(())
    }
}

/// State of the similarity ODE at one coordinate η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityState {
    /// Similarity coordinate η.
    pub eta: f64,
    /// Scaled height H(η).
    pub h: f64,
    /// Slope H'(η).
    pub hp: f64,
    /// Curvature variable K(η).
    pub k: f64,
    /// Running volume integral ∫₀^η 2πη'H dη'.
    pub i_acc: f64,
}

/// Derivative of the state with respect to η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    /// dH/dη.
    pub dh: f64,
    /// dH'/dη.
    pub dhp: f64,
    /// dK/dη.
    pub dk: f64,
    /// d/dη of the running volume integral.
    pub di: f64,
}

/// Right-hand side of the similarity system.
///
/// K' is obtained from the once-integrated equation ηH = H^{λ+2}(-K')^λ, which
/// fixes K' = -η^{1/λ} H^{-(λ+1)/λ} ≤ 0.
pub fn ode_rhs(state: &SimilarityState, params: &OdeParams) -> Result<StateDerivative> {
    if !(state.h > 0.0) {
        return Err(Error::Domain(format!(
            "ode_rhs requires H > 0, got {} at eta = {}",
            state.h, state.eta
        )));
    }
    if !(state.eta > 0.0) {
        return Err(Error::Domain(format!(
            "ode_rhs requires eta > 0, got {}",
            state.eta
        )));
    }
    let lam = params.lambda;
    Ok(StateDerivative {
        dh: state.hp,
        dhp: -state.k - state.hp / state.eta,
        dk: -state.eta.powf(1.0 / lam) * state.h.powf(-(lam + 1.0) / lam),
        di: TAU * state.eta * state.h,
    })
}

/// Local series solution at a small coordinate ε, regularizing the H'/η term.
///
/// Carries the two leading corrections in each component:
/// H = 1 - κ₀ε²/4 + c·ε^p, H' = -κ₀ε/2 + c·p·ε^{p-1} with p = (3λ+1)/λ and
/// c = λ³/((λ+1)(3λ+1)²); K = κ₀ - (λ/(λ+1))ε^{(λ+1)/λ}. The ε^{p-1} slope
/// term is what lets the shooting search resolve κ₀ below 1e-8: dropping it
/// perturbs the launch like a κ₀ shift of order ε^{p-2}.
pub fn series_start(params: &OdeParams, epsilon: f64) -> SimilarityState {
    let lam = params.lambda;
    let kap = params.kappa0;
    let p = (3.0 * lam + 1.0) / lam;
    let c = lam * lam * lam / ((lam + 1.0) * (3.0 * lam + 1.0) * (3.0 * lam + 1.0));
    SimilarityState {
        eta: epsilon,
        h: 1.0 - kap * epsilon * epsilon / 4.0 + c * epsilon.powf(p),
        hp: -kap * epsilon / 2.0 + c * p * epsilon.powf(p - 1.0),
        k: kap - (lam / (lam + 1.0)) * epsilon.powf((lam + 1.0) / lam),
        i_acc: std::f64::consts::PI * epsilon * epsilon
            - std::f64::consts::PI * kap * epsilon.powi(4) / 8.0,
    }
}

/// Outcome label of an integrated profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    /// H never reached h_stop: the trajectory turned back upward (or ran past
    /// eta_max). No front exists.
    Subcritical,
    /// H reached h_stop with a negative slope: a drop with a finite contact
    /// angle at the front.
    FiniteAngle,
    /// A front-reaching profile at the critical curvature, whose height decays
    /// to zero with zero contact angle.
    ZeroAngleCandidate,
}

impl Classification {
    /// Stable textual name, as used in CSV/JSON output.
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Subcritical => "Subcritical",
            Classification::FiniteAngle => "FiniteAngle",
            Classification::ZeroAngleCandidate => "ZeroAngleCandidate",
        }
    }
}

/// A fully integrated and post-processed similarity profile.
#[derive(Debug, Clone)]
pub struct SimilarityProfile {
    /// Parameters the profile was integrated with.
    pub params: OdeParams,
    /// States sampled along the march, strictly increasing in η, all with
    /// H ≥ h_stop.
    pub samples: Vec<SimilarityState>,
    /// Outcome label of the march.
    pub classification: Classification,
    /// Extrapolated front position (front-reaching classifications only).
    pub eta_f: Option<f64>,
    /// Extrapolated -H' at the front (FiniteAngle only).
    pub contact_slope: Option<f64>,
    /// Inflection coordinate, where H'' crosses zero (maximum slope).
    pub eta_i: Option<f64>,
    /// H' at the inflection.
    pub hp_at_eta_i: Option<f64>,
    /// Shape factor I = ∫₀^{η_f} 2πηH dη, sampled integral plus front tail.
    pub shape_factor: Option<f64>,
}

/// Which side of the critical curvature a trajectory falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// The height crashed through front_depth (or hit zero) while falling.
    Front,
    /// The slope turned non-negative, or η exceeded eta_max.
    Subcritical,
}

pub(crate) struct RawRun {
    pub side: Side,
    pub samples: Vec<SimilarityState>,
}

/// Decay exponent q = 3λ/(2λ+1) of the degenerate front model H = C·τ^q.
pub(crate) fn front_exponent(lambda: f64) -> f64 {
    3.0 * lambda / (2.0 * lambda + 1.0)
}

/// Coefficient of the degenerate front model, without the η_f factor.
pub(crate) fn front_coefficient_base(lambda: f64) -> f64 {
    ((2.0 * lambda + 1.0).powi(3) / (3.0 * lambda * (lambda - 1.0) * (lambda + 2.0)))
        .powf(lambda / (2.0 * lambda + 1.0))
}

/// Full front-model coefficient C(λ, η_f) = base · η_f^{1/(2λ+1)}.
pub(crate) fn front_coefficient(lambda: f64, eta_f: f64) -> f64 {
    front_coefficient_base(lambda) * eta_f.powf(1.0 / (2.0 * lambda + 1.0))
}

/// Step floor used below h_stop during deep classification. The front-model
/// distance to the front at height front_depth sets the resolution actually
/// needed; the plain step_min would crawl for large λ and under-resolve the
/// approach for λ near 1.
fn probe_floor(lambda: f64, opts: &IntegratorOptions) -> f64 {
    if lambda <= 1.0 {
        return opts.step_min;
    }
    let tau = (opts.front_depth / front_coefficient_base(lambda)).powf(1.0 / front_exponent(lambda));
    (tau / 8.0).min(opts.step_min).max(1e-15)
}

/// Core RK4 march. With `probe` false the run stops at the first H < h_stop
/// (side Front) exactly as the public classification rules state; with `probe`
/// true it continues silently below h_stop until H < front_depth or the slope
/// turns, discriminating the two sides of the critical curvature. Samples are
/// recorded only when `store` is set and only while H ≥ h_stop.
pub(crate) fn integrate_raw(
    params: &OdeParams,
    opts: &IntegratorOptions,
    store: bool,
    probe: bool,
) -> Result<RawRun> {
    params.validate()?;
    opts.validate()?;

    let lam = params.lambda;
    let a = 1.0 / lam;
    let b = -(lam + 1.0) / lam;
    let floor_deep = probe_floor(lam, opts);

    let mut samples = Vec::new();
    if store {
        samples.reserve(1 << 14);
    }

    let s0 = series_start(params, opts.epsilon_start);
    let mut eta = s0.eta;
    let mut h = s0.h;
    let mut hp = s0.hp;
    let mut k = s0.k;
    let mut i_acc = s0.i_acc;
    if store {
        samples.push(s0);
    }

    let mut below = false; // H has crossed under h_stop
    loop {
        let floor = if below { floor_deep } else { opts.step_min };
        let d = (opts.step_fraction * h).clamp(floor, opts.step_max);
        if eta + d == eta {
            if below {
                let side = if hp < 0.0 { Side::Front } else { Side::Subcritical };
                return Ok(RawRun { side, samples });
            }
            return Err(Error::NonConvergence(format!(
                "step underflow at eta = {eta}, H = {h}"
            )));
        }

        // Classical RK4; a non-positive height at any stage means the
        // trajectory crashes through zero within this step.
        let e2 = eta + 0.5 * d;
        let e4 = eta + d;
        let b1 = hp;
        let c1 = -k - hp / eta;
        let dk1 = -eta.powf(a) * h.powf(b);
        let di1 = TAU * eta * h;
        let h2 = h + 0.5 * d * b1;
        if h2 <= 0.0 {
            return Ok(RawRun { side: Side::Front, samples });
        }
        let b2 = hp + 0.5 * d * c1;
        let c2 = -(k + 0.5 * d * dk1) - b2 / e2;
        let dk2 = -e2.powf(a) * h2.powf(b);
        let di2 = TAU * e2 * h2;
        let h3 = h + 0.5 * d * b2;
        if h3 <= 0.0 {
            return Ok(RawRun { side: Side::Front, samples });
        }
        let b3 = hp + 0.5 * d * c2;
        let c3 = -(k + 0.5 * d * dk2) - b3 / e2;
        let dk3 = -e2.powf(a) * h3.powf(b);
        let di3 = TAU * e2 * h3;
        let h4 = h + d * b3;
        if h4 <= 0.0 {
            return Ok(RawRun { side: Side::Front, samples });
        }
        let b4 = hp + d * c3;
        let c4 = -(k + d * dk3) - b4 / e4;
        let dk4 = -e4.powf(a) * h4.powf(b);
        let di4 = TAU * e4 * h4;

        h += d / 6.0 * (b1 + 2.0 * (b2 + b3) + b4);
        hp += d / 6.0 * (c1 + 2.0 * (c2 + c3) + c4);
        k += d / 6.0 * (dk1 + 2.0 * (dk2 + dk3) + dk4);
        i_acc += d / 6.0 * (di1 + 2.0 * (di2 + di3) + di4);
        eta = e4;

        if h <= 0.0 {
            return Ok(RawRun { side: Side::Front, samples });
        }
        if !below {
            if h < opts.h_stop {
                if !probe {
                    return Ok(RawRun { side: Side::Front, samples });
                }
                below = true;
            } else {
                if store {
                    samples.push(SimilarityState { eta, h, hp, k, i_acc });
                }
                if hp >= 0.0 && h > 10.0 * opts.h_stop {
                    return Ok(RawRun { side: Side::Subcritical, samples });
                }
            }
        } else {
            if hp >= 0.0 {
                return Ok(RawRun { side: Side::Subcritical, samples });
            }
            if h < opts.front_depth {
                return Ok(RawRun { side: Side::Front, samples });
            }
        }
        if eta > opts.eta_max {
            return Ok(RawRun { side: Side::Subcritical, samples });
        }
    }
}

/// Front extrapolation results from the last sample of a front-reaching run.
#[derive(Debug, Clone, Copy)]
pub struct FrontExtrapolation {
    /// Extrapolated front coordinate η_f.
    pub eta_f: f64,
    /// Analytic tail ∫_{η_last}^{η_f} 2πηH dη of the shape factor under the
    /// local front model.
    pub shape_factor_tail: f64,
    /// -H' at the front (FiniteAngle model only).
    pub contact_slope: Option<f64>,
}

/// Extrapolates the front position from the integration tail.
///
/// FiniteAngle uses the linear model H ≈ s·(η_f - η); ZeroAngleCandidate uses
/// the degenerate front model H = C·(η_f - η)^{3λ/(2λ+1)} with
/// C = ((2λ+1)³ / (3λ(λ-1)(λ+2)))^{λ/(2λ+1)} · η_f^{1/(2λ+1)}, solved
/// self-consistently for η_f. Both models also supply the analytic shape-factor
/// tail beyond the last sample.
pub fn front_extrapolation(
    tail: &SimilarityState,
    classification: Classification,
    params: &OdeParams,
) -> Result<FrontExtrapolation> {
    match classification {
        Classification::Subcritical => Err(Error::Mismatch(
            "front extrapolation is undefined for Subcritical profiles".into(),
        )),
        Classification::FiniteAngle => {
            let s = -tail.hp;
            if !(s > 0.0) {
                return Err(Error::Domain(format!(
                    "finite-angle extrapolation needs H' < 0 at the tail, got H' = {}",
                    tail.hp
                )));
            }
            let tau = tail.h / s;
            let eta_f = tail.eta + tau;
            let shape_factor_tail = TAU * s * (eta_f * tau * tau / 2.0 - tau * tau * tau / 3.0);
            Ok(FrontExtrapolation {
                eta_f,
                shape_factor_tail,
                contact_slope: Some(s),
            })
        }
        Classification::ZeroAngleCandidate => {
            let lam = params.lambda;
            if lam <= 1.0 {
                return Err(Error::Domain(format!(
                    "the zero-angle front model requires lambda > 1, got {lam}"
                )));
            }
            let q = front_exponent(lam);
            // η_f appears inside C; a few fixed-point rounds converge to
            // machine precision since the correction is O(h_stop^{1/q}).
            let mut eta_f = tail.eta;
            let mut c = front_coefficient_base(lam);
            for _ in 0..8 {
                c = front_coefficient(lam, eta_f);
                eta_f = tail.eta + (tail.h / c).powf(1.0 / q);
            }
            let tau = eta_f - tail.eta;
            let shape_factor_tail = TAU
                * c
                * (eta_f * tau.powf(q + 1.0) / (q + 1.0) - tau.powf(q + 2.0) / (q + 2.0));
            Ok(FrontExtrapolation {
                eta_f,
                shape_factor_tail,
                contact_slope: None,
            })
        }
    }
}

/// Finds the inflection of H (the sign change of H'' = -K - H'/η) from the
/// sampled states and linearly interpolates (η_i, H'(η_i)). When several sign
/// changes exist, the one with the largest |H'| is the maximum-slope point.
pub fn locate_inflection(samples: &[SimilarityState]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::NoInflection(
            "need at least two samples to bracket a curvature sign change".into(),
        ));
    }
    let hpp = |s: &SimilarityState| -s.k - s.hp / s.eta;
    let mut best: Option<(f64, f64)> = None;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (fa, fb) = (hpp(a), hpp(b));
        if fa == 0.0 || (fa < 0.0) != (fb < 0.0) {
            let t = if fa == fb { 0.0 } else { fa / (fa - fb) };
            let eta_i = a.eta + t * (b.eta - a.eta);
            let hp_i = a.hp + t * (b.hp - a.hp);
            if best.is_none_or(|(_, h)| hp_i.abs() > h.abs()) {
                best = Some((eta_i, hp_i));
            }
        }
    }
    best.ok_or_else(|| {
        Error::NoInflection("H'' does not change sign over the sampled range".into())
    })
}

fn post_process(
    params: OdeParams,
    samples: Vec<SimilarityState>,
    classification: Classification,
) -> Result<SimilarityProfile> {
    if classification == Classification::Subcritical {
        return Ok(SimilarityProfile {
            params,
            samples,
            classification,
            eta_f: None,
            contact_slope: None,
            eta_i: None,
            hp_at_eta_i: None,
            shape_factor: None,
        });
    }
    let tail = *samples.last().ok_or_else(|| {
        Error::NonConvergence("integration produced no samples above h_stop".into())
    })?;
    let front = front_extrapolation(&tail, classification, &params)?;
    let (eta_i, hp_at_eta_i) = match locate_inflection(&samples) {
        Ok((e, hp)) => (Some(e), Some(hp)),
        Err(_) => (None, None),
    };
    Ok(SimilarityProfile {
        params,
        samples,
        classification,
        eta_f: Some(front.eta_f),
        contact_slope: front.contact_slope,
        eta_i,
        hp_at_eta_i,
        shape_factor: Some(tail.i_acc + front.shape_factor_tail),
    })
}

/// Integrates one profile and classifies it.
///
/// Termination: H < h_stop declares the front reached (FiniteAngle); a slope
/// sign change with H > 10·h_stop, or η exceeding eta_max, declares
/// Subcritical. Front-reaching profiles get eta_f, contact_slope, the
/// inflection point, and the shape factor populated; Subcritical profiles
/// leave them unset.
pub fn integrate_profile(params: &OdeParams, opts: &IntegratorOptions) -> Result<SimilarityProfile> {
    let run = integrate_raw(params, opts, true, false)?;
    let classification = match run.side {
        Side::Front => Classification::FiniteAngle,
        Side::Subcritical => Classification::Subcritical,
    };
    post_process(*params, run.samples, classification)
}

/// Integrates at a given κ₀ and labels the result ZeroAngleCandidate,
/// applying the degenerate front model. Used by the critical-curvature search
/// for the bracket midpoint.
pub(crate) fn integrate_as_zero_angle(
    params: &OdeParams,
    opts: &IntegratorOptions,
) -> Result<Option<SimilarityProfile>> {
    let run = integrate_raw(params, opts, true, false)?;
    match run.side {
        Side::Front => Ok(Some(post_process(
            *params,
            run.samples,
            Classification::ZeroAngleCandidate,
        )?)),
        // Possible only with a very loose bracket: the midpoint turned before
        // reaching h_stop. The caller falls back to the front-side endpoint.
        Side::Subcritical => Ok(None),
    }
}

/// Deep two-sided discrimination for the eigenvalue search.
pub(crate) fn classify_deep(params: &OdeParams, opts: &IntegratorOptions) -> Result<Side> {
    Ok(integrate_raw(params, opts, false, true)?.side)
}
