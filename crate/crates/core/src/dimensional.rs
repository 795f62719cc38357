//! Dimensional predictions: radius, contact angle, and height profiles in
//! physical units.
//!
//! The similarity solution h(r,t) = (B/t^{2β}) H(r/(A t^β)) is pinned to
//! physical parameters through two scale constants fixed by volume
//! conservation and the fluid properties:
//!
//! ```text
//! A^{7λ+3} = ((7λ+3)/(λ+2)) (γ/m)^λ (V/I)^{2λ+1},    B = V/(A² I).
//! ```

use crate::error::{Error, Result};
use crate::scaling::ConstantsRow;
use crate::similarity::{Classification, SimilarityProfile};
use serde::Serialize;

/// Physical fluid parameters of the power-law constitutive model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluidParams {
    /// Rheology exponent λ (dimensionless, > 0).
    pub lambda: f64,
    /// Consistency index m (Pa·s^{1/λ}).
    pub m: f64,
    /// Surface tension γ (N/m).
    pub gamma: f64,
}

impl FluidParams {
    /// Validated constructor.
    pub fn new(lambda: f64, m: f64, gamma: f64) -> Result<Self> {
        let f = FluidParams { lambda, m, gamma };
        f.validate()?;
        Ok(f)
    }

    /// Checks all three parameters are finite and positive.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("m", self.m), ("gamma", self.gamma)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A fluid, a drop volume, and the derived similarity scales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionalSetup {
    /// The fluid the scales were derived for.
    pub fluid: FluidParams,
    /// Drop volume V (m³).
    pub volume: f64,
    /// Spreading constants of the matching critical solution.
    pub constants: ConstantsRow,
    /// Length·time^{-β} scale A of the similarity coordinate.
    pub a_scale: f64,
    /// Length·time^{2β} scale B of the height.
    pub b_scale: f64,
    /// Similarity exponent β = 1/(7λ+3).
    pub beta: f64,
    /// Capillary length the validity check was constructed with, if any.
    pub capillary_length: Option<f64>,
    /// Time at which the front radius reaches the capillary length; beyond it
    /// the capillarity-dominated thin-film assumptions degrade.
    pub capillary_horizon: Option<f64>,
}

/// Builds the dimensional setup from a fluid, a volume, and a constants row.
pub fn make_setup(fluid: FluidParams, volume: f64, constants: ConstantsRow) -> Result<DimensionalSetup> {
    build_setup(fluid, volume, constants, None)
}

/// Same as [`make_setup`], additionally recording the time horizon at which
/// the predicted front radius reaches `capillary_length`. Query it with
/// [`DimensionalSetup::capillary_warning`]; the spreading law assumes the drop
/// stays much smaller than the capillary length.
pub fn make_setup_with_capillary(
    fluid: FluidParams,
    volume: f64,
    constants: ConstantsRow,
    capillary_length: f64,
) -> Result<DimensionalSetup> {
    if !(capillary_length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capillary length must be > 0, got {capillary_length}"
        )));
    }
    build_setup(fluid, volume, constants, Some(capillary_length))
}

fn build_setup(
    fluid: FluidParams,
    volume: f64,
    constants: ConstantsRow,
    capillary_length: Option<f64>,
) -> Result<DimensionalSetup> {
    fluid.validate()?;
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "volume must be finite and > 0, got {volume}"
        )));
    }
    if constants.lambda != fluid.lambda {
        return Err(Error::Mismatch(format!(
            "constants row is for lambda = {} but the fluid has lambda = {}",
            constants.lambda, fluid.lambda
        )));
    }
    if !(constants.shape_factor > 0.0 && constants.eta_f > 0.0) {
        return Err(Error::InvalidParameter(
            "constants row must have positive eta_f and shape factor".into(),
        ));
    }
    let lam = fluid.lambda;
    let n = 7.0 * lam + 3.0;
    let gm = fluid.gamma / fluid.m;
    // A in log form: the exponent n can make direct powers overflow for
    // extreme inputs while ln A stays moderate.
    let ln_a = ((n / (lam + 2.0)).ln()
        + lam * gm.ln()
        + (2.0 * lam + 1.0) * (volume / constants.shape_factor).ln())
        / n;
    let a_scale = ln_a.exp();
    let b_scale = volume / (a_scale * a_scale * constants.shape_factor);
    let beta = 1.0 / n;
    let capillary_horizon = capillary_length.map(|lc| {
        (lc / constants.s_lambda).powf(n) / (volume.powf(2.0 * lam + 1.0) * gm.powf(lam))
    });
    Ok(DimensionalSetup {
        fluid,
        volume,
        constants,
        a_scale,
        b_scale,
        beta,
        capillary_length,
        capillary_horizon,
    })
}

impl DimensionalSetup {
    /// Front radius r_f(t) = S_λ (V^{2λ+1} (γ/m)^λ t)^{1/(7λ+3)}.
    pub fn front_radius(&self, t: f64) -> f64 {
        let lam = self.fluid.lambda;
        let gm = self.fluid.gamma / self.fluid.m;
        self.constants.s_lambda
            * (self.volume.powf(2.0 * lam + 1.0) * gm.powf(lam) * t).powf(self.beta)
    }

    /// The same front radius through the scale constants, r_f = A η_f t^β.
    /// Agrees with [`front_radius`](Self::front_radius) to roundoff; kept as
    /// an independent evaluation path for consistency checks.
    pub fn front_radius_from_scales(&self, t: f64) -> f64 {
        self.a_scale * self.constants.eta_f * t.powf(self.beta)
    }

    /// Tangent of the apparent contact angle,
    /// tan θ = Q_λ V^{λ/(7λ+3)} (m/γ)^{3λ/(7λ+3)} t^{-3/(7λ+3)}.
    pub fn tan_contact_angle(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "the apparent contact angle diverges as t -> 0; got t = {t}"
            )));
        }
        let lam = self.fluid.lambda;
        let mg = self.fluid.m / self.fluid.gamma;
        Ok(self.constants.q_lambda
            * self.volume.powf(lam * self.beta)
            * mg.powf(3.0 * lam * self.beta)
            * t.powf(-3.0 * self.beta))
    }

    /// Apparent contact angle in radians, arctan of [`tan_contact_angle`](Self::tan_contact_angle).
    pub fn apparent_contact_angle(&self, t: f64) -> Result<f64> {
        Ok(self.tan_contact_angle(t)?.atan())
    }

    /// Reconstructs the dimensional height profile h(r, t) on a radius grid.
    ///
    /// H is interpolated linearly between the profile samples (H(0) = 1 closes
    /// the center), continued beyond the last sample with the classification's
    /// front model, and zero beyond the front.
    pub fn height_profile(
        &self,
        profile: &SimilarityProfile,
        t: f64,
        r_grid: &[f64],
    ) -> Result<Vec<(f64, f64)>> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("height profile needs t > 0, got {t}")));
        }
        if profile.params.lambda != self.fluid.lambda {
            return Err(Error::Mismatch(format!(
                "profile lambda = {} does not match setup lambda = {}",
                profile.params.lambda, self.fluid.lambda
            )));
        }
        if profile.classification == Classification::Subcritical {
            return Err(Error::Mismatch(
                "height reconstruction needs a front-reaching profile".into(),
            ));
        }
        let eta_f = profile
            .eta_f
            .ok_or_else(|| Error::Mismatch("profile is missing eta_f".into()))?;
        let eta_scale = self.a_scale * t.powf(self.beta);
        let h_scale = self.b_scale / t.powf(2.0 * self.beta);
        let out = r_grid
            .iter()
            .map(|&r| {
                let eta = r / eta_scale;
                (r, h_scale * interp_height(profile, eta_f, eta))
            })
            .collect();
        Ok(out)
    }

    /// Warning text when the predicted drop radius at time `t` exceeds the
    /// capillary length this setup was constructed with.
    pub fn capillary_warning(&self, t: f64) -> Option<String> {
        let (lc, horizon) = (self.capillary_length?, self.capillary_horizon?);
        if t > horizon {
            Some(format!(
                "front radius {:.3e} m exceeds the capillary length {:.3e} m beyond t = {:.3e} s; \
                 the capillarity-dominated spreading law no longer applies",
                self.front_radius(t),
                lc,
                horizon
            ))
        } else {
            None
        }
    }
}

/// Interpolates H(η) from a front-reaching profile.
pub(crate) fn interp_height(profile: &SimilarityProfile, eta_f: f64, eta: f64) -> f64 {
    if eta >= eta_f {
        return 0.0;
    }
    let samples = &profile.samples;
    if eta <= 0.0 {
        return 1.0;
    }
    let last = samples.last().expect("front-reaching profiles have samples");
    if eta > last.eta {
        // Front model beyond the sampled range.
        return match profile.classification {
            Classification::ZeroAngleCandidate => {
                let lam = profile.params.lambda;
                crate::similarity::front_coefficient(lam, eta_f)
                    * (eta_f - eta).powf(crate::similarity::front_exponent(lam))
            }
            _ => {
                let s = profile.contact_slope.unwrap_or(-last.hp);
                (s * (eta_f - eta)).max(0.0)
            }
        };
    }
    // Binary search for the bracketing samples; H(0) = 1 closes the center.
    let i = samples.partition_point(|s| s.eta < eta);
    if i == 0 {
        let s0 = &samples[0];
        let w = eta / s0.eta;
        return 1.0 + w * (s0.h - 1.0);
    }
    let (a, b) = (&samples[i - 1], &samples[i]);
    let w = (eta - a.eta) / (b.eta - a.eta);
    a.h + w * (b.h - a.h)
}

/// A measured or generated spreading history: (t, r) samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusSeries {
    /// Ordered (time, radius) pairs, t strictly increasing, r ≥ 0.
    pub points: Vec<(f64, f64)>,
}

impl RadiusSeries {
    /// Validated constructor; rejects unordered times and negative radii.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter(
                "radius series times must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|&(_, r)| r < 0.0 || !r.is_finite()) {
            return Err(Error::InvalidParameter(
                "radius series radii must be finite and non-negative".into(),
            ));
        }
        Ok(RadiusSeries { points })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when the series has no samples.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Least-squares fit of ln r against ln t: returns (exponent, prefactor) of
/// the power law r = prefactor · t^exponent. Points with t ≤ 0 or r ≤ 0 are
/// excluded; at least three valid points are required.
pub fn fit_spreading_exponent(series: &RadiusSeries) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter(|&&(t, r)| t > 0.0 && r > 0.0)
        .map(|&(t, r)| (t.ln(), r.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "power-law fit needs at least 3 points with t > 0 and r > 0, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "power-law fit needs at least two distinct times".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok((slope, intercept.exp()))
}
