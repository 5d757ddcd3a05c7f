//! Parameter estimation: estimator variances, confidence offsets and the
//! worst-case rate after estimation.

use std::f64::consts::{PI, SQRT_2};

use crate::canonical::{CanonicalForm, FormClass};
use crate::engine::{asymptotic_rate, omega_to_xi, Family};
use crate::error::{domain, Error, Result};
use crate::protocol::{Detection, ProtocolConfig};

/// `|τ − 1|` below which a channel is treated as the classical-noise limit.
pub const UNIT_GAIN_TOL: f64 = 1e-9;

/// Channel parameters as seen by estimation: transmissivity `τ` and the
/// output-referred excess noise `Ξ = τξ`. For the classical-noise family
/// `τ = 1` and `Ξ = θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub family: Family,
    pub tau: f64,
    pub xi_cap: f64,
}

impl ChannelParams {
    pub fn attenuation(tau: f64, xi: f64) -> Result<Self> {
        FormClass::Attenuation.check_tau(tau)?;
        check_noise(xi)?;
        Ok(ChannelParams { family: Family::Attenuation, tau, xi_cap: tau * xi })
    }

    pub fn amplifier(tau: f64, xi: f64) -> Result<Self> {
        FormClass::Amplifier.check_tau(tau)?;
        check_noise(xi)?;
        Ok(ChannelParams { family: Family::Amplifier, tau, xi_cap: tau * xi })
    }

    pub fn classical_noise(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(domain(format!("theta must be > 0, got {theta}")));
        }
        Ok(ChannelParams { family: Family::ClassicalNoise, tau: 1.0, xi_cap: theta })
    }

    pub fn from_form(form: &CanonicalForm) -> Result<Self> {
        match form.class() {
            FormClass::Attenuation => Self::attenuation(form.tau(), omega_to_xi(form.tau(), form.omega())?),
            FormClass::Amplifier => Self::amplifier(form.tau(), omega_to_xi(form.tau(), form.omega())?),
            FormClass::ClassicalNoise => Self::classical_noise(form.theta().unwrap_or(0.0)),
            other => Err(Error::NotImplemented(format!(
                "parameter estimation covers attenuation, amplifier and classical noise, not {other:?}"
            ))),
        }
    }

    /// Input-referred excess noise `ξ = Ξ/τ`.
    pub fn xi(&self) -> f64 {
        self.xi_cap / self.tau
    }

    /// Canonical form with these parameters, `ω = 1 + Ξ/|1−τ|`. The class
    /// follows `τ` (a worst-case corner may cross `τ = 1`); at unit gain the
    /// classical-noise form with `θ = Ξ` is used.
    pub fn to_form(&self) -> Result<CanonicalForm> {
        let (tau, xi_cap) = (self.tau, self.xi_cap);
        if self.family == Family::ClassicalNoise || (tau - 1.0).abs() < UNIT_GAIN_TOL {
            return CanonicalForm::classical_noise(xi_cap);
        }
        CanonicalForm::c_class(tau, 1.0 + xi_cap / (1.0 - tau).abs())
    }

    /// Variance `σ_z²` of the additive noise in `y = √τ x + z`.
    pub fn noise_variance(&self) -> f64 {
        noise_variance(self.family, self.tau, self.xi_cap)
    }
}

fn check_noise(xi: f64) -> Result<()> {
    if xi >= 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("excess noise must be >= 0, got {xi}")))
    }
}

/// `σ_z²`: `Ξ + 1` (attenuation), `2τ + Ξ − 1` (amplifier), `θ + 1` (classical noise).
pub fn noise_variance(family: Family, tau: f64, xi_cap: f64) -> f64 {
    match family {
        Family::Attenuation | Family::ClassicalNoise => xi_cap + 1.0,
        Family::Amplifier => 2.0 * tau + xi_cap - 1.0,
    }
}

/// `w = √2 erf⁻¹(1 − ε_PE)`.
pub fn confidence_w(eps_pe: f64) -> Result<f64> {
    if !(eps_pe > 0.0 && eps_pe < 1.0) {
        return Err(domain(format!("eps_pe must be in (0,1), got {eps_pe}")));
    }
    Ok(SQRT_2 * erfc_inv(eps_pe))
}

/// Inverse of the complementary error function on `(0, 1)`.
fn erfc_inv(p: f64) -> f64 {
    // rational initial guess (Giles 2010), written in terms of p to keep
    // precision when 1 − p rounds
    let x = 1.0 - p;
    let w = -(p * (2.0 - p)).ln();
    let mut y = if w < 5.0 {
        let w = w - 2.5;
        let mut q = 2.810_226_36e-08;
        for c in [
            3.432_739_39e-07, -3.523_387_7e-06, -4.391_506_54e-06, 0.000_218_580_87,
            -0.001_253_725_03, -0.004_177_681_64, 0.246_640_727, 1.501_409_41,
        ] {
            q = q * w + c;
        }
        q * x
    } else {
        let w = w.sqrt() - 3.0;
        let mut q = -0.000_200_214_257;
        for c in [
            0.000_100_950_558, 0.001_349_343_22, -0.003_673_428_44, 0.005_739_507_73,
            -0.007_622_461_3, 0.009_438_870_47, 1.001_674_06, 2.832_976_82,
        ] {
            q = q * w + c;
        }
        q * x
    };
    // Newton on ln erfc(y) = ln p, which stays well scaled deep in the tail
    let target = p.ln();
    for _ in 0..50 {
        let e = libm::erfc(y);
        let step = (e.ln() - target) / (-2.0 / PI.sqrt() * (-y * y).exp() / e);
        y -= step;
        if step.abs() <= 1e-15 * y.abs().max(1e-300) {
            break;
        }
    }
    y
}

/// `(σ_τ², σ_Ξ²)` for the attenuation channel.
pub fn estimator_variances_attenuation(
    det: Detection,
    tau: f64,
    xi_cap: f64,
    va: f64,
    m: f64,
) -> (f64, f64) {
    let sz2 = noise_variance(Family::Attenuation, tau, xi_cap);
    base_variances(det, tau, sz2, va, m)
}

/// `(σ_τ², σ_Ξ²)` for the amplifier, including the `σ_τ²` term that the
/// gain-dependent noise floor adds to `σ_Ξ²` (`4σ_τ²` homodyne, `2σ_τ²`
/// heterodyne).
pub fn estimator_variances_amplifier(
    det: Detection,
    tau: f64,
    xi_cap: f64,
    va: f64,
    m: f64,
) -> (f64, f64) {
    let sz2 = noise_variance(Family::Amplifier, tau, xi_cap);
    let (st2, sx2) = base_variances(det, tau, sz2, va, m);
    let coupling = match det {
        Detection::Homodyne => 4.0,
        Detection::Heterodyne => 2.0,
    };
    (st2, sx2 + coupling * st2)
}

/// `σ_Ξ²` for the classical-noise channel (no transmissivity to estimate).
pub fn estimator_variances_classical(det: Detection, theta: f64, m: f64) -> f64 {
    let sz2 = noise_variance(Family::ClassicalNoise, 1.0, theta);
    xi_variance(det, sz2, m)
}

fn base_variances(det: Detection, tau: f64, sz2: f64, va: f64, m: f64) -> (f64, f64) {
    let st2 = match det {
        Detection::Homodyne => 4.0 * tau * tau / m * (2.0 + sz2 / (tau * va)),
        Detection::Heterodyne => 2.0 * tau * tau / m * (2.0 + (sz2 + 1.0) / (tau * va)),
    };
    (st2, xi_variance(det, sz2, m))
}

fn xi_variance(det: Detection, sz2: f64, m: f64) -> f64 {
    match det {
        Detection::Homodyne => 2.0 * sz2 * sz2 / m,
        Detection::Heterodyne => (sz2 + 1.0).powi(2) / m,
    }
}

/// `(σ_τ², σ_Ξ²)` for any family; `σ_τ² = 0` for classical noise.
pub fn estimator_variances(params: &ChannelParams, det: Detection, va: f64, m: f64) -> (f64, f64) {
    match params.family {
        Family::Attenuation => estimator_variances_attenuation(det, params.tau, params.xi_cap, va, m),
        Family::Amplifier => estimator_variances_amplifier(det, params.tau, params.xi_cap, va, m),
        Family::ClassicalNoise => (0.0, estimator_variances_classical(det, params.xi_cap, m)),
    }
}

/// Estimation settings. The modulation variance is taken from the protocol's
/// `μ` as `V_A = μ − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeConfig {
    pub m: u64,
    pub eps_pe: f64,
}

impl PeConfig {
    pub fn new(m: u64, eps_pe: f64) -> Result<Self> {
        if m < 2 {
            return Err(domain(format!("m must be >= 2, got {m}")));
        }
        if !(eps_pe > 0.0 && eps_pe < 1.0) {
            return Err(domain(format!("eps_pe must be in (0,1), got {eps_pe}")));
        }
        Ok(PeConfig { m, eps_pe })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeOutcome {
    /// `τ − wσ_τ`.
    pub tau_m: f64,
    /// `Ξ + wσ_Ξ`.
    pub xi_cap_m: f64,
    pub sigma_tau: f64,
    pub sigma_xi_cap: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub rate: f64,
    pub outcome: PeOutcome,
    /// Transmissivity at which `rate` was attained (for the amplifier, the
    /// worse of `τ ± wσ_τ`).
    pub tau_used: f64,
    /// The confidence interval reached `τ ≤ 0`; `rate` is then 0.
    pub pe_failed: bool,
}

/// Estimation outcome without evaluating any rate.
pub fn pe_outcome(params: &ChannelParams, det: Detection, va: f64, pe: &PeConfig) -> Result<PeOutcome> {
    let w = confidence_w(pe.eps_pe)?;
    let (st2, sx2) = estimator_variances(params, det, va, pe.m as f64);
    let (sigma_tau, sigma_xi_cap) = (st2.sqrt(), sx2.sqrt());
    Ok(PeOutcome {
        tau_m: params.tau - w * sigma_tau,
        xi_cap_m: params.xi_cap + w * sigma_xi_cap,
        sigma_tau,
        sigma_xi_cap,
        w,
    })
}

/// `R_m`: the asymptotic rate at the worst-case corner of the confidence region.
pub fn worst_case_rate(params: &ChannelParams, cfg: &ProtocolConfig, pe: &PeConfig) -> Result<WorstCase> {
    let va = cfg.mu - 1.0;
    let outcome = pe_outcome(params, cfg.detection(), va, pe)?;
    if params.family != Family::ClassicalNoise && outcome.tau_m <= 0.0 {
        return Ok(WorstCase { rate: 0.0, outcome, tau_used: outcome.tau_m, pe_failed: true });
    }
    let rate_at = |tau: f64| -> Result<f64> {
        let corner = ChannelParams { family: params.family, tau, xi_cap: outcome.xi_cap_m };
        Ok(asymptotic_rate(&corner.to_form()?, cfg)?.rate)
    };
    let (rate, tau_used) = match params.family {
        Family::Attenuation => (rate_at(outcome.tau_m)?, outcome.tau_m),
        Family::ClassicalNoise => (rate_at(1.0)?, 1.0),
        Family::Amplifier => {
            let upper = params.tau + outcome.w * outcome.sigma_tau;
            let (lo, hi) = (rate_at(outcome.tau_m)?, rate_at(upper)?);
            if lo <= hi { (lo, outcome.tau_m) } else { (hi, upper) }
        }
    };
    Ok(WorstCase { rate, outcome, tau_used, pe_failed: false })
}
