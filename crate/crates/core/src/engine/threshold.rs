use crate::canonical::CanonicalForm;
use crate::closed_form::{c_class_rate, classical_noise_rate};
use crate::error::{domain, Result};
use crate::protocol::{ProtocolConfig, Variant};

use super::{asymptotic_rate, xi_to_omega};

/// Absolute tolerance of the bisection in the solved variable.
pub const THRESHOLD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Attenuation,
    Amplifier,
    ClassicalNoise,
}

/// The variable solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Xi,
    Tau,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateSource {
    /// Covariance-matrix pipeline at the problem's `mu` and `zeta`.
    Engine,
    /// Asymptotic closed forms (`zeta` scales nothing there; `mu` is ignored).
    ClosedForm,
}

/// A threshold search `R(x) = 0`.
///
/// `fixed` holds the other channel parameter: `tau` when solving for `xi`, `xi`
/// when solving for `tau`, and is ignored for `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdProblem {
    pub family: Family,
    pub unknown: Unknown,
    pub fixed: f64,
    pub variant: Variant,
    pub mu: f64,
    pub zeta: f64,
    pub source: RateSource,
    pub interval: Option<(f64, f64)>,
}

impl ThresholdProblem {
    pub fn new(family: Family, unknown: Unknown, fixed: f64, variant: Variant) -> Self {
        ThresholdProblem {
            family,
            unknown,
            fixed,
            variant,
            mu: 1e8,
            zeta: 1.0,
            source: RateSource::Engine,
            interval: None,
        }
    }

    /// Search interval, explicit or the family default.
    pub fn search_interval(&self) -> Result<(f64, f64)> {
        if let Some(iv) = self.interval {
            return Ok(iv);
        }
        match (self.family, self.unknown) {
            (Family::Attenuation, Unknown::Tau) => Ok((1e-6, 1.0 - 1e-6)),
            (Family::Amplifier, Unknown::Tau) => Ok((1.0 + 1e-6, 1e3)),
            (Family::Attenuation | Family::Amplifier, Unknown::Xi) => Ok((0.0, 1.0)),
            (Family::ClassicalNoise, Unknown::Theta) => Ok((1e-9, 10.0)),
            (family, unknown) => Err(domain(format!(
                "cannot solve for {unknown:?} on the {family:?} family"
            ))),
        }
    }

    /// The rate at `x` of the solved variable.
    pub fn rate_at(&self, x: f64) -> Result<f64> {
        let (tau, xi) = match self.unknown {
            Unknown::Tau => (x, self.fixed),
            Unknown::Xi => (self.fixed, x),
            Unknown::Theta => (1.0, x),
        };
        match (self.source, self.family) {
            (RateSource::ClosedForm, Family::ClassicalNoise) => classical_noise_rate(self.variant, xi),
            (RateSource::ClosedForm, _) => {
                self.check_family_tau(tau)?;
                c_class_rate(self.variant, tau, xi_to_omega(tau, xi)?)
            }
            (RateSource::Engine, family) => {
                let form = match family {
                    Family::ClassicalNoise => CanonicalForm::classical_noise(xi)?,
                    _ => {
                        self.check_family_tau(tau)?;
                        CanonicalForm::c_class(tau, xi_to_omega(tau, xi)?)?
                    }
                };
                let cfg = ProtocolConfig::new(self.variant, self.mu, self.zeta)?;
                Ok(asymptotic_rate(&form, &cfg)?.rate)
            }
        }
    }

    fn check_family_tau(&self, tau: f64) -> Result<()> {
        let ok = match self.family {
            Family::Attenuation => tau > 0.0 && tau < 1.0,
            Family::Amplifier => tau > 1.0,
            Family::ClassicalNoise => true,
        };
        if ok {
            Ok(())
        } else {
            Err(domain(format!("tau = {tau} is outside the {:?} family", self.family)))
        }
    }
}

/// Root of the rate in the search interval by bisection to [`THRESHOLD_TOL`].
///
/// Returns `Ok(None)` when the rate has the same sign at both ends.
pub fn security_threshold(problem: &ThresholdProblem) -> Result<Option<f64>> {
    let (mut lo, mut hi) = problem.search_interval()?;
    if !(lo < hi) {
        return Err(domain(format!("empty search interval [{lo}, {hi}]")));
    }
    let mut f_lo = problem.rate_at(lo)?;
    let f_hi = problem.rate_at(hi)?;
    if f_lo == 0.0 {
        return Ok(Some(lo));
    }
    if f_hi == 0.0 {
        return Ok(Some(hi));
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Ok(None);
    }
    while hi - lo > 2.0 * THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = problem.rate_at(mid)?;
        if f_mid == 0.0 {
            return Ok(Some(mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_db_point() {
        let p = ThresholdProblem::new(Family::Attenuation, Unknown::Tau, 0.0, Variant::HOM_DR);
        let tau = security_threshold(&p).unwrap().unwrap();
        assert!((tau - 0.5).abs() < 1e-6, "{tau}");
        let closed = ThresholdProblem { source: RateSource::ClosedForm, ..p };
        let tau = security_threshold(&closed).unwrap().unwrap();
        assert!((tau - 0.5).abs() < 1e-8, "{tau}");
    }

    #[test]
    fn reverse_reconciliation_has_no_loss_limit() {
        let p = ThresholdProblem {
            source: RateSource::ClosedForm,
            ..ThresholdProblem::new(Family::Attenuation, Unknown::Tau, 0.0, Variant::HOM_RR)
        };
        assert_eq!(security_threshold(&p).unwrap(), None);
    }

    #[test]
    fn classical_noise_roots() {
        let p = ThresholdProblem {
            source: RateSource::ClosedForm,
            ..ThresholdProblem::new(Family::ClassicalNoise, Unknown::Theta, 0.0, Variant::HOM_RR)
        };
        let theta = security_threshold(&p).unwrap().unwrap();
        assert!((theta - 0.389_573_568_034_960_65).abs() < 1e-8);
        let het = ThresholdProblem { variant: Variant::HET_RR, ..p };
        let theta = security_threshold(&het).unwrap().unwrap();
        assert!((theta - 0.384_394_051_170_933_49).abs() < 1e-8);
    }

    #[test]
    fn unsupported_combination() {
        let p = ThresholdProblem::new(Family::ClassicalNoise, Unknown::Tau, 0.0, Variant::HOM_RR);
        assert!(security_threshold(&p).is_err());
    }
}
