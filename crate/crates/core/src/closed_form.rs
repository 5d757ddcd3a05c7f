//! Asymptotic (μ → ∞) rates in closed form.

use std::f64::consts::E;

use crate::error::{domain, Result};
use crate::gaussian::entropy_h;
use crate::protocol::{Detection, Direction, Variant};

fn h(x: f64) -> f64 {
    // every call site passes an argument >= 1 by construction
    entropy_h(x).unwrap_or(f64::NAN)
}

/// Class C rate (attenuation for `tau < 1`, amplifier for `tau > 1`).
pub fn c_class_rate(variant: Variant, tau: f64, omega: f64) -> Result<f64> {
    if !(tau > 0.0) || tau == 1.0 || !tau.is_finite() {
        return Err(domain(format!(
            "closed form needs tau in (0,1) or (1,inf), got {tau}"
        )));
    }
    if !(omega >= 1.0) || !omega.is_finite() {
        return Err(domain(format!("omega must be >= 1, got {omega}")));
    }
    let a = (1.0 - tau).abs();
    let hw = h(omega);
    let r = match (variant.detection, variant.direction) {
        (Detection::Homodyne, Direction::Direct) => {
            let nu = (omega * (tau + a * omega) / (a + tau * omega)).sqrt();
            0.5 * (tau * (tau * omega + a) / (a * (tau + a * omega))).log2() - hw + h(nu)
        }
        (Detection::Homodyne, Direction::Reverse) => {
            0.5 * (omega / (a * (tau + a * omega))).log2() - hw
        }
        (Detection::Heterodyne, dir) => {
            let log_term = (2.0 * tau / (E * a * (tau + a * omega + 1.0))).log2();
            let nu = match dir {
                Direction::Direct => tau + a * omega,
                Direction::Reverse => (1.0 + a * omega) / tau,
            };
            log_term - hw + h(nu)
        }
    };
    Ok(r)
}

/// Rate of the additive classical-noise channel of variance `theta`.
/// The two heterodyne variants coincide.
pub fn classical_noise_rate(variant: Variant, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain(format!("theta must be > 0, got {theta}")));
    }
    let hom = (2.0 / (E * (theta * (theta + 1.0)).sqrt())).log2();
    Ok(match (variant.detection, variant.direction) {
        (Detection::Homodyne, Direction::Direct) => hom + h((1.0 + theta).sqrt()),
        (Detection::Homodyne, Direction::Reverse) => hom,
        (Detection::Heterodyne, _) => {
            (4.0 / (E * E * theta * (theta + 2.0))).log2() + h(theta + 1.0)
        }
    })
}

/// Rate of the B1 form at finite modulation `mu` (vacuum environment).
pub fn b1_rate(variant: Variant, mu: f64) -> Result<f64> {
    if !(mu > 1.0) || !mu.is_finite() {
        return Err(domain(format!("mu must be > 1, got {mu}")));
    }
    let s = (2.0 * mu).sqrt();
    let root2 = std::f64::consts::SQRT_2;
    Ok(match (variant.detection, variant.direction) {
        (Detection::Homodyne, Direction::Direct) => 0.5 * (s / E).log2() + 0.5 * h(root2),
        (Detection::Homodyne, Direction::Reverse) => 0.5 * (s / E).log2(),
        (Detection::Heterodyne, _) => (s / (E * 3f64.sqrt())).log2() + h(root2),
    })
}
