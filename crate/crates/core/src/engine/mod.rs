//! Asymptotic key rates from first principles.
//!
//! The prepare-and-measure picture is used throughout: Alice's Gaussian
//! ensemble enters the channel as a thermal state of variance `μ`, and every
//! conditional quantity is obtained by switching off the modulation on the
//! relevant quadratures (input variance 1).

mod factored;
mod threshold;

use factored::AliceBob;

pub use threshold::{security_threshold, Family, RateSource, ThresholdProblem, Unknown};

use nalgebra::DMatrix;

use crate::canonical::{CanonicalForm, FormClass};
use crate::error::{domain, Result};
use crate::gaussian::{
    condition_on_heterodyne, condition_on_homodyne, symplectic_spectrum, tmsv_cm, CovMatrix,
    Mat2, Quadrature, SympSpectrum,
};
use crate::protocol::{Detection, Direction, ProtocolConfig};

/// Mode indices of the propagated state.
pub const BOB: usize = 0;
pub const EVE_OUT: usize = 1;
pub const EVE_IDLER: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    pub mutual_info: f64,
    pub holevo: f64,
    pub rate: f64,
    /// `(V_B^q, V_B^p)` of Bob's unconditional state.
    pub bob_variances: (f64, f64),
    /// Spectrum of Eve's unconditional state `E'e`.
    pub eve_average: SympSpectrum,
    /// Spectra of Eve's conditional states, one per measurement branch.
    pub eve_conditional: Vec<SympSpectrum>,
}

/// `ω = 1 + τξ/|1−τ|`, the environment variance giving excess noise `ξ` on a
/// class C channel.
pub fn xi_to_omega(tau: f64, xi: f64) -> Result<f64> {
    check_c_tau(tau)?;
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(domain(format!("xi must be >= 0 and finite, got {xi}")));
    }
    Ok(1.0 + tau * xi / (1.0 - tau).abs())
}

/// `ξ = |1−τ|(ω−1)/τ`.
pub fn omega_to_xi(tau: f64, omega: f64) -> Result<f64> {
    check_c_tau(tau)?;
    if !(omega >= 1.0) || !omega.is_finite() {
        return Err(domain(format!("omega must be >= 1, got {omega}")));
    }
    Ok((1.0 - tau).abs() * (omega - 1.0) / tau)
}

fn check_c_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau != 1.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("tau must be in (0,1) or (1,inf), got {tau}")))
    }
}

/// Propagates an input of covariance `input` (Alice's ensemble as seen by the
/// channel) through the form's dilation. Returns the 3-mode state `B, E', e`.
pub fn propagate_input(form: &CanonicalForm, input: Mat2) -> Result<CovMatrix> {
    if form.class() == FormClass::A1 {
        // thermal replacement: Bob gets Eve's thermal mode, Alice's input goes to Eve
        let env = tmsv_cm(form.omega())?;
        let a = CovMatrix::from_blocks(&[vec![input]])?;
        let mut v = DMatrix::zeros(6, 6);
        v.view_mut((0, 0), (2, 2)).copy_from(&env.matrix().view((0, 0), (2, 2)));
        v.view_mut((0, 4), (2, 2)).copy_from(&env.matrix().view((0, 2), (2, 2)));
        v.view_mut((4, 0), (2, 2)).copy_from(&env.matrix().view((2, 0), (2, 2)));
        v.view_mut((4, 4), (2, 2)).copy_from(&env.matrix().view((2, 2), (2, 2)));
        v.view_mut((2, 2), (2, 2)).copy_from(a.matrix());
        return CovMatrix::symmetrized(v);
    }
    let dilation = form.dilation()?;
    let env = tmsv_cm(form.omega())?;
    let mut v_in = DMatrix::zeros(6, 6);
    for r in 0..2 {
        for c in 0..2 {
            v_in[(r, c)] = input.get(r, c);
        }
    }
    v_in.view_mut((2, 2), (4, 4)).copy_from(env.matrix());
    let mut s = DMatrix::identity(6, 6);
    s.view_mut((0, 0), (4, 4)).copy_from(&dilation.matrix().transpose());
    CovMatrix::symmetrized(&s * v_in * s.transpose())
}

/// `V_BE'e` for Alice's average ensemble of variance `mu`.
pub fn propagate(form: &CanonicalForm, mu: f64) -> Result<CovMatrix> {
    if !(mu >= 1.0) || !mu.is_finite() {
        return Err(domain(format!("mu must be >= 1 and finite, got {mu}")));
    }
    propagate_input(form, Mat2::IDENTITY.scale(mu))
}

fn bob_diag(v: &CovMatrix) -> (f64, f64) {
    let b = v.block(BOB, BOB);
    (b.get(0, 0), b.get(1, 1))
}

/// `I(A:B)` in bits per use.
pub fn mutual_information(form: &CanonicalForm, cfg: &ProtocolConfig) -> Result<f64> {
    let avg = propagate(form, cfg.mu)?;
    let cond = propagate(form, 1.0)?;
    Ok(mutual_info_from(&avg, &cond, cfg.detection()))
}

fn mutual_info_from(avg: &CovMatrix, cond: &CovMatrix, detection: Detection) -> f64 {
    mutual_info_from_variances(bob_diag(avg), bob_diag(cond), detection)
}

fn mutual_info_from_variances(avg: (f64, f64), cond: (f64, f64), detection: Detection) -> f64 {
    let ((vq, vp), (cq, cp)) = (avg, cond);
    let i = match detection {
        Detection::Homodyne => 0.25 * ((vq / cq).log2() + (vp / cp).log2()),
        Detection::Heterodyne => 0.5 * (((vq + 1.0) / (cq + 1.0)).log2() + ((vp + 1.0) / (cp + 1.0)).log2()),
    };
    // modulation can only add variance; clip rounding below zero
    i.max(0.0)
}

/// Replaces Eve's output block of `v` with the one from `unmodulated`.
fn swap_eve_block(v: &CovMatrix, unmodulated: &CovMatrix) -> Result<CovMatrix> {
    let mut data = v.matrix().clone();
    let e = 2 * EVE_OUT;
    data.view_mut((e, e), (2, 2))
        .copy_from(&unmodulated.matrix().view((e, e), (2, 2)));
    Ok(CovMatrix::symmetrized(data)?.derived_from(v))
}

/// Alice's inputs for the direct-reconciliation branches: the modulation is
/// switched off on the quadratures Alice's reference reveals.
fn dr_inputs(cfg: &ProtocolConfig) -> Vec<(Mat2, f64)> {
    let mu = cfg.mu;
    match cfg.detection() {
        Detection::Homodyne => vec![(Mat2::diag(1.0, mu), 0.5), (Mat2::diag(mu, 1.0), 0.5)],
        Detection::Heterodyne => vec![(Mat2::IDENTITY, 1.0)],
    }
}

/// Eve's states `E'e`, unconditional and per branch, built directly from the
/// propagated covariance matrix.
pub fn eve_states(form: &CanonicalForm, cfg: &ProtocolConfig) -> Result<(CovMatrix, Vec<(CovMatrix, f64)>)> {
    let avg = propagate(form, cfg.mu)?;
    let eve = avg.reduced(&[EVE_OUT, EVE_IDLER])?;
    let branches = match cfg.direction() {
        Direction::Reverse => match cfg.detection() {
            Detection::Homodyne => vec![
                (condition_on_homodyne(&avg, BOB, Quadrature::Q)?, 0.5),
                (condition_on_homodyne(&avg, BOB, Quadrature::P)?, 0.5),
            ],
            Detection::Heterodyne => vec![(condition_on_heterodyne(&avg, BOB)?, 1.0)],
        },
        Direction::Direct => dr_inputs(cfg)
            .into_iter()
            .map(|(input, w)| {
                let known = propagate_input(form, input)?;
                Ok((swap_eve_block(&avg, &known)?.reduced(&[EVE_OUT, EVE_IDLER])?, w))
            })
            .collect::<Result<_>>()?,
    };
    Ok((eve, branches))
}

/// Holevo bound computed from Eve's side, [`eve_states`]. Loses accuracy when
/// the environment is strongly entangled (large `ω`); kept as a cross-check of
/// [`holevo_bound`].
pub fn holevo_from_eve_side(form: &CanonicalForm, cfg: &ProtocolConfig) -> Result<f64> {
    if form.class() == FormClass::A1 {
        return Ok(0.0);
    }
    let (eve, branches) = eve_states(form, cfg)?;
    let mut chi = symplectic_spectrum(&eve)?.entropy();
    for (state, w) in &branches {
        chi -= w * symplectic_spectrum(state)?.entropy();
    }
    Ok(chi.max(0.0))
}

/// Two-mode state of Bob and a purification `a` of Alice's diagonal input.
///
/// With the environment in a pure TMSV, the global state `aBE'e` is pure, so
/// `S(E'e) = S(aB)`; every Eve entropy is read from this smaller-entried state.
pub fn purified_alice_bob(form: &CanonicalForm, input: Mat2) -> Result<CovMatrix> {
    let (x, y) = (input.get(0, 0), input.get(1, 1));
    if input.get(0, 1) != 0.0 || input.get(1, 0) != 0.0 || !(x >= 1.0 && y >= 1.0) {
        return Err(domain("input ensemble must be diagonal with variances >= 1"));
    }
    let nu = (x * y).sqrt();
    // the input is a locally squeezed thermal state K ν Kᵀ, purified by a TMSV
    let k = Mat2::diag((x / nu).sqrt(), (y / nu).sqrt());
    let c_aa = (Mat2::Z * k).scale((nu * nu - 1.0).max(0.0).sqrt());
    let propagated = propagate_input(form, input)?;
    let t = form.dilation()?.transmission();
    let c_ab = c_aa * t.transpose();
    let v = CovMatrix::from_blocks(&[
        vec![Mat2::IDENTITY.scale(nu), c_ab],
        vec![c_ab.transpose(), propagated.block(BOB, BOB)],
    ])?;
    Ok(v.derived_from(&propagated))
}

/// Holevo bound `χ` in bits per use.
pub fn holevo_bound(form: &CanonicalForm, cfg: &ProtocolConfig) -> Result<f64> {
    Ok(asymptotic_rate(form, cfg)?.holevo)
}

/// `R = ζI − χ` with its ingredients.
///
/// Eve's spectra are those of the purifying partners: `aB` for her
/// unconditional state and `a|B` (RR) or `aB` at reduced modulation (DR) for
/// her conditional ones. They agree with the spectra of `E'e` up to unit
/// eigenvalues, and are evaluated in the factored representation of
/// `factored.rs`, which stays accurate where the dense matrices cancel.
pub fn asymptotic_rate(form: &CanonicalForm, cfg: &ProtocolConfig) -> Result<RateBreakdown> {
    let avg = propagate(form, cfg.mu)?;
    let bob_variances = bob_diag(&avg);
    if form.class() == FormClass::A1 {
        // Bob's output carries no trace of the input: nothing to share, nothing to hide
        let eve = symplectic_spectrum(&avg.reduced(&[EVE_OUT, EVE_IDLER])?)?;
        return Ok(RateBreakdown {
            mutual_info: 0.0,
            holevo: 0.0,
            rate: 0.0,
            bob_variances,
            eve_conditional: vec![eve.clone()],
            eve_average: eve,
        });
    }
    let ab = AliceBob::new(form, cfg.mu, cfg.mu)?;
    let unmodulated = AliceBob::new(form, 1.0, 1.0)?;
    let mutual_info = mutual_info_from_variances(
        ab.bob_variances(),
        unmodulated.bob_variances(),
        cfg.detection(),
    );
    let eve_average = SympSpectrum::computed(ab.spectrum()?, ab.scale())?;
    let single = |nu: f64| SympSpectrum::computed(vec![nu], ab.scale());
    let branches: Vec<(SympSpectrum, f64)> = match (cfg.direction(), cfg.detection()) {
        (Direction::Reverse, Detection::Homodyne) => vec![
            (single(ab.after_homodyne(true))?, 0.5),
            (single(ab.after_homodyne(false))?, 0.5),
        ],
        (Direction::Reverse, Detection::Heterodyne) => vec![(single(ab.after_heterodyne())?, 1.0)],
        (Direction::Direct, _) => dr_inputs(cfg)
            .into_iter()
            .map(|(input, w)| {
                let known = AliceBob::new(form, input.get(0, 0), input.get(1, 1))?;
                Ok((SympSpectrum::computed(known.spectrum()?, known.scale())?, w))
            })
            .collect::<Result<_>>()?,
    };
    let conditional_entropy: f64 = branches.iter().map(|(s, w)| w * s.entropy()).sum();
    let holevo = (eve_average.entropy() - conditional_entropy).max(0.0);
    Ok(RateBreakdown {
        mutual_info,
        holevo,
        rate: cfg.zeta * mutual_info - holevo,
        bob_variances,
        eve_average,
        eve_conditional: branches.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Determinant of Bob's transmission block, for diagnostics.
pub fn transmission_det(form: &CanonicalForm) -> Result<f64> {
    Ok(form.dilation()?.transmission().det())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Variant;
    use approx::assert_relative_eq;

    fn cfg(v: Variant, mu: f64) -> ProtocolConfig {
        ProtocolConfig::new(v, mu, 1.0).unwrap()
    }

    #[test]
    fn attenuation_output_variance() {
        let form = CanonicalForm::attenuation(0.3, 2.0).unwrap();
        let v = propagate(&form, 11.0).unwrap();
        let expected = 0.3 * 11.0 + 0.7 * 2.0;
        assert_eq!(v.modes(), 3);
        let b = v.block(BOB, BOB);
        assert_relative_eq!(b.get(0, 0), expected, epsilon = 1e-12);
        assert_relative_eq!(b.get(1, 1), expected, epsilon = 1e-12);
        assert!(b.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn vacuum_through_pure_loss_stays_pure() {
        let form = CanonicalForm::attenuation(0.4, 1.0).unwrap();
        let v = propagate(&form, 1.0).unwrap();
        for nu in symplectic_spectrum(&v).unwrap().values() {
            assert_relative_eq!(*nu, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn amplifier_output_variance() {
        let form = CanonicalForm::amplifier(2.0, 1.0).unwrap();
        let v = propagate(&form, 3.0).unwrap();
        assert_relative_eq!(v.block(BOB, BOB).get(0, 0), 7.0, epsilon = 1e-12);
        assert_relative_eq!(v.block(BOB, BOB).get(1, 1), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn no_modulation_no_information() {
        let form = CanonicalForm::attenuation(0.6, 1.5).unwrap();
        for v in Variant::ALL {
            let c = ProtocolConfig { variant: v, mu: 1.0, zeta: 1.0 };
            assert_eq!(mutual_information(&form, &c).unwrap(), 0.0);
        }
    }

    #[test]
    fn homodyne_information_matches_snr() {
        let (tau, omega, mu) = (0.6, 1.5, 21.0);
        let form = CanonicalForm::attenuation(tau, omega).unwrap();
        let i = mutual_information(&form, &cfg(Variant::HOM_RR, mu)).unwrap();
        let noise = tau + (1.0 - tau) * omega;
        assert_relative_eq!(i, 0.5 * (1.0 + tau * (mu - 1.0) / noise).log2(), epsilon = 1e-13);
        let i = mutual_information(&form, &cfg(Variant::HET_RR, mu)).unwrap();
        assert_relative_eq!(i, (1.0 + tau * (mu - 1.0) / (noise + 1.0)).log2(), epsilon = 1e-13);
    }

    #[test]
    fn reference_points() {
        let form = CanonicalForm::attenuation(0.5, 1.0).unwrap();
        let rr = asymptotic_rate(&form, &cfg(Variant::HOM_RR, 1e8)).unwrap();
        assert!((rr.rate - 0.5).abs() < 1e-3, "{}", rr.rate);
        assert_relative_eq!(rr.rate, rr.mutual_info - rr.holevo, epsilon = 1e-12);
        let dr = asymptotic_rate(&form, &cfg(Variant::HOM_DR, 1e8)).unwrap();
        assert!(dr.rate.abs() < 1e-3, "{}", dr.rate);
        assert_eq!(dr.eve_conditional.len(), 2);
    }

    #[test]
    fn eve_side_agrees_with_purification() {
        let forms = [
            CanonicalForm::attenuation(0.4, 1.7).unwrap(),
            CanonicalForm::amplifier(2.5, 1.3).unwrap(),
            CanonicalForm::b1(1.5).unwrap(),
            CanonicalForm::d(-0.6, 1.4).unwrap(),
            CanonicalForm::a2(2.0).unwrap(),
            CanonicalForm::classical_noise_with_delta(0.3, 1e-2).unwrap(),
        ];
        for form in &forms {
            for v in Variant::ALL {
                let c = cfg(v, 40.0);
                let direct = holevo_from_eve_side(form, &c).unwrap();
                let pur = holevo_bound(form, &c).unwrap();
                assert!((direct - pur).abs() < 1e-9, "{form:?} {v}: {direct} vs {pur}");
            }
        }
    }

    #[test]
    fn identity_like_channel_leaks_nothing() {
        let form = CanonicalForm::classical_noise(1e-9).unwrap();
        for v in Variant::ALL {
            let chi = holevo_bound(&form, &cfg(v, 1e3)).unwrap();
            assert!(chi < 1e-4, "{v}: {chi}");
        }
    }

    #[test]
    fn thermal_replacement_gives_nothing() {
        let form = CanonicalForm::a1(1.7).unwrap();
        for v in Variant::ALL {
            let r = asymptotic_rate(&form, &cfg(v, 50.0)).unwrap();
            assert_eq!(r.rate, 0.0);
            assert_relative_eq!(r.bob_variances.0, 1.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn xi_omega_round_trip() {
        for (tau, xi) in [(0.3, 0.01), (2.5, 0.2), (0.999, 1e-4)] {
            let w = xi_to_omega(tau, xi).unwrap();
            assert_relative_eq!(omega_to_xi(tau, w).unwrap(), xi, max_relative = 1e-9);
        }
        assert!(xi_to_omega(1.0, 0.1).is_err());
        assert!(xi_to_omega(0.5, -0.1).is_err());
    }

    #[test]
    fn transmission_determinant() {
        let form = CanonicalForm::d(-0.7, 1.2).unwrap();
        assert_relative_eq!(transmission_det(&form).unwrap(), -0.7, epsilon = 1e-12);
    }
}
