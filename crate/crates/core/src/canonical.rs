//! Canonical forms of single-mode Gaussian channels and their symplectic dilations.
//!
//! A dilation `M` acts on (input mode A, environment mode E); the third mode `e`
//! (Eve's idler) is left untouched, so the global transformation is `M ⊕ I`.
//! Covariance matrices propagate as `V_out = (Mᵀ ⊕ I) V_in (M ⊕ I)`, i.e. the
//! quadrature vector transforms with `S = Mᵀ`. The transmission block `T` is
//! the A→B block of `S`, and the class invariants are `τ = det T` and
//! `r = rk(T)·rk(N)/2` with `N` the E→B noise block.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;

use crate::error::{domain, Error, Result};
use crate::gaussian::Mat2;

/// Tolerance of the two dilation validation gates.
pub const DILATION_TOL: f64 = 1e-10;

/// Entry and determinant tolerance of the numerical rank.
const RANK_TOL: f64 = 1e-14;

/// Default `δ = 1 − τ` of the attenuation proxy for the classical-noise channel.
pub const DEFAULT_PROXY_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormClass {
    /// Completely depolarizing: τ = 0, r = 0.
    A1,
    /// τ = 0, r = 1.
    A2,
    /// τ = 1, r = 1.
    B1,
    /// Additive classical noise: τ = 1, r = 2.
    ClassicalNoise,
    /// Class C, 0 < τ < 1.
    Attenuation,
    /// Class C, τ > 1.
    Amplifier,
    /// τ < 0, r = 2.
    D,
}

impl FormClass {
    /// The class rank `r`.
    pub fn rank(self) -> usize {
        match self {
            FormClass::A1 => 0,
            FormClass::A2 | FormClass::B1 => 1,
            FormClass::ClassicalNoise | FormClass::Attenuation | FormClass::Amplifier | FormClass::D => 2,
        }
    }

    /// Checks that `tau` belongs to the class.
    pub fn check_tau(self, tau: f64) -> Result<()> {
        let ok = match self {
            FormClass::A1 | FormClass::A2 => tau == 0.0,
            FormClass::B1 | FormClass::ClassicalNoise => tau == 1.0,
            FormClass::Attenuation => tau > 0.0 && tau < 1.0,
            FormClass::Amplifier => tau > 1.0 && tau.is_finite(),
            FormClass::D => tau < 0.0 && tau.is_finite(),
        };
        if ok {
            return Ok(());
        }
        let rule = match self {
            FormClass::A1 | FormClass::A2 => "tau must be 0",
            FormClass::B1 | FormClass::ClassicalNoise => "tau must be 1",
            FormClass::Attenuation => "tau must be in (0,1)",
            FormClass::Amplifier => "tau must be > 1",
            FormClass::D => "tau must be < 0",
        };
        Err(domain(format!("{rule} for class {self:?}, got {tau}")))
    }
}

/// A validated canonical form: class, transmission invariant `τ` and the
/// environment variance `ω = 2n̄ + 1` (or the additive noise `θ` for the
/// classical-noise class).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalForm {
    class: FormClass,
    tau: f64,
    omega: f64,
    theta: f64,
    proxy_delta: f64,
}

fn check_omega(omega: f64) -> Result<()> {
    if omega >= 1.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("omega must be >= 1 and finite, got {omega}")))
    }
}

impl CanonicalForm {
    fn build(class: FormClass, tau: f64, omega: f64) -> Result<Self> {
        class.check_tau(tau)?;
        check_omega(omega)?;
        Ok(CanonicalForm { class, tau, omega, theta: 0.0, proxy_delta: 0.0 })
    }

    pub fn attenuation(tau: f64, omega: f64) -> Result<Self> {
        Self::build(FormClass::Attenuation, tau, omega)
    }

    pub fn amplifier(tau: f64, omega: f64) -> Result<Self> {
        Self::build(FormClass::Amplifier, tau, omega)
    }

    /// Class C with the sub-case picked from `tau`.
    pub fn c_class(tau: f64, omega: f64) -> Result<Self> {
        if tau > 1.0 {
            Self::amplifier(tau, omega)
        } else {
            Self::attenuation(tau, omega)
        }
    }

    /// Classical-noise channel with proxy `δ = min(DEFAULT_PROXY_DELTA, θ)`, so the
    /// proxy environment variance `θ/δ` never drops below vacuum.
    pub fn classical_noise(theta: f64) -> Result<Self> {
        Self::classical_noise_with_delta(theta, DEFAULT_PROXY_DELTA.min(theta))
    }

    pub fn classical_noise_with_delta(theta: f64, delta: f64) -> Result<Self> {
        let (_, omega) = classical_noise_proxy(theta, delta)?;
        Ok(CanonicalForm {
            class: FormClass::ClassicalNoise,
            tau: 1.0,
            omega,
            theta,
            proxy_delta: delta,
        })
    }

    pub fn b1(omega: f64) -> Result<Self> {
        Self::build(FormClass::B1, 1.0, omega)
    }

    pub fn a1(omega: f64) -> Result<Self> {
        Self::build(FormClass::A1, 0.0, omega)
    }

    pub fn a2(omega: f64) -> Result<Self> {
        Self::build(FormClass::A2, 0.0, omega)
    }

    pub fn d(tau: f64, omega: f64) -> Result<Self> {
        Self::build(FormClass::D, tau, omega)
    }

    pub fn class(&self) -> FormClass {
        self.class
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Variance of the environment TMSV. For the classical-noise class this is
    /// the proxy value `θ/δ`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Additive noise variance; only meaningful for the classical-noise class.
    pub fn theta(&self) -> Option<f64> {
        (self.class == FormClass::ClassicalNoise).then_some(self.theta)
    }

    pub fn proxy_delta(&self) -> Option<f64> {
        (self.class == FormClass::ClassicalNoise).then_some(self.proxy_delta)
    }

    /// The dilation used to propagate states. A1 has none: its output is a
    /// thermal state independent of the input.
    pub fn dilation(&self) -> Result<Dilation> {
        match self.class {
            FormClass::Attenuation => dilation_attenuation(self.tau),
            FormClass::Amplifier => dilation_amplifier(self.tau),
            FormClass::ClassicalNoise => Ok(classical_noise_proxy(self.theta, self.proxy_delta)?.0),
            FormClass::B1 => Ok(dilation_b1()),
            FormClass::A2 | FormClass::D => dilation_exotic(self.class, self.tau),
            FormClass::A1 => Err(Error::NotImplemented(
                "class A1 is modelled by thermal replacement and has no dilation".into(),
            )),
        }
    }
}

/// A 4×4 symplectic matrix on (A, E) that passed both validation gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dilation {
    m: Matrix4<f64>,
}

fn omega2() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 1)] = 1.0;
    o[(1, 0)] = -1.0;
    o[(2, 3)] = 1.0;
    o[(3, 2)] = -1.0;
    o
}

fn from_blocks(a: Mat2, b: Mat2, c: Mat2, d: Mat2) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for (bi, blk) in [a, b, c, d].iter().enumerate() {
        let (r0, c0) = (2 * (bi / 2), 2 * (bi % 2));
        for r in 0..2 {
            for col in 0..2 {
                m[(r0 + r, c0 + col)] = blk.get(r, col);
            }
        }
    }
    m
}

impl Dilation {
    /// Symplectic residual of an arbitrary matrix, `max |M Ω Mᵀ − Ω|`.
    pub fn symplectic_residual_of(m: &Matrix4<f64>) -> f64 {
        let o = omega2();
        (m * o * m.transpose() - o).amax()
    }

    /// Runs the validation gates on a candidate matrix: symplectic within
    /// [`DILATION_TOL`], `det T = tau` within [`DILATION_TOL`] and class rank `r`.
    pub fn from_candidate(m: Matrix4<f64>, class: FormClass, tau: f64) -> Result<Self> {
        let residual = Self::symplectic_residual_of(&m);
        if !(residual <= DILATION_TOL) {
            return Err(Error::Contract(format!(
                "candidate dilation for {class:?} is not symplectic (residual {residual:e})"
            )));
        }
        let d = Dilation { m };
        let det = d.transmission().det();
        if !((det - tau).abs() <= DILATION_TOL) {
            return Err(Error::Contract(format!(
                "candidate dilation for {class:?} has det T = {det}, expected {tau}"
            )));
        }
        if d.rank() != class.rank() {
            return Err(Error::Contract(format!(
                "candidate dilation for {class:?} has rank {}, expected {}",
                d.rank(),
                class.rank()
            )));
        }
        Ok(d)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn symplectic_residual(&self) -> f64 {
        Self::symplectic_residual_of(&self.m)
    }

    fn s_block(&self, row: usize, col: usize) -> Mat2 {
        // S = Mᵀ, so S's (row, col) block is the transpose of M's (col, row) block
        let m = &self.m;
        let (r0, c0) = (2 * col, 2 * row);
        Mat2::new(m[(r0, c0)], m[(r0 + 1, c0)], m[(r0, c0 + 1)], m[(r0 + 1, c0 + 1)])
    }

    /// Transmission block `T` (input → Bob).
    pub fn transmission(&self) -> Mat2 {
        self.s_block(0, 0)
    }

    /// Environment → Bob coupling `G`; the noise block is `N = ω·G Gᵀ`.
    pub fn environment_coupling(&self) -> Mat2 {
        self.s_block(0, 1)
    }

    /// `r = rk(T)·rk(N)/2`.
    pub fn rank(&self) -> usize {
        // rk(N) = rk(G) since the environment block of a TMSV is ωI
        let g = self.environment_coupling();
        self.transmission().rank(RANK_TOL) * g.rank(RANK_TOL) / 2
    }
}

/// Beam splitter of transmissivity `tau`.
pub fn dilation_attenuation(tau: f64) -> Result<Dilation> {
    FormClass::Attenuation.check_tau(tau)?;
    let a = tau.sqrt();
    let b = (1.0 - tau).sqrt();
    let m = from_blocks(
        Mat2::IDENTITY.scale(a),
        Mat2::IDENTITY.scale(b),
        Mat2::IDENTITY.scale(-b),
        Mat2::IDENTITY.scale(a),
    );
    Dilation::from_candidate(m, FormClass::Attenuation, tau)
}

/// Two-mode squeezer of gain `tau`.
pub fn dilation_amplifier(tau: f64) -> Result<Dilation> {
    FormClass::Amplifier.check_tau(tau)?;
    let a = tau.sqrt();
    let b = (tau - 1.0).sqrt();
    let m = from_blocks(
        Mat2::IDENTITY.scale(a),
        Mat2::Z.scale(b),
        Mat2::Z.scale(b),
        Mat2::IDENTITY.scale(a),
    );
    // det T = τ only to rounding; gate with a relative tolerance for large gains
    Dilation::from_candidate(m, FormClass::Amplifier, tau).or_else(|err| {
        let d = Dilation { m };
        let det = d.transmission().det();
        if d.symplectic_residual() <= DILATION_TOL * tau && (det - tau).abs() <= DILATION_TOL * tau {
            Ok(d)
        } else {
            Err(err)
        }
    })
}

/// `M_B1 = (I, (I+Z)/2; (I−Z)/2, −I)`.
pub fn dilation_b1() -> Dilation {
    let half_plus = (Mat2::IDENTITY + Mat2::Z).scale(0.5);
    let half_minus = (Mat2::IDENTITY - Mat2::Z).scale(0.5);
    let m = from_blocks(Mat2::IDENTITY, half_plus, half_minus, Mat2::IDENTITY.scale(-1.0));
    Dilation::from_candidate(m, FormClass::B1, 1.0).expect("B1 dilation satisfies its gates")
}

/// Attenuation proxy of the classical-noise channel: a beam splitter with
/// `τ = 1 − delta` and environment variance `ω = theta/delta`, so that
/// `(1−τ)ω = θ`. Consumers should confirm convergence by halving `delta`.
pub fn classical_noise_proxy(theta: f64, delta: f64) -> Result<(Dilation, f64)> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain(format!("theta must be > 0, got {theta}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("proxy delta must be in (0,1), got {delta}")));
    }
    let omega = theta / delta;
    if !omega.is_finite() {
        return Err(domain(format!(
            "proxy environment variance theta/delta overflows for theta={theta}, delta={delta}"
        )));
    }
    if omega < 1.0 {
        return Err(domain(format!(
            "proxy environment variance theta/delta = {omega} is below vacuum; use delta <= theta"
        )));
    }
    Ok((dilation_attenuation(1.0 - delta)?, omega))
}

/// Dilations of the classes A2 and D.
///
/// * A2 (τ = 0): `q_B = q_A + q_E`, `p_B = p_E`, `q_E' = q_A`, `p_E' = p_A − p_E`.
/// * D (τ < 0): the amplifier of gain `1 − τ` with its two outputs exchanged,
///   `B = √(−τ) Z x_A + √(1−τ) x_E`, `E' = √(1−τ) x_A + √(−τ) Z x_E`.
///
/// Both are checked by the same gates as [`Dilation::from_candidate`]; any
/// other construction may be supplied through that function instead.
pub fn dilation_exotic(class: FormClass, tau: f64) -> Result<Dilation> {
    class.check_tau(tau)?;
    let s = match class {
        FormClass::A2 => a2_quadrature_map(),
        FormClass::D => {
            let a = (-tau).sqrt();
            let b = (1.0 - tau).sqrt();
            from_blocks(
                Mat2::Z.scale(a),
                Mat2::IDENTITY.scale(b),
                Mat2::IDENTITY.scale(b),
                Mat2::Z.scale(a),
            )
        }
        _ => {
            return Err(Error::NotImplemented(format!(
                "no dilation configured for {class:?}; a construction must satisfy \
                 M Ω Mᵀ = Ω and det T = τ within {DILATION_TOL:e} with rank {}",
                class.rank()
            )))
        }
    };
    // the constructions above are written as quadrature maps S; M = Sᵀ
    Dilation::from_candidate(s.transpose(), class, tau)
}

fn a2_quadrature_map() -> Matrix4<f64> {
    // rows: q_B, p_B, q_E', p_E'; columns: q_A, p_A, q_E, p_E
    Matrix4::new(
        1.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, -1.0,
    )
}

/// Thermal-noise part of a class C channel descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvNoise {
    /// Input-referred excess noise `ξ = |1−τ|(ω−1)/τ`.
    Xi(f64),
    /// Environment variance `ω` directly.
    Omega(f64),
}

/// Channel descriptor as written on the command line or in config files, e.g.
/// `att:tau=0.6,xi=0.01`, `amp:tau=2,xi=0.05`, `b2:theta=0.1`, `b1:`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    Attenuation { tau: f64, noise: EnvNoise },
    Amplifier { tau: f64, noise: EnvNoise },
    ClassicalNoise { theta: f64 },
    B1 { omega: f64 },
    A1 { omega: f64 },
    A2 { omega: f64 },
    D { tau: f64, omega: f64 },
}

impl ChannelSpec {
    /// Resolves the descriptor into a validated canonical form.
    pub fn to_form(&self) -> Result<CanonicalForm> {
        match *self {
            ChannelSpec::Attenuation { tau, noise } => {
                FormClass::Attenuation.check_tau(tau)?;
                CanonicalForm::attenuation(tau, resolve_omega(tau, noise)?)
            }
            ChannelSpec::Amplifier { tau, noise } => {
                FormClass::Amplifier.check_tau(tau)?;
                CanonicalForm::amplifier(tau, resolve_omega(tau, noise)?)
            }
            ChannelSpec::ClassicalNoise { theta } => CanonicalForm::classical_noise(theta),
            ChannelSpec::B1 { omega } => CanonicalForm::b1(omega),
            ChannelSpec::A1 { omega } => CanonicalForm::a1(omega),
            ChannelSpec::A2 { omega } => CanonicalForm::a2(omega),
            ChannelSpec::D { tau, omega } => CanonicalForm::d(tau, omega),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ChannelSpec::Attenuation { .. } => "att",
            ChannelSpec::Amplifier { .. } => "amp",
            ChannelSpec::ClassicalNoise { .. } => "b2",
            ChannelSpec::B1 { .. } => "b1",
            ChannelSpec::A1 { .. } => "a1",
            ChannelSpec::A2 { .. } => "a2",
            ChannelSpec::D { .. } => "d",
        }
    }
}

fn resolve_omega(tau: f64, noise: EnvNoise) -> Result<f64> {
    match noise {
        EnvNoise::Omega(w) => Ok(w),
        EnvNoise::Xi(xi) => crate::engine::xi_to_omega(tau, xi),
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let noise = |n: &EnvNoise| match n {
            EnvNoise::Xi(x) => format!("xi={x}"),
            EnvNoise::Omega(w) => format!("omega={w}"),
        };
        match self {
            ChannelSpec::Attenuation { tau, noise: n } => write!(f, "att:tau={tau},{}", noise(n)),
            ChannelSpec::Amplifier { tau, noise: n } => write!(f, "amp:tau={tau},{}", noise(n)),
            ChannelSpec::ClassicalNoise { theta } => write!(f, "b2:theta={theta}"),
            ChannelSpec::B1 { omega } => write!(f, "b1:omega={omega}"),
            ChannelSpec::A1 { omega } => write!(f, "a1:omega={omega}"),
            ChannelSpec::A2 { omega } => write!(f, "a2:omega={omega}"),
            ChannelSpec::D { tau, omega } => write!(f, "d:tau={tau},omega={omega}"),
        }
    }
}

struct Fields<'a> {
    kind: &'a str,
    pairs: Vec<(&'a str, f64)>,
}

impl Fields<'_> {
    fn take(&mut self, key: &str) -> Option<f64> {
        let pos = self.pairs.iter().position(|(k, _)| *k == key)?;
        Some(self.pairs.remove(pos).1)
    }

    fn require(&mut self, key: &str) -> Result<f64> {
        self.take(key)
            .ok_or_else(|| Error::Parse(format!("channel '{}' requires '{key}='", self.kind)))
    }

    fn finish(self) -> Result<()> {
        match self.pairs.first() {
            None => Ok(()),
            Some((k, _)) => Err(Error::Parse(format!(
                "unknown parameter '{k}' for channel '{}'",
                self.kind
            ))),
        }
    }

    fn env_noise(&mut self) -> Result<EnvNoise> {
        match (self.take("xi"), self.take("omega")) {
            (Some(_), Some(_)) => Err(Error::Parse(format!(
                "channel '{}' takes either xi= or omega=, not both",
                self.kind
            ))),
            (Some(x), None) => Ok(EnvNoise::Xi(x)),
            (None, Some(w)) => Ok(EnvNoise::Omega(w)),
            (None, None) => Ok(EnvNoise::Xi(0.0)),
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("channel descriptor '{s}' lacks ':'")))?;
        let mut pairs = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{item}'")))?;
            let k = k.trim();
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("'{v}' is not a number (parameter {k})")))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("parameter {k} must be finite")));
            }
            if pairs.iter().any(|(seen, _)| *seen == k) {
                return Err(Error::Parse(format!("duplicate parameter '{k}'")));
            }
            pairs.push((k, v));
        }
        let mut fields = Fields { kind, pairs };
        let spec = match kind {
            "att" => ChannelSpec::Attenuation {
                tau: fields.require("tau")?,
                noise: fields.env_noise()?,
            },
            "amp" => ChannelSpec::Amplifier {
                tau: fields.require("tau")?,
                noise: fields.env_noise()?,
            },
            "b2" => ChannelSpec::ClassicalNoise { theta: fields.require("theta")? },
            "b1" => ChannelSpec::B1 { omega: fields.take("omega").unwrap_or(1.0) },
            "a1" => ChannelSpec::A1 { omega: fields.take("omega").unwrap_or(1.0) },
            "a2" => ChannelSpec::A2 { omega: fields.take("omega").unwrap_or(1.0) },
            "d" => ChannelSpec::D {
                tau: fields.require("tau")?,
                omega: fields.take("omega").unwrap_or(1.0),
            },
            other => {
                return Err(Error::Parse(format!(
                    "unknown channel kind '{other}' (expected att|amp|b2|b1|a1|a2|d)"
                )))
            }
        };
        fields.finish()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn attenuation_bounds() {
        assert!(matches!(dilation_attenuation(1.0), Err(Error::Domain(_))));
        assert!(dilation_attenuation(0.0).is_err());
        let d = dilation_attenuation(0.5).unwrap();
        assert!(d.symplectic_residual() < 1e-15);
        let d = dilation_attenuation(0.36).unwrap();
        assert_relative_eq!(d.transmission().det(), 0.36, epsilon = 1e-15);
    }

    #[test]
    fn amplifier_gates() {
        assert!(dilation_amplifier(1.0).is_err());
        let d = dilation_amplifier(2.0).unwrap();
        assert!(d.symplectic_residual() < 1e-12);
        assert_eq!(d.rank(), 2);
        let d = dilation_amplifier(1.0 + 1e-12).unwrap();
        // coupling to the environment vanishes as τ → 1
        assert!(d.environment_coupling().0.iter().all(|x| x.abs() < 1e-5));
        assert!(dilation_amplifier(1e3).is_ok());
    }

    #[test]
    fn b1_dilation_is_symplectic() {
        let d = dilation_b1();
        assert_eq!(d.symplectic_residual(), 0.0);
        assert_eq!(d.transmission(), Mat2::IDENTITY);
        assert_eq!(d.rank(), 1);
        // only the momentum of the environment leaks into Bob's mode
        assert_eq!(d.environment_coupling(), Mat2::PROJ_P);
    }

    #[test]
    fn proxy_parameters() {
        let (d, omega) = classical_noise_proxy(0.1, 1e-6).unwrap();
        assert_relative_eq!(omega, 1e5, max_relative = 1e-12);
        assert_relative_eq!(d.transmission().det(), 1.0 - 1e-6, epsilon = 1e-15);
        assert!(classical_noise_proxy(0.0, 1e-6).is_err());
        assert!(classical_noise_proxy(1e-9, 1e-6).is_err());
        assert!(classical_noise_proxy(1e300, 1e-10).is_err());
    }

    #[test]
    fn proxy_added_noise_converges() {
        // (1−τ)(ω−1) is the noise added on top of vacuum; it approaches θ like δ
        let theta = 0.3;
        let mut prev = f64::INFINITY;
        for delta in [1e-4, 5e-5, 2.5e-5] {
            let (_, omega) = classical_noise_proxy(theta, delta).unwrap();
            let err = (delta * (omega - 1.0) - theta).abs();
            assert!(err < prev);
            assert_relative_eq!(err, delta, max_relative = 1e-9);
            prev = err;
        }
    }

    #[test]
    fn exotic_dilations_pass_gates() {
        let a2 = dilation_exotic(FormClass::A2, 0.0).unwrap();
        assert!(a2.symplectic_residual() <= DILATION_TOL);
        assert_eq!(a2.transmission().det(), 0.0);
        assert_eq!(a2.transmission().rank(1e-12), 1);
        assert_eq!(a2.rank(), 1);
        for tau in [-0.5, -2.0, -1e-3] {
            let d = dilation_exotic(FormClass::D, tau).unwrap();
            assert!(d.symplectic_residual() <= DILATION_TOL);
            assert_relative_eq!(d.transmission().det(), tau, epsilon = 1e-12);
            assert_eq!(d.rank(), 2);
        }
        assert!(dilation_exotic(FormClass::D, 0.5).is_err());
        assert!(matches!(
            dilation_exotic(FormClass::A1, 0.0),
            Err(Error::NotImplemented(_))
        ));
    }

    #[test]
    fn candidate_gate_rejects_bad_matrices() {
        let not_symplectic = Matrix4::from_diagonal_element(2.0);
        assert!(Dilation::from_candidate(not_symplectic, FormClass::D, -0.5).is_err());
        let wrong_tau = *dilation_attenuation(0.5).unwrap().matrix();
        assert!(Dilation::from_candidate(wrong_tau, FormClass::Attenuation, 0.4).is_err());
    }

    #[test]
    fn descriptors_parse() {
        let spec: ChannelSpec = "att:tau=0.6,xi=0.01".parse().unwrap();
        assert_eq!(spec, ChannelSpec::Attenuation { tau: 0.6, noise: EnvNoise::Xi(0.01) });
        let spec: ChannelSpec = "b1:".parse().unwrap();
        assert_eq!(spec, ChannelSpec::B1 { omega: 1.0 });
        let spec: ChannelSpec = "b2:theta=0.1".parse().unwrap();
        assert_eq!(spec, ChannelSpec::ClassicalNoise { theta: 0.1 });
        let spec: ChannelSpec = "amp:tau=2,omega=1.5".parse().unwrap();
        assert_eq!(spec, ChannelSpec::Amplifier { tau: 2.0, noise: EnvNoise::Omega(1.5) });
        for bad in [
            "att",
            "att:tau",
            "att:xi=0.1",
            "att:tau=0.5,tau=0.6",
            "att:tau=0.5,xi=0.1,omega=2",
            "att:tau=nan",
            "att:tau=0.5,foo=1",
            "zz:tau=1",
        ] {
            assert!(matches!(bad.parse::<ChannelSpec>(), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn descriptor_domain_errors() {
        let spec: ChannelSpec = "att:tau=1.0,xi=0".parse().unwrap();
        let err = spec.to_form().unwrap_err();
        assert!(err.to_string().contains("tau must be in (0,1)"), "{err}");
        let spec: ChannelSpec = "att:tau=0.5,xi=0.01".parse().unwrap();
        let form = spec.to_form().unwrap();
        assert_relative_eq!(form.omega(), 1.01, epsilon = 1e-14);
    }
}
