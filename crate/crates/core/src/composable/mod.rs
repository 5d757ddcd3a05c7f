//! Finite-size composable key rate.
//!
//! `R = r [R_m − Δ_AEP/√n + Θ/n]`, clamped at 0, with `r = n p_EC / N` and
//! `m = N − n` signals spent on parameter estimation.

mod optimize;

pub use optimize::{optimize, OptimizeSettings};

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::estimation::{worst_case_rate, ChannelParams, PeConfig};
use crate::protocol::{ProtocolConfig, Variant};

/// Base of the logarithm under the square root of `Δ_AEP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    Two,
    #[default]
    E,
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::Two => "2",
            LogBase::E => "e",
        })
    }
}

impl FromStr for LogBase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            _ => Err(Error::Parse(format!("log base must be 2 or e, got '{s}'"))),
        }
    }
}

/// Reading of the hashing contribution `2 log2 √2 ε_h` to `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashingTerm {
    /// `2 log2(√2 · ε_h)`.
    #[default]
    SqrtTwoTimes,
    /// `2 log2 √(2 ε_h)`.
    SqrtOfTwice,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposableConfig {
    /// Total number of signals `N`.
    pub n_total: u64,
    /// Probability that error correction succeeds.
    pub p_ec: f64,
    pub zeta: f64,
    /// Discretization bins.
    pub d: u32,
    pub eps_s: f64,
    pub eps_h: f64,
    pub eps_pe: f64,
    pub eps_cor: f64,
    pub log_base: LogBase,
    pub hashing: HashingTerm,
}

impl ComposableConfig {
    /// `N = 10⁶`, `ζ = 0.9`, `p_EC = 0.8`, `d = 2⁵`, `ε_PE = 10⁻¹⁰`,
    /// `ε_s = ε_h = ε_cor = 10⁻²⁰`.
    pub fn reference_defaults() -> Self {
        ComposableConfig {
            n_total: 1_000_000,
            p_ec: 0.8,
            zeta: 0.9,
            d: 32,
            eps_s: 1e-20,
            eps_h: 1e-20,
            eps_pe: 1e-10,
            eps_cor: 1e-20,
            log_base: LogBase::E,
            hashing: HashingTerm::SqrtTwoTimes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_total < 1000 {
            return Err(domain(format!("N must be >= 1000, got {}", self.n_total)));
        }
        if !(self.p_ec > 0.0 && self.p_ec <= 1.0) {
            return Err(domain(format!("p_ec must be in (0,1], got {}", self.p_ec)));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(domain(format!("zeta must be in (0,1], got {}", self.zeta)));
        }
        if self.d < 2 {
            return Err(domain(format!("d must be >= 2, got {}", self.d)));
        }
        for (name, eps) in [
            ("eps_s", self.eps_s),
            ("eps_h", self.eps_h),
            ("eps_pe", self.eps_pe),
            ("eps_cor", self.eps_cor),
        ] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(domain(format!("{name} must be in (0,1), got {eps}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposableResult {
    /// Bits per use, `≥ 0`.
    pub rate: f64,
    /// `r [R_m − Δ_AEP/√n + Θ/n]` before clamping.
    pub unclamped: f64,
    pub r: f64,
    pub n: u64,
    pub m: u64,
    pub va_opt: f64,
    /// Worst-case asymptotic rate after estimation.
    pub r_m: f64,
    pub pe_failed: bool,
    pub eps_total: f64,
}

/// `Δ_AEP = 4 log2(2√d + 1) √(log(18 / (p² ε_s⁴)))`.
pub fn delta_aep(d: u32, p_ec: f64, eps_s: f64, base: LogBase) -> Result<f64> {
    if d < 2 {
        return Err(domain(format!("d must be >= 2, got {d}")));
    }
    // ε_s⁴ underflows near 1e-80, so the argument is assembled in logs
    let log_arg = 18f64.ln() - 2.0 * p_ec.ln() - 4.0 * eps_s.ln();
    if !(log_arg > 0.0) {
        return Err(domain("argument of the AEP logarithm must exceed 1"));
    }
    let inner = match base {
        LogBase::E => log_arg,
        LogBase::Two => log_arg / std::f64::consts::LN_2,
    };
    Ok(4.0 * (2.0 * f64::from(d).sqrt() + 1.0).log2() * inner.sqrt())
}

/// `Θ = log2[p (1 − ε_s²/3)] + 2 log2 √2 ε_h`.
pub fn theta_term(p_ec: f64, eps_s: f64, eps_h: f64, hashing: HashingTerm) -> f64 {
    let hash = match hashing {
        HashingTerm::SqrtTwoTimes => 2.0 * (0.5 * 2f64.log2() + eps_h.log2()),
        HashingTerm::SqrtOfTwice => 2f64.log2() + eps_h.log2(),
    };
    (p_ec * (1.0 - eps_s * eps_s / 3.0)).log2() + hash
}

/// `ε = ε_s + ε_cor + ε_h + 2 p_EC ε_PE`.
pub fn eps_total(cfg: &ComposableConfig) -> f64 {
    cfg.eps_s + cfg.eps_cor + cfg.eps_h + 2.0 * cfg.p_ec * cfg.eps_pe
}

/// Composable rate at a fixed split `r` and modulation `V_A`.
///
/// `n = ⌊r N / p_EC⌋`, `m = N − n`, and `R_m` is the worst-case rate at
/// `μ = V_A + 1` with efficiency `ζ`.
pub fn composable_rate(
    params: &ChannelParams,
    cfg: &ComposableConfig,
    variant: Variant,
    r: f64,
    va: f64,
) -> Result<ComposableResult> {
    cfg.validate()?;
    if !(r > 0.0 && r < cfg.p_ec) {
        return Err(domain(format!("r must be in (0, p_ec = {}), got {r}", cfg.p_ec)));
    }
    if !(va > 0.0) || !va.is_finite() {
        return Err(domain(format!("V_A must be > 0, got {va}")));
    }
    let n_total = cfg.n_total as f64;
    let n = (r * n_total / cfg.p_ec).floor() as u64;
    let m = cfg.n_total - n;
    if n == 0 || m < 2 {
        return Err(domain(format!("r = {r} leaves n = {n}, m = {m}")));
    }
    let protocol = ProtocolConfig::new(variant, va + 1.0, cfg.zeta)?;
    let worst = worst_case_rate(params, &protocol, &PeConfig::new(m, cfg.eps_pe)?)?;
    let nf = n as f64;
    let bracket = worst.rate - delta_aep(cfg.d, cfg.p_ec, cfg.eps_s, cfg.log_base)? / nf.sqrt()
        + theta_term(cfg.p_ec, cfg.eps_s, cfg.eps_h, cfg.hashing) / nf;
    let r_actual = nf * cfg.p_ec / n_total;
    let unclamped = r_actual * bracket;
    Ok(ComposableResult {
        rate: unclamped.max(0.0),
        unclamped,
        r: r_actual,
        n,
        m,
        va_opt: va,
        r_m: worst.rate,
        pe_failed: worst.pe_failed,
        eps_total: eps_total(cfg),
    })
}
