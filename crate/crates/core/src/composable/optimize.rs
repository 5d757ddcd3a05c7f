use crate::error::{domain, Result};
use crate::estimation::ChannelParams;
use crate::protocol::Variant;

use super::{composable_rate, ComposableConfig, ComposableResult};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeSettings {
    /// Stop a coordinate-descent run once a sweep improves the rate by less
    /// than this fraction.
    pub rel_tol: f64,
    pub restarts: usize,
    /// `r` range as fractions of `p_EC`.
    pub r_fraction: (f64, f64),
    pub va_range: (f64, f64),
    pub max_sweeps: usize,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            rel_tol: 1e-4,
            restarts: 3,
            r_fraction: (0.01, 0.99),
            va_range: (0.5, 1e3),
            max_sweeps: 40,
        }
    }
}

/// Maximizes the composable rate over `r` and `V_A` with default settings.
pub fn optimize(params: &ChannelParams, cfg: &ComposableConfig, variant: Variant) -> Result<ComposableResult> {
    optimize_with(params, cfg, variant, &OptimizeSettings::default())
}

/// Coordinate descent with golden-section line searches (`V_A` searched on a
/// log scale), started from the best points of a coarse scan. The unclamped
/// bracket is maximized so that searches can climb out of the zero region.
pub fn optimize_with(
    params: &ChannelParams,
    cfg: &ComposableConfig,
    variant: Variant,
    settings: &OptimizeSettings,
) -> Result<ComposableResult> {
    cfg.validate()?;
    let r_box = (settings.r_fraction.0 * cfg.p_ec, settings.r_fraction.1 * cfg.p_ec);
    let lv_box = (settings.va_range.0.ln(), settings.va_range.1.ln());
    if !(r_box.0 > 0.0 && r_box.0 < r_box.1 && r_box.1 < cfg.p_ec && lv_box.0 < lv_box.1) {
        return Err(domain("empty optimization box"));
    }
    let eval = |r: f64, lv: f64| composable_rate(params, cfg, variant, r, lv.exp());

    let (nr, nv) = (8, 10);
    let mut scan = Vec::with_capacity(nr * nv);
    for i in 0..nr {
        let r = lerp(r_box, i as f64 / (nr - 1) as f64);
        for j in 0..nv {
            let lv = lerp(lv_box, j as f64 / (nv - 1) as f64);
            scan.push((eval(r, lv)?.unclamped, r, lv));
        }
    }
    scan.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best: Option<ComposableResult> = None;
    for &(_, r0, lv0) in scan.iter().take(settings.restarts.max(1)) {
        let (mut r, mut lv) = (r0, lv0);
        let mut current = eval(r, lv)?;
        for _ in 0..settings.max_sweeps {
            let before = current.unclamped;
            r = golden_max(|x| Ok(eval(x, lv)?.unclamped), r_box, r, before)?;
            lv = golden_max(|x| Ok(eval(r, x)?.unclamped), lv_box, lv, eval(r, lv)?.unclamped)?;
            current = eval(r, lv)?;
            if current.unclamped - before <= settings.rel_tol * before.abs() {
                break;
            }
        }
        if best.map_or(true, |b| current.unclamped > b.unclamped) {
            best = Some(current);
        }
    }
    best.ok_or_else(|| domain("no optimization start point"))
}

fn lerp((lo, hi): (f64, f64), t: f64) -> f64 {
    lo + t * (hi - lo)
}

/// Golden-section maximum on `[lo, hi]`; keeps `incumbent` if nothing beats it.
fn golden_max<F>(f: F, (lo, hi): (f64, f64), incumbent: f64, f_incumbent: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let tol = 1e-7 * (hi - lo);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(if fx > f_incumbent { x } else { incumbent })
}
