//! Synthetic parameter-estimation runs that check the estimator variances
//! used by [`crate::estimation`].

mod rng;

pub use rng::{stream_id, NormalStream};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::Family;
use crate::error::{domain, Error, Result};
use crate::estimation::{estimator_variances, noise_variance, ChannelParams};
use crate::numfmt::{json_number, round_sig};
use crate::protocol::Detection;

/// Smallest batch accepted by [`simulate_batch`].
pub const MIN_BATCH: usize = 100;
/// Fewer trials than this mark a report as insufficient.
pub const MIN_TRIALS: u32 = 100;
/// Accepted relative deviation of empirical from theoretical variance.
pub const RATIO_BAND: f64 = 0.1;

/// One block of PE data. Heterodyne batches hold `2m` entries (q and p
/// interleaved), each with half the signal and `(σ_z² + 1)/2` noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SimBatch {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub truth: ChannelParams,
    pub detection: Detection,
    pub va: f64,
    pub seed: u64,
    pub stream: u64,
}

pub fn simulate_batch(
    truth: &ChannelParams,
    detection: Detection,
    va: f64,
    m: usize,
    seed: u64,
    stream: u64,
) -> Result<SimBatch> {
    if m < MIN_BATCH {
        return Err(domain(format!("m must be >= {MIN_BATCH}, got {m}")));
    }
    if !(va > 0.0) || !va.is_finite() {
        return Err(domain(format!("V_A must be > 0, got {va}")));
    }
    let sz2 = noise_variance(truth.family, truth.tau, truth.xi_cap);
    let (len, gain, noise_sd) = match detection {
        Detection::Homodyne => (m, truth.tau.sqrt(), sz2.sqrt()),
        Detection::Heterodyne => (2 * m, (0.5 * truth.tau).sqrt(), (0.5 * (sz2 + 1.0)).sqrt()),
    };
    let mut normals = NormalStream::new(seed, stream);
    let sd_x = va.sqrt();
    let mut x = Vec::with_capacity(len);
    let mut y = Vec::with_capacity(len);
    for _ in 0..len {
        let xi = sd_x * normals.next_normal();
        x.push(xi);
        y.push(gain * xi + noise_sd * normals.next_normal());
    }
    Ok(SimBatch { x, y, truth: *truth, detection, va, seed, stream })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MleEstimate {
    pub tau_hat: f64,
    /// `max(0, Ξ̂)`.
    pub xi_cap_hat: f64,
    /// Unclamped estimate; variance statistics use this one.
    pub xi_cap_raw: f64,
    pub clamped: bool,
}

/// Estimates `τ̂ = κ ĝ²` with `ĝ = Σxy / (n V_A)` (`κ = 1` homodyne, `2`
/// heterodyne) and `Ξ̂` from the residual variance minus the shot-noise
/// floor (1, or `2τ̂ − 1` for the amplifier) and, for heterodyne, the extra
/// vacuum unit.
pub fn mle_estimate(batch: &SimBatch) -> Result<MleEstimate> {
    let n = batch.x.len();
    if n == 0 || n != batch.y.len() {
        return Err(Error::Contract(format!("batch lengths {} and {}", n, batch.y.len())));
    }
    let sxx: f64 = batch.x.iter().map(|x| x * x).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateMeasurement("sum of x^2 is zero".into()));
    }
    let sxy: f64 = batch.x.iter().zip(&batch.y).map(|(x, y)| x * y).sum();
    let g = sxy / (n as f64 * batch.va);
    let resid = batch.x.iter().zip(&batch.y).map(|(x, y)| (y - g * x).powi(2)).sum::<f64>() / n as f64;
    let kappa = match batch.detection {
        Detection::Homodyne => 1.0,
        Detection::Heterodyne => 2.0,
    };
    let tau_hat = kappa * g * g;
    let floor = match batch.truth.family {
        Family::Amplifier => 2.0 * tau_hat - 1.0,
        Family::Attenuation | Family::ClassicalNoise => 1.0,
    };
    let xi_cap_raw = kappa * resid - (kappa - 1.0) - floor;
    Ok(MleEstimate {
        tau_hat,
        xi_cap_hat: xi_cap_raw.max(0.0),
        xi_cap_raw,
        clamped: xi_cap_raw < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub truth: ChannelParams,
    pub detection: Detection,
    pub va: f64,
    pub m: usize,
}

impl GridPoint {
    /// Short tag such as `amp-het`.
    pub fn label(&self) -> String {
        let family = match self.truth.family {
            Family::Attenuation => "att",
            Family::Amplifier => "amp",
            Family::ClassicalNoise => "cls",
        };
        format!("{family}-{}", self.detection)
    }

    /// `(σ_τ², σ_Ξ²)` from the estimation formulas; no `σ_τ²` for classical noise.
    pub fn theory(&self) -> (Option<f64>, f64) {
        let (st2, sx2) = estimator_variances(&self.truth, self.detection, self.va, self.m as f64);
        let st2 = (self.truth.family != Family::ClassicalNoise).then_some(st2);
        (st2, sx2)
    }
}

/// Attenuation (τ = 0.5, Ξ = 0.01), amplifier (τ = 2, Ξ = 0.02) and classical
/// noise (θ = 0.1), each with both detections, at `V_A = 5`.
pub fn default_grid(m: usize) -> Vec<GridPoint> {
    let channels = [
        ChannelParams { family: Family::Attenuation, tau: 0.5, xi_cap: 0.01 },
        ChannelParams { family: Family::Amplifier, tau: 2.0, xi_cap: 0.02 },
        ChannelParams { family: Family::ClassicalNoise, tau: 1.0, xi_cap: 0.1 },
    ];
    channels
        .iter()
        .flat_map(|truth| {
            [Detection::Homodyne, Detection::Heterodyne]
                .map(|detection| GridPoint { truth: *truth, detection, va: 5.0, m })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Tau,
    XiCap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub grid_point: String,
    pub quantity: Quantity,
    pub truth: f64,
    pub mean_estimate: f64,
    pub sigma2_theory: f64,
    pub sigma2_empirical: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub seed: u64,
    pub trials: u32,
    pub rows: Vec<ReportRow>,
}

impl ValidationReport {
    pub fn insufficient_trials(&self) -> bool {
        self.trials < MIN_TRIALS
    }

    pub fn all_pass(&self) -> bool {
        !self.insufficient_trials() && self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, grid_point: &str, quantity: Quantity) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.grid_point == grid_point && r.quantity == quantity)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        if self.insufficient_trials() {
            out.extend_from_slice(
                format!("# insufficient trials: {} < {MIN_TRIALS}\n", self.trials).as_bytes(),
            );
        }
        let mut w = csv::Writer::from_writer(&mut out);
        let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        w.write_record(["grid_point", "sigma2_theory", "sigma2_empirical", "ratio", "pass"]).map_err(io)?;
        for r in &self.rows {
            let name = format!("{}/{}", r.grid_point, quantity_tag(r.quantity));
            w.write_record([
                name,
                round_sig(r.sigma2_theory, 12).to_string(),
                round_sig(r.sigma2_empirical, 12).to_string(),
                round_sig(r.ratio, 12).to_string(),
                r.pass.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        drop(w);
        String::from_utf8(out).map_err(|e| Error::Numerical(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "grid_point": r.grid_point,
                    "quantity": quantity_tag(r.quantity),
                    "truth": json_number(r.truth),
                    "mean_estimate": json_number(r.mean_estimate),
                    "sigma2_theory": json_number(r.sigma2_theory),
                    "sigma2_empirical": json_number(r.sigma2_empirical),
                    "ratio": json_number(r.ratio),
                    "pass": r.pass,
                })
            })
            .collect();
        json!({
            "seed": self.seed,
            "trials": self.trials,
            "status": if self.insufficient_trials() { "insufficient trials" } else { "ok" },
            "all_pass": self.all_pass(),
            "rows": rows,
        })
    }
}

fn quantity_tag(q: Quantity) -> &'static str {
    match q {
        Quantity::Tau => "tau",
        Quantity::XiCap => "xi_cap",
    }
}

/// Runs `trials` batches per grid point and compares the empirical estimator
/// variances with [`GridPoint::theory`].
pub fn variance_validation_report(grid: &[GridPoint], trials: u32, seed: u64) -> Result<ValidationReport> {
    variance_validation_report_with(grid, trials, seed, GridPoint::theory)
}

/// As [`variance_validation_report`] with caller-supplied theoretical variances.
pub fn variance_validation_report_with<F>(
    grid: &[GridPoint],
    trials: u32,
    seed: u64,
    theory: F,
) -> Result<ValidationReport>
where
    F: Fn(&GridPoint) -> (Option<f64>, f64),
{
    if trials < 2 {
        return Err(domain(format!("need at least 2 trials, got {trials}")));
    }
    let mut rows = Vec::new();
    for (index, point) in grid.iter().enumerate() {
        let grid_index = u32::try_from(index).map_err(|_| domain("grid too large"))?;
        let estimates: Vec<MleEstimate> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let batch = simulate_batch(
                    &point.truth,
                    point.detection,
                    point.va,
                    point.m,
                    seed,
                    stream_id(grid_index, trial),
                )?;
                mle_estimate(&batch)
            })
            .collect::<Result<_>>()?;
        let (st2, sx2) = theory(point);
        let label = point.label();
        let mut push = |quantity, truth, theory: f64, values: Vec<f64>| {
            let (mean, var) = mean_and_variance(&values);
            let ratio = var / theory;
            rows.push(ReportRow {
                grid_point: label.clone(),
                quantity,
                truth,
                mean_estimate: mean,
                sigma2_theory: theory,
                sigma2_empirical: var,
                ratio,
                pass: trials >= MIN_TRIALS && (ratio - 1.0).abs() <= RATIO_BAND,
            });
        };
        if let Some(st2) = st2 {
            push(Quantity::Tau, point.truth.tau, st2, estimates.iter().map(|e| e.tau_hat).collect());
        }
        push(Quantity::XiCap, point.truth.xi_cap, sx2, estimates.iter().map(|e| e.xi_cap_raw).collect());
    }
    Ok(ValidationReport { seed, trials, rows })
}

/// Sample mean and unbiased variance.
fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn att() -> ChannelParams {
        ChannelParams { family: Family::Attenuation, tau: 0.5, xi_cap: 0.005 }
    }

    #[test]
    fn batch_moments() {
        let m = 100_000;
        let b = simulate_batch(&att(), Detection::Homodyne, 4.0, m, 3, 0).unwrap();
        let mean_x = b.x.iter().sum::<f64>() / m as f64;
        assert!(mean_x.abs() < 5.0 * (4.0 / m as f64).sqrt());
        let var_y = b.y.iter().map(|y| y * y).sum::<f64>() / m as f64;
        assert!((var_y - (0.5 * 4.0 + 1.005)).abs() < 0.05);
    }

    #[test]
    fn batches_are_deterministic() {
        let a = simulate_batch(&att(), Detection::Heterodyne, 4.0, 200, 11, stream_id(3, 4)).unwrap();
        let b = simulate_batch(&att(), Detection::Heterodyne, 4.0, 200, 11, stream_id(3, 4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.x.len(), 400);
    }

    #[test]
    fn small_batches_rejected() {
        assert!(simulate_batch(&att(), Detection::Homodyne, 4.0, 99, 0, 0).is_err());
    }

    #[test]
    fn estimate_lands_near_truth() {
        let point = GridPoint { truth: att(), detection: Detection::Homodyne, va: 5.0, m: 1_000_000 };
        let (st2, _) = point.theory();
        let b = simulate_batch(&point.truth, point.detection, point.va, point.m, 5, 0).unwrap();
        let e = mle_estimate(&b).unwrap();
        assert!((e.tau_hat - 0.5).abs() < 5.0 * st2.unwrap().sqrt());
    }

    #[test]
    fn noiseless_batch_clamps_excess_noise() {
        let mut b = simulate_batch(&att(), Detection::Homodyne, 4.0, 1000, 1, 0).unwrap();
        b.y = b.x.iter().map(|x| 0.5f64.sqrt() * x).collect();
        let e = mle_estimate(&b).unwrap();
        assert!(e.clamped);
        assert_eq!(e.xi_cap_hat, 0.0);
        assert!(e.xi_cap_raw < -0.9);
    }

    #[test]
    fn degenerate_batch() {
        let mut b = simulate_batch(&att(), Detection::Homodyne, 4.0, 100, 1, 0).unwrap();
        b.x.iter_mut().for_each(|x| *x = 0.0);
        assert!(matches!(mle_estimate(&b), Err(Error::DegenerateMeasurement(_))));
    }

    #[test]
    fn too_few_trials_are_flagged() {
        let grid = default_grid(1000);
        let report = variance_validation_report(&grid[..1], 10, 1).unwrap();
        assert!(report.insufficient_trials());
        assert!(!report.all_pass());
        assert!(report.to_csv().unwrap().starts_with("# insufficient trials"));
        assert_eq!(report.to_json()["status"], "insufficient trials");
    }

    #[test]
    fn report_is_reproducible() {
        let grid = default_grid(1000);
        let a = variance_validation_report(&grid[2..4], 120, 9).unwrap();
        let b = variance_validation_report(&grid[2..4], 120, 9).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.rows.len(), 4);
        assert!(a.to_csv().unwrap().starts_with("grid_point,sigma2_theory,sigma2_empirical,ratio,pass\n"));
    }
}
