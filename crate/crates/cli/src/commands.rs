use rayon::prelude::*;

use cvkey_core::closed_form::{b1_rate, c_class_rate, classical_noise_rate};
use cvkey_core::composable::{composable_rate, optimize, ComposableResult};
use cvkey_core::engine::{security_threshold, Family, RateSource, ThresholdProblem, Unknown};
use cvkey_core::montecarlo::{default_grid, variance_validation_report};
use cvkey_core::{asymptotic_rate, ChannelParams, ChannelSpec, EnvNoise, ProtocolConfig, Variant};

use crate::job::{Command, Format, JobSpec, Quantity, Solve, SweepVar};
use crate::output::{Cell, Table};
use crate::CliError;

/// Rendered output and whether a Monte-Carlo check failed.
pub struct Outcome {
    pub text: String,
    pub mc_failed: bool,
}

pub fn execute(job: &JobSpec) -> Result<Outcome, CliError> {
    if job.command == Command::McValidate {
        return mc_validate(job);
    }
    let table = match job.command {
        Command::Rate => rate_table(job)?,
        Command::Threshold => threshold_table(job)?,
        Command::Composable => composable_table(job)?,
        Command::Sweep => sweep_table(job)?,
        Command::McValidate => unreachable!(),
    };
    let text = match job.format {
        Format::Csv => table.to_csv(job)?,
        Format::Json => format!("{}\n", table.to_json()),
    };
    Ok(Outcome { text, mc_failed: false })
}

fn channel(job: &JobSpec) -> &ChannelSpec {
    job.channel.as_ref().expect("validated: command needs a channel")
}

/// `(I, χ, R)`; closed forms report only `R`.
fn point_rate(spec: &ChannelSpec, v: Variant, mu: f64, zeta: f64, closed: bool) -> Result<(Option<(f64, f64)>, f64), CliError> {
    if closed {
        if zeta != 1.0 {
            return Err(CliError::Usage("closed forms assume zeta = 1".into()));
        }
        let r = match *spec {
            ChannelSpec::ClassicalNoise { theta } => classical_noise_rate(v, theta)?,
            ChannelSpec::B1 { omega } if omega == 1.0 => b1_rate(v, mu)?,
            ChannelSpec::Attenuation { tau, .. } | ChannelSpec::Amplifier { tau, .. } => {
                c_class_rate(v, tau, spec.to_form()?.omega())?
            }
            _ => {
                return Err(CliError::Domain(format!(
                    "no closed form for '{spec}' (available: att, amp, b2, b1 with omega=1)"
                )))
            }
        };
        return Ok((None, r));
    }
    let b = asymptotic_rate(&spec.to_form()?, &ProtocolConfig::new(v, mu, zeta)?)?;
    Ok((Some((b.mutual_info, b.holevo)), b.rate))
}

fn rate_table(job: &JobSpec) -> Result<Table, CliError> {
    let spec = channel(job);
    let mut t = if job.closed_form {
        Table::new(["channel", "variant", "rate"])
    } else {
        Table::new(["channel", "variant", "mutual_info", "holevo", "rate"])
    };
    for v in job.variants() {
        let (parts, r) = point_rate(spec, v, job.mu, job.zeta, job.closed_form)?;
        let mut row = vec![Cell::Text(spec.to_string()), Cell::Text(v.label().into())];
        if let Some((i, chi)) = parts {
            row.extend([Cell::Num(i), Cell::Num(chi)]);
        }
        row.push(Cell::Num(r));
        t.push(row);
    }
    Ok(t)
}

fn threshold_problem(job: &JobSpec, spec: &ChannelSpec, v: Variant) -> Result<ThresholdProblem, CliError> {
    let (family, tau, noise) = match *spec {
        ChannelSpec::Attenuation { tau, noise } => (Family::Attenuation, tau, Some(noise)),
        ChannelSpec::Amplifier { tau, noise } => (Family::Amplifier, tau, Some(noise)),
        ChannelSpec::ClassicalNoise { .. } => (Family::ClassicalNoise, 1.0, None),
        _ => return Err(CliError::Domain(format!("thresholds cover att, amp and b2 channels, not '{spec}'"))),
    };
    let (unknown, fixed) = match job.solve {
        Solve::Xi => (Unknown::Xi, tau),
        Solve::Theta => (Unknown::Theta, 0.0),
        Solve::Tau => match noise {
            Some(EnvNoise::Xi(xi)) => (Unknown::Tau, xi),
            Some(EnvNoise::Omega(_)) => {
                return Err(CliError::Usage("solving for tau needs the noise given as xi= in --channel".into()))
            }
            None => (Unknown::Tau, 0.0),
        },
    };
    let mut p = ThresholdProblem::new(family, unknown, fixed, v);
    p.mu = job.mu;
    p.zeta = job.zeta;
    p.source = if job.closed_form { RateSource::ClosedForm } else { RateSource::Engine };
    if job.interval != (None, None) {
        let (lo, hi) = p.search_interval()?;
        p.interval = Some((job.interval.0.unwrap_or(lo), job.interval.1.unwrap_or(hi)));
    }
    Ok(p)
}

fn threshold_table(job: &JobSpec) -> Result<Table, CliError> {
    let spec = channel(job);
    let mut t = Table::new(["channel", "variant", "solve", "threshold"]);
    for v in job.variants() {
        let root = security_threshold(&threshold_problem(job, spec, v)?)?;
        t.push(vec![
            Cell::Text(spec.to_string()),
            Cell::Text(v.label().into()),
            Cell::Text(solve_name(job.solve).into()),
            root.map_or(Cell::Missing, Cell::Num),
        ]);
    }
    Ok(t)
}

fn solve_name(s: Solve) -> &'static str {
    match s {
        Solve::Tau => "tau",
        Solve::Xi => "xi",
        Solve::Theta => "theta",
    }
}

fn composable_point(job: &JobSpec, spec: &ChannelSpec, n_total: u64, v: Variant) -> Result<ComposableResult, CliError> {
    let params = ChannelParams::from_form(&spec.to_form()?)?;
    let cfg = cvkey_core::ComposableConfig { n_total, ..job.composable };
    Ok(match job.fixed_point {
        Some((r, va)) => composable_rate(&params, &cfg, v, r, va)?,
        None => optimize(&params, &cfg, v)?,
    })
}

fn composable_table(job: &JobSpec) -> Result<Table, CliError> {
    let spec = channel(job);
    let mut t = Table::new(["channel", "variant", "rate", "r", "n", "m", "va", "r_m", "pe_failed", "eps_total"]);
    let results: Vec<(Variant, ComposableResult)> = job
        .variants()
        .into_par_iter()
        .map(|v| Ok((v, composable_point(job, spec, job.composable.n_total, v)?)))
        .collect::<Result<_, CliError>>()?;
    for (v, res) in results {
        t.push(vec![
            Cell::Text(spec.to_string()),
            Cell::Text(v.label().into()),
            Cell::Num(res.rate),
            Cell::Num(res.r),
            Cell::Int(res.n),
            Cell::Int(res.m),
            Cell::Num(res.va_opt),
            Cell::Num(res.r_m),
            Cell::Bool(res.pe_failed),
            Cell::Num(res.eps_total),
        ]);
    }
    Ok(t)
}

/// The channel with the swept variable set to `x`; `L_db` maps to
/// `τ = 10^(−L/10)` for attenuation and `τ = 10^(L/10)` for amplification.
fn swept_channel(spec: &ChannelSpec, var: SweepVar, x: f64) -> Result<ChannelSpec, CliError> {
    let bad = || CliError::Domain(format!("cannot sweep {var:?} on '{spec}'"));
    Ok(match (var, *spec) {
        (SweepVar::LDb, ChannelSpec::Attenuation { noise, .. }) => {
            ChannelSpec::Attenuation { tau: 10f64.powf(-x / 10.0), noise }
        }
        (SweepVar::LDb, ChannelSpec::Amplifier { noise, .. }) => ChannelSpec::Amplifier { tau: 10f64.powf(x / 10.0), noise },
        (SweepVar::Tau, ChannelSpec::Attenuation { noise, .. }) => ChannelSpec::Attenuation { tau: x, noise },
        (SweepVar::Tau, ChannelSpec::Amplifier { noise, .. }) => ChannelSpec::Amplifier { tau: x, noise },
        (SweepVar::Tau, ChannelSpec::D { omega, .. }) => ChannelSpec::D { tau: x, omega },
        (SweepVar::Xi, ChannelSpec::Attenuation { tau, .. }) => ChannelSpec::Attenuation { tau, noise: EnvNoise::Xi(x) },
        (SweepVar::Xi, ChannelSpec::Amplifier { tau, .. }) => ChannelSpec::Amplifier { tau, noise: EnvNoise::Xi(x) },
        (SweepVar::Theta, ChannelSpec::ClassicalNoise { .. }) => ChannelSpec::ClassicalNoise { theta: x },
        (SweepVar::Mu | SweepVar::N, s) => s,
        _ => return Err(bad()),
    })
}

fn sweep_table(job: &JobSpec) -> Result<Table, CliError> {
    let sweep = job.sweep.expect("validated: sweep has a grid");
    let spec = channel(job);
    let var_name = match sweep.var {
        SweepVar::LDb => "L_db",
        SweepVar::Tau => "tau",
        SweepVar::Xi => "xi",
        SweepVar::Theta => "theta",
        SweepVar::Mu => "mu",
        SweepVar::N => "N",
    };
    match (sweep.var, sweep.quantity) {
        (SweepVar::N, Quantity::Rate | Quantity::Threshold) => {
            return Err(CliError::Usage("--var N needs --quantity composable".into()))
        }
        (SweepVar::Mu, Quantity::Composable) => {
            return Err(CliError::Usage("composable rates optimize V_A; sweep mu with --quantity rate".into()))
        }
        (SweepVar::Tau | SweepVar::LDb, Quantity::Threshold) if job.solve == Solve::Tau => {
            return Err(CliError::Usage("cannot solve for the swept variable".into()))
        }
        (SweepVar::Xi, Quantity::Threshold) if job.solve == Solve::Xi => {
            return Err(CliError::Usage("cannot solve for the swept variable".into()))
        }
        (SweepVar::Theta, Quantity::Threshold) if job.solve == Solve::Theta => {
            return Err(CliError::Usage("cannot solve for the swept variable".into()))
        }
        _ => {}
    }
    let variants = job.variants();
    let mut columns = vec![var_name.to_string()];
    if sweep.var == SweepVar::LDb {
        columns.push("tau".into());
    }
    columns.extend(variants.iter().map(|v| v.label().to_string()));
    let mut t = Table::new(columns);

    let rows: Vec<Vec<Cell>> = sweep
        .grid()
        .into_par_iter()
        .map(|x| {
            let point = swept_channel(spec, sweep.var, x)?;
            let mu = if sweep.var == SweepVar::Mu { x } else { job.mu };
            let mut row = vec![Cell::Num(x)];
            if sweep.var == SweepVar::LDb {
                row.push(Cell::Num(point.to_form()?.tau()));
            }
            for &v in &variants {
                let value = match sweep.quantity {
                    Quantity::Rate => Some(point_rate(&point, v, mu, job.zeta, job.closed_form)?.1),
                    Quantity::Threshold => {
                        let mut p = threshold_problem(job, &point, v)?;
                        p.mu = mu;
                        security_threshold(&p)?
                    }
                    Quantity::Composable => {
                        let n_total = if sweep.var == SweepVar::N { count(x)? } else { job.composable.n_total };
                        Some(composable_point(job, &point, n_total, v)?.rate)
                    }
                };
                row.push(value.map_or(Cell::Missing, Cell::Num));
            }
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    for row in rows {
        t.push(row);
    }
    Ok(t)
}

fn count(x: f64) -> Result<u64, CliError> {
    if x >= 0.0 && x < 1.8e19 {
        Ok(x.round() as u64)
    } else {
        Err(CliError::Domain(format!("N = {x} is out of range")))
    }
}

fn mc_validate(job: &JobSpec) -> Result<Outcome, CliError> {
    let report = variance_validation_report(&default_grid(job.m), job.trials, job.seed)?;
    let text = match job.format {
        Format::Csv => format!("# job: {job}\n{}", report.to_csv()?),
        Format::Json => format!("{}\n", report.to_json()),
    };
    Ok(Outcome { text, mc_failed: !report.all_pass() })
}
