//! Resolved job descriptions.
//!
//! Every option has one canonical key used alike on the command line
//! (`--key value`), in config files (`key = value`) and in the textual form
//! of a [`JobSpec`] (`command key=value ...`), which is what the `# job:`
//! line of CSV output records.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvkey_core::composable::{ComposableConfig, LogBase};
use cvkey_core::{ChannelSpec, Detection, Direction, Variant};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Rate,
    Threshold,
    Composable,
    Sweep,
    McValidate,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::Rate, Command::Threshold, Command::Composable, Command::Sweep, Command::McValidate];

    pub fn name(self) -> &'static str {
        match self {
            Command::Rate => "rate",
            Command::Threshold => "threshold",
            Command::Composable => "composable",
            Command::Sweep => "sweep",
            Command::McValidate => "mc-validate",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Rate => "Asymptotic key rate (I, chi, R) of one channel",
            Command::Threshold => "Security threshold: root of the rate in tau, xi or theta",
            Command::Composable => "Finite-size composable key rate, optimized over r and V_A",
            Command::Sweep => "Rates, thresholds or composable rates over a parameter grid",
            Command::McValidate => "Monte-Carlo check of the estimator variances",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown command '{s}'")))
    }
}

const RATE: u8 = 1;
const THRESHOLD: u8 = 2;
const COMPOSABLE: u8 = 4;
const SWEEP: u8 = 8;
const MC: u8 = 16;
const ALL: u8 = RATE | THRESHOLD | COMPOSABLE | SWEEP | MC;

fn mask(c: Command) -> u8 {
    match c {
        Command::Rate => RATE,
        Command::Threshold => THRESHOLD,
        Command::Composable => COMPOSABLE,
        Command::Sweep => SWEEP,
        Command::McValidate => MC,
    }
}

/// An option key, the commands accepting it and its help line.
pub struct Key {
    pub name: &'static str,
    commands: u8,
    pub flag: bool,
    pub help: &'static str,
}

impl Key {
    pub fn applies_to(&self, c: Command) -> bool {
        self.commands & mask(c) != 0
    }
}

const fn key(name: &'static str, commands: u8, help: &'static str) -> Key {
    Key { name, commands, flag: false, help }
}

pub const KEYS: &[Key] = &[
    key("channel", RATE | THRESHOLD | COMPOSABLE | SWEEP, "channel descriptor, e.g. att:tau=0.6,xi=0.01, amp:tau=2,xi=0.05, b2:theta=0.1, b1:"),
    key("det", RATE | THRESHOLD | COMPOSABLE | SWEEP, "detection: hom, het or both [both]"),
    key("dir", RATE | THRESHOLD | COMPOSABLE | SWEEP, "reconciliation: dr, rr or both [both]"),
    key("mu", RATE | THRESHOLD | SWEEP, "Alice's ensemble variance mu = V_A + 1 [1e8]"),
    key("zeta", RATE | THRESHOLD | COMPOSABLE | SWEEP, "reconciliation efficiency [1; 0.9 for composable rates]"),
    Key { name: "closed-form", commands: RATE | THRESHOLD | SWEEP, flag: true, help: "use the asymptotic closed forms" },
    key("solve", THRESHOLD | SWEEP, "threshold unknown: tau, xi or theta [xi; theta for b2]"),
    key("lo", THRESHOLD | SWEEP, "lower end of the threshold search interval"),
    key("hi", THRESHOLD | SWEEP, "upper end of the threshold search interval"),
    key("n", COMPOSABLE | SWEEP, "total number of signals N [1e6]"),
    key("p-ec", COMPOSABLE | SWEEP, "error-correction success probability [0.8]"),
    key("d", COMPOSABLE | SWEEP, "discretization bins [32]"),
    key("eps-s", COMPOSABLE | SWEEP, "smoothing parameter [1e-20]"),
    key("eps-h", COMPOSABLE | SWEEP, "hashing parameter [1e-20]"),
    key("eps-pe", COMPOSABLE | SWEEP, "parameter-estimation error [1e-10]"),
    key("eps-cor", COMPOSABLE | SWEEP, "correctness parameter [1e-20]"),
    key("aep-log-base", COMPOSABLE | SWEEP, "base of the inner AEP logarithm: 2 or e [e]"),
    key("r", COMPOSABLE | SWEEP, "fixed split r = n p_EC / N (skips optimization; needs va)"),
    key("va", COMPOSABLE | SWEEP, "fixed modulation variance V_A (skips optimization; needs r)"),
    key("var", SWEEP, "swept variable: L_db, tau, xi, theta, mu or N"),
    key("from", SWEEP, "first grid value"),
    key("to", SWEEP, "last grid value"),
    key("steps", SWEEP, "number of grid points"),
    key("quantity", SWEEP, "swept quantity: rate, threshold or composable [rate]"),
    key("trials", MC, "trials per grid point [2000]"),
    key("m", MC, "signals per parameter-estimation block [10000]"),
    key("seed", ALL, "RNG seed, recorded in the output [0]"),
    key("format", ALL, "output format: csv or json [csv]"),
    key("out", ALL, "output file [stdout]"),
];

pub fn find_key(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solve {
    Tau,
    Xi,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    LDb,
    Tau,
    Xi,
    Theta,
    Mu,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Rate,
    Threshold,
    Composable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub quantity: Quantity,
}

impl Sweep {
    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.from + (self.to - self.from) * i as f64 / last)
            .collect()
    }
}

/// Which detections or directions a job covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pick<T> {
    One(T),
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub command: Command,
    pub channel: Option<ChannelSpec>,
    pub det: Pick<Detection>,
    pub dir: Pick<Direction>,
    pub mu: f64,
    pub zeta: f64,
    pub closed_form: bool,
    pub solve: Solve,
    pub interval: (Option<f64>, Option<f64>),
    pub composable: ComposableConfig,
    pub fixed_point: Option<(f64, f64)>,
    pub sweep: Option<Sweep>,
    pub trials: u32,
    pub m: usize,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl JobSpec {
    /// Builds and validates a job from `key → value` pairs (flags carry `"true"`).
    pub fn from_pairs(command: Command, pairs: &BTreeMap<String, String>) -> Result<Self, CliError> {
        for k in pairs.keys() {
            match find_key(k) {
                Some(key) if key.applies_to(command) => {}
                Some(_) => return Err(usage(format!("option '{k}' does not apply to '{}'", command.name()))),
                None => return Err(usage(format!("unknown option '{k}'"))),
            }
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let num = |k: &str| get(k).map(|v| parse_f64(k, v)).transpose();

        let channel = get("channel")
            .map(|s| s.parse::<ChannelSpec>().map_err(|e| usage(format!("--channel: {e}"))))
            .transpose()?;
        let needs_channel = command != Command::McValidate;
        if needs_channel && channel.is_none() {
            return Err(usage(format!("'{}' needs --channel", command.name())));
        }

        let quantity = match get("quantity") {
            None | Some("rate") => Quantity::Rate,
            Some("threshold") => Quantity::Threshold,
            Some("composable") => Quantity::Composable,
            Some(q) => return Err(usage(format!("--quantity must be rate, threshold or composable, got '{q}'"))),
        };
        let composable_rates = command == Command::Composable || (command == Command::Sweep && quantity == Quantity::Composable);

        let mut composable = ComposableConfig::reference_defaults();
        composable.zeta = num("zeta")?.unwrap_or(if composable_rates { composable.zeta } else { 1.0 });
        if let Some(n) = get("n") {
            composable.n_total = parse_count("n", n)?;
        }
        composable.p_ec = num("p-ec")?.unwrap_or(composable.p_ec);
        if let Some(d) = get("d") {
            composable.d = u32::try_from(parse_count("d", d)?).map_err(|_| usage("--d is too large"))?;
        }
        composable.eps_s = num("eps-s")?.unwrap_or(composable.eps_s);
        composable.eps_h = num("eps-h")?.unwrap_or(composable.eps_h);
        composable.eps_pe = num("eps-pe")?.unwrap_or(composable.eps_pe);
        composable.eps_cor = num("eps-cor")?.unwrap_or(composable.eps_cor);
        if let Some(b) = get("aep-log-base") {
            composable.log_base = b.parse::<LogBase>().map_err(|e| usage(format!("--aep-log-base: {e}")))?;
        }

        let fixed_point = match (num("r")?, num("va")?) {
            (Some(r), Some(va)) => Some((r, va)),
            (None, None) => None,
            _ => return Err(usage("--r and --va must be given together")),
        };

        let sweep = if command == Command::Sweep {
            let var = match get("var") {
                Some("L_db") => SweepVar::LDb,
                Some("tau") => SweepVar::Tau,
                Some("xi") => SweepVar::Xi,
                Some("theta") => SweepVar::Theta,
                Some("mu") => SweepVar::Mu,
                Some("N") => SweepVar::N,
                Some(v) => return Err(usage(format!("--var must be L_db, tau, xi, theta, mu or N, got '{v}'"))),
                None => return Err(usage("'sweep' needs --var")),
            };
            let from = num("from")?.ok_or_else(|| usage("'sweep' needs --from"))?;
            let to = num("to")?.ok_or_else(|| usage("'sweep' needs --to"))?;
            let steps = get("steps").ok_or_else(|| usage("'sweep' needs --steps")).and_then(|s| parse_count("steps", s))?;
            if steps == 0 || from > to || (steps > 1 && from == to) {
                return Err(usage(format!("empty sweep range: from={from} to={to} steps={steps}")));
            }
            Some(Sweep { var, from, to, steps: steps as usize, quantity })
        } else {
            None
        };

        let is_b2 = matches!(channel, Some(ChannelSpec::ClassicalNoise { .. }));
        let solve = match get("solve") {
            None if is_b2 => Solve::Theta,
            None | Some("xi") => Solve::Xi,
            Some("tau") => Solve::Tau,
            Some("theta") => Solve::Theta,
            Some(s) => return Err(usage(format!("--solve must be tau, xi or theta, got '{s}'"))),
        };

        let format = match get("format") {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(f) => return Err(usage(format!("--format must be csv or json, got '{f}'"))),
        };
        let out = get("out").map(PathBuf::from);
        if let Some(p) = get("out") {
            if p.is_empty() || p.chars().any(char::is_whitespace) {
                return Err(usage("--out paths may not be empty or contain whitespace"));
            }
        }

        let closed_form = match get("closed-form") {
            None | Some("false") => false,
            Some("true") => true,
            Some(v) => return Err(usage(format!("closed-form must be true or false, got '{v}'"))),
        };

        Ok(JobSpec {
            command,
            channel,
            det: parse_pick(get("det"), "det")?,
            dir: parse_pick(get("dir"), "dir")?,
            mu: num("mu")?.unwrap_or(1e8),
            zeta: composable.zeta,
            closed_form,
            solve,
            interval: (num("lo")?, num("hi")?),
            composable,
            fixed_point,
            sweep,
            trials: get("trials")
                .map(|t| parse_count("trials", t).and_then(|t| u32::try_from(t).map_err(|_| usage("--trials is too large"))))
                .transpose()?
                .unwrap_or(2000),
            m: get("m").map(|m| parse_count("m", m)).transpose()?.unwrap_or(10_000) as usize,
            seed: get("seed").map(|s| parse_count("seed", s)).transpose()?.unwrap_or(0),
            format,
            out,
        })
    }

    /// The protocol variants this job evaluates, in a fixed order.
    pub fn variants(&self) -> Vec<Variant> {
        Variant::ALL
            .into_iter()
            .filter(|v| matches!(self.det, Pick::Both) || self.det == Pick::One(v.detection))
            .filter(|v| matches!(self.dir, Pick::Both) || self.dir == Pick::One(v.direction))
            .collect()
    }

    /// Resolved `key → value` pairs for every option the command accepts.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let c = self.command;
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: String| {
            if find_key(k).is_some_and(|key| key.applies_to(c)) {
                out.push((k, v));
            }
        };
        if let Some(ch) = &self.channel {
            put("channel", ch.to_string());
        }
        put("det", pick_str(self.det, |d| d.to_string()));
        put("dir", pick_str(self.dir, |d| d.to_string()));
        put("mu", self.mu.to_string());
        put("zeta", self.zeta.to_string());
        put("closed-form", self.closed_form.to_string());
        put("solve", match self.solve {
            Solve::Tau => "tau",
            Solve::Xi => "xi",
            Solve::Theta => "theta",
        }
        .into());
        if let Some(lo) = self.interval.0 {
            put("lo", lo.to_string());
        }
        if let Some(hi) = self.interval.1 {
            put("hi", hi.to_string());
        }
        let cc = &self.composable;
        put("n", cc.n_total.to_string());
        put("p-ec", cc.p_ec.to_string());
        put("d", cc.d.to_string());
        put("eps-s", cc.eps_s.to_string());
        put("eps-h", cc.eps_h.to_string());
        put("eps-pe", cc.eps_pe.to_string());
        put("eps-cor", cc.eps_cor.to_string());
        put("aep-log-base", cc.log_base.to_string());
        if let Some((r, va)) = self.fixed_point {
            put("r", r.to_string());
            put("va", va.to_string());
        }
        if let Some(s) = &self.sweep {
            put("var", match s.var {
                SweepVar::LDb => "L_db",
                SweepVar::Tau => "tau",
                SweepVar::Xi => "xi",
                SweepVar::Theta => "theta",
                SweepVar::Mu => "mu",
                SweepVar::N => "N",
            }
            .into());
            put("from", s.from.to_string());
            put("to", s.to.to_string());
            put("steps", s.steps.to_string());
            put("quantity", match s.quantity {
                Quantity::Rate => "rate",
                Quantity::Threshold => "threshold",
                Quantity::Composable => "composable",
            }
            .into());
        }
        put("trials", self.trials.to_string());
        put("m", self.m.to_string());
        put("seed", self.seed.to_string());
        put("format", match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
        .into());
        if let Some(p) = &self.out {
            put("out", p.display().to_string());
        }
        out
    }
}

impl fmt::Display for JobSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command.name())?;
        for (k, v) in self.to_pairs() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for JobSpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let mut tokens = s.split_whitespace();
        let command: Command = tokens.next().ok_or_else(|| usage("empty job spec"))?.parse()?;
        let mut pairs = BTreeMap::new();
        for token in tokens {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| usage(format!("expected key=value, got '{token}'")))?;
            if pairs.insert(k.to_string(), v.to_string()).is_some() {
                return Err(usage(format!("duplicate key '{k}'")));
            }
        }
        JobSpec::from_pairs(command, &pairs)
    }
}

/// Parses a config file: one `key = value` per line, `#` comments and blank
/// lines ignored. A bare `key` sets a flag.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut pairs = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (line, "true"),
        };
        let k = k.trim_start_matches("--");
        if k.is_empty() || v.is_empty() {
            return Err(usage(format!("config line {}: expected key = value", no + 1)));
        }
        if find_key(k).is_none() {
            return Err(usage(format!("config line {}: unknown key '{k}'", no + 1)));
        }
        if pairs.insert(k.to_string(), v.to_string()).is_some() {
            return Err(usage(format!("config line {}: duplicate key '{k}'", no + 1)));
        }
    }
    Ok(pairs)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(usage(format!("--{key} expects a finite number, got '{v}'"))),
    }
}

/// Non-negative integer; scientific notation such as `1e6` is accepted when exact.
fn parse_count(key: &str, v: &str) -> Result<u64, CliError> {
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(usage(format!("--{key} expects a non-negative integer, got '{v}'"))),
    }
}

fn parse_pick<T: FromStr>(v: Option<&str>, key: &str) -> Result<Pick<T>, CliError>
where
    T::Err: fmt::Display,
{
    match v {
        None | Some("both") => Ok(Pick::Both),
        Some(s) => s.parse().map(Pick::One).map_err(|e| usage(format!("--{key}: {e}"))),
    }
}

fn pick_str<T>(p: Pick<T>, f: impl Fn(T) -> String) -> String {
    match p {
        Pick::One(x) => f(x),
        Pick::Both => "both".into(),
    }
}
