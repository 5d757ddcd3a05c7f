use std::collections::BTreeMap;
use std::process::{Command, Output};
use std::str::FromStr;

use cvkey::job::{self, JobSpec};
use proptest::prelude::*;

fn cvkey(args: &[&str]) -> Output {
    cvkey_env(args, &[])
}

fn cvkey_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cvkey"));
    cmd.args(args).env_remove("CVKEY_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn cvkey")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).expect("valid json")
}

#[test]
fn pure_loss_reverse_reconciliation_gives_half_a_bit() {
    let o = cvkey(&[
        "rate", "--channel", "att:tau=0.5,xi=0", "--det", "hom", "--dir", "rr", "--mu", "1e8", "--zeta", "1",
        "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let row = &v.as_array().unwrap()[0];
    assert_eq!(row["variant"], "hom_rr");
    let r = row["rate"].as_f64().unwrap();
    assert!((r - 0.5).abs() < 1e-6, "rate {r}");
}

#[test]
fn unit_transmission_attenuator_is_a_domain_error() {
    let o = cvkey(&["rate", "--channel", "att:tau=1.0,xi=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tau must be in (0,1)"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["rate", "--channel", "att:tau=0.5", "--bogus", "1"][..],
        &["rate"][..],
        &["rate", "--channel", "att:tau=0.5", "--det", "sideways"][..],
        &["rate", "--channel", "nope:tau=0.5"][..],
        &["frobnicate"][..],
        &["sweep", "--channel", "att:tau=0.5", "--var", "L_db", "--from", "3", "--to", "1", "--steps", "4"][..],
        &["composable", "--channel", "att:tau=0.5", "--aep-log-base", "10"][..],
    ] {
        let o = cvkey(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn closed_form_matches_engine_for_classical_noise() {
    let base = ["rate", "--channel", "b2:theta=0.1", "--det", "het", "--dir", "dr", "--format", "json"];
    let closed = cvkey(&[&base[..], &["--closed-form"]].concat());
    let engine = cvkey(&base);
    assert_eq!(closed.status.code(), Some(0), "{}", stderr(&closed));
    let a = json(&closed)[0]["rate"].as_f64().unwrap();
    let b = json(&engine)[0]["rate"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-5 * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.cfg");
    std::fs::write(&cfg, "# pure loss\nchannel = att:tau=0.5,xi=0\nmu = 1e4\ndet = hom\ndir = rr\nformat = json\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = json(&cvkey(&["rate", "--config", cfg]));
    let overridden = json(&cvkey(&["rate", "--config", cfg, "--mu", "1e8"]));
    let direct = json(&cvkey(&[
        "rate", "--channel", "att:tau=0.5,xi=0", "--mu", "1e8", "--det", "hom", "--dir", "rr", "--format", "json",
    ]));
    assert_eq!(overridden, direct);
    assert_ne!(from_file, overridden);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "sweep", "--channel", "amp:tau=1.1,xi=0.01", "--var", "xi", "--from", "0", "--to", "0.05", "--steps", "6",
    ];
    let a = cvkey(&args);
    let b = cvkey_env(&args, &[("CVKEY_THREADS", "1")]);
    let c = cvkey_env(&args, &[("CVKEY_THREADS", "3")]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = cvkey_env(&["rate", "--channel", "b1:"], &[("CVKEY_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CVKEY_THREADS"));
}

#[test]
fn json_numbers_carry_twelve_significant_digits() {
    let o = cvkey(&["rate", "--channel", "att:tau=0.3,xi=0.01", "--det", "het", "--dir", "rr", "--format", "json"]);
    let text = stdout(&o);
    let rate = json(&o)[0]["rate"].as_f64().unwrap();
    let shown = format!("{:.11e}", rate);
    let rounded: f64 = shown.parse().unwrap();
    assert_eq!(rate, rounded);
    let key = "\"rate\":";
    let at = text.find(key).unwrap() + key.len();
    let literal: String = text[at..].chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    let digits = literal.trim_start_matches(['0', '.']).replace('.', "");
    assert!(digits.len() <= 12, "{literal}");
}

#[test]
fn csv_starts_with_job_line_that_reproduces_the_run() {
    let o = cvkey(&["sweep", "--channel", "att:tau=0.5,xi=0.01", "--var", "L_db", "--from", "1", "--to", "9", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let job_line = lines.next().unwrap();
    let spec = job_line.strip_prefix("# job: ").expect("job line");
    assert_eq!(lines.next().unwrap(), "L_db,tau,hom_dr,hom_rr,het_dr,het_rr");
    assert_eq!(lines.count(), 5);

    let parsed = JobSpec::from_str(spec).unwrap();
    let mut args = vec![parsed.command.name().to_string()];
    for (k, v) in parsed.to_pairs() {
        if job::find_key(k).unwrap().flag {
            if v == "true" {
                args.push(format!("--{k}"));
            }
        } else {
            args.push(format!("--{k}"));
            args.push(v);
        }
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(cvkey(&args).stdout, o.stdout);
}

#[test]
fn output_file_receives_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rate.json");
    let o = cvkey(&["rate", "--channel", "b1:", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn threshold_without_a_root_is_null() {
    let o = cvkey(&["threshold", "--channel", "att:tau=0.5,xi=0", "--solve", "tau", "--det", "hom", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let dr = v.as_array().unwrap().iter().find(|r| r["variant"] == "hom_dr").unwrap();
    let rr = v.as_array().unwrap().iter().find(|r| r["variant"] == "hom_rr").unwrap();
    assert!((dr["threshold"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!(rr["threshold"].is_null());
}

#[test]
fn composable_rate_is_below_the_asymptotic_one() {
    let comp = json(&cvkey(&[
        "composable", "--channel", "att:tau=0.8,xi=0.01", "--det", "het", "--dir", "rr", "--format", "json",
    ]));
    let c = comp[0]["rate"].as_f64().unwrap();
    // asymptotic rate at the same modulation and efficiency
    let mu = (comp[0]["va"].as_f64().unwrap() + 1.0).to_string();
    let asym = json(&cvkey(&[
        "rate", "--channel", "att:tau=0.8,xi=0.01", "--det", "het", "--dir", "rr", "--zeta", "0.9", "--mu", &mu,
        "--format", "json",
    ]));
    let a = asym[0]["rate"].as_f64().unwrap();
    assert!(c > 0.0 && c < a, "composable {c}, asymptotic {a}");
}

#[test]
fn short_monte_carlo_run_reports_insufficient_trials() {
    let o = cvkey(&["mc-validate", "--trials", "10", "--m", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(text.starts_with("# job: mc-validate"));
    assert!(text.lines().any(|l| l.starts_with("# insufficient trials")));
}

fn arb_pairs() -> impl Strategy<Value = BTreeMap<String, String>> {
    (
        prop_oneof![Just("att:tau=0.4,xi=0.02"), Just("amp:tau=1.5,xi=0"), Just("b2:theta=0.3"), Just("b1:omega=2")],
        prop_oneof![Just("hom"), Just("het"), Just("both")],
        prop_oneof![Just("dr"), Just("rr"), Just("both")],
        1.5f64..1e9,
        0.5f64..=1.0,
        prop_oneof![Just("csv"), Just("json")],
        any::<u64>(),
    )
        .prop_map(|(ch, det, dir, mu, zeta, fmt, seed)| {
            [
                ("channel", ch.to_string()),
                ("det", det.to_string()),
                ("dir", dir.to_string()),
                ("mu", mu.to_string()),
                ("zeta", zeta.to_string()),
                ("format", fmt.to_string()),
                ("seed", seed.to_string()),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
        })
}

proptest! {
    #[test]
    fn job_text_round_trips(pairs in arb_pairs()) {
        let spec = JobSpec::from_pairs(job::Command::Rate, &pairs).unwrap();
        let text = spec.to_string();
        let back = JobSpec::from_str(&text).unwrap();
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn config_text_never_panics(text in "[ -~\n]{0,200}") {
        let _ = job::parse_config(&text);
    }
}

fn seeds(target: &str) -> Vec<String> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    std::fs::read_dir(dir).unwrap().map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap()).collect()
}

#[test]
fn fuzz_seeds_are_valid_inputs() {
    for text in seeds("job_spec") {
        let job = JobSpec::from_str(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(JobSpec::from_str(&job.to_string()).unwrap().to_string(), job.to_string());
    }
    for text in seeds("config_pairs") {
        assert!(!job::parse_config(&text).unwrap().is_empty(), "{text}");
    }
}
