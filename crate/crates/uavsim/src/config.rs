//! Flat `key = value` scenario files.
//!
//! ```text
//! # 500 users, four UAVs
//! e = 500
//! u = 4
//! ```
//!
//! Keys are case-insensitive. Unknown and repeated keys are rejected.
//! Environment variables `UAVSIM_<KEY>` override the file.

use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;
use uavsim_core::config::{CountRange, ScenarioConfig, ScriptedFailure};
use uavsim_core::topology::Area;

pub const ENV_PREFIX: &str = "UAVSIM_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("key `{key}` given more than once")]
    Duplicate { key: String },
    #[error("key `{key}`: cannot use `{value}`: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Published scenario parameter.
    Scenario,
    /// Engine knob.
    Engine,
}

impl Source {
    fn label(self) -> &'static str {
        match self {
            Source::Scenario => "scenario",
            Source::Engine => "engine",
        }
    }
}

type Getter = fn(&ScenarioConfig) -> String;
type Setter = fn(&mut ScenarioConfig, &str) -> Result<(), String>;

pub struct Key {
    pub name: &'static str,
    pub source: Source,
    pub help: &'static str,
    get: Getter,
    set: Setter,
}

fn num(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| "not a number".to_string())?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("not finite".into())
    }
}

fn count(v: &str) -> Result<u32, String> {
    v.parse().map_err(|_| "not a non-negative integer".into())
}

fn range(v: &str) -> Result<CountRange, String> {
    match v.split_once('-') {
        Some((lo, hi)) => Ok(CountRange::new(count(lo.trim())?, count(hi.trim())?)),
        None => {
            let n = count(v)?;
            Ok(CountRange::new(n, n))
        }
    }
}

fn area(v: &str) -> Result<Area, String> {
    let (w, h) = v.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    Ok(Area { width: num(w.trim())?, height: num(h.trim())? })
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn counts(v: &str) -> Result<Vec<u32>, String> {
    v.split(',').map(|s| count(s.trim())).collect()
}

fn failures(v: &str) -> Result<Vec<ScriptedFailure>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            let (u, t) = item.trim().split_once('@').ok_or("expected UAV@TIME")?;
            let u = u.trim().trim_start_matches('u');
            Ok(ScriptedFailure { uav: count(u)?, at: num(t.trim())? })
        })
        .collect()
}

fn show_range(r: CountRange) -> String {
    format!("{}-{}", r.lo, r.hi)
}

fn show_list(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn show_failures(v: &[ScriptedFailure]) -> String {
    v.iter().map(|f| format!("{}@{}", f.uav, f.at)).collect::<Vec<_>>().join(",")
}

macro_rules! key {
    ($name:literal, $src:ident, $help:literal, |$c:ident| $get:expr, |$m:ident, $v:ident| $set:expr) => {
        Key {
            name: $name,
            source: Source::$src,
            help: $help,
            get: |$c| $get,
            set: |$m, $v| {
                $set;
                Ok(())
            },
        }
    };
}

pub static KEYS: &[Key] = &[
    key!("a", Scenario, "simulation area, m", |c| format!("{}x{}", c.area_a.width, c.area_a.height), |c, v| c.area_a = area(v)?),
    key!("m", Scenario, "MBS per km^2", |c| c.mbs_density_m.to_string(), |c, v| c.mbs_density_m = num(v)?),
    key!("k", Scenario, "demand zones per MBS", |c| c.zones_k.to_string(), |c, v| c.zones_k = count(v)?),
    key!("u", Scenario, "UAVs per MBS", |c| show_range(c.uavs_u), |c, v| c.uavs_u = range(v)?),
    key!("g", Scenario, "UAV radio range, m", |c| c.radio_range_g.to_string(), |c, v| c.radio_range_g = num(v)?),
    key!("mu", Scenario, "offered traffic per UE, kbit/s", |c| c.offered_mu_kbps.to_string(), |c, v| c.offered_mu_kbps = num(v)?),
    key!("alpha", Scenario, "path loss exponent", |c| c.pathloss_alpha.to_string(), |c, v| c.pathloss_alpha = num(v)?),
    key!("beta", Scenario, "system bandwidth, MHz", |c| c.bandwidth_beta_mhz.to_string(), |c, v| c.bandwidth_beta_mhz = num(v)?),
    key!("e", Scenario, "active UEs", |c| show_range(c.ues_e), |c, v| c.ues_e = range(v)?),
    key!("max_cm", Scenario, "MBS links per UAV", |c| c.max_cm.to_string(), |c, v| c.max_cm = count(v)?),
    key!("max_cu", Scenario, "UAV links per UAV", |c| c.max_cu.to_string(), |c, v| c.max_cu = count(v)?),
    key!("n", Scenario, "orthogonal bands", |c| c.bands_n.to_string(), |c, v| c.bands_n = count(v)?),
    key!("s", Scenario, "service requests per UE per second", |c| c.service_s.to_string(), |c, v| c.service_s = num(v)?),
    key!("w", Scenario, "transmission constant, dB", |c| c.antenna_w_db.to_string(), |c, v| c.antenna_w_db = num(v)?),
    key!("q", Scenario, "transmission power, dBm", |c| c.tx_power_q_dbm.to_string(), |c, v| c.tx_power_q_dbm = num(v)?),
    key!("seeds", Engine, "runs per axis value", |c| c.seeds.to_string(), |c, v| c.seeds = count(v)?),
    key!("horizon", Engine, "simulated seconds per run", |c| c.horizon.to_string(), |c, v| c.horizon = num(v)?),
    key!("epoch", Engine, "re-evaluation interval, s", |c| c.epoch.to_string(), |c, v| c.epoch = num(v)?),
    key!("gamma1", Engine, "weight of inverse service cost", |c| c.gammas.0.to_string(), |c, v| c.gammas.0 = num(v)?),
    key!("gamma2", Engine, "weight of UAV utility", |c| c.gammas.1.to_string(), |c, v| c.gammas.1 = num(v)?),
    key!("gamma3", Engine, "weight of link utilization", |c| c.gammas.2.to_string(), |c, v| c.gammas.2 = num(v)?),
    key!("v0", Engine, "noise power, dBm", |c| c.v0_dbm.to_string(), |c, v| c.v0_dbm = num(v)?),
    key!("tu", Engine, "user slots per UAV", |c| c.tu.to_string(), |c, v| c.tu = count(v)?),
    key!("rc", Engine, "resource units per UAV", |c| c.rc.to_string(), |c, v| c.rc = count(v)?),
    key!("re", Engine, "resource units per served UE", |c| c.re.to_string(), |c, v| c.re = count(v)?),
    key!("standby", Engine, "standby UAVs", |c| c.standby.to_string(), |c, v| c.standby = count(v)?),
    key!("hello", Engine, "hello interval, s", |c| c.hello.to_string(), |c, v| c.hello = num(v)?),
    key!("missed_hellos", Engine, "silent hellos before a UAV is declared failed", |c| c.missed_hellos.to_string(), |c, v| c.missed_hellos = count(v)?),
    key!("route_expiry", Engine, "route entry lifetime, hello intervals", |c| c.route_expiry.to_string(), |c, v| c.route_expiry = count(v)?),
    key!("launch_delay", Engine, "standby launch delay, s", |c| c.launch_delay.to_string(), |c, v| c.launch_delay = num(v)?),
    key!("kappa", Engine, "learning rate step", |c| c.kappa.to_string(), |c, v| c.kappa = num(v)?),
    key!("reset_threshold", Engine, "error rate that forces a reallocation", |c| c.reset_threshold.to_string(), |c, v| c.reset_threshold = num(v)?),
    key!("cell_radius", Engine, "MBS cell radius, m", |c| c.cell_radius.to_string(), |c, v| c.cell_radius = num(v)?),
    key!("mbs_ue_capacity", Engine, "UEs the MBS serves directly", |c| c.mbs_ue_capacity.to_string(), |c, v| c.mbs_ue_capacity = count(v)?),
    key!("queue_capacity", Engine, "messages per access queue", |c| c.queue_capacity.to_string(), |c, v| c.queue_capacity = count(v)?),
    key!("processing_cost", Engine, "seconds per allocation iteration or route candidate", |c| c.processing_cost.to_string(), |c, v| c.processing_cost = num(v)?),
    key!("c", Engine, "intensity constant", |c| c.intensity_c.to_string(), |c, v| c.intensity_c = num(v)?),
    key!("propagation", Engine, "count propagation delay", |c| c.propagation.to_string(), |c, v| c.propagation = flag(v)?),
    key!("sweep_e", Engine, "UE counts of the UE sweep", |c| show_list(&c.sweep_e), |c, v| c.sweep_e = counts(v)?),
    key!("fail", Engine, "scripted failures, UAV@TIME list", |c| show_failures(&c.failures), |c, v| c.failures = failures(v)?),
];

fn lookup(key: &str) -> Option<&'static Key> {
    let lower = key.to_ascii_lowercase();
    KEYS.iter().find(|k| k.name == lower)
}

fn set(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    let spec = lookup(key).ok_or_else(|| ConfigError::UnknownKey { key: key.to_string() })?;
    (spec.set)(cfg, value).map_err(|reason| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
        reason,
    })
}

fn validate(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    cfg.validate().map_err(|e| match e {
        uavsim_core::Error::InvalidParam { name, reason } => ConfigError::Invalid { key: name.to_string(), reason },
        other => ConfigError::Invalid { key: "config".into(), reason: other.to_string() },
    })
}

/// Applies the assignments in `text` on top of the defaults, without validating.
fn apply_text(cfg: &mut ScenarioConfig, text: &str) -> Result<(), ConfigError> {
    let mut seen = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        let lower = key.to_ascii_lowercase();
        if seen.contains(&lower) {
            return Err(ConfigError::Duplicate { key: key.to_string() });
        }
        seen.push(lower);
        set(cfg, key, value)?;
    }
    Ok(())
}

/// Parses a scenario from text and validates it.
pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_with_env(text, std::iter::empty())
}

/// Parses `text`, then applies `UAVSIM_*` pairs from `env`, then validates.
pub fn parse_with_env<I>(text: &str, env: I) -> Result<ScenarioConfig, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut cfg = ScenarioConfig::default();
    apply_text(&mut cfg, text)?;
    let mut vars: Vec<(String, String)> =
        env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (k, v) in vars {
        set(&mut cfg, &k[ENV_PREFIX.len()..], v.trim())?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Reads `path` (or nothing) and applies the process environment.
pub fn load(path: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?,
        None => String::new(),
    };
    parse_with_env(&text, std::env::vars())
}

/// Every key with its resolved value. Loading the output yields the same config.
pub fn echo(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    for k in KEYS {
        let line = format!("{} = {}", k.name, (k.get)(cfg));
        let _ = writeln!(out, "{line:<32} # {}: {}", k.source.label(), k.help);
    }
    out
}
