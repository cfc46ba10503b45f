//! Flat key = value experiment configuration.
//!
//! A config file holds one `key = value` pair per line; `#` starts a comment
//! and blank lines are skipped.  Command-line flags set the same keys, so a
//! flag always overrides the file.  Serialization writes the keys in one
//! canonical order, which makes parse -> serialize -> parse the identity and
//! keeps configs diffable.

use std::env;

use idnc_core::select::SelectionConfig;
use idnc_core::sim::{ChannelSpec, ExperimentConfig, Scheme};
use idnc_core::weights::PolicyKind;

/// Every recognized key, in canonical serialization order.
const KNOWN_KEYS: &[&str] = &[
    "packets",
    "receivers",
    "channel",
    "p_min",
    "p_max",
    "memory",
    "policy",
    "lambda",
    "blocks",
    "seed",
    "slot_cap",
    "axis",
    "values",
    "policies",
];

fn key_rank(key: &str) -> Option<usize> {
    KNOWN_KEYS.iter().position(|&k| k == key)
}

/// An ordered set of `key = value` pairs, kept in canonical key order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigMap {
    entries: Vec<(String, String)>,
}

impl ConfigMap {
    pub fn new() -> Self {
        ConfigMap::default()
    }

    /// Parses config text, reporting the offending line on error.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = ConfigMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(format!("line {lineno}: expected 'key = value', got '{line}'"));
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key_rank(key).is_none() {
                return Err(format!("line {lineno}: unknown key '{key}'"));
            }
            if value.is_empty() {
                return Err(format!("line {lineno}: empty value for '{key}'"));
            }
            if map.get(key).is_some() {
                return Err(format!("line {lineno}: duplicate key '{key}'"));
            }
            map.set(key, value);
        }
        Ok(map)
    }

    /// Canonical text form: known keys in a fixed order, one per line.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.entries {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Sets a known key, replacing any existing value.
    pub fn set(&mut self, key: &str, value: &str) {
        let rank = key_rank(key).expect("set() is only called with recognized keys");
        if let Some(entry) = self.entries.iter_mut().find(|(k, _)| k == key) {
            entry.1 = value.to_string();
            return;
        }
        let pos = self
            .entries
            .iter()
            .position(|(k, _)| key_rank(k).expect("stored keys are known") > rank)
            .unwrap_or(self.entries.len());
        self.entries.insert(pos, (key.to_string(), value.to_string()));
    }
}

fn field_usize(map: &ConfigMap, key: &str, default: usize) -> Result<usize, String> {
    match map.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| format!("field '{key}': expected an unsigned integer, got '{raw}'")),
    }
}

fn field_f64(map: &ConfigMap, key: &str, default: f64) -> Result<f64, String> {
    match map.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("field '{key}': expected a finite number, got '{raw}'")),
    }
}

/// Erasure channel family plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    Memoryless { p_min: f64, p_max: f64 },
    Gec { memory: f64 },
}

impl ChannelKind {
    pub fn is_gec(&self) -> bool {
        matches!(self, ChannelKind::Gec { .. })
    }

    /// Compact label for the CSV channel column.
    pub fn label(&self) -> String {
        match *self {
            ChannelKind::Memoryless { p_min, p_max } => format!("p{p_min:.3}-{p_max:.3}"),
            ChannelKind::Gec { memory } => format!("mu{memory:.3}"),
        }
    }

    pub fn spec(&self) -> ChannelSpec {
        match *self {
            ChannelKind::Memoryless { p_min, p_max } => ChannelSpec::Memoryless { p_min, p_max },
            ChannelKind::Gec { memory } => ChannelSpec::GilbertElliott { memory },
        }
    }
}

/// Scheduling policy families selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyName {
    MinOct,
    MinDd,
    Mwvs,
    Mwvs0,
    Mwvs1,
    Rlnc,
}

/// A policy name plus the layered-selection toggle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyChoice {
    pub name: PolicyName,
    pub layered: bool,
}

impl PolicyChoice {
    pub fn parse(raw: &str) -> Result<Self, String> {
        let (base, layered) = match raw.strip_suffix("-layered") {
            Some(base) => (base, true),
            None => (raw, false),
        };
        let name = match base {
            "min-oct" => PolicyName::MinOct,
            "min-dd" => PolicyName::MinDd,
            "mwvs" => PolicyName::Mwvs,
            "mwvs0" => PolicyName::Mwvs0,
            "mwvs1" => PolicyName::Mwvs1,
            "rlnc" => PolicyName::Rlnc,
            _ => return Err(format!("unknown policy '{raw}'")),
        };
        if layered && name == PolicyName::Rlnc {
            return Err("policy 'rlnc' has no layered variant".to_string());
        }
        Ok(PolicyChoice { name, layered })
    }

    /// Canonical name, used for the CSV policy column.
    pub fn label(&self) -> String {
        let base = match self.name {
            PolicyName::MinOct => "min-oct",
            PolicyName::MinDd => "min-dd",
            PolicyName::Mwvs => "mwvs",
            PolicyName::Mwvs0 => "mwvs0",
            PolicyName::Mwvs1 => "mwvs1",
            PolicyName::Rlnc => "rlnc",
        };
        if self.layered {
            format!("{base}-layered")
        } else {
            base.to_string()
        }
    }

    /// Builds the transmission scheme for this policy on the given channel.
    /// The balanced policies weight by the stationary reception probability
    /// on memoryless channels and condition on the last observed state on
    /// channels with memory; layered selection needs observable states, so
    /// it is only available on the latter.
    pub fn scheme(&self, channel: ChannelKind, lambda: f64) -> Result<Scheme, String> {
        if self.name == PolicyName::Rlnc {
            return Ok(Scheme::Rlnc);
        }
        if self.layered && !channel.is_gec() {
            return Err(format!(
                "policy '{}': layered selection requires channel = gec",
                self.label()
            ));
        }
        let lambda = match self.name {
            PolicyName::Mwvs => lambda,
            PolicyName::Mwvs0 => 0.0,
            PolicyName::Mwvs1 => 1.0,
            _ => 0.0,
        };
        let kind = match self.name {
            PolicyName::MinOct => PolicyKind::MinOct,
            PolicyName::MinDd => PolicyKind::MinDd,
            PolicyName::Mwvs | PolicyName::Mwvs0 | PolicyName::Mwvs1 => {
                if channel.is_gec() {
                    PolicyKind::MwvsMemoryAware { lambda }
                } else {
                    PolicyKind::Mwvs { lambda }
                }
            }
            PolicyName::Rlnc => unreachable!("handled above"),
        };
        let sel = SelectionConfig::new(kind, self.layered).map_err(|e| e.to_string())?;
        Ok(Scheme::Idnc(sel))
    }
}

/// One fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub packets: usize,
    pub receivers: usize,
    pub channel: ChannelKind,
    pub policy: PolicyChoice,
    pub lambda: f64,
    pub blocks: usize,
    pub seed: u64,
    pub slot_cap: Option<usize>,
}

impl RunSpec {
    /// Resolves a config map into a run, applying defaults and reporting
    /// the offending field on error.  The seed falls back to the IDNC_SEED
    /// environment variable, then to 0.
    pub fn from_map(map: &ConfigMap) -> Result<Self, String> {
        let packets = field_usize(map, "packets", 15)?;
        if packets == 0 {
            return Err("field 'packets': must be positive".to_string());
        }
        let receivers = field_usize(map, "receivers", 15)?;
        if receivers == 0 {
            return Err("field 'receivers': must be positive".to_string());
        }
        let channel = match map.get("channel").unwrap_or("memoryless") {
            "memoryless" => {
                if map.get("memory").is_some() {
                    return Err("field 'memory': only applies to channel = gec".to_string());
                }
                ChannelKind::Memoryless {
                    p_min: field_f64(map, "p_min", 0.05)?,
                    p_max: field_f64(map, "p_max", 0.30)?,
                }
            }
            "gec" => {
                if map.get("p_min").is_some() || map.get("p_max").is_some() {
                    return Err(
                        "field 'p_min'/'p_max': only apply to channel = memoryless".to_string()
                    );
                }
                ChannelKind::Gec { memory: field_f64(map, "memory", 0.0)? }
            }
            other => {
                return Err(format!("field 'channel': unknown kind '{other}' (memoryless or gec)"))
            }
        };
        let policy = PolicyChoice::parse(map.get("policy").unwrap_or("mwvs"))
            .map_err(|e| format!("field 'policy': {e}"))?;
        let lambda = field_f64(map, "lambda", 0.5)?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err("field 'lambda': must lie in [0, 1]".to_string());
        }
        let blocks = field_usize(map, "blocks", 500)?;
        if blocks == 0 {
            return Err("field 'blocks': must be positive".to_string());
        }
        let seed = match map.get("seed") {
            Some(raw) => raw
                .parse()
                .map_err(|_| format!("field 'seed': expected an unsigned integer, got '{raw}'"))?,
            None => match env::var("IDNC_SEED") {
                Ok(raw) => raw.parse().map_err(|_| {
                    format!("IDNC_SEED: expected an unsigned integer, got '{raw}'")
                })?,
                Err(_) => 0,
            },
        };
        let slot_cap = match map.get("slot_cap") {
            Some(_) => Some(field_usize(map, "slot_cap", 0)?),
            None => None,
        };
        Ok(RunSpec { packets, receivers, channel, policy, lambda, blocks, seed, slot_cap })
    }

    /// The core experiment description for this run.
    pub fn experiment(&self) -> Result<ExperimentConfig, String> {
        Ok(ExperimentConfig {
            n_packets: self.packets,
            m_receivers: self.receivers,
            channel: self.channel.spec(),
            scheme: self.policy.scheme(self.channel, self.lambda)?,
            n_blocks: self.blocks,
            master_seed: self.seed,
            slot_cap: self.slot_cap,
        })
    }
}

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Packets,
    Receivers,
    Memory,
    Lambda,
}

impl Axis {
    pub fn parse(raw: &str) -> Result<Self, String> {
        match raw {
            "packets" => Ok(Axis::Packets),
            "receivers" => Ok(Axis::Receivers),
            "memory" => Ok(Axis::Memory),
            "lambda" => Ok(Axis::Lambda),
            _ => Err(format!(
                "field 'axis': unknown axis '{raw}' (packets, receivers, memory, lambda)"
            )),
        }
    }

    /// Column name in the tradeoff CSV.
    pub fn key(&self) -> &'static str {
        match self {
            Axis::Packets => "packets",
            Axis::Receivers => "receivers",
            Axis::Memory => "memory",
            Axis::Lambda => "lambda",
        }
    }

    /// Checks one sweep value against the axis domain.
    pub fn check(&self, v: f64) -> Result<(), String> {
        match self {
            Axis::Packets | Axis::Receivers => {
                if v < 1.0 || v.fract() != 0.0 || v > 1e6 {
                    return Err(format!(
                        "field 'values': axis '{}' needs positive integers, got '{v}'",
                        self.key()
                    ));
                }
            }
            Axis::Memory => {
                if !(0.0..1.0).contains(&v) {
                    return Err(format!(
                        "field 'values': memory must lie in [0, 1), got '{v}'"
                    ));
                }
            }
            Axis::Lambda => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!(
                        "field 'values': lambda must lie in [0, 1], got '{v}'"
                    ));
                }
            }
        }
        Ok(())
    }

    /// The base run moved to one point on the axis.
    pub fn apply(&self, base: &RunSpec, v: f64) -> RunSpec {
        let mut spec = base.clone();
        match self {
            Axis::Packets => spec.packets = v as usize,
            Axis::Receivers => spec.receivers = v as usize,
            Axis::Memory => spec.channel = ChannelKind::Gec { memory: v },
            Axis::Lambda => spec.lambda = v,
        }
        spec
    }

    /// Axis value as written into the tradeoff CSV.
    pub fn format(&self, v: f64) -> String {
        match self {
            Axis::Packets | Axis::Receivers => format!("{v:.0}"),
            Axis::Memory | Axis::Lambda => format!("{v:.3}"),
        }
    }
}

fn parse_values(raw: &str) -> Result<Vec<f64>, String> {
    let mut values = Vec::new();
    for part in raw.split(',') {
        let t = part.trim();
        let v: f64 = t
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| format!("field 'values': invalid number '{t}'"))?;
        values.push(v);
    }
    for pair in values.windows(2) {
        if pair[1] <= pair[0] {
            return Err("field 'values': must be strictly increasing".to_string());
        }
    }
    Ok(values)
}

fn parse_policies(raw: &str, channel: ChannelKind) -> Result<Vec<PolicyChoice>, String> {
    if raw == "all" {
        let names: &[&str] = if channel.is_gec() {
            &["min-oct", "min-dd", "mwvs", "min-oct-layered", "min-dd-layered", "mwvs-layered", "rlnc"]
        } else {
            &["min-oct", "min-dd", "mwvs", "mwvs0", "mwvs1", "rlnc"]
        };
        return names.iter().map(|n| PolicyChoice::parse(n)).collect();
    }
    let mut policies = Vec::new();
    for part in raw.split(',') {
        let choice = PolicyChoice::parse(part.trim())
            .map_err(|e| format!("field 'policies': {e}"))?;
        if policies.contains(&choice) {
            return Err(format!("field 'policies': duplicate '{}'", choice.label()));
        }
        policies.push(choice);
    }
    Ok(policies)
}

/// A one-axis sweep over a base experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RunSpec,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub policies: Vec<PolicyChoice>,
}

impl SweepSpec {
    pub fn from_map(map: &ConfigMap) -> Result<Self, String> {
        let base = RunSpec::from_map(map)?;
        let axis = Axis::parse(
            map.get("axis").ok_or("field 'axis': required for sweep")?,
        )?;
        let values = parse_values(
            map.get("values").ok_or("field 'values': required for sweep")?,
        )?;
        for &v in &values {
            axis.check(v)?;
        }
        if axis == Axis::Memory && !base.channel.is_gec() {
            return Err("field 'axis': sweeping memory requires channel = gec".to_string());
        }
        if map.get("policy").is_some() && map.get("policies").is_some() {
            return Err("field 'policy': use 'policies' for sweeps".to_string());
        }
        let policies = match map.get("policies") {
            Some(raw) => parse_policies(raw, base.channel)?,
            None => vec![base.policy],
        };
        if axis == Axis::Lambda {
            if let Some(p) = policies.iter().find(|p| p.name != PolicyName::Mwvs) {
                return Err(format!(
                    "field 'policies': axis 'lambda' only varies mwvs, got '{}'",
                    p.label()
                ));
            }
        }
        Ok(SweepSpec { base, axis, values, policies })
    }
}
