//! Flag and config-file plumbing: grid specs, enum flags, and the flat
//! key=value manifest format. Flags always win over file entries.

use anyhow::{anyhow, bail, Context, Result};
use mzi_core::linspace;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Inclusive grid specification `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub const fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if self.count < 2 {
            bail!("{what} grid needs \u{2265} 2 points");
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            bail!("{what} grid bounds must be finite");
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got `{s}`"));
        }
        let start = parts[0]
            .parse::<f64>()
            .map_err(|e| format!("bad grid start `{}`: {e}", parts[0]))?;
        let stop = parts[1]
            .parse::<f64>()
            .map_err(|e| format!("bad grid stop `{}`: {e}", parts[1]))?;
        let count = parts[2]
            .parse::<usize>()
            .map_err(|e| format!("bad grid count `{}`: {e}", parts[2]))?;
        Ok(GridSpec::new(start, stop, count))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fringe,
    Modulate,
    Compare,
    Condition,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fringe" => Ok(Mode::Fringe),
            "modulate" => Ok(Mode::Modulate),
            "compare" => Ok(Mode::Compare),
            "condition" => Ok(Mode::Condition),
            other => Err(format!(
                "unknown mode `{other}` (expected fringe, modulate, compare, or condition)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bs2Flag {
    In,
    Out,
}

impl FromStr for Bs2Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "in" => Ok(Bs2Flag::In),
            "out" => Ok(Bs2Flag::Out),
            other => Err(format!("unknown bs2 state `{other}` (expected in or out)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalKind {
    Uniform,
    Poisson,
}

impl FromStr for ArrivalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(ArrivalKind::Uniform),
            "poisson" => Ok(ArrivalKind::Poisson),
            other => Err(format!(
                "unknown arrival model `{other}` (expected uniform or poisson)"
            )),
        }
    }
}

/// Keys the manifest may carry; anything else is a typo worth failing on.
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "phases",
    "thetas",
    "bs2",
    "theta",
    "duty",
    "schedule",
    "period",
    "total",
    "events",
    "seed",
    "arrivals",
    "rate",
    "out",
    "report",
    "event-log",
    "tolerance",
    "workers",
    "transit-time",
];

/// Parse a flat `key = value` manifest. Blank lines and `#` comments are
/// skipped; keys must be known.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim().to_ascii_lowercase();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key `{key}`", lineno + 1);
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("config line {}: duplicate key `{key}`", lineno + 1);
        }
    }
    Ok(map)
}

/// Flag value if present, else the parsed config-file entry.
pub fn merged<T>(flag: Option<T>, file: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        Some(value) => value
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow!("config key `{key}`: {e}")),
        None => Ok(None),
    }
}

/// Read and parse a manifest file.
pub fn load_config_file(path: &std::path::Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    parse_config_file(&text)
}
