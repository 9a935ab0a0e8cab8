//! Experiment configuration: a flat `key=value` file, overridable key by key.
//!
//! Recognised keys (lists are comma separated):
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `protocol` | protocols to sweep | `epidemic,friendship,proposed1,proposed2` |
//! | `ttl` | message TTLs in seconds | `60,120,180,240,300,360` |
//! | `nodes` | node counts | `25,75` |
//! | `speed` | node speeds in m/s | `0.5,1.0,1.25,1.5` |
//! | `runs` | replications per cell | `10` |
//! | `seed` | base seed; run `r` uses `seed + r` | `1` |
//! | `width`, `height` | arena size in metres | `1000`, `1500` |
//! | `comm_range` | radio range in metres | `3` |
//! | `window` | contact window in seconds | `600` |
//! | `threshold` | friendship threshold | `0.01` |
//! | `messages` | messages per run | `1000` |
//! | `generation_span` | spread of creation times after warm-up | `1000` |
//! | `hello_period` | ticks between hellos | `1` |
//! | `missed_hello_limit` | missed hellos that end a contact | `3` |
//! | `pause` | waypoint pause in seconds | `0` |
//! | `trace` | replay this trace file instead of generating movement | |
//! | `dump_trace` | write the first cell's generated trace here | |
//! | `out` | results CSV (stdout when unset) | |
//! | `event_log` | event log of the first run of the first cell | |

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::routing::Protocol;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub protocols: Vec<Protocol>,
    pub ttls: Vec<f64>,
    pub node_counts: Vec<usize>,
    pub speeds: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub width: f64,
    pub height: f64,
    pub comm_range: f64,
    pub window: f64,
    pub threshold: f64,
    pub messages: usize,
    pub generation_span: f64,
    pub hello_period: u64,
    pub missed_hello_limit: u32,
    pub pause: f64,
    pub trace: Option<PathBuf>,
    pub dump_trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub event_log: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            protocols: Protocol::ALL.to_vec(),
            ttls: vec![60.0, 120.0, 180.0, 240.0, 300.0, 360.0],
            node_counts: vec![25, 75],
            speeds: vec![0.5, 1.0, 1.25, 1.5],
            runs: 10,
            seed: 1,
            width: 1000.0,
            height: 1500.0,
            comm_range: 3.0,
            window: 600.0,
            threshold: 0.01,
            messages: 1000,
            generation_span: 1000.0,
            hello_period: 1,
            missed_hello_limit: 3,
            pause: 0.0,
            trace: None,
            dump_trace: None,
            out: None,
            event_log: None,
        }
    }
}

pub const KEYS: [&str; 20] = [
    "protocol",
    "ttl",
    "nodes",
    "speed",
    "runs",
    "seed",
    "width",
    "height",
    "comm_range",
    "window",
    "threshold",
    "messages",
    "generation_span",
    "hello_period",
    "missed_hello_limit",
    "pause",
    "trace",
    "dump_trace",
    "out",
    "event_log",
];

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| invalid(key, format!("cannot parse {value:?}: {e}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

fn path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl ExperimentSpec {
    /// Sets one key. Later calls win, which is how flags override the file.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "protocol" | "protocols" => {
                self.protocols = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<Protocol>()
                            .map_err(|e| invalid(key, e.to_string()))
                    })
                    .collect::<Result<_, _>>()?
            }
            "ttl" => self.ttls = list(key, value)?,
            "nodes" => self.node_counts = list(key, value)?,
            "speed" => self.speeds = list(key, value)?,
            "runs" => self.runs = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "width" => self.width = scalar(key, value)?,
            "height" => self.height = scalar(key, value)?,
            "comm_range" => self.comm_range = scalar(key, value)?,
            "window" => self.window = scalar(key, value)?,
            "threshold" => self.threshold = scalar(key, value)?,
            "messages" => self.messages = scalar(key, value)?,
            "generation_span" => self.generation_span = scalar(key, value)?,
            "hello_period" => self.hello_period = scalar(key, value)?,
            "missed_hello_limit" => self.missed_hello_limit = scalar(key, value)?,
            "pause" => self.pause = scalar(key, value)?,
            "trace" => self.trace = path(value),
            "dump_trace" => self.dump_trace = path(value),
            "out" => self.out = path(value),
            "event_log" => self.event_log = path(value),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies every `key=value` line of a config file. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                reason: format!("expected key=value, found {line:?}"),
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, file: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(file).map_err(|source| ConfigError::Io {
            path: file.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    /// Defaults, then the optional file, then overrides in order.
    pub fn load<'a>(
        file: Option<&Path>,
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ConfigError> {
        let mut spec = ExperimentSpec::default();
        if let Some(f) = file {
            spec.apply_file(f)?;
        }
        for (k, v) in overrides {
            spec.apply(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be > 0, got {v}")))
            }
        };
        if self.protocols.is_empty() {
            return Err(invalid("protocol", "empty list"));
        }
        if self.ttls.is_empty() {
            return Err(invalid("ttl", "empty list"));
        }
        if self.node_counts.is_empty() {
            return Err(invalid("nodes", "empty list"));
        }
        if self.speeds.is_empty() {
            return Err(invalid("speed", "empty list"));
        }
        for &t in &self.ttls {
            positive("ttl", t)?;
        }
        for &s in &self.speeds {
            positive("speed", s)?;
        }
        if let Some(&n) = self.node_counts.iter().find(|&&n| n < 2) {
            return Err(invalid("nodes", format!("need at least 2 nodes, got {n}")));
        }
        if self.runs == 0 {
            return Err(invalid("runs", "must be >= 1"));
        }
        positive("width", self.width)?;
        positive("height", self.height)?;
        positive("comm_range", self.comm_range)?;
        positive("window", self.window)?;
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(invalid(
                "threshold",
                format!("must be >= 0, got {}", self.threshold),
            ));
        }
        if self.messages == 0 {
            return Err(invalid("messages", "must be >= 1"));
        }
        if !(self.generation_span >= 0.0 && self.generation_span.is_finite()) {
            return Err(invalid("generation_span", "must be >= 0"));
        }
        if self.hello_period == 0 {
            return Err(invalid("hello_period", "must be >= 1"));
        }
        if self.missed_hello_limit == 0 {
            return Err(invalid("missed_hello_limit", "must be >= 1"));
        }
        if !(self.pause >= 0.0 && self.pause.is_finite()) {
            return Err(invalid("pause", "must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_table_defaults() {
        let spec = ExperimentSpec::load(None, []).unwrap();
        assert_eq!(spec.messages, 1000);
        assert_eq!((spec.width, spec.height), (1000.0, 1500.0));
        assert_eq!(spec.comm_range, 3.0);
        assert_eq!(spec.window, 600.0);
        assert_eq!(spec.threshold, 0.01);
        assert_eq!(spec.ttls, vec![60.0, 120.0, 180.0, 240.0, 300.0, 360.0]);
        assert_eq!(spec.node_counts, vec![25, 75]);
        assert_eq!(spec.speeds, vec![0.5, 1.0, 1.25, 1.5]);
        assert_eq!(spec.runs, 10);
        assert_eq!(spec.protocols.len(), 4);
    }

    #[test]
    fn flag_overrides_file_value() {
        let mut spec = ExperimentSpec::default();
        spec.apply_text("ttl=60,120\n").unwrap();
        assert_eq!(spec.ttls, vec![60.0, 120.0]);
        spec.apply("ttl", "180").unwrap();
        assert_eq!(spec.ttls, vec![180.0]);
    }

    #[test]
    fn negative_range_is_rejected_by_name() {
        let mut spec = ExperimentSpec::default();
        spec.apply_text("comm_range=-1").unwrap();
        let err = spec.validate().unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "comm_range"));
        assert!(err.to_string().contains("comm_range"));
    }

    #[test]
    fn unknown_keys_and_bad_lines() {
        let mut spec = ExperimentSpec::default();
        assert!(
            matches!(spec.apply_text("colour=red"), Err(ConfigError::UnknownKey(k)) if k == "colour")
        );
        assert!(matches!(
            spec.apply_text("# comment\n\nttl 60"),
            Err(ConfigError::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            spec.apply("runs", "many"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            spec.apply("protocol", "flood"),
            Err(ConfigError::Invalid { .. })
        ));
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let mut spec = ExperimentSpec::default();
        for key in KEYS {
            let value = match key {
                "protocol" => "epidemic",
                "trace" | "dump_trace" | "out" | "event_log" => "x.csv",
                _ => "2",
            };
            spec.apply(key, value)
                .unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
