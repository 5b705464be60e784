//! Runner configuration.
//!
//! A flat YAML mapping. Every key is optional:
//!
//! | key            | type                                   | default              |
//! |----------------|----------------------------------------|----------------------|
//! | `executor`     | `serial`, `thread-pool`, `worker-pool` | `thread-pool`        |
//! | `workers`      | integer ≥ 1                            | logical CPU count    |
//! | `workdir`      | path                                   | `./cwlforge-work`    |
//! | `cleanup`      | boolean                                | `true`               |
//! | `step_limit`   | integer ≥ 1                            | `1000000`            |
//! | `env_policy`   | `inherit`, `clean`                     | `inherit`            |
//! | `env_allowlist`| list of variable names                 | `[PATH]`             |
//! | `outdir`       | path                                   | `.`                  |
//!
//! For files written in the TaPS vocabulary, `max_workers` and
//! `workers_per_node` are read as `workers`, and the executor names
//! `ThreadPoolExecutor` and `HighThroughputExecutor` (or `htex`) map to
//! `thread-pool` and `worker-pool`. Multi-node keys (`nodes`,
//! `accelerators`, `provider`, `environment`) are accepted with a warning
//! and ignored. Other unknown keys are warnings too.

use std::path::PathBuf;

use serde_yaml::{Mapping, Value as Yaml};

use crate::engine::{EngineOptions, EnvPolicy, ExecutorKind};

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

const IGNORED_KEYS: &[&str] = &["nodes", "accelerators", "provider", "environment"];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config is not valid YAML: {0}")]
    YamlSyntax(String),
    #[error("config key `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunnerConfig {
    pub executor: ExecutorKind,
    pub workers: usize,
    pub workdir: PathBuf,
    pub cleanup: bool,
    pub step_limit: u64,
    pub env_policy: EnvPolicy,
    /// Where the CLI copies final outputs.
    pub outdir: PathBuf,
}

pub fn default_config() -> RunnerConfig {
    RunnerConfig {
        executor: ExecutorKind::ThreadPool,
        workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        workdir: PathBuf::from("./cwlforge-work"),
        cleanup: true,
        step_limit: DEFAULT_STEP_LIMIT,
        env_policy: EnvPolicy::Inherit,
        outdir: PathBuf::from("."),
    }
}

impl Default for RunnerConfig {
    fn default() -> Self {
        default_config()
    }
}

impl RunnerConfig {
    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            executor: self.executor,
            workers: self.workers,
            workdir: self.workdir.clone(),
            run_id: None,
            cleanup: self.cleanup,
            worker_program: None,
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn executor_kind(key: &str, value: &Yaml) -> Result<ExecutorKind, ConfigError> {
    let name = value.as_str().ok_or_else(|| invalid(key, "expected a string"))?;
    Ok(match name {
        "serial" => ExecutorKind::Serial,
        "thread-pool" | "ThreadPoolExecutor" => ExecutorKind::ThreadPool,
        "worker-pool" | "HighThroughputExecutor" | "htex" => ExecutorKind::WorkerPool,
        other => return Err(invalid(key, format!("unsupported executor `{other}`"))),
    })
}

fn positive(key: &str, value: &Yaml) -> Result<u64, ConfigError> {
    value
        .as_u64()
        .filter(|n| *n >= 1)
        .ok_or_else(|| invalid(key, "expected a positive integer"))
}

fn path(key: &str, value: &Yaml) -> Result<PathBuf, ConfigError> {
    match value.as_str() {
        Some(s) if !s.is_empty() => Ok(PathBuf::from(s)),
        _ => Err(invalid(key, "expected a non-empty path")),
    }
}

/// Parses a config and returns it with the warnings produced.
pub fn parse_config_with_warnings(source_text: &str) -> Result<(RunnerConfig, Vec<String>), ConfigError> {
    let root: Yaml = if source_text.trim().is_empty() {
        Yaml::Null
    } else {
        serde_yaml::from_str(source_text).map_err(|e| ConfigError::YamlSyntax(e.to_string()))?
    };
    let map = match root {
        Yaml::Null => Mapping::new(),
        Yaml::Mapping(m) => m,
        _ => return Err(ConfigError::YamlSyntax("top level must be a mapping".into())),
    };

    let mut config = default_config();
    let mut warnings = Vec::new();
    let mut policy: Option<String> = None;
    let mut allowlist: Option<Vec<String>> = None;
    for (k, value) in &map {
        let Some(key) = k.as_str() else {
            warnings.push(format!("ignoring non-string key {k:?}"));
            continue;
        };
        match key {
            "executor" => config.executor = executor_kind(key, value)?,
            "workers" | "max_workers" | "workers_per_node" => config.workers = positive(key, value)? as usize,
            "workdir" => config.workdir = path(key, value)?,
            "outdir" => config.outdir = path(key, value)?,
            "cleanup" => config.cleanup = value.as_bool().ok_or_else(|| invalid(key, "expected a boolean"))?,
            "step_limit" => config.step_limit = positive(key, value)?,
            "env_policy" => match value.as_str() {
                Some(p @ ("inherit" | "clean")) => policy = Some(p.to_string()),
                _ => return Err(invalid(key, "expected `inherit` or `clean`")),
            },
            "env_allowlist" => {
                let items = value.as_sequence().ok_or_else(|| invalid(key, "expected a list"))?;
                allowlist = Some(
                    items
                        .iter()
                        .map(|v| v.as_str().map(str::to_string))
                        .collect::<Option<_>>()
                        .ok_or_else(|| invalid(key, "expected variable names"))?,
                );
            }
            k if IGNORED_KEYS.contains(&k) => {
                warnings.push(format!("`{k}` is not supported by local executors and is ignored"))
            }
            other => warnings.push(format!("unknown config key `{other}`")),
        }
    }
    config.env_policy = match policy.as_deref() {
        Some("clean") => EnvPolicy::Clean {
            allowlist: allowlist.unwrap_or_else(|| vec!["PATH".to_string()]),
        },
        _ => {
            if allowlist.is_some() {
                warnings.push("`env_allowlist` only applies with `env_policy: clean`".into());
            }
            EnvPolicy::Inherit
        }
    };
    Ok((config, warnings))
}

pub fn parse_config(source_text: &str) -> Result<RunnerConfig, ConfigError> {
    let (config, warnings) = parse_config_with_warnings(source_text)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(config)
}

/// Emits `config` in the form [`parse_config`] reads.
pub fn serialize(config: &RunnerConfig) -> String {
    let mut m = Mapping::new();
    let executor = match config.executor {
        ExecutorKind::Serial => "serial",
        ExecutorKind::ThreadPool => "thread-pool",
        ExecutorKind::WorkerPool => "worker-pool",
    };
    m.insert("executor".into(), executor.into());
    m.insert("workers".into(), (config.workers as u64).into());
    m.insert("workdir".into(), config.workdir.to_string_lossy().into_owned().into());
    m.insert("cleanup".into(), config.cleanup.into());
    m.insert("step_limit".into(), config.step_limit.into());
    match &config.env_policy {
        EnvPolicy::Inherit => {
            m.insert("env_policy".into(), "inherit".into());
        }
        EnvPolicy::Clean { allowlist } => {
            m.insert("env_policy".into(), "clean".into());
            m.insert(
                "env_allowlist".into(),
                Yaml::Sequence(allowlist.iter().map(|s| s.as_str().into()).collect()),
            );
        }
    }
    m.insert("outdir".into(), config.outdir.to_string_lossy().into_owned().into());
    serde_yaml::to_string(&Yaml::Mapping(m)).expect("mapping serializes")
}
