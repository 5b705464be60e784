//! `cwlforge <config.yml> <tool.cwl> [inputs.yml] [--<input-id>=<value> ...]`
//!
//! On success the output object is printed to stdout as JSON:
//!
//! ```json
//! {
//!   "output": {
//!     "location": "/abs/path/hello.txt",
//!     "size": 14,
//!     "checksum": "sha1$60fde9c2310b0d4cad4dab8d126b04387efba289"
//!   }
//! }
//! ```
//!
//! Keys follow output declaration order. Errors go to stderr as one JSON
//! line `{"error": <kind>, "message": <text>}` and set the exit code:
//!
//! | code | meaning                                               |
//! |------|-------------------------------------------------------|
//! | 0    | success                                               |
//! | 2    | usage error, unknown input, bad input value           |
//! | 3    | config, tool or job file failed to parse or validate  |
//! | 4    | a `validate` expression rejected an input             |
//! | 5    | the tool failed to run or produce its outputs         |

use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Serialize;
use serde_yaml::Value as Yaml;

use crate::binding::{RawInputs, RawValue};
use crate::config;
use crate::document::{ToolDocument, ValueType};
use crate::engine::{Engine, FailureKind};
use crate::toolapp::{InvokeError, Overrides, ToolApp};

pub const USAGE: &str = "usage: cwlforge <config.yml> <tool.cwl> [inputs.yml] [--<input-id>=<value> ...]";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 2,
    Invalid = 3,
    ValidationFailed = 4,
    ExecutionFailed = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: ExitCode, kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum JobError {
    #[error("job file is not valid YAML: {0}")]
    YamlSyntax(String),
    #[error("job file must be a mapping of input ids to values")]
    NotAMapping,
    #[error("job input `{id}`: {reason}")]
    BadValue { id: String, reason: String },
}

/// One entry of the result object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub location: String,
    pub size: u64,
    pub checksum: String,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Invocation {
    pub config: PathBuf,
    pub tool: PathBuf,
    pub job: Option<PathBuf>,
    /// `--id=value` pairs in command-line order.
    pub flags: Vec<(String, String)>,
}

pub fn parse_args(args: &[String]) -> Result<Invocation, CliError> {
    let usage = |msg: String| CliError::new(ExitCode::Usage, "Usage", format!("{msg}\n{USAGE}"));
    let mut positional = Vec::new();
    let mut flags = Vec::new();
    for arg in args {
        if let Some(flag) = arg.strip_prefix("--") {
            let (id, value) = flag
                .split_once('=')
                .ok_or_else(|| usage(format!("expected --<input-id>=<value>, got `{arg}`")))?;
            if id.is_empty() {
                return Err(usage(format!("empty input id in `{arg}`")));
            }
            flags.push((id.to_string(), value.to_string()));
        } else {
            positional.push(PathBuf::from(arg));
        }
    }
    let mut positional = positional.into_iter();
    match (positional.next(), positional.next(), positional.next(), positional.next()) {
        (Some(config), Some(tool), job, None) => Ok(Invocation {
            config,
            tool,
            job,
            flags,
        }),
        (_, _, _, Some(extra)) => Err(usage(format!("unexpected argument `{}`", extra.display()))),
        _ => Err(usage("missing config or tool path".into())),
    }
}

fn file_path(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

/// Reads a job file. File paths (objects and plain strings for File-typed
/// inputs) are resolved against `base_dir` when relative.
pub fn parse_job_inputs_at(
    source_text: &str,
    doc: &ToolDocument,
    base_dir: Option<&Path>,
) -> Result<RawInputs, JobError> {
    let root: Yaml = if source_text.trim().is_empty() {
        Yaml::Null
    } else {
        serde_yaml::from_str(source_text).map_err(|e| JobError::YamlSyntax(e.to_string()))?
    };
    let map = match root {
        Yaml::Null => return Ok(RawInputs::new()),
        Yaml::Mapping(m) => m,
        _ => return Err(JobError::NotAMapping),
    };
    let mut out = RawInputs::new();
    for (k, v) in map {
        let id = match k {
            Yaml::String(s) => s,
            other => return Err(JobError::BadValue {
                id: format!("{other:?}"),
                reason: "keys must be strings".into(),
            }),
        };
        let value = RawValue::from_yaml(&v).map_err(|reason| JobError::BadValue { id: id.clone(), reason })?;
        let is_file = doc.input(&id).is_some_and(|p| p.value_type == ValueType::File);
        let value = match value {
            RawValue::File(p) => RawValue::File(file_path(base_dir, p)),
            RawValue::Str(s) if is_file => RawValue::File(file_path(base_dir, PathBuf::from(s))),
            other => other,
        };
        out.insert(id, value);
    }
    Ok(out)
}

pub fn parse_job_inputs(source_text: &str, doc: &ToolDocument) -> Result<RawInputs, JobError> {
    parse_job_inputs_at(source_text, doc, None)
}

/// Converts a `--id=value` string by the input's declared type.
pub fn coerce_flag(doc: &ToolDocument, id: &str, value: &str) -> Result<RawValue, CliError> {
    let bad = |why: &str| CliError::new(ExitCode::Usage, "TypeMismatch", format!("--{id}={value}: {why}"));
    let param = doc
        .input(id)
        .ok_or_else(|| CliError::new(ExitCode::Usage, "UnknownInput", format!("unknown input `{id}`")))?;
    Ok(match param.value_type {
        ValueType::Boolean => match value {
            "true" => RawValue::Bool(true),
            "false" => RawValue::Bool(false),
            _ => return Err(bad("expected `true` or `false`")),
        },
        t if t.is_integral() => RawValue::Int(value.trim().parse().map_err(|_| bad("expected an integer"))?),
        t if t.is_fractional() => RawValue::Float(value.trim().parse().map_err(|_| bad("expected a number"))?),
        ValueType::File => RawValue::File(PathBuf::from(value)),
        _ => RawValue::Str(value.to_string()),
    })
}

fn read(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| {
        CliError::new(ExitCode::Usage, "IoError", format!("reading {what} {}: {e}", path.display()))
    })
}

fn copy_outputs(
    outputs: &crate::binding::OutputObject,
    outdir: &Path,
) -> Result<IndexMap<String, OutputRecord>, CliError> {
    let failed = |m: String| CliError::new(ExitCode::ExecutionFailed, "OutputError", m);
    std::fs::create_dir_all(outdir).map_err(|e| failed(format!("creating {}: {e}", outdir.display())))?;
    let outdir = std::path::absolute(outdir).map_err(|e| failed(e.to_string()))?;
    let mut used = std::collections::HashSet::new();
    let mut result = IndexMap::new();
    for (id, file) in outputs {
        let name = file.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| id.clone());
        let name = if used.insert(name.clone()) { name } else { format!("{id}-{name}") };
        let dest = outdir.join(&name);
        if dest.exists() {
            std::fs::remove_file(&dest).map_err(|e| failed(format!("replacing {}: {e}", dest.display())))?;
        }
        std::fs::copy(&file.path, &dest).map_err(|e| failed(format!("copying {}: {e}", file.path.display())))?;
        result.insert(
            id.clone(),
            OutputRecord {
                location: dest.to_string_lossy().into_owned(),
                size: file.size,
                checksum: file.checksum(),
            },
        );
    }
    Ok(result)
}

/// Runs one invocation and returns the result object.
pub fn run(args: &[String]) -> Result<IndexMap<String, OutputRecord>, CliError> {
    let inv = parse_args(args)?;
    let config = config::parse_config(&read(&inv.config, "config")?)
        .map_err(|e| CliError::new(ExitCode::Invalid, "ConfigError", e.to_string()))?;

    let tool_text = read(&inv.tool, "tool")?;
    let engine = Engine::start(config.engine_options())
        .map_err(|e| CliError::new(ExitCode::ExecutionFailed, "EngineError", e.to_string()))?;
    let result = invoke(&inv, &config, &tool_text, &engine);
    // Outputs have been copied out by now, so shutdown may remove sandboxes.
    engine.shutdown(true);
    result
}

fn invoke(
    inv: &Invocation,
    config: &config::RunnerConfig,
    tool_text: &str,
    engine: &Engine,
) -> Result<IndexMap<String, OutputRecord>, CliError> {
    let app = ToolApp::from_source(tool_text, &inv.tool.display().to_string(), engine)
        .map_err(|e| CliError::new(ExitCode::Invalid, "InvalidTool", e.to_string()))?
        .with_step_limit(config.step_limit)
        .with_env_policy(config.env_policy.clone());
    let doc = app.document();

    let mut raw = match &inv.job {
        Some(job) => parse_job_inputs_at(&read(job, "job file")?, doc, job.parent())
            .map_err(|e| CliError::new(ExitCode::Invalid, "JobError", e.to_string()))?,
        None => RawInputs::new(),
    };
    for (id, value) in &inv.flags {
        raw.insert(id.clone(), coerce_flag(doc, id, value)?);
    }

    let outcome = match app.invoke(&raw, &Overrides::default()) {
        Ok(handle) => handle.wait().map_err(|f| match f.kind {
            FailureKind::ValidationFailed => CliError::new(ExitCode::ValidationFailed, "ValidationFailed", f.to_string()),
            _ => CliError::new(ExitCode::ExecutionFailed, "ExecutionFailed", f.to_string()),
        }),
        Err(InvokeError::Validation(v)) => Err(CliError::new(ExitCode::ValidationFailed, "ValidationFailed", v.to_string())),
        Err(InvokeError::Bind(b)) => Err(CliError::new(ExitCode::Usage, "InputError", b.to_string())),
        Err(InvokeError::Submit(s)) => Err(CliError::new(ExitCode::ExecutionFailed, "SubmitError", s.to_string())),
    };
    outcome.and_then(|outputs| copy_outputs(&outputs, &config.outdir))
}

/// Runs the CLI, writing to the given streams, and returns the exit code.
pub fn main_with(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    if matches!(args.first().map(String::as_str), Some("-h" | "--help")) {
        let _ = writeln!(stdout, "{USAGE}");
        return ExitCode::Success as i32;
    }
    match run(args) {
        Ok(result) => {
            let json = serde_json::to_string_pretty(&result).expect("result serializes");
            let _ = writeln!(stdout, "{json}");
            ExitCode::Success as i32
        }
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind, "message": e.message });
            let _ = writeln!(stderr, "{line}");
            e.code as i32
        }
    }
}
