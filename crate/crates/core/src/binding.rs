//! Input coercion and command-line assembly.
//!
//! Argv is built from binding groups, one per `arguments` entry and one per
//! bound input with a value. Groups are ordered by `(position, source)`,
//! where at equal positions argument entries come first in listed order and
//! inputs follow sorted by id.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde_yaml::Value as Yaml;
use sha1::{Digest, Sha1};

use crate::document::{ArgumentEntry, OutputKind, ToolDocument, ValueType};
use crate::engine::FutureId;
use crate::expr::{self, ExprError, ExpressionProgram, Template};

/// Directory under the sandbox root that holds staged input files.
pub const STAGING_DIR: &str = ".inputs";

#[derive(Debug, thiserror::Error)]
pub enum BindError {
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("missing required input `{0}`")]
    MissingRequiredInput(String),
    #[error("input `{id}`: expected {expected}, got {got}")]
    TypeMismatch {
        id: String,
        expected: ValueType,
        got: String,
    },
    #[error("input `{0}` refers to a file that has not been produced yet")]
    UnresolvedFuture(String),
    #[error("reference to unknown input `{0}`")]
    UnknownReference(String),
    #[error("{path}: {source}")]
    Expression {
        path: String,
        #[source]
        source: ExprError,
    },
    #[error("invalid output file name `{0}`")]
    InvalidTarget(String),
    #[error("output `{id}`: invalid glob `{pattern}`")]
    InvalidGlob { id: String, pattern: String },
    #[error("process exited with status {0}")]
    NonZeroExit(i32),
    #[error("declared output `{0}` was not produced")]
    MissingOutput(String),
    #[error("output `{id}` matched {} files: {}", matches.len(), matches.join(", "))]
    AmbiguousOutput { id: String, matches: Vec<String> },
    #[error("reading output `{id}`: {source}")]
    Io {
        id: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FileRef {
    pub path: PathBuf,
    /// Set while the file is still to be produced by another task.
    pub pending: Option<FutureId>,
}

impl FileRef {
    pub fn at(path: impl Into<PathBuf>) -> Self {
        FileRef {
            path: path.into(),
            pending: None,
        }
    }

    pub fn pending(id: FutureId) -> Self {
        FileRef {
            path: PathBuf::new(),
            pending: Some(id),
        }
    }

    pub fn is_pending(&self) -> bool {
        self.pending.is_some()
    }
}

/// A typed value for one input.
#[derive(Debug, Clone, PartialEq)]
pub enum InputValue {
    String(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    File(FileRef),
}

impl InputValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            InputValue::String(_) => "string",
            InputValue::Int(_) => "int",
            InputValue::Float(_) => "float",
            InputValue::Bool(_) => "boolean",
            InputValue::File(_) => "File",
        }
    }

    /// The text this value contributes to argv.
    pub fn render(&self) -> String {
        match self {
            InputValue::String(s) => s.clone(),
            InputValue::Int(i) => i.to_string(),
            InputValue::Float(f) => expr::render_float(*f),
            InputValue::Bool(b) => b.to_string(),
            InputValue::File(f) => f.path.to_string_lossy().into_owned(),
        }
    }

    pub fn to_yaml(&self) -> Yaml {
        match self {
            InputValue::String(s) => Yaml::String(s.clone()),
            InputValue::Int(i) => Yaml::Number((*i).into()),
            InputValue::Float(f) => Yaml::Number((*f).into()),
            InputValue::Bool(b) => Yaml::Bool(*b),
            InputValue::File(f) => {
                let mut m = serde_yaml::Mapping::new();
                m.insert("class".into(), "File".into());
                m.insert("path".into(), f.path.to_string_lossy().into_owned().into());
                Yaml::Mapping(m)
            }
        }
    }
}

/// An untyped invocation value, before coercion.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    File(PathBuf),
    Future(FutureId),
}

impl RawValue {
    fn describe(&self) -> String {
        match self {
            RawValue::Null => "null".into(),
            RawValue::Bool(b) => format!("boolean {b}"),
            RawValue::Int(i) => format!("int {i}"),
            RawValue::Float(f) => format!("float {f}"),
            RawValue::Str(s) => format!("string {s:?}"),
            RawValue::File(p) => format!("File {}", p.display()),
            RawValue::Future(id) => format!("future file {id}"),
        }
    }

    /// Converts a YAML/JSON job value. `{class: File, path|location}` maps to
    /// a file; other mappings and sequences are rejected.
    pub fn from_yaml(value: &Yaml) -> Result<RawValue, String> {
        Ok(match value {
            Yaml::Null => RawValue::Null,
            Yaml::Bool(b) => RawValue::Bool(*b),
            Yaml::Number(n) => match n.as_i64() {
                Some(i) => RawValue::Int(i),
                None => RawValue::Float(n.as_f64().ok_or("unrepresentable number")?),
            },
            Yaml::String(s) => RawValue::Str(s.clone()),
            Yaml::Mapping(m) => {
                if m.get("class").and_then(Yaml::as_str) != Some("File") {
                    return Err("only `{class: File, path: ...}` objects are supported".into());
                }
                let path = m
                    .get("path")
                    .or_else(|| m.get("location"))
                    .and_then(Yaml::as_str)
                    .ok_or("File object needs `path` or `location`")?;
                RawValue::File(PathBuf::from(path.trim_start_matches("file://")))
            }
            Yaml::Sequence(_) => return Err("array values are not supported".into()),
            Yaml::Tagged(t) => return RawValue::from_yaml(&t.value),
        })
    }
}

impl From<&str> for RawValue {
    fn from(s: &str) -> Self {
        RawValue::Str(s.to_string())
    }
}

impl From<String> for RawValue {
    fn from(s: String) -> Self {
        RawValue::Str(s)
    }
}

impl From<i64> for RawValue {
    fn from(i: i64) -> Self {
        RawValue::Int(i)
    }
}

impl From<i32> for RawValue {
    fn from(i: i32) -> Self {
        RawValue::Int(i.into())
    }
}

impl From<f64> for RawValue {
    fn from(f: f64) -> Self {
        RawValue::Float(f)
    }
}

impl From<bool> for RawValue {
    fn from(b: bool) -> Self {
        RawValue::Bool(b)
    }
}

impl From<&Path> for RawValue {
    fn from(p: &Path) -> Self {
        RawValue::File(p.to_path_buf())
    }
}

impl From<PathBuf> for RawValue {
    fn from(p: PathBuf) -> Self {
        RawValue::File(p)
    }
}

impl From<FutureId> for RawValue {
    fn from(id: FutureId) -> Self {
        RawValue::Future(id)
    }
}

pub type RawInputs = BTreeMap<String, RawValue>;

/// Coerced, defaulted inputs for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSet {
    values: BTreeMap<String, InputValue>,
    declared: BTreeSet<String>,
    tool_origin: String,
}

impl InputSet {
    pub fn get(&self, id: &str) -> Option<&InputValue> {
        self.values.get(id)
    }

    pub fn is_declared(&self, id: &str) -> bool {
        self.declared.contains(id)
    }

    pub fn values(&self) -> &BTreeMap<String, InputValue> {
        &self.values
    }

    pub fn tool_origin(&self) -> &str {
        &self.tool_origin
    }

    /// File values still waiting on another task, by input id.
    pub fn pending_files(&self) -> impl Iterator<Item = (&str, FutureId)> {
        self.values.iter().filter_map(|(id, v)| match v {
            InputValue::File(FileRef {
                pending: Some(f), ..
            }) => Some((id.as_str(), *f)),
            _ => None,
        })
    }

    /// Replaces pending file values using `resolve`.
    pub fn resolve_pending(
        &mut self,
        mut resolve: impl FnMut(FutureId) -> Option<PathBuf>,
    ) -> Result<(), BindError> {
        for (id, value) in self.values.iter_mut() {
            if let InputValue::File(f) = value {
                if let Some(fid) = f.pending {
                    let path = resolve(fid).ok_or_else(|| BindError::UnresolvedFuture(id.clone()))?;
                    *f = FileRef::at(path);
                }
            }
        }
        Ok(())
    }

    /// The same inputs with every file path replaced by its staged location.
    pub fn staged(&self, staged: &[StagedInput]) -> InputSet {
        let mut out = self.clone();
        for s in staged {
            out.values
                .insert(s.input_id.clone(), InputValue::File(FileRef::at(&s.dest)));
        }
        out
    }
}

fn absolute(base: Option<&Path>, path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    let joined = match base {
        Some(b) => b.join(path),
        None => path.to_path_buf(),
    };
    std::path::absolute(&joined).unwrap_or(joined)
}

pub fn coerce_inputs(doc: &ToolDocument, raw: &RawInputs) -> Result<InputSet, BindError> {
    if let Some(unknown) = raw.keys().find(|k| doc.input(k).is_none()) {
        return Err(BindError::UnknownInput(unknown.clone()));
    }
    let tool_dir = Path::new(&doc.origin).parent().filter(|p| !p.as_os_str().is_empty());
    let mut values = BTreeMap::new();
    for param in &doc.inputs {
        let id = &param.id;
        let supplied = raw.get(id).filter(|v| **v != RawValue::Null);
        let value = match supplied {
            None => match &param.default_value {
                Some(InputValue::File(f)) if !f.is_pending() => {
                    Some(InputValue::File(FileRef::at(absolute(tool_dir, &f.path))))
                }
                Some(d) => Some(d.clone()),
                None if param.optional => None,
                None => return Err(BindError::MissingRequiredInput(id.clone())),
            },
            Some(v) => {
                let mismatch = || BindError::TypeMismatch {
                    id: id.clone(),
                    expected: param.value_type,
                    got: v.describe(),
                };
                Some(match (param.value_type, v) {
                    (ValueType::String, RawValue::Str(s)) => InputValue::String(s.clone()),
                    (t, RawValue::Int(i)) if t.is_integral() => InputValue::Int(*i),
                    (t, RawValue::Int(i)) if t.is_fractional() => InputValue::Float(*i as f64),
                    (t, RawValue::Float(f)) if t.is_fractional() => InputValue::Float(*f),
                    (ValueType::Boolean, RawValue::Bool(b)) => InputValue::Bool(*b),
                    (ValueType::File, RawValue::Str(p)) => {
                        InputValue::File(FileRef::at(absolute(None, Path::new(p))))
                    }
                    (ValueType::File, RawValue::File(p)) => InputValue::File(FileRef::at(absolute(None, p))),
                    (ValueType::File, RawValue::Future(fid)) => InputValue::File(FileRef::pending(*fid)),
                    _ => return Err(mismatch()),
                })
            }
        };
        if let Some(value) = value {
            values.insert(id.clone(), value);
        }
    }
    Ok(InputSet {
        values,
        declared: doc.inputs.iter().map(|p| p.id.clone()).collect(),
        tool_origin: doc.origin.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedInput {
    pub input_id: String,
    pub source: PathBuf,
    pub dest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedOutput {
    pub id: String,
    pub kind: OutputKind,
    /// Target file name for stdout/stderr, resolved glob for files.
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandPlan {
    pub argv: Vec<String>,
    /// Sandbox root; the process runs here and outputs are collected here.
    pub workdir: PathBuf,
    pub stdout_target: String,
    pub stderr_target: String,
    pub expected_outputs: Vec<ExpectedOutput>,
    pub sandbox_inputs: Vec<StagedInput>,
}

#[derive(Debug, Clone, Default)]
pub struct BindContext {
    pub task_id: String,
    pub sandbox_root: PathBuf,
    pub stdout_override: Option<String>,
    pub stderr_override: Option<String>,
}

impl BindContext {
    pub fn new(task_id: impl Into<String>, sandbox_root: impl Into<PathBuf>) -> Self {
        BindContext {
            task_id: task_id.into(),
            sandbox_root: sandbox_root.into(),
            ..Default::default()
        }
    }
}

/// Sort key of one binding group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub position: i64,
    pub source: GroupSource,
}

/// Argument entries sort before inputs at equal positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupSource {
    Argument(usize),
    Input(String),
}

fn group_tokens(prefix: Option<&str>, separate: bool, value: &InputValue, rendered: String) -> Vec<String> {
    match (value, prefix) {
        (InputValue::Bool(true), Some(p)) => vec![p.to_string()],
        (InputValue::Bool(_), _) => Vec::new(),
        (_, None) => vec![rendered],
        (_, Some(p)) if separate => vec![p.to_string(), rendered],
        (_, Some(p)) => vec![format!("{p}{rendered}")],
    }
}

fn checked_name(name: String) -> Result<String, BindError> {
    if name.is_empty() || name == "." || name == ".." || name.contains('/') || name.contains('\0') {
        return Err(BindError::InvalidTarget(name));
    }
    Ok(name)
}

pub fn bind_arguments(
    doc: &ToolDocument,
    inputs: &InputSet,
    program: Option<&ExpressionProgram>,
    ctx: &BindContext,
) -> Result<CommandPlan, BindError> {
    if let Some((id, _)) = inputs.pending_files().next() {
        return Err(BindError::UnresolvedFuture(id.to_string()));
    }

    let sandbox_inputs: Vec<StagedInput> = inputs
        .values()
        .iter()
        .filter_map(|(id, v)| match v {
            InputValue::File(f) => {
                let name = f.path.file_name().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(id));
                Some(StagedInput {
                    input_id: id.clone(),
                    source: f.path.clone(),
                    dest: ctx.sandbox_root.join(STAGING_DIR).join(id).join(name),
                })
            }
            _ => None,
        })
        .collect();
    let view = inputs.staged(&sandbox_inputs);

    let empty = ExpressionProgram::default();
    let program = program.unwrap_or(&empty);

    let mut groups: Vec<(GroupKey, Vec<String>)> = Vec::new();
    for (i, arg) in doc.arguments.iter().enumerate() {
        let token = match arg {
            ArgumentEntry::Literal(text) => text.clone(),
            ArgumentEntry::Template(raw) => {
                let wrap = |source| BindError::Expression {
                    path: format!("arguments[{i}]"),
                    source,
                };
                let tpl = Template::parse(raw).map_err(wrap)?;
                let tpl = expr::resolve_references(&tpl, &view).map_err(wrap)?;
                expr::evaluate_template(program, &tpl).map_err(wrap)?
            }
        };
        groups.push((
            GroupKey {
                position: 0,
                source: GroupSource::Argument(i),
            },
            vec![token],
        ));
    }
    for param in &doc.inputs {
        let (Some(binding), Some(value)) = (&param.binding, view.get(&param.id)) else {
            continue;
        };
        let tokens = group_tokens(binding.prefix.as_deref(), binding.separate, value, value.render());
        groups.push((
            GroupKey {
                position: binding.position,
                source: GroupSource::Input(param.id.clone()),
            },
            tokens,
        ));
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));

    let mut argv = doc.base_command.clone();
    argv.extend(groups.into_iter().flat_map(|(_, tokens)| tokens));

    let substitute = |text: &str, escape: bool| {
        expr::substitute_references(text, |id| {
            view.get(id).map(|v| {
                let r = v.render();
                if escape {
                    glob::Pattern::escape(&r)
                } else {
                    r
                }
            })
        })
        .map_err(BindError::UnknownReference)
    };
    let stdout_target = checked_name(match (&ctx.stdout_override, &doc.stdout_name) {
        (Some(name), _) => name.clone(),
        (None, Some(name)) => substitute(name, false)?,
        (None, None) => format!("{}.stdout", ctx.task_id),
    })?;
    let stderr_target = checked_name(match (&ctx.stderr_override, &doc.stderr_name) {
        (Some(name), _) => name.clone(),
        (None, Some(name)) => substitute(name, false)?,
        (None, None) => format!("{}.stderr", ctx.task_id),
    })?;

    let mut expected_outputs = Vec::with_capacity(doc.outputs.len());
    for out in &doc.outputs {
        let pattern = match out.kind {
            OutputKind::Stdout => stdout_target.clone(),
            OutputKind::Stderr => stderr_target.clone(),
            OutputKind::File => {
                let glob = out.glob_pattern.as_deref().ok_or_else(|| BindError::InvalidGlob {
                    id: out.id.clone(),
                    pattern: String::new(),
                })?;
                substitute(glob, true)?
            }
        };
        expected_outputs.push(ExpectedOutput {
            id: out.id.clone(),
            kind: out.kind,
            pattern,
        });
    }

    Ok(CommandPlan {
        argv,
        workdir: ctx.sandbox_root.clone(),
        stdout_target,
        stderr_target,
        expected_outputs,
        sandbox_inputs,
    })
}

/// A collected output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub path: PathBuf,
    pub size: u64,
    /// Lowercase hex SHA-1 of the contents.
    pub sha1: String,
}

impl OutputFile {
    pub fn read(path: &Path) -> io::Result<OutputFile> {
        let (size, sha1) = sha1_file(path)?;
        Ok(OutputFile {
            path: path.to_path_buf(),
            size,
            sha1,
        })
    }

    /// `sha1$<hex>` form used in result documents.
    pub fn checksum(&self) -> String {
        format!("sha1${}", self.sha1)
    }
}

/// Output id to collected file, in declaration order.
pub type OutputObject = IndexMap<String, OutputFile>;

pub fn sha1_file(path: &Path) -> io::Result<(u64, String)> {
    let mut file = File::open(path)?;
    let mut hasher = Sha1::new();
    let mut buf = [0u8; 64 * 1024];
    let mut size = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        size += n as u64;
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    Ok((size, digest.iter().map(|b| format!("{b:02x}")).collect()))
}

pub fn resolve_outputs(
    plan: &CommandPlan,
    sandbox_listing: &[PathBuf],
    exit_code: i32,
) -> Result<OutputObject, BindError> {
    if exit_code != 0 {
        return Err(BindError::NonZeroExit(exit_code));
    }
    let mut names: Vec<(String, &PathBuf)> = sandbox_listing
        .iter()
        .filter_map(|p| Some((p.file_name()?.to_str()?.to_string(), p)))
        .collect();
    names.sort();

    let mut out = OutputObject::new();
    for expected in &plan.expected_outputs {
        let matches: Vec<&(String, &PathBuf)> = match expected.kind {
            OutputKind::Stdout | OutputKind::Stderr => {
                names.iter().filter(|(n, _)| *n == expected.pattern).collect()
            }
            OutputKind::File => {
                let pattern = glob::Pattern::new(&expected.pattern).map_err(|_| BindError::InvalidGlob {
                    id: expected.id.clone(),
                    pattern: expected.pattern.clone(),
                })?;
                let opts = glob::MatchOptions {
                    case_sensitive: true,
                    require_literal_separator: true,
                    require_literal_leading_dot: true,
                };
                names.iter().filter(|(n, _)| pattern.matches_with(n, opts)).collect()
            }
        };
        let path = match matches.as_slice() {
            [] => return Err(BindError::MissingOutput(expected.id.clone())),
            [(_, p)] => *p,
            many => {
                return Err(BindError::AmbiguousOutput {
                    id: expected.id.clone(),
                    matches: many.iter().map(|(n, _)| n.clone()).collect(),
                })
            }
        };
        let file = OutputFile::read(path).map_err(|source| BindError::Io {
            id: expected.id.clone(),
            source,
        })?;
        out.insert(expected.id.clone(), file);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::parse_tool;
    use proptest::prelude::*;

    const ECHO: &str = "cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: echo\ninputs:\n  message:\n    type: string\n    default: \"Hello World\"\n    inputBinding:\n      position: 1\noutputs:\n  output:\n    type: stdout\nstdout: hello.txt\n";

    fn echo() -> ToolDocument {
        parse_tool(ECHO, "echo.cwl").unwrap()
    }

    fn raw(pairs: &[(&str, RawValue)]) -> RawInputs {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn ctx() -> BindContext {
        BindContext::new("task-1", "/sandbox/task-1")
    }

    #[test]
    fn defaults_fill_missing_inputs() {
        let set = coerce_inputs(&echo(), &RawInputs::new()).unwrap();
        assert_eq!(set.get("message"), Some(&InputValue::String("Hello World".into())));
    }

    #[test]
    fn supplied_values_win() {
        let set = coerce_inputs(&echo(), &raw(&[("message", "Hello, World!".into())])).unwrap();
        assert_eq!(set.get("message"), Some(&InputValue::String("Hello, World!".into())));
    }

    #[test]
    fn coercion_errors() {
        let doc = echo();
        assert!(matches!(
            coerce_inputs(&doc, &raw(&[("bogus", 1i64.into())])),
            Err(BindError::UnknownInput(id)) if id == "bogus"
        ));
        assert!(matches!(
            coerce_inputs(&doc, &raw(&[("message", 1i64.into())])),
            Err(BindError::TypeMismatch { .. })
        ));
        let required = parse_tool(&ECHO.replace("    default: \"Hello World\"\n", ""), "e.cwl").unwrap();
        assert!(matches!(
            coerce_inputs(&required, &RawInputs::new()),
            Err(BindError::MissingRequiredInput(id)) if id == "message"
        ));
    }

    #[test]
    fn numeric_widening() {
        let doc = parse_tool(
            "cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: x\ninputs:\n  ratio: double\n  n: long\noutputs: []\n",
            "x.cwl",
        )
        .unwrap();
        let set = coerce_inputs(&doc, &raw(&[("ratio", 2i64.into()), ("n", 5i64.into())])).unwrap();
        assert_eq!(set.get("ratio"), Some(&InputValue::Float(2.0)));
        assert_eq!(set.get("n"), Some(&InputValue::Int(5)));
        assert!(coerce_inputs(&doc, &raw(&[("n", 1.5.into()), ("ratio", 1.0.into())])).is_err());
    }

    #[test]
    fn echo_plan() {
        let doc = echo();
        let set = coerce_inputs(&doc, &raw(&[("message", "Hello, World!".into())])).unwrap();
        let plan = bind_arguments(&doc, &set, None, &ctx()).unwrap();
        assert_eq!(plan.argv, vec!["echo", "Hello, World!"]);
        assert_eq!(plan.stdout_target, "hello.txt");
        assert_eq!(plan.stderr_target, "task-1.stderr");
        assert_eq!(plan.expected_outputs[0].pattern, "hello.txt");
    }

    fn prefixed() -> ToolDocument {
        parse_tool(
            r#"cwlVersion: v1.2
class: CommandLineTool
baseCommand: prog
inputs:
  a:
    type: string
    inputBinding: {position: 2, prefix: --a}
  b:
    type: string
    inputBinding: {position: 1, prefix: --b}
  sepia:
    type: boolean
    inputBinding: {prefix: --sepia}
  level:
    type: float?
    inputBinding: {position: 3, prefix: "-l", separate: false}
outputs: []
"#,
            "p.cwl",
        )
        .unwrap()
    }

    #[test]
    fn position_then_prefix_rendering() {
        let doc = prefixed();
        let set = coerce_inputs(
            &doc,
            &raw(&[("a", "x".into()), ("b", "y".into()), ("sepia", false.into())]),
        )
        .unwrap();
        let plan = bind_arguments(&doc, &set, None, &ctx()).unwrap();
        assert_eq!(plan.argv, vec!["prog", "--b", "y", "--a", "x"]);

        let set = coerce_inputs(
            &doc,
            &raw(&[
                ("a", "x".into()),
                ("b", "y".into()),
                ("sepia", true.into()),
                ("level", 0.5.into()),
            ]),
        )
        .unwrap();
        let plan = bind_arguments(&doc, &set, None, &ctx()).unwrap();
        assert_eq!(plan.argv, vec!["prog", "--sepia", "--b", "y", "--a", "x", "-l0.5"]);
        assert_eq!(plan.argv.iter().filter(|t| *t == "--sepia").count(), 1);
    }

    #[test]
    fn arguments_precede_inputs_at_equal_position() {
        let doc = parse_tool(
            r#"cwlVersion: v1.2
class: CommandLineTool
baseCommand: prog
inputs:
  z: {type: string, inputBinding: {}}
  m: {type: string, inputBinding: {}}
arguments: [first, second]
outputs: []
"#,
            "p.cwl",
        )
        .unwrap();
        let set = coerce_inputs(&doc, &raw(&[("z", "Z".into()), ("m", "M".into())])).unwrap();
        let plan = bind_arguments(&doc, &set, None, &ctx()).unwrap();
        assert_eq!(plan.argv, vec!["prog", "first", "second", "M", "Z"]);
    }

    #[test]
    fn files_render_as_staged_paths() {
        let doc = parse_tool(
            r#"cwlVersion: v1.2
class: CommandLineTool
baseCommand: cat
inputs:
  input_image: {type: File, inputBinding: {position: 1}}
  name: string
outputs:
  out:
    type: File
    outputBinding: {glob: "$(inputs.name)*.png"}
"#,
            "p.cwl",
        )
        .unwrap();
        let set = coerce_inputs(
            &doc,
            &raw(&[("input_image", RawValue::Str("/data/img.png".into())), ("name", "a[1]".into())]),
        )
        .unwrap();
        let plan = bind_arguments(&doc, &set, None, &ctx()).unwrap();
        assert_eq!(plan.argv[1], "/sandbox/task-1/.inputs/input_image/img.png");
        assert_eq!(plan.sandbox_inputs[0].source, PathBuf::from("/data/img.png"));
        assert_eq!(plan.expected_outputs[0].pattern, "a[[]1[]]*.png");
    }

    #[test]
    fn pending_inputs_block_binding() {
        let doc = parse_tool(
            "cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: cat\ninputs:\n  f: File\noutputs: []\n",
            "c.cwl",
        )
        .unwrap();
        let set = coerce_inputs(&doc, &raw(&[("f", RawValue::Future(FutureId(3)))])).unwrap();
        assert!(matches!(
            bind_arguments(&doc, &set, None, &ctx()),
            Err(BindError::UnresolvedFuture(id)) if id == "f"
        ));
    }

    #[test]
    fn overrides_and_bad_targets() {
        let doc = echo();
        let set = coerce_inputs(&doc, &RawInputs::new()).unwrap();
        let mut c = ctx();
        c.stdout_override = Some("other.txt".into());
        assert_eq!(bind_arguments(&doc, &set, None, &c).unwrap().stdout_target, "other.txt");
        c.stdout_override = Some("../escape".into());
        assert!(matches!(bind_arguments(&doc, &set, None, &c), Err(BindError::InvalidTarget(_))));
    }

    #[test]
    fn empty_template_result_is_one_empty_token() {
        let doc = parse_tool(
            "cwlVersion: v1.2\nclass: CommandLineTool\nrequirements:\n  InlinePythonRequirement: {expressionLib: []}\nbaseCommand: echo\ninputs: {}\narguments: ['f\"{''''}\"']\noutputs: []\n",
            "e.cwl",
        )
        .unwrap();
        let set = coerce_inputs(&doc, &RawInputs::new()).unwrap();
        let plan = bind_arguments(&doc, &set, None, &ctx()).unwrap();
        assert_eq!(plan.argv, vec!["echo", ""]);
    }

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn resolves_stdout_with_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let doc = echo();
        let set = coerce_inputs(&doc, &RawInputs::new()).unwrap();
        let plan = bind_arguments(&doc, &set, None, &BindContext::new("t", dir.path())).unwrap();
        let listing = vec![write(dir.path(), "hello.txt", b"Hello, World!\n")];
        let out = resolve_outputs(&plan, &listing, 0).unwrap();
        let file = &out["output"];
        assert_eq!(file.size, 14);
        // sha1sum of the literal bytes "Hello, World!\n"
        assert_eq!(file.sha1, "60fde9c2310b0d4cad4dab8d126b04387efba289");
        assert_eq!(file.checksum(), "sha1$60fde9c2310b0d4cad4dab8d126b04387efba289");
    }

    fn glob_plan(pattern: &str) -> CommandPlan {
        CommandPlan {
            argv: vec!["x".into()],
            workdir: PathBuf::from("/"),
            stdout_target: "t.stdout".into(),
            stderr_target: "t.stderr".into(),
            expected_outputs: vec![ExpectedOutput {
                id: "output_image".into(),
                kind: OutputKind::File,
                pattern: pattern.into(),
            }],
            sandbox_inputs: vec![],
        }
    }

    #[test]
    fn missing_and_ambiguous_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.png", b"a");
        let b = write(dir.path(), "b.png", b"b");
        assert!(matches!(
            resolve_outputs(&glob_plan("resized.png"), &[a.clone()], 0),
            Err(BindError::MissingOutput(id)) if id == "output_image"
        ));
        match resolve_outputs(&glob_plan("*.png"), &[b.clone(), a.clone()], 0) {
            Err(BindError::AmbiguousOutput { matches, .. }) => assert_eq!(matches, vec!["a.png", "b.png"]),
            other => panic!("{other:?}"),
        }
        let out = resolve_outputs(&glob_plan("[a]?png"), &[a.clone(), b], 0).unwrap();
        assert_eq!(out["output_image"].path, a);
        assert!(matches!(resolve_outputs(&glob_plan("*"), &[a], 2), Err(BindError::NonZeroExit(2))));
    }

    #[test]
    fn zero_outputs_resolve_to_empty_object() {
        let mut plan = glob_plan("x");
        plan.expected_outputs.clear();
        assert!(resolve_outputs(&plan, &[PathBuf::from("/whatever")], 0).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn binding_is_pure_and_prefix_adjacent(a in "[a-z]{0,5}", b in "[ -~]{0,8}", sepia: bool, level in -1e6f64..1e6) {
            let doc = prefixed();
            let set = coerce_inputs(&doc, &raw(&[
                ("a", a.as_str().into()), ("b", b.as_str().into()),
                ("sepia", sepia.into()), ("level", level.into()),
            ])).unwrap();
            let p1 = bind_arguments(&doc, &set, None, &ctx()).unwrap();
            let p2 = bind_arguments(&doc, &set, None, &ctx()).unwrap();
            prop_assert_eq!(&p1, &p2);
            prop_assert_eq!(&p1.argv[0], "prog");
            let ia = p1.argv.iter().position(|t| t == "--a").unwrap();
            prop_assert_eq!(&p1.argv[ia + 1], &a);
            let ib = p1.argv.iter().position(|t| t == "--b").unwrap();
            prop_assert_eq!(&p1.argv[ib + 1], &b);
            let last = p1.argv.last().unwrap();
            prop_assert!(last.starts_with("-l") && last.len() > 2);
            prop_assert_eq!(last[2..].parse::<f64>().unwrap(), level);
        }
    }
}
