//! Typed model of the supported CommandLineTool subset.
//!
//! [`parse_tool`] turns YAML text into a [`ToolDocument`] with defaults
//! applied; [`validate_tool`] runs the semantic checks that need the whole
//! document (unique ids, resolvable references, requirement presence).

use std::collections::HashSet;
use std::fmt;

use serde_yaml::{Mapping, Value};

use crate::binding::{FileRef, InputValue};
use crate::expr::{self, Template};

/// The only `cwlVersion` this engine accepts.
pub const SUPPORTED_CWL_VERSION: &str = "v1.2";

/// Requirement class carrying the inline expression library.
pub const INLINE_EXPRESSION_CLASS: &str = "InlinePythonRequirement";
const STEP_INPUT_EXPRESSION_CLASS: &str = "StepInputExpressionRequirement";

const TOP_LEVEL_KEYS: &[&str] = &[
    "cwlVersion",
    "class",
    "doc",
    "baseCommand",
    "inputs",
    "outputs",
    "arguments",
    "stdout",
    "stderr",
    "requirements",
];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("malformed YAML: {0}")]
    YamlSyntax(String),
    #[error("{path}: unsupported class `{class}` (only CommandLineTool can be run)")]
    UnsupportedClass { path: String, class: String },
    #[error("{path}: unsupported cwlVersion `{version}` (expected {SUPPORTED_CWL_VERSION})")]
    UnsupportedVersion { path: String, version: String },
    #[error("{path}: {message}")]
    SchemaError { path: String, message: String },
}

impl DocumentError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocumentError::SchemaError {
            path: path.into(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, DocumentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToolClass {
    CommandLineTool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    String,
    Int,
    Long,
    Float,
    Double,
    Boolean,
    File,
}

impl ValueType {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "string" => ValueType::String,
            "int" => ValueType::Int,
            "long" => ValueType::Long,
            "float" => ValueType::Float,
            "double" => ValueType::Double,
            "boolean" => ValueType::Boolean,
            "File" => ValueType::File,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueType::String => "string",
            ValueType::Int => "int",
            ValueType::Long => "long",
            ValueType::Float => "float",
            ValueType::Double => "double",
            ValueType::Boolean => "boolean",
            ValueType::File => "File",
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(self, ValueType::Int | ValueType::Long)
    }

    pub fn is_fractional(self) -> bool {
        matches!(self, ValueType::Float | ValueType::Double)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputBinding {
    pub position: i64,
    pub prefix: Option<String>,
    /// Prefix and value are distinct argv tokens when true.
    pub separate: bool,
}

impl Default for InputBinding {
    fn default() -> Self {
        InputBinding {
            position: 0,
            prefix: None,
            separate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputParameter {
    pub id: String,
    pub value_type: ValueType,
    pub optional: bool,
    pub default_value: Option<InputValue>,
    pub binding: Option<InputBinding>,
    /// Extension field: a template evaluated before the tool runs.
    pub validate_template: Option<String>,
    pub doc: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Stdout,
    Stderr,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputParameter {
    pub id: String,
    pub kind: OutputKind,
    pub glob_pattern: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgumentEntry {
    Literal(String),
    /// An `f"..."` entry, kept as raw text and parsed when the command is bound.
    Template(String),
}

impl ArgumentEntry {
    pub fn raw(&self) -> &str {
        match self {
            ArgumentEntry::Literal(s) | ArgumentEntry::Template(s) => s,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RequirementSet {
    /// Expression library sources, in declaration order.
    pub inline_expression: Option<Vec<String>>,
    /// Recorded only; has no runtime effect.
    pub step_input_expression: bool,
    /// Requirement classes this engine does not understand, verbatim.
    pub unknown: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolDocument {
    pub origin: String,
    pub cwl_version: String,
    pub tool_class: ToolClass,
    pub base_command: Vec<String>,
    pub inputs: Vec<InputParameter>,
    pub outputs: Vec<OutputParameter>,
    pub arguments: Vec<ArgumentEntry>,
    pub stdout_name: Option<String>,
    pub stderr_name: Option<String>,
    pub requirements: RequirementSet,
    pub doc: Option<String>,
}

impl ToolDocument {
    pub fn input(&self, id: &str) -> Option<&InputParameter> {
        self.inputs.iter().find(|p| p.id == id)
    }

    /// Short name used for task ids: the origin's file stem, or `tool`.
    pub fn name(&self) -> String {
        std::path::Path::new(&self.origin)
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty())
            .unwrap_or("tool")
            .to_string()
    }
}

pub fn parse_tool(source_text: &str, origin_path: &str) -> Result<ToolDocument> {
    let root: Value =
        serde_yaml::from_str(source_text).map_err(|e| DocumentError::YamlSyntax(e.to_string()))?;
    let map = match &root {
        Value::Mapping(m) => m,
        _ => return Err(DocumentError::schema("$", "document must be a mapping")),
    };

    for key in map.keys() {
        let key = key_str(key, "$")?;
        if !TOP_LEVEL_KEYS.contains(&key) {
            log::warn!("{origin_path}: ignoring unsupported key `{key}`");
        }
    }

    let class = required_str(map, "class", "class")?;
    if class != "CommandLineTool" {
        return Err(DocumentError::UnsupportedClass {
            path: "class".into(),
            class: class.to_string(),
        });
    }
    let version = required_str(map, "cwlVersion", "cwlVersion")?;
    if version != SUPPORTED_CWL_VERSION {
        return Err(DocumentError::UnsupportedVersion {
            path: "cwlVersion".into(),
            version: version.to_string(),
        });
    }

    let base_command = match map.get("baseCommand") {
        None | Some(Value::Null) => {
            return Err(DocumentError::schema("baseCommand", "missing required field"))
        }
        Some(Value::Sequence(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                out.push(scalar_text(item, &format!("baseCommand[{i}]"))?);
            }
            out
        }
        Some(other) => vec![scalar_text(other, "baseCommand")?],
    };
    if base_command.is_empty() {
        return Err(DocumentError::schema("baseCommand", "must name at least one word"));
    }

    let inputs = match map.get("inputs") {
        None => return Err(DocumentError::schema("inputs", "missing required field")),
        Some(v) => entries(v, "inputs")?
            .into_iter()
            .map(|(id, node, path)| parse_input(id, node, &path))
            .collect::<Result<Vec<_>>>()?,
    };
    let outputs = match map.get("outputs") {
        None => return Err(DocumentError::schema("outputs", "missing required field")),
        Some(v) => entries(v, "outputs")?
            .into_iter()
            .map(|(id, node, path)| parse_output(id, node, &path))
            .collect::<Result<Vec<_>>>()?,
    };

    let arguments = match map.get("arguments") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Sequence(items)) => items
            .iter()
            .enumerate()
            .map(|(i, item)| parse_argument(item, &format!("arguments[{i}]")))
            .collect::<Result<Vec<_>>>()?,
        Some(_) => return Err(DocumentError::schema("arguments", "expected a list")),
    };

    let requirements = match map.get("requirements") {
        None | Some(Value::Null) => RequirementSet::default(),
        Some(v) => parse_requirements(v)?,
    };

    Ok(ToolDocument {
        origin: origin_path.to_string(),
        cwl_version: version.to_string(),
        tool_class: ToolClass::CommandLineTool,
        base_command,
        inputs,
        outputs,
        arguments,
        stdout_name: optional_str(map, "stdout", "stdout")?,
        stderr_name: optional_str(map, "stderr", "stderr")?,
        requirements,
        doc: optional_str(map, "doc", "doc")?,
    })
}

fn key_str<'a>(key: &'a Value, path: &str) -> Result<&'a str> {
    key.as_str()
        .ok_or_else(|| DocumentError::schema(path, "mapping keys must be strings"))
}

fn required_str<'a>(map: &'a Mapping, key: &str, path: &str) -> Result<&'a str> {
    match map.get(key) {
        None | Some(Value::Null) => Err(DocumentError::schema(path, "missing required field")),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(DocumentError::schema(path, "expected a string")),
    }
}

fn optional_str(map: &Mapping, key: &str, path: &str) -> Result<Option<String>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(DocumentError::schema(path, "expected a string")),
    }
}

fn scalar_text(value: &Value, path: &str) -> Result<String> {
    match value {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(DocumentError::schema(path, "expected a scalar")),
    }
}

/// Normalizes the map form and the list form of `inputs`/`outputs`.
fn entries<'a>(value: &'a Value, section: &str) -> Result<Vec<(String, &'a Value, String)>> {
    match value {
        Value::Null => Ok(Vec::new()),
        Value::Mapping(m) => m
            .iter()
            .map(|(k, v)| {
                let id = key_str(k, section)?.to_string();
                let path = format!("{section}.{id}");
                Ok((id, v, path))
            })
            .collect(),
        Value::Sequence(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let path = format!("{section}[{i}]");
                let id = match item {
                    Value::Mapping(m) => required_str(m, "id", &format!("{path}.id"))?,
                    _ => return Err(DocumentError::schema(&path, "expected a mapping with an `id`")),
                };
                Ok((id.trim_start_matches('#').to_string(), item, path))
            })
            .collect(),
        _ => Err(DocumentError::schema(section, "expected a mapping or a list")),
    }
}

/// Parses a type declaration: `T`, `T?`, or `["null", T]`.
fn parse_type(value: &Value, path: &str) -> Result<(String, bool)> {
    match value {
        Value::String(s) => match s.strip_suffix('?') {
            Some(base) => Ok((base.to_string(), true)),
            None => Ok((s.clone(), false)),
        },
        Value::Sequence(items) => {
            let names: Vec<&str> = items.iter().filter_map(Value::as_str).collect();
            if names.len() != items.len() {
                return Err(DocumentError::schema(path, "unsupported type union"));
            }
            let rest: Vec<&str> = names.iter().copied().filter(|n| *n != "null").collect();
            match rest.as_slice() {
                [single] => Ok((single.to_string(), rest.len() < names.len())),
                _ => Err(DocumentError::schema(path, "unsupported type union")),
            }
        }
        _ => Err(DocumentError::schema(path, "unsupported type declaration")),
    }
}

fn parse_input(id: String, node: &Value, path: &str) -> Result<InputParameter> {
    let (type_value, map) = match node {
        Value::Mapping(m) => match m.get("type") {
            Some(t) => (t, Some(m)),
            None => return Err(DocumentError::schema(format!("{path}.type"), "missing required field")),
        },
        // Shorthand: `message: string`.
        other => (other, None),
    };
    let type_path = format!("{path}.type");
    let (type_name, optional) = parse_type(type_value, &type_path)?;
    let value_type = ValueType::from_name(&type_name)
        .ok_or_else(|| DocumentError::schema(&type_path, format!("unknown type `{type_name}`")))?;

    let mut param = InputParameter {
        id,
        value_type,
        optional,
        default_value: None,
        binding: None,
        validate_template: None,
        doc: None,
    };
    let Some(map) = map else { return Ok(param) };

    if let Some(default) = map.get("default") {
        param.default_value = parse_default(default, value_type, &format!("{path}.default"))?;
    }
    match map.get("inputBinding") {
        None | Some(Value::Null) => {}
        Some(Value::Mapping(b)) => {
            param.binding = Some(parse_input_binding(b, &format!("{path}.inputBinding"))?)
        }
        Some(_) => {
            return Err(DocumentError::schema(
                format!("{path}.inputBinding"),
                "expected a mapping",
            ))
        }
    }
    param.doc = optional_str(map, "doc", &format!("{path}.doc"))?;
    if let Some(raw) = optional_str(map, "validate", &format!("{path}.validate"))? {
        let raw = raw.trim().to_string();
        match expr::detect_template(&raw) {
            Ok(Some(_)) => {}
            Ok(None) => {
                return Err(DocumentError::schema(
                    format!("{path}.validate"),
                    "validate must be an f\"...\" template",
                ))
            }
            Err(e) => return Err(DocumentError::schema(format!("{path}.validate"), e.to_string())),
        }
        param.validate_template = Some(raw);
    }
    Ok(param)
}

fn parse_input_binding(map: &Mapping, path: &str) -> Result<InputBinding> {
    let mut binding = InputBinding::default();
    for (k, v) in map {
        let key = key_str(k, path)?;
        let here = format!("{path}.{key}");
        match key {
            "position" => {
                binding.position = v
                    .as_i64()
                    .ok_or_else(|| DocumentError::schema(&here, "expected an integer"))?
            }
            "prefix" => binding.prefix = Some(scalar_text(v, &here)?),
            "separate" => {
                binding.separate = v
                    .as_bool()
                    .ok_or_else(|| DocumentError::schema(&here, "expected a boolean"))?
            }
            other => log::warn!("{path}: ignoring unsupported binding key `{other}`"),
        }
    }
    Ok(binding)
}

fn parse_default(value: &Value, ty: ValueType, path: &str) -> Result<Option<InputValue>> {
    let mismatch = || DocumentError::schema(path, format!("default does not conform to type {ty}"));
    let parsed = match (ty, value) {
        (_, Value::Null) => return Ok(None),
        (ValueType::String, Value::String(s)) => InputValue::String(s.clone()),
        (t, Value::Number(n)) if t.is_integral() => InputValue::Int(n.as_i64().ok_or_else(mismatch)?),
        (t, Value::Number(n)) if t.is_fractional() => {
            InputValue::Float(n.as_f64().ok_or_else(mismatch)?)
        }
        (ValueType::Boolean, Value::Bool(b)) => InputValue::Bool(*b),
        (ValueType::File, Value::String(s)) => InputValue::File(FileRef::at(s)),
        (ValueType::File, Value::Mapping(m)) => {
            match m.get("class").and_then(Value::as_str) {
                Some("File") => {}
                _ => return Err(DocumentError::schema(path, "File default must have `class: File`")),
            }
            let location = m
                .get("path")
                .or_else(|| m.get("location"))
                .and_then(Value::as_str)
                .ok_or_else(|| DocumentError::schema(path, "File default needs `path` or `location`"))?;
            InputValue::File(FileRef::at(location.trim_start_matches("file://")))
        }
        _ => return Err(mismatch()),
    };
    Ok(Some(parsed))
}

fn parse_output(id: String, node: &Value, path: &str) -> Result<OutputParameter> {
    let (type_value, map) = match node {
        Value::Mapping(m) => match m.get("type") {
            Some(t) => (t, Some(m)),
            None => return Err(DocumentError::schema(format!("{path}.type"), "missing required field")),
        },
        other => (other, None),
    };
    let type_path = format!("{path}.type");
    let (type_name, _) = parse_type(type_value, &type_path)?;
    let kind = match type_name.as_str() {
        "stdout" => OutputKind::Stdout,
        "stderr" => OutputKind::Stderr,
        "File" => OutputKind::File,
        other => {
            return Err(DocumentError::schema(
                type_path,
                format!("unsupported output type `{other}`"),
            ))
        }
    };
    let glob_pattern = match map.and_then(|m| m.get("outputBinding")) {
        None | Some(Value::Null) => None,
        Some(Value::Mapping(b)) => optional_str(b, "glob", &format!("{path}.outputBinding.glob"))?,
        Some(_) => {
            return Err(DocumentError::schema(
                format!("{path}.outputBinding"),
                "expected a mapping",
            ))
        }
    };
    if kind != OutputKind::File && glob_pattern.is_some() {
        return Err(DocumentError::schema(
            format!("{path}.outputBinding.glob"),
            "stdout/stderr outputs cannot declare a glob",
        ));
    }
    Ok(OutputParameter {
        id,
        kind,
        glob_pattern,
    })
}

fn parse_argument(value: &Value, path: &str) -> Result<ArgumentEntry> {
    let text = match value {
        Value::Mapping(_) | Value::Sequence(_) => {
            return Err(DocumentError::schema(path, "only string arguments are supported"))
        }
        other => scalar_text(other, path)?,
    };
    if expr::looks_like_template(&text) {
        Ok(ArgumentEntry::Template(text.trim().to_string()))
    } else {
        Ok(ArgumentEntry::Literal(text))
    }
}

fn parse_requirements(value: &Value) -> Result<RequirementSet> {
    let mut set = RequirementSet::default();
    let mut items: Vec<(String, &Mapping, String)> = Vec::new();
    match value {
        Value::Sequence(seq) => {
            for (i, item) in seq.iter().enumerate() {
                let path = format!("requirements[{i}]");
                let m = item
                    .as_mapping()
                    .ok_or_else(|| DocumentError::schema(&path, "expected a mapping"))?;
                let class = required_str(m, "class", &format!("{path}.class"))?;
                items.push((class.to_string(), m, path));
            }
        }
        Value::Mapping(m) => {
            for (k, v) in m {
                let class = key_str(k, "requirements")?;
                let path = format!("requirements.{class}");
                let body = match v {
                    Value::Mapping(body) => body,
                    Value::Null => {
                        items.push((class.to_string(), empty_mapping(), path));
                        continue;
                    }
                    _ => return Err(DocumentError::schema(&path, "expected a mapping")),
                };
                items.push((class.to_string(), body, path));
            }
        }
        _ => return Err(DocumentError::schema("requirements", "expected a list or mapping")),
    }

    for (class, body, path) in items {
        match class.as_str() {
            INLINE_EXPRESSION_CLASS => {
                if set.inline_expression.is_some() {
                    return Err(DocumentError::schema(
                        path,
                        "at most one InlinePythonRequirement is allowed",
                    ));
                }
                let lib_path = format!("{path}.expressionLib");
                let sources = match body.get("expressionLib") {
                    None | Some(Value::Null) => Vec::new(),
                    Some(Value::Sequence(seq)) => seq
                        .iter()
                        .enumerate()
                        .map(|(i, s)| match s {
                            Value::String(s) => Ok(s.clone()),
                            _ => Err(DocumentError::schema(format!("{lib_path}[{i}]"), "expected a string")),
                        })
                        .collect::<Result<Vec<_>>>()?,
                    Some(Value::String(s)) => vec![s.clone()],
                    Some(_) => return Err(DocumentError::schema(lib_path, "expected a list of strings")),
                };
                set.inline_expression = Some(sources);
            }
            STEP_INPUT_EXPRESSION_CLASS => set.step_input_expression = true,
            _ => set.unknown.push(class),
        }
    }
    Ok(set)
}

fn empty_mapping() -> &'static Mapping {
    static EMPTY: std::sync::OnceLock<Mapping> = std::sync::OnceLock::new();
    EMPTY.get_or_init(Mapping::new)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn error(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        }
    }

    fn warning(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}: {}: {}", self.path, self.message)
    }
}

pub fn validate_tool(doc: &ToolDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for (i, input) in doc.inputs.iter().enumerate() {
        if !seen.insert(input.id.as_str()) {
            out.push(Diagnostic::error(
                format!("inputs[{i}]"),
                format!("duplicate input id `{}`", input.id),
            ));
        }
    }
    let mut seen = HashSet::new();
    for (i, output) in doc.outputs.iter().enumerate() {
        if !seen.insert(output.id.as_str()) {
            out.push(Diagnostic::error(
                format!("outputs[{i}]"),
                format!("duplicate output id `{}`", output.id),
            ));
        }
        if output.kind == OutputKind::File && output.glob_pattern.is_none() {
            out.push(Diagnostic::error(
                format!("outputs[{i}]"),
                format!("File output `{}` has no outputBinding.glob", output.id),
            ));
        }
    }

    let known: HashSet<&str> = doc.inputs.iter().map(|p| p.id.as_str()).collect();
    let check_refs = |refs: Vec<String>, path: &str, out: &mut Vec<Diagnostic>| {
        for id in refs {
            if !known.contains(id.as_str()) {
                out.push(Diagnostic::error(
                    path,
                    format!("reference to unknown input `{id}`"),
                ));
            }
        }
    };

    let has_lib = doc.requirements.inline_expression.is_some();
    let mut uses_templates = Vec::new();
    for (i, arg) in doc.arguments.iter().enumerate() {
        let path = format!("arguments[{i}]");
        match arg {
            ArgumentEntry::Literal(text) => check_refs(expr::scan_references(text), &path, &mut out),
            ArgumentEntry::Template(raw) => {
                uses_templates.push(path.clone());
                match Template::parse(raw) {
                    Ok(t) => check_refs(t.references(), &path, &mut out),
                    Err(e) => out.push(Diagnostic::error(&path, e.to_string())),
                }
            }
        }
    }
    for (i, input) in doc.inputs.iter().enumerate() {
        if let Some(raw) = &input.validate_template {
            let path = format!("inputs[{i}].validate");
            uses_templates.push(path.clone());
            match Template::parse(raw) {
                Ok(t) => check_refs(t.references(), &path, &mut out),
                Err(e) => out.push(Diagnostic::error(&path, e.to_string())),
            }
        }
    }
    for (i, output) in doc.outputs.iter().enumerate() {
        if let Some(glob) = &output.glob_pattern {
            check_refs(
                expr::scan_references(glob),
                &format!("outputs[{i}].outputBinding.glob"),
                &mut out,
            );
        }
    }
    for (name, field) in [(&doc.stdout_name, "stdout"), (&doc.stderr_name, "stderr")] {
        if let Some(name) = name {
            check_refs(expr::scan_references(name), field, &mut out);
        }
    }

    if !has_lib {
        for path in uses_templates {
            out.push(Diagnostic::error(
                path,
                format!("expression template used but no {INLINE_EXPRESSION_CLASS} is declared"),
            ));
        }
    } else if let Some(sources) = &doc.requirements.inline_expression {
        if let Err(e) = expr::parse_expression_lib(sources) {
            out.push(Diagnostic::error(
                "requirements.InlinePythonRequirement.expressionLib",
                e.to_string(),
            ));
        }
    }

    for class in &doc.requirements.unknown {
        out.push(Diagnostic::warning(
            "requirements",
            format!("unknown requirement class `{class}` ignored"),
        ));
    }
    out
}

/// Debug emitter for the supported subset; `parse_tool` reads its output back
/// into an equal document.
pub fn to_yaml(doc: &ToolDocument) -> String {
    fn s(text: &str) -> Value {
        Value::String(text.to_string())
    }
    let mut root = Mapping::new();
    root.insert(s("cwlVersion"), s(&doc.cwl_version));
    root.insert(s("class"), s("CommandLineTool"));
    if let Some(d) = &doc.doc {
        root.insert(s("doc"), s(d));
    }
    root.insert(
        s("baseCommand"),
        Value::Sequence(doc.base_command.iter().map(|w| s(w)).collect()),
    );

    if doc.requirements != RequirementSet::default() {
        let mut reqs = Vec::new();
        if let Some(lib) = &doc.requirements.inline_expression {
            let mut m = Mapping::new();
            m.insert(s("class"), s(INLINE_EXPRESSION_CLASS));
            m.insert(s("expressionLib"), Value::Sequence(lib.iter().map(|l| s(l)).collect()));
            reqs.push(Value::Mapping(m));
        }
        if doc.requirements.step_input_expression {
            let mut m = Mapping::new();
            m.insert(s("class"), s(STEP_INPUT_EXPRESSION_CLASS));
            reqs.push(Value::Mapping(m));
        }
        for class in &doc.requirements.unknown {
            let mut m = Mapping::new();
            m.insert(s("class"), s(class));
            reqs.push(Value::Mapping(m));
        }
        root.insert(s("requirements"), Value::Sequence(reqs));
    }

    let inputs = doc
        .inputs
        .iter()
        .map(|p| {
            let mut m = Mapping::new();
            m.insert(s("id"), s(&p.id));
            let ty = if p.optional {
                format!("{}?", p.value_type)
            } else {
                p.value_type.to_string()
            };
            m.insert(s("type"), s(&ty));
            if let Some(d) = &p.doc {
                m.insert(s("doc"), s(d));
            }
            if let Some(v) = &p.default_value {
                m.insert(s("default"), v.to_yaml());
            }
            if let Some(b) = &p.binding {
                let mut bm = Mapping::new();
                bm.insert(s("position"), Value::Number(b.position.into()));
                if let Some(prefix) = &b.prefix {
                    bm.insert(s("prefix"), s(prefix));
                }
                bm.insert(s("separate"), Value::Bool(b.separate));
                m.insert(s("inputBinding"), Value::Mapping(bm));
            }
            if let Some(v) = &p.validate_template {
                m.insert(s("validate"), s(v));
            }
            Value::Mapping(m)
        })
        .collect();
    root.insert(s("inputs"), Value::Sequence(inputs));

    let outputs = doc
        .outputs
        .iter()
        .map(|o| {
            let mut m = Mapping::new();
            m.insert(s("id"), s(&o.id));
            let ty = match o.kind {
                OutputKind::Stdout => "stdout",
                OutputKind::Stderr => "stderr",
                OutputKind::File => "File",
            };
            m.insert(s("type"), s(ty));
            if let Some(g) = &o.glob_pattern {
                let mut b = Mapping::new();
                b.insert(s("glob"), s(g));
                m.insert(s("outputBinding"), Value::Mapping(b));
            }
            Value::Mapping(m)
        })
        .collect();
    root.insert(s("outputs"), Value::Sequence(outputs));

    if !doc.arguments.is_empty() {
        root.insert(
            s("arguments"),
            Value::Sequence(doc.arguments.iter().map(|a| s(a.raw())).collect()),
        );
    }
    if let Some(name) = &doc.stdout_name {
        root.insert(s("stdout"), s(name));
    }
    if let Some(name) = &doc.stderr_name {
        root.insert(s("stderr"), s(name));
    }
    serde_yaml::to_string(&Value::Mapping(root)).expect("in-memory YAML serializes")
}
