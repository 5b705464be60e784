//! Load a tool once and call it like a function.
//!
//! ```no_run
//! use cwlforge::engine::Engine;
//! use cwlforge::toolapp::{Overrides, ToolApp};
//!
//! let engine = Engine::serial("cwlforge-work").unwrap();
//! let echo = ToolApp::load("echo.cwl", &engine).unwrap();
//! let task = echo
//!     .call([("message", "Hello, World!")], &Overrides::stdout("hello.txt"))
//!     .unwrap();
//! let path = task.outputs()[0].wait().unwrap();
//! print!("{}", std::fs::read_to_string(path).unwrap());
//! ```

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::binding::{bind_arguments, coerce_inputs, BindContext, BindError, RawInputs, RawValue};
use crate::document::{self, Diagnostic, DocumentError, ToolDocument};
use crate::engine::{Engine, EnvPolicy, FailureKind, SubmitError, TaskFailure, TaskHandle, TaskSpec};
use crate::expr::{self, ExprError, ExpressionProgram, Template, ValidationFailed};

static NEXT_INVOCATION: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Document {
        path: String,
        #[source]
        source: DocumentError,
    },
    #[error("{path}: invalid tool:\n{}", diagnostics.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid { path: String, diagnostics: Vec<Diagnostic> },
    #[error("{path}: expression library: {source}")]
    Expression {
        path: String,
        #[source]
        source: ExprError,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum InvokeError {
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error(transparent)]
    Validation(#[from] ValidationFailed),
    #[error(transparent)]
    Submit(#[from] SubmitError),
}

/// Per-invocation replacements for the stdout/stderr file names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub stdout: Option<String>,
    pub stderr: Option<String>,
}

impl Overrides {
    pub fn stdout(name: impl Into<String>) -> Self {
        Overrides {
            stdout: Some(name.into()),
            stderr: None,
        }
    }
}

/// A validated tool bound to an engine. Cheap to clone; invocations share
/// nothing mutable.
#[derive(Clone)]
pub struct ToolApp {
    doc: Arc<ToolDocument>,
    program: Option<Arc<ExpressionProgram>>,
    engine: Engine,
    env_policy: EnvPolicy,
}

impl std::fmt::Debug for ToolApp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolApp")
            .field("origin", &self.doc.origin)
            .field("program", &self.program.as_ref().map(|p| p.to_string()))
            .finish()
    }
}

impl ToolApp {
    pub fn load(path: impl AsRef<Path>, engine: &Engine) -> Result<ToolApp, LoadError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: shown.clone(),
            source,
        })?;
        ToolApp::from_source(&text, &shown, engine)
    }

    /// As [`ToolApp::load`] with the document text already in hand; `origin`
    /// is used for diagnostics and to resolve relative default paths.
    pub fn from_source(text: &str, origin: &str, engine: &Engine) -> Result<ToolApp, LoadError> {
        let doc = document::parse_tool(text, origin).map_err(|source| LoadError::Document {
            path: origin.to_string(),
            source,
        })?;
        let diagnostics = document::validate_tool(&doc);
        for d in diagnostics.iter().filter(|d| !d.is_error()) {
            log::warn!("{origin}: {d}");
        }
        if diagnostics.iter().any(Diagnostic::is_error) {
            return Err(LoadError::Invalid {
                path: origin.to_string(),
                diagnostics: diagnostics.into_iter().filter(Diagnostic::is_error).collect(),
            });
        }
        let program = match &doc.requirements.inline_expression {
            Some(sources) => Some(Arc::new(
                expr::parse_expression_lib(sources)
                    .map_err(|source| LoadError::Expression {
                        path: origin.to_string(),
                        source,
                    })?
                    .with_origin(origin),
            )),
            None => None,
        };
        Ok(ToolApp {
            doc: Arc::new(doc),
            program,
            engine: engine.clone(),
            env_policy: EnvPolicy::Inherit,
        })
    }

    pub fn with_step_limit(mut self, limit: u64) -> Self {
        if let Some(p) = &self.program {
            self.program = Some(Arc::new(p.as_ref().clone().with_step_limit(limit)));
        }
        self
    }

    pub fn with_env_policy(mut self, policy: EnvPolicy) -> Self {
        self.env_policy = policy;
        self
    }

    pub fn document(&self) -> &ToolDocument {
        &self.doc
    }

    pub fn program(&self) -> Option<&ExpressionProgram> {
        self.program.as_deref()
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// Convenience form of [`ToolApp::invoke`] taking key/value pairs.
    pub fn call<K, V>(
        &self,
        inputs: impl IntoIterator<Item = (K, V)>,
        overrides: &Overrides,
    ) -> Result<TaskHandle, InvokeError>
    where
        K: Into<String>,
        V: Into<RawValue>,
    {
        let raw: RawInputs = inputs.into_iter().map(|(k, v)| (k.into(), v.into())).collect();
        self.invoke(&raw, overrides)
    }

    /// Coerces and validates `raw` now, then submits the task. Validations
    /// that read a still-pending file input run when the task is planned.
    pub fn invoke(&self, raw: &RawInputs, overrides: &Overrides) -> Result<TaskHandle, InvokeError> {
        let inputs = coerce_inputs(&self.doc, raw)?;
        let pending: BTreeSet<String> = inputs.pending_files().map(|(id, _)| id.to_string()).collect();
        let deferred: BTreeSet<String> = self
            .doc
            .inputs
            .iter()
            .filter(|p| {
                p.validate_template.as_deref().is_some_and(|raw| {
                    Template::parse(raw)
                        .map(|t| t.references().iter().any(|r| pending.contains(r)))
                        .unwrap_or(false)
                })
            })
            .map(|p| p.id.clone())
            .collect();

        let empty = ExpressionProgram::default();
        let program = self.program.as_deref().unwrap_or(&empty);
        expr::run_validations_where(&self.doc, &inputs, program, |p| !deferred.contains(&p.id))?;

        let dependencies = inputs.pending_files().map(|(_, f)| f).collect();
        let task_id = format!("{}-{}", self.doc.name(), NEXT_INVOCATION.fetch_add(1, Ordering::Relaxed));
        let doc = self.doc.clone();
        let program = self.program.clone();
        let overrides = overrides.clone();
        let plan_factory = Box::new(move |ctx: &crate::engine::PlanContext| {
            let mut inputs = inputs;
            inputs
                .resolve_pending(|id| ctx.resolved.get(&id).cloned())
                .map_err(|e| TaskFailure::new(FailureKind::PlanError, e.to_string()))?;
            let empty = ExpressionProgram::default();
            let program = program.as_deref().unwrap_or(&empty);
            if !deferred.is_empty() {
                expr::run_validations_where(&doc, &inputs, program, |p| deferred.contains(&p.id))
                    .map_err(|e| TaskFailure::new(FailureKind::ValidationFailed, e.to_string()))?;
            }
            let bind = BindContext {
                task_id: ctx.task_id.clone(),
                sandbox_root: ctx.sandbox_root.clone(),
                stdout_override: overrides.stdout,
                stderr_override: overrides.stderr,
            };
            bind_arguments(&doc, &inputs, Some(program), &bind)
                .map_err(|e| TaskFailure::new(FailureKind::PlanError, e.to_string()))
        });
        let spec = TaskSpec {
            task_id,
            output_ids: self.doc.outputs.iter().map(|o| o.id.clone()).collect(),
            dependencies,
            plan_factory,
            env_policy: self.env_policy.clone(),
        };
        Ok(self.engine.submit(spec)?)
    }
}
