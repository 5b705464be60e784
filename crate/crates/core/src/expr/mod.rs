//! Inline expression dialect.
//!
//! A tool can declare a library of functions written in a small Python
//! subset and call them from `f"..."` templates in `arguments` and in the
//! per-input `validate` field. Inputs are referenced with `$(inputs.<id>)`;
//! a reference is bound to the input's value as an atomic node, so input
//! text is never parsed as code. Evaluation has no I/O, clock or randomness
//! and runs under a step budget.
//!
//! Grammar (EBNF):
//!
//! ```text
//! program    = { funcdef | STRING NEWLINE } ;
//! funcdef    = "def" NAME "(" [ NAME { "," NAME } ] ")" ":" block ;
//! block      = simple_stmt | NEWLINE INDENT { stmt } DEDENT ;
//! stmt       = if_stmt | simple_stmt ;
//! if_stmt    = "if" expr ":" block { "elif" expr ":" block } [ "else" ":" block ] ;
//! simple_stmt= ( "return" [ expr ] | "raise" "Exception" "(" expr ")"
//!              | NAME "=" expr | expr ) NEWLINE ;
//! expr       = or_expr ;
//! or_expr    = and_expr { "or" and_expr } ;
//! and_expr   = not_expr { "and" not_expr } ;
//! not_expr   = "not" not_expr | comparison ;
//! comparison = sum { ( "==" | "!=" | "<" | "<=" | ">" | ">=" ) sum } ;
//! sum        = term { ( "+" | "-" ) term } ;
//! term       = unary { ( "*" | "/" | "%" ) unary } ;
//! unary      = ( "-" | "+" ) unary | postfix ;
//! postfix    = atom { "(" args ")" | "." NAME "(" args ")" } ;
//! atom       = INT | FLOAT | STRING { STRING } | FSTRING | "True" | "False"
//!            | "None" | NAME | REFERENCE | "(" expr ")" | "[" args "]" ;
//! args       = [ expr { "," expr } ] ;
//! REFERENCE  = "$(inputs." IDENT ")" ;
//! template   = 'f"' { TEXT | "{{" | "}}" | "{" expr "}" } '"' ;
//! ```
//!
//! Methods are available on strings only: `title lower upper strip
//! startswith endswith replace split join`. Builtins: `len str int float`.

mod ast;
mod interp;
mod lexer;
mod parser;
mod template;
mod value;

use std::fmt;

use indexmap::IndexMap;

pub use ast::{Expr, FunctionDef};
pub use interp::MAX_CALL_DEPTH;
pub use template::{
    detect_template, looks_like_template, scan_references, substitute_references, Interpolation,
    Segment, Template,
};
pub use value::{render_float, title_case, Value};

use crate::binding::{InputSet, InputValue};
use crate::document::{InputParameter, ToolDocument};

/// Interpreter steps allowed per template evaluation unless configured.
pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("function `{0}` is defined more than once")]
    DuplicateFunction(String),
    #[error("template syntax error: {message}\n{}", Template::caret(raw, *offset))]
    TemplateSyntax {
        raw: String,
        offset: usize,
        message: String,
    },
    #[error("reference to unknown input `{0}`")]
    UnknownReference(String),
    #[error("input `{0}` refers to a file that has not been produced yet")]
    UnresolvedFuture(String),
    #[error("{0}")]
    Raised(String),
    #[error("expression exceeded its evaluation budget of {limit} steps ({reason})")]
    StepLimitExceeded { limit: u64, reason: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("name `{0}` is not defined")]
    UndefinedName(String),
    #[error("{source}\n{}", Template::caret(raw, *offset))]
    InTemplate {
        raw: String,
        offset: usize,
        source: Box<ExprError>,
    },
}

impl ExprError {
    /// The underlying error with template context stripped.
    pub fn root(&self) -> &ExprError {
        match self {
            ExprError::InTemplate { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Parsed function library of a tool.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionProgram {
    functions: IndexMap<String, FunctionDef>,
    source_origin: String,
    step_limit: u64,
}

impl Default for ExpressionProgram {
    fn default() -> Self {
        ExpressionProgram {
            functions: IndexMap::new(),
            source_origin: String::new(),
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

impl ExpressionProgram {
    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.source_origin = origin.into();
        self
    }

    pub fn with_step_limit(mut self, limit: u64) -> Self {
        self.step_limit = limit;
        self
    }

    pub fn step_limit(&self) -> u64 {
        self.step_limit
    }

    pub fn source_origin(&self) -> &str {
        &self.source_origin
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.functions.values()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// Concatenates the sources in order and parses the result.
pub fn parse_expression_lib(sources: &[String]) -> Result<ExpressionProgram, ExprError> {
    let joined = sources.join("\n");
    let defs = parser::parse_program(&joined)?;
    let mut functions = IndexMap::with_capacity(defs.len());
    for def in defs {
        if functions.contains_key(&def.name) {
            return Err(ExprError::DuplicateFunction(def.name));
        }
        functions.insert(def.name.clone(), def);
    }
    Ok(ExpressionProgram {
        functions,
        ..ExpressionProgram::default()
    })
}

fn input_to_value(id: &str, value: Option<&InputValue>) -> Result<Value, ExprError> {
    Ok(match value {
        None => Value::None,
        Some(InputValue::String(s)) => Value::Str(s.clone()),
        Some(InputValue::Int(i)) => Value::Int(*i),
        Some(InputValue::Float(f)) => Value::Float(*f),
        Some(InputValue::Bool(b)) => Value::Bool(*b),
        Some(InputValue::File(f)) => {
            if f.is_pending() {
                return Err(ExprError::UnresolvedFuture(id.to_string()));
            }
            Value::Str(f.path.to_string_lossy().into_owned())
        }
    })
}

/// Replaces every `$(inputs.<id>)` node with a bound value node.
pub fn resolve_references(tpl: &Template, inputs: &InputSet) -> Result<Template, ExprError> {
    let mut out = tpl.clone();
    for seg in out.segments_mut() {
        if let Segment::Interpolation(interp) = seg {
            let expr = std::mem::replace(&mut interp.expr, Expr::Literal(Value::None));
            interp.expr = expr.try_map(&mut |node| match node {
                Expr::Reference(id) => {
                    if !inputs.is_declared(&id) {
                        return Err(ExprError::UnknownReference(id));
                    }
                    Ok(Expr::Bound(input_to_value(&id, inputs.get(&id))?))
                }
                other => Ok(other),
            })?;
        }
    }
    Ok(out)
}

/// Evaluates a template whose references have been resolved.
pub fn evaluate_template(program: &ExpressionProgram, tpl: &Template) -> Result<String, ExprError> {
    let mut interp = interp::Interpreter::new(program, program.step_limit);
    let mut out = String::new();
    for seg in tpl.segments() {
        match seg {
            Segment::Literal(text) => out.push_str(text),
            Segment::Interpolation(i) => {
                let value = interp.eval_top(&i.expr).map_err(|e| ExprError::InTemplate {
                    raw: tpl.raw().to_string(),
                    offset: i.offset,
                    source: Box::new(e),
                })?;
                out.push_str(&value.to_string());
            }
        }
    }
    Ok(out)
}

/// Parses, resolves and evaluates in one step.
pub fn render(program: &ExpressionProgram, raw: &str, inputs: &InputSet) -> Result<String, ExprError> {
    let tpl = Template::parse(raw)?;
    let tpl = resolve_references(&tpl, inputs)?;
    evaluate_template(program, &tpl)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("validation of input `{input_id}` failed: {message}")]
pub struct ValidationFailed {
    pub input_id: String,
    pub message: String,
}

/// Runs every input's `validate` template in declaration order; the first
/// failure is returned.
pub fn run_validations(
    doc: &ToolDocument,
    inputs: &InputSet,
    program: &ExpressionProgram,
) -> Result<(), ValidationFailed> {
    run_validations_where(doc, inputs, program, |_| true)
}

/// As [`run_validations`], restricted to parameters accepted by `filter`.
pub fn run_validations_where(
    doc: &ToolDocument,
    inputs: &InputSet,
    program: &ExpressionProgram,
    mut filter: impl FnMut(&InputParameter) -> bool,
) -> Result<(), ValidationFailed> {
    for param in &doc.inputs {
        let Some(raw) = &param.validate_template else { continue };
        if !filter(param) {
            continue;
        }
        render(program, raw, inputs).map_err(|e| ValidationFailed {
            input_id: param.id.clone(),
            message: match e.root() {
                ExprError::Raised(message) => message.clone(),
                _ => e.to_string(),
            },
        })?;
    }
    Ok(())
}

impl fmt::Display for ExpressionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self
            .functions
            .values()
            .map(|d| format!("{}/{}", d.name, d.params.len()))
            .collect();
        write!(f, "[{}]", names.join(", "))
    }
}
