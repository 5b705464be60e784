use std::collections::HashMap;

use super::ast::{BinOp, CmpOp, Expr, FPart, FunctionDef, Stmt, UnaryOp};
use super::value::{title_case, Value};
use super::{ExpressionProgram, ExprError};

/// Nested function calls allowed before evaluation is cut off.
pub const MAX_CALL_DEPTH: usize = 128;

type Locals = HashMap<String, Value>;
type Result<T> = std::result::Result<T, ExprError>;

enum Flow {
    Normal,
    Return(Value),
}

pub(crate) struct Interpreter<'p> {
    program: &'p ExpressionProgram,
    steps: u64,
    limit: u64,
    depth: usize,
}

fn type_error(message: impl Into<String>) -> ExprError {
    ExprError::Type(message.into())
}

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p ExpressionProgram, limit: u64) -> Self {
        Interpreter {
            program,
            steps: 0,
            limit,
            depth: 0,
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(ExprError::StepLimitExceeded {
                limit: self.limit,
                reason: "step budget exhausted".into(),
            });
        }
        Ok(())
    }

    pub fn eval_top(&mut self, expr: &Expr) -> Result<Value> {
        self.eval(expr, &Locals::new())
    }

    fn eval(&mut self, expr: &Expr, locals: &Locals) -> Result<Value> {
        self.tick()?;
        match expr {
            Expr::Literal(v) | Expr::Bound(v) => Ok(v.clone()),
            Expr::Reference(id) => Err(ExprError::UnknownReference(id.clone())),
            Expr::Name(name) => match locals.get(name) {
                Some(v) => Ok(v.clone()),
                None if self.program.function(name).is_some() || is_builtin(name) => {
                    Err(type_error(format!("function `{name}` used as a value")))
                }
                None => Err(ExprError::UndefinedName(name.clone())),
            },
            Expr::FString(parts) => {
                let mut out = String::new();
                for part in parts {
                    match part {
                        FPart::Literal(text) => out.push_str(text),
                        FPart::Expr(e) => out.push_str(&self.eval(e, locals)?.to_string()),
                    }
                }
                Ok(Value::Str(out))
            }
            Expr::List(items) => Ok(Value::List(
                items
                    .iter()
                    .map(|e| self.eval(e, locals))
                    .collect::<Result<_>>()?,
            )),
            Expr::Unary(op, inner) => {
                let v = self.eval(inner, locals)?;
                match (op, v) {
                    (UnaryOp::Not, v) => Ok(Value::Bool(!v.truthy())),
                    (UnaryOp::Neg, Value::Int(i)) => i
                        .checked_neg()
                        .map(Value::Int)
                        .ok_or_else(|| type_error("integer overflow")),
                    (UnaryOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
                    (UnaryOp::Pos, v @ (Value::Int(_) | Value::Float(_))) => Ok(v),
                    (_, v) => Err(type_error(format!(
                        "bad operand type for unary operator: '{}'",
                        v.type_name()
                    ))),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = self.eval(a, locals)?;
                let b = self.eval(b, locals)?;
                arithmetic(*op, a, b)
            }
            Expr::Compare(first, rest) => {
                let mut lhs = self.eval(first, locals)?;
                for (op, e) in rest {
                    let rhs = self.eval(e, locals)?;
                    if !compare(*op, &lhs, &rhs)? {
                        return Ok(Value::Bool(false));
                    }
                    lhs = rhs;
                }
                Ok(Value::Bool(true))
            }
            Expr::And(a, b) => {
                let a = self.eval(a, locals)?;
                if !a.truthy() {
                    return Ok(a);
                }
                self.eval(b, locals)
            }
            Expr::Or(a, b) => {
                let a = self.eval(a, locals)?;
                if a.truthy() {
                    return Ok(a);
                }
                self.eval(b, locals)
            }
            Expr::Call(name, args) => {
                let args = args
                    .iter()
                    .map(|e| self.eval(e, locals))
                    .collect::<Result<Vec<_>>>()?;
                self.call(name, args)
            }
            Expr::Method(recv, name, args) => {
                let recv = self.eval(recv, locals)?;
                let args = args
                    .iter()
                    .map(|e| self.eval(e, locals))
                    .collect::<Result<Vec<_>>>()?;
                method(recv, name, args)
            }
        }
    }

    fn call(&mut self, name: &str, args: Vec<Value>) -> Result<Value> {
        if let Some(def) = self.program.function(name) {
            return self.call_function(def, args);
        }
        builtin(name, args)
    }

    fn call_function(&mut self, def: &FunctionDef, args: Vec<Value>) -> Result<Value> {
        if args.len() != def.params.len() {
            return Err(type_error(format!(
                "{}() takes {} argument(s) but {} were given",
                def.name,
                def.params.len(),
                args.len()
            )));
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(ExprError::StepLimitExceeded {
                limit: self.limit,
                reason: format!("call depth exceeded {MAX_CALL_DEPTH}"),
            });
        }
        self.depth += 1;
        let mut locals: Locals = def.params.iter().cloned().zip(args).collect();
        let flow = self.exec_block(&def.body, &mut locals);
        self.depth -= 1;
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::None),
        }
    }

    fn exec_block(&mut self, stmts: &[Stmt], locals: &mut Locals) -> Result<Flow> {
        for stmt in stmts {
            self.tick()?;
            match stmt {
                Stmt::Return(None) => return Ok(Flow::Return(Value::None)),
                Stmt::Return(Some(e)) => return Ok(Flow::Return(self.eval(e, locals)?)),
                Stmt::Raise(e) => {
                    let message = self.eval(e, locals)?;
                    return Err(ExprError::Raised(message.to_string()));
                }
                Stmt::Assign(name, e) => {
                    let v = self.eval(e, locals)?;
                    locals.insert(name.clone(), v);
                }
                Stmt::Expr(e) => {
                    self.eval(e, locals)?;
                }
                Stmt::If {
                    branches,
                    otherwise,
                } => {
                    let mut taken = None;
                    for (cond, body) in branches {
                        if self.eval(cond, locals)?.truthy() {
                            taken = Some(body);
                            break;
                        }
                    }
                    if let Some(body) = taken.or(otherwise.as_ref()) {
                        if let Flow::Return(v) = self.exec_block(body, locals)? {
                            return Ok(Flow::Return(v));
                        }
                    }
                }
            }
        }
        Ok(Flow::Normal)
    }
}

fn arithmetic(op: BinOp, a: Value, b: Value) -> Result<Value> {
    use Value::{Float, Int};
    let overflow = || type_error("integer overflow");
    let symbol = match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Mod => "%",
    };
    let (x, y) = match (&a, &b) {
        (Int(x), Int(y)) => {
            let (x, y) = (*x, *y);
            return match op {
                BinOp::Add => x.checked_add(y).map(Int).ok_or_else(overflow),
                BinOp::Sub => x.checked_sub(y).map(Int).ok_or_else(overflow),
                BinOp::Mul => x.checked_mul(y).map(Int).ok_or_else(overflow),
                BinOp::Div if y == 0 => Err(ExprError::Raised("division by zero".into())),
                BinOp::Div => Ok(Float(x as f64 / y as f64)),
                BinOp::Mod if y == 0 => Err(ExprError::Raised("integer modulo by zero".into())),
                // Result takes the sign of the divisor.
                BinOp::Mod => x
                    .checked_rem(y)
                    .map(|r| if r != 0 && (r < 0) != (y < 0) { r + y } else { r })
                    .map(Int)
                    .ok_or_else(overflow),
            };
        }
        (Int(x), Float(y)) => (*x as f64, *y),
        (Float(x), Int(y)) => (*x, *y as f64),
        (Float(x), Float(y)) => (*x, *y),
        _ => {
            return Err(type_error(format!(
                "unsupported operand type(s) for {symbol}: '{}' and '{}'",
                a.type_name(),
                b.type_name()
            )))
        }
    };
    Ok(Float(match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div if y == 0.0 => return Err(ExprError::Raised("float division by zero".into())),
        BinOp::Div => x / y,
        BinOp::Mod if y == 0.0 => return Err(ExprError::Raised("float modulo".into())),
        BinOp::Mod => {
            let r = x % y;
            if r != 0.0 && (r < 0.0) != (y < 0.0) {
                r + y
            } else {
                r
            }
        }
    }))
}

fn equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Float(y)) | (Value::Float(y), Value::Int(x)) => (*x as f64) == *y,
        _ => a == b,
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool> {
    use std::cmp::Ordering;
    match op {
        CmpOp::Eq => return Ok(equal(a, b)),
        CmpOp::Ne => return Ok(!equal(a, b)),
        _ => {}
    }
    let ord = match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Int(x), Value::Float(y)) => (*x as f64).partial_cmp(y),
        (Value::Float(x), Value::Int(y)) => x.partial_cmp(&(*y as f64)),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        _ => {
            return Err(type_error(format!(
                "ordering not supported between '{}' and '{}'",
                a.type_name(),
                b.type_name()
            )))
        }
    };
    // NaN compares false for every ordering.
    let Some(ord) = ord else { return Ok(false) };
    Ok(match op {
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Eq | CmpOp::Ne => unreachable!(),
    })
}

const BUILTINS: &[&str] = &["len", "str", "int", "float"];

fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

fn expect_arity(name: &str, args: &[Value], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(type_error(format!(
            "{name}() takes {n} argument(s) but {} were given",
            args.len()
        )));
    }
    Ok(())
}

fn builtin(name: &str, mut args: Vec<Value>) -> Result<Value> {
    if !is_builtin(name) {
        return Err(ExprError::UndefinedName(name.to_string()));
    }
    expect_arity(name, &args, 1)?;
    let arg = args.pop().expect("arity checked");
    match name {
        "len" => match &arg {
            Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
            Value::List(items) => Ok(Value::Int(items.len() as i64)),
            other => Err(type_error(format!("object of type '{}' has no len()", other.type_name()))),
        },
        "str" => Ok(Value::Str(arg.to_string())),
        "int" => match arg {
            Value::Int(i) => Ok(Value::Int(i)),
            Value::Bool(b) => Ok(Value::Int(b as i64)),
            Value::Float(f) if f.is_finite() && f.trunc().abs() < 9.2e18 => Ok(Value::Int(f.trunc() as i64)),
            Value::Float(f) => Err(ExprError::Raised(format!("cannot convert float {f} to integer"))),
            Value::Str(s) => s
                .trim()
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| ExprError::Raised(format!("invalid literal for int() with base 10: '{s}'"))),
            other => Err(type_error(format!("int() argument must be a string or a number, not '{}'", other.type_name()))),
        },
        "float" => match arg {
            Value::Int(i) => Ok(Value::Float(i as f64)),
            Value::Float(f) => Ok(Value::Float(f)),
            Value::Bool(b) => Ok(Value::Float(b as i64 as f64)),
            Value::Str(s) => s
                .trim()
                .parse::<f64>()
                .map(Value::Float)
                .map_err(|_| ExprError::Raised(format!("could not convert string to float: '{s}'"))),
            other => Err(type_error(format!("float() argument must be a string or a number, not '{}'", other.type_name()))),
        },
        _ => unreachable!("checked by is_builtin"),
    }
}

fn str_arg<'a>(method: &str, v: &'a Value) -> Result<&'a str> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(type_error(format!(
            "{method}() argument must be str, not '{}'",
            other.type_name()
        ))),
    }
}

fn int_arg(method: &str, v: &Value) -> Result<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(type_error(format!(
            "{method}() argument must be int, not '{}'",
            other.type_name()
        ))),
    }
}

fn method(recv: Value, name: &str, args: Vec<Value>) -> Result<Value> {
    let Value::Str(s) = &recv else {
        return Err(type_error(format!(
            "'{}' object has no attribute '{name}'",
            recv.type_name()
        )));
    };
    let arity = |lo: usize, hi: usize| -> Result<()> {
        if args.len() < lo || args.len() > hi {
            return Err(type_error(format!(
                "{name}() takes {lo}..{hi} argument(s) but {} were given",
                args.len()
            )));
        }
        Ok(())
    };
    match name {
        "title" => {
            arity(0, 0)?;
            Ok(Value::Str(title_case(s)))
        }
        "lower" => {
            arity(0, 0)?;
            Ok(Value::Str(s.to_lowercase()))
        }
        "upper" => {
            arity(0, 0)?;
            Ok(Value::Str(s.to_uppercase()))
        }
        "strip" => {
            arity(0, 1)?;
            match args.first() {
                None | Some(Value::None) => Ok(Value::Str(s.trim().to_string())),
                Some(chars) => {
                    let chars = str_arg(name, chars)?;
                    Ok(Value::Str(s.trim_matches(|c| chars.contains(c)).to_string()))
                }
            }
        }
        "startswith" => {
            arity(1, 1)?;
            Ok(Value::Bool(s.starts_with(str_arg(name, &args[0])?)))
        }
        "endswith" => {
            arity(1, 1)?;
            Ok(Value::Bool(s.ends_with(str_arg(name, &args[0])?)))
        }
        "replace" => {
            arity(2, 3)?;
            let old = str_arg(name, &args[0])?;
            let new = str_arg(name, &args[1])?;
            match args.get(2) {
                Some(count) => {
                    let count = int_arg(name, count)?;
                    if count < 0 {
                        Ok(Value::Str(s.replace(old, new)))
                    } else {
                        Ok(Value::Str(s.replacen(old, new, count as usize)))
                    }
                }
                None => Ok(Value::Str(s.replace(old, new))),
            }
        }
        "split" => {
            arity(0, 2)?;
            let maxsplit = match args.get(1) {
                Some(v) => int_arg(name, v)?,
                None => -1,
            };
            let pieces: Vec<String> = match args.first() {
                None | Some(Value::None) => split_whitespace(s, maxsplit),
                Some(sep) => {
                    let sep = str_arg(name, sep)?;
                    if sep.is_empty() {
                        return Err(ExprError::Raised("empty separator".into()));
                    }
                    if maxsplit < 0 {
                        s.split(sep).map(str::to_string).collect()
                    } else {
                        s.splitn(maxsplit as usize + 1, sep).map(str::to_string).collect()
                    }
                }
            };
            Ok(Value::List(pieces.into_iter().map(Value::Str).collect()))
        }
        "join" => {
            arity(1, 1)?;
            let Value::List(items) = &args[0] else {
                return Err(type_error("join() argument must be a list of str"));
            };
            let parts = items
                .iter()
                .map(|v| str_arg(name, v).map(str::to_string))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::Str(parts.join(s)))
        }
        _ => Err(type_error(format!("'str' object has no attribute '{name}'"))),
    }
}

fn split_whitespace(s: &str, maxsplit: i64) -> Vec<String> {
    if maxsplit < 0 {
        return s.split_whitespace().map(str::to_string).collect();
    }
    let mut out = Vec::new();
    let mut rest = s.trim_start();
    while !rest.is_empty() {
        if out.len() as i64 == maxsplit {
            out.push(rest.to_string());
            break;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        out.push(rest[..end].to_string());
        rest = rest[end..].trim_start();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expression_lib, parser::parse_expression};
    use super::*;

    fn eval_with(lib: &str, src: &str) -> Result<Value> {
        let program = parse_expression_lib(&[lib.to_string()]).unwrap();
        let expr = parse_expression(src).unwrap();
        Interpreter::new(&program, 1_000_000).eval_top(&expr)
    }

    fn eval(src: &str) -> Result<Value> {
        eval_with("", src)
    }

    #[test]
    fn arithmetic_rules() {
        assert_eq!(eval("1+2").unwrap(), Value::Int(3));
        assert_eq!(eval("7/2").unwrap(), Value::Float(3.5));
        assert_eq!(eval("4/2").unwrap(), Value::Float(2.0));
        assert_eq!(eval("-7 % 3").unwrap(), Value::Int(2));
        assert_eq!(eval("7 % -3").unwrap(), Value::Int(-2));
        assert_eq!(eval("1 + 0.5").unwrap(), Value::Float(1.5));
        assert!(matches!(eval("'a' + 'b'"), Err(ExprError::Type(_))));
        assert!(matches!(eval("True + 1"), Err(ExprError::Type(_))));
        assert!(matches!(eval("1/0"), Err(ExprError::Raised(_))));
        assert!(matches!(eval("9223372036854775807 + 1"), Err(ExprError::Type(_))));
    }

    #[test]
    fn comparisons_and_logic() {
        assert_eq!(eval("1 < 2 < 3").unwrap(), Value::Bool(true));
        assert_eq!(eval("1 < 3 < 2").unwrap(), Value::Bool(false));
        assert_eq!(eval("1 == 1.0").unwrap(), Value::Bool(true));
        assert_eq!(eval("'a' == 1").unwrap(), Value::Bool(false));
        assert_eq!(eval("'' or 'x'").unwrap(), Value::Str("x".into()));
        assert_eq!(eval("0 and 1/0").unwrap(), Value::Int(0));
        assert_eq!(eval("not ''").unwrap(), Value::Bool(true));
        assert!(matches!(eval("'a' < 1"), Err(ExprError::Type(_))));
    }

    #[test]
    fn string_methods() {
        assert_eq!(eval("'hello world'.title()").unwrap(), Value::Str("Hello World".into()));
        assert_eq!(eval("'  x '.strip()").unwrap(), Value::Str("x".into()));
        assert_eq!(eval("'xxaxx'.strip('x')").unwrap(), Value::Str("a".into()));
        assert_eq!(eval("'DATA.CSV'.lower().endswith('.csv')").unwrap(), Value::Bool(true));
        assert_eq!(eval("'a-b-c'.replace('-', '+', 1)").unwrap(), Value::Str("a+b-c".into()));
        assert_eq!(eval("'-'.join(' a  b c '.split())").unwrap(), Value::Str("a-b-c".into()));
        assert_eq!(eval("'a,b,,c'.split(',')").unwrap().to_string(), "['a', 'b', '', 'c']");
        assert_eq!(eval("' a b c'.split(None, 1)").unwrap().to_string(), "['a', 'b c']");
        assert_eq!(eval("len('héllo')").unwrap(), Value::Int(5));
        assert!(matches!(eval("(1).upper()"), Err(ExprError::Type(_))));
        assert!(matches!(eval("'a'.format()"), Err(ExprError::Type(_))));
    }

    #[test]
    fn builtins() {
        assert_eq!(eval("int('42')").unwrap(), Value::Int(42));
        assert_eq!(eval("int(3.9)").unwrap(), Value::Int(3));
        assert_eq!(eval("float('1.5')").unwrap(), Value::Float(1.5));
        assert_eq!(eval("str(1.0)").unwrap(), Value::Str("1.0".into()));
        assert!(matches!(eval("int('x')"), Err(ExprError::Raised(_))));
        assert!(matches!(eval("open('x')"), Err(ExprError::UndefinedName(_))));
    }

    #[test]
    fn functions_and_raise() {
        let lib = "def check(x):\n    if x > 3:\n        raise Exception(f\"too big: {x}\")\n    y = x * 2\n    return y\n";
        assert_eq!(eval_with(lib, "check(2)").unwrap(), Value::Int(4));
        match eval_with(lib, "check(5)") {
            Err(ExprError::Raised(m)) => assert_eq!(m, "too big: 5"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(eval_with(lib, "check(1, 2)"), Err(ExprError::Type(_))));
        assert!(matches!(eval_with(lib, "y"), Err(ExprError::UndefinedName(_))));
    }

    #[test]
    fn falling_off_the_end_returns_none() {
        assert_eq!(eval_with("def f():\n    x = 1\n", "f()").unwrap(), Value::None);
    }

    #[test]
    fn unbounded_recursion_hits_the_limit() {
        let lib = "def f(x):\n    return f(x + 1)\n";
        assert!(matches!(
            eval_with(lib, "f(0)"),
            Err(ExprError::StepLimitExceeded { .. })
        ));
    }

    #[test]
    fn step_budget_is_enforced() {
        // Two-way recursion stays shallow per branch but explodes in total work.
        let lib = "def fib(n):\n    if n < 2:\n        return n\n    return fib(n - 1) + fib(n - 2)\n";
        let program = parse_expression_lib(&[lib.to_string()]).unwrap();
        let expr = parse_expression("fib(40)").unwrap();
        let err = Interpreter::new(&program, 10_000).eval_top(&expr).unwrap_err();
        assert!(matches!(err, ExprError::StepLimitExceeded { limit: 10_000, .. }));
        assert_eq!(eval_with(lib, "fib(10)").unwrap(), Value::Int(55));
    }
}
