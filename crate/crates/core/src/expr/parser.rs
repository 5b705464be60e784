use super::ast::{BinOp, CmpOp, Expr, FPart, FunctionDef, Stmt, UnaryOp};
use super::lexer::{unescape_str, Lexer, Tok, Token};
use super::template::{split_fstring, RawPart};
use super::value::Value;
use super::ExprError;

const MAX_NESTING: usize = 64;

pub(crate) fn parse_program(src: &str) -> Result<Vec<FunctionDef>, ExprError> {
    let tokens = Lexer::program(src).tokenize()?;
    let mut p = Parser::new(tokens);
    let mut defs = Vec::new();
    loop {
        match p.peek() {
            Tok::Eof => break,
            Tok::Newline => {
                p.advance();
            }
            Tok::Def => defs.push(p.function_def()?),
            // Module docstrings and stray string literals are ignored.
            Tok::Str(_) => {
                p.advance();
                p.end_of_statement()?;
            }
            _ => return Err(p.error_here("only function definitions are allowed at top level")),
        }
    }
    Ok(defs)
}

/// Parses a single expression, e.g. the inside of a template interpolation.
pub(crate) fn parse_expression(src: &str) -> Result<Expr, ExprError> {
    let tokens = Lexer::expression(src).tokenize()?;
    let mut p = Parser::new(tokens);
    let expr = p.expression()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    nesting: usize,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            nesting: 0,
        }
    }

    fn current(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek(&self) -> &Tok {
        &self.current().tok
    }

    fn advance(&mut self) -> Token {
        let t = self.current().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ExprError {
        let t = self.current();
        ExprError::Syntax {
            line: t.line,
            column: t.col,
            message: message.into(),
        }
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ExprError> {
        if self.is_op(op) {
            self.advance();
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{op}`")))
        }
    }

    fn expect_name(&mut self) -> Result<String, ExprError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.error_here("expected a name")),
        }
    }

    fn end_of_statement(&mut self) -> Result<(), ExprError> {
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            _ => Err(self.error_here("expected end of line")),
        }
    }

    fn function_def(&mut self) -> Result<FunctionDef, ExprError> {
        let line = self.advance().line;
        let name = self.expect_name()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.is_op(")") {
            let param = self.expect_name()?;
            if params.contains(&param) {
                return Err(self.error_here(format!("duplicate parameter `{param}`")));
            }
            params.push(param);
            if !self.is_op(")") {
                self.expect_op(",")?;
            }
        }
        self.expect_op(")")?;
        self.expect_op(":")?;
        let mut body = self.block()?;
        // Docstrings are accepted and dropped.
        while matches!(body.first(), Some(Stmt::Expr(Expr::Literal(Value::Str(_))))) {
            body.remove(0);
        }
        Ok(FunctionDef {
            name,
            params,
            body,
            line,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ExprError> {
        if *self.peek() != Tok::Newline {
            // Single-line suite: `if x: return y`
            let stmt = self.simple_statement()?;
            return Ok(vec![stmt]);
        }
        self.advance();
        if *self.peek() != Tok::Indent {
            return Err(self.error_here("expected an indented block"));
        }
        self.advance();
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Tok::Dedent => {
                    self.advance();
                    break;
                }
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                _ => stmts.push(self.statement()?),
            }
        }
        Ok(stmts)
    }

    fn statement(&mut self) -> Result<Stmt, ExprError> {
        match self.peek() {
            Tok::If => self.if_statement(),
            Tok::Def => Err(self.error_here("nested function definitions are not supported")),
            Tok::Indent => Err(self.error_here("unexpected indent")),
            _ => self.simple_statement(),
        }
    }

    fn simple_statement(&mut self) -> Result<Stmt, ExprError> {
        let stmt = match self.peek().clone() {
            Tok::Return => {
                self.advance();
                if matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Dedent) {
                    Stmt::Return(None)
                } else {
                    Stmt::Return(Some(self.expression()?))
                }
            }
            Tok::Raise => {
                self.advance();
                match self.peek() {
                    Tok::Name(n) if n == "Exception" => {
                        self.advance();
                    }
                    _ => return Err(self.error_here("only `raise Exception(<message>)` is supported")),
                }
                self.expect_op("(")?;
                let message = self.expression()?;
                self.expect_op(")")?;
                Stmt::Raise(message)
            }
            Tok::Name(name) if matches!(self.tokens.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Op("="))) => {
                self.advance();
                self.advance();
                Stmt::Assign(name, self.expression()?)
            }
            _ => Stmt::Expr(self.expression()?),
        };
        self.end_of_statement()?;
        Ok(stmt)
    }

    fn if_statement(&mut self) -> Result<Stmt, ExprError> {
        let mut branches = Vec::new();
        let mut otherwise = None;
        self.advance();
        let cond = self.expression()?;
        self.expect_op(":")?;
        branches.push((cond, self.block()?));
        loop {
            match self.peek() {
                Tok::Elif => {
                    self.advance();
                    let cond = self.expression()?;
                    self.expect_op(":")?;
                    branches.push((cond, self.block()?));
                }
                Tok::Else => {
                    self.advance();
                    self.expect_op(":")?;
                    otherwise = Some(self.block()?);
                    break;
                }
                _ => break,
            }
        }
        Ok(Stmt::If {
            branches,
            otherwise,
        })
    }

    fn expression(&mut self) -> Result<Expr, ExprError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(self.error_here("expression nested too deeply"));
        }
        let result = self.or_expr();
        self.nesting -= 1;
        result
    }

    fn or_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Or {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.not_expr()?;
        while *self.peek() == Tok::And {
            self.advance();
            let rhs = self.not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Not {
            self.advance();
            self.nesting += 1;
            if self.nesting > MAX_NESTING {
                return Err(self.error_here("expression nested too deeply"));
            }
            let inner = self.not_expr();
            self.nesting -= 1;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(inner?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ExprError> {
        let first = self.additive()?;
        let mut rest = Vec::new();
        loop {
            let op = match self.peek() {
                Tok::Op("==") => CmpOp::Eq,
                Tok::Op("!=") => CmpOp::Ne,
                Tok::Op("<") => CmpOp::Lt,
                Tok::Op("<=") => CmpOp::Le,
                Tok::Op(">") => CmpOp::Gt,
                Tok::Op(">=") => CmpOp::Ge,
                _ => break,
            };
            self.advance();
            rest.push((op, self.additive()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr::Compare(Box::new(first), rest))
        }
    }

    fn additive(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("%") => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        let op = match self.peek() {
            Tok::Op("-") => UnaryOp::Neg,
            Tok::Op("+") => UnaryOp::Pos,
            _ => return self.postfix(),
        };
        self.advance();
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(self.error_here("expression nested too deeply"));
        }
        let inner = self.unary();
        self.nesting -= 1;
        Ok(Expr::Unary(op, Box::new(inner?)))
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ExprError> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        while !self.is_op(")") {
            args.push(self.expression()?);
            if !self.is_op(")") {
                self.expect_op(",")?;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn postfix(&mut self) -> Result<Expr, ExprError> {
        let mut expr = self.atom()?;
        loop {
            if self.is_op("(") {
                let Expr::Name(name) = expr else {
                    return Err(self.error_here("only named functions can be called"));
                };
                expr = Expr::Call(name, self.call_args()?);
            } else if self.is_op(".") {
                self.advance();
                let method = self.expect_name()?;
                if !self.is_op("(") {
                    return Err(self.error_here("attribute access is only supported for method calls"));
                }
                expr = Expr::Method(Box::new(expr), method, self.call_args()?);
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let token = self.advance();
        Ok(match token.tok {
            Tok::Int(i) => Expr::Literal(Value::Int(i)),
            Tok::Float(f) => Expr::Literal(Value::Float(f)),
            Tok::Str(s) => {
                // Adjacent string literals concatenate.
                let mut s = s;
                while let Tok::Str(next) = self.peek().clone() {
                    self.advance();
                    s.push_str(&next);
                }
                Expr::Literal(Value::Str(s))
            }
            Tok::FStr(body) => Expr::FString(parse_fstring(&body, token.line, token.col)?),
            Tok::True => Expr::Literal(Value::Bool(true)),
            Tok::False => Expr::Literal(Value::Bool(false)),
            Tok::None => Expr::Literal(Value::None),
            Tok::Name(n) => Expr::Name(n),
            Tok::Ref(id) => Expr::Reference(id),
            Tok::Op("(") => {
                let inner = self.expression()?;
                self.expect_op(")")?;
                inner
            }
            Tok::Op("[") => {
                let mut items = Vec::new();
                while !self.is_op("]") {
                    items.push(self.expression()?);
                    if !self.is_op("]") {
                        self.expect_op(",")?;
                    }
                }
                self.expect_op("]")?;
                Expr::List(items)
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return Err(self.error_here("expected an expression"));
            }
        })
    }
}

/// Parses a dialect f-string body; literal segments get escape processing.
fn parse_fstring(body: &str, line: usize, col: usize) -> Result<Vec<FPart>, ExprError> {
    let at = |message: String| ExprError::Syntax {
        line,
        column: col,
        message,
    };
    let parts = split_fstring(body).map_err(|(_, msg)| at(msg))?;
    parts
        .into_iter()
        .map(|p| match p {
            RawPart::Literal(text) => Ok(FPart::Literal(unescape_str(&text))),
            RawPart::Expr { source, .. } => parse_expression(&source)
                .map(FPart::Expr)
                .map_err(|e| at(format!("in f-string: {e}"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse_expression("1 + 2 * 3").unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Literal(Value::Int(1))),
                Box::new(Expr::Binary(
                    BinOp::Mul,
                    Box::new(Expr::Literal(Value::Int(2))),
                    Box::new(Expr::Literal(Value::Int(3)))
                ))
            )
        );
    }

    #[test]
    fn not_binds_looser_than_comparison() {
        let e = parse_expression("not a == b").unwrap();
        assert!(matches!(e, Expr::Unary(UnaryOp::Not, inner) if matches!(*inner, Expr::Compare(..))));
    }

    #[test]
    fn method_chains() {
        let e = parse_expression("file.lower().endswith(ext)").unwrap();
        match e {
            Expr::Method(recv, name, args) => {
                assert_eq!(name, "endswith");
                assert_eq!(args, vec![Expr::Name("ext".into())]);
                assert!(matches!(*recv, Expr::Method(_, ref m, _) if m == "lower"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn program_with_if_elif_else() {
        let defs = parse_program(
            "def sign(x):\n    if x < 0:\n        return -1\n    elif x == 0:\n        return 0\n    else:\n        return 1\n",
        )
        .unwrap();
        assert_eq!(defs.len(), 1);
        match &defs[0].body[0] {
            Stmt::If {
                branches,
                otherwise,
            } => {
                assert_eq!(branches.len(), 2);
                assert!(otherwise.is_some());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unsupported_forms() {
        for src in [
            "import os\n",
            "x = 1\n",
            "def f():\n    raise ValueError('x')\n",
            "def f(x):\n    return x.attr\n",
            "def f():\n    def g():\n        return 1\n",
        ] {
            assert!(
                matches!(parse_program(src), Err(ExprError::Syntax { .. })),
                "accepted {src:?}"
            );
        }
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("{}1{}", "(".repeat(500), ")".repeat(500));
        assert!(parse_expression(&src).is_err());
        let src = format!("{}1", "-".repeat(500));
        assert!(parse_expression(&src).is_err());
    }

    #[test]
    fn syntax_error_positions() {
        let err = parse_program("def f(x):\n    return x +\n").unwrap_err();
        assert!(matches!(err, ExprError::Syntax { line: 2, .. }), "{err:?}");
    }
}
