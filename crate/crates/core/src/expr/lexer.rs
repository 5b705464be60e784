//! Tokenizer for the expression dialect.
//!
//! Program mode tracks indentation and emits `Indent`/`Dedent`/`Newline`
//! tokens; expression mode (template interpolations) treats all whitespace
//! as insignificant.

use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// Body of an f-string literal, unprocessed.
    FStr(String),
    /// `$(inputs.<id>)`
    Ref(String),
    Def,
    Return,
    Raise,
    If,
    Elif,
    Else,
    And,
    Or,
    Not,
    True,
    False,
    None,
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OPERATORS: &[&str] = &[
    "==", "!=", "<=", ">=", "<", ">", "=", "+", "-", "*", "/", "%", "(", ")", "[", "]", ",", ":",
    ".",
];

pub(crate) struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    indent_mode: bool,
    indents: Vec<usize>,
    depth: usize,
    at_line_start: bool,
    out: Vec<Token>,
}

impl Lexer {
    pub fn program(src: &str) -> Self {
        Self::new(src, true)
    }

    pub fn expression(src: &str) -> Self {
        Self::new(src, false)
    }

    fn new(src: &str, indent_mode: bool) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            indent_mode,
            indents: vec![0],
            depth: 0,
            at_line_start: indent_mode,
            out: Vec::new(),
        }
    }

    fn err(&self, line: usize, col: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            line,
            column: col,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        self.out.push(Token { tok, line, col });
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, ExprError> {
        loop {
            if self.at_line_start {
                self.at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.indent_mode && self.depth == 0 {
                        if !matches!(self.out.last().map(|t| &t.tok), None | Some(Tok::Newline)) {
                            self.push(Tok::Newline, line, col);
                        }
                        self.at_line_start = true;
                    }
                }
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '#' => {
                    while matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                }
                '$' => self.lex_reference()?,
                '"' | '\'' => {
                    let body = self.lex_string_body(true)?;
                    self.push(Tok::Str(body), line, col);
                }
                c if c.is_ascii_digit() => self.lex_number()?,
                '.' if matches!(self.peek_at(1), Some(d) if d.is_ascii_digit()) => self.lex_number()?,
                c if c == '_' || c.is_alphabetic() => {
                    let start = self.pos;
                    while matches!(self.peek(), Some(c) if c == '_' || c.is_alphanumeric()) {
                        self.bump();
                    }
                    let word: String = self.chars[start..self.pos].iter().collect();
                    if matches!(word.as_str(), "f" | "F") && matches!(self.peek(), Some('"' | '\'')) {
                        let body = self.lex_string_body(false)?;
                        self.push(Tok::FStr(body), line, col);
                        continue;
                    }
                    let tok = match word.as_str() {
                        "def" => Tok::Def,
                        "return" => Tok::Return,
                        "raise" => Tok::Raise,
                        "if" => Tok::If,
                        "elif" => Tok::Elif,
                        "else" => Tok::Else,
                        "and" => Tok::And,
                        "or" => Tok::Or,
                        "not" => Tok::Not,
                        "True" => Tok::True,
                        "False" => Tok::False,
                        "None" => Tok::None,
                        _ => Tok::Name(word),
                    };
                    self.push(tok, line, col);
                }
                _ => {
                    let rest: String = self.chars[self.pos..(self.pos + 2).min(self.chars.len())]
                        .iter()
                        .collect();
                    let op = OPERATORS
                        .iter()
                        .find(|op| rest.starts_with(**op))
                        .ok_or_else(|| self.err(line, col, format!("unexpected character `{c}`")))?;
                    for _ in 0..op.chars().count() {
                        self.bump();
                    }
                    match *op {
                        "(" | "[" => self.depth += 1,
                        ")" | "]" => self.depth = self.depth.saturating_sub(1),
                        _ => {}
                    }
                    self.push(Tok::Op(op), line, col);
                }
            }
        }
        let (line, col) = (self.line, self.col);
        if self.indent_mode {
            if !matches!(self.out.last().map(|t| &t.tok), None | Some(Tok::Newline)) {
                self.push(Tok::Newline, line, col);
            }
            while self.indents.len() > 1 {
                self.indents.pop();
                self.push(Tok::Dedent, line, col);
            }
        }
        self.push(Tok::Eof, line, col);
        Ok(self.out)
    }

    /// Measures leading whitespace; returns true when the line was blank.
    fn handle_indentation(&mut self) -> Result<bool, ExprError> {
        let mut width = 0;
        while let Some(c) = self.peek() {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / 8 + 1) * 8,
                '\r' => {}
                _ => break,
            }
            self.bump();
        }
        match self.peek() {
            None => return Ok(true),
            Some('\n') => {
                self.bump();
                self.at_line_start = true;
                return Ok(true);
            }
            Some('#') => {
                while matches!(self.peek(), Some(c) if c != '\n') {
                    self.bump();
                }
                return Ok(true);
            }
            _ => {}
        }
        let (line, col) = (self.line, self.col);
        let current = *self.indents.last().unwrap_or(&0);
        if width > current {
            self.indents.push(width);
            self.push(Tok::Indent, line, col);
        } else {
            while width < *self.indents.last().unwrap_or(&0) {
                self.indents.pop();
                self.push(Tok::Dedent, line, col);
            }
            if width != *self.indents.last().unwrap_or(&0) {
                return Err(self.err(line, col, "unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn lex_reference(&mut self) -> Result<(), ExprError> {
        let (line, col) = (self.line, self.col);
        let rest: String = self.chars[self.pos..].iter().collect();
        let Some(body) = rest.strip_prefix("$(inputs.") else {
            return Err(self.err(line, col, "expected a reference of the form $(inputs.<id>)"));
        };
        let id: String = body
            .chars()
            .take_while(|c| *c == '_' || c.is_alphanumeric())
            .collect();
        if id.is_empty() || body[id.len()..].chars().next() != Some(')') {
            return Err(self.err(line, col, "expected a reference of the form $(inputs.<id>)"));
        }
        let n = "$(inputs.".chars().count() + id.chars().count() + 1;
        for _ in 0..n {
            self.bump();
        }
        self.push(Tok::Ref(id), line, col);
        Ok(())
    }

    fn lex_number(&mut self) -> Result<(), ExprError> {
        let (line, col) = (self.line, self.col);
        let start = self.pos;
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '_' {
                self.bump();
            } else if c == '.' && !is_float {
                is_float = true;
                self.bump();
            } else if (c == 'e' || c == 'E')
                && matches!(self.peek_at(1), Some(d) if d.is_ascii_digit() || d == '+' || d == '-')
            {
                is_float = true;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().filter(|c| **c != '_').collect();
        let tok = if is_float {
            Tok::Float(
                text.parse()
                    .map_err(|_| self.err(line, col, format!("invalid number `{text}`")))?,
            )
        } else {
            Tok::Int(
                text.parse()
                    .map_err(|_| self.err(line, col, format!("integer literal `{text}` out of range")))?,
            )
        };
        self.push(tok, line, col);
        Ok(())
    }

    /// Reads a quoted body starting at the opening quote. Plain strings have
    /// their escapes processed; f-string bodies are returned raw.
    fn lex_string_body(&mut self, process_escapes: bool) -> Result<String, ExprError> {
        let (line, col) = (self.line, self.col);
        let quote = self.bump().expect("caller saw a quote");
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let mut out = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.err(line, col, "unterminated string literal"));
            };
            if c == quote {
                if !triple {
                    break;
                }
                if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                    self.bump();
                    self.bump();
                    break;
                }
                out.push(c);
                continue;
            }
            if c == '\n' && !triple {
                return Err(self.err(line, col, "unterminated string literal"));
            }
            if c == '\\' {
                let Some(next) = self.bump() else {
                    return Err(self.err(line, col, "unterminated string literal"));
                };
                if process_escapes {
                    match unescape(next) {
                        Some(ch) => out.push(ch),
                        None if next == '\n' => {}
                        None => {
                            out.push('\\');
                            out.push(next);
                        }
                    }
                } else {
                    out.push('\\');
                    out.push(next);
                }
                continue;
            }
            out.push(c);
        }
        Ok(out)
    }
}

pub(crate) fn unescape(c: char) -> Option<char> {
    Some(match c {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        '0' => '\0',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        _ => return None,
    })
}

/// Processes backslash escapes in an f-string literal segment.
pub(crate) fn unescape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some(n) => match unescape(n) {
                Some(ch) => out.push(ch),
                None if n == '\n' => {}
                None => {
                    out.push('\\');
                    out.push(n);
                }
            },
            None => out.push('\\'),
        }
    }
    out
}
