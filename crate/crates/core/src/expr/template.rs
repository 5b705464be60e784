//! `f"..."` templates and `$(inputs.<id>)` reference scanning.

use std::fmt;

use super::ast::Expr;
use super::parser::parse_expression;
use super::ExprError;

const REFERENCE_OPEN: &str = "$(inputs.";

/// Raw pieces of an f-string body before the interpolations are parsed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RawPart {
    Literal(String),
    /// `offset` is the byte offset of the expression source within the body.
    Expr { source: String, offset: usize },
}

/// Splits an f-string body into literal text and interpolation sources.
/// `{{` and `}}` are literal braces. Errors carry the body byte offset.
pub(crate) fn split_fstring(body: &str) -> Result<Vec<RawPart>, (usize, String)> {
    split_fstring_delimited(body, None)
}

fn split_fstring_delimited(
    body: &str,
    delimiter: Option<char>,
) -> Result<Vec<RawPart>, (usize, String)> {
    let bytes = body.as_bytes();
    let mut parts = Vec::new();
    let mut literal = String::new();
    let mut i = 0;
    while i < body.len() {
        let c = body[i..].chars().next().expect("in bounds");
        match c {
            '{' if bytes.get(i + 1) == Some(&b'{') => {
                literal.push('{');
                i += 2;
            }
            '}' if bytes.get(i + 1) == Some(&b'}') => {
                literal.push('}');
                i += 2;
            }
            '}' => return Err((i, "single `}` is not allowed in a template; use `}}`".into())),
            '{' => {
                let start = i + 1;
                let end = interpolation_end(body, start).ok_or((i, "unclosed `{` in template".to_string()))?;
                let source = &body[start..end];
                if source.trim().is_empty() {
                    return Err((i, "empty interpolation `{}`".into()));
                }
                if !literal.is_empty() {
                    parts.push(RawPart::Literal(std::mem::take(&mut literal)));
                }
                parts.push(RawPart::Expr {
                    source: source.to_string(),
                    offset: start,
                });
                i = end + 1;
            }
            '\\' if delimiter.is_some() => {
                literal.push('\\');
                i += 1;
                if let Some(next) = body[i..].chars().next() {
                    literal.push(next);
                    i += next.len_utf8();
                }
            }
            q if Some(q) == delimiter => {
                return Err((i, format!("unescaped `{q}` inside template")));
            }
            _ => {
                literal.push(c);
                i += c.len_utf8();
            }
        }
    }
    if !literal.is_empty() {
        parts.push(RawPart::Literal(literal));
    }
    Ok(parts)
}

/// Finds the `}` closing an interpolation that starts at `start`, skipping
/// quoted strings and nested brackets.
fn interpolation_end(body: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut chars = body[start..].char_indices();
    while let Some((off, c)) = chars.next() {
        if let Some(q) = quote {
            if c == '\\' {
                chars.next();
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            '}' if depth == 0 => return Some(start + off),
            '}' => depth -= 1,
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    /// Expression text between the braces.
    pub source: String,
    /// Byte offset of `source` within the template's raw text.
    pub offset: usize,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Literal(String),
    Interpolation(Interpolation),
}

/// A parsed `f"..."` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    raw: String,
    segments: Vec<Segment>,
}

/// True when the trimmed entry has the `f"..."` form.
pub fn looks_like_template(entry: &str) -> bool {
    let t = entry.trim();
    t.len() >= 3 && t.starts_with("f\"") && t.ends_with('"')
}

/// Returns the parsed template when `entry` uses the `f"..."` form.
pub fn detect_template(entry: &str) -> Result<Option<Template>, ExprError> {
    if looks_like_template(entry) {
        Template::parse(entry).map(Some)
    } else {
        Ok(None)
    }
}

impl Template {
    pub fn parse(entry: &str) -> Result<Template, ExprError> {
        let raw = entry.trim();
        if !looks_like_template(raw) {
            return Err(ExprError::TemplateSyntax {
                raw: raw.to_string(),
                offset: 0,
                message: "not an f\"...\" template".into(),
            });
        }
        let body = &raw[2..raw.len() - 1];
        let syntax = |offset: usize, message: String| ExprError::TemplateSyntax {
            raw: raw.to_string(),
            offset,
            message,
        };
        let parts = split_fstring_delimited(body, Some('"')).map_err(|(off, msg)| syntax(off + 2, msg))?;
        let mut segments = Vec::with_capacity(parts.len());
        for part in parts {
            segments.push(match part {
                RawPart::Literal(text) => Segment::Literal(text),
                RawPart::Expr { source, offset } => {
                    let offset = offset + 2;
                    let expr = parse_expression(&source).map_err(|e| match e {
                        ExprError::Syntax {
                            column, message, ..
                        } => syntax(offset + column.saturating_sub(1), message),
                        other => syntax(offset, other.to_string()),
                    })?;
                    Segment::Interpolation(Interpolation {
                        source,
                        offset,
                        expr,
                    })
                }
            });
        }
        Ok(Template {
            raw: raw.to_string(),
            segments,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub(crate) fn segments_mut(&mut self) -> &mut Vec<Segment> {
        &mut self.segments
    }

    /// Input ids referenced from interpolations, first-occurrence order.
    pub fn references(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for seg in &self.segments {
            if let Segment::Interpolation(i) = seg {
                i.expr.walk(&mut |e| {
                    if let Expr::Reference(id) = e {
                        if !out.contains(id) {
                            out.push(id.clone());
                        }
                    }
                });
            }
        }
        out
    }

    /// Re-renders the template body with each interpolation echoed as its
    /// source text.
    pub fn render_identity(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(text) => out.push_str(&text.replace('{', "{{").replace('}', "}}")),
                Segment::Interpolation(i) => {
                    out.push('{');
                    out.push_str(&i.source);
                    out.push('}');
                }
            }
        }
        out
    }

    /// Shape of the template: literal texts and interpolation count, ignoring
    /// whether references have been bound.
    pub fn shape(&self) -> Vec<Option<&str>> {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Literal(t) => Some(t.as_str()),
                Segment::Interpolation(_) => None,
            })
            .collect()
    }

    /// Renders a caret under `offset` for error messages.
    pub(crate) fn caret(raw: &str, offset: usize) -> String {
        let col = raw[..offset.min(raw.len())].chars().count();
        format!("    {raw}\n    {}^", " ".repeat(col))
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Textual scan for `$(inputs.<id>)` references outside templates (globs,
/// output names).
pub fn scan_references(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let _ = substitute_references(text, |id| {
        out.push(id.to_string());
        Some(String::new())
    });
    out
}

/// Replaces each `$(inputs.<id>)` with `lookup(id)`; returns the first id the
/// lookup could not resolve.
pub fn substitute_references(
    text: &str,
    mut lookup: impl FnMut(&str) -> Option<String>,
) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(REFERENCE_OPEN) {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + REFERENCE_OPEN.len()..];
        let id_len = after
            .char_indices()
            .find(|(_, c)| !(*c == '_' || c.is_alphanumeric()))
            .map(|(i, _)| i)
            .unwrap_or(after.len());
        if id_len > 0 && after[id_len..].starts_with(')') {
            let id = &after[..id_len];
            out.push_str(&lookup(id).ok_or_else(|| id.to_string())?);
            rest = &after[id_len + 1..];
        } else {
            out.push_str(REFERENCE_OPEN);
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn detects_only_fstring_form() {
        assert!(detect_template("resized.png").unwrap().is_none());
        assert!(detect_template("f").unwrap().is_none());
        assert!(detect_template("\"f\"").unwrap().is_none());
        let t = detect_template(r#"f"{capitalize_words($(inputs.message))}""#)
            .unwrap()
            .unwrap();
        assert_eq!(t.segments().len(), 1);
        assert_eq!(t.references(), vec!["message"]);
    }

    #[test]
    fn brace_escapes() {
        let t = Template::parse(r#"f"a{{b}}c""#).unwrap();
        assert_eq!(t.segments(), &[Segment::Literal("a{b}c".into())]);
    }

    #[test]
    fn template_syntax_errors() {
        for bad in [r#"f"a{b""#, r#"f"a}b""#, r#"f"{}""#, r#"f"{'x}""#, r#"f"a"b""#, r#"f"{1 +}""#] {
            match Template::parse(bad) {
                Err(ExprError::TemplateSyntax { raw, .. }) => assert_eq!(raw, bad),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn error_offset_points_into_raw() {
        match Template::parse(r#"f"ab{1 + }""#) {
            Err(ExprError::TemplateSyntax { offset, .. }) => assert!((5..10).contains(&offset)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_substitution() {
        let out = substitute_references("$(inputs.name).png", |id| Some(id.to_uppercase())).unwrap();
        assert_eq!(out, "NAME.png");
        assert_eq!(substitute_references("$(inputs.x)", |_| None), Err("x".into()));
        assert_eq!(scan_references("a $(inputs.b) $(inputs. $(inputs.c)"), vec!["b", "c"]);
        assert_eq!(substitute_references("$(inputs.)", |_| None).unwrap(), "$(inputs.)");
    }

    fn template_body() -> impl Strategy<Value = String> {
        let lit = "[a-z .,'!{}]{0,6}".prop_map(|s| s.replace('{', "{{").replace('}', "}}"));
        let interp = prop_oneof![
            Just("{1+2}".to_string()),
            Just("{$(inputs.x)}".to_string()),
            Just("{f(a, 'b}')}".to_string()),
            Just("{x.upper()}".to_string()),
        ];
        prop::collection::vec(prop_oneof![lit, interp], 0..6).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn identity_rendering_reproduces_interior(body in template_body()) {
            let raw = format!("f\"{body}\"");
            let t = Template::parse(&raw).unwrap();
            prop_assert_eq!(t.render_identity(), body);
        }
    }
}
