//! Module-level structure: classes, methods, free functions and their
//! docstrings. Only the token stream is needed, so files whose function
//! bodies fall outside the supported subset can still be outlined.

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, LexError, TokKind, Token};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionItem {
    pub name: String,
    /// `Class.method` for methods, the bare name otherwise.
    pub qualname: String,
    pub docstring: Option<String>,
    pub source: String,
    pub line_start: usize,
    pub line_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassItem {
    pub name: String,
    pub docstring: Option<String>,
    pub line_start: usize,
    pub line_end: usize,
    pub methods: Vec<FunctionItem>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModuleOutline {
    pub classes: Vec<ClassItem>,
    pub functions: Vec<FunctionItem>,
}

pub fn outline_module(src: &str) -> Result<ModuleOutline, LexError> {
    let toks = tokenize(src)?;
    let mut sc = Scanner { src, toks, i: 0 };
    let mut out = ModuleOutline::default();
    sc.block(None, &mut out);
    Ok(out)
}

struct Scanner<'a> {
    src: &'a str,
    toks: Vec<Token>,
    i: usize,
}

impl Scanner<'_> {
    fn kind(&self) -> &TokKind {
        &self.toks[self.i.min(self.toks.len() - 1)].kind
    }

    fn tok(&self) -> &Token {
        &self.toks[self.i.min(self.toks.len() - 1)]
    }

    fn advance(&mut self) {
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
    }

    /// Skips the rest of a logical line, including its newline.
    fn skip_line(&mut self) {
        while !matches!(self.kind(), TokKind::Newline | TokKind::End) {
            self.advance();
        }
        if matches!(self.kind(), TokKind::Newline) {
            self.advance();
        }
    }

    /// Skips an indented block starting at an `Indent` token.
    fn skip_block(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.kind() {
                TokKind::Indent => depth += 1,
                TokKind::Dedent => {
                    depth -= 1;
                    if depth == 0 {
                        self.advance();
                        return;
                    }
                }
                TokKind::End => return,
                _ => {}
            }
            self.advance();
        }
    }

    /// Reads a header up to its `:` and returns the docstring of the body.
    /// Leaves the cursor at the body's `Indent` (block bodies) or past the
    /// line (single-line bodies); the flag tells which.
    fn header(&mut self) -> (Option<String>, bool) {
        let mut depth = 0i32;
        loop {
            match self.kind() {
                TokKind::Op("(" | "[" | "{") => depth += 1,
                TokKind::Op(")" | "]" | "}") => depth -= 1,
                TokKind::Op(":") if depth == 0 => {
                    self.advance();
                    break;
                }
                TokKind::Newline | TokKind::End => return (None, false),
                _ => {}
            }
            self.advance();
        }
        if !matches!(self.kind(), TokKind::Newline) {
            self.skip_line();
            return (None, false);
        }
        self.advance();
        if !matches!(self.kind(), TokKind::Indent) {
            return (None, false);
        }
        let doc = match (
            &self.toks.get(self.i + 1).map(|t| &t.kind),
            &self.toks.get(self.i + 2).map(|t| &t.kind),
        ) {
            (Some(TokKind::Str { value, prefix }), Some(TokKind::Newline | TokKind::Dedent | TokKind::End))
                if !prefix.contains('f') && !prefix.contains('b') =>
            {
                Some(value.clone())
            }
            _ => None,
        };
        (doc, true)
    }

    fn end_of(&self, start: usize) -> (usize, usize) {
        // the block ends where the token after it begins; trailing blank lines trimmed
        let t = self.tok();
        let end = if matches!(t.kind, TokKind::End) {
            self.src.len()
        } else {
            t.offset
        };
        let text = self.src[start..end].trim_end();
        let line = self.src[..start + text.len()].matches('\n').count() + 1;
        (start + text.len(), line)
    }

    fn line_start_offset(&self, offset: usize) -> usize {
        self.src[..offset].rfind('\n').map(|p| p + 1).unwrap_or(0)
    }

    fn block(&mut self, class: Option<&str>, out: &mut ModuleOutline) -> Vec<FunctionItem> {
        let mut methods = Vec::new();
        let mut deco: Option<(usize, usize)> = None;
        loop {
            match self.kind().clone() {
                TokKind::End => return methods,
                TokKind::Dedent => {
                    self.advance();
                    return methods;
                }
                TokKind::Newline => self.advance(),
                TokKind::Indent => self.skip_block(),
                TokKind::Op("@") => {
                    if deco.is_none() {
                        deco = Some((self.tok().offset, self.tok().line));
                    }
                    self.skip_line();
                }
                TokKind::Name(n)
                    if n == "def"
                        || (n == "async"
                            && matches!(self.toks.get(self.i + 1).map(|t| &t.kind), Some(TokKind::Name(d)) if d == "def")) =>
                {
                    let (start, line_start) = deco.take().unwrap_or((self.tok().offset, self.tok().line));
                    let start = self.line_start_offset(start);
                    if n == "async" {
                        self.advance();
                    }
                    self.advance();
                    let name = match self.kind() {
                        TokKind::Name(x) => x.clone(),
                        _ => {
                            self.skip_line();
                            continue;
                        }
                    };
                    let (docstring, has_block) = self.header();
                    if has_block {
                        self.skip_block();
                    }
                    let (end, line_end) = self.end_of(start);
                    let qualname = match class {
                        Some(c) => format!("{c}.{name}"),
                        None => name.clone(),
                    };
                    let item = FunctionItem {
                        name,
                        qualname,
                        docstring,
                        source: self.src[start..end].to_string(),
                        line_start,
                        line_end,
                    };
                    if class.is_some() {
                        methods.push(item);
                    } else {
                        out.functions.push(item);
                    }
                }
                TokKind::Name(n) if n == "class" => {
                    let line_start = deco.take().map(|d| d.1).unwrap_or(self.tok().line);
                    let start = self.line_start_offset(self.tok().offset);
                    self.advance();
                    let name = match self.kind() {
                        TokKind::Name(x) => x.clone(),
                        _ => {
                            self.skip_line();
                            continue;
                        }
                    };
                    let qual = match class {
                        Some(c) => format!("{c}.{name}"),
                        None => name.clone(),
                    };
                    let (docstring, has_block) = self.header();
                    let mut inner = Vec::new();
                    if has_block {
                        self.advance();
                        inner = self.block(Some(&qual), out);
                    }
                    let (_, line_end) = self.end_of(start);
                    out.classes.push(ClassItem {
                        name: qual,
                        docstring,
                        line_start,
                        line_end,
                        methods: inner,
                    });
                }
                _ => {
                    deco = None;
                    self.skip_line();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = r#"
import numpy as np

class Example:
    """Doc of the class."""

    def __init__(self, msg, code):
        self.msg = msg
        self.code = [c for c in code]

    @property
    def value(self):
        return 1

def helper(a):
    '''Helper.'''
    if a:
        for x in a:
            pass
    return a

X = 1
"#;

    #[test]
    fn finds_classes_methods_and_functions() {
        let o = outline_module(SRC).unwrap();
        assert_eq!(o.classes.len(), 1);
        assert_eq!(o.classes[0].docstring.as_deref(), Some("Doc of the class."));
        let names: Vec<_> = o.classes[0].methods.iter().map(|m| m.qualname.as_str()).collect();
        assert_eq!(names, vec!["Example.__init__", "Example.value"]);
        assert!(o.classes[0].methods[1].source.trim_start().starts_with("@property"));
        assert_eq!(o.functions.len(), 1);
        assert_eq!(o.functions[0].docstring.as_deref(), Some("Helper."));
        assert!(o.functions[0].source.ends_with("return a"));
        assert_eq!(o.functions[0].line_start, 15);
    }

    #[test]
    fn empty_module() {
        assert_eq!(outline_module("").unwrap(), ModuleOutline::default());
    }
}
