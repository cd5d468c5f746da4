//! Tokenizer for Python source, including indentation tracking.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Name(String),
    Number(String),
    Str { value: String, prefix: String },
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokKind,
    /// 1-based line of the first character.
    pub line: usize,
    /// Byte offset of the first character.
    pub offset: usize,
    /// Indentation (in columns) of the logical line the token belongs to.
    pub indent: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("line {line}: unterminated string literal")]
    UnterminatedString { line: usize },
    #[error("line {line}: unexpected character `{ch}`")]
    UnexpectedChar { line: usize, ch: char },
    #[error("line {line}: inconsistent dedent")]
    BadDedent { line: usize },
}

const OPS: [&str; 49] = [
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "@=", "<<", ">>", "(", ")", "[", "]", "{", "}", ":", ",", ".", ";", "+", "-", "*", "/", "%", "<",
    ">", "=", "&", "|", "^", "~", "@", "!", "`",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        depth: 0,
        indents: vec![0],
        toks: Vec::new(),
        at_line_start: true,
        cur_indent: 0,
    }
    .run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    depth: usize,
    indents: Vec<usize>,
    toks: Vec<Token>,
    at_line_start: bool,
    cur_indent: usize,
}

impl Lexer<'_> {
    fn push(&mut self, kind: TokKind, offset: usize, line: usize) {
        self.toks.push(Token {
            kind,
            line,
            offset,
            indent: self.cur_indent,
        });
    }

    fn peek(&self, k: usize) -> Option<u8> {
        self.bytes.get(self.pos + k).copied()
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while self.pos < self.bytes.len() {
            if self.at_line_start && self.depth == 0 && self.handle_indent()? {
                continue;
            }
            let c = self.bytes[self.pos];
            match c {
                b' ' | b'\t' | b'\x0c' | b'\r' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\\' if self.peek(1) == Some(b'\n') => {
                    self.pos += 2;
                    self.line += 1;
                }
                b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => {
                    self.pos += 3;
                    self.line += 1;
                }
                b'\n' => {
                    if self.depth == 0 {
                        let last_is_nl = matches!(
                            self.toks.last().map(|t| &t.kind),
                            None | Some(TokKind::Newline) | Some(TokKind::Indent) | Some(TokKind::Dedent)
                        );
                        if !last_is_nl {
                            self.push(TokKind::Newline, self.pos, self.line);
                        }
                        self.at_line_start = true;
                    }
                    self.pos += 1;
                    self.line += 1;
                }
                _ => self.token()?,
            }
        }
        let (end, line) = (self.bytes.len(), self.line);
        if !matches!(
            self.toks.last().map(|t| &t.kind),
            None | Some(TokKind::Newline) | Some(TokKind::Dedent)
        ) {
            self.push(TokKind::Newline, end, line);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokKind::Dedent, end, line);
        }
        self.push(TokKind::End, end, line);
        Ok(self.toks)
    }

    /// Measures indentation at the start of a line. Returns true when the
    /// line was blank and has been consumed.
    fn handle_indent(&mut self) -> Result<bool, LexError> {
        let mut col = 0;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => col += 1,
                b'\t' => col = (col / 8 + 1) * 8,
                b'\x0c' | b'\r' => {}
                _ => break,
            }
            p += 1;
        }
        match self.bytes.get(p) {
            None => {
                self.pos = p;
                return Ok(true);
            }
            Some(b'\n') => {
                self.pos = p + 1;
                self.line += 1;
                return Ok(true);
            }
            Some(b'#') => {
                while p < self.bytes.len() && self.bytes[p] != b'\n' {
                    p += 1;
                }
                self.pos = p;
                return Ok(true);
            }
            _ => {}
        }
        self.pos = p;
        self.at_line_start = false;
        let top = *self.indents.last().unwrap();
        if col > top {
            self.indents.push(col);
            self.cur_indent = col;
            self.push(TokKind::Indent, p, self.line);
        } else if col < top {
            while *self.indents.last().unwrap() > col {
                self.indents.pop();
                self.cur_indent = col;
                self.push(TokKind::Dedent, p, self.line);
            }
            if *self.indents.last().unwrap() != col {
                return Err(LexError::BadDedent { line: self.line });
            }
        }
        self.cur_indent = col;
        Ok(false)
    }

    fn token(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let line = self.line;
        let c = self.bytes[self.pos];
        // string with optional prefix
        if c.is_ascii_alphabetic() {
            let mut k = 0;
            while k < 3 && self.peek(k).is_some_and(|b| b"rRbBuUfF".contains(&b)) {
                k += 1;
            }
            if k <= 2 && matches!(self.peek(k), Some(b'"' | b'\'')) {
                let prefix = self.src[start..start + k].to_ascii_lowercase();
                self.pos += k;
                let value = self.string(prefix.contains('r'))?;
                self.push(TokKind::Str { value, prefix }, start, line);
                return Ok(());
            }
        }
        if c == b'"' || c == b'\'' {
            let value = self.string(false)?;
            self.push(
                TokKind::Str {
                    value,
                    prefix: String::new(),
                },
                start,
                line,
            );
            return Ok(());
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_some_and(|b| b.is_ascii_digit())) {
            let mut p = self.pos;
            while p < self.bytes.len() {
                let b = self.bytes[p];
                let prev = if p > start { self.bytes[p - 1] } else { 0 };
                if b.is_ascii_alphanumeric()
                    || b == b'.'
                    || b == b'_'
                    || ((b == b'+' || b == b'-')
                        && (prev == b'e' || prev == b'E')
                        && !self.src[start..p].starts_with("0x"))
                {
                    p += 1;
                } else {
                    break;
                }
            }
            self.pos = p;
            self.push(TokKind::Number(self.src[start..p].to_string()), start, line);
            return Ok(());
        }
        let ch = self.src[self.pos..].chars().next().unwrap();
        if ch.is_alphabetic() || ch == '_' {
            let mut p = self.pos;
            for (i, ch) in self.src[self.pos..].char_indices() {
                if ch.is_alphanumeric() || ch == '_' {
                    p = self.pos + i + ch.len_utf8();
                } else {
                    break;
                }
            }
            let word = self.src[self.pos..p].to_string();
            self.pos = p;
            self.push(TokKind::Name(word), start, line);
            return Ok(());
        }
        for op in OPS {
            if self.src[self.pos..].starts_with(op) {
                match op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
                    _ => {}
                }
                self.pos += op.len();
                self.push(TokKind::Op(op), start, line);
                return Ok(());
            }
        }
        Err(LexError::UnexpectedChar { line, ch })
    }

    fn string(&mut self, raw: bool) -> Result<String, LexError> {
        let quote = self.bytes[self.pos];
        let start_line = self.line;
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        let mut out = String::new();
        loop {
            let Some(&b) = self.bytes.get(self.pos) else {
                return Err(LexError::UnterminatedString { line: start_line });
            };
            if b == quote {
                if !triple {
                    self.pos += 1;
                    return Ok(out);
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.pos += 3;
                    return Ok(out);
                }
            }
            if b == b'\n' {
                if !triple {
                    return Err(LexError::UnterminatedString { line: start_line });
                }
                self.line += 1;
            }
            if b == b'\\' && self.pos + 1 < self.bytes.len() {
                let next = self.src[self.pos + 1..].chars().next().unwrap();
                if next == '\n' {
                    self.line += 1;
                }
                if raw {
                    out.push('\\');
                    out.push(next);
                } else {
                    match next {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        '\\' => out.push('\\'),
                        '\'' => out.push('\''),
                        '"' => out.push('"'),
                        '\n' => {}
                        other => {
                            out.push('\\');
                            out.push(other);
                        }
                    }
                }
                self.pos += 1 + next.len_utf8();
                continue;
            }
            let ch = self.src[self.pos..].chars().next().unwrap();
            out.push(ch);
            self.pos += ch.len_utf8();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn indentation_produces_indent_and_dedent() {
        let k = kinds("if x:\n    y = 1\nz = 2\n");
        assert!(k.contains(&TokKind::Indent));
        assert!(k.contains(&TokKind::Dedent));
        assert_eq!(k.last(), Some(&TokKind::End));
    }

    #[test]
    fn brackets_join_lines() {
        let k = kinds("f(a,\n  b)\n");
        assert_eq!(k.iter().filter(|t| **t == TokKind::Newline).count(), 1);
        assert!(!k.contains(&TokKind::Indent));
    }

    #[test]
    fn triple_quoted_strings_span_lines() {
        let toks = tokenize("x = \"\"\"a\nb\"\"\"\ny = 'c'\n").unwrap();
        let strs: Vec<_> = toks
            .iter()
            .filter_map(|t| match &t.kind {
                TokKind::Str { value, .. } => Some((value.clone(), t.line)),
                _ => None,
            })
            .collect();
        assert_eq!(strs, vec![("a\nb".to_string(), 1), ("c".to_string(), 3)]);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(matches!(
            tokenize("x = 'abc\n"),
            Err(LexError::UnterminatedString { line: 1 })
        ));
    }
}
