//! Tokenizer for the supported C subset.
//!
//! `#include` lines and comments are skipped as trivia. The five limits macros
//! are produced as dedicated tokens so later stages never have to scan text.

use num_bigint::BigInt;
use num_traits::Num;

use super::span::Span;
use super::types::LimitMacro;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int { value: BigInt, unsigned: bool },
    Str(String),
    Limit(LimitMacro),
    Kw(Keyword),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Char,
    Short,
    Int,
    Long,
    Unsigned,
    Signed,
    Void,
    Struct,
    If,
    Else,
    While,
    For,
    Return,
    Const,
    Static,
    Int64T,
    Break,
    Continue,
    Do,
    Switch,
    Goto,
    Float,
    Double,
    Typedef,
    Sizeof,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Keyword> {
        Some(match s {
            "char" => Keyword::Char,
            "short" => Keyword::Short,
            "int" => Keyword::Int,
            "long" => Keyword::Long,
            "unsigned" => Keyword::Unsigned,
            "signed" => Keyword::Signed,
            "void" => Keyword::Void,
            "struct" => Keyword::Struct,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "for" => Keyword::For,
            "return" => Keyword::Return,
            "const" => Keyword::Const,
            "static" => Keyword::Static,
            "int64_t" => Keyword::Int64T,
            "break" => Keyword::Break,
            "continue" => Keyword::Continue,
            "do" => Keyword::Do,
            "switch" => Keyword::Switch,
            "goto" => Keyword::Goto,
            "float" => Keyword::Float,
            "double" => Keyword::Double,
            "typedef" => Keyword::Typedef,
            "sizeof" => Keyword::Sizeof,
            _ => return None,
        })
    }

    pub fn text(self) -> &'static str {
        match self {
            Keyword::Char => "char",
            Keyword::Short => "short",
            Keyword::Int => "int",
            Keyword::Long => "long",
            Keyword::Unsigned => "unsigned",
            Keyword::Signed => "signed",
            Keyword::Void => "void",
            Keyword::Struct => "struct",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::For => "for",
            Keyword::Return => "return",
            Keyword::Const => "const",
            Keyword::Static => "static",
            Keyword::Int64T => "int64_t",
            Keyword::Break => "break",
            Keyword::Continue => "continue",
            Keyword::Do => "do",
            Keyword::Switch => "switch",
            Keyword::Goto => "goto",
            Keyword::Float => "float",
            Keyword::Double => "double",
            Keyword::Typedef => "typedef",
            Keyword::Sizeof => "sizeof",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "+=", "-=", "*=", "/=", "%=", "<=", ">=", "==", "!=",
    "&&", "||", "<<", ">>", "&=", "|=", "^=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "&",
    "|", "^", "~", "?", ":", "(", ")", "{", "}", "[", "]", ";", ",", ".",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
            at_line_start: true,
        }
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn bump(&mut self) {
        if let Some(&b) = self.bytes.get(self.pos) {
            self.pos += 1;
            if b == b'\n' {
                self.line += 1;
                self.col = 1;
                self.at_line_start = true;
            } else if (b & 0xC0) != 0x80 {
                self.col += 1;
            }
        }
    }

    fn span_from(&self, start: usize, line: u32, col: u32) -> Span {
        Span {
            start,
            end: self.pos,
            line,
            col,
            end_line: self.line,
            end_col: self.col,
        }
    }

    fn run(mut self) -> Result<Vec<Token>, FrontendError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let (start, line, col) = (self.pos, self.line, self.col);
            let Some(c) = self.peek(0) else {
                out.push(Token {
                    tok: Tok::Eof,
                    span: self.span_from(start, line, col),
                });
                return Ok(out);
            };
            self.at_line_start = false;
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                while matches!(self.peek(0), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
                    self.bump();
                }
                let word = &self.src[start..self.pos];
                if let Some(kw) = Keyword::from_ident(word) {
                    Tok::Kw(kw)
                } else if let Some(m) = LimitMacro::from_name(word) {
                    Tok::Limit(m)
                } else {
                    Tok::Ident(word.to_string())
                }
            } else if c.is_ascii_digit() {
                self.number(start, line, col)?
            } else if c == b'"' {
                self.string(start, line, col)?
            } else if c == b'\'' {
                self.char_lit(start, line, col)?
            } else {
                let rest = &self.src[self.pos..];
                match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                    Some(p) => {
                        for _ in 0..p.len() {
                            self.bump();
                        }
                        Tok::Punct(p)
                    }
                    None => {
                        let ch = rest.chars().next().unwrap_or('?');
                        return Err(FrontendError::Syntax {
                            line,
                            col,
                            expected: format!("a token, found character {ch:?}"),
                        });
                    }
                }
            };
            out.push(Token {
                tok,
                span: self.span_from(start, line, col),
            });
        }
    }

    fn skip_trivia(&mut self) -> Result<(), FrontendError> {
        loop {
            match self.peek(0) {
                Some(b' ' | b'\t' | b'\r' | b'\n') => self.bump(),
                Some(b'/') if self.peek(1) == Some(b'/') => {
                    while !matches!(self.peek(0), None | Some(b'\n')) {
                        self.bump();
                    }
                }
                Some(b'/') if self.peek(1) == Some(b'*') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.peek(0) {
                            None => {
                                return Err(FrontendError::Syntax {
                                    line,
                                    col,
                                    expected: "end of block comment".into(),
                                })
                            }
                            Some(b'*') if self.peek(1) == Some(b'/') => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            _ => self.bump(),
                        }
                    }
                }
                Some(b'#') if self.at_line_start => {
                    let (start, line, col) = (self.pos, self.line, self.col);
                    while !matches!(self.peek(0), None | Some(b'\n')) {
                        self.bump();
                    }
                    let directive = self.src[start..self.pos].trim_start_matches('#').trim_start();
                    if !directive.starts_with("include") {
                        let name = directive.split_whitespace().next().unwrap_or("");
                        return Err(FrontendError::Unsupported {
                            construct: format!("preprocessor directive #{name}"),
                            span: Span {
                                start,
                                end: self.pos,
                                line,
                                col,
                                end_line: line,
                                end_col: self.col,
                            },
                        });
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self, start: usize, line: u32, col: u32) -> Result<Tok, FrontendError> {
        let hex = self.peek(0) == Some(b'0') && matches!(self.peek(1), Some(b'x' | b'X'));
        if hex {
            self.bump();
            self.bump();
        }
        let digits_start = self.pos;
        while matches!(self.peek(0), Some(b) if b.is_ascii_hexdigit() && (hex || b.is_ascii_digit()))
        {
            self.bump();
        }
        let digits = &self.src[digits_start..self.pos];
        let mut unsigned = false;
        while let Some(b) = self.peek(0) {
            match b {
                b'u' | b'U' => unsigned = true,
                b'l' | b'L' => {}
                _ => break,
            }
            self.bump();
        }
        if matches!(self.peek(0), Some(b) if b.is_ascii_alphanumeric() || b == b'_' || b == b'.') {
            return Err(FrontendError::Syntax {
                line,
                col,
                expected: format!("integer literal, found `{}`", &self.src[start..=self.pos]),
            });
        }
        let radix = if hex { 16 } else { 10 };
        let value = BigInt::from_str_radix(digits, radix).map_err(|_| FrontendError::Syntax {
            line,
            col,
            expected: "integer literal digits".into(),
        })?;
        Ok(Tok::Int { value, unsigned })
    }

    fn string(&mut self, _start: usize, line: u32, col: u32) -> Result<Tok, FrontendError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.peek(0) {
                None | Some(b'\n') => {
                    return Err(FrontendError::Syntax {
                        line,
                        col,
                        expected: "closing `\"`".into(),
                    })
                }
                Some(b'"') => {
                    self.bump();
                    return Ok(Tok::Str(s));
                }
                Some(b'\\') => {
                    self.bump();
                    let esc = self.peek(0).unwrap_or(b'\\');
                    s.push('\\');
                    s.push(esc as char);
                    self.bump();
                }
                Some(_) => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    s.push(ch);
                    for _ in 0..ch.len_utf8() {
                        self.bump();
                    }
                }
            }
        }
    }

    fn char_lit(&mut self, _start: usize, line: u32, col: u32) -> Result<Tok, FrontendError> {
        self.bump();
        let value = match self.peek(0) {
            Some(b'\\') => {
                self.bump();
                let v = match self.peek(0) {
                    Some(b'n') => 10,
                    Some(b't') => 9,
                    Some(b'0') => 0,
                    Some(b'r') => 13,
                    Some(b) => b as i64,
                    None => 0,
                };
                self.bump();
                v
            }
            Some(b) if b != b'\'' => {
                self.bump();
                b as i64
            }
            _ => {
                return Err(FrontendError::Syntax {
                    line,
                    col,
                    expected: "character literal".into(),
                })
            }
        };
        if self.peek(0) != Some(b'\'') {
            return Err(FrontendError::Syntax {
                line,
                col,
                expected: "closing `'`".into(),
            });
        }
        self.bump();
        Ok(Tok::Int {
            value: BigInt::from(value),
            unsigned: false,
        })
    }
}
