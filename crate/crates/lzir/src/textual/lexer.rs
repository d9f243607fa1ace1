use num_bigint::BigInt;

use super::SourceSpan;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Bare identifier; may contain interior dots (`lp.switch`, `bb1`).
    Ident(String),
    /// `%name`
    Value(String),
    /// `@name`
    Symbol(String),
    /// `^label`
    Label(String),
    Int(BigInt),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Colon,
    Equal,
    Arrow,
    Bang,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Value(s) => write!(f, "'%{s}'"),
            Tok::Symbol(s) => write!(f, "'@{s}'"),
            Tok::Label(s) => write!(f, "'^{s}'"),
            Tok::Int(v) => write!(f, "'{v}'"),
            Tok::LBrace => write!(f, "'{{'"),
            Tok::RBrace => write!(f, "'}}'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::Lt => write!(f, "'<'"),
            Tok::Gt => write!(f, "'>'"),
            Tok::Comma => write!(f, "','"),
            Tok::Colon => write!(f, "':'"),
            Tok::Equal => write!(f, "'='"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Bang => write!(f, "'!'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub struct LexError {
    pub message: String,
    pub span: SourceSpan,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    let ident_start = |c: u8| c.is_ascii_alphabetic() || c == b'_';
    let ident_cont = |c: u8| c.is_ascii_alphanumeric() || c == b'_' || c == b'.';

    while i < bytes.len() {
        let c = bytes[i];
        let (sl, sc, so) = (line, col, i);
        let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
            if bytes[*i] == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };

        if c == b' ' || c == b'\t' || c == b'\r' || c == b'\n' {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }

        let span_to = |i: usize, line: u32, col: u32| SourceSpan {
            start: so,
            end: i,
            line: sl,
            col: sc,
            end_line: line,
            end_col: col,
        };

        let simple = match c {
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'<' => Some(Tok::Lt),
            b'>' => Some(Tok::Gt),
            b',' => Some(Tok::Comma),
            b':' => Some(Tok::Colon),
            b'=' => Some(Tok::Equal),
            b'!' => Some(Tok::Bang),
            _ => None,
        };
        if let Some(tok) = simple {
            advance(&mut i, &mut line, &mut col);
            toks.push(Spanned { tok, span: span_to(i, line, col) });
            continue;
        }

        match c {
            b'-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    toks.push(Spanned { tok: Tok::Arrow, span: span_to(i, line, col) });
                } else if i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    advance(&mut i, &mut line, &mut col);
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        advance(&mut i, &mut line, &mut col);
                    }
                    let v: BigInt = src[start..i].parse().unwrap();
                    toks.push(Spanned { tok: Tok::Int(-v), span: span_to(i, line, col) });
                } else {
                    return Err(LexError {
                        message: "unexpected '-'".into(),
                        span: SourceSpan::point(so, sl, sc),
                    });
                }
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    advance(&mut i, &mut line, &mut col);
                }
                let v: BigInt = src[start..i].parse().unwrap();
                toks.push(Spanned { tok: Tok::Int(v), span: span_to(i, line, col) });
            }
            b'%' | b'@' | b'^' => {
                advance(&mut i, &mut line, &mut col);
                let start = i;
                // value names may be bare numbers (%0); symbols/labels are identifiers
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || (c != b'%' && bytes[i] == b'.'))
                {
                    advance(&mut i, &mut line, &mut col);
                }
                if start == i && c != b'^' {
                    return Err(LexError {
                        message: format!("expected name after '{}'", c as char),
                        span: SourceSpan::point(so, sl, sc),
                    });
                }
                // a bare caret (region parameter list) lexes as an empty label
                let name = src[start..i].to_string();
                let tok = match c {
                    b'%' => Tok::Value(name),
                    b'@' => Tok::Symbol(name),
                    _ => Tok::Label(name),
                };
                toks.push(Spanned { tok, span: span_to(i, line, col) });
            }
            c if ident_start(c) => {
                let start = i;
                while i < bytes.len() && ident_cont(bytes[i]) {
                    advance(&mut i, &mut line, &mut col);
                }
                toks.push(Spanned { tok: Tok::Ident(src[start..i].to_string()), span: span_to(i, line, col) });
            }
            _ => {
                return Err(LexError {
                    message: format!("unexpected character '{}'", c as char),
                    span: SourceSpan::point(so, sl, sc),
                })
            }
        }
    }
    let end_span = SourceSpan::point(bytes.len(), line, col);
    toks.push(Spanned { tok: Tok::Eof, span: end_span });
    Ok(toks)
}
