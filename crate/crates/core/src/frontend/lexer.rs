use std::fmt;

use crate::diagnostics::{Diagnostic, ErrorCode, FileId, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(u64),
    /// `'name`, a pipeline stage label.
    StageLabel(String),
    Keyword(Keyword),
    /// `#[`
    AttrOpen,
    Underscore,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    PathSep,
    Dot,
    Arrow,
    FatArrow,
    Assign,
    Plus,
    Minus,
    Star,
    Amp,
    AmpAmp,
    Pipe,
    PipePipe,
    Caret,
    Bang,
    Tilde,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Fn,
    Entity,
    Pipeline,
    Struct,
    Port,
    Enum,
    Let,
    Reg,
    Set,
    Decl,
    Inst,
    Stage,
    Match,
    If,
    Else,
    True,
    False,
    Mut,
    Reset,
}

impl Keyword {
    fn from_str(s: &str) -> Option<Keyword> {
        Some(match s {
            "fn" => Keyword::Fn,
            "entity" => Keyword::Entity,
            "pipeline" => Keyword::Pipeline,
            "struct" => Keyword::Struct,
            "port" => Keyword::Port,
            "enum" => Keyword::Enum,
            "let" => Keyword::Let,
            "reg" => Keyword::Reg,
            "set" => Keyword::Set,
            "decl" => Keyword::Decl,
            "inst" => Keyword::Inst,
            "stage" => Keyword::Stage,
            "match" => Keyword::Match,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "mut" => Keyword::Mut,
            "reset" => Keyword::Reset,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Fn => "fn",
            Keyword::Entity => "entity",
            Keyword::Pipeline => "pipeline",
            Keyword::Struct => "struct",
            Keyword::Port => "port",
            Keyword::Enum => "enum",
            Keyword::Let => "let",
            Keyword::Reg => "reg",
            Keyword::Set => "set",
            Keyword::Decl => "decl",
            Keyword::Inst => "inst",
            Keyword::Stage => "stage",
            Keyword::Match => "match",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::Mut => "mut",
            Keyword::Reset => "reset",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TokenKind::*;
        let s = match self {
            Ident(name) => return write!(f, "identifier `{name}`"),
            Int(v) => return write!(f, "integer `{v}`"),
            StageLabel(name) => return write!(f, "stage label `'{name}`"),
            Keyword(k) => return write!(f, "`{}`", k.as_str()),
            AttrOpen => "#[",
            Underscore => "_",
            LParen => "(",
            RParen => ")",
            LBrace => "{",
            RBrace => "}",
            LBracket => "[",
            RBracket => "]",
            Comma => ",",
            Semi => ";",
            Colon => ":",
            PathSep => "::",
            Dot => ".",
            Arrow => "->",
            FatArrow => "=>",
            Assign => "=",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Amp => "&",
            AmpAmp => "&&",
            Pipe => "|",
            PipePipe => "||",
            Caret => "^",
            Bang => "!",
            Tilde => "~",
            Shl => "<<",
            Shr => ">>",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eof => return f.write_str("end of file"),
        };
        write!(f, "`{s}`")
    }
}

impl TokenKind {
    /// Short name used in `--emit tokens` dumps.
    pub fn dump_name(&self) -> String {
        match self {
            TokenKind::Ident(n) => format!("ident({n})"),
            TokenKind::Int(v) => format!("int({v})"),
            TokenKind::StageLabel(n) => format!("stage-label({n})"),
            TokenKind::Keyword(k) => format!("kw-{}", k.as_str()),
            TokenKind::Eof => "eof".to_string(),
            other => {
                let s = other.to_string();
                s.trim_matches('`').to_string()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    file: FileId,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn span(&self, start: usize) -> SourceSpan {
        SourceSpan::new(self.file, start, self.pos)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => self.pos += c.len_utf8(),
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.pos += c.len_utf8();
                    }
                }
                _ => return,
            }
        }
    }

    fn ident_text(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !is_ident_continue(c) {
                break;
            }
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self, start: usize) -> Result<TokenKind, Diagnostic> {
        let (radix, digits_start) = match (self.peek(), self.peek_at(1)) {
            (Some('0'), Some('x')) => (16, self.pos + 2),
            (Some('0'), Some('b')) => (2, self.pos + 2),
            _ => (10, self.pos),
        };
        self.pos = digits_start;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let digits: String = self.src[digits_start..self.pos]
            .chars()
            .filter(|c| *c != '_')
            .collect();
        let span = self.span(start);
        if digits.is_empty() || !digits.chars().all(|c| c.is_digit(radix)) {
            return Err(Diagnostic::error(
                ErrorCode::UnexpectedToken,
                format!("malformed integer literal `{}`", &self.src[start..self.pos]),
                span,
            )
            .label("not a valid integer"));
        }
        u64::from_str_radix(&digits, radix).map(TokenKind::Int).map_err(|_| {
            Diagnostic::error(
                ErrorCode::IntegerTooLarge,
                "Integer literal is too large",
                span,
            )
            .label("does not fit in 64 bits")
        })
    }

    fn punct(&mut self) -> Option<TokenKind> {
        use TokenKind::*;
        let c = self.peek()?;
        let next = self.peek_at(1);
        let (kind, len) = match (c, next) {
            ('#', Some('[')) => (AttrOpen, 2),
            (':', Some(':')) => (PathSep, 2),
            ('-', Some('>')) => (Arrow, 2),
            ('=', Some('>')) => (FatArrow, 2),
            ('=', Some('=')) => (Eq, 2),
            ('!', Some('=')) => (Ne, 2),
            ('<', Some('=')) => (Le, 2),
            ('>', Some('=')) => (Ge, 2),
            ('<', Some('<')) => (Shl, 2),
            ('>', Some('>')) => (Shr, 2),
            ('&', Some('&')) => (AmpAmp, 2),
            ('|', Some('|')) => (PipePipe, 2),
            ('(', _) => (LParen, 1),
            (')', _) => (RParen, 1),
            ('{', _) => (LBrace, 1),
            ('}', _) => (RBrace, 1),
            ('[', _) => (LBracket, 1),
            (']', _) => (RBracket, 1),
            (',', _) => (Comma, 1),
            (';', _) => (Semi, 1),
            (':', _) => (Colon, 1),
            ('.', _) => (Dot, 1),
            ('=', _) => (Assign, 1),
            ('+', _) => (Plus, 1),
            ('-', _) => (Minus, 1),
            ('*', _) => (Star, 1),
            ('&', _) => (Amp, 1),
            ('|', _) => (Pipe, 1),
            ('^', _) => (Caret, 1),
            ('!', _) => (Bang, 1),
            ('~', _) => (Tilde, 1),
            ('<', _) => (Lt, 1),
            ('>', _) => (Gt, 1),
            _ => return None,
        };
        self.pos += len;
        Some(kind)
    }
}

/// Splits `src` into tokens, ending with an `Eof` token. Whitespace and `//`
/// comments are trivia; every other byte belongs to exactly one token.
pub fn lex(src: &str, file: FileId) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut lx = Lexer { src, pos: 0, file };
    let mut tokens = vec![];
    let mut errors = vec![];
    loop {
        lx.skip_trivia();
        let start = lx.pos;
        let Some(c) = lx.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                span: lx.span(start),
            });
            break;
        };
        let kind = if is_ident_start(c) {
            let text = lx.ident_text();
            if text == "_" {
                TokenKind::Underscore
            } else if let Some(k) = Keyword::from_str(text) {
                TokenKind::Keyword(k)
            } else {
                TokenKind::Ident(text.to_string())
            }
        } else if c.is_ascii_digit() {
            match lx.number(start) {
                Ok(k) => k,
                Err(e) => {
                    errors.push(e);
                    continue;
                }
            }
        } else if c == '\'' && lx.peek_at(1).is_some_and(is_ident_start) {
            lx.pos += 1;
            let name = lx.ident_text().to_string();
            TokenKind::StageLabel(name)
        } else if let Some(k) = lx.punct() {
            k
        } else {
            lx.pos += c.len_utf8();
            errors.push(
                Diagnostic::error(
                    ErrorCode::UnknownCharacter,
                    format!("Unknown character `{}`", c.escape_default()),
                    lx.span(start),
                )
                .label("not part of the language"),
            );
            continue;
        };
        tokens.push(Token {
            kind,
            span: lx.span(start),
        });
    }
    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}
