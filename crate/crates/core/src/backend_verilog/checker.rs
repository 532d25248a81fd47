//! Recursive-descent checker for the SystemVerilog subset the backend
//! emits. Besides the grammar it checks that every referenced signal is
//! declared in its module and that no name is declared twice.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::mir::RESERVED;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SubsetError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    System(String),
    Number(u64),
    Sized(String),
    Punct(&'static str),
}

const PUNCT: [&str; 31] = [
    ">>>", "<<", ">>", "<=", ">=", "==", "!=", "+:", "(", ")", "[", "]", "{", "}", ",", ";", ":", "?", ".", "@", "=",
    "<", ">", "+", "-", "*", "&", "|", "^", "~", "!",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SubsetError> {
    let mut out = vec![];
    let b = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    while i < b.len() {
        let c = b[i] as char;
        if c == '\n' {
            line += 1;
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if text[i..].starts_with("//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            i += 1;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'$') {
                i += 1;
            }
            let word = text[start..i].to_string();
            out.push((if c == '$' { Tok::System(word) } else { Tok::Ident(word) }, line));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n: u64 = text[start..i].parse().map_err(|_| SubsetError {
                line,
                message: "number out of range".into(),
            })?;
            if text[i..].starts_with("'b") {
                i += 2;
                let ds = i;
                while i < b.len() && matches!(b[i], b'0' | b'1' | b'x' | b'X' | b'z' | b'Z' | b'_') {
                    i += 1;
                }
                let digits: String = text[ds..i].chars().filter(|c| *c != '_').collect();
                if digits.len() as u64 != n {
                    return Err(SubsetError {
                        line,
                        message: format!("literal `{}` has {} digits for width {n}", &text[start..i], digits.len()),
                    });
                }
                out.push((Tok::Sized(digits), line));
            } else {
                out.push((Tok::Number(n), line));
            }
        } else if let Some(p) = PUNCT.iter().find(|p| text[i..].starts_with(**p)) {
            out.push((Tok::Punct(p), line));
            i += p.len();
        } else {
            return Err(SubsetError {
                line,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    declared: BTreeSet<String>,
}

type R<T> = Result<T, SubsetError>;

const BINARY: [&[&str]; 9] = [
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", "<=", ">", ">="],
    &["<<", ">>", ">>>"],
    &["+", "-"],
    &["*"],
    &[],
];

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map(|t| t.1)
            .unwrap_or(1)
    }

    fn err<T>(&self, message: impl Into<String>) -> R<T> {
        Err(SubsetError {
            line: self.line(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn at(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(q)) if q == w)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.at(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> R<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`, found {}", self.describe()))
        }
    }

    fn keyword(&mut self, w: &str) -> R<()> {
        if self.at_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{w}`, found {}", self.describe()))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Ident(s)) | Some(Tok::System(s)) => format!("`{s}`"),
            Some(Tok::Number(n)) => format!("`{n}`"),
            Some(Tok::Sized(d)) => format!("literal `{d}`"),
            Some(Tok::Punct(p)) => format!("`{p}`"),
        }
    }

    fn ident(&mut self) -> R<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn number(&mut self) -> R<u64> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err(format!("expected number, found {}", self.describe())),
        }
    }

    fn declare(&mut self, name: String) -> R<()> {
        if !self.declared.insert(name.clone()) {
            return self.err(format!("`{name}` declared twice"));
        }
        Ok(())
    }

    fn used(&mut self) -> R<String> {
        let n = self.ident()?;
        if !self.declared.contains(&n) {
            self.pos -= 1;
            return self.err(format!("`{n}` is not declared"));
        }
        Ok(n)
    }

    fn range(&mut self) -> R<()> {
        self.expect("[")?;
        let hi = self.number()?;
        self.expect(":")?;
        let lo = self.number()?;
        self.expect("]")?;
        if lo != 0 || hi < lo {
            return self.err("packed ranges must have the form [N:0]");
        }
        Ok(())
    }

    fn file(&mut self) -> R<()> {
        while self.peek().is_some() {
            self.module()?;
        }
        Ok(())
    }

    fn module(&mut self) -> R<()> {
        self.declared.clear();
        self.keyword("module")?;
        self.ident()?;
        self.expect("(")?;
        if !self.at(")") {
            loop {
                if self.at_word("input") || self.at_word("output") {
                    self.pos += 1;
                } else {
                    return self.err(format!("expected port direction, found {}", self.describe()));
                }
                self.keyword("logic")?;
                self.range()?;
                let n = self.ident()?;
                self.declare(n)?;
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.expect(";")?;
        while !self.at_word("endmodule") {
            if self.peek().is_none() {
                return self.err("missing `endmodule`");
            }
            self.item()?;
        }
        self.pos += 1;
        Ok(())
    }

    fn item(&mut self) -> R<()> {
        if self.at_word("logic") {
            self.pos += 1;
            self.range()?;
            let n = self.ident()?;
            self.declare(n)?;
            if self.eat("[") {
                self.expect_number_zero()?;
                self.expect(":")?;
                self.number()?;
                self.expect("]")?;
            }
            self.expect(";")
        } else if self.at_word("assign") {
            self.pos += 1;
            self.lvalue()?;
            self.expect("=")?;
            self.expr()?;
            self.expect(";")
        } else if self.at_word("always_ff") {
            self.pos += 1;
            self.expect("@")?;
            self.expect("(")?;
            loop {
                self.keyword("posedge")?;
                self.used()?;
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
            self.keyword("begin")?;
            while !self.at_word("end") {
                if self.peek().is_none() {
                    return self.err("missing `end`");
                }
                self.seq()?;
            }
            self.pos += 1;
            Ok(())
        } else {
            self.instance()
        }
    }

    fn expect_number_zero(&mut self) -> R<()> {
        if self.number()? != 0 {
            return self.err("unpacked ranges must start at 0");
        }
        Ok(())
    }

    fn seq(&mut self) -> R<()> {
        if self.at_word("if") {
            self.pos += 1;
            self.expect("(")?;
            self.expr()?;
            self.expect(")")?;
            self.nonblocking()?;
            if self.at_word("else") {
                self.pos += 1;
                self.nonblocking()?;
            }
            Ok(())
        } else {
            self.nonblocking()
        }
    }

    fn nonblocking(&mut self) -> R<()> {
        self.lvalue()?;
        self.expect("<=")?;
        self.expr()?;
        self.expect(";")
    }

    fn lvalue(&mut self) -> R<()> {
        self.used()?;
        if self.eat("[") {
            self.expr()?;
            self.expect("]")?;
        }
        Ok(())
    }

    fn instance(&mut self) -> R<()> {
        self.ident()?;
        let n = self.ident()?;
        self.declare(n)?;
        self.expect("(")?;
        if !self.at(")") {
            loop {
                self.expect(".")?;
                self.ident()?;
                self.expect("(")?;
                self.used()?;
                self.expect(")")?;
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.expect(";")
    }

    fn expr(&mut self) -> R<()> {
        self.binary(0)?;
        if self.eat("?") {
            self.expr()?;
            self.expect(":")?;
            self.expr()?;
        }
        Ok(())
    }

    fn binary(&mut self, level: usize) -> R<()> {
        if BINARY[level].is_empty() {
            return self.unary();
        }
        self.binary(level + 1)?;
        while BINARY[level].iter().any(|p| self.at(p)) {
            self.pos += 1;
            self.binary(level + 1)?;
        }
        Ok(())
    }

    fn unary(&mut self) -> R<()> {
        if self.eat("-") || self.eat("~") || self.eat("!") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> R<()> {
        match self.peek().cloned() {
            Some(Tok::Sized(_)) | Some(Tok::Number(_)) => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::System(s)) if s == "$signed" => {
                self.pos += 1;
                self.expect("(")?;
                self.expr()?;
                self.expect(")")
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                self.expr()?;
                self.expect(")")
            }
            Some(Tok::Punct("{")) => {
                self.pos += 1;
                self.expr()?;
                if self.eat("{") {
                    self.expr()?;
                    self.expect("}")?;
                } else {
                    while self.eat(",") {
                        self.expr()?;
                    }
                }
                self.expect("}")
            }
            Some(Tok::Ident(_)) => {
                self.used()?;
                if self.eat("[") {
                    self.expr()?;
                    if self.eat(":") || self.eat("+:") {
                        self.expr()?;
                    }
                    self.expect("]")?;
                }
                Ok(())
            }
            _ => self.err(format!("expected expression, found {}", self.describe())),
        }
    }
}

/// Checks that `text` lies within the emitted subset.
pub fn check_subset(text: &str) -> Result<(), SubsetError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        declared: BTreeSet::new(),
    };
    p.file()
}
