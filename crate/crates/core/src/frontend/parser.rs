//! Recursive-descent parser with one token of lookahead.
//!
//! Syntax errors abort the current item; the parser then skips to the next
//! token that can only begin an item and continues, so one run reports an
//! error per broken item.

use super::ast::*;
use super::lexer::{lex, Keyword, Token, TokenKind};
use crate::diagnostics::{Diagnostic, ErrorCode, FileId, SourceSpan};

type PResult<T> = Result<T, Diagnostic>;

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    file: FileId,
}

fn binary_op(kind: &TokenKind) -> Option<BinaryOp> {
    Some(match kind {
        TokenKind::Plus => BinaryOp::Add,
        TokenKind::Minus => BinaryOp::Sub,
        TokenKind::Star => BinaryOp::Mul,
        TokenKind::Eq => BinaryOp::Eq,
        TokenKind::Ne => BinaryOp::Ne,
        TokenKind::Lt => BinaryOp::Lt,
        TokenKind::Gt => BinaryOp::Gt,
        TokenKind::Le => BinaryOp::Le,
        TokenKind::Ge => BinaryOp::Ge,
        TokenKind::AmpAmp => BinaryOp::LogicAnd,
        TokenKind::PipePipe => BinaryOp::LogicOr,
        TokenKind::Amp => BinaryOp::BitAnd,
        TokenKind::Pipe => BinaryOp::BitOr,
        TokenKind::Caret => BinaryOp::BitXor,
        TokenKind::Shl => BinaryOp::Shl,
        TokenKind::Shr => BinaryOp::Shr,
        _ => return None,
    })
}

impl Parser {
    pub fn new(tokens: Vec<Token>, file: FileId) -> Self {
        assert!(
            matches!(tokens.last(), Some(t) if t.kind == TokenKind::Eof),
            "token stream must end with Eof"
        );
        Parser {
            tokens,
            pos: 0,
            file,
        }
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_token(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        if self.pos == 0 {
            self.span()
        } else {
            self.tokens[self.pos - 1].span
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == kind
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        *self.peek() == TokenKind::Keyword(kw)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let t = self.peek_token();
        Diagnostic::error(
            ErrorCode::UnexpectedToken,
            format!("Unexpected {}, expected {expected}", t.kind),
            t.span,
        )
        .label(format!("expected {expected}"))
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if self.at(&kind) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&kind.to_string()))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Token> {
        self.expect(TokenKind::Keyword(kw))
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                let t = self.bump();
                Ok(Ident { name, span: t.span })
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn int(&mut self) -> PResult<(u64, SourceSpan)> {
        match self.peek().clone() {
            TokenKind::Int(v) => {
                let t = self.bump();
                Ok((v, t.span))
            }
            _ => Err(self.unexpected("integer literal")),
        }
    }

    /// Consumes one `>`; splits `>>` and `>=` so nested type arguments close.
    fn expect_closing_angle(&mut self) -> PResult<()> {
        let t = self.peek_token().clone();
        let rest = match t.kind {
            TokenKind::Gt => {
                self.bump();
                return Ok(());
            }
            TokenKind::Shr => TokenKind::Gt,
            TokenKind::Ge => TokenKind::Assign,
            _ => return Err(self.unexpected("`>`")),
        };
        self.tokens[self.pos] = Token {
            kind: rest,
            span: SourceSpan::new(t.span.file, t.span.start as usize + 1, t.span.end as usize),
        };
        Ok(())
    }

    fn comma_list<T>(
        &mut self,
        close: TokenKind,
        mut item: impl FnMut(&mut Self) -> PResult<T>,
    ) -> PResult<Vec<T>> {
        let mut out = vec![];
        while !self.at(&close) {
            out.push(item(self)?);
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(close)?;
        Ok(out)
    }

    fn at_item_start(&self) -> bool {
        matches!(
            self.peek(),
            TokenKind::AttrOpen
                | TokenKind::Eof
                | TokenKind::Keyword(Keyword::Fn)
                | TokenKind::Keyword(Keyword::Entity)
                | TokenKind::Keyword(Keyword::Pipeline)
                | TokenKind::Keyword(Keyword::Struct)
                | TokenKind::Keyword(Keyword::Enum)
        )
    }

    pub fn parse_program(&mut self) -> (Program, Vec<Diagnostic>) {
        let mut items = vec![];
        let mut errors = vec![];
        while !self.at(&TokenKind::Eof) {
            let start = self.pos;
            match self.item() {
                Ok(item) => items.push(item),
                Err(e) => {
                    errors.push(e);
                    if self.pos == start {
                        self.bump();
                    }
                    while !self.at_item_start() {
                        self.bump();
                    }
                }
            }
        }
        (
            Program {
                file: self.file,
                items,
            },
            errors,
        )
    }

    fn item(&mut self) -> PResult<Item> {
        let start = self.span();
        let mut attributes = vec![];
        while self.eat(&TokenKind::AttrOpen) {
            let name = self.ident()?;
            self.expect(TokenKind::RBracket)?;
            attributes.push(Attribute { name });
        }
        match self.peek() {
            TokenKind::Keyword(Keyword::Fn | Keyword::Entity | Keyword::Pipeline) => {
                self.unit(start, attributes).map(Item::Unit)
            }
            TokenKind::Keyword(Keyword::Struct | Keyword::Enum) => {
                if let Some(a) = attributes.first() {
                    return Err(Diagnostic::error(
                        ErrorCode::UnknownAttribute,
                        format!("Attribute `{}` is not allowed on type declarations", a.name.name),
                        a.name.span,
                    ));
                }
                self.type_decl(start).map(Item::Type)
            }
            _ => Err(self.unexpected("`fn`, `entity`, `pipeline`, `struct` or `enum`")),
        }
    }

    fn unit(&mut self, start: SourceSpan, attributes: Vec<Attribute>) -> PResult<AstUnit> {
        let kw = self.bump();
        let kind = match kw.kind {
            TokenKind::Keyword(Keyword::Fn) => AstUnitKind::Fn,
            TokenKind::Keyword(Keyword::Entity) => AstUnitKind::Entity,
            _ => {
                if !self.at(&TokenKind::LParen) {
                    return Err(Diagnostic::error(
                        ErrorCode::MissingPipelineDepth,
                        "Pipeline header is missing its depth",
                        self.span(),
                    )
                    .label("expected `(depth)` here")
                    .note("pipeline depth is part of the public interface and must be written, e.g. `pipeline(4) name(...)`"));
                }
                self.bump();
                let (depth, _) = self.int()?;
                self.expect(TokenKind::RParen)?;
                AstUnitKind::Pipeline { depth }
            }
        };
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let params = self.comma_list(TokenKind::RParen, |p| p.param())?;
        let output = if self.eat(&TokenKind::Arrow) {
            Some(self.ty()?)
        } else {
            None
        };
        let body = if self.eat(&TokenKind::Semi) {
            None
        } else if self.at(&TokenKind::LBrace) {
            Some(self.block()?)
        } else {
            return Err(self.unexpected("`{` or `;`"));
        };
        Ok(AstUnit {
            kind,
            name,
            attributes,
            params,
            output,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn param(&mut self) -> PResult<AstParam> {
        let name = self.ident()?;
        self.expect(TokenKind::Colon)?;
        let ty = self.ty()?;
        Ok(AstParam { name, ty })
    }

    fn type_decl(&mut self, start: SourceSpan) -> PResult<AstTypeDecl> {
        let kw = self.bump();
        let is_enum = kw.kind == TokenKind::Keyword(Keyword::Enum);
        let is_port = !is_enum && self.eat(&TokenKind::Keyword(Keyword::Port));
        let name = self.ident()?;
        let mut type_params = vec![];
        if self.eat(&TokenKind::Lt) {
            loop {
                type_params.push(self.ident()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect_closing_angle()?;
        }
        self.expect(TokenKind::LBrace)?;
        let kind = if is_enum {
            let variants = self.comma_list(TokenKind::RBrace, |p| {
                let name = p.ident()?;
                let fields = if p.eat(&TokenKind::LBrace) {
                    Some(p.comma_list(TokenKind::RBrace, |p| p.param())?)
                } else {
                    None
                };
                Ok(AstVariant { name, fields })
            })?;
            AstTypeDeclKind::Enum { variants }
        } else {
            let fields = self.comma_list(TokenKind::RBrace, |p| p.param())?;
            AstTypeDeclKind::Struct { is_port, fields }
        };
        Ok(AstTypeDecl {
            kind,
            name,
            type_params,
            span: start.to(self.prev_span()),
        })
    }

    pub fn ty(&mut self) -> PResult<AstType> {
        let start = self.span();
        let kind = match self.peek() {
            TokenKind::Amp => {
                self.bump();
                if self.eat(&TokenKind::Keyword(Keyword::Mut)) {
                    AstTypeKind::MutWire(Box::new(self.ty()?))
                } else {
                    AstTypeKind::Wire(Box::new(self.ty()?))
                }
            }
            TokenKind::LParen => {
                self.bump();
                let mut elems = vec![];
                let mut trailing_comma = false;
                while !self.at(&TokenKind::RParen) {
                    elems.push(self.ty()?);
                    trailing_comma = self.eat(&TokenKind::Comma);
                    if !trailing_comma {
                        break;
                    }
                }
                self.expect(TokenKind::RParen)?;
                if elems.len() == 1 && !trailing_comma {
                    return Ok(elems.pop().unwrap());
                }
                AstTypeKind::Tuple(elems)
            }
            TokenKind::LBracket => {
                self.bump();
                let elem = self.ty()?;
                self.expect(TokenKind::Semi)?;
                let (len, _) = self.int()?;
                self.expect(TokenKind::RBracket)?;
                AstTypeKind::Array {
                    elem: Box::new(elem),
                    len,
                }
            }
            TokenKind::Ident(_) => {
                let path = self.path()?;
                let mut args = vec![];
                if self.eat(&TokenKind::Lt) {
                    loop {
                        if let TokenKind::Int(_) = self.peek() {
                            let (v, s) = self.int()?;
                            args.push(AstTypeArg::Int(v, s));
                        } else {
                            args.push(AstTypeArg::Type(self.ty()?));
                        }
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect_closing_angle()?;
                }
                AstTypeKind::Named { path, args }
            }
            _ => return Err(self.unexpected("type")),
        };
        Ok(AstType {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn path(&mut self) -> PResult<AstPath> {
        let first = self.ident()?;
        let mut span = first.span;
        let mut segments = vec![first];
        while self.at(&TokenKind::PathSep) {
            self.bump();
            let seg = self.ident()?;
            span = span.to(seg.span);
            segments.push(seg);
        }
        Ok(AstPath { segments, span })
    }

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect(TokenKind::LBrace)?.span;
        let mut stmts = vec![];
        let mut result = None;
        loop {
            if self.at(&TokenKind::RBrace) {
                break;
            }
            let stmt_start = self.span();
            let kind = match self.peek().clone() {
                TokenKind::Keyword(Keyword::Let) => self.let_stmt()?,
                TokenKind::Keyword(Keyword::Reg) => self.reg_stmt()?,
                TokenKind::Keyword(Keyword::Set) => {
                    self.bump();
                    let target = self.expr()?;
                    self.expect(TokenKind::Assign)?;
                    let value = self.expr()?;
                    self.expect(TokenKind::Semi)?;
                    StmtKind::Set { target, value }
                }
                TokenKind::Keyword(Keyword::Decl) => {
                    self.bump();
                    let mut names = vec![self.ident()?];
                    while self.eat(&TokenKind::Comma) {
                        names.push(self.ident()?);
                    }
                    self.expect(TokenKind::Semi)?;
                    StmtKind::Decl(names)
                }
                TokenKind::StageLabel(name) => {
                    let t = self.bump();
                    StmtKind::Label(Ident { name, span: t.span })
                }
                _ => {
                    let e = self.expr()?;
                    if self.eat(&TokenKind::Semi) {
                        StmtKind::Expr(e)
                    } else if self.at(&TokenKind::RBrace) {
                        result = Some(Box::new(e));
                        break;
                    } else if matches!(
                        e.kind,
                        ExprKind::If { .. } | ExprKind::Match { .. } | ExprKind::Block(_)
                    ) {
                        StmtKind::Expr(e)
                    } else {
                        return Err(self.unexpected("`;` or `}`"));
                    }
                }
            };
            stmts.push(Stmt {
                kind,
                span: stmt_start.to(self.prev_span()),
            });
        }
        let end = self.expect(TokenKind::RBrace)?.span;
        Ok(Block {
            stmts,
            result,
            span: start.to(end),
        })
    }

    fn let_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw(Keyword::Let)?;
        let pattern = self.pattern()?;
        let ty = if self.eat(&TokenKind::Colon) {
            Some(self.ty()?)
        } else {
            None
        };
        self.expect(TokenKind::Assign)?;
        let value = self.expr()?;
        self.expect(TokenKind::Semi)?;
        Ok(StmtKind::Let { pattern, ty, value })
    }

    fn reg_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw(Keyword::Reg)?;
        match self.peek() {
            TokenKind::Semi => {
                self.bump();
                Ok(StmtKind::PipelineReg { count: 1 })
            }
            TokenKind::Star => {
                self.bump();
                let (count, _) = self.int()?;
                self.expect(TokenKind::Semi)?;
                Ok(StmtKind::PipelineReg { count })
            }
            TokenKind::LParen => {
                self.bump();
                let clock = self.expr()?;
                self.expect(TokenKind::RParen)?;
                let name = self.ident()?;
                let ty = if self.eat(&TokenKind::Colon) {
                    Some(self.ty()?)
                } else {
                    None
                };
                let reset = if self.eat(&TokenKind::Keyword(Keyword::Reset)) {
                    self.expect(TokenKind::LParen)?;
                    let trigger = self.expr()?;
                    self.expect(TokenKind::Colon)?;
                    let value = self.expr()?;
                    self.expect(TokenKind::RParen)?;
                    Some(RegReset { trigger, value })
                } else {
                    None
                };
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                self.expect(TokenKind::Semi)?;
                Ok(StmtKind::Reg {
                    clock,
                    name,
                    ty,
                    reset,
                    value,
                })
            }
            _ => Err(self.unexpected("`;`, `*` or `(`")),
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = binary_op(self.peek()) {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let op = match self.peek() {
            TokenKind::Minus => UnaryOp::Neg,
            TokenKind::Bang => UnaryOp::Not,
            TokenKind::Tilde => UnaryOp::BitNot,
            TokenKind::Star => UnaryOp::Deref,
            TokenKind::Amp => UnaryOp::Wire,
            _ => return self.postfix(),
        };
        self.bump();
        if op == UnaryOp::Neg {
            if let TokenKind::Int(v) = *self.peek() {
                let t = self.bump();
                let value = -(v as i128);
                let lit = Expr {
                    kind: ExprKind::Int(value),
                    span: start.to(t.span),
                };
                return self.postfix_ops(lit);
            }
        }
        let operand = self.unary()?;
        let span = start.to(operand.span);
        Ok(Expr {
            kind: ExprKind::Unary(op, Box::new(operand)),
            span,
        })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let e = self.primary()?;
        self.postfix_ops(e)
    }

    fn postfix_ops(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            match self.peek() {
                TokenKind::Dot => {
                    self.bump();
                    match self.peek().clone() {
                        TokenKind::Int(i) => {
                            let t = self.bump();
                            let span = e.span.to(t.span);
                            e = Expr {
                                kind: ExprKind::TupleIndex(Box::new(e), i),
                                span,
                            };
                        }
                        _ => {
                            let f = self.ident()?;
                            let span = e.span.to(f.span);
                            e = Expr {
                                kind: ExprKind::Field(Box::new(e), f),
                                span,
                            };
                        }
                    }
                }
                TokenKind::LBracket => {
                    self.bump();
                    let idx = self.expr()?;
                    let end = self.expect(TokenKind::RBracket)?.span;
                    let span = e.span.to(end);
                    e = Expr {
                        kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                        span,
                    };
                }
                _ => return Ok(e),
            }
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(TokenKind::LParen)?;
        self.comma_list(TokenKind::RParen, |p| p.expr())
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            TokenKind::Int(v) => {
                self.bump();
                ExprKind::Int(v as i128)
            }
            TokenKind::Keyword(Keyword::True) => {
                self.bump();
                ExprKind::Bool(true)
            }
            TokenKind::Keyword(Keyword::False) => {
                self.bump();
                ExprKind::Bool(false)
            }
            TokenKind::Ident(_) => {
                let path = self.path()?;
                if self.at(&TokenKind::LParen) {
                    let args = self.args()?;
                    ExprKind::Call { path, args }
                } else {
                    ExprKind::Path(path)
                }
            }
            TokenKind::LParen => {
                self.bump();
                let mut elems = vec![];
                let mut trailing_comma = false;
                while !self.at(&TokenKind::RParen) {
                    elems.push(self.expr()?);
                    trailing_comma = self.eat(&TokenKind::Comma);
                    if !trailing_comma {
                        break;
                    }
                }
                self.expect(TokenKind::RParen)?;
                if elems.len() == 1 && !trailing_comma {
                    let mut inner = elems.pop().unwrap();
                    inner.span = start.to(self.prev_span());
                    return Ok(inner);
                }
                ExprKind::Tuple(elems)
            }
            TokenKind::LBracket => {
                self.bump();
                ExprKind::Array(self.comma_list(TokenKind::RBracket, |p| p.expr())?)
            }
            TokenKind::LBrace => ExprKind::Block(self.block()?),
            TokenKind::Keyword(Keyword::If) => return self.if_expr(),
            TokenKind::Keyword(Keyword::Match) => {
                self.bump();
                let scrutinee = Box::new(self.expr()?);
                self.expect(TokenKind::LBrace)?;
                let mut arms = vec![];
                while !self.at(&TokenKind::RBrace) {
                    let pattern = self.pattern()?;
                    self.expect(TokenKind::FatArrow)?;
                    let value = self.expr()?;
                    let span = pattern.span.to(value.span);
                    let block_like = matches!(value.kind, ExprKind::Block(_));
                    arms.push(MatchArm {
                        pattern,
                        value,
                        span,
                    });
                    if !self.eat(&TokenKind::Comma) && !block_like {
                        break;
                    }
                }
                self.expect(TokenKind::RBrace)?;
                ExprKind::Match { scrutinee, arms }
            }
            TokenKind::Keyword(Keyword::Inst) => {
                self.bump();
                let depth = if self.eat(&TokenKind::LParen) {
                    let (d, _) = self.int()?;
                    self.expect(TokenKind::RParen)?;
                    Some(d)
                } else {
                    None
                };
                let path = self.path()?;
                let args = self.args()?;
                ExprKind::Inst { depth, path, args }
            }
            TokenKind::Keyword(Keyword::Stage) => {
                self.bump();
                self.expect(TokenKind::LParen)?;
                let target = match self.peek().clone() {
                    TokenKind::Ident(_) => StageTarget::Label(self.ident()?),
                    TokenKind::Minus | TokenKind::Plus => {
                        let negative = self.bump().kind == TokenKind::Minus;
                        let (v, span) = self.int()?;
                        let v = i64::try_from(v).map_err(|_| {
                            Diagnostic::error(
                                ErrorCode::IntegerTooLarge,
                                "Stage offset is too large",
                                span,
                            )
                        })?;
                        StageTarget::Offset(if negative { -v } else { v })
                    }
                    TokenKind::Int(_) => {
                        let (v, span) = self.int()?;
                        StageTarget::Offset(i64::try_from(v).map_err(|_| {
                            Diagnostic::error(
                                ErrorCode::IntegerTooLarge,
                                "Stage offset is too large",
                                span,
                            )
                        })?)
                    }
                    _ => return Err(self.unexpected("stage label or offset")),
                };
                self.expect(TokenKind::RParen)?;
                self.expect(TokenKind::Dot)?;
                let name = self.ident()?;
                ExprKind::StageRef { target, name }
            }
            TokenKind::Keyword(Keyword::Port) => {
                self.bump();
                ExprKind::Port
            }
            _ => return Err(self.unexpected("expression")),
        };
        Ok(Expr {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn if_expr(&mut self) -> PResult<Expr> {
        let start = self.expect_kw(Keyword::If)?.span;
        let cond = Box::new(self.expr()?);
        let then = self.block()?;
        self.expect_kw(Keyword::Else)?;
        let otherwise = if self.at_kw(Keyword::If) {
            self.if_expr()?
        } else {
            let b = self.block()?;
            Expr {
                span: b.span,
                kind: ExprKind::Block(b),
            }
        };
        Ok(Expr {
            span: start.to(otherwise.span),
            kind: ExprKind::If {
                cond,
                then,
                otherwise: Box::new(otherwise),
            },
        })
    }

    pub fn pattern(&mut self) -> PResult<Pattern> {
        let start = self.span();
        let kind = match self.peek().clone() {
            TokenKind::Underscore => {
                self.bump();
                PatternKind::Wildcard
            }
            TokenKind::Int(v) => {
                self.bump();
                PatternKind::Int(v as i128)
            }
            TokenKind::Minus => {
                self.bump();
                let (v, _) = self.int()?;
                PatternKind::Int(-(v as i128))
            }
            TokenKind::Keyword(Keyword::True) => {
                self.bump();
                PatternKind::Bool(true)
            }
            TokenKind::Keyword(Keyword::False) => {
                self.bump();
                PatternKind::Bool(false)
            }
            TokenKind::LParen => {
                self.bump();
                let mut elems = vec![];
                let mut trailing_comma = false;
                while !self.at(&TokenKind::RParen) {
                    elems.push(self.pattern()?);
                    trailing_comma = self.eat(&TokenKind::Comma);
                    if !trailing_comma {
                        break;
                    }
                }
                self.expect(TokenKind::RParen)?;
                if elems.len() == 1 && !trailing_comma {
                    return Ok(elems.pop().unwrap());
                }
                PatternKind::Tuple(elems)
            }
            TokenKind::Ident(_) => {
                let path = self.path()?;
                if self.eat(&TokenKind::LParen) {
                    let args = self.comma_list(TokenKind::RParen, |p| p.pattern())?;
                    PatternKind::Variant {
                        path,
                        args: Some(args),
                    }
                } else if path.is_single() {
                    PatternKind::Name(path.segments.into_iter().next().unwrap())
                } else {
                    PatternKind::Variant { path, args: None }
                }
            }
            _ => return Err(self.unexpected("pattern")),
        };
        Ok(Pattern {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if self.at(&TokenKind::Eof) {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

/// Parses a whole file. Lexing errors are returned without attempting a parse.
pub fn parse_file(src: &str, file: FileId) -> Result<Program, Vec<Diagnostic>> {
    let tokens = lex(src, file)?;
    let mut p = Parser::new(tokens, file);
    let (program, errors) = p.parse_program();
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(errors)
    }
}

pub fn parse_expression(src: &str, file: FileId) -> Result<Expr, Vec<Diagnostic>> {
    let tokens = lex(src, file)?;
    let mut p = Parser::new(tokens, file);
    let e = p.expr().map_err(|e| vec![e])?;
    p.expect_eof().map_err(|e| vec![e])?;
    Ok(e)
}

pub fn parse_type(src: &str, file: FileId) -> Result<AstType, Vec<Diagnostic>> {
    let tokens = lex(src, file)?;
    let mut p = Parser::new(tokens, file);
    let t = p.ty().map_err(|e| vec![e])?;
    p.expect_eof().map_err(|e| vec![e])?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Program {
        parse_file(src, FileId(0)).unwrap_or_else(|e| panic!("{e:?}"))
    }

    fn expr(src: &str) -> Expr {
        parse_expression(src, FileId(0)).unwrap()
    }

    pub const BLINK: &str = "\
entity blink(clk: clock, rst: bool, max: int<20>) -> bool {
    reg(clk) counter: int<20> reset(rst: 0) =
        if counter == max {
            0
        }
        else {
            trunc(counter + 1)
        };
    counter == max
}
";

    #[test]
    fn blink_entity() {
        let p = parse(BLINK);
        assert_eq!(p.items.len(), 1);
        let Item::Unit(u) = &p.items[0] else { panic!() };
        assert_eq!(u.kind, AstUnitKind::Entity);
        assert_eq!(u.params.len(), 3);
        assert!(matches!(
            &u.output.as_ref().unwrap().kind,
            AstTypeKind::Named { path, .. } if path.text() == "bool"
        ));
    }

    #[test]
    fn identity_fn() {
        let p = parse("fn id(a: bool) -> bool { a }");
        let Item::Unit(u) = &p.items[0] else { panic!() };
        let body = u.body.as_ref().unwrap();
        assert!(body.stmts.is_empty());
        assert!(matches!(&body.result.as_ref().unwrap().kind, ExprKind::Path(p) if p.text() == "a"));
    }

    #[test]
    fn pipeline_without_depth() {
        let err = parse_file("pipeline X(clk: clock) -> bool { true }", FileId(0)).unwrap_err();
        assert_eq!(err[0].code, ErrorCode::MissingPipelineDepth);
    }

    #[test]
    fn variant_constructor_expression() {
        let e = expr("Option::Some(5)");
        let ExprKind::Call { path, args } = e.kind else { panic!() };
        assert_eq!(path.text(), "Option::Some");
        assert_eq!(args.len(), 1);
    }

    #[test]
    fn literal_sum() {
        let e = expr("1024 + 0");
        assert!(matches!(
            e.kind,
            ExprKind::Binary(BinaryOp::Add, ref a, ref b)
                if a.kind == ExprKind::Int(1024) && b.kind == ExprKind::Int(0)
        ));
    }

    #[test]
    fn pair() {
        let e = expr("(a, b)");
        assert!(matches!(e.kind, ExprKind::Tuple(ref es) if es.len() == 2));
    }

    fn shape(e: &Expr) -> String {
        match &e.kind {
            ExprKind::Binary(op, a, b) => format!("({} {} {})", shape(a), op.symbol(), shape(b)),
            ExprKind::Path(p) => p.text(),
            ExprKind::Unary(op, a) => format!("({}{})", op.symbol(), shape(a)),
            ExprKind::Int(v) => v.to_string(),
            _ => "?".into(),
        }
    }

    #[test]
    fn precedence_table() {
        let table = [
            ("a + b * c", "(a + (b * c))"),
            ("a * b + c", "((a * b) + c)"),
            ("a - b - c", "((a - b) - c)"),
            ("a + b == c", "((a + b) == c)"),
            ("a == b && c < d", "((a == b) && (c < d))"),
            ("a || b && c", "(a || (b && c))"),
            ("a && b || c", "((a && b) || c)"),
            ("a < b + c * d", "(a < (b + (c * d)))"),
            ("a << 1 + b", "(a << (1 + b))"),
            ("a & b == c", "((a & b) == c)"),
            ("-a * b", "((-a) * b)"),
            ("*w + 1", "((*w) + 1)"),
        ];
        for (src, want) in table {
            assert_eq!(shape(&expr(src)), want, "{src}");
        }
    }

    #[test]
    fn nested_generic_closing() {
        let t = parse_type("Option<Option<bool>>", FileId(0)).unwrap();
        let AstTypeKind::Named { args, .. } = t.kind else { panic!() };
        assert_eq!(args.len(), 1);
        let p = parse("fn f(a: Option<Option<bool>>) -> bool { let x: Option<bool>= a; true }");
        assert_eq!(p.items.len(), 1);
    }

    #[test]
    fn recovers_at_next_item() {
        let src = "fn a() -> bool { let = 1; true }\nfn b() -> bool { true }\nfn c( -> bool { true }";
        let err = parse_file(src, FileId(0)).unwrap_err();
        assert_eq!(err.len(), 2);
        assert!(err.iter().all(|e| e.code == ErrorCode::UnexpectedToken));
    }

    #[test]
    fn syntax_error_span_on_offending_line() {
        let src = "fn a() -> bool {\n    let x = ;\n    true\n}";
        let err = parse_file(src, FileId(0)).unwrap_err();
        let line_start = src.find("    let").unwrap();
        let line_end = src[line_start..].find('\n').unwrap() + line_start;
        let s = err[0].primary.span;
        assert!(s.start as usize >= line_start && s.end as usize <= line_end);
    }

    #[test]
    fn pipeline_statements() {
        let src = "\
pipeline(4) X(clk: clock, a: int<32>, b: int<32>) -> int<33> {
        'initial
        let x = inst(3) subpipe(clk, a);
        let p = a * b;
    reg * 3;
        let s = x + f(a, p);
    reg;
        trunc(s + stage(initial).a)
}";
        let p = parse(src);
        let Item::Unit(u) = &p.items[0] else { panic!() };
        assert_eq!(u.kind, AstUnitKind::Pipeline { depth: 4 });
        let body = u.body.as_ref().unwrap();
        assert!(matches!(body.stmts[0].kind, StmtKind::Label(ref l) if l.name == "initial"));
        assert!(matches!(body.stmts[3].kind, StmtKind::PipelineReg { count: 3 }));
        assert!(matches!(body.stmts[5].kind, StmtKind::PipelineReg { count: 1 }));
    }

    #[test]
    fn stage_offsets() {
        for (src, off) in [("stage(-2).p", -2), ("stage(+1).p", 1), ("stage(0).p", 0)] {
            let e = expr(src);
            assert!(matches!(e.kind, ExprKind::StageRef { target: StageTarget::Offset(o), .. } if o == off));
        }
    }

    #[test]
    fn attributes_and_external_units() {
        let p = parse("#[no_mangle] entity top(a: bool) -> bool { a }\n#[external] fn ext(a: bool) -> bool;");
        let Item::Unit(u) = &p.items[1] else { panic!() };
        assert!(u.has_attribute("external"));
        assert!(u.body.is_none());
    }

    #[test]
    fn type_declarations() {
        let p = parse(
            "enum Option<T> { None, Some{ val: T }, }\nstruct port MemPort { addr: &mut int<4>, data: &int<8> }",
        );
        let Item::Type(t) = &p.items[0] else { panic!() };
        assert_eq!(t.type_params.len(), 1);
        let AstTypeDeclKind::Enum { variants } = &t.kind else { panic!() };
        assert_eq!(variants.len(), 2);
        let Item::Type(t) = &p.items[1] else { panic!() };
        assert!(matches!(t.kind, AstTypeDeclKind::Struct { is_port: true, .. }));
    }

    #[test]
    fn match_with_patterns() {
        let e = expr("match (a, b) { (Some(val), _) => val, (_, Some(val)) => val, _ => 0 }");
        let ExprKind::Match { arms, .. } = e.kind else { panic!() };
        assert_eq!(arms.len(), 3);
        assert!(matches!(arms[2].pattern.kind, PatternKind::Wildcard));
    }

    #[test]
    fn negative_literal_folds() {
        assert_eq!(expr("-5").kind, ExprKind::Int(-5));
    }
}
