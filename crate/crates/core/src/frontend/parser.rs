//! Recursive-descent parser.
//!
//! The grammar is the closure of the constructs the language's example
//! programs use. Syntax errors are collected and parsing resumes at the next
//! statement (inside bodies) or the next declaration (at top level).

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use crate::diag::{Code, Diagnostic};
use crate::types::ScalarType;

/// Error marker; the diagnostic itself has already been recorded.
struct Bail;

type PResult<T> = Result<T, Bail>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    errors: Vec<Diagnostic>,
}

fn scalar_kw(tok: &Tok) -> Option<ScalarType> {
    match tok {
        Tok::KwInt => Some(ScalarType::Int),
        Tok::KwBool => Some(ScalarType::Bool),
        Tok::KwFloat => Some(ScalarType::Float),
        _ => None,
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn loc(&self) -> Loc {
        Loc(self.tokens[self.pos].span.clone())
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn fail<T>(&mut self, msg: impl Into<String>) -> PResult<T> {
        let span = self.tokens[self.pos].span.clone();
        self.errors.push(Diagnostic::error(Code::E_PARSE, span, msg));
        Err(Bail)
    }

    fn expect(&mut self, tok: &Tok) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            let found = self.peek().clone();
            self.fail(format!("expected {tok}, found {found}"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.fail(format!("expected identifier, found {other}")),
        }
    }

    fn string_lit(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => self.fail(format!("expected string literal, found {other}")),
        }
    }

    // ----- recovery -----

    /// Skips to just past the next `;` or in front of the next `}` at the current nesting.
    fn recover_stmt(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::RBrace if depth == 0 => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth -= 1,
                _ => {}
            }
            self.bump();
        }
    }

    /// Skips the rest of a broken top-level declaration.
    fn recover_item(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    self.bump();
                    if depth <= 1 {
                        self.eat(&Tok::Semi);
                        return;
                    }
                    depth -= 1;
                    continue;
                }
                Tok::Class | Tok::Include if depth == 0 => return,
                _ => {}
            }
            self.bump();
        }
    }

    // ----- declarations -----

    fn program(&mut self) -> Ast {
        let mut ast = Ast::default();
        while !self.at(&Tok::Eof) {
            let start = self.pos;
            if self.item(&mut ast).is_err() {
                self.recover_item();
            }
            if self.pos == start {
                // guarantee progress
                self.bump();
            }
        }
        ast
    }

    fn item(&mut self, ast: &mut Ast) -> PResult<()> {
        match self.peek() {
            Tok::Semi => {
                self.bump();
                Ok(())
            }
            Tok::Include => {
                let loc = self.loc();
                self.bump();
                let path = self.string_lit()?;
                ast.includes.push(Include { path, loc });
                Ok(())
            }
            Tok::Class => {
                let c = self.class_decl()?;
                ast.class_decls.push(c);
                Ok(())
            }
            _ => {
                let loc = self.loc();
                let ret = self.type_expr()?;
                match self.peek().clone() {
                    Tok::MmName(name) => {
                        self.bump();
                        let (params, body) = self.signature_rest()?;
                        ast.mm_decls.push(MmDecl {
                            name,
                            ret,
                            params,
                            body,
                            member_of: None,
                            loc,
                        });
                    }
                    Tok::Ident(name) => {
                        self.bump();
                        let (params, body) = self.signature_rest()?;
                        ast.func_decls.push(FuncDecl {
                            name,
                            ret,
                            params,
                            body,
                            is_virtual: false,
                            member_of: None,
                            loc,
                        });
                    }
                    other => {
                        return self.fail(format!("expected a function name, found {other}"));
                    }
                }
                Ok(())
            }
        }
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        if let Some(s) = scalar_kw(self.peek()) {
            self.bump();
            return Ok(TypeExpr::Scalar(s));
        }
        match self.peek().clone() {
            Tok::Void => {
                self.bump();
                Ok(TypeExpr::Void)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(TypeExpr::Class(name))
            }
            other => self.fail(format!("expected a type, found {other}")),
        }
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let loc = self.loc();
        self.expect(&Tok::Class)?;
        let name = self.ident()?;
        let mut parents = Vec::new();
        if self.eat(&Tok::Colon) {
            loop {
                let ploc = self.loc();
                let mut is_virtual = false;
                let mut is_public = false;
                loop {
                    match self.peek() {
                        Tok::Virtual => is_virtual = true,
                        Tok::Public => is_public = true,
                        Tok::Private | Tok::Protected => is_public = false,
                        _ => break,
                    }
                    self.bump();
                }
                let pname = self.ident()?;
                parents.push(ParentDecl {
                    name: pname,
                    is_virtual,
                    is_public,
                    loc: ploc,
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::LBrace)?;
        let mut fields = Vec::new();
        let mut members = Vec::new();
        while !self.at(&Tok::RBrace) && !self.at(&Tok::Eof) {
            let start = self.pos;
            if self.class_member(&name, &mut fields, &mut members).is_err() {
                self.recover_stmt();
            }
            if self.pos == start {
                self.bump();
            }
        }
        self.expect(&Tok::RBrace)?;
        self.eat(&Tok::Semi);
        Ok(ClassDecl {
            name,
            parents,
            fields,
            members,
            loc,
        })
    }

    fn class_member(&mut self, class: &str, fields: &mut Vec<FieldDecl>, members: &mut Vec<Member>) -> PResult<()> {
        if matches!(self.peek(), Tok::Public | Tok::Private | Tok::Protected) && self.peek_at(1) == &Tok::Colon {
            self.bump();
            self.bump();
            return Ok(());
        }
        if self.eat(&Tok::Semi) {
            return Ok(());
        }
        let loc = self.loc();
        let is_virtual = self.eat(&Tok::Virtual);
        let ty = self.type_expr()?;
        match self.peek().clone() {
            Tok::MmName(name) => {
                if is_virtual {
                    return self.fail("a multimethod cannot be declared `virtual`");
                }
                self.bump();
                let (params, body) = self.signature_rest()?;
                members.push(Member::Multimethod(MmDecl {
                    name,
                    ret: ty,
                    params,
                    body,
                    member_of: Some(class.to_string()),
                    loc,
                }));
                Ok(())
            }
            Tok::Ident(name) if self.peek_at(1) == &Tok::LParen => {
                self.bump();
                let (params, body) = self.signature_rest()?;
                members.push(Member::Method(FuncDecl {
                    name,
                    ret: ty,
                    params,
                    body,
                    is_virtual,
                    member_of: Some(class.to_string()),
                    loc,
                }));
                Ok(())
            }
            Tok::Ident(_) => {
                let TypeExpr::Scalar(scalar) = ty else {
                    return self.fail("fields must have a scalar type (int, bool or float)");
                };
                if is_virtual {
                    return self.fail("a field cannot be `virtual`");
                }
                loop {
                    let floc = self.loc();
                    let fname = self.ident()?;
                    fields.push(FieldDecl {
                        name: fname,
                        ty: scalar,
                        loc: floc,
                    });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Semi)
            }
            other => self.fail(format!("expected a member name, found {other}")),
        }
    }

    /// Parameter list followed by a body or `;`.
    fn signature_rest(&mut self) -> PResult<(Vec<ParamDecl>, Option<Block>)> {
        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                params.push(self.param()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        if self.eat(&Tok::Semi) {
            return Ok((params, None));
        }
        let body = self.block()?;
        Ok((params, Some(body)))
    }

    fn param(&mut self) -> PResult<ParamDecl> {
        let loc = self.loc();
        let is_const = self.eat(&Tok::Const);
        let ty = self.type_expr()?;
        let by_ref = self.eat(&Tok::Amp);
        let name = match self.peek().clone() {
            Tok::Ident(n) => {
                self.bump();
                Some(n)
            }
            _ => None,
        };
        Ok(ParamDecl {
            name,
            ty,
            is_const,
            by_ref,
            loc,
        })
    }

    // ----- statements -----

    fn block(&mut self) -> PResult<Block> {
        let loc = self.loc();
        self.expect(&Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) && !self.at(&Tok::Eof) {
            let start = self.pos;
            match self.stmt() {
                Ok(s) => stmts.push(s),
                Err(Bail) => self.recover_stmt(),
            }
            if self.pos == start {
                self.bump();
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(Block { stmts, loc })
    }

    fn starts_local_decl(&self) -> bool {
        match self.peek() {
            Tok::Const => true,
            t if scalar_kw(t).is_some() => true,
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Ident(_)),
            _ => false,
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = match self.peek() {
            Tok::LBrace => StmtKind::Block(self.block()?),
            Tok::Semi => {
                self.bump();
                StmtKind::Empty
            }
            Tok::If => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(&Tok::RParen)?;
                let then = Box::new(self.stmt()?);
                let otherwise = if self.eat(&Tok::Else) {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                StmtKind::If { cond, then, otherwise }
            }
            Tok::While => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(&Tok::RParen)?;
                let body = Box::new(self.stmt()?);
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.bump();
                let value = if self.at(&Tok::Semi) { None } else { Some(self.expr()?) };
                self.expect(&Tok::Semi)?;
                StmtKind::Return(value)
            }
            _ if self.starts_local_decl() => {
                let is_const = self.eat(&Tok::Const);
                let ty = self.type_expr()?;
                if ty == TypeExpr::Void {
                    return self.fail("a local cannot have type `void`");
                }
                let mut vars = Vec::new();
                loop {
                    let vloc = self.loc();
                    let name = self.ident()?;
                    let init = if self.eat(&Tok::Assign) {
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    vars.push(LocalDeclarator { name, init, loc: vloc });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Semi)?;
                StmtKind::Local { ty, is_const, vars }
            }
            _ => {
                let e = self.expr()?;
                if self.eat(&Tok::Assign) {
                    let value = self.expr()?;
                    self.expect(&Tok::Semi)?;
                    StmtKind::Assign { target: e, value }
                } else {
                    self.expect(&Tok::Semi)?;
                    StmtKind::Expr(e)
                }
            }
        };
        Ok(Stmt { kind, loc })
    }

    // ----- expressions -----

    fn binary_op(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            Tok::OrOr => BinaryOp::Or,
            Tok::AndAnd => BinaryOp::And,
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::Plus => BinaryOp::Add,
            Tok::Minus => BinaryOp::Sub,
            Tok::Star => BinaryOp::Mul,
            Tok::Slash => BinaryOp::Div,
            Tok::Percent => BinaryOp::Rem,
            _ => return None,
        })
    }

    pub(super) fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            if op.precedence() < min_prec {
                break;
            }
            let loc = self.loc();
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                loc,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let op = match self.peek() {
            Tok::Bang => UnaryOp::Not,
            Tok::Minus => UnaryOp::Neg,
            _ => return self.postfix(),
        };
        self.bump();
        let operand = self.unary()?;
        Ok(Expr::new(
            ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            loc,
        ))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(args)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.at(&Tok::Dot) {
            let loc = self.loc();
            self.bump();
            match self.bump() {
                Tok::Ident(name) if self.at(&Tok::LParen) => {
                    let args = self.args()?;
                    e = Expr::new(
                        ExprKind::MethodCall {
                            receiver: Box::new(e),
                            name,
                            args,
                        },
                        loc,
                    );
                }
                Tok::Ident(field) => {
                    e = Expr::new(
                        ExprKind::Field {
                            object: Box::new(e),
                            field,
                        },
                        loc,
                    );
                }
                Tok::MmName(name) => {
                    let args = self.args()?;
                    e = Expr::new(
                        ExprKind::MethodCall {
                            receiver: Box::new(e),
                            name,
                            args,
                        },
                        loc,
                    );
                }
                other => {
                    self.pos -= 1;
                    return self.fail(format!("expected a member name after `.`, found {other}"));
                }
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::Float(v) => {
                self.bump();
                ExprKind::Float(v)
            }
            Tok::True => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Str(s)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.at(&Tok::LParen) {
                    let args = self.args()?;
                    ExprKind::Call { name, args }
                } else {
                    ExprKind::Name(name)
                }
            }
            Tok::MmName(name) => {
                self.bump();
                let args = self.args()?;
                ExprKind::MmCall { name, args }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&Tok::RParen)?;
                return Ok(inner);
            }
            other => return self.fail(format!("expected an expression, found {other}")),
        };
        Ok(Expr::new(kind, loc))
    }
}

/// Parses one source file. Lexical and syntax errors are reported together.
pub fn parse(source: &str, file_name: &str) -> Result<Ast, Vec<Diagnostic>> {
    let (tokens, mut errors) = lex(source, file_name);
    let mut p = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
    };
    let ast = p.program();
    errors.extend(p.errors);
    if errors.is_empty() {
        Ok(ast)
    } else {
        Err(errors)
    }
}

/// Parses a single expression; used by tests of the pretty printer.
pub fn parse_expr(source: &str) -> Result<Expr, Vec<Diagnostic>> {
    let (tokens, mut errors) = lex(source, "<expr>");
    let mut p = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
    };
    let e = p.expr();
    if !p.at(&Tok::Eof) && e.is_ok() {
        let _ = p.fail::<()>("trailing tokens after expression");
    }
    errors.extend(p.errors);
    match e {
        Ok(e) if errors.is_empty() => Ok(e),
        _ => Err(errors),
    }
}
