//! Untyped syntax tree produced by the parser.

use crate::diag::Span;
use crate::types::ScalarType;

/// A source location attached to an AST node.
///
/// Locations are metadata and never take part in AST equality, which is
/// what lets a pretty-printed and re-parsed tree compare equal to the
/// original.
#[derive(Debug, Clone, Default)]
pub struct Loc(pub Span);

impl PartialEq for Loc {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Loc {
    pub fn span(&self) -> Span {
        self.0.clone()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ast {
    pub includes: Vec<Include>,
    pub class_decls: Vec<ClassDecl>,
    pub func_decls: Vec<FuncDecl>,
    pub mm_decls: Vec<MmDecl>,
}

impl Ast {
    pub fn is_empty(&self) -> bool {
        self.includes.is_empty()
            && self.class_decls.is_empty()
            && self.func_decls.is_empty()
            && self.mm_decls.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Include {
    pub path: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub parents: Vec<ParentDecl>,
    pub fields: Vec<FieldDecl>,
    pub members: Vec<Member>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParentDecl {
    pub name: String,
    pub is_virtual: bool,
    pub is_public: bool,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: ScalarType,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Method(FuncDecl),
    Multimethod(MmDecl),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Void,
    Scalar(ScalarType),
    Class(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: Option<String>,
    pub ty: TypeExpr,
    pub is_const: bool,
    pub by_ref: bool,
    pub loc: Loc,
}

/// A static function, or a method (`member_of` set) after desugaring.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncDecl {
    pub name: String,
    pub ret: TypeExpr,
    pub params: Vec<ParamDecl>,
    pub body: Option<Block>,
    /// `virtual` keyword on a member method.
    pub is_virtual: bool,
    /// Owning class of a desugared member method; the implicit `this` is `params[0]`.
    pub member_of: Option<String>,
    pub loc: Loc,
}

/// One multimethod specialization; `name` always starts with `@`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmDecl {
    pub name: String,
    pub ret: TypeExpr,
    pub params: Vec<ParamDecl>,
    pub body: Option<Block>,
    pub member_of: Option<String>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalDeclarator {
    pub name: String,
    pub init: Option<Expr>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Block(Block),
    Local {
        ty: TypeExpr,
        is_const: bool,
        vars: Vec<LocalDeclarator>,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Box<Stmt>,
        otherwise: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    Return(Option<Expr>),
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Name(String),
    Field {
        object: Box<Expr>,
        field: String,
    },
    /// `f(args)` for a static function or the `print` builtin.
    Call {
        name: String,
        args: Vec<Expr>,
    },
    /// `@m(args)`.
    MmCall {
        name: String,
        args: Vec<Expr>,
    },
    /// `o.name(args)`; `o.@m(args)` only exists before desugaring.
    MethodCall {
        receiver: Box<Expr>,
        name: String,
        args: Vec<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Expr { kind, loc }
    }
}
