//! Typed intermediate form stored in object modules and executed by the runtime.
//!
//! Field accesses are resolved to a slot inside the subobject of the declaring
//! class; the object expression is explicitly upcast to that class first.
//! Static calls name the exact overload; multimethod calls name only the
//! multimethod and leave selection to the linked dispatch tables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hierarchy::DispatchType;
use crate::types::{PassMode, ScalarType, ValueType};

/// Role of one parameter position of a multimethod.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamShape {
    /// Class-typed, selected on at runtime.
    Dispatch,
    /// Compile-time overload key.
    Scalar(ScalarType),
    /// Class-typed but not dispatched on (the non-receiver parameters of a
    /// virtual method); identical in every specialization.
    Fixed {
        class: String,
        is_const: bool,
        by_ref: bool,
    },
}

/// Identifies one multimethod: a name plus the shape of its parameters.
/// `@m(int, A)` and `@m(float, A)` are different multimethods.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MmKey {
    pub name: String,
    pub shape: Vec<ParamShape>,
}

impl MmKey {
    pub fn dispatch_positions(&self) -> Vec<usize> {
        self.shape
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, ParamShape::Dispatch))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn arity(&self) -> usize {
        self.dispatch_positions().len()
    }
}

impl fmt::Display for MmKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, s) in self.shape.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match s {
                ParamShape::Dispatch => f.write_str("_")?,
                ParamShape::Scalar(t) => write!(f, "{t}")?,
                ParamShape::Fixed {
                    class,
                    is_const,
                    by_ref,
                } => {
                    if *is_const {
                        f.write_str("const ")?;
                    }
                    f.write_str(class)?;
                    if *by_ref {
                        f.write_str("&")?;
                    }
                }
            }
        }
        f.write_str(")")
    }
}

/// Identifies one static function overload. Methods that are not virtual
/// are static functions named `Class::method`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FuncKey {
    pub name: String,
    pub params: Vec<ValueType>,
}

impl FuncKey {
    pub fn main() -> FuncKey {
        FuncKey {
            name: "main".into(),
            params: Vec::new(),
        }
    }
}

impl fmt::Display for FuncKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", self.name, ps.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Param {
    pub ty: ValueType,
    pub is_const: bool,
    pub mode: PassMode,
}

impl Param {
    pub fn dispatch_type(&self) -> Option<DispatchType> {
        self.ty.class_name().map(|c| DispatchType {
            class: c.to_string(),
            is_const: self.is_const,
        })
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_const {
            f.write_str("const ")?;
        }
        write!(f, "{}", self.ty)?;
        if self.mode == PassMode::ByRef {
            f.write_str(" &")?;
        }
        Ok(())
    }
}

/// One multimethod specialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spec {
    pub key: MmKey,
    pub params: Vec<Param>,
    pub ret: ValueType,
    pub body: Option<Body>,
    /// Module that supplied the body, or first declared it.
    pub origin: String,
}

impl Spec {
    /// Types of the dispatched positions, in order.
    pub fn dispatch_params(&self) -> Vec<DispatchType> {
        self.key
            .dispatch_positions()
            .into_iter()
            .map(|i| {
                self.params[i]
                    .dispatch_type()
                    .expect("dispatch position is class-typed")
            })
            .collect()
    }

    /// `@m(B, const A &)` style label.
    pub fn label(&self) -> String {
        let ps: Vec<String> = self
            .params
            .iter()
            .map(|p| {
                let mut s = String::new();
                if p.is_const {
                    s.push_str("const ");
                }
                s.push_str(&p.ty.to_string());
                s
            })
            .collect();
        format!("{}({})", self.key.name, ps.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Func {
    pub key: FuncKey,
    pub params: Vec<Param>,
    pub ret: ValueType,
    pub body: Option<Body>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalVar {
    pub name: String,
    pub ty: ValueType,
    pub is_const: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Body {
    /// Parameters occupy the first `param_count` locals.
    pub locals: Vec<LocalVar>,
    pub param_count: usize,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lit {
    Int(i64),
    Bool(bool),
    Float(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    /// (Re)initializes a local. Class locals get a fresh zeroed object, or a
    /// whole-object copy of `init`.
    InitLocal {
        local: usize,
        init: Option<Expr>,
    },
    AssignLocal {
        local: usize,
        value: Expr,
    },
    /// `object` is already upcast to the owner of the field.
    AssignField {
        object: Expr,
        slot: usize,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Vec<Stmt>,
        otherwise: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub ty: ValueType,
    /// Static const-ness of a class-typed value.
    pub is_const: bool,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprKind {
    Lit(Lit),
    Local(usize),
    Field {
        object: Box<Expr>,
        slot: usize,
    },
    /// Converts a class value to the unique `target` subobject of its static type.
    Upcast {
        expr: Box<Expr>,
        target: String,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    BoolToInt(Box<Expr>),
    CallStatic {
        func: FuncKey,
        args: Vec<Expr>,
    },
    /// The result is realigned to `ty` at runtime.
    CallMulti {
        mm: MmKey,
        args: Vec<Expr>,
    },
    PrintStr(String),
    PrintValue(Box<Expr>),
}

impl Expr {
    pub fn new(ty: ValueType, kind: ExprKind) -> Expr {
        Expr {
            ty,
            is_const: false,
            kind,
        }
    }

    pub fn lit(l: Lit) -> Expr {
        let ty = match l {
            Lit::Int(_) => ScalarType::Int,
            Lit::Bool(_) => ScalarType::Bool,
            Lit::Float(_) => ScalarType::Float,
        };
        Expr::new(ValueType::Scalar(ty), ExprKind::Lit(l))
    }
}

/// Calls every expression nested in a statement list, outermost first.
pub fn walk_exprs<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Expr)) {
    for s in stmts {
        match s {
            Stmt::InitLocal { init, .. } => {
                if let Some(e) = init {
                    walk_expr(e, f);
                }
            }
            Stmt::AssignLocal { value, .. } => walk_expr(value, f),
            Stmt::AssignField { object, value, .. } => {
                walk_expr(object, f);
                walk_expr(value, f);
            }
            Stmt::Expr(e) => walk_expr(e, f),
            Stmt::If { cond, then, otherwise } => {
                walk_expr(cond, f);
                walk_exprs(then, f);
                walk_exprs(otherwise, f);
            }
            Stmt::While { cond, body } => {
                walk_expr(cond, f);
                walk_exprs(body, f);
            }
            Stmt::Return(v) => {
                if let Some(e) = v {
                    walk_expr(e, f);
                }
            }
            Stmt::Block(b) => walk_exprs(b, f),
        }
    }
}

pub fn walk_expr<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Lit(_) | ExprKind::Local(_) | ExprKind::PrintStr(_) => {}
        ExprKind::Field { object, .. } => walk_expr(object, f),
        ExprKind::Upcast { expr, .. } => walk_expr(expr, f),
        ExprKind::Unary { operand, .. } => walk_expr(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        ExprKind::BoolToInt(inner) | ExprKind::PrintValue(inner) => walk_expr(inner, f),
        ExprKind::CallStatic { args, .. } | ExprKind::CallMulti { args, .. } => {
            for a in args {
                walk_expr(a, f);
            }
        }
    }
}
