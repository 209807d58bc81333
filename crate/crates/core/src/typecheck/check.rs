//! Compile-time checking of one module against the declarations it can see.

use std::collections::{BTreeMap, BTreeSet};

use super::invocation::{latent_conflicts, return_constraint_violations, type_invocation, Candidate};
use super::ir::{self, BinOp, Body, Func, FuncKey, Lit, LocalVar, MmKey, Param, ParamShape, Spec, UnOp};
use super::TypedModule;
use crate::diag::{has_errors, Code, Diagnostic, Span};
use crate::frontend::ast::{self, Ast, BinaryOp, Block, ExprKind, StmtKind, TypeExpr, UnaryOp};
use crate::hierarchy::{ClassDef, DispatchType, FieldLookup, Hierarchy, HierarchyError, ParentRef, SubtypeAnswer};
use crate::types::{PassMode, ScalarType, ValueType};

#[derive(Debug, Clone)]
enum MethodTarget {
    Static(FuncKey),
    Virtual(MmKey),
}

#[derive(Debug, Clone)]
struct MethodInfo {
    name: String,
    /// Without the receiver.
    params: Vec<Param>,
    target: MethodTarget,
}

struct SpecEntry<'a> {
    spec: Spec,
    body: Option<&'a Block>,
    names: Vec<Option<String>>,
    member_of: Option<String>,
    span: Span,
}

struct FuncEntry<'a> {
    func: Func,
    body: Option<&'a Block>,
    names: Vec<Option<String>>,
    member_of: Option<String>,
    span: Span,
}

type SpecId = (MmKey, Vec<DispatchType>);

struct Checker<'a> {
    module: String,
    h: Hierarchy,
    specs: BTreeMap<SpecId, SpecEntry<'a>>,
    funcs: BTreeMap<FuncKey, FuncEntry<'a>>,
    methods: BTreeMap<String, Vec<MethodInfo>>,
    diags: Vec<Diagnostic>,
}

/// Checks a desugared module. `imports` are desugared declaration headers.
/// Returns the typed module when no error was found.
pub fn check_module(module: &str, ast: &Ast, imports: &[Ast]) -> (Option<TypedModule>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let Some(h) = build_hierarchy(ast, imports, &mut diags) else {
        return (None, diags);
    };
    let mut c = Checker {
        module: module.to_string(),
        h,
        specs: BTreeMap::new(),
        funcs: BTreeMap::new(),
        methods: BTreeMap::new(),
        diags,
    };
    for (is_import, a) in imports.iter().map(|a| (true, a)).chain([(false, ast)]) {
        c.collect_free(a, is_import);
    }
    c.collect_methods(imports, ast);
    c.check_main();
    let bodies = c.check_bodies();
    c.module_warnings();
    if has_errors(&c.diags) {
        return (None, c.diags);
    }
    let tm = c.finish(bodies);
    let diags = tm.warnings.clone();
    (Some(tm), diags)
}

fn classes_equal(a: &ast::ClassDecl, b: &ast::ClassDecl) -> bool {
    a.name == b.name && a.parents == b.parents && a.fields == b.fields && a.members == b.members
}

fn build_hierarchy(ast: &Ast, imports: &[Ast], diags: &mut Vec<Diagnostic>) -> Option<Hierarchy> {
    let mut seen: BTreeMap<&str, &ast::ClassDecl> = BTreeMap::new();
    let mut order = Vec::new();
    for c in imports.iter().chain([ast]).flat_map(|a| &a.class_decls) {
        match seen.get(c.name.as_str()) {
            Some(prev) if classes_equal(prev, c) => {}
            Some(prev) => diags.push(
                Diagnostic::error(
                    Code::E_DUPLICATE_CLASS,
                    c.loc.span(),
                    format!("class `{}` is defined more than once", c.name),
                )
                .with_related(prev.loc.span()),
            ),
            None => {
                seen.insert(&c.name, c);
                order.push(c);
            }
        }
    }
    let mut defs = Vec::new();
    for c in &order {
        let mut names = BTreeSet::new();
        for f in &c.fields {
            if !names.insert(&f.name) {
                diags.push(Diagnostic::error(
                    Code::E_DUPLICATE_NAME,
                    f.loc.span(),
                    format!("field `{}` is declared twice in `{}`", f.name, c.name),
                ));
            }
        }
        defs.push(ClassDef {
            name: c.name.clone(),
            parents: c
                .parents
                .iter()
                .map(|p| ParentRef {
                    name: p.name.clone(),
                    is_virtual: p.is_virtual,
                })
                .collect(),
            fields: c.fields.iter().map(|f| (f.name.clone(), f.ty)).collect(),
        });
    }
    if has_errors(diags) {
        return None;
    }
    match Hierarchy::build(&defs) {
        Ok(h) => Some(h),
        Err(errs) => {
            for e in errs {
                let code = match e {
                    HierarchyError::DuplicateClass(_) => Code::E_DUPLICATE_CLASS,
                    HierarchyError::UnknownParent { .. } => Code::E_UNKNOWN_PARENT,
                    HierarchyError::DuplicateParent { .. } => Code::E_DUPLICATE_PARENT,
                    HierarchyError::CyclicInheritance(_) => Code::E_CYCLIC_INHERITANCE,
                    HierarchyError::MixedVirtuality { .. } => Code::E_MIXED_VIRTUALITY,
                };
                let span = seen.get(e.class()).map(|c| c.loc.span()).unwrap_or_default();
                diags.push(Diagnostic::error(code, span, e.to_string()));
            }
            None
        }
    }
}

fn shape_of(ty: &ValueType) -> ParamShape {
    match ty {
        ValueType::Scalar(s) => ParamShape::Scalar(*s),
        _ => ParamShape::Dispatch,
    }
}

fn same_params(a: &[Param], b: &[Param]) -> bool {
    a == b
}

fn binop(op: BinaryOp) -> BinOp {
    match op {
        BinaryOp::Or => BinOp::Or,
        BinaryOp::And => BinOp::And,
        BinaryOp::Eq => BinOp::Eq,
        BinaryOp::Ne => BinOp::Ne,
        BinaryOp::Lt => BinOp::Lt,
        BinaryOp::Le => BinOp::Le,
        BinaryOp::Gt => BinOp::Gt,
        BinaryOp::Ge => BinOp::Ge,
        BinaryOp::Add => BinOp::Add,
        BinaryOp::Sub => BinOp::Sub,
        BinaryOp::Mul => BinOp::Mul,
        BinaryOp::Div => BinOp::Div,
        BinaryOp::Rem => BinOp::Rem,
    }
}

/// Per-body state.
struct FnCtx {
    locals: Vec<LocalVar>,
    scopes: Vec<Vec<(String, usize)>>,
    ret: ValueType,
    member_of: Option<String>,
}

/// Key, body, parameters, parameter names, return type and enclosing class.
type BodyJob<'a, K> = (K, &'a Block, Vec<Param>, Vec<Option<String>>, ValueType, Option<String>);

impl FnCtx {
    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.iter().rev().find(|(n, _)| n == name).map(|(_, i)| *i))
    }
}

impl<'a> Checker<'a> {
    fn error(&mut self, code: Code, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn resolve_type(&mut self, t: &TypeExpr, span: &Span) -> Option<ValueType> {
        match t {
            TypeExpr::Void => Some(ValueType::Void),
            TypeExpr::Scalar(s) => Some(ValueType::Scalar(*s)),
            TypeExpr::Class(c) => {
                if self.h.contains(c) {
                    Some(ValueType::Class(c.clone()))
                } else {
                    self.error(Code::E_UNKNOWN_CLASS, span.clone(), format!("unknown class `{c}`"));
                    None
                }
            }
        }
    }

    fn resolve_params(&mut self, params: &[ast::ParamDecl]) -> Option<Vec<Param>> {
        let mut out = Vec::new();
        let mut ok = true;
        let mut names = BTreeSet::new();
        for p in params {
            if let Some(n) = &p.name {
                if !names.insert(n.clone()) {
                    self.error(
                        Code::E_DUPLICATE_NAME,
                        p.loc.span(),
                        format!("parameter `{n}` is declared twice"),
                    );
                    ok = false;
                }
            }
            match self.resolve_type(&p.ty, &p.loc.span()) {
                Some(ValueType::Void) => {
                    self.error(Code::E_TYPE, p.loc.span(), "a parameter cannot have type `void`");
                    ok = false;
                }
                Some(ty) => out.push(Param {
                    ty,
                    is_const: p.is_const,
                    mode: if p.by_ref { PassMode::ByRef } else { PassMode::ByValue },
                }),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn register_spec(&mut self, entry: SpecEntry<'a>) {
        let id = (entry.spec.key.clone(), entry.spec.dispatch_params());
        match self.specs.get_mut(&id) {
            None => {
                self.specs.insert(id, entry);
            }
            Some(prev) => {
                if prev.spec.ret != entry.spec.ret || !same_params(&prev.spec.params, &entry.spec.params) {
                    let msg = format!("`{}` is declared with conflicting signatures", entry.spec.label());
                    let span = entry.span.clone();
                    let rel = prev.span.clone();
                    self.diags
                        .push(Diagnostic::error(Code::E_SIGNATURE_MISMATCH, span, msg).with_related(rel));
                } else if prev.body.is_some() && entry.body.is_some() {
                    let msg = format!("`{}` has more than one body", entry.spec.label());
                    let span = entry.span.clone();
                    let rel = prev.span.clone();
                    self.diags
                        .push(Diagnostic::error(Code::E_DUPLICATE_BODY, span, msg).with_related(rel));
                } else if entry.body.is_some() {
                    *prev = entry;
                }
            }
        }
    }

    fn register_func(&mut self, entry: FuncEntry<'a>) {
        let key = entry.func.key.clone();
        match self.funcs.get_mut(&key) {
            None => {
                self.funcs.insert(key, entry);
            }
            Some(prev) => {
                if prev.func.ret != entry.func.ret || !same_params(&prev.func.params, &entry.func.params) {
                    let msg = format!("`{key}` is declared with conflicting signatures");
                    let span = entry.span.clone();
                    let rel = prev.span.clone();
                    self.diags
                        .push(Diagnostic::error(Code::E_SIGNATURE_MISMATCH, span, msg).with_related(rel));
                } else if prev.body.is_some() && entry.body.is_some() {
                    let msg = format!("`{key}` has more than one body");
                    let span = entry.span.clone();
                    let rel = prev.span.clone();
                    self.diags
                        .push(Diagnostic::error(Code::E_DUPLICATE_BODY, span, msg).with_related(rel));
                } else if entry.body.is_some() {
                    *prev = entry;
                }
            }
        }
    }

    /// Free functions and all multimethods (member ones included).
    fn collect_free(&mut self, a: &'a Ast, is_import: bool) {
        for m in &a.mm_decls {
            let span = m.loc.span();
            let (Some(params), Some(ret)) = (self.resolve_params(&m.params), self.resolve_type(&m.ret, &span)) else {
                continue;
            };
            let key = MmKey {
                name: m.name.clone(),
                shape: params.iter().map(|p| shape_of(&p.ty)).collect(),
            };
            let spec = Spec {
                key,
                params,
                ret,
                body: None,
                origin: self.module.clone(),
            };
            self.register_spec(SpecEntry {
                spec,
                body: if is_import { None } else { m.body.as_ref() },
                names: m.params.iter().map(|p| p.name.clone()).collect(),
                member_of: m.member_of.clone(),
                span,
            });
        }
        for f in a.func_decls.iter().filter(|f| f.member_of.is_none()) {
            let span = f.loc.span();
            let (Some(params), Some(ret)) = (self.resolve_params(&f.params), self.resolve_type(&f.ret, &span)) else {
                continue;
            };
            let key = FuncKey {
                name: f.name.clone(),
                params: params.iter().map(|p| p.ty.clone()).collect(),
            };
            self.register_func(FuncEntry {
                func: Func {
                    key,
                    params,
                    ret,
                    body: None,
                },
                body: if is_import { None } else { f.body.as_ref() },
                names: f.params.iter().map(|p| p.name.clone()).collect(),
                member_of: None,
                span,
            });
        }
    }

    /// Member methods, ancestors first so overrides can see what they override.
    fn collect_methods(&mut self, imports: &'a [Ast], ast: &'a Ast) {
        let rank: BTreeMap<String, usize> = self
            .h
            .topological_order()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut decls: Vec<(bool, &'a ast::FuncDecl)> = Vec::new();
        for (is_import, a) in imports.iter().map(|a| (true, a)).chain([(false, ast)]) {
            for f in a.func_decls.iter().filter(|f| f.member_of.is_some()) {
                decls.push((is_import, f));
            }
        }
        decls.sort_by_key(|(_, f)| rank.get(f.member_of.as_deref().unwrap_or("")).copied().unwrap_or(0));
        // the same class can be seen through several headers
        let mut seen: BTreeSet<(String, String, Vec<Param>)> = BTreeSet::new();
        for (is_import, f) in decls {
            let class = f.member_of.clone().expect("member");
            if !self.h.contains(&class) {
                continue;
            }
            let span = f.loc.span();
            let (Some(all), Some(ret)) = (self.resolve_params(&f.params), self.resolve_type(&f.ret, &span)) else {
                continue;
            };
            let rest: Vec<Param> = all[1..].to_vec();
            if !seen.insert((class.clone(), f.name.clone(), rest.clone())) && (is_import || f.body.is_none()) {
                continue;
            }
            let target = self.method_target(&class, f, &rest, &span);
            let names: Vec<Option<String>> = f.params.iter().map(|p| p.name.clone()).collect();
            let body = if is_import { None } else { f.body.as_ref() };
            match &target {
                MethodTarget::Static(key) => self.register_func(FuncEntry {
                    func: Func {
                        key: key.clone(),
                        params: all.clone(),
                        ret,
                        body: None,
                    },
                    body,
                    names,
                    member_of: Some(class.clone()),
                    span,
                }),
                MethodTarget::Virtual(key) => self.register_spec(SpecEntry {
                    spec: Spec {
                        key: key.clone(),
                        params: all.clone(),
                        ret,
                        body: None,
                        origin: self.module.clone(),
                    },
                    body,
                    names,
                    member_of: Some(class.clone()),
                    span,
                }),
            }
            let entry = self.methods.entry(class).or_default();
            if !entry.iter().any(|m| m.name == f.name && same_params(&m.params, &rest)) {
                entry.push(MethodInfo {
                    name: f.name.clone(),
                    params: rest,
                    target,
                });
            }
        }
    }

    fn method_target(&mut self, class: &str, f: &ast::FuncDecl, rest: &[Param], span: &Span) -> MethodTarget {
        let mut inherited: Vec<(String, MethodInfo)> = Vec::new();
        for anc in self.h.ancestors(class) {
            for m in self.methods.get(&anc).into_iter().flatten() {
                if m.name == f.name && matches!(m.target, MethodTarget::Virtual(_)) {
                    inherited.push((anc.clone(), m.clone()));
                }
            }
        }
        let same_arity: Vec<&(String, MethodInfo)> =
            inherited.iter().filter(|(_, m)| m.params.len() == rest.len()).collect();
        if let Some((_, m)) = same_arity.iter().find(|(_, m)| same_params(&m.params, rest)) {
            return m.target.clone();
        }
        if let Some((anc, _)) = same_arity.first() {
            self.error(
                Code::E_OVERRIDE_PARAM,
                span.clone(),
                format!(
                    "`{class}::{}` overrides the virtual `{anc}::{}` but changes its parameter types",
                    f.name, f.name
                ),
            );
        }
        if f.is_virtual {
            let mut shape = vec![ParamShape::Dispatch];
            for p in rest {
                shape.push(match &p.ty {
                    ValueType::Class(c) => ParamShape::Fixed {
                        class: c.clone(),
                        is_const: p.is_const,
                        by_ref: p.mode == PassMode::ByRef,
                    },
                    other => shape_of(other),
                });
            }
            MethodTarget::Virtual(MmKey {
                name: format!("{class}::{}", f.name),
                shape,
            })
        } else {
            let mut params = vec![ValueType::Class(class.to_string())];
            params.extend(rest.iter().map(|p| p.ty.clone()));
            MethodTarget::Static(FuncKey {
                name: format!("{class}::{}", f.name),
                params,
            })
        }
    }

    fn check_main(&mut self) {
        let mains: Vec<(FuncKey, Span, ValueType)> = self
            .funcs
            .iter()
            .filter(|(k, e)| k.name == "main" && e.member_of.is_none())
            .map(|(k, e)| (k.clone(), e.span.clone(), e.func.ret.clone()))
            .collect();
        for (k, span, ret) in mains {
            if !k.params.is_empty() {
                self.error(Code::E_BAD_MAIN, span, "`main` must not take parameters");
            } else if ret != ValueType::Scalar(ScalarType::Int) {
                self.error(Code::E_BAD_MAIN, span, "`main` must return int");
            }
        }
    }

    fn candidates(&self, key: &MmKey) -> Vec<Candidate> {
        self.specs
            .range((key.clone(), Vec::new())..)
            .take_while(|((k, _), _)| k == key)
            .map(|(_, e)| Candidate {
                params: e.spec.dispatch_params(),
                ret: e.spec.ret.clone(),
                label: e.spec.label(),
            })
            .collect()
    }

    // ----- bodies -----

    fn check_bodies(&mut self) -> (BTreeMap<SpecId, Body>, BTreeMap<FuncKey, Body>) {
        let mut spec_bodies = BTreeMap::new();
        let mut func_bodies = BTreeMap::new();
        let spec_jobs: Vec<BodyJob<'a, SpecId>> = self
            .specs
            .iter()
            .filter_map(|(id, e)| {
                e.body.map(|b| {
                    (
                        id.clone(),
                        b,
                        e.spec.params.clone(),
                        e.names.clone(),
                        e.spec.ret.clone(),
                        e.member_of.clone(),
                    )
                })
            })
            .collect();
        for (id, b, params, names, ret, member_of) in spec_jobs {
            if let Some(body) = self.check_body(b, &params, &names, ret, member_of) {
                spec_bodies.insert(id, body);
            }
        }
        let func_jobs: Vec<BodyJob<'a, FuncKey>> = self
            .funcs
            .iter()
            .filter_map(|(k, e)| {
                e.body.map(|b| {
                    (
                        k.clone(),
                        b,
                        e.func.params.clone(),
                        e.names.clone(),
                        e.func.ret.clone(),
                        e.member_of.clone(),
                    )
                })
            })
            .collect();
        for (k, b, params, names, ret, member_of) in func_jobs {
            if let Some(body) = self.check_body(b, &params, &names, ret, member_of) {
                func_bodies.insert(k, body);
            }
        }
        (spec_bodies, func_bodies)
    }

    fn check_body(
        &mut self,
        b: &Block,
        params: &[Param],
        names: &[Option<String>],
        ret: ValueType,
        member_of: Option<String>,
    ) -> Option<Body> {
        let mut ctx = FnCtx {
            locals: Vec::new(),
            scopes: vec![Vec::new()],
            ret,
            member_of,
        };
        for (p, n) in params.iter().zip(names) {
            let idx = ctx.locals.len();
            ctx.locals.push(LocalVar {
                name: n.clone().unwrap_or_default(),
                ty: p.ty.clone(),
                is_const: p.is_const,
            });
            if let Some(n) = n {
                ctx.scopes[0].push((n.clone(), idx));
            }
        }
        let before = self.diags.iter().filter(|d| d.is_error()).count();
        let stmts = self.block(&mut ctx, b);
        let after = self.diags.iter().filter(|d| d.is_error()).count();
        (after == before).then_some(Body {
            locals: ctx.locals,
            param_count: params.len(),
            stmts,
        })
    }

    fn block(&mut self, ctx: &mut FnCtx, b: &Block) -> Vec<ir::Stmt> {
        ctx.scopes.push(Vec::new());
        let out = b.stmts.iter().filter_map(|s| self.stmt(ctx, s)).collect();
        ctx.scopes.pop();
        out
    }

    fn nested(&mut self, ctx: &mut FnCtx, s: &ast::Stmt) -> Vec<ir::Stmt> {
        ctx.scopes.push(Vec::new());
        let out = self.stmt(ctx, s).into_iter().collect();
        ctx.scopes.pop();
        out
    }

    fn stmt(&mut self, ctx: &mut FnCtx, s: &ast::Stmt) -> Option<ir::Stmt> {
        let span = s.loc.span();
        match &s.kind {
            StmtKind::Block(b) => Some(ir::Stmt::Block(self.block(ctx, b))),
            StmtKind::Empty => None,
            StmtKind::Local { ty, is_const, vars } => {
                let ty = self.resolve_type(ty, &span)?;
                let mut out = Vec::new();
                for v in vars {
                    let init = match &v.init {
                        Some(e) => {
                            let e = self.expr(ctx, e)?;
                            Some(self.coerce(e, &ty, true, &v.loc.span(), "initializer")?)
                        }
                        None => None,
                    };
                    if ctx.scopes.last().expect("scope").iter().any(|(n, _)| *n == v.name) {
                        self.error(
                            Code::E_DUPLICATE_NAME,
                            v.loc.span(),
                            format!("`{}` is already declared in this scope", v.name),
                        );
                        continue;
                    }
                    let idx = ctx.locals.len();
                    ctx.locals.push(LocalVar {
                        name: v.name.clone(),
                        ty: ty.clone(),
                        is_const: *is_const,
                    });
                    ctx.scopes.last_mut().expect("scope").push((v.name.clone(), idx));
                    out.push(ir::Stmt::InitLocal { local: idx, init });
                }
                if out.len() == 1 {
                    out.pop()
                } else {
                    Some(ir::Stmt::Block(out))
                }
            }
            StmtKind::Assign { target, value } => self.assign(ctx, target, value, &span),
            StmtKind::Expr(e) => Some(ir::Stmt::Expr(self.expr(ctx, e)?)),
            StmtKind::If { cond, then, otherwise } => {
                let cond = self.condition(ctx, cond);
                let then = self.nested(ctx, then);
                let otherwise = match otherwise {
                    Some(o) => self.nested(ctx, o),
                    None => Vec::new(),
                };
                Some(ir::Stmt::If {
                    cond: cond?,
                    then,
                    otherwise,
                })
            }
            StmtKind::While { cond, body } => {
                let cond = self.condition(ctx, cond);
                let body = self.nested(ctx, body);
                Some(ir::Stmt::While { cond: cond?, body })
            }
            StmtKind::Return(value) => {
                let ret = ctx.ret.clone();
                match (value, &ret) {
                    (None, ValueType::Void) => Some(ir::Stmt::Return(None)),
                    (None, _) => {
                        self.error(Code::E_TYPE, span, format!("missing return value of type {ret}"));
                        None
                    }
                    (Some(_), ValueType::Void) => {
                        self.error(Code::E_TYPE, span, "a void function cannot return a value");
                        None
                    }
                    (Some(e), _) => {
                        let e = self.expr(ctx, e)?;
                        let e = self.coerce(e, &ret, true, &span, "return value")?;
                        Some(ir::Stmt::Return(Some(e)))
                    }
                }
            }
        }
    }

    fn condition(&mut self, ctx: &mut FnCtx, e: &ast::Expr) -> Option<ir::Expr> {
        let span = e.loc.span();
        let e = self.expr(ctx, e)?;
        self.coerce(e, &ValueType::Scalar(ScalarType::Bool), false, &span, "condition")
    }

    fn assign(&mut self, ctx: &mut FnCtx, target: &ast::Expr, value: &ast::Expr, span: &Span) -> Option<ir::Stmt> {
        let lhs = self.expr(ctx, target);
        let rhs = self.expr(ctx, value);
        let (lhs, rhs) = (lhs?, rhs?);
        if lhs.ty.class_name().is_some() {
            self.error(
                Code::E_TYPE,
                span.clone(),
                "assignment of class objects is not supported; assign fields instead",
            );
            return None;
        }
        let ty = lhs.ty.clone();
        match lhs.kind {
            ir::ExprKind::Local(idx) => {
                if ctx.locals[idx].is_const {
                    self.error(
                        Code::E_CONST_VIOLATION,
                        span.clone(),
                        format!("cannot assign to const `{}`", ctx.locals[idx].name),
                    );
                    return None;
                }
                let value = self.coerce(rhs, &ty, true, span, "assigned value")?;
                Some(ir::Stmt::AssignLocal { local: idx, value })
            }
            ir::ExprKind::Field { object, slot } => {
                if object.is_const {
                    self.error(
                        Code::E_CONST_VIOLATION,
                        span.clone(),
                        "cannot assign to a field of a const object",
                    );
                    return None;
                }
                let value = self.coerce(rhs, &ty, true, span, "assigned value")?;
                Some(ir::Stmt::AssignField {
                    object: *object,
                    slot,
                    value,
                })
            }
            _ => {
                self.error(
                    Code::E_TYPE,
                    span.clone(),
                    "the left side of `=` must be a variable or a field",
                );
                None
            }
        }
    }

    /// Converts `e` to `expected`: class upcasts, and, where `promote` is
    /// set, bool to int.
    fn coerce(
        &mut self,
        e: ir::Expr,
        expected: &ValueType,
        promote: bool,
        span: &Span,
        what: &str,
    ) -> Option<ir::Expr> {
        if &e.ty == expected {
            return Some(e);
        }
        match (&e.ty, expected) {
            (ValueType::Class(_), ValueType::Class(target)) => self.upcast(e, target, span),
            (ValueType::Scalar(ScalarType::Bool), ValueType::Scalar(ScalarType::Int)) if promote => {
                Some(ir::Expr::new(expected.clone(), ir::ExprKind::BoolToInt(Box::new(e))))
            }
            _ => {
                let found = e.ty.clone();
                self.error(
                    Code::E_TYPE,
                    span.clone(),
                    format!("{what} has type {found}, expected {expected}"),
                );
                None
            }
        }
    }

    fn upcast(&mut self, e: ir::Expr, target: &str, span: &Span) -> Option<ir::Expr> {
        let from = e.ty.class_name().expect("class value").to_string();
        if from == target {
            return Some(e);
        }
        match self.h.subtype(&from, target) {
            SubtypeAnswer::Unique(_) => Some(ir::Expr {
                ty: ValueType::Class(target.to_string()),
                is_const: e.is_const,
                kind: ir::ExprKind::Upcast {
                    expr: Box::new(e),
                    target: target.to_string(),
                },
            }),
            SubtypeAnswer::Ambiguous(_) => {
                self.error(
                    Code::E_TYPE,
                    span.clone(),
                    format!("`{from}` is an ambiguous subtype of `{target}`"),
                );
                None
            }
            SubtypeAnswer::No => {
                self.error(
                    Code::E_TYPE,
                    span.clone(),
                    format!("`{from}` is not a subtype of `{target}`"),
                );
                None
            }
        }
    }

    fn exprs(&mut self, ctx: &mut FnCtx, es: &[ast::Expr]) -> Option<Vec<ir::Expr>> {
        let out: Vec<Option<ir::Expr>> = es.iter().map(|e| self.expr(ctx, e)).collect();
        out.into_iter().collect()
    }

    fn expr(&mut self, ctx: &mut FnCtx, e: &ast::Expr) -> Option<ir::Expr> {
        let span = e.loc.span();
        match &e.kind {
            ExprKind::Int(v) => Some(ir::Expr::lit(Lit::Int(*v))),
            ExprKind::Float(v) => Some(ir::Expr::lit(Lit::Float(*v))),
            ExprKind::Bool(v) => Some(ir::Expr::lit(Lit::Bool(*v))),
            ExprKind::Str(_) => {
                self.error(Code::E_TYPE, span, "string literals may only be printed");
                None
            }
            ExprKind::Name(n) => match ctx.lookup(n) {
                Some(idx) => {
                    let l = &ctx.locals[idx];
                    Some(ir::Expr {
                        ty: l.ty.clone(),
                        is_const: l.is_const,
                        kind: ir::ExprKind::Local(idx),
                    })
                }
                None => {
                    self.error(Code::E_UNKNOWN_NAME, span, format!("unknown name `{n}`"));
                    None
                }
            },
            ExprKind::Field { object, field } => {
                let obj = self.expr(ctx, object)?;
                let Some(class) = obj.ty.class_name().map(str::to_string) else {
                    self.error(
                        Code::E_TYPE,
                        span,
                        format!("`.{field}` applied to a value of type {}", obj.ty),
                    );
                    return None;
                };
                match self.h.lookup_field(&class, field) {
                    FieldLookup::Found { owner, slot, ty } => {
                        let obj = self.upcast(obj, &owner, &span)?;
                        Some(ir::Expr {
                            ty: ValueType::Scalar(ty),
                            is_const: obj.is_const,
                            kind: ir::ExprKind::Field {
                                object: Box::new(obj),
                                slot,
                            },
                        })
                    }
                    FieldLookup::Ambiguous(owners) => {
                        self.error(
                            Code::E_AMBIGUOUS_FIELD,
                            span,
                            format!(
                                "field `{field}` of `{class}` is ambiguous (inherited from {})",
                                owners.join(", ")
                            ),
                        );
                        None
                    }
                    FieldLookup::Missing => {
                        self.error(Code::E_UNKNOWN_FIELD, span, format!("`{class}` has no field `{field}`"));
                        None
                    }
                }
            }
            ExprKind::Unary { op, operand } => {
                let inner = self.expr(ctx, operand)?;
                let ok = match op {
                    UnaryOp::Not => inner.ty == ValueType::Scalar(ScalarType::Bool),
                    UnaryOp::Neg => matches!(inner.ty, ValueType::Scalar(ScalarType::Int | ScalarType::Float)),
                };
                if !ok {
                    self.error(
                        Code::E_TYPE,
                        span,
                        format!("invalid operand of type {} for unary operator", inner.ty),
                    );
                    return None;
                }
                let op = match op {
                    UnaryOp::Not => UnOp::Not,
                    UnaryOp::Neg => UnOp::Neg,
                };
                Some(ir::Expr::new(
                    inner.ty.clone(),
                    ir::ExprKind::Unary {
                        op,
                        operand: Box::new(inner),
                    },
                ))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(ctx, lhs);
                let r = self.expr(ctx, rhs);
                let (l, r) = (l?, r?);
                self.binary(*op, l, r, span)
            }
            ExprKind::Call { name, args } => self.call(ctx, name, args, span),
            ExprKind::MmCall { name, args } => {
                let args = self.exprs(ctx, args)?;
                self.mm_call(name, args, span)
            }
            ExprKind::MethodCall { receiver, name, args } => {
                let recv = self.expr(ctx, receiver);
                let args = self.exprs(ctx, args);
                let (recv, args) = (recv?, args?);
                if name.starts_with('@') {
                    let mut all = vec![recv];
                    all.extend(args);
                    return self.mm_call(name, all, span);
                }
                self.method_call(recv, name, args, span)
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, l: ir::Expr, r: ir::Expr, span: Span) -> Option<ir::Expr> {
        use ScalarType::*;
        let (lt, rt) = (l.ty.scalar(), r.ty.scalar());
        let result = match (op, lt, rt) {
            (BinaryOp::Or | BinaryOp::And, Some(Bool), Some(Bool)) => Some(Bool),
            (BinaryOp::Eq | BinaryOp::Ne, Some(a), Some(b)) if a == b => Some(Bool),
            (BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge, Some(a), Some(b)) if a == b && a != Bool => {
                Some(Bool)
            }
            (BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div, Some(a), Some(b))
                if a == b && a != Bool =>
            {
                Some(a)
            }
            (BinaryOp::Rem, Some(Int), Some(Int)) => Some(Int),
            _ => None,
        };
        let Some(result) = result else {
            self.error(
                Code::E_TYPE,
                span,
                format!("operator `{}` cannot combine {} and {}", op.symbol(), l.ty, r.ty),
            );
            return None;
        };
        Some(ir::Expr::new(
            ValueType::Scalar(result),
            ir::ExprKind::Binary {
                op: binop(op),
                lhs: Box::new(l),
                rhs: Box::new(r),
            },
        ))
    }

    fn arg_fits(&self, p: &Param, a: &ir::Expr) -> bool {
        match (&p.ty, &a.ty) {
            (ValueType::Class(pc), ValueType::Class(ac)) => {
                if a.is_const && !p.is_const && p.mode == PassMode::ByRef {
                    return false;
                }
                self.h.subtype(ac, pc).is_unique()
            }
            (pt, at) => pt == at,
        }
    }

    /// Most specific applicable overload among `cands` (index into it).
    fn pick_overload(&self, cands: &[&[Param]], args: &[ir::Expr]) -> Result<usize, (Code, String)> {
        let fits: Vec<usize> = (0..cands.len())
            .filter(|&i| cands[i].len() == args.len() && cands[i].iter().zip(args).all(|(p, a)| self.arg_fits(p, a)))
            .collect();
        let below = |x: &[Param], y: &[Param]| {
            x.iter().zip(y).all(|(p, q)| match (&p.ty, &q.ty) {
                (ValueType::Class(a), ValueType::Class(b)) => self.h.subtype(a, b).is_unique(),
                (a, b) => a == b,
            })
        };
        let best: Vec<usize> = fits
            .iter()
            .copied()
            .filter(|&i| {
                !fits
                    .iter()
                    .any(|&j| j != i && below(cands[j], cands[i]) && !below(cands[i], cands[j]))
            })
            .collect();
        match best.as_slice() {
            [] => Err((Code::E_NO_FUNCTION, "no overload accepts these arguments".into())),
            [one] => Ok(*one),
            _ => Err((Code::E_AMBIGUOUS_CALL, "several overloads match equally well".into())),
        }
    }

    fn convert_args(&mut self, params: &[Param], args: Vec<ir::Expr>, span: &Span) -> Option<Vec<ir::Expr>> {
        let mut out = Vec::new();
        for (p, a) in params.iter().zip(args) {
            out.push(self.coerce(a, &p.ty, false, span, "argument")?);
        }
        Some(out)
    }

    fn print_builtin(&mut self, ctx: &mut FnCtx, args: &[ast::Expr], span: Span) -> Option<ir::Expr> {
        if args.len() != 1 {
            self.error(Code::E_NO_FUNCTION, span, "`print` takes exactly one argument");
            return None;
        }
        if let ExprKind::Str(s) = &args[0].kind {
            return Some(ir::Expr::new(ValueType::Void, ir::ExprKind::PrintStr(s.clone())));
        }
        let a = self.expr(ctx, &args[0])?;
        if a.ty.scalar().is_none() {
            self.error(
                Code::E_TYPE,
                span,
                format!("`print` cannot print a value of type {}", a.ty),
            );
            return None;
        }
        Some(ir::Expr::new(ValueType::Void, ir::ExprKind::PrintValue(Box::new(a))))
    }

    fn call(&mut self, ctx: &mut FnCtx, name: &str, args: &[ast::Expr], span: Span) -> Option<ir::Expr> {
        let keys: Vec<FuncKey> = self
            .funcs
            .iter()
            .filter(|(k, e)| k.name == name && e.member_of.is_none())
            .map(|(k, _)| k.clone())
            .collect();
        let is_print_str = name == "print" && args.len() == 1 && matches!(args[0].kind, ExprKind::Str(_));
        if is_print_str {
            return self.print_builtin(ctx, args, span);
        }
        if keys.is_empty() {
            if let Some(class) = ctx.member_of.clone() {
                if self.find_methods(&class, name).is_some() {
                    let this = ctx.lookup("this").map(|idx| ir::Expr {
                        ty: ValueType::Class(class.clone()),
                        is_const: false,
                        kind: ir::ExprKind::Local(idx),
                    })?;
                    let args = self.exprs(ctx, args)?;
                    return self.method_call(this, name, args, span);
                }
            }
            if name == "print" {
                return self.print_builtin(ctx, args, span);
            }
            self.error(Code::E_NO_FUNCTION, span, format!("unknown function `{name}`"));
            return None;
        }
        let argv = self.exprs(ctx, args)?;
        let params: Vec<Vec<Param>> = keys.iter().map(|k| self.funcs[k].func.params.clone()).collect();
        let refs: Vec<&[Param]> = params.iter().map(Vec::as_slice).collect();
        match self.pick_overload(&refs, &argv) {
            Ok(i) => {
                let key = keys[i].clone();
                let ret = self.funcs[&key].func.ret.clone();
                let args = self.convert_args(&params[i], argv, &span)?;
                Some(ir::Expr::new(ret, ir::ExprKind::CallStatic { func: key, args }))
            }
            Err(_) if name == "print" && argv.len() == 1 && argv[0].ty.scalar().is_some() => Some(ir::Expr::new(
                ValueType::Void,
                ir::ExprKind::PrintValue(Box::new(argv.into_iter().next().expect("one arg"))),
            )),
            Err((code, msg)) => {
                let shown: Vec<String> = argv.iter().map(|a| a.ty.to_string()).collect();
                self.error(code, span, format!("call `{name}({})`: {msg}", shown.join(", ")));
                None
            }
        }
    }

    fn mm_call(&mut self, name: &str, args: Vec<ir::Expr>, span: Span) -> Option<ir::Expr> {
        if let Some(a) = args.iter().find(|a| a.ty == ValueType::Void) {
            let _ = a;
            self.error(Code::E_TYPE, span, "a void value cannot be passed to a multimethod");
            return None;
        }
        let key = MmKey {
            name: name.to_string(),
            shape: args.iter().map(|a| shape_of(&a.ty)).collect(),
        };
        let dyn_args: Vec<DispatchType> = args
            .iter()
            .filter_map(|a| {
                a.ty.class_name().map(|c| DispatchType {
                    class: c.to_string(),
                    is_const: a.is_const,
                })
            })
            .collect();
        let cands = self.candidates(&key);
        self.typed_multi(key, &cands, &dyn_args, args, span)
    }

    fn typed_multi(
        &mut self,
        key: MmKey,
        cands: &[Candidate],
        dyn_args: &[DispatchType],
        args: Vec<ir::Expr>,
        span: Span,
    ) -> Option<ir::Expr> {
        let shown = key.name.rsplit("::").next().unwrap_or(&key.name).to_string();
        match type_invocation(&self.h, &shown, cands, dyn_args) {
            Ok(t) => {
                for (code, msg) in t.warnings {
                    self.diags.push(Diagnostic::warning(code, span.clone(), msg));
                }
                Some(ir::Expr::new(t.ret, ir::ExprKind::CallMulti { mm: key, args }))
            }
            Err(e) => {
                self.error(e.code, span, e.message);
                None
            }
        }
    }

    /// Methods named `name` in the nearest classes (breadth-first from
    /// `class`) that declare any, with their owner.
    fn find_methods(&self, class: &str, name: &str) -> Option<Vec<(String, MethodInfo)>> {
        let mut level = vec![class.to_string()];
        let mut visited = BTreeSet::new();
        while !level.is_empty() {
            let mut found = Vec::new();
            let mut next = Vec::new();
            for c in &level {
                if !visited.insert(c.clone()) {
                    continue;
                }
                for m in self.methods.get(c).into_iter().flatten() {
                    if m.name == name {
                        found.push((c.clone(), m.clone()));
                    }
                }
                for p in &self.h.class(c).expect("class").def.parents {
                    next.push(p.name.clone());
                }
            }
            if !found.is_empty() {
                return Some(found);
            }
            next.sort();
            next.dedup();
            level = next;
        }
        None
    }

    fn method_call(&mut self, recv: ir::Expr, name: &str, args: Vec<ir::Expr>, span: Span) -> Option<ir::Expr> {
        let Some(class) = recv.ty.class_name().map(str::to_string) else {
            self.error(
                Code::E_TYPE,
                span,
                format!("method `{name}` called on a value of type {}", recv.ty),
            );
            return None;
        };
        let Some(found) = self.find_methods(&class, name) else {
            self.error(Code::E_NO_FUNCTION, span, format!("`{class}` has no method `{name}`"));
            return None;
        };
        let owners: BTreeSet<&str> = found.iter().map(|(o, _)| o.as_str()).collect();
        if owners.len() > 1 {
            let list: Vec<&str> = owners.into_iter().collect();
            self.error(
                Code::E_AMBIGUOUS_CALL,
                span,
                format!(
                    "method `{name}` of `{class}` is inherited from several classes: {}",
                    list.join(", ")
                ),
            );
            return None;
        }
        let refs: Vec<&[Param]> = found.iter().map(|(_, m)| m.params.as_slice()).collect();
        let pick = match self.pick_overload(&refs, &args) {
            Ok(i) => i,
            Err((code, msg)) => {
                self.error(code, span, format!("call `{class}::{name}`: {msg}"));
                return None;
            }
        };
        let (owner, method) = found[pick].clone();
        let mut args = self.convert_args(&method.params, args, &span)?;
        match method.target {
            MethodTarget::Static(key) => {
                if recv.is_const {
                    self.error(
                        Code::E_CONST_VIOLATION,
                        span,
                        format!("non-virtual method `{name}` cannot be called on a const object"),
                    );
                    return None;
                }
                let recv = self.upcast(recv, &owner, &span)?;
                let ret = self.funcs[&key].func.ret.clone();
                args.insert(0, recv);
                Some(ir::Expr::new(ret, ir::ExprKind::CallStatic { func: key, args }))
            }
            MethodTarget::Virtual(key) => {
                let dyn_args = vec![DispatchType {
                    class: class.clone(),
                    is_const: recv.is_const,
                }];
                let cands = self.candidates(&key);
                args.insert(0, recv);
                self.typed_multi(key, &cands, &dyn_args, args, span)
            }
        }
    }

    // ----- module level -----

    fn module_warnings(&mut self) {
        let keys: BTreeSet<MmKey> = self.specs.keys().map(|(k, _)| k.clone()).collect();
        for key in keys {
            let entries: Vec<(&SpecId, &SpecEntry)> = self
                .specs
                .range((key.clone(), Vec::new())..)
                .take_while(|((k, _), _)| *k == key)
                .collect();
            let cands: Vec<Candidate> = entries
                .iter()
                .map(|(_, e)| Candidate {
                    params: e.spec.dispatch_params(),
                    ret: e.spec.ret.clone(),
                    label: e.spec.label(),
                })
                .collect();
            let spans: Vec<Span> = entries.iter().map(|(_, e)| e.span.clone()).collect();
            let mut out = Vec::new();
            for (a, b, witness) in latent_conflicts(&self.h, &cands) {
                let shown: Vec<String> = witness.iter().map(|t| t.to_string()).collect();
                let (first, second) = if spans[a] <= spans[b] { (a, b) } else { (b, a) };
                out.push(
                    Diagnostic::warning(
                        Code::W_LATENT_CONFLICT,
                        spans[second].clone(),
                        format!(
                            "`{}` and `{}` are both most specific for ({})",
                            cands[first].label,
                            cands[second].label,
                            shown.join(", ")
                        ),
                    )
                    .with_related(spans[first].clone()),
                );
            }
            for (a, b) in return_constraint_violations(&self.h, &cands) {
                out.push(
                    Diagnostic::warning(
                        Code::W_RETURN_CONSTRAINT,
                        spans[a].clone(),
                        format!(
                            "`{}` is more specific than `{}` but its return type {} is not a unique subtype of {}",
                            cands[a].label, cands[b].label, cands[a].ret, cands[b].ret
                        ),
                    )
                    .with_related(spans[b].clone()),
                );
            }
            self.diags.extend(out);
        }
    }

    fn finish(
        self,
        (mut spec_bodies, mut func_bodies): (BTreeMap<SpecId, Body>, BTreeMap<FuncKey, Body>),
    ) -> TypedModule {
        let has_main = self.funcs.get(&FuncKey::main()).is_some_and(|e| e.body.is_some());
        let specs = self
            .specs
            .into_iter()
            .map(|(id, e)| {
                let mut spec = e.spec;
                spec.body = spec_bodies.remove(&id);
                spec
            })
            .collect();
        let funcs = self
            .funcs
            .into_iter()
            .map(|(k, e)| {
                let mut f = e.func;
                f.body = func_bodies.remove(&k);
                f
            })
            .collect();
        let mut warnings: Vec<Diagnostic> = self.diags.into_iter().filter(|d| !d.is_error()).collect();
        crate::diag::sort_diagnostics(&mut warnings);
        TypedModule {
            name: self.module,
            classes: self.h.defs(),
            specs,
            funcs,
            has_main,
            warnings,
        }
    }
}
