//! Lowers class members to free declarations.
//!
//! * A member multimethod `R @m(args)` of class `C` becomes `R @m(C &this, args)`.
//! * A member method becomes a function with a leading `C &this` parameter and
//!   keeps `member_of` and its `virtual` flag.
//! * `o.@m(args)` becomes `@m(o, args)`.
//! * Inside member bodies a name that is not a parameter or an enclosing local
//!   is rewritten to `this.name`.
//!
//! Each step leaves nothing for a second pass to rewrite.

use std::mem;

use super::ast::*;

pub fn desugar_members(mut ast: Ast) -> Ast {
    let mut funcs = Vec::new();
    let mut mms = Vec::new();
    for class in &mut ast.class_decls {
        for member in mem::take(&mut class.members) {
            match member {
                Member::Method(mut f) => {
                    f.params.insert(0, this_param(&class.name, &f.loc));
                    f.member_of = Some(class.name.clone());
                    if let Some(b) = &mut f.body {
                        member_body(b, &f.params);
                    }
                    funcs.push(f);
                }
                Member::Multimethod(mut m) => {
                    m.params.insert(0, this_param(&class.name, &m.loc));
                    m.member_of = Some(class.name.clone());
                    if let Some(b) = &mut m.body {
                        member_body(b, &m.params);
                    }
                    mms.push(m);
                }
            }
        }
    }
    for f in &mut ast.func_decls {
        if let Some(b) = &mut f.body {
            rewrite_block(b, &mut None);
        }
    }
    for m in &mut ast.mm_decls {
        if let Some(b) = &mut m.body {
            rewrite_block(b, &mut None);
        }
    }
    ast.func_decls.extend(funcs);
    ast.mm_decls.extend(mms);
    ast
}

fn this_param(class: &str, loc: &Loc) -> ParamDecl {
    ParamDecl {
        name: Some("this".to_string()),
        ty: TypeExpr::Class(class.to_string()),
        is_const: false,
        by_ref: true,
        loc: loc.clone(),
    }
}

fn member_body(b: &mut Block, params: &[ParamDecl]) {
    let mut scope = Some(vec![params.iter().filter_map(|p| p.name.clone()).collect()]);
    rewrite_block(b, &mut scope);
}

/// Lexical scopes of a member body; `None` outside members, where no
/// implicit `this` exists.
type Scopes = Option<Vec<Vec<String>>>;

fn rewrite_block(b: &mut Block, scopes: &mut Scopes) {
    if let Some(s) = scopes {
        s.push(Vec::new());
    }
    for stmt in &mut b.stmts {
        rewrite_stmt(stmt, scopes);
    }
    if let Some(s) = scopes {
        s.pop();
    }
}

/// Child statements of `if`/`while` get their own scope, as in C++.
fn rewrite_nested(s: &mut Stmt, scopes: &mut Scopes) {
    if let Some(sc) = scopes {
        sc.push(Vec::new());
    }
    rewrite_stmt(s, scopes);
    if let Some(sc) = scopes {
        sc.pop();
    }
}

fn rewrite_stmt(s: &mut Stmt, scopes: &mut Scopes) {
    match &mut s.kind {
        StmtKind::Block(b) => rewrite_block(b, scopes),
        StmtKind::Local { vars, .. } => {
            for v in vars {
                if let Some(e) = &mut v.init {
                    rewrite_expr(e, scopes);
                }
                if let Some(sc) = scopes {
                    sc.last_mut().expect("scope").push(v.name.clone());
                }
            }
        }
        StmtKind::Assign { target, value } => {
            rewrite_expr(target, scopes);
            rewrite_expr(value, scopes);
        }
        StmtKind::Expr(e) => rewrite_expr(e, scopes),
        StmtKind::If { cond, then, otherwise } => {
            rewrite_expr(cond, scopes);
            rewrite_nested(then, scopes);
            if let Some(o) = otherwise {
                rewrite_nested(o, scopes);
            }
        }
        StmtKind::While { cond, body } => {
            rewrite_expr(cond, scopes);
            rewrite_nested(body, scopes);
        }
        StmtKind::Return(v) => {
            if let Some(e) = v {
                rewrite_expr(e, scopes);
            }
        }
        StmtKind::Empty => {}
    }
}

fn is_bound(scopes: &[Vec<String>], name: &str) -> bool {
    scopes.iter().any(|s| s.iter().any(|n| n == name))
}

fn rewrite_expr(e: &mut Expr, scopes: &mut Scopes) {
    match &mut e.kind {
        ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {}
        ExprKind::Name(n) => {
            if let Some(sc) = scopes {
                if !is_bound(sc, n) {
                    let field = mem::take(n);
                    let this = Expr::new(ExprKind::Name("this".to_string()), e.loc.clone());
                    e.kind = ExprKind::Field {
                        object: Box::new(this),
                        field,
                    };
                }
            }
        }
        ExprKind::Field { object, .. } => rewrite_expr(object, scopes),
        ExprKind::Call { args, .. } | ExprKind::MmCall { args, .. } => {
            for a in args {
                rewrite_expr(a, scopes);
            }
        }
        ExprKind::MethodCall { receiver, name, args } => {
            rewrite_expr(receiver, scopes);
            for a in args.iter_mut() {
                rewrite_expr(a, scopes);
            }
            if name.starts_with('@') {
                let mut all = vec![mem::replace(
                    receiver.as_mut(),
                    Expr::new(ExprKind::Int(0), Loc::default()),
                )];
                all.append(args);
                e.kind = ExprKind::MmCall {
                    name: mem::take(name),
                    args: all,
                };
            }
        }
        ExprKind::Unary { operand, .. } => rewrite_expr(operand, scopes),
        ExprKind::Binary { lhs, rhs, .. } => {
            rewrite_expr(lhs, scopes);
            rewrite_expr(rhs, scopes);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;

    const SRC: &str = "class Point { int x, y; bool @equal(Point &p) { int z = 1; return x == p.x && z == 1; } int getx() { return x; } };\nint main() { Point p, q; return p.@equal(q); }";

    #[test]
    fn member_multimethod_gets_receiver_parameter() {
        let ast = desugar_members(parse(SRC, "p.ool").unwrap());
        assert!(ast.class_decls[0].members.is_empty());
        let mm = &ast.mm_decls[0];
        assert_eq!(mm.params.len(), 2);
        assert_eq!(mm.params[0].name.as_deref(), Some("this"));
        assert!(mm.params[0].by_ref);
        assert_eq!(mm.member_of.as_deref(), Some("Point"));
        let f = ast.func_decls.iter().find(|f| f.name == "getx").unwrap();
        assert_eq!(f.params.len(), 1);
    }

    #[test]
    fn implicit_this_and_call_syntax() {
        let ast = desugar_members(parse(SRC, "p.ool").unwrap());
        let text = super::super::pretty::print_ast(&ast);
        assert!(text.contains("return this.x == p.x && z == 1;"), "{text}");
        assert!(text.contains("return @equal(p, q);"), "{text}");
    }

    #[test]
    fn idempotent() {
        let once = desugar_members(parse(SRC, "p.ool").unwrap());
        let twice = desugar_members(once.clone());
        assert_eq!(once, twice);
    }
}
