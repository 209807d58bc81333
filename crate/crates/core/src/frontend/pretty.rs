//! Source printer. Output re-parses to an equal tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_ast(ast: &Ast) -> String {
    let mut p = Printer::default();
    for inc in &ast.includes {
        p.line(&format!("#include {}", quote(&inc.path)));
    }
    for c in &ast.class_decls {
        p.class(c);
    }
    for f in &ast.func_decls {
        p.func(f);
    }
    for m in &ast.mm_decls {
        p.mm(m);
    }
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn class(&mut self, c: &ClassDecl) {
        let mut head = format!("class {}", c.name);
        if !c.parents.is_empty() {
            let parents: Vec<String> = c
                .parents
                .iter()
                .map(|p| {
                    let mut s = String::new();
                    if p.is_virtual {
                        s.push_str("virtual ");
                    }
                    if p.is_public {
                        s.push_str("public ");
                    }
                    s.push_str(&p.name);
                    s
                })
                .collect();
            head.push_str(" : ");
            head.push_str(&parents.join(", "));
        }
        head.push_str(" {");
        self.line(&head);
        self.indent += 1;
        for f in &c.fields {
            self.line(&format!("{} {};", f.ty, f.name));
        }
        for m in &c.members {
            match m {
                Member::Method(f) => self.func(f),
                Member::Multimethod(m) => self.mm(m),
            }
        }
        self.indent -= 1;
        self.line("};");
    }

    fn signature(&self, ret: &TypeExpr, name: &str, params: &[ParamDecl]) -> String {
        let ps: Vec<String> = params.iter().map(param).collect();
        format!("{} {}({})", type_expr(ret), name, ps.join(", "))
    }

    fn func(&mut self, f: &FuncDecl) {
        let mut sig = self.signature(&f.ret, &f.name, &f.params);
        if f.is_virtual {
            sig = format!("virtual {sig}");
        }
        self.body(sig, f.body.as_ref());
    }

    fn mm(&mut self, m: &MmDecl) {
        let sig = self.signature(&m.ret, &m.name, &m.params);
        self.body(sig, m.body.as_ref());
    }

    fn body(&mut self, sig: String, body: Option<&Block>) {
        match body {
            None => self.line(&format!("{sig};")),
            Some(b) => {
                self.line(&format!("{sig} {{"));
                self.block_contents(b);
                self.line("}");
            }
        }
    }

    fn block_contents(&mut self, b: &Block) {
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Block(b) => {
                self.line("{");
                self.block_contents(b);
                self.line("}");
            }
            StmtKind::Local { ty, is_const, vars } => {
                let decls: Vec<String> = vars
                    .iter()
                    .map(|v| match &v.init {
                        Some(e) => format!("{} = {}", v.name, print_expr(e)),
                        None => v.name.clone(),
                    })
                    .collect();
                let prefix = if *is_const { "const " } else { "" };
                self.line(&format!("{prefix}{} {};", type_expr(ty), decls.join(", ")));
            }
            StmtKind::Assign { target, value } => {
                self.line(&format!("{} = {};", print_expr(target), print_expr(value)));
            }
            StmtKind::Expr(e) => self.line(&format!("{};", print_expr(e))),
            StmtKind::If { cond, then, otherwise } => {
                self.line(&format!("if ({})", print_expr(cond)));
                self.nested(then);
                if let Some(o) = otherwise {
                    self.line("else");
                    self.nested(o);
                }
            }
            StmtKind::While { cond, body } => {
                self.line(&format!("while ({})", print_expr(cond)));
                self.nested(body);
            }
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => self.line(&format!("return {};", print_expr(e))),
            StmtKind::Empty => self.line(";"),
        }
    }

    fn nested(&mut self, s: &Stmt) {
        if matches!(s.kind, StmtKind::Block(_)) {
            self.stmt(s);
        } else {
            self.indent += 1;
            self.stmt(s);
            self.indent -= 1;
        }
    }
}

fn type_expr(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Void => "void".to_string(),
        TypeExpr::Scalar(s) => s.to_string(),
        TypeExpr::Class(c) => c.clone(),
    }
}

fn param(p: &ParamDecl) -> String {
    let mut s = String::new();
    if p.is_const {
        s.push_str("const ");
    }
    s.push_str(&type_expr(&p.ty));
    if p.by_ref {
        s.push_str(" &");
    }
    if let Some(n) = &p.name {
        if !p.by_ref {
            s.push(' ');
        }
        s.push_str(n);
    }
    s
}

fn quote(text: &str) -> String {
    let mut s = String::from("\"");
    for c in text.chars() {
        match c {
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            '\\' => s.push_str("\\\\"),
            '"' => s.push_str("\\\""),
            '\0' => s.push_str("\\0"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

fn float_literal(v: f64) -> String {
    // Display never uses an exponent and round-trips exactly.
    let mut s = format!("{v}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

fn is_atomic(e: &Expr) -> bool {
    !matches!(e.kind, ExprKind::Unary { .. } | ExprKind::Binary { .. })
}

fn operand(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        expr(out, e);
        out.push(')');
    } else {
        expr(out, e);
    }
}

fn args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a);
    }
    out.push(')');
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Float(v) => out.push_str(&float_literal(*v)),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Str(s) => out.push_str(&quote(s)),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Field { object, field } => {
            operand(out, object, !is_atomic(object));
            out.push('.');
            out.push_str(field);
        }
        ExprKind::Call { name, args: a } | ExprKind::MmCall { name, args: a } => {
            out.push_str(name);
            args(out, a);
        }
        ExprKind::MethodCall {
            receiver,
            name,
            args: a,
        } => {
            operand(out, receiver, !is_atomic(receiver));
            out.push('.');
            out.push_str(name);
            args(out, a);
        }
        ExprKind::Unary { op, operand: inner } => {
            out.push_str(match op {
                UnaryOp::Not => "!",
                UnaryOp::Neg => "-",
            });
            operand(out, inner, matches!(inner.kind, ExprKind::Binary { .. }));
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let lp = matches!(&lhs.kind, ExprKind::Binary { op: l, .. } if l.precedence() < p);
            let rp = matches!(&rhs.kind, ExprKind::Binary { op: r, .. } if r.precedence() <= p);
            operand(out, lhs, lp);
            let _ = write!(out, " {} ", op.symbol());
            operand(out, rhs, rp);
        }
    }
}
