//! Compiling one source file: include resolution, parsing, checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::diag::{Code, Diagnostic, Span};
use crate::frontend::ast::{Ast, Member};
use crate::frontend::{desugar_members, parse};
use crate::typecheck::{check_module, TypedModule};

pub struct Compiled {
    pub module: Option<TypedModule>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Compiles a source file from disk; includes are read relative to the
/// directory of the including file.
pub fn compile_file(path: &Path) -> io::Result<Compiled> {
    let source = fs::read_to_string(path)?;
    Ok(compile_with(path, &source, &|p| fs::read_to_string(p)))
}

/// Compiles `source` with headers looked up by path in `headers`.
pub fn compile_source(name: &str, source: &str, headers: &BTreeMap<String, String>) -> Compiled {
    compile_with(Path::new(name), source, &|p| {
        headers
            .get(&p.to_string_lossy().replace('\\', "/"))
            .cloned()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, "no such header"))
    })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn compile_with(path: &Path, source: &str, read: &dyn Fn(&Path) -> io::Result<String>) -> Compiled {
    let name = file_name(path);
    let mut diagnostics = Vec::new();
    let ast = match parse(source, &name) {
        Ok(a) => a,
        Err(d) => {
            return Compiled {
                module: None,
                diagnostics: d,
            }
        }
    };
    let mut imports = Vec::new();
    let mut seen = BTreeSet::new();
    load_includes(path, &ast, read, &mut seen, &mut imports, &mut diagnostics);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Compiled {
            module: None,
            diagnostics,
        };
    }
    let (module, diags) = check_module(&name, &desugar_members(ast), &imports);
    diagnostics.extend(diags);
    Compiled { module, diagnostics }
}

fn load_includes(
    from: &Path,
    ast: &Ast,
    read: &dyn Fn(&Path) -> io::Result<String>,
    seen: &mut BTreeSet<PathBuf>,
    out: &mut Vec<Ast>,
    diags: &mut Vec<Diagnostic>,
) {
    let dir = from.parent().unwrap_or(Path::new(""));
    for inc in &ast.includes {
        let target = dir.join(&inc.path);
        if !seen.insert(target.clone()) {
            continue;
        }
        let text = match read(&target) {
            Ok(t) => t,
            Err(e) => {
                diags.push(Diagnostic::error(
                    Code::E_INCLUDE,
                    inc.loc.span(),
                    format!("cannot read `{}`: {e}", inc.path),
                ));
                continue;
            }
        };
        let header = match parse(&text, &file_name(&target)) {
            Ok(h) => h,
            Err(d) => {
                diags.extend(d);
                continue;
            }
        };
        reject_bodies(&header, diags);
        load_includes(&target, &header, read, seen, out, diags);
        out.push(desugar_members(header));
    }
}

fn reject_bodies(h: &Ast, diags: &mut Vec<Diagnostic>) {
    let mut spans: Vec<(Span, String)> = Vec::new();
    for c in &h.class_decls {
        for m in &c.members {
            match m {
                Member::Method(f) if f.body.is_some() => spans.push((f.loc.span(), format!("{}::{}", c.name, f.name))),
                Member::Multimethod(m) if m.body.is_some() => {
                    spans.push((m.loc.span(), format!("{}::{}", c.name, m.name)))
                }
                _ => {}
            }
        }
    }
    for f in h.func_decls.iter().filter(|f| f.body.is_some()) {
        spans.push((f.loc.span(), f.name.clone()));
    }
    for m in h.mm_decls.iter().filter(|m| m.body.is_some()) {
        spans.push((m.loc.span(), m.name.clone()));
    }
    for (span, what) in spans {
        diags.push(Diagnostic::error(
            Code::E_HEADER_BODY,
            span,
            format!("`{what}` has a body in a declaration header"),
        ));
    }
}
