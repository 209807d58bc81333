//! Union of object modules.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{Code, Diagnostic, Span};
use crate::hierarchy::{ClassDef, Hierarchy};
use crate::objmod::ObjectModule;
use crate::typecheck::ir::{walk_exprs, ExprKind, Func, FuncKey, MmKey, Spec};

pub struct Merged {
    pub hierarchy: Hierarchy,
    /// Sorted by key, then dispatch type ids.
    pub specs: Vec<Spec>,
    pub by_key: BTreeMap<MmKey, Vec<usize>>,
    /// Sorted by key.
    pub funcs: Vec<Func>,
}

fn err(code: Code, msg: String) -> Diagnostic {
    Diagnostic::error(code, Span::link(), msg)
}

pub fn merge(modules: &[ObjectModule]) -> Result<Merged, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut order: Vec<&ObjectModule> = modules.iter().collect();
    order.sort_by(|a, b| a.name.cmp(&b.name));

    let mut classes: BTreeMap<&str, (&ClassDef, &str)> = BTreeMap::new();
    for m in &order {
        for c in &m.classes {
            match classes.get(c.name.as_str()) {
                Some((prev, from)) if *prev != c => diags.push(err(
                    Code::E_CLASS_MISMATCH,
                    format!("class `{}` differs between `{from}` and `{}`", c.name, m.name),
                )),
                Some(_) => {}
                None => {
                    classes.insert(&c.name, (c, &m.name));
                }
            }
        }
    }
    let defs: Vec<ClassDef> = classes.values().map(|(c, _)| (*c).clone()).collect();
    let hierarchy = match Hierarchy::build(&defs) {
        Ok(h) => Some(h),
        Err(es) => {
            for e in es {
                diags.push(err(
                    Code::E_CLASS_MISMATCH,
                    format!("merged classes are inconsistent: {e}"),
                ));
            }
            None
        }
    };

    let mut specs: BTreeMap<(MmKey, Vec<String>), Spec> = BTreeMap::new();
    let mut funcs: BTreeMap<FuncKey, (Func, String)> = BTreeMap::new();
    for m in &order {
        for s in &m.specs {
            let id = (
                s.key.clone(),
                s.dispatch_params().iter().map(|t| t.to_string()).collect(),
            );
            match specs.get_mut(&id) {
                None => {
                    specs.insert(id, s.clone());
                }
                Some(prev) => {
                    if prev.ret != s.ret || prev.params != s.params {
                        diags.push(err(
                            Code::E_SIGNATURE_MISMATCH,
                            format!(
                                "`{}` is declared with different signatures in `{}` and `{}`",
                                s.label(),
                                prev.origin,
                                s.origin
                            ),
                        ));
                    } else if let (Some(a), Some(b)) = (&prev.body, &s.body) {
                        if a != b {
                            diags.push(err(
                                Code::E_DUPLICATE_BODY,
                                format!(
                                    "`{}` has bodies in both `{}` and `{}`",
                                    s.label(),
                                    prev.origin,
                                    s.origin
                                ),
                            ));
                        }
                    } else if s.body.is_some() {
                        *prev = s.clone();
                    }
                }
            }
        }
        for f in &m.funcs {
            match funcs.get_mut(&f.key) {
                None => {
                    funcs.insert(f.key.clone(), (f.clone(), m.name.clone()));
                }
                Some((prev, from)) => {
                    if prev.ret != f.ret || prev.params != f.params {
                        diags.push(err(
                            Code::E_SIGNATURE_MISMATCH,
                            format!(
                                "`{}` is declared with different signatures in `{from}` and `{}`",
                                f.key, m.name
                            ),
                        ));
                    } else if let (Some(a), Some(b)) = (&prev.body, &f.body) {
                        if a != b {
                            diags.push(err(
                                Code::E_DUPLICATE_BODY,
                                format!("`{}` has bodies in both `{from}` and `{}`", f.key, m.name),
                            ));
                        }
                    } else if f.body.is_some() {
                        *prev = f.clone();
                        *from = m.name.clone();
                    }
                }
            }
        }
    }

    let mains: Vec<&str> = order.iter().filter(|m| m.has_main).map(|m| m.name.as_str()).collect();
    match mains.len() {
        0 => diags.push(err(Code::E_NO_MAIN, "no module defines `int main()`".into())),
        1 => {}
        _ => diags.push(err(
            Code::E_MULTIPLE_MAIN,
            format!("`main` is defined in several modules: {}", mains.join(", ")),
        )),
    }

    let funcs: Vec<Func> = funcs.into_values().map(|(f, _)| f).collect();
    let keys: BTreeSet<&MmKey> = specs.keys().map(|(k, _)| k).collect();
    let mut missing = BTreeSet::new();
    let mut unresolved = BTreeSet::new();
    let bodies = specs
        .values()
        .filter_map(|s| s.body.as_ref())
        .chain(funcs.iter().filter_map(|f| f.body.as_ref()));
    for b in bodies {
        walk_exprs(&b.stmts, &mut |e| match &e.kind {
            ExprKind::CallStatic { func, .. } => match funcs.binary_search_by(|f| f.key.cmp(func)) {
                Ok(i) if funcs[i].body.is_none() => {
                    missing.insert(func.to_string());
                }
                Ok(_) => {}
                Err(_) => {
                    unresolved.insert(func.to_string());
                }
            },
            ExprKind::CallMulti { mm, .. } if !keys.contains(mm) => {
                unresolved.insert(mm.to_string());
            }
            _ => {}
        });
    }
    for f in missing {
        diags.push(err(
            Code::E_MISSING_BODY,
            format!("`{f}` is called but no module defines it"),
        ));
    }
    for f in unresolved {
        diags.push(err(Code::E_UNRESOLVED, format!("`{f}` is called but never declared")));
    }
    if !mains.is_empty() && funcs.iter().all(|f| f.key != FuncKey::main() || f.body.is_none()) {
        diags.push(err(Code::E_NO_MAIN, "no module defines `int main()`".into()));
    }

    let Some(hierarchy) = hierarchy.filter(|_| diags.is_empty()) else {
        crate::diag::sort_diagnostics(&mut diags);
        return Err(diags);
    };
    let mut specs: Vec<Spec> = specs.into_values().collect();
    let ids = |s: &Spec| -> Vec<u32> {
        s.dispatch_params()
            .iter()
            .map(|t| hierarchy.dispatch_id_of(t).expect("known class"))
            .collect()
    };
    specs.sort_by(|a, b| a.key.cmp(&b.key).then_with(|| ids(a).cmp(&ids(b))));
    let mut by_key: BTreeMap<MmKey, Vec<usize>> = BTreeMap::new();
    for (i, s) in specs.iter().enumerate() {
        by_key.entry(s.key.clone()).or_default().push(i);
    }
    Ok(Merged {
        hierarchy,
        specs,
        by_key,
        funcs,
    })
}
