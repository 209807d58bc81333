//! Compiles and links a random fixture, then compares the compressed
//! tables against the brute-force oracle on every tuple.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ool::diag::{Code, Diagnostic};
use ool::driver::compile_source;
use ool::hierarchy::SubtypeAnswer;
use ool::oracle::{Oracle, Verdict, DEFAULT_TUPLE_BUDGET};
use ool::prelink::{link, Entry};

use super::randprog::{render_modules, ret_types, Fixture};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Checked {
    CompileRejected,
    Linked,
    LinkRejected,
}

fn codes(ds: &[Diagnostic]) -> Vec<Code> {
    ds.iter().filter(|d| d.is_error()).map(|d| d.code).collect()
}

pub fn check_fixture(f: &Fixture) -> Result<Checked, String> {
    let [a, b] = render_modules(f);
    let none = BTreeMap::new();
    let mut modules = Vec::new();
    for (name, src) in [("first.ool", &a), ("second.ool", &b)] {
        let c = compile_source(name, src, &none);
        match c.module {
            Some(m) => modules.push(m),
            None => {
                let cs = codes(&c.diagnostics);
                // the generated source is well formed, so only multimethod checks may reject
                if cs
                    .iter()
                    .any(|c| !matches!(c, Code::E_AMBIGUOUS_RETURN | Code::E_NO_APPLICABLE))
                {
                    return Err(format!("generator produced invalid source {cs:?}\n{src}"));
                }
                return Ok(Checked::CompileRejected);
            }
        }
    }
    let oracle = Oracle::new(&f.classes);
    match link(&modules) {
        Ok(p) => {
            let h = p.hierarchy();
            let Some(mm) = p
                .multimethods
                .iter()
                .find(|m| m.key.name.trim_start_matches('@') == "m")
            else {
                return if f.specs.is_empty() {
                    Ok(Checked::Linked)
                } else {
                    Err("multimethod missing".into())
                };
            };
            let specs: Vec<_> = mm.specs.iter().map(|&g| p.specs[g].dispatch_params()).collect();
            let arity = specs[0].len();
            let table = oracle
                .full_table(&specs, arity, DEFAULT_TUPLE_BUDGET)
                .map_err(|e| format!("{e:?}"))?;
            for (tuple, verdict) in table {
                let ids: Vec<u32> = tuple.iter().map(|t| h.dispatch_id_of(t).unwrap()).collect();
                let entry = mm.tables.lookup(&ids);
                match (&verdict, entry) {
                    (Verdict::None, None | Some(Entry::Trap)) => {}
                    (Verdict::Select(s), Some(Entry::Select { spec, offsets })) if s == spec => {
                        for (i, t) in tuple.iter().enumerate() {
                            let realign = mm.tables.positions[i].realign[ids[i] as usize]
                                .ok_or_else(|| format!("no realignment for {t} at {i}"))?;
                            let want = match h.subtype(&t.class, &specs[*s][i].class) {
                                SubtypeAnswer::Unique(o) => o,
                                other => return Err(format!("selected spec not uniquely above {t}: {other:?}")),
                            };
                            if realign + offsets[i] != want {
                                return Err(format!("{tuple:?} position {i}: {realign} + {} != {want}", offsets[i]));
                            }
                        }
                    }
                    _ => return Err(format!("{tuple:?}: oracle {verdict:?}, table {entry:?}\n{a}\n{b}")),
                }
            }
            Ok(Checked::Linked)
        }
        Err(ds) => {
            let cs = codes(&ds);
            let specs: Vec<_> = f.specs.clone();
            let rets = ret_types(f);
            let table = oracle
                .full_table(&specs, specs[0].len(), DEFAULT_TUPLE_BUDGET)
                .map_err(|e| format!("{e:?}"))?;
            for c in &cs {
                let confirmed = match c {
                    Code::E_LINK_AMBIGUOUS | Code::E_AMBIG_POLE => table
                        .iter()
                        .any(|(t, v)| matches!(v, Verdict::Ambiguous(_)) || oracle.ambiguity_blocked(&specs, t)),
                    Code::E_RETURN_CONSTRAINT => table.iter().any(|(t, _)| oracle.return_violation(&specs, &rets, t)),
                    _ => false,
                };
                if !confirmed {
                    return Err(format!("{c:?} not confirmed by the oracle\n{a}\n{b}"));
                }
            }
            Ok(Checked::LinkRejected)
        }
    }
}
