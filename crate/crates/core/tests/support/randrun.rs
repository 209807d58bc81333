//! Random executable programs whose output is predicted with the oracle.
//!
//! Every call site passes fresh objects through a wrapper function whose
//! parameters are unique ancestors of the argument classes. The selected
//! specialization prints the sentinel of its parameter's own field, writes
//! a marker into it and returns its index; `main` then reads the field back.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use ool::driver::compile_source;
use ool::hierarchy::{ClassDef, DispatchType, Hierarchy};
use ool::oracle::{Oracle, Verdict};
use ool::prelink::link;
use ool::runtime::{self, Options};

use super::randprog::{random_hierarchy, render_classes};

#[derive(Debug, Clone)]
struct SpecParam {
    class: usize,
    is_const: bool,
    by_ref: bool,
}

#[derive(Debug, Clone)]
struct Arg {
    class: usize,
    is_const: bool,
    /// Static class of the wrapper parameter.
    via: usize,
    by_ref: bool,
}

#[derive(Debug, Clone)]
struct Call {
    args: Vec<Arg>,
    selected: usize,
}

pub struct Program {
    pub source: String,
    classes: Vec<ClassDef>,
    specs: Vec<Vec<SpecParam>>,
    calls: Vec<Call>,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct RunStats {
    pub calls: usize,
    pub by_value_args: usize,
    pub by_ref_writes: usize,
    pub subsumed_args: usize,
}

fn dt(classes: &[ClassDef], class: usize, is_const: bool) -> DispatchType {
    DispatchType {
        class: classes[class].name.clone(),
        is_const,
    }
}

fn quals(is_const: bool, class: &str, by_ref: bool, name: &str) -> String {
    format!(
        "{}{class}{} {name}",
        if is_const { "const " } else { "" },
        if by_ref { "&" } else { "" }
    )
}

fn writable(p: &SpecParam) -> bool {
    !p.is_const
}

pub fn random_program(rng: &mut impl Rng) -> Option<Program> {
    let classes = random_hierarchy(rng, 6);
    let oracle = Oracle::new(&classes);
    let n = classes.len();
    let arity = rng.gen_range(1..=2);
    let mut specs: Vec<Vec<SpecParam>> = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let ps: Vec<SpecParam> = (0..arity)
            .map(|_| SpecParam {
                class: rng.gen_range(0..n),
                is_const: rng.gen_bool(0.25),
                by_ref: rng.gen_bool(0.5),
            })
            .collect();
        let key: Vec<(usize, bool)> = ps.iter().map(|p| (p.class, p.is_const)).collect();
        if specs
            .iter()
            .any(|s| s.iter().map(|p| (p.class, p.is_const)).collect::<Vec<_>>() == key)
        {
            continue;
        }
        specs.push(ps);
    }
    let dispatch: Vec<Vec<DispatchType>> = specs
        .iter()
        .map(|s| s.iter().map(|p| dt(&classes, p.class, p.is_const)).collect())
        .collect();
    let mut calls = Vec::new();
    for _ in 0..40 {
        if calls.len() == 3 {
            break;
        }
        let args: Vec<Arg> = (0..arity)
            .map(|_| {
                let class = rng.gen_range(0..n);
                let ups: Vec<usize> = (0..n)
                    .filter(|&a| oracle.subobject_count(&classes[class].name, &classes[a].name) == 1)
                    .collect();
                Arg {
                    class,
                    is_const: rng.gen_bool(0.2),
                    via: *ups.choose(rng).unwrap(),
                    by_ref: rng.gen_bool(0.5),
                }
            })
            .collect();
        let dynamic: Vec<DispatchType> = args.iter().map(|a| dt(&classes, a.class, a.is_const)).collect();
        let statics: Vec<DispatchType> = args.iter().map(|a| dt(&classes, a.via, a.is_const)).collect();
        let (Verdict::Select(selected), Verdict::Select(_)) = (
            oracle.naive_select(&dispatch, &dynamic),
            oracle.naive_select(&dispatch, &statics),
        ) else {
            continue;
        };
        calls.push(Call { args, selected });
    }
    if calls.is_empty() {
        return None;
    }
    let source = render(&classes, &specs, &calls);
    Some(Program {
        source,
        classes,
        specs,
        calls,
    })
}

fn render(classes: &[ClassDef], specs: &[Vec<SpecParam>], calls: &[Call]) -> String {
    let mut s = render_classes(classes);
    for (k, ps) in specs.iter().enumerate() {
        let params: Vec<String> = ps
            .iter()
            .enumerate()
            .map(|(i, p)| quals(p.is_const, &classes[p.class].name, p.by_ref, &format!("x{i}")))
            .collect();
        s += &format!("int @m({}) {{\n", params.join(", "));
        for (i, p) in ps.iter().enumerate() {
            s += &format!("    print(x{i}.f{});\n", p.class);
        }
        for (i, p) in ps.iter().enumerate() {
            if writable(p) {
                s += &format!("    x{i}.f{} = {};\n", p.class, 5000 + i);
            }
        }
        s += &format!("    return {};\n}}\n", k + 1);
    }
    for (j, c) in calls.iter().enumerate() {
        let params: Vec<String> = c
            .args
            .iter()
            .enumerate()
            .map(|(i, a)| quals(a.is_const, &classes[a.via].name, a.by_ref, &format!("a{i}")))
            .collect();
        let names: Vec<String> = (0..c.args.len()).map(|i| format!("a{i}")).collect();
        s += &format!(
            "int w{j}({}) {{\n    return @m({});\n}}\n",
            params.join(", "),
            names.join(", ")
        );
    }
    s += "int main() {\n";
    for (j, c) in calls.iter().enumerate() {
        let objs: Vec<String> = (0..c.args.len()).map(|i| format!("o{j}_{i}")).collect();
        for (i, a) in c.args.iter().enumerate() {
            s += &format!(
                "    {}{} {};\n",
                if a.is_const { "const " } else { "" },
                classes[a.class].name,
                objs[i]
            );
        }
        for (i, a) in c.args.iter().enumerate() {
            s += &format!("    print({}.f{});\n", objs[i], a.class);
        }
        s += &format!("    print(w{j}({}));\n", objs.join(", "));
        for (i, _) in c.args.iter().enumerate() {
            s += &format!("    print({}.f{});\n", objs[i], specs[c.selected][i].class);
        }
    }
    s += "    return 0;\n}\n";
    s
}

/// Compiles, links and runs `p`; `Ok(None)` when the program is rejected.
pub fn check_program(p: &Program) -> Result<Option<RunStats>, String> {
    let compiled = compile_source("prog.ool", &p.source, &BTreeMap::new());
    let Some(module) = compiled.module else {
        return Ok(None);
    };
    let Ok(linked) = link(&[module]) else {
        return Ok(None);
    };
    let h: Hierarchy = linked.hierarchy();
    let oracle = Oracle::new(&p.classes);
    let out = runtime::run(
        &linked,
        &Options {
            sentinels: true,
            record: true,
            ..Options::default()
        },
    );
    let ctx = |msg: String| format!("{msg}\n{}", p.source);
    if let Err(f) = &out.result {
        return Err(ctx(format!("run faulted: {}", f.message)));
    }
    if out.final_secondary_depth != 0 {
        return Err(ctx(format!("secondary stack left at {}", out.final_secondary_depth)));
    }
    if let Some(c) = out.calls.iter().find(|c| c.secondary_before != c.secondary_after) {
        return Err(ctx(format!("unbalanced call {c:?}")));
    }
    if out.dispatches.len() != p.calls.len() {
        return Err(ctx(format!(
            "{} dispatches for {} calls",
            out.dispatches.len(),
            p.calls.len()
        )));
    }
    let mm = &linked.multimethods[0];
    let linked_specs: Vec<Vec<DispatchType>> = mm.specs.iter().map(|&g| linked.specs[g].dispatch_params()).collect();
    let mut stats = RunStats::default();
    for (rec, call) in out.dispatches.iter().zip(&p.calls) {
        let dynamic: Vec<DispatchType> = rec.dynamic.iter().map(|&id| h.dispatch_type(id)).collect();
        let want: Vec<DispatchType> = call.args.iter().map(|a| dt(&p.classes, a.class, a.is_const)).collect();
        if dynamic != want {
            return Err(ctx(format!("dispatched on {dynamic:?}, objects are {want:?}")));
        }
        let local = mm.specs.iter().position(|&g| g == rec.spec).unwrap();
        if oracle.naive_select(&linked_specs, &dynamic) != Verdict::Select(local) {
            return Err(ctx(format!(
                "runtime picked {} for {dynamic:?}",
                linked.specs[rec.spec].label()
            )));
        }
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut lines = text
        .lines()
        .map(|l| l.parse::<i64>().map_err(|e| format!("{l:?}: {e}")));
    let mut next = || lines.next().ok_or_else(|| "output ended early".to_string())?;
    for call in &p.calls {
        let spec = &p.specs[call.selected];
        let mut serials = Vec::new();
        for a in &call.args {
            let v = next()?;
            if v % 1000 != a.class as i64 * 10 {
                return Err(ctx(format!("object field reads {v}")));
            }
            serials.push(v / 1000);
        }
        for (i, sp) in spec.iter().enumerate() {
            let want = serials[i] * 1000 + sp.class as i64 * 10;
            let got = next()?;
            if got != want {
                return Err(ctx(format!("parameter {i} read {got}, expected sentinel {want}")));
            }
        }
        let r = next()?;
        if r != call.selected as i64 + 1 {
            return Err(ctx(format!("call returned {r}, expected {}", call.selected + 1)));
        }
        for (i, (a, sp)) in call.args.iter().zip(spec).enumerate() {
            let through = a.by_ref && sp.by_ref;
            let want = if writable(sp) && through {
                stats.by_ref_writes += 1;
                5000 + i as i64
            } else {
                serials[i] * 1000 + sp.class as i64 * 10
            };
            let got = next()?;
            if got != want {
                return Err(ctx(format!("argument {i} reads {got} after the call, expected {want}")));
            }
            stats.by_value_args += usize::from(!a.by_ref || !sp.by_ref);
            stats.subsumed_args += usize::from(a.via != a.class);
        }
        stats.calls += 1;
    }
    Ok(Some(stats))
}
