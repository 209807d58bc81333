//! Random class hierarchies with one multimethod, rendered as source.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use ool::hierarchy::{ClassDef, DispatchType, Hierarchy, ParentRef};
use ool::types::{ScalarType, ValueType};

#[derive(Debug, Clone)]
pub struct Fixture {
    pub classes: Vec<ClassDef>,
    pub specs: Vec<Vec<DispatchType>>,
    /// `None` is `int`.
    pub rets: Vec<Option<String>>,
    /// Module (0 or 1) each specialization is defined in.
    pub home: Vec<usize>,
}

pub fn class_name(i: usize) -> String {
    format!("K{i}")
}

/// A hierarchy that builds; mixed virtual and non-virtual inheritance of
/// one ancestor is redrawn.
pub fn random_hierarchy(rng: &mut impl Rng, max_classes: usize) -> Vec<ClassDef> {
    loop {
        let defs = draw_hierarchy(rng, max_classes);
        if Hierarchy::build(&defs).is_ok() {
            return defs;
        }
    }
}

fn draw_hierarchy(rng: &mut impl Rng, max_classes: usize) -> Vec<ClassDef> {
    let n = rng.gen_range(1..=max_classes);
    (0..n)
        .map(|i| {
            let mut pool: Vec<usize> = (0..i).collect();
            pool.shuffle(rng);
            let k = rng.gen_range(0..=pool.len().min(3));
            ClassDef {
                name: class_name(i),
                parents: pool[..k]
                    .iter()
                    .map(|&p| ParentRef {
                        name: class_name(p),
                        is_virtual: rng.gen_bool(0.35),
                    })
                    .collect(),
                fields: Vec::new(),
            }
        })
        .collect()
}

pub fn random_fixture(rng: &mut impl Rng) -> Fixture {
    let classes = random_hierarchy(rng, 8);
    let arity = rng.gen_range(1..=3);
    let count = rng.gen_range(1..=5);
    let class_returns = rng.gen_bool(0.25);
    let mut specs: Vec<Vec<DispatchType>> = Vec::new();
    let mut rets = Vec::new();
    for _ in 0..count {
        let params: Vec<DispatchType> = (0..arity)
            .map(|_| DispatchType {
                class: classes.choose(rng).unwrap().name.clone(),
                is_const: rng.gen_bool(0.3),
            })
            .collect();
        if specs.contains(&params) {
            continue;
        }
        specs.push(params);
        rets.push(class_returns.then(|| classes.choose(rng).unwrap().name.clone()));
    }
    let home = specs.iter().map(|_| rng.gen_range(0..2)).collect();
    Fixture {
        classes,
        specs,
        rets,
        home,
    }
}

pub fn ret_types(f: &Fixture) -> Vec<ValueType> {
    f.rets
        .iter()
        .map(|r| match r {
            None => ValueType::Scalar(ScalarType::Int),
            Some(c) => ValueType::Class(c.clone()),
        })
        .collect()
}

pub fn render_classes(classes: &[ClassDef]) -> String {
    let mut s = String::new();
    for (i, c) in classes.iter().enumerate() {
        s += &format!("class {}", c.name);
        if !c.parents.is_empty() {
            let ps: Vec<String> = c
                .parents
                .iter()
                .map(|p| format!("{}public {}", if p.is_virtual { "virtual " } else { "" }, p.name))
                .collect();
            s += &format!(": {}", ps.join(", "));
        }
        s += &format!(" {{ int f{i}; }};\n");
    }
    s
}

fn render_spec(params: &[DispatchType], ret: &Option<String>, body: bool) -> String {
    let ps: Vec<String> = params
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}{} x{i}", if t.is_const { "const " } else { "" }, t.class))
        .collect();
    let head = format!("{} @m({})", ret.as_deref().unwrap_or("int"), ps.join(", "));
    if !body {
        return format!("{head};\n");
    }
    match ret {
        None => format!("{head} {{ return 1; }}\n"),
        Some(c) => format!("{head} {{ {c} r; return r; }}\n"),
    }
}

/// Source of module 0 (with `main`) and module 1.
pub fn render_modules(f: &Fixture) -> [String; 2] {
    let classes = render_classes(&f.classes);
    [0, 1].map(|m| {
        let mut s = classes.clone();
        for (i, p) in f.specs.iter().enumerate() {
            if f.home[i] == m {
                s += &render_spec(p, &f.rets[i], true);
            }
        }
        if m == 0 {
            s += "int main() { return 0; }\n";
        }
        s
    })
}
