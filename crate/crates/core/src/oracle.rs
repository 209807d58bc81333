//! Brute-force reference implementations for tests.
//!
//! Subtyping is recomputed here by enumerating inheritance paths; nothing
//! in this module calls into the hierarchy layouts or the pre-linker.

use std::collections::{BTreeMap, BTreeSet};

use crate::hierarchy::{ClassDef, DispatchType};
use crate::types::ValueType;

pub const DEFAULT_TUPLE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Select(usize),
    Ambiguous(Vec<usize>),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeLimitExceeded {
    pub tuples: u128,
    pub budget: usize,
}

pub struct Oracle {
    classes: BTreeMap<String, ClassDef>,
}

/// Identity of a subobject reached along one path: paths through a
/// virtual edge are equal once they agree after the last such edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SubobjectId {
    Plain(Vec<String>),
    Shared(String, Vec<String>),
}

impl Oracle {
    pub fn new(defs: &[ClassDef]) -> Oracle {
        Oracle {
            classes: defs.iter().map(|d| (d.name.clone(), d.clone())).collect(),
        }
    }

    fn paths(&self, from: &str, to: &str, path: &mut Vec<(String, bool)>, out: &mut BTreeSet<SubobjectId>) {
        if from == to {
            let last_virtual = path.iter().rposition(|(_, v)| *v);
            let id = match last_virtual {
                None => SubobjectId::Plain(path.iter().map(|(c, _)| c.clone()).collect()),
                Some(i) => SubobjectId::Shared(
                    path[i].0.clone(),
                    path[i + 1..].iter().map(|(c, _)| c.clone()).collect(),
                ),
            };
            out.insert(id);
            return;
        }
        for p in &self.classes[from].parents {
            path.push((p.name.clone(), p.is_virtual));
            self.paths(&p.name, to, path, out);
            path.pop();
        }
    }

    /// Number of distinct `sup` subobjects in a `sub` object.
    pub fn subobject_count(&self, sub: &str, sup: &str) -> usize {
        let mut out = BTreeSet::new();
        self.paths(sub, sup, &mut Vec::new(), &mut out);
        out.len()
    }

    pub fn dispatch_count(&self, sub: &DispatchType, sup: &DispatchType) -> usize {
        if sub.is_const && !sup.is_const {
            0
        } else {
            self.subobject_count(&sub.class, &sup.class)
        }
    }

    fn unique(&self, sub: &DispatchType, sup: &DispatchType) -> bool {
        self.dispatch_count(sub, sup) == 1
    }

    /// Every class in const and non-const form, by class name.
    pub fn universe(&self) -> Vec<DispatchType> {
        self.classes
            .keys()
            .flat_map(|c| {
                [false, true].map(|is_const| DispatchType {
                    class: c.clone(),
                    is_const,
                })
            })
            .collect()
    }

    fn applicable(&self, spec: &[DispatchType], tuple: &[DispatchType]) -> bool {
        spec.iter().zip(tuple).all(|(p, t)| self.unique(t, p))
    }

    fn ambiguously_applicable(&self, spec: &[DispatchType], tuple: &[DispatchType]) -> bool {
        let counts: Vec<usize> = spec.iter().zip(tuple).map(|(p, t)| self.dispatch_count(t, p)).collect();
        counts.iter().all(|&c| c > 0) && counts.iter().any(|&c| c > 1)
    }

    fn below(&self, a: &[DispatchType], b: &[DispatchType]) -> bool {
        a.iter().zip(b).all(|(x, y)| self.unique(x, y))
    }

    pub fn naive_select(&self, specs: &[Vec<DispatchType>], tuple: &[DispatchType]) -> Verdict {
        let app: Vec<usize> = (0..specs.len())
            .filter(|&s| self.applicable(&specs[s], tuple))
            .collect();
        let best: Vec<usize> = app
            .iter()
            .copied()
            .filter(|&s| {
                !app.iter()
                    .any(|&o| o != s && self.below(&specs[o], &specs[s]) && !self.below(&specs[s], &specs[o]))
            })
            .collect();
        match best.len() {
            0 => Verdict::None,
            1 => Verdict::Select(best[0]),
            _ => Verdict::Ambiguous(best),
        }
    }

    /// Some specialization reaches `tuple` only through an ambiguous
    /// subtype and no uniquely applicable one is more specific than it.
    pub fn ambiguity_blocked(&self, specs: &[Vec<DispatchType>], tuple: &[DispatchType]) -> bool {
        let app: Vec<usize> = (0..specs.len())
            .filter(|&s| self.applicable(&specs[s], tuple))
            .collect();
        (0..specs.len()).any(|s| {
            self.ambiguously_applicable(&specs[s], tuple) && !app.iter().any(|&u| self.below(&specs[u], &specs[s]))
        })
    }

    /// The selected specialization's return type is not a unique subtype of
    /// the return type of some other applicable one.
    pub fn return_violation(&self, specs: &[Vec<DispatchType>], rets: &[ValueType], tuple: &[DispatchType]) -> bool {
        let Verdict::Select(w) = self.naive_select(specs, tuple) else {
            return false;
        };
        (0..specs.len()).filter(|&s| s != w).any(|s| {
            let reaches = self.applicable(&specs[s], tuple) || self.ambiguously_applicable(&specs[s], tuple);
            reaches
                && match (&rets[w], &rets[s]) {
                    (ValueType::Class(a), ValueType::Class(b)) => self.subobject_count(a, b) != 1,
                    (a, b) => a != b,
                }
        })
    }

    /// Every tuple of the dispatch universe with its verdict, in
    /// lexicographic order of `universe()` positions.
    pub fn full_table(
        &self,
        specs: &[Vec<DispatchType>],
        arity: usize,
        budget: usize,
    ) -> Result<Vec<(Vec<DispatchType>, Verdict)>, SizeLimitExceeded> {
        let u = self.universe();
        let tuples = (u.len() as u128).pow(arity as u32);
        if tuples > budget as u128 {
            return Err(SizeLimitExceeded { tuples, budget });
        }
        let mut out = Vec::with_capacity(tuples as usize);
        let mut idx = vec![0usize; arity];
        loop {
            let tuple: Vec<DispatchType> = idx.iter().map(|&i| u[i].clone()).collect();
            let v = self.naive_select(specs, &tuple);
            out.push((tuple, v));
            let mut k = arity;
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < u.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}
