//! Link-time merge, consistency checks and dispatch table construction.

mod dump;
mod merge;
mod poles;
mod tables;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::hierarchy::{ClassDef, Hierarchy, RtTable};
use crate::objmod::{self, FormatError, ObjectModule};
use crate::typecheck::ir::{Func, FuncKey, MmKey, Spec};

pub use dump::dump_tables;
pub use merge::{merge, Merged};
pub use poles::{compute_poles, PolePosition};
pub use tables::{build_dispatch, Entry};

/// Structures used to select among the specializations of one multimethod.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchStructures {
    /// One per dispatched parameter position.
    pub positions: Vec<PolePosition>,
    /// Row-major over the pole counts of the positions.
    pub matrix: Vec<Entry>,
}

impl DispatchStructures {
    pub fn extents(&self) -> Vec<usize> {
        self.positions.iter().map(|p| p.poles.len()).collect()
    }

    /// Index into `matrix` of a tuple of pole indices.
    pub fn index(&self, poles: &[usize]) -> usize {
        let mut idx = 0;
        for (p, pos) in poles.iter().zip(&self.positions) {
            idx = idx * pos.poles.len() + p;
        }
        idx
    }

    /// Pole tuple at a matrix index.
    pub fn tuple(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.positions.len()];
        for (i, pos) in self.positions.iter().enumerate().rev() {
            out[i] = idx % pos.poles.len();
            idx /= pos.poles.len();
        }
        out
    }

    /// Compressed lookup on exact dispatch type ids.
    pub fn lookup(&self, ids: &[u32]) -> Option<&Entry> {
        let mut poles = Vec::with_capacity(ids.len());
        for (id, pos) in ids.iter().zip(&self.positions) {
            poles.push(pos.pole_of[*id as usize]?);
        }
        Some(&self.matrix[self.index(&poles)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multimethod {
    pub key: MmKey,
    /// Global specialization ids, ordered by dispatch type ids.
    pub specs: Vec<usize>,
    pub tables: DispatchStructures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedProgram {
    /// Sorted by name; the position is the class id.
    pub classes: Vec<ClassDef>,
    pub specs: Vec<Spec>,
    pub funcs: Vec<Func>,
    pub multimethods: Vec<Multimethod>,
    pub rttables: Vec<RtTable>,
    /// Index of `main` in `funcs`.
    pub main: usize,
}

impl LinkedProgram {
    pub fn hierarchy(&self) -> Hierarchy {
        Hierarchy::build(&self.classes).expect("linked classes form a valid hierarchy")
    }

    pub fn multimethod(&self, key: &MmKey) -> Option<usize> {
        self.multimethods.binary_search_by(|m| m.key.cmp(key)).ok()
    }

    pub fn func(&self, key: &FuncKey) -> Option<usize> {
        self.funcs.binary_search_by(|f| f.key.cmp(key)).ok()
    }
}

pub fn serialize(p: &LinkedProgram) -> Vec<u8> {
    objmod::encode(objmod::IMAGE_MAGIC, p)
}

pub fn deserialize(bytes: &[u8]) -> Result<LinkedProgram, FormatError> {
    objmod::decode(objmod::IMAGE_MAGIC, bytes)
}

/// Merges the modules and builds every dispatch structure. Any diagnostic
/// is an error and aborts the link.
pub fn link(modules: &[ObjectModule]) -> Result<LinkedProgram, Vec<Diagnostic>> {
    let merged = merge(modules)?;
    let mut diags = Vec::new();
    let mut multimethods = Vec::new();
    for (key, ids) in &merged.by_key {
        let specs: Vec<&Spec> = ids.iter().map(|&i| &merged.specs[i]).collect();
        match build_dispatch(&merged.hierarchy, key, &specs) {
            Ok(tables) => multimethods.push(Multimethod {
                key: key.clone(),
                specs: ids.clone(),
                tables,
            }),
            Err(d) => diags.extend(d),
        }
    }
    if !diags.is_empty() {
        crate::diag::sort_diagnostics(&mut diags);
        return Err(diags);
    }
    let main = merged
        .funcs
        .binary_search_by(|f| f.key.cmp(&FuncKey::main()))
        .expect("merge checked main");
    Ok(LinkedProgram {
        classes: merged.hierarchy.defs(),
        rttables: merged.hierarchy.all_rttables(),
        specs: merged.specs,
        funcs: merged.funcs,
        multimethods,
        main,
    })
}
