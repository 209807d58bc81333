//! Class graph, object layout, the (possibly ambiguous) subtype relation and
//! per-subobject runtime tables.
//!
//! Layout model: every scalar field is one slot. The non-virtual part of a
//! class is its non-virtual parents' non-virtual parts in declaration order,
//! followed by its own fields. A complete object is its non-virtual part
//! followed by the non-virtual part of every virtual base, each base stored
//! once, in parents-first topological order with ties broken by name.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::ScalarType;

/// Structural description of one class; also the form stored in object modules.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassDef {
    pub name: String,
    pub parents: Vec<ParentRef>,
    pub fields: Vec<(String, ScalarType)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParentRef {
    pub name: String,
    pub is_virtual: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    DuplicateClass(String),
    UnknownParent {
        class: String,
        parent: String,
    },
    DuplicateParent {
        class: String,
        parent: String,
    },
    /// Classes on a cycle, sorted.
    CyclicInheritance(Vec<String>),
    MixedVirtuality {
        class: String,
        ancestor: String,
    },
}

impl HierarchyError {
    /// The class the error should be reported against.
    pub fn class(&self) -> &str {
        match self {
            HierarchyError::DuplicateClass(c) => c,
            HierarchyError::UnknownParent { class, .. }
            | HierarchyError::DuplicateParent { class, .. }
            | HierarchyError::MixedVirtuality { class, .. } => class,
            HierarchyError::CyclicInheritance(cs) => &cs[0],
        }
    }
}

impl fmt::Display for HierarchyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HierarchyError::DuplicateClass(c) => write!(f, "class `{c}` is defined more than once"),
            HierarchyError::UnknownParent { class, parent } => {
                write!(f, "class `{class}` inherits from unknown class `{parent}`")
            }
            HierarchyError::DuplicateParent { class, parent } => {
                write!(f, "class `{class}` names parent `{parent}` more than once")
            }
            HierarchyError::CyclicInheritance(cs) => {
                write!(f, "cyclic inheritance among {}", cs.join(", "))
            }
            HierarchyError::MixedVirtuality { class, ancestor } => write!(
                f,
                "class `{class}` inherits `{ancestor}` both virtually and non-virtually"
            ),
        }
    }
}

impl std::error::Error for HierarchyError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subobject {
    pub class: String,
    /// Classes along the parent edges from the complete object down to this subobject.
    pub path: Vec<String>,
    /// Start slot within the complete object.
    pub offset: usize,
    /// This subobject is a shared virtual base, or lies inside one.
    pub in_virtual_base: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub owner: String,
    pub field: String,
    pub ty: ScalarType,
    /// Start of the owning subobject.
    pub subobject_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub size: usize,
    /// The complete object itself comes first (empty path, offset 0).
    pub subobjects: Vec<Subobject>,
    pub slots: Vec<Slot>,
    /// Own fields relative to the start of any subobject of this class.
    pub own_field_offsets: Vec<(String, usize)>,
    /// Virtual bases with their start slot, in placement order.
    pub virtual_bases: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub def: ClassDef,
    pub id: u32,
    /// Slots in this class's non-virtual part.
    pub nv_size: usize,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubtypeAnswer {
    No,
    Unique(usize),
    /// Sorted offsets, at least two.
    Ambiguous(Vec<usize>),
}

impl SubtypeAnswer {
    pub fn is_unique(&self) -> bool {
        matches!(self, SubtypeAnswer::Unique(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, SubtypeAnswer::No)
    }
}

/// Runtime metadata for one subobject of one complete class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RtTable {
    /// Id of the complete (dynamic) class.
    pub type_id: u32,
    /// Slot count of the complete object.
    pub size: usize,
    /// Class of the subobject this table describes.
    pub subobject_class: u32,
    /// Start of the subobject within the complete object; 0 for the complete object.
    pub subobject_offset: usize,
    /// Unambiguous proper ancestors of the subobject class, with their start
    /// relative to the subobject start. Sorted by (offset, id).
    pub ancestors: Vec<(u32, i64)>,
}

impl RtTable {
    pub fn ancestor_offset(&self, id: u32) -> Option<i64> {
        self.ancestors.iter().find(|(a, _)| *a == id).map(|(_, o)| *o)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldLookup {
    /// `slot` is relative to the start of the `owner` subobject.
    Found {
        owner: String,
        slot: usize,
        ty: ScalarType,
    },
    Ambiguous(Vec<String>),
    Missing,
}

/// A class in its const or non-const variant, as seen by dispatch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DispatchType {
    pub class: String,
    pub is_const: bool,
}

impl fmt::Display for DispatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_const {
            write!(f, "const {}", self.class)
        } else {
            f.write_str(&self.class)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchUniverse {
    /// Indexed by dispatch id.
    pub types: Vec<DispatchType>,
    /// Direct dispatch-subtype edges (sub, super) by dispatch id, sorted.
    pub edges: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    classes: BTreeMap<String, ClassInfo>,
    names: Vec<String>,
    topo: Vec<String>,
}

/// Dispatch id of a class id: the const variant follows the plain one.
pub fn dispatch_id(class_id: u32, is_const: bool) -> u32 {
    class_id * 2 + is_const as u32
}

pub fn split_dispatch_id(id: u32) -> (u32, bool) {
    (id / 2, id % 2 == 1)
}

impl Hierarchy {
    pub fn build(defs: &[ClassDef]) -> Result<Hierarchy, Vec<HierarchyError>> {
        let mut errors = Vec::new();
        let mut by_name: BTreeMap<String, ClassDef> = BTreeMap::new();
        for d in defs {
            if by_name.insert(d.name.clone(), d.clone()).is_some() {
                errors.push(HierarchyError::DuplicateClass(d.name.clone()));
            }
        }
        for d in by_name.values() {
            let mut seen = BTreeSet::new();
            for p in &d.parents {
                if !by_name.contains_key(&p.name) {
                    errors.push(HierarchyError::UnknownParent {
                        class: d.name.clone(),
                        parent: p.name.clone(),
                    });
                }
                if !seen.insert(&p.name) {
                    errors.push(HierarchyError::DuplicateParent {
                        class: d.name.clone(),
                        parent: p.name.clone(),
                    });
                }
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let topo = match topological_order(&by_name) {
            Ok(t) => t,
            Err(cycle) => return Err(vec![HierarchyError::CyclicInheritance(cycle)]),
        };

        let names: Vec<String> = by_name.keys().cloned().collect();
        let mut nv_sizes: BTreeMap<String, usize> = BTreeMap::new();
        for n in &topo {
            let d = &by_name[n];
            let inherited: usize = d
                .parents
                .iter()
                .filter(|p| !p.is_virtual)
                .map(|p| nv_sizes[&p.name])
                .sum();
            nv_sizes.insert(n.clone(), inherited + d.fields.len());
        }
        let rank: BTreeMap<&str, usize> = topo.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

        let mut classes = BTreeMap::new();
        for (id, n) in names.iter().enumerate() {
            let builder = LayoutBuilder {
                defs: &by_name,
                nv_sizes: &nv_sizes,
            };
            let layout = builder.complete(n, &rank);
            if let Some(anc) = mixed_virtuality(&layout) {
                errors.push(HierarchyError::MixedVirtuality {
                    class: n.clone(),
                    ancestor: anc,
                });
            }
            classes.insert(
                n.clone(),
                ClassInfo {
                    def: by_name[n].clone(),
                    id: id as u32,
                    nv_size: nv_sizes[n],
                    layout,
                },
            );
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(Hierarchy { classes, names, topo })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassInfo> {
        self.classes.get(name)
    }

    fn info(&self, name: &str) -> &ClassInfo {
        self.classes
            .get(name)
            .unwrap_or_else(|| panic!("unknown class `{name}`"))
    }

    /// Class names in id order (sorted by name).
    pub fn class_names(&self) -> &[String] {
        &self.names
    }

    /// Parents before children; ties by name.
    pub fn topological_order(&self) -> &[String] {
        &self.topo
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn class_id(&self, name: &str) -> Option<u32> {
        self.classes.get(name).map(|c| c.id)
    }

    pub fn class_name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn defs(&self) -> Vec<ClassDef> {
        self.classes.values().map(|c| c.def.clone()).collect()
    }

    pub fn layout(&self, name: &str) -> &Layout {
        &self.info(name).layout
    }

    pub fn size(&self, name: &str) -> usize {
        self.info(name).layout.size
    }

    /// Counts the `sup` subobjects inside a complete `sub` object.
    pub fn subtype(&self, sub: &str, sup: &str) -> SubtypeAnswer {
        let offsets: Vec<usize> = self
            .info(sub)
            .layout
            .subobjects
            .iter()
            .filter(|s| s.class == sup)
            .map(|s| s.offset)
            .collect();
        answer(offsets)
    }

    /// Finds a field by name in `class` or its ancestors.
    pub fn lookup_field(&self, class: &str, field: &str) -> FieldLookup {
        let info = self.info(class);
        if let Some((_, off)) = info.layout.own_field_offsets.iter().find(|(n, _)| n == field) {
            let ty = own_field_type(&info.def, field);
            return FieldLookup::Found {
                owner: class.to_string(),
                slot: *off,
                ty,
            };
        }
        // distinct subobjects of a complete `class` that declare the field
        let mut owners: Vec<(&str, usize)> = Vec::new();
        for s in &info.layout.subobjects {
            let def = &self.info(&s.class).def;
            if def.fields.iter().any(|(n, _)| n == field) {
                owners.push((&s.class, s.offset));
            }
        }
        match owners.as_slice() {
            [] => FieldLookup::Missing,
            [(owner, _)] => {
                let oi = self.info(owner);
                let slot = oi
                    .layout
                    .own_field_offsets
                    .iter()
                    .find(|(n, _)| n == field)
                    .map(|(_, o)| *o)
                    .expect("field present");
                FieldLookup::Found {
                    owner: owner.to_string(),
                    slot,
                    ty: own_field_type(&oi.def, field),
                }
            }
            many => {
                let mut names: Vec<String> = many.iter().map(|(o, _)| o.to_string()).collect();
                names.sort();
                names.dedup();
                FieldLookup::Ambiguous(names)
            }
        }
    }

    /// Every proper ancestor class reachable from `start`, sorted.
    pub fn ancestors(&self, start: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<&str> = vec![start];
        while let Some(c) = stack.pop() {
            for p in &self.info(c).def.parents {
                if out.insert(p.name.clone()) {
                    stack.push(&p.name);
                }
            }
        }
        out
    }

    /// Subobjects reachable from the `class` subobject at `offset` inside a
    /// complete `complete` object, as (class, start) pairs including itself.
    fn reachable(&self, complete: &str, class: &str, offset: usize) -> Vec<(String, usize)> {
        let vbases = &self.info(complete).layout.virtual_bases;
        let mut out: BTreeSet<(String, usize)> = BTreeSet::new();
        let mut stack = vec![(class.to_string(), offset)];
        while let Some((c, o)) = stack.pop() {
            if !out.insert((c.clone(), o)) {
                continue;
            }
            let def = &self.info(&c).def;
            let mut cursor = o;
            for p in &def.parents {
                if p.is_virtual {
                    let vo = vbases
                        .iter()
                        .find(|(n, _)| *n == p.name)
                        .map(|(_, vo)| *vo)
                        .expect("virtual base placed");
                    stack.push((p.name.clone(), vo));
                } else {
                    stack.push((p.name.clone(), cursor));
                    cursor += self.info(&p.name).nv_size;
                }
            }
        }
        out.into_iter().collect()
    }

    /// The runtime table of the `class` subobject starting at `offset` in a
    /// complete `complete` object, if such a subobject exists.
    pub fn rttable(&self, complete: &str, class: &str, offset: usize) -> Option<RtTable> {
        let info = self.info(complete);
        if !info
            .layout
            .subobjects
            .iter()
            .any(|s| s.class == class && s.offset == offset)
        {
            return None;
        }
        let reach = self.reachable(complete, class, offset);
        let mut by_class: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for (c, o) in &reach {
            by_class.entry(c.as_str()).or_default().insert(*o);
        }
        let mut ancestors: Vec<(u32, i64)> = by_class
            .iter()
            .filter(|(c, offs)| **c != class && offs.len() == 1)
            .map(|(c, offs)| {
                let o = *offs.iter().next().expect("one offset");
                (self.info(c).id, o as i64 - offset as i64)
            })
            .collect();
        ancestors.sort_by_key(|&(id, off)| (off, id));
        Some(RtTable {
            type_id: info.id,
            size: info.layout.size,
            subobject_class: self.info(class).id,
            subobject_offset: offset,
            ancestors,
        })
    }

    /// One table per distinct subobject of every class, sorted by
    /// (type id, subobject offset, subobject class).
    pub fn all_rttables(&self) -> Vec<RtTable> {
        let mut out = Vec::new();
        for name in &self.names {
            let mut subs: Vec<(usize, &str)> = self
                .info(name)
                .layout
                .subobjects
                .iter()
                .map(|s| (s.offset, s.class.as_str()))
                .collect();
            subs.sort_by_key(|&(o, c)| (o, self.info(c).id));
            subs.dedup();
            for (o, c) in subs {
                out.push(self.rttable(name, c, o).expect("subobject exists"));
            }
        }
        out
    }

    pub fn dispatch_type(&self, id: u32) -> DispatchType {
        let (cid, is_const) = split_dispatch_id(id);
        DispatchType {
            class: self.class_name(cid).to_string(),
            is_const,
        }
    }

    pub fn dispatch_id_of(&self, t: &DispatchType) -> Option<u32> {
        self.class_id(&t.class).map(|c| dispatch_id(c, t.is_const))
    }

    /// Subtyping between dispatch types: a plain class is below its const
    /// variant, const never flows to non-const, otherwise the class relation.
    pub fn dispatch_subtype(&self, sub: &DispatchType, sup: &DispatchType) -> SubtypeAnswer {
        if sub.is_const && !sup.is_const {
            return SubtypeAnswer::No;
        }
        self.subtype(&sub.class, &sup.class)
    }

    pub fn dispatch_universe(&self) -> DispatchUniverse {
        let mut types = Vec::new();
        let mut edges = Vec::new();
        for name in &self.names {
            let id = self.info(name).id;
            types.push(DispatchType {
                class: name.clone(),
                is_const: false,
            });
            types.push(DispatchType {
                class: name.clone(),
                is_const: true,
            });
            edges.push((dispatch_id(id, false), dispatch_id(id, true)));
            for p in &self.info(name).def.parents {
                if self.subtype(name, &p.name).is_unique() {
                    let pid = self.info(&p.name).id;
                    edges.push((dispatch_id(id, false), dispatch_id(pid, false)));
                    edges.push((dispatch_id(id, true), dispatch_id(pid, true)));
                }
            }
        }
        edges.sort();
        edges.dedup();
        DispatchUniverse { types, edges }
    }
}

/// One entry per distinct subobject. Subobjects of empty classes can share
/// an offset and still count separately.
fn answer(mut offsets: Vec<usize>) -> SubtypeAnswer {
    offsets.sort();
    match offsets.len() {
        0 => SubtypeAnswer::No,
        1 => SubtypeAnswer::Unique(offsets[0]),
        _ => SubtypeAnswer::Ambiguous(offsets),
    }
}

fn own_field_type(def: &ClassDef, field: &str) -> ScalarType {
    def.fields
        .iter()
        .find(|(n, _)| n == field)
        .map(|(_, t)| *t)
        .expect("field present")
}

/// Kahn's algorithm over parent edges with name-ordered tie breaking.
fn topological_order(defs: &BTreeMap<String, ClassDef>) -> Result<Vec<String>, Vec<String>> {
    let mut pending: BTreeMap<&str, usize> = defs.values().map(|d| (d.name.as_str(), d.parents.len())).collect();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for d in defs.values() {
        for p in &d.parents {
            children.entry(p.name.as_str()).or_default().push(&d.name);
        }
    }
    let mut ready: BTreeSet<&str> = pending.iter().filter(|(_, n)| **n == 0).map(|(c, _)| *c).collect();
    let mut order = Vec::new();
    while let Some(c) = ready.pop_first() {
        order.push(c.to_string());
        pending.remove(c);
        for &ch in children.get(c).map(Vec::as_slice).unwrap_or(&[]) {
            let n = pending.get_mut(ch).expect("pending child");
            *n -= 1;
            if *n == 0 {
                ready.insert(ch);
            }
        }
    }
    if pending.is_empty() {
        Ok(order)
    } else {
        Err(pending.keys().map(|s| s.to_string()).collect())
    }
}

struct LayoutBuilder<'a> {
    defs: &'a BTreeMap<String, ClassDef>,
    nv_sizes: &'a BTreeMap<String, usize>,
}

impl LayoutBuilder<'_> {
    fn complete(&self, name: &str, rank: &BTreeMap<&str, usize>) -> Layout {
        let mut vbases: BTreeSet<&str> = BTreeSet::new();
        self.collect_virtual_bases(name, &mut vbases);
        let mut ordered: Vec<&str> = vbases.into_iter().collect();
        ordered.sort_by_key(|n| (rank[n], *n));

        let mut subobjects = Vec::new();
        self.nv_tree(name, 0, Vec::new(), false, &mut subobjects);
        let mut cursor = self.nv_sizes[name];
        let mut virtual_bases = Vec::new();
        for v in ordered {
            virtual_bases.push((v.to_string(), cursor));
            self.nv_tree(v, cursor, vec![v.to_string()], true, &mut subobjects);
            cursor += self.nv_sizes[v];
        }

        let mut slots = Vec::new();
        for s in &subobjects {
            let base = s.offset + self.inherited_nv(&s.class);
            for (i, (f, ty)) in self.defs[&s.class].fields.iter().enumerate() {
                slots.push((
                    base + i,
                    Slot {
                        owner: s.class.clone(),
                        field: f.clone(),
                        ty: *ty,
                        subobject_offset: s.offset,
                    },
                ));
            }
        }
        slots.sort_by_key(|(i, _)| *i);
        let base = self.inherited_nv(name);
        let own_field_offsets = self.defs[name]
            .fields
            .iter()
            .enumerate()
            .map(|(i, (f, _))| (f.clone(), base + i))
            .collect();
        Layout {
            size: cursor,
            subobjects,
            slots: slots.into_iter().map(|(_, s)| s).collect(),
            own_field_offsets,
            virtual_bases,
        }
    }

    /// Slots taken by non-virtual parents before the class's own fields.
    fn inherited_nv(&self, name: &str) -> usize {
        self.defs[name]
            .parents
            .iter()
            .filter(|p| !p.is_virtual)
            .map(|p| self.nv_sizes[&p.name])
            .sum()
    }

    fn collect_virtual_bases<'b>(&'b self, name: &str, out: &mut BTreeSet<&'b str>) {
        for p in &self.defs[name].parents {
            if p.is_virtual {
                out.insert(&p.name);
            }
            self.collect_virtual_bases(&p.name, out);
        }
    }

    fn nv_tree(&self, name: &str, offset: usize, path: Vec<String>, in_virtual_base: bool, out: &mut Vec<Subobject>) {
        out.push(Subobject {
            class: name.to_string(),
            path: path.clone(),
            offset,
            in_virtual_base,
        });
        let mut cursor = offset;
        for p in &self.defs[name].parents {
            if p.is_virtual {
                continue;
            }
            let mut child = path.clone();
            child.push(p.name.clone());
            self.nv_tree(&p.name, cursor, child, in_virtual_base, out);
            cursor += self.nv_sizes[&p.name];
        }
    }
}

/// An ancestor that is both a virtual base and a non-virtual subobject.
fn mixed_virtuality(layout: &Layout) -> Option<String> {
    let virtuals: BTreeSet<&str> = layout.virtual_bases.iter().map(|(n, _)| n.as_str()).collect();
    let mut nv_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &layout.subobjects {
        *nv_counts.entry(s.class.as_str()).or_default() += 1;
    }
    // each virtual base contributes exactly one subobject of its own class
    virtuals
        .iter()
        .find(|v| nv_counts.get(*v).copied().unwrap_or(0) > 1)
        .map(|v| v.to_string())
}

impl Hierarchy {
    /// Layout table of `name` for `dump-layout`.
    pub fn dump_layout(&self, name: &str) -> Option<String> {
        let info = self.class(name)?;
        let l = &info.layout;
        let mut out = format!(
            "class {name} (id {}) size {} nv_size {}\n",
            info.id, l.size, info.nv_size
        );
        out.push_str("subobjects:\n");
        for so in &l.subobjects {
            let mut path = vec![name.to_string()];
            path.extend(so.path.iter().cloned());
            let shared = if so.in_virtual_base { "  (virtual)" } else { "" };
            out.push_str(&format!(
                "  @{:<3} {:<10} {}{shared}\n",
                so.offset,
                so.class,
                path.join(" > ")
            ));
        }
        out.push_str("slots:\n");
        for (i, sl) in l.slots.iter().enumerate() {
            out.push_str(&format!(
                "  {i:<4} {:<6} {}::{}  in @{}\n",
                sl.ty.to_string(),
                sl.owner,
                sl.field,
                sl.subobject_offset
            ));
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(name: &str, parents: &[(&str, bool)], fields: &[&str]) -> ClassDef {
        ClassDef {
            name: name.into(),
            parents: parents
                .iter()
                .map(|(p, v)| ParentRef {
                    name: p.to_string(),
                    is_virtual: *v,
                })
                .collect(),
            fields: fields.iter().map(|f| (f.to_string(), ScalarType::Int)).collect(),
        }
    }

    fn virtual_diamond() -> Hierarchy {
        Hierarchy::build(&[
            class("A", &[], &["a"]),
            class("B", &[("A", true)], &["b"]),
            class("C", &[("A", true)], &["c"]),
            class("D", &[("B", false), ("C", false)], &["d"]),
        ])
        .unwrap()
    }

    fn plain_diamond() -> Hierarchy {
        Hierarchy::build(&[
            class("A", &[], &["a"]),
            class("B", &[("A", false)], &["b"]),
            class("C", &[("A", false)], &["c"]),
            class("D", &[("B", false), ("C", false)], &["d"]),
        ])
        .unwrap()
    }

    fn slot_names(h: &Hierarchy, c: &str) -> Vec<String> {
        h.layout(c).slots.iter().map(|s| s.field.clone()).collect()
    }

    #[test]
    fn virtual_base_goes_last() {
        let h = virtual_diamond();
        assert_eq!(slot_names(&h, "D"), ["b", "c", "d", "a"]);
        assert_eq!(h.size("D"), 4);
        assert_eq!(h.subtype("D", "A"), SubtypeAnswer::Unique(3));
    }

    #[test]
    fn plain_diamond_has_two_a_subobjects() {
        let h = plain_diamond();
        assert_eq!(slot_names(&h, "D"), ["a", "b", "a", "c", "d"]);
        assert_eq!(h.subtype("D", "A"), SubtypeAnswer::Ambiguous(vec![0, 2]));
        assert_eq!(h.subtype("D", "C"), SubtypeAnswer::Unique(2));
    }

    #[test]
    fn base_case_and_reflexivity() {
        let h = Hierarchy::build(&[class("P", &[], &["x", "y"])]).unwrap();
        assert_eq!(h.layout("P").own_field_offsets, [("x".into(), 0), ("y".into(), 1)]);
        assert_eq!(h.subtype("P", "P"), SubtypeAnswer::Unique(0));
        assert!(h.rttable("P", "P", 0).unwrap().ancestors.is_empty());
    }

    #[test]
    fn rttables_list_unambiguous_ancestors() {
        let h = virtual_diamond();
        let t = h.rttable("D", "D", 0).unwrap();
        let id = |n: &str| h.class_id(n).unwrap();
        assert_eq!(t.ancestors, [(id("B"), 0), (id("C"), 1), (id("A"), 3)]);
        assert_eq!(t.size, 4);
        // seen from the C subobject, the shared A is two slots further on
        let c = h.rttable("D", "C", 1).unwrap();
        assert_eq!(c.ancestors, [(id("A"), 2)]);
        assert_eq!(c.type_id, id("D"));

        let h = plain_diamond();
        let t = h.rttable("D", "D", 0).unwrap();
        assert_eq!(t.ancestors, [(id("B"), 0), (id("C"), 2)]);
    }

    #[test]
    fn const_dispatch_universe() {
        let h = Hierarchy::build(&[class("A", &[], &[]), class("B", &[("A", false)], &[])]).unwrap();
        let u = h.dispatch_universe();
        assert_eq!(u.types.len(), 4);
        assert_eq!(u.edges.len(), 4);
        let b = DispatchType {
            class: "B".into(),
            is_const: true,
        };
        let a = DispatchType {
            class: "A".into(),
            is_const: false,
        };
        assert!(h.dispatch_subtype(&b, &a).is_no());
    }

    #[test]
    fn structural_errors() {
        let e = Hierarchy::build(&[class("A", &[("B", false)], &[]), class("B", &[("A", false)], &[])]).unwrap_err();
        assert!(matches!(e[0], HierarchyError::CyclicInheritance(_)));
        let e = Hierarchy::build(&[class("A", &[("Z", false)], &[])]).unwrap_err();
        assert!(matches!(e[0], HierarchyError::UnknownParent { .. }));
        let e = Hierarchy::build(&[
            class("A", &[], &[]),
            class("B", &[("A", true)], &[]),
            class("C", &[("A", false)], &[]),
            class("D", &[("B", false), ("C", false)], &[]),
        ])
        .unwrap_err();
        assert_eq!(
            e,
            [HierarchyError::MixedVirtuality {
                class: "D".into(),
                ancestor: "A".into()
            }]
        );
    }

    #[test]
    fn ambiguous_field_lookup() {
        let h = plain_diamond();
        assert_eq!(h.lookup_field("D", "a"), FieldLookup::Ambiguous(vec!["A".into()]));
        assert_eq!(
            h.lookup_field("D", "c"),
            FieldLookup::Found {
                owner: "C".into(),
                slot: 1,
                ty: ScalarType::Int
            }
        );
        let h = virtual_diamond();
        assert!(matches!(h.lookup_field("D", "a"), FieldLookup::Found { slot: 0, .. }));
    }
}
