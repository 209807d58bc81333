//! Interpreter for linked programs.
//!
//! Objects live in frame-owned storage (class locals), on the secondary
//! stack (by-value copies made by a callee) or on the heap (returned
//! objects). Everything else holds a [`FatRef`] into one of them, so the
//! primary stack only ever contains references.

use std::collections::HashMap;
use std::fmt;

use crate::hierarchy::{dispatch_id, Hierarchy};
use crate::prelink::{Entry, LinkedProgram};
use crate::typecheck::ir::{BinOp, Body, Expr, ExprKind, Lit, LocalVar, Param, Stmt, UnOp};
use crate::types::{PassMode, ScalarType, ValueType};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Int(i64),
    Bool(bool),
    Float(f64),
}

impl Scalar {
    fn zero(t: ScalarType) -> Scalar {
        match t {
            ScalarType::Int => Scalar::Int(0),
            ScalarType::Bool => Scalar::Bool(false),
            ScalarType::Float => Scalar::Float(0.0),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Bool(v) => write!(f, "{v}"),
            Scalar::Float(v) if v.is_finite() && v.fract() == 0.0 => write!(f, "{v:.1}"),
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectStorage {
    pub dynamic_type: u32,
    pub slots: Vec<Scalar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Frame { frame: usize, local: usize },
    Secondary(usize),
    Heap(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FatRef {
    pub storage: Storage,
    /// Start slot of the referenced subobject within the complete object.
    pub offset: usize,
    pub static_type: u32,
    pub is_const: bool,
}

#[derive(Debug, Clone, Copy)]
enum Value {
    Void,
    Scalar(Scalar),
    Obj(FatRef),
}

impl Value {
    fn scalar(self) -> Scalar {
        match self {
            Value::Scalar(s) => s,
            other => panic!("typed program produced {other:?} where a scalar was expected"),
        }
    }

    fn obj(self) -> FatRef {
        match self {
            Value::Obj(r) => r,
            other => panic!("typed program produced {other:?} where an object was expected"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub message: String,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn fault<T>(message: impl Into<String>) -> Result<T, Fault> {
    Err(Fault {
        message: message.into(),
    })
}

#[derive(Debug, Clone)]
pub struct Options {
    pub trace_dispatch: bool,
    /// Fill int and float slots of new objects with
    /// `serial * 1000 + owner class id * 10 + field index` instead of zero.
    pub sentinels: bool,
    /// Keep per-call and per-dispatch records.
    pub record: bool,
    pub max_depth: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            trace_dispatch: false,
            sentinels: false,
            record: false,
            max_depth: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub callee: String,
    pub secondary_before: usize,
    pub secondary_after: usize,
    pub faulted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchRecord {
    /// Index into `LinkedProgram::multimethods`.
    pub multimethod: usize,
    pub dynamic: Vec<u32>,
    /// Global specialization id.
    pub spec: usize,
    /// Adjusted offsets of the dispatched arguments.
    pub offsets: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: Result<i64, Fault>,
    pub stdout: Vec<u8>,
    pub trace: Vec<String>,
    pub calls: Vec<CallRecord>,
    pub dispatches: Vec<DispatchRecord>,
    pub final_secondary_depth: usize,
}

pub fn run(p: &LinkedProgram, opts: &Options) -> Outcome {
    let mut m = Machine::new(p, opts.clone());
    let main = &p.funcs[p.main];
    let result = m
        .call(
            "main",
            main.body.as_ref().expect("linked main has a body"),
            &main.params,
            &main.ret,
            Vec::new(),
        )
        .map(|v| match v {
            Value::Scalar(Scalar::Int(code)) => code,
            _ => 0,
        });
    Outcome {
        result,
        stdout: m.out,
        trace: m.trace,
        calls: m.calls,
        dispatches: m.dispatches,
        final_secondary_depth: m.secondary.len(),
    }
}

/// A zero-initialized object of class `class_id`.
pub fn instantiate(p: &LinkedProgram, class_id: u32) -> ObjectStorage {
    let h = p.hierarchy();
    let name = h.class_name(class_id).to_string();
    ObjectStorage {
        dynamic_type: class_id,
        slots: h.layout(&name).slots.iter().map(|s| Scalar::zero(s.ty)).collect(),
    }
}

struct SlotInfo {
    ty: ScalarType,
    owner: u32,
    field: usize,
}

struct Frame {
    cells: Vec<Value>,
    objects: Vec<Option<ObjectStorage>>,
}

enum Flow {
    Next,
    Return(Value),
}

struct Machine<'p> {
    p: &'p LinkedProgram,
    ids: HashMap<String, u32>,
    slot_info: Vec<Vec<SlotInfo>>,
    rt_index: HashMap<(u32, u32, usize), usize>,
    frames: Vec<Frame>,
    locals_stack: Vec<&'p [LocalVar]>,
    secondary: Vec<ObjectStorage>,
    heap: Vec<ObjectStorage>,
    serial: i64,
    opts: Options,
    out: Vec<u8>,
    trace: Vec<String>,
    calls: Vec<CallRecord>,
    dispatches: Vec<DispatchRecord>,
}

impl<'p> Machine<'p> {
    fn new(p: &'p LinkedProgram, opts: Options) -> Self {
        let h: Hierarchy = p.hierarchy();
        let ids = p
            .classes
            .iter()
            .map(|c| (c.name.clone(), h.class_id(&c.name).expect("class")))
            .collect();
        let slot_info = p
            .classes
            .iter()
            .map(|c| {
                h.layout(&c.name)
                    .slots
                    .iter()
                    .map(|s| {
                        let owner = h.class(&s.owner).expect("owner");
                        SlotInfo {
                            ty: s.ty,
                            owner: owner.id,
                            field: owner.def.fields.iter().position(|(n, _)| *n == s.field).expect("field"),
                        }
                    })
                    .collect()
            })
            .collect();
        let rt_index = p
            .rttables
            .iter()
            .enumerate()
            .map(|(i, t)| ((t.type_id, t.subobject_class, t.subobject_offset), i))
            .collect();
        Machine {
            p,
            ids,
            slot_info,
            rt_index,
            frames: Vec::new(),
            locals_stack: Vec::new(),
            secondary: Vec::new(),
            heap: Vec::new(),
            serial: 0,
            opts,
            out: Vec::new(),
            trace: Vec::new(),
            calls: Vec::new(),
            dispatches: Vec::new(),
        }
    }

    fn class_id(&self, ty: &ValueType) -> u32 {
        self.ids[ty.class_name().expect("class type")]
    }

    fn new_object(&mut self, class: u32) -> ObjectStorage {
        self.serial += 1;
        let serial = self.serial;
        let slots = self.slot_info[class as usize]
            .iter()
            .map(|s| {
                if !self.opts.sentinels {
                    return Scalar::zero(s.ty);
                }
                let v = serial * 1000 + s.owner as i64 * 10 + s.field as i64;
                match s.ty {
                    ScalarType::Int => Scalar::Int(v),
                    ScalarType::Float => Scalar::Float(v as f64),
                    ScalarType::Bool => Scalar::Bool(false),
                }
            })
            .collect();
        ObjectStorage {
            dynamic_type: class,
            slots,
        }
    }

    fn storage(&self, s: Storage) -> &ObjectStorage {
        match s {
            Storage::Frame { frame, local } => self.frames[frame].objects[local].as_ref().expect("live local object"),
            Storage::Secondary(i) => &self.secondary[i],
            Storage::Heap(i) => &self.heap[i],
        }
    }

    fn storage_mut(&mut self, s: Storage) -> &mut ObjectStorage {
        match s {
            Storage::Frame { frame, local } => self.frames[frame].objects[local].as_mut().expect("live local object"),
            Storage::Secondary(i) => &mut self.secondary[i],
            Storage::Heap(i) => &mut self.heap[i],
        }
    }

    fn dynamic_type(&self, r: &FatRef) -> u32 {
        self.storage(r.storage).dynamic_type
    }

    fn rttable(&self, r: &FatRef) -> Result<&crate::hierarchy::RtTable, Fault> {
        let key = (self.dynamic_type(r), r.static_type, r.offset);
        match self.rt_index.get(&key) {
            Some(&i) => Ok(&self.p.rttables[i]),
            None => fault(format!("no runtime table for subobject {key:?}")),
        }
    }

    /// Moves `r` to its unique `target` ancestor subobject.
    fn realign(&self, r: FatRef, target: u32) -> Result<FatRef, Fault> {
        if r.static_type == target {
            return Ok(r);
        }
        let rt = self.rttable(&r)?;
        match rt.ancestor_offset(target) {
            Some(off) => Ok(FatRef {
                offset: (r.offset as i64 + off) as usize,
                static_type: target,
                ..r
            }),
            None => fault(format!(
                "realign miss: `{}` has no unique `{}` subobject",
                self.p.classes[r.static_type as usize].name, self.p.classes[target as usize].name
            )),
        }
    }

    fn copy_to_heap(&mut self, r: FatRef) -> FatRef {
        let obj = self.storage(r.storage).clone();
        self.heap.push(obj);
        FatRef {
            storage: Storage::Heap(self.heap.len() - 1),
            is_const: false,
            ..r
        }
    }

    fn default_value(&mut self, ty: &ValueType) -> Value {
        match ty {
            ValueType::Void => Value::Void,
            ValueType::Scalar(s) => Value::Scalar(Scalar::zero(*s)),
            ValueType::Class(_) => {
                let class = self.class_id(ty);
                let obj = self.new_object(class);
                self.heap.push(obj);
                Value::Obj(FatRef {
                    storage: Storage::Heap(self.heap.len() - 1),
                    offset: 0,
                    static_type: class,
                    is_const: false,
                })
            }
        }
    }

    fn call(
        &mut self,
        name: &str,
        body: &'p Body,
        params: &[Param],
        ret: &ValueType,
        args: Vec<Value>,
    ) -> Result<Value, Fault> {
        if self.frames.len() >= self.opts.max_depth {
            return fault(format!("call depth limit {} exceeded", self.opts.max_depth));
        }
        let before = self.secondary.len();
        let mut frame = Frame {
            cells: vec![Value::Void; body.locals.len()],
            objects: vec![None; body.locals.len()],
        };
        for (i, (p, a)) in params.iter().zip(args).enumerate() {
            frame.cells[i] = match a {
                Value::Obj(r) if p.mode == PassMode::ByValue && !p.is_const => {
                    let copy = self.storage(r.storage).clone();
                    self.secondary.push(copy);
                    Value::Obj(FatRef {
                        storage: Storage::Secondary(self.secondary.len() - 1),
                        is_const: false,
                        ..r
                    })
                }
                Value::Obj(r) => Value::Obj(FatRef {
                    is_const: r.is_const || p.is_const,
                    ..r
                }),
                other => other,
            };
        }
        self.frames.push(frame);
        self.locals_stack.push(&body.locals);
        let flow = self.block(&body.stmts);
        self.locals_stack.pop();
        self.frames.pop();
        self.secondary.truncate(before);
        if self.opts.record {
            self.calls.push(CallRecord {
                callee: name.to_string(),
                secondary_before: before,
                secondary_after: self.secondary.len(),
                faulted: flow.is_err(),
            });
        }
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Next => Ok(self.default_value(ret)),
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Flow, Fault> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn frame(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, Fault> {
        match s {
            Stmt::InitLocal { local, init } => {
                let depth = self.frames.len() - 1;
                let lv = &self.current_locals()[*local];
                match &lv.ty {
                    ValueType::Class(_) => {
                        let class = self.class_id(&lv.ty);
                        let (obj, offset) = match init {
                            Some(e) => {
                                let r = self.expr(e)?.obj();
                                (self.storage(r.storage).clone(), r.offset)
                            }
                            None => (self.new_object(class), 0),
                        };
                        let f = self.frame();
                        f.objects[*local] = Some(obj);
                        f.cells[*local] = Value::Obj(FatRef {
                            storage: Storage::Frame {
                                frame: depth,
                                local: *local,
                            },
                            offset,
                            static_type: class,
                            is_const: lv.is_const,
                        });
                    }
                    ty => {
                        let v = match init {
                            Some(e) => self.expr(e)?,
                            None => self.default_value(ty),
                        };
                        self.frame().cells[*local] = v;
                    }
                }
                Ok(Flow::Next)
            }
            Stmt::AssignLocal { local, value } => {
                let v = self.expr(value)?;
                self.frame().cells[*local] = v;
                Ok(Flow::Next)
            }
            Stmt::AssignField { object, slot, value } => {
                let r = self.expr(object)?.obj();
                let v = self.expr(value)?.scalar();
                self.storage_mut(r.storage).slots[r.offset + slot] = v;
                Ok(Flow::Next)
            }
            Stmt::Expr(e) => {
                self.expr(e)?;
                Ok(Flow::Next)
            }
            Stmt::If { cond, then, otherwise } => {
                if self.truth(cond)? {
                    self.block(then)
                } else {
                    self.block(otherwise)
                }
            }
            Stmt::While { cond, body } => {
                while self.truth(cond)? {
                    if let Flow::Return(v) = self.block(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Next)
            }
            Stmt::Return(None) => Ok(Flow::Return(Value::Void)),
            Stmt::Return(Some(e)) => {
                let v = match self.expr(e)? {
                    // the callee's frame and copies die on return
                    Value::Obj(r) => Value::Obj(self.copy_to_heap(r)),
                    v => v,
                };
                Ok(Flow::Return(v))
            }
            Stmt::Block(b) => self.block(b),
        }
    }

    fn current_locals(&self) -> &'p [LocalVar] {
        self.locals_stack.last().expect("active body")
    }

    fn truth(&mut self, e: &Expr) -> Result<bool, Fault> {
        match self.expr(e)?.scalar() {
            Scalar::Bool(b) => Ok(b),
            other => panic!("condition evaluated to {other:?}"),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<Value, Fault> {
        Ok(match &e.kind {
            ExprKind::Lit(l) => Value::Scalar(match *l {
                Lit::Int(v) => Scalar::Int(v),
                Lit::Bool(v) => Scalar::Bool(v),
                Lit::Float(v) => Scalar::Float(v),
            }),
            ExprKind::Local(i) => self.frames.last().expect("frame").cells[*i],
            ExprKind::Field { object, slot } => {
                let r = self.expr(object)?.obj();
                Value::Scalar(self.storage(r.storage).slots[r.offset + slot])
            }
            ExprKind::Upcast { expr, target } => {
                let r = self.expr(expr)?.obj();
                Value::Obj(self.realign(r, self.ids[target])?)
            }
            ExprKind::Unary { op, operand } => {
                let v = self.expr(operand)?.scalar();
                Value::Scalar(match (op, v) {
                    (UnOp::Not, Scalar::Bool(b)) => Scalar::Bool(!b),
                    (UnOp::Neg, Scalar::Int(i)) => Scalar::Int(i.wrapping_neg()),
                    (UnOp::Neg, Scalar::Float(f)) => Scalar::Float(-f),
                    other => panic!("ill-typed unary operation {other:?}"),
                })
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs)?,
            ExprKind::BoolToInt(inner) => match self.expr(inner)?.scalar() {
                Scalar::Bool(b) => Value::Scalar(Scalar::Int(b as i64)),
                other => panic!("bool promotion of {other:?}"),
            },
            ExprKind::CallStatic { func, args } => {
                let p = self.p;
                let f = &p.funcs[p.func(func).expect("linked call target")];
                let argv = self.args(args)?;
                let name = f.key.to_string();
                self.call(&name, f.body.as_ref().expect("linked body"), &f.params, &f.ret, argv)?
            }
            ExprKind::CallMulti { mm, args } => {
                let idx = self.p.multimethod(mm).expect("linked multimethod");
                let argv = self.args(args)?;
                let v = self.dispatch(idx, argv)?;
                match (&e.ty, v) {
                    (ValueType::Class(_), Value::Obj(r)) => Value::Obj(self.realign(r, self.class_id(&e.ty))?),
                    (_, v) => v,
                }
            }
            ExprKind::PrintStr(s) => {
                self.out.extend_from_slice(s.as_bytes());
                Value::Void
            }
            ExprKind::PrintValue(inner) => {
                let v = self.expr(inner)?.scalar();
                self.out.extend_from_slice(format!("{v}\n").as_bytes());
                Value::Void
            }
        })
    }

    fn args(&mut self, args: &[Expr]) -> Result<Vec<Value>, Fault> {
        args.iter().map(|a| self.expr(a)).collect()
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> Result<Value, Fault> {
        use Scalar::*;
        let l = self.expr(lhs)?.scalar();
        if let (BinOp::And | BinOp::Or, Bool(a)) = (op, l) {
            // short circuit
            if (op == BinOp::And) != a {
                return Ok(Value::Scalar(Bool(a)));
            }
            return Ok(Value::Scalar(self.expr(rhs)?.scalar()));
        }
        let r = self.expr(rhs)?.scalar();
        let v = match (op, l, r) {
            (BinOp::Eq, a, b) => Bool(a == b),
            (BinOp::Ne, a, b) => Bool(a != b),
            (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
            (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
            (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
            (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
            (BinOp::Lt, Float(a), Float(b)) => Bool(a < b),
            (BinOp::Le, Float(a), Float(b)) => Bool(a <= b),
            (BinOp::Gt, Float(a), Float(b)) => Bool(a > b),
            (BinOp::Ge, Float(a), Float(b)) => Bool(a >= b),
            (BinOp::Add, Int(a), Int(b)) => Int(a.wrapping_add(b)),
            (BinOp::Sub, Int(a), Int(b)) => Int(a.wrapping_sub(b)),
            (BinOp::Mul, Int(a), Int(b)) => Int(a.wrapping_mul(b)),
            (BinOp::Div | BinOp::Rem, Int(_), Int(0)) => return fault("division by zero"),
            (BinOp::Div, Int(a), Int(b)) => Int(a.wrapping_div(b)),
            (BinOp::Rem, Int(a), Int(b)) => Int(a.wrapping_rem(b)),
            (BinOp::Add, Float(a), Float(b)) => Float(a + b),
            (BinOp::Sub, Float(a), Float(b)) => Float(a - b),
            (BinOp::Mul, Float(a), Float(b)) => Float(a * b),
            (BinOp::Div, Float(a), Float(b)) => Float(a / b),
            other => panic!("ill-typed binary operation {other:?}"),
        };
        Ok(Value::Scalar(v))
    }

    fn dispatch(&mut self, mm_idx: usize, mut args: Vec<Value>) -> Result<Value, Fault> {
        let p = self.p;
        let mm = &p.multimethods[mm_idx];
        let positions = mm.key.dispatch_positions();
        let mut dynamic = Vec::new();
        let mut bases = Vec::new();
        let mut refs = Vec::new();
        for &i in &positions {
            let r = args[i].obj();
            let rt = self.rttable(&r)?;
            // rebase to the complete object
            let base = r.offset - rt.subobject_offset;
            dynamic.push(dispatch_id(rt.type_id, r.is_const));
            bases.push(base);
            refs.push(r);
        }
        let mut poles = Vec::new();
        for (k, id) in dynamic.iter().enumerate() {
            match mm.tables.positions[k].pole_of[*id as usize] {
                Some(p) => poles.push(p),
                None => {
                    return fault(format!(
                        "dispatch trap: {} has no pole for {}",
                        mm.key,
                        self.dispatch_name(*id)
                    ));
                }
            }
        }
        let (local, entry_offsets) = match &mm.tables.matrix[mm.tables.index(&poles)] {
            Entry::Trap => return fault(format!("dispatch trap in {}", mm.key)),
            Entry::Select { spec, offsets } => (*spec, offsets.clone()),
        };
        let spec_id = mm.specs[local];
        let spec = &p.specs[spec_id];
        let winner = spec.dispatch_params();
        let mut adjusted = Vec::new();
        let mut arithmetic = Vec::new();
        for (k, &i) in positions.iter().enumerate() {
            let realign = mm.tables.positions[k].realign[dynamic[k] as usize].expect("pole has an offset");
            let off = bases[k] + realign + entry_offsets[k];
            arithmetic.push(format!("{} + {} + {} = {}", bases[k], realign, entry_offsets[k], off));
            adjusted.push(off);
            args[i] = Value::Obj(FatRef {
                offset: off,
                static_type: self.ids[&winner[k].class],
                ..refs[k]
            });
        }
        if self.opts.trace_dispatch {
            let dyn_names: Vec<String> = dynamic
                .iter()
                .map(|&id| format!("#{id} {}", self.dispatch_name(id)))
                .collect();
            let pole_names: Vec<String> = poles.iter().map(|p| format!("P{}", p + 1)).collect();
            self.trace.push(format!(
                "dispatch {} dyn=[{}] poles=[{}] -> #{local} {} offsets=[{}]",
                mm.key,
                dyn_names.join(", "),
                pole_names.join(","),
                spec.label(),
                arithmetic.join(", ")
            ));
        }
        if self.opts.record {
            self.dispatches.push(DispatchRecord {
                multimethod: mm_idx,
                dynamic,
                spec: spec_id,
                offsets: adjusted,
            });
        }
        let name = spec.label();
        self.call(
            &name,
            spec.body.as_ref().expect("linked body"),
            &spec.params,
            &spec.ret,
            args,
        )
    }

    fn dispatch_name(&self, id: u32) -> String {
        let (class, is_const) = crate::hierarchy::split_dispatch_id(id);
        let name = &self.p.classes[class as usize].name;
        if is_const {
            format!("const {name}")
        } else {
            name.clone()
        }
    }
}
