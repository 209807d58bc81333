//! Applicability, specificity and the typing of multimethod invocations.

use crate::diag::Code;
use crate::hierarchy::{DispatchType, Hierarchy, SubtypeAnswer};
use crate::types::ValueType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applicability {
    Applicable,
    /// Every argument reaches its parameter, at least one only ambiguously.
    Ambiguous,
    NotApplicable,
}

pub fn applicability(h: &Hierarchy, params: &[DispatchType], args: &[DispatchType]) -> Applicability {
    debug_assert_eq!(params.len(), args.len());
    let mut ambiguous = false;
    for (p, a) in params.iter().zip(args) {
        match h.dispatch_subtype(a, p) {
            SubtypeAnswer::No => return Applicability::NotApplicable,
            SubtypeAnswer::Ambiguous(_) => ambiguous = true,
            SubtypeAnswer::Unique(_) => {}
        }
    }
    if ambiguous {
        Applicability::Ambiguous
    } else {
        Applicability::Applicable
    }
}

/// `a` is at least as specific as `b`: every parameter of `a` is a unique
/// dispatch subtype of the matching parameter of `b`.
pub fn more_specific(h: &Hierarchy, a: &[DispatchType], b: &[DispatchType]) -> bool {
    a.iter().zip(b).all(|(x, y)| h.dispatch_subtype(x, y).is_unique())
}

/// Indices of the elements of `set` with nothing strictly more specific in `set`.
pub fn minimal(h: &Hierarchy, params: &[&[DispatchType]], set: &[usize]) -> Vec<usize> {
    set.iter()
        .copied()
        .filter(|&i| {
            !set.iter()
                .any(|&j| j != i && more_specific(h, params[j], params[i]) && !more_specific(h, params[i], params[j]))
        })
        .collect()
}

/// Whether a value of type `sub` may stand where `sup` is expected, for return types.
pub fn return_compatible(h: &Hierarchy, sub: &ValueType, sup: &ValueType) -> bool {
    match (sub, sup) {
        (ValueType::Class(a), ValueType::Class(b)) => h.subtype(a, b).is_unique(),
        _ => sub == sup,
    }
}

/// A specialization as seen by invocation typing.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub params: Vec<DispatchType>,
    pub ret: ValueType,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvocationError {
    pub code: Code,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Typed {
    pub ret: ValueType,
    /// (code, message) pairs, all warnings.
    pub warnings: Vec<(Code, String)>,
}

fn labels(cands: &[Candidate], idx: &[usize]) -> String {
    let mut ls: Vec<&str> = idx.iter().map(|&i| cands[i].label.as_str()).collect();
    ls.sort();
    ls.join(", ")
}

fn show_args(args: &[DispatchType]) -> String {
    let a: Vec<String> = args.iter().map(|t| t.to_string()).collect();
    format!("({})", a.join(", "))
}

/// Static return type of an invocation with the given static argument types.
pub fn type_invocation(
    h: &Hierarchy,
    name: &str,
    cands: &[Candidate],
    args: &[DispatchType],
) -> Result<Typed, InvocationError> {
    let params: Vec<&[DispatchType]> = cands.iter().map(|c| c.params.as_slice()).collect();
    let mut unique = Vec::new();
    let mut amb = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        match applicability(h, &c.params, args) {
            Applicability::Applicable => unique.push(i),
            Applicability::Ambiguous => amb.push(i),
            Applicability::NotApplicable => {}
        }
    }
    let mut warnings = Vec::new();
    // an ambiguously applicable specialization not overridden by a unique one
    let unshadowed: Vec<usize> = amb
        .iter()
        .copied()
        .filter(|&a| !unique.iter().any(|&u| more_specific(h, params[u], params[a])))
        .collect();
    let at = show_args(args);

    if unique.is_empty() {
        if amb.is_empty() {
            return Err(InvocationError {
                code: Code::E_NO_APPLICABLE,
                message: format!("no specialization of `{name}` is applicable to {at}"),
            });
        }
        let m = minimal(h, &params, &amb);
        let ret = &cands[m[0]].ret;
        if m.iter().any(|&i| &cands[i].ret != ret) {
            return Err(InvocationError {
                code: Code::E_AMBIGUOUS_RETURN,
                message: format!(
                    "cannot determine the return type of `{name}` on {at}: candidates {} return different types",
                    labels(cands, &m)
                ),
            });
        }
        warnings.push((
            Code::W_AMBIG_SUBTYPE,
            format!(
                "`{name}` on {at} is only applicable through an ambiguous subtype: {}",
                labels(cands, &m)
            ),
        ));
        return Ok(Typed {
            ret: ret.clone(),
            warnings,
        });
    }

    let m = minimal(h, &params, &unique);
    if !unshadowed.is_empty() {
        warnings.push((
            Code::W_AMBIG_SUBTYPE,
            format!(
                "`{name}` on {at} also reaches {} through an ambiguous subtype",
                labels(cands, &unshadowed)
            ),
        ));
    }
    let ret = &cands[m[0]].ret;
    if m.len() == 1 {
        return Ok(Typed {
            ret: ret.clone(),
            warnings,
        });
    }
    if m.iter().any(|&i| &cands[i].ret != ret) {
        return Err(InvocationError {
            code: Code::E_AMBIGUOUS_RETURN,
            message: format!(
                "cannot determine the return type of `{name}` on {at}: no most specific among {}",
                labels(cands, &m)
            ),
        });
    }
    warnings.push((
        Code::W_NO_MOST_SPECIFIC,
        format!(
            "no most specific specialization of `{name}` on {at} among {}",
            labels(cands, &m)
        ),
    ));
    Ok(Typed {
        ret: ret.clone(),
        warnings,
    })
}

/// Tuple enumeration stops after this many tuples.
pub const CONFLICT_TUPLE_BUDGET: usize = 250_000;

/// Pairs of specializations that are both minimal for some argument tuple.
/// Each pair is reported once with the first witness found (tuples in
/// dispatch id order).
pub fn latent_conflicts(h: &Hierarchy, cands: &[Candidate]) -> Vec<(usize, usize, Vec<DispatchType>)> {
    let Some(first) = cands.first() else {
        return Vec::new();
    };
    let n = first.params.len();
    if n == 0 {
        return Vec::new();
    }
    let universe = h.dispatch_universe().types;
    // only types that reach some parameter at each position matter
    let per_pos: Vec<Vec<&DispatchType>> = (0..n)
        .map(|i| {
            universe
                .iter()
                .filter(|t| cands.iter().any(|c| h.dispatch_subtype(t, &c.params[i]).is_unique()))
                .collect()
        })
        .collect();
    if per_pos.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let params: Vec<&[DispatchType]> = cands.iter().map(|c| c.params.as_slice()).collect();
    let mut found: Vec<(usize, usize, Vec<DispatchType>)> = Vec::new();
    let mut idx = vec![0usize; n];
    let mut visited = 0usize;
    loop {
        visited += 1;
        if visited > CONFLICT_TUPLE_BUDGET {
            break;
        }
        let tuple: Vec<DispatchType> = idx.iter().enumerate().map(|(i, &k)| per_pos[i][k].clone()).collect();
        let unique: Vec<usize> = (0..cands.len())
            .filter(|&c| applicability(h, params[c], &tuple) == Applicability::Applicable)
            .collect();
        let m = minimal(h, &params, &unique);
        for a in 0..m.len() {
            for b in a + 1..m.len() {
                let (x, y) = (m[a].min(m[b]), m[a].max(m[b]));
                if !found.iter().any(|(p, q, _)| (*p, *q) == (x, y)) {
                    found.push((x, y, tuple.clone()));
                }
            }
        }
        // odometer increment, last position fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return found;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < per_pos[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    found
}

/// Pairs (more specific, less specific) whose return types violate the
/// return-type constraint.
pub fn return_constraint_violations(h: &Hierarchy, cands: &[Candidate]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in cands.iter().enumerate() {
        for (j, b) in cands.iter().enumerate() {
            if i != j
                && a.params != b.params
                && more_specific(h, &a.params, &b.params)
                && !return_compatible(h, &a.ret, &b.ret)
            {
                out.push((i, j));
            }
        }
    }
    out
}
