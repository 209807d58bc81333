//! Grouping of the dispatch types of one parameter position around poles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::diag::{Code, Diagnostic, Span};
use crate::hierarchy::{DispatchType, Hierarchy, SubtypeAnswer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolePosition {
    /// Dispatch type ids of the poles, ascending. A pole index is a position
    /// in this list.
    pub poles: Vec<u32>,
    /// Indexed by dispatch type id.
    pub pole_of: Vec<Option<usize>>,
    /// Indexed by dispatch type id: start of the pole subobject within the
    /// complete object.
    pub realign: Vec<Option<usize>>,
}

/// Offset of the unique `sup` subobject in a complete `sub`.
pub(crate) fn offset(h: &Hierarchy, sub: &DispatchType, sup: &DispatchType) -> Option<usize> {
    match h.dispatch_subtype(sub, sup) {
        SubtypeAnswer::Unique(o) => Some(o),
        _ => None,
    }
}

struct Reach {
    unique: BTreeSet<usize>,
    ambiguous: BTreeSet<usize>,
}

fn reach(h: &Hierarchy, t: &DispatchType, params: &[DispatchType]) -> Reach {
    let mut r = Reach {
        unique: BTreeSet::new(),
        ambiguous: BTreeSet::new(),
    };
    for (i, p) in params.iter().enumerate() {
        match h.dispatch_subtype(t, p) {
            SubtypeAnswer::Unique(_) => {
                r.unique.insert(i);
            }
            SubtypeAnswer::Ambiguous(_) => {
                r.ambiguous.insert(i);
            }
            SubtypeAnswer::No => {}
        }
    }
    r
}

/// Poles for one position, given the distinct parameter types appearing
/// there. A type whose most specific candidate would not dispatch (or
/// realign) exactly like the type itself becomes its own pole.
pub fn compute_poles(h: &Hierarchy, params: &[DispatchType], what: &str) -> (PolePosition, Vec<Diagnostic>) {
    let mut params: Vec<DispatchType> = params.to_vec();
    params.sort();
    params.dedup();
    let universe = 2 * h.len() as u32;
    let mut diags = Vec::new();
    let mut chosen: Vec<Option<u32>> = Vec::new();
    for id in 0..universe {
        let t = h.dispatch_type(id);
        let r = reach(h, &t, &params);
        if r.unique.is_empty() {
            if let Some(&a) = r.ambiguous.iter().next() {
                diags.push(Diagnostic::error(
                    Code::E_AMBIG_POLE,
                    Span::link(),
                    format!(
                        "{what}: `{t}` is an ambiguous subtype of `{}` and has no unambiguous pole",
                        params[a]
                    ),
                ));
            }
            chosen.push(None);
            continue;
        }
        let min = r.unique.iter().copied().find(|&m| {
            r.unique
                .iter()
                .all(|&k| h.dispatch_subtype(&params[m], &params[k]).is_unique())
        });
        let pole = min.filter(|&m| {
            let pm = &params[m];
            let rm = reach(h, pm, &params);
            let base = offset(h, &t, pm);
            rm.unique == r.unique
                && rm.ambiguous == r.ambiguous
                && r.unique.iter().all(|&k| {
                    let direct = offset(h, &t, &params[k]);
                    let via = base.zip(offset(h, pm, &params[k])).map(|(a, b)| a + b);
                    direct == via
                })
        });
        chosen.push(Some(match pole {
            Some(m) => h.dispatch_id_of(&params[m]).expect("known class"),
            None => id,
        }));
    }
    let poles: Vec<u32> = chosen
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<u32>>()
        .into_iter()
        .collect();
    let mut pole_of = Vec::new();
    let mut realign = Vec::new();
    for (id, c) in chosen.iter().enumerate() {
        match c {
            Some(p) => {
                pole_of.push(Some(poles.binary_search(p).expect("pole listed")));
                let t = h.dispatch_type(id as u32);
                realign.push(Some(
                    offset(h, &t, &h.dispatch_type(*p)).expect("pole is a unique supertype"),
                ));
            }
            None => {
                pole_of.push(None);
                realign.push(None);
            }
        }
    }
    (
        PolePosition {
            poles,
            pole_of,
            realign,
        },
        diags,
    )
}
