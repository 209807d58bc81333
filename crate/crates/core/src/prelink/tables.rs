//! Compressed dispatch matrix fill and the per-entry consistency checks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::poles::{compute_poles, offset};
use super::DispatchStructures;
use crate::diag::{Code, Diagnostic, Span};
use crate::hierarchy::{DispatchType, Hierarchy};
use crate::typecheck::invocation::{applicability, minimal, more_specific, return_compatible, Applicability};
use crate::typecheck::ir::{MmKey, Spec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entry {
    Trap,
    Select {
        /// Index into the multimethod's specialization list.
        spec: usize,
        /// Per position, start of the selected parameter subobject within the pole.
        offsets: Vec<usize>,
    },
}

fn show(ts: &[DispatchType]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn build_dispatch(h: &Hierarchy, key: &MmKey, specs: &[&Spec]) -> Result<DispatchStructures, Vec<Diagnostic>> {
    let n = key.arity();
    let params: Vec<Vec<DispatchType>> = specs.iter().map(|s| s.dispatch_params()).collect();
    let mut diags = Vec::new();
    let mut positions = Vec::new();
    for i in 0..n {
        let at: Vec<DispatchType> = params.iter().map(|p| p[i].clone()).collect();
        let (pos, d) = compute_poles(h, &at, &format!("{key} position {}", i + 1));
        diags.extend(d);
        positions.push(pos);
    }
    let mut ds = DispatchStructures {
        positions,
        matrix: Vec::new(),
    };
    let total: usize = ds.extents().iter().product();
    let refs: Vec<&[DispatchType]> = params.iter().map(Vec::as_slice).collect();
    let mut reported: BTreeSet<(Code, Vec<usize>)> = BTreeSet::new();
    let mut report = |diags: &mut Vec<Diagnostic>, code: Code, involved: Vec<usize>, msg: String| {
        if reported.insert((code, involved)) {
            diags.push(Diagnostic::error(code, Span::link(), msg));
        }
    };
    for idx in 0..total {
        let tuple: Vec<DispatchType> = ds
            .tuple(idx)
            .iter()
            .zip(&ds.positions)
            .map(|(&p, pos)| h.dispatch_type(pos.poles[p]))
            .collect();
        let mut unique = Vec::new();
        let mut ambiguous = Vec::new();
        for (s, p) in params.iter().enumerate() {
            match applicability(h, p, &tuple) {
                Applicability::Applicable => unique.push(s),
                Applicability::Ambiguous => ambiguous.push(s),
                Applicability::NotApplicable => {}
            }
        }
        for &s in &ambiguous {
            if !unique.iter().any(|&u| more_specific(h, &params[u], &params[s])) {
                report(
                    &mut diags,
                    Code::E_AMBIG_POLE,
                    vec![s],
                    format!(
                        "{key}: ({}) reaches `{}` only through an ambiguous subtype",
                        show(&tuple),
                        specs[s].label()
                    ),
                );
            }
        }
        if unique.is_empty() {
            ds.matrix.push(Entry::Trap);
            continue;
        }
        let best = minimal(h, &refs, &unique);
        if best.len() != 1 {
            let names: Vec<String> = best.iter().map(|&b| format!("`{}`", specs[b].label())).collect();
            report(
                &mut diags,
                Code::E_LINK_AMBIGUOUS,
                best.clone(),
                format!(
                    "{key}: no most specific specialization for ({}); candidates {}",
                    show(&tuple),
                    names.join(", ")
                ),
            );
            ds.matrix.push(Entry::Trap);
            continue;
        }
        let w = best[0];
        for &s in unique.iter().chain(&ambiguous) {
            if s != w && !return_compatible(h, &specs[w].ret, &specs[s].ret) {
                report(
                    &mut diags,
                    Code::E_RETURN_CONSTRAINT,
                    vec![w, s],
                    format!(
                        "{key}: `{}` is selected for ({}) but returns {}, which is not a unique subtype of {} returned by `{}`",
                        specs[w].label(),
                        show(&tuple),
                        specs[w].ret,
                        specs[s].ret,
                        specs[s].label()
                    ),
                );
            }
        }
        if specs[w].body.is_none() {
            report(
                &mut diags,
                Code::E_MISSING_BODY,
                vec![w],
                format!(
                    "{key}: `{}` is selected for ({}) but no module defines its body",
                    specs[w].label(),
                    show(&tuple)
                ),
            );
        }
        let offsets = tuple
            .iter()
            .zip(&params[w])
            .map(|(t, p)| offset(h, t, p).expect("winner is uniquely applicable"))
            .collect();
        ds.matrix.push(Entry::Select { spec: w, offsets });
    }
    if diags.is_empty() {
        Ok(ds)
    } else {
        Err(diags)
    }
}
