//! Text rendering of the dispatch structures of a linked program.

use std::fmt::Write;

use super::{Entry, LinkedProgram, Multimethod};
use crate::hierarchy::Hierarchy;

fn table(rows: &[Vec<String>], indent: &str, out: &mut String) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    for r in rows {
        let mut line = String::from(indent);
        for (c, cell) in r.iter().enumerate() {
            if c + 1 == r.len() {
                line.push_str(cell);
            } else {
                let _ = write!(line, "{cell:<w$}  ", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn pole_name(i: usize) -> String {
    format!("P{}", i + 1)
}

fn entry_label(p: &LinkedProgram, mm: &Multimethod, e: &Entry) -> String {
    match e {
        Entry::Trap => "TRAP".into(),
        Entry::Select { spec, .. } => p.specs[mm.specs[*spec]].label(),
    }
}

fn entry_offsets(e: &Entry) -> String {
    match e {
        Entry::Trap => "-".into(),
        Entry::Select { offsets, .. } => offsets.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(","),
    }
}

fn dump_one(p: &LinkedProgram, h: &Hierarchy, mm: &Multimethod, out: &mut String) {
    let ds = &mm.tables;
    let _ = writeln!(out, "multimethod {}", mm.key);
    out.push_str("  specializations:\n");
    for (i, &g) in mm.specs.iter().enumerate() {
        let s = &p.specs[g];
        let body = if s.body.is_some() { "" } else { " (declaration only)" };
        let _ = writeln!(out, "    #{i} {} {}  [{}]{body}", s.ret, s.label(), s.origin);
    }
    let universe = 2 * h.len();
    for (i, pos) in ds.positions.iter().enumerate() {
        let groups: Vec<String> = pos
            .poles
            .iter()
            .enumerate()
            .map(|(k, &pid)| {
                let members: Vec<String> = (0..universe)
                    .filter(|&t| pos.pole_of[t] == Some(k))
                    .map(|t| h.dispatch_type(t as u32).to_string())
                    .collect();
                format!("{}={} {{{}}}", pole_name(k), h.dispatch_type(pid), members.join(", "))
            })
            .collect();
        let _ = writeln!(out, "  position {} poles: {}", i + 1, groups.join("; "));
        let mut rows = vec![
            vec!["type".to_string()],
            vec!["pole".to_string()],
            vec!["realign".to_string()],
        ];
        for t in 0..universe {
            rows[0].push(h.dispatch_type(t as u32).to_string());
            rows[1].push(pos.pole_of[t].map(pole_name).unwrap_or_else(|| "-".into()));
            rows[2].push(pos.realign[t].map(|o| o.to_string()).unwrap_or_else(|| "-".into()));
        }
        let _ = writeln!(out, "  position {} vectors:", i + 1);
        table(&rows, "    ", out);
    }
    if ds.positions.len() == 2 {
        for (title, cell) in [
            (
                "dispatch matrix",
                &(|e: &Entry| entry_label(p, mm, e)) as &dyn Fn(&Entry) -> String,
            ),
            ("realignment matrix", &entry_offsets),
        ] {
            let (rn, cn) = (ds.positions[0].poles.len(), ds.positions[1].poles.len());
            let mut rows = vec![std::iter::once(String::new())
                .chain((0..cn).map(pole_name))
                .collect::<Vec<_>>()];
            for r in 0..rn {
                let mut row = vec![pole_name(r)];
                for c in 0..cn {
                    row.push(cell(&ds.matrix[ds.index(&[r, c])]));
                }
                rows.push(row);
            }
            let _ = writeln!(out, "  {title}:");
            table(&rows, "    ", out);
        }
    } else {
        out.push_str("  dispatch entries:\n");
        for (idx, e) in ds.matrix.iter().enumerate() {
            let tuple: Vec<String> = ds.tuple(idx).into_iter().map(pole_name).collect();
            let _ = writeln!(
                out,
                "    ({}) -> {} [{}]",
                tuple.join(", "),
                entry_label(p, mm, e),
                entry_offsets(e)
            );
        }
    }
}

/// Per multimethod: specializations, pole groups, pole and realignment
/// vectors, dispatch matrix and realignment matrix.
pub fn dump_tables(p: &LinkedProgram) -> String {
    let h = p.hierarchy();
    let mut out = String::new();
    for (i, mm) in p.multimethods.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        dump_one(p, &h, mm, &mut out);
    }
    out
}
