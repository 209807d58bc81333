//! End-to-end acceptance checks; prints one PASS/FAIL line per criterion.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::SeedableRng;

use ool::diag::Code;
use ool::driver::{compile_file, compile_source};
use ool::hierarchy::DispatchType;
use ool::objmod::{declarations_only, dump_module};
use ool::oracle::Oracle;
use ool::prelink::{dump_tables, link};
use ool::runtime::{self, Options};

use support::equivalence::{check_fixture, Checked};
use support::randprog::random_fixture;
use support::randrun::{check_program, random_program};

type Check = Result<String, String>;

struct Work {
    _tmp: tempfile::TempDir,
    dir: PathBuf,
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// A scratch directory holding a copy of every fixture.
fn work() -> Work {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path().to_path_buf();
    for e in fs::read_dir(fixtures()).unwrap() {
        let p = e.unwrap().path();
        fs::copy(&p, dir.join(p.file_name().unwrap())).unwrap();
    }
    Work { _tmp: tmp, dir }
}

fn ool(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ool"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn ool")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

/// Codes of the error lines on stderr.
fn error_codes(o: &Output) -> Vec<String> {
    stderr(o)
        .lines()
        .filter_map(|l| l.strip_prefix("error "))
        .filter_map(|l| l.split_whitespace().next())
        .map(str::to_string)
        .collect()
}

fn expect(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn compile_ok(dir: &Path, src: &str) -> Result<(), String> {
    let o = ool(dir, &["compile", src]);
    expect(code(&o) == 0, || {
        format!("compile {src} exited {}: {}", code(&o), stderr(&o))
    })
}

/// Compiles every source and links the modules into `image`.
fn build(dir: &Path, srcs: &[&str], image: &str) -> Result<(), String> {
    let mut args = vec!["link".to_string()];
    for s in srcs {
        compile_ok(dir, s)?;
        args.push(s.replace(".ool", ".oom"));
    }
    args.extend(["-o".to_string(), image.to_string()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = ool(dir, &argv);
    expect(code(&o) == 0, || format!("link exited {}: {}", code(&o), stderr(&o)))
}

fn run_program(source: &str, sentinels: bool) -> Result<runtime::Outcome, String> {
    let c = compile_source("prog.ool", source, &BTreeMap::new());
    let m = c.module.ok_or_else(|| format!("{:?}", c.diagnostics))?;
    let p = link(&[m]).map_err(|d| format!("{d:?}"))?;
    Ok(runtime::run(
        &p,
        &Options {
            sentinels,
            record: true,
            ..Options::default()
        },
    ))
}

fn subsumption_output() -> Check {
    let w = work();
    build(&w.dir, &["dump_under_subsumption.ool"], "prog.ool1")?;
    let o = ool(&w.dir, &["run", "prog.ool1"]);
    expect(code(&o) == 0 && stdout(&o) == "Point\nColorPoint\n", || {
        format!("exit {} stdout {:?}", code(&o), stdout(&o))
    })?;
    Ok("printed Point, ColorPoint".into())
}

fn covariant_rejected_binary_selected() -> Check {
    let w = work();
    let o = ool(&w.dir, &["compile", "covariant_override.ool"]);
    expect(code(&o) == 1 && error_codes(&o) == ["E_OVERRIDE_PARAM"], || {
        format!("covariant override: exit {} {}", code(&o), stderr(&o))
    })?;
    build(&w.dir, &["binary_equal_fields.ool"], "eq.ool1")?;
    let o = ool(&w.dir, &["run", "--trace-dispatch", "eq.ool1"]);
    let trace = stderr(&o);
    expect(
        code(&o) == 1
            && trace.lines().count() == 1
            && trace.contains("dyn=[#0 ColorPoint, #2 Point]")
            && trace.contains("-> #1 @equal(Point, Point)"),
        || format!("exit {} trace {trace:?}", code(&o)),
    )?;
    Ok(trace.trim().to_string())
}

fn ambiguous_returns_discriminated() -> Check {
    let w = work();
    let o = ool(&w.dir, &["compile", "ambiguous_return.ool"]);
    expect(
        code(&o) == 1 && error_codes(&o).contains(&"E_AMBIGUOUS_RETURN".to_string()),
        || format!("exit {} {}", code(&o), stderr(&o)),
    )?;
    let o = ool(&w.dir, &["compile", "latent_conflict.ool"]);
    let warned =
        stderr(&o).lines().all(|l| l.starts_with("warning ")) && stderr(&o).contains("warning W_LATENT_CONFLICT");
    expect(code(&o) == 0 && warned, || {
        format!("latent conflict: exit {} {}", code(&o), stderr(&o))
    })?;
    compile_ok(&w.dir, "latent_conflict_main.ool")?;
    let two = ool(
        &w.dir,
        &[
            "link",
            "latent_conflict.oom",
            "latent_conflict_main.oom",
            "-o",
            "two.ool1",
        ],
    );
    expect(
        code(&two) == 1 && error_codes(&two).contains(&"E_LINK_AMBIGUOUS".to_string()),
        || format!("two-module link: exit {} {}", code(&two), stderr(&two)),
    )?;
    compile_ok(&w.dir, "latent_conflict_resolver.ool")?;
    let three = ool(
        &w.dir,
        &[
            "link",
            "latent_conflict.oom",
            "latent_conflict_resolver.oom",
            "latent_conflict_main.oom",
            "-o",
            "three.ool1",
        ],
    );
    expect(code(&three) == 0, || format!("three-module link: {}", stderr(&three)))?;
    let o = ool(&w.dir, &["run", "--trace-dispatch", "three.ool1"]);
    expect(code(&o) == 3 && stderr(&o).contains("-> #2 @m(C, C)"), || {
        format!("run: exit {} {}", code(&o), stderr(&o))
    })?;
    Ok("error, warning, then the third module links".into())
}

fn link_anomalies() -> Check {
    let w = work();
    let mut seen = Vec::new();
    for (a, b, want) in [
        ("crossed_first", "crossed_second", "E_LINK_AMBIGUOUS"),
        ("joined_first", "joined_second", "E_LINK_AMBIGUOUS"),
        ("diamond_first", "diamond_second", "E_AMBIG_POLE"),
    ] {
        compile_ok(&w.dir, &format!("{a}.ool"))?;
        compile_ok(&w.dir, &format!("{b}.ool"))?;
        let o = ool(
            &w.dir,
            &["link", &format!("{a}.oom"), &format!("{b}.oom"), "-o", "x.ool1"],
        );
        let codes: BTreeSet<String> = error_codes(&o).into_iter().collect();
        expect(code(&o) == 1 && codes == BTreeSet::from([want.to_string()]), || {
            format!("{a}+{b}: exit {} {}", code(&o), stderr(&o))
        })?;
        seen.push(format!("{a}+{b} {want}"));
    }
    Ok(seen.join(", "))
}

fn pole_table_reproduced() -> Check {
    let w = work();
    build(&w.dir, &["pole_groups.ool"], "poles.ool1")?;
    let o = ool(&w.dir, &["dump-tables", "poles.ool1"]);
    let text = stdout(&o);
    let groups = text.matches("poles: P1=B {B}; P2=D {D, E}").count();
    let matrix = "  dispatch matrix:\n        P1        P2\n    P1  @m(B, B)  @m(B, B)\n    P2  @m(B, B)  @m(D, D)\n";
    expect(code(&o) == 0 && groups == 2 && text.contains(matrix), || {
        format!("dump:\n{text}")
    })?;
    Ok("groups {B} {D, E} at both positions; 3x @m(B, B), 1x @m(D, D)".into())
}

const REALIGN_SENTINELS: &str = "\
class A { int a; };
class B { int b; };
class C { int c; };
class D: public A, public B { int d; };
class E: public C, public D { int e; };
int @m(B x, B y) {
    print(x.b);
    print(y.b);
    return 1;
}
int @m(D x, D y) {
    return 2;
}
int main() {
    B b;
    E e;
    print(e.e);
    return @m(b, e);
}
";

fn realignment_arithmetic() -> Check {
    let w = work();
    build(&w.dir, &["pole_groups.ool"], "poles.ool1")?;
    let o = ool(&w.dir, &["run", "--trace-dispatch", "poles.ool1"]);
    let trace = stderr(&o);
    expect(
        trace.contains("offsets=[0 + 0 + 0 = 0, 0 + 1 + 1 = 2]") && stdout(&o) == "12\n",
        || format!("trace {trace:?} stdout {:?}", stdout(&o)),
    )?;
    // B has class id 1 and its only field is index 0
    let out = run_program(REALIGN_SENTINELS, true)?;
    let vals: Vec<i64> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let e_serial = vals[0] / 1000;
    expect(
        vals.len() == 3 && vals[0] % 1000 == 40 && vals[2] == e_serial * 1000 + 10 && vals[1] / 1000 != e_serial,
        || format!("sentinel reads {vals:?}"),
    )?;
    expect(out.dispatches[0].offsets == [0, 2], || format!("{:?}", out.dispatches))?;
    Ok(format!("second offset 0 + 1 + 1 = 2, read B sentinel {}", vals[2]))
}

fn return_check_covers_all_applicable() -> Check {
    let w = work();
    compile_ok(&w.dir, "diamond_returns.ool")?;
    let o = ool(&w.dir, &["link", "diamond_returns.oom", "-o", "x.ool1"]);
    expect(
        code(&o) == 1 && error_codes(&o).contains(&"E_RETURN_CONSTRAINT".to_string()),
        || format!("exit {} {}", code(&o), stderr(&o)),
    )?;
    // every immediate neighbor pair is return-compatible on its own
    let m = compile_file(&fixtures().join("diamond_returns.ool"))
        .unwrap()
        .module
        .unwrap();
    let oracle = Oracle::new(&m.classes);
    let specs: Vec<Vec<DispatchType>> = m.specs.iter().map(|s| s.dispatch_params()).collect();
    let rets: Vec<_> = m.specs.iter().map(|s| s.ret.clone()).collect();
    let below = |a: &[DispatchType], b: &[DispatchType]| {
        a != b && a.iter().zip(b).all(|(x, y)| oracle.dispatch_count(x, y) == 1)
    };
    let mut neighbors = 0;
    for i in 0..specs.len() {
        for j in 0..specs.len() {
            let covered = below(&specs[i], &specs[j])
                && !(0..specs.len()).any(|k| below(&specs[i], &specs[k]) && below(&specs[k], &specs[j]));
            if covered {
                neighbors += 1;
                let (a, b) = (rets[i].class_name().unwrap(), rets[j].class_name().unwrap());
                expect(oracle.subobject_count(a, b) == 1, || format!("{a} vs {b}"))?;
            }
        }
    }
    let tuple = specs[3].clone();
    expect(oracle.return_violation(&specs, &rets, &tuple), || {
        "oracle sees no violation at (D, D)".into()
    })?;
    Ok(format!(
        "{neighbors} neighbor pairs compatible, (D, D) violates against @m(A, A)"
    ))
}

fn const_dispatch() -> Check {
    let m = compile_file(&fixtures().join("const_dispatch.ool"))
        .unwrap()
        .module
        .unwrap();
    let h = ool::hierarchy::Hierarchy::build(&m.classes).unwrap();
    let u = h.dispatch_universe();
    let name = |id: u32| h.dispatch_type(id).to_string();
    let edges: BTreeSet<(String, String)> = u.edges.iter().map(|&(a, b)| (name(a), name(b))).collect();
    let want: BTreeSet<(String, String)> = [("A", "const A"), ("B", "const B"), ("B", "A"), ("const B", "const A")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    expect(u.types.len() == 4 && edges == want, || {
        format!("{:?} {edges:?}", u.types)
    })?;
    let w = work();
    build(&w.dir, &["const_dispatch.ool"], "c.ool1")?;
    let o = ool(&w.dir, &["run", "--trace-dispatch", "c.ool1"]);
    let trace: Vec<String> = stderr(&o).lines().map(str::to_string).collect();
    expect(
        stdout(&o) == "1\n2\n"
            && code(&o) == 21
            && trace[0].contains("dyn=[#0 A, #2 B]")
            && trace[0].contains("-> #0 @m(A, B)")
            && trace[1].contains("dyn=[#1 const A, #2 B]")
            && trace[1].contains("-> #1 @m(const A, B)"),
        || format!("stdout {:?} trace {trace:?}", stdout(&o)),
    )?;
    Ok("4 types, 4 edges; const A -> @m(const A, B), A -> @m(A, B)".into())
}

const RETURN_SENTINELS: &str = "\
class A { int a; };
class B { int b; };
class C: public A, public B { int c; };
B @m(B x, B y) {
    return x;
}
C @m(C x, C y) {
    return x;
}
int f1(B b) {
    print(b.b);
    return 0;
}
int f2(B b1, B b2) {
    return f1(@m(b1, b2));
}
int main() {
    C c1, c2;
    print(c1.c);
    return f2(c1, c2);
}
";

fn by_value_and_return_realignment() -> Check {
    let w = work();
    build(&w.dir, &["byvalue_dispatch.ool"], "bv.ool1")?;
    let o = ool(&w.dir, &["run", "--trace-dispatch", "bv.ool1"]);
    expect(
        code(&o) == 2 && stderr(&o).contains("dyn=[#2 B]") && stderr(&o).contains("-> #1 @m(B)"),
        || format!("by-value: exit {} {}", code(&o), stderr(&o)),
    )?;
    build(&w.dir, &["return_realign.ool"], "rr.ool1")?;
    let o = ool(&w.dir, &["run", "--trace-dispatch", "rr.ool1"]);
    expect(
        code(&o) == 2 && stdout(&o) == "2\n" && stderr(&o).contains("-> #1 @m(C, C)"),
        || format!("return: exit {} {:?} {}", code(&o), stdout(&o), stderr(&o)),
    )?;
    // C is class id 2 with own field index 0; B is class id 1
    let out = run_program(RETURN_SENTINELS, true)?;
    let vals: Vec<i64> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    expect(
        out.result.is_ok() && vals.len() == 2 && vals[0] % 1000 == 20 && vals[1] == vals[0] / 1000 * 1000 + 10,
        || format!("sentinel reads {vals:?}"),
    )?;
    expect(out.final_secondary_depth == 0, || "secondary stack not empty".into())?;
    Ok(format!(
        "copied B dispatches as B; returned C read as B sentinel {}",
        vals[1]
    ))
}

fn oracle_equivalence_suite() -> Check {
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for seed in 0..600u64 {
        let f = random_fixture(&mut StdRng::seed_from_u64(0xACCE_0000 + seed));
        let kind = match check_fixture(&f).map_err(|e| format!("seed {seed}: {e}"))? {
            Checked::CompileRejected => "compile-rejected",
            Checked::Linked => "linked",
            Checked::LinkRejected => "link-rejected",
        };
        *tally.entry(kind).or_default() += 1;
    }
    expect(tally.get("linked").copied().unwrap_or(0) >= 100, || {
        format!("{tally:?}")
    })?;
    Ok(format!("600 fixtures, zero discrepancies {tally:?}"))
}

fn runtime_invariant_suite() -> Check {
    let mut ran = 0;
    let mut calls = 0;
    let mut by_value = 0;
    let mut writes = 0;
    let mut subsumed = 0;
    let mut seed = 0u64;
    while ran < 250 {
        expect(seed < 5000, || format!("only {ran} programs ran"))?;
        if let Some(p) = random_program(&mut StdRng::seed_from_u64(0x5EED_0000 + seed)) {
            if let Some(s) = check_program(&p).map_err(|e| format!("seed {seed}: {e}"))? {
                ran += 1;
                calls += s.calls;
                by_value += s.by_value_args;
                writes += s.by_ref_writes;
                subsumed += s.subsumed_args;
            }
        }
        seed += 1;
    }
    Ok(format!(
        "{ran} programs, {calls} dispatches, {by_value} copied args, {writes} by-ref writes, {subsumed} subsumed, zero violations"
    ))
}

fn separate_compilation() -> Check {
    let w = work();
    let srcs = [
        "latent_conflict.ool",
        "latent_conflict_resolver.ool",
        "latent_conflict_main.ool",
    ];
    for s in srcs {
        compile_ok(&w.dir, s)?;
    }
    // link and run where no source or header exists
    let objs = w.dir.join("objs");
    fs::create_dir(&objs).unwrap();
    for s in srcs {
        let m = s.replace(".ool", ".oom");
        fs::copy(w.dir.join(&m), objs.join(&m)).unwrap();
    }
    let listing: Vec<String> = fs::read_dir(&objs)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    expect(listing.iter().all(|n| n.ends_with(".oom")), || format!("{listing:?}"))?;
    let o = ool(
        &objs,
        &[
            "link",
            "latent_conflict.oom",
            "latent_conflict_resolver.oom",
            "latent_conflict_main.oom",
            "-o",
            "p.ool1",
        ],
    );
    expect(code(&o) == 0, || format!("link in object dir: {}", stderr(&o)))?;
    let o = ool(&objs, &["run", "p.ool1"]);
    expect(code(&o) == 3, || format!("run exit {}", code(&o)))?;

    // a client typechecks the same against a header as against inline classes
    let header = fs::read_to_string(fixtures().join("two_bases.oolh")).unwrap();
    let client = fs::read_to_string(fixtures().join("latent_conflict.ool")).unwrap();
    // the header goes on one line so spans keep their line numbers
    let inline = client.replace("#include \"two_bases.oolh\"", &header.replace('\n', " "));
    let hdrs = BTreeMap::from([("two_bases.oolh".to_string(), header)]);
    let a = compile_source("client.ool", &client, &hdrs)
        .module
        .ok_or("header client failed")?;
    let b = compile_source("client.ool", &inline, &BTreeMap::new())
        .module
        .ok_or("inline client failed")?;
    expect(dump_module(&a) == dump_module(&b), || {
        "header and inline clients differ".into()
    })?;

    // declaration-only modules merge with the full ones into identical tables
    let full: Vec<_> = srcs
        .iter()
        .map(|s| compile_file(&w.dir.join(s)).unwrap().module.unwrap())
        .collect();
    let reference = link(&full).map_err(|d| format!("{d:?}"))?;
    let mut with_decls = full.clone();
    with_decls.push(declarations_only(&full[1]));
    with_decls.push(declarations_only(&full[2]));
    let merged = link(&with_decls).map_err(|d| format!("with declarations: {d:?}"))?;
    expect(dump_tables(&merged) == dump_tables(&reference), || {
        "tables differ".into()
    })?;

    // a stripped provider still links, and only its bodies are missed
    let stripped = ool(
        &w.dir,
        &[
            "compile",
            "latent_conflict_resolver.ool",
            "--declarations-only",
            "-o",
            "decl.oom",
        ],
    );
    expect(code(&stripped) == 0, || stderr(&stripped))?;
    let o = ool(
        &w.dir,
        &[
            "link",
            "latent_conflict.oom",
            "decl.oom",
            "latent_conflict_main.oom",
            "-o",
            "q.ool1",
        ],
    );
    let codes: BTreeSet<String> = error_codes(&o).into_iter().collect();
    expect(
        code(&o) == 1 && codes == BTreeSet::from([Code::E_MISSING_BODY.as_str().to_string()]),
        || format!("stripped link: {}", stderr(&o)),
    )?;
    Ok("linked from .oom only; header == inline; declarations merge to identical tables".into())
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 12] = [
        ("dynamic selection under subsumption", subsumption_output),
        (
            "covariant override rejected, binary method selected",
            covariant_rejected_binary_selected,
        ),
        ("ambiguous return vs latent conflict", ambiguous_returns_discriminated),
        ("link-time anomalies", link_anomalies),
        ("pole groups and dispatch matrix", pole_table_reproduced),
        ("argument realignment arithmetic", realignment_arithmetic),
        (
            "return constraint over all applicable",
            return_check_covers_all_applicable,
        ),
        ("const dispatch universe", const_dispatch),
        (
            "by-value dispatch and return realignment",
            by_value_and_return_realignment,
        ),
        ("oracle equivalence", oracle_equivalence_suite),
        ("runtime invariants", runtime_invariant_suite),
        ("separate compilation", separate_compilation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
