use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ool(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ool"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn err(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(files: &[(&str, &str)]) -> tempfile::TempDir {
    let t = tempfile::tempdir().unwrap();
    for (name, text) in files {
        fs::write(t.path().join(name), text).unwrap();
    }
    t
}

const TWO_ERRORS: &str = "int f() { return x; }\nint g() { return y; }\nint h() { return z; }\n";

#[test]
fn usage_errors_exit_two() {
    let t = scratch(&[]);
    assert_eq!(code(&ool(t.path(), &[])), 2);
    assert_eq!(code(&ool(t.path(), &["frobnicate"])), 2);
    assert_eq!(code(&ool(t.path(), &["link"])), 2);
    assert_eq!(code(&ool(t.path(), &["compile", "a.ool", "--max-errors", "many"])), 2);
    assert_eq!(code(&ool(t.path(), &["--help"])), 0);
}

#[test]
fn diagnostics_are_sorted_lines() {
    let t = scratch(&[("bad.ool", TWO_ERRORS)]);
    let o = ool(t.path(), &["compile", "bad.ool"]);
    assert_eq!(code(&o), 1);
    let lines: Vec<String> = err(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3, "{lines:?}");
    assert!(lines[0].starts_with("error E_UNKNOWN_NAME bad.ool:1:"), "{lines:?}");
    assert!(lines[2].starts_with("error E_UNKNOWN_NAME bad.ool:3:"), "{lines:?}");
    assert!(!t.path().join("bad.oom").exists());
}

#[test]
fn max_errors_truncates() {
    let t = scratch(&[("bad.ool", TWO_ERRORS)]);
    let o = ool(t.path(), &["compile", "bad.ool", "--max-errors", "1"]);
    assert_eq!(code(&o), 1);
    assert_eq!(err(&o).lines().count(), 2);
    assert!(err(&o).ends_with("2 more errors not shown\n"), "{}", err(&o));
}

#[test]
fn werror_promotes_warnings() {
    let src = "class A { int a; };\nclass B { int b; };\nclass C: public A, public B { int c; };\nint @m(A x, A y);\nint @m(B x, B y);\n";
    let t = scratch(&[("w.ool", src)]);
    let o = ool(t.path(), &["compile", "w.ool"]);
    assert_eq!(code(&o), 0);
    assert!(err(&o).starts_with("warning W_LATENT_CONFLICT w.ool:"), "{}", err(&o));
    fs::remove_file(t.path().join("w.oom")).unwrap();
    let o = ool(t.path(), &["compile", "w.ool", "--werror"]);
    assert_eq!(code(&o), 1);
    assert!(err(&o).starts_with("error W_LATENT_CONFLICT"), "{}", err(&o));
    assert!(!t.path().join("w.oom").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let src = "class A { int a; };\nclass B: public A { int b; };\nint @m(A x) { return 1; }\nint @m(B x) { return 2; }\nint main() { B b; return @m(b); }\n";
    let t = scratch(&[("p.ool", src)]);
    let mut seen = Vec::new();
    for _ in 0..2 {
        assert_eq!(code(&ool(t.path(), &["compile", "p.ool"])), 0);
        assert_eq!(code(&ool(t.path(), &["link", "p.oom"])), 0);
        let m = fs::read(t.path().join("p.oom")).unwrap();
        let i = fs::read(t.path().join("p.ool1")).unwrap();
        let tables = ool(t.path(), &["dump-tables", "p.ool1"]).stdout;
        let module = ool(t.path(), &["dump-module", "p.oom"]).stdout;
        let trace = ool(t.path(), &["run", "--trace-dispatch", "p.ool1"]);
        assert_eq!(code(&trace), 2);
        seen.push((m, i, tables, module, trace.stderr));
    }
    assert_eq!(seen[0], seen[1]);
    let text = String::from_utf8(seen[0].3.clone()).unwrap();
    assert!(!text.contains(&t.path().to_string_lossy().into_owned()));
}

#[test]
fn runtime_fault_exits_three() {
    let t = scratch(&[(
        "z.ool",
        "int d(int x) { return 10 / x; }\nint main() { print(1); return d(0); }\n",
    )]);
    assert_eq!(code(&ool(t.path(), &["compile", "z.ool"])), 0);
    assert_eq!(code(&ool(t.path(), &["link", "z.oom", "-o", "z.ool1"])), 0);
    let o = ool(t.path(), &["run", "z.ool1"]);
    assert_eq!(code(&o), 3);
    assert_eq!(o.stdout, b"1\n");
    assert!(err(&o).contains("runtime fault"), "{}", err(&o));
}

#[test]
fn exit_code_is_mains_result() {
    let t = scratch(&[
        ("e.ool", "int main() { return 42; }\n"),
        ("z.ool", "int main() { return 0; }\n"),
    ]);
    for (src, want) in [("e", 42), ("z", 0)] {
        assert_eq!(code(&ool(t.path(), &["compile", &format!("{src}.ool")])), 0);
        assert_eq!(code(&ool(t.path(), &["link", &format!("{src}.oom")])), 0);
        let o = ool(t.path(), &["run", &format!("{src}.ool1")]);
        assert_eq!(code(&o), want);
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn wrong_container_is_reported() {
    let t = scratch(&[("p.ool", "int main() { return 0; }\n")]);
    assert_eq!(code(&ool(t.path(), &["compile", "p.ool"])), 0);
    let o = ool(t.path(), &["run", "p.oom"]);
    assert_eq!(code(&o), 1);
    assert!(err(&o).contains("bad magic"), "{}", err(&o));
    let o = ool(t.path(), &["link", "p.ool"]);
    assert_eq!(code(&o), 1);
    let o = ool(t.path(), &["dump-module", "missing.oom"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn layout_from_source_module_and_image() {
    let src = "class A { int a; };\nclass B: virtual public A { int b; };\nint main() { return 0; }\n";
    let t = scratch(&[("l.ool", src)]);
    assert_eq!(code(&ool(t.path(), &["compile", "l.ool"])), 0);
    assert_eq!(code(&ool(t.path(), &["link", "l.oom"])), 0);
    let want = "class B (id 1) size 2 nv_size 1\nsubobjects:\n  @0   B          B\n  @1   A          B > A  (virtual)\nslots:\n  0    int    B::b  in @0\n  1    int    A::a  in @1\n";
    for f in ["l.ool", "l.oom", "l.ool1"] {
        let o = ool(t.path(), &["dump-layout", f, "B"]);
        assert_eq!(String::from_utf8_lossy(&o.stdout), want, "{f}");
    }
    assert_eq!(code(&ool(t.path(), &["dump-layout", "l.ool", "Q"])), 1);
}

#[test]
fn header_bodies_rejected() {
    let t = scratch(&[
        ("h.oolh", "class A { int a; };\nint f() { return 1; }\n"),
        ("u.ool", "#include \"h.oolh\"\nint main() { return 0; }\n"),
        ("v.ool", "#include \"nope.oolh\"\nint main() { return 0; }\n"),
    ]);
    let o = ool(t.path(), &["compile", "u.ool"]);
    assert_eq!(code(&o), 1);
    assert!(err(&o).starts_with("error E_HEADER_BODY h.oolh:2:"), "{}", err(&o));
    let o = ool(t.path(), &["compile", "v.ool"]);
    assert!(err(&o).starts_with("error E_INCLUDE v.ool:1:"), "{}", err(&o));
}
