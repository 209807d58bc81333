use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand};

use ool::diag::{format_diagnostics, sort_diagnostics, Diagnostic, Severity};
use ool::driver::compile_file;
use ool::hierarchy::Hierarchy;
use ool::objmod::{self, declarations_only, dump_module, ObjectModule, IMAGE_MAGIC, MODULE_MAGIC};
use ool::prelink::{self, dump_tables, link, LinkedProgram};
use ool::runtime::{self, Options};

const OK: u8 = 0;
const DIAGNOSTICS: u8 = 1;
const USAGE: u8 = 2;
const FAULT: u8 = 3;

/// Interpreter stack; recursion in the program maps onto host recursion.
const RUN_STACK: usize = 512 << 20;

#[derive(Parser)]
#[command(name = "ool", version, about = "Compile, link, run and inspect multimethod programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck one source file into an object module.
    Compile {
        source: PathBuf,
        /// Defaults to the source path with an `.oom` extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Treat warnings as errors.
        #[arg(long)]
        werror: bool,
        /// Print at most this many errors.
        #[arg(long, value_name = "N")]
        max_errors: Option<usize>,
        /// Strip every body from the written module.
        #[arg(long)]
        declarations_only: bool,
    },
    /// Pre-link object modules into an executable image.
    Link {
        #[arg(required = true)]
        modules: Vec<PathBuf>,
        /// Defaults to the first module's path with an `.ool1` extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        max_errors: Option<usize>,
    },
    /// Execute a linked image; its exit code is main's return value.
    Run {
        image: PathBuf,
        /// Print one line per multimethod dispatch to stderr.
        #[arg(long)]
        trace_dispatch: bool,
    },
    /// Print the contents of an object module.
    DumpModule { module: PathBuf },
    /// Print the dispatch structures of a linked image.
    DumpTables { image: PathBuf },
    /// Print the object layout of a class from a source, module or image.
    DumpLayout { file: PathBuf, class: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(DIAGNOSTICS)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, String> {
    match cmd {
        Cmd::Compile {
            source,
            output,
            werror,
            max_errors,
            declarations_only: strip,
        } => compile(&source, output, werror, max_errors, strip),
        Cmd::Link {
            modules,
            output,
            max_errors,
        } => link_cmd(&modules, output, max_errors),
        Cmd::Run { image, trace_dispatch } => run(&image, trace_dispatch),
        Cmd::DumpModule { module } => {
            print!("{}", dump_module(&read_module(&module)?));
            Ok(OK)
        }
        Cmd::DumpTables { image } => {
            print!("{}", dump_tables(&read_image(&image)?));
            Ok(OK)
        }
        Cmd::DumpLayout { file, class } => dump_layout(&file, &class),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_module(path: &Path) -> Result<ObjectModule, String> {
    objmod::deserialize(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_image(path: &Path) -> Result<LinkedProgram, String> {
    prelink::deserialize(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Prints diagnostics to stderr, keeping at most `max_errors` errors.
fn report(diags: &mut [Diagnostic], max_errors: Option<usize>) {
    sort_diagnostics(diags);
    let limit = max_errors.unwrap_or(usize::MAX);
    let mut shown = Vec::new();
    let mut errors = 0;
    let mut hidden = 0;
    for d in diags.iter() {
        if d.is_error() {
            errors += 1;
            if errors > limit {
                hidden += 1;
                continue;
            }
        }
        shown.push(d.clone());
    }
    let mut err = io::stderr().lock();
    let _ = err.write_all(format_diagnostics(&shown).as_bytes());
    if hidden > 0 {
        let _ = writeln!(err, "{hidden} more errors not shown");
    }
}

fn compile(
    source: &Path,
    output: Option<PathBuf>,
    werror: bool,
    max_errors: Option<usize>,
    strip: bool,
) -> Result<u8, String> {
    let compiled = compile_file(source).map_err(|e| format!("{}: {e}", source.display()))?;
    let mut diags = compiled.diagnostics;
    if werror {
        for d in &mut diags {
            d.severity = Severity::Error;
        }
    }
    report(&mut diags, max_errors);
    let module = match compiled.module {
        Some(m) if !diags.iter().any(Diagnostic::is_error) => m,
        _ => return Ok(DIAGNOSTICS),
    };
    let module = if strip { declarations_only(&module) } else { module };
    let out = output.unwrap_or_else(|| source.with_extension("oom"));
    write(&out, &objmod::serialize(&module))?;
    Ok(OK)
}

fn link_cmd(inputs: &[PathBuf], output: Option<PathBuf>, max_errors: Option<usize>) -> Result<u8, String> {
    let modules = inputs.iter().map(|p| read_module(p)).collect::<Result<Vec<_>, _>>()?;
    match link(&modules) {
        Ok(p) => {
            let out = output.unwrap_or_else(|| inputs[0].with_extension("ool1"));
            write(&out, &prelink::serialize(&p))?;
            Ok(OK)
        }
        Err(mut diags) => {
            report(&mut diags, max_errors);
            Ok(DIAGNOSTICS)
        }
    }
}

fn run(image: &Path, trace_dispatch: bool) -> Result<u8, String> {
    let program = read_image(image)?;
    let opts = Options {
        trace_dispatch,
        ..Options::default()
    };
    let outcome = thread::Builder::new()
        .stack_size(RUN_STACK)
        .spawn(move || runtime::run(&program, &opts))
        .map_err(|e| format!("cannot start interpreter: {e}"))?
        .join()
        .map_err(|_| "interpreter panicked".to_string())?;
    let mut out = io::stdout().lock();
    let _ = out.write_all(&outcome.stdout);
    let _ = out.flush();
    let mut err = io::stderr().lock();
    for line in &outcome.trace {
        let _ = writeln!(err, "{line}");
    }
    match outcome.result {
        // the process exit status keeps the low byte
        Ok(code) => Ok(code as u8),
        Err(f) => {
            let _ = writeln!(err, "runtime fault: {}", f.message);
            Ok(FAULT)
        }
    }
}

fn dump_layout(file: &Path, class: &str) -> Result<u8, String> {
    let bytes = read(file)?;
    let classes = if bytes.starts_with(&MODULE_MAGIC) {
        read_module(file)?.classes
    } else if bytes.starts_with(&IMAGE_MAGIC) {
        read_image(file)?.classes
    } else {
        let compiled = compile_file(file).map_err(|e| format!("{}: {e}", file.display()))?;
        match compiled.module {
            Some(m) => m.classes,
            None => {
                report(&mut compiled.diagnostics.clone(), None);
                return Ok(DIAGNOSTICS);
            }
        }
    };
    let h = Hierarchy::build(&classes).map_err(|es| es.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))?;
    match h.dump_layout(class) {
        Some(text) => {
            print!("{text}");
            Ok(OK)
        }
        None => Err(format!("no class `{class}` in {}", file.display())),
    }
}
