//! Compiler, pre-linker and runtime for a small object-oriented language with
//! symmetric multimethods.

pub mod diag;
pub mod driver;
pub mod frontend;
pub mod hierarchy;
pub mod objmod;
pub mod oracle;
pub mod prelink;
pub mod runtime;
pub mod typecheck;
pub mod types;
