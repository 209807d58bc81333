//! Separate typechecking of one module.

mod check;
pub mod invocation;
pub mod ir;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::hierarchy::ClassDef;

pub use check::check_module;

/// Everything a module contributes to a program: the classes it can see,
/// its multimethod specializations and static functions (with bodies where
/// this module defines them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedModule {
    pub name: String,
    pub classes: Vec<ClassDef>,
    pub specs: Vec<ir::Spec>,
    pub funcs: Vec<ir::Func>,
    pub has_main: bool,
    pub warnings: Vec<Diagnostic>,
}
