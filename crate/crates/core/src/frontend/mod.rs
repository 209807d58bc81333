//! Lexing, parsing, printing and member desugaring.

pub mod ast;
pub mod desugar;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use desugar::desugar_members;
pub use parser::{parse, parse_expr};
pub use pretty::{print_ast, print_expr};
