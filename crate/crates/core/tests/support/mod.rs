pub mod equivalence;
pub mod randprog;
pub mod randrun;
