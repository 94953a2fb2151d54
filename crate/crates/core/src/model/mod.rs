//! Problem definitions: expressions, jets and problem instances.

pub mod expr;
pub mod jet;
pub mod problem;

pub use expr::{parse_expr, Expr, Func};
pub use jet::{eval_jet, eval_value, Jet};
pub use problem::{parse_problem, BlockEval, ConeBlock, Evaluation, Multipliers, ProblemInstance};
