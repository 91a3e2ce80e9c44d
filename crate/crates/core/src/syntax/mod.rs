//! pWHILE concrete syntax, typing and the operation table.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod ops;
pub mod parser;
pub mod printer;
pub mod types;

pub use ast::{desugar_bounded, Cmd, DistExpr, Expr, Lit, Program, Side, Ty, TypingContext};
pub use lexer::{Span, SyntaxError};
pub use ops::OpTable;
pub use parser::{parse, parse_cmd, parse_with, ParseError};
pub use printer::{print_cmd, print_cmd_inline, print_expr, print_program};
pub use types::{typecheck, TypeEnv, TypeError};
