//! Textual form of the IR: a deterministic printer and a parser that
//! round-trip every verifier-clean module.
//!
//! Grammar sketch:
//!
//! ```text
//! module   ::= "module" "{" (global | func)* "}"
//! global   ::= "global" "@name" "=" "@name"
//! func     ::= "func" "@name" "(" (%id ":" type),* ")" "->" type "{" body "}"
//! body     ::= op* ("^label" "(" params ")" ":" op*)*
//! op       ::= (%id "=")? NAME operands? attr-dict? region* (":" type)?
//! region   ::= "{" ("^" "(" params ")" ":")? op* "}"
//! type     ::= "!lp.t" | "i1" | "i8" | "i32" | "i64" | "!rgn.val" "<" type,* ">"
//! ```
//!
//! `lp.int`/`lp.bigint` spell their literal inline (`lp.int 42 : i64`),
//! `rgn.run` uses call syntax (`rgn.run %r(%a)`), `rgn.val` omits its
//! inferable result type, and the CFG terminators use labeled-block forms
//! (`br ^bb1(%a)`, `cond_br %c, ^bb1, ^bb2`, `switch_br %s [0 -> ^bb1,
//! default -> ^bb2]`, `ret %v`). Comments run from `//` to end of line.

mod lexer;
mod parser;
mod printer;

pub use parser::{parse_module, ParseError};
pub use printer::print_module;

/// File extension for IR files.
pub const IR_EXTENSION: &str = ".lz.mlir";

/// A half-open byte span with 1-based line/column of its start and end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn point(offset: usize, line: u32, col: u32) -> Self {
        SourceSpan { start: offset, end: offset, line, col, end_line: line, end_col: col }
    }
}
