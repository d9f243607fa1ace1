//! A compact SSA compiler toolkit for a small functional language.
//!
//! The IR represents functional constructs (data constructors, pattern
//! matching, closures, join points, reference counting) as ordinary SSA
//! operations whose control flow lives in nested regions. Sub-expressions
//! become first-class *region values* (`rgn.val`/`rgn.run`), which lets
//! classical SSA optimizations (DCE, CSE, folding, value numbering) operate
//! on them unchanged. Programs exist at three levels:
//!
//! 1. **lp** — structured functional ops (`lp.switch`, `lp.joinpoint`, ...),
//! 2. **rgn** — regions as SSA values, selected by `select`/`switch` and
//!    entered by `rgn.run`,
//! 3. **cfg** — a flat control-flow graph with `br`/`cond_br`/`switch_br`.
//!
//! A reference-counting interpreter evaluates all three levels and serves as
//! the differential oracle for every pass and lowering.

pub mod frontend;
pub mod interp;
pub mod ir;
pub mod lower;
pub mod ops;
pub mod passes;
pub mod textual;
pub mod verify;

pub use ir::{
    count_uses, erase_op, replace_all_uses, structurally_equal, structurally_equal_funcs, AttrIR,
    AttrMap, BlockIR, Diagnostic, FuncIR, ModuleIR, OpIR, OpPath, RegionIR, RewriteError, Severity,
    TypeIR, ValueId,
};
pub use verify::{verify_lp, verify_module, verify_rgn};
