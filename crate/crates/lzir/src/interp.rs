//! Reference-counting heap interpreter.
//!
//! One evaluator executes programs at every level: structured functional ops,
//! region values, and flat CFG. Calls are driven by an explicit frame stack
//! (never host recursion), so `musttail` frame reuse and deep non-tail
//! recursion both behave faithfully; `peak_frames` reports the high
//! watermark.
//!
//! Reference-count discipline in strict mode:
//! * allocations (`lp.construct`, `lp.bigint`, `lp.pap`, `lp.papextend`)
//!   produce a cell with count 1 owned by the creating frame;
//! * storing a reference into a new cell increments the stored reference
//!   (the cell owns its own share); reads (`lp.project`) borrow;
//! * `lp.inc`/`lp.dec` adjust by exactly 1; a decrement to zero frees the
//!   cell and recursively releases its fields or held arguments;
//! * counts on unboxed integers are no-ops.
//!
//! In unchecked mode nothing is freed and `lp.inc`/`lp.dec` do nothing, so
//! count-free programs run unchanged.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::ir::*;
use crate::ops::runtime_fn;

/// A program input or rendered result: an integer or a constructor tree
/// (results may also be closures).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(BigInt),
    Ctor(i64, Vec<Value>),
    Closure { fn_symbol: String, arity: usize, held: Vec<Value> },
}

impl Value {
    pub fn int(v: i64) -> Self {
        Value::Int(BigInt::from(v))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Ctor(tag, fields) => {
                write!(f, "C{tag}(")?;
                for (i, field) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{field}")?;
                }
                write!(f, ")")
            }
            Value::Closure { fn_symbol, arity, held } => {
                write!(f, "<closure @{fn_symbol}/{arity}")?;
                if !held.is_empty() {
                    write!(f, " held")?;
                    for h in held {
                        write!(f, " {h}")?;
                    }
                }
                write!(f, ">")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RcMode {
    /// Enforce the count discipline; free cells at zero; trap on misuse.
    Strict,
    /// Never free; count ops are no-ops.
    Unchecked,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HeapReport {
    pub live_at_exit: u64,
    pub rc_underflows: u64,
    pub use_after_free: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramResult {
    pub value: Value,
    pub steps: u64,
    pub peak_frames: usize,
    pub heap: HeapReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrapReason {
    RcUnderflow,
    UseAfterFree,
    ProjectOutOfBounds,
    NotAConstructor,
    NotAClosure,
    NotANumber,
    UnknownSymbol,
    BadSwitch,
    ArityMismatch,
    RegionEscape,
    OutOfFuel,
    Internal,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("trap: {reason:?}: {message}")]
pub struct Trap {
    pub reason: TrapReason,
    pub message: String,
}

fn trap<T>(reason: TrapReason, message: impl Into<String>) -> Result<T, Trap> {
    Err(Trap { reason, message: message.into() })
}

/// Values representable in 62 bits stay unboxed.
fn fits_small(v: &BigInt) -> bool {
    let lo = -(BigInt::from(1u8) << 61u8);
    let hi = (BigInt::from(1u8) << 61u8) - 1;
    *v >= lo && *v <= hi
}

const DEFAULT_FUEL: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
enum RtVal<'m> {
    Small(i64),
    Ref(usize),
    Rgn(&'m RegionIR),
}

#[derive(Clone, Debug)]
enum HeapVal<'m> {
    Ctor { tag: i64, fields: Vec<RtVal<'m>> },
    Big(BigInt),
    Closure { fn_symbol: &'m str, arity: usize, held: Vec<RtVal<'m>> },
}

#[derive(Clone, Debug)]
struct Cell<'m> {
    value: HeapVal<'m>,
    rc: u64,
    freed: bool,
}

#[derive(Clone, Copy)]
enum ExecKind<'m> {
    Plain,
    JoinScope(&'m OpIR),
}

struct Exec<'m> {
    region: &'m RegionIR,
    kind: ExecKind<'m>,
    block: usize,
    op: usize,
}

enum Pending<'m> {
    None,
    Assign(ValueId),
    Extend { dst: ValueId, rest: Vec<RtVal<'m>> },
}

struct Frame<'m> {
    func: &'m FuncIR,
    env: Vec<Option<RtVal<'m>>>,
    execs: Vec<Exec<'m>>,
    pending: Pending<'m>,
}

impl<'m> Frame<'m> {
    fn new(func: &'m FuncIR, args: Vec<RtVal<'m>>) -> Self {
        let mut env = vec![None; func.num_values()];
        for (p, a) in func.entry_params().iter().zip(args) {
            env[p.0 as usize] = Some(a);
        }
        Frame {
            func,
            env,
            execs: vec![Exec { region: &func.body, kind: ExecKind::Plain, block: 0, op: 0 }],
            pending: Pending::None,
        }
    }
}

struct Machine<'m> {
    module: &'m ModuleIR,
    mode: RcMode,
    heap: Vec<Cell<'m>>,
    frames: Vec<Frame<'m>>,
    globals: HashMap<&'m str, RtVal<'m>>,
    steps: u64,
    peak_frames: usize,
    underflows: u64,
    uaf: u64,
    fuel: u64,
}

/// Evaluates `entry` on `args` and reports the rendered result plus
/// execution metrics. Traps are returned, never raised.
pub fn eval(
    module: &ModuleIR,
    entry: &str,
    args: &[Value],
    mode: RcMode,
) -> Result<ProgramResult, Trap> {
    eval_with_fuel(module, entry, args, mode, DEFAULT_FUEL)
}

pub fn eval_with_fuel(
    module: &ModuleIR,
    entry: &str,
    args: &[Value],
    mode: RcMode,
    fuel: u64,
) -> Result<ProgramResult, Trap> {
    let mut m = Machine {
        module,
        mode,
        heap: Vec::new(),
        frames: Vec::new(),
        globals: HashMap::new(),
        steps: 0,
        peak_frames: 0,
        underflows: 0,
        uaf: 0,
        fuel,
    };
    m.run(entry, args)
}

impl<'m> Machine<'m> {
    fn alloc(&mut self, value: HeapVal<'m>) -> usize {
        self.heap.push(Cell { value, rc: 1, freed: false });
        self.heap.len() - 1
    }

    fn cell(&mut self, idx: usize) -> Result<&Cell<'m>, Trap> {
        if self.heap[idx].freed {
            self.uaf += 1;
            return trap(TrapReason::UseAfterFree, format!("access to freed cell #{idx}"));
        }
        Ok(&self.heap[idx])
    }

    fn inc_ref(&mut self, v: RtVal<'m>) -> Result<(), Trap> {
        if self.mode == RcMode::Unchecked {
            return Ok(());
        }
        if let RtVal::Ref(i) = v {
            if self.heap[i].freed {
                self.uaf += 1;
                return trap(TrapReason::UseAfterFree, format!("increment of freed cell #{i}"));
            }
            self.heap[i].rc += 1;
        }
        Ok(())
    }

    fn dec_ref(&mut self, v: RtVal<'m>) -> Result<(), Trap> {
        if self.mode == RcMode::Unchecked {
            return Ok(());
        }
        let mut work = vec![v];
        while let Some(v) = work.pop() {
            let RtVal::Ref(i) = v else { continue };
            if self.heap[i].freed {
                self.underflows += 1;
                return trap(TrapReason::RcUnderflow, format!("decrement of freed cell #{i}"));
            }
            self.heap[i].rc -= 1;
            if self.heap[i].rc == 0 {
                self.heap[i].freed = true;
                match &self.heap[i].value {
                    HeapVal::Ctor { fields, .. } => work.extend(fields.iter().copied()),
                    HeapVal::Closure { held, .. } => work.extend(held.iter().copied()),
                    HeapVal::Big(_) => {}
                }
            }
        }
        Ok(())
    }

    fn input_to_rt(&mut self, v: &Value) -> Result<RtVal<'m>, Trap> {
        match v {
            Value::Int(i) => {
                if fits_small(i) {
                    Ok(RtVal::Small(i.to_i64().expect("62-bit value fits i64")))
                } else {
                    Ok(RtVal::Ref(self.alloc(HeapVal::Big(i.clone()))))
                }
            }
            Value::Ctor(tag, fields) => {
                let fields = fields.iter().map(|f| self.input_to_rt(f)).collect::<Result<Vec<_>, _>>()?;
                // ownership of child cells transfers into the tree
                Ok(RtVal::Ref(self.alloc(HeapVal::Ctor { tag: *tag, fields })))
            }
            Value::Closure { .. } => trap(TrapReason::NotAConstructor, "closure literals cannot be inputs"),
        }
    }

    fn render(&self, v: RtVal<'m>) -> Result<Value, Trap> {
        match v {
            RtVal::Small(i) => Ok(Value::Int(BigInt::from(i))),
            RtVal::Ref(i) => {
                let cell = &self.heap[i];
                if cell.freed {
                    return trap(TrapReason::UseAfterFree, "result references a freed cell");
                }
                match &cell.value {
                    HeapVal::Big(b) => Ok(Value::Int(b.clone())),
                    HeapVal::Ctor { tag, fields } => {
                        let fields = fields.iter().map(|f| self.render(*f)).collect::<Result<Vec<_>, _>>()?;
                        Ok(Value::Ctor(*tag, fields))
                    }
                    HeapVal::Closure { fn_symbol, arity, held } => {
                        let held = held.iter().map(|h| self.render(*h)).collect::<Result<Vec<_>, _>>()?;
                        Ok(Value::Closure { fn_symbol: fn_symbol.to_string(), arity: *arity, held })
                    }
                }
            }
            RtVal::Rgn(_) => trap(TrapReason::RegionEscape, "result is a region value"),
        }
    }

    fn numeric(&mut self, v: RtVal<'m>) -> Result<BigInt, Trap> {
        match v {
            RtVal::Small(i) => Ok(BigInt::from(i)),
            RtVal::Ref(i) => match &self.cell(i)?.value {
                HeapVal::Big(b) => Ok(b.clone()),
                _ => trap(TrapReason::NotANumber, "expected an integer"),
            },
            RtVal::Rgn(_) => trap(TrapReason::NotANumber, "expected an integer"),
        }
    }

    fn number_to_rt(&mut self, v: BigInt) -> RtVal<'m> {
        if fits_small(&v) {
            RtVal::Small(v.to_i64().expect("62-bit value fits i64"))
        } else {
            RtVal::Ref(self.alloc(HeapVal::Big(v)))
        }
    }

    fn builtin(&mut self, name: &str, args: &[RtVal<'m>]) -> Result<RtVal<'m>, Trap> {
        match name {
            "nat_dec_eq" => {
                let a = self.numeric(args[0])?;
                let b = self.numeric(args[1])?;
                Ok(RtVal::Small((a == b) as i64))
            }
            "nat_add" => {
                let a = self.numeric(args[0])?;
                let b = self.numeric(args[1])?;
                let sum = a + b;
                Ok(self.number_to_rt(sum))
            }
            _ => trap(TrapReason::UnknownSymbol, format!("unknown runtime function @{name}")),
        }
    }

    fn arity_of(&self, sym: &str) -> Result<usize, Trap> {
        if let Some(f) = self.module.funcs.get(sym) {
            return Ok(f.param_types.len());
        }
        if let Some(r) = runtime_fn(sym) {
            return Ok(r.arity);
        }
        trap(TrapReason::UnknownSymbol, format!("@{sym} is not callable"))
    }

    fn run(&mut self, entry: &str, args: &[Value]) -> Result<ProgramResult, Trap> {
        // initialization phase: populate global closure slots
        let globals: Vec<(&'m str, &'m str)> = self
            .module
            .globals
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        let mut slot_cells = Vec::new();
        for (slot, init) in globals {
            let arity = self.arity_of(init)?;
            let idx = self.alloc(HeapVal::Closure { fn_symbol: init, arity, held: Vec::new() });
            self.globals.insert(slot, RtVal::Ref(idx));
            slot_cells.push(idx);
        }

        let Some(func) = self.module.funcs.get(entry) else {
            return trap(TrapReason::UnknownSymbol, format!("no function @{entry}"));
        };
        if func.param_types.len() != args.len() {
            return trap(
                TrapReason::ArityMismatch,
                format!("@{entry} expects {} arguments, got {}", func.param_types.len(), args.len()),
            );
        }
        let mut rt_args = Vec::new();
        for a in args {
            rt_args.push(self.input_to_rt(a)?);
        }
        let arg_cells: Vec<RtVal<'m>> =
            rt_args.iter().copied().filter(|v| matches!(v, RtVal::Ref(_))).collect();

        self.frames.push(Frame::new(func, rt_args));
        self.peak_frames = 1;
        let result = self.machine_loop()?;
        let value = self.render(result)?;

        if self.mode == RcMode::Strict {
            for v in arg_cells {
                self.dec_ref(v)?;
            }
            for idx in slot_cells {
                self.dec_ref(RtVal::Ref(idx))?;
            }
        }
        let live_at_exit = self.heap.iter().filter(|c| !c.freed).count() as u64;
        Ok(ProgramResult {
            value,
            steps: self.steps,
            peak_frames: self.peak_frames,
            heap: HeapReport {
                live_at_exit,
                rc_underflows: self.underflows,
                use_after_free: self.uaf,
            },
        })
    }

    fn env_get(&self, v: ValueId) -> Result<RtVal<'m>, Trap> {
        self.frames
            .last()
            .and_then(|f| f.env.get(v.0 as usize).copied().flatten())
            .ok_or(Trap { reason: TrapReason::Internal, message: format!("value {v} not bound") })
    }

    fn env_set(&mut self, v: ValueId, val: RtVal<'m>) {
        let frame = self.frames.last_mut().expect("a frame is active");
        frame.env[v.0 as usize] = Some(val);
    }

    fn operand_vals(&self, op: &OpIR) -> Result<Vec<RtVal<'m>>, Trap> {
        op.operands.iter().map(|v| self.env_get(*v)).collect()
    }

    fn advance(&mut self) {
        let exec = self.frames.last_mut().unwrap().execs.last_mut().unwrap();
        exec.op += 1;
    }

    fn enter_region(&mut self, region: &'m RegionIR, kind: ExecKind<'m>, args: &[RtVal<'m>]) {
        let frame = self.frames.last_mut().unwrap();
        let params = region.blocks[0].params.clone();
        for (p, a) in params.iter().zip(args) {
            frame.env[p.0 as usize] = Some(*a);
        }
        frame.execs.push(Exec { region, kind, block: 0, op: 0 });
    }

    fn push_frame(&mut self, func: &'m FuncIR, args: Vec<RtVal<'m>>) {
        self.frames.push(Frame::new(func, args));
        self.peak_frames = self.peak_frames.max(self.frames.len());
    }

    /// Folds `extras` into a closure value: extend when unsaturated, invoke
    /// when saturated, invoke-then-reapply when oversaturated. Returns true
    /// when execution continues in a new frame.
    fn apply_closure(
        &mut self,
        dst: ValueId,
        mut cval: RtVal<'m>,
        mut extras: Vec<RtVal<'m>>,
    ) -> Result<bool, Trap> {
        loop {
            let RtVal::Ref(idx) = cval else {
                return trap(TrapReason::NotAClosure, "application target is not a closure");
            };
            let (fn_symbol, arity, held) = match &self.cell(idx)?.value {
                HeapVal::Closure { fn_symbol, arity, held } => (*fn_symbol, *arity, held.clone()),
                _ => return trap(TrapReason::NotAClosure, "application target is not a closure"),
            };
            let total = held.len() + extras.len();
            if total < arity {
                let mut new_held = held;
                new_held.extend(extras.iter().copied());
                for h in new_held.clone() {
                    self.inc_ref(h)?;
                }
                let new_idx = self.alloc(HeapVal::Closure { fn_symbol, arity, held: new_held });
                self.env_set(dst, RtVal::Ref(new_idx));
                self.advance();
                return Ok(false);
            }
            let need = arity - held.len();
            let mut call_args = held;
            call_args.extend(extras.drain(..need));
            let rest = std::mem::take(&mut extras);

            if runtime_fn(fn_symbol).is_some() {
                let v = self.builtin(fn_symbol, &call_args)?;
                if rest.is_empty() {
                    self.env_set(dst, v);
                    self.advance();
                    return Ok(false);
                }
                cval = v;
                extras = rest;
                continue;
            }
            let Some(func) = self.module.funcs.get(fn_symbol) else {
                return trap(TrapReason::UnknownSymbol, format!("@{fn_symbol} is not callable"));
            };
            self.frames.last_mut().unwrap().pending = if rest.is_empty() {
                Pending::Assign(dst)
            } else {
                Pending::Extend { dst, rest }
            };
            self.push_frame(func, call_args);
            return Ok(true);
        }
    }

    /// Routes a returned value into the frame now on top (or out of the
    /// program when no frames remain). Returns the final value if done.
    fn deliver_return(&mut self, v: RtVal<'m>) -> Result<Option<RtVal<'m>>, Trap> {
        if self.frames.is_empty() {
            return Ok(Some(v));
        }
        let pending = std::mem::replace(&mut self.frames.last_mut().unwrap().pending, Pending::None);
        match pending {
            Pending::Assign(dst) => {
                self.env_set(dst, v);
                self.advance();
                Ok(None)
            }
            Pending::Extend { dst, rest } => {
                self.apply_closure(dst, v, rest)?;
                Ok(None)
            }
            Pending::None => trap(TrapReason::Internal, "return with no pending call"),
        }
    }

    fn machine_loop(&mut self) -> Result<RtVal<'m>, Trap> {
        loop {
            if self.steps >= self.fuel {
                return trap(TrapReason::OutOfFuel, "execution budget exhausted");
            }
            let op: &'m OpIR = {
                let frame = self.frames.last().expect("machine has a frame");
                let exec = frame.execs.last().expect("frame has an active region");
                let block = exec
                    .region
                    .blocks
                    .get(exec.block)
                    .ok_or(Trap { reason: TrapReason::Internal, message: "bad block index".into() })?;
                block
                    .ops
                    .get(exec.op)
                    .ok_or(Trap { reason: TrapReason::Internal, message: "fell off a block".into() })?
            };
            self.steps += 1;

            match op.name.as_str() {
                "lp.int" => {
                    let v = op.attr_i64("value").ok_or(Trap {
                        reason: TrapReason::Internal,
                        message: "lp.int without value".into(),
                    })?;
                    self.env_set(op.results[0], RtVal::Small(v));
                    self.advance();
                }
                "lp.bigint" => {
                    let v = op.attr_int("value").cloned().ok_or(Trap {
                        reason: TrapReason::Internal,
                        message: "lp.bigint without value".into(),
                    })?;
                    let idx = self.alloc(HeapVal::Big(v));
                    self.env_set(op.results[0], RtVal::Ref(idx));
                    self.advance();
                }
                "cmp_eq" => {
                    let vals = self.operand_vals(op)?;
                    let (RtVal::Small(a), RtVal::Small(b)) = (vals[0], vals[1]) else {
                        return trap(TrapReason::NotANumber, "cmp_eq on non-machine values");
                    };
                    self.env_set(op.results[0], RtVal::Small((a == b) as i64));
                    self.advance();
                }
                "lp.construct" => {
                    let fields = self.operand_vals(op)?;
                    for f in fields.clone() {
                        self.inc_ref(f)?;
                    }
                    let tag = op.attr_i64("tag").unwrap_or(0);
                    let idx = self.alloc(HeapVal::Ctor { tag, fields });
                    self.env_set(op.results[0], RtVal::Ref(idx));
                    self.advance();
                }
                "lp.getlabel" => {
                    let v = self.env_get(op.operands[0])?;
                    let RtVal::Ref(idx) = v else {
                        return trap(TrapReason::NotAConstructor, "getlabel on unboxed integer");
                    };
                    let tag = match &self.cell(idx)?.value {
                        HeapVal::Ctor { tag, .. } => *tag,
                        _ => return trap(TrapReason::NotAConstructor, "getlabel on non-constructor"),
                    };
                    self.env_set(op.results[0], RtVal::Small(tag));
                    self.advance();
                }
                "lp.project" => {
                    let v = self.env_get(op.operands[0])?;
                    let index = op.attr_usize("index").unwrap_or(0);
                    let RtVal::Ref(idx) = v else {
                        return trap(TrapReason::NotAConstructor, "project on unboxed integer");
                    };
                    let field = match &self.cell(idx)?.value {
                        HeapVal::Ctor { fields, .. } => fields.get(index).copied(),
                        _ => return trap(TrapReason::NotAConstructor, "project on non-constructor"),
                    };
                    let Some(field) = field else {
                        return trap(
                            TrapReason::ProjectOutOfBounds,
                            format!("field index {index} out of bounds"),
                        );
                    };
                    self.env_set(op.results[0], field);
                    self.advance();
                }
                "lp.pap" => {
                    let sym = op.attr_symbol("fn").unwrap_or_default();
                    let args = self.operand_vals(op)?;
                    if let Some(slot_val) = self.globals.get(sym).copied() {
                        // reading a global slot extends its stored closure
                        let RtVal::Ref(idx) = slot_val else {
                            return trap(TrapReason::Internal, "global slot holds a non-reference");
                        };
                        let (fn_symbol, arity, held) = match &self.cell(idx)?.value {
                            HeapVal::Closure { fn_symbol, arity, held } => {
                                (*fn_symbol, *arity, held.clone())
                            }
                            _ => return trap(TrapReason::NotAClosure, "global slot holds a non-closure"),
                        };
                        let mut new_held = held;
                        new_held.extend(args.iter().copied());
                        for h in new_held.clone() {
                            self.inc_ref(h)?;
                        }
                        let new_idx = self.alloc(HeapVal::Closure { fn_symbol, arity, held: new_held });
                        self.env_set(op.results[0], RtVal::Ref(new_idx));
                    } else {
                        let sym_static: &'m str = match self.module.funcs.get_key_value(sym) {
                            Some((k, _)) => k.as_str(),
                            None => runtime_fn(sym).map(|r| r.name).unwrap_or(""),
                        };
                        if sym_static.is_empty() {
                            return trap(TrapReason::UnknownSymbol, format!("@{sym} is not callable"));
                        }
                        let arity = self.arity_of(sym)?;
                        for a in args.clone() {
                            self.inc_ref(a)?;
                        }
                        let idx = self.alloc(HeapVal::Closure { fn_symbol: sym_static, arity, held: args });
                        self.env_set(op.results[0], RtVal::Ref(idx));
                    }
                    self.advance();
                }
                "lp.papextend" => {
                    let vals = self.operand_vals(op)?;
                    let dst = op.results[0];
                    self.apply_closure(dst, vals[0], vals[1..].to_vec())?;
                }
                "call" => {
                    let sym = op.attr_symbol("fn").unwrap_or_default();
                    let args = self.operand_vals(op)?;
                    let dst = op.results[0];
                    if runtime_fn(sym).is_some() {
                        let v = self.builtin(sym, &args)?;
                        self.env_set(dst, v);
                        self.advance();
                    } else {
                        let Some(func) = self.module.funcs.get(sym) else {
                            return trap(TrapReason::UnknownSymbol, format!("@{sym} is not callable"));
                        };
                        if op.has_flag("musttail") {
                            // reuse the current frame: the caller's continuation
                            // is exactly "return the callee's result"
                            self.frames.pop();
                            self.push_frame(func, args);
                        } else {
                            self.frames.last_mut().unwrap().pending = Pending::Assign(dst);
                            self.push_frame(func, args);
                        }
                    }
                }
                "lp.inc" => {
                    let v = self.env_get(op.operands[0])?;
                    self.inc_ref(v)?;
                    self.advance();
                }
                "lp.dec" => {
                    let v = self.env_get(op.operands[0])?;
                    self.dec_ref(v)?;
                    self.advance();
                }
                "select" => {
                    let vals = self.operand_vals(op)?;
                    let RtVal::Small(c) = vals[0] else {
                        return trap(TrapReason::BadSwitch, "select condition is not a machine integer");
                    };
                    self.env_set(op.results[0], if c != 0 { vals[1] } else { vals[2] });
                    self.advance();
                }
                "switch" => {
                    let vals = self.operand_vals(op)?;
                    let RtVal::Small(s) = vals[0] else {
                        return trap(TrapReason::BadSwitch, "switch on a boxed value");
                    };
                    let cases = op.attr_intlist("cases").unwrap_or(&[]);
                    let chosen = cases
                        .iter()
                        .position(|c| *c == s)
                        .map(|i| vals[1 + i])
                        .unwrap_or(*vals.last().expect("switch has a default operand"));
                    self.env_set(op.results[0], chosen);
                    self.advance();
                }
                "rgn.val" => {
                    self.env_set(op.results[0], RtVal::Rgn(&op.regions[0]));
                    self.advance();
                }
                "rgn.run" => {
                    let vals = self.operand_vals(op)?;
                    let RtVal::Rgn(region) = vals[0] else {
                        return trap(TrapReason::RegionEscape, "rgn.run target is not a region value");
                    };
                    self.enter_region(region, ExecKind::Plain, &vals[1..]);
                }
                "lp.switch" => {
                    let v = self.env_get(op.operands[0])?;
                    let RtVal::Small(s) = v else {
                        return trap(TrapReason::BadSwitch, "switch on a boxed value");
                    };
                    let cases = op.attr_intlist("cases").unwrap_or(&[]);
                    let region_idx = cases.iter().position(|c| *c == s).unwrap_or(cases.len());
                    self.enter_region(&op.regions[region_idx], ExecKind::Plain, &[]);
                }
                "lp.joinpoint" => {
                    self.enter_region(&op.regions[1], ExecKind::JoinScope(op), &[]);
                }
                "lp.jump" => {
                    let args = self.operand_vals(op)?;
                    let frame = self.frames.last_mut().unwrap();
                    let jp = loop {
                        match frame.execs.pop() {
                            Some(Exec { kind: ExecKind::JoinScope(jp), .. }) => break jp,
                            Some(_) => continue,
                            None => {
                                return trap(TrapReason::Internal, "jump without enclosing joinpoint")
                            }
                        }
                    };
                    self.enter_region(&jp.regions[0], ExecKind::Plain, &args);
                }
                "lp.return" | "ret" => {
                    let v = self.env_get(op.operands[0])?;
                    self.frames.pop();
                    if let Some(result) = self.deliver_return(v)? {
                        return Ok(result);
                    }
                }
                "br" => {
                    let args = self.operand_vals(op)?;
                    let dest = op.attr_usize("dest").unwrap_or(0);
                    self.branch_to(dest, &args)?;
                }
                "cond_br" => {
                    let vals = self.operand_vals(op)?;
                    let RtVal::Small(c) = vals[0] else {
                        return trap(TrapReason::BadSwitch, "cond_br condition is not a machine integer");
                    };
                    let argc = op.attr_usize("then_argc").unwrap_or(0);
                    if c != 0 {
                        let dest = op.attr_usize("then_dest").unwrap_or(0);
                        self.branch_to(dest, &vals[1..1 + argc])?;
                    } else {
                        let dest = op.attr_usize("else_dest").unwrap_or(0);
                        self.branch_to(dest, &vals[1 + argc..])?;
                    }
                }
                "switch_br" => {
                    let vals = self.operand_vals(op)?;
                    let RtVal::Small(s) = vals[0] else {
                        return trap(TrapReason::BadSwitch, "switch_br on a boxed value");
                    };
                    let cases = op.attr_intlist("cases").unwrap_or(&[]);
                    let argcs = op.attr_intlist("case_argcs").unwrap_or(&[]);
                    let dests = op.attr_intlist("case_dests").unwrap_or(&[]);
                    let mut pos = 1usize;
                    let mut chosen = None;
                    for ((v, d), c) in cases.iter().zip(dests).zip(argcs) {
                        let argc = *c as usize;
                        if *v == s && chosen.is_none() {
                            chosen = Some((*d as usize, pos, pos + argc));
                        }
                        pos += argc;
                    }
                    let (dest, lo, hi) =
                        chosen.unwrap_or((op.attr_usize("default_dest").unwrap_or(0), pos, vals.len()));
                    let args = vals[lo..hi].to_vec();
                    self.branch_to(dest, &args)?;
                }
                other => {
                    return trap(TrapReason::Internal, format!("op '{other}' is not executable"));
                }
            }
        }
    }

    fn branch_to(&mut self, dest: usize, args: &[RtVal<'m>]) -> Result<(), Trap> {
        let frame = self.frames.last_mut().unwrap();
        let exec = frame.execs.last_mut().unwrap();
        let Some(block) = exec.region.blocks.get(dest) else {
            return trap(TrapReason::Internal, format!("branch target ^bb{dest} out of range"));
        };
        let params = block.params.clone();
        for (p, a) in params.iter().zip(args) {
            frame.env[p.0 as usize] = Some(*a);
        }
        exec.block = dest;
        exec.op = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> ModuleIR {
        crate::textual::parse_module(src).expect("test module parses")
    }

    #[test]
    fn integer_switch_dispatch() {
        let m = parse(
            r#"module {
  func @f(%arg: !lp.t) -> !lp.t {
    %c = lp.int 42 : i64
    %eq = call %arg, %c {fn = @nat_dec_eq} : i8
    lp.switch %eq {cases = [1]} {
      %a = lp.int 43 : i64
      lp.return %a
    } {
      %b = lp.int 99999999 : i64
      lp.return %b
    }
  }
}
"#,
        );
        let r = eval(&m, "f", &[Value::int(42)], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(43));
        let r = eval(&m, "f", &[Value::int(7)], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(99999999));
    }

    #[test]
    fn big_integer_equality_is_uniform() {
        let m = parse(
            r#"module {
  func @f(%a: !lp.t) -> !lp.t {
    %b = lp.bigint 1208925819614629174706176 : !lp.t
    %eq = call %a, %b {fn = @nat_dec_eq} : i8
    lp.return %eq
  }
}
"#,
        );
        let big = BigInt::from(2u8).pow(80);
        let r = eval(&m, "f", &[Value::Int(big)], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(1));
        let r = eval(&m, "f", &[Value::int(5)], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(0));
    }

    #[test]
    fn list_length_via_constructors() {
        let m = parse(
            r#"module {
  func @singleton(%x: !lp.t) -> !lp.t {
    %nil = lp.construct {tag = 0} : !lp.t
    %cons = lp.construct %x, %nil {tag = 1} : !lp.t
    lp.return %cons
  }
  func @length(%l: !lp.t) -> !lp.t {
    %lab = lp.getlabel %l : i64
    lp.switch %lab {cases = [0]} {
      %z = lp.int 0 : i64
      lp.return %z
    } {
      %rest = lp.project %l {index = 1} : !lp.t
      %n = call %rest {fn = @length} : !lp.t
      %one = lp.int 1 : i64
      %sum = call %n, %one {fn = @nat_add} : !lp.t
      lp.return %sum
    }
  }
  func @main(%x: !lp.t) -> !lp.t {
    %l = call %x {fn = @singleton} : !lp.t
    %n = call %l {fn = @length} : !lp.t
    lp.return %n
  }
}
"#,
        );
        let r = eval(&m, "main", &[Value::int(9)], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(1));
    }

    #[test]
    fn closures_partial_application() {
        let m = parse(
            r#"module {
  func @k(%x: !lp.t, %y: !lp.t) -> !lp.t {
    %s = call %x, %y {fn = @nat_add} : !lp.t
    lp.return %s
  }
  func @k10() -> !lp.t {
    %ten = lp.int 10 : i64
    %c = lp.pap %ten {fn = @k} : !lp.t
    lp.return %c
  }
  func @ap42(%f: !lp.t) -> !lp.t {
    %v = lp.int 42 : i64
    %r = lp.papextend %f, %v : !lp.t
    lp.return %r
  }
  func @use() -> !lp.t {
    %c = call {fn = @k10} : !lp.t
    %r = call %c {fn = @ap42} : !lp.t
    lp.return %r
  }
}
"#,
        );
        let r = eval(&m, "use", &[], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(52));
    }

    #[test]
    fn global_slot_provides_top_level_closure() {
        let m = parse(
            r#"module {
  global @kslot = @k
  func @k(%x: !lp.t, %y: !lp.t) -> !lp.t {
    %s = call %x, %y {fn = @nat_add} : !lp.t
    lp.return %s
  }
  func @ap42(%f: !lp.t) -> !lp.t {
    %v = lp.int 42 : i64
    %r = lp.papextend %f, %v : !lp.t
    lp.return %r
  }
  func @use() -> !lp.t {
    %ten = lp.int 10 : i64
    %kc = lp.pap %ten {fn = @kslot} : !lp.t
    %r = call %kc {fn = @ap42} : !lp.t
    lp.return %r
  }
}
"#,
        );
        let r = eval(&m, "use", &[], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(52));
    }

    #[test]
    fn papextend_oversaturation_reapplies() {
        // h returns a unary closure, so two extras drive a two-stage invoke
        let m = parse(
            r#"module {
  func @addone(%x: !lp.t, %y: !lp.t) -> !lp.t {
    %s = call %x, %y {fn = @nat_add} : !lp.t
    lp.return %s
  }
  func @h(%x: !lp.t) -> !lp.t {
    %c = lp.pap %x {fn = @addone} : !lp.t
    lp.return %c
  }
  func @use() -> !lp.t {
    %c = lp.pap {fn = @h} : !lp.t
    %a = lp.int 30 : i64
    %b = lp.int 12 : i64
    %r = lp.papextend %c, %a, %b : !lp.t
    lp.return %r
  }
}
"#,
        );
        let r = eval(&m, "use", &[], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(42));
    }

    #[test]
    fn musttail_reuses_frames() {
        let m = parse(
            r#"module {
  func @countdown(%n: !lp.t) -> !lp.t {
    %zero = lp.int 0 : i64
    %eq = call %n, %zero {fn = @nat_dec_eq} : i8
    lp.switch %eq {cases = [1]} {
      lp.return %zero
    } {
      %negone = lp.int -1 : i64
      %m = call %n, %negone {fn = @nat_add} : !lp.t
      %r = call %m {fn = @countdown, musttail} : !lp.t
      lp.return %r
    }
  }
}
"#,
        );
        let r = eval(&m, "countdown", &[Value::int(1000)], RcMode::Unchecked).unwrap();
        assert_eq!(r.value, Value::int(0));
        assert!(r.peak_frames <= 2, "peak_frames = {}", r.peak_frames);
    }

    #[test]
    fn traps_are_reported_not_raised() {
        let m = parse(
            r#"module {
  func @f(%x: !lp.t) -> !lp.t {
    %l = lp.getlabel %x : i64
    lp.return %l
  }
}
"#,
        );
        let err = eval(&m, "f", &[Value::int(3)], RcMode::Unchecked).unwrap_err();
        assert_eq!(err.reason, TrapReason::NotAConstructor);
    }

    #[test]
    fn strict_mode_balanced_program_leaves_no_cells() {
        let m = parse(
            r#"module {
  func @main() -> !lp.t {
    %x = lp.int 4 : i64
    %nil = lp.construct {tag = 0} : !lp.t
    %cons = lp.construct %x, %nil {tag = 1} : !lp.t
    lp.dec %nil
    %lab = lp.getlabel %cons : i64
    lp.dec %cons
    lp.return %lab
  }
}
"#,
        );
        let r = eval(&m, "main", &[], RcMode::Strict).unwrap();
        assert_eq!(r.value, Value::int(1));
        assert_eq!(r.heap, HeapReport { live_at_exit: 0, rc_underflows: 0, use_after_free: 0 });
    }

    #[test]
    fn strict_mode_underflow_traps() {
        let m = parse(
            r#"module {
  func @main() -> !lp.t {
    %nil = lp.construct {tag = 0} : !lp.t
    lp.dec %nil
    lp.dec %nil
    %z = lp.int 0 : i64
    lp.return %z
  }
}
"#,
        );
        let err = eval(&m, "main", &[], RcMode::Strict).unwrap_err();
        assert_eq!(err.reason, TrapReason::RcUnderflow);
    }

    #[test]
    fn determinism() {
        let m = parse(
            r#"module {
  func @f(%x: !lp.t) -> !lp.t {
    %c = lp.int 5 : i64
    %s = call %x, %c {fn = @nat_add} : !lp.t
    lp.return %s
  }
}
"#,
        );
        let a = eval(&m, "f", &[Value::int(10)], RcMode::Strict).unwrap();
        let b = eval(&m, "f", &[Value::int(10)], RcMode::Strict).unwrap();
        assert_eq!(a, b);
    }
}
