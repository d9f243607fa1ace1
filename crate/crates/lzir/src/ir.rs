//! Core IR data model: a module of functions in SSA form, where operations
//! may own nested single-entry regions.
//!
//! Values are function-scoped integer ids. The side table in [`FuncIR`] maps
//! each id to its type; definition sites (an op result or a block parameter)
//! are recovered by walking the function body.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use indexmap::IndexMap;
use num_bigint::BigInt;
use thiserror::Error;

/// The type of an SSA value.
///
/// `Obj` is the single boxed type for heap values (constructors, big
/// integers, closures). Machine integers carry an explicit bit width.
/// `RgnVal` types a region value by the parameter list of its region.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeIR {
    Obj,
    Int(u8),
    RgnVal(Vec<TypeIR>),
}

/// Legal machine-integer widths.
pub const INT_WIDTHS: [u8; 4] = [1, 8, 32, 64];

impl TypeIR {
    pub fn is_int(&self) -> bool {
        matches!(self, TypeIR::Int(_))
    }

    pub fn is_rgn(&self) -> bool {
        matches!(self, TypeIR::RgnVal(_))
    }

    /// Whether a value of type `actual` may flow into a slot typed `self`.
    ///
    /// Machine integers subsume into `Obj`: the runtime represents small
    /// boxed integers by a machine word, so an `Int` is already a valid
    /// type-erased value. All other positions require an exact match.
    pub fn accepts(&self, actual: &TypeIR) -> bool {
        self == actual || (*self == TypeIR::Obj && actual.is_int())
    }
}

impl fmt::Display for TypeIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeIR::Obj => write!(f, "!lp.t"),
            TypeIR::Int(w) => write!(f, "i{w}"),
            TypeIR::RgnVal(params) => {
                write!(f, "!rgn.val<")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ">")
            }
        }
    }
}

/// A function-scoped SSA value id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{}", self.0)
    }
}

/// A compile-time constant attached to an operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttrIR {
    /// Arbitrary-precision integer.
    Int(BigInt),
    /// Reference to a global symbol, stored without the leading `@`.
    Symbol(String),
    /// List of machine integers (switch case values, branch targets).
    IntList(Vec<i64>),
    /// Unit attribute; presence is the payload, the dict key is the name.
    Flag,
}

pub type AttrMap = BTreeMap<String, AttrIR>;

/// Where a value is defined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DefKind {
    OpResult { path: OpPath, index: usize },
    BlockParam { descents: Vec<(usize, usize, usize)>, block: usize, index: usize },
}

/// A single operation: a name, SSA operands and results, attributes, and
/// zero or more nested regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpIR {
    pub name: String,
    pub operands: Vec<ValueId>,
    pub results: Vec<ValueId>,
    pub attrs: AttrMap,
    pub regions: Vec<RegionIR>,
}

impl OpIR {
    pub fn new(name: impl Into<String>) -> Self {
        OpIR {
            name: name.into(),
            operands: Vec::new(),
            results: Vec::new(),
            attrs: AttrMap::new(),
            regions: Vec::new(),
        }
    }

    pub fn with_operands(mut self, operands: Vec<ValueId>) -> Self {
        self.operands = operands;
        self
    }

    pub fn with_results(mut self, results: Vec<ValueId>) -> Self {
        self.results = results;
        self
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: AttrIR) -> Self {
        self.attrs.insert(key.into(), value);
        self
    }

    pub fn with_regions(mut self, regions: Vec<RegionIR>) -> Self {
        self.regions = regions;
        self
    }

    pub fn attr_int(&self, key: &str) -> Option<&BigInt> {
        match self.attrs.get(key) {
            Some(AttrIR::Int(v)) => Some(v),
            _ => None,
        }
    }

    pub fn attr_i64(&self, key: &str) -> Option<i64> {
        use num_traits::ToPrimitive;
        self.attr_int(key).and_then(|v| v.to_i64())
    }

    pub fn attr_usize(&self, key: &str) -> Option<usize> {
        use num_traits::ToPrimitive;
        self.attr_int(key).and_then(|v| v.to_usize())
    }

    pub fn attr_symbol(&self, key: &str) -> Option<&str> {
        match self.attrs.get(key) {
            Some(AttrIR::Symbol(s)) => Some(s.as_str()),
            _ => None,
        }
    }

    pub fn attr_intlist(&self, key: &str) -> Option<&[i64]> {
        match self.attrs.get(key) {
            Some(AttrIR::IntList(v)) => Some(v.as_slice()),
            _ => None,
        }
    }

    pub fn has_flag(&self, key: &str) -> bool {
        matches!(self.attrs.get(key), Some(AttrIR::Flag))
    }

    pub fn result(&self) -> Option<ValueId> {
        self.results.first().copied()
    }
}

/// A basic block: typed parameters followed by an op sequence whose final op
/// must be a terminator.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BlockIR {
    pub params: Vec<ValueId>,
    pub ops: Vec<OpIR>,
}

/// A single-entry sub-CFG owned by an op or a function. Regions owned by ops
/// hold exactly one block; multi-block regions appear only in function bodies
/// after CFG lowering.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RegionIR {
    pub blocks: Vec<BlockIR>,
}

impl RegionIR {
    pub fn single(block: BlockIR) -> Self {
        RegionIR { blocks: vec![block] }
    }

    pub fn entry(&self) -> &BlockIR {
        &self.blocks[0]
    }
}

/// A function: named, typed, with a body region whose entry block parameters
/// are the function parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncIR {
    pub name: String,
    pub param_types: Vec<TypeIR>,
    pub result_type: TypeIR,
    pub body: RegionIR,
    value_types: Vec<TypeIR>,
}

impl FuncIR {
    /// Creates a function with an empty entry block whose params are already
    /// allocated to ids `0..param_types.len()`.
    pub fn new(name: impl Into<String>, param_types: Vec<TypeIR>, result_type: TypeIR) -> Self {
        let params: Vec<ValueId> = (0..param_types.len() as u32).map(ValueId).collect();
        FuncIR {
            name: name.into(),
            value_types: param_types.clone(),
            param_types,
            result_type,
            body: RegionIR::single(BlockIR { params, ops: Vec::new() }),
        }
    }

    pub fn fresh_value(&mut self, ty: TypeIR) -> ValueId {
        let id = ValueId(self.value_types.len() as u32);
        self.value_types.push(ty);
        id
    }

    /// Re-types a value. Used by the parser when a definition's type is
    /// discovered after a forward use has already allocated the id.
    pub(crate) fn set_value_type(&mut self, v: ValueId, ty: TypeIR) {
        self.value_types[v.0 as usize] = ty;
    }

    pub fn value_type(&self, v: ValueId) -> &TypeIR {
        &self.value_types[v.0 as usize]
    }

    pub fn try_value_type(&self, v: ValueId) -> Option<&TypeIR> {
        self.value_types.get(v.0 as usize)
    }

    pub fn num_values(&self) -> usize {
        self.value_types.len()
    }

    pub fn entry_params(&self) -> &[ValueId] {
        &self.body.blocks[0].params
    }

    pub fn region_at(&self, descents: &[(usize, usize, usize)]) -> Option<&RegionIR> {
        let mut region = &self.body;
        for &(b, o, r) in descents {
            region = region.blocks.get(b)?.ops.get(o)?.regions.get(r)?;
        }
        Some(region)
    }

    pub fn region_at_mut(&mut self, descents: &[(usize, usize, usize)]) -> Option<&mut RegionIR> {
        let mut region = &mut self.body;
        for &(b, o, r) in descents {
            region = region.blocks.get_mut(b)?.ops.get_mut(o)?.regions.get_mut(r)?;
        }
        Some(region)
    }

    pub fn op_at(&self, path: &OpPath) -> Option<&OpIR> {
        self.region_at(&path.descents)?.blocks.get(path.block)?.ops.get(path.op)
    }

    pub fn op_at_mut(&mut self, path: &OpPath) -> Option<&mut OpIR> {
        self.region_at_mut(&path.descents)?
            .blocks
            .get_mut(path.block)?
            .ops
            .get_mut(path.op)
    }
}

/// A module: an ordered table of functions plus global closure slots
/// (slot symbol mapped to the function whose closure fills it at startup).
#[derive(Clone, Debug, Default)]
pub struct ModuleIR {
    pub funcs: IndexMap<String, FuncIR>,
    pub globals: IndexMap<String, String>,
}

impl ModuleIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_func(&mut self, f: FuncIR) {
        self.funcs.insert(f.name.clone(), f);
    }
}

/// Hierarchical position of an op inside a function body.
///
/// `descents` records each nested region entered as `(block, op, region)`;
/// `block`/`op` locate the op inside the innermost region.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct OpPath {
    pub descents: Vec<(usize, usize, usize)>,
    pub block: usize,
    pub op: usize,
}

impl OpPath {
    pub fn top(block: usize, op: usize) -> Self {
        OpPath { descents: Vec::new(), block, op }
    }

    /// Path of an op nested inside region `region` of this op.
    pub fn descend(&self, region: usize, block: usize, op: usize) -> Self {
        let mut descents = self.descents.clone();
        descents.push((self.block, self.op, region));
        OpPath { descents, block, op }
    }
}

impl fmt::Display for OpPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, o, r) in &self.descents {
            write!(f, "b{b}.o{o}.r{r}/")?;
        }
        write!(f, "b{}.o{}", self.block, self.op)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A verifier finding, ordered by emission (traversal) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub func: String,
    pub path: Option<OpPath>,
}

impl Diagnostic {
    pub fn error(func: &str, path: Option<OpPath>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), func: func.to_string(), path }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.path {
            Some(p) => write!(f, "{sev}: @{}:{p}: {}", self.func, self.message),
            None => write!(f, "{sev}: @{}: {}", self.func, self.message),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RewriteError {
    #[error("type mismatch: cannot replace {old} of type {old_ty} with {new} of type {new_ty}")]
    TypeMismatch { old: ValueId, old_ty: String, new: ValueId, new_ty: String },
    #[error("dominance violation: {new} does not dominate a use of {old} at {at}")]
    DominanceViolation { old: ValueId, new: ValueId, at: OpPath },
    #[error("op at {at} still has uses of {value}")]
    HasUses { at: OpPath, value: ValueId },
    #[error("no op at {0}")]
    NotFound(OpPath),
}

/// Visits every op in the function body, outermost first, in textual order.
pub fn walk_ops<'f>(f: &'f FuncIR, visit: &mut impl FnMut(&OpPath, &'f OpIR)) {
    fn rec<'f>(
        region: &'f RegionIR,
        descents: &mut Vec<(usize, usize, usize)>,
        visit: &mut impl FnMut(&OpPath, &'f OpIR),
    ) {
        for (bi, block) in region.blocks.iter().enumerate() {
            for (oi, op) in block.ops.iter().enumerate() {
                let path = OpPath { descents: descents.clone(), block: bi, op: oi };
                visit(&path, op);
                for (ri, sub) in op.regions.iter().enumerate() {
                    descents.push((bi, oi, ri));
                    rec(sub, descents, visit);
                    descents.pop();
                }
            }
        }
    }
    rec(&f.body, &mut Vec::new(), visit);
}

/// Mutable in-place visit of every op. The callback must not change the
/// block/region structure.
pub fn walk_ops_mut(f: &mut FuncIR, visit: &mut impl FnMut(&OpIR) -> Option<OpIR>) {
    fn rec(region: &mut RegionIR, visit: &mut impl FnMut(&OpIR) -> Option<OpIR>) {
        for block in &mut region.blocks {
            for op in &mut block.ops {
                if let Some(new) = visit(op) {
                    *op = new;
                }
                for sub in &mut op.regions {
                    rec(sub, visit);
                }
            }
        }
    }
    rec(&mut f.body, visit);
}

/// Counts operand occurrences of every value across the function body.
pub fn count_uses(f: &FuncIR) -> HashMap<ValueId, usize> {
    let mut uses = HashMap::new();
    walk_ops(f, &mut |_, op| {
        for v in &op.operands {
            *uses.entry(*v).or_insert(0) += 1;
        }
    });
    uses
}

/// Finds every definition site in the function (block params and op results).
pub fn collect_defs(f: &FuncIR) -> Vec<(ValueId, DefKind)> {
    let mut defs = Vec::new();
    fn rec(region: &RegionIR, descents: &mut Vec<(usize, usize, usize)>, defs: &mut Vec<(ValueId, DefKind)>) {
        for (bi, block) in region.blocks.iter().enumerate() {
            for (pi, p) in block.params.iter().enumerate() {
                defs.push((*p, DefKind::BlockParam { descents: descents.clone(), block: bi, index: pi }));
            }
            for (oi, op) in block.ops.iter().enumerate() {
                for (ri2, r) in op.results.iter().enumerate() {
                    let path = OpPath { descents: descents.clone(), block: bi, op: oi };
                    defs.push((*r, DefKind::OpResult { path, index: ri2 }));
                }
                for (ri, sub) in op.regions.iter().enumerate() {
                    descents.push((bi, oi, ri));
                    rec(sub, descents, defs);
                    descents.pop();
                }
            }
        }
    }
    rec(&f.body, &mut Vec::new(), &mut defs);
    defs
}

/// Replaces every operand occurrence of `old` with `new`.
///
/// Requires equal types and that `new`'s definition is visible at every use
/// site of `old`.
pub fn replace_all_uses(f: &mut FuncIR, old: ValueId, new: ValueId) -> Result<(), RewriteError> {
    if old == new {
        return Ok(());
    }
    let old_ty = f.try_value_type(old).cloned();
    let new_ty = f.try_value_type(new).cloned();
    match (old_ty, new_ty) {
        (Some(a), Some(b)) if a == b => {}
        (a, b) => {
            return Err(RewriteError::TypeMismatch {
                old,
                old_ty: a.map(|t| t.to_string()).unwrap_or_else(|| "<unknown>".into()),
                new,
                new_ty: b.map(|t| t.to_string()).unwrap_or_else(|| "<unknown>".into()),
            })
        }
    }

    // Walk once, tracking visibility of `new`, rejecting any use of `old`
    // at a point where `new` is not yet defined.
    fn rec(
        region: &RegionIR,
        descents: &mut Vec<(usize, usize, usize)>,
        old: ValueId,
        new: ValueId,
        new_visible: bool,
        bad: &mut Option<OpPath>,
    ) {
        for (bi, block) in region.blocks.iter().enumerate() {
            let mut visible = new_visible || block.params.contains(&new);
            for (oi, op) in block.ops.iter().enumerate() {
                if op.operands.contains(&old) && !visible {
                    let path = OpPath { descents: descents.clone(), block: bi, op: oi };
                    if bad.is_none() {
                        *bad = Some(path);
                    }
                }
                for (ri, sub) in op.regions.iter().enumerate() {
                    descents.push((bi, oi, ri));
                    rec(sub, descents, old, new, visible, bad);
                    descents.pop();
                }
                if op.results.contains(&new) {
                    visible = true;
                }
            }
        }
    }
    let mut bad = None;
    rec(&f.body, &mut Vec::new(), old, new, false, &mut bad);
    if let Some(at) = bad {
        return Err(RewriteError::DominanceViolation { old, new, at });
    }

    walk_ops_mut(f, &mut |op| {
        if op.operands.contains(&old) {
            let mut op = op.clone();
            for v in &mut op.operands {
                if *v == old {
                    *v = new;
                }
            }
            Some(op)
        } else {
            None
        }
    });
    Ok(())
}

/// Removes the op at `path`. Every result of the op must be unused.
pub fn erase_op(f: &mut FuncIR, path: &OpPath) -> Result<OpIR, RewriteError> {
    let op = f.op_at(path).ok_or_else(|| RewriteError::NotFound(path.clone()))?.clone();
    let uses = count_uses(f);
    for r in &op.results {
        if uses.get(r).copied().unwrap_or(0) > 0 {
            return Err(RewriteError::HasUses { at: path.clone(), value: *r });
        }
    }
    let region = f
        .region_at_mut(&path.descents)
        .ok_or_else(|| RewriteError::NotFound(path.clone()))?;
    let block = region
        .blocks
        .get_mut(path.block)
        .ok_or_else(|| RewriteError::NotFound(path.clone()))?;
    if path.op >= block.ops.len() {
        return Err(RewriteError::NotFound(path.clone()));
    }
    Ok(block.ops.remove(path.op))
}

/// Structural equality of modules up to value renaming.
///
/// Functions must appear in the same order with the same names; within each
/// function, value ids are matched by a bijection built in definition order.
pub fn structurally_equal(a: &ModuleIR, b: &ModuleIR) -> bool {
    if a.globals != b.globals || a.funcs.len() != b.funcs.len() {
        return false;
    }
    a.funcs
        .values()
        .zip(b.funcs.values())
        .all(|(fa, fb)| structurally_equal_funcs(fa, fb))
}

pub fn structurally_equal_funcs(a: &FuncIR, b: &FuncIR) -> bool {
    if a.name != b.name || a.param_types != b.param_types || a.result_type != b.result_type {
        return false;
    }
    let mut map: HashMap<ValueId, ValueId> = HashMap::new();
    regions_equal(a, b, &a.body, &b.body, &mut map)
}

fn regions_equal(
    fa: &FuncIR,
    fb: &FuncIR,
    ra: &RegionIR,
    rb: &RegionIR,
    map: &mut HashMap<ValueId, ValueId>,
) -> bool {
    if ra.blocks.len() != rb.blocks.len() {
        return false;
    }
    for (ba, bb) in ra.blocks.iter().zip(&rb.blocks) {
        if ba.params.len() != bb.params.len() || ba.ops.len() != bb.ops.len() {
            return false;
        }
        for (pa, pb) in ba.params.iter().zip(&bb.params) {
            if fa.try_value_type(*pa) != fb.try_value_type(*pb) {
                return false;
            }
            map.insert(*pa, *pb);
        }
        for (oa, ob) in ba.ops.iter().zip(&bb.ops) {
            if oa.name != ob.name
                || oa.attrs != ob.attrs
                || oa.operands.len() != ob.operands.len()
                || oa.results.len() != ob.results.len()
                || oa.regions.len() != ob.regions.len()
            {
                return false;
            }
            for (va, vb) in oa.operands.iter().zip(&ob.operands) {
                match map.get(va) {
                    Some(mapped) if mapped == vb => {}
                    _ => return false,
                }
            }
            for (va, vb) in oa.results.iter().zip(&ob.results) {
                if fa.try_value_type(*va) != fb.try_value_type(*vb) {
                    return false;
                }
                map.insert(*va, *vb);
            }
            for (sa, sb) in oa.regions.iter().zip(&ob.regions) {
                if !regions_equal(fa, fb, sa, sb, map) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int_op(f: &mut FuncIR, value: i64, width: u8) -> (OpIR, ValueId) {
        let r = f.fresh_value(TypeIR::Int(width));
        let op = OpIR::new("lp.int")
            .with_attr("value", AttrIR::Int(BigInt::from(value)))
            .with_results(vec![r]);
        (op, r)
    }

    fn ret_op(v: ValueId) -> OpIR {
        OpIR::new("lp.return").with_operands(vec![v])
    }

    #[test]
    fn replace_value_with_itself_is_identity() {
        let mut f = FuncIR::new("f", vec![TypeIR::Obj], TypeIR::Obj);
        let p = f.entry_params()[0];
        f.body.blocks[0].ops.push(ret_op(p));
        let before = f.clone();
        replace_all_uses(&mut f, p, p).unwrap();
        assert!(structurally_equal_funcs(&before, &f));
    }

    #[test]
    fn replace_rejects_type_mismatch() {
        let mut f = FuncIR::new("f", vec![TypeIR::Obj], TypeIR::Obj);
        let p = f.entry_params()[0];
        let (c, r) = int_op(&mut f, 5, 64);
        f.body.blocks[0].ops.push(c);
        f.body.blocks[0].ops.push(ret_op(p));
        let err = replace_all_uses(&mut f, p, r).unwrap_err();
        assert!(matches!(err, RewriteError::TypeMismatch { .. }));
    }

    #[test]
    fn replace_updates_all_uses() {
        let mut f = FuncIR::new("f", vec![TypeIR::Int(64), TypeIR::Int(64)], TypeIR::Int(64));
        let (a, b) = (f.entry_params()[0], f.entry_params()[1]);
        let r = f.fresh_value(TypeIR::Int(1));
        f.body.blocks[0].ops.push(
            OpIR::new("cmp_eq").with_operands(vec![a, a]).with_results(vec![r]),
        );
        f.body.blocks[0].ops.push(ret_op(a));
        replace_all_uses(&mut f, a, b).unwrap();
        let mut found_a = false;
        walk_ops(&f, &mut |_, op| {
            if op.operands.contains(&a) {
                found_a = true;
            }
        });
        assert!(!found_a);
    }

    #[test]
    fn replace_rejects_dominance_violation() {
        // use of %old happens before %new is defined
        let mut f = FuncIR::new("f", vec![TypeIR::Int(64)], TypeIR::Int(64));
        let p = f.entry_params()[0];
        f.body.blocks[0].ops.push(ret_op(p));
        // pretend there is a later constant; its def does not dominate the return
        let (c, r) = int_op(&mut f, 1, 64);
        f.body.blocks[0].ops.push(c);
        let err = replace_all_uses(&mut f, p, r).unwrap_err();
        assert!(matches!(err, RewriteError::DominanceViolation { .. }));
    }

    #[test]
    fn erase_dead_op_removes_it() {
        let mut f = FuncIR::new("f", vec![TypeIR::Obj], TypeIR::Obj);
        let p = f.entry_params()[0];
        let (c, _) = int_op(&mut f, 5, 64);
        f.body.blocks[0].ops.push(c);
        f.body.blocks[0].ops.push(ret_op(p));
        erase_op(&mut f, &OpPath::top(0, 0)).unwrap();
        assert_eq!(f.body.blocks[0].ops.len(), 1);
        assert_eq!(f.body.blocks[0].ops[0].name, "lp.return");
    }

    #[test]
    fn erase_used_op_fails() {
        let mut f = FuncIR::new("f", vec![], TypeIR::Int(64));
        let (c, r) = int_op(&mut f, 5, 64);
        f.body.blocks[0].ops.push(c);
        f.body.blocks[0].ops.push(ret_op(r));
        let err = erase_op(&mut f, &OpPath::top(0, 0)).unwrap_err();
        assert!(matches!(err, RewriteError::HasUses { .. }));
    }

    #[test]
    fn structural_equality_ignores_id_numbering() {
        let mut f1 = FuncIR::new("f", vec![], TypeIR::Int(64));
        let (c1, r1) = int_op(&mut f1, 7, 64);
        f1.body.blocks[0].ops.push(c1);
        f1.body.blocks[0].ops.push(ret_op(r1));

        let mut f2 = FuncIR::new("f", vec![], TypeIR::Int(64));
        // burn a few ids so numbering differs
        f2.fresh_value(TypeIR::Obj);
        f2.fresh_value(TypeIR::Obj);
        let (c2, r2) = int_op(&mut f2, 7, 64);
        f2.body.blocks[0].ops.push(c2);
        f2.body.blocks[0].ops.push(ret_op(r2));

        assert!(structurally_equal_funcs(&f1, &f2));
    }

    #[test]
    fn structural_equality_sees_attr_difference() {
        let mut f1 = FuncIR::new("f", vec![], TypeIR::Int(64));
        let (c1, r1) = int_op(&mut f1, 7, 64);
        f1.body.blocks[0].ops.push(c1);
        f1.body.blocks[0].ops.push(ret_op(r1));

        let mut f2 = FuncIR::new("f", vec![], TypeIR::Int(64));
        let (c2, r2) = int_op(&mut f2, 8, 64);
        f2.body.blocks[0].ops.push(c2);
        f2.body.blocks[0].ops.push(ret_op(r2));

        assert!(!structurally_equal_funcs(&f1, &f2));
    }
}
