//! Structural and dialect verification.
//!
//! [`verify_module`] runs the structural pass (SSA discipline, terminator
//! placement, operand visibility, signature conformance, symbol resolution)
//! followed by the dialect hooks [`verify_lp`] and [`verify_rgn`].
//! Diagnostics are deterministic and ordered by location.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::Signed;

use crate::ir::*;
use crate::ops::{self, AttrKind, RegionCount};

/// Runs every check. Empty result means the module is well formed.
pub fn verify_module(m: &ModuleIR) -> Vec<Diagnostic> {
    let mut diags = structural_checks(m);
    diags.extend(verify_lp(m));
    diags.extend(verify_rgn(m));
    sort_diags(m, &mut diags);
    diags
}

fn sort_diags(m: &ModuleIR, diags: &mut [Diagnostic]) {
    let order: HashMap<&str, usize> =
        m.funcs.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    diags.sort_by(|a, b| {
        let fa = order.get(a.func.as_str()).copied().unwrap_or(usize::MAX);
        let fb = order.get(b.func.as_str()).copied().unwrap_or(usize::MAX);
        (fa, &a.path, &a.message).cmp(&(fb, &b.path, &b.message))
    });
}

fn fits_width(v: &BigInt, width: u8) -> bool {
    if width >= 64 {
        return v.bits() <= 63 || (v.is_negative() && v.bits() <= 64 && v == &-(BigInt::from(1u8) << 63u8))
            || (!v.is_negative() && v.bits() <= 63);
    }
    let lo = -(BigInt::from(1) << (width - 1));
    let hi = (BigInt::from(1) << width) - 1;
    *v >= lo && *v <= hi
}

fn symbol_resolves(m: &ModuleIR, sym: &str) -> bool {
    m.funcs.contains_key(sym) || m.globals.contains_key(sym) || ops::runtime_fn(sym).is_some()
}

/// Arity and result type of a callable symbol: a declared function or a
/// runtime-table entry.
fn callee_sig(m: &ModuleIR, sym: &str) -> Option<(Vec<TypeIR>, TypeIR)> {
    if let Some(f) = m.funcs.get(sym) {
        return Some((f.param_types.clone(), f.result_type.clone()));
    }
    ops::runtime_fn(sym).map(|r| (r.param_types.to_vec(), r.result_type))
}

// ---------------------------------------------------------------------------
// structural pass

fn structural_checks(m: &ModuleIR) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (slot, init) in &m.globals {
        if !m.funcs.contains_key(init) {
            diags.push(Diagnostic::error(
                "",
                None,
                format!("global @{slot} initializer @{init} does not name a function"),
            ));
        }
    }
    for f in m.funcs.values() {
        check_func(m, f, &mut diags);
    }
    diags
}

fn check_func(m: &ModuleIR, f: &FuncIR, diags: &mut Vec<Diagnostic>) {
    let err = |path: Option<OpPath>, msg: String| Diagnostic::error(&f.name, path, msg);

    if f.body.blocks.is_empty() {
        diags.push(err(None, "function body region has no blocks".into()));
        return;
    }
    let entry = &f.body.blocks[0];
    if entry.params.len() != f.param_types.len() {
        diags.push(err(None, "entry block parameter count differs from function signature".into()));
    } else {
        for (p, ty) in entry.params.iter().zip(&f.param_types) {
            if f.try_value_type(*p) != Some(ty) {
                diags.push(err(None, format!("entry parameter {p} type differs from signature")));
            }
        }
    }

    // single-definition discipline
    let defs = collect_defs(f);
    let mut seen: HashSet<ValueId> = HashSet::new();
    for (v, _) in &defs {
        if !seen.insert(*v) {
            diags.push(err(None, format!("value {v} is defined more than once")));
        }
        if f.try_value_type(*v).is_none() {
            diags.push(err(None, format!("value {v} has no registered type")));
        }
    }

    check_region_structure(m, f, &f.body, &mut Vec::new(), true, diags);

    let defined: HashSet<ValueId> = defs.iter().map(|(v, _)| *v).collect();
    check_visibility(f, &defined, diags);
}

/// Terminator placement, signature conformance, per-op type rules, and the
/// one-block restriction for op-owned regions.
fn check_region_structure(
    m: &ModuleIR,
    f: &FuncIR,
    region: &RegionIR,
    descents: &mut Vec<(usize, usize, usize)>,
    is_body: bool,
    diags: &mut Vec<Diagnostic>,
) {
    let err = |path: OpPath, msg: String| Diagnostic::error(&f.name, Some(path), msg);

    if !is_body && region.blocks.len() != 1 {
        let path = OpPath { descents: descents.clone(), block: 0, op: 0 };
        diags.push(err(path, "op-owned region must have exactly one block".into()));
    }
    if is_body && region.blocks.len() > 1 {
        check_reachability(f, region, diags);
    }

    for (bi, block) in region.blocks.iter().enumerate() {
        if block.ops.is_empty() {
            let path = OpPath { descents: descents.clone(), block: bi, op: 0 };
            diags.push(err(path, "block has no terminator".into()));
            continue;
        }
        for (oi, op) in block.ops.iter().enumerate() {
            let path = OpPath { descents: descents.clone(), block: bi, op: oi };
            let last = oi + 1 == block.ops.len();
            if ops::is_terminator(&op.name) && !last {
                diags.push(err(path.clone(), "terminator not last in block".into()));
            }
            if last && !ops::is_terminator(&op.name) && ops::lookup(&op.name).is_some() {
                diags.push(err(path.clone(), "block does not end in a terminator".into()));
            }
            check_op(m, f, region, bi, oi, op, &path, diags);
            for (ri, sub) in op.regions.iter().enumerate() {
                descents.push((bi, oi, ri));
                check_region_structure(m, f, sub, descents, false, diags);
                descents.pop();
            }
        }
    }
}

fn check_op(
    m: &ModuleIR,
    f: &FuncIR,
    region: &RegionIR,
    bi: usize,
    oi: usize,
    op: &OpIR,
    path: &OpPath,
    diags: &mut Vec<Diagnostic>,
) {
    let err = |msg: String| Diagnostic::error(&f.name, Some(path.clone()), msg);

    let Some(sig) = ops::lookup(&op.name) else {
        diags.push(err(format!("unknown operation '{}'", op.name)));
        return;
    };

    if op.operands.len() < sig.min_operands || (!sig.variadic && op.operands.len() != sig.min_operands) {
        diags.push(err(format!(
            "'{}' expects {}{} operands, got {}",
            op.name,
            if sig.variadic { "at least " } else { "" },
            sig.min_operands,
            op.operands.len()
        )));
    }
    if op.results.len() != sig.num_results {
        diags.push(err(format!(
            "'{}' produces {} results, got {}",
            op.name,
            sig.num_results,
            op.results.len()
        )));
    }
    for (key, kind) in sig.required_attrs {
        match (op.attrs.get(*key), kind) {
            (Some(AttrIR::Int(_)), AttrKind::Int)
            | (Some(AttrIR::Symbol(_)), AttrKind::Symbol)
            | (Some(AttrIR::IntList(_)), AttrKind::IntList)
            | (Some(AttrIR::Flag), AttrKind::Flag) => {}
            (Some(_), _) => diags.push(err(format!("attribute '{key}' of '{}' has wrong kind", op.name))),
            (None, _) => diags.push(err(format!("'{}' requires attribute '{key}'", op.name))),
        }
    }
    for (key, attr) in &op.attrs {
        let known = sig.required_attrs.iter().chain(sig.optional_attrs).any(|(k, _)| k == key);
        if !known {
            diags.push(err(format!("unknown attribute '{key}' on '{}'", op.name)));
        }
        if let AttrIR::Symbol(s) = attr {
            if !symbol_resolves(m, s) {
                diags.push(err(format!("symbol @{s} does not resolve to a function or global")));
            }
        }
    }
    match sig.regions {
        RegionCount::Exact(n) => {
            if op.regions.len() != n {
                diags.push(err(format!("'{}' expects {n} regions, got {}", op.name, op.regions.len())));
            }
        }
        RegionCount::CasesPlusOne => {
            let n = op.attr_intlist("cases").map(|c| c.len() + 1).unwrap_or(1);
            if op.regions.len() != n {
                diags.push(err(format!(
                    "'{}' expects {} regions (cases + default), got {}",
                    op.name,
                    n,
                    op.regions.len()
                )));
            }
        }
    }

    // operand types must be registered; detailed rules below
    let opnd_ty = |i: usize| op.operands.get(i).and_then(|v| f.try_value_type(*v));
    let res_ty = |i: usize| op.results.get(i).and_then(|v| f.try_value_type(*v));
    let all_boxed = |diags: &mut Vec<Diagnostic>, from: usize| {
        for (i, v) in op.operands.iter().enumerate().skip(from) {
            if let Some(ty) = f.try_value_type(*v) {
                if !TypeIR::Obj.accepts(ty) {
                    diags.push(err(format!("operand {i} of '{}' must be boxed, got {ty}", op.name)));
                }
            }
        }
    };

    match op.name.as_str() {
        "lp.int" => {
            match res_ty(0) {
                Some(TypeIR::Int(w)) if INT_WIDTHS.contains(w) => {
                    if let Some(v) = op.attr_int("value") {
                        if !fits_width(v, *w) {
                            diags.push(err(format!("integer literal {v} does not fit in i{w}")));
                        }
                    }
                }
                Some(ty) => diags.push(err(format!("'lp.int' result must be a machine integer, got {ty}"))),
                None => {}
            }
        }
        "lp.bigint" => {
            if let Some(ty) = res_ty(0) {
                if *ty != TypeIR::Obj {
                    diags.push(err("'lp.bigint' result must be !lp.t".into()));
                }
            }
        }
        "lp.switch" => {
            match opnd_ty(0) {
                Some(TypeIR::Int(_)) | None => {}
                Some(ty) => diags.push(err(format!("'lp.switch' scrutinee must be a machine integer, got {ty}"))),
            }
            for sub in &op.regions {
                if sub.blocks.len() == 1 && !sub.blocks[0].params.is_empty() {
                    diags.push(err("'lp.switch' arm regions take no parameters".into()));
                }
            }
        }
        "lp.construct" => {
            all_boxed(diags, 0);
            if op.attr_int("tag").map(|t| t.is_negative()).unwrap_or(false) {
                diags.push(err("'lp.construct' tag must be non-negative".into()));
            }
            if let Some(ty) = res_ty(0) {
                if *ty != TypeIR::Obj {
                    diags.push(err("'lp.construct' result must be !lp.t".into()));
                }
            }
        }
        "lp.getlabel" => {
            all_boxed(diags, 0);
            if let Some(ty) = res_ty(0) {
                if *ty != TypeIR::Int(64) {
                    diags.push(err("'lp.getlabel' result must be i64".into()));
                }
            }
        }
        "lp.project" => {
            all_boxed(diags, 0);
            if let Some(ty) = res_ty(0) {
                if *ty != TypeIR::Obj {
                    diags.push(err("'lp.project' result must be !lp.t".into()));
                }
            }
        }
        "lp.pap" | "lp.papextend" => {
            all_boxed(diags, 0);
            if let Some(ty) = res_ty(0) {
                if *ty != TypeIR::Obj {
                    diags.push(err(format!("'{}' result must be !lp.t", op.name)));
                }
            }
        }
        "lp.joinpoint" => {
            if op.regions.len() == 2 {
                if op.regions[1].blocks.len() == 1 && !op.regions[1].blocks[0].params.is_empty() {
                    diags.push(err("joinpoint scope region takes no parameters".into()));
                }
            }
        }
        "lp.inc" | "lp.dec" => all_boxed(diags, 0),
        "lp.return" => {
            if let Some(ty) = opnd_ty(0) {
                if !f.result_type.accepts(ty) {
                    diags.push(err(format!(
                        "returned value of type {ty} does not match function result type {}",
                        f.result_type
                    )));
                }
            }
        }
        "ret" => {
            if let Some(ty) = opnd_ty(0) {
                if !f.result_type.accepts(ty) {
                    diags.push(err(format!(
                        "returned value of type {ty} does not match function result type {}",
                        f.result_type
                    )));
                }
            }
        }
        "cmp_eq" => {
            match (opnd_ty(0), opnd_ty(1)) {
                (Some(TypeIR::Int(a)), Some(TypeIR::Int(b))) if a == b => {}
                (Some(a), Some(b)) => {
                    diags.push(err(format!("'cmp_eq' operands must be equal-width integers, got {a} and {b}")))
                }
                _ => {}
            }
            if let Some(ty) = res_ty(0) {
                if *ty != TypeIR::Int(1) {
                    diags.push(err("'cmp_eq' result must be i1".into()));
                }
            }
        }
        "select" => {
            match opnd_ty(0) {
                Some(TypeIR::Int(1)) | None => {}
                Some(ty) => diags.push(err(format!("'select' condition must be i1, got {ty}"))),
            }
            if let (Some(a), Some(b)) = (opnd_ty(1), opnd_ty(2)) {
                if a != b {
                    diags.push(err(format!("'select' branch types differ: {a} vs {b}")));
                } else if let Some(r) = res_ty(0) {
                    if r != a {
                        diags.push(err(format!("'select' result type {r} differs from branch type {a}")));
                    }
                }
            }
        }
        "switch" => {
            match opnd_ty(0) {
                Some(TypeIR::Int(_)) | None => {}
                Some(ty) => diags.push(err(format!("'switch' scrutinee must be a machine integer, got {ty}"))),
            }
            if let Some(cases) = op.attr_intlist("cases") {
                if op.operands.len() != cases.len() + 2 {
                    diags.push(err(format!(
                        "'switch' expects scrutinee plus {} case values plus a default, got {} operands",
                        cases.len(),
                        op.operands.len()
                    )));
                }
            }
            let tys: Vec<_> = op.operands.iter().skip(1).filter_map(|v| f.try_value_type(*v)).collect();
            if let Some(first) = tys.first() {
                if tys.iter().any(|t| t != first) {
                    diags.push(err("'switch' case values must share one type".into()));
                } else if let Some(r) = res_ty(0) {
                    if &r != first {
                        diags.push(err(format!("'switch' result type {r} differs from case type {first}")));
                    }
                }
            }
        }
        "rgn.val" => {
            let region_params: Option<Vec<TypeIR>> = op.regions.first().map(|r| {
                r.entry().params.iter().filter_map(|p| f.try_value_type(*p).cloned()).collect()
            });
            match res_ty(0) {
                Some(TypeIR::RgnVal(params)) => {
                    if params.iter().any(|t| t.is_rgn()) {
                        diags.push(err("region value parameter types may not nest region values".into()));
                    }
                    if let Some(rp) = &region_params {
                        if rp != params {
                            diags.push(err("'rgn.val' result type does not match its region parameters".into()));
                        }
                    }
                }
                Some(ty) => diags.push(err(format!("'rgn.val' result must be a region value, got {ty}"))),
                None => {}
            }
        }
        "rgn.run" => {
            match opnd_ty(0) {
                Some(TypeIR::RgnVal(params)) => {
                    let args = &op.operands[1..];
                    if args.len() != params.len() {
                        diags.push(err(format!(
                            "'rgn.run' passes {} arguments to a region expecting {}",
                            args.len(),
                            params.len()
                        )));
                    } else {
                        for (i, (a, p)) in args.iter().zip(params).enumerate() {
                            if let Some(ty) = f.try_value_type(*a) {
                                if !p.accepts(ty) {
                                    diags.push(err(format!("'rgn.run' argument {i} has type {ty}, expected {p}")));
                                }
                            }
                        }
                    }
                }
                Some(ty) => diags.push(err(format!("'rgn.run' target must be a region value, got {ty}"))),
                None => {}
            }
        }
        "br" | "cond_br" | "switch_br" => {
            check_branch_targets(f, region, op, path, diags);
        }
        _ => {}
    }

    let _ = (bi, oi);
}

fn check_branch_targets(
    f: &FuncIR,
    region: &RegionIR,
    op: &OpIR,
    path: &OpPath,
    diags: &mut Vec<Diagnostic>,
) {
    let err = |msg: String| Diagnostic::error(&f.name, Some(path.clone()), msg);
    let nblocks = region.blocks.len();
    let check_edge = |dest: usize, args: &[ValueId], diags: &mut Vec<Diagnostic>| {
        if dest >= nblocks {
            diags.push(err(format!("branch target ^bb{dest} out of range")));
            return;
        }
        let params = &region.blocks[dest].params;
        if args.len() != params.len() {
            diags.push(err(format!(
                "branch to ^bb{dest} passes {} arguments, block expects {}",
                args.len(),
                params.len()
            )));
            return;
        }
        for (i, (a, p)) in args.iter().zip(params).enumerate() {
            if let (Some(at), Some(pt)) = (f.try_value_type(*a), f.try_value_type(*p)) {
                if !pt.accepts(at) {
                    diags.push(err(format!("branch argument {i} has type {at}, block expects {pt}")));
                }
            }
        }
    };
    match op.name.as_str() {
        "br" => {
            if let Some(dest) = op.attr_usize("dest") {
                check_edge(dest, &op.operands, diags);
            }
        }
        "cond_br" => {
            if let Some(ty) = op.operands.first().and_then(|v| f.try_value_type(*v)) {
                if *ty != TypeIR::Int(1) {
                    diags.push(err(format!("'cond_br' condition must be i1, got {ty}")));
                }
            }
            let (Some(then_dest), Some(else_dest), Some(argc)) =
                (op.attr_usize("then_dest"), op.attr_usize("else_dest"), op.attr_usize("then_argc"))
            else {
                return;
            };
            if 1 + argc > op.operands.len() {
                diags.push(err("'cond_br' then_argc exceeds operand count".into()));
                return;
            }
            check_edge(then_dest, &op.operands[1..1 + argc], diags);
            check_edge(else_dest, &op.operands[1 + argc..], diags);
        }
        "switch_br" => {
            let (Some(cases), Some(dests), Some(argcs), Some(default_dest)) = (
                op.attr_intlist("cases"),
                op.attr_intlist("case_dests"),
                op.attr_intlist("case_argcs"),
                op.attr_usize("default_dest"),
            ) else {
                return;
            };
            if cases.len() != dests.len() || cases.len() != argcs.len() {
                diags.push(err("'switch_br' case lists have inconsistent lengths".into()));
                return;
            }
            let mut pos = 1usize;
            for (d, c) in dests.iter().zip(argcs) {
                let argc = *c as usize;
                if pos + argc > op.operands.len() {
                    diags.push(err("'switch_br' case argument counts exceed operands".into()));
                    return;
                }
                check_edge(*d as usize, &op.operands[pos..pos + argc], diags);
                pos += argc;
            }
            check_edge(default_dest, &op.operands[pos..], diags);
        }
        _ => {}
    }
}

/// Successor block indices of a terminator, for CFG-level regions.
pub fn successors(op: &OpIR) -> Vec<usize> {
    match op.name.as_str() {
        "br" => op.attr_usize("dest").into_iter().collect(),
        "cond_br" => {
            let mut v = Vec::new();
            v.extend(op.attr_usize("then_dest"));
            v.extend(op.attr_usize("else_dest"));
            v
        }
        "switch_br" => {
            let mut v: Vec<usize> =
                op.attr_intlist("case_dests").unwrap_or(&[]).iter().map(|d| *d as usize).collect();
            v.extend(op.attr_usize("default_dest"));
            v
        }
        _ => Vec::new(),
    }
}

fn check_reachability(f: &FuncIR, region: &RegionIR, diags: &mut Vec<Diagnostic>) {
    let reach = reachable_blocks(region);
    for (bi, r) in reach.iter().enumerate() {
        if !r {
            diags.push(Diagnostic::error(
                &f.name,
                Some(OpPath::top(bi, 0)),
                format!("block ^bb{bi} is unreachable from entry"),
            ));
        }
    }
}

pub fn reachable_blocks(region: &RegionIR) -> Vec<bool> {
    let n = region.blocks.len();
    let mut reach = vec![false; n];
    let mut work = vec![0usize];
    while let Some(b) = work.pop() {
        if reach[b] {
            continue;
        }
        reach[b] = true;
        if let Some(term) = region.blocks[b].ops.last() {
            for s in successors(term) {
                if s < n && !reach[s] {
                    work.push(s);
                }
            }
        }
    }
    reach
}

/// Immediate dominators for a multi-block region, entry-rooted. Unreachable
/// blocks get `None`.
pub fn immediate_dominators(region: &RegionIR) -> Vec<Option<usize>> {
    let n = region.blocks.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (bi, block) in region.blocks.iter().enumerate() {
        if let Some(term) = block.ops.last() {
            for s in successors(term) {
                if s < n {
                    preds[s].push(bi);
                }
            }
        }
    }
    let reach = reachable_blocks(region);
    // iterative dataflow over dominator sets; block counts here are small
    let full: HashSet<usize> = (0..n).filter(|b| reach[*b]).collect();
    let mut dom: Vec<HashSet<usize>> = (0..n)
        .map(|b| if b == 0 { HashSet::from([0]) } else { full.clone() })
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for b in 1..n {
            if !reach[b] {
                continue;
            }
            let mut new: Option<HashSet<usize>> = None;
            for p in preds[b].iter().filter(|p| reach[**p]) {
                new = Some(match new {
                    None => dom[*p].clone(),
                    Some(acc) => acc.intersection(&dom[*p]).copied().collect(),
                });
            }
            let mut new = new.unwrap_or_default();
            new.insert(b);
            if new != dom[b] {
                dom[b] = new;
                changed = true;
            }
        }
    }
    (0..n)
        .map(|b| {
            if b == 0 || !reach[b] {
                return None;
            }
            // idom = the strict dominator dominated by all other strict doms
            dom[b]
                .iter()
                .filter(|d| **d != b)
                .find(|d| dom[b].iter().all(|o| *o == b || *o == **d || dom[**d].contains(o)))
                .copied()
        })
        .collect()
}

/// Checks that every operand is visible at its use: defined earlier in the
/// same block, a parameter of an enclosing block, defined in an enclosing
/// region before the owning op, or (across CFG blocks) defined in a
/// dominating block.
fn check_visibility(f: &FuncIR, defined: &HashSet<ValueId>, diags: &mut Vec<Diagnostic>) {
    let mut scope: HashSet<ValueId> = HashSet::new();
    visit_region(f, &f.body, &mut Vec::new(), &mut scope, defined, diags);

    fn visit_region(
        f: &FuncIR,
        region: &RegionIR,
        descents: &mut Vec<(usize, usize, usize)>,
        scope: &HashSet<ValueId>,
        defined: &HashSet<ValueId>,
        diags: &mut Vec<Diagnostic>,
    ) {
        if region.blocks.len() <= 1 {
            if let Some(block) = region.blocks.first() {
                visit_block(f, region, block, 0, descents, scope.clone(), defined, diags);
            }
            return;
        }
        // multi-block: visible-at-entry = defs of strict dominators
        let idom = immediate_dominators(region);
        let block_defs: Vec<HashSet<ValueId>> = region
            .blocks
            .iter()
            .map(|b| {
                let mut s: HashSet<ValueId> = b.params.iter().copied().collect();
                for op in &b.ops {
                    s.extend(op.results.iter().copied());
                }
                s
            })
            .collect();
        for (bi, block) in region.blocks.iter().enumerate() {
            let mut visible = scope.clone();
            let mut d = idom[bi];
            while let Some(dd) = d {
                visible.extend(block_defs[dd].iter().copied());
                d = idom[dd];
            }
            visit_block(f, region, block, bi, descents, visible, defined, diags);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_block(
        f: &FuncIR,
        _region: &RegionIR,
        block: &BlockIR,
        bi: usize,
        descents: &mut Vec<(usize, usize, usize)>,
        mut visible: HashSet<ValueId>,
        defined: &HashSet<ValueId>,
        diags: &mut Vec<Diagnostic>,
    ) {
        visible.extend(block.params.iter().copied());
        for (oi, op) in block.ops.iter().enumerate() {
            let path = OpPath { descents: descents.clone(), block: bi, op: oi };
            for v in &op.operands {
                if !defined.contains(v) {
                    diags.push(Diagnostic::error(
                        &f.name,
                        Some(path.clone()),
                        format!("use of undefined value {v}"),
                    ));
                } else if !visible.contains(v) {
                    diags.push(Diagnostic::error(
                        &f.name,
                        Some(path.clone()),
                        format!("value {v} is not visible at this use"),
                    ));
                }
            }
            for (ri, sub) in op.regions.iter().enumerate() {
                descents.push((bi, oi, ri));
                visit_region(f, sub, descents, &visible, defined, diags);
                descents.pop();
            }
            visible.extend(op.results.iter().copied());
        }
    }
}

// ---------------------------------------------------------------------------
// lp dialect rules

/// The joinpoints whose scope region lexically encloses `path`, innermost
/// last. Descending through a joinpoint's body region does not bind jumps to
/// that joinpoint; bodies target the next joinpoint out.
pub fn joinpoint_stack_at(f: &FuncIR, path: &OpPath) -> Vec<OpPath> {
    let mut stack = Vec::new();
    let mut region = &f.body;
    let mut prefix: Vec<(usize, usize, usize)> = Vec::new();
    for &(b, o, r) in &path.descents {
        let op = &region.blocks[b].ops[o];
        if op.name == "lp.joinpoint" && r == 1 {
            stack.push(OpPath { descents: prefix.clone(), block: b, op: o });
        }
        prefix.push((b, o, r));
        region = &op.regions[r];
    }
    stack
}

/// Resolves the joinpoint a jump at `path` binds to: the innermost enclosing
/// joinpoint scope.
pub fn resolve_jump_target(f: &FuncIR, path: &OpPath) -> Option<OpPath> {
    joinpoint_stack_at(f, path).pop()
}

/// Dialect rules for the functional op set. Assumes the structural pass is
/// clean.
pub fn verify_lp(m: &ModuleIR) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for f in m.funcs.values() {
        let mut checks: Vec<(OpPath, OpIR)> = Vec::new();
        walk_ops(f, &mut |path, op| checks.push((path.clone(), op.clone())));
        for (path, op) in &checks {
            let err = |msg: String| Diagnostic::error(&f.name, Some(path.clone()), msg);
            match op.name.as_str() {
                "lp.switch" => {
                    if let Some(cases) = op.attr_intlist("cases") {
                        let mut seen = HashSet::new();
                        for c in cases {
                            if !seen.insert(*c) {
                                diags.push(err(format!("duplicate case value {c} in 'lp.switch'")));
                            }
                        }
                        if let Some(TypeIR::Int(w)) =
                            op.operands.first().and_then(|v| f.try_value_type(*v))
                        {
                            for c in cases {
                                if !fits_width(&BigInt::from(*c), *w) {
                                    diags.push(err(format!("case value {c} does not fit scrutinee width i{w}")));
                                }
                            }
                        }
                    }
                    for (ri, sub) in op.regions.iter().enumerate() {
                        if let Some(last) = sub.blocks.first().and_then(|b| b.ops.last()) {
                            if last.name != "lp.return" && last.name != "lp.jump" {
                                diags.push(err(format!(
                                    "switch region {ri} must end in lp.return or lp.jump, ends in '{}'",
                                    last.name
                                )));
                            }
                        }
                    }
                }
                "lp.joinpoint" => {
                    for (ri, sub) in op.regions.iter().enumerate() {
                        if let Some(last) = sub.blocks.first().and_then(|b| b.ops.last()) {
                            if last.name != "lp.return" && last.name != "lp.jump" {
                                diags.push(err(format!(
                                    "joinpoint region {ri} must end in lp.return or lp.jump, ends in '{}'",
                                    last.name
                                )));
                            }
                        }
                    }
                }
                "lp.jump" => match resolve_jump_target(f, path) {
                    None => diags.push(err("jump without enclosing joinpoint".into())),
                    Some(jp_path) => {
                        let jp = f.op_at(&jp_path).expect("joinpoint path resolves");
                        let params = &jp.regions[0].entry().params;
                        if op.operands.len() != params.len() {
                            diags.push(err(format!(
                                "jump passes {} arguments, joinpoint body expects {}",
                                op.operands.len(),
                                params.len()
                            )));
                        } else {
                            for (i, (a, p)) in op.operands.iter().zip(params).enumerate() {
                                if let (Some(at), Some(pt)) = (f.try_value_type(*a), f.try_value_type(*p)) {
                                    if !pt.accepts(at) {
                                        diags.push(err(format!(
                                            "jump argument {i} has type {at}, joinpoint body expects {pt}"
                                        )));
                                    }
                                }
                            }
                        }
                    }
                },
                "lp.project" => {
                    if op.attr_int("index").map(|i| i.is_negative()).unwrap_or(false) {
                        diags.push(err("'lp.project' index must be non-negative".into()));
                    }
                }
                "lp.pap" => {
                    if let Some(sym) = op.attr_symbol("fn") {
                        let target = m.globals.get(sym).map(|s| s.as_str()).unwrap_or(sym);
                        match callee_sig(m, target) {
                            Some((params, _)) => {
                                if op.operands.len() >= params.len() {
                                    diags.push(err(format!(
                                        "'lp.pap' must be strictly unsaturated: @{sym} has arity {}, got {} operands",
                                        params.len(),
                                        op.operands.len()
                                    )));
                                }
                            }
                            None => diags.push(err(format!("'lp.pap' target @{sym} is not callable"))),
                        }
                    }
                }
                "call" => {
                    if let Some(sym) = op.attr_symbol("fn") {
                        match callee_sig(m, sym) {
                            Some((params, result)) => {
                                if op.operands.len() != params.len() {
                                    diags.push(err(format!(
                                        "call to @{sym} passes {} arguments, arity is {}",
                                        op.operands.len(),
                                        params.len()
                                    )));
                                } else {
                                    for (i, (a, p)) in op.operands.iter().zip(&params).enumerate() {
                                        if let Some(at) = f.try_value_type(*a) {
                                            if !p.accepts(at) {
                                                diags.push(err(format!(
                                                    "call argument {i} has type {at}, @{sym} expects {p}"
                                                )));
                                            }
                                        }
                                    }
                                }
                                if let Some(r) = op.results.first().and_then(|v| f.try_value_type(*v)) {
                                    if *r != result {
                                        diags.push(err(format!(
                                            "call result type {r} differs from @{sym} result type {result}"
                                        )));
                                    }
                                }
                                if op.has_flag("musttail") {
                                    if result != f.result_type {
                                        diags.push(err(format!(
                                            "musttail callee result {result} must equal caller result {}",
                                            f.result_type
                                        )));
                                    }
                                    let block = block_of(f, path);
                                    let next = block.and_then(|b| b.ops.get(path.op + 1));
                                    let tail_ok = next
                                        .map(|n| {
                                            n.name == "lp.return"
                                                && n.operands.first() == op.results.first()
                                        })
                                        .unwrap_or(false);
                                    if !tail_ok {
                                        diags.push(err("musttail call not in tail position".into()));
                                    }
                                }
                            }
                            None => diags.push(err(format!("call target @{sym} is not callable"))),
                        }
                    }
                }
                _ => {}
            }
        }
    }
    diags
}

fn block_of<'f>(f: &'f FuncIR, path: &OpPath) -> Option<&'f BlockIR> {
    f.region_at(&path.descents)?.blocks.get(path.block)
}

// ---------------------------------------------------------------------------
// rgn dialect rules

/// Restriction rules for region values. Assumes the structural pass is clean.
pub fn verify_rgn(m: &ModuleIR) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for f in m.funcs.values() {
        // region-typed values may not be block or region parameters
        let defs = collect_defs(f);
        for (v, kind) in &defs {
            if f.try_value_type(*v).map(|t| t.is_rgn()).unwrap_or(false) {
                if let DefKind::BlockParam { .. } = kind {
                    diags.push(Diagnostic::error(
                        &f.name,
                        None,
                        format!("region value {v} may not be a block or region parameter"),
                    ));
                }
            }
        }
        walk_ops(f, &mut |path, op| {
            let err = |msg: String| Diagnostic::error(&f.name, Some(path.clone()), msg);
            for (i, v) in op.operands.iter().enumerate() {
                let is_rgn = f.try_value_type(*v).map(|t| t.is_rgn()).unwrap_or(false);
                if !is_rgn {
                    continue;
                }
                match op.name.as_str() {
                    "rgn.run" if i == 0 => {}
                    "select" if i > 0 => {}
                    "switch" if i > 0 => {}
                    "call" => diags.push(err(format!("region value {v} escapes via call"))),
                    "lp.return" | "ret" => diags.push(err(format!("region value {v} returned"))),
                    _ => diags.push(err(format!(
                        "region value {v} may only be used by select, switch, or rgn.run"
                    ))),
                }
            }
            if op.name == "rgn.val" {
                if let Some(last) = op.regions.first().and_then(|r| r.blocks.first()).and_then(|b| b.ops.last()) {
                    if !matches!(last.name.as_str(), "lp.return" | "lp.jump" | "rgn.run") {
                        diags.push(err(format!(
                            "'rgn.val' region must end in lp.return, lp.jump, or rgn.run, ends in '{}'",
                            last.name
                        )));
                    }
                }
            }
        });
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn const_int(f: &mut FuncIR, v: i64, w: u8) -> (OpIR, ValueId) {
        let r = f.fresh_value(TypeIR::Int(w));
        (
            OpIR::new("lp.int").with_attr("value", AttrIR::Int(BigInt::from(v))).with_results(vec![r]),
            r,
        )
    }

    fn module_of(f: FuncIR) -> ModuleIR {
        let mut m = ModuleIR::new();
        m.add_func(f);
        m
    }

    #[test]
    fn undefined_operand_reported() {
        let mut f = FuncIR::new("f", vec![], TypeIR::Int(64));
        f.body.blocks[0].ops.push(OpIR::new("lp.return").with_operands(vec![ValueId(7)]));
        let diags = verify_module(&module_of(f));
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("use of undefined value"));
    }

    #[test]
    fn interior_terminator_reported() {
        let mut f = FuncIR::new("f", vec![TypeIR::Obj], TypeIR::Obj);
        let p = f.entry_params()[0];
        f.body.blocks[0].ops.push(OpIR::new("lp.return").with_operands(vec![p]));
        f.body.blocks[0].ops.push(OpIR::new("lp.return").with_operands(vec![p]));
        let diags = verify_module(&module_of(f));
        assert!(diags.iter().any(|d| d.message.contains("terminator not last")));
    }

    #[test]
    fn verify_is_idempotent() {
        let mut f = FuncIR::new("f", vec![], TypeIR::Int(64));
        let (c, r) = const_int(&mut f, 1, 64);
        f.body.blocks[0].ops.push(c);
        f.body.blocks[0].ops.push(OpIR::new("lp.return").with_operands(vec![r]));
        let m = module_of(f);
        assert_eq!(verify_module(&m), verify_module(&m));
        assert!(verify_module(&m).is_empty());
    }

    #[test]
    fn jump_outside_joinpoint_reported() {
        let mut f = FuncIR::new("f", vec![], TypeIR::Int(64));
        f.body.blocks[0].ops.push(OpIR::new("lp.jump"));
        let m = module_of(f);
        let diags = verify_lp(&m);
        assert!(diags.iter().any(|d| d.message.contains("jump without enclosing joinpoint")));
    }

    #[test]
    fn duplicate_switch_cases_rejected() {
        let mut f = FuncIR::new("f", vec![TypeIR::Int(8)], TypeIR::Obj);
        let p = f.entry_params()[0];
        let mut arm = || {
            let mut b = BlockIR::default();
            b.ops.push(OpIR::new("lp.return").with_operands(vec![p]));
            RegionIR::single(b)
        };
        let regions = vec![arm(), arm(), arm()];
        f.body.blocks[0].ops.push(
            OpIR::new("lp.switch")
                .with_operands(vec![p])
                .with_attr("cases", AttrIR::IntList(vec![1, 1]))
                .with_regions(regions),
        );
        // p is Obj-typed: also exercises scrutinee type diagnostics ordering
        let m = module_of(f);
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("duplicate case value")));
    }

    #[test]
    fn region_value_escape_via_call_rejected() {
        let mut callee = FuncIR::new("g", vec![TypeIR::Obj], TypeIR::Obj);
        let gp = callee.entry_params()[0];
        callee.body.blocks[0].ops.push(OpIR::new("lp.return").with_operands(vec![gp]));

        let mut f = FuncIR::new("f", vec![], TypeIR::Obj);
        let rv = f.fresh_value(TypeIR::RgnVal(vec![]));
        let (c, cr) = const_int(&mut f, 1, 64);
        let mut inner = BlockIR::default();
        inner.ops.push(c.clone());
        inner.ops.push(OpIR::new("lp.return").with_operands(vec![cr]));
        f.body.blocks[0].ops.push(OpIR::new("rgn.val").with_results(vec![rv]).with_regions(vec![RegionIR::single(inner)]));
        let res = f.fresh_value(TypeIR::Obj);
        f.body.blocks[0].ops.push(
            OpIR::new("call")
                .with_operands(vec![rv])
                .with_attr("fn", AttrIR::Symbol("g".into()))
                .with_results(vec![res]),
        );
        f.body.blocks[0].ops.push(OpIR::new("lp.return").with_operands(vec![res]));
        let mut m = ModuleIR::new();
        m.add_func(callee);
        m.add_func(f);
        let diags = verify_rgn(&m);
        assert!(diags.iter().any(|d| d.message.contains("escapes via call")));
    }

    #[test]
    fn musttail_not_in_tail_position_rejected() {
        let mut f = FuncIR::new("f", vec![TypeIR::Obj], TypeIR::Obj);
        let p = f.entry_params()[0];
        let r = f.fresh_value(TypeIR::Obj);
        f.body.blocks[0].ops.push(
            OpIR::new("call")
                .with_operands(vec![p])
                .with_attr("fn", AttrIR::Symbol("f".into()))
                .with_attr("musttail", AttrIR::Flag)
                .with_results(vec![r]),
        );
        let (c, cr) = const_int(&mut f, 1, 64);
        f.body.blocks[0].ops.push(c);
        let _ = cr;
        f.body.blocks[0].ops.push(OpIR::new("lp.return").with_operands(vec![r]));
        let m = module_of(f);
        let diags = verify_lp(&m);
        assert!(diags.iter().any(|d| d.message.contains("musttail call not in tail position")));
    }
}
