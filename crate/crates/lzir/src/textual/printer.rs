use std::collections::HashMap;
use std::fmt::Write;

use crate::ir::*;

/// Prints the canonical textual form: stable `%0, %1, ...` value naming in
/// definition order, two-space indentation per region nesting level, LF line
/// endings.
pub fn print_module(m: &ModuleIR) -> String {
    let mut out = String::from("module {\n");
    for (slot, init) in &m.globals {
        let _ = writeln!(out, "  global @{slot} = @{init}");
    }
    for f in m.funcs.values() {
        print_func(&mut out, f);
    }
    out.push_str("}\n");
    out
}

fn assign_names(f: &FuncIR) -> HashMap<ValueId, usize> {
    let mut names = HashMap::new();
    let mut next = 0usize;
    fn region(r: &RegionIR, names: &mut HashMap<ValueId, usize>, next: &mut usize) {
        for block in &r.blocks {
            for p in &block.params {
                names.entry(*p).or_insert_with(|| {
                    let n = *next;
                    *next += 1;
                    n
                });
            }
            for op in &block.ops {
                for res in &op.results {
                    names.entry(*res).or_insert_with(|| {
                        let n = *next;
                        *next += 1;
                        n
                    });
                }
                for sub in &op.regions {
                    region(sub, names, next);
                }
            }
        }
    }
    region(&f.body, &mut names, &mut next);
    names
}

struct FuncPrinter<'f> {
    f: &'f FuncIR,
    names: HashMap<ValueId, usize>,
}

impl<'f> FuncPrinter<'f> {
    fn name(&self, v: ValueId) -> String {
        match self.names.get(&v) {
            Some(n) => format!("%{n}"),
            None => format!("%u{}", v.0), // undefined; printable for debugging
        }
    }

    fn operand_list(&self, ops: &[ValueId]) -> String {
        ops.iter().map(|v| self.name(*v)).collect::<Vec<_>>().join(", ")
    }

    fn edge(&self, dest: usize, args: &[ValueId]) -> String {
        if args.is_empty() {
            format!("^bb{dest}")
        } else {
            format!("^bb{dest}({})", self.operand_list(args))
        }
    }

    fn attr_value(v: &AttrIR) -> String {
        match v {
            AttrIR::Int(i) => i.to_string(),
            AttrIR::Symbol(s) => format!("@{s}"),
            AttrIR::IntList(l) => {
                let items = l.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
                format!("[{items}]")
            }
            AttrIR::Flag => String::new(),
        }
    }

    fn attr_dict(attrs: &AttrMap) -> String {
        let parts: Vec<String> = attrs
            .iter()
            .map(|(k, v)| match v {
                AttrIR::Flag => k.clone(),
                other => format!("{k} = {}", Self::attr_value(other)),
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    fn print_block_body(&self, out: &mut String, block: &BlockIR, indent: usize) {
        for op in &block.ops {
            self.print_op(out, op, indent);
        }
    }

    fn print_region(&self, out: &mut String, region: &RegionIR, indent: usize) {
        // op-owned regions are single-block
        let block = &region.blocks[0];
        if !block.params.is_empty() {
            let params: Vec<String> = block
                .params
                .iter()
                .map(|p| format!("{}: {}", self.name(*p), self.f.value_type(*p)))
                .collect();
            let _ = writeln!(out, "{}^({}):", " ".repeat(indent), params.join(", "));
        }
        self.print_block_body(out, block, indent + 2);
    }

    fn print_op(&self, out: &mut String, op: &OpIR, indent: usize) {
        let pad = " ".repeat(indent);
        match op.name.as_str() {
            "lp.int" | "lp.bigint" => {
                let r = op.results[0];
                let _ = writeln!(
                    out,
                    "{pad}{} = {} {} : {}",
                    self.name(r),
                    op.name,
                    op.attr_int("value").map(|v| v.to_string()).unwrap_or_default(),
                    self.f.value_type(r)
                );
                return;
            }
            "rgn.run" => {
                let _ = writeln!(
                    out,
                    "{pad}rgn.run {}({})",
                    self.name(op.operands[0]),
                    self.operand_list(&op.operands[1..])
                );
                return;
            }
            "br" => {
                let dest = op.attr_usize("dest").unwrap_or(0);
                let _ = writeln!(out, "{pad}br {}", self.edge(dest, &op.operands));
                return;
            }
            "cond_br" => {
                let argc = op.attr_usize("then_argc").unwrap_or(0);
                let then_dest = op.attr_usize("then_dest").unwrap_or(0);
                let else_dest = op.attr_usize("else_dest").unwrap_or(0);
                let _ = writeln!(
                    out,
                    "{pad}cond_br {}, {}, {}",
                    self.name(op.operands[0]),
                    self.edge(then_dest, &op.operands[1..1 + argc]),
                    self.edge(else_dest, &op.operands[1 + argc..])
                );
                return;
            }
            "switch_br" => {
                let cases = op.attr_intlist("cases").unwrap_or(&[]);
                let dests = op.attr_intlist("case_dests").unwrap_or(&[]);
                let argcs = op.attr_intlist("case_argcs").unwrap_or(&[]);
                let default_dest = op.attr_usize("default_dest").unwrap_or(0);
                let mut parts = Vec::new();
                let mut pos = 1usize;
                for ((v, d), c) in cases.iter().zip(dests).zip(argcs) {
                    let argc = *c as usize;
                    parts.push(format!("{v} -> {}", self.edge(*d as usize, &op.operands[pos..pos + argc])));
                    pos += argc;
                }
                parts.push(format!("default -> {}", self.edge(default_dest, &op.operands[pos..])));
                let _ = writeln!(out, "{pad}switch_br {} [{}]", self.name(op.operands[0]), parts.join(", "));
                return;
            }
            _ => {}
        }

        let mut line = pad.clone();
        if let Some(r) = op.result() {
            let _ = write!(line, "{} = ", self.name(r));
        }
        line.push_str(&op.name);
        if !op.operands.is_empty() {
            let _ = write!(line, " {}", self.operand_list(&op.operands));
        }
        if !op.attrs.is_empty() {
            let _ = write!(line, " {}", Self::attr_dict(&op.attrs));
        }
        if op.regions.is_empty() {
            if let Some(r) = op.result() {
                if op.name != "rgn.val" {
                    let _ = write!(line, " : {}", self.f.value_type(r));
                }
            }
            let _ = writeln!(out, "{line}");
        } else {
            out.push_str(&line);
            for region in &op.regions {
                out.push_str(" {\n");
                self.print_region(out, region, indent);
                let _ = write!(out, "{pad}}}");
            }
            if let Some(r) = op.result() {
                if op.name != "rgn.val" {
                    let _ = write!(out, " : {}", self.f.value_type(r));
                }
            }
            out.push('\n');
        }
    }
}

fn print_func(out: &mut String, f: &FuncIR) {
    let p = FuncPrinter { f, names: assign_names(f) };
    let params: Vec<String> = f
        .entry_params()
        .iter()
        .map(|v| format!("{}: {}", p.name(*v), f.value_type(*v)))
        .collect();
    let _ = writeln!(out, "  func @{}({}) -> {} {{", f.name, params.join(", "), f.result_type);
    for (bi, block) in f.body.blocks.iter().enumerate() {
        if bi > 0 {
            if block.params.is_empty() {
                let _ = writeln!(out, "  ^bb{bi}:");
            } else {
                let params: Vec<String> = block
                    .params
                    .iter()
                    .map(|v| format!("{}: {}", p.name(*v), f.value_type(*v)))
                    .collect();
                let _ = writeln!(out, "  ^bb{bi}({}):", params.join(", "));
            }
        }
        p.print_block_body(out, block, 4);
    }
    out.push_str("  }\n");
}
