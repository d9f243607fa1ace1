use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::lexer::{lex, Spanned, Tok};
use super::SourceSpan;
use crate::ir::*;
use crate::verify::verify_module;

#[derive(Clone, Debug)]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
    pub expected: Vec<String>,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

/// Parses the textual form. On success the module is verifier-clean; every
/// verifier diagnostic is reported as a parse error at the offending op.
pub fn parse_module(src: &str) -> Result<ModuleIR, Vec<ParseError>> {
    let toks = lex(src).map_err(|e| vec![ParseError { message: e.message, span: e.span, expected: vec![] }])?;
    let mut p = Parser { toks, pos: 0, op_spans: HashMap::new(), region_depth: 0 };
    let module = p.module().map_err(|e| vec![e])?;

    let diags = verify_module(&module);
    if diags.is_empty() {
        return Ok(module);
    }
    let errors = diags
        .into_iter()
        .map(|d| {
            let span = d
                .path
                .as_ref()
                .and_then(|path| p.op_spans.get(&(d.func.clone(), path.clone())))
                .copied()
                .unwrap_or_else(|| SourceSpan::point(0, 1, 1));
            ParseError { message: d.message, span, expected: vec![] }
        })
        .collect();
    Err(errors)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    op_spans: HashMap<(String, OpPath), SourceSpan>,
    region_depth: usize,
}

/// Per-function parse state: value names, forward references, block labels.
struct FuncCtx {
    func: FuncIR,
    names: HashMap<String, ValueId>,
    /// Used before defined: id was allocated with a placeholder type.
    unresolved: HashMap<String, (ValueId, SourceSpan)>,
    labels: HashMap<String, usize>,
    /// (block, op, attr key or "case_dests[i]") -> label name
    label_fixups: Vec<(usize, usize, LabelSlot, String, SourceSpan)>,
    span_order: Vec<SourceSpan>,
}

enum LabelSlot {
    Attr(&'static str),
    CaseDest(usize),
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            message: message.into(),
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", self.peek()), &[what])
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => self.err(format!("expected '{kw}', found {other}"), &[kw]),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn symbol(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Symbol(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected symbol, found {other}"), &["@name"]),
        }
    }

    fn module(&mut self) -> PResult<ModuleIR> {
        self.keyword("module")?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut module = ModuleIR::new();
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(s) if s == "func" => {
                    let (f, spans) = self.func()?;
                    let fname = f.name.clone();
                    if module.funcs.contains_key(&fname) {
                        return self.err(format!("duplicate function @{fname}"), &[]);
                    }
                    module.add_func(f);
                    // walk order matches parse order; zip paths with spans
                    let func = &module.funcs[&fname];
                    let mut idx = 0usize;
                    walk_ops(func, &mut |path, _| {
                        if let Some(sp) = spans.get(idx) {
                            self.op_spans.insert((fname.clone(), path.clone()), *sp);
                        }
                        idx += 1;
                    });
                }
                Tok::Ident(s) if s == "global" => {
                    self.bump();
                    let slot = self.symbol()?;
                    self.expect(Tok::Equal, "'='")?;
                    let init = self.symbol()?;
                    module.globals.insert(slot, init);
                }
                other => return self.err(format!("expected 'func', 'global', or '}}', found {other}"), &[]),
            }
        }
        self.expect(Tok::Eof, "end of input")?;
        Ok(module)
    }

    fn type_ir(&mut self) -> PResult<TypeIR> {
        match self.peek().clone() {
            Tok::Ident(s) if s.starts_with('i') && s[1..].chars().all(|c| c.is_ascii_digit()) => {
                let w: u8 = s[1..].parse().map_err(|_| ParseError {
                    message: format!("bad integer width '{s}'"),
                    span: self.span(),
                    expected: vec![],
                })?;
                if !INT_WIDTHS.contains(&w) {
                    return self.err(format!("unsupported integer width i{w}"), &["i1", "i8", "i32", "i64"]);
                }
                self.bump();
                Ok(TypeIR::Int(w))
            }
            Tok::Bang => {
                self.bump();
                match self.peek().clone() {
                    Tok::Ident(s) if s == "lp.t" => {
                        self.bump();
                        Ok(TypeIR::Obj)
                    }
                    Tok::Ident(s) if s == "rgn.val" => {
                        self.bump();
                        self.expect(Tok::Lt, "'<'")?;
                        let mut params = Vec::new();
                        if !self.eat(&Tok::Gt) {
                            loop {
                                params.push(self.type_ir()?);
                                if self.eat(&Tok::Gt) {
                                    break;
                                }
                                self.expect(Tok::Comma, "','")?;
                            }
                        }
                        Ok(TypeIR::RgnVal(params))
                    }
                    other => self.err(format!("expected type name, found {other}"), &["!lp.t", "!rgn.val<...>"]),
                }
            }
            other => self.err(format!("expected type, found {other}"), &["type"]),
        }
    }

    fn func(&mut self) -> PResult<(FuncIR, Vec<SourceSpan>)> {
        self.keyword("func")?;
        let name = self.symbol()?;
        self.expect(Tok::LParen, "'('")?;
        let mut param_names = Vec::new();
        let mut param_types = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let pname = match self.peek().clone() {
                    Tok::Value(v) => {
                        self.bump();
                        v
                    }
                    other => return self.err(format!("expected parameter, found {other}"), &["%name"]),
                };
                self.expect(Tok::Colon, "':'")?;
                param_types.push(self.type_ir()?);
                param_names.push(pname);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "','")?;
            }
        }
        self.expect(Tok::Arrow, "'->'")?;
        let result_type = self.type_ir()?;
        self.expect(Tok::LBrace, "'{'")?;

        let func = FuncIR::new(name, param_types, result_type);
        let mut ctx = FuncCtx {
            names: HashMap::new(),
            unresolved: HashMap::new(),
            labels: HashMap::new(),
            label_fixups: Vec::new(),
            span_order: Vec::new(),
            func,
        };
        for (i, pname) in param_names.iter().enumerate() {
            let id = ctx.func.entry_params()[i];
            if ctx.names.insert(pname.clone(), id).is_some() {
                return self.err(format!("duplicate parameter %{pname}"), &[]);
            }
        }

        // entry block ops, then labeled blocks
        let mut current = 0usize;
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Label(l) if !l.is_empty() => {
                    self.bump();
                    let mut params = Vec::new();
                    if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
                        loop {
                            let pname = match self.peek().clone() {
                                Tok::Value(v) => {
                                    self.bump();
                                    v
                                }
                                other => {
                                    return self.err(format!("expected block parameter, found {other}"), &["%name"])
                                }
                            };
                            self.expect(Tok::Colon, "':'")?;
                            let ty = self.type_ir()?;
                            let id = self.define(&mut ctx, &pname, ty)?;
                            params.push(id);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma, "','")?;
                        }
                    }
                    self.expect(Tok::Colon, "':'")?;
                    ctx.func.body.blocks.push(BlockIR { params, ops: Vec::new() });
                    current = ctx.func.body.blocks.len() - 1;
                    if ctx.labels.insert(l.clone(), current).is_some() {
                        return self.err(format!("duplicate block label ^{l}"), &[]);
                    }
                }
                _ => {
                    let op = self.op(&mut ctx)?;
                    ctx.func.body.blocks[current].ops.push(op);
                }
            }
        }

        // resolve forward-referenced labels
        for (b, o, slot, label, span) in std::mem::take(&mut ctx.label_fixups) {
            let Some(&dest) = ctx.labels.get(&label) else {
                return Err(ParseError {
                    message: format!("unknown block label ^{label}"),
                    span,
                    expected: vec![],
                });
            };
            let op = &mut ctx.func.body.blocks[b].ops[o];
            match slot {
                LabelSlot::Attr(key) => {
                    op.attrs.insert(key.to_string(), AttrIR::Int(BigInt::from(dest)));
                }
                LabelSlot::CaseDest(i) => {
                    if let Some(AttrIR::IntList(v)) = op.attrs.get_mut("case_dests") {
                        v[i] = dest as i64;
                    }
                }
            }
        }
        if let Some((name, (_, span))) = ctx.unresolved.iter().next() {
            return Err(ParseError {
                message: format!("use of undefined value %{name}"),
                span: *span,
                expected: vec![],
            });
        }
        Ok((ctx.func, ctx.span_order))
    }

    fn define(&mut self, ctx: &mut FuncCtx, name: &str, ty: TypeIR) -> PResult<ValueId> {
        if ctx.names.contains_key(name) {
            return self.err(format!("redefinition of %{name}"), &[]);
        }
        let id = if let Some((id, _)) = ctx.unresolved.remove(name) {
            ctx.func.set_value_type(id, ty);
            id
        } else {
            ctx.func.fresh_value(ty)
        };
        ctx.names.insert(name.to_string(), id);
        Ok(id)
    }

    fn use_value(&mut self, ctx: &mut FuncCtx, name: &str) -> ValueId {
        if let Some(id) = ctx.names.get(name) {
            return *id;
        }
        if let Some((id, _)) = ctx.unresolved.get(name) {
            return *id;
        }
        let id = ctx.func.fresh_value(TypeIR::Obj);
        ctx.unresolved.insert(name.to_string(), (id, self.span()));
        id
    }

    fn operand(&mut self, ctx: &mut FuncCtx) -> PResult<ValueId> {
        match self.peek().clone() {
            Tok::Value(v) => {
                let id = self.use_value(ctx, &v);
                self.bump();
                Ok(id)
            }
            other => self.err(format!("expected value, found {other}"), &["%value"]),
        }
    }

    fn operand_list(&mut self, ctx: &mut FuncCtx) -> PResult<Vec<ValueId>> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Value(_)) {
            out.push(self.operand(ctx)?);
            while self.eat(&Tok::Comma) {
                out.push(self.operand(ctx)?);
            }
        }
        Ok(out)
    }

    fn int_literal(&mut self) -> PResult<BigInt> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.err("expected integer literal", &["integer"]),
        }
    }

    /// `^bb(args)?` branch edge; returns (label, args).
    fn branch_edge(&mut self, ctx: &mut FuncCtx) -> PResult<(String, Vec<ValueId>, SourceSpan)> {
        let span = self.span();
        let label = match self.peek().clone() {
            Tok::Label(l) if !l.is_empty() => {
                self.bump();
                l
            }
            other => return self.err(format!("expected block label, found {other}"), &["^label"]),
        };
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            args.push(self.operand(ctx)?);
            while self.eat(&Tok::Comma) {
                args.push(self.operand(ctx)?);
            }
            self.expect(Tok::RParen, "')'")?;
        }
        Ok((label, args, span))
    }

    fn at_attr_dict(&self) -> bool {
        if *self.peek() != Tok::LBrace {
            return false;
        }
        match self.peek_at(1) {
            Tok::RBrace => false, // empty region
            Tok::Ident(k) if !k.contains('.') => {
                matches!(self.peek_at(2), Tok::Equal | Tok::Comma | Tok::RBrace)
            }
            _ => false,
        }
    }

    fn attr_dict(&mut self) -> PResult<AttrMap> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut attrs = AttrMap::new();
        loop {
            let key = match self.peek().clone() {
                Tok::Ident(k) => {
                    self.bump();
                    k
                }
                other => return self.err(format!("expected attribute name, found {other}"), &["name"]),
            };
            let value = if self.eat(&Tok::Equal) {
                match self.peek().clone() {
                    Tok::Int(v) => {
                        self.bump();
                        AttrIR::Int(v)
                    }
                    Tok::Symbol(s) => {
                        self.bump();
                        AttrIR::Symbol(s)
                    }
                    Tok::LBracket => {
                        self.bump();
                        let mut vals = Vec::new();
                        if !self.eat(&Tok::RBracket) {
                            loop {
                                let v = self.int_literal()?;
                                let v = v.to_i64().ok_or_else(|| ParseError {
                                    message: "list element does not fit in 64 bits".into(),
                                    span: self.prev_span(),
                                    expected: vec![],
                                })?;
                                vals.push(v);
                                if self.eat(&Tok::RBracket) {
                                    break;
                                }
                                self.expect(Tok::Comma, "','")?;
                            }
                        }
                        AttrIR::IntList(vals)
                    }
                    other => return self.err(format!("expected attribute value, found {other}"), &[]),
                }
            } else {
                AttrIR::Flag
            };
            attrs.insert(key, value);
            if self.eat(&Tok::RBrace) {
                break;
            }
            self.expect(Tok::Comma, "','")?;
        }
        Ok(attrs)
    }

    fn region(&mut self, ctx: &mut FuncCtx) -> PResult<RegionIR> {
        self.region_depth += 1;
        let r = self.region_inner(ctx);
        self.region_depth -= 1;
        r
    }

    fn region_inner(&mut self, ctx: &mut FuncCtx) -> PResult<RegionIR> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut params = Vec::new();
        if let Tok::Label(l) = self.peek().clone() {
            if !l.is_empty() {
                return self.err("op-owned regions have a single unlabeled block", &[]);
            }
            self.bump();
            self.expect(Tok::LParen, "'('")?;
            if !self.eat(&Tok::RParen) {
                loop {
                    let pname = match self.peek().clone() {
                        Tok::Value(v) => {
                            self.bump();
                            v
                        }
                        other => return self.err(format!("expected region parameter, found {other}"), &["%name"]),
                    };
                    self.expect(Tok::Colon, "':'")?;
                    let ty = self.type_ir()?;
                    let id = self.define(ctx, &pname, ty)?;
                    params.push(id);
                    if self.eat(&Tok::RParen) {
                        break;
                    }
                    self.expect(Tok::Comma, "','")?;
                }
            }
            self.expect(Tok::Colon, "':'")?;
        }
        let mut ops = Vec::new();
        while !self.eat(&Tok::RBrace) {
            ops.push(self.op(ctx)?);
        }
        Ok(RegionIR::single(BlockIR { params, ops }))
    }

    fn op(&mut self, ctx: &mut FuncCtx) -> PResult<OpIR> {
        let op_span = self.span();
        let result_name = match self.peek().clone() {
            Tok::Value(v) => {
                if *self.peek_at(1) == Tok::Equal {
                    self.bump();
                    self.bump();
                    Some(v)
                } else {
                    return self.err("expected op (value not followed by '=')", &[]);
                }
            }
            _ => None,
        };
        let name = match self.peek().clone() {
            Tok::Ident(n) => {
                self.bump();
                n
            }
            other => return self.err(format!("expected op name, found {other}"), &["op name"]),
        };

        let mut op = OpIR::new(name.clone());

        match name.as_str() {
            "lp.int" | "lp.bigint" => {
                let v = self.int_literal()?;
                op.attrs.insert("value".into(), AttrIR::Int(v));
            }
            "rgn.run" => {
                let target = self.operand(ctx)?;
                self.expect(Tok::LParen, "'('")?;
                let mut args = vec![target];
                if !self.eat(&Tok::RParen) {
                    args.push(self.operand(ctx)?);
                    while self.eat(&Tok::Comma) {
                        args.push(self.operand(ctx)?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                }
                op.operands = args;
                ctx.span_order.push(op_span);
                return Ok(op);
            }
            "br" | "cond_br" | "switch_br" if self.region_depth > 0 => {
                return self.err(format!("'{name}' may only appear in function-body blocks"), &[]);
            }
            "br" => {
                let (label, args, span) = self.branch_edge(ctx)?;
                op.operands = args;
                op.attrs.insert("dest".into(), AttrIR::Int(BigInt::from(0)));
                self.push_fixup(ctx, LabelSlot::Attr("dest"), label, span);
                ctx.span_order.push(op_span);
                return Ok(op);
            }
            "cond_br" => {
                let cond = self.operand(ctx)?;
                self.expect(Tok::Comma, "','")?;
                let (l1, a1, s1) = self.branch_edge(ctx)?;
                self.expect(Tok::Comma, "','")?;
                let (l2, a2, s2) = self.branch_edge(ctx)?;
                op.attrs.insert("then_argc".into(), AttrIR::Int(BigInt::from(a1.len())));
                op.attrs.insert("then_dest".into(), AttrIR::Int(BigInt::from(0)));
                op.attrs.insert("else_dest".into(), AttrIR::Int(BigInt::from(0)));
                let mut operands = vec![cond];
                operands.extend(a1);
                operands.extend(a2);
                op.operands = operands;
                self.push_fixup(ctx, LabelSlot::Attr("then_dest"), l1, s1);
                self.push_fixup(ctx, LabelSlot::Attr("else_dest"), l2, s2);
                ctx.span_order.push(op_span);
                return Ok(op);
            }
            "switch_br" => {
                let scrut = self.operand(ctx)?;
                self.expect(Tok::LBracket, "'['")?;
                let mut cases = Vec::new();
                let mut argcs = Vec::new();
                let mut operands = vec![scrut];
                let mut fixups = Vec::new();
                loop {
                    if matches!(self.peek(), Tok::Ident(k) if k == "default") {
                        self.bump();
                        self.expect(Tok::Arrow, "'->'")?;
                        let (l, args, s) = self.branch_edge(ctx)?;
                        operands.extend(args);
                        fixups.push((LabelSlot::Attr("default_dest"), l, s));
                        self.expect(Tok::RBracket, "']'")?;
                        break;
                    }
                    if *self.peek() == Tok::RBracket {
                        return self.err("switch_br requires a final default edge", &["default"]);
                    }
                    let v = self.int_literal()?;
                    let v = v.to_i64().ok_or_else(|| ParseError {
                        message: "case value does not fit in 64 bits".into(),
                        span: self.prev_span(),
                        expected: vec![],
                    })?;
                    self.expect(Tok::Arrow, "'->'")?;
                    let (l, args, s) = self.branch_edge(ctx)?;
                    argcs.push(args.len() as i64);
                    operands.extend(args);
                    fixups.push((LabelSlot::CaseDest(cases.len()), l, s));
                    cases.push(v);
                    self.expect(Tok::Comma, "','")?;
                }
                op.attrs.insert("cases".into(), AttrIR::IntList(cases.clone()));
                op.attrs.insert("case_dests".into(), AttrIR::IntList(vec![0; cases.len()]));
                op.attrs.insert("case_argcs".into(), AttrIR::IntList(argcs));
                op.attrs.insert("default_dest".into(), AttrIR::Int(BigInt::from(0)));
                op.operands = operands;
                for (slot, l, s) in fixups {
                    self.push_fixup(ctx, slot, l, s);
                }
                ctx.span_order.push(op_span);
                return Ok(op);
            }
            _ => {
                op.operands = self.operand_list(ctx)?;
            }
        }

        if self.at_attr_dict() {
            let parsed = self.attr_dict()?;
            for (k, v) in parsed {
                op.attrs.insert(k, v);
            }
        }
        while *self.peek() == Tok::LBrace {
            let r = self.region(ctx)?;
            op.regions.push(r);
        }

        let sig = crate::ops::lookup(&name);
        let wants_result = sig.map(|s| s.num_results > 0).unwrap_or(result_name.is_some());
        if name == "rgn.val" {
            // result type inferred from region parameters
            let params: Vec<TypeIR> = op
                .regions
                .first()
                .map(|r| r.entry().params.iter().map(|p| ctx.func.value_type(*p).clone()).collect())
                .unwrap_or_default();
            let Some(rname) = result_name else {
                return self.err("'rgn.val' requires a result", &["%name ="]);
            };
            let id = self.define(ctx, &rname, TypeIR::RgnVal(params))?;
            op.results = vec![id];
        } else if wants_result {
            let Some(rname) = result_name else {
                return self.err(format!("'{name}' produces a result; expected '%name ='"), &[]);
            };
            self.expect(Tok::Colon, "':'")?;
            let ty = self.type_ir()?;
            let id = self.define(ctx, &rname, ty)?;
            op.results = vec![id];
        } else if let Some(rname) = result_name {
            return self.err(format!("'{name}' produces no result, but %{rname} is bound"), &[]);
        }

        ctx.span_order.push(op_span);
        Ok(op)
    }

    fn push_fixup(&mut self, ctx: &mut FuncCtx, slot: LabelSlot, label: String, span: SourceSpan) {
        // fixups are applied to the op once it is appended to its block; the
        // op being parsed will land at the current end of the current block
        let block = ctx.func.body.blocks.len() - 1;
        let opidx = ctx.func.body.blocks[block].ops.len();
        ctx.label_fixups.push((block, opidx, slot, label, span));
    }
}
