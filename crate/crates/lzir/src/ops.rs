//! Registered operation signatures for the three op sets: the functional
//! `lp` ops, the region-value `rgn` ops (plus the dialect-neutral value ops
//! `select`, `switch`, `cmp_eq`), and the flat-CFG terminators.
//!
//! Signatures carry arity, attribute, region-count, and terminator metadata;
//! per-op type rules live in the verifier.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::ir::TypeIR;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrKind {
    Int,
    Symbol,
    IntList,
    Flag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionCount {
    Exact(usize),
    /// One region per entry of the `cases` attribute, plus a final default.
    CasesPlusOne,
}

#[derive(Clone, Debug)]
pub struct OpSignature {
    pub name: &'static str,
    /// Minimum operand count; with `variadic`, any count >= min is legal.
    pub min_operands: usize,
    pub variadic: bool,
    pub num_results: usize,
    pub required_attrs: &'static [(&'static str, AttrKind)],
    pub optional_attrs: &'static [(&'static str, AttrKind)],
    pub regions: RegionCount,
    pub is_terminator: bool,
    /// Pure ops may be removed when unused and merged when identical.
    pub is_pure: bool,
}

const fn sig(name: &'static str) -> OpSignature {
    OpSignature {
        name,
        min_operands: 0,
        variadic: false,
        num_results: 0,
        required_attrs: &[],
        optional_attrs: &[],
        regions: RegionCount::Exact(0),
        is_terminator: false,
        is_pure: true,
    }
}

/// Signatures of the functional op set.
pub fn lp_op_table() -> Vec<OpSignature> {
    vec![
        OpSignature {
            num_results: 1,
            required_attrs: &[("value", AttrKind::Int)],
            ..sig("lp.int")
        },
        OpSignature {
            num_results: 1,
            required_attrs: &[("value", AttrKind::Int)],
            ..sig("lp.bigint")
        },
        OpSignature {
            min_operands: 1,
            required_attrs: &[("cases", AttrKind::IntList)],
            regions: RegionCount::CasesPlusOne,
            is_terminator: true,
            is_pure: false,
            ..sig("lp.switch")
        },
        OpSignature {
            variadic: true,
            num_results: 1,
            required_attrs: &[("tag", AttrKind::Int)],
            ..sig("lp.construct")
        },
        OpSignature { min_operands: 1, num_results: 1, ..sig("lp.getlabel") },
        OpSignature {
            min_operands: 1,
            num_results: 1,
            required_attrs: &[("index", AttrKind::Int)],
            ..sig("lp.project")
        },
        OpSignature {
            variadic: true,
            num_results: 1,
            required_attrs: &[("fn", AttrKind::Symbol)],
            ..sig("lp.pap")
        },
        OpSignature { min_operands: 1, variadic: true, num_results: 1, ..sig("lp.papextend") },
        OpSignature {
            regions: RegionCount::Exact(2),
            is_terminator: true,
            is_pure: false,
            ..sig("lp.joinpoint")
        },
        OpSignature { variadic: true, is_terminator: true, is_pure: false, ..sig("lp.jump") },
        OpSignature { min_operands: 1, is_pure: false, ..sig("lp.inc") },
        OpSignature { min_operands: 1, is_pure: false, ..sig("lp.dec") },
        OpSignature { min_operands: 1, is_terminator: true, is_pure: false, ..sig("lp.return") },
        OpSignature {
            variadic: true,
            num_results: 1,
            required_attrs: &[("fn", AttrKind::Symbol)],
            optional_attrs: &[("musttail", AttrKind::Flag)],
            is_pure: false,
            ..sig("call")
        },
    ]
}

/// Signatures of the region-value op set and the value-selection ops it
/// leans on. `select` and `switch` are dialect-neutral: they pick among
/// values of any single type, including region values.
pub fn rgn_op_table() -> Vec<OpSignature> {
    vec![
        OpSignature { num_results: 1, regions: RegionCount::Exact(1), ..sig("rgn.val") },
        OpSignature { min_operands: 1, variadic: true, is_terminator: true, is_pure: false, ..sig("rgn.run") },
        OpSignature { min_operands: 3, num_results: 1, ..sig("select") },
        OpSignature {
            min_operands: 2,
            variadic: true,
            num_results: 1,
            required_attrs: &[("cases", AttrKind::IntList)],
            ..sig("switch")
        },
    ]
}

/// Integer equality producing an `i1`; emitted when lowering two-armed
/// switches and usable anywhere machine integers are compared.
pub fn core_op_table() -> Vec<OpSignature> {
    vec![OpSignature { min_operands: 2, num_results: 1, ..sig("cmp_eq") }]
}

/// Flat-CFG terminators. Branch targets are encoded in attributes and given
/// dedicated textual forms.
pub fn cfg_op_table() -> Vec<OpSignature> {
    vec![
        OpSignature {
            variadic: true,
            required_attrs: &[("dest", AttrKind::Int)],
            is_terminator: true,
            is_pure: false,
            ..sig("br")
        },
        OpSignature {
            min_operands: 1,
            variadic: true,
            required_attrs: &[
                ("else_dest", AttrKind::Int),
                ("then_argc", AttrKind::Int),
                ("then_dest", AttrKind::Int),
            ],
            is_terminator: true,
            is_pure: false,
            ..sig("cond_br")
        },
        OpSignature {
            min_operands: 1,
            variadic: true,
            required_attrs: &[
                ("case_argcs", AttrKind::IntList),
                ("case_dests", AttrKind::IntList),
                ("cases", AttrKind::IntList),
                ("default_dest", AttrKind::Int),
            ],
            is_terminator: true,
            is_pure: false,
            ..sig("switch_br")
        },
        OpSignature { min_operands: 1, is_terminator: true, is_pure: false, ..sig("ret") },
    ]
}

/// A runtime-provided function callable by symbol. The table is closed:
/// `nat_dec_eq` compares two integers (machine or big) and `nat_add` adds
/// them, mirroring what the runtime supplies for integer pattern matching
/// and test arithmetic.
pub struct RuntimeFn {
    pub name: &'static str,
    pub arity: usize,
    pub param_types: [TypeIR; 2],
    pub result_type: TypeIR,
}

pub fn runtime_fn(name: &str) -> Option<RuntimeFn> {
    match name {
        "nat_dec_eq" => Some(RuntimeFn {
            name: "nat_dec_eq",
            arity: 2,
            param_types: [TypeIR::Obj, TypeIR::Obj],
            result_type: TypeIR::Int(8),
        }),
        "nat_add" => Some(RuntimeFn {
            name: "nat_add",
            arity: 2,
            param_types: [TypeIR::Obj, TypeIR::Obj],
            result_type: TypeIR::Obj,
        }),
        _ => None,
    }
}

fn registry_map() -> &'static HashMap<&'static str, OpSignature> {
    static REGISTRY: OnceLock<HashMap<&'static str, OpSignature>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut m = HashMap::new();
        for table in [lp_op_table(), rgn_op_table(), core_op_table(), cfg_op_table()] {
            for s in table {
                m.insert(s.name, s);
            }
        }
        m
    })
}

pub fn lookup(name: &str) -> Option<&'static OpSignature> {
    registry_map().get(name)
}

pub fn is_terminator(name: &str) -> bool {
    lookup(name).map(|s| s.is_terminator).unwrap_or(false)
}

pub fn is_pure(name: &str) -> bool {
    lookup(name).map(|s| s.is_pure).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construct_is_variadic_with_tag_attr() {
        let s = lookup("lp.construct").unwrap();
        assert!(s.variadic);
        assert_eq!(s.num_results, 1);
        assert_eq!(s.required_attrs, &[("tag", AttrKind::Int)]);
    }

    #[test]
    fn switch_is_terminator_with_case_regions() {
        let s = lookup("lp.switch").unwrap();
        assert!(s.is_terminator);
        assert_eq!(s.regions, RegionCount::CasesPlusOne);
    }

    #[test]
    fn unknown_op_is_absent() {
        assert!(lookup("lp.undefined").is_none());
    }

    #[test]
    fn rgn_run_is_variadic_terminator() {
        let s = lookup("rgn.run").unwrap();
        assert!(s.is_terminator);
        assert!(s.variadic);
    }

    #[test]
    fn lp_table_matches_registered_op_set() {
        let names: Vec<&str> = lp_op_table().iter().map(|s| s.name).collect();
        for expected in [
            "lp.int",
            "lp.bigint",
            "lp.switch",
            "lp.construct",
            "lp.getlabel",
            "lp.project",
            "lp.pap",
            "lp.papextend",
            "lp.joinpoint",
            "lp.jump",
            "lp.inc",
            "lp.dec",
            "lp.return",
            "call",
        ] {
            assert!(names.contains(&expected), "missing {expected}");
        }
        assert_eq!(names.len(), 14);
    }

    #[test]
    fn purity_table() {
        for pure in ["lp.int", "lp.construct", "rgn.val", "select", "cmp_eq"] {
            assert!(is_pure(pure), "{pure} should be pure");
        }
        for impure in ["call", "lp.inc", "lp.dec", "lp.return", "rgn.run", "lp.switch"] {
            assert!(!is_pure(impure), "{impure} should be impure");
        }
    }
}
