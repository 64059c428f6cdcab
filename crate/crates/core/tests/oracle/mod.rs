//! Random tiny contracts and an exhaustive enumeration oracle over
//! entry states and inputs in 0..=7.

#![allow(dead_code)]

use num_bigint::BigInt;
use ppgpt_core::frontend::{load_program, load_specs};
use ppgpt_core::interp::{CState, CVal, Env, Interp, RuleRun, SpecRun};
use ppgpt_core::ir::{Program, Spec};
use ppgpt_core::verifier::{modular_violation, verify_property, Property, Verdict, VerifyOptions};
use ppgpt_core::{render_diagnostics, SourceFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DOMAIN: i64 = 7;
pub const CONTRACTS: u64 = 60;

struct Gen {
    rng: ChaCha8Rng,
    vars: usize,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.rng.gen_range(0..xs.len())]
    }

    fn var(&mut self) -> String {
        format!("s{}", self.rng.gen_range(0..self.vars))
    }

    fn expr(&mut self, leaves: &[String], depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return if self.rng.gen_bool(0.25) || leaves.is_empty() {
                self.rng.gen_range(0..=DOMAIN).to_string()
            } else {
                leaves[self.rng.gen_range(0..leaves.len())].clone()
            };
        }
        let op = self.pick(&["+", "-", "*", "/", "%", "+", "-"]);
        let a = self.expr(leaves, depth - 1);
        let b = self.expr(leaves, depth - 1);
        // Constant folding rejects division by zero and negative literals.
        let constant = |s: &str| !s.contains(|c: char| c.is_ascii_alphabetic());
        let op = if constant(&a) && constant(&b) { "+" } else { op };
        format!("({a} {op} {b})")
    }

    fn cond(&mut self, leaves: &[String], depth: u32) -> String {
        if depth > 0 && self.rng.gen_bool(0.3) {
            let a = self.cond(leaves, depth - 1);
            let b = self.cond(leaves, depth - 1);
            return match self.rng.gen_range(0..3) {
                0 => format!("({a} && {b})"),
                1 => format!("({a} || {b})"),
                _ => format!("!({a})"),
            };
        }
        let op = self.pick(&["<", "<=", ">", ">=", "==", "!="]);
        let a = self.expr(leaves, 1);
        let b = self.expr(leaves, 1);
        format!("{a} {op} {b}")
    }

    fn stmt(&mut self, leaves: &[String], depth: u32, out: &mut String, indent: &str) {
        match self.rng.gen_range(0..10) {
            0..=4 => {
                let v = self.var();
                let e = self.expr(leaves, 2);
                out.push_str(&format!("{indent}{v} = {e};\n"));
            }
            5 | 6 => {
                let c = self.cond(leaves, 1);
                out.push_str(&format!("{indent}require({c});\n"));
            }
            7 | 8 if depth > 0 => {
                let c = self.cond(leaves, 1);
                out.push_str(&format!("{indent}if ({c}) {{\n"));
                let inner = format!("{indent}    ");
                self.stmt(leaves, depth - 1, out, &inner);
                out.push_str(&format!("{indent}}} else {{\n"));
                self.stmt(leaves, depth - 1, out, &inner);
                out.push_str(&format!("{indent}}}\n"));
            }
            _ => {
                let v = self.var();
                let n = self.rng.gen_range(1..=3);
                let bound = if leaves.iter().any(|l| l.starts_with('p')) && self.rng.gen_bool(0.5) {
                    format!("i < {n} && i < p0")
                } else {
                    format!("i < {n}")
                };
                out.push_str(&format!("{indent}for (uint256 i = 0; {bound}; i++) {{\n"));
                out.push_str(&format!("{indent}    {v} = {v} + i;\n{indent}}}\n"));
            }
        }
    }

    /// Returns the contract text and the parameter count of each function.
    fn contract(&mut self) -> (String, Vec<usize>) {
        let nfuncs = self.rng.gen_range(1..=2);
        let mut src = String::from("contract T {\n");
        for i in 0..self.vars {
            src.push_str(&format!("    uint256 s{i};\n"));
        }
        let mut arities = vec![];
        for f in 0..nfuncs {
            let np = self.rng.gen_range(0..=2);
            arities.push(np);
            let params: Vec<String> = (0..np).map(|i| format!("uint256 p{i}")).collect();
            src.push_str(&format!("    function f{f}({}) public {{\n", params.join(", ")));
            let mut leaves: Vec<String> = (0..self.vars).map(|i| format!("s{i}")).collect();
            leaves.extend((0..np).map(|i| format!("p{i}")));
            for _ in 0..self.rng.gen_range(1..=3) {
                self.stmt(&leaves, 1, &mut src, "        ");
            }
            src.push_str("    }\n");
        }
        src.push_str("}\n");
        (src, arities)
    }

    fn function_spec(&mut self, f: usize, np: usize) -> String {
        let mut leaves: Vec<String> = (0..self.vars).map(|i| format!("s{i}")).collect();
        leaves.extend((0..np).map(|i| format!("p{i}")));
        let mut s = format!("function f{f}\n");
        let npre = self.rng.gen_range(0..=2);
        if npre > 0 {
            s.push_str("precondition {\n");
            for _ in 0..npre {
                let c = self.cond(&leaves, 1);
                s.push_str(&format!("    {c};\n"));
            }
            s.push_str("}\n");
        }
        let mut post = leaves.clone();
        post.extend((0..self.vars).map(|i| format!("old(s{i})")));
        s.push_str("postcondition {\n");
        for _ in 0..self.rng.gen_range(1..=2) {
            let c = self.cond(&post, 1);
            s.push_str(&format!("    {c};\n"));
        }
        s.push_str("}\n");
        s
    }

    fn rule(&mut self, arities: &[usize]) -> String {
        let np = self.rng.gen_range(0..=2);
        let params: Vec<String> = (0..np).map(|i| format!("uint256 r{i}")).collect();
        let mut leaves: Vec<String> = (0..np).map(|i| format!("r{i}")).collect();
        let mut s = format!("rule g({}) {{\n", params.join(", "));
        if self.rng.gen_bool(0.5) {
            let mut l = leaves.clone();
            l.extend((0..self.vars).map(|i| format!("s{i}")));
            let c = self.cond(&l, 1);
            s.push_str(&format!("    assume({c});\n"));
        }
        let v = self.var();
        s.push_str(&format!("    uint256 $before = {v};\n"));
        for _ in 0..self.rng.gen_range(1..=2) {
            let f = self.rng.gen_range(0..arities.len());
            let args: Vec<String> = (0..arities[f]).map(|_| self.expr(&leaves, 1)).collect();
            s.push_str(&format!("    f{f}({});\n", args.join(", ")));
        }
        leaves.push("$before".into());
        leaves.extend((0..self.vars).map(|i| format!("s{i}")));
        let c = self.cond(&leaves, 1);
        s.push_str(&format!("    assert({c});\n}}\n"));
        s
    }
}

fn tuples(n: usize) -> impl Iterator<Item = Vec<i64>> {
    let total = (DOMAIN + 1).pow(n as u32);
    (0..total).map(move |mut k| {
        (0..n)
            .map(|_| {
                let d = k % (DOMAIN + 1);
                k /= DOMAIN + 1;
                d
            })
            .collect()
    })
}

fn ints(v: &[i64]) -> Vec<CVal> {
    v.iter().map(|x| CVal::int(*x)).collect()
}

/// Whether some entry state and input violates the property.
pub fn oracle(program: &Program, spec: &Spec) -> bool {
    let nvars = program.state_vars.len();
    let env = Env::new();
    let mut it = Interp::new(program);
    for store in tuples(nvars) {
        let st = CState { store: ints(&store) };
        match spec {
            Spec::Function(s) => {
                let np = program.functions[s.func].params.len();
                for args in tuples(np) {
                    let r = it
                        .check_function(&st, s.func, &s.pre, &s.post, ints(&args), &env)
                        .unwrap();
                    if let SpecRun::Post(v) = r {
                        if v.contains(&false) {
                            return true;
                        }
                    }
                }
            }
            Spec::Rule(r) => {
                assert!(r.implicit.is_empty());
                for args in tuples(r.params.len()) {
                    if let RuleRun::Completed { failed, .. } = it.run_rule(&st, r, ints(&args), &env).unwrap() {
                        if !failed.is_empty() {
                            return true;
                        }
                    }
                }
            }
            Spec::Invariant(_) => unreachable!(),
        }
    }
    false
}

/// Outcome of checking every property of one generated contract.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub checked: usize,
    pub violating: usize,
}

/// Generate contract `seed` with its properties and compare the prover
/// against the oracle on each.
pub fn check_seed(seed: u64) -> Result<Tally, String> {
    let opts = VerifyOptions {
        input_domain: Some((BigInt::from(0), BigInt::from(DOMAIN))),
        ..VerifyOptions::default()
    };
    let mut tally = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = rng.gen_range(1..=3);
    let mut g = Gen { rng, vars };
    let (text, arities) = g.contract();
    let program = load_program(&SourceFile::new("t.msol", text.clone()), None)
        .map_err(|d| format!("seed {seed}\n{text}\n{}", render_diagnostics(&d)))?;
    let mut specs = String::new();
    for (f, &np) in arities.iter().enumerate() {
        specs.push_str(&g.function_spec(f, np));
    }
    specs.push_str(&g.rule(&arities));
    let units = load_specs(&program, &SourceFile::new("t.psl", specs.clone()))
        .map_err(|d| format!("seed {seed}\n{text}\n{specs}\n{}", render_diagnostics(&d)))?;
    let fail = |m: String| Err(format!("seed {seed}: {m}\n{text}\n{specs}"));
    for (_, spec) in &units {
        let property = match spec {
            Spec::Function(s) => Property::of_function_spec(s),
            Spec::Rule(r) => Property::Rule(r),
            Spec::Invariant(_) => unreachable!(),
        };
        let expected = oracle(&program, spec);
        let got = modular_violation(&program, property, &opts);
        if got != Some(expected) {
            return fail(format!("modular {got:?}, oracle {expected}"));
        }
        match verify_property(&program, property, &opts) {
            Verdict::Proven | Verdict::VacuouslyProven if expected => return fail("proven but violable".into()),
            Verdict::Violated(_) if !expected => return fail("violated but safe".into()),
            Verdict::Violated(t) if t.replay(&program, property).is_none() => {
                return fail("trace does not replay".into())
            }
            Verdict::Unknown(r) if !(expected && r == "unconfirmed") => return fail(format!("unknown: {r}")),
            _ => {}
        }
        tally.checked += 1;
        tally.violating += expected as usize;
    }
    Ok(tally)
}
