use super::{solve, unsupported, violation_of, Property, Trace, TraceStep, Verdict, VerifyOptions};
use crate::frontend::span::Span;
use crate::interp::{reference_hash, CState, CVal, Env, HashFn, Interp, RuleRun, SpecRun};
use crate::ir::*;
use crate::solver::{sha3_name, Model};
use crate::symexec::{Agg, Executor, LeafPath, LeafStep, PathOutcome, SymArg, SymState, TxRecord};
use crate::term::{Sort, Term};
use crate::types::{render_scalar, Ty};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use std::cell::RefCell;
use std::rc::Rc;

/// Hash applications seen during replay: hash kind, arguments, value.
type HashTable = Vec<(usize, Vec<BigInt>, BigInt)>;

/// Concrete inputs that reproduce a counterexample.
#[derive(Clone, Debug, Default)]
pub struct ReplayData {
    pub deploy_env: Env,
    pub ctor_args: Vec<CVal>,
    /// Reaching prefix: function, arguments, environment.
    pub txs: Vec<(FuncId, Vec<CVal>, Env)>,
    /// Arguments of the checked function, or rule parameters followed by
    /// the rule's implicit variables.
    pub check_inputs: Vec<CVal>,
    pub check_env: Env,
    /// External call results in consumption order.
    pub ext: Vec<CVal>,
    /// sha3 values used along the trace: arity, arguments, value.
    pub hashes: Vec<(usize, Vec<BigInt>, BigInt)>,
}

pub(crate) struct Replayed {
    pub failing: Span,
    pub deployed: CState,
    pub calls: Vec<(FuncId, Vec<CVal>)>,
}

/// Bound on the length of arrays rebuilt from a model.
const MAX_CONCRETE_LEN: usize = 64;
/// Symbolic states kept per BMC level.
const MAX_FRONTIER: usize = 256;
/// Candidate models tried per level before giving up.
const MAX_ATTEMPTS: usize = 8;

pub(crate) fn replay(program: &Program, property: Property, data: &ReplayData) -> Option<Replayed> {
    let table = data.hashes.clone();
    let hash: HashFn = Box::new(move |k, args: &[BigInt]| {
        table
            .iter()
            .find(|(a, xs, _)| *a == k && xs.as_slice() == args)
            .map(|e| e.2.clone())
            .unwrap_or_else(|| reference_hash(k, args))
    });
    replay_with(program, property, data, hash)
}

fn replay_with(program: &Program, property: Property, data: &ReplayData, hash: HashFn) -> Option<Replayed> {
    let mut it = Interp::new(program)
        .with_hash(hash)
        .with_external_results(data.ext.iter().cloned());
    let deployed = it.deploy(&data.deploy_env, data.ctor_args.clone()).ok()?;
    let mut st = deployed.clone();
    for (f, args, env) in &data.txs {
        st = it.call(&st, *f, args.clone(), env).ok()?.0;
    }
    match property {
        Property::Function { func, pre, post } => {
            match it
                .check_function(&st, func, pre, post, data.check_inputs.clone(), &data.check_env)
                .ok()?
            {
                SpecRun::Post(bs) => {
                    let i = bs.iter().position(|b| !b)?;
                    Some(Replayed {
                        failing: post[i].span,
                        deployed,
                        calls: vec![(func, data.check_inputs.clone())],
                    })
                }
                _ => None,
            }
        }
        Property::Rule(r) => match it.run_rule(&st, r, data.check_inputs.clone(), &data.check_env).ok()? {
            RuleRun::Completed { failed, calls, .. } if !failed.is_empty() => Some(Replayed {
                failing: failed[0],
                deployed,
                calls,
            }),
            _ => None,
        },
    }
}

fn normal_states(outs: Vec<PathOutcome>) -> Vec<SymState> {
    outs.into_iter()
        .filter_map(|o| match o {
            PathOutcome::Normal { state, .. } => Some(state),
            _ => None,
        })
        .collect()
}

/// Drop states whose path condition is unsatisfiable.
fn prune(states: Vec<SymState>, opts: &VerifyOptions) -> Result<Vec<SymState>, String> {
    let mut out = Vec::new();
    for s in states {
        if out.len() >= MAX_FRONTIER {
            break;
        }
        match solve(vec![s.path_cond()], &opts.solver) {
            Ok(None) => {}
            Ok(Some(_)) | Err(_) => out.push(s),
        }
    }
    Ok(out)
}

/// Calls made by the property on a path, given the log it appended.
fn property_calls(log: &[TxRecord]) -> usize {
    log.iter().filter(|r| r.func.is_some()).count()
}

/// Search for a replay-confirmed violation within `depth` transactions.
pub(crate) fn search(
    program: &Program,
    property: Property,
    opts: &VerifyOptions,
    depth: usize,
) -> Result<Option<Trace>, String> {
    let mut ex = Executor::new(program, opts.exec(Some(opts.bmc_max_array_len)));
    let deployed = normal_states(ex.deploy().map_err(unsupported)?);
    let mut frontier = prune(deployed, opts)?;
    for k in 0..=depth {
        let mut cands = Vec::new();
        for s in &frontier {
            let base = s.log.len();
            for st in normal_states(property.run(&mut ex, s.clone()).map_err(unsupported)?) {
                if st.obligations.is_empty() {
                    continue;
                }
                if k + property_calls(&st.log[base..]) <= depth {
                    cands.push(st);
                }
            }
        }
        if let Some(t) = confirm(program, property, opts, cands)? {
            return Ok(Some(t));
        }
        if k == depth {
            break;
        }
        let mut next = Vec::new();
        for s in &frontier {
            for f in program.entry_points() {
                next.extend(normal_states(
                    ex.execute_transaction(s.clone(), f).map_err(unsupported)?,
                ));
            }
        }
        frontier = prune(next, opts)?;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(None)
}

fn confirm(
    program: &Program,
    property: Property,
    opts: &VerifyOptions,
    cands: Vec<SymState>,
) -> Result<Option<Trace>, String> {
    let mut remaining: Vec<(Term, SymState)> = cands.into_iter().map(|s| (violation_of(&s), s)).collect();
    for _ in 0..MAX_ATTEMPTS {
        if remaining.is_empty() {
            return Ok(None);
        }
        let goal = Term::or(remaining.iter().map(|(t, _)| t.clone()));
        let Some(model) = solve(vec![goal], &opts.solver)? else {
            return Ok(None);
        };
        let idx = remaining
            .iter()
            .position(|(t, _)| model.eval_bool(t).unwrap_or(false))
            .unwrap_or(0);
        let (_, st) = remaining.remove(idx);
        if let Some(t) = build_trace(program, property, &st, &model) {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Refute a property by bounded model checking alone.
pub fn bmc_refute(program: &Program, property: Property, depth: usize, opts: &VerifyOptions) -> Verdict {
    match search(program, property, opts, depth) {
        Ok(Some(t)) => Verdict::Violated(Box::new(t)),
        Ok(None) => Verdict::Unknown("no reachable counterexample within depth".into()),
        Err(r) => Verdict::Unknown(r),
    }
}

// ----- concretization -----

fn conc_term(model: &Model, t: &Term) -> CVal {
    match t.sort() {
        Sort::Bool => CVal::Bool(model.eval_bool(t).unwrap_or(false)),
        _ => CVal::Int(model.eval_int(t).unwrap_or_default()),
    }
}

fn nested_select(mut t: Term, idx: &[Term]) -> Term {
    for i in idx {
        t = Term::select(t, i.clone());
    }
    t
}

fn conc_agg(
    program: &Program,
    model: &Model,
    ty: &Ty,
    leaves: &Agg,
    prefix: &mut LeafPath,
    idx: &mut Vec<Term>,
) -> CVal {
    let leaf = |prefix: &LeafPath, idx: &[Term]| leaves.get(prefix).map(|t| nested_select(t.clone(), idx));
    match ty {
        Ty::Array(e) => {
            prefix.push(LeafStep::Len);
            let len = leaf(prefix, idx)
                .and_then(|t| model.eval_int(&t).ok())
                .and_then(|v| v.to_usize())
                .unwrap_or(0)
                .min(MAX_CONCRETE_LEN);
            prefix.pop();
            prefix.push(LeafStep::Elem);
            let mut items = Vec::new();
            for i in 0..len {
                idx.push(Term::int(i));
                items.push(conc_agg(program, model, e, leaves, prefix, idx));
                idx.pop();
            }
            prefix.pop();
            CVal::Arr(items)
        }
        Ty::Struct(s) => {
            let mut fields = Vec::new();
            for (i, (_, fty)) in program.structs[*s].fields.iter().enumerate() {
                prefix.push(LeafStep::Field(i));
                fields.push(conc_agg(program, model, fty, leaves, prefix, idx));
                prefix.pop();
            }
            CVal::Struct(fields)
        }
        Ty::Mapping(..) => CVal::default_of(program, ty),
        _ => match leaf(prefix, idx) {
            Some(t) => conc_term(model, &t),
            None => CVal::default_of(program, ty),
        },
    }
}

fn conc_arg(program: &Program, model: &Model, a: &SymArg) -> CVal {
    match a {
        SymArg::Scalar(t) => conc_term(model, t),
        SymArg::Mem(obj) => conc_agg(program, model, &obj.ty, &obj.leaves, &mut Vec::new(), &mut Vec::new()),
    }
}

fn conc_env(model: &Model, r: &TxRecord) -> Env {
    r.env
        .iter()
        .map(|(k, t)| (*k, model.eval_int(t).unwrap_or_default()))
        .collect()
}

fn render_args(program: &Program, types: &[Ty], args: &[CVal]) -> Vec<String> {
    args.iter().zip(types).map(|(a, t)| a.render(program, t)).collect()
}

fn env_str(env: &Env, v: EnvVar) -> String {
    render_scalar(&v.ty(), &env.get(&v).cloned().unwrap_or_default())
}

fn build_trace(program: &Program, property: Property, st: &SymState, model: &Model) -> Option<Trace> {
    let (deploy, rest) = st.log.split_first()?;
    let mut data = ReplayData {
        deploy_env: conc_env(model, deploy),
        ctor_args: deploy.args.iter().map(|a| conc_arg(program, model, a)).collect(),
        ext: st.ext.iter().map(|t| conc_term(model, t)).collect(),
        ..Default::default()
    };
    let prefix: Vec<&TxRecord> = rest.iter().filter(|r| !r.from_rule).collect();
    let (txs, check) = match property {
        Property::Function { .. } => {
            let (last, init) = prefix.split_last()?;
            (init.to_vec(), *last)
        }
        Property::Rule(_) => (prefix, rest.iter().find(|r| r.from_rule && r.func.is_none())?),
    };
    for r in &txs {
        let args = r.args.iter().map(|a| conc_arg(program, model, a)).collect();
        data.txs.push((r.func?, args, conc_env(model, r)));
    }
    data.check_inputs = check.args.iter().map(|a| conc_arg(program, model, a)).collect();
    data.check_env = conc_env(model, check);

    let table: Rc<RefCell<HashTable>> = Rc::default();
    let recorder = table.clone();
    let model_hash = model.clone();
    let hash: HashFn = Box::new(move |k, args: &[BigInt]| {
        let app = Term::app(&sha3_name(k), args.iter().map(|a| Term::int(a.clone())).collect());
        let v = model_hash.eval_int(&app).unwrap_or_else(|_| reference_hash(k, args));
        recorder.borrow_mut().push((k, args.to_vec(), v.clone()));
        v
    });
    let replayed = replay_with(program, property, &data, hash)?;
    let mut hashes = table.borrow().clone();
    hashes.dedup();
    data.hashes = hashes;

    let ctor = program
        .constructors()
        .find(|f| !program.functions[*f].params.is_empty());
    let ctor_types = ctor.map(|f| program.functions[f].param_types()).unwrap_or_default();
    let initial_state = program
        .state_vars
        .iter()
        .zip(&replayed.deployed.store)
        .filter(|(v, _)| !v.constant)
        .map(|(v, x)| (v.name.clone(), x.render(program, &v.ty)))
        .collect();
    let mut steps: Vec<TraceStep> = data
        .txs
        .iter()
        .map(|(f, args, env)| {
            let func = &program.functions[*f];
            TraceStep {
                function: func.name.clone(),
                args: render_args(program, &func.param_types(), args),
                sender: env_str(env, EnvVar::Sender),
                value: env_str(env, EnvVar::Value),
                in_property: false,
            }
        })
        .collect();
    for (f, args) in &replayed.calls {
        let func = &program.functions[*f];
        steps.push(TraceStep {
            function: func.name.clone(),
            args: render_args(program, &func.param_types(), args),
            sender: env_str(&data.check_env, EnvVar::Sender),
            value: env_str(&data.check_env, EnvVar::Value),
            in_property: true,
        });
    }
    let property_inputs = match property {
        Property::Function { func, .. } => {
            let f = &program.functions[func];
            f.params
                .iter()
                .zip(&data.check_inputs)
                .map(|(p, v)| (f.locals[*p].name.clone(), v.render(program, &f.locals[*p].ty)))
                .collect()
        }
        Property::Rule(r) => r
            .params
            .iter()
            .chain(r.implicit.iter().map(|(l, _)| l))
            .zip(&data.check_inputs)
            .map(|(l, v)| (r.locals[*l].name.clone(), v.render(program, &r.locals[*l].ty)))
            .collect(),
    };
    Some(Trace {
        deployer: env_str(&data.deploy_env, EnvVar::Sender),
        constructor_args: render_args(program, &ctor_types, &data.ctor_args),
        initial_state,
        steps,
        property_inputs,
        failing_span: replayed.failing,
        replay: data,
    })
}
