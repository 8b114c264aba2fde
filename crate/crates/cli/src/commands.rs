use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use gradedmt::algebra::{all_mtl_chains, FiniteChain};
use gradedmt::corpus;
use gradedmt::diagrams::{build_diagram, diagram_embedding_equivalence, DiagramBounds, DiagramKind};
use gradedmt::generate::Bounds;
use gradedmt::io::{load_algebra, load_chain, load_structure, load_theory, save_structure, structure_to_value};
use gradedmt::morphisms::{enumerate_substructures, is_substructure, search_strong_embedding, search_strong_homomorphism, StructureMap};
use gradedmt::parser::{parse_formula, parse_formula_untyped};
use gradedmt::preservation::{
    counterexample_report, diagram_sweep, implies_exists_n, reproduce_counterexample, search_amalgam,
    substructure_suite, union_suite, universal_consequences_bounded, verify_amalgam, AmalgamInstance,
    CounterexampleReport, PreservationReport, SuiteConfig,
};
use gradedmt::semantics::{bounded_consequence, equiv_up_to_depth, eval_formula, Assignment, Comparison, Consequence, Structure};
use gradedmt::syntax::{classify_prenex, PrenexClass, Signature};
use gradedmt::unions::{check_tarski_vaught, union_of_chain};
use gradedmt::Error;

use crate::args::{BoundArgs, BundledInstance, Command, Compare, Kind, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = Result<T, CliError>;

/// A command outcome: the JSON result and its text rendering.
pub struct Report {
    pub ok: bool,
    pub result: Value,
    pub text: String,
}

impl Report {
    fn new(ok: bool, result: Value, text: impl Into<String>) -> Self {
        Report {
            ok,
            result,
            text: text.into(),
        }
    }
}

pub struct Context {
    pub seed: u64,
    pub budget: u64,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn structure_json(s: &Structure) -> Value {
    structure_to_value(s, None)
}

fn map_json(m: &StructureMap, s: &Structure, t: &Structure) -> Value {
    let algebra: Vec<Value> = (0..s.chain().len())
        .map(|x| json!([s.chain().label(x), t.chain().label(m.f.apply(x))]))
        .collect();
    let domain: serde_json::Map<String, Value> = m
        .g
        .iter()
        .enumerate()
        .map(|(i, &d)| (s.label(i).to_string(), Value::String(t.label(d).to_string())))
        .collect();
    json!({"algebra": algebra, "domain": domain})
}

fn map_text(m: &StructureMap, s: &Structure, t: &Structure) -> String {
    let pairs: Vec<String> = m
        .g
        .iter()
        .enumerate()
        .map(|(i, &d)| format!("{}->{}", s.label(i), t.label(d)))
        .collect();
    let mut out = format!("domain: {}", pairs.join(" "));
    if !m.f.is_identity() {
        let f: Vec<String> = (0..s.chain().len())
            .map(|x| format!("{}->{}", s.chain().label(x), t.chain().label(m.f.apply(x))))
            .collect();
        write!(out, "\nalgebra: {}", f.join(" ")).unwrap();
    }
    out
}

fn diagram_bounds(b: &BoundArgs, term_depth: Option<usize>, budget: u64) -> DiagramBounds {
    let mut d = DiagramBounds::from(b.bounds_or(0, budget));
    d.term_depth = term_depth;
    d
}

fn kind(k: Kind) -> DiagramKind {
    match k {
        Kind::Diag => DiagramKind::Diag,
        Kind::Eldiag => DiagramKind::ElDiag,
    }
}

fn truth_signature(s: &Structure) -> CliResult<Signature> {
    Ok(s.signature().expand_with_truth_constants(s.chain_arc().clone())?)
}

pub fn run(cmd: &Command, ctx: &Context) -> CliResult<Report> {
    let budget = ctx.budget;
    match cmd {
        Command::Eval {
            structure,
            formula,
            assign,
        } => {
            let s = load_structure(structure)?;
            let sharp = s.expansion_sharp()?;
            let sig = truth_signature(&sharp)?;
            let phi = parse_formula(formula, &sig).map_err(Error::from)?;
            let mut v = Assignment::new();
            for a in assign {
                let (var, label) = a
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("`{a}`: expected VAR=LABEL")))?;
                let d = s
                    .index_of(label.trim())
                    .ok_or_else(|| CliError::Usage(format!("`{label}` is not a domain element")))?;
                v = v.set(var.trim(), d);
            }
            let missing: Vec<String> = phi.free_variables().into_iter().filter(|x| v.get(x).is_none()).collect();
            if !missing.is_empty() {
                return Err(Error::OpenFormula(missing).into());
            }
            let value = s.chain().label(eval_formula(&phi, &sharp, &v)?).to_string();
            Ok(Report::new(
                true,
                json!({"formula": phi.to_string(), "value": value}),
                value,
            ))
        }
        Command::Classify { formula } => {
            let phi = parse_formula_untyped(formula).map_err(Error::from)?;
            let class = classify_prenex(&phi).to_string();
            Ok(Report::new(
                true,
                json!({"formula": phi.to_string(), "class": class}),
                class,
            ))
        }
        Command::CheckSub { sub, sup } => {
            let (s, t) = (load_structure(sub)?, load_structure(sup)?);
            let v = is_substructure(&s, &t)?;
            let text = match &v {
                None => "substructure".to_string(),
                Some(v) => format!("not a substructure: {}", serde_json::to_string(v).unwrap()),
            };
            Ok(Report::new(
                v.is_none(),
                json!({"substructure": v.is_none(), "violation": v}),
                text,
            ))
        }
        Command::EnumSubs { structure, subalgebras } => {
            let t = load_structure(structure)?;
            let subs = enumerate_substructures(&t, *subalgebras)?;
            let list: Vec<Value> = subs
                .iter()
                .map(|s| json!({"domain": s.domain(), "algebra": s.chain().labels()}))
                .collect();
            let mut text = format!("{} substructures\n", subs.len());
            for s in &subs {
                writeln!(text, "{{{}}} over {{{}}}", s.domain().join(", "), s.chain().labels().join(", ")).unwrap();
            }
            Ok(Report::new(
                true,
                json!({"count": subs.len(), "substructures": list}),
                text.trim_end(),
            ))
        }
        Command::FindHom {
            source,
            target,
            free_algebra,
        }
        | Command::FindEmbed {
            source,
            target,
            free_algebra,
        } => {
            let (s, t) = (load_structure(source)?, load_structure(target)?);
            let embed = matches!(cmd, Command::FindEmbed { .. });
            let found = if embed {
                search_strong_embedding(&s, &t, !free_algebra, budget)?
            } else {
                search_strong_homomorphism(&s, &t, !free_algebra, budget)?
            };
            let what = if embed { "strong embedding" } else { "strong homomorphism" };
            Ok(match found {
                Some(m) => Report::new(
                    true,
                    json!({"found": true, "map": map_json(&m, &s, &t)}),
                    map_text(&m, &s, &t),
                ),
                None => Report::new(false, json!({"found": false, "map": null}), format!("no {what}")),
            })
        }
        Command::Diagram {
            structure,
            kind: k,
            bounds,
            term_depth,
        } => {
            let s = load_structure(structure)?;
            let d = build_diagram(&s, kind(*k), &diagram_bounds(bounds, *term_depth, budget))?;
            let entries: Vec<Value> = d
                .entries
                .iter()
                .map(|e| json!({"sentence": e.sentence.to_string(), "value": s.chain().label(e.value)}))
                .collect();
            Ok(Report::new(
                true,
                json!({
                    "kind": d.kind,
                    "bounds": d.bounds,
                    "constants": d.constants,
                    "entries": entries,
                }),
                d.to_theory_text().trim_end(),
            ))
        }
        Command::CheckDiagram {
            source,
            target,
            kind: k,
            bounds,
            term_depth,
        } => {
            let (s, t) = (load_structure(source)?, load_structure(target)?);
            let r = diagram_embedding_equivalence(&s, &t, kind(*k), &diagram_bounds(bounds, *term_depth, budget))?;
            let text = format!(
                "diagram side: {}\nembedding side: {}\n{}",
                r.diagram_side,
                r.embedding_side,
                if r.agree { "agree" } else { "DISAGREE" }
            );
            Ok(Report::new(r.agree, to_value(&r), text))
        }
        Command::Equiv {
            left,
            right,
            bounds,
            compare,
        } => {
            let (l, r) = (load_structure(left)?, load_structure(right)?);
            let cmp = match compare {
                Compare::Satisfaction => Comparison::Satisfaction,
                Compare::Values => Comparison::Values,
            };
            let rep = equiv_up_to_depth(&l, &r, &l.signature(), &bounds.bounds(budget), cmp)?;
            let text = match &rep.separator {
                None => format!("equivalent ({} sentence classes)", rep.classes),
                Some(s) => format!("separated by {} (left {}, right {})", s.sentence, s.left, s.right),
            };
            Ok(Report::new(rep.equivalent, to_value(&rep), text))
        }
        Command::Union { chain, write } => {
            let c = load_chain(chain)?;
            let u = union_of_chain(&c)?;
            if let Some(p) = write {
                save_structure(&u, None, p)?;
            }
            Ok(Report::new(
                true,
                json!({"members": c.len(), "union": structure_json(&u)}),
                u.to_string().trim_end(),
            ))
        }
        Command::CheckChain { chain, bounds } => {
            let c = load_chain(chain)?;
            let r = check_tarski_vaught(&c, &bounds.bounds(budget))?;
            let mut text = format!(
                "members: {}, union size: {}\nmembers are substructures of the union: {}\nquantifier-free values kept: {}\nelementary chain: {}",
                r.members,
                r.union_size,
                r.members_are_substructures,
                r.quantifier_free.is_none(),
                r.elementary_chain
            );
            if let Some(u) = &r.elementary_union {
                write!(text, "\nelementary union: {}", u.is_none()).unwrap();
            }
            Ok(Report::new(r.holds(), to_value(&r), text))
        }
        Command::ImpliesExists {
            left,
            right,
            params,
            n,
            bounds,
        } => {
            let (l, r) = (load_structure(left)?, load_structure(right)?);
            let rep = implies_exists_n(&l, &r, params, *n, &bounds.bounds(budget))?;
            let text = match &rep.separator {
                None => format!("holds ({} sentences)", rep.sentences),
                Some(s) => format!("fails: {} is {} on the left and {} on the right", s.sentence, s.left, s.right),
            };
            Ok(Report::new(rep.holds, to_value(&rep), text))
        }
        Command::Amalgamate {
            left,
            right,
            common,
            generators,
            bundled,
            n,
            max_size,
            bounds,
        } => {
            let inst = match bundled {
                Some(b) => bundled_instance(*b)?,
                None => AmalgamInstance {
                    common: common.as_deref().map(load_structure).transpose()?,
                    left: load_structure(left.as_deref().expect("required by clap"))?,
                    right: load_structure(right.as_deref().expect("required by clap"))?,
                    generators: generators.clone(),
                },
            };
            amalgamate(&inst, *n, *max_size, &bounds.bounds(budget))
        }
        Command::Consequence {
            theory,
            formula,
            algebra,
            max_domain,
        } => {
            let chain = Arc::new(load_algebra(algebra)?);
            let t = load_theory(theory, None, Some(chain.clone()))?;
            let sig = t.signature.expand_with_truth_constants(chain.clone())?;
            let phi = parse_formula(formula, &sig).map_err(Error::from)?;
            Ok(
                match bounded_consequence(&t.formulas, &phi, &chain, &t.signature, *max_domain, budget)? {
                    Consequence::Holds { checked } => Report::new(
                        true,
                        json!({"holds": true, "checked": checked, "max_domain": max_domain, "countermodel": null}),
                        format!("holds on all structures up to size {max_domain} ({checked} checked)"),
                    ),
                    Consequence::Countermodel(s) => Report::new(
                        false,
                        json!({"holds": false, "max_domain": max_domain, "countermodel": structure_json(&s)}),
                        format!("countermodel:\n{}", s.to_string().trim_end()),
                    ),
                },
            )
        }
        Command::UniversalConsequences {
            theory,
            algebra,
            max_domain,
            bounds,
        } => {
            let chain = Arc::new(load_algebra(algebra)?);
            let t = load_theory(theory, None, Some(chain.clone()))?;
            let b = bounds.bounds(budget);
            let r = universal_consequences_bounded(&t.formulas, &t.signature, &chain, &b, *max_domain)?;
            let mut text = format!(
                "{} of {} candidates hold in all {} models up to size {}\n",
                r.sentences.len(),
                r.candidates,
                r.models,
                r.max_domain
            );
            for s in &r.sentences {
                writeln!(text, "{s}").unwrap();
            }
            Ok(Report::new(true, to_value(&r), text.trim_end()))
        }
        Command::Counterexample { left, right } => {
            let r = match (left, right) {
                (Some(l), Some(r)) => counterexample_report(&load_structure(l)?, &load_structure(r)?)?,
                _ => reproduce_counterexample()?,
            };
            Ok(Report::new(r.passes(), to_value(&r), counterexample_text(&r)))
        }
        Command::Verify {
            suite,
            instances,
            chain_size,
            max_domain,
            max_source,
            depth,
            vars,
        } => {
            let mut cfg = SuiteConfig::new(ctx.seed, *instances);
            if let Some(k) = chain_size {
                cfg.max_chain = *k;
            }
            if let Some(m) = max_domain {
                cfg.max_domain = *m;
            }
            if let Some(d) = depth {
                cfg.bounds = Bounds::depth(*d).with_vars(cfg.bounds.vars);
            }
            if let Some(v) = vars {
                cfg.bounds = cfg.bounds.with_vars(*v);
            }
            cfg.bounds = cfg.bounds.with_budget(budget);
            verify(*suite, &cfg, chain_size.unwrap_or(3), *max_source, max_domain.unwrap_or(3))
        }
    }
}

fn bundled_instance(b: BundledInstance) -> CliResult<AmalgamInstance> {
    Ok(match b {
        BundledInstance::Identity => corpus::amalgam_identity()?,
        BundledInstance::Existential => corpus::amalgam_existential()?,
        BundledInstance::UniversalExistential => corpus::amalgam_universal_existential()?,
        BundledInstance::Counterexample => {
            let (m, n) = corpus::counterexample_pair()?;
            AmalgamInstance {
                common: None,
                left: m,
                right: n,
                generators: Vec::new(),
            }
        }
    })
}

fn amalgamate(inst: &AmalgamInstance, n: usize, max_size: usize, bounds: &Bounds) -> CliResult<Report> {
    let r = match search_amalgam(inst, n, max_size, bounds) {
        Err(Error::Precondition(msg)) => {
            return Ok(Report::new(
                false,
                json!({"n": n, "bounds": bounds, "status": "precondition_failed", "message": msg}),
                msg,
            ))
        }
        other => other?,
    };
    let base = json!({
        "n": n,
        "max_size": max_size,
        "bounds": bounds,
        "candidates": r.candidates,
        "precondition": r.precondition,
    });
    let Some(a) = r.amalgam else {
        let mut v = base;
        v["status"] = json!("none_within_bounds");
        return Ok(Report::new(
            false,
            v,
            format!("no amalgam up to size {max_size} ({} candidates); this is inconclusive", r.candidates),
        ));
    };
    let failures = verify_amalgam(inst, &a, n, bounds)?;
    let mut v = base;
    v["status"] = json!("found");
    v["amalgam"] = structure_json(&a.structure);
    v["left_map"] = map_json(&a.left_map, &inst.left, &a.structure);
    v["right_map"] = map_json(&a.right_map, &inst.right, &a.structure);
    v["verification_failures"] = json!(failures);
    let text = format!(
        "amalgam after {} candidates:\n{}\nleft map: {}\nre-verification: {}",
        r.candidates,
        a.structure.to_string().trim_end(),
        map_text(&a.left_map, &inst.left, &a.structure).replace('\n', "; "),
        if failures.is_empty() { "ok".to_string() } else { failures.join("; ") }
    );
    Ok(Report::new(failures.is_empty(), v, text))
}

fn counterexample_text(r: &CounterexampleReport) -> String {
    format!(
        "forall x. P(x): M = {}, N = {}\nequivalent at depth 2: {}\n{}: M = {}, N = {}\nsubstructures of M satisfying it: {} of {}\n{}",
        r.forall_m,
        r.forall_n,
        r.equivalent_at_depth_2,
        r.sentence,
        r.sentence_m,
        r.sentence_n,
        if r.substructures_satisfy { "all" } else { "not all" },
        r.substructures_of_m,
        if r.passes() { "reproduced" } else { "NOT reproduced" }
    )
}

fn preservation_text(r: &PreservationReport) -> String {
    let mut text = format!(
        "{}: {} instances, {} checks, {} violations",
        r.claim,
        r.instances,
        r.checks,
        r.violations.len()
    );
    if let Some(v) = r.violations.first() {
        write!(text, "\nfirst: instance {}: {} has value {}", v.instance, v.formula, v.value).unwrap();
    }
    text
}

fn verify(suite: Suite, cfg: &SuiteConfig, sweep_chain: usize, max_source: usize, max_target: usize) -> CliResult<Report> {
    Ok(match suite {
        Suite::LosTarskiLemma => {
            let r = substructure_suite(cfg, PrenexClass::Forall(1))?;
            Report::new(r.ok(), to_value(&r), preservation_text(&r))
        }
        Suite::ExistsControl => {
            let r = substructure_suite(cfg, PrenexClass::Exists(1))?;
            Report::new(!r.ok(), to_value(&r), preservation_text(&r))
        }
        Suite::UnionLemma => {
            let r = union_suite(cfg)?;
            Report::new(r.ok(), to_value(&r), preservation_text(&r))
        }
        Suite::DiagramSweep => {
            let chains: Vec<Arc<FiniteChain>> = all_mtl_chains(sweep_chain).into_iter().map(Arc::new).collect();
            let r = diagram_sweep(&chains, max_source, max_target)?;
            let text = format!(
                "{} pairs over {} chains, {} with embeddings, {} disagreements",
                r.instances,
                r.chains.len(),
                r.embeddings,
                r.disagreements.len()
            );
            Report::new(r.disagreements.is_empty(), to_value(&r), text)
        }
        Suite::Counterexample => {
            let r = reproduce_counterexample()?;
            Report::new(r.passes(), to_value(&r), counterexample_text(&r))
        }
        Suite::Amalgamation => {
            let b = Bounds::depth(2).with_vars(2).with_truth_constants(true).with_budget(cfg.bounds.budget);
            let mut results = Vec::new();
            let mut ok = true;
            let mut text = String::new();
            for (name, inst, n) in [
                ("identity", corpus::amalgam_identity()?, 1),
                ("identity", corpus::amalgam_identity()?, 2),
                ("existential", corpus::amalgam_existential()?, 1),
                ("universal-existential", corpus::amalgam_universal_existential()?, 2),
            ] {
                let rep = amalgamate(&inst, n, 4, &b)?;
                ok &= rep.ok;
                writeln!(text, "{name} n={n}: {}", if rep.ok { "certified" } else { "FAILED" }).unwrap();
                results.push(json!({"instance": name, "n": n, "ok": rep.ok, "report": rep.result}));
            }
            Report::new(ok, json!({"instances": results}), text.trim_end())
        }
    })
}

pub fn ensure_exists(p: &Path) -> CliResult<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file", p.display())))
    }
}
