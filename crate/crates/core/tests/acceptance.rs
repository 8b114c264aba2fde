//! Acceptance criteria, one PASS/FAIL line each, with wall-clock limits.
//!
//! Runs as its own binary: `cargo test -p gradedmt --test acceptance`.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gradedmt::algebra::{all_mtl_chains, derive_residuum, validate_chain, FiniteChain};
use gradedmt::corpus;
use gradedmt::generate::{random_formula, Bounds};
use gradedmt::io::{bundled_algebra, parse_algebra};
use gradedmt::parser::{parse_formula, render_formula};
use gradedmt::preservation::{
    diagram_sweep, implies_exists_n, instance_rng, reproduce_counterexample, search_amalgam, substructure_suite,
    union_suite, verify_amalgam, AmalgamInstance, SuiteConfig,
};
use gradedmt::semantics::{bounded_consequence, equiv_up_to_depth, Comparison, Consequence};
use gradedmt::syntax::{PrenexClass, Signature};
use gradedmt::Error;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn counterexample() -> Outcome {
    let r = reproduce_counterexample().map_err(fail)?;
    if r.forall_m != "3/4" || r.forall_n != "1/2" {
        return Err(format!("forall x. P(x): M={} N={}", r.forall_m, r.forall_n));
    }
    if r.sentence_m != "1" || r.sentence_n != "1/2" {
        return Err(format!("{}: M={} N={}", r.sentence, r.sentence_m, r.sentence_n));
    }
    let (m, n) = corpus::counterexample_pair().map_err(fail)?;
    let eq = equiv_up_to_depth(&m, &n, &m.signature(), &Bounds::depth(2), Comparison::Satisfaction).map_err(fail)?;
    if !eq.equivalent {
        return Err(format!("separated at depth 2 by {:?}", eq.separator));
    }
    if !r.passes() {
        return Err(format!("{r:?}"));
    }
    Ok(format!("M: 3/4, N: 1/2; `{}` is 1 in M and 1/2 in N", r.sentence))
}

fn algebra_soundness() -> Outcome {
    let files = [
        ("godel4", include_str!("../corpus/algebras/godel4.json")),
        ("luk3", include_str!("../corpus/algebras/luk3.json")),
        ("bool2", include_str!("../corpus/algebras/bool2.json")),
    ];
    let mut triples = 0;
    for (name, text) in files {
        let stored: serde_json::Value = serde_json::from_str(text).map_err(fail)?;
        let c = parse_algebra(text).map_err(fail)?;
        let report = validate_chain(&c.to_data()).map_err(fail)?;
        if !report.is_ok() {
            return Err(format!("{name}: {report}"));
        }
        let k = c.len();
        for x in 0..k {
            for y in 0..k {
                for z in 0..k {
                    triples += 1;
                    if (c.star(x, y) <= z) != (x <= c.implies(y, z)) {
                        return Err(format!("{name}: residuation fails at ({x},{y},{z})"));
                    }
                }
            }
        }
        let derived = derive_residuum(&c.star_table()).map_err(fail)?;
        let stored_implies: Vec<Vec<usize>> = stored["implies"]
            .as_array()
            .ok_or("no stored implies table")?
            .iter()
            .map(|row| {
                row.as_array()
                    .unwrap()
                    .iter()
                    .map(|v| v.as_u64().unwrap() as usize)
                    .collect()
            })
            .collect();
        if derived != stored_implies {
            return Err(format!("{name}: derived residuum differs from the stored table"));
        }
        if c != bundled_algebra(name).map_err(fail)? {
            return Err(format!("{name}: differs from the bundled copy"));
        }
    }
    Ok(format!("3 chains valid, {triples} residuation triples"))
}

fn universal_lemma() -> Outcome {
    let cfg = SuiteConfig::new(7, 200);
    let pos = substructure_suite(&cfg, PrenexClass::Forall(1)).map_err(fail)?;
    if !pos.ok() {
        return Err(format!("{} violations, first {:?}", pos.violations.len(), pos.violations[0]));
    }
    let neg = substructure_suite(&cfg, PrenexClass::Exists(1)).map_err(fail)?;
    if neg.ok() {
        return Err("negative control found no Exists(1) violation".into());
    }
    Ok(format!(
        "{} instances, {} checks, 0 violations; control: {} violating instances",
        pos.instances,
        pos.checks,
        neg.violations.len()
    ))
}

fn union_lemma() -> Outcome {
    let r = union_suite(&SuiteConfig::new(7, 100)).map_err(fail)?;
    if !r.ok() {
        return Err(format!("{} violations, first {:?}", r.violations.len(), r.violations[0]));
    }
    Ok(format!("{} chains, {} checks, 0 violations", r.instances, r.checks))
}

fn diagram_oracle() -> Outcome {
    let chains: Vec<Arc<FiniteChain>> = all_mtl_chains(3).into_iter().map(Arc::new).collect();
    let r = diagram_sweep(&chains, 2, 3).map_err(fail)?;
    if let Some(d) = r.disagreements.first() {
        return Err(format!("{} disagreements, first {d:?}", r.disagreements.len()));
    }
    Ok(format!(
        "{} chains, {} pairs, {} with embeddings, all agree",
        r.chains.len(),
        r.instances,
        r.embeddings
    ))
}

fn amalgamation() -> Outcome {
    let b = Bounds::depth(2).with_vars(2).with_truth_constants(true);
    let cases = [
        ("identity", corpus::amalgam_identity().map_err(fail)?, 1),
        ("identity", corpus::amalgam_identity().map_err(fail)?, 2),
        ("existential", corpus::amalgam_existential().map_err(fail)?, 1),
        ("universal-existential", corpus::amalgam_universal_existential().map_err(fail)?, 2),
    ];
    for (name, inst, n) in &cases {
        let r = search_amalgam(inst, *n, 4, &b).map_err(fail)?;
        let a = r.amalgam.ok_or_else(|| format!("{name} n={n}: nothing within size 4"))?;
        let failures = verify_amalgam(inst, &a, *n, &b).map_err(fail)?;
        if !failures.is_empty() {
            return Err(format!("{name} n={n}: {}", failures.join("; ")));
        }
    }
    let (m, n) = corpus::counterexample_pair().map_err(fail)?;
    let sep = implies_exists_n(&m, &n, &[], 1, &Bounds::depth(1).with_vars(1).with_truth_constants(true))
        .map_err(fail)?
        .separator
        .ok_or("M/N: the implication unexpectedly holds")?;
    let expected = "exists x1. P(x1) <-> val(3/4)";
    if sep.sentence.to_string() != expected || sep.left != "1" || sep.right != "1/2" {
        return Err(format!("unexpected separator {sep:?}"));
    }
    let inst = AmalgamInstance {
        common: None,
        left: m,
        right: n,
        generators: Vec::new(),
    };
    match search_amalgam(&inst, 1, 3, &b) {
        Err(Error::Precondition(msg)) if msg.contains(expected) => {}
        other => return Err(format!("M/N search: {other:?}")),
    }
    Ok(format!("{} certificates re-verified; M/N precondition fails on `{expected}`", cases.len()))
}

fn round_trip() -> Outcome {
    let g = Arc::new(FiniteChain::godel(&["0", "1/2", "3/4", "1"]));
    let base = Signature::new()
        .with_predicate("R", 2)
        .and_then(|s| s.with_predicate("P", 1))
        .and_then(|s| s.with_function("f", 1))
        .and_then(|s| s.with_function("g", 2))
        .and_then(|s| s.with_function("c", 0))
        .map_err(fail)?;
    let sig = base.expand_with_truth_constants(g.clone()).map_err(fail)?;
    let mut rng = instance_rng(2024, 0);
    for i in 0..1000 {
        let phi = random_formula(&mut rng, &base, Some(&g), 3, 6);
        let text = render_formula(&phi);
        let back = parse_formula(&text, &sig).map_err(|e| format!("#{i} `{text}`: {e}"))?;
        if back != phi {
            return Err(format!("#{i} `{text}` parsed to a different formula"));
        }
    }
    Ok("1000 formulas".into())
}

fn bounded_consequences() -> Outcome {
    let g = corpus::godel4();
    let t = corpus::theory("weighted_graph", Some(g.clone())).map_err(fail)?;
    let sig = t.signature.expand_with_truth_constants(g.clone()).map_err(fail)?;
    let reversed = parse_formula("forall x y. R(y,x) -> R(x,y)", &sig).map_err(fail)?;
    let checked = match bounded_consequence(&t.formulas, &reversed, &g, &t.signature, 3, 50_000_000).map_err(fail)? {
        Consequence::Holds { checked } => checked,
        Consequence::Countermodel(s) => return Err(format!("countermodel to reversed symmetry:\n{s}")),
    };
    let symmetry = &t.formulas[1..];
    let irreflexive = &t.formulas[0];
    match bounded_consequence(symmetry, irreflexive, &g, &t.signature, 3, 50_000_000).map_err(fail)? {
        Consequence::Countermodel(s) if s.size() == 1 => Ok(format!(
            "reversed symmetry holds on {checked} structures; irreflexivity refuted with R(d0,d0) = {}",
            s.chain().label(s.pred_value("R", &[0, 0]).unwrap_or(0))
        )),
        Consequence::Countermodel(s) => Err(format!("countermodel has size {}", s.size())),
        Consequence::Holds { .. } => Err("symmetry entails irreflexivity".into()),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("counterexample reproduction", 10, counterexample),
        ("algebra soundness", 1, algebra_soundness),
        ("universal preservation lemma suite", 120, universal_lemma),
        ("universal-existential union suite", 120, union_lemma),
        ("diagram oracle equivalence", 300, diagram_oracle),
        ("amalgamation certificates", 60, amalgamation),
        ("parser round-trip", 10, round_trip),
        ("bounded consequence sanity", 30, bounded_consequences),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let over = took > Duration::from_secs(*limit);
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the {limit} s limit; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} [{}] {name} ({:.2} s): {detail}", i + 1, took.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
