use std::sync::Arc;

use proptest::prelude::*;

use gradedmt::algebra::{all_mtl_chains, derive_residuum, validate_chain, FiniteChain};
use gradedmt::generate::{prenex_formulas, random_formula, Bounds};
use gradedmt::morphisms::{enumerate_substructures, is_substructure};
use gradedmt::parser::{parse_formula, render_formula};
use gradedmt::preservation::{implies_exists_n, instance_rng, random_structure, suite_signature};
use gradedmt::semantics::{eval_formula, eval_sentence, Assignment, Expanded, Structure};
use gradedmt::syntax::{domain_constant_name, PrenexClass, Signature};

fn chain_pool() -> Vec<Arc<FiniteChain>> {
    (2..=4).flat_map(all_mtl_chains).map(Arc::new).collect()
}

fn mixed_signature() -> Signature {
    Signature::new()
        .with_predicate("R", 2)
        .and_then(|s| s.with_predicate("P", 1))
        .and_then(|s| s.with_function("f", 1))
        .and_then(|s| s.with_function("c", 0))
        .unwrap()
}

#[test]
fn small_chains_are_mtl_chains() {
    for c in chain_pool() {
        let report = validate_chain(&c.to_data()).unwrap();
        assert!(report.is_ok(), "{c}: {report}");
        assert_eq!(derive_residuum(&c.star_table()).unwrap(), c.implies_table());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rendered_formulas_parse_back(seed in any::<u64>()) {
        let g = Arc::new(FiniteChain::godel(&["0", "1/2", "3/4", "1"]));
        let sig = mixed_signature().expand_with_truth_constants(g.clone()).unwrap();
        let mut rng = instance_rng(seed, 0);
        for _ in 0..8 {
            let phi = random_formula(&mut rng, &mixed_signature(), Some(&g), 3, 5);
            let text = render_formula(&phi);
            prop_assert_eq!(parse_formula(&text, &sig).unwrap(), phi, "{}", text);
        }
    }

    #[test]
    fn values_are_invariant_under_renaming(seed in any::<u64>()) {
        let pool = chain_pool();
        let mut rng = instance_rng(seed, 1);
        let chain = &pool[(seed % pool.len() as u64) as usize];
        let n = 1 + (seed % 3) as usize;
        let s = random_structure(&mut rng, chain, &suite_signature(), n).unwrap();
        // reverse the domain order, keeping labels with their elements
        let rev: Vec<usize> = (0..n).rev().collect();
        let t = s.restrict(&rev).unwrap();
        let renamed = Structure::new(chain.clone(), t.domain().iter().map(|l| format!("e_{l}")).collect()).unwrap();
        let mut renamed = renamed;
        for (name, table) in t.predicates() {
            renamed.set_predicate(name, table.clone()).unwrap();
        }
        for _ in 0..6 {
            let phi = random_formula(&mut rng, &suite_signature(), None, 2, 4);
            let closed = phi.free_variables().into_iter().fold(phi, |acc, v| gradedmt::syntax::Formula::forall(&v, acc));
            prop_assert_eq!(eval_sentence(&closed, &s).unwrap(), eval_sentence(&closed, &renamed).unwrap());
        }
    }

    #[test]
    fn quantifier_free_values_agree_in_substructures(seed in any::<u64>()) {
        let pool = chain_pool();
        let mut rng = instance_rng(seed, 2);
        let chain = &pool[(seed % pool.len() as u64) as usize];
        let t = random_structure(&mut rng, chain, &suite_signature(), 3).unwrap();
        for s in enumerate_substructures(&t, false).unwrap() {
            prop_assert!(is_substructure(&s, &t).unwrap().is_none());
            let phi = random_formula(&mut rng, &suite_signature(), None, 2, 3);
            if !phi.is_quantifier_free() {
                continue;
            }
            for a in 0..s.size() {
                for b in 0..s.size() {
                    let up = |d: usize| t.index_of(s.label(d)).unwrap();
                    let vs = Assignment::new().set("x1", a).set("x2", b);
                    let vt = Assignment::new().set("x1", up(a)).set("x2", up(b));
                    prop_assert_eq!(eval_formula(&phi, &s, &vs).unwrap(), eval_formula(&phi, &t, &vt).unwrap());
                }
            }
        }
    }
}

/// Whenever the existential implication holds with truth constants, the
/// quantifier-free sentences over the parameters agree.
#[test]
fn existential_implication_fixes_quantifier_free_values() {
    let pool: Vec<Arc<FiniteChain>> = (2..=3).flat_map(all_mtl_chains).map(Arc::new).collect();
    let sig = suite_signature();
    let bounds = Bounds::depth(1).with_vars(1).with_truth_constants(true);
    let mut holding = 0;
    for i in 0..120 {
        let mut rng = instance_rng(11, i);
        let chain = &pool[i % pool.len()];
        let right = random_structure(&mut rng, chain, &sig, 3).unwrap();
        // every third instance uses a substructure, where the implication holds
        let left = if i % 3 == 0 {
            right.restrict(&[0, 1]).unwrap()
        } else {
            random_structure(&mut rng, chain, &sig, 2).unwrap()
        };
        let params: Vec<String> = vec!["d0".into(), "d1".into()];
        let r = implies_exists_n(&left, &right, &params, 1, &bounds).unwrap();
        if !r.holds {
            continue;
        }
        holding += 1;
        let names: Vec<String> = params.iter().map(|p| domain_constant_name(p)).collect();
        let qf = prenex_formulas(&sig, &names, Some(chain), &Bounds::depth(1).with_vars(1), PrenexClass::QuantifierFree, false)
            .unwrap();
        assert!(qf.iter().filter(|f| f.is_sentence()).count() > 20);
        let consts = |s: &Structure| -> Vec<(String, usize)> {
            names.iter().zip(&params).map(|(n, p)| (n.clone(), s.index_of(p).unwrap())).collect()
        };
        let (el, er) = (Expanded::new(&left, consts(&left)), Expanded::new(&right, consts(&right)));
        for phi in qf.iter().filter(|f| f.is_sentence()) {
            assert_eq!(eval_sentence(phi, &el).unwrap(), eval_sentence(phi, &er).unwrap(), "{phi}");
        }
    }
    assert!(holding >= 40, "only {holding} instances satisfied the implication");
}
