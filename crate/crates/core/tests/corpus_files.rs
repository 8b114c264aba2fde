use std::sync::Arc;

use gradedmt::corpus::{self, corpus_dir};
use gradedmt::io::{load_algebra, load_chain, load_structure, load_theory, parse_theory, save_structure};
use gradedmt::semantics::{eval_sentence, is_model};
use gradedmt::unions::union_of_chain;

#[test]
fn structure_files_resolve_their_algebra() {
    let dir = corpus_dir().join("structures");
    let m = load_structure(&dir.join("counterexample_m.json")).unwrap();
    assert_eq!(m, corpus::counterexample_pair().unwrap().0);
    assert_eq!(m.chain().labels(), ["0", "1/2", "3/4", "1"]);
    for name in ["k3", "k4", "k5", "z5_fuzzy_subgroup"] {
        let from_disk = load_structure(&dir.join(format!("{name}.json"))).unwrap();
        assert_eq!(from_disk, corpus::structure(name).unwrap(), "{name}");
    }
}

#[test]
fn algebra_files_match_the_bundled_names() {
    for name in ["godel4", "luk3", "bool2"] {
        let path = corpus_dir().join("algebras").join(format!("{name}.json"));
        assert_eq!(
            load_algebra(&path.to_string_lossy()).unwrap(),
            load_algebra(&format!("bundled:{name}")).unwrap()
        );
    }
}

#[test]
fn chain_file_loads_complete_graphs() {
    let c = load_chain(&corpus_dir().join("chains/complete_graphs.json")).unwrap();
    assert_eq!(c.len(), 3);
    assert_eq!(union_of_chain(&c).unwrap(), corpus::structure("k5").unwrap());
}

#[test]
fn weighted_graph_axioms_on_complete_graphs() {
    let t = corpus::theory("weighted_graph", None).unwrap();
    assert_eq!(t.formulas.len(), 2);
    for name in ["k3", "k4", "k5"] {
        let k = corpus::structure(name).unwrap();
        assert_eq!(is_model(&t.formulas, &k).unwrap(), None, "{name}");
    }
    let degree2 = corpus::theory("degree2", None).unwrap();
    let k3 = corpus::structure("k3").unwrap();
    assert_eq!(eval_sentence(&degree2.formulas[0], &k3).unwrap(), 1);
    let k2 = k3.restrict(&[0, 1]).unwrap();
    assert_eq!(eval_sentence(&degree2.formulas[0], &k2).unwrap(), 0);
}

#[test]
fn z5_with_graded_subgroup_models_its_theory() {
    let g = corpus::godel4();
    let t = corpus::theory("fuzzy_subgroup", Some(g)).unwrap();
    assert_eq!(t.formulas.len(), 8);
    let z5 = corpus::structure("z5_fuzzy_subgroup").unwrap();
    assert_eq!(is_model(&t.formulas, &z5).unwrap(), None);

    // lowering G on 0 breaks closure under products
    let mut broken = z5.clone();
    broken.predicate_mut("G").unwrap().values[0] = 1;
    assert!(is_model(&t.formulas, &broken).unwrap().is_some());
}

#[test]
fn theory_errors_name_the_line() {
    let err = parse_theory("pred R/2\nforall x. R(x,x)\nR(x)\n", None, None).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    let err = parse_theory("pred R\n", None, None).unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
    let err = parse_theory("forall x. P(x) -> val(1/2)\n", None, None).unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
    let g = Arc::new(gradedmt::io::bundled_algebra("godel4").unwrap());
    assert!(parse_theory("forall x. P(x) -> val(1/2)\n", None, Some(g)).is_ok());
}

#[test]
fn saved_structure_reloads() {
    let dir = tempdir();
    let z5 = corpus::structure("z5_fuzzy_subgroup").unwrap();
    let path = dir.join("z5.json");
    save_structure(&z5, Some("bundled:godel4"), &path).unwrap();
    assert_eq!(load_structure(&path).unwrap(), z5);
    let theory_path = corpus_dir().join("theories/weighted_graph.theory");
    let t = load_theory(&theory_path, None, None).unwrap();
    assert_eq!(t, corpus::theory("weighted_graph", None).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("gradedmt-corpus-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
