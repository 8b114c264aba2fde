//! Diagrams of finite structures and the diagram criterion for embeddings.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{FiniteChain, Truth};
use crate::error::{check_budget, Error, Result};
use crate::generate::{atoms, syntactic_formulas, term_universe, Bounds};
use crate::morphisms::{is_elementary_up_to_depth, search_strong_embedding, MapKind, StructureMap};
use crate::semantics::{compile, Expanded, Interpretation, Structure};
use crate::syntax::{domain_constant_name, Formula, Signature, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiagramKind {
    /// Quantifier-free sentences.
    Diag,
    /// All sentences, bounded.
    ElDiag,
}

/// Generation limits for a diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DiagramBounds {
    /// Connective (and, for `ElDiag`, quantifier) depth.
    pub depth: usize,
    /// Bound variables available to `ElDiag`; ignored by `Diag`.
    pub vars: usize,
    /// Nesting of function symbols in the terms of `Diag`. Required when the
    /// signature has non-constant function symbols.
    pub term_depth: Option<usize>,
    pub truth_constants: bool,
    pub budget: u64,
}

impl DiagramBounds {
    /// Atomic sentences only.
    pub fn atomic() -> Self {
        DiagramBounds::from(Bounds::depth(0).with_vars(0))
    }

    pub fn with_term_depth(mut self, d: usize) -> Self {
        self.term_depth = Some(d);
        self
    }
}

impl From<Bounds> for DiagramBounds {
    fn from(b: Bounds) -> Self {
        DiagramBounds {
            depth: b.depth,
            vars: b.vars,
            term_depth: None,
            truth_constants: b.truth_constants,
            budget: b.budget,
        }
    }
}

/// A sentence of the expanded language with the value it takes in the source.
/// It stands for `sentence <-> val(value)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagramEntry {
    pub sentence: Formula,
    pub value: Truth,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagram {
    pub kind: DiagramKind,
    pub bounds: DiagramBounds,
    #[serde(skip)]
    pub chain: Arc<FiniteChain>,
    /// Base signature of the source structure.
    #[serde(skip)]
    pub signature: Signature,
    /// `c_m` for every element `m`, in domain order.
    pub constants: Vec<String>,
    pub entries: Vec<DiagramEntry>,
}

/// Ground terms over `constants` and the functions of `sig`, by nesting level.
fn ground_terms(sig: &Signature, constants: &[String], term_depth: usize, budget: u64) -> Result<Vec<Term>> {
    let mut out: Vec<Term> = constants.iter().map(|c| Term::constant(c)).collect();
    for c in sig.constants() {
        if !constants.iter().any(|k| k == c) {
            out.push(Term::constant(c));
        }
    }
    let mut start = 0;
    for _ in 0..term_depth {
        let end = out.len();
        let idx: Vec<usize> = (0..end).collect();
        for (f, sym) in sig.functions() {
            if sym.arity == 0 {
                continue;
            }
            check_budget((end as u128).saturating_pow(sym.arity as u32) + out.len() as u128, budget)?;
            for args in crate::algebra::tuples(&idx, sym.arity) {
                if args.iter().all(|&a| a < start) {
                    continue;
                }
                out.push(Term::App(
                    f.to_string(),
                    args.iter().map(|&a| out[a].clone()).collect(),
                ));
            }
        }
        start = end;
    }
    Ok(out)
}

fn ground_atoms(sig: &Signature, terms: &[Term], truth: Option<&FiniteChain>) -> Vec<Formula> {
    let idx: Vec<usize> = (0..terms.len()).collect();
    let mut out = Vec::new();
    for (p, arity) in sig.base_predicates() {
        for args in crate::algebra::tuples(&idx, arity) {
            out.push(Formula::Atom(
                p.to_string(),
                args.iter().map(|&i| terms[i].clone()).collect(),
            ));
        }
    }
    for i in 0..terms.len() {
        for j in i..terms.len() {
            out.push(Formula::Eq(terms[i].clone(), terms[j].clone()));
        }
    }
    out.push(Formula::Bottom);
    if let Some(chain) = truth {
        for l in &chain.labels()[1..chain.len() - 1] {
            out.push(Formula::Truth(l.clone()));
        }
    }
    out.push(Formula::Top);
    out
}

/// Enumerates the sentences of the expansion of `s` by its elements within
/// `bounds` and records the value of each in `s`.
pub fn build_diagram(s: &Structure, kind: DiagramKind, bounds: &DiagramBounds) -> Result<Diagram> {
    let sig = s.signature().base();
    let constants: Vec<String> = s.domain().iter().map(|l| domain_constant_name(l)).collect();
    for c in &constants {
        if sig.predicate(c).is_some() || sig.function(c).is_some() {
            return Err(Error::NameClash(c.clone()));
        }
    }
    let truth = bounds.truth_constants.then(|| s.chain());
    let sentences = match kind {
        DiagramKind::Diag => {
            let term_depth = match (sig.is_relational_with_constants(), bounds.term_depth) {
                (true, d) => d.unwrap_or(0),
                (false, Some(d)) => d,
                (false, None) => {
                    return Err(Error::UnsupportedSignature(
                        "a diagram over function symbols needs a term depth".into(),
                    ))
                }
            };
            let terms = ground_terms(&sig, &constants, term_depth, bounds.budget)?;
            let atoms = ground_atoms(&sig, &terms, truth);
            syntactic_formulas(atoms, 0, bounds.depth, false, false, bounds.budget)?
        }
        DiagramKind::ElDiag => {
            let terms = term_universe(bounds.vars, &constants, &sig);
            let atoms = atoms(&sig, &terms, truth)?;
            let mut all =
                syntactic_formulas(atoms, bounds.vars, bounds.depth, true, true, bounds.budget)?;
            all.retain(|f| f.is_sentence());
            all
        }
    };
    let expanded = Expanded::new(
        s,
        constants.iter().cloned().zip(0..s.size()).collect::<Vec<_>>(),
    );
    let entries = sentences
        .into_iter()
        .map(|sentence| {
            let value = compile(&sentence, &expanded, &[])?.eval_at(&[]);
            Ok(DiagramEntry { sentence, value })
        })
        .collect::<Result<_>>()?;
    Ok(Diagram {
        kind,
        bounds: *bounds,
        chain: s.chain_arc().clone(),
        signature: sig,
        constants,
        entries,
    })
}

fn constants_as_vars(phi: &Formula, names: &[String]) -> Formula {
    fn term(t: &Term, names: &[String]) -> Term {
        match t {
            Term::App(c, args) if args.is_empty() && names.contains(c) => Term::Var(c.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| term(a, names)).collect()),
            Term::Var(_) => t.clone(),
        }
    }
    match phi {
        Formula::Top | Formula::Bottom | Formula::Truth(_) => phi.clone(),
        Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(|a| term(a, names)).collect()),
        Formula::Eq(a, b) => Formula::Eq(term(a, names), term(b, names)),
        Formula::Not(a) => constants_as_vars(a, names).not(),
        Formula::Forall(v, a) => Formula::forall(v, constants_as_vars(a, names)),
        Formula::Exists(v, a) => Formula::exists(v, constants_as_vars(a, names)),
        _ => {
            let (c, a, b) = phi.as_binary().expect("binary node");
            c.build(constants_as_vars(a, names), constants_as_vars(b, names))
        }
    }
}

/// Index of the first entry of `d` whose value in `t` differs from the
/// recorded one. `t` must interpret every constant of `d`.
pub fn models_diagram<I: Interpretation + ?Sized>(t: &I, d: &Diagram) -> Result<Option<usize>> {
    if t.chain() != &*d.chain {
        return Err(Error::ChainMismatch("diagram and structure use different chains".into()));
    }
    for (i, e) in d.entries.iter().enumerate() {
        if compile(&e.sentence, t, &[])?.eval_at(&[]) != e.value {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// The lexicographically first interpretation of the diagram's constants in
/// `t` (element indices, in the order of `d.constants`) that makes `t` a model.
pub fn find_diagram_model(t: &Structure, d: &Diagram) -> Result<Option<Vec<usize>>> {
    if t.chain() != &*d.chain {
        return Err(Error::ChainMismatch("diagram and structure use different chains".into()));
    }
    let m = d.constants.len();
    let n = t.size();
    let total = (n as u128).saturating_pow(m as u32);
    check_budget(total.saturating_mul(d.entries.len().max(1) as u128), d.bounds.budget)?;
    let free: Vec<&str> = d.constants.iter().map(String::as_str).collect();
    let compiled = d
        .entries
        .iter()
        .map(|e| compile(&constants_as_vars(&e.sentence, &d.constants), t, &free))
        .collect::<Result<Vec<_>>>()?;
    let slots = compiled.iter().map(|c| c.slots()).max().unwrap_or(0).max(m);
    let mut env = vec![0usize; slots];
    let mut g = vec![0usize; m];
    for _ in 0..total {
        let ok = compiled.iter().zip(&d.entries).all(|(c, e)| {
            env[..m].copy_from_slice(&g);
            c.eval(&mut env) == e.value
        });
        if ok {
            return Ok(Some(g));
        }
        // odometer, first constant most significant
        for digit in g.iter_mut().rev() {
            *digit += 1;
            if *digit < n {
                break;
            }
            *digit = 0;
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagramEquivalence {
    pub kind: DiagramKind,
    /// Some interpretation of the constants makes `T` a model of the diagram.
    pub diagram_side: bool,
    /// A strong embedding (elementary within the bounds, for `ElDiag`) with
    /// the identity algebra map exists.
    pub embedding_side: bool,
    pub agree: bool,
    /// Domain map found by the diagram side, as target labels.
    pub interpretation: Option<Vec<String>>,
    /// Domain map found by the embedding side, as target labels.
    pub embedding: Option<Vec<String>>,
    pub entries: usize,
}

/// Compares the two sides of the diagram criterion on one pair.
///
/// For `ElDiag` the embedding side asks for a strong embedding that is
/// elementary for formulas of the diagram depth in `|S| + vars` variables,
/// the number a diagram sentence uses once its constants become variables.
pub fn diagram_embedding_equivalence(
    s: &Structure,
    t: &Structure,
    kind: DiagramKind,
    bounds: &DiagramBounds,
) -> Result<DiagramEquivalence> {
    if s.chain() != t.chain() {
        return Err(Error::ChainMismatch("both structures need the same chain".into()));
    }
    let d = build_diagram(s, kind, bounds)?;
    diagram_embedding_equivalence_with(s, t, &d)
}

/// As [`diagram_embedding_equivalence`] with a prebuilt diagram of `s`.
pub fn diagram_embedding_equivalence_with(
    s: &Structure,
    t: &Structure,
    d: &Diagram,
) -> Result<DiagramEquivalence> {
    let found = find_diagram_model(t, d)?;
    let embedding = match d.kind {
        DiagramKind::Diag => search_strong_embedding(s, t, true, d.bounds.budget)?.map(|m| m.g),
        DiagramKind::ElDiag => elementary_embedding(s, t, &d.bounds)?,
    };
    let labels = |g: &Vec<usize>| g.iter().map(|&i| t.label(i).to_string()).collect();
    Ok(DiagramEquivalence {
        kind: d.kind,
        diagram_side: found.is_some(),
        embedding_side: embedding.is_some(),
        agree: found.is_some() == embedding.is_some(),
        interpretation: found.as_ref().map(labels),
        embedding: embedding.as_ref().map(labels),
        entries: d.entries.len(),
    })
}

/// The first injective domain map, in lexicographic order, that is a strong
/// embedding with identity algebra map and elementary within the bounds.
fn elementary_embedding(s: &Structure, t: &Structure, bounds: &DiagramBounds) -> Result<Option<Vec<usize>>> {
    let (n, nt) = (s.size(), t.size());
    check_budget((nt as u128).saturating_pow(n as u32), bounds.budget)?;
    let eb = Bounds::depth(bounds.depth)
        .with_vars(n + bounds.vars)
        .with_truth_constants(bounds.truth_constants)
        .with_budget(bounds.budget);
    let id = StructureMap::identity(s).f;
    let f = crate::algebra::AlgebraMap {
        source: id.source.clone(),
        target: t.chain_arc().clone(),
        map: id.map,
    };
    let all: Vec<usize> = (0..nt).collect();
    for g in crate::algebra::tuples(&all, n) {
        let m = StructureMap {
            f: f.clone(),
            g,
            kind: MapKind::Embedding,
        };
        if crate::morphisms::is_embedding(&m, s, t)?.is_some() {
            continue;
        }
        if is_elementary_up_to_depth(&m, s, t, &eb)?.is_none() {
            return Ok(Some(m.g));
        }
    }
    Ok(None)
}

impl Diagram {
    /// The diagram as a theory file: declarations, then `σ <-> val(a)` lines.
    pub fn to_theory_text(&self) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            DiagramKind::Diag => "Diag",
            DiagramKind::ElDiag => "ElDiag",
        };
        let _ = writeln!(
            out,
            "# {kind}, depth {}, {} entries",
            self.bounds.depth,
            self.entries.len()
        );
        for (p, arity) in self.signature.base_predicates() {
            let _ = writeln!(out, "pred {p}/{arity}");
        }
        for (f, sym) in self.signature.functions() {
            let _ = writeln!(out, "func {f}/{}", sym.arity);
        }
        for c in &self.constants {
            let _ = writeln!(out, "func {c}/0");
        }
        for e in &self.entries {
            let _ = writeln!(out, "{}", self.entry_formula(e));
        }
        out
    }

    /// `σ <-> val(a)` for one entry.
    pub fn entry_formula(&self, e: &DiagramEntry) -> Formula {
        let a = if e.value == self.chain.bottom() {
            Formula::Bottom
        } else if e.value == self.chain.top() {
            Formula::Top
        } else {
            Formula::Truth(self.chain.label(e.value).to_string())
        };
        Formula::iff(e.sentence.clone(), a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::Table;

    fn godel4() -> Arc<FiniteChain> {
        Arc::new(FiniteChain::godel(&["0", "1/2", "3/4", "1"]))
    }

    fn constant_p(value: usize, n: usize) -> Structure {
        Structure::with_size(godel4(), n)
            .unwrap()
            .with_predicate("P", Table::constant(1, n, value))
            .unwrap()
    }

    #[test]
    fn diag_of_a_point() {
        let s = constant_p(2, 1);
        let d = build_diagram(&s, DiagramKind::Diag, &DiagramBounds::atomic()).unwrap();
        let text: Vec<String> = d.entries.iter().map(|e| d.entry_formula(e).to_string()).collect();
        assert_eq!(
            text,
            ["P(c_d0) <-> val(3/4)", "c_d0 ~ c_d0 <-> val(1)", "val(0) <-> val(0)", "val(1) <-> val(1)"]
        );
        let el = build_diagram(&s, DiagramKind::ElDiag, &Bounds::depth(1).into()).unwrap();
        let all = el
            .entries
            .iter()
            .find(|e| e.sentence.to_string() == "forall x1. P(x1)")
            .unwrap();
        assert_eq!(all.value, 2);
        assert!(el.entries.iter().all(|e| e.sentence.is_sentence()));
    }

    #[test]
    fn entries_reevaluate_and_diag_is_inside_eldiag() {
        let s = Structure::with_size(godel4(), 2)
            .unwrap()
            .with_predicate("R", Table::new(2, vec![0, 1, 2, 3]))
            .unwrap();
        let b = DiagramBounds::from(Bounds::depth(1));
        let d = build_diagram(&s, DiagramKind::Diag, &b).unwrap();
        let el = build_diagram(&s, DiagramKind::ElDiag, &b).unwrap();
        let sharp = s.expansion_sharp().unwrap();
        assert_eq!(models_diagram(&sharp, &d).unwrap(), None);
        assert_eq!(models_diagram(&sharp, &el).unwrap(), None);
        for e in &d.entries {
            assert!(e.sentence.is_quantifier_free());
            assert!(el.entries.contains(e), "{}", e.sentence);
        }
    }

    #[test]
    fn crisp_values() {
        let b = Arc::new(FiniteChain::boolean());
        let s = Structure::with_size(b, 2)
            .unwrap()
            .with_predicate("R", Table::new(2, vec![0, 1, 1, 0]))
            .unwrap();
        let d = build_diagram(&s, DiagramKind::Diag, &DiagramBounds::from(Bounds::depth(1))).unwrap();
        assert!(d.entries.iter().all(|e| e.value <= 1));
    }

    #[test]
    fn lower_constant_predicate_is_not_a_model() {
        let (m, n) = (constant_p(2, 1), constant_p(1, 1));
        let d = build_diagram(&m, DiagramKind::Diag, &DiagramBounds::atomic()).unwrap();
        assert_eq!(models_diagram(&n.expansion_sharp().unwrap(), &d).unwrap(), Some(0));
        let r = diagram_embedding_equivalence(&m, &n, DiagramKind::Diag, &DiagramBounds::atomic()).unwrap();
        assert!(!r.diagram_side && !r.embedding_side && r.agree);
    }

    #[test]
    fn induced_subgraph() {
        let b = Arc::new(FiniteChain::boolean());
        let t = Structure::with_size(b, 3)
            .unwrap()
            .with_predicate("R", Table::from_fn(2, 3, |a| usize::from(a[0] + 1 == a[1])))
            .unwrap();
        let s = t.restrict(&[1, 2]).unwrap();
        let r = diagram_embedding_equivalence(&s, &t, DiagramKind::Diag, &DiagramBounds::atomic()).unwrap();
        assert!(r.diagram_side && r.embedding_side);
        assert_eq!(r.interpretation, Some(vec!["d0".to_string(), "d1".to_string()]));
        let with_inclusion = Expanded::new(
            &t,
            vec![("c_d1".to_string(), 1), ("c_d2".to_string(), 2)],
        );
        let d = build_diagram(&s, DiagramKind::Diag, &DiagramBounds::atomic()).unwrap();
        assert_eq!(models_diagram(&with_inclusion, &d).unwrap(), None);
    }

    #[test]
    fn elementary_side_on_constant_predicates() {
        let (s, t) = (constant_p(2, 1), constant_p(2, 2));
        let b = DiagramBounds::from(Bounds::depth(1));
        let r = diagram_embedding_equivalence(&s, &t, DiagramKind::ElDiag, &b).unwrap();
        // ∀x1∀x2 x1 ~ x2 tells a point from two points only at depth 2
        assert!(r.agree, "{r:?}");
    }

    #[test]
    fn function_symbols_need_a_term_depth() {
        let b = Arc::new(FiniteChain::boolean());
        let s = Structure::with_size(b, 2)
            .unwrap()
            .with_function("f", Table::new(1, vec![1, 0]))
            .unwrap();
        assert!(matches!(
            build_diagram(&s, DiagramKind::Diag, &DiagramBounds::atomic()),
            Err(Error::UnsupportedSignature(_))
        ));
        let d = build_diagram(&s, DiagramKind::Diag, &DiagramBounds::atomic().with_term_depth(1)).unwrap();
        assert!(d.entries.iter().any(|e| e.sentence.to_string() == "c_d0 ~ f(c_d1)" && e.value == 1));
        let r = diagram_embedding_equivalence_with(&s, &s, &d).unwrap();
        assert!(r.diagram_side && r.embedding_side);
    }

    #[test]
    fn theory_text() {
        let d = build_diagram(&constant_p(2, 1), DiagramKind::Diag, &DiagramBounds::atomic()).unwrap();
        let text = d.to_theory_text();
        assert!(text.contains("pred P/1\nfunc c_d0/0\nP(c_d0) <-> val(3/4)\n"), "{text}");
    }
}
