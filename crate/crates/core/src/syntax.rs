//! Predicate languages, terms and formulas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::FiniteChain;
use crate::error::{Error, Result};

/// Where a symbol came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Base,
    /// A constant `c_m` naming a domain element.
    DomainConstant,
    /// A truth constant naming a chain element.
    TruthConstant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Symbol {
    pub arity: usize,
    pub kind: SymbolKind,
}

/// A predicate language: predicate and function symbols with arities.
///
/// Truth constants are nullary predicate symbols named by the chain labels;
/// the chain they refer to is kept alongside.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    predicates: BTreeMap<String, Symbol>,
    functions: BTreeMap<String, Symbol>,
    truth_chain: Option<Arc<FiniteChain>>,
}

/// Name of the constant symbol introduced for domain element `label`.
pub fn domain_constant_name(label: &str) -> String {
    format!("c_{label}")
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_fresh(&self, name: &str) -> Result<()> {
        if self.predicates.contains_key(name) || self.functions.contains_key(name) {
            return Err(Error::NameClash(name.to_string()));
        }
        Ok(())
    }

    pub fn add_predicate(&mut self, name: &str, arity: usize) -> Result<()> {
        self.check_fresh(name)?;
        self.predicates.insert(
            name.to_string(),
            Symbol {
                arity,
                kind: SymbolKind::Base,
            },
        );
        Ok(())
    }

    pub fn add_function(&mut self, name: &str, arity: usize) -> Result<()> {
        self.check_fresh(name)?;
        self.functions.insert(
            name.to_string(),
            Symbol {
                arity,
                kind: SymbolKind::Base,
            },
        );
        Ok(())
    }

    pub fn with_predicate(mut self, name: &str, arity: usize) -> Result<Self> {
        self.add_predicate(name, arity)?;
        Ok(self)
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Result<Self> {
        self.add_function(name, arity)?;
        Ok(self)
    }

    pub fn predicate(&self, name: &str) -> Option<Symbol> {
        self.predicates.get(name).copied()
    }

    pub fn function(&self, name: &str) -> Option<Symbol> {
        self.functions.get(name).copied()
    }

    /// Predicates that are not truth constants, in name order.
    pub fn base_predicates(&self) -> impl Iterator<Item = (&str, usize)> {
        self.predicates
            .iter()
            .filter(|(_, s)| s.kind != SymbolKind::TruthConstant)
            .map(|(n, s)| (n.as_str(), s.arity))
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, Symbol)> {
        self.functions.iter().map(|(n, s)| (n.as_str(), *s))
    }

    /// Object constants (nullary functions), in name order.
    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.functions
            .iter()
            .filter(|(_, s)| s.arity == 0)
            .map(|(n, _)| n.as_str())
    }

    /// True when every function symbol is a constant.
    pub fn is_relational_with_constants(&self) -> bool {
        self.functions.values().all(|s| s.arity == 0)
    }

    pub fn truth_chain(&self) -> Option<&Arc<FiniteChain>> {
        self.truth_chain.as_ref()
    }

    pub fn has_truth_constant(&self, label: &str) -> bool {
        matches!(
            self.predicates.get(label),
            Some(Symbol {
                kind: SymbolKind::TruthConstant,
                ..
            })
        )
    }

    /// The expansion by a constant `c_m` for every domain element `m`.
    pub fn expand_with_domain_constants<S: AsRef<str>>(&self, domain: &[S]) -> Result<Signature> {
        if domain.is_empty() {
            return Err(Error::Precondition("a domain must be nonempty".into()));
        }
        let mut out = self.clone();
        for label in domain {
            let name = domain_constant_name(label.as_ref());
            out.check_fresh(&name)?;
            out.functions.insert(
                name,
                Symbol {
                    arity: 0,
                    kind: SymbolKind::DomainConstant,
                },
            );
        }
        Ok(out)
    }

    /// The expansion by a truth constant for every element of `chain`.
    pub fn expand_with_truth_constants(&self, chain: Arc<FiniteChain>) -> Result<Signature> {
        if self.truth_chain.is_some() {
            return Err(Error::NameClash("truth constants already present".into()));
        }
        let mut out = self.clone();
        for label in chain.labels() {
            out.check_fresh(label)?;
            out.predicates.insert(
                label.clone(),
                Symbol {
                    arity: 0,
                    kind: SymbolKind::TruthConstant,
                },
            );
        }
        out.truth_chain = Some(chain);
        Ok(out)
    }

    /// Drops truth constants and domain constants.
    pub fn base(&self) -> Signature {
        Signature {
            predicates: self
                .predicates
                .iter()
                .filter(|(_, s)| s.kind == SymbolKind::Base)
                .map(|(n, s)| (n.clone(), *s))
                .collect(),
            functions: self
                .functions
                .iter()
                .filter(|(_, s)| s.kind == SymbolKind::Base)
                .map(|(n, s)| (n.clone(), *s))
                .collect(),
            truth_chain: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    /// Function application; constants have no arguments.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::App(name.to_string(), Vec::new())
    }

    pub fn free_variables_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.free_variables_into(out)),
        }
    }
}

/// Formulas of the language, with `¬` and `↔` kept as syntax.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// The truth constant for the top element.
    Top,
    /// The truth constant for the bottom element.
    Bottom,
    /// A truth constant for an inner chain element, by label.
    Truth(String),
    Atom(String, Vec<Term>),
    /// Crisp identity `t1 ~ t2`.
    Eq(Term, Term),
    Not(Box<Formula>),
    /// Strong conjunction `&`.
    Strong(Box<Formula>, Box<Formula>),
    Meet(Box<Formula>, Box<Formula>),
    Join(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

/// Binary connectives in the order used by the formula generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Connective {
    Strong,
    Meet,
    Join,
    Iff,
    Implies,
}

impl Connective {
    pub const ALL: [Connective; 5] = [
        Connective::Strong,
        Connective::Meet,
        Connective::Join,
        Connective::Iff,
        Connective::Implies,
    ];

    pub fn is_commutative(self) -> bool {
        self != Connective::Implies
    }

    pub fn build(self, a: Formula, b: Formula) -> Formula {
        let (a, b) = (Box::new(a), Box::new(b));
        match self {
            Connective::Strong => Formula::Strong(a, b),
            Connective::Meet => Formula::Meet(a, b),
            Connective::Join => Formula::Join(a, b),
            Connective::Iff => Formula::Iff(a, b),
            Connective::Implies => Formula::Implies(a, b),
        }
    }

    pub fn apply(self, chain: &FiniteChain, x: usize, y: usize) -> usize {
        match self {
            Connective::Strong => chain.star(x, y),
            Connective::Meet => x.min(y),
            Connective::Join => x.max(y),
            Connective::Iff => chain.iff(x, y),
            Connective::Implies => chain.implies(x, y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Formula {
    pub fn atom(pred: &str, args: &[&str]) -> Formula {
        Formula::Atom(pred.to_string(), args.iter().map(|a| Term::var(a)).collect())
    }

    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn strong(self, other: Formula) -> Formula {
        Formula::Strong(Box::new(self), Box::new(other))
    }

    pub fn meet(self, other: Formula) -> Formula {
        Formula::Meet(Box::new(self), Box::new(other))
    }

    pub fn join(self, other: Formula) -> Formula {
        Formula::Join(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn iff(self, other: Formula) -> Formula {
        Formula::Iff(Box::new(self), Box::new(other))
    }

    pub fn forall(var: &str, body: Formula) -> Formula {
        Formula::Forall(var.to_string(), Box::new(body))
    }

    pub fn exists(var: &str, body: Formula) -> Formula {
        Formula::Exists(var.to_string(), Box::new(body))
    }

    pub fn quantified(q: Quantifier, var: &str, body: Formula) -> Formula {
        match q {
            Quantifier::Forall => Formula::forall(var, body),
            Quantifier::Exists => Formula::exists(var, body),
        }
    }

    /// Splits a binary connective node into its parts.
    pub fn as_binary(&self) -> Option<(Connective, &Formula, &Formula)> {
        match self {
            Formula::Strong(a, b) => Some((Connective::Strong, a, b)),
            Formula::Meet(a, b) => Some((Connective::Meet, a, b)),
            Formula::Join(a, b) => Some((Connective::Join, a, b)),
            Formula::Iff(a, b) => Some((Connective::Iff, a, b)),
            Formula::Implies(a, b) => Some((Connective::Implies, a, b)),
            _ => None,
        }
    }

    pub fn as_quantifier(&self) -> Option<(Quantifier, &str, &Formula)> {
        match self {
            Formula::Forall(v, b) => Some((Quantifier::Forall, v, b)),
            Formula::Exists(v, b) => Some((Quantifier::Exists, v, b)),
            _ => None,
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_into(&mut out);
        out
    }

    fn free_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top | Formula::Bottom | Formula::Truth(_) => {}
            Formula::Atom(_, args) => args.iter().for_each(|t| t.free_variables_into(out)),
            Formula::Eq(a, b) => {
                a.free_variables_into(out);
                b.free_variables_into(out);
            }
            Formula::Not(a) => a.free_into(out),
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let mut inner = BTreeSet::new();
                body.free_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
            _ => {
                let (_, a, b) = self.as_binary().expect("binary node");
                a.free_into(out);
                b.free_into(out);
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_variables().is_empty()
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => false,
            Formula::Not(a) => a.is_quantifier_free(),
            _ => match self.as_binary() {
                Some((_, a, b)) => a.is_quantifier_free() && b.is_quantifier_free(),
                None => true,
            },
        }
    }

    /// Nesting depth of connectives and quantifiers; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Not(a) => 1 + a.depth(),
            Formula::Forall(_, a) | Formula::Exists(_, a) => 1 + a.depth(),
            _ => match self.as_binary() {
                Some((_, a, b)) => 1 + a.depth().max(b.depth()),
                None => 0,
            },
        }
    }

    /// Rewrites `¬φ` to `φ → 0` and `φ ↔ ψ` to `(φ → ψ) ∧ (ψ → φ)`.
    pub fn elaborate(&self) -> Formula {
        match self {
            Formula::Not(a) => a.elaborate().implies(Formula::Bottom),
            Formula::Iff(a, b) => {
                let (a, b) = (a.elaborate(), b.elaborate());
                a.clone().implies(b.clone()).meet(b.implies(a))
            }
            Formula::Forall(v, a) => Formula::forall(v, a.elaborate()),
            Formula::Exists(v, a) => Formula::exists(v, a.elaborate()),
            _ => match self.as_binary() {
                Some((c, a, b)) => c.build(a.elaborate(), b.elaborate()),
                None => self.clone(),
            },
        }
    }

    /// Checks symbols and arities against `sig`.
    pub fn check(&self, sig: &Signature) -> Result<()> {
        fn term(t: &Term, sig: &Signature) -> Result<()> {
            if let Term::App(f, args) = t {
                let sym = sig
                    .function(f)
                    .ok_or_else(|| Error::UnknownSymbol(f.clone()))?;
                if sym.arity != args.len() {
                    return Err(Error::ArityMismatch {
                        name: f.clone(),
                        expected: sym.arity,
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| term(a, sig))?;
            }
            Ok(())
        }
        match self {
            Formula::Top | Formula::Bottom => Ok(()),
            Formula::Truth(l) => {
                if sig.has_truth_constant(l) {
                    Ok(())
                } else {
                    Err(Error::UnknownSymbol(format!("val({l})")))
                }
            }
            Formula::Atom(p, args) => {
                let sym = sig
                    .predicate(p)
                    .filter(|s| s.kind != SymbolKind::TruthConstant)
                    .ok_or_else(|| Error::UnknownSymbol(p.clone()))?;
                if sym.arity != args.len() {
                    return Err(Error::ArityMismatch {
                        name: p.clone(),
                        expected: sym.arity,
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| term(a, sig))
            }
            Formula::Eq(a, b) => {
                term(a, sig)?;
                term(b, sig)
            }
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => a.check(sig),
            _ => {
                let (_, a, b) = self.as_binary().expect("binary node");
                a.check(sig)?;
                b.check(sig)
            }
        }
    }

    /// The smallest signature in which this formula is well formed.
    pub fn infer_signature(&self) -> Result<Signature> {
        let mut sig = Signature::new();
        self.collect_symbols(&mut sig)?;
        Ok(sig)
    }

    fn collect_symbols(&self, sig: &mut Signature) -> Result<()> {
        fn term(t: &Term, sig: &mut Signature) -> Result<()> {
            if let Term::App(f, args) = t {
                match sig.function(f) {
                    Some(s) if s.arity != args.len() => {
                        return Err(Error::ArityMismatch {
                            name: f.clone(),
                            expected: s.arity,
                            found: args.len(),
                        })
                    }
                    Some(_) => {}
                    None => sig.add_function(f, args.len())?,
                }
                for a in args {
                    term(a, sig)?;
                }
            }
            Ok(())
        }
        match self {
            Formula::Top | Formula::Bottom | Formula::Truth(_) => Ok(()),
            Formula::Atom(p, args) => {
                match sig.predicate(p) {
                    Some(s) if s.arity != args.len() => {
                        return Err(Error::ArityMismatch {
                            name: p.clone(),
                            expected: s.arity,
                            found: args.len(),
                        })
                    }
                    Some(_) => {}
                    None => sig.add_predicate(p, args.len())?,
                }
                args.iter().try_for_each(|a| term(a, sig))
            }
            Formula::Eq(a, b) => {
                term(a, sig)?;
                term(b, sig)
            }
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => {
                a.collect_symbols(sig)
            }
            _ => {
                let (_, a, b) = self.as_binary().expect("binary node");
                a.collect_symbols(sig)?;
                b.collect_symbols(sig)
            }
        }
    }

    /// Replaces free occurrences of `var` by `t`. `t` must not contain
    /// variables that become bound.
    pub fn substitute(&self, var: &str, t: &Term) -> Formula {
        fn sub_term(s: &Term, var: &str, t: &Term) -> Term {
            match s {
                Term::Var(v) if v == var => t.clone(),
                Term::Var(_) => s.clone(),
                Term::App(f, args) => {
                    Term::App(f.clone(), args.iter().map(|a| sub_term(a, var, t)).collect())
                }
            }
        }
        match self {
            Formula::Top | Formula::Bottom | Formula::Truth(_) => self.clone(),
            Formula::Atom(p, args) => {
                Formula::Atom(p.clone(), args.iter().map(|a| sub_term(a, var, t)).collect())
            }
            Formula::Eq(a, b) => Formula::Eq(sub_term(a, var, t), sub_term(b, var, t)),
            Formula::Not(a) => a.substitute(var, t).not(),
            Formula::Forall(v, _) | Formula::Exists(v, _) if v == var => self.clone(),
            Formula::Forall(v, a) => Formula::forall(v, a.substitute(var, t)),
            Formula::Exists(v, a) => Formula::exists(v, a.substitute(var, t)),
            _ => {
                let (c, a, b) = self.as_binary().expect("binary node");
                c.build(a.substitute(var, t), b.substitute(var, t))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render_formula(self))
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render_term(self))
    }
}

/// Prenex fragment of a formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PrenexClass {
    QuantifierFree,
    /// Prenex with `n` alternating blocks, the first universal.
    Forall(usize),
    /// Prenex with `n` alternating blocks, the first existential.
    Exists(usize),
    NotPrenex,
}

impl PrenexClass {
    /// Whether a formula of this class also belongs to `target`.
    ///
    /// A prefix with `m` blocks is a degenerate prefix with any larger number
    /// of blocks, and a prefix starting with the other quantifier needs one
    /// extra (empty) leading block.
    pub fn is_within(self, target: PrenexClass) -> bool {
        use PrenexClass::*;
        match (self, target) {
            (NotPrenex, _) | (_, NotPrenex) => false,
            (QuantifierFree, _) => true,
            (_, QuantifierFree) => false,
            (Forall(m), Forall(n)) | (Exists(m), Exists(n)) => m <= n,
            (Exists(m), Forall(n)) | (Forall(m), Exists(n)) => m < n,
        }
    }
}

impl fmt::Display for PrenexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrenexClass::QuantifierFree => f.write_str("QuantifierFree"),
            PrenexClass::Forall(n) => write!(f, "Forall({n})"),
            PrenexClass::Exists(n) => write!(f, "Exists({n})"),
            PrenexClass::NotPrenex => f.write_str("NotPrenex"),
        }
    }
}

/// Classifies by the maximal quantifier prefix; the body must be quantifier-free.
pub fn classify_prenex(phi: &Formula) -> PrenexClass {
    let mut blocks: Vec<Quantifier> = Vec::new();
    let mut cur = phi;
    while let Some((q, _, body)) = cur.as_quantifier() {
        if blocks.last() != Some(&q) {
            blocks.push(q);
        }
        cur = body;
    }
    if !cur.is_quantifier_free() {
        return PrenexClass::NotPrenex;
    }
    match blocks.first() {
        None => PrenexClass::QuantifierFree,
        Some(Quantifier::Forall) => PrenexClass::Forall(blocks.len()),
        Some(Quantifier::Exists) => PrenexClass::Exists(blocks.len()),
    }
}
