//! Structures over a finite chain and the evaluation of formulas in them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::algebra::{FiniteChain, Truth};
use crate::error::{check_budget, Error, Result};
use crate::generate::{Bounds, ClosureEngine, EngineConfig, Probe};
use crate::syntax::{Connective, Formula, Quantifier, Signature, Term};
use serde::Serialize;

/// A total table over `domain^arity`, row-major with the first argument most
/// significant. Predicate tables hold chain indices, function tables hold
/// domain indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Table {
    pub arity: usize,
    pub values: Vec<usize>,
}

impl Table {
    pub fn new(arity: usize, values: Vec<usize>) -> Self {
        Table { arity, values }
    }

    /// A table with every entry equal to `value`.
    pub fn constant(arity: usize, n: usize, value: usize) -> Self {
        Table {
            arity,
            values: vec![value; n.pow(arity as u32)],
        }
    }

    pub fn from_fn(arity: usize, n: usize, f: impl Fn(&[usize]) -> usize) -> Self {
        let all: Vec<usize> = (0..n).collect();
        let values = crate::algebra::tuples(&all, arity).map(|t| f(&t)).collect();
        Table { arity, values }
    }

    #[inline]
    pub fn index(n: usize, args: &[usize]) -> usize {
        args.iter().fold(0, |acc, &a| acc * n + a)
    }

    #[inline]
    pub fn get(&self, n: usize, args: &[usize]) -> usize {
        self.values[Self::index(n, args)]
    }
}

/// Read access to everything evaluation needs.
pub trait Interpretation {
    fn chain(&self) -> &FiniteChain;
    fn size(&self) -> usize;
    fn predicate(&self, name: &str) -> Option<&Table>;
    fn function(&self, name: &str) -> Option<&Table>;
    /// Constants supplied outside the function tables.
    fn extra_constant(&self, _name: &str) -> Option<usize> {
        None
    }
}

/// A structure `⟨A, M⟩`: a chain, a nonempty finite domain and total tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    chain: Arc<FiniteChain>,
    domain: Vec<String>,
    predicates: BTreeMap<String, Table>,
    functions: BTreeMap<String, Table>,
}

impl Structure {
    /// A structure with no symbols yet.
    pub fn new<S: Into<String>>(chain: Arc<FiniteChain>, domain: Vec<S>) -> Result<Self> {
        let domain: Vec<String> = domain.into_iter().map(Into::into).collect();
        if domain.is_empty() {
            return Err(Error::Validation("domain must be nonempty".into()));
        }
        let distinct: BTreeSet<&String> = domain.iter().collect();
        if distinct.len() != domain.len() {
            return Err(Error::Validation("domain labels must be distinct".into()));
        }
        Ok(Structure {
            chain,
            domain,
            predicates: BTreeMap::new(),
            functions: BTreeMap::new(),
        })
    }

    /// A structure on `d0, ..., d(n-1)`.
    pub fn with_size(chain: Arc<FiniteChain>, n: usize) -> Result<Self> {
        Self::new(chain, (0..n).map(|i| format!("d{i}")).collect())
    }

    fn check_name(&self, name: &str) -> Result<()> {
        if name.is_empty() {
            return Err(Error::Validation("symbol names must be nonempty".into()));
        }
        Ok(())
    }

    pub fn set_predicate(&mut self, name: &str, table: Table) -> Result<()> {
        self.check_name(name)?;
        if self.functions.contains_key(name) {
            return Err(Error::NameClash(name.to_string()));
        }
        let n = self.domain.len();
        if table.values.len() != n.pow(table.arity as u32) {
            return Err(Error::Validation(format!(
                "predicate `{name}` table has {} entries, expected {}",
                table.values.len(),
                n.pow(table.arity as u32)
            )));
        }
        if let Some(&bad) = table.values.iter().find(|&&v| v >= self.chain.len()) {
            return Err(Error::Validation(format!(
                "predicate `{name}` has value index {bad} outside the chain"
            )));
        }
        self.predicates.insert(name.to_string(), table);
        Ok(())
    }

    pub fn set_function(&mut self, name: &str, table: Table) -> Result<()> {
        self.check_name(name)?;
        if self.predicates.contains_key(name) {
            return Err(Error::NameClash(name.to_string()));
        }
        let n = self.domain.len();
        if table.values.len() != n.pow(table.arity as u32) {
            return Err(Error::Validation(format!(
                "function `{name}` table has {} entries, expected {}",
                table.values.len(),
                n.pow(table.arity as u32)
            )));
        }
        if let Some(&bad) = table.values.iter().find(|&&v| v >= n) {
            return Err(Error::Validation(format!(
                "function `{name}` has value index {bad} outside the domain"
            )));
        }
        self.functions.insert(name.to_string(), table);
        Ok(())
    }

    pub fn with_predicate(mut self, name: &str, table: Table) -> Result<Self> {
        self.set_predicate(name, table)?;
        Ok(self)
    }

    pub fn with_function(mut self, name: &str, table: Table) -> Result<Self> {
        self.set_function(name, table)?;
        Ok(self)
    }

    pub fn chain(&self) -> &FiniteChain {
        &self.chain
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn chain_arc(&self) -> &Arc<FiniteChain> {
        &self.chain
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn label(&self, d: usize) -> &str {
        &self.domain[d]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|l| l == label)
    }

    pub fn predicates(&self) -> &BTreeMap<String, Table> {
        &self.predicates
    }

    pub fn functions(&self) -> &BTreeMap<String, Table> {
        &self.functions
    }

    pub fn predicate_mut(&mut self, name: &str) -> Option<&mut Table> {
        self.predicates.get_mut(name)
    }

    /// Value of `P(args)` as a chain index.
    pub fn pred_value(&self, name: &str, args: &[usize]) -> Option<Truth> {
        let t = self.predicates.get(name)?;
        Some(t.get(self.domain.len(), args))
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for (n, t) in &self.predicates {
            sig.add_predicate(n, t.arity).expect("disjoint names");
        }
        for (n, t) in &self.functions {
            sig.add_function(n, t.arity).expect("disjoint names");
        }
        sig
    }

    /// Restriction to the given domain indices (in the given order).
    ///
    /// The caller must ensure the subset is closed under every function.
    pub fn restrict(&self, subset: &[usize]) -> Result<Structure> {
        let pos: BTreeMap<usize, usize> =
            subset.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let mut out = Structure::new(
            self.chain.clone(),
            subset.iter().map(|&d| self.domain[d].clone()).collect(),
        )?;
        let n = self.domain.len();
        let m = subset.len();
        for (name, t) in &self.predicates {
            let table = Table::from_fn(t.arity, m, |args| {
                let orig: Vec<usize> = args.iter().map(|&a| subset[a]).collect();
                t.get(n, &orig)
            });
            out.predicates.insert(name.clone(), table);
        }
        for (name, t) in &self.functions {
            let mut values = Vec::with_capacity(m.pow(t.arity as u32));
            let all: Vec<usize> = (0..m).collect();
            for args in crate::algebra::tuples(&all, t.arity) {
                let orig: Vec<usize> = args.iter().map(|&a| subset[a]).collect();
                let v = t.get(n, &orig);
                let p = pos.get(&v).ok_or_else(|| {
                    Error::Precondition(format!("subset not closed under `{name}`"))
                })?;
                values.push(*p);
            }
            out.functions.insert(name.clone(), Table::new(t.arity, values));
        }
        Ok(out)
    }

    /// Same tables over another chain with the same number of elements.
    pub fn with_chain(&self, chain: Arc<FiniteChain>) -> Result<Structure> {
        if chain.len() < self.chain.len() {
            return Err(Error::ChainMismatch("target chain is smaller".into()));
        }
        let mut out = self.clone();
        out.chain = chain;
        Ok(out)
    }

    /// The expansion `M♯`, interpreting `c_m` as `m` for every element.
    pub fn expansion_sharp(&self) -> Result<Structure> {
        let mut out = self.clone();
        for (i, label) in self.domain.iter().enumerate() {
            let name = crate::syntax::domain_constant_name(label);
            if out.functions.contains_key(&name) || out.predicates.contains_key(&name) {
                return Err(Error::NameClash(name));
            }
            out.functions.insert(name, Table::new(0, vec![i]));
        }
        Ok(out)
    }
}

impl Interpretation for Structure {
    fn chain(&self) -> &FiniteChain {
        &self.chain
    }

    fn size(&self) -> usize {
        self.domain.len()
    }

    fn predicate(&self, name: &str) -> Option<&Table> {
        self.predicates.get(name)
    }

    fn function(&self, name: &str) -> Option<&Table> {
        self.functions.get(name)
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain: {{{}}}", self.domain.join(", "))?;
        let n = self.domain.len();
        let all: Vec<usize> = (0..n).collect();
        for (name, t) in &self.predicates {
            let cells: Vec<String> = crate::algebra::tuples(&all, t.arity)
                .map(|args| {
                    let labels: Vec<&str> = args.iter().map(|&a| self.label(a)).collect();
                    format!("{}={}", labels.join(","), self.chain.label(t.get(n, &args)))
                })
                .collect();
            writeln!(f, "{name}: {}", cells.join(" "))?;
        }
        for (name, t) in &self.functions {
            let cells: Vec<String> = crate::algebra::tuples(&all, t.arity)
                .map(|args| {
                    let labels: Vec<&str> = args.iter().map(|&a| self.label(a)).collect();
                    format!("{}->{}", labels.join(","), self.label(t.get(n, &args)))
                })
                .collect();
            writeln!(f, "{name}: {}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// A structure seen through extra constant bindings, without copying it.
#[derive(Clone, Debug)]
pub struct Expanded<'a, I: ?Sized> {
    pub base: &'a I,
    pub constants: Vec<(String, usize)>,
}

impl<'a, I: Interpretation + ?Sized> Expanded<'a, I> {
    pub fn new(base: &'a I, constants: Vec<(String, usize)>) -> Self {
        Expanded { base, constants }
    }
}

impl<I: Interpretation + ?Sized> Interpretation for Expanded<'_, I> {
    fn chain(&self) -> &FiniteChain {
        self.base.chain()
    }

    fn size(&self) -> usize {
        self.base.size()
    }

    fn predicate(&self, name: &str) -> Option<&Table> {
        self.base.predicate(name)
    }

    fn function(&self, name: &str) -> Option<&Table> {
        self.base.function(name)
    }

    fn extra_constant(&self, name: &str) -> Option<usize> {
        self.constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
            .or_else(|| self.base.extra_constant(name))
    }
}

/// Values of object variables, as domain indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<String, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// `v[x ↦ d]`.
    pub fn set(mut self, var: &str, d: usize) -> Self {
        self.values.insert(var.to_string(), d);
        self
    }

    pub fn get(&self, var: &str) -> Option<usize> {
        self.values.get(var).copied()
    }

    /// Builds an assignment from `(variable, element label)` pairs.
    pub fn from_labels(s: &Structure, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut a = Assignment::new();
        for (var, label) in pairs {
            let d = s
                .index_of(label)
                .ok_or_else(|| Error::UnknownSymbol(label.to_string()))?;
            a = a.set(var, d);
        }
        Ok(a)
    }
}

#[derive(Clone, Debug)]
enum CTerm<'a> {
    Slot(usize),
    Elem(usize),
    App(&'a Table, Vec<CTerm<'a>>),
}

#[derive(Clone, Debug)]
enum CNode<'a> {
    Const(Truth),
    /// Predicate whose arguments are all variables.
    PredSlots(&'a Table, Vec<usize>),
    Pred(&'a Table, Vec<CTerm<'a>>),
    Eq(CTerm<'a>, CTerm<'a>),
    Not(Box<CNode<'a>>),
    Bin(Connective, Box<CNode<'a>>, Box<CNode<'a>>),
    Quant(Quantifier, usize, Box<CNode<'a>>),
}

/// A formula resolved against one interpretation, ready for repeated evaluation.
///
/// Free variables occupy the first slots of the environment in the order
/// given at compile time; bound variables get slots after them.
#[derive(Clone, Debug)]
pub struct Compiled<'a> {
    root: CNode<'a>,
    chain: &'a FiniteChain,
    n: usize,
    slots: usize,
}

struct Compiler<'a, I: ?Sized> {
    interp: &'a I,
    scope: Vec<(String, usize)>,
    slots: usize,
}

impl<'a, I: Interpretation + ?Sized> Compiler<'a, I> {
    fn lookup_var(&self, v: &str) -> Option<usize> {
        self.scope.iter().rev().find(|(n, _)| n == v).map(|&(_, s)| s)
    }

    fn term(&self, t: &Term) -> Result<CTerm<'a>> {
        match t {
            Term::Var(v) => self
                .lookup_var(v)
                .map(CTerm::Slot)
                .ok_or_else(|| Error::UnassignedVariable(v.clone())),
            Term::App(f, args) => {
                if args.is_empty() {
                    if let Some(d) = self.interp.extra_constant(f) {
                        return Ok(CTerm::Elem(d));
                    }
                }
                let table = self
                    .interp
                    .function(f)
                    .ok_or_else(|| Error::UnknownSymbol(f.clone()))?;
                if table.arity != args.len() {
                    return Err(Error::ArityMismatch {
                        name: f.clone(),
                        expected: table.arity,
                        found: args.len(),
                    });
                }
                if args.is_empty() {
                    return Ok(CTerm::Elem(table.values[0]));
                }
                let args = args.iter().map(|a| self.term(a)).collect::<Result<_>>()?;
                Ok(CTerm::App(table, args))
            }
        }
    }

    fn node(&mut self, phi: &Formula) -> Result<CNode<'a>> {
        let chain = self.interp.chain();
        Ok(match phi {
            Formula::Top => CNode::Const(chain.top()),
            Formula::Bottom => CNode::Const(chain.bottom()),
            Formula::Truth(l) => CNode::Const(chain.index_of(l).ok_or_else(|| {
                Error::ChainMismatch(format!("truth constant `{l}` is not an element of {chain}"))
            })?),
            Formula::Atom(p, args) => {
                let table = self
                    .interp
                    .predicate(p)
                    .ok_or_else(|| Error::UnknownSymbol(p.clone()))?;
                if table.arity != args.len() {
                    return Err(Error::ArityMismatch {
                        name: p.clone(),
                        expected: table.arity,
                        found: args.len(),
                    });
                }
                let cargs: Vec<CTerm<'a>> =
                    args.iter().map(|a| self.term(a)).collect::<Result<_>>()?;
                if cargs.iter().all(|a| matches!(a, CTerm::Slot(_))) {
                    let slots = cargs
                        .iter()
                        .map(|a| match a {
                            CTerm::Slot(s) => *s,
                            _ => unreachable!(),
                        })
                        .collect();
                    CNode::PredSlots(table, slots)
                } else {
                    CNode::Pred(table, cargs)
                }
            }
            Formula::Eq(a, b) => CNode::Eq(self.term(a)?, self.term(b)?),
            Formula::Not(a) => CNode::Not(Box::new(self.node(a)?)),
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let slot = self.slots;
                self.slots += 1;
                self.scope.push((v.clone(), slot));
                let inner = self.node(body);
                self.scope.pop();
                let q = if matches!(phi, Formula::Forall(..)) {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                CNode::Quant(q, slot, Box::new(inner?))
            }
            _ => {
                let (c, a, b) = phi.as_binary().expect("binary node");
                CNode::Bin(c, Box::new(self.node(a)?), Box::new(self.node(b)?))
            }
        })
    }
}

/// Resolves `phi` against `interp`. Every free variable of `phi` must appear
/// in `free`; its position there is its environment slot.
pub fn compile<'a, I: Interpretation + ?Sized>(
    phi: &Formula,
    interp: &'a I,
    free: &[&str],
) -> Result<Compiled<'a>> {
    let mut c = Compiler {
        interp,
        scope: free
            .iter()
            .enumerate()
            .map(|(i, v)| (v.to_string(), i))
            .collect(),
        slots: free.len(),
    };
    let root = c.node(phi)?;
    Ok(Compiled {
        root,
        chain: interp.chain(),
        n: interp.size(),
        slots: c.slots,
    })
}

impl Compiled<'_> {
    /// Size of the environment `eval` expects.
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Evaluates with the free variables taken from the front of `env`.
    pub fn eval(&self, env: &mut [usize]) -> Truth {
        self.node(&self.root, env)
    }

    /// Convenience wrapper that allocates the environment.
    pub fn eval_at(&self, free_values: &[usize]) -> Truth {
        let mut env = vec![0; self.slots.max(free_values.len())];
        env[..free_values.len()].copy_from_slice(free_values);
        self.eval(&mut env)
    }

    fn term(&self, t: &CTerm<'_>, env: &[usize]) -> usize {
        match t {
            CTerm::Slot(s) => env[*s],
            CTerm::Elem(d) => *d,
            CTerm::App(table, args) => {
                let idx = args
                    .iter()
                    .fold(0, |acc, a| acc * self.n + self.term(a, env));
                table.values[idx]
            }
        }
    }

    fn node(&self, node: &CNode<'_>, env: &mut [usize]) -> Truth {
        let chain = self.chain;
        match node {
            CNode::Const(v) => *v,
            CNode::PredSlots(table, slots) => {
                let idx = slots.iter().fold(0, |acc, &s| acc * self.n + env[s]);
                table.values[idx]
            }
            CNode::Pred(table, args) => {
                let idx = args
                    .iter()
                    .fold(0, |acc, a| acc * self.n + self.term(a, env));
                table.values[idx]
            }
            CNode::Eq(a, b) => {
                if self.term(a, env) == self.term(b, env) {
                    chain.top()
                } else {
                    chain.bottom()
                }
            }
            CNode::Not(a) => chain.neg(self.node(a, env)),
            CNode::Bin(c, a, b) => {
                let x = self.node(a, env);
                // short circuits that do not change the value
                match c {
                    Connective::Meet | Connective::Strong if x == 0 => return 0,
                    Connective::Join if x == chain.top() => return x,
                    Connective::Implies if x == 0 => return chain.top(),
                    _ => {}
                }
                let y = self.node(b, env);
                c.apply(chain, x, y)
            }
            CNode::Quant(q, slot, body) => {
                let saved = env[*slot];
                let mut acc = match q {
                    Quantifier::Forall => chain.top(),
                    Quantifier::Exists => chain.bottom(),
                };
                for d in 0..self.n {
                    env[*slot] = d;
                    let v = self.node(body, env);
                    match q {
                        Quantifier::Forall => {
                            acc = acc.min(v);
                            if acc == 0 {
                                break;
                            }
                        }
                        Quantifier::Exists => {
                            acc = acc.max(v);
                            if acc == chain.top() {
                                break;
                            }
                        }
                    }
                }
                env[*slot] = saved;
                acc
            }
        }
    }
}

/// Value of a term as a domain index.
pub fn eval_term<I: Interpretation + ?Sized>(t: &Term, s: &I, v: &Assignment) -> Result<usize> {
    let mut vars = BTreeSet::new();
    t.free_variables_into(&mut vars);
    let names: Vec<&str> = vars.iter().map(String::as_str).collect();
    let env: Vec<usize> = names
        .iter()
        .map(|n| v.get(n).ok_or_else(|| Error::UnassignedVariable(n.to_string())))
        .collect::<Result<_>>()?;
    let c = Compiler {
        interp: s,
        scope: names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i))
            .collect(),
        slots: names.len(),
    };
    let ct = c.term(t)?;
    let compiled = Compiled {
        root: CNode::Const(0),
        chain: s.chain(),
        n: s.size(),
        slots: names.len(),
    };
    Ok(compiled.term(&ct, &env))
}

/// Truth value of `phi` under `v`, as a chain index.
pub fn eval_formula<I: Interpretation + ?Sized>(
    phi: &Formula,
    s: &I,
    v: &Assignment,
) -> Result<Truth> {
    let free = phi.free_variables();
    let names: Vec<&str> = free.iter().map(String::as_str).collect();
    let env: Vec<usize> = names
        .iter()
        .map(|n| v.get(n).ok_or_else(|| Error::UnassignedVariable(n.to_string())))
        .collect::<Result<_>>()?;
    if let Some(&bad) = env.iter().find(|&&d| d >= s.size()) {
        return Err(Error::Precondition(format!(
            "assigned element {bad} is outside the domain"
        )));
    }
    let c = compile(phi, s, &names)?;
    Ok(c.eval_at(&env))
}

/// Value of a sentence.
pub fn eval_sentence<I: Interpretation + ?Sized>(phi: &Formula, s: &I) -> Result<Truth> {
    let free = phi.free_variables();
    if !free.is_empty() {
        return Err(Error::OpenFormula(free.into_iter().collect()));
    }
    Ok(compile(phi, s, &[])?.eval_at(&[]))
}

/// Whether the tuple `d` (matched to the free variables in name order)
/// gives `phi` the top value.
pub fn satisfies<I: Interpretation + ?Sized>(phi: &Formula, s: &I, d: &[usize]) -> Result<bool> {
    let free = phi.free_variables();
    if free.len() != d.len() {
        return Err(Error::Precondition(format!(
            "formula has {} free variable(s) but {} element(s) were given",
            free.len(),
            d.len()
        )));
    }
    let mut v = Assignment::new();
    for (name, &e) in free.iter().zip(d) {
        v = v.set(name, e);
    }
    Ok(eval_formula(phi, s, &v)? == s.chain().top())
}

/// The index of the first sentence of `theory` not satisfied in `s`, if any.
pub fn is_model<I: Interpretation + ?Sized>(theory: &[Formula], s: &I) -> Result<Option<usize>> {
    for phi in theory {
        let free = phi.free_variables();
        if !free.is_empty() {
            return Err(Error::OpenFormula(free.into_iter().collect()));
        }
    }
    for (i, phi) in theory.iter().enumerate() {
        if eval_sentence(phi, s)? != s.chain().top() {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Number of structures of size `n` over `sig` and a chain with `k` elements.
pub fn count_structures(sig: &Signature, k: usize, n: usize) -> u128 {
    let mut total: u128 = 1;
    for (_, arity) in sig.base_predicates() {
        let cells = (n as u128).saturating_pow(arity as u32);
        total = total.saturating_mul((k as u128).saturating_pow(cells.min(u32::MAX as u128) as u32));
    }
    for (_, sym) in sig.functions() {
        let cells = (n as u128).saturating_pow(sym.arity as u32);
        total = total.saturating_mul((n as u128).saturating_pow(cells.min(u32::MAX as u128) as u32));
    }
    total
}

/// Visits every structure on `d0..d(n-1)` over `sig` in canonical order.
///
/// Cells are ordered predicates first (by name, row-major), then functions;
/// the first cell is the most significant digit. The visitor returns `false`
/// to stop early.
pub fn for_each_structure(
    chain: &Arc<FiniteChain>,
    sig: &Signature,
    n: usize,
    budget: u64,
    mut visit: impl FnMut(&Structure) -> Result<bool>,
) -> Result<()> {
    check_budget(count_structures(sig, chain.len(), n), budget)?;
    let mut s = Structure::with_size(chain.clone(), n)?;
    // (is_predicate, name, cells, radix)
    let mut slots: Vec<(bool, String, usize)> = Vec::new();
    for (name, arity) in sig.base_predicates() {
        s.set_predicate(name, Table::constant(arity, n, 0))?;
        slots.push((true, name.to_string(), n.pow(arity as u32)));
    }
    for (name, sym) in sig.functions() {
        s.set_function(name, Table::constant(sym.arity, n, 0))?;
        slots.push((false, name.to_string(), n.pow(sym.arity as u32)));
    }
    let k = chain.len();
    loop {
        if !visit(&s)? {
            return Ok(());
        }
        // odometer from the last cell backwards
        let mut advanced = false;
        'outer: for (is_pred, name, cells) in slots.iter().rev() {
            let (table, radix) = if *is_pred {
                (s.predicates.get_mut(name).unwrap(), k)
            } else {
                (s.functions.get_mut(name).unwrap(), n)
            };
            for c in (0..*cells).rev() {
                if table.values[c] + 1 < radix {
                    table.values[c] += 1;
                    advanced = true;
                    break 'outer;
                }
                table.values[c] = 0;
            }
        }
        if !advanced {
            return Ok(());
        }
    }
}

/// Every structure of size `n`, in canonical order.
pub fn enumerate_structures(
    chain: &Arc<FiniteChain>,
    sig: &Signature,
    n: usize,
    budget: u64,
) -> Result<Vec<Structure>> {
    let mut out = Vec::new();
    for_each_structure(chain, sig, n, budget, |s| {
        out.push(s.clone());
        Ok(true)
    })?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Consequence {
    /// No countermodel up to the size bound; `checked` structures were visited.
    Holds { checked: u64 },
    Countermodel(Structure),
}

/// Searches all models of `theory` with domain size `1..=max_domain`, in
/// canonical order, for one where `phi` does not take the top value.
pub fn bounded_consequence(
    theory: &[Formula],
    phi: &Formula,
    chain: &Arc<FiniteChain>,
    sig: &Signature,
    max_domain: usize,
    budget: u64,
) -> Result<Consequence> {
    if max_domain == 0 {
        return Err(Error::Precondition("max_domain must be at least 1".into()));
    }
    for f in theory.iter().chain(std::iter::once(phi)) {
        let free = f.free_variables();
        if !free.is_empty() {
            return Err(Error::OpenFormula(free.into_iter().collect()));
        }
    }
    let total: u128 = (1..=max_domain)
        .map(|n| count_structures(sig, chain.len(), n))
        .fold(0u128, |a, b| a.saturating_add(b));
    check_budget(total, budget)?;
    let mut checked = 0u64;
    let mut found = None;
    for n in 1..=max_domain {
        for_each_structure(chain, sig, n, budget, |s| {
            checked += 1;
            let top = chain.top();
            for t in theory {
                if compile(t, s, &[])?.eval_at(&[]) != top {
                    return Ok(true);
                }
            }
            if compile(phi, s, &[])?.eval_at(&[]) != top {
                found = Some(s.clone());
                return Ok(false);
            }
            Ok(true)
        })?;
        if let Some(s) = found {
            return Ok(Consequence::Countermodel(s));
        }
    }
    Ok(Consequence::Holds { checked })
}

/// How two structures are compared on a sentence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Equal iff both or neither give the sentence the top value.
    #[default]
    Satisfaction,
    /// Equal iff the values coincide.
    Values,
}

/// A sentence on which two structures differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separator {
    pub sentence: Formula,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub separator: Option<Separator>,
    pub comparison: Comparison,
    pub bounds: Bounds,
    /// Distinct sentence-value classes examined.
    pub classes: usize,
}

/// Compares two structures on every generated sentence within `bounds`.
///
/// Sentences are built over the base symbols of `sig`, plus the inner truth
/// constants when `bounds.truth_constants` is set. The first separating
/// sentence in canonical order is reported.
pub fn equiv_up_to_depth(
    left: &Structure,
    right: &Structure,
    sig: &Signature,
    bounds: &Bounds,
    comparison: Comparison,
) -> Result<EquivalenceReport> {
    if left.chain() != right.chain() {
        return Err(Error::ChainMismatch(
            "elementary equivalence needs a common chain".into(),
        ));
    }
    let top = left.chain().top() as u8;
    let probes = vec![Probe::new(left), Probe::new(right)];
    let cfg = EngineConfig::from_bounds(bounds, true, true);
    let mut engine = ClosureEngine::new(probes, &sig.base(), &[], cfg)?;
    let hit = engine.run(|e, c| {
        if e.mask(c) != 0 {
            return false;
        }
        let (a, b) = (e.table(c, 0)[0], e.table(c, 1)[0]);
        match comparison {
            Comparison::Satisfaction => (a == top) != (b == top),
            Comparison::Values => a != b,
        }
    })?;
    let separator = hit.map(|c| Separator {
        sentence: engine.formula(c),
        left: left.chain().label(engine.table(c, 0)[0] as usize).to_string(),
        right: right.chain().label(engine.table(c, 1)[0] as usize).to_string(),
    });
    Ok(EquivalenceReport {
        equivalent: separator.is_none(),
        separator,
        comparison,
        bounds: *bounds,
        classes: engine.class_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

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
    fn counterexample_pair_depth_two() {
        let m = constant_p(2, 3);
        let n = constant_p(1, 3);
        let sig = m.signature();
        let base = equiv_up_to_depth(&m, &n, &sig, &Bounds::depth(2), Comparison::Satisfaction)
            .unwrap();
        assert!(base.equivalent, "{:?}", base.separator);
        let same = equiv_up_to_depth(&m, &m, &sig, &Bounds::depth(2), Comparison::Values).unwrap();
        assert!(same.equivalent);
        let bounds = Bounds::depth(2).with_truth_constants(true);
        let r = equiv_up_to_depth(&m, &n, &sig, &bounds, Comparison::Satisfaction).unwrap();
        let sep = r.separator.expect("truth constants separate");
        let sat = |s: &Structure| eval_sentence(&sep.sentence, s).unwrap() == 3;
        assert_ne!(sat(&m), sat(&n));
        // value comparison separates already with the base signature
        let v = equiv_up_to_depth(&m, &n, &sig, &Bounds::depth(2), Comparison::Values).unwrap();
        assert_eq!(v.separator.unwrap().sentence.to_string(), "forall x1. P(x1)");
    }

    #[test]
    fn eval_term_examples() {
        let s = Structure::new(godel4(), vec!["a", "b"])
            .unwrap()
            .with_function("f", Table::new(1, vec![1, 0]))
            .unwrap();
        let v = Assignment::new().set("x", 0);
        assert_eq!(eval_term(&Term::var("x"), &s, &v).unwrap(), 0);
        let ffa = Term::App("f".into(), vec![Term::App("f".into(), vec![Term::var("x")])]);
        assert_eq!(eval_term(&ffa, &s, &v).unwrap(), 0);
        let sharp = s.expansion_sharp().unwrap();
        assert_eq!(
            eval_term(&Term::constant("c_b"), &sharp, &Assignment::new()).unwrap(),
            1
        );
        assert!(matches!(
            eval_term(&Term::var("y"), &s, &v),
            Err(Error::UnassignedVariable(_))
        ));
    }

    #[test]
    fn forall_of_constant_predicate() {
        let m = constant_p(2, 3);
        let sig = m.signature();
        let phi = parse_formula("forall x. P(x)", &sig).unwrap();
        assert_eq!(eval_sentence(&phi, &m).unwrap(), 2);
        assert_eq!(eval_sentence(&Formula::Top, &m).unwrap(), 3);
    }

    #[test]
    fn lukasiewicz_strong_conjunction() {
        let l = Arc::new(FiniteChain::lukasiewicz(3));
        let s = Structure::new(l, vec!["a", "b"])
            .unwrap()
            .with_predicate("P", Table::new(1, vec![1, 2]))
            .unwrap();
        let phi = parse_formula("exists x. P(x) & P(x)", &s.signature()).unwrap();
        assert_eq!(eval_sentence(&phi, &s).unwrap(), 2);
        let at_a = parse_formula("P(x) & P(x)", &s.signature()).unwrap();
        assert_eq!(eval_formula(&at_a, &s, &Assignment::new().set("x", 0)).unwrap(), 0);
    }

    #[test]
    fn irreflexivity_fails_at_half() {
        let s = Structure::with_size(godel4(), 1)
            .unwrap()
            .with_predicate("R", Table::new(2, vec![1]))
            .unwrap();
        let phi = parse_formula("forall x. (R(x,x) -> val(0))", &s.signature()).unwrap();
        assert!(!satisfies(&phi, &s, &[]).unwrap());
        assert!(satisfies(&Formula::Top, &s, &[]).unwrap());
    }

    #[test]
    fn symmetry_failure_is_reported() {
        let s = Structure::with_size(godel4(), 2)
            .unwrap()
            .with_predicate("R", Table::new(2, vec![0, 2, 1, 0]))
            .unwrap();
        let sym = parse_formula("forall x y. (R(x,y) -> R(y,x))", &s.signature()).unwrap();
        assert_eq!(is_model(&[Formula::Top, sym], &s).unwrap(), Some(1));
        assert_eq!(is_model(&[], &s).unwrap(), None);
        let open = Formula::atom("R", &["x", "x"]);
        assert!(matches!(is_model(&[open], &s), Err(Error::OpenFormula(_))));
    }

    #[test]
    fn truth_constant_of_other_chain_is_rejected() {
        let s = Structure::with_size(Arc::new(FiniteChain::boolean()), 1).unwrap();
        let phi = Formula::Truth("3/4".into());
        assert!(matches!(eval_sentence(&phi, &s), Err(Error::ChainMismatch(_))));
    }

    #[test]
    fn structure_validation() {
        let s = Structure::with_size(godel4(), 2).unwrap();
        assert!(s.clone().with_predicate("P", Table::new(1, vec![0])).is_err());
        assert!(s.clone().with_predicate("P", Table::new(1, vec![0, 4])).is_err());
        assert!(s.clone().with_function("f", Table::new(1, vec![0, 2])).is_err());
        assert!(Structure::new(godel4(), Vec::<String>::new()).is_err());
        assert!(Structure::new(godel4(), vec!["a", "a"]).is_err());
    }

    #[test]
    fn enumeration_counts_and_order() {
        let b = Arc::new(FiniteChain::boolean());
        let sig = Signature::new().with_predicate("R", 2).unwrap();
        let all = enumerate_structures(&b, &sig, 2, 1_000).unwrap();
        assert_eq!(all.len(), 16);
        assert_eq!(all[0].pred_value("R", &[0, 0]), Some(0));
        assert_eq!(all[1].pred_value("R", &[1, 1]), Some(1));
        assert!(matches!(
            enumerate_structures(&b, &sig, 3, 100),
            Err(Error::Budget { .. })
        ));
        let fsig = Signature::new().with_function("c", 0).unwrap();
        assert_eq!(enumerate_structures(&b, &fsig, 3, 100).unwrap().len(), 3);
    }

    #[test]
    fn symmetry_does_not_entail_irreflexivity() {
        let sig = Signature::new().with_predicate("R", 2).unwrap();
        let sym = parse_formula("forall x y. (R(x,y) -> R(y,x))", &sig).unwrap();
        let irr = parse_formula("forall x. (R(x,x) -> val(0))", &sig).unwrap();
        let b = Arc::new(FiniteChain::boolean());
        match bounded_consequence(std::slice::from_ref(&sym), &irr, &b, &sig, 1, 1_000).unwrap() {
            Consequence::Countermodel(m) => {
                assert_eq!(m.size(), 1);
                assert_eq!(m.pred_value("R", &[0, 0]), Some(1));
            }
            other => panic!("expected a countermodel, got {other:?}"),
        }
        let holds = bounded_consequence(std::slice::from_ref(&sym), &sym, &b, &sig, 3, 1_000).unwrap();
        assert!(matches!(holds, Consequence::Holds { .. }));
    }
}
