//! Bounded formula generation.
//!
//! Two generators share one canonical order:
//!
//! * atoms: base predicates by name with argument tuples in lexicographic
//!   order over the term list, then identities `s ~ t` for term pairs
//!   `s <= t`, then `val(0)`, the inner truth constants (when enabled) and
//!   `val(1)`;
//! * level `L` adds every connective application (`&`, `/\`, `\/`, `<->`,
//!   `->`, in that order; unordered pairs for the commutative ones) with at
//!   least one argument of depth `L - 1`, followed by `forall` then `exists`
//!   over each free variable of the depth `L - 1` formulas.
//!
//! [`ClosureEngine`] walks that order but keeps only the first formula of
//! each class of formulas with identical free variables and identical value
//! tables on a fixed set of probe structures. Any check that depends only on
//! those values gets the same verdict, and the same first witness, as it
//! would over the full syntactic enumeration, at a fraction of the cost.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use smallvec::SmallVec;

use crate::algebra::FiniteChain;
use crate::error::{check_budget, Error, Result};
use crate::semantics::{compile, Interpretation};
use crate::syntax::{Connective, Formula, PrenexClass, Quantifier, Signature, Term};

pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Limits for formula generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Bounds {
    /// Maximum nesting of connectives and quantifiers.
    pub depth: usize,
    /// Number of object variables `x1..xN`.
    pub vars: usize,
    /// Whether inner truth constants are atoms.
    pub truth_constants: bool,
    /// Maximum number of candidates examined before giving up.
    pub budget: u64,
}

impl Bounds {
    /// `depth` with as many variables as the depth (at least one).
    pub fn depth(depth: usize) -> Self {
        Bounds {
            depth,
            vars: depth.max(1),
            truth_constants: false,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_vars(mut self, vars: usize) -> Self {
        self.vars = vars;
        self
    }

    pub fn with_truth_constants(mut self, on: bool) -> Self {
        self.truth_constants = on;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

/// The name of the `i`-th generated variable (0-based), `x1, x2, ...`.
pub fn var_name(i: usize) -> String {
    format!("x{}", i + 1)
}

/// Variables, then parameters, then the constants of `sig` not already listed.
pub fn term_universe(vars: usize, params: &[String], sig: &Signature) -> Vec<Term> {
    let mut out: Vec<Term> = (0..vars).map(|i| Term::Var(var_name(i))).collect();
    out.extend(params.iter().map(|p| Term::constant(p)));
    for c in sig.constants() {
        if !params.iter().any(|p| p == c) {
            out.push(Term::constant(c));
        }
    }
    out
}

/// Atomic formulas over `terms` in canonical order.
pub fn atoms(sig: &Signature, terms: &[Term], truth: Option<&FiniteChain>) -> Result<Vec<Formula>> {
    if !sig.is_relational_with_constants() {
        return Err(Error::UnsupportedSignature(
            "formula generation needs a relational signature with constants only".into(),
        ));
    }
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
    Ok(out)
}

fn var_mask(phi: &Formula, vars: usize) -> u32 {
    let free = phi.free_variables();
    (0..vars)
        .filter(|&i| free.contains(&var_name(i)))
        .fold(0, |m, i| m | (1 << i))
}

/// One structure the engine evaluates on, with values for the parameters.
pub struct Probe<'a> {
    pub interp: &'a dyn Interpretation,
    pub params: Vec<usize>,
}

impl<'a> Probe<'a> {
    pub fn new(interp: &'a dyn Interpretation) -> Self {
        Probe {
            interp,
            params: Vec::new(),
        }
    }

    pub fn with_params(interp: &'a dyn Interpretation, params: Vec<usize>) -> Self {
        Probe { interp, params }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub depth: usize,
    pub vars: usize,
    pub truth_constants: bool,
    pub quantifiers: bool,
    /// Only sentences matter at the last level.
    pub sentences_only: bool,
    pub budget: u64,
}

impl EngineConfig {
    pub fn from_bounds(b: &Bounds, quantifiers: bool, sentences_only: bool) -> Self {
        EngineConfig {
            depth: b.depth,
            vars: b.vars,
            truth_constants: b.truth_constants,
            quantifiers,
            sentences_only,
            budget: b.budget,
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Atom(Formula),
    Bin(Connective, usize, usize),
    Quant(Quantifier, usize, usize),
}

#[derive(Clone, Debug)]
struct Class {
    node: Node,
    mask: u32,
    depth: usize,
    table: Box<[u8]>,
}

/// Level-by-level closure over value tables; see the module docs.
pub struct ClosureEngine<'a> {
    probes: Vec<Probe<'a>>,
    param_names: Vec<String>,
    config: EngineConfig,
    atoms: Vec<Formula>,
    /// `(offset, n)` of each probe's segment in a class table.
    segments: Vec<(usize, usize)>,
    width: usize,
    /// Connective tables per probe: `ops[p][c][x * k + y]`.
    ops: Vec<[Vec<u8>; 5]>,
    ks: Vec<usize>,
    tops: Vec<u8>,
    classes: Vec<Class>,
    index: HashMap<u64, SmallVec<[u32; 2]>>,
    candidates: u64,
}

fn key_hash(mask: u32, table: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    mask.hash(&mut h);
    table.hash(&mut h);
    h.finish()
}

/// Applies a quantifier over variable `var` to a table over `n^vars`
/// assignments; the result no longer depends on `var`.
pub fn quantify_table(
    table: &[u8],
    n: usize,
    vars: usize,
    var: usize,
    q: Quantifier,
    top: u8,
    out: &mut [u8],
) {
    let stride = n.pow((vars - var - 1) as u32);
    let block = stride * n;
    for hi in (0..table.len()).step_by(block) {
        for lo in 0..stride {
            let base = hi + lo;
            let mut acc = match q {
                Quantifier::Forall => top,
                Quantifier::Exists => 0,
            };
            for d in 0..n {
                let v = table[base + d * stride];
                acc = match q {
                    Quantifier::Forall => acc.min(v),
                    Quantifier::Exists => acc.max(v),
                };
            }
            for d in 0..n {
                out[base + d * stride] = acc;
            }
        }
    }
}

impl<'a> ClosureEngine<'a> {
    /// Sets up the engine; `params` name the parameter constants, whose
    /// values each probe supplies.
    pub fn new(
        probes: Vec<Probe<'a>>,
        sig: &Signature,
        params: &[String],
        config: EngineConfig,
    ) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::Precondition("the engine needs at least one probe".into()));
        }
        if config.vars > 16 {
            return Err(Error::Precondition("at most 16 variables are supported".into()));
        }
        for p in &probes {
            if p.params.len() != params.len() {
                return Err(Error::Precondition(format!(
                    "probe supplies {} parameter value(s), expected {}",
                    p.params.len(),
                    params.len()
                )));
            }
            if p.interp.chain().len() > 255 {
                return Err(Error::Precondition("chains above 255 elements".into()));
            }
        }
        let truth = config.truth_constants.then(|| probes[0].interp.chain());
        let terms = term_universe(config.vars, params, sig);
        let atoms = atoms(sig, &terms, truth)?;
        let mut segments = Vec::new();
        let mut width = 0usize;
        for p in &probes {
            let n = p.interp.size();
            let len = (n as u128).pow(config.vars as u32);
            check_budget(len, 1 << 24)?;
            segments.push((width, n));
            width += len as usize;
        }
        let ops = probes
            .iter()
            .map(|p| {
                let c = p.interp.chain();
                let k = c.len();
                Connective::ALL.map(|conn| {
                    let mut t = vec![0u8; k * k];
                    for x in 0..k {
                        for y in 0..k {
                            t[x * k + y] = conn.apply(c, x, y) as u8;
                        }
                    }
                    t
                })
            })
            .collect();
        let ks = probes.iter().map(|p| p.interp.chain().len()).collect();
        let tops = probes.iter().map(|p| p.interp.chain().top() as u8).collect();
        Ok(ClosureEngine {
            probes,
            param_names: params.to_vec(),
            config,
            atoms,
            segments,
            width,
            ops,
            ks,
            tops,
            classes: Vec::new(),
            index: HashMap::new(),
            candidates: 0,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Candidates examined so far, including duplicates.
    pub fn candidates(&self) -> u64 {
        self.candidates
    }

    /// Domain size of a probe.
    pub fn probe_size(&self, p: usize) -> usize {
        self.segments[p].1
    }

    /// Value table of a class on one probe, indexed by assignments to all
    /// variables (`x1` most significant).
    pub fn table(&self, class: usize, probe: usize) -> &[u8] {
        let (off, n) = self.segments[probe];
        &self.classes[class].table[off..off + n.pow(self.config.vars as u32)]
    }

    /// Bitmask of the free variables of a class.
    pub fn mask(&self, class: usize) -> u32 {
        self.classes[class].mask
    }

    pub fn depth(&self, class: usize) -> usize {
        self.classes[class].depth
    }

    /// The first generated formula of a class.
    pub fn formula(&self, class: usize) -> Formula {
        match &self.classes[class].node {
            Node::Atom(f) => f.clone(),
            Node::Bin(c, a, b) => c.build(self.formula(*a), self.formula(*b)),
            Node::Quant(q, v, a) => Formula::quantified(*q, &var_name(*v), self.formula(*a)),
        }
    }

    fn atom_table(&self, phi: &Formula) -> Result<Box<[u8]>> {
        let vars = self.config.vars;
        let mut table = vec![0u8; self.width];
        let names: Vec<String> = (0..vars).map(var_name).collect();
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        for (p, probe) in self.probes.iter().enumerate() {
            let (off, n) = self.segments[p];
            let bindings: Vec<(String, usize)> = self
                .param_names
                .iter()
                .cloned()
                .zip(probe.params.iter().copied())
                .collect();
            let view = crate::semantics::Expanded::new(probe.interp, bindings);
            let c = compile(phi, &view, &name_refs)?;
            let mut env = vec![0usize; c.slots().max(vars)];
            for idx in 0..n.pow(vars as u32) {
                let mut rest = idx;
                for v in (0..vars).rev() {
                    env[v] = rest % n;
                    rest /= n;
                }
                table[off + idx] = c.eval(&mut env) as u8;
            }
        }
        Ok(table.into_boxed_slice())
    }

    /// Registers a candidate; returns its class index if it is new.
    fn insert(&mut self, node: Node, mask: u32, depth: usize, table: Box<[u8]>) -> Option<usize> {
        let h = key_hash(mask, &table);
        let bucket = self.index.entry(h).or_default();
        for &c in bucket.iter() {
            let cl = &self.classes[c as usize];
            if cl.mask == mask && cl.table == table {
                return None;
            }
        }
        let id = self.classes.len();
        bucket.push(id as u32);
        self.classes.push(Class {
            node,
            mask,
            depth,
            table,
        });
        Some(id)
    }

    fn binary_table(&self, c: Connective, a: usize, b: usize, out: &mut Vec<u8>) {
        out.clear();
        let (ta, tb) = (&self.classes[a].table, &self.classes[b].table);
        let ci = Connective::ALL.iter().position(|&x| x == c).unwrap();
        for (p, &(off, n)) in self.segments.iter().enumerate() {
            let len = n.pow(self.config.vars as u32);
            let op = &self.ops[p][ci];
            let k = self.ks[p];
            out.extend(
                ta[off..off + len]
                    .iter()
                    .zip(&tb[off..off + len])
                    .map(|(&x, &y)| op[x as usize * k + y as usize]),
            );
        }
    }

    fn quant_table(&self, q: Quantifier, var: usize, a: usize) -> Box<[u8]> {
        let ta = &self.classes[a].table;
        let mut out = vec![0u8; self.width];
        for (p, &(off, n)) in self.segments.iter().enumerate() {
            let len = n.pow(self.config.vars as u32);
            quantify_table(
                &ta[off..off + len],
                n,
                self.config.vars,
                var,
                q,
                self.tops[p],
                &mut out[off..off + len],
            );
        }
        out.into_boxed_slice()
    }

    /// Number of candidates the next level will examine.
    fn level_cost(&self, start: usize, end: usize) -> u128 {
        let before = start as u128;
        let fresh = (end - start) as u128;
        let total = end as u128;
        // unordered pairs with at least one fresh member, and ordered ones
        let unordered = fresh * (fresh + 1) / 2 + fresh * before;
        let ordered = total * total - before * before;
        let mut cost = 4 * unordered + ordered;
        if self.config.quantifiers {
            let q: u128 = (start..end)
                .map(|c| 2 * self.classes[c].mask.count_ones() as u128)
                .sum();
            cost += q;
        }
        cost
    }

    /// Runs the closure, calling `check` on every new class in canonical
    /// order; stops at the first class for which it returns `true`.
    pub fn run(
        &mut self,
        mut check: impl FnMut(&ClosureEngine<'a>, usize) -> bool,
    ) -> Result<Option<usize>> {
        self.classes.clear();
        self.index.clear();
        self.candidates = 0;
        let vars = self.config.vars;
        let last_is_zero = self.config.depth == 0;
        for phi in self.atoms.clone() {
            self.candidates += 1;
            let mask = var_mask(&phi, vars);
            if last_is_zero && self.config.sentences_only && mask != 0 {
                continue;
            }
            let table = self.atom_table(&phi)?;
            if let Some(id) = self.insert(Node::Atom(phi), mask, 0, table) {
                if check(self, id) {
                    return Ok(Some(id));
                }
            }
        }
        let mut start = 0;
        let mut scratch = Vec::with_capacity(self.width);
        for level in 1..=self.config.depth {
            let end = self.classes.len();
            let last = level == self.config.depth;
            let prune = last && self.config.sentences_only;
            let cost = self.level_cost(start, end);
            check_budget(self.candidates as u128 + cost, self.config.budget)?;
            for c in Connective::ALL {
                for i in 0..end {
                    let mut j0 = if c.is_commutative() { i } else { 0 };
                    if i < start {
                        j0 = j0.max(start);
                    }
                    for j in j0..end {
                        self.candidates += 1;
                        let mask = self.classes[i].mask | self.classes[j].mask;
                        if prune && mask != 0 {
                            continue;
                        }
                        self.binary_table(c, i, j, &mut scratch);
                        let table = scratch.clone().into_boxed_slice();
                        if let Some(id) = self.insert(Node::Bin(c, i, j), mask, level, table) {
                            if check(self, id) {
                                return Ok(Some(id));
                            }
                        }
                    }
                }
            }
            if self.config.quantifiers {
                for a in start..end {
                    let mask = self.classes[a].mask;
                    for v in 0..vars {
                        if mask & (1 << v) == 0 {
                            continue;
                        }
                        for q in [Quantifier::Forall, Quantifier::Exists] {
                            self.candidates += 1;
                            let new_mask = mask & !(1 << v);
                            if prune && new_mask != 0 {
                                continue;
                            }
                            let table = self.quant_table(q, v, a);
                            if let Some(id) = self.insert(Node::Quant(q, v, a), new_mask, level, table)
                            {
                                if check(self, id) {
                                    return Ok(Some(id));
                                }
                            }
                        }
                    }
                }
            }
            start = end;
        }
        Ok(None)
    }
}

/// A normalized quantifier prefix: alternating nonempty blocks, variables
/// sorted within each block, outermost block first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    pub blocks: Vec<(Quantifier, Vec<usize>)>,
}

impl Prefix {
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn bound(&self) -> u32 {
        self.blocks
            .iter()
            .flat_map(|(_, vs)| vs.iter())
            .fold(0, |m, &v| m | (1 << v))
    }

    /// Wraps `matrix` in the prefix.
    pub fn apply(&self, matrix: Formula) -> Formula {
        let mut out = matrix;
        for (q, vs) in self.blocks.iter().rev() {
            for &v in vs.iter().rev() {
                out = Formula::quantified(*q, &var_name(v), out);
            }
        }
        out
    }

    /// Applies the prefix to a value table over `n^vars` assignments.
    pub fn apply_table(&self, table: &[u8], n: usize, vars: usize, top: u8) -> Vec<u8> {
        let mut cur = table.to_vec();
        let mut next = vec![0u8; table.len()];
        for (q, vs) in self.blocks.iter().rev() {
            for &v in vs.iter().rev() {
                quantify_table(&cur, n, vars, v, *q, top, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        cur
    }
}

/// All normalized prefixes of `class` over the variables in `mask`.
///
/// With `allow_free`, variables may also stay free; otherwise every
/// variable of `mask` is bound. Prefixes come in the order of their first
/// occurrence when variables (lowest first, most significant) are assigned
/// to `free` (if allowed) and then to blocks `1..=n`.
pub fn prenex_prefixes(mask: u32, class: PrenexClass, allow_free: bool) -> Vec<Prefix> {
    let vars: Vec<usize> = (0..32).filter(|v| mask & (1 << v) != 0).collect();
    let (first, n) = match class {
        PrenexClass::QuantifierFree => (Quantifier::Forall, 0),
        PrenexClass::Forall(n) => (Quantifier::Forall, n),
        PrenexClass::Exists(n) => (Quantifier::Exists, n),
        PrenexClass::NotPrenex => return Vec::new(),
    };
    let lo = if allow_free { 0 } else { 1 };
    if n == 0 && !(allow_free || vars.is_empty()) {
        return Vec::new();
    }
    let radix = n + 1 - lo;
    let total = radix.pow(vars.len() as u32);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut digits = vec![0; vars.len()];
        for d in digits.iter_mut().rev() {
            *d = code % radix + lo;
            code /= radix;
        }
        let mut blocks: Vec<(Quantifier, Vec<usize>)> = Vec::new();
        for b in 1..=n {
            let q = if b % 2 == 1 {
                first
            } else {
                match first {
                    Quantifier::Forall => Quantifier::Exists,
                    Quantifier::Exists => Quantifier::Forall,
                }
            };
            let vs: Vec<usize> = vars
                .iter()
                .zip(&digits)
                .filter(|(_, &d)| d == b)
                .map(|(&v, _)| v)
                .collect();
            if vs.is_empty() {
                continue;
            }
            match blocks.last_mut() {
                Some((lq, lvs)) if *lq == q => {
                    lvs.extend(vs);
                    lvs.sort_unstable();
                }
                _ => blocks.push((q, vs)),
            }
        }
        let p = Prefix { blocks };
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

/// Every formula up to `depth` built from `atoms`, in canonical order,
/// without any semantic deduplication.
///
/// With `sentences_only`, last-level candidates that are not sentences are
/// skipped.
pub fn syntactic_formulas(
    atoms: Vec<Formula>,
    vars: usize,
    depth: usize,
    quantifiers: bool,
    sentences_only: bool,
    budget: u64,
) -> Result<Vec<Formula>> {
    let mut masks: Vec<u32> = atoms.iter().map(|a| var_mask(a, vars)).collect();
    let mut out = atoms;
    check_budget(out.len() as u128, budget)?;
    let mut start = 0;
    for level in 1..=depth {
        let end = out.len();
        let prune = level == depth && sentences_only;
        let fresh = (end - start) as u128;
        let before = start as u128;
        let mut cost = 4 * (fresh * (fresh + 1) / 2 + fresh * before)
            + (end as u128 * end as u128 - before * before);
        if quantifiers {
            cost += (start..end)
                .map(|i| 2 * masks[i].count_ones() as u128)
                .sum::<u128>();
        }
        check_budget(out.len() as u128 + cost, budget)?;
        for c in Connective::ALL {
            for i in 0..end {
                let mut j0 = if c.is_commutative() { i } else { 0 };
                if i < start {
                    j0 = j0.max(start);
                }
                for j in j0..end {
                    let mask = masks[i] | masks[j];
                    if prune && mask != 0 {
                        continue;
                    }
                    let f = c.build(out[i].clone(), out[j].clone());
                    out.push(f);
                    masks.push(mask);
                }
            }
        }
        if quantifiers {
            for a in start..end {
                for v in 0..vars {
                    if masks[a] & (1 << v) == 0 {
                        continue;
                    }
                    for q in [Quantifier::Forall, Quantifier::Exists] {
                        let mask = masks[a] & !(1 << v);
                        if prune && mask != 0 {
                            continue;
                        }
                        out.push(Formula::quantified(q, &var_name(v), out[a].clone()));
                        masks.push(mask);
                    }
                }
            }
        }
        start = end;
    }
    Ok(out)
}

/// Quantifier-free formulas up to `depth` over `x1..x{vars}`, then every
/// prenex closure of each of them within `class`.
///
/// Only sentences are produced unless `allow_free` is set.
pub fn prenex_formulas(
    sig: &Signature,
    params: &[String],
    truth: Option<&FiniteChain>,
    bounds: &Bounds,
    class: PrenexClass,
    allow_free: bool,
) -> Result<Vec<Formula>> {
    let terms = term_universe(bounds.vars, params, sig);
    let atoms = atoms(sig, &terms, truth)?;
    let matrices = syntactic_formulas(atoms, bounds.vars, bounds.depth, false, false, bounds.budget)?;
    let mut out = Vec::new();
    for m in matrices {
        let mask = var_mask(&m, bounds.vars);
        for p in prenex_prefixes(mask, class, allow_free) {
            out.push(p.apply(m.clone()));
            check_budget(out.len() as u128, bounds.budget)?;
        }
    }
    Ok(out)
}

/// A random formula of depth at most `depth` over `sig`, with variables
/// drawn from `x1..x{vars}` and truth constants from `truth` when given.
///
/// Terms nest at most two function applications deep.
pub fn random_formula(
    rng: &mut impl rand::Rng,
    sig: &Signature,
    truth: Option<&FiniteChain>,
    vars: usize,
    depth: usize,
) -> Formula {
    let vars = vars.max(1);
    if depth == 0 || rng.gen_ratio(1, 4) {
        return random_atom(rng, sig, truth, vars);
    }
    match rng.gen_range(0..8) {
        0 => Formula::Not(Box::new(random_formula(rng, sig, truth, vars, depth - 1))),
        1 | 2 => {
            let v = var_name(rng.gen_range(0..vars));
            let body = random_formula(rng, sig, truth, vars, depth - 1);
            if rng.gen() {
                Formula::forall(&v, body)
            } else {
                Formula::exists(&v, body)
            }
        }
        _ => {
            let c = Connective::ALL[rng.gen_range(0..Connective::ALL.len())];
            let a = random_formula(rng, sig, truth, vars, depth - 1);
            let b = random_formula(rng, sig, truth, vars, depth - 1);
            c.build(a, b)
        }
    }
}

fn random_term(rng: &mut impl rand::Rng, funcs: &[(String, usize)], vars: usize, depth: usize) -> Term {
    if depth == 0 || funcs.is_empty() || rng.gen_ratio(2, 3) {
        return Term::var(&var_name(rng.gen_range(0..vars)));
    }
    let (f, arity) = &funcs[rng.gen_range(0..funcs.len())];
    Term::App(f.clone(), (0..*arity).map(|_| random_term(rng, funcs, vars, depth - 1)).collect())
}

fn random_atom(rng: &mut impl rand::Rng, sig: &Signature, truth: Option<&FiniteChain>, vars: usize) -> Formula {
    let preds: Vec<(String, usize)> = sig.base_predicates().map(|(p, a)| (p.to_string(), a)).collect();
    let funcs: Vec<(String, usize)> = sig.functions().map(|(f, s)| (f.to_string(), s.arity)).collect();
    let inner: Vec<&str> = truth
        .map(|c| (1..c.len().saturating_sub(1)).map(|i| c.label(i)).collect())
        .unwrap_or_default();
    let roll = rng.gen_range(0..10);
    match roll {
        0 => Formula::Top,
        1 => Formula::Bottom,
        2 if !inner.is_empty() => Formula::Truth(inner[rng.gen_range(0..inner.len())].to_string()),
        3 | 4 => Formula::Eq(random_term(rng, &funcs, vars, 2), random_term(rng, &funcs, vars, 2)),
        _ if !preds.is_empty() => {
            let (p, arity) = &preds[rng.gen_range(0..preds.len())];
            Formula::Atom(p.clone(), (0..*arity).map(|_| random_term(rng, &funcs, vars, 2)).collect())
        }
        _ => Formula::Eq(random_term(rng, &funcs, vars, 2), random_term(rng, &funcs, vars, 2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{eval_formula, Structure, Table};
    use crate::syntax::classify_prenex;
    use std::sync::Arc;

    fn godel4() -> Arc<FiniteChain> {
        Arc::new(FiniteChain::godel(&["0", "1/2", "3/4", "1"]))
    }

    #[test]
    fn atom_order() {
        let sig = Signature::new()
            .with_predicate("R", 2)
            .unwrap()
            .with_predicate("P", 1)
            .unwrap();
        let terms = term_universe(2, &[], &sig);
        let a = atoms(&sig, &terms, None).unwrap();
        let text: Vec<String> = a.iter().map(|f| f.to_string()).collect();
        assert_eq!(
            text,
            [
                "P(x1)", "P(x2)", "R(x1,x1)", "R(x1,x2)", "R(x2,x1)", "R(x2,x2)", "x1 ~ x1",
                "x1 ~ x2", "x2 ~ x2", "val(0)", "val(1)"
            ]
        );
        let g = godel4();
        let t = atoms(&sig, &terms, Some(&g)).unwrap();
        assert_eq!(t.len(), a.len() + 2);
        let f = Signature::new().with_function("f", 1).unwrap();
        assert!(atoms(&f, &[], None).is_err());
    }

    #[test]
    fn prefixes_are_normalized() {
        let ps = prenex_prefixes(0b11, PrenexClass::Exists(2), false);
        let text: Vec<String> = ps
            .iter()
            .map(|p| p.apply(Formula::atom("R", &["x1", "x2"])).to_string())
            .collect();
        assert_eq!(
            text,
            [
                "exists x1 x2. R(x1,x2)",
                "exists x1. forall x2. R(x1,x2)",
                "exists x2. forall x1. R(x1,x2)",
                "forall x1 x2. R(x1,x2)",
            ]
        );
        for p in &ps {
            let f = p.apply(Formula::atom("R", &["x1", "x2"]));
            assert!(classify_prenex(&f).is_within(PrenexClass::Exists(2)));
        }
        assert_eq!(prenex_prefixes(0, PrenexClass::Forall(1), false).len(), 1);
        assert_eq!(prenex_prefixes(0b1, PrenexClass::Forall(1), true).len(), 2);
    }

    #[test]
    fn engine_tables_match_direct_evaluation() {
        let l = Arc::new(FiniteChain::lukasiewicz(3));
        let s = Structure::with_size(l, 2)
            .unwrap()
            .with_predicate("P", Table::new(1, vec![1, 2]))
            .unwrap();
        let sig = s.signature();
        let probes = vec![Probe::new(&s)];
        let cfg = EngineConfig::from_bounds(&Bounds::depth(2).with_vars(1), true, false);
        let mut e = ClosureEngine::new(probes, &sig, &[], cfg).unwrap();
        let mut seen = Vec::new();
        e.run(|e, c| {
            seen.push((e.formula(c), e.table(c, 0).to_vec()));
            false
        })
        .unwrap();
        // a 3-element chain admits at most three sentence classes
        assert_eq!(seen.iter().filter(|(f, _)| f.is_sentence()).count(), 3);
        for (f, table) in seen {
            for d in 0..2 {
                let v = crate::semantics::Assignment::new().set("x1", d);
                assert_eq!(eval_formula(&f, &s, &v).unwrap(), table[d] as usize, "{f}");
            }
        }
    }

    #[test]
    fn engine_respects_budget() {
        let s = Structure::with_size(godel4(), 2)
            .unwrap()
            .with_predicate("R", Table::constant(2, 2, 1))
            .unwrap();
        let cfg = EngineConfig::from_bounds(&Bounds::depth(3).with_budget(1000), true, false);
        let mut e = ClosureEngine::new(vec![Probe::new(&s)], &s.signature(), &[], cfg).unwrap();
        assert!(matches!(e.run(|_, _| false), Err(Error::Budget { .. })));
    }

    #[test]
    fn syntactic_generator_counts() {
        let sig = Signature::new().with_predicate("P", 1).unwrap();
        let terms = term_universe(1, &[], &sig);
        let a = atoms(&sig, &terms, None).unwrap();
        assert_eq!(a.len(), 4);
        let all = syntactic_formulas(a, 1, 1, true, false, 1_000).unwrap();
        // 4 atoms, 4 * 10 unordered pairs, 16 ordered pairs, 2 quantifiers
        // for each of P(x1) and x1 ~ x1
        assert_eq!(all.len(), 4 + 40 + 16 + 4);
        assert!(all.iter().all(|f| f.depth() <= 1));
    }
}
