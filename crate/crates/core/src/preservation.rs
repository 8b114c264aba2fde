//! Preservation checks, the `⇛_∃n` relation, bounded amalgamation and the
//! randomized suites.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{all_mtl_chains, FiniteChain};
use crate::diagrams::{build_diagram, diagram_embedding_equivalence_with, DiagramBounds, DiagramKind};
use crate::error::{check_budget, Error, Result};
use crate::generate::{prenex_formulas, prenex_prefixes, Bounds, ClosureEngine, EngineConfig, Prefix, Probe};
use crate::morphisms::{
    enumerate_substructures, is_embedding, is_substructure, preserves_values, search_maps, SearchOptions,
    StructureMap,
};
use crate::semantics::{compile, equiv_up_to_depth, for_each_structure, Comparison, Separator, Structure, Table};
use crate::syntax::{domain_constant_name, Formula, PrenexClass, Signature};
use crate::unions::{check_union_quantifier_free, union_of_chain, validate_chain_of_structures, StructureChain};

/// Index of the image of every assignment of `s^vars` in `t^vars`.
fn image_indices(g: &[usize], n: usize, nt: usize, vars: usize) -> Vec<usize> {
    (0..n.pow(vars as u32))
        .map(|mut idx| {
            let mut digits = vec![0; vars];
            for d in digits.iter_mut().rev() {
                *d = idx % n;
                idx /= n;
            }
            digits.iter().fold(0, |acc, &d| acc * nt + g[d])
        })
        .collect()
}

/// Prefixes per free-variable mask, computed once.
struct PrefixCache {
    class: PrenexClass,
    allow_free: bool,
    cache: HashMap<u32, Vec<Prefix>>,
}

impl PrefixCache {
    fn new(class: PrenexClass, allow_free: bool) -> Self {
        PrefixCache {
            class,
            allow_free,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, mask: u32) -> &[Prefix] {
        let (class, free) = (self.class, self.allow_free);
        self.cache
            .entry(mask)
            .or_insert_with(|| prenex_prefixes(mask, class, free))
    }
}

fn check_same_language(left: &Structure, right: &Structure) -> Result<()> {
    if left.chain() != right.chain() {
        return Err(Error::ChainMismatch("both structures need the same chain".into()));
    }
    if left.signature() != right.signature() {
        return Err(Error::Validation("the structures interpret different symbols".into()));
    }
    Ok(())
}

fn param_values(s: &Structure, params: &[String]) -> Result<Vec<usize>> {
    params
        .iter()
        .map(|l| {
            s.index_of(l)
                .ok_or_else(|| Error::Validation(format!("parameter `{l}` is not an element")))
        })
        .collect()
}

fn prenex_class_of(n: usize, first: crate::syntax::Quantifier) -> PrenexClass {
    match (n, first) {
        (0, _) => PrenexClass::QuantifierFree,
        (n, crate::syntax::Quantifier::Exists) => PrenexClass::Exists(n),
        (n, crate::syntax::Quantifier::Forall) => PrenexClass::Forall(n),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImpliesReport {
    pub holds: bool,
    pub n: usize,
    /// Element labels named by the parameter constants `c_label`.
    pub params: Vec<String>,
    pub bounds: Bounds,
    /// Sentence values compared (after merging equivalent matrices).
    pub sentences: u64,
    pub separator: Option<Separator>,
}

/// Checks that every generated prenex `Exists(n)` sentence with parameters
/// among `params` that `left` satisfies is satisfied by `right`.
///
/// The matrices are the quantifier-free formulas up to `bounds.depth`; the
/// prefix sits on top of them.
pub fn implies_exists_n(
    left: &Structure,
    right: &Structure,
    params: &[String],
    n: usize,
    bounds: &Bounds,
) -> Result<ImpliesReport> {
    check_same_language(left, right)?;
    let (pl, pr) = (param_values(left, params)?, param_values(right, params)?);
    let names: Vec<String> = params.iter().map(|l| domain_constant_name(l)).collect();
    let sig = left.signature();
    let probes = vec![Probe::with_params(left, pl), Probe::with_params(right, pr)];
    let cfg = EngineConfig::from_bounds(bounds, false, false);
    let mut engine = ClosureEngine::new(probes, &sig, &names, cfg)?;
    let mut prefixes = PrefixCache::new(prenex_class_of(n, crate::syntax::Quantifier::Exists), false);
    let (nl, nr) = (left.size(), right.size());
    let (tl, tr) = (left.chain().top() as u8, right.chain().top() as u8);
    let vars = bounds.vars;
    let mut sentences = 0u64;
    let mut found: Option<(Prefix, u8, u8)> = None;
    let hit = engine.run(|e, c| {
        for p in prefixes.get(e.mask(c)) {
            sentences += 1;
            let lv = p.apply_table(e.table(c, 0), nl, vars, tl)[0];
            if lv != tl {
                continue;
            }
            let rv = p.apply_table(e.table(c, 1), nr, vars, tr)[0];
            if rv != tr {
                found = Some((p.clone(), lv, rv));
                return true;
            }
        }
        false
    })?;
    let separator = match (hit, found) {
        (Some(c), Some((p, lv, rv))) => Some(Separator {
            sentence: p.apply(engine.formula(c)),
            left: left.chain().label(lv as usize).to_string(),
            right: right.chain().label(rv as usize).to_string(),
        }),
        _ => None,
    };
    Ok(ImpliesReport {
        holds: separator.is_none(),
        n,
        params: params.to_vec(),
        bounds: *bounds,
        sentences,
        separator,
    })
}

/// A generated prenex `Forall(1)` formula satisfied at a tuple of the source
/// but not at its image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniversalFailure {
    pub formula: Formula,
    pub tuple: Vec<(String, String)>,
}

/// Checks that `m` carries satisfaction of every generated prenex
/// `Forall(1)` formula (free variables allowed) from `s` to `t`.
pub fn preserves_universal(
    m: &StructureMap,
    s: &Structure,
    t: &Structure,
    bounds: &Bounds,
) -> Result<Option<UniversalFailure>> {
    check_same_language(s, t)?;
    let sig = s.signature();
    let probes = vec![Probe::new(s), Probe::new(t)];
    let cfg = EngineConfig::from_bounds(bounds, false, false);
    let mut engine = ClosureEngine::new(probes, &sig, &[], cfg)?;
    let mut prefixes = PrefixCache::new(PrenexClass::Forall(1), true);
    let (n, nt) = (s.size(), t.size());
    let vars = bounds.vars;
    let image = image_indices(&m.g, n, nt, vars);
    let (ts, tt) = (s.chain().top() as u8, t.chain().top() as u8);
    let mut found = None;
    let hit = engine.run(|e, c| {
        for p in prefixes.get(e.mask(c)) {
            let a = p.apply_table(e.table(c, 0), n, vars, ts);
            let b = p.apply_table(e.table(c, 1), nt, vars, tt);
            if let Some(idx) = (0..a.len()).find(|&i| a[i] == ts && b[image[i]] != tt) {
                found = Some((p.clone(), idx));
                return true;
            }
        }
        false
    })?;
    Ok(match (hit, found) {
        (Some(c), Some((p, mut idx))) => {
            let phi = p.apply(engine.formula(c));
            let mut digits = vec![0; vars];
            for d in digits.iter_mut().rev() {
                *d = idx % n;
                idx /= n;
            }
            let free = phi.free_variables();
            let tuple = (0..vars)
                .map(crate::generate::var_name)
                .zip(digits)
                .filter(|(v, _)| free.contains(v))
                .map(|(v, d)| (v, s.label(d).to_string()))
                .collect();
            Some(UniversalFailure { formula: phi, tuple })
        }
        _ => None,
    })
}

/// Two structures sharing a common part, to be amalgamated.
#[derive(Clone, Debug, PartialEq)]
pub struct AmalgamInstance {
    /// `None` when there is no common part.
    pub common: Option<Structure>,
    /// Strongly embedded into the amalgam.
    pub left: Structure,
    /// Included in the amalgam, elementarily within the bounds.
    pub right: Structure,
    /// Labels of common elements generating the common part.
    pub generators: Vec<String>,
}

impl AmalgamInstance {
    pub fn validate(&self) -> Result<()> {
        check_same_language(&self.left, &self.right)?;
        match &self.common {
            None => {
                if !self.generators.is_empty() {
                    return Err(Error::Validation("generators need a common part".into()));
                }
            }
            Some(c) => {
                for (side, s) in [("left", &self.left), ("right", &self.right)] {
                    if let Some(v) = is_substructure(c, s)? {
                        return Err(Error::Validation(format!(
                            "common part is not a substructure of the {side} structure: {v:?}"
                        )));
                    }
                }
                let gens = param_values(c, &self.generators)?;
                // closed sets are closed under intersection, so the smallest
                // closed superset is the generated one
                let least = crate::morphisms::closed_subsets(c)?
                    .into_iter()
                    .filter(|sub| gens.iter().all(|g| sub.contains(g)))
                    .map(|sub| sub.len())
                    .min()
                    .unwrap_or(c.size());
                if least != c.size() {
                    return Err(Error::Validation(
                        "the generators do not generate the common part".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Amalgam {
    pub structure: Structure,
    pub left_map: StructureMap,
    pub right_map: StructureMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmalgamReport {
    pub n: usize,
    pub max_size: usize,
    pub bounds: Bounds,
    pub precondition: ImpliesReport,
    /// Candidate structures examined.
    pub candidates: u64,
    /// `None` means nothing within the size bound; this refutes nothing.
    pub amalgam: Option<Amalgam>,
}

/// Free cells of a candidate amalgam: `(is_predicate, name, table index, radix)`.
fn free_cells(right: &Structure, size: usize) -> Vec<(bool, String, usize, usize)> {
    let k = right.chain().len();
    let old = right.size();
    let all: Vec<usize> = (0..size).collect();
    let mut out = Vec::new();
    for (name, t) in right.predicates() {
        for (i, args) in crate::algebra::tuples(&all, t.arity).enumerate() {
            if args.iter().any(|&a| a >= old) {
                out.push((true, name.clone(), i, k));
            }
        }
    }
    for (name, t) in right.functions() {
        for (i, args) in crate::algebra::tuples(&all, t.arity).enumerate() {
            if args.iter().any(|&a| a >= old) {
                out.push((false, name.clone(), i, size));
            }
        }
    }
    out
}

/// Searches structures extending `right` by fresh elements, smallest first,
/// for one into which `left` strongly embeds (fixing the common part) while
/// the inclusion of `right` is elementary within `bounds`.
///
/// For `n = 2` the embedding of `left` must also carry every generated
/// `Forall(1)` formula. The search starts only after
/// [`implies_exists_n`] holds; otherwise a precondition error names the
/// separating sentence.
pub fn search_amalgam(inst: &AmalgamInstance, n: usize, max_size: usize, bounds: &Bounds) -> Result<AmalgamReport> {
    if !(1..=2).contains(&n) {
        return Err(Error::Precondition("amalgamation is defined for n = 1 and n = 2".into()));
    }
    inst.validate()?;
    let (left, right) = (&inst.left, &inst.right);
    let pre = implies_exists_n(left, right, &inst.generators, n, bounds)?;
    if let Some(sep) = &pre.separator {
        return Err(Error::Precondition(format!(
            "left does not Exists({n})-imply right: `{}` has value {} on the left and {} on the right",
            sep.sentence, sep.left, sep.right
        )));
    }
    let mut total: u128 = 0;
    for size in right.size()..=max_size {
        let cells = free_cells(right, size);
        let count = cells
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.3 as u128));
        total = total.saturating_add(count);
    }
    check_budget(total, bounds.budget)?;
    let mut candidates = 0u64;
    let mut fresh = (0..).map(|i| format!("n{i}")).filter(|l| {
        left.index_of(l).is_none() && right.index_of(l).is_none()
    });
    let mut domain: Vec<String> = right.domain().to_vec();
    for size in right.size()..=max_size {
        while domain.len() < size {
            domain.push(fresh.next().expect("infinite label supply"));
        }
        let cells = free_cells(right, size);
        let mut base = Structure::new(right.chain_arc().clone(), domain.clone())?;
        let old = right.size();
        let all: Vec<usize> = (0..size).collect();
        for (name, t) in right.predicates() {
            let table = Table::from_fn(t.arity, size, |a| {
                if a.iter().all(|&x| x < old) {
                    t.get(old, a)
                } else {
                    0
                }
            });
            base.set_predicate(name, table)?;
        }
        for (name, t) in right.functions() {
            let values = crate::algebra::tuples(&all, t.arity)
                .map(|a| if a.iter().all(|&x| x < old) { t.get(old, &a) } else { 0 })
                .collect();
            base.set_function(name, Table::new(t.arity, values))?;
        }
        let fixed: Vec<Option<usize>> = left
            .domain()
            .iter()
            .map(|l| {
                inst.common
                    .as_ref()
                    .filter(|c| c.index_of(l).is_some())
                    .and_then(|_| base.index_of(l))
            })
            .collect();
        let mut digits = vec![0usize; cells.len()];
        loop {
            let mut cand = base.clone();
            for ((is_pred, name, i, _), &v) in cells.iter().zip(&digits) {
                if *is_pred {
                    cand.predicate_mut(name).expect("declared").values[*i] = v;
                } else {
                    set_function_cell(&mut cand, name, *i, v)?;
                }
            }
            candidates += 1;
            if let Some(found) = try_candidate(inst, &cand, &fixed, n, bounds)? {
                return Ok(AmalgamReport {
                    n,
                    max_size,
                    bounds: *bounds,
                    precondition: pre,
                    candidates,
                    amalgam: Some(found),
                });
            }
            // odometer, first cell most significant
            let mut pos = cells.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < cells[pos].3 {
                    break;
                }
                digits[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || cells.is_empty() {
                break;
            }
        }
    }
    Ok(AmalgamReport {
        n,
        max_size,
        bounds: *bounds,
        precondition: pre,
        candidates,
        amalgam: None,
    })
}

fn set_function_cell(s: &mut Structure, name: &str, i: usize, v: usize) -> Result<()> {
    let mut t = s.functions()[name].clone();
    t.values[i] = v;
    s.set_function(name, t)
}

fn try_candidate(
    inst: &AmalgamInstance,
    cand: &Structure,
    fixed: &[Option<usize>],
    n: usize,
    bounds: &Bounds,
) -> Result<Option<Amalgam>> {
    let mut err = None;
    let opts = SearchOptions {
        fix_f_to_identity: true,
        injective: true,
        fixed,
        budget: bounds.budget,
    };
    let left_map = search_maps(&inst.left, cand, opts, |m| {
        if n == 1 {
            return true;
        }
        match preserves_universal(m, &inst.left, cand, bounds) {
            Ok(v) => v.is_none(),
            Err(e) => {
                err = Some(e);
                true
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let Some(left_map) = left_map else {
        return Ok(None);
    };
    let right_map = StructureMap::inclusion(&inst.right, cand)?;
    if preserves_values(&right_map, &inst.right, cand, bounds, true)?.is_some() {
        return Ok(None);
    }
    Ok(Some(Amalgam {
        structure: cand.clone(),
        left_map,
        right_map,
    }))
}

/// Re-checks an amalgam from scratch; returns the failed conditions.
pub fn verify_amalgam(inst: &AmalgamInstance, a: &Amalgam, n: usize, bounds: &Bounds) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    let (left, right, amalgam) = (&inst.left, &inst.right, &a.structure);
    if let Some(v) = is_embedding(&a.left_map, left, amalgam)? {
        failures.push(format!("left map is not a strong embedding: {v:?}"));
    } else if n == 2 {
        if let Some(v) = preserves_universal(&a.left_map, left, amalgam, bounds)? {
            failures.push(format!("left map does not preserve `{}`", v.formula));
        }
    }
    if !a.left_map.f.is_identity() {
        failures.push("left algebra map is not the identity".into());
    }
    if let Some(c) = &inst.common {
        for l in c.domain() {
            let i = left.index_of(l).expect("common part inside left");
            if amalgam.label(a.left_map.g[i]) != l {
                failures.push(format!("left map moves common element `{l}`"));
            }
        }
    }
    if let Some(v) = is_substructure(right, amalgam)? {
        failures.push(format!("right is not a substructure: {v:?}"));
    } else {
        let inc = StructureMap::inclusion(right, amalgam)?;
        if inc.g != a.right_map.g {
            failures.push("right map is not the inclusion".into());
        }
        if let Some(v) = crate::morphisms::is_elementary_up_to_depth(&inc, right, amalgam, bounds)? {
            failures.push(format!("right inclusion changes the value of `{}`", v.formula));
        }
    }
    Ok(failures)
}

/// A sentence (or formula at a tuple) that held where it should have been
/// carried over, but did not.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreservationViolation {
    pub instance: usize,
    pub formula: String,
    pub tuple: Vec<(String, String)>,
    /// Where the formula has value 1.
    pub holds_in: String,
    /// Where it should have value 1 too.
    pub fails_in: String,
    pub value: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PreservationReport {
    pub claim: String,
    pub seed: Option<u64>,
    pub bounds: Option<Bounds>,
    pub instances: usize,
    /// Sentence (or formula-tuple) checks performed.
    pub checks: u64,
    pub violations: Vec<PreservationViolation>,
}

impl PreservationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(claim: &str, seed: Option<u64>, bounds: Option<Bounds>, parts: Vec<(u64, Vec<PreservationViolation>)>) -> Self {
        let instances = parts.len();
        let mut checks = 0;
        let mut violations = Vec::new();
        for (c, v) in parts {
            checks += c;
            violations.extend(v);
        }
        PreservationReport {
            claim: claim.to_string(),
            seed,
            bounds,
            instances,
            checks,
            violations,
        }
    }
}

fn one_line(s: &Structure) -> String {
    s.to_string().trim_end().replace('\n', "; ")
}

/// For every structure of the corpus, every substructure and every tuple
/// from it: if a formula of `theory` has value 1 in the structure, it must
/// have value 1 in the substructure.
pub fn check_preserved_under_substructures(theory: &[Formula], corpus: &[Structure]) -> Result<PreservationReport> {
    let parts = corpus
        .iter()
        .enumerate()
        .map(|(i, t)| substructure_instance(i, theory, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreservationReport::merge("preserved-under-substructures", None, None, parts))
}

fn substructure_instance(i: usize, theory: &[Formula], t: &Structure) -> Result<(u64, Vec<PreservationViolation>)> {
    let top = t.chain().top();
    let mut checks = 0;
    let mut violations = Vec::new();
    for s in enumerate_substructures(t, false)? {
        let to_t: Vec<usize> = s.domain().iter().map(|l| t.index_of(l).expect("subset")).collect();
        for phi in theory {
            let free: Vec<String> = phi.free_variables().into_iter().collect();
            let names: Vec<&str> = free.iter().map(String::as_str).collect();
            let (ct, cs) = (compile(phi, t, &names)?, compile(phi, &s, &names)?);
            let all: Vec<usize> = (0..s.size()).collect();
            for tuple in crate::algebra::tuples(&all, free.len()) {
                checks += 1;
                let image: Vec<usize> = tuple.iter().map(|&d| to_t[d]).collect();
                if ct.eval_at(&image) != top {
                    continue;
                }
                let v = cs.eval_at(&tuple);
                if v != top {
                    violations.push(PreservationViolation {
                        instance: i,
                        formula: phi.to_string(),
                        tuple: free
                            .iter()
                            .zip(&tuple)
                            .map(|(x, &d)| (x.clone(), s.label(d).to_string()))
                            .collect(),
                        holds_in: one_line(t),
                        fails_in: one_line(&s),
                        value: s.chain().label(v).to_string(),
                    });
                }
            }
        }
    }
    Ok((checks, violations))
}

/// For every chain: if a sentence of `theory` has value 1 in every member,
/// it must have value 1 in the union.
pub fn check_preserved_under_unions(theory: &[Formula], chains: &[StructureChain]) -> Result<PreservationReport> {
    for phi in theory {
        let free = phi.free_variables();
        if !free.is_empty() {
            return Err(Error::OpenFormula(free.into_iter().collect()));
        }
    }
    let mut parts = Vec::new();
    for (i, c) in chains.iter().enumerate() {
        let union = union_of_chain(c)?;
        let top = union.chain().top();
        let mut checks = 0;
        let mut violations = Vec::new();
        for phi in theory {
            checks += 1;
            let mut all_hold = true;
            for m in c.members() {
                if compile(phi, m, &[])?.eval_at(&[]) != top {
                    all_hold = false;
                    break;
                }
            }
            if !all_hold {
                continue;
            }
            let v = compile(phi, &union, &[])?.eval_at(&[]);
            if v != top {
                violations.push(PreservationViolation {
                    instance: i,
                    formula: phi.to_string(),
                    tuple: Vec::new(),
                    holds_in: "every member".into(),
                    fails_in: one_line(&union),
                    value: union.chain().label(v).to_string(),
                });
            }
        }
        parts.push((checks, violations));
    }
    Ok(PreservationReport::merge("preserved-under-unions", None, None, parts))
}

/// Generated prenex `Forall(1)` sentences within `bounds` that hold in every
/// model of `theory` with at most `max_domain` elements.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniversalConsequences {
    pub sentences: Vec<Formula>,
    pub candidates: usize,
    pub models: usize,
    pub bounds: Bounds,
    pub max_domain: usize,
}

pub fn universal_consequences_bounded(
    theory: &[Formula],
    sig: &Signature,
    chain: &Arc<FiniteChain>,
    bounds: &Bounds,
    max_domain: usize,
) -> Result<UniversalConsequences> {
    for phi in theory {
        let free = phi.free_variables();
        if !free.is_empty() {
            return Err(Error::OpenFormula(free.into_iter().collect()));
        }
    }
    let base = sig.base();
    let truth = bounds.truth_constants.then(|| &**chain);
    let candidates = prenex_formulas(&base, &[], truth, bounds, PrenexClass::Forall(1), false)?;
    let top = chain.top();
    let mut models = Vec::new();
    for n in 1..=max_domain {
        for_each_structure(chain, &base, n, bounds.budget, |s| {
            for t in theory {
                if compile(t, s, &[])?.eval_at(&[]) != top {
                    return Ok(true);
                }
            }
            models.push(s.clone());
            Ok(true)
        })?;
    }
    check_budget(
        (candidates.len() as u128).saturating_mul(models.len() as u128),
        bounds.budget,
    )?;
    let mut sentences = Vec::new();
    for phi in &candidates {
        let mut holds = true;
        for m in &models {
            if compile(phi, m, &[])?.eval_at(&[]) != top {
                holds = false;
                break;
            }
        }
        if holds {
            sentences.push(phi.clone());
        }
    }
    Ok(UniversalConsequences {
        sentences,
        candidates: candidates.len(),
        models: models.len(),
        bounds: *bounds,
        max_domain,
    })
}

/// The worked counterexample: two structures with a constant unary
/// predicate that satisfy the same base sentences but are told apart by a
/// sentence with a truth constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub forall_m: String,
    pub forall_n: String,
    pub equivalent_at_depth_2: bool,
    pub sentence: String,
    pub sentence_m: String,
    pub sentence_n: String,
    pub substructures_of_m: usize,
    pub substructures_satisfy: bool,
    /// The sentence holds in `M` and fails in `N`.
    pub separated: bool,
}

impl CounterexampleReport {
    /// Every claim about the bundled instance holds.
    pub fn passes(&self) -> bool {
        self.forall_m == "3/4"
            && self.forall_n == "1/2"
            && self.equivalent_at_depth_2
            && self.sentence_m == "1"
            && self.sentence_n == "1/2"
            && self.substructures_satisfy
            && self.separated
    }
}

/// Runs the counterexample checks on a given pair.
pub fn counterexample_report(m: &Structure, n: &Structure) -> Result<CounterexampleReport> {
    check_same_language(m, n)?;
    let chain = m.chain_arc().clone();
    let all = Formula::forall("x", Formula::atom("P", &["x"]));
    let sig = m.signature().expand_with_truth_constants(chain.clone())?;
    let sentence = crate::parser::parse_formula("val(3/4) -> forall x. P(x)", &sig)?;
    let val = |phi: &Formula, s: &Structure| -> Result<String> {
        Ok(chain.label(compile(phi, s, &[])?.eval_at(&[])).to_string())
    };
    let eq = equiv_up_to_depth(m, n, &m.signature(), &Bounds::depth(2), Comparison::Satisfaction)?;
    let subs = enumerate_substructures(m, false)?;
    let mut substructures_satisfy = true;
    for s in &subs {
        if compile(&sentence, s, &[])?.eval_at(&[]) != chain.top() {
            substructures_satisfy = false;
        }
    }
    let (sm, sn) = (val(&sentence, m)?, val(&sentence, n)?);
    let top = chain.label(chain.top()).to_string();
    Ok(CounterexampleReport {
        forall_m: val(&all, m)?,
        forall_n: val(&all, n)?,
        equivalent_at_depth_2: eq.equivalent,
        sentence: sentence.to_string(),
        separated: sm == top && sn != top,
        sentence_m: sm,
        sentence_n: sn,
        substructures_of_m: subs.len(),
        substructures_satisfy,
    })
}

/// The report on the bundled pair.
pub fn reproduce_counterexample() -> Result<CounterexampleReport> {
    let (m, n) = crate::corpus::counterexample_pair()?;
    counterexample_report(&m, &n)
}

/// Settings shared by the randomized suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub instances: usize,
    /// Largest chain drawn, at least 2.
    pub max_chain: usize,
    /// Largest domain drawn.
    pub max_domain: usize,
    pub bounds: Bounds,
}

impl SuiteConfig {
    pub fn new(seed: u64, instances: usize) -> Self {
        SuiteConfig {
            seed,
            instances,
            max_chain: 4,
            max_domain: 4,
            bounds: Bounds::depth(2).with_vars(2),
        }
    }
}

/// The generator for instance `i` of a suite run with `seed`.
pub fn instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// One binary predicate `R` and one unary predicate `P`.
pub fn suite_signature() -> Signature {
    Signature::new()
        .with_predicate("R", 2)
        .and_then(|s| s.with_predicate("P", 1))
        .expect("distinct names")
}

/// A structure with uniformly random predicate values.
pub fn random_structure(rng: &mut impl Rng, chain: &Arc<FiniteChain>, sig: &Signature, n: usize) -> Result<Structure> {
    let k = chain.len();
    let mut s = Structure::with_size(chain.clone(), n)?;
    for (name, arity) in sig.base_predicates() {
        let values = (0..n.pow(arity as u32)).map(|_| rng.gen_range(0..k)).collect();
        s.set_predicate(name, Table::new(arity, values))?;
    }
    for (name, sym) in sig.functions() {
        let values = (0..n.pow(sym.arity as u32)).map(|_| rng.gen_range(0..n)).collect();
        s.set_function(name, Table::new(sym.arity, values))?;
    }
    Ok(s)
}

fn chains_up_to(max_chain: usize) -> Vec<Arc<FiniteChain>> {
    (2..=max_chain.max(2))
        .flat_map(all_mtl_chains)
        .map(Arc::new)
        .collect()
}

/// Draws a chain from `pool`, then a domain size and the tables.
pub fn random_instance(rng: &mut impl Rng, pool: &[Arc<FiniteChain>], max_domain: usize) -> Result<Structure> {
    let chain = &pool[rng.gen_range(0..pool.len())];
    let n = rng.gen_range(1..=max_domain.max(1));
    random_structure(rng, chain, &suite_signature(), n)
}

/// Generated prenex sentences of `class` checked for preservation from each
/// random structure to all of its substructures. Each instance reports at
/// most its first violation.
///
/// With `Forall(1)` this is the universal preservation lemma; with
/// `Exists(1)` it is the negative control and should find violations.
pub fn substructure_suite(cfg: &SuiteConfig, class: PrenexClass) -> Result<PreservationReport> {
    let pool = chains_up_to(cfg.max_chain);
    let parts = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(cfg.seed, i);
            let t = random_instance(&mut rng, &pool, cfg.max_domain)?;
            sentences_go_down(i, &t, class, &cfg.bounds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreservationReport::merge(
        &format!("substructures/{class}"),
        Some(cfg.seed),
        Some(cfg.bounds),
        parts,
    ))
}

fn sentences_go_down(
    i: usize,
    t: &Structure,
    class: PrenexClass,
    bounds: &Bounds,
) -> Result<(u64, Vec<PreservationViolation>)> {
    let subs = enumerate_substructures(t, false)?;
    let mut probes = vec![Probe::new(t)];
    probes.extend(subs.iter().map(|s| Probe::new(s)));
    let sig = t.signature();
    let cfg = EngineConfig::from_bounds(bounds, false, false);
    let mut engine = ClosureEngine::new(probes, &sig, &[], cfg)?;
    let mut prefixes = PrefixCache::new(class, false);
    let top = t.chain().top() as u8;
    let vars = bounds.vars;
    let mut checks = 0u64;
    let mut hits: Vec<(usize, Prefix, usize, u8)> = Vec::new();
    engine.run(|e, c| {
        for p in prefixes.get(e.mask(c)) {
            checks += 1;
            if p.apply_table(e.table(c, 0), t.size(), vars, top)[0] != top {
                continue;
            }
            for (j, s) in subs.iter().enumerate() {
                let v = p.apply_table(e.table(c, j + 1), s.size(), vars, top)[0];
                if v != top {
                    hits.push((c, p.clone(), j, v));
                    return true;
                }
            }
        }
        false
    })?;
    let violations = hits
        .into_iter()
        .map(|(c, p, j, v)| PreservationViolation {
            instance: i,
            formula: p.apply(engine.formula(c)).to_string(),
            tuple: Vec::new(),
            holds_in: one_line(t),
            fails_in: one_line(&subs[j]),
            value: t.chain().label(v as usize).to_string(),
        })
        .collect();
    Ok((checks, violations))
}

/// A random chain of three structures: a random top member restricted to
/// two nested prefixes of a random ordering of its domain.
pub fn random_structure_chain(rng: &mut impl Rng, pool: &[Arc<FiniteChain>], max_domain: usize) -> Result<StructureChain> {
    let chain = &pool[rng.gen_range(0..pool.len())];
    let n = rng.gen_range(3..=max_domain.max(3));
    let top = random_structure(rng, chain, &suite_signature(), n)?;
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let a = rng.gen_range(1..n - 1);
    let b = rng.gen_range(a + 1..n);
    let mut small = order[..a].to_vec();
    let mut mid = order[..b].to_vec();
    small.sort_unstable();
    mid.sort_unstable();
    validate_chain_of_structures(vec![top.restrict(&small)?, top.restrict(&mid)?, top])
}

/// Generated prenex `Forall(2)` sentences that hold in every member of a
/// random chain of length 3 must hold in the union; every chain is also
/// checked for the quantifier-free Tarski–Vaught clause.
pub fn union_suite(cfg: &SuiteConfig) -> Result<PreservationReport> {
    let pool = chains_up_to(cfg.max_chain);
    let parts = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(cfg.seed, i);
            let c = random_structure_chain(&mut rng, &pool, cfg.max_domain)?;
            union_instance(i, &c, &cfg.bounds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreservationReport::merge(
        "unions/Forall(2)",
        Some(cfg.seed),
        Some(cfg.bounds),
        parts,
    ))
}

fn union_instance(i: usize, c: &StructureChain, bounds: &Bounds) -> Result<(u64, Vec<PreservationViolation>)> {
    let union = union_of_chain(c)?;
    let mut violations = Vec::new();
    if let Some(v) = check_union_quantifier_free(c, &union, bounds)? {
        violations.push(PreservationViolation {
            instance: i,
            formula: v.violation.formula.to_string(),
            tuple: v.violation.tuple.clone(),
            holds_in: format!("member {}", v.member),
            fails_in: one_line(&union),
            value: v.violation.target_value.clone(),
        });
    }
    let mut probes: Vec<Probe> = c.members().iter().map(|m| Probe::new(m)).collect();
    probes.push(Probe::new(&union));
    let members = c.len();
    let sig = union.signature();
    let cfg = EngineConfig::from_bounds(bounds, false, false);
    let mut engine = ClosureEngine::new(probes, &sig, &[], cfg)?;
    let mut prefixes = PrefixCache::new(PrenexClass::Forall(2), false);
    let top = union.chain().top() as u8;
    let vars = bounds.vars;
    let mut checks = 1u64;
    let mut hits = Vec::new();
    engine.run(|e, cl| {
        for p in prefixes.get(e.mask(cl)) {
            checks += 1;
            let everywhere = (0..members)
                .all(|j| p.apply_table(e.table(cl, j), e.probe_size(j), vars, top)[0] == top);
            if !everywhere {
                continue;
            }
            let v = p.apply_table(e.table(cl, members), union.size(), vars, top)[0];
            if v != top {
                hits.push((cl, p.clone(), v));
            }
        }
        false
    })?;
    for (cl, p, v) in hits {
        violations.push(PreservationViolation {
            instance: i,
            formula: p.apply(engine.formula(cl)).to_string(),
            tuple: Vec::new(),
            holds_in: "every member".into(),
            fails_in: one_line(&union),
            value: union.chain().label(v as usize).to_string(),
        });
    }
    Ok((checks, violations))
}

/// One pair on which the two sides of the diagram criterion disagree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepDisagreement {
    pub source: String,
    pub target: String,
    pub diagram_side: bool,
    pub embedding_side: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub chains: Vec<Vec<String>>,
    pub max_source: usize,
    pub max_target: usize,
    pub instances: u64,
    pub embeddings: u64,
    pub disagreements: Vec<SweepDisagreement>,
}

/// Every pair of structures with one binary predicate `R`, the source of
/// size at most `max_source` and the target at most `max_target`, over each
/// of `chains`: does the atomic diagram side agree with the embedding side?
pub fn diagram_sweep(chains: &[Arc<FiniteChain>], max_source: usize, max_target: usize) -> Result<SweepReport> {
    let sig = Signature::new().with_predicate("R", 2)?;
    let bounds = DiagramBounds::atomic();
    let mut instances = 0;
    let mut embeddings = 0;
    let mut disagreements = Vec::new();
    for chain in chains {
        let mut sources = Vec::new();
        for n in 1..=max_source {
            for_each_structure(chain, &sig, n, u64::MAX, |s| {
                sources.push(s.clone());
                Ok(true)
            })?;
        }
        let diagrams = sources
            .iter()
            .map(|s| build_diagram(s, DiagramKind::Diag, &bounds))
            .collect::<Result<Vec<_>>>()?;
        for n in 1..=max_target {
            let mut targets = Vec::new();
            for_each_structure(chain, &sig, n, u64::MAX, |t| {
                targets.push(t.clone());
                Ok(true)
            })?;
            let results = targets
                .par_iter()
                .map(|t| {
                    let mut agree = Vec::new();
                    for (s, d) in sources.iter().zip(&diagrams) {
                        let r = diagram_embedding_equivalence_with(s, t, d)?;
                        agree.push((r.diagram_side, r.embedding_side));
                    }
                    Ok(agree)
                })
                .collect::<Result<Vec<_>>>()?;
            for (t, row) in targets.iter().zip(results) {
                for (s, (d, e)) in sources.iter().zip(row) {
                    instances += 1;
                    embeddings += u64::from(e);
                    if d != e {
                        disagreements.push(SweepDisagreement {
                            source: one_line(s),
                            target: one_line(t),
                            diagram_side: d,
                            embedding_side: e,
                        });
                    }
                }
            }
        }
    }
    Ok(SweepReport {
        chains: chains.iter().map(|c| c.labels().to_vec()).collect(),
        max_source,
        max_target,
        instances,
        embeddings,
        disagreements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::parser::parse_formula;

    fn godel4() -> Arc<FiniteChain> {
        corpus::godel4()
    }

    fn with_truth(b: Bounds) -> Bounds {
        b.with_truth_constants(true)
    }

    #[test]
    fn implies_separator_for_counterexample() {
        let (m, n) = corpus::counterexample_pair().unwrap();
        let b = with_truth(Bounds::depth(1).with_vars(1));
        let r = implies_exists_n(&m, &n, &[], 1, &b).unwrap();
        assert!(!r.holds);
        let sep = r.separator.unwrap();
        assert_eq!(sep.sentence.to_string(), "exists x1. P(x1) <-> val(3/4)");
        assert_eq!((sep.left.as_str(), sep.right.as_str()), ("1", "1/2"));
        assert!(implies_exists_n(&m, &m, &[], 1, &b).unwrap().holds);
        // without truth constants nothing tells them apart
        assert!(implies_exists_n(&m, &n, &[], 1, &Bounds::depth(2)).unwrap().holds);
    }

    #[test]
    fn substructure_implies_superstructure() {
        let t = Structure::with_size(godel4(), 3)
            .unwrap()
            .with_predicate("P", Table::new(1, vec![0, 3, 1]))
            .unwrap();
        let s = t.restrict(&[0, 2]).unwrap();
        let b = with_truth(Bounds::depth(2).with_vars(2));
        let params = vec!["d0".to_string()];
        assert!(implies_exists_n(&s, &t, &params, 1, &b).unwrap().holds);
        assert!(!implies_exists_n(&t, &s, &params, 1, &b).unwrap().holds);
    }

    #[test]
    fn amalgams_of_bundled_instances_reverify() {
        let b = with_truth(Bounds::depth(2).with_vars(2));
        for (inst, ns) in [
            (corpus::amalgam_identity().unwrap(), vec![1, 2]),
            (corpus::amalgam_existential().unwrap(), vec![1]),
            (corpus::amalgam_universal_existential().unwrap(), vec![1, 2]),
        ] {
            for n in ns {
                let r = search_amalgam(&inst, n, 4, &b).unwrap();
                let a = r.amalgam.expect("found within the bound");
                assert_eq!(verify_amalgam(&inst, &a, n, &b).unwrap(), Vec::<String>::new());
                assert!(crate::morphisms::is_strong_homomorphism(&a.left_map, &inst.left, &a.structure).unwrap().is_none());
            }
        }
        let inst = corpus::amalgam_identity().unwrap();
        let a = search_amalgam(&inst, 1, 3, &b).unwrap().amalgam.unwrap();
        assert_eq!(a.structure, inst.right);
        assert_eq!(a.left_map.g, vec![0, 1, 2]);
    }

    #[test]
    fn amalgam_precondition_names_the_separator() {
        let (m, n) = corpus::counterexample_pair().unwrap();
        let inst = AmalgamInstance {
            common: None,
            left: m,
            right: n,
            generators: Vec::new(),
        };
        let b = with_truth(Bounds::depth(2).with_vars(2));
        match search_amalgam(&inst, 1, 3, &b) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("exists x1. P(x1) <-> val(3/4)"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let e1 = corpus::amalgam_existential().unwrap();
        assert!(matches!(search_amalgam(&e1, 2, 4, &b), Err(Error::Precondition(_))));
    }

    #[test]
    fn one_point_structures_without_common_part() {
        let one = |l: &str| {
            Structure::new(godel4(), vec![l])
                .unwrap()
                .with_predicate("P", Table::new(1, vec![2]))
                .unwrap()
        };
        let inst = AmalgamInstance {
            common: None,
            left: one("a"),
            right: one("b"),
            generators: Vec::new(),
        };
        let b = Bounds::depth(2).with_vars(2);
        let r = search_amalgam(&inst, 1, 2, &b).unwrap();
        let a = r.amalgam.unwrap();
        assert_eq!(a.structure.domain(), ["b"]);
        // a two-element extension of `b` is never elementary: forall x2. x1 ~ x2
        let two = Structure::new(godel4(), vec!["b", "a"])
            .unwrap()
            .with_predicate("P", Table::new(1, vec![2, 2]))
            .unwrap();
        let inc = StructureMap::inclusion(&inst.right, &two).unwrap();
        assert!(preserves_values(&inc, &inst.right, &two, &b, true).unwrap().is_some());
    }

    #[test]
    fn preservation_examples() {
        let sig = Signature::new().with_predicate("P", 1).unwrap();
        let t = Structure::new(Arc::new(FiniteChain::boolean()), vec!["a", "b"])
            .unwrap()
            .with_predicate("P", Table::new(1, vec![1, 0]))
            .unwrap();
        let ex = parse_formula("exists x. P(x)", &sig).unwrap();
        let r = check_preserved_under_substructures(&[ex], std::slice::from_ref(&t)).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].fails_in.contains('b'));
        let univ = parse_formula("forall x. P(x) \\/ not P(x)", &sig).unwrap();
        let qf = parse_formula("P(x)", &sig).unwrap();
        assert!(check_preserved_under_substructures(&[univ, qf], &[t]).unwrap().ok());

        let chain = corpus::complete_graph_chain().unwrap();
        let degree2 = corpus::theory("degree2", None).unwrap();
        let r = check_preserved_under_unions(&degree2.formulas, &[chain]).unwrap();
        assert!(r.ok());
        assert_eq!(r.checks, 1);
        for m in corpus::complete_graph_chain().unwrap().members() {
            assert_eq!(compile(&degree2.formulas[0], m, &[]).unwrap().eval_at(&[]), 1);
        }

        let b = Arc::new(FiniteChain::boolean());
        let full = Structure::with_size(b.clone(), 2)
            .unwrap()
            .with_predicate("R", Table::new(2, vec![1, 1, 1, 0]))
            .unwrap();
        let c = validate_chain_of_structures(vec![full.restrict(&[0]).unwrap(), full]).unwrap();
        let all = parse_formula(
            "forall x y. R(x,y)",
            &Signature::new().with_predicate("R", 2).unwrap(),
        )
        .unwrap();
        let r = check_preserved_under_unions(&[all], &[c]).unwrap();
        assert!(r.ok());
    }

    #[test]
    fn universal_consequences_of_weighted_graphs() {
        let g = godel4();
        let theory = corpus::theory("weighted_graph", Some(g.clone())).unwrap();
        let b = Bounds::depth(1).with_vars(2);
        let out = universal_consequences_bounded(&theory.formulas, &theory.signature, &g, &b, 3).unwrap();
        let reversed = parse_formula("forall x1 x2. R(x2, x1) -> R(x1, x2)", &theory.signature).unwrap();
        assert!(out.sentences.contains(&reversed), "{} sentences", out.sentences.len());
        assert!(out.models > 0);

        let empty = Signature::new().with_predicate("P", 1).unwrap();
        let out = universal_consequences_bounded(&[], &empty, &g, &Bounds::depth(0).with_vars(1), 2).unwrap();
        let refl = parse_formula("forall x1. x1 ~ x1", &empty).unwrap();
        assert!(out.sentences.contains(&refl));
        assert!(!out.sentences.contains(&parse_formula("forall x1. P(x1)", &empty).unwrap()));
    }

    #[test]
    fn counterexample_report_passes_and_flips() {
        let r = reproduce_counterexample().unwrap();
        assert!(r.passes(), "{r:?}");
        assert_eq!(r.sentence, "val(3/4) -> forall x. P(x)");
        assert_eq!(r.substructures_of_m, 7);

        let (m, n) = corpus::counterexample_pair().unwrap();
        let swapped = counterexample_report(&n, &m).unwrap();
        assert!(!swapped.separated);
        assert_eq!(swapped.sentence_m, "1/2");
        assert_eq!(swapped.sentence_n, "1");

        let same = counterexample_report(&m, &m).unwrap();
        assert!(!same.separated);
        assert_eq!(same.sentence_n, "1");
    }

    #[test]
    fn suites_are_clean_and_deterministic() {
        let cfg = SuiteConfig::new(3, 12);
        let a = substructure_suite(&cfg, PrenexClass::Forall(1)).unwrap();
        assert!(a.ok(), "{:?}", a.violations.first());
        assert_eq!(a, substructure_suite(&cfg, PrenexClass::Forall(1)).unwrap());
        let neg = substructure_suite(&cfg, PrenexClass::Exists(1)).unwrap();
        assert!(!neg.ok());
        let u = union_suite(&SuiteConfig::new(3, 6)).unwrap();
        assert!(u.ok(), "{:?}", u.violations.first());
    }

    #[test]
    fn small_diagram_sweep_agrees() {
        let r = diagram_sweep(&[Arc::new(FiniteChain::boolean())], 2, 2).unwrap();
        assert!(r.disagreements.is_empty());
        assert_eq!(r.instances, (2 + 16) * (2 + 16));
        assert!(r.embeddings > 0);
    }
}
