//! Finite chains of structures, their unions and the Tarski–Vaught checks.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generate::Bounds;
use crate::morphisms::{is_substructure, preserves_values, ElementaryViolation, StructureMap, SubstructureViolation};
use crate::semantics::{Structure, Table};

/// Structures over one chain, each a substructure of the next.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureChain {
    members: Vec<Structure>,
    /// Set once every inclusion has been checked elementary to this depth.
    pub elementary_to_depth: Option<usize>,
}

impl StructureChain {
    pub fn members(&self) -> &[Structure] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Checks every consecutive inclusion for value preservation within
    /// `bounds`; on success records the depth.
    pub fn verify_elementary(&mut self, bounds: &Bounds) -> Result<Option<(usize, ElementaryViolation)>> {
        for i in 1..self.members.len() {
            let (a, b) = (&self.members[i - 1], &self.members[i]);
            let inc = StructureMap::inclusion(a, b)?;
            if let Some(v) = preserves_values(&inc, a, b, bounds, true)? {
                self.elementary_to_depth = None;
                return Ok(Some((i - 1, v)));
            }
        }
        self.elementary_to_depth = Some(bounds.depth);
        Ok(None)
    }
}

/// Checks that each structure is a substructure of the next.
pub fn validate_chain_of_structures(list: Vec<Structure>) -> Result<StructureChain> {
    if list.is_empty() {
        return Err(Error::Validation("a chain needs at least one structure".into()));
    }
    for i in 1..list.len() {
        if list[i].chain() != list[0].chain() {
            return Err(Error::ChainMismatch(format!(
                "member {i} uses a different chain than member 0"
            )));
        }
        if let Some(v) = is_substructure(&list[i - 1], &list[i])? {
            return Err(Error::Validation(format!(
                "member {} is not a substructure of member {i}: {}",
                i - 1,
                describe(&v)
            )));
        }
    }
    Ok(StructureChain {
        members: list,
        elementary_to_depth: None,
    })
}

fn describe(v: &SubstructureViolation) -> String {
    match v {
        SubstructureViolation::Signature { symbol } => format!("signatures differ at `{symbol}`"),
        SubstructureViolation::Subalgebra { detail } => detail.clone(),
        SubstructureViolation::Domain { element } => format!("element `{element}` missing"),
        SubstructureViolation::Function { name, args } => {
            format!("`{name}` differs at ({})", args.join(","))
        }
        SubstructureViolation::Predicate { name, args } => {
            format!("`{name}` differs at ({})", args.join(","))
        }
    }
}

/// The union: elements in order of first appearance, every table entry
/// taken from the members containing its arguments.
pub fn union_of_chain(c: &StructureChain) -> Result<Structure> {
    let first = &c.members[0];
    let mut domain: Vec<String> = Vec::new();
    for m in &c.members {
        for l in m.domain() {
            if !domain.contains(l) {
                domain.push(l.clone());
            }
        }
    }
    let index: BTreeMap<&str, usize> = domain.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let n = domain.len();
    let all: Vec<usize> = (0..n).collect();
    let lookup = |tuple: &[usize], member: &Structure| -> Option<Vec<usize>> {
        tuple.iter().map(|&d| member.index_of(&domain[d])).collect()
    };
    let fill = |name: &str, arity: usize, is_pred: bool| -> Result<Table> {
        let mut values = Vec::with_capacity(n.pow(arity as u32));
        for tuple in crate::algebra::tuples(&all, arity) {
            let mut value: Option<usize> = None;
            for m in &c.members {
                let Some(local) = lookup(&tuple, m) else { continue };
                let v = if is_pred {
                    m.predicates()[name].get(m.size(), &local)
                } else {
                    index[m.label(m.functions()[name].get(m.size(), &local))]
                };
                match value {
                    None => value = Some(v),
                    Some(w) if w != v => {
                        return Err(Error::Internal(format!(
                            "members disagree on `{name}` at a shared tuple"
                        )))
                    }
                    _ => {}
                }
            }
            values.push(value.ok_or_else(|| {
                Error::Internal(format!("no member holds a tuple for `{name}`"))
            })?);
        }
        Ok(Table::new(arity, values))
    };
    let mut out = Structure::new(first.chain_arc().clone(), domain.clone())?;
    for (name, t) in first.predicates() {
        out.set_predicate(name, fill(name, t.arity, true)?)?;
    }
    for (name, t) in first.functions() {
        out.set_function(name, fill(name, t.arity, false)?)?;
    }
    Ok(out)
}

/// Where a value was not carried over from a member to the union.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnionViolation {
    pub member: usize,
    #[serde(flatten)]
    pub violation: ElementaryViolation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TarskiVaughtReport {
    pub members: usize,
    pub union_size: usize,
    pub bounds: Bounds,
    /// Every member is a substructure of the union.
    pub members_are_substructures: bool,
    /// First quantifier-free formula whose value changes in the union.
    pub quantifier_free: Option<UnionViolation>,
    /// Whether the consecutive inclusions passed the depth check.
    pub elementary_chain: bool,
    /// First inclusion of the chain that fails the depth check.
    pub chain_violation: Option<UnionViolation>,
    /// Checked only for an elementary chain: first formula within the
    /// bounds whose value changes in the union.
    pub elementary_union: Option<Option<UnionViolation>>,
}

impl TarskiVaughtReport {
    /// Every clause that was checked held.
    pub fn holds(&self) -> bool {
        self.members_are_substructures
            && self.quantifier_free.is_none()
            && !matches!(self.elementary_union, Some(Some(_)))
    }
}

/// The first member and quantifier-free formula within `bounds` whose value
/// changes from the member to `union`.
pub fn check_union_quantifier_free(
    c: &StructureChain,
    union: &Structure,
    bounds: &Bounds,
) -> Result<Option<UnionViolation>> {
    for (i, m) in c.members.iter().enumerate() {
        let inc = StructureMap::inclusion(m, union)?;
        if let Some(v) = preserves_values(&inc, m, union, bounds, false)? {
            return Ok(Some(UnionViolation { member: i, violation: v }));
        }
    }
    Ok(None)
}

/// Quantifier-free preservation from every member into the union, and,
/// when the chain is elementary within `bounds`, full preservation within
/// `bounds`.
pub fn check_tarski_vaught(c: &StructureChain, bounds: &Bounds) -> Result<TarskiVaughtReport> {
    let union = union_of_chain(c)?;
    let mut members_are_substructures = true;
    for m in &c.members {
        if is_substructure(m, &union)?.is_some() {
            members_are_substructures = false;
        }
    }
    let quantifier_free = check_union_quantifier_free(c, &union, bounds)?;
    let mut chain = c.clone();
    let chain_violation = chain
        .verify_elementary(bounds)?
        .map(|(i, v)| UnionViolation { member: i, violation: v });
    let elementary_union = if chain.elementary_to_depth.is_some() {
        let mut found = None;
        for (i, m) in c.members.iter().enumerate() {
            let inc = StructureMap::inclusion(m, &union)?;
            if let Some(v) = preserves_values(&inc, m, &union, bounds, true)? {
                found = Some(UnionViolation { member: i, violation: v });
                break;
            }
        }
        Some(found)
    } else {
        None
    };
    Ok(TarskiVaughtReport {
        members: c.members.len(),
        union_size: union.size(),
        bounds: *bounds,
        members_are_substructures,
        quantifier_free,
        elementary_chain: chain_violation.is_none(),
        chain_violation,
        elementary_union,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteChain;
    use std::sync::Arc;

    fn complete_graph(n: usize) -> Structure {
        let b = Arc::new(FiniteChain::boolean());
        Structure::with_size(b, n)
            .unwrap()
            .with_predicate("R", Table::from_fn(2, n, |a| usize::from(a[0] != a[1])))
            .unwrap()
    }

    fn constant_p(n: usize) -> Structure {
        let g = Arc::new(FiniteChain::godel(&["0", "1/2", "3/4", "1"]));
        Structure::with_size(g, n)
            .unwrap()
            .with_predicate("P", Table::constant(1, n, 2))
            .unwrap()
    }

    #[test]
    fn complete_graphs_form_a_chain() {
        let c = validate_chain_of_structures(vec![complete_graph(3), complete_graph(4), complete_graph(5)])
            .unwrap();
        assert_eq!(union_of_chain(&c).unwrap(), complete_graph(5));
        let reversed = validate_chain_of_structures(vec![complete_graph(5), complete_graph(3)]);
        assert!(matches!(reversed, Err(Error::Validation(_))));
        let single = validate_chain_of_structures(vec![complete_graph(2)]).unwrap();
        assert_eq!(union_of_chain(&single).unwrap(), complete_graph(2));
        assert!(validate_chain_of_structures(Vec::new()).is_err());
    }

    #[test]
    fn complete_graph_chains_at_depth_two() {
        let c = validate_chain_of_structures(vec![complete_graph(3), complete_graph(4)]).unwrap();
        let r = check_tarski_vaught(&c, &Bounds::depth(2)).unwrap();
        assert!(r.holds());
        assert!(r.members_are_substructures);
        assert!(r.quantifier_free.is_none());
        // depth 2 cannot say "a fourth element differs from three others"
        assert!(r.elementary_chain);
        let c = validate_chain_of_structures(vec![complete_graph(2), complete_graph(3)]).unwrap();
        let r = check_tarski_vaught(&c, &Bounds::depth(2).with_vars(3)).unwrap();
        assert!(r.holds());
        assert!(!r.elementary_chain);
        assert_eq!(r.elementary_union, None);
    }

    #[test]
    fn constant_predicate_chain_is_elementary() {
        let c = validate_chain_of_structures(vec![constant_p(2), constant_p(3), constant_p(4)]).unwrap();
        let u = union_of_chain(&c).unwrap();
        assert!(u.predicates()["P"].values.iter().all(|&v| v == 2));
        let r = check_tarski_vaught(&c, &Bounds::depth(2)).unwrap();
        assert!(r.elementary_chain, "{r:?}");
        assert_eq!(r.elementary_union, Some(None));
        assert!(r.holds());
    }

    #[test]
    fn union_interleaves_new_elements() {
        let g = Arc::new(FiniteChain::godel(&["0", "1/2", "3/4", "1"]));
        let big = Structure::new(g, vec!["b", "a", "c"])
            .unwrap()
            .with_predicate("P", Table::new(1, vec![1, 2, 3]))
            .unwrap();
        let small = big.restrict(&[1]).unwrap();
        let mid = big.restrict(&[1, 0]).unwrap();
        let c = validate_chain_of_structures(vec![small, mid, big.clone()]).unwrap();
        let u = union_of_chain(&c).unwrap();
        assert_eq!(u.domain(), ["a", "b", "c"]);
        assert_eq!(u.pred_value("P", &[0]), Some(2));
        assert_eq!(is_substructure(&big, &u).unwrap(), None);
        let r = check_tarski_vaught(&c, &Bounds::depth(1)).unwrap();
        assert!(r.quantifier_free.is_none());
    }
}
