//! Rational-valued structures over a relational signature.

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::scalar::Scalar;
use itertools::Itertools;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// Ordered list of named symbols with arities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

impl Signature {
    /// Builds a user-facing signature: unique names, at least one symbol,
    /// every arity at least one.
    pub fn new(symbols: Vec<(String, usize)>) -> Result<Self> {
        if symbols.iter().any(|(_, a)| *a == 0) {
            return Err(Error::InvalidSignature("arity must be at least 1".into()));
        }
        Self::with_nullary(symbols)
    }

    /// Like [`Signature::new`] but admits arity-0 symbols. Packed signatures
    /// need them for tuples made entirely of the packed element.
    pub fn with_nullary(symbols: Vec<(String, usize)>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidSignature("signature is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (n, _) in &symbols {
            if !seen.insert(n.clone()) {
                return Err(Error::InvalidSignature(format!("duplicate symbol {n}")));
            }
        }
        Ok(Signature {
            symbols: symbols
                .into_iter()
                .map(|(name, arity)| Symbol { name, arity })
                .collect(),
        })
    }

    /// The graph signature: one binary symbol `e`.
    pub fn graph() -> Self {
        Signature::new(vec![("e".into(), 2)]).unwrap()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn arity(&self, f: usize) -> usize {
        self.symbols[f].arity
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    /// max over symbols of ar^ar, with 0^0 = 1.
    pub fn collapse_constant(&self) -> u64 {
        self.symbols
            .iter()
            .map(|s| (s.arity as u64).pow(s.arity as u32))
            .max()
            .unwrap_or(1)
    }
}

/// A total map between two domains, by element index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn identity(n: usize) -> Self {
        Assignment((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, x: &[usize]) -> Vec<usize> {
        x.iter().map(|&a| self.0[a]).collect()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Assignment) -> Assignment {
        Assignment(self.0.iter().map(|&a| other.0[a]).collect())
    }

    pub fn check(&self, source: usize, target: usize) -> Result<()> {
        if self.0.len() != source {
            return Err(Error::InvalidAssignment(format!(
                "map defined on {} elements, source has {}",
                self.0.len(),
                source
            )));
        }
        if let Some(&b) = self.0.iter().find(|&&b| b >= target) {
            return Err(Error::InvalidAssignment(format!(
                "image index {b} outside target of size {target}"
            )));
        }
        Ok(())
    }
}

/// A finite structure: domain of opaque ids, and per symbol a sparse map
/// from tuples (by element index) to positive values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuedStructure<T> {
    signature: Signature,
    domain: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<BTreeMap<Vec<usize>, T>>,
}

impl<T: Scalar> ValuedStructure<T> {
    pub fn new(signature: Signature, domain: Vec<String>) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::InvalidStructure("domain is empty".into()));
        }
        let mut index = HashMap::new();
        for (i, d) in domain.iter().enumerate() {
            if index.insert(d.clone(), i).is_some() {
                return Err(Error::InvalidStructure(format!("duplicate element {d}")));
            }
        }
        let values = vec![BTreeMap::new(); signature.len()];
        Ok(ValuedStructure {
            signature,
            domain,
            index,
            values,
        })
    }

    /// Domain `0..n` with ids `"0"`, `"1"`, ...
    pub fn with_size(signature: Signature, n: usize) -> Result<Self> {
        Self::new(signature, (0..n).map(|i| i.to_string()).collect())
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn element(&self, i: usize) -> &str {
        &self.domain[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Sets a tuple value; zero removes the tuple.
    pub fn set(&mut self, f: usize, tuple: Vec<usize>, value: T) -> Result<()> {
        if f >= self.signature.len() {
            return Err(Error::InvalidStructure(format!("unknown symbol index {f}")));
        }
        if tuple.len() != self.signature.arity(f) {
            return Err(Error::InvalidStructure(format!(
                "tuple of length {} for symbol {} of arity {}",
                tuple.len(),
                self.signature.symbols[f].name,
                self.signature.arity(f)
            )));
        }
        if tuple.iter().any(|&a| a >= self.domain.len()) {
            return Err(Error::InvalidStructure("tuple element out of range".into()));
        }
        if value.is_negative() {
            return Err(Error::Negative(format!("tuple value {value}")));
        }
        if value.is_zero() {
            self.values[f].remove(&tuple);
        } else {
            self.values[f].insert(tuple, value);
        }
        Ok(())
    }

    /// Adds to a tuple value.
    pub fn add(&mut self, f: usize, tuple: Vec<usize>, value: T) -> Result<()> {
        let cur = self.get(f, &tuple);
        self.set(f, tuple, cur + value)
    }

    pub fn set_named(&mut self, symbol: &str, tuple: &[&str], value: T) -> Result<()> {
        let f = self
            .signature
            .position(symbol)
            .ok_or_else(|| Error::InvalidStructure(format!("unknown symbol {symbol}")))?;
        let t = tuple
            .iter()
            .map(|id| {
                self.index_of(id)
                    .ok_or_else(|| Error::InvalidStructure(format!("unknown element {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.set(f, t, value)
    }

    pub fn get(&self, f: usize, tuple: &[usize]) -> T {
        self.values[f].get(tuple).cloned().unwrap_or_else(T::zero)
    }

    pub fn symbol_values(&self, f: usize) -> &BTreeMap<Vec<usize>, T> {
        &self.values[f]
    }

    /// All positive tuples as (symbol, tuple, value), symbol-major.
    pub fn tuples(&self) -> impl Iterator<Item = (usize, &Vec<usize>, &T)> {
        self.values
            .iter()
            .enumerate()
            .flat_map(|(f, m)| m.iter().map(move |(x, v)| (f, x, v)))
    }

    pub fn tuple_count(&self) -> usize {
        self.values.iter().map(|m| m.len()).sum()
    }

    pub fn norm1(&self) -> T {
        self.tuples().fold(T::zero(), |acc, (_, _, v)| acc + v.clone())
    }

    pub fn norm1_symbol(&self, f: usize) -> T {
        self.values[f]
            .values()
            .fold(T::zero(), |acc, v| acc + v.clone())
    }

    pub fn norm_inf(&self) -> T {
        self.tuples()
            .fold(T::zero(), |acc, (_, _, v)| T::max_of(acc, v.clone()))
    }

    pub fn same_signature(&self, other: &Self) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch(
                "structures use different signatures".into(),
            ));
        }
        Ok(())
    }

    pub fn rescale(&self, lambda: &T) -> Result<Self> {
        if lambda.is_negative() {
            return Err(Error::Negative(format!("scale factor {lambda}")));
        }
        let mut out = self.clone();
        for m in out.values.iter_mut() {
            if lambda.is_zero() {
                m.clear();
            } else {
                for v in m.values_mut() {
                    *v = v.clone() * lambda.clone();
                }
            }
        }
        Ok(out)
    }

    /// True iff no positive tuple repeats an element.
    pub fn is_clean(&self) -> bool {
        self.tuples().all(|(_, x, _)| x.iter().all_unique())
    }

    /// Substructure on the given elements (in the given order); tuples that
    /// leave the set are dropped.
    pub fn induced(&self, elements: &[usize]) -> Result<Self> {
        let mut pos = vec![usize::MAX; self.size()];
        for (i, &e) in elements.iter().enumerate() {
            pos[e] = i;
        }
        let mut out = Self::new(
            self.signature.clone(),
            elements.iter().map(|&e| self.domain[e].clone()).collect(),
        )?;
        for (f, x, v) in self.tuples() {
            if x.iter().all(|&a| pos[a] != usize::MAX) {
                out.values[f].insert(x.iter().map(|&a| pos[a]).collect(), v.clone());
            }
        }
        Ok(out)
    }

    /// Same values with fresh element ids.
    pub fn relabel(&self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.size() {
            return Err(Error::InvalidStructure("relabel size mismatch".into()));
        }
        let mut out = Self::new(self.signature.clone(), ids)?;
        out.values = self.values.clone();
        Ok(out)
    }

    /// Pushforward under `g`: value at `x` is f^A(g⁻¹(x)).
    pub fn pushforward(&self, g: &Assignment) -> Vec<BTreeMap<Vec<usize>, T>> {
        let mut out = vec![BTreeMap::new(); self.signature.len()];
        for (f, x, v) in self.tuples() {
            let y = g.apply(x);
            let e: &mut T = out[f].entry(y).or_insert_with(T::zero);
            *e = e.clone() + v.clone();
        }
        out
    }
}

/// val(h) = Σ f^A(x)·f^B(h(x)).
pub fn val<T: Scalar>(a: &ValuedStructure<T>, b: &ValuedStructure<T>, h: &Assignment) -> Result<T> {
    a.same_signature(b)?;
    h.check(a.size(), b.size())?;
    Ok(val_unchecked(a, b, h))
}

pub(crate) fn val_unchecked<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    h: &Assignment,
) -> T {
    let mut acc = T::zero();
    for (f, x, v) in a.tuples() {
        let y = h.apply(x);
        if let Some(w) = b.values[f].get(&y) {
            acc = acc + v.clone() * w.clone();
        }
    }
    acc
}

/// Disjoint union; element `id` of part `i` becomes `"{i}:{id}"`.
pub fn disjoint_union<T: Scalar>(parts: &[ValuedStructure<T>]) -> Result<ValuedStructure<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("disjoint union of no parts".into()))?;
    let mut domain = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        first.same_signature(p)?;
        domain.extend(p.domain.iter().map(|d| format!("{i}:{d}")));
    }
    let mut out = ValuedStructure::new(first.signature.clone(), domain)?;
    let mut offset = 0;
    for p in parts {
        for (f, x, v) in p.tuples() {
            out.values[f].insert(x.iter().map(|&a| a + offset).collect(), v.clone());
        }
        offset += p.size();
    }
    Ok(out)
}

/// Disjoint union that keeps ids, failing on a collision.
pub fn disjoint_union_keep_ids<T: Scalar>(
    parts: &[ValuedStructure<T>],
) -> Result<ValuedStructure<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("disjoint union of no parts".into()))?;
    let mut domain = Vec::new();
    for p in parts {
        first.same_signature(p)?;
        domain.extend(p.domain.iter().cloned());
    }
    let mut out = ValuedStructure::new(first.signature.clone(), domain)?;
    let mut offset = 0;
    for p in parts {
        for (f, x, v) in p.tuples() {
            out.values[f].insert(x.iter().map(|&a| a + offset).collect(), v.clone());
        }
        offset += p.size();
    }
    Ok(out)
}

/// Gaifman graph: u ≠ v adjacent iff they share a positive tuple.
pub fn gaifman<T: Scalar>(a: &ValuedStructure<T>) -> Graph<T> {
    let mut g = Graph::new(a.domain.clone()).expect("domain ids are unique");
    for (_, x, _) in a.tuples() {
        for (i, &u) in x.iter().enumerate() {
            for &v in &x[i + 1..] {
                if u != v {
                    g.add_edge(u, v);
                }
            }
        }
    }
    g
}

/// Structure encoding of a graph: symbol `e`, both orientations of every
/// edge carrying the edge weight.
pub fn graph_structure<T: Scalar>(g: &Graph<T>) -> ValuedStructure<T> {
    let mut s = ValuedStructure::new(Signature::graph(), g.vertices().to_vec())
        .expect("graph vertex ids are unique");
    for (u, v) in g.edges() {
        let w = g.edge_weight(u, v);
        s.set(0, vec![u, v], w.clone()).unwrap();
        s.set(0, vec![v, u], w).unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distance<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Distance<T> {
    pub fn finite(&self) -> Option<&T> {
        match self {
            Distance::Finite(t) => Some(t),
            Distance::Infinite => None,
        }
    }

    fn lt(&self, other: &Self) -> bool {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => a < b,
            (Distance::Finite(_), Distance::Infinite) => true,
            _ => false,
        }
    }
}

/// Edit distance under a fixed bijection `phi` (domain A → domain B).
pub fn edit_distance_under<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    phi: &Assignment,
) -> Result<Distance<T>> {
    a.same_signature(b)?;
    if a.size() != b.size() {
        return Err(Error::InvalidArgument("edit distance needs equal sizes".into()));
    }
    phi.check(a.size(), b.size())?;
    if !phi.0.iter().all_unique() {
        return Err(Error::InvalidAssignment("edit distance needs a bijection".into()));
    }
    let mut total = T::zero();
    for f in 0..a.signature.len() {
        let na = a.norm1_symbol(f);
        let nb = b.norm1_symbol(f);
        if na.is_zero() && nb.is_zero() {
            continue;
        }
        if na.is_zero() || nb.is_zero() {
            return Ok(Distance::Infinite);
        }
        let mut diff = T::zero();
        let pushed: BTreeMap<Vec<usize>, T> = a.values[f]
            .iter()
            .map(|(x, v)| (phi.apply(x), v.clone()))
            .collect();
        for (y, va) in &pushed {
            diff = diff + (va.clone() - b.get(f, y)).abs();
        }
        for (y, vb) in &b.values[f] {
            if !pushed.contains_key(y) {
                diff = diff + vb.clone();
            }
        }
        total = total + diff / T::min_of(na, nb);
    }
    Ok(Distance::Finite(total))
}

/// Edit distance, minimized over all bijections when `phi` is absent.
pub fn edit_distance<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    phi: Option<&Assignment>,
    cap: usize,
) -> Result<Distance<T>> {
    if let Some(p) = phi {
        return edit_distance_under(a, b, p);
    }
    a.same_signature(b)?;
    if a.size() != b.size() {
        return Err(Error::InvalidArgument("edit distance needs equal sizes".into()));
    }
    crate::error::cap_check("bijection enumeration domain", a.size() as u128, cap as u128)?;
    let mut best = Distance::Infinite;
    for perm in (0..a.size()).permutations(a.size()) {
        let d = edit_distance_under(a, b, &Assignment(perm))?;
        if d.lt(&best) {
            best = d;
        }
    }
    Ok(best)
}

/// Img(g): tuple-wise min of the pushforward of A under g and B.
pub fn img<T: Scalar>(
    g: &Assignment,
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
) -> Result<ValuedStructure<T>> {
    a.same_signature(b)?;
    g.check(a.size(), b.size())?;
    let pushed = a.pushforward(g);
    let mut out = ValuedStructure::new(b.signature.clone(), b.domain.clone())?;
    for (f, m) in pushed.iter().enumerate() {
        for (x, v) in m {
            let w = b.get(f, x);
            let m = T::min_of(v.clone(), w);
            if m.is_positive() {
                out.values[f].insert(x.clone(), m);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{clique, path};
    use crate::Rational;
    use num_traits::Zero;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn val_examples() {
        let k2 = graph_structure(&clique::<Rational>(2));
        assert_eq!(val(&k2, &k2, &Assignment::identity(2)).unwrap(), q(2, 1));
        let k3 = graph_structure(&clique::<Rational>(3));
        assert_eq!(val(&k3, &k2, &Assignment(vec![0, 0, 1])).unwrap(), q(4, 1));
        let zero = k2.rescale(&Rational::zero()).unwrap();
        assert_eq!(val(&k3, &zero, &Assignment(vec![0, 1, 0])).unwrap(), q(0, 1));
    }

    #[test]
    fn val_rejects_bad_maps() {
        let k2 = graph_structure(&clique::<Rational>(2));
        assert!(matches!(
            val(&k2, &k2, &Assignment(vec![0])),
            Err(Error::InvalidAssignment(_))
        ));
        let other = ValuedStructure::<Rational>::with_size(
            Signature::new(vec![("r".into(), 2)]).unwrap(),
            2,
        )
        .unwrap();
        assert!(matches!(
            val(&k2, &other, &Assignment::identity(2)),
            Err(Error::SignatureMismatch(_))
        ));
    }

    #[test]
    fn rescale_and_union() {
        let k2 = graph_structure(&clique::<Rational>(2));
        assert_eq!(k2.rescale(&q(1, 1)).unwrap(), k2);
        let s = k2.rescale(&q(3, 2)).unwrap();
        assert!(s.tuples().all(|(_, _, v)| *v == q(3, 2)));
        assert!(k2.rescale(&q(-1, 1)).is_err());
        let u = disjoint_union(&[k2.clone(), k2.clone()]).unwrap();
        assert_eq!(u.norm1(), q(4, 1));
        assert_eq!(u.size(), 4);
    }

    #[test]
    fn gaifman_examples() {
        let sig = Signature::new(vec![("f".into(), 3)]).unwrap();
        let mut s = ValuedStructure::<Rational>::new(sig, vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        s.set_named("f", &["a", "b", "c"], q(1, 1)).unwrap();
        assert_eq!(gaifman(&s).edge_count(), 3);
        let z = s.rescale(&Rational::zero()).unwrap();
        assert_eq!(gaifman(&z).edge_count(), 0);
    }

    #[test]
    fn edit_distance_examples() {
        let k3 = graph_structure(&clique::<Rational>(3));
        let mut k3m = k3.clone();
        k3m.set(0, vec![0, 1], Rational::zero()).unwrap();
        k3m.set(0, vec![1, 0], Rational::zero()).unwrap();
        let id = Assignment::identity(3);
        assert_eq!(
            edit_distance(&k3, &k3m, Some(&id), 8).unwrap(),
            Distance::Finite(q(1, 2))
        );
        assert_eq!(edit_distance(&k3, &k3, None, 8).unwrap(), Distance::Finite(q(0, 1)));
        let empty = k3.rescale(&Rational::zero()).unwrap();
        assert_eq!(edit_distance(&k3, &empty, None, 8).unwrap(), Distance::Infinite);
        let p = graph_structure(&path::<Rational>(9));
        assert!(matches!(
            edit_distance(&p, &p, None, 8),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn clean_and_img() {
        let k3 = graph_structure(&clique::<Rational>(3));
        assert!(k3.is_clean());
        let mut loopy = k3.clone();
        loopy.set(0, vec![1, 1], q(1, 1)).unwrap();
        assert!(!loopy.is_clean());

        assert_eq!(img(&Assignment::identity(3), &k3, &k3).unwrap(), k3);
        let im = img(&Assignment(vec![0, 0, 1]), &k3, &k3).unwrap();
        let t: Vec<_> = im.tuples().map(|(_, x, v)| (x.clone(), v.clone())).collect();
        assert_eq!(t, vec![(vec![0, 1], q(1, 1)), (vec![1, 0], q(1, 1))]);
        let im = img(&Assignment(vec![2, 2, 2]), &k3, &k3).unwrap();
        assert_eq!(im.tuple_count(), 0);
    }
}
