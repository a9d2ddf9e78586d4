//! Exact opt(A, B): enumeration and tree-decomposition dynamic programming.

use crate::error::{cap_check, Error, Result};
use crate::graphs::{best_decomposition, TreeDecomposition};
use crate::scalar::Scalar;
use crate::structures::{gaifman, val_unchecked, Assignment, ValuedStructure};
use std::collections::HashMap;

pub const BRUTEFORCE_CAP: u128 = 10_000_000;
pub const DP_TABLE_CAP: u128 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult<T> {
    pub value: T,
    pub witness: Assignment,
}

/// Number of maps |B|^|A|, saturating.
pub fn map_count(source: usize, target: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..source {
        acc = acc.saturating_mul(target as u128);
    }
    acc
}

/// Per-symbol lookup of f^B, dense when small.
pub(crate) struct Lookup<'a, T> {
    b: &'a ValuedStructure<T>,
    dense: Vec<Option<Vec<T>>>,
}

impl<'a, T: Scalar> Lookup<'a, T> {
    pub(crate) fn new(b: &'a ValuedStructure<T>) -> Self {
        let n = b.size();
        let dense = (0..b.signature().len())
            .map(|f| {
                let ar = b.signature().arity(f);
                let size = map_count(ar, n);
                if size > 1 << 20 {
                    return None;
                }
                let mut table = vec![T::zero(); size as usize];
                for (x, v) in b.symbol_values(f) {
                    table[Self::code(n, x)] = v.clone();
                }
                Some(table)
            })
            .collect();
        Lookup { b, dense }
    }

    fn code(n: usize, x: &[usize]) -> usize {
        x.iter().fold(0, |acc, &a| acc * n + a)
    }

    pub(crate) fn get(&self, f: usize, y: &[usize]) -> T {
        match &self.dense[f] {
            Some(t) => t[Self::code(self.b.size(), y)].clone(),
            None => self.b.get(f, y),
        }
    }
}

/// Maximum of val over maps extending `pins` (`None` = free), found by
/// lexicographic enumeration; the witness is the least maximizer.
pub fn opt_with_forced<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    pins: &[Option<usize>],
    cap: u128,
) -> Result<OptResult<T>> {
    a.same_signature(b)?;
    let n = a.size();
    let m = b.size();
    if pins.len() != n {
        return Err(Error::InvalidAssignment("pins must cover the source domain".into()));
    }
    if pins.iter().flatten().any(|&p| p >= m) {
        return Err(Error::InvalidAssignment("pin outside the target".into()));
    }
    let free = pins.iter().filter(|p| p.is_none()).count();
    cap_check("brute-force map count", map_count(free, m), cap)?;
    // tuples charged at the position of their largest element
    let mut at: Vec<Vec<(usize, &Vec<usize>, &T)>> = vec![Vec::new(); n];
    for (f, x, v) in a.tuples() {
        match x.iter().max() {
            Some(&i) => at[i].push((f, x, v)),
            None => at[0].push((f, x, v)),
        }
    }
    let lookup = Lookup::new(b);
    let mut h = vec![0usize; n];
    let mut partial = vec![T::zero(); n + 1];
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut buf = Vec::new();
    // iterative DFS over positions
    let mut i = 0usize;
    let mut started = vec![false; n];
    loop {
        if i == n {
            let v = partial[n].clone();
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, h.clone()));
            }
            if n == 0 {
                break;
            }
            i -= 1;
            continue;
        }
        // advance position i to its next value
        let next = match pins[i] {
            Some(p) => {
                if started[i] {
                    None
                } else {
                    Some(p)
                }
            }
            None => {
                if !started[i] {
                    Some(0)
                } else if h[i] + 1 < m {
                    Some(h[i] + 1)
                } else {
                    None
                }
            }
        };
        match next {
            None => {
                started[i] = false;
                if i == 0 {
                    break;
                }
                i -= 1;
            }
            Some(c) => {
                started[i] = true;
                h[i] = c;
                let mut s = partial[i].clone();
                for (f, x, v) in &at[i] {
                    buf.clear();
                    buf.extend(x.iter().map(|&e| h[e]));
                    let w = lookup.get(*f, &buf);
                    if !w.is_zero() {
                        s = s + (*v).clone() * w;
                    }
                }
                partial[i + 1] = s;
                i += 1;
            }
        }
    }
    let (value, w) = best.expect("at least one map exists");
    Ok(OptResult {
        value,
        witness: Assignment(w),
    })
}

pub fn opt_bruteforce<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
) -> Result<OptResult<T>> {
    opt_with_forced(a, b, &vec![None; a.size()], BRUTEFORCE_CAP)
}

pub fn opt_bruteforce_capped<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    cap: u128,
) -> Result<OptResult<T>> {
    opt_with_forced(a, b, &vec![None; a.size()], cap)
}

struct Prepared<'s, T> {
    bags: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    parent: Vec<usize>,
    order: Vec<usize>,
    charged: Vec<Vec<(usize, &'s Vec<usize>, &'s T)>>,
}

fn prepare<'s, T: Scalar>(
    a: &'s ValuedStructure<T>,
    td: &TreeDecomposition,
) -> Result<Prepared<'s, T>> {
    let nb = td.bags.len();
    let mut tadj = vec![Vec::new(); nb];
    for &(x, y) in &td.edges {
        tadj[x].push(y);
        tadj[y].push(x);
    }
    let mut order = vec![0];
    let mut parent = vec![usize::MAX; nb];
    parent[0] = 0;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        let mut nbrs = tadj[u].clone();
        nbrs.sort_unstable();
        for w in nbrs {
            if parent[w] == usize::MAX {
                parent[w] = u;
                order.push(w);
            }
        }
    }
    let mut children = vec![Vec::new(); nb];
    for &u in order.iter().skip(1) {
        children[parent[u]].push(u);
    }
    let bags: Vec<Vec<usize>> = td
        .bags
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b.dedup();
            b
        })
        .collect();
    let mut charged = vec![Vec::new(); nb];
    for (f, x, v) in a.tuples() {
        let t = order
            .iter()
            .copied()
            .find(|&t| x.iter().all(|e| bags[t].binary_search(e).is_ok()))
            .ok_or_else(|| Error::InvalidDecomposition("tuple support not inside a bag".into()))?;
        charged[t].push((f, x, v));
    }
    Ok(Prepared {
        bags,
        children,
        parent,
        order,
        charged,
    })
}

/// Enumerates assignments of `vars` over `domains` in lexicographic order.
fn for_each_assignment(vars: &[usize], domains: &[Vec<usize>], mut visit: impl FnMut(&[usize])) {
    let k = vars.len();
    if vars.iter().any(|&v| domains[v].is_empty()) {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut vals: Vec<usize> = vars.iter().map(|&v| domains[v][0]).collect();
    loop {
        visit(&vals);
        let mut p = k;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < domains[vars[p]].len() {
                vals[p] = domains[vars[p]][idx[p]];
                break;
            }
            idx[p] = 0;
            vals[p] = domains[vars[p]][0];
        }
    }
}

fn run_dp<T: Scalar>(
    prep: &Prepared<'_, T>,
    b: &ValuedStructure<T>,
    n: usize,
    domains: &[Vec<usize>],
) -> Option<(T, Vec<usize>)> {
    let lookup = Lookup::new(b);
    let nb = prep.bags.len();
    // per bag: table of (assignment, value) in lexicographic order
    let mut tables: Vec<Vec<(Vec<usize>, T)>> = vec![Vec::new(); nb];
    // per child: separator assignment → index of best child row
    let mut best_child: Vec<HashMap<Vec<usize>, usize>> = vec![HashMap::new(); nb];
    let mut full = vec![usize::MAX; n];
    let mut buf = Vec::new();
    for &t in prep.order.iter().rev() {
        let bag = &prep.bags[t];
        let seps: Vec<Vec<usize>> = prep.children[t]
            .iter()
            .map(|&c| {
                prep.bags[c]
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| bag.binary_search(v).is_ok())
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let mut rows = Vec::new();
        for_each_assignment(bag, domains, |s| {
            for (i, &v) in bag.iter().enumerate() {
                full[v] = s[i];
            }
            let mut val = T::zero();
            for (f, x, w) in &prep.charged[t] {
                buf.clear();
                buf.extend(x.iter().map(|&e| full[e]));
                let bv = lookup.get(*f, &buf);
                if !bv.is_zero() {
                    val = val + (*w).clone() * bv;
                }
            }
            for (ci, &c) in prep.children[t].iter().enumerate() {
                let key: Vec<usize> = seps[ci]
                    .iter()
                    .map(|&i| full[prep.bags[c][i]])
                    .collect();
                match best_child[c].get(&key) {
                    Some(&row) => val = val + tables[c][row].1.clone(),
                    None => return,
                }
            }
            rows.push((s.to_vec(), val));
        });
        if rows.is_empty() {
            return None;
        }
        if t != prep.order[0] {
            // index rows by the separator with the parent
            {
                let p = prep.parent[t];
                let pbag = &prep.bags[p];
                let sep: Vec<usize> = bag
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| pbag.binary_search(v).is_ok())
                    .map(|(i, _)| i)
                    .collect();
                let mut map: HashMap<Vec<usize>, usize> = HashMap::new();
                for (ri, (s, v)) in rows.iter().enumerate() {
                    let key: Vec<usize> = sep.iter().map(|&i| s[i]).collect();
                    match map.get(&key) {
                        Some(&old) if rows[old].1 >= *v => {}
                        _ => {
                            map.insert(key, ri);
                        }
                    }
                }
                best_child[t] = map;
            }
        }
        tables[t] = rows;
    }
    let root = prep.order[0];
    let mut bi = 0;
    for (i, (_, v)) in tables[root].iter().enumerate() {
        if *v > tables[root][bi].1 {
            bi = i;
        }
    }
    let value = tables[root][bi].1.clone();
    let mut h = vec![usize::MAX; n];
    let mut stack = vec![(root, bi)];
    while let Some((t, ri)) = stack.pop() {
        let s = &tables[t][ri].0;
        for (i, &v) in prep.bags[t].iter().enumerate() {
            h[v] = s[i];
        }
        for &c in &prep.children[t] {
            let key: Vec<usize> = prep.bags[c]
                .iter()
                .filter(|v| prep.bags[t].binary_search(v).is_ok())
                .map(|&v| h[v])
                .collect();
            stack.push((c, best_child[c][&key]));
        }
    }
    Some((value, h))
}

/// opt via dynamic programming over a tree decomposition of gaifman(A).
/// The witness is the lexicographically least maximizer.
pub fn opt_treedec<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    td: &TreeDecomposition,
) -> Result<OptResult<T>> {
    opt_treedec_pinned(a, b, td, &vec![None; a.size()])
}

pub fn opt_treedec_pinned<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    td: &TreeDecomposition,
    pins: &[Option<usize>],
) -> Result<OptResult<T>> {
    a.same_signature(b)?;
    td.validate(&gaifman(a))?;
    let n = a.size();
    let m = b.size();
    if pins.len() != n || pins.iter().flatten().any(|&p| p >= m) {
        return Err(Error::InvalidAssignment("bad pins".into()));
    }
    let table_total: u128 = td
        .bags
        .iter()
        .map(|bag| map_count(bag.len(), m))
        .fold(0u128, |acc, s| acc.saturating_add(s));
    cap_check("dynamic programming table size", table_total, DP_TABLE_CAP)?;
    let prep = prepare(a, td)?;
    let mut domains: Vec<Vec<usize>> = pins
        .iter()
        .map(|p| match p {
            Some(c) => vec![*c],
            None => (0..m).collect(),
        })
        .collect();
    let (value, _) = run_dp(&prep, b, n, &domains).expect("unpinned search is feasible");
    for i in 0..n {
        if pins[i].is_some() {
            continue;
        }
        for c in 0..m {
            let saved = std::mem::replace(&mut domains[i], vec![c]);
            match run_dp(&prep, b, n, &domains) {
                Some((v, _)) if v == value => break,
                _ => domains[i] = saved,
            }
        }
    }
    let witness = Assignment(domains.iter().map(|d| d[0]).collect());
    debug_assert_eq!(val_unchecked(a, b, &witness), value);
    Ok(OptResult { value, witness })
}

/// opt with the best available decomposition of gaifman(A).
pub fn opt_auto<T: Scalar>(a: &ValuedStructure<T>, b: &ValuedStructure<T>) -> Result<OptResult<T>> {
    let (td, _) = best_decomposition(&gaifman(a));
    opt_treedec(a, b, &td)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{clique, grid, path};
    use crate::graphs::{tree_decomposition, DecompositionMethod};
    use crate::structures::{disjoint_union, graph_structure, val};
    use crate::Rational;

    fn gs(g: crate::graphs::Graph<Rational>) -> ValuedStructure<Rational> {
        graph_structure(&g)
    }

    #[test]
    fn bruteforce_examples() {
        let k2 = gs(clique(2));
        let k3 = gs(clique(3));
        assert_eq!(opt_bruteforce(&k2, &k2).unwrap().value, Rational::from_int(2));
        let r = opt_bruteforce(&k3, &k2).unwrap();
        assert_eq!(r.value, Rational::from_int(4));
        assert_eq!(r.witness, Assignment(vec![0, 0, 1]));
        let l3 = k3.rescale(&Rational::from_int(3)).unwrap();
        assert_eq!(opt_bruteforce(&k3, &l3).unwrap().value, Rational::from_int(18));
        let u = disjoint_union(&[k2.clone(), k2.clone()]).unwrap();
        assert_eq!(opt_bruteforce(&u, &k2).unwrap().value, Rational::from_int(4));
        let big = gs(path(30));
        assert!(matches!(opt_bruteforce(&big, &k2), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn forced_examples() {
        let k3 = gs(clique(3));
        let k2 = gs(clique(2));
        let h = Assignment(vec![1, 0, 1]);
        let pins: Vec<Option<usize>> = h.0.iter().map(|&x| Some(x)).collect();
        let r = opt_with_forced(&k3, &k2, &pins, BRUTEFORCE_CAP).unwrap();
        assert_eq!(r.value, val(&k3, &k2, &h).unwrap());
        let r = opt_with_forced(&k3, &k2, &[Some(0), None, None], BRUTEFORCE_CAP).unwrap();
        assert_eq!(r.value, Rational::from_int(4));
    }

    #[test]
    fn treedec_examples() {
        let k2 = gs(clique(2));
        let g = crate::generators::grid_rect::<Rational>(2, 3);
        let a = gs(g.clone());
        let td = tree_decomposition(&g, DecompositionMethod::MinFill).unwrap();
        let r = opt_treedec(&a, &k2, &td).unwrap();
        assert_eq!(r.value, Rational::from_int(14));
        assert_eq!(r, opt_bruteforce(&a, &k2).unwrap());
        let p4 = gs(path(4));
        assert_eq!(opt_auto(&p4, &k2).unwrap().value, Rational::from_int(6));
        let g3 = grid::<Rational>(2, 3);
        assert_eq!(opt_auto(&gs(g3), &k2).unwrap().value, Rational::from_int(24));
    }

    #[test]
    fn treedec_rejects_invalid() {
        let p = gs(path(3));
        let td = TreeDecomposition {
            bags: vec![vec![0, 1], vec![2]],
            edges: vec![(0, 1)],
        };
        assert!(matches!(
            opt_treedec(&p, &p, &td),
            Err(Error::InvalidDecomposition(_))
        ));
    }
}
