//! Level-k Sherali-Adams relaxation of opt(A, B).
//!
//! One variable λ(X, s) per nonempty X ⊆ A with |X| ≤ k and s: X → B.
//! Sets are ordered colexicographically and maps lexicographically. Each
//! family of local distributions is normalized, and λ(X, ·) is the marginal
//! of λ(Y, ·) whenever Y = X + one element (the other inclusions follow).

use crate::error::{cap_check, Error, Result};
use crate::exact::{map_count, opt_auto};
use crate::graphs::parameter;
use crate::graphs::Param;
use crate::lp::{solve, LinearProgram, LpStatus, Relation, Sense};
use crate::overcast::{verify, Overcast};
use crate::scalar::Scalar;
use crate::structures::{gaifman, ValuedStructure};
use itertools::Itertools;
use std::collections::{BTreeMap, HashMap};

pub const SA_VARIABLE_CAP: u128 = 200_000;

#[derive(Debug, Clone)]
pub struct SaInstance<T> {
    pub level: usize,
    pub target_size: usize,
    /// Nonempty sets in colex order.
    pub sets: Vec<Vec<usize>>,
    /// First variable of each set; the maps of set i are offsets[i]..
    pub offsets: Vec<usize>,
    pub lp: LinearProgram<T>,
}

impl<T: Scalar> SaInstance<T> {
    pub fn set_index(&self, x: &[usize]) -> Option<usize> {
        self.sets.iter().position(|s| s == x)
    }

    /// Variable of λ(X, s) with s listed in the order of X.
    pub fn variable(&self, set: usize, s: &[usize]) -> usize {
        self.offsets[set] + s.iter().fold(0, |acc, &b| acc * self.target_size + b)
    }

    pub fn variable_count(&self) -> usize {
        self.lp.variables.len()
    }
}

fn colex_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (1..=k.min(n))
        .flat_map(|r| (0..n).combinations(r))
        .collect();
    sets.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    sets
}

/// Number of variables of the level-k relaxation.
pub fn sa_variable_count(n: usize, m: usize, k: usize) -> u128 {
    (1..=k.min(n))
        .map(|r| binom(n, r).saturating_mul(map_count(r, m)))
        .fold(0u128, |a, b| a.saturating_add(b))
}

fn binom(n: usize, r: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn build_sa<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    k: usize,
) -> Result<SaInstance<T>> {
    build_sa_capped(a, b, k, SA_VARIABLE_CAP)
}

pub fn build_sa_capped<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    k: usize,
    cap: u128,
) -> Result<SaInstance<T>> {
    a.same_signature(b)?;
    let ar = a.signature().max_arity();
    if k < ar.max(1) {
        return Err(Error::InvalidArgument(format!(
            "level {k} is below the maximum arity {ar}"
        )));
    }
    let n = a.size();
    let m = b.size();
    cap_check("Sherali-Adams variable count", sa_variable_count(n, m, k), cap)?;
    let sets = colex_sets(n, k);
    let index: HashMap<Vec<usize>, usize> =
        sets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut lp = LinearProgram::new(Sense::Max);
    let mut offsets = Vec::with_capacity(sets.len());
    for x in &sets {
        offsets.push(lp.variables.len());
        for s in (0..x.len()).map(|_| 0..m).multi_cartesian_product() {
            let name = format!(
                "l[{}|{}]",
                x.iter().map(|&e| a.element(e)).join(","),
                s.iter().map(|&e| b.element(e)).join(",")
            );
            lp.add_variable(name, true);
        }
    }
    let var = |set: usize, s: &[usize]| offsets[set] + s.iter().fold(0, |acc, &c| acc * m + c);
    for (i, x) in sets.iter().enumerate() {
        let count = m.pow(x.len() as u32);
        lp.add_constraint(
            (0..count).map(|j| (offsets[i] + j, T::one())).collect(),
            Relation::Eq,
            T::one(),
        );
    }
    for (yi, y) in sets.iter().enumerate() {
        if y.len() < 2 {
            continue;
        }
        for drop in 0..y.len() {
            let mut x = y.clone();
            x.remove(drop);
            let xi = index[&x];
            for s in (0..x.len()).map(|_| 0..m).multi_cartesian_product() {
                let mut row = vec![(var(xi, &s), T::one())];
                for c in 0..m {
                    let mut t = s.clone();
                    t.insert(drop, c);
                    row.push((var(yi, &t), -T::one()));
                }
                row.sort_by_key(|(j, _)| *j);
                lp.add_constraint(row, Relation::Eq, T::zero());
            }
        }
    }
    let mut obj: BTreeMap<usize, T> = BTreeMap::new();
    for (f, x, w) in a.tuples() {
        let support: Vec<usize> = x.iter().copied().sorted().dedup().collect();
        let si = index[&support];
        for s in (0..support.len()).map(|_| 0..m).multi_cartesian_product() {
            let y: Vec<usize> = x
                .iter()
                .map(|e| s[support.binary_search(e).unwrap()])
                .collect();
            let bv = b.get(f, &y);
            if bv.is_zero() {
                continue;
            }
            let e = obj.entry(var(si, &s)).or_insert_with(T::zero);
            *e = e.clone() + w.clone() * bv;
        }
    }
    lp.objective = obj.into_iter().filter(|(_, v)| !v.is_zero()).collect();
    Ok(SaInstance {
        level: k,
        target_size: m,
        sets,
        offsets,
        lp,
    })
}

/// Upper bound Σ_x f^A(x)·max_s f^B(s(x)) on every level, the value of the
/// relaxation when each tuple picks its best local map.
pub fn local_upper_bound<T: Scalar>(a: &ValuedStructure<T>, b: &ValuedStructure<T>) -> T {
    let m = b.size();
    let mut total = T::zero();
    for (f, x, w) in a.tuples() {
        let support: Vec<usize> = x.iter().copied().sorted().dedup().collect();
        let mut best = T::zero();
        for s in (0..support.len()).map(|_| 0..m).multi_cartesian_product() {
            let y: Vec<usize> = x
                .iter()
                .map(|e| s[support.binary_search(e).unwrap()])
                .collect();
            best = T::max_of(best, b.get(f, &y));
        }
        total = total + w.clone() * best;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaMethod {
    /// Certified shortcut when opt meets the local upper bound, else the LP.
    Auto,
    Lp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaValue<T> {
    pub value: T,
    pub level: usize,
    /// Solved by simplex (false: closed by opt = local upper bound).
    pub by_lp: bool,
    pub variables: u128,
}

pub fn opt_sa<T: Scalar>(a: &ValuedStructure<T>, b: &ValuedStructure<T>, k: usize) -> Result<T> {
    Ok(opt_sa_with(a, b, k, SaMethod::Auto)?.value)
}

pub fn opt_sa_with<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    k: usize,
    method: SaMethod,
) -> Result<SaValue<T>> {
    a.same_signature(b)?;
    let ar = a.signature().max_arity();
    if k < ar.max(1) {
        return Err(Error::InvalidArgument(format!(
            "level {k} is below the maximum arity {ar}"
        )));
    }
    let variables = sa_variable_count(a.size(), b.size(), k);
    if method == SaMethod::Auto {
        // opt ≤ opt_sa ≤ local bound; equality of the ends closes the gap
        let ub = local_upper_bound(a, b);
        if let Ok(r) = opt_auto(a, b) {
            if r.value == ub {
                return Ok(SaValue {
                    value: ub,
                    level: k,
                    by_lp: false,
                    variables,
                });
            }
        }
    }
    let inst = build_sa(a, b, k)?;
    let out = solve(&inst.lp)?;
    match out.status {
        LpStatus::Optimal => {
            let x = out.primal.as_ref().unwrap();
            let y = out.dual.as_ref().unwrap();
            if !inst.lp.verify_optimal(x, y) {
                return Err(Error::Lp("optimality certificate failed".into()));
            }
            Ok(SaValue {
                value: out.objective.unwrap(),
                level: k,
                by_lp: true,
                variables,
            })
        }
        s => Err(Error::Lp(format!("relaxation reported {s:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactnessReport<T> {
    pub treewidth: usize,
    pub treewidth_exact: bool,
    pub threshold: usize,
    pub opt: T,
    /// (level, value) from the maximum arity up to the threshold.
    pub values: Vec<(usize, T)>,
    pub least_exact_level: Option<usize>,
}

impl<T: Scalar> ExactnessReport<T> {
    pub fn exact_at_threshold(&self) -> bool {
        self.values
            .iter()
            .any(|(k, v)| *k == self.threshold && *v == self.opt)
    }
}

/// Compares opt_sa with opt on every level up to tw(A) + 1.
pub fn sa_exactness_check<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
) -> Result<ExactnessReport<T>> {
    let tw = parameter(&gaifman(a), Param::Tw);
    let lo = a.signature().max_arity().max(1);
    let threshold = (tw.value + 1).max(lo);
    let opt = opt_auto(a, b)?.value;
    let mut values = Vec::new();
    let mut least = None;
    for k in lo..=threshold {
        let v = opt_sa_with(a, b, k, SaMethod::Lp)?.value;
        if least.is_none() && v == opt {
            least = Some(k);
        }
        values.push((k, v));
    }
    Ok(ExactnessReport {
        treewidth: tw.value,
        treewidth_exact: tw.exact,
        threshold,
        opt,
        values,
        least_exact_level: least,
    })
}

/// With a verified overcast A → B, checks opt_sa(A,C,k) ≥ opt_sa(B,C,k) for
/// each C. Returns the per-C pairs; an Err means ω did not verify.
pub fn sa_dominance_check<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    k: usize,
    omega: &Overcast<T>,
    cs: &[ValuedStructure<T>],
) -> Result<Vec<(T, T)>> {
    if !verify(omega, a, b)?.holds() {
        return Err(Error::Verification("overcast does not verify".into()));
    }
    cs.iter()
        .map(|c| {
            Ok((
                opt_sa_with(a, c, k, SaMethod::Lp)?.value,
                opt_sa_with(b, c, k, SaMethod::Lp)?.value,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{as_structure, clique, path};
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn variable_and_row_counts() {
        let k2 = as_structure(&clique::<Rational>(2));
        let inst = build_sa(&k2, &k2, 2).unwrap();
        assert_eq!(inst.sets, vec![vec![0], vec![1], vec![0, 1]]);
        assert_eq!(inst.variable_count(), 8);
        assert_eq!(inst.lp.constraints.len(), 3 + 2 * 2);
        let zero = k2.rescale(&q(0)).unwrap();
        assert!(build_sa(&k2, &zero, 2).unwrap().lp.objective.is_empty());
        assert!(build_sa(&k2, &k2, 1).is_err());
    }

    #[test]
    fn colex_order() {
        let s = colex_sets(3, 3);
        assert_eq!(
            s,
            vec![vec![0], vec![1], vec![0, 1], vec![2], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
        );
    }

    #[test]
    fn level_gap_on_triangle() {
        let k3 = as_structure(&clique::<Rational>(3));
        let k2 = as_structure(&clique::<Rational>(2));
        assert_eq!(opt_sa_with(&k3, &k2, 2, SaMethod::Lp).unwrap().value, q(6));
        assert_eq!(opt_sa_with(&k3, &k2, 3, SaMethod::Lp).unwrap().value, q(4));
        assert_eq!(opt_sa(&k2, &k2, 2).unwrap(), q(2));
    }

    #[test]
    fn exactness_reports() {
        let k3 = as_structure(&clique::<Rational>(3));
        let k2 = as_structure(&clique::<Rational>(2));
        let r = sa_exactness_check(&k3, &k2).unwrap();
        assert_eq!(r.threshold, 3);
        assert_eq!(r.least_exact_level, Some(3));
        assert_eq!(r.values, vec![(2, q(6)), (3, q(4))]);
        let p4 = as_structure(&path::<Rational>(4));
        let r = sa_exactness_check(&p4, &k2).unwrap();
        assert_eq!(r.least_exact_level, Some(2));
        assert!(r.exact_at_threshold());
    }

    #[test]
    fn shortcut_agrees_with_lp() {
        let p4 = as_structure(&path::<Rational>(4));
        let k3 = as_structure(&clique::<Rational>(3));
        let fast = opt_sa_with(&p4, &k3, 2, SaMethod::Auto).unwrap();
        let slow = opt_sa_with(&p4, &k3, 2, SaMethod::Lp).unwrap();
        assert!(!fast.by_lp && slow.by_lp);
        assert_eq!(fast.value, slow.value);
    }
}
