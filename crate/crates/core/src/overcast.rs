//! Overcasts: distributions over maps A → B whose expected pullback covers
//! every tuple of B.

use crate::error::{cap_check, Error, Result};
use crate::exact::{map_count, opt_auto};
use crate::lp::{check_farkas_variant, FarkasSystem, FarkasVariant, FarkasWitness};
use crate::scalar::{from_usize, Scalar};
use crate::structures::{
    edit_distance_under, gaifman, Assignment, Distance, ValuedStructure,
};
use itertools::Itertools;
use std::collections::BTreeMap;

pub const OVERCAST_MAP_CAP: u128 = 100_000;
pub const COMPOSE_CAP: u128 = 1_000_000;
pub const EDIT_SUPPORT_CAP: u128 = 1_000_000;

/// Finite distribution over maps, kept in canonical form: sorted by map,
/// duplicates merged, no zero entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overcast<T> {
    support: Vec<(Assignment, T)>,
}

impl<T: Scalar> Overcast<T> {
    pub fn new(entries: Vec<(Assignment, T)>) -> Result<Self> {
        let mut merged: BTreeMap<Assignment, T> = BTreeMap::new();
        for (g, p) in entries {
            if p.is_negative() {
                return Err(Error::Negative(format!("probability {p}")));
            }
            let e = merged.entry(g).or_insert_with(T::zero);
            *e = e.clone() + p;
        }
        let support: Vec<(Assignment, T)> =
            merged.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let total = support.iter().fold(T::zero(), |a, (_, p)| a + p.clone());
        if total != T::one() {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let n = support[0].0.len();
        if support.iter().any(|(g, _)| g.len() != n) {
            return Err(Error::InvalidAssignment("support maps differ in length".into()));
        }
        Ok(Overcast { support })
    }

    pub fn point(g: Assignment) -> Self {
        Overcast {
            support: vec![(g, T::one())],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::point(Assignment::identity(n))
    }

    /// Uniform distribution over the given maps (repetitions add weight).
    pub fn uniform(maps: Vec<Assignment>) -> Result<Self> {
        let k = from_usize::<T>(maps.len());
        Self::new(maps.into_iter().map(|g| (g, T::one() / k.clone())).collect())
    }

    pub fn support(&self) -> &[(Assignment, T)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn source_size(&self) -> usize {
        self.support[0].0.len()
    }

    pub fn probability(&self, g: &Assignment) -> T {
        self.support
            .binary_search_by(|(h, _)| h.cmp(g))
            .map(|i| self.support[i].1.clone())
            .unwrap_or_else(|_| T::zero())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleSlack<T> {
    pub symbol: usize,
    pub tuple: Vec<usize>,
    pub required: T,
    pub covered: T,
}

impl<T: Scalar> TupleSlack<T> {
    pub fn slack(&self) -> T {
        self.covered.clone() - self.required.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport<T> {
    pub factor: T,
    pub tuples: Vec<TupleSlack<T>>,
}

impl<T: Scalar> CoverageReport<T> {
    pub fn holds(&self) -> bool {
        self.tuples.iter().all(|t| t.covered >= t.required)
    }

    pub fn failing(&self) -> Vec<&TupleSlack<T>> {
        self.tuples.iter().filter(|t| t.covered < t.required).collect()
    }

    /// Minimum slack over the tuples of B; `None` if B has no tuples.
    pub fn min_slack(&self) -> Option<T> {
        self.tuples.iter().map(|t| t.slack()).min()
    }

    pub fn zero_slack(&self) -> bool {
        self.tuples.iter().all(|t| t.covered == t.required)
    }
}

/// Expected pullback E_g f^A(g⁻¹(y)) for every positive tuple y of B.
pub fn coverage<T: Scalar>(
    omega: &Overcast<T>,
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
) -> Result<Vec<BTreeMap<Vec<usize>, T>>> {
    a.same_signature(b)?;
    let mut cov: Vec<BTreeMap<Vec<usize>, T>> = (0..b.signature().len())
        .map(|f| {
            b.symbol_values(f)
                .keys()
                .map(|y| (y.clone(), T::zero()))
                .collect()
        })
        .collect();
    for (g, p) in &omega.support {
        g.check(a.size(), b.size())?;
        for (f, x, v) in a.tuples() {
            let y = g.apply(x);
            if let Some(e) = cov[f].get_mut(&y) {
                *e = e.clone() + p.clone() * v.clone();
            }
        }
    }
    Ok(cov)
}

/// Checks ω against `factor`·B, reporting the slack of every tuple.
pub fn verify_scaled<T: Scalar>(
    omega: &Overcast<T>,
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    factor: &T,
) -> Result<CoverageReport<T>> {
    let cov = coverage(omega, a, b)?;
    let mut tuples = Vec::new();
    for (f, m) in cov.into_iter().enumerate() {
        for (y, covered) in m {
            let required = factor.clone() * b.get(f, &y);
            tuples.push(TupleSlack {
                symbol: f,
                tuple: y,
                required,
                covered,
            });
        }
    }
    Ok(CoverageReport {
        factor: factor.clone(),
        tuples,
    })
}

pub fn verify<T: Scalar>(
    omega: &Overcast<T>,
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
) -> Result<CoverageReport<T>> {
    verify_scaled(omega, a, b, &T::one())
}

/// Structure C on the domain of B with opt(A, C) < opt(B, C).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OvercastCertificate<T> {
    pub c: ValuedStructure<T>,
    pub opt_a: T,
    pub opt_b: T,
}

impl<T: Scalar> OvercastCertificate<T> {
    pub fn gap(&self) -> T {
        self.opt_b.clone() - self.opt_a.clone()
    }

    /// Recomputes both optima exactly.
    pub fn verify(&self, a: &ValuedStructure<T>, b: &ValuedStructure<T>) -> Result<bool> {
        let oa = opt_auto(a, &self.c)?.value;
        let ob = opt_auto(b, &self.c)?.value;
        Ok(oa == self.opt_a && ob == self.opt_b && oa < ob)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OvercastOutcome<T> {
    Overcast(Overcast<T>),
    Certificate(OvercastCertificate<T>),
}

fn all_maps(n: usize, m: usize) -> impl Iterator<Item = Assignment> {
    (0..n)
        .map(move |_| 0..m)
        .multi_cartesian_product()
        .map(Assignment)
        .chain(if n == 0 { Some(Assignment(vec![])) } else { None })
}

/// Decides whether an overcast from A to B exists. One LP column per map
/// B^A; the infeasible side yields the certificate structure.
pub fn overcast_find<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    cap: u128,
) -> Result<OvercastOutcome<T>> {
    a.same_signature(b)?;
    let ncols = map_count(a.size(), b.size());
    cap_check("overcast map count", ncols, cap)?;
    let rows_index: Vec<(usize, Vec<usize>)> =
        b.tuples().map(|(f, y, _)| (f, y.clone())).collect();
    let pos: BTreeMap<(usize, Vec<usize>), usize> = rows_index
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows_index.len()];
    let maps: Vec<Assignment> = all_maps(a.size(), b.size()).collect();
    for (j, g) in maps.iter().enumerate() {
        for (f, m) in a.pushforward(g).into_iter().enumerate() {
            for (y, v) in m {
                if let Some(&r) = pos.get(&(f, y)) {
                    rows[r].push((j, v));
                }
            }
        }
    }
    let rhs: Vec<T> = rows_index.iter().map(|(f, y)| b.get(*f, y)).collect();
    let sys = FarkasSystem {
        ncols: maps.len(),
        rows,
        b: rhs,
    };
    match check_farkas_variant(&sys, FarkasVariant::One)? {
        FarkasWitness::Primal(x) => {
            let entries = maps
                .into_iter()
                .zip(x)
                .filter(|(_, p)| !p.is_zero())
                .collect();
            let omega = Overcast::new(entries)?;
            if !verify(&omega, a, b)?.holds() {
                return Err(Error::Verification("overcast from the LP fails coverage".into()));
            }
            Ok(OvercastOutcome::Overcast(omega))
        }
        FarkasWitness::Dual(y) => {
            let mut c = ValuedStructure::new(b.signature().clone(), b.domain().to_vec())?;
            for ((f, t), w) in rows_index.into_iter().zip(y) {
                c.set(f, t, w)?;
            }
            let opt_a = opt_auto(a, &c)?.value;
            let opt_b = opt_auto(b, &c)?.value;
            if opt_a >= opt_b {
                return Err(Error::Verification("certificate does not separate".into()));
            }
            Ok(OvercastOutcome::Certificate(OvercastCertificate { c, opt_a, opt_b }))
        }
    }
}

/// Overcast to `factor`·B, or a certificate against it.
pub fn overcast_find_scaled<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    factor: &T,
    cap: u128,
) -> Result<OvercastOutcome<T>> {
    overcast_find(a, &b.rescale(factor)?, cap)
}

/// ω2 ∘ ω1: the distribution of g2∘g1 with probability ω1(g1)·ω2(g2).
pub fn compose<T: Scalar>(w1: &Overcast<T>, w2: &Overcast<T>, cap: u128) -> Result<Overcast<T>> {
    let size = (w1.len() as u128).saturating_mul(w2.len() as u128);
    cap_check("composed support", size, cap)?;
    let mid = w2.source_size();
    if w1.support.iter().any(|(g, _)| g.0.iter().any(|&b| b >= mid)) {
        return Err(Error::InvalidAssignment("overcasts do not chain".into()));
    }
    let mut entries = Vec::with_capacity(size as usize);
    for (g1, p1) in &w1.support {
        for (g2, p2) in &w2.support {
            entries.push((g1.then(g2), p1.clone() * p2.clone()));
        }
    }
    Overcast::new(entries)
}

/// 1/(1+ε), a rational lower bound for e^{−ε}.
pub fn surrogate<T: Scalar>(eps: &T) -> T {
    T::one() / (T::one() + eps.clone())
}

/// Both-way overcasts at the surrogate factor for one ε.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptDistanceBound<T> {
    pub epsilon: T,
    pub factor: T,
    pub forward: Overcast<T>,
    pub backward: Overcast<T>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceReport<T> {
    /// Per ε: the accepted bound, or the side(s) that failed with their
    /// certificates.
    pub results: Vec<(T, Result<OptDistanceBound<T>>)>,
}

impl<T: Scalar> DistanceReport<T> {
    pub fn least_accepted(&self) -> Option<&OptDistanceBound<T>> {
        self.results
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok())
            .min_by(|x, y| x.epsilon.cmp(&y.epsilon))
    }
}

/// Tests d_opt(A, B) ≤ ε for each ε via overcasts A → r·B and B → r·A with
/// r = 1/(1+ε) ≤ e^{−ε}.
pub fn opt_distance_bound<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    epsilons: &[T],
    cap: u128,
) -> Result<DistanceReport<T>> {
    let mut results = Vec::new();
    for eps in epsilons {
        if eps.is_negative() {
            return Err(Error::Negative(format!("epsilon {eps}")));
        }
        let r = surrogate(eps);
        let fw = overcast_find_scaled(a, b, &r, cap)?;
        let bw = overcast_find_scaled(b, a, &r, cap)?;
        let res = match (fw, bw) {
            (OvercastOutcome::Overcast(forward), OvercastOutcome::Overcast(backward)) => {
                Ok(OptDistanceBound {
                    epsilon: eps.clone(),
                    factor: r,
                    forward,
                    backward,
                })
            }
            (OvercastOutcome::Certificate(c), _) => Err(Error::Verification(format!(
                "no overcast A -> {}B: opt(A,C) = {} < {} = opt(rB,C)",
                r, c.opt_a, c.opt_b
            ))),
            (_, OvercastOutcome::Certificate(c)) => Err(Error::Verification(format!(
                "no overcast B -> {}A: opt(B,C) = {} < {} = opt(rA,C)",
                r, c.opt_a, c.opt_b
            ))),
        };
        results.push((eps.clone(), res));
    }
    Ok(DistanceReport { results })
}

/// Checks a claimed bound: both overcasts verify at its factor.
pub fn check_distance_bound<T: Scalar>(
    bound: &OptDistanceBound<T>,
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
) -> Result<bool> {
    Ok(bound.factor <= surrogate(&bound.epsilon)
        && verify_scaled(&bound.forward, a, b, &bound.factor)?.holds()
        && verify_scaled(&bound.backward, b, a, &bound.factor)?.holds())
}

/// Overcast from A to (1−δ)B built from a bijection φ and per-tuple
/// collapses, δ = Cd/(1+Cd) with C = max ar^ar and d the edit distance
/// under φ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditOvercast<T> {
    pub phi: Assignment,
    pub edit_distance: T,
    pub delta: T,
    pub omega: Overcast<T>,
}

/// Greedy proper coloring of gaifman(A); tuples of a clean structure see
/// pairwise distinct colors.
fn rainbow_labels<T: Scalar>(a: &ValuedStructure<T>) -> (Vec<usize>, usize) {
    let g = gaifman(a);
    let mut label = vec![usize::MAX; a.size()];
    let mut used = 0;
    for v in 0..a.size() {
        let taken: Vec<usize> = g.neighbors(v).iter().map(|&u| label[u]).collect();
        let c = (0..).find(|c| !taken.contains(c)).unwrap();
        label[v] = c;
        used = used.max(c + 1);
    }
    (label, used.max(1))
}

pub fn edit_overcast<T: Scalar>(
    a: &ValuedStructure<T>,
    b: &ValuedStructure<T>,
    phi: Option<&Assignment>,
) -> Result<EditOvercast<T>> {
    a.same_signature(b)?;
    if !a.is_clean() || !b.is_clean() {
        return Err(Error::NotClean("edit overcast needs clean structures".into()));
    }
    if a.size() != b.size() {
        return Err(Error::InvalidArgument("edit overcast needs equal sizes".into()));
    }
    let phi = match phi {
        Some(p) => p.clone(),
        None => {
            cap_check("bijection enumeration domain", a.size() as u128, 8)?;
            let mut best: Option<(T, Assignment)> = None;
            for perm in (0..a.size()).permutations(a.size()) {
                let p = Assignment(perm);
                if let Distance::Finite(d) = edit_distance_under(a, b, &p)? {
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((d, p));
                    }
                }
            }
            match best {
                Some((_, p)) => p,
                None => return Err(Error::InvalidArgument("edit distance is infinite".into())),
            }
        }
    };
    let d = match edit_distance_under(a, b, &phi)? {
        Distance::Finite(d) => d,
        Distance::Infinite => {
            return Err(Error::InvalidArgument("edit distance is infinite".into()))
        }
    };
    let cs = from_usize::<T>(a.signature().collapse_constant() as usize);
    let cd = cs * d.clone();
    let delta = cd.clone() / (T::one() + cd);
    if d.is_zero() {
        return Ok(EditOvercast {
            phi: phi.clone(),
            edit_distance: d,
            delta,
            omega: Overcast::point(phi),
        });
    }
    // per-tuple contribution to d, over tuples of B
    let mut inv = vec![0usize; a.size()];
    for (i, &j) in phi.0.iter().enumerate() {
        inv[j] = i;
    }
    let inv = Assignment(inv);
    let (labels, m) = rainbow_labels(a);
    let mut support_size: u128 = 1;
    let mut entries = vec![(phi.clone(), T::one() - delta.clone())];
    // tuples positive on either side, in B coordinates
    let mut keys: Vec<(usize, Vec<usize>)> = b.tuples().map(|(f, y, _)| (f, y.clone())).collect();
    keys.extend(a.tuples().map(|(f, x, _)| (f, phi.apply(x))));
    keys.sort();
    keys.dedup();
    for (f, y) in &keys {
        let (f, y) = (*f, y);
        let diff = (b.get(f, y) - a.get(f, &inv.apply(y))).abs();
        if diff.is_zero() {
            continue;
        }
        let norm = T::min_of(a.norm1_symbol(f), b.norm1_symbol(f));
        let weight = delta.clone() * diff / norm / d.clone();
        let ar = y.len();
        let count = map_count(m, ar);
        support_size = support_size.saturating_add(count);
        cap_check("edit overcast support", support_size, EDIT_SUPPORT_CAP)?;
        let p = weight / from_usize::<T>(count as usize);
        // element a goes to y[c(label(a))] for each c: [m] → [ar]
        for c in (0..m).map(|_| 0..ar).multi_cartesian_product() {
            let g = Assignment(labels.iter().map(|&l| y[c[l]]).collect());
            entries.push((g, p.clone()));
        }
    }
    Ok(EditOvercast {
        phi,
        edit_distance: d,
        delta,
        omega: Overcast::new(entries)?,
    })
}
