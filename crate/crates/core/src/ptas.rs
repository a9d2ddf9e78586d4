//! Approximation drivers: value bounds through Sherali-Adams on a structure
//! with a bounded-treewidth neighbour, and Baker-style solution finding
//! from an explicit vertex modulator.

use crate::error::{Error, Result};
use crate::exact::opt_treedec;
use crate::fragility::{FractionalModulator, ModulatorKind, PliableWitness};
use crate::graphs::best_decomposition;
use crate::overcast::{surrogate, verify_scaled, Overcast};
use crate::relax::{local_upper_bound, opt_sa};
use crate::scalar::{from_usize, Scalar};
use crate::structures::{gaifman, val, Assignment, ValuedStructure};
use itertools::Itertools;

/// B with overcasts A → s·B and B → s′·A.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighbourWitness<T> {
    pub b: ValuedStructure<T>,
    pub forward: Overcast<T>,
    pub forward_factor: T,
    pub backward: Overcast<T>,
    pub backward_factor: T,
}

impl<T: Scalar> NeighbourWitness<T> {
    /// B = A with identity maps both ways.
    pub fn trivial(a: &ValuedStructure<T>) -> Self {
        NeighbourWitness {
            b: a.clone(),
            forward: Overcast::identity(a.size()),
            forward_factor: T::one(),
            backward: Overcast::identity(a.size()),
            backward_factor: T::one(),
        }
    }
}

impl<T: Scalar> From<PliableWitness<T>> for NeighbourWitness<T> {
    fn from(w: PliableWitness<T>) -> Self {
        NeighbourWitness {
            b: w.b,
            forward: w.omega,
            forward_factor: T::one(),
            backward: w.omega_prime,
            backward_factor: w.factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtasReport<T> {
    pub lower: T,
    pub upper: T,
    /// upper/lower, certified: value mode gives 1/(s·s′) ≤ (1+ε)².
    pub ratio: T,
    /// SA level in value mode; one more than the widest residual
    /// decomposition in constructive mode.
    pub level: usize,
    pub witness: Option<Assignment>,
    /// Index of the winning support set (constructive mode).
    pub chosen: Option<usize>,
}

/// opt(A,C) ≤ opt_sa(A,C,tw(B)+1) ≤ opt(A,C)/(s·s′). Both factors must be
/// at least 1/(1+ε) and both overcasts must verify.
pub fn ptas_value<T: Scalar>(
    a: &ValuedStructure<T>,
    c: &ValuedStructure<T>,
    eps: &T,
    w: &NeighbourWitness<T>,
) -> Result<PtasReport<T>> {
    if eps.is_negative() {
        return Err(Error::InvalidArgument("epsilon must be nonnegative".into()));
    }
    let s = surrogate(eps);
    if w.forward_factor < s || w.backward_factor < s {
        return Err(Error::Verification(format!(
            "witness factors {} and {} are below 1/(1+{eps})",
            w.forward_factor, w.backward_factor
        )));
    }
    if !verify_scaled(&w.forward, a, &w.b, &w.forward_factor)?.holds() {
        return Err(Error::Verification("A -> s*B fails".into()));
    }
    if !verify_scaled(&w.backward, &w.b, a, &w.backward_factor)?.holds() {
        return Err(Error::Verification("B -> s'*A fails".into()));
    }
    let (td, _) = best_decomposition(&gaifman(&w.b));
    let level = (td.width() + 1).max(a.signature().max_arity()).max(1);
    let upper = opt_sa(a, c, level)?;
    let product = w.forward_factor.clone() * w.backward_factor.clone();
    Ok(PtasReport {
        lower: upper.clone() * product.clone(),
        upper,
        ratio: T::one() / product,
        level,
        witness: None,
        chosen: None,
    })
}

/// Best value of `v` given the assigned elements, counting only tuples
/// that become fully assigned.
fn greedy_extend<T: Scalar>(
    a: &ValuedStructure<T>,
    c: &ValuedStructure<T>,
    h: &mut [Option<usize>],
    order: &[usize],
) {
    let mut touching: Vec<Vec<(usize, Vec<usize>, T)>> = vec![Vec::new(); a.size()];
    for (f, x, v) in a.tuples() {
        for e in x.iter().copied().unique() {
            touching[e].push((f, x.clone(), v.clone()));
        }
    }
    for &v in order {
        let mut best = (T::zero(), 0);
        for col in 0..c.size() {
            h[v] = Some(col);
            let mut score = T::zero();
            for (f, x, w) in &touching[v] {
                if let Some(y) = x.iter().map(|&e| h[e]).collect::<Option<Vec<_>>>() {
                    score = score + w.clone() * c.get(*f, &y);
                }
            }
            if score > best.0 {
                best = (score, col);
            }
        }
        h[v] = Some(best.1);
    }
}

/// For every support set X: A − X solved exactly, X filled in greedily.
/// The best assignment satisfies val ≥ (1 − rθ)·opt with r the widest tuple
/// and θ the thinness.
pub fn ptas_constructive<T: Scalar>(
    a: &ValuedStructure<T>,
    c: &ValuedStructure<T>,
    pi: &FractionalModulator<T>,
) -> Result<PtasReport<T>> {
    a.same_signature(c)?;
    if pi.kind != ModulatorKind::Vertex {
        return Err(Error::InvalidModulator("expected a vertex modulator".into()));
    }
    if c.size() == 0 {
        return Err(Error::InvalidArgument("empty target structure".into()));
    }
    let n = a.size();
    let mut best: Option<(T, Assignment, usize)> = None;
    let mut widest = 0;
    for (idx, (x, _)) in pi.support().iter().enumerate() {
        if x.iter().any(|&v| v >= n) {
            return Err(Error::InvalidModulator(format!("support set {idx} leaves the domain")));
        }
        let keep: Vec<usize> = (0..n).filter(|v| !x.contains(v)).collect();
        let mut h = vec![None; n];
        if !keep.is_empty() {
            let rest = a.induced(&keep)?;
            let (td, _) = best_decomposition(&gaifman(&rest));
            widest = widest.max(td.width() + 1);
            let r = opt_treedec(&rest, c, &td)?;
            for (i, &v) in keep.iter().enumerate() {
                h[v] = Some(r.witness.0[i]);
            }
        }
        let mut order = x.clone();
        order.sort_unstable();
        order.dedup();
        greedy_extend(a, c, &mut h, &order);
        let g = Assignment(h.into_iter().map(|e| e.unwrap()).collect());
        let v = val(a, c, &g)?;
        if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
            best = Some((v, g, idx));
        }
    }
    let (lower, witness, chosen) =
        best.ok_or_else(|| Error::InvalidModulator("empty support".into()))?;
    let r = a.tuples().map(|(_, x, _)| x.iter().unique().count()).max().unwrap_or(0);
    let keep = T::one() - from_usize::<T>(r) * pi.thinness(n);
    let mut upper = local_upper_bound(a, c);
    if keep.is_positive() {
        upper = T::min_of(upper, lower.clone() / keep);
    }
    let ratio = if lower.is_positive() { upper.clone() / lower.clone() } else { T::one() };
    Ok(PtasReport {
        lower,
        upper,
        ratio,
        level: widest,
        witness: Some(witness),
        chosen: Some(chosen),
    })
}
