//! Reductions that keep opt-distance small: merging parallel components,
//! vector rounding, component-size and treedepth compression, pack/unpack.

use crate::error::{Error, Result};
use crate::graphs::treedepth_root;
use crate::overcast::{compose, edit_overcast, surrogate, verify_scaled, Overcast, COMPOSE_CAP};
use crate::scalar::{from_usize, Scalar};
use crate::structures::{disjoint_union, gaifman, Assignment, Signature, ValuedStructure};
use itertools::Itertools;
use num_bigint::BigUint;
use std::collections::BTreeMap;

/// Components up to this size are matched up to any bijection; larger ones
/// only in element order.
pub const MATCH_PERMUTATION_CAP: usize = 6;

/// Joint distribution with the given marginals, coupled through a shared
/// uniform variable. Each part lists (choice, probability) summing to 1.
pub(crate) fn quantile_couple<T: Scalar, X: Clone>(parts: &[Vec<(X, T)>]) -> Vec<(Vec<X>, T)> {
    let mut cuts = vec![T::zero()];
    let cums: Vec<Vec<T>> = parts
        .iter()
        .map(|p| {
            p.iter()
                .scan(T::zero(), |acc, (_, q)| {
                    *acc = acc.clone() + q.clone();
                    Some(acc.clone())
                })
                .collect()
        })
        .collect();
    for c in &cums {
        cuts.extend(c.iter().cloned());
    }
    cuts.sort();
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let pick = parts
            .iter()
            .zip(&cums)
            .map(|(p, c)| {
                let i = c.iter().position(|x| x > lo).unwrap_or(p.len() - 1);
                p[i].0.clone()
            })
            .collect();
        out.push((pick, hi.clone() - lo.clone()));
    }
    if out.is_empty() {
        out.push((parts.iter().map(|p| p[0].0.clone()).collect(), T::one()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundedVectors<T> {
    pub vectors: Vec<Vec<T>>,
    /// Distinct vectors up to positive rescaling, the zero vector included.
    pub classes: usize,
    /// Recursive bound on the class count for this dimension and ε.
    pub class_bound: BigUint,
}

/// ⌊log₂ x⌋ for x ≥ 1.
fn floor_log2<T: Scalar>(x: &T) -> u64 {
    let (n, d) = x.to_bigints();
    let mut m = n.bits().saturating_sub(d.bits());
    while (d.clone() << m) > n && m > 0 {
        m -= 1;
    }
    while (d.clone() << (m + 1)) <= n {
        m += 1;
    }
    m
}

fn ceil_int<T: Scalar>(x: &T) -> u64 {
    use num_traits::ToPrimitive;
    let f = x.floor_int();
    let c = if T::from_bigint(&f) == *x { f } else { f + 1 };
    c.to_u64().expect("grid size out of range")
}

/// Rounding grid 2^m·(1 + i/M), 0 ≤ i < M with M = ⌈3/ε⌉; neighbours are
/// within a factor 1 + ε/3.
fn grid_size<T: Scalar>(eps: &T) -> u64 {
    ceil_int(&(from_usize::<T>(3) / eps.clone()))
}

/// Largest grid point ≤ t, for t ≥ 1.
fn grid_floor<T: Scalar>(t: &T, m_div: u64) -> T {
    let m = floor_log2(t);
    let p = T::from_bigint(&(num_bigint::BigInt::from(1) << m));
    let frac = t.clone() / p.clone() - T::one();
    let md = T::from_bigint(&num_bigint::BigInt::from(m_div));
    let i = (frac * md.clone()).floor_int();
    p * (T::one() + T::from_bigint(&i) / md)
}

/// Class-count bound: 2 for one coordinate, else
/// (2 + K)^{d−1} + bound(d−1, ε/3) where K = M·(⌊log₂(3d/ε²)⌋ + 1) counts
/// the grid points below the spread 3d/ε².
pub fn class_bound<T: Scalar>(d: usize, eps: &T) -> BigUint {
    match d {
        0 => BigUint::from(1u32),
        1 => BigUint::from(2u32),
        _ => {
            let three = from_usize::<T>(3);
            let spread = three.clone() * from_usize::<T>(d) / (eps.clone() * eps.clone());
            let k = BigUint::from(grid_size(eps)) * BigUint::from(floor_log2(&spread) + 1);
            (k + 2u32).pow((d - 1) as u32) + class_bound(d - 1, &(eps.clone() / three))
        }
    }
}

fn count_classes<T: Scalar>(vs: &[Vec<T>]) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for v in vs {
        let key: Vec<T> = match v.iter().find(|x| !x.is_zero()) {
            Some(p) => v.iter().map(|x| x.clone() / p.clone()).collect(),
            None => v.clone(),
        };
        seen.insert(key);
    }
    seen.len()
}

/// One pass on coordinates (c1, c2) at dimension d.
fn round_step<T: Scalar>(w: &mut [Vec<T>], idx: &[usize], c1: usize, c2: usize, eps: &T, d: usize) {
    let three = from_usize::<T>(3);
    let mass2 = idx.iter().fold(T::zero(), |a, &j| a + w[j][c2].clone());
    let budget = eps.clone() / three.clone() * mass2;
    let mut ratios: Vec<(T, T)> = idx
        .iter()
        .filter(|&&j| w[j][c1].is_positive())
        .map(|&j| (w[j][c2].clone() / w[j][c1].clone(), w[j][c2].clone()))
        .collect();
    ratios.sort();
    // largest c with mass2(J_{<c}) ≤ budget; None means every finite ratio fits
    let mut c = None;
    let mut acc = T::zero();
    for (r, group) in &ratios.iter().group_by(|(r, _)| r.clone()) {
        let m = group.fold(T::zero(), |a, (_, x)| a + x.clone());
        acc = acc + m;
        if acc > budget {
            c = Some(r);
            break;
        }
    }
    let Some(c) = c else {
        for &j in idx {
            if w[j][c1].is_positive() {
                w[j][c2] = T::zero();
            }
        }
        return;
    };
    let spread = three.clone() * from_usize::<T>(d) / (eps.clone() * eps.clone());
    let cp = c.clone() * spread;
    let m_div = grid_size(eps);
    for &j in idx {
        if !w[j][c1].is_positive() {
            continue;
        }
        let r = w[j][c2].clone() / w[j][c1].clone();
        if r < c {
            w[j][c2] = T::zero();
        } else if r >= cp {
            w[j][c1] = T::zero();
        } else {
            let t = r / c.clone();
            w[j][c2] = c.clone() * grid_floor(&t, m_div) * w[j][c1].clone();
        }
    }
}

fn round_rec<T: Scalar>(w: &mut [Vec<T>], idx: &[usize], coords: &[usize], eps: &T) {
    if coords.len() <= 1 || idx.is_empty() {
        return;
    }
    let d = coords.len();
    for &ci in &coords[1..] {
        round_step(w, idx, coords[0], ci, eps, d);
    }
    let rest: Vec<usize> = idx.iter().copied().filter(|&j| w[j][coords[0]].is_zero()).collect();
    round_rec(w, &rest, &coords[1..], &(eps.clone() / from_usize::<T>(3)));
}

/// Rounds a sequence of nonnegative vectors to few directions: every
/// coordinate moves by at most ε of its total mass and entries only
/// decrease.
pub fn round_vectors<T: Scalar>(vs: &[Vec<T>], eps: &T) -> Result<RoundedVectors<T>> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let d = vs.first().map_or(0, |v| v.len());
    if vs.iter().any(|v| v.len() != d) {
        return Err(Error::InvalidArgument("vectors of different dimensions".into()));
    }
    if vs.iter().flatten().any(|x| x.is_negative()) {
        return Err(Error::Negative("vector entry".into()));
    }
    let mut w = vs.to_vec();
    let idx: Vec<usize> = (0..vs.len()).collect();
    let coords: Vec<usize> = (0..d).collect();
    round_rec(&mut w, &idx, &coords, eps);
    for i in 0..d {
        let mass = vs.iter().fold(T::zero(), |a, v| a + v[i].clone());
        let err = vs
            .iter()
            .zip(&w)
            .fold(T::zero(), |a, (v, x)| a + (v[i].clone() - x[i].clone()).abs());
        if err > eps.clone() * mass {
            return Err(Error::Verification(format!("coordinate {i} moved too far")));
        }
    }
    let classes = count_classes(&w);
    let class_bound = class_bound(d, eps);
    if BigUint::from(classes) > class_bound {
        return Err(Error::Verification("class count above its bound".into()));
    }
    Ok(RoundedVectors {
        vectors: w,
        classes,
        class_bound,
    })
}

/// Tuples of one component with local element indices (nullary symbols
/// excluded).
#[derive(Debug, Clone)]
struct Local<T> {
    elements: Vec<usize>,
    tuples: BTreeMap<(usize, Vec<usize>), T>,
}

fn local_components<T: Scalar>(a: &ValuedStructure<T>) -> Vec<Local<T>> {
    let comps = gaifman(a).component_sets();
    let mut pos = vec![(0, 0); a.size()];
    for (ci, c) in comps.iter().enumerate() {
        for (i, &e) in c.iter().enumerate() {
            pos[e] = (ci, i);
        }
    }
    let mut out: Vec<Local<T>> = comps
        .into_iter()
        .map(|elements| Local {
            elements,
            tuples: BTreeMap::new(),
        })
        .collect();
    for (f, x, v) in a.tuples() {
        if let Some(&first) = x.first() {
            let ci = pos[first].0;
            out[ci]
                .tuples
                .insert((f, x.iter().map(|&e| pos[e].1).collect()), v.clone());
        }
    }
    out
}

/// λ with other(σ(x)) = λ·rep(x) for every tuple, if it exists.
fn scaled_under<T: Scalar>(rep: &Local<T>, other: &Local<T>, sigma: &[usize]) -> Option<T> {
    if rep.tuples.len() != other.tuples.len() {
        return None;
    }
    let mut lambda: Option<T> = None;
    for ((f, x), v) in &rep.tuples {
        let y: Vec<usize> = x.iter().map(|&i| sigma[i]).collect();
        let w = other.tuples.get(&(*f, y))?;
        let r = w.clone() / v.clone();
        match &lambda {
            None => lambda = Some(r),
            Some(l) if *l != r => return None,
            _ => {}
        }
    }
    Some(lambda.unwrap_or_else(T::zero))
}

fn find_scaling<T: Scalar>(rep: &Local<T>, other: &Local<T>) -> Option<(Vec<usize>, T)> {
    let n = rep.elements.len();
    if n != other.elements.len() || rep.tuples.len() != other.tuples.len() {
        return None;
    }
    let id: Vec<usize> = (0..n).collect();
    if let Some(l) = scaled_under(rep, other, &id) {
        return Some((id, l));
    }
    if n > MATCH_PERMUTATION_CAP {
        return None;
    }
    (0..n)
        .permutations(n)
        .find_map(|p| scaled_under(rep, other, &p).map(|l| (p, l)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Merged<T> {
    pub merged: ValuedStructure<T>,
    /// A → merged, deterministic.
    pub forward: Overcast<T>,
    /// merged → A, picking copy i of a class with probability λ_i/λ.
    pub backward: Overcast<T>,
    /// Element sets of A merged into each class.
    pub classes: Vec<Vec<Vec<usize>>>,
}

/// Replaces components that agree up to rescaling by one copy carrying the
/// summed scale. Both overcasts hold at factor 1.
pub fn merge_components<T: Scalar>(a: &ValuedStructure<T>) -> Result<Merged<T>> {
    let comps = local_components(a);
    // class: (rep component, members (component, σ, λ))
    let mut classes: Vec<(usize, Vec<(usize, Vec<usize>, T)>)> = Vec::new();
    for (ci, c) in comps.iter().enumerate() {
        let hit = classes
            .iter()
            .position(|(r, _)| find_scaling(&comps[*r], c).is_some());
        match hit {
            Some(k) => {
                let (sigma, l) = find_scaling(&comps[classes[k].0], c).unwrap();
                classes[k].1.push((ci, sigma, l));
            }
            None => {
                let n = c.elements.len();
                classes.push((ci, vec![(ci, (0..n).collect(), T::one())]));
            }
        }
    }
    let mut domain = Vec::new();
    let mut offsets = Vec::new();
    for (r, _) in &classes {
        offsets.push(domain.len());
        domain.extend(comps[*r].elements.iter().map(|&e| a.element(e).to_string()));
    }
    let mut merged = ValuedStructure::new(a.signature().clone(), domain)?;
    let mut fwd = vec![0usize; a.size()];
    let mut back_parts = Vec::new();
    for ((r, members), &off) in classes.iter().zip(&offsets) {
        let total = members.iter().fold(T::zero(), |s, m| s + m.2.clone());
        for ((f, x), v) in &comps[*r].tuples {
            merged.set(*f, x.iter().map(|&i| off + i).collect(), v.clone() * total.clone())?;
        }
        for (ci, sigma, _) in members {
            for (i, &s) in sigma.iter().enumerate() {
                fwd[comps[*ci].elements[s]] = off + i;
            }
        }
        let options: Vec<(Vec<usize>, T)> = if total.is_zero() {
            vec![(sigma_elements(&comps[members[0].0], &members[0].1), T::one())]
        } else {
            members
                .iter()
                .filter(|m| m.2.is_positive())
                .map(|(ci, sigma, l)| (sigma_elements(&comps[*ci], sigma), l.clone() / total.clone()))
                .collect()
        };
        back_parts.push(options);
    }
    for (f, x, v) in a.tuples() {
        if x.is_empty() {
            merged.set(f, vec![], v.clone())?;
        }
    }
    let backward = Overcast::new(
        quantile_couple(&back_parts)
            .into_iter()
            .map(|(pick, p)| (Assignment(pick.concat()), p))
            .collect(),
    )?;
    let forward = Overcast::point(Assignment(fwd));
    let out = Merged {
        merged,
        forward,
        backward,
        classes: classes
            .iter()
            .map(|(_, ms)| ms.iter().map(|(ci, _, _)| comps[*ci].elements.clone()).collect())
            .collect(),
    };
    if !verify_scaled(&out.forward, a, &out.merged, &T::one())?.holds()
        || !verify_scaled(&out.backward, &out.merged, a, &T::one())?.holds()
    {
        return Err(Error::Verification("merge overcasts fail".into()));
    }
    Ok(out)
}

/// Elements of a component in representative order.
fn sigma_elements<T>(c: &Local<T>, sigma: &[usize]) -> Vec<usize> {
    sigma.iter().map(|&s| c.elements[s]).collect()
}

/// A structure B with both-way overcasts certifying d_opt(A, B) ≤ ε at the
/// rational factor `factor` ≥ 1/(1+ε).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction<T> {
    pub b: ValuedStructure<T>,
    pub forward: Overcast<T>,
    pub backward: Overcast<T>,
    pub factor: T,
}

impl<T: Scalar> Reduction<T> {
    pub fn verify(&self, a: &ValuedStructure<T>) -> Result<bool> {
        Ok(verify_scaled(&self.forward, a, &self.b, &self.factor)?.holds()
            && verify_scaled(&self.backward, &self.b, a, &self.factor)?.holds())
    }

    fn identity(a: &ValuedStructure<T>) -> Self {
        Reduction {
            b: a.clone(),
            forward: Overcast::identity(a.size()),
            backward: Overcast::identity(a.size()),
            factor: T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeReduction<T> {
    pub reduction: Reduction<T>,
    /// A after rounding, before merging.
    pub rounded: ValuedStructure<T>,
    pub edit_distance: T,
    pub classes: usize,
    pub class_bound: BigUint,
    /// class_bound · d: the size bound independent of |A|.
    pub size_bound: BigUint,
}

/// Compresses a clean structure whose components have at most `d` elements
/// into one of size at most k(ε, d, σ), certified at d_opt ≤ ε.
pub fn cc_to_size<T: Scalar>(a: &ValuedStructure<T>, d: usize, eps: &T) -> Result<SizeReduction<T>> {
    if !a.is_clean() {
        return Err(Error::NotClean("component compression needs a clean structure".into()));
    }
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let comps = local_components(a);
    if let Some(c) = comps.iter().find(|c| c.elements.len() > d) {
        return Err(Error::InvalidArgument(format!(
            "component of size {} exceeds {d}",
            c.elements.len()
        )));
    }
    let sig = a.signature();
    let mut offsets = Vec::new();
    let mut dim = 0;
    for s in sig.symbols() {
        offsets.push(dim);
        if s.arity > 0 {
            dim += d.pow(s.arity as u32);
        }
    }
    let code = |f: usize, x: &[usize]| offsets[f] + x.iter().fold(0, |acc, &i| acc * d + i);
    let vectors: Vec<Vec<T>> = comps
        .iter()
        .map(|c| {
            let mut v = vec![T::zero(); dim];
            for ((f, x), val) in &c.tuples {
                v[code(*f, x)] = val.clone();
            }
            v
        })
        .collect();
    // the edit distance sums per-symbol ratios, so split ε across symbols
    let live = (0..sig.len())
        .filter(|&f| sig.arity(f) > 0 && a.norm1_symbol(f).is_positive())
        .count()
        .max(1);
    let scale = from_usize::<T>(sig.collapse_constant() as usize * live);
    let e = eps.clone() / scale;
    let eps_prime = e.clone() / (T::one() + e);
    let rounded = round_vectors(&vectors, &eps_prime)?;
    let mut b = ValuedStructure::new(sig.clone(), a.domain().to_vec())?;
    let mut decode = Vec::new();
    for (f, s) in sig.symbols().iter().enumerate() {
        if s.arity > 0 {
            for x in (0..s.arity).map(|_| 0..d).multi_cartesian_product() {
                decode.push((f, x));
            }
        }
    }
    for (c, w) in comps.iter().zip(&rounded.vectors) {
        for (i, val) in w.iter().enumerate() {
            if val.is_positive() {
                let (f, x) = &decode[i];
                b.set(*f, x.iter().map(|&p| c.elements[p]).collect(), val.clone())?;
            }
        }
    }
    for (f, x, v) in a.tuples() {
        if x.is_empty() {
            b.set(f, vec![], v.clone())?;
        }
    }
    let id = Assignment::identity(a.size());
    let fw = edit_overcast(a, &b, Some(&id))?;
    let bw = edit_overcast(&b, a, Some(&id))?;
    let merged = merge_components(&b)?;
    let factor = T::min_of(T::one() - fw.delta.clone(), T::one() - bw.delta.clone());
    if factor < surrogate(eps) {
        return Err(Error::Verification(format!(
            "edit distance {} too large for epsilon {}",
            fw.edit_distance, eps
        )));
    }
    let reduction = Reduction {
        forward: compose(&fw.omega, &merged.forward, COMPOSE_CAP)?,
        backward: compose(&merged.backward, &bw.omega, COMPOSE_CAP)?,
        b: merged.merged,
        factor,
    };
    if !reduction.verify(a)? {
        return Err(Error::Verification("component compression overcasts fail".into()));
    }
    let class_bound = rounded.class_bound;
    Ok(SizeReduction {
        reduction,
        rounded: b,
        edit_distance: fw.edit_distance,
        classes: rounded.classes,
        size_bound: class_bound.clone() * BigUint::from(d.max(1)),
        class_bound,
    })
}

/// Signature {(f, I)}: one symbol per f and subset I of its positions, of
/// arity ar(f) − |I|, named `f|i,j` with 1-based positions.
pub fn packed_signature(sigma: &Signature) -> Signature {
    let mut syms = Vec::new();
    for s in sigma.symbols() {
        for mask in 0u32..(1 << s.arity) {
            let pos = (0..s.arity).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).join(",");
            syms.push((format!("{}|{}", s.name, pos), s.arity - mask.count_ones() as usize));
        }
    }
    Signature::with_nullary(syms).expect("packed names are unique")
}

fn packed_offsets(sigma: &Signature) -> Vec<usize> {
    sigma
        .symbols()
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += 1 << s.arity;
            Some(o)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packed<T> {
    pub structure: ValuedStructure<T>,
    pub sigma: Signature,
    pub vertex: String,
    /// Index of the packed element in the original domain.
    pub position: usize,
}

/// Removes `v`, recording its positions in every tuple into the symbol.
pub fn pack<T: Scalar>(a: &ValuedStructure<T>, v: usize) -> Result<Packed<T>> {
    if v >= a.size() {
        return Err(Error::InvalidArgument(format!("element {v} out of range")));
    }
    if a.size() == 1 {
        return Err(Error::InvalidArgument("cannot pack the only element".into()));
    }
    let sig = packed_signature(a.signature());
    let offs = packed_offsets(a.signature());
    let domain: Vec<String> = (0..a.size())
        .filter(|&e| e != v)
        .map(|e| a.element(e).to_string())
        .collect();
    let mut out = ValuedStructure::new(sig, domain)?;
    for (f, x, val) in a.tuples() {
        let mask = x.iter().enumerate().filter(|(_, &e)| e == v).fold(0, |m, (k, _)| m | 1 << k);
        let rest = x
            .iter()
            .filter(|&&e| e != v)
            .map(|&e| if e > v { e - 1 } else { e })
            .collect();
        out.set(offs[f] + mask, rest, val.clone())?;
    }
    Ok(Packed {
        structure: out,
        sigma: a.signature().clone(),
        vertex: a.element(v).to_string(),
        position: v,
    })
}

/// Inverse of [`pack`] for any structure over the packed signature: the
/// element `vertex` is inserted at `position` and re-enters every tuple at
/// the recorded positions.
pub fn unpack<T: Scalar>(
    b: &ValuedStructure<T>,
    sigma: &Signature,
    vertex: &str,
    position: usize,
) -> Result<ValuedStructure<T>> {
    if *b.signature() != packed_signature(sigma) {
        return Err(Error::SignatureMismatch("not a packed signature".into()));
    }
    let position = position.min(b.size());
    let mut domain = b.domain().to_vec();
    domain.insert(position, vertex.to_string());
    let mut out = ValuedStructure::new(sigma.clone(), domain)?;
    let offs = packed_offsets(sigma);
    for (f, s) in sigma.symbols().iter().enumerate() {
        for mask in 0usize..(1 << s.arity) {
            for (xr, val) in b.symbol_values(offs[f] + mask) {
                let mut it = xr.iter().map(|&e| if e >= position { e + 1 } else { e });
                let x = (0..s.arity)
                    .map(|k| if mask >> k & 1 == 1 { position } else { it.next().unwrap() })
                    .collect();
                out.set(f, x, val.clone())?;
            }
        }
    }
    Ok(out)
}

fn without_nullary<T: Scalar>(a: &ValuedStructure<T>) -> Result<(ValuedStructure<T>, Vec<(usize, T)>)> {
    let mut out = a.clone();
    let mut kept = Vec::new();
    for (f, x, v) in a.tuples() {
        if x.is_empty() {
            kept.push((f, v.clone()));
        }
    }
    for (f, _) in &kept {
        out.set(*f, vec![], T::zero())?;
    }
    Ok((out, kept))
}

fn td_connected<T: Scalar>(a: &ValuedStructure<T>, eps: &T) -> Result<Reduction<T>> {
    if a.size() == 1 {
        return Ok(Reduction::identity(a));
    }
    let v = treedepth_root(&gaifman(a))?;
    let p = pack(a, v)?;
    let inner = td_disconnected(&p.structure, eps)?;
    let m = inner.b.size();
    let b = unpack(&inner.b, &p.sigma, &p.vertex, m)?;
    let lift = |g: &Assignment| {
        let mut h = Vec::with_capacity(a.size());
        for e in 0..a.size() {
            h.push(match e.cmp(&v) {
                std::cmp::Ordering::Equal => m,
                std::cmp::Ordering::Less => g.0[e],
                std::cmp::Ordering::Greater => g.0[e - 1],
            });
        }
        Assignment(h)
    };
    let lower = |g: &Assignment| {
        let mut h: Vec<usize> = g.0.iter().map(|&e| if e >= v { e + 1 } else { e }).collect();
        h.push(v);
        Assignment(h)
    };
    Ok(Reduction {
        forward: Overcast::new(
            inner.forward.support().iter().map(|(g, q)| (lift(g), q.clone())).collect(),
        )?,
        backward: Overcast::new(
            inner.backward.support().iter().map(|(g, q)| (lower(g), q.clone())).collect(),
        )?,
        b,
        factor: inner.factor,
    })
}

fn td_disconnected<T: Scalar>(a: &ValuedStructure<T>, eps: &T) -> Result<Reduction<T>> {
    let third = eps.clone() / from_usize::<T>(3);
    let (stripped, nullary) = without_nullary(a)?;
    let comps = gaifman(&stripped).component_sets();
    let mut parts = Vec::new();
    let mut reds = Vec::new();
    for c in &comps {
        let sub = stripped.induced(c)?;
        let r = td_connected(&sub, &third)?;
        parts.push(r.b.clone());
        reds.push(r);
    }
    let mut u = disjoint_union(&parts)?;
    for (f, v) in &nullary {
        u.set(*f, vec![], v.clone())?;
    }
    let mut offsets = Vec::new();
    let mut acc = 0;
    for p in &parts {
        offsets.push(acc);
        acc += p.size();
    }
    let fw_parts: Vec<Vec<(&Assignment, T)>> = reds
        .iter()
        .map(|r| r.forward.support().iter().map(|(g, q)| (g, q.clone())).collect())
        .collect();
    let mut fw = Vec::new();
    for (pick, q) in quantile_couple(&fw_parts) {
        let mut h = vec![0; a.size()];
        for ((c, g), off) in comps.iter().zip(pick).zip(&offsets) {
            for (i, &e) in c.iter().enumerate() {
                h[e] = off + g.0[i];
            }
        }
        fw.push((Assignment(h), q));
    }
    let bw_parts: Vec<Vec<(&Assignment, T)>> = reds
        .iter()
        .map(|r| r.backward.support().iter().map(|(g, q)| (g, q.clone())).collect())
        .collect();
    let mut bw = Vec::new();
    for (pick, q) in quantile_couple(&bw_parts) {
        let mut h = Vec::with_capacity(u.size());
        for (c, g) in comps.iter().zip(pick) {
            h.extend(g.0.iter().map(|&i| c[i]));
        }
        bw.push((Assignment(h), q));
    }
    let factor_u = reds.iter().map(|r| r.factor.clone()).min().unwrap_or_else(T::one);
    let d = gaifman(&u).max_component_size().max(1);
    let s = cc_to_size(&u, d, &third)?;
    Ok(Reduction {
        forward: compose(&Overcast::new(fw)?, &s.reduction.forward, COMPOSE_CAP)?,
        backward: compose(&s.reduction.backward, &Overcast::new(bw)?, COMPOSE_CAP)?,
        factor: factor_u * s.reduction.factor,
        b: s.reduction.b,
    })
}

/// Bounded-size structure at d_opt ≤ ε from a clean structure of small
/// treedepth: components are packed at a treedepth root, reduced
/// recursively, unpacked, and the union compressed. Requires ε ≤ 1.
pub fn td_to_size<T: Scalar>(a: &ValuedStructure<T>, eps: &T) -> Result<Reduction<T>> {
    if !a.is_clean() {
        return Err(Error::NotClean("treedepth compression needs a clean structure".into()));
    }
    if !eps.is_positive() || *eps > T::one() {
        return Err(Error::InvalidArgument("epsilon must lie in (0, 1]".into()));
    }
    let r = td_disconnected(a, eps)?;
    if r.factor < surrogate(eps) || !r.verify(a)? {
        return Err(Error::Verification("treedepth compression certificate fails".into()));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{as_structure, clique, path, star};
    use crate::structures::disjoint_union;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn qv(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| q(x, 1)).collect()
    }

    #[test]
    fn rounding_examples() {
        let r = round_vectors(&[qv(&[3]), qv(&[5]), qv(&[0])], &q(1, 2)).unwrap();
        assert_eq!(r.classes, 2);
        assert_eq!(r.vectors, vec![qv(&[3]), qv(&[5]), qv(&[0])]);
        let vs = vec![qv(&[1, 1]), qv(&[1, 2]), qv(&[1, 4]), qv(&[8, 1])];
        let r = round_vectors(&vs, &q(1, 2)).unwrap();
        assert!(BigUint::from(r.classes) <= r.class_bound);
        let par = vec![qv(&[1, 2, 3]), qv(&[2, 4, 6]), qv(&[5, 10, 15])];
        let r = round_vectors(&par, &q(1, 4)).unwrap();
        assert_eq!(r.classes, 1);
    }

    #[test]
    fn coupling_keeps_marginals() {
        let parts = vec![
            vec![('a', q(1, 3)), ('b', q(2, 3))],
            vec![('x', q(1, 2)), ('y', q(1, 2))],
        ];
        let c = quantile_couple(&parts);
        let pa: Rational = c.iter().filter(|(p, _)| p[0] == 'a').map(|(_, w)| w.clone()).sum();
        let px: Rational = c.iter().filter(|(p, _)| p[1] == 'x').map(|(_, w)| w.clone()).sum();
        assert_eq!((pa, px), (q(1, 3), q(1, 2)));
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn merge_examples() {
        let k2 = as_structure(&clique::<Rational>(2));
        let half = k2.rescale(&q(1, 2)).unwrap();
        let m = merge_components(&disjoint_union(&[half.clone(), half]).unwrap()).unwrap();
        assert_eq!(m.merged.size(), 2);
        assert_eq!(m.merged.norm1(), q(2, 1));
        let k3 = as_structure(&clique::<Rational>(3));
        let m = merge_components(&disjoint_union(&[k2.clone(), k3]).unwrap()).unwrap();
        assert_eq!(m.merged.size(), 5);
        let p = as_structure(&path::<Rational>(3));
        let parts: Vec<_> = (1..=3).map(|l| p.rescale(&q(l, 1)).unwrap()).collect();
        let m = merge_components(&disjoint_union(&parts).unwrap()).unwrap();
        assert_eq!(m.merged.size(), 3);
        assert_eq!(m.merged.norm1(), p.norm1() * q(6, 1));
    }

    #[test]
    fn merge_matches_relabelled_copies() {
        let mut s = ValuedStructure::new(Signature::graph(), vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into(), "f".into()]).unwrap();
        // a-b-c with centre b, and d-e-f with centre d
        for (u, v) in [(0, 1), (1, 2), (3, 4), (3, 5)] {
            s.set(0, vec![u, v], q(1, 1)).unwrap();
            s.set(0, vec![v, u], q(1, 1)).unwrap();
        }
        let m = merge_components(&s).unwrap();
        assert_eq!(m.merged.size(), 3);
    }

    #[test]
    fn cc_examples() {
        let k2 = as_structure(&clique::<Rational>(2));
        let parts: Vec<_> = (0..10).map(|i| k2.rescale(&q(1 << i, 1)).unwrap()).collect();
        let a = disjoint_union(&parts).unwrap();
        let r = cc_to_size(&a, 2, &q(1, 2)).unwrap();
        assert_eq!(r.reduction.b.size(), 2);
        assert!(r.reduction.verify(&a).unwrap());
        let k3 = as_structure(&clique::<Rational>(3));
        let r = cc_to_size(&k3, 3, &q(1, 2)).unwrap();
        assert_eq!(r.reduction.b, k3);
        let two = disjoint_union(&[k2, as_structure(&path::<Rational>(3))]).unwrap();
        let r = cc_to_size(&two, 3, &q(1, 2)).unwrap();
        assert!(r.classes >= 2);
    }

    #[test]
    fn pack_examples() {
        let k2 = as_structure(&clique::<Rational>(2));
        let p = pack(&k2, 1).unwrap();
        let s = &p.structure;
        assert_eq!(s.size(), 1);
        let e1 = s.signature().position("e|1").unwrap();
        let e2 = s.signature().position("e|2").unwrap();
        assert_eq!(s.get(e1, &[0]), q(1, 1));
        assert_eq!(s.get(e2, &[0]), q(1, 1));
        assert_eq!(s.tuple_count(), 2);
        assert_eq!(unpack(s, &p.sigma, &p.vertex, p.position).unwrap(), k2);
    }

    #[test]
    fn treedepth_examples() {
        let p3 = as_structure(&path::<Rational>(3));
        let r = td_to_size(&p3, &q(1, 2)).unwrap();
        assert!(r.b.size() <= 2);
        let s = as_structure(&star::<Rational>(3));
        let stars: Vec<_> = (0..20).map(|_| s.clone()).collect();
        let a = disjoint_union(&stars).unwrap();
        let r = td_to_size(&a, &q(1, 2)).unwrap();
        assert_eq!(r.b.size(), 2);
        assert!(r.verify(&a).unwrap());
    }
}
