//! Fractional modulators: distributions over vertex or edge sets whose
//! removal brings a graph parameter under a bound.

use crate::error::{Error, Result};
use crate::generators::grid_box_index;
use crate::graphs::{bfs_layers_multi, degeneracy_orientation, parameter, Graph, Param};
use crate::lp::{check_farkas_variant, FarkasSystem, FarkasVariant, FarkasWitness};
use crate::overcast::{verify_scaled, CoverageReport, Overcast};
use crate::scalar::{from_usize, Scalar};
use crate::structures::{disjoint_union, gaifman, Assignment, Signature, ValuedStructure};
use itertools::Itertools;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulatorKind {
    Vertex,
    Edge,
}

/// Distribution over removal sets. Vertex sets list vertex indices; edge
/// sets list indices into `Graph::edges()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalModulator<T> {
    pub kind: ModulatorKind,
    pub param: Param,
    pub bound: usize,
    support: Vec<(Vec<usize>, T)>,
}

impl<T: Scalar> FractionalModulator<T> {
    /// Merges equal sets and checks the probabilities.
    pub fn new(
        kind: ModulatorKind,
        param: Param,
        bound: usize,
        entries: Vec<(Vec<usize>, T)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<Vec<usize>, T> = BTreeMap::new();
        for (mut s, p) in entries {
            if p.is_negative() {
                return Err(Error::Negative(format!("probability {p}")));
            }
            s.sort_unstable();
            s.dedup();
            let e = merged.entry(s).or_insert_with(T::zero);
            *e = e.clone() + p;
        }
        let support: Vec<_> = merged.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let total = support.iter().fold(T::zero(), |a, (_, p)| a + p.clone());
        if total != T::one() {
            return Err(Error::InvalidModulator(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(FractionalModulator {
            kind,
            param,
            bound,
            support,
        })
    }

    pub fn point(kind: ModulatorKind, param: Param, bound: usize, set: Vec<usize>) -> Self {
        Self::new(kind, param, bound, vec![(set, T::one())]).unwrap()
    }

    pub fn support(&self) -> &[(Vec<usize>, T)] {
        &self.support
    }

    /// Pr[element ∈ X] for every element of a universe of the given size.
    pub fn marginals(&self, universe: usize) -> Vec<T> {
        let mut m = vec![T::zero(); universe];
        for (s, p) in &self.support {
            for &e in s {
                m[e] = m[e].clone() + p.clone();
            }
        }
        m
    }

    pub fn thinness(&self, universe: usize) -> T {
        self.marginals(universe).into_iter().max().unwrap_or_else(T::zero)
    }

    fn universe<U: Scalar>(&self, g: &Graph<U>) -> usize {
        match self.kind {
            ModulatorKind::Vertex => g.vertex_count(),
            ModulatorKind::Edge => g.edge_count(),
        }
    }

    pub fn thinness_in<U: Scalar>(&self, g: &Graph<U>) -> T {
        self.thinness(self.universe(g))
    }

    /// The graph left after removing one support set.
    pub fn residual<U: Scalar>(&self, g: &Graph<U>, set: &[usize]) -> Graph<U> {
        match self.kind {
            ModulatorKind::Vertex => g.remove_vertices(set),
            ModulatorKind::Edge => {
                let edges = g.edges();
                let f: Vec<(usize, usize)> = set.iter().map(|&i| edges[i]).collect();
                g.remove_edges(&f)
            }
        }
    }

    /// Checks every support set against `g` and recomputes each residual
    /// parameter.
    pub fn check<U: Scalar>(&self, g: &Graph<U>) -> Result<ModulatorCheck<T>> {
        let n = self.universe(g);
        if let Some((s, _)) = self.support.iter().find(|(s, _)| s.iter().any(|&e| e >= n)) {
            return Err(Error::InvalidModulator(format!("set {s:?} leaves the graph")));
        }
        let residuals: Vec<(usize, bool)> = self
            .support
            .iter()
            .map(|(s, _)| component_parameter(&self.residual(g, s), self.param))
            .collect();
        Ok(ModulatorCheck {
            thinness: self.thinness(n),
            bound_holds: residuals.iter().all(|(v, _)| *v <= self.bound),
            all_exact: residuals.iter().all(|(_, e)| *e),
            residuals: residuals.into_iter().map(|(v, _)| v).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulatorCheck<T> {
    pub thinness: T,
    /// Certified residual parameter per support set.
    pub residuals: Vec<usize>,
    pub bound_holds: bool,
    /// False when some residual value is only a heuristic upper bound.
    pub all_exact: bool,
}

/// Parameter of a graph taken as the maximum over its components (size is
/// the number of vertices). Returns (value, exact).
pub fn component_parameter<T: Scalar>(g: &Graph<T>, which: Param) -> (usize, bool) {
    match which {
        Param::Size | Param::Cc => {
            let p = parameter(g, which);
            (p.value, p.exact)
        }
        Param::Tw | Param::Td => {
            let mut best = 0;
            let mut exact = true;
            for c in g.components() {
                let p = parameter(&c, which);
                best = best.max(p.value);
                exact &= p.exact;
            }
            if which == Param::Td && g.vertex_count() == 0 {
                return (0, true);
            }
            (best, exact)
        }
    }
}

/// Removes every ℓ-th BFS layer, one shift per residue, uniformly.
/// Components without a listed root make the layering ambiguous, so they
/// are rejected.
pub fn baker_modulator<T: Scalar, U: Scalar>(
    g: &Graph<U>,
    l: usize,
    roots: &[usize],
) -> Result<FractionalModulator<T>> {
    if l < 2 {
        return Err(Error::InvalidArgument("Baker layering needs l >= 2".into()));
    }
    for c in g.component_sets() {
        if !c.iter().any(|v| roots.contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "component of {} has no root",
                g.vertices()[c[0]]
            )));
        }
    }
    let layers = bfs_layers_multi(g, roots);
    let p = T::one() / from_usize::<T>(l);
    let mut entries = Vec::new();
    for j in 0..l {
        let x: Vec<usize> = layers
            .iter()
            .enumerate()
            .filter(|(i, _)| i % l == j)
            .flat_map(|(_, layer)| layer.iter().copied())
            .collect();
        entries.push((x, p.clone()));
    }
    let mut m = FractionalModulator::new(ModulatorKind::Vertex, Param::Tw, usize::MAX, entries)?;
    let check = m.check(g)?;
    m.bound = check.residuals.into_iter().max().unwrap_or(0);
    Ok(m)
}

/// Slab removal on the grid `grid_box(sides)`: shift j removes every vertex
/// with a coordinate ≡ j (mod ℓ) along one of the chosen axes.
pub fn grid_modulator<T: Scalar>(
    sides: &[usize],
    l: usize,
    axes: &[usize],
) -> Result<FractionalModulator<T>> {
    if l < 2 {
        return Err(Error::InvalidArgument("slab removal needs l >= 2".into()));
    }
    if axes.iter().any(|&a| a >= sides.len()) {
        return Err(Error::InvalidArgument("axis out of range".into()));
    }
    let g: Graph<T> = crate::generators::grid_box(sides);
    let p = T::one() / from_usize::<T>(l);
    let mut entries = Vec::new();
    for j in 0..l {
        let x: Vec<usize> = (0..g.vertex_count())
            .filter(|&v| {
                let c = grid_box_index(sides, v);
                axes.iter().any(|&a| c[a] % l == j)
            })
            .collect();
        entries.push((x, p.clone()));
    }
    let mut m = FractionalModulator::new(ModulatorKind::Vertex, Param::Tw, usize::MAX, entries)?;
    let check = m.check(&g)?;
    m.bound = check.residuals.into_iter().max().unwrap_or(0);
    Ok(m)
}

/// Some X of the family with w(X) ≤ ε·w(V), by direct scan.
pub fn dual_check<T: Scalar>(family: &[Vec<usize>], weights: &[T], eps: &T) -> Option<usize> {
    let total = weights.iter().fold(T::zero(), |a, w| a + w.clone());
    let bound = eps.clone() * total;
    family.iter().position(|x| {
        x.iter().fold(T::zero(), |a, &v| a + weights[v].clone()) <= bound
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThinOutcome<T> {
    /// Probabilities over the family with every marginal ≤ ε.
    Distribution(Vec<T>),
    /// Weights with w(X) > ε·w(V) for every X of the family.
    Weights(Vec<T>),
}

/// Decides whether an ε-thin distribution over an explicit family exists.
pub fn thin_distribution<T: Scalar>(
    universe: usize,
    family: &[Vec<usize>],
    eps: &T,
) -> Result<ThinOutcome<T>> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let mut rows = vec![Vec::new(); universe];
    for (j, x) in family.iter().enumerate() {
        for &v in x.iter().sorted().dedup() {
            if v >= universe {
                return Err(Error::InvalidArgument(format!("element {v} outside universe")));
            }
            rows[v].push((j, T::one()));
        }
    }
    let sys = FarkasSystem {
        ncols: family.len(),
        rows,
        b: vec![eps.clone(); universe],
    };
    Ok(match check_farkas_variant(&sys, FarkasVariant::Two)? {
        FarkasWitness::Primal(x) => ThinOutcome::Distribution(x),
        FarkasWitness::Dual(y) => ThinOutcome::Weights(y),
    })
}

/// F = edges incident to X for every X; thinness at most twice.
pub fn edge_from_vertex<T: Scalar, U: Scalar>(
    pi: &FractionalModulator<T>,
    g: &Graph<U>,
) -> Result<FractionalModulator<T>> {
    if pi.kind != ModulatorKind::Vertex {
        return Err(Error::InvalidModulator("expected a vertex modulator".into()));
    }
    let edges = g.edges();
    let entries = pi
        .support
        .iter()
        .map(|(x, p)| {
            let xs: BTreeSet<usize> = x.iter().copied().collect();
            let f: Vec<usize> = edges
                .iter()
                .enumerate()
                .filter(|(_, (u, v))| xs.contains(u) || xs.contains(v))
                .map(|(i, _)| i)
                .collect();
            (f, p.clone())
        })
        .collect();
    let mut m = FractionalModulator::new(ModulatorKind::Edge, pi.param, pi.bound, entries)?;
    // vertices of X stay as isolated vertices, which can only lower the
    // parameter except for size
    let check = m.check(g)?;
    m.bound = check.residuals.into_iter().max().unwrap_or(0);
    Ok(m)
}

/// X = heads of the removed arcs under a degeneracy orientation; thinness
/// grows by at most the maximum in-degree.
pub fn vertex_from_edge<T: Scalar, U: Scalar>(
    pi: &FractionalModulator<T>,
    g: &Graph<U>,
) -> Result<(FractionalModulator<T>, usize)> {
    if pi.kind != ModulatorKind::Edge {
        return Err(Error::InvalidModulator("expected an edge modulator".into()));
    }
    let o = degeneracy_orientation(g);
    let head: BTreeMap<(usize, usize), usize> = o
        .arcs
        .iter()
        .map(|&(t, h)| ((t.min(h), t.max(h)), h))
        .collect();
    let edges = g.edges();
    let entries = pi
        .support
        .iter()
        .map(|(f, p)| (f.iter().map(|&i| head[&edges[i]]).collect(), p.clone()))
        .collect();
    let mut m = FractionalModulator::new(ModulatorKind::Vertex, pi.param, pi.bound, entries)?;
    let check = m.check(g)?;
    m.bound = check.residuals.into_iter().max().unwrap_or(0);
    Ok((m, o.max_in_degree(g.vertex_count())))
}

/// Output of the fragile-to-pliable construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PliableWitness<T> {
    pub b: ValuedStructure<T>,
    /// A → B: identity onto each part, removed elements to the part's sink.
    pub omega: Overcast<T>,
    /// B → factor·A: every part mapped back identically.
    pub omega_prime: Overcast<T>,
    pub factor: T,
    pub thinness: T,
    /// Per part: (support set, part offset in B, sink index in B).
    pub parts: Vec<(Vec<usize>, usize, usize)>,
    pub forward_report: CoverageReport<T>,
    pub backward_report: CoverageReport<T>,
    /// Per tuple of A: the fraction of its value that ω′ brings back.
    pub survival: Vec<(usize, Vec<usize>, T)>,
}

/// B = ⊎_X π(X)·(A − X) with the two overcasts; ω′ targets (1 − rθ)A
/// where θ is the thinness of π.
pub fn fragile_to_pliable<T: Scalar>(
    a: &ValuedStructure<T>,
    pi: &FractionalModulator<T>,
    r: usize,
) -> Result<PliableWitness<T>> {
    if pi.kind != ModulatorKind::Vertex {
        return Err(Error::InvalidModulator("expected a vertex modulator".into()));
    }
    let g = gaifman(a);
    let check = pi.check(&g)?;
    if !check.bound_holds {
        return Err(Error::InvalidModulator(format!(
            "residual parameter exceeds the claimed bound {}",
            pi.bound
        )));
    }
    let arity = a.tuples().map(|(_, x, _)| x.iter().unique().count()).max().unwrap_or(0);
    if arity > r {
        return Err(Error::InvalidArgument(format!(
            "tuples span {arity} elements, more than r = {r}"
        )));
    }
    let n = a.size();
    let mut parts = Vec::new();
    let mut meta = Vec::new();
    let mut offset = 0;
    for (x, p) in &pi.support {
        let xs: BTreeSet<usize> = x.iter().copied().collect();
        let keep: Vec<usize> = (0..n).filter(|v| !xs.contains(v)).collect();
        let part = if keep.is_empty() {
            ValuedStructure::new(a.signature().clone(), vec!["sink".into()])?
        } else {
            a.induced(&keep)?.rescale(p)?
        };
        meta.push((x.clone(), keep, offset));
        offset += part.size();
        parts.push(part);
    }
    let b = disjoint_union(&parts)?;
    let mut fw = Vec::new();
    let mut back = vec![0usize; b.size()];
    let mut out_parts = Vec::new();
    for ((x, keep, off), (_, p)) in meta.iter().zip(&pi.support) {
        let sink = *off;
        let mut g = vec![sink; n];
        for (i, &v) in keep.iter().enumerate() {
            g[v] = off + i;
            back[off + i] = v;
        }
        fw.push((Assignment(g), p.clone()));
        out_parts.push((x.clone(), *off, sink));
    }
    let omega = Overcast::new(fw)?;
    let omega_prime = Overcast::point(Assignment(back));
    let theta = check.thinness;
    let rt = from_usize::<T>(r) * theta.clone();
    let factor = if rt >= T::one() { T::zero() } else { T::one() - rt };
    let forward_report = verify_scaled(&omega, a, &b, &T::one())?;
    let backward_report = verify_scaled(&omega_prime, &b, a, &factor)?;
    if !forward_report.holds() || !backward_report.holds() {
        return Err(Error::Verification("fragile-to-pliable overcasts fail".into()));
    }
    let survival = backward_report
        .tuples
        .iter()
        .map(|t| {
            let s = coverage_fraction(&omega_prime, &b, a, t.symbol, &t.tuple);
            (t.symbol, t.tuple.clone(), s)
        })
        .collect();
    Ok(PliableWitness {
        survival,
        b,
        omega,
        omega_prime,
        factor,
        thinness: theta,
        parts: out_parts,
        forward_report,
        backward_report,
    })
}

fn coverage_fraction<T: Scalar>(
    w: &Overcast<T>,
    b: &ValuedStructure<T>,
    a: &ValuedStructure<T>,
    f: usize,
    x: &[usize],
) -> T {
    let mut covered = T::zero();
    for (g, p) in w.support() {
        for (y, v) in b.symbol_values(f) {
            if g.apply(y) == x {
                covered = covered + p.clone() * v.clone();
            }
        }
    }
    covered / a.get(f, x)
}

/// Splits graph edges for weighted removal: returns F′ with
/// |F′| ≤ ε′·|E| and the component bound k′ it guarantees.
pub trait Partitioner<T: Scalar> {
    fn cut(&self, g: &Graph<T>, eps: &T) -> Result<(Vec<(usize, usize)>, usize)>;
}

/// Removes nothing; the bound is the largest component.
pub struct NoCut;

impl<T: Scalar> Partitioner<T> for NoCut {
    fn cut(&self, g: &Graph<T>, _eps: &T) -> Result<(Vec<(usize, usize)>, usize)> {
        Ok((Vec::new(), g.max_component_size()))
    }
}

/// Cuts the edges between BFS layers i and i+1 for i ≡ j (mod ℓ) with
/// ℓ = ⌈1/ε⌉, choosing the cheapest shift j.
pub struct LayerCut;

impl<T: Scalar> Partitioner<T> for LayerCut {
    fn cut(&self, g: &Graph<T>, eps: &T) -> Result<(Vec<(usize, usize)>, usize)> {
        if g.edge_count() == 0 || !eps.is_positive() {
            return NoCut.cut(g, eps);
        }
        let inv = T::one() / eps.clone();
        let l = inv.ceil_usize().max(1);
        let layers = bfs_layers_multi(g, &[]);
        let mut depth = vec![0usize; g.vertex_count()];
        for (i, layer) in layers.iter().enumerate() {
            for &v in layer {
                depth[v] = i;
            }
        }
        // shifts past the deepest layer all cut nothing
        let mut best: Option<Vec<(usize, usize)>> = None;
        for j in 0..l.min(layers.len()) {
            let f: Vec<(usize, usize)> = g
                .edges()
                .into_iter()
                .filter(|&(u, v)| depth[u] != depth[v] && depth[u].min(depth[v]) % l == j)
                .collect();
            if best.as_ref().is_none_or(|b| f.len() < b.len()) {
                best = Some(f);
            }
        }
        let f = best.unwrap();
        let k = g.remove_edges(&f).max_component_size();
        Ok((f, k))
    }
}

trait CeilUsize {
    fn ceil_usize(&self) -> usize;
}

impl<T: Scalar> CeilUsize for T {
    fn ceil_usize(&self) -> usize {
        use num_traits::ToPrimitive;
        let fl = self.floor_int();
        let c = if T::from_bigint(&fl) == *self { fl } else { fl + 1 };
        c.to_usize().unwrap_or(usize::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketReport<T> {
    pub beta: T,
    pub l: usize,
    pub alpha: T,
    pub eps_prime: T,
    pub j_star: usize,
    /// Edges of the removed bucket class.
    pub bucket_removed: Vec<(usize, usize)>,
    /// Block boundary edges.
    pub boundary_removed: Vec<(usize, usize)>,
    /// Partitioner cuts inside the blocks.
    pub cut_removed: Vec<(usize, usize)>,
    pub partitioner_calls: usize,
    pub k_prime: usize,
    pub removed_weight: T,
    pub total_weight: T,
}

impl<T: Scalar> BucketReport<T> {
    pub fn removed(&self) -> Vec<(usize, usize)> {
        let mut all: Vec<_> = self
            .bucket_removed
            .iter()
            .chain(&self.boundary_removed)
            .chain(&self.cut_removed)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }
}

/// Bucket index i with β^{i+1} < w ≤ β^i, for 0 < β < 1.
fn bucket_of<T: Scalar>(w: &T, beta: &T) -> i64 {
    let mut i: i64 = 0;
    let mut hi = T::one();
    if *w > hi {
        while *w > hi {
            hi = hi / beta.clone();
            i -= 1;
        }
        return i;
    }
    loop {
        let lo = hi.clone() * beta.clone();
        if *w > lo {
            return i;
        }
        hi = lo;
        i += 1;
    }
}

/// Removes edges of total weight ≤ ε·w(E) so that every remaining component
/// has at most k′ vertices, where k′ comes from the unweighted partitioner
/// run on blocks of comparable weight.
pub fn bucket_edge_weights<T: Scalar, P: Partitioner<T>>(
    g: &Graph<T>,
    eps: &T,
    partitioner: &P,
) -> Result<BucketReport<T>> {
    if !eps.is_positive() || *eps >= T::one() {
        return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
    }
    let delta = g.max_degree().max(1);
    let beta = eps.clone() / from_usize::<T>(6 * delta);
    let l = (from_usize::<T>(3) / eps.clone()).ceil_usize().max(2);
    let alpha = beta.pow_u((l - 1) as u32);
    let eps_prime = alpha.clone() * eps.clone() / from_usize::<T>(3);
    let edges: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|&(u, v)| g.edge_weight(u, v).is_positive())
        .collect();
    let total_weight = edges
        .iter()
        .fold(T::zero(), |a, &(u, v)| a + g.edge_weight(u, v));
    let bucket: Vec<i64> = edges
        .iter()
        .map(|&(u, v)| bucket_of(&g.edge_weight(u, v), &beta))
        .collect();
    // lightest residue class
    let li = l as i64;
    let mut class_weight = vec![T::zero(); l];
    for (e, &b) in edges.iter().zip(&bucket) {
        let j = b.rem_euclid(li) as usize;
        class_weight[j] = class_weight[j].clone() + g.edge_weight(e.0, e.1);
    }
    let j_star = (0..l).min_by(|&x, &y| class_weight[x].cmp(&class_weight[y])).unwrap();
    let mut bucket_removed = Vec::new();
    let mut blocks: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (idx, &b) in bucket.iter().enumerate() {
        if b.rem_euclid(li) as usize == j_star {
            bucket_removed.push(edges[idx]);
        } else {
            blocks.entry((b - j_star as i64 - 1).div_euclid(li)).or_default().push(idx);
        }
    }
    // heaviest block first; cut lighter edges touching it
    let mut alive = vec![true; edges.len()];
    for &idx in bucket_removed.iter().map(|e| edges.binary_search(e).unwrap()).collect::<Vec<_>>().iter() {
        alive[idx] = false;
    }
    let block_of: BTreeMap<usize, i64> = blocks
        .iter()
        .flat_map(|(&bi, es)| es.iter().map(move |&e| (e, bi)))
        .collect();
    let mut boundary_removed = Vec::new();
    for (&bi, es) in &blocks {
        let touched: BTreeSet<usize> = es
            .iter()
            .filter(|&&e| alive[e])
            .flat_map(|&e| [edges[e].0, edges[e].1])
            .collect();
        for (idx, &(u, v)) in edges.iter().enumerate() {
            if alive[idx]
                && block_of.get(&idx).is_some_and(|&bj| bj > bi)
                && (touched.contains(&u) || touched.contains(&v))
            {
                alive[idx] = false;
                boundary_removed.push((u, v));
            }
        }
    }
    let mut cut_removed = Vec::new();
    let mut calls = 0;
    let mut k_prime = 1;
    for es in blocks.values() {
        let keep: Vec<(usize, usize)> = es.iter().filter(|&&e| alive[e]).map(|&e| edges[e]).collect();
        if keep.is_empty() {
            continue;
        }
        let gi: Graph<T> = Graph::from_edges(g.vertex_count(), &keep);
        calls += 1;
        let (f, k) = partitioner.cut(&gi, &eps_prime)?;
        let m = from_usize::<T>(gi.edge_count());
        if from_usize::<T>(f.len()) > eps_prime.clone() * m {
            return Err(Error::PartitionerContract(format!(
                "removed {} of {} edges, above the allowed fraction {}",
                f.len(),
                gi.edge_count(),
                eps_prime
            )));
        }
        if f.iter().any(|&(u, v)| !gi.has_edge(u, v)) {
            return Err(Error::PartitionerContract("cut edge not in the block".into()));
        }
        if gi.remove_edges(&f).max_component_size() > k {
            return Err(Error::PartitionerContract(format!(
                "component bound {k} violated"
            )));
        }
        k_prime = k_prime.max(k);
        cut_removed.extend(f.into_iter().map(|(u, v)| (u.min(v), u.max(v))));
    }
    let mut report = BucketReport {
        beta,
        l,
        alpha,
        eps_prime,
        j_star,
        bucket_removed,
        boundary_removed,
        cut_removed,
        partitioner_calls: calls,
        k_prime,
        removed_weight: T::zero(),
        total_weight,
    };
    let removed = report.removed();
    report.removed_weight = removed
        .iter()
        .fold(T::zero(), |a, &(u, v)| a + g.edge_weight(u, v));
    if report.removed_weight > eps.clone() * report.total_weight.clone() {
        return Err(Error::Verification("removed weight exceeds the budget".into()));
    }
    let zero: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|&(u, v)| !g.edge_weight(u, v).is_positive())
        .collect();
    let rest = g.remove_edges(&removed).remove_edges(&zero);
    if rest.max_component_size() > report.k_prime {
        return Err(Error::Verification("component bound fails after removal".into()));
    }
    Ok(report)
}

/// One binary symbol per edge uv (u < v) with the single tuple (u, v).
pub fn edge_labeled_structure<T: Scalar>(g: &Graph<T>) -> Result<ValuedStructure<T>> {
    let edges = g.edges();
    if edges.is_empty() {
        return Err(Error::InvalidArgument("graph has no edges".into()));
    }
    let names = edges
        .iter()
        .map(|&(u, v)| (format!("e:{}:{}", g.vertices()[u], g.vertices()[v]), 2))
        .collect();
    let mut s = ValuedStructure::new(Signature::new(names)?, g.vertices().to_vec())?;
    for (i, &(u, v)) in edges.iter().enumerate() {
        s.set(i, vec![u, v], T::one())?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedModulator<T> {
    pub modulator: FractionalModulator<T>,
    /// Marginal bound 1 − r₁·r₂ implied by the verified factors.
    pub bound: T,
    pub max_marginal: T,
    /// For every support pair, g embeds G − F into gaifman(B).
    pub embeddings_ok: bool,
}

/// Edge modulator read off overcasts ω: A → r₁B and ω′: B → r₂A on the
/// edge-labeled structure of G: e is removed by (g, g′) unless g′ maps g(e)
/// back onto e and B is positive on g(e).
pub fn extract_edge_modulator<T: Scalar>(
    g: &Graph<T>,
    b: &ValuedStructure<T>,
    omega: &Overcast<T>,
    r1: &T,
    omega_prime: &Overcast<T>,
    r2: &T,
    cap: u128,
) -> Result<ExtractedModulator<T>> {
    let a = edge_labeled_structure(g)?;
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch(
            "B must use the edge-labeled signature of G".into(),
        ));
    }
    if !verify_scaled(omega, &a, b, r1)?.holds() {
        return Err(Error::Verification("forward overcast fails".into()));
    }
    if !verify_scaled(omega_prime, b, &a, r2)?.holds() {
        return Err(Error::Verification("backward overcast fails".into()));
    }
    let pairs = (omega.len() as u128).saturating_mul(omega_prime.len() as u128);
    crate::error::cap_check("extraction support pairs", pairs, cap)?;
    let edges = g.edges();
    let gb = gaifman(b);
    let mut entries = Vec::new();
    let mut embeddings_ok = true;
    for (h, p) in omega.support() {
        for (h2, p2) in omega_prime.support() {
            let mut f = Vec::new();
            for (i, &(u, v)) in edges.iter().enumerate() {
                let y = h.apply(&[u, v]);
                let back = h2.apply(&y);
                let same = (back[0] == u && back[1] == v) || (back[0] == v && back[1] == u);
                if !same || b.get(i, &y).is_zero() {
                    f.push(i);
                }
            }
            let kept: Vec<(usize, usize)> = edges
                .iter()
                .enumerate()
                .filter(|(i, _)| f.binary_search(i).is_err())
                .map(|(_, &e)| e)
                .collect();
            let verts: BTreeSet<usize> = kept.iter().flat_map(|&(u, v)| [u, v]).collect();
            let images: BTreeSet<usize> = verts.iter().map(|&v| h.0[v]).collect();
            embeddings_ok &= images.len() == verts.len()
                && kept.iter().all(|&(u, v)| gb.has_edge(h.0[u], h.0[v]));
            entries.push((f, p.clone() * p2.clone()));
        }
    }
    let bound_param = crate::graphs::parameter(&gb, Param::Tw).value;
    let modulator = FractionalModulator::new(ModulatorKind::Edge, Param::Tw, bound_param, entries)?;
    let max_marginal = modulator.thinness(edges.len());
    let bound = T::one() - r1.clone() * r2.clone();
    Ok(ExtractedModulator {
        modulator,
        bound,
        max_marginal,
        embeddings_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{as_structure, clique, grid, path, star};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn baker_examples() {
        let p6 = path::<Rational>(6);
        let m: FractionalModulator<Rational> = baker_modulator(&p6, 2, &[0]).unwrap();
        assert_eq!(m.support().len(), 2);
        assert_eq!(m.bound, 0);
        assert_eq!(m.thinness_in(&p6), q(1, 2));
        let g4 = grid::<Rational>(2, 4);
        let m: FractionalModulator<Rational> = baker_modulator(&g4, 4, &[0]).unwrap();
        assert_eq!(m.thinness_in(&g4), q(1, 4));
        assert!(m.bound <= 12);
        let s = star::<Rational>(5);
        let m: FractionalModulator<Rational> = baker_modulator(&s, 2, &[0]).unwrap();
        assert!(m.bound <= 1);
        let mut two = path::<Rational>(4);
        two.remove_edge(1, 2);
        assert!(baker_modulator::<Rational, _>(&two, 2, &[0]).is_err());
    }

    #[test]
    fn grid_slabs() {
        let m: FractionalModulator<Rational> = grid_modulator(&[4, 4], 4, &[0, 1]).unwrap();
        assert!(m.thinness(16) <= q(1, 2));
        let m: FractionalModulator<Rational> = grid_modulator(&[4, 4], 4, &[0]).unwrap();
        assert_eq!(m.thinness(16), q(1, 4));
        assert!(m.bound <= 4);
    }

    #[test]
    fn duality_examples() {
        let fam = vec![vec![0, 1], vec![1, 2], vec![0, 2]];
        match thin_distribution(3, &fam, &q(2, 3)).unwrap() {
            ThinOutcome::Distribution(x) => assert_eq!(x.len(), 3),
            _ => panic!("expected a distribution"),
        }
        match thin_distribution(3, &fam, &q(1, 2)).unwrap() {
            ThinOutcome::Weights(w) => assert!(dual_check(&fam, &w, &q(1, 2)).is_none()),
            _ => panic!("expected weights"),
        }
        let w = vec![q(0, 1), q(5, 1), q(0, 1), q(0, 1)];
        assert_eq!(dual_check(&[vec![1], vec![0, 2, 3]], &w, &q(1, 4)), Some(1));
    }

    #[test]
    fn star_singletons() {
        // centre 0 of weight 1, leaves of weight 1: thin iff the least
        // weight ≤ ε·total
        let fam: Vec<Vec<usize>> = (0..4).map(|v| vec![v]).collect();
        assert!(matches!(
            thin_distribution(4, &fam, &q(1, 4)).unwrap(),
            ThinOutcome::Distribution(_)
        ));
        assert!(matches!(
            thin_distribution(4, &fam, &q(1, 5)).unwrap(),
            ThinOutcome::Weights(_)
        ));
    }

    #[test]
    fn vertex_edge_conversions() {
        let p4 = path::<Rational>(4);
        let pi = FractionalModulator::new(
            ModulatorKind::Vertex,
            Param::Cc,
            3,
            vec![(vec![1], q(1, 2)), (vec![2], q(1, 2))],
        )
        .unwrap();
        let e = edge_from_vertex(&pi, &p4).unwrap();
        assert!(e.thinness(3) <= q(1, 1));
        let g4 = grid::<Rational>(2, 4);
        let b: FractionalModulator<Rational> = baker_modulator(&g4, 4, &[0]).unwrap();
        let e = edge_from_vertex(&b, &g4).unwrap();
        assert!(e.thinness(g4.edge_count()) <= q(1, 2));
        let t = crate::generators::random_tree::<Rational>(8, 3);
        let pe = FractionalModulator::new(
            ModulatorKind::Edge,
            Param::Cc,
            8,
            vec![(vec![0, 3], q(1, 2)), (vec![5], q(1, 2))],
        )
        .unwrap();
        let (pv, d) = vertex_from_edge(&pe, &t).unwrap();
        assert_eq!(d, 1);
        assert!(pv.thinness(8) <= pe.thinness(7));
    }

    #[test]
    fn fragile_to_pliable_examples() {
        let k3 = as_structure(&clique::<Rational>(3));
        let pi = FractionalModulator::point(ModulatorKind::Vertex, Param::Tw, 2, vec![]);
        let w = fragile_to_pliable(&k3, &pi, 2).unwrap();
        assert_eq!(w.b.norm1(), k3.norm1());
        assert_eq!(w.factor, q(1, 1));
        let p4 = as_structure(&path::<Rational>(4));
        let pi = FractionalModulator::new(
            ModulatorKind::Vertex,
            Param::Cc,
            3,
            vec![(vec![1], q(1, 2)), (vec![2], q(1, 2))],
        )
        .unwrap();
        let w = fragile_to_pliable(&p4, &pi, 2).unwrap();
        assert_eq!(w.factor, q(0, 1));
        let surv: BTreeMap<Vec<usize>, Rational> =
            w.survival.into_iter().map(|(_, x, s)| (x, s)).collect();
        assert_eq!(surv[&vec![0, 1]], q(1, 2));
        assert_eq!(surv[&vec![1, 2]], q(0, 1));
        let g3 = grid::<Rational>(2, 3);
        let pi: FractionalModulator<Rational> = baker_modulator(&g3, 3, &[0]).unwrap();
        let w = fragile_to_pliable(&as_structure(&g3), &pi, 2).unwrap();
        assert_eq!(w.factor, q(1, 3));
        assert!(crate::graphs::parameter(&gaifman(&w.b), Param::Tw).value <= 9);
    }

    #[test]
    fn bucketing_examples() {
        let mut p = path::<Rational>(13);
        for i in 0..12 {
            p.set_edge_weight(i, i + 1, q(1, 1 << i));
        }
        let r = bucket_edge_weights(&p, &q(1, 2), &LayerCut).unwrap();
        assert!(r.removed_weight <= r.total_weight.clone() * q(1, 2));
        let u = path::<Rational>(10);
        let r = bucket_edge_weights(&u, &q(1, 2), &NoCut).unwrap();
        assert_eq!(r.partitioner_calls, 1);
        assert!(r.removed().is_empty());
        let mut two = path::<Rational>(7);
        for i in 3..6 {
            two.set_edge_weight(i, i + 1, q(1, 10_000));
        }
        let r = bucket_edge_weights(&two, &q(1, 2), &NoCut).unwrap();
        assert_eq!(r.boundary_removed, vec![(3, 4)]);
    }

    #[test]
    fn extraction_examples() {
        let p3 = path::<Rational>(3);
        let a = edge_labeled_structure(&p3).unwrap();
        let id = Overcast::identity(3);
        let e = extract_edge_modulator(&p3, &a, &id, &q(1, 1), &id, &q(1, 1), 100).unwrap();
        assert_eq!(e.modulator.support(), &[(vec![], q(1, 1))]);
        let mut b = a.clone();
        b.set(0, vec![0, 1], q(0, 1)).unwrap();
        let e = extract_edge_modulator(&p3, &b, &id, &q(1, 1), &id, &q(0, 1), 100).unwrap();
        assert_eq!(e.modulator.support(), &[(vec![0], q(1, 1))]);
        assert!(e.max_marginal <= e.bound);
        assert!(e.embeddings_ok);
    }
}
