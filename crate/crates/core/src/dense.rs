//! Dense graphs: quotients by vertex partitions, homogeneity defects, clique
//! overcasts, counting and extension checks, and the quotient overcast.

use crate::error::{cap_check, Error, Result};
use crate::generators::{clique, rng};
use crate::graphs::Graph;
use crate::overcast::{
    compose, edit_overcast, surrogate, verify_scaled, CoverageReport, Overcast, TupleSlack,
    COMPOSE_CAP,
};
use crate::scalar::{binomial, from_usize, Scalar};
use crate::structures::{
    edit_distance_under, graph_structure, Assignment, Distance, Signature, ValuedStructure,
};
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

/// Default bound on the number of 𝒫-maps enumerated.
pub const PMAP_CAP: u128 = 1_000_000;
/// Exact homogeneity enumerates the subsets of the smaller side up to this
/// size.
pub const EXACT_SIDE_CAP: usize = 20;
/// Bound on the explicit support of clique overcasts.
pub const CLIQUE_MAP_CAP: u128 = 1_000_000;
/// Denominator of the rational upper bound on √ε.
pub const SQRT_DENOMINATOR: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<Vec<usize>>,
    part_of: Vec<usize>,
}

impl Partition {
    /// Non-empty disjoint parts covering `0..n`.
    pub fn new(parts: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut part_of = vec![usize::MAX; n];
        for (i, p) in parts.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidArgument(format!("part {i} is empty")));
            }
            for &v in p {
                if v >= n || part_of[v] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "vertex {v} out of range or in two parts"
                    )));
                }
                part_of[v] = i;
            }
        }
        if part_of.contains(&usize::MAX) {
            return Err(Error::InvalidArgument("parts do not cover the vertices".into()));
        }
        let parts = parts
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        Ok(Partition { parts, part_of })
    }

    /// Consecutive blocks of sizes ⌈n/k⌉ then ⌊n/k⌋.
    pub fn balanced(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("cannot split {n} vertices into {k} parts")));
        }
        let mut parts = Vec::new();
        let mut next = 0;
        for i in 0..k {
            let s = n / k + usize::from(i < n % k);
            parts.push((next..next + s).collect());
            next += s;
        }
        Partition::new(parts, n)
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.part_of[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.part_of.len()
    }

    pub fn is_balanced(&self) -> bool {
        let n = self.vertex_count();
        let k = self.k();
        self.parts.iter().all(|p| p.len() == n / k || p.len() == n.div_ceil(k))
    }

    /// Number of 𝒫-maps, ∏|V_i| (saturating).
    pub fn map_count(&self) -> u128 {
        self.parts
            .iter()
            .fold(1u128, |a, p| a.saturating_mul(p.len() as u128))
    }
}

fn check_partition<T: Scalar>(g: &Graph<T>, p: &Partition) -> Result<()> {
    if p.vertex_count() != g.vertex_count() {
        return Err(Error::InvalidArgument("partition does not match the graph".into()));
    }
    Ok(())
}

fn weight_matrix<T: Scalar>(g: &Graph<T>) -> Vec<Vec<T>> {
    let n = g.vertex_count();
    let mut w = vec![vec![T::zero(); n]; n];
    for (u, v) in g.edges() {
        let x = g.edge_weight(u, v);
        w[u][v] = x.clone();
        w[v][u] = x;
    }
    w
}

fn cross_weight<T: Scalar>(w: &[Vec<T>], a: &[usize], b: &[usize]) -> T {
    let mut s = T::zero();
    for &u in a {
        for &v in b {
            s = s + w[u][v].clone();
        }
    }
    s
}

/// Weighted graph on the parts with w(i, j) = w_G(V_i, V_j) over ordered
/// pairs; the diagonal becomes loops.
pub fn quotient<T: Scalar>(g: &Graph<T>, p: &Partition) -> Result<ValuedStructure<T>> {
    check_partition(g, p)?;
    let w = weight_matrix(g);
    let k = p.k();
    let mut q = ValuedStructure::new(Signature::graph(), (0..k).map(|i| format!("V{i}")).collect())?;
    for i in 0..k {
        for j in 0..k {
            let x = cross_weight(&w, &p.parts[i], &p.parts[j]);
            if x.is_positive() {
                q.set(0, vec![i, j], x)?;
            }
        }
    }
    Ok(q)
}

/// d_ij = w_G(V_i, V_j)/(|V_i||V_j|).
pub fn densities<T: Scalar>(g: &Graph<T>, p: &Partition) -> Result<Vec<Vec<T>>> {
    check_partition(g, p)?;
    let w = weight_matrix(g);
    Ok(p.parts
        .iter()
        .map(|a| {
            p.parts
                .iter()
                .map(|b| cross_weight(&w, a, b) / from_usize::<T>(a.len() * b.len()))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectMode {
    Exact,
    /// Random subsets of the smaller side, each optimally completed.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneityReport<T> {
    pub density: T,
    /// max |w(W₁,W₂) − d|W₁||W₂|| / (|V₁||V₂|) over the tested pairs.
    pub defect: T,
    /// False when sampled: then the defect is only a lower bound.
    pub exact: bool,
    pub witness: (Vec<usize>, Vec<usize>),
}

/// Homogeneity defect of the bipartite graph between `v1` and `v2`. For a
/// fixed W₁ the best W₂ takes all vertices of one sign of
/// w(W₁, y) − d|W₁|, so only subsets of the smaller side are enumerated.
pub fn homogeneity_defect<T: Scalar>(
    g: &Graph<T>,
    v1: &[usize],
    v2: &[usize],
    mode: DefectMode,
) -> Result<HomogeneityReport<T>> {
    if v1.is_empty() || v2.is_empty() {
        return Err(Error::InvalidArgument("empty side".into()));
    }
    let w = weight_matrix(g);
    let swapped = v1.len() > v2.len();
    let (small, large) = if swapped { (v2, v1) } else { (v1, v2) };
    let area = from_usize::<T>(v1.len() * v2.len());
    let density = cross_weight(&w, v1, v2) / area.clone();
    let mut best = T::zero();
    let mut witness = (Vec::new(), Vec::new());
    let mut consider = |ws: Vec<usize>| {
        let dw = density.clone() * from_usize::<T>(ws.len());
        let s: Vec<T> = large
            .iter()
            .map(|&y| ws.iter().fold(T::zero(), |a, &x| a + w[x][y].clone()) - dw.clone())
            .collect();
        let pos: Vec<usize> = (0..large.len()).filter(|&i| s[i].is_positive()).collect();
        let neg: Vec<usize> = (0..large.len()).filter(|&i| s[i].is_negative()).collect();
        let sp = pos.iter().fold(T::zero(), |a, &i| a + s[i].clone());
        let sn = neg.iter().fold(T::zero(), |a, &i| a - s[i].clone());
        let (val, pick) = if sp >= sn { (sp, pos) } else { (sn, neg) };
        if val > best {
            best = val;
            witness = (ws, pick.iter().map(|&i| large[i]).collect());
        }
    };
    let exact = match mode {
        DefectMode::Exact => {
            cap_check("exact homogeneity side", small.len() as u128, EXACT_SIDE_CAP as u128)?;
            for mask in 0u64..(1 << small.len()) {
                consider((0..small.len()).filter(|i| mask >> i & 1 == 1).map(|i| small[i]).collect());
            }
            true
        }
        DefectMode::Sampled { samples, seed } => {
            let mut r = rng(seed);
            for _ in 0..samples {
                consider(small.iter().copied().filter(|_| r.gen_bool(0.5)).collect());
            }
            false
        }
    };
    let (a, b) = witness;
    Ok(HomogeneityReport {
        density,
        defect: best / area,
        exact,
        witness: if swapped { (b, a) } else { (a, b) },
    })
}

/// Maximum defect over all pairs of parts, with whether it is exact.
pub fn partition_defect<T: Scalar>(g: &Graph<T>, p: &Partition, mode: DefectMode) -> Result<(T, bool)> {
    check_partition(g, p)?;
    let mut worst = T::zero();
    let mut exact = true;
    for (i, j) in (0..p.k()).tuple_combinations() {
        let r = homogeneity_defect(g, &p.parts[i], &p.parts[j], mode)?;
        exact &= r.exact;
        worst = T::max_of(worst, r.defect);
    }
    Ok((worst, exact))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueOvercast<T> {
    pub lambda: T,
    /// K_n → (1−1/k)λK_k, uniform over all functions.
    pub forward: Overcast<T>,
    pub forward_factor: T,
    /// λK_k → (1−1/n)K_n, uniform over all functions.
    pub backward: Overcast<T>,
    pub backward_factor: T,
    pub forward_report: CoverageReport<T>,
    pub backward_report: CoverageReport<T>,
}

fn all_functions(n: usize, k: usize) -> Vec<Assignment> {
    (0..n)
        .map(|_| 0..k)
        .multi_cartesian_product()
        .map(Assignment)
        .collect()
}

/// Random-function overcasts between K_n and λK_k with λ = C(n,2)/C(k,2).
pub fn clique_overcast<T: Scalar>(n: usize, k: usize) -> Result<CliqueOvercast<T>> {
    if n < 2 || k < 2 {
        return Err(Error::InvalidArgument("cliques need at least two vertices".into()));
    }
    let fw_size = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let bw_size = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    cap_check("clique overcast support", fw_size.max(bw_size), CLIQUE_MAP_CAP)?;
    let lambda = binomial::<T>(n as u64, 2) / binomial::<T>(k as u64, 2);
    let kn = graph_structure(&clique::<T>(n));
    let kk = graph_structure(&clique::<T>(k)).rescale(&lambda)?;
    let forward = Overcast::uniform(all_functions(n, k))?;
    let backward = Overcast::uniform(all_functions(k, n))?;
    let forward_factor = T::one() - T::one() / from_usize::<T>(k);
    let backward_factor = T::one() - T::one() / from_usize::<T>(n);
    let forward_report = verify_scaled(&forward, &kn, &kk, &forward_factor)?;
    let backward_report = verify_scaled(&backward, &kk, &kn, &backward_factor)?;
    Ok(CliqueOvercast {
        lambda,
        forward,
        forward_factor,
        backward,
        backward_factor,
        forward_report,
        backward_report,
    })
}

fn normalize_pairs(k: usize, f: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for &(i, j) in f {
        if i == j || i >= k || j >= k {
            return Err(Error::InvalidArgument(format!("bad part pair ({i}, {j})")));
        }
        out.push((i.min(j), i.max(j)));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Calls `visit(g, hom_g(F, G))` for every 𝒫-map with a positive product.
fn for_each_pmap<T: Scalar>(
    w: &[Vec<T>],
    p: &Partition,
    f: &[(usize, usize)],
    mut visit: impl FnMut(&[usize], &T),
) -> Result<()> {
    cap_check("partition map count", p.map_count(), PMAP_CAP)?;
    let k = p.k();
    // pairs checked when their larger endpoint is placed
    let mut closing = vec![Vec::new(); k];
    for &(i, j) in f {
        closing[j].push(i);
    }
    fn rec<T: Scalar>(
        i: usize,
        g: &mut Vec<usize>,
        acc: T,
        w: &[Vec<T>],
        p: &Partition,
        closing: &[Vec<usize>],
        visit: &mut dyn FnMut(&[usize], &T),
    ) {
        if i == p.k() {
            visit(g, &acc);
            return;
        }
        for &x in &p.parts[i] {
            let mut a = acc.clone();
            for &j in &closing[i] {
                a = a * w[g[j]][x].clone();
            }
            if a.is_zero() {
                continue;
            }
            g.push(x);
            rec(i + 1, g, a, w, p, closing, visit);
            g.pop();
        }
    }
    let mut g = Vec::with_capacity(k);
    rec(0, &mut g, T::one(), w, p, &closing, &mut visit);
    Ok(())
}

fn measured_or<T: Scalar>(g: &Graph<T>, p: &Partition, eps: Option<&T>) -> Result<(T, bool)> {
    match eps {
        Some(e) => Ok((e.clone(), true)),
        None => partition_defect(g, p, DefectMode::Exact),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingReport<T> {
    pub sum: T,
    pub maps: u128,
    /// ∏|V_i| · ∏_{F} d_ij
    pub center: T,
    /// ∏|V_i| · ε|F|
    pub half_width: T,
    pub eps: T,
    pub eps_exact: bool,
    pub contains: bool,
}

/// Σ_g hom_g(F, G) over 𝒫-maps against ∏|V_i|(∏ d_ij ± ε|F|). Without an
/// explicit ε the exact measured defect of the partition is used.
pub fn counting_check<T: Scalar>(
    g: &Graph<T>,
    p: &Partition,
    f: &[(usize, usize)],
    eps: Option<&T>,
) -> Result<CountingReport<T>> {
    check_partition(g, p)?;
    let f = normalize_pairs(p.k(), f)?;
    let (eps, eps_exact) = measured_or(g, p, eps)?;
    let w = weight_matrix(g);
    let d = densities(g, p)?;
    let mut sum = T::zero();
    for_each_pmap(&w, p, &f, |_, h| sum = sum.clone() + h.clone())?;
    let total = p
        .parts
        .iter()
        .fold(T::one(), |a, v| a * from_usize::<T>(v.len()));
    let center = total.clone() * f.iter().fold(T::one(), |a, &(i, j)| a * d[i][j].clone());
    let half_width = total * eps.clone() * from_usize::<T>(f.len());
    let contains = (sum.clone() - center.clone()).abs() <= half_width;
    Ok(CountingReport {
        sum,
        maps: p.map_count(),
        center,
        half_width,
        eps,
        eps_exact,
        contains,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionReport<T> {
    pub pair: (usize, usize),
    pub eps: T,
    /// Least multiple of 1/10⁶ whose square is at least ε.
    pub sqrt_eps: T,
    /// (x_a, x_b) whose pinned sum leaves the window.
    pub exceptions: Vec<(usize, usize)>,
    pub checked: usize,
    /// 2k√ε|V_a||V_b|
    pub allowed: T,
    pub holds: bool,
}

/// Pinned sums Σ_{g(a)=x_a, g(b)=x_b} hom_g(F, G) against
/// ∏_{i≠a,b}|V_i|·(w(x_a,x_b)∏_{F−ab} d_ij ± √ε|F|) for every pair.
pub fn extension_check<T: Scalar>(
    g: &Graph<T>,
    p: &Partition,
    f: &[(usize, usize)],
    ab: (usize, usize),
    eps: Option<&T>,
) -> Result<ExtensionReport<T>> {
    check_partition(g, p)?;
    let f = normalize_pairs(p.k(), f)?;
    let (a, b) = (ab.0.min(ab.1), ab.0.max(ab.1));
    if !f.contains(&(a, b)) {
        return Err(Error::InvalidArgument(format!("pair ({a}, {b}) is not in F")));
    }
    let (eps, _) = measured_or(g, p, eps)?;
    let w = weight_matrix(g);
    let d = densities(g, p)?;
    let (va, vb) = (&p.parts[a], &p.parts[b]);
    let mut pinned = vec![vec![T::zero(); vb.len()]; va.len()];
    let ia = |x: usize| va.binary_search(&x).unwrap();
    let ib = |x: usize| vb.binary_search(&x).unwrap();
    for_each_pmap(&w, p, &f, |m, h| {
        let e = &mut pinned[ia(m[a])][ib(m[b])];
        *e = e.clone() + h.clone();
    })?;
    let rest = (0..p.k())
        .filter(|&i| i != a && i != b)
        .fold(T::one(), |acc, i| acc * from_usize::<T>(p.parts[i].len()));
    let others = f
        .iter()
        .filter(|&&e| e != (a, b))
        .fold(T::one(), |acc, &(i, j)| acc * d[i][j].clone());
    let sqrt_eps = eps.sqrt_upper(SQRT_DENOMINATOR);
    let half = rest.clone() * sqrt_eps.clone() * from_usize::<T>(f.len());
    let mut exceptions = Vec::new();
    for (i, &xa) in va.iter().enumerate() {
        for (j, &xb) in vb.iter().enumerate() {
            let center = rest.clone() * w[xa][xb].clone() * others.clone();
            if (pinned[i][j].clone() - center).abs() > half {
                exceptions.push((xa, xb));
            }
        }
    }
    let allowed = from_usize::<T>(2 * p.k() * va.len() * vb.len()) * sqrt_eps.clone();
    let holds = from_usize::<T>(exceptions.len()) <= allowed;
    Ok(ExtensionReport {
        pair: (a, b),
        eps,
        sqrt_eps,
        exceptions,
        checked: va.len() * vb.len(),
        allowed,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientCertificate<T> {
    pub quotient: ValuedStructure<T>,
    /// G → G/𝒫, every part onto its index.
    pub forward: Overcast<T>,
    /// G/𝒫 → r·G′ with ω(g) = hom_g(F,G)/N.
    pub backward: Overcast<T>,
    /// r = 1/(1+ε₀/2).
    pub factor: T,
    /// G after pruning.
    pub pruned: ValuedStructure<T>,
    pub f_pairs: Vec<(usize, usize)>,
    pub eps_measured: T,
    /// Edit distance between G and G′ (at most ε₀/2).
    pub edit_distance: T,
    /// G/𝒫 → chain_factor·G through the edit overcast G′ → (1−δ)G.
    pub chain: Overcast<T>,
    pub chain_factor: T,
    /// Whether 1/k ≤ (c/10)·ε₀/(1+ε₀) holds for the edge density c = |E|/n².
    pub density_hypothesis: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientDiagnosis<T> {
    pub reasons: Vec<String>,
    pub f_pairs: Vec<(usize, usize)>,
    pub eps_measured: T,
    pub removed_edges: usize,
    pub kept_edges: usize,
    /// Tuples of G′ the backward distribution fails to cover.
    pub failing: Vec<TupleSlack<T>>,
    pub density_hypothesis: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotientOutcome<T> {
    Certified(Box<QuotientCertificate<T>>),
    Rejected(QuotientDiagnosis<T>),
}

/// Quotient overcasts with the measured defect in place of the regularity
/// parameter. F keeps part pairs of density ≥ 1/k; G′ drops edges inside
/// parts, between pairs outside F, of weight below ε^{1/8}, and edges failing
/// the extension window. Certified only when the backward overcast covers
/// r·G′ and d_edit(G, G′) ≤ ε₀/2.
pub fn quotient_overcast<T: Scalar>(
    g: &Graph<T>,
    p: &Partition,
    eps0: &T,
) -> Result<QuotientOutcome<T>> {
    check_partition(g, p)?;
    if !eps0.is_positive() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let k = p.k();
    let gs = graph_structure(g);
    let quotient = quotient(g, p)?;
    let forward = Overcast::point(Assignment((0..g.vertex_count()).map(|v| p.part_of(v)).collect()));
    if !verify_scaled(&forward, &gs, &quotient, &T::one())?.holds() {
        return Err(Error::Verification("quotient map fails to cover the quotient".into()));
    }
    let d = densities(g, p)?;
    let inv_k = T::one() / from_usize::<T>(k);
    let f_pairs: Vec<(usize, usize)> = (0..k)
        .tuple_combinations()
        .filter(|&(i, j)| d[i][j] >= inv_k)
        .collect();
    let (eps, _) = partition_defect(g, p, DefectMode::Exact)?;
    let n = g.vertex_count();
    let c = from_usize::<T>(g.edge_count()) / from_usize::<T>((n * n).max(1));
    let density_hypothesis =
        inv_k <= c.clone() / from_usize::<T>(10) * eps0.clone() / (T::one() + eps0.clone());
    let mut failures = std::collections::BTreeSet::new();
    for &ab in &f_pairs {
        let r = extension_check(g, p, &f_pairs, ab, Some(&eps))?;
        failures.extend(r.exceptions);
    }
    let mut pruned_graph = Graph::new(g.vertices().to_vec())?;
    let mut removed = 0;
    for (u, v) in g.edges() {
        let (a, b) = (p.part_of(u), p.part_of(v));
        let wt = g.edge_weight(u, v);
        let keep = a != b
            && f_pairs.contains(&(a.min(b), a.max(b)))
            && wt.pow_u(8) >= eps
            && !failures.contains(&if a < b { (u, v) } else { (v, u) });
        if keep {
            pruned_graph.add_edge(u, v);
            pruned_graph.set_edge_weight(u, v, wt);
        } else {
            removed += 1;
        }
    }
    let pruned = graph_structure(&pruned_graph);
    let w = weight_matrix(g);
    let mut maps = Vec::new();
    for_each_pmap(&w, p, &f_pairs, |m, h| maps.push((m.to_vec(), h.clone())))?;
    let total = maps.iter().fold(T::zero(), |a, (_, h)| a + h.clone());
    let factor = surrogate(&(eps0.clone() / from_usize::<T>(2)));
    let mut reasons = Vec::new();
    if f_pairs.is_empty() {
        reasons.push(format!("no pair of parts reaches density 1/{k}"));
    }
    if pruned_graph.edge_count() == 0 {
        reasons.push("pruning removed every edge".into());
    }
    let edit = match edit_distance_under(&gs, &pruned, &Assignment::identity(n))? {
        Distance::Finite(x) => Some(x),
        Distance::Infinite => None,
    };
    let half = eps0.clone() / from_usize::<T>(2);
    match &edit {
        Some(x) if *x > half => reasons.push(format!("pruned edit distance {x} exceeds {half}")),
        None => reasons.push("pruned graph is at infinite edit distance".into()),
        _ => {}
    }
    let mut failing = Vec::new();
    let backward = if total.is_positive() {
        let b = Overcast::new(
            maps.into_iter()
                .filter(|(_, h)| h.is_positive())
                .map(|(m, h)| (Assignment(m), h / total.clone()))
                .collect(),
        )?;
        let rep = verify_scaled(&b, &quotient, &pruned, &factor)?;
        if !rep.holds() {
            failing = rep.failing().into_iter().cloned().collect();
            reasons.push(format!("backward coverage fails on {} tuples", failing.len()));
        }
        Some(b)
    } else {
        reasons.push("no partition map is a homomorphism of F".into());
        None
    };
    let diagnosis = |reasons| QuotientDiagnosis {
        reasons,
        f_pairs: f_pairs.clone(),
        eps_measured: eps.clone(),
        removed_edges: removed,
        kept_edges: pruned_graph.edge_count(),
        failing: failing.clone(),
        density_hypothesis,
    };
    if !reasons.is_empty() {
        if !density_hypothesis {
            reasons.push(format!("density hypothesis 1/{k} <= (c/10)*eps0/(1+eps0) fails for c = {c}"));
        }
        return Ok(QuotientOutcome::Rejected(diagnosis(reasons)));
    }
    let backward = backward.unwrap();
    let edit_distance = edit.unwrap();
    let e = edit_overcast(&pruned, &gs, Some(&Assignment::identity(n)))?;
    let chain = compose(&backward, &e.omega, COMPOSE_CAP)?;
    let chain_factor = factor.clone() * (T::one() - e.delta);
    if !verify_scaled(&chain, &quotient, &gs, &chain_factor)?.holds() {
        return Ok(QuotientOutcome::Rejected(diagnosis(vec![
            "edit chain to G fails".into(),
        ])));
    }
    Ok(QuotientOutcome::Certified(Box::new(QuotientCertificate {
        quotient,
        forward,
        backward,
        factor,
        pruned,
        f_pairs,
        eps_measured: eps,
        edit_distance,
        chain,
        chain_factor,
        density_hypothesis,
    })))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult<T> {
    pub partition: Partition,
    pub defect: T,
    pub exact: bool,
    /// Starting partitions tried (the consecutive one plus random ones).
    pub starts: usize,
}

fn search_mode(p: &Partition) -> DefectMode {
    let min_side = p.parts.iter().map(|x| x.len()).min().unwrap_or(0);
    if min_side <= 12 {
        DefectMode::Exact
    } else {
        DefectMode::Sampled { samples: 64, seed: 0 }
    }
}

/// Local search over balanced k-partitions minimizing the maximum pairwise
/// defect: the consecutive partition and `budget` random ones, each improved
/// by vertex swaps until no swap helps. A heuristic; no regularity bound is
/// claimed.
pub fn regularity_search<T: Scalar>(
    g: &Graph<T>,
    k: usize,
    budget: usize,
    seed: u64,
) -> Result<SearchResult<T>> {
    let n = g.vertex_count();
    let first = Partition::balanced(n, k)?;
    if k == n {
        return Ok(SearchResult {
            partition: first,
            defect: T::zero(),
            exact: true,
            starts: 1,
        });
    }
    let mut r = rng(seed);
    let mut starts = vec![first];
    for _ in 0..budget {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let b = Partition::balanced(n, k)?;
        let parts = b.parts.iter().map(|p| p.iter().map(|&i| perm[i]).collect()).collect();
        starts.push(Partition::new(parts, n)?);
    }
    let mut best: Option<(Partition, T, bool)> = None;
    let count = starts.len();
    for start in starts {
        let mut cur = start;
        let (mut val, mut exact) = partition_defect(g, &cur, search_mode(&cur))?;
        'improve: loop {
            for (i, j) in (0..k).tuple_combinations() {
                for x in 0..cur.parts[i].len() {
                    for y in 0..cur.parts[j].len() {
                        let mut parts = cur.parts.clone();
                        let (u, v) = (parts[i][x], parts[j][y]);
                        parts[i][x] = v;
                        parts[j][y] = u;
                        let cand = Partition::new(parts, n)?;
                        let (cv, ce) = partition_defect(g, &cand, search_mode(&cand))?;
                        if cv < val {
                            cur = cand;
                            val = cv;
                            exact = ce;
                            continue 'improve;
                        }
                    }
                }
            }
            break;
        }
        if best.as_ref().is_none_or(|(_, b, _)| val < *b) {
            best = Some((cur, val, exact));
        }
    }
    let (partition, defect, exact) = best.unwrap();
    Ok(SearchResult {
        partition,
        defect,
        exact,
        starts: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_multipartite, cycle, gnp, perfect_matching};
    use num_traits::Signed;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn quotient_examples() {
        let c4 = cycle::<Rational>(4);
        let p = Partition::new(vec![vec![0, 2], vec![1, 3]], 4).unwrap();
        let qg = quotient(&c4, &p).unwrap();
        assert_eq!(qg.get(0, &[0, 1]) + qg.get(0, &[1, 0]), q(8, 1));
        assert_eq!(qg.get(0, &[0, 0]), q(0, 1));
        let one = Partition::new(vec![vec![0, 1, 2, 3]], 4).unwrap();
        assert_eq!(quotient(&c4, &one).unwrap().get(0, &[0, 0]), q(8, 1));
        let k4 = clique::<Rational>(4);
        let single = Partition::balanced(4, 4).unwrap();
        assert_eq!(quotient(&k4, &single).unwrap(), graph_structure(&k4).relabel((0..4).map(|i| format!("V{i}")).collect()).unwrap());
    }

    #[test]
    fn homogeneity_examples() {
        let kb = complete_multipartite::<Rational>(&[3, 3]);
        let r = homogeneity_defect(&kb, &[0, 1, 2], &[3, 4, 5], DefectMode::Exact).unwrap();
        assert_eq!(r.defect, q(0, 1));
        let mut one = Graph::<Rational>::with_size(6);
        one.add_edge(0, 3);
        let r = homogeneity_defect(&one, &[0, 1, 2], &[3, 4, 5], DefectMode::Exact).unwrap();
        // brute force over all subset pairs
        let mut best = q(0, 1);
        for m1 in 0..8u32 {
            for m2 in 0..8u32 {
                let e = if m1 & 1 == 1 && m2 & 1 == 1 { 1 } else { 0 };
                let x = (q(e, 1) - q((m1.count_ones() * m2.count_ones()) as i64, 9)).abs() / q(9, 1);
                best = best.max(x);
            }
        }
        assert_eq!(r.defect, best);
        let empty = Graph::<Rational>::with_size(6);
        let r = homogeneity_defect(&empty, &[0, 1, 2], &[3, 4, 5], DefectMode::Exact).unwrap();
        assert_eq!(r.defect, q(0, 1));
    }

    #[test]
    fn clique_examples() {
        let c = clique_overcast::<Rational>(4, 2).unwrap();
        assert_eq!(c.lambda, q(6, 1));
        assert!(c.forward_report.zero_slack() && c.backward_report.zero_slack());
        assert_eq!(c.forward_report.tuples[0].covered, q(3, 1));
        let c = clique_overcast::<Rational>(6, 3).unwrap();
        assert_eq!(c.lambda, q(5, 1));
        assert_eq!((c.forward_factor.clone(), c.backward_factor.clone()), (q(2, 3), q(5, 6)));
        assert!(c.forward_report.zero_slack() && c.backward_report.zero_slack());
        let c = clique_overcast::<Rational>(3, 3).unwrap();
        assert_eq!(c.lambda, q(1, 1));
    }

    #[test]
    fn counting_examples() {
        let g = gnp::<Rational>(12, &q(1, 2), 7).unwrap();
        let p = Partition::balanced(12, 3).unwrap();
        let r = counting_check(&g, &p, &[], None).unwrap();
        assert_eq!(r.sum, q(64, 1));
        let all = [(0, 1), (0, 2), (1, 2)];
        let r = counting_check(&g, &p, &all, None).unwrap();
        assert!(r.contains);
        let km = complete_multipartite::<Rational>(&[2, 2, 2]);
        let p3 = Partition::balanced(6, 3).unwrap();
        let r = counting_check(&km, &p3, &all, None).unwrap();
        assert_eq!((r.sum.clone(), r.half_width.clone()), (q(8, 1), q(0, 1)));
        let e = extension_check(&km, &p3, &all, (0, 1), None).unwrap();
        assert!(e.exceptions.is_empty());
        let e = extension_check(&g, &p, &all, (1, 2), None).unwrap();
        assert!(e.holds);
    }

    #[test]
    fn quotient_overcast_examples() {
        let k6 = clique::<Rational>(6);
        let p = Partition::balanced(6, 3).unwrap();
        assert!(matches!(
            quotient_overcast(&k6, &p, &q(1, 2)).unwrap(),
            QuotientOutcome::Certified(_)
        ));
        let km = complete_multipartite::<Rational>(&[2, 2, 2]);
        match quotient_overcast(&km, &p, &q(1, 2)).unwrap() {
            QuotientOutcome::Certified(c) => assert_eq!(c.edit_distance, q(0, 1)),
            QuotientOutcome::Rejected(d) => panic!("{:?}", d.reasons),
        }
        let m = perfect_matching::<Rational>(3);
        assert!(matches!(
            quotient_overcast(&m, &p, &q(1, 2)).unwrap(),
            QuotientOutcome::Rejected(_)
        ));
    }

    #[test]
    fn search_examples() {
        let km = complete_multipartite::<Rational>(&[3, 3]);
        let mut shuffled = Graph::<Rational>::with_size(6);
        let perm = [0, 3, 1, 4, 2, 5];
        for (u, v) in km.edges() {
            shuffled.add_edge(perm[u], perm[v]);
        }
        let r = regularity_search(&shuffled, 2, 3, 1).unwrap();
        assert_eq!(r.defect, q(0, 1));
        let g = gnp::<Rational>(10, &q(1, 2), 3).unwrap();
        let r = regularity_search(&g, 2, 4, 3).unwrap();
        assert!(r.partition.is_balanced() && r.exact);
        let r = regularity_search(&g, 10, 0, 3).unwrap();
        assert_eq!(r.defect, q(0, 1));
    }
}
