//! Seeded instance generators.

use crate::error::{cap_check, Error, Result};
use crate::exact::{map_count, BRUTEFORCE_CAP};
use crate::graphs::Graph;
use crate::scalar::Scalar;
use crate::structures::{gaifman, graph_structure, img, val_unchecked, Assignment, Signature, ValuedStructure};
use itertools::Itertools;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact Bernoulli(p) draw for a rational p in [0, 1].
pub fn bernoulli<T: Scalar, R: Rng>(rng: &mut R, p: &T) -> Result<bool> {
    if *p < T::zero() || *p > T::one() {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0,1]")));
    }
    let (n, d) = p.to_bigints();
    let (n, d) = match (n.to_u64(), d.to_u64()) {
        (Some(n), Some(d)) => (n, d),
        _ => return Err(Error::InvalidArgument("probability denominator too large".into())),
    };
    Ok(rng.gen_range(0..d) < n)
}

pub fn clique<T: Scalar>(n: usize) -> Graph<T> {
    let mut g = Graph::with_size(n);
    for (u, v) in (0..n).tuple_combinations() {
        g.add_edge(u, v);
    }
    g
}

pub fn path<T: Scalar>(n: usize) -> Graph<T> {
    let mut g = Graph::with_size(n);
    for i in 1..n {
        g.add_edge(i - 1, i);
    }
    g
}

pub fn cycle<T: Scalar>(n: usize) -> Graph<T> {
    let mut g = path(n);
    if n >= 3 {
        g.add_edge(n - 1, 0);
    }
    g
}

/// K_{1,k} with center 0.
pub fn star<T: Scalar>(k: usize) -> Graph<T> {
    let mut g = Graph::with_size(k + 1);
    for i in 1..=k {
        g.add_edge(0, i);
    }
    g
}

/// Complete multipartite graph; class i holds the next `sizes[i]` indices.
pub fn complete_multipartite<T: Scalar>(sizes: &[usize]) -> Graph<T> {
    let n = sizes.iter().sum();
    let class: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| std::iter::repeat_n(i, s))
        .collect();
    let mut g = Graph::with_size(n);
    for (u, v) in (0..n).tuple_combinations() {
        if class[u] != class[v] {
            g.add_edge(u, v);
        }
    }
    g
}

/// k disjoint edges {2i, 2i+1}.
pub fn perfect_matching<T: Scalar>(k: usize) -> Graph<T> {
    let mut g = Graph::with_size(2 * k);
    for i in 0..k {
        g.add_edge(2 * i, 2 * i + 1);
    }
    g
}

/// d-dimensional grid with side n. Vertex ids are coordinates joined by
/// `_`, in lexicographic order, so vertex 0 is a corner.
pub fn grid<T: Scalar>(d: usize, n: usize) -> Graph<T> {
    grid_box(&vec![n; d])
}

pub fn grid_rect<T: Scalar>(rows: usize, cols: usize) -> Graph<T> {
    grid_box(&[rows, cols])
}

pub fn grid_box<T: Scalar>(sides: &[usize]) -> Graph<T> {
    let coords: Vec<Vec<usize>> = sides
        .iter()
        .map(|&s| 0..s)
        .multi_cartesian_product()
        .collect();
    let coords = if sides.is_empty() { vec![vec![]] } else { coords };
    let ids = coords.iter().map(|c| c.iter().join("_")).collect();
    let mut g = Graph::new(ids).expect("coordinates are distinct");
    let mut stride = vec![1usize; sides.len()];
    for i in (0..sides.len().saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * sides[i + 1];
    }
    for (v, c) in coords.iter().enumerate() {
        for (axis, &x) in c.iter().enumerate() {
            if x + 1 < sides[axis] {
                g.add_edge(v, v + stride[axis]);
            }
        }
    }
    g
}

/// Coordinates of vertex `v` of `grid_box(sides)`.
pub fn grid_box_index(sides: &[usize], mut v: usize) -> Vec<usize> {
    let mut c = vec![0; sides.len()];
    for i in (0..sides.len()).rev() {
        c[i] = v % sides[i];
        v /= sides[i];
    }
    c
}

pub fn gnp<T: Scalar>(n: usize, p: &T, seed: u64) -> Result<Graph<T>> {
    let mut r = rng(seed);
    let mut g = Graph::with_size(n);
    for (u, v) in (0..n).tuple_combinations() {
        if bernoulli(&mut r, p)? {
            g.add_edge(u, v);
        }
    }
    Ok(g)
}

/// Random bipartite graph with sides `l0..` and `r0..`.
pub fn bipartite<T: Scalar>(a: usize, b: usize, density: &T, seed: u64) -> Result<Graph<T>> {
    let mut r = rng(seed);
    let ids = (0..a)
        .map(|i| format!("l{i}"))
        .chain((0..b).map(|i| format!("r{i}")))
        .collect();
    let mut g = Graph::new(ids)?;
    for u in 0..a {
        for v in 0..b {
            if bernoulli(&mut r, density)? {
                g.add_edge(u, a + v);
            }
        }
    }
    Ok(g)
}

/// Uniform random labelled tree by attaching each vertex to an earlier one.
pub fn random_tree<T: Scalar>(n: usize, seed: u64) -> Graph<T> {
    let mut r = rng(seed);
    let mut g = Graph::with_size(n);
    for v in 1..n {
        let u = r.gen_range(0..v);
        g.add_edge(u, v);
    }
    g
}

/// Glues a fresh triangle onto every edge of `base`. Each new vertex is
/// adjacent to exactly the two endpoints of its edge.
pub fn triangle_glued<T: Scalar>(base: &Graph<T>) -> Graph<T> {
    let edges = base.edges();
    let mut ids = base.vertices().to_vec();
    for (u, v) in &edges {
        ids.push(format!("t:{}:{}", base.vertices()[*u], base.vertices()[*v]));
    }
    let n = base.vertex_count();
    let mut g = Graph::new(ids).expect("glued ids are fresh");
    for (i, &(u, v)) in edges.iter().enumerate() {
        g.add_edge(u, v);
        g.add_edge(u, n + i);
        g.add_edge(v, n + i);
    }
    g
}

/// Random tournament on n vertices as a directed structure: one tuple of
/// value 1 per arc.
pub fn tournament<T: Scalar>(n: usize, seed: u64) -> ValuedStructure<T> {
    let mut r = rng(seed);
    let mut s = ValuedStructure::with_size(Signature::graph(), n.max(1)).unwrap();
    for (u, v) in (0..n).tuple_combinations() {
        let t = if r.gen_bool(0.5) { vec![u, v] } else { vec![v, u] };
        s.set(0, t, T::one()).unwrap();
    }
    s
}

/// Random structure: each tuple is present independently with probability
/// `density` and gets a value in {1/q, ..., max_num/q}. With `clean`, tuples
/// repeating an element are skipped.
pub fn random_structure<T: Scalar>(
    signature: &Signature,
    n: usize,
    density: &T,
    max_num: i64,
    q: i64,
    clean: bool,
    seed: u64,
) -> Result<ValuedStructure<T>> {
    let mut r = rng(seed);
    let mut s = ValuedStructure::with_size(signature.clone(), n)?;
    for f in 0..signature.len() {
        let ar = signature.arity(f);
        let tuples: Vec<Vec<usize>> = if ar == 0 {
            vec![vec![]]
        } else {
            (0..ar).map(|_| 0..n).multi_cartesian_product().collect()
        };
        for x in tuples {
            if clean && x.iter().duplicates().next().is_some() {
                continue;
            }
            if bernoulli(&mut r, density)? {
                let num = r.gen_range(1..=max_num);
                s.set(f, x, T::ratio(num, q))?;
            }
        }
    }
    Ok(s)
}

/// Random graph with a proper coloring into k classes of `per_class`
/// vertices and a planted rainbow k-clique, one random vertex per class.
pub fn planted_rainbow<T: Scalar>(
    k: usize,
    per_class: usize,
    p: &T,
    seed: u64,
) -> Result<(Graph<T>, Vec<usize>)> {
    let mut r = rng(seed);
    let n = k * per_class;
    let coloring: Vec<usize> = (0..n).map(|v| v / per_class).collect();
    let mut g = Graph::with_size(n);
    for (u, v) in (0..n).tuple_combinations() {
        if coloring[u] != coloring[v] && bernoulli(&mut r, p)? {
            g.add_edge(u, v);
        }
    }
    let mut heads: Vec<usize> = (0..k).map(|c| c * per_class + r.gen_range(0..per_class)).collect();
    heads.shuffle(&mut r);
    for (&u, &v) in heads.iter().tuple_combinations() {
        g.add_edge(u, v);
    }
    Ok((g, coloring))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardnessGadget<T> {
    pub a: ValuedStructure<T>,
    pub b: ValuedStructure<T>,
}

/// Tournament A on the k colors and digraph B on V(G): (u,v) is an arc of B
/// iff uv is an edge of G and (c(u), c(v)) is an arc of A.
pub fn hardness_gadget<T: Scalar>(
    g: &Graph<T>,
    coloring: &[usize],
    k: usize,
    seed: u64,
) -> Result<HardnessGadget<T>> {
    if coloring.len() != g.vertex_count() {
        return Err(Error::InvalidArgument("coloring must cover every vertex".into()));
    }
    if let Some(&c) = coloring.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidArgument(format!("color {c} out of range")));
    }
    for (u, v) in g.edges() {
        if coloring[u] == coloring[v] {
            return Err(Error::InvalidArgument(format!(
                "coloring is not proper on edge {}-{}",
                g.vertices()[u],
                g.vertices()[v]
            )));
        }
    }
    let a = tournament::<T>(k, seed);
    let mut b = ValuedStructure::new(Signature::graph(), g.vertices().to_vec())?;
    for (u, v) in g.edges() {
        if !a.get(0, &[coloring[u], coloring[v]]).is_zero() {
            b.set(0, vec![u, v], T::one())?;
        } else {
            b.set(0, vec![v, u], T::one())?;
        }
    }
    Ok(HardnessGadget { a, b })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReport<T> {
    pub identity_value: T,
    pub best_value: T,
    pub best_map: Option<Assignment>,
    pub loss: T,
    pub maps_checked: u128,
    pub maps_qualifying: u128,
}

/// Best self-map g of A whose image structure Img(g) has components of at
/// most k elements, compared against the identity (with C = A).
pub fn non_pliability_probe<T: Scalar>(
    a: &ValuedStructure<T>,
    k: usize,
    cap: u128,
) -> Result<ProbeReport<T>> {
    let n = a.size();
    let total = map_count(n, n);
    cap_check("self-map count", total, cap.min(BRUTEFORCE_CAP))?;
    let identity_value = val_unchecked(a, a, &Assignment::identity(n));
    let mut best: Option<(T, Assignment)> = None;
    let mut qualifying = 0u128;
    for h in (0..n).map(|_| 0..n).multi_cartesian_product() {
        let g = Assignment(h);
        let im = img(&g, a, a)?;
        if gaifman(&im).max_component_size() > k {
            continue;
        }
        qualifying += 1;
        let v = val_unchecked(a, a, &g);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, g));
        }
    }
    let (best_value, best_map) = match best {
        Some((v, g)) => (v, Some(g)),
        None => (T::zero(), None),
    };
    let loss = if identity_value.is_zero() {
        T::zero()
    } else {
        T::one() - best_value.clone() / identity_value.clone()
    };
    Ok(ProbeReport {
        identity_value,
        best_value,
        best_map,
        loss,
        maps_checked: total,
        maps_qualifying: qualifying,
    })
}

/// Structure encoding of a graph generator's output, for convenience.
pub fn as_structure<T: Scalar>(g: &Graph<T>) -> ValuedStructure<T> {
    graph_structure(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::opt_bruteforce;
    use crate::Rational;

    #[test]
    fn basic_generators() {
        let k3 = as_structure(&clique::<Rational>(3));
        assert_eq!(k3.norm1(), Rational::from_int(6));
        let k5 = gnp::<Rational>(5, &Rational::from_int(1), 7).unwrap();
        assert_eq!(k5.edge_count(), 10);
        let t = tournament::<Rational>(3, 11);
        assert_eq!(t.tuple_count(), 3);
        assert!(t.is_clean());
        let g = grid::<Rational>(2, 3);
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.vertices()[0], "0_0");
        assert_eq!(grid::<Rational>(3, 2).edge_count(), 12);
    }

    #[test]
    fn generators_are_deterministic() {
        let p = Rational::ratio(1, 2);
        assert_eq!(gnp::<Rational>(9, &p, 3).unwrap(), gnp::<Rational>(9, &p, 3).unwrap());
        assert_eq!(tournament::<Rational>(6, 1), tournament::<Rational>(6, 1));
        assert_eq!(
            bipartite::<Rational>(3, 4, &p, 5).unwrap(),
            bipartite::<Rational>(3, 4, &p, 5).unwrap()
        );
    }

    #[test]
    fn triangle_gluing() {
        let g = triangle_glued(&path::<Rational>(3));
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn gadget_examples() {
        let k3 = clique::<Rational>(3);
        let gad = hardness_gadget(&k3, &[0, 1, 2], 3, 4).unwrap();
        assert_eq!(opt_bruteforce(&gad.a, &gad.b).unwrap().value, Rational::from_int(3));
        let mut m = k3.clone();
        m.remove_edge(0, 1);
        let gad = hardness_gadget(&m, &[0, 1, 2], 3, 4).unwrap();
        assert!(opt_bruteforce(&gad.a, &gad.b).unwrap().value <= Rational::from_int(2));
        let e = Graph::<Rational>::with_size(3);
        let gad = hardness_gadget(&e, &[0, 1, 2], 3, 4).unwrap();
        assert_eq!(opt_bruteforce(&gad.a, &gad.b).unwrap().value, Rational::from_int(0));
        assert!(hardness_gadget(&k3, &[0, 0, 1], 3, 4).is_err());
    }

    #[test]
    fn probe_examples() {
        let k2 = as_structure(&clique::<Rational>(2)).rescale(&Rational::from_int(3)).unwrap();
        let r = non_pliability_probe(&k2, 2, 1000).unwrap();
        assert_eq!(r.loss, Rational::from_int(0));
        let p3 = as_structure(&path::<Rational>(3));
        let r = non_pliability_probe(&p3, 2, 1000).unwrap();
        assert_eq!(r.loss, Rational::from_int(0));
        let t = tournament::<Rational>(5, 2);
        let r = non_pliability_probe(&t, 2, 10_000).unwrap();
        assert!(r.loss > Rational::from_int(0));
    }
}
