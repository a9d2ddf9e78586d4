//! Simple undirected graphs and the width parameters used elsewhere.

use crate::error::{cap_check, Error, Result};
use crate::scalar::Scalar;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

pub const EXACT_TREEWIDTH_CAP: usize = 12;
pub const EXACT_TREEDEPTH_CAP: usize = 10;

/// Undirected simple graph with optional rational weights. Edge weights
/// default to 1 and vertex weights default to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph<T> {
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<BTreeSet<usize>>,
    vertex_weights: Option<Vec<T>>,
    edge_weights: BTreeMap<(usize, usize), T>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new(vertices: Vec<String>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vertex {v}")));
            }
        }
        let n = vertices.len();
        Ok(Graph {
            vertices,
            index,
            adj: vec![BTreeSet::new(); n],
            vertex_weights: None,
            edge_weights: BTreeMap::new(),
        })
    }

    pub fn with_size(n: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string()).collect()).unwrap()
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::with_size(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Adds the edge {u, v}; loops are ignored. Returns whether it was new.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        let new = self.adj[u].insert(v);
        self.adj[v].insert(u);
        new
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.adj[u].remove(&v);
        self.adj[v].remove(&u);
        self.edge_weights.remove(&key(u, v));
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    /// Edges as (u, v) with u < v, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, a) in self.adj.iter().enumerate() {
            for &v in a.range(u + 1..) {
                out.push((u, v));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn set_edge_weight(&mut self, u: usize, v: usize, w: T) {
        assert!(self.has_edge(u, v), "weight on a missing edge");
        self.edge_weights.insert(key(u, v), w);
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> T {
        self.edge_weights
            .get(&key(u, v))
            .cloned()
            .unwrap_or_else(T::one)
    }

    pub fn has_explicit_edge_weights(&self) -> bool {
        !self.edge_weights.is_empty()
    }

    pub fn set_vertex_weight(&mut self, v: usize, w: T) {
        let n = self.vertex_count();
        let ws = self
            .vertex_weights
            .get_or_insert_with(|| vec![T::one(); n]);
        ws[v] = w;
    }

    pub fn vertex_weight(&self, v: usize) -> T {
        match &self.vertex_weights {
            Some(ws) => ws[v].clone(),
            None => T::one(),
        }
    }

    pub fn has_vertex_weights(&self) -> bool {
        self.vertex_weights.is_some()
    }

    /// Induced subgraph on `keep`, in that order; weights carried over.
    pub fn induced(&self, keep: &[usize]) -> Graph<T> {
        let mut pos = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in keep.iter().enumerate() {
            pos[v] = i;
        }
        let mut g = Graph::new(keep.iter().map(|&v| self.vertices[v].clone()).collect())
            .expect("ids stay unique");
        for (u, v) in self.edges() {
            if pos[u] != usize::MAX && pos[v] != usize::MAX {
                g.add_edge(pos[u], pos[v]);
                if let Some(w) = self.edge_weights.get(&(u, v)) {
                    g.set_edge_weight(pos[u], pos[v], w.clone());
                }
            }
        }
        if let Some(ws) = &self.vertex_weights {
            g.vertex_weights = Some(keep.iter().map(|&v| ws[v].clone()).collect());
        }
        g
    }

    /// G − X, keeping the remaining vertices in order.
    pub fn remove_vertices(&self, x: &[usize]) -> Graph<T> {
        let drop: BTreeSet<usize> = x.iter().copied().collect();
        let keep: Vec<usize> = (0..self.vertex_count())
            .filter(|v| !drop.contains(v))
            .collect();
        self.induced(&keep)
    }

    /// G − F on the same vertex set.
    pub fn remove_edges(&self, f: &[(usize, usize)]) -> Graph<T> {
        let mut g = self.clone();
        for &(u, v) in f {
            g.remove_edge(u, v);
        }
        g
    }

    /// Connected components as sorted vertex lists, ordered by least vertex.
    pub fn component_sets(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn components(&self) -> Vec<Graph<T>> {
        self.component_sets()
            .iter()
            .map(|c| self.induced(c))
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.component_sets().len() <= 1
    }

    /// Size of the largest component (0 for the empty graph).
    pub fn max_component_size(&self) -> usize {
        self.component_sets()
            .iter()
            .map(|c| c.len())
            .max()
            .unwrap_or(0)
    }

    fn adjacency_masks(&self) -> Vec<u64> {
        self.adj
            .iter()
            .map(|a| a.iter().fold(0u64, |m, &v| m | (1 << v)))
            .collect()
    }
}

/// Tree decomposition: bags and tree edges among bag indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(|b| b.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    /// Checks vertex cover, edge cover, and connectivity of each vertex's
    /// bag set, and that the bag graph is a tree.
    pub fn validate<T: Scalar>(&self, g: &Graph<T>) -> Result<()> {
        let n = g.vertex_count();
        let nb = self.bags.len();
        if n == 0 {
            return Ok(());
        }
        if nb == 0 {
            return Err(Error::InvalidDecomposition("no bags".into()));
        }
        if self.edges.len() + 1 != nb {
            return Err(Error::InvalidDecomposition("bag graph is not a tree".into()));
        }
        let mut tadj = vec![Vec::new(); nb];
        for &(a, b) in &self.edges {
            if a >= nb || b >= nb {
                return Err(Error::InvalidDecomposition("tree edge out of range".into()));
            }
            tadj[a].push(b);
            tadj[b].push(a);
        }
        if reach(&tadj, 0, |_| true).len() != nb {
            return Err(Error::InvalidDecomposition("bag graph is disconnected".into()));
        }
        let mut holds = vec![Vec::new(); n];
        for (i, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                if v >= n {
                    return Err(Error::InvalidDecomposition("bag vertex out of range".into()));
                }
                holds[v].push(i);
            }
        }
        for (v, hs) in holds.iter().enumerate() {
            if hs.is_empty() {
                return Err(Error::InvalidDecomposition(format!("vertex {v} uncovered")));
            }
            let set: BTreeSet<usize> = hs.iter().copied().collect();
            if reach(&tadj, hs[0], |b| set.contains(&b)).len() != set.len() {
                return Err(Error::InvalidDecomposition(format!(
                    "bags of vertex {v} are not connected"
                )));
            }
        }
        for (u, v) in g.edges() {
            if !self
                .bags
                .iter()
                .any(|b| b.contains(&u) && b.contains(&v))
            {
                return Err(Error::InvalidDecomposition(format!("edge {u}-{v} uncovered")));
            }
        }
        Ok(())
    }
}

fn reach(tadj: &[Vec<usize>], start: usize, allowed: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut seen = vec![false; tadj.len()];
    let mut out = vec![start];
    seen[start] = true;
    let mut i = 0;
    while i < out.len() {
        let u = out[i];
        i += 1;
        for &w in &tadj[u] {
            if !seen[w] && allowed(w) {
                seen[w] = true;
                out.push(w);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionMethod {
    Exact,
    MinFill,
    MinDegree,
}

/// Decomposition induced by an elimination ordering.
pub fn elimination_decomposition<T: Scalar>(g: &Graph<T>, order: &[usize]) -> TreeDecomposition {
    let n = g.vertex_count();
    if n == 0 {
        return TreeDecomposition {
            bags: vec![],
            edges: vec![],
        };
    }
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut nb: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).clone()).collect();
    let mut bags = Vec::with_capacity(n);
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for (i, &v) in order.iter().enumerate() {
        let later: Vec<usize> = nb[v].iter().copied().filter(|&u| pos[u] > i).collect();
        for a in 0..later.len() {
            for b in a + 1..later.len() {
                nb[later[a]].insert(later[b]);
                nb[later[b]].insert(later[a]);
            }
        }
        let mut bag = later.clone();
        bag.push(v);
        bag.sort_unstable();
        bags.push(bag);
        parent[i] = later.iter().map(|&u| pos[u]).min();
    }
    let mut edges = Vec::new();
    let mut roots = Vec::new();
    for (i, p) in parent.iter().enumerate() {
        match p {
            Some(p) => edges.push((*p, i)),
            None => roots.push(i),
        }
    }
    for w in roots.windows(2) {
        edges.push((w[0], w[1]));
    }
    edges.sort_unstable();
    TreeDecomposition { bags, edges }
}

fn greedy_order<T: Scalar>(g: &Graph<T>, fill: bool) -> Vec<usize> {
    let n = g.vertex_count();
    let mut nb: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).clone()).collect();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            let score = if fill {
                let ns: Vec<usize> = nb[v].iter().copied().collect();
                let mut missing = 0;
                for a in 0..ns.len() {
                    for b in a + 1..ns.len() {
                        if !nb[ns[a]].contains(&ns[b]) {
                            missing += 1;
                        }
                    }
                }
                missing
            } else {
                nb[v].len()
            };
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, v));
            }
        }
        let v = best.unwrap().1;
        let ns: Vec<usize> = nb[v].iter().copied().collect();
        for a in 0..ns.len() {
            for b in a + 1..ns.len() {
                nb[ns[a]].insert(ns[b]);
                nb[ns[b]].insert(ns[a]);
            }
        }
        for &u in &ns {
            nb[u].remove(&v);
        }
        alive[v] = false;
        order.push(v);
    }
    order
}

/// Exact treewidth and an optimal elimination ordering, by dynamic
/// programming over vertex subsets.
pub fn treewidth_exact<T: Scalar>(g: &Graph<T>, cap: usize) -> Result<(usize, Vec<usize>)> {
    let n = g.vertex_count();
    cap_check("exact treewidth vertex count", n as u128, cap.min(24) as u128)?;
    if n == 0 {
        return Ok((0, vec![]));
    }
    let adj = g.adjacency_masks();
    let full = (1u64 << n) - 1;
    // q(S, v): vertices outside S ∪ {v} reachable from v through S
    let q = |s: u64, v: usize| -> u32 {
        let mut seen = 1u64 << v;
        let mut frontier = 1u64 << v;
        let mut out = 0u64;
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nbrs = adj[u] & !seen;
            seen |= nbrs;
            out |= nbrs & !s;
            frontier |= nbrs & s;
        }
        out.count_ones()
    };
    let size = 1usize << n;
    let mut tw = vec![i64::MAX; size];
    let mut choice = vec![0u8; size];
    tw[0] = -1;
    for s in 1..size as u64 {
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << v);
            let val = tw[prev as usize].max(q(prev, v) as i64);
            if val < tw[s as usize] {
                tw[s as usize] = val;
                choice[s as usize] = v as u8;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let v = choice[s as usize] as usize;
        order.push(v);
        s &= !(1 << v);
    }
    order.reverse();
    Ok((tw[full as usize].max(0) as usize, order))
}

pub fn tree_decomposition<T: Scalar>(
    g: &Graph<T>,
    method: DecompositionMethod,
) -> Result<TreeDecomposition> {
    let order = match method {
        DecompositionMethod::Exact => treewidth_exact(g, EXACT_TREEWIDTH_CAP)?.1,
        DecompositionMethod::MinFill => greedy_order(g, true),
        DecompositionMethod::MinDegree => greedy_order(g, false),
    };
    Ok(elimination_decomposition(g, &order))
}

/// Smallest-width decomposition available: exact within the cap, otherwise
/// the better of the two heuristics.
pub fn best_decomposition<T: Scalar>(g: &Graph<T>) -> (TreeDecomposition, bool) {
    if g.vertex_count() <= EXACT_TREEWIDTH_CAP {
        (tree_decomposition(g, DecompositionMethod::Exact).unwrap(), true)
    } else {
        let a = tree_decomposition(g, DecompositionMethod::MinFill).unwrap();
        let b = tree_decomposition(g, DecompositionMethod::MinDegree).unwrap();
        (if b.width() < a.width() { b } else { a }, false)
    }
}

/// Elimination forest: parent pointers with every edge joining an ancestor
/// and a descendant. Depth counts vertices on the longest root path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreedepthForest {
    pub parent: Vec<Option<usize>>,
}

impl TreedepthForest {
    pub fn depth(&self) -> usize {
        (0..self.parent.len())
            .map(|mut v| {
                let mut d = 1;
                while let Some(p) = self.parent[v] {
                    v = p;
                    d += 1;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }

    pub fn validate<T: Scalar>(&self, g: &Graph<T>) -> Result<()> {
        let anc = |mut v: usize, target: usize| -> bool {
            while let Some(p) = self.parent[v] {
                if p == target {
                    return true;
                }
                v = p;
            }
            false
        };
        for (u, v) in g.edges() {
            if !anc(u, v) && !anc(v, u) {
                return Err(Error::InvalidDecomposition(format!(
                    "edge {u}-{v} joins unrelated vertices"
                )));
            }
        }
        Ok(())
    }
}

fn mask_components(adj: &[u64], s: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut rest = s;
    while rest != 0 {
        let start = rest & rest.wrapping_neg();
        let mut comp = start;
        let mut frontier = start;
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nbrs = adj[u] & s & !comp;
            comp |= nbrs;
            frontier |= nbrs;
        }
        out.push(comp);
        rest &= !comp;
    }
    out
}

fn td_rec(adj: &[u64], s: u64, memo: &mut HashMap<u64, (usize, usize)>) -> usize {
    if s == 0 {
        return 0;
    }
    if s.count_ones() == 1 {
        return 1;
    }
    if let Some(&(d, _)) = memo.get(&s) {
        return d;
    }
    let comps = mask_components(adj, s);
    let res = if comps.len() > 1 {
        (comps.iter().map(|&c| td_rec(adj, c, memo)).max().unwrap(), usize::MAX)
    } else {
        let mut best = (usize::MAX, 0);
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let d = 1 + td_rec(adj, s & !(1 << v), memo);
            if d < best.0 {
                best = (d, v);
            }
        }
        best
    };
    memo.insert(s, res);
    res.0
}

fn td_build(
    adj: &[u64],
    s: u64,
    parent_of_root: Option<usize>,
    memo: &mut HashMap<u64, (usize, usize)>,
    parent: &mut [Option<usize>],
) {
    if s == 0 {
        return;
    }
    if s.count_ones() == 1 {
        parent[s.trailing_zeros() as usize] = parent_of_root;
        return;
    }
    td_rec(adj, s, memo);
    let (_, v) = memo[&s];
    if v == usize::MAX {
        for c in mask_components(adj, s) {
            td_build(adj, c, parent_of_root, memo, parent);
        }
    } else {
        parent[v] = parent_of_root;
        td_build(adj, s & !(1 << v), Some(v), memo, parent);
    }
}

/// Exact treedepth with an optimal elimination forest.
pub fn treedepth_exact<T: Scalar>(g: &Graph<T>, cap: usize) -> Result<(usize, TreedepthForest)> {
    let n = g.vertex_count();
    cap_check("exact treedepth vertex count", n as u128, cap.min(24) as u128)?;
    let adj = g.adjacency_masks();
    let full = if n == 0 { 0 } else { (1u64 << n) - 1 };
    let mut memo = HashMap::new();
    let d = td_rec(&adj, full, &mut memo);
    let mut parent = vec![None; n];
    td_build(&adj, full, None, &mut memo, &mut parent);
    Ok((d, TreedepthForest { parent }))
}

/// A vertex whose removal lowers the treedepth of a connected graph by one.
pub fn treedepth_root<T: Scalar>(g: &Graph<T>) -> Result<usize> {
    let (_, forest) = treedepth_exact(g, EXACT_TREEDEPTH_CAP)?;
    let roots: Vec<usize> = (0..g.vertex_count())
        .filter(|&v| forest.parent[v].is_none())
        .collect();
    match roots.as_slice() {
        [r] => Ok(*r),
        _ => Err(Error::InvalidArgument("graph is not connected".into())),
    }
}

fn dfs_forest<T: Scalar>(g: &Graph<T>) -> TreedepthForest {
    let n = g.vertex_count();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, g.neighbors(s).iter().copied().collect::<Vec<_>>(), 0)];
        while let Some(top) = stack.last_mut() {
            let (u, ref nbrs, ref mut i) = *top;
            if *i < nbrs.len() {
                let w = nbrs[*i];
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    let ws = g.neighbors(w).iter().copied().collect();
                    stack.push((w, ws, 0));
                }
            } else {
                stack.pop();
            }
        }
    }
    TreedepthForest { parent }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Size,
    Cc,
    Tw,
    Td,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamValue {
    pub value: usize,
    /// False when only an upper bound was certified.
    pub exact: bool,
    pub decomposition: Option<TreeDecomposition>,
    pub forest: Option<TreedepthForest>,
}

pub fn parameter<T: Scalar>(g: &Graph<T>, which: Param) -> ParamValue {
    match which {
        Param::Size => ParamValue {
            value: g.vertex_count(),
            exact: true,
            decomposition: None,
            forest: None,
        },
        Param::Cc => ParamValue {
            value: g.max_component_size(),
            exact: true,
            decomposition: None,
            forest: None,
        },
        Param::Tw => {
            let (td, exact) = best_decomposition(g);
            ParamValue {
                value: td.width(),
                exact,
                decomposition: Some(td),
                forest: None,
            }
        }
        Param::Td => {
            if g.vertex_count() <= EXACT_TREEDEPTH_CAP {
                let (d, f) = treedepth_exact(g, EXACT_TREEDEPTH_CAP).unwrap();
                ParamValue {
                    value: d,
                    exact: true,
                    decomposition: None,
                    forest: Some(f),
                }
            } else {
                let f = dfs_forest(g);
                ParamValue {
                    value: f.depth(),
                    exact: false,
                    decomposition: None,
                    forest: Some(f),
                }
            }
        }
    }
}

/// BFS layers from the given roots. Components without a root are rooted
/// at their least vertex.
pub fn bfs_layers_multi<T: Scalar>(g: &Graph<T>, roots: &[usize]) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let mut dist = vec![usize::MAX; n];
    let mut start: Vec<usize> = roots.to_vec();
    for c in g.component_sets() {
        if !c.iter().any(|v| roots.contains(v)) {
            start.push(c[0]);
        }
    }
    let mut queue = VecDeque::new();
    for &r in &start {
        if dist[r] == usize::MAX {
            dist[r] = 0;
            queue.push_back(r);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    let depth = dist.iter().copied().max().map_or(0, |d| d + 1);
    let mut layers = vec![Vec::new(); depth];
    for (v, &d) in dist.iter().enumerate() {
        layers[d].push(v);
    }
    layers
}

pub fn bfs_layers<T: Scalar>(g: &Graph<T>, root: usize) -> Vec<Vec<usize>> {
    bfs_layers_multi(g, &[root])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orientation {
    /// Arcs (tail, head).
    pub arcs: Vec<(usize, usize)>,
    pub degeneracy: usize,
    /// Vertices in removal order.
    pub order: Vec<usize>,
}

impl Orientation {
    pub fn max_in_degree(&self, n: usize) -> usize {
        let mut d = vec![0; n];
        for &(_, h) in &self.arcs {
            d[h] += 1;
        }
        d.into_iter().max().unwrap_or(0)
    }
}

/// Repeatedly removes a minimum-degree vertex and orients its remaining
/// edges towards it.
pub fn degeneracy_orientation<T: Scalar>(g: &Graph<T>) -> Orientation {
    let n = g.vertex_count();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; n];
    let mut arcs = Vec::new();
    let mut order = Vec::new();
    let mut degeneracy = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (deg[v], v))
            .unwrap();
        degeneracy = degeneracy.max(deg[v]);
        alive[v] = false;
        order.push(v);
        for &u in g.neighbors(v) {
            if alive[u] {
                arcs.push((u, v));
                deg[u] -= 1;
            }
        }
    }
    Orientation {
        arcs,
        degeneracy,
        order,
    }
}

/// Length of a shortest cycle, `None` for forests.
pub fn girth<T: Scalar>(g: &Graph<T>) -> Option<usize> {
    let n = g.vertex_count();
    let mut best: Option<usize> = None;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut par = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    par[w] = u;
                    queue.push_back(w);
                } else if par[u] != w {
                    let len = dist[u] + dist[w] + 1;
                    best = Some(best.map_or(len, |b| b.min(len)));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{clique, cycle, grid, path, star};
    use crate::Rational;

    type G = Graph<Rational>;

    #[test]
    fn components_examples() {
        let mut g = G::with_size(4);
        g.add_edge(0, 1);
        g.add_edge(2, 3);
        assert_eq!(g.components().len(), 2);
        assert!(clique::<Rational>(4).is_connected());
        assert_eq!(G::with_size(3).components().len(), 3);
    }

    #[test]
    fn parameter_examples() {
        assert_eq!(parameter(&clique::<Rational>(3), Param::Tw).value, 2);
        assert_eq!(parameter(&path::<Rational>(4), Param::Td).value, 3);
        let mut g = G::with_size(5);
        g.add_edge(0, 1);
        g.add_edge(2, 3);
        g.add_edge(3, 4);
        g.add_edge(2, 4);
        assert_eq!(parameter(&g, Param::Cc).value, 3);
        assert_eq!(parameter(&g, Param::Size).value, 5);
    }

    #[test]
    fn decomposition_examples() {
        let p5 = path::<Rational>(5);
        for m in [DecompositionMethod::Exact, DecompositionMethod::MinFill, DecompositionMethod::MinDegree] {
            let td = tree_decomposition(&p5, m).unwrap();
            td.validate(&p5).unwrap();
            assert_eq!(td.width(), 1);
        }
        let k4 = clique::<Rational>(4);
        assert_eq!(tree_decomposition(&k4, DecompositionMethod::Exact).unwrap().width(), 3);
        let g3 = grid::<Rational>(2, 3);
        let td = tree_decomposition(&g3, DecompositionMethod::Exact).unwrap();
        td.validate(&g3).unwrap();
        assert_eq!(td.width(), 3);
        let big = path::<Rational>(13);
        assert!(matches!(
            tree_decomposition(&big, DecompositionMethod::Exact),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn bfs_examples() {
        let s = star::<Rational>(3);
        assert_eq!(bfs_layers(&s, 0), vec![vec![0], vec![1, 2, 3]]);
        assert_eq!(bfs_layers(&path::<Rational>(3), 0).len(), 3);
        let g4 = grid::<Rational>(2, 4);
        let layers = bfs_layers(&g4, 0);
        assert_eq!(layers.len(), 7);
        assert_eq!(layers[3].len(), 4);
    }

    #[test]
    fn degeneracy_examples() {
        let t = path::<Rational>(6);
        let o = degeneracy_orientation(&t);
        assert_eq!(o.degeneracy, 1);
        assert!(o.max_in_degree(6) <= 1);
        assert_eq!(degeneracy_orientation(&clique::<Rational>(4)).degeneracy, 3);
        let g3 = grid::<Rational>(2, 3);
        let o = degeneracy_orientation(&g3);
        assert_eq!(o.degeneracy, 2);
        assert_eq!(o.arcs.len(), g3.edge_count());
        assert_eq!(o.max_in_degree(9), 2);
    }

    #[test]
    fn girth_examples() {
        assert_eq!(girth(&clique::<Rational>(3)), Some(3));
        assert_eq!(girth(&star::<Rational>(4)), None);
        assert_eq!(girth(&cycle::<Rational>(5)), Some(5));
        assert_eq!(girth(&grid::<Rational>(2, 3)), Some(4));
    }

    #[test]
    fn treedepth_forest_is_valid() {
        for n in 1..8 {
            let p = path::<Rational>(n);
            let (d, f) = treedepth_exact(&p, 10).unwrap();
            f.validate(&p).unwrap();
            assert_eq!(f.depth(), d);
        }
        let v = treedepth_root(&path::<Rational>(3)).unwrap();
        assert_eq!(v, 1);
    }
}
