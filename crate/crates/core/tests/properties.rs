use num_traits::Zero;
use pliable::dense::{counting_check, quotient, quotient_overcast, Partition, QuotientOutcome};
use pliable::exact::{opt_bruteforce, opt_treedec};
use pliable::fragility::{
    baker_modulator, bucket_edge_weights, edge_from_vertex, fragile_to_pliable, vertex_from_edge,
    FractionalModulator, LayerCut,
};
use pliable::generators::{
    as_structure, gnp, random_structure, random_tree, tournament, hardness_gadget, planted_rainbow,
};
use pliable::graphs::{
    bfs_layers, degeneracy_orientation, tree_decomposition, DecompositionMethod,
};
use pliable::io::{
    graph_from_json, graph_to_json, overcast_from_json, overcast_to_json, structure_from_json,
    structure_to_json,
};
use pliable::lp::{solve, LinearProgram, LpStatus, Relation, Sense};
use pliable::overcast::{
    compose, opt_distance_bound, overcast_find, verify, verify_scaled, Overcast, OvercastOutcome,
    OVERCAST_MAP_CAP,
};
use pliable::ptas::{ptas_constructive, ptas_value, NeighbourWitness};
use pliable::reductions::{cc_to_size, merge_components, pack, unpack};
use pliable::relax::opt_sa;
use pliable::scalar::binomial;
use pliable::structures::{disjoint_union, edit_distance, gaifman, img, val, Distance};
use pliable::{Assignment, Rational, Scalar, Signature, Structure};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn sig() -> Signature {
    Signature::new(vec![("u".into(), 1), ("e".into(), 2)]).unwrap()
}

fn rs(n: usize, seed: u64) -> Structure {
    random_structure(&sig(), n, &q(1, 2), 4, 2, false, seed).unwrap()
}

fn random_map(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Assignment {
    Assignment((0..n).map(|_| rng.gen_range(0..m)).collect())
}

fn bf(a: &Structure, b: &Structure) -> Rational {
    opt_bruteforce(a, b).unwrap().value
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn val_is_monotone(n in 1usize..5, m in 1usize..4, seed in any::<u64>(), bump in 1i64..5) {
        let a = rs(n, seed);
        let b = rs(m, seed ^ 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_map(n, m, &mut rng);
        let base = val(&a, &b, &h).unwrap();
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut a2 = a.clone();
        a2.set(1, vec![x, y], a.get(1, &[x, y]) + q(bump, 1)).unwrap();
        prop_assert!(val(&a2, &b, &h).unwrap() >= base);
        let mut b2 = b.clone();
        let z = rng.gen_range(0..m);
        b2.set(0, vec![z], b.get(0, &[z]) + q(bump, 3)).unwrap();
        prop_assert!(val(&a, &b2, &h).unwrap() >= base);
    }

    #[test]
    fn opt_scales_and_adds(n in 1usize..5, m in 1usize..4, seed in any::<u64>(), l in 0i64..6) {
        let a = rs(n, seed);
        let a2 = rs(3, seed ^ 7);
        let c = rs(m, seed ^ 3);
        let lambda = q(l, 3);
        prop_assert_eq!(bf(&a.rescale(&lambda).unwrap(), &c), lambda.clone() * bf(&a, &c));
        let u = disjoint_union(&[a.clone(), a2.clone()]).unwrap();
        prop_assert_eq!(u.norm1(), a.norm1() + a2.norm1());
        prop_assert_eq!(bf(&u, &c), bf(&a, &c) + bf(&a2, &c));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opt = bf(&a, &c);
        for _ in 0..50 {
            prop_assert!(val(&a, &c, &random_map(n, m, &mut rng)).unwrap() <= opt);
        }
    }

    #[test]
    fn gaifman_ignores_positive_scaling(n in 1usize..6, seed in any::<u64>(), l in 1i64..5) {
        let a = rs(n, seed);
        prop_assert_eq!(gaifman(&a.rescale(&q(l, 2)).unwrap()).edges(), gaifman(&a).edges());
        prop_assert_eq!(gaifman(&a.rescale(&q(0, 1)).unwrap()).edge_count(), 0);
    }

    #[test]
    fn edit_distance_symmetric(n in 1usize..5, seed in any::<u64>()) {
        let a = random_structure(&sig(), n, &q(1, 2), 3, 1, true, seed).unwrap();
        let b = random_structure(&sig(), n, &q(1, 2), 3, 1, true, seed ^ 9).unwrap();
        let d1 = edit_distance(&a, &b, None, 8).unwrap();
        let d2 = edit_distance(&b, &a, None, 8).unwrap();
        prop_assert_eq!(d1.finite(), d2.finite());
        prop_assert!(matches!(edit_distance(&a, &a, None, 8).unwrap(), Distance::Finite(z) if z.is_zero()));
    }

    #[test]
    fn img_below_target(n in 1usize..5, m in 1usize..4, seed in any::<u64>()) {
        let a = rs(n, seed);
        let b = rs(m, seed ^ 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_map(n, m, &mut rng);
        let im = img(&g, &a, &b).unwrap();
        for (f, y, v) in im.tuples() {
            prop_assert!(*v <= b.get(f, y));
        }
        prop_assert_eq!(img(&Assignment::identity(n), &a, &a).unwrap(), a);
    }

    #[test]
    fn decompositions_valid_and_exact_smallest(n in 1usize..10, seed in any::<u64>()) {
        let g = gnp::<Rational>(n, &q(2, 5), seed).unwrap();
        let ex = tree_decomposition(&g, DecompositionMethod::Exact).unwrap();
        ex.validate(&g).unwrap();
        for m in [DecompositionMethod::MinFill, DecompositionMethod::MinDegree] {
            let h = tree_decomposition(&g, m).unwrap();
            h.validate(&g).unwrap();
            prop_assert!(ex.width() <= h.width());
        }
    }

    #[test]
    fn bfs_and_degeneracy(n in 1usize..9, seed in any::<u64>()) {
        let g = gnp::<Rational>(n, &q(1, 2), seed).unwrap();
        let layers = bfs_layers(&g, 0);
        let mut depth = vec![usize::MAX; n];
        for (i, l) in layers.iter().enumerate() {
            for &v in l {
                depth[v] = i;
            }
        }
        for (u, v) in g.edges() {
            if depth[u] != usize::MAX {
                prop_assert!(depth[u].abs_diff(depth[v]) <= 1);
            }
        }
        // degeneracy = max over vertex subsets of the least induced degree
        let mut degen = 0;
        for mask in 1u32..(1 << n) {
            let s: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let min = s.iter().map(|&v| s.iter().filter(|&&w| g.has_edge(v, w)).count()).min().unwrap();
            degen = degen.max(min);
        }
        let o = degeneracy_orientation(&g);
        prop_assert_eq!(o.degeneracy, degen);
        prop_assert!(o.max_in_degree(n) <= degen);
    }

    #[test]
    fn lp_optimal_pairs_verify(vars in 1usize..5, rows in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lp = LinearProgram::<Rational>::new(Sense::Max);
        for i in 0..vars {
            lp.add_variable(format!("x{i}"), true);
        }
        lp.objective = (0..vars).map(|i| (i, q(rng.gen_range(-3..6), rng.gen_range(1..4)))).collect();
        let mut rhs = Vec::new();
        for _ in 0..rows {
            let b = q(rng.gen_range(0..10), 1);
            lp.add_constraint((0..vars).map(|i| (i, q(rng.gen_range(1..5), 1))).collect(), Relation::Le, b.clone());
            rhs.push(b);
        }
        let out = solve(&lp).unwrap();
        prop_assert_eq!(out.status, LpStatus::Optimal);
        let (x, y) = (out.primal.clone().unwrap(), out.dual.clone().unwrap());
        prop_assert_eq!(lp.objective_value(&x), out.objective.clone().unwrap());
        prop_assert!(lp.verify_optimal(&x, &y));
        let dual_obj: Rational = rhs.iter().zip(&y).map(|(b, y)| b.clone() * y.clone()).sum();
        prop_assert_eq!(dual_obj, out.objective.clone().unwrap());
        prop_assert_eq!(solve(&lp).unwrap(), out);
        // push the sum above what the rows allow
        let mut bad = lp.clone();
        let cap: Rational = rhs.iter().cloned().sum::<Rational>() + q(1, 1);
        bad.add_constraint((0..vars).map(|i| (i, q(1, 1))).collect(), Relation::Ge, cap);
        let out = solve(&bad).unwrap();
        prop_assert_eq!(out.status, LpStatus::Infeasible);
        prop_assert!(bad.verify_infeasibility(&out.dual.unwrap()));
    }

    #[test]
    fn treedec_matches_bruteforce(n in 1usize..7, m in 1usize..4, seed in any::<u64>()) {
        let a = rs(n, seed);
        let b = rs(m, seed ^ 11);
        let g = gaifman(&a);
        for meth in [DecompositionMethod::MinFill, DecompositionMethod::MinDegree] {
            let td = tree_decomposition(&g, meth).unwrap();
            let r = opt_treedec(&a, &b, &td).unwrap();
            prop_assert_eq!(&r.value, &bf(&a, &b));
            prop_assert_eq!(val(&a, &b, &r.witness).unwrap(), r.value);
        }
    }

    #[test]
    fn sa_brackets_and_tightens(n in 1usize..5, m in 1usize..4, seed in any::<u64>(), l in 1i64..4) {
        let a = rs(n, seed);
        let c = rs(m, seed ^ 13);
        let opt = bf(&a, &c);
        let mut prev: Option<Rational> = None;
        for k in 2..=n.max(2) {
            let s = opt_sa(&a, &c, k).unwrap();
            prop_assert!(opt <= s);
            if let Some(p) = &prev {
                prop_assert!(s <= *p);
            }
            prev = Some(s);
        }
        prop_assert_eq!(prev.unwrap(), opt);
        let lam = q(l, 2);
        prop_assert_eq!(opt_sa(&a.rescale(&lam).unwrap(), &c, 2).unwrap(), lam * opt_sa(&a, &c, 2).unwrap());
    }

    #[test]
    fn overcasts_transfer_opt(n in 1usize..4, m in 1usize..4, seed in any::<u64>()) {
        let a = rs(n, seed);
        let b = rs(m, seed ^ 17);
        match overcast_find(&a, &b, OVERCAST_MAP_CAP).unwrap() {
            OvercastOutcome::Overcast(w) => {
                prop_assert!(verify(&w, &a, &b).unwrap().holds());
                for i in 0..20 {
                    let c = rs(1 + (i % 3) as usize, seed ^ (100 + i));
                    prop_assert!(bf(&a, &c) >= bf(&b, &c));
                }
                // composing with the identity on B keeps coverage
                let w2 = compose(&w, &Overcast::identity(m), 1000).unwrap();
                prop_assert!(verify(&w2, &a, &b).unwrap().holds());
            }
            OvercastOutcome::Certificate(c) => {
                prop_assert!(bf(&a, &c.c) < bf(&b, &c.c));
            }
        }
        let eps = [q(0, 1), q(1, 2), q(2, 1)];
        let ab = opt_distance_bound(&a, &b, &eps, OVERCAST_MAP_CAP).unwrap();
        let ba = opt_distance_bound(&b, &a, &eps, OVERCAST_MAP_CAP).unwrap();
        let ok = |r: &pliable::overcast::DistanceReport<Rational>| r.results.iter().map(|(_, x)| x.is_ok()).collect::<Vec<_>>();
        prop_assert_eq!(ok(&ab), ok(&ba));
    }

    #[test]
    fn scaled_copies_merge_at_zero(n in 1usize..3, seed in any::<u64>(), l1 in 1i64..4, l2 in 1i64..4) {
        let a = rs(n, seed);
        prop_assume!(a.tuple_count() > 0);
        let u = disjoint_union(&[a.rescale(&q(l1, 1)).unwrap(), a.rescale(&q(l2, 1)).unwrap()]).unwrap();
        let whole = a.rescale(&q(l1 + l2, 1)).unwrap();
        let r = opt_distance_bound(&u, &whole, &[q(0, 1)], OVERCAST_MAP_CAP).unwrap();
        prop_assert!(r.results[0].1.is_ok());
        let m = merge_components(&u).unwrap();
        let fw = verify(&m.forward, &u, &m.merged).unwrap();
        let bw = verify(&m.backward, &m.merged, &u).unwrap();
        prop_assert!(fw.holds() && bw.holds());
    }

    #[test]
    fn fragility_on_trees(n in 2usize..12, seed in any::<u64>(), l in 2usize..5) {
        let t = random_tree::<Rational>(n, seed);
        let pi: FractionalModulator<Rational> = baker_modulator(&t, l, &[0]).unwrap();
        let mut marg = vec![q(0, 1); n];
        for (x, p) in pi.support() {
            for &v in x {
                marg[v] = marg[v].clone() + p.clone();
            }
        }
        let theta = marg.into_iter().max().unwrap();
        prop_assert_eq!(pi.thinness_in(&t), theta.clone());
        let a = as_structure(&t);
        let w = fragile_to_pliable(&a, &pi, 2).unwrap();
        let floor = q(1, 1) - q(2, 1) * theta.clone();
        for (_, _, s) in &w.survival {
            prop_assert!(*s >= floor);
        }
        prop_assert!(verify(&w.omega, &a, &w.b).unwrap().holds());
        prop_assert!(verify_scaled(&w.omega_prime, &w.b, &a, &w.factor).unwrap().holds());
        let e = edge_from_vertex(&pi, &t).unwrap();
        let (v, d) = vertex_from_edge(&e, &t).unwrap();
        prop_assert!(v.thinness(n) <= q(2 * d as i64, 1) * theta);
    }

    #[test]
    fn bucketing_clauses(n in 2usize..30, seed in any::<u64>()) {
        let mut t = random_tree::<Rational>(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (u, v) in t.edges() {
            t.set_edge_weight(u, v, q(1, 1 << rng.gen_range(0..12)));
        }
        let eps = q(1, 3);
        let r = bucket_edge_weights(&t, &eps, &LayerCut).unwrap();
        let rem = r.removed();
        let rw: Rational = rem.iter().map(|&(u, v)| t.edge_weight(u, v)).sum();
        prop_assert!(rw <= eps * r.total_weight.clone());
        prop_assert!(t.remove_edges(&rem).max_component_size() <= r.k_prime);
    }

    #[test]
    fn pack_round_trip(n in 2usize..5, seed in any::<u64>(), v in 0usize..5) {
        let a = rs(n, seed);
        let v = v % n;
        let p = pack(&a, v).unwrap();
        prop_assert_eq!(unpack(&p.structure, &p.sigma, &p.vertex, p.position).unwrap(), a);
    }

    #[test]
    fn quotient_keeps_weight(n in 2usize..10, k in 1usize..4, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let g = gnp::<Rational>(n, &q(1, 2), seed).unwrap();
        let p = Partition::balanced(n, k).unwrap();
        prop_assert_eq!(quotient(&g, &p).unwrap().norm1(), as_structure(&g).norm1());
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        let c = counting_check(&g, &p, &pairs, None).unwrap();
        prop_assert!(c.eps_exact && c.contains);
        if let QuotientOutcome::Certified(c) = quotient_overcast(&g, &p, &q(1, 2)).unwrap() {
            let s = as_structure(&g);
            prop_assert!(verify(&c.forward, &s, &c.quotient).unwrap().holds());
            prop_assert!(verify_scaled(&c.backward, &c.quotient, &c.pruned, &c.factor).unwrap().holds());
            prop_assert!(verify_scaled(&c.chain, &c.quotient, &s, &c.chain_factor).unwrap().holds());
        }
    }

    #[test]
    fn ptas_brackets_opt(n in 2usize..8, seed in any::<u64>(), l in 2usize..4, k in 2usize..4) {
        let t = random_tree::<Rational>(n, seed);
        let a = as_structure(&t);
        let c = random_structure(&Signature::graph(), k, &q(2, 3), 4, 2, false, seed ^ 19).unwrap();
        let opt = bf(&a, &c);
        let v = ptas_value(&a, &c, &q(0, 1), &NeighbourWitness::trivial(&a)).unwrap();
        prop_assert!(v.lower <= opt && opt <= v.upper);
        let pi: FractionalModulator<Rational> = baker_modulator(&t, l, &[0]).unwrap();
        let w = fragile_to_pliable(&a, &pi, 2).unwrap();
        // a zero factor (thinness 1/2) certifies nothing
        if !w.factor.is_zero() {
            let eps = q(1, 1) / w.factor.clone() - q(1, 1);
            let weak = ptas_value(&a, &c, &eps, &NeighbourWitness::from(w)).unwrap();
            prop_assert!(weak.lower <= opt && opt <= weak.upper);
            prop_assert!(v.ratio <= weak.ratio);
        }
        let r = ptas_constructive(&a, &c, &pi).unwrap();
        prop_assert_eq!(val(&a, &c, r.witness.as_ref().unwrap()).unwrap(), r.lower.clone());
        prop_assert!(r.lower <= opt && opt <= r.upper);
    }

    #[test]
    fn generators_deterministic_and_json_stable(n in 1usize..8, seed in any::<u64>()) {
        let g = gnp::<Rational>(n, &q(1, 3), seed).unwrap();
        prop_assert_eq!(&g, &gnp::<Rational>(n, &q(1, 3), seed).unwrap());
        let gj = graph_to_json(&g);
        prop_assert_eq!(graph_to_json(&graph_from_json::<Rational>(&gj).unwrap()), gj);
        let a = rs(n, seed);
        prop_assert_eq!(&a, &rs(n, seed));
        let back: Structure = structure_from_json(&structure_to_json(&a)).unwrap();
        prop_assert_eq!(&back, &a);
        let ids = a.domain().to_vec();
        let w = Overcast::<Rational>::uniform(vec![Assignment::identity(n), Assignment(vec![0; n])]).unwrap();
        let wj = overcast_to_json(&w, &ids, &ids);
        prop_assert_eq!(overcast_from_json::<Rational>(&wj, &ids, &ids).unwrap(), w);
        let t = tournament::<Rational>(n, seed);
        prop_assert!(t.is_clean());
        prop_assert_eq!(t.tuple_count(), n * (n - 1) / 2);
    }

    #[test]
    fn gadget_completeness(k in 3usize..5, seed in any::<u64>()) {
        let (g, col) = planted_rainbow::<Rational>(k, 2, &q(1, 3), seed).unwrap();
        let gad = hardness_gadget(&g, &col, k, seed).unwrap();
        prop_assert_eq!(bf(&gad.a, &gad.b), binomial::<Rational>(k as u64, 2));
    }
}

#[test]
fn compression_size_ignores_input_size() {
    let k2 = as_structure(&pliable::generators::clique::<Rational>(2));
    let p3 = as_structure(&pliable::generators::path::<Rational>(3));
    let mut bounds = Vec::new();
    for copies in [1, 3, 6, 10] {
        let parts: Vec<Structure> = (0..copies)
            .flat_map(|i| [k2.rescale(&q(i + 1, 1)).unwrap(), p3.rescale(&q(1, i + 2)).unwrap()])
            .collect();
        let a = disjoint_union(&parts).unwrap();
        let r = cc_to_size(&a, 3, &q(1, 2)).unwrap();
        assert!(r.reduction.verify(&a).unwrap());
        assert!(num_bigint::BigUint::from(r.reduction.b.size()) <= r.size_bound);
        bounds.push(r.size_bound);
    }
    assert!(bounds.windows(2).all(|w| w[0] == w[1]));
}
