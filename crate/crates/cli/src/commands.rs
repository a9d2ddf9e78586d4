use crate::{
    CliError, Command, DenseOp, Family, GenArgs, GenKind, LpOp, ModulatorArgs, PtasMode,
    ReduceArgs, Source, Target,
};
use pliable::dense::{self, DefectMode, QuotientOutcome};
use pliable::exact::{opt_auto, opt_bruteforce};
use pliable::fragility::{baker_modulator, fragile_to_pliable, grid_modulator, FractionalModulator};
use pliable::generators as gen;
use pliable::graphs::Graph;
use pliable::io::*;
use pliable::lp::{solve, LpStatus};
use pliable::overcast::{
    opt_distance_bound, overcast_find_scaled, surrogate, verify_scaled, CoverageReport,
    OvercastOutcome,
};
use pliable::ptas::{ptas_constructive, ptas_value, NeighbourWitness, PtasReport};
use pliable::reductions::{cc_to_size, pack, td_to_size, Reduction};
use pliable::relax::{opt_sa_with, SaMethod};
use pliable::structures::{edit_distance, gaifman, graph_structure, Distance};
use pliable::{Rational, Scalar, Structure};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

type R<T> = Result<T, CliError>;

pub fn parse_q(s: &str) -> Result<Rational, String> {
    Rational::parse_ratio(s.trim()).ok_or_else(|| format!("not a rational: {s:?}"))
}

/// Input files read so far, with their SHA-256.
#[derive(Default)]
struct Inputs(Vec<Value>);

impl Inputs {
    fn read(&mut self, p: &Path) -> R<Value> {
        let bytes = std::fs::read(p)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.0.push(json!({"path": p.display().to_string(), "sha256": hex}));
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Usage(format!("{}: invalid JSON: {e}", p.display())))
    }

    fn structure(&mut self, p: &Path) -> R<Structure> {
        Ok(structure_from_json(&self.read(p)?)?)
    }

    fn graph(&mut self, p: &Path) -> R<Graph<Rational>> {
        Ok(any_graph_from_json(&self.read(p)?)?)
    }
}

fn q(x: &Rational) -> Value {
    ratio(x)
}

fn report_json(r: &CoverageReport<Rational>, b: &Structure) -> Value {
    let failing: Vec<Value> = r
        .failing()
        .iter()
        .map(|t| {
            json!({
                "symbol": b.signature().symbols()[t.symbol].name,
                "tuple": t.tuple.iter().map(|&e| b.element(e)).collect::<Vec<_>>(),
                "required": q(&t.required),
                "covered": q(&t.covered),
            })
        })
        .collect();
    json!({
        "holds": r.holds(),
        "zero_slack": r.zero_slack(),
        "min_slack": r.min_slack().map(|s| q(&s)),
        "failing": failing,
    })
}

fn pair(s: &str) -> R<(usize, usize)> {
    let (a, b) = s
        .split_once('-')
        .ok_or_else(|| CliError::Usage(format!("pair {s:?} is not i-j")))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad index in {s:?}")));
    Ok((p(a)?, p(b)?))
}

fn ids_to_indices(g: &Graph<Rational>, ids: &[String]) -> R<Vec<usize>> {
    ids.iter()
        .map(|id| {
            g.index_of(id)
                .ok_or_else(|| CliError::Usage(format!("unknown vertex {id:?}")))
        })
        .collect()
}

pub fn run(cmd: Command) -> R<Value> {
    let mut inp = Inputs::default();
    let (name, body) = match cmd {
        Command::Gen(g) => return generate(g, &mut inp),
        Command::Solve { a, b, exact } => {
            let (a, b) = (inp.structure(&a)?, inp.structure(&b)?);
            let r = if exact { opt_bruteforce(&a, &b)? } else { opt_auto(&a, &b)? };
            (
                "solve",
                json!({
                    "value": q(&r.value),
                    "witness": assignment_to_json(a.domain(), b.domain(), &r.witness),
                    "method": if exact { "enumeration" } else { "tree-decomposition" },
                }),
            )
        }
        Command::Relax { a, b, level } => {
            let (a, b) = (inp.structure(&a)?, inp.structure(&b)?);
            let sa = opt_sa_with(&a, &b, level, SaMethod::Auto)?;
            let exact = opt_auto(&a, &b).ok().map(|r| r.value);
            (
                "relax",
                json!({
                    "level": level,
                    "sa_value": q(&sa.value),
                    "by_lp": sa.by_lp,
                    "variables": sa.variables.to_string(),
                    "exact_value": exact.as_ref().map(q),
                    "gap": exact.as_ref().map(|e| q(&(sa.value.clone() - e.clone()))),
                }),
            )
        }
        Command::Overcast { a, b, eps, verify, cap } => {
            let (a, b) = (inp.structure(&a)?, inp.structure(&b)?);
            let factor = eps.as_ref().map(surrogate).unwrap_or_else(|| Rational::from_int(1));
            if let Some(w) = verify {
                let w = overcast_from_json::<Rational>(&inp.read(&w)?, a.domain(), b.domain())?;
                let r = verify_scaled(&w, &a, &b, &factor)?;
                let body = json!({"factor": q(&factor), "verification": report_json(&r, &b)});
                if !r.holds() {
                    return Err(CliError::Failed(wrap("overcast", inp, body)));
                }
                ("overcast", body)
            } else {
                let body = match overcast_find_scaled(&a, &b, &factor, cap)? {
                    OvercastOutcome::Overcast(w) => json!({
                        "exists": true,
                        "factor": q(&factor),
                        "overcast": overcast_to_json(&w, a.domain(), b.domain()),
                    }),
                    OvercastOutcome::Certificate(c) => json!({
                        "exists": false,
                        "factor": q(&factor),
                        "certificate": {
                            "c": structure_to_json(&c.c),
                            "opt_a": q(&c.opt_a),
                            "opt_b_scaled": q(&c.opt_b),
                        },
                    }),
                };
                ("overcast", body)
            }
        }
        Command::Distance { a, b, eps, edit, cap } => {
            let (a, b) = (inp.structure(&a)?, inp.structure(&b)?);
            let mut body = Map::new();
            if !eps.is_empty() {
                let rep = opt_distance_bound(&a, &b, &eps, cap)?;
                let rows: Vec<Value> = rep
                    .results
                    .iter()
                    .map(|(e, r)| match r {
                        Ok(bd) => json!({
                            "eps": q(e),
                            "accepted": true,
                            "factor": q(&bd.factor),
                            "forward": overcast_to_json(&bd.forward, a.domain(), b.domain()),
                            "backward": overcast_to_json(&bd.backward, b.domain(), a.domain()),
                        }),
                        Err(err) => json!({"eps": q(e), "accepted": false, "reason": err.to_string()}),
                    })
                    .collect();
                body.insert("bounds".into(), Value::Array(rows));
                body.insert(
                    "least_accepted".into(),
                    rep.least_accepted().map(|b| q(&b.epsilon)).unwrap_or(Value::Null),
                );
            }
            if edit {
                let d = match edit_distance(&a, &b, None, 8)? {
                    Distance::Finite(x) => q(&x),
                    Distance::Infinite => json!("infinite"),
                };
                body.insert("edit_distance".into(), d);
            }
            if body.is_empty() {
                return Err(CliError::Usage("give --eps and/or --edit".into()));
            }
            ("distance", Value::Object(body))
        }
        Command::Modulator(m) => ("modulator", modulator(m, &mut inp)?),
        Command::PliableApprox { a, modulator, r } => {
            let a = inp.structure(&a)?;
            let g = gaifman(&a);
            let pi: FractionalModulator<Rational> = modulator_from_json(unwrap_report(&inp.read(&modulator)?, "modulator"), &g)?;
            let r = r.unwrap_or_else(|| {
                a.tuples().map(|(_, x, _)| {
                    let mut x = x.clone();
                    x.sort_unstable();
                    x.dedup();
                    x.len()
                }).max().unwrap_or(0)
            });
            let w = fragile_to_pliable(&a, &pi, r)?;
            (
                "pliable-approx",
                json!({
                    "b": structure_to_json(&w.b),
                    "omega": overcast_to_json(&w.omega, a.domain(), w.b.domain()),
                    "omega_prime": overcast_to_json(&w.omega_prime, w.b.domain(), a.domain()),
                    "forward_factor": "1/1",
                    "factor": q(&w.factor),
                    "thinness": q(&w.thinness),
                    "r": r,
                }),
            )
        }
        Command::Reduce(r) => ("reduce", reduce(r, &mut inp)?),
        Command::Dense { op } => ("dense", dense_cmd(op, &mut inp)?),
        Command::Ptas { eps, mode, a, c, witness } => {
            let (a, c) = (inp.structure(&a)?, inp.structure(&c)?);
            let rep = match mode {
                PtasMode::Value => {
                    let w = match witness {
                        None => NeighbourWitness::trivial(&a),
                        Some(p) => bundle(&inp.read(&p)?, &a)?,
                    };
                    ptas_value(&a, &c, &eps, &w)?
                }
                PtasMode::Construct => {
                    let p = witness.ok_or_else(|| {
                        CliError::Usage("construct mode needs a modulator file".into())
                    })?;
                    let pi: FractionalModulator<Rational> =
                        modulator_from_json(unwrap_report(&inp.read(&p)?, "modulator"), &gaifman(&a))?;
                    ptas_constructive(&a, &c, &pi)?
                }
            };
            ("ptas", ptas_json(&rep, &a, &c))
        }
        Command::Lp { op: LpOp::Solve { lp } } => {
            let lp = lp_from_json::<Rational>(&inp.read(&lp)?)?;
            let out = solve(&lp)?;
            let named = |xs: &Option<Vec<Rational>>, names: Vec<String>| {
                xs.as_ref().map(|x| {
                    names.into_iter().zip(x).map(|(n, v)| (n, q(v))).collect::<Map<_, _>>()
                })
            };
            let status = match out.status {
                LpStatus::Optimal => "optimal",
                LpStatus::Infeasible => "infeasible",
                LpStatus::Unbounded => "unbounded",
            };
            let rows: Vec<String> = (0..lp.constraints.len()).map(|i| format!("c{i}")).collect();
            (
                "lp",
                json!({
                    "status": status,
                    "objective": out.objective.as_ref().map(q),
                    "primal": named(&out.primal, lp.variables.iter().map(|v| v.name.clone()).collect()),
                    "dual": named(&out.dual, rows),
                    "pivots": out.pivots,
                }),
            )
        }
    };
    Ok(wrap(name, inp, body))
}

fn wrap(name: &str, inp: Inputs, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), json!(name));
    m.insert("inputs".into(), Value::Array(inp.0));
    if let Value::Object(b) = body {
        m.extend(b);
    }
    Value::Object(m)
}

fn bundle(v: &Value, a: &Structure) -> R<NeighbourWitness<Rational>> {
    let b: Structure = structure_from_json(&v["b"])?;
    let field = |k: &str| -> R<Rational> {
        match v.get(k).and_then(|x| x.as_str()) {
            Some(s) => Ok(parse_scalar(s)?),
            None => Err(CliError::Usage(format!("bundle lacks {k:?}"))),
        }
    };
    Ok(NeighbourWitness {
        forward: overcast_from_json(&v["omega"], a.domain(), b.domain())?,
        backward: overcast_from_json(&v["omega_prime"], b.domain(), a.domain())?,
        forward_factor: field("forward_factor").unwrap_or_else(|_| Rational::from_int(1)),
        backward_factor: field("factor")?,
        b,
    })
}

fn ptas_json(r: &PtasReport<Rational>, a: &Structure, c: &Structure) -> Value {
    json!({
        "lower": q(&r.lower),
        "upper": q(&r.upper),
        "ratio": q(&r.ratio),
        "level": r.level,
        "witness": r.witness.as_ref().map(|w| assignment_to_json(a.domain(), c.domain(), w)),
        "chosen": r.chosen,
    })
}

fn modulator(m: ModulatorArgs, inp: &mut Inputs) -> R<Value> {
    let (pi, g): (FractionalModulator<Rational>, Graph<Rational>) = match m.family {
        Family::Baker => {
            let p = m
                .input
                .ok_or_else(|| CliError::Usage("Baker layering needs an input graph".into()))?;
            let g = inp.graph(&p)?;
            let roots = if m.roots.is_empty() {
                g.component_sets().iter().map(|c| c[0]).collect()
            } else {
                ids_to_indices(&g, &m.roots)?
            };
            (baker_modulator(&g, m.layers, &roots)?, g)
        }
        Family::Grid => {
            if m.sides.is_empty() {
                return Err(CliError::Usage("grid slabs need --sides".into()));
            }
            let axes: Vec<usize> = if m.axes.is_empty() { (0..m.sides.len()).collect() } else { m.axes };
            (grid_modulator(&m.sides, m.layers, &axes)?, gen::grid_box(&m.sides))
        }
    };
    let check = pi.check(&g)?;
    Ok(json!({
        "modulator": modulator_to_json(&pi, &g),
        "thinness": q(&check.thinness),
        "residuals": check.residuals,
        "bound_holds": check.bound_holds,
        "all_exact": check.all_exact,
        "graph": graph_to_json(&g),
    }))
}

fn reduction_json(red: &Reduction<Rational>, a: &Structure) -> R<Value> {
    Ok(json!({
        "b": structure_to_json(&red.b),
        "factor": q(&red.factor),
        "forward": overcast_to_json(&red.forward, a.domain(), red.b.domain()),
        "backward": overcast_to_json(&red.backward, red.b.domain(), a.domain()),
        "verified": red.verify(a)?,
    }))
}

fn reduce(r: ReduceArgs, inp: &mut Inputs) -> R<Value> {
    let a = inp.structure(&r.a)?;
    let body = match r.target {
        Target::Size => {
            let eps = r
                .eps
                .ok_or_else(|| CliError::Usage("size reductions need --eps".into()))?;
            match r.from {
                Source::Td => {
                    let red = td_to_size(&a, &eps)?;
                    reduction_json(&red, &a)?
                }
                Source::Cc => {
                    let d = r.d.unwrap_or_else(|| gaifman(&a).max_component_size());
                    let s = cc_to_size(&a, d, &eps)?;
                    let mut v = reduction_json(&s.reduction, &a)?;
                    v["edit_distance"] = q(&s.edit_distance);
                    v["classes"] = json!(s.classes);
                    v["class_bound"] = json!(s.class_bound.to_string());
                    v["size_bound"] = json!(s.size_bound.to_string());
                    v
                }
            }
        }
        Target::Pack => {
            let id = r
                .element
                .ok_or_else(|| CliError::Usage("packing needs --element".into()))?;
            let v = a
                .index_of(&id)
                .ok_or_else(|| CliError::Usage(format!("unknown element {id:?}")))?;
            let p = pack(&a, v)?;
            let back = pliable::reductions::unpack(&p.structure, &p.sigma, &p.vertex, p.position)?;
            json!({"packed": structure_to_json(&p.structure), "round_trip": back == a})
        }
    };
    if body.get("verified") == Some(&json!(false)) || body.get("round_trip") == Some(&json!(false)) {
        return Err(CliError::Failed(body));
    }
    Ok(body)
}

fn dense_cmd(op: DenseOp, inp: &mut Inputs) -> R<Value> {
    let part = |inp: &mut Inputs, g: &Graph<Rational>, p: &Path| -> R<dense::Partition> {
        Ok(partition_from_json(&inp.read(p)?, g.vertices())?)
    };
    let pairs = |ps: &[String]| ps.iter().map(|s| pair(s)).collect::<R<Vec<_>>>();
    Ok(match op {
        DenseOp::Quotient { g, partition } => {
            let g = inp.graph(&g)?;
            let p = part(inp, &g, &partition)?;
            json!({"op": "quotient", "quotient": structure_to_json(&dense::quotient(&g, &p)?)})
        }
        DenseOp::Homogeneity { g, v1, v2, samples, seed } => {
            let g = inp.graph(&g)?;
            let (a, b) = (ids_to_indices(&g, &v1)?, ids_to_indices(&g, &v2)?);
            let mode = match samples {
                Some(n) => DefectMode::Sampled { samples: n, seed },
                None => DefectMode::Exact,
            };
            let r = dense::homogeneity_defect(&g, &a, &b, mode)?;
            let ids = |xs: &[usize]| xs.iter().map(|&v| g.vertices()[v].clone()).collect::<Vec<_>>();
            json!({
                "op": "homogeneity",
                "density": q(&r.density),
                "defect": q(&r.defect),
                "exact": r.exact,
                "witness": [ids(&r.witness.0), ids(&r.witness.1)],
            })
        }
        DenseOp::Counting { g, partition, pairs: ps, eps } => {
            let g = inp.graph(&g)?;
            let p = part(inp, &g, &partition)?;
            let r = dense::counting_check(&g, &p, &pairs(&ps)?, eps.as_ref())?;
            let body = json!({
                "op": "counting",
                "sum": q(&r.sum),
                "maps": r.maps.to_string(),
                "center": q(&r.center),
                "half_width": q(&r.half_width),
                "eps": q(&r.eps),
                "contains": r.contains,
            });
            if !r.contains {
                return Err(CliError::Failed(body));
            }
            body
        }
        DenseOp::Extension { g, partition, pairs: ps, ab, eps } => {
            let g = inp.graph(&g)?;
            let p = part(inp, &g, &partition)?;
            let r = dense::extension_check(&g, &p, &pairs(&ps)?, pair(&ab)?, eps.as_ref())?;
            let ex: Vec<Value> = r
                .exceptions
                .iter()
                .map(|&(u, v)| json!([g.vertices()[u], g.vertices()[v]]))
                .collect();
            let body = json!({
                "op": "extension",
                "pair": [r.pair.0, r.pair.1],
                "eps": q(&r.eps),
                "sqrt_eps": q(&r.sqrt_eps),
                "exceptions": ex,
                "checked": r.checked,
                "allowed": q(&r.allowed),
                "holds": r.holds,
            });
            if !r.holds {
                return Err(CliError::Failed(body));
            }
            body
        }
        DenseOp::Approx { g, partition, eps } => {
            let g = inp.graph(&g)?;
            let p = part(inp, &g, &partition)?;
            let ids = g.vertices().to_vec();
            match dense::quotient_overcast(&g, &p, &eps)? {
                QuotientOutcome::Certified(c) => json!({
                    "op": "approx",
                    "certified": true,
                    "quotient": structure_to_json(&c.quotient),
                    "forward": overcast_to_json(&c.forward, &ids, c.quotient.domain()),
                    "backward": overcast_to_json(&c.backward, c.quotient.domain(), &ids),
                    "factor": q(&c.factor),
                    "pruned": structure_to_json(&c.pruned),
                    "f_pairs": c.f_pairs,
                    "eps_measured": q(&c.eps_measured),
                    "edit_distance": q(&c.edit_distance),
                    "chain_factor": q(&c.chain_factor),
                    "density_hypothesis": c.density_hypothesis,
                }),
                QuotientOutcome::Rejected(d) => json!({
                    "op": "approx",
                    "certified": false,
                    "reasons": d.reasons,
                    "f_pairs": d.f_pairs,
                    "eps_measured": q(&d.eps_measured),
                    "removed_edges": d.removed_edges,
                    "kept_edges": d.kept_edges,
                    "failing": d.failing.len(),
                    "density_hypothesis": d.density_hypothesis,
                }),
            }
        }
        DenseOp::Search { g, k, budget, seed } => {
            let g = inp.graph(&g)?;
            let r = dense::regularity_search(&g, k, budget, seed)?;
            json!({
                "op": "search",
                "partition": partition_to_json(&r.partition, g.vertices()),
                "defect": q(&r.defect),
                "exact": r.exact,
                "starts": r.starts,
            })
        }
        DenseOp::Clique { n, k } => {
            let c = dense::clique_overcast::<Rational>(n, k)?;
            let ok = c.forward_report.holds() && c.backward_report.holds();
            let body = json!({
                "op": "clique",
                "lambda": q(&c.lambda),
                "forward_factor": q(&c.forward_factor),
                "backward_factor": q(&c.backward_factor),
                "forward_zero_slack": c.forward_report.zero_slack(),
                "backward_zero_slack": c.backward_report.zero_slack(),
                "forward_maps": c.forward.len(),
                "backward_maps": c.backward.len(),
            });
            if !ok {
                return Err(CliError::Failed(body));
            }
            body
        }
    })
}

fn generate(g: GenArgs, inp: &mut Inputs) -> R<Value> {
    let s = g.seed;
    let graph: Graph<Rational> = match g.kind {
        GenKind::Grid { d, n } => gen::grid(d, n),
        GenKind::Clique { n } => gen::clique(n),
        GenKind::Path { n } => gen::path(n),
        GenKind::Cycle { n } => gen::cycle(n),
        GenKind::Star { k } => gen::star(k),
        GenKind::Gnp { n, p } => gen::gnp(n, &p, s)?,
        GenKind::Bipartite { a, b, density } => gen::bipartite(a, b, &density, s)?,
        GenKind::Multipartite { sizes } => gen::complete_multipartite(&sizes),
        GenKind::Matching { k } => gen::perfect_matching(k),
        GenKind::Tree { n } => gen::random_tree(n, s),
        GenKind::TriangleGlued { base } => gen::triangle_glued(&inp.graph(&base)?),
        GenKind::Tournament { n } => return Ok(structure_to_json(&gen::tournament::<Rational>(n, s))),
        GenKind::Hardness { k, per_class, p } => {
            let (h, coloring) = gen::planted_rainbow::<Rational>(k, per_class, &p, s)?;
            let gadget = gen::hardness_gadget(&h, &coloring, k, s)?;
            return Ok(json!({
                "graph": graph_to_json(&h),
                "coloring": coloring,
                "a": structure_to_json(&gadget.a),
                "b": structure_to_json(&gadget.b),
            }));
        }
    };
    Ok(if g.graph { graph_to_json(&graph) } else { structure_to_json(&graph_structure(&graph)) })
}

fn is_ratio(s: &str) -> bool {
    let t = s.strip_prefix('-').unwrap_or(s);
    match t.split_once('/') {
        Some((a, b)) => {
            !a.is_empty()
                && !b.is_empty()
                && a.bytes().all(|c| c.is_ascii_digit())
                && b.bytes().all(|c| c.is_ascii_digit())
        }
        None => false,
    }
}

/// Appends "(≈ decimal)" to every rational string.
pub fn humanize(v: Value) -> Value {
    match v {
        Value::String(s) if is_ratio(&s) => {
            let x = parse_q(&s).map(|r| r.to_f64()).unwrap_or(f64::NAN);
            Value::String(format!("{s} (≈ {x:.6})"))
        }
        Value::Array(a) => Value::Array(a.into_iter().map(humanize).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, humanize(v))).collect()),
        other => other,
    }
}

/// A report written by another subcommand carries its payload under `key`;
/// bare payload files pass through.
fn unwrap_report<'a>(v: &'a Value, key: &str) -> &'a Value {
    match v.get("command").and(v.get(key)) {
        Some(inner) => inner,
        None => v,
    }
}
