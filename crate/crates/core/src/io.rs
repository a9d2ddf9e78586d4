//! JSON encodings. Rationals travel as `"p/q"` strings, elements by id.

use crate::dense::Partition;
use crate::error::{Error, Result};
use crate::fragility::{FractionalModulator, ModulatorKind};
use crate::graphs::{Graph, Param};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::overcast::Overcast;
use crate::scalar::Scalar;
use crate::structures::{Assignment, Signature, ValuedStructure};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

pub fn ratio<T: Scalar>(x: &T) -> Value {
    Value::String(x.to_ratio_string())
}

pub fn parse_scalar<T: Scalar>(s: &str) -> Result<T> {
    T::parse_ratio(s.trim()).ok_or_else(|| Error::Parse(format!("not a rational: {s:?}")))
}

fn lookup(ids: &[String], id: &str, what: &str) -> Result<usize> {
    ids.iter()
        .position(|x| x == id)
        .ok_or_else(|| Error::Parse(format!("unknown {what} {id:?}")))
}

#[derive(Deserialize)]
struct SymbolIn {
    name: String,
    arity: usize,
}

#[derive(Deserialize)]
struct TupleIn {
    tuple: Vec<String>,
    value: String,
}

#[derive(Deserialize)]
struct StructureIn {
    signature: Vec<SymbolIn>,
    domain: Vec<String>,
    #[serde(default)]
    values: BTreeMap<String, Vec<TupleIn>>,
}

pub fn structure_to_json<T: Scalar>(a: &ValuedStructure<T>) -> Value {
    let sig = a.signature();
    let mut values = Map::new();
    for (f, s) in sig.symbols().iter().enumerate() {
        let list: Vec<Value> = a
            .symbol_values(f)
            .iter()
            .map(|(x, v)| {
                json!({
                    "tuple": x.iter().map(|&e| a.element(e)).collect::<Vec<_>>(),
                    "value": ratio(v),
                })
            })
            .collect();
        values.insert(s.name.clone(), Value::Array(list));
    }
    json!({
        "signature": sig.symbols().iter().map(|s| json!({"name": s.name, "arity": s.arity})).collect::<Vec<_>>(),
        "domain": a.domain(),
        "values": values,
    })
}

pub fn structure_from_json<T: Scalar>(v: &Value) -> Result<ValuedStructure<T>> {
    let s: StructureIn = serde_json::from_value(v.clone()).map_err(parse_err)?;
    let sig = Signature::with_nullary(s.signature.into_iter().map(|x| (x.name, x.arity)).collect())?;
    let mut a = ValuedStructure::<T>::new(sig, s.domain)?;
    for (name, tuples) in s.values {
        let f = a
            .signature()
            .position(&name)
            .ok_or_else(|| Error::Parse(format!("unknown symbol {name:?}")))?;
        for t in tuples {
            let x = t
                .tuple
                .iter()
                .map(|id| lookup(a.domain(), id, "element"))
                .collect::<Result<Vec<_>>>()?;
            let val: T = parse_scalar(&t.value)?;
            if !a.get(f, &x).is_zero() {
                return Err(Error::Parse(format!("tuple {:?} of {name} given twice", t.tuple)));
            }
            a.set(f, x, val)?;
        }
    }
    Ok(a)
}

#[derive(Deserialize)]
struct GraphIn {
    vertices: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    vertex_weights: BTreeMap<String, String>,
    #[serde(default)]
    edge_weights: BTreeMap<String, String>,
}

/// Edge weights are keyed `"u,v"`.
pub fn graph_to_json<T: Scalar>(g: &Graph<T>) -> Value {
    let ids = g.vertices();
    let edges: Vec<Value> = g.edges().iter().map(|&(u, v)| json!([ids[u], ids[v]])).collect();
    let mut vw = Map::new();
    if g.has_vertex_weights() {
        for (i, id) in ids.iter().enumerate() {
            vw.insert(id.clone(), ratio(&g.vertex_weight(i)));
        }
    }
    let mut ew = Map::new();
    if g.has_explicit_edge_weights() {
        for (u, v) in g.edges() {
            ew.insert(format!("{},{}", ids[u], ids[v]), ratio(&g.edge_weight(u, v)));
        }
    }
    json!({"vertices": ids, "edges": edges, "vertex_weights": vw, "edge_weights": ew})
}

pub fn graph_from_json<T: Scalar>(v: &Value) -> Result<Graph<T>> {
    let gi: GraphIn = serde_json::from_value(v.clone()).map_err(parse_err)?;
    let mut g = Graph::new(gi.vertices)?;
    let idx = |g: &Graph<T>, id: &str| {
        g.index_of(id)
            .ok_or_else(|| Error::Parse(format!("unknown vertex {id:?}")))
    };
    for (a, b) in &gi.edges {
        let (u, w) = (idx(&g, a)?, idx(&g, b)?);
        if u == w {
            return Err(Error::Parse(format!("loop at {a:?}")));
        }
        g.add_edge(u, w);
    }
    for (id, s) in &gi.vertex_weights {
        let u = idx(&g, id)?;
        g.set_vertex_weight(u, parse_scalar(s)?);
    }
    for (key, s) in &gi.edge_weights {
        let (a, b) = key
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("edge weight key {key:?} is not \"u,v\"")))?;
        let (u, w) = (idx(&g, a)?, idx(&g, b)?);
        if !g.has_edge(u, w) {
            return Err(Error::Parse(format!("weight on missing edge {key:?}")));
        }
        let x: T = parse_scalar(s)?;
        if !x.is_positive() {
            return Err(Error::Negative(format!("edge weight {x}")));
        }
        g.set_edge_weight(u, w, x);
    }
    Ok(g)
}

/// Graph behind a symmetric, loopless structure over one binary symbol;
/// e(u,v) becomes the weight of uv.
pub fn graph_from_structure<T: Scalar>(a: &ValuedStructure<T>) -> Result<Graph<T>> {
    let sig = a.signature();
    if sig.len() != 1 || sig.arity(0) != 2 {
        return Err(Error::Parse("expected one binary symbol".into()));
    }
    let mut g = Graph::new(a.domain().to_vec())?;
    for (x, v) in a.symbol_values(0) {
        let (u, w) = (x[0], x[1]);
        if u == w {
            return Err(Error::Parse(format!("loop at {:?}", a.element(u))));
        }
        if a.get(0, &[w, u]) != *v {
            return Err(Error::Parse("values are not symmetric".into()));
        }
        if u < w {
            g.add_edge(u, w);
            if !v.is_one() {
                g.set_edge_weight(u, w, v.clone());
            }
        }
    }
    Ok(g)
}

/// Graph JSON or a graph-shaped structure JSON.
pub fn any_graph_from_json<T: Scalar>(v: &Value) -> Result<Graph<T>> {
    if v.get("signature").is_some() {
        graph_from_structure(&structure_from_json(v)?)
    } else {
        graph_from_json(v)
    }
}

pub fn assignment_to_json(source: &[String], target: &[String], h: &Assignment) -> Value {
    let mut m = Map::new();
    for (i, &t) in h.0.iter().enumerate() {
        m.insert(source[i].clone(), Value::String(target[t].clone()));
    }
    Value::Object(m)
}

pub fn assignment_from_json(source: &[String], target: &[String], v: &Value) -> Result<Assignment> {
    let m: BTreeMap<String, String> = serde_json::from_value(v.clone()).map_err(parse_err)?;
    if m.len() != source.len() {
        return Err(Error::Parse("map must assign every source element once".into()));
    }
    let mut out = vec![0; source.len()];
    for (k, t) in &m {
        out[lookup(source, k, "source element")?] = lookup(target, t, "target element")?;
    }
    Ok(Assignment(out))
}

/// `[{"map": {...}, "prob": "p/q"}, ...]`
pub fn overcast_to_json<T: Scalar>(w: &Overcast<T>, source: &[String], target: &[String]) -> Value {
    Value::Array(
        w.support()
            .iter()
            .map(|(g, p)| json!({"map": assignment_to_json(source, target, g), "prob": ratio(p)}))
            .collect(),
    )
}

#[derive(Deserialize)]
struct EntryIn {
    map: Value,
    prob: String,
}

pub fn overcast_from_json<T: Scalar>(v: &Value, source: &[String], target: &[String]) -> Result<Overcast<T>> {
    let entries: Vec<EntryIn> = serde_json::from_value(v.clone()).map_err(parse_err)?;
    let mut out = Vec::new();
    for e in entries {
        out.push((assignment_from_json(source, target, &e.map)?, parse_scalar(&e.prob)?));
    }
    Overcast::new(out)
}

/// `{"parts": [["a","b"], ...]}`
pub fn partition_to_json(p: &Partition, ids: &[String]) -> Value {
    let parts: Vec<Vec<&String>> = p.parts().iter().map(|x| x.iter().map(|&v| &ids[v]).collect()).collect();
    json!({ "parts": parts })
}

pub fn partition_from_json(v: &Value, ids: &[String]) -> Result<Partition> {
    #[derive(Deserialize)]
    struct P {
        parts: Vec<Vec<String>>,
    }
    let p: P = serde_json::from_value(v.clone()).map_err(parse_err)?;
    let parts = p
        .parts
        .iter()
        .map(|x| x.iter().map(|id| lookup(ids, id, "vertex")).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Partition::new(parts, ids.len())
}

pub fn param_name(p: Param) -> &'static str {
    match p {
        Param::Size => "size",
        Param::Cc => "cc",
        Param::Tw => "tw",
        Param::Td => "td",
    }
}

pub fn parse_param(s: &str) -> Result<Param> {
    match s {
        "size" => Ok(Param::Size),
        "cc" => Ok(Param::Cc),
        "tw" => Ok(Param::Tw),
        "td" => Ok(Param::Td),
        _ => Err(Error::Parse(format!("unknown parameter {s:?}"))),
    }
}

/// Vertex sets by vertex id; edge sets as `[u, v]` pairs.
pub fn modulator_to_json<T: Scalar, U: Scalar>(m: &FractionalModulator<T>, g: &Graph<U>) -> Value {
    let ids = g.vertices();
    let edges = g.edges();
    let support: Vec<Value> = m
        .support()
        .iter()
        .map(|(s, p)| {
            let set: Vec<Value> = match m.kind {
                ModulatorKind::Vertex => s.iter().map(|&v| json!(ids[v])).collect(),
                ModulatorKind::Edge => s
                    .iter()
                    .map(|&e| json!([ids[edges[e].0], ids[edges[e].1]]))
                    .collect(),
            };
            json!({"set": set, "prob": ratio(p)})
        })
        .collect();
    json!({
        "kind": match m.kind { ModulatorKind::Vertex => "vertex", ModulatorKind::Edge => "edge" },
        "param": param_name(m.param),
        "bound": m.bound,
        "support": support,
    })
}

pub fn modulator_from_json<T: Scalar, U: Scalar>(v: &Value, g: &Graph<U>) -> Result<FractionalModulator<T>> {
    #[derive(Deserialize)]
    struct SetIn {
        set: Vec<Value>,
        prob: String,
    }
    #[derive(Deserialize)]
    struct ModIn {
        kind: String,
        param: String,
        bound: usize,
        support: Vec<SetIn>,
    }
    let m: ModIn = serde_json::from_value(v.clone()).map_err(parse_err)?;
    let kind = match m.kind.as_str() {
        "vertex" => ModulatorKind::Vertex,
        "edge" => ModulatorKind::Edge,
        k => return Err(Error::Parse(format!("unknown modulator kind {k:?}"))),
    };
    let ids = g.vertices();
    let edges = g.edges();
    let mut entries = Vec::new();
    for s in m.support {
        let mut set = Vec::new();
        for x in &s.set {
            match kind {
                ModulatorKind::Vertex => {
                    let id: String = serde_json::from_value(x.clone()).map_err(parse_err)?;
                    set.push(lookup(ids, &id, "vertex")?);
                }
                ModulatorKind::Edge => {
                    let (a, b): (String, String) = serde_json::from_value(x.clone()).map_err(parse_err)?;
                    let (u, w) = (lookup(ids, &a, "vertex")?, lookup(ids, &b, "vertex")?);
                    let key = (u.min(w), u.max(w));
                    let e = edges
                        .iter()
                        .position(|&e| e == key)
                        .ok_or_else(|| Error::Parse(format!("no edge {a:?}-{b:?}")))?;
                    set.push(e);
                }
            }
        }
        entries.push((set, parse_scalar(&s.prob)?));
    }
    FractionalModulator::new(kind, parse_param(&m.param)?, m.bound, entries)
}

/// `{"sense": "max", "variables": [{"name": "x", "nonneg": true}],
/// "objective": {"x": "1/1"}, "constraints": [{"coeffs": {"x": "1/1"},
/// "relation": "<=", "rhs": "4/1"}]}`
pub fn lp_from_json<T: Scalar>(v: &Value) -> Result<LinearProgram<T>> {
    #[derive(Deserialize)]
    struct VarIn {
        name: String,
        #[serde(default = "yes")]
        nonneg: bool,
    }
    fn yes() -> bool {
        true
    }
    #[derive(Deserialize)]
    struct ConIn {
        coeffs: BTreeMap<String, String>,
        relation: String,
        rhs: String,
    }
    #[derive(Deserialize)]
    struct LpIn {
        sense: String,
        variables: Vec<VarIn>,
        #[serde(default)]
        objective: BTreeMap<String, String>,
        #[serde(default)]
        constraints: Vec<ConIn>,
    }
    let l: LpIn = serde_json::from_value(v.clone()).map_err(parse_err)?;
    let sense = match l.sense.as_str() {
        "max" => Sense::Max,
        "min" => Sense::Min,
        "feasibility" => Sense::Feasibility,
        s => return Err(Error::Parse(format!("unknown sense {s:?}"))),
    };
    let mut lp = LinearProgram::new(sense);
    let names: Vec<String> = l.variables.iter().map(|x| x.name.clone()).collect();
    for x in l.variables {
        lp.add_variable(x.name, x.nonneg);
    }
    let row = |m: &BTreeMap<String, String>| -> Result<Vec<(usize, T)>> {
        m.iter()
            .map(|(k, s)| Ok((lookup(&names, k, "variable")?, parse_scalar(s)?)))
            .collect()
    };
    lp.objective = row(&l.objective)?;
    for c in &l.constraints {
        let rel = match c.relation.as_str() {
            "<=" => Relation::Le,
            "=" | "==" => Relation::Eq,
            ">=" => Relation::Ge,
            r => return Err(Error::Parse(format!("unknown relation {r:?}"))),
        };
        lp.add_constraint(row(&c.coeffs)?, rel, parse_scalar(&c.rhs)?);
    }
    lp.validate()?;
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{clique, path, tournament};
    use crate::structures::graph_structure;
    use crate::Rational;

    #[test]
    fn structure_round_trip() {
        let a = graph_structure(&clique::<Rational>(3));
        let j = structure_to_json(&a);
        assert_eq!(j["values"]["e"][0]["value"], "1/1");
        let b: ValuedStructure<Rational> = structure_from_json(&j).unwrap();
        assert_eq!(a, b);
        let t = tournament::<Rational>(5, 3);
        assert_eq!(structure_from_json::<Rational>(&structure_to_json(&t)).unwrap(), t);
    }

    #[test]
    fn exact_format() {
        let s = r#"{"signature":[{"name":"e","arity":2}],"domain":["a","b"],"values":{"e":[{"tuple":["a","b"],"value":"1/2"}]}}"#;
        let v: Value = serde_json::from_str(s).unwrap();
        let a: ValuedStructure<Rational> = structure_from_json(&v).unwrap();
        assert_eq!(serde_json::to_string(&structure_to_json(&a)).unwrap(), s);
        let bad = s.replace(r#""tuple":["a","b"]"#, r#""tuple":["a","c"]"#);
        assert!(structure_from_json::<Rational>(&serde_json::from_str(&bad).unwrap()).is_err());
    }

    #[test]
    fn graph_and_partition_round_trip() {
        let mut g = path::<Rational>(4);
        g.set_edge_weight(1, 2, Rational::ratio(3, 2));
        let h: Graph<Rational> = graph_from_json(&graph_to_json(&g)).unwrap();
        assert_eq!(graph_to_json(&h), graph_to_json(&g));
        let back = graph_from_structure(&crate::structures::graph_structure(&g)).unwrap();
        assert_eq!(graph_to_json(&back), graph_to_json(&g));
        let p = Partition::balanced(4, 2).unwrap();
        assert_eq!(partition_from_json(&partition_to_json(&p, g.vertices()), g.vertices()).unwrap(), p);
    }

    #[test]
    fn lp_parse() {
        let v = json!({"sense":"max","variables":[{"name":"x"},{"name":"y"}],
            "objective":{"x":"1/1","y":"1/1"},
            "constraints":[{"coeffs":{"x":"1/1","y":"2/1"},"relation":"<=","rhs":"4/1"}]});
        let lp: LinearProgram<Rational> = lp_from_json(&v).unwrap();
        assert_eq!(lp.constraints.len(), 1);
        let out = crate::lp::solve(&lp).unwrap();
        assert_eq!(out.objective, Some(Rational::ratio(4, 1)));
    }
}
