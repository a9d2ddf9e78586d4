use serde_json::{json, Value};

const RATIONAL: &str = "^-?[0-9]+(/[0-9]+)?$";

pub fn all() -> Value {
    let q = json!({"type": "string", "pattern": RATIONAL});
    let ids = json!({"type": "array", "items": {"type": "string"}});
    json!({
        "structure": {
            "type": "object",
            "required": ["signature", "domain"],
            "properties": {
                "signature": {"type": "array", "items": {
                    "type": "object", "required": ["name", "arity"],
                    "properties": {"name": {"type": "string"}, "arity": {"type": "integer", "minimum": 0}}
                }},
                "domain": ids,
                "values": {"type": "object", "additionalProperties": {"type": "array", "items": {
                    "type": "object", "required": ["tuple", "value"],
                    "properties": {"tuple": ids, "value": q}
                }}}
            }
        },
        "graph": {
            "type": "object",
            "required": ["vertices"],
            "properties": {
                "vertices": ids,
                "edges": {"type": "array", "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}},
                "vertex_weights": {"type": "object", "additionalProperties": q},
                "edge_weights": {"description": "keys \"u,v\"", "type": "object", "additionalProperties": q}
            }
        },
        "overcast": {"type": "array", "items": {
            "type": "object", "required": ["map", "prob"],
            "properties": {"map": {"type": "object", "additionalProperties": {"type": "string"}}, "prob": q}
        }},
        "partition": {
            "type": "object", "required": ["parts"],
            "properties": {"parts": {"type": "array", "items": ids}}
        },
        "modulator": {
            "type": "object", "required": ["kind", "param", "bound", "support"],
            "properties": {
                "kind": {"enum": ["vertex", "edge"]},
                "param": {"enum": ["size", "cc", "tw", "td"]},
                "bound": {"type": "integer", "minimum": 0},
                "support": {"type": "array", "items": {
                    "type": "object", "required": ["set", "prob"],
                    "properties": {"set": {"type": "array"}, "prob": q}
                }}
            }
        },
        "pliable_bundle": {
            "type": "object", "required": ["b", "omega", "omega_prime", "factor"],
            "properties": {
                "b": {"$ref": "#/structure"},
                "omega": {"$ref": "#/overcast"},
                "omega_prime": {"$ref": "#/overcast"},
                "forward_factor": q,
                "factor": q
            }
        },
        "lp": {
            "type": "object", "required": ["sense", "variables"],
            "properties": {
                "sense": {"enum": ["max", "min", "feasibility"]},
                "variables": {"type": "array", "items": {
                    "type": "object", "required": ["name"],
                    "properties": {"name": {"type": "string"}, "nonneg": {"type": "boolean", "default": true}}
                }},
                "objective": {"type": "object", "additionalProperties": q},
                "constraints": {"type": "array", "items": {
                    "type": "object", "required": ["coeffs", "relation", "rhs"],
                    "properties": {
                        "coeffs": {"type": "object", "additionalProperties": q},
                        "relation": {"enum": ["<=", "=", ">="]},
                        "rhs": q
                    }
                }}
            }
        }
    })
}
