//! JSON encoding of factored instances.
//!
//! ```json
//! {"kind":"fkf","k":2,"n":1,"g":2,"b":3,"predicate":"OV",
//!  "lists":[[[["001","010"],["001","010"]]],[[["000"],["110"]]]]}
//! ```
//! Strings are fixed-width with the leftmost character as the highest bit.
//! FfkC instances carry `"edges"`: a list of `{"u":[i,a],"v":[j,c],"label":[...groups]}`.

use crate::error::{Error, Result};
use crate::factored::{format_bitstring, parse_bitstring, FactoredVector, FfkcInstance, FkfInstance, PredKind, Predicate};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Fkf(FkfInstance),
    Ffkc(FfkcInstance),
}

type GroupsJson = Vec<Vec<String>>;

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    u: [usize; 2],
    v: [usize; 2],
    label: GroupsJson,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    kind: String,
    k: usize,
    n: usize,
    g: usize,
    b: usize,
    predicate: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    lists: Option<Vec<Vec<GroupsJson>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<EdgeJson>>,
}

fn vec_to_json(v: &FactoredVector) -> GroupsJson {
    v.groups.iter().map(|g| g.iter().map(|s| format_bitstring(s, v.b)).collect()).collect()
}

fn vec_from_json(j: &GroupsJson, g: usize, b: usize) -> Result<FactoredVector> {
    if j.len() != g {
        return Err(Error::ArityMismatch { expected: g, got: j.len() });
    }
    let groups = j.iter().map(|gr| gr.iter().map(|s| parse_bitstring(s, b)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
    FactoredVector::new(b, groups)
}

fn pred_to_json(p: &Predicate, b: usize) -> Value {
    if p.kind == PredKind::Table {
        let rows: Vec<Vec<String>> = p.table.iter().map(|t| t.iter().map(|s| format_bitstring(s, b)).collect()).collect();
        serde_json::json!({"kind": "TABLE", "arity": p.arity, "table": rows})
    } else {
        Value::String(p.kind.name().to_string())
    }
}

fn pred_from_json(v: &Value, arity: usize, b: usize) -> Result<Predicate> {
    match v {
        Value::String(s) => {
            let kind = PredKind::parse(s)?;
            if kind == PredKind::Table {
                return Err(Error::Parse("TABLE predicate needs an object with a table".into()));
            }
            Ok(Predicate::new(kind, arity))
        }
        Value::Object(o) => {
            let kind = PredKind::parse(o.get("kind").and_then(Value::as_str).unwrap_or("TABLE"))?;
            if kind != PredKind::Table {
                return Ok(Predicate::new(kind, arity));
            }
            let rows = o.get("table").and_then(Value::as_array).ok_or_else(|| Error::Parse("missing table".into()))?;
            let mut set = BTreeSet::new();
            for r in rows {
                let r = r.as_array().ok_or_else(|| Error::Parse("table row must be an array".into()))?;
                let t = r
                    .iter()
                    .map(|s| parse_bitstring(s.as_str().ok_or_else(|| Error::Parse("table entry must be a string".into()))?, b))
                    .collect::<Result<Vec<_>>>()?;
                set.insert(t);
            }
            Predicate::table(arity, b, set)
        }
        _ => Err(Error::Parse("predicate must be a string or an object".into())),
    }
}

pub fn to_json(inst: &Instance) -> String {
    let j = match inst {
        Instance::Fkf(f) => InstanceJson {
            kind: "fkf".into(),
            k: f.k,
            n: f.n,
            g: f.g,
            b: f.b,
            predicate: pred_to_json(&f.predicate, f.b),
            lists: Some(f.lists.iter().map(|l| l.iter().map(vec_to_json).collect()).collect()),
            edges: None,
        },
        Instance::Ffkc(f) => {
            let mut edges = Vec::new();
            for (q, (i, j)) in crate::factored::canonical_pairs(f.k).into_iter().enumerate() {
                for (e, lab) in f.edges[q].iter().enumerate() {
                    if let Some(l) = lab {
                        edges.push(EdgeJson { u: [i, e / f.n], v: [j, e % f.n], label: vec_to_json(l) });
                    }
                }
            }
            InstanceJson {
                kind: "ffkc".into(),
                k: f.k,
                n: f.n,
                g: f.g,
                b: f.b,
                predicate: pred_to_json(&f.predicate, f.b),
                lists: None,
                edges: Some(edges),
            }
        }
    };
    serde_json::to_string_pretty(&j).expect("serializable")
}

pub fn from_json(s: &str) -> Result<Instance> {
    let j: InstanceJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    match j.kind.as_str() {
        "fkf" => {
            let pred = pred_from_json(&j.predicate, j.k, j.b)?;
            let lists = j.lists.ok_or_else(|| Error::Parse("fkf instance needs lists".into()))?;
            if lists.len() != j.k {
                return Err(Error::ArityMismatch { expected: j.k, got: lists.len() });
            }
            let lists = lists
                .iter()
                .map(|l| l.iter().map(|v| vec_from_json(v, j.g, j.b)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            if lists.iter().any(|l| l.len() != j.n) {
                return Err(Error::Parse(format!("every list must hold n={} vectors", j.n)));
            }
            Ok(Instance::Fkf(FkfInstance::new(lists, j.g, j.b, pred)?))
        }
        "ffkc" => {
            let ell = j.k * j.k.saturating_sub(1) / 2;
            let pred = pred_from_json(&j.predicate, ell, j.b)?;
            let mut inst = FfkcInstance::empty(j.k, j.n, j.g, j.b, pred)?;
            for e in j.edges.unwrap_or_default() {
                if e.u[0] >= j.k || e.v[0] >= j.k || e.u[1] >= j.n || e.v[1] >= j.n {
                    return Err(Error::Parse("edge endpoint out of range".into()));
                }
                inst.set_edge(e.u[0], e.u[1], e.v[0], e.v[1], Some(vec_from_json(&e.label, j.g, j.b)?))?;
            }
            Ok(Instance::Ffkc(inst))
        }
        other => Err(Error::Parse(format!("unknown instance kind '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factored::{gen_ffkc, gen_fkf, worked_example};

    #[test]
    fn round_trips() {
        let f = gen_fkf(2, 3, 2, 2, 0.5, 1, Predicate::xor(3)).unwrap();
        assert_eq!(from_json(&to_json(&Instance::Fkf(f.clone()))).unwrap(), Instance::Fkf(f));
        let mut c = gen_ffkc(2, 3, 1, 2, 0.5, 2, Predicate::sum_zero(3)).unwrap();
        c.edges[0][1] = None;
        assert_eq!(from_json(&to_json(&Instance::Ffkc(c.clone()))).unwrap(), Instance::Ffkc(c));
    }

    #[test]
    fn paper_pair_text() {
        let (u, v, _) = worked_example();
        let inst = FkfInstance::new(vec![vec![u], vec![v]], 2, 3, Predicate::ov(2)).unwrap();
        let s = to_json(&Instance::Fkf(inst));
        assert!(s.contains("\"001\""));
        assert!(s.contains("\"110\""));
    }

    #[test]
    fn table_predicate() {
        let s = r#"{"kind":"fkf","k":2,"n":1,"g":1,"b":1,
            "predicate":{"kind":"TABLE","table":[["0","1"]]},
            "lists":[[[["0","1"]]],[[["1"]]]]}"#;
        let Instance::Fkf(f) = from_json(s).unwrap() else { panic!() };
        assert_eq!(crate::factored::count_fkf(&f).unwrap(), 1u32.into());
    }
}
