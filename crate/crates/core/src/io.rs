//! JSON documents and mesh export.
//!
//! Every document carries `"schema": "filmlab/1"` and a `"kind"`. Rationals
//! are strings such as `"3/4"` so no value passes through floating point.
//! OFF and OBJ exports are decimal and meant for viewing only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::dipoly::{Chain, Dipolyhedron};
use crate::error::{FilmError, Result};
use crate::grid::{Axes, BoxRegion, GridCell, GridChain, GridSpec};
use crate::measure::{default_width, Measure};
use crate::rational::{parse_rational, to_f64, Point, Rational};
use crate::simplicial::{AffineMap, PLMap, Simplex, SimplicialChain};

pub const SCHEMA: &str = "filmlab/1";

fn schema_err(path: &str, message: impl Into<String>) -> FilmError {
    FilmError::Schema { path: path.to_string(), message: message.into() }
}

fn field<'v>(v: &'v Value, path: &str, key: &str) -> Result<&'v Value> {
    v.as_object()
        .ok_or_else(|| schema_err(path, "expected an object"))?
        .get(key)
        .ok_or_else(|| schema_err(&format!("{path}.{key}"), "missing field"))
}

fn array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
    v.as_array().ok_or_else(|| schema_err(path, "expected an array"))
}

fn uint(v: &Value, path: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| schema_err(path, "expected a nonnegative integer"))
}

fn int(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| schema_err(path, "expected an integer"))
}

fn kind<'v>(v: &'v Value, path: &str) -> Result<&'v str> {
    field(v, path, "kind")?.as_str().ok_or_else(|| schema_err(&format!("{path}.kind"), "expected a string"))
}

/// Accepts `"p/q"`, `"p"`, decimal strings, and JSON integers.
pub fn rational_from_json(v: &Value, path: &str) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|e| schema_err(path, e.to_string())),
        Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().expect("i64").into())),
        _ => Err(schema_err(path, "expected a rational string such as \"3/4\"")),
    }
}

pub fn rational_to_json(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn point_from_json(v: &Value, path: &str) -> Result<Point> {
    let a = array(v, path)?;
    if a.len() != 3 {
        return Err(schema_err(path, format!("expected 3 coordinates, got {}", a.len())));
    }
    Ok([
        rational_from_json(&a[0], &format!("{path}[0]"))?,
        rational_from_json(&a[1], &format!("{path}[1]"))?,
        rational_from_json(&a[2], &format!("{path}[2]"))?,
    ])
}

pub fn point_to_json(p: &Point) -> Value {
    Value::Array(p.iter().map(rational_to_json).collect())
}

fn ints3(v: &Value, path: &str) -> Result<[i64; 3]> {
    let a = array(v, path)?;
    if a.len() != 3 {
        return Err(schema_err(path, "expected 3 integers"));
    }
    Ok([int(&a[0], &format!("{path}[0]"))?, int(&a[1], &format!("{path}[1]"))?, int(&a[2], &format!("{path}[2]"))?])
}

pub fn grid_from_json(v: &Value, path: &str) -> Result<GridSpec> {
    let eps = rational_from_json(field(v, path, "epsilon")?, &format!("{path}.epsilon"))?;
    let origin = match v.get("origin") {
        Some(o) => point_from_json(o, &format!("{path}.origin"))?,
        None => crate::rational::zero_point(),
    };
    let dp = format!("{path}.dims");
    let d = array(field(v, path, "dims")?, &dp)?;
    if d.len() != 3 {
        return Err(schema_err(&dp, "expected 3 dimensions"));
    }
    let mut dims = [0u32; 3];
    for (i, x) in d.iter().enumerate() {
        let n = uint(x, &format!("{dp}[{i}]"))?;
        dims[i] = u32::try_from(n).map_err(|_| schema_err(&format!("{dp}[{i}]"), "too large"))?;
    }
    GridSpec::new(eps, origin, dims)
}

pub fn grid_to_json(g: &GridSpec) -> Value {
    json!({ "epsilon": rational_to_json(&g.epsilon), "origin": point_to_json(&g.origin), "dims": g.dims })
}

pub fn axes_letters(a: Axes) -> String {
    a.iter().map(|i| ['x', 'y', 'z'][i]).collect()
}

pub fn box_from_json(v: &Value, path: &str) -> Result<BoxRegion> {
    let lo = point_from_json(field(v, path, "lo")?, &format!("{path}.lo"))?;
    let hi = point_from_json(field(v, path, "hi")?, &format!("{path}.hi"))?;
    BoxRegion::new(lo, hi)
}

pub fn box_to_json(b: &BoxRegion) -> Value {
    json!({ "lo": point_to_json(&b.lo), "hi": point_to_json(&b.hi) })
}

/// A chain object without the schema header.
pub fn chain_from_json(v: &Value, path: &str) -> Result<Chain> {
    let k = uint(field(v, path, "k")?, &format!("{path}.k"))? as usize;
    match kind(v, path)? {
        "grid_chain" => {
            let grid = grid_from_json(field(v, path, "grid")?, &format!("{path}.grid"))?;
            let cp = format!("{path}.cells");
            let mut cells = Vec::new();
            for (i, c) in array(field(v, path, "cells")?, &cp)?.iter().enumerate() {
                let p = format!("{cp}[{i}]");
                let base = ints3(field(c, &p, "base")?, &format!("{p}.base"))?;
                let ax = field(c, &p, "axes")?.as_str().ok_or_else(|| schema_err(&format!("{p}.axes"), "expected a string"))?;
                let axes = Axes::parse(ax).map_err(|e| schema_err(&format!("{p}.axes"), e.to_string()))?;
                cells.push(GridCell::new(base, axes));
            }
            Ok(Chain::Grid(GridChain::new(grid, k, cells)?))
        }
        "simplicial_chain" => {
            let sp = format!("{path}.simplices");
            let mut out = Vec::new();
            for (i, s) in array(field(v, path, "simplices")?, &sp)?.iter().enumerate() {
                let p = format!("{sp}[{i}]");
                let verts = array(s, &p)?
                    .iter()
                    .enumerate()
                    .map(|(j, x)| point_from_json(x, &format!("{p}[{j}]")))
                    .collect::<Result<Vec<_>>>()?;
                if verts.len() != k + 1 {
                    return Err(schema_err(&p, format!("a {k}-simplex needs {} vertices", k + 1)));
                }
                out.push(Simplex::new(verts));
            }
            Ok(Chain::Simplicial(SimplicialChain::new(k, out)?))
        }
        other => Err(schema_err(&format!("{path}.kind"), format!("unknown chain kind {other:?}"))),
    }
}

pub fn chain_to_json(c: &Chain) -> Value {
    match c {
        Chain::Grid(g) => {
            let cells: Vec<Value> =
                g.cells().iter().map(|c| json!({ "base": c.base, "axes": axes_letters(c.axes) })).collect();
            json!({ "kind": "grid_chain", "k": g.k(), "grid": grid_to_json(g.grid()), "cells": cells })
        }
        Chain::Simplicial(s) => {
            let simplices: Vec<Value> =
                s.iter().map(|t| Value::Array(t.vertices().iter().map(point_to_json).collect())).collect();
            json!({ "kind": "simplicial_chain", "k": s.k(), "simplices": simplices })
        }
    }
}

pub fn dipoly_from_json(v: &Value, path: &str) -> Result<Dipolyhedron> {
    let b = chain_from_json(field(v, path, "b")?, &format!("{path}.b"))?;
    let c = chain_from_json(field(v, path, "c")?, &format!("{path}.c"))?;
    Dipolyhedron::new(b, c)
}

pub fn dipoly_to_json(a: &Dipolyhedron) -> Value {
    json!({ "kind": "dipolyhedron", "k": a.k(), "b": chain_to_json(a.b()), "c": chain_to_json(a.c()) })
}

pub fn map_from_json(v: &Value, path: &str) -> Result<PLMap> {
    match kind(v, path)? {
        "affine" => {
            let mp = format!("{path}.matrix");
            let rows = array(field(v, path, "matrix")?, &mp)?;
            if rows.len() != 3 {
                return Err(schema_err(&mp, "expected 3 rows"));
            }
            let mut m: [[Rational; 3]; 3] = Default::default();
            for (i, r) in rows.iter().enumerate() {
                m[i] = point_from_json(r, &format!("{mp}[{i}]"))?;
            }
            let t = match v.get("translation") {
                Some(t) => point_from_json(t, &format!("{path}.translation"))?,
                None => crate::rational::zero_point(),
            };
            let map = AffineMap::new(m, t);
            let lip = match v.get("lip") {
                Some(l) => rational_from_json(l, &format!("{path}.lip"))?,
                None => {
                    let n = map.operator_norm();
                    crate::rational::exact_sqrt(&n.sq_hi).unwrap_or_else(|| Measure::sqrt(&n.sq_hi).enclosure(&default_width()).1)
                }
            };
            Ok(PLMap::affine(map, lip))
        }
        "table" => {
            let lip = rational_from_json(field(v, path, "lip")?, &format!("{path}.lip"))?;
            let ep = format!("{path}.entries");
            let mut table = BTreeMap::new();
            for (i, e) in array(field(v, path, "entries")?, &ep)?.iter().enumerate() {
                let p = format!("{ep}[{i}]");
                let pair = array(e, &p)?;
                if pair.len() != 2 {
                    return Err(schema_err(&p, "expected [from, to]"));
                }
                table.insert(point_from_json(&pair[0], &format!("{p}[0]"))?, point_from_json(&pair[1], &format!("{p}[1]"))?);
            }
            Ok(PLMap::Table { table, lip })
        }
        other => Err(schema_err(&format!("{path}.kind"), format!("unknown map kind {other:?}"))),
    }
}

/// Exact value when rational, otherwise the radical form with an enclosure.
pub fn measure_to_json(m: &Measure) -> Value {
    match m.as_rational() {
        Some(r) => rational_to_json(&r),
        None => {
            let (lo, hi) = m.enclosure(&default_width());
            json!({ "exact": m.to_string(), "enclosure": [rational_to_json(&lo), rational_to_json(&hi)] })
        }
    }
}

/// A top-level document: a chain, a dipolyhedron, a map or a region.
#[derive(Clone, Debug)]
pub enum Document {
    Chain(Chain),
    Dipoly(Dipolyhedron),
    Map(PLMap),
    Region(BoxRegion),
}

pub fn parse_document(text: &str) -> Result<Document> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema_err("$", format!("malformed JSON: {e}")))?;
    match v.get("schema").and_then(Value::as_str) {
        Some(SCHEMA) => {}
        Some(s) => return Err(schema_err("$.schema", format!("unsupported schema {s:?}"))),
        None => return Err(schema_err("$.schema", "missing field")),
    }
    match kind(&v, "$")? {
        "grid_chain" | "simplicial_chain" => Ok(Document::Chain(chain_from_json(&v, "$")?)),
        "dipolyhedron" => Ok(Document::Dipoly(dipoly_from_json(&v, "$")?)),
        "affine" | "table" => Ok(Document::Map(map_from_json(&v, "$")?)),
        "box" => Ok(Document::Region(box_from_json(&v, "$")?)),
        other => Err(schema_err("$.kind", format!("unknown document kind {other:?}"))),
    }
}

/// Wraps a value as a top-level document.
pub fn with_schema(v: Value) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), Value::String(SCHEMA.into()));
    if let Value::Object(o) = v {
        m.extend(o);
    }
    Value::Object(m)
}

pub fn chain_document(c: &Chain) -> String {
    to_pretty(&with_schema(chain_to_json(c)))
}

pub fn dipoly_document(a: &Dipolyhedron) -> String {
    to_pretty(&with_schema(dipoly_to_json(a)))
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn dec(r: &Rational) -> String {
    format!("{:.12}", to_f64(r))
}

fn vertex_index(pts: &mut Vec<Point>, idx: &mut BTreeMap<Point, usize>, p: &Point) -> usize {
    *idx.entry(p.clone()).or_insert_with(|| {
        pts.push(p.clone());
        pts.len() - 1
    })
}

/// OFF mesh of a 2-chain; grid faces are written as quads.
pub fn to_off(c: &Chain) -> Result<String> {
    if c.k() != 2 {
        return Err(FilmError::Dimension(format!("OFF export needs a 2-chain, got k = {}", c.k())));
    }
    let mut pts = Vec::new();
    let mut idx = BTreeMap::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    match c {
        Chain::Grid(g) => {
            for cell in g.cells() {
                let cs: Vec<Point> = cell.corners().into_iter().map(|x| g.grid().lattice_point(x)).collect();
                // Corners come in bitmask order 00, 10, 01, 11.
                faces.push([0, 1, 3, 2].iter().map(|i| vertex_index(&mut pts, &mut idx, &cs[*i])).collect());
            }
        }
        Chain::Simplicial(s) => {
            for t in s.iter() {
                faces.push(t.vertices().iter().map(|v| vertex_index(&mut pts, &mut idx, v)).collect());
            }
        }
    }
    let mut out = String::from("OFF\n# decimal export, for viewing only\n");
    let _ = writeln!(out, "{} {} 0", pts.len(), faces.len());
    for p in &pts {
        let _ = writeln!(out, "{} {} {}", dec(&p[0]), dec(&p[1]), dec(&p[2]));
    }
    for f in &faces {
        let ids: Vec<String> = f.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{} {}", f.len(), ids.join(" "));
    }
    Ok(out)
}

/// OBJ polylines of named 1-chains, one object per chain.
pub fn to_obj(curves: &[(&str, &Chain)]) -> Result<String> {
    let mut out = String::from("# decimal export, for viewing only\n");
    let mut pts = Vec::new();
    let mut idx = BTreeMap::new();
    let mut objects = Vec::new();
    for (name, c) in curves {
        if c.k() != 1 {
            return Err(FilmError::Dimension(format!("OBJ polylines need 1-chains, got k = {}", c.k())));
        }
        let lines: Vec<(usize, usize)> = c
            .to_simplicial()
            .iter()
            .map(|s| (vertex_index(&mut pts, &mut idx, &s.vertices()[0]), vertex_index(&mut pts, &mut idx, &s.vertices()[1])))
            .collect();
        objects.push((name, lines));
    }
    for p in &pts {
        let _ = writeln!(out, "v {} {} {}", dec(&p[0]), dec(&p[1]), dec(&p[2]));
    }
    for (name, lines) in objects {
        let _ = writeln!(out, "o {name}");
        for (a, b) in lines {
            let _ = writeln!(out, "l {} {}", a + 1, b + 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{pt, q, qf};

    #[test]
    fn chain_round_trip() {
        let g = GridSpec::new(qf(1, 2), pt(0, 0, 0), [2, 1, 1]).unwrap();
        let c = Chain::Grid(GridChain::new(g, 2, [GridCell::new([1, 0, 0], Axes::XZ)]).unwrap());
        let back = parse_document(&chain_document(&c)).unwrap();
        assert!(matches!(back, Document::Chain(ref d) if *d == c));

        let s = Chain::Simplicial(SimplicialChain::new(1, [Simplex::segment(pt(0, 0, 0), [qf(1, 3), q(0), q(2)])]).unwrap());
        let text = chain_document(&s);
        assert!(text.contains("\"1/3\""));
        assert!(matches!(parse_document(&text).unwrap(), Document::Chain(d) if d == s));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let text = r#"{"schema":"filmlab/1","kind":"grid_chain","k":2,"grid":{"epsilon":"1","dims":[1,1,1]},
            "cells":[{"base":[0,0,0],"axes":"xy"},{"base":[0,0],"axes":"xy"}]}"#;
        match parse_document(text) {
            Err(FilmError::Schema { path, .. }) => assert_eq!(path, "$.cells[1].base"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_document("{"), Err(FilmError::Schema { .. })));
        assert!(matches!(parse_document(r#"{"kind":"box"}"#), Err(FilmError::Schema { .. })));
    }

    #[test]
    fn irrational_measures_come_with_enclosures() {
        let m = Measure::sqrt(&q(2));
        let v = measure_to_json(&m);
        assert!(v.get("enclosure").is_some());
        assert_eq!(measure_to_json(&Measure::from_int(3)), json!("3"));
    }

    #[test]
    fn off_of_a_grid_face() {
        let g = GridSpec::unit([1, 1, 1]);
        let c = Chain::Grid(GridChain::new(g, 2, [GridCell::new([0, 0, 0], Axes::XY)]).unwrap());
        let off = to_off(&c).unwrap();
        assert!(off.starts_with("OFF\n"));
        assert!(off.contains("4 1 0"));
        let lines: Vec<&str> = off.lines().collect();
        // Vertices are listed around the quad, so (1,1,0) comes third.
        assert_eq!(lines[5], "1.000000000000 1.000000000000 0.000000000000");
        assert_eq!(lines[7], "4 0 1 2 3");
    }
}
