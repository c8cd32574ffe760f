use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_filmlab"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("filmlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn flatnorm_of_the_square_is_one() {
    let sq = fixture("square.json");
    for m in ["exhaustive", "bnb"] {
        let v = json(&run(&["flatnorm", sq.to_str().unwrap(), "--method", m]));
        assert_eq!(v["schema"], "filmlab/1");
        assert_eq!(v["result"]["value"], "1");
        assert_eq!(v["result"]["status"], "exact");
        assert_eq!(v["result"]["verified"], true);
    }
}

#[test]
fn mass_of_the_empty_chain_is_zero() {
    let d = scratch("empty");
    let p = d.join("empty.json");
    fs::write(&p, r#"{"schema":"filmlab/1","kind":"simplicial_chain","k":1,"simplices":[]}"#).unwrap();
    let v = json(&run(&["mass", p.to_str().unwrap()]));
    assert_eq!(v["mass"], "0");
}

#[test]
fn plateau_on_the_patch() {
    let d = scratch("plateau");
    let curve = fixture("patch2x2.json");
    let v = json(&run(&[
        "plateau",
        "--curve",
        curve.to_str().unwrap(),
        "--method",
        "exhaustive",
        "--mesh-dir",
        d.to_str().unwrap(),
        "--require-exact",
    ]));
    assert_eq!(v["solution"]["w"], "4");
    assert_eq!(v["solution"]["status"], "exact");
    assert_eq!(v["solution"]["membership"]["member"], true);
    assert_eq!(v["cone_start"]["energy"], "4");
    let off = fs::read_to_string(d.join("b.off")).unwrap();
    let header: Vec<&str> = off.lines().nth(2).unwrap().split_whitespace().collect();
    assert_eq!(header[1], "4");
    assert!(fs::read_to_string(d.join("curves.obj")).unwrap().contains("o gamma"));
}

#[test]
fn outputs_are_deterministic() {
    let curve = fixture("square.json");
    let args = ["plateau", "--curve", curve.to_str().unwrap()];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_input_exits_with_two() {
    let d = scratch("bad");
    let p = d.join("bad.json");
    fs::write(&p, r#"{"schema":"filmlab/1","kind":"grid_chain","k":1,"grid":{"epsilon":"1","dims":[1,1]},"cells":[]}"#)
        .unwrap();
    let out = run(&["mass", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("$.grid.dims"));

    fs::write(&p, "{ not json").unwrap();
    assert_eq!(run(&["mass", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn flatnorm_needs_a_grid_chain() {
    let out = run(&["flatnorm", fixture("tilted_triangle.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_exhaustion_exits_with_three_when_exact_is_required() {
    let sq = fixture("patch2x2.json");
    let out = run(&["flatnorm", sq.to_str().unwrap(), "--budget", "1", "--require-exact"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["status"], "upper-bound");
    assert!(run(&["flatnorm", sq.to_str().unwrap(), "--budget", "1"]).status.success());
}

#[test]
fn cone_spans_the_square() {
    let v = json(&run(&[
        "span-check",
        fixture("cone.json").to_str().unwrap(),
        "--curve",
        fixture("square.json").to_str().unwrap(),
    ]));
    assert_eq!(v["result"]["verdict"], "spans");
    let v = json(&run(&["cone", fixture("square.json").to_str().unwrap(), "--apex", "0,0,1"]));
    assert_eq!(v["identity_holds"], true);
}

#[test]
fn boundary_of_boundary_is_empty() {
    let d = scratch("bd");
    let once = run(&["boundary", fixture("tilted_triangle.json").to_str().unwrap()]);
    assert!(once.status.success());
    let p = d.join("b.json");
    fs::write(&p, &once.stdout).unwrap();
    let v = json(&run(&["boundary", p.to_str().unwrap()]));
    assert_eq!(v["simplices"].as_array().unwrap().len(), 0);
}

#[test]
fn deform_the_tilted_triangle() {
    let d = scratch("deform");
    let v = json(&run(&[
        "deform",
        fixture("tilted_triangle.json").to_str().unwrap(),
        "--eps",
        "1/2",
        "--mesh-dir",
        d.to_str().unwrap(),
    ]));
    assert_eq!(v["result"]["identity_verified"], true);
    assert_eq!(v["result"]["skeleton_verified"], true);
    assert_eq!(v["constants_within_cmax"], true);
    assert!(d.join("p.off").exists());
    assert!(d.join("q.off").exists());
}

#[test]
fn restrict_and_natural_norm() {
    let d = scratch("restrict");
    let region = d.join("box.json");
    fs::write(&region, r#"{"schema":"filmlab/1","kind":"box","lo":["-1","-1","0"],"hi":["0","1","1"]}"#).unwrap();
    let curve = fixture("patch2x2.json");
    let v = json(&run(&["restrict", curve.to_str().unwrap(), "--region", region.to_str().unwrap()]));
    assert_eq!(v["measures"]["omega"], "4");

    let v = json(&run(&["natural-norm", curve.to_str().unwrap(), "--r", "0"]));
    assert_eq!(v["result"]["value"], "8");
    assert_eq!(v["result"]["verified"], true);
}

#[test]
fn diagnostics_of_a_mass_film() {
    let d = scratch("diag");
    let p = d.join("m.json");
    let curve: Value = serde_json::from_str(&fs::read_to_string(fixture("square.json")).unwrap()).unwrap();
    let mut doc = serde_json::json!({
        "schema": "filmlab/1",
        "kind": "dipolyhedron",
        "k": 2,
        "b": { "kind": "grid_chain", "k": 2, "grid": curve["grid"].clone(), "cells": [] },
        "c": curve.clone(),
    });
    doc["c"].as_object_mut().unwrap().remove("schema");
    fs::write(&p, doc.to_string()).unwrap();
    let v = json(&run(&["diagnostics", p.to_str().unwrap()]));
    assert_eq!(v["result"]["loop_count"], 1);
    assert_eq!(v["result"]["total_length"], "4");
    assert_eq!(v["result"]["film_curves"], true);
}
