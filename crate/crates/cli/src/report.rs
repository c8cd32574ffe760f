//! JSON renderings of solver results.

use filmlab::deform::{Constants, DeformationResult, SupportReport};
use filmlab::dipoly::{Chain, Energy, MeasureReport};
use filmlab::flatnorm::{EnergyFlatCertificate, FlatNormCertificate, Status};
use filmlab::io::{box_to_json, chain_to_json, dipoly_to_json, measure_to_json, point_to_json, rational_to_json};
use filmlab::natural::MulticellDecomposition;
use filmlab::plateau::{ClampReport, ConeStart, Diagnostics, MembershipReport, PlateauSolution};
use filmlab::spanning::{SpanningReport, Verdict};
use serde_json::{json, Value};

pub fn status(s: Status) -> &'static str {
    match s {
        Status::Exact => "exact",
        Status::UpperBound => "upper-bound",
    }
}

pub fn energy(e: &Energy) -> Value {
    json!({ "e": measure_to_json(&e.e), "w": measure_to_json(&e.w), "mass_part": measure_to_json(&e.mass_part) })
}

pub fn flat(c: &FlatNormCertificate, verified: bool) -> Value {
    json!({
        "value": rational_to_json(&c.value),
        "status": status(c.status),
        "verified": verified,
        "q": chain_to_json(&Chain::Grid(c.q.clone())),
        "r": chain_to_json(&Chain::Grid(c.r.clone())),
    })
}

pub fn energy_flat(c: &EnergyFlatCertificate, verified: bool) -> Value {
    json!({
        "value": rational_to_json(&c.value),
        "status": status(c.status),
        "verified": verified,
        "b_q": chain_to_json(&Chain::Grid(c.b_q.clone())),
        "c_q": chain_to_json(&Chain::Grid(c.c_q.clone())),
        "b_r": chain_to_json(&Chain::Grid(c.b_r.clone())),
        "c_r": chain_to_json(&Chain::Grid(c.c_r.clone())),
    })
}

pub fn measures(m: &MeasureReport) -> Value {
    json!({
        "region": box_to_json(&m.region),
        "omega": measure_to_json(&m.omega),
        "mu": measure_to_json(&m.mu),
        "nu": measure_to_json(&m.nu),
    })
}

pub fn natural(d: &MulticellDecomposition, verified: bool) -> Value {
    let pieces: Vec<Value> = d
        .pieces
        .iter()
        .map(|m| json!({ "base": m.base.base, "axes": filmlab::io::axes_letters(m.base.axes), "vectors": m.vectors }))
        .collect();
    json!({
        "r": d.r,
        "value": measure_to_json(&d.cost),
        "verified": verified,
        "pieces": pieces,
        "c": chain_to_json(&Chain::Grid(d.c.clone())),
        "c_cost": measure_to_json(&d.c_cost),
    })
}

fn constants(c: &Constants) -> Value {
    json!({ "c_p": c.c_p, "c_dp": c.c_dp, "c_q": c.c_q, "c_r": c.c_r })
}

fn support(s: &SupportReport) -> Value {
    json!({ "pr_from_a": s.pr_from_a, "dpq_from_da": s.dpq_from_da, "within_six_eps": s.within_six_eps })
}

pub fn deformation(d: &DeformationResult) -> Value {
    json!({
        "p": chain_to_json(&Chain::Grid(d.p.clone())),
        "q": chain_to_json(&Chain::Simplicial(d.q.clone())),
        "r": chain_to_json(&Chain::Simplicial(d.r.clone())),
        "constants": constants(&d.constants),
        "support": support(&d.support),
        "fallback_cells": d.fallbacks.len(),
        "identity_verified": d.identity_verified,
        "skeleton_verified": d.skeleton_verified,
    })
}

pub fn spanning(r: &SpanningReport) -> Value {
    let verdict = match r.verdict {
        Verdict::Spans => "spans",
        Verdict::DoesNotSpan => "does-not-span",
        Verdict::Vacuous => "vacuous",
    };
    let dirs: Vec<Value> = r
        .directions
        .iter()
        .map(|d| {
            json!({
                "direction": point_to_json(&d.direction),
                "admissible": d.admissible,
                "reason": d.reason,
                "matches": d.matches,
                "enclosed_area": d.enclosed_area.as_ref().map(measure_to_json),
            })
        })
        .collect();
    json!({ "verdict": verdict, "boundary_ok": r.boundary_ok, "directions": dirs })
}

pub fn membership(m: &MembershipReport) -> Value {
    json!({
        "member": m.is_member(),
        "boundary_ok": m.boundary_ok(),
        "energy": measure_to_json(&m.energy),
        "within_budget": m.within_budget,
        "support_ok": m.support_ok,
        "spanning": spanning(&m.spanning),
    })
}

pub fn cone_start(s: &ConeStart) -> Value {
    json!({
        "energy": measure_to_json(&s.energy),
        "boundary_ok": s.boundary_ok,
        "spans": s.spanning.spans(),
        "grid_start_faces": s.grid_start.as_ref().and_then(|d| d.b().as_grid().map(|g| g.len())),
        "note": s.note,
    })
}

pub fn plateau(s: &PlateauSolution) -> Value {
    json!({
        "a": dipoly_to_json(&s.a),
        "w": measure_to_json(&s.w),
        "e": measure_to_json(&s.e),
        "status": status(s.status),
        "lower_bound": measure_to_json(&s.lower_bound),
        "explored": s.explored,
        "membership": membership(&s.membership),
    })
}

pub fn clamp(r: &ClampReport) -> Value {
    json!({
        "changed": r.changed,
        "w_before": measure_to_json(&r.w_before),
        "w_after": measure_to_json(&r.w_after),
        "e_before": measure_to_json(&r.e_before),
        "e_after": measure_to_json(&r.e_after),
        "non_increasing": r.non_increasing,
        "spanning_preserved": r.spanning_preserved,
    })
}

pub fn diagnostics(d: &Diagnostics) -> Value {
    let loops: Vec<Value> = d
        .loops
        .iter()
        .zip(&d.loop_lengths)
        .map(|(l, len)| json!({ "vertices": l.iter().map(point_to_json).collect::<Vec<_>>(), "length": measure_to_json(len) }))
        .collect();
    json!({
        "loop_count": d.loops.len(),
        "total_length": measure_to_json(&d.total_length),
        "loops": loops,
        "components": d.components,
        "film_curves": d.film_curves,
    })
}
