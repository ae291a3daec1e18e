use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::config::*;
use super::Output;
use crate::coupling::{bound_trials, log_linear_slope, SlabCoupler, SlabCouplerOptions, Tally};
use crate::error::{Error, Result};
use crate::exact::{contract_expectation, exact_expectations, exact_gibbs, EdgeFactor, EnumeratedSpace};
use crate::groups::{acts_nontrivially_on_center, dispatch, Circle, Cyclic, GaugeGroup, GroupSpec, RepLabel, Representation};
use crate::lattice::{EdgeId, LatticeGeometry, Loop};
use crate::model::{
    collect_series, estimate_many, estimates_from_series, gradient_identity_check, BoundaryCondition, GaugeConfig,
    GradientProblem,
};
use crate::observables::{
    center_transform, chain_variable, correlation_decay, exact_correlation, max_link_norm_exhaustive, potential_extract, wilson_loop,
    ChainVariable, CorrelationRequest, CorrelationSeries, WilsonCell,
};
use crate::rng::substream;

/// Random streams outside the range used by sampler chains.
const BOUNDARY_STREAM: u64 = 1 << 40;
const INVARIANCE_STREAM: u64 = 1 << 41;
const GRADIENT_STREAM: u64 = 1 << 42;

pub(super) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn section<'a, T>(s: &'a Option<T>, key: &str) -> Result<&'a T> {
    s.as_ref().ok_or_else(|| Error::config(key, "section is required by this subcommand"))
}

fn rep(group: GroupSpec, s: &str, key: &str) -> Result<Representation> {
    Representation::parse(group, s).map_err(|e| Error::config(key, e.to_string()))
}

fn cyclic(cfg: &RunConfig, what: &str) -> Result<Cyclic> {
    match cfg.group {
        GroupSpec::Cyclic(n) => Ok(Cyclic::new(n)),
        g => Err(Error::config("group", format!("{what} needs a cyclic group, got {g}"))),
    }
}

fn boundary<G: GaugeGroup>(
    spec: &BoundarySpec,
    geom: &LatticeGeometry,
    group: &G,
    seed: u64,
    key: &str,
) -> Result<BoundaryCondition<G::Elem>> {
    let base = match spec.mode {
        BoundaryMode::Free => BoundaryCondition::Free,
        BoundaryMode::Identity => BoundaryCondition::identity(geom, group),
        BoundaryMode::Haar => {
            BoundaryCondition::haar(geom, group, &mut substream(seed, BOUNDARY_STREAM + spec.stream))
        }
    };
    match spec.twist {
        None => Ok(base),
        Some(k) => {
            let center = group.center();
            let g0 = *center
                .get(k)
                .ok_or_else(|| Error::config(format!("{key}.twist"), format!("center has {} elements", center.len())))?;
            base.center_twisted(geom, group, g0).map_err(|e| Error::config(format!("{key}.twist"), e.to_string()))
        }
    }
}

fn resolve_loops(geom: &LatticeGeometry, specs: &[LoopSpec], key: &str) -> Result<Vec<(String, Loop)>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let anchor = s.anchor.clone().unwrap_or_else(|| geom.lo().to_vec());
            let l = geom
                .rect_loop(&anchor, (s.plane[0], s.plane[1]), s.r, s.t)
                .map_err(|e| Error::config(format!("{key}[{i}]"), e.to_string()))?;
            Ok((s.label(), l))
        })
        .collect()
}

/// Per-residue values of a character along a directed path.
fn path_factors(group: &Cyclic, path: impl Iterator<Item = (EdgeId, bool)>, r: &Representation) -> Vec<EdgeFactor> {
    let RepLabel::Character(c) = r.label else { unreachable!("cyclic representations are characters") };
    path.map(|(edge, forward)| EdgeFactor {
        edge,
        values: (0..group.order() as u64)
            .map(|k| {
                let z = group.root(c as u64 * k);
                if forward {
                    z
                } else {
                    z.conj()
                }
            })
            .collect(),
    })
    .collect()
}

fn loop_factors(group: &Cyclic, l: &Loop, r: &Representation) -> Vec<EdgeFactor> {
    path_factors(group, l.edges.iter().map(|d| (d.edge, d.forward)), r)
}

/// Exact expectations of product observables, by enumeration or by
/// variable elimination. Returns the method actually used.
fn exact_products(
    geom: &Arc<LatticeGeometry>,
    group: &Cyclic,
    bc: &BoundaryCondition<u32>,
    beta: f64,
    method: ExactMethod,
    cap: u64,
    observables: &[Vec<EdgeFactor>],
) -> Result<(Vec<Complex64>, &'static str)> {
    let space = match method {
        ExactMethod::Contract => None,
        ExactMethod::Enumerate => Some(EnumeratedSpace::new(geom.clone(), group.clone(), bc, cap)?),
        ExactMethod::Auto => match EnumeratedSpace::new(geom.clone(), group.clone(), bc, cap) {
            Ok(s) => Some(s),
            Err(Error::CapExceeded { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    match space {
        Some(space) => {
            let gibbs = exact_gibbs(&space, beta)?;
            let vals = exact_expectations(&gibbs, |c| {
                observables.iter().map(|obs| obs.iter().map(|f| f.values[c.get(f.edge) as usize]).product()).collect()
            });
            Ok((vals, "enumerate"))
        }
        None => {
            let vals = observables
                .iter()
                .map(|obs| contract_expectation(geom, group, bc, beta, obs))
                .collect::<Result<Vec<_>>>()?;
            Ok((vals, "contract"))
        }
    }
}

fn initial<G: GaugeGroup>(geom: &Arc<LatticeGeometry>, group: G, bc: &BoundaryCondition<G::Elem>) -> GaugeConfig<G> {
    let mut c = GaugeConfig::identity(geom.clone(), group);
    c.apply_boundary(bc);
    c
}

fn estimate_json(name: &str, e: &crate::model::Estimate) -> Value {
    json!({
        "kind": "estimate",
        "observable": name,
        "re_mean": e.mean.re,
        "im_mean": e.mean.im,
        "stderr": e.stderr(),
        "stderr_re": e.stderr_re,
        "stderr_im": e.stderr_im,
        "tau_int": e.tau_int,
        "n_eff": e.n_eff,
        "n_samples": e.n_samples,
        "acceptance": e.acceptance,
    })
}

pub(super) fn simulate(cfg: &RunConfig, geom: &Arc<LatticeGeometry>) -> Result<Output> {
    let sec = section(&cfg.simulate, "simulate")?;
    let mut out = dispatch!(cfg.group, g => simulate_mc(cfg, sec, geom, g))?;
    if sec.compare_exact {
        let group = cyclic(cfg, "compare_exact")?;
        let r = rep(cfg.group, &sec.rep, "simulate.rep")?;
        let bc = boundary(&cfg.boundary, geom, &group, cfg.seed, "boundary")?;
        let loops = resolve_loops(geom, &sec.loops, "simulate.loops")?;
        let obs: Vec<Vec<EdgeFactor>> = loops.iter().map(|(_, l)| loop_factors(&group, l, &r)).collect();
        let (vals, _) = exact_products(geom, &group, &bc, cfg.beta, ExactMethod::Auto, cfg.cap(), &obs)?;
        for ((name, _), v) in loops.iter().zip(vals) {
            let rec = out
                .records
                .iter_mut()
                .find(|r| r["kind"] == "estimate" && r["observable"] == name.as_str())
                .expect("every loop has an estimate");
            let mean = rec["re_mean"].as_f64().unwrap_or(f64::NAN);
            let se = rec["stderr_re"].as_f64().unwrap_or(f64::NAN);
            rec["exact_re"] = json!(v.re);
            rec["exact_im"] = json!(v.im);
            rec["z"] = json!((mean - v.re) / se);
        }
    }
    Ok(out)
}

fn simulate_mc<G: GaugeGroup>(cfg: &RunConfig, sec: &SimulateSection, geom: &Arc<LatticeGeometry>, group: G) -> Result<Output> {
    let r = rep(cfg.group, &sec.rep, "simulate.rep")?;
    let loops = resolve_loops(geom, &sec.loops, "simulate.loops")?;
    let bc = boundary(&cfg.boundary, geom, &group, cfg.seed, "boundary")?;
    let start = initial(geom, group, &bc);
    let params = cfg.sampler_params();
    let n_plaq = geom.n_plaquettes().max(1) as f64;
    let runs = collect_series(&start, &bc, &params, cfg.sampler.chains, |c| {
        let mut v = Vec::with_capacity(2 * loops.len() + 2);
        for (_, l) in &loops {
            let w = wilson_loop(c, l, &r).expect("representation checked");
            v.push(w.re);
            v.push(w.im);
        }
        let m = c.group().matrix_dim() as f64;
        v.push((0..geom.n_plaquettes()).map(|p| c.plaquette_trace(p)).sum::<f64>() / (m * n_plaq));
        v.push(0.0);
        v
    })?;
    let est = estimates_from_series(&runs)?;
    let mut names: Vec<String> = loops.iter().map(|(n, _)| n.clone()).collect();
    names.push("plaquette_mean".into());

    let mut out = Output::new(&["observable", "R", "T", "re_mean", "im_mean", "stderr", "n_eff"]);
    if sec.series {
        for (ch, series) in runs.chains.iter().enumerate() {
            for (i, row) in series.iter().enumerate() {
                for (j, name) in names.iter().enumerate() {
                    out.records.push(json!({
                        "kind": "measurement",
                        "chain": ch,
                        "sweep": (i + 1) * params.stride,
                        "observable": name,
                        "value": [row[2 * j], row[2 * j + 1]],
                    }));
                }
            }
        }
    }
    let sides: Vec<(String, String)> = sec
        .loops
        .iter()
        .map(|l| (l.r.to_string(), l.t.to_string()))
        .chain(std::iter::once((String::new(), String::new())))
        .collect();
    for ((name, e), (rr, tt)) in names.iter().zip(&est).zip(sides) {
        out.records.push(estimate_json(name, e));
        out.rows.push(vec![name.clone(), rr, tt, num(e.mean.re), num(e.mean.im), num(e.stderr()), num(e.n_eff)]);
    }
    Ok(out)
}

pub(super) fn exact(cfg: &RunConfig, geom: &Arc<LatticeGeometry>) -> Result<Output> {
    let sec = section(&cfg.exact, "exact")?;
    let mut out = Output::new(&["observable", "R", "T", "re", "im"]);
    let mut golden = BTreeMap::new();
    let mut values = Vec::new();

    if !sec.loops.is_empty() {
        let group = cyclic(cfg, "exact loop evaluation")?;
        let r = rep(cfg.group, &sec.rep, "exact.rep")?;
        let bc = boundary(&cfg.boundary, geom, &group, cfg.seed, "boundary")?;
        let loops = resolve_loops(geom, &sec.loops, "exact.loops")?;
        let obs: Vec<Vec<EdgeFactor>> = loops.iter().map(|(_, l)| loop_factors(&group, l, &r)).collect();
        let (vals, method) = exact_products(geom, &group, &bc, cfg.beta, sec.method, cfg.cap(), &obs)?;
        for ((name, _), (spec, v)) in loops.iter().zip(sec.loops.iter().zip(&vals)) {
            out.records.push(json!({
                "kind": "loop", "observable": name, "r": spec.r, "t": spec.t,
                "plane": spec.plane, "anchor": spec.anchor, "re": v.re, "im": v.im, "method": method,
            }));
            out.rows.push(vec![name.clone(), spec.r.to_string(), spec.t.to_string(), num(v.re), num(v.im)]);
            golden.insert(name.clone(), v.re);
            values.push((spec.r, spec.t, *v));
        }
        if sec.factorization {
            let s = values.iter().find(|(r, t, _)| *r == 1 && *t == 1).map(|v| v.2.re).ok_or_else(|| {
                Error::config("exact.factorization", "needs a 1x1 loop among exact.loops")
            })?;
            let devs: Vec<Value> = values
                .iter()
                .map(|&(r, t, w)| {
                    let pred = s.powi(r * t);
                    json!({"r": r, "t": t, "value": w.re, "predicted": pred, "rel_dev": ((w.re - pred) / pred).abs()})
                })
                .collect();
            let worst = devs.iter().filter_map(|d| d["rel_dev"].as_f64()).fold(0.0, f64::max);
            out.records.push(json!({"kind": "factorization", "s": s, "cells": devs, "max_rel_dev": worst}));
        }
    }

    if let Some(ln) = &sec.link_norm {
        let group = cyclic(cfg, "exact.link_norm")?;
        let r = rep(cfg.group, &sec.rep, "exact.rep")?;
        let norm = max_link_norm_exhaustive(geom, &group, &r, cfg.beta)?;
        let eps = 1.0 - norm;
        let m = r.dim() as f64;
        let perimeter: Vec<Value> = values
            .iter()
            .map(|&(rr, t, w)| {
                let bound = m * (1.0 - eps).powi(rr.max(t));
                json!({"r": rr, "t": t, "abs_w": w.norm(), "bound": bound, "holds": w.norm() <= bound + 1e-12})
            })
            .collect();
        let perimeter_ok = perimeter.iter().all(|p| p["holds"] == true);
        out.records.push(json!({
            "kind": "link_norm", "rep": r.to_string(), "max_op_norm": norm, "eps": eps,
            "min_gap": ln.min_gap, "gap_ok": eps >= ln.min_gap, "perimeter": perimeter, "perimeter_ok": perimeter_ok,
        }));
        golden.insert("link_norm_eps".into(), eps);
    }

    if let Some(gs) = &sec.gradient {
        if cfg.group != GroupSpec::Circle {
            return Err(Error::config("group", "exact.gradient needs U1"));
        }
        let edge_of = |e: &EdgeSpec, key: &str| {
            geom.edge_id(&e.base, e.axis)
                .ok_or_else(|| Error::config(key, format!("no edge at {:?} along axis {}", e.base, e.axis)))
        };
        let edge = edge_of(&gs.edge, "exact.gradient.edge")?;
        let free = gs.free.iter().map(|e| edge_of(e, "exact.gradient.free")).collect::<Result<Vec<_>>>()?;
        let base = match gs.haar_stream {
            Some(s) => GaugeConfig::haar(geom.clone(), Circle, &mut substream(cfg.seed, GRADIENT_STREAM + s)),
            None => GaugeConfig::identity(geom.clone(), Circle),
        };
        let (_, l) = resolve_loops(geom, std::slice::from_ref(&gs.observable), "exact.gradient.observable")?.remove(0);
        if l.edges.iter().any(|d| d.edge == edge) {
            return Err(Error::config("exact.gradient.observable", "the observable must not contain the differentiated edge"));
        }
        let fund = Representation::parse(GroupSpec::Circle, "fund")?;
        let p = GradientProblem { base, free, edge, beta: cfg.beta, nodes: gs.nodes, step: gs.step };
        let c = gradient_identity_check(&p, |c| wilson_loop(c, &l, &fund).expect("U1 loop").re)?;
        out.records.push(json!({
            "kind": "gradient", "lhs": c.lhs, "rhs": c.rhs, "gap": c.gap, "mean": c.mean,
            "tol": gs.tol, "holds": c.gap <= gs.tol,
        }));
        out.rows.push(vec!["gradient_lhs".into(), String::new(), String::new(), num(c.lhs), num(0.0)]);
        out.rows.push(vec!["gradient_rhs".into(), String::new(), String::new(), num(c.rhs), num(0.0)]);
        golden.insert("gradient_lhs".into(), c.lhs);
        golden.insert("gradient_rhs".into(), c.rhs);
    }

    let file = json!({
        "geometry": cfg.geometry,
        "group": cfg.group,
        "beta": cfg.beta,
        "bc": cfg.boundary,
        "observables": golden,
    });
    out.extra.push(("golden.json".into(), serde_json::to_vec_pretty(&file).map_err(|e| Error::Serde(e.to_string()))?));
    Ok(out)
}

pub(super) fn wilson(cfg: &RunConfig, geom: &Arc<LatticeGeometry>) -> Result<Output> {
    let sec = section(&cfg.wilson, "wilson")?;
    let mut cells = Vec::new();
    let sizes: Vec<(i32, i32)> = (1..=sec.r_max).flat_map(|r| (1..=sec.t_max).map(move |t| (r, t))).collect();
    let specs: Vec<LoopSpec> = sizes
        .iter()
        .map(|&(r, t)| LoopSpec { name: None, anchor: sec.anchor.clone(), plane: sec.plane, r, t })
        .collect();
    match sec.source {
        WilsonSource::Table => {
            if sec.table.is_empty() {
                return Err(Error::config("wilson.table", "table source needs cells"));
            }
            cells = sec.table.clone();
        }
        WilsonSource::Exact => {
            let group = cyclic(cfg, "exact Wilson tables")?;
            let r = rep(cfg.group, &sec.rep, "wilson.rep")?;
            let bc = boundary(&cfg.boundary, geom, &group, cfg.seed, "boundary")?;
            let loops = resolve_loops(geom, &specs, "wilson")?;
            let obs: Vec<Vec<EdgeFactor>> = loops.iter().map(|(_, l)| loop_factors(&group, l, &r)).collect();
            let (vals, _) = exact_products(geom, &group, &bc, cfg.beta, sec.method, cfg.cap(), &obs)?;
            for (&(r, t), v) in sizes.iter().zip(vals) {
                cells.push(WilsonCell { r: r as u32, t: t as u32, mean: v.re, stderr: 0.0 });
            }
        }
        WilsonSource::Mc => {
            let est = dispatch!(cfg.group, g => {
                let r = rep(cfg.group, &sec.rep, "wilson.rep")?;
                let loops = resolve_loops(geom, &specs, "wilson")?;
                let bc = boundary(&cfg.boundary, geom, &g, cfg.seed, "boundary")?;
                let start = initial(geom, g, &bc);
                estimate_many(&start, &bc, &cfg.sampler_params(), cfg.sampler.chains, |c| {
                    loops.iter().map(|(_, l)| wilson_loop(c, l, &r).expect("representation checked")).collect()
                })
            })?;
            for (&(r, t), e) in sizes.iter().zip(est) {
                cells.push(WilsonCell { r: r as u32, t: t as u32, mean: e.mean.re, stderr: e.stderr_re });
            }
        }
    }
    let fit = potential_extract(&cells).map_err(|e| Error::config("wilson", e.to_string()))?;
    let mut out = Output::new(&["R", "T", "mean", "stderr"]);
    for c in &cells {
        out.records.push(json!({"kind": "cell", "r": c.r, "t": c.t, "mean": c.mean, "stderr": c.stderr}));
        out.rows.push(vec![c.r.to_string(), c.t.to_string(), num(c.mean), num(c.stderr)]);
    }
    out.records.push(json!({"kind": "fit", "fit": fit}));
    Ok(out)
}

pub(super) fn center_test(cfg: &RunConfig, geom: &Arc<LatticeGeometry>) -> Result<Output> {
    let sec = section(&cfg.center_test, "center_test")?;
    let position = sec.position.clone().unwrap_or_else(|| vec![0; geom.dim() - 1]);
    let chain = geom.vertical_chain(&position).map_err(|e| Error::config("center_test.position", e.to_string()))?;
    let ensemble = if sec.ensemble.is_empty() { vec![cfg.boundary.clone()] } else { sec.ensemble.clone() };
    let exact_mode = match sec.method {
        CenterMethod::Auto => cfg.group.is_finite(),
        CenterMethod::Mc => false,
        _ => {
            cyclic(cfg, "exact center tests")?;
            true
        }
    };
    let mut out = Output::new(&["rep", "bc_index", "variable", "re", "im", "stderr"]);
    for (ri, rs) in sec.reps.iter().enumerate() {
        let r = rep(cfg.group, rs, &format!("center_test.reps[{ri}]"))?;
        let nontrivial = acts_nontrivially_on_center(&r);
        let cvs = ChainVariable::all(&chain, r.dim());
        let mut sums = vec![Complex64::new(0.0, 0.0); cvs.len()];
        for (bi, bspec) in ensemble.iter().enumerate() {
            let key = format!("center_test.ensemble[{bi}]");
            let vals: Vec<(Complex64, f64)> = if exact_mode {
                let group = cyclic(cfg, "exact center tests")?;
                let bc = boundary(bspec, geom, &group, cfg.seed, &key)?;
                let obs = vec![path_factors(&group, chain.iter().map(|&e| (e, true)), &r)];
                let method = match sec.method {
                    CenterMethod::Enumerate => ExactMethod::Enumerate,
                    CenterMethod::Contract => ExactMethod::Contract,
                    _ => ExactMethod::Auto,
                };
                exact_products(geom, &group, &bc, cfg.beta, method, cfg.cap(), &obs)?.0.into_iter().map(|v| (v, 0.0)).collect()
            } else {
                dispatch!(cfg.group, g => {
                    let bc = boundary(bspec, geom, &g, cfg.seed, &key)?;
                    let start = initial(geom, g, &bc);
                    estimate_many(&start, &bc, &cfg.sampler_params(), cfg.sampler.chains, |c| {
                        cvs.iter().map(|cv| chain_variable(c, cv, &r).expect("indices in range")).collect()
                    })?
                    .into_iter()
                    .map(|e| (e.mean, e.stderr()))
                    .collect()
                })
            };
            let mut max_abs: f64 = 0.0;
            let mut max_z: f64 = 0.0;
            for (ci, ((v, se), cv)) in vals.iter().zip(&cvs).enumerate() {
                sums[ci] += v;
                max_abs = max_abs.max(v.norm());
                if *se > 0.0 {
                    max_z = max_z.max(v.norm() / se);
                }
                out.records.push(json!({
                    "kind": "chain_variable", "rep": rs, "bc_index": bi, "indices": cv.indices,
                    "re": v.re, "im": v.im, "stderr": se,
                }));
                out.rows.push(vec![rs.clone(), bi.to_string(), ci.to_string(), num(v.re), num(v.im), num(*se)]);
            }
            let mut summary = json!({
                "kind": "summary", "rep": rs, "bc_index": bi, "bc": bspec, "nontrivial_on_center": nontrivial,
                "max_abs": max_abs, "exact": exact_mode,
            });
            if exact_mode {
                summary["zero_within_tol"] = json!(max_abs <= sec.tol);
            } else {
                summary["max_z"] = json!(max_z);
            }
            out.records.push(summary);
        }
        for (cv, s) in cvs.iter().zip(&sums) {
            let m = s / ensemble.len() as f64;
            out.records.push(json!({"kind": "ensemble_mean", "rep": rs, "indices": cv.indices, "re": m.re, "im": m.im}));
        }
    }
    if sec.invariance_samples > 0 {
        let rec = dispatch!(cfg.group, g => invariance(cfg, geom, g, sec.invariance_samples))?;
        out.records.push(rec);
    }
    Ok(out)
}

/// Largest `|H(τ(ω)) - H(ω)|` over Haar-random configurations and every listed center element.
fn invariance<G: GaugeGroup>(cfg: &RunConfig, geom: &Arc<LatticeGeometry>, group: G, samples: usize) -> Result<Value> {
    let mut rng = substream(cfg.seed, INVARIANCE_STREAM);
    let center = group.center();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let c = GaugeConfig::haar(geom.clone(), group.clone(), &mut rng);
        let h = c.hamiltonian();
        for &g0 in &center {
            worst = worst.max((center_transform(&c, g0)?.hamiltonian() - h).abs());
        }
    }
    let tol = if cfg.group.is_finite() { 0.0 } else { 1e-10 };
    Ok(json!({"kind": "invariance", "samples": samples, "center_elements": center.len(), "max_abs_diff": worst, "tol": tol, "holds": worst <= tol}))
}

fn tally_json(name: &str, t: &Tally) -> Value {
    json!({"kind": "lemma", "lemma": name, "trials": t.trials, "violations": t.violations, "worst": t.worst})
}

pub(super) fn couple(cfg: &RunConfig, geom: &Arc<LatticeGeometry>) -> Result<Output> {
    let sec = section(&cfg.couple, "couple")?;
    if sec.mode == CoupleMode::Bounds {
        let r = bound_trials(sec.trials, sec.max_states, cfg.seed)?;
        let mut out = Output::new(&["lemma", "trials", "violations", "worst"]);
        for (name, t) in [("attainment", &r.attainment), ("stability", &r.stability), ("gluing", &r.gluing)] {
            out.records.push(tally_json(name, t));
            out.rows.push(vec![name.into(), t.trials.to_string(), t.violations.to_string(), num(t.worst)]);
        }
        return Ok(out);
    }
    let group = cyclic(cfg, "couple")?;
    let bc = boundary(&cfg.boundary, geom, &group, cfg.seed, "boundary")?;
    let second = sec.second.clone().unwrap_or_else(|| BoundarySpec { twist: Some(1), ..cfg.boundary.clone() });
    let bc2 = boundary(&second, geom, &group, cfg.seed, "couple.second")?;
    let opts = SlabCouplerOptions {
        r: sec.r,
        clamp: sec.clamp,
        cap: cfg.cap(),
        tracking: sec.tracking.clone(),
        tol: sec.tol,
        max_iter: sec.iterations,
    };
    let coupler = SlabCoupler::new(geom.clone(), &group, &bc, &bc2, cfg.beta, opts)?;
    let report = coupler.iterate(None)?;
    let certificates: Vec<Value> = (0..coupler.cubes().len())
        .map(|b| {
            let certs = coupler.certificates(b);
            json!({
                "cube": coupler.cubes()[b],
                "boundary_pairs": certs.len(),
                "max_certificate": certs.iter().map(|c| c.certificate).fold(0.0, f64::max),
                "max_full_tv": certs.iter().map(|c| c.full_tv).fold(0.0, f64::max),
                "all_consistent": certs.iter().all(|c| c.consistent),
            })
        })
        .collect();
    let fit = log_linear_slope(&report.profile);
    let mut out = Output::new(&["edge", "dist_to_spatial_boundary", "rho"]);
    for p in &report.profile {
        out.rows.push(vec![p.edge.0.to_string(), num(p.distance), num(p.rho)]);
    }
    out.records.push(json!({
        "profile": report.profile,
        "certificates": certificates,
        "iterations_used": report.iterations,
        "converged": report.converged,
        "last_change": report.last_change,
        "monotonicity_warnings": report.monotonicity_warnings,
        "log_linear_slope": fit.as_ref().map(|f| f.coeffs[1]),
        "log_linear_slope_err": fit.as_ref().map(|f| f.errors[1]),
    }));
    Ok(out)
}

pub(super) fn corr(cfg: &RunConfig, geom: &Arc<LatticeGeometry>) -> Result<Output> {
    let sec = section(&cfg.corr, "corr")?;
    let req = CorrelationRequest {
        f: sec.f.clone(),
        g: sec.g.clone(),
        axis: sec.axis,
        shifts: sec.shifts.clone(),
        chains: cfg.sampler.chains,
    };
    let series: CorrelationSeries = match sec.method {
        CorrMethod::Exact => {
            let group = cyclic(cfg, "exact correlations")?;
            let bc = boundary(&cfg.boundary, geom, &group, cfg.seed, "boundary")?;
            let space = EnumeratedSpace::new(geom.clone(), group, &bc, cfg.cap())?;
            exact_correlation(&req, &exact_gibbs(&space, cfg.beta)?)?
        }
        CorrMethod::Mc => dispatch!(cfg.group, g => {
            let bc = boundary(&cfg.boundary, geom, &g, cfg.seed, "boundary")?;
            let start = initial(geom, g, &bc);
            correlation_decay(&req, &start, &bc, &cfg.sampler_params())
        })
        .map_err(|e| match e {
            Error::Geometry(m) | Error::OutOfRange(m) => Error::config("corr", m),
            e => e,
        })?,
    };
    let mut out = Output::new(&["shift", "distance", "cov", "stderr"]);
    for p in &series.points {
        out.records.push(json!({"kind": "point", "shift": p.shift, "distance": p.distance, "cov": p.cov, "stderr": p.stderr}));
        out.rows.push(vec![p.shift.to_string(), num(p.distance), num(p.cov), num(p.stderr)]);
    }
    out.records.push(json!({"kind": "fit", "fit": series.fit, "insufficient": series.insufficient}));
    if series.insufficient {
        out.insufficient = Some("no distance has a covariance above twice its error".into());
    }
    Ok(out)
}
