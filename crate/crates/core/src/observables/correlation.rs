use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_expectations, Gibbs};
use crate::groups::GaugeGroup;
use crate::lattice::{EdgeId, LatticeGeometry};
use crate::model::{collect_series, BoundaryCondition, GaugeConfig, SamplerParams, BATCHES_PER_CHAIN};
use crate::stats::line_fit;
use num_complex::Complex64;

/// Bounded local observable, valued in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalFunction {
    /// `Re Tr ω_p / m` for the plaquette at `base` spanning `axes`.
    Plaquette { base: Vec<i32>, axes: [usize; 2] },
    /// `Re Tr ω_e / m`.
    Link { base: Vec<i32>, axis: usize },
}

#[derive(Clone, Copy, Debug)]
enum Resolved {
    Plaquette(usize),
    Link(EdgeId),
}

impl LocalFunction {
    fn resolve(&self, geom: &LatticeGeometry) -> Result<Resolved> {
        match self {
            LocalFunction::Plaquette { base, axes } => {
                let (a, b) = (axes[0].min(axes[1]), axes[0].max(axes[1]));
                let v = geom.vertex_index(base).ok_or_else(|| Error::Geometry(format!("vertex {base:?} outside the lattice")))?;
                geom.plaquettes()
                    .iter()
                    .position(|p| p.base == v && p.axes == (a, b))
                    .map(Resolved::Plaquette)
                    .ok_or_else(|| Error::Geometry(format!("no plaquette at {base:?} in plane {axes:?}")))
            }
            LocalFunction::Link { base, axis } => geom
                .edge_id(base, *axis)
                .map(Resolved::Link)
                .ok_or_else(|| Error::Geometry(format!("no edge at {base:?} along axis {axis}"))),
        }
    }

    pub fn translated(&self, axis: usize, by: i32) -> LocalFunction {
        let shift = |b: &[i32]| -> Vec<i32> {
            let mut b = b.to_vec();
            b[axis] += by;
            b
        };
        match self {
            LocalFunction::Plaquette { base, axes } => LocalFunction::Plaquette { base: shift(base), axes: *axes },
            LocalFunction::Link { base, axis: a } => LocalFunction::Link { base: shift(base), axis: *a },
        }
    }

    fn center(&self) -> Vec<f64> {
        let mut c: Vec<f64> = match self {
            LocalFunction::Plaquette { base, .. } | LocalFunction::Link { base, .. } => base.iter().map(|&v| v as f64).collect(),
        };
        match self {
            LocalFunction::Plaquette { axes, .. } => {
                c[axes[0]] += 0.5;
                c[axes[1]] += 0.5;
            }
            LocalFunction::Link { axis, .. } => c[*axis] += 0.5,
        }
        c
    }
}

fn evaluate<G: GaugeGroup>(r: Resolved, cfg: &GaugeConfig<G>) -> f64 {
    let m = cfg.group().matrix_dim() as f64;
    match r {
        Resolved::Plaquette(p) => cfg.plaquette_trace(p) / m,
        Resolved::Link(e) => cfg.group().re_trace(cfg.get(e)) / m,
    }
}

/// Covariances of `f` with translates of `g` along `axis`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationRequest {
    pub f: LocalFunction,
    pub g: LocalFunction,
    pub axis: usize,
    pub shifts: Vec<i32>,
    #[serde(default = "one")]
    pub chains: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationPoint {
    pub shift: i32,
    pub distance: f64,
    pub cov: f64,
    pub stderr: f64,
}

/// `|cov| ≈ K1 e^{-K2 d}` over the window of points whose signal beats twice the error.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub k1: f64,
    pub k2: f64,
    pub k2_err: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub chi2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationSeries {
    pub points: Vec<CorrelationPoint>,
    pub fit: Option<DecayFit>,
    /// No distance had a covariance clearly above its error.
    pub insufficient: bool,
}

impl CorrelationSeries {
    fn new(points: Vec<CorrelationPoint>) -> Self {
        let window: Vec<&CorrelationPoint> =
            points.iter().filter(|p| p.cov.abs() > 2.0 * p.stderr && p.cov.abs() > 1e-300).collect();
        let insufficient = window.is_empty();
        let fit = (window.len() >= 2)
            .then(|| {
                let x: Vec<f64> = window.iter().map(|p| p.distance).collect();
                let y: Vec<f64> = window.iter().map(|p| p.cov.abs().ln()).collect();
                let s: Vec<f64> = window.iter().map(|p| p.stderr / p.cov.abs()).collect();
                let lf = line_fit(&x, &y, Some(&s)).ok()?;
                Some(DecayFit {
                    k1: lf.coeffs[0].exp(),
                    k2: -lf.coeffs[1],
                    k2_err: lf.errors[1],
                    window: (x[0], x[x.len() - 1]),
                    n_points: x.len(),
                    chi2: lf.chi2,
                })
            })
            .flatten();
        CorrelationSeries { points, fit, insufficient }
    }
}

fn resolve_all(geom: &LatticeGeometry, req: &CorrelationRequest) -> Result<(Resolved, Vec<(i32, f64, Resolved)>)> {
    if req.axis >= geom.dim() {
        return Err(Error::OutOfRange(format!("axis {} in dimension {}", req.axis, geom.dim())));
    }
    let f = req.f.resolve(geom)?;
    let fc = req.f.center();
    let gs = req
        .shifts
        .iter()
        .map(|&s| {
            let g = req.g.translated(req.axis, s);
            let d = g.center().iter().zip(&fc).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            Ok((s, d, g.resolve(geom)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((f, gs))
}

/// Monte Carlo covariances with jackknife errors over batches.
pub fn correlation_decay<G: GaugeGroup>(
    req: &CorrelationRequest,
    start: &GaugeConfig<G>,
    bc: &BoundaryCondition<G::Elem>,
    params: &SamplerParams,
) -> Result<CorrelationSeries> {
    let (f, gs) = resolve_all(start.geom(), req)?;
    let k = gs.len();
    let runs = collect_series(start, bc, params, req.chains, |c| {
        let fv = evaluate(f, c);
        let mut out = Vec::with_capacity(1 + 2 * k);
        out.push(fv);
        for &(_, _, g) in &gs {
            let gv = evaluate(g, c);
            out.push(gv);
            out.push(fv * gv);
        }
        out
    })?;
    // Batch means of every recorded column.
    let mut batches: Vec<Vec<f64>> = Vec::new();
    for chain in &runs.chains {
        let size = chain.len() / BATCHES_PER_CHAIN;
        for b in chain.chunks(size).take(BATCHES_PER_CHAIN) {
            let mut m = vec![0.0; 1 + 2 * k];
            for row in b {
                m.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            }
            m.iter_mut().for_each(|a| *a /= size as f64);
            batches.push(m);
        }
    }
    let nb = batches.len() as f64;
    let total: Vec<f64> = (0..1 + 2 * k).map(|j| batches.iter().map(|b| b[j]).sum::<f64>()).collect();
    let points = gs
        .iter()
        .enumerate()
        .map(|(i, &(shift, distance, _))| {
            let (jg, jfg) = (1 + 2 * i, 2 + 2 * i);
            let cov = total[jfg] / nb - total[0] / nb * total[jg] / nb;
            let loo: Vec<f64> = batches
                .iter()
                .map(|b| {
                    let m = nb - 1.0;
                    (total[jfg] - b[jfg]) / m - (total[0] - b[0]) / m * (total[jg] - b[jg]) / m
                })
                .collect();
            let mean = loo.iter().sum::<f64>() / nb;
            let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (nb - 1.0) / nb;
            CorrelationPoint { shift, distance, cov, stderr: var.sqrt() }
        })
        .collect();
    Ok(CorrelationSeries::new(points))
}

/// Exact covariances from an enumerated Gibbs measure.
pub fn exact_correlation(req: &CorrelationRequest, gibbs: &Gibbs) -> Result<CorrelationSeries> {
    let (f, gs) = resolve_all(gibbs.space.geom(), req)?;
    let vals = exact_expectations(gibbs, |c| {
        let fv = evaluate(f, c);
        let mut out = vec![Complex64::new(fv, 0.0)];
        for &(_, _, g) in &gs {
            let gv = evaluate(g, c);
            out.push(Complex64::new(gv, 0.0));
            out.push(Complex64::new(fv * gv, 0.0));
        }
        out
    });
    let points = gs
        .iter()
        .enumerate()
        .map(|(i, &(shift, distance, _))| CorrelationPoint {
            shift,
            distance,
            cov: vals[2 + 2 * i].re - vals[0].re * vals[1 + 2 * i].re,
            stderr: 0.0,
        })
        .collect();
    Ok(CorrelationSeries::new(points))
}
