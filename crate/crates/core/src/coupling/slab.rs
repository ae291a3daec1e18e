//! Iterated cube re-sampling on a slab, tracked through the joint law of the
//! coupled pair on a set of edges that contains every cube's boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cube::{CubeCertificate, CubeCoupling, CubeCouplingOptions};
use crate::error::{Error, Result};
use crate::exact::{exact_gibbs, exact_marginal, state_count, EnumeratedSpace, Gibbs, DEFAULT_CAP};
use crate::groups::Cyclic;
use crate::lattice::{EdgeId, LatticeGeometry, Shape, SubBox};
use crate::model::BoundaryCondition;
use crate::stats::{line_fit, LinearFit};

const CHUNK: usize = 1 << 14;

/// Edges whose joint pair law is carried exactly between updates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "edges", rename_all = "snake_case")]
pub enum Tracking {
    /// Every interior edge: the carried law is the whole coupling.
    Full,
    /// The union of the cubes' boundaries inside the slab.
    #[default]
    Boundary,
    /// The boundaries plus the listed interior edges.
    Extended(Vec<EdgeId>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlabCouplerOptions {
    pub r: i32,
    pub clamp: bool,
    pub cap: u64,
    pub tracking: Tracking,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SlabCouplerOptions {
    fn default() -> Self {
        SlabCouplerOptions { r: 1, clamp: true, cap: DEFAULT_CAP, tracking: Tracking::Boundary, tol: 1e-10, max_iter: 1000 }
    }
}

/// Coupled pair law on the tracked edges plus the disagreement probability
/// of every interior edge.
#[derive(Clone, Debug)]
pub struct CouplingState {
    /// Index `x + n^k x'` with both vectors little-endian over the tracked edges.
    pub pairs: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Sums of per-digit weights over a pair index, evaluated by blocks of digits.
struct DigitTable {
    block: usize,
    tables: Vec<Vec<[usize; 3]>>,
}

impl DigitTable {
    fn new(n: usize, weights: &[[usize; 3]]) -> Self {
        let mut g = 1;
        while g < weights.len() && n.pow(g as u32 + 1) <= 1 << 10 {
            g += 1;
        }
        let block = n.pow(g as u32);
        let tables = weights
            .chunks(g)
            .map(|ws| {
                (0..block)
                    .map(|b| {
                        let mut acc = [0; 3];
                        let mut x = b;
                        for w in ws {
                            let d = x % n;
                            x /= n;
                            for c in 0..3 {
                                acc[c] += d * w[c];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        DigitTable { block, tables }
    }

    #[inline]
    fn eval(&self, mut s: usize) -> [usize; 3] {
        let mut acc = [0; 3];
        for t in &self.tables {
            let v = t[s % self.block];
            s /= self.block;
            acc[0] += v[0];
            acc[1] += v[1];
            acc[2] += v[2];
        }
        acc
    }
}

struct CubeTable {
    interior: Vec<EdgeId>,
    boundary: Vec<EdgeId>,
    /// Pair index to (compressed outer index, boundary pair, resampled pair).
    digits: DigitTable,
    n_outer: usize,
    /// Offsets in the pair index of each resampled pair assignment.
    d_offsets: Vec<usize>,
    /// Compressed outer index back to a pair index with resampled digits zero.
    outer_base: Vec<usize>,
    /// Per boundary pair: law of the resampled pair, disagreement on `interior`,
    /// and the disagreeing boundary edges.
    kernels: Vec<Vec<f64>>,
    rho: Vec<Vec<f64>>,
    disagree: Vec<Vec<EdgeId>>,
    certificates: Vec<CubeCertificate>,
    /// `(slab interior index, cube interior index)` of untracked edges.
    untracked: Vec<(usize, usize)>,
}

pub struct SlabCoupler {
    geom: Arc<LatticeGeometry>,
    order: u32,
    n_half: i32,
    opts: SlabCouplerOptions,
    cubes: Vec<SubBox>,
    interior: Vec<EdgeId>,
    tracked: Vec<EdgeId>,
    tracked_idx: Vec<usize>,
    tables: Vec<CubeTable>,
    mu_t: Vec<f64>,
    mu2_t: Vec<f64>,
    rho0: Vec<f64>,
    fixed_rho: BTreeMap<EdgeId, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfilePoint {
    pub edge: EdgeId,
    pub distance: f64,
    pub rho: f64,
    pub tracked: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionCheck {
    pub cube: usize,
    pub edge: EdgeId,
    pub measured: f64,
    pub bound: f64,
    /// Largest disagreement probability per disagreeing boundary edge among
    /// boundary pairs whose disagreement stays away from the edge.
    pub kappa: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateReport {
    pub profile: Vec<ProfilePoint>,
    pub iterations: usize,
    pub converged: bool,
    pub last_change: f64,
    /// Number of (iteration, edge) pairs where the disagreement grew.
    pub monotonicity_warnings: usize,
    /// Profile after each iteration, starting with the product coupling.
    pub history: Vec<Vec<f64>>,
    #[serde(skip)]
    pub state: Option<CouplingState>,
}

fn pair_digit(s: usize, n: usize, j: usize) -> usize {
    (s / n.pow(j as u32)) % n
}

fn fixed_map(bc: &BoundaryCondition<u32>) -> Result<&BTreeMap<EdgeId, u32>> {
    match bc {
        BoundaryCondition::Fixed(v) => Ok(v),
        BoundaryCondition::Free => Err(Error::Unsupported("slab couplings need fixed boundary conditions".into())),
    }
}

impl SlabCoupler {
    pub fn new(
        geom: Arc<LatticeGeometry>,
        group: &Cyclic,
        bc: &BoundaryCondition<u32>,
        bc2: &BoundaryCondition<u32>,
        beta: f64,
        opts: SlabCouplerOptions,
    ) -> Result<Self> {
        let n_half = match geom.shape() {
            Shape::Slab { n, .. } => *n,
            _ => return Err(Error::Geometry("slab couplings run on slab geometries".into())),
        };
        bc.validate(&geom)?;
        bc2.validate(&geom)?;
        let (v1, v2) = (fixed_map(bc)?, fixed_map(bc2)?);
        for (e, a) in v1 {
            if geom.is_temporal_boundary(*e) && v2.get(e) != Some(a) {
                return Err(Error::InvalidSpec(format!("boundary conditions differ on the temporal face at {e:?}")));
            }
        }
        let order = group.order();
        let n = order as usize;
        let cubes = geom.cubes_in_slab()?;
        let interior = geom.interior_edges();
        let mut bd_union = BTreeSet::new();
        for b in &cubes {
            bd_union.extend(geom.box_boundary(b).into_iter().filter(|&e| !geom.is_boundary(e)));
        }
        let tracked: Vec<EdgeId> = match &opts.tracking {
            Tracking::Full => interior.clone(),
            Tracking::Boundary => bd_union.into_iter().collect(),
            Tracking::Extended(extra) => {
                if let Some(e) = extra.iter().find(|e| interior.binary_search(e).is_err()) {
                    return Err(Error::Geometry(format!("{e:?} is not an interior edge")));
                }
                bd_union.into_iter().chain(extra.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect()
            }
        };
        let k = tracked.len();
        state_count(order, 2 * k, opts.cap)?;
        let tracked_idx: Vec<usize> = tracked.iter().map(|e| interior.binary_search(e).expect("interior")).collect();

        let gibbs = |b: &BoundaryCondition<u32>| -> Result<Gibbs> {
            let space = EnumeratedSpace::new(geom.clone(), group.clone(), b, opts.cap)?;
            exact_gibbs(&space, beta)
        };
        let (g1, g2) = (gibbs(bc)?, gibbs(bc2)?);
        let mu_t = exact_marginal(&g1.joint, &tracked)?.measure.probs;
        let mu2_t = exact_marginal(&g2.joint, &tracked)?.measure.probs;
        let rho0 = interior
            .iter()
            .map(|&e| {
                let a = exact_marginal(&g1.joint, &[e])?.measure.probs;
                let b = exact_marginal(&g2.joint, &[e])?.measure.probs;
                Ok((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i] * b[j]).sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        let fixed_rho = v1.iter().map(|(e, a)| (*e, if v2.get(e) == Some(a) { 0.0 } else { 1.0 })).collect();

        let cube_opts = CubeCouplingOptions { r: opts.r, clamp: opts.clamp, cap: opts.cap };
        let tables = cubes
            .iter()
            .map(|b| Self::table(&geom, group, v1, v2, beta, b, &interior, &tracked, cube_opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(SlabCoupler { geom, order, n_half, opts, cubes, interior, tracked, tracked_idx, tables, mu_t, mu2_t, rho0, fixed_rho })
    }

    #[allow(clippy::too_many_arguments)]
    fn table(
        geom: &LatticeGeometry,
        group: &Cyclic,
        v1: &BTreeMap<EdgeId, u32>,
        v2: &BTreeMap<EdgeId, u32>,
        beta: f64,
        b: &SubBox,
        interior: &[EdgeId],
        tracked: &[EdgeId],
        cube_opts: CubeCouplingOptions,
    ) -> Result<CubeTable> {
        let n = group.order() as usize;
        let k = tracked.len();
        let (sub, map) = geom.sub_geometry(b)?;
        let sub = Arc::new(sub);
        let to_sub: BTreeMap<EdgeId, EdgeId> = map.iter().enumerate().map(|(s, &p)| (p, EdgeId(s))).collect();
        let boundary = geom.box_boundary(b);
        let bd: Vec<EdgeId> = boundary.iter().copied().filter(|&e| !geom.is_boundary(e)).collect();
        let n_bd = state_count(group.order(), bd.len(), cube_opts.cap)?;

        // Cube Gibbs measures for every assignment of the varying boundary edges.
        let side = |values: &BTreeMap<EdgeId, u32>| -> Result<Vec<Gibbs>> {
            (0..n_bd)
                .map(|xb| {
                    let mut bcv = BTreeMap::new();
                    for s in sub.boundary_edges() {
                        let p = map[s.0];
                        let v = match bd.iter().position(|&u| u == p) {
                            Some(j) => pair_digit(xb, n, j) as u32,
                            None => values[&p],
                        };
                        bcv.insert(s, v);
                    }
                    let space = EnumeratedSpace::new(sub.clone(), group.clone(), &BoundaryCondition::Fixed(bcv), cube_opts.cap)?;
                    exact_gibbs(&space, beta)
                })
                .collect()
        };
        let (gx, gx2) = (side(v1)?, side(v2)?);
        let cube_interior: Vec<EdgeId> = gx[0].joint.edges.iter().map(|s| map[s.0]).collect();
        let d_edges: Vec<EdgeId> = cube_interior.iter().copied().filter(|e| tracked.binary_search(e).is_ok()).collect();
        let d_sub: Vec<EdgeId> = d_edges.iter().map(|e| to_sub[e]).collect();
        let n_d = n.pow(d_edges.len() as u32);

        let mut kernels = Vec::with_capacity(n_bd * n_bd);
        let mut rho = Vec::with_capacity(n_bd * n_bd);
        let mut disagree = Vec::with_capacity(n_bd * n_bd);
        let mut certificates = Vec::with_capacity(n_bd * n_bd);
        for pair in 0..n_bd * n_bd {
            let (xb, xb2) = (pair % n_bd, pair / n_bd);
            let value = |values: &BTreeMap<EdgeId, u32>, x: usize, e: EdgeId| match bd.iter().position(|&u| u == e) {
                Some(j) => pair_digit(x, n, j) as u32,
                None => values[&e],
            };
            let a: Vec<EdgeId> = boundary.iter().copied().filter(|&e| value(v1, xb, e) != value(v2, xb2, e)).collect();
            let a_sub: Vec<EdgeId> = a.iter().map(|e| to_sub[e]).collect();
            let cc = CubeCoupling::build(&sub, &gx[xb], &gx2[xb2], a_sub, cube_opts)?;
            kernels.push(cc.pair_marginal(&d_sub)?);
            rho.push(cc.rho());
            let mut cert = cc.summary();
            cert.disagreeing = a.clone();
            certificates.push(cert);
            disagree.push(a);
        }

        // Digit weights in the tracked pair index.
        let mut w_outer = vec![0; 2 * k];
        let mut w_bd = vec![0; 2 * k];
        let mut w_d = vec![0; 2 * k];
        let mut stride = 1;
        for half in 0..2 {
            for (j, e) in tracked.iter().enumerate() {
                let p = half * k + j;
                if let Some(i) = d_edges.iter().position(|u| u == e) {
                    w_d[p] = n.pow((half * d_edges.len() + i) as u32);
                } else {
                    w_outer[p] = stride;
                    stride *= n;
                }
                if let Some(i) = bd.iter().position(|u| u == e) {
                    w_bd[p] = n.pow(i as u32) * if half == 1 { n_bd } else { 1 };
                }
            }
        }
        let n_outer = stride;
        let d_offsets: Vec<usize> = (0..n_d * n_d)
            .map(|t| {
                (0..2 * k).filter(|&p| w_d[p] > 0).map(|p| ((t / w_d[p]) % n) * n.pow(p as u32)).sum()
            })
            .collect();
        let outer_base: Vec<usize> = (0..n_outer)
            .map(|o| (0..2 * k).filter(|&p| w_outer[p] > 0).map(|p| ((o / w_outer[p]) % n) * n.pow(p as u32)).sum())
            .collect();
        let untracked = cube_interior
            .iter()
            .enumerate()
            .filter(|(_, e)| tracked.binary_search(e).is_err())
            .map(|(i, e)| (interior.binary_search(e).expect("interior"), i))
            .collect();
        if bd.iter().any(|e| tracked.binary_search(e).is_err()) {
            return Err(Error::Geometry("cube boundary is not tracked".into()));
        }
        Ok(CubeTable {
            interior: cube_interior,
            boundary,
            digits: DigitTable::new(n, &(0..2 * k).map(|p| [w_outer[p], w_bd[p], w_d[p]]).collect::<Vec<_>>()),
            n_outer,
            d_offsets,
            outer_base,
            kernels,
            rho,
            disagree,
            certificates,
            untracked,
        })
    }

    pub fn cubes(&self) -> &[SubBox] {
        &self.cubes
    }

    pub fn tracked(&self) -> &[EdgeId] {
        &self.tracked
    }

    pub fn interior(&self) -> &[EdgeId] {
        &self.interior
    }

    pub fn options(&self) -> &SlabCouplerOptions {
        &self.opts
    }

    /// Cube-coupling certificates of cube `b`, one per boundary pair.
    pub fn certificates(&self, b: usize) -> &[CubeCertificate] {
        &self.tables[b].certificates
    }

    pub fn cube_index(&self, b: &SubBox) -> Result<usize> {
        self.cubes.iter().position(|c| c == b).ok_or_else(|| Error::Geometry(format!("{b:?} is not one of the slab's cubes")))
    }

    /// Interior edges of cube `b`.
    pub fn cube_interior(&self, b: usize) -> &[EdgeId] {
        &self.tables[b].interior
    }

    /// Product of the two Gibbs measures.
    pub fn product_state(&self) -> CouplingState {
        let size = self.mu_t.len();
        let pairs: Vec<f64> = (0..size * size).into_par_iter().map(|s| self.mu_t[s % size] * self.mu2_t[s / size]).collect();
        let mut st = CouplingState { pairs, rho: self.rho0.clone() };
        self.refresh_tracked(&mut st);
        st
    }

    fn tracked_rho(&self, pairs: &[f64]) -> Vec<f64> {
        let n = self.order as usize;
        let k = self.tracked.len();
        let parts: Vec<Vec<f64>> = pairs
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut acc = vec![0.0; k];
                let mut ds = vec![0; 2 * k];
                for (i, &p) in chunk.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let mut s = c * CHUNK + i;
                    if n == 2 {
                        let mut diff = (s ^ (s >> k)) & ((1 << k) - 1);
                        while diff != 0 {
                            acc[diff.trailing_zeros() as usize] += p;
                            diff &= diff - 1;
                        }
                        continue;
                    }
                    for d in ds.iter_mut() {
                        *d = s % n;
                        s /= n;
                    }
                    for j in 0..k {
                        if ds[j] != ds[k + j] {
                            acc[j] += p;
                        }
                    }
                }
                acc
            })
            .collect();
        (0..k).map(|j| parts.iter().map(|a| a[j]).sum()).collect()
    }

    fn refresh_tracked(&self, st: &mut CouplingState) {
        for (j, r) in self.tracked_rho(&st.pairs).into_iter().enumerate() {
            st.rho[self.tracked_idx[j]] = r;
        }
    }

    /// Law of the boundary pair of cube `b`.
    fn bd_law(&self, t: &CubeTable, pairs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; t.kernels.len()];
        for (s, &p) in pairs.iter().enumerate() {
            if p != 0.0 {
                out[t.digits.eval(s)[1]] += p;
            }
        }
        out
    }

    /// `τ_B`: re-sample the interior of cube `b` from the cube coupling of the
    /// boundary values seen by the pair.
    pub fn local_update(&self, st: &CouplingState, b: usize) -> Result<CouplingState> {
        let t = self.tables.get(b).ok_or_else(|| Error::Geometry(format!("cube {b} of {}", self.tables.len())))?;
        let pairs = &st.pairs;
        let outer_mass: Vec<f64> = t
            .outer_base
            .par_iter()
            .map(|&base| t.d_offsets.iter().map(|&off| pairs[base + off]).sum())
            .collect();
        let new: Vec<f64> = (0..pairs.len())
            .into_par_iter()
            .map(|s| {
                let [o, bdi, di] = t.digits.eval(s);
                outer_mass[o] * t.kernels[bdi][di]
            })
            .collect();
        debug_assert_eq!(outer_mass.len(), t.n_outer);
        let mut out = CouplingState { pairs: new, rho: st.rho.clone() };
        if !t.untracked.is_empty() {
            let law = self.bd_law(t, pairs);
            for &(si, ci) in &t.untracked {
                out.rho[si] = law.iter().zip(&t.rho).map(|(p, r)| p * r[ci]).sum();
            }
        }
        self.refresh_tracked(&mut out);
        Ok(out)
    }

    /// `τ`: uniform average of the local updates, or the identity with no cubes.
    pub fn global_update(&self, st: &CouplingState) -> Result<CouplingState> {
        Ok(self.global_update_parts(st, false)?.0)
    }

    fn global_update_parts(&self, st: &CouplingState, keep: bool) -> Result<(CouplingState, Vec<Vec<f64>>)> {
        if self.tables.is_empty() {
            return Ok((st.clone(), Vec::new()));
        }
        let mut sum = vec![0.0; st.pairs.len()];
        let mut rho_sum = vec![0.0; st.rho.len()];
        let mut parts = Vec::new();
        for b in 0..self.tables.len() {
            let u = self.local_update(st, b)?;
            sum.par_iter_mut().zip(&u.pairs).for_each(|(a, v)| *a += v);
            rho_sum.iter_mut().zip(&u.rho).for_each(|(a, v)| *a += v);
            if keep {
                parts.push(u.rho);
            }
        }
        let m = self.tables.len() as f64;
        sum.par_iter_mut().for_each(|a| *a /= m);
        let mut out = CouplingState { pairs: sum, rho: rho_sum.into_iter().map(|r| r / m).collect() };
        if keep {
            // Keep the averaged per-cube values; the check compares them with these.
            let avg = out.rho.clone();
            self.refresh_tracked(&mut out);
            parts.push(avg);
        } else {
            self.refresh_tracked(&mut out);
        }
        Ok((out, parts))
    }

    /// Largest gap between `ρ(τγ, e)` computed from the averaged pair law and
    /// the average of `ρ(τ_B γ, e)`, over tracked edges.
    pub fn linearity_gap(&self, st: &CouplingState) -> Result<f64> {
        let (out, parts) = self.global_update_parts(st, true)?;
        let Some(avg) = parts.last() else { return Ok(0.0) };
        Ok(self.tracked_idx.iter().map(|&i| (out.rho[i] - avg[i]).abs()).fold(0.0, f64::max))
    }

    /// Largest deviation of the tracked pair law's marginals from the two Gibbs marginals.
    pub fn marginal_error(&self, st: &CouplingState) -> f64 {
        let size = self.mu_t.len();
        let mut first = vec![0.0; size];
        let mut second = vec![0.0; size];
        for (x2, row) in st.pairs.chunks(size).enumerate() {
            first.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            second[x2] = row.iter().sum();
        }
        let a = first.iter().zip(&self.mu_t).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let b = second.iter().zip(&self.mu2_t).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        a.max(b)
    }

    fn rho_of(&self, st: &CouplingState, e: EdgeId) -> f64 {
        match self.interior.binary_search(&e) {
            Ok(i) => st.rho[i],
            Err(_) => self.fixed_rho.get(&e).copied().unwrap_or(0.0),
        }
    }

    /// Compare `ρ(τ_B γ, e)` on the cube's interior with the two-sum bound
    /// built from the measured cube-coupling disagreements.
    pub fn recursion_check(&self, st: &CouplingState, b: usize) -> Result<Vec<RecursionCheck>> {
        let t = self.tables.get(b).ok_or_else(|| Error::Geometry(format!("cube {b} of {}", self.tables.len())))?;
        let after = self.local_update(st, b)?;
        let wide = 4 * self.opts.r;
        let narrow = 2 * self.n_half;
        Ok(t
            .interior
            .iter()
            .enumerate()
            .map(|(ci, &e)| {
                let kappa = t
                    .disagree
                    .iter()
                    .zip(&t.rho)
                    .filter(|(a, _)| !a.is_empty() && a.iter().all(|&u| !self.geom.in_common_cube(e, u, wide)))
                    .map(|(a, r)| r[ci] / a.len() as f64)
                    .fold(0.0, f64::max);
                let sum = |w: i32| -> f64 {
                    t.boundary.iter().filter(|&&u| self.geom.in_common_cube(e, u, w)).map(|&u| self.rho_of(st, u)).sum()
                };
                let bound = kappa * sum(narrow) + sum(wide);
                let measured = self.rho_of(&after, e);
                RecursionCheck { cube: b, edge: e, measured, bound, kappa, holds: measured <= bound + 1e-12 }
            })
            .collect())
    }

    pub fn profile(&self, st: &CouplingState) -> Vec<ProfilePoint> {
        self.interior
            .iter()
            .zip(&st.rho)
            .map(|(&e, &rho)| ProfilePoint {
                edge: e,
                distance: self.geom.dist_to_spatial_boundary(e),
                rho,
                tracked: self.tracked.binary_search(&e).is_ok(),
            })
            .collect()
    }

    /// Apply `τ` from the product coupling until the profile moves by less
    /// than the tolerance or the iteration budget runs out.
    pub fn iterate(&self, max_iter: Option<usize>) -> Result<IterateReport> {
        let budget = max_iter.unwrap_or(self.opts.max_iter);
        let mut st = self.product_state();
        let mut history = vec![st.rho.clone()];
        let mut warnings = 0;
        let mut last_change = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < budget {
            let next = self.global_update(&st)?;
            iterations += 1;
            last_change = next.rho.iter().zip(&st.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            warnings += next.rho.iter().zip(&st.rho).filter(|(a, b)| **a > **b + 1e-12).count();
            history.push(next.rho.clone());
            st = next;
            if last_change < self.opts.tol {
                converged = true;
                break;
            }
        }
        Ok(IterateReport {
            profile: self.profile(&st),
            iterations,
            converged,
            last_change,
            monotonicity_warnings: warnings,
            history,
            state: Some(st),
        })
    }
}

/// Least-squares slope of `log ρ` against distance, over points with `ρ > 0`.
pub fn log_linear_slope(points: &[ProfilePoint]) -> Option<LinearFit> {
    let kept: Vec<&ProfilePoint> = points.iter().filter(|p| p.rho > 0.0).collect();
    let x: Vec<f64> = kept.iter().map(|p| p.distance).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.rho.ln()).collect();
    line_fit(&x, &y, None).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GaugeGroup;

    fn instance(m: i32, tracking: Tracking) -> SlabCoupler {
        let g = Arc::new(LatticeGeometry::slab(2, m, 1).unwrap());
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let tw = bc.center_twisted(&g, &z2, z2.center()[1]).unwrap();
        SlabCoupler::new(g, &z2, &bc, &tw, 0.3, SlabCouplerOptions { tracking, ..Default::default() }).unwrap()
    }

    #[test]
    fn full_tracking_keeps_marginals() {
        let c = instance(2, Tracking::Full);
        assert_eq!(c.cubes().len(), 1);
        let st = c.product_state();
        let u = c.local_update(&st, 0).unwrap();
        assert!(c.marginal_error(&u) < 1e-12);
        let g = c.global_update(&st).unwrap();
        assert_eq!(g.pairs, u.pairs);
    }

    #[test]
    fn equal_conditions_stay_diagonal() {
        let g = Arc::new(LatticeGeometry::slab(2, 2, 1).unwrap());
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let c = SlabCoupler::new(g, &z2, &bc, &bc, 0.3, SlabCouplerOptions { tracking: Tracking::Full, ..Default::default() })
            .unwrap();
        let size = c.mu_t.len();
        let diag: Vec<f64> = (0..size * size).map(|s| if s % size == s / size { c.mu_t[s % size] } else { 0.0 }).collect();
        let st = CouplingState { pairs: diag, rho: vec![0.0; c.interior().len()] };
        let u = c.local_update(&st, 0).unwrap();
        assert!(u.rho.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn off_cube_disagreement_is_untouched() {
        let c = instance(3, Tracking::Boundary);
        let st = c.product_state();
        for b in 0..c.cubes().len() {
            let u = c.local_update(&st, b).unwrap();
            for (i, e) in c.interior().iter().enumerate() {
                if !c.cube_interior(b).contains(e) {
                    assert!((u.rho[i] - st.rho[i]).abs() < 1e-13);
                }
            }
            assert!(c.marginal_error(&u) < 1e-12);
        }
        assert!(c.linearity_gap(&st).unwrap() < 1e-12);
    }

    #[test]
    fn larger_slabs_exceed_the_pair_cap() {
        let g = Arc::new(LatticeGeometry::slab(2, 4, 1).unwrap());
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let tw = bc.center_twisted(&g, &z2, 1).unwrap();
        let r = SlabCoupler::new(g, &z2, &bc, &tw, 0.3, SlabCouplerOptions::default());
        assert!(matches!(r, Err(Error::CapExceeded { .. })));
    }
}
