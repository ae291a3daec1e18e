//! Finite hypercubic boxes in `Z^d`: vertices, oriented edges, plaquettes,
//! boundary classification, loops, vertical chains, neighborhoods of boundary
//! edges and the cube cover of a slab.
//!
//! Every geometry is a box `∏ [lo_i, hi_i]`. Cubes, slabs and the half slab
//! used for chain variables are named constructors over the same type.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an undirected edge, in the axis-major layout of its geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

/// An edge with a traversal direction. `forward` means from the
/// lexicographically smaller endpoint to the larger one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DirEdge {
    pub edge: EdgeId,
    pub forward: bool,
}

impl DirEdge {
    pub fn fwd(edge: EdgeId) -> Self {
        DirEdge { edge, forward: true }
    }
    pub fn rev(self) -> Self {
        DirEdge { edge: self.edge, forward: !self.forward }
    }
}

/// Coordinate-level edge reference: start vertex, axis and sign of the step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRef {
    pub start: Vec<i32>,
    pub axis: usize,
    pub positive: bool,
}

/// Named box shapes. Axis 0 is the temporal axis of slabs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// `{-n..n}^d`.
    Cube { n: i32 },
    /// `{-n..n} × {-m..m}^{d-1}`.
    Slab { m: i32, n: i32 },
    /// `{0..n} × {-m..m}^{d-1}`, whose vertical chain through the origin has `n` edges.
    ChainSlab { m: i32, n: i32 },
    /// Arbitrary box with inclusive vertex bounds.
    Box { lo: Vec<i32>, hi: Vec<i32> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    /// Edge lying in a face. `temporal` marks slab faces orthogonal to axis 0;
    /// edges in both a temporal and a spatial face count as temporal.
    Boundary { temporal: bool },
}

/// Axis-aligned sub-box with inclusive vertex bounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubBox {
    pub lo: Vec<i32>,
    pub hi: Vec<i32>,
}

impl SubBox {
    pub fn contains_vertex(&self, x: &[i32]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&l, &h))| l <= v && v <= h)
    }
}

/// Oriented elementary square: `edges[0..4]` traversed in order.
#[derive(Clone, Debug)]
pub struct Plaquette {
    pub edges: [DirEdge; 4],
    pub base: usize,
    pub axes: (usize, usize),
}

/// Closed path of directed edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    pub edges: Vec<DirEdge>,
}

/// Cube `∏[a_i, b_i]` around a boundary edge, with its edge set and boundary.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    pub cube: SubBox,
    pub edges: Vec<EdgeId>,
    pub boundary: Vec<EdgeId>,
}

#[derive(Clone, Debug)]
pub struct LatticeGeometry {
    dim: usize,
    shape: Shape,
    lo: Vec<i32>,
    hi: Vec<i32>,
    vstride: Vec<usize>,
    n_vertices: usize,
    axis_offset: Vec<usize>,
    axis_stride: Vec<Vec<usize>>,
    edge_base: Vec<usize>,
    edge_axis: Vec<usize>,
    kinds: Vec<EdgeKind>,
    plaquettes: Vec<Plaquette>,
    edge_plaquettes: Vec<Vec<usize>>,
    staples: Vec<Vec<[DirEdge; 3]>>,
    neighbors: Vec<Vec<EdgeId>>,
    classes: Vec<Vec<EdgeId>>,
}

impl LatticeGeometry {
    pub fn new(dim: usize, shape: Shape) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Geometry(format!("dimension must be at least 2, got {dim}")));
        }
        let (lo, hi) = match &shape {
            Shape::Cube { n } => {
                if *n < 1 {
                    return Err(Error::Geometry(format!("cube half-width must be positive, got {n}")));
                }
                (vec![-n; dim], vec![*n; dim])
            }
            Shape::Slab { m, n } => {
                if *n < 1 || *m < *n {
                    return Err(Error::Geometry(format!("slab needs 1 <= n <= m, got m={m}, n={n}")));
                }
                let mut lo = vec![-m; dim];
                let mut hi = vec![*m; dim];
                lo[0] = -n;
                hi[0] = *n;
                (lo, hi)
            }
            Shape::ChainSlab { m, n } => {
                if *n < 1 || *m < 1 {
                    return Err(Error::Geometry(format!("half slab needs n, m >= 1, got m={m}, n={n}")));
                }
                let mut lo = vec![-m; dim];
                let mut hi = vec![*m; dim];
                lo[0] = 0;
                hi[0] = *n;
                (lo, hi)
            }
            Shape::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::Geometry(format!("box bounds must have {dim} coordinates")));
                }
                if lo.iter().zip(hi).any(|(l, h)| h <= l) {
                    return Err(Error::Geometry("box must have extent at least one along every axis".into()));
                }
                (lo.clone(), hi.clone())
            }
        };
        Ok(Self::build(dim, shape, lo, hi))
    }

    pub fn cube(dim: usize, n: i32) -> Result<Self> {
        Self::new(dim, Shape::Cube { n })
    }

    pub fn slab(dim: usize, m: i32, n: i32) -> Result<Self> {
        Self::new(dim, Shape::Slab { m, n })
    }

    pub fn chain_slab(dim: usize, m: i32, n: i32) -> Result<Self> {
        Self::new(dim, Shape::ChainSlab { m, n })
    }

    /// Box with `extent[i]` vertices along axis `i`, coordinates starting at 0.
    pub fn grid(extent: &[i32]) -> Result<Self> {
        let hi = extent.iter().map(|e| e - 1).collect();
        Self::new(extent.len(), Shape::Box { lo: vec![0; extent.len()], hi })
    }

    fn build(dim: usize, shape: Shape, lo: Vec<i32>, hi: Vec<i32>) -> Self {
        let ext: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let strides = |ext: &[usize]| {
            let mut s = vec![1usize; dim];
            for i in (0..dim.saturating_sub(1)).rev() {
                s[i] = s[i + 1] * ext[i + 1];
            }
            s
        };
        let vstride = strides(&ext);
        let n_vertices = ext.iter().product();
        let mut axis_offset = Vec::with_capacity(dim);
        let mut axis_stride = Vec::with_capacity(dim);
        let mut offset = 0;
        for a in 0..dim {
            let mut e = ext.clone();
            e[a] -= 1;
            axis_offset.push(offset);
            axis_stride.push(strides(&e));
            offset += e.iter().product::<usize>();
        }
        let n_edges = offset;
        let mut g = LatticeGeometry {
            dim,
            shape,
            lo,
            hi,
            vstride,
            n_vertices,
            axis_offset,
            axis_stride,
            edge_base: vec![0; n_edges],
            edge_axis: vec![0; n_edges],
            kinds: Vec::new(),
            plaquettes: Vec::new(),
            edge_plaquettes: vec![Vec::new(); n_edges],
            staples: vec![Vec::new(); n_edges],
            neighbors: Vec::new(),
            classes: Vec::new(),
        };
        for v in 0..n_vertices {
            let x = g.vertex_coords(v);
            for a in 0..dim {
                if let Some(e) = g.edge_id(&x, a) {
                    g.edge_base[e.0] = v;
                    g.edge_axis[e.0] = a;
                }
            }
        }
        let slab_like = matches!(g.shape, Shape::Slab { .. } | Shape::ChainSlab { .. });
        g.kinds = (0..n_edges)
            .map(|e| {
                let x = g.vertex_coords(g.edge_base[e]);
                let a = g.edge_axis[e];
                let in_face = |j: usize| j != a && (x[j] == g.lo[j] || x[j] == g.hi[j]);
                if !(0..dim).any(in_face) {
                    EdgeKind::Interior
                } else {
                    EdgeKind::Boundary { temporal: slab_like && in_face(0) }
                }
            })
            .collect();
        for v in 0..n_vertices {
            let x = g.vertex_coords(v);
            for a in 0..dim {
                for b in a + 1..dim {
                    if x[a] >= g.hi[a] || x[b] >= g.hi[b] {
                        continue;
                    }
                    let mut xa = x.clone();
                    xa[a] += 1;
                    let mut xb = x.clone();
                    xb[b] += 1;
                    let e1 = g.edge_id(&x, a).unwrap();
                    let e2 = g.edge_id(&xa, b).unwrap();
                    let e3 = g.edge_id(&xb, a).unwrap();
                    let e4 = g.edge_id(&x, b).unwrap();
                    let p = Plaquette {
                        edges: [
                            DirEdge::fwd(e1),
                            DirEdge::fwd(e2),
                            DirEdge { edge: e3, forward: false },
                            DirEdge { edge: e4, forward: false },
                        ],
                        base: v,
                        axes: (a, b),
                    };
                    let pid = g.plaquettes.len();
                    for (k, d) in p.edges.iter().enumerate() {
                        g.edge_plaquettes[d.edge.0].push(pid);
                        let rest = |i: usize| p.edges[(k + i) % 4];
                        let staple = if d.forward {
                            [rest(1), rest(2), rest(3)]
                        } else {
                            [rest(3).rev(), rest(2).rev(), rest(1).rev()]
                        };
                        g.staples[d.edge.0].push(staple);
                    }
                    g.plaquettes.push(p);
                }
            }
        }
        g.neighbors = (0..n_edges)
            .map(|e| {
                let set: BTreeSet<EdgeId> = g.edge_plaquettes[e]
                    .iter()
                    .flat_map(|&p| g.plaquettes[p].edges.iter().map(|d| d.edge))
                    .filter(|u| u.0 != e)
                    .collect();
                set.into_iter().collect()
            })
            .collect();
        let mut color = vec![usize::MAX; n_edges];
        for e in 0..n_edges {
            let used: BTreeSet<usize> = g.neighbors[e].iter().map(|u| color[u.0]).collect();
            color[e] = (0..).find(|c| !used.contains(c)).unwrap();
        }
        let n_colors = color.iter().copied().max().map_or(0, |c| c + 1);
        g.classes = vec![Vec::new(); n_colors];
        for (e, &c) in color.iter().enumerate() {
            g.classes[c].push(EdgeId(e));
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn shape(&self) -> &Shape {
        &self.shape
    }
    pub fn lo(&self) -> &[i32] {
        &self.lo
    }
    pub fn hi(&self) -> &[i32] {
        &self.hi
    }
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }
    pub fn n_edges(&self) -> usize {
        self.edge_base.len()
    }
    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.n_edges()).map(EdgeId)
    }
    pub fn n_plaquettes(&self) -> usize {
        self.plaquettes.len()
    }
    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }
    /// Plaquettes containing `e`.
    pub fn plaquettes_of(&self, e: EdgeId) -> &[usize] {
        &self.edge_plaquettes[e.0]
    }
    /// For each plaquette through `e`, the three directed edges whose product
    /// `S` satisfies `Re Tr ω_p = Re Tr(ω_e S)`.
    pub fn staples(&self, e: EdgeId) -> &[[DirEdge; 3]] {
        &self.staples[e.0]
    }
    /// Edges sharing a plaquette with `e`.
    pub fn neighbors(&self, e: EdgeId) -> &[EdgeId] {
        &self.neighbors[e.0]
    }
    /// Partition of the edges into classes whose members share no plaquette.
    pub fn checkerboard(&self) -> &[Vec<EdgeId>] {
        &self.classes
    }

    pub fn contains(&self, x: &[i32]) -> bool {
        x.len() == self.dim && (0..self.dim).all(|i| self.lo[i] <= x[i] && x[i] <= self.hi[i])
    }

    pub fn vertex_index(&self, x: &[i32]) -> Option<usize> {
        self.contains(x)
            .then(|| (0..self.dim).map(|i| (x[i] - self.lo[i]) as usize * self.vstride[i]).sum())
    }

    pub fn vertex_coords(&self, v: usize) -> Vec<i32> {
        (0..self.dim)
            .map(|i| {
                let ext = (self.hi[i] - self.lo[i] + 1) as usize;
                self.lo[i] + ((v / self.vstride[i]) % ext) as i32
            })
            .collect()
    }

    /// Edge from `x` to `x + e_axis`, if both endpoints are in the box.
    pub fn edge_id(&self, x: &[i32], axis: usize) -> Option<EdgeId> {
        if axis >= self.dim || !self.contains(x) || x[axis] >= self.hi[axis] {
            return None;
        }
        let s = &self.axis_stride[axis];
        Some(EdgeId(self.axis_offset[axis] + (0..self.dim).map(|i| (x[i] - self.lo[i]) as usize * s[i]).sum::<usize>()))
    }

    pub fn resolve(&self, r: &EdgeRef) -> Result<DirEdge> {
        let mut base = r.start.clone();
        if !r.positive {
            if r.axis < base.len() {
                base[r.axis] -= 1;
            }
        }
        let e = self
            .edge_id(&base, r.axis)
            .ok_or_else(|| Error::Geometry(format!("edge {r:?} is outside the lattice")))?;
        Ok(DirEdge { edge: e, forward: r.positive })
    }

    pub fn edge_base(&self, e: EdgeId) -> Vec<i32> {
        self.vertex_coords(self.edge_base[e.0])
    }
    pub fn edge_base_index(&self, e: EdgeId) -> usize {
        self.edge_base[e.0]
    }
    pub fn edge_axis(&self, e: EdgeId) -> usize {
        self.edge_axis[e.0]
    }

    /// Start and end vertex of a directed edge.
    pub fn endpoints(&self, d: DirEdge) -> (Vec<i32>, Vec<i32>) {
        let a = self.edge_base(d.edge);
        let mut b = a.clone();
        b[self.edge_axis(d.edge)] += 1;
        if d.forward {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn kind(&self, e: EdgeId) -> EdgeKind {
        self.kinds[e.0]
    }
    pub fn is_boundary(&self, e: EdgeId) -> bool {
        matches!(self.kinds[e.0], EdgeKind::Boundary { .. })
    }
    pub fn is_temporal_boundary(&self, e: EdgeId) -> bool {
        matches!(self.kinds[e.0], EdgeKind::Boundary { temporal: true })
    }
    pub fn is_spatial_boundary(&self, e: EdgeId) -> bool {
        matches!(self.kinds[e.0], EdgeKind::Boundary { temporal: false })
    }
    pub fn boundary_edges(&self) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.is_boundary(e)).collect()
    }
    pub fn interior_edges(&self) -> Vec<EdgeId> {
        self.edges().filter(|&e| !self.is_boundary(e)).collect()
    }
    pub fn spatial_boundary_edges(&self) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.is_spatial_boundary(e)).collect()
    }

    pub fn midpoint(&self, e: EdgeId) -> Vec<f64> {
        let mut m: Vec<f64> = self.edge_base(e).into_iter().map(f64::from).collect();
        m[self.edge_axis(e)] += 0.5;
        m
    }

    /// Euclidean distance between edge midpoints.
    pub fn dist(&self, e: EdgeId, u: EdgeId) -> f64 {
        let (a, b) = (self.midpoint(e), self.midpoint(u));
        a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// Distance from `e` to the nearest spatial boundary edge.
    pub fn dist_to_spatial_boundary(&self, e: EdgeId) -> f64 {
        self.spatial_boundary_edges()
            .into_iter()
            .map(|u| self.dist(e, u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `e` and `u` both fit in some translate of `{0..width}^d`.
    pub fn in_common_cube(&self, e: EdgeId, u: EdgeId, width: i32) -> bool {
        let (a0, a1) = self.endpoints(DirEdge::fwd(e));
        let (b0, b1) = self.endpoints(DirEdge::fwd(u));
        (0..self.dim).all(|i| {
            let vals = [a0[i], a1[i], b0[i], b1[i]];
            vals.iter().max().unwrap() - vals.iter().min().unwrap() <= width
        })
    }

    pub fn edge_in_box(&self, e: EdgeId, b: &SubBox) -> bool {
        let (x, y) = self.endpoints(DirEdge::fwd(e));
        b.contains_vertex(&x) && b.contains_vertex(&y)
    }

    /// Edge of the box lying in one of its faces.
    pub fn edge_on_box_face(&self, e: EdgeId, b: &SubBox) -> bool {
        let x = self.edge_base(e);
        let a = self.edge_axis(e);
        self.edge_in_box(e, b) && (0..self.dim).any(|j| j != a && (x[j] == b.lo[j] || x[j] == b.hi[j]))
    }

    pub fn edges_in_box(&self, b: &SubBox) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.edge_in_box(e, b)).collect()
    }

    pub fn box_boundary(&self, b: &SubBox) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.edge_on_box_face(e, b)).collect()
    }

    pub fn box_interior(&self, b: &SubBox) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.edge_in_box(e, b) && !self.edge_on_box_face(e, b)).collect()
    }

    /// A sub-box as a geometry of its own (same coordinates), plus the map
    /// from its edge ids to edge ids of `self`.
    pub fn sub_geometry(&self, b: &SubBox) -> Result<(LatticeGeometry, Vec<EdgeId>)> {
        if !self.contains(&b.lo) || !self.contains(&b.hi) {
            return Err(Error::Geometry(format!("{b:?} is not inside the lattice")));
        }
        let sub = LatticeGeometry::new(self.dim, Shape::Box { lo: b.lo.clone(), hi: b.hi.clone() })?;
        let map = sub
            .edges()
            .map(|e| self.edge_id(&sub.edge_base(e), sub.edge_axis(e)).expect("sub-box edge exists in parent"))
            .collect();
        Ok((sub, map))
    }

    /// Axis-aligned `R × T` loop: `r` steps along `plane.0`, `t` along
    /// `plane.1`, then back, starting at `anchor`.
    pub fn rect_loop(&self, anchor: &[i32], plane: (usize, usize), r: i32, t: i32) -> Result<Loop> {
        let (a, b) = plane;
        if a == b || a >= self.dim || b >= self.dim {
            return Err(Error::Geometry(format!("invalid plane {plane:?}")));
        }
        if r < 1 || t < 1 {
            return Err(Error::Geometry(format!("loop sides must be positive, got {r}x{t}")));
        }
        let mut x = anchor.to_vec();
        let mut edges = Vec::new();
        let steps = [(a, 1, r), (b, 1, t), (a, -1, r), (b, -1, t)];
        for &(axis, dir, len) in &steps {
            for _ in 0..len {
                let d = self.resolve(&EdgeRef { start: x.clone(), axis, positive: dir > 0 }).map_err(|_| {
                    Error::Geometry(format!("{r}x{t} loop at {anchor:?} in plane {plane:?} does not fit"))
                })?;
                edges.push(d);
                x[axis] += dir;
            }
        }
        Ok(Loop { edges })
    }

    /// Validate a closed path.
    pub fn make_loop(&self, edges: Vec<DirEdge>) -> Result<Loop> {
        if edges.is_empty() {
            return Err(Error::Geometry("empty loop".into()));
        }
        for w in 0..edges.len() {
            let end = self.endpoints(edges[w]).1;
            let next = self.endpoints(edges[(w + 1) % edges.len()]).0;
            if end != next {
                return Err(Error::Geometry(format!("path is not closed at step {w}")));
            }
        }
        Ok(Loop { edges })
    }

    /// Edges along axis 0 from the bottom to the top layer at the given
    /// spatial coordinates.
    pub fn vertical_chain(&self, spatial: &[i32]) -> Result<Vec<EdgeId>> {
        if spatial.len() + 1 != self.dim {
            return Err(Error::Geometry(format!("chain position needs {} coordinates", self.dim - 1)));
        }
        (self.lo[0]..self.hi[0])
            .map(|t| {
                let mut x = vec![t];
                x.extend_from_slice(spatial);
                self.edge_id(&x, 0).ok_or_else(|| Error::Geometry(format!("chain at {spatial:?} leaves the lattice")))
            })
            .collect()
    }

    /// Axis-0 edges from the bottom layer to the next one.
    pub fn bottom_layer_edges(&self) -> Vec<EdgeId> {
        self.edges()
            .filter(|&e| self.edge_axis(e) == 0 && self.edge_base(e)[0] == self.lo[0])
            .collect()
    }

    fn neighborhood_box(&self, e: EdgeId, r: i32, clamp: bool) -> SubBox {
        let x = self.edge_base(e);
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for i in 0..self.dim {
            let (l, h) = (self.lo[i], self.hi[i]);
            if clamp && h - l <= 4 * r {
                lo.push(l);
                hi.push(h);
                continue;
            }
            let a = if x[i] < l + 2 * r {
                l
            } else if x[i] > h - 2 * r {
                h - 4 * r
            } else {
                x[i] - 2 * r
            };
            lo.push(a);
            hi.push(a + 4 * r);
        }
        SubBox { lo, hi }
    }

    fn neighborhood_of_box(&self, cube: SubBox) -> Neighborhood {
        Neighborhood { edges: self.edges_in_box(&cube), boundary: self.box_boundary(&cube), cube }
    }

    /// Cube of side `4r` around a boundary edge of a cube geometry, for `1 <= r <= N/4`.
    pub fn r_neighborhood(&self, e: EdgeId, r: i32) -> Result<Neighborhood> {
        let n = match self.shape {
            Shape::Cube { n } => n,
            _ => return Err(Error::Geometry("neighborhoods are defined on cube geometries".into())),
        };
        if r < 1 || 4 * r > n {
            return Err(Error::OutOfRange(format!("need 1 <= r <= N/4, got r={r}, N={n}")));
        }
        if e.0 >= self.n_edges() || !self.is_boundary(e) {
            return Err(Error::NotBoundaryEdge(format!("{e:?}")));
        }
        Ok(self.neighborhood_of_box(self.neighborhood_box(e, r, false)))
    }

    /// Same construction on any box, with axes shorter than `4r` covered
    /// entirely instead of rejected.
    pub fn clamped_neighborhood(&self, e: EdgeId, r: i32) -> Result<Neighborhood> {
        if r < 1 {
            return Err(Error::OutOfRange(format!("need r >= 1, got {r}")));
        }
        if e.0 >= self.n_edges() || !self.is_boundary(e) {
            return Err(Error::NotBoundaryEdge(format!("{e:?}")));
        }
        Ok(self.neighborhood_of_box(self.neighborhood_box(e, r, true)))
    }

    /// Union of neighborhoods over a set of boundary edges.
    pub fn union_neighborhood(&self, a: &[EdgeId], r: i32, clamp: bool) -> Result<Vec<EdgeId>> {
        let mut set = BTreeSet::new();
        for &e in a {
            let nb = if clamp { self.clamped_neighborhood(e, r)? } else { self.r_neighborhood(e, r)? };
            set.extend(nb.edges);
        }
        Ok(set.into_iter().collect())
    }

    /// Translates of the `2N`-cube spanning the slab's temporal extent and
    /// staying strictly inside its spatial extent.
    pub fn cubes_in_slab(&self) -> Result<Vec<SubBox>> {
        let (m, n) = match self.shape {
            Shape::Slab { m, n } => (m, n),
            _ => return Err(Error::Geometry("cube covers are defined on slabs".into())),
        };
        let starts: Vec<i32> = (-m + 1..).take_while(|a| a + 2 * n < m).collect();
        let mut out = Vec::new();
        if starts.is_empty() {
            return Ok(out);
        }
        let k = self.dim - 1;
        let mut idx = vec![0usize; k];
        loop {
            let mut lo = vec![-n];
            let mut hi = vec![n];
            for &j in &idx {
                lo.push(starts[j]);
                hi.push(starts[j] + 2 * n);
            }
            out.push(SubBox { lo, hi });
            let mut p = k;
            loop {
                if p == 0 {
                    return Ok(out);
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < starts.len() {
                    break;
                }
                idx[p] = 0;
            }
        }
    }

    /// Indices of cubes having `e` as an interior edge.
    pub fn cubes_containing(&self, e: EdgeId, cubes: &[SubBox]) -> Vec<usize> {
        cubes
            .iter()
            .enumerate()
            .filter(|(_, b)| self.edge_in_box(e, b) && !self.edge_on_box_face(e, b))
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_small_cubes() {
        let g = LatticeGeometry::cube(2, 1).unwrap();
        assert_eq!((g.n_vertices(), g.n_edges(), g.n_plaquettes()), (9, 12, 4));
        assert_eq!(g.interior_edges().len(), 4);
        let g = LatticeGeometry::cube(3, 1).unwrap();
        assert_eq!((g.n_edges(), g.n_plaquettes()), (54, 36));
    }

    #[test]
    fn grid_edge_counts() {
        let g = LatticeGeometry::grid(&[4, 4]).unwrap();
        assert_eq!(g.n_edges(), 24);
        assert_eq!(g.n_plaquettes(), 9);
        assert_eq!(g.interior_edges().len(), 12);
    }

    #[test]
    fn plaquette_traversal_order() {
        let g = LatticeGeometry::grid(&[2, 2]).unwrap();
        let p = &g.plaquettes()[0];
        let path: Vec<_> = p.edges.iter().map(|&d| g.endpoints(d)).collect();
        assert_eq!(path[0], (vec![0, 0], vec![1, 0]));
        assert_eq!(path[1], (vec![1, 0], vec![1, 1]));
        assert_eq!(path[2], (vec![1, 1], vec![0, 1]));
        assert_eq!(path[3], (vec![0, 1], vec![0, 0]));
    }

    #[test]
    fn staples_close_the_plaquette() {
        let g = LatticeGeometry::cube(3, 1).unwrap();
        for e in g.edges() {
            for s in g.staples(e) {
                let start = g.endpoints(DirEdge::fwd(e)).1;
                let mut x = start;
                for d in s {
                    let (a, b) = g.endpoints(*d);
                    assert_eq!(a, x);
                    x = b;
                }
                assert_eq!(x, g.endpoints(DirEdge::fwd(e)).0);
            }
        }
    }

    #[test]
    fn checkerboard_classes_share_no_plaquette() {
        let g = LatticeGeometry::slab(3, 3, 1).unwrap();
        let total: usize = g.checkerboard().iter().map(Vec::len).sum();
        assert_eq!(total, g.n_edges());
        for class in g.checkerboard() {
            for &e in class {
                assert!(g.neighbors(e).iter().all(|u| !class.contains(u)));
            }
        }
    }

    #[test]
    fn neighborhood_boxes_match_examples() {
        let g = LatticeGeometry::cube(2, 4).unwrap();
        let e = g.edge_id(&[0, -4], 0).unwrap();
        let nb = g.r_neighborhood(e, 1).unwrap();
        assert_eq!(nb.cube, SubBox { lo: vec![-2, -4], hi: vec![2, 0] });
        let c = g.edge_id(&[-4, -4], 0).unwrap();
        assert_eq!(g.r_neighborhood(c, 1).unwrap().cube, SubBox { lo: vec![-4, -4], hi: vec![0, 0] });
        assert!(matches!(g.r_neighborhood(c, 2), Err(Error::OutOfRange(_))));
        let inner = g.edge_id(&[0, 0], 0).unwrap();
        assert!(matches!(g.r_neighborhood(inner, 1), Err(Error::NotBoundaryEdge(_))));
    }

    #[test]
    fn far_neighborhoods_are_disjoint() {
        let g = LatticeGeometry::cube(2, 8).unwrap();
        let a = g.edge_id(&[-8, -8], 0).unwrap();
        let b = g.edge_id(&[7, 8], 0).unwrap();
        let single = g.r_neighborhood(a, 1).unwrap().edges.len();
        assert_eq!(single, 40);
        assert_eq!(g.union_neighborhood(&[a, b], 1, false).unwrap().len(), 2 * single);
    }

    #[test]
    fn slab_cube_cover() {
        let g = LatticeGeometry::slab(2, 3, 1).unwrap();
        let cubes = g.cubes_in_slab().unwrap();
        assert_eq!(cubes.len(), 3);
        assert_eq!(cubes[0], SubBox { lo: vec![-1, -2], hi: vec![1, 0] });
        let g3 = LatticeGeometry::slab(3, 3, 1).unwrap();
        assert_eq!(g3.cubes_in_slab().unwrap().len(), 9);
    }

    #[test]
    fn slab_boundary_classes() {
        let g = LatticeGeometry::slab(2, 3, 1).unwrap();
        assert_eq!(g.interior_edges().len(), 16);
        for e in g.spatial_boundary_edges() {
            assert_eq!(g.edge_axis(e), 0);
            assert_eq!(g.edge_base(e)[1].abs(), 3);
        }
        assert_eq!(g.spatial_boundary_edges().len(), 4);
    }

    #[test]
    fn chain_through_half_slab() {
        let g = LatticeGeometry::chain_slab(2, 2, 3).unwrap();
        assert_eq!(g.vertical_chain(&[0]).unwrap().len(), 3);
        let g = LatticeGeometry::slab(2, 2, 2).unwrap();
        assert_eq!(g.vertical_chain(&[0]).unwrap().len(), 4);
    }

    #[test]
    fn loop_validation() {
        let g = LatticeGeometry::grid(&[4, 4]).unwrap();
        let l = g.rect_loop(&[0, 0], (0, 1), 3, 3).unwrap();
        assert_eq!(l.edges.len(), 12);
        assert!(g.make_loop(l.edges.clone()).is_ok());
        assert!(g.rect_loop(&[1, 0], (0, 1), 3, 1).is_err());
        let mut open = l.edges;
        open.pop();
        assert!(g.make_loop(open).is_err());
    }

    #[test]
    fn sub_geometry_maps_edges() {
        let g = LatticeGeometry::slab(2, 3, 1).unwrap();
        let b = &g.cubes_in_slab().unwrap()[1];
        let (sub, map) = g.sub_geometry(b).unwrap();
        assert_eq!(sub.n_edges(), 12);
        for e in sub.edges() {
            assert_eq!(sub.edge_base(e), g.edge_base(map[e.0]));
            assert_eq!(sub.is_boundary(e), g.edge_on_box_face(map[e.0], b));
        }
    }
}
