use serde::{Deserialize, Serialize};

use crate::coupling::Tracking;
use crate::error::{Error, Result};
use crate::groups::GroupSpec;
use crate::lattice::{LatticeGeometry, Shape};
use crate::model::{Algorithm, SamplerParams};
use crate::observables::{LocalFunction, WilsonCell};

pub const SCHEMA_VERSION: u32 = 1;

/// One experiment description. Every subcommand reads the shared header
/// and its own section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub group: GroupSpec,
    pub beta: f64,
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_states: Option<u64>,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wilson: Option<WilsonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_test: Option<CenterTestSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couple: Option<CoupleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrSection>,
}

/// Lattice shape. Axis 0 is time for slabs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Cube { dim: usize, n: i32 },
    Slab { dim: usize, m: i32, n: i32 },
    ChainSlab { dim: usize, m: i32, n: i32 },
    Box { lo: Vec<i32>, hi: Vec<i32> },
    /// `extent[i]` vertices along axis `i`, starting at the origin.
    Grid { extent: Vec<i32> },
}

impl GeometrySpec {
    pub fn build(&self) -> Result<LatticeGeometry> {
        let g = match self {
            GeometrySpec::Cube { dim, n } => LatticeGeometry::new(*dim, Shape::Cube { n: *n }),
            GeometrySpec::Slab { dim, m, n } => LatticeGeometry::new(*dim, Shape::Slab { m: *m, n: *n }),
            GeometrySpec::ChainSlab { dim, m, n } => LatticeGeometry::new(*dim, Shape::ChainSlab { m: *m, n: *n }),
            GeometrySpec::Box { lo, hi } => LatticeGeometry::new(lo.len(), Shape::Box { lo: lo.clone(), hi: hi.clone() }),
            GeometrySpec::Grid { extent } => LatticeGeometry::grid(extent),
        };
        g.map_err(|e| Error::config("geometry", e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    #[default]
    Free,
    Identity,
    /// Independent Haar draws on every boundary edge.
    Haar,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default)]
    pub mode: BoundaryMode,
    /// Random stream of the Haar draw, so several draws can share one seed.
    #[serde(default)]
    pub stream: u64,
    /// Index into the group's center list; twists the bottom-layer spatial
    /// boundary edges by that element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub therm: usize,
    pub sweeps: usize,
    pub stride: usize,
    /// Heat bath for finite groups and Metropolis otherwise when left out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    pub proposal_width: f64,
    pub tune: bool,
    pub chains: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let p = SamplerParams::default();
        SamplerSection {
            therm: p.therm,
            sweeps: p.sweeps,
            stride: p.stride,
            algorithm: None,
            proposal_width: p.proposal_width,
            tune: p.tune,
            chains: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Lower corner of the lattice when left out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<i32>>,
    #[serde(default = "time_space_plane")]
    pub plane: [usize; 2],
    pub r: i32,
    pub t: i32,
}

fn time_space_plane() -> [usize; 2] {
    [0, 1]
}

fn fund() -> String {
    "fund".into()
}

impl LoopSpec {
    pub fn unit() -> Self {
        LoopSpec { name: Some("plaquette".into()), anchor: None, plane: [0, 1], r: 1, t: 1 }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("W{}x{}", self.r, self.t))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default)]
    pub loops: Vec<LoopSpec>,
    #[serde(default = "fund")]
    pub rep: String,
    /// Emit every measurement as its own record.
    #[serde(default = "yes")]
    pub series: bool,
    /// Also enumerate the exact values (cyclic groups) and report z-scores.
    #[serde(default)]
    pub compare_exact: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    /// Enumerate when the state space fits under the cap, contract otherwise.
    #[default]
    Auto,
    Enumerate,
    Contract,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSection {
    #[serde(default)]
    pub loops: Vec<LoopSpec>,
    #[serde(default = "fund")]
    pub rep: String,
    #[serde(default)]
    pub method: ExactMethod,
    /// Compare every loop against `W(1,1)^{R T}`.
    #[serde(default)]
    pub factorization: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_norm: Option<LinkNormSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientSection>,
}

/// Worst conditional link norm over every neighbor assignment, with the
/// perimeter bound `|W| <= m (1 - ε)^{max(R, T)}` checked on the exact loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkNormSection {
    #[serde(default = "min_gap")]
    pub min_gap: f64,
}

fn min_gap() -> f64 {
    0.05
}

/// U(1) boundary-angle derivative against the covariance formula. The
/// observable is `Re W` of `observable`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientSection {
    pub edge: EdgeSpec,
    pub free: Vec<EdgeSpec>,
    pub observable: LoopSpec,
    #[serde(default = "grad_nodes")]
    pub nodes: usize,
    #[serde(default = "grad_step")]
    pub step: f64,
    /// Haar values on the fixed links, drawn from this stream; identity when left out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub haar_stream: Option<u64>,
    #[serde(default = "grad_tol")]
    pub tol: f64,
}

fn grad_nodes() -> usize {
    32
}

fn grad_step() -> f64 {
    1e-4
}

fn grad_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub base: Vec<i32>,
    pub axis: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilsonSource {
    /// Monte Carlo.
    #[default]
    Mc,
    Exact,
    /// Cells given in the config.
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilsonSection {
    #[serde(default)]
    pub source: WilsonSource,
    #[serde(default = "three")]
    pub r_max: i32,
    #[serde(default = "three")]
    pub t_max: i32,
    /// Loops run `R` steps along the first axis and `T` along the second.
    #[serde(default = "space_time_plane")]
    pub plane: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<i32>>,
    #[serde(default = "fund")]
    pub rep: String,
    #[serde(default)]
    pub method: ExactMethod,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<WilsonCell>,
}

fn three() -> i32 {
    3
}

fn space_time_plane() -> [usize; 2] {
    [1, 0]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMethod {
    /// Exact for cyclic groups, Monte Carlo otherwise.
    #[default]
    Auto,
    Enumerate,
    Contract,
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterTestSection {
    /// Representations to test; each gets every chain-variable index choice.
    #[serde(default = "fund_list")]
    pub reps: Vec<String>,
    /// Spatial coordinates of the vertical chain; the origin when left out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec<i32>>,
    /// Boundary conditions to average over; the top-level one when empty.
    #[serde(default)]
    pub ensemble: Vec<BoundarySpec>,
    #[serde(default)]
    pub method: CenterMethod,
    /// Random configurations on which `H(τ(ω)) = H(ω)` is checked.
    #[serde(default)]
    pub invariance_samples: usize,
    #[serde(default = "zero_tol")]
    pub tol: f64,
}

fn fund_list() -> Vec<String> {
    vec![fund()]
}

fn zero_tol() -> f64 {
    1e-12
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupleMode {
    /// Iterate cube couplings on the slab.
    #[default]
    Slab,
    /// Randomized checks of the coupling lemmas on small discrete measures.
    Bounds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleSection {
    #[serde(default)]
    pub mode: CoupleMode,
    #[serde(default = "one_i32")]
    pub r: i32,
    #[serde(default = "yes")]
    pub clamp: bool,
    #[serde(default = "iterations")]
    pub iterations: usize,
    #[serde(default = "couple_tol")]
    pub tol: f64,
    #[serde(default)]
    pub tracking: Tracking,
    /// Second boundary condition; the first one twisted by the center
    /// element at index 1 when left out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<BoundarySpec>,
    /// Random instances per lemma in `bounds` mode.
    #[serde(default = "trials")]
    pub trials: usize,
    #[serde(default = "max_states")]
    pub max_states: usize,
}

fn one_i32() -> i32 {
    1
}

fn iterations() -> usize {
    1000
}

fn couple_tol() -> f64 {
    1e-10
}

fn trials() -> usize {
    10_000
}

fn max_states() -> usize {
    16
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrMethod {
    #[default]
    Mc,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrSection {
    pub f: LocalFunction,
    pub g: LocalFunction,
    pub axis: usize,
    pub shifts: Vec<i32>,
    #[serde(default)]
    pub method: CorrMethod,
}

/// Parse a config, reporting the key path of the first schema violation.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("", e.to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(Error::config("schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", cfg.schema)));
    }
    if !cfg.beta.is_finite() {
        return Err(Error::config("beta", "must be finite"));
    }
    Ok(cfg)
}

pub fn to_toml(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Serde(e.to_string()))
}

impl RunConfig {
    /// Fill every defaulted field that depends on the rest of the config,
    /// so the echoed config reproduces the run without further inference.
    pub fn resolve(&mut self, geom: &LatticeGeometry) {
        if self.sampler.algorithm.is_none() {
            self.sampler.algorithm =
                Some(if self.group.is_finite() { Algorithm::HeatBath } else { Algorithm::Metropolis });
        }
        let lo = geom.lo().to_vec();
        let fill = |l: &mut LoopSpec| {
            l.anchor.get_or_insert_with(|| lo.clone());
            l.name.get_or_insert_with(|| format!("W{}x{}", l.r, l.t));
        };
        if let Some(s) = &mut self.simulate {
            if s.loops.is_empty() {
                s.loops.push(LoopSpec::unit());
            }
            s.loops.iter_mut().for_each(fill);
        }
        if let Some(s) = &mut self.exact {
            if s.loops.is_empty() && s.gradient.is_none() {
                s.loops.push(LoopSpec::unit());
            }
            s.loops.iter_mut().for_each(fill);
            if let Some(g) = &mut s.gradient {
                fill(&mut g.observable);
            }
        }
        if let Some(s) = &mut self.wilson {
            if s.source != WilsonSource::Table {
                s.anchor.get_or_insert_with(|| lo.clone());
            }
        }
        if let Some(s) = &mut self.center_test {
            s.position.get_or_insert_with(|| vec![0; geom.dim() - 1]);
            if s.ensemble.is_empty() {
                s.ensemble.push(self.boundary.clone());
            }
        }
        if let Some(s) = &mut self.couple {
            if s.mode == CoupleMode::Slab && s.second.is_none() {
                s.second = Some(BoundarySpec { twist: Some(1), ..self.boundary.clone() });
            }
        }
    }

    pub fn sampler_params(&self) -> SamplerParams {
        let s = &self.sampler;
        SamplerParams {
            beta: self.beta,
            therm: s.therm,
            sweeps: s.sweeps,
            stride: s.stride,
            seed: self.seed,
            algorithm: s.algorithm.unwrap_or(Algorithm::HeatBath),
            proposal_width: s.proposal_width,
            tune: s.tune,
        }
    }

    pub fn cap(&self) -> u64 {
        self.cap_states.unwrap_or(crate::exact::DEFAULT_CAP)
    }
}
