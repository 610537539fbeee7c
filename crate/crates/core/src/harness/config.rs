use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decay::decay_box;
use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Geometry, ScalarField};
use crate::solver::{exact_decay_solution, riemann_exact, Boundary, NumericalFlux, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Initial data catalogue. Data given at `t_start > 0` is the exact
/// solution at that time where one is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Constant {
        value: f64,
    },
    /// Step along axis 0 at `x0`.
    Riemann {
        ul: f64,
        ur: f64,
        #[serde(default)]
        x0: f64,
    },
    /// `x^{1/m}` on `[0, 1]` for `a(v) = v^m`.
    DecayExample {
        #[serde(default = "one")]
        m: u32,
    },
    /// `value` on `(a, b)` along axis 0, zero elsewhere.
    Plateau {
        a: f64,
        b: f64,
        value: f64,
    },
    /// Cosine bump `height * cos^2(pi |x - c| / 2 radius)` inside the ball.
    Bump {
        center: Vec<f64>,
        radius: f64,
        height: f64,
    },
    /// `mean + amplitude sin(2 pi periods x / L)` along axis 0.
    Sine {
        mean: f64,
        amplitude: f64,
        periods: u32,
    },
    /// Piecewise constant along axis 0 with seeded random values.
    RandomPieces {
        pieces: usize,
        lo: f64,
        hi: f64,
    },
}

fn one() -> u32 {
    1
}

impl FromStr for InitialCondition {
    type Err = Error;

    /// `kind[:p1,p2,...]`, e.g. `riemann:1,0`, `plateau:0,2,1`, `decay_example:2`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let p: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::input(format!("bad number `{a}` in `{s}`")))
                })
                .collect::<Result<_>>()?
        };
        let need = |n: usize| -> Result<()> {
            if p.len() < n {
                Err(Error::input(format!("`{kind}` needs {n} parameters")))
            } else {
                Ok(())
            }
        };
        Ok(match kind {
            "constant" => {
                need(1)?;
                Self::Constant { value: p[0] }
            }
            "riemann" => {
                need(2)?;
                Self::Riemann { ul: p[0], ur: p[1], x0: p.get(2).copied().unwrap_or(0.0) }
            }
            "decay_example" => Self::DecayExample {
                m: p.first().map(|&m| m as u32).unwrap_or(1),
            },
            "plateau" => {
                need(3)?;
                Self::Plateau { a: p[0], b: p[1], value: p[2] }
            }
            "bump" => {
                need(3)?;
                let d = p.len() - 2;
                Self::Bump { center: p[..d].to_vec(), radius: p[d], height: p[d + 1] }
            }
            "sine" => {
                need(3)?;
                Self::Sine { mean: p[0], amplitude: p[1], periods: p[2] as u32 }
            }
            "random_pieces" => {
                need(3)?;
                Self::RandomPieces { pieces: p[0] as usize, lo: p[1], hi: p[2] }
            }
            _ => return Err(Error::input(format!("unknown initial condition `{kind}`"))),
        })
    }
}

impl InitialCondition {
    fn default_domain(&self, flux: &FluxSpec, dim: usize, t_start: f64, t_end: f64) -> Domain {
        match self {
            Self::DecayExample { .. } => {
                let (lo, hi) = decay_box(flux, &vec![0.0; dim], &vec![1.0; dim], (0.0, 1.0), t_end - t_start, 0.25);
                Domain { lo, hi }
            }
            _ => Domain { lo: vec![-1.0; dim], hi: vec![1.0; dim] },
        }
    }

    fn is_burgers(flux: &FluxSpec) -> bool {
        flux.name == "burgers" || flux.name == "power:1"
    }

    /// Field on `g` at time `t`.
    pub fn field(&self, g: &Geometry, flux: &FluxSpec, t: f64, seed: u64) -> Result<ScalarField> {
        let span = g.upper()[0] - g.lower()[0];
        let lo0 = g.lower()[0];
        match self {
            Self::Constant { value } => ScalarField::constant(g.clone(), *value, t),
            Self::Riemann { ul, ur, x0 } => {
                if t > 0.0 {
                    if g.ndim() != 1 {
                        return Err(Error::Unsupported("exact Riemann data at t > 0 is 1D only".into()));
                    }
                    let vals = (0..g.len())
                        .map(|i| riemann_exact(flux, *ul, *ur, (g.center(i)[0] - x0) / t))
                        .collect::<Result<Vec<f64>>>()?;
                    ScalarField::new(g.clone(), vals, t)
                } else {
                    ScalarField::from_fn(g.clone(), t, |p| if p[0] < *x0 { *ul } else { *ur })
                }
            }
            Self::DecayExample { m } => {
                if g.ndim() == 1 {
                    ScalarField::from_fn(g.clone(), t, |p| exact_decay_solution(*m, t, p[0]))
                } else if t == 0.0 {
                    let m = *m as f64;
                    ScalarField::from_fn(g.clone(), t, |p| {
                        if p.iter().all(|&x| (0.0..=1.0).contains(&x)) {
                            p.iter().cloned().fold(1.0, f64::min).powf(1.0 / m)
                        } else {
                            0.0
                        }
                    })
                } else {
                    Err(Error::Unsupported("multi-dimensional decay data at t > 0".into()))
                }
            }
            Self::Plateau { a, b, value } => {
                if t > 0.0 {
                    if !(Self::is_burgers(flux) && *value > 0.0 && t < 2.0 * (b - a) / value) {
                        return Err(Error::Unsupported(
                            "plateau data at t > 0 needs Burgers, a positive value and a live plateau".into(),
                        ));
                    }
                    let (a, b, v) = (*a, *b, *value);
                    ScalarField::from_fn(g.clone(), t, |p| {
                        let x = p[0];
                        if x <= a {
                            0.0
                        } else if x < a + v * t {
                            (x - a) / t
                        } else if x < b + 0.5 * v * t {
                            v
                        } else {
                            0.0
                        }
                    })
                } else {
                    ScalarField::from_fn(g.clone(), t, |p| if p[0] > *a && p[0] < *b { *value } else { 0.0 })
                }
            }
            Self::Bump { center, radius, height } => {
                if center.len() != g.ndim() {
                    return Err(Error::input("bump center dimension mismatch"));
                }
                ScalarField::from_fn(g.clone(), t, |p| {
                    let r = p.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt();
                    if r < *radius {
                        height * (std::f64::consts::FRAC_PI_2 * r / radius).cos().powi(2)
                    } else {
                        0.0
                    }
                })
            }
            Self::Sine { mean, amplitude, periods } => {
                let k = 2.0 * std::f64::consts::PI * *periods as f64 / span;
                ScalarField::from_fn(g.clone(), t, |p| mean + amplitude * (k * (p[0] - lo0)).sin())
            }
            Self::RandomPieces { pieces, lo, hi } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let vals: Vec<f64> = (0..(*pieces).max(1)).map(|_| rng.gen_range(*lo..=*hi)).collect();
                let n = vals.len();
                ScalarField::from_fn(g.clone(), t, |p| {
                    let k = (((p[0] - lo0) / span) * n as f64).floor().clamp(0.0, (n - 1) as f64);
                    vals[k as usize]
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotSpec {
    EveryStep,
    Times(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationStage {
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureStage {
    /// Jump-set radii in units of the spatial spacing.
    #[serde(default = "default_radii")]
    pub radii_cells: Vec<f64>,
    #[serde(default = "auto")]
    pub threshold: Threshold,
    /// Spatial points of the final frame to fit a shock at.
    #[serde(default)]
    pub blowup_points: Vec<Vec<f64>>,
    #[serde(default = "default_blowup_radii")]
    pub blowup_radii_cells: Vec<f64>,
}

fn default_radii() -> Vec<f64> {
    vec![0.5]
}

fn auto() -> Threshold {
    Threshold::Auto
}

fn default_blowup_radii() -> Vec<f64> {
    vec![64.0, 32.0, 16.0, 8.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegiorgiStage {
    pub center: Vec<f64>,
    pub scale: f64,
    /// `None` means `2 sup_{B_1} u`.
    #[serde(default, rename = "U")]
    pub u_top: Option<f64>,
    #[serde(default = "default_steps", rename = "K")]
    pub steps: usize,
}

fn default_steps() -> usize {
    crate::degiorgi::DEFAULT_LADDER_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicsStage {
    pub x0: Vec<f64>,
    pub v0: f64,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStage {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub t_min: Option<f64>,
    /// Times added to the log-spaced samples.
    #[serde(default)]
    pub extra_times: Vec<f64>,
}

fn default_samples() -> usize {
    24
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stages {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipation: Option<DissipationStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degiorgi: Option<DegiorgiStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characteristics: Option<CharacteristicsStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    DissipationTotal { expected: f64, rel_tol: f64 },
    /// Every flagged cell within `cells` spacings of `x = offset + speed t`.
    JumpBand { speed: f64, offset: f64, cells: f64 },
    NoJumps,
    DecayExponent { expected: f64, tol: f64 },
    /// `sup u(t)` against `(t + 1)^{-exponent}`.
    DecayMax { exponent: f64, times: Vec<f64>, rel_tol: f64 },
    LadderCollapse,
    PolygonStraight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub flux: String,
    pub ic: InitialCondition,
    /// Cells per axis.
    pub n: usize,
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub numerical_flux: NumericalFlux,
    #[serde(default = "default_snapshots")]
    pub snapshots: SnapshotSpec,
    #[serde(default)]
    pub stages: Stages,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub seed: u64,
    /// Where runs go; not written out, so run directories stay relocatable.
    #[serde(default = "default_out", skip_serializing)]
    pub out_dir: PathBuf,
}

fn one_usize() -> usize {
    1
}

fn default_cfl() -> f64 {
    0.45
}

fn default_snapshots() -> SnapshotSpec {
    SnapshotSpec::Times(Vec::new())
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn new(name: &str, flux: &str, ic: InitialCondition, n: usize, t_end: f64) -> Self {
        Self {
            name: name.into(),
            flux: flux.into(),
            ic,
            n,
            dim: 1,
            domain: None,
            t_start: 0.0,
            t_end,
            cfl: default_cfl(),
            boundary: Boundary::Outflow,
            numerical_flux: NumericalFlux::EngquistOsher,
            snapshots: default_snapshots(),
            stages: Stages::default(),
            checks: Vec::new(),
            seed: 0,
            out_dir: default_out(),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            cfl: self.cfl,
            boundary: self.boundary,
            numerical_flux: self.numerical_flux,
        }
    }

    /// Rejects bad configs before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::input(format!("bad run name `{}`", self.name)));
        }
        let flux = FluxSpec::from_key(&self.flux)?;
        if flux.spatial_dim() != self.dim {
            return Err(Error::input(format!(
                "flux `{}` has {} spatial axes but dim = {}",
                self.flux,
                flux.spatial_dim(),
                self.dim
            )));
        }
        let (lo_exp, hi_exp) = match self.dim {
            1 => (6, 14),
            2 => (5, 10),
            _ => return Err(Error::Unsupported(format!("runs in {} dimensions", self.dim))),
        };
        if !self.n.is_power_of_two() || self.n < 1 << lo_exp || self.n > 1 << hi_exp {
            return Err(Error::input(format!(
                "n = {} must be a power of two in [2^{lo_exp}, 2^{hi_exp}]",
                self.n
            )));
        }
        if !(self.t_start >= 0.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(Error::input("need 0 <= t_start < t_end"));
        }
        self.solver_config().validate()?;
        if let Some(d) = &self.domain {
            if d.lo.len() != self.dim || d.hi.len() != self.dim || d.lo.iter().zip(&d.hi).any(|(a, b)| !(a < b)) {
                return Err(Error::input("domain must have lo < hi on every axis"));
            }
        }
        if let SnapshotSpec::Times(ts) = &self.snapshots {
            if ts.iter().any(|&t| t < self.t_start || t > self.t_end) {
                return Err(Error::input("snapshot times outside [t_start, t_end]"));
            }
        }
        let s = &self.stages;
        if let Some(st) = &s.dissipation {
            if st.levels < 2 {
                return Err(Error::input("dissipation needs at least 2 levels"));
            }
        }
        if let Some(st) = &s.structure {
            if st.radii_cells.is_empty() || st.radii_cells.iter().any(|&r| !(r > 0.0)) {
                return Err(Error::input("structure radii must be positive"));
            }
            if s.dissipation.is_none() {
                return Err(Error::input("structure stage needs the dissipation stage"));
            }
        }
        if let Some(st) = &s.degiorgi {
            if st.center.len() != self.dim || !(st.scale > 0.0) {
                return Err(Error::input("degiorgi ball needs a center in the domain and scale > 0"));
            }
            if st.steps == 0 || st.steps > crate::degiorgi::MAX_LADDER_STEPS {
                return Err(Error::input("degiorgi K out of range"));
            }
        }
        if let Some(st) = &s.characteristics {
            if st.x0.len() != self.dim || st.k == 0 {
                return Err(Error::input("characteristics needs x0 of the run dimension and k >= 1"));
            }
        }
        if let Some(st) = &s.decay {
            if st.n_samples < 5 {
                return Err(Error::input("decay needs at least 5 samples"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self, flux: &FluxSpec) -> Result<Geometry> {
        let d = self
            .domain
            .clone()
            .unwrap_or_else(|| self.ic.default_domain(flux, self.dim, self.t_start, self.t_end));
        Geometry::from_box(&d.lo, &d.hi, &vec![self.n; self.dim])
    }

    pub fn initial_field(&self, flux: &FluxSpec) -> Result<ScalarField> {
        let g = self.geometry(flux)?;
        self.ic.field(&g, flux, self.t_start, self.seed)
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        Ok(super::sha256_hex(serde_json::to_string(&c)?.as_bytes()))
    }
}

pub(super) fn preset(name: &str, out_dir: &Path) -> Option<ExperimentConfig> {
    let mut cfg = match name {
        "shock_dissipation" => {
            let mut c = ExperimentConfig::new(name, "burgers", InitialCondition::Riemann { ul: 1.0, ur: 0.0, x0: 0.0 }, 1024, 1.0);
            c.domain = Some(Domain { lo: vec![-1.0], hi: vec![2.0] });
            c.stages.dissipation = Some(DissipationStage { levels: 64 });
            c.stages.structure = Some(StructureStage {
                radii_cells: default_radii(),
                threshold: Threshold::Auto,
                blowup_points: vec![vec![0.5]],
                blowup_radii_cells: default_blowup_radii(),
            });
            c.checks = vec![
                Check::DissipationTotal { expected: 1.0 / 12.0, rel_tol: 0.1 },
                Check::JumpBand { speed: 0.5, offset: 0.0, cells: 2.0 },
            ];
            c
        }
        "rarefaction" => {
            let mut c = ExperimentConfig::new(name, "burgers", InitialCondition::Riemann { ul: 0.0, ur: 1.0, x0: 0.0 }, 1024, 2.0);
            c.t_start = 1.0;
            c.domain = Some(Domain { lo: vec![-1.0], hi: vec![3.0] });
            c.stages.dissipation = Some(DissipationStage { levels: 64 });
            c.stages.structure = Some(StructureStage {
                radii_cells: default_radii(),
                threshold: Threshold::Auto,
                blowup_points: Vec::new(),
                blowup_radii_cells: default_blowup_radii(),
            });
            c.checks = vec![Check::NoJumps];
            c
        }
        "composite" => {
            let mut c = ExperimentConfig::new(name, "burgers", InitialCondition::Plateau { a: 0.0, b: 2.0, value: 1.0 }, 2048, 2.0);
            c.t_start = 1.0;
            c.domain = Some(Domain { lo: vec![-0.5], hi: vec![3.5] });
            c.stages.dissipation = Some(DissipationStage { levels: 64 });
            c.stages.structure = Some(StructureStage {
                radii_cells: default_radii(),
                threshold: Threshold::Auto,
                blowup_points: vec![vec![3.0]],
                blowup_radii_cells: default_blowup_radii(),
            });
            c.checks = vec![Check::JumpBand { speed: 0.5, offset: 2.0, cells: 2.0 }];
            c
        }
        "decay_burgers" | "decay_power2" => {
            let m = if name == "decay_burgers" { 1 } else { 2 };
            let flux = if m == 1 { "burgers" } else { "power:2" };
            let t_end = 15.0;
            let mut c = ExperimentConfig::new(name, flux, InitialCondition::DecayExample { m }, 4096, t_end);
            c.stages.decay = Some(DecayStage {
                n_samples: 24,
                t_min: Some(1.0),
                extra_times: vec![1.0, 3.0, 7.0, 15.0],
            });
            let gamma = 1.0 / (m as f64 + 1.0);
            c.checks = vec![
                Check::DecayExponent { expected: gamma, tol: 0.02 },
                Check::DecayMax { exponent: gamma, times: vec![1.0, 3.0, 7.0, 15.0], rel_tol: 0.02 },
            ];
            c
        }
        "degiorgi_rarefaction" => {
            let mut c = ExperimentConfig::new(name, "burgers", InitialCondition::Riemann { ul: 0.0, ur: 1.0, x0: 0.0 }, 2048, 2.0);
            c.t_start = 1.0;
            c.domain = Some(Domain { lo: vec![-1.0], hi: vec![3.0] });
            c.stages.degiorgi = Some(DegiorgiStage { center: vec![1.0], scale: 0.25, u_top: None, steps: 25 });
            c.checks = vec![Check::LadderCollapse];
            c
        }
        "characteristics_rarefaction" => {
            let mut c = ExperimentConfig::new(name, "burgers", InitialCondition::Riemann { ul: 0.0, ur: 1.0, x0: 0.0 }, 2048, 2.0);
            c.t_start = 1.0;
            c.domain = Some(Domain { lo: vec![-1.0], hi: vec![3.0] });
            c.stages.characteristics = Some(CharacteristicsStage { x0: vec![1.0], v0: 0.5, k: 64 });
            c.checks = vec![Check::PolygonStraight];
            c
        }
        _ => return None,
    };
    cfg.out_dir = out_dir.to_path_buf();
    Some(cfg)
}
