//! Declarative experiment definitions read from TOML.

use std::path::{Path, PathBuf};

use csie_core::constants::C0;
use csie_core::excitation::{PlaneWave, Polarization};
use csie_core::formulations::{FormulationConfig, FormulationKind, PreconditionerKind};
use csie_core::krylov::GmresConfig;
use csie_core::mesh::{gen_cube, gen_icosphere, Mesh};
use csie_core::quadrature::RuleOrder;
use serde::{Deserialize, Serialize};

/// Problems found while reading or validating a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec,
    pub frequency: FrequencySpec,
    #[serde(default)]
    pub excitation: ExcitationSpec,
    #[serde(default, rename = "formulation")]
    pub formulations: Vec<FormulationSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub alpha_tradeoff: Option<TradeoffSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Scatterer surface: a built-in generator or an OFF file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeometrySpec {
    Icosphere {
        diameter: f64,
        subdivisions: usize,
    },
    Cube {
        edge: f64,
        divisions: usize,
    },
    Off {
        path: PathBuf,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A single frequency (`hz` or `wavelength`) or a linear sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    pub hz: Option<f64>,
    /// Free-space wavelength in metres.
    pub wavelength: Option<f64>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcitationSpec {
    /// Propagation direction, degrees.
    pub theta: f64,
    pub phi: f64,
    /// `theta` or `phi`.
    pub polarization: String,
    pub amplitude: f64,
}

impl Default for ExcitationSpec {
    fn default() -> Self {
        ExcitationSpec {
            theta: 0.0,
            phi: 0.0,
            polarization: "theta".into(),
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulationSpec {
    pub kind: String,
    pub alpha: Option<f64>,
    pub comb: Option<f64>,
    pub jm_weighting: Option<bool>,
    pub inner_tol: Option<f64>,
    pub inner_max_iter: Option<usize>,
    /// Overrides the solver tolerance for this formulation.
    pub tol: Option<f64>,
    pub preconditioner: Option<String>,
}

impl FormulationSpec {
    pub fn new(kind: FormulationKind) -> Self {
        FormulationSpec {
            kind: kind.name().into(),
            alpha: None,
            comb: None,
            jm_weighting: None,
            inner_tol: None,
            inner_max_iter: None,
            tol: None,
            preconditioner: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: Option<usize>,
    pub stagnation_window: usize,
    /// Points of the triangle rule that tests the incident field.
    pub rhs_rule_points: usize,
    /// Far-field grid spacing, degrees.
    pub far_field_step: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let g = GmresConfig::default();
        SolverSpec {
            tol: g.tol,
            max_iter: g.max_iter,
            restart: g.restart,
            stagnation_window: g.stagnation_window,
            rhs_rule_points: RuleOrder::P7.points(),
            far_field_step: 10.0,
        }
    }
}

/// Optional Mie-series reference for error columns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    /// Diameter of the reference sphere in metres.
    pub mie_diameter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffSpec {
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub combs: Vec<f64>,
    pub inner_tol: Option<f64>,
    pub preconditioner: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

/// One formulation with its parameters resolved against the defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Position in the config, used in file names.
    pub index: usize,
    pub formulation: FormulationConfig,
    pub solver: GmresConfig,
    pub preconditioner: PreconditionerKind,
}

impl RunSpec {
    pub fn label(&self) -> String {
        format!("{:02}-{}", self.index, self.formulation.kind.name())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Reads `path`; relative geometry paths are resolved against its folder.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let GeometrySpec::Off { path: off, .. } = &mut cfg.geometry {
            if off.is_relative() {
                *off = path.parent().unwrap_or(Path::new(".")).join(&*off);
            }
        }
        Ok(cfg)
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.geometry {
            GeometrySpec::Icosphere { diameter, .. } if !(*diameter > 0.0) => return invalid("diameter must be positive"),
            GeometrySpec::Cube { edge, divisions } if !(*edge > 0.0) || *divisions == 0 => {
                return invalid("cube needs a positive edge and at least one division")
            }
            GeometrySpec::Off { path, scale } => {
                if !path.is_file() {
                    return invalid(format!("mesh file {} does not exist", path.display()));
                }
                if !(*scale > 0.0) {
                    return invalid("scale must be positive");
                }
            }
            _ => {}
        }
        self.frequencies()?;
        self.plane_wave()?;
        self.rhs_rule()?;
        if !(self.solver.far_field_step > 0.0) {
            return invalid("far_field_step must be positive");
        }
        for f in &self.formulations {
            self.resolve_formulation(0, f)?;
        }
        if let Some(d) = self.reference.mie_diameter {
            if !(d > 0.0) {
                return invalid("mie_diameter must be positive");
            }
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Result<Vec<f64>, ConfigError> {
        let f = &self.frequency;
        let sweep = f.start.is_some() || f.stop.is_some() || f.points.is_some();
        let freqs = match (f.hz, f.wavelength, sweep) {
            (Some(hz), None, false) => vec![hz],
            (None, Some(w), false) => vec![C0 / w],
            (None, None, true) => {
                let (Some(start), Some(stop), Some(points)) = (f.start, f.stop, f.points) else {
                    return invalid("a sweep needs start, stop and points");
                };
                if points == 0 {
                    return invalid("sweep points must be at least 1");
                }
                if points == 1 {
                    vec![start]
                } else {
                    (0..points)
                        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
                        .collect()
                }
            }
            _ => return invalid("give exactly one of hz, wavelength or a start/stop/points sweep"),
        };
        if freqs.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return invalid("frequencies must be positive and finite");
        }
        Ok(freqs)
    }

    pub fn plane_wave(&self) -> Result<PlaneWave, ConfigError> {
        let e = &self.excitation;
        let pol = match e.polarization.to_ascii_lowercase().as_str() {
            "theta" => Polarization::Theta,
            "phi" => Polarization::Phi,
            other => return invalid(format!("unknown polarization '{other}'")),
        };
        if !e.amplitude.is_finite() || !e.theta.is_finite() || !e.phi.is_finite() {
            return invalid("excitation values must be finite");
        }
        if e.amplitude == 0.0 {
            return invalid("excitation amplitude must be nonzero");
        }
        Ok(PlaneWave::from_angles(e.theta, e.phi, pol, e.amplitude))
    }

    pub fn rhs_rule(&self) -> Result<RuleOrder, ConfigError> {
        RuleOrder::from_points(self.solver.rhs_rule_points)
            .ok_or_else(|| ConfigError(format!("no {}-point triangle rule", self.solver.rhs_rule_points)))
    }

    pub fn gmres(&self, tol: Option<f64>) -> Result<GmresConfig, ConfigError> {
        let g = GmresConfig {
            tol: tol.unwrap_or(self.solver.tol),
            max_iter: self.solver.max_iter,
            restart: self.solver.restart,
            stagnation_window: self.solver.stagnation_window,
        };
        if !(g.tol > 0.0 && g.tol < 1.0) {
            return invalid(format!("tolerance must lie in (0, 1), got {}", g.tol));
        }
        if g.max_iter == 0 || g.restart == Some(0) {
            return invalid("max_iter and restart must be positive");
        }
        Ok(g)
    }

    pub fn resolve_formulation(&self, index: usize, f: &FormulationSpec) -> Result<RunSpec, ConfigError> {
        let kind: FormulationKind = f.kind.parse().map_err(|e: csie_core::Error| ConfigError(e.to_string()))?;
        let d = FormulationConfig::new(kind);
        let formulation = FormulationConfig {
            kind,
            alpha: f.alpha.unwrap_or(d.alpha),
            cfie_comb: f.comb.unwrap_or(d.cfie_comb),
            jm_weighting: f.jm_weighting.unwrap_or(d.jm_weighting),
            inner_tol: f.inner_tol.unwrap_or(d.inner_tol),
            inner_max_iter: f.inner_max_iter.unwrap_or(d.inner_max_iter),
        };
        if !(formulation.alpha >= 0.0) || !formulation.alpha.is_finite() {
            return invalid("alpha must be non-negative");
        }
        if !(0.0..=1.0).contains(&formulation.cfie_comb) {
            return invalid("comb must lie in [0, 1]");
        }
        if !(formulation.inner_tol > 0.0 && formulation.inner_tol < 1.0) || formulation.inner_max_iter == 0 {
            return invalid("inner_tol must lie in (0, 1) and inner_max_iter be positive");
        }
        let preconditioner: PreconditionerKind = match &f.preconditioner {
            Some(p) => p.parse().map_err(|e: csie_core::Error| ConfigError(e.to_string()))?,
            None => PreconditionerKind::None,
        };
        if preconditioner == PreconditionerKind::CsieDiagonal && kind != FormulationKind::CsieJ {
            return invalid("csie-diagonal preconditioning applies to csie-j only");
        }
        Ok(RunSpec {
            index,
            formulation,
            solver: self.gmres(f.tol)?,
            preconditioner,
        })
    }

    /// The formulation list; empty lists are rejected.
    pub fn runs(&self) -> Result<Vec<RunSpec>, ConfigError> {
        if self.formulations.is_empty() {
            return invalid("at least one [[formulation]] is required");
        }
        self.formulations
            .iter()
            .enumerate()
            .map(|(i, f)| self.resolve_formulation(i, f))
            .collect()
    }

    /// Runs of the trade-off study: CSIE-J over `alphas`, then CFIE over `combs`.
    pub fn tradeoff_runs(&self) -> Result<(Vec<RunSpec>, Vec<RunSpec>), ConfigError> {
        let Some(t) = &self.alpha_tradeoff else {
            return invalid("alpha-tradeoff needs an [alpha_tradeoff] section");
        };
        if t.alphas.is_empty() {
            return invalid("alpha_tradeoff.alphas must not be empty");
        }
        let make = |index, kind, alpha: Option<f64>, comb: Option<f64>| {
            let spec = FormulationSpec {
                alpha,
                comb,
                inner_tol: if kind == FormulationKind::CsieJ { t.inner_tol } else { None },
                preconditioner: if kind == FormulationKind::CsieJ { t.preconditioner.clone() } else { None },
                ..FormulationSpec::new(kind)
            };
            self.resolve_formulation(index, &spec)
        };
        let alphas = t
            .alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| make(i, FormulationKind::CsieJ, Some(a), None))
            .collect::<Result<Vec<_>, _>>()?;
        let combs = t
            .combs
            .iter()
            .enumerate()
            .map(|(i, &c)| make(i, FormulationKind::Cfie, None, Some(c)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((alphas, combs))
    }

    /// Diameter of the Mie reference: explicit, or the icosphere's.
    pub fn mie_diameter(&self) -> Option<f64> {
        self.reference.mie_diameter.or(match self.geometry {
            GeometrySpec::Icosphere { diameter, .. } => Some(diameter),
            _ => None,
        })
    }

    pub fn build_mesh(&self) -> Result<Mesh, ConfigError> {
        let mesh = match &self.geometry {
            GeometrySpec::Icosphere { diameter, subdivisions } => gen_icosphere(*diameter, *subdivisions),
            GeometrySpec::Cube { edge, divisions } => gen_cube(*edge, *divisions),
            GeometrySpec::Off { path, scale } => Mesh::load_off(path).and_then(|m| m.scaled(*scale)),
        };
        mesh.map_err(|e| ConfigError(e.to_string()))
    }

    /// Output folder: the command-line override, else the config's.
    pub fn output_dir(&self, cli: Option<&Path>) -> Result<PathBuf, ConfigError> {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .ok_or_else(|| ConfigError("no output directory: set [output] dir or pass --out".into()))
    }
}
