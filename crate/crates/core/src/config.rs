//! Run configuration shared by the `brwsim` front end and library callers.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dispersion::PhasematchParams;
use crate::entanglement::{DichroicOrientation, FilterSpec, CONSERVATION_TOL};
use crate::error::{BrwError, Result};
use crate::jsa::GridSpec;
use crate::material::VALIDITY_WINDOWS_NM;
use crate::solver::Polarization;
use crate::stack::LayerStack;
use crate::units::FwhmConvention;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BRWSIM_OUT_DIR";

/// `start:stop:step`, inclusive of `stop` when it lies on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Span {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return vec![self.start];
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for Span {
    type Err = BrwError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| BrwError::Invalid(format!("bad number '{t}' in span '{s}'")))
        };
        match parts.as_slice() {
            [a, b, c] => Ok(Span {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            }),
            [a] => {
                let v = num(a)?;
                Ok(Span { start: v, stop: v, step: 1.0 })
            }
            _ => Err(BrwError::Invalid(format!("span '{s}' must be start:stop:step"))),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Conventions recorded verbatim in every output header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Conventions {
    pub pump_fwhm_mode: FwhmConvention,
    pub filter_fwhm_mode: FwhmConvention,
    /// Polarization carried by the signal photon; the idler takes the other.
    pub polarization_assignment: SignalPolarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalPolarization(pub Polarization);

impl Default for SignalPolarization {
    fn default() -> Self {
        Self(Polarization::TE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Args)]
pub struct GridArgs {
    /// Samples per detuning axis (even, >= 64).
    #[arg(long = "grid-n", default_value_t = 1024)]
    pub n: usize,
    /// Half width of each detuning axis in rad/fs.
    #[arg(long = "grid-half-width", default_value_t = 0.2)]
    pub half_width: f64,
}

impl Default for GridArgs {
    fn default() -> Self {
        Self { n: 1024, half_width: 0.2 }
    }
}

impl GridArgs {
    pub fn spec(&self) -> GridSpec {
        GridSpec::square(self.half_width, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct ModesArgs {
    #[arg(long, default_value_t = 1550.0, allow_hyphen_values = true)]
    pub wavelength_nm: f64,
    /// te or tm; both when omitted.
    #[arg(long)]
    pub polarization: Option<Polarization>,
    /// Solve the slab left beside the ridge instead of the full stack.
    #[arg(long)]
    #[serde(default)]
    pub etched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct DispersionArgs {
    /// Skip the lateral effective-index correction.
    #[arg(long)]
    #[serde(default)]
    pub slab_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SensitivityArgs {
    /// Relative thickness change.
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub thickness_delta: f64,
    /// Relative Al-fraction change.
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub al_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct DgdMapArgs {
    #[arg(long, default_value_t = 5)]
    pub grid_n: usize,
    /// Half span of the core Al axis around the preset value.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub core_span: f64,
    /// Half span of the graded-mirror Al axis around the preset value.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub dbr_span: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct JsaArgs {
    /// Pump centre in nm; degeneracy when omitted.
    #[arg(long = "pump")]
    pub pump_nm: Option<f64>,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    pub pump_fwhm_nm: f64,
    #[command(flatten)]
    #[serde(default)]
    pub grid: GridArgs,
    /// Also write the full amplitude (n² rows).
    #[arg(long)]
    #[serde(default)]
    pub amplitude: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct HomArgs {
    #[arg(long = "pump")]
    pub pump_nm: Option<f64>,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    pub pump_fwhm_nm: f64,
    #[arg(long, default_value_t = -150.0, allow_hyphen_values = true)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 150.0, allow_hyphen_values = true)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 1201)]
    pub n_tau: usize,
    #[command(flatten)]
    #[serde(default)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct PumpSweepArgs {
    /// Pump wavelengths as start:stop:step in nm; the 1 nm below degeneracy
    /// in 0.1 nm steps when omitted.
    #[arg(long)]
    pub pumps: Option<Span>,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    pub pump_fwhm_nm: f64,
    /// Fixed compensation delay in fs; the optimum at degeneracy when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub tau_c: Option<f64>,
    /// Delay step of the optimum search in fs.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub tau_step: f64,
    #[command(flatten)]
    #[serde(default)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct EntangleArgs {
    /// Band separations as start:stop:step in nm.
    #[arg(long, default_value = "0:100:5")]
    pub separations: Span,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub filter_fwhm_nm: f64,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    pub pump_fwhm_nm: f64,
    /// Explicit filter centres `c1,c2` in nm instead of a sweep.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub centers: Option<Vec<f64>>,
    #[arg(long, default_value = "transmit_high")]
    #[serde(default)]
    pub orientation: DichroicOrientation,
    #[command(flatten)]
    #[serde(default)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Guided slab modes at one wavelength.
    Modes(ModesArgs),
    /// Dispersion curves, degeneracy and expansion parameters from the stack.
    Dispersion(DispersionArgs),
    /// Degeneracy shift per layer-group perturbation.
    Sensitivity(SensitivityArgs),
    /// DGD over core and graded-mirror Al contents.
    #[command(name = "dgd_map", alias = "dgd-map")]
    DgdMap(DgdMapArgs),
    /// Joint spectral amplitude and marginal spectra.
    Jsa(JsaArgs),
    /// Hong-Ou-Mandel coincidence scan.
    Hom(HomArgs),
    /// Overlap versus pump wavelength.
    #[command(name = "pump_sweep", alias = "pump-sweep")]
    PumpSweep(PumpSweepArgs),
    /// Polarization entanglement versus band separation.
    Entangle(EntangleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Modes(_) => "modes",
            Command::Dispersion(_) => "dispersion",
            Command::Sensitivity(_) => "sensitivity",
            Command::DgdMap(_) => "dgd_map",
            Command::Jsa(_) => "jsa",
            Command::Hom(_) => "hom",
            Command::PumpSweep(_) => "pump_sweep",
            Command::Entangle(_) => "entangle",
        }
    }

    /// Commands that start from a layer stack; the rest start from
    /// expansion parameters.
    pub fn uses_stack(&self) -> bool {
        matches!(
            self,
            Command::Modes(_) | Command::Dispersion(_) | Command::Sensitivity(_) | Command::DgdMap(_)
        )
    }
}

/// One complete run: the preset, exactly one command, and the conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// `graded`, `m_core`, or a path to a stack (solver commands) or
    /// parameter (spectral commands) JSON file.
    pub preset: String,
    pub command: Command,
    #[serde(default)]
    pub conventions: Conventions,
}

/// A precondition that `run` would reject.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn is_builtin(preset: &str) -> bool {
    LayerStack::preset(preset).is_some()
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BrwError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| BrwError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Recovers the configuration from the metadata line of an output file.
    pub fn from_output(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BrwError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let meta: serde_json::Value = match text.lines().next().and_then(|l| l.strip_prefix("# ")) {
            Some(line) => serde_json::from_str(line),
            None => serde_json::from_str::<serde_json::Value>(&text).map(|v| v["metadata"].clone()),
        }
        .map_err(|source| BrwError::Json {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_value(meta["config"].clone()).map_err(|source| BrwError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Parameters for the spectral commands.
    pub fn params(&self) -> Result<PhasematchParams> {
        match PhasematchParams::preset(&self.preset) {
            Some(p) => Ok(p),
            None => PhasematchParams::load(&self.preset),
        }
    }

    pub fn stack(&self) -> Result<LayerStack> {
        match LayerStack::preset(&self.preset) {
            Some(s) => Ok(s),
            None => LayerStack::load(&self.preset),
        }
    }

    /// Short tag for output file names.
    pub fn preset_tag(&self) -> String {
        if is_builtin(&self.preset) {
            self.preset.replace('-', "_")
        } else {
            Path::new(&self.preset)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".into())
        }
    }

    /// Every precondition violation; empty iff `run` would accept the config.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut bad = |field: &str, message: String| {
            v.push(Violation {
                field: field.to_string(),
                message,
            })
        };
        let mut params = None;
        if !is_builtin(&self.preset) {
            if !PathBuf::from(&self.preset).is_file() {
                bad("preset", format!("'{}' is neither graded, m_core nor an existing file", self.preset));
            } else if self.command.uses_stack() {
                if let Err(e) = self.stack() {
                    bad("preset", format!("not a valid stack file: {e}"));
                }
            } else {
                match self.params() {
                    Ok(p) => params = Some(p),
                    Err(e) => bad("preset", format!("not a valid parameter file: {e}")),
                }
            }
        } else if !self.command.uses_stack() {
            params = self.params().ok();
        }
        let (pump_lo, pump_hi) = VALIDITY_WINDOWS_NM[0];
        let mut positive = |field: &str, x: f64| {
            if !(x > 0.0) || !x.is_finite() {
                bad(field, format!("{x} must be > 0"));
            }
        };
        let check_grid = |g: &GridArgs, out: &mut Vec<Violation>| {
            if g.n < 64 || g.n % 2 != 0 {
                out.push(Violation {
                    field: "grid.n".into(),
                    message: format!("{} must be even and >= 64", g.n),
                });
            }
            if !(g.half_width > 0.0) || !g.half_width.is_finite() {
                out.push(Violation {
                    field: "grid.half_width".into(),
                    message: format!("{} must be > 0", g.half_width),
                });
            }
        };
        let check_pump = |field: &str, pump: Option<f64>, out: &mut Vec<Violation>| {
            if let Some(l) = pump {
                if !(pump_lo..=pump_hi).contains(&l) {
                    out.push(Violation {
                        field: field.into(),
                        message: format!("{l} outside the pump window [{pump_lo}, {pump_hi}] nm"),
                    });
                }
            }
        };
        let mut extra = Vec::new();
        match &self.command {
            Command::Modes(a) => {
                positive("wavelength_nm", a.wavelength_nm);
                let ok = VALIDITY_WINDOWS_NM
                    .iter()
                    .any(|&(lo, hi)| (lo..=hi).contains(&a.wavelength_nm));
                if !ok {
                    extra.push(Violation {
                        field: "wavelength_nm".into(),
                        message: format!("{} outside {:?} nm", a.wavelength_nm, VALIDITY_WINDOWS_NM),
                    });
                }
            }
            Command::Dispersion(_) => {}
            Command::Sensitivity(a) => {
                for (f, x) in [("thickness_delta", a.thickness_delta), ("al_delta", a.al_delta)] {
                    if !x.is_finite() || x == 0.0 || x.abs() >= 0.5 {
                        extra.push(Violation {
                            field: f.into(),
                            message: format!("{x} must be nonzero with |{f}| < 0.5"),
                        });
                    }
                }
            }
            Command::DgdMap(a) => {
                if a.grid_n == 0 {
                    extra.push(Violation {
                        field: "grid_n".into(),
                        message: "must be >= 1".into(),
                    });
                }
                positive("core_span", a.core_span);
                positive("dbr_span", a.dbr_span);
            }
            Command::Jsa(a) => {
                positive("pump_fwhm_nm", a.pump_fwhm_nm);
                check_pump("pump_nm", a.pump_nm, &mut extra);
                check_grid(&a.grid, &mut extra);
            }
            Command::Hom(a) => {
                positive("pump_fwhm_nm", a.pump_fwhm_nm);
                check_pump("pump_nm", a.pump_nm, &mut extra);
                check_grid(&a.grid, &mut extra);
                if !(a.tau_max > a.tau_min) {
                    extra.push(Violation {
                        field: "tau_max".into(),
                        message: format!("{} must exceed tau_min = {}", a.tau_max, a.tau_min),
                    });
                }
                if a.n_tau < 3 {
                    extra.push(Violation {
                        field: "n_tau".into(),
                        message: format!("{} must be >= 3", a.n_tau),
                    });
                }
            }
            Command::PumpSweep(a) => {
                positive("pump_fwhm_nm", a.pump_fwhm_nm);
                positive("tau_step", a.tau_step);
                check_grid(&a.grid, &mut extra);
                if let Some(s) = a.pumps {
                    if !(s.step > 0.0) {
                        extra.push(Violation {
                            field: "pumps.step".into(),
                            message: format!("{} must be > 0", s.step),
                        });
                    }
                    if s.stop < s.start {
                        extra.push(Violation {
                            field: "pumps.stop".into(),
                            message: format!("{} must be >= start = {}", s.stop, s.start),
                        });
                    }
                    check_pump("pumps.start", Some(s.start), &mut extra);
                    check_pump("pumps.stop", Some(s.stop), &mut extra);
                }
            }
            Command::Entangle(a) => {
                positive("filter_fwhm_nm", a.filter_fwhm_nm);
                positive("pump_fwhm_nm", a.pump_fwhm_nm);
                check_grid(&a.grid, &mut extra);
                let s = a.separations;
                if !(s.step > 0.0) {
                    extra.push(Violation {
                        field: "separations.step".into(),
                        message: format!("{} must be > 0", s.step),
                    });
                }
                if s.start < 0.0 || s.stop < s.start {
                    extra.push(Violation {
                        field: "separations".into(),
                        message: format!("{s} must satisfy 0 <= start <= stop"),
                    });
                }
                if let (Some(c), Some(p)) = (&a.centers, params) {
                    if c.len() != 2 {
                        extra.push(Violation {
                            field: "centers".into(),
                            message: format!("needs exactly two values, got {}", c.len()),
                        });
                    } else {
                        let pump = 0.5 * p.lambda_d;
                        let f = FilterSpec {
                            center_1_nm: c[0],
                            center_2_nm: c[1],
                            fwhm_nm: a.filter_fwhm_nm,
                            fwhm_convention: self.conventions.filter_fwhm_mode,
                        };
                        let err = f.conservation_error(pump);
                        if !(err <= CONSERVATION_TOL) {
                            extra.push(Violation {
                                field: "centers".into(),
                                message: format!(
                                    "violate 1/center_1 + 1/center_2 = 1/lambda_pump ({pump} nm): \
                                     relative error {err:.3e} > {CONSERVATION_TOL:e}"
                                ),
                            });
                        }
                    }
                }
            }
        }
        v.extend(extra);
        v
    }
}
