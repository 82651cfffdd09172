//! Planar AlGaAs layer stacks and the shipped waveguide presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BrwError, Result};
use crate::material::{IndexModel, MaterialPoint};

/// Functional role of a layer; used to classify modes and to address
/// layer groups in parameter sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LayerRole {
    Core,
    Matching,
    GradedDbr,
    Dbr1,
    Dbr2,
    #[default]
    Other,
}

impl LayerRole {
    /// Layers that form the guiding region of the TIR modes.
    pub fn is_central(self) -> bool {
        matches!(self, LayerRole::Core | LayerRole::Matching)
    }

    pub fn is_dbr(self) -> bool {
        matches!(self, LayerRole::GradedDbr | LayerRole::Dbr1 | LayerRole::Dbr2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayerRole::Core => "core",
            LayerRole::Matching => "matching",
            LayerRole::GradedDbr => "graded_dbr",
            LayerRole::Dbr1 => "dbr1",
            LayerRole::Dbr2 => "dbr2",
            LayerRole::Other => "other",
        }
    }
}

impl std::str::FromStr for LayerRole {
    type Err = BrwError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "core" | "cl" => LayerRole::Core,
            "matching" | "ml" => LayerRole::Matching,
            "graded_dbr" | "graded" => LayerRole::GradedDbr,
            "dbr1" | "type1" => LayerRole::Dbr1,
            "dbr2" | "type2" => LayerRole::Dbr2,
            "other" => LayerRole::Other,
            _ => return Err(BrwError::Invalid(format!("unknown layer group '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub thickness_nm: f64,
    pub al_fraction: f64,
    #[serde(default)]
    pub role: LayerRole,
}

/// Multilayer ridge waveguide. Layers are listed from the top surface down;
/// the cap medium sits above the first layer and the substrate below the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    #[serde(default)]
    pub name: String,
    pub layers: Vec<Layer>,
    /// Substrate composition; defaults to the bottom-most listed layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substrate_al_fraction: Option<f64>,
    /// Cap composition; `None` is air.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_al_fraction: Option<f64>,
    pub ridge_width_um: f64,
    pub etch_depth_um: f64,
    pub length_um: f64,
}

/// Exterior medium of a stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cladding {
    Air,
    AlGaAs(f64),
}

impl Cladding {
    pub fn index(self, model: &dyn IndexModel, wavelength_nm: f64) -> Result<f64> {
        match self {
            Cladding::Air => Ok(1.0),
            Cladding::AlGaAs(x) => model.refractive_index(MaterialPoint::new(x, wavelength_nm)?),
        }
    }
}

const GRADED_JSON: &str = include_str!("../presets/graded.json");
const M_CORE_JSON: &str = include_str!("../presets/m_core.json");

impl LayerStack {
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 3 {
            return Err(BrwError::Invalid(format!(
                "stack '{}' needs at least 3 layers, has {}",
                self.name,
                self.layers.len()
            )));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness_nm > 0.0) {
                return Err(BrwError::Invalid(format!(
                    "layer {i}: thickness_nm = {} must be > 0",
                    l.thickness_nm
                )));
            }
            if !(0.0..=1.0).contains(&l.al_fraction) {
                return Err(BrwError::Invalid(format!(
                    "layer {i}: al_fraction = {} outside [0, 1]",
                    l.al_fraction
                )));
            }
        }
        for (field, v) in [
            ("substrate_al_fraction", self.substrate_al_fraction),
            ("cap_al_fraction", self.cap_al_fraction),
        ] {
            if let Some(x) = v {
                if !(0.0..=1.0).contains(&x) {
                    return Err(BrwError::Invalid(format!("{field} = {x} outside [0, 1]")));
                }
            }
        }
        for (field, v) in [
            ("ridge_width_um", self.ridge_width_um),
            ("etch_depth_um", self.etch_depth_um),
            ("length_um", self.length_um),
        ] {
            if !(v > 0.0) {
                return Err(BrwError::Invalid(format!("{field} = {v} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BrwError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let stack: LayerStack = serde_json::from_str(&text).map_err(|source| BrwError::Json {
            path: path.display().to_string(),
            source,
        })?;
        stack.validate()?;
        Ok(stack)
    }

    /// Graded-DBR design (core flanked by matching layers, thinned DBR
    /// periods next to them).
    pub fn graded() -> Self {
        Self::from_json_str(GRADED_JSON).expect("graded preset parses")
    }

    /// Multilayer-core design.
    pub fn m_core() -> Self {
        Self::from_json_str(M_CORE_JSON).expect("m_core preset parses")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "graded" => Some(Self::graded()),
            "m_core" | "m-core" | "mcore" => Some(Self::m_core()),
            _ => None,
        }
    }

    pub fn substrate(&self) -> Cladding {
        Cladding::AlGaAs(
            self.substrate_al_fraction
                .unwrap_or_else(|| self.layers.last().map(|l| l.al_fraction).unwrap_or(0.0)),
        )
    }

    pub fn cap(&self) -> Cladding {
        self.cap_al_fraction.map_or(Cladding::Air, Cladding::AlGaAs)
    }

    pub fn total_thickness_nm(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_nm).sum()
    }

    pub fn has_role(&self, role: LayerRole) -> bool {
        self.layers.iter().any(|l| l.role == role)
    }

    /// The slab left beside the ridge after removing `etch_depth_um` from the top.
    /// Returns `None` when the etch removes every layer.
    pub fn etched(&self) -> Option<Self> {
        let mut remaining = self.etch_depth_um * 1e3;
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            if remaining >= l.thickness_nm {
                remaining -= l.thickness_nm;
                continue;
            }
            let mut kept = *l;
            kept.thickness_nm -= remaining;
            remaining = 0.0;
            // sub-ångström slivers only add stiffness to the transfer matrix
            if kept.thickness_nm > 1e-3 {
                layers.push(kept);
            }
        }
        if layers.is_empty() {
            return None;
        }
        Some(Self {
            name: format!("{} (etched)", self.name),
            layers,
            substrate_al_fraction: Some(match self.substrate() {
                Cladding::AlGaAs(x) => x,
                Cladding::Air => unreachable!(),
            }),
            cap_al_fraction: None,
            ..self.clone()
        })
    }

    /// Copy with every layer of `role` scaled in thickness by `factor`.
    pub fn with_scaled_thickness(&self, role: LayerRole, factor: f64) -> Self {
        let mut s = self.clone();
        for l in s.layers.iter_mut().filter(|l| l.role == role) {
            l.thickness_nm *= factor;
        }
        s
    }

    /// Copy with every layer of `role` shifted in Al fraction by `delta`.
    pub fn with_shifted_al(&self, role: LayerRole, delta: f64) -> Self {
        let mut s = self.clone();
        for l in s.layers.iter_mut().filter(|l| l.role == role) {
            l.al_fraction += delta;
        }
        s
    }

    /// Copy with every layer of `role` scaled in Al fraction by `factor`.
    pub fn with_scaled_al(&self, role: LayerRole, factor: f64) -> Self {
        let mut s = self.clone();
        for l in s.layers.iter_mut().filter(|l| l.role == role) {
            l.al_fraction *= factor;
        }
        s
    }

    /// Al fraction of the first layer carrying `role`.
    pub fn role_al_fraction(&self, role: LayerRole) -> Option<f64> {
        self.layers.iter().find(|l| l.role == role).map(|l| l.al_fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for s in [LayerStack::graded(), LayerStack::m_core()] {
            s.validate().unwrap();
            assert!(s.has_role(LayerRole::Core));
            assert!(s.has_role(LayerRole::Matching));
            assert!(s.has_role(LayerRole::Dbr1));
            assert!(s.has_role(LayerRole::Dbr2));
        }
        assert!(LayerStack::graded().has_role(LayerRole::GradedDbr));
    }

    #[test]
    fn graded_preset_layer_counts() {
        // each mirror: six type-1 and five type-2 layers, counting the thinned
        // graded pair as the first period
        let s = LayerStack::graded();
        let count = |r| s.layers.iter().filter(|l| l.role == r).count();
        assert_eq!(count(LayerRole::Dbr1) + count(LayerRole::GradedDbr) / 2, 12);
        assert_eq!(count(LayerRole::Dbr2) + count(LayerRole::GradedDbr) / 2, 10);
        assert_eq!(count(LayerRole::Matching), 2);
        assert_eq!(count(LayerRole::Core), 1);
    }

    #[test]
    fn m_core_preset_layer_counts() {
        let s = LayerStack::m_core();
        let count = |r| s.layers.iter().filter(|l| l.role == r).count();
        assert_eq!(count(LayerRole::Dbr1), 12);
        assert_eq!(count(LayerRole::Dbr2), 12);
    }

    #[test]
    fn etching_removes_from_top() {
        let s = LayerStack::graded();
        let e = s.etched().unwrap();
        let removed = s.total_thickness_nm() - e.total_thickness_nm();
        assert!((removed - s.etch_depth_um * 1e3).abs() < 1e-6);
        assert_eq!(e.cap(), Cladding::Air);
        let mut deep = s.clone();
        deep.etch_depth_um = 100.0;
        assert!(deep.etched().is_none());
    }

    #[test]
    fn validation_names_offending_field() {
        let mut s = LayerStack::graded();
        s.layers[2].thickness_nm = -1.0;
        assert!(s.validate().unwrap_err().to_string().contains("thickness_nm"));
        let mut s = LayerStack::graded();
        s.layers.truncate(2);
        assert!(s.validate().is_err());
        let mut s = LayerStack::graded();
        s.ridge_width_um = 0.0;
        assert!(s.validate().unwrap_err().to_string().contains("ridge_width_um"));
    }

    #[test]
    fn load_from_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        std::fs::write(&p, serde_json::to_string_pretty(&LayerStack::m_core()).unwrap()).unwrap();
        assert_eq!(LayerStack::load(&p).unwrap(), LayerStack::m_core());
        assert!(LayerStack::load(dir.path().join("missing.json")).is_err());
    }
}
