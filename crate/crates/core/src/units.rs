//! Physical constants and wavelength/frequency conversions.
//!
//! Internal unit system: wavelengths in nm, lengths along the waveguide in
//! µm, times in fs, angular frequencies in rad/fs.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// Speed of light in nm/fs.
pub const C_NM_PER_FS: f64 = 299.792_458;
/// Speed of light in µm/fs.
pub const C_UM_PER_FS: f64 = 0.299_792_458;
/// h·c in eV·nm.
pub const HC_EV_NM: f64 = 1_239.841_984;

/// Angular frequency (rad/fs) of a vacuum wavelength in nm.
#[inline]
pub fn omega_from_nm(wavelength_nm: f64) -> f64 {
    2.0 * PI * C_NM_PER_FS / wavelength_nm
}

/// Vacuum wavelength in nm of an angular frequency in rad/fs.
#[inline]
pub fn nm_from_omega(omega: f64) -> f64 {
    2.0 * PI * C_NM_PER_FS / omega
}

/// Photon energy in eV.
#[inline]
pub fn ev_from_nm(wavelength_nm: f64) -> f64 {
    HC_EV_NM / wavelength_nm
}

/// How a quoted spectral FWHM maps onto the Gaussian width σ of an
/// amplitude `exp(-(ω-ω0)²/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FwhmConvention {
    /// The FWHM refers to the spectral intensity |amplitude|².
    #[default]
    Intensity,
    /// The FWHM refers to the amplitude itself.
    Amplitude,
}

impl FwhmConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            FwhmConvention::Intensity => "intensity",
            FwhmConvention::Amplitude => "amplitude",
        }
    }
}

impl std::str::FromStr for FwhmConvention {
    type Err = crate::error::BrwError;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "intensity" => Ok(FwhmConvention::Intensity),
            "amplitude" => Ok(FwhmConvention::Amplitude),
            _ => Err(crate::error::BrwError::Invalid(format!(
                "unknown FWHM convention '{s}' (intensity, amplitude)"
            ))),
        }
    }
}

/// Full width in rad/fs of the band `[λ - Δλ/2, λ + Δλ/2]`, exact (not linearized).
pub fn fwhm_nm_to_omega(center_nm: f64, fwhm_nm: f64) -> f64 {
    let lo = center_nm - 0.5 * fwhm_nm;
    let hi = center_nm + 0.5 * fwhm_nm;
    omega_from_nm(lo) - omega_from_nm(hi)
}

/// Gaussian amplitude width σ (rad/fs) for a FWHM quoted in nm.
pub fn sigma_from_fwhm_nm(center_nm: f64, fwhm_nm: f64, convention: FwhmConvention) -> f64 {
    let dw = fwhm_nm_to_omega(center_nm, fwhm_nm);
    match convention {
        FwhmConvention::Intensity => dw / (2.0 * LN_2).sqrt(),
        FwhmConvention::Amplitude => dw / (2.0 * LN_2.sqrt()),
    }
}
