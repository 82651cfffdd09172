//! Refractive index of Al(x)Ga(1-x)As below the band gap.
//!
//! The shipped model is the modified single-oscillator parametrisation of
//! Afromowitz (Solid State Commun. 15, 59 (1974)), with a Varshni shift of
//! the Γ gap for temperatures other than 295 K. Other models plug in through
//! [`IndexModel`].

use std::f64::consts::PI;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::curve::DispersionCurve;
use crate::error::{BrwError, Result};
use crate::units::ev_from_nm;

/// Room temperature used when no override is configured.
pub const DEFAULT_TEMPERATURE_K: f64 = 295.0;

/// Wavelength windows (nm) in which index evaluations are accepted: the
/// telecom band for signal/idler and a band around 775 nm for the pump.
pub const VALIDITY_WINDOWS_NM: [(f64, f64); 2] = [(750.0, 800.0), (970.0, 1800.0)];

/// Closest approach of the photon energy to the Γ gap, in eV.
const GAP_MARGIN_EV: f64 = 0.01;

/// A composition/wavelength pair at which the index is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPoint {
    al_fraction: f64,
    wavelength_nm: f64,
}

impl MaterialPoint {
    pub fn new(al_fraction: f64, wavelength_nm: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&al_fraction) {
            return Err(BrwError::domain("al_fraction", al_fraction, "[0, 1]"));
        }
        if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
            return Err(BrwError::domain("wavelength_nm", wavelength_nm, "> 0"));
        }
        Ok(Self {
            al_fraction,
            wavelength_nm,
        })
    }

    pub fn al_fraction(&self) -> f64 {
        self.al_fraction
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }
}

/// A real refractive-index model for AlGaAs.
pub trait IndexModel: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// Wavelength windows (nm, inclusive) where the model may be evaluated.
    fn validity_windows(&self) -> &[(f64, f64)] {
        &VALIDITY_WINDOWS_NM
    }

    /// Refractive index at `p`. Never extrapolates outside the validity windows.
    fn refractive_index(&self, p: MaterialPoint) -> Result<f64>;

    fn check_window(&self, wavelength_nm: f64) -> Result<()> {
        let windows = self.validity_windows();
        if windows
            .iter()
            .any(|&(lo, hi)| (lo..=hi).contains(&wavelength_nm))
        {
            Ok(())
        } else {
            let bound = windows
                .iter()
                .map(|(lo, hi)| format!("[{lo}, {hi}] nm"))
                .collect::<Vec<_>>()
                .join(" or ");
            Err(BrwError::domain("wavelength_nm", wavelength_nm, bound))
        }
    }
}

/// Band parameters of the single-oscillator model at composition `x`, in eV.
#[derive(Debug, Clone, Copy)]
struct OscillatorParams {
    e0: f64,
    ed: f64,
    e_gamma: f64,
}

/// Afromowitz modified single-oscillator model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Afromowitz {
    pub temperature_k: f64,
}

impl Default for Afromowitz {
    fn default() -> Self {
        Self {
            temperature_k: DEFAULT_TEMPERATURE_K,
        }
    }
}

/// Varshni band-gap temperature dependence of GaAs, relative to 0 K.
fn varshni_shift(t: f64) -> f64 {
    const ALPHA: f64 = 5.405e-4;
    const BETA: f64 = 204.0;
    -ALPHA * t * t / (t + BETA)
}

impl Afromowitz {
    pub fn at_temperature(temperature_k: f64) -> Result<Self> {
        if !(temperature_k > 0.0 && temperature_k < 1000.0) {
            return Err(BrwError::domain(
                "temperature_k",
                temperature_k,
                "(0, 1000) K",
            ));
        }
        Ok(Self { temperature_k })
    }

    fn params(&self, x: f64) -> OscillatorParams {
        let shift = varshni_shift(self.temperature_k) - varshni_shift(DEFAULT_TEMPERATURE_K);
        OscillatorParams {
            e0: 3.65 + 0.871 * x + 0.179 * x * x,
            ed: 36.1 - 2.45 * x,
            e_gamma: 1.424 + 1.266 * x + 0.26 * x * x + shift,
        }
    }

    /// Direct Γ gap in eV at composition `x`.
    pub fn gamma_gap_ev(&self, x: f64) -> f64 {
        self.params(x).e_gamma
    }
}

impl IndexModel for Afromowitz {
    fn name(&self) -> &'static str {
        "afromowitz"
    }

    fn refractive_index(&self, p: MaterialPoint) -> Result<f64> {
        self.check_window(p.wavelength_nm)?;
        let x = p.al_fraction;
        let OscillatorParams { e0, ed, e_gamma } = self.params(x);
        let e = ev_from_nm(p.wavelength_nm);
        if e >= e_gamma - GAP_MARGIN_EV {
            return Err(BrwError::domain(
                "wavelength_nm",
                p.wavelength_nm,
                format!(
                    "photon energy {e:.4} eV must stay below the Γ gap {e_gamma:.4} eV of Al fraction {x}"
                ),
            ));
        }
        let e2 = e * e;
        let eg2 = e_gamma * e_gamma;
        let ef2 = 2.0 * e0 * e0 - eg2;
        let eta = PI * ed / (2.0 * e0.powi(3) * (e0 * e0 - eg2));
        let eps = 1.0
            + ed / e0
            + ed * e2 / e0.powi(3)
            + eta / PI * e2 * e2 * ((ef2 - e2) / (eg2 - e2)).ln();
        Ok(eps.sqrt())
    }
}

/// Samples `model` at a fixed Al fraction on `[lambda_min, lambda_max]`.
///
/// A step wider than the range yields a single sample at `lambda_min`.
pub fn sample_dispersion(
    model: &dyn IndexModel,
    al_fraction: f64,
    lambda_min: f64,
    lambda_max: f64,
    step: f64,
) -> Result<DispersionCurve> {
    if !(lambda_min < lambda_max) {
        return Err(BrwError::Invalid(format!(
            "empty wavelength range [{lambda_min}, {lambda_max}]"
        )));
    }
    if !(step > 0.0) {
        return Err(BrwError::domain("step", step, "> 0"));
    }
    let n = ((lambda_max - lambda_min) / step + 1e-9).floor() as usize + 1;
    let mut wavelengths = Vec::with_capacity(n);
    let mut index = Vec::with_capacity(n);
    for k in 0..n {
        let l = lambda_min + k as f64 * step;
        wavelengths.push(l);
        index.push(model.refractive_index(MaterialPoint::new(al_fraction, l)?)?);
    }
    let mut curve = DispersionCurve::new(wavelengths, index)?;
    curve.al_fraction = Some(al_fraction);
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: f64, l: f64) -> f64 {
        Afromowitz::default()
            .refractive_index(MaterialPoint::new(x, l).unwrap())
            .unwrap()
    }

    /// Independent evaluation of the published closed form for GaAs at
    /// 1550 nm (E0 = 3.65 eV, Ed = 36.1 eV, EΓ = 1.424 eV), worked by hand:
    /// ε = 1 + 9.890411 + 0.475005 + 0.038335 = 11.403751, n = 3.376944.
    #[test]
    fn gaas_1550_matches_hand_evaluation() {
        let e: f64 = 1239.841984 / 1550.0;
        let (e0, ed, eg) = (3.65f64, 36.1f64, 1.424f64);
        let eta = std::f64::consts::PI * ed / (2.0 * e0.powi(3) * (e0 * e0 - eg * eg));
        let ef2 = 2.0 * e0 * e0 - eg * eg;
        let term3 = eta / std::f64::consts::PI
            * e.powi(4)
            * ((ef2 - e * e) / (eg * eg - e * e)).ln();
        let oracle = (1.0 + ed / e0 + ed * e * e / e0.powi(3) + term3).sqrt();
        assert!((oracle - 3.376944).abs() < 1e-6, "oracle {oracle}");
        assert!((n(0.0, 1550.0) - oracle).abs() < 1e-12);
    }

    #[test]
    fn higher_al_lowers_index() {
        assert!(n(0.20, 1550.0) > n(0.65, 1550.0));
        for l in [780.0, 1000.0, 1300.0, 1550.0, 1700.0] {
            let xs: Vec<f64> = (20..=100).map(|k| k as f64 / 100.0).collect();
            for w in xs.windows(2) {
                assert!(n(w[0], l) > n(w[1], l), "x {w:?} at {l}");
            }
        }
    }

    #[test]
    fn normal_dispersion_in_transparency() {
        for x in [0.0, 0.2, 0.45, 0.8, 1.0] {
            let c = sample_dispersion(&Afromowitz::default(), x, 1000.0, 1800.0, 5.0).unwrap();
            assert!(c.index.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn sample_curve_shape() {
        let m = Afromowitz::default();
        let c = sample_dispersion(&m, 0.45, 1400.0, 1700.0, 1.0).unwrap();
        assert_eq!(c.len(), 301);
        assert_eq!(c.al_fraction, Some(0.45));
        assert!(c.index.windows(2).all(|w| w[0] > w[1]));
        for (l, v) in c.wavelengths_nm.iter().zip(&c.index) {
            assert_eq!(*v, n(0.45, *l));
        }
        let single = sample_dispersion(&m, 0.45, 1400.0, 1410.0, 50.0).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.wavelengths_nm[0], 1400.0);
        assert!(sample_dispersion(&m, 0.45, 1500.0, 1500.0, 1.0).is_err());
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let m = Afromowitz::default();
        assert!(MaterialPoint::new(1.2, 1550.0).is_err());
        assert!(MaterialPoint::new(-0.1, 1550.0).is_err());
        let err = m
            .refractive_index(MaterialPoint::new(0.3, 900.0).unwrap())
            .unwrap_err();
        assert!(err.to_string().contains("wavelength_nm"));
        // GaAs absorbs at the pump wavelength
        assert!(m
            .refractive_index(MaterialPoint::new(0.0, 775.0).unwrap())
            .is_err());
        assert!(m
            .refractive_index(MaterialPoint::new(0.3, 775.0).unwrap())
            .is_ok());
    }

    #[test]
    fn continuity_under_refinement() {
        let base = n(0.3, 1550.0);
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let d = 10f64.powi(-k);
            let diff = (n(0.3, 1550.0 + d) - base).abs();
            assert!(diff < last);
            last = diff;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn temperature_override_shifts_index() {
        let hot = Afromowitz::at_temperature(350.0).unwrap();
        let p = MaterialPoint::new(0.3, 1550.0).unwrap();
        assert!(hot.refractive_index(p).unwrap() > n(0.3, 1550.0));
        assert!(Afromowitz::at_temperature(-3.0).is_err());
    }
}
