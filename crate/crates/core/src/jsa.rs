//! Joint spectral amplitude of the photon pair on a detuning grid.
//!
//! Detunings ν are measured from the degenerate frequency ω⁰ of the
//! [`PhasematchParams`]; the pump argument of cell (j, k) is ν_s(j) + ν_i(k).

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::PhasematchParams;
use crate::error::{BrwError, Result};
use crate::material::VALIDITY_WINDOWS_NM;
use crate::units::{nm_from_omega, omega_from_nm, sigma_from_fwhm_nm, FwhmConvention, C_NM_PER_FS};

/// Fraction of |f|² on the outermost grid ring above which a spectrum is
/// flagged as truncated.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-4;

/// Gaussian pump envelope exp(−(ω_p − ϖ)²/σ²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub central_wavelength_nm: f64,
    pub fwhm_nm: f64,
    #[serde(default)]
    pub fwhm_convention: FwhmConvention,
}

impl PumpSpec {
    pub fn new(central_wavelength_nm: f64, fwhm_nm: f64) -> Self {
        Self {
            central_wavelength_nm,
            fwhm_nm,
            fwhm_convention: FwhmConvention::default(),
        }
    }

    /// Pump centred on the degeneracy of `p`.
    pub fn at_degeneracy(p: &PhasematchParams, fwhm_nm: f64) -> Self {
        Self::new(0.5 * p.lambda_d, fwhm_nm)
    }

    pub fn with_convention(mut self, c: FwhmConvention) -> Self {
        self.fwhm_convention = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_nm > 0.0) || !self.fwhm_nm.is_finite() {
            return Err(BrwError::domain("fwhm_nm", self.fwhm_nm, "> 0"));
        }
        let (lo, hi) = VALIDITY_WINDOWS_NM[0];
        if !(lo..=hi).contains(&self.central_wavelength_nm) {
            return Err(BrwError::domain(
                "central_wavelength_nm",
                self.central_wavelength_nm,
                format!("pump window [{lo}, {hi}] nm"),
            ));
        }
        Ok(())
    }

    /// Envelope width σ in rad/fs.
    pub fn sigma(&self) -> f64 {
        sigma_from_fwhm_nm(self.central_wavelength_nm, self.fwhm_nm, self.fwhm_convention)
    }
}

/// Sampling of the signal and idler detuning axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// rad/fs
    pub half_width_s: f64,
    /// rad/fs
    pub half_width_i: f64,
    pub n_s: usize,
    pub n_i: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(0.2, 1024)
    }
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            half_width_s: half_width,
            half_width_i: half_width,
            n_s: n,
            n_i: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_s", self.n_s), ("n_i", self.n_i)] {
            if n < 64 || n % 2 != 0 {
                return Err(BrwError::Grid(format!("{name} = {n} must be even and >= 64")));
            }
        }
        for (name, w) in [("half_width_s", self.half_width_s), ("half_width_i", self.half_width_i)] {
            if !(w > 0.0) || !w.is_finite() {
                return Err(BrwError::domain(name, w, "> 0"));
            }
        }
        Ok(())
    }

    pub fn is_square(&self) -> bool {
        self.n_s == self.n_i && self.half_width_s == self.half_width_i
    }

    pub fn step_s(&self) -> f64 {
        2.0 * self.half_width_s / self.n_s as f64
    }

    pub fn step_i(&self) -> f64 {
        2.0 * self.half_width_i / self.n_i as f64
    }

    /// Cell-centred axis, symmetric about zero.
    fn axis(half_width: f64, n: usize) -> Vec<f64> {
        let d = 2.0 * half_width / n as f64;
        (0..n).map(|j| (j as f64 - 0.5 * (n as f64 - 1.0)) * d).collect()
    }

    pub fn nu_s(&self) -> Vec<f64> {
        Self::axis(self.half_width_s, self.n_s)
    }

    pub fn nu_i(&self) -> Vec<f64> {
        Self::axis(self.half_width_i, self.n_i)
    }

    /// Same extents, twice the samples per axis.
    pub fn refined(&self) -> Self {
        Self {
            n_s: 2 * self.n_s,
            n_i: 2 * self.n_i,
            ..*self
        }
    }
}

/// Normalized amplitude f(ν_s, ν_i), rows indexed by signal detuning.
#[derive(Debug, Clone)]
pub struct JointSpectrum {
    pub grid: GridSpec,
    pub amplitude: Array2<Complex64>,
    /// (ω⁰_s, ω⁰_i) in rad/fs.
    pub origin: (f64, f64),
    /// Σ|f|²Δν_sΔν_i before normalization.
    pub norm: f64,
    /// Share of |f|² on the outermost ring of cells.
    pub boundary_mass: f64,
    pub params: PhasematchParams,
    pub pump: Option<PumpSpec>,
}

impl JointSpectrum {
    /// Wraps an arbitrary amplitude and normalizes it.
    pub fn from_amplitude(
        grid: GridSpec,
        amplitude: Array2<Complex64>,
        params: PhasematchParams,
        pump: Option<PumpSpec>,
    ) -> Result<Self> {
        grid.validate()?;
        if amplitude.dim() != (grid.n_s, grid.n_i) {
            return Err(BrwError::Grid(format!(
                "amplitude shape {:?} does not match grid {}x{}",
                amplitude.dim(),
                grid.n_s,
                grid.n_i
            )));
        }
        let cell = grid.step_s() * grid.step_i();
        let mass = ordered_sum(amplitude.iter().map(|z| z.norm_sqr()).collect());
        let norm = mass * cell;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(BrwError::Invalid(format!("amplitude has no finite mass ({norm})")));
        }
        let (ns, ni) = (grid.n_s, grid.n_i);
        let mut ring = 0.0;
        for ((j, k), z) in amplitude.indexed_iter() {
            if j == 0 || k == 0 || j == ns - 1 || k == ni - 1 {
                ring += z.norm_sqr();
            }
        }
        let scale = 1.0 / norm.sqrt();
        let omega_d = params.omega_d();
        Ok(Self {
            grid,
            amplitude: amplitude.mapv(|z| z * scale),
            origin: (omega_d, omega_d),
            norm,
            boundary_mass: ring / mass,
            params,
            pump,
        })
    }

    pub fn truncated(&self) -> bool {
        self.boundary_mass > BOUNDARY_MASS_LIMIT
    }

    /// Σ|f|²Δν_sΔν_i; unity after construction.
    pub fn total_mass(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.step_s() * self.grid.step_i()
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "nu_s_rad_per_fs,nu_i_rad_per_fs,re_f,im_f")?;
        let (ns, ni) = (self.grid.nu_s(), self.grid.nu_i());
        for ((j, k), z) in self.amplitude.indexed_iter() {
            writeln!(out, "{:.9e},{:.9e},{:.9e},{:.9e}", ns[j], ni[k], z.re, z.im)?;
        }
        Ok(())
    }

    /// Compact JSON description (no amplitude data).
    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "params": self.params,
            "pump": self.pump,
            "grid": self.grid,
            "origin_rad_per_fs": [self.origin.0, self.origin.1],
            "norm": self.norm,
            "boundary_mass": self.boundary_mass,
            "truncated": self.truncated(),
        })
    }
}

/// Sum independent of the input order, so that transposed or mirrored
/// amplitudes normalize bit-identically.
fn ordered_sum(mut v: Vec<f64>) -> f64 {
    v.par_sort_unstable_by(f64::total_cmp);
    v.iter().sum()
}

/// Δk(ν_s, ν_i) in rad/µm from the quadratic expansion about degeneracy.
pub fn phase_mismatch(nu_s: f64, nu_i: f64, p: &PhasematchParams) -> f64 {
    // grouped per photon so that swapping the roles transposes bit-exactly
    let s = (p.kappa_s + 0.5 * (p.k_s - p.k_p) * nu_s) * nu_s;
    let i = (p.kappa_i + 0.5 * (p.k_i - p.k_p) * nu_i) * nu_i;
    (s + i) - p.k_p * (nu_s * nu_i)
}

/// sin(x)/x, exact at the origin.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// sinc(ΔkL/2)·exp(−iΔkL/2).
pub fn phasematching_function(nu_s: f64, nu_i: f64, p: &PhasematchParams) -> Complex64 {
    phasematching_from_mismatch(phase_mismatch(nu_s, nu_i, p), p.length)
}

pub fn phasematching_from_mismatch(delta_k: f64, length_um: f64) -> Complex64 {
    let x = 0.5 * delta_k * length_um;
    Complex64::from_polar(sinc(x), -x)
}

/// Pump frequency offset from 2ω⁰ in rad/fs.
pub fn pump_detuning(p: &PhasematchParams, pump: &PumpSpec) -> f64 {
    omega_from_nm(pump.central_wavelength_nm) - p.omega_p0()
}

pub fn build_jsa(p: &PhasematchParams, pump: &PumpSpec, grid: &GridSpec) -> Result<JointSpectrum> {
    p.validate()?;
    pump.validate()?;
    grid.validate()?;
    let sigma = pump.sigma();
    let shift = pump_detuning(p, pump);
    let (nu_s, nu_i) = (grid.nu_s(), grid.nu_i());
    let envelope = |nu_p: f64| (-((nu_p - shift) / sigma).powi(2)).exp();
    // On a square grid every anti-diagonal shares one pump argument exactly.
    let diagonal: Option<Vec<f64>> = grid.is_square().then(|| {
        let n = grid.n_s;
        (0..2 * n - 1)
            .map(|d| envelope((d as f64 - (n as f64 - 1.0)) * grid.step_s()))
            .collect()
    });
    let mut data = vec![Complex64::new(0.0, 0.0); grid.n_s * grid.n_i];
    data.par_chunks_mut(grid.n_i)
        .zip(nu_s.par_iter())
        .enumerate()
        .for_each(|(j, (row, &s))| {
            for (k, (cell, &i)) in row.iter_mut().zip(&nu_i).enumerate() {
                let a = match &diagonal {
                    Some(env) => env[j + k],
                    None => envelope(s + i),
                };
                *cell = phasematching_function(s, i, p) * a;
            }
        });
    let amp = Array2::from_shape_vec((grid.n_s, grid.n_i), data)
        .map_err(|e| BrwError::Grid(e.to_string()))?;
    JointSpectrum::from_amplitude(*grid, amp, *p, Some(*pump))
}

/// Single-photon and product spectra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals {
    /// Detuning axis in rad/fs, shared by signal and idler on square grids.
    pub nu_s: Vec<f64>,
    pub nu_i: Vec<f64>,
    /// Densities per rad/fs; each integrates to one.
    pub signal: Vec<f64>,
    pub idler: Vec<f64>,
    /// Pointwise signal·idler; `None` unless the axes coincide.
    pub product: Option<Vec<f64>>,
    pub origin: (f64, f64),
}

pub fn marginals(jsa: &JointSpectrum) -> Marginals {
    let (ds, di) = (jsa.grid.step_s(), jsa.grid.step_i());
    let signal: Vec<f64> = jsa
        .amplitude
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>() * di)
        .collect();
    let idler: Vec<f64> = jsa
        .amplitude
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>() * ds)
        .collect();
    let product = (jsa.grid.is_square() && jsa.origin.0 == jsa.origin.1)
        .then(|| signal.iter().zip(&idler).map(|(a, b)| a * b).collect());
    Marginals {
        nu_s: jsa.grid.nu_s(),
        nu_i: jsa.grid.nu_i(),
        signal,
        idler,
        product,
        origin: jsa.origin,
    }
}

impl Marginals {
    /// Density per nm at vacuum wavelength for a density per rad/fs at ω.
    fn per_nm(density: f64, omega: f64) -> f64 {
        let l = nm_from_omega(omega);
        density * 2.0 * std::f64::consts::PI * C_NM_PER_FS / (l * l)
    }

    /// CSV with exact wavelength conversion, rows in ascending wavelength.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let common = self.product.is_some();
        if common {
            writeln!(out, "wavelength_nm,signal_per_nm,idler_per_nm,product_per_nm2")?;
        } else {
            writeln!(out, "wavelength_s_nm,signal_per_nm,wavelength_i_nm,idler_per_nm")?;
        }
        for j in (0..self.nu_s.len()).rev() {
            let ws = self.origin.0 + self.nu_s[j];
            let s = Self::per_nm(self.signal[j], ws);
            if common {
                let i = Self::per_nm(self.idler[j], ws);
                writeln!(out, "{:.6},{:.9e},{:.9e},{:.9e}", nm_from_omega(ws), s, i, s * i)?;
            } else {
                let k = j * self.nu_i.len() / self.nu_s.len();
                let wi = self.origin.1 + self.nu_i[k];
                let i = Self::per_nm(self.idler[k], wi);
                writeln!(out, "{:.6},{:.9e},{:.6},{:.9e}", nm_from_omega(ws), s, nm_from_omega(wi), i)?;
            }
        }
        Ok(())
    }

    /// Wavelength band (nm) holding all but `tail` of the signal density on each side.
    pub fn signal_band_nm(&self, tail: f64) -> (f64, f64) {
        band(&self.nu_s, &self.signal, self.origin.0, tail)
    }

    pub fn idler_band_nm(&self, tail: f64) -> (f64, f64) {
        band(&self.nu_i, &self.idler, self.origin.1, tail)
    }
}

fn band(nu: &[f64], density: &[f64], origin: f64, tail: f64) -> (f64, f64) {
    let total: f64 = density.iter().sum();
    let mut acc = 0.0;
    let mut lo = nu[0];
    for (v, d) in nu.iter().zip(density) {
        acc += d;
        if acc >= tail * total {
            lo = *v;
            break;
        }
    }
    acc = 0.0;
    let mut hi = *nu.last().unwrap();
    for (v, d) in nu.iter().zip(density).rev() {
        acc += d;
        if acc >= tail * total {
            hi = *v;
            break;
        }
    }
    // higher frequency is the shorter wavelength
    (nm_from_omega(origin + hi), nm_from_omega(origin + lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sym() -> PhasematchParams {
        PhasematchParams {
            kappa_s: -3.0,
            kappa_i: -3.0,
            k_s: 1.2,
            k_i: 1.2,
            k_p: 10.0,
            lambda_d: 1550.0,
            length: 2000.0,
        }
    }

    #[test]
    fn mismatch_hand_values() {
        let p = PhasematchParams::graded();
        assert_eq!(phase_mismatch(0.0, 0.0, &p), 0.0);
        let hand = -3.429e-3 + 0.5 * (1.217 - 10.834) * 1e-6;
        assert_relative_eq!(phase_mismatch(0.001, 0.0, &p), hand, max_relative = 1e-12);
        assert_relative_eq!(hand, -3.4338e-3, max_relative = 1e-4);
        let s = sym();
        assert_eq!(phase_mismatch(0.013, -0.02, &s), phase_mismatch(-0.02, 0.013, &s));
    }

    #[test]
    fn sinc_points() {
        assert_eq!(phasematching_from_mismatch(0.0, 2000.0), Complex64::new(1.0, 0.0));
        let pi = std::f64::consts::PI;
        let zero = phasematching_from_mismatch(2.0 * pi / 2000.0, 2000.0);
        assert!(zero.norm() < 1e-15);
        let half = phasematching_from_mismatch(pi / 2000.0, 2000.0);
        assert!((half - Complex64::new(0.0, -2.0 / pi)).norm() < 1e-15);
    }

    #[test]
    fn grid_rules() {
        assert!(GridSpec::square(0.2, 62).validate().is_err());
        assert!(GridSpec::square(0.2, 65).validate().is_err());
        assert!(GridSpec::square(-0.2, 64).validate().is_err());
        let g = GridSpec::square(0.2, 64);
        let nu = g.nu_s();
        assert_relative_eq!(nu[0], -nu[63], max_relative = 1e-15);
        assert_relative_eq!(nu[1] - nu[0], g.step_s(), max_relative = 1e-12);
    }

    #[test]
    fn pump_rules() {
        assert!(PumpSpec::new(776.9, 0.0).validate().is_err());
        assert!(PumpSpec::new(1550.0, 0.25).validate().is_err());
        assert!(PumpSpec::new(776.9, 0.25).validate().is_ok());
    }

    #[test]
    fn normalized_and_symmetric() {
        let p = sym();
        let j = build_jsa(&p, &PumpSpec::at_degeneracy(&p, 0.25), &GridSpec::square(0.2, 256)).unwrap();
        assert!((j.total_mass() - 1.0).abs() < 1e-9);
        assert_eq!(j.amplitude, j.amplitude.t());
        let m = marginals(&j);
        assert_eq!(m.signal, m.idler);
        let ds = j.grid.step_s();
        assert!((m.signal.iter().sum::<f64>() * ds - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pump_envelope_constant_on_antidiagonals() {
        let p = PhasematchParams::graded();
        let g = GridSpec::square(0.1, 64);
        let j = build_jsa(&p, &PumpSpec::new(776.9, 0.25), &g).unwrap();
        let (ns, ni) = (g.nu_s(), g.nu_i());
        let n = g.n_s;
        for d in 0..(2 * n - 1) {
            let mut seen: Option<Complex64> = None;
            for a in 0..n {
                let Some(b) = d.checked_sub(a).filter(|&b| b < n) else { continue };
                let phi = phasematching_function(ns[a], ni[b], &p);
                if phi.norm() <= 1e-6 || j.amplitude[[a, b]].norm() < 1e-280 {
                    continue;
                }
                let r = j.amplitude[[a, b]] / phi;
                if let Some(s) = seen {
                    assert!((r - s).norm() <= 1e-12 * s.norm().max(1e-300), "diag {d}");
                } else {
                    seen = Some(r);
                }
            }
        }
    }

    #[test]
    fn separable_gaussian_marginals() {
        let g = GridSpec::square(0.1, 128);
        let (ns, ni) = (g.nu_s(), g.nu_i());
        let (ws, wi) = (0.01, 0.02);
        let amp = Array2::from_shape_fn((128, 128), |(a, b)| {
            Complex64::new((-(ns[a] / ws).powi(2) - (ni[b] / wi).powi(2)).exp(), 0.0)
        });
        let j = JointSpectrum::from_amplitude(g, amp, sym(), None).unwrap();
        let m = marginals(&j);
        let pi = std::f64::consts::PI;
        for (k, v) in ns.iter().enumerate() {
            // |exp(-x²/w²)|² normalized: exp(-2x²/w²)·√(2/π)/w
            let es = (-2.0 * (v / ws).powi(2)).exp() * (2.0 / pi).sqrt() / ws;
            let ei = (-2.0 * (v / wi).powi(2)).exp() * (2.0 / pi).sqrt() / wi;
            assert!((m.signal[k] - es).abs() < 1e-9 * (1.0 / ws));
            assert!((m.idler[k] - ei).abs() < 1e-9 * (1.0 / wi));
        }
    }

    #[test]
    fn narrow_pump_hugs_antidiagonal() {
        let p = sym();
        let g = GridSpec::square(0.1, 128);
        let j = build_jsa(&p, &PumpSpec::at_degeneracy(&p, 1e-4), &g).unwrap();
        let n = g.n_s;
        let on: f64 = (0..n).map(|a| j.amplitude[[a, n - 1 - a]].norm_sqr()).sum();
        let all: f64 = j.amplitude.iter().map(|z| z.norm_sqr()).sum();
        assert!(on / all > 0.999);
    }

    #[test]
    fn swapped_params_transpose() {
        let p = PhasematchParams::m_core();
        let g = GridSpec::square(0.15, 128);
        let pump = PumpSpec::new(775.5, 0.25);
        let a = build_jsa(&p, &pump, &g).unwrap();
        let b = build_jsa(&p.swapped(), &pump, &g).unwrap();
        assert_eq!(a.amplitude.t(), b.amplitude);
    }
}
