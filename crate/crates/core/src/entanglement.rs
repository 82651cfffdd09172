//! Polarization entanglement from spectrally separated bands.
//!
//! Pairs are split by a dichroic mirror and filtered by two Gaussian band
//! passes; the filtered amplitudes
//!   g(ω_s, ω_i) = f(ω_s, ω_i) G₁(ω_s) G₂(ω_i) √(T(ω_s) R(ω_i))
//!   h(ω_s, ω_i) = f(ω_s, ω_i) G₁(ω_i) G₂(ω_s) √(T(ω_i) R(ω_s))
//! populate a two-qubit state with only HV and VH components.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix4, SymmetricEigen};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::PhasematchParams;
use crate::error::{BrwError, Result};
use crate::jsa::{build_jsa, GridSpec, JointSpectrum, PumpSpec};
use crate::units::{omega_from_nm, sigma_from_fwhm_nm, FwhmConvention, C_NM_PER_FS};

/// Relative tolerance of the filter energy-conservation check.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Bands must fit on the grid out to this many σ.
const COVERAGE_SIGMAS: f64 = 4.0;

/// Two Gaussian band passes whose centres share one pump photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub center_1_nm: f64,
    pub center_2_nm: f64,
    pub fwhm_nm: f64,
    #[serde(default)]
    pub fwhm_convention: FwhmConvention,
}

impl FilterSpec {
    /// Centres `separation_nm` apart in wavelength, placed so that
    /// ω₁ + ω₂ = ω_p for a pump at `pump_nm`. Centre 1 is the shorter wavelength.
    pub fn symmetric(pump_nm: f64, separation_nm: f64, fwhm_nm: f64) -> Self {
        let delta = band_offset(omega_from_nm(pump_nm) / 2.0, separation_nm);
        let wd = omega_from_nm(pump_nm) / 2.0;
        Self {
            center_1_nm: 2.0 * PI * C_NM_PER_FS / (wd + delta),
            center_2_nm: 2.0 * PI * C_NM_PER_FS / (wd - delta),
            fwhm_nm,
            fwhm_convention: FwhmConvention::default(),
        }
    }

    pub fn with_convention(mut self, c: FwhmConvention) -> Self {
        self.fwhm_convention = c;
        self
    }

    /// Relative violation of 1/λ₁ + 1/λ₂ = 1/λ_p.
    pub fn conservation_error(&self, pump_nm: f64) -> f64 {
        let lhs = 1.0 / self.center_1_nm + 1.0 / self.center_2_nm;
        let rhs = 1.0 / pump_nm;
        ((lhs - rhs) / rhs).abs()
    }

    pub fn validate(&self, pump_nm: f64) -> Result<()> {
        for (name, v) in [
            ("center_1_nm", self.center_1_nm),
            ("center_2_nm", self.center_2_nm),
            ("fwhm_nm", self.fwhm_nm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(BrwError::domain(name, v, "> 0"));
            }
        }
        let err = self.conservation_error(pump_nm);
        if err > CONSERVATION_TOL {
            return Err(BrwError::domain(
                "filter centers",
                err,
                format!("1/center_1 + 1/center_2 = 1/{pump_nm} nm to {CONSERVATION_TOL:e} relative"),
            ));
        }
        Ok(())
    }

    fn sigmas(&self) -> (f64, f64) {
        (
            sigma_from_fwhm_nm(self.center_1_nm, self.fwhm_nm, self.fwhm_convention),
            sigma_from_fwhm_nm(self.center_2_nm, self.fwhm_nm, self.fwhm_convention),
        )
    }

    /// |ω₁ − ω₂| in rad/fs.
    pub fn omega_separation(&self) -> f64 {
        (omega_from_nm(self.center_1_nm) - omega_from_nm(self.center_2_nm)).abs()
    }
}

/// Half the frequency gap δ that puts the band centres `separation_nm`
/// apart in wavelength around ω_d: λ(ω_d − δ) − λ(ω_d + δ) = separation.
fn band_offset(omega_d: f64, separation_nm: f64) -> f64 {
    let a = 2.0 * PI * C_NM_PER_FS;
    let s = separation_nm;
    s * omega_d * omega_d / (a + (a * a + s * s * omega_d * omega_d).sqrt())
}

/// Band passes applied to the two output ports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Filters {
    AllPass,
    Gaussian(FilterSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DichroicOrientation {
    /// T = 1 above the cutoff frequency.
    #[default]
    TransmitHigh,
    TransmitLow,
    /// Frequency-independent 50/50 splitter.
    Balanced,
}

impl DichroicOrientation {
    pub fn as_str(self) -> &'static str {
        match self {
            DichroicOrientation::TransmitHigh => "transmit_high",
            DichroicOrientation::TransmitLow => "transmit_low",
            DichroicOrientation::Balanced => "balanced",
        }
    }
}

impl std::str::FromStr for DichroicOrientation {
    type Err = BrwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transmit_high" => Ok(DichroicOrientation::TransmitHigh),
            "transmit_low" => Ok(DichroicOrientation::TransmitLow),
            "balanced" => Ok(DichroicOrientation::Balanced),
            _ => Err(BrwError::Invalid(format!(
                "unknown dichroic orientation '{s}' (transmit_high, transmit_low, balanced)"
            ))),
        }
    }
}

/// Step-function dichroic with T + R = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichroicSpec {
    pub cutoff_nm: f64,
    #[serde(default)]
    pub orientation: DichroicOrientation,
}

impl DichroicSpec {
    pub fn at(cutoff_nm: f64) -> Self {
        Self {
            cutoff_nm,
            orientation: DichroicOrientation::default(),
        }
    }

    pub fn balanced() -> Self {
        Self {
            cutoff_nm: f64::NAN,
            orientation: DichroicOrientation::Balanced,
        }
    }

    pub fn transmission(&self, omega: f64) -> f64 {
        let above = match self.orientation {
            DichroicOrientation::Balanced => return 0.5,
            DichroicOrientation::TransmitHigh => 1.0,
            DichroicOrientation::TransmitLow => 0.0,
        };
        let wc = omega_from_nm(self.cutoff_nm);
        if omega > wc {
            above
        } else if omega < wc {
            1.0 - above
        } else {
            0.5
        }
    }

    pub fn reflection(&self, omega: f64) -> f64 {
        1.0 - self.transmission(omega)
    }
}

/// Filtered amplitudes on the axes of the source spectrum.
#[derive(Debug, Clone)]
pub struct FilteredPair {
    pub g: Array2<Complex64>,
    pub h: Array2<Complex64>,
    /// Δν_s·Δν_i
    pub cell: f64,
}

pub fn filtered_amplitudes(jsa: &JointSpectrum, filters: &Filters, dichroic: &DichroicSpec) -> Result<FilteredPair> {
    let (nu_s, nu_i) = (jsa.grid.nu_s(), jsa.grid.nu_i());
    let ws: Vec<f64> = nu_s.iter().map(|v| jsa.origin.0 + v).collect();
    let wi: Vec<f64> = nu_i.iter().map(|v| jsa.origin.1 + v).collect();
    let (g1, g2): (Box<dyn Fn(f64) -> f64 + Sync>, Box<dyn Fn(f64) -> f64 + Sync>) = match filters {
        Filters::AllPass => (Box::new(|_| 1.0), Box::new(|_| 1.0)),
        Filters::Gaussian(spec) => {
            let (s1, s2) = spec.sigmas();
            let (w1, w2) = (omega_from_nm(spec.center_1_nm), omega_from_nm(spec.center_2_nm));
            for (axis, w) in [("signal", &ws), ("idler", &wi)] {
                let (lo, hi) = (w[0], w[w.len() - 1]);
                for (c, s) in [(w1, s1), (w2, s2)] {
                    if c - COVERAGE_SIGMAS * s < lo || c + COVERAGE_SIGMAS * s > hi {
                        return Err(BrwError::ExtendGrid(format!(
                            "band at {:.3} nm ± {COVERAGE_SIGMAS}σ leaves the {axis} axis [{:.3}, {:.3}] nm",
                            2.0 * PI * C_NM_PER_FS / c,
                            2.0 * PI * C_NM_PER_FS / hi,
                            2.0 * PI * C_NM_PER_FS / lo,
                        )));
                    }
                }
            }
            (
                Box::new(move |w: f64| (-((w - w1) / s1).powi(2)).exp()),
                Box::new(move |w: f64| (-((w - w2) / s2).powi(2)).exp()),
            )
        }
    };
    let t = |w: f64| dichroic.transmission(w);
    let r = |w: f64| dichroic.reflection(w);
    let (ns, ni) = jsa.amplitude.dim();
    let mut gd = vec![Complex64::new(0.0, 0.0); ns * ni];
    let mut hd = gd.clone();
    gd.par_chunks_mut(ni)
        .zip(hd.par_chunks_mut(ni))
        .enumerate()
        .for_each(|(j, (grow, hrow))| {
            let s = ws[j];
            for (k, &i) in wi.iter().enumerate() {
                let f = jsa.amplitude[[j, k]];
                grow[k] = f * (g1(s) * g2(i) * (t(s) * r(i)).sqrt());
                hrow[k] = f * (g1(i) * g2(s) * (t(i) * r(s)).sqrt());
            }
        });
    let shape_err = |e: ndarray::ShapeError| BrwError::Grid(e.to_string());
    let g = Array2::from_shape_vec((ns, ni), gd).map_err(shape_err)?;
    let h = Array2::from_shape_vec((ns, ni), hd).map_err(shape_err)?;
    Ok(FilteredPair {
        g,
        h,
        cell: jsa.grid.step_s() * jsa.grid.step_i(),
    })
}

/// HV/VH block of the two-photon polarization state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizationDensity {
    pub alpha: f64,
    pub beta: f64,
    #[serde(serialize_with = "ser_complex")]
    pub d: Complex64,
    pub concurrence: f64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl PolarizationDensity {
    /// Full 4×4 matrix in the basis HH, HV, VH, VV.
    pub fn matrix(&self) -> Matrix4<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let mut m = Matrix4::from_element(z);
        m[(1, 1)] = Complex64::new(self.alpha, 0.0);
        m[(2, 2)] = Complex64::new(self.beta, 0.0);
        m[(1, 2)] = self.d;
        m[(2, 1)] = self.d.conj();
        m
    }
}

pub fn density_matrix(pair: &FilteredPair) -> Result<PolarizationDensity> {
    let (g, h) = (&pair.g, &pair.h);
    if g.dim() != h.dim() || g.nrows() != g.ncols() {
        return Err(BrwError::Grid(format!(
            "g {:?} and h {:?} must share one square grid",
            g.dim(),
            h.dim()
        )));
    }
    let mg: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    let mh: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let total = mg + mh;
    if !(total > 0.0) {
        return Err(BrwError::NoPairs);
    }
    let n = g.nrows();
    // rows in parallel, reduced in a fixed order for reproducible output
    let rows: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|j| (0..n).map(|k| h[[k, j]] * g[[j, k]].conj()).sum::<Complex64>())
        .collect();
    let cross: Complex64 = rows.iter().sum();
    let d = cross / total;
    Ok(PolarizationDensity {
        alpha: mg / total,
        beta: mh / total,
        d,
        concurrence: (2.0 * d.norm()).min(1.0),
    })
}

/// 2|D|: concurrence of a state with empty HH and VV populations.
pub fn concurrence(rho: &PolarizationDensity) -> f64 {
    2.0 * rho.d.norm()
}

/// General two-qubit concurrence, max(0, λ₁ − λ₂ − λ₃ − λ₄) with λ the
/// decreasing square roots of the eigenvalues of √ρ ρ̃ √ρ,
/// ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y).
pub fn wootters_concurrence(rho: &Matrix4<Complex64>) -> f64 {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    // σ_y ⊗ σ_y is real and anti-diagonal: (−1, 1, 1, −1)
    let mut yy = Matrix4::from_element(z);
    yy[(0, 3)] = -one;
    yy[(1, 2)] = one;
    yy[(2, 1)] = one;
    yy[(3, 0)] = -one;
    let tilde = yy * rho.map(|c| c.conj()) * yy;
    let eig = SymmetricEigen::new(*rho);
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let sqrt_rho = eig.eigenvectors
        * Matrix4::from_diagonal(&sqrt_vals.map(|v| Complex64::new(v, 0.0)))
        * eig.eigenvectors.adjoint();
    let m = sqrt_rho * tilde * sqrt_rho;
    let mut l: Vec<f64> = SymmetricEigen::new((m + m.adjoint()) * Complex64::new(0.5, 0.0))
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementRow {
    pub separation_nm: f64,
    /// |ω₂ − ω₁| in rad/fs
    pub omega_separation: f64,
    pub alpha: f64,
    pub beta: f64,
    pub abs_d: f64,
    /// |arg D| in rad
    pub arg_d: f64,
    pub concurrence: f64,
}

/// Settings shared by every row of a separation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub filter_fwhm_nm: f64,
    #[serde(default)]
    pub filter_convention: FwhmConvention,
    #[serde(default)]
    pub orientation: DichroicOrientation,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            filter_fwhm_nm: 2.0,
            filter_convention: FwhmConvention::default(),
            orientation: DichroicOrientation::default(),
        }
    }
}

/// Density-matrix elements versus band separation, pump at degeneracy,
/// dichroic cutoff at the degenerate wavelength.
pub fn band_separation_sweep(
    p: &PhasematchParams,
    pump: &PumpSpec,
    grid: &GridSpec,
    separations_nm: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<EntanglementRow>> {
    let jsa = build_jsa(p, pump, grid)?;
    separation_rows(&jsa, pump.central_wavelength_nm, separations_nm, settings)
}

pub fn separation_rows(
    jsa: &JointSpectrum,
    pump_nm: f64,
    separations_nm: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<EntanglementRow>> {
    let dichroic = DichroicSpec {
        cutoff_nm: 2.0 * pump_nm,
        orientation: settings.orientation,
    };
    separations_nm
        .par_iter()
        .map(|&sep| {
            if !(sep >= 0.0) {
                return Err(BrwError::domain("separation_nm", sep, ">= 0"));
            }
            let spec = FilterSpec::symmetric(pump_nm, sep, settings.filter_fwhm_nm)
                .with_convention(settings.filter_convention);
            spec.validate(pump_nm)?;
            let rho = density_matrix(&filtered_amplitudes(jsa, &Filters::Gaussian(spec), &dichroic)?)?;
            Ok(EntanglementRow {
                separation_nm: sep,
                omega_separation: spec.omega_separation(),
                alpha: rho.alpha,
                beta: rho.beta,
                abs_d: rho.d.norm(),
                arg_d: rho.d.arg().abs(),
                concurrence: rho.concurrence,
            })
        })
        .collect()
}

pub fn write_rows_csv(rows: &[EntanglementRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "separation_nm,omega_separation_rad_per_fs,alpha,beta,absD,argD_rad,concurrence"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:.6},{:.9e},{:.12},{:.12},{:.12},{:.12},{:.12}",
            r.separation_nm, r.omega_separation, r.alpha, r.beta, r.abs_d, r.arg_d, r.concurrence
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn symmetric_centres_conserve_energy() {
        for sep in [0.0, 1.0, 20.0, 100.0] {
            let f = FilterSpec::symmetric(776.9, sep, 2.0);
            assert!(f.conservation_error(776.9) < 1e-12);
            assert!((f.center_2_nm - f.center_1_nm - sep).abs() < 1e-9);
            assert!(f.center_1_nm <= f.center_2_nm);
        }
        let mut bad = FilterSpec::symmetric(776.9, 10.0, 2.0);
        bad.center_2_nm += 0.1;
        assert!(bad.validate(776.9).unwrap_err().to_string().contains("1/center_1"));
    }

    #[test]
    fn dichroic_sums_to_one() {
        let d = DichroicSpec::at(1550.0);
        for l in [1500.0, 1549.9, 1550.0, 1550.1, 1600.0] {
            let w = omega_from_nm(l);
            assert_eq!(d.transmission(w) + d.reflection(w), 1.0);
        }
        assert_eq!(d.transmission(omega_from_nm(1550.0)), 0.5);
        assert_eq!(d.transmission(omega_from_nm(1500.0)), 1.0);
        assert_eq!(DichroicSpec::balanced().transmission(1.0), 0.5);
    }

    #[test]
    fn all_pass_balanced_halves_amplitude() {
        let p = PhasematchParams::graded();
        let j = build_jsa(&p, &PumpSpec::new(776.9, 0.25), &GridSpec::square(0.2, 64)).unwrap();
        let fp = filtered_amplitudes(&j, &Filters::AllPass, &DichroicSpec::balanced()).unwrap();
        for ((a, b), f) in fp.g.iter().zip(&fp.h).zip(&j.amplitude) {
            assert_eq!(*a, f * 0.5);
            assert_eq!(*b, f * 0.5);
        }
    }

    #[test]
    fn symmetric_source_is_maximally_entangled() {
        let p = sym();
        let pump = PumpSpec::at_degeneracy(&p, 0.25);
        let rows = band_separation_sweep(&p, &pump, &GridSpec::square(0.2, 512), &[0.0, 10.0], &Default::default())
            .unwrap();
        for r in rows {
            assert!((r.alpha - 0.5).abs() < 1e-12);
            assert!((r.abs_d - 0.5).abs() < 1e-9, "{r:?}");
            assert!((r.concurrence - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn blocked_band_gives_separable_state() {
        let p = PhasematchParams::graded();
        let j = build_jsa(&p, &PumpSpec::new(776.9, 0.25), &GridSpec::square(0.2, 64)).unwrap();
        let mut fp = filtered_amplitudes(&j, &Filters::AllPass, &DichroicSpec::at(1553.8)).unwrap();
        fp.g.fill(Complex64::new(0.0, 0.0));
        let rho = density_matrix(&fp).unwrap();
        assert_eq!((rho.alpha, rho.beta, rho.d.norm()), (0.0, 1.0, 0.0));
        fp.h.fill(Complex64::new(0.0, 0.0));
        assert!(matches!(density_matrix(&fp), Err(BrwError::NoPairs)));
    }

    #[test]
    fn band_off_grid_needs_wider_grid() {
        let p = PhasematchParams::graded();
        let j = build_jsa(&p, &PumpSpec::new(776.9, 0.25), &GridSpec::square(0.02, 64)).unwrap();
        let f = FilterSpec::symmetric(776.9, 60.0, 2.0);
        let e = filtered_amplitudes(&j, &Filters::Gaussian(f), &DichroicSpec::at(1553.8)).unwrap_err();
        assert!(matches!(e, BrwError::ExtendGrid(_)));
    }

    #[test]
    fn wootters_known_states() {
        let bell = PolarizationDensity {
            alpha: 0.5,
            beta: 0.5,
            d: Complex64::new(0.0, 0.5),
            concurrence: 1.0,
        };
        assert!((wootters_concurrence(&bell.matrix()) - 1.0).abs() < 1e-12);
        let mixed = PolarizationDensity { d: Complex64::new(0.0, 0.0), ..bell };
        assert!(wootters_concurrence(&mixed.matrix()).abs() < 1e-12);
    }
}
