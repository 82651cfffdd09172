//! Signal–idler exchange overlap and Hong-Ou-Mandel interference.
//!
//! O(τ) = Re ΣΣ f(ν_s, ν_i) f*(ν_i, ν_s) e^{i(ν_s − ν_i)τ} / ΣΣ |f|².
//! On a square grid ν_s − ν_i depends only on j − k, so the double sum
//! collapses once onto 2n − 1 diagonal sums and every further delay costs O(n).

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::PhasematchParams;
use crate::error::{BrwError, Result};
use crate::jsa::{build_jsa, GridSpec, JointSpectrum, PumpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    /// fs
    pub tau: f64,
    pub value: f64,
    /// |Im| of the normalized sum; zero up to rounding.
    pub residual_imag: f64,
}

/// Diagonal sums c_d = Σ_{j−k=d} f(j,k)·f*(k,j) of one spectrum.
#[derive(Debug, Clone)]
pub struct OverlapKernel {
    diagonals: Vec<Complex64>,
    /// offset of d = 0 in `diagonals`
    center: usize,
    step: f64,
    mass: f64,
}

impl OverlapKernel {
    pub fn new(jsa: &JointSpectrum) -> Result<Self> {
        if !jsa.grid.is_square() || jsa.origin.0 != jsa.origin.1 {
            return Err(BrwError::Grid(format!(
                "overlap needs identical signal and idler axes; re-grid with n_s = n_i and \
                 half_width_s = half_width_i (got {}x{}, ±{} / ±{} rad/fs)",
                jsa.grid.n_s, jsa.grid.n_i, jsa.grid.half_width_s, jsa.grid.half_width_i
            )));
        }
        let n = jsa.grid.n_s;
        let f = &jsa.amplitude;
        let diagonals: Vec<Complex64> = (0..2 * n - 1)
            .into_par_iter()
            .map(|idx| {
                let d = idx as isize - (n as isize - 1);
                let (j0, k0) = if d >= 0 { (d as usize, 0) } else { (0, (-d) as usize) };
                (0..n - j0.max(k0))
                    .map(|t| f[[j0 + t, k0 + t]] * f[[k0 + t, j0 + t]].conj())
                    .sum()
            })
            .collect();
        let mass = f.iter().map(|z| z.norm_sqr()).sum();
        Ok(Self {
            diagonals,
            center: n - 1,
            step: jsa.grid.step_s(),
            mass,
        })
    }

    pub fn eval(&self, tau_fs: f64) -> OverlapResult {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in self.diagonals.iter().enumerate() {
            let d = idx as f64 - self.center as f64;
            acc += c * Complex64::from_polar(1.0, d * self.step * tau_fs);
        }
        let v = acc / self.mass;
        OverlapResult {
            tau: tau_fs,
            value: v.re,
            residual_imag: v.im.abs(),
        }
    }
}

pub fn overlap(jsa: &JointSpectrum, tau_fs: f64) -> Result<OverlapResult> {
    Ok(OverlapKernel::new(jsa)?.eval(tau_fs))
}

/// Delay τ_c (fs) maximising the overlap, and O(τ_c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalDelay {
    pub tau_c: f64,
    pub o_max: f64,
}

pub fn optimal_delay(jsa: &JointSpectrum, tau_range: (f64, f64), tau_step: f64) -> Result<OptimalDelay> {
    optimal_delay_with(&OverlapKernel::new(jsa)?, tau_range, tau_step)
}

pub fn optimal_delay_with(k: &OverlapKernel, tau_range: (f64, f64), tau_step: f64) -> Result<OptimalDelay> {
    let (lo, hi) = tau_range;
    if !(tau_step > 0.0) {
        return Err(BrwError::domain("tau_step", tau_step, "> 0"));
    }
    if !(hi > lo) {
        return Err(BrwError::Invalid(format!("empty delay range [{lo}, {hi}] fs")));
    }
    let n = ((hi - lo) / tau_step).round() as usize + 1;
    let taus: Vec<f64> = (0..n).map(|t| lo + t as f64 * tau_step).collect();
    let vals: Vec<f64> = taus.iter().map(|&t| k.eval(t).value).collect();
    refine_peak(k, &taus, &vals)
}

/// Parabolic refinement around the best scanned sample.
fn refine_peak(k: &OverlapKernel, taus: &[f64], vals: &[f64]) -> Result<OptimalDelay> {
    let best = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| BrwError::Invalid("empty delay scan".into()))?;
    if best == 0 || best == vals.len() - 1 {
        return Err(BrwError::WidenRange { tau_fs: taus[best] });
    }
    let (y0, y1, y2) = (vals[best - 1], vals[best], vals[best + 1]);
    let h = taus[best + 1] - taus[best];
    let curv = y0 - 2.0 * y1 + y2;
    let mut out = OptimalDelay {
        tau_c: taus[best],
        o_max: y1,
    };
    if curv < 0.0 {
        let shift = 0.5 * h * (y0 - y2) / curv;
        let t = taus[best] + shift;
        let v = k.eval(t).value;
        if v > out.o_max {
            out = OptimalDelay { tau_c: t, o_max: v };
        }
    }
    Ok(out)
}

/// Coincidence probability behind a balanced beam splitter, ½ − ½·O(τ).
pub fn hom_probability(jsa: &JointSpectrum, tau_fs: f64) -> Result<f64> {
    Ok(probability_from_overlap(overlap(jsa, tau_fs)?.value))
}

#[inline]
pub fn probability_from_overlap(o: f64) -> f64 {
    0.5 - 0.5 * o
}

/// Coincidence probability far outside the dip.
pub const P_DISTINGUISHABLE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomScan {
    pub tau_fs: Vec<f64>,
    pub overlap: Vec<f64>,
    pub probability: Vec<f64>,
    pub tau_c: f64,
    pub o_max: f64,
    /// (P(∞) − P(τ_c)) / P(∞)
    pub visibility: f64,
    pub max_residual_imag: f64,
}

impl HomScan {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "tau_fs,overlap,P")?;
        for ((t, o), p) in self.tau_fs.iter().zip(&self.overlap).zip(&self.probability) {
            writeln!(out, "{t:.6},{o:.12},{p:.12}")?;
        }
        Ok(())
    }

    /// Largest |P − ½| at delays more than `guard_fs` from τ_c.
    pub fn max_fringe(&self, guard_fs: f64) -> f64 {
        self.tau_fs
            .iter()
            .zip(&self.probability)
            .filter(|(t, _)| (**t - self.tau_c).abs() > guard_fs)
            .map(|(_, p)| (p - P_DISTINGUISHABLE).abs())
            .fold(0.0, f64::max)
    }
}

pub fn hom_scan(jsa: &JointSpectrum, tau_min: f64, tau_max: f64, n: usize) -> Result<HomScan> {
    if n < 2 {
        return Err(BrwError::Invalid(format!("hom scan needs n >= 2, got {n}")));
    }
    if !(tau_max > tau_min) {
        return Err(BrwError::Invalid(format!("empty delay range [{tau_min}, {tau_max}] fs")));
    }
    let k = OverlapKernel::new(jsa)?;
    let step = (tau_max - tau_min) / (n - 1) as f64;
    let tau_fs: Vec<f64> = (0..n).map(|t| tau_min + t as f64 * step).collect();
    let res: Vec<OverlapResult> = tau_fs.iter().map(|&t| k.eval(t)).collect();
    let overlap: Vec<f64> = res.iter().map(|r| r.value).collect();
    let probability = overlap.iter().map(|&o| probability_from_overlap(o)).collect();
    let best = refine_peak(&k, &tau_fs, &overlap)?;
    let p_c = probability_from_overlap(best.o_max);
    Ok(HomScan {
        visibility: (P_DISTINGUISHABLE - p_c) / P_DISTINGUISHABLE,
        tau_c: best.tau_c,
        o_max: best.o_max,
        max_residual_imag: res.iter().map(|r| r.residual_imag).fold(0.0, f64::max),
        tau_fs,
        overlap,
        probability,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pump_nm: f64,
    pub o_at_0: f64,
    pub o_at_tau_c: f64,
}

/// Overlap at zero delay and at a fixed τ_c for a list of pump wavelengths.
/// `pump` supplies width and convention; its centre is replaced per row.
pub fn pump_detuning_sweep(
    p: &PhasematchParams,
    pump: &PumpSpec,
    grid: &GridSpec,
    pump_wavelengths_nm: &[f64],
    tau_c: f64,
) -> Result<Vec<SweepRow>> {
    pump_wavelengths_nm
        .par_iter()
        .map(|&l| {
            let spec = PumpSpec {
                central_wavelength_nm: l,
                ..*pump
            };
            let k = OverlapKernel::new(&build_jsa(p, &spec, grid)?)?;
            Ok(SweepRow {
                pump_nm: l,
                o_at_0: k.eval(0.0).value,
                o_at_tau_c: k.eval(tau_c).value,
            })
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "pump_nm,O_at_0,O_at_tauc")?;
    for r in rows {
        writeln!(out, "{:.6},{:.12},{:.12}", r.pump_nm, r.o_at_0, r.o_at_tau_c)?;
    }
    Ok(())
}
