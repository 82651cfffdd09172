//! Phasematching, group indices, differential group delay and the
//! parameters of the second-order phase-mismatch expansion.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::DispersionCurve;
use crate::error::{BrwError, Result};
use crate::material::IndexModel;
use crate::solver::{
    effective_index_2d, find_mode, ModeSearch, ModeTarget, Polarization, SlabProfile,
};
use crate::stack::{LayerRole, LayerStack};
use crate::units::{omega_from_nm, C_UM_PER_FS};

/// Knobs of the solver pipeline that turns a stack into dispersion curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Polarization of the signal photon; the idler takes the other one.
    pub signal_polarization: Polarization,
    /// Apply the effective-index ridge correction on top of the slab solve.
    pub ridge_correction: bool,
    pub scan_step: f64,
    /// Signal/idler curves span λ_d ± this many nm.
    pub curve_half_window_nm: f64,
    pub curve_step_nm: f64,
    pub pump_step_nm: f64,
    /// Wavelength step of the central differences for ñ and K.
    pub fd_step_nm: f64,
    /// Degeneracy search range when no guess is available.
    pub search_lo_nm: f64,
    pub search_hi_nm: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            signal_polarization: Polarization::TE,
            ridge_correction: true,
            scan_step: 1e-4,
            curve_half_window_nm: 150.0,
            curve_step_nm: 1.0,
            pump_step_nm: 0.5,
            fd_step_nm: 1.0,
            search_lo_nm: 1500.0,
            search_hi_nm: 1600.0,
        }
    }
}

impl SolverSettings {
    pub fn idler_polarization(&self) -> Polarization {
        self.signal_polarization.swapped()
    }

    fn search(&self) -> ModeSearch {
        ModeSearch {
            scan_step: self.scan_step,
            ..ModeSearch::default()
        }
    }
}

/// Which of the three interacting modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wave {
    Signal,
    Idler,
    Pump,
}

/// Effective index of one interacting mode from a fresh solve.
///
/// Several Bragg-class modes can coexist at the pump wavelength; the one
/// taken is the Bragg mode closest to the mean slab index of the degenerate
/// signal/idler pair at twice the pump wavelength.
pub fn solve_index(
    stack: &LayerStack,
    model: &dyn IndexModel,
    wave: Wave,
    wavelength_nm: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    let search = settings.search();
    let (pol, target) = match wave {
        Wave::Signal => (settings.signal_polarization, ModeTarget::TirFundamental),
        Wave::Idler => (settings.idler_polarization(), ModeTarget::TirFundamental),
        Wave::Pump => {
            let p2 = SlabProfile::from_stack(stack, model, 2.0 * wavelength_nm)?;
            let tir = |pol| find_mode(&p2, pol, ModeTarget::TirFundamental, &search);
            let reference = 0.5 * (tir(Polarization::TE)?.n_eff + tir(Polarization::TM)?.n_eff);
            (Polarization::TE, ModeTarget::BraggNear(reference))
        }
    };
    solve_with_target(stack, model, pol, target, wavelength_nm, settings).map(|r| r.0)
}

/// Returns (effective index, slab index under the ridge) of the selected mode.
fn solve_with_target(
    stack: &LayerStack,
    model: &dyn IndexModel,
    pol: Polarization,
    target: ModeTarget,
    wavelength_nm: f64,
    settings: &SolverSettings,
) -> Result<(f64, f64)> {
    let search = settings.search();
    if settings.ridge_correction {
        effective_index_2d(stack, model, wavelength_nm, pol, target, &search)
            .map(|r| (r.n_eff, r.n_ridge_slab))
    } else {
        let p = SlabProfile::from_stack(stack, model, wavelength_nm)?;
        find_mode(&p, pol, target, &search).map(|m| (m.n_eff, m.n_eff))
    }
}

/// Pump curve followed by continuation from the sample nearest `center`:
/// each step asks for the Bragg mode closest to the linear extrapolation of
/// the previous slab indices. The curve ends where the mode is lost.
fn track_pump_curve(
    stack: &LayerStack,
    model: &dyn IndexModel,
    settings: &SolverSettings,
    grid: &[f64],
    center: f64,
) -> Result<DispersionCurve> {
    let c = grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - center).abs().total_cmp(&(b.1 - center).abs()))
        .map(|(k, _)| k)
        .ok_or_else(|| BrwError::Invalid("empty pump grid".into()))?;
    let n_c = solve_index(stack, model, Wave::Pump, grid[c], settings)?;
    let slab_c = {
        let p = SlabProfile::from_stack(stack, model, grid[c])?;
        let p2 = SlabProfile::from_stack(stack, model, 2.0 * grid[c])?;
        let s = settings.search();
        let tir = |pol| find_mode(&p2, pol, ModeTarget::TirFundamental, &s);
        let reference = 0.5 * (tir(Polarization::TE)?.n_eff + tir(Polarization::TM)?.n_eff);
        find_mode(&p, Polarization::TE, ModeTarget::BraggNear(reference), &s)?.n_eff
    };
    let walk = |dir: isize| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut hist = vec![slab_c];
        let mut k = c as isize + dir;
        while k >= 0 && (k as usize) < grid.len() {
            let guess = match hist.len() {
                1 => hist[0],
                n => 2.0 * hist[n - 1] - hist[n - 2],
            };
            match solve_with_target(
                stack,
                model,
                Polarization::TE,
                ModeTarget::BraggNear(guess),
                grid[k as usize],
                settings,
            ) {
                Ok((n, slab)) => {
                    out.push((grid[k as usize], n));
                    hist.push(slab);
                }
                Err(_) => break,
            }
            k += dir;
        }
        out
    };
    let (mut below, above) = rayon::join(|| walk(-1), || walk(1));
    below.reverse();
    below.push((grid[c], n_c));
    below.extend(above);
    let (wl, idx): (Vec<f64>, Vec<f64>) = below.into_iter().unzip();
    DispersionCurve::new(wl, idx)
}

/// n_p(λ/2) − [n_s(λ) + n_i(λ)]/2 at the degenerate point λ.
fn live_mismatch(
    stack: &LayerStack,
    model: &dyn IndexModel,
    wavelength_nm: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    let ns = solve_index(stack, model, Wave::Signal, wavelength_nm, settings)?;
    let ni = solve_index(stack, model, Wave::Idler, wavelength_nm, settings)?;
    let np = solve_index(stack, model, Wave::Pump, 0.5 * wavelength_nm, settings)?;
    Ok(np - 0.5 * (ns + ni))
}

/// Roots of `f` on `[lo, hi]`: coarse scan with step `step`, then bisection to `tol`.
/// Brackets that straddle a discontinuity (a mode swap) are dropped.
fn scan_roots(
    lo: f64,
    hi: f64,
    step: f64,
    tol: f64,
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let xs: Vec<f64> = (0..=n).map(|k| (lo + k as f64 * step).min(hi)).collect();
    let ys: Vec<Option<f64>> = xs.par_iter().map(|&x| f(x).ok()).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        let (Some(ya), Some(yb)) = (ys[k], ys[k + 1]) else {
            continue;
        };
        if ya == 0.0 {
            roots.push(xs[k]);
            continue;
        }
        if (ya > 0.0) == (yb > 0.0) {
            continue;
        }
        let (mut a, mut b, mut fa) = (xs[k], xs[k + 1], ya);
        let scale = ya.abs().max(yb.abs());
        let mut ok = true;
        while b - a > tol {
            let m = 0.5 * (a + b);
            let Ok(fm) = f(m) else {
                ok = false;
                break;
            };
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let r = 0.5 * (a + b);
        // a smooth crossing shrinks |f| with the bracket; a jump does not
        if ok && f(r).map(|v| v.abs() <= 1e-3 * scale + 1e-9).unwrap_or(false) {
            roots.push(r);
        }
    }
    roots
}

/// Degeneracy wavelength from fresh solves, nearest to `guess` within ±`half_range` nm.
pub fn degeneracy_wavelength_live(
    stack: &LayerStack,
    model: &dyn IndexModel,
    settings: &SolverSettings,
    guess: Option<f64>,
    half_range: f64,
) -> Result<f64> {
    let (lo, hi, center) = match guess {
        Some(g) => (
            (g - half_range).max(settings.search_lo_nm),
            (g + half_range).min(settings.search_hi_nm),
            g,
        ),
        None => (
            settings.search_lo_nm,
            settings.search_hi_nm,
            0.5 * (settings.search_lo_nm + settings.search_hi_nm),
        ),
    };
    let f = |l: f64| live_mismatch(stack, model, l, settings);
    let roots = scan_roots(lo, hi, 2.0, 1e-5, &f);
    roots
        .into_iter()
        .min_by(|a, b| (a - center).abs().total_cmp(&(b - center).abs()))
        .ok_or(BrwError::NoPhasematching {
            lo_nm: lo,
            hi_nm: hi,
        })
}

/// Signal, idler and pump effective-index curves of one stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletDispersion {
    pub signal: DispersionCurve,
    pub idler: DispersionCurve,
    pub pump: DispersionCurve,
    pub signal_polarization: Polarization,
}

impl TripletDispersion {
    pub fn from_curves(
        signal: DispersionCurve,
        idler: DispersionCurve,
        pump: DispersionCurve,
    ) -> Self {
        Self {
            signal,
            idler,
            pump,
            signal_polarization: Polarization::TE,
        }
    }

    /// Solves all three curves around the degeneracy wavelength. The pump
    /// window is clipped to the material model's validity band.
    pub fn solve(
        stack: &LayerStack,
        model: &dyn IndexModel,
        settings: &SolverSettings,
        lambda_d_nm: Option<f64>,
    ) -> Result<Self> {
        let ld = match lambda_d_nm {
            Some(l) => l,
            None => degeneracy_wavelength_live(stack, model, settings, None, 0.0)?,
        };
        let hw = settings.curve_half_window_nm;
        let clip = |lo: f64, hi: f64| -> (f64, f64) {
            let mut best = (lo, lo);
            for &(a, b) in model.validity_windows() {
                let (l, h) = (lo.max(a), hi.min(b));
                if h - l > best.1 - best.0 {
                    best = (l, h);
                }
            }
            best
        };
        let (slo, shi) = clip(ld - hw, ld + hw);
        let (plo, phi) = clip(0.5 * (ld - hw), 0.5 * (ld + hw));
        if !(shi > slo && phi > plo) {
            return Err(BrwError::Invalid(format!(
                "curve windows around {ld:.2} nm fall outside the material validity range"
            )));
        }
        let grid = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| lo + k as f64 * step).collect()
        };
        let curve = |wave: Wave, wl: Vec<f64>| -> Result<DispersionCurve> {
            let idx = wl
                .par_iter()
                .map(|&l| solve_index(stack, model, wave, l, settings))
                .collect::<Result<Vec<_>>>()?;
            DispersionCurve::new(wl, idx)
        };
        let sgrid = grid(slo, shi, settings.curve_step_nm);
        let pgrid = grid(plo, phi, settings.pump_step_nm);
        Ok(Self {
            signal: curve(Wave::Signal, sgrid.clone())?,
            idler: curve(Wave::Idler, sgrid)?,
            pump: track_pump_curve(stack, model, settings, &pgrid, 0.5 * ld)?,
            signal_polarization: settings.signal_polarization,
        })
    }

    fn mismatch(&self, l: f64) -> Result<f64> {
        Ok(self.pump.eval(0.5 * l)? - 0.5 * (self.signal.eval(l)? + self.idler.eval(l)?))
    }
}

/// Degeneracy wavelength from interpolated curves, to better than 0.01 nm.
pub fn degeneracy_wavelength(td: &TripletDispersion) -> Result<f64> {
    let lo = td
        .signal
        .min_nm()
        .max(td.idler.min_nm())
        .max(2.0 * td.pump.min_nm());
    let hi = td
        .signal
        .max_nm()
        .min(td.idler.max_nm())
        .min(2.0 * td.pump.max_nm());
    if !(hi > lo) {
        return Err(BrwError::NoPhasematching { lo_nm: lo, hi_nm: hi });
    }
    let f = |l: f64| td.mismatch(l);
    let roots = scan_roots(lo, hi, 0.5, 1e-6, &f);
    let mid = 0.5 * (lo + hi);
    roots
        .into_iter()
        .min_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()))
        .ok_or(BrwError::NoPhasematching { lo_nm: lo, hi_nm: hi })
}

/// Signal and idler wavelengths phasematched to pump wavelength `lambda_p_nm`.
///
/// Energy conservation is built in: ω_s = ω_p/2 + δ, ω_i = ω_p/2 − δ, and
/// the root search runs over δ only. Among several solutions the one closest
/// to degeneracy is returned.
pub fn phasematched_triplet(td: &TripletDispersion, lambda_p_nm: f64) -> Result<(f64, f64)> {
    let wp = omega_from_nm(lambda_p_nm);
    let np = td.pump.eval(lambda_p_nm)?;
    let lo = td.signal.min_nm().max(td.idler.min_nm());
    let hi = td.signal.max_nm().min(td.idler.max_nm());
    let w0 = 0.5 * wp;
    // δ range keeping both photons inside the curves
    let dmax = (omega_from_nm(lo) - w0).min(w0 - omega_from_nm(hi));
    if !(dmax > 0.0) {
        return Err(BrwError::NoPhasematching { lo_nm: lo, hi_nm: hi });
    }
    let g = |d: f64| -> Result<f64> {
        let ws = w0 + d;
        let wi = w0 - d;
        let ls = crate::units::nm_from_omega(ws);
        let li = crate::units::nm_from_omega(wi);
        Ok(td.signal.eval(ls.clamp(lo, hi))? * ws + td.idler.eval(li.clamp(lo, hi))? * wi - np * wp)
    };
    let d_edge = dmax * (1.0 - 1e-12);
    let step = d_edge / 2000.0;
    let roots = scan_roots(-d_edge, d_edge, step, 1e-14, &g);
    let d = roots
        .into_iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(BrwError::NoPhasematching { lo_nm: lo, hi_nm: hi })?;
    Ok((
        crate::units::nm_from_omega(w0 + d),
        crate::units::nm_from_omega(w0 - d),
    ))
}

/// Group index ñ = n + ω dn/dω with a central difference of `step_nm` in wavelength.
pub fn group_index_with_step(curve: &DispersionCurve, wavelength_nm: f64, step_nm: f64) -> Result<f64> {
    let (lm, lp) = (wavelength_nm - step_nm, wavelength_nm + step_nm);
    if !(lm > curve.min_nm() - 1e-9 && lp < curve.max_nm() + 1e-9) || !(step_nm > 0.0) {
        return Err(BrwError::domain(
            "wavelength_nm",
            wavelength_nm,
            format!(
                "interior of curve range [{}, {}] nm with step {step_nm} nm",
                curve.min_nm(),
                curve.max_nm()
            ),
        ));
    }
    let (lm, lp) = (lm.max(curve.min_nm()), lp.min(curve.max_nm()));
    let dn = curve.eval(lm)? - curve.eval(lp)?;
    let dw = omega_from_nm(lm) - omega_from_nm(lp);
    Ok(curve.eval(wavelength_nm)? + omega_from_nm(wavelength_nm) * dn / dw)
}

/// Group index with the default 1 nm difference step.
pub fn group_index(curve: &DispersionCurve, wavelength_nm: f64) -> Result<f64> {
    group_index_with_step(curve, wavelength_nm, 1.0)
}

/// K = (1/c) dñ/dω in fs²/µm, by central differences of ñ.
pub fn group_index_slope(curve: &DispersionCurve, wavelength_nm: f64, step_nm: f64) -> Result<f64> {
    let (lm, lp) = (wavelength_nm - step_nm, wavelength_nm + step_nm);
    let dn = group_index_with_step(curve, lm, step_nm)? - group_index_with_step(curve, lp, step_nm)?;
    let dw = omega_from_nm(lm) - omega_from_nm(lp);
    Ok(dn / dw / C_UM_PER_FS)
}

/// Average differential group delay in fs for a waveguide of `length_um`.
pub fn dgd(n_group_s: f64, n_group_i: f64, length_um: f64) -> Result<f64> {
    if !(length_um > 0.0) {
        return Err(BrwError::domain("length_um", length_um, "> 0"));
    }
    Ok(length_um / (2.0 * C_UM_PER_FS) * (n_group_s - n_group_i).abs())
}

const GRADED_PARAMS_JSON: &str = include_str!("../presets/graded_params.json");
const M_CORE_PARAMS_JSON: &str = include_str!("../presets/m_core_params.json");

/// Coefficients of the quadratic phase-mismatch expansion around degeneracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasematchParams {
    /// fs/µm
    pub kappa_s: f64,
    /// fs/µm
    pub kappa_i: f64,
    /// fs²/µm
    #[serde(rename = "K_s")]
    pub k_s: f64,
    /// fs²/µm
    #[serde(rename = "K_i")]
    pub k_i: f64,
    /// fs²/µm
    #[serde(rename = "K_p")]
    pub k_p: f64,
    /// Degeneracy wavelength in nm.
    pub lambda_d: f64,
    /// Waveguide length in µm.
    pub length: f64,
}

impl PhasematchParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("kappa_s", self.kappa_s),
            ("kappa_i", self.kappa_i),
            ("K_s", self.k_s),
            ("K_i", self.k_i),
            ("K_p", self.k_p),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(BrwError::domain(name, v, "finite"));
            }
        }
        if !(self.lambda_d > 0.0) {
            return Err(BrwError::domain("lambda_d", self.lambda_d, "> 0"));
        }
        if !(self.length > 0.0) {
            return Err(BrwError::domain("length", self.length, "> 0"));
        }
        Ok(())
    }

    /// Published parameters of the graded design.
    pub fn graded() -> Self {
        serde_json::from_str(GRADED_PARAMS_JSON).expect("graded params parse")
    }

    /// Published parameters of the multilayer-core design.
    pub fn m_core() -> Self {
        serde_json::from_str(M_CORE_PARAMS_JSON).expect("m_core params parse")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "graded" => Some(Self::graded()),
            "m_core" | "m-core" | "mcore" => Some(Self::m_core()),
            _ => None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BrwError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let p: Self = serde_json::from_str(&text).map_err(|source| BrwError::Json {
            path: path.display().to_string(),
            source,
        })?;
        p.validate()?;
        Ok(p)
    }

    /// Degenerate signal/idler angular frequency ω⁰ in rad/fs.
    pub fn omega_d(&self) -> f64 {
        omega_from_nm(self.lambda_d)
    }

    /// Pump angular frequency at degeneracy, 2ω⁰.
    pub fn omega_p0(&self) -> f64 {
        2.0 * self.omega_d()
    }

    /// Same process with signal and idler roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            kappa_s: self.kappa_i,
            kappa_i: self.kappa_s,
            k_s: self.k_i,
            k_i: self.k_s,
            ..*self
        }
    }

    /// DGD implied by the parameters: L |κ_s − κ_i| / 2, in fs.
    pub fn dgd_fs(&self) -> f64 {
        0.5 * self.length * (self.kappa_s - self.kappa_i).abs()
    }
}

/// Group indices of the three modes at degeneracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupIndices {
    pub signal: f64,
    pub idler: f64,
    pub pump: f64,
}

pub fn group_indices(td: &TripletDispersion, lambda_d: f64, step_nm: f64) -> Result<GroupIndices> {
    Ok(GroupIndices {
        signal: group_index_with_step(&td.signal, lambda_d, step_nm)?,
        idler: group_index_with_step(&td.idler, lambda_d, step_nm)?,
        pump: group_index_with_step(&td.pump, 0.5 * lambda_d, step_nm)?,
    })
}

/// κ and K at degeneracy from the three curves.
pub fn extract_jsa_params(td: &TripletDispersion, length_um: f64) -> Result<PhasematchParams> {
    extract_jsa_params_with_step(td, length_um, 1.0)
}

pub fn extract_jsa_params_with_step(
    td: &TripletDispersion,
    length_um: f64,
    step_nm: f64,
) -> Result<PhasematchParams> {
    let ld = degeneracy_wavelength(td)?;
    let g = group_indices(td, ld, step_nm)?;
    let p = PhasematchParams {
        kappa_s: (g.signal - g.pump) / C_UM_PER_FS,
        kappa_i: (g.idler - g.pump) / C_UM_PER_FS,
        k_s: group_index_slope(&td.signal, ld, step_nm)?,
        k_i: group_index_slope(&td.idler, ld, step_nm)?,
        k_p: group_index_slope(&td.pump, 0.5 * ld, step_nm)?,
        lambda_d: ld,
        length: length_um,
    };
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerField {
    Thickness,
    AlContent,
}

/// How a perturbation `delta` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConvention {
    /// Multiply by (1 + delta).
    Relative,
    /// Add delta to the Al fraction (0.02 = two percentage points).
    /// Thicknesses are still scaled relatively.
    AbsolutePoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityParam {
    pub group: LayerRole,
    pub field: LayerField,
    pub convention: DeltaConvention,
}

impl SensitivityParam {
    pub fn label(&self) -> String {
        let f = match self.field {
            LayerField::Thickness => "thickness",
            LayerField::AlContent => "al_content",
        };
        format!("{}_{}", self.group.as_str(), f)
    }

    pub fn apply(&self, stack: &LayerStack, delta: f64) -> Result<LayerStack> {
        if !stack.has_role(self.group) {
            return Err(BrwError::Invalid(format!(
                "stack has no {} layers",
                self.group.as_str()
            )));
        }
        let s = match (self.field, self.convention) {
            (LayerField::Thickness, _) => stack.with_scaled_thickness(self.group, 1.0 + delta),
            (LayerField::AlContent, DeltaConvention::Relative) => {
                stack.with_scaled_al(self.group, 1.0 + delta)
            }
            (LayerField::AlContent, DeltaConvention::AbsolutePoints) => {
                stack.with_shifted_al(self.group, delta)
            }
        };
        s.validate()?;
        Ok(s)
    }
}

/// Shift of the degeneracy wavelength caused by perturbing one layer group.
pub fn sensitivity_sweep(
    stack: &LayerStack,
    model: &dyn IndexModel,
    settings: &SolverSettings,
    param: SensitivityParam,
    delta: f64,
    baseline_nm: Option<f64>,
) -> Result<f64> {
    let perturbed = param.apply(stack, delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let base = match baseline_nm {
        Some(b) => b,
        None => degeneracy_wavelength_live(stack, model, settings, None, 0.0)?,
    };
    let moved = degeneracy_wavelength_live(&perturbed, model, settings, Some(base), 40.0)?;
    Ok(moved - base)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub parameter: String,
    pub delta: f64,
    pub shift_nm: Option<f64>,
}

/// The eight layer-parameter rows (matching, core, type-1, type-2; thickness
/// and Al content), evaluated in parallel.
pub fn sensitivity_table(
    stack: &LayerStack,
    model: &dyn IndexModel,
    settings: &SolverSettings,
    thickness_delta: f64,
    al_delta: f64,
    al_convention: DeltaConvention,
) -> Result<(f64, Vec<SensitivityRow>)> {
    let base = degeneracy_wavelength_live(stack, model, settings, None, 0.0)?;
    let mut params = Vec::new();
    for group in [LayerRole::Matching, LayerRole::Core, LayerRole::Dbr1, LayerRole::Dbr2] {
        params.push((
            SensitivityParam {
                group,
                field: LayerField::Thickness,
                convention: DeltaConvention::Relative,
            },
            thickness_delta,
        ));
        params.push((
            SensitivityParam {
                group,
                field: LayerField::AlContent,
                convention: al_convention,
            },
            al_delta,
        ));
    }
    let rows = params
        .par_iter()
        .map(|(p, d)| SensitivityRow {
            parameter: p.label(),
            delta: *d,
            shift_nm: sensitivity_sweep(stack, model, settings, *p, *d, Some(base)).ok(),
        })
        .collect();
    Ok((base, rows))
}

pub fn write_sensitivity_csv(rows: &[SensitivityRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "parameter,delta,shift_nm")?;
    for r in rows {
        let s = r.shift_nm.map_or_else(|| "nan".to_string(), |v| format!("{v:.4}"));
        writeln!(out, "{},{},{}", r.parameter, r.delta, s)?;
    }
    Ok(())
}

/// Signal and idler group indices at `wavelength_nm` from fresh solves.
pub fn live_group_indices(
    stack: &LayerStack,
    model: &dyn IndexModel,
    settings: &SolverSettings,
    wavelength_nm: f64,
) -> Result<(f64, f64)> {
    let h = settings.fd_step_nm;
    let ng = |wave: Wave| -> Result<f64> {
        let n0 = solve_index(stack, model, wave, wavelength_nm, settings)?;
        let nm = solve_index(stack, model, wave, wavelength_nm - h, settings)?;
        let np = solve_index(stack, model, wave, wavelength_nm + h, settings)?;
        let dw = omega_from_nm(wavelength_nm - h) - omega_from_nm(wavelength_nm + h);
        Ok(n0 + omega_from_nm(wavelength_nm) * (nm - np) / dw)
    };
    Ok((ng(Wave::Signal)?, ng(Wave::Idler)?))
}

/// DGD per length (fs/mm) over a grid of core and graded-mirror Al contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgdMap {
    pub al_core: Vec<f64>,
    pub al_dbr: Vec<f64>,
    /// Row-major over (al_core, al_dbr); `None` where a mode could not be found.
    pub dgd_fs_per_mm: Vec<Vec<Option<f64>>>,
    pub wavelength_nm: f64,
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Copy of `stack` with the mean Al fraction of `role` layers moved to `target`,
/// keeping the offsets between the layers of the group.
pub fn with_group_mean_al(stack: &LayerStack, role: LayerRole, target: f64) -> LayerStack {
    let xs: Vec<f64> = stack
        .layers
        .iter()
        .filter(|l| l.role == role)
        .map(|l| l.al_fraction)
        .collect();
    if xs.is_empty() {
        return stack.clone();
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    stack.with_shifted_al(role, target - mean)
}

pub fn group_mean_al(stack: &LayerStack, role: LayerRole) -> Option<f64> {
    let xs: Vec<f64> = stack
        .layers
        .iter()
        .filter(|l| l.role == role)
        .map(|l| l.al_fraction)
        .collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// DGD-per-length map at 1550 nm. The core axis sets the mean Al fraction of
/// the core layers, the second axis that of the graded mirror layers (both
/// graded sublayers move together).
pub fn dgd_map(
    stack: &LayerStack,
    model: &dyn IndexModel,
    settings: &SolverSettings,
    al_range_core: (f64, f64),
    al_range_graded_dbr: (f64, f64),
    grid_n: usize,
) -> Result<DgdMap> {
    for (name, r) in [("al_range_core", al_range_core), ("al_range_graded_dbr", al_range_graded_dbr)] {
        if !(0.0..=1.0).contains(&r.0) || !(0.0..=1.0).contains(&r.1) {
            return Err(BrwError::Invalid(format!("{name} = {r:?} outside [0, 1]")));
        }
    }
    if grid_n == 0 {
        return Err(BrwError::Invalid("grid_n must be >= 1".into()));
    }
    if !stack.has_role(LayerRole::GradedDbr) {
        return Err(BrwError::Invalid("stack has no graded_dbr layers".into()));
    }
    let wavelength_nm = 1550.0;
    let ac = axis(al_range_core, grid_n);
    let ad = axis(al_range_graded_dbr, grid_n);
    let cells: Vec<(usize, usize)> = (0..grid_n)
        .flat_map(|i| (0..grid_n).map(move |j| (i, j)))
        .collect();
    let values: Vec<Option<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let s = with_group_mean_al(stack, LayerRole::Core, ac[i]);
            let s = with_group_mean_al(&s, LayerRole::GradedDbr, ad[j]);
            s.validate().ok()?;
            let (ns, ni) = live_group_indices(&s, model, settings, wavelength_nm).ok()?;
            dgd(ns, ni, 1000.0).ok()
        })
        .collect();
    let dgd_fs_per_mm = values.chunks(grid_n).map(|r| r.to_vec()).collect();
    Ok(DgdMap {
        al_core: ac,
        al_dbr: ad,
        dgd_fs_per_mm,
        wavelength_nm,
    })
}

pub fn write_dgd_map_csv(map: &DgdMap, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "al_core,al_dbr,dgd_fs_per_mm")?;
    for (i, row) in map.dgd_fs_per_mm.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let s = v.map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
            writeln!(out, "{:.4},{:.4},{}", map.al_core[i], map.al_dbr[j], s)?;
        }
    }
    Ok(())
}
