//! Transfer-matrix mode solver for planar multilayers, with an
//! effective-index correction for the finite ridge width.
//!
//! The transverse field `U` (E_y for TE, H_y for TM) is propagated together
//! with `W = U' / (p k0)`, where `p = 1` for TE and `p = n²` for TM. Both
//! are continuous across interfaces. Depth runs downward from the top
//! surface of the stack.

use serde::{Deserialize, Serialize};

use crate::error::{BrwError, Result};
use crate::material::{IndexModel, MaterialPoint};
use crate::stack::{LayerRole, LayerStack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub fn swapped(self) -> Self {
        match self {
            Polarization::TE => Polarization::TM,
            Polarization::TM => Polarization::TE,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        }
    }

    #[inline]
    fn weight(self, n: f64) -> f64 {
        match self {
            Polarization::TE => 1.0,
            Polarization::TM => n * n,
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = crate::error::BrwError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "te" => Ok(Polarization::TE),
            "tm" => Ok(Polarization::TM),
            _ => Err(crate::error::BrwError::Invalid(format!("unknown polarization '{s}' (te, tm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModeClass {
    TirFundamental,
    Bragg,
    Other,
}

/// A stack resolved to refractive indices at one wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabProfile {
    pub wavelength_nm: f64,
    pub thickness_nm: Vec<f64>,
    pub index: Vec<f64>,
    pub roles: Vec<LayerRole>,
    pub n_cap: f64,
    pub n_substrate: f64,
}

impl SlabProfile {
    pub fn new(
        wavelength_nm: f64,
        layers: &[(f64, f64, LayerRole)],
        n_cap: f64,
        n_substrate: f64,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(BrwError::Invalid("slab needs at least one layer".into()));
        }
        if layers.iter().any(|l| !(l.0 > 0.0) || !(l.1 >= 1.0)) {
            return Err(BrwError::Invalid(
                "slab layers need positive thickness and index >= 1".into(),
            ));
        }
        Ok(Self {
            wavelength_nm,
            thickness_nm: layers.iter().map(|l| l.0).collect(),
            index: layers.iter().map(|l| l.1).collect(),
            roles: layers.iter().map(|l| l.2).collect(),
            n_cap,
            n_substrate,
        })
    }

    pub fn from_stack(stack: &LayerStack, model: &dyn IndexModel, wavelength_nm: f64) -> Result<Self> {
        stack.validate()?;
        let mut index = Vec::with_capacity(stack.layers.len());
        for l in &stack.layers {
            index.push(model.refractive_index(MaterialPoint::new(l.al_fraction, wavelength_nm)?)?);
        }
        Ok(Self {
            wavelength_nm,
            thickness_nm: stack.layers.iter().map(|l| l.thickness_nm).collect(),
            index,
            roles: stack.layers.iter().map(|l| l.role).collect(),
            n_cap: stack.cap().index(model, wavelength_nm)?,
            n_substrate: stack.substrate().index(model, wavelength_nm)?,
        })
    }

    pub fn max_index(&self) -> f64 {
        self.index.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Lower end of the bound-mode range.
    pub fn max_cladding(&self) -> f64 {
        self.n_cap.max(self.n_substrate)
    }

    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength_nm
    }

    pub fn total_thickness_nm(&self) -> f64 {
        self.thickness_nm.iter().sum()
    }
}

type Mat2 = [[f64; 2]; 2];

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Maps (U, W) at the top of a homogeneous layer to depth `d` below it.
fn layer_matrix(n: f64, d: f64, n_eff: f64, k0: f64, pol: Polarization) -> Mat2 {
    let p = pol.weight(n);
    let diff = n * n - n_eff * n_eff;
    let s = diff.abs().sqrt();
    let phi = k0 * d * s;
    let q = s / p;
    if diff >= 0.0 {
        let (sin, cos) = phi.sin_cos();
        // sin(phi)/q written to stay finite as s -> 0
        let sinc = if phi < 1e-8 { 1.0 } else { sin / phi };
        [[cos, p * k0 * d * sinc], [-q * sin, cos]]
    } else {
        let (sinh, cosh) = (phi.sinh(), phi.cosh());
        let shc = if phi < 1e-8 { 1.0 } else { sinh / phi };
        [[cosh, p * k0 * d * shc], [q * sinh, cosh]]
    }
}

fn decay(n_clad: f64, n_eff: f64, pol: Polarization) -> f64 {
    (n_eff * n_eff - n_clad * n_clad).sqrt() / pol.weight(n_clad)
}

fn check_trial(profile: &SlabProfile, n_trial: f64) -> Result<()> {
    let lo = profile.max_cladding();
    let hi = profile.max_index();
    if !(n_trial > lo && n_trial <= hi) {
        return Err(BrwError::domain(
            "n_trial",
            n_trial,
            format!("bound-mode range ({lo:.6}, {hi:.6}]"),
        ));
    }
    Ok(())
}

/// Per-layer transfer matrices at trial index `n_eff`, top to bottom.
pub fn layer_matrices(profile: &SlabProfile, n_eff: f64, pol: Polarization) -> Vec<Mat2> {
    let k0 = profile.k0();
    profile
        .index
        .iter()
        .zip(&profile.thickness_nm)
        .map(|(&n, &d)| layer_matrix(n, d, n_eff, k0, pol))
        .collect()
}

/// Product of all layer matrices (bottom layer applied last).
pub fn total_transfer_matrix(profile: &SlabProfile, n_eff: f64, pol: Polarization) -> Mat2 {
    layer_matrices(profile, n_eff, pol)
        .iter()
        .fold([[1.0, 0.0], [0.0, 1.0]], |acc, m| matmul(m, &acc))
}

/// Dispersion-relation residual; its zeros in the bound range are the guided modes.
///
/// The state is rescaled by max(|U|, |W|) after every layer, which keeps the
/// sign of the residual while avoiding overflow in thick evanescent stacks.
pub fn mode_condition(profile: &SlabProfile, n_trial: f64, pol: Polarization) -> Result<f64> {
    check_trial(profile, n_trial)?;
    Ok(residual(profile, n_trial, pol))
}

fn residual(profile: &SlabProfile, n_eff: f64, pol: Polarization) -> f64 {
    let k0 = profile.k0();
    let mut u: f64 = 1.0;
    let mut w = decay(profile.n_cap, n_eff, pol);
    let scale = u.max(w.abs());
    u /= scale;
    w /= scale;
    for (&n, &d) in profile.index.iter().zip(&profile.thickness_nm) {
        let m = layer_matrix(n, d, n_eff, k0, pol);
        let (nu, nw) = (m[0][0] * u + m[0][1] * w, m[1][0] * u + m[1][1] * w);
        let scale = nu.abs().max(nw.abs());
        u = nu / scale;
        w = nw / scale;
    }
    w + decay(profile.n_substrate, n_eff, pol) * u
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSearch {
    /// Lower end of the scan; defaults to the highest cladding index.
    pub n_lo: Option<f64>,
    /// Upper end of the scan; defaults to the highest layer index.
    pub n_hi: Option<f64>,
    pub scan_step: f64,
}

impl Default for ModeSearch {
    fn default() -> Self {
        Self {
            n_lo: None,
            n_hi: None,
            scan_step: 1e-4,
        }
    }
}

/// Sample region of a field profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Cap,
    Layer(usize),
    Substrate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub depth_nm: Vec<f64>,
    /// Transverse amplitude, peak-normalized to +1.
    pub amplitude: Vec<f64>,
    pub region: Vec<Region>,
}

impl FieldProfile {
    /// Trapezoid integral of |U|² over samples whose region satisfies `pred`.
    fn intensity(&self, mut pred: impl FnMut(Region) -> bool) -> f64 {
        let mut total = 0.0;
        for k in 1..self.depth_nm.len() {
            let (r0, r1) = (self.region[k - 1], self.region[k]);
            if r0 != r1 || !pred(r0) {
                continue;
            }
            let h = self.depth_nm[k] - self.depth_nm[k - 1];
            total += 0.5 * h * (self.amplitude[k - 1].powi(2) + self.amplitude[k].powi(2));
        }
        total
    }

    fn sign_changes(&self, mut pred: impl FnMut(Region) -> bool) -> usize {
        let floor = 1e-9;
        let mut last = 0.0f64;
        let mut count = 0;
        for (&a, &r) in self.amplitude.iter().zip(&self.region) {
            if !pred(r) || a.abs() < floor {
                continue;
            }
            if last != 0.0 && a.signum() != last.signum() {
                count += 1;
            }
            last = a;
        }
        count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub n_eff: f64,
    pub polarization: Polarization,
    pub wavelength_nm: f64,
    pub field_profile: Option<FieldProfile>,
    pub mode_class: ModeClass,
    /// Share of the integrated intensity inside core and matching layers.
    pub central_fraction: f64,
}

/// Samples the mode field at `n_eff` by re-propagating from the cap.
pub fn field_profile(profile: &SlabProfile, n_eff: f64, pol: Polarization) -> FieldProfile {
    let k0 = profile.k0();
    let per_nm = 40.0 * profile.max_index() / profile.wavelength_nm;
    let mut depth = Vec::new();
    let mut amp = Vec::new();
    let mut region = Vec::new();

    let g_cap = decay(profile.n_cap, n_eff, pol) * pol.weight(profile.n_cap) * k0;
    let tail_cap = (6.0 / g_cap).min(4000.0);
    let n_tail = 60;
    for k in 0..n_tail {
        let x = -tail_cap * (1.0 - k as f64 / n_tail as f64);
        depth.push(x);
        amp.push((g_cap * x).exp());
        region.push(Region::Cap);
    }

    let mut u = 1.0;
    let mut w = decay(profile.n_cap, n_eff, pol);
    let mut log_scale = 0.0f64;
    let mut top = 0.0;
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    for (i, (&n, &d)) in profile.index.iter().zip(&profile.thickness_nm).enumerate() {
        let steps = ((d * per_nm).ceil() as usize).max(8);
        for s in 0..=steps {
            let z = d * s as f64 / steps as f64;
            let m = layer_matrix(n, z, n_eff, k0, pol);
            depth.push(top + z);
            pieces.push((m[0][0] * u + m[0][1] * w, log_scale, 0.0));
            amp.push(0.0);
            region.push(Region::Layer(i));
        }
        let m = layer_matrix(n, d, n_eff, k0, pol);
        let (nu, nw) = (m[0][0] * u + m[0][1] * w, m[1][0] * u + m[1][1] * w);
        let scale = nu.abs().max(nw.abs());
        u = nu / scale;
        w = nw / scale;
        log_scale += scale.ln();
        top += d;
    }
    let g_sub = decay(profile.n_substrate, n_eff, pol) * pol.weight(profile.n_substrate) * k0;
    let tail_sub = (6.0 / g_sub).min(4000.0);
    for k in 1..=n_tail {
        let x = tail_sub * k as f64 / n_tail as f64;
        depth.push(top + x);
        pieces.push((u * (-g_sub * x).exp(), log_scale, 0.0));
        amp.push(0.0);
        region.push(Region::Substrate);
    }

    // undo the running normalisation relative to the largest scale reached
    let max_log = pieces
        .iter()
        .map(|p| p.1 + p.0.abs().max(1e-300).ln())
        .fold(0.0f64, f64::max);
    let mut j = 0;
    for k in 0..amp.len() {
        match region[k] {
            Region::Cap => amp[k] *= (-max_log).exp(),
            _ => {
                let (v, ls, _) = pieces[j];
                amp[k] = v * (ls - max_log).exp();
                j += 1;
            }
        }
    }
    let peak_idx = amp
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let peak = amp[peak_idx];
    if peak != 0.0 {
        amp.iter_mut().for_each(|a| *a /= peak);
    }
    FieldProfile {
        depth_nm: depth,
        amplitude: amp,
        region,
    }
}

/// Assigns a mode class from the field profile and the layer roles.
pub fn classify_mode(m: &ModeSolution, profile: &SlabProfile) -> Result<(ModeClass, f64)> {
    let f = m
        .field_profile
        .as_ref()
        .ok_or_else(|| BrwError::Invalid("mode has no field profile".into()))?;
    let is_central = |r: Region| matches!(r, Region::Layer(i) if profile.roles[i].is_central());
    let is_dbr = |r: Region| matches!(r, Region::Layer(i) if profile.roles[i].is_dbr());
    let total = f.intensity(|_| true);
    let central = f.intensity(is_central);
    let frac = if total > 0.0 { central / total } else { 0.0 };

    if f.sign_changes(is_central) == 0 && frac >= 0.7 {
        return Ok((ModeClass::TirFundamental, frac));
    }
    // the Bragg mode peaks in the core proper; matching-layer peaks belong to
    // higher-order TIR modes
    let has_core = profile.roles.contains(&LayerRole::Core);
    let in_core = |r: Region| match r {
        Region::Layer(i) if has_core => profile.roles[i] == LayerRole::Core,
        r => is_central(r),
    };
    let peak_central = f
        .amplitude
        .iter()
        .zip(&f.region)
        .max_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .map(|(_, &r)| in_core(r))
        .unwrap_or(false);
    let n_match = profile
        .roles
        .iter()
        .zip(&profile.index)
        .filter(|(r, _)| **r == LayerRole::Matching)
        .map(|(_, &n)| n)
        .reduce(f64::min)
        .or_else(|| {
            profile
                .roles
                .iter()
                .zip(&profile.index)
                .filter(|(r, _)| r.is_central())
                .map(|(_, &n)| n)
                .reduce(f64::max)
        });
    let below_match = n_match.is_some_and(|n| m.n_eff < n);
    if peak_central && below_match && f.sign_changes(is_dbr) > 0 {
        return Ok((ModeClass::Bragg, frac));
    }
    Ok((ModeClass::Other, frac))
}

fn search_range(profile: &SlabProfile, search: &ModeSearch) -> Result<(f64, f64)> {
    let lo_bound = profile.max_cladding();
    let hi_bound = profile.max_index();
    let lo = search.n_lo.unwrap_or(lo_bound).max(lo_bound);
    let hi = search.n_hi.unwrap_or(hi_bound).min(hi_bound);
    if !(search.scan_step > 0.0) {
        return Err(BrwError::domain("scan_step", search.scan_step, "> 0"));
    }
    Ok((lo, hi))
}

fn bisect(profile: &SlabProfile, pol: Polarization, mut a: f64, mut b: f64, mut ra: f64) -> f64 {
    // a < b, sign change between them
    for _ in 0..200 {
        if b - a <= 1e-13 {
            break;
        }
        let m = 0.5 * (a + b);
        let rm = residual(profile, m, pol);
        if rm == 0.0 {
            return m;
        }
        if (rm > 0.0) == (ra > 0.0) {
            a = m;
            ra = rm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn build_mode(profile: &SlabProfile, n_eff: f64, pol: Polarization) -> ModeSolution {
    let mut m = ModeSolution {
        n_eff,
        polarization: pol,
        wavelength_nm: profile.wavelength_nm,
        field_profile: Some(field_profile(profile, n_eff, pol)),
        mode_class: ModeClass::Other,
        central_fraction: 0.0,
    };
    let (c, frac) = classify_mode(&m, profile).expect("profile attached");
    m.mode_class = c;
    m.central_fraction = frac;
    m
}

/// Scans downward in n_eff and calls `visit` for each refined mode until it returns `true`.
fn scan_modes(
    profile: &SlabProfile,
    pol: Polarization,
    search: &ModeSearch,
    mut visit: impl FnMut(ModeSolution) -> bool,
) -> Result<()> {
    let (lo, hi) = search_range(profile, search)?;
    if hi <= lo {
        return Ok(());
    }
    // stay strictly inside the open range; the endpoints are degenerate
    let eps = 1e-12;
    let top = hi - eps;
    let bottom = lo + eps;
    let mut n_prev = top;
    let mut r_prev = residual(profile, n_prev, pol);
    let mut k = 1usize;
    loop {
        let n = (top - k as f64 * search.scan_step).max(bottom);
        let r = residual(profile, n, pol);
        if r == 0.0 || (r > 0.0) != (r_prev > 0.0) {
            let root = if r == 0.0 { n } else { bisect(profile, pol, n, n_prev, r) };
            if visit(build_mode(profile, root, pol)) {
                return Ok(());
            }
        }
        if n <= bottom {
            return Ok(());
        }
        n_prev = n;
        r_prev = r;
        k += 1;
    }
}

/// All guided modes in the search range, sorted by descending n_eff.
pub fn find_guided_modes(
    profile: &SlabProfile,
    pol: Polarization,
    search: &ModeSearch,
) -> Result<Vec<ModeSolution>> {
    let mut out = Vec::new();
    scan_modes(profile, pol, search, |m| {
        out.push(m);
        false
    })?;
    out.sort_by(|a, b| b.n_eff.total_cmp(&a.n_eff));
    Ok(out)
}

/// Which guided mode a solve should return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeTarget {
    /// Highest-index TIR_FUNDAMENTAL mode.
    TirFundamental,
    /// The BRAGG mode with the largest share of intensity in the core region.
    Bragg,
    /// The BRAGG mode whose index is closest to the given value.
    BraggNear(f64),
    /// Highest-index mode of any class.
    Highest,
}

impl ModeTarget {
    fn label(self) -> &'static str {
        match self {
            ModeTarget::TirFundamental => "TIR fundamental",
            ModeTarget::Bragg | ModeTarget::BraggNear(_) => "Bragg",
            ModeTarget::Highest => "guided",
        }
    }
}

pub fn find_mode(
    profile: &SlabProfile,
    pol: Polarization,
    target: ModeTarget,
    search: &ModeSearch,
) -> Result<ModeSolution> {
    let mut found: Option<ModeSolution> = None;
    match target {
        ModeTarget::Highest => scan_modes(profile, pol, search, |m| {
            found = Some(m);
            true
        })?,
        ModeTarget::TirFundamental => scan_modes(profile, pol, search, |m| {
            if m.mode_class == ModeClass::TirFundamental {
                found = Some(m);
                true
            } else {
                false
            }
        })?,
        ModeTarget::Bragg => scan_modes(profile, pol, search, |m| {
            if m.mode_class == ModeClass::Bragg
                && found
                    .as_ref()
                    .is_none_or(|f| m.central_fraction > f.central_fraction)
            {
                found = Some(m);
            }
            false
        })?,
        ModeTarget::BraggNear(r) => scan_modes(profile, pol, search, |m| {
            if m.mode_class == ModeClass::Bragg
                && found
                    .as_ref()
                    .is_none_or(|f| (m.n_eff - r).abs() < (f.n_eff - r).abs())
            {
                found = Some(m);
            }
            false
        })?,
    }
    found.ok_or(BrwError::ModeNotFound {
        what: target.label(),
        wavelength_nm: profile.wavelength_nm,
    })
}

/// How the etched-region index of the effective-index method was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtchedIndexSource {
    /// Same mode class as under the ridge.
    SameClass,
    /// Highest guided mode below the ridge-region index.
    NextMode,
    /// No guided mode; the exterior cladding index.
    Cladding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeIndex {
    pub n_eff: f64,
    /// Slab index under the ridge.
    pub n_ridge_slab: f64,
    /// Slab index beside the ridge.
    pub n_etched_slab: f64,
    pub etched_source: EtchedIndexSource,
}

/// Effective-index approximation of the ridge waveguide for one mode.
pub fn effective_index_2d(
    stack: &LayerStack,
    model: &dyn IndexModel,
    wavelength_nm: f64,
    pol: Polarization,
    target: ModeTarget,
    search: &ModeSearch,
) -> Result<RidgeIndex> {
    let under = SlabProfile::from_stack(stack, model, wavelength_nm)?;
    let n_i = find_mode(&under, pol, target, search)?.n_eff;
    ridge_from_slab_index(stack, model, wavelength_nm, pol, target, search, n_i)
}

/// Effective-index correction when the slab index under the ridge is already known.
pub fn ridge_from_slab_index(
    stack: &LayerStack,
    model: &dyn IndexModel,
    wavelength_nm: f64,
    pol: Polarization,
    target: ModeTarget,
    search: &ModeSearch,
    n_i: f64,
) -> Result<RidgeIndex> {
    let (n_ii, source) = match stack.etched() {
        None => (1.0, EtchedIndexSource::Cladding),
        Some(etched) => {
            let beside = SlabProfile::from_stack(&etched, model, wavelength_nm)?;
            match find_mode(&beside, pol, target, search) {
                Ok(m) if m.n_eff < n_i => (m.n_eff, EtchedIndexSource::SameClass),
                _ => {
                    let below = ModeSearch {
                        n_hi: Some(n_i.min(beside.max_index())),
                        ..*search
                    };
                    match find_mode(&beside, pol, ModeTarget::Highest, &below) {
                        Ok(m) if m.n_eff < n_i => (m.n_eff, EtchedIndexSource::NextMode),
                        _ => (beside.max_cladding(), EtchedIndexSource::Cladding),
                    }
                }
            }
        }
    };
    if !(n_i > n_ii) {
        return Err(BrwError::OverNarrowRidge(format!(
            "ridge-region index {n_i:.6} does not exceed etched-region index {n_ii:.6}"
        )));
    }
    let lateral = SlabProfile::new(
        wavelength_nm,
        &[(stack.ridge_width_um * 1e3, n_i, LayerRole::Core)],
        n_ii,
        n_ii,
    )?;
    // vertical TE is polarized along the lateral interfaces' normal
    let lat_pol = pol.swapped();
    let lat_search = ModeSearch {
        n_lo: None,
        n_hi: None,
        scan_step: search.scan_step.min((n_i - n_ii) / 4.0),
    };
    let m = find_mode(&lateral, lat_pol, ModeTarget::Highest, &lat_search).map_err(|_| {
        BrwError::OverNarrowRidge(format!(
            "width {} um at {wavelength_nm} nm",
            stack.ridge_width_um
        ))
    })?;
    Ok(RidgeIndex {
        n_eff: m.n_eff,
        n_ridge_slab: n_i,
        n_etched_slab: n_ii,
        etched_source: source,
    })
}
