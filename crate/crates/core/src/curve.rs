//! Sampled index-vs-wavelength curves.

use serde::{Deserialize, Serialize};

use crate::error::{BrwError, Result};

/// Effective (or bulk) refractive index sampled on a strictly increasing
/// wavelength grid. Between samples the curve is a natural cubic spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionCurve {
    pub wavelengths_nm: Vec<f64>,
    pub index: Vec<f64>,
    /// Composition tag for bulk-material curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub al_fraction: Option<f64>,
    #[serde(skip)]
    second_derivs: Vec<f64>,
}

impl DispersionCurve {
    pub fn new(wavelengths_nm: Vec<f64>, index: Vec<f64>) -> Result<Self> {
        if wavelengths_nm.is_empty() || wavelengths_nm.len() != index.len() {
            return Err(BrwError::Invalid(format!(
                "curve needs matching non-empty samples ({} wavelengths, {} indices)",
                wavelengths_nm.len(),
                index.len()
            )));
        }
        if wavelengths_nm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(BrwError::Invalid(
                "curve wavelengths must be strictly increasing".into(),
            ));
        }
        let second_derivs = natural_spline(&wavelengths_nm, &index);
        Ok(Self {
            wavelengths_nm,
            index,
            al_fraction: None,
            second_derivs,
        })
    }

    /// Builds a curve by evaluating `f` on `[lo, hi]` with the given step.
    pub fn from_fn(
        lo: f64,
        hi: f64,
        step: f64,
        mut f: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let wl: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
        let idx = wl.iter().map(|&l| f(l)).collect::<Result<Vec<_>>>()?;
        Self::new(wl, idx)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn min_nm(&self) -> f64 {
        self.wavelengths_nm[0]
    }

    pub fn max_nm(&self) -> f64 {
        *self.wavelengths_nm.last().unwrap()
    }

    /// Mean sample spacing in nm.
    pub fn step_nm(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        (self.max_nm() - self.min_nm()) / (self.len() - 1) as f64
    }

    pub fn contains(&self, wavelength_nm: f64) -> bool {
        wavelength_nm >= self.min_nm() && wavelength_nm <= self.max_nm()
    }

    /// Spline-interpolated index.
    pub fn eval(&self, wavelength_nm: f64) -> Result<f64> {
        if !self.contains(wavelength_nm) {
            return Err(BrwError::domain(
                "wavelength_nm",
                wavelength_nm,
                format!("curve range [{}, {}] nm", self.min_nm(), self.max_nm()),
            ));
        }
        let x = &self.wavelengths_nm;
        let y = &self.index;
        if x.len() == 1 {
            return Ok(y[0]);
        }
        // serde skips the spline table; rebuild lazily if absent
        let m = if self.second_derivs.len() == x.len() {
            std::borrow::Cow::Borrowed(&self.second_derivs)
        } else {
            std::borrow::Cow::Owned(natural_spline(x, y))
        };
        let k = match x.partition_point(|&v| v <= wavelength_nm) {
            0 => 0,
            p if p >= x.len() => x.len() - 2,
            p => p - 1,
        };
        let h = x[k + 1] - x[k];
        let a = (x[k + 1] - wavelength_nm) / h;
        let b = (wavelength_nm - x[k]) / h;
        Ok(a * y[k]
            + b * y[k + 1]
            + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0)
    }
}

/// Second derivatives of the natural cubic spline through (x, y).
fn natural_spline(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // tridiagonal solve (Thomas algorithm) for interior points
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let c = h1 / 6.0;
        let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}
