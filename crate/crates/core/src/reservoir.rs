//! Output field of a nondegenerate parametric oscillator below threshold.
//!
//! All spectral matrices use the operator order `(r_I, r_II, r_I†, r_II†)` and
//! the transform `C̃(ω) = ∫dτ e^{iωτ} C(τ)`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{log_negativity, TwoModeCorr};

/// Points in the default frequency grid.
pub const DEFAULT_GRID_POINTS: usize = 801;

/// Relative margin kept between `ᾱ₋` and zero.
pub const THRESHOLD_MARGIN: f64 = 1e-9;

/// Nonlinear coupling, emission rate and spurious loss of the oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoParams {
    pub alpha: f64,
    pub zeta_b: f64,
    pub kappa_0: f64,
}

impl PoParams {
    pub fn new(alpha: f64, zeta_b: f64, kappa_0: f64) -> Result<Self> {
        let p = Self {
            alpha,
            zeta_b,
            kappa_0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Rates are finite and non-negative, `ζ_b > 0`, and the oscillator is below threshold.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("zeta_b", self.zeta_b),
            ("kappa_0", self.kappa_0),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.zeta_b <= 0.0 {
            return Err(Error::InvalidParams("zeta_b must be > 0".into()));
        }
        let total_loss = self.total_loss();
        let alpha_bar_minus = total_loss - self.alpha;
        if alpha_bar_minus < THRESHOLD_MARGIN * total_loss {
            return Err(Error::Threshold {
                alpha: self.alpha,
                total_loss,
                alpha_bar_minus,
            });
        }
        Ok(())
    }

    /// `ζ_b + κ₀`
    pub fn total_loss(&self) -> f64 {
        self.zeta_b + self.kappa_0
    }
}

/// `(ᾱ₊, ᾱ₋) = ζ_b + κ₀ ± α`.
pub fn decay_rates(p: &PoParams) -> Result<(f64, f64)> {
    p.validate()?;
    let g = p.total_loss();
    Ok((g + p.alpha, g - p.alpha))
}

/// Vacuum pattern: ones at `(r_I, r_I†)` and `(r_II, r_II†)`.
pub fn vacuum_pattern() -> Matrix4<f64> {
    let mut y = Matrix4::zeros();
    y[(0, 2)] = 1.0;
    y[(1, 3)] = 1.0;
    y
}

/// Correlation weights `𝒲₊` (`plus = true`) and `𝒲₋`.
pub fn correlation_weight(plus: bool) -> Matrix4<f64> {
    let s = if plus { -1.0 } else { 1.0 };
    Matrix4::new(
        0.0, 1.0, s, 0.0, //
        1.0, 0.0, 0.0, s, //
        s, 0.0, 0.0, 1.0, //
        0.0, s, 1.0, 0.0,
    )
}

/// Stationary two-time correlation `C(τ) = δ(τ) 𝒴 + smooth(τ)`.
///
/// Returns the δ-weight `𝒴` and the smooth part
/// `(αζ_b/2) Σ_± e^{−ᾱ_±|τ|} 𝒲_± / ᾱ_±`.
pub fn output_corr_tau(p: &PoParams, tau: f64) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    let (ap, am) = decay_rates(p)?;
    let pref = 0.5 * p.alpha * p.zeta_b;
    let smooth = correlation_weight(true) * (pref * (-ap * tau.abs()).exp() / ap)
        + correlation_weight(false) * (pref * (-am * tau.abs()).exp() / am);
    Ok((vacuum_pattern(), smooth))
}

/// Spectral density `C̃(ω) = 𝒴 + Σ_± αζ_b 𝒲_± / (ᾱ_±² + ω²)`.
pub fn spectral_density(p: &PoParams, omega: f64) -> Result<Matrix4<f64>> {
    let (ap, am) = decay_rates(p)?;
    let g = p.alpha * p.zeta_b;
    Ok(vacuum_pattern()
        + correlation_weight(true) * (g / (ap * ap + omega * omega))
        + correlation_weight(false) * (g / (am * am + omega * omega)))
}

/// `S(ω) = 1 − 4αζ_b / (ᾱ₊² + ω²)`
pub fn squeezing_spectrum(p: &PoParams, omega: f64) -> Result<f64> {
    let (ap, _) = decay_rates(p)?;
    Ok(1.0 - 4.0 * p.alpha * p.zeta_b / (ap * ap + omega * omega))
}

/// `T(ω) = 1 + 4αζ_b / (ᾱ₋² + ω²)`
pub fn antisqueezing_spectrum(p: &PoParams, omega: f64) -> Result<f64> {
    let (_, am) = decay_rates(p)?;
    Ok(1.0 + 4.0 * p.alpha * p.zeta_b / (am * am + omega * omega))
}

/// `S(ω) = ½ uᵀ C̃(ω) u` with `u = (1, −1, 1, −1)`, the collective quadrature
/// `(X_I − X_II)/√2`.
pub fn squeezing_from_density(p: &PoParams, omega: f64) -> Result<f64> {
    let u = Vector4::new(1.0, -1.0, 1.0, -1.0);
    Ok(0.5 * (u.transpose() * spectral_density(p, omega)? * u)[0])
}

/// `T(ω) = ½ vᵀ C̃(ω) v` with `v = i(1, −1, −1, 1)`; the factor `i² = −1` is applied explicitly.
pub fn antisqueezing_from_density(p: &PoParams, omega: f64) -> Result<f64> {
    let w = Vector4::new(1.0, -1.0, -1.0, 1.0);
    Ok(-0.5 * (w.transpose() * spectral_density(p, omega)? * w)[0])
}

/// The spectral density at `ω` as a two-mode correlation matrix.
pub fn reservoir_corr(p: &PoParams, omega: f64) -> Result<TwoModeCorr> {
    TwoModeCorr::from_real(&spectral_density(p, omega)?)
}

/// `max{0, −ln S(ω)}`: entanglement between the `ω` component of one output
/// mode and the `−ω` component of the other.
pub fn reservoir_en(p: &PoParams, omega: f64) -> Result<f64> {
    Ok((-squeezing_spectrum(p, omega)?.ln()).max(0.0))
}

/// Log-negativity of `C̃(ω)` evaluated through the generic two-mode route.
pub fn reservoir_en_from_density(p: &PoParams, omega: f64) -> Result<f64> {
    log_negativity(&reservoir_corr(p, omega)?)
}

/// Sampled curve over a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    omega_grid: Vec<f64>,
    values: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(omega_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega_grid.len() != values.len() {
            return Err(Error::MalformedInput(format!(
                "grid has {} points but {} values",
                omega_grid.len(),
                values.len()
            )));
        }
        check_grid(&omega_grid)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedInput("non-finite spectral value".into()));
        }
        Ok(Self { omega_grid, values })
    }

    /// Samples `f` on `grid`.
    pub fn sample(grid: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = grid.iter().map(|&w| f(w)).collect::<Result<Vec<_>>>()?;
        Self::new(grid.to_vec(), values)
    }

    pub fn omega_grid(&self) -> &[f64] {
        &self.omega_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::MalformedInput("non-finite grid point".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::MalformedInput(
            "frequency grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Evenly spaced grid with `points` samples on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::MalformedInput(
            "grid needs at least one point".into(),
        )),
        1 => Ok(vec![lo]),
        _ if !(hi > lo) => Err(Error::MalformedInput(format!(
            "grid bounds must satisfy lo < hi, got [{lo}, {hi}]"
        ))),
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            Ok((0..points)
                .map(|k| {
                    if k == points - 1 {
                        hi
                    } else {
                        lo + step * k as f64
                    }
                })
                .collect())
        }
    }
}

/// `[−2ᾱ₊, 2ᾱ₊]` with [`DEFAULT_GRID_POINTS`] samples.
pub fn default_grid(p: &PoParams) -> Result<Vec<f64>> {
    let (ap, _) = decay_rates(p)?;
    linear_grid(-2.0 * ap, 2.0 * ap, DEFAULT_GRID_POINTS)
}

/// `S`, `T` and `ℰ_N^PO` sampled on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirSpectra {
    pub squeezing: SpectralCurve,
    pub antisqueezing: SpectralCurve,
    pub entanglement: SpectralCurve,
}

pub fn reservoir_spectra(p: &PoParams, grid: &[f64]) -> Result<ReservoirSpectra> {
    Ok(ReservoirSpectra {
        squeezing: SpectralCurve::sample(grid, |w| squeezing_spectrum(p, w))?,
        antisqueezing: SpectralCurve::sample(grid, |w| antisqueezing_spectrum(p, w))?,
        entanglement: SpectralCurve::sample(grid, |w| reservoir_en(p, w))?,
    })
}
