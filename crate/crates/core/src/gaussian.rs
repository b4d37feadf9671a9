//! Two-mode Gaussian entanglement: quadrature covariances, symplectic
//! spectra and logarithmic negativity.
//!
//! Correlation matrices are second moments `⟨v_j v_k⟩` over the operator
//! vector `(a₁, a₂, a₁†, a₂†)`. The vacuum has `⟨a a†⟩ = 1` and unit
//! quadrature variance.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, I, ONE, ZERO};

/// Imaginary residue above which a quadrature covariance is rejected.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-9;

/// Tolerance on the commutator and conjugation identities of correlation matrices.
pub const CORR_IDENTITY_TOL: f64 = 1e-9;

/// Most negative eigenvalue of `σ + iΩ` still accepted as physical.
pub const PHYSICALITY_TOL: f64 = -1e-9;

/// Checks `C[p,q]* = C[q̄,p̄]` where `k̄` is the conjugate partner `k ± D/2`.
pub(crate) fn conjugation_defect(entries: &DMatrix<Complex64>) -> f64 {
    let d = entries.nrows();
    let h = d / 2;
    let bar = |k: usize| (k + h) % d;
    let mut worst = 0.0f64;
    for p in 0..d {
        for q in 0..d {
            worst = worst.max((entries[(p, q)].conj() - entries[(bar(q), bar(p))]).norm());
        }
    }
    worst
}

/// Worst deviation of `C[j, j+D/2] − C[j+D/2, j]` from one.
pub(crate) fn commutator_defect(entries: &DMatrix<Complex64>) -> f64 {
    let h = entries.nrows() / 2;
    (0..h)
        .map(|j| (entries[(j, j + h)] - entries[(j + h, j)] - ONE).norm())
        .fold(0.0, f64::max)
}

/// Correlation matrix of two modes in the order `(a₁, a₂, a₁†, a₂†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeCorr {
    entries: Matrix4<Complex64>,
}

impl TwoModeCorr {
    /// Validates the commutator and conjugation identities.
    pub fn new(entries: Matrix4<Complex64>) -> Result<Self> {
        let dynamic = DMatrix::from_iterator(4, 4, entries.iter().copied());
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let comm = commutator_defect(&dynamic);
        if comm > CORR_IDENTITY_TOL * scale {
            return Err(Error::MalformedInput(format!(
                "commutator identity violated by {comm:e}"
            )));
        }
        let conj = conjugation_defect(&dynamic);
        if conj > CORR_IDENTITY_TOL * scale {
            return Err(Error::MalformedInput(format!(
                "conjugation symmetry violated by {conj:e}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn vacuum() -> Self {
        let mut entries = Matrix4::zeros();
        entries[(0, 2)] = ONE;
        entries[(1, 3)] = ONE;
        Self { entries }
    }

    pub fn from_real(entries: &Matrix4<f64>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn entries(&self) -> &Matrix4<Complex64> {
        &self.entries
    }

    /// Exchanges the roles of mode 1 and mode 2.
    pub fn swapped(&self) -> Self {
        let perm = [1usize, 0, 3, 2];
        Self {
            entries: Matrix4::from_fn(|i, j| self.entries[(perm[i], perm[j])]),
        }
    }
}

/// Real symmetric covariance over `(X₁, P₁, X₂, P₂)` with vacuum variance one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadCovariance {
    entries: Matrix4<f64>,
}

impl QuadCovariance {
    pub fn new(entries: Matrix4<f64>) -> Result<Self> {
        let asym = (entries - entries.transpose()).abs().max();
        if asym > IMAGINARY_RESIDUE_TOL * entries.abs().max().max(1.0) {
            return Err(Error::MalformedInput(format!(
                "covariance not symmetric (defect {asym:e})"
            )));
        }
        Ok(Self {
            entries: (entries + entries.transpose()) * 0.5,
        })
    }

    pub fn entries(&self) -> &Matrix4<f64> {
        &self.entries
    }

    /// Smallest eigenvalue of the Hermitian matrix `σ + iΩ`.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let omega = symplectic_form();
        let h = self.entries.map(|x| Complex64::new(x, 0.0)) + omega.map(|x| I * x);
        h.symmetric_eigenvalues().min()
    }

    /// `σ + iΩ ⪰ 0` to within [`PHYSICALITY_TOL`].
    pub fn is_physical(&self) -> bool {
        self.uncertainty_min_eigenvalue() >= PHYSICALITY_TOL
    }
}

/// Block-diagonal symplectic form with per-mode blocks `[[0, 1], [−1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

/// Quadrature map whose rows give `(X₁, −P₁, X₂, P₂)`: the sign of `P₁`
/// implements the partial transposition on mode 1.
fn transposing_quadrature_map() -> Matrix4<Complex64> {
    Matrix4::new(
        ONE, ZERO, ONE, ZERO, //
        I, ZERO, -I, ZERO, //
        ZERO, ONE, ZERO, ONE, //
        ZERO, -I, ZERO, I,
    )
}

/// Quadrature map with rows `(X₁, P₁, X₂, P₂)`.
fn quadrature_map() -> Matrix4<Complex64> {
    let mut t = transposing_quadrature_map();
    for k in 0..4 {
        t[(1, k)] = -t[(1, k)];
    }
    t
}

fn symmetrized_real(c: &TwoModeCorr, t: &Matrix4<Complex64>) -> Result<QuadCovariance> {
    let c = c.entries();
    let sigma = t * (c + c.transpose()) * t.transpose() * Complex64::new(0.5, 0.0);
    let residue = sigma.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > IMAGINARY_RESIDUE_TOL {
        return Err(Error::MalformedInput(format!(
            "quadrature covariance has imaginary residue {residue:e}"
        )));
    }
    QuadCovariance::new(sigma.map(|z| z.re))
}

/// `½ 𝒯 (C + Cᵀ) 𝒯ᵀ`: the partially transposed quadrature covariance whose
/// smallest symplectic eigenvalue decides two-mode entanglement.
pub fn quadrature_covariance(c: &TwoModeCorr) -> Result<QuadCovariance> {
    symmetrized_real(c, &transposing_quadrature_map())
}

/// The untransposed quadrature covariance (the one physicality applies to).
pub fn physical_covariance(c: &TwoModeCorr) -> Result<QuadCovariance> {
    symmetrized_real(c, &quadrature_map())
}

/// Symplectic eigenvalues `(ν₋, ν₊)` from the moduli of the spectrum of `iΩσ`.
pub fn symplectic_eigs(sigma: &QuadCovariance) -> Result<(f64, f64)> {
    let omega = symplectic_form();
    let m = (omega * sigma.entries()).map(|x| I * x);
    let t = linalg::schur(&DMatrix::from_iterator(4, 4, m.iter().copied()))?.1;
    let mut moduli: Vec<f64> = (0..4).map(|k| t[(k, k)].norm()).collect();
    if moduli.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure(
            "non-finite symplectic eigenvalue".into(),
        ));
    }
    moduli.sort_by(f64::total_cmp);
    // eigenvalues of iΩσ come in ±ν pairs
    Ok((0.5 * (moduli[0] + moduli[1]), 0.5 * (moduli[2] + moduli[3])))
}

/// `max{0, −ln ν₋}` with the natural logarithm.
pub fn log_negativity(c: &TwoModeCorr) -> Result<f64> {
    let (nu_minus, _) = symplectic_eigs(&quadrature_covariance(c)?)?;
    if nu_minus <= 0.0 {
        return Err(Error::NumericalFailure(format!(
            "non-positive symplectic eigenvalue {nu_minus:e}"
        )));
    }
    // a deficit below one at rounding level is not entanglement
    if nu_minus >= 1.0 - 8.0 * f64::EPSILON {
        return Ok(0.0);
    }
    Ok(-nu_minus.ln())
}

/// Maps a log-negativity `e ≥ 0` onto `[0, 1)` as `e / (e + 1)`.
pub fn normalized_en(e: f64) -> Result<f64> {
    if !(e >= 0.0) {
        return Err(Error::Domain(format!(
            "normalized log-negativity needs e >= 0, got {e}"
        )));
    }
    if e.is_infinite() {
        return Ok(1.0);
    }
    Ok(e / (e + 1.0))
}
