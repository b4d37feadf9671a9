//! Dense complex linear algebra used throughout: Lyapunov/Sylvester solves,
//! checked linear solves, and sparse drift products for the transient integrator.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default relative residual bound for Lyapunov solves.
pub const LYAPUNOV_RESIDUAL_BOUND: f64 = 1e-10;

/// Default relative residual bound for resolvent solves.
pub const RESOLVENT_RESIDUAL_BOUND: f64 = 1e-8;

/// Induced infinity norm (maximum absolute row sum).
pub fn inf_norm(m: &CMat) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Householder reflector `1 − 2vv†/‖v‖²` from a fixed, seed-dependent `v`.
fn scrambling_unitary(n: usize, seed: usize) -> CMat {
    let phase = 0.7548776662466927 * (seed as f64 + 1.0);
    let v = nalgebra::DVector::from_fn(n, |k, _| {
        let k = k as f64 + 1.0;
        Complex64::from_polar(
            1.0 + 0.5 * (k * phase).sin(),
            k * phase * std::f64::consts::PI,
        )
    });
    let norm2 = v.norm_squared();
    CMat::identity(n, n) - &v * v.adjoint() * Complex64::new(2.0 / norm2, 0.0)
}

/// Complex Schur form `m = u t u†` with `t` upper triangular.
///
/// Shifted QR can stall on matrices with symmetric spectra (e.g. `−iH` for a
/// hopping chain); a stalled attempt is retried on a unitarily rotated copy.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::MalformedInput(format!(
            "Schur form of a non-square {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    let max_iter = 200 * n.max(10);
    if let Some(s) = m.clone().try_schur(f64::EPSILON, max_iter) {
        return Ok(s.unpack());
    }
    for seed in 0..4 {
        let q = scrambling_unitary(n, seed);
        let rotated = q.adjoint() * m * &q;
        if let Some(s) = rotated.try_schur(f64::EPSILON, max_iter) {
            let (u, t) = s.unpack();
            return Ok((q * u, t));
        }
    }
    Err(Error::NumericalFailure(
        "Schur iteration did not converge".into(),
    ))
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    let t = schur(m)?.1;
    let eigs: Vec<Complex64> = (0..t.nrows()).map(|k| t[(k, k)]).collect();
    if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    Ok(eigs)
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Fails with [`Error::NotHurwitz`] unless every eigenvalue has negative real part.
pub fn ensure_hurwitz(m: &CMat) -> Result<()> {
    let max_real = spectral_abscissa(m)?;
    let scale = max_abs(m).max(1.0);
    if max_real < -1e-12 * scale {
        Ok(())
    } else {
        Err(Error::NotHurwitz { max_real })
    }
}

/// Solves `a x = b` by LU and rejects the result if the relative residual exceeds `bound`.
pub fn solve_checked(a: &CMat, b: &CMat, shift: f64, bound: f64) -> Result<CMat> {
    let singular = |residual| Error::SingularResolvent { shift, residual };
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| singular(f64::INFINITY))?;
    let scale = inf_norm(b).max(f64::MIN_POSITIVE);
    let residual = inf_norm(&(a * &x - b)) / scale;
    if !residual.is_finite() || residual > bound {
        return Err(singular(residual));
    }
    Ok(x)
}

/// Solves `(t + s·1) y = rhs` for upper-triangular `t` by back substitution.
fn upper_triangular_shifted_solve(t: &CMat, s: Complex64, rhs: &mut [Complex64]) -> Result<()> {
    let n = t.nrows();
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for k in i + 1..n {
            acc -= t[(i, k)] * rhs[k];
        }
        let pivot = t[(i, i)] + s;
        if pivot.norm() < 1e-300 {
            return Err(Error::NumericalFailure(
                "Sylvester operator is singular (eigenvalues sum to zero)".into(),
            ));
        }
        rhs[i] = acc / pivot;
    }
    Ok(())
}

/// Bartels–Stewart solve of `a x + x b = f` via complex Schur forms of `a` and `b`.
pub fn solve_sylvester(a: &CMat, b: &CMat, f: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let m = b.nrows();
    if a.ncols() != n || b.ncols() != m || f.shape() != (n, m) {
        return Err(Error::MalformedInput("Sylvester shape mismatch".into()));
    }
    let (u, t) = schur(a)?;
    let (v, s) = schur(b)?;
    let g = u.adjoint() * f * &v;

    let mut y = CMat::zeros(n, m);
    let mut col = vec![ZERO; n];
    for j in 0..m {
        for i in 0..n {
            let mut acc = g[(i, j)];
            for k in 0..j {
                acc -= y[(i, k)] * s[(k, j)];
            }
            col[i] = acc;
        }
        upper_triangular_shifted_solve(&t, s[(j, j)], &mut col)?;
        for i in 0..n {
            y[(i, j)] = col[i];
        }
    }
    let x = &u * y * v.adjoint();
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(
            "non-finite Sylvester solution".into(),
        ));
    }
    Ok(x)
}

/// Relative residual `‖a x + x aᵀ + q‖∞ / ‖q‖∞` of a Lyapunov solution.
pub fn lyapunov_residual(a: &CMat, x: &CMat, q: &CMat) -> f64 {
    let r = a * x + x * a.transpose() + q;
    let scale = inf_norm(q);
    if scale == 0.0 {
        inf_norm(&r)
    } else {
        inf_norm(&r) / scale
    }
}

/// Unique solution of `a x + x aᵀ + q = 0` for Hurwitz `a`.
///
/// Returns the solution and its relative residual; fails if the residual exceeds `bound`.
pub fn solve_lyapunov(a: &CMat, q: &CMat, bound: f64) -> Result<(CMat, f64)> {
    ensure_hurwitz(a)?;
    let x = solve_sylvester(a, &a.transpose(), &(-q))?;
    let residual = lyapunov_residual(a, &x, q);
    if !(residual <= bound) {
        return Err(Error::Residual { residual, bound });
    }
    Ok((x, residual))
}

/// Coordinate-list view of a sparse square matrix.
#[derive(Debug, Clone)]
pub struct SparseMat {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseMat {
    pub fn from_dense(m: &CMat) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if z != ZERO {
                    entries.push((i, j, z));
                }
            }
        }
        Self {
            dim: m.nrows(),
            entries,
        }
    }

    /// `self · c + c · selfᵀ`
    pub fn lyapunov_apply(&self, c: &CMat) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d, d);
        for &(i, k, v) in &self.entries {
            // (M C)[i, :] += v C[k, :]   and   (C Mᵀ)[:, i] += v C[:, k]
            for col in 0..d {
                out[(i, col)] += v * c[(k, col)];
            }
            for row in 0..d {
                out[(row, i)] += v * c[(row, k)];
            }
        }
        out
    }
}
