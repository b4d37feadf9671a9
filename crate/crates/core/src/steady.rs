//! Steady-state and transient correlation matrices.
//!
//! Two independent routes reach the array steady state: the reduced equation
//! driven by the reservoir source `𝒩₀`, and the full cascade in which the
//! oscillator modes are kept explicitly.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{build_drift, build_injection, ReservoirSource, SystemParams};
use crate::error::{Error, Result};
use crate::gaussian::{
    commutator_defect, conjugation_defect, physical_covariance, TwoModeCorr, CORR_IDENTITY_TOL,
    PHYSICALITY_TOL,
};
use crate::linalg::{self, CMat, SparseMat, LYAPUNOV_RESIDUAL_BOUND, ONE, ZERO};
use crate::reservoir::decay_rates;

/// Operator vector a correlation matrix is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// `(a_I, a_II, a_I†, a_II†)`, dimension `4N`.
    Arrays { n_cavities: usize },
    /// `(a_I, a_II, b_I, b_II, conjugates)`, dimension `4N + 4`.
    Cascade { n_cavities: usize },
}

impl Ordering {
    pub fn dim(self) -> usize {
        match self {
            Ordering::Arrays { n_cavities } => 4 * n_cavities,
            Ordering::Cascade { n_cavities } => 4 * n_cavities + 4,
        }
    }

    pub fn n_cavities(self) -> usize {
        match self {
            Ordering::Arrays { n_cavities } | Ordering::Cascade { n_cavities } => n_cavities,
        }
    }
}

/// Second moments `⟨v_j v_k⟩` over an ordered operator vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    entries: CMat,
    ordering: Ordering,
}

/// Worst defects of a correlation matrix against the identities every state obeys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalityReport {
    pub commutator_defect: f64,
    pub conjugation_defect: f64,
    /// Smallest eigenvalue of `σ + iΩ` over every two-mode reduction.
    pub min_uncertainty_eigenvalue: f64,
}

impl PhysicalityReport {
    pub fn passes(&self) -> bool {
        self.commutator_defect <= CORR_IDENTITY_TOL
            && self.conjugation_defect <= CORR_IDENTITY_TOL
            && self.min_uncertainty_eigenvalue >= PHYSICALITY_TOL
    }
}

impl CorrMatrix {
    pub fn new(entries: CMat, ordering: Ordering) -> Result<Self> {
        let d = ordering.dim();
        if entries.shape() != (d, d) {
            return Err(Error::MalformedInput(format!(
                "correlation matrix must be {d}x{d}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::MalformedInput("non-finite correlation entry".into()));
        }
        Ok(Self { entries, ordering })
    }

    /// Every mode in its vacuum: only `⟨a a†⟩ = 1`.
    pub fn vacuum(ordering: Ordering) -> Self {
        let d = ordering.dim();
        let h = d / 2;
        let mut entries = CMat::zeros(d, d);
        for j in 0..h {
            entries[(j, j + h)] = ONE;
        }
        Self { entries, ordering }
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    /// Number of bosonic modes (`D / 2`).
    pub fn n_modes(&self) -> usize {
        self.ordering.dim() / 2
    }

    /// Reduction onto modes `p` and `q`, given by their annihilation indices.
    pub fn two_mode(&self, p: usize, q: usize) -> Result<TwoModeCorr> {
        let h = self.n_modes();
        if p >= h || q >= h || p == q {
            return Err(Error::Usage(format!(
                "two-mode reduction needs distinct modes below {h}, got ({p}, {q})"
            )));
        }
        let idx = [p, q, p + h, q + h];
        TwoModeCorr::new(Matrix4::from_fn(|r, c| self.entries[(idx[r], idx[c])]))
    }

    /// Commutator, conjugation and uncertainty defects over all two-mode reductions.
    pub fn physicality(&self) -> Result<PhysicalityReport> {
        let h = self.n_modes();
        let mut min_eig = f64::INFINITY;
        if h == 1 {
            let c = &self.entries;
            // single mode: embed with a vacuum partner
            let mut m = Matrix4::from_element(ZERO);
            m[(0, 0)] = c[(0, 0)];
            m[(0, 2)] = c[(0, 1)];
            m[(2, 0)] = c[(1, 0)];
            m[(2, 2)] = c[(1, 1)];
            m[(1, 3)] = ONE;
            let sigma = physical_covariance(&TwoModeCorr::new(m)?)?;
            min_eig = sigma.uncertainty_min_eigenvalue();
        }
        for p in 0..h {
            for q in p + 1..h {
                let sigma = physical_covariance(&self.two_mode(p, q)?)?;
                min_eig = min_eig.min(sigma.uncertainty_min_eigenvalue());
            }
        }
        Ok(PhysicalityReport {
            commutator_defect: commutator_defect(&self.entries),
            conjugation_defect: conjugation_defect(&self.entries),
            min_uncertainty_eigenvalue: min_eig,
        })
    }

    /// Fails with [`Error::Consistency`] unless [`PhysicalityReport::passes`].
    pub fn ensure_physical(&self) -> Result<PhysicalityReport> {
        let report = self.physicality()?;
        if report.passes() {
            Ok(report)
        } else {
            Err(Error::Consistency(format!(
                "unphysical correlation matrix: {report:?}"
            )))
        }
    }

    /// `‖self − other‖∞ / ‖other‖∞`
    pub fn relative_distance(&self, other: &CorrMatrix) -> f64 {
        linalg::inf_norm(&(&self.entries - &other.entries)) / linalg::inf_norm(&other.entries)
    }
}

/// Linear matrix ODE `dC/dt = drift·C + C·driftᵀ + diffusion`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    pub drift: CMat,
    pub diffusion: CMat,
    pub ordering: Ordering,
}

/// A steady state together with the relative residual of its Lyapunov solve.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub corr: CorrMatrix,
    pub residual: f64,
}

/// Unique solution of `drift·C + C·driftᵀ + diffusion = 0`.
pub fn lyapunov_steady(dd: &DriftDiffusion) -> Result<SteadyState> {
    let d = dd.ordering.dim();
    if dd.drift.shape() != (d, d) || dd.diffusion.shape() != (d, d) {
        return Err(Error::MalformedInput(
            "drift/diffusion shape mismatch".into(),
        ));
    }
    let (x, residual) = linalg::solve_lyapunov(&dd.drift, &dd.diffusion, LYAPUNOV_RESIDUAL_BOUND)?;
    Ok(SteadyState {
        corr: CorrMatrix::new(x, dd.ordering)?,
        residual,
    })
}

/// Reduced-route system `(ℳ_a, 𝒩₀)`.
pub fn reduced_system(p: &SystemParams) -> Result<DriftDiffusion> {
    let src = ReservoirSource::new(p)?;
    Ok(DriftDiffusion {
        drift: src.drift().clone(),
        diffusion: src.asymptotic(),
        ordering: Ordering::Arrays {
            n_cavities: p.n_cavities,
        },
    })
}

/// Array steady state from `ℳ_a𝒞 + 𝒞ℳ_aᵀ + 𝒩₀ = 0`.
pub fn reduced_steady(p: &SystemParams) -> Result<SteadyState> {
    lyapunov_steady(&reduced_system(p)?)
}

fn cascade_index(n: usize, arrays_index: usize) -> usize {
    let h = 2 * n;
    if arrays_index < h {
        arrays_index
    } else {
        arrays_index + 2
    }
}

/// Joint arrays-plus-oscillator system with one-way coupling from oscillator to arrays.
pub fn cascade_system(p: &SystemParams) -> Result<DriftDiffusion> {
    p.validate()?;
    let n = p.n_cavities;
    let h = 2 * n + 2;
    let d = 2 * h;
    let array_drift = build_drift(p)?.0;
    let (q, _) = build_injection(p)?;

    let mut drift = CMat::zeros(d, d);
    let mut diffusion = CMat::zeros(d, d);
    for r in 0..4 * n {
        for c in 0..4 * n {
            drift[(cascade_index(n, r), cascade_index(n, c))] = array_drift[(r, c)];
            diffusion[(cascade_index(n, r), cascade_index(n, c))] = q[(r, c)];
        }
    }

    let po = &p.po;
    let gamma = po.total_loss();
    let coupling = 2.0 * (p.zeta_a * po.zeta_b).sqrt();
    for xi in 0..2 {
        let b = 2 * n + xi;
        let partner = 2 * n + (1 - xi);
        let a1 = xi * n;
        for (bi, pi, ai) in [(b, partner + h, a1), (b + h, partner, a1 + h)] {
            drift[(bi, bi)] = Complex64::new(-gamma, 0.0);
            drift[(bi, pi)] = Complex64::new(po.alpha, 0.0);
            drift[(ai, bi)] = Complex64::new(-coupling, 0.0);
        }
        diffusion[(a1, a1 + h)] += Complex64::new(2.0 * p.zeta_a, 0.0);
        diffusion[(b, b + h)] = Complex64::new(2.0 * gamma, 0.0);
        // shared input noise of the oscillator output port
        diffusion[(a1, b + h)] = Complex64::new(coupling, 0.0);
        diffusion[(b, a1 + h)] = Complex64::new(coupling, 0.0);
    }
    Ok(DriftDiffusion {
        drift,
        diffusion,
        ordering: Ordering::Cascade { n_cavities: n },
    })
}

/// Array steady state from the cascade Lyapunov solution.
pub fn cascade_steady(p: &SystemParams) -> Result<SteadyState> {
    lyapunov_steady(&cascade_system(p)?)
}

/// Array-index submatrix of a cascade correlation matrix, in arrays-only order.
pub fn extract_array_block(c: &CorrMatrix) -> Result<CorrMatrix> {
    let n = match c.ordering {
        Ordering::Cascade { n_cavities } => n_cavities,
        Ordering::Arrays { .. } => {
            return Err(Error::Usage(
                "extract_array_block needs a cascade-ordered matrix".into(),
            ))
        }
    };
    let d = 4 * n;
    let entries = CMat::from_fn(d, d, |r, k| {
        c.entries[(cascade_index(n, r), cascade_index(n, k))]
    });
    CorrMatrix::new(entries, Ordering::Arrays { n_cavities: n })
}

/// Source driving the transient equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// `𝒩_a(t)` for an oscillator already stationary at `t = 0`, arrays uncorrelated with it.
    #[default]
    Stationary,
    /// The asymptotic `𝒩₀` throughout, for which the steady state is an exact fixed point.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransientOptions {
    /// Fixed step; defaults to the stability bound.
    pub step: Option<f64>,
    pub source: SourceKind,
}

/// Largest RK4 step accepted: `0.01 / max(|eig ℳ_a|, ᾱ₊)`.
pub fn max_step(p: &SystemParams) -> Result<f64> {
    let m = build_drift(p)?.0;
    let spectral_radius = linalg::eigenvalues(&m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let (ap, _) = decay_rates(&p.po)?;
    Ok(0.01 / spectral_radius.max(ap))
}

/// Integrates `d𝒞/dt = ℳ_a𝒞 + 𝒞ℳ_aᵀ + 𝒩_a(t)` with fixed-step RK4 and
/// returns `𝒞` at every time in `t_grid` (which must start at 0).
pub fn transient(
    p: &SystemParams,
    c0: &CorrMatrix,
    t_grid: &[f64],
    opts: TransientOptions,
) -> Result<Vec<CorrMatrix>> {
    let ordering = Ordering::Arrays {
        n_cavities: p.n_cavities,
    };
    if c0.ordering != ordering {
        return Err(Error::Usage(
            "transient initial state must be arrays-ordered with matching N".into(),
        ));
    }
    if t_grid.first() != Some(&0.0) {
        return Err(Error::Configuration(
            "transient time grid must start at 0".into(),
        ));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Configuration(
            "transient time grid must be finite and strictly increasing".into(),
        ));
    }
    let bound = max_step(p)?;
    let h_max = match opts.step {
        Some(h) if !(h > 0.0) || h > bound => {
            return Err(Error::Configuration(format!(
                "transient step {h} outside (0, {bound:e}]"
            )))
        }
        Some(h) => h,
        None => bound,
    };

    let src = ReservoirSource::new(p)?;
    linalg::ensure_hurwitz(src.drift())?;
    let sparse = SparseMat::from_dense(src.drift());
    let n0 = src.asymptotic();
    let memory = opts.source == SourceKind::Stationary && !src.channel_rates().is_empty();
    let mut resolvents = src.initial_resolvents();

    let mut c = c0.entries.clone();
    let mut out = vec![c0.clone()];
    let rhs = |c: &CMat, source: &CMat| sparse.lyapunov_apply(c) + source;
    let half = Complex64::new(0.5, 0.0);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let half_step = if memory {
            src.channel_step(0.5 * h)
        } else {
            Vec::new()
        };
        let hc = Complex64::new(h, 0.0);
        for _ in 0..steps {
            let (s0, s_mid, s1) = if memory {
                let mid: Vec<CMat> = half_step
                    .iter()
                    .zip(&resolvents)
                    .map(|(e, y)| e * y)
                    .collect();
                let end: Vec<CMat> = half_step.iter().zip(&mid).map(|(e, y)| e * y).collect();
                let triple = (
                    src.with_memory(&n0, &resolvents),
                    src.with_memory(&n0, &mid),
                    src.with_memory(&n0, &end),
                );
                resolvents = end;
                triple
            } else {
                (n0.clone(), n0.clone(), n0.clone())
            };
            let k1 = rhs(&c, &s0);
            let k2 = rhs(&(&c + &k1 * (hc * half)), &s_mid);
            let k3 = rhs(&(&c + &k2 * (hc * half)), &s_mid);
            let k4 = rhs(&(&c + &k3 * hc), &s1);
            c += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * (hc / 6.0);
        }
        out.push(CorrMatrix::new(c.clone(), ordering)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::PoParams;
    use proptest::prelude::*;

    fn params(
        n: usize,
        eta: f64,
        kappa: f64,
        zeta_a: f64,
        alpha: f64,
        zeta_b: f64,
        kappa_0: f64,
    ) -> SystemParams {
        SystemParams::uniform(
            n,
            eta,
            kappa,
            zeta_a,
            PoParams::new(alpha, zeta_b, kappa_0).unwrap(),
        )
        .unwrap()
    }

    fn assert_vacuum(c: &CorrMatrix, tol: f64) {
        let vac = CorrMatrix::vacuum(c.ordering());
        let err = linalg::max_abs(&(c.entries() - vac.entries()));
        assert!(err < tol, "distance from vacuum {err:e}");
    }

    #[test]
    fn vacuum_is_physical() {
        for ord in [
            Ordering::Arrays { n_cavities: 3 },
            Ordering::Cascade { n_cavities: 2 },
        ] {
            let r = CorrMatrix::vacuum(ord).ensure_physical().unwrap();
            assert_eq!(r.commutator_defect, 0.0);
            assert!((r.min_uncertainty_eigenvalue).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_route_vacuum_limits() {
        let undriven = params(4, 1.0, 0.3, 0.0, 0.6, 1.0, 0.0);
        assert_vacuum(&reduced_steady(&undriven).unwrap().corr, 1e-12);
        let inert = params(4, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0);
        assert_vacuum(&reduced_steady(&inert).unwrap().corr, 1e-12);
    }

    #[test]
    fn undriven_lossless_chain_has_no_steady_state() {
        let p = params(3, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0);
        assert!(matches!(reduced_steady(&p), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn cascade_limits() {
        let p = params(3, 1.0, 0.2, 0.0, 0.5, 1.0, 0.1);
        let dd = cascade_system(&p).unwrap();
        let n = 3;
        let h = 2 * n + 2;
        for a in (0..2 * n).chain(h..h + 2 * n) {
            for b in [2 * n, 2 * n + 1, h + 2 * n, h + 2 * n + 1] {
                assert_eq!(dd.drift[(a, b)], ZERO);
                assert_eq!(dd.drift[(b, a)], ZERO);
            }
        }
        let arrays_see_vacuum = params(3, 1.0, 0.2, 1.0, 0.0, 1e-9, 0.0);
        let st = cascade_steady(&arrays_see_vacuum).unwrap();
        assert_vacuum(&extract_array_block(&st.corr).unwrap(), 1e-9);
    }

    #[test]
    fn oscillator_block_closed_form() {
        let p = params(2, 1.0, 0.0, 1.0, 0.8, 1.1, 0.05);
        let c = cascade_steady(&p).unwrap().corr;
        let (ap, am) = decay_rates(&p.po).unwrap();
        let gamma = p.po.total_loss();
        let alpha = p.po.alpha;
        let m = alpha * gamma / (2.0 * ap * am);
        let nb = alpha * alpha / (2.0 * ap * am);
        let e = c.entries();
        let (bi, bii, h) = (4, 5, 6);
        assert!((e[(bi, bii)] - Complex64::new(m, 0.0)).norm() < 1e-12);
        assert!((e[(bii, bi)] - Complex64::new(m, 0.0)).norm() < 1e-12);
        assert!((e[(bi + h, bi)] - Complex64::new(nb, 0.0)).norm() < 1e-12);
        assert!((e[(bi, bi + h)] - Complex64::new(nb + 1.0, 0.0)).norm() < 1e-12);
        assert!(e[(bi, bi)].norm() < 1e-12);
    }

    #[test]
    fn dual_route_broadband_chain() {
        let p = params(10, 1.0, 0.0, 1.0, 6.48, 10.0, 0.0);
        let reduced = reduced_steady(&p).unwrap();
        let cascade = extract_array_block(&cascade_steady(&p).unwrap().corr).unwrap();
        let err = linalg::max_abs(&(reduced.corr.entries() - cascade.entries()));
        assert!(err < 1e-8, "routes differ by {err:e}");
        assert!(reduced.residual <= LYAPUNOV_RESIDUAL_BOUND);
        reduced.corr.ensure_physical().unwrap();
    }

    #[test]
    fn extraction_rules() {
        let arrays = CorrMatrix::vacuum(Ordering::Arrays { n_cavities: 2 });
        assert!(matches!(extract_array_block(&arrays), Err(Error::Usage(_))));
        let cascade = CorrMatrix::vacuum(Ordering::Cascade { n_cavities: 2 });
        assert_eq!(extract_array_block(&cascade).unwrap(), arrays);
    }

    #[test]
    fn transient_fixed_point_and_vacuum() {
        let p = params(4, 1.0, 0.0, 1.0, 0.648, 1.0, 0.0);
        let st = reduced_steady(&p).unwrap().corr;
        let (_, am) = decay_rates(&p.po).unwrap();
        let grid = [0.0, 5.0 / am, 10.0 / am];
        let opts = TransientOptions {
            step: None,
            source: SourceKind::Asymptotic,
        };
        for c in transient(&p, &st, &grid, opts).unwrap() {
            assert!(c.relative_distance(&st) < 1e-9);
        }

        let inert = params(4, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0);
        let vac = CorrMatrix::vacuum(Ordering::Arrays { n_cavities: 4 });
        for c in transient(&inert, &vac, &[0.0, 1.0, 4.0], TransientOptions::default()).unwrap() {
            assert_vacuum(&c, 1e-12);
        }
    }

    #[test]
    fn transient_rejects_bad_steps_and_grids() {
        let p = params(2, 1.0, 0.0, 1.0, 0.5, 1.0, 0.0);
        let vac = CorrMatrix::vacuum(Ordering::Arrays { n_cavities: 2 });
        let big = TransientOptions {
            step: Some(1.0),
            source: SourceKind::Stationary,
        };
        assert!(matches!(
            transient(&p, &vac, &[0.0, 1.0], big),
            Err(Error::Configuration(_))
        ));
        assert!(transient(&p, &vac, &[0.5, 1.0], TransientOptions::default()).is_err());
        assert!(transient(&p, &vac, &[0.0, 1.0, 1.0], TransientOptions::default()).is_err());
    }

    #[test]
    fn stationary_transient_matches_cascade_evolution() {
        // the cascade started with arrays in vacuum and the oscillator stationary
        // evolves the array block by the same time-dependent source
        let p = params(2, 0.7, 0.1, 1.0, 0.5, 1.0, 0.1);
        let t_end = 3.0;
        let vac = CorrMatrix::vacuum(Ordering::Arrays { n_cavities: 2 });
        let reduced = transient(&p, &vac, &[0.0, t_end], TransientOptions::default()).unwrap();

        let dd = cascade_system(&p).unwrap();
        let osc = lyapunov_steady(&dd).unwrap().corr;
        let n = 2;
        let d = dd.ordering.dim();
        let mut c0 = CorrMatrix::vacuum(dd.ordering).entries().clone();
        for &r in &[2 * n, 2 * n + 1, d / 2 + 2 * n, d / 2 + 2 * n + 1] {
            for &k in &[2 * n, 2 * n + 1, d / 2 + 2 * n, d / 2 + 2 * n + 1] {
                c0[(r, k)] = osc.entries()[(r, k)];
            }
        }
        // exact flow: C(t) = C_st + e^{Mt}(C0 − C_st)e^{Mᵀt}
        let e = (&dd.drift * Complex64::new(t_end, 0.0)).exp();
        let ct = osc.entries() + &e * (c0 - osc.entries()) * e.transpose();
        let cascade = extract_array_block(&CorrMatrix::new(ct, dd.ordering).unwrap()).unwrap();
        let err = linalg::max_abs(&(reduced[1].entries() - cascade.entries()));
        assert!(err < 1e-8, "routes differ by {err:e}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dual_route_random(
            n in 1usize..5,
            rates in proptest::collection::vec(0.1f64..2.0, 5),
            frac in 0.0f64..0.95,
        ) {
            let zeta_b = rates[2];
            let kappa_0 = rates[3];
            let p = params(n, rates[0], rates[1], rates[4], frac * (zeta_b + kappa_0), zeta_b, kappa_0);
            let reduced = reduced_steady(&p).unwrap().corr;
            let cascade = extract_array_block(&cascade_steady(&p).unwrap().corr).unwrap();
            prop_assert!(linalg::max_abs(&(reduced.entries() - cascade.entries())) < 1e-8);
            prop_assert!(reduced.physicality().unwrap().passes());
        }

        #[test]
        fn transient_preserves_conjugation(
            n in 1usize..4, eta in 0.2f64..1.5, frac in 0.0f64..0.9, t in 0.1f64..2.0,
        ) {
            let p = params(n, eta, 0.1, 1.0, frac * 1.2, 1.2, 0.0);
            let vac = CorrMatrix::vacuum(Ordering::Arrays { n_cavities: n });
            let traj = transient(&p, &vac, &[0.0, t / 2.0, t], TransientOptions::default()).unwrap();
            for c in traj {
                prop_assert!(conjugation_defect(c.entries()) < 1e-10);
            }
        }
    }
}
