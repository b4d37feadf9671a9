//! Inter-array entanglement observables: pair maps in the cavity and
//! normal-mode bases, and parameter sweeps of the diagonal pairs.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{NormalModes, SystemParams};
use crate::error::{Error, Result};
use crate::gaussian::{log_negativity, normalized_en};
use crate::linalg::CMat;
use crate::reservoir::{decay_rates, reservoir_en};
use crate::steady::{reduced_steady, CorrMatrix, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapBasis {
    Cavity,
    NormalMode,
}

/// `N × N` grid indexed by `(j_I, j_II)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEntanglementMap {
    /// Log-negativities `ℰ_N`.
    pub log_negativity: DMatrix<f64>,
    /// Normalized values `ℰ_N / (ℰ_N + 1)` in `[0, 1)`.
    pub values: DMatrix<f64>,
    pub basis: MapBasis,
}

impl PairEntanglementMap {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.values[(j, j)]).collect()
    }

    /// Column of the largest entry in each row.
    pub fn dominant_partners(&self) -> Vec<usize> {
        self.values
            .row_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(k, _)| k)
                    .unwrap_or(0)
            })
            .collect()
    }
}

fn arrays_n(c: &CorrMatrix) -> Result<usize> {
    match c.ordering() {
        Ordering::Arrays { n_cavities } => Ok(n_cavities),
        Ordering::Cascade { .. } => Err(Error::Usage(
            "pair maps need an arrays-ordered correlation matrix".into(),
        )),
    }
}

fn map_in_basis(c: &CorrMatrix, basis: MapBasis) -> Result<PairEntanglementMap> {
    let n = arrays_n(c)?;
    let mut raw = DMatrix::zeros(n, n);
    let mut values = DMatrix::zeros(n, n);
    for ji in 0..n {
        for jii in 0..n {
            let e = log_negativity(&c.two_mode(ji, n + jii)?)?;
            raw[(ji, jii)] = e;
            values[(ji, jii)] = normalized_en(e)?;
        }
    }
    Ok(PairEntanglementMap {
        log_negativity: raw,
        values,
        basis,
    })
}

/// Entanglement of every inter-array cavity pair `(j_I, j_II)`.
pub fn pair_map(c: &CorrMatrix) -> Result<PairEntanglementMap> {
    map_in_basis(c, MapBasis::Cavity)
}

/// Rewrites `c` in normal-mode operators `b = U†a` for both arrays.
pub fn rotate_to_normal_modes(c: &CorrMatrix, nm: &NormalModes) -> Result<CorrMatrix> {
    let n = arrays_n(c)?;
    let u = &nm.transform;
    if u.shape() != (n, n) {
        return Err(Error::Usage(format!(
            "normal-mode transform is {}x{}, arrays have N = {n}",
            u.nrows(),
            u.ncols()
        )));
    }
    let ud = u.adjoint();
    let ut = u.transpose();
    let mut r = CMat::zeros(4 * n, 4 * n);
    for (block, m) in [(0, &ud), (1, &ud), (2, &ut), (3, &ut)] {
        r.view_mut((block * n, block * n), (n, n)).copy_from(m);
    }
    CorrMatrix::new(&r * c.entries() * r.transpose(), c.ordering())
}

/// Entanglement of every inter-array normal-mode pair `(k_I, k_II)`.
pub fn normal_mode_pair_map(c: &CorrMatrix, nm: &NormalModes) -> Result<PairEntanglementMap> {
    map_in_basis(&rotate_to_normal_modes(c, nm)?, MapBasis::NormalMode)
}

/// Parameter addressed by sweep axes, ties and locks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    ZetaA,
    ZetaB,
    Alpha,
    Kappa0,
    /// Every hopping `η_j` (reads the first).
    Eta,
    /// Every cavity loss `κ_j` (reads the first).
    Kappa,
    /// Loss `κ_N` of the last cavity.
    KappaLast,
    /// `ᾱ₊`; setting it keeps `ᾱ₋` and the ratio `κ₀/ζ_b`.
    AlphaBarPlus,
    /// `ᾱ₋`; setting it keeps `ᾱ₊` and the ratio `κ₀/ζ_b`.
    AlphaBarMinus,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::ZetaA => "zeta_a",
            Param::ZetaB => "zeta_b",
            Param::Alpha => "alpha",
            Param::Kappa0 => "kappa_0",
            Param::Eta => "eta",
            Param::Kappa => "kappa",
            Param::KappaLast => "kappa_last",
            Param::AlphaBarPlus => "alpha_bar_plus",
            Param::AlphaBarMinus => "alpha_bar_minus",
        }
    }

    pub fn get(self, p: &SystemParams) -> f64 {
        let po = &p.po;
        match self {
            Param::ZetaA => p.zeta_a,
            Param::ZetaB => po.zeta_b,
            Param::Alpha => po.alpha,
            Param::Kappa0 => po.kappa_0,
            Param::Eta => p.eta.first().copied().unwrap_or(0.0),
            Param::Kappa => p.kappa[0],
            Param::KappaLast => p.kappa[p.n_cavities - 1],
            Param::AlphaBarPlus => po.total_loss() + po.alpha,
            Param::AlphaBarMinus => po.total_loss() - po.alpha,
        }
    }

    /// Writes `value` without validating; [`apply_point`] validates the result.
    pub fn set(self, p: &mut SystemParams, value: f64) {
        let po = &mut p.po;
        match self {
            Param::ZetaA => p.zeta_a = value,
            Param::ZetaB => po.zeta_b = value,
            Param::Alpha => po.alpha = value,
            Param::Kappa0 => po.kappa_0 = value,
            Param::Eta => p.eta.iter_mut().for_each(|e| *e = value),
            Param::Kappa => p.kappa.iter_mut().for_each(|k| *k = value),
            Param::KappaLast => {
                let last = p.n_cavities - 1;
                p.kappa[last] = value
            }
            Param::AlphaBarPlus | Param::AlphaBarMinus => {
                let (plus, minus) = if self == Param::AlphaBarPlus {
                    (value, po.total_loss() - po.alpha)
                } else {
                    (po.total_loss() + po.alpha, value)
                };
                let total = 0.5 * (plus + minus);
                let share = if po.zeta_b + po.kappa_0 > 0.0 {
                    po.zeta_b / (po.zeta_b + po.kappa_0)
                } else {
                    1.0
                };
                po.alpha = 0.5 * (plus - minus);
                po.zeta_b = total * share;
                po.kappa_0 = total * (1.0 - share);
            }
        }
    }
}

/// `param = ratio · of`, applied after the axis value and the locks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tie {
    pub param: Param,
    pub ratio: f64,
    pub of: Param,
}

/// `param = value` at every sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lock {
    pub param: Param,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(default)]
    pub locks: Vec<Lock>,
    #[serde(default)]
    pub ties: Vec<Tie>,
}

/// Parameters of one sweep point: axis value, then locks, then ties, in order.
pub fn apply_point(
    base: &SystemParams,
    axis: Param,
    value: f64,
    constraints: &Constraints,
) -> Result<SystemParams> {
    let mut p = base.clone();
    axis.set(&mut p, value);
    for lock in &constraints.locks {
        lock.param.set(&mut p, lock.value);
    }
    for tie in &constraints.ties {
        let v = tie.ratio * tie.of.get(&p);
        tie.param.set(&mut p, v);
    }
    p.validate()?;
    Ok(p)
}

/// Diagonal-pair curves of a one-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Param,
    pub axis_values: Vec<f64>,
    /// `curves[j][i]`: normalized `E_N` of pair `(j, j)` at point `i`; NaN where the point failed.
    pub curves: Vec<Vec<f64>>,
    /// Normalized reservoir entanglement at `ω = 0` per point.
    pub reference: Vec<f64>,
    /// `(point index, message)` for points that could not be solved.
    pub failures: Vec<(usize, String)>,
}

struct PointValues {
    diagonal: Vec<f64>,
    reference: f64,
}

fn solve_point(
    base: &SystemParams,
    axis: Param,
    value: f64,
    constraints: &Constraints,
) -> Result<PointValues> {
    let p = apply_point(base, axis, value, constraints)?;
    decay_rates(&p.po)?;
    let st = reduced_steady(&p)?;
    Ok(PointValues {
        diagonal: pair_map(&st.corr)?.diagonal(),
        reference: normalized_en(reservoir_en(&p.po, 0.0)?)?,
    })
}

/// Solves the steady state at every axis value, `workers` points at a time
/// (default: available parallelism). Output order follows `values`.
pub fn sweep(
    base: &SystemParams,
    axis: Param,
    values: &[f64],
    constraints: &Constraints,
    workers: Option<usize>,
) -> Result<SweepResult> {
    base.validate()?;
    if values.is_empty() {
        return Err(Error::Configuration(
            "sweep needs at least one axis value".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Configuration(
            "sweep axis values must be finite".into(),
        ));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        if k == 0 {
            return Err(Error::Configuration("worker count must be >= 1".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Configuration(format!("cannot start worker pool: {e}")))?;
    let points: Vec<Result<PointValues>> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| solve_point(base, axis, v, constraints))
            .collect()
    });

    let n = base.n_cavities;
    let mut curves = vec![Vec::with_capacity(values.len()); n];
    let mut reference = Vec::with_capacity(values.len());
    let mut failures = Vec::new();
    for (i, point) in points.into_iter().enumerate() {
        match point {
            Ok(pv) => {
                for (curve, v) in curves.iter_mut().zip(pv.diagonal) {
                    curve.push(v);
                }
                reference.push(pv.reference);
            }
            Err(e) => {
                curves.iter_mut().for_each(|c| c.push(f64::NAN));
                reference.push(f64::NAN);
                failures.push((i, e.to_string()));
            }
        }
    }
    Ok(SweepResult {
        axis,
        axis_values: values.to_vec(),
        curves,
        reference,
        failures,
    })
}
