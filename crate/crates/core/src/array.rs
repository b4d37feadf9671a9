//! Array-side matrices for two identical chains driven at their first cavity.
//!
//! The operator vector is `(a_{I,1..N}, a_{II,1..N}, a†_{I,1..N}, a†_{II,1..N})`,
//! so a `4N × 4N` matrix splits into `N × N` blocks per array and sector.

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, I, ONE, RESOLVENT_RESIDUAL_BOUND};
use crate::reservoir::{correlation_weight, decay_rates, vacuum_pattern, PoParams};

/// Which chain an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Array {
    First,
    Second,
}

impl Array {
    fn offset(self, n: usize) -> usize {
        match self {
            Array::First => 0,
            Array::Second => n,
        }
    }
}

/// Physical rates of both chains and of the oscillator driving them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_cavities: usize,
    /// Hopping `η_j` between cavities `j` and `j+1` (length `N − 1`).
    pub eta: Vec<f64>,
    /// Loss `κ_j` of each cavity (length `N`).
    pub kappa: Vec<f64>,
    /// Exchange rate between the first cavity and the reservoir.
    pub zeta_a: f64,
    pub po: PoParams,
}

impl SystemParams {
    pub fn new(eta: Vec<f64>, kappa: Vec<f64>, zeta_a: f64, po: PoParams) -> Result<Self> {
        let p = Self {
            n_cavities: kappa.len(),
            eta,
            kappa,
            zeta_a,
            po,
        };
        p.validate()?;
        Ok(p)
    }

    /// Uniform chain: every hopping equals `eta`, every loss equals `kappa`.
    pub fn uniform(n: usize, eta: f64, kappa: f64, zeta_a: f64, po: PoParams) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n_cavities must be >= 1".into()));
        }
        Self::new(vec![eta; n - 1], vec![kappa; n], zeta_a, po)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_cavities;
        if n == 0 {
            return Err(Error::InvalidParams("n_cavities must be >= 1".into()));
        }
        if self.eta.len() != n - 1 {
            return Err(Error::InvalidParams(format!(
                "eta needs {} entries for N = {n}, got {}",
                n - 1,
                self.eta.len()
            )));
        }
        if self.kappa.len() != n {
            return Err(Error::InvalidParams(format!(
                "kappa needs {n} entries, got {}",
                self.kappa.len()
            )));
        }
        let rates = self
            .eta
            .iter()
            .map(|v| ("eta", *v))
            .chain(self.kappa.iter().map(|v| ("kappa", *v)))
            .chain(std::iter::once(("zeta_a", self.zeta_a)));
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        self.po.validate()
    }

    /// Dimension `4N` of the arrays-only operator vector.
    pub fn dim(&self) -> usize {
        4 * self.n_cavities
    }

    /// Position of `a_{array, j}` (0-based `j`).
    pub fn annihilation_index(&self, array: Array, j: usize) -> usize {
        array.offset(self.n_cavities) + j
    }

    /// Position of `a†_{array, j}`.
    pub fn creation_index(&self, array: Array, j: usize) -> usize {
        2 * self.n_cavities + self.annihilation_index(array, j)
    }
}

/// Homogeneous (drift) part of the array Langevin equations.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix(pub CMat);

/// Source term of the correlation equation; `time == None` is the asymptotic `𝒩₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceMatrix {
    pub entries: CMat,
    pub time: Option<f64>,
}

/// Builds `ℳ_a`: loss on the diagonal, `∓iη_j` hopping in the annihilation/creation sectors.
pub fn build_drift(p: &SystemParams) -> Result<DriftMatrix> {
    p.validate()?;
    let n = p.n_cavities;
    let mut m = CMat::zeros(4 * n, 4 * n);
    for sector in 0..4 {
        let base = sector * n;
        // sectors 0, 1 annihilate; 2, 3 create
        let hop = if sector < 2 { -I } else { I };
        for j in 0..n {
            let mut loss = p.kappa[j];
            if j == 0 {
                loss += p.zeta_a;
            }
            m[(base + j, base + j)] = Complex64::new(-loss, 0.0);
        }
        for (j, &eta) in p.eta.iter().enumerate() {
            m[(base + j, base + j + 1)] = hop * eta;
            m[(base + j + 1, base + j)] = hop * eta;
        }
    }
    Ok(DriftMatrix(m))
}

/// Cavity-loss diffusion `𝒬_a` and the injection map `𝒵` (`4N × 4`) placing
/// the reservoir vector `(r_I, r_II, r_I†, r_II†)` on the first cavities.
pub fn build_injection(p: &SystemParams) -> Result<(CMat, CMat)> {
    p.validate()?;
    let n = p.n_cavities;
    let mut q = CMat::zeros(4 * n, 4 * n);
    for array in [Array::First, Array::Second] {
        for j in 0..n {
            let row = p.annihilation_index(array, j);
            let col = p.creation_index(array, j);
            q[(row, col)] = Complex64::new(2.0 * p.kappa[j], 0.0);
        }
    }
    let mut z = CMat::zeros(4 * n, 4);
    for k in 0..4 {
        z[(k * n, k)] = ONE;
    }
    Ok((q, z))
}

pub(crate) fn to_complex4(m: &Matrix4<f64>) -> CMat {
    CMat::from_fn(4, 4, |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// One Lorentzian channel `ι = ±` of the reservoir source.
#[derive(Debug, Clone)]
struct Channel {
    rate: f64,
    /// `αζ_bζ_a/ᾱ_ι`
    weight: f64,
    /// `(ℳ_a − ᾱ_ι)⁻¹ 𝒵`
    resolvent_z: CMat,
    /// `𝒲_ι 𝒵ᵀ`
    w_zt: CMat,
}

/// Precomputed pieces of the reservoir-driven source `𝒩_a(t)`.
#[derive(Debug, Clone)]
pub struct ReservoirSource {
    drift: CMat,
    /// `𝒬_a + 2ζ_a 𝒵𝒴𝒵ᵀ`
    memoryless: CMat,
    channels: Vec<Channel>,
}

impl ReservoirSource {
    pub fn new(p: &SystemParams) -> Result<Self> {
        let drift = build_drift(p)?.0;
        let (q, z) = build_injection(p)?;
        let y = to_complex4(&vacuum_pattern());
        let memoryless = q + &z * y * z.transpose() * Complex64::new(2.0 * p.zeta_a, 0.0);

        let (ap, am) = decay_rates(&p.po)?;
        let g = p.po.alpha * p.po.zeta_b * p.zeta_a;
        let mut channels = Vec::new();
        if g != 0.0 {
            let d = drift.nrows();
            for (rate, plus) in [(ap, true), (am, false)] {
                let shifted = &drift - CMat::identity(d, d) * Complex64::new(rate, 0.0);
                let resolvent_z =
                    linalg::solve_checked(&shifted, &z, rate, RESOLVENT_RESIDUAL_BOUND)?;
                let w_zt = to_complex4(&correlation_weight(plus)) * z.transpose();
                channels.push(Channel {
                    rate,
                    weight: g / rate,
                    resolvent_z,
                    w_zt,
                });
            }
        }
        Ok(Self {
            drift,
            memoryless,
            channels,
        })
    }

    pub fn drift(&self) -> &CMat {
        &self.drift
    }

    /// `𝒬_a + 2ζ_a 𝒵𝒴𝒵ᵀ`, the source at `t = 0`.
    pub fn memoryless(&self) -> &CMat {
        &self.memoryless
    }

    fn add_channel_term(out: &mut CMat, ch: &Channel, left: &CMat, scale: f64) {
        let term = left * &ch.w_zt;
        let s = Complex64::new(scale * ch.weight, 0.0);
        *out += (&term + term.transpose()) * s;
    }

    /// `𝒩₀`
    pub fn asymptotic(&self) -> CMat {
        let mut n0 = self.memoryless.clone();
        for ch in &self.channels {
            Self::add_channel_term(&mut n0, ch, &ch.resolvent_z, -1.0);
        }
        n0
    }

    /// `e^{(ℳ_a − ᾱ_ι)t}(ℳ_a − ᾱ_ι)⁻¹𝒵` for every channel.
    pub fn propagated_resolvents(&self, t: f64) -> Vec<CMat> {
        self.channels
            .iter()
            .map(|ch| {
                let d = self.drift.nrows();
                let gen = (&self.drift - CMat::identity(d, d) * Complex64::new(ch.rate, 0.0))
                    * Complex64::new(t, 0.0);
                gen.exp() * &ch.resolvent_z
            })
            .collect()
    }

    /// `𝒩₀` plus the decaying memory of the channels, given their propagated resolvents.
    pub fn with_memory(&self, n0: &CMat, propagated: &[CMat]) -> CMat {
        let mut out = n0.clone();
        for (ch, left) in self.channels.iter().zip(propagated) {
            Self::add_channel_term(&mut out, ch, left, 1.0);
        }
        out
    }

    /// `𝒩_a(t)` for an oscillator that is stationary at `t = 0`.
    pub fn at(&self, t: f64) -> CMat {
        self.with_memory(&self.asymptotic(), &self.propagated_resolvents(t))
    }

    /// Decay rates `ᾱ_ι` of the memory channels (empty when the reservoir is inert).
    pub fn channel_rates(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.rate).collect()
    }

    /// `(ℳ_a − ᾱ_ι)`, propagated over `h`, for every channel.
    pub fn channel_step(&self, h: f64) -> Vec<CMat> {
        let d = self.drift.nrows();
        self.channels
            .iter()
            .map(|ch| {
                ((&self.drift - CMat::identity(d, d) * Complex64::new(ch.rate, 0.0))
                    * Complex64::new(h, 0.0))
                .exp()
            })
            .collect()
    }

    pub fn initial_resolvents(&self) -> Vec<CMat> {
        self.channels
            .iter()
            .map(|c| c.resolvent_z.clone())
            .collect()
    }
}

/// Asymptotic source `𝒩₀`.
pub fn source_n0(p: &SystemParams) -> Result<SourceMatrix> {
    Ok(SourceMatrix {
        entries: ReservoirSource::new(p)?.asymptotic(),
        time: None,
    })
}

/// Time-dependent source `𝒩_a(t)`, oscillator stationary at `t = 0`.
pub fn source_nt(p: &SystemParams, t: f64) -> Result<SourceMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "source time must be finite and >= 0, got {t}"
        )));
    }
    Ok(SourceMatrix {
        entries: ReservoirSource::new(p)?.at(t),
        time: Some(t),
    })
}

/// `𝒥 = [[0, 1], [−1, 0]]` in `2N × 2N` blocks.
pub fn symplectic_j(n_cavities: usize) -> CMat {
    let h = 2 * n_cavities;
    let mut j = CMat::zeros(2 * h, 2 * h);
    for k in 0..h {
        j[(k, h + k)] = ONE;
        j[(h + k, k)] = -ONE;
    }
    j
}

/// Kossakowski matrix `𝒦_a(t) = ½ 𝒥 𝒩_a(t) 𝒥` of the equivalent master equation.
pub fn kossakowski(p: &SystemParams, t: f64) -> Result<CMat> {
    let n = source_nt(p, t)?.entries;
    let j = symplectic_j(p.n_cavities);
    Ok(&j * n * &j * Complex64::new(0.5, 0.0))
}

/// Basis used to define normal modes of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeBasis {
    /// Eigenvectors of the Hermitian hopping matrix.
    #[default]
    Hamiltonian,
    /// Orthonormalized eigenvectors of one array's dissipative drift block.
    Dissipative,
}

/// Normal-mode data of one chain.
#[derive(Debug, Clone)]
pub struct NormalModes {
    /// Imaginary parts of the eigenvalues of one array's annihilation drift block, ascending.
    pub frequencies: Vec<f64>,
    /// Frequency assigned to each column of `transform`, ascending.
    pub mode_frequencies: Vec<f64>,
    /// Unitary whose columns are the normal modes in the cavity basis.
    pub transform: CMat,
    pub basis: ModeBasis,
}

impl NormalModes {
    /// For each mode, the index of the mode with the closest opposite frequency.
    pub fn opposite_partners(&self) -> Vec<usize> {
        self.mode_frequencies
            .iter()
            .map(|&w| {
                self.mode_frequencies
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 + w).abs().total_cmp(&(b.1 + w).abs()))
                    .map(|(k, _)| k)
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// Tridiagonal hopping matrix `H` of one chain.
pub fn hopping_matrix(p: &SystemParams) -> DMatrix<f64> {
    let n = p.n_cavities;
    let mut h = DMatrix::zeros(n, n);
    for (j, &eta) in p.eta.iter().enumerate() {
        h[(j, j + 1)] = eta;
        h[(j + 1, j)] = eta;
    }
    h
}

fn annihilation_block(p: &SystemParams) -> Result<CMat> {
    let m = build_drift(p)?.0;
    let n = p.n_cavities;
    Ok(m.view((0, 0), (n, n)).into_owned())
}

/// Right eigenvector of `a` for eigenvalue `lambda` by shifted inverse iteration.
fn inverse_iteration(a: &CMat, lambda: Complex64) -> Result<nalgebra::DVector<Complex64>> {
    let n = a.nrows();
    let scale = linalg::max_abs(a).max(1.0);
    let shift = lambda + Complex64::new(1e-10 * scale, 1e-10 * scale);
    let lu = (a - CMat::identity(n, n) * shift).lu();
    let mut x = nalgebra::DVector::from_fn(n, |k, _| Complex64::new(1.0, 0.1 * k as f64));
    for _ in 0..4 {
        x = lu
            .solve(&x)
            .ok_or_else(|| Error::NumericalFailure("inverse iteration failed".into()))?;
        let norm = x.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NumericalFailure("inverse iteration diverged".into()));
        }
        x /= Complex64::new(norm, 0.0);
    }
    Ok(x)
}

/// Closest unitary `V (V†V)^{-1/2}` to a full-rank basis `v`.
fn lowdin_orthonormalize(v: &CMat) -> Result<CMat> {
    let gram = v.adjoint() * v;
    let eig = SymmetricEigen::new(gram);
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12) {
        return Err(Error::NumericalFailure(
            "dissipative mode basis is (nearly) defective".into(),
        ));
    }
    let inv_sqrt = &eig.eigenvectors
        * CMat::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(1.0 / l.sqrt(), 0.0)))
        * eig.eigenvectors.adjoint();
    Ok(v * inv_sqrt)
}

/// Normal-mode frequencies and the unitary rotating cavity modes into normal modes.
pub fn normal_modes(p: &SystemParams, basis: ModeBasis) -> Result<NormalModes> {
    let block = annihilation_block(p)?;
    let mut frequencies: Vec<f64> = linalg::eigenvalues(&block)?.iter().map(|z| z.im).collect();
    frequencies.sort_by(f64::total_cmp);
    let n = p.n_cavities;

    let (mode_frequencies, transform) = match basis {
        ModeBasis::Hamiltonian => {
            let eig = SymmetricEigen::new(hopping_matrix(p));
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let freqs = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let u = CMat::from_fn(n, n, |i, c| {
                Complex64::new(eig.eigenvectors[(i, order[c])], 0.0)
            });
            (freqs, u)
        }
        ModeBasis::Dissipative => {
            // a ∝ e^{λt} oscillates at −Im λ
            let mut eigs = linalg::eigenvalues(&block)?;
            eigs.sort_by(|a, b| (-a.im).total_cmp(&(-b.im)));
            let mut v = CMat::zeros(n, n);
            for (c, &lambda) in eigs.iter().enumerate() {
                v.set_column(c, &inverse_iteration(&block, lambda)?);
            }
            (
                eigs.iter().map(|z| -z.im).collect(),
                lowdin_orthonormalize(&v)?,
            )
        }
    };
    Ok(NormalModes {
        frequencies,
        mode_frequencies,
        transform,
        basis,
    })
}

/// White-noise moments of the reservoir in the broadband limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadbandMoments {
    /// `n̄`, mean excitation number per mode.
    pub nbar: f64,
    /// `m̄`, inter-mode correlation.
    pub mbar: f64,
    /// `n̄_T`, thermal occupation of the equivalent squeezed thermal state.
    pub n_thermal: f64,
    /// `s₀`, squeezing parameter of that state.
    pub squeezing: f64,
}

pub fn broadband_moments(p: &PoParams) -> Result<BroadbandMoments> {
    let (ap, am) = decay_rates(p)?;
    let g = p.alpha * p.zeta_b;
    let nbar = g * (1.0 / (am * am) - 1.0 / (ap * ap));
    let mbar = g * (1.0 / (am * am) + 1.0 / (ap * ap));
    let disc = (2.0 * nbar + 1.0).powi(2) - 4.0 * mbar * mbar;
    // κ₀ = 0 gives disc = 1 up to rounding
    if disc < -1e-12 * (2.0 * nbar + 1.0).powi(2) {
        return Err(Error::Consistency(format!(
            "broadband moments are unphysical: (2n+1)^2 - 4m^2 = {disc:e}"
        )));
    }
    let n_thermal = (0.5 * (disc.max(0.0).sqrt() - 1.0)).max(0.0);
    let squeezing = if mbar == 0.0 {
        0.0
    } else {
        ((nbar - n_thermal) / mbar).atanh()
    };
    Ok(BroadbandMoments {
        nbar,
        mbar,
        n_thermal,
        squeezing,
    })
}

/// Replicated pair log-negativity in the broadband limit, `−ln(1 − 4αζ_b/ᾱ₊²)`.
pub fn broadband_pair_en(p: &PoParams) -> Result<f64> {
    let (ap, _) = decay_rates(p)?;
    let arg = 1.0 - 4.0 * p.alpha * p.zeta_b / (ap * ap);
    if !(arg > 0.0) {
        return Err(Error::Consistency(format!(
            "broadband squeezing argument must be positive, got {arg}"
        )));
    }
    Ok((-arg.ln()).max(0.0))
}

/// `ᾱ₋ / max(ζ_a, κ_j, η_j)`: how deep the system sits in the broadband regime.
pub fn broadband_margin(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    let (_, am) = decay_rates(&p.po)?;
    let scale = p
        .eta
        .iter()
        .chain(p.kappa.iter())
        .copied()
        .fold(p.zeta_a, f64::max);
    Ok(if scale == 0.0 {
        f64::INFINITY
    } else {
        am / scale
    })
}
