//! Task execution and result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use squeezed_arrays::analysis::{
    normal_mode_pair_map, pair_map, sweep, PairEntanglementMap, Param,
};
use squeezed_arrays::array::{
    broadband_margin, broadband_moments, broadband_pair_en, normal_modes, SystemParams,
};
use squeezed_arrays::gaussian::normalized_en;
use squeezed_arrays::linalg;
use squeezed_arrays::reservoir::{
    antisqueezing_spectrum, decay_rates, default_grid, linear_grid, reservoir_en,
    squeezing_spectrum,
};
use squeezed_arrays::steady::{
    cascade_steady, extract_array_block, reduced_steady, transient, CorrMatrix, PhysicalityReport,
    TransientOptions,
};

use crate::config::{RunConfig, TaskKind, TaskSpec, Unit};
use crate::error::CliError;

/// Default number of transient samples after `t = 0`.
pub const DEFAULT_TRANSIENT_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadbandSummary {
    pub nbar: f64,
    pub mbar: f64,
    pub n_thermal: f64,
    pub squeezing: f64,
    /// `−ln(1 − 4αζ_b/ᾱ₊²)`
    pub pair_en: f64,
    pub pair_en_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub index: usize,
    pub axis_value: f64,
    pub message: String,
}

/// Scalar results of a run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task: String,
    pub unit: Unit,
    pub n_cavities: usize,
    pub alpha_bar_plus: f64,
    pub alpha_bar_minus: f64,
    /// `ᾱ₋ / max(ζ_a, κ_j, η_j)`; absent when every array rate is zero.
    pub broadband_margin: Option<f64>,
    pub reservoir_en_0: f64,
    pub reservoir_en_0_normalized: f64,
    /// Relative residuals of the solves performed, keyed by route.
    #[serde(default)]
    pub residuals: BTreeMap<String, f64>,
    #[serde(default)]
    pub broadband: Option<BroadbandSummary>,
    #[serde(default)]
    pub physicality: Option<PhysicalityReport>,
    #[serde(default)]
    pub sweep_failures: Vec<SweepFailure>,
    /// Data files written next to the summary.
    #[serde(default)]
    pub files: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn csv<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let ctx = || format!("writing {}", path.display());
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(ctx(), e.into()))?;
        w.write_record(header)
            .map_err(|e| CliError::io(ctx(), e.into()))?;
        for row in rows {
            w.serialize(row)
                .map_err(|e| CliError::io(ctx(), e.into()))?;
        }
        w.flush().map_err(|e| CliError::io(ctx(), e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn pair_map(
        &mut self,
        name: &str,
        labels: [&str; 2],
        map: &PairEntanglementMap,
    ) -> Result<(), CliError> {
        let n = map.n();
        let rows = (0..n).flat_map(|a| (0..n).map(move |b| (a + 1, b + 1, map.values[(a, b)])));
        self.csv(name, &[labels[0], labels[1], "value"], rows)
    }
}

fn steady_with_report(p: &SystemParams, summary: &mut Summary) -> Result<CorrMatrix, CliError> {
    let st = reduced_steady(p)?;
    summary.residuals.insert("reduced".into(), st.residual);
    summary.physicality = Some(st.corr.physicality()?);
    Ok(st.corr)
}

fn base_summary(cfg: &RunConfig) -> Result<Summary, CliError> {
    let p = &cfg.system;
    let (ap, am) = decay_rates(&p.po)?;
    let margin = broadband_margin(p)?;
    let en0 = reservoir_en(&p.po, 0.0)?;
    Ok(Summary {
        task: cfg.task.kind.name().to_string(),
        unit: cfg.unit,
        n_cavities: p.n_cavities,
        alpha_bar_plus: ap,
        alpha_bar_minus: am,
        broadband_margin: margin.is_finite().then_some(margin),
        reservoir_en_0: en0,
        reservoir_en_0_normalized: normalized_en(en0)?,
        residuals: BTreeMap::new(),
        broadband: None,
        physicality: None,
        sweep_failures: Vec::new(),
        files: Vec::new(),
    })
}

fn transient_grid(task: &TaskSpec, p: &SystemParams) -> Result<Vec<f64>, CliError> {
    if let Some(times) = &task.times {
        return Ok(times.clone());
    }
    let t_end = match task.t_end {
        Some(t) => t,
        None => {
            let (_, am) = decay_rates(&p.po)?;
            let slowest = if p.zeta_a > 0.0 { p.zeta_a.min(am) } else { am };
            60.0 / slowest
        }
    };
    let samples = task.samples.unwrap_or(DEFAULT_TRANSIENT_SAMPLES);
    Ok((0..=samples)
        .map(|k| t_end * k as f64 / samples as f64)
        .collect())
}

/// Runs the configured task, writing data files and `summary.json` into `out`.
pub fn run(cfg: &RunConfig, out: &Path, workers: Option<usize>) -> Result<Summary, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
    let p = &cfg.system;
    let unit = cfg.unit.label();
    let mut summary = base_summary(cfg)?;
    let mut w = Writer {
        dir: out,
        files: Vec::new(),
    };

    match cfg.task.kind {
        TaskKind::Steady => {
            let reduced = steady_with_report(p, &mut summary)?;
            let cascade = cascade_steady(p)?;
            summary.residuals.insert("cascade".into(), cascade.residual);
            let block = extract_array_block(&cascade.corr)?;
            summary.residuals.insert(
                "dual_route_difference".into(),
                linalg::max_abs(&(reduced.entries() - block.entries())),
            );
            let e = reduced.entries();
            let d = e.nrows();
            let rows = (0..d).flat_map(|r| (0..d).map(move |c| (r, c, e[(r, c)].re, e[(r, c)].im)));
            w.csv("steady_corr.csv", &["row", "col", "re", "im"], rows)?;
        }
        TaskKind::PairMap => {
            let st = steady_with_report(p, &mut summary)?;
            w.pair_map("pair_map.csv", ["j_I", "j_II"], &pair_map(&st)?)?;
        }
        TaskKind::NormalMap => {
            let st = steady_with_report(p, &mut summary)?;
            let nm = normal_modes(p, cfg.task.basis.unwrap_or_default())?;
            w.pair_map(
                "normal_map.csv",
                ["k_I", "k_II"],
                &normal_mode_pair_map(&st, &nm)?,
            )?;
            let rows = nm
                .mode_frequencies
                .iter()
                .zip(&nm.frequencies)
                .enumerate()
                .map(|(k, (f, d))| (k + 1, *f, *d, unit));
            w.csv(
                "normal_modes.csv",
                &["k", "frequency", "drift_frequency", "unit"],
                rows,
            )?;
        }
        TaskKind::Spectrum => {
            let grid = match cfg.task.omega {
                Some(g) => linear_grid(g.from, g.to, g.points)?,
                None => default_grid(&p.po)?,
            };
            let mut rows = Vec::with_capacity(grid.len());
            for &omega in &grid {
                rows.push((
                    omega,
                    squeezing_spectrum(&p.po, omega)?,
                    antisqueezing_spectrum(&p.po, omega)?,
                    normalized_en(reservoir_en(&p.po, omega)?)?,
                    unit,
                ));
            }
            w.csv("spectrum.csv", &["omega", "S", "T", "E_N", "unit"], rows)?;
        }
        TaskKind::Sweep => {
            let axis: Param = cfg
                .task
                .axis
                .ok_or_else(|| CliError::invalid("task.axis", "required by task sweep".into()))?;
            let values = cfg.task.values.clone().unwrap_or_default();
            let res = sweep(p, axis, &values, &cfg.task.constraints(), workers)?;
            let mut rows = Vec::new();
            for (i, &x) in res.axis_values.iter().enumerate() {
                for (j, curve) in res.curves.iter().enumerate() {
                    if curve[i].is_finite() {
                        rows.push((x, j + 1, curve[i], unit));
                    }
                }
            }
            w.csv(
                "sweep.csv",
                &["axis_value", "pair_index", "value", "unit"],
                rows,
            )?;
            let reference = res
                .axis_values
                .iter()
                .zip(&res.reference)
                .filter(|(_, r)| r.is_finite())
                .map(|(x, r)| (*x, *r, unit));
            w.csv(
                "sweep_reference.csv",
                &["axis_value", "value", "unit"],
                reference,
            )?;
            summary.sweep_failures = res
                .failures
                .iter()
                .map(|(i, m)| SweepFailure {
                    index: *i,
                    axis_value: res.axis_values[*i],
                    message: m.clone(),
                })
                .collect();
        }
        TaskKind::Transient => {
            let st = steady_with_report(p, &mut summary)?;
            let grid = transient_grid(&cfg.task, p)?;
            let opts = TransientOptions {
                step: cfg.task.step,
                source: cfg.task.source.unwrap_or_default(),
            };
            let traj = transient(p, &CorrMatrix::vacuum(st.ordering()), &grid, opts)?;
            let devs = grid
                .iter()
                .zip(&traj)
                .map(|(t, c)| (*t, c.relative_distance(&st), unit));
            w.csv("transient.csv", &["t", "deviation", "unit"], devs)?;
            let mut rows = Vec::new();
            for (t, c) in grid.iter().zip(&traj) {
                for (j, v) in pair_map(c)?.diagonal().into_iter().enumerate() {
                    rows.push((*t, j + 1, v, unit));
                }
            }
            w.csv(
                "transient_pairs.csv",
                &["t", "pair_index", "value", "unit"],
                rows,
            )?;
        }
        TaskKind::BroadbandCheck => {
            let m = broadband_moments(&p.po)?;
            let en = broadband_pair_en(&p.po)?;
            summary.broadband = Some(BroadbandSummary {
                nbar: m.nbar,
                mbar: m.mbar,
                n_thermal: m.n_thermal,
                squeezing: m.squeezing,
                pair_en: en,
                pair_en_normalized: normalized_en(en)?,
            });
        }
    }

    summary.files = w.files;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::io("serializing summary", e.into()))?;
    let path = out.join("summary.json");
    fs::write(&path, json + "\n")
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(summary)
}
