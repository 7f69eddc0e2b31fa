//! Extent x dispersion x radius-ratio comparison of the two pipelines.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{coverage_redundancy, verify};
use crate::covering::DEFAULT_CHI;
use crate::geometry::SensorSpec;
use crate::hierarchy::{flat_synthesize, hierarchical_synthesize, HierarchyConfig, SynthesisMethod};
use crate::par;
use crate::scenario::{generate, ScenarioSpec};

/// Relative gap under which two mean redundancies count as comparable.
pub const COMPARABLE_GAP: f64 = 0.10;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub extents: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Communication over sensing radius.
    pub betas: Vec<f64>,
    pub sensing_radius: f64,
    pub k: u32,
    pub seeds: Vec<u64>,
    pub time_budget_s: f64,
    pub sub_area: usize,
    pub chi: usize,
    pub coverage_repair: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            width: 20,
            height: 20,
            cell_size: 1.0,
            extents: vec![0.05, 0.15, 0.25, 0.5],
            gammas: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            betas: vec![2.0, 1.0, 0.5],
            sensing_radius: 6.0,
            k: 3,
            seeds: (0..5).collect(),
            time_budget_s: 120.0,
            sub_area: 10,
            chi: DEFAULT_CHI,
            coverage_repair: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 || self.sub_area == 0 {
            return Err("grid and sub-area sizes must be positive".into());
        }
        if !(self.cell_size > 0.0 && self.sensing_radius > 0.0 && self.time_budget_s > 0.0) {
            return Err("cell size, sensing radius and time budget must be positive".into());
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if self.extents.iter().any(|e| !(0.0..1.0).contains(e)) {
            return Err("extents must lie in [0, 1)".into());
        }
        if self.betas.iter().any(|b| !(*b > 0.0)) {
            return Err("betas must be positive".into());
        }
        if self.seeds.is_empty() {
            return Err("at least one seed is required".into());
        }
        Ok(())
    }

    fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for (ei, &extent) in self.extents.iter().enumerate() {
            for (gi, &gamma) in self.gammas.iter().enumerate() {
                for &beta in &self.betas {
                    out.push(CellKey {
                        extent,
                        gamma,
                        beta,
                        scene_salt: ((ei as u64) << 32) | gi as u64,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellKey {
    extent: f64,
    gamma: f64,
    beta: f64,
    scene_salt: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SmcSignificantlyBetter,
    SmcSlightlyBetter,
    MilpSlightlyBetter,
    MilpSignificantlyBetter,
    Infeasible,
}

/// One synthesis run; also a CSV row. Failed runs have no sensor count or
/// redundancy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub extent: f64,
    pub gamma_target: f64,
    pub gamma_achieved: Option<f64>,
    pub beta: f64,
    pub method: SynthesisMethod,
    pub hierarchy: bool,
    pub seed: u64,
    pub n_sensors: Option<usize>,
    pub relays_added: Option<usize>,
    pub alpha: Option<f64>,
    pub runtime_s: f64,
    pub verified: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodSummary {
    /// Verified runs.
    pub runs: usize,
    pub alpha_mean: f64,
    /// 95% half-width.
    pub alpha_ci: f64,
    pub runtime_mean_s: f64,
    pub sensors_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub extent: f64,
    pub gamma: f64,
    pub beta: f64,
    pub smc: Option<MethodSummary>,
    pub milp: Option<MethodSummary>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

/// Mean and 95% normal-approximation half-width (zero for one sample).
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Lower redundancy wins. The two are comparable ("slightly") when the 95%
/// intervals overlap or the means are within 10% of each other; a method
/// with no verified run loses outright.
pub fn classify(smc: Option<&MethodSummary>, milp: Option<&MethodSummary>) -> Verdict {
    match (smc, milp) {
        (None, None) => Verdict::Infeasible,
        (Some(_), None) => Verdict::SmcSignificantlyBetter,
        (None, Some(_)) => Verdict::MilpSignificantlyBetter,
        (Some(s), Some(m)) => {
            let overlap = (s.alpha_mean - m.alpha_mean).abs() <= s.alpha_ci + m.alpha_ci;
            let close = (s.alpha_mean - m.alpha_mean).abs() <= COMPARABLE_GAP * s.alpha_mean.max(m.alpha_mean);
            let comparable = overlap || close;
            match (s.alpha_mean <= m.alpha_mean, comparable) {
                (true, true) => Verdict::SmcSlightlyBetter,
                (true, false) => Verdict::SmcSignificantlyBetter,
                (false, true) => Verdict::MilpSlightlyBetter,
                (false, false) => Verdict::MilpSignificantlyBetter,
            }
        }
    }
}

fn summarize(rows: &[&SweepRow]) -> Option<MethodSummary> {
    let ok: Vec<&&SweepRow> = rows.iter().filter(|r| r.verified).collect();
    if ok.is_empty() {
        return None;
    }
    let alphas: Vec<f64> = ok.iter().filter_map(|r| r.alpha).collect();
    let (alpha_mean, alpha_ci) = mean_ci(&alphas);
    let n = ok.len() as f64;
    Some(MethodSummary {
        runs: ok.len(),
        alpha_mean,
        alpha_ci,
        runtime_mean_s: ok.iter().map(|r| r.runtime_s).sum::<f64>() / n,
        sensors_mean: ok.iter().filter_map(|r| r.n_sensors).sum::<usize>() as f64 / n,
    })
}

fn scene_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt
}

fn run_one(cfg: &SweepConfig, key: &CellKey, seed: u64) -> Vec<SweepRow> {
    let budget = Duration::from_secs_f64(cfg.time_budget_s);
    let scene = generate(&ScenarioSpec {
        width: cfg.width,
        height: cfg.height,
        cell_size: cfg.cell_size,
        extent: key.extent,
        gamma_target: key.gamma,
        seed: scene_seed(seed, key.scene_salt),
    });
    let specs = [SensorSpec {
        type_id: 0,
        sensing_radius: cfg.sensing_radius,
        comm_radius: cfg.sensing_radius * key.beta,
    }];
    let k = [cfg.k];
    let methods = [SynthesisMethod::Smc, SynthesisMethod::Milp];
    methods
        .iter()
        .map(|&method| {
            let mut row = SweepRow {
                extent: key.extent,
                gamma_target: key.gamma,
                gamma_achieved: None,
                beta: key.beta,
                method,
                hierarchy: false,
                seed,
                n_sensors: None,
                relays_added: None,
                alpha: None,
                runtime_s: 0.0,
                verified: false,
                verdict: Verdict::Infeasible,
            };
            let Ok(scene) = &scene else {
                return row;
            };
            row.gamma_achieved = scene.gamma;
            let region = &scene.region;
            row.hierarchy = match method {
                SynthesisMethod::Smc => true,
                SynthesisMethod::Milp => region.open_count() > cfg.chi,
            };
            let start = Instant::now();
            let out = if row.hierarchy {
                let h = HierarchyConfig {
                    sub_w: cfg.sub_area,
                    sub_h: cfg.sub_area,
                    coverage_repair: cfg.coverage_repair,
                    smc_connectivity: false,
                    time_budget: budget,
                };
                hierarchical_synthesize(region, method, &specs, &k, &h)
            } else {
                flat_synthesize(region, method, &specs, &k, budget)
            };
            row.runtime_s = start.elapsed().as_secs_f64();
            match out {
                Ok(o) => {
                    row.n_sensors = Some(o.placement.len());
                    row.relays_added = Some(o.relays_added);
                    row.alpha = Some(coverage_redundancy(&o.placement, region, &specs, &k));
                    row.verified = verify(&o.placement, region, &specs, &k).passed();
                }
                Err(e) => log::warn!(
                    "extent {} gamma {} beta {} seed {seed} {method:?}: {e}",
                    key.extent,
                    key.gamma,
                    key.beta
                ),
            }
            row
        })
        .collect()
}

/// Run both pipelines on every (extent, gamma, beta, seed) combination.
/// Scenes depend on extent, gamma and seed only, so the beta variants share
/// them. Runs execute on the parallel pool; rows come back in configuration
/// order.
pub fn sweep(cfg: &SweepConfig) -> SweepResult {
    let cells = cfg.cells();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| cfg.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let runs = par::map(&jobs, |&(c, seed)| run_one(cfg, &cells[c], seed));
    let per_cell = cfg.seeds.len() * 2;
    let mut rows: Vec<SweepRow> = runs.into_iter().flatten().collect();
    let mut summaries = Vec::with_capacity(cells.len());
    for (key, chunk) in cells.iter().zip(rows.chunks_mut(per_cell)) {
        let of = |m: SynthesisMethod| chunk.iter().filter(|r| r.method == m).collect::<Vec<_>>();
        let smc = summarize(&of(SynthesisMethod::Smc));
        let milp = summarize(&of(SynthesisMethod::Milp));
        let verdict = classify(smc.as_ref(), milp.as_ref());
        for r in chunk.iter_mut() {
            r.verdict = verdict;
        }
        summaries.push(SweepCell {
            extent: key.extent,
            gamma: key.gamma,
            beta: key.beta,
            smc,
            milp,
            verdict,
        });
    }
    SweepResult { rows, cells: summaries }
}

/// CSV with a header row; missing values are empty fields.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
