//! File formats: scenario and experiment JSON, result CSV/JSON, trajectory CSV, SVG plots.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::contact::ContactConfig;
use crate::experiments::{ExperimentResult, ExperimentSpec, SweepCell, SweepSetting, SWEEP_RING_SIZES};
use crate::geometry::{BimodalController, MRState, RobotState, WorldParams};
use crate::scenarios::{Scenario, ScenarioFamily};
use crate::simulator::{NoiseConfig, NoiseMode, RunOutcome, SimConfig, TrajectorySample};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl IoError {
    fn invalid(field: &str, message: impl ToString) -> Self {
        IoError::Invalid { field: field.to_string(), message: message.to_string() }
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let message = message.strip_suffix(&suffix).map_or(message.clone(), str::to_string);
        IoError::Parse { line: e.line(), column: e.column(), message }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    pub r: f64,
    pub d_iw: f64,
    pub v_max: f64,
    pub rho: f64,
}

impl From<WorldParams> for WorldFile {
    fn from(w: WorldParams) -> Self {
        Self { r: w.robot_radius, d_iw: w.inter_wheel, v_max: w.v_max, rho: w.padding }
    }
}

impl Default for WorldFile {
    fn default() -> Self {
        WorldParams::default().into()
    }
}

impl WorldFile {
    pub fn to_world(self) -> Result<WorldParams, IoError> {
        WorldParams::new(self.r, self.d_iw, self.v_max, self.rho).map_err(|e| IoError::invalid("world", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotFile {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    #[serde(default)]
    pub mode: NoiseMode,
    #[serde(default)]
    pub left: f64,
    #[serde(default)]
    pub right: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactFile {
    #[serde(default)]
    pub restitution: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    ContactConfig::default().tolerance
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimFile {
    pub dt: f64,
    pub time_budget: f64,
    pub stationarity_window: f64,
    pub cycle_detection: bool,
    pub trajectory_interval: f64,
    pub noise: NoiseFile,
    pub contact: ContactFile,
}

impl Default for SimFile {
    fn default() -> Self {
        SimConfig::default().into()
    }
}

impl From<SimConfig> for SimFile {
    fn from(s: SimConfig) -> Self {
        Self {
            dt: s.dt,
            time_budget: s.time_budget,
            stationarity_window: s.stationarity_window,
            cycle_detection: s.cycle_detection,
            trajectory_interval: s.trajectory_interval,
            noise: NoiseFile { mode: s.noise.mode, left: s.noise.left, right: s.noise.right, seed: s.noise.seed },
            contact: ContactFile { restitution: s.contact.restitution, tolerance: s.contact.tolerance },
        }
    }
}

impl SimFile {
    pub fn to_config(self) -> Result<SimConfig, IoError> {
        let cfg = SimConfig {
            dt: self.dt,
            time_budget: self.time_budget,
            contact: ContactConfig { restitution: self.contact.restitution, tolerance: self.contact.tolerance },
            noise: NoiseConfig { mode: self.noise.mode, left: self.noise.left, right: self.noise.right, seed: self.noise.seed },
            stationarity_window: self.stationarity_window,
            cycle_detection: self.cycle_detection,
            record_trajectory: false,
            trajectory_interval: self.trajectory_interval,
        };
        cfg.validate().map_err(|e| IoError::invalid("sim", e))?;
        Ok(cfg)
    }
}

fn controller_from(values: [f64; 4]) -> Result<BimodalController, IoError> {
    BimodalController::from_array(values).map_err(|e| IoError::invalid("controller", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub world: WorldFile,
    pub controller: [f64; 4],
    pub robots: Vec<RobotFile>,
    pub sim: SimFile,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            version: SCENARIO_VERSION,
            world: s.initial.world.into(),
            controller: s.controller.to_array(),
            robots: s.initial.robots.iter().map(|r| RobotFile { x: r.x(), y: r.y(), theta: r.theta() }).collect(),
            sim: s.sim.into(),
            label: s.label.clone(),
            seed: s.seed,
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario, IoError> {
        if self.version != SCENARIO_VERSION {
            return Err(IoError::invalid("version", format!("{} (expected {SCENARIO_VERSION})", self.version)));
        }
        let world = self.world.to_world()?;
        let robots = self
            .robots
            .iter()
            .enumerate()
            .map(|(i, r)| RobotState::try_new(r.x, r.y, r.theta).map_err(|e| IoError::invalid(&format!("robots[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        let initial = MRState::new(robots, world).map_err(|e| IoError::invalid("robots", e))?;
        let sim = self.sim.to_config()?;
        Scenario::new(initial, controller_from(self.controller)?, sim, self.label.clone(), self.seed)
            .map_err(|e| IoError::invalid("robots", e))
    }
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)).expect("scenario files always serialize")
}

pub fn scenario_from_json(text: &str) -> Result<Scenario, IoError> {
    serde_json::from_str::<ScenarioFile>(text)?.to_scenario()
}

/// Run outcome as printed by the command line tool.
pub fn outcome_json(outcome: &RunOutcome) -> serde_json::Value {
    json!({
        "verdict": outcome.verdict,
        "t_end": outcome.t_end,
        "steps": outcome.steps,
        "final_min_pairwise_dist": outcome.final_state.min_pairwise_distance(),
        "final_state": outcome.final_state.robots.iter()
            .map(|r| RobotFile { x: r.x(), y: r.y(), theta: r.theta() })
            .collect::<Vec<_>>(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyFile {
    Uniform {
        n: usize,
        #[serde(default = "ScenarioFamily::default_side")]
        side: f64,
    },
    PerturbedRing {
        n_ring: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingFile {
    /// Wheel noise magnitudes `[left, right]`; absent for no noise.
    #[serde(default)]
    pub noise: Option<[f64; 2]>,
    #[serde(default)]
    pub restitution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default = "default_ring_sizes")]
    pub ring_sizes: Vec<usize>,
    /// Absent means the full noise by restitution cross.
    #[serde(default)]
    pub settings: Option<Vec<SettingFile>>,
}

fn default_ring_sizes() -> Vec<usize> {
    SWEEP_RING_SIZES.collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub controller: [f64; 4],
    pub num_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub family: FamilyFile,
    #[serde(default)]
    pub world: WorldFile,
    #[serde(default)]
    pub sim: SimFile,
    #[serde(default)]
    pub sweep: Option<SweepFile>,
}

/// Parsed experiment: a single batch, or a sweep over ring sizes and settings.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentPlan {
    Single(ExperimentSpec),
    Sweep { base: ExperimentSpec, ring_sizes: Vec<usize>, settings: Vec<SweepSetting> },
}

impl ExperimentFile {
    pub fn to_plan(&self, workers: usize) -> Result<ExperimentPlan, IoError> {
        if self.num_runs == 0 {
            return Err(IoError::invalid("num_runs", "must be at least 1"));
        }
        let family = match self.family {
            FamilyFile::Uniform { n, side } => {
                if n == 0 || !(side.is_finite() && side > 0.0) {
                    return Err(IoError::invalid("family", format!("uniform n = {n}, side = {side}")));
                }
                ScenarioFamily::Uniform { n, side }
            }
            FamilyFile::PerturbedRing { n_ring } => {
                if !SWEEP_RING_SIZES.contains(&n_ring) {
                    return Err(IoError::invalid("family", format!("n_ring = {n_ring}, expected 6..=11")));
                }
                ScenarioFamily::PerturbedRing { n_ring }
            }
        };
        let base = ExperimentSpec {
            family,
            controller: controller_from(self.controller)?,
            num_runs: self.num_runs,
            base_seed: self.base_seed,
            sim: self.sim.to_config()?,
            world: self.world.to_world()?,
            workers,
        };
        let Some(sweep) = &self.sweep else {
            return Ok(ExperimentPlan::Single(base));
        };
        if let Some(bad) = sweep.ring_sizes.iter().find(|n| !SWEEP_RING_SIZES.contains(n)) {
            return Err(IoError::invalid("sweep.ring_sizes", format!("{bad}, expected 6..=11")));
        }
        let settings = match &sweep.settings {
            None => crate::experiments::sweep_settings(),
            Some(list) => list
                .iter()
                .map(|s| {
                    ContactConfig::new(s.restitution, 1.0).map_err(|e| IoError::invalid("sweep.settings", e))?;
                    if s.noise.is_some_and(|[l, r]| !(l >= 0.0 && r >= 0.0 && l.is_finite() && r.is_finite())) {
                        return Err(IoError::invalid("sweep.settings", format!("noise {:?}", s.noise)));
                    }
                    Ok(SweepSetting { noise: s.noise.map(|[l, r]| (l, r)), restitution: s.restitution })
                })
                .collect::<Result<_, _>>()?,
        };
        Ok(ExperimentPlan::Sweep { base, ring_sizes: sweep.ring_sizes.clone(), settings })
    }
}

pub fn experiment_from_json(text: &str, workers: usize) -> Result<ExperimentPlan, IoError> {
    serde_json::from_str::<ExperimentFile>(text)?.to_plan(workers)
}

pub const RESULT_HEADER: [&str; 6] =
    ["run_index", "seed", "verdict", "t_end", "final_min_pairwise_dist", "aggregation_rate_running"];

fn result_rows(result: &ExperimentResult) -> impl Iterator<Item = [String; 6]> + '_ {
    let mut runs: Vec<_> = result.runs.iter().collect();
    runs.sort_by_key(|r| r.run_index);
    let mut aggregated = 0usize;
    runs.into_iter().enumerate().map(move |(k, r)| {
        aggregated += usize::from(r.aggregated());
        let dist = if r.final_min_pairwise_dist.is_finite() { r.final_min_pairwise_dist.to_string() } else { String::new() };
        [
            r.run_index.to_string(),
            r.seed.to_string(),
            r.verdict_label().to_string(),
            r.t_end.to_string(),
            dist,
            (aggregated as f64 / (k + 1) as f64).to_string(),
        ]
    })
}

/// One row per run, sorted by run index.
pub fn write_result_csv<W: Write>(out: W, result: &ExperimentResult) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for row in result_rows(result) {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (ring size, setting, run), prefixed by the cell coordinates.
pub fn write_sweep_csv<W: Write>(out: W, cells: &[SweepCell]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_ring", "noise", "restitution"].into_iter().chain(RESULT_HEADER))?;
    for cell in cells {
        let prefix = [cell.n_ring.to_string(), cell.setting.noise_label(), cell.setting.restitution.to_string()];
        for row in result_rows(&cell.result) {
            w.write_record(prefix.iter().chain(row.iter()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn result_summary_json(result: &ExperimentResult) -> serde_json::Value {
    json!({
        "num_runs": result.runs.len(),
        "aggregated": result.aggregated,
        "errors": result.errors,
        "aggregation_rate": result.aggregation_rate,
        "mean_t_aggregated": result.mean_t_aggregated,
        "median_t_aggregated": result.median_t_aggregated,
        "wilson_95": [result.wilson_95.0, result.wilson_95.1],
    })
}

pub fn sweep_summary_json(cells: &[SweepCell]) -> serde_json::Value {
    serde_json::Value::Array(
        cells
            .iter()
            .map(|c| {
                let mut v = result_summary_json(&c.result);
                v["n_ring"] = json!(c.n_ring);
                v["noise"] = json!(c.setting.noise.map(|(l, r)| [l, r]));
                v["restitution"] = json!(c.setting.restitution);
                v
            })
            .collect(),
    )
}

/// Rows `t,robot,x,y,theta`, one per robot per sample.
pub fn write_trajectory_csv<W: Write>(out: W, samples: &[TrajectorySample]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "robot", "x", "y", "theta"])?;
    for s in samples {
        for (i, r) in s.robots.iter().enumerate() {
            w.write_record([s.t.to_string(), i.to_string(), r.x().to_string(), r.y().to_string(), r.theta().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

const SVG_MARGIN: f64 = 10.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// One polyline per robot plus a disc at its first and last sample. The y axis points up.
pub fn trajectory_svg(samples: &[TrajectorySample], world: &WorldParams) -> String {
    let n = samples.first().map_or(0, |s| s.robots.len());
    let r = world.robot_radius;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in samples.iter().flat_map(|s| &s.robots) {
        x0 = x0.min(p.x() - r);
        x1 = x1.max(p.x() + r);
        y0 = y0.min(p.y() - r);
        y1 = y1.max(p.y() + r);
    }
    if n == 0 {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let (w, h) = (x1 - x0 + 2.0 * SVG_MARGIN, y1 - y0 + 2.0 * SVG_MARGIN);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {w} {h}" width="{:.0}" height="{:.0}">"#,
        x0 - SVG_MARGIN,
        -y1 - SVG_MARGIN,
        (4.0 * w).min(1200.0),
        (4.0 * w).min(1200.0) * h / w,
    );
    for i in 0..n {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = samples.iter().map(|s| format!("{},{}", s.robots[i].x(), -s.robots[i].y())).collect();
        let _ = writeln!(
            svg,
            r#"  <polyline fill="none" stroke="{color}" stroke-width="0.4" points="{}"/>"#,
            points.join(" ")
        );
    }
    for (k, s) in [samples.first(), samples.last()].into_iter().flatten().enumerate() {
        for (i, p) in s.robots.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let fill = if k == 0 { "none" } else { color };
            let _ = writeln!(
                svg,
                r#"  <circle cx="{}" cy="{}" r="{r}" fill="{fill}" fill-opacity="0.3" stroke="{color}" stroke-width="0.3"/>"#,
                p.x(),
                -p.y()
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{RunSummary, ExperimentResult};
    use crate::scenarios::sample_uniform;
    use crate::simulator::Verdict;
    use proptest::prelude::*;

    fn scenario(seed: u64, n: usize) -> Scenario {
        let w = WorldParams::default();
        let mut sim = SimConfig { noise: NoiseConfig::fixed(0.02, 0.01, seed), ..SimConfig::default() };
        sim.contact.restitution = 0.5;
        Scenario::new(
            sample_uniform(n, 100.0, seed, &w).unwrap(),
            BimodalController::new(-0.7, -1.0, 1.0, -1.0).unwrap(),
            sim,
            format!("case {seed}"),
            seed,
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn scenario_round_trip(seed in any::<u64>(), n in 1usize..10) {
            let s = scenario(seed, n);
            let text = scenario_to_json(&s);
            prop_assert_eq!(scenario_from_json(&text).unwrap(), s);
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        match scenario_from_json("{\n  \"version\": 1,\n  oops\n}") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let mut file = ScenarioFile::from_scenario(&scenario(1, 2));
        file.controller[0] = 1.5;
        let err = file.to_scenario().unwrap_err();
        assert!(matches!(err, IoError::Invalid { ref field, .. } if field == "controller"), "{err}");
        file.controller[0] = 0.0;
        file.robots[1] = file.robots[0];
        assert!(matches!(file.to_scenario(), Err(IoError::Invalid { .. })));
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let text = r#"{"version": 1, "world": {"r": 3.7, "d_iw": 5.1, "v_max": 12.8, "rho": 0.185},
            "controller": [0, 0, 0, 0], "robots": [{"x": 0, "y": 0, "theta": 0}], "sim": {}}"#;
        let s = scenario_from_json(text).unwrap();
        assert_eq!(s.sim, SimConfig::default());
        assert_eq!(s.label, "");
    }

    fn run(i: usize, verdict: Option<Verdict>) -> RunSummary {
        RunSummary { run_index: i, seed: 10 + i as u64, verdict, error: None, t_end: 1.5, final_min_pairwise_dist: 7.4 }
    }

    #[test]
    fn csv_is_sorted_with_running_rate() {
        let result = ExperimentResult::from_runs(vec![
            run(2, Some(Verdict::Timeout)),
            run(0, Some(Verdict::Aggregated)),
            run(1, None),
        ]);
        let mut buf = Vec::new();
        write_result_csv(&mut buf, &result).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "run_index,seed,verdict,t_end,final_min_pairwise_dist,aggregation_rate_running");
        assert_eq!(lines[1], "0,10,AGGREGATED,1.5,7.4,1");
        assert_eq!(lines[2], "1,11,ERROR,1.5,7.4,0.5");
        assert!(lines[3].starts_with("2,12,TIMEOUT,") && lines[3].ends_with(",0.3333333333333333"));
    }

    #[test]
    fn svg_counts() {
        let robots = |dx: f64| vec![RobotState::new(dx, 0.0, 0.0), RobotState::new(20.0, dx, 1.0), RobotState::new(-5.0, 3.0, 2.0)];
        let samples: Vec<TrajectorySample> =
            (0..5).map(|k| TrajectorySample { t: k as f64, robots: robots(k as f64) }).collect();
        let svg = trajectory_svg(&samples, &WorldParams::default());
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn experiment_file_plans() {
        let single = r#"{"controller": [-0.5, 0.5, 1, 1], "num_runs": 10, "family": {"kind": "uniform", "n": 2}}"#;
        match experiment_from_json(single, 1).unwrap() {
            ExperimentPlan::Single(spec) => {
                assert_eq!(spec.family, ScenarioFamily::Uniform { n: 2, side: ScenarioFamily::default_side() });
                assert_eq!(spec.num_runs, 10);
            }
            other => panic!("{other:?}"),
        }
        let sweep = r#"{"controller": [-0.18, -1, 1, -1], "num_runs": 5,
            "family": {"kind": "perturbed_ring", "n_ring": 6}, "sweep": {}}"#;
        match experiment_from_json(sweep, 1).unwrap() {
            ExperimentPlan::Sweep { ring_sizes, settings, .. } => {
                assert_eq!(ring_sizes, vec![6, 7, 8, 9, 10, 11]);
                assert_eq!(settings.len(), 16);
            }
            other => panic!("{other:?}"),
        }
        let bad = r#"{"controller": [0, 0, 0, 0], "num_runs": 0, "family": {"kind": "uniform", "n": 2}}"#;
        assert!(matches!(experiment_from_json(bad, 1), Err(IoError::Invalid { .. })));
    }
}
