//! Seeded Monte Carlo batches and the noise/slippage sweep over ring sizes.

use rayon::prelude::*;

use crate::contact::ContactConfig;
use crate::geometry::{BimodalController, WorldParams};
use crate::scenarios::ScenarioFamily;
use crate::simulator::{self, NoiseConfig, SimConfig, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub family: ScenarioFamily,
    pub controller: BimodalController,
    pub num_runs: usize,
    pub base_seed: u64,
    pub sim: SimConfig,
    pub world: WorldParams,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_index: usize,
    pub seed: u64,
    /// `None` when the run failed (generator or simulator error).
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
    pub t_end: f64,
    pub final_min_pairwise_dist: f64,
}

impl RunSummary {
    pub fn verdict_label(&self) -> &'static str {
        self.verdict.map_or("ERROR", Verdict::as_str)
    }

    pub fn aggregated(&self) -> bool {
        self.verdict == Some(Verdict::Aggregated)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub runs: Vec<RunSummary>,
    pub aggregated: usize,
    pub errors: usize,
    pub aggregation_rate: f64,
    pub mean_t_aggregated: Option<f64>,
    pub median_t_aggregated: Option<f64>,
    /// Wilson score interval (95%) for the aggregation rate.
    pub wilson_95: (f64, f64),
}

impl ExperimentResult {
    pub fn from_runs(runs: Vec<RunSummary>) -> Self {
        let n = runs.len();
        let mut times: Vec<f64> = runs.iter().filter(|r| r.aggregated()).map(|r| r.t_end).collect();
        let aggregated = times.len();
        let errors = runs.iter().filter(|r| r.verdict.is_none()).count();
        times.sort_by(f64::total_cmp);
        let mean = (!times.is_empty()).then(|| times.iter().sum::<f64>() / aggregated as f64);
        let median = (!times.is_empty()).then(|| {
            let mid = aggregated / 2;
            if aggregated % 2 == 1 { times[mid] } else { 0.5 * (times[mid - 1] + times[mid]) }
        });
        Self {
            aggregation_rate: if n == 0 { 0.0 } else { aggregated as f64 / n as f64 },
            wilson_95: wilson_interval(aggregated, n, 1.96),
            runs,
            aggregated,
            errors,
            mean_t_aggregated: mean,
            median_t_aggregated: median,
        }
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `index` in a batch with base seed `base`.
pub fn run_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// Simulates one run of a batch; every source of randomness derives from the run seed.
pub fn run_single(spec: &ExperimentSpec, index: usize) -> RunSummary {
    let seed = run_seed(spec.base_seed, index as u64);
    let mut summary = RunSummary {
        run_index: index,
        seed,
        verdict: None,
        error: None,
        t_end: 0.0,
        final_min_pairwise_dist: f64::NAN,
    };
    let initial = match spec.family.generate(seed, &spec.world) {
        Ok(s) => s,
        Err(e) => {
            summary.error = Some(e.to_string());
            return summary;
        }
    };
    let mut sim = spec.sim;
    sim.noise.seed = splitmix64(seed);
    match simulator::run(&initial, &spec.controller, &sim) {
        Ok(out) => {
            summary.verdict = Some(out.verdict);
            summary.t_end = out.t_end;
            summary.final_min_pairwise_dist = out.final_state.min_pairwise_distance().unwrap_or(f64::NAN);
        }
        Err(e) => summary.error = Some(e.to_string()),
    }
    summary
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction")
}

pub fn run_experiment(spec: &ExperimentSpec) -> ExperimentResult {
    let runs = pool(spec.workers).install(|| {
        (0..spec.num_runs).into_par_iter().map(|i| run_single(spec, i)).collect::<Vec<_>>()
    });
    ExperimentResult::from_runs(runs)
}

/// One column of the sweep: wheel noise magnitudes (if any) and restitution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSetting {
    pub noise: Option<(f64, f64)>,
    pub restitution: f64,
}

impl SweepSetting {
    pub fn noise_label(&self) -> String {
        match self.noise {
            None => "none".to_string(),
            Some((l, r)) => format!("{l}/{r}"),
        }
    }
}

pub const SWEEP_RING_SIZES: std::ops::RangeInclusive<usize> = 6..=11;
pub const SWEEP_NOISE: [Option<(f64, f64)>; 4] = [None, Some((0.02, 0.01)), Some((0.01, 0.02)), Some((0.02, 0.02))];
pub const SWEEP_RESTITUTION: [f64; 4] = [0.0, 0.1, 0.5, 0.9];

/// Full cross of the noise settings and restitution values.
pub fn sweep_settings() -> Vec<SweepSetting> {
    SWEEP_NOISE
        .iter()
        .flat_map(|&noise| SWEEP_RESTITUTION.iter().map(move |&restitution| SweepSetting { noise, restitution }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub n_ring: usize,
    pub setting: SweepSetting,
    pub result: ExperimentResult,
}

/// Runs `base` for every ring size and sweep setting. Runs with the same index
/// share their initial state across settings, so cells are paired comparisons.
pub fn run_sweep(base: &ExperimentSpec, ring_sizes: &[usize], settings: &[SweepSetting]) -> Vec<SweepCell> {
    let jobs: Vec<(usize, SweepSetting, usize)> = ring_sizes
        .iter()
        .flat_map(|&n| settings.iter().flat_map(move |&s| (0..base.num_runs).map(move |i| (n, s, i))))
        .collect();
    let specs: Vec<ExperimentSpec> = ring_sizes
        .iter()
        .flat_map(|&n_ring| {
            settings.iter().map(move |s| {
                let mut spec = base.clone();
                spec.family = ScenarioFamily::PerturbedRing { n_ring };
                spec.sim.contact = ContactConfig { restitution: s.restitution, ..base.sim.contact };
                spec.sim.noise = match s.noise {
                    None => NoiseConfig::none(),
                    Some((l, r)) => NoiseConfig::fixed(l, r, 0),
                };
                spec
            })
        })
        .collect();
    let per_cell = base.num_runs;
    let summaries: Vec<RunSummary> = pool(base.workers).install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(k, &(_, _, i))| run_single(&specs[k / per_cell.max(1)], i))
            .collect()
    });
    let mut chunks = summaries.chunks(per_cell.max(1));
    ring_sizes
        .iter()
        .flat_map(|&n_ring| settings.iter().map(move |&setting| (n_ring, setting)))
        .map(|(n_ring, setting)| SweepCell {
            n_ring,
            setting,
            result: ExperimentResult::from_runs(chunks.next().map(<[RunSummary]>::to_vec).unwrap_or_default()),
        })
        .collect()
}

/// Ring sizes 6 to 11 crossed with every noise and restitution setting.
pub fn run_sweep_fig5(base: &ExperimentSpec) -> Vec<SweepCell> {
    let sizes: Vec<usize> = SWEEP_RING_SIZES.collect();
    run_sweep(base, &sizes, &sweep_settings())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
