//! Sweep execution: per-instance contexts, per-cell schedule production,
//! sampling, and the output files (histogram/trace CSVs, report JSON,
//! summary CSV).
//!
//! A sweep cell is one (instance, strategy, depth) triple, plus an optional
//! per-instance uniform baseline. Cells are independent jobs: each derives
//! its own RNG streams from the master seed, writes its files atomically,
//! and failures are recorded in the summary without aborting the sweep.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crystal_qaoa::seed::derive_seed;
use crystal_qaoa::{
    energies_equal, expectation, fixed_angle_schedule, optimize_full, optimize_gamma_only,
    optimize_linear_ramp, run_circuit, sample, sample_uniform, success_rate, write_histogram_csv,
    AngleSchedule, CostDiagonal, GammaOnlyBounds, GammaScaling, Histogram, IsingModel,
    LinearRampParams, OptimizationResult, RampBounds, SpectrumSummary,
};

use crate::config::{instance_id, load_model, ExperimentConfig, Strategy};

/// Everything a cell needs about its instance, computed once and shared.
pub struct InstanceContext {
    pub id: String,
    pub path: PathBuf,
    pub model: IsingModel,
    pub diag: CostDiagonal,
    pub spectrum: SpectrumSummary,
    pub scaling: GammaScaling,
}

pub fn prepare_instance(path: &Path, max_qubits: usize) -> Result<InstanceContext> {
    let model = load_model(path)?;
    let diag = CostDiagonal::build(&model, max_qubits)?;
    let spectrum = model.exhaustive_ground_states(max_qubits)?;
    let scaling = GammaScaling::for_model(&model);
    Ok(InstanceContext {
        id: instance_id(path),
        path: path.to_path_buf(),
        model,
        diag,
        spectrum,
        scaling,
    })
}

#[derive(Serialize)]
pub struct OptimizerJson {
    pub evaluations: usize,
    pub converged: bool,
    pub final_cost: f64,
}

#[derive(Serialize)]
pub struct ScheduleJson {
    pub p: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl From<&AngleSchedule> for ScheduleJson {
    fn from(s: &AngleSchedule) -> Self {
        Self {
            p: s.depth(),
            gamma: s.gamma().to_vec(),
            beta: s.beta().to_vec(),
        }
    }
}

#[derive(Serialize)]
pub struct BinJson {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub frequency: f64,
}

/// Relative-energy distribution: bin 0 holds exactly the ground level, then
/// 50 uniform bins cover (0, max relative energy].
pub fn relative_energy_bins(
    hist: &Histogram,
    diag: &CostDiagonal,
    offset: f64,
    min_energy: f64,
) -> Vec<BinJson> {
    const BINS: usize = 50;
    let shots = hist.shots() as f64;
    let rel = |z: u64| (diag.values()[z as usize] + offset - min_energy).max(0.0);
    let mut max_rel = 0.0f64;
    for &(z, _) in hist.counts() {
        max_rel = max_rel.max(rel(z));
    }
    let mut counts = vec![0u64; BINS + 1];
    let width = max_rel / BINS as f64;
    for &(z, c) in hist.counts() {
        let e = diag.values()[z as usize] + offset;
        let idx = if energies_equal(e, min_energy) || width == 0.0 {
            0
        } else {
            ((rel(z) / width).ceil() as usize).clamp(1, BINS)
        };
        counts[idx] += c;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| BinJson {
            lo: if i == 0 { 0.0 } else { (i - 1) as f64 * width },
            hi: if i == 0 { 0.0 } else { i as f64 * width },
            count: c,
            frequency: c as f64 / shots,
        })
        .collect()
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub instance: String,
    pub instance_id: &'a str,
    pub n: usize,
    pub strategy: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleJson>,
    pub shots: u64,
    pub seed: u64,
    pub sample_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp_params: Option<LinearRampParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerJson>,
    pub success_rate: f64,
    pub min_energy: f64,
    pub expectation: f64,
    pub wall_time_seconds: f64,
    pub bins: Vec<BinJson>,
}

/// Write via a temp file and rename, so concurrent cells never expose a
/// half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub struct CellOutput {
    pub schedule: Option<AngleSchedule>,
    pub ramp_params: Option<LinearRampParams>,
    pub optimizer: Option<OptimizationResult>,
    pub success_rate: f64,
    /// Full configuration energy ⟨H_C⟩ + offset.
    pub expectation: f64,
}

/// Produce the schedule a strategy prescribes for this instance and depth.
pub fn build_schedule(
    ctx: &InstanceContext,
    strategy: Strategy,
    p: usize,
    cfg: &ExperimentConfig,
    opt_seed: u64,
) -> crystal_qaoa::Result<(
    AngleSchedule,
    Option<OptimizationResult>,
    Option<LinearRampParams>,
)> {
    let fixed = fixed_angle_schedule(p, &cfg.ramp_params, &ctx.scaling)?;
    match strategy {
        Strategy::Fixed => Ok((fixed, None, None)),
        Strategy::FullOpt => {
            let result = optimize_full(&ctx.diag, &fixed, cfg.budget_full)?;
            Ok((result.schedule.clone(), Some(result), None))
        }
        Strategy::LinearRamp => {
            let (params, result) = optimize_linear_ramp(
                &ctx.diag,
                p,
                &cfg.ramp_params,
                &RampBounds::default(),
                cfg.budget_ramp,
                opt_seed,
                &ctx.scaling,
            )?;
            Ok((result.schedule.clone(), Some(result), Some(params)))
        }
        Strategy::GammaOnly => {
            let (params, result) = optimize_gamma_only(
                &ctx.diag,
                p,
                (cfg.ramp_params.beta_slope, cfg.ramp_params.beta_intercept),
                (cfg.ramp_params.gamma_slope, cfg.ramp_params.gamma_intercept),
                &GammaOnlyBounds::default(),
                cfg.budget_gamma_only,
                opt_seed,
                &ctx.scaling,
            )?;
            Ok((result.schedule.clone(), Some(result), Some(params)))
        }
    }
}

/// Run one strategy cell end to end: schedule, circuit, sampling, success.
pub fn execute_cell(
    ctx: &InstanceContext,
    strategy: Strategy,
    p: usize,
    cfg: &ExperimentConfig,
    opt_seed: u64,
    sample_seed: u64,
) -> crystal_qaoa::Result<(CellOutput, Histogram)> {
    let (schedule, optimizer, ramp_params) = build_schedule(ctx, strategy, p, cfg, opt_seed)?;
    let state = run_circuit(&ctx.diag, &schedule)?;
    let f = expectation(&state, &ctx.diag)?;
    let hist = sample(&state, cfg.shots, sample_seed)?;
    let rate = success_rate(&hist, &ctx.model, &ctx.spectrum)?;
    Ok((
        CellOutput {
            schedule: Some(schedule),
            ramp_params,
            optimizer,
            success_rate: rate,
            expectation: f + ctx.model.offset(),
        },
        hist,
    ))
}

/// The uniform random-sampling baseline; its exact expectation is the model
/// offset (every Z and ZZ term averages to zero).
pub fn execute_baseline(
    ctx: &InstanceContext,
    cfg: &ExperimentConfig,
    sample_seed: u64,
) -> crystal_qaoa::Result<(CellOutput, Histogram)> {
    let hist = sample_uniform(ctx.model.n_sites(), cfg.shots, sample_seed)?;
    let rate = success_rate(&hist, &ctx.model, &ctx.spectrum)?;
    Ok((
        CellOutput {
            schedule: None,
            ramp_params: None,
            optimizer: None,
            success_rate: rate,
            expectation: ctx.model.offset(),
        },
        hist,
    ))
}

/// Persist one cell's artifacts: histogram CSV (relative energies), the
/// optimizer trace CSV when present, and the report JSON.
#[allow(clippy::too_many_arguments)]
pub fn write_cell_outputs(
    out_dir: &Path,
    ctx: &InstanceContext,
    strategy_name: &str,
    p: Option<usize>,
    cfg_seed: u64,
    shots: u64,
    sample_seed: u64,
    output: &CellOutput,
    hist: &Histogram,
    wall_time_seconds: f64,
) -> Result<()> {
    let tag = match p {
        Some(p) => format!("{}_{}_p{}", ctx.id, strategy_name, p),
        None => format!("{}_{}", ctx.id, strategy_name),
    };

    // reference the diagonal's own minimum so relative energies are >= 0
    // bitwise, not just within rounding of the exhaustive oracle's value
    let reference = ctx.diag.min_value() + ctx.model.offset();
    let mut csv = Vec::new();
    write_histogram_csv(&mut csv, hist, &ctx.diag, ctx.model.offset(), reference)?;
    atomic_write(&out_dir.join(format!("histogram_{tag}.csv")), &csv)?;

    if let Some(opt) = &output.optimizer {
        let mut trace = String::from("evaluation,cost\n");
        for (i, c) in &opt.trace {
            trace.push_str(&format!("{i},{c}\n"));
        }
        atomic_write(&out_dir.join(format!("trace_{tag}.csv")), trace.as_bytes())?;
    }

    let report = Report {
        instance: ctx.path.display().to_string(),
        instance_id: &ctx.id,
        n: ctx.model.n_sites(),
        strategy: strategy_name,
        p,
        schedule: output.schedule.as_ref().map(ScheduleJson::from),
        shots,
        seed: cfg_seed,
        sample_seed,
        ramp_params: output.ramp_params,
        optimizer: output.optimizer.as_ref().map(|o| OptimizerJson {
            evaluations: o.evaluations,
            converged: o.converged,
            final_cost: o.final_cost,
        }),
        success_rate: output.success_rate,
        min_energy: ctx.spectrum.min_energy,
        expectation: output.expectation,
        wall_time_seconds,
        bins: relative_energy_bins(hist, &ctx.diag, ctx.model.offset(), ctx.spectrum.min_energy),
    };
    let json = serde_json::to_string_pretty(&report)?;
    atomic_write(&out_dir.join(format!("report_{tag}.json")), json.as_bytes())?;
    Ok(())
}

fn sanitize_message(msg: &str) -> String {
    msg.replace(['\n', '\r'], " ").replace(',', ";")
}

pub struct SummaryRow {
    pub instance_id: String,
    pub n: Option<usize>,
    pub strategy: String,
    pub p: Option<usize>,
    pub shots: u64,
    pub seed: u64,
    pub metrics: std::result::Result<(f64, f64, f64), String>,
}

impl SummaryRow {
    fn to_csv_line(&self) -> String {
        let n = self.n.map_or(String::new(), |n| n.to_string());
        let p = self.p.map_or(String::new(), |p| p.to_string());
        match &self.metrics {
            Ok((rate, expectation, min_energy)) => format!(
                "{},{},{},{},{},{},{},{},{},ok",
                self.instance_id, n, self.strategy, p, self.shots, self.seed,
                rate, expectation, min_energy
            ),
            Err(msg) => format!(
                "{},{},{},{},{},{},,,,failed: {}",
                self.instance_id, n, self.strategy, p, self.shots, self.seed,
                sanitize_message(msg)
            ),
        }
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut text =
        String::from("instance,n,strategy,p,shots,seed,success_rate,expectation,min_energy,status\n");
    for row in rows {
        text.push_str(&row.to_csv_line());
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

enum CellKind {
    Baseline,
    Strategy(Strategy, usize),
}

/// Execute the whole sweep and write `summary.csv`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;

    // Instance contexts are shared across cells; failures poison only the
    // cells of that instance. Duplicate file stems get numbered suffixes so
    // output files never collide.
    let mut used_ids = std::collections::HashMap::new();
    let contexts: Vec<std::result::Result<Arc<InstanceContext>, String>> = cfg
        .instances
        .iter()
        .map(|path| {
            prepare_instance(path, cfg.max_qubits)
                .map(|mut ctx| {
                    let n = used_ids
                        .entry(ctx.id.clone())
                        .and_modify(|n| *n += 1)
                        .or_insert(1usize);
                    if *n > 1 {
                        ctx.id = format!("{}-{n}", ctx.id);
                    }
                    Arc::new(ctx)
                })
                .map_err(|e| format!("{e:#}"))
        })
        .collect();

    let mut cells: Vec<(usize, CellKind)> = Vec::new();
    for (idx, _) in cfg.instances.iter().enumerate() {
        if cfg.random_baseline {
            cells.push((idx, CellKind::Baseline));
        }
        for &strategy in &cfg.strategies {
            for &p in &cfg.depths {
                cells.push((idx, CellKind::Strategy(strategy, p)));
            }
        }
    }

    let run_one = |(idx, kind): &(usize, CellKind)| -> SummaryRow {
        let (strategy_name, p) = match kind {
            CellKind::Baseline => ("random".to_string(), None),
            CellKind::Strategy(s, p) => (s.name().to_string(), Some(*p)),
        };
        let fallback_id = instance_id(&cfg.instances[*idx]);
        let ctx = match &contexts[*idx] {
            Ok(ctx) => ctx,
            Err(msg) => {
                return SummaryRow {
                    instance_id: fallback_id,
                    n: None,
                    strategy: strategy_name,
                    p,
                    shots: cfg.shots,
                    seed: cfg.seed,
                    metrics: Err(msg.clone()),
                }
            }
        };
        let started = Instant::now();
        let outcome = match kind {
            CellKind::Baseline => {
                let sample_seed = derive_seed(cfg.seed, &format!("sample/{}/random", ctx.id));
                execute_baseline(ctx, cfg, sample_seed).map(|r| (r, sample_seed))
            }
            CellKind::Strategy(strategy, p) => {
                let opt_seed =
                    derive_seed(cfg.seed, &format!("opt/{}/{}/p{}", ctx.id, strategy.name(), p));
                let sample_seed = derive_seed(
                    cfg.seed,
                    &format!("sample/{}/{}/p{}", ctx.id, strategy.name(), p),
                );
                execute_cell(ctx, *strategy, *p, cfg, opt_seed, sample_seed)
                    .map(|r| (r, sample_seed))
            }
        };
        let metrics = match outcome {
            Ok(((output, hist), sample_seed)) => {
                let wall = started.elapsed().as_secs_f64();
                match write_cell_outputs(
                    &cfg.out_dir,
                    ctx,
                    &strategy_name,
                    p,
                    cfg.seed,
                    cfg.shots,
                    sample_seed,
                    &output,
                    &hist,
                    wall,
                ) {
                    Ok(()) => Ok((
                        output.success_rate,
                        output.expectation,
                        ctx.spectrum.min_energy,
                    )),
                    Err(e) => Err(format!("{e:#}")),
                }
            }
            Err(e) => Err(e.to_string()),
        };
        SummaryRow {
            instance_id: ctx.id.clone(),
            n: Some(ctx.model.n_sites()),
            strategy: strategy_name,
            p,
            shots: cfg.shots,
            seed: cfg.seed,
            metrics,
        }
    };

    let rows: Vec<SummaryRow> = match cfg.workers {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .context("building worker pool")?;
            pool.install(|| cells.par_iter().map(run_one).collect())
        }
        None => cells.par_iter().map(run_one).collect(),
    };

    write_summary_csv(&cfg.out_dir.join("summary.csv"), &rows)?;

    for row in &rows {
        match &row.metrics {
            Ok((rate, _, _)) => println!(
                "{} {} p={} success_rate={rate}",
                row.instance_id,
                row.strategy,
                row.p.map_or("-".to_string(), |p| p.to_string()),
            ),
            Err(msg) => println!(
                "{} {} p={} FAILED: {msg}",
                row.instance_id,
                row.strategy,
                row.p.map_or("-".to_string(), |p| p.to_string()),
            ),
        }
    }
    Ok(())
}
