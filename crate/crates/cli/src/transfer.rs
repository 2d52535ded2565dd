//! Parameter-transfer runs: optimize on a source instance, carry the result
//! to a target instance, and report both success rates side by side.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use crystal_qaoa::seed::derive_seed;
use crystal_qaoa::{
    expectation, run_circuit, sample, success_rate, transfer, TransferSource,
};

use crate::config::{ExperimentConfig, Strategy};
use crate::experiment::{
    atomic_write, build_schedule, prepare_instance, write_cell_outputs, CellOutput,
    InstanceContext,
};

pub struct TransferJob {
    pub source: PathBuf,
    pub target: PathBuf,
    pub strategy: Strategy,
    pub depths: Vec<usize>,
    pub cfg: ExperimentConfig,
}

struct SideOutcome {
    success_rate: f64,
    expectation: f64,
}

/// Sample one side (source-self or target) with a given schedule and write
/// its artifacts under `strategy_name`.
#[allow(clippy::too_many_arguments)]
fn run_side(
    ctx: &InstanceContext,
    schedule: &crystal_qaoa::AngleSchedule,
    strategy_name: &str,
    p: usize,
    cfg: &ExperimentConfig,
    sample_seed: u64,
    optimizer: Option<&crystal_qaoa::OptimizationResult>,
    ramp_params: Option<crystal_qaoa::LinearRampParams>,
) -> Result<SideOutcome> {
    let started = std::time::Instant::now();
    let state = run_circuit(&ctx.diag, schedule)?;
    let f = expectation(&state, &ctx.diag)?;
    let hist = sample(&state, cfg.shots, sample_seed)?;
    let rate = success_rate(&hist, &ctx.model, &ctx.spectrum)?;
    let output = CellOutput {
        schedule: Some(schedule.clone()),
        ramp_params,
        optimizer: optimizer.cloned(),
        success_rate: rate,
        expectation: f + ctx.model.offset(),
    };
    write_cell_outputs(
        &cfg.out_dir,
        ctx,
        strategy_name,
        Some(p),
        cfg.seed,
        cfg.shots,
        sample_seed,
        &output,
        &hist,
        started.elapsed().as_secs_f64(),
    )?;
    Ok(SideOutcome {
        success_rate: rate,
        expectation: output.expectation,
    })
}

fn sanitize(msg: &str) -> String {
    msg.replace(['\n', '\r'], " ").replace(',', ";")
}

pub fn cmd_transfer(job: &TransferJob) -> Result<()> {
    if job.strategy == Strategy::Fixed {
        bail!("transfer needs an optimizing strategy (full-opt, linear-ramp or gamma-only); fixed angles are instance-independent already");
    }
    if job.depths.is_empty() || job.depths.contains(&0) {
        bail!("depths must be a nonempty list of p >= 1");
    }
    std::fs::create_dir_all(&job.cfg.out_dir)
        .with_context(|| format!("creating {}", job.cfg.out_dir.display()))?;

    let src = prepare_instance(&job.source, job.cfg.max_qubits)
        .with_context(|| format!("preparing source {}", job.source.display()))?;
    let tgt = prepare_instance(&job.target, job.cfg.max_qubits)
        .with_context(|| format!("preparing target {}", job.target.display()))?;
    let strategy_name = job.strategy.name();

    let mut lines = vec![
        "source,target,strategy,p,shots,seed,source_n,target_n,source_success_rate,target_success_rate,target_expectation,target_min_energy,status".to_string(),
    ];
    for &p in &job.depths {
        let row_prefix = format!(
            "{},{},{},{},{},{},{},{}",
            src.id,
            tgt.id,
            strategy_name,
            p,
            job.cfg.shots,
            job.cfg.seed,
            src.model.n_sites(),
            tgt.model.n_sites()
        );
        match run_depth(&src, &tgt, job, p) {
            Ok((source_side, target_side)) => {
                println!(
                    "{} -> {} {} p={p}: source {} target {}",
                    src.id, tgt.id, strategy_name, source_side.success_rate,
                    target_side.success_rate
                );
                lines.push(format!(
                    "{row_prefix},{},{},{},{},ok",
                    source_side.success_rate,
                    target_side.success_rate,
                    target_side.expectation,
                    tgt.spectrum.min_energy
                ));
            }
            Err(e) => {
                println!("{} -> {} {} p={p}: FAILED: {e:#}", src.id, tgt.id, strategy_name);
                lines.push(format!("{row_prefix},,,,,failed: {}", sanitize(&format!("{e:#}"))));
            }
        }
    }
    let mut text = lines.join("\n");
    text.push('\n');
    atomic_write(&job.cfg.out_dir.join("summary.csv"), text.as_bytes())?;
    Ok(())
}

fn run_depth(
    src: &InstanceContext,
    tgt: &InstanceContext,
    job: &TransferJob,
    p: usize,
) -> Result<(SideOutcome, SideOutcome)> {
    let cfg = &job.cfg;
    let strategy_name = job.strategy.name();
    let opt_seed = derive_seed(cfg.seed, &format!("opt/{}/{}/p{p}", src.id, strategy_name));
    let (src_schedule, optimizer, ramp_params) =
        build_schedule(src, job.strategy, p, cfg, opt_seed)?;

    let src_sample_seed = derive_seed(
        cfg.seed,
        &format!("sample/{}/self-{}/p{p}", src.id, strategy_name),
    );
    let source_side = run_side(
        src,
        &src_schedule,
        &format!("self-{strategy_name}"),
        p,
        cfg,
        src_sample_seed,
        optimizer.as_ref(),
        ramp_params,
    )?;

    // Ramp-parameterized strategies re-expand on the target's scaling; raw
    // schedules carry over verbatim.
    let source_obj = match ramp_params {
        Some(params) => TransferSource::RampParams(params),
        None => TransferSource::Schedule(src_schedule),
    };
    let tgt_schedule = transfer(&source_obj, &tgt.model, p)?;
    let tgt_sample_seed = derive_seed(
        cfg.seed,
        &format!(
            "sample/{}/transfer-{}-from-{}/p{p}",
            tgt.id, strategy_name, src.id
        ),
    );
    let target_side = run_side(
        tgt,
        &tgt_schedule,
        &format!("transfer-{strategy_name}-from-{}", src.id),
        p,
        cfg,
        tgt_sample_seed,
        None,
        None,
    )?;
    Ok((source_side, target_side))
}
