use std::fs;
use std::io::Write;

use anyhow::{anyhow, bail, Context, Result};
use pcalab_core::contours::{analyze, contour_weight, peierls_bound, peierls_threshold, PeierlsOutcome};
use pcalab_core::dynamics::TransitionContext;
use pcalab_core::exact::MAX_MATRIX_SITES;
use pcalab_core::grid::{format_grid, parse_grid};
use pcalab_core::model::{Spin, SpinConfig};
use pcalab_core::montecarlo::{
    coupled_run, nonstationarity_run, phase_scan, simulate, ChainRun, ExperimentRecord, Observable, RECORD_HEADER,
};
use pcalab_core::rng::{CounterRng, UniformSource};
use pcalab_core::verify::{default_suite, instance_suite, CheckFamily, CheckResult, Instance};

use crate::config::{ConfigError, ModelConfig};
use crate::output::{sig12, CheckFailure, Report};
use crate::{Cli, Command};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(ConfigError(msg.into()))
}

/// Core errors raised while reading the model are configuration errors.
fn model<T>(r: pcalab_core::error::Result<T>) -> Result<T> {
    r.map_err(|e| usage(e.to_string()))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::ExactVerify { .. } => "exact-verify",
        Command::PeierlsBound { .. } => "peierls-bound",
        Command::Simulate { .. } => "simulate",
        Command::PhaseScan { .. } => "phase-scan",
        Command::Nonstat { .. } => "nonstat",
        Command::Couple { .. } => "couple",
        Command::ContourAnalyze { .. } => "contour-analyze",
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => ModelConfig::load(path)?,
        None => ModelConfig::default(),
    };
    cfg.apply_overrides(&g.overrides)?;
    if let Some(n) = g.workers {
        if n == 0 {
            return Err(usage("--workers must be positive"));
        }
        // a second call fails harmlessly when the pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let mut report = Report::new();
    report.meta("command", command_name(&cli.command));
    report.meta(
        "config",
        g.config
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "none".into()),
    );
    report.meta("overrides", g.overrides.join(" "));
    for (k, v) in cfg.entries() {
        report.meta(k, v);
    }
    report.meta("seed", g.seed);
    report.meta("workers", rayon::current_num_threads());

    let outcome = match &cli.command {
        Command::ExactVerify { checks } => exact_verify(cli, &cfg, checks, &mut report),
        Command::PeierlsBound { target, tol } => peierls(&cfg, *target, *tol, &mut report),
        Command::Simulate {
            observable,
            start,
            snapshot,
        } => simulate_cmd(&cfg, g.seed, observable, start, snapshot.as_deref(), &mut report),
        Command::PhaseScan { betas } => phase_scan_cmd(&cfg, g.seed, betas, &mut report),
        Command::Nonstat { steps, threshold } => nonstat(&cfg, g.seed, *steps, *threshold, &mut report),
        Command::Couple { steps } => couple(&cfg, g.seed, *steps, &mut report),
        Command::ContourAnalyze { grid } => contour_analyze(&cfg, grid, &mut report),
    };
    // the report is written even when a check fails
    match outcome {
        Ok(()) => report.finish(g.output.as_deref()),
        Err(e) if e.downcast_ref::<CheckFailure>().is_some() => {
            report.finish(g.output.as_deref())?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn instance(cfg: &ModelConfig) -> Result<Instance> {
    Ok(Instance::new(cfg.region()?, cfg.boundary()?, cfg.params()?))
}

fn exact_verify(cli: &Cli, cfg: &ModelConfig, checks: &[String], report: &mut Report) -> Result<()> {
    let families: Vec<CheckFamily> = if checks.is_empty() {
        CheckFamily::ALL.to_vec()
    } else {
        checks.iter().map(|c| model(c.parse())).collect::<Result<_>>()?
    };
    let configured = cli.global.config.is_some() || !cli.global.overrides.is_empty();
    let rows: Vec<CheckResult> = if configured {
        let inst = instance(cfg)?;
        if inst.region.len() > MAX_MATRIX_SITES {
            return Err(usage(format!(
                "exact ceiling: a {} box has {} sites, the exact engine accepts at most {MAX_MATRIX_SITES}",
                inst.region.describe(),
                inst.region.len()
            )));
        }
        report.meta("suite", "configured");
        let (rows, skipped) = instance_suite(&inst, &families, cli.global.seed)?;
        for (family, why) in skipped {
            eprintln!("skipped {family}: {why}");
            report.meta(&format!("skipped.{family}"), why);
        }
        rows
    } else {
        report.meta("suite", "default");
        let mut rows = Vec::new();
        for f in &families {
            rows.extend(default_suite(*f, cli.global.seed)?);
        }
        rows
    };

    let mut w = report.csv();
    w.write_record(["family", "check", "instance", "residual", "tolerance", "pass"])?;
    for r in &rows {
        w.write_record([
            r.family.name().to_string(),
            r.name.clone(),
            r.instance.clone(),
            format!("{:e}", r.residual),
            format!("{:e}", r.tolerance),
            r.passed().to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);

    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{}/{} on {} (residual {:e})", r.family, r.name, r.instance, r.residual))
        .collect();
    if failed.is_empty() {
        eprintln!("{} checks passed", rows.len());
        Ok(())
    } else {
        for f in &failed {
            eprintln!("FAILED {f}");
        }
        Err(anyhow!(CheckFailure(failed.join("; "))))
    }
}

fn peierls(cfg: &ModelConfig, target: f64, tol: f64, report: &mut Report) -> Result<()> {
    let params = cfg.params()?;
    let r = model(peierls_bound(params.beta, &params.kernel))?;
    let out = report.body();
    writeln!(out, "A={}", sig12(r.a))?;
    writeln!(out, "B={}", sig12(r.b))?;
    writeln!(out, "r={}", sig12(r.ratio))?;
    match r.outcome {
        PeierlsOutcome::Bound(v) => writeln!(out, "bound={}", sig12(v))?,
        PeierlsOutcome::NonContractive => writeln!(out, "flag=non-contractive")?,
        PeierlsOutcome::Divergent => writeln!(out, "flag=divergent")?,
    }
    match model(peierls_threshold(&params.kernel, target, tol))? {
        Some(beta) => writeln!(out, "beta_threshold={}", sig12(beta))?,
        None => writeln!(out, "beta_threshold=none")?,
    }
    Ok(())
}

fn start_config(cfg: &ModelConfig, start: &str, seed: u64) -> Result<SpinConfig> {
    let region = cfg.region()?;
    match start {
        "plus" => Ok(SpinConfig::uniform(region, Spin::Up)),
        "minus" => Ok(SpinConfig::uniform(region, Spin::Down)),
        "random" => {
            // a stream no chain step uses
            let source = CounterRng::with_chain(seed, u64::MAX);
            let mut u = vec![0.0; region.len()];
            source.fill(u64::MAX, 0, &mut u);
            Ok(SpinConfig::from_fn(region.clone(), |s| {
                Spin::from_bit(u[region.index_of(s).expect("box site")] < 0.5)
            }))
        }
        other => Err(usage(format!(
            "unknown start '{other}', expected plus, minus or random"
        ))),
    }
}

fn write_records(report: &mut Report, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = report.csv();
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

fn simulate_cmd(
    cfg: &ModelConfig,
    seed: u64,
    observable: &str,
    start: &str,
    snapshot: Option<&std::path::Path>,
    report: &mut Report,
) -> Result<()> {
    let observable: Observable = model(observable.parse())?;
    let ctx = model(TransitionContext::new(cfg.params()?, cfg.region()?, cfg.boundary()?))?;
    let run = ChainRun::new(ctx, seed, 0, cfg.run_settings()?);
    report.meta("observable", format!("{observable:?}").to_lowercase());
    report.meta("start", start);
    let record = model(simulate(&run, start_config(cfg, start, seed)?, observable))?;
    if let Some(path) = snapshot {
        let last = run.run(start_config(cfg, start, seed)?).last;
        let grid = model(format_grid(&last))?;
        fs::write(path, grid).with_context(|| format!("cannot write {}", path.display()))?;
    }
    write_records(report, &[record])
}

fn phase_scan_cmd(cfg: &ModelConfig, seed: u64, betas: &[f64], report: &mut Report) -> Result<()> {
    let params = cfg.params()?;
    if params.h != 0.0 {
        bail!(ConfigError("phase-scan runs at h = 0".into()));
    }
    report.meta(
        "betas",
        betas.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(","),
    );
    let records = model(phase_scan(
        betas,
        &cfg.region()?,
        &params.kernel,
        cfg.run_settings()?,
        seed,
    ))?;
    write_records(report, &records)
}

fn nonstat(cfg: &ModelConfig, seed: u64, steps: u64, threshold: f64, report: &mut Report) -> Result<()> {
    let params = cfg.params()?;
    let chunk = cfg.run_settings()?.chunk;
    let rec = model(nonstationarity_run(
        &params.kernel,
        params.beta,
        &cfg.region()?,
        steps,
        seed,
        chunk,
    ))?;
    let failure = rec.first_alternation_failure(threshold);
    report.meta("threshold", threshold);
    report.meta("alternation", if failure.is_none() { "pass" } else { "fail" });
    let mut w = report.csv();
    w.write_record(["t", "magnetization"])?;
    for (t, m) in rec.magnetization.iter().enumerate() {
        w.write_record([t.to_string(), format!("{m:.12}")])?;
    }
    w.flush()?;
    drop(w);
    match failure {
        None => {
            eprintln!("alternation held for {steps} steps");
            Ok(())
        }
        Some(t) => Err(anyhow!(CheckFailure(format!(
            "alternation with |m| >= {threshold} broke at t = {t}"
        )))),
    }
}

fn couple(cfg: &ModelConfig, seed: u64, steps: u64, report: &mut Report) -> Result<()> {
    let region = cfg.region()?;
    let ctx = model(TransitionContext::new(cfg.params()?, region.clone(), cfg.boundary()?))?;
    let rep = model(coupled_run(
        &ctx,
        SpinConfig::uniform(region.clone(), Spin::Down),
        SpinConfig::uniform(region, Spin::Up),
        steps,
        seed,
    ))?;
    report.meta("monotonicity", format!("{:?}", rep.monotonicity).to_lowercase());
    let mut w = report.csv();
    w.write_record(["step", "disagreement", "ordered"])?;
    for (t, d) in rep.disagreement.iter().enumerate() {
        let ordered = !rep.violations.contains(&(t as u64));
        w.write_record([t.to_string(), d.to_string(), ordered.to_string()])?;
    }
    w.flush()?;
    drop(w);
    if rep.violations.is_empty() {
        eprintln!("pointwise order held at all {steps} steps");
        Ok(())
    } else {
        Err(anyhow!(CheckFailure(format!(
            "pointwise order broken at {} steps, first at step {}",
            rep.violations.len(),
            rep.violations[0]
        ))))
    }
}

fn contour_analyze(cfg: &ModelConfig, grid: &std::path::Path, report: &mut Report) -> Result<()> {
    let text = fs::read_to_string(grid).map_err(|e| usage(format!("cannot read grid {}: {e}", grid.display())))?;
    let config = model(parse_grid(&text)).with_context(|| format!("in grid {}", grid.display()))?;
    let params = cfg.params()?;
    report.meta("grid", grid.display());
    let classes = model(analyze(&config))?;
    let mut w = report.csv();
    w.write_record(["class_id", "length", "boundary_plus", "boundary_minus", "weight_F"])?;
    for (n, c) in classes.iter().enumerate() {
        w.write_record([
            n.to_string(),
            c.length().to_string(),
            c.boundary_plus().len().to_string(),
            c.boundary_minus().len().to_string(),
            sig12(contour_weight(c, &config, &params)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
