//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pcalab_core::contours::{
    contour_count_bound, enumerate_contours_around_origin, peierls_bound, peierls_constants, peierls_threshold,
    PeierlsOutcome,
};
use pcalab_core::dynamics::TransitionContext;
use pcalab_core::error::Result;
use pcalab_core::exact::{build_matrix, stationary_distribution};
use pcalab_core::model::{BoundaryCondition, CouplingKernel, LatticeBox, PcaParams, Spin, SpinConfig};
use pcalab_core::montecarlo::{
    coupled_run, max_multinomial_z, nonstationarity_run, occupation_counts, phase_scan, RunSettings,
};
use pcalab_core::verify::{
    check_detailed_balance, check_gibbs_routes, check_periodic_identity, check_stationarity, default_suite,
    randomized_instances, torus_instances, CheckFamily, CheckResult, Expect,
};

const SEED: u64 = 42;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

/// Summarizes a batch of checks by its worst row.
fn summarize(rows: &[CheckResult]) -> Outcome {
    let failed: Vec<&CheckResult> = rows.iter().filter(|r| !r.passed()).collect();
    // how close each row comes to its limit, whichever side the limit is on
    let margin = |r: &CheckResult| match r.expect {
        Expect::AtMost => r.residual / r.tolerance.max(1e-300),
        Expect::Above => r.tolerance / r.residual.max(1e-300),
    };
    let worst = rows.iter().max_by(|a, b| margin(a).total_cmp(&margin(b)));
    let mut detail = format!("{} checks", rows.len());
    if let Some(w) = worst {
        detail += &format!(", worst {} {:.3e} (tol {:.0e})", w.name, w.residual, w.tolerance);
    }
    for f in &failed {
        detail += &format!("; FAILED {} on {} with {:.3e}", f.name, f.instance, f.residual);
    }
    Outcome::new(failed.is_empty() && !rows.is_empty(), detail)
}

fn kernel(k0: f64, k1: f64, k2: f64) -> CouplingKernel {
    CouplingKernel::nearest_neighbor_2d(k0, k1, k2)
}

fn square(n: usize) -> LatticeBox {
    LatticeBox::new(&[n, n]).expect("valid box")
}

fn detailed_balance(start: Instant) -> Result<Outcome> {
    let rows = randomized_instances(SEED)
        .iter()
        .map(check_detailed_balance)
        .collect::<Result<Vec<_>>>()?;
    let mut out = summarize(&rows);
    let elapsed = start.elapsed();
    out.passed &= rows.len() == 20 && elapsed < Duration::from_secs(60);
    out.detail += &format!(", {:.2} s of 60 s", elapsed.as_secs_f64());
    Ok(out)
}

fn stationarity(_: Instant) -> Result<Outcome> {
    let mut rows = Vec::new();
    for inst in randomized_instances(SEED) {
        rows.extend(check_stationarity(&inst)?);
    }
    Ok(summarize(&rows))
}

fn periodic_identity(_: Instant) -> Result<Outcome> {
    let rows = torus_instances(SEED)
        .iter()
        .map(check_periodic_identity)
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&rows))
}

fn gibbs_routes(_: Instant) -> Result<Outcome> {
    let rows = randomized_instances(SEED)
        .iter()
        .chain(&torus_instances(SEED))
        .map(check_gibbs_routes)
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&rows))
}

fn entropy(_: Instant) -> Result<Outcome> {
    let mut rows = default_suite(CheckFamily::EntropyProduction, SEED)?;
    rows.extend(default_suite(CheckFamily::EntropyMonotonicity, SEED)?);
    let mut out = summarize(&rows);
    out.passed &= rows.len() == 20;
    Ok(out)
}

fn peierls(_: Instant) -> Result<Outcome> {
    let full = kernel(1.0, 1.0, 1.0);
    let mut notes = Vec::new();
    let mut ok = true;

    let (a, b) = peierls_constants(&full)?;
    ok &= a == 3.0 && b == 5.0;
    notes.push(format!("A={a} B={b}"));

    let c4 = enumerate_contours_around_origin(4)?;
    let c6 = enumerate_contours_around_origin(6)?;
    ok &= c4 == 1 && c6 == 4;
    notes.push(format!("c(4)={c4} c(6)={c6}"));

    let mut within = true;
    for len in (4..=12).step_by(2) {
        within &= (enumerate_contours_around_origin(len)? as f64) <= contour_count_bound(len);
    }
    ok &= within;
    notes.push(format!(
        "count bound for l<=12 {}",
        if within { "holds" } else { "violated" }
    ));

    let tol = 1e-6;
    match peierls_threshold(&full, 0.5, tol)? {
        Some(beta) => {
            let below = |b: f64| -> Result<bool> {
                Ok(matches!(peierls_bound(b, &full)?.outcome, PeierlsOutcome::Bound(v) if v < 0.5))
            };
            let bracketed = below(beta)? && !below(beta - tol)?;
            ok &= bracketed;
            notes.push(format!(
                "beta*={beta:.7} (bracket {})",
                if bracketed { "ok" } else { "wrong" }
            ));
        }
        None => {
            ok = false;
            notes.push("no threshold".into());
        }
    }

    let flag = peierls_bound(1.0, &kernel(0.0, 1.0, 1.0))?.outcome;
    ok &= flag == PeierlsOutcome::NonContractive;
    notes.push(format!("k(0)=0 gives {flag:?}"));
    Ok(Outcome::new(ok, notes.join(", ")))
}

fn phase_transition(start: Instant) -> Result<Outcome> {
    let settings = RunSettings {
        steps: 1000,
        burnin: 1000,
        ..RunSettings::default()
    };
    let records = phase_scan(&[1.0, 0.2], &square(64), &kernel(0.0, 1.0, 1.0), settings, SEED)?;
    let (cold_plus, cold_minus) = (&records[0], &records[1]);
    let mut ok = cold_plus.estimate >= 0.8 && cold_minus.estimate <= -0.8;
    for hot in &records[2..] {
        ok &= hot.estimate.abs() <= 0.1 + 3.0 * hot.stderr;
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    Ok(Outcome::new(
        ok,
        format!(
            "beta=1: m+={:.4} m-={:.4}; beta=0.2: m+={:.4}±{:.4} m-={:.4}±{:.4}; {:.1} s of 120 s",
            cold_plus.estimate,
            cold_minus.estimate,
            records[2].estimate,
            records[2].stderr,
            records[3].estimate,
            records[3].stderr,
            elapsed.as_secs_f64()
        ),
    ))
}

fn nonstationarity(_: Instant) -> Result<Outcome> {
    let rec = nonstationarity_run(&kernel(0.0, -1.0, -1.0), 2.0, &square(64), 100, SEED, 1024)?;
    let m1 = rec.magnetization[1];
    let failure = rec.first_alternation_failure(0.9);
    let ok = m1 <= -0.999 && failure.is_none() && rec.magnetization.len() == 101;
    let smallest = rec.magnetization.iter().map(|m| m.abs()).fold(f64::INFINITY, f64::min);
    Ok(Outcome::new(
        ok,
        format!("m1={m1:.5}, min |m_t|={smallest:.4}, alternation failure at {failure:?}"),
    ))
}

fn coupling(_: Instant) -> Result<Outcome> {
    let mut ok = true;
    let mut notes = Vec::new();
    let cases = [
        ("k>=0", kernel(0.4, 1.0, 0.8), BoundaryCondition::plus()),
        ("k>=0", kernel(0.4, 1.0, 0.8), BoundaryCondition::Periodic),
        ("k<=0", kernel(-0.4, -1.0, -0.8), BoundaryCondition::minus()),
        ("k<=0", kernel(-0.4, -1.0, -0.8), BoundaryCondition::Periodic),
    ];
    for (label, k, bc) in cases {
        let region = square(32);
        let ctx = TransitionContext::new(PcaParams::new(0.6, 0.1, k)?, region.clone(), bc)?;
        let rep = coupled_run(
            &ctx,
            SpinConfig::uniform(region.clone(), Spin::Down),
            SpinConfig::uniform(region, Spin::Up),
            1000,
            SEED,
        )?;
        ok &= rep.violations.is_empty() && rep.disagreement.len() == 1000;
        notes.push(format!("{label}: {} violations in 1000 steps", rep.violations.len()));
    }
    Ok(Outcome::new(ok, notes.join(", ")))
}

fn transforms(_: Instant) -> Result<Outcome> {
    Ok(summarize(&default_suite(CheckFamily::Transform, SEED)?))
}

fn ising(_: Instant) -> Result<Outcome> {
    Ok(summarize(&default_suite(CheckFamily::Ising, SEED)?))
}

fn monte_carlo_oracle(_: Instant) -> Result<Outcome> {
    let region = square(2);
    let params = PcaParams::new(0.5, 0.2, kernel(0.3, 0.4, 0.2))?;
    let ctx = TransitionContext::new(params, region.clone(), BoundaryCondition::Periodic)?;
    let exact = stationary_distribution(&build_matrix(&ctx)?)?;
    let counts = occupation_counts(&ctx, SpinConfig::uniform(region, Spin::Up), 1_000_000, SEED)?;
    let z = max_multinomial_z(&counts, &exact);
    Ok(Outcome::new(
        z <= 3.0,
        format!("max |z| = {z:.3} over 16 states, 10^6 steps"),
    ))
}

type Criterion = fn(Instant) -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 12] = [
        ("detailed balance", detailed_balance),
        ("stationarity of the closed form", stationarity),
        ("periodic stationary law equals Gibbs", periodic_identity),
        ("two Gibbs routes agree", gibbs_routes),
        ("entropy production and KL decay", entropy),
        ("Peierls machinery", peierls),
        ("phase transition on 64x64", phase_transition),
        ("period-two non-stationarity", nonstationarity),
        ("monotone coupling", coupling),
        ("spin-flip transforms", transforms),
        ("Ising correspondence", ising),
        ("Monte Carlo against exact law", monte_carlo_oracle),
    ];
    let mut failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run(start).unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failures += 1;
        }
        println!("{tag} {:>2} {name}: {}", n + 1, outcome.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
