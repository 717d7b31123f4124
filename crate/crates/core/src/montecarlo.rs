//! Trajectory simulation on large boxes: observables, batch-means error
//! bars, the plus/minus phase scan, the period-two run for antiferromagnetic
//! kernels, the monotone coupling and occupation counts on small boxes.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::dynamics::{log_cosh, TransitionContext};
use crate::error::{Error, Result};
use crate::exact::{Distribution, MAX_EXACT_SITES};
use crate::model::{BoundaryCondition, CouplingKernel, LatticeBox, PcaParams, Spin, SpinConfig};
use crate::rng::{CounterRng, UniformSource};

/// `(1/|Λ|) Σ σ_i`.
pub fn magnetization(config: &SpinConfig) -> f64 {
    let total: i64 = config.spins().iter().map(|s| s.value() as i64).sum();
    total as f64 / config.len() as f64
}

/// Energy per site `(1/|Λ|) Σ_{i∈Λ} [−βhσ_i − log cosh(β m_i)]`, the part of
/// the Hamiltonian carried by the sites of the box.
pub fn energy(config: &SpinConfig, ctx: &TransitionContext) -> f64 {
    let p = ctx.params();
    let total: f64 = ctx
        .fields(config)
        .iter()
        .zip(config.spins())
        .map(|(&m, s)| -p.beta * p.h * s.as_f64() - log_cosh(p.beta * m))
        .sum();
    total / config.len() as f64
}

/// Mean and batch-means standard error over `batches` equal batches; a
/// remainder that does not fill a batch is dropped from the error estimate.
pub fn batch_means(samples: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || samples.len() < batches {
        return Err(Error::InvalidParameter(format!(
            "{} samples cannot form {batches} batches",
            samples.len()
        )));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let size = samples.len() / batches;
    let means: Vec<f64> = samples[..size * batches]
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((mean, (var / batches as f64).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSettings {
    /// Recorded sweeps after burn-in.
    pub steps: u64,
    pub burnin: u64,
    /// Keep every `thin`-th recorded sweep.
    pub thin: u64,
    pub batches: usize,
    /// Sites per parallel work unit.
    pub chunk: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            steps: 1000,
            burnin: 1000,
            thin: 1,
            batches: 20,
            chunk: 1024,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub magnetization: Vec<f64>,
    pub energy: Vec<f64>,
    pub last: SpinConfig,
}

/// A reproducible chain: the uniforms of step `t` at site `i` are fixed by
/// `(seed, chain, t, i)`.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub ctx: TransitionContext,
    pub seed: u64,
    pub chain: u64,
    pub settings: RunSettings,
}

impl ChainRun {
    pub fn new(ctx: TransitionContext, seed: u64, chain: u64, settings: RunSettings) -> Self {
        ChainRun {
            ctx,
            seed,
            chain,
            settings,
        }
    }

    pub fn source(&self) -> CounterRng {
        CounterRng::with_chain(self.seed, self.chain)
    }

    pub fn run(&self, start: SpinConfig) -> Trajectory {
        let source = self.source();
        let s = self.settings;
        let mut state = start;
        let mut out = Trajectory {
            magnetization: Vec::with_capacity((s.steps / s.thin.max(1)) as usize),
            energy: Vec::new(),
            last: state.clone(),
        };
        for t in 0..s.burnin + s.steps {
            state = self.ctx.step_sample_parallel(&state, t, &source, s.chunk);
            if t >= s.burnin && (t - s.burnin + 1) % s.thin.max(1) == 0 {
                out.magnetization.push(magnetization(&state));
                out.energy.push(energy(&state, &self.ctx));
            }
        }
        out.last = state;
        out
    }
}

/// One estimate with its provenance; serialized as a CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub beta: f64,
    pub h: f64,
    pub kernel: String,
    pub bc: String,
    pub lattice: String,
    pub steps: u64,
    pub burnin: u64,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub wall_clock: Duration,
}

pub const RECORD_HEADER: [&str; 10] = [
    "beta", "h", "kernel", "bc", "lattice", "steps", "burnin", "seed", "estimate", "stderr",
];

impl ExperimentRecord {
    pub fn csv_fields(&self) -> [String; 10] {
        [
            self.beta.to_string(),
            self.h.to_string(),
            self.kernel.clone(),
            self.bc.clone(),
            self.lattice.clone(),
            self.steps.to_string(),
            self.burnin.to_string(),
            self.seed.to_string(),
            format!("{:.12}", self.estimate),
            format!("{:.12}", self.stderr),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    Magnetization,
    Energy,
}

impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnetization" => Ok(Observable::Magnetization),
            "energy" => Ok(Observable::Energy),
            other => Err(Error::Config(format!("unknown observable '{other}'"))),
        }
    }
}

/// Runs one chain and summarizes `observable`.
pub fn simulate(run: &ChainRun, start: SpinConfig, observable: Observable) -> Result<ExperimentRecord> {
    let clock = Instant::now();
    let traj = run.run(start);
    let samples = match observable {
        Observable::Magnetization => &traj.magnetization,
        Observable::Energy => &traj.energy,
    };
    let (estimate, stderr) = batch_means(samples, run.settings.batches)?;
    let p = run.ctx.params();
    Ok(ExperimentRecord {
        beta: p.beta,
        h: p.h,
        kernel: p.kernel.describe(),
        bc: run.ctx.bc().describe(),
        lattice: run.ctx.region().describe(),
        steps: run.settings.steps,
        burnin: run.settings.burnin,
        seed: run.seed,
        estimate,
        stderr,
        samples: samples.len(),
        wall_clock: clock.elapsed(),
    })
}

/// Mean magnetization under plus and minus boundaries for each `β`, two
/// records per `β` in the order given. The plus chain starts from all `+1`,
/// the minus chain from all `−1`; chain `2n` and `2n + 1` draw from
/// independent streams of `seed`.
pub fn phase_scan(
    betas: &[f64],
    region: &LatticeBox,
    kernel: &CouplingKernel,
    settings: RunSettings,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    if region.dim() != 2 {
        return Err(Error::NotTwoDimensional(region.dim()));
    }
    let jobs: Vec<(u64, f64, BoundaryCondition, Spin)> = betas
        .iter()
        .enumerate()
        .flat_map(|(n, &beta)| {
            [
                (2 * n as u64, beta, BoundaryCondition::plus(), Spin::Up),
                (2 * n as u64 + 1, beta, BoundaryCondition::minus(), Spin::Down),
            ]
        })
        .collect();
    jobs.into_par_iter()
        .map(|(chain, beta, bc, start)| {
            let params = PcaParams::new(beta, 0.0, kernel.clone())?;
            let ctx = TransitionContext::new(params, region.clone(), bc)?;
            let run = ChainRun::new(ctx, seed, chain, settings);
            simulate(
                &run,
                SpinConfig::uniform(region.clone(), start),
                Observable::Magnetization,
            )
        })
        .collect()
}

/// Magnetization path of the plus-boundary chain started from all `+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonstationarityRecord {
    pub beta: f64,
    pub lattice: String,
    pub seed: u64,
    /// `m_0 = 1, m_1, …, m_steps`.
    pub magnetization: Vec<f64>,
}

impl NonstationarityRecord {
    /// First `t < steps` at which `|m_t| < threshold`, `|m_{t+1}| < threshold`
    /// or `m_t m_{t+1} ≥ 0`, if any.
    pub fn first_alternation_failure(&self, threshold: f64) -> Option<usize> {
        self.magnetization
            .windows(2)
            .position(|w| w[0].abs() < threshold || w[1].abs() < threshold || w[0] * w[1] >= 0.0)
    }

    pub fn alternates(&self, threshold: f64) -> bool {
        self.first_alternation_failure(threshold).is_none()
    }
}

/// Checks `k(e1) < 0`, `k(e2) < 0`, `k(0) ≤ 0` and runs `steps` sweeps.
pub fn nonstationarity_run(
    kernel: &CouplingKernel,
    beta: f64,
    region: &LatticeBox,
    steps: u64,
    seed: u64,
    chunk: usize,
) -> Result<NonstationarityRecord> {
    if kernel.dim() != 2 {
        return Err(Error::NotTwoDimensional(kernel.dim()));
    }
    let (k0, k1, k2) = kernel.nearest_neighbor_weights().ok_or(Error::NotNearestNeighbor)?;
    if !(k1 < 0.0 && k2 < 0.0 && k0 <= 0.0) {
        return Err(Error::SignCondition(format!(
            "needs k(e1) < 0, k(e2) < 0 and k(0) <= 0, got ({k0}, {k1}, {k2})"
        )));
    }
    let ctx = TransitionContext::new(
        PcaParams::new(beta, 0.0, kernel.clone())?,
        region.clone(),
        BoundaryCondition::plus(),
    )?;
    let source = CounterRng::new(seed);
    let mut state = SpinConfig::uniform(region.clone(), Spin::Up);
    let mut path = vec![magnetization(&state)];
    for t in 0..steps {
        state = ctx.step_sample_parallel(&state, t, &source, chunk);
        path.push(magnetization(&state));
    }
    Ok(NonstationarityRecord {
        beta,
        lattice: region.describe(),
        seed,
        magnetization: path,
    })
}

/// Which way a sign-definite kernel moves the pointwise order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    /// All `k ≥ 0`: `σ ≤ σ'` implies `next σ ≤ next σ'`.
    Increasing,
    /// All `k ≤ 0`: `σ ≤ σ'` implies `next σ ≥ next σ'`.
    Decreasing,
}

pub fn monotonicity(kernel: &CouplingKernel) -> Result<Monotonicity> {
    if kernel.is_nonnegative() {
        Ok(Monotonicity::Increasing)
    } else if kernel.is_nonpositive() {
        Ok(Monotonicity::Decreasing)
    } else {
        Err(Error::MixedSignKernel)
    }
}

/// Advances both chains with the same uniforms at address `(step, i)`.
pub fn coupled_step(
    ctx: &TransitionContext,
    pair: (&SpinConfig, &SpinConfig),
    step: u64,
    source: &dyn UniformSource,
) -> Result<(SpinConfig, SpinConfig)> {
    monotonicity(&ctx.params().kernel)?;
    if pair.0.region() != ctx.region() || pair.1.region() != ctx.region() {
        return Err(Error::Geometry(
            "coupled configurations must live on the context box".into(),
        ));
    }
    Ok((
        ctx.step_sample(pair.0, step, source),
        ctx.step_sample(pair.1, step, source),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledReport {
    pub monotonicity: Monotonicity,
    pub steps: u64,
    /// Steps whose outcome broke the expected pointwise order.
    pub violations: Vec<u64>,
    /// Sites where the two chains differ, after each step.
    pub disagreement: Vec<usize>,
    pub last: (SpinConfig, SpinConfig),
}

/// Runs the coupling from `lower ≤ upper` and checks the pointwise order
/// after every step: kept for increasing kernels, reversed at each step for
/// decreasing ones.
pub fn coupled_run(
    ctx: &TransitionContext,
    lower: SpinConfig,
    upper: SpinConfig,
    steps: u64,
    seed: u64,
) -> Result<CoupledReport> {
    let mono = monotonicity(&ctx.params().kernel)?;
    if !lower.le(&upper) {
        return Err(Error::InvalidParameter(
            "the coupling must start from ordered configurations".into(),
        ));
    }
    let source = CounterRng::new(seed);
    let (mut a, mut b) = (lower, upper);
    let mut violations = Vec::new();
    let mut disagreement = Vec::with_capacity(steps as usize);
    for t in 0..steps {
        let (na, nb) = coupled_step(ctx, (&a, &b), t, &source)?;
        let ok = match mono {
            Monotonicity::Increasing => na.le(&nb),
            Monotonicity::Decreasing => nb.le(&na),
        };
        if !ok {
            violations.push(t);
        }
        disagreement.push(na.spins().iter().zip(nb.spins()).filter(|(x, y)| x != y).count());
        (a, b) = match mono {
            Monotonicity::Increasing => (na, nb),
            // keep the smaller configuration first
            Monotonicity::Decreasing => (nb, na),
        };
    }
    Ok(CoupledReport {
        monotonicity: mono,
        steps,
        violations,
        disagreement,
        last: (a, b),
    })
}

/// Visit counts of every configuration index over `steps` sweeps from `start`.
pub fn occupation_counts(ctx: &TransitionContext, start: SpinConfig, steps: u64, seed: u64) -> Result<Vec<u64>> {
    let n = ctx.region().len();
    if n > MAX_EXACT_SITES {
        return Err(Error::ExactCeiling {
            sites: n,
            ceiling: MAX_EXACT_SITES,
        });
    }
    let source = CounterRng::new(seed);
    let mut counts = vec![0u64; 1 << n];
    let mut state = start;
    for t in 0..steps {
        state = ctx.step_sample(&state, t, &source);
        counts[state.index() as usize] += 1;
    }
    Ok(counts)
}

/// Largest `|f̂ − p| / sqrt(p(1 − p)/n)` over all states.
pub fn max_multinomial_z(counts: &[u64], exact: &Distribution) -> f64 {
    let n = counts.iter().sum::<u64>() as f64;
    counts
        .iter()
        .zip(exact.probs())
        .map(|(&c, &p)| (c as f64 / n - p).abs() / (p * (1.0 - p) / n).sqrt())
        .fold(0.0, f64::max)
}
