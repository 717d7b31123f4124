//! Exhaustive verification on small boxes: probability tables over all
//! `2^|Λ|` configurations, transition matrices, stationary laws, detailed
//! balance, backward kernels, relative entropy and entropy production.
//!
//! Configurations are addressed by their canonical index (see
//! [`SpinConfig::index`]). All logarithms are natural.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::dynamics::{spin_prob, TransitionContext};
use crate::error::{Error, Result};
use crate::gibbs::gibbs_table;
use crate::model::{BoundaryCondition, LatticeBox, PcaParams, Site, Spin, SpinConfig};

/// Largest box for which probability tables are built.
pub const MAX_EXACT_SITES: usize = 20;
/// Largest box for which a dense transition matrix (`4^|Λ|` entries) is built.
pub const MAX_MATRIX_SITES: usize = 12;

const POWER_ITERATION_TOL: f64 = 1e-14;
const POWER_ITERATION_CAP: usize = 1_000_000;
const SQUARING_PERIOD: usize = 256;
const MAX_SQUARED_STATES: usize = 1 << 10;

fn check_exact(region: &LatticeBox, ceiling: usize) -> Result<()> {
    if region.len() > ceiling {
        return Err(Error::ExactCeiling {
            sites: region.len(),
            ceiling,
        });
    }
    Ok(())
}

/// A probability law on the configurations of a small box.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    region: LatticeBox,
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates non-negativity and normalization to `1e-12`.
    pub fn new(region: LatticeBox, probs: Vec<f64>) -> Result<Self> {
        check_exact(&region, MAX_EXACT_SITES)?;
        if probs.len() != 1usize << region.len() {
            return Err(Error::Geometry(format!(
                "{} probabilities for {} configurations",
                probs.len(),
                1usize << region.len()
            )));
        }
        if let Some(n) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::NotPositive(n));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        Ok(Distribution { region, probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(region: LatticeBox, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(region, weights)
    }

    pub fn uniform(region: LatticeBox) -> Result<Self> {
        check_exact(&region, MAX_EXACT_SITES)?;
        let n = 1usize << region.len();
        Self::new(region, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(region: LatticeBox, index: usize) -> Result<Self> {
        check_exact(&region, MAX_EXACT_SITES)?;
        let mut probs = vec![0.0; 1usize << region.len()];
        probs[index] = 1.0;
        Self::new(region, probs)
    }

    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// Total-variation distance `½ Σ |ν − μ|`.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Law of the configuration relabelled by `perm` (index `n ↦ perm[n]`).
    pub fn permuted(&self, perm: &[usize]) -> Distribution {
        let mut probs = vec![0.0; self.probs.len()];
        for (n, &p) in self.probs.iter().enumerate() {
            probs[perm[n]] = p;
        }
        Distribution {
            region: self.region.clone(),
            probs,
        }
    }

    /// Marginal on the sites whose linear indices are listed in `sites`;
    /// bit `b` of the result index is the spin of `sites[b]`.
    pub fn marginal(&self, sites: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << sites.len()];
        for (code, &p) in self.probs.iter().enumerate() {
            out[compress(code, sites)] += p;
        }
        out
    }

    /// CSV rows `config_index,probability` with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "config_index,probability")?;
        for (n, p) in self.probs.iter().enumerate() {
            writeln!(out, "{n},{p:.17e}")?;
        }
        Ok(())
    }
}

fn compress(code: usize, sites: &[usize]) -> usize {
    sites
        .iter()
        .enumerate()
        .fold(0, |acc, (b, &n)| acc | (((code >> n) & 1) << b))
}

/// Normalized `exp(log_weight)` over every configuration of `region`.
pub fn table_from_log_weights<F>(region: &LatticeBox, log_weight: F) -> Result<Distribution>
where
    F: Fn(&SpinConfig) -> Result<f64> + Sync,
{
    check_exact(region, MAX_EXACT_SITES)?;
    let logs: Vec<f64> = (0..1u64 << region.len())
        .into_par_iter()
        .map(|code| log_weight(&SpinConfig::from_index(region.clone(), code)))
        .collect::<Result<_>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = logs.iter().map(|l| (l - top).exp()).collect();
    Distribution::from_weights(region.clone(), weights)
}

/// Row-stochastic matrix, entry `(η, σ) = P(σ | η)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    region: LatticeBox,
    states: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(region: LatticeBox, data: Vec<f64>) -> Result<Self> {
        check_exact(&region, MAX_MATRIX_SITES)?;
        let states = 1usize << region.len();
        if data.len() != states * states {
            return Err(Error::Geometry("matrix has the wrong number of entries".into()));
        }
        Ok(TransitionMatrix { region, states, data })
    }

    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// `P(to | from)`.
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.states + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.states..(from + 1) * self.states]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.states)
            .map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `νP`, i.e. `(νP)(σ) = Σ_η ν(η) P(σ | η)`.
    pub fn push_forward(&self, nu: &Distribution) -> Distribution {
        Distribution {
            region: self.region.clone(),
            probs: self.push_forward_raw(&nu.probs),
        }
    }

    fn push_forward_raw(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.states];
        for (from, &w) in nu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(from)) {
                *o += w * p;
            }
        }
        out
    }

    /// Matrix of the chain relabelled by the index permutation `perm`.
    pub fn permuted(&self, perm: &[usize]) -> TransitionMatrix {
        let mut data = vec![0.0; self.data.len()];
        for from in 0..self.states {
            for to in 0..self.states {
                data[perm[from] * self.states + perm[to]] = self.get(from, to);
            }
        }
        TransitionMatrix {
            region: self.region.clone(),
            states: self.states,
            data,
        }
    }
}

/// Dense `P_Λ` for the context, one product of site probabilities per entry.
pub fn build_matrix(ctx: &TransitionContext) -> Result<TransitionMatrix> {
    let region = ctx.region();
    check_exact(region, MAX_MATRIX_SITES)?;
    let n = region.len();
    let states = 1usize << n;
    let beta = ctx.params().beta;
    let mut data = vec![0.0; states * states];
    data.par_chunks_mut(states).enumerate().for_each(|(from, row)| {
        let prev = SpinConfig::from_index(region.clone(), from as u64);
        let fields = ctx.fields(&prev);
        row[0] = 1.0;
        for (site, m) in fields.iter().enumerate() {
            let up = spin_prob(Spin::Up, beta * m);
            let down = spin_prob(Spin::Down, beta * m);
            let filled = 1usize << site;
            for code in 0..filled {
                row[code | filled] = row[code] * up;
                row[code] *= down;
            }
        }
    });
    TransitionMatrix::from_rows(region.clone(), data)
}

/// Unique stationary law by power iteration on the lazy chain `½(I + P)`,
/// starting from the uniform law.
///
/// Stops when an iteration moves the iterate by at most `1e-14` in total
/// variation; fails after `10^6` iterations. A slowly mixing chain has its
/// iterated matrix squared every 256 iterations without convergence, so
/// one iteration then advances `2^j` lazy steps.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Distribution> {
    stationary_distribution_from(p, &Distribution::uniform(p.region.clone())?)
}

pub fn stationary_distribution_from(p: &TransitionMatrix, start: &Distribution) -> Result<Distribution> {
    let s = p.states;
    let mut nu = start.probs.clone();
    let mut change = f64::INFINITY;
    let mut power: Option<Vec<f64>> = None;
    for it in 0..POWER_ITERATION_CAP {
        if it > 0 && it % SQUARING_PERIOD == 0 && s <= MAX_SQUARED_STATES {
            let q = power.take().unwrap_or_else(|| lazy_matrix(p));
            power = Some(square(&q, s));
        }
        let next = match &power {
            None => {
                let pushed = p.push_forward_raw(&nu);
                nu.iter().zip(&pushed).map(|(a, b)| 0.5 * (a + b)).collect()
            }
            Some(q) => vec_mat(&nu, q, s),
        };
        change = 0.5 * nu.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>();
        nu = next;
        if change <= POWER_ITERATION_TOL {
            let total: f64 = nu.iter().sum();
            nu.iter_mut().for_each(|x| *x /= total);
            return Distribution::new(p.region.clone(), nu);
        }
    }
    Err(Error::NonConvergence {
        iterations: POWER_ITERATION_CAP,
        last_change: change,
    })
}

fn lazy_matrix(p: &TransitionMatrix) -> Vec<f64> {
    let mut q: Vec<f64> = p.data.iter().map(|x| 0.5 * x).collect();
    for i in 0..p.states {
        q[i * p.states + i] += 0.5;
    }
    q
}

fn square(q: &[f64], s: usize) -> Vec<f64> {
    let mut out = vec![0.0; s * s];
    out.par_chunks_mut(s).enumerate().for_each(|(i, row)| {
        for (k, &a) in q[i * s..(i + 1) * s].iter().enumerate() {
            if a != 0.0 {
                for (o, &b) in row.iter_mut().zip(&q[k * s..(k + 1) * s]) {
                    *o += a * b;
                }
            }
        }
        // keep the rows stochastic against rounding drift
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= total);
    });
    out
}

fn vec_mat(nu: &[f64], q: &[f64], s: usize) -> Vec<f64> {
    let mut out = vec![0.0; s];
    for (i, &w) in nu.iter().enumerate() {
        if w != 0.0 {
            for (o, &b) in out.iter_mut().zip(&q[i * s..(i + 1) * s]) {
                *o += w * b;
            }
        }
    }
    out
}

/// Largest detailed-balance violation together with the scale it is
/// measured against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetailedBalance {
    /// `max_{σ,η} |P(σ|η)ν(η) − P(η|σ)ν(σ)|`.
    pub max_abs: f64,
    /// `max_{σ,η} P(σ|η)ν(η)`.
    pub max_joint: f64,
}

impl DetailedBalance {
    pub fn relative(&self) -> f64 {
        self.max_abs / self.max_joint
    }
}

pub fn detailed_balance_residual(p: &TransitionMatrix, nu: &Distribution) -> DetailedBalance {
    let s = p.states;
    let (max_abs, max_joint) = (0..s)
        .into_par_iter()
        .map(|eta| {
            let mut worst = 0.0f64;
            let mut joint = 0.0f64;
            for sigma in 0..s {
                let forward = p.get(eta, sigma) * nu.probs[eta];
                let backward = p.get(sigma, eta) * nu.probs[sigma];
                worst = worst.max((forward - backward).abs());
                joint = joint.max(forward);
            }
            (worst, joint)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    DetailedBalance { max_abs, max_joint }
}

/// `h(ν | μ) = Σ ν log(ν/μ)` with `0 log 0 = 0`.
pub fn relative_entropy(nu: &Distribution, mu: &Distribution) -> Result<f64> {
    kl(&nu.probs, &mu.probs)
}

fn kl(nu: &[f64], mu: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (n, (&a, &b)) in nu.iter().zip(mu).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::NotAbsolutelyContinuous(n));
        }
        total += a * (a / b).ln();
    }
    // rounding can leave a tiny negative value when ν ≈ μ
    Ok(total.max(0.0))
}

/// Backward kernel `P̂_ν(η | σ) = P(σ | η) ν(η) / (Pν)(σ)`; row `σ`, column `η`.
pub fn backward_kernel(p: &TransitionMatrix, nu: &Distribution) -> Result<TransitionMatrix> {
    let s = p.states;
    let pushed = p.push_forward_raw(&nu.probs);
    if let Some(sigma) = pushed.iter().position(|&x| x <= 0.0) {
        return Err(Error::NotPositive(sigma));
    }
    let mut data = vec![0.0; s * s];
    data.par_chunks_mut(s).enumerate().for_each(|(sigma, row)| {
        for (eta, slot) in row.iter_mut().enumerate() {
            *slot = p.get(eta, sigma) * nu.probs[eta] / pushed[sigma];
        }
    });
    TransitionMatrix::from_rows(p.region.clone(), data)
}

/// Both sides of the one-step entropy balance
/// `h(ν|μ) − h(Pν|μ) = Σ_σ (Pν)(σ) · h(P̂_ν(·|σ) | P̂_μ(·|σ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyProduction {
    pub lhs: f64,
    pub rhs: f64,
}

impl EntropyProduction {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn entropy_production(nu: &Distribution, p: &TransitionMatrix, mu: &Distribution) -> Result<EntropyProduction> {
    let stationarity = p.push_forward(mu).tv_distance(mu);
    if stationarity > 1e-10 {
        return Err(Error::NotStationary(stationarity));
    }
    if let Some(n) = mu.probs.iter().position(|&x| x <= 0.0) {
        return Err(Error::NotPositive(n));
    }
    let pushed = p.push_forward(nu);
    let lhs = relative_entropy(nu, mu)? - relative_entropy(&pushed, mu)?;

    let back_nu = backward_kernel(p, nu)?;
    let back_mu = backward_kernel(p, mu)?;
    let rhs = (0..p.states)
        .into_par_iter()
        .map(|sigma| kl(back_nu.row(sigma), back_mu.row(sigma)).map(|d| pushed.probs[sigma] * d))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok(EntropyProduction { lhs, rhs })
}

/// `max_σ |p(σ) − p_e(σ_e) p_o(σ_o)|` for the even / odd sublattice split.
pub fn sublattice_factorization_defect(dist: &Distribution) -> Result<f64> {
    let region = dist.region();
    let (even, odd) = region.sublattices()?;
    let idx = |v: &[Site]| -> Vec<usize> { v.iter().map(|s| region.index_of(s).expect("box site")).collect() };
    let (even, odd) = (idx(&even), idx(&odd));
    let pe = dist.marginal(&even);
    let po = dist.marginal(&odd);
    Ok(dist
        .probs
        .iter()
        .enumerate()
        .map(|(code, &p)| (p - pe[compress(code, &even)] * po[compress(code, &odd)]).abs())
        .fold(0.0, f64::max))
}

/// Deviations measured by [`ising_correspondence_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingCorrespondence {
    /// `max_{σ_e} |π_{Λ_e} ρ(σ_e) − μ_Λ(σ_e)|`.
    pub marginal_deviation: f64,
    /// Factorization defect of the stationary law `ν_Λ`.
    pub stationary_factorization_defect: f64,
    /// Factorization defect of the Gibbs measure `μ_Λ`.
    pub gibbs_factorization_defect: f64,
}

impl IsingCorrespondence {
    pub fn max_deviation(&self) -> f64 {
        self.marginal_deviation
            .max(self.stationary_factorization_defect)
            .max(self.gibbs_factorization_defect)
    }
}

/// Compares the even-sublattice marginal of the anisotropic Ising measure
/// `ρ ∝ exp[β Σ (k(e1) σ_i σ̃_{i+e1} + k(e2) σ_i σ̃_{i+e2})]` with the even
/// marginal of the Gibbs measure for the log-cosh potential, and checks that
/// both `ν_Λ` and `μ_Λ` factorize over the sublattices (`k(0) = 0`).
///
/// With a fixed boundary, the Ising model lives on `Λ` together with the odd
/// exterior sites adjacent to `Λ` (every bond is counted through its odd
/// end); summing those odd spins out produces exactly the cosh factors of the
/// exterior odd sites in `μ_Λ^τ`. On a torus with even sides the Ising model
/// lives on `Λ` and counts each forward bond once.
///
/// Both sides are computed by brute-force enumeration.
pub fn ising_correspondence_check(
    region: &LatticeBox,
    bc: &BoundaryCondition,
    params: &PcaParams,
) -> Result<IsingCorrespondence> {
    if region.dim() != 2 {
        return Err(Error::NotTwoDimensional(region.dim()));
    }
    check_exact(region, 16)?;
    let (k0, k1, k2) = params
        .kernel
        .nearest_neighbor_weights()
        .ok_or(Error::NotNearestNeighbor)?;
    if k0 != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the Ising correspondence needs k(0) = 0, got {k0}"
        )));
    }
    let (even, _) = region.sublattices()?;
    let even_idx: Vec<usize> = even.iter().map(|s| region.index_of(s).expect("box site")).collect();

    let gibbs = gibbs_table(region, bc, params)?;
    let gibbs_marginal = gibbs.marginal(&even_idx);
    let ising_marginal = ising_even_marginal(region, bc, params.beta, k1, k2, &even)?;
    let marginal_deviation = gibbs_marginal
        .iter()
        .zip(&ising_marginal)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let ctx = TransitionContext::new(params.clone(), region.clone(), bc.clone())?;
    let stationary = crate::gibbs::stationary_table(&ctx)?;
    Ok(IsingCorrespondence {
        marginal_deviation,
        stationary_factorization_defect: sublattice_factorization_defect(&stationary)?,
        gibbs_factorization_defect: sublattice_factorization_defect(&gibbs)?,
    })
}

fn ising_even_marginal(
    region: &LatticeBox,
    bc: &BoundaryCondition,
    beta: f64,
    k1: f64,
    k2: f64,
    even: &[Site],
) -> Result<Vec<f64>> {
    let is_odd = |s: &Site| s.coord_sum().rem_euclid(2) == 1;
    let dirs: [([i64; 2], f64); 4] = [([1, 0], k1), ([-1, 0], k1), ([0, 1], k2), ([0, -1], k2)];

    // odd summation variables and, per variable, its bonds as
    // (weight, neighbour) with the neighbour either an even box site or a frozen spin
    enum End {
        Even(usize),
        Frozen(f64),
    }
    let even_pos = |s: &Site| even.iter().position(|e| e == s);
    let mut odd_vars: Vec<Site> = region.sites().filter(|s| is_odd(s)).collect();
    let bonds: Vec<Vec<(f64, End)>> = match bc {
        BoundaryCondition::Fixed(tau) => {
            let frame: Vec<Site> = region
                .padded(1)
                .sites()
                .filter(|s| !region.contains(s) && is_odd(s))
                .filter(|s| dirs.iter().any(|(d, _)| region.contains(&s.offset(d))))
                .collect();
            odd_vars.extend(frame);
            odd_vars
                .iter()
                .map(|i| {
                    dirs.iter()
                        .map(|(d, w)| {
                            let j = i.offset(d);
                            let end = match even_pos(&j) {
                                Some(b) => End::Even(b),
                                None => End::Frozen(
                                    tau.get(&j)
                                        .ok_or_else(|| Error::MissingBoundarySpin(j.clone()))?
                                        .as_f64(),
                                ),
                            };
                            Ok((*w, end))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        }
        BoundaryCondition::Periodic => {
            if region.sides().iter().any(|s| s % 2 == 1) {
                return Err(Error::Geometry(
                    "the periodic Ising correspondence needs even sides".into(),
                ));
            }
            // forward bonds i → i+e of every site, each assigned to its odd end
            let wrap = |s: &Site| region.site(region.wrap_index(s));
            let mut per_var: Vec<Vec<(f64, End)>> = odd_vars.iter().map(|_| Vec::new()).collect();
            for i in region.sites() {
                for (d, w) in [([1, 0], k1), ([0, 1], k2)] {
                    let j = wrap(&i.offset(&d));
                    let (odd, other) = if is_odd(&i) { (i.clone(), j) } else { (j, i.clone()) };
                    let v = odd_vars.iter().position(|s| *s == odd).expect("odd site");
                    per_var[v].push((w, End::Even(even_pos(&other).expect("even site"))));
                }
            }
            per_var
        }
    };

    let n_even = even.len();
    let n_odd = odd_vars.len();
    let mut log_weights = vec![0.0; 1usize << n_even];
    log_weights.par_iter_mut().enumerate().for_each(|(e_code, slot)| {
        let even_spin = |b: usize| if (e_code >> b) & 1 == 1 { 1.0 } else { -1.0 };
        let energies: Vec<f64> = (0..1usize << n_odd)
            .map(|o_code| {
                let mut energy = 0.0;
                for (v, var_bonds) in bonds.iter().enumerate() {
                    let s = if (o_code >> v) & 1 == 1 { 1.0 } else { -1.0 };
                    for (w, end) in var_bonds {
                        let other = match end {
                            End::Even(b) => even_spin(*b),
                            End::Frozen(t) => *t,
                        };
                        energy += w * s * other;
                    }
                }
                beta * energy
            })
            .collect();
        let top = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        *slot = top + energies.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
    });
    let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}
